//! DNN workloads as ordered lists of layer shapes.
//!
//! A network is described one weight layer per line in a plain-text file
//! (`name,kind,C,M,H,W,R,S,U,P`). Pooling, batch-norm, and activation layers
//! carry no MACs in this model and are omitted. Fully-connected layers are
//! stored as 1x1 convolutions so a single mapping path covers everything.
//! Batch size is fixed at 1; all throughput figures are per inference.

use crate::arch::PeProperties;
use crate::error::{Error, Result};
use crate::kv::parse_err;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    Fc,
}

impl LayerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LayerKind::Conv => "conv",
            LayerKind::Fc => "fc",
        }
    }
}

/// Shape of one convolutional or fully-connected layer.
///
/// Field roles follow the usual conv notation: `in_channels` C,
/// `out_channels` M, input map `in_h` x `in_w` (H x W), filter
/// `filter_h` x `filter_w` (R x S), `stride` U, `pad` P.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerConfig {
    pub name: String,
    pub kind: LayerKind,
    pub in_channels: u32,
    pub out_channels: u32,
    pub in_h: u32,
    pub in_w: u32,
    pub filter_h: u32,
    pub filter_w: u32,
    pub stride: u32,
    pub pad: u32,
}

impl LayerConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        kind: LayerKind,
        in_channels: u32,
        out_channels: u32,
        in_h: u32,
        in_w: u32,
        filter_h: u32,
        filter_w: u32,
        stride: u32,
        pad: u32,
    ) -> Result<Self> {
        let layer = LayerConfig {
            name: name.into(),
            kind,
            in_channels,
            out_channels,
            in_h,
            in_w,
            filter_h,
            filter_w,
            stride,
            pad,
        };
        layer.validate()?;
        Ok(layer)
    }

    fn invariant_err(&self, msg: String) -> Error {
        Error::Invariant {
            subject: format!("layer '{}'", self.name),
            msg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (value, what) in [
            (self.in_channels, "C (input channels)"),
            (self.out_channels, "M (output channels)"),
            (self.in_h, "H (input height)"),
            (self.in_w, "W (input width)"),
            (self.filter_h, "R (filter height)"),
            (self.filter_w, "S (filter width)"),
            (self.stride, "U (stride)"),
        ] {
            if value < 1 {
                return Err(self.invariant_err(format!("{what} must be >= 1, got {value}")));
            }
        }
        if self.kind == LayerKind::Fc {
            let unit = (self.in_h, self.in_w, self.filter_h, self.filter_w, self.stride, self.pad);
            if unit != (1, 1, 1, 1, 1, 0) {
                return Err(self.invariant_err(
                    "fc layers must have H = W = R = S = 1, U = 1, P = 0".to_string(),
                ));
            }
        }
        if self.out_dim(self.in_h, self.filter_h).is_none() {
            return Err(self.invariant_err(format!(
                "output height E = floor((H - R + 2P)/U) + 1 < 1 for H={}, R={}, P={}, U={}",
                self.in_h, self.filter_h, self.pad, self.stride
            )));
        }
        if self.out_dim(self.in_w, self.filter_w).is_none() {
            return Err(self.invariant_err(format!(
                "output width F = floor((W - S + 2P)/U) + 1 < 1 for W={}, S={}, P={}, U={}",
                self.in_w, self.filter_w, self.pad, self.stride
            )));
        }
        Ok(())
    }

    fn out_dim(&self, input: u32, filter: u32) -> Option<u32> {
        let span = i64::from(input) - i64::from(filter) + 2 * i64::from(self.pad);
        if span < 0 {
            return None;
        }
        Some((span / i64::from(self.stride) + 1) as u32)
    }

    /// Output height E = floor((H - R + 2P)/U) + 1.
    pub fn out_h(&self) -> u32 {
        self.out_dim(self.in_h, self.filter_h).expect("validated layer")
    }

    /// Output width F = floor((W - S + 2P)/U) + 1.
    pub fn out_w(&self) -> u32 {
        self.out_dim(self.in_w, self.filter_w).expect("validated layer")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkConfig {
    pub name: String,
    pub layers: Vec<LayerConfig>,
}

impl NetworkConfig {
    pub fn new(name: impl Into<String>, layers: Vec<LayerConfig>) -> Result<Self> {
        let name = name.into();
        if layers.is_empty() {
            return Err(Error::Invariant {
                subject: format!("network '{name}'"),
                msg: "a network must contain at least one layer".to_string(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for layer in &layers {
            if !seen.insert(layer.name.as_str()) {
                return Err(Error::Invariant {
                    subject: format!("network '{name}'"),
                    msg: format!("duplicate layer name '{}'", layer.name),
                });
            }
        }
        Ok(NetworkConfig { name, layers })
    }

    /// Sum of `layer_macs` over all layers.
    pub fn total_macs(&self) -> u64 {
        self.layers.iter().map(layer_macs).sum()
    }
}

/// Parses the `name,kind,C,M,H,W,R,S,U,P` record format. Records are kept in
/// file order; every record is checked against the layer invariants.
pub fn load_network(spec_text: &str, name: &str, source_name: &str) -> Result<NetworkConfig> {
    let mut layers = Vec::new();
    for (idx, raw) in spec_text.lines().enumerate() {
        let line_no = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let fields: Vec<&str> = stripped.split(',').map(str::trim).collect();
        if fields.len() != 10 {
            return Err(parse_err(
                source_name,
                line_no,
                format!("expected 10 comma-separated fields, got {}", fields.len()),
            ));
        }
        let kind = match fields[1] {
            "conv" => LayerKind::Conv,
            "fc" => LayerKind::Fc,
            other => {
                return Err(parse_err(
                    source_name,
                    line_no,
                    format!("unknown layer kind '{other}' (expected conv or fc)"),
                ))
            }
        };
        let mut nums = [0u32; 8];
        for (slot, text) in nums.iter_mut().zip(&fields[2..]) {
            *slot = text.parse().map_err(|_| {
                parse_err(source_name, line_no, format!("cannot parse '{text}' as a count"))
            })?;
        }
        let [c, m, h, w, r, s, u, p] = nums;
        layers.push(LayerConfig::new(fields[0], kind, c, m, h, w, r, s, u, p)?);
    }
    NetworkConfig::new(name, layers)
}

/// Inverse of `load_network`: emits the same record format the parser reads.
pub fn serialize_network(net: &NetworkConfig) -> String {
    let mut out = String::from("# name,kind,C,M,H,W,R,S,U,P\n");
    for l in &net.layers {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            l.name,
            l.kind.as_str(),
            l.in_channels,
            l.out_channels,
            l.in_h,
            l.in_w,
            l.filter_h,
            l.filter_w,
            l.stride,
            l.pad
        ));
    }
    out
}

pub const BUILTIN_NETWORKS: [&str; 3] = ["vgg16", "resnet34", "resnet50"];

/// Returns one of the built-in weight-layer tables. The tables ship in the
/// same record format the parser reads (see `data/`), so they stay
/// inspectable and overridable.
pub fn builtin_network(name: &str) -> Result<NetworkConfig> {
    let text = match name {
        "vgg16" => include_str!("../data/vgg16.net"),
        "resnet34" => include_str!("../data/resnet34.net"),
        "resnet50" => include_str!("../data/resnet50.net"),
        other => {
            return Err(Error::UnknownNetwork {
                name: other.to_string(),
            })
        }
    };
    load_network(text, name, &format!("builtin:{name}"))
}

/// Multiply-accumulate count M*C*E*F*R*S for one layer.
pub fn layer_macs(layer: &LayerConfig) -> u64 {
    u64::from(layer.out_channels)
        * u64::from(layer.in_channels)
        * u64::from(layer.out_h())
        * u64::from(layer.out_w())
        * u64::from(layer.filter_h)
        * u64::from(layer.filter_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorBytes {
    pub ifmap: u64,
    pub filter: u64,
    pub ofmap: u64,
}

pub(crate) fn bits_to_bytes(elements: u64, bits: u32) -> u64 {
    (elements * u64::from(bits)).div_ceil(8)
}

/// Tensor footprints at the PE type's precisions. Outputs are re-quantized
/// to the activation precision.
pub fn layer_tensor_bytes(layer: &LayerConfig, pe: &PeProperties) -> TensorBytes {
    let ifmap_elems =
        u64::from(layer.in_channels) * u64::from(layer.in_h) * u64::from(layer.in_w);
    let filter_elems = u64::from(layer.out_channels)
        * u64::from(layer.in_channels)
        * u64::from(layer.filter_h)
        * u64::from(layer.filter_w);
    let ofmap_elems =
        u64::from(layer.out_channels) * u64::from(layer.out_h()) * u64::from(layer.out_w());
    TensorBytes {
        ifmap: bits_to_bytes(ifmap_elems, pe.act_bits),
        filter: bits_to_bytes(filter_elems, pe.weight_bits),
        ofmap: bits_to_bytes(ofmap_elems, pe.act_bits),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{pe_type_properties, PeType};

    fn layer_5x5() -> LayerConfig {
        LayerConfig::new("l", LayerKind::Conv, 1, 1, 5, 5, 3, 3, 1, 0).unwrap()
    }

    #[test]
    fn single_record_maps_fields_directly() {
        let net = load_network("conv1,conv,3,64,224,224,3,3,1,1", "n", "inline").unwrap();
        assert_eq!(net.layers.len(), 1);
        let l = &net.layers[0];
        assert_eq!(l.in_channels, 3);
        assert_eq!(l.out_channels, 64);
        assert_eq!(l.out_h(), 224);
    }

    #[test]
    fn zero_stride_names_the_layer() {
        let err = load_network("conv1,conv,3,64,224,224,3,3,0,1", "n", "inline").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("conv1"), "{msg}");
        assert!(msg.contains("U (stride)"), "{msg}");
    }

    #[test]
    fn records_keep_file_order() {
        let net = load_network(
            "a,conv,1,1,5,5,3,3,1,0\nb,conv,1,1,5,5,3,3,1,0\n",
            "n",
            "inline",
        )
        .unwrap();
        assert_eq!(net.layers[0].name, "a");
        assert_eq!(net.layers[1].name, "b");
    }

    #[test]
    fn bad_field_count_reports_line() {
        let err = load_network("a,conv,1,1\n", "n", "inline").unwrap_err();
        assert!(err.to_string().contains("inline:1"), "{err}");
    }

    #[test]
    fn duplicate_layer_names_rejected() {
        let err = load_network(
            "a,conv,1,1,5,5,3,3,1,0\na,conv,1,1,5,5,3,3,1,0\n",
            "n",
            "inline",
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn fc_shape_invariant_enforced() {
        let err = LayerConfig::new("f", LayerKind::Fc, 10, 10, 2, 1, 1, 1, 1, 0).unwrap_err();
        assert!(err.to_string().contains("fc layers"), "{err}");
    }

    #[test]
    fn undersized_input_rejected() {
        // 2x2 input with a 3x3 filter and no padding has no valid output.
        let err = LayerConfig::new("t", LayerKind::Conv, 1, 1, 2, 2, 3, 3, 1, 0).unwrap_err();
        assert!(err.to_string().contains("output height"), "{err}");
    }

    #[test]
    fn macs_identity_case() {
        let l = LayerConfig::new("i", LayerKind::Conv, 1, 1, 1, 1, 1, 1, 1, 0).unwrap();
        assert_eq!(layer_macs(&l), 1);
    }

    #[test]
    fn macs_hand_computed_5x5() {
        // 1*1*3*3*3*3
        assert_eq!(layer_macs(&layer_5x5()), 81);
    }

    #[test]
    fn macs_hand_computed_vgg_conv1_1() {
        let l = LayerConfig::new("c", LayerKind::Conv, 3, 64, 224, 224, 3, 3, 1, 1).unwrap();
        assert_eq!(layer_macs(&l), 86_704_128); // 64*3*224*224*9
    }

    #[test]
    fn tensor_bytes_int16() {
        let t = layer_tensor_bytes(&layer_5x5(), &pe_type_properties(PeType::Int16));
        assert_eq!((t.ifmap, t.filter, t.ofmap), (50, 18, 18));
    }

    #[test]
    fn tensor_bytes_lightpe1() {
        let t = layer_tensor_bytes(&layer_5x5(), &pe_type_properties(PeType::LightPe1));
        // 25*1, ceil(9*4/8)=5, 9*1
        assert_eq!((t.ifmap, t.filter, t.ofmap), (25, 5, 9));
    }

    #[test]
    fn tensor_bytes_single_element() {
        let l = LayerConfig::new("i", LayerKind::Conv, 1, 1, 1, 1, 1, 1, 1, 0).unwrap();
        for pe_type in PeType::ALL {
            let p = pe_type_properties(pe_type);
            let t = layer_tensor_bytes(&l, &p);
            assert_eq!(t.ifmap, u64::from(p.act_bits).div_ceil(8));
            assert_eq!(t.filter, u64::from(p.weight_bits).div_ceil(8));
            assert_eq!(t.ofmap, u64::from(p.act_bits).div_ceil(8));
        }
    }

    #[test]
    fn builtin_vgg16_shape() {
        let net = builtin_network("vgg16").unwrap();
        assert_eq!(net.layers.len(), 16);
        let conv = net.layers.iter().filter(|l| l.kind == LayerKind::Conv).count();
        let fc = net.layers.iter().filter(|l| l.kind == LayerKind::Fc).count();
        assert_eq!((conv, fc), (13, 3));
        let first = &net.layers[0];
        assert_eq!(
            (first.in_channels, first.out_channels, first.in_h, first.in_w),
            (3, 64, 224, 224)
        );
        assert_eq!(
            (first.filter_h, first.filter_w, first.stride, first.pad),
            (3, 3, 1, 1)
        );
    }

    #[test]
    fn builtin_resnet50_shape() {
        let net = builtin_network("resnet50").unwrap();
        assert_eq!(net.layers.len(), 54);
        let conv = net.layers.iter().filter(|l| l.kind == LayerKind::Conv).count();
        assert_eq!(conv, 53);
    }

    #[test]
    fn builtin_resnet34_shape() {
        let net = builtin_network("resnet34").unwrap();
        assert_eq!(net.layers.len(), 37);
    }

    #[test]
    fn unknown_builtin_lists_valid_names() {
        let err = builtin_network("alexnet").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("vgg16") && msg.contains("resnet34") && msg.contains("resnet50"));
    }

    #[test]
    fn builtins_pass_validation_with_positive_outputs() {
        for name in BUILTIN_NETWORKS {
            let net = builtin_network(name).unwrap();
            for layer in &net.layers {
                layer.validate().unwrap();
                assert!(layer.out_h() >= 1 && layer.out_w() >= 1, "{name}/{}", layer.name);
            }
        }
    }

    #[test]
    fn builtin_totals_match_independent_enumeration() {
        // Frozen from an independent per-layer enumeration of the standard
        // architecture tables (matches the published per-network MAC counts).
        assert_eq!(builtin_network("vgg16").unwrap().total_macs(), 15_470_264_320);
        assert_eq!(builtin_network("resnet34").unwrap().total_macs(), 3_663_761_408);
        assert_eq!(builtin_network("resnet50").unwrap().total_macs(), 3_857_973_248);
    }

    #[test]
    fn serialize_round_trips() {
        for name in BUILTIN_NETWORKS {
            let net = builtin_network(name).unwrap();
            let text = serialize_network(&net);
            let back = load_network(&text, name, "roundtrip").unwrap();
            assert_eq!(net, back);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_layer() -> impl Strategy<Value = LayerConfig> {
            (1u32..=4, 1u32..=8, 3u32..=12, 3u32..=12, 1u32..=3, 1u32..=3, 1u32..=2, 0u32..=2)
                .prop_filter_map("valid layer", |(c, m, h, w, r, s, u, p)| {
                    LayerConfig::new("p", LayerKind::Conv, c, m, h, w, r, s, u, p).ok()
                })
        }

        proptest! {
            #[test]
            fn macs_double_when_output_channels_double(layer in arb_layer()) {
                let mut doubled = layer.clone();
                doubled.out_channels *= 2;
                prop_assert_eq!(layer_macs(&doubled), 2 * layer_macs(&layer));
            }

            #[test]
            fn tensor_bytes_monotone_in_bit_widths(layer in arb_layer()) {
                use crate::arch::pe_type_properties;
                // act_bits and weight_bits both rise along this order.
                let narrow = layer_tensor_bytes(&layer, &pe_type_properties(PeType::LightPe1));
                let mid = layer_tensor_bytes(&layer, &pe_type_properties(PeType::LightPe2));
                let wide = layer_tensor_bytes(&layer, &pe_type_properties(PeType::Int16));
                let widest = layer_tensor_bytes(&layer, &pe_type_properties(PeType::Fp32));
                prop_assert!(narrow.ifmap <= mid.ifmap && mid.ifmap <= wide.ifmap && wide.ifmap <= widest.ifmap);
                prop_assert!(narrow.filter <= mid.filter && mid.filter <= wide.filter && wide.filter <= widest.filter);
                prop_assert!(narrow.ofmap <= mid.ofmap && mid.ofmap <= wide.ofmap && wide.ofmap <= widest.ofmap);
            }

            #[test]
            fn parse_serialize_round_trip(layers in proptest::collection::vec(arb_layer(), 1..6)) {
                let layers: Vec<LayerConfig> = layers
                    .into_iter()
                    .enumerate()
                    .map(|(i, mut l)| { l.name = format!("l{i}"); l })
                    .collect();
                let net = NetworkConfig::new("prop", layers).unwrap();
                let back = load_network(&serialize_network(&net), "prop", "rt").unwrap();
                prop_assert_eq!(net, back);
            }
        }
    }
}
