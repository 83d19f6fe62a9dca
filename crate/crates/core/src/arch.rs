//! Accelerator configurations and the four processing-element types.
//!
//! A config names the PE array shape, per-PE scratchpad capacities, global
//! buffer size, off-chip bandwidth, clock, and PE type. `validate_config`
//! checks that the per-PE scratchpads can hold the row-stationary working
//! set for every layer of a given network before any mapping happens.

use crate::error::{Error, Result};
use crate::kv::{parse_kv, parse_err, scalar};
use crate::workload::{bits_to_bytes, LayerConfig, NetworkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PeType {
    Fp32,
    Int16,
    LightPe1,
    LightPe2,
}

impl PeType {
    pub const ALL: [PeType; 4] = [PeType::Fp32, PeType::Int16, PeType::LightPe1, PeType::LightPe2];

    pub fn as_str(&self) -> &'static str {
        match self {
            PeType::Fp32 => "fp32",
            PeType::Int16 => "int16",
            PeType::LightPe1 => "lightpe1",
            PeType::LightPe2 => "lightpe2",
        }
    }

    pub fn parse(text: &str) -> Result<PeType> {
        match text.to_ascii_lowercase().as_str() {
            "fp32" => Ok(PeType::Fp32),
            "int16" => Ok(PeType::Int16),
            "lightpe1" | "lightpe-1" => Ok(PeType::LightPe1),
            "lightpe2" | "lightpe-2" => Ok(PeType::LightPe2),
            other => Err(Error::Invariant {
                subject: "pe_type".to_string(),
                msg: format!("unknown PE type '{other}' (expected fp32, int16, lightpe1, lightpe2)"),
            }),
        }
    }
}

impl std::fmt::Display for PeType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PeType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PeType::parse(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierStyle {
    FullMultiply,
    OneShift,
    ShiftAdd,
}

/// Fixed per-type datapath properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeProperties {
    pub act_bits: u32,
    pub weight_bits: u32,
    pub psum_bits: u32,
    pub multiplier_style: MultiplierStyle,
    pub mac_cycles: u32,
}

impl PeProperties {
    pub fn act_bytes(&self) -> u64 {
        u64::from(self.act_bits).div_ceil(8)
    }
    pub fn weight_bytes(&self) -> u64 {
        u64::from(self.weight_bits).div_ceil(8)
    }
    pub fn psum_bytes(&self) -> u64 {
        u64::from(self.psum_bits).div_ceil(8)
    }
}

/// Accumulators get 8 guard bits over the product width, capped at 32.
fn psum_bits_for(act_bits: u32, weight_bits: u32) -> u32 {
    (act_bits + weight_bits + 8).min(32)
}

/// Property table for the four PE types. All MACs are fully pipelined
/// (one cycle); throughput differences across types show up through area
/// and energy instead. `mac_cycles` can be overridden per config file.
pub fn pe_type_properties(t: PeType) -> PeProperties {
    match t {
        PeType::Fp32 => PeProperties {
            act_bits: 32,
            weight_bits: 32,
            psum_bits: 32,
            multiplier_style: MultiplierStyle::FullMultiply,
            mac_cycles: 1,
        },
        PeType::Int16 => PeProperties {
            act_bits: 16,
            weight_bits: 16,
            psum_bits: psum_bits_for(16, 16),
            multiplier_style: MultiplierStyle::FullMultiply,
            mac_cycles: 1,
        },
        PeType::LightPe1 => PeProperties {
            act_bits: 8,
            weight_bits: 4,
            psum_bits: psum_bits_for(8, 4),
            multiplier_style: MultiplierStyle::OneShift,
            mac_cycles: 1,
        },
        PeType::LightPe2 => PeProperties {
            act_bits: 8,
            weight_bits: 8,
            psum_bits: psum_bits_for(8, 8),
            multiplier_style: MultiplierStyle::ShiftAdd,
            mac_cycles: 1,
        },
    }
}

pub const DEFAULT_CLOCK_HZ: f64 = 200e6;

#[derive(Debug, Clone, PartialEq)]
pub struct AcceleratorConfig {
    pub rows: u32,
    pub cols: u32,
    pub ifmap_spad_bytes: u64,
    pub filter_spad_bytes: u64,
    pub psum_spad_bytes: u64,
    pub glb_bytes: u64,
    pub bw_bytes_per_cycle: f64,
    pub clock_hz: f64,
    pub pe_type: PeType,
    pub mac_cycles: u32,
}

impl AcceleratorConfig {
    pub fn pe_count(&self) -> u64 {
        u64::from(self.rows) * u64::from(self.cols)
    }

    pub fn check(&self) -> Result<()> {
        let err = |msg: String| Error::Invariant {
            subject: "accelerator config".to_string(),
            msg,
        };
        if self.rows < 1 || self.cols < 1 {
            return Err(err(format!("array dims must be >= 1, got {}x{}", self.rows, self.cols)));
        }
        for (value, what) in [
            (self.ifmap_spad_bytes, "ifmap_spad_B"),
            (self.filter_spad_bytes, "filter_spad_B"),
            (self.psum_spad_bytes, "psum_spad_B"),
            (self.glb_bytes, "glb_B"),
        ] {
            if value < 1 {
                return Err(err(format!("{what} must be >= 1 byte")));
            }
        }
        if !(self.bw_bytes_per_cycle > 0.0 && self.bw_bytes_per_cycle.is_finite()) {
            return Err(err(format!("bw_Bpc must be > 0, got {}", self.bw_bytes_per_cycle)));
        }
        if !(self.clock_hz > 0.0 && self.clock_hz.is_finite()) {
            return Err(err(format!("clock_hz must be > 0, got {}", self.clock_hz)));
        }
        if self.mac_cycles < 1 {
            return Err(err("mac_cycles must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// Parses the `key = value` accelerator config format. `clock_hz` defaults
/// to 200 MHz and `mac_cycles` to 1; everything else is required.
pub fn parse_accelerator_config(text: &str, source_name: &str) -> Result<AcceleratorConfig> {
    let entries = parse_kv(text, source_name)?;
    let mut rows = None;
    let mut cols = None;
    let mut ifmap = None;
    let mut filter = None;
    let mut psum = None;
    let mut glb = None;
    let mut bw = None;
    let mut clock = None;
    let mut pe_type = None;
    let mut mac_cycles = None;
    for entry in &entries {
        match entry.key.as_str() {
            "rows" => rows = Some(scalar::<u32>(entry, source_name)?),
            "cols" => cols = Some(scalar::<u32>(entry, source_name)?),
            "ifmap_spad_B" => ifmap = Some(scalar::<u64>(entry, source_name)?),
            "filter_spad_B" => filter = Some(scalar::<u64>(entry, source_name)?),
            "psum_spad_B" => psum = Some(scalar::<u64>(entry, source_name)?),
            "glb_B" => glb = Some(scalar::<u64>(entry, source_name)?),
            "bw_Bpc" => bw = Some(scalar::<f64>(entry, source_name)?),
            "clock_hz" => clock = Some(scalar::<f64>(entry, source_name)?),
            "pe_type" => pe_type = Some(PeType::parse(&entry.value).map_err(|e| {
                parse_err(source_name, entry.line, e.to_string())
            })?),
            "mac_cycles" => mac_cycles = Some(scalar::<u32>(entry, source_name)?),
            other => {
                return Err(parse_err(
                    source_name,
                    entry.line,
                    format!("unknown key '{other}'"),
                ))
            }
        }
    }
    let require = |opt: Option<_>, key: &str| {
        opt.ok_or_else(|| parse_err(source_name, 0, format!("missing required key '{key}'")))
    };
    let cfg = AcceleratorConfig {
        rows: require(rows, "rows")?,
        cols: require(cols, "cols")?,
        ifmap_spad_bytes: require(ifmap, "ifmap_spad_B")?,
        filter_spad_bytes: require(filter, "filter_spad_B")?,
        psum_spad_bytes: require(psum, "psum_spad_B")?,
        glb_bytes: require(glb, "glb_B")?,
        bw_bytes_per_cycle: require(bw, "bw_Bpc")?,
        clock_hz: clock.unwrap_or(DEFAULT_CLOCK_HZ),
        pe_type: require(pe_type, "pe_type")?,
        mac_cycles: mac_cycles.unwrap_or(1),
    };
    cfg.check()?;
    Ok(cfg)
}

/// Minimum per-PE scratchpad bytes for one layer under row-stationary
/// mapping: one filter row, one ifmap row window, one psum element.
pub fn min_spad_bytes(layer: &LayerConfig, props: &PeProperties) -> (u64, u64, u64) {
    let filter = bits_to_bytes(u64::from(layer.filter_w), props.weight_bits);
    let ifmap = bits_to_bytes(u64::from(layer.filter_w), props.act_bits);
    let psum = props.psum_bytes();
    (ifmap, filter, psum)
}

/// Bytes of one filter (all C*R*S weights for a single output channel).
pub fn per_filter_bytes(layer: &LayerConfig, props: &PeProperties) -> u64 {
    bits_to_bytes(
        u64::from(layer.in_channels) * u64::from(layer.filter_h) * u64::from(layer.filter_w),
        props.weight_bits,
    )
}

/// A config that has been checked against a specific network.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    cfg: AcceleratorConfig,
    props: PeProperties,
}

impl ValidatedConfig {
    pub fn config(&self) -> &AcceleratorConfig {
        &self.cfg
    }
    pub fn properties(&self) -> &PeProperties {
        &self.props
    }
}

pub(crate) fn check_layer_fits(
    cfg: &AcceleratorConfig,
    props: &PeProperties,
    layer: &LayerConfig,
) -> Result<()> {
    let (need_ifmap, need_filter, need_psum) = min_spad_bytes(layer, props);
    let infeasible = |capacity: &str, need: u64, have: u64| Error::Infeasible {
        layer: layer.name.clone(),
        capacity: capacity.to_string(),
        need_bytes: need,
        have_bytes: have,
    };
    if cfg.filter_spad_bytes < need_filter {
        return Err(infeasible("filter scratchpad", need_filter, cfg.filter_spad_bytes));
    }
    if cfg.ifmap_spad_bytes < need_ifmap {
        return Err(infeasible("ifmap scratchpad", need_ifmap, cfg.ifmap_spad_bytes));
    }
    if cfg.psum_spad_bytes < need_psum {
        return Err(infeasible("psum scratchpad", need_psum, cfg.psum_spad_bytes));
    }
    let filter_b = per_filter_bytes(layer, props);
    if cfg.glb_bytes <= filter_b {
        // The tiered DRAM model needs at least one filter resident.
        return Err(infeasible("global buffer", filter_b + 1, cfg.glb_bytes));
    }
    Ok(())
}

/// Confirms the per-PE scratchpads can hold the row-stationary working set
/// for every layer and that the GLB exceeds every layer's single-filter
/// footprint. Array dims never cause infeasibility: the mapper folds
/// oversized filter heights across rounds.
pub fn validate_config(cfg: &AcceleratorConfig, net: &NetworkConfig) -> Result<ValidatedConfig> {
    cfg.check()?;
    let mut props = pe_type_properties(cfg.pe_type);
    props.mac_cycles = cfg.mac_cycles;
    for layer in &net.layers {
        check_layer_fits(cfg, &props, layer)?;
    }
    Ok(ValidatedConfig {
        cfg: cfg.clone(),
        props,
    })
}
