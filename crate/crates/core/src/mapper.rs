//! Row-stationary mapping of one layer onto the PE array, with cycle,
//! utilization, and memory-access accounting.
//!
//! The mapping builds logical PE sets of `r_tile` rows x `e_tile` columns.
//! Each PE runs a 1-D convolution: an `S`-weight filter row slides over an
//! ifmap row and produces `f_tile` partial sums; a column accumulates
//! vertically into one output row. Oversized filter heights fold across
//! rounds (`fold_r`); spare array rows replicate over input channels (`v`)
//! and spare columns over additional output-row tiles (`h`).

use crate::arch::{check_layer_fits, per_filter_bytes, ValidatedConfig};
use crate::error::Result;
use crate::workload::{layer_macs, layer_tensor_bytes, LayerConfig, NetworkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MappingResult {
    /// Filter rows resident per PE set (min(R, rows)).
    pub r_tile: u32,
    /// Output-row positions computed per PE set (min(E, cols)).
    pub e_tile: u32,
    /// Partial sums held per PE, bounded by the psum scratchpad.
    pub f_tile: u32,
    /// Sequential passes over filter-row groups when R > rows.
    pub fold_r: u32,
    /// Vertical replication factor (input channels in flight).
    pub v: u32,
    /// Horizontal replication factor (output-row tiles in flight).
    pub h: u32,
    /// Total PE-set invocations for the layer.
    pub work_units: u64,
    /// Sequential rounds after packing v*h units per round.
    pub rounds: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AccessCounts {
    pub mac_ops: u64,
    pub spad_ifmap_r: u64,
    pub spad_filter_r: u64,
    pub spad_psum_r: u64,
    pub spad_psum_w: u64,
    pub glb_ifmap_r: u64,
    pub glb_filter_r: u64,
    pub glb_psum_r: u64,
    pub glb_psum_w: u64,
    pub dram_bytes: u64,
}

impl AccessCounts {
    pub fn add(&mut self, other: &AccessCounts) {
        self.mac_ops += other.mac_ops;
        self.spad_ifmap_r += other.spad_ifmap_r;
        self.spad_filter_r += other.spad_filter_r;
        self.spad_psum_r += other.spad_psum_r;
        self.spad_psum_w += other.spad_psum_w;
        self.glb_ifmap_r += other.glb_ifmap_r;
        self.glb_filter_r += other.glb_filter_r;
        self.glb_psum_r += other.glb_psum_r;
        self.glb_psum_w += other.glb_psum_w;
        self.dram_bytes += other.dram_bytes;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfResult {
    pub compute_cycles: u64,
    pub memory_cycles: u64,
    pub total_cycles: u64,
    /// mac_ops * mac_cycles / (compute_cycles * rows * cols), in (0, 1].
    pub utilization: f64,
    pub counts: AccessCounts,
}

/// Tiling/folding/replication for one layer on one validated config.
pub fn map_layer(layer: &LayerConfig, vcfg: &ValidatedConfig) -> MappingResult {
    let cfg = vcfg.config();
    let props = vcfg.properties();
    let r = layer.filter_h;
    let e = layer.out_h();
    let f = layer.out_w();

    let r_tile = r.min(cfg.rows);
    let (fold_r, v) = if r > cfg.rows {
        (r.div_ceil(cfg.rows), 1)
    } else {
        (1, cfg.rows / r)
    };
    let e_tile = e.min(cfg.cols);
    let h = cfg.cols / e_tile;
    // Validation guarantees the psum spad holds at least one element.
    let psum_capacity = (cfg.psum_spad_bytes * 8 / u64::from(props.psum_bits)) as u32;
    let f_tile = f.min(psum_capacity);

    let work_units = u64::from(layer.out_channels)
        * u64::from(layer.in_channels)
        * u64::from(e.div_ceil(e_tile))
        * u64::from(f.div_ceil(f_tile))
        * u64::from(fold_r);
    let slots = u64::from(v) * u64::from(h);
    let rounds = work_units.div_ceil(slots);

    MappingResult {
        r_tile,
        e_tile,
        f_tile,
        fold_r,
        v,
        h,
        work_units,
        rounds,
    }
}

/// Cycle counts, utilization, and access statistics for one mapped layer.
///
/// Edge work units are modeled full-sized (loads and compute), matching the
/// reference simulator; psum traffic counts true outputs only. DRAM traffic
/// follows a tiered GLB-residency model: when the whole ifmap plus one
/// filter fit, every tensor moves once; otherwise filters are re-read once
/// per ifmap tile. Compute and memory overlap perfectly (double buffering),
/// so the total is the max of the two.
pub fn performance(layer: &LayerConfig, m: &MappingResult, vcfg: &ValidatedConfig) -> PerfResult {
    let cfg = vcfg.config();
    let props = vcfg.properties();
    let s = u64::from(layer.filter_w);
    let u = u64::from(layer.stride);
    let e_out = u64::from(layer.out_h());
    let f_out = u64::from(layer.out_w());

    let cycles_per_round = u64::from(props.mac_cycles) * s * u64::from(m.f_tile) + u64::from(m.r_tile);
    let compute_cycles = m.rounds * cycles_per_round;

    let ifmap_rows = u * (u64::from(m.e_tile) - 1) + u64::from(m.r_tile);
    let ifmap_cols = u * (u64::from(m.f_tile) - 1) + s;
    let glb_ifmap_r = m.work_units * ifmap_rows * ifmap_cols;
    let glb_filter_r = m.work_units * u64::from(m.r_tile) * s;

    let acc_groups = u64::from(layer.in_channels) * u64::from(m.fold_r);
    let outputs = u64::from(layer.out_channels) * e_out * f_out;
    let glb_psum_w = acc_groups * outputs;
    let glb_psum_r = (acc_groups - 1) * outputs;

    let mac_ops = layer_macs(layer);

    let bytes = layer_tensor_bytes(layer, props);
    let filter_resident = per_filter_bytes(layer, props);
    let dram_bytes = if bytes.ifmap + filter_resident <= cfg.glb_bytes {
        bytes.ifmap + bytes.filter + bytes.ofmap
    } else {
        let tiles = bytes.ifmap.div_ceil(cfg.glb_bytes - filter_resident);
        bytes.ifmap + tiles * bytes.filter + bytes.ofmap
    };
    let memory_cycles = (dram_bytes as f64 / cfg.bw_bytes_per_cycle).ceil() as u64;

    let utilization = (mac_ops * u64::from(props.mac_cycles)) as f64
        / (compute_cycles * cfg.pe_count()) as f64;

    PerfResult {
        compute_cycles,
        memory_cycles,
        total_cycles: compute_cycles.max(memory_cycles),
        utilization,
        counts: AccessCounts {
            mac_ops,
            spad_ifmap_r: mac_ops,
            spad_filter_r: mac_ops,
            spad_psum_r: mac_ops,
            spad_psum_w: mac_ops,
            glb_ifmap_r,
            glb_filter_r,
            glb_psum_r,
            glb_psum_w,
            dram_bytes,
        },
    }
}

#[derive(Debug, Clone)]
pub struct LayerPerf {
    pub layer_name: String,
    pub mapping: MappingResult,
    pub perf: PerfResult,
}

#[derive(Debug, Clone)]
pub struct NetworkPerf {
    /// Per-layer sums; utilization is the MAC-weighted mean.
    pub total: PerfResult,
    pub per_layer: Vec<LayerPerf>,
}

/// Maps and evaluates every layer, in network order.
pub fn network_performance(net: &NetworkConfig, vcfg: &ValidatedConfig) -> Result<NetworkPerf> {
    let mut per_layer = Vec::with_capacity(net.layers.len());
    let mut counts = AccessCounts::default();
    let mut compute_cycles = 0u64;
    let mut memory_cycles = 0u64;
    let mut total_cycles = 0u64;
    let mut weighted_util = 0.0;
    for layer in &net.layers {
        // The config may have been validated against a different network.
        check_layer_fits(vcfg.config(), vcfg.properties(), layer)?;
        let mapping = map_layer(layer, vcfg);
        let perf = performance(layer, &mapping, vcfg);
        counts.add(&perf.counts);
        compute_cycles += perf.compute_cycles;
        memory_cycles += perf.memory_cycles;
        total_cycles += perf.total_cycles;
        weighted_util += perf.utilization * perf.counts.mac_ops as f64;
        per_layer.push(LayerPerf {
            layer_name: layer.name.clone(),
            mapping,
            perf,
        });
    }
    let utilization = weighted_util / counts.mac_ops as f64;
    Ok(NetworkPerf {
        total: PerfResult {
            compute_cycles,
            memory_cycles,
            total_cycles,
            utilization,
            counts,
        },
        per_layer,
    })
}
