//! Per-event energy tables and the access-count -> joules conversion.
//!
//! One table per PE type. MAC energies are per operation, scratchpad
//! energies per element, GLB energies per element-byte (so wider words cost
//! proportionally more), DRAM energy per byte. The shipped defaults are
//! scaled from published 45 nm per-operation energy surveys and are
//! configuration data, not ground truth: nothing downstream depends on the
//! absolute values, only on the orderings enforced here.

use crate::arch::{pe_type_properties, PeType};
use crate::error::{Error, Result};
use crate::kv::{parse_err, parse_kv};
use crate::mapper::AccessCounts;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTable {
    pub pe_type: PeType,
    /// J per MAC operation.
    pub e_mac: f64,
    /// J per scratchpad element read / write.
    pub e_spad_r: f64,
    pub e_spad_w: f64,
    /// J per GLB element-byte read / write.
    pub e_glb_r: f64,
    pub e_glb_w: f64,
    /// J per DRAM byte.
    pub e_dram: f64,
}

pub fn default_energy_table(t: PeType) -> EnergyTable {
    let e_mac = match t {
        PeType::LightPe1 => 0.2e-12, // one shift + add
        PeType::LightPe2 => 0.4e-12, // a few shift-adds
        PeType::Int16 => 1.1e-12,
        PeType::Fp32 => 4.6e-12,
    };
    EnergyTable {
        pe_type: t,
        e_mac,
        e_spad_r: 0.05e-12,
        e_spad_w: 0.06e-12,
        e_glb_r: 1.5e-12,
        e_glb_w: 1.7e-12,
        e_dram: 80e-12,
    }
}

/// The full per-type table set, validated as a unit.
#[derive(Debug, Clone)]
pub struct EnergyTables {
    tables: BTreeMap<PeType, EnergyTable>,
}

impl EnergyTables {
    pub fn defaults() -> Self {
        let tables = PeType::ALL
            .iter()
            .map(|&t| (t, default_energy_table(t)))
            .collect();
        let set = EnergyTables { tables };
        set.validate().expect("shipped defaults satisfy the invariants");
        set
    }

    pub fn get(&self, t: PeType) -> &EnergyTable {
        &self.tables[&t]
    }

    fn set(&mut self, table: EnergyTable) {
        self.tables.insert(table.pe_type, table);
    }

    /// All entries positive; e_dram > e_glb_r > e_spad_r per table; MAC
    /// energies strictly ordered LightPE1 < LightPE2 < INT16 < FP32.
    pub fn validate(&self) -> Result<()> {
        let inv = |msg: String| Error::Invariant {
            subject: "energy table".to_string(),
            msg,
        };
        for (t, table) in &self.tables {
            for (value, key) in [
                (table.e_mac, "e_mac"),
                (table.e_spad_r, "e_spad_r"),
                (table.e_spad_w, "e_spad_w"),
                (table.e_glb_r, "e_glb_r"),
                (table.e_glb_w, "e_glb_w"),
                (table.e_dram, "e_dram"),
            ] {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(inv(format!("{key}({t}) must be > 0, got {value}")));
                }
            }
            if table.e_dram <= table.e_glb_r {
                return Err(inv(format!("e_dram({t}) must exceed e_glb_r({t})")));
            }
            if table.e_glb_r <= table.e_spad_r {
                return Err(inv(format!("e_glb_r({t}) must exceed e_spad_r({t})")));
            }
        }
        let order = [PeType::LightPe1, PeType::LightPe2, PeType::Int16, PeType::Fp32];
        for pair in order.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if self.tables[&lo].e_mac >= self.tables[&hi].e_mac {
                return Err(inv(format!("e_mac({lo}) must be below e_mac({hi})")));
            }
        }
        Ok(())
    }

    /// Loads user overrides on top of the defaults. Keys inside a
    /// `[pe_type]` section override that type; keys outside any section
    /// apply to `flat_type` (required by callers that accept flat files).
    pub fn load(text: &str, source_name: &str, flat_type: Option<PeType>) -> Result<Self> {
        let mut tables = EnergyTables::defaults();
        for entry in parse_kv(text, source_name)? {
            let pe_type = match &entry.section {
                Some(name) => PeType::parse(name)
                    .map_err(|e| parse_err(source_name, entry.line, e.to_string()))?,
                None => flat_type.ok_or_else(|| {
                    parse_err(
                        source_name,
                        entry.line,
                        "key outside a [pe_type] section; add a section header",
                    )
                })?,
            };
            let mut table = *tables.get(pe_type);
            let value: f64 = entry.value.parse().map_err(|_| {
                parse_err(
                    source_name,
                    entry.line,
                    format!("cannot parse '{}' as joules", entry.value),
                )
            })?;
            match entry.key.as_str() {
                "e_mac" => table.e_mac = value,
                "e_spad_r" => table.e_spad_r = value,
                "e_spad_w" => table.e_spad_w = value,
                "e_glb_r" => table.e_glb_r = value,
                "e_glb_w" => table.e_glb_w = value,
                "e_dram" => table.e_dram = value,
                other => {
                    return Err(parse_err(
                        source_name,
                        entry.line,
                        format!("unknown energy key '{other}'"),
                    ))
                }
            }
            tables.set(table);
        }
        tables.validate()?;
        Ok(tables)
    }
}

/// Weighted sum of access counts and per-event energies; nothing else.
/// GLB element events scale by the element's byte width (activations,
/// weights, and psums differ), DRAM traffic is already in bytes.
pub fn layer_energy(counts: &AccessCounts, table: &EnergyTable) -> f64 {
    let props = pe_type_properties(table.pe_type);
    let act_b = props.act_bytes() as f64;
    let wgt_b = props.weight_bytes() as f64;
    let psum_b = props.psum_bytes() as f64;

    let mac = counts.mac_ops as f64 * table.e_mac;
    let spad = (counts.spad_ifmap_r + counts.spad_filter_r + counts.spad_psum_r) as f64
        * table.e_spad_r
        + counts.spad_psum_w as f64 * table.e_spad_w;
    let glb_r = (counts.glb_ifmap_r as f64 * act_b
        + counts.glb_filter_r as f64 * wgt_b
        + counts.glb_psum_r as f64 * psum_b)
        * table.e_glb_r;
    let glb_w = counts.glb_psum_w as f64 * psum_b * table.e_glb_w;
    let dram = counts.dram_bytes as f64 * table.e_dram;
    mac + spad + glb_r + glb_w + dram
}
