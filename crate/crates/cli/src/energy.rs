//! MICAz-style energy model.
//!
//! `E = cycles · e_cpu + 8 · wire_bytes · e_tx`, reported in microjoules.

use std::fs;

/// Processor energy per clock cycle, nanojoules.
pub const E_CPU_NJ_PER_CYCLE: f64 = 4.07;
/// Radio energy per transmitted bit, microjoules.
pub const E_TX_UJ_PER_BIT: f64 = 0.168;
/// Used when the host clock cannot be read.
pub const FALLBACK_CPU_HZ: f64 = 2.0e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub e_cpu_nj: f64,
    pub e_tx_uj: f64,
    pub cpu_hz: f64,
}

impl EnergyModel {
    pub fn new(cpu_hz: f64) -> Self {
        Self { e_cpu_nj: E_CPU_NJ_PER_CYCLE, e_tx_uj: E_TX_UJ_PER_BIT, cpu_hz }
    }

    pub fn cpu_uj(&self, cycles: f64) -> f64 {
        cycles * self.e_cpu_nj / 1000.0
    }

    pub fn tx_uj(&self, wire_bytes: u64) -> f64 {
        8.0 * wire_bytes as f64 * self.e_tx_uj
    }

    pub fn total_uj(&self, cycles: f64, wire_bytes: u64) -> f64 {
        self.cpu_uj(cycles) + self.tx_uj(wire_bytes)
    }

    pub fn cycles_for_ns(&self, ns: f64) -> f64 {
        ns * self.cpu_hz / 1e9
    }
}

/// Current clock of the first CPU listed in `/proc/cpuinfo`, if any.
pub fn host_cpu_hz() -> Option<f64> {
    let info = fs::read_to_string("/proc/cpuinfo").ok()?;
    info.lines()
        .filter(|l| l.starts_with("cpu MHz"))
        .find_map(|l| l.split(':').nth(1)?.trim().parse::<f64>().ok())
        .map(|mhz| mhz * 1e6)
}

/// One line of the energy report.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRow {
    pub phase: &'static str,
    pub cycles: f64,
    pub wire_bytes: u64,
    pub energy_uj: f64,
}

pub const REPORT_HEADER: &str = "phase,source,cycles,wire_bytes,energy_uj";

/// Builds the per-phase rows plus a `total` row.
pub fn report(model: &EnergyModel, phases: &[(&'static str, f64)], wire_bytes: u64) -> Vec<EnergyRow> {
    let mut rows: Vec<EnergyRow> = phases
        .iter()
        .map(|&(phase, cycles)| EnergyRow { phase, cycles, wire_bytes: 0, energy_uj: model.cpu_uj(cycles) })
        .collect();
    rows.push(EnergyRow { phase: "transmission", cycles: 0.0, wire_bytes, energy_uj: model.tx_uj(wire_bytes) });
    let cycles: f64 = phases.iter().map(|p| p.1).sum();
    rows.push(EnergyRow { phase: "total", cycles, wire_bytes, energy_uj: model.total_uj(cycles, wire_bytes) });
    rows
}

pub fn format_row(row: &EnergyRow, source: &str) -> String {
    format!("{},{},{:.0},{},{:.6}", row.phase, source, row.cycles, row.wire_bytes, row.energy_uj)
}
