// SPDX-License-Identifier: Apache-2.0

//! Switching-activity accounting for the coprocessor, with and without
//! clock gating.
//!
//! Without gating both `ksa_clk` and `prga_clk` run for the whole job. With
//! gating, `prga_en` is held at 0 for the 257 KSA clocks and `ksa_en` is its
//! complement, so each clock net only toggles while its unit is working.
//! Counts stand in for dynamic power; no wattage is modelled.

use std::fmt::Write as _;

use num_rational::Ratio;

use crate::hw::{self, CycleReport, HwError, Unit, KSA_CLOCKS};
use crate::rc4::Rc4Key;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GatingMode {
    Ungated,
    Gated,
}

/// Enable signals for one global clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Enables {
    pub ksa_en: bool,
    pub prga_en: bool,
    pub ksa_clk: bool,
    pub prga_clk: bool,
}

/// The clock-management block in front of the two units.
#[derive(Debug, Clone, Copy)]
pub struct ClockGate {
    mode: GatingMode,
}

impl ClockGate {
    pub fn new(mode: GatingMode) -> Self {
        Self { mode }
    }

    pub fn enables(&self, global_clock: u64) -> Enables {
        let prga_en = global_clock >= KSA_CLOCKS;
        let ksa_en = !prga_en;
        match self.mode {
            GatingMode::Ungated => Enables { ksa_en, prga_en, ksa_clk: true, prga_clk: true },
            GatingMode::Gated => Enables { ksa_en, prga_en, ksa_clk: ksa_en, prga_clk: prga_en },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityReport {
    pub mode: GatingMode,
    pub n_bytes: u64,
    pub ksa_clock_toggles: u64,
    pub prga_clock_toggles: u64,
    /// `ksa_clk` toggles after the handover to the PRGA.
    pub ksa_toggles_after_handoff: u64,
    pub register_writes: u64,
    pub latch_loads: u64,
    pub total_toggles: u64,
    pub cycles: CycleReport,
    pub keystream: Vec<u8>,
}

impl ActivityReport {
    pub fn clock_toggles(&self) -> u64 {
        self.ksa_clock_toggles + self.prga_clock_toggles
    }
}

/// Runs the coprocessor for `n` bytes under `mode` and counts activity.
pub fn simulate_activity(
    key: &Rc4Key,
    n: usize,
    mode: GatingMode,
) -> Result<ActivityReport, HwError> {
    if n == 0 {
        return Err(HwError::InvalidCount(0));
    }
    let gate = ClockGate::new(mode);
    let mut ksa_edges = 0u64;
    let mut prga_edges = 0u64;
    let mut misrouted = false;
    let run = hw::run_traced(key, n, |ev| {
        let enabled = match ev.unit {
            Unit::Ksa => {
                ksa_edges += 1;
                let e = gate.enables(ev.clock_index);
                e.ksa_en && e.ksa_clk
            }
            Unit::Prga => {
                prga_edges += 1;
                let e = gate.enables(KSA_CLOCKS + ev.clock_index);
                e.prga_en && e.prga_clk
            }
        };
        misrouted |= !enabled;
    })?;
    if misrouted {
        return Err(HwError::Protocol("edge delivered to a disabled unit"));
    }

    let mut ksa_clock_toggles = 0;
    let mut prga_clock_toggles = 0;
    let mut ksa_toggles_after_handoff = 0;
    for clock in 0..run.cycles.total_clocks {
        let e = gate.enables(clock);
        if e.ksa_clk {
            ksa_clock_toggles += 2;
            if clock >= KSA_CLOCKS {
                ksa_toggles_after_handoff += 2;
            }
        }
        if e.prga_clk {
            prga_clock_toggles += 2;
        }
    }
    // With gating, a net toggles exactly when its unit sees an edge.
    if mode == GatingMode::Gated
        && (ksa_clock_toggles != ksa_edges || prga_clock_toggles != prga_edges)
    {
        return Err(HwError::Protocol("gated clock activity disagrees with delivered edges"));
    }

    let register_writes = [run.ksa, run.prga]
        .iter()
        .map(|s| s.cell_writes + s.j_updates + s.counter_advances)
        .sum();
    let latch_loads = run.ksa.latch_loads + run.prga.latch_loads;
    Ok(ActivityReport {
        mode,
        n_bytes: n as u64,
        ksa_clock_toggles,
        prga_clock_toggles,
        ksa_toggles_after_handoff,
        register_writes,
        latch_loads,
        total_toggles: ksa_clock_toggles + prga_clock_toggles + register_writes + latch_loads,
        cycles: run.cycles,
        keystream: run.keystream,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GatingComparison {
    pub ungated: ActivityReport,
    pub gated: ActivityReport,
    /// `1 - gated.total_toggles / ungated.total_toggles`.
    pub toggle_saving_fraction: Ratio<u64>,
    /// Same ratio restricted to the two clock nets.
    pub clock_saving_fraction: Ratio<u64>,
}

fn saving(gated: u64, ungated: u64) -> Ratio<u64> {
    Ratio::new(ungated - gated, ungated)
}

pub fn compare_gating(key: &Rc4Key, n: usize) -> Result<GatingComparison, HwError> {
    let ungated = simulate_activity(key, n, GatingMode::Ungated)?;
    let gated = simulate_activity(key, n, GatingMode::Gated)?;
    Ok(GatingComparison {
        toggle_saving_fraction: saving(gated.total_toggles, ungated.total_toggles),
        clock_saving_fraction: saving(gated.clock_toggles(), ungated.clock_toggles()),
        ungated,
        gated,
    })
}

impl GatingComparison {
    fn rows(&self) -> [(&'static str, u64, u64); 6] {
        let (u, g) = (&self.ungated, &self.gated);
        [
            ("ksa_clock_toggles", u.ksa_clock_toggles, g.ksa_clock_toggles),
            ("prga_clock_toggles", u.prga_clock_toggles, g.prga_clock_toggles),
            ("ksa_toggles_after_handoff", u.ksa_toggles_after_handoff, g.ksa_toggles_after_handoff),
            ("register_writes", u.register_writes, g.register_writes),
            ("latch_loads", u.latch_loads, g.latch_loads),
            ("total_toggles", u.total_toggles, g.total_toggles),
        ]
    }

    /// Aligned plain-text table, one row per counter.
    pub fn to_table(&self) -> String {
        let mut out = format!("bytes={}\n", self.ungated.n_bytes);
        let _ = writeln!(out, "{:<28}{:>14}{:>14}", "counter", "ungated", "gated");
        for (name, u, g) in self.rows() {
            let _ = writeln!(out, "{name:<28}{u:>14}{g:>14}");
        }
        let _ = writeln!(
            out,
            "clock_saving_fraction={} ({:.6})",
            self.clock_saving_fraction,
            ratio_f64(self.clock_saving_fraction)
        );
        let _ = writeln!(
            out,
            "toggle_saving_fraction={} ({:.6})",
            self.toggle_saving_fraction,
            ratio_f64(self.toggle_saving_fraction)
        );
        out
    }

    /// `counter,ungated,gated` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("counter,ungated,gated\n");
        for (name, u, g) in self.rows() {
            let _ = writeln!(out, "{name},{u},{g}");
        }
        out
    }
}

fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
