// SPDX-License-Identifier: Apache-2.0

//! RC4 reference cipher and a clock-accurate model of a dual-edge,
//! 1-byte-per-clock RC4 coprocessor.
//!
//! Alongside the model: a switching-activity estimate for clock gating, a
//! statistical randomness harness for keystream corpora and an encrypted
//! stream transport whose keystream can come from either implementation.

pub mod activity;
pub mod hw;
pub mod randomness;
pub mod rc4;
pub mod transport;

pub use activity::{compare_gating, simulate_activity, ActivityReport, GatingComparison, GatingMode};
pub use hw::{
    ksa_run, prga_run, rc4_hw_encrypt, trace_rc4, CycleReport, HwError, HwTraceEvent, KsaUnit,
    PrgaUnit,
};
pub use rc4::{keystream, KeyError, Rc4Key, Rc4State, SBox};
