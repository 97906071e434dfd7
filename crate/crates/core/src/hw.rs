// SPDX-License-Identifier: Apache-2.0

//! Two-phase, clock-accurate model of the 1-byte-per-clock RC4 coprocessor.
//!
//! The model is an event loop over clock edges, not a netlist. Both units
//! share one storage block: on a falling edge the addressed cells `S[i]` and
//! `S[j]` are read through the MUX and held in two D flip-flops; on the next
//! rising edge the held values are written back crosswise through the DEMUX,
//! which is the swap. The PRGA emits its keystream byte on that same rising
//! edge by reading the updated bank at `t = S[i] + S[j]` (MUX3).
//!
//! Schedules:
//!
//! * KSA: clock 0 is the initialisation clock (identity fill, K array load,
//!   `j := 0`). Falling edges of clocks 0..=255 latch iteration `i`, rising
//!   edges of clocks 1..=256 commit it. 257 clocks in total.
//! * PRGA: rising edge of clock 0 sets `j := 0`; the falling edge of clock
//!   `k` advances the counter and latches, the rising edge of clock `k + 1`
//!   commits and emits `Z_{k+1}`. `n` bytes take `n + 1` clocks.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use thiserror::Error;

use crate::rc4::{is_permutation, KeyArray, KeyError, Rc4Key, SBox, SBOX_LEN};

/// Clocks spent by the KSA unit, including its initialisation clock.
pub const KSA_CLOCKS: u64 = 257;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HwError {
    #[error(transparent)]
    InvalidKey(#[from] KeyError),
    #[error("invalid byte count {0}: the hardware needs at least one byte")]
    InvalidCount(usize),
    #[error("simulator protocol violation: {0}")]
    Protocol(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClockPhase {
    Rising,
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Ksa,
    Prga,
}

/// One clock edge as seen by a unit.
///
/// `clock_index` is local to the unit: the KSA counts from its
/// initialisation clock, the PRGA from its own clock 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HwTraceEvent {
    pub clock_index: u64,
    pub phase: ClockPhase,
    pub unit: Unit,
    pub i: u8,
    pub j: u8,
    /// Contents of the `S[i]` flip-flop.
    pub s_i: u8,
    /// Contents of the `S[j]` flip-flop.
    pub s_j: u8,
    pub z: Option<u8>,
    pub swapped: bool,
}

/// The S-box register bank with its two holding flip-flops.
#[derive(Clone)]
pub struct RegisterBank {
    cells: [u8; SBOX_LEN],
    latch_i: u8,
    latch_j: u8,
    pending: Option<(u8, u8)>,
    cell_writes: u64,
    latch_loads: u64,
}

impl RegisterBank {
    pub fn new(sbox: SBox) -> Self {
        Self {
            cells: sbox.0,
            latch_i: 0,
            latch_j: 0,
            pending: None,
            cell_writes: 0,
            latch_loads: 0,
        }
    }

    pub fn identity() -> Self {
        Self::new(SBox::identity())
    }

    /// Combinational read through a MUX.
    pub fn read(&self, index: u8) -> u8 {
        self.cells[index as usize]
    }

    /// Falling edge: load `S[i]` and `S[j]` into the flip-flops.
    pub fn latch(&mut self, i: u8, j: u8) -> (u8, u8) {
        self.latch_i = self.cells[i as usize];
        self.latch_j = self.cells[j as usize];
        self.pending = Some((i, j));
        self.latch_loads += 2;
        (self.latch_i, self.latch_j)
    }

    /// Rising edge: crossed write-back of the latched pair.
    ///
    /// Returns the number of distinct cells written (1 when `i == j`).
    pub fn commit(&mut self, i: u8, j: u8) -> Result<u8, HwError> {
        match self.pending.take() {
            Some(p) if p == (i, j) => {}
            Some(p) => {
                self.pending = Some(p);
                return Err(HwError::Protocol("commit indices differ from the latched pair"));
            }
            None => return Err(HwError::Protocol("commit without a preceding latch")),
        }
        self.cells[j as usize] = self.latch_i;
        self.cells[i as usize] = self.latch_j;
        let written = if i == j { 1 } else { 2 };
        self.cell_writes += written as u64;
        Ok(written)
    }

    pub fn latched(&self) -> (u8, u8) {
        (self.latch_i, self.latch_j)
    }

    pub fn cells(&self) -> &[u8; SBOX_LEN] {
        &self.cells
    }

    pub fn is_permutation(&self) -> bool {
        is_permutation(&self.cells)
    }

    pub fn to_sbox(&self) -> SBox {
        SBox(self.cells)
    }

    pub fn cell_writes(&self) -> u64 {
        self.cell_writes
    }

    pub fn latch_loads(&self) -> u64 {
        self.latch_loads
    }
}

impl fmt::Debug for RegisterBank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegisterBank")
            .field("latch_i", &self.latch_i)
            .field("latch_j", &self.latch_j)
            .field("pending", &self.pending)
            .finish_non_exhaustive()
    }
}

/// Free-running MOD 256 up counter: emits 1, 2, ..., 255, 0, 1, ...
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ModCounter {
    value: u8,
    started: bool,
}

impl ModCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&mut self) -> u8 {
        self.value = self.value.wrapping_add(1);
        self.started = true;
        self.value
    }

    /// Last emitted value, if any.
    pub fn current(&self) -> Option<u8> {
        self.started.then_some(self.value)
    }
}

/// Activity counters kept by each unit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UnitStats {
    pub edges: u64,
    pub cell_writes: u64,
    pub latch_loads: u64,
    pub j_updates: u64,
    pub counter_advances: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NextEdge {
    InitRising,
    Falling,
    Rising,
    Done,
}

/// Something driven one clock edge at a time.
pub trait ClockedUnit {
    fn edge(&mut self) -> Result<HwTraceEvent, HwError>;

    /// Runs `clocks` whole clocks (two edges each) and returns the events.
    fn trace_collect(&mut self, clocks: u64) -> Result<Vec<HwTraceEvent>, HwError> {
        let mut events = Vec::with_capacity(2 * clocks as usize);
        for _ in 0..2 * clocks {
            events.push(self.edge()?);
        }
        Ok(events)
    }
}

/// Key scheduling unit: 3-input adder `j + S[i] + K[i]` over the shared bank.
#[derive(Debug, Clone)]
pub struct KsaUnit {
    bank: RegisterBank,
    key: KeyArray,
    i: u8,
    j: u8,
    latched: u16,
    clock: u64,
    next: NextEdge,
    j_updates: u64,
    counter_advances: u64,
    edges: u64,
}

impl KsaUnit {
    pub fn new(key: &Rc4Key) -> Self {
        Self {
            bank: RegisterBank::identity(),
            key: KeyArray::expand(key),
            i: 0,
            j: 0,
            latched: 0,
            clock: 0,
            next: NextEdge::InitRising,
            j_updates: 0,
            counter_advances: 0,
            edges: 0,
        }
    }

    pub fn is_done(&self) -> bool {
        self.next == NextEdge::Done
    }

    pub fn bank(&self) -> &RegisterBank {
        &self.bank
    }

    /// Clocks consumed so far.
    pub fn clocks(&self) -> u64 {
        self.edges.div_ceil(2)
    }

    pub fn stats(&self) -> UnitStats {
        UnitStats {
            edges: self.edges,
            cell_writes: self.bank.cell_writes(),
            latch_loads: self.bank.latch_loads(),
            j_updates: self.j_updates,
            counter_advances: self.counter_advances,
        }
    }

    fn event(&self, phase: ClockPhase, swapped: bool) -> HwTraceEvent {
        let (s_i, s_j) = self.bank.latched();
        HwTraceEvent {
            clock_index: self.clock,
            phase,
            unit: Unit::Ksa,
            i: self.i,
            j: self.j,
            s_i,
            s_j,
            z: None,
            swapped,
        }
    }

    /// Drives the unit to completion and returns its final S-box.
    pub fn run(&mut self) -> Result<SBox, HwError> {
        while !self.is_done() {
            self.edge()?;
        }
        Ok(self.bank.to_sbox())
    }

    /// The storage block, handed to the PRGA once scheduling is complete.
    pub fn into_bank(self) -> Result<RegisterBank, HwError> {
        if !self.is_done() {
            return Err(HwError::Protocol("PRGA started before KSA completion"));
        }
        Ok(self.bank)
    }
}

impl ClockedUnit for KsaUnit {
    fn edge(&mut self) -> Result<HwTraceEvent, HwError> {
        let ev = match self.next {
            NextEdge::InitRising => {
                // Identity fill and K array were loaded at construction.
                self.j = 0;
                self.next = NextEdge::Falling;
                self.event(ClockPhase::Rising, false)
            }
            NextEdge::Falling => {
                if self.latched < SBOX_LEN as u16 {
                    self.i = self.latched as u8;
                    self.counter_advances += 1;
                    self.j = self
                        .j
                        .wrapping_add(self.bank.read(self.i))
                        .wrapping_add(self.key.get(self.i));
                    self.j_updates += 1;
                    self.bank.latch(self.i, self.j);
                    self.latched += 1;
                    let ev = self.event(ClockPhase::Falling, false);
                    self.clock += 1;
                    self.next = NextEdge::Rising;
                    ev
                } else {
                    let ev = self.event(ClockPhase::Falling, false);
                    self.clock += 1;
                    self.next = NextEdge::Done;
                    ev
                }
            }
            NextEdge::Rising => {
                self.bank.commit(self.i, self.j)?;
                self.next = NextEdge::Falling;
                self.event(ClockPhase::Rising, true)
            }
            NextEdge::Done => return Err(HwError::Protocol("KSA unit already finished")),
        };
        self.edges += 1;
        Ok(ev)
    }
}

/// Runs the KSA unit on `key`; returns the scrambled S-box and clocks used.
pub fn ksa_run(key: &Rc4Key) -> Result<(SBox, u64), HwError> {
    let mut unit = KsaUnit::new(key);
    let sbox = unit.run()?;
    Ok((sbox, unit.clocks()))
}

/// Keystream unit: MOD 256 counter for `i`, 2-input adder for `j`, MUX3 for Z.
#[derive(Debug, Clone)]
pub struct PrgaUnit {
    bank: RegisterBank,
    counter: ModCounter,
    i: u8,
    j: u8,
    clock: u64,
    next: NextEdge,
    emitted: u64,
    j_updates: u64,
    edges: u64,
}

impl PrgaUnit {
    /// Takes over the storage block of a finished KSA unit. The unit still
    /// has to see the rising edge of its clock 0 (see [`PrgaUnit::initialize`]).
    pub fn from_ksa(ksa: KsaUnit) -> Result<Self, HwError> {
        Ok(Self::from_bank(ksa.into_bank()?))
    }

    fn from_bank(mut bank: RegisterBank) -> Self {
        // activity counters are per unit
        bank.cell_writes = 0;
        bank.latch_loads = 0;
        Self {
            bank,
            counter: ModCounter::new(),
            i: 0,
            j: 0,
            clock: 0,
            next: NextEdge::InitRising,
            emitted: 0,
            j_updates: 0,
            edges: 0,
        }
    }

    /// Runs the KSA for `key`, hands over, and initialises the PRGA.
    pub fn for_key(key: &Rc4Key) -> Result<Self, HwError> {
        let mut ksa = KsaUnit::new(key);
        ksa.run()?;
        let mut prga = Self::from_ksa(ksa)?;
        prga.initialize()?;
        Ok(prga)
    }

    /// Rising edge of clock 0: `j := 0`.
    pub fn initialize(&mut self) -> Result<HwTraceEvent, HwError> {
        if self.next != NextEdge::InitRising {
            return Err(HwError::Protocol("PRGA already initialised"));
        }
        self.edge()
    }

    pub fn bank(&self) -> &RegisterBank {
        &self.bank
    }

    pub fn i(&self) -> u8 {
        self.i
    }

    pub fn j(&self) -> u8 {
        self.j
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn clocks(&self) -> u64 {
        self.edges.div_ceil(2)
    }

    pub fn stats(&self) -> UnitStats {
        UnitStats {
            edges: self.edges,
            cell_writes: self.bank.cell_writes(),
            latch_loads: self.bank.latch_loads(),
            j_updates: self.j_updates,
            counter_advances: self.j_updates,
        }
    }

    fn event(&self, phase: ClockPhase, z: Option<u8>, swapped: bool) -> HwTraceEvent {
        let (s_i, s_j) = self.bank.latched();
        HwTraceEvent {
            clock_index: self.clock,
            phase,
            unit: Unit::Prga,
            i: self.i,
            j: self.j,
            s_i,
            s_j,
            z,
            swapped,
        }
    }

    /// Falling edge of clock k followed by the rising edge of clock k + 1.
    pub fn step(&mut self) -> Result<(HwTraceEvent, HwTraceEvent), HwError> {
        if self.next != NextEdge::Falling {
            return Err(HwError::Protocol("PRGA step outside the falling edge"));
        }
        let fall = self.edge()?;
        let rise = self.edge()?;
        Ok((fall, rise))
    }

    /// Next keystream byte, one clock.
    pub fn next_byte(&mut self) -> Result<u8, HwError> {
        let (_, rise) = self.step()?;
        rise.z.ok_or(HwError::Protocol("rising edge without keystream output"))
    }

    pub fn fill(&mut self, out: &mut [u8]) -> Result<(), HwError> {
        for b in out {
            *b = self.next_byte()?;
        }
        Ok(())
    }

    /// Idle falling edge of the last clock; the unit stops afterwards.
    pub fn stop(&mut self) -> Result<HwTraceEvent, HwError> {
        if self.next != NextEdge::Falling {
            return Err(HwError::Protocol("PRGA can only stop on a falling edge"));
        }
        let ev = self.event(ClockPhase::Falling, None, false);
        self.clock += 1;
        self.edges += 1;
        self.next = NextEdge::Done;
        Ok(ev)
    }

    /// `n` keystream bytes plus the clocks they took (always `n + 1`).
    pub fn run(&mut self, n: usize) -> Result<(Vec<u8>, u64), HwError> {
        if n == 0 {
            return Err(HwError::InvalidCount(0));
        }
        if self.next == NextEdge::InitRising {
            self.initialize()?;
        }
        let mut out = vec![0u8; n];
        self.fill(&mut out)?;
        self.stop()?;
        Ok((out, self.clocks()))
    }
}

impl ClockedUnit for PrgaUnit {
    fn edge(&mut self) -> Result<HwTraceEvent, HwError> {
        let ev = match self.next {
            NextEdge::InitRising => {
                self.j = 0;
                self.next = NextEdge::Falling;
                self.event(ClockPhase::Rising, None, false)
            }
            NextEdge::Falling => {
                self.i = self.counter.advance();
                self.j = self.j.wrapping_add(self.bank.read(self.i));
                self.j_updates += 1;
                self.bank.latch(self.i, self.j);
                let ev = self.event(ClockPhase::Falling, None, false);
                self.clock += 1;
                self.next = NextEdge::Rising;
                ev
            }
            NextEdge::Rising => {
                self.bank.commit(self.i, self.j)?;
                let (s_i, s_j) = self.bank.latched();
                let z = self.bank.read(s_i.wrapping_add(s_j));
                self.emitted += 1;
                self.next = NextEdge::Falling;
                self.event(ClockPhase::Rising, Some(z), true)
            }
            NextEdge::Done => return Err(HwError::Protocol("PRGA unit stopped")),
        };
        self.edges += 1;
        Ok(ev)
    }
}

/// Convenience: PRGA for `key` producing `n` bytes.
pub fn prga_run(key: &Rc4Key, n: usize) -> Result<(Vec<u8>, u64), HwError> {
    if n == 0 {
        return Err(HwError::InvalidCount(0));
    }
    PrgaUnit::for_key(key)?.run(n)
}

/// Clock accounting for one KSA + PRGA pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleReport {
    pub ksa_clocks: u64,
    pub prga_clocks: u64,
    pub total_clocks: u64,
    pub bytes: u64,
    pub prga_per_byte: Ratio<u64>,
    pub rc4_per_byte: Ratio<u64>,
}

impl CycleReport {
    pub fn from_counts(ksa_clocks: u64, prga_clocks: u64, bytes: u64) -> Self {
        let total_clocks = ksa_clocks + prga_clocks;
        Self {
            ksa_clocks,
            prga_clocks,
            total_clocks,
            bytes,
            prga_per_byte: Ratio::new(prga_clocks, bytes),
            rc4_per_byte: Ratio::new(total_clocks, bytes),
        }
    }

    /// `key=value` lines, one per field.
    pub fn to_text(&self) -> String {
        format!(
            "ksa_clocks={}\nprga_clocks={}\ntotal_clocks={}\nbytes={}\nprga_per_byte={}\nrc4_per_byte={}\n",
            self.ksa_clocks,
            self.prga_clocks,
            self.total_clocks,
            self.bytes,
            self.prga_per_byte,
            self.rc4_per_byte
        )
    }
}

/// Result of a full coprocessor pass.
#[derive(Debug, Clone)]
pub struct HwRun {
    pub keystream: Vec<u8>,
    pub cycles: CycleReport,
    pub ksa: UnitStats,
    pub prga: UnitStats,
}

/// Drives KSA then PRGA for `n` bytes, reporting every edge to `on_event`.
pub fn run_traced(
    key: &Rc4Key,
    n: usize,
    mut on_event: impl FnMut(&HwTraceEvent),
) -> Result<HwRun, HwError> {
    if n == 0 {
        return Err(HwError::InvalidCount(0));
    }
    let mut ksa = KsaUnit::new(key);
    while !ksa.is_done() {
        on_event(&ksa.edge()?);
    }
    let ksa_clocks = ksa.clocks();
    let ksa_stats = ksa.stats();

    let mut prga = PrgaUnit::from_ksa(ksa)?;
    on_event(&prga.initialize()?);
    let mut keystream = Vec::with_capacity(n);
    for _ in 0..n {
        let (fall, rise) = prga.step()?;
        on_event(&fall);
        on_event(&rise);
        keystream.push(rise.z.ok_or(HwError::Protocol("rising edge without keystream output"))?);
    }
    on_event(&prga.stop()?);

    Ok(HwRun {
        cycles: CycleReport::from_counts(ksa_clocks, prga.clocks(), n as u64),
        keystream,
        ksa: ksa_stats,
        prga: prga.stats(),
    })
}

/// Full event trace of a KSA + PRGA pass producing `n` bytes.
pub fn trace_rc4(key: &Rc4Key, n: usize) -> Result<Vec<HwTraceEvent>, HwError> {
    let mut events = Vec::new();
    run_traced(key, n, |e| events.push(*e))?;
    Ok(events)
}

/// Encrypts `data` with the hardware keystream (XOR stays outside the unit).
pub fn rc4_hw_encrypt(key: &Rc4Key, data: &[u8]) -> Result<(Vec<u8>, CycleReport), HwError> {
    let run = run_traced(key, data.len(), |_| {})?;
    let out = data.iter().zip(&run.keystream).map(|(d, z)| d ^ z).collect();
    Ok((out, run.cycles))
}

impl fmt::Display for ClockPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClockPhase::Rising => "rising",
            ClockPhase::Falling => "falling",
        })
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Ksa => "ksa",
            Unit::Prga => "prga",
        })
    }
}

/// One trace line: `clock phase unit i j s_i s_j z swapped`, tab separated.
impl fmt::Display for HwTraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t",
            self.clock_index, self.phase, self.unit, self.i, self.j, self.s_i, self.s_j
        )?;
        match self.z {
            Some(z) => write!(f, "{z:02x}")?,
            None => f.write_str("-")?,
        }
        write!(f, "\t{}", u8::from(self.swapped))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed trace line: {0}")]
pub struct TraceParseError(pub String);

impl FromStr for HwTraceEvent {
    type Err = TraceParseError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let bad = |what: &str| TraceParseError(what.to_string());
        let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('\t').collect();
        let [clock, phase, unit, i, j, s_i, s_j, z, swapped] = fields[..] else {
            return Err(bad("expected 9 tab-separated fields"));
        };
        let byte = |s: &str, what: &str| {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad(what));
            }
            s.parse::<u8>().map_err(|_| bad(what))
        };
        if clock.is_empty() || !clock.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad("clock"));
        }
        Ok(HwTraceEvent {
            clock_index: clock.parse().map_err(|_| bad("clock"))?,
            phase: match phase {
                "rising" => ClockPhase::Rising,
                "falling" => ClockPhase::Falling,
                _ => return Err(bad("phase")),
            },
            unit: match unit {
                "ksa" => Unit::Ksa,
                "prga" => Unit::Prga,
                _ => return Err(bad("unit")),
            },
            i: byte(i, "i")?,
            j: byte(j, "j")?,
            s_i: byte(s_i, "s_i")?,
            s_j: byte(s_j, "s_j")?,
            z: match z {
                "-" => None,
                h if h.len() == 2
                    && h.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) =>
                {
                    Some(u8::from_str_radix(h, 16).map_err(|_| bad("z"))?)
                }
                _ => return Err(bad("z")),
            },
            swapped: match swapped {
                "1" => true,
                "0" => false,
                _ => return Err(bad("swapped")),
            },
        })
    }
}

/// Renders events one per line.
pub fn format_trace(events: &[HwTraceEvent]) -> String {
    let mut out = String::with_capacity(events.len() * 32);
    for e in events {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

/// Parses a trace; blank lines are skipped.
pub fn parse_trace(text: &str) -> Result<Vec<HwTraceEvent>, TraceParseError> {
    text.lines().filter(|l| !l.is_empty()).map(str::parse).collect()
}
