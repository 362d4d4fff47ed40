//! The gate protocol as an ordered list of abstract instructions.
//!
//! Positions of the two spin components of every atom are tracked in
//! half-site units: an atom on site `j` sits at `2j`. A `Shift(d)` moves every
//! spin-|0⟩ component by `-d` and every spin-|1⟩ component by `+d` half-sites,
//! so one shift brings the |1⟩ component of atom `j` onto the |0⟩ component of
//! atom `j+1`. A π-class rotation flips the spin of both components in place,
//! which swaps the tags.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Microwave phase of the first π/2 pulse. Puts |0⟩ into (|0⟩+|1⟩)/√2.
pub const PREP_AXIS: f64 = PI / 2.0;
/// Microwave phase of the spin-echo π pulse.
pub const ECHO_AXIS: f64 = 0.0;
/// Phase of the final pulse at α = 0.
pub const READOUT_AXIS: f64 = PI / 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Instruction {
    /// Instantaneous rotation of every occupied atom by `area` about an
    /// equatorial axis at azimuth `axis_phase`.
    Rotate { area: f64, axis_phase: f64 },
    /// Spin-dependent transport by one half lattice spacing per component.
    Shift(i8),
    /// Wait while co-located components collide, duration in seconds.
    Hold(f64),
    /// Bring both components of every atom back to its home site.
    Return,
    /// Leave atoms delocalized; the interferometer output is read out as a
    /// spatial pattern.
    Freeze,
}

impl Instruction {
    pub fn is_terminal(&self) -> bool {
        matches!(self, Instruction::Return | Instruction::Freeze)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Rotate { area, axis_phase } => write!(f, "rotate {area:?} {axis_phase:?}"),
            Instruction::Shift(d) => write!(f, "shift {d}"),
            Instruction::Hold(t) => write!(f, "hold {t:?}"),
            Instruction::Return => f.write_str("return"),
            Instruction::Freeze => f.write_str("freeze"),
        }
    }
}

/// Is a rotation of this area treated as a spin flip for position tracking.
pub(crate) fn is_flip(area: f64) -> bool {
    let a = area.rem_euclid(2.0 * PI);
    a > PI / 2.0 && a < 1.5 * PI
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Ring,
}

/// What happens when a component is transported past the end of an open chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgePolicy {
    /// The component moves into an empty site and acquires no phase.
    #[default]
    Empty,
    /// Leaving the occupied span is a validation error.
    Strict,
}

/// A 1D row of lattice sites with an occupation mask.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub fill: Vec<bool>,
    pub boundary: Boundary,
    pub edge: EdgePolicy,
}

impl Chain {
    pub fn open(sites: usize) -> Self {
        Self { fill: vec![true; sites], boundary: Boundary::Open, edge: EdgePolicy::Empty }
    }

    pub fn ring(sites: usize) -> Self {
        Self { fill: vec![true; sites], boundary: Boundary::Ring, edge: EdgePolicy::Empty }
    }

    pub fn with_fill(mut self, fill: Vec<bool>) -> Self {
        self.fill = fill;
        self
    }

    pub fn with_edge(mut self, edge: EdgePolicy) -> Self {
        self.edge = edge;
        self
    }

    pub fn sites(&self) -> usize {
        self.fill.len()
    }

    pub fn occupied(&self) -> usize {
        self.fill.iter().filter(|&&f| f).count()
    }

    /// Site index of every occupied atom, in order.
    pub fn atom_sites(&self) -> Vec<usize> {
        self.fill.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect()
    }
}

/// Where the two spin components of one atom currently are (half-site units).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionTag {
    pub spin0: i64,
    pub spin1: i64,
}

impl PositionTag {
    fn home(site: usize) -> Self {
        let p = 2 * site as i64;
        Self { spin0: p, spin1: p }
    }

    pub fn separated(&self) -> bool {
        self.spin0 != self.spin1
    }

    pub fn of(&self, spin: u8) -> i64 {
        if spin == 0 { self.spin0 } else { self.spin1 }
    }

    /// Signed separation (spin-|0⟩ minus spin-|1⟩) in lattice sites.
    pub fn separation_sites(&self) -> f64 {
        (self.spin0 - self.spin1) as f64 / 2.0
    }
}

/// Two components of different atoms and opposite spin on one site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Contact {
    pub atom_a: usize,
    pub spin_a: u8,
    pub atom_b: usize,
    pub spin_b: u8,
}

/// Tracks position tags of all occupied atoms through a sequence.
#[derive(Clone, Debug)]
pub struct Layout {
    sites: usize,
    boundary: Boundary,
    homes: Vec<usize>,
    tags: Vec<PositionTag>,
}

impl Layout {
    pub fn new(chain: &Chain) -> Self {
        let homes = chain.atom_sites();
        let tags = homes.iter().map(|&s| PositionTag::home(s)).collect();
        Self { sites: chain.sites(), boundary: chain.boundary, homes, tags }
    }

    pub fn tags(&self) -> &[PositionTag] {
        &self.tags
    }

    pub fn homes(&self) -> &[usize] {
        &self.homes
    }

    pub fn any_separated(&self) -> bool {
        self.tags.iter().any(PositionTag::separated)
    }

    fn wrap(&self, p: i64) -> i64 {
        match self.boundary {
            Boundary::Open => p,
            Boundary::Ring => p.rem_euclid(2 * self.sites as i64),
        }
    }

    pub fn shift(&mut self, direction: i8) {
        let d = direction as i64;
        for i in 0..self.tags.len() {
            let t = self.tags[i];
            self.tags[i] = PositionTag { spin0: self.wrap(t.spin0 - d), spin1: self.wrap(t.spin1 + d) };
        }
    }

    pub fn flip(&mut self) {
        for t in &mut self.tags {
            std::mem::swap(&mut t.spin0, &mut t.spin1);
        }
    }

    pub fn return_home(&mut self) {
        for (t, &h) in self.tags.iter_mut().zip(&self.homes) {
            *t = PositionTag::home(h);
        }
    }

    /// Whether every component is at most one transport step from home.
    fn adjacent_to_home(&self) -> bool {
        let n = 2 * self.sites as i64;
        self.tags.iter().zip(&self.homes).all(|(t, &h)| {
            let h = 2 * h as i64;
            [t.spin0, t.spin1].iter().all(|&p| {
                let d = match self.boundary {
                    Boundary::Open => (p - h).abs(),
                    Boundary::Ring => (p - h).rem_euclid(n).min((h - p).rem_euclid(n)),
                };
                d <= 1
            })
        })
    }

    /// Components outside the span of occupied-lattice home positions.
    fn out_of_bounds(&self) -> Vec<(usize, i64)> {
        if self.boundary == Boundary::Ring {
            return Vec::new();
        }
        let hi = 2 * (self.sites as i64 - 1);
        let mut out = Vec::new();
        for (i, t) in self.tags.iter().enumerate() {
            for p in [t.spin0, t.spin1] {
                if p < 0 || p > hi {
                    out.push((i, p));
                }
            }
        }
        out
    }

    /// Co-located opposite-spin components of distinct atoms. Ordered by site.
    pub fn contacts(&self) -> Vec<Contact> {
        let mut by_pos: BTreeMap<i64, Vec<(usize, u8)>> = BTreeMap::new();
        for (i, t) in self.tags.iter().enumerate() {
            by_pos.entry(t.spin0).or_default().push((i, 0));
            if t.spin1 != t.spin0 {
                by_pos.entry(t.spin1).or_default().push((i, 1));
            }
        }
        let mut out = Vec::new();
        for group in by_pos.values() {
            for x in 0..group.len() {
                for y in x + 1..group.len() {
                    let (a, sa) = group[x];
                    let (b, sb) = group[y];
                    if a != b && sa != sb {
                        // Report with the spin-|1⟩ member first.
                        let (a, sa, b, sb) = if sa == 1 { (a, sa, b, sb) } else { (b, sb, a, sa) };
                        out.push(Contact { atom_a: a, spin_a: sa, atom_b: b, spin_b: sb });
                    }
                }
            }
        }
        out
    }
}

/// A problem found by [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoSites,
    MissingTerminal,
    MultipleTerminals { count: usize },
    AfterTerminal { index: usize },
    AreaOutOfRange { index: usize, area: f64 },
    BadHold { index: usize, duration: f64 },
    BadShift { index: usize, direction: i8 },
    BadAxisPhase { index: usize },
    RotationWhileSeparated { index: usize, area: f64 },
    ReturnNotAdjacent { index: usize },
    OutOfBounds { index: usize, atom: usize, position: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoSites => f.write_str("lattice has no sites"),
            Violation::MissingTerminal => f.write_str("missing terminal Return or Freeze"),
            Violation::MultipleTerminals { count } => write!(f, "multiple terminals ({count})"),
            Violation::AfterTerminal { index } => {
                write!(f, "instruction {index} follows the terminal and is not a final rotation")
            }
            Violation::AreaOutOfRange { index, area } => {
                write!(f, "instruction {index}: rotation area {area} outside [0, 2π]")
            }
            Violation::BadHold { index, duration } => {
                write!(f, "instruction {index}: hold duration {duration} must be finite and >= 0")
            }
            Violation::BadShift { index, direction } => {
                write!(f, "instruction {index}: shift direction {direction} must be ±1")
            }
            Violation::BadAxisPhase { index } => write!(f, "instruction {index}: non-finite axis phase"),
            Violation::RotationWhileSeparated { index, area } => write!(
                f,
                "instruction {index}: rotation of area {area} while spin components are separated"
            ),
            Violation::ReturnNotAdjacent { index } => {
                write!(f, "instruction {index}: return with components more than one step from home")
            }
            Violation::OutOfBounds { index, atom, position } => write!(
                f,
                "instruction {index}: atom {atom} component leaves the lattice (half-site {position})"
            ),
        }
    }
}

/// An executable, immutable protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    instructions: Vec<Instruction>,
    chain: Chain,
}

impl PulseSequence {
    pub fn new(instructions: Vec<Instruction>, chain: Chain) -> Self {
        Self { instructions, chain }
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn n_sites(&self) -> usize {
        self.chain.sites()
    }

    pub fn n_atoms(&self) -> usize {
        self.chain.occupied()
    }

    /// Same instructions on a different chain (occupancy, boundary).
    pub fn on_chain(&self, chain: Chain) -> Self {
        Self { instructions: self.instructions.clone(), chain }
    }

    /// Same chain, every rotation area passed through `f(index, area)`.
    pub fn map_areas(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let mut k = 0;
        let instructions = self
            .instructions
            .iter()
            .map(|ins| match *ins {
                Instruction::Rotate { area, axis_phase } => {
                    let area = f(k, area);
                    k += 1;
                    Instruction::Rotate { area, axis_phase }
                }
                other => other,
            })
            .collect();
        Self { instructions, chain: self.chain.clone() }
    }

    pub fn terminal(&self) -> Option<Instruction> {
        self.instructions.iter().copied().find(Instruction::is_terminal)
    }

    pub fn total_hold(&self) -> f64 {
        self.instructions
            .iter()
            .map(|i| if let Instruction::Hold(t) = i { *t } else { 0.0 })
            .sum()
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        validate(self)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# latticegate pulse sequence v1\n");
        s.push_str(&format!("sites {}\n", self.chain.sites()));
        let mask: String = self.chain.fill.iter().map(|&f| if f { '1' } else { '0' }).collect();
        s.push_str(&format!("fill {mask}\n"));
        let boundary = match self.chain.boundary {
            Boundary::Open => "open",
            Boundary::Ring => "ring",
        };
        s.push_str(&format!("boundary {boundary}\n"));
        let edge = match self.chain.edge {
            EdgePolicy::Empty => "empty",
            EdgePolicy::Strict => "strict",
        };
        s.push_str(&format!("edge {edge}\n"));
        for ins in &self.instructions {
            s.push_str(&ins.to_string());
            s.push('\n');
        }
        s
    }
}

impl FromStr for PulseSequence {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let mut sites: Option<usize> = None;
        let mut fill: Option<Vec<bool>> = None;
        let mut boundary = Boundary::Open;
        let mut edge = EdgePolicy::Empty;
        let mut instructions = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            let float = |s: &str| {
                s.parse::<f64>().map_err(|_| perr(line, format!("expected a number, got {s:?}")))
            };
            let arity = |n: usize| {
                if fields.len() != n + 1 {
                    Err(perr(line, format!("{} takes {n} field(s)", fields[0])))
                } else {
                    Ok(())
                }
            };
            match fields[0] {
                "sites" => {
                    arity(1)?;
                    sites = Some(
                        fields[1]
                            .parse()
                            .map_err(|_| perr(line, format!("bad site count {:?}", fields[1])))?,
                    );
                }
                "fill" => {
                    arity(1)?;
                    let mask = fields[1]
                        .chars()
                        .map(|c| match c {
                            '1' => Ok(true),
                            '0' => Ok(false),
                            _ => Err(perr(line, format!("fill mask may only contain 0/1, got {c:?}"))),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    fill = Some(mask);
                }
                "boundary" => {
                    arity(1)?;
                    boundary = match fields[1] {
                        "open" => Boundary::Open,
                        "ring" => Boundary::Ring,
                        other => return Err(perr(line, format!("unknown boundary {other:?}"))),
                    };
                }
                "edge" => {
                    arity(1)?;
                    edge = match fields[1] {
                        "empty" => EdgePolicy::Empty,
                        "strict" => EdgePolicy::Strict,
                        other => return Err(perr(line, format!("unknown edge policy {other:?}"))),
                    };
                }
                "rotate" => {
                    arity(2)?;
                    instructions.push(Instruction::Rotate {
                        area: float(fields[1])?,
                        axis_phase: float(fields[2])?,
                    });
                }
                "shift" => {
                    arity(1)?;
                    let d: i8 = fields[1]
                        .trim_start_matches('+')
                        .parse()
                        .map_err(|_| perr(line, format!("bad shift direction {:?}", fields[1])))?;
                    instructions.push(Instruction::Shift(d));
                }
                "hold" => {
                    arity(1)?;
                    instructions.push(Instruction::Hold(float(fields[1])?));
                }
                "return" => {
                    arity(0)?;
                    instructions.push(Instruction::Return);
                }
                "freeze" => {
                    arity(0)?;
                    instructions.push(Instruction::Freeze);
                }
                other => return Err(perr(line, format!("unknown instruction {other:?}"))),
            }
        }
        let fill = match (sites, fill) {
            (Some(n), Some(f)) if f.len() != n => {
                return Err(perr(0, format!("fill mask has {} entries for {n} sites", f.len())))
            }
            (_, Some(f)) => f,
            (Some(n), None) => vec![true; n],
            (None, None) => return Err(perr(0, "missing `sites` line".into())),
        };
        Ok(Self::new(instructions, Chain { fill, boundary, edge }))
    }
}

/// Check structural invariants and walk the position tags; returns every
/// violation found.
pub fn validate(seq: &PulseSequence) -> std::result::Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    let chain = seq.chain();
    if chain.sites() == 0 {
        v.push(Violation::NoSites);
    }
    let terminals: Vec<usize> = seq
        .instructions()
        .iter()
        .enumerate()
        .filter(|(_, i)| i.is_terminal())
        .map(|(k, _)| k)
        .collect();
    match terminals.len() {
        0 => v.push(Violation::MissingTerminal),
        1 => {
            let t = terminals[0];
            let terminal = seq.instructions()[t];
            for (k, ins) in seq.instructions().iter().enumerate().skip(t + 1) {
                let allowed =
                    terminal == Instruction::Return && matches!(ins, Instruction::Rotate { .. });
                if !allowed {
                    v.push(Violation::AfterTerminal { index: k });
                }
            }
        }
        n => v.push(Violation::MultipleTerminals { count: n }),
    }

    let mut layout = Layout::new(chain);
    for (k, ins) in seq.instructions().iter().enumerate() {
        match *ins {
            Instruction::Rotate { area, axis_phase } => {
                if !(0.0..=2.0 * PI * (1.0 + 1e-12)).contains(&area) {
                    v.push(Violation::AreaOutOfRange { index: k, area });
                }
                if !axis_phase.is_finite() {
                    v.push(Violation::BadAxisPhase { index: k });
                }
                if layout.any_separated() {
                    if is_flip(area) {
                        layout.flip();
                    } else {
                        v.push(Violation::RotationWhileSeparated { index: k, area });
                    }
                }
            }
            Instruction::Shift(d) => {
                if d != 1 && d != -1 {
                    v.push(Violation::BadShift { index: k, direction: d });
                    continue;
                }
                layout.shift(d);
                if chain.edge == EdgePolicy::Strict {
                    for (atom, position) in layout.out_of_bounds() {
                        v.push(Violation::OutOfBounds { index: k, atom, position });
                    }
                }
            }
            Instruction::Hold(t) => {
                if !(t >= 0.0) || !t.is_finite() {
                    v.push(Violation::BadHold { index: k, duration: t });
                }
            }
            Instruction::Return => {
                if !layout.adjacent_to_home() {
                    v.push(Violation::ReturnNotAdjacent { index: k });
                }
                layout.return_home();
            }
            Instruction::Freeze => {}
        }
    }
    if v.is_empty() { Ok(()) } else { Err(v) }
}

/// Assembles members of the protocol family.
#[derive(Clone, Debug)]
pub struct ProtocolBuilder {
    chain: Chain,
    t_hold: f64,
    echo: bool,
}

impl ProtocolBuilder {
    pub fn new(chain: Chain, t_hold: f64) -> Self {
        Self { chain, t_hold, echo: true }
    }

    /// Drop the mid-hold π pulse and hold in one piece.
    pub fn without_echo(mut self) -> Self {
        self.echo = false;
        self
    }

    fn collide(&self) -> Vec<Instruction> {
        let mut v = vec![
            Instruction::Rotate { area: PI / 2.0, axis_phase: PREP_AXIS },
            Instruction::Shift(1),
        ];
        if self.echo {
            v.push(Instruction::Hold(self.t_hold / 2.0));
            v.push(Instruction::Rotate { area: PI, axis_phase: ECHO_AXIS });
            v.push(Instruction::Hold(self.t_hold / 2.0));
        } else {
            v.push(Instruction::Hold(self.t_hold));
        }
        v
    }

    /// Collide and return, no final pulse: the entangled register itself.
    pub fn entangling(&self) -> PulseSequence {
        let mut v = self.collide();
        v.push(Instruction::Return);
        PulseSequence::new(v, self.chain.clone())
    }

    pub fn returning(&self, alpha: f64) -> PulseSequence {
        let mut v = self.collide();
        v.push(Instruction::Return);
        v.push(Instruction::Rotate { area: PI / 2.0, axis_phase: READOUT_AXIS + alpha });
        PulseSequence::new(v, self.chain.clone())
    }

    pub fn delocalizing(&self) -> PulseSequence {
        let mut v = self.collide();
        // After an echo the components have swapped spin; reversing the
        // transport pushes them further apart instead of rejoining them.
        v.push(Instruction::Shift(if self.echo { -1 } else { 1 }));
        v.push(Instruction::Freeze);
        PulseSequence::new(v, self.chain.clone())
    }
}

/// Split, collide with a mid-hold spin echo, return, and read out at phase α.
pub fn build_return_sequence(chain: &Chain, t_hold: f64, alpha: f64) -> PulseSequence {
    ProtocolBuilder::new(chain.clone(), t_hold).returning(alpha)
}

/// Split, collide with a mid-hold spin echo, then delocalize further over
/// sites j and j+2 and freeze.
pub fn build_delocalize_sequence(chain: &Chain, t_hold: f64) -> PulseSequence {
    ProtocolBuilder::new(chain.clone(), t_hold).delocalizing()
}

pub fn build_entangling_sequence(chain: &Chain, t_hold: f64) -> PulseSequence {
    ProtocolBuilder::new(chain.clone(), t_hold).entangling()
}

/// Position tags after executing the whole sequence.
pub fn final_layout(seq: &PulseSequence) -> Layout {
    let mut layout = Layout::new(seq.chain());
    for ins in seq.instructions() {
        match *ins {
            Instruction::Rotate { area, .. } => {
                if layout.any_separated() && is_flip(area) {
                    layout.flip();
                }
            }
            Instruction::Shift(d) => layout.shift(d),
            Instruction::Return => layout.return_home(),
            Instruction::Hold(_) | Instruction::Freeze => {}
        }
    }
    layout
}
