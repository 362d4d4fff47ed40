//! Experiment configuration files (TOML).
//!
//! The parser walks the document itself instead of going through serde so
//! that every problem (unknown key, wrong type, out-of-range value, missing
//! field) is collected and reported with its line number in one pass.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::Serialize;
use toml::de::{DeTable, DeValue};
use toml::Spanned;

use crate::analysis::TofOptics;
use crate::lattice::{Axis, LatticeBoundary};
use crate::noise::NoiseModel;
use crate::physics::{calibrate_affine, calibrate_through_origin, CalibrationModel, MASS_RB87};
use crate::sequence::Boundary;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Ramsey,
    VisibilityScan,
    Interference,
    InterferenceScan,
    Cluster,
    Percolation,
    Calibrate,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Ramsey,
        Command::VisibilityScan,
        Command::Interference,
        Command::InterferenceScan,
        Command::Cluster,
        Command::Percolation,
        Command::Calibrate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Ramsey => "ramsey",
            Command::VisibilityScan => "visibility-scan",
            Command::Interference => "interference",
            Command::InterferenceScan => "interference-scan",
            Command::Cluster => "cluster",
            Command::Percolation => "percolation",
            Command::Calibrate => "calibrate",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeConfig {
    pub sites: usize,
    pub boundary: Boundary,
    pub echo: bool,
}

/// Anchors are `(t_hold [s], phase [rad])`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationConfig {
    pub anchors: Vec<(f64, f64)>,
    pub through_origin: bool,
}

impl CalibrationConfig {
    pub fn model(&self) -> crate::error::Result<CalibrationModel> {
        if self.through_origin {
            let (t, p) = *self
                .anchors
                .first()
                .ok_or_else(|| crate::error::Error::Calibration("no anchors given".into()))?;
            calibrate_through_origin(t, p)
        } else {
            calibrate_affine(&self.anchors)
        }
    }
}

/// Hold-time grid, seconds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanConfig {
    pub t_hold: f64,
    pub t_start: f64,
    pub t_stop: f64,
    pub t_points: usize,
    pub alpha_points: usize,
    pub x_points: usize,
}

impl ScanConfig {
    pub fn t_grid(&self) -> Vec<f64> {
        crate::analysis::linspace(self.t_start, self.t_stop, self.t_points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterConfig {
    pub dims: [usize; 3],
    pub axes: Vec<Axis>,
    pub p_fill: f64,
    pub boundary: LatticeBoundary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PercolationConfig {
    pub dim: usize,
    pub side: usize,
    pub trials: usize,
    pub tolerance: f64,
    pub estimate: bool,
    pub p_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub seed: u64,
    pub lattice: LatticeConfig,
    pub calibration: CalibrationConfig,
    pub noise: NoiseModel,
    pub scan: ScanConfig,
    pub optics: TofOptics,
    pub cluster: ClusterConfig,
    pub percolation: PercolationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            seed: 0,
            lattice: LatticeConfig { sites: 10, boundary: Boundary::Ring, echo: true },
            calibration: CalibrationConfig { anchors: vec![(210e-6, PI), (450e-6, 2.0 * PI)], through_origin: false },
            noise: NoiseModel::default(),
            scan: ScanConfig {
                t_hold: 210e-6,
                t_start: 0.0,
                t_stop: 600e-6,
                t_points: 41,
                alpha_points: 32,
                x_points: 121,
            },
            optics: TofOptics::default(),
            cluster: ClusterConfig {
                dims: [10, 1, 1],
                axes: vec![Axis::X],
                p_fill: 1.0,
                boundary: LatticeBoundary::Open,
            },
            percolation: PercolationConfig {
                dim: 3,
                side: 48,
                trials: 400,
                tolerance: 0.002,
                estimate: true,
                p_values: Vec::new(),
            },
        }
    }
}

impl ExperimentConfig {
    /// Replace the master seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.noise.seed = seed;
        self
    }

    pub fn calibration_model(&self) -> crate::error::Result<CalibrationModel> {
        self.calibration.model()
    }
}

type Value<'i> = Spanned<DeValue<'i>>;

struct Walker<'t> {
    text: &'t str,
    errors: Vec<ConfigError>,
}

impl<'t> Walker<'t> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err(&mut self, span: Range<usize>, message: impl Into<String>) {
        let line = self.line(span);
        self.errors.push(ConfigError { line, message: message.into() });
    }

    fn check_keys(&mut self, table: &DeTable<'_>, allowed: &[&str], section: &str) {
        for (k, _) in table.iter() {
            if !allowed.contains(&k.get_ref().as_ref()) {
                let where_ = if section.is_empty() { String::new() } else { format!(" in [{section}]") };
                self.err(
                    k.span(),
                    format!("unknown key `{}`{where_} (expected one of: {})", k.get_ref(), allowed.join(", ")),
                );
            }
        }
    }

    fn f64(&mut self, v: &Value<'_>, key: &str) -> Option<f64> {
        let parsed = match v.get_ref() {
            DeValue::Float(f) => f.as_str().parse::<f64>().ok(),
            DeValue::Integer(i) => i64::from_str_radix(i.as_str(), i.radix()).ok().map(|i| i as f64),
            other => {
                self.err(v.span(), format!("`{key}` must be a number, found {}", other.type_str()));
                return None;
            }
        };
        match parsed {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.err(v.span(), format!("`{key}` is not a finite number"));
                None
            }
        }
    }

    fn u64(&mut self, v: &Value<'_>, key: &str) -> Option<u64> {
        match v.get_ref() {
            DeValue::Integer(i) => match u64::from_str_radix(i.as_str(), i.radix()) {
                Ok(x) => Some(x),
                Err(_) => {
                    self.err(v.span(), format!("`{key}` must be a non-negative integer"));
                    None
                }
            },
            other => {
                self.err(v.span(), format!("`{key}` must be an integer, found {}", other.type_str()));
                None
            }
        }
    }

    fn usize(&mut self, v: &Value<'_>, key: &str) -> Option<usize> {
        self.u64(v, key).and_then(|x| usize::try_from(x).ok())
    }

    fn bool(&mut self, v: &Value<'_>, key: &str) -> Option<bool> {
        match v.get_ref() {
            DeValue::Boolean(b) => Some(*b),
            other => {
                self.err(v.span(), format!("`{key}` must be a boolean, found {}", other.type_str()));
                None
            }
        }
    }

    fn str<'v>(&mut self, v: &'v Value<'_>, key: &str) -> Option<&'v str> {
        match v.get_ref() {
            DeValue::String(s) => Some(s.as_ref()),
            other => {
                self.err(v.span(), format!("`{key}` must be a string, found {}", other.type_str()));
                None
            }
        }
    }

    fn array<'v, 'i>(&mut self, v: &'v Value<'i>, key: &str) -> Option<&'v [Value<'i>]> {
        match v.get_ref() {
            DeValue::Array(a) => Some(a),
            other => {
                self.err(v.span(), format!("`{key}` must be an array, found {}", other.type_str()));
                None
            }
        }
    }

    fn table<'v, 'i>(&mut self, v: &'v Value<'i>, key: &str) -> Option<&'v DeTable<'i>> {
        match v.get_ref() {
            DeValue::Table(t) => Some(t),
            other => {
                self.err(v.span(), format!("`{key}` must be a table, found {}", other.type_str()));
                None
            }
        }
    }

    /// A number checked against a predicate.
    fn number(&mut self, v: &Value<'_>, key: &str, ok: impl Fn(f64) -> bool, what: &str) -> Option<f64> {
        let x = self.f64(v, key)?;
        if ok(x) {
            Some(x)
        } else {
            self.err(v.span(), format!("`{key}` {what}, got {x}"));
            None
        }
    }

    fn count(&mut self, v: &Value<'_>, key: &str, min: usize) -> Option<usize> {
        let x = self.usize(v, key)?;
        if x >= min {
            Some(x)
        } else {
            self.err(v.span(), format!("`{key}` must be >= {min}, got {x}"));
            None
        }
    }
}

fn nonneg(x: f64) -> bool {
    x >= 0.0
}

fn positive(x: f64) -> bool {
    x > 0.0
}

fn probability(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Parse and validate a configuration; every problem is reported.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let doc = match DeTable::parse(text) {
        Ok(d) => d,
        Err(e) => {
            let w = Walker { text, errors: Vec::new() };
            let line = e.span().map(|s| w.line(s)).unwrap_or(1);
            return Err(vec![ConfigError { line, message: e.message().trim().to_string() }]);
        }
    };
    let mut w = Walker { text, errors: Vec::new() };
    let mut cfg = ExperimentConfig::default();
    let root = doc.get_ref();
    w.check_keys(
        root,
        &["command", "seed", "lattice", "calibration", "noise", "scan", "optics", "cluster", "percolation"],
        "",
    );
    let mut seed_set = false;

    for (k, v) in root.iter() {
        match k.get_ref().as_ref() {
            "command" => {
                if let Some(s) = w.str(v, "command") {
                    match s.parse() {
                        Ok(c) => cfg.command = Some(c),
                        Err(e) => w.err(v.span(), e),
                    }
                }
            }
            "seed" => {
                if let Some(s) = w.u64(v, "seed") {
                    cfg.seed = s;
                    seed_set = true;
                }
            }
            "lattice" => {
                if let Some(t) = w.table(v, "lattice") {
                    parse_lattice(&mut w, t, &mut cfg.lattice);
                }
            }
            "calibration" => {
                if let Some(t) = w.table(v, "calibration") {
                    parse_calibration(&mut w, t, v.span(), &mut cfg.calibration);
                }
            }
            "noise" => {
                if let Some(t) = w.table(v, "noise") {
                    parse_noise(&mut w, t, &mut cfg.noise);
                }
            }
            "scan" => {
                if let Some(t) = w.table(v, "scan") {
                    parse_scan(&mut w, t, &mut cfg.scan);
                }
            }
            "optics" => {
                if let Some(t) = w.table(v, "optics") {
                    parse_optics(&mut w, t, &mut cfg.optics);
                }
            }
            "cluster" => {
                if let Some(t) = w.table(v, "cluster") {
                    parse_cluster(&mut w, t, &mut cfg.cluster);
                }
            }
            "percolation" => {
                if let Some(t) = w.table(v, "percolation") {
                    parse_percolation(&mut w, t, &mut cfg.percolation);
                }
            }
            _ => {}
        }
    }
    if cfg.command.is_none() {
        w.errors.push(ConfigError { line: 1, message: "missing required key `command`".into() });
    }
    if !seed_set {
        cfg.seed = 0;
    }
    cfg.noise.seed = cfg.seed;

    if w.errors.is_empty() {
        Ok(cfg)
    } else {
        w.errors.sort_by_key(|e| e.line);
        Err(w.errors)
    }
}

fn parse_lattice(w: &mut Walker<'_>, t: &DeTable<'_>, out: &mut LatticeConfig) {
    w.check_keys(t, &["sites", "boundary", "echo"], "lattice");
    for (k, v) in t.iter() {
        match k.get_ref().as_ref() {
            "sites" => {
                if let Some(n) = w.count(v, "sites", 1) {
                    let limit = crate::statevec::EngineConfig::default().max_qubits;
                    if n > limit {
                        w.err(v.span(), format!("`sites` = {n} exceeds the state-vector limit of {limit}"));
                    } else {
                        out.sites = n;
                    }
                }
            }
            "boundary" => match w.str(v, "boundary") {
                Some("open") => out.boundary = Boundary::Open,
                Some("ring") => out.boundary = Boundary::Ring,
                Some(other) => w.err(v.span(), format!("`boundary` must be \"open\" or \"ring\", got {other:?}")),
                None => {}
            },
            "echo" => {
                if let Some(b) = w.bool(v, "echo") {
                    out.echo = b;
                }
            }
            _ => {}
        }
    }
}

fn parse_calibration(w: &mut Walker<'_>, t: &DeTable<'_>, span: Range<usize>, out: &mut CalibrationConfig) {
    w.check_keys(t, &["anchors", "through_origin"], "calibration");
    for (k, v) in t.iter() {
        match k.get_ref().as_ref() {
            "anchors" => {
                let Some(items) = w.array(v, "anchors") else { continue };
                let mut anchors = Vec::new();
                for item in items {
                    let Some(a) = w.table(item, "anchors[]") else { continue };
                    w.check_keys(a, &["t_us", "phase_pi"], "calibration.anchors");
                    let t_us = a.get("t_us").and_then(|x| w.number(x, "t_us", nonneg, "must be >= 0"));
                    let ph = a.get("phase_pi").and_then(|x| w.f64(x, "phase_pi"));
                    match (t_us, ph) {
                        (Some(t_us), Some(ph)) => anchors.push((t_us * 1e-6, ph * PI)),
                        _ if a.get("t_us").is_none() || a.get("phase_pi").is_none() => {
                            w.err(item.span(), "anchor needs both `t_us` and `phase_pi`")
                        }
                        _ => {}
                    }
                }
                out.anchors = anchors;
            }
            "through_origin" => {
                if let Some(b) = w.bool(v, "through_origin") {
                    out.through_origin = b;
                }
            }
            _ => {}
        }
    }
    if let Err(e) = out.model() {
        w.err(span, e.to_string());
    }
}

fn parse_noise(w: &mut Walker<'_>, t: &DeTable<'_>, out: &mut NoiseModel) {
    w.check_keys(
        t,
        &[
            "p_fill",
            "pulse_area_error",
            "pulse_area_jitter",
            "dephasing_sigma",
            "dephasing_growth",
            "loss_per_atom",
            "ensemble_size",
        ],
        "noise",
    );
    for (k, v) in t.iter() {
        let key = k.get_ref().as_ref();
        match key {
            "p_fill" => {
                if let Some(x) = w.number(v, key, probability, "must lie in [0, 1]") {
                    out.p_fill = x;
                }
            }
            "loss_per_atom" => {
                if let Some(x) = w.number(v, key, probability, "must lie in [0, 1]") {
                    out.loss_per_atom = x;
                }
            }
            "pulse_area_error" => {
                if let Some(x) = w.number(v, key, |x| x > -1.0, "must be > -1") {
                    out.pulse_area_error = x;
                }
            }
            "pulse_area_jitter" | "dephasing_sigma" | "dephasing_growth" => {
                if let Some(x) = w.number(v, key, nonneg, "must be >= 0") {
                    match key {
                        "pulse_area_jitter" => out.pulse_area_jitter = x,
                        "dephasing_sigma" => out.dephasing_sigma = x,
                        _ => out.dephasing_growth = x,
                    }
                }
            }
            "ensemble_size" => {
                if let Some(n) = w.count(v, key, 1) {
                    out.ensemble_size = n;
                }
            }
            _ => {}
        }
    }
}

fn parse_scan(w: &mut Walker<'_>, t: &DeTable<'_>, out: &mut ScanConfig) {
    w.check_keys(
        t,
        &["t_hold_us", "t_start_us", "t_stop_us", "t_points", "alpha_points", "x_points"],
        "scan",
    );
    for (k, v) in t.iter() {
        let key = k.get_ref().as_ref();
        match key {
            "t_hold_us" | "t_start_us" | "t_stop_us" => {
                if let Some(x) = w.number(v, key, nonneg, "must be >= 0") {
                    match key {
                        "t_hold_us" => out.t_hold = x * 1e-6,
                        "t_start_us" => out.t_start = x * 1e-6,
                        _ => out.t_stop = x * 1e-6,
                    }
                }
            }
            "t_points" => {
                if let Some(n) = w.count(v, key, 1) {
                    out.t_points = n;
                }
            }
            "alpha_points" => {
                if let Some(n) = w.count(v, key, 8) {
                    out.alpha_points = n;
                }
            }
            "x_points" => {
                if let Some(n) = w.count(v, key, 8) {
                    out.x_points = n;
                }
            }
            _ => {}
        }
    }
    if out.t_stop < out.t_start {
        let span = t.get("t_stop_us").map(|v| v.span()).unwrap_or(0..0);
        w.err(span, "`t_stop_us` must not be smaller than `t_start_us`");
    }
}

fn parse_optics(w: &mut Walker<'_>, t: &DeTable<'_>, out: &mut TofOptics) {
    w.check_keys(t, &["wavelength_x_nm", "envelope_width_nm", "tof_ms"], "optics");
    let mut width_set = false;
    for (k, v) in t.iter() {
        let key = k.get_ref().as_ref();
        if let Some(x) = w.number(v, key, positive, "must be > 0") {
            match key {
                "wavelength_x_nm" => out.wavelength_x = x * 1e-9,
                "envelope_width_nm" => {
                    out.envelope_width = x * 1e-9;
                    width_set = true;
                }
                "tof_ms" => out.tof = x * 1e-3,
                _ => {}
            }
        }
    }
    if !width_set {
        out.envelope_width = out.wavelength_x / 8.0;
    }
    out.mass = MASS_RB87;
}

fn parse_cluster(w: &mut Walker<'_>, t: &DeTable<'_>, out: &mut ClusterConfig) {
    w.check_keys(t, &["dims", "axes", "p_fill", "boundary"], "cluster");
    let mut axes_set = false;
    for (k, v) in t.iter() {
        let key = k.get_ref().as_ref();
        match key {
            "dims" => {
                let Some(items) = w.array(v, key) else { continue };
                if items.is_empty() || items.len() > 3 {
                    w.err(v.span(), "`dims` must list 1 to 3 extents");
                    continue;
                }
                let mut dims = [1usize; 3];
                for (d, item) in dims.iter_mut().zip(items) {
                    if let Some(n) = w.count(item, "dims[]", 1) {
                        *d = n;
                    }
                }
                out.dims = dims;
            }
            "axes" => {
                let Some(items) = w.array(v, key) else { continue };
                let mut axes = Vec::new();
                for item in items {
                    match w.str(item, "axes[]") {
                        Some("x") => axes.push(Axis::X),
                        Some("y") => axes.push(Axis::Y),
                        Some("z") => axes.push(Axis::Z),
                        Some(other) => w.err(item.span(), format!("unknown axis {other:?}")),
                        None => {}
                    }
                }
                if axes.is_empty() {
                    w.err(v.span(), "`axes` must not be empty");
                }
                out.axes = axes;
                axes_set = true;
            }
            "p_fill" => {
                if let Some(x) = w.number(v, key, probability, "must lie in [0, 1]") {
                    out.p_fill = x;
                }
            }
            "boundary" => match w.str(v, key) {
                Some("open") => out.boundary = LatticeBoundary::Open,
                Some("periodic") => out.boundary = LatticeBoundary::Periodic,
                Some(other) => w.err(v.span(), format!("`boundary` must be \"open\" or \"periodic\", got {other:?}")),
                None => {}
            },
            _ => {}
        }
    }
    if !axes_set {
        let active = crate::lattice::Dims(out.dims).active_axes();
        out.axes = if active.is_empty() { vec![Axis::X] } else { active };
    }
}

fn parse_percolation(w: &mut Walker<'_>, t: &DeTable<'_>, out: &mut PercolationConfig) {
    w.check_keys(t, &["dim", "side", "trials", "tolerance", "estimate", "p_values"], "percolation");
    for (k, v) in t.iter() {
        let key = k.get_ref().as_ref();
        match key {
            "dim" => {
                if let Some(d) = w.usize(v, key) {
                    if (1..=3).contains(&d) {
                        out.dim = d;
                    } else {
                        w.err(v.span(), format!("`dim` must be 1, 2 or 3, got {d}"));
                    }
                }
            }
            "side" => {
                if let Some(n) = w.count(v, key, 1) {
                    out.side = n;
                }
            }
            "trials" => {
                if let Some(n) = w.count(v, key, 1) {
                    out.trials = n;
                }
            }
            "tolerance" => {
                if let Some(x) = w.number(v, key, positive, "must be > 0") {
                    out.tolerance = x;
                }
            }
            "estimate" => {
                if let Some(b) = w.bool(v, key) {
                    out.estimate = b;
                }
            }
            "p_values" => {
                let Some(items) = w.array(v, key) else { continue };
                out.p_values = items
                    .iter()
                    .filter_map(|item| w.number(item, "p_values[]", probability, "must lie in [0, 1]"))
                    .collect();
            }
            _ => {}
        }
    }
    if out.estimate && (out.side < 16 || out.trials < 100) {
        let span = t.get("estimate").or_else(|| t.get("side")).map(|v| v.span()).unwrap_or(0..0);
        w.err(span, "threshold estimation needs `side` >= 16 and `trials` >= 100");
    }
}
