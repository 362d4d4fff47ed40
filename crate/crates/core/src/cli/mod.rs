//! Experiment runner behind the `latticegate` binary: configs in, CSV plus
//! JSON sidecars out.

pub mod config;
pub mod recipes;

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::analysis::{
    alpha_grid, interference_pattern, interference_visibility_curve, linspace, pattern_visibility, ramsey_scan,
    visibility_curve, write_curve_csv, write_fringe_csv, write_pattern_csv, Scenario,
};
use crate::clifford::{component_sizes, generate_cluster, verify_generators, write_size_histogram, SiteLattice};
use crate::error::{Error, Result};
use crate::lattice::Dims;
use crate::percolation::{cluster_size_stats, estimate_threshold, run_trial, write_stats_csv};
use crate::sequence::{Boundary, Chain};

pub use config::{parse_config, Command, ConfigError, ExperimentConfig};

/// Environment variable that caps the worker thread count.
pub const THREADS_ENV: &str = "LATTICEGATE_THREADS";

/// Files written by one command, in the order they were written.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    /// One human-readable line per result, for the terminal.
    pub summary: Vec<String>,
}

/// Writes files and removes everything it wrote if the run fails.
struct Output<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
    config_text: &'a str,
    config: &'a ExperimentConfig,
}

impl<'a> Output<'a> {
    fn new(dir: &'a Path, config_text: &'a str, config: &'a ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir, written: Vec::new(), config_text, config })
    }

    /// Write `bytes` to `name` and a `name.json` sidecar.
    fn artifact(&mut self, name: &str, bytes: &[u8], results: serde_json::Value) -> Result<()> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, bytes)?;
        let sidecar = json!({
            "artifact": name,
            "sha256": hex(&Sha256::digest(bytes)),
            "command": self.config.command.map(Command::name),
            "seed": self.config.seed,
            "config_sha256": hex(&Sha256::digest(self.config_text.as_bytes())),
            "config_text": self.config_text,
            "config": self.config,
            "results": results,
            "version": crate::VERSION,
            "rng": crate::rng::RNG_ID,
        });
        let side = self.dir.join(format!("{name}.json"));
        self.written.push(side.clone());
        fs::write(&side, serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok(())
    }

    fn discard(self) {
        for p in self.written {
            let _ = fs::remove_file(p);
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// The simulated setup a config describes; the noise seed is the run seed.
pub fn scenario(cfg: &ExperimentConfig) -> Result<Scenario> {
    let chain = match cfg.lattice.boundary {
        Boundary::Open => Chain::open(cfg.lattice.sites),
        Boundary::Ring => Chain::ring(cfg.lattice.sites),
    };
    let mut noise = cfg.noise.clone();
    noise.seed = cfg.seed;
    let sc = Scenario::new(chain, cfg.calibration_model()?).with_noise(noise);
    Ok(if cfg.lattice.echo { sc } else { sc.without_echo() })
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Run one configured command, writing `<stem>.csv` (and sidecars) into `out`.
pub fn run_command(cfg: &ExperimentConfig, config_text: &str, out: &Path, stem: Option<&str>) -> Result<Artifacts> {
    let command = cfg.command.ok_or_else(|| Error::Domain("config names no command".into()))?;
    let mut output = Output::new(out, config_text, cfg)?;
    match execute(command, cfg, &mut output, stem) {
        Ok(summary) => Ok(Artifacts { files: output.written, summary }),
        Err(e) => {
            output.discard();
            Err(e)
        }
    }
}

fn execute(command: Command, cfg: &ExperimentConfig, out: &mut Output<'_>, stem: Option<&str>) -> Result<Vec<String>> {
    let name = |default: &str| format!("{}.csv", stem.unwrap_or(default));
    let mut summary = Vec::new();
    match command {
        Command::Ramsey => {
            let sc = scenario(cfg)?;
            let fringe = ramsey_scan(&sc, cfg.scan.t_hold, &alpha_grid(cfg.scan.alpha_points))?;
            let fit = fringe.fit()?;
            let bytes = csv_bytes(|b| write_fringe_csv(b, &fringe))?;
            let file = name("ramsey");
            summary.push(format!(
                "{file}: t_hold = {:.1} us, visibility = {:.4}, offset = {:.4}",
                cfg.scan.t_hold * 1e6,
                fit.visibility,
                fit.offset
            ));
            out.artifact(&file, &bytes, serde_json::to_value(fit)?)?;
        }
        Command::VisibilityScan => {
            let sc = scenario(cfg)?;
            let pts = visibility_curve(&sc, &cfg.scan.t_grid(), &alpha_grid(cfg.scan.alpha_points))?;
            let bytes = csv_bytes(|b| write_curve_csv(b, &pts))?;
            let file = name("visibility");
            summary.push(format!("{file}: {} hold times", pts.len()));
            out.artifact(&file, &bytes, json!({ "points": pts.len() }))?;
        }
        Command::Interference => {
            let sc = scenario(cfg)?;
            let optics = cfg.optics;
            let pattern = interference_pattern(&sc, cfg.scan.t_hold, &optics)?;
            let s = optics.envelope_far_field();
            let x = linspace(-3.0 * s, 3.0 * s, cfg.scan.x_points);
            let intensity = pattern.sample(&x);
            let fit = pattern_visibility(&x, &intensity, &optics)?;
            let bytes = csv_bytes(|b| write_pattern_csv(b, &x, &intensity))?;
            let file = name("interference");
            summary.push(format!(
                "{file}: t_hold = {:.1} us, pattern visibility = {:.4}",
                cfg.scan.t_hold * 1e6,
                fit.visibility
            ));
            out.artifact(&file, &bytes, serde_json::to_value(fit)?)?;
        }
        Command::InterferenceScan => {
            let sc = scenario(cfg)?;
            let pts = interference_visibility_curve(&sc, &cfg.scan.t_grid(), &cfg.optics)?;
            let bytes = csv_bytes(|b| write_curve_csv(b, &pts))?;
            let file = name("interference_visibility");
            summary.push(format!("{file}: {} hold times", pts.len()));
            out.artifact(&file, &bytes, json!({ "points": pts.len() }))?;
        }
        Command::Cluster => {
            let c = &cfg.cluster;
            let dims = Dims::new(c.dims[0], c.dims[1], c.dims[2])?;
            let mask = run_trial(dims, c.p_fill, cfg.seed)?.mask;
            let mut lattice = SiteLattice::with_occupancy(dims, mask)?;
            lattice.boundary = c.boundary;
            let (tableau, graph) = generate_cluster(&lattice, &c.axes)?;
            let verified = verify_generators(&tableau, &lattice, &c.axes)?;
            if !verified {
                return Err(Error::Domain("generated tableau failed graph-state verification".into()));
            }
            let sizes = component_sizes(&graph);
            let bytes = csv_bytes(|b| write_size_histogram(b, &sizes))?;
            let file = name("cluster_sizes");
            summary.push(format!(
                "{file}: {} qubits, {} bonds, {} components, largest {}",
                graph.n(),
                graph.edge_count(),
                sizes.len(),
                sizes.first().copied().unwrap_or(0)
            ));
            out.artifact(
                &file,
                &bytes,
                json!({
                    "qubits": graph.n(),
                    "bonds": graph.edge_count(),
                    "components": sizes.len(),
                    "largest": sizes.first(),
                    "verified": verified,
                }),
            )?;
            if tableau.n() <= 64 {
                let dump = tableau.dump()?;
                let tfile = format!("{}.txt", stem.unwrap_or("tableau"));
                out.artifact(&tfile, dump.as_bytes(), json!({ "qubits": tableau.n() }))?;
            }
        }
        Command::Percolation => {
            let p = &cfg.percolation;
            let dims = Dims::cube(p.dim, p.side)?;
            let rows = p
                .p_values
                .iter()
                .map(|&q| cluster_size_stats(dims, q, p.trials, cfg.seed))
                .collect::<Result<Vec<_>>>()?;
            let estimate =
                if p.estimate { Some(estimate_threshold(p.dim, p.side, p.trials, p.tolerance, cfg.seed)?) } else { None };
            let bytes = csv_bytes(|b| write_stats_csv(b, &rows))?;
            let file = name("percolation");
            if let Some(e) = &estimate {
                summary.push(format!("{file}: p_c = {:.4} ± {:.4} (L = {}, {} trials)", e.p_c, e.stderr, p.side, p.trials));
            } else {
                summary.push(format!("{file}: {} fill probabilities", rows.len()));
            }
            out.artifact(&file, &bytes, json!({ "threshold": estimate }))?;
        }
        Command::Calibrate => {
            let cal = cfg.calibration_model()?;
            let mut text = String::from("t_hold_us,phase_rad,model_rad,residual_rad\n");
            for &(t, ph) in &cal.anchors {
                let m = cal.phase(t);
                text.push_str(&format!("{:.11e},{:.11e},{:.11e},{:.11e}\n", t * 1e6, ph, m, ph - m));
            }
            let file = name("calibration");
            summary.push(format!(
                "{file}: slope = {:.6e} rad/s, offset = {:.6} rad, U01/h = {:.2} Hz",
                cal.slope,
                cal.offset,
                cal.interaction_hz()
            ));
            out.artifact(
                &file,
                text.as_bytes(),
                json!({ "slope_rad_per_s": cal.slope, "offset_rad": cal.offset, "u01_over_h_hz": cal.interaction_hz() }),
            )?;
        }
    }
    Ok(summary)
}

/// Read, parse and run a config file.
pub fn run_config_file(path: &Path, command: Command, seed: Option<u64>, out: &Path) -> Result<Artifacts> {
    let text = fs::read_to_string(path)?;
    let mut cfg = parse_config_for(&text, command)?;
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    run_command(&cfg, &text, out, None)
}

/// Parse a config; the command may be omitted in the file but must agree
/// with `command` if present.
pub fn parse_config_for(text: &str, command: Command) -> Result<ExperimentConfig> {
    let mut errors = Vec::new();
    let cfg = match parse_config(text) {
        Ok(c) => Some(c),
        Err(errs) => {
            // A missing `command` is fine here; the caller supplies it.
            let (missing, rest): (Vec<_>, Vec<_>) =
                errs.into_iter().partition(|e| e.message == "missing required key `command`");
            errors = rest;
            if errors.is_empty() && !missing.is_empty() {
                parse_config(&format!("command = \"{}\"\n{text}", command.name())).ok().map(|mut c| {
                    c.command = None;
                    c
                })
            } else {
                None
            }
        }
    };
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    let mut cfg = cfg.ok_or_else(|| Error::Domain("config could not be parsed".into()))?;
    match cfg.command {
        Some(c) if c != command => {
            return Err(Error::Domain(format!(
                "config is for `{}` but `{}` was requested",
                c.name(),
                command.name()
            )));
        }
        _ => cfg.command = Some(command),
    }
    Ok(cfg)
}

/// Regenerate every figure's data from the bundled recipes.
pub fn run_figure_recipes(out: &Path, seed: Option<u64>) -> Result<Artifacts> {
    let mut all = Artifacts::default();
    for job in recipes::figure_jobs()? {
        let cfg = match seed {
            Some(s) => job.config.clone().with_seed(s),
            None => job.config.clone(),
        };
        match run_command(&cfg, &job.text, out, Some(&job.stem)) {
            Ok(a) => {
                all.files.extend(a.files);
                all.summary.extend(a.summary);
            }
            Err(e) => {
                for p in &all.files {
                    let _ = fs::remove_file(p);
                }
                return Err(e);
            }
        }
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_in_file_must_match() {
        assert!(parse_config_for("command = \"cluster\"\n", Command::Ramsey).is_err());
        let cfg = parse_config_for("[lattice]\nsites = 4\n", Command::Ramsey).unwrap();
        assert_eq!(cfg.command, Some(Command::Ramsey));
        assert_eq!(cfg.lattice.sites, 4);
        assert!(matches!(parse_config_for("[lattice]\nsitez = 4\n", Command::Ramsey), Err(Error::Config(_))));
    }

    #[test]
    fn failed_run_leaves_no_files() {
        let dir = tempfile::tempdir().unwrap();
        // An empty lattice parses but cannot host a cluster.
        let text = "command = \"cluster\"\n[cluster]\ndims = [5]\np_fill = 0.0\n";
        let cfg = parse_config(text).unwrap();
        assert!(run_command(&cfg, text, dir.path(), None).is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn calibrate_writes_csv_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let text = "command = \"calibrate\"\n";
        let cfg = parse_config(text).unwrap();
        let a = run_command(&cfg, text, dir.path(), None).unwrap();
        assert_eq!(a.files.len(), 2);
        let csv = fs::read_to_string(dir.path().join("calibration.csv")).unwrap();
        assert!(csv.starts_with("t_hold_us,phase_rad,model_rad,residual_rad\n2.10000000000e2,"));
        let side: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("calibration.csv.json")).unwrap()).unwrap();
        assert_eq!(side["seed"], 0);
        assert_eq!(side["version"], crate::VERSION);
        assert_eq!(side["sha256"].as_str().unwrap().len(), 64);
    }
}
