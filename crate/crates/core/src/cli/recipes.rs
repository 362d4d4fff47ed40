//! Bundled configs that regenerate the data behind each figure.

use super::config::{parse_config, ExperimentConfig};
use crate::error::{Error, Result};

const FIG2: &str = include_str!("recipes/fig2.toml");
const FIG3: &str = include_str!("recipes/fig3.toml");
const FIG4: &str = include_str!("recipes/fig4.toml");
const FIG5: &str = include_str!("recipes/fig5.toml");

/// Hold times of the three fringe panels, μs.
pub const FIG2_HOLDS_US: [u32; 3] = [30, 210, 450];
/// Hold times of the eight pattern panels, μs.
pub const FIG4_HOLDS_US: [u32; 8] = [30, 90, 150, 210, 270, 330, 390, 450];

const HOLD_PLACEHOLDER: &str = "@T_HOLD_US@";

#[derive(Clone, Debug)]
pub struct FigureJob {
    /// Output file stem, e.g. `fig4_c`.
    pub stem: String,
    /// The exact config text run (placeholders filled in).
    pub text: String,
    pub config: ExperimentConfig,
}

fn job(stem: String, text: String) -> Result<FigureJob> {
    let config = parse_config(&text).map_err(Error::Config)?;
    Ok(FigureJob { stem, text, config })
}

fn panel(i: usize) -> char {
    (b'a' + i as u8) as char
}

/// The recipe texts, by name.
pub fn sources() -> [(&'static str, &'static str); 4] {
    [("fig2", FIG2), ("fig3", FIG3), ("fig4", FIG4), ("fig5", FIG5)]
}

pub fn figure_jobs() -> Result<Vec<FigureJob>> {
    let mut jobs = Vec::new();
    for (i, t) in FIG2_HOLDS_US.iter().enumerate() {
        jobs.push(job(format!("fig2_{}", panel(i)), FIG2.replace(HOLD_PLACEHOLDER, &t.to_string()))?);
    }
    jobs.push(job("fig3".into(), FIG3.to_string())?);
    for (i, t) in FIG4_HOLDS_US.iter().enumerate() {
        jobs.push(job(format!("fig4_{}", panel(i)), FIG4.replace(HOLD_PLACEHOLDER, &t.to_string()))?);
    }
    jobs.push(job("fig5".into(), FIG5.to_string())?);
    Ok(jobs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipes_parse() {
        let jobs = figure_jobs().unwrap();
        let stems: Vec<_> = jobs.iter().map(|j| j.stem.as_str()).collect();
        assert_eq!(
            stems,
            [
                "fig2_a", "fig2_b", "fig2_c", "fig3", "fig4_a", "fig4_b", "fig4_c", "fig4_d", "fig4_e", "fig4_f",
                "fig4_g", "fig4_h", "fig5"
            ]
        );
        assert!((jobs[6].config.scan.t_hold - 150e-6).abs() < 1e-12);
        assert!(jobs.iter().all(|j| !j.text.contains(HOLD_PLACEHOLDER)));
    }
}
