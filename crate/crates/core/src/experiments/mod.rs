//! Dataset generation with run manifests.
//!
//! Every experiment writes `<outdir>/<experiment>/<name>.csv`, an optional
//! SVG per dataset, and a `manifest.json` with the parameters, tolerances,
//! output list and the pass/fail of each checked claim. Simulations fan out
//! on the current rayon pool; results are collected in input order so the
//! CSVs are identical from run to run. All experiments use α = 1.

pub mod criteria;
pub mod figures;
pub mod output;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::IntegratorConfig;
use crate::error::ExperimentError;

pub use output::{fmt_num, Check, RunManifest, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub outdir: PathBuf,
    pub integrator: IntegratorConfig,
    /// γ samples of the level curves on [−2, 2].
    pub level_points: usize,
    /// Sweep rates per tunneling curve, log-spaced on [1e-3, 10].
    pub rate_points: usize,
    /// γ samples of the fixed-point branches on [−1, 1].
    pub fixed_point_samples: usize,
    pub phase_beta_points: usize,
    pub phase_gamma_points: usize,
    /// Write SVG plots next to the CSVs.
    pub svg: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            outdir: PathBuf::from("out"),
            integrator: IntegratorConfig::default(),
            level_points: 2001,
            rate_points: 25,
            fixed_point_samples: 2001,
            phase_beta_points: 301,
            phase_gamma_points: 201,
            svg: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.integrator.validate()?;
        let grids = [
            self.level_points,
            self.rate_points,
            self.fixed_point_samples,
            self.phase_beta_points,
            self.phase_gamma_points,
        ];
        if grids.iter().any(|&n| n < 2) {
            return Err(ExperimentError::BadConfig("grids need at least 2 points"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Criteria,
    All,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Fig1,
        Experiment::Fig2,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::Fig5,
        Experiment::Fig6,
        Experiment::Criteria,
        Experiment::All,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Fig6 => "fig6",
            Experiment::Criteria => "criteria",
            Experiment::All => "all",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ExperimentError::UnknownExperiment(s.to_string()))
    }
}

/// Runs one experiment, or every figure plus the criteria for
/// [`Experiment::All`].
pub fn run(experiment: Experiment, config: &ExperimentConfig) -> Result<Vec<RunManifest>, ExperimentError> {
    config.validate()?;
    let one = |m: RunManifest| vec![m];
    Ok(match experiment {
        Experiment::Fig1 => one(figures::repro_fig1(config)?),
        Experiment::Fig2 => one(figures::repro_fig2(config)?),
        Experiment::Fig3 => one(figures::repro_fig3(config)?),
        Experiment::Fig4 => one(figures::repro_fig4(config)?),
        Experiment::Fig5 => one(figures::repro_fig5(config)?),
        Experiment::Fig6 => one(figures::repro_fig6(config)?),
        Experiment::Criteria => one(criteria::run_all(config)?),
        Experiment::All => {
            let mut out = Vec::new();
            for e in &Experiment::ALL[..7] {
                out.extend(run(*e, config)?);
            }
            out
        }
    })
}

/// `n` points from `a` to `b`, both included, as `a + (b − a)·k/(n − 1)`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    b
                } else {
                    a + (b - a) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// `n` points from `a` to `b` evenly spaced in log10.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.log10(), b.log10(), n)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names_roundtrip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!(matches!(
            "fig9".parse::<Experiment>(),
            Err(ExperimentError::UnknownExperiment(_))
        ));
    }

    #[test]
    fn grids_hit_zero_and_ends() {
        let g = linspace(-2.0, 2.0, 2001);
        assert_eq!(g[1000], 0.0);
        assert_eq!(*g.last().unwrap(), 2.0);
        let v = logspace(1e-3, 10.0, 25);
        assert!((v[0] - 1e-3).abs() < 1e-18);
        assert!((v[24] - 10.0).abs() < 1e-12);
        assert!((v[6] - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn default_config_is_valid() {
        ExperimentConfig::default().validate().unwrap();
        let bad = ExperimentConfig {
            level_points: 0,
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
