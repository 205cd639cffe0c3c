//! Effective configuration: command-line flags over the config file over
//! defaults. The output directory falls back to `NLZ_OUTDIR` before the
//! built-in default.

use std::fs;
use std::path::{Path, PathBuf};

use nlz::dynamics::IntegratorConfig;
use nlz::experiments::ExperimentConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const OUTDIR_ENV: &str = "NLZ_OUTDIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub outdir: PathBuf,
    /// Worker threads; 0 means one per logical core.
    pub jobs: usize,
    pub alpha: f64,
    pub svg: bool,
    pub integrator: IntegratorConfig,
    pub grids: Grids,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    pub level_points: usize,
    pub rate_points: usize,
    pub fixed_point_samples: usize,
    pub phase_beta_points: usize,
    pub phase_gamma_points: usize,
}

impl Default for Settings {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        Settings {
            outdir: e.outdir,
            jobs: 0,
            alpha: 1.0,
            svg: e.svg,
            integrator: e.integrator,
            grids: Grids {
                level_points: e.level_points,
                rate_points: e.rate_points,
                fixed_point_samples: e.fixed_point_samples,
                phase_beta_points: e.phase_beta_points,
                phase_gamma_points: e.phase_gamma_points,
            },
        }
    }
}

/// Flag values; `None` leaves the lower-precedence value in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub outdir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub alpha: Option<f64>,
    pub no_svg: bool,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_step: Option<f64>,
    pub sample_stride: Option<f64>,
}

impl Settings {
    /// Defaults, then `NLZ_OUTDIR`, then the file, then the flags.
    pub fn resolve(file: Option<&Path>, env_outdir: Option<PathBuf>, flags: &Overrides) -> Result<Self, CliError> {
        let mut base = Settings::default();
        if let Some(dir) = env_outdir.filter(|d| !d.as_os_str().is_empty()) {
            base.outdir = dir;
        }
        let mut settings = match file {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                merge_file(&base, &text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
            }
            None => base,
        };
        if let Some(v) = &flags.outdir {
            settings.outdir = v.clone();
        }
        if let Some(v) = flags.jobs {
            settings.jobs = v;
        }
        if let Some(v) = flags.alpha {
            settings.alpha = v;
        }
        if flags.no_svg {
            settings.svg = false;
        }
        let i = &mut settings.integrator;
        i.rel_tol = flags.rel_tol.unwrap_or(i.rel_tol);
        i.abs_tol = flags.abs_tol.unwrap_or(i.abs_tol);
        i.max_step = flags.max_step.unwrap_or(i.max_step);
        i.sample_stride = flags.sample_stride.unwrap_or(i.sample_stride);
        settings.validate()?;
        Ok(settings)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(CliError::Usage("alpha must be positive".into()));
        }
        self.integrator.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.experiment_config()
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            outdir: self.outdir.clone(),
            integrator: self.integrator,
            level_points: self.grids.level_points,
            rate_points: self.grids.rate_points,
            fixed_point_samples: self.grids.fixed_point_samples,
            phase_beta_points: self.grids.phase_beta_points,
            phase_gamma_points: self.grids.phase_gamma_points,
            svg: self.svg,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings serialize to TOML")
    }
}

/// Overlays the keys present in `text` on `base`.
fn merge_file(base: &Settings, text: &str) -> Result<Settings, String> {
    let file: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    let mut merged = toml::Table::try_from(base).map_err(|e| e.to_string())?;
    overlay(&mut merged, file);
    toml::Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| e.message().to_string())
}

fn overlay(into: &mut toml::Table, from: toml::Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(toml::Value::Table(dst)), toml::Value::Table(src)) => overlay(dst, src),
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn defaults_roundtrip_through_toml() {
        let s = Settings::default();
        let back: Settings = toml::from_str(&s.to_toml()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn precedence_flags_over_file_over_env() {
        let f = write("outdir = \"from-file\"\njobs = 3\n[integrator]\nrel_tol = 1e-9\n");
        let env = Some(PathBuf::from("from-env"));

        let s = Settings::resolve(None, env.clone(), &Overrides::default()).unwrap();
        assert_eq!(s.outdir, PathBuf::from("from-env"));

        let s = Settings::resolve(Some(f.path()), env.clone(), &Overrides::default()).unwrap();
        assert_eq!(s.outdir, PathBuf::from("from-file"));
        assert_eq!(s.jobs, 3);
        assert_eq!(s.integrator.rel_tol, 1e-9);
        assert_eq!(s.integrator.abs_tol, IntegratorConfig::default().abs_tol);

        let flags = Overrides {
            outdir: Some("from-flag".into()),
            rel_tol: Some(1e-11),
            ..Overrides::default()
        };
        let s = Settings::resolve(Some(f.path()), env, &flags).unwrap();
        assert_eq!(s.outdir, PathBuf::from("from-flag"));
        assert_eq!(s.integrator.rel_tol, 1e-11);
        assert_eq!(s.jobs, 3);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        let f = write("outdri = \"x\"\n");
        assert!(matches!(
            Settings::resolve(Some(f.path()), None, &Overrides::default()),
            Err(CliError::Usage(_))
        ));
        let f = write("[grids]\nlevel_points = 1\n");
        assert!(Settings::resolve(Some(f.path()), None, &Overrides::default()).is_err());
        let flags = Overrides {
            alpha: Some(-1.0),
            ..Overrides::default()
        };
        assert!(Settings::resolve(None, None, &flags).is_err());
    }
}
