//! Flat run configuration: a JSON file whose keys can be overridden by flags.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use wedgespace::fields::{make_grid, PolarGrid};
use wedgespace::geometry::Wedge;
use wedgespace::norms::SpaceParams;
use wedgespace::wedge_poisson::PoissonParams;

use crate::error::{CliError, CliResult};

/// Every key is optional; unset keys take the documented defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Opening angle of the wedge, in radians [default: pi]
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Smoothness index [default: 1 for norms, 0 for solve]
    #[arg(long, global = true)]
    pub gamma: Option<usize>,
    /// Integrability exponent [default: 2]
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Boundary weight exponent [default: 2]
    #[arg(long = "Theta", alias = "big-theta", global = true)]
    #[serde(rename = "Theta")]
    pub big_theta: Option<f64>,
    /// Corner weight exponent [default: 2]
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Lower end of the log-radius window [default: -12]
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub s_min: Option<f64>,
    /// Upper end of the log-radius window [default: 12]
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub s_max: Option<f64>,
    /// Radial nodes, a power of two [default: 512]
    #[arg(long, global = true)]
    pub n_s: Option<usize>,
    /// Angular nodes [default: 64]
    #[arg(long, global = true)]
    pub n_phi: Option<usize>,
    /// Sine modes kept by the solver [default: n_phi / 2]
    #[arg(long, global = true)]
    pub n_modes: Option<usize>,
    /// Forcing for `solve`: a builtin name, `manufactured`, or a grid-field CSV path [default: manufactured]
    #[arg(long, global = true)]
    pub field: Option<String>,
    /// Family for `norms`, comma separated [default: the builtin family]
    #[arg(long, global = true, value_delimiter = ',', num_args = 0..)]
    pub fields: Option<Vec<String>>,
    /// Number of eigenvalues for `spectrum` [default: 3]
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    /// Number of grid levels for `convergence` [default: 3]
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    /// Seed for randomized fields [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $(if $top.$f.is_some() { $base.$f = $top.$f.clone(); })*
    };
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        // serde reports the offending key for unknown fields and bad types
        serde_json::from_str(&text).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))
    }

    /// Keys set in `top` replace those in `self`.
    pub fn overlaid(mut self, top: &RunConfig) -> Self {
        overlay!(
            self, top, kappa, gamma, p, big_theta, theta, s_min, s_max, n_s, n_phi, n_modes, field, fields, n_max,
            levels, seed, out_dir
        );
        self
    }
}

/// Default forcing for `solve`.
pub const MANUFACTURED: &str = "manufactured";

/// Configuration after defaults and validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub kappa: f64,
    pub gamma: Option<usize>,
    pub p: f64,
    #[serde(rename = "Theta")]
    pub big_theta: f64,
    pub theta: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub n_s: usize,
    pub n_phi: usize,
    pub n_modes: Option<usize>,
    pub field: String,
    pub fields: Option<Vec<String>>,
    pub n_max: usize,
    pub levels: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

fn finite(key: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(key, format!("must be finite, got {v}")))
    }
}

/// Per-command defaults for keys whose sensible value depends on the command.
#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    pub n_s: usize,
    pub n_phi: usize,
}

impl Default for Defaults {
    fn default() -> Self {
        Self { n_s: 512, n_phi: 64 }
    }
}

impl Resolved {
    pub fn from_config(c: &RunConfig, d: Defaults) -> CliResult<Self> {
        let r = Resolved {
            kappa: finite("kappa", c.kappa.unwrap_or(PI))?,
            gamma: c.gamma,
            p: finite("p", c.p.unwrap_or(2.0))?,
            big_theta: finite("Theta", c.big_theta.unwrap_or(2.0))?,
            theta: finite("theta", c.theta.unwrap_or(2.0))?,
            s_min: finite("s_min", c.s_min.unwrap_or(-12.0))?,
            s_max: finite("s_max", c.s_max.unwrap_or(12.0))?,
            n_s: c.n_s.unwrap_or(d.n_s),
            n_phi: c.n_phi.unwrap_or(d.n_phi),
            n_modes: c.n_modes,
            field: c.field.clone().unwrap_or_else(|| MANUFACTURED.to_string()),
            fields: c
                .fields
                .as_ref()
                .map(|v| v.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()),
            n_max: c.n_max.unwrap_or(3),
            levels: c.levels.unwrap_or(3),
            seed: c.seed.unwrap_or(0),
            out_dir: c.out_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
        };
        if let Some(g) = r.gamma {
            if g > 2 {
                return Err(CliError::config("gamma", format!("supported smoothness is 0..=2, got {g}")));
            }
        }
        if r.n_max == 0 {
            return Err(CliError::config("n_max", "need at least one eigenvalue"));
        }
        if r.levels < 2 {
            return Err(CliError::config("levels", "need at least two grid levels"));
        }
        if r.n_modes == Some(0) {
            return Err(CliError::config("n_modes", "need at least one sine mode"));
        }
        if r.field.is_empty() {
            return Err(CliError::config("field", "empty field name"));
        }
        r.wedge()?;
        r.grid()?;
        Ok(r)
    }

    pub fn wedge(&self) -> CliResult<Wedge> {
        Wedge::new(self.kappa).map_err(|e| CliError::config("kappa", e.to_string()))
    }

    pub fn grid(&self) -> CliResult<PolarGrid> {
        self.grid_with(self.n_s, self.n_phi)
    }

    pub fn grid_with(&self, n_s: usize, n_phi: usize) -> CliResult<PolarGrid> {
        Ok(make_grid(self.s_min, self.s_max, n_s, n_phi, self.wedge()?)?)
    }

    pub fn space_params(&self, default_gamma: usize) -> CliResult<SpaceParams> {
        Ok(SpaceParams::new(self.gamma.unwrap_or(default_gamma), self.p, self.big_theta, self.theta)?)
    }

    /// Explicit `n_modes`, else half the angular nodes.
    pub fn n_modes_for(&self, n_phi: usize) -> usize {
        self.n_modes.unwrap_or((n_phi / 2).max(1))
    }

    pub fn poisson_params(&self, grid: PolarGrid, n_modes: usize) -> CliResult<PoissonParams> {
        if 2 * n_modes > grid.n_phi() {
            return Err(CliError::config(
                "n_modes",
                format!("need n_modes ≤ n_phi/2 = {}, got {n_modes}", grid.n_phi() / 2),
            ));
        }
        if self.p != 2.0 {
            return Err(CliError::config("p", "the solver is implemented for p = 2 only"));
        }
        Ok(PoissonParams::new(grid, self.big_theta, self.theta, self.gamma.unwrap_or(0), n_modes)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = serde_json::from_str::<RunConfig>(r#"{"kappa": 1.0, "thetta": 2}"#).unwrap_err();
        assert!(err.to_string().contains("thetta"));
    }

    #[test]
    fn flags_override_file() {
        let file: RunConfig = serde_json::from_str(r#"{"kappa": 1.0, "Theta": 2.5, "seed": 4}"#).unwrap();
        let flags = RunConfig {
            kappa: Some(2.0),
            ..Default::default()
        };
        let c = file.overlaid(&flags);
        assert_eq!(c.kappa, Some(2.0));
        assert_eq!(c.big_theta, Some(2.5));
        assert_eq!(c.seed, Some(4));
    }

    #[test]
    fn validation_names_key() {
        let bad = |c: RunConfig| match Resolved::from_config(&c, Defaults::default()) {
            Err(CliError::Config { key, .. }) => key,
            Err(CliError::Lib(wedgespace::Error::Config { key, .. })) => key,
            other => panic!("{other:?}"),
        };
        assert_eq!(bad(RunConfig { n_s: Some(100), ..Default::default() }), "n_s");
        assert_eq!(bad(RunConfig { kappa: Some(7.0), ..Default::default() }), "kappa");
        assert_eq!(bad(RunConfig { gamma: Some(3), ..Default::default() }), "gamma");
        assert_eq!(bad(RunConfig { theta: Some(f64::NAN), ..Default::default() }), "theta");
        assert_eq!(bad(RunConfig { levels: Some(1), ..Default::default() }), "levels");
    }

    #[test]
    fn defaults() {
        let r = Resolved::from_config(&RunConfig::default(), Defaults::default()).unwrap();
        assert_eq!((r.n_s, r.n_phi, r.n_modes_for(r.n_phi), r.seed), (512, 64, 32, 0));
        assert_eq!(r.kappa, PI);
        assert_eq!(r.field, MANUFACTURED);
    }
}
