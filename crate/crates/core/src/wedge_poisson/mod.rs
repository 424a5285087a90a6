//! Zero-Dirichlet Poisson problem `Δu = f` on the wedge, solved by the
//! Mellin transform in `r` and sine diagonalisation in `φ`.

mod report;
mod resolvent;
mod solver;

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::PolarGrid;
use crate::geometry::Wedge;

pub use report::{
    apriori_report, corner_exponent, fornberg_weights, residual_check, solve_field_report, solve_report, AprioriReport, LiftingNorms,
    ReportNorms, SolveReport,
};
pub use resolvent::{
    dst1, random_profile, resolvent_1d, resolvent_estimate_check, resolvent_estimate_sweep, scaled_sin,
    uniform_nodes, EstimateSweep, RandomProfile, ResolventMethod, SineSeries,
};
pub use solver::{solve_poisson, solve_poisson_field, SineSpectrum, Solution};

/// Below this distance to a pole the solve is refused.
pub const SINGULAR_TOLERANCE: f64 = 1e-9;
/// Below this distance to a pole a conditioning warning is attached.
pub const NEAR_SINGULAR_WARNING: f64 = 1e-3;

/// Reason for refusing a parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Rejection {
    /// `Θ ∉ (1, 3)`.
    ThetaRange { big_theta: f64 },
    /// `(θ − 2)/2` lies within tolerance of `±nπ/κ`.
    Spectral { n: usize, dist: f64 },
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::ThetaRange { big_theta } => write!(f, "need 1 < Theta < 3, got Theta = {big_theta}"),
            Rejection::Spectral { n, dist } => write!(
                f,
                "(theta - 2)/2 must avoid ±n·pi/kappa; it lies within {dist:e} of the n = {n} pole"
            ),
        }
    }
}

impl From<Rejection> for Error {
    fn from(r: Rejection) -> Self {
        Error::Inadmissible(r.to_string())
    }
}

/// Nearest pole `nπ/κ` (n ≥ 1) to `|x|` and the distance to it.
fn nearest_pole(x: f64, wedge: &Wedge) -> (usize, f64) {
    let w = wedge.omega(1);
    let n = ((x.abs() / w).round() as usize).max(1);
    (n, (x.abs() - n as f64 * w).abs())
}

/// Checks `1 < Θ < 3` and that `(θ − 2)/2` stays away from `{±nπ/κ}`.
/// On success returns conditioning warnings.
pub fn admissible(wedge: &Wedge, big_theta: f64, theta: f64) -> std::result::Result<Vec<String>, Rejection> {
    if !(big_theta > 1.0 && big_theta < 3.0) {
        return Err(Rejection::ThetaRange { big_theta });
    }
    let (n, dist) = nearest_pole((theta - 2.0) / 2.0, wedge);
    if dist <= SINGULAR_TOLERANCE {
        return Err(Rejection::Spectral { n, dist });
    }
    let mut warnings = Vec::new();
    if dist <= NEAR_SINGULAR_WARNING {
        warnings.push(format!(
            "contour is {dist:e} from the n = {n} pole; the solve is ill-conditioned"
        ));
    }
    Ok(warnings)
}

/// Solver configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonParams {
    pub big_theta: f64,
    pub theta: f64,
    /// Smoothness index of the data, used only for reporting.
    pub gamma: usize,
    pub n_modes: usize,
    pub grid: PolarGrid,
}

impl PoissonParams {
    pub fn new(grid: PolarGrid, big_theta: f64, theta: f64, gamma: usize, n_modes: usize) -> Result<Self> {
        if gamma > 2 {
            return Err(Error::config("gamma", format!("supported smoothness is 0..=2, got {gamma}")));
        }
        if n_modes == 0 {
            return Err(Error::config("n_modes", "need at least one sine mode"));
        }
        Ok(Self {
            big_theta,
            theta,
            gamma,
            n_modes,
            grid,
        })
    }

    pub fn wedge(&self) -> &Wedge {
        self.grid.wedge()
    }

    /// Real part of the Mellin contour, `(2 − θ)/2`.
    pub fn contour_c(&self) -> f64 {
        (2.0 - self.theta) / 2.0
    }

    pub fn admissible(&self) -> std::result::Result<Vec<String>, Rejection> {
        admissible(self.wedge(), self.big_theta, self.theta)
    }
}

/// `(nπ/κ)²` for `n = 1..=n_max`.
pub fn dirichlet_spectrum(wedge: &Wedge, n_max: usize) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Err(Error::config("n_max", "need n_max ≥ 1"));
    }
    Ok((1..=n_max).map(|n| wedge.omega(n).powi(2)).collect())
}

/// Lowest `n_max` eigenvalues of the second-order difference matrix of
/// `−∂_φ²` with `n_interior` interior nodes, computed by Sturm-sequence
/// bisection.
pub fn fd_dirichlet_eigenvalues(wedge: &Wedge, n_interior: usize, n_max: usize) -> Result<Vec<f64>> {
    if n_max == 0 || n_max > n_interior {
        return Err(Error::config("n_max", format!("need 1 ≤ n_max ≤ {n_interior}")));
    }
    let h = wedge.kappa() / (n_interior + 1) as f64;
    let diag = 2.0 / (h * h);
    let off = -1.0 / (h * h);
    // number of eigenvalues strictly below x
    let count_below = |x: f64| {
        let mut count = 0;
        let mut q = diag - x;
        if q < 0.0 {
            count += 1;
        }
        for _ in 1..n_interior {
            let prev = if q == 0.0 { f64::EPSILON } else { q };
            q = diag - x - off * off / prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let upper = diag + 2.0 * off.abs();
    Ok((0..n_max)
        .map(|k| {
            let (mut lo, mut hi) = (0.0, upper);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect())
}

/// Observed convergence order of the first `n_max` FD eigenvalues over
/// grids with `n`, `2n+1`, `4n+3` interior nodes (`h` halves).
pub fn fd_eigenvalue_orders(wedge: &Wedge, n_interior: usize, n_max: usize) -> Result<Vec<f64>> {
    let exact = dirichlet_spectrum(wedge, n_max)?;
    let sizes = [n_interior, 2 * n_interior + 1, 4 * n_interior + 3];
    let errs: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&m| {
            fd_dirichlet_eigenvalues(wedge, m, n_max)
                .map(|ev| ev.iter().zip(&exact).map(|(a, b)| (a - b).abs()).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..n_max).map(|k| (errs[1][k] / errs[2][k]).log2()).collect())
}
