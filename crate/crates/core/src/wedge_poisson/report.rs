//! Diagnostics attached to a solve: a-priori ratio, FD residual, corner
//! exponent.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{AnalyticField, GridField, GridSpec, JetGrid};
use crate::geometry::sin_mu;
use crate::norms::{norm_polar_jets, SpaceParams};

use super::resolvent::ls_slope;
use super::solver::{solve_poisson_field, Solution};
use super::PoissonParams;

/// Finite-difference weights of Fornberg for derivatives `0..=m` at `x0`
/// on the nodes `xs`; `out[k][i]` weights `f(xs[i])` for the `k`-th
/// derivative.
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Weighted `L_{2,Θ+2,θ+2}` norm of a grid function over the given
/// `s`-index range.
fn weighted_l2(
    values: impl Fn(usize, usize) -> Complex64 + Sync,
    grid: &crate::fields::PolarGrid,
    big_theta: f64,
    theta: f64,
    rows: std::ops::Range<usize>,
) -> Result<f64> {
    let s = grid.s_nodes();
    let phi = grid.phi_nodes();
    let wedge = *grid.wedge();
    let v = grid.integrate(|i, j| {
        if !rows.contains(&i) {
            return 0.0;
        }
        ((theta + 2.0) * s[i]).exp() * sin_mu(phi[j], &wedge).powf(big_theta) * values(i, j).norm_sqr()
    })?;
    Ok(v.sqrt())
}

/// `‖e^{−2s}(D_s² + D_φ²)u − f‖ / ‖f‖` in `L_{2,Θ+2,θ+2}` over interior
/// `s`-nodes, with three-point differences in `s` and five-point
/// differences in `φ` on the nodes augmented by the zero edge values.
pub fn residual_check(u: &GridField, f: &GridField, big_theta: f64, theta: f64) -> Result<f64> {
    let grid = u.grid();
    if f.grid() != grid {
        return Err(Error::Shape("u and f live on different grids".into()));
    }
    let (n_s, n_phi) = grid.shape();
    if n_phi < 4 {
        return Err(Error::Capability("residual check needs at least 4 angular nodes".into()));
    }
    let kappa = grid.wedge().kappa();
    let mut aug = Vec::with_capacity(n_phi + 2);
    aug.push(0.0);
    aug.extend_from_slice(grid.phi_nodes());
    aug.push(kappa);
    let stencils: Vec<(usize, Vec<f64>)> = (1..=n_phi)
        .map(|a| {
            let lo = a.saturating_sub(2).min(n_phi + 2 - 5);
            let w = fornberg_weights(aug[a], &aug[lo..lo + 5], 2).swap_remove(2);
            (lo, w)
        })
        .collect();
    let h2 = grid.ds() * grid.ds();
    let uv = u.values();
    let at = |i: usize, a: usize| {
        if a == 0 || a == n_phi + 1 {
            Complex64::new(0.0, 0.0)
        } else {
            uv[[i, a - 1]]
        }
    };
    let s = grid.s_nodes();
    let res = |i: usize, j: usize| {
        let dss = (uv[[i + 1, j]] - 2.0 * uv[[i, j]] + uv[[i - 1, j]]) / h2;
        let (lo, w) = &stencils[j];
        let dpp: Complex64 = w.iter().enumerate().map(|(k, wk)| *wk * at(i, lo + k)).sum();
        (-2.0 * s[i]).exp() * (dss + dpp) - f.values()[[i, j]]
    };
    let interior = 1..n_s - 1;
    let num = weighted_l2(
        |i, j| if interior.contains(&i) { res(i, j) } else { Complex64::new(0.0, 0.0) },
        grid,
        big_theta,
        theta,
        interior.clone(),
    )?;
    let den = weighted_l2(|i, j| f.values()[[i, j]], grid, big_theta, theta, interior)?;
    Ok(if den == 0.0 { num } else { num / den })
}

/// Slope of `log ‖u(r,·)‖_{L₂(I)}` against `log r` over the smallest
/// decade of `r` whose signal exceeds `1e−12` of the peak.
pub fn corner_exponent(u: &GridField) -> Result<f64> {
    let grid = u.grid();
    let w = grid.phi_weights();
    let norms: Vec<f64> = u
        .values()
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(w).map(|(v, wj)| wj * v.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let peak = norms.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Probe("field vanishes identically".into()));
    }
    let thr = 1e-12 * peak;
    let s = grid.s_nodes();
    let i0 = norms
        .iter()
        .position(|&v| v > thr)
        .ok_or_else(|| Error::Probe("no signal above threshold".into()))?;
    let top = s[i0] + std::f64::consts::LN_10;
    let pts: Vec<(f64, f64)> = (i0..norms.len())
        .take_while(|&i| s[i] <= top)
        .filter(|&i| norms[i] > thr)
        .map(|i| (s[i], norms[i].ln()))
        .collect();
    if pts.len() < 4 || s[i0] + std::f64::consts::LN_10 > grid.s_max() {
        return Err(Error::Probe(format!("only {} usable radii in the fit window", pts.len())));
    }
    Ok(ls_slope(&pts))
}

/// Norms of the two candidate first-order spaces for `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftingNorms {
    /// `‖u|H¹_{2,Θ,θ−2}‖`.
    #[serde(rename = "H1_2_Theta_theta-2")]
    pub same_big_theta: f64,
    /// `‖u|H¹_{2,Θ−2,θ−2}‖`.
    #[serde(rename = "H1_2_Theta-2_theta-2")]
    pub shifted_big_theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriReport {
    /// `‖f|L_{2,Θ+2,θ+2}‖`.
    pub f_norm: f64,
    /// `‖u|H²_{2,Θ−2,θ−2}‖`.
    pub u_norm: f64,
    pub ratio: f64,
    pub lifting: LiftingNorms,
}

/// Ratio `‖u|H²_{2,Θ−2,θ−2}‖ / ‖f|L_{2,Θ+2,θ+2}‖` with spectral
/// derivatives of `u`; 0 for `f = u = 0`.
pub fn apriori_report(f: &GridField, sol: &Solution, pp: &PoissonParams) -> Result<AprioriReport> {
    let mut fj = JetGrid::zeros(f.grid());
    fj.u = f.values().clone();
    let base = SpaceParams::new(0, 2.0, pp.big_theta, pp.theta)?;
    let f_norm = norm_polar_jets(&fj, &base.with_weights(pp.big_theta + 2.0, pp.theta + 2.0))?;
    let u_sp = base.with_gamma(2).with_weights(pp.big_theta - 2.0, pp.theta - 2.0);
    let u_norm = norm_polar_jets(&sol.jets, &u_sp)?;
    let lifting = LiftingNorms {
        same_big_theta: norm_polar_jets(&sol.jets, &u_sp.with_gamma(1).with_weights(pp.big_theta, pp.theta - 2.0))?,
        shifted_big_theta: norm_polar_jets(&sol.jets, &u_sp.with_gamma(1))?,
    };
    let ratio = if f_norm == 0.0 {
        if u_norm != 0.0 {
            return Err(Error::Inconsistent(format!("f = 0 but ‖u‖ = {u_norm:e}")));
        }
        0.0
    } else {
        u_norm / f_norm
    };
    Ok(AprioriReport {
        f_norm,
        u_norm,
        ratio,
        lifting,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportNorms {
    pub f: f64,
    pub u: f64,
}

/// Summary of one solve, serialised as the solve JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub kappa: f64,
    #[serde(rename = "Theta")]
    pub big_theta: f64,
    pub theta: f64,
    pub gamma: usize,
    pub grid: GridSpec,
    pub n_modes: usize,
    pub contour_c: f64,
    pub norms: ReportNorms,
    pub apriori_ratio: f64,
    pub residual: f64,
    pub corner_slope: Option<f64>,
    pub lifting: LiftingNorms,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Solves and fills a [`SolveReport`].
pub fn solve_report(f: &GridField, pp: &PoissonParams) -> Result<(Solution, SolveReport)> {
    let sol = super::solve_poisson(f, pp)?;
    let report = build_report(f, &sol, pp)?;
    Ok((sol, report))
}

pub(crate) fn build_report(f: &GridField, sol: &Solution, pp: &PoissonParams) -> Result<SolveReport> {
    let mut warnings = sol.warnings.clone();
    let ap = apriori_report(f, sol, pp)?;
    let u = sol.u();
    let residual = residual_check(&u, f, pp.big_theta, pp.theta)?;
    let corner_slope = match corner_exponent(&u) {
        Ok(v) => Some(v),
        Err(e) => {
            warnings.push(format!("corner exponent unavailable: {e}"));
            None
        }
    };
    if pp.gamma > 0 {
        warnings.push("a-priori ratio is evaluated with gamma = 0 norms".into());
    }
    Ok(SolveReport {
        kappa: pp.wedge().kappa(),
        big_theta: pp.big_theta,
        theta: pp.theta,
        gamma: pp.gamma,
        grid: pp.grid.spec(),
        n_modes: pp.n_modes,
        contour_c: pp.contour_c(),
        norms: ReportNorms {
            f: ap.f_norm,
            u: ap.u_norm,
        },
        apriori_ratio: ap.ratio,
        residual,
        corner_slope,
        lifting: ap.lifting,
        warnings,
    })
}

/// Samples an analytic field and returns the solution with its report.
pub fn solve_field_report(f: &dyn AnalyticField, pp: &PoissonParams) -> Result<(Solution, SolveReport, GridField)> {
    let (sol, fg) = solve_poisson_field(f, pp)?;
    let report = build_report(&fg, &sol, pp)?;
    Ok((sol, report, fg))
}
