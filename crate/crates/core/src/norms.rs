//! Norms of the mixed-weight spaces `H^γ_{p,Θ,θ}(D)` for `γ ∈ {0, 1, 2}`
//! and of the interval spaces `H^γ_{p,Θ}(I)`.
//!
//! Four norms are implemented:
//!
//! * **integral**: `Σ_{|α|≤γ} ∫ |ρ_D^{|α|} D^α u|^p w_{Θ,θ} dx` with
//!   `w_{Θ,θ} = ρ_∘^{θ−2} (ρ_D/ρ_∘)^{Θ−2}`;
//! * **dyadic**: `Σ_ν c^{νθ} ‖(ζ_ν u)(c^ν ·)‖^p_{H^γ_{p,Θ}(D)}`;
//! * **polar**: `∫ e^{θs} Σ_j ‖R^j ũ(s,·)‖^p_{H^{γ−j}_{p,Θ−1+jp}(I)} ds`;
//! * **mellin** (`p = 2`): the polar norm's layers transformed on the
//!   contour `Re λ = −θ/2`, weighted by `|λ|^{2j}`.
//!
//! Every function returns the `p`-th root of the corresponding sum.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{make_grid, sample_jets, AnalyticField, GridField, GridSpec, JetGrid, NamedField, PolarGrid};
use crate::geometry::{rho_interval, sin_mu, ResolutionOfUnity, Wedge};
use crate::mellin::{forward_values, MellinContour};
use crate::polar_calculus::JetConverter;

/// Number of `s`-nodes on the reference annulus of the dyadic norm.
pub const DYADIC_INNER_NODES: usize = 256;

/// `(γ, p, Θ, θ)` identifying `H^γ_{p,Θ,θ}(D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub gamma: usize,
    pub p: f64,
    #[serde(rename = "Theta")]
    pub big_theta: f64,
    pub theta: f64,
}

impl SpaceParams {
    pub fn new(gamma: usize, p: f64, big_theta: f64, theta: f64) -> Result<Self> {
        if gamma > 2 {
            return Err(Error::config("gamma", format!("supported smoothness is 0..=2, got {gamma}")));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::config("p", format!("need 1 < p < ∞, got {p}")));
        }
        if !(big_theta.is_finite() && theta.is_finite()) {
            return Err(Error::config("Theta/theta", "weight exponents must be finite"));
        }
        Ok(Self {
            gamma,
            p,
            big_theta,
            theta,
        })
    }

    pub fn with_gamma(self, gamma: usize) -> Self {
        Self { gamma, ..self }
    }

    pub fn with_weights(self, big_theta: f64, theta: f64) -> Self {
        Self {
            big_theta,
            theta,
            ..self
        }
    }
}

/// `r^{θ−2} (sin μ(φ))^{Θ−2}`.
pub fn weight_mixed(r: f64, phi: f64, big_theta: f64, theta: f64, wedge: &Wedge) -> Result<f64> {
    if !wedge.contains_angle(phi) || !(r > 0.0) {
        return Err(Error::Domain(format!("weight undefined at (r, φ) = ({r}, {phi})")));
    }
    Ok(r.powf(theta - 2.0) * sin_mu(phi, wedge).powf(big_theta - 2.0))
}

fn check_finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Integration { i_s: 0, i_phi: 0 })
    }
}

/// `Σ_{|α|≤γ} |ρ^{|α|} D^α u|^p` at one node from its Cartesian jet.
fn cartesian_sum(cj: &crate::polar_calculus::CartesianJet, rho: f64, gamma: usize, p: f64) -> f64 {
    let mut acc = cj.value.norm().powf(p);
    if gamma >= 1 {
        acc += cj.first.iter().map(|d| (rho * d.norm()).powf(p)).sum::<f64>();
    }
    if gamma >= 2 {
        acc += cj.second.iter().map(|d| (rho * rho * d.norm()).powf(p)).sum::<f64>();
    }
    acc
}

/// `p`-th power of the integral norm over a custom `s`-shift and radial
/// multiplier, shared by the integral and dyadic norms.
fn integral_pow(jets: &JetGrid, gamma: usize, p: f64, big_theta: f64, theta: f64) -> Result<f64> {
    let grid = &jets.grid;
    let wedge = *grid.wedge();
    let conv = JetConverter::new(grid.phi_nodes());
    let s = grid.s_nodes();
    let phi = grid.phi_nodes();
    let sm: Vec<f64> = phi.iter().map(|&f| sin_mu(f, &wedge)).collect();
    grid.integrate(|i, j| {
        let r = s[i].exp();
        let jet = jets.at(i, j);
        if jet == Default::default() {
            return 0.0;
        }
        let cj = conv.convert(&jet, r, j);
        let w = r.powf(theta) * sm[j].powf(big_theta - 2.0);
        w * cartesian_sum(&cj, r * sm[j], gamma, p)
    })
}

/// Integral norm from sampled polar jets.
pub fn norm_integral_jets(jets: &JetGrid, sp: &SpaceParams) -> Result<f64> {
    Ok(check_finite(integral_pow(jets, sp.gamma, sp.p, sp.big_theta, sp.theta)?)?.powf(1.0 / sp.p))
}

pub fn norm_integral(field: &dyn AnalyticField, sp: &SpaceParams, grid: &PolarGrid) -> Result<f64> {
    norm_integral_jets(&sample_jets(field, grid)?, sp)
}

/// Integral norm with `θ = Θ`, the norm of `H^γ_{p,Θ}(D)`.
pub fn norm_single_weight(field: &dyn AnalyticField, sp: &SpaceParams, grid: &PolarGrid) -> Result<f64> {
    norm_integral(field, &sp.with_weights(sp.big_theta, sp.big_theta), grid)
}

/// γ = 0 norm of a vector field `(v₁, …, v_m)` with pointwise
/// Euclidean length, `(∫ |v|₂^p w_{Θ,θ} dx)^{1/p}`.
pub fn norm_vector(components: &[&GridField], p: f64, big_theta: f64, theta: f64) -> Result<f64> {
    let grid = components
        .first()
        .ok_or_else(|| Error::Shape("vector norm needs at least one component".into()))?
        .grid();
    if components.iter().any(|c| c.grid() != grid) {
        return Err(Error::Shape("vector components live on different grids".into()));
    }
    let wedge = *grid.wedge();
    let s = grid.s_nodes();
    let phi = grid.phi_nodes();
    let v = grid.integrate(|i, j| {
        let len2: f64 = components.iter().map(|c| c.values()[[i, j]].norm_sqr()).sum();
        (theta * s[i]).exp() * sin_mu(phi[j], &wedge).powf(big_theta - 2.0) * len2.powf(p / 2.0)
    })?;
    Ok(v.powf(1.0 / p))
}

/// Contributions `c^{νθ}‖(ζ_ν u)(c^ν ·)‖^p` of the dyadic norm, for every
/// `ν` whose annulus meets the grid's `s`-range.
pub fn dyadic_terms(
    field: &dyn AnalyticField,
    sp: &SpaceParams,
    grid: &PolarGrid,
    res: &ResolutionOfUnity,
) -> Result<Vec<(i32, f64)>> {
    let l = res.log_base();
    let inner = make_grid(-l, l, DYADIC_INNER_NODES, grid.n_phi(), *grid.wedge())?;
    let nus: Vec<i32> = res.indices_for_log_range(grid.s_min(), grid.s_max()).collect();
    let profile: Vec<[f64; 3]> = inner.s_nodes().iter().map(|&s| res.profile_jet(s.exp())).collect();
    nus.into_par_iter()
        .map(|nu| {
            let shift = nu as f64 * l;
            let mut jets = JetGrid::zeros(&inner);
            for (i, &s) in inner.s_nodes().iter().enumerate() {
                if profile[i][0] == 0.0 && profile[i][1] == 0.0 && profile[i][2] == 0.0 {
                    continue;
                }
                for (j, &phi) in inner.phi_nodes().iter().enumerate() {
                    let jet = field.jet(s + shift, phi).map_err(|e| Error::Sampling {
                        i_s: i,
                        i_phi: j,
                        msg: e.to_string(),
                    })?;
                    jets.set(i, j, jet.times_radial(profile[i]));
                }
            }
            // single-weight inner norm: weight ρ_D^{Θ−2} = r^{Θ−2} sin μ^{Θ−2}
            let inner_pow = integral_pow(&jets, sp.gamma, sp.p, sp.big_theta, sp.big_theta)?;
            Ok((nu, (nu as f64 * l * sp.theta).exp() * inner_pow))
        })
        .collect()
}

pub fn norm_dyadic(
    field: &dyn AnalyticField,
    sp: &SpaceParams,
    grid: &PolarGrid,
    res: &ResolutionOfUnity,
) -> Result<f64> {
    let total: f64 = dyadic_terms(field, sp, grid, res)?.iter().map(|t| t.1).sum();
    Ok(check_finite(total)?.powf(1.0 / sp.p))
}

/// `(Σ_{k≤γ} ∫_I |ρ_I^k v^{(k)}|^p ρ_I^{Θ−1} dφ)^{1/p}` by the given rule;
/// `derivs[k]` holds `v^{(k)}` at the nodes.
pub fn norm_1d_interval(
    derivs: &[&[Complex64]],
    nodes: &[f64],
    weights: &[f64],
    gamma: usize,
    p: f64,
    big_theta: f64,
    wedge: &Wedge,
) -> Result<f64> {
    if derivs.len() <= gamma {
        return Err(Error::Capability(format!(
            "interval norm of order {gamma} needs {} derivative layers, got {}",
            gamma + 1,
            derivs.len()
        )));
    }
    let mut acc = 0.0;
    for (j, (&phi, &w)) in nodes.iter().zip(weights).enumerate() {
        let rho = rho_interval(phi, wedge);
        let mut local = 0.0;
        for (k, layer) in derivs.iter().take(gamma + 1).enumerate() {
            local += (rho.powi(k as i32) * layer[j].norm()).powf(p);
        }
        acc += w * local * rho.powf(big_theta - 1.0);
    }
    Ok(check_finite(acc)?.powf(1.0 / p))
}

/// Layers `R^j P^k ũ` of a jet grid, `j + k ≤ 2`.
fn layer(jets: &JetGrid, j: usize, k: usize) -> &Array2<Complex64> {
    match (j, k) {
        (0, 0) => &jets.u,
        (0, 1) => &jets.p,
        (0, 2) => &jets.pp,
        (1, 0) => &jets.r,
        (1, 1) => &jets.rp,
        (2, 0) => &jets.rr,
        _ => unreachable!("jets carry derivatives up to order two"),
    }
}

pub fn norm_polar_jets(jets: &JetGrid, sp: &SpaceParams) -> Result<f64> {
    let grid = &jets.grid;
    let wedge = *grid.wedge();
    let s = grid.s_nodes();
    let rho: Vec<f64> = grid.phi_nodes().iter().map(|&f| rho_interval(f, &wedge)).collect();
    let (g, p) = (sp.gamma, sp.p);
    let v = grid.integrate(|i, jj| {
        let mut acc = 0.0;
        for j in 0..=g {
            // H^{γ−j}_{p, Θ−1+jp}(I): weight ρ_I^{Θ−2+jp}
            let w = rho[jj].powf(sp.big_theta - 2.0 + j as f64 * p);
            for k in 0..=(g - j) {
                acc += w * (rho[jj].powi(k as i32) * layer(jets, j, k)[[i, jj]].norm()).powf(p);
            }
        }
        (sp.theta * s[i]).exp() * acc
    })?;
    Ok(check_finite(v)?.powf(1.0 / p))
}

pub fn norm_polar(field: &dyn AnalyticField, sp: &SpaceParams, grid: &PolarGrid) -> Result<f64> {
    norm_polar_jets(&sample_jets(field, grid)?, sp)
}

pub fn norm_mellin_jets(jets: &JetGrid, sp: &SpaceParams) -> Result<f64> {
    if sp.p != 2.0 {
        return Err(Error::Capability(format!("Mellin norm needs p = 2, got {}", sp.p)));
    }
    let grid = &jets.grid;
    let wedge = *grid.wedge();
    let c = -sp.theta / 2.0;
    let contour = MellinContour::for_grid(grid, c);
    let layers: Vec<Array2<Complex64>> = (0..=sp.gamma)
        .map(|k| forward_values(layer(jets, 0, k).view(), grid, c).0)
        .collect();
    let rho: Vec<f64> = grid.phi_nodes().iter().map(|&f| rho_interval(f, &wedge)).collect();
    let pw = grid.phi_weights();
    let mut total = 0.0;
    for kk in 0..contour.len() {
        let lam2 = contour.lambda(kk).norm_sqr();
        let mut acc = 0.0;
        for (jj, w) in pw.iter().enumerate() {
            for j in 0..=sp.gamma {
                let wt = lam2.powi(j as i32) * rho[jj].powf(sp.big_theta - 2.0 + 2.0 * j as f64);
                for k in 0..=(sp.gamma - j) {
                    acc += w * wt * rho[jj].powi(2 * k as i32) * layers[k][[kk, jj]].norm_sqr();
                }
            }
        }
        total += acc;
    }
    total *= contour.node_weight();
    Ok(check_finite(total)?.sqrt())
}

pub fn norm_mellin(field: &dyn AnalyticField, sp: &SpaceParams, grid: &PolarGrid) -> Result<f64> {
    norm_mellin_jets(&sample_jets(field, grid)?, sp)
}

/// Norm values for one field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub field_name: String,
    pub gamma: usize,
    pub p: f64,
    #[serde(rename = "Theta")]
    pub big_theta: f64,
    pub theta: f64,
    pub dyadic: f64,
    /// Dyadic norm with the second resolution of unity (base 2).
    pub dyadic_alt: f64,
    pub integral: f64,
    pub polar: f64,
    pub mellin: Option<f64>,
    /// Extremes of `dyadic/integral`, `polar/integral` and `mellin/integral`.
    pub ratio_max: f64,
    pub ratio_min: f64,
    pub grid: GridSpec,
}

impl NormReport {
    /// Named pairwise ratios.
    pub fn ratios(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("dyadic/integral", self.dyadic / self.integral),
            ("polar/integral", self.polar / self.integral),
            ("dyadic/polar", self.dyadic / self.polar),
            ("dyadic_alt/dyadic", self.dyadic_alt / self.dyadic),
        ];
        if let Some(m) = self.mellin {
            out.push(("mellin/integral", m / self.integral));
            out.push(("mellin/polar", m / self.polar));
        }
        out
    }
}

/// Range of one pairwise ratio over a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRange {
    pub pair: String,
    pub min: f64,
    pub max: f64,
}

impl RatioRange {
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub rows: Vec<NormReport>,
    pub summary: Vec<RatioRange>,
}

impl EquivalenceReport {
    pub fn range(&self, pair: &str) -> Option<&RatioRange> {
        self.summary.iter().find(|r| r.pair == pair)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "field_name,gamma,p,Theta,theta,dyadic,integral,polar,mellin,ratio_max,ratio_min")?;
        for r in &self.rows {
            let mellin = r.mellin.map(|m| m.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.field_name, r.gamma, r.p, r.big_theta, r.theta, r.dyadic, r.integral, r.polar, mellin, r.ratio_max, r.ratio_min
            )?;
        }
        Ok(())
    }
}

pub fn norm_report(field: &NamedField, sp: &SpaceParams, grid: &PolarGrid) -> Result<NormReport> {
    let f = field.field.as_ref();
    let jets = sample_jets(f, grid)?;
    let integral = norm_integral_jets(&jets, sp)?;
    let polar = norm_polar_jets(&jets, sp)?;
    let mellin = if sp.p == 2.0 { Some(norm_mellin_jets(&jets, sp)?) } else { None };
    let dyadic = norm_dyadic(f, sp, grid, &ResolutionOfUnity::default())?;
    let dyadic_alt = norm_dyadic(f, sp, grid, &ResolutionOfUnity::new(2.0)?)?;
    let against: Vec<f64> = [Some(dyadic), Some(polar), mellin]
        .into_iter()
        .flatten()
        .map(|v| v / integral)
        .collect();
    Ok(NormReport {
        field_name: field.name.clone(),
        gamma: sp.gamma,
        p: sp.p,
        big_theta: sp.big_theta,
        theta: sp.theta,
        dyadic,
        dyadic_alt,
        integral,
        polar,
        mellin,
        ratio_max: against.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ratio_min: against.iter().copied().fold(f64::INFINITY, f64::min),
        grid: grid.spec(),
    })
}

/// Norm reports for every member of `family` plus the extremes of each
/// pairwise ratio.
pub fn equivalence_report(family: &[NamedField], sp: &SpaceParams, grid: &PolarGrid) -> Result<EquivalenceReport> {
    if family.is_empty() {
        return Err(Error::config("family", "empty field family"));
    }
    let rows = family
        .iter()
        .map(|f| norm_report(f, sp, grid))
        .collect::<Result<Vec<_>>>()?;
    let mut summary: Vec<RatioRange> = Vec::new();
    for row in &rows {
        for (pair, v) in row.ratios() {
            match summary.iter_mut().find(|r| r.pair == pair) {
                Some(r) => {
                    r.min = r.min.min(v);
                    r.max = r.max.max(v);
                }
                None => summary.push(RatioRange {
                    pair: pair.to_string(),
                    min: v,
                    max: v,
                }),
            }
        }
    }
    Ok(EquivalenceReport { rows, summary })
}
