//! Functions on the wedge: analytic fields carrying exact polar derivatives,
//! sampled fields on log-polar tensor grids, and tensor quadrature.
//!
//! Throughout, `s = log r`, `R = r∂_r = ∂_s` and `P = ∂_φ`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polar_to_cart, smooth_step, Wedge};
use crate::quadrature::{composite_gauss, end_corrected_weights, gauss_legendre};

const GAUSS_PANEL: usize = 8;

/// Tensor grid in `(s, φ)`: uniform periodic-layout nodes in `s` and a
/// Gauss-Legendre rule on `(0, κ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    wedge: Wedge,
    s_min: f64,
    s_max: f64,
    n_s: usize,
    s_nodes: Vec<f64>,
    s_weights: Vec<f64>,
    phi_nodes: Vec<f64>,
    phi_weights: Vec<f64>,
}

/// Grid parameters as they appear in serialized outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub s_min: f64,
    pub s_max: f64,
    pub n_s: usize,
    pub n_phi: usize,
}

/// Builds a grid with `s_j = s_min + jΔs`, `Δs = (s_max − s_min)/n_s`,
/// `j = 0..n_s`. Uses 8-point Gauss panels in `φ` when `n_phi` is a multiple
/// of 8 and a single `n_phi`-point rule otherwise.
pub fn make_grid(s_min: f64, s_max: f64, n_s: usize, n_phi: usize, wedge: Wedge) -> Result<PolarGrid> {
    if !(s_min.is_finite() && s_max.is_finite() && s_min < s_max) {
        return Err(Error::config(
            "s_min/s_max",
            format!("need finite s_min < s_max, got [{s_min}, {s_max}]"),
        ));
    }
    if n_s < 8 || !n_s.is_power_of_two() {
        return Err(Error::config("n_s", format!("need a power of two ≥ 8, got {n_s}")));
    }
    if n_phi == 0 {
        return Err(Error::config("n_phi", "need at least one angular node"));
    }
    let ds = (s_max - s_min) / n_s as f64;
    let s_nodes: Vec<f64> = (0..n_s).map(|j| s_min + j as f64 * ds).collect();
    let s_weights = end_corrected_weights(n_s, ds);
    let (phi_nodes, phi_weights) = if n_phi.is_multiple_of(GAUSS_PANEL) {
        composite_gauss(0.0, wedge.kappa(), n_phi / GAUSS_PANEL, GAUSS_PANEL)
    } else {
        let (x, w) = gauss_legendre(n_phi);
        let h = 0.5 * wedge.kappa();
        (
            x.iter().map(|xi| h * (xi + 1.0)).collect(),
            w.iter().map(|wi| h * wi).collect(),
        )
    };
    Ok(PolarGrid {
        wedge,
        s_min,
        s_max,
        n_s,
        s_nodes,
        s_weights,
        phi_nodes,
        phi_weights,
    })
}

impl PolarGrid {
    pub fn wedge(&self) -> &Wedge {
        &self.wedge
    }
    pub fn s_min(&self) -> f64 {
        self.s_min
    }
    pub fn s_max(&self) -> f64 {
        self.s_max
    }
    pub fn n_s(&self) -> usize {
        self.n_s
    }
    pub fn n_phi(&self) -> usize {
        self.phi_nodes.len()
    }
    pub fn ds(&self) -> f64 {
        (self.s_max - self.s_min) / self.n_s as f64
    }
    pub fn s_nodes(&self) -> &[f64] {
        &self.s_nodes
    }
    /// End-corrected trapezoid weights over `[s_0, s_{n−1}]`.
    pub fn s_weights(&self) -> &[f64] {
        &self.s_weights
    }
    pub fn phi_nodes(&self) -> &[f64] {
        &self.phi_nodes
    }
    pub fn phi_weights(&self) -> &[f64] {
        &self.phi_weights
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.n_s, self.phi_nodes.len())
    }
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            s_min: self.s_min,
            s_max: self.s_max,
            n_s: self.n_s,
            n_phi: self.n_phi(),
        }
    }

    /// `∫∫ g(s, φ) ds dφ` by tensor quadrature; `g` is called with node
    /// indices. Non-finite summands are reported with their location.
    pub fn integrate<F>(&self, g: F) -> Result<f64>
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let rows: Vec<Result<f64>> = (0..self.n_s)
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                for (j, wj) in self.phi_weights.iter().enumerate() {
                    let v = g(i, j);
                    if !v.is_finite() {
                        return Err(Error::Integration { i_s: i, i_phi: j });
                    }
                    acc += wj * v;
                }
                Ok(self.s_weights[i] * acc)
            })
            .collect();
        let mut total = 0.0;
        for r in rows {
            total += r?;
        }
        Ok(total)
    }
}

/// Complex samples on a [`PolarGrid`], indexed `[s, φ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: PolarGrid,
    values: Array2<Complex64>,
}

impl GridField {
    pub fn new(grid: PolarGrid, values: Array2<Complex64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::Shape(format!(
                "values have shape {:?}, grid expects {:?}",
                values.dim(),
                grid.shape()
            )));
        }
        if let Some(((i, j), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Sampling {
                i_s: i,
                i_phi: j,
                msg: "non-finite value".into(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &PolarGrid) -> Self {
        Self {
            values: Array2::zeros(grid.shape()),
            grid: grid.clone(),
        }
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }
    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }
    pub fn into_values(self) -> Array2<Complex64> {
        self.values
    }

    /// Same grid, values transformed pointwise by `f(s, φ, value)`.
    pub fn map_with_coords<F>(&self, f: F) -> Self
    where
        F: Fn(f64, f64, Complex64) -> Complex64,
    {
        let mut values = self.values.clone();
        for ((i, j), v) in values.indexed_iter_mut() {
            *v = f(self.grid.s_nodes[i], self.grid.phi_nodes[j], *v);
        }
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.mapv(|v| alpha * v),
        }
    }

    /// Relative discrete 2-norm distance `‖self − other‖ / ‖other‖` over all
    /// nodes (plain sum, no quadrature weights).
    pub fn rel_l2_distance(&self, other: &GridField) -> f64 {
        let num: f64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = other.values.iter().map(|b| b.norm_sqr()).sum();
        if den == 0.0 {
            return num.sqrt();
        }
        (num / den).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let g = &self.grid;
        writeln!(
            out,
            "# kappa={},s_min={},s_max={},n_s={},n_phi={}",
            g.wedge.kappa(),
            g.s_min,
            g.s_max,
            g.n_s,
            g.n_phi()
        )?;
        writeln!(out, "s,phi,re,im")?;
        let mut line = String::new();
        for (i, s) in g.s_nodes.iter().enumerate() {
            for (j, phi) in g.phi_nodes.iter().enumerate() {
                let v = self.values[[i, j]];
                line.clear();
                let _ = writeln!(line, "{s},{phi},{},{}", v.re, v.im);
                out.write_all(line.as_bytes())?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid-field CSV".into()))??;
        let meta = parse_header(&header)?;
        let need = |k: &str| -> Result<f64> {
            meta.iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Parse(format!("header lacks `{k}`")))
        };
        let wedge = Wedge::new(need("kappa")?)?;
        let grid = make_grid(
            need("s_min")?,
            need("s_max")?,
            need("n_s")? as usize,
            need("n_phi")? as usize,
            wedge,
        )?;
        match lines.next() {
            Some(Ok(l)) if l.trim() == "s,phi,re,im" => {}
            _ => return Err(Error::Parse("expected column row `s,phi,re,im`".into())),
        }
        let (n_s, n_phi) = grid.shape();
        let mut values = Array2::zeros((n_s, n_phi));
        let mut count = 0usize;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if count >= n_s * n_phi {
                return Err(Error::Inconsistent("more rows than grid nodes".into()));
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {count}: {e}")))?;
            if cols.len() != 4 {
                return Err(Error::Parse(format!("row {count}: expected 4 columns")));
            }
            let (i, j) = (count / n_phi, count % n_phi);
            let ds = grid.ds();
            if (cols[0] - grid.s_nodes[i]).abs() > 1e-9 * (1.0 + ds)
                || (cols[1] - grid.phi_nodes[j]).abs() > 1e-9
            {
                return Err(Error::Inconsistent(format!(
                    "row {count}: node ({}, {}) does not match grid node ({}, {})",
                    cols[0], cols[1], grid.s_nodes[i], grid.phi_nodes[j]
                )));
            }
            values[[i, j]] = Complex64::new(cols[2], cols[3]);
            count += 1;
        }
        if count != n_s * n_phi {
            return Err(Error::Inconsistent(format!(
                "expected {} rows, found {count}",
                n_s * n_phi
            )));
        }
        GridField::new(grid, values)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_csv(file)
    }
}

pub(crate) fn parse_header(line: &str) -> Result<Vec<(String, f64)>> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("header must start with `#`".into()))?;
    body.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("malformed header entry `{kv}`")))?;
            let v = v
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("header `{k}`: {e}")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

/// Value and polar derivatives `u, Ru, Pu, R²u, RPu, P²u` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolarJet {
    pub u: Complex64,
    pub r: Complex64,
    pub p: Complex64,
    pub rr: Complex64,
    pub rp: Complex64,
    pub pp: Complex64,
}

impl PolarJet {
    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            u: a * self.u,
            r: a * self.r,
            p: a * self.p,
            rr: a * self.rr,
            rp: a * self.rp,
            pp: a * self.pp,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            u: self.u + o.u,
            r: self.r + o.r,
            p: self.p + o.p,
            rr: self.rr + o.rr,
            rp: self.rp + o.rp,
            pp: self.pp + o.pp,
        }
    }

    /// Jet of `m·u` for a multiplier depending on `s` only, given
    /// `(m, Rm, R²m)`.
    pub fn times_radial(&self, m: [f64; 3]) -> Self {
        let [m0, m1, m2] = m;
        Self {
            u: m0 * self.u,
            r: m1 * self.u + m0 * self.r,
            p: m0 * self.p,
            rr: m2 * self.u + 2.0 * m1 * self.r + m0 * self.rr,
            rp: m1 * self.p + m0 * self.rp,
            pp: m0 * self.pp,
        }
    }

    /// Product of a radial jet `(f, f', f'')` in `s` and an angular jet
    /// `(g, g', g'')` in `φ`.
    pub fn separable(radial: [f64; 3], angular: [Complex64; 3]) -> Self {
        let [f0, f1, f2] = radial;
        let [g0, g1, g2] = angular;
        Self {
            u: f0 * g0,
            r: f1 * g0,
            p: f0 * g1,
            rr: f2 * g0,
            rp: f1 * g1,
            pp: f0 * g2,
        }
    }

    /// Plain derivative `D_r^j D_φ^k ũ` at radius `r`, `j + k ≤ 2`.
    pub fn plain(&self, j: usize, k: usize, r: f64) -> Option<Complex64> {
        Some(match (j, k) {
            (0, 0) => self.u,
            (1, 0) => self.r / r,
            (0, 1) => self.p,
            (2, 0) => (self.rr - self.r) / (r * r),
            (1, 1) => self.rp / r,
            (0, 2) => self.pp,
            _ => return None,
        })
    }

    /// `(R² + P²)ũ`, i.e. `r²Δu`.
    pub fn log_laplacian(&self) -> Complex64 {
        self.rr + self.pp
    }
}

/// A function on the wedge that can report its value and polar
/// derivatives at any `(s, φ)`.
pub trait AnalyticField: Send + Sync {
    fn jet(&self, s: f64, phi: f64) -> Result<PolarJet>;

    /// `D_r^j D_φ^k ũ` at `(e^s, φ)`. The default covers `j + k ≤ 2`.
    fn polar_derivative(&self, j: usize, k: usize, s: f64, phi: f64) -> Result<Complex64> {
        let jet = self.jet(s, phi)?;
        jet.plain(j, k, s.exp()).ok_or_else(|| {
            Error::Capability(format!("field supplies derivatives up to order 2, asked for ({j}, {k})"))
        })
    }

    fn value(&self, s: f64, phi: f64) -> Result<Complex64> {
        Ok(self.jet(s, phi)?.u)
    }
}

pub type FieldRef = Arc<dyn AnalyticField>;

/// A field with a display name, as listed in reports.
#[derive(Clone)]
pub struct NamedField {
    pub name: String,
    pub field: FieldRef,
}

impl NamedField {
    pub fn new(name: impl Into<String>, field: impl AnalyticField + 'static) -> Self {
        Self {
            name: name.into(),
            field: Arc::new(field),
        }
    }
}

impl std::fmt::Debug for NamedField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NamedField").field("name", &self.name).finish()
    }
}

/// A real function of `s` with its first two derivatives.
pub trait RadialProfile: Send + Sync {
    fn eval(&self, s: f64) -> [f64; 3];
}

/// `e^{a s} P(s − s₀) exp(−(s − s₀)²/(2σ²))` with `P` a polynomial.
/// The class is closed under `∂_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPolyGauss {
    pub a: f64,
    pub center: f64,
    pub sigma: f64,
    pub poly: Vec<f64>,
}

impl ExpPolyGauss {
    pub fn gaussian(center: f64, sigma: f64) -> Self {
        Self {
            a: 0.0,
            center,
            sigma,
            poly: vec![1.0],
        }
    }

    pub fn derivative(&self) -> Self {
        let s2 = self.sigma * self.sigma;
        let n = self.poly.len();
        let mut out = vec![0.0; n + 1];
        for (k, &c) in self.poly.iter().enumerate() {
            out[k] += self.a * c;
            if k > 0 {
                out[k - 1] += k as f64 * c;
            }
            out[k + 1] -= c / s2;
        }
        Self {
            poly: out,
            ..self.clone()
        }
    }

    /// `self + alpha·other`; both must share `a`, centre and width.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Self {
        assert!(self.a == other.a && self.center == other.center && self.sigma == other.sigma);
        let n = self.poly.len().max(other.poly.len());
        let poly = (0..n)
            .map(|k| self.poly.get(k).copied().unwrap_or(0.0) + alpha * other.poly.get(k).copied().unwrap_or(0.0))
            .collect();
        Self {
            poly,
            ..self.clone()
        }
    }

    /// Multiplies by `e^{δ s}`.
    pub fn exp_shift(&self, delta: f64) -> Self {
        Self {
            a: self.a + delta,
            ..self.clone()
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        let x = s - self.center;
        let p = self.poly.iter().rev().fold(0.0, |acc, c| acc * x + c);
        (self.a * s - x * x / (2.0 * self.sigma * self.sigma)).exp() * p
    }
}

impl RadialProfile for ExpPolyGauss {
    fn eval(&self, s: f64) -> [f64; 3] {
        let d1 = self.derivative();
        let d2 = d1.derivative();
        [self.value(s), d1.value(s), d2.value(s)]
    }
}

/// `e^{−r}` as a function of `s`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpDecay;

impl RadialProfile for ExpDecay {
    fn eval(&self, s: f64) -> [f64; 3] {
        let r = s.exp();
        let u = (-r).exp();
        [u, -r * u, (r * r - r) * u]
    }
}

/// `r^a χ(s)` where `χ` is a smooth step from 1 (for `s ≤ s_lo`) to 0
/// (for `s ≥ s_hi`).
#[derive(Debug, Clone, Copy)]
pub struct PowerCutoff {
    pub a: f64,
    pub s_lo: f64,
    pub s_hi: f64,
}

impl RadialProfile for PowerCutoff {
    fn eval(&self, s: f64) -> [f64; 3] {
        let w = self.s_hi - self.s_lo;
        let [h, h1, h2] = smooth_step((self.s_hi - s) / w);
        let (c0, c1, c2) = (h, -h1 / w, h2 / (w * w));
        let e = (self.a * s).exp();
        let a = self.a;
        [e * c0, e * (a * c0 + c1), e * (a * a * c0 + 2.0 * a * c1 + c2)]
    }
}

/// Angular factor `sin(ωφ)` or `cos(ωφ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angular {
    Sin(f64),
    Cos(f64),
}

impl Angular {
    pub fn dirichlet_mode(n: usize, wedge: &Wedge) -> Self {
        Angular::Sin(wedge.omega(n))
    }

    pub fn eval(&self, phi: f64) -> [f64; 3] {
        match *self {
            Angular::Sin(w) => {
                let (s, c) = (w * phi).sin_cos();
                [s, w * c, -w * w * s]
            }
            Angular::Cos(w) => {
                let (s, c) = (w * phi).sin_cos();
                [c, -w * s, -w * w * c]
            }
        }
    }
}

/// `amplitude · f(s) · g(φ)`.
pub struct Separable<P: RadialProfile> {
    pub radial: P,
    pub angular: Angular,
    pub amplitude: Complex64,
}

impl<P: RadialProfile> Separable<P> {
    pub fn new(radial: P, angular: Angular) -> Self {
        Self {
            radial,
            angular,
            amplitude: Complex64::new(1.0, 0.0),
        }
    }
}

impl<P: RadialProfile> AnalyticField for Separable<P> {
    fn jet(&self, s: f64, phi: f64) -> Result<PolarJet> {
        let g = self.angular.eval(phi).map(|v| self.amplitude * v);
        Ok(PolarJet::separable(self.radial.eval(s), g))
    }
}

/// Compactly supported Cartesian bump
/// `exp(1 − 1/(1 − |x − x₀|²/ρ²))` for `|x − x₀| < ρ`.
#[derive(Debug, Clone, Copy)]
pub struct CartesianBump {
    pub center: [f64; 2],
    pub radius: f64,
}

impl CartesianBump {
    pub fn at_polar(r0: f64, phi0: f64, radius: f64) -> Self {
        Self {
            center: polar_to_cart(r0, phi0),
            radius,
        }
    }

    /// Value, gradient and Hessian at `x`.
    pub fn cartesian_jet(&self, x: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let r2 = self.radius * self.radius;
        let q = (d[0] * d[0] + d[1] * d[1]) / r2;
        if q >= 1.0 {
            return (0.0, [0.0; 2], [[0.0; 2]; 2]);
        }
        let om = 1.0 - q;
        let g = (1.0 - 1.0 / om).exp();
        let g1 = -g / (om * om);
        let g2 = g * (1.0 / om.powi(4) - 2.0 / om.powi(3));
        let dq = [2.0 * d[0] / r2, 2.0 * d[1] / r2];
        let grad = [g1 * dq[0], g1 * dq[1]];
        let mut hess = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                hess[a][b] = g2 * dq[a] * dq[b] + if a == b { 2.0 * g1 / r2 } else { 0.0 };
            }
        }
        (g, grad, hess)
    }
}

impl AnalyticField for CartesianBump {
    fn jet(&self, s: f64, phi: f64) -> Result<PolarJet> {
        let x = polar_to_cart(s.exp(), phi);
        let xp = [-x[1], x[0]];
        let (v, g, h) = self.cartesian_jet(x);
        let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        let quad = |a: [f64; 2], b: [f64; 2]| {
            a[0] * (h[0][0] * b[0] + h[0][1] * b[1]) + a[1] * (h[1][0] * b[0] + h[1][1] * b[1])
        };
        let c = |v: f64| Complex64::new(v, 0.0);
        Ok(PolarJet {
            u: c(v),
            r: c(dot(x, g)),
            p: c(dot(xp, g)),
            rr: c(dot(x, g) + quad(x, x)),
            rp: c(dot(xp, g) + quad(xp, x)),
            pp: c(-dot(x, g) + quad(xp, xp)),
        })
    }
}

/// Compactly supported bump in log-polar coordinates,
/// `exp(−α q/(1 − q))` with `q = ((s − s₀)/σ)² + ((φ − φ₀)/τ)² < 1`.
#[derive(Debug, Clone, Copy)]
pub struct LogPolarBump {
    pub s0: f64,
    pub sigma: f64,
    pub phi0: f64,
    pub tau: f64,
    pub alpha: f64,
}

impl AnalyticField for LogPolarBump {
    fn jet(&self, s: f64, phi: f64) -> Result<PolarJet> {
        let x = (s - self.s0) / self.sigma;
        let y = (phi - self.phi0) / self.tau;
        let q = x * x + y * y;
        if q >= 1.0 {
            return Ok(PolarJet::default());
        }
        let om = 1.0 - q;
        let a = self.alpha;
        let g = (-a * q / om).exp();
        // d/dq of −aq/(1−q) is −a/(1−q)²
        let e1 = -a / (om * om);
        let e2 = -2.0 * a / (om * om * om);
        let g1 = g * e1;
        let g2 = g * (e1 * e1 + e2);
        let (qs, qp) = (2.0 * x / self.sigma, 2.0 * y / self.tau);
        let (qss, qpp) = (2.0 / (self.sigma * self.sigma), 2.0 / (self.tau * self.tau));
        let c = |v: f64| Complex64::new(v, 0.0);
        Ok(PolarJet {
            u: c(g),
            r: c(g1 * qs),
            p: c(g1 * qp),
            rr: c(g2 * qs * qs + g1 * qss),
            rp: c(g2 * qs * qp),
            pp: c(g2 * qp * qp + g1 * qpp),
        })
    }
}

/// `α·f`.
pub struct Scaled {
    pub field: FieldRef,
    pub alpha: Complex64,
}

impl AnalyticField for Scaled {
    fn jet(&self, s: f64, phi: f64) -> Result<PolarJet> {
        Ok(self.field.jet(s, phi)?.scale(self.alpha))
    }
}

/// Pointwise sum of fields.
pub struct Sum {
    pub terms: Vec<FieldRef>,
}

impl AnalyticField for Sum {
    fn jet(&self, s: f64, phi: f64) -> Result<PolarJet> {
        let mut acc = PolarJet::default();
        for t in &self.terms {
            acc = acc.add(&t.jet(s, phi)?);
        }
        Ok(acc)
    }
}

/// `x ↦ f(a x)` with `a = e^{log_a}`. Polar jets commute with dilation.
pub struct Dilated {
    pub field: FieldRef,
    pub log_a: f64,
}

impl AnalyticField for Dilated {
    fn jet(&self, s: f64, phi: f64) -> Result<PolarJet> {
        self.field.jet(s + self.log_a, phi)
    }
}

/// `r^β · f`.
pub struct RadialPower {
    pub field: FieldRef,
    pub beta: f64,
}

impl AnalyticField for RadialPower {
    fn jet(&self, s: f64, phi: f64) -> Result<PolarJet> {
        let m = (self.beta * s).exp();
        let b = self.beta;
        Ok(self.field.jet(s, phi)?.times_radial([m, b * m, b * b * m]))
    }
}

/// Any closure `(s, φ) → jet`.
pub struct FnField<F>(pub F);

impl<F> AnalyticField for FnField<F>
where
    F: Fn(f64, f64) -> Result<PolarJet> + Send + Sync,
{
    fn jet(&self, s: f64, phi: f64) -> Result<PolarJet> {
        (self.0)(s, phi)
    }
}

/// Smooth separable field `η(s) sin(nπφ/κ)` with a Gaussian `η`.
pub fn separable_gaussian(wedge: &Wedge, n: usize, center: f64, sigma: f64) -> Separable<ExpPolyGauss> {
    Separable::new(ExpPolyGauss::gaussian(center, sigma), Angular::dirichlet_mode(n, wedge))
}

/// `r^{π/κ} sin(πφ/κ)` cut off smoothly between `s = 0` and `s = 2`.
pub fn corner_field(wedge: &Wedge) -> Separable<PowerCutoff> {
    Separable::new(
        PowerCutoff {
            a: wedge.omega(1),
            s_lo: 0.0,
            s_hi: 2.0,
        },
        Angular::dirichlet_mode(1, wedge),
    )
}

/// Bump centred at `s = 1/2` on the bisector: unit half-width in `s` and
/// half-width `0.9·κ/2` in `φ`.
pub fn off_axis_bump(wedge: &Wedge) -> LogPolarBump {
    let half = 0.5 * wedge.kappa();
    LogPolarBump {
        s0: 0.5,
        sigma: 1.0,
        phi0: half,
        tau: 0.9 * half,
        alpha: 4.0,
    }
}

/// The standard test corpus: `sep_n1..sep_n3`, `corner`, `bump`.
pub fn builtin_test_family(wedge: &Wedge) -> Vec<NamedField> {
    let mut family: Vec<NamedField> = [(1usize, 0.0), (2, 0.5), (3, -0.5)]
        .iter()
        .map(|&(n, c)| NamedField::new(format!("sep_n{n}"), separable_gaussian(wedge, n, c, 1.0)))
        .collect();
    family.push(NamedField::new("corner", corner_field(wedge)));
    family.push(NamedField::new("bump", off_axis_bump(wedge)));
    family
}

/// Seeded random combination of a few smooth separable modes.
pub fn random_mix(wedge: &Wedge, seed: u64) -> Sum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = (0..4)
        .map(|_| {
            let n = rng.random_range(1..=4usize);
            let mut f = separable_gaussian(
                wedge,
                n,
                rng.random_range(-2.0..2.0),
                rng.random_range(0.6..1.4),
            );
            f.amplitude = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            Arc::new(f) as FieldRef
        })
        .collect();
    Sum { terms }
}

/// Looks up a member of the builtin family, or `random_mix` (named
/// `random_mix`, seeded by `seed`).
pub fn builtin_by_name(wedge: &Wedge, name: &str, seed: u64) -> Option<NamedField> {
    if name == "random_mix" {
        return Some(NamedField::new(name, random_mix(wedge, seed)));
    }
    builtin_test_family(wedge).into_iter().find(|f| f.name == name)
}

/// Manufactured pair `(u*, Δu*)` with `u* = η(s) sin(nπφ/κ)`, `η` a
/// Gaussian in `s`; `Δu* = e^{−2s}(η'' − (nπ/κ)²η) sin(nπφ/κ)`.
pub fn manufactured(wedge: &Wedge, n: usize, center: f64, sigma: f64) -> (Separable<ExpPolyGauss>, Separable<ExpPolyGauss>) {
    let eta = ExpPolyGauss::gaussian(center, sigma);
    let w2 = wedge.omega(n).powi(2);
    let lap = eta.derivative().derivative().add_scaled(-w2, &eta).exp_shift(-2.0);
    let ang = Angular::dirichlet_mode(n, wedge);
    (Separable::new(eta, ang), Separable::new(lap, ang))
}

/// Manufactured pair for `u* = η(s) Σ_n c_n sin(nπφ/κ)` with a shared
/// Gaussian `η`.
pub fn manufactured_series(wedge: &Wedge, coeffs: &[f64], center: f64, sigma: f64) -> (Sum, Sum) {
    let (mut u, mut f): (Vec<FieldRef>, Vec<FieldRef>) = (Vec::new(), Vec::new());
    for (k, &c) in coeffs.iter().enumerate() {
        let (mut a, mut b) = manufactured(wedge, k + 1, center, sigma);
        a.amplitude = Complex64::new(c, 0.0);
        b.amplitude = Complex64::new(c, 0.0);
        u.push(Arc::new(a));
        f.push(Arc::new(b));
    }
    (Sum { terms: u }, Sum { terms: f })
}

/// Sine coefficients `2ρ^{−n}`, `ρ = a + √(a² − 1)`, of
/// `sin(x)/(a − cos x)`, truncated once they fall below `tol`.
pub fn geometric_sine_coeffs(a: f64, tol: f64) -> Vec<f64> {
    let rho = a + (a * a - 1.0).sqrt();
    (1..).map(|n| 2.0 * rho.powi(-n)).take_while(|c| *c >= tol).collect()
}

/// Samples a field at every grid node.
pub fn sample(field: &dyn AnalyticField, grid: &PolarGrid) -> Result<GridField> {
    let (n_s, n_phi) = grid.shape();
    let rows: Vec<Result<Vec<Complex64>>> = (0..n_s)
        .into_par_iter()
        .map(|i| {
            let s = grid.s_nodes[i];
            (0..n_phi)
                .map(|j| {
                    let v = field.value(s, grid.phi_nodes[j]).map_err(|e| Error::Sampling {
                        i_s: i,
                        i_phi: j,
                        msg: e.to_string(),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Sampling {
                            i_s: i,
                            i_phi: j,
                            msg: "non-finite value".into(),
                        });
                    }
                    Ok(v)
                })
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((n_s, n_phi));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row?.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    GridField::new(grid.clone(), values)
}

/// Polar jets sampled on a grid.
#[derive(Debug, Clone)]
pub struct JetGrid {
    pub grid: PolarGrid,
    pub u: Array2<Complex64>,
    pub r: Array2<Complex64>,
    pub p: Array2<Complex64>,
    pub rr: Array2<Complex64>,
    pub rp: Array2<Complex64>,
    pub pp: Array2<Complex64>,
}

impl JetGrid {
    pub fn zeros(grid: &PolarGrid) -> Self {
        let z = Array2::zeros(grid.shape());
        Self {
            grid: grid.clone(),
            u: z.clone(),
            r: z.clone(),
            p: z.clone(),
            rr: z.clone(),
            rp: z.clone(),
            pp: z,
        }
    }

    pub fn at(&self, i: usize, j: usize) -> PolarJet {
        PolarJet {
            u: self.u[[i, j]],
            r: self.r[[i, j]],
            p: self.p[[i, j]],
            rr: self.rr[[i, j]],
            rp: self.rp[[i, j]],
            pp: self.pp[[i, j]],
        }
    }

    pub fn set(&mut self, i: usize, j: usize, jet: PolarJet) {
        self.u[[i, j]] = jet.u;
        self.r[[i, j]] = jet.r;
        self.p[[i, j]] = jet.p;
        self.rr[[i, j]] = jet.rr;
        self.rp[[i, j]] = jet.rp;
        self.pp[[i, j]] = jet.pp;
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            u: self.u.mapv(|v| a * v),
            r: self.r.mapv(|v| a * v),
            p: self.p.mapv(|v| a * v),
            rr: self.rr.mapv(|v| a * v),
            rp: self.rp.mapv(|v| a * v),
            pp: self.pp.mapv(|v| a * v),
        }
    }

    pub fn value_field(&self) -> GridField {
        GridField {
            grid: self.grid.clone(),
            values: self.u.clone(),
        }
    }
}

/// Samples value and polar derivatives at every grid node.
pub fn sample_jets(field: &dyn AnalyticField, grid: &PolarGrid) -> Result<JetGrid> {
    let (n_s, n_phi) = grid.shape();
    let rows: Vec<Result<Vec<PolarJet>>> = (0..n_s)
        .into_par_iter()
        .map(|i| {
            let s = grid.s_nodes[i];
            (0..n_phi)
                .map(|j| {
                    field.jet(s, grid.phi_nodes[j]).map_err(|e| Error::Sampling {
                        i_s: i,
                        i_phi: j,
                        msg: e.to_string(),
                    })
                })
                .collect()
        })
        .collect();
    let mut out = JetGrid::zeros(grid);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, jet) in row?.into_iter().enumerate() {
            out.set(i, j, jet);
        }
    }
    Ok(out)
}

/// `∫_D g·w dx = ∫∫ g w e^{2s} ds dφ` over the truncated wedge.
pub fn quad_integrate<W>(gf: &GridField, weight: W) -> Result<Complex64>
where
    W: Fn(f64, f64) -> f64 + Sync,
{
    let g = gf.grid();
    let s = g.s_nodes();
    let phi = g.phi_nodes();
    let re = g.integrate(|i, j| gf.values[[i, j]].re * weight(s[i], phi[j]) * (2.0 * s[i]).exp())?;
    let im = g.integrate(|i, j| gf.values[[i, j]].im * weight(s[i], phi[j]) * (2.0 * s[i]).exp())?;
    Ok(Complex64::new(re, im))
}

/// Centered-difference approximation of `(R² + P²)ũ` at one point with
/// step `h` in both `s` and `φ`.
pub fn fd_log_laplacian(field: &dyn AnalyticField, s: f64, phi: f64, h: f64) -> Result<Complex64> {
    let v = |ds: f64, dp: f64| field.value(s + ds, phi + dp);
    let c = v(0.0, 0.0)?;
    let dss = (v(h, 0.0)? - 2.0 * c + v(-h, 0.0)?) / (h * h);
    let dpp = (v(0.0, h)? - 2.0 * c + v(0.0, -h)?) / (h * h);
    Ok(dss + dpp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn half_plane() -> Wedge {
        Wedge::new(PI).unwrap()
    }

    #[test]
    fn grid_construction() {
        let g = make_grid(-6.0, 6.0, 256, 64, half_plane()).unwrap();
        assert!((g.ds() - 12.0 / 256.0).abs() < 1e-15);
        assert!((g.phi_weights().iter().sum::<f64>() - PI).abs() < 1e-12);
        assert!(g.phi_nodes().iter().all(|&p| p > 0.0 && p < PI));
        assert!(g.phi_weights().iter().all(|&w| w > 0.0));
        let odd = make_grid(-6.0, 6.0, 16, 13, half_plane()).unwrap();
        assert!((odd.phi_weights().iter().sum::<f64>() - PI).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        let w = half_plane();
        assert!(matches!(make_grid(1.0, 0.0, 16, 8, w), Err(Error::Config { .. })));
        assert!(matches!(make_grid(0.0, 1.0, 12, 8, w), Err(Error::Config { .. })));
        assert!(matches!(make_grid(0.0, 1.0, 4, 8, w), Err(Error::Config { .. })));
        assert!(matches!(make_grid(0.0, 1.0, 16, 0, w), Err(Error::Config { .. })));
    }

    #[test]
    fn annulus_area() {
        let w = half_plane();
        let g = make_grid(-6.0, 6.0, 256, 16, w).unwrap();
        let one = GridField::new(g.clone(), Array2::from_elem(g.shape(), Complex64::new(1.0, 0.0))).unwrap();
        let got = quad_integrate(&one, |_, _| 1.0).unwrap().re;
        let (lo, hi) = (g.s_nodes()[0], *g.s_nodes().last().unwrap());
        let exact = PI * ((2.0 * hi).exp() - (2.0 * lo).exp()) / 2.0;
        assert!(((got - exact) / exact).abs() < 1e-10);
    }

    #[test]
    fn sampling_examples() {
        let w = half_plane();
        let g = make_grid(-2.0, 2.0, 16, 8, w).unwrap();
        let one = FnField(|_, _| {
            Ok(PolarJet {
                u: Complex64::new(1.0, 0.0),
                ..Default::default()
            })
        });
        assert!(sample(&one, &g).unwrap().values().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        let decay = Separable::new(ExpDecay, Angular::Cos(0.0));
        let gf = sample(&decay, &g).unwrap();
        let i0 = g.s_nodes().iter().position(|&s| s == 0.0).unwrap();
        assert!((gf.values()[[i0, 3]].re - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn sampling_rejects_non_finite_values() {
        let g = make_grid(-2.0, 2.0, 16, 8, half_plane()).unwrap();
        let bad = FnField(|s: f64, _| {
            Ok(PolarJet {
                u: Complex64::new(if s > 1.0 { f64::NAN } else { 0.0 }, 0.0),
                ..Default::default()
            })
        });
        match sample(&bad, &g) {
            Err(Error::Sampling { i_s, .. }) => assert!(g.s_nodes()[i_s] > 1.0),
            other => panic!("expected sampling error, got {other:?}"),
        }
    }

    #[test]
    fn separable_angular_integral() {
        let w = Wedge::new(1.2).unwrap();
        let g = make_grid(-3.0, 3.0, 32, 32, w).unwrap();
        let f = separable_gaussian(&w, 1, 0.0, 1.0);
        let gf = sample(&f, &g).unwrap();
        for (i, &s) in g.s_nodes().iter().enumerate() {
            let eta = (-s * s / 2.0).exp();
            let ang: f64 = (0..g.n_phi())
                .map(|j| g.phi_weights()[j] * gf.values()[[i, j]].re * (PI * g.phi_nodes()[j] / 1.2).sin())
                .sum();
            assert!((ang - eta * 1.2 / 2.0).abs() < 1e-10);
        }
    }

    fn gamma_integral(grid: &PolarGrid) -> f64 {
        let f = Separable::new(ExpDecay, Angular::Sin(1.0));
        let gf = sample(&f, grid).unwrap().map_with_coords(|_, _, v| v * v);
        quad_integrate(&gf, |_, _| 1.0).unwrap().re
    }

    #[test]
    fn exponential_integral_and_refinement() {
        let exact = PI / 2.0 * 0.25;
        let fine = make_grid(-20.0, 4.0, 1024, 32, half_plane()).unwrap();
        assert!(((gamma_integral(&fine) - exact) / exact).abs() < 1e-10);
        let mut prev = f64::NAN;
        for n in [16, 32] {
            let g = make_grid(-12.0, 4.0, n, 32, half_plane()).unwrap();
            let err = (gamma_integral(&g) - exact).abs();
            if prev.is_finite() {
                assert!(prev / err >= 3.5, "refinement ratio {}", prev / err);
            }
            prev = err;
        }
    }

    #[test]
    fn antisymmetric_integrand_vanishes() {
        let w = half_plane();
        let g = make_grid(-3.0, 3.0, 64, 32, w).unwrap();
        let f = Separable::new(ExpPolyGauss::gaussian(0.0, 1.0), Angular::Cos(1.0));
        let gf = sample(&f, &g).unwrap();
        assert!(quad_integrate(&gf, |_, _| 1.0).unwrap().norm() < 1e-12);
    }

    #[test]
    fn quad_reports_offending_node() {
        let g = make_grid(-1.0, 1.0, 16, 8, half_plane()).unwrap();
        let gf = GridField::zeros(&g);
        let err = quad_integrate(&gf, |s, _| if s > 0.5 { f64::INFINITY } else { 1.0 }).unwrap_err();
        assert!(matches!(err, Error::Integration { .. }));
    }

    #[test]
    fn corner_field_is_harmonic_where_cutoff_is_flat() {
        for kappa in [FRAC_PI_2, PI, 1.5 * PI] {
            let w = Wedge::new(kappa).unwrap();
            let f = corner_field(&w);
            for &(s, phi) in &[(-1.0, 0.3 * kappa), (-3.0, 0.7 * kappa), (-0.2, 0.5 * kappa)] {
                let scale = f.value(s, phi).unwrap().norm().max(1e-300);
                let lap = fd_log_laplacian(&f, s, phi, 1e-4).unwrap().norm();
                assert!(lap / scale < 1e-6, "kappa={kappa} s={s}: {lap}");
                assert!(f.jet(s, phi).unwrap().log_laplacian().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn builtin_family_basic_properties() {
        let w = half_plane();
        let fam = builtin_test_family(&w);
        let names: Vec<_> = fam.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["sep_n1", "sep_n2", "sep_n3", "corner", "bump"]);
        let sep = &fam[0].field;
        for s in [-1.0, 0.0, 2.0] {
            assert!(sep.value(s, 0.0).unwrap().norm() < 1e-15);
            assert!(sep.value(s, PI).unwrap().norm() < 1e-15);
        }
        let bump = off_axis_bump(&w);
        let res = crate::geometry::ResolutionOfUnity::default();
        let lo = bump.s0 - bump.sigma;
        let hi = bump.s0 + bump.sigma;
        let active: Vec<i32> = res
            .indices_for_log_range(lo, hi)
            .filter(|&nu| {
                (0..400).any(|k| {
                    let s = lo + (hi - lo) * k as f64 / 399.0;
                    res.zeta(nu, s.exp()) > 0.0
                })
            })
            .collect();
        assert!(active.len() <= 4);
    }

    fn check_jet_consistency(name: &str, f: &dyn AnalyticField, kappa: f64) {
        let h = 1e-4;
        for k in 0..60 {
            let s = -4.0 + 8.0 * k as f64 / 59.0;
            for m in 1..8 {
                let phi = kappa * m as f64 / 8.0;
                let j = f.jet(s, phi).unwrap();
                let v = |ds: f64, dp: f64| f.value(s + ds, phi + dp).unwrap();
                let fd_r = (v(h, 0.0) - v(-h, 0.0)) / (2.0 * h);
                let fd_p = (v(0.0, h) - v(0.0, -h)) / (2.0 * h);
                let fd_rr = (v(h, 0.0) - 2.0 * j.u + v(-h, 0.0)) / (h * h);
                let fd_pp = (v(0.0, h) - 2.0 * j.u + v(0.0, -h)) / (h * h);
                let fd_rp = (v(h, h) - v(h, -h) - v(-h, h) + v(-h, -h)) / (4.0 * h * h);
                let scale = 1.0 + j.u.norm();
                assert!((j.r - fd_r).norm() < 1e-6 * scale, "{name} R at s={s} phi={phi}: {} vs {}", j.r, fd_r);
                assert!((j.p - fd_p).norm() < 1e-6 * scale, "{name} P at s={s} phi={phi}");
                assert!((j.rr - fd_rr).norm() < 1e-4 * scale, "{name} RR at s={s}");
                assert!((j.pp - fd_pp).norm() < 1e-4 * scale, "{name} PP at s={s}");
                assert!((j.rp - fd_rp).norm() < 1e-4 * scale, "{name} RP at s={s}");
            }
        }
    }

    #[test]
    fn builtin_jets_match_finite_differences() {
        for kappa in [FRAC_PI_2, PI, 1.5 * PI] {
            let w = Wedge::new(kappa).unwrap();
            for f in builtin_test_family(&w) {
                check_jet_consistency(&f.name, f.field.as_ref(), kappa);
            }
            check_jet_consistency("random_mix", &random_mix(&w, 3), kappa);
            let (u, lap) = manufactured(&w, 1, 0.0, 1.0);
            check_jet_consistency("manufactured f", &lap, kappa);
            for k in 0..20 {
                let s = -3.0 + 0.3 * k as f64;
                let phi = 0.37 * kappa;
                let lhs = (-2.0 * s).exp() * u.jet(s, phi).unwrap().log_laplacian();
                assert!((lhs - lap.value(s, phi).unwrap()).norm() < 1e-12 * (1.0 + lhs.norm()));
            }
        }
    }

    #[test]
    fn combinators() {
        let w = half_plane();
        let base: FieldRef = Arc::new(separable_gaussian(&w, 2, 0.3, 0.8));
        let dil = Dilated {
            field: base.clone(),
            log_a: 0.7,
        };
        assert_eq!(dil.jet(0.1, 1.0).unwrap(), base.jet(0.1 + 0.7, 1.0).unwrap());
        let pw = RadialPower {
            field: base.clone(),
            beta: 1.5,
        };
        check_jet_consistency("radial power", &pw, PI);
        let sc = Scaled {
            field: base.clone(),
            alpha: Complex64::new(0.0, 2.0),
        };
        assert_eq!(sc.value(0.2, 0.4).unwrap(), Complex64::new(0.0, 2.0) * base.value(0.2, 0.4).unwrap());
        assert!(base.polar_derivative(3, 0, 0.0, 1.0).is_err());
    }

    #[test]
    fn sampling_is_linear() {
        let w = half_plane();
        let g = make_grid(-4.0, 4.0, 32, 16, w).unwrap();
        let f: FieldRef = Arc::new(separable_gaussian(&w, 1, 0.0, 1.0));
        let h: FieldRef = Arc::new(off_axis_bump(&w));
        let (a, b) = (Complex64::new(2.0, -1.0), Complex64::new(0.5, 0.25));
        let combo = Sum {
            terms: vec![
                Arc::new(Scaled { field: f.clone(), alpha: a }),
                Arc::new(Scaled { field: h.clone(), alpha: b }),
            ],
        };
        let lhs = sample(&combo, &g).unwrap();
        let sf = sample(f.as_ref(), &g).unwrap();
        let sh = sample(h.as_ref(), &g).unwrap();
        for ((l, x), y) in lhs.values().iter().zip(sf.values()).zip(sh.values()) {
            assert_eq!(*l, a * x + b * y);
        }
    }

    #[test]
    fn csv_round_trip() {
        let w = Wedge::new(1.5 * PI).unwrap();
        let g = make_grid(-3.0, 3.0, 16, 8, w).unwrap();
        let gf = sample(&random_mix(&w, 11), &g).unwrap();
        let mut buf = Vec::new();
        gf.write_csv(&mut buf).unwrap();
        let back = GridField::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, gf);
    }

    #[test]
    fn csv_rejects_truncated_input() {
        let w = half_plane();
        let g = make_grid(-3.0, 3.0, 16, 8, w).unwrap();
        let gf = GridField::zeros(&g);
        let mut buf = Vec::new();
        gf.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            GridField::read_csv(std::io::Cursor::new(cut)),
            Err(Error::Inconsistent(_))
        ));
        assert!(matches!(
            GridField::read_csv(std::io::Cursor::new("s,phi\n")),
            Err(Error::Parse(_))
        ));
    }

    proptest! {
        #[test]
        fn leibniz_matches_product_rule(s in -3.0f64..3.0, phi in 0.1f64..3.0, beta in -2.0f64..2.0) {
            let w = half_plane();
            let base: FieldRef = Arc::new(separable_gaussian(&w, 1, 0.0, 1.0));
            let prod = RadialPower { field: base.clone(), beta };
            let j = prod.jet(s, phi).unwrap();
            let b = base.jet(s, phi).unwrap();
            let m = (beta * s).exp();
            prop_assert!((j.u - m * b.u).norm() < 1e-12);
            prop_assert!((j.pp - m * b.pp).norm() < 1e-12);
            let exact_rr = m * (beta * beta * b.u + 2.0 * beta * b.r + b.rr);
            prop_assert!((j.rr - exact_rr).norm() < 1e-10 * (1.0 + exact_rr.norm()));
        }
    }

    #[test]
    fn geometric_series_matches_closed_form() {
        let w = Wedge::new(PI).unwrap();
        let c = geometric_sine_coeffs(1.5, 1e-18);
        let (u, _) = manufactured_series(&w, &c, 0.0, 1.0);
        for phi in [0.2f64, 1.1, 2.9] {
            let expect = phi.sin() / (1.5 - phi.cos());
            assert!((u.value(0.0, phi).unwrap().re - expect).abs() < 1e-14);
        }
    }
}
