//! One-dimensional Dirichlet resolvent `(λ² + D_φ²)u = f`, `u(0) = u(κ) = 0`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Wedge;
use crate::norms::norm_1d_interval;
use crate::quadrature::{composite_gauss, end_corrected_weights};

use super::SINGULAR_TOLERANCE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolventMethod {
    /// Diagonal division in the discrete sine basis.
    Sine,
    /// Three-point finite differences.
    Fd,
    /// Quadrature against the Green's kernel.
    Green,
}

/// Interior nodes `jκ/(n+1)`, `j = 1..=n`.
pub fn uniform_nodes(wedge: &Wedge, n: usize) -> Vec<f64> {
    let h = wedge.kappa() / (n + 1) as f64;
    (1..=n).map(|j| j as f64 * h).collect()
}

/// DST-I, `y_k = Σ_j x_j sin(πjk/(n+1))`, through a length `2(n+1)` FFT.
pub fn dst1(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let m = 2 * (n + 1);
    let mut z = vec![Complex64::new(0.0, 0.0); m];
    for (j, &v) in x.iter().enumerate() {
        z[j + 1] = v;
        z[m - 1 - j] = -v;
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut z);
    let half_i = Complex64::new(0.0, 0.5);
    (1..=n).map(|k| half_i * z[k]).collect()
}

/// `sin(z)·e^{−|Im z|}`, bounded for all `z`.
pub fn scaled_sin(z: Complex64) -> Complex64 {
    let (a, b) = (z.re, z.im);
    let e = (-2.0 * b.abs()).exp();
    let ch = 0.5 * (1.0 + e);
    let sh = 0.5 * b.signum() * (1.0 - e);
    Complex64::new(a.sin() * ch, a.cos() * sh)
}

fn check_poles(lambda: Complex64, wedge: &Wedge, n_max: usize) -> Result<()> {
    let l2 = lambda * lambda;
    for n in 1..=n_max {
        let dist = (l2 - wedge.omega(n).powi(2)).norm();
        if dist <= SINGULAR_TOLERANCE {
            return Err(Error::Singularity {
                re: lambda.re,
                im: lambda.im,
                n,
                dist,
            });
        }
    }
    Ok(())
}

/// Solves `(λ² + D_φ²)u = f` with zero boundary values; `f` and the result
/// live on [`uniform_nodes`].
pub fn resolvent_1d(lambda: Complex64, f: &[Complex64], wedge: &Wedge, method: ResolventMethod) -> Result<Vec<Complex64>> {
    let n = f.len();
    if n == 0 {
        return Err(Error::Shape("empty profile".into()));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite profile".into()));
    }
    check_poles(lambda, wedge, n)?;
    Ok(match method {
        ResolventMethod::Sine => resolvent_sine(lambda, f, wedge),
        ResolventMethod::Fd => resolvent_fd(lambda, f, wedge),
        ResolventMethod::Green => resolvent_green(lambda, f, wedge),
    })
}

fn resolvent_sine(lambda: Complex64, f: &[Complex64], wedge: &Wedge) -> Vec<Complex64> {
    let n = f.len();
    let scale = 2.0 / (n + 1) as f64;
    let l2 = lambda * lambda;
    let coeffs: Vec<Complex64> = dst1(f)
        .iter()
        .enumerate()
        .map(|(k, &c)| scale * c / (l2 - wedge.omega(k + 1).powi(2)))
        .collect();
    dst1(&coeffs)
}

fn resolvent_fd(lambda: Complex64, f: &[Complex64], wedge: &Wedge) -> Vec<Complex64> {
    let n = f.len();
    let h = wedge.kappa() / (n + 1) as f64;
    let off = Complex64::new(1.0 / (h * h), 0.0);
    let diag = lambda * lambda - 2.0 / (h * h);
    // Thomas algorithm
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    c[0] = off / diag;
    d[0] = f[0] / diag;
    for i in 1..n {
        let m = diag - off * c[i - 1];
        c[i] = off / m;
        d[i] = (f[i] - off * d[i - 1]) / m;
    }
    let mut u = d;
    for i in (0..n - 1).rev() {
        let next = u[i + 1];
        u[i] -= c[i] * next;
    }
    u
}

/// `G(φ, ψ)` with `φ_< = min`, `φ_> = max`, in overflow-safe form.
fn green_kernel(lambda: Complex64, lo: f64, hi: f64, kappa: f64) -> Complex64 {
    if lambda.norm() < 1e-8 {
        return Complex64::new(-lo * (kappa - hi) / kappa, 0.0);
    }
    let damp = (-lambda.im.abs() * (hi - lo)).exp();
    -scaled_sin(lambda * lo) * scaled_sin(lambda * (kappa - hi)) / (lambda * scaled_sin(lambda * kappa)) * damp
}

fn resolvent_green(lambda: Complex64, f: &[Complex64], wedge: &Wedge) -> Vec<Complex64> {
    let n = f.len();
    let kappa = wedge.kappa();
    let h = kappa / (n + 1) as f64;
    // nodes 0..=n+1 including both endpoints, where f vanishes
    let phi: Vec<f64> = (0..n + 2).map(|j| j as f64 * h).collect();
    let fx = |m: usize| if m == 0 || m == n + 1 { Complex64::new(0.0, 0.0) } else { f[m - 1] };
    let weights: Vec<Vec<f64>> = (0..=n + 2)
        .map(|len| if len >= 2 { end_corrected_weights(len, h) } else { Vec::new() })
        .collect();
    (1..=n)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            // kernel is smooth on each side of ψ = φ_i
            for (m, w) in weights[i + 1].iter().enumerate() {
                acc += *w * green_kernel(lambda, phi[m], phi[i], kappa) * fx(m);
            }
            for (k, w) in weights[n + 2 - i].iter().enumerate() {
                let m = i + k;
                acc += *w * green_kernel(lambda, phi[i], phi[m], kappa) * fx(m);
            }
            acc
        })
        .collect()
}

/// Dirichlet sine series `Σ_n c_n sin(nπφ/κ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SineSeries {
    pub wedge: Wedge,
    pub coeffs: Vec<Complex64>,
}

impl SineSeries {
    /// Interpolating series through samples on [`uniform_nodes`].
    pub fn from_samples(wedge: &Wedge, f: &[Complex64]) -> Self {
        let scale = 2.0 / (f.len() + 1) as f64;
        Self {
            wedge: *wedge,
            coeffs: dst1(f).into_iter().map(|c| scale * c).collect(),
        }
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(wedge: &Wedge, n: usize, f: F) -> Self {
        let samples: Vec<Complex64> = uniform_nodes(wedge, n).into_iter().map(f).collect();
        Self::from_samples(wedge, &samples)
    }

    /// Value and first two derivatives.
    pub fn eval_jet(&self, phi: f64) -> [Complex64; 3] {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (k, c) in self.coeffs.iter().enumerate() {
            let w = self.wedge.omega(k + 1);
            let (s, co) = (w * phi).sin_cos();
            out[0] += c * s;
            out[1] += c * (w * co);
            out[2] -= c * (w * w * s);
        }
        out
    }

    pub fn eval(&self, phi: f64) -> Complex64 {
        self.eval_jet(phi)[0]
    }

    /// Resolvent applied mode by mode.
    pub fn resolvent(&self, lambda: Complex64) -> Result<Self> {
        check_poles(lambda, &self.wedge, self.coeffs.len())?;
        let l2 = lambda * lambda;
        Ok(Self {
            wedge: self.wedge,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c / (l2 - self.wedge.omega(k + 1).powi(2)))
                .collect(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }
}

/// Seeded smooth profile vanishing to third order at both ends plus a few
/// low sine modes.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomProfile {
    wedge: Wedge,
    trig: Vec<(Complex64, Complex64)>,
    low: Vec<Complex64>,
}

impl RandomProfile {
    pub fn eval(&self, phi: f64) -> Complex64 {
        let w = self.wedge.omega(1);
        let envelope = (w * phi).sin().powi(3);
        let mut poly = Complex64::new(0.0, 0.0);
        for (k, (a, b)) in self.trig.iter().enumerate() {
            let (s, c) = (k as f64 * w * phi).sin_cos();
            poly += a * c + b * s;
        }
        let mut modes = Complex64::new(0.0, 0.0);
        for (n, c) in self.low.iter().enumerate() {
            modes += c * ((n + 1) as f64 * w * phi).sin();
        }
        envelope * poly + modes
    }
}

pub fn random_profile(wedge: &Wedge, seed: u64) -> RandomProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let trig = (0..4).map(|_| (c(), c())).collect();
    let mut low: Vec<Complex64> = (0..3).map(|_| c()).collect();
    // keep the first mode present so near-pole probes have signal
    low[0] += Complex64::new(1.0, 0.0);
    RandomProfile {
        wedge: *wedge,
        trig,
        low,
    }
}

/// Gauss panels used for the interval norms of the estimate check.
const ESTIMATE_PANELS: usize = 96;

/// `Σ_{j=0}^{2} |λ|^j ‖u|H^{2−j}_{2,Θ−2+2j}(I)‖ / ‖f|L_{2,Θ+2}(I)‖` for
/// `u = R(λ²)f`. The ratio is 0 for `f = 0`.
pub fn resolvent_estimate_check(lambda: Complex64, f: &SineSeries, big_theta: f64) -> Result<f64> {
    if f.is_zero() {
        return Ok(0.0);
    }
    let wedge = f.wedge;
    let u = f.resolvent(lambda)?;
    let (nodes, weights) = composite_gauss(0.0, wedge.kappa(), ESTIMATE_PANELS, 8);
    let l2 = lambda * lambda;
    let mut fv = Vec::with_capacity(nodes.len());
    let (mut u0, mut u1, mut u2) = (Vec::new(), Vec::new(), Vec::new());
    for &phi in &nodes {
        let fj = f.eval(phi);
        let uj = u.eval_jet(phi);
        fv.push(fj);
        u0.push(uj[0]);
        u1.push(uj[1]);
        u2.push(fj - l2 * uj[0]);
    }
    let ab = lambda.norm();
    let n1 = |d: &[&[Complex64]], g: usize, t: f64| norm_1d_interval(d, &nodes, &weights, g, 2.0, t, &wedge);
    let lhs = n1(&[&u0, &u1, &u2], 2, big_theta - 2.0)?
        + ab * n1(&[&u0, &u1], 1, big_theta)?
        + ab * ab * n1(&[&u0], 0, big_theta + 2.0)?;
    let rhs = n1(&[&fv], 0, big_theta + 2.0)?;
    Ok(lhs / rhs)
}

/// Estimate ratios along `Re λ = re`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateSweep {
    pub re: f64,
    pub im: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// Least-squares slope of `log ratio` against `log |λ|` over `1 ≤ |λ| ≤ 100`.
    pub slope: f64,
}

pub fn resolvent_estimate_sweep(re: f64, im: &[f64], f: &SineSeries, big_theta: f64) -> Result<EstimateSweep> {
    let ratios = im
        .iter()
        .map(|&b| resolvent_estimate_check(Complex64::new(re, b), f, big_theta))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median_ratio = sorted[sorted.len() / 2];
    let pts: Vec<(f64, f64)> = im
        .iter()
        .zip(&ratios)
        .map(|(&b, &r)| (Complex64::new(re, b).norm(), r))
        .filter(|(l, _)| (1.0..=100.0).contains(l))
        .map(|(l, r)| (l.ln(), r.ln()))
        .collect();
    let slope = ls_slope(&pts);
    Ok(EstimateSweep {
        re,
        im: im.to_vec(),
        max_ratio: sorted[sorted.len() - 1],
        median_ratio,
        ratios,
        slope,
    })
}

pub(crate) fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
