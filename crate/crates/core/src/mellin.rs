//! Mellin transform `Mu(λ) = ∫₀^∞ r^{−λ−1} u(r) dr` on a vertical contour
//! `λ = c + it`, computed as a Fourier transform in `s = log r`:
//!
//! ```text
//! Mu(c + it) = ∫ e^{−its} e^{−cs} ũ(s) ds.
//! ```
//!
//! Discretization: with `s_j = s_min + jΔs` and `t_k = 2πk/(nΔs)` in FFT
//! order, `M_k = Δs e^{−i t_k s_min} FFT(e^{−cs}ũ)_k`. The inverse applies
//! `e^{cs}` to `(1/(nΔs))·IFFT(M_k e^{i t_k s_min})`, so the round trip is
//! the identity in exact arithmetic, and `Δt/(2π) = 1/(nΔs)` is the weight
//! of each contour node in Parseval sums.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fields::{GridField, PolarGrid};

/// Relative size of `e^{−cs}ũ` at the truncation ends above which a
/// forward transform records a truncation warning.
pub const DECAY_TOLERANCE: f64 = 1e-8;

/// Noise floor below which multiplier ratios are not evaluated.
pub const MULTIPLIER_NOISE_FLOOR: f64 = 1e-12;

/// Nodes `λ_k = c + i t_k` dual to a uniform `s`-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MellinContour {
    c: f64,
    s_min: f64,
    ds: f64,
    t: Vec<f64>,
}

impl MellinContour {
    pub fn for_grid(grid: &PolarGrid, c: f64) -> Self {
        let n = grid.n_s();
        let ds = grid.ds();
        let dt = 2.0 * PI / (n as f64 * ds);
        let t = (0..n)
            .map(|k| {
                let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
                kk * dt
            })
            .collect();
        Self {
            c,
            s_min: grid.s_min(),
            ds,
            t,
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn len(&self) -> usize {
        self.t.len()
    }
    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
    /// Frequencies in FFT order.
    pub fn t(&self) -> &[f64] {
        &self.t
    }
    pub fn dt(&self) -> f64 {
        2.0 * PI / (self.t.len() as f64 * self.ds)
    }
    pub fn lambda(&self, k: usize) -> Complex64 {
        Complex64::new(self.c, self.t[k])
    }
    /// `Δt/(2π)`, the weight of one node in `(1/2πi)∫ … dλ`.
    pub fn node_weight(&self) -> f64 {
        1.0 / (self.t.len() as f64 * self.ds)
    }
    pub fn nyquist(&self) -> f64 {
        PI / self.ds
    }
}

/// Mellin transform samples `Mu(λ_k, φ_j)`, indexed `[k, j]`.
#[derive(Debug, Clone)]
pub struct MellinField {
    contour: MellinContour,
    values: Array2<Complex64>,
    source_grid: PolarGrid,
    warnings: Vec<String>,
}

impl MellinField {
    pub fn new(contour: MellinContour, values: Array2<Complex64>, source_grid: PolarGrid) -> Result<Self> {
        if values.dim() != (contour.len(), source_grid.n_phi()) {
            return Err(Error::Shape(format!(
                "Mellin values {:?} vs contour {} × {} angles",
                values.dim(),
                contour.len(),
                source_grid.n_phi()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("non-finite Mellin values".into()));
        }
        Ok(Self {
            contour,
            values,
            source_grid,
            warnings: Vec::new(),
        })
    }

    pub fn contour(&self) -> &MellinContour {
        &self.contour
    }
    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.values
    }
    pub fn source_grid(&self) -> &PolarGrid {
        &self.source_grid
    }
    /// Truncation notices raised by the forward transform.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let g = &self.source_grid;
        writeln!(
            out,
            "# c={},kappa={},s_min={},s_max={},n_s={},n_phi={}",
            self.contour.c,
            g.wedge().kappa(),
            g.s_min(),
            g.s_max(),
            g.n_s(),
            g.n_phi()
        )?;
        writeln!(out, "t,phi,re,im")?;
        for (k, t) in self.contour.t.iter().enumerate() {
            for (j, phi) in g.phi_nodes().iter().enumerate() {
                let v = self.values[[k, j]];
                writeln!(out, "{t},{phi},{},{}", v.re, v.im)?;
            }
        }
        Ok(())
    }
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Forward transform of raw samples `[s, φ]`; returns `[k, φ]` values and
/// the largest relative end-of-grid magnitude of `e^{−cs}ũ`.
pub fn forward_values(values: ArrayView2<Complex64>, grid: &PolarGrid, c: f64) -> (Array2<Complex64>, f64) {
    let (n, n_phi) = values.dim();
    let contour = MellinContour::for_grid(grid, c);
    let fft = plan(n, false);
    let s = grid.s_nodes();
    let damp: Vec<f64> = s.iter().map(|&s| (-c * s).exp()).collect();
    let cols: Vec<(Vec<Complex64>, f64, f64)> = (0..n_phi)
        .into_par_iter()
        .map(|j| {
            let mut buf: Vec<Complex64> = (0..n).map(|i| damp[i] * values[[i, j]]).collect();
            let peak = buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let edge = [0, 1, n - 2, n - 1]
                .iter()
                .map(|&i| buf[i].norm())
                .fold(0.0, f64::max);
            fft.process(&mut buf);
            for (k, v) in buf.iter_mut().enumerate() {
                *v *= grid.ds() * Complex64::from_polar(1.0, -contour.t[k] * grid.s_min());
            }
            (buf, peak, edge)
        })
        .collect();
    let mut out = Array2::zeros((n, n_phi));
    let (mut peak, mut edge) = (0.0f64, 0.0f64);
    for (j, (col, p, e)) in cols.into_iter().enumerate() {
        for (k, v) in col.into_iter().enumerate() {
            out[[k, j]] = v;
        }
        peak = peak.max(p);
        edge = edge.max(e);
    }
    let rel = if peak > 0.0 { edge / peak } else { 0.0 };
    (out, rel)
}

/// Inverse transform of raw contour samples `[k, φ]` back to `[s, φ]`.
pub fn inverse_values(values: ArrayView2<Complex64>, grid: &PolarGrid, c: f64) -> Array2<Complex64> {
    let (n, n_phi) = values.dim();
    let contour = MellinContour::for_grid(grid, c);
    let ifft = plan(n, true);
    let scale = contour.node_weight();
    let s = grid.s_nodes();
    let cols: Vec<Vec<Complex64>> = (0..n_phi)
        .into_par_iter()
        .map(|j| {
            let mut buf: Vec<Complex64> = (0..n)
                .map(|k| values[[k, j]] * Complex64::from_polar(1.0, contour.t[k] * grid.s_min()))
                .collect();
            ifft.process(&mut buf);
            for (i, v) in buf.iter_mut().enumerate() {
                *v *= scale * (c * s[i]).exp();
            }
            buf
        })
        .collect();
    let mut out = Array2::zeros((n, n_phi));
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            out[[i, j]] = v;
        }
    }
    out
}

/// `Mu(c + it_k, φ_j)` for every contour node and angle.
pub fn mellin_forward(gf: &GridField, c: f64) -> Result<MellinField> {
    let grid = gf.grid();
    let (values, edge) = forward_values(gf.values().view(), grid, c);
    let mut mf = MellinField::new(MellinContour::for_grid(grid, c), values, grid.clone())?;
    if edge > DECAY_TOLERANCE {
        mf.warnings.push(format!(
            "e^(-cs)u is {edge:.3e} of its peak at the s-truncation (c = {c}); transform is aliased"
        ));
    }
    Ok(mf)
}

/// Inverse transform on the same contour.
pub fn mellin_inverse(mf: &MellinField) -> Result<GridField> {
    let grid = &mf.source_grid;
    let expected = MellinContour::for_grid(grid, mf.contour.c);
    if expected != mf.contour {
        return Err(Error::Shape("contour does not match the source grid".into()));
    }
    let values = inverse_values(mf.values.view(), grid, mf.contour.c);
    GridField::new(grid.clone(), values)
}

/// Both sides of the weighted Parseval identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsevalCheck {
    /// `∫∫ e^{2βs} u v̄ ds dφ` by direct quadrature.
    pub lhs: Complex64,
    /// `(1/2π) Σ_k Δt ∫ Mu Mv̄ dφ` on `Re λ = −β`.
    pub rhs: Complex64,
    /// `|lhs − rhs| / (‖u‖‖v‖)` with the weighted norms from direct quadrature.
    pub rel_gap: f64,
}

pub fn parseval_check(u: &GridField, v: &GridField, beta: f64) -> Result<ParsevalCheck> {
    let grid = u.grid();
    if grid != v.grid() {
        return Err(Error::Shape("Parseval check needs a common grid".into()));
    }
    let s = grid.s_nodes();
    let (uv, vv) = (u.values(), v.values());
    let w = |i: usize| (2.0 * beta * s[i]).exp();
    let lhs_re = grid.integrate(|i, j| w(i) * (uv[[i, j]] * vv[[i, j]].conj()).re)?;
    let lhs_im = grid.integrate(|i, j| w(i) * (uv[[i, j]] * vv[[i, j]].conj()).im)?;
    let nu = grid.integrate(|i, j| w(i) * uv[[i, j]].norm_sqr())?.sqrt();
    let nv = grid.integrate(|i, j| w(i) * vv[[i, j]].norm_sqr())?.sqrt();
    let mu = mellin_forward(u, -beta)?;
    let mv = mellin_forward(v, -beta)?;
    let pw = grid.phi_weights();
    let mut rhs = Complex64::new(0.0, 0.0);
    for k in 0..mu.contour.len() {
        for (j, wj) in pw.iter().enumerate() {
            rhs += wj * mu.values[[k, j]] * mv.values[[k, j]].conj();
        }
    }
    rhs *= mu.contour.node_weight();
    let lhs = Complex64::new(lhs_re, lhs_im);
    let scale = nu * nv;
    let rel_gap = if scale > 0.0 { (lhs - rhs).norm() / scale } else { 0.0 };
    Ok(ParsevalCheck { lhs, rhs, rel_gap })
}

/// `max |M(Ru) − λ Mu| / (1 + |λ Mu|)` over contour nodes where
/// `|Mu| > 1e−12`, with `ru` the samples of `r∂_r u`.
pub fn multiplier_check(u: &GridField, ru: &GridField, c: f64) -> Result<f64> {
    if u.grid() != ru.grid() {
        return Err(Error::Shape("multiplier check needs a common grid".into()));
    }
    let mu = mellin_forward(u, c)?;
    let mru = mellin_forward(ru, c)?;
    let mut worst = 0.0f64;
    for ((k, j), m) in mu.values.indexed_iter() {
        if m.norm() <= MULTIPLIER_NOISE_FLOOR {
            continue;
        }
        let lm = mu.contour.lambda(k) * m;
        worst = worst.max((mru.values[[k, j]] - lm).norm() / (1.0 + lm.norm()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_grid, sample, AnalyticField, sample_jets, Angular, ExpDecay, ExpPolyGauss, LogPolarBump, Separable};
    use crate::geometry::Wedge;
    use ndarray::Array2;
    use std::f64::consts::PI;

    fn radial_grid(s_min: f64, s_max: f64, n: usize) -> PolarGrid {
        make_grid(s_min, s_max, n, 4, Wedge::new(PI).unwrap()).unwrap()
    }

    fn radial<P: crate::fields::RadialProfile>(p: P) -> Separable<P> {
        Separable::new(p, Angular::Cos(0.0))
    }

    /// Composite Simpson on a log-spaced radial grid, as an independent oracle.
    fn simpson_gamma(order: f64) -> f64 {
        // ∫₀^∞ r^{order−1} e^{−r} dr in s = log r
        let (a, b, n) = (-60.0f64, 5.0f64, 200_000usize);
        let h = (b - a) / n as f64;
        let f = |s: f64| (order * s - s.exp()).exp();
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn contour_layout() {
        let g = radial_grid(-6.0, 6.0, 64);
        let c = MellinContour::for_grid(&g, 0.3);
        assert_eq!(c.len(), 64);
        assert!((c.dt() - 2.0 * PI / 12.0).abs() < 1e-15);
        assert_eq!(c.t()[0], 0.0);
        assert!((c.t()[1] + c.t()[63]).abs() < 1e-15);
        assert!((c.t()[32] + c.nyquist()).abs() < 1e-12);
    }

    #[test]
    fn gamma_values_of_exponential() {
        let g = radial_grid(-40.0, 5.0, 4096);
        let gf = sample(&radial(ExpDecay), &g).unwrap();
        for (lam, gamma) in [(-1.0, 1.0), (-2.0, 1.0), (-3.0, 2.0)] {
            let mf = mellin_forward(&gf, lam).unwrap();
            let v = mf.values()[[0, 1]];
            assert!((v.re - gamma).abs() < 1e-8 * gamma && v.im.abs() < 1e-10);
            let oracle = simpson_gamma(-lam);
            assert!((oracle - gamma).abs() < 1e-8 * gamma);
        }
    }

    #[test]
    fn transform_is_linear() {
        let g = radial_grid(-12.0, 12.0, 256);
        let a = sample(&radial(ExpPolyGauss::gaussian(0.0, 1.0)), &g).unwrap();
        let b = sample(&radial(ExpPolyGauss::gaussian(1.0, 0.5)), &g).unwrap();
        let (x, y) = (Complex64::new(2.0, 1.0), Complex64::new(-0.5, 0.0));
        let combo = GridField::new(g.clone(), a.values().mapv(|v| x * v) + b.values().mapv(|v| y * v)).unwrap();
        let lhs = mellin_forward(&combo, 0.4).unwrap();
        let ma = mellin_forward(&a, 0.4).unwrap();
        let mb = mellin_forward(&b, 0.4).unwrap();
        for ((l, p), q) in lhs.values().iter().zip(ma.values()).zip(mb.values()) {
            assert!((l - (x * p + y * q)).norm() < 1e-14 * (1.0 + l.norm()));
        }
    }

    #[test]
    fn round_trip_and_zero() {
        let g = radial_grid(-12.0, 12.0, 1024);
        let gf = sample(&radial(ExpPolyGauss::gaussian(0.5, 1.0)), &g).unwrap();
        for c in [0.0, -0.7, 1.1] {
            let back = mellin_inverse(&mellin_forward(&gf, c).unwrap()).unwrap();
            assert!(back.rel_l2_distance(&gf) < 1e-10, "c={c}");
        }
        let zero = MellinField::new(MellinContour::for_grid(&g, 0.0), Array2::zeros((1024, 4)), g.clone()).unwrap();
        assert!(mellin_inverse(&zero).unwrap().values().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn inverse_rejects_mismatched_contour() {
        let g = radial_grid(-12.0, 12.0, 64);
        let other = radial_grid(-10.0, 12.0, 64);
        let bad = MellinField::new(MellinContour::for_grid(&other, 0.0), Array2::zeros((64, 4)), g).unwrap();
        assert!(matches!(mellin_inverse(&bad), Err(Error::Shape(_))));
    }

    #[test]
    fn dilation_becomes_power_multiplier() {
        let g = radial_grid(-12.0, 12.0, 1024);
        let base = radial(ExpPolyGauss::gaussian(0.0, 1.0));
        let dil = crate::fields::Dilated {
            field: Arc::new(radial(ExpPolyGauss::gaussian(0.0, 1.0))),
            log_a: 2f64.ln(),
        };
        let c = 0.3;
        let mu = mellin_forward(&sample(&base, &g).unwrap(), c).unwrap();
        let md = mellin_forward(&sample(&dil, &g).unwrap(), c).unwrap();
        for k in 0..mu.contour().len() {
            let expect = (mu.contour().lambda(k) * 2f64.ln()).exp() * mu.values()[[k, 0]];
            let got = md.values()[[k, 0]];
            assert!((got - expect).norm() <= 1e-8 * mu.values().column(0).iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
    }

    #[test]
    fn parseval_examples() {
        let g = radial_grid(-12.0, 12.0, 1024);
        let u = sample(&radial(ExpPolyGauss::gaussian(0.0, 1.0)), &g).unwrap();
        let p = parseval_check(&u, &u, 0.0).unwrap();
        assert!(p.rel_gap < 1e-8);
        assert!(((p.lhs.re - PI * PI.sqrt()) / p.lhs.re).abs() < 1e-10);

        let b1 = LogPolarBump { s0: -3.0, sigma: 1.0, phi0: 1.5, tau: 1.0, alpha: 1.0 };
        let b2 = LogPolarBump { s0: 3.0, sigma: 1.0, phi0: 1.5, tau: 1.0, alpha: 1.0 };
        let (x, y) = (sample(&b1, &g).unwrap(), sample(&b2, &g).unwrap());
        let q = parseval_check(&x, &y, 0.0).unwrap();
        assert_eq!(q.lhs, Complex64::new(0.0, 0.0));
        let nx = parseval_check(&x, &x, 0.0).unwrap().rhs.re.sqrt();
        let ny = parseval_check(&y, &y, 0.0).unwrap().rhs.re.sqrt();
        assert!(q.rhs.norm() <= 1e-10 * nx * ny);

        let beta = 0.6;
        let direct = parseval_check(&u, &x, beta).unwrap();
        let shift = |f: &GridField| f.map_with_coords(|s, _, v| (beta * s).exp() * v);
        let shifted = parseval_check(&shift(&u), &shift(&x), 0.0).unwrap();
        assert!((direct.rhs - shifted.rhs).norm() <= 1e-9 * direct.rhs.norm());
        assert!(direct.rel_gap < 1e-8);
    }

    #[test]
    fn parseval_gap_shrinks_under_refinement() {
        let mut prev = f64::INFINITY;
        for n in [32, 64, 128] {
            let g = radial_grid(-12.0, 12.0, n);
            let u = sample(&radial(ExpPolyGauss::gaussian(0.0, 1.0)), &g).unwrap();
            let gap = parseval_check(&u, &u, 0.2).unwrap().rel_gap;
            assert!(gap <= prev.max(1e-14), "n={n}: {gap} vs {prev}");
            prev = gap;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn multiplier_examples() {
        let g = radial_grid(-40.0, 5.0, 4096);
        let jets = sample_jets(&radial(ExpDecay), &g).unwrap();
        let u = jets.value_field();
        let ru = GridField::new(g.clone(), jets.r.clone()).unwrap();
        assert!(multiplier_check(&u, &ru, -1.0).unwrap() <= 1e-7);

        let g = radial_grid(-12.0, 12.0, 1024);
        let bump = radial(ExpPolyGauss::gaussian(0.0, 1.0));
        let u = sample(&bump, &g).unwrap();
        let h = 1e-4;
        let fd = u.map_with_coords(|s, _, _| {
            let f = |s: f64| bump.value(s, 0.0).unwrap();
            (f(s + h) - f(s - h)) / (2.0 * h)
        });
        assert!(multiplier_check(&u, &fd, 0.0).unwrap() <= 1e-7);
        let zero = GridField::zeros(&g);
        assert_eq!(multiplier_check(&zero, &zero, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn truncation_warning() {
        let g = radial_grid(-3.0, 3.0, 64);
        let u = sample(&radial(ExpPolyGauss::gaussian(0.0, 1.0)), &g).unwrap();
        assert!(!mellin_forward(&u, 0.0).unwrap().warnings().is_empty());
        let g = radial_grid(-12.0, 12.0, 256);
        let u = sample(&radial(ExpPolyGauss::gaussian(0.0, 1.0)), &g).unwrap();
        assert!(mellin_forward(&u, 0.0).unwrap().warnings().is_empty());
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let g = radial_grid(-12.0, 12.0, 16);
        let u = sample(&radial(ExpPolyGauss::gaussian(0.0, 1.0)), &g).unwrap();
        let mut buf = Vec::new();
        mellin_forward(&u, 0.5).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# c=0.5,"));
        assert_eq!(lines.next().unwrap(), "t,phi,re,im");
        assert_eq!(lines.count(), 16 * 4);
    }
}
