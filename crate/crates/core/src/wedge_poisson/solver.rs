//! Mellin–sine pipeline: `r²f → M → (λ² + D_φ²)⁻¹ → M⁻¹`.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{sample, AnalyticField, GridField, JetGrid};
use crate::mellin::{forward_values, inverse_values, MellinContour, DECAY_TOLERANCE};

use super::{PoissonParams, SINGULAR_TOLERANCE};

/// Sine coefficients `[k, n]` over the contour nodes, mode `n + 1` in
/// column `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SineSpectrum {
    pub contour: MellinContour,
    pub coeffs: Array2<Complex64>,
}

impl SineSpectrum {
    pub fn n_modes(&self) -> usize {
        self.coeffs.ncols()
    }
}

/// Solver output.
#[derive(Debug, Clone)]
pub struct Solution {
    /// Value and spectral polar derivatives of `u` on the grid.
    pub jets: JetGrid,
    /// Sine coefficients of `M[r²f]`.
    pub data: SineSpectrum,
    /// Sine coefficients of `M[u]`.
    pub spectrum: SineSpectrum,
    pub warnings: Vec<String>,
}

impl Solution {
    pub fn u(&self) -> GridField {
        self.jets.value_field()
    }

    /// `u` synthesised at arbitrary angles, `[s, φ]`.
    pub fn synthesize_at(&self, phis: &[f64]) -> Array2<Complex64> {
        let grid = &self.jets.grid;
        let wedge = grid.wedge();
        let m = Array2::from_shape_fn((self.spectrum.contour.len(), phis.len()), |(k, j)| {
            (0..self.spectrum.n_modes())
                .map(|n| self.spectrum.coeffs[[k, n]] * (wedge.omega(n + 1) * phis[j]).sin())
                .sum()
        });
        inverse_values(m.view(), grid, self.spectrum.contour.c())
    }
}

/// Solves `Δu = f`, `u = 0` on both edges, for `f` sampled on `pp.grid`.
pub fn solve_poisson(f: &GridField, pp: &PoissonParams) -> Result<Solution> {
    let grid = &pp.grid;
    if f.grid() != grid {
        return Err(Error::Shape("data grid differs from the solver grid".into()));
    }
    let mut warnings = pp.admissible()?;
    let wedge = *grid.wedge();
    let c = pp.contour_c();
    let s = grid.s_nodes();
    let (n_s, n_phi) = grid.shape();
    let n_modes = pp.n_modes;

    let g = Array2::from_shape_fn((n_s, n_phi), |(i, j)| (2.0 * s[i]).exp() * f.values()[[i, j]]);
    let (gm, edge) = forward_values(g.view(), grid, c);
    if edge > DECAY_TOLERANCE {
        warnings.push(format!(
            "e^(-cs) r^2 f is {edge:.3e} of its peak at the s-truncation; contour data is aliased"
        ));
    }
    let contour = MellinContour::for_grid(grid, c);

    let omega: Vec<f64> = (1..=n_modes).map(|n| wedge.omega(n)).collect();
    let phi = grid.phi_nodes();
    let pw = grid.phi_weights();
    let sin_tab = Array2::from_shape_fn((n_phi, n_modes), |(j, n)| (omega[n] * phi[j]).sin());
    let cos_tab = Array2::from_shape_fn((n_phi, n_modes), |(j, n)| (omega[n] * phi[j]).cos());
    if n_modes > n_phi / 2 {
        return Err(Error::config(
            "n_modes",
            format!("need n_modes ≤ n_phi/2 = {}, got {n_modes}", n_phi / 2),
        ));
    }
    // Galerkin projection with the discrete Gram matrix, exact for data
    // spanned by the first n_modes sines
    let gram: Vec<Vec<f64>> = (0..n_modes)
        .map(|a| (0..n_modes).map(|b| (0..n_phi).map(|j| pw[j] * sin_tab[[j, a]] * sin_tab[[j, b]]).sum()).collect())
        .collect();
    let chol = cholesky(gram)?;

    struct Row {
        f_n: Vec<Complex64>,
        u_n: Vec<Complex64>,
        u: Vec<Complex64>,
        p: Vec<Complex64>,
        pp: Vec<Complex64>,
    }
    let rows: Vec<Result<Row>> = (0..n_s)
        .into_par_iter()
        .map(|k| {
            let lam = contour.lambda(k);
            let l2 = lam * lam;
            let mut f_n = vec![Complex64::new(0.0, 0.0); n_modes];
            for (n, fc) in f_n.iter_mut().enumerate() {
                for j in 0..n_phi {
                    *fc += pw[j] * sin_tab[[j, n]] * gm[[k, j]];
                }
            }
            cholesky_solve(&chol, &mut f_n);
            let mut u_n = Vec::with_capacity(n_modes);
            for (n, fc) in f_n.iter().enumerate() {
                let dist = (lam - omega[n]).norm().min((lam + omega[n]).norm());
                if dist <= SINGULAR_TOLERANCE {
                    return Err(Error::Singularity {
                        re: lam.re,
                        im: lam.im,
                        n: n + 1,
                        dist,
                    });
                }
                u_n.push(fc / (l2 - omega[n] * omega[n]));
            }
            let mut u = vec![Complex64::new(0.0, 0.0); n_phi];
            let mut p = u.clone();
            let mut pp = u.clone();
            for j in 0..n_phi {
                for (n, un) in u_n.iter().enumerate() {
                    u[j] += un * sin_tab[[j, n]];
                    p[j] += un * (omega[n] * cos_tab[[j, n]]);
                    pp[j] -= un * (omega[n] * omega[n] * sin_tab[[j, n]]);
                }
            }
            Ok(Row { f_n, u_n, u, p, pp })
        })
        .collect();

    let mut data = Array2::zeros((n_s, n_modes));
    let mut spec = Array2::zeros((n_s, n_modes));
    let mut mu = Array2::zeros((n_s, n_phi));
    let mut mp = Array2::zeros((n_s, n_phi));
    let mut mpp = Array2::zeros((n_s, n_phi));
    for (k, row) in rows.into_iter().enumerate() {
        let row = row?;
        for n in 0..n_modes {
            data[[k, n]] = row.f_n[n];
            spec[[k, n]] = row.u_n[n];
        }
        for j in 0..n_phi {
            mu[[k, j]] = row.u[j];
            mp[[k, j]] = row.p[j];
            mpp[[k, j]] = row.pp[j];
        }
    }

    let mul = |m: &Array2<Complex64>, pow: i32| {
        Array2::from_shape_fn((n_s, n_phi), |(k, j)| contour.lambda(k).powi(pow) * m[[k, j]])
    };
    let back = |m: &Array2<Complex64>| inverse_values(m.view(), grid, c);
    let jets = JetGrid {
        grid: grid.clone(),
        u: back(&mu),
        r: back(&mul(&mu, 1)),
        p: back(&mp),
        rr: back(&mul(&mu, 2)),
        rp: back(&mul(&mp, 1)),
        pp: back(&mpp),
    };
    Ok(Solution {
        jets,
        data: SineSpectrum {
            contour: contour.clone(),
            coeffs: data,
        },
        spectrum: SineSpectrum { contour, coeffs: spec },
        warnings,
    })
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
fn cholesky(mut a: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    for j in 0..n {
        let d = a[j][j] - (0..j).map(|k| a[j][k] * a[j][k]).sum::<f64>();
        if !(d > 0.0) {
            return Err(Error::Capability("angular rule cannot resolve the requested sine modes".into()));
        }
        a[j][j] = d.sqrt();
        for i in j + 1..n {
            let v = a[i][j] - (0..j).map(|k| a[i][k] * a[j][k]).sum::<f64>();
            a[i][j] = v / a[j][j];
        }
    }
    Ok(a)
}

fn cholesky_solve(l: &[Vec<f64>], b: &mut [Complex64]) {
    let n = b.len();
    for i in 0..n {
        let v = b[i] - (0..i).map(|k| l[i][k] * b[k]).sum::<Complex64>();
        b[i] = v / l[i][i];
    }
    for i in (0..n).rev() {
        let v = b[i] - (i + 1..n).map(|k| l[k][i] * b[k]).sum::<Complex64>();
        b[i] = v / l[i][i];
    }
}

/// Samples `f` on the solver grid and solves; returns the sampled data too.
pub fn solve_poisson_field(f: &dyn AnalyticField, pp: &PoissonParams) -> Result<(Solution, GridField)> {
    let fg = sample(f, &pp.grid)?;
    Ok((solve_poisson(&fg, pp)?, fg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_grid, manufactured, Dilated, FieldRef, Scaled, Sum};
    use crate::geometry::Wedge;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn params(kappa: f64, n_s: usize, n_phi: usize, n_modes: usize) -> PoissonParams {
        let grid = make_grid(-12.0, 12.0, n_s, n_phi, Wedge::new(kappa).unwrap()).unwrap();
        PoissonParams::new(grid, 2.0, 2.0, 0, n_modes).unwrap()
    }

    #[test]
    fn manufactured_single_mode() {
        let pp = params(PI, 1024, 128, 64);
        let (ustar, f) = manufactured(pp.wedge(), 1, 0.0, 1.0);
        let (sol, _) = solve_poisson_field(&f, &pp).unwrap();
        let exact = sample(&ustar, &pp.grid).unwrap();
        let err = sol.u().rel_l2_distance(&exact);
        assert!(err < 1e-6, "{err}");
        assert!(sol.warnings.is_empty(), "{:?}", sol.warnings);
        let jets = crate::fields::sample_jets(&ustar, &pp.grid).unwrap();
        for (a, b) in [(&sol.jets.r, &jets.r), (&sol.jets.pp, &jets.pp), (&sol.jets.rp, &jets.rp)] {
            let num: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
            let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
            assert!((num / den).sqrt() < 1e-6, "{}", (num / den).sqrt());
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let pp = params(1.5 * PI, 256, 32, 16);
        let sol = solve_poisson(&GridField::zeros(&pp.grid), &pp).unwrap();
        assert!(sol.u().max_abs() <= 1e-12);
    }

    #[test]
    fn linear_in_data() {
        let pp = params(PI, 256, 32, 16);
        let w = *pp.wedge();
        let a: FieldRef = Arc::new(manufactured(&w, 1, 0.3, 1.0).1);
        let b: FieldRef = Arc::new(manufactured(&w, 3, -0.4, 0.8).1);
        let (al, be) = (Complex64::new(1.5, -0.5), Complex64::new(-2.0, 0.25));
        let combo = Sum {
            terms: vec![
                Arc::new(Scaled { field: a.clone(), alpha: al }),
                Arc::new(Scaled { field: b.clone(), alpha: be }),
            ],
        };
        let ua = solve_poisson_field(a.as_ref(), &pp).unwrap().0.u();
        let ub = solve_poisson_field(b.as_ref(), &pp).unwrap().0.u();
        let uc = solve_poisson_field(&combo, &pp).unwrap().0.u();
        let expect = GridField::new(pp.grid.clone(), ua.values().mapv(|v| al * v) + ub.values().mapv(|v| be * v)).unwrap();
        assert!(uc.rel_l2_distance(&expect) < 1e-10);
    }

    #[test]
    fn boundary_values_vanish() {
        let pp = params(PI / 2.0, 256, 32, 16);
        let (_, f) = manufactured(pp.wedge(), 2, 0.0, 1.0);
        let (sol, _) = solve_poisson_field(&f, &pp).unwrap();
        let edge = sol.synthesize_at(&[0.0, pp.wedge().kappa()]);
        let peak = sol.u().max_abs();
        assert!(edge.iter().all(|v| v.norm() <= 1e-13 * peak));
    }

    #[test]
    fn dilation_equivariance() {
        // a = e^{16Δs}: the dilated solution is an index shift on the grid
        let pp = params(PI, 512, 32, 16);
        let w = *pp.wedge();
        let shift = 16;
        let log_a = shift as f64 * pp.grid.ds();
        let f: FieldRef = Arc::new(manufactured(&w, 1, 0.0, 1.0).1);
        // f(a·)·a²
        let g = Scaled {
            field: Arc::new(Dilated { field: f.clone(), log_a }),
            alpha: Complex64::new((2.0 * log_a).exp(), 0.0),
        };
        let u = solve_poisson_field(f.as_ref(), &pp).unwrap().0.u();
        let v = solve_poisson_field(&g, &pp).unwrap().0.u();
        let (n_s, n_phi) = pp.grid.shape();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n_s - shift {
            for j in 0..n_phi {
                num += (v.values()[[i, j]] - u.values()[[i + shift, j]]).norm_sqr();
                den += u.values()[[i + shift, j]].norm_sqr();
            }
        }
        assert!((num / den).sqrt() < 1e-8);
    }

    #[test]
    fn grid_mismatch_and_inadmissible() {
        let pp = params(PI, 256, 32, 8);
        let other = make_grid(-10.0, 10.0, 256, 32, *pp.wedge()).unwrap();
        assert!(matches!(solve_poisson(&GridField::zeros(&other), &pp), Err(Error::Shape(_))));
        let bad = PoissonParams::new(pp.grid.clone(), 2.0, 4.0, 0, 8).unwrap();
        assert!(matches!(solve_poisson(&GridField::zeros(&pp.grid), &bad), Err(Error::Inadmissible(_))));
    }
}
