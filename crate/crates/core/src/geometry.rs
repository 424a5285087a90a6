//! Geometry of the planar wedge `D = {(r cos φ, r sin φ) : r > 0, 0 < φ < κ}`:
//! distances to the vertex and to the boundary, the polar map, and smooth
//! dyadic resolutions of unity centred at the vertex.

use std::f64::consts::{E, FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opening angle of the wedge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wedge {
    kappa: f64,
}

impl Wedge {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < TAU) {
            return Err(Error::config(
                "kappa",
                format!("opening angle must lie in (0, 2π), got {kappa}"),
            ));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `nπ/κ`, the square root of the n-th Dirichlet eigenvalue on (0, κ).
    pub fn omega(&self, n: usize) -> f64 {
        n as f64 * PI / self.kappa
    }

    pub fn contains_angle(&self, phi: f64) -> bool {
        phi > 0.0 && phi < self.kappa
    }
}

/// Distance to the vertex.
pub fn rho_circ(point: [f64; 2]) -> f64 {
    point[0].hypot(point[1])
}

/// `min{π/2, φ, κ − φ}`.
pub fn mu(phi: f64, wedge: &Wedge) -> Result<f64> {
    if !wedge.contains_angle(phi) {
        return Err(Error::Domain(format!(
            "angle {phi} outside (0, {})",
            wedge.kappa
        )));
    }
    Ok(mu_unchecked(phi, wedge.kappa))
}

#[inline]
pub(crate) fn mu_unchecked(phi: f64, kappa: f64) -> f64 {
    FRAC_PI_2.min(phi).min(kappa - phi)
}

/// `sin μ(φ)`, the scale-free ratio `ρ_D / ρ_∘`.
#[inline]
pub fn sin_mu(phi: f64, wedge: &Wedge) -> f64 {
    mu_unchecked(phi, wedge.kappa).sin()
}

/// Distance from `(r cos φ, r sin φ)` to the boundary of the wedge.
pub fn rho_boundary(r: f64, phi: f64, wedge: &Wedge) -> f64 {
    debug_assert!(r >= 0.0);
    r * sin_mu(phi, wedge)
}

/// Distance from `φ` to the endpoints of `(0, κ)`.
#[inline]
pub fn rho_interval(phi: f64, wedge: &Wedge) -> f64 {
    phi.min(wedge.kappa - phi)
}

pub fn psi_interval(phi: f64, wedge: &Wedge) -> f64 {
    (PI * phi / wedge.kappa).sin()
}

/// Regularized boundary distance `r sin(πφ/κ)`.
pub fn psi_wedge(r: f64, phi: f64, wedge: &Wedge) -> f64 {
    r * psi_interval(phi, wedge)
}

pub fn polar_to_cart(r: f64, phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [r * c, r * s]
}

/// Inverse polar map, angle normalized to `[0, 2π)`.
pub fn cart_to_polar(point: [f64; 2]) -> Result<(f64, f64)> {
    let r = rho_circ(point);
    if r == 0.0 {
        return Err(Error::Domain("the origin has no polar angle".into()));
    }
    let mut phi = point[1].atan2(point[0]);
    if phi < 0.0 {
        phi += TAU;
    }
    if phi >= TAU {
        phi -= TAU;
    }
    Ok((r, phi))
}

/// Smooth step `H` with `H = 0` on `t ≤ 0`, `H = 1` on `t ≥ 1`, together
/// with its first two derivatives.
pub fn smooth_step(t: f64) -> [f64; 3] {
    if t <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let u = 1.0 - t;
    let a = (-1.0 / t).exp();
    let b = (-1.0 / u).exp();
    let a1 = a / (t * t);
    let b1 = -b / (u * u);
    let a2 = a * (1.0 - 2.0 * t) / t.powi(4);
    let b2 = b * (2.0 * t - 1.0) / u.powi(4);
    let s = a + b;
    let s1 = a1 + b1;
    let num = a1 * b - a * b1;
    let num1 = a2 * b - a * b2;
    [a / s, num / (s * s), num1 / (s * s) - 2.0 * num * s1 / (s * s * s)]
}

/// Dyadic resolution of unity `ζ_ν(x) = η(c^{−ν}|x|)` with
/// `η(t) = φ(t) − φ(ct)`, where `φ` is a smooth step equal to 1 on `t ≤ a`
/// and 0 on `t ≥ b`, `a = c^{1/3}`, `b = c^{2/3}`.
///
/// `ζ_ν` is supported in `c^{ν−2/3} ≤ |x| ≤ c^{ν+2/3}`, so at most two
/// members are nonzero at any point and the sum over ν is exactly 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionOfUnity {
    c: f64,
    a: f64,
    b: f64,
}

impl Default for ResolutionOfUnity {
    fn default() -> Self {
        Self::new(E).expect("e is a valid base")
    }
}

impl ResolutionOfUnity {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 1.0 && c.is_finite()) {
            return Err(Error::config("scale_base", format!("need c > 1, got {c}")));
        }
        Ok(Self {
            c,
            a: c.powf(1.0 / 3.0),
            b: c.powf(2.0 / 3.0),
        })
    }

    pub fn scale_base(&self) -> f64 {
        self.c
    }

    pub fn log_base(&self) -> f64 {
        self.c.ln()
    }

    fn step(&self, t: f64) -> [f64; 3] {
        let w = self.b - self.a;
        let [h, h1, h2] = smooth_step((self.b - t) / w);
        [h, -h1 / w, h2 / (w * w)]
    }

    /// `η(t)`.
    pub fn profile(&self, t: f64) -> f64 {
        self.step(t)[0] - self.step(self.c * t)[0]
    }

    /// `(η, tη', tη' + t²η'')(t)`: the profile and its first two
    /// derivatives in `t∂_t`.
    pub fn profile_jet(&self, t: f64) -> [f64; 3] {
        let [p0, p1, p2] = self.step(t);
        let [q0, q1, q2] = self.step(self.c * t);
        let e0 = p0 - q0;
        let e1 = p1 - self.c * q1;
        let e2 = p2 - self.c * self.c * q2;
        [e0, t * e1, t * e1 + t * t * e2]
    }

    pub fn zeta(&self, nu: i32, r: f64) -> f64 {
        self.profile(self.c.powi(-nu) * r)
    }

    /// Indices ν with `ζ_ν(r)` possibly nonzero.
    pub fn active_indices(&self, r: f64) -> std::ops::RangeInclusive<i32> {
        let x = r.ln() / self.log_base();
        let lo = (x - 2.0 / 3.0).floor() as i32;
        let hi = (x + 2.0 / 3.0).ceil() as i32;
        lo..=hi
    }

    /// Indices whose support meets the annulus `e^{s_lo} < r < e^{s_hi}`.
    pub fn indices_for_log_range(&self, s_lo: f64, s_hi: f64) -> std::ops::RangeInclusive<i32> {
        let l = self.log_base();
        let lo = (s_lo / l - 2.0 / 3.0).floor() as i32;
        let hi = (s_hi / l + 2.0 / 3.0).ceil() as i32;
        lo..=hi
    }
}

/// Nonzero members `(ν, ζ_ν(x))` of the resolution at `x`.
pub fn partition_values(res: &ResolutionOfUnity, point: [f64; 2]) -> Result<Vec<(i32, f64)>> {
    let r = rho_circ(point);
    if r == 0.0 {
        return Err(Error::Domain(
            "resolution of unity is not defined at the vertex".into(),
        ));
    }
    Ok(res
        .active_indices(r)
        .map(|nu| (nu, res.zeta(nu, r)))
        .filter(|&(_, z)| z != 0.0)
        .collect())
}
