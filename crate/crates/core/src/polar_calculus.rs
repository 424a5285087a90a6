//! Cartesian derivatives expressed through polar ones.
//!
//! With `A(φ)` the rotation matrix, `∇u ∘ Φ = A(φ)·(D_r ũ, r⁻¹ D_φ ũ)ᵀ`, and
//! for higher orders
//!
//! ```text
//! (D^α u) ∘ Φ = Σ_{β ∈ Λ_α} T_{α,β}(φ) r^{β₁ − |α|} D_r^{β₁} D_φ^{β₂} ũ,
//! ```
//!
//! where `Λ_α = {β ≠ 0 : |β| ≤ |α|}` and the `T_{α,β}` are trigonometric
//! polynomials built by recursion on `|α|`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{AnalyticField, PolarJet};

pub type MultiIndex = (usize, usize);

pub fn rotation_matrix(phi: f64) -> [[f64; 2]; 2] {
    let (s, c) = phi.sin_cos();
    [[c, -s], [s, c]]
}

/// `∇u` at `Φ(e^s, φ)` from the polar first derivatives.
pub fn gradient_cart_from_polar(field: &dyn AnalyticField, r: f64, phi: f64) -> Result<[Complex64; 2]> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("gradient needs r > 0, got {r}")));
    }
    let jet = field.jet(r.ln(), phi)?;
    Ok(gradient_from_jet(&jet, r, phi))
}

pub fn gradient_from_jet(jet: &PolarJet, r: f64, phi: f64) -> [Complex64; 2] {
    let a = rotation_matrix(phi);
    let dr = jet.r / r;
    let dp = jet.p / r;
    [a[0][0] * dr + a[0][1] * dp, a[1][0] * dr + a[1][1] * dp]
}

/// `Σ c_k cos(kφ) + Σ s_k sin(kφ)`; index `k` runs from 0.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrigPoly {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigPoly {
    pub fn constant(c: f64) -> Self {
        Self {
            cos: vec![c],
            sin: vec![],
        }
    }

    pub fn cos1() -> Self {
        Self {
            cos: vec![0.0, 1.0],
            sin: vec![],
        }
    }

    pub fn sin1() -> Self {
        Self {
            cos: vec![],
            sin: vec![0.0, 1.0],
        }
    }

    pub fn degree(&self) -> usize {
        self.cos.len().max(self.sin.len()).saturating_sub(1)
    }

    pub fn eval(&self, phi: f64) -> f64 {
        let c: f64 = self
            .cos
            .iter()
            .enumerate()
            .map(|(k, c)| c * (k as f64 * phi).cos())
            .sum();
        let s: f64 = self
            .sin
            .iter()
            .enumerate()
            .map(|(k, s)| s * (k as f64 * phi).sin())
            .sum();
        c + s
    }

    pub fn derivative(&self) -> Self {
        let n = self.degree() + 1;
        let mut cos = vec![0.0; n];
        let mut sin = vec![0.0; n];
        for (k, c) in self.cos.iter().enumerate() {
            sin[k] -= k as f64 * c;
        }
        for (k, s) in self.sin.iter().enumerate() {
            cos[k] += k as f64 * s;
        }
        Self { cos, sin }.trimmed()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            cos: self.cos.iter().map(|c| a * c).collect(),
            sin: self.sin.iter().map(|s| a * s).collect(),
        }
        .trimmed()
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.degree().max(other.degree()) + 1;
        let get = |v: &Vec<f64>, k: usize| v.get(k).copied().unwrap_or(0.0);
        Self {
            cos: (0..n).map(|k| get(&self.cos, k) + get(&other.cos, k)).collect(),
            sin: (0..n).map(|k| get(&self.sin, k) + get(&other.sin, k)).collect(),
        }
        .trimmed()
    }

    /// Product via the product-to-sum identities.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.degree() + other.degree() + 1;
        let mut cos = vec![0.0; n];
        let mut sin = vec![0.0; n];
        for (j, &a) in self.cos.iter().enumerate() {
            for (k, &b) in other.cos.iter().enumerate() {
                // cos j cos k = (cos(j−k) + cos(j+k))/2
                cos[j.abs_diff(k)] += 0.5 * a * b;
                cos[j + k] += 0.5 * a * b;
            }
            for (k, &b) in other.sin.iter().enumerate() {
                // cos j sin k = (sin(k+j) + sin(k−j))/2
                add_sin(&mut sin, k as isize - j as isize, 0.5 * a * b);
                sin[j + k] += 0.5 * a * b;
            }
        }
        for (j, &a) in self.sin.iter().enumerate() {
            for (k, &b) in other.cos.iter().enumerate() {
                add_sin(&mut sin, j as isize - k as isize, 0.5 * a * b);
                sin[j + k] += 0.5 * a * b;
            }
            for (k, &b) in other.sin.iter().enumerate() {
                // sin j sin k = (cos(j−k) − cos(j+k))/2
                cos[j.abs_diff(k)] += 0.5 * a * b;
                cos[j + k] -= 0.5 * a * b;
            }
        }
        Self { cos, sin }.trimmed()
    }

    /// Removes trailing zeros and the meaningless `sin(0φ)` slot.
    fn trimmed(mut self) -> Self {
        if let Some(s0) = self.sin.first_mut() {
            *s0 = 0.0;
        }
        while self.cos.last() == Some(&0.0) {
            self.cos.pop();
        }
        while self.sin.last() == Some(&0.0) {
            self.sin.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|c| *c == 0.0)
    }

    pub fn max_coeff_distance(&self, other: &Self) -> f64 {
        let d = self.add(&other.scale(-1.0));
        d.cos.iter().chain(&d.sin).fold(0.0, |m, c| m.max(c.abs()))
    }
}

fn add_sin(sin: &mut [f64], k: isize, v: f64) {
    // sin(−kφ) = −sin(kφ); sin(0) = 0
    match k.cmp(&0) {
        std::cmp::Ordering::Greater => sin[k as usize] += v,
        std::cmp::Ordering::Less => sin[(-k) as usize] -= v,
        std::cmp::Ordering::Equal => {}
    }
}

/// The coefficients `T_{α,β}` for all `1 ≤ |α| ≤ max_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct TTable {
    max_order: usize,
    entries: BTreeMap<(MultiIndex, MultiIndex), TrigPoly>,
}

#[derive(Serialize)]
struct TTableEntry<'a> {
    alpha: MultiIndex,
    beta: MultiIndex,
    cos: &'a [f64],
    sin: &'a [f64],
}

impl TTable {
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn get(&self, alpha: MultiIndex, beta: MultiIndex) -> Option<&TrigPoly> {
        self.entries.get(&(alpha, beta))
    }

    /// Nonzero entries for one `α`, ordered by `β`.
    pub fn row(&self, alpha: MultiIndex) -> impl Iterator<Item = (MultiIndex, &TrigPoly)> {
        self.entries
            .range((alpha, (0, 0))..=(alpha, (usize::MAX, usize::MAX)))
            .map(|((_, b), t)| (*b, t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        let list: Vec<TTableEntry> = self
            .entries
            .iter()
            .map(|((a, b), t)| TTableEntry {
                alpha: *a,
                beta: *b,
                cos: &t.cos,
                sin: &t.sin,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&serde_json::json!({
            "max_order": self.max_order,
            "entries": list,
        }))?)
    }

    /// The table extended by one order.
    pub fn extended(&self) -> TTable {
        let a = [
            [TrigPoly::cos1(), TrigPoly::sin1().scale(-1.0)],
            [TrigPoly::sin1(), TrigPoly::cos1()],
        ];
        let m = self.max_order + 1;
        let mut entries = self.entries.clone();
        for a1 in 0..=m {
            let target = (a1, m - a1);
            // D^{α+e_i} = D_{x_i} D^α, with i = 1 whenever possible
            let (i, alpha) = if a1 > 0 { (0, (a1 - 1, m - a1)) } else { (1, (0, m - 1)) };
            let order = (m - 1) as f64;
            let mut acc: BTreeMap<MultiIndex, TrigPoly> = BTreeMap::new();
            let mut push = |beta: MultiIndex, t: TrigPoly| {
                let e = acc.entry(beta).or_default();
                *e = e.add(&t);
            };
            for (beta, t) in self.row(alpha) {
                // A_{i1} D_r of T r^{β₁−|α|} D^β ũ
                let ti1 = a[i][0].mul(t);
                push(beta, ti1.scale(beta.0 as f64 - order));
                push((beta.0 + 1, beta.1), ti1);
                // A_{i2} r⁻¹ D_φ of the same term
                push(beta, a[i][1].mul(&t.derivative()));
                push((beta.0, beta.1 + 1), a[i][1].mul(t));
            }
            for (beta, t) in acc {
                if !t.is_zero() {
                    entries.insert((target, beta), t);
                }
            }
        }
        TTable {
            max_order: m,
            entries,
        }
    }
}

/// Builds the table up to `max_order ≥ 1`.
pub fn build_t_table(max_order: usize) -> TTable {
    assert!(max_order >= 1, "table order must be at least 1");
    let mut entries = BTreeMap::new();
    entries.insert(((1, 0), (1, 0)), TrigPoly::cos1());
    entries.insert(((1, 0), (0, 1)), TrigPoly::sin1().scale(-1.0));
    entries.insert(((0, 1), (1, 0)), TrigPoly::sin1());
    entries.insert(((0, 1), (0, 1)), TrigPoly::cos1());
    let mut table = TTable {
        max_order: 1,
        entries,
    };
    while table.max_order < max_order {
        table = table.extended();
    }
    table
}

/// `D^α u` at `Φ(r, φ)` from the field's plain polar derivatives.
pub fn cart_derivative_via_table(
    field: &dyn AnalyticField,
    alpha: MultiIndex,
    r: f64,
    phi: f64,
    table: &TTable,
) -> Result<Complex64> {
    let order = alpha.0 + alpha.1;
    if order == 0 {
        return field.value(r.ln(), phi);
    }
    if order > table.max_order {
        return Err(Error::Capability(format!(
            "table built to order {}, asked for |α| = {order}",
            table.max_order
        )));
    }
    let s = r.ln();
    let mut acc = Complex64::new(0.0, 0.0);
    for (beta, t) in table.row(alpha) {
        let d = field.polar_derivative(beta.0, beta.1, s, phi)?;
        acc += t.eval(phi) * r.powi(beta.0 as i32 - order as i32) * d;
    }
    Ok(acc)
}

/// Multi-indices of order 1 and 2, in the order used by
/// [`CartesianJet::of_order`].
pub const ORDER_ONE: [MultiIndex; 2] = [(1, 0), (0, 1)];
pub const ORDER_TWO: [MultiIndex; 3] = [(2, 0), (1, 1), (0, 2)];

/// Cartesian derivatives to order two at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartesianJet {
    pub value: Complex64,
    pub first: [Complex64; 2],
    pub second: [Complex64; 3],
}

/// Precomputed `T_{α,β}(φ)` at a fixed set of angles, for converting
/// sampled polar jets to Cartesian derivatives.
#[derive(Debug, Clone)]
pub struct JetConverter {
    // per angle: order-one rows [(β, T)] and order-two rows
    first: Vec<[Vec<(MultiIndex, f64)>; 2]>,
    second: Vec<[Vec<(MultiIndex, f64)>; 3]>,
}

impl JetConverter {
    pub fn new(phis: &[f64]) -> Self {
        let table = build_t_table(2);
        let rows = |alpha: MultiIndex, phi: f64| -> Vec<(MultiIndex, f64)> {
            table.row(alpha).map(|(b, t)| (b, t.eval(phi))).collect()
        };
        Self {
            first: phis.iter().map(|&p| ORDER_ONE.map(|a| rows(a, p))).collect(),
            second: phis.iter().map(|&p| ORDER_TWO.map(|a| rows(a, p))).collect(),
        }
    }

    /// Cartesian jet at radius `r` and the `j`-th angle.
    pub fn convert(&self, jet: &PolarJet, r: f64, j: usize) -> CartesianJet {
        let d = |b: MultiIndex| jet.plain(b.0, b.1, r).unwrap_or_default();
        let combine = |row: &Vec<(MultiIndex, f64)>, order: i32| -> Complex64 {
            row.iter()
                .map(|&(b, t)| t * r.powi(b.0 as i32 - order) * d(b))
                .sum()
        };
        CartesianJet {
            value: jet.u,
            first: [combine(&self.first[j][0], 1), combine(&self.first[j][1], 1)],
            second: [
                combine(&self.second[j][0], 2),
                combine(&self.second[j][1], 2),
                combine(&self.second[j][2], 2),
            ],
        }
    }
}
