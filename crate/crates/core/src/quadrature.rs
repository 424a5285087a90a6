//! One-dimensional quadrature rules: Gauss-Legendre (single and composite)
//! and an end-corrected trapezoid rule for uniformly sampled data.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule on `[a, b]` with equal panels.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Weights of the trapezoid rule with high-order endpoint corrections on
/// `n` equispaced nodes with spacing `h`.
///
/// The `m` nodes nearest each end get corrections chosen so that the rule
/// integrates polynomials of degree `< m` exactly over `[x_0, x_{n-1}]`;
/// `m = min(8, n / 2)`.
pub fn end_corrected_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2, "need at least two nodes");
    let m = (n / 2).min(8);
    let mut w = vec![h; n];
    if m < 2 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
        return w;
    }
    let a = left_end_corrections(m);
    for (j, aj) in a.iter().enumerate() {
        w[j] += h * aj;
        w[n - 1 - j] += h * aj;
    }
    w
}

// Corrections a_j (j < m) to unit weights on the half-line lattice such that
// the left-end Euler-Maclaurin remainder vanishes for monomials of degree < m:
// sum_j a_j j^q = -1/2 (q = 0), B_{q+1}/(q+1) (q odd), 0 (q even, q > 0).
fn left_end_corrections(m: usize) -> Vec<f64> {
    const BERNOULLI_EVEN: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let mut mat = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for q in 0..m {
        for (j, entry) in mat[q].iter_mut().enumerate() {
            *entry = (j as f64).powi(q as i32);
        }
        rhs[q] = if q == 0 {
            -0.5
        } else if q % 2 == 1 {
            let k = q.div_ceil(2);
            BERNOULLI_EVEN[k - 1] / (q + 1) as f64
        } else {
            0.0
        };
    }
    // 0^0 = 1 convention
    mat[0][0] = 1.0;
    solve_dense(mat, rhs)
}

/// Dense Gaussian elimination with partial pivoting.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}
