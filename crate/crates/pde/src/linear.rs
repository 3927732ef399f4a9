//! Periodic block-tridiagonal systems with 2x2 blocks.

use twocomp_core::Mat2;

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

/// Block LU factorisation of a (non-periodic) block-tridiagonal matrix with
/// sub-diagonal `lower`, diagonal `diag` and super-diagonal `upper`.
struct BlockThomas<'a> {
    lower: &'a [Mat2],
    upper: &'a [Mat2],
    pivots_inv: Vec<Mat2>,
}

impl<'a> BlockThomas<'a> {
    fn factor(lower: &'a [Mat2], diag: &[Mat2], upper: &'a [Mat2]) -> Option<Self> {
        let n = diag.len();
        let mut pivots_inv = Vec::with_capacity(n);
        pivots_inv.push(diag[0].inverse()?);
        for i in 1..n {
            let l = lower[i] * pivots_inv[i - 1];
            pivots_inv.push((diag[i] - l * upper[i - 1]).inverse()?);
        }
        Some(BlockThomas { lower, upper, pivots_inv })
    }

    fn solve(&self, rhs: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let n = rhs.len();
        let mut r = Vec::with_capacity(n);
        r.push(rhs[0]);
        for i in 1..n {
            let l = self.lower[i] * self.pivots_inv[i - 1];
            r.push(sub(rhs[i], l.mul_vec(r[i - 1])));
        }
        let mut x = vec![[0.0; 2]; n];
        x[n - 1] = self.pivots_inv[n - 1].mul_vec(r[n - 1]);
        for i in (0..n - 1).rev() {
            x[i] = self.pivots_inv[i].mul_vec(sub(r[i], self.upper[i].mul_vec(x[i + 1])));
        }
        x
    }
}

/// Solve `lower[k] x[k-1] + diag[k] x[k] + upper[k] x[k+1] = rhs[k]` with
/// indices taken modulo `n`. Returns `None` when a pivot block is singular.
///
/// The unknowns `x[1..n]` are eliminated as `x = y + W x[0]`, leaving a 2x2
/// system for `x[0]`.
pub fn solve_periodic(lower: &[Mat2], diag: &[Mat2], upper: &[Mat2], rhs: &[[f64; 2]]) -> Option<Vec<[f64; 2]>> {
    let n = diag.len();
    assert!(n >= 3, "periodic solve needs at least three blocks");
    assert!(lower.len() == n && upper.len() == n && rhs.len() == n);

    let inner = BlockThomas::factor(&lower[1..], &diag[1..], &upper[1..])?;
    let y = inner.solve(&rhs[1..]);
    // Columns of W solve T W = -E, E having blocks lower[1] (row 1) and
    // upper[n-1] (row n-1).
    let mut w = [vec![[0.0; 2]; n - 1], vec![[0.0; 2]; n - 1]];
    for (c, wc) in w.iter_mut().enumerate() {
        let mut e = vec![[0.0; 2]; n - 1];
        e[0] = [-lower[1].get(0, c), -lower[1].get(1, c)];
        e[n - 2] = add(e[n - 2], [-upper[n - 1].get(0, c), -upper[n - 1].get(1, c)]);
        *wc = inner.solve(&e);
    }
    let w_first = Mat2::new(w[0][0][0], w[1][0][0], w[0][0][1], w[1][0][1]);
    let w_last = Mat2::new(w[0][n - 2][0], w[1][n - 2][0], w[0][n - 2][1], w[1][n - 2][1]);
    let corner = diag[0] + upper[0] * w_first + lower[0] * w_last;
    let b0 = sub(sub(rhs[0], upper[0].mul_vec(y[0])), lower[0].mul_vec(y[n - 2]));
    let x0 = corner.solve(b0)?;
    let mut x = Vec::with_capacity(n);
    x.push(x0);
    for i in 0..n - 1 {
        let wx = [w[0][i][0] * x0[0] + w[1][i][0] * x0[1], w[0][i][1] * x0[0] + w[1][i][1] * x0[1]];
        x.push(add(y[i], wx));
    }
    if x.iter().all(|v| v[0].is_finite() && v[1].is_finite()) {
        Some(x)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn apply(lower: &[Mat2], diag: &[Mat2], upper: &[Mat2], x: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let n = x.len();
        (0..n)
            .map(|k| {
                let a = lower[k].mul_vec(x[(k + n - 1) % n]);
                let b = diag[k].mul_vec(x[k]);
                let c = upper[k].mul_vec(x[(k + 1) % n]);
                add(add(a, b), c)
            })
            .collect()
    }

    fn mat() -> impl Strategy<Value = Mat2> {
        prop::array::uniform4(-1.0f64..1.0).prop_map(|v| Mat2::new(v[0], v[1], v[2], v[3]))
    }

    proptest! {
        #[test]
        fn solves_diagonally_dominant_systems(
            n in 3usize..20,
            seed in prop::collection::vec((mat(), mat(), mat(), -1.0f64..1.0, -1.0f64..1.0), 20),
        ) {
            let lower: Vec<Mat2> = seed[..n].iter().map(|s| s.0.scale(0.4)).collect();
            let upper: Vec<Mat2> = seed[..n].iter().map(|s| s.1.scale(0.4)).collect();
            let diag: Vec<Mat2> = seed[..n].iter().map(|s| Mat2::IDENTITY.scale(2.0) + s.2.scale(0.2)).collect();
            let x: Vec<[f64; 2]> = seed[..n].iter().map(|s| [s.3, s.4]).collect();
            let b = apply(&lower, &diag, &upper, &x);
            let got = solve_periodic(&lower, &diag, &upper, &b).unwrap();
            for (g, e) in got.iter().zip(&x) {
                prop_assert!((g[0] - e[0]).abs() < 1e-12 && (g[1] - e[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_system() {
        let n = 5;
        let z = vec![Mat2::ZERO; n];
        let d = vec![Mat2::IDENTITY; n];
        let b: Vec<[f64; 2]> = (0..n).map(|k| [k as f64, -(k as f64)]).collect();
        assert_eq!(solve_periodic(&z, &d, &z, &b).unwrap(), b);
    }
}
