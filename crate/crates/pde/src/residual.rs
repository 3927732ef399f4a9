use twocomp_core::{DensityField, ModelParams};

fn laplacian(v: &[f64]) -> Vec<f64> {
    let m = v.len();
    let inv_dx2 = (m * m) as f64;
    (0..m)
        .map(|k| (v[(k + 1) % m] - 2.0 * v[k] + v[(k + m - 1) % m]) * inv_dx2)
        .collect()
}

/// Residual of the weighted-sum identity
/// `d/dt (rho1/sigma1^2 + rho2/sigma2^2) = 1/2 Lap (rho1 + rho2)` in
/// integrated form: the largest grid L2 norm over snapshots `t_k` of
///
/// ```text
/// m(t_k) - m(t_0) - 1/2 sum_{j<k} Lap_h rho(t_j) (t_{j+1} - t_j)
/// ```
///
/// With every step recorded this is first order in the step size.
pub fn master_residual(trajectory: &[DensityField], p: &ModelParams) -> f64 {
    let Some(first) = trajectory.first() else {
        return 0.0;
    };
    let n = first.len();
    let dx = 1.0 / n as f64;
    let weighted = |f: &DensityField| -> Vec<f64> {
        f.rho1
            .iter()
            .zip(&f.rho2)
            .map(|(a, b)| a / p.sigma1_sq + b / p.sigma2_sq)
            .collect()
    };
    let m0 = weighted(first);
    let mut integral = vec![0.0; n];
    let mut worst = 0.0f64;
    for w in trajectory.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        let total: Vec<f64> = prev.rho1.iter().zip(&prev.rho2).map(|(a, b)| a + b).collect();
        let dt = cur.t - prev.t;
        for (acc, l) in integral.iter_mut().zip(laplacian(&total)) {
            *acc += 0.5 * l * dt;
        }
        let m = weighted(cur);
        let norm = (0..n)
            .map(|k| {
                let r = m[k] - m0[k] - integral[k];
                r * r
            })
            .sum::<f64>()
            * dx;
        worst = worst.max(norm.sqrt());
    }
    worst
}
