//! Gauss-Hermite rules and tensor-product Gaussian expectations.

use crate::error::{require, Result};

/// Nodes and weights for `int exp(-x^2) f(x) dx`, by Newton iteration on the
/// orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    require(n >= 1, || "Gauss-Hermite rule needs at least one node".into())?;
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

/// Nodes and probability weights for `E[f(Z)]`, `Z ~ Normal(0, 1)`.
pub fn standard_normal_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, w) = gauss_hermite(n)?;
    let sqrt_pi = std::f64::consts::PI.sqrt();
    Ok((
        x.iter().map(|v| v * std::f64::consts::SQRT_2).collect(),
        w.iter().map(|v| v / sqrt_pi).collect(),
    ))
}

/// `E[f(Z)]` for `Z ~ Normal(0, I_dims)` on the tensor grid of `nodes` points per axis.
pub fn tensor_expectation<F: FnMut(&[f64]) -> f64>(
    dims: usize,
    nodes: usize,
    mut f: F,
) -> Result<f64> {
    let (x, w) = standard_normal_rule(nodes)?;
    let total = nodes
        .checked_pow(dims as u32)
        .filter(|&t| t <= 1 << 32)
        .ok_or_else(|| crate::Error::Parameter(format!("{nodes}^{dims} quadrature points is too many")))?;
    let mut idx = vec![0usize; dims];
    let mut point = vec![0.0; dims];
    let mut sum = 0.0;
    for _ in 0..total {
        let mut weight = 1.0;
        for d in 0..dims {
            point[d] = x[idx[d]];
            weight *= w[idx[d]];
        }
        sum += weight * f(&point);
        for d in 0..dims {
            idx[d] += 1;
            if idx[d] < nodes {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_moments_exact() {
        let (x, w) = standard_normal_rule(10).unwrap();
        let moment = |k: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum::<f64>();
        assert!((moment(0) - 1.0).abs() < 1e-14);
        assert!(moment(1).abs() < 1e-14);
        assert!((moment(2) - 1.0).abs() < 1e-13);
        assert!((moment(4) - 3.0).abs() < 1e-12);
        assert!((moment(8) - 105.0).abs() < 1e-10);
    }

    #[test]
    fn high_order_rule_is_accurate() {
        let (x, w) = standard_normal_rule(64).unwrap();
        let m = |k: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-12);
        assert!((m(6) - 15.0).abs() < 1e-10);
        let cos_mean: f64 = x.iter().zip(&w).map(|(x, w)| w * x.cos()).sum();
        assert!((cos_mean - (-0.5f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn tensor_rule_factorizes() {
        let v = tensor_expectation(3, 6, |z| z[0] * z[0] * z[1] * z[1] + z[2].powi(4)).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        assert!(tensor_expectation(40, 10, |_| 1.0).is_err());
    }
}
