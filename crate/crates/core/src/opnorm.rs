//! Operator norm of step graphons.
//!
//! The kernel operator of a step graphon acts on step functions, so its
//! spectrum equals that of the m x m symmetric matrix
//! `A_ij = p_ij sqrt(gamma_i gamma_j)`. Eigenvalues come from a cyclic
//! Jacobi sweep.

use crate::error::{Error, Result};
use crate::graphon::StepGraphon;

/// Cyclic Jacobi eigenvalues of a symmetric matrix (row-major, size n).
///
/// Rotations stop when the off-diagonal L1 mass falls below `1e-14`; at most
/// 100 sweeps.
pub fn jacobi_eigenvalues(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut a = matrix.to_vec();
    let idx = |i: usize, j: usize| i * n + j;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[idx(i, j)].abs();
            }
        }
        if off < 1e-14 {
            let eig = (0..n).map(|i| a[idx(i, i)]).collect();
            return Ok(eig);
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                let theta = 0.5 * (aqq - app) / apq;
                let t = {
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(Error::NonConvergence {
        what: "Jacobi eigenvalue iteration".into(),
        iterations: 100,
    })
}

/// The kernel operator norm of a step graphon: the largest absolute
/// eigenvalue of `(p_ij sqrt(gamma_i gamma_j))`.
pub fn operator_norm(f: &StepGraphon) -> Result<f64> {
    let m = f.block_count();
    let w = f.widths_f64();
    let mut a = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            a[i * m + j] = f.value(i, j) * (w[i] * w[j]).sqrt();
        }
    }
    let eig = jacobi_eigenvalues(&a, m)?;
    Ok(eig.iter().fold(0.0f64, |acc, &l| acc.max(l.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use crate::rng::CounterRng;

    #[test]
    fn constant_graphon_norm_is_its_value() {
        let f = StepGraphon::constant(0.6).unwrap();
        assert!((operator_norm(&f).unwrap() - 0.6).abs() < 1e-14);
    }

    #[test]
    fn bipartite_closed_form() {
        for &(num, den, r) in &[(1i64, 2i64, 0.7f64), (1, 3, 0.25), (3, 10, 0.9)] {
            let gamma = BigRational::new(BigInt::from(num), BigInt::from(den));
            let gf = num as f64 / den as f64;
            let f = StepGraphon::bipartite(gamma, r).unwrap();
            let expect = r * (gf * (1.0 - gf)).sqrt();
            let got = operator_norm(&f).unwrap();
            assert!((got - expect).abs() < 1e-12, "got {got} expect {expect}");
        }
    }

    #[test]
    fn random_blocks_match_kernel_discretization() {
        // Widths in twentieths so the 400-point grid aligns exactly with the
        // block boundaries; power iteration on the discretized kernel then
        // reproduces the operator norm.
        let mut rng = CounterRng::new(21);
        for _ in 0..5 {
            let cuts = {
                let mut c = vec![
                    1 + rng.below(17) as i64,
                    1 + rng.below(17) as i64,
                    1 + rng.below(17) as i64,
                ];
                c.sort_unstable();
                c.dedup();
                c
            };
            if cuts.len() != 3 {
                continue;
            }
            let mut widths = Vec::new();
            let mut prev = 0i64;
            for &c in &cuts {
                widths.push(BigRational::new(BigInt::from(c - prev), BigInt::from(20)));
                prev = c;
            }
            widths.push(BigRational::new(BigInt::from(20 - prev), BigInt::from(20)));
            let m = widths.len();
            let mut values = vec![vec![0.0; m]; m];
            for i in 0..m {
                for j in i..m {
                    let v = rng.uniform();
                    values[i][j] = v;
                    values[j][i] = v;
                }
            }
            let f = StepGraphon::new(widths, values).unwrap();
            let exact = operator_norm(&f).unwrap();

            let n = 400;
            let mut k = vec![0.0f64; n * n];
            for a in 0..n {
                for b in 0..n {
                    let x = (a as f64 + 0.5) / n as f64;
                    let y = (b as f64 + 0.5) / n as f64;
                    k[a * n + b] = f.value_at(x, y) / n as f64;
                }
            }
            // Power iteration on K^2 handles the symmetric +/- spectrum.
            let mut v = vec![0.0f64; n];
            for x in v.iter_mut() {
                *x = rng.uniform() + 0.1;
            }
            let matvec = |v: &[f64]| {
                let mut out = vec![0.0f64; n];
                for a in 0..n {
                    let mut acc = 0.0;
                    for b in 0..n {
                        acc += k[a * n + b] * v[b];
                    }
                    out[a] = acc;
                }
                out
            };
            let mut lambda_sq = 0.0;
            for _ in 0..300 {
                let w1 = matvec(&v);
                let w2 = matvec(&w1);
                let norm = w2.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    break;
                }
                lambda_sq = w2
                    .iter()
                    .zip(v.iter())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .abs();
                for (x, y) in v.iter_mut().zip(w2.iter()) {
                    *x = y / norm;
                }
            }
            let approx = lambda_sq.sqrt();
            assert!(
                (approx - exact).abs() < 1e-3,
                "power iteration {approx} vs jacobi {exact}"
            );
        }
    }
}
