//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! eigenvalues, inverse iteration with partial-pivot tridiagonal solves for
//! the eigenvectors, and re-orthogonalization inside near-degenerate
//! clusters.

use crate::exec;
use crate::{Error, Result};

/// Symmetric tridiagonal matrix (diagonal plus one off-diagonal).
#[derive(Debug, Clone)]
pub struct SymTridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal must have n-1 entries");
        SymTridiag { diag, off }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Infinity-norm bound, also a Gerschgorin radius bound.
    pub fn norm_bound(&self) -> f64 {
        let n = self.n();
        let mut m = 0.0f64;
        for i in 0..n {
            let mut row = self.diag[i].abs();
            if i > 0 {
                row += self.off[i - 1].abs();
            }
            if i + 1 < n {
                row += self.off[i].abs();
            }
            m = m.max(row);
        }
        m
    }

    fn gerschgorin_lo(&self) -> f64 {
        let n = self.n();
        let mut lo = f64::INFINITY;
        for i in 0..n {
            let mut rad = 0.0;
            if i > 0 {
                rad += self.off[i - 1].abs();
            }
            if i + 1 < n {
                rad += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - rad);
        }
        lo
    }

    /// Number of eigenvalues strictly below `x` (Sturm count via the shifted
    /// LDL^T pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.n();
        let tiny = f64::MIN_POSITIVE / f64::EPSILON;
        let mut count = 0usize;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let e2 = self.off[i - 1] * self.off[i - 1];
            let denom = if q.abs() < tiny { if q < 0.0 { -tiny } else { tiny } } else { q };
            q = self.diag[i] - x - e2 / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * v[i + 1];
            }
            out[i] = s;
        }
        out
    }

    /// 2-norm of `A v - lambda v`.
    pub fn residual(&self, v: &[f64], lambda: f64) -> f64 {
        let av = self.apply(v);
        av.iter()
            .zip(v.iter())
            .map(|(a, x)| (a - lambda * x).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// All eigenvalues strictly below `cutoff`, ascending, each bisected to
    /// roughly machine precision. Independent indices run in parallel.
    pub fn eigenvalues_below(&self, cutoff: f64) -> Vec<f64> {
        let k_hi = self.count_below(cutoff);
        if k_hi == 0 {
            return Vec::new();
        }
        let lo0 = self.gerschgorin_lo() - 1.0;
        exec::map_indexed(k_hi, |k| {
            let mut lo = lo0;
            let mut hi = cutoff;
            // bisection invariant: count(lo) <= k < count(hi)
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) <= k {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
    }

    /// Solve `(A - lambda I) x = rhs` in place by Gaussian elimination with
    /// partial pivoting (one superdiagonal of fill-in).
    fn solve_shifted(&self, lambda: f64, rhs: &mut [f64]) {
        let n = self.n();
        let tiny = f64::EPSILON * self.norm_bound().max(f64::MIN_POSITIVE);
        if n == 1 {
            let a = self.diag[0] - lambda;
            rhs[0] /= if a.abs() < tiny { tiny.copysign(a) } else { a };
            return;
        }
        let mut ua = vec![0.0; n];
        let mut ub = vec![0.0; n];
        let mut uc = vec![0.0; n];
        let mut cur_a = self.diag[0] - lambda;
        let mut cur_b = self.off[0];
        let mut cur_c = 0.0;
        for i in 0..n - 1 {
            let sub = self.off[i];
            let next_a = self.diag[i + 1] - lambda;
            let next_b = if i + 1 < n - 1 { self.off[i + 1] } else { 0.0 };
            if cur_a.abs() >= sub.abs() {
                let denom = if cur_a.abs() < tiny { tiny.copysign(cur_a) } else { cur_a };
                let m = sub / denom;
                ua[i] = denom;
                ub[i] = cur_b;
                uc[i] = cur_c;
                rhs[i + 1] -= m * rhs[i];
                cur_a = next_a - m * cur_b;
                cur_b = next_b - m * cur_c;
            } else {
                // swap rows i and i+1
                let m = cur_a / sub;
                ua[i] = sub;
                ub[i] = next_a;
                uc[i] = next_b;
                rhs.swap(i, i + 1);
                rhs[i + 1] -= m * rhs[i];
                cur_a = cur_b - m * next_a;
                cur_b = cur_c - m * next_b;
            }
            cur_c = 0.0;
        }
        ua[n - 1] = if cur_a.abs() < tiny { tiny.copysign(cur_a) } else { cur_a };
        // back substitution
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= ub[i] * rhs[i + 1];
            }
            if i + 2 < n {
                s -= uc[i] * rhs[i + 2];
            }
            rhs[i] = s / ua[i];
        }
    }

    /// Eigenvector for `lambda` by inverse iteration, orthogonalized against
    /// `ortho` (other members of a near-degenerate cluster).
    fn eigenvector(&self, lambda: f64, ortho: &[Vec<f64>], seed: u64) -> Result<Vec<f64>> {
        let n = self.n();
        let scale = self.norm_bound();
        // deterministic pseudo-random start
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut v: Vec<f64> = (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        normalize(&mut v);
        let mut best_res = f64::INFINITY;
        for _ in 0..8 {
            self.solve_shifted(lambda, &mut v);
            for o in ortho {
                let dot: f64 = v.iter().zip(o.iter()).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(o.iter()) {
                    *x -= dot * y;
                }
            }
            normalize(&mut v);
            let res = self.residual(&v, lambda);
            best_res = best_res.min(res);
            if res <= 1e-10 * scale {
                return Ok(v);
            }
        }
        if best_res <= 1e-6 * scale {
            Ok(v)
        } else {
            Err(Error::SolverFailure {
                index: 0,
                detail: format!("inverse iteration residual {best_res:.3e} exceeds tolerance"),
            })
        }
    }

    /// All eigenpairs with eigenvalue below `cutoff`, ascending. Vectors have
    /// unit Euclidean norm; members of near-degenerate clusters are mutually
    /// orthogonalized. Clusters run in parallel, members sequentially.
    pub fn eigenpairs_below(&self, cutoff: f64) -> Result<Vec<(f64, Vec<f64>)>> {
        let lambdas = self.eigenvalues_below(cutoff);
        if lambdas.is_empty() {
            return Ok(Vec::new());
        }
        let scale = self.norm_bound();
        let gap_tol = 1e-10 * scale.max(1.0);
        // cluster boundaries
        let mut clusters: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        for k in 1..lambdas.len() {
            if lambdas[k] - lambdas[k - 1] > gap_tol {
                clusters.push((start, k));
                start = k;
            }
        }
        clusters.push((start, lambdas.len()));
        let results: Vec<Result<Vec<(f64, Vec<f64>)>>> = exec::map_slice(&clusters, |&(a, b)| {
            let mut group: Vec<(f64, Vec<f64>)> = Vec::with_capacity(b - a);
            for (j, &lambda) in lambdas[a..b].iter().enumerate() {
                let ortho: Vec<Vec<f64>> = group.iter().map(|(_, v)| v.clone()).collect();
                let v = self
                    .eigenvector(lambda, &ortho, (a + j + 1) as u64)
                    .map_err(|e| match e {
                        Error::SolverFailure { detail, .. } => {
                            Error::SolverFailure { index: a + j, detail }
                        }
                        other => other,
                    })?;
                group.push((lambda, v));
            }
            Ok(group)
        });
        let mut out = Vec::with_capacity(lambdas.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Discrete Laplacian eigenvalues are known in closed form.
    fn laplacian(n: usize) -> SymTridiag {
        SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn counts_match_closed_form() {
        let t = laplacian(50);
        // lambda_k = 2 - 2 cos(k pi / 51)
        let lam = |k: usize| 2.0 - 2.0 * ((k as f64) * PI / 51.0).cos();
        assert_eq!(t.count_below(lam(10) + 1e-12), 10);
        assert_eq!(t.count_below(lam(10) - 1e-12), 9);
        assert_eq!(t.count_below(5.0), 50);
    }

    #[test]
    fn eigenvalues_match_closed_form() {
        let t = laplacian(40);
        let vals = t.eigenvalues_below(5.0);
        assert_eq!(vals.len(), 40);
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * PI / 41.0).cos();
            assert!((v - exact).abs() < 1e-12, "k = {k}: {v} vs {exact}");
        }
    }

    #[test]
    fn eigenvectors_are_accurate_and_orthogonal() {
        let t = laplacian(60);
        let pairs = t.eigenpairs_below(1.0).unwrap();
        assert!(!pairs.is_empty());
        for (lambda, v) in &pairs {
            assert!(t.residual(v, *lambda) < 1e-10 * t.norm_bound());
        }
        for i in 0..pairs.len() {
            for j in i + 1..pairs.len() {
                let dot: f64 = pairs[i].1.iter().zip(pairs[j].1.iter()).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-8, "modes {i},{j}: dot {dot}");
            }
        }
    }

    #[test]
    fn degenerate_cluster_is_orthogonalized() {
        // block-diagonal: two decoupled copies give exactly degenerate pairs
        let n = 8;
        let mut diag = vec![2.0; 2 * n];
        let mut off = vec![-1.0; 2 * n - 1];
        off[n - 1] = 0.0;
        diag[0] = 2.0;
        let t = SymTridiag::new(diag, off);
        let pairs = t.eigenpairs_below(5.0).unwrap();
        assert_eq!(pairs.len(), 2 * n);
        for i in 0..pairs.len() {
            for j in i + 1..pairs.len() {
                let dot: f64 = pairs[i].1.iter().zip(pairs[j].1.iter()).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-7, "modes {i},{j}: dot {dot}");
            }
        }
    }

    #[test]
    fn shifted_solve_and_pivoting() {
        // a matrix that forces row swaps: tiny diagonal entries
        let t = SymTridiag::new(vec![1e-14, 2.0, 1e-14, 3.0], vec![1.0, 1.0, 1.0]);
        let rhs0 = [1.0, -2.0, 0.5, 3.0];
        let mut x = rhs0.to_vec();
        t.solve_shifted(0.7, &mut x);
        // check A x - 0.7 x = rhs
        let ax = t.apply(&x);
        for i in 0..4 {
            let got = ax[i] - 0.7 * x[i];
            assert!((got - rhs0[i]).abs() < 1e-9, "row {i}: {got} vs {}", rhs0[i]);
        }
    }
}
