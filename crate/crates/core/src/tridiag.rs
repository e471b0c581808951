//! Symmetric tridiagonal eigensolvers.
//!
//! Matrices are given by their diagonal `d` (length `n`) and off-diagonal `e`
//! (length `n - 1`). Two independent routes are provided: Sturm-sequence
//! bisection with inverse iteration for selected eigenpairs, and the implicit
//! QL algorithm with Wilkinson shifts for the full spectrum.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TridiagError {
    #[error("off-diagonal has length {off}, expected {expected}")]
    Shape { off: usize, expected: usize },
    #[error("eigenvalue index {index} out of range for a {size}x{size} matrix")]
    Index { index: usize, size: usize },
    #[error("QL iteration did not converge for eigenvalue {0}")]
    NoConvergence(usize),
    #[error("inverse iteration did not converge for eigenvalue {0}")]
    InverseIteration(f64),
}

fn check(d: &[f64], e: &[f64]) -> Result<(), TridiagError> {
    if d.is_empty() || e.len() + 1 != d.len() {
        return Err(TridiagError::Shape {
            off: e.len(),
            expected: d.len().saturating_sub(1),
        });
    }
    Ok(())
}

/// Gershgorin interval containing every eigenvalue.
pub fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (lo, hi)
}

/// Number of eigenvalues strictly below `x` (Sturm count via the LDLᵀ pivots).
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let scale = d.iter().chain(e).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let pivmin = f64::MIN_POSITIVE.max(scale * scale * f64::EPSILON * f64::EPSILON);
    let mut count = 0;
    let mut q = d[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
pub fn bisect_eigenvalue(d: &[f64], e: &[f64], k: usize) -> Result<f64, TridiagError> {
    check(d, e)?;
    if k >= d.len() {
        return Err(TridiagError::Index { index: k, size: d.len() });
    }
    let (lo, hi) = gershgorin(d, e);
    Ok(bisect_in(d, e, k, lo, hi))
}

fn bisect_in(d: &[f64], e: &[f64], k: usize, mut lo: f64, mut hi: f64) -> f64 {
    // Invariant: count(lo) <= k < count(hi).
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// The `k` smallest eigenvalues in ascending order.
pub fn lowest_eigenvalues(d: &[f64], e: &[f64], k: usize) -> Result<Vec<f64>, TridiagError> {
    check(d, e)?;
    if k > d.len() {
        return Err(TridiagError::Index { index: k, size: d.len() });
    }
    let (glo, ghi) = gershgorin(d, e);
    let mut out = Vec::with_capacity(k);
    let mut lo = glo;
    for i in 0..k {
        let v = bisect_in(d, e, i, lo, ghi);
        out.push(v);
        // Eigenvalue i bounds the search for i + 1 from below, with slack for
        // the bisection tolerance.
        lo = v - 4.0 * f64::EPSILON * v.abs().max(1.0);
        lo = lo.max(glo);
    }
    Ok(out)
}

/// LU factorization with partial pivoting of a tridiagonal matrix shifted by
/// `-shift`, followed by solves. Mirrors LAPACK `dgttrf`/`dgttrs`.
struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(d: &[f64], e: &[f64], shift: f64) -> Self {
        let n = d.len();
        let mut dl = e.to_vec();
        let mut du = e.to_vec();
        let mut dd: Vec<f64> = d.iter().map(|v| v - shift).collect();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let tiny = f64::EPSILON * d.iter().chain(e).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..n.saturating_sub(1) {
            if dd[i].abs() >= dl[i].abs() {
                if dd[i] == 0.0 {
                    dd[i] = tiny;
                }
                let fact = dl[i] / dd[i];
                dl[i] = fact;
                dd[i + 1] -= fact * du[i];
            } else {
                let fact = dd[i] / dl[i];
                dd[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = dd[i + 1];
                dd[i + 1] = temp - fact * dd[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if dd[n - 1] == 0.0 {
            dd[n - 1] = tiny;
        }
        Self {
            dl,
            d: dd,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|a| *a /= norm);
    }
    norm
}

/// Unit eigenvector for the eigenvalue `lambda` by inverse iteration.
///
/// `previous` holds already-computed unit eigenvectors; the iterate is kept
/// orthogonal to them, which separates close eigenvalues.
pub fn inverse_iteration(
    d: &[f64],
    e: &[f64],
    lambda: f64,
    previous: &[Vec<f64>],
) -> Result<Vec<f64>, TridiagError> {
    check(d, e)?;
    let n = d.len();
    let lu = ShiftedLu::new(d, e, lambda);
    // Deterministic start vector without any reflection symmetry.
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * (0.37 * i as f64 + 0.1).sin())
        .collect();
    normalize(&mut v);
    let mut last_growth = 0.0;
    for _ in 0..8 {
        lu.solve(&mut v);
        for p in previous {
            let o: f64 = v.iter().zip(p).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(p).for_each(|(a, b)| *a -= o * b);
        }
        let growth = normalize(&mut v);
        if !growth.is_finite() || growth == 0.0 {
            return Err(TridiagError::InverseIteration(lambda));
        }
        let residual = residual_norm(d, e, lambda, &v);
        if residual <= 1e3 * f64::EPSILON * (1.0 + lambda.abs()) * (n as f64).sqrt() && growth >= last_growth {
            return Ok(v);
        }
        last_growth = growth;
    }
    let scale = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if residual_norm(d, e, lambda, &v) <= 1e-8 * scale.max(1.0) {
        Ok(v)
    } else {
        Err(TridiagError::InverseIteration(lambda))
    }
}

/// `‖(T − λI) v‖₂`
pub fn residual_norm(d: &[f64], e: &[f64], lambda: f64, v: &[f64]) -> f64 {
    let n = d.len();
    (0..n)
        .map(|i| {
            let mut r = (d[i] - lambda) * v[i];
            if i > 0 {
                r += e[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                r += e[i] * v[i + 1];
            }
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// All eigenvalues, ascending, by implicit QL with Wilkinson shifts.
pub fn ql_eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>, TridiagError> {
    check(d, e)?;
    let (vals, _) = ql_implicit(d, e, false)?;
    Ok(vals)
}

/// All eigenpairs by implicit QL. Eigenvectors are the columns of the
/// returned row-major `n × n` matrix, in ascending eigenvalue order.
/// Cost is O(n³); meant for small matrices.
pub fn ql_eigen(d: &[f64], e: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), TridiagError> {
    check(d, e)?;
    let (vals, z) = ql_implicit(d, e, true)?;
    let n = d.len();
    let z = z.expect("vectors requested");
    let vecs = (0..n).map(|c| (0..n).map(|r| z[r * n + c]).collect()).collect();
    Ok((vals, vecs))
}

fn ql_implicit(d_in: &[f64], e_in: &[f64], want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>), TridiagError> {
    let n = d_in.len();
    let mut d = d_in.to_vec();
    let mut e = e_in.to_vec();
    e.push(0.0);
    let mut z = want_vectors.then(|| {
        let mut z = vec![0.0; n * n];
        (0..n).for_each(|i| z[i * n + i] = 1.0);
        z
    });

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(TridiagError::NoConvergence(l));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let rr = (d[i] - g) * s + 2.0 * c * b;
                p = s * rr;
                d[i + 1] = g + p;
                g = c * rr - b;
                if let Some(z) = z.as_mut() {
                    for k in 0..n {
                        let t = z[k * n + i + 1];
                        z[k * n + i + 1] = s * z[k * n + i] + c * t;
                        z[k * n + i] = c * z[k * n + i] - s * t;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let vals = order.iter().map(|&i| d[i]).collect();
    let z = z.map(|z| {
        let mut sorted = vec![0.0; n * n];
        for (c, &src) in order.iter().enumerate() {
            for r in 0..n {
                sorted[r * n + c] = z[r * n + src];
            }
        }
        sorted
    });
    Ok((vals, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense symmetric matrix-vector product for checks.
    fn apply(d: &[f64], e: &[f64], v: &[f64]) -> Vec<f64> {
        (0..d.len())
            .map(|i| {
                let mut r = d[i] * v[i];
                if i > 0 {
                    r += e[i - 1] * v[i - 1];
                }
                if i + 1 < d.len() {
                    r += e[i] * v[i + 1];
                }
                r
            })
            .collect()
    }

    #[test]
    fn free_chain_spectrum() {
        // d = 2, e = -1: eigenvalues 2 - 2cos(kπ/(n+1)).
        let n = 50;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        let exact: Vec<f64> = (1..=n)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
            .collect();
        let ql = ql_eigenvalues(&d, &e).unwrap();
        let bis = lowest_eigenvalues(&d, &e, n).unwrap();
        for ((a, b), c) in ql.iter().zip(&bis).zip(&exact) {
            assert!((a - c).abs() < 1e-13);
            assert!((b - c).abs() < 1e-13);
        }
    }

    #[test]
    fn one_by_one() {
        assert_eq!(ql_eigenvalues(&[3.0], &[]).unwrap(), vec![3.0]);
        assert_eq!(bisect_eigenvalue(&[3.0], &[], 0).unwrap(), 3.0);
        assert!(bisect_eigenvalue(&[3.0], &[], 1).is_err());
        assert!(ql_eigenvalues(&[1.0, 2.0], &[]).is_err());
    }

    #[test]
    fn inverse_iteration_agrees_with_ql_vectors() {
        let n = 40;
        let d: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.7).sin() * 3.0).collect();
        let e: Vec<f64> = (0..n - 1).map(|i| 0.5 + ((i as f64) * 1.3).cos()).collect();
        let (vals, vecs) = ql_eigen(&d, &e).unwrap();
        let mut found: Vec<Vec<f64>> = Vec::new();
        for k in 0..6 {
            let lam = bisect_eigenvalue(&d, &e, k).unwrap();
            assert!((lam - vals[k]).abs() < 1e-12);
            let v = inverse_iteration(&d, &e, lam, &found).unwrap();
            let overlap: f64 = v.iter().zip(&vecs[k]).map(|(a, b)| a * b).sum();
            assert!((overlap.abs() - 1.0).abs() < 1e-10);
            let hv = apply(&d, &e, &v);
            for (a, b) in hv.iter().zip(&v) {
                assert!((a - lam * b).abs() < 1e-10);
            }
            found.push(v);
        }
    }

    #[test]
    fn near_degenerate_pair_is_separated() {
        // Two weakly coupled identical blocks give a tiny splitting.
        let block = [4.0, 1.0, 3.0, 1.0];
        let mut d = block.to_vec();
        d.extend(block.iter().rev());
        let mut e = vec![-1.0, -1.0, -1.0, 1e-7, -1.0, -1.0, -1.0];
        e.truncate(d.len() - 1);
        let l0 = bisect_eigenvalue(&d, &e, 0).unwrap();
        let l1 = bisect_eigenvalue(&d, &e, 1).unwrap();
        assert!(l1 - l0 < 1e-6 && l1 > l0);
        let v0 = inverse_iteration(&d, &e, l0, &[]).unwrap();
        let v1 = inverse_iteration(&d, &e, l1, &[v0.clone()]).unwrap();
        let dot: f64 = v0.iter().zip(&v1).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-10);
        assert!(residual_norm(&d, &e, l1, &v1) < 1e-9);
    }

    proptest! {
        #[test]
        fn bisection_matches_ql(seed in 0u64..500, n in 2usize..60) {
            let mut x = seed as f64 + 0.5;
            let mut next = || { x = (x * 12.9898).sin() * 43758.5453; x - x.floor() - 0.5 };
            let d: Vec<f64> = (0..n).map(|_| 10.0 * next()).collect();
            let e: Vec<f64> = (0..n - 1).map(|_| 4.0 * next()).collect();
            let ql = ql_eigenvalues(&d, &e).unwrap();
            let bis = lowest_eigenvalues(&d, &e, n).unwrap();
            for (a, b) in ql.iter().zip(&bis) {
                prop_assert!((a - b).abs() <= 1e-11 * (1.0 + a.abs()));
            }
            let trace: f64 = d.iter().sum();
            prop_assert!((ql.iter().sum::<f64>() - trace).abs() <= 1e-10 * (1.0 + trace.abs()));
        }
    }
}
