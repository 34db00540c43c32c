//! Minimum-norm point of a convex hull (Wolfe's algorithm) and an
//! exhaustive reference solver for tiny instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorspace::Vector;

/// Default optimality-gap tolerance.
pub const WOLFE_TOL: f64 = 1e-10;
const DEDUP_TOL: f64 = 1e-14;

/// A convex combination of the input points closest to the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinNormResult {
    /// One coefficient per input point (duplicates get zero).
    pub coefficients: Vec<f64>,
    pub point: Vector,
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn check_points(points: &[Vector]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidParameter("min-norm point of an empty set".into()))?;
    let d = first.dim();
    for p in points {
        p.check_dim(d)?;
    }
    Ok(d)
}

/// Solves `[G 1; 1^T 0] [a; mu] = [0; 1]` by Gaussian elimination with
/// partial pivoting. `None` if the system is numerically singular.
fn affine_minimizer(gram: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = gram.len();
    let m = n + 1;
    let mut a = vec![vec![0.0; m + 1]; m];
    let scale = gram.iter().map(|r| r.iter().fold(0.0f64, |s, v| s.max(v.abs()))).fold(1.0f64, f64::max);
    for i in 0..n {
        for j in 0..n {
            a[i][j] = gram[i][j] / scale;
        }
        a[i][n] = 1.0;
        a[n][i] = 1.0;
    }
    a[n][m] = 1.0;
    for col in 0..m {
        let piv = (col..m).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|j| a[i][j] * x[j]).sum();
        x[i] = (a[i][m] - s) / a[i][i];
    }
    x.truncate(n);
    Some(x)
}

fn combine(points: &[Vector], set: &[usize], lambda: &[f64]) -> Vector {
    let mut x = Vector::zeros(points[0].dim());
    for (&i, &l) in set.iter().zip(lambda) {
        x.axpy(l, &points[i]);
    }
    x
}

/// Wolfe's minimum-norm-point algorithm over `conv(points)`.
///
/// `converged` reports whether the gap `<x, x - p>` over all points fell to
/// `tol`; otherwise the best point found is returned after `50 n` major
/// cycles.
pub fn min_norm_point(points: &[Vector], tol: f64) -> Result<MinNormResult> {
    check_points(points)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let n_in = points.len();
    let single = |i: usize| {
        let mut c = vec![0.0; n_in];
        c[i] = 1.0;
        c
    };
    if let Some(z) = points.iter().position(|p| p.is_zero()) {
        return Ok(MinNormResult {
            coefficients: single(z),
            point: Vector::zeros(points[0].dim()),
            norm: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    // Deduplicate, remembering which input each unique point came from.
    let mut uniq: Vec<Vector> = Vec::new();
    let mut origin: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !uniq.iter().any(|q| q.distance(p) <= DEDUP_TOL) {
            uniq.push(p.clone());
            origin.push(i);
        }
    }
    let n = uniq.len();
    let dot = |i: usize, j: usize| uniq[i].dot(&uniq[j]);

    let start = (0..n).min_by(|&a, &b| uniq[a].norm_squared().total_cmp(&uniq[b].norm_squared())).unwrap();
    let mut set = vec![start];
    let mut lambda = vec![1.0];
    let mut x = uniq[start].clone();
    let mut converged = false;
    let mut iterations = 0;
    let cap = 50 * n;

    while iterations < cap {
        iterations += 1;
        let xx = x.norm_squared();
        let (j, xp) = (0..n)
            .map(|j| (j, x.dot(&uniq[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - xp <= tol || xx == 0.0 {
            converged = true;
            break;
        }
        if set.contains(&j) {
            // No progress possible in floating point; the gap is what it is.
            break;
        }
        set.push(j);
        lambda.push(0.0);

        let mut minor = 0;
        loop {
            minor += 1;
            let gram: Vec<Vec<f64>> = set.iter().map(|&a| set.iter().map(|&b| dot(a, b)).collect()).collect();
            let Some(alpha) = affine_minimizer(&gram) else {
                // Affinely dependent active set: drop the newest point and stop.
                set.pop();
                lambda.pop();
                let total: f64 = lambda.iter().sum();
                lambda.iter_mut().for_each(|l| *l /= total);
                x = combine(&uniq, &set, &lambda);
                break;
            };
            if alpha.iter().all(|&a| a > 0.0) {
                lambda = alpha;
                x = combine(&uniq, &set, &lambda);
                break;
            }
            let mut theta = 1.0f64;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= 0.0 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l += theta * (a - *l);
            }
            // Remove at least the blocking point.
            let blocking = lambda
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap();
            let mut keep_set = Vec::new();
            let mut keep_lambda = Vec::new();
            for (i, (&s, &l)) in set.iter().zip(&lambda).enumerate() {
                if i != blocking && l > 1e-15 {
                    keep_set.push(s);
                    keep_lambda.push(l);
                }
            }
            let total: f64 = keep_lambda.iter().sum();
            keep_lambda.iter_mut().for_each(|l| *l /= total);
            set = keep_set;
            lambda = keep_lambda;
            x = combine(&uniq, &set, &lambda);
            if minor > n + 1 {
                break;
            }
        }
    }

    let mut coefficients = vec![0.0; n_in];
    for (&s, &l) in set.iter().zip(&lambda) {
        coefficients[origin[s]] = l;
    }
    let norm = x.norm();
    Ok(MinNormResult {
        coefficients,
        point: x,
        norm,
        iterations,
        converged,
    })
}

/// Exact minimum norm over the hull by enumerating subsets and projecting
/// the origin onto each affine hull. For at most 6 points in dimension at
/// most 5.
pub fn min_norm_brute_oracle(points: &[Vector]) -> Result<f64> {
    let d = check_points(points)?;
    if points.len() > 6 || d > 5 {
        return Err(Error::SizeLimit(format!(
            "brute-force min-norm handles at most 6 points in dimension 5, got {} in {d}",
            points.len()
        )));
    }
    let n = points.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let p0 = &points[idx[0]];
        // Modified Gram-Schmidt on the differences p_i - p0, keeping R.
        let mut q: Vec<Vector> = Vec::new();
        let mut r = vec![vec![0.0; idx.len() - 1]; idx.len() - 1];
        let mut independent = true;
        for (c, &i) in idx.iter().skip(1).enumerate() {
            let mut v = &points[i] - p0;
            for (k, qk) in q.iter().enumerate() {
                let proj = qk.dot(&v);
                r[k][c] = proj;
                v.axpy(-proj, qk);
            }
            let nv = v.norm();
            if nv < 1e-10 {
                independent = false;
                break;
            }
            r[c][c] = nv;
            q.push(v.scaled(1.0 / nv));
        }
        if !independent {
            continue;
        }
        // Projection of the origin: x = p0 + Q c with c = -Q^T p0.
        let c: Vec<f64> = q.iter().map(|qk| -qk.dot(p0)).collect();
        let m = c.len();
        let mut beta = vec![0.0; m];
        for i in (0..m).rev() {
            let s: f64 = (i + 1..m).map(|j| r[i][j] * beta[j]).sum();
            beta[i] = (c[i] - s) / r[i][i];
        }
        let alpha0 = 1.0 - beta.iter().sum::<f64>();
        if alpha0 < -1e-12 || beta.iter().any(|&b| b < -1e-12) {
            continue;
        }
        let mut x = p0.clone();
        for (qk, ck) in q.iter().zip(&c) {
            x.axpy(*ck, qk);
        }
        best = best.min(x.norm());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::vectorspace::sample_ball;
    use proptest::prelude::*;

    fn v(e: &[f64]) -> Vector {
        Vector::from_slice(e)
    }

    fn check_invariants(points: &[Vector], r: &MinNormResult) {
        assert!(r.coefficients.iter().all(|&c| c >= -1e-12));
        assert!((r.coefficients.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        let mut comb = Vector::zeros(points[0].dim());
        for (p, c) in points.iter().zip(&r.coefficients) {
            comb.axpy(*c, p);
        }
        assert!((&comb - &r.point).norm() <= 1e-10);
        assert!((r.point.norm() - r.norm).abs() <= 1e-12);
    }

    #[test]
    fn examples() {
        let pts = [v(&[1.0, 0.0]), v(&[-1.0, 0.0])];
        let r = min_norm_point(&pts, WOLFE_TOL).unwrap();
        assert_eq!(r.norm, 0.0);
        assert_eq!(r.coefficients, vec![0.5, 0.5]);
        assert_eq!(min_norm_brute_oracle(&pts).unwrap(), 0.0);

        let one = min_norm_point(&[v(&[1.0, 0.0])], WOLFE_TOL).unwrap();
        assert_eq!((one.norm, one.coefficients.clone()), (1.0, vec![1.0]));
        assert_eq!(min_norm_brute_oracle(&[v(&[2.0, 0.0])]).unwrap(), 2.0);

        let pts = [v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        let r = min_norm_point(&pts, WOLFE_TOL).unwrap();
        assert!((r.point[0] - 0.5).abs() < 1e-15 && (r.point[1] - 0.5).abs() < 1e-15);
        // Grid search over lambda as an independent check.
        let grid = (0..=1_000_000)
            .map(|i| {
                let l = i as f64 / 1e6;
                (l * l + (1.0 - l) * (1.0 - l)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((r.norm - grid).abs() < 1e-12);
        assert!((r.norm - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        let pts = [v(&[1.0, 1.0]), v(&[1.0, 1.0]), v(&[0.0, 0.0])];
        let r = min_norm_point(&pts, WOLFE_TOL).unwrap();
        assert_eq!(r.norm, 0.0);
        let dup = [v(&[2.0, 0.0]), v(&[2.0, 0.0]), v(&[2.0, 1.0])];
        let r = min_norm_point(&dup, WOLFE_TOL).unwrap();
        assert!((r.norm - 2.0).abs() < 1e-15);
        check_invariants(&dup, &r);
        assert!(min_norm_point(&[], WOLFE_TOL).is_err());
        assert!(min_norm_point(&[v(&[1.0]), v(&[1.0, 2.0])], WOLFE_TOL).is_err());
        let big: Vec<Vector> = (0..7).map(|i| v(&[i as f64])).collect();
        assert!(matches!(min_norm_brute_oracle(&big), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn agrees_with_brute_force() {
        let mut rng = RngStream::from_seed(12);
        for trial in 0..1000 {
            let n = 1 + (trial % 5);
            let d = 1 + (trial % 4);
            let shift = sample_ball(d, 1.5, &mut rng).unwrap();
            let pts: Vec<Vector> = (0..n).map(|_| &sample_ball(d, 1.0, &mut rng).unwrap() + &shift).collect();
            let r = min_norm_point(&pts, WOLFE_TOL).unwrap();
            check_invariants(&pts, &r);
            let b = min_norm_brute_oracle(&pts).unwrap();
            assert!((r.norm - b).abs() <= 1e-6, "trial {trial}: {} vs {b}", r.norm);
        }
    }

    proptest! {
        #[test]
        fn adding_points_never_increases_norm(seed in 0u64..5000, n in 1usize..8, extra in 1usize..5) {
            let mut rng = RngStream::from_seed(seed);
            let shift = sample_ball(3, 2.0, &mut rng).unwrap();
            let mut pts: Vec<Vector> = (0..n).map(|_| &sample_ball(3, 1.0, &mut rng).unwrap() + &shift).collect();
            let small = min_norm_point(&pts, WOLFE_TOL).unwrap();
            for _ in 0..extra {
                pts.push(&sample_ball(3, 1.0, &mut rng).unwrap() + &shift);
            }
            let large = min_norm_point(&pts, WOLFE_TOL).unwrap();
            prop_assert!(large.norm <= small.norm + 1e-9);
            prop_assert!(large.converged);
        }
    }
}
