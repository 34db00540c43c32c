//! Dense vectors, orthonormal frames and random direction sampling.

use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// A dense point or direction in `R^d`, `d >= 1`, with finite entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(entries: Vec<f64>) -> Result<Self> {
        Vector::new(entries)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("vector must have dimension >= 1".into()));
        }
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("entry {i} is {}", entries[i])));
        }
        Ok(Vector(entries))
    }

    /// Builds a vector from a slice; panics on empty or non-finite input.
    pub fn from_slice(entries: &[f64]) -> Self {
        Vector::new(entries.to_vec()).expect("finite nonempty vector")
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be >= 1");
        Vector(vec![0.0; dim])
    }

    /// Standard basis vector `e_index` (zero-based).
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Vector::zeros(dim);
        v.0[index] = 1.0;
        v
    }

    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty());
        Vector(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Euclidean inner product; panics on dimension mismatch. See [`inner`]
    /// for the checked version.
    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|a| a * s).collect())
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Vector) {
        assert_eq!(self.dim(), other.dim(), "axpy: dimension mismatch");
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "distance: dimension mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0.0)
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::dims(expected, self.dim()))
        }
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim(), "add: dimension mismatch");
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim(), "sub: dimension mismatch");
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;
    fn mul(self, s: f64) -> Vector {
        self.scaled(s)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector(self.0.iter().map(|a| -a).collect())
    }
}

/// Checked Euclidean inner product.
pub fn inner(a: &Vector, b: &Vector) -> Result<f64> {
    b.check_dim(a.dim())?;
    Ok(a.dot(b))
}

/// `a / ||a||`.
pub fn normalize(a: &Vector) -> Result<Vector> {
    let n = a.norm();
    if n == 0.0 {
        return Err(Error::Degenerate("cannot normalize the zero vector".into()));
    }
    Ok(a.scaled(1.0 / n))
}

/// Residual acceptance tolerance for orthogonalization in dimension `d`.
pub fn orthogonality_tol(dim: usize) -> f64 {
    1e-10 * (dim as f64).sqrt()
}

/// Candidates with residual norm at or below this are rejected by
/// [`extend_orthonormal`].
pub const CANDIDATE_RESIDUAL_MIN: f64 = 1e-6;

/// An ordered set of orthonormal vectors of common dimension.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrthonormalFrame {
    dim: usize,
    vectors: Vec<Vector>,
    tol: f64,
}

impl OrthonormalFrame {
    pub fn new(dim: usize) -> Self {
        OrthonormalFrame {
            dim,
            vectors: Vec::new(),
            tol: orthogonality_tol(dim),
        }
    }

    /// Rebuilds a frame from stored vectors, validating orthonormality.
    pub fn from_vectors(dim: usize, vectors: Vec<Vector>) -> Result<Self> {
        let mut frame = OrthonormalFrame::new(dim);
        for v in vectors {
            frame.push(v)?;
        }
        Ok(frame)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn get(&self, i: usize) -> &Vector {
        &self.vectors[i]
    }

    /// Appends `v`, which must be unit norm and orthogonal to the frame.
    pub fn push(&mut self, v: Vector) -> Result<()> {
        v.check_dim(self.dim)?;
        if self.vectors.len() >= self.dim {
            return Err(Error::NoOrthogonalDirection {
                constraints: self.vectors.len(),
                dim: self.dim,
            });
        }
        if (v.norm() - 1.0).abs() > self.tol {
            return Err(Error::Degenerate(format!(
                "frame vector has norm {}, expected 1",
                v.norm()
            )));
        }
        if let Some(bad) = self.vectors.iter().map(|u| u.dot(&v).abs()).find(|ip| *ip > self.tol) {
            return Err(Error::Degenerate(format!(
                "frame vector not orthogonal: inner product {bad:e}"
            )));
        }
        self.vectors.push(v);
        Ok(())
    }
}

/// Removes from `v` its projection on the orthonormal `basis`, twice
/// (modified Gram-Schmidt plus one re-orthogonalization pass).
pub(crate) fn project_out(v: &mut Vector, basis: &[Vector]) {
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(v);
            v.axpy(-c, q);
        }
    }
}

/// Returns a unit vector orthogonal to every frame vector and every `avoid`
/// vector. Candidates are the standard basis vectors in index order; the first
/// whose residual norm exceeds [`CANDIDATE_RESIDUAL_MIN`] wins.
pub fn extend_orthonormal(frame: &OrthonormalFrame, avoid: &[Vector]) -> Result<Vector> {
    let dim = frame.dim();
    let constraints = frame.len() + avoid.len();
    if constraints >= dim {
        return Err(Error::NoOrthogonalDirection { constraints, dim });
    }
    let tol = orthogonality_tol(dim);

    let mut basis: Vec<Vector> = frame.vectors().to_vec();
    for a in avoid {
        a.check_dim(dim)?;
        let scale = a.norm();
        if scale == 0.0 {
            continue;
        }
        let mut r = a.scaled(1.0 / scale);
        project_out(&mut r, &basis);
        let rn = r.norm();
        if rn > tol {
            basis.push(r.scaled(1.0 / rn));
        }
    }

    for i in 0..dim {
        let mut r = Vector::basis(dim, i);
        project_out(&mut r, &basis);
        let rn = r.norm();
        if rn > CANDIDATE_RESIDUAL_MIN {
            let mut u = r.scaled(1.0 / rn);
            project_out(&mut u, &basis);
            let un = u.norm();
            return Ok(u.scaled(1.0 / un));
        }
    }
    Err(Error::NoOrthogonalDirection { constraints, dim })
}

/// Uniform draw on the origin-centred sphere of the given radius.
pub fn sample_sphere(dim: usize, radius: f64, rng: &mut RngStream) -> Result<Vector> {
    check_radius(dim, radius)?;
    loop {
        let g = Vector::from_raw((0..dim).map(|_| rng.normal()).collect());
        let n = g.norm();
        if n > 0.0 {
            return Ok(g.scaled(radius / n));
        }
    }
}

/// Uniform draw in the closed origin-centred ball of the given radius.
pub fn sample_ball(dim: usize, radius: f64, rng: &mut RngStream) -> Result<Vector> {
    check_radius(dim, radius)?;
    let direction = sample_sphere(dim, 1.0, rng)?;
    let r = radius * rng.uniform().powf(1.0 / dim as f64);
    Ok(direction.scaled(r))
}

fn check_radius(dim: usize, radius: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be >= 0, got {radius}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(e: &[f64]) -> Vector {
        Vector::from_slice(e)
    }

    #[test]
    fn inner_examples() {
        assert_eq!(inner(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(inner(&v(&[1.0, 0.0]), &v(&[1.0, 0.0])).unwrap(), 1.0);
        assert_eq!(inner(&v(&[2.0, 3.0]), &v(&[4.0, -1.0])).unwrap(), 5.0);
        assert!(matches!(
            inner(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn construction_rejects_non_finite_and_empty() {
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert!(serde_json::from_str::<Vector>("[]").is_err());
    }

    #[test]
    fn normalize_examples() {
        let n = normalize(&v(&[3.0, 4.0])).unwrap();
        assert!((n[0] - 0.6).abs() < 1e-15 && (n[1] - 0.8).abs() < 1e-15);
        assert!((n.norm() - 1.0).abs() < 1e-14);
        assert_eq!(normalize(&v(&[1.0, 0.0, 0.0])).unwrap(), v(&[1.0, 0.0, 0.0]));
        assert!(matches!(normalize(&v(&[0.0, 0.0])), Err(Error::Degenerate(_))));
    }

    #[test]
    fn extend_orthonormal_examples() {
        let frame = OrthonormalFrame::new(2);
        assert_eq!(extend_orthonormal(&frame, &[v(&[1.0, 0.0])]).unwrap(), v(&[0.0, 1.0]));

        let mut frame3 = OrthonormalFrame::new(3);
        frame3.push(Vector::basis(3, 0)).unwrap();
        assert_eq!(extend_orthonormal(&frame3, &[]).unwrap(), v(&[0.0, 1.0, 0.0]));

        let mut frame2 = OrthonormalFrame::new(2);
        frame2.push(Vector::basis(2, 0)).unwrap();
        assert!(matches!(
            extend_orthonormal(&frame2, &[Vector::basis(2, 1)]),
            Err(Error::NoOrthogonalDirection { .. })
        ));
    }

    #[test]
    fn extend_orthonormal_is_deterministic_and_skips_dependent_avoids() {
        let frame = OrthonormalFrame::new(4);
        let avoid = vec![v(&[1.0, 1.0, 0.0, 0.0]), v(&[2.0, 2.0, 0.0, 0.0]), Vector::zeros(4)];
        let a = extend_orthonormal(&frame, &avoid).unwrap();
        let b = extend_orthonormal(&frame, &avoid).unwrap();
        assert_eq!(a, b);
        for x in &avoid {
            assert!(a.dot(x).abs() < 1e-12);
        }
        assert!((a.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sample_ball_examples() {
        let mut rng = RngStream::from_seed(7);
        assert!(sample_ball(3, 0.0, &mut rng).unwrap().is_zero());
        assert!(sample_ball(3, -1.0, &mut rng).is_err());

        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = sample_ball(2, 1.0, &mut rng).unwrap();
            assert!(x.norm() <= 1.0);
            sum += x.norm();
        }
        // E||u|| = d / (d + 1) for the uniform ball.
        assert!((sum / n as f64 - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn sample_sphere_examples() {
        let mut rng = RngStream::from_seed(11);
        for _ in 0..100 {
            let x = sample_sphere(3, 1.0, &mut rng).unwrap();
            assert!((x.norm() - 1.0).abs() < 1e-12);
        }
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_sphere(2, 1.0, &mut rng).unwrap()[0])
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 0.01);

        let a = sample_sphere(5, 2.0, &mut RngStream::from_seed(3)).unwrap();
        let b = sample_sphere(5, 2.0, &mut RngStream::from_seed(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sphere_concentration_in_high_dimension() {
        let d = 200;
        let n = 100_000usize;
        let mut rng = RngStream::from_seed(2024);
        let u1 = Vector::basis(d, 0);
        let hits = (0..n)
            .filter(|_| sample_sphere(d, 1.0, &mut rng).unwrap().dot(&u1) >= 1.0 / 3.0)
            .count();
        let p = (-(d as f64) / 18.0).exp();
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64) <= p + 3.0 * sigma, "hits = {hits}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-10.0f64..10.0, d)
        }

        proptest! {
            #[test]
            fn cauchy_schwarz(a in vec_strategy(5), b in vec_strategy(5)) {
                let a = Vector::from_slice(&a);
                let b = Vector::from_slice(&b);
                prop_assert!(a.dot(&b).abs() <= a.norm() * b.norm() + 1e-12);
            }

            #[test]
            fn unit_self_inner_is_one(a in vec_strategy(6)) {
                let a = Vector::from_slice(&a);
                prop_assume!(a.norm() > 1e-6);
                let u = normalize(&a).unwrap();
                prop_assert!((u.dot(&u) - 1.0).abs() <= 1e-14);
            }

            #[test]
            fn extension_preserves_frame(seed in 0u64..10_000, k in 0usize..3, m in 0usize..3) {
                let d = 6;
                let mut rng = RngStream::from_seed(seed);
                let mut frame = OrthonormalFrame::new(d);
                for _ in 0..k {
                    let u = extend_orthonormal(&frame, &[sample_sphere(d, 1.0, &mut rng).unwrap()]).unwrap();
                    frame.push(u).unwrap();
                }
                let avoid: Vec<Vector> = (0..m).map(|_| sample_ball(d, 3.0, &mut rng).unwrap()).collect();
                let u = extend_orthonormal(&frame, &avoid).unwrap();
                for a in &avoid {
                    prop_assert!(u.dot(a).abs() <= frame.tol() * a.norm().max(1.0));
                }
                prop_assert!(frame.push(u).is_ok());
            }
        }
    }
}
