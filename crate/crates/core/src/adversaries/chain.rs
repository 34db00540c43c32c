//! The chain-structured hard quadratic and its metric `M = (A + 4I) / 8`.
//!
//! `A` is tridiagonal on the first `T` coordinates (2 on the diagonal, -1
//! off the diagonal, `k` in the last diagonal slot) and zero elsewhere, so
//! `M` is the tridiagonal block `B = (A_T + 4I) / 8` followed by `I / 2` on
//! the remaining `d - T` coordinates. Nothing here forms a dense `d x d`
//! matrix.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use serde::{Deserialize, Serialize};

use super::tridiag::{eigen_ql, eigenvalue_bisect};
use crate::error::{Error, Result};
use crate::vectorspace::Vector;
use crate::zoo::FirstOrderReply;

/// Last diagonal entry of `A`: `(sqrt 2 + 3) / (sqrt 2 + 1)`.
pub fn chain_k() -> f64 {
    (SQRT_2 + 3.0) / (SQRT_2 + 1.0)
}

/// Geometric ratio of the minimizer: `(sqrt 2 - 1) / (sqrt 2 + 1)`.
pub fn chain_q() -> f64 {
    (SQRT_2 - 1.0) / (SQRT_2 + 1.0)
}

/// Largest `T` accepted by the dense spectrum utility.
pub const SPECTRUM_CHECK_MAX_T: usize = 64;

/// Chain size parameters as persisted in instance documents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    #[serde(rename = "T")]
    pub t: usize,
    pub d: usize,
    pub k: f64,
}

/// `(A v)_i` for `i < t`, reading only the first `t` entries of `v`.
fn a_times(v: &[f64], t: usize, k: f64, i: usize) -> f64 {
    if t == 1 {
        return k * v[0];
    }
    if i == 0 {
        2.0 * v[0] - v[1]
    } else if i + 1 < t {
        -v[i - 1] + 2.0 * v[i] - v[i + 1]
    } else {
        -v[i - 1] + k * v[i]
    }
}

/// `v^T A v` over the first `t` entries, as a sum of nonnegative terms.
fn a_form(v: &[f64], t: usize, k: f64) -> f64 {
    let mut s = v[0] * v[0];
    for i in 0..t - 1 {
        let diff = v[i] - v[i + 1];
        s += diff * diff;
    }
    s + (k - 1.0) * v[t - 1] * v[t - 1]
}

/// The metric `M` of the chain quadratic in natural coordinates, with its
/// symmetric square root precomputed on the tridiagonal block.
#[derive(Clone, Debug)]
pub struct ChainMetric {
    params: ChainParams,
    /// Row-major `t x t` square root of the tridiagonal block.
    sqrt_block: Vec<f64>,
    block_eigenvalues: Vec<f64>,
}

impl ChainMetric {
    pub fn new(params: ChainParams) -> Result<Self> {
        let ChainParams { t, d, k } = params;
        if t < 1 || d < t {
            return Err(Error::InvalidParameter(format!(
                "chain metric needs 1 <= T <= d, got T = {t}, d = {d}"
            )));
        }
        if !(k.is_finite() && k >= 1.0) {
            return Err(Error::InvalidParameter(format!("chain k must be >= 1, got {k}")));
        }
        let (diag, off) = block_tridiagonal(t, k);
        let (values, vectors) = eigen_ql(&diag, &off);
        let roots: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
        let mut sqrt_block = vec![0.0; t * t];
        for i in 0..t {
            for j in 0..t {
                sqrt_block[i * t + j] = (0..t).map(|m| vectors[i][m] * roots[m] * vectors[j][m]).sum();
            }
        }
        Ok(ChainMetric {
            params,
            sqrt_block,
            block_eigenvalues: values,
        })
    }

    pub fn params(&self) -> ChainParams {
        self.params
    }

    pub fn dim(&self) -> usize {
        self.params.d
    }

    /// Eigenvalues of the tridiagonal block from the QL route.
    pub fn block_eigenvalues(&self) -> &[f64] {
        &self.block_eigenvalues
    }

    /// `M` restricted to the first `T` coordinates, applied to `c` (len `T`).
    pub(crate) fn block_apply(&self, c: &[f64]) -> Vec<f64> {
        let ChainParams { t, k, .. } = self.params;
        (0..t).map(|i| a_times(c, t, k, i) / 8.0 + 0.5 * c[i]).collect()
    }

    /// `(A c)` on the block, `c` of length `T`.
    pub(crate) fn block_a(&self, c: &[f64]) -> Vec<f64> {
        let ChainParams { t, k, .. } = self.params;
        (0..t).map(|i| a_times(c, t, k, i)).collect()
    }

    pub(crate) fn block_a_form(&self, c: &[f64]) -> f64 {
        a_form(c, self.params.t, self.params.k)
    }

    pub(crate) fn block_sqrt_apply(&self, c: &[f64]) -> Vec<f64> {
        let t = self.params.t;
        (0..t)
            .map(|i| (0..t).map(|j| self.sqrt_block[i * t + j] * c[j]).sum())
            .collect()
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        let t = self.params.t;
        let s = v.as_slice();
        let mut out = self.block_apply(&s[..t]);
        out.extend(s[t..].iter().map(|x| 0.5 * x));
        Vector::from_raw(out)
    }

    pub fn apply_sqrt(&self, v: &Vector) -> Vector {
        let t = self.params.t;
        let s = v.as_slice();
        let mut out = self.block_sqrt_apply(&s[..t]);
        out.extend(s[t..].iter().map(|x| FRAC_1_SQRT_2 * x));
        Vector::from_raw(out)
    }

    /// `v^T M v` as a sum of nonnegative terms.
    pub fn quad_form(&self, v: &Vector) -> f64 {
        let ChainParams { t, k, .. } = self.params;
        a_form(v.as_slice(), t, k) / 8.0 + 0.5 * v.norm_squared()
    }
}

pub(crate) fn block_tridiagonal(t: usize, k: f64) -> (Vec<f64>, Vec<f64>) {
    let mut diag = vec![(2.0 + 4.0) / 8.0; t];
    diag[t - 1] = (k + 4.0) / 8.0;
    if t == 1 {
        // A single coordinate: the form reduces to x_1^2 + (k - 1) x_1^2.
        diag[0] = (k + 4.0) / 8.0;
    }
    let off = vec![-1.0 / 8.0; t.saturating_sub(1)];
    (diag, off)
}

/// `M` in coordinates rotated by an orthonormal frame `u_1..u_T`:
/// `M~ = U^T M U`, applied without completing the frame to a basis.
#[derive(Clone, Debug)]
pub struct RotatedChainMetric {
    base: ChainMetric,
    frame: Vec<Vector>,
}

impl RotatedChainMetric {
    pub fn new(base: ChainMetric, frame: Vec<Vector>) -> Result<Self> {
        let t = base.params.t;
        if frame.len() != t {
            return Err(Error::InvalidParameter(format!(
                "rotation frame has {} vectors, expected T = {t}",
                frame.len()
            )));
        }
        for u in &frame {
            u.check_dim(base.dim())?;
        }
        crate::vectorspace::OrthonormalFrame::from_vectors(base.dim(), frame.clone())?;
        Ok(RotatedChainMetric { base, frame })
    }

    pub fn base(&self) -> &ChainMetric {
        &self.base
    }

    pub fn frame(&self) -> &[Vector] {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `c_i = u_i^T v`.
    pub fn coordinates(&self, v: &Vector) -> Vec<f64> {
        self.frame.iter().map(|u| u.dot(v)).collect()
    }

    fn lift(&self, mut out: Vector, coeffs: &[f64]) -> Vector {
        for (u, c) in self.frame.iter().zip(coeffs) {
            out.axpy(*c, u);
        }
        out
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        let c = self.coordinates(v);
        let ac: Vec<f64> = self.base.block_a(&c).iter().map(|x| x / 8.0).collect();
        self.lift(v.scaled(0.5), &ac)
    }

    pub fn apply_sqrt(&self, v: &Vector) -> Vector {
        let c = self.coordinates(v);
        let root = self.base.block_sqrt_apply(&c);
        let delta: Vec<f64> = root.iter().zip(&c).map(|(r, ci)| r - FRAC_1_SQRT_2 * ci).collect();
        self.lift(v.scaled(FRAC_1_SQRT_2), &delta)
    }

    pub fn quad_form(&self, v: &Vector) -> f64 {
        let c = self.coordinates(v);
        self.base.block_a_form(&c) / 8.0 + 0.5 * v.norm_squared()
    }
}

/// The positive definite metric behind composed zoo functions.
#[derive(Clone, Debug)]
pub enum Metric {
    Identity { dim: usize },
    Chain(ChainMetric),
    Rotated(RotatedChainMetric),
}

impl Metric {
    pub fn dim(&self) -> usize {
        match self {
            Metric::Identity { dim } => *dim,
            Metric::Chain(m) => m.dim(),
            Metric::Rotated(m) => m.dim(),
        }
    }

    /// `M v`.
    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        v.check_dim(self.dim())?;
        Ok(match self {
            Metric::Identity { .. } => v.clone(),
            Metric::Chain(m) => m.apply(v),
            Metric::Rotated(m) => m.apply(v),
        })
    }

    /// `M^{1/2} v` with the symmetric positive definite root.
    pub fn apply_sqrt(&self, v: &Vector) -> Result<Vector> {
        v.check_dim(self.dim())?;
        Ok(match self {
            Metric::Identity { .. } => v.clone(),
            Metric::Chain(m) => m.apply_sqrt(v),
            Metric::Rotated(m) => m.apply_sqrt(v),
        })
    }

    /// `v^T M v`.
    pub fn quad_form(&self, v: &Vector) -> Result<f64> {
        v.check_dim(self.dim())?;
        Ok(match self {
            Metric::Identity { .. } => v.norm_squared(),
            Metric::Chain(m) => m.quad_form(v),
            Metric::Rotated(m) => m.quad_form(v),
        })
    }

    /// Largest eigenvalue of `M`.
    pub fn lambda_max(&self) -> f64 {
        match self {
            Metric::Identity { .. } => 1.0,
            Metric::Chain(m) | Metric::Rotated(RotatedChainMetric { base: m, .. }) => {
                let top = m.block_eigenvalues.last().copied().unwrap_or(0.5);
                if m.params.d > m.params.t {
                    top.max(0.5)
                } else {
                    top
                }
            }
        }
    }

    /// Smallest eigenvalue of `M`.
    pub fn lambda_min(&self) -> f64 {
        match self {
            Metric::Identity { .. } => 1.0,
            Metric::Chain(m) | Metric::Rotated(RotatedChainMetric { base: m, .. }) => {
                let bottom = m.block_eigenvalues.first().copied().unwrap_or(0.5);
                if m.params.d > m.params.t {
                    bottom.min(0.5)
                } else {
                    bottom
                }
            }
        }
    }

    pub fn chain_params(&self) -> Option<ChainParams> {
        match self {
            Metric::Identity { .. } => None,
            Metric::Chain(m) => Some(m.params),
            Metric::Rotated(m) => Some(m.base.params),
        }
    }

    pub fn rotation_frame(&self) -> Option<&[Vector]> {
        match self {
            Metric::Rotated(m) => Some(m.frame()),
            _ => None,
        }
    }
}

/// `msqrt_apply`: the symmetric square root of `M` applied to `x`.
pub fn msqrt_apply(metric: &Metric, x: &Vector) -> Result<Vector> {
    metric.apply_sqrt(x)
}

/// The quadratic `g(x) = x^T M x - e_1^T x / 4 + b = (x - x*)^T M (x - x*)`
/// with minimizer `x* = (q, q^2, ..., q^T, 0, ..., 0)`.
#[derive(Clone, Debug)]
pub struct HardQuadratic {
    t: usize,
    d: usize,
    k: f64,
    q: f64,
    x_star: Vector,
    b: f64,
    metric: ChainMetric,
}

impl HardQuadratic {
    /// Requires `T >= 2` and `d >= T`.
    pub fn new(t: usize, d: usize) -> Result<Self> {
        if t < 2 {
            return Err(Error::InvalidParameter(format!("chain quadratic needs T >= 2, got {t}")));
        }
        if d < t {
            return Err(Error::InvalidParameter(format!("chain quadratic needs d >= T, got d = {d}, T = {t}")));
        }
        let k = chain_k();
        let q = chain_q();
        let mut x_star = vec![0.0; d];
        let mut power = 1.0;
        for xi in x_star.iter_mut().take(t) {
            power *= q;
            *xi = power;
        }
        let x_star = Vector::from_raw(x_star);
        let metric = ChainMetric::new(ChainParams { t, d, k })?;
        let b = metric.quad_form(&x_star);
        Ok(HardQuadratic {
            t,
            d,
            k,
            q,
            x_star,
            b,
            metric,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn x_star(&self) -> &Vector {
        &self.x_star
    }

    /// The constant making `g(x*) = 0`, i.e. `x*^T M x*`.
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn chain_metric(&self) -> &ChainMetric {
        &self.metric
    }

    pub fn metric(&self) -> Metric {
        Metric::Chain(self.metric.clone())
    }

    pub fn params(&self) -> ChainParams {
        self.metric.params()
    }

    /// Value `(x - x*)^T M (x - x*)` and gradient `2 M x - e_1 / 4` from the
    /// chain form; coordinates beyond the support of `x` (and one more) get
    /// an exactly zero gradient.
    pub fn eval(&self, x: &Vector) -> Result<FirstOrderReply> {
        x.check_dim(self.d)?;
        let value = self.metric.quad_form(&(x - &self.x_star));
        let s = x.as_slice();
        let mut grad = Vec::with_capacity(self.d);
        for i in 0..self.t {
            grad.push(a_times(s, self.t, self.k, i) / 4.0 + s[i]);
        }
        grad[0] -= 0.25;
        grad.extend_from_slice(&s[self.t..]);
        Ok(FirstOrderReply::smooth(value, Vector::from_raw(grad)))
    }

    /// `(lambda_min, lambda_max)` of the full `d x d` metric by Sturm bisection
    /// on the tridiagonal block (the remaining coordinates contribute 1/2).
    pub fn spectrum(&self) -> Result<(f64, f64)> {
        chain_spectrum_check(self)
    }
}

impl crate::zoo::Function for HardQuadratic {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, x: &Vector) -> Result<FirstOrderReply> {
        HardQuadratic::eval(self, x)
    }

    /// Gradient bound `2 lambda_max (1 + ||x*||)` on the unit ball.
    fn lipschitz(&self) -> f64 {
        3.0
    }

    fn name(&self) -> &'static str {
        "chain_quadratic"
    }
}

/// `sum_i q^i u_i` for a rotation frame `u_1..u_T`.
pub fn rotated_minimizer(hq: &HardQuadratic, frame: &[Vector]) -> Vector {
    let mut x = Vector::zeros(hq.d());
    for (i, u) in frame.iter().enumerate() {
        x.axpy(hq.x_star()[i], u);
    }
    x
}

/// Extremal eigenvalues of `M` by bisection. Limited to `T <= 64`.
pub fn chain_spectrum_check(hq: &HardQuadratic) -> Result<(f64, f64)> {
    if hq.t > SPECTRUM_CHECK_MAX_T {
        return Err(Error::SizeLimit(format!(
            "spectrum check supports T <= {SPECTRUM_CHECK_MAX_T}, got {}",
            hq.t
        )));
    }
    let (diag, off) = block_tridiagonal(hq.t, hq.k);
    let mut lo = eigenvalue_bisect(&diag, &off, 0);
    let mut hi = eigenvalue_bisect(&diag, &off, hq.t - 1);
    if hq.d > hq.t {
        lo = lo.min(0.5);
        hi = hi.max(0.5);
    }
    Ok((lo, hi))
}
