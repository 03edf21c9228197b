//! Latent-space Gaussian process regression.
//!
//! The first frame's `N` position vectors (each in `R^P`) are the training
//! inputs and the last frame's are the targets. A single RBF Gram matrix is
//! shared across all `P` output channels, so one factorization serves `P`
//! right-hand sides. The prior mean is zero, which makes the posterior mean
//! `K(X*, X) (K(X, X) + σ²I)⁻¹ Y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::tensor::{Frame, LatentVideo};

pub const DEFAULT_NOISE_VARIANCE: f64 = 1e-4;
pub const DEFAULT_GAMMA: f64 = 0.9;

/// Jitter ladder, as multiples of `trace(K)/N`, tried after a plain factorization fails.
const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfKernel {
    length_scale: f64,
    signal_variance: f64,
}

impl RbfKernel {
    pub fn new(length_scale: f64, signal_variance: f64) -> Result<Self> {
        if !(length_scale > 0.0 && length_scale.is_finite()) {
            return Err(Error::param(
                "length_scale",
                format!("must be > 0, got {length_scale}"),
            ));
        }
        if !(signal_variance > 0.0 && signal_variance.is_finite()) {
            return Err(Error::param(
                "signal_variance",
                format!("must be > 0, got {signal_variance}"),
            ));
        }
        Ok(Self {
            length_scale,
            signal_variance,
        })
    }

    pub fn with_length_scale(length_scale: f64) -> Result<Self> {
        Self::new(length_scale, 1.0)
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    #[inline]
    pub(crate) fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.signal_variance * (-sq / (2.0 * self.length_scale * self.length_scale)).exp()
    }

    /// `K(A, B)` between the position vectors of two frames, row-major `|A| x |B|`.
    pub fn cross_gram(&self, a: &Frame, b: &Frame) -> Vec<f64> {
        let mut out = Vec::with_capacity(a.positions() * b.positions());
        for i in 0..a.positions() {
            let pa = a.point(i);
            out.extend((0..b.positions()).map(|j| self.eval(pa, b.point(j))));
        }
        out
    }
}

/// `signal_variance · exp(-‖a - b‖² / (2ℓ²))`.
pub fn rbf(a: &[f64], b: &[f64], kernel: &RbfKernel) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "rbf inputs of dimension {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(kernel.eval(a, b))
}

/// How the kernel length scale is chosen for a given set of inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LengthScale {
    /// Median pairwise distance among the input points, 1.0 if that is zero.
    #[default]
    Median,
    Fixed(f64),
}

impl LengthScale {
    pub fn kernel_for(&self, inputs: &Frame) -> Result<RbfKernel> {
        match *self {
            LengthScale::Median => RbfKernel::with_length_scale(median_pairwise_distance(inputs)),
            LengthScale::Fixed(l) => RbfKernel::with_length_scale(l),
        }
    }
}

/// Median Euclidean distance over all unordered pairs of position vectors;
/// falls back to 1.0 for a single point or a zero median.
pub fn median_pairwise_distance(points: &Frame) -> f64 {
    let n = points.positions();
    let mut dists = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let sq: f64 = points
                .point(i)
                .iter()
                .zip(points.point(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dists.push(sq.sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 0 {
        0.5 * (dists[mid - 1] + dists[mid])
    } else {
        dists[mid]
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// A fitted multi-output regression from first-frame to last-frame features.
#[derive(Debug, Clone)]
pub struct GprModel {
    inputs: Frame,
    targets: Frame,
    kernel: RbfKernel,
    noise_variance: f64,
    jitter: f64,
    factor: Cholesky,
    weights: Vec<f64>,
}

impl GprModel {
    pub fn inputs(&self) -> &Frame {
        &self.inputs
    }

    pub fn targets(&self) -> &Frame {
        &self.targets
    }

    pub fn kernel(&self) -> &RbfKernel {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Diagonal jitter that made the factorization succeed (0 when none was needed).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Row-major lower-triangular factor of `K + (σ² + jitter) I`.
    pub fn factor(&self) -> &[f64] {
        self.factor.lower()
    }

    /// Row-major `N x P` solution of `(K + (σ² + jitter) I) W = Y`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The regularized Gram matrix the factor reconstructs.
    pub fn regularized_gram(&self) -> Vec<f64> {
        let n = self.inputs.positions();
        let mut k = self.kernel.cross_gram(&self.inputs, &self.inputs);
        for i in 0..n {
            k[i * n + i] += self.noise_variance + self.jitter;
        }
        k
    }

    fn check_query(&self, query: &Frame) -> Result<()> {
        if query.channels() != self.inputs.channels() {
            return Err(Error::ShapeMismatch(format!(
                "query has {} channels, model has {}",
                query.channels(),
                self.inputs.channels()
            )));
        }
        Ok(())
    }

    /// Posterior mean at each query position.
    pub fn predict_mean(&self, query: &Frame) -> Result<Frame> {
        self.check_query(query)?;
        let n = self.inputs.positions();
        let p = self.inputs.channels();
        let mut out = vec![0.0; query.positions() * p];
        for (q, row) in out.chunks_exact_mut(p).enumerate() {
            let xq = query.point(q);
            for i in 0..n {
                let k = self.kernel.eval(xq, self.inputs.point(i));
                for (dst, w) in row.iter_mut().zip(&self.weights[i * p..(i + 1) * p]) {
                    *dst += k * w;
                }
            }
        }
        Frame::new(query.positions(), p, out)
    }

    /// Diagonal of the posterior covariance, clamped at zero.
    pub fn predict_cov_diag(&self, query: &Frame) -> Result<Vec<f64>> {
        self.check_query(query)?;
        let n = self.inputs.positions();
        let mut v = vec![0.0; n];
        Ok((0..query.positions())
            .map(|q| {
                let xq = query.point(q);
                for (i, dst) in v.iter_mut().enumerate() {
                    *dst = self.kernel.eval(xq, self.inputs.point(i));
                }
                self.factor.solve_lower_in_place(&mut v, 1);
                let explained: f64 = v.iter().map(|x| x * x).sum();
                (self.kernel.eval(xq, xq) - explained).max(0.0)
            })
            .collect())
    }
}

/// Fits the endpoint regression `first -> last`.
///
/// Factorizes `K + σ²I` directly, then retries with diagonal jitter
/// `1e-10 · trace(K)/N`, growing tenfold up to `1e-2 · trace(K)/N`.
pub fn fit(
    first: &Frame,
    last: &Frame,
    kernel: &RbfKernel,
    noise_variance: f64,
) -> Result<GprModel> {
    first.ensure_same_shape(last)?;
    if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
        return Err(Error::param(
            "noise_variance",
            format!("must be >= 0, got {noise_variance}"),
        ));
    }
    let n = first.positions();
    let p = first.channels();
    let gram = kernel.cross_gram(first, first);
    let mean_diag = (0..n).map(|i| gram[i * n + i]).sum::<f64>() / n as f64;

    let ladder = std::iter::once(0.0).chain(
        std::iter::successors(Some(JITTER_START), |j| Some(j * 10.0))
            .take_while(|j| *j <= JITTER_MAX * (1.0 + 1e-9))
            .map(|j| j * mean_diag),
    );

    let mut worst_pivot = 0.0f64;
    let mut last_jitter = 0.0;
    for jitter in ladder {
        let mut k = gram.clone();
        for i in 0..n {
            k[i * n + i] += noise_variance + jitter;
        }
        last_jitter = jitter;
        match Cholesky::factor(&k, n) {
            Ok(factor) => {
                let weights = factor.solve(last.data(), p);
                if weights.iter().any(|w| !w.is_finite()) {
                    continue;
                }
                return Ok(GprModel {
                    inputs: first.clone(),
                    targets: last.clone(),
                    kernel: *kernel,
                    noise_variance,
                    jitter,
                    factor,
                    weights,
                });
            }
            Err(e) => worst_pivot = e.pivot.abs(),
        }
    }
    let condition = (mean_diag + noise_variance) / worst_pivot.max(f64::MIN_POSITIVE);
    Err(Error::CholeskyFailed {
        jitter: last_jitter,
        condition,
    })
}

/// Replaces every intermediate frame `s` by the posterior mean at frame `s`'s
/// position vectors, fitted from frame 0 to frame `S - 1`. Endpoints pass
/// through untouched.
pub fn gpr_smooth(z: &LatentVideo, kernel: &RbfKernel, noise_variance: f64) -> Result<LatentVideo> {
    let frames = z.frames();
    if frames == 2 {
        return Ok(z.clone());
    }
    let model = fit(&z.first_frame(), &z.last_frame(), kernel, noise_variance)?;
    let mut out = z.clone();
    for s in 1..frames - 1 {
        let mean = model.predict_mean(&z.frame(s))?;
        out.set_frame(s, &mean)?;
    }
    Ok(out)
}

/// `gpr_smooth` with the length scale resolved from frame 0.
pub fn gpr_smooth_with(
    z: &LatentVideo,
    length_scale: LengthScale,
    noise_variance: f64,
) -> Result<LatentVideo> {
    let kernel = length_scale.kernel_for(&z.first_frame())?;
    gpr_smooth(z, &kernel, noise_variance)
}

/// Stand-in for the denoiser's attention output at a GPR blend site.
pub trait AttentionHook: Send + Sync {
    fn attend(&self, z: &LatentVideo) -> Result<LatentVideo>;
}

/// Contributes nothing; the blend reduces to `γ z + (1 - γ) GPR(z)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroAttention;

impl AttentionHook for ZeroAttention {
    fn attend(&self, z: &LatentVideo) -> Result<LatentVideo> {
        z.scale(0.0)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityAttention;

impl AttentionHook for IdentityAttention {
    fn attend(&self, z: &LatentVideo) -> Result<LatentVideo> {
        Ok(z.clone())
    }
}

impl<F> AttentionHook for F
where
    F: Fn(&LatentVideo) -> Result<LatentVideo> + Send + Sync,
{
    fn attend(&self, z: &LatentVideo) -> Result<LatentVideo> {
        self(z)
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::param(
            "gamma",
            format!("must be in [0, 1], got {gamma}"),
        ));
    }
    Ok(())
}

/// `attended + γ z + (1 - γ) refined`, the blend with an already computed
/// refinement term (GPR output, or the fused bidirectional latent).
pub fn blend_refined(
    z: &LatentVideo,
    attended: &LatentVideo,
    gamma: f64,
    refined: &LatentVideo,
) -> Result<LatentVideo> {
    check_gamma(gamma)?;
    z.ensure_same_shape(attended)?;
    z.ensure_same_shape(refined)?;
    let data = attended
        .data()
        .iter()
        .zip(z.data())
        .zip(refined.data())
        .map(|((a, x), g)| a + gamma * x + (1.0 - gamma) * g)
        .collect();
    LatentVideo::with_data_of(z, data)
}

/// `Attention(z) + γ z + (1 - γ) GPR(z)`.
pub fn attention_blend(
    z: &LatentVideo,
    attn: &dyn AttentionHook,
    gamma: f64,
    kernel: &RbfKernel,
    noise_variance: f64,
) -> Result<LatentVideo> {
    check_gamma(gamma)?;
    let attended = attn.attend(z)?;
    let smoothed = gpr_smooth(z, kernel, noise_variance)?;
    blend_refined(z, &attended, gamma, &smoothed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn frame(n: usize, p: usize, rng: &mut SeededRng) -> Frame {
        Frame::new(n, p, rng.normals(n * p)).unwrap()
    }

    fn unit() -> RbfKernel {
        RbfKernel::with_length_scale(1.0).unwrap()
    }

    /// Dense Gaussian elimination with partial pivoting; test oracle only.
    fn dense_solve(a: &[f64], b: &[f64], n: usize, cols: usize) -> Vec<f64> {
        let ma = nalgebra::DMatrix::from_row_slice(n, n, a);
        let mb = nalgebra::DMatrix::from_row_slice(n, cols, b);
        let x = ma.lu().solve(&mb).expect("nonsingular");
        let mut out = Vec::with_capacity(n * cols);
        for i in 0..n {
            for c in 0..cols {
                out.push(x[(i, c)]);
            }
        }
        out
    }

    #[test]
    fn rbf_values() {
        let k = unit();
        assert_eq!(rbf(&[0.3, -2.0], &[0.3, -2.0], &k).unwrap(), 1.0);
        let v = rbf(&[0.0], &[1.0], &k).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.60653).abs() < 1e-5);
        let sv = RbfKernel::new(2.0, 3.5).unwrap();
        assert_eq!(rbf(&[1.0, 2.0], &[1.0, 2.0], &sv).unwrap(), 3.5);
    }

    #[test]
    fn rbf_symmetric() {
        let mut rng = SeededRng::new(3);
        let k = RbfKernel::new(0.7, 1.3).unwrap();
        for _ in 0..50 {
            let a = rng.normals(4);
            let b = rng.normals(4);
            assert_eq!(rbf(&a, &b, &k).unwrap(), rbf(&b, &a, &k).unwrap());
        }
    }

    #[test]
    fn rbf_dimension_mismatch() {
        assert!(matches!(
            rbf(&[0.0], &[0.0, 1.0], &unit()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn kernel_rejects_nonpositive_length_scale() {
        assert!(RbfKernel::with_length_scale(0.0).is_err());
        assert!(RbfKernel::with_length_scale(-1.0).is_err());
        assert!(RbfKernel::new(1.0, 0.0).is_err());
    }

    #[test]
    fn fit_one_by_one() {
        let x = Frame::new(1, 1, vec![0.0]).unwrap();
        let y = Frame::new(1, 1, vec![5.0]).unwrap();
        let model = fit(&x, &y, &unit(), 0.0).unwrap();
        assert_eq!(model.weights(), &[5.0]);
        assert_eq!(model.jitter(), 0.0);
        let q = Frame::new(1, 1, vec![1.0]).unwrap();
        let mean = model.predict_mean(&q).unwrap();
        assert!((mean.data()[0] - 5.0 * (-0.5f64).exp()).abs() < 1e-14);
        assert!((mean.data()[0] - 3.03265).abs() < 1e-5);
    }

    #[test]
    fn weights_match_direct_solve() {
        let mut rng = SeededRng::new(11);
        let x = frame(3, 2, &mut rng);
        let y = frame(3, 2, &mut rng);
        let model = fit(&x, &y, &unit(), 0.1).unwrap();
        let mut k = unit().cross_gram(&x, &x);
        for i in 0..3 {
            k[i * 3 + i] += 0.1;
        }
        let direct = dense_solve(&k, y.data(), 3, 2);
        let num: f64 = model
            .weights()
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let den: f64 = direct.iter().map(|b| b * b).sum();
        assert!((num / den).sqrt() < 1e-9);
    }

    #[test]
    fn factor_and_weights_satisfy_invariants() {
        let mut rng = SeededRng::new(12);
        let x = frame(6, 3, &mut rng);
        let y = frame(6, 3, &mut rng);
        let model = fit(&x, &y, &RbfKernel::with_length_scale(1.4).unwrap(), 1e-4).unwrap();
        let a = model.regularized_gram();
        let l = model.factor();
        let n = 6;
        let mut err = 0.0;
        let mut norm = 0.0;
        for i in 0..n {
            for j in 0..n {
                let llt: f64 = (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum();
                err += (llt - a[i * n + j]).powi(2);
                norm += a[i * n + j].powi(2);
            }
        }
        assert!((err / norm).sqrt() < 1e-8);

        let w = model.weights();
        let mut res = 0.0;
        for i in 0..n {
            for c in 0..3 {
                let aw: f64 = (0..n).map(|k| a[i * n + k] * w[k * 3 + c]).sum();
                res += (aw - y.data()[i * 3 + c]).powi(2);
            }
        }
        let ynorm: f64 = y.data().iter().map(|v| v * v).sum();
        assert!((res / ynorm).sqrt() < 1e-8);
    }

    #[test]
    fn duplicate_inputs_need_jitter() {
        let x = Frame::new(3, 1, vec![0.5, 0.5, -1.0]).unwrap();
        let y = Frame::new(3, 1, vec![1.0, 1.0, 2.0]).unwrap();
        let model = fit(&x, &y, &unit(), 0.0).unwrap();
        assert!(model.jitter() > 0.0);
        let mean = model.predict_mean(&x).unwrap();
        for (m, t) in mean.data().iter().zip(y.data()) {
            assert!((m - t).abs() < 1e-3, "{m} vs {t}");
        }
    }

    #[test]
    fn noiseless_interpolates_training_points() {
        let mut rng = SeededRng::new(5);
        let x = frame(5, 2, &mut rng);
        let y = frame(5, 2, &mut rng);
        let model = fit(&x, &y, &unit(), 0.0).unwrap();
        let mean = model.predict_mean(&x).unwrap();
        let err: f64 = mean
            .data()
            .iter()
            .zip(y.data())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let norm: f64 = y.data().iter().map(|b| b * b).sum();
        assert!((err / norm).sqrt() < 1e-6);
    }

    #[test]
    fn distant_query_reverts_to_prior() {
        let mut rng = SeededRng::new(6);
        let x = frame(4, 2, &mut rng);
        let y = frame(4, 2, &mut rng);
        let model = fit(&x, &y, &unit(), 1e-4).unwrap();
        let far = Frame::new(1, 2, vec![1e3, -1e3]).unwrap();
        let mean = model.predict_mean(&far).unwrap();
        let ynorm: f64 = y.data().iter().map(|b| b * b).sum::<f64>().sqrt();
        let mnorm: f64 = mean.data().iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(mnorm < 1e-6 * ynorm);
        let var = model.predict_cov_diag(&far).unwrap();
        assert!((var[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn no_uncertainty_at_training_points() {
        let mut rng = SeededRng::new(7);
        let x = frame(5, 3, &mut rng);
        let y = frame(5, 3, &mut rng);
        let model = fit(&x, &y, &unit(), 0.0).unwrap();
        for v in model.predict_cov_diag(&x).unwrap() {
            assert!((0.0..=1e-8).contains(&v), "{v}");
        }
    }

    #[test]
    fn cov_diag_two_point_oracle() {
        // Closed form for N = 2: Σ = k** - kᵀ A⁻¹ k with an explicit 2x2 inverse.
        let x = Frame::new(2, 1, vec![0.0, 0.8]).unwrap();
        let y = Frame::new(2, 1, vec![1.0, -1.0]).unwrap();
        let kern = RbfKernel::new(0.9, 1.7).unwrap();
        let s2 = 0.05;
        let model = fit(&x, &y, &kern, s2).unwrap();
        let q = Frame::new(3, 1, vec![0.3, -0.4, 2.0]).unwrap();
        let got = model.predict_cov_diag(&q).unwrap();
        let k = |a: f64, b: f64| 1.7 * (-(a - b) * (a - b) / (2.0 * 0.81)).exp();
        let (a11, a12, a22) = (k(0.0, 0.0) + s2, k(0.0, 0.8), k(0.8, 0.8) + s2);
        let det = a11 * a22 - a12 * a12;
        for (i, &xq) in [0.3, -0.4, 2.0].iter().enumerate() {
            let (k1, k2) = (k(xq, 0.0), k(xq, 0.8));
            let quad = (a22 * k1 * k1 - 2.0 * a12 * k1 * k2 + a11 * k2 * k2) / det;
            let expected = k(xq, xq) - quad;
            assert!((got[i] - expected).abs() < 1e-9 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn channel_mismatch_rejected() {
        let x = Frame::new(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let model = fit(&x, &x, &unit(), 0.0).unwrap();
        let q = Frame::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            model.predict_mean(&q),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            model.predict_cov_diag(&q),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn single_point_shrinks_with_noise() {
        let x = Frame::new(1, 1, vec![0.0]).unwrap();
        let y = Frame::new(1, 1, vec![2.0]).unwrap();
        let q = Frame::new(1, 1, vec![0.4]).unwrap();
        let mut prev = f64::INFINITY;
        for s2 in [0.0, 1e-3, 0.1, 1.0, 10.0] {
            let m = fit(&x, &y, &unit(), s2)
                .unwrap()
                .predict_mean(&q)
                .unwrap()
                .data()[0];
            let kq = (-0.08f64).exp();
            assert!((m - kq * 2.0 / (1.0 + s2)).abs() < 1e-12);
            assert!(m.abs() <= prev);
            prev = m.abs();
        }
    }

    #[test]
    fn smooth_passes_two_frames_through() {
        let z = LatentVideo::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(gpr_smooth(&z, &unit(), 1e-4).unwrap(), z);
    }

    #[test]
    fn smooth_keeps_endpoints_bit_exact() {
        let mut rng = SeededRng::new(9);
        let z = LatentVideo::new(5, 4, 2, rng.normals(40)).unwrap();
        let out = gpr_smooth(&z, &unit(), 1e-4).unwrap();
        assert_eq!(out.first_frame(), z.first_frame());
        assert_eq!(out.last_frame(), z.last_frame());
        assert_ne!(out.frame(2), z.frame(2));
    }

    #[test]
    fn smooth_identical_frames_is_fixed_point() {
        let f = Frame::new(3, 2, vec![0.0, 1.0, 2.0, -1.0, 0.5, 0.5]).unwrap();
        let z = LatentVideo::from_frames(&[f.clone(), f.clone(), f.clone(), f]).unwrap();
        let out = gpr_smooth(&z, &unit(), 0.0).unwrap();
        for (a, b) in out.data().iter().zip(z.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn median_heuristic() {
        let pts = Frame::new(3, 1, vec![0.0, 1.0, 3.0]).unwrap();
        // pair distances 1, 3, 2
        assert_eq!(median_pairwise_distance(&pts), 2.0);
        let dup = Frame::new(3, 1, vec![4.0, 4.0, 4.0]).unwrap();
        assert_eq!(median_pairwise_distance(&dup), 1.0);
        let single = Frame::new(1, 2, vec![4.0, 1.0]).unwrap();
        assert_eq!(median_pairwise_distance(&single), 1.0);
    }

    #[test]
    fn blend_collapses_at_gamma_bounds() {
        let mut rng = SeededRng::new(10);
        let z = LatentVideo::new(4, 3, 2, rng.normals(24)).unwrap();
        let k = unit();
        assert_eq!(
            attention_blend(&z, &ZeroAttention, 1.0, &k, 1e-4).unwrap(),
            z
        );
        let g = gpr_smooth(&z, &k, 1e-4).unwrap();
        assert_eq!(
            attention_blend(&z, &ZeroAttention, 0.0, &k, 1e-4).unwrap(),
            g
        );
    }

    #[test]
    fn blend_with_identity_attention() {
        let mut rng = SeededRng::new(13);
        let z = LatentVideo::new(4, 3, 2, rng.normals(24)).unwrap();
        let k = unit();
        let out = attention_blend(&z, &IdentityAttention, 0.9, &k, 1e-4).unwrap();
        let g = gpr_smooth(&z, &k, 1e-4).unwrap();
        for ((o, x), gi) in out.data().iter().zip(z.data()).zip(g.data()) {
            assert!((o - (x + 0.9 * x + 0.1 * gi)).abs() < 1e-14);
        }
    }

    #[test]
    fn blend_is_linear_in_attention_output() {
        let mut rng = SeededRng::new(14);
        let z = LatentVideo::new(3, 2, 2, rng.normals(12)).unwrap();
        let k = unit();
        let base = attention_blend(&z, &ZeroAttention, 0.5, &k, 1e-4).unwrap();
        let once = attention_blend(&z, &IdentityAttention, 0.5, &k, 1e-4).unwrap();
        let twice_attn = |v: &LatentVideo| v.scale(2.0);
        let twice = attention_blend(&z, &twice_attn, 0.5, &k, 1e-4).unwrap();
        for ((b, o), t) in base.data().iter().zip(once.data()).zip(twice.data()) {
            assert!(((t - b) - 2.0 * (o - b)).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_out_of_range() {
        let z = LatentVideo::zeros(3, 1, 1).unwrap();
        for g in [-0.1, 1.1, f64::NAN] {
            assert!(matches!(
                attention_blend(&z, &ZeroAttention, g, &unit(), 0.0),
                Err(Error::InvalidParameter { name: "gamma", .. })
            ));
        }
    }
}
