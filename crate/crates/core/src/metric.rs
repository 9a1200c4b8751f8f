//! Finsler metrics on 𝕋ⁿ from convex fiber bodies.
//!
//! A metric is the translation-invariant Minkowski norm F₀(v) = h_U(v) of a
//! bounded body U with 0 interior, optionally scaled by a conformal factor:
//! F(x,v) = e^{φ(x)} F₀(v) with φ a truncated Fourier series. The co-metric
//! is F*(x,p) = e^{−φ(x)}·gauge_U(p).
//!
//! Tensor and Legendre operations need fiberwise smoothness and strong
//! convexity; those hold exactly for ellipsoidal bodies (possibly off-center,
//! which gives the smooth non-Riemannian Randers family) and are refused for
//! polytopal bodies.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bodies::ConvexBody;
use crate::error::{Error, Result};
use crate::fourier::FourierSeries;
use crate::numeric::{self, norm};

/// Default base step for finite-difference tensor derivatives; the effective
/// step is h_fd·max(1, |y|).
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Tensor and Legendre operations refuse |y| below this floor: F² is only
/// C^{1,1} across the zero section and the smoothing module owns that
/// neighborhood.
pub const ZERO_SECTION_FLOOR: f64 = 1e-6;

/// Serialization schema for a metric: `{"body": …, "phi": {"fourier": …}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSpec {
    pub body: ConvexBody,
    #[serde(default)]
    pub phi: FourierSeries,
}

/// Cached analytic data for a (possibly shifted) ellipsoid body
/// {p : (p−c)ᵀQ(p−c) ≤ 1}: F₀(v) = ⟨c,v⟩ + √(vᵀSv) with S = Q⁻¹.
#[derive(Debug, Clone)]
pub(crate) struct SmoothData {
    q: DMatrix<f64>,
    s: DMatrix<f64>,
    center: DVector<f64>,
    /// 1 − cᵀQc > 0 (origin interior).
    slack: f64,
}

impl SmoothData {
    fn sqrt_quad(&self, v: &DVector<f64>) -> f64 {
        (&self.s * v).dot(v).max(0.0).sqrt()
    }

    pub fn f0(&self, v: &[f64]) -> f64 {
        let vv = DVector::from_column_slice(v);
        self.center.dot(&vv) + self.sqrt_quad(&vv)
    }

    /// ∇F₀(v) = c + Sv/√(vᵀSv), v ≠ 0.
    pub fn grad_f0(&self, v: &[f64]) -> Vec<f64> {
        let vv = DVector::from_column_slice(v);
        let sv = &self.s * &vv;
        let sq = self.sqrt_quad(&vv);
        (&self.center + sv / sq).iter().cloned().collect()
    }

    /// ℓ₀(v) = ½∇F₀²(v) = F₀(v)·∇F₀(v); ℓ₀(0) = 0.
    pub fn l0(&self, v: &[f64]) -> Vec<f64> {
        if v.iter().all(|&x| x == 0.0) {
            return vec![0.0; v.len()];
        }
        numeric::scale(&self.grad_f0(v), self.f0(v))
    }

    /// Fundamental tensor g₀(v) = ½ Hess F₀²(v) = ∇F₀∇F₀ᵀ + F₀·Hess F₀.
    pub fn g0(&self, v: &[f64]) -> DMatrix<f64> {
        let vv = DVector::from_column_slice(v);
        let sv = &self.s * &vv;
        let sq = self.sqrt_quad(&vv);
        let grad = &self.center + &sv / sq;
        let hess_f0 = &self.s / sq - &sv * sv.transpose() / (sq * sq * sq);
        let f0 = self.center.dot(&vv) + sq;
        &grad * grad.transpose() + hess_f0 * f0
    }

    /// Co-norm F₀*(p) = gauge of the body (closed form).
    pub fn gstar(&self, p: &[f64]) -> f64 {
        let pv = DVector::from_column_slice(p);
        let qp = &self.q * &pv;
        let beta = pv.dot(&qp);
        if beta == 0.0 {
            return 0.0;
        }
        let gamma = self.center.dot(&qp);
        beta / (gamma + (gamma * gamma + beta * self.slack).sqrt())
    }

    /// ∇F₀*(p) = t·Qu/⟨Qu, p⟩ with t = F₀*(p), u = p/t − c.
    pub fn grad_gstar(&self, p: &[f64]) -> Vec<f64> {
        let t = self.gstar(p);
        let pv = DVector::from_column_slice(p);
        let u = &pv / t - &self.center;
        let qu = &self.q * u;
        let denom = qu.dot(&pv);
        (qu * (t / denom)).iter().cloned().collect()
    }

    /// ℓ₀⁻¹(p) = ½∇F₀*²(p) = F₀*(p)·∇F₀*(p); 0 at p = 0.
    pub fn l0_inverse(&self, p: &[f64]) -> Vec<f64> {
        if p.iter().all(|&x| x == 0.0) {
            return vec![0.0; p.len()];
        }
        numeric::scale(&self.grad_gstar(p), self.gstar(p))
    }
}

/// A Finsler metric F(x,v) = e^{φ(x)} h_U(v) on the torus 𝕋ⁿ.
#[derive(Debug, Clone)]
pub struct FinslerMetric {
    body: ConvexBody,
    phi: FourierSeries,
    h_fd: f64,
    dim: usize,
    smooth: Option<SmoothData>,
}

impl FinslerMetric {
    pub fn new(body: ConvexBody, phi: FourierSeries) -> Result<Self> {
        body.validate()?;
        let dim = body.dim();
        phi.validate(dim)?;
        if !body.is_bounded() {
            return Err(Error::domain(
                "metric body must be bounded (finite support in every direction)",
            ));
        }
        if !body.origin_interior() {
            return Err(Error::domain(
                "metric body must contain the origin in its interior",
            ));
        }
        let smooth = Self::resolve_smooth(&body);
        let metric = FinslerMetric {
            body,
            phi,
            h_fd: DEFAULT_FD_STEP,
            dim,
            smooth,
        };
        if let Some(sd) = &metric.smooth {
            // axiom (iii): the fundamental tensor must be positive definite
            // away from the zero section; sampled at construction.
            for v in sample_directions(dim, 64) {
                if Cholesky::new(sd.g0(&v)).is_none() {
                    return Err(Error::domain(
                        "fundamental tensor is not positive definite on sampled directions",
                    ));
                }
            }
        }
        Ok(metric)
    }

    pub fn from_spec(spec: MetricSpec) -> Result<Self> {
        Self::new(spec.body, spec.phi)
    }

    pub fn minkowski(body: ConvexBody) -> Result<Self> {
        Self::new(body, FourierSeries::zero())
    }

    pub fn to_spec(&self) -> MetricSpec {
        MetricSpec {
            body: self.body.clone(),
            phi: self.phi.clone(),
        }
    }

    fn resolve_smooth(body: &ConvexBody) -> Option<SmoothData> {
        // Walk translation wrappers, accumulating the center shift.
        let mut shift = vec![0.0; body.dim()];
        let mut inner = body;
        while let ConvexBody::Translated { inner: i, shift: s } = inner {
            shift = numeric::add(&shift, s);
            inner = i;
        }
        if let ConvexBody::Ellipsoid { q, center } = inner {
            let n = q.len();
            let qm = DMatrix::from_fn(n, n, |i, j| q[i][j]);
            let chol = Cholesky::new(qm.clone())?;
            let s = chol.inverse();
            let c0 = center.clone().unwrap_or_else(|| vec![0.0; n]);
            let c = DVector::from_vec(numeric::add(&c0, &shift));
            let slack = 1.0 - (&qm * &c).dot(&c);
            Some(SmoothData {
                q: qm,
                s,
                center: c,
                slack,
            })
        } else {
            None
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn phi(&self) -> &FourierSeries {
        &self.phi
    }

    pub fn set_fd_step(&mut self, h: f64) {
        self.h_fd = h;
    }

    /// True when tensor/Legendre operations are available (ellipsoidal base).
    pub fn is_smooth(&self) -> bool {
        self.smooth.is_some()
    }

    /// Translation-invariant (no conformal factor)?
    pub fn is_flat(&self) -> bool {
        self.phi.is_zero()
    }

    pub(crate) fn smooth_data(&self) -> Result<&SmoothData> {
        self.smooth.as_ref().ok_or_else(|| {
            Error::unsupported(format!(
                "{} base is non-smooth: tensor and Legendre operations are refused",
                self.body.kind_name()
            ))
        })
    }

    pub fn conformal(&self, x: &[f64]) -> f64 {
        if self.phi.is_zero() {
            1.0
        } else {
            self.phi.value(x).exp()
        }
    }

    /// Minkowski norm F₀(v) = h_U(v) (no conformal factor).
    pub fn norm0(&self, v: &[f64]) -> f64 {
        if v.iter().all(|&x| x == 0.0) {
            return 0.0;
        }
        match &self.smooth {
            Some(sd) => sd.f0(v),
            None => self
                .body
                .support_unchecked(v)
                .finite()
                .expect("bounded body"),
        }
    }

    /// F(x, v) = e^{φ(x)} F₀(v).
    pub fn eval(&self, x: &[f64], v: &[f64]) -> f64 {
        self.conformal(x) * self.norm0(v)
    }

    /// Co-metric F*(x, p) = e^{−φ(x)}·gauge_U(p).
    pub fn co_eval(&self, x: &[f64], p: &[f64]) -> f64 {
        self.co_norm0(p) / self.conformal(x)
    }

    pub fn co_norm0(&self, p: &[f64]) -> f64 {
        if p.iter().all(|&x| x == 0.0) {
            return 0.0;
        }
        match &self.smooth {
            Some(sd) => sd.gstar(p),
            None => self.body.gauge(p).expect("validated interior origin"),
        }
    }

    fn check_fiber_arg(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::domain("fiber vector has wrong dimension"));
        }
        if norm(y) < ZERO_SECTION_FLOOR {
            return Err(Error::domain(format!(
                "fiber argument too close to the zero section (|y| < {ZERO_SECTION_FLOOR:e})"
            )));
        }
        Ok(())
    }

    /// Fundamental tensor g(x,y) = ½ ∂²(F²)/∂y² — analytic ellipsoid path.
    pub fn fundamental_tensor(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        let sd = self.smooth_data()?;
        self.check_fiber_arg(y)?;
        let c = self.conformal(x);
        Ok(sd.g0(y) * (c * c))
    }

    /// Fundamental tensor by central finite differences of F²; the
    /// independent route used to cross-check the analytic one.
    pub fn fundamental_tensor_fd(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        self.check_fiber_arg(y)?;
        if !self.is_smooth() {
            return Err(Error::unsupported(
                "finite-difference tensor still needs a smooth base",
            ));
        }
        let h = self.h_fd * norm(y).max(1.0);
        let n = self.dim;
        let f2 = |v: &[f64]| {
            let f = self.eval(x, v);
            f * f
        };
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut vpp = y.to_vec();
                let mut vpm = y.to_vec();
                let mut vmp = y.to_vec();
                let mut vmm = y.to_vec();
                vpp[i] += h;
                vpp[j] += h;
                vpm[i] += h;
                vpm[j] -= h;
                vmp[i] -= h;
                vmp[j] += h;
                vmm[i] -= h;
                vmm[j] -= h;
                let d = (f2(&vpp) - f2(&vpm) - f2(&vmp) + f2(&vmm)) / (4.0 * h * h);
                g[(i, j)] = 0.5 * d;
                g[(j, i)] = 0.5 * d;
            }
        }
        Ok(g)
    }

    /// Legendre transform ℓ(x,v) = ½∇_v F²(x,v) = e^{2φ(x)} ℓ₀(v); ℓ(0)=0.
    pub fn legendre(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let sd = self.smooth_data()?;
        if v.iter().all(|&c| c == 0.0) {
            return Ok(vec![0.0; self.dim]);
        }
        let c = self.conformal(x);
        Ok(numeric::scale(&sd.l0(v), c * c))
    }

    /// Inverse Legendre transform ℓ*(x,p) = ℓ₀⁻¹(e^{−2φ(x)} p); ℓ*(0)=0.
    pub fn legendre_inverse(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        let sd = self.smooth_data()?;
        if p.iter().all(|&c| c == 0.0) {
            return Ok(vec![0.0; self.dim]);
        }
        let c = self.conformal(x);
        Ok(sd.l0_inverse(&numeric::scale(p, 1.0 / (c * c))))
    }

    /// Momentum selection for translation-invariant metrics on any bounded
    /// body: ℓ₀(v) = h_U(v)·argmax_{p∈U}⟨p,v⟩. Equals the Legendre transform
    /// wherever F₀² is differentiable and picks a deterministic subgradient
    /// on the non-smooth locus.
    pub fn legendre_minkowski(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.iter().all(|&c| c == 0.0) {
            return Ok(vec![0.0; self.dim]);
        }
        if let Some(sd) = &self.smooth {
            return Ok(sd.l0(v));
        }
        let h = self.body.support_unchecked(v).finite()?;
        let p = self
            .body
            .support_argmax(v)?
            .ok_or_else(|| Error::domain("support not attained"))?;
        Ok(numeric::scale(&p, h))
    }

    /// ∇φ(x) (zero for flat metrics).
    pub fn phi_gradient(&self, x: &[f64]) -> Vec<f64> {
        if self.phi.is_zero() {
            vec![0.0; self.dim]
        } else {
            self.phi.gradient(x)
        }
    }

    /// Reference inner product matrix for the smoothing module.
    pub(crate) fn reference_matrix(&self) -> Result<DMatrix<f64>> {
        Ok(self.smooth_data()?.s.clone())
    }
}

/// Deterministic direction samples on the unit sphere (axes, diagonals and a
/// quasi-random fill).
pub(crate) fn sample_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        dirs.push(e.clone());
        e[i] = -1.0;
        dirs.push(e);
    }
    let mut state = 0x853c49e6748fea9bu64;
    while dirs.len() < count {
        let mut d = vec![0.0; dim];
        for di in d.iter_mut() {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            *di = ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
        }
        let n = norm(&d);
        if n > 1e-3 {
            dirs.push(numeric::scale(&d, 1.0 / n));
        }
    }
    dirs
}

/// An N-sample closed curve on 𝕋ⁿ, lifted to ℝⁿ, with prescribed winding
/// vector α: the implicit closure is x_N = x₀ + α.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteLoop {
    samples: Vec<f64>,
    dim: usize,
    winding: Vec<i64>,
}

pub const MIN_LOOP_SAMPLES: usize = 16;

impl DiscreteLoop {
    pub fn new(samples: Vec<f64>, dim: usize, winding: Vec<i64>) -> Result<Self> {
        if dim == 0 || samples.len() % dim != 0 {
            return Err(Error::domain("sample buffer length must be a multiple of dim"));
        }
        if winding.len() != dim {
            return Err(Error::domain("winding vector has wrong dimension"));
        }
        let n = samples.len() / dim;
        if n < MIN_LOOP_SAMPLES {
            return Err(Error::domain(format!(
                "loops need at least {MIN_LOOP_SAMPLES} samples, got {n}"
            )));
        }
        Ok(DiscreteLoop {
            samples,
            dim,
            winding,
        })
    }

    /// The straight representative x(t) = base + t·α.
    pub fn straight(winding: &[i64], n: usize, base: &[f64]) -> Result<Self> {
        let dim = winding.len();
        if base.len() != dim {
            return Err(Error::domain("base point has wrong dimension"));
        }
        let mut samples = Vec::with_capacity(n * dim);
        for k in 0..n {
            let t = k as f64 / n as f64;
            for i in 0..dim {
                samples.push(base[i] + t * winding[i] as f64);
            }
        }
        Self::new(samples, dim, winding.to_vec())
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn winding(&self) -> &[i64] {
        &self.winding
    }

    pub fn is_trivial_class(&self) -> bool {
        self.winding.iter().all(|&a| a == 0)
    }

    pub fn point(&self, k: usize) -> &[f64] {
        let k = k % self.n_samples();
        &self.samples[k * self.dim..(k + 1) * self.dim]
    }

    pub fn samples_flat(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_flat_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    /// Chord x_{k+1} − x_k with the lifted wrap x_N = x₀ + α.
    pub fn chord(&self, k: usize) -> Vec<f64> {
        let n = self.n_samples();
        let a = self.point(k).to_vec();
        if k + 1 < n {
            numeric::sub(self.point(k + 1), &a)
        } else {
            let mut next = self.point(0).to_vec();
            for (ni, &w) in next.iter_mut().zip(&self.winding) {
                *ni += w as f64;
            }
            numeric::sub(&next, &a)
        }
    }

    pub fn midpoint(&self, k: usize) -> Vec<f64> {
        let c = self.chord(k);
        let p = self.point(k);
        p.iter().zip(&c).map(|(x, d)| x + 0.5 * d).collect()
    }
}

/// Midpoint-rule length Σ F(x̄_k, N·Δx_k)/N.
pub fn loop_length(metric: &FinslerMetric, lp: &DiscreteLoop) -> Result<f64> {
    per_chord_sum(metric, lp, |f| f)
}

/// Midpoint-rule energy ½ Σ F²(x̄_k, N·Δx_k)/N.
pub fn loop_energy(metric: &FinslerMetric, lp: &DiscreteLoop) -> Result<f64> {
    per_chord_sum(metric, lp, |f| 0.5 * f * f)
}

fn per_chord_sum(
    metric: &FinslerMetric,
    lp: &DiscreteLoop,
    term: impl Fn(f64) -> f64,
) -> Result<f64> {
    if lp.dim() != metric.dim() {
        return Err(Error::domain("loop and metric dimensions disagree"));
    }
    let n = lp.n_samples();
    let nf = n as f64;
    let mut acc = 0.0;
    for k in 0..n {
        let chord = lp.chord(k);
        if !lp.is_trivial_class() && norm(&chord) < 1e-14 {
            return Err(Error::DegenerateLoop(format!(
                "zero chord at sample {k} in a nontrivial class"
            )));
        }
        let mid = lp.midpoint(k);
        let speed = metric.eval(&mid, &numeric::scale(&chord, nf));
        acc += term(speed);
    }
    Ok(acc / nf)
}

/// Discrete F-speeds F(x̄_k, N·Δx_k) along the loop.
pub fn loop_speeds(metric: &FinslerMetric, lp: &DiscreteLoop) -> Vec<f64> {
    let n = lp.n_samples();
    let nf = n as f64;
    (0..n)
        .map(|k| metric.eval(&lp.midpoint(k), &numeric::scale(&lp.chord(k), nf)))
        .collect()
}

pub fn speed_variance(speeds: &[f64]) -> f64 {
    let n = speeds.len() as f64;
    let mean = speeds.iter().sum::<f64>() / n;
    speeds.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n
}
