//! Radial profiles f : [0,∞) → ℝ.
//!
//! Profiles drive radial Hamiltonians H = f(F*) and the capacity
//! computations' exhausting sequences. They come in three shapes: smoothed
//! convex-cornered polylines (corner list + smoothing radius, C² by a quintic
//! blend of f′ across each corner window), pure powers a·ρᵏ, and a base
//! profile made linear with a prescribed slope past its first attainment
//! point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    bisect_first_true, smoothstep, smoothstep_d1, smoothstep_d2, smoothstep_int,
};

/// Scalar profile with value and two derivatives everywhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadialProfile {
    Polyline(SmoothedPolyline),
    Power { coeff: f64, exponent: f64 },
    Linearized(Linearized),
}

/// Piecewise-linear graph through `corners` (ρ strictly increasing, first at
/// ρ = 0), continuing with `final_slope`, with f′ blended by a quintic
/// smoothstep over a window of half-width ≤ `smoothing` at each corner.
/// Windows are clipped to half the adjacent segment lengths so they never
/// overlap; outside the windows the profile equals the polyline exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothedPolyline {
    pub corners: Vec<(f64, f64)>,
    pub final_slope: f64,
    pub smoothing: f64,
}

/// `base` followed until the first point r with base′(r) = slope, then linear
/// with that slope; C² blend of f′ on [r−window, r+window].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Linearized {
    pub base: Box<RadialProfile>,
    pub radius: f64,
    pub slope: f64,
    pub window: f64,
}

impl SmoothedPolyline {
    fn validate(&self) -> Result<()> {
        if self.corners.is_empty() {
            return Err(Error::domain("polyline profile needs at least one corner"));
        }
        if self.corners[0].0 != 0.0 {
            return Err(Error::domain("polyline profile must start at ρ = 0"));
        }
        if self.corners.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::domain("polyline corners must be strictly increasing in ρ"));
        }
        if !(self.smoothing >= 0.0) {
            return Err(Error::domain("smoothing radius must be nonnegative"));
        }
        Ok(())
    }

    /// Slope of segment i (the one starting at corner i); i = len−1 gives the
    /// final slope.
    fn slope(&self, i: usize) -> f64 {
        if i + 1 < self.corners.len() {
            (self.corners[i + 1].1 - self.corners[i].1)
                / (self.corners[i + 1].0 - self.corners[i].0)
        } else {
            self.final_slope
        }
    }

    /// Blend half-width at interior corner j ≥ 1.
    fn window(&self, j: usize) -> f64 {
        let left = 0.5 * (self.corners[j].0 - self.corners[j - 1].0);
        let right = if j + 1 < self.corners.len() {
            0.5 * (self.corners[j + 1].0 - self.corners[j].0)
        } else {
            f64::INFINITY
        };
        self.smoothing.min(left).min(right)
    }

    fn polyline_value(&self, t: f64) -> f64 {
        let k = self.corners.len();
        let mut i = 0;
        while i + 1 < k && self.corners[i + 1].0 <= t {
            i += 1;
        }
        self.corners[i].1 + self.slope(i) * (t - self.corners[i].0)
    }

    /// (value, f′, f″)
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        for j in 1..self.corners.len() {
            let w = self.window(j);
            let rc = self.corners[j].0;
            if w > 0.0 && (t - rc).abs() <= w {
                let s1 = self.slope(j - 1);
                let s2 = self.slope(j);
                let u = (t - (rc - w)) / (2.0 * w);
                let f_left = self.corners[j].1 - w * s1;
                let val = f_left + s1 * (t - (rc - w)) + (s2 - s1) * 2.0 * w * smoothstep_int(u);
                let d1 = s1 + (s2 - s1) * smoothstep(u);
                let d2 = (s2 - s1) * smoothstep_d1(u) / (2.0 * w);
                return (val, d1, d2);
            }
        }
        // outside all corner windows the profile is the polyline
        let k = self.corners.len();
        let mut i = 0;
        while i + 1 < k && self.corners[i + 1].0 <= t {
            i += 1;
        }
        let s = self.slope(i);
        (self.corners[i].1 + s * (t - self.corners[i].0), s, 0.0)
    }

    fn slopes_nondecreasing(&self) -> bool {
        (1..self.corners.len()).all(|j| self.slope(j) >= self.slope(j - 1) - 1e-14)
    }

    /// First t with f′(t) = λ, scanning segments and corner windows in order.
    fn first_slope_point(&self, lambda: f64) -> Option<f64> {
        let k = self.corners.len();
        let close = |s: f64| (s - lambda).abs() <= 1e-14 * (1.0 + lambda.abs());
        for j in 0..k {
            // segment piece before corner j+1's window (or to infinity)
            let seg_start = if j == 0 {
                0.0
            } else {
                self.corners[j].0 + self.window(j)
            };
            if close(self.slope(j)) {
                return Some(seg_start.max(if j == 0 { 0.0 } else { seg_start }));
            }
            if j + 1 < k {
                let w = self.window(j + 1);
                let rc = self.corners[j + 1].0;
                let s1 = self.slope(j);
                let s2 = self.slope(j + 1);
                if w > 0.0 && (s1 - lambda) * (s2 - lambda) < 0.0 {
                    let target = (lambda - s1) / (s2 - s1);
                    let u = bisect_first_true(0.0, 1.0, 80, |u| smoothstep(u) >= target);
                    return Some(rc - w + 2.0 * w * u);
                }
                if w == 0.0 && (s1 - lambda) * (s2 - lambda) < 0.0 {
                    return Some(rc); // sharp corner jumps across λ
                }
            }
        }
        None
    }
}

impl RadialProfile {
    /// Convex plateau profile: f ≡ value on [0, ε_f), then rises with the
    /// given slope; C² by corner smoothing.
    pub fn plateau_then_slope(value: f64, eps_f: f64, slope: f64, smoothing: f64) -> Result<Self> {
        if !(eps_f > 0.0) {
            return Err(Error::domain("plateau width must be positive"));
        }
        let p = SmoothedPolyline {
            corners: vec![(0.0, value), (eps_f, value)],
            final_slope: slope,
            smoothing: smoothing.min(0.5 * eps_f),
        };
        p.validate()?;
        Ok(RadialProfile::Polyline(p))
    }

    pub fn polyline(corners: Vec<(f64, f64)>, final_slope: f64, smoothing: f64) -> Result<Self> {
        let p = SmoothedPolyline {
            corners,
            final_slope,
            smoothing,
        };
        p.validate()?;
        Ok(RadialProfile::Polyline(p))
    }

    pub fn power(coeff: f64, exponent: f64) -> Result<Self> {
        if !(coeff > 0.0) || !(exponent >= 1.0) {
            return Err(Error::domain("power profile needs coeff > 0 and exponent ≥ 1"));
        }
        Ok(RadialProfile::Power { coeff, exponent })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RadialProfile::Polyline(p) => p.validate(),
            RadialProfile::Power { coeff, exponent } => {
                if !(*coeff > 0.0) || !(*exponent >= 1.0) {
                    return Err(Error::domain("power profile needs coeff > 0 and exponent ≥ 1"));
                }
                Ok(())
            }
            RadialProfile::Linearized(l) => l.base.validate(),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn d1(&self, t: f64) -> f64 {
        self.eval(t).1
    }

    pub fn d2(&self, t: f64) -> f64 {
        self.eval(t).2
    }

    /// (f, f′, f″) at t ≥ 0.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        match self {
            RadialProfile::Polyline(p) => p.eval(t),
            RadialProfile::Power { coeff, exponent } => {
                let k = *exponent;
                let v = coeff * t.powf(k);
                let d1 = coeff * k * t.powf(k - 1.0);
                let d2 = if k >= 2.0 {
                    coeff * k * (k - 1.0) * t.powf(k - 2.0)
                } else if t > 0.0 {
                    coeff * k * (k - 1.0) * t.powf(k - 2.0)
                } else {
                    0.0
                };
                (v, d1, d2)
            }
            RadialProfile::Linearized(l) => l.eval(t),
        }
    }

    /// h′(s) for the square-composed form h(s) = f(√s): equals f′(√s)/(2√s),
    /// zero on the plateau. Smooth across s = 0 only for plateau profiles and
    /// even powers; `RadialSystem` enforces that.
    pub fn h_prime(&self, s: f64) -> f64 {
        if let RadialProfile::Power { coeff, exponent } = self {
            // h(s) = a s^{k/2}
            let half_k = exponent / 2.0;
            return coeff * half_k * s.powf(half_k - 1.0);
        }
        if s <= 0.0 {
            return 0.0;
        }
        let r = s.sqrt();
        let eps = self.plateau_width();
        if eps > 0.0 && r < eps {
            return 0.0;
        }
        self.d1(r) / (2.0 * r)
    }

    /// Largest ε with f ≡ f(0) on [0, ε); zero when there is no plateau.
    pub fn plateau_width(&self) -> f64 {
        match self {
            RadialProfile::Power { .. } => 0.0,
            RadialProfile::Polyline(p) => {
                if p.corners.len() >= 2 && p.slope(0) == 0.0 {
                    (p.corners[1].0 - p.window(1)).max(0.0)
                } else {
                    0.0
                }
            }
            RadialProfile::Linearized(l) => {
                let base = l.base.plateau_width();
                base.min((l.radius - l.window).max(0.0))
            }
        }
    }

    /// Plateau (value, width); width 0 when there is none.
    pub fn plateau(&self) -> (f64, f64) {
        (self.value(0.0), self.plateau_width())
    }

    /// Nondecreasing-slope check (convexity of the skeleton).
    pub fn is_convex(&self) -> bool {
        match self {
            RadialProfile::Polyline(p) => p.slopes_nondecreasing(),
            RadialProfile::Power { exponent, .. } => *exponent >= 1.0,
            RadialProfile::Linearized(l) => l.base.is_convex(),
        }
    }

    /// First r ≥ 0 with f′(r) = λ.
    pub fn first_slope_point(&self, lambda: f64) -> Option<f64> {
        match self {
            RadialProfile::Polyline(p) => p.first_slope_point(lambda),
            RadialProfile::Power { coeff, exponent } => {
                if !(lambda > 0.0) {
                    return None;
                }
                let k = *exponent;
                if k == 1.0 {
                    return if (lambda - coeff).abs() <= 1e-14 * coeff {
                        Some(0.0)
                    } else {
                        None
                    };
                }
                Some((lambda / (coeff * k)).powf(1.0 / (k - 1.0)))
            }
            RadialProfile::Linearized(l) => {
                // scan numerically: f′ of a linearized profile is piecewise
                // analytic but not monotone in general
                let hi = l.radius + l.window + 1.0;
                let steps = 4000;
                let close = |s: f64| (s - lambda).abs() <= 1e-13 * (1.0 + lambda.abs());
                let mut prev_t = 0.0;
                let mut prev = self.d1(0.0);
                if close(prev) {
                    return Some(0.0);
                }
                for i in 1..=steps {
                    let t = hi * i as f64 / steps as f64;
                    let cur = self.d1(t);
                    if close(cur) {
                        return Some(t);
                    }
                    if (prev - lambda) * (cur - lambda) < 0.0 {
                        let up = cur > prev;
                        let root = bisect_first_true(prev_t, t, 80, |s| {
                            if up {
                                self.d1(s) >= lambda
                            } else {
                                self.d1(s) <= lambda
                            }
                        });
                        return Some(root);
                    }
                    prev = cur;
                    prev_t = t;
                }
                None
            }
        }
    }

    /// f^{(λ)}: follow f until its slope first reaches λ (at r), then continue
    /// linearly with slope λ; C² blend on [r−w, r+w]. Returns the new profile
    /// and r. Errors when f′ never attains λ.
    pub fn linearize(&self, lambda: f64) -> Result<(RadialProfile, f64)> {
        let r = self
            .first_slope_point(lambda)
            .ok_or_else(|| Error::domain(format!("slope {lambda} is never attained by f'")))?;
        let window = if r > 0.0 {
            (0.05 * r.max(1.0)).min(0.5 * r)
        } else {
            0.05
        };
        let lin = Linearized {
            base: Box::new(self.clone()),
            radius: r,
            slope: lambda,
            window,
        };
        Ok((RadialProfile::Linearized(lin), r))
    }

    /// c_{f,λ} = r·f′(r) − f(r) at the first slope-λ point: the action bound
    /// of the λ-linearized profile. Depends only on the tangent-line
    /// intercept at r.
    pub fn action_bound(&self, lambda: f64) -> Result<f64> {
        let r = self
            .first_slope_point(lambda)
            .ok_or_else(|| Error::domain(format!("slope {lambda} is never attained by f'")))?;
        Ok(r * lambda - self.value(r))
    }
}

impl Linearized {
    /// Tangent line through (r, f(r)) with slope λ: λ·t − c_{f,λ}.
    fn tangent(&self, t: f64) -> f64 {
        self.slope * (t - self.radius) + self.base.value(self.radius)
    }

    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (r, w, lam) = (self.radius, self.window, self.slope);
        let lo = (r - w).max(0.0);
        let hi = r + w;
        if t <= lo {
            return self.base.eval(t);
        }
        if t >= hi {
            return (self.tangent(t), lam, 0.0);
        }
        // value blend toward the tangent line: f + S(u)·(T − f)
        let span = hi - lo;
        let u = (t - lo) / span;
        let (bv, bd1, bd2) = self.base.eval(t);
        let s = smoothstep(u);
        let s1 = smoothstep_d1(u) / span;
        let s2 = smoothstep_d2(u) / (span * span);
        let d = self.tangent(t) - bv;
        let d1 = lam - bd1;
        (
            bv + s * d,
            bd1 + s1 * d + s * d1,
            bd2 + s2 * d + 2.0 * s1 * d1 - s * bd2,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_linearize() {
        // f(ρ) = ρ²/2, λ = 1 → r = 1, f^{(λ)}(ρ) = ρ − ½ past the window
        let f = RadialProfile::power(0.5, 2.0).unwrap();
        let (flam, r) = f.linearize(1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        for t in [1.2, 2.0, 5.0] {
            assert!(
                (flam.value(t) - (t - 0.5)).abs() < 1e-9,
                "t={t} got {}",
                flam.value(t)
            );
            assert!((flam.d1(t) - 1.0).abs() < 1e-12);
        }
        // before the window it is still ρ²/2
        assert!((flam.value(0.5) - 0.125).abs() < 1e-12);
        // action bound c = r f'(r) − f(r) = ½
        assert!((f.action_bound(1.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn linearize_idempotent_on_matching_slope() {
        // f already linear with slope λ: f^{(λ)} = f exactly
        let f = RadialProfile::polyline(vec![(0.0, -1.0)], 2.0, 0.0).unwrap();
        let (flam, r) = f.linearize(2.0).unwrap();
        assert_eq!(r, 0.0);
        for t in [0.0, 0.3, 0.6, 1.0, 3.0] {
            assert!(
                (flam.value(t) - f.value(t)).abs() < 1e-12,
                "t={t}: {} vs {}",
                flam.value(t),
                f.value(t)
            );
            assert!((flam.d1(t) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_action_bound_reads_intercept() {
        // f(ρ) = λρ − c₀ (pure line): c_{f,λ} = c₀
        let f = RadialProfile::polyline(vec![(0.0, -2.5)], 1.5, 0.0).unwrap();
        let c = f.action_bound(1.5).unwrap();
        assert!((c - 2.5).abs() < 1e-12);
    }

    #[test]
    fn plateau_action_bound() {
        // f ≡ f(0) near 0 then slope λ from ρ₀: c = λρ₀ − f(0) (smoothing
        // shifts the tangent point inside the window by design, the bound
        // uses the first point where f′ equals λ exactly)
        let f = RadialProfile::plateau_then_slope(0.25, 1.0, 2.0, 0.0).unwrap();
        let c = f.action_bound(2.0).unwrap();
        assert!((c - (2.0 * 1.0 - 0.25)).abs() < 1e-12, "c={c}");
    }

    #[test]
    fn smoothed_profile_is_c2_and_convex() {
        let f = RadialProfile::polyline(
            vec![(0.0, -1.0), (1.0, -1.0), (2.0, 0.0)],
            3.0,
            0.2,
        )
        .unwrap();
        assert!(f.is_convex());
        // derivative consistency via finite differences across windows
        let h = 1e-6;
        for i in 0..400 {
            let t = 0.01 + i as f64 * 0.01;
            let fd1 = (f.value(t + h) - f.value(t - h)) / (2.0 * h);
            assert!((fd1 - f.d1(t)).abs() < 1e-6, "t={t}");
            let fd2 = (f.d1(t + h) - f.d1(t - h)) / (2.0 * h);
            assert!((fd2 - f.d2(t)).abs() < 1e-5, "t={t}");
        }
        // convexity of the smoothed object: f″ ≥ 0 everywhere sampled
        for i in 0..400 {
            let t = i as f64 * 0.01;
            assert!(f.d2(t) >= -1e-12, "t={t}");
        }
    }

    /// Bisection oracle on f′ locates the first slope-λ point of a paper-style
    /// piecewise profile (plateau, steep middle, flat tail).
    #[test]
    fn hk_shape_first_slope_point_matches_bisection_oracle() {
        // h_k shape: constant −m, steep rise with slope ν, horizontal at S
        let nu = 5.0;
        let f = RadialProfile::polyline(
            vec![(0.0, -1.25), (0.1, -1.25), (0.5, -1.25 + 0.4 * nu), (1.0, -1.25 + 0.4 * nu)],
            0.0,
            0.02,
        )
        .unwrap();
        let lambda = 2.0;
        let r = f.first_slope_point(lambda).unwrap();
        // oracle: bisection on f′ over the rising window
        let oracle = bisect_first_true(0.05, 0.3, 80, |t| f.d1(t) >= lambda);
        assert!((r - oracle).abs() < 1e-9, "r={r} oracle={oracle}");
        assert!(f.d1(r) - lambda < 1e-9);
    }

    #[test]
    fn unattained_slope_is_domain_error() {
        let f = RadialProfile::plateau_then_slope(0.0, 0.5, 1.0, 0.05).unwrap();
        assert!(f.linearize(2.0).is_err());
        assert!(f.action_bound(2.0).is_err());
    }

    #[test]
    fn plateau_width_and_h_prime() {
        let f = RadialProfile::plateau_then_slope(-1.0, 0.8, 1.0, 0.1).unwrap();
        let eps = f.plateau_width();
        assert!(eps > 0.6 && eps <= 0.8);
        assert_eq!(f.h_prime(0.0), 0.0);
        assert_eq!(f.h_prime(0.25 * eps * eps), 0.0);
        // power profile: h(s) = a·s for f = a r², h′ = a
        let p = RadialProfile::power(1.0, 2.0).unwrap();
        assert!((p.h_prime(0.3) - 1.0).abs() < 1e-12);
        assert!((p.h_prime(0.0) - 1.0).abs() < 1e-12);
    }
}
