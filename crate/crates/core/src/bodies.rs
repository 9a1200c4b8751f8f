//! Fiber convex bodies in ℝⁿ: support functions, gauges (Minkowski
//! functionals), membership, translation and unboundedness probes, plus
//! polyhedral cones with exact dual-cone enumeration.
//!
//! Bodies are immutable after construction; every query is pure.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, dot, norm};
use crate::simplex::{self, LpResult};

/// Reported "infinite" values are only ever certified as exceeding this bar
/// on a truncation ladder; numerics cannot certify ∞.
pub const CERTIFICATION_BAR: f64 = 1e6;

const MEMBERSHIP_TOL: f64 = 1e-12;
const GAUGE_BISECT_ITERS: usize = 80;

/// Extended-real support value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportValue {
    Finite(f64),
    Unbounded,
}

impl SupportValue {
    pub fn finite(self) -> Result<f64> {
        match self {
            SupportValue::Finite(v) => Ok(v),
            SupportValue::Unbounded => Err(Error::domain("support is unbounded in this direction")),
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, SupportValue::Unbounded)
    }

    pub fn or_infinity(self) -> f64 {
        match self {
            SupportValue::Finite(v) => v,
            SupportValue::Unbounded => f64::INFINITY,
        }
    }
}

/// Half-space ⟨normal, p⟩ ≤ offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// A convex body in a cotangent fiber ℝⁿ.
///
/// Serialized as `{"kind": "box"|"simplex"|"ellipsoid"|"polytope"|"slab"|"translated", ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConvexBody {
    /// Axis-aligned box ∏ᵢ(−Rᵢ, Rᵢ).
    Box { radii: Vec<f64> },
    /// Simplex with vertices 0, r·e₁, …, r·eₙ.
    Simplex { scale: f64, dim: usize },
    /// {p : (p−c)ᵀ Q (p−c) ≤ 1} with Q symmetric positive definite.
    Ellipsoid {
        q: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Convex hull of `vertices`, or intersection of `halfspaces` (exactly one
    /// of the two must be given). `witness` is a stored interior point; it is
    /// derived from the vertices when omitted.
    Polytope {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vertices: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        halfspaces: Option<Vec<Halfspace>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        witness: Option<Vec<f64>>,
    },
    /// Unbounded slab {p : |⟨p, axis⟩| < half_width} — the fiber of a tilted
    /// cylinder over the torus.
    Slab { axis: Vec<f64>, half_width: f64 },
    /// `inner` shifted by `shift` (the point set {p + shift : p ∈ inner}).
    Translated {
        inner: Box<ConvexBody>,
        shift: Vec<f64>,
    },
}

impl ConvexBody {
    pub fn ball(dim: usize, radius: f64) -> Self {
        let mut q = vec![vec![0.0; dim]; dim];
        for (i, row) in q.iter_mut().enumerate() {
            row[i] = 1.0 / (radius * radius);
        }
        ConvexBody::Ellipsoid { q, center: None }
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self::ball(dim, 1.0)
    }

    pub fn cuboid(radii: &[f64]) -> Self {
        ConvexBody::Box {
            radii: radii.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Box { radii } => radii.len(),
            ConvexBody::Simplex { dim, .. } => *dim,
            ConvexBody::Ellipsoid { q, .. } => q.len(),
            ConvexBody::Polytope {
                vertices,
                halfspaces,
                ..
            } => vertices
                .as_ref()
                .and_then(|v| v.first().map(|p| p.len()))
                .or_else(|| {
                    halfspaces
                        .as_ref()
                        .and_then(|h| h.first().map(|hs| hs.normal.len()))
                })
                .unwrap_or(0),
            ConvexBody::Slab { axis, .. } => axis.len(),
            ConvexBody::Translated { inner, .. } => inner.dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ConvexBody::Box { .. } => "box",
            ConvexBody::Simplex { .. } => "simplex",
            ConvexBody::Ellipsoid { .. } => "ellipsoid",
            ConvexBody::Polytope { .. } => "polytope",
            ConvexBody::Slab { .. } => "slab",
            ConvexBody::Translated { .. } => "translated",
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ConvexBody::Slab { .. } => false,
            ConvexBody::Translated { inner, .. } => inner.is_bounded(),
            _ => true,
        }
    }

    /// Checks the construction invariants. Every consumer of a freshly
    /// deserialized body should call this once.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::domain("body has dimension zero"));
        }
        match self {
            ConvexBody::Box { radii } => {
                if radii.iter().any(|&r| !(r > 0.0)) {
                    return Err(Error::domain("box radii must be positive"));
                }
            }
            ConvexBody::Simplex { scale, .. } => {
                if !(*scale > 0.0) {
                    return Err(Error::domain("simplex scale must be positive"));
                }
            }
            ConvexBody::Ellipsoid { q, center } => {
                if q.iter().any(|row| row.len() != n) {
                    return Err(Error::domain("ellipsoid matrix is not square"));
                }
                let m = self.ellipsoid_matrix();
                for i in 0..n {
                    for j in 0..i {
                        if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * m[(i, i)].abs().max(1.0) {
                            return Err(Error::domain("ellipsoid matrix must be symmetric"));
                        }
                    }
                }
                // SPD check: smallest eigenvalue strictly positive.
                let eig = m.clone().symmetric_eigen();
                let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
                if !(min_eig > 0.0) {
                    return Err(Error::domain(format!(
                        "ellipsoid matrix is not positive definite (min eigenvalue {min_eig:.3e})"
                    )));
                }
                if let Some(c) = center {
                    if c.len() != n {
                        return Err(Error::domain("ellipsoid center has wrong dimension"));
                    }
                }
            }
            ConvexBody::Polytope {
                vertices,
                halfspaces,
                witness,
            } => match (vertices, halfspaces) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(Error::domain(
                        "polytope needs exactly one of vertices or halfspaces",
                    ));
                }
                (Some(verts), None) => {
                    if verts.is_empty() {
                        return Err(Error::domain("vertex polytope needs at least one vertex"));
                    }
                    if verts.iter().any(|v| v.len() != n) {
                        return Err(Error::domain("vertex dimensions disagree"));
                    }
                    let w = self.interior_point()?;
                    let diffs: Vec<Vec<f64>> =
                        verts.iter().map(|v| numeric::sub(v, &w)).collect();
                    if numeric::matrix_rank(&diffs, 1e-10) < n {
                        return Err(Error::domain("vertex polytope is not full-dimensional"));
                    }
                    if let Some(wt) = witness {
                        if !self.contains(wt) {
                            return Err(Error::domain("stored witness is not inside the polytope"));
                        }
                    }
                }
                (None, Some(hs)) => {
                    if hs.is_empty() {
                        return Err(Error::domain("half-space polytope needs constraints"));
                    }
                    if hs.iter().any(|h| h.normal.len() != n || norm(&h.normal) == 0.0) {
                        return Err(Error::domain("half-space normals must be nonzero"));
                    }
                    let w = self.interior_point()?;
                    for h in hs {
                        let slack = h.offset - dot(&h.normal, &w);
                        if slack <= 1e-12 * norm(&h.normal) {
                            return Err(Error::domain(
                                "interior witness does not satisfy all half-spaces strictly",
                            ));
                        }
                    }
                }
            },
            ConvexBody::Slab { axis, half_width } => {
                if norm(axis) == 0.0 {
                    return Err(Error::domain("slab axis must be nonzero"));
                }
                if !(*half_width > 0.0) {
                    return Err(Error::domain("slab half-width must be positive"));
                }
            }
            ConvexBody::Translated { inner, shift } => {
                if shift.len() != inner.dim() {
                    return Err(Error::domain("translation shift has wrong dimension"));
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    fn ellipsoid_matrix(&self) -> DMatrix<f64> {
        match self {
            ConvexBody::Ellipsoid { q, .. } => {
                let n = q.len();
                DMatrix::from_fn(n, n, |i, j| q[i][j])
            }
            _ => unreachable!(),
        }
    }

    /// The stored interior witness point.
    pub fn interior_point(&self) -> Result<Vec<f64>> {
        let n = self.dim();
        match self {
            ConvexBody::Box { .. } | ConvexBody::Slab { .. } => Ok(vec![0.0; n]),
            ConvexBody::Simplex { scale, dim } => {
                // centroid of all n+1 vertices
                Ok(vec![scale / (*dim as f64 + 1.0); *dim])
            }
            ConvexBody::Ellipsoid { center, .. } => {
                Ok(center.clone().unwrap_or_else(|| vec![0.0; n]))
            }
            ConvexBody::Polytope {
                vertices,
                halfspaces,
                witness,
            } => {
                if let Some(w) = witness {
                    return Ok(w.clone());
                }
                if let Some(verts) = vertices {
                    let mut c = vec![0.0; n];
                    for v in verts {
                        for (ci, vi) in c.iter_mut().zip(v) {
                            *ci += vi;
                        }
                    }
                    for ci in c.iter_mut() {
                        *ci /= verts.len() as f64;
                    }
                    return Ok(c);
                }
                // Half-space polytope without a stored witness: accept the
                // origin when it is strictly feasible, otherwise demand one.
                let hs = halfspaces.as_ref().unwrap();
                if hs.iter().all(|h| h.offset > 1e-12 * norm(&h.normal)) {
                    Ok(vec![0.0; n])
                } else {
                    Err(Error::domain(
                        "half-space polytope needs an explicit interior witness",
                    ))
                }
            }
            ConvexBody::Translated { inner, shift } => {
                Ok(numeric::add(&inner.interior_point()?, shift))
            }
        }
    }

    /// Support function h(v) = sup_{p∈U} ⟨p, v⟩.
    pub fn support(&self, v: &[f64]) -> Result<SupportValue> {
        self.check_direction(v)?;
        Ok(self.support_unchecked(v))
    }

    fn check_direction(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::domain(format!(
                "direction has dimension {}, body has {}",
                v.len(),
                self.dim()
            )));
        }
        if v.iter().all(|&x| x == 0.0) {
            return Err(Error::domain("support direction must be nonzero"));
        }
        Ok(())
    }

    pub(crate) fn support_unchecked(&self, v: &[f64]) -> SupportValue {
        match self {
            ConvexBody::Box { radii } => SupportValue::Finite(
                radii.iter().zip(v).map(|(r, vi)| r * vi.abs()).sum::<f64>(),
            ),
            ConvexBody::Simplex { scale, .. } => {
                let m = v.iter().cloned().fold(0.0f64, f64::max);
                SupportValue::Finite(scale * m)
            }
            ConvexBody::Ellipsoid { center, .. } => {
                let q = self.ellipsoid_matrix();
                let vv = DVector::from_column_slice(v);
                let chol = q.cholesky().expect("validated SPD");
                let qinv_v = chol.solve(&vv);
                let quad = vv.dot(&qinv_v).max(0.0).sqrt();
                let shift = center
                    .as_ref()
                    .map(|c| dot(c, v))
                    .unwrap_or(0.0);
                SupportValue::Finite(shift + quad)
            }
            ConvexBody::Polytope {
                vertices,
                halfspaces,
                ..
            } => {
                if let Some(verts) = vertices {
                    let m = verts
                        .iter()
                        .map(|p| dot(p, v))
                        .fold(f64::NEG_INFINITY, f64::max);
                    return SupportValue::Finite(m);
                }
                let hs = halfspaces.as_ref().unwrap();
                let normals: Vec<Vec<f64>> = hs.iter().map(|h| h.normal.clone()).collect();
                let offsets: Vec<f64> = hs.iter().map(|h| h.offset).collect();
                let w = self.interior_point().expect("validated");
                match simplex::max_over_halfspaces(v, &normals, &offsets, &w) {
                    LpResult::Optimal { value, .. } => SupportValue::Finite(value),
                    _ => SupportValue::Unbounded,
                }
            }
            ConvexBody::Slab { axis, half_width } => {
                let a = numeric::scale(axis, 1.0 / norm(axis));
                let along = dot(&a, v);
                let perp = numeric::axpy(v, -along, &a);
                if norm(&perp) <= 1e-12 * norm(v) {
                    SupportValue::Finite(half_width * along.abs())
                } else {
                    SupportValue::Unbounded
                }
            }
            ConvexBody::Translated { inner, shift } => match inner.support_unchecked(v) {
                SupportValue::Finite(h) => SupportValue::Finite(h + dot(shift, v)),
                SupportValue::Unbounded => SupportValue::Unbounded,
            },
        }
    }

    /// A point of U attaining the support in direction `v` (`None` when the
    /// supremum is not attained). Ties are broken deterministically.
    pub fn support_argmax(&self, v: &[f64]) -> Result<Option<Vec<f64>>> {
        self.check_direction(v)?;
        let out = match self {
            ConvexBody::Box { radii } => Some(
                radii
                    .iter()
                    .zip(v)
                    .map(|(r, vi)| r * sign0(*vi))
                    .collect::<Vec<f64>>(),
            ),
            ConvexBody::Simplex { scale, dim } => {
                let (imax, m) = v
                    .iter()
                    .cloned()
                    .enumerate()
                    .fold((0usize, f64::NEG_INFINITY), |acc, (i, x)| {
                        if x > acc.1 {
                            (i, x)
                        } else {
                            acc
                        }
                    });
                let mut p = vec![0.0; *dim];
                if m > 0.0 {
                    p[imax] = *scale;
                }
                Some(p)
            }
            ConvexBody::Ellipsoid { center, .. } => {
                let q = self.ellipsoid_matrix();
                let vv = DVector::from_column_slice(v);
                let chol = q.cholesky().expect("validated SPD");
                let qinv_v = chol.solve(&vv);
                let quad = vv.dot(&qinv_v).max(0.0).sqrt();
                let mut p: Vec<f64> = qinv_v.iter().map(|x| x / quad).collect();
                if let Some(c) = center {
                    p = numeric::add(&p, c);
                }
                Some(p)
            }
            ConvexBody::Polytope {
                vertices,
                halfspaces,
                ..
            } => {
                if let Some(verts) = vertices {
                    let best = verts
                        .iter()
                        .max_by(|a, b| dot(a, v).partial_cmp(&dot(b, v)).unwrap())
                        .unwrap();
                    Some(best.clone())
                } else {
                    let hs = halfspaces.as_ref().unwrap();
                    let normals: Vec<Vec<f64>> = hs.iter().map(|h| h.normal.clone()).collect();
                    let offsets: Vec<f64> = hs.iter().map(|h| h.offset).collect();
                    let w = self.interior_point()?;
                    match simplex::max_over_halfspaces(v, &normals, &offsets, &w) {
                        LpResult::Optimal { x, .. } => Some(x),
                        _ => None,
                    }
                }
            }
            ConvexBody::Slab { axis, half_width } => {
                let a = numeric::scale(axis, 1.0 / norm(axis));
                let along = dot(&a, v);
                let perp = numeric::axpy(v, -along, &a);
                if norm(&perp) <= 1e-12 * norm(v) {
                    Some(numeric::scale(&a, half_width * sign0(along)))
                } else {
                    None
                }
            }
            ConvexBody::Translated { inner, shift } => inner
                .support_argmax(v)?
                .map(|p| numeric::add(&p, shift)),
        };
        Ok(out)
    }

    /// True when the origin lies strictly inside the body. Exact for
    /// closed-form representations; probe-based for vertex polytopes and
    /// translated composites.
    pub fn origin_interior(&self) -> bool {
        match self {
            ConvexBody::Box { .. } | ConvexBody::Slab { .. } => true,
            ConvexBody::Simplex { .. } => false,
            ConvexBody::Ellipsoid { center, .. } => match center {
                None => true,
                Some(c) => {
                    let qm = self.ellipsoid_matrix();
                    let cv = DVector::from_column_slice(c);
                    (qm * &cv).dot(&cv) < 1.0 - 1e-12
                }
            },
            ConvexBody::Polytope { halfspaces, .. } => {
                if let Some(hs) = halfspaces {
                    return hs
                        .iter()
                        .all(|h| h.offset > 1e-10 * norm(&h.normal).max(1.0));
                }
                self.origin_interior_by_probes()
            }
            ConvexBody::Translated { .. } => self.origin_interior_by_probes(),
        }
    }

    fn origin_interior_by_probes(&self) -> bool {
        let n = self.dim();
        let mut dirs = Vec::new();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            dirs.push(e.clone());
            e[i] = -1.0;
            dirs.push(e);
        }
        // Fixed quasi-random probes keep the check deterministic.
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..64 {
            let mut d = vec![0.0; n];
            for di in d.iter_mut() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *di = ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
            }
            if norm(&d) > 1e-3 {
                dirs.push(d);
            }
        }
        dirs.iter().all(|d| {
            self.support_unchecked(d)
                .or_infinity()
                .gt(&1e-10)
        })
    }

    /// Gauge (Minkowski functional) inf{t > 0 : p ∈ tU}. Requires the origin
    /// in the interior of the body.
    pub fn gauge(&self, p: &[f64]) -> Result<f64> {
        if p.len() != self.dim() {
            return Err(Error::domain("covector has wrong dimension"));
        }
        if !self.origin_interior() {
            return Err(Error::domain(format!(
                "gauge needs the origin interior to the body ({})",
                self.kind_name()
            )));
        }
        if p.iter().all(|&x| x == 0.0) {
            return Ok(0.0);
        }
        match self {
            ConvexBody::Box { radii } => Ok(p
                .iter()
                .zip(radii)
                .map(|(pi, r)| pi.abs() / r)
                .fold(0.0, f64::max)),
            ConvexBody::Simplex { .. } => unreachable!("origin is a vertex"),
            ConvexBody::Ellipsoid { center, .. } => {
                let q = self.ellipsoid_matrix();
                let pv = DVector::from_column_slice(p);
                let qp = &q * &pv;
                let beta = pv.dot(&qp);
                let (gamma, kappa) = match center {
                    Some(c) => {
                        let cv = DVector::from_column_slice(c);
                        (cv.dot(&qp), cv.dot(&(&q * &cv)))
                    }
                    None => (0.0, 0.0),
                };
                // positive root of β u² − 2γ u + (κ−1) = 0 with u = 1/gauge
                let disc = (gamma * gamma + beta * (1.0 - kappa)).max(0.0).sqrt();
                Ok(beta / (gamma + disc))
            }
            ConvexBody::Polytope {
                vertices,
                halfspaces,
                ..
            } => {
                if let Some(verts) = vertices {
                    return simplex::min_total_weight_combination(verts, p).ok_or_else(|| {
                        Error::numerical("gauge", "conic combination LP infeasible")
                    });
                }
                let hs = halfspaces.as_ref().unwrap();
                Ok(hs
                    .iter()
                    .map(|h| (dot(&h.normal, p) / h.offset).max(0.0))
                    .fold(0.0, f64::max))
            }
            ConvexBody::Slab { axis, half_width } => {
                let a = numeric::scale(axis, 1.0 / norm(axis));
                Ok(dot(&a, p).abs() / half_width)
            }
            ConvexBody::Translated { .. } => self.gauge_by_bisection(p),
        }
    }

    /// Representation-agnostic fallback: bisection on membership over the
    /// scaling parameter (80 iterations ≈ 1e-24 interval shrink).
    fn gauge_by_bisection(&self, p: &[f64]) -> Result<f64> {
        let inside = |t: f64| self.contains(&numeric::scale(p, 1.0 / t));
        let mut t_hi = 1.0;
        while !inside(t_hi) {
            t_hi *= 2.0;
            if t_hi > 1e18 {
                return Err(Error::numerical(
                    "gauge bisection",
                    "no finite scaling contains the point",
                ));
            }
        }
        let mut t_lo = t_hi;
        while inside(t_lo) {
            t_lo *= 0.5;
            if t_lo < 1e-18 {
                return Ok(0.0); // recession direction
            }
        }
        Ok(numeric::bisect_first_true(t_lo, t_hi, GAUGE_BISECT_ITERS, inside))
    }

    /// Membership test, closed with a 1e-12 tolerance band.
    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        match self {
            ConvexBody::Box { radii } => p
                .iter()
                .zip(radii)
                .all(|(pi, r)| pi.abs() <= r + MEMBERSHIP_TOL * r.max(1.0)),
            ConvexBody::Simplex { scale, .. } => {
                let tol = MEMBERSHIP_TOL * scale.max(1.0);
                p.iter().all(|&x| x >= -tol) && p.iter().sum::<f64>() <= scale + tol
            }
            ConvexBody::Ellipsoid { center, .. } => {
                let q = self.ellipsoid_matrix();
                let c = center.clone().unwrap_or_else(|| vec![0.0; p.len()]);
                let d = DVector::from_vec(numeric::sub(p, &c));
                (&q * &d).dot(&d) <= 1.0 + MEMBERSHIP_TOL
            }
            ConvexBody::Polytope {
                vertices,
                halfspaces,
                ..
            } => {
                if let Some(verts) = vertices {
                    simplex::in_convex_hull(verts, p)
                } else {
                    halfspaces.as_ref().unwrap().iter().all(|h| {
                        dot(&h.normal, p) <= h.offset + MEMBERSHIP_TOL * norm(&h.normal).max(1.0)
                    })
                }
            }
            ConvexBody::Slab { axis, half_width } => {
                let a = numeric::scale(axis, 1.0 / norm(axis));
                dot(&a, p).abs() <= half_width + MEMBERSHIP_TOL * half_width.max(1.0)
            }
            ConvexBody::Translated { inner, shift } => inner.contains(&numeric::sub(p, shift)),
        }
    }

    /// The body shifted so that its support drops by ⟨p*, v⟩, i.e. U − p*.
    /// Nested translations are flattened.
    pub fn translate(&self, p_star: &[f64]) -> ConvexBody {
        let neg: Vec<f64> = p_star.iter().map(|x| -x).collect();
        match self {
            ConvexBody::Translated { inner, shift } => ConvexBody::Translated {
                inner: inner.clone(),
                shift: numeric::add(shift, &neg),
            },
            other => ConvexBody::Translated {
                inner: Box::new(other.clone()),
                shift: neg,
            },
        }
    }

    /// Support of the body truncated to the centered ball of radius `rho`.
    /// A certification probe: exact for slabs, and exact for bounded bodies
    /// once `rho` exceeds their circumradius.
    pub fn truncated_support(&self, v: &[f64], rho: f64) -> Result<f64> {
        self.check_direction(v)?;
        Ok(self.truncated_support_unchecked(v, rho))
    }

    fn truncated_support_unchecked(&self, v: &[f64], rho: f64) -> f64 {
        match self {
            ConvexBody::Slab { axis, half_width } => {
                let a = numeric::scale(axis, 1.0 / norm(axis));
                let along = dot(&a, v).abs();
                let perp = norm(&numeric::axpy(v, -dot(&a, v), &a));
                let r = *half_width;
                if rho <= r {
                    rho * norm(v)
                } else {
                    let t_star = rho * along / norm(v);
                    if t_star <= r {
                        rho * norm(v)
                    } else {
                        r * along + (rho * rho - r * r).sqrt() * perp
                    }
                }
            }
            ConvexBody::Translated { inner, shift } => {
                inner.truncated_support_unchecked(v, rho) + dot(shift, v)
            }
            _ => match self.support_unchecked(v) {
                SupportValue::Finite(h) => h.min(rho * norm(v)),
                SupportValue::Unbounded => rho * norm(v),
            },
        }
    }

    /// Probes the support along an increasing radius ladder and reports
    /// whether it exceeds the certification bar at the largest radius. This
    /// is evidence, never a proof of infinity.
    pub fn unbounded_along(&self, v: &[f64], ladder: &[f64]) -> Result<UnboundedReport> {
        self.check_direction(v)?;
        if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("probe ladder must be strictly increasing"));
        }
        if *ladder.last().unwrap() < CERTIFICATION_BAR {
            return Err(Error::domain(format!(
                "probe ladder must reach at least {CERTIFICATION_BAR:.0e}"
            )));
        }
        let probes: Vec<(f64, f64)> = ladder
            .iter()
            .map(|&rho| (rho, self.truncated_support_unchecked(v, rho)))
            .collect();
        let exceeds = probes.last().unwrap().1 > CERTIFICATION_BAR;
        Ok(UnboundedReport {
            exceeds_threshold: exceeds,
            bar: CERTIFICATION_BAR,
            probes,
        })
    }

    pub fn default_ladder() -> Vec<f64> {
        vec![1e2, 1e4, 1e6, 1e7]
    }

    /// Explicit vertex list where the representation has one (boxes unfold to
    /// their 2ⁿ corners).
    pub fn vertex_list(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            ConvexBody::Box { radii } => {
                let n = radii.len();
                let mut out = Vec::with_capacity(1 << n);
                for mask in 0..(1usize << n) {
                    out.push(
                        (0..n)
                            .map(|i| if mask & (1 << i) != 0 { radii[i] } else { -radii[i] })
                            .collect(),
                    );
                }
                Some(out)
            }
            ConvexBody::Simplex { scale, dim } => {
                let mut out = vec![vec![0.0; *dim]];
                for i in 0..*dim {
                    let mut v = vec![0.0; *dim];
                    v[i] = *scale;
                    out.push(v);
                }
                Some(out)
            }
            ConvexBody::Polytope { vertices, .. } => vertices.clone(),
            ConvexBody::Translated { inner, shift } => inner
                .vertex_list()
                .map(|vs| vs.iter().map(|v| numeric::add(v, shift)).collect()),
            _ => None,
        }
    }
}

fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Evidence record for an unboundedness probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnboundedReport {
    pub exceeds_threshold: bool,
    pub bar: f64,
    pub probes: Vec<(f64, f64)>,
}

/// Polyhedral cone given by generators (conic hull). An empty generator list
/// represents the zero cone {0}; that case only arises as an honest dual of a
/// full cone.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cone {
    pub dim: usize,
    pub generators: Vec<Vec<f64>>,
}

impl Cone {
    pub fn new(dim: usize, generators: Vec<Vec<f64>>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::domain("cone needs at least one generator"));
        }
        if generators.iter().any(|g| g.len() != dim || norm(g) == 0.0) {
            return Err(Error::domain("cone generators must be nonzero of equal dimension"));
        }
        Ok(Cone { dim, generators })
    }

    pub fn first_orthant(dim: usize) -> Self {
        let mut generators = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            generators.push(e);
        }
        Cone { dim, generators }
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        if v.len() != self.dim {
            return false;
        }
        if v.iter().all(|&x| x == 0.0) {
            return true;
        }
        if self.generators.is_empty() {
            return false;
        }
        simplex::in_conic_hull(&self.generators, v)
    }

    /// Strict interior membership of the dual cone: ⟨w, g⟩ > 0 on every
    /// generator of this cone.
    pub fn dual_interior_contains(&self, w: &[f64]) -> bool {
        w.len() == self.dim
            && !self.generators.is_empty()
            && self
                .generators
                .iter()
                .all(|g| dot(g, w) > 1e-12 * norm(g) * norm(w).max(1e-300))
    }

    /// Dual cone {w : ⟨w, v⟩ ≥ 0 for all v in the cone}, as an explicit
    /// generator list: extreme rays of the pointed part plus ± a basis of the
    /// lineality space. Dimensions ≤ 8 only (subset enumeration).
    pub fn dual(&self) -> Result<Cone> {
        if self.dim > 8 {
            return Err(Error::domain("dual-cone enumeration budget is n ≤ 8"));
        }
        let n = self.dim;
        // Dual cone is {w : Gw ≥ 0} with rows the primal generators.
        let g: Vec<Vec<f64>> = self.generators.clone();
        let (lineality, rowspace) = numeric::nullspace_and_rowspace(&g, 1e-10);
        let d = rowspace.len();
        let mut gens: Vec<Vec<f64>> = Vec::new();
        for l in &lineality {
            gens.push(l.clone());
            gens.push(numeric::scale(l, -1.0));
        }
        if d == 1 {
            // One essential direction: ray along ±rowspace[0] where feasible.
            let u = &rowspace[0];
            let pos = g.iter().all(|gi| dot(gi, u) >= -1e-10);
            let negv = numeric::scale(u, -1.0);
            let neg = g.iter().all(|gi| dot(gi, &negv) >= -1e-10);
            if pos {
                gens.push(u.clone());
            }
            if neg {
                gens.push(negv);
            }
        } else if d >= 2 {
            // Project constraints onto the essential subspace and enumerate
            // extreme rays: null directions of (d−1)-subsets of rows.
            let gp: Vec<Vec<f64>> = g
                .iter()
                .map(|gi| rowspace.iter().map(|b| dot(gi, b)).collect())
                .collect();
            let m = gp.len();
            let mut rays: Vec<Vec<f64>> = Vec::new();
            numeric::for_each_combination(m, d - 1, |subset| {
                let sub: Vec<Vec<f64>> = subset.iter().map(|&i| gp[i].clone()).collect();
                let (null, _) = numeric::nullspace_and_rowspace(&sub, 1e-10);
                if null.len() != 1 {
                    return;
                }
                let u = &null[0];
                for cand in [u.clone(), numeric::scale(u, -1.0)] {
                    if gp.iter().all(|gi| dot(gi, &cand) >= -1e-9) {
                        let already = rays
                            .iter()
                            .any(|r| numeric::dist(r, &cand) < 1e-8);
                        if !already {
                            rays.push(cand);
                        }
                    }
                }
            });
            for u in rays {
                let mut w = vec![0.0; n];
                for (ui, b) in u.iter().zip(&rowspace) {
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi += ui * bi;
                    }
                }
                gens.push(w);
            }
        }
        Ok(Cone {
            dim: n,
            generators: gens,
        })
    }
}
