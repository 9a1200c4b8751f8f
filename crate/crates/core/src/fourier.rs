//! Truncated Fourier series on 𝕋ⁿ = ℝⁿ/ℤⁿ: smooth ℤⁿ-periodic scalar fields
//! with analytic gradients, plus one-forms given componentwise.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// φ(x) = Σ aₖ cos(2π⟨k,x⟩) + bₖ sin(2π⟨k,x⟩) over integer wave vectors k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FourierSeries {
    /// Terms (k, cos-coeff, sin-coeff).
    pub fourier: Vec<(Vec<i64>, f64, f64)>,
}

impl FourierSeries {
    pub fn zero() -> Self {
        Self { fourier: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            fourier: vec![(vec![], c, 0.0)],
        }
    }

    /// Single cosine mode a·cos(2π⟨k,x⟩).
    pub fn cosine(k: Vec<i64>, a: f64) -> Self {
        Self {
            fourier: vec![(k, a, 0.0)],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.fourier.iter().all(|(_, a, b)| *a == 0.0 && *b == 0.0)
    }

    fn phase(k: &[i64], x: &[f64]) -> f64 {
        TAU * k
            .iter()
            .zip(x)
            .map(|(&ki, &xi)| ki as f64 * xi)
            .sum::<f64>()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.fourier
            .iter()
            .map(|(k, a, b)| {
                let th = Self::phase(k, x);
                a * th.cos() + b * th.sin()
            })
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (k, a, b) in &self.fourier {
            let th = Self::phase(k, x);
            let d = -a * th.sin() + b * th.cos();
            for (gi, &ki) in g.iter_mut().zip(k.iter()) {
                *gi += TAU * ki as f64 * d;
            }
        }
        g
    }

    /// Range estimate by dense grid sampling (per-axis resolution `res`).
    pub fn range_on_grid(&self, dim: usize, res: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut x = vec![0.0; dim];
        let total = res.pow(dim as u32);
        for idx in 0..total {
            let mut r = idx;
            for xi in x.iter_mut() {
                *xi = (r % res) as f64 / res as f64;
                r /= res;
            }
            let v = self.value(&x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        for (k, _, _) in &self.fourier {
            if !k.is_empty() && k.len() != dim {
                return Err(Error::domain(format!(
                    "fourier wave vector has length {}, expected {dim}",
                    k.len()
                )));
            }
        }
        Ok(())
    }
}

/// Periodic one-form σ = Σ σᵢ dxᵢ with Fourier components; optionally carries
/// the primitive S when σ = dS (exact case).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneForm {
    pub components: Vec<FourierSeries>,
    /// Constant covector part (e.g. a fiber translation p*).
    #[serde(default)]
    pub constant: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive: Option<FourierSeries>,
}

impl OneForm {
    pub fn zero(dim: usize) -> Self {
        Self {
            components: vec![FourierSeries::zero(); dim],
            constant: vec![0.0; dim],
            primitive: None,
        }
    }

    pub fn constant_form(p_star: Vec<f64>) -> Self {
        Self {
            components: vec![FourierSeries::zero(); p_star.len()],
            constant: p_star,
            primitive: None,
        }
    }

    /// σ = dS for a periodic potential S.
    pub fn exact(dim: usize, potential: FourierSeries) -> Result<Self> {
        potential.validate(dim)?;
        // Components are read off analytically per mode: d(a cos + b sin) has
        // i-th component 2πkᵢ(−a sin + b cos).
        let mut components = vec![FourierSeries::zero(); dim];
        for (k, a, b) in &potential.fourier {
            if k.is_empty() {
                continue;
            }
            for i in 0..dim {
                let f = TAU * k[i] as f64;
                if f != 0.0 {
                    components[i].fourier.push((k.clone(), f * *b, -f * *a));
                }
            }
        }
        Ok(Self {
            components,
            constant: vec![0.0; dim],
            primitive: Some(potential),
        })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .zip(&self.constant)
            .map(|(c, k)| c.value(x) + k)
            .collect()
    }

    /// Jacobian ∂σᵢ/∂xⱼ (analytic).
    pub fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.components.iter().map(|c| c.gradient(x)).collect()
    }

    /// Max over `probes` sample points of ‖∂σᵢ/∂xⱼ − ∂σⱼ/∂xᵢ‖∞; zero iff closed.
    pub fn closedness_defect(&self, probes: &[Vec<f64>]) -> f64 {
        let mut worst = 0.0f64;
        for x in probes {
            let jac = self.jacobian(x);
            for i in 0..self.dim() {
                for j in 0..i {
                    worst = worst.max((jac[i][j] - jac[j][i]).abs());
                }
            }
        }
        worst
    }

    pub fn is_exact(&self) -> bool {
        self.primitive.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_value_and_gradient() {
        let phi = FourierSeries::cosine(vec![1, 0], 0.1);
        assert!((phi.value(&[0.0, 0.0]) - 0.1).abs() < 1e-15);
        assert!((phi.value(&[0.25, 0.7])).abs() < 1e-15);
        // periodicity
        assert!((phi.value(&[0.3, 0.1]) - phi.value(&[1.3, -0.9])).abs() < 1e-12);
        let g = phi.gradient(&[0.2, 0.5]);
        let h = 1e-6;
        let fd = (phi.value(&[0.2 + h, 0.5]) - phi.value(&[0.2 - h, 0.5])) / (2.0 * h);
        assert!((g[0] - fd).abs() < 1e-8);
        assert!(g[1].abs() < 1e-15);
    }

    #[test]
    fn exact_form_is_closed_and_matches_fd() {
        let s = FourierSeries {
            fourier: vec![(vec![1, 0], 0.0, 1.0 / TAU), (vec![1, 2], 0.3, -0.1)],
        };
        let sigma = OneForm::exact(2, s.clone()).unwrap();
        let x = [0.13, 0.57];
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (s.value(&xp) - s.value(&xm)) / (2.0 * h);
            assert!((sigma.value(&x)[i] - fd).abs() < 1e-8);
        }
        let probes: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64) * 0.05, (i as f64) * 0.03 + 0.01])
            .collect();
        assert!(sigma.closedness_defect(&probes) < 1e-12);
    }

    #[test]
    fn non_closed_form_detected() {
        // σ = x₂-varying dx₁ only: σ₁ = cos(2πx₂), σ₂ = 0 — not closed.
        let sigma = OneForm {
            components: vec![FourierSeries::cosine(vec![0, 1], 1.0), FourierSeries::zero()],
            constant: vec![0.0, 0.0],
            primitive: None,
        };
        let probes = vec![vec![0.1, 0.2], vec![0.3, 0.05]];
        assert!(sigma.closedness_defect(&probes) > 1.0);
    }
}
