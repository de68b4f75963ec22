//! Rician fast fading.
//!
//! `h ~ CN(α e^{jθ}, σ_h²)`: the real and imaginary parts are independent
//! normals with means `α cos θ`, `α sin θ` and variance `σ_h²/2` each.
//! A fresh coefficient is drawn for every sample.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::special::{gamma, kummer_1f1};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicianChannel {
    los_amplitude: f64,
    los_phase: f64,
    scatter_variance: f64,
}

impl RicianChannel {
    pub fn new(los_amplitude: f64, los_phase: f64, scatter_variance: f64) -> Result<Self> {
        if !(los_amplitude >= 0.0) || !los_amplitude.is_finite() {
            return Err(Error::domain(
                "RicianChannel",
                format!("LoS amplitude {los_amplitude} must be finite and >= 0"),
            ));
        }
        if !los_phase.is_finite() {
            return Err(Error::domain("RicianChannel", format!("LoS phase {los_phase} must be finite")));
        }
        if !(scatter_variance > 0.0) || !scatter_variance.is_finite() {
            return Err(Error::domain(
                "RicianChannel",
                format!("scatter variance {scatter_variance} must be finite and > 0"),
            ));
        }
        Ok(Self {
            los_amplitude,
            los_phase: los_phase.rem_euclid(std::f64::consts::TAU),
            scatter_variance,
        })
    }

    /// Rayleigh fading with scatter variance `σ_h²`.
    pub fn rayleigh(scatter_variance: f64) -> Result<Self> {
        Self::new(0.0, 0.0, scatter_variance)
    }

    /// Channel with K-factor `K = α²/σ_h²`, so `α = √(K σ_h²)`.
    pub fn from_k_factor(k_factor: f64, scatter_variance: f64, los_phase: f64) -> Result<Self> {
        if !(k_factor >= 0.0) || !k_factor.is_finite() {
            return Err(Error::domain("RicianChannel", format!("K-factor {k_factor} must be finite and >= 0")));
        }
        Self::new((k_factor * scatter_variance).sqrt(), los_phase, scatter_variance)
    }

    pub fn los_amplitude(&self) -> f64 {
        self.los_amplitude
    }

    pub fn los_phase(&self) -> f64 {
        self.los_phase
    }

    pub fn scatter_variance(&self) -> f64 {
        self.scatter_variance
    }

    pub fn k_factor(&self) -> f64 {
        self.los_amplitude * self.los_amplitude / self.scatter_variance
    }

    pub fn is_rayleigh(&self) -> bool {
        self.los_amplitude == 0.0
    }

    /// Draws one channel coefficient.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let sd = (0.5 * self.scatter_variance).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::from_polar(self.los_amplitude, self.los_phase) + Complex64::new(sd * re, sd * im)
    }

    /// The unit-power Rice variable with this channel's K-factor.
    pub fn unit_rice(&self) -> UnitRice {
        UnitRice::new(self.k_factor(), self.los_phase)
    }
}

/// `count` i.i.d. channel coefficients from a ChaCha8 stream seeded with `seed`.
pub fn sample_h(channel: &RicianChannel, count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = rng::seeded(seed);
    (0..count).map(|_| channel.sample(&mut rng)).collect()
}

/// `z0 ~ CN(√(K/(1+K)) e^{jθ}, 1/(1+K))`, so that `E|z0|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitRice {
    mean: Complex64,
    component_sd: f64,
}

impl UnitRice {
    pub fn new(k_factor: f64, phase: f64) -> Self {
        let total = 1.0 + k_factor;
        Self {
            mean: Complex64::from_polar((k_factor / total).sqrt(), phase),
            component_sd: (0.5 / total).sqrt(),
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        self.mean + Complex64::new(self.component_sd * re, self.component_sd * im)
    }
}

/// `E|z0|^n` for the unit-power Rice variable with `K = α²`:
/// `Γ(n/2+1) (1+α²)^{−n/2} ₁F₁(−n/2, 1; −α²)`.
pub fn unit_rice_abs_moment(n: f64, alpha: f64) -> Result<f64> {
    if !(n > -2.0) || !n.is_finite() {
        return Err(Error::domain("unit_rice_abs_moment", format!("order n = {n} must be > -2")));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::domain("unit_rice_abs_moment", format!("alpha = {alpha} must be finite and >= 0")));
    }
    let k = alpha * alpha;
    let half = 0.5 * n;
    Ok(gamma(half + 1.0)? * (-half * k.ln_1p()).exp() * kummer_1f1(-half, 1.0, -k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::tanh_sinh;
    use std::f64::consts::PI;

    fn mean_and_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
        let xs: Vec<f64> = xs.collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    // e^{−x} I_0(x) = (1/π) ∫_0^π e^{x(cos t − 1)} dt
    fn scaled_i0(x: f64) -> f64 {
        tanh_sinh(|t| (x * (t.cos() - 1.0)).exp(), 0.0, PI, 1e-14) / PI
    }

    // Envelope density of the unit-power Rice variable.
    fn rice_envelope_pdf(r: f64, k: f64) -> f64 {
        let x = 2.0 * r * (k * (1.0 + k)).sqrt();
        2.0 * (1.0 + k) * r * (-k - (1.0 + k) * r * r + x).exp() * scaled_i0(x)
    }

    #[test]
    fn construction() {
        assert!(RicianChannel::new(-1.0, 0.0, 1.0).is_err());
        assert!(RicianChannel::new(1.0, 0.0, 0.0).is_err());
        assert!(RicianChannel::from_k_factor(-1.0, 1.0, 0.0).is_err());
        let c = RicianChannel::from_k_factor(10.0, 1.0, 0.0).unwrap();
        assert!((c.los_amplitude() - 10f64.sqrt()).abs() < 1e-15);
        let c = RicianChannel::from_k_factor(4.0, 0.5, 0.0).unwrap();
        assert!((c.k_factor() - 4.0).abs() < 1e-14);
        assert!(RicianChannel::rayleigh(1.0).unwrap().is_rayleigh());
        let c = RicianChannel::new(1.0, 7.0, 1.0).unwrap();
        assert!((c.los_phase() - (7.0 - 2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn rayleigh_power() {
        let c = RicianChannel::rayleigh(1.5).unwrap();
        let (mean, se) = mean_and_se(sample_h(&c, 1_000_000, 4).iter().map(|h| h.norm_sqr()));
        assert!((mean - 1.5).abs() < 4.0 * se);
    }

    #[test]
    fn component_means() {
        let c = RicianChannel::new(3.0, 0.0, 1.0).unwrap();
        let h = sample_h(&c, 200_000, 5);
        let (re, re_se) = mean_and_se(h.iter().map(|h| h.re));
        let (im, im_se) = mean_and_se(h.iter().map(|h| h.im));
        assert!((re - 3.0).abs() < 4.0 * re_se);
        assert!(im.abs() < 4.0 * im_se);
    }

    #[test]
    fn second_moment_with_los() {
        for &(a, theta, s2) in &[(1.0, 0.4, 0.5), (2.0, 2.0, 2.0)] {
            let c = RicianChannel::new(a, theta, s2).unwrap();
            let (mean, se) = mean_and_se(sample_h(&c, 500_000, 6).iter().map(|h| h.norm_sqr()));
            assert!((mean - (a * a + s2)).abs() < 4.0 * se, "{mean} ± {se}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = RicianChannel::new(1.0, 0.3, 1.0).unwrap();
        assert_eq!(sample_h(&c, 32, 1), sample_h(&c, 32, 1));
        assert_ne!(sample_h(&c, 32, 1), sample_h(&c, 32, 2));
    }

    #[test]
    fn moment_identities() {
        for &a in &[0.0, 0.5, 1.0, 3.0, 10.0] {
            assert!((unit_rice_abs_moment(2.0, a).unwrap() - 1.0).abs() < 1e-12, "alpha={a}");
            assert!((unit_rice_abs_moment(0.0, a).unwrap() - 1.0).abs() < 1e-15);
        }
        for &n in &[0.3, 1.0, 2.0, 3.7, 6.0] {
            let want = gamma(0.5 * n + 1.0).unwrap();
            assert!((unit_rice_abs_moment(n, 0.0).unwrap() - want).abs() < 1e-14 * want);
        }
        assert!(unit_rice_abs_moment(-2.0, 1.0).is_err());
        assert!(unit_rice_abs_moment(1.0, -1.0).is_err());
    }

    #[test]
    fn moment_monotone_in_los() {
        // the envelope concentrates at 1 as K grows, so moments move toward 1
        let alphas = [0.0, 0.3, 0.7, 1.0, 2.0, 3.0, 6.0, 10.0];
        for &n in &[0.3, 1.0, 1.7] {
            let m: Vec<f64> = alphas.iter().map(|&a| unit_rice_abs_moment(n, a).unwrap()).collect();
            assert!(m.windows(2).all(|w| w[1] > w[0] && w[1] < 1.0), "n={n}: {m:?}");
        }
        for &n in &[2.5, 4.0, 7.0] {
            let m: Vec<f64> = alphas.iter().map(|&a| unit_rice_abs_moment(n, a).unwrap()).collect();
            assert!(m.windows(2).all(|w| w[1] < w[0] && w[1] > 1.0), "n={n}: {m:?}");
        }
    }

    #[test]
    fn moments_match_envelope_density() {
        for &k in &[0.5, 3.0, 10.0] {
            for &n in &[0.5, 1.0, 3.0] {
                let want = tanh_sinh(|r| r.powf(n) * rice_envelope_pdf(r, k), 0.0, 8.0, 1e-13);
                let got = unit_rice_abs_moment(n, k.sqrt()).unwrap();
                assert!(((got - want) / want).abs() < 1e-9, "K={k} n={n}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn first_moment_by_simulation() {
        let z = UnitRice::new(10.0, 0.0);
        let mut rng = rng::seeded(8);
        let (mean, se) = mean_and_se((0..10_000_000).map(|_| z.sample(&mut rng).norm()));
        let want = unit_rice_abs_moment(1.0, 10f64.sqrt()).unwrap();
        assert!((mean - want).abs() < 4.0 * se, "{mean} vs {want} (se {se})");
    }

    #[test]
    fn envelope_goodness_of_fit() {
        // χ² test on 20 equal-width bins over [0, 2.5] plus the overflow bin
        let k = 3.0;
        let z = UnitRice::new(k, 1.1);
        let count = 100_000;
        let mut rng = rng::seeded(12);
        let bins = 20;
        let width = 2.5 / bins as f64;
        let mut observed = vec![0usize; bins + 1];
        for _ in 0..count {
            let r = z.sample(&mut rng).norm();
            observed[((r / width) as usize).min(bins)] += 1;
        }
        let mut expected: Vec<f64> = (0..bins)
            .map(|i| {
                let lo = i as f64 * width;
                count as f64 * tanh_sinh(|r| rice_envelope_pdf(r, k), lo, lo + width, 1e-12)
            })
            .collect();
        expected.push(count as f64 - expected.iter().sum::<f64>());
        let chi2: f64 = observed
            .iter()
            .zip(&expected)
            .filter(|(_, &e)| e > 5.0)
            .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
            .sum();
        // 0.1% critical value with 20 degrees of freedom
        assert!(chi2 < 45.3, "chi2 = {chi2}");
    }
}
