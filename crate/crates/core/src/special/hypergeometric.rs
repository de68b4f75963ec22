use crate::error::{Error, Result};

const MAX_TERMS: usize = 20_000;

/// Kummer's confluent hypergeometric function `₁F₁(a; b; z)`.
///
/// Negative arguments are always mapped through Kummer's transformation
/// `₁F₁(a; b; z) = e^z ₁F₁(b − a; b; −z)` so that the summed series has
/// non-negative argument. For the moment formulas (`a = −n/2`, `b = 1`,
/// `n > −2`) every transformed term is then positive.
pub fn kummer_1f1(a: f64, b: f64, z: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && z.is_finite()) {
        return Err(Error::domain("kummer_1f1", format!("non-finite argument ({a}, {b}, {z})")));
    }
    if b <= 0.0 && b == b.round() {
        return Err(Error::domain("kummer_1f1", format!("b = {b} is a non-positive integer")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z < 0.0 {
        Ok(z.exp() * series(b - a, b, -z)?)
    } else {
        series(a, b, z)
    }
}

fn series(a: f64, b: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        if a + kf == 0.0 {
            // terminating polynomial
            return Ok(sum);
        }
        term *= (a + kf) / (b + kf) * z / (kf + 1.0);
        sum += term;
        if !sum.is_finite() {
            return Err(Error::numeric("kummer_1f1", format!("overflow at a = {a}, b = {b}, z = {z}")));
        }
        // Once k exceeds |a| and z the ratio of successive terms is < 1.
        let decaying = kf + 1.0 > (a.abs() + z).max(b.abs());
        if decaying && term.abs() <= f64::EPSILON * sum.abs() * 0.5 {
            return Ok(sum);
        }
    }
    Err(Error::numeric(
        "kummer_1f1",
        format!("series did not converge in {MAX_TERMS} terms (a = {a}, b = {b}, z = {z})"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // L_m(z) = Σ_k C(m,k) (−z)^k / k!
    fn laguerre_brute(m: u32, z: f64) -> f64 {
        let mut sum = 0.0;
        for k in 0..=m {
            let mut binom = 1.0;
            for j in 0..k {
                binom *= (m - j) as f64 / (j + 1) as f64;
            }
            let fact: f64 = (1..=k).map(|j| j as f64).product();
            sum += binom * (-z).powi(k as i32) / fact;
        }
        sum
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(kummer_1f1(-2.5, 1.0, 0.0).unwrap(), 1.0);
        for &alpha2 in &[0.0, 0.25, 1.0, 9.0, 100.0] {
            let v = kummer_1f1(-1.0, 1.0, -alpha2).unwrap();
            assert!(rel(v, 1.0 + alpha2) < 1e-13, "alpha2={alpha2}");
        }
    }

    #[test]
    fn reference_value() {
        // arbitrary-precision series, 40 digits
        let v = kummer_1f1(-1.5, 1.0, -4.0).unwrap();
        assert!(rel(v, 9.511_638_971_538_532_990_692_6) < 1e-12);
    }

    #[test]
    fn laguerre_polynomials_on_negative_axis() {
        for m in 0..=12u32 {
            for &z in &[-0.1, -1.0, -3.7, -10.0, -25.0, -60.0, -100.0] {
                let got = kummer_1f1(-(m as f64), 1.0, z).unwrap();
                let want = laguerre_brute(m, z);
                assert!(rel(got, want) < 1e-10, "m={m} z={z}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn laguerre_polynomials_on_small_positive_axis() {
        for m in 0..=6u32 {
            for &z in &[0.05, 0.2] {
                let got = kummer_1f1(-(m as f64), 1.0, z).unwrap();
                assert!((got - laguerre_brute(m, z)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exponential_special_case() {
        // ₁F₁(a; a; z) = e^z
        for &z in &[-50.0, -2.0, 0.5, 30.0] {
            assert!(rel(kummer_1f1(1.3, 1.3, z).unwrap(), z.exp()) < 1e-12);
        }
    }

    #[test]
    fn rejects_pole_in_b() {
        assert!(kummer_1f1(1.0, 0.0, 1.0).is_err());
        assert!(kummer_1f1(1.0, -3.0, 1.0).is_err());
        assert!(kummer_1f1(1.0, -2.5, 1.0).is_ok());
    }
}
