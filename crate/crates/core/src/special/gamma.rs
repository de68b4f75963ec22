use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;
const MAX_ITER: usize = 10_000;

/// Natural logarithm of the Gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("ln_gamma", format!("x = {x} must be finite and > 0")));
    }
    Ok(libm::lgamma_r(x).0)
}

/// The Gamma function for positive arguments.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("gamma", format!("x = {x} must be finite and > 0")));
    }
    Ok(libm::tgamma(x))
}

/// `ln Γ(v + a) − ln Γ(v) − a·ln v`, the log of the Gamma-moment factor
/// `E[G^a]` for `G ~ Gamma(shape v, rate v)`.
///
/// For large `v` the three logs are huge and nearly cancel, so the
/// difference is taken from the Stirling series directly.
pub fn ln_gamma_ratio(v: f64, a: f64) -> Result<f64> {
    if !(v > 0.0) || !(v + a > 0.0) {
        return Err(Error::domain(
            "ln_gamma_ratio",
            format!("need v > 0 and v + a > 0, got v = {v}, a = {a}"),
        ));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    if v >= 20.0 && v + a >= 20.0 {
        Ok((v + a - 0.5) * (a / v).ln_1p() - a + stirling_tail(v + a) - stirling_tail(v))
    } else {
        Ok(ln_gamma(v + a)? - ln_gamma(v)? - a * v.ln())
    }
}

// Remainder of Stirling's series: ln Γ(z) − [(z − ½)ln z − z + ½ ln 2π].
fn stirling_tail(z: f64) -> f64 {
    let r = 1.0 / z;
    let r2 = r * r;
    r * (1.0 / 12.0
        - r2 * (1.0 / 360.0
            - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 * (1.0 / 1188.0)))))
}

/// Upper incomplete Gamma function `Γ(a, x) = ∫_x^∞ t^{a−1} e^{−t} dt`.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    check_incomplete_args(a, x)?;
    if x == 0.0 {
        return gamma(a);
    }
    if x < a + 1.0 {
        let lower = lower_series(a, x)?;
        Ok(gamma(a)? - lower)
    } else {
        Ok(ln_upper_cf(a, x)?.exp())
    }
}

/// `ln Γ(a, x)`, usable where `Γ(a, x)` itself would underflow.
pub fn ln_upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    check_incomplete_args(a, x)?;
    if x == 0.0 {
        return ln_gamma(a);
    }
    if x < a + 1.0 {
        Ok(upper_incomplete_gamma(a, x)?.ln())
    } else {
        ln_upper_cf(a, x)
    }
}

fn check_incomplete_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain("upper_incomplete_gamma", format!("a = {a} must be > 0")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain("upper_incomplete_gamma", format!("x = {x} must be >= 0")));
    }
    Ok(())
}

// γ(a, x) by the power series e^{−x} x^a Σ x^k / (a(a+1)…(a+k)).
fn lower_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            return Ok(sum * (-x + a * x.ln()).exp());
        }
    }
    Err(Error::numeric("upper_incomplete_gamma", format!("series stalled at a = {a}, x = {x}")))
}

// ln Γ(a, x) from the Legendre continued fraction, modified Lentz.
fn ln_upper_cf(a: f64, x: f64) -> Result<f64> {
    let tiny = f64::MIN_POSITIVE / EPS;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok(-x + a * x.ln() + h.ln());
        }
    }
    Err(Error::numeric(
        "upper_incomplete_gamma",
        format!("continued fraction stalled at a = {a}, x = {x}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ln_gamma_reference_points() {
        assert_eq!(ln_gamma(1.0).unwrap(), 0.0);
        assert!(ln_gamma(2.0).unwrap().abs() < 1e-15);
        assert!(rel(ln_gamma(0.5).unwrap(), 0.5 * std::f64::consts::PI.ln()) < 1e-14);
        // 40-digit value
        assert!(rel(ln_gamma(10.3).unwrap(), 13.482_036_786_138_358_592_653) < 1e-13);
    }

    #[test]
    fn ln_gamma_rejects_nonpositive() {
        assert!(matches!(ln_gamma(0.0), Err(Error::Domain { .. })));
        assert!(matches!(ln_gamma(-2.5), Err(Error::Domain { .. })));
        assert!(ln_gamma(f64::NAN).is_err());
    }

    #[test]
    fn gamma_ratio_matches_direct_route() {
        for &v in &[0.3, 1.0, 4.0, 19.0, 25.0, 64.0, 1e3] {
            for &a in &[-0.9, -0.25, 0.5, 1.0, 3.5, 8.0] {
                if v + a <= 0.0 {
                    continue;
                }
                let fast = ln_gamma_ratio(v, a).unwrap();
                let direct =
                    ln_gamma(v + a).unwrap() - ln_gamma(v).unwrap() - a * f64::ln(v);
                assert!((fast - direct).abs() < 1e-12 * (1.0 + direct.abs()), "v={v} a={a}");
            }
        }
        // E[G] = 1 for every shape
        for &v in &[0.2, 3.0, 50.0, 1e6, 1e8] {
            assert!(ln_gamma_ratio(v, 1.0).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn incomplete_gamma_limits() {
        for &a in &[0.3, 1.0, 2.5, 7.0] {
            let g = gamma(a).unwrap();
            assert!(rel(upper_incomplete_gamma(a, 0.0).unwrap(), g) < 1e-14);
        }
        for &x in &[0.01, 0.5, 1.0, 3.0, 30.0] {
            let v = upper_incomplete_gamma(1.0, x).unwrap();
            assert!(rel(v, (-x).exp()) < 1e-13, "x={x}");
        }
    }

    #[test]
    fn incomplete_gamma_reference_value() {
        // mpmath.gammainc(2.5, 1.7)
        let v = upper_incomplete_gamma(2.5, 1.7).unwrap();
        assert!(rel(v, 0.848_876_789_458_320_642_760_3) < 1e-12);
    }

    #[test]
    fn incomplete_gamma_matches_integer_closed_form() {
        // Γ(m, x) = (m−1)! e^{−x} Σ_{k<m} x^k/k!
        for m in 1..8 {
            for &x in &[0.2, 1.0, 4.0, 9.5, 40.0] {
                let mut sum = 0.0;
                let mut term = 1.0;
                for k in 0..m {
                    if k > 0 {
                        term *= x / k as f64;
                    }
                    sum += term;
                }
                let fact: f64 = (1..m).map(|k| k as f64).product();
                let expected = fact * (-x).exp() * sum;
                let got = upper_incomplete_gamma(m as f64, x).unwrap();
                assert!(rel(got, expected) < 1e-12, "m={m} x={x}");
            }
        }
    }

    #[test]
    fn log_variant_survives_underflow() {
        let ln = ln_upper_incomplete_gamma(2.0, 900.0).unwrap();
        // Γ(2, x) = (1 + x) e^{−x}
        assert!(rel(ln, 901f64.ln() - 900.0) < 1e-14);
        assert!(upper_incomplete_gamma(-1.0, 1.0).is_err());
        assert!(upper_incomplete_gamma(1.0, -1.0).is_err());
    }
}
