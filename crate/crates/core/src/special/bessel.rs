//! Modified Bessel function of the second kind for real order.
//!
//! The fractional part `μ ∈ [−½, ½]` of the order is handled by Temme's
//! series for `x < 2` and Steed's continued fraction (CF2) for `x ≥ 2`;
//! both return `e^x K_μ(x)` and `e^x K_{μ+1}(x)`, which are then carried to
//! the requested order by the (stable) forward recurrence.

use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;
const MAX_ITER: usize = 15_000;

/// A value of `K_ν(x)` together with an underflow indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselK {
    pub value: f64,
    /// Set when the true value is below the smallest normal double and
    /// `value` has been flushed to zero.
    pub underflow: bool,
}

/// `K_ν(x)` for real `ν` and `x > 0`. Returns 0 if the value underflows.
pub fn bessel_k(order: f64, x: f64) -> Result<f64> {
    bessel_k_with_status(order, x).map(|k| k.value)
}

/// `K_ν(x)` with an explicit underflow flag.
pub fn bessel_k_with_status(order: f64, x: f64) -> Result<BesselK> {
    let scaled = bessel_k_scaled(order, x)?;
    if scaled.is_infinite() {
        return Ok(BesselK {
            value: f64::INFINITY,
            underflow: false,
        });
    }
    let ln_value = scaled.ln() - x;
    if ln_value < f64::MIN_POSITIVE.ln() {
        return Ok(BesselK {
            value: 0.0,
            underflow: true,
        });
    }
    Ok(BesselK {
        value: scaled * (-x).exp(),
        underflow: false,
    })
}

/// The exponentially scaled function `e^x K_ν(x)`.
///
/// Returns `+∞` when the value exceeds the double range (large order with
/// small argument).
pub fn bessel_k_scaled(order: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("bessel_k", format!("x = {x} must be finite and > 0")));
    }
    if !order.is_finite() {
        return Err(Error::domain("bessel_k", format!("order = {order} must be finite")));
    }
    let nu = order.abs();
    let steps = (nu + 0.5).floor();
    let mu = nu - steps;

    let (mut k_mu, mut k_mu1) = if x < 2.0 {
        temme_scaled(mu, x)?
    } else {
        steed_cf2_scaled(mu, x)?
    };

    for i in 0..steps as usize {
        let next = 2.0 * (mu + i as f64 + 1.0) / x * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
        if !k_mu.is_finite() {
            return Ok(f64::INFINITY);
        }
    }
    Ok(k_mu)
}

// Chebyshev coefficients for Temme's auxiliary Gamma functions
//   g1(μ) = (1/Γ(1−μ) − 1/Γ(1+μ)) / (2μ),  g2(μ) = (1/Γ(1−μ) + 1/Γ(1+μ)) / 2
// on |μ| ≤ ½, in the variable 4|μ| − 1.
const G1_COEFFS: [f64; 14] = [
    -1.145_164_083_662_683_117_868_981_528_67,
    0.006_360_853_113_470_842_381_229_554_95,
    0.001_862_451_930_072_068_489_346_436_57,
    0.000_152_833_085_873_453_507_081_227_824,
    0.000_017_017_464_011_802_038_795_324_732,
    -6.459_750_292_334_725_435_466_832_645_1e-07,
    -5.181_984_843_251_938_089_410_431_296_8e-08,
    4.518_909_289_485_818_305_112_318_079_7e-10,
    3.243_322_737_102_087_304_366_625_918_0e-11,
    6.830_943_402_494_752_287_543_240_082_8e-13,
    2.835_350_275_517_210_151_311_962_813_0e-14,
    -7.988_390_576_932_359_287_563_808_754_1e-16,
    -3.372_667_730_077_194_983_334_121_345_7e-17,
    -3.658_633_480_921_052_074_405_443_710_4e-20,
];

const G2_COEFFS: [f64; 15] = [
    1.882_645_524_949_671_835_019_616_975_350,
    -0.077_490_658_396_167_518_329_547_945_212,
    -0.018_256_714_847_324_929_419_579_340_950,
    0.000_633_803_020_907_489_579_592_397_173_1,
    0.000_076_229_054_350_872_902_119_446_117_5,
    -9.550_164_756_172_044_351_985_399_352_6e-07,
    -8.892_726_810_788_635_191_243_151_295_5e-08,
    -1.952_133_477_231_961_374_051_188_013_2e-09,
    -9.400_305_273_588_516_211_176_957_977_1e-11,
    4.687_513_384_953_239_317_929_087_910_1e-12,
    2.265_853_574_692_575_958_244_754_514_5e-13,
    -1.172_550_969_848_801_511_187_873_525_1e-15,
    -7.044_133_820_024_522_253_084_315_587_7e-17,
    -2.437_787_831_010_769_365_065_974_022_8e-18,
    -7.522_524_321_825_390_172_716_467_501_1e-20,
];

fn chebyshev(coeffs: &[f64], t: f64) -> f64 {
    let t2 = 2.0 * t;
    let (mut d, mut dd) = (0.0, 0.0);
    for &c in coeffs[1..].iter().rev() {
        let tmp = d;
        d = t2 * d - dd + c;
        dd = tmp;
    }
    t * d - dd + 0.5 * coeffs[0]
}

/// Returns (g1, g2, 1/Γ(1+μ), 1/Γ(1−μ)).
fn temme_gamma(mu: f64) -> (f64, f64, f64, f64) {
    let t = 4.0 * mu.abs() - 1.0;
    let g1 = chebyshev(&G1_COEFFS, t);
    let g2 = chebyshev(&G2_COEFFS, t);
    (g1, g2, 1.0 / (g2 - mu * g1), 1.0 / (g2 + mu * g1))
}

fn temme_scaled(mu: f64, x: f64) -> Result<(f64, f64)> {
    let half_x = 0.5 * x;
    let ln_half_x = half_x.ln();
    let half_x_mu = (mu * ln_half_x).exp();
    let pi_mu = std::f64::consts::PI * mu;
    let sigma = -mu * ln_half_x;
    let sinrat = if pi_mu.abs() < EPS { 1.0 } else { pi_mu / pi_mu.sin() };
    let sinhrat = if sigma.abs() < EPS { 1.0 } else { sigma.sinh() / sigma };
    let (g1, g2, inv_g1p, inv_g1m) = temme_gamma(mu);

    let mut fk = sinrat * (sigma.cosh() * g1 - sinhrat * ln_half_x * g2);
    let mut pk = 0.5 / half_x_mu * inv_g1p;
    let mut qk = 0.5 * half_x_mu * inv_g1m;
    let mut ck = 1.0;
    let mut sum0 = fk;
    let mut sum1 = pk;
    let quarter_x2 = half_x * half_x;
    for k in 1..MAX_ITER {
        let k = k as f64;
        fk = (k * fk + pk + qk) / (k * k - mu * mu);
        ck *= quarter_x2 / k;
        pk /= k - mu;
        qk /= k + mu;
        let del0 = ck * fk;
        sum0 += del0;
        sum1 += ck * (pk - k * fk);
        if del0.abs() < 0.5 * sum0.abs() * EPS {
            let ex = x.exp();
            return Ok((sum0 * ex, sum1 * 2.0 / x * ex));
        }
    }
    Err(Error::numeric("bessel_k", format!("Temme series stalled at mu = {mu}, x = {x}")))
}

fn steed_cf2_scaled(mu: f64, x: f64) -> Result<(f64, f64)> {
    let mut bi = 2.0 * (1.0 + x);
    let mut di = 1.0 / bi;
    let mut delhi = di;
    let mut hi = di;
    let mut qi = 0.0;
    let mut qip1 = 1.0;
    let mut ai = -(0.25 - mu * mu);
    let a1 = ai;
    let mut ci = -ai;
    let mut qsum = -ai;
    let mut s = 1.0 + qsum * delhi;

    for i in 2..MAX_ITER {
        ai -= 2.0 * (i - 1) as f64;
        ci = -ai * ci / i as f64;
        let tmp = (qi - bi * qip1) / ai;
        qi = qip1;
        qip1 = tmp;
        qsum += ci * qip1;
        bi += 2.0;
        di = 1.0 / (bi + ai * di);
        delhi = (bi * di - 1.0) * delhi;
        hi += delhi;
        let dels = qsum * delhi;
        s += dels;
        if (dels / s).abs() < EPS {
            hi *= -a1;
            let k_mu = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
            let k_mu1 = k_mu * (mu + x + 0.5 - hi) / x;
            return Ok((k_mu, k_mu1));
        }
    }
    Err(Error::numeric("bessel_k", format!("continued fraction stalled at mu = {mu}, x = {x}")))
}
