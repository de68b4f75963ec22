//! Expectations over the Gamma(shape v, rate v) mixing density.
//!
//! The primary route is a generalized Gauss–Laguerre rule for the weight
//! `t^{v−1} e^{−t}` (with `G = t / v`), built by Golub–Welsch and doubled
//! from 64 up to 512 nodes until two successive levels agree. Integrands
//! with a branch point close to the origin (small signal power in the H1
//! moments, fractional powers of `G`) converge too slowly for that; they
//! fall through to an adaptive Gauss–Kronrod pass on a split, substituted
//! domain.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::special::gamma::ln_gamma;

const START_NODES: usize = 64;
const MAX_NODES: usize = 512;
const LEVEL_AGREEMENT: f64 = 1e-10;
const ADAPTIVE_REL_TOL: f64 = 1e-12;
const MAX_SEGMENTS: usize = 4000;

/// A quadrature rule for `E[f(G)]`, `G ~ Gamma(shape, rate = shape)`.
///
/// Nodes are in units of `G` (already divided by the shape), so the
/// weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    shape: f64,
}

impl QuadratureRule {
    /// Builds the `count`-point generalized Gauss–Laguerre rule for shape `v`.
    ///
    /// Nodes whose weight underflows to zero are dropped.
    pub fn generalized_laguerre(shape: f64, count: usize) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::domain("QuadratureRule", format!("shape = {shape} must be > 0")));
        }
        if count == 0 {
            return Err(Error::domain("QuadratureRule", "node count must be >= 1"));
        }
        // Jacobi matrix of the Laguerre polynomials L^{(v−1)}.
        let mut diag: Vec<f64> = (0..count).map(|k| 2.0 * k as f64 + shape).collect();
        let mut off: Vec<f64> = (1..=count)
            .map(|k| {
                if k < count {
                    (k as f64 * (k as f64 + shape - 1.0)).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        let mut first = vec![0.0; count];
        first[0] = 1.0;
        tridiagonal_ql(&mut diag, &mut off, &mut first)?;

        let mut pairs: Vec<(f64, f64)> = diag
            .iter()
            .zip(&first)
            .map(|(&t, &z)| (t / shape, z * z))
            .filter(|&(g, w)| g > 0.0 && w > f64::MIN_POSITIVE)
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(Self {
            nodes,
            weights,
            shape,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to `f`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&g, &w)| w * f(g))
            .sum()
    }
}

// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
// `off[i]` couples rows i and i+1; only the first row of the eigenvector
// matrix is tracked (all Golub–Welsch needs).
fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64], first: &mut [f64]) -> Result<()> {
    let n = diag.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 100 {
                return Err(Error::numeric("QuadratureRule", "QL iteration did not converge"));
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                let zf = first[i + 1];
                first[i + 1] = s * first[i] + c * zf;
                first[i] = c * first[i] - s * zf;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

type RuleCache = Mutex<HashMap<(u64, usize), Arc<QuadratureRule>>>;

fn cached_rule(shape: f64, count: usize) -> Result<Arc<QuadratureRule>> {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (shape.to_bits(), count);
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&key) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(QuadratureRule::generalized_laguerre(shape, count)?);
    let mut guard = cache.lock().expect("rule cache poisoned");
    if guard.len() > 512 {
        guard.clear();
    }
    guard.insert(key, Arc::clone(&rule));
    Ok(rule)
}

/// How hard [`gamma_expectation_with`] should work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Refinement {
    /// Gauss–Laguerre doubling, adaptive pass only if the levels disagree.
    #[default]
    Auto,
    /// Skip straight to the adaptive pass.
    Adaptive,
}

/// `E[f(G)]` for `G ~ Gamma(shape v, rate v)`, i.e. the unit-mean Gamma
/// density `v^v g^{v−1} e^{−vg} / Γ(v)`.
pub fn gamma_expectation<F: Fn(f64) -> f64>(f: F, v: f64) -> Result<f64> {
    gamma_expectation_with(f, v, Refinement::Auto)
}

pub fn gamma_expectation_with<F: Fn(f64) -> f64>(f: F, v: f64, refinement: Refinement) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain("gamma_expectation", format!("shape v = {v} must be > 0")));
    }
    let mut last_level = f64::NAN;
    if refinement == Refinement::Auto {
        let mut previous: Option<f64> = None;
        let mut count = START_NODES;
        while count <= MAX_NODES {
            let estimate = cached_rule(v, count)?.integrate(&f);
            if let Some(prev) = previous {
                if agree(prev, estimate, LEVEL_AGREEMENT) {
                    return Ok(estimate);
                }
            }
            previous = Some(estimate);
            last_level = estimate;
            count *= 2;
        }
    }
    match adaptive_gamma_expectation(&f, v) {
        Ok(value) => Ok(value),
        Err(Error::QuadratureDisagreement { fine, .. }) => Err(Error::QuadratureDisagreement {
            coarse: last_level,
            fine,
        }),
        Err(e) => Err(e),
    }
}

fn agree(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()) || (a - b).abs() < 1e-300
}

fn adaptive_gamma_expectation<F: Fn(f64) -> f64>(f: &F, v: f64) -> Result<f64> {
    let ln_gamma_v = ln_gamma(v)?;
    // [0, 1] in t = vG; for v < 1 substitute u = t^v to remove t^{v−1}.
    let head = if v < 1.0 {
        let scale = (-ln_gamma_v - v.ln()).exp();
        let inv_v = 1.0 / v;
        integrate_adaptive(
            |u| {
                let t = u.powf(inv_v);
                (-t).exp() * f(t / v)
            },
            0.0,
            1.0,
            ADAPTIVE_REL_TOL,
            0.0,
        )
        .map(|(value, err)| (value * scale, err * scale))
    } else {
        integrate_adaptive(
            |t| {
                if t <= 0.0 {
                    return 0.0;
                }
                ((v - 1.0) * t.ln() - t - ln_gamma_v).exp() * f(t / v)
            },
            0.0,
            1.0,
            ADAPTIVE_REL_TOL,
            0.0,
        )
    };
    // [1, ∞) mapped onto [0, 1) by t = 1 + s/(1 − s).
    let tail = integrate_adaptive(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let t = 1.0 + s / (1.0 - s);
            let jac = 1.0 / ((1.0 - s) * (1.0 - s));
            let density = ((v - 1.0) * t.ln() - t - ln_gamma_v).exp();
            if density == 0.0 {
                0.0
            } else {
                density * jac * f(t / v)
            }
        },
        0.0,
        1.0,
        ADAPTIVE_REL_TOL,
        0.0,
    );
    match (head, tail) {
        (Ok((h, _)), Ok((t, _))) => Ok(h + t),
        (Ok((h, _)), Err(Error::QuadratureDisagreement { fine, .. }))
        | (Err(Error::QuadratureDisagreement { fine: h, .. }), Ok((fine, _))) => {
            Err(Error::QuadratureDisagreement {
                coarse: f64::NAN,
                fine: h + fine,
            })
        }
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss
// weights (every odd Kronrod node).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive 7/15-point Gauss–Kronrod integration of `f` over
/// `[a, b]`. Returns the estimate and its error bound; fails with
/// [`Error::QuadratureDisagreement`] if the tolerance is not reached.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<(f64, f64)> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::domain("integrate_adaptive", format!("bad interval [{a}, {b}]")));
    }
    let (value, error) = kronrod15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let first_estimate = value;

    while heap.len() < MAX_SEGMENTS {
        if !total.is_finite() {
            return Err(Error::numeric("integrate_adaptive", "integrand produced a non-finite value"));
        }
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, total_err));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further in floating point
            heap.push(worst);
            break;
        }
        let (lv, le) = kronrod15(&f, worst.a, mid);
        let (rv, re) = kronrod15(&f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Segment { a: mid, b: worst.b, value: rv, error: re });
    }
    // recompute sums from scratch to shed accumulated rounding
    total = heap.iter().map(|s| s.value).sum();
    total_err = heap.iter().map(|s| s.error).sum();
    if total_err <= abs_tol.max(rel_tol * total.abs()) {
        Ok((total, total_err))
    } else {
        Err(Error::QuadratureDisagreement {
            coarse: first_estimate,
            fine: total,
        })
    }
}
