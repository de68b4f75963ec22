//! Reference integrators for unit tests. Deliberately a different method
//! (double-exponential quadrature) from the library's Gauss rules.

use std::f64::consts::FRAC_PI_2;

/// `∫_0^∞ f(x) dx` by the exp-sinh rule, halving the step until two levels
/// agree to `rel_tol`.
pub(crate) fn exp_sinh<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> f64 {
    let t_max = 6.0;
    let eval = |t: f64| {
        let x = (FRAC_PI_2 * t.sinh()).exp();
        let w = x * FRAC_PI_2 * t.cosh();
        if x == 0.0 || !x.is_finite() || w == 0.0 {
            return 0.0;
        }
        let v = f(x) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut h = 0.5;
    let mut sum: f64 = {
        let n = (t_max / h) as i64;
        (-n..=n).map(|k| eval(k as f64 * h)).sum()
    };
    let mut estimate = sum * h;
    for _ in 0..10 {
        h *= 0.5;
        let n = (t_max / h) as i64;
        // new points are the odd multiples of the halved step
        let extra: f64 = (-n..=n).filter(|k| k % 2 != 0).map(|k| eval(k as f64 * h)).sum();
        sum += extra;
        let next = sum * h;
        if (next - estimate).abs() <= rel_tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// `∫_a^b f(x) dx` by the tanh-sinh rule.
pub(crate) fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let t_max = 4.5;
    let eval = |t: f64| {
        let u = FRAC_PI_2 * t.sinh();
        let e = (-2.0 * u.abs()).exp();
        // distance of the node from the nearer endpoint, without cancellation
        let gap = r * 2.0 * e / (1.0 + e);
        let w = FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        let point = if t < 0.0 { a + gap } else if t > 0.0 { b - gap } else { c };
        if point <= a || point >= b || w == 0.0 {
            return 0.0;
        }
        f(point) * w * r
    };
    let mut h = 0.5;
    let mut sum: f64 = {
        let n = (t_max / h) as i64;
        (-n..=n).map(|k| eval(k as f64 * h)).sum()
    };
    let mut estimate = sum * h;
    for _ in 0..10 {
        h *= 0.5;
        let n = (t_max / h) as i64;
        let extra: f64 = (-n..=n).filter(|k| k % 2 != 0).map(|k| eval(k as f64 * h)).sum();
        sum += extra;
        let next = sum * h;
        if (next - estimate).abs() <= rel_tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

#[test]
fn reference_integrators_work() {
    let e = exp_sinh(|x| (-x).exp() * x.powf(-0.5), 1e-13);
    assert!((e - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    let t = tanh_sinh(|x| x.powf(-0.5), 0.0, 1.0, 1e-13);
    assert!((t - 2.0).abs() < 1e-12, "{t}");
}
