//! Adaptive Gauss-Kronrod (7/15) quadrature, plus a half-line driver that
//! integrates over geometrically growing panels until the tail is negligible.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 48;

/// One 15-point Kronrod panel; returns (kronrod estimate, |kronrod - gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: (f64, f64), tol: f64, depth: u32) -> f64 {
    let (est, err) = whole;
    // below roundoff of the panel value further bisection only adds noise
    if err <= tol || err <= 8.0 * f64::EPSILON * est.abs() || depth >= MAX_DEPTH || (b - a).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
        return est;
    }
    let m = 0.5 * (a + b);
    let left = gk15(f, a, m);
    let right = gk15(f, m, b);
    adapt(f, a, m, left, 0.5 * tol, depth + 1) + adapt(f, m, b, right, 0.5 * tol, depth + 1)
}

/// Integrates `f` over `[a, b]` to the given absolute tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = gk15(f, a, b);
    adapt(f, a, b, whole, abs_tol.max(f64::MIN_POSITIVE), 0)
}

/// Integrates a nonnegative `f` over `[lo, hi)` (with `hi` possibly infinite)
/// using panels that double in width away from `scale`.
///
/// Upward panels stop once two consecutive panels contribute less than
/// `rel_tol` of the running total, so the discarded tail is bounded by roughly
/// that fraction when the integrand decays at least geometrically per panel.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: Option<f64>, scale: f64, rel_tol: f64) -> f64 {
    let hi = hi.unwrap_or(f64::INFINITY);
    let anchor = if lo > 0.0 { lo } else { scale.max(f64::MIN_POSITIVE) };
    let anchor = anchor.min(hi);

    // Panels below the anchor, only needed when the support reaches 0.
    let mut lower = Vec::new();
    if lo <= 0.0 {
        let mut b = anchor;
        for _ in 0..80 {
            let a = 0.5 * b;
            lower.push((a, b));
            b = a;
        }
        lower.push((0.0, b));
    }

    // Rough magnitude for absolute tolerances.
    let probe = gk15(f, lower.last().map_or(anchor, |_| 0.0), anchor).0.abs()
        + gk15(f, anchor, (2.0 * anchor).min(hi)).0.abs();
    let mut total = 0.0;
    let tol_of = |total: f64| (rel_tol * total.abs().max(probe)).max(f64::MIN_POSITIVE);

    for &(a, b) in &lower {
        total += integrate(f, a, b, 0.01 * tol_of(total));
    }

    let mut a = anchor;
    let mut small_run = 0;
    for _ in 0..1100 {
        if a >= hi {
            break;
        }
        let b = (2.0 * a).min(hi);
        if !b.is_finite() {
            break;
        }
        let piece = integrate(f, a, b, 0.01 * tol_of(total));
        total += piece;
        if piece.abs() <= rel_tol * total.abs() * 1e-3 {
            small_run += 1;
            if small_run >= 2 {
                break;
            }
        } else {
            small_run = 0;
        }
        a = b;
    }
    total
}
