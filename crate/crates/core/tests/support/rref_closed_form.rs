//! Closed-form reduced row echelon form of the two-household system.

use sfcdist::ModelParameters;

/// Rows 1-12 pivot on columns 1-12 and carry a coefficient on `M_2` plus a
/// right-hand side; rows 13 and 14 vanish.
///
/// The expressions were derived with the consumption rows written as
/// `Cd = -alpha0 + ...`. Every right-hand side is linear in `alpha0`, and
/// evaluating them at `-alpha0` gives the `Cd = alpha0 + ...` convention.
pub fn closed_form(p: &ModelParameters) -> Vec<Vec<f64>> {
    let (a0, a1, a2, r, d, k) = (-p.alpha0, p.alpha1, p.alpha2, p.r, p.delta, p.k);
    let den1 = -d * k * a1 + d * k + k * a2 + a1 - 1.0;
    let den2 = d * k * a1 - d * k - k * a2 - a1 + 1.0;
    let den3 = d * k * a1 * a1 - 2.0 * d * k * a1 - k * a1 * a2 + d * k - a1 * a1 + k * a2 + 2.0 * a1 - 1.0;

    let tail: [(f64, f64); 12] = [
        (0.0, (-2.0 * d * k * a0 + 2.0 * a0) / den1),
        (0.0, 2.0 * k * a0 / den1),
        (0.0, -2.0 * k * a0 / den2),
        (0.0, 2.0 * d * k * a0 / den1),
        (0.0, 2.0 * d * k * a0 / den1),
        (0.0, 2.0 * d * k * a0 / den1),
        (0.0, 2.0 * d * k * a0 / den1),
        (
            a2 / (1.0 - a1),
            (d * k * a0 * a1 - d * k * a0 + k * a0 * a2 - a0 * a1 + a0) / den3,
        ),
        (-a2 / (1.0 - a1), -a0 / (1.0 - a1)),
        (
            (r * a1 - r + a2) / (1.0 - a1),
            (2.0 * r * k * a0 * a1 + d * k * a0 * a1 - 2.0 * r * k * a0 - d * k * a0 + k * a0 * a2 - a0 * a1 + a0) / den3,
        ),
        ((-r * a1 + r - a2) / (1.0 - a1), -a0 / (1.0 - a1)),
        (1.0, -2.0 * k * a0 / den2),
    ];

    let mut rows = vec![vec![0.0; 14]; 14];
    for (i, (coef, rhs)) in tail.iter().enumerate() {
        rows[i][i] = 1.0;
        rows[i][12] = *coef;
        rows[i][13] = *rhs;
    }
    rows
}
