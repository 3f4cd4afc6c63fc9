//! Links the steady state to data.
//!
//! In the steady state household income is affine in wealth,
//! `WB = c0 + c1 M` with `c0 = alpha0 / (1 - alpha1)` and
//! `c1 = alpha2 / (1 - alpha1) - r`. A wealth distribution fitted in data
//! units therefore implies an income distribution once a unit scale is fixed,
//! and the free consumption parameters can be chosen to match observed
//! income percentiles.
//!
//! Only `scale * c0` and `c1` enter the implied income law, so the four
//! searched quantities `(alpha0, alpha1, alpha2, scale)` are not separately
//! identified. The report carries the curvature of the objective along each
//! search coordinate so that flat directions are visible.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::WeightFunction;
use crate::error::{Error, Result};
use crate::ingest::PercentileTable;
use crate::numeric::simplex_search::{nelder_mead, SearchOptions};
use crate::sfc_model::{constant_sum, ModelParameters};

/// Income law implied by a wealth law through `WB = scale c0 + c1 M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpliedIncome {
    pub wealth: WeightFunction,
    /// Intercept in data units, `scale * c0`.
    pub intercept: f64,
    pub slope: f64,
}

impl ImpliedIncome {
    pub fn cdf(&self, w: f64) -> f64 {
        let m = (w - self.intercept) / self.slope;
        if self.slope > 0.0 {
            self.wealth.cdf(m)
        } else {
            self.wealth.sf(m)
        }
    }

    /// `c0 + c1 q_M(p)` for increasing maps, `c0 + c1 q_M(1 - p)` otherwise.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        let q = if self.slope > 0.0 { self.wealth.quantile(p)? } else { self.wealth.quantile(1.0 - p)? };
        Ok(self.intercept + self.slope * q)
    }
}

/// Income law of `scale * (c0 + c1 M / scale)` for wealth `M ~ wealth` in
/// data units.
pub fn implied_income_cdf(params: &ModelParameters, wealth: &WeightFunction, scale: f64) -> Result<ImpliedIncome> {
    let map = params.income_map()?;
    if map.slope == 0.0 {
        return Err(Error::DegenerateIncome);
    }
    Ok(ImpliedIncome { wealth: *wealth, intercept: scale * map.intercept, slope: map.slope })
}

/// Unit multiplier that maps model per-household wealth onto the data mean.
pub fn rescale(params: &ModelParameters, nw: usize, data_mean_wealth: f64) -> Result<f64> {
    let total = constant_sum(params, nw)?;
    if !(total > 0.0) {
        return Err(Error::Domain(format!("constant sum {total} cannot be rescaled")));
    }
    Ok(data_mean_wealth / (total / nw as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedParameters {
    pub r: f64,
    pub delta: f64,
    pub k: f64,
}

impl From<&ModelParameters> for FixedParameters {
    fn from(p: &ModelParameters) -> Self {
        Self { r: p.r, delta: p.delta, k: p.k }
    }
}

/// Search box. `alpha0` is searched on a log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterBounds {
    pub alpha0: (f64, f64),
    pub alpha1: (f64, f64),
    pub alpha2: (f64, f64),
}

impl Default for ParameterBounds {
    fn default() -> Self {
        Self { alpha0: (1e-6, 1.0), alpha1: (0.4, 0.95), alpha2: (0.001, 0.2) }
    }
}

pub const DEFAULT_STARTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationProblem {
    pub wealth_fit: WeightFunction,
    pub income_table: PercentileTable,
    pub fixed: FixedParameters,
    pub bounds: ParameterBounds,
    pub starts: usize,
    pub seed: u64,
    /// Unit label of the wealth data, compared against the income table's.
    pub wealth_unit: Option<String>,
}

impl EstimationProblem {
    pub fn new(wealth_fit: WeightFunction, income_table: PercentileTable, fixed: FixedParameters) -> Self {
        Self {
            wealth_fit,
            income_table,
            fixed,
            bounds: ParameterBounds::default(),
            starts: DEFAULT_STARTS,
            seed: 0,
            wealth_unit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curvature {
    pub coordinate: &'static str,
    pub second_derivative: f64,
}

/// Local shape of the objective at the optimum, in search coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flatness {
    pub diagonal: Vec<Curvature>,
    /// Hessian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues below a millionth of the largest.
    pub flat_directions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationReport {
    pub params: ModelParameters,
    pub scale: f64,
    pub residual: f64,
    pub starts: usize,
    /// Index of the start that produced the reported optimum.
    pub best_start: usize,
    pub flatness: Flatness,
    /// `scale * alpha0 / (1 - alpha1)`, identified by the data.
    pub income_intercept: f64,
    /// `alpha2 / (1 - alpha1) - r`, identified by the data.
    pub income_slope: f64,
    /// `k alpha0 / D` in model units.
    pub wealth_per_household: f64,
    pub warnings: Vec<String>,
}

const COORDS: [&str; 4] = ["alpha0", "alpha1", "alpha2", "scale"];

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(v: f64) -> f64 {
    (v / (1.0 - v)).ln()
}

struct Search<'a> {
    problem: &'a EstimationProblem,
}

impl Search<'_> {
    fn params(&self, x: &[f64]) -> (ModelParameters, f64) {
        let b = &self.problem.bounds;
        let boxed = |(lo, hi): (f64, f64), u: f64| lo + (hi - lo) * logistic(u);
        let (l0, h0) = (b.alpha0.0.ln(), b.alpha0.1.ln());
        let f = &self.problem.fixed;
        let p = ModelParameters {
            alpha0: boxed((l0, h0), x[0]).exp(),
            alpha1: boxed(b.alpha1, x[1]),
            alpha2: boxed(b.alpha2, x[2]),
            r: f.r,
            delta: f.delta,
            k: f.k,
            gamma_adj: 0.0,
        };
        (p, x[3].exp())
    }

    fn coordinates(&self, p: &ModelParameters, scale: f64) -> Vec<f64> {
        let b = &self.problem.bounds;
        let unbox = |(lo, hi): (f64, f64), v: f64| logit((v - lo) / (hi - lo));
        vec![
            unbox((b.alpha0.0.ln(), b.alpha0.1.ln()), p.alpha0.ln()),
            unbox(b.alpha1, p.alpha1),
            unbox(b.alpha2, p.alpha2),
            scale.ln(),
        ]
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let (p, scale) = self.params(x);
        if !(p.denominator() > 0.0) {
            return f64::INFINITY;
        }
        let Ok(implied) = implied_income_cdf(&p, &self.problem.wealth_fit, scale) else {
            return f64::INFINITY;
        };
        let v: f64 = self.problem.income_table.rows().iter().map(|&(pr, q)| (implied.cdf(q) - pr).powi(2)).sum();
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }

    /// Random feasible start, with the scale matched at the income median.
    fn start<R: Rng>(&self, rng: &mut R) -> Option<Vec<f64>> {
        let b = &self.problem.bounds;
        let f = &self.problem.fixed;
        let rows = self.problem.income_table.rows();
        let (_, income_mid) = rows[rows.len() / 2];
        let p_mid = rows[rows.len() / 2].0;
        let wealth_mid = self.problem.wealth_fit.quantile(p_mid).ok()?;
        for _ in 0..1000 {
            let p = ModelParameters {
                alpha0: (b.alpha0.0.ln() + rng.random::<f64>() * (b.alpha0.1.ln() - b.alpha0.0.ln())).exp(),
                alpha1: b.alpha1.0 + rng.random::<f64>() * (b.alpha1.1 - b.alpha1.0),
                alpha2: b.alpha2.0 + rng.random::<f64>() * (b.alpha2.1 - b.alpha2.0),
                r: f.r,
                delta: f.delta,
                k: f.k,
                gamma_adj: 0.0,
            };
            if !(p.denominator() > 0.0) {
                continue;
            }
            let map = p.income_map().ok()?;
            let matched = (income_mid - map.slope * wealth_mid) / map.intercept;
            let scale = if matched > 0.0 && matched.is_finite() { matched } else { 1.0 };
            return Some(self.coordinates(&p, scale));
        }
        None
    }

    /// Central-difference Hessian.
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let h = 1e-3;
        let at = |di: (usize, f64), dj: (usize, f64)| {
            let mut y = x.to_vec();
            y[di.0] += di.1;
            y[dj.0] += dj.1;
            self.objective(&y)
        };
        let f0 = self.objective(x);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = (at((i, h), (i, 0.0)) - 2.0 * f0 + at((i, -h), (i, 0.0))) / (h * h);
            for j in 0..i {
                let v = (at((i, h), (j, h)) - at((i, h), (j, -h)) - at((i, -h), (j, h)) + at((i, -h), (j, -h))) / (4.0 * h * h);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

/// Relative curvature below which a search direction is reported flat.
const FLAT_RATIO: f64 = 1e-6;

/// Least-squares match of the implied income cdf to the income table over
/// `(alpha0, alpha1, alpha2, scale)` from seeded multistarts. The optimum
/// with the smallest residual wins, ties going to the earlier start.
pub fn estimate_parameters(problem: &EstimationProblem) -> Result<EstimationReport> {
    if problem.starts == 0 {
        return Err(Error::ParameterDomain("need at least one start".into()));
    }
    let search = Search { problem };
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let starts: Vec<Vec<f64>> = (0..problem.starts).filter_map(|_| search.start(&mut rng)).collect();
    if starts.is_empty() {
        return Err(Error::EstimationInfeasible);
    }
    let opts = SearchOptions { max_evals: 20_000, f_tol: 1e-28, x_tol: 1e-10, restarts: 3 };
    let results: Vec<_> = starts
        .par_iter()
        .map(|x0| nelder_mead(|x| search.objective(x), x0, &[0.5, 0.3, 0.3, 0.3], opts))
        .collect();
    let (best_start, best) = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.value.is_finite())
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .ok_or(Error::EstimationInfeasible)?;
    let (params, scale) = search.params(&best.x);

    let hess = search.hessian(&best.x);
    let diagonal = COORDS
        .iter()
        .enumerate()
        .map(|(i, &coordinate)| Curvature { coordinate, second_derivative: hess[(i, i)] })
        .collect();
    let mut eigenvalues: Vec<f64> = hess.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let top = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let flat_directions = eigenvalues.iter().filter(|v| !(v.abs() > FLAT_RATIO * top)).count();
    let flatness = Flatness { diagonal, eigenvalues, flat_directions };

    let mut warnings = Vec::new();
    if flat_directions > 0 {
        warnings.push(format!(
            "objective is flat along {flat_directions} of 4 search directions; the data identify scale*alpha0/(1-alpha1) and alpha2/(1-alpha1), not each parameter"
        ));
    }
    if let (Some(w), Some(i)) = (&problem.wealth_unit, &problem.income_table.unit) {
        if w != i {
            warnings.push(format!("unit mismatch: wealth in `{w}`, income in `{i}`"));
        }
    }

    let map = params.income_map()?;
    Ok(EstimationReport {
        params,
        scale,
        residual: best.value,
        starts: starts.len(),
        best_start,
        flatness,
        income_intercept: scale * map.intercept,
        income_slope: map.slope,
        wealth_per_household: params.k * params.alpha0 / params.denominator(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: ModelParameters = ModelParameters::REFERENCE;

    fn grid() -> Vec<f64> {
        (1..100).map(|i| i as f64 / 100.0).collect()
    }

    #[test]
    fn reference_map_coefficients() {
        let w = WeightFunction::lognormal(1.72, 4.64e4).unwrap();
        let scale = 9.25e4;
        let inc = implied_income_cdf(&P, &w, scale).unwrap();
        assert!((inc.slope - 0.05).abs() < 1e-15);
        for x in [1e3, 5e3, 2e4, 1e5] {
            let expect = w.cdf((x - 0.004 * scale) / 0.05);
            assert!((inc.cdf(x) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_income_is_degenerate() {
        let p = ModelParameters { alpha2: P.r * (1.0 - P.alpha1), ..P };
        let w = WeightFunction::gamma(2.0, 1.0).unwrap();
        assert_eq!(implied_income_cdf(&p, &w, 1.0), Err(Error::DegenerateIncome));
    }

    #[test]
    fn near_point_mass_gives_step() {
        let w = WeightFunction::lognormal(1e-9, 3.0).unwrap();
        let inc = implied_income_cdf(&P, &w, 1.0).unwrap();
        let step = 0.004 + 0.05 * 3.0;
        assert!(inc.cdf(step * (1.0 - 1e-6)) < 1e-6);
        assert!(inc.cdf(step * (1.0 + 1e-6)) > 1.0 - 1e-6);
    }

    #[test]
    fn quantiles_commute_with_the_map() {
        let w = WeightFunction::gamma(1.46, 1.55e4).unwrap();
        let inc = implied_income_cdf(&P, &w, 7.0).unwrap();
        for p in [0.05, 0.3, 0.5, 0.9, 0.99] {
            let q = inc.quantile(p).unwrap();
            assert!((q - (7.0 * 0.004 + 0.05 * w.quantile(p).unwrap())).abs() < 1e-9 * q);
            assert!((inc.cdf(q) - p).abs() < 1e-9);
        }
        let neg = ModelParameters { alpha2: 0.001, ..P };
        let inc = implied_income_cdf(&neg, &w, 7.0).unwrap();
        assert!(inc.slope < 0.0);
        for p in [0.1, 0.5, 0.9] {
            assert!((inc.cdf(inc.quantile(p).unwrap()) - p).abs() < 1e-9);
        }
    }

    #[test]
    fn rescale_examples() {
        let s = rescale(&P, 100, 2.036e5).unwrap();
        assert!((s - 2.036e5 / 2.2).abs() < 1e-6 * s);
        assert!((rescale(&P, 3, 2.2).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(rescale(&ModelParameters { alpha0: 0.0, ..P }, 5, 1.0), Err(Error::Domain(_))));
    }

    fn self_consistent_problem() -> (EstimationProblem, f64) {
        let wealth = WeightFunction::lognormal(1.72, 4.64e4).unwrap();
        let scale = rescale(&P, 1, wealth.mean().unwrap()).unwrap();
        let implied = implied_income_cdf(&P, &wealth, scale).unwrap();
        let rows = grid().into_iter().map(|p| (p, implied.quantile(p).unwrap())).collect();
        let table = PercentileTable::new(rows).unwrap();
        (EstimationProblem::new(wealth, table, FixedParameters::from(&P)), scale)
    }

    #[test]
    fn zero_noise_table_is_fitted_exactly() {
        let (problem, scale) = self_consistent_problem();
        let search = Search { problem: &problem };
        let x = search.coordinates(&P, scale);
        assert!(search.objective(&x) < 1e-10);
        let report = estimate_parameters(&problem).unwrap();
        assert!(report.residual <= 1e-10, "{}", report.residual);
        assert_eq!(report.starts, DEFAULT_STARTS);
    }

    #[test]
    fn identified_combinations_are_recovered() {
        let (problem, scale) = self_consistent_problem();
        let report = estimate_parameters(&problem).unwrap();
        let map = P.income_map().unwrap();
        assert!((report.income_slope / map.slope - 1.0).abs() < 1e-3);
        assert!((report.income_intercept / (scale * map.intercept) - 1.0).abs() < 1e-3);
        assert_eq!(report.flatness.flat_directions, 2, "{:?}", report.flatness);
        assert!(!report.warnings.is_empty());
    }

    #[test]
    fn doubling_income_doubles_scale() {
        let (problem, _) = self_consistent_problem();
        let a = estimate_parameters(&problem).unwrap();
        let doubled = EstimationProblem {
            income_table: problem.income_table.scaled(2.0),
            wealth_fit: problem.wealth_fit.rescaled(2.0),
            ..problem.clone()
        };
        let b = estimate_parameters(&doubled).unwrap();
        assert!((b.income_intercept / a.income_intercept - 2.0).abs() < 1e-3);
        assert!((b.income_slope / a.income_slope - 1.0).abs() < 1e-3);
    }

    #[test]
    fn deterministic_given_seed() {
        let (problem, _) = self_consistent_problem();
        assert_eq!(estimate_parameters(&problem).unwrap(), estimate_parameters(&problem).unwrap());
    }

    #[test]
    fn infeasible_box_is_reported() {
        let (mut problem, _) = self_consistent_problem();
        problem.bounds.alpha2 = (0.5, 0.9);
        assert_eq!(estimate_parameters(&problem), Err(Error::EstimationInfeasible));
    }

    #[test]
    fn unit_mismatch_warns() {
        let (mut problem, _) = self_consistent_problem();
        problem.wealth_unit = Some("EUR".into());
        problem.income_table = problem.income_table.clone().with_metadata(None, None, Some("USD".into()));
        let report = estimate_parameters(&problem).unwrap();
        assert!(report.warnings.iter().any(|w| w.contains("unit mismatch")));
    }
}
