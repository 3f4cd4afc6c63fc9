use std::fmt;

use num_rational::BigRational;
use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

use super::params::ModelParameters;
use crate::error::{Error, Result};

/// One unknown of the steady-state system. Household indices are 0-based
/// internally and printed 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variable {
    ConsumptionSupply,
    Capital,
    Loans,
    InvestmentSupply,
    InvestmentDemand,
    Depreciation,
    /// Target level of the investment function; equals depreciation in the
    /// steady state.
    InvestmentTarget,
    ConsumptionDemand(usize),
    WageIncome(usize),
    Deposits(usize),
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::ConsumptionSupply => f.write_str("Cs"),
            Variable::Capital => f.write_str("K"),
            Variable::Loans => f.write_str("L"),
            Variable::InvestmentSupply => f.write_str("Is"),
            Variable::InvestmentDemand => f.write_str("Id"),
            Variable::Depreciation => f.write_str("AF"),
            Variable::InvestmentTarget => f.write_str("Id_target"),
            Variable::ConsumptionDemand(i) => write!(f, "Cd_{}", i + 1),
            Variable::WageIncome(i) => write!(f, "WBs_{}", i + 1),
            Variable::Deposits(i) => write!(f, "M_{}", i + 1),
        }
    }
}

pub(crate) const AGGREGATES: usize = 7;

/// Column layout: the seven aggregates, then `Cd_i`, `WBs_i`, `M_i` blocks.
pub fn variable_labels(nw: usize) -> Vec<Variable> {
    let mut v = vec![
        Variable::ConsumptionSupply,
        Variable::Capital,
        Variable::Loans,
        Variable::InvestmentSupply,
        Variable::InvestmentDemand,
        Variable::Depreciation,
        Variable::InvestmentTarget,
    ];
    v.extend((0..nw).map(Variable::ConsumptionDemand));
    v.extend((0..nw).map(Variable::WageIncome));
    v.extend((0..nw).map(Variable::Deposits));
    v
}

pub fn column_of(var: Variable, nw: usize) -> usize {
    match var {
        Variable::ConsumptionSupply => 0,
        Variable::Capital => 1,
        Variable::Loans => 2,
        Variable::InvestmentSupply => 3,
        Variable::InvestmentDemand => 4,
        Variable::Depreciation => 5,
        Variable::InvestmentTarget => 6,
        Variable::ConsumptionDemand(i) => AGGREGATES + i,
        Variable::WageIncome(i) => AGGREGATES + nw + i,
        Variable::Deposits(i) => AGGREGATES + 2 * nw + i,
    }
}

/// The steady-state accounting and behavioral identities as a linear system
/// `matrix * x = rhs` over the unknowns in `labels`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateSystem {
    pub matrix: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub labels: Vec<Variable>,
    pub row_names: Vec<String>,
    pub nw: usize,
    pub alpha0s: Vec<f64>,
    pub params: ModelParameters,
}

impl SteadyStateSystem {
    pub fn build(params: &ModelParameters, nw: usize) -> Result<Self> {
        if nw == 0 {
            return Err(Error::ParameterDomain("nw must be at least 1".into()));
        }
        Self::build_heterogeneous(params, &vec![params.alpha0; nw])
    }

    /// Same system with household-specific autonomous consumption.
    pub fn build_heterogeneous(params: &ModelParameters, alpha0s: &[f64]) -> Result<Self> {
        params.validate()?;
        let nw = alpha0s.len();
        if nw == 0 {
            return Err(Error::ParameterDomain("nw must be at least 1".into()));
        }
        if alpha0s.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::ParameterDomain("household alpha0 must be finite and nonnegative".into()));
        }
        let coeffs = Coefficients {
            alpha1: params.alpha1,
            alpha2: params.alpha2,
            r: params.r,
            delta: params.delta,
            k: params.k,
        };
        let (matrix, rhs, row_names) = assemble(&coeffs, alpha0s);
        Ok(Self { matrix, rhs, labels: variable_labels(nw), row_names, nw, alpha0s: alpha0s.to_vec(), params: *params })
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn unknowns(&self) -> usize {
        self.labels.len()
    }

    /// The same system with every coefficient converted exactly from its
    /// binary floating-point value into a rational, assembled in rational
    /// arithmetic. Used to cross-check the floating-point reduction.
    pub fn exact_augmented(&self) -> Vec<Vec<BigRational>> {
        let q = |v: f64| BigRational::from_f64(v).expect("finite parameter");
        let p = &self.params;
        let coeffs = Coefficients { alpha1: q(p.alpha1), alpha2: q(p.alpha2), r: q(p.r), delta: q(p.delta), k: q(p.k) };
        let alpha0s: Vec<BigRational> = self.alpha0s.iter().map(|&a| q(a)).collect();
        let (m, rhs, _) = assemble(&coeffs, &alpha0s);
        m.into_iter()
            .zip(rhs)
            .map(|(mut row, b)| {
                row.push(b);
                row
            })
            .collect()
    }

    /// Coefficient rows with the right-hand side appended.
    pub fn augmented(&self) -> Vec<Vec<f64>> {
        self.matrix
            .iter()
            .zip(&self.rhs)
            .map(|(row, &b)| {
                let mut r = row.clone();
                r.push(b);
                r
            })
            .collect()
    }
}

struct Coefficients<T> {
    alpha1: T,
    alpha2: T,
    r: T,
    delta: T,
    k: T,
}

/// Rows follow the order of the two-household presentation: goods market,
/// investment, firm current account, depreciation, firm capital account,
/// household budgets, consumption functions, investment function, capital
/// target, firm and aggregate balance sheets.
fn assemble<T>(c: &Coefficients<T>, alpha0s: &[T]) -> (Vec<Vec<T>>, Vec<T>, Vec<String>)
where
    T: Num + Clone + std::ops::Neg<Output = T>,
{
    let nw = alpha0s.len();
    let n = AGGREGATES + 3 * nw;
    let one = T::one;
    let col = |v: Variable| column_of(v, nw);

    let mut rows: Vec<(Vec<T>, T, String)> = Vec::new();
    let mut push = |entries: Vec<(usize, T)>, rhs: T, name: String| {
        let mut row = vec![T::zero(); n];
        for (j, v) in entries {
            row[j] = row[j].clone() + v;
        }
        rows.push((row, rhs, name));
    };

    use Variable::*;
    let mut goods = vec![(col(ConsumptionSupply), one())];
    goods.extend((0..nw).map(|i| (col(ConsumptionDemand(i)), -one())));
    push(goods, T::zero(), "goods market: Cs = sum Cd_i".into());

    push(vec![(col(InvestmentSupply), one()), (col(InvestmentDemand), -one())], T::zero(), "investment: Is = Id".into());

    let mut firm = vec![
        (col(ConsumptionSupply), -one()),
        (col(Loans), c.r.clone()),
        (col(InvestmentSupply), -one()),
        (col(Depreciation), one()),
    ];
    firm.extend((0..nw).map(|i| (col(WageIncome(i)), one())));
    push(firm, T::zero(), "firm current account: Cs + Is = sum WBs_i + AF + r L".into());

    push(vec![(col(Capital), -c.delta.clone()), (col(Depreciation), one())], T::zero(), "depreciation: AF = delta K".into());
    push(vec![(col(InvestmentDemand), one()), (col(Depreciation), -one())], T::zero(), "firm capital account: Id = AF".into());

    for i in 0..nw {
        push(
            vec![(col(ConsumptionDemand(i)), -one()), (col(WageIncome(i)), one()), (col(Deposits(i)), c.r.clone())],
            T::zero(),
            format!("household {} budget: Cd = WBs + r M", i + 1),
        );
    }
    for (i, a0) in alpha0s.iter().enumerate() {
        push(
            vec![
                (col(ConsumptionDemand(i)), -one()),
                (col(WageIncome(i)), c.alpha1.clone()),
                (col(Deposits(i)), c.r.clone() * c.alpha1.clone() + c.alpha2.clone()),
            ],
            -a0.clone(),
            format!("household {} consumption function", i + 1),
        );
    }

    push(
        vec![(col(InvestmentDemand), one()), (col(InvestmentTarget), -one())],
        T::zero(),
        "investment demand meets target".into(),
    );
    push(
        vec![(col(Capital), -c.delta.clone()), (col(InvestmentTarget), one())],
        T::zero(),
        "steady-state investment target: delta K".into(),
    );
    push(
        vec![(col(ConsumptionSupply), -c.k.clone()), (col(Capital), one()), (col(InvestmentSupply), -c.k.clone())],
        T::zero(),
        "capital target: K = k (Cs + Is)".into(),
    );
    push(vec![(col(Capital), one()), (col(Loans), -one())], T::zero(), "firm balance sheet: K = L".into());
    let mut wealth = vec![(col(Capital), one())];
    wealth.extend((0..nw).map(|i| (col(Deposits(i)), -one())));
    push(wealth, T::zero(), "aggregate balance sheet: K = sum M_i".into());

    let mut matrix = Vec::with_capacity(rows.len());
    let mut rhs = Vec::with_capacity(rows.len());
    let mut names = Vec::with_capacity(rows.len());
    for (row, b, name) in rows {
        matrix.push(row);
        rhs.push(if b.is_zero() { T::zero() } else { b });
        names.push(name);
    }
    (matrix, rhs, names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_household_shape() {
        let s = SteadyStateSystem::build(&ModelParameters::REFERENCE, 2).unwrap();
        assert_eq!(s.rows(), 14);
        assert_eq!(s.unknowns(), 13);
        assert_eq!(s.labels[12].to_string(), "M_2");
    }

    #[test]
    fn row_count_scales_with_households() {
        for nw in [1, 3, 10] {
            let s = SteadyStateSystem::build(&ModelParameters::REFERENCE, nw).unwrap();
            assert_eq!(s.rows(), 10 + 2 * nw);
            assert_eq!(s.unknowns(), 7 + 3 * nw);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let bad = ModelParameters { alpha1: 1.2, ..ModelParameters::REFERENCE };
        assert!(matches!(SteadyStateSystem::build(&bad, 2), Err(Error::ParameterDomain(_))));
        assert!(SteadyStateSystem::build(&ModelParameters::REFERENCE, 0).is_err());
    }

    #[test]
    fn exact_matches_float_assembly() {
        let s = SteadyStateSystem::build(&ModelParameters::REFERENCE, 2).unwrap();
        let exact = s.exact_augmented();
        for (er, fr) in exact.iter().zip(s.augmented()) {
            for (e, f) in er.iter().zip(fr) {
                let e: f64 = num_traits::ToPrimitive::to_f64(e).unwrap();
                assert!((e - f).abs() <= 1e-17, "{e} vs {f}");
            }
        }
    }
}
