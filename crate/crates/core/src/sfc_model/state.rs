use std::io::Write;

use serde::Serialize;

use super::params::ModelParameters;
use super::reduce::ReducedSystem;
use super::system::{column_of, Variable};
use crate::error::{Error, Result};

/// A full steady-state assignment of every model variable.
#[derive(Debug, Clone, PartialEq)]
pub struct EconomicState {
    pub labels: Vec<Variable>,
    pub values: Vec<f64>,
    pub nw: usize,
}

impl EconomicState {
    pub fn get(&self, var: Variable) -> f64 {
        self.values[column_of(var, self.nw)]
    }

    pub fn set(&mut self, var: Variable, value: f64) {
        let c = column_of(var, self.nw);
        self.values[c] = value;
    }

    pub fn deposits(&self) -> &[f64] {
        let start = column_of(Variable::Deposits(0), self.nw);
        &self.values[start..start + self.nw]
    }

    pub fn zero(nw: usize) -> Self {
        let labels = super::system::variable_labels(nw);
        let values = vec![0.0; labels.len()];
        Self { labels, values, nw }
    }

    /// Header row of labels followed by one row of values.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        writeln!(out, "{}", header.join(","))?;
        let row: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(","))
    }
}

impl ReducedSystem {
    /// Back-substitutes a wealth vector through the reduced system.
    pub fn recover(&self, deposits: &[f64]) -> Result<EconomicState> {
        let nw = self.nw;
        if deposits.len() != nw {
            return Err(Error::InfeasibleWealth(format!("expected {nw} deposits, got {}", deposits.len())));
        }
        if let Some((i, v)) = deposits.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InfeasibleWealth(format!("M_{} = {v} is not a nonnegative number", i + 1)));
        }
        let target = self.constant_sum_row.rhs;
        let sum: f64 = deposits.iter().sum();
        if (sum - target).abs() > 1e-8 * target.abs() {
            return Err(Error::InfeasibleWealth(format!("sum of deposits {sum} differs from the constant sum {target}")));
        }

        let n = self.labels.len();
        let mut values = vec![0.0; n];
        for &c in &self.free_columns {
            values[c] = deposits[c - column_of(Variable::Deposits(0), nw)];
        }
        for (row, &p) in self.rref.iter().zip(&self.pivot_columns) {
            let mut v = row[n];
            for &f in &self.free_columns {
                v -= row[f] * values[f];
            }
            values[p] = v;
        }
        Ok(EconomicState { labels: self.labels.clone(), values, nw })
    }
}

/// `recover` as a free function.
pub fn recover_all_variables(reduced: &ReducedSystem, deposits: &[f64]) -> Result<EconomicState> {
    reduced.recover(deposits)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Identity {
    pub name: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub identities: Vec<Identity>,
    pub tolerance: f64,
    pub passed: bool,
}

impl BalanceReport {
    pub fn failures(&self) -> impl Iterator<Item = &Identity> {
        self.identities.iter().filter(move |i| !(i.residual.abs() < self.tolerance))
    }

    pub fn max_residual(&self) -> f64 {
        self.identities.iter().map(|i| i.residual.abs()).fold(0.0, f64::max)
    }
}

pub fn verify_balance(state: &EconomicState, params: &ModelParameters) -> BalanceReport {
    verify_balance_heterogeneous(state, params, &vec![params.alpha0; state.nw])
}

/// Evaluates every row and column of the transaction matrix and the balance
/// sheet, plus the behavioral equations, on `state`. Flows that are identical
/// by construction (interest on deposits equals `r M_i`, wage demand equals
/// the sum of wage supplies) are folded in rather than listed.
pub fn verify_balance_heterogeneous(state: &EconomicState, params: &ModelParameters, alpha0s: &[f64]) -> BalanceReport {
    use Variable::*;
    let nw = state.nw;
    let g = |v: Variable| state.get(v);
    let m: Vec<f64> = (0..nw).map(|i| g(Deposits(i))).collect();
    let sum_m: f64 = m.iter().sum();
    let sum_cd: f64 = (0..nw).map(|i| g(ConsumptionDemand(i))).sum();
    let sum_wb: f64 = (0..nw).map(|i| g(WageIncome(i))).sum();
    let (r, k, delta) = (params.r, params.k, params.delta);
    let loans = g(Loans);
    let interest_on_loans = r * loans;
    let interest_on_deposits: f64 = m.iter().map(|v| r * v).sum();

    let mut ids = Vec::new();
    let mut add = |name: String, residual: f64| ids.push(Identity { name, residual });

    // transaction matrix, rows
    add("row consumption: sum Cd_i - Cs".into(), sum_cd - g(ConsumptionSupply));
    add("row investment: Is - Id".into(), g(InvestmentSupply) - g(InvestmentDemand));
    // transaction matrix, columns
    for (i, &mi) in m.iter().enumerate().take(nw) {
        // the household column is also the change in its deposits
        add(
            format!("column household {}: WBs + ID - Cd - dM", i + 1),
            g(WageIncome(i)) + r * mi - g(ConsumptionDemand(i)),
        );
    }
    add(
        "column firm current: Cs + Is - WBd - AF - IL".into(),
        g(ConsumptionSupply) + g(InvestmentSupply) - sum_wb - g(Depreciation) - interest_on_loans,
    );
    add("column firm capital: AF - Id + dL".into(), g(Depreciation) - g(InvestmentDemand));
    add("column bank current: IL - sum ID_i".into(), interest_on_loans - interest_on_deposits);
    // balance sheet
    add("balance firm: K - L".into(), g(Capital) - loans);
    add("balance bank: L - sum M_i".into(), loans - sum_m);
    add("balance total: K - sum V_h".into(), g(Capital) - sum_m);
    // behavioral equations
    for i in 0..nw {
        let yd = g(WageIncome(i)) + r * m[i];
        add(
            format!("consumption function household {}", i + 1),
            g(ConsumptionDemand(i)) - (alpha0s[i] + params.alpha1 * yd + params.alpha2 * m[i]),
        );
    }
    add("depreciation: AF - delta K".into(), g(Depreciation) - delta * g(Capital));
    add("investment target: Id_target - delta K".into(), g(InvestmentTarget) - delta * g(Capital));
    add("investment demand: Id - Id_target".into(), g(InvestmentDemand) - g(InvestmentTarget));
    add("capital target: K - k Y".into(), g(Capital) - k * (g(ConsumptionSupply) + g(InvestmentSupply)));

    let tolerance = 1e-9 * sum_m.abs().max(1.0);
    let passed = ids.iter().all(|i| i.residual.abs() < tolerance);
    BalanceReport { identities: ids, tolerance, passed }
}
