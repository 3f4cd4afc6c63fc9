use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Behavioral and technical constants of the banks-money-wages economy.
///
/// `k` doubles as the capital-to-output target of the investment function.
/// `gamma_adj` scales the capital gap in the investment function; that gap is
/// zero in the steady state, so the value is carried but never used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub r: f64,
    pub delta: f64,
    pub k: f64,
    pub gamma_adj: f64,
}

impl ModelParameters {
    /// The parameter set used for the published income comparison.
    pub const REFERENCE: ModelParameters =
        ModelParameters { alpha0: 0.001, alpha1: 0.75, alpha2: 0.02, r: 0.03, delta: 0.1, k: 5.5, gamma_adj: 0.0 };

    /// Stability denominator `(1 - alpha1)(1 - delta k) - k alpha2`.
    pub fn denominator(&self) -> f64 {
        (1.0 - self.alpha1) * (1.0 - self.delta * self.k) - self.k * self.alpha2
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::ParameterDomain(m));
        let all = [self.alpha0, self.alpha1, self.alpha2, self.r, self.delta, self.k, self.gamma_adj];
        if all.iter().any(|v| !v.is_finite()) {
            return fail("non-finite parameter".into());
        }
        if !(self.alpha1 > 0.0 && self.alpha1 < 1.0) {
            return fail(format!("alpha1 = {} not in (0, 1)", self.alpha1));
        }
        if !(self.alpha2 >= 0.0 && self.alpha2 < 1.0) {
            return fail(format!("alpha2 = {} not in [0, 1)", self.alpha2));
        }
        if self.alpha0 < 0.0 {
            return fail(format!("alpha0 = {} is negative", self.alpha0));
        }
        if self.r < 0.0 {
            return fail(format!("r = {} is negative", self.r));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta = {} not in (0, 1)", self.delta));
        }
        if self.k <= 0.0 || self.delta * self.k >= 1.0 {
            return fail(format!("need k > 0 and delta*k < 1 (k = {}, delta*k = {})", self.k, self.delta * self.k));
        }
        let d = self.denominator();
        if d <= 0.0 {
            return fail(format!("D = (1-alpha1)(1-delta k) - k alpha2 = {d} is not positive"));
        }
        Ok(())
    }

    /// Intercept and slope of the affine wealth-to-income map.
    pub fn income_map(&self) -> Result<IncomeMap> {
        let one_minus = 1.0 - self.alpha1;
        if one_minus == 0.0 || !one_minus.is_finite() {
            return Err(Error::ParameterDomain("alpha1 = 1 makes the wealth-income relation singular".into()));
        }
        Ok(IncomeMap {
            intercept: self.alpha0 / one_minus,
            slope: -(self.r * one_minus - self.alpha2) / one_minus,
        })
    }

    /// Wage income of a household holding deposits `m` in the steady state.
    pub fn wealth_to_income(&self, m: f64) -> Result<f64> {
        Ok(self.income_map()?.apply(m))
    }

    /// Parses the flat `key = value` parameter format. Unknown keys are
    /// rejected; `nw` is optional. `#` starts a comment.
    pub fn parse_file(text: &str) -> Result<ParameterFile> {
        let mut p = ModelParameters { gamma_adj: 0.0, ..Self::REFERENCE };
        let mut seen = [false; 6];
        let mut nw = None;
        let mut alpha0_households = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .or_else(|| content.split_once(':'))
                .ok_or_else(|| Error::KeyValue { line, message: format!("expected `key = value`, got `{content}`") })?;
            let key = key.trim();
            let value = value.trim();
            let num = || -> Result<f64> {
                value.parse::<f64>().map_err(|_| Error::KeyValue { line, message: format!("`{value}` is not a number") })
            };
            match key {
                "alpha0" => (p.alpha0, seen[0]) = (num()?, true),
                "alpha1" => (p.alpha1, seen[1]) = (num()?, true),
                "alpha2" => (p.alpha2, seen[2]) = (num()?, true),
                "r" => (p.r, seen[3]) = (num()?, true),
                "delta" => (p.delta, seen[4]) = (num()?, true),
                "k" => (p.k, seen[5]) = (num()?, true),
                "gamma_adj" => p.gamma_adj = num()?,
                "nw" => {
                    nw = Some(value.parse::<usize>().map_err(|_| Error::KeyValue {
                        line,
                        message: format!("nw must be a positive integer, got `{value}`"),
                    })?)
                }
                "alpha0_households" => {
                    let v: std::result::Result<Vec<f64>, _> = value.split(',').map(|s| s.trim().parse::<f64>()).collect();
                    alpha0_households = Some(v.map_err(|_| Error::KeyValue { line, message: "bad alpha0_households list".into() })?);
                }
                other => return Err(Error::KeyValue { line, message: format!("unknown key `{other}`") }),
            }
        }
        const NAMES: [&str; 6] = ["alpha0", "alpha1", "alpha2", "r", "delta", "k"];
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::KeyValue { line: 0, message: format!("missing key `{}`", NAMES[i]) });
        }
        Ok(ParameterFile { params: p, nw, alpha0_households })
    }

    pub fn to_file_string(&self, nw: Option<usize>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "alpha0 = {}", self.alpha0);
        let _ = writeln!(s, "alpha1 = {}", self.alpha1);
        let _ = writeln!(s, "alpha2 = {}", self.alpha2);
        let _ = writeln!(s, "r = {}", self.r);
        let _ = writeln!(s, "delta = {}", self.delta);
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "gamma_adj = {}", self.gamma_adj);
        if let Some(nw) = nw {
            let _ = writeln!(s, "nw = {nw}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterFile {
    pub params: ModelParameters,
    pub nw: Option<usize>,
    pub alpha0_households: Option<Vec<f64>>,
}

/// `WBs = intercept + slope * M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncomeMap {
    pub intercept: f64,
    pub slope: f64,
}

impl IncomeMap {
    pub fn apply(&self, m: f64) -> f64 {
        self.intercept + self.slope * m
    }
}

/// Total household deposits implied by the steady state,
/// `k * nw * alpha0 / D`.
pub fn constant_sum(params: &ModelParameters, nw: usize) -> Result<f64> {
    Ok(params.k * aggregate_output(params, nw)?)
}

/// Aggregate output `nw * alpha0 / D`.
pub fn aggregate_output(params: &ModelParameters, nw: usize) -> Result<f64> {
    let d = params.denominator();
    if !(d > 0.0) {
        return Err(Error::ParameterDomain(format!("D = {d} is not positive")));
    }
    if nw == 0 {
        return Err(Error::ParameterDomain("nw must be at least 1".into()));
    }
    Ok(nw as f64 * params.alpha0 / d)
}

/// Constant sum with household-specific autonomous consumption.
pub fn constant_sum_heterogeneous(params: &ModelParameters, alpha0s: &[f64]) -> Result<f64> {
    let d = params.denominator();
    if !(d > 0.0) {
        return Err(Error::ParameterDomain(format!("D = {d} is not positive")));
    }
    Ok(params.k * alpha0s.iter().sum::<f64>() / d)
}
