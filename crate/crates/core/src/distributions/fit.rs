use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Family, WeightFunction};
use crate::error::{Error, Result};
use crate::ingest::PercentileTable;
use crate::numeric::simplex_search::{nelder_mead, SearchOptions};

/// A weight function fitted to percentile data, with the final objective
/// value `sum_i (cdf(q_i) - p_i)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedDistribution {
    pub weight: WeightFunction,
    pub residual: Option<f64>,
}

impl FittedDistribution {
    pub fn to_kv(&self) -> String {
        let mut s = self.weight.to_kv();
        if let Some(r) = self.residual {
            s.push_str(&format!("residual = {r}\n"));
        }
        s
    }

    /// Reads the key-value form written by [`FittedDistribution::to_kv`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| Error::KeyValue {
                line: idx + 1,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            kv.insert(k.trim().to_string(), (idx + 1, v.trim().to_string()));
        }
        let num = |key: &str| -> Result<f64> {
            let (line, v) = kv.get(key).ok_or_else(|| Error::KeyValue { line: 0, message: format!("missing key `{key}`") })?;
            v.parse::<f64>().map_err(|_| Error::KeyValue { line: *line, message: format!("`{v}` is not a number") })
        };
        let opt = |key: &str| -> Result<Option<f64>> { if kv.contains_key(key) { num(key).map(Some) } else { Ok(None) } };
        let family: Family = kv
            .get("family")
            .ok_or_else(|| Error::KeyValue { line: 0, message: "missing key `family`".into() })?
            .1
            .parse()?;
        let weight = match family {
            Family::Gamma => WeightFunction::gamma(num("shape")?, num("scale")?)?,
            Family::LogNormal => WeightFunction::lognormal(num("sigma")?, num("scale")?)?,
            Family::PowerLaw => WeightFunction::power_law(num("exponent")?, num("lower")?, opt("upper")?)?,
            Family::Uniform => WeightFunction::uniform(num("upper")?)?,
        };
        Ok(Self { weight, residual: opt("residual")? })
    }
}

type Builder = fn(&[f64]) -> Option<WeightFunction>;

/// Least-squares fit of `family` to the table's (percentile, threshold) rows.
pub fn fit_to_percentiles(table: &PercentileTable, family: Family) -> Result<FittedDistribution> {
    fit_points(table.rows(), family)
}

/// Fits `family` to `(p, q)` pairs by minimizing `sum (cdf(q) - p)^2` with a
/// simplex search over log-parameters, started from moment matching.
pub fn fit_points(points: &[(f64, f64)], family: Family) -> Result<FittedDistribution> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut distinct = pts.iter().map(|p| p.1).collect::<Vec<_>>();
    distinct.dedup();
    if pts.len() < 3 || distinct.len() < 3 {
        return Err(Error::FitDegenerate(format!(
            "need at least 3 distinct thresholds, got {} rows with {} distinct values",
            pts.len(),
            distinct.len()
        )));
    }
    if pts.iter().any(|(p, q)| !(p.is_finite() && q.is_finite() && *p > 0.0 && *p < 1.0)) {
        return Err(Error::FitDegenerate("percentiles must lie in (0, 1) and thresholds be finite".into()));
    }

    let (start, build): (Vec<f64>, Builder) = match family {
        Family::Gamma => {
            let (mean, var) = table_moments(&pts)?;
            let shape = mean * mean / var;
            let scale = var / mean;
            (vec![shape.ln(), scale.ln()], |x| WeightFunction::gamma(x[0].exp(), x[1].exp()).ok())
        }
        Family::LogNormal => {
            let (mean, var) = table_moments(&pts)?;
            let s2 = (1.0 + var / (mean * mean)).ln();
            let scale = mean * (-0.5 * s2).exp();
            (vec![0.5 * s2.ln(), scale.ln()], |x| WeightFunction::lognormal(x[0].exp(), x[1].exp()).ok())
        }
        Family::PowerLaw => {
            let (exponent, lower) = pareto_start(&pts)?;
            (vec![(exponent - 1.0).ln(), lower.ln()], |x| WeightFunction::power_law(1.0 + x[0].exp(), x[1].exp(), None).ok())
        }
        Family::Uniform => return Err(Error::FitDegenerate("the uniform weight is not a fittable family".into())),
    };

    let objective = |x: &[f64]| match build(x) {
        Some(f) => pts.iter().map(|&(p, q)| (f.cdf(q) - p).powi(2)).sum::<f64>(),
        None => f64::INFINITY,
    };
    let opts = SearchOptions { max_evals: 40_000, f_tol: 1e-26, x_tol: 1e-11, restarts: 4 };
    let res = nelder_mead(objective, &start, &[0.3, 0.3], opts);
    let weight = build(&res.x).ok_or_else(|| Error::FitDegenerate("fit left the parameter domain".into()))?;
    Ok(FittedDistribution { weight, residual: Some(res.value) })
}

/// Mean and variance of the table read as a discrete law that puts mass
/// `(p_{i+1} - p_{i-1}) / 2` on threshold `q_i`.
fn table_moments(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = pts.len();
    let p_at = |i: isize| -> f64 {
        if i < 0 {
            0.0
        } else if i as usize >= n {
            1.0
        } else {
            pts[i as usize].0
        }
    };
    let weights: Vec<f64> = (0..n as isize).map(|i| 0.5 * (p_at(i + 1) - p_at(i - 1))).collect();
    let total: f64 = weights.iter().sum();
    let mean = pts.iter().zip(&weights).map(|((_, q), w)| q * w).sum::<f64>() / total;
    let var = pts.iter().zip(&weights).map(|((_, q), w)| w * (q - mean).powi(2)).sum::<f64>() / total;
    if !(mean > 0.0 && var > 0.0) {
        return Err(Error::FitDegenerate(format!("table moments mean {mean}, variance {var} admit no positive fit")));
    }
    Ok((mean, var))
}

/// Regression of `ln(1 - p)` on `ln q`, which is linear for a Pareto law.
fn pareto_start(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    let xy: Vec<(f64, f64)> = pts.iter().filter(|(_, q)| *q > 0.0).map(|&(p, q)| (q.ln(), (1.0 - p).ln())).collect();
    if xy.len() < 3 {
        return Err(Error::FitDegenerate("power-law fit needs positive thresholds".into()));
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|v| v.0).sum::<f64>() / n;
    let my = xy.iter().map(|v| v.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|v| (v.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
    let slope = sxy / sxx;
    let exponent = (1.0 - slope).max(1.05);
    let intercept = my - slope * mx;
    let min_q = xy.iter().map(|v| v.0).fold(f64::INFINITY, f64::min).exp();
    let lower = (intercept / (exponent - 1.0)).exp().min(min_q);
    Ok((exponent, lower))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (1..100).map(|i| i as f64 / 100.0).collect()
    }

    fn synth(f: &WeightFunction) -> Vec<(f64, f64)> {
        grid().into_iter().map(|p| (p, f.quantile(p).unwrap())).collect()
    }

    #[test]
    fn gamma_round_trip() {
        let truth = WeightFunction::gamma(1.46, 1.55e4).unwrap();
        let fit = fit_points(&synth(&truth), Family::Gamma).unwrap();
        let WeightFunction::Gamma { shape, scale } = fit.weight else { panic!() };
        assert!((shape / 1.46 - 1.0).abs() < 0.01, "{shape}");
        assert!((scale / 1.55e4 - 1.0).abs() < 0.01, "{scale}");
        assert!(fit.residual.unwrap() < 1e-12);
    }

    #[test]
    fn lognormal_round_trip() {
        let truth = WeightFunction::lognormal(1.72, 4.64e4).unwrap();
        let fit = fit_points(&synth(&truth), Family::LogNormal).unwrap();
        let WeightFunction::LogNormal { sigma, scale } = fit.weight else { panic!() };
        assert!((sigma / 1.72 - 1.0).abs() < 0.01, "{sigma}");
        assert!((scale / 4.64e4 - 1.0).abs() < 0.01, "{scale}");
    }

    #[test]
    fn power_law_round_trip() {
        let truth = WeightFunction::power_law(2.5, 3.0, None).unwrap();
        let fit = fit_points(&synth(&truth), Family::PowerLaw).unwrap();
        let WeightFunction::PowerLaw { exponent, lower, .. } = fit.weight else { panic!() };
        assert!((exponent / 2.5 - 1.0).abs() < 0.01, "{exponent}");
        assert!((lower / 3.0 - 1.0).abs() < 0.01, "{lower}");
    }

    #[test]
    fn two_points_are_degenerate() {
        let e = fit_points(&[(0.5, 1.0), (0.9, 3.0)], Family::Gamma);
        assert!(matches!(e, Err(Error::FitDegenerate(_))));
        let flat = fit_points(&[(0.2, 1.0), (0.5, 1.0), (0.9, 1.0)], Family::LogNormal);
        assert!(matches!(flat, Err(Error::FitDegenerate(_))));
    }

    #[test]
    fn scale_equivariance() {
        let truth = WeightFunction::gamma(2.3, 7.0).unwrap();
        let pts = vec![(0.1, truth.quantile(0.1).unwrap()), (0.5, truth.quantile(0.5).unwrap() * 1.03), (0.9, truth.quantile(0.9).unwrap())];
        let a = fit_points(&pts, Family::Gamma).unwrap();
        let c = 37.5;
        let scaled: Vec<_> = pts.iter().map(|&(p, q)| (p, q * c)).collect();
        let b = fit_points(&scaled, Family::Gamma).unwrap();
        let (WeightFunction::Gamma { shape: sa, scale: ta }, WeightFunction::Gamma { shape: sb, scale: tb }) = (a.weight, b.weight) else {
            panic!()
        };
        assert!((sa - sb).abs() < 1e-6 * sa, "{sa} {sb}");
        assert!((tb / (c * ta) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn kv_round_trip() {
        let fit = FittedDistribution { weight: WeightFunction::lognormal(1.72, 46400.0).unwrap(), residual: Some(1.5e-9) };
        assert_eq!(FittedDistribution::parse(&fit.to_kv()).unwrap(), fit);
        let pl = FittedDistribution { weight: WeightFunction::power_law(2.5, 1.0, Some(1e4)).unwrap(), residual: None };
        assert_eq!(FittedDistribution::parse(&pl.to_kv()).unwrap(), pl);
        assert!(FittedDistribution::parse("family = gamma\nshape = 2\n").is_err());
    }
}
