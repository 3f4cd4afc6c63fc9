//! Constant-sum (mass transport) analysis of `prod_i f(m_i)` restricted to
//! `sum_i m_i = M` over `L` sites.
//!
//! In the grand-canonical approximation each site has marginal
//! `p(m) = f(m) e^{-mu m} / Z`, with the chemical potential `mu` fixed so
//! that the tilted mean equals the density `rho = M / L`. When `rho` exceeds
//! the mean of a subexponential `f` no such `mu` exists and the excess mass
//! condenses on a single site.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::distributions::{TailClass, WeightFunction};
use crate::error::{Error, Result};
use crate::numeric::quadrature::integrate_half_line;
use crate::numeric::roots::brent;
use crate::numeric::stats;
use crate::sampler::SampleChain;

/// Relative band around `mean(f)` in which a density counts as critical.
pub const CRITICAL_BAND: f64 = 1e-6;

const QUAD_TOL: f64 = 1e-13;

/// Mass per site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub rho: f64,
}

impl Density {
    pub fn new(rho: f64) -> Result<Self> {
        if rho.is_finite() && rho > 0.0 {
            Ok(Self { rho })
        } else {
            Err(Error::ParameterDomain(format!("density must be finite and positive, got {rho}")))
        }
    }

    pub fn from_total(total: f64, sites: usize) -> Result<Self> {
        if sites == 0 {
            return Err(Error::ParameterDomain("need at least one site".into()));
        }
        Self::new(total / sites as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Fluid,
    Critical,
    Condensed,
    NoTransitionPseudocondensate,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Fluid => "fluid",
            Phase::Critical => "critical",
            Phase::Condensed => "condensed",
            Phase::NoTransitionPseudocondensate => "pseudocondensate",
        })
    }
}

/// `(Z, Z * mean)` of the tilt `f(m) e^{-mu (m - shift)}`.
fn tilted_moments(f: &WeightFunction, mu: f64) -> (f64, f64) {
    let (lo, hi) = f.support();
    let shift = if mu < 0.0 { hi.unwrap_or(0.0) } else { 0.0 };
    let w = |m: f64| (f.ln_pdf(m) - mu * (m - shift)).exp();
    // a tilt shortens the relevant length scale
    let scale = match mu {
        mu if mu > 0.0 => f.characteristic_scale().min(1.0 / mu),
        _ => f.characteristic_scale(),
    };
    let z = integrate_half_line(&w, lo, hi, scale, QUAD_TOL);
    let m1 = integrate_half_line(&|m: f64| m * w(m), lo, hi, scale, QUAD_TOL);
    (z, m1)
}

/// Mean of the tilted density `f(m) e^{-mu m}`; `None` if not integrable.
pub fn tilted_mean(f: &WeightFunction, mu: f64) -> Option<f64> {
    if !f.tilt_integrable(mu) {
        return None;
    }
    if mu == 0.0 {
        if let Ok(m) = f.mean() {
            return Some(m);
        }
    }
    let (z, m1) = tilted_moments(f, mu);
    (z > 0.0 && z.is_finite() && m1.is_finite()).then(|| m1 / z)
}

/// Chemical potential `mu` with tilted mean equal to `rho`.
///
/// Positive when `rho < mean(f)`, zero at `rho = mean(f)`. Above the mean a
/// negative `mu` exists only for tails at least as light as exponential;
/// otherwise the system condenses and `NoSolution` is returned.
pub fn solve_chemical_potential(f: &WeightFunction, rho: Density) -> Result<f64> {
    let rho = rho.rho;
    let mean = f.mean().ok();
    let residual = |mu: f64| tilted_mean(f, mu).map_or(f64::NAN, |m| m - rho);

    if let Some(mean) = mean {
        if (rho - mean).abs() <= 1e-13 * rho {
            return Ok(0.0);
        }
    }
    let unit = 1.0 / f.characteristic_scale();
    let (a, b) = match mean {
        Some(mean) if rho > mean => {
            if f.tail_class() != TailClass::ExponentialOrFaster {
                return Err(Error::NoSolution { rho, mean });
            }
            if let (_, Some(upper)) = f.support() {
                if rho >= upper {
                    return Err(Error::NoSolution { rho, mean });
                }
            }
            let limit = f.tilt_lower_limit();
            let mut lo = if limit.is_finite() { 0.5 * limit } else { -unit };
            let mut found = false;
            for _ in 0..200 {
                if residual(lo) > 0.0 {
                    found = true;
                    break;
                }
                lo = if limit.is_finite() { 0.5 * (lo + limit) } else { 2.0 * lo };
            }
            if !found {
                return Err(Error::NoSolution { rho, mean });
            }
            (lo, 0.0)
        }
        _ => {
            let mut hi = unit;
            let mut guard = 0;
            while !(residual(hi) < 0.0) {
                hi *= 2.0;
                guard += 1;
                if guard > 200 {
                    return Err(Error::Domain(format!("could not bracket the chemical potential for rho = {rho}")));
                }
            }
            let mut lo = if mean.is_some() { 0.0 } else { 0.5 * hi };
            // infinite mean: walk down until the tilted mean exceeds rho
            while mean.is_none() && !(residual(lo) > 0.0) {
                hi = lo;
                lo *= 0.5;
                guard += 1;
                if guard > 400 {
                    return Err(Error::Domain(format!("could not bracket the chemical potential for rho = {rho}")));
                }
            }
            (lo, hi)
        }
    };
    let xtol = 1e-15 * a.abs().max(b.abs());
    Ok(brent(residual, a, b, xtol, 200))
}

/// Grand-canonical single-site marginal `f(m) e^{-mu m} / Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marginal {
    pub weight: WeightFunction,
    pub mu: f64,
    /// `ln Z` with the tilt taken relative to `shift`.
    ln_z: f64,
    shift: f64,
}

impl Marginal {
    pub fn pdf(&self, m: f64) -> f64 {
        if self.mu == 0.0 {
            return self.weight.pdf(m);
        }
        (self.weight.ln_pdf(m) - self.mu * (m - self.shift) - self.ln_z).exp()
    }

    pub fn mean(&self) -> f64 {
        tilted_mean(&self.weight, self.mu).unwrap_or(f64::NAN)
    }

    /// Integral of the density over the support; 1 up to quadrature error.
    pub fn total_mass(&self) -> f64 {
        let (lo, hi) = self.weight.support();
        integrate_half_line(&|m: f64| self.pdf(m), lo, hi, self.weight.characteristic_scale(), QUAD_TOL)
    }

    /// Two-column CSV `m,density` on `points` equally spaced abscissae over
    /// `[0, upper]`.
    pub fn write_csv<W: Write>(&self, mut out: W, upper: f64, points: usize) -> std::io::Result<()> {
        writeln!(out, "m,density")?;
        let n = points.max(2);
        for j in 0..n {
            let m = upper * j as f64 / (n - 1) as f64;
            writeln!(out, "{m},{}", self.pdf(m))?;
        }
        Ok(())
    }
}

pub fn marginal(f: &WeightFunction, mu: f64) -> Result<Marginal> {
    if !f.tilt_integrable(mu) {
        return Err(Error::Domain(format!("f(m) e^(-mu m) is not integrable at mu = {mu}")));
    }
    if mu == 0.0 {
        return Ok(Marginal { weight: *f, mu, ln_z: 0.0, shift: 0.0 });
    }
    let shift = if mu < 0.0 { f.support().1.unwrap_or(0.0) } else { 0.0 };
    let (z, _) = tilted_moments(f, mu);
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain(format!("tilted normalization {z} at mu = {mu}")));
    }
    Ok(Marginal { weight: *f, mu, ln_z: z.ln(), shift })
}

pub fn classify_phase(f: &WeightFunction, rho: Density) -> Phase {
    let tail = f.tail_class();
    if tail == TailClass::VeryBroad {
        return Phase::NoTransitionPseudocondensate;
    }
    let Ok(mean) = f.mean() else {
        return Phase::NoTransitionPseudocondensate;
    };
    let rho = rho.rho;
    if (mean - rho).abs() <= CRITICAL_BAND * rho {
        Phase::Critical
    } else if mean > rho || tail == TailClass::ExponentialOrFaster {
        Phase::Fluid
    } else {
        Phase::Condensed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase: Phase,
    pub mean_f: Option<f64>,
    pub rho: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

pub fn phase_report(f: &WeightFunction, rho: Density) -> PhaseReport {
    PhaseReport {
        phase: classify_phase(f, rho),
        mean_f: f.mean().ok(),
        rho: rho.rho,
        mu: solve_chemical_potential(f, rho).ok(),
    }
}

/// Canonical partition function and exact single-site marginal on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    /// `Z(M, L)`, the density of `sum_i m_i` at `M` under i.i.d. `f`.
    pub z: f64,
    pub grid: Vec<f64>,
    /// Marginal density at each grid point; all zero when `L = 1`.
    pub marginal: Vec<f64>,
    /// For `L = 1` the marginal is a point mass at `M`.
    pub point_mass: Option<f64>,
    /// Simpson estimate of the marginal's integral.
    pub normalization: f64,
}

impl BruteForce {
    /// L1 distance to a density `g` on the half line. The canonical marginal
    /// vanishes above `M`, so `g`'s mass there counts in full.
    pub fn l1_distance(&self, g: impl Fn(f64) -> f64, g_tail_above_total: f64) -> f64 {
        let h = self.grid[1] - self.grid[0];
        let diffs: Vec<f64> = self.grid.iter().zip(&self.marginal).map(|(&m, &p)| (p - g(m)).abs()).collect();
        simpson(&diffs, h) + g_tail_above_total
    }
}

pub const MAX_ORACLE_SITES: usize = 8;
pub const MIN_ORACLE_GRID: usize = 256;

/// Repeated trapezoidal convolution of `f` on a uniform grid over `[0, M]`.
///
/// The marginal is `f(m) Z(M - m, L - 1) / Z(M, L)`. Its trapezoid integral is
/// 1 by construction, so resolution is judged by Simpson's rule instead: a
/// discrepancy above 1% is a `Resolution` error.
pub fn partition_function_bruteforce(f: &WeightFunction, total: f64, sites: usize, grid: usize) -> Result<BruteForce> {
    if !(1..=MAX_ORACLE_SITES).contains(&sites) {
        return Err(Error::ParameterDomain(format!("oracle supports 1..={MAX_ORACLE_SITES} sites, got {sites}")));
    }
    if grid < MIN_ORACLE_GRID {
        return Err(Error::ParameterDomain(format!("oracle grid needs at least {MIN_ORACLE_GRID} points, got {grid}")));
    }
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::ParameterDomain(format!("total mass must be positive, got {total}")));
    }
    let n = grid;
    let h = total / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
    let fv: Vec<f64> = xs
        .iter()
        .map(|&m| {
            let v = f.pdf(m);
            if v.is_finite() {
                v
            } else {
                // integrable singularity at a grid point: use the cell average
                let half = 0.5 * h;
                crate::numeric::quadrature::integrate(&|x: f64| f.pdf(x), m, m + half, 1e-12) / half
            }
        })
        .collect();

    if sites == 1 {
        return Ok(BruteForce {
            z: fv[n - 1],
            grid: xs,
            marginal: vec![0.0; n],
            point_mass: Some(total),
            normalization: 1.0,
        });
    }

    let mut prev = fv.clone();
    let mut before_last = prev.clone();
    for _ in 1..sites {
        let mut next = vec![0.0; n];
        for (j, slot) in next.iter_mut().enumerate() {
            if j == 0 {
                continue;
            }
            let mut acc = 0.5 * (fv[0] * prev[j] + fv[j] * prev[0]);
            for i in 1..j {
                acc += fv[i] * prev[j - i];
            }
            *slot = acc * h;
        }
        before_last = std::mem::replace(&mut prev, next);
    }
    let z = prev[n - 1];
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Resolution { normalization: f64::NAN });
    }
    let marginal: Vec<f64> = (0..n).map(|j| fv[j] * before_last[n - 1 - j] / z).collect();
    let normalization = simpson(&marginal, h);
    if (normalization - 1.0).abs() > 0.01 {
        return Err(Error::Resolution { normalization });
    }
    Ok(BruteForce { z, grid: xs, marginal, point_mass: None, normalization })
}

/// Composite Simpson over equally spaced samples, finishing with the 3/8
/// rule when the number of intervals is odd.
fn simpson(y: &[f64], h: f64) -> f64 {
    let intervals = y.len() - 1;
    let (even_part, tail) = if intervals.is_multiple_of(2) || intervals < 3 { (intervals, 0) } else { (intervals - 3, 3) };
    let mut s = 0.0;
    let mut i = 0;
    while i + 2 <= even_part {
        s += y[i] + 4.0 * y[i + 1] + y[i + 2];
        i += 2;
    }
    let mut total = s * h / 3.0;
    if tail == 3 {
        let j = even_part;
        total += 3.0 * h / 8.0 * (y[j] + 3.0 * y[j + 1] + 3.0 * y[j + 2] + y[j + 3]);
    } else if even_part < intervals {
        total += 0.5 * h * (y[intervals - 1] + y[intervals]);
    }
    total
}

/// Largest share `max_i m_i / sum_i m_i` per sample, with its mean and 99th
/// percentile. An empty chain gives an empty series and NaN summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondensateSummary {
    pub series: Vec<f64>,
    pub mean: f64,
    pub p99: f64,
}

pub fn condensate_statistic(chain: &SampleChain) -> CondensateSummary {
    let series: Vec<f64> = chain
        .iter()
        .map(|s| {
            let sum: f64 = s.iter().sum();
            s.iter().copied().fold(0.0, f64::max) / sum
        })
        .collect();
    if series.is_empty() {
        return CondensateSummary { series, mean: f64::NAN, p99: f64::NAN };
    }
    CondensateSummary { mean: stats::mean(&series), p99: stats::quantile(&series, 0.99), series }
}
