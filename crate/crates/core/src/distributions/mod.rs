//! Single-site weight functions `f(m)` used as distributional constraints on
//! household wealth.
//!
//! Parameter conventions: `Gamma { shape, scale }` has mean `shape * scale`;
//! `LogNormal { sigma, scale }` has median `scale` (so `ln m ~ N(ln scale,
//! sigma^2)`); `PowerLaw` is a Pareto density `~ m^-exponent` on
//! `[lower, upper)`; `Uniform` is flat on `[0, upper]`.

mod fit;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};

pub use fit::{fit_points, fit_to_percentiles, FittedDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightFunction {
    Gamma { shape: f64, scale: f64 },
    LogNormal { sigma: f64, scale: f64 },
    PowerLaw { exponent: f64, lower: f64, upper: Option<f64> },
    Uniform { upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gamma,
    LogNormal,
    PowerLaw,
    Uniform,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gamma => "gamma",
            Family::LogNormal => "lognormal",
            Family::PowerLaw => "powerlaw",
            Family::Uniform => "uniform",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gamma" => Ok(Family::Gamma),
            "lognormal" | "log-normal" | "log_normal" => Ok(Family::LogNormal),
            "powerlaw" | "power-law" | "power_law" | "pareto" => Ok(Family::PowerLaw),
            "uniform" => Ok(Family::Uniform),
            other => Err(Error::ParameterDomain(format!("unknown family `{other}`"))),
        }
    }
}

/// Asymptotic tail behavior, which decides what happens to the constant-sum
/// problem as the density grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailClass {
    /// Decays at least exponentially (or has bounded support).
    ExponentialOrFaster,
    /// Slower than exponential but faster than `m^-2`: finite mean, and a
    /// condensation transition above it.
    Subexponential,
    /// Power-law tail with exponent in `[1, 2]`: infinite mean.
    VeryBroad,
}

impl WeightFunction {
    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        check_positive("gamma shape", shape)?;
        check_positive("gamma scale", scale)?;
        Ok(Self::Gamma { shape, scale })
    }

    pub fn lognormal(sigma: f64, scale: f64) -> Result<Self> {
        check_positive("lognormal sigma", sigma)?;
        check_positive("lognormal scale", scale)?;
        Ok(Self::LogNormal { sigma, scale })
    }

    /// Unbounded Pareto tail needs `exponent > 1` to normalize.
    pub fn power_law(exponent: f64, lower: f64, upper: Option<f64>) -> Result<Self> {
        check_positive("power-law lower cutoff", lower)?;
        if !exponent.is_finite() {
            return Err(Error::ParameterDomain("power-law exponent must be finite".into()));
        }
        match upper {
            Some(u) if !(u.is_finite() && u > lower) => {
                Err(Error::ParameterDomain(format!("upper cutoff {u} must exceed the lower cutoff {lower}")))
            }
            None if exponent <= 1.0 => {
                Err(Error::ParameterDomain(format!("exponent {exponent} <= 1 is not normalizable without an upper cutoff")))
            }
            _ => Ok(Self::PowerLaw { exponent, lower, upper }),
        }
    }

    pub fn uniform(upper: f64) -> Result<Self> {
        check_positive("uniform upper bound", upper)?;
        Ok(Self::Uniform { upper })
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Gamma { .. } => Family::Gamma,
            Self::LogNormal { .. } => Family::LogNormal,
            Self::PowerLaw { .. } => Family::PowerLaw,
            Self::Uniform { .. } => Family::Uniform,
        }
    }

    /// `(lower, upper)` of the support; `None` means unbounded above.
    pub fn support(&self) -> (f64, Option<f64>) {
        match *self {
            Self::Gamma { .. } | Self::LogNormal { .. } => (0.0, None),
            Self::PowerLaw { lower, upper, .. } => (lower, upper),
            Self::Uniform { upper } => (0.0, Some(upper)),
        }
    }

    /// A length on which the bulk of the density lives.
    pub fn characteristic_scale(&self) -> f64 {
        match *self {
            Self::Gamma { shape, scale } => shape.max(1.0) * scale,
            Self::LogNormal { scale, .. } => scale,
            Self::PowerLaw { lower, .. } => lower,
            Self::Uniform { upper } => upper,
        }
    }

    pub fn ln_pdf(&self, m: f64) -> f64 {
        if m == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::Gamma { shape, scale } => {
                if m < 0.0 {
                    f64::NEG_INFINITY
                } else if m == 0.0 {
                    match shape.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => -scale.ln(),
                        _ => f64::NEG_INFINITY,
                    }
                } else {
                    (shape - 1.0) * m.ln() - m / scale - ln_gamma(shape) - shape * scale.ln()
                }
            }
            Self::LogNormal { sigma, scale } => {
                if m <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let lm = m.ln();
                    let z = (lm - scale.ln()) / sigma;
                    -0.5 * z * z - lm - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
                }
            }
            Self::PowerLaw { exponent, lower, upper } => {
                if m < lower || upper.is_some_and(|u| m >= u) {
                    f64::NEG_INFINITY
                } else {
                    -exponent * (m / lower).ln() - power_law_norm(exponent, lower, upper).ln()
                }
            }
            Self::Uniform { upper } => {
                if (0.0..=upper).contains(&m) {
                    -upper.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// `ln_pdf` up to an additive constant, with the constants hoisted.
    pub fn log_kernel(&self) -> LogKernel {
        match *self {
            Self::Gamma { shape, scale } => LogKernel::Gamma { a1: shape - 1.0, inv_scale: 1.0 / scale },
            Self::LogNormal { sigma, scale } => {
                LogKernel::LogNormal { ln_scale: scale.ln(), half_inv_var: 0.5 / (sigma * sigma) }
            }
            Self::PowerLaw { exponent, lower, upper } => {
                LogKernel::PowerLaw { exponent, lower, upper: upper.unwrap_or(f64::INFINITY) }
            }
            Self::Uniform { upper } => LogKernel::Uniform { upper },
        }
    }

    pub fn pdf(&self, m: f64) -> f64 {
        self.ln_pdf(m).exp()
    }

    pub fn cdf(&self, m: f64) -> f64 {
        match *self {
            Self::Gamma { shape, scale } => {
                if m <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, m / scale)
                }
            }
            Self::LogNormal { sigma, scale } => {
                if m <= 0.0 {
                    0.0
                } else {
                    0.5 * erfc(-(m / scale).ln() / (sigma * std::f64::consts::SQRT_2))
                }
            }
            Self::PowerLaw { exponent, lower, upper } => {
                if m <= lower {
                    return 0.0;
                }
                if let Some(u) = upper {
                    if m >= u {
                        return 1.0;
                    }
                }
                let partial = power_law_mass(exponent, lower, m);
                match upper {
                    Some(u) => partial / power_law_mass(exponent, lower, u),
                    None => partial,
                }
            }
            Self::Uniform { upper } => (m / upper).clamp(0.0, 1.0),
        }
    }

    /// Survival function `1 - cdf`, evaluated without cancellation where the
    /// family allows it.
    pub fn sf(&self, m: f64) -> f64 {
        match *self {
            Self::Gamma { shape, scale } if m > 0.0 => gamma_ur(shape, m / scale),
            Self::LogNormal { sigma, scale } if m > 0.0 => 0.5 * erfc((m / scale).ln() / (sigma * std::f64::consts::SQRT_2)),
            Self::PowerLaw { exponent, lower, upper: None } if m > lower => (m / lower).powf(1.0 - exponent),
            _ => 1.0 - self.cdf(m),
        }
    }

    /// Inverse cdf for `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile level {p} not in (0, 1)")));
        }
        Ok(match *self {
            Self::Gamma { .. } => self.invert_cdf(p),
            Self::LogNormal { sigma, scale } => {
                let z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
                scale * (sigma * z).exp()
            }
            Self::PowerLaw { exponent, lower, upper } => {
                let target = match upper {
                    Some(u) => p * power_law_mass(exponent, lower, u),
                    None => p,
                };
                // invert power_law_mass(exponent, lower, m) = target
                if (exponent - 1.0).abs() < 1e-12 {
                    lower * target.exp()
                } else {
                    lower * (1.0 - target).powf(1.0 / (1.0 - exponent))
                }
            }
            Self::Uniform { upper } => p * upper,
        })
    }

    /// Bracketed Newton iteration on the cdf, used where no closed form
    /// inverse exists.
    fn invert_cdf(&self, p: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = self.characteristic_scale();
        while self.cdf(hi) < p {
            lo = hi;
            hi *= 2.0;
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let c = self.cdf(x);
            if c < p {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.pdf(x);
            let newton = x - (c - p) / d;
            let next = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - x).abs() <= 1e-15 * x.abs() || hi - lo <= 1e-15 * hi {
                return next;
            }
            x = next;
        }
        x
    }

    /// Closed-form mean; `InfiniteMean` for unbounded power laws with
    /// exponent `<= 2`.
    pub fn mean(&self) -> Result<f64> {
        match *self {
            Self::Gamma { shape, scale } => Ok(shape * scale),
            Self::LogNormal { sigma, scale } => Ok(scale * (0.5 * sigma * sigma).exp()),
            Self::PowerLaw { exponent, lower, upper } => match upper {
                None if exponent <= 2.0 => Err(Error::InfiniteMean),
                None => Ok(lower * (exponent - 1.0) / (exponent - 2.0)),
                Some(u) => Ok(power_law_first_moment(exponent, lower, u) / power_law_norm(exponent, lower, upper)),
            },
            Self::Uniform { upper } => Ok(0.5 * upper),
        }
    }

    pub fn tail_class(&self) -> TailClass {
        match *self {
            Self::Gamma { .. } | Self::Uniform { .. } => TailClass::ExponentialOrFaster,
            Self::LogNormal { .. } => TailClass::Subexponential,
            Self::PowerLaw { upper: Some(_), .. } => TailClass::ExponentialOrFaster,
            Self::PowerLaw { exponent, .. } => {
                if exponent <= 2.0 {
                    TailClass::VeryBroad
                } else {
                    TailClass::Subexponential
                }
            }
        }
    }

    /// The same family with every length multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        match *self {
            Self::Gamma { shape, scale } => Self::Gamma { shape, scale: scale * factor },
            Self::LogNormal { sigma, scale } => Self::LogNormal { sigma, scale: scale * factor },
            Self::PowerLaw { exponent, lower, upper } => {
                Self::PowerLaw { exponent, lower: lower * factor, upper: upper.map(|u| u * factor) }
            }
            Self::Uniform { upper } => Self::Uniform { upper: upper * factor },
        }
    }

    /// Rescales so that the mean equals `target`.
    pub fn with_mean(&self, target: f64) -> Result<Self> {
        check_positive("target mean", target)?;
        Ok(self.rescaled(target / self.mean()?))
    }

    /// Infimum of tilts `mu` for which `f(m) e^{-mu m}` stays integrable.
    pub fn tilt_lower_limit(&self) -> f64 {
        match *self {
            Self::Gamma { scale, .. } => -1.0 / scale,
            Self::Uniform { .. } | Self::PowerLaw { upper: Some(_), .. } => f64::NEG_INFINITY,
            Self::LogNormal { .. } | Self::PowerLaw { upper: None, .. } => 0.0,
        }
    }

    /// Whether the tilt at `mu` is integrable.
    pub fn tilt_integrable(&self, mu: f64) -> bool {
        match *self {
            Self::Gamma { .. } => mu > self.tilt_lower_limit(),
            Self::LogNormal { .. } | Self::PowerLaw { upper: None, .. } => mu >= 0.0,
            _ => mu.is_finite(),
        }
    }

    /// Key-value text: family name then parameters, one per line.
    pub fn to_kv(&self) -> String {
        match *self {
            Self::Gamma { shape, scale } => format!("family = gamma\nshape = {shape}\nscale = {scale}\n"),
            Self::LogNormal { sigma, scale } => format!("family = lognormal\nsigma = {sigma}\nscale = {scale}\n"),
            Self::PowerLaw { exponent, lower, upper } => {
                let mut s = format!("family = powerlaw\nexponent = {exponent}\nlower = {lower}\n");
                if let Some(u) = upper {
                    s.push_str(&format!("upper = {u}\n"));
                }
                s
            }
            Self::Uniform { upper } => format!("family = uniform\nupper = {upper}\n"),
        }
    }
}

/// See [`WeightFunction::log_kernel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogKernel {
    Gamma { a1: f64, inv_scale: f64 },
    LogNormal { ln_scale: f64, half_inv_var: f64 },
    PowerLaw { exponent: f64, lower: f64, upper: f64 },
    Uniform { upper: f64 },
}

impl LogKernel {
    #[inline]
    pub fn eval(&self, m: f64) -> f64 {
        match *self {
            Self::Gamma { a1, inv_scale } => {
                if m > 0.0 && m < f64::INFINITY {
                    a1 * m.ln() - m * inv_scale
                } else if m == 0.0 {
                    match a1.partial_cmp(&0.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => 0.0,
                        _ => f64::NEG_INFINITY,
                    }
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::LogNormal { ln_scale, half_inv_var } => {
                if m > 0.0 && m < f64::INFINITY {
                    let lm = m.ln();
                    let z = lm - ln_scale;
                    -half_inv_var * z * z - lm
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::PowerLaw { exponent, lower, upper } => {
                if m >= lower && m < upper {
                    -exponent * m.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::Uniform { upper } => {
                if (0.0..=upper).contains(&m) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!("{what} must be finite and positive, got {v}")))
    }
}

/// Unnormalized Pareto mass `∫_lower^m (x/lower)^-g dx / [lower/(g-1)]`,
/// i.e. the unbounded cdf when `g > 1`, extended analytically otherwise.
fn power_law_mass(g: f64, lower: f64, m: f64) -> f64 {
    let x = m / lower;
    if (g - 1.0).abs() < 1e-12 {
        x.ln()
    } else {
        1.0 - x.powf(1.0 - g)
    }
}

/// Normalizing constant of `(m/lower)^-g` over the support.
fn power_law_norm(g: f64, lower: f64, upper: Option<f64>) -> f64 {
    let base = if (g - 1.0).abs() < 1e-12 { lower } else { lower / (g - 1.0) };
    match upper {
        None => base,
        Some(u) => base * power_law_mass(g, lower, u),
    }
}

/// `∫_lower^upper m (m/lower)^-g dm`.
fn power_law_first_moment(g: f64, lower: f64, upper: f64) -> f64 {
    let x = upper / lower;
    let l2 = lower * lower;
    if (g - 2.0).abs() < 1e-12 {
        l2 * x.ln()
    } else {
        l2 * (x.powf(2.0 - g) - 1.0) / (2.0 - g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::quadrature::integrate_half_line;
    use proptest::prelude::*;

    fn quad_mean(f: &WeightFunction) -> f64 {
        let (lo, hi) = f.support();
        integrate_half_line(&|m| m * f.pdf(m), lo, hi, f.characteristic_scale(), 1e-14)
    }

    fn quad_mass(f: &WeightFunction) -> f64 {
        let (lo, hi) = f.support();
        integrate_half_line(&|m| f.pdf(m), lo, hi, f.characteristic_scale(), 1e-14)
    }

    #[test]
    fn exponential_special_case() {
        let f = WeightFunction::gamma(1.0, 1.0).unwrap();
        assert!((f.pdf(0.0) - 1.0).abs() < 1e-15);
        assert!((f.pdf(2.0) - (-2.0f64).exp()).abs() < 1e-15);
        assert!((f.cdf(1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn gamma_tail_vanishes() {
        let f = WeightFunction::gamma(1.46, 1.55e4).unwrap();
        assert!(f.pdf(1e8) < 1e-300);
        assert_eq!(f.pdf(f64::INFINITY), 0.0);
    }

    #[test]
    fn lognormal_mode_matches_grid_search() {
        let f = WeightFunction::lognormal(1.72, 4.64e4).unwrap();
        let closed = 4.64e4 * (-1.72f64 * 1.72).exp();
        // grid search over a log-spaced grid, then a fine linear grid
        let coarse = (0..20_000)
            .map(|i| 10f64.powf(-2.0 + 8.0 * i as f64 / 20_000.0))
            .max_by(|a, b| f.pdf(*a).total_cmp(&f.pdf(*b)))
            .unwrap();
        let fine = (0..20_001)
            .map(|i| coarse * (0.99 + 0.02 * i as f64 / 20_000.0))
            .max_by(|a, b| f.pdf(*a).total_cmp(&f.pdf(*b)))
            .unwrap();
        assert!((fine - closed).abs() < 1e-5 * closed, "{fine} vs {closed}");
    }

    #[test]
    fn closed_form_means() {
        let g = WeightFunction::gamma(1.46, 1.55e4).unwrap();
        assert!((g.mean().unwrap() - 2.263e4).abs() < 1e-8);
        let l = WeightFunction::lognormal(1.72, 4.64e4).unwrap();
        let m = l.mean().unwrap();
        assert!((m - 2.036e5).abs() < 0.001 * 2.036e5, "{m}");
        for f in [g, l, WeightFunction::power_law(2.5, 1.0, None).unwrap(), WeightFunction::power_law(1.5, 1.0, Some(50.0)).unwrap(),
            WeightFunction::power_law(2.0, 2.0, Some(30.0)).unwrap(), WeightFunction::uniform(3.0).unwrap()]
        {
            let closed = f.mean().unwrap();
            let q = quad_mean(&f);
            assert!((q - closed).abs() <= 1e-6 * closed, "{f:?}: {q} vs {closed}");
            assert!((quad_mass(&f) - 1.0).abs() < 1e-9, "{f:?}");
        }
    }

    #[test]
    fn infinite_mean_signal() {
        let f = WeightFunction::power_law(1.5, 1.0, None).unwrap();
        assert_eq!(f.mean(), Err(Error::InfiniteMean));
        assert!(WeightFunction::power_law(0.5, 1.0, None).is_err());
    }

    #[test]
    fn median_is_half() {
        for f in [
            WeightFunction::gamma(1.46, 1.55e4).unwrap(),
            WeightFunction::lognormal(1.72, 4.64e4).unwrap(),
            WeightFunction::power_law(2.5, 3.0, None).unwrap(),
            WeightFunction::uniform(2.0).unwrap(),
        ] {
            let med = f.quantile(0.5).unwrap();
            assert!((f.cdf(med) - 0.5).abs() < 1e-12, "{f:?}");
        }
        let l = WeightFunction::lognormal(1.72, 4.64e4).unwrap();
        assert!((l.quantile(0.5).unwrap() - 4.64e4).abs() < 1e-9 * 4.64e4);
    }

    #[test]
    fn tail_classes() {
        assert_eq!(WeightFunction::gamma(3.0, 2.0).unwrap().tail_class(), TailClass::ExponentialOrFaster);
        assert_eq!(WeightFunction::lognormal(1.0, 1.0).unwrap().tail_class(), TailClass::Subexponential);
        assert_eq!(WeightFunction::power_law(2.5, 1.0, None).unwrap().tail_class(), TailClass::Subexponential);
        assert_eq!(WeightFunction::power_law(1.5, 1.0, None).unwrap().tail_class(), TailClass::VeryBroad);
        assert_eq!(WeightFunction::power_law(2.0, 1.0, None).unwrap().tail_class(), TailClass::VeryBroad);
    }

    #[test]
    fn family_names_round_trip() {
        for fam in [Family::Gamma, Family::LogNormal, Family::PowerLaw, Family::Uniform] {
            assert_eq!(fam.to_string().parse::<Family>().unwrap(), fam);
        }
    }

    fn any_weight() -> impl Strategy<Value = WeightFunction> {
        prop_oneof![
            (0.2f64..20.0, 1e-3f64..1e6).prop_map(|(a, s)| WeightFunction::Gamma { shape: a, scale: s }),
            (0.05f64..2.5, 1e-3f64..1e6).prop_map(|(sg, s)| WeightFunction::LogNormal { sigma: sg, scale: s }),
            (1.1f64..5.0, 1e-3f64..1e3).prop_map(|(g, l)| WeightFunction::PowerLaw { exponent: g, lower: l, upper: None }),
            (0.5f64..4.0, 1e-3f64..1e3, 2.0f64..100.0)
                .prop_map(|(g, l, r)| WeightFunction::PowerLaw { exponent: g, lower: l, upper: Some(l * r) }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn cdf_inverts_quantile(f in any_weight(), p in 0.01f64..0.99) {
            let x = f.quantile(p).unwrap();
            prop_assert!((f.cdf(x) - p).abs() <= 1e-8 * p, "{:?} p={} x={} cdf={}", f, p, x, f.cdf(x));
            let back = f.quantile(f.cdf(x)).unwrap();
            prop_assert!((back - x).abs() <= 1e-8 * x);
        }

        #[test]
        fn cdf_is_monotone(f in any_weight(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let s = f.characteristic_scale() * 10.0;
            let (x, y) = if a < b { (a * s, b * s) } else { (b * s, a * s) };
            prop_assert!(f.cdf(x) <= f.cdf(y));
            prop_assert!(f.pdf(x) >= 0.0);
        }
    }

    #[test]
    fn log_kernel_differs_by_a_constant() {
        let fs = [
            WeightFunction::gamma(1.46, 1.55e4).unwrap(),
            WeightFunction::gamma(1.0, 2.0).unwrap(),
            WeightFunction::lognormal(1.72, 4.64e4).unwrap(),
            WeightFunction::power_law(2.5, 1.0, Some(50.0)).unwrap(),
            WeightFunction::uniform(3.0).unwrap(),
        ];
        for f in fs {
            let k = f.log_kernel();
            let (lo, _) = f.support();
            let x0 = f.quantile(0.5).unwrap();
            let offset = f.ln_pdf(x0) - k.eval(x0);
            for p in [0.01, 0.2, 0.7, 0.99] {
                let x = f.quantile(p).unwrap();
                assert!((f.ln_pdf(x) - k.eval(x) - offset).abs() < 1e-9 * (1.0 + offset.abs()), "{f:?} at {x}");
            }
            assert_eq!(k.eval(lo - 1.0), f64::NEG_INFINITY);
            assert_eq!(k.eval(f64::INFINITY), f64::NEG_INFINITY);
        }
        let exp = WeightFunction::gamma(1.0, 2.0).unwrap().log_kernel();
        assert_eq!(exp.eval(0.0), 0.0);
    }
}
