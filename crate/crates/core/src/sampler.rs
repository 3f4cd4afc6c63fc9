//! Hit-and-run sampling of `prod_i f(m_i)` on `{sum_i m_i = S, m_i >= 0}`.
//!
//! Each step draws a direction in the hyperplane `sum_i d_i = 0`, intersects
//! the line through the current point with the nonnegative orthant, proposes
//! a uniform point on that chord and accepts it with the Metropolis ratio of
//! the target. Weights are handled in log space.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::WeightFunction;
use crate::error::{Error, Result};
use crate::mass_transport::{classify_phase, Density, Phase};
use crate::numeric::stats;

/// The feasible set `{m in R^N : sum m = total, m >= 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub total: f64,
    pub n: usize,
}

impl ConstraintSet {
    pub fn new(total: f64, n: usize) -> Result<Self> {
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::ParameterDomain(format!("target sum must be positive, got {total}")));
        }
        if n < 2 {
            return Err(Error::ParameterDomain(format!("need at least 2 coordinates, got {n}")));
        }
        Ok(Self { total, n })
    }

    pub fn density(&self) -> f64 {
        self.total / self.n as f64
    }

    pub fn barycenter(&self) -> Vec<f64> {
        vec![self.density(); self.n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionScheme {
    /// Isotropic directions in the hyperplane.
    Hd,
    /// Pair exchanges `(e_i - e_j) / sqrt 2`.
    Cd,
}

impl fmt::Display for DirectionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DirectionScheme::Hd => "hd",
            DirectionScheme::Cd => "cd",
        })
    }
}

impl FromStr for DirectionScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hd" => Ok(Self::Hd),
            "cd" => Ok(Self::Cd),
            other => Err(Error::ParameterDomain(format!("unknown direction scheme `{other}`"))),
        }
    }
}

pub const DEFAULT_THINNING: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub scheme: DirectionScheme,
    /// Total number of steps, burn-in included.
    pub chain_length: u64,
    pub thinning: u64,
    pub burn_in: u64,
    pub seed: u64,
    /// Keep the first coordinate after every post-burn-in step.
    #[serde(default)]
    pub record_trace: bool,
}

impl SamplerConfig {
    /// Defaults: burn-in `10 N`, thinning 1000.
    pub fn new(scheme: DirectionScheme, n: usize, chain_length: u64, seed: u64) -> Self {
        Self { scheme, chain_length, thinning: DEFAULT_THINNING, burn_in: 10 * n as u64, seed, record_trace: false }
    }

    /// Chain length that emits `samples` states after burn-in and thinning.
    pub fn with_emitted(mut self, samples: u64) -> Self {
        self.chain_length = self.burn_in + samples * self.thinning;
        self
    }

    pub fn emitted(&self) -> u64 {
        self.chain_length.saturating_sub(self.burn_in) / self.thinning.max(1)
    }
}

/// Emitted states of one chain plus its step statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleChain {
    pub n: usize,
    pub total: f64,
    /// Row-major, `n` values per sample.
    pub samples: Vec<f64>,
    pub acceptance_count: u64,
    pub proposal_count: u64,
    pub degenerate_chords: u64,
    pub seed: u64,
    pub scheme: DirectionScheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<f64>>,
}

impl SampleChain {
    pub fn len(&self) -> usize {
        self.samples.len() / self.n.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.n..(i + 1) * self.n]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.samples.chunks_exact(self.n)
    }

    /// All coordinates of all samples, which share the single-site marginal.
    pub fn pooled(&self) -> Vec<f64> {
        self.samples.clone()
    }

    /// Coordinate `i` across samples.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.iter().map(|s| s[i]).collect()
    }

    pub fn rejection_rate(&self) -> f64 {
        if self.proposal_count == 0 {
            return f64::NAN;
        }
        1.0 - self.acceptance_count as f64 / self.proposal_count as f64
    }

    /// Concatenates chains in the given order; statistics are summed and the
    /// seed of the first chain is kept.
    pub fn merge(chains: &[SampleChain]) -> Result<SampleChain> {
        let first = chains.first().ok_or_else(|| Error::Domain("no chains to merge".into()))?;
        let mut out = SampleChain { samples: Vec::new(), acceptance_count: 0, proposal_count: 0, degenerate_chords: 0, trace: None, ..first.clone() };
        for c in chains {
            if c.n != first.n || c.total != first.total {
                return Err(Error::Domain("chains sample different constraint sets".into()));
            }
            out.samples.extend_from_slice(&c.samples);
            out.acceptance_count += c.acceptance_count;
            out.proposal_count += c.proposal_count;
            out.degenerate_chords += c.degenerate_chords;
        }
        Ok(out)
    }

    /// One row per sample, header `m_1,...,m_N`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.n).map(|i| format!("m_{i}")).collect();
        writeln!(out, "{}", header.join(","))?;
        let mut line = String::new();
        for s in self.iter() {
            line.clear();
            for (i, v) in s.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&v.to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// 8-byte header (`N` as little-endian u32, 4 reserved zero bytes), then
    /// every value as a little-endian f64.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(&(self.n as u32).to_le_bytes())?;
        out.write_all(&[0u8; 4])?;
        for v in &self.samples {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Reads the binary form back as `(N, row-major values)`.
pub fn read_binary<R: Read>(mut input: R) -> std::io::Result<(usize, Vec<f64>)> {
    let mut header = [0u8; 8];
    input.read_exact(&mut header)?;
    let n = u32::from_le_bytes(header[..4].try_into().expect("4 bytes")) as usize;
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if rest.len() % 8 != 0 || (n > 0 && (rest.len() / 8) % n != 0) {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "truncated sample file"));
    }
    let values = rest.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((n, values))
}

/// Isotropic unit direction in `sum d = 0`: a standard Gaussian vector with
/// its mean removed, normalized.
pub fn direction_hd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut d = vec![0.0; n];
    fill_direction_hd(&mut d, rng);
    d
}

fn fill_direction_hd<R: Rng + ?Sized>(d: &mut [f64], rng: &mut R) {
    loop {
        for v in d.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        d.iter_mut().for_each(|v| *v -= mean);
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-150 {
            d.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

/// Pair direction `(e_i - e_j) / sqrt 2` with `{i, j}` uniform over
/// unordered pairs (`i < j`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairDirection {
    pub i: usize,
    pub j: usize,
}

impl PairDirection {
    pub fn to_dense(self, n: usize) -> Vec<f64> {
        let mut d = vec![0.0; n];
        d[self.i] = std::f64::consts::FRAC_1_SQRT_2;
        d[self.j] = -std::f64::consts::FRAC_1_SQRT_2;
        d
    }
}

pub fn direction_cd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PairDirection {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    PairDirection { i: a.min(b), j: a.max(b) }
}

/// Parameter interval `[tmin, tmax]` of the line `point + t d` inside the
/// nonnegative orthant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord {
    pub tmin: f64,
    pub tmax: f64,
}

impl Chord {
    /// Zero length: the point sits on a vertex that blocks the direction.
    pub fn is_degenerate(&self) -> bool {
        !(self.tmax - self.tmin > 0.0)
    }
}

pub fn chord(point: &[f64], direction: &[f64]) -> Chord {
    let mut tmin = f64::NEG_INFINITY;
    let mut tmax = f64::INFINITY;
    for (&x, &d) in point.iter().zip(direction) {
        if d > 0.0 {
            tmin = tmin.max(-x / d);
        } else if d < 0.0 {
            tmax = tmax.min(-x / d);
        }
    }
    Chord { tmin, tmax }
}

/// Metropolis acceptance probability `min(1, pi(y) / pi(x))` from log
/// densities.
pub fn metropolis_acceptance(ln_current: f64, ln_proposed: f64) -> f64 {
    if ln_proposed >= ln_current {
        1.0
    } else {
        (ln_proposed - ln_current).exp()
    }
}

const RENORMALIZE_EVERY: u64 = 1024;

/// Runs one chain started at the barycenter.
///
/// Refuses condensed inputs and warns near criticality, where the chain can
/// mix very slowly.
pub fn hit_and_run(f: &WeightFunction, constraints: &ConstraintSet, config: &SamplerConfig) -> Result<SampleChain> {
    if config.thinning == 0 {
        return Err(Error::ParameterDomain("thinning must be at least 1".into()));
    }
    let n = constraints.n;
    let total = constraints.total;
    let rho = Density::new(constraints.density())?;
    match classify_phase(f, rho) {
        Phase::Condensed => {
            return Err(Error::PhaseRefusal { phase: Phase::Condensed, rho: rho.rho, mean: f.mean().unwrap_or(f64::NAN) });
        }
        Phase::Critical => log::warn!("density {} is critical for {f:?}; hit-and-run may mix slowly", rho.rho),
        _ => {}
    }
    let uniform = matches!(*f, WeightFunction::Uniform { upper } if upper >= total);

    let kernel = f.log_kernel();
    let mut x = constraints.barycenter();
    let ln_start = kernel.eval(x[0]);
    if !ln_start.is_finite() {
        return Err(Error::Initialization(format!(
            "log-weight at the barycenter {} is {ln_start}; no interior start has positive weight",
            x[0]
        )));
    }
    let mut lnf = vec![ln_start; n];
    let mut ln_total: f64 = lnf.iter().sum();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut chain = SampleChain {
        n,
        total,
        samples: Vec::with_capacity(config.emitted() as usize * n),
        acceptance_count: 0,
        proposal_count: 0,
        degenerate_chords: 0,
        seed: config.seed,
        scheme: config.scheme,
        trace: config.record_trace.then(Vec::new),
    };
    let mut d = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut lny = vec![0.0; n];

    for step in 1..=config.chain_length {
        match config.scheme {
            DirectionScheme::Hd => {
                fill_direction_hd(&mut d, &mut rng);
                let c = chord(&x, &d);
                if c.is_degenerate() {
                    chain.degenerate_chords += 1;
                } else {
                    let t = rng.random_range(c.tmin..c.tmax);
                    chain.proposal_count += 1;
                    for k in 0..n {
                        y[k] = (x[k] + t * d[k]).max(0.0);
                    }
                    if uniform {
                        std::mem::swap(&mut x, &mut y);
                        chain.acceptance_count += 1;
                    } else {
                        let mut ln_new = 0.0;
                        for k in 0..n {
                            lny[k] = kernel.eval(y[k]);
                            ln_new += lny[k];
                        }
                        let u: f64 = rng.random();
                        if u < metropolis_acceptance(ln_total, ln_new) {
                            std::mem::swap(&mut x, &mut y);
                            std::mem::swap(&mut lnf, &mut lny);
                            ln_total = ln_new;
                            chain.acceptance_count += 1;
                        }
                    }
                }
            }
            DirectionScheme::Cd => {
                let PairDirection { i, j } = direction_cd(n, &mut rng);
                // along (e_i - e_j)/sqrt 2 the shift s = t / sqrt 2 ranges over [-x_i, x_j]
                let pair_sum = x[i] + x[j];
                if pair_sum <= 0.0 {
                    chain.degenerate_chords += 1;
                } else {
                    let s = rng.random_range(-x[i]..x[j]);
                    let yi = (x[i] + s).clamp(0.0, pair_sum);
                    let yj = pair_sum - yi;
                    chain.proposal_count += 1;
                    if uniform {
                        x[i] = yi;
                        x[j] = yj;
                        chain.acceptance_count += 1;
                    } else {
                        let (li, lj) = (kernel.eval(yi), kernel.eval(yj));
                        let ln_new = ln_total - lnf[i] - lnf[j] + li + lj;
                        let u: f64 = rng.random();
                        if u < metropolis_acceptance(ln_total, ln_new) {
                            x[i] = yi;
                            x[j] = yj;
                            lnf[i] = li;
                            lnf[j] = lj;
                            ln_total = ln_new;
                            chain.acceptance_count += 1;
                        }
                    }
                }
            }
        }

        if step % RENORMALIZE_EVERY == 0 {
            let sum: f64 = x.iter().sum();
            if sum != total {
                let c = total / sum;
                x.iter_mut().for_each(|v| *v *= c);
            }
            if !uniform {
                for k in 0..n {
                    lnf[k] = kernel.eval(x[k]);
                }
            }
            ln_total = lnf.iter().sum();
        }

        if step > config.burn_in {
            if let Some(trace) = chain.trace.as_mut() {
                trace.push(x[0]);
            }
            if (step - config.burn_in).is_multiple_of(config.thinning) {
                chain.samples.extend_from_slice(&x);
            }
        }
    }
    Ok(chain)
}

/// Runs independent chains concurrently; output order follows `configs`.
pub fn run_chains(f: &WeightFunction, constraints: &ConstraintSet, configs: &[SamplerConfig]) -> Result<Vec<SampleChain>> {
    configs.par_iter().map(|c| hit_and_run(f, constraints, c)).collect()
}

/// Kolmogorov-Smirnov distance between all pooled coordinates and `f`.
pub fn pooled_ks(chain: &SampleChain, f: &WeightFunction) -> f64 {
    let mut values = chain.pooled();
    stats::ks_distance(&mut values, |m| f.cdf(m))
}

/// Density histogram of pooled coordinates over `[0, upper]` with the
/// weight function evaluated at bin centers.
pub fn pooled_histogram(chain: &SampleChain, f: &WeightFunction, bins: usize, upper: f64) -> Vec<HistogramBin> {
    let width = upper / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in &chain.samples {
        let b = (v / width) as usize;
        if b < bins {
            counts[b] += 1;
        }
    }
    let total = chain.samples.len().max(1) as f64;
    counts
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let center = (b as f64 + 0.5) * width;
            HistogramBin { center, density: c as f64 / (total * width), weight: f.pdf(center) }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub center: f64,
    pub density: f64,
    pub weight: f64,
}

pub fn write_histogram_csv<W: Write>(bins: &[HistogramBin], mut out: W) -> std::io::Result<()> {
    writeln!(out, "m,density,weight")?;
    for b in bins {
        writeln!(out, "{},{},{}", b.center, b.density, b.weight)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub samples: usize,
    pub rejection_rate: f64,
    pub degenerate_chords: u64,
    pub expected_mean: f64,
    pub coordinate_means: Vec<f64>,
    /// Largest `|mean_i - S/N|` in units of its naive standard error.
    pub max_mean_deviation_sigma: f64,
    /// `(lag, autocorrelation)` of the first coordinate over emitted samples.
    pub autocorrelation: Vec<(usize, f64)>,
    /// Same over the pre-thinning trace, when one was recorded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_autocorrelation: Option<Vec<(usize, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled_ks: Option<f64>,
}

const LAGS: [usize; 4] = [1, 2, 5, 10];

pub fn diagnostics(chain: &SampleChain, f: Option<&WeightFunction>) -> Diagnostics {
    let expected = chain.total / chain.n as f64;
    let count = chain.len();
    let coordinate_means: Vec<f64> = (0..chain.n)
        .map(|i| if count == 0 { f64::NAN } else { chain.iter().map(|s| s[i]).sum::<f64>() / count as f64 })
        .collect();
    let max_dev = (0..chain.n)
        .map(|i| {
            let c = chain.coordinate(i);
            let se = (stats::variance(&c) / count as f64).sqrt();
            if se > 0.0 {
                (coordinate_means[i] - expected).abs() / se
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    let first = chain.coordinate(0);
    let lagged = |series: &[f64]| -> Vec<(usize, f64)> {
        LAGS.iter().filter(|&&l| l < series.len()).map(|&l| (l, stats::autocorrelation(series, l))).collect()
    };
    Diagnostics {
        samples: count,
        rejection_rate: chain.rejection_rate(),
        degenerate_chords: chain.degenerate_chords,
        expected_mean: expected,
        coordinate_means,
        max_mean_deviation_sigma: max_dev,
        autocorrelation: lagged(&first),
        trace_autocorrelation: chain.trace.as_deref().map(lagged),
        pooled_ks: f.map(|f| pooled_ks(chain, f)),
    }
}

/// Pooled KS distances of the two direction schemes on the same target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeComparison {
    pub hd_ks: f64,
    pub cd_ks: f64,
    pub hd_rejection_rate: f64,
    pub cd_rejection_rate: f64,
    /// Set when the pair-exchange chain is farther from `f`.
    pub cd_worse: bool,
    pub note: String,
}

pub fn compare_schemes(f: &WeightFunction, hd: &SampleChain, cd: &SampleChain) -> SchemeComparison {
    let hd_ks = pooled_ks(hd, f);
    let cd_ks = pooled_ks(cd, f);
    let cd_worse = cd_ks >= hd_ks;
    let note = if cd_worse {
        format!("pair-exchange chain is farther from the weight function: KS {cd_ks:.4} vs {hd_ks:.4}")
    } else {
        format!("pair-exchange chain is not worse: KS {cd_ks:.4} vs {hd_ks:.4}")
    };
    SchemeComparison {
        hd_ks,
        cd_ks,
        hd_rejection_rate: hd.rejection_rate(),
        cd_rejection_rate: cd.rejection_rate(),
        cd_worse,
        note,
    }
}
