use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use sfcdist::distributions::fit_to_percentiles;
use sfcdist::estimation::{estimate_parameters, EstimationProblem, EstimationReport, FixedParameters};
use sfcdist::ingest::{load_percentile_file, LoadOptions, PercentScale};
use sfcdist::mass_transport::{
    classify_phase, condensate_statistic, marginal, solve_chemical_potential, CondensateSummary, PhaseReport,
};
use sfcdist::sampler::{
    compare_schemes, diagnostics, pooled_histogram, run_chains, write_histogram_csv, Diagnostics, SchemeComparison,
    DEFAULT_THINNING,
};
use sfcdist::sfc_model::{aggregate_output, constant_sum, constant_sum_heterogeneous, reduce, IncomeMap};
use sfcdist::{
    ConstraintSet, Density, DirectionScheme, Error, Family, FittedDistribution, ModelParameters, Phase, SampleChain,
    SamplerConfig, SteadyStateSystem, WeightFunction,
};

use crate::manifest::Pipeline;

/// Bad command-line input that the library never sees.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// A result that violates an invariant the algorithms guarantee.
#[derive(Debug)]
pub struct NumericAnomaly(pub String);

impl std::fmt::Display for NumericAnomaly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericAnomaly {}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn absolute_input(path: &Path) -> Result<PathBuf> {
    fs::canonicalize(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn absolute(path: &Path) -> Result<PathBuf> {
    Ok(std::path::absolute(path)?)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn read_params(path: &Path) -> Result<sfcdist::sfc_model::ParameterFile> {
    ModelParameters::parse_file(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

fn read_fit(path: &Path) -> Result<FittedDistribution> {
    FittedDistribution::parse(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Percentile table (CSV with `percentile` and `value` columns).
    pub input: PathBuf,
    #[arg(long, default_value = "lognormal")]
    pub family: Family,
    /// How to read the percentile column: auto, fraction or percent.
    #[arg(long, default_value = "auto", value_parser = parse_scale)]
    pub percent_scale: PercentScale,
    /// Output file; defaults to `fit.txt` in the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn parse_scale(s: &str) -> std::result::Result<PercentScale, String> {
    match s {
        "auto" => Ok(PercentScale::Auto),
        "fraction" => Ok(PercentScale::Fraction),
        "percent" => Ok(PercentScale::Percent),
        other => Err(format!("expected auto, fraction or percent, got `{other}`")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub input: PathBuf,
    pub family: Family,
    pub percent_scale: PercentScale,
    pub out: PathBuf,
}

impl FitArgs {
    pub fn resolve(self) -> Result<FitConfig> {
        let out = match self.out {
            Some(p) => absolute(&p)?,
            None => absolute(&self.out_dir)?.join("fit.txt"),
        };
        Ok(FitConfig { input: absolute_input(&self.input)?, family: self.family, percent_scale: self.percent_scale, out })
    }
}

impl Pipeline for FitConfig {
    const NAME: &'static str = "fit";

    fn inputs(&self) -> Vec<PathBuf> {
        vec![self.input.clone()]
    }

    fn out_dir(&self) -> PathBuf {
        self.out.parent().map(Path::to_path_buf).unwrap_or_default()
    }

    fn set_out_dir(&mut self, dir: PathBuf) {
        let name = self.out.file_name().map(PathBuf::from).unwrap_or_else(|| "fit.txt".into());
        self.out = dir.join(name);
    }

    fn execute(&self) -> Result<Vec<String>> {
        let table = load_percentile_file(&self.input, LoadOptions { scale: self.percent_scale })
            .with_context(|| format!("in {}", self.input.display()))?;
        let fit = fit_to_percentiles(&table, self.family)?;
        fs::write(&self.out, fit.to_kv()).with_context(|| format!("writing {}", self.out.display()))?;
        print!("{}", fit.to_kv());
        Ok(vec![self.out.file_name().unwrap_or_default().to_string_lossy().into_owned()])
    }
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Parameter file (`key = value` lines).
    #[arg(long)]
    pub params: PathBuf,
    /// Number of households; overrides `nw` in the parameter file.
    #[arg(long)]
    pub nw: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub params: PathBuf,
    pub nw: usize,
    pub out_dir: PathBuf,
}

impl SolveArgs {
    pub fn resolve(self) -> Result<SolveConfig> {
        let params = absolute_input(&self.params)?;
        let file = read_params(&params)?;
        let from_file = file.alpha0_households.as_ref().map(Vec::len).or(file.nw);
        let nw = match (self.nw, from_file) {
            (Some(a), Some(b)) if file.alpha0_households.is_some() && a != b => {
                return Err(input_error(format!("--nw {a} conflicts with {b} household alpha0 values")));
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => return Err(input_error("the number of households is not set: pass --nw")),
        };
        Ok(SolveConfig { params, nw, out_dir: absolute(&self.out_dir)? })
    }
}

#[derive(Debug, Serialize)]
struct SolveReport {
    nw: usize,
    parameters: ModelParameters,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha0_households: Option<Vec<f64>>,
    denominator: f64,
    /// Total household deposits.
    constant_sum: f64,
    aggregate_output: f64,
    wealth_per_household: f64,
    rank: usize,
    unknowns: usize,
    free_variables: Vec<String>,
    constant_sum_row_rhs: f64,
    /// `WBs = intercept + slope * M`.
    income_map: IncomeMap,
    zero_state: bool,
}

impl Pipeline for SolveConfig {
    const NAME: &'static str = "solve";

    fn inputs(&self) -> Vec<PathBuf> {
        vec![self.params.clone()]
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir.clone()
    }

    fn set_out_dir(&mut self, dir: PathBuf) {
        self.out_dir = dir;
    }

    fn execute(&self) -> Result<Vec<String>> {
        let file = read_params(&self.params)?;
        let p = file.params;
        p.validate()?;
        let (system, total) = match &file.alpha0_households {
            Some(a0) => (SteadyStateSystem::build_heterogeneous(&p, a0)?, constant_sum_heterogeneous(&p, a0)?),
            None => (SteadyStateSystem::build(&p, self.nw)?, constant_sum(&p, self.nw)?),
        };
        let reduced = reduce(&system)?;
        let rhs = reduced.constant_sum_row.rhs;
        if (rhs - total).abs() > 1e-9 * total.abs().max(1.0) {
            return Err(NumericAnomaly(format!("reduced constant sum {rhs} disagrees with the closed form {total}")).into());
        }
        let output = match &file.alpha0_households {
            Some(a0) => a0.iter().sum::<f64>() / p.denominator(),
            None => aggregate_output(&p, self.nw)?,
        };
        let report = SolveReport {
            nw: self.nw,
            parameters: p,
            alpha0_households: file.alpha0_households.clone(),
            denominator: p.denominator(),
            constant_sum: total,
            aggregate_output: output,
            wealth_per_household: total / self.nw as f64,
            rank: reduced.rank(),
            unknowns: system.unknowns(),
            free_variables: reduced.free_columns.iter().map(|&c| reduced.labels[c].to_string()).collect(),
            constant_sum_row_rhs: rhs,
            income_map: p.income_map()?,
            zero_state: total == 0.0,
        };
        write_json(&self.out_dir.join("solve.json"), &report)?;

        let mut out = create(&self.out_dir.join("rref.csv"))?;
        let header: Vec<String> = reduced.labels.iter().map(ToString::to_string).chain(["rhs".to_string()]).collect();
        writeln!(out, "{}", header.join(","))?;
        for row in &reduced.rref {
            let cells: Vec<String> = row.iter().map(|v| (v + 0.0).to_string()).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        out.flush()?;

        println!(
            "sum M = {total}, Y = {output}, WBs = {} + {} M (rank {} of {})",
            report.income_map.intercept,
            report.income_map.slope,
            report.rank,
            report.unknowns
        );
        Ok(vec!["solve.json".into(), "rref.csv".into()])
    }
}

// ---------------------------------------------------------------- mu

#[derive(Debug, Args)]
pub struct MuArgs {
    /// Fitted distribution file.
    #[arg(long)]
    pub fit: PathBuf,
    /// Mean wealth per site.
    #[arg(long)]
    pub rho: f64,
    /// Abscissae in the marginal CSV.
    #[arg(long, default_value_t = 512)]
    pub points: usize,
    /// Right end of the marginal CSV; defaults to the support bound or the
    /// 99.9th percentile of the weight function.
    #[arg(long)]
    pub upper: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuConfig {
    pub fit: PathBuf,
    pub rho: f64,
    pub points: usize,
    pub upper: f64,
    pub out_dir: PathBuf,
}

impl MuArgs {
    pub fn resolve(self) -> Result<MuConfig> {
        let fit = absolute_input(&self.fit)?;
        let f = read_fit(&fit)?.weight;
        let upper = match self.upper {
            Some(u) if u > 0.0 && u.is_finite() => u,
            Some(u) => return Err(input_error(format!("--upper must be positive, got {u}"))),
            None => match f.support().1 {
                Some(u) => u,
                None => f.quantile(0.999)?,
            },
        };
        if self.points < 2 {
            return Err(input_error("--points must be at least 2"));
        }
        Ok(MuConfig { fit, rho: self.rho, points: self.points, upper, out_dir: absolute(&self.out_dir)? })
    }
}

#[derive(Debug, Serialize)]
struct MuReport {
    weight: WeightFunction,
    phase: PhaseReport,
    mu: f64,
    marginal_mean: f64,
    marginal_mass: f64,
}

impl Pipeline for MuConfig {
    const NAME: &'static str = "mu";

    fn inputs(&self) -> Vec<PathBuf> {
        vec![self.fit.clone()]
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir.clone()
    }

    fn set_out_dir(&mut self, dir: PathBuf) {
        self.out_dir = dir;
    }

    fn execute(&self) -> Result<Vec<String>> {
        let f = read_fit(&self.fit)?.weight;
        let rho = Density::new(self.rho)?;
        let phase = classify_phase(&f, rho);
        if phase == Phase::Condensed {
            return Err(Error::PhaseRefusal { phase, rho: rho.rho, mean: f.mean().unwrap_or(f64::NAN) }.into());
        }
        let mu = solve_chemical_potential(&f, rho)?;
        let m = marginal(&f, mu)?;
        let report = MuReport {
            weight: f,
            phase: PhaseReport { phase, mean_f: f.mean().ok(), rho: rho.rho, mu: Some(mu) },
            mu,
            marginal_mean: m.mean(),
            marginal_mass: m.total_mass(),
        };
        write_json(&self.out_dir.join("mu.json"), &report)?;
        let mut out = create(&self.out_dir.join("marginal.csv"))?;
        m.write_csv(&mut out, self.upper, self.points)?;
        out.flush()?;
        println!("mu = {mu} ({phase})");
        Ok(vec!["mu.json".into(), "marginal.csv".into()])
    }
}

// ---------------------------------------------------------------- sample

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Fitted distribution file used as the weight function.
    #[arg(long, required_unless_present = "uniform")]
    pub fit: Option<PathBuf>,
    /// Sample uniformly on the constraint set instead.
    #[arg(long, conflicts_with = "fit")]
    pub uniform: bool,
    /// Parameter file; the target sum is its constant sum at `--nw`.
    #[arg(long, conflicts_with = "total")]
    pub params: Option<PathBuf>,
    /// Number of households (coordinates).
    #[arg(long)]
    pub nw: Option<usize>,
    /// Explicit target sum.
    #[arg(long)]
    pub total: Option<f64>,
    /// Rescale the weight function so its mean is `total / nw`.
    #[arg(long)]
    pub match_mean: bool,
    #[arg(long, default_value = "hd")]
    pub scheme: DirectionScheme,
    #[arg(long, default_value_t = DEFAULT_THINNING)]
    pub thin: u64,
    /// Discarded initial steps; defaults to `10 * nw`.
    #[arg(long)]
    pub burn_in: Option<u64>,
    /// Total steps including burn-in.
    #[arg(long, conflicts_with = "samples")]
    pub chain_length: Option<u64>,
    /// Emitted samples per chain, as an alternative to `--chain-length`.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Independent chains, seeded `seed`, `seed + 1`, ...
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Generated and recorded in the manifest when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    /// Right end of the histogram; defaults to the 99th percentile of the
    /// weight function, capped at the target sum.
    #[arg(long)]
    pub hist_upper: Option<f64>,
    /// Also run the other direction scheme and compare the two.
    #[arg(long)]
    pub compare: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub fit: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub weight: WeightFunction,
    pub total: f64,
    pub nw: usize,
    pub scheme: DirectionScheme,
    pub thin: u64,
    pub burn_in: u64,
    pub chain_length: u64,
    pub chains: usize,
    pub seed: u64,
    pub bins: usize,
    pub hist_upper: f64,
    pub compare: bool,
    pub out_dir: PathBuf,
}

pub const DEFAULT_SAMPLES: u64 = 1000;

impl SampleArgs {
    pub fn resolve(self) -> Result<SampleConfig> {
        let params = self.params.as_deref().map(absolute_input).transpose()?;
        let (total, nw) = match (&params, self.total) {
            (Some(p), _) => {
                let file = read_params(p)?;
                let nw = self.nw.or(file.nw).ok_or_else(|| input_error("--nw is required with --params"))?;
                (constant_sum(&file.params, nw)?, nw)
            }
            (None, Some(t)) => (t, self.nw.ok_or_else(|| input_error("--nw is required with --total"))?),
            (None, None) => return Err(input_error("give either --params or --total")),
        };
        let constraints = ConstraintSet::new(total, nw)?;
        let fit = self.fit.as_deref().map(absolute_input).transpose()?;
        let mut weight = match (&fit, self.uniform) {
            (Some(path), _) => read_fit(path)?.weight,
            (None, true) => WeightFunction::uniform(total)?,
            (None, false) => return Err(input_error("give either --fit or --uniform")),
        };
        if self.match_mean && fit.is_some() {
            weight = weight.with_mean(constraints.density())?;
        }
        if self.thin == 0 {
            return Err(input_error("--thin must be at least 1"));
        }
        if self.chains == 0 {
            return Err(input_error("--chains must be at least 1"));
        }
        let burn_in = self.burn_in.unwrap_or(10 * nw as u64);
        let chain_length = self.chain_length.unwrap_or(burn_in + self.samples.unwrap_or(DEFAULT_SAMPLES) * self.thin);
        let hist_upper = match self.hist_upper {
            Some(u) if u > 0.0 => u,
            Some(u) => return Err(input_error(format!("--hist-upper must be positive, got {u}"))),
            None => weight.quantile(0.99)?.min(total),
        };
        Ok(SampleConfig {
            fit,
            params,
            weight,
            total,
            nw,
            scheme: self.scheme,
            thin: self.thin,
            burn_in,
            chain_length,
            chains: self.chains,
            seed: self.seed.unwrap_or_else(rand::random),
            bins: self.bins.max(1),
            hist_upper,
            compare: self.compare,
            out_dir: absolute(&self.out_dir)?,
        })
    }
}

#[derive(Debug, Serialize)]
struct SampleReport {
    weight: WeightFunction,
    constraints: ConstraintSet,
    phase: Phase,
    configs: Vec<SamplerConfig>,
    chains: Vec<Diagnostics>,
    merged: Diagnostics,
    max_sum_deviation: f64,
    condensate: CondensateSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme_comparison: Option<SchemeComparison>,
}

impl SampleConfig {
    fn sampler_configs(&self, scheme: DirectionScheme) -> Vec<SamplerConfig> {
        (0..self.chains as u64)
            .map(|k| SamplerConfig {
                scheme,
                chain_length: self.chain_length,
                thinning: self.thin,
                burn_in: self.burn_in,
                seed: self.seed.wrapping_add(k),
                record_trace: false,
            })
            .collect()
    }
}

/// Largest `|sum(m) - total| / total` over the emitted samples.
pub fn max_sum_deviation(chain: &SampleChain) -> f64 {
    chain.iter().map(|s| (s.iter().sum::<f64>() - chain.total).abs() / chain.total).fold(0.0, f64::max)
}

impl Pipeline for SampleConfig {
    const NAME: &'static str = "sample";

    fn inputs(&self) -> Vec<PathBuf> {
        self.fit.iter().chain(&self.params).cloned().collect()
    }

    fn seed(&self) -> Option<u64> {
        Some(self.seed)
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir.clone()
    }

    fn set_out_dir(&mut self, dir: PathBuf) {
        self.out_dir = dir;
    }

    fn execute(&self) -> Result<Vec<String>> {
        let constraints = ConstraintSet::new(self.total, self.nw)?;
        let f = &self.weight;
        let configs = self.sampler_configs(self.scheme);
        let chains = run_chains(f, &constraints, &configs)?;
        let merged = SampleChain::merge(&chains)?;
        let deviation = max_sum_deviation(&merged);
        if deviation > 1e-9 {
            return Err(NumericAnomaly(format!("a sample violates the sum constraint by {deviation:e} relative")).into());
        }

        let mut names = Vec::new();
        if chains.len() > 1 {
            for (k, c) in chains.iter().enumerate() {
                let name = format!("chain_{k}.csv");
                let mut out = create(&self.out_dir.join(&name))?;
                c.write_csv(&mut out)?;
                out.flush()?;
                names.push(name);
            }
        }
        let mut out = create(&self.out_dir.join("chain.csv"))?;
        merged.write_csv(&mut out)?;
        out.flush()?;
        names.push("chain.csv".into());

        let bins = pooled_histogram(&merged, f, self.bins, self.hist_upper);
        let mut out = create(&self.out_dir.join("histogram.csv"))?;
        write_histogram_csv(&bins, &mut out)?;
        out.flush()?;
        names.push("histogram.csv".into());

        let scheme_comparison = if self.compare {
            let other = match self.scheme {
                DirectionScheme::Hd => DirectionScheme::Cd,
                DirectionScheme::Cd => DirectionScheme::Hd,
            };
            let others = SampleChain::merge(&run_chains(f, &constraints, &self.sampler_configs(other))?)?;
            Some(match self.scheme {
                DirectionScheme::Hd => compare_schemes(f, &merged, &others),
                DirectionScheme::Cd => compare_schemes(f, &others, &merged),
            })
        } else {
            None
        };
        let uniform = matches!(*f, WeightFunction::Uniform { .. });
        let report = SampleReport {
            weight: *f,
            constraints,
            phase: classify_phase(f, Density::new(constraints.density())?),
            configs,
            chains: chains.iter().map(|c| diagnostics(c, (!uniform).then_some(f))).collect(),
            merged: diagnostics(&merged, (!uniform).then_some(f)),
            max_sum_deviation: deviation,
            condensate: condensate_statistic(&merged),
            scheme_comparison,
        };
        write_json(&self.out_dir.join("diagnostics.json"), &report)?;
        names.push("diagnostics.json".into());
        println!(
            "{} samples, rejection rate {:.4}{}",
            merged.len(),
            merged.rejection_rate(),
            report.merged.pooled_ks.map(|ks| format!(", pooled KS {ks:.4}")).unwrap_or_default()
        );
        if let Some(c) = &report.scheme_comparison {
            println!("{}", c.note);
        }
        Ok(names)
    }
}

// ---------------------------------------------------------------- estimate

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Income percentile table.
    #[arg(long)]
    pub income: PathBuf,
    /// Wealth percentile table.
    #[arg(long)]
    pub wealth: PathBuf,
    /// Parameter file; only `r`, `delta` and `k` are used.
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, default_value = "lognormal")]
    pub family: Family,
    #[arg(long, default_value = "auto", value_parser = parse_scale)]
    pub percent_scale: PercentScale,
    #[arg(long, default_value_t = sfcdist::estimation::DEFAULT_STARTS)]
    pub starts: usize,
    /// Generated and recorded in the manifest when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Unit of the wealth table, overriding its `unit` column.
    #[arg(long)]
    pub wealth_unit: Option<String>,
    /// Unit of the income table, overriding its `unit` column.
    #[arg(long)]
    pub income_unit: Option<String>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub income: PathBuf,
    pub wealth: PathBuf,
    pub params: PathBuf,
    pub family: Family,
    pub percent_scale: PercentScale,
    pub starts: usize,
    pub seed: u64,
    pub wealth_unit: Option<String>,
    pub income_unit: Option<String>,
    pub out_dir: PathBuf,
}

impl EstimateArgs {
    pub fn resolve(self) -> Result<EstimateConfig> {
        if self.starts == 0 {
            return Err(input_error("--starts must be at least 1"));
        }
        Ok(EstimateConfig {
            income: absolute_input(&self.income)?,
            wealth: absolute_input(&self.wealth)?,
            params: absolute_input(&self.params)?,
            family: self.family,
            percent_scale: self.percent_scale,
            starts: self.starts,
            seed: self.seed.unwrap_or_else(rand::random),
            wealth_unit: self.wealth_unit,
            income_unit: self.income_unit,
            out_dir: absolute(&self.out_dir)?,
        })
    }
}

#[derive(Debug, Serialize)]
struct EstimateOutput {
    wealth_fit: FittedDistribution,
    report: EstimationReport,
}

impl Pipeline for EstimateConfig {
    const NAME: &'static str = "estimate";

    fn inputs(&self) -> Vec<PathBuf> {
        vec![self.income.clone(), self.wealth.clone(), self.params.clone()]
    }

    fn seed(&self) -> Option<u64> {
        Some(self.seed)
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir.clone()
    }

    fn set_out_dir(&mut self, dir: PathBuf) {
        self.out_dir = dir;
    }

    fn execute(&self) -> Result<Vec<String>> {
        let options = LoadOptions { scale: self.percent_scale };
        let wealth = load_percentile_file(&self.wealth, options).with_context(|| format!("in {}", self.wealth.display()))?;
        let mut income =
            load_percentile_file(&self.income, options).with_context(|| format!("in {}", self.income.display()))?;
        if self.income_unit.is_some() {
            income.unit = self.income_unit.clone();
        }
        let fixed = FixedParameters::from(&read_params(&self.params)?.params);
        let wealth_fit = fit_to_percentiles(&wealth, self.family)?;
        let mut problem = EstimationProblem::new(wealth_fit.weight, income, fixed);
        problem.starts = self.starts;
        problem.seed = self.seed;
        problem.wealth_unit = self.wealth_unit.clone().or(wealth.unit.clone());
        let report = estimate_parameters(&problem)?;
        for w in &report.warnings {
            log::warn!("{w}");
        }
        println!(
            "alpha0 = {}, alpha1 = {}, alpha2 = {}, residual = {:e}",
            report.params.alpha0, report.params.alpha1, report.params.alpha2, report.residual
        );
        write_json(&self.out_dir.join("estimation.json"), &EstimateOutput { wealth_fit, report })?;
        Ok(vec!["estimation.json".into()])
    }
}
