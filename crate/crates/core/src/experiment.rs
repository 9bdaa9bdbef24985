//! Parallel Monte Carlo harness.
//!
//! Each `(n, repetition)` cell draws its own seeds from
//! [`crate::rng::repetition_seed`], so records do not depend on thread count
//! or scheduling, and raising the repetition count keeps earlier records
//! unchanged.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use crate::constants::{abs_moment, bias_constants, finite_sample_nu1};
use crate::error::{config, Error, Result};
use crate::estimators::{make_block_scheme, make_gamma_scheme, Analysis, BlockScheme, EstimatorOptions};
use crate::io::format_f64;
use crate::rng::{repetition_seed, stream_seed, Stream};
use crate::simulate::{add_jumps, add_noise, simulate_constant_vol_path, simulate_sv_path, SimPath, SvModelParams};

pub const DEFAULT_REPETITIONS: usize = 2000;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Sv(SvModelParams),
    ConstantVol { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    pub count: usize,
    /// Standard deviation of the jump size.
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    Mrv,
    Mrq,
    MbvRobust,
    Mtq,
    /// Raw `MBV(Y, r, l)` (or its γ-normalised version), compared with its
    /// probability limit.
    MbvRaw {
        r: f64,
        l: f64,
    },
    /// `n^{1/4}(MRV − IV)/β_n`.
    Standardized,
    /// `n^{1/4}(log MRV − log IV)/(β_n/MRV)`.
    StandardizedLog,
}

impl EstimatorKind {
    pub fn is_statistic(&self) -> bool {
        matches!(self, EstimatorKind::Standardized | EstimatorKind::StandardizedLog)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::Mrv => f.write_str("mrv"),
            EstimatorKind::Mrq => f.write_str("mrq"),
            EstimatorKind::MbvRobust => f.write_str("mbv_robust"),
            EstimatorKind::Mtq => f.write_str("mtq"),
            EstimatorKind::MbvRaw { r, l } => write!(f, "mbv_raw({r},{l})"),
            EstimatorKind::Standardized => f.write_str("standardized"),
            EstimatorKind::StandardizedLog => f.write_str("standardized_log"),
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "mrv" => EstimatorKind::Mrv,
            "mrq" => EstimatorKind::Mrq,
            "mbv_robust" => EstimatorKind::MbvRobust,
            "mtq" => EstimatorKind::Mtq,
            "standardized" => EstimatorKind::Standardized,
            "standardized_log" => EstimatorKind::StandardizedLog,
            _ => {
                let inner = s
                    .strip_prefix("mbv_raw(")
                    .and_then(|rest| rest.strip_suffix(')'))
                    .ok_or_else(|| config(format!("unknown estimator `{s}`")))?;
                let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
                let parse = |p: &str| {
                    p.parse::<f64>()
                        .ok()
                        .filter(|v| *v >= 0.0 && v.is_finite())
                        .ok_or_else(|| config(format!("bad power `{p}` in `{s}`")))
                };
                match parts.as_slice() {
                    [r, l] => EstimatorKind::MbvRaw { r: parse(r)?, l: parse(l)? },
                    _ => return Err(config(format!("expected mbv_raw(r,l), got `{s}`"))),
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub label: String,
    pub model: Model,
    pub n_grid: Vec<usize>,
    pub omega2: f64,
    pub c1: f64,
    pub c2: f64,
    pub gamma: Option<f64>,
    pub jumps: Option<JumpSpec>,
    pub estimators: Vec<EstimatorKind>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub finite_sample_nu1: bool,
}

impl ExperimentConfig {
    /// The noisy stochastic-volatility setting with default tuning.
    pub fn sv(label: &str, n_grid: Vec<usize>, omega2: f64, c1: f64, c2: f64) -> Self {
        Self {
            label: label.to_string(),
            model: Model::Sv(SvModelParams::default()),
            n_grid,
            omega2,
            c1,
            c2,
            gamma: None,
            jumps: None,
            estimators: vec![EstimatorKind::Mrv],
            repetitions: DEFAULT_REPETITIONS,
            base_seed: DEFAULT_SEED,
            finite_sample_nu1: true,
        }
    }

    pub fn scheme(&self, n: usize) -> Result<BlockScheme> {
        let built = match self.gamma {
            Some(g) => make_gamma_scheme(n, self.c1, self.c2, g),
            None => make_block_scheme(n, self.c1, self.c2),
        };
        built.map_err(|e| {
            config(format!(
                "experiment `{}`: no block scheme for n={n}, c1={}, c2={}: {e}",
                self.label, self.c1, self.c2
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(config("repetitions must be >= 1"));
        }
        if self.n_grid.is_empty() {
            return Err(config("n_grid must not be empty"));
        }
        if self.estimators.is_empty() {
            return Err(config("no estimators requested"));
        }
        if !(self.omega2 >= 0.0) {
            return Err(config(format!("omega2 must be >= 0, got {}", self.omega2)));
        }
        if let Some(j) = self.jumps {
            if j.count == 0 || !(j.h > 0.0) {
                return Err(config("jumps need count >= 1 and h > 0"));
            }
        }
        if self.gamma.is_some() {
            if let Some(e) = self.estimators.iter().find(|e| !matches!(e, EstimatorKind::MbvRaw { .. })) {
                return Err(config(format!("estimator `{e}` is not defined under a gamma scheme")));
            }
        }
        for &n in &self.n_grid {
            self.scheme(n)?;
        }
        Ok(())
    }
}

/// One estimator evaluated on one simulated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub n: usize,
    pub rep: usize,
    pub estimator: EstimatorKind,
    /// `None` when the statistic was undefined on this path.
    pub estimate: Option<f64>,
    /// `∫σ²`, `∫σ⁴`, the MBV limit, or `0` for standardized statistics.
    pub truth: f64,
}

impl Record {
    pub fn error(&self) -> Option<f64> {
        self.estimate.map(|e| e - self.truth)
    }
}

/// Runs every `(n, repetition)` cell, in parallel on `threads` workers
/// (rayon's global pool when `None`). Records come back in `(n, rep,
/// estimator)` order regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<Record>> {
    cfg.validate()?;
    let cells: Vec<(usize, BlockScheme, usize)> = cfg
        .n_grid
        .iter()
        .map(|&n| cfg.scheme(n).map(|s| (n, s)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flat_map(|(n, s)| (0..cfg.repetitions).map(move |rep| (n, s, rep)))
        .collect();

    let work = || {
        cells
            .par_iter()
            .map(|&(n, scheme, rep)| run_repetition(cfg, n, scheme, rep))
            .collect::<Result<Vec<Vec<Record>>>>()
    };
    let nested = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Ok(nested.into_iter().flatten().collect())
}

/// Path for repetition `rep` at grid size `n`.
pub fn simulate_repetition_path(cfg: &ExperimentConfig, n: usize, rep: usize) -> Result<SimPath> {
    let seed = stream_seed(repetition_seed(cfg.base_seed, n, rep), Stream::Path);
    match cfg.model {
        Model::Sv(params) => simulate_sv_path(&params, n, seed),
        Model::ConstantVol { mu } => simulate_constant_vol_path(mu, n, seed),
    }
}

fn run_repetition(cfg: &ExperimentConfig, n: usize, scheme: BlockScheme, rep: usize) -> Result<Vec<Record>> {
    let rep_seed = repetition_seed(cfg.base_seed, n, rep);
    let path = simulate_repetition_path(cfg, n, rep)?;
    let mut obs = add_noise(&path, cfg.omega2, stream_seed(rep_seed, Stream::Noise))?;
    if let Some(j) = cfg.jumps {
        obs = add_jumps(&obs, j.count, j.h, stream_seed(rep_seed, Stream::Jumps))?;
    }
    let options = EstimatorOptions { finite_sample_nu1: cfg.finite_sample_nu1 };
    let analysis = Analysis::with_options(&obs, scheme, options)?;

    cfg.estimators
        .iter()
        .map(|&kind| {
            let (value, truth) = match kind {
                EstimatorKind::Mrv => (analysis.mrv().map(|e| e.value), path.iv),
                EstimatorKind::Mrq => (analysis.mrq().map(|e| e.value), path.iq),
                EstimatorKind::MbvRobust => (analysis.mbv_robust().map(|e| e.value), path.iv),
                EstimatorKind::Mtq => (analysis.mtq().map(|e| e.value), path.iq),
                EstimatorKind::MbvRaw { r, l } => {
                    let value = if scheme.gamma > 0.0 {
                        let powers: &[f64] = if l == 0.0 { &[r] } else { &[r, l] };
                        analysis.mmv_gamma(powers)
                    } else {
                        analysis.mbv(r, l)
                    };
                    (value, mbv_limit(&path, &scheme, r, l, cfg)?)
                }
                EstimatorKind::Standardized => (analysis.standardized_iv_stat(path.iv, false), 0.0),
                EstimatorKind::StandardizedLog => (analysis.standardized_iv_stat(path.iv, true), 0.0),
            };
            let estimate = match value {
                Ok(v) => Some(v),
                Err(Error::UndefinedStatistic(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(Record { n, rep, estimator: kind, estimate, truth })
        })
        .collect()
}

/// Probability limit of the raw statistic on this path:
/// `μ_r μ_l/(c1c2) ∫(ν1σ² + ν2ω²)^{(r+l)/2}` for the balanced scheme and
/// `μ_r μ_l ν1^{(r+l)/2}/(c1c2) ∫|σ|^{r+l}` under a gamma scheme.
fn mbv_limit(path: &SimPath, scheme: &BlockScheme, r: f64, l: f64, cfg: &ExperimentConfig) -> Result<f64> {
    let mu = abs_moment(r)? * abs_moment(l)?;
    let c = bias_constants(scheme.c1_eff, scheme.c2_eff)?;
    let p = r + l;
    if scheme.gamma > 0.0 {
        let integral = path.integrated_power(p, 1.0, 0.0);
        return Ok(mu * c.nu1.powf(0.5 * p) / scheme.c1c2() * integral);
    }
    let nu1 = if cfg.finite_sample_nu1 { finite_sample_nu1(scheme.n, scheme.c1_eff, scheme.c2_eff)? } else { c.nu1 };
    Ok(mu / scheme.c1c2() * path.integrated_power(p, nu1, c.nu2 * cfg.omega2))
}

/// Mean and variance of `estimate − truth` for one `(n, estimator)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub n: usize,
    pub estimator: String,
    /// `None` when every repetition failed.
    pub mean: Option<f64>,
    /// Unbiased sample variance; `0` for a single repetition.
    pub variance: Option<f64>,
    pub reps: usize,
    pub failures: usize,
}

/// Groups by `(n, estimator)`, rows ordered by `n` then estimator name.
/// Errors are sorted before summation so the result does not depend on
/// record order.
pub fn aggregate(records: &[Record]) -> Result<Vec<ResultRow>> {
    if records.is_empty() {
        return Err(config("no records to aggregate"));
    }
    let mut cells: BTreeMap<(usize, String), (Vec<f64>, usize)> = BTreeMap::new();
    for rec in records {
        let entry = cells.entry((rec.n, rec.estimator.to_string())).or_default();
        match rec.error() {
            Some(e) => entry.0.push(e),
            None => entry.1 += 1,
        }
    }
    Ok(cells
        .into_iter()
        .map(|((n, estimator), (mut errors, failures))| {
            errors.sort_by(f64::total_cmp);
            let (mean, variance) = mean_variance(&errors);
            ResultRow { n, estimator, mean, variance, reps: errors.len(), failures }
        })
        .collect())
}

pub fn mean_variance(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let variance =
        if values.len() == 1 { 0.0 } else { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0) };
    (Some(mean), Some(variance))
}

/// Raw standardized values of one statistic at one grid size.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub n: usize,
    pub statistic: EstimatorKind,
    /// `(repetition, value)` for every repetition where the statistic exists.
    pub rows: Vec<(usize, f64)>,
    /// Repetitions dropped because the statistic was undefined.
    pub discarded: usize,
}

pub fn histogram_export(records: &[Record], statistic: EstimatorKind, n: usize) -> Result<Histogram> {
    if !statistic.is_statistic() {
        return Err(config(format!("`{statistic}` is not a standardized statistic")));
    }
    let mut selected: Vec<&Record> = records.iter().filter(|r| r.estimator == statistic && r.n == n).collect();
    if selected.is_empty() {
        return Err(config(format!("statistic `{statistic}` at n={n} was not requested")));
    }
    selected.sort_by_key(|r| r.rep);
    let rows: Vec<(usize, f64)> = selected.iter().filter_map(|r| r.estimate.map(|v| (r.rep, v))).collect();
    let discarded = selected.len() - rows.len();
    Ok(Histogram { n, statistic, rows, discarded })
}

pub fn write_results_csv<W: Write>(mut out: W, rows: &[ResultRow]) -> Result<()> {
    writeln!(out, "n,estimator,mean,variance,reps,failures")?;
    let cell = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.n,
            row.estimator,
            cell(row.mean),
            cell(row.variance),
            row.reps,
            row.failures
        )?;
    }
    Ok(())
}

pub fn write_histogram_csv<W: Write>(mut out: W, hist: &Histogram) -> Result<()> {
    writeln!(out, "rep,value")?;
    for (rep, v) in &hist.rows {
        writeln!(out, "{rep},{}", format_f64(*v))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// configuration files

const PRESETS: &[(&str, &str)] = &[
    ("table1", include_str!("../presets/table1.toml")),
    ("table2", include_str!("../presets/table2.toml")),
    ("table3", include_str!("../presets/table3.toml")),
    ("figure1", include_str!("../presets/figure1.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteFile {
    repetitions: Option<usize>,
    base_seed: Option<u64>,
    #[serde(default)]
    experiment: Vec<ExperimentFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    label: String,
    model: String,
    n_grid: Vec<usize>,
    omega2: f64,
    c1: f64,
    c2: f64,
    gamma: Option<f64>,
    jumps: Option<JumpSpec>,
    estimators: Vec<String>,
    repetitions: Option<usize>,
    base_seed: Option<u64>,
    finite_sample_nu1: Option<bool>,
    /// Drift of the constant-volatility model.
    mu: Option<f64>,
    sv: Option<SvSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SvSection {
    mu: Option<f64>,
    beta0: Option<f64>,
    beta1: Option<f64>,
    alpha: Option<f64>,
    rho: Option<f64>,
    tau0: Option<f64>,
    substeps: Option<usize>,
}

/// A list of experiments read from a TOML file or a named preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub experiments: Vec<ExperimentConfig>,
}

impl Suite {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SuiteFile = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1)).unwrap_or(0);
            Error::Load { line, message: e.message().to_string() }
        })?;
        if file.experiment.is_empty() {
            return Err(config("configuration defines no [[experiment]]"));
        }
        let experiments = file
            .experiment
            .into_iter()
            .map(|e| e.into_config(file.repetitions, file.base_seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { experiments })
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS.iter().find(|(p, _)| *p == name).ok_or_else(|| {
            config(format!("unknown preset `{name}` (available: {})", preset_names().collect::<Vec<_>>().join(", ")))
        })?;
        Self::from_toml_str(text)
    }

    pub fn with_overrides(mut self, repetitions: Option<usize>, base_seed: Option<u64>) -> Self {
        for e in &mut self.experiments {
            if let Some(r) = repetitions {
                e.repetitions = r;
            }
            if let Some(s) = base_seed {
                e.base_seed = s;
            }
        }
        self
    }
}

impl ExperimentFile {
    fn into_config(self, default_reps: Option<usize>, default_seed: Option<u64>) -> Result<ExperimentConfig> {
        let model = match self.model.as_str() {
            "sv" => {
                if self.mu.is_some() {
                    return Err(config(format!("`{}`: set the sv drift in [experiment.sv]", self.label)));
                }
                let s = self.sv.unwrap_or_default();
                let d = SvModelParams::default();
                Model::Sv(SvModelParams {
                    mu: s.mu.unwrap_or(d.mu),
                    beta0: s.beta0.unwrap_or(d.beta0),
                    beta1: s.beta1.unwrap_or(d.beta1),
                    alpha: s.alpha.unwrap_or(d.alpha),
                    rho: s.rho.unwrap_or(d.rho),
                    tau0: s.tau0.unwrap_or(d.tau0),
                    substeps: s.substeps.unwrap_or(d.substeps),
                })
            }
            "constant_vol" => {
                if self.sv.is_some() {
                    return Err(config(format!("`{}`: [experiment.sv] needs model = \"sv\"", self.label)));
                }
                Model::ConstantVol { mu: self.mu.unwrap_or(0.03) }
            }
            other => return Err(config(format!("unknown model `{other}` (sv | constant_vol)"))),
        };
        let estimators = self.estimators.iter().map(|s| s.parse()).collect::<Result<Vec<EstimatorKind>>>()?;
        let cfg = ExperimentConfig {
            label: self.label,
            model,
            n_grid: self.n_grid,
            omega2: self.omega2,
            c1: self.c1,
            c2: self.c2,
            gamma: self.gamma,
            jumps: self.jumps,
            estimators,
            repetitions: self.repetitions.or(default_reps).unwrap_or(DEFAULT_REPETITIONS),
            base_seed: self.base_seed.or(default_seed).unwrap_or(DEFAULT_SEED),
            finite_sample_nu1: self.finite_sample_nu1.unwrap_or(true),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            repetitions: 6,
            estimators: vec![
                EstimatorKind::Mrv,
                EstimatorKind::Mrq,
                EstimatorKind::MbvRobust,
                EstimatorKind::Mtq,
                EstimatorKind::MbvRaw { r: 2.0, l: 0.0 },
                EstimatorKind::Standardized,
                EstimatorKind::StandardizedLog,
            ],
            ..ExperimentConfig::sv("small", vec![256, 1024], 0.01, 0.25, 2.0)
        }
    }

    fn rec(n: usize, rep: usize, estimate: Option<f64>) -> Record {
        Record { n, rep, estimator: EstimatorKind::Mrv, estimate, truth: 0.0 }
    }

    #[test]
    fn estimator_names_round_trip() {
        for kind in small_cfg().estimators {
            assert_eq!(kind.to_string().parse::<EstimatorKind>().unwrap(), kind);
        }
        assert_eq!("mbv_raw(1.5, 0.5)".parse::<EstimatorKind>().unwrap(), EstimatorKind::MbvRaw { r: 1.5, l: 0.5 });
        assert!("mbv_raw(1)".parse::<EstimatorKind>().is_err());
        assert!("kernel".parse::<EstimatorKind>().is_err());
    }

    #[test]
    fn records_are_deterministic_and_ordered() {
        let cfg = small_cfg();
        let a = run_experiment(&cfg, Some(1)).unwrap();
        let b = run_experiment(&cfg, Some(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2 * 6 * 7);
        assert!(a.windows(2).all(|w| (w[0].n, w[0].rep) <= (w[1].n, w[1].rep)));
    }

    #[test]
    fn more_repetitions_extend_the_record_list() {
        let cfg = ExperimentConfig { n_grid: vec![512], ..small_cfg() };
        let short = run_experiment(&cfg, None).unwrap();
        let long = run_experiment(&ExperimentConfig { repetitions: 12, ..cfg }, None).unwrap();
        assert_eq!(&long[..short.len()], &short[..]);
    }

    #[test]
    fn truth_values() {
        let cfg = ExperimentConfig { n_grid: vec![256], repetitions: 1, ..small_cfg() };
        let records = run_experiment(&cfg, None).unwrap();
        let path = simulate_repetition_path(&cfg, 256, 0).unwrap();
        for r in &records {
            let want = match r.estimator {
                EstimatorKind::Mrv | EstimatorKind::MbvRobust => path.iv,
                EstimatorKind::Mrq | EstimatorKind::Mtq => path.iq,
                EstimatorKind::Standardized | EstimatorKind::StandardizedLog => 0.0,
                EstimatorKind::MbvRaw { .. } => continue,
            };
            assert_eq!(r.truth, want, "{}", r.estimator);
        }
    }

    #[test]
    fn aggregate_conventions() {
        let rows = aggregate(&[rec(16, 0, Some(0.3))]).unwrap();
        assert_eq!(rows[0].mean, Some(0.3));
        assert_eq!(rows[0].variance, Some(0.0));
        let a = 0.7;
        let rows = aggregate(&[rec(16, 0, Some(a)), rec(16, 1, Some(-a))]).unwrap();
        assert_eq!(rows[0].mean, Some(0.0));
        assert!((rows[0].variance.unwrap() - 2.0 * a * a).abs() < 1e-15);
        let rows = aggregate(&[rec(16, 0, None), rec(16, 1, None)]).unwrap();
        assert_eq!((rows[0].mean, rows[0].reps, rows[0].failures), (None, 0, 2));
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn aggregate_is_permutation_invariant() {
        let records = run_experiment(&small_cfg(), None).unwrap();
        let mut shuffled = records.clone();
        shuffled.reverse();
        shuffled.rotate_left(17);
        assert_eq!(aggregate(&records).unwrap(), aggregate(&shuffled).unwrap());
    }

    #[test]
    fn histogram_rows() {
        let records = run_experiment(&small_cfg(), None).unwrap();
        let h = histogram_export(&records, EstimatorKind::Standardized, 1024).unwrap();
        assert_eq!(h.rows.len() + h.discarded, 6);
        assert!(histogram_export(&records, EstimatorKind::Mrv, 1024).is_err());
        assert!(histogram_export(&records, EstimatorKind::Standardized, 999).is_err());
        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &h).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("rep,value\n0,"));
    }

    #[test]
    fn results_csv_layout() {
        let rows = vec![
            ResultRow { n: 4096, estimator: "mrv".into(), mean: Some(0.5), variance: Some(0.25), reps: 3, failures: 1 },
            ResultRow {
                n: 4096,
                estimator: "standardized_log".into(),
                mean: None,
                variance: None,
                reps: 0,
                failures: 3,
            },
        ];
        let mut buf = Vec::new();
        write_results_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,estimator,mean,variance,reps,failures\n\
             4096,mrv,5.0000000000000000e-1,2.5000000000000000e-1,3,1\n\
             4096,standardized_log,,,0,3\n"
        );
    }

    #[test]
    fn validation_errors() {
        let bad = ExperimentConfig { repetitions: 0, ..small_cfg() };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { n_grid: vec![], ..small_cfg() };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { n_grid: vec![100], c1: 10.0, ..small_cfg() };
        match run_experiment(&bad, None) {
            Err(Error::Config(msg)) => assert!(msg.contains("n=100") && msg.contains("c1=10")),
            other => panic!("{other:?}"),
        }
        let bad = ExperimentConfig { gamma: Some(0.25), ..small_cfg() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn presets_parse() {
        for name in preset_names() {
            let suite = Suite::preset(name).unwrap();
            assert!(!suite.experiments.is_empty(), "{name}");
            for e in &suite.experiments {
                assert_eq!(e.repetitions, DEFAULT_REPETITIONS);
            }
        }
        assert!(Suite::preset("table9").is_err());
        let t1 = Suite::preset("table1").unwrap();
        assert_eq!(t1.experiments.len(), 2);
        assert_eq!(t1.experiments[0].n_grid, vec![256, 1024, 4096, 9216, 16384, 25600]);
        let t3 = Suite::preset("table3").unwrap();
        assert_eq!(t3.experiments[0].model, Model::ConstantVol { mu: 0.03 });
        let t2 = Suite::preset("table2").unwrap();
        assert_eq!(t2.experiments[2].jumps, Some(JumpSpec { count: 1, h: 0.1 }));
    }

    #[test]
    fn config_file_parsing() {
        let text = r#"
repetitions = 10
base_seed = 7

[[experiment]]
label = "gamma"
model = "sv"
n_grid = [4096]
omega2 = 0.01
c1 = 0.25
c2 = 2.0
gamma = 0.25
estimators = ["mbv_raw(2,0)"]

[experiment.sv]
rho = 0.0
substeps = 2
"#;
        let suite = Suite::from_toml_str(text).unwrap();
        let e = &suite.experiments[0];
        assert_eq!((e.repetitions, e.base_seed, e.gamma), (10, 7, Some(0.25)));
        match e.model {
            Model::Sv(p) => assert_eq!((p.rho, p.substeps, p.mu), (0.0, 2, 0.03)),
            _ => panic!(),
        }
        let o = suite.with_overrides(Some(3), Some(9));
        assert_eq!((o.experiments[0].repetitions, o.experiments[0].base_seed), (3, 9));

        assert!(Suite::from_toml_str("repetitions = 3").is_err());
        assert!(matches!(Suite::from_toml_str("[[experiment]]\nlabel = 1"), Err(Error::Load { .. })));
        let unknown = text.replace("gamma = 0.25", "gamma = 0.25\nbogus = 1");
        assert!(Suite::from_toml_str(&unknown).is_err());
    }
}
