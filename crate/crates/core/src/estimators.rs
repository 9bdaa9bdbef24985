//! Modulated bipower / multipower variation and the estimators built on it.
//!
//! The observation grid `0..=n` is cut into `M` blocks of `L = ⌊n/M⌋` ticks
//! (trailing ticks beyond `M·L` are ignored). Inside block `m` the `K`-lag
//! increments `Y_{i+K} − Y_i`, `i = (m−1)L ..= mL − K`, are summed and divided
//! by the window divisor to give the block average `Ȳ_m`. All block averages
//! come from one prefix-sum pass, so every statistic costs `O(n)`.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::constants::{abs_moment, bias_constants, clt_constant_a, finite_sample_nu1, WindowDivisor};
use crate::error::{config, domain, Error, Result};
use crate::simulate::Observations;

const MIN_GRID: usize = 16;

/// Block geometry `(K, M, L)` for a grid of size `n`.
///
/// `c1_eff = K / n^{1/2+γ}` and `c2_eff = n / (M·K)` are the tuning constants
/// actually realised after rounding; every downstream formula uses them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockScheme {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub l: usize,
    pub c1_eff: f64,
    pub c2_eff: f64,
    /// `0` for the noise-balanced scheme, in `(0, 1/2)` for the
    /// noise-dominated one.
    pub gamma: f64,
    pub divisor: WindowDivisor,
}

impl BlockScheme {
    pub fn with_divisor(mut self, divisor: WindowDivisor) -> Self {
        self.divisor = divisor;
        self
    }

    /// `c1_eff · c2_eff`, equal to `n^{1/2−γ} / M`.
    pub fn c1c2(&self) -> f64 {
        self.c1_eff * self.c2_eff
    }

    fn check_grid(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(config(format!("block scheme was built for n={} but the series has n={n}", self.n)));
        }
        Ok(())
    }
}

/// `K = round(c1·√n)`, `M = ⌊n/(c2·K)⌋`, `L = ⌊n/M⌋`.
pub fn make_block_scheme(n: usize, c1: f64, c2: f64) -> Result<BlockScheme> {
    build_scheme(n, c1, c2, 0.0)
}

/// `K = round(c1·n^{1/2+γ})` with `0 < γ < 1/2`; noise becomes negligible in
/// the block averages at the price of a slower rate.
pub fn make_gamma_scheme(n: usize, c1: f64, c2: f64, gamma: f64) -> Result<BlockScheme> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(domain(format!("gamma must lie in (0, 1/2), got {gamma}")));
    }
    build_scheme(n, c1, c2, gamma)
}

fn build_scheme(n: usize, c1: f64, c2: f64, gamma: f64) -> Result<BlockScheme> {
    if n < MIN_GRID {
        return Err(config(format!("block scheme needs n >= {MIN_GRID}, got {n}")));
    }
    if !(c1 > 0.0) || !c1.is_finite() {
        return Err(domain(format!("c1 must be positive, got {c1}")));
    }
    if !(c2 > 1.0) || !c2.is_finite() {
        return Err(domain(format!("c2 must exceed 1, got {c2}")));
    }
    let nf = n as f64;
    let scale = nf.powf(0.5 + gamma);
    let k = ((c1 * scale).round() as usize).max(1);
    // the epsilon keeps exact ratios such as 4096 / (1.6·64) = 40 from
    // flooring to 39
    let m = ((nf / (c2 * k as f64) + 1e-9).floor() as usize).max(1);
    let l = n / m;
    if k >= l {
        return Err(config(format!(
            "n={n}, c1={c1}, c2={c2}{} gives lag K={k} >= block length L={l}",
            if gamma > 0.0 { format!(", gamma={gamma}") } else { String::new() }
        )));
    }
    Ok(BlockScheme {
        n,
        k,
        m,
        l,
        c1_eff: k as f64 / scale,
        c2_eff: nf / (m * k) as f64,
        gamma,
        divisor: WindowDivisor::default(),
    })
}

/// All `M` block averages from one prefix-sum pass.
pub fn block_averages(y: &[f64], scheme: &BlockScheme) -> Result<Vec<f64>> {
    scheme.check_grid(y.len().saturating_sub(1))?;
    let BlockScheme { k, m, l, .. } = *scheme;
    // prefix[j] = Σ_{i<j} (y_i − y_0); centring keeps the running sum small
    let y0 = y[0];
    let mut prefix = Vec::with_capacity(y.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in y {
        acc += v - y0;
        prefix.push(acc);
    }
    let div = scheme.divisor.value(k, l);
    let averages = (0..m)
        .map(|b| {
            let first = b * l;
            let last = (b + 1) * l - k;
            let upper = prefix[last + k + 1] - prefix[first + k];
            let lower = prefix[last + 1] - prefix[first];
            (upper - lower) / div
        })
        .collect();
    Ok(averages)
}

/// `(2n)^{-1} Σ (Y_i − Y_{i−1})²`, a consistent estimate of the noise
/// variance.
pub fn omega_hat(obs: &Observations) -> f64 {
    let n = obs.y.len() - 1;
    let ss: f64 = obs.y.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    ss / (2.0 * n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    /// Use `ν1^{(n)}` instead of the asymptotic `ν1` in every bias-corrected
    /// estimator and in the feasible variance.
    pub finite_sample_nu1: bool,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self { finite_sample_nu1: true }
    }
}

/// Output of a bias-corrected estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Estimated conditional variance of `n^{1/4}(value − target)`.
    pub feasible_variance: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub scheme: BlockScheme,
    pub omega2_hat: f64,
}

impl Estimate {
    /// Attaches a two-sided interval at `level`.
    pub fn with_interval(mut self, level: f64) -> Result<Self> {
        self.ci = Some(confidence_interval(&self, level)?);
        Ok(self)
    }

    /// Truncates the value (and interval) at zero.
    pub fn floored(mut self) -> Self {
        self.value = self.value.max(0.0);
        self.ci = self.ci.map(|(lo, hi)| (lo.max(0.0), hi.max(0.0)));
        self
    }
}

/// `value ∓ z_{(1+level)/2}·β_n / n^{1/4}`.
pub fn confidence_interval(est: &Estimate, level: f64) -> Result<(f64, f64)> {
    let var = est.feasible_variance.ok_or_else(|| config("estimate carries no feasible variance"))?;
    if !(0.0..1.0).contains(&level) {
        return Err(domain(format!("confidence level must lie in [0, 1), got {level}")));
    }
    let z = if level == 0.0 { 0.0 } else { Normal::standard().inverse_cdf(0.5 * (1.0 + level)) };
    let half = z * var.sqrt() / (est.scheme.n as f64).powf(0.25);
    Ok((est.value - half, est.value + half))
}

/// Block averages and `ω̂²` of one series, ready for any number of
/// statistics.
#[derive(Debug, Clone)]
pub struct Analysis {
    scheme: BlockScheme,
    averages: Vec<f64>,
    omega2_hat: f64,
    options: EstimatorOptions,
}

/// `ν` constants of a scheme: asymptotic `nu1`, the one used for bias
/// correction (`nu1_star`) and `nu2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConstants {
    pub nu1: f64,
    pub nu1_star: f64,
    pub nu2: f64,
}

impl Analysis {
    pub fn new(obs: &Observations, scheme: BlockScheme) -> Result<Self> {
        Self::with_options(obs, scheme, EstimatorOptions::default())
    }

    pub fn with_options(obs: &Observations, scheme: BlockScheme, options: EstimatorOptions) -> Result<Self> {
        if obs.y.len() != obs.n + 1 {
            return Err(config(format!("observation series has {} values for n={}", obs.y.len(), obs.n)));
        }
        let averages = block_averages(&obs.y, &scheme)?;
        Ok(Self { scheme, averages, omega2_hat: omega_hat(obs), options })
    }

    pub fn scheme(&self) -> &BlockScheme {
        &self.scheme
    }

    pub fn omega2_hat(&self) -> f64 {
        self.omega2_hat
    }

    pub fn averages(&self) -> &[f64] {
        &self.averages
    }

    /// `Ȳ_m` for `1 ≤ m ≤ M`.
    pub fn block_average(&self, m: usize) -> Result<f64> {
        if m == 0 || m > self.scheme.m {
            return Err(Error::Index { index: m, max: self.scheme.m });
        }
        Ok(self.averages[m - 1])
    }

    pub fn constants(&self) -> Result<SchemeConstants> {
        let s = &self.scheme;
        let base = bias_constants(s.c1_eff, s.c2_eff)?;
        let nu1_star =
            if self.options.finite_sample_nu1 { finite_sample_nu1(s.n, s.c1_eff, s.c2_eff)? } else { base.nu1 };
        Ok(SchemeConstants { nu1: base.nu1, nu1_star, nu2: base.nu2 })
    }

    /// `Σ_{m=1}^{M−k+1} Π_j |Ȳ_{m+j−1}|^{r_j}` without normalisation.
    fn power_sum(&self, powers: &[f64]) -> Result<f64> {
        let k = powers.len();
        if k == 0 {
            return Err(config("multipower variation needs at least one power"));
        }
        if let Some(r) = powers.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return Err(domain(format!("powers must be >= 0, got {r}")));
        }
        if k > self.scheme.m {
            return Err(config(format!("{k} powers need at least {k} blocks, scheme has M={}", self.scheme.m)));
        }
        let abs: Vec<f64> = self.averages.iter().map(|v| v.abs()).collect();
        let total = abs.windows(k).map(|w| w.iter().zip(powers).map(|(a, &r)| a.powf(r)).product::<f64>()).sum();
        Ok(total)
    }

    /// `MMV(Y, r_1..r_k) = n^{r₊/4 − 1/2} Σ_{m=1}^{M−k+1} Π_j |Ȳ_{m+j−1}|^{r_j}`.
    pub fn mmv(&self, powers: &[f64]) -> Result<f64> {
        if self.scheme.gamma != 0.0 {
            return Err(config("scheme uses gamma > 0; use mmv_gamma"));
        }
        let r_plus: f64 = powers.iter().sum();
        let norm = (self.scheme.n as f64).powf(r_plus / 4.0 - 0.5);
        Ok(norm * self.power_sum(powers)?)
    }

    /// Multipower sum under the noise-dominated scheme, normalised by
    /// `n^{(1−2γ)(r₊/4 − 1/2)}`.
    pub fn mmv_gamma(&self, powers: &[f64]) -> Result<f64> {
        let gamma = self.scheme.gamma;
        if gamma == 0.0 {
            return Err(config("scheme has gamma = 0; use mmv"));
        }
        let r_plus: f64 = powers.iter().sum();
        let norm = (self.scheme.n as f64).powf((1.0 - 2.0 * gamma) * (r_plus / 4.0 - 0.5));
        Ok(norm * self.power_sum(powers)?)
    }

    /// `MBV(Y, r, l)`, summed over `m ≤ M` when `l = 0` and `m ≤ M − 1`
    /// otherwise.
    pub fn mbv(&self, r: f64, l: f64) -> Result<f64> {
        if l == 0.0 {
            self.mmv(&[r])
        } else {
            self.mmv(&[r, l])
        }
    }

    fn require_balanced(&self) -> Result<()> {
        if self.scheme.gamma != 0.0 {
            return Err(config("bias-corrected estimators need the gamma = 0 scheme"));
        }
        Ok(())
    }

    fn estimate(&self, value: f64, feasible_variance: Option<f64>) -> Estimate {
        Estimate { value, feasible_variance, ci: None, scheme: self.scheme, omega2_hat: self.omega2_hat }
    }

    fn mrv_value(&self, c: &SchemeConstants) -> Result<f64> {
        let c1c2 = self.scheme.c1c2();
        Ok((c1c2 * self.mbv(2.0, 0.0)? - c.nu2 * self.omega2_hat) / c.nu1_star)
    }

    fn mbv_robust_value(&self, c: &SchemeConstants) -> Result<f64> {
        let c1c2 = self.scheme.c1c2();
        let mu1 = abs_moment(1.0)?;
        Ok((c1c2 / (mu1 * mu1) * self.mbv(1.0, 1.0)? - c.nu2 * self.omega2_hat) / c.nu1_star)
    }

    /// `β_n² = 2c1²c2² / (3ν1²) · MBV(Y, 4, 0)`.
    pub fn feasible_variance(&self) -> Result<f64> {
        self.require_balanced()?;
        let c = self.constants()?;
        let c1c2 = self.scheme.c1c2();
        Ok(2.0 * c1c2 * c1c2 / (3.0 * c.nu1_star * c.nu1_star) * self.mbv(4.0, 0.0)?)
    }

    /// Modulated realised volatility, a noise-robust estimate of `∫σ²`.
    pub fn mrv(&self) -> Result<Estimate> {
        self.require_balanced()?;
        let c = self.constants()?;
        let value = self.mrv_value(&c)?;
        Ok(self.estimate(value, Some(self.feasible_variance()?)))
    }

    /// Modulated realised quarticity, an estimate of `∫σ⁴`.
    pub fn mrq(&self) -> Result<Estimate> {
        self.require_balanced()?;
        let c = self.constants()?;
        let w2 = self.omega2_hat;
        let mrv = self.mrv_value(&c)?;
        let lead = self.scheme.c1c2() / 3.0 * self.mbv(4.0, 0.0)?;
        let value = (lead - 2.0 * c.nu1_star * c.nu2 * w2 * mrv - c.nu2 * c.nu2 * w2 * w2) / (c.nu1_star * c.nu1_star);
        Ok(self.estimate(value, None))
    }

    /// Jump-robust bipower estimate of `∫σ²`. Its feasible variance uses the
    /// bipower CLT constant and the tripower quarticity so that it stays
    /// robust to jumps as well.
    pub fn mbv_robust(&self) -> Result<Estimate> {
        self.require_balanced()?;
        let c = self.constants()?;
        let value = self.mbv_robust_value(&c)?;
        let c1c2 = self.scheme.c1c2();
        let mu1 = abs_moment(1.0)?;
        let mu43 = abs_moment(4.0 / 3.0)?;
        let quarticity = c1c2 / mu43.powi(3) * self.mmv(&[4.0 / 3.0; 3])?;
        let variance = c1c2 * clt_constant_a(&[1.0, 1.0])? / (mu1.powi(4) * c.nu1_star * c.nu1_star) * quarticity;
        Ok(self.estimate(value, Some(variance.max(0.0))))
    }

    /// Jump-robust tripower estimate of `∫σ⁴`.
    pub fn mtq(&self) -> Result<Estimate> {
        self.require_balanced()?;
        let c = self.constants()?;
        let w2 = self.omega2_hat;
        let robust = self.mbv_robust_value(&c)?;
        let mu43 = abs_moment(4.0 / 3.0)?;
        let lead = self.scheme.c1c2() / mu43.powi(3) * self.mmv(&[4.0 / 3.0; 3])?;
        let value =
            (lead - 2.0 * c.nu1_star * c.nu2 * w2 * robust - c.nu2 * c.nu2 * w2 * w2) / (c.nu1_star * c.nu1_star);
        Ok(self.estimate(value, None))
    }

    /// Studentized MRV error `n^{1/4}(MRV − iv_ref)/β_n`, or its log
    /// version `n^{1/4}(log MRV − log iv_ref)/(β_n/MRV)`.
    pub fn standardized_iv_stat(&self, iv_ref: f64, log_form: bool) -> Result<f64> {
        let est = self.mrv()?;
        let beta = est.feasible_variance.unwrap_or(0.0).sqrt();
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::UndefinedStatistic(format!("feasible variance is {beta}")));
        }
        let root4 = (self.scheme.n as f64).powf(0.25);
        if log_form {
            if !(est.value > 0.0) {
                return Err(Error::UndefinedStatistic(format!("log form needs a positive MRV, got {}", est.value)));
            }
            if !(iv_ref > 0.0) {
                return Err(Error::UndefinedStatistic(format!("log form needs a positive reference, got {iv_ref}")));
            }
            Ok(root4 * (est.value.ln() - iv_ref.ln()) / (beta / est.value))
        } else {
            Ok(root4 * (est.value - iv_ref) / beta)
        }
    }
}

pub fn block_average(obs: &Observations, scheme: &BlockScheme, m: usize) -> Result<f64> {
    Analysis::new(obs, *scheme)?.block_average(m)
}

pub fn mbv(obs: &Observations, r: f64, l: f64, scheme: &BlockScheme) -> Result<f64> {
    Analysis::new(obs, *scheme)?.mbv(r, l)
}

pub fn mmv(obs: &Observations, powers: &[f64], scheme: &BlockScheme) -> Result<f64> {
    Analysis::new(obs, *scheme)?.mmv(powers)
}

pub fn mmv_gamma(obs: &Observations, powers: &[f64], scheme: &BlockScheme) -> Result<f64> {
    Analysis::new(obs, *scheme)?.mmv_gamma(powers)
}

pub fn mrv(obs: &Observations, scheme: &BlockScheme, use_finite_sample_nu1: bool) -> Result<Estimate> {
    let options = EstimatorOptions { finite_sample_nu1: use_finite_sample_nu1 };
    Analysis::with_options(obs, *scheme, options)?.mrv()
}

pub fn mrq(obs: &Observations, scheme: &BlockScheme) -> Result<Estimate> {
    Analysis::new(obs, *scheme)?.mrq()
}

pub fn mbv_robust(obs: &Observations, scheme: &BlockScheme) -> Result<Estimate> {
    Analysis::new(obs, *scheme)?.mbv_robust()
}

pub fn mtq(obs: &Observations, scheme: &BlockScheme) -> Result<Estimate> {
    Analysis::new(obs, *scheme)?.mtq()
}

pub fn feasible_variance(obs: &Observations, scheme: &BlockScheme) -> Result<f64> {
    Analysis::new(obs, *scheme)?.feasible_variance()
}

pub fn standardized_iv_stat(obs: &Observations, scheme: &BlockScheme, iv_ref: f64, log_form: bool) -> Result<f64> {
    Analysis::new(obs, *scheme)?.standardized_iv_stat(iv_ref, log_form)
}
