//! Synthetic observation series: Euler-discretised stochastic volatility and
//! constant-volatility diffusions, i.i.d. Gaussian noise and finite-activity
//! jumps.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};
use crate::io::format_f64;
use crate::rng::rng_from_seed;

/// Parameters of the log-volatility OU model
/// `dX = μ dt + σ_t dW`, `σ_t = exp(β0 + β1 τ_t)`, `dτ = α τ dt + dB`,
/// `corr(dW, dB) = ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvModelParams {
    pub mu: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub alpha: f64,
    pub rho: f64,
    pub tau0: f64,
    /// Euler steps per observation interval.
    pub substeps: usize,
}

impl Default for SvModelParams {
    fn default() -> Self {
        Self { mu: 0.03, beta0: 0.3125, beta1: 0.125, alpha: -0.025, rho: -0.3, tau0: 0.0, substeps: 1 }
    }
}

/// A latent path on the grid `i/n`, `i = 0..=n`, with its true
/// integrated volatility and quarticity.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub n: usize,
    pub x: Vec<f64>,
    pub sigma: Vec<f64>,
    pub iv: f64,
    pub iq: f64,
}

impl SimPath {
    /// `∫ (ν1σ² + ν2ω²)^{p/2}` by the same left-point rule as `iv`/`iq`.
    pub fn integrated_power(&self, p: f64, nu1: f64, nu2_omega2: f64) -> f64 {
        self.sigma[..self.n].iter().map(|s| (nu1 * s * s + nu2_omega2).powf(0.5 * p)).sum::<f64>() / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    /// First grid index that carries the jump.
    pub index: usize,
    pub size: f64,
}

/// `n + 1` observed (log-)prices on the grid `i/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub n: usize,
    pub y: Vec<f64>,
    /// Noise variance used to generate the series; `None` for real data.
    pub noise_omega2: Option<f64>,
    pub jumps: Vec<Jump>,
}

impl Observations {
    /// Wraps a raw series `y_0..y_n`.
    pub fn from_values(y: Vec<f64>) -> Result<Self> {
        if y.len() < 2 {
            return Err(domain("an observation series needs at least two values"));
        }
        Ok(Self { n: y.len() - 1, y, noise_omega2: None, jumps: Vec::new() })
    }

    /// Multiplies every observation by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { y: self.y.iter().map(|v| v * factor).collect(), ..self.clone() }
    }

    /// Adds `offset` to every observation.
    pub fn shifted(&self, offset: f64) -> Self {
        Self { y: self.y.iter().map(|v| v + offset).collect(), ..self.clone() }
    }
}

pub fn simulate_sv_path(params: &SvModelParams, n: usize, seed: u64) -> Result<SimPath> {
    if n < 2 {
        return Err(domain(format!("path needs n >= 2, got {n}")));
    }
    if !(params.rho.abs() <= 1.0) {
        return Err(domain(format!("correlation must lie in [-1, 1], got {}", params.rho)));
    }
    if params.substeps == 0 {
        return Err(domain("substeps must be >= 1"));
    }
    let steps = n * params.substeps;
    let dt = 1.0 / steps as f64;
    let sd = dt.sqrt();
    let orth = (1.0 - params.rho * params.rho).sqrt();

    let mut rng = rng_from_seed(seed);
    let mut x = Vec::with_capacity(n + 1);
    let mut sigma = Vec::with_capacity(n + 1);
    let (mut xt, mut tau) = (0.0f64, params.tau0);
    let (mut iv, mut iq) = (0.0, 0.0);
    let vol = |tau: f64| (params.beta0 + params.beta1 * tau).exp();

    for step in 0..steps {
        let s = vol(tau);
        if step % params.substeps == 0 {
            x.push(xt);
            sigma.push(s);
        }
        let s2 = s * s;
        iv += s2;
        iq += s2 * s2;
        let z_w: f64 = rng.sample(StandardNormal);
        let z_perp: f64 = rng.sample(StandardNormal);
        let dw = sd * z_w;
        let db = params.rho * dw + orth * sd * z_perp;
        xt += params.mu * dt + s * dw;
        tau += params.alpha * tau * dt + db;
    }
    x.push(xt);
    sigma.push(vol(tau));

    Ok(SimPath { n, x, sigma, iv: iv * dt, iq: iq * dt })
}

/// `dX = μ dt + dW`, so `σ ≡ 1` and `iv = iq = 1`.
pub fn simulate_constant_vol_path(mu: f64, n: usize, seed: u64) -> Result<SimPath> {
    if n < 2 {
        return Err(domain(format!("path needs n >= 2, got {n}")));
    }
    let dt = 1.0 / n as f64;
    let sd = dt.sqrt();
    let mut rng = rng_from_seed(seed);
    let mut x = Vec::with_capacity(n + 1);
    let mut xt = 0.0f64;
    x.push(xt);
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        xt += mu * dt + sd * z;
        x.push(xt);
    }
    Ok(SimPath { n, x, sigma: vec![1.0; n + 1], iv: 1.0, iq: 1.0 })
}

/// `Y_i = X_i + U_i` with `U_i` i.i.d. `N(0, ω²)`.
pub fn add_noise(path: &SimPath, omega2: f64, seed: u64) -> Result<Observations> {
    if !(omega2 >= 0.0) || !omega2.is_finite() {
        return Err(domain(format!("noise variance must be >= 0, got {omega2}")));
    }
    let y = if omega2 == 0.0 {
        path.x.clone()
    } else {
        let omega = omega2.sqrt();
        let mut rng = rng_from_seed(seed);
        path.x
            .iter()
            .map(|&v| {
                let z: f64 = rng.sample(StandardNormal);
                v + omega * z
            })
            .collect()
    };
    Ok(Observations { n: path.n, y, noise_omega2: Some(omega2), jumps: Vec::new() })
}

/// Adds `count` jumps with uniform arrival times and `N(0, h²)` sizes; the
/// jump at arrival `u` shifts every observation from index `⌈u·n⌉` on.
pub fn add_jumps(obs: &Observations, count: usize, h: f64, seed: u64) -> Result<Observations> {
    if count == 0 {
        return Err(domain("jump count must be >= 1; skip the call for a jump-free series"));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(domain(format!("jump size scale must be positive, got {h}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut out = obs.clone();
    for _ in 0..count {
        let u: f64 = rng.random();
        let index = ((u * obs.n as f64).ceil() as usize).min(obs.n);
        let z: f64 = rng.sample(StandardNormal);
        let size = h * z;
        for v in &mut out.y[index..] {
            *v += size;
        }
        out.jumps.push(Jump { index, size });
    }
    Ok(out)
}

/// Writes `i,t,x,sigma,y` rows for a path and its observations.
pub fn write_path_csv<W: Write>(mut out: W, path: &SimPath, obs: &Observations) -> Result<()> {
    if obs.n != path.n {
        return Err(domain(format!("path has n={} but observations have n={}", path.n, obs.n)));
    }
    writeln!(out, "i,t,x,sigma,y")?;
    let n = path.n as f64;
    for i in 0..=path.n {
        writeln!(
            out,
            "{},{},{},{},{}",
            i,
            format_f64(i as f64 / n),
            format_f64(path.x[i]),
            format_f64(path.sigma[i]),
            format_f64(obs.y[i])
        )?;
    }
    Ok(())
}
