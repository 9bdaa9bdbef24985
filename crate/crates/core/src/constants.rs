//! Constants of the limit theory for modulated bipower variation.
//!
//! `ν1` and `ν2` are the limiting variances of `n^{1/4}·W̄_m` and
//! `n^{1/4}·Ū_m` (the diffusion and noise parts of a block average, per unit
//! of `σ²` and `ω²`). [`exact_block_variances`] evaluates the same variances
//! for finite `(K, L, n)` by direct summation and is the reference the closed
//! forms are tested against.

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

/// Normalisation of the window sum inside a block average.
///
/// A block of `L` ticks holds `L − K + 1` overlapping `K`-increments.
/// `Span` divides their sum by `L − K`; with it, the noise variance equals
/// `ν2` exactly for `c2 ≤ 2` and the diffusion variance is
/// `ν1 + O(n^{-1/2})` with the correction returned by [`finite_sample_nu1`].
/// `Count` divides by the number of increments `L − K + 1`, whose variances
/// differ from `ν1`, `ν2` at order `n^{-1/2}` in the opposite direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowDivisor {
    #[default]
    Span,
    Count,
}

impl WindowDivisor {
    /// Divisor applied to the sum of `K`-increments in a block of length `l`.
    pub fn value(self, k: usize, l: usize) -> f64 {
        match self {
            WindowDivisor::Span => (l - k) as f64,
            WindowDivisor::Count => (l - k + 1) as f64,
        }
    }
}

/// `E|z|^r` for a standard normal `z`.
///
/// Evaluated through `ln Γ` so large `r` does not overflow.
pub fn abs_moment(r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(domain(format!("absolute moment order must be >= 0, got {r}")));
    }
    if r == 0.0 {
        return Ok(1.0);
    }
    let ln = 0.5 * r * std::f64::consts::LN_2 + ln_gamma(0.5 * (r + 1.0)) - 0.5 * std::f64::consts::PI.ln();
    Ok(ln.exp())
}

/// Asymptotic variance weights of the diffusion (`nu1`) and noise (`nu2`)
/// parts of a block average, together with the tuning constants they were
/// computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasConstants {
    pub nu1: f64,
    pub nu2: f64,
    pub c1: f64,
    pub c2: f64,
}

pub fn bias_constants(c1: f64, c2: f64) -> Result<BiasConstants> {
    check_tuning(c1, c2)?;
    let d = c2 - 1.0;
    let kink = (2.0 - c2).powi(3).max(0.0);
    let nu1 = c1 * (3.0 * c2 - 4.0 + kink) / (3.0 * d * d);
    let nu2 = 2.0 * d.min(1.0) / (c1 * d * d);
    Ok(BiasConstants { nu1, nu2, c1, c2 })
}

/// `ν1` with its leading finite-sample correction,
/// `ν1 + g(c2) / ((c2 − 1)·√n)` where `g = 3 − c2` for `c2 ≤ 2` and
/// `g = 1/(c2 − 1)` above. The `O(1/n)` remainder is dropped.
pub fn finite_sample_nu1(n: usize, c1: f64, c2: f64) -> Result<f64> {
    if n < 4 {
        return Err(domain(format!("finite-sample nu1 needs n >= 4, got {n}")));
    }
    let base = bias_constants(c1, c2)?;
    let d = c2 - 1.0;
    let g = if c2 <= 2.0 { 3.0 - c2 } else { 1.0 / d };
    Ok(base.nu1 + g / (d * (n as f64).sqrt()))
}

/// Exact variances of `n^{1/4}·W̄` (per unit `σ²`) and `n^{1/4}·Ū` for a
/// single block of `l` ticks with lag `k`, using the default
/// [`WindowDivisor::Span`].
pub fn exact_block_variances(k: usize, l: usize, n: usize, omega2: f64) -> Result<(f64, f64)> {
    exact_block_variances_with(k, l, n, omega2, WindowDivisor::Span)
}

/// Double-sum evaluation of the block variances:
///
/// `varW = Σ_{i,j} max(0, K − |i−j|) / (√n·D²)` and
/// `varU = √n·ω²·Σ_{i,j} (2·1{i=j} − 1{|i−j|=K}) / D²`,
/// with `i, j = 0..=L−K` and `D` the window divisor.
pub fn exact_block_variances_with(
    k: usize,
    l: usize,
    n: usize,
    omega2: f64,
    divisor: WindowDivisor,
) -> Result<(f64, f64)> {
    if k == 0 || k >= l {
        return Err(domain(format!("block variances need 1 <= K < L, got K={k}, L={l}")));
    }
    if l > n {
        return Err(domain(format!("block length L={l} exceeds n={n}")));
    }
    if !(omega2 >= 0.0) {
        return Err(domain(format!("noise variance must be >= 0, got {omega2}")));
    }
    let terms = l - k + 1;
    let mut sum_w = 0i64;
    let mut sum_u = 0i64;
    for i in 0..terms {
        for j in 0..terms {
            let d = i.abs_diff(j);
            sum_w += k.saturating_sub(d) as i64;
            if d == 0 {
                sum_u += 2;
            } else if d == k {
                sum_u -= 1;
            }
        }
    }
    let root_n = (n as f64).sqrt();
    let div = divisor.value(k, l);
    let var_w = sum_w as f64 / (root_n * div * div);
    let var_u = root_n * omega2 * sum_u as f64 / (div * div);
    Ok((var_w, var_u))
}

/// Asymptotic variance constant `A(r_1, …, r_k)` of modulated multipower
/// variation. For `k = 2` this is `μ_{2r}μ_{2l} + 2μ_rμ_lμ_{r+l} − 3μ_r²μ_l²`.
pub fn clt_constant_a(powers: &[f64]) -> Result<f64> {
    if powers.is_empty() {
        return Err(domain("CLT constant needs at least one power"));
    }
    let k = powers.len();
    let mu = powers.iter().map(|&r| abs_moment(r)).collect::<Result<Vec<_>>>()?;
    let mut prod_2r = 1.0;
    for &r in powers {
        prod_2r *= abs_moment(2.0 * r)?;
    }
    let prod_sq: f64 = mu.iter().map(|m| m * m).product();
    let mut cross = 0.0;
    for j in 1..k {
        let head: f64 = mu[..j].iter().product();
        let tail: f64 = mu[k - j..].iter().product();
        let mut joint = 1.0;
        for l in 0..k - j {
            joint *= abs_moment(powers[l] + powers[l + j])?;
        }
        cross += head * tail * joint;
    }
    Ok(prod_2r - (2 * k - 1) as f64 * prod_sq + 2.0 * cross)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalConstants {
    pub c1: f64,
    pub c2: f64,
    /// Minimal conditional variance of the MRV limit, `256/(3√18)·σ³ω`.
    pub min_variance: f64,
}

/// Tuning `(c1, c2)` minimising the conditional variance of MRV when the
/// volatility is constant.
pub fn optimal_constants(omega: f64, sigma: f64) -> Result<OptimalConstants> {
    if !(omega > 0.0) || !(sigma > 0.0) {
        return Err(domain(format!(
            "optimal constants need omega > 0 and sigma > 0, got omega={omega}, sigma={sigma}"
        )));
    }
    let c2: f64 = 8.0 / 5.0;
    let c1 = (18.0 / ((c2 - 1.0) * (4.0 - c2))).sqrt() * omega / sigma;
    let min_variance = 256.0 / (3.0 * 18f64.sqrt()) * sigma.powi(3) * omega;
    Ok(OptimalConstants { c1, c2, min_variance })
}

/// Conditional variance `β²` of the MRV limit for constant `σ`:
/// `(2c1c2/ν1²)·(ν1σ² + ν2ω²)²`.
pub fn mrv_conditional_variance(c1: f64, c2: f64, sigma: f64, omega: f64) -> Result<f64> {
    let BiasConstants { nu1, nu2, .. } = bias_constants(c1, c2)?;
    let inner = nu1 * sigma * sigma + nu2 * omega * omega;
    Ok(2.0 * c1 * c2 / (nu1 * nu1) * inner * inner)
}

fn check_tuning(c1: f64, c2: f64) -> Result<()> {
    if !(c1 > 0.0) || !c1.is_finite() {
        return Err(domain(format!("c1 must be positive, got {c1}")));
    }
    if !(c2 > 1.0) || !c2.is_finite() {
        return Err(domain(format!("c2 must exceed 1 (block longer than the lag), got {c2}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Composite Simpson rule for `2∫_0^B x^r φ(x) dx`, after `x = u²` so
    /// the integrand is smooth at zero for `r < 1`.
    fn abs_moment_quadrature(r: f64) -> f64 {
        let (b, steps) = (7.0, 400_000usize);
        let h = b / steps as f64;
        let f = |u: f64| 2.0 * u.powf(2.0 * r + 1.0) * (-0.5 * u.powi(4)).exp() / (2.0 * PI).sqrt();
        let mut acc = f(0.0) + f(b);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        2.0 * acc * h / 3.0
    }

    #[test]
    fn abs_moment_known_values() {
        assert_eq!(abs_moment(0.0).unwrap(), 1.0);
        assert!((abs_moment(2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((abs_moment(4.0).unwrap() - 3.0).abs() < 1e-13);
        assert!((abs_moment(8.0).unwrap() - 105.0).abs() < 1e-10);
        // frozen from the quadrature oracle below
        assert!((abs_moment(1.0).unwrap() - 0.797_884_560_802_865_4).abs() < 1e-14);
    }

    #[test]
    fn abs_moment_matches_quadrature() {
        for r in [0.5, 1.0, 4.0 / 3.0, 1.5, 2.0 / 3.0, 3.0] {
            let oracle = abs_moment_quadrature(r);
            let got = abs_moment(r).unwrap();
            assert!((got - oracle).abs() < 1e-9, "r={r}: {got} vs {oracle}");
        }
    }

    #[test]
    fn abs_moment_rejects_negative() {
        assert!(matches!(abs_moment(-0.5), Err(crate::Error::Domain(_))));
        assert!(abs_moment(f64::NAN).is_err());
    }

    #[test]
    fn abs_moment_jensen_grid() {
        for i in 0..=8 {
            let r = 0.5 * i as f64;
            let lhs = abs_moment(2.0 * r).unwrap();
            let rhs = abs_moment(r).unwrap().powi(2);
            assert!(lhs >= rhs - 1e-12, "r={r}");
        }
    }

    #[test]
    fn bias_constants_hand_values() {
        let b = bias_constants(1.0, 2.0).unwrap();
        assert!((b.nu1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((b.nu2 - 2.0).abs() < 1e-15);
        let b = bias_constants(1.0, 1.6).unwrap();
        assert!((b.nu1 - 0.8).abs() < 1e-14);
        assert!((b.nu2 - 10.0 / 3.0).abs() < 1e-14);
        let b = bias_constants(0.25, 2.0).unwrap();
        assert!((b.nu1 - 1.0 / 6.0).abs() < 1e-15);
        assert!((b.nu2 - 8.0).abs() < 1e-14);
    }

    #[test]
    fn bias_constants_domain() {
        assert!(bias_constants(1.0, 1.0).is_err());
        assert!(bias_constants(1.0, 0.5).is_err());
        assert!(bias_constants(0.0, 2.0).is_err());
        assert!(bias_constants(-1.0, 2.0).is_err());
    }

    #[test]
    fn bias_constants_continuous_at_two() {
        let eps = 1e-13;
        let left = bias_constants(0.7, 2.0 - eps).unwrap();
        let right = bias_constants(0.7, 2.0 + eps).unwrap();
        assert!((left.nu1 - right.nu1).abs() < 1e-12);
        assert!((left.nu2 - right.nu2).abs() < 1e-12);
        let l = finite_sample_nu1(1024, 0.7, 2.0 - eps).unwrap();
        let r = finite_sample_nu1(1024, 0.7, 2.0 + eps).unwrap();
        assert!((l - r).abs() < 1e-12);
    }

    #[test]
    fn finite_sample_nu1_value() {
        let v = finite_sample_nu1(1024, 0.25, 2.0).unwrap();
        assert!((v - (1.0 / 6.0 + 1.0 / 32.0)).abs() < 1e-15);
        let far = finite_sample_nu1(1 << 40, 0.25, 2.0).unwrap();
        assert!((far - 1.0 / 6.0).abs() < 1e-6);
        assert!(finite_sample_nu1(3, 0.25, 2.0).is_err());
    }

    #[test]
    fn exact_block_variances_small_cases() {
        // Count divisor (L−K+1)²: diagonal 3·2 plus off-diagonal 4·1 = 10.
        let (w, u) = exact_block_variances_with(2, 4, 16, 0.0, WindowDivisor::Count).unwrap();
        assert!((w - 10.0 / 36.0).abs() < 1e-15);
        assert_eq!(u, 0.0);
        let (_, u) = exact_block_variances_with(2, 4, 16, 1.0, WindowDivisor::Count).unwrap();
        assert!((u - 16.0 / 9.0).abs() < 1e-15);
        // Span divisor (L−K)²; here K/√n = 0.5, c2 = 2 so ν2 = 4 exactly.
        let (w, u) = exact_block_variances(2, 4, 16, 1.0).unwrap();
        assert!((w - 10.0 / 16.0).abs() < 1e-15);
        assert!((u - 4.0).abs() < 1e-15);
    }

    #[test]
    fn exact_block_variances_domain() {
        assert!(exact_block_variances(4, 4, 16, 0.0).is_err());
        assert!(exact_block_variances(5, 4, 16, 0.0).is_err());
        assert!(exact_block_variances(0, 4, 16, 0.0).is_err());
        assert!(exact_block_variances(2, 40, 16, 0.0).is_err());
    }

    #[test]
    fn finite_sample_nu1_tracks_exact_oracle() {
        // 1024, c1 = 0.25, c2 = 2: oracle 0.19921875 vs 0.197916…
        let (w, _) = exact_block_variances(8, 16, 1024, 0.0).unwrap();
        let approx = finite_sample_nu1(1024, 0.25, 2.0).unwrap();
        assert!((w - approx).abs() < 2.0 / 1024.0, "{w} vs {approx}");
        // Residual after the correction is O(1/n) over a range of c2.
        let n = 1usize << 16;
        let k = 64usize;
        for l in [80usize, 96, 102, 128, 160, 192, 256] {
            let c1 = k as f64 / (n as f64).sqrt();
            let c2 = l as f64 / k as f64;
            let (w, _) = exact_block_variances(k, l, n, 0.0).unwrap();
            let approx = finite_sample_nu1(n, c1, c2).unwrap();
            let asym = bias_constants(c1, c2).unwrap().nu1;
            assert!(
                (w - approx).abs() < 0.1 * (w - asym).abs() + 20.0 / n as f64,
                "c2={c2}: exact {w}, corrected {approx}, asymptotic {asym}"
            );
        }
    }

    #[test]
    fn exact_variances_converge_to_nu() {
        for (c1, c2) in [(0.25, 2.0), (1.0, 1.6), (0.5, 3.0)] {
            let mut prev = f64::INFINITY;
            let mut last_scale = 0.0;
            for p in 8..=20 {
                let n = 1usize << p;
                let k = ((c1 * (n as f64).sqrt()).ceil() as usize).max(1);
                let l = (c2 * k as f64).ceil() as usize;
                // compare with the constants of the realised geometry
                let limit = bias_constants(k as f64 / (n as f64).sqrt(), l as f64 / k as f64).unwrap();
                last_scale = limit.nu1 + limit.nu2;
                let (w, u) = exact_block_variances(k, l, n, 1.0).unwrap();
                let dev = (w - limit.nu1).abs() + (u - limit.nu2).abs();
                assert!(dev <= 1.1 * prev, "c1={c1} c2={c2} n={n}: {dev} after {prev}");
                prev = dev;
            }
            assert!(prev < 0.02 * last_scale);
        }
    }

    #[test]
    fn clt_constant_examples() {
        assert!((clt_constant_a(&[2.0]).unwrap() - 2.0).abs() < 1e-13);
        let expect = 1.0 + 4.0 / PI - 12.0 / (PI * PI);
        assert!((clt_constant_a(&[1.0, 1.0]).unwrap() - expect).abs() < 1e-13);
        assert!((expect - 1.05738).abs() < 1e-5);
        assert!(clt_constant_a(&[]).is_err());
    }

    #[test]
    fn clt_constant_two_powers_matches_bipower_expression() {
        let mu = |r: f64| abs_moment(r).unwrap();
        // deterministic pseudo-random pairs in [0, 4)
        let mut state = 0x2545_f491_4f6c_dd1du64;
        for _ in 0..10 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let r = (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0;
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let l = (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0;
            let direct =
                mu(2.0 * r) * mu(2.0 * l) + 2.0 * mu(r) * mu(l) * mu(r + l) - 3.0 * mu(r).powi(2) * mu(l).powi(2);
            let general = clt_constant_a(&[r, l]).unwrap();
            assert!((direct - general).abs() < 1e-12, "r={r} l={l}");
        }
    }

    #[test]
    fn clt_constant_positive() {
        let sets: &[&[f64]] = &[
            &[1.0],
            &[0.5, 1.5],
            &[1.0, 1.0],
            &[2.0, 2.0],
            &[4.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0],
            &[2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0],
            &[1.0, 0.0, 1.0],
            &[0.5, 0.5, 0.5, 0.5],
        ];
        for p in sets {
            assert!(clt_constant_a(p).unwrap() > 0.0, "{p:?}");
        }
    }

    #[test]
    fn optimal_constants_values() {
        let o = optimal_constants(1.0, 1.0).unwrap();
        assert!((o.c1 - 12.5f64.sqrt()).abs() < 1e-13);
        assert!((o.c1 - 3.5355).abs() < 1e-4);
        assert_eq!(o.c2, 1.6);
        assert!((o.min_variance - 20.11).abs() < 5e-3);
        let o = optimal_constants(0.1, 1.414).unwrap();
        assert!((o.c1 - 0.25).abs() < 1e-4);
        let a = optimal_constants(0.3, 2.0).unwrap();
        let b = optimal_constants(0.9, 2.0).unwrap();
        assert!((b.c1 - 3.0 * a.c1).abs() < 1e-13);
        assert!(optimal_constants(0.0, 1.0).is_err());
        assert!(optimal_constants(1.0, -1.0).is_err());
    }

    #[test]
    fn optimal_constants_minimise_conditional_variance() {
        let (omega, sigma) = (0.1, 1.3);
        let opt = optimal_constants(omega, sigma).unwrap();
        let at_opt = mrv_conditional_variance(opt.c1, opt.c2, sigma, omega).unwrap();
        assert!((at_opt - opt.min_variance).abs() < 1e-10 * opt.min_variance);
        // brute-force grid search
        let mut best = f64::INFINITY;
        for i in 1..400 {
            let c1 = opt.c1 * (0.5 + i as f64 / 400.0);
            for j in 1..400 {
                let c2 = 1.0 + 2.0 * j as f64 / 400.0;
                best = best.min(mrv_conditional_variance(c1, c2, sigma, omega).unwrap());
            }
        }
        assert!(best >= at_opt * (1.0 - 1e-9));
        assert!(best <= at_opt * 1.001);
    }
}
