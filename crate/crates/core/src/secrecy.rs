//! Finite-blocklength secrecy rate.
//!
//! The instantaneous achievable secrecy rate at blocklength `n` is the normal
//! approximation
//!
//! ```text
//! R_s ≈ [C_B − C_E]⁺ − √(V_B/n) Q⁻¹(ε_B) − √(V_E/n) Q⁻¹(δ)
//! ```
//!
//! with `C_i = log₂(1 + SNR_i)` and `V_i` the Gaussian channel dispersion.
//! Averaging over fading has no closed form; [`avg_secrecy_lower_bound`]
//! gives a Jensen-type lower bound that needs only the moments of the
//! envelope, and [`avg_secrecy_taylor_approx`] a second-order alternative.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{fourth_moment, log_moment_derivative, moment, ChannelError, SrfParams};
use crate::specfun::{ln_q_fn, q_fn, q_inv, SpecfunError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SecrecyError {
    #[error("{op}: {reason}")]
    Domain { op: &'static str, reason: String },
    #[error("leakage undefined: eavesdropper dispersion is zero")]
    UndefinedLeakage,
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Blocklength, reliability and secrecy targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FblConfig {
    /// Blocklength in channel uses.
    pub n: u64,
    /// Decoding error target at Bob.
    pub eps_b: f64,
    /// Information leakage target at Eve.
    pub delta: f64,
    /// Payload bits; sets the rate target `k_bits / n` for leakage.
    pub k_bits: u64,
}

impl FblConfig {
    pub fn reference() -> Self {
        Self {
            n: 500,
            eps_b: 1e-3,
            delta: 1e-3,
            k_bits: 300,
        }
    }

    pub fn validate(&self) -> Result<(), SecrecyError> {
        let bad = |reason: String| Err(SecrecyError::Domain { op: "FblConfig", reason });
        if self.n < 1 {
            return bad("n must be at least 1".into());
        }
        if !(self.eps_b > 0.0 && self.eps_b < 0.5) {
            return bad(format!("eps_b = {} must lie in (0, 0.5)", self.eps_b));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return bad(format!("delta = {} must lie in (0, 0.5)", self.delta));
        }
        Ok(())
    }

    pub fn rate_target(&self) -> f64 {
        self.k_bits as f64 / self.n as f64
    }
}

/// SNRs of the legitimate and eavesdropper links, linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPair {
    pub snr_b: f64,
    pub snr_e: f64,
}

impl SnrPair {
    pub fn new(snr_b: f64, snr_e: f64) -> Self {
        Self { snr_b, snr_e }
    }
}

/// Shannon capacity `log₂(1 + snr)` in bits per channel use.
pub fn capacity(snr: f64) -> Result<f64, SecrecyError> {
    if !(snr >= 0.0) {
        return Err(SecrecyError::Domain {
            op: "capacity",
            reason: format!("snr = {snr} must be non-negative"),
        });
    }
    Ok(snr.ln_1p() / LN_2)
}

pub fn secrecy_capacity(snrs: SnrPair) -> f64 {
    let diff = (snrs.snr_b.ln_1p() - snrs.snr_e.ln_1p()) / LN_2;
    diff.max(0.0)
}

/// Channel dispersion `(snr² + 2 snr) / ((1 + snr)² ln²2)`.
pub fn dispersion(snr: f64) -> f64 {
    let one_plus = 1.0 + snr;
    (snr * snr + 2.0 * snr) / (one_plus * one_plus * LN_2 * LN_2)
}

/// Total dispersion of the Gaussian wiretap channel. Not used by the rate
/// approximation.
pub fn total_dispersion(snrs: SnrPair) -> f64 {
    let SnrPair { snr_b, snr_e } = snrs;
    let cross = (snr_e * snr_e + 2.0 * snr_e) / ((1.0 + snr_e) * (1.0 + snr_b) * LN_2 * LN_2);
    dispersion(snr_b) + dispersion(snr_e) - cross
}

/// `√V = √(1 − (1+snr)⁻²) / ln 2`, computed without the cancellation of the
/// dispersion's expanded form at small SNR.
fn sqrt_dispersion(snr: f64) -> f64 {
    let one_plus = 1.0 + snr;
    (snr * (snr + 2.0)).sqrt() / (one_plus * LN_2)
}

/// Precomputed back-off coefficients `Q⁻¹(ε_B)/√n` and `Q⁻¹(δ)/√n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FblPenalty {
    reliability: f64,
    secrecy: f64,
}

impl FblPenalty {
    pub fn new(cfg: &FblConfig) -> Result<Self, SecrecyError> {
        let sqrt_n = (cfg.n as f64).sqrt();
        Ok(Self {
            reliability: q_inv(cfg.eps_b)? / sqrt_n,
            secrecy: q_inv(cfg.delta)? / sqrt_n,
        })
    }

    /// Raw rate, possibly negative.
    pub fn rate(&self, snrs: SnrPair) -> f64 {
        secrecy_capacity(snrs)
            - sqrt_dispersion(snrs.snr_b) * self.reliability
            - sqrt_dispersion(snrs.snr_e) * self.secrecy
    }
}

/// Instantaneous finite-blocklength secrecy rate. Not clamped at zero.
///
/// ```
/// use satsec::secrecy::{fbl_secrecy_rate, secrecy_capacity, FblConfig, SnrPair};
/// let snrs = SnrPair::new(3.1623, 0.5012);
/// let rate = fbl_secrecy_rate(snrs, &FblConfig::reference()).unwrap();
/// assert!(rate < secrecy_capacity(snrs));
/// ```
pub fn fbl_secrecy_rate(snrs: SnrPair, cfg: &FblConfig) -> Result<f64, SecrecyError> {
    Ok(FblPenalty::new(cfg)?.rate(snrs))
}

/// Solution of the leakage inverse problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Leakage {
    pub delta: f64,
    /// `log₁₀ δ`, finite even when `delta` underflows.
    pub log10_delta: f64,
    /// `δ ≥ 0.5`: the secrecy margin is gone.
    pub saturated: bool,
}

/// Leakage `δ` at which the finite-blocklength rate equals `rate_target`.
pub fn leakage_for_rate(
    snrs: SnrPair,
    n: u64,
    eps_b: f64,
    rate_target: f64,
) -> Result<Leakage, SecrecyError> {
    if !(rate_target >= 0.0) {
        return Err(SecrecyError::Domain {
            op: "leakage_for_rate",
            reason: format!("rate target {rate_target} must be non-negative"),
        });
    }
    if n == 0 {
        return Err(SecrecyError::Domain {
            op: "leakage_for_rate",
            reason: "n must be at least 1".into(),
        });
    }
    let v_e = sqrt_dispersion(snrs.snr_e);
    if !(v_e > 0.0) {
        return Err(SecrecyError::UndefinedLeakage);
    }
    let nf = n as f64;
    let margin = secrecy_capacity(snrs) - sqrt_dispersion(snrs.snr_b) * q_inv(eps_b)? / nf.sqrt()
        - rate_target;
    let arg = margin * nf.sqrt() / v_e;
    let delta = q_fn(arg);
    Ok(Leakage {
        delta,
        log10_delta: ln_q_fn(arg) / std::f64::consts::LN_10,
        saturated: delta >= 0.5,
    })
}

/// Link-level inputs of the averaged expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadedLinks {
    pub srf_b: SrfParams,
    pub srf_e: SrfParams,
    /// Composite linear scale of Bob's link.
    pub scale_b: f64,
    /// Composite linear scale of Eve's link.
    pub scale_e: f64,
}

impl FadedLinks {
    pub fn mean_snrs(&self) -> Result<SnrPair, SecrecyError> {
        Ok(SnrPair::new(
            self.scale_b * moment(&self.srf_b, 2.0)?,
            self.scale_e * moment(&self.srf_e, 2.0)?,
        ))
    }

    fn check(&self) -> Result<(), SecrecyError> {
        if !(self.scale_b > 0.0 && self.scale_e >= 0.0) {
            return Err(SecrecyError::Domain {
                op: "FadedLinks",
                reason: format!(
                    "scales must be positive (scale_b = {}, scale_e = {})",
                    self.scale_b, self.scale_e
                ),
            });
        }
        Ok(())
    }
}

/// Terms shared by the bound and the Taylor approximation: Eve's capacity
/// at her mean SNR and both dispersion back-offs at the mean SNRs.
fn averaged_tail(mean: SnrPair, cfg: &FblConfig) -> Result<f64, SecrecyError> {
    let penalty = FblPenalty::new(cfg)?;
    Ok(-mean.snr_e.ln_1p() / LN_2
        - penalty.reliability * sqrt_dispersion(mean.snr_b)
        - penalty.secrecy * sqrt_dispersion(mean.snr_e))
}

/// Lower bound on the average finite-blocklength secrecy rate.
///
/// Bob's ergodic capacity is bounded through the convexity of
/// `log₂(1 + eᵘ)` with `u = ln SNR_B`, where
/// `E[ln SNR_B] = ln scale_b + E[ln |h_B|²]`. Eve's capacity and both
/// square-root dispersions are bounded at the mean SNRs.
pub fn avg_secrecy_lower_bound(links: &FadedLinks, cfg: &FblConfig) -> Result<f64, SecrecyError> {
    links.check()?;
    let mean = links.mean_snrs()?;
    let geometric_snr_b = (links.scale_b.ln() + log_moment_derivative(&links.srf_b)?).exp();
    Ok(geometric_snr_b.ln_1p() / LN_2 + averaged_tail(mean, cfg)?)
}

/// How the variance correction of the Taylor approximation is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaylorForm {
    /// `V[SNR]/(2 ln2 (1+SNR̄)²)`, the curvature of `log₂(1+x)` at the mean.
    SecondOrder,
    /// `V[SNR]/(2 ln2 (1+SNR̄))`. Overstates the correction by a factor
    /// `1+SNR̄`; kept for comparison.
    LinearDenominator,
}

/// Second-order approximation of the average secrecy rate: Bob's ergodic
/// capacity is expanded around his mean SNR.
pub fn avg_secrecy_taylor_approx(links: &FadedLinks, cfg: &FblConfig) -> Result<f64, SecrecyError> {
    avg_secrecy_taylor_approx_with(links, cfg, TaylorForm::SecondOrder)
}

pub fn avg_secrecy_taylor_approx_with(
    links: &FadedLinks,
    cfg: &FblConfig,
    form: TaylorForm,
) -> Result<f64, SecrecyError> {
    links.check()?;
    let mean = links.mean_snrs()?;
    let second = links.scale_b * links.scale_b * fourth_moment(&links.srf_b)?;
    let variance = second - mean.snr_b * mean.snr_b;
    let curvature = match form {
        TaylorForm::SecondOrder => (1.0 + mean.snr_b).powi(2),
        TaylorForm::LinearDenominator => 1.0 + mean.snr_b,
    };
    let leading = mean.snr_b.ln_1p() / LN_2 - variance / (2.0 * LN_2 * curvature);
    Ok(leading + averaged_tail(mean, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SNR_5DB: f64 = 3.162_277_660_168_379_5;
    const SNR_M3DB: f64 = 0.501_187_233_627_272_2;

    #[test]
    fn capacity_values() {
        assert_eq!(capacity(0.0).unwrap(), 0.0);
        assert!((capacity(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((capacity(SNR_5DB).unwrap() - 2.057_373).abs() < 1e-5);
        assert!(capacity(-0.1).is_err());
    }

    #[test]
    fn secrecy_capacity_clamps() {
        assert_eq!(secrecy_capacity(SnrPair::new(2.0, 2.0)), 0.0);
        assert_eq!(secrecy_capacity(SnrPair::new(1.0, 2.0)), 0.0);
        let cs = secrecy_capacity(SnrPair::new(SNR_5DB, SNR_M3DB));
        let expect = SNR_5DB.ln_1p() / LN_2 - SNR_M3DB.ln_1p() / LN_2;
        assert!((cs - expect).abs() < 1e-15);
        assert!((cs - 1.471_269_282_161_447_5).abs() < 1e-13);
    }

    #[test]
    fn dispersion_values() {
        assert_eq!(dispersion(0.0), 0.0);
        let sat = 1.0 / (LN_2 * LN_2);
        assert!((dispersion(1e9) - sat).abs() < 1e-8);
        let v = dispersion(SNR_5DB);
        assert!((v - sat * (1.0 - 1.0 / (1.0 + SNR_5DB).powi(2))).abs() < 1e-14);
        assert!((v - 1.9613).abs() < 1e-4);
    }

    #[test]
    fn sqrt_dispersion_matches_expanded_form() {
        for snr in [0.0, 1e-12, 1e-6, 0.3, 1.0, 17.0, 1e6] {
            let a = sqrt_dispersion(snr);
            let b = dispersion(snr).sqrt();
            assert!((a - b).abs() <= 1e-12 * b.max(1e-300), "snr = {snr}: {a} vs {b}");
        }
    }

    #[test]
    fn total_dispersion_cases() {
        assert_eq!(total_dispersion(SnrPair::new(0.0, 0.0)), 0.0);
        let s = 2.5;
        assert!((total_dispersion(SnrPair::new(s, 0.0)) - dispersion(s)).abs() < 1e-15);
        // At s = 1: V = 0.75/ln²2, cross term 3/(4 ln²2), total 0.75/ln²2.
        let t = total_dispersion(SnrPair::new(1.0, 1.0));
        assert!((t - 0.75 / (LN_2 * LN_2)).abs() < 1e-14);
    }

    #[test]
    fn rate_reduces_to_bob_capacity() {
        let cfg = FblConfig {
            n: 100,
            eps_b: 0.5,
            delta: 0.1,
            k_bits: 10,
        };
        let r = fbl_secrecy_rate(SnrPair::new(SNR_5DB, 0.0), &cfg).unwrap();
        assert_eq!(r, capacity(SNR_5DB).unwrap());
    }

    #[test]
    fn rate_reference_point() {
        let cfg = FblConfig::reference();
        let r = fbl_secrecy_rate(SnrPair::new(SNR_5DB, SNR_M3DB), &cfg).unwrap();
        let q = 3.090_232_306_167_813_5;
        let expect = secrecy_capacity(SnrPair::new(SNR_5DB, SNR_M3DB))
            - (dispersion(SNR_5DB) / 500.0).sqrt() * q
            - (dispersion(SNR_M3DB) / 500.0).sqrt() * q;
        assert!((r - expect).abs() < 1e-13);
        assert!((r - 1.129_026_760_801_947).abs() < 1e-12, "r = {r}");
    }

    #[test]
    fn rate_recovers_capacity_for_long_blocks() {
        let cfg = FblConfig {
            n: 100_000_000,
            ..FblConfig::reference()
        };
        let snrs = SnrPair::new(SNR_5DB, SNR_M3DB);
        let gap = secrecy_capacity(snrs) - fbl_secrecy_rate(snrs, &cfg).unwrap();
        assert!(gap > 0.0 && gap < 1e-3);
    }

    #[test]
    fn fbl_config_validation() {
        assert!(FblConfig::reference().validate().is_ok());
        assert!(FblConfig { eps_b: 0.7, ..FblConfig::reference() }.validate().is_err());
        assert!(FblConfig { delta: 0.0, ..FblConfig::reference() }.validate().is_err());
        assert!(FblConfig { n: 0, ..FblConfig::reference() }.validate().is_err());
        assert!((FblConfig::reference().rate_target() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn leakage_zero_margin_is_half() {
        let snrs = SnrPair::new(SNR_5DB, SNR_M3DB);
        let n = 500;
        let eps = 1e-3;
        let target = secrecy_capacity(snrs) - (dispersion(SNR_5DB) / n as f64).sqrt() * q_inv(eps).unwrap();
        let leak = leakage_for_rate(snrs, n, eps, target).unwrap();
        assert!((leak.delta - 0.5).abs() < 1e-12);
        assert!(leak.saturated || leak.delta < 0.5);
    }

    #[test]
    fn leakage_errors_and_saturation() {
        assert_eq!(
            leakage_for_rate(SnrPair::new(1.0, 0.0), 500, 1e-3, 0.1),
            Err(SecrecyError::UndefinedLeakage)
        );
        assert!(leakage_for_rate(SnrPair::new(1.0, 1.0), 500, 1e-3, -0.1).is_err());
        let leak = leakage_for_rate(SnrPair::new(1.0, 2.0), 500, 1e-3, 0.6).unwrap();
        assert!(leak.saturated);
        assert!(leak.delta > 0.5);
    }

    #[test]
    fn leakage_log_is_finite_in_the_deep_tail() {
        let leak = leakage_for_rate(SnrPair::new(SNR_5DB, 0.006), 500, 1e-3, 0.6).unwrap();
        assert_eq!(leak.delta, 0.0);
        assert!(leak.log10_delta.is_finite() && leak.log10_delta < -300.0);
    }

    #[test]
    fn bound_without_eve_has_three_terms() {
        let srf = SrfParams::reference();
        let links = FadedLinks {
            srf_b: srf,
            srf_e: srf,
            scale_b: 6.0,
            scale_e: 0.0,
        };
        let cfg = FblConfig::reference();
        let bound = avg_secrecy_lower_bound(&links, &cfg).unwrap();
        let mean_b = 6.0 * moment(&srf, 2.0).unwrap();
        let geo = 6.0 * log_moment_derivative(&srf).unwrap().exp();
        let expect = geo.ln_1p() / LN_2
            - q_inv(1e-3).unwrap() / (LN_2 * 500f64.sqrt())
                * (1.0 - 1.0 / (1.0 + mean_b).powi(2)).sqrt();
        assert!((bound - expect).abs() < 1e-13);
    }

    #[test]
    fn taylor_correction_is_negative() {
        let srf = SrfParams::reference();
        let links = FadedLinks {
            srf_b: srf,
            srf_e: srf,
            scale_b: 6.0,
            scale_e: 1.0,
        };
        let cfg = FblConfig::reference();
        let approx = avg_secrecy_taylor_approx(&links, &cfg).unwrap();
        let mean = links.mean_snrs().unwrap();
        let no_correction = mean.snr_b.ln_1p() / LN_2 + averaged_tail(mean, &cfg).unwrap();
        assert!(approx < no_correction);
    }

    #[test]
    fn scales_are_checked() {
        let srf = SrfParams::reference();
        let links = FadedLinks {
            srf_b: srf,
            srf_e: srf,
            scale_b: 0.0,
            scale_e: 1.0,
        };
        assert!(avg_secrecy_lower_bound(&links, &FblConfig::reference()).is_err());
    }
}
