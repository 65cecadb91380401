//! Shadowed Rician fading (SRF).
//!
//! A link's complex coefficient is `h = r₁ e^{jα} + r₂ e^{jβ}`: a Rayleigh
//! scatter component with `E[r₁²] = 2b` and uniform phase `α`, plus a
//! Nakagami-`m` line-of-sight amplitude with `E[r₂²] = Ω` and deterministic
//! phase `β`. This module provides the closed-form envelope statistics and an
//! exact sampler.

use std::f64::consts::{LN_2, TAU};

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun::{
    gamma_fn, hyp2f1, hyp2f1_da, ln_hyp1f1, SeriesControl, SpecfunError, EULER_GAMMA,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid SRF parameter {field}: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("{op}: {reason}")]
    Domain { op: &'static str, reason: String },
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

/// Shadowed Rician parameters for one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrfParams {
    /// Half the average scatter power, `2b = E[r₁²]`.
    pub b: f64,
    /// Nakagami shape of the line-of-sight amplitude.
    pub m: f64,
    /// Average line-of-sight power `Ω = E[r₂²]`.
    pub omega: f64,
    /// Deterministic line-of-sight phase in radians.
    #[serde(default)]
    pub beta_los: f64,
}

impl SrfParams {
    pub fn new(b: f64, m: f64, omega: f64) -> Result<Self, ChannelError> {
        let params = Self {
            b,
            m,
            omega,
            beta_los: 0.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_los_phase(mut self, beta_los: f64) -> Result<Self, ChannelError> {
        self.beta_los = beta_los;
        self.validate()?;
        Ok(self)
    }

    /// The simulation default: `Ω = 0.515`, `m = 26`, `b = 0.005`.
    pub fn reference() -> Self {
        Self {
            b: 0.005,
            m: 26.0,
            omega: 0.515,
            beta_los: 0.0,
        }
    }

    /// Infrequent light shadowing (`b = 0.158`, `m = 19.4`, `Ω = 1.29`).
    pub fn light_shadowing() -> Self {
        Self {
            b: 0.158,
            m: 19.4,
            omega: 1.29,
            beta_los: 0.0,
        }
    }

    /// Average shadowing (`b = 0.126`, `m = 10.1`, `Ω = 0.835`).
    pub fn average_shadowing() -> Self {
        Self {
            b: 0.126,
            m: 10.1,
            omega: 0.835,
            beta_los: 0.0,
        }
    }

    /// Frequent heavy shadowing (`b = 0.063`, `m = 0.739`, `Ω = 8.97e-4`).
    pub fn heavy_shadowing() -> Self {
        Self {
            b: 0.063,
            m: 0.739,
            omega: 8.97e-4,
            beta_los: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |field, reason: &str| {
            Err(ChannelError::InvalidParams {
                field,
                reason: reason.to_string(),
            })
        };
        if !(self.b.is_finite() && self.b > 0.0) {
            return bad("b", "must be positive and finite");
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return bad("m", "must be positive and finite");
        }
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return bad("omega", "must be non-negative and finite");
        }
        if !(0.0..TAU).contains(&self.beta_los) {
            return bad("beta_los", "must lie in [0, 2π)");
        }
        Ok(())
    }

    /// `Ω / (2bm + Ω)`, the argument of the moment hypergeometric.
    pub fn los_fraction(&self) -> f64 {
        self.omega / (2.0 * self.b * self.m + self.omega)
    }

    /// `ln (2bm / (2bm + Ω))^m`.
    fn ln_shadow_factor(&self) -> f64 {
        self.m * (-self.los_fraction()).ln_1p()
    }
}

/// One channel draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSample {
    pub real_part: f64,
    pub imag_part: f64,
    /// `|h|²`.
    pub envelope_sq: f64,
}

impl ChannelSample {
    pub fn new(real_part: f64, imag_part: f64) -> Self {
        Self {
            real_part,
            imag_part,
            envelope_sq: real_part * real_part + imag_part * imag_part,
        }
    }
}

fn ctrl() -> SeriesControl {
    SeriesControl::default()
}

// (2bm/(2bm+Ω))^m · f for a non-negative series value f. The factor can
// underflow while f overflows, so the product is formed in logs.
fn shadowed(params: &SrfParams, op: &'static str, f: f64) -> Result<f64, ChannelError> {
    if !(f.is_finite() && f >= 0.0) {
        return Err(ChannelError::Domain {
            op,
            reason: format!(
                "2F1 series left f64 range (m = {}, x = {}); the channel is too concentrated",
                params.m,
                params.los_fraction()
            ),
        });
    }
    Ok((params.ln_shadow_factor() + f.ln()).exp())
}

/// Density of the envelope `|h|` at `x ≥ 0`.
///
/// Evaluated in the log domain so the growth of `1F1` and the Gaussian
/// decay cancel without overflow.
pub fn pdf_envelope(params: &SrfParams, x: f64) -> Result<f64, ChannelError> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(ChannelError::Domain {
            op: "pdf_envelope",
            reason: format!("x = {x} must be non-negative and finite"),
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let two_b = 2.0 * params.b;
    let z = params.omega * x * x / (two_b * (2.0 * params.b * params.m + params.omega));
    let ln_pdf = params.ln_shadow_factor() + (x / params.b).ln() - x * x / two_b
        + ln_hyp1f1(params.m, 1.0, z, &ctrl())?;
    Ok(ln_pdf.exp())
}

/// Moment `φ(ω) = E[|h|^ω]` of order `ω ≥ 0`.
pub fn moment(params: &SrfParams, order: f64) -> Result<f64, ChannelError> {
    if !(order >= 0.0 && order.is_finite()) {
        return Err(ChannelError::Domain {
            op: "moment",
            reason: format!("order {order} must be non-negative and finite"),
        });
    }
    let half = 0.5 * order;
    let f = hyp2f1(half + 1.0, params.m, 1.0, params.los_fraction(), &ctrl())?;
    Ok(shadowed(params, "moment", f)? * (2.0 * params.b).powf(half) * gamma_fn(half + 1.0)?)
}

/// `E[|h|⁴] = 8b² (2bm/(2bm+Ω))^m 2F1(3, m; 1; Ω/(2bm+Ω))`.
pub fn fourth_moment(params: &SrfParams) -> Result<f64, ChannelError> {
    let f = hyp2f1(3.0, params.m, 1.0, params.los_fraction(), &ctrl())?;
    Ok(8.0 * params.b * params.b * shadowed(params, "fourth_moment", f)?)
}

/// Moment generating function of the power, `E[exp(-η|h|²)]`, for `η ≥ 0`.
pub fn mgf_envelope_sq(params: &SrfParams, eta: f64) -> Result<f64, ChannelError> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(ChannelError::Domain {
            op: "mgf_envelope_sq",
            reason: format!("eta = {eta} must be non-negative and finite"),
        });
    }
    let SrfParams { b, m, omega, .. } = *params;
    let two_bm = 2.0 * b * m;
    let one_plus = 1.0 + 2.0 * b * eta;
    let ln_value = m * two_bm.ln() + (m - 1.0) * one_plus.ln()
        - m * ((two_bm + omega) * one_plus - omega).ln();
    Ok(ln_value.exp())
}

/// Which argument to feed the `∂ₐ2F1` term of the log-moment closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogMomentArgument {
    /// `Ω / (2bm + Ω)`, the argument obtained by differentiating the moment
    /// formula at order zero. Agrees with finite differences and sampling.
    MomentConsistent,
    /// `Ω / (2b(2bm + Ω))`, the `1F1` argument carried over with its extra
    /// `2b` factor. Kept for comparison only; it leaves `[0, 1)` whenever
    /// `2b < Ω/(2bm + Ω)`.
    ExtraScatterFactor,
}

impl LogMomentArgument {
    fn value(self, params: &SrfParams) -> f64 {
        match self {
            Self::MomentConsistent => params.los_fraction(),
            Self::ExtraScatterFactor => params.los_fraction() / (2.0 * params.b),
        }
    }
}

/// `E[ln |h|²]` from the closed form
/// `2φ'(0) = ln 2 + ln b − γ + (1−x)^m ∂ₐ2F1(1, m; 1; x)`.
pub fn log_moment_closed_form(
    params: &SrfParams,
    argument: LogMomentArgument,
) -> Result<f64, ChannelError> {
    let x = argument.value(params);
    let da = hyp2f1_da(1.0, params.m, 1.0, x, &ctrl())?;
    Ok(LN_2 + params.b.ln() - EULER_GAMMA + shadowed(params, "log_moment", da)?)
}

/// `E[ln |h|²] = d/dω φ(2ω)` at zero by central difference with `h = 1e-5`.
pub fn log_moment_numerical(params: &SrfParams) -> Result<f64, ChannelError> {
    const STEP: f64 = 1e-5;
    // φ(2ω) is analytic through ω = 0, so the moment formula is evaluated
    // directly at the negative order instead of going through `moment`.
    let phi = |w: f64| -> Result<f64, ChannelError> {
        let f = hyp2f1(w + 1.0, params.m, 1.0, params.los_fraction(), &ctrl())?;
        Ok(shadowed(params, "log_moment_numerical", f)? * (2.0 * params.b).powf(w) * libm::tgamma(w + 1.0))
    };
    Ok((phi(STEP)? - phi(-STEP)?) / (2.0 * STEP))
}

/// `E[ln |h|²]`, twice the log-moment derivative `φ'(0)`.
pub fn log_moment_derivative(params: &SrfParams) -> Result<f64, ChannelError> {
    log_moment_closed_form(params, LogMomentArgument::MomentConsistent)
}

/// Exact sampler of the composite channel.
#[derive(Debug, Clone)]
pub struct SrfSampler {
    scatter: Normal<f64>,
    phase: Uniform<f64>,
    los_power: Option<Gamma<f64>>,
    los_phasor: (f64, f64),
}

impl SrfSampler {
    pub fn new(params: &SrfParams) -> Result<Self, ChannelError> {
        params.validate()?;
        let scatter = Normal::new(0.0, params.b.sqrt()).map_err(|e| ChannelError::Domain {
            op: "sampler",
            reason: e.to_string(),
        })?;
        let phase = Uniform::new(0.0, TAU).map_err(|e| ChannelError::Domain {
            op: "sampler",
            reason: e.to_string(),
        })?;
        let los_power = if params.omega > 0.0 {
            Some(Gamma::new(params.m, params.omega / params.m).map_err(|e| {
                ChannelError::Domain {
                    op: "sampler",
                    reason: e.to_string(),
                }
            })?)
        } else {
            None
        };
        let (s, c) = params.beta_los.sin_cos();
        Ok(Self {
            scatter,
            phase,
            los_power,
            los_phasor: (c, s),
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSample {
        let g1 = self.scatter.sample(rng);
        let g2 = self.scatter.sample(rng);
        let r1 = g1.hypot(g2);
        let (sa, ca) = self.phase.sample(rng).sin_cos();
        let r2 = self.los_power.as_ref().map_or(0.0, |g| g.sample(rng).sqrt());
        ChannelSample::new(
            r1 * ca + r2 * self.los_phasor.0,
            r1 * sa + r2 * self.los_phasor.1,
        )
    }
}

/// Draws `count` channel samples from `rng`.
pub fn sample<R: Rng + ?Sized>(
    params: &SrfParams,
    rng: &mut R,
    count: usize,
) -> Result<Vec<ChannelSample>, ChannelError> {
    let sampler = SrfSampler::new(params)?;
    Ok((0..count).map(|_| sampler.draw(rng)).collect())
}
