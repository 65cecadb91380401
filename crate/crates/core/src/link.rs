//! Link budget: ground-station radiation pattern, free-space loss, arc
//! geometry and the mean SNR of each satellite link.
//!
//! The instantaneous SNR of link `i` is
//! `P_A · G_tx · G_i · L_i · |h_i|²` with `P_A = P'_A G'_A / σ²`; everything
//! except `|h_i|²` is collapsed into a linear *scale*.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{moment, ChannelError, SrfParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("{op}: {reason}")]
    Domain { op: &'static str, reason: String },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

fn domain(op: &'static str, reason: String) -> LinkError {
    LinkError::Domain { op, reason }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Angle at which the sidelobe envelope reaches the far-sidelobe floor.
pub const SIDELOBE_FLOOR_DEG: f64 = 48.0;
/// Far-sidelobe gain for `48° ≤ φ ≤ 180°`.
pub const SIDELOBE_FLOOR_DBI: f64 = -10.0;

/// Ground-station reference radiation pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaPattern {
    /// Start of the `32 − 25 log φ` sidelobe envelope, degrees.
    #[serde(default = "AntennaPattern::default_phi_min")]
    pub phi_min_deg: f64,
    /// Main-beam gain toward Bob, also used for `φ < φ_min`.
    #[serde(default = "AntennaPattern::default_boresight")]
    pub boresight_gain_dbi: f64,
}

impl AntennaPattern {
    fn default_phi_min() -> f64 {
        1.0
    }

    fn default_boresight() -> f64 {
        32.0
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        if !(self.phi_min_deg > 0.0 && self.phi_min_deg < SIDELOBE_FLOOR_DEG) {
            return Err(domain(
                "AntennaPattern",
                format!("phi_min_deg = {} must lie in (0, 48)", self.phi_min_deg),
            ));
        }
        if !self.boresight_gain_dbi.is_finite() {
            return Err(domain("AntennaPattern", "boresight gain must be finite".into()));
        }
        Ok(())
    }

    pub fn gain_dbi(&self, phi_deg: f64) -> Result<f64, LinkError> {
        itu_pattern_gain_dbi(self, phi_deg)
    }
}

impl Default for AntennaPattern {
    fn default() -> Self {
        Self {
            phi_min_deg: Self::default_phi_min(),
            boresight_gain_dbi: Self::default_boresight(),
        }
    }
}

/// Transmit gain toward a receiver `phi_deg` off the main beam.
///
/// ```
/// use satsec::link::{itu_pattern_gain_dbi, AntennaPattern};
/// let pattern = AntennaPattern::default();
/// assert!((itu_pattern_gain_dbi(&pattern, 10.0).unwrap() - 7.0).abs() < 1e-12);
/// assert_eq!(itu_pattern_gain_dbi(&pattern, 100.0).unwrap(), -10.0);
/// ```
pub fn itu_pattern_gain_dbi(pattern: &AntennaPattern, phi_deg: f64) -> Result<f64, LinkError> {
    if !(0.0..=180.0).contains(&phi_deg) {
        return Err(domain(
            "itu_pattern_gain_dbi",
            format!("phi = {phi_deg} outside [0, 180] degrees"),
        ));
    }
    Ok(if phi_deg < pattern.phi_min_deg {
        pattern.boresight_gain_dbi
    } else if phi_deg < SIDELOBE_FLOOR_DEG {
        32.0 - 25.0 * phi_deg.log10()
    } else {
        SIDELOBE_FLOOR_DBI
    })
}

/// Free-space factor `λ / (4π d)`.
///
/// This is an amplitude ratio; [`free_space_loss_with`] with
/// `squared = true` gives the conventional power loss `(λ / 4πd)²`.
pub fn free_space_loss(wavelength_m: f64, distance_m: f64) -> Result<f64, LinkError> {
    free_space_loss_with(wavelength_m, distance_m, false)
}

pub fn free_space_loss_with(
    wavelength_m: f64,
    distance_m: f64,
    squared: bool,
) -> Result<f64, LinkError> {
    if !(wavelength_m > 0.0 && distance_m > 0.0) {
        return Err(domain(
            "free_space_loss",
            format!("wavelength {wavelength_m} m and distance {distance_m} m must be positive"),
        ));
    }
    let ratio = wavelength_m / (4.0 * std::f64::consts::PI * distance_m);
    Ok(if squared { ratio * ratio } else { ratio })
}

/// Off-boresight angle, in degrees, of a satellite `d_eb_m` along the arc
/// from Bob at radius `d_e_m`.
pub fn arc_offset_angle(d_eb_m: f64, d_e_m: f64) -> f64 {
    (d_eb_m / d_e_m).to_degrees()
}

/// Inverse of [`arc_offset_angle`].
pub fn arc_distance(phi_deg: f64, d_e_m: f64) -> f64 {
    phi_deg.to_radians() * d_e_m
}

/// Receive side of one satellite link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// `P_A = P'_A G'_A / σ²`, linear.
    pub p_a: f64,
    /// Satellite receive gain, linear.
    pub rx_gain: f64,
    pub wavelength_m: f64,
    pub distance_m: f64,
    /// Square the free-space factor.
    pub fspl_squared: bool,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<(), LinkError> {
        let fields = [
            ("p_a", self.p_a),
            ("rx_gain", self.rx_gain),
            ("wavelength_m", self.wavelength_m),
            ("distance_m", self.distance_m),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(domain("LinkBudget", format!("{name} = {value} must be positive")));
            }
        }
        Ok(())
    }

    pub fn path_loss(&self) -> Result<f64, LinkError> {
        free_space_loss_with(self.wavelength_m, self.distance_m, self.fspl_squared)
    }

    /// Composite linear scale `P_A · G_tx · G_rx · L`, the factor
    /// multiplying `|h|²` in the instantaneous SNR.
    pub fn scale(&self, tx_gain_linear: f64) -> Result<f64, LinkError> {
        self.validate()?;
        Ok(self.p_a * tx_gain_linear * self.rx_gain * self.path_loss()?)
    }
}

/// `E[SNR] = P_A · G_tx · G_rx · L · E[|h|²]`.
pub fn mean_snr(
    link: &LinkBudget,
    tx_gain_linear: f64,
    srf: &SrfParams,
) -> Result<f64, LinkError> {
    Ok(link.scale(tx_gain_linear)? * moment(srf, 2.0)?)
}

/// Composite scale `s` such that `s · E[|h|²]` equals the target mean SNR.
pub fn calibrate_to_mean_snr(target_snr_db: f64, srf: &SrfParams) -> Result<f64, LinkError> {
    Ok(db_to_linear(target_snr_db) / moment(srf, 2.0)?)
}

/// Eve's position relative to the main beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub phi_deg: f64,
    pub d_e_m: f64,
}

impl Geometry {
    pub fn from_arc(d_eb_m: f64, d_e_m: f64) -> Self {
        Self {
            phi_deg: arc_offset_angle(d_eb_m, d_e_m),
            d_e_m,
        }
    }

    pub fn d_eb_m(&self) -> f64 {
        arc_distance(self.phi_deg, self.d_e_m)
    }
}
