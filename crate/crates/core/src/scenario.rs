//! Full scenario description: both fading links, the link budget, the
//! finite-blocklength targets, Monte Carlo settings and named sweeps.
//!
//! Rate experiments calibrate each link's composite scale to its configured
//! mean SNR. Leakage experiments keep Bob's calibration, derive the common
//! transmit term `P_A` from it, and place Eve in the pattern sidelobes, so
//! Eve's mean SNR follows the antenna gain toward her.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{moment, SrfParams};
use crate::link::{
    arc_distance, arc_offset_angle, calibrate_to_mean_snr, db_to_linear, itu_pattern_gain_dbi,
    AntennaPattern, LinkBudget, LinkError,
};
use crate::montecarlo::McConfig;
use crate::secrecy::{leakage_for_rate, FadedLinks, FblConfig, Leakage, SecrecyError, SnrPair};
use crate::sweep::{presets, SweepAxis, SweepSpec};

/// A validation finding tied to a configuration key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub reason: String,
}

impl Diagnostic {
    pub fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.path, self.reason)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub mean_snr_b_db: f64,
    pub mean_snr_e_db: f64,
    /// Satellite receive gains, linear.
    #[serde(default = "one")]
    pub rx_gain_b: f64,
    #[serde(default = "one")]
    pub rx_gain_e: f64,
    #[serde(default = "LinkConfig::default_wavelength")]
    pub wavelength_m: f64,
    pub d_b_km: f64,
    pub d_e_km: f64,
    #[serde(default)]
    pub fspl_squared: bool,
    pub boresight_gain_dbi: f64,
    pub phi_min_deg: f64,
}

fn one() -> f64 {
    1.0
}

impl LinkConfig {
    fn default_wavelength() -> f64 {
        0.15
    }

    pub fn pattern(&self) -> AntennaPattern {
        AntennaPattern {
            phi_min_deg: self.phi_min_deg,
            boresight_gain_dbi: self.boresight_gain_dbi,
        }
    }
}

/// Where Eve sits relative to Bob. Exactly one of the two keys is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_eb_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_deg: Option<f64>,
}

impl GeometryConfig {
    /// Off-boresight angle toward Eve, degrees.
    pub fn phi_deg(&self, d_e_km: f64) -> f64 {
        match (self.phi_deg, self.d_eb_km) {
            (Some(phi), _) => phi,
            (None, Some(d)) => arc_offset_angle(d, d_e_km),
            (None, None) => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub srf_b: SrfParams,
    pub srf_e: SrfParams,
    pub fbl: FblConfig,
    pub link: LinkConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryConfig>,
    pub mc: McConfig,
    #[serde(default)]
    pub sweeps: Vec<SweepSpec>,
}

/// One evaluated point of the leakage-versus-geometry relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakagePoint {
    pub phi_deg: f64,
    pub d_eb_km: f64,
    pub mean_snr_e_db: f64,
    pub leakage: Leakage,
}

impl Scenario {
    /// Reference scenario with the `fig2` to `fig5` sweeps.
    pub fn reference() -> Self {
        Self {
            srf_b: SrfParams::reference(),
            srf_e: SrfParams::reference(),
            fbl: FblConfig::reference(),
            link: LinkConfig {
                mean_snr_b_db: 5.0,
                mean_snr_e_db: -3.0,
                rx_gain_b: 1.0,
                rx_gain_e: 1.0,
                wavelength_m: LinkConfig::default_wavelength(),
                d_b_km: 2000.0,
                d_e_km: 2000.0,
                fspl_squared: false,
                boresight_gain_dbi: 34.0,
                phi_min_deg: 1.0,
            },
            geometry: Some(GeometryConfig {
                d_eb_km: Some(45.0),
                phi_deg: None,
            }),
            mc: McConfig::default(),
            sweeps: presets::all(),
        }
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        validate_srf("srf_b", &self.srf_b, &mut out);
        validate_srf("srf_e", &self.srf_e, &mut out);

        let fbl = &self.fbl;
        if fbl.n < 1 {
            out.push(Diagnostic::new("fbl.n", "must be at least 1"));
        }
        if !(fbl.eps_b > 0.0 && fbl.eps_b < 0.5) {
            out.push(Diagnostic::new("fbl.eps_b", "must lie in (0, 0.5)"));
        }
        if !(fbl.delta > 0.0 && fbl.delta < 0.5) {
            out.push(Diagnostic::new("fbl.delta", "must lie in (0, 0.5)"));
        }
        if fbl.k_bits < 1 {
            out.push(Diagnostic::new("fbl.k_bits", "must be at least 1"));
        }

        let link = &self.link;
        for (key, value) in [("mean_snr_b_db", link.mean_snr_b_db), ("mean_snr_e_db", link.mean_snr_e_db)] {
            if !value.is_finite() {
                out.push(Diagnostic::new(format!("link.{key}"), "must be finite"));
            }
        }
        for (key, value) in [
            ("rx_gain_b", link.rx_gain_b),
            ("rx_gain_e", link.rx_gain_e),
            ("wavelength_m", link.wavelength_m),
            ("d_b_km", link.d_b_km),
            ("d_e_km", link.d_e_km),
        ] {
            if !(value.is_finite() && value > 0.0) {
                out.push(Diagnostic::new(format!("link.{key}"), "must be positive"));
            }
        }
        if !link.boresight_gain_dbi.is_finite() {
            out.push(Diagnostic::new("link.boresight_gain_dbi", "must be finite"));
        }
        if !(link.phi_min_deg > 0.0 && link.phi_min_deg < 48.0) {
            out.push(Diagnostic::new("link.phi_min_deg", "must lie in (0, 48)"));
        }

        if let Some(geo) = &self.geometry {
            match (geo.phi_deg, geo.d_eb_km) {
                (Some(_), Some(_)) => out.push(Diagnostic::new(
                    "geometry",
                    "set either phi_deg or d_eb_km, not both",
                )),
                (None, None) => {
                    out.push(Diagnostic::new("geometry", "needs phi_deg or d_eb_km"))
                }
                (Some(phi), None) if !(0.0..=180.0).contains(&phi) => {
                    out.push(Diagnostic::new("geometry.phi_deg", "must lie in [0, 180]"))
                }
                (None, Some(d)) if !(d >= 0.0 && arc_offset_angle(d, link.d_e_km) <= 180.0) => {
                    out.push(Diagnostic::new(
                        "geometry.d_eb_km",
                        "must be non-negative and at most half the orbit arc",
                    ))
                }
                _ => {}
            }
        }

        if self.mc.samples < 1 {
            out.push(Diagnostic::new("mc.samples", "must be at least 1"));
        }
        if self.mc.streams < 1 {
            out.push(Diagnostic::new("mc.streams", "must be at least 1"));
        }

        for (i, sweep) in self.sweeps.iter().enumerate() {
            for d in sweep.validate() {
                out.push(Diagnostic::new(format!("sweeps[{i}].{}", d.path), d.reason));
            }
            if self.sweeps[..i].iter().any(|s| s.name == sweep.name) {
                out.push(Diagnostic::new(format!("sweeps[{i}].name"), "duplicate sweep name"));
            }
        }
        out
    }

    pub fn sweep(&self, name: &str) -> Option<&SweepSpec> {
        self.sweeps.iter().find(|s| s.name == name)
    }

    /// Copy of the scenario with one axis variable replaced.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Self {
        let mut s = self.clone();
        match axis {
            SweepAxis::N => s.fbl.n = value.round() as u64,
            SweepAxis::MeanSnrBDb => s.link.mean_snr_b_db = value,
            SweepAxis::MeanSnrEDb => s.link.mean_snr_e_db = value,
            SweepAxis::PhiDeg => {
                s.geometry = Some(GeometryConfig {
                    d_eb_km: None,
                    phi_deg: Some(value),
                })
            }
            SweepAxis::DebKm => {
                s.geometry = Some(GeometryConfig {
                    d_eb_km: Some(value),
                    phi_deg: None,
                })
            }
        }
        s
    }

    /// Both links calibrated to their configured mean SNRs.
    pub fn rate_links(&self) -> Result<FadedLinks, LinkError> {
        Ok(FadedLinks {
            srf_b: self.srf_b,
            srf_e: self.srf_e,
            scale_b: calibrate_to_mean_snr(self.link.mean_snr_b_db, &self.srf_b)?,
            scale_e: calibrate_to_mean_snr(self.link.mean_snr_e_db, &self.srf_e)?,
        })
    }

    /// Bob's link budget with `P_A` back-solved from his mean SNR at
    /// boresight.
    pub fn bob_budget(&self) -> Result<LinkBudget, LinkError> {
        let mut budget = LinkBudget {
            p_a: 1.0,
            rx_gain: self.link.rx_gain_b,
            wavelength_m: self.link.wavelength_m,
            distance_m: self.link.d_b_km * 1e3,
            fspl_squared: self.link.fspl_squared,
        };
        let unit_scale = budget.scale(db_to_linear(self.link.boresight_gain_dbi))?;
        budget.p_a = calibrate_to_mean_snr(self.link.mean_snr_b_db, &self.srf_b)? / unit_scale;
        Ok(budget)
    }

    /// Eve's link budget sharing Bob's transmit term.
    pub fn eve_budget(&self) -> Result<LinkBudget, LinkError> {
        Ok(LinkBudget {
            p_a: self.bob_budget()?.p_a,
            rx_gain: self.link.rx_gain_e,
            wavelength_m: self.link.wavelength_m,
            distance_m: self.link.d_e_km * 1e3,
            fspl_squared: self.link.fspl_squared,
        })
    }

    /// Leakage at the configured rate `k_bits / n` with Eve `phi_deg` off
    /// the main beam.
    pub fn leakage_at(&self, phi_deg: f64) -> Result<LeakagePoint, ScenarioError> {
        let gain = itu_pattern_gain_dbi(&self.link.pattern(), phi_deg)?;
        let scale_e = self.eve_budget()?.scale(db_to_linear(gain))?;
        let snr_b = db_to_linear(self.link.mean_snr_b_db);
        let snr_e = scale_e * moment(&self.srf_e, 2.0)?;
        let leakage = leakage_for_rate(
            SnrPair::new(snr_b, snr_e),
            self.fbl.n,
            self.fbl.eps_b,
            self.fbl.rate_target(),
        )?;
        Ok(LeakagePoint {
            phi_deg,
            d_eb_km: arc_distance(phi_deg, self.link.d_e_km),
            mean_snr_e_db: 10.0 * snr_e.log10(),
            leakage,
        })
    }

    /// Leakage at the configured mean SNR pair, ignoring geometry.
    pub fn leakage_at_mean_snrs(&self) -> Result<Leakage, ScenarioError> {
        Ok(leakage_for_rate(
            SnrPair::new(
                db_to_linear(self.link.mean_snr_b_db),
                db_to_linear(self.link.mean_snr_e_db),
            ),
            self.fbl.n,
            self.fbl.eps_b,
            self.fbl.rate_target(),
        )?)
    }
}

fn validate_srf(block: &str, p: &SrfParams, out: &mut Vec<Diagnostic>) {
    if !(p.b.is_finite() && p.b > 0.0) {
        out.push(Diagnostic::new(format!("{block}.b"), "must be positive"));
    }
    if !(p.m.is_finite() && p.m > 0.0) {
        out.push(Diagnostic::new(format!("{block}.m"), "must be positive"));
    }
    if !(p.omega.is_finite() && p.omega >= 0.0) {
        out.push(Diagnostic::new(format!("{block}.omega"), "must be non-negative"));
    }
    if !(0.0..std::f64::consts::TAU).contains(&p.beta_los) {
        out.push(Diagnostic::new(format!("{block}.beta_los"), "must lie in [0, 2π)"));
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Secrecy(#[from] SecrecyError),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_is_valid() {
        assert_eq!(Scenario::reference().validate(), vec![]);
    }

    #[test]
    fn diagnostics_carry_key_paths() {
        let mut s = Scenario::reference();
        s.fbl.eps_b = 0.7;
        s.srf_e.m = -1.0;
        let d = s.validate();
        let text: Vec<String> = d.iter().map(|d| d.to_string()).collect();
        assert!(text.contains(&"fbl.eps_b must lie in (0, 0.5)".to_string()), "{text:?}");
        assert!(d.iter().any(|d| d.path == "srf_e.m"));
    }

    #[test]
    fn geometry_needs_exactly_one_key() {
        let mut s = Scenario::reference();
        s.geometry = Some(GeometryConfig {
            d_eb_km: Some(1.0),
            phi_deg: Some(1.0),
        });
        assert!(s.validate().iter().any(|d| d.path == "geometry"));
    }

    #[test]
    fn rate_links_hit_target_mean_snrs() {
        let s = Scenario::reference();
        let mean = s.rate_links().unwrap().mean_snrs().unwrap();
        assert!((mean.snr_b - db_to_linear(5.0)).abs() < 1e-12);
        assert!((mean.snr_e - db_to_linear(-3.0)).abs() < 1e-12);
    }

    #[test]
    fn eve_on_boresight_matches_bob() {
        let s = Scenario::reference();
        let p = s.leakage_at(0.0).unwrap();
        assert!((p.mean_snr_e_db - s.link.mean_snr_b_db).abs() < 1e-9);
        assert!(p.leakage.saturated);
    }

    #[test]
    fn with_axis_rounds_blocklength() {
        let s = Scenario::reference().with_axis(SweepAxis::N, 1e8);
        assert_eq!(s.fbl.n, 100_000_000);
    }
}
