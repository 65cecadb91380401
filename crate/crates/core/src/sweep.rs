//! One-dimensional experiment sweeps over a [`Scenario`].

use serde::{Deserialize, Serialize};

use crate::montecarlo::{estimate_secrecy_summary, McError};
use crate::scenario::{Diagnostic, Scenario, ScenarioError};
use crate::secrecy::{avg_secrecy_lower_bound, avg_secrecy_taylor_approx, SecrecyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "n")]
    N,
    #[serde(rename = "mean_snr_b_db")]
    MeanSnrBDb,
    #[serde(rename = "mean_snr_e_db")]
    MeanSnrEDb,
    #[serde(rename = "phi_deg")]
    PhiDeg,
    #[serde(rename = "d_eb_km")]
    DebKm,
}

impl SweepAxis {
    pub fn key(self) -> &'static str {
        match self {
            Self::N => "n",
            Self::MeanSnrBDb => "mean_snr_b_db",
            Self::MeanSnrEDb => "mean_snr_e_db",
            Self::PhiDeg => "phi_deg",
            Self::DebKm => "d_eb_km",
        }
    }

    pub fn is_leakage(self) -> bool {
        matches!(self, Self::PhiDeg | Self::DebKm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    #[default]
    Linear,
    Log,
}

/// A named sweep: an axis and either a `start..=stop` range or explicit
/// `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    pub axis: SweepAxis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default)]
    pub scale: GridScale,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl SweepSpec {
    pub fn range(name: &str, axis: SweepAxis, start: f64, stop: f64, points: usize) -> Self {
        Self {
            name: name.to_string(),
            axis,
            start: Some(start),
            stop: Some(stop),
            points: Some(points),
            scale: GridScale::Linear,
            values: None,
        }
    }

    pub fn list(name: &str, axis: SweepAxis, values: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            axis,
            start: None,
            stop: None,
            points: None,
            scale: GridScale::Linear,
            values: Some(values),
        }
    }

    /// Diagnostics with paths relative to the sweep entry.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.name.is_empty() {
            out.push(Diagnostic::new("name", "must not be empty"));
        }
        match (&self.values, self.start, self.stop, self.points) {
            (Some(values), None, None, None) => {
                if values.is_empty() {
                    out.push(Diagnostic::new("values", "must not be empty"));
                }
            }
            (None, Some(start), Some(stop), Some(points)) => {
                if !(start < stop) {
                    out.push(Diagnostic::new("start", "must be less than stop"));
                }
                if points < 2 {
                    out.push(Diagnostic::new("points", "must be at least 2"));
                }
                if self.scale == GridScale::Log && !(start > 0.0) {
                    out.push(Diagnostic::new("start", "must be positive for a log grid"));
                }
            }
            _ => out.push(Diagnostic::new(
                "values",
                "give either values or all of start, stop and points",
            )),
        }
        if out.is_empty() {
            for x in self.grid() {
                if let Some(reason) = self.axis_value_problem(x) {
                    out.push(Diagnostic::new("axis", format!("value {x}: {reason}")));
                    break;
                }
            }
        }
        out
    }

    fn axis_value_problem(&self, x: f64) -> Option<&'static str> {
        match self.axis {
            SweepAxis::N if !(x >= 1.0 && x == x.round()) => Some("blocklength must be a positive integer"),
            SweepAxis::PhiDeg if !(0.0..=180.0).contains(&x) => Some("angle must lie in [0, 180]"),
            SweepAxis::DebKm if !(x >= 0.0) => Some("arc distance must be non-negative"),
            _ if !x.is_finite() => Some("must be finite"),
            _ => None,
        }
    }

    /// Grid points in order.
    pub fn grid(&self) -> Vec<f64> {
        if let Some(values) = &self.values {
            return values.clone();
        }
        let (start, stop, points) = match (self.start, self.stop, self.points) {
            (Some(a), Some(b), Some(p)) if p >= 2 => (a, b, p),
            _ => return Vec::new(),
        };
        let step = |i: usize| i as f64 / (points - 1) as f64;
        (0..points)
            .map(|i| match self.scale {
                GridScale::Linear => start + (stop - start) * step(i),
                GridScale::Log => (start.ln() + (stop.ln() - start.ln()) * step(i)).exp(),
            })
            .map(|x| if self.axis == SweepAxis::N { x.round() } else { x })
            .collect()
    }
}

/// Row of a rate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub x: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub lower_bound: f64,
    pub taylor_approx: f64,
    /// Monte Carlo `E[C_s]` on the same draws.
    pub capacity: f64,
    pub mc_raw_mean: f64,
    pub clamped_fraction: f64,
}

/// Row of a leakage sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakageRow {
    pub phi_deg: f64,
    pub d_eb_km: f64,
    pub delta: f64,
    pub log10_delta: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SweepTable {
    Rate { axis: SweepAxis, rows: Vec<RateRow> },
    Leakage { rows: Vec<LeakageRow> },
}

impl SweepTable {
    pub fn len(&self) -> usize {
        match self {
            Self::Rate { rows, .. } => rows.len(),
            Self::Leakage { rows } => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("invalid sweep: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("{op} failed at {axis} = {x}: {source}")]
    Numerical {
        op: &'static str,
        axis: &'static str,
        x: f64,
        source: PointError,
    },
}

/// Numerical failure behind a [`SweepError::Numerical`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PointError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    MonteCarlo(#[from] McError),
    #[error(transparent)]
    Secrecy(#[from] SecrecyError),
}

fn numerical<E: Into<PointError>>(
    op: &'static str,
    axis: SweepAxis,
    x: f64,
) -> impl FnOnce(E) -> SweepError {
    move |e| SweepError::Numerical {
        op,
        axis: axis.key(),
        x,
        source: e.into(),
    }
}

/// Evaluates every grid point of `spec` against `base`.
///
/// Rate sweeps reuse the same Monte Carlo seed at every point, so adjacent
/// points share their channel draws.
pub fn sweep(spec: &SweepSpec, base: &Scenario) -> Result<SweepTable, SweepError> {
    let problems = spec.validate();
    if !problems.is_empty() {
        return Err(SweepError::Invalid(problems));
    }
    let axis = spec.axis;
    if axis.is_leakage() {
        let rows = spec
            .grid()
            .into_iter()
            .map(|x| {
                let scenario = base.with_axis(axis, x);
                let phi = scenario
                    .geometry
                    .map(|g| g.phi_deg(scenario.link.d_e_km))
                    .unwrap_or_default();
                let p = scenario
                    .leakage_at(phi)
                    .map_err(numerical("leakage_for_rate", axis, x))?;
                Ok(LeakageRow {
                    phi_deg: p.phi_deg,
                    d_eb_km: p.d_eb_km,
                    delta: p.leakage.delta,
                    log10_delta: p.leakage.log10_delta,
                    saturated: p.leakage.saturated,
                })
            })
            .collect::<Result<_, SweepError>>()?;
        return Ok(SweepTable::Leakage { rows });
    }

    let rows = spec
        .grid()
        .into_iter()
        .map(|x| rate_row(&base.with_axis(axis, x), axis, x))
        .collect::<Result<_, SweepError>>()?;
    Ok(SweepTable::Rate { axis, rows })
}

fn rate_row(scenario: &Scenario, axis: SweepAxis, x: f64) -> Result<RateRow, SweepError> {
    let links = scenario
        .rate_links()
        .map_err(|e| numerical("calibrate_to_mean_snr", axis, x)(ScenarioError::from(e)))?;
    let cfg = &scenario.fbl;
    let summary = estimate_secrecy_summary(&links, cfg, &scenario.mc)
        .map_err(numerical("estimate_avg_secrecy", axis, x))?;
    let lower_bound =
        avg_secrecy_lower_bound(&links, cfg).map_err(numerical("avg_secrecy_lower_bound", axis, x))?;
    let taylor_approx = avg_secrecy_taylor_approx(&links, cfg)
        .map_err(numerical("avg_secrecy_taylor_approx", axis, x))?;
    Ok(RateRow {
        x,
        mc_mean: summary.rate.mean,
        mc_stderr: summary.rate.std_error,
        lower_bound,
        taylor_approx,
        capacity: summary.capacity.mean,
        mc_raw_mean: summary.rate.raw_mean,
        clamped_fraction: summary.rate.clamped_fraction,
    })
}

/// Built-in sweeps `fig2` to `fig5` over the reference scenario.
pub mod presets {
    use super::{SweepAxis, SweepSpec};

    /// Blocklength 100..=2000 in steps of 100.
    pub fn fig2() -> SweepSpec {
        SweepSpec::range("fig2", SweepAxis::N, 100.0, 2000.0, 20)
    }

    /// Bob's mean SNR 0..=14 dB in 1 dB steps.
    pub fn fig3() -> SweepSpec {
        SweepSpec::range("fig3", SweepAxis::MeanSnrBDb, 0.0, 14.0, 15)
    }

    /// Eve's mean SNR −10..=4 dB in 1 dB steps.
    pub fn fig4() -> SweepSpec {
        SweepSpec::range("fig4", SweepAxis::MeanSnrEDb, -10.0, 4.0, 15)
    }

    /// Arc distance 10..=200 km in 5 km steps.
    pub fn fig5() -> SweepSpec {
        SweepSpec::range("fig5", SweepAxis::DebKm, 10.0, 200.0, 39)
    }

    pub fn all() -> Vec<SweepSpec> {
        vec![fig2(), fig3(), fig4(), fig5()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_grids() {
        let g = presets::fig2().grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 100.0);
        assert_eq!(g[19], 2000.0);
        assert!(g.windows(2).all(|w| (w[1] - w[0] - 100.0).abs() < 1e-9));
        let g = presets::fig4().grid();
        assert_eq!(g.first(), Some(&-10.0));
        assert_eq!(g.last(), Some(&4.0));
        let g = presets::fig5().grid();
        assert!(g.iter().any(|&d| (d - 45.0).abs() < 1e-9));
    }

    #[test]
    fn log_grid_endpoints() {
        let mut s = SweepSpec::range("x", SweepAxis::N, 10.0, 1000.0, 3);
        s.scale = GridScale::Log;
        assert_eq!(s.grid(), vec![10.0, 100.0, 1000.0]);
    }

    #[test]
    fn invalid_specs() {
        assert!(!SweepSpec::range("x", SweepAxis::N, 5.0, 1.0, 4).validate().is_empty());
        assert!(!SweepSpec::range("x", SweepAxis::N, 1.0, 5.0, 1).validate().is_empty());
        assert!(!SweepSpec::list("x", SweepAxis::N, vec![0.5]).validate().is_empty());
        assert!(!SweepSpec::list("x", SweepAxis::PhiDeg, vec![200.0]).validate().is_empty());
        let mut both = SweepSpec::range("x", SweepAxis::N, 1.0, 5.0, 3);
        both.values = Some(vec![1.0]);
        assert!(!both.validate().is_empty());
    }
}
