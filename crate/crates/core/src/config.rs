//! TOML scenario files.
//!
//! Every key is optional; an empty file is nominal Case A (full model,
//! coupled controller, `q0 = (0.1, 0.2, 0.4, -0.1, -0.2)`, 30 s). The schema
//! is documented in `scenarios/README.md`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::control::{ControlMode, ControllerConfig};
use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::model::{default_params, planar_reduction, ModelParams, DEFAULT_WORKSPACE_MARGIN};
use crate::sim::{default_wind_force, DisturbanceProfile, NoiseConfig, ScenarioConfig};

pub const CASE_A_Q0: [f64; 5] = [0.1, 0.2, 0.4, -0.1, -0.2];
pub const CASE_B_Q0: [f64; 5] = [0.4, 0.8, 1.6, -0.4, -0.8];
pub const PLANAR_Q0: [f64; 2] = [0.2, 0.0];
pub const FULL_DURATION: f64 = 30.0;
pub const PLANAR_DURATION: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Full,
    Planar,
}

/// A gain given as a scalar (times identity), a diagonal, or a full matrix.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

impl GainSpec {
    fn to_matrix(&self, name: &str, n: usize) -> Result<DMatrix<f64>> {
        match self {
            GainSpec::Scalar(k) => Ok(DMatrix::identity(n, n) * *k),
            GainSpec::Diagonal(d) => Ok(DMatrix::from_diagonal(&DVector::from_column_slice(d))),
            GainSpec::Matrix(rows) => {
                let r = rows.len();
                let c = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|row| row.len() != c) {
                    return Err(Error::InvalidConfig(format!("{name}: ragged matrix rows")));
                }
                Ok(DMatrix::from_row_iterator(r, c, rows.iter().flatten().copied()))
            }
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawController {
    mode: Option<ControlMode>,
    kpy: Option<GainSpec>,
    kdy: Option<GainSpec>,
    kpc: Option<GainSpec>,
    kdc: Option<GainSpec>,
    y_ref: Option<Vec<f64>>,
    dy_ref: Option<Vec<f64>>,
    qc_ref: Option<Vec<f64>>,
    dqc_ref: Option<Vec<f64>>,
    /// Parameters the controller believes in; defaults to nominal.
    nominal: Option<ModelParams>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawWind {
    t_on: f64,
    t_off: f64,
    force: [f64; 2],
}

impl Default for RawWind {
    fn default() -> Self {
        let f = default_wind_force();
        Self { t_on: 10.0, t_off: 20.0, force: [f, f] }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawScenario {
    model: ModelKind,
    duration: Option<f64>,
    dt: f64,
    seed: u64,
    q0: Option<Vec<f64>>,
    dq0: Option<Vec<f64>>,
    workspace_margin: f64,
    plant: ModelParams,
    controller: RawController,
    wind: Option<RawWind>,
    noise: Option<NoiseConfig>,
}

impl Default for RawScenario {
    fn default() -> Self {
        Self {
            model: ModelKind::Full,
            duration: None,
            dt: 1e-3,
            seed: 0,
            q0: None,
            dq0: None,
            workspace_margin: DEFAULT_WORKSPACE_MARGIN,
            plant: default_params(),
            controller: RawController::default(),
            wind: None,
            noise: None,
        }
    }
}

fn build_model(kind: ModelKind, params: &ModelParams) -> Result<Model> {
    match kind {
        ModelKind::Full => Model::full(*params),
        ModelKind::Planar => Model::planar(planar_reduction(params)?),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a scenario from TOML text.
pub fn parse_scenario_str(text: &str) -> Result<ScenarioConfig> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        reason: e.message().to_string(),
    })?;

    let plant = build_model(raw.model, &raw.plant)?;
    let nominal = build_model(raw.model, &raw.controller.nominal.unwrap_or_else(default_params))?;
    let c = &raw.controller;
    let mut ctrl = ControllerConfig::new(c.mode.unwrap_or(ControlMode::Coupled), nominal);
    let (ny, nc) = (ctrl.n_outputs(), ctrl.n_internal());
    for (spec, name, n, slot) in [
        (&c.kpy, "kpy", ny, &mut ctrl.gains.kpy),
        (&c.kdy, "kdy", ny, &mut ctrl.gains.kdy),
        (&c.kpc, "kpc", nc, &mut ctrl.gains.kpc),
        (&c.kdc, "kdc", nc, &mut ctrl.gains.kdc),
    ] {
        if let Some(spec) = spec {
            *slot = spec.to_matrix(name, n)?;
        }
    }
    for (v, slot) in [
        (&c.y_ref, &mut ctrl.y_ref),
        (&c.dy_ref, &mut ctrl.dy_ref),
        (&c.qc_ref, &mut ctrl.qc_ref),
        (&c.dqc_ref, &mut ctrl.dqc_ref),
    ] {
        if let Some(v) = v {
            *slot = DVector::from_column_slice(v);
        }
    }

    let (q0_default, duration_default): (&[f64], f64) = match raw.model {
        ModelKind::Full => (&CASE_A_Q0, FULL_DURATION),
        ModelKind::Planar => (&PLANAR_Q0, PLANAR_DURATION),
    };
    let q0 = raw.q0.unwrap_or_else(|| q0_default.to_vec());
    let dq0 = raw.dq0.unwrap_or_else(|| vec![0.0; q0.len()]);
    let config = ScenarioConfig {
        plant,
        controller: ctrl,
        q0: DVector::from_vec(q0),
        dq0: DVector::from_vec(dq0),
        duration: raw.duration.unwrap_or(duration_default),
        dt: raw.dt,
        wind: raw.wind.map(|w| DisturbanceProfile { t_on: w.t_on, t_off: w.t_off, force: w.force }),
        noise: raw.noise,
        seed: raw.seed,
        workspace_margin: raw.workspace_margin,
    };
    config.validate()?;
    Ok(config)
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: None,
        reason: format!("{}: {e}", path.display()),
    })?;
    parse_scenario_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Multibody;

    #[test]
    fn empty_file_is_case_a() {
        let c = parse_scenario_str("").unwrap();
        assert_eq!(c.q0.as_slice(), &CASE_A_Q0);
        assert_eq!(c.controller.mode, ControlMode::Coupled);
        assert_eq!(c.duration, 30.0);
        assert_eq!(c.dt, 1e-3);
        assert!(c.wind.is_none() && c.noise.is_none());
        assert_eq!(c.plant, c.controller.nominal);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_scenario_str("dt = 0.001\n\n[plant]\nm_x = 3.0\n").unwrap_err();
        match err {
            Error::Parse { line, reason } => {
                assert_eq!(line, Some(4));
                assert!(reason.contains("m_x"), "{reason}");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn zero_dt_is_rejected() {
        assert!(matches!(parse_scenario_str("dt = 0.0"), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn mismatch_and_noise() {
        let c = parse_scenario_str("[plant]\nm_l = 20.4\n[noise]\n").unwrap();
        match (&c.plant, &c.controller.nominal) {
            (Model::Full(p), Model::Full(n)) => {
                assert_eq!(p.params().m_l, 20.4);
                assert_eq!(n.params().m_l, default_params().m_l);
            }
            _ => panic!("expected full models"),
        }
        assert_eq!(c.noise, Some(NoiseConfig::default()));
    }

    #[test]
    fn gain_forms() {
        let c = parse_scenario_str(
            "[controller]\nmode = \"standard\"\nkpy = [1.0, 2.0, 3.0]\nkpc = 5.0\nkdc = [[4.0, 1.0], [1.0, 4.0]]\n",
        )
        .unwrap();
        assert_eq!(c.controller.mode, ControlMode::Standard);
        assert_eq!(c.controller.gains.kpy[(2, 2)], 3.0);
        assert_eq!(c.controller.gains.kpc[(1, 1)], 5.0);
        assert_eq!(c.controller.gains.kdc[(0, 1)], 1.0);
    }

    #[test]
    fn planar_defaults() {
        let c = parse_scenario_str("model = \"planar\"\n").unwrap();
        assert_eq!(c.plant.dof(), 2);
        assert_eq!(c.q0.as_slice(), &PLANAR_Q0);
        assert_eq!(c.duration, 60.0);
    }

    #[test]
    fn wind_defaults() {
        let c = parse_scenario_str("[wind]\n").unwrap();
        let w = c.wind.unwrap();
        assert_eq!((w.t_on, w.t_off), (10.0, 20.0));
        assert!((w.force[0] - 8.104).abs() < 1e-3);
    }

    #[test]
    fn bad_gain_dimension() {
        assert!(parse_scenario_str("[controller]\nkpc = [1.0]\n").is_err());
    }
}
