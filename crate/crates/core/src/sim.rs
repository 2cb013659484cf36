//! Fixed-step closed-loop simulation: measure → control (nominal model) →
//! disturbance → RK4 step of the plant, with the input held over each step.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{Controller, ControllerConfig};
use crate::dynamics::{Model, Multibody, Wrench};
use crate::error::{Error, Result};
use crate::model::{JointState, DEFAULT_WORKSPACE_MARGIN};

/// Air density [kg/m³], wind speed of 10 knots [m/s] and drag area [m²]
/// used for the default wind force.
pub const AIR_DENSITY: f64 = 1.225;
pub const WIND_SPEED_10_KNOTS: f64 = 5.144;
pub const DEFAULT_DRAG_AREA: f64 = 0.5;

/// `½ ρ C_dA v²` per axis, ≈ 8.1 N.
pub fn default_wind_force() -> f64 {
    0.5 * AIR_DENSITY * DEFAULT_DRAG_AREA * WIND_SPEED_10_KNOTS * WIND_SPEED_10_KNOTS
}

/// Horizontal wind force acting on platform and load over `[t_on, t_off)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceProfile {
    pub t_on: f64,
    pub t_off: f64,
    /// World-frame `(F_wx, F_wy)` [N], applied at each body.
    pub force: [f64; 2],
}

impl DisturbanceProfile {
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.t_on && t < self.t_off
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Floor of the per-sample noise standard deviation [rad/s²].
    pub accel_std: f64,
    /// Noise standard deviation as a fraction of the signal magnitude.
    pub relative_strength: f64,
    /// Estimate q̇ by leaky integration of the noisy q̈; otherwise the noise
    /// is added to q̇ directly (same std rule, read in rad/s).
    pub velocity_estimation: bool,
    /// Per-step leakage of the velocity integrator.
    pub leak: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            accel_std: 1.0,
            relative_strength: 0.10,
            velocity_estimation: true,
            leak: 0.999,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.accel_std >= 0.0) || !self.accel_std.is_finite() {
            return Err(Error::InvalidConfig("noise.accel_std must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.relative_strength) {
            return Err(Error::InvalidConfig("noise.relative_strength must lie in [0, 1]".into()));
        }
        if !(self.leak > 0.0 && self.leak <= 1.0) {
            return Err(Error::InvalidConfig("noise.leak must lie in (0, 1]".into()));
        }
        Ok(())
    }

    fn std_for(&self, magnitude: f64) -> f64 {
        self.accel_std.max(self.relative_strength * magnitude.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub plant: Model,
    pub controller: ControllerConfig,
    pub q0: DVector<f64>,
    pub dq0: DVector<f64>,
    pub duration: f64,
    pub dt: f64,
    pub wind: Option<DisturbanceProfile>,
    pub noise: Option<NoiseConfig>,
    pub seed: u64,
    pub workspace_margin: f64,
}

impl ScenarioConfig {
    /// Matched plant and controller, default gains, no disturbances.
    pub fn nominal(controller: ControllerConfig, q0: &[f64], duration: f64) -> Self {
        let n = q0.len();
        Self {
            plant: controller.nominal.clone(),
            controller,
            q0: DVector::from_column_slice(q0),
            dq0: DVector::zeros(n),
            duration,
            dt: 1e-3,
            wind: None,
            noise: None,
            seed: 0,
            workspace_margin: DEFAULT_WORKSPACE_MARGIN,
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig("dt must be > 0".into()));
        }
        if !(self.duration >= self.dt) || !self.duration.is_finite() {
            return Err(Error::InvalidConfig("duration must be >= dt".into()));
        }
        let n = self.plant.dof();
        if self.controller.nominal.dof() != n {
            return Err(Error::InvalidConfig("plant and controller models differ in dimension".into()));
        }
        if self.q0.len() != n || self.dq0.len() != n {
            return Err(Error::InvalidConfig(format!("q0 and dq0 must have {n} entries")));
        }
        if self.dq0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("dq0 must be finite".into()));
        }
        self.plant.check_workspace(&self.q0, self.workspace_margin)?;
        self.controller.validate()?;
        if let Some(w) = &self.wind {
            if !(w.t_on >= 0.0 && w.t_on < w.t_off && w.t_off <= self.duration) {
                return Err(Error::InvalidConfig("wind window must satisfy 0 <= t_on < t_off <= duration".into()));
            }
            if w.force.iter().any(|f| !f.is_finite()) {
                return Err(Error::InvalidConfig("wind force must be finite".into()));
            }
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        Ok(())
    }
}

/// Trajectory sampled at every control step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimLog {
    pub t: Vec<f64>,
    pub q: Vec<DVector<f64>>,
    pub dq: Vec<DVector<f64>>,
    pub u: Vec<Wrench>,
    /// Controller-side measurements, present when noise is configured.
    pub measured: Option<(Vec<DVector<f64>>, Vec<DVector<f64>>)>,
    /// Applied wind force, present when wind is configured.
    pub wind: Option<Vec<[f64; 2]>>,
}

impl SimLog {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Time series of coordinate `i`.
    pub fn joint(&self, i: usize) -> Vec<f64> {
        self.q.iter().map(|q| q[i]).collect()
    }

    /// Time series of input channel `i`.
    pub fn channel(&self, i: usize) -> Vec<f64> {
        self.u.iter().map(|u| u[i]).collect()
    }

    pub fn final_state(&self) -> Option<JointState> {
        Some(JointState::new(self.q.last()?.clone(), self.dq.last()?.clone()))
    }

    /// Largest `‖u(t)‖₂` over the log.
    pub fn max_wrench_norm(&self) -> f64 {
        self.u.iter().map(|u| u.norm()).fold(0.0, f64::max)
    }
}

/// One classical RK4 step with `u` and `f_ext` held constant.
pub fn step<M: Multibody + ?Sized>(
    plant: &M,
    state: &JointState,
    u: &Wrench,
    f_ext: &DVector<f64>,
    dt: f64,
) -> Result<JointState> {
    let deriv = |q: &DVector<f64>, dq: &DVector<f64>| -> Result<(DVector<f64>, DVector<f64>)> {
        let s = JointState::new(q.clone(), dq.clone());
        Ok((dq.clone(), plant.forward_dynamics(&s, u, f_ext)?))
    };
    let (q, dq) = (&state.q, &state.dq);
    let (k1q, k1v) = deriv(q, dq)?;
    let (k2q, k2v) = deriv(&(q + &k1q * (0.5 * dt)), &(dq + &k1v * (0.5 * dt)))?;
    let (k3q, k3v) = deriv(&(q + &k2q * (0.5 * dt)), &(dq + &k2v * (0.5 * dt)))?;
    let (k4q, k4v) = deriv(&(q + &k3q * dt), &(dq + &k3v * dt))?;
    let h = dt / 6.0;
    Ok(JointState::new(
        q + (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * h,
        dq + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * h,
    ))
}

/// `J_pᵀ F_w + J_lᵀ F_w` inside the wind window, zero outside.
pub fn wind_generalized_force<M: Multibody + ?Sized>(
    model: &M,
    q: &DVector<f64>,
    profile: Option<&DisturbanceProfile>,
    t: f64,
) -> DVector<f64> {
    let mut f = DVector::zeros(model.dof());
    if let Some(p) = profile.filter(|p| p.is_active(t)) {
        let force = nalgebra::Vector2::new(p.force[0], p.force[1]);
        for j in model.wind_jacobians(q) {
            f += j.transpose() * force;
        }
    }
    f
}

/// Controller-side sensing: passes `q` through and degrades `q̇`.
#[derive(Debug, Clone)]
pub struct Sensor {
    noise: Option<NoiseConfig>,
    rng: ChaCha8Rng,
    velocity: Option<DVector<f64>>,
    dt: f64,
}

impl Sensor {
    pub fn new(noise: Option<NoiseConfig>, seed: u64, dt: f64) -> Self {
        Self {
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
            velocity: None,
            dt,
        }
    }

    /// `accel` is the true acceleration over the last step; `None` on the
    /// first sample.
    pub fn measure(&mut self, truth: &JointState, accel: Option<&DVector<f64>>) -> JointState {
        let Some(cfg) = self.noise else {
            return truth.clone();
        };
        let dt = self.dt;
        let rng = &mut self.rng;
        let mut noisy = |x: f64| {
            let z: f64 = StandardNormal.sample(rng);
            x + cfg.std_for(x) * z
        };
        let dq = if cfg.velocity_estimation {
            match (self.velocity.take(), accel) {
                (Some(v), Some(a)) => v * cfg.leak + a.map(&mut noisy) * dt,
                _ => truth.dq.clone(),
            }
        } else {
            truth.dq.map(&mut noisy)
        };
        self.velocity = Some(dq.clone());
        JointState::new(truth.q.clone(), dq)
    }
}

/// Functional form of [`Sensor::measure`] for a one-off sample.
pub fn measure(
    noise: Option<&NoiseConfig>,
    truth: &JointState,
    previous_estimate: Option<&DVector<f64>>,
    accel: Option<&DVector<f64>>,
    rng: &mut ChaCha8Rng,
    dt: f64,
) -> JointState {
    let mut sensor = Sensor {
        noise: noise.copied(),
        rng: rng.clone(),
        velocity: previous_estimate.cloned(),
        dt,
    };
    let out = sensor.measure(truth, accel);
    *rng = sensor.rng;
    out
}

pub fn run(config: &ScenarioConfig) -> Result<SimLog> {
    config.validate()?;
    let controller = Controller::new(config.controller.clone())?;
    let plant = &config.plant;
    let steps = config.steps();
    let dt = config.dt;

    let mut log = SimLog {
        measured: config.noise.map(|_| (Vec::with_capacity(steps + 1), Vec::with_capacity(steps + 1))),
        wind: config.wind.map(|_| Vec::with_capacity(steps + 1)),
        ..SimLog::default()
    };
    let mut sensor = Sensor::new(config.noise, config.seed, dt);
    let mut state = JointState::new(config.q0.clone(), config.dq0.clone());
    let mut accel: Option<DVector<f64>> = None;

    let abort = |t: f64, s: &JointState, cause: Error| Error::RunAborted {
        t,
        q: s.q.iter().copied().collect(),
        dq: s.dq.iter().copied().collect(),
        cause: Box::new(cause),
    };

    for k in 0..=steps {
        let t = k as f64 * dt;
        let meas = sensor.measure(&state, accel.as_ref());
        let (u, _) = controller.control_wrench(&meas).map_err(|e| abort(t, &state, e))?;
        let f_ext = wind_generalized_force(plant, &state.q, config.wind.as_ref(), t);

        log.t.push(t);
        log.q.push(state.q.clone());
        log.dq.push(state.dq.clone());
        log.u.push(u.clone());
        if let Some((mq, mdq)) = log.measured.as_mut() {
            mq.push(meas.q.clone());
            mdq.push(meas.dq.clone());
        }
        if let (Some(w), Some(p)) = (log.wind.as_mut(), config.wind.as_ref()) {
            w.push(if p.is_active(t) { p.force } else { [0.0, 0.0] });
        }
        if k == steps {
            break;
        }

        let next = step(plant, &state, &u, &f_ext, dt).map_err(|e| abort(t, &state, e))?;
        if !next.is_finite() {
            return Err(abort(t + dt, &next, Error::OutsideWorkspace("non-finite state".into())));
        }
        plant
            .check_workspace(&next.q, config.workspace_margin)
            .map_err(|e| abort(t + dt, &next, e))?;
        accel = Some((&next.dq - &state.dq) / dt);
        state = next;
    }
    Ok(log)
}

/// Runs independent scenarios on up to `jobs` threads (0: one per core);
/// results keep input order.
pub fn run_batch(configs: &[ScenarioConfig], jobs: usize) -> Vec<Result<SimLog>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(|| configs.par_iter().map(run).collect())
}
