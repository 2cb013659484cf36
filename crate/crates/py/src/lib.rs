//! Python bindings. Vectors and matrices cross the boundary as lists of
//! floats (matrices row-major as lists of rows).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use pfl_core::analysis::{self, LimitCycleVerdict};
use pfl_core::config;
use pfl_core::control::{self, ControlMode, ControllerConfig};
use pfl_core::csvlog;
use pfl_core::dynamics::{self as dyn_, Multibody};
use pfl_core::sim::{self, DisturbanceProfile, NoiseConfig as CoreNoise, ScenarioConfig};
use pfl_core::{JointState, ModelParams};

create_exception!(pfl, PflError, PyException, "Error raised by the simulation core.");
create_exception!(pfl, RunAborted, PflError, "A simulation stopped early; see `t`, `q` and `dq` in args.");

fn err(e: pfl_core::Error) -> PyErr {
    match e {
        pfl_core::Error::RunAborted { t, q, dq, cause } => {
            RunAborted::new_err((format!("run aborted at t = {t} s: {cause}"), t, q, dq))
        }
        e => PflError::new_err(e.to_string()),
    }
}

fn vector(v: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(v)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn parse_mode(mode: &str) -> PyResult<ControlMode> {
    match mode {
        "standard" => Ok(ControlMode::Standard),
        "coupled" => Ok(ControlMode::Coupled),
        other => Err(PyValueError::new_err(format!("mode must be 'standard' or 'coupled', got {other:?}"))),
    }
}

/// Physical parameters of the platform, cables and load.
#[pyclass(name = "ModelParams", from_py_object)]
#[derive(Clone)]
pub struct PyModelParams {
    inner: ModelParams,
}

#[pymethods]
impl PyModelParams {
    /// Nominal parameters, with keyword overrides.
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<BTreeMap<String, f64>>) -> PyResult<Self> {
        let mut p = Self { inner: pfl_core::default_params() };
        for (k, v) in overrides.unwrap_or_default() {
            p.set(&k, v)?;
        }
        Ok(p)
    }

    /// The heavier plant used for model-mismatch studies.
    #[staticmethod]
    fn uncertain() -> Self {
        Self { inner: pfl_core::uncertain_params() }
    }

    fn get(&self, name: &str) -> PyResult<f64> {
        let p = &self.inner;
        Ok(match name {
            "m_p" => p.m_p,
            "m_l" => p.m_l,
            "i_xx" => p.i_xx,
            "i_yy" => p.i_yy,
            "i_zz" => p.i_zz,
            "l1" => p.l1,
            "l2" => p.l2,
            "m_c1" => p.m_c1,
            "m_c2" => p.m_c2,
            "g0" => p.g0,
            _ => return Err(PyValueError::new_err(format!("unknown parameter {name:?}"))),
        })
    }

    fn set(&mut self, name: &str, value: f64) -> PyResult<()> {
        let p = &mut self.inner;
        let slot = match name {
            "m_p" => &mut p.m_p,
            "m_l" => &mut p.m_l,
            "i_xx" => &mut p.i_xx,
            "i_yy" => &mut p.i_yy,
            "i_zz" => &mut p.i_zz,
            "l1" => &mut p.l1,
            "l2" => &mut p.l2,
            "m_c1" => &mut p.m_c1,
            "m_c2" => &mut p.m_c2,
            "g0" => &mut p.g0,
            _ => return Err(PyValueError::new_err(format!("unknown parameter {name:?}"))),
        };
        *slot = value;
        Ok(())
    }

    fn to_dict(&self) -> BTreeMap<&'static str, f64> {
        let p = &self.inner;
        BTreeMap::from([
            ("m_p", p.m_p),
            ("m_l", p.m_l),
            ("i_xx", p.i_xx),
            ("i_yy", p.i_yy),
            ("i_zz", p.i_zz),
            ("l1", p.l1),
            ("l2", p.l2),
            ("m_c1", p.m_c1),
            ("m_c2", p.m_c2),
            ("g0", p.g0),
        ])
    }

    fn __repr__(&self) -> String {
        format!("ModelParams({:?})", self.inner)
    }
}

/// The five-joint chain (`Model.full`) or its planar reduction
/// (`Model.planar`).
#[pyclass(name = "Model", from_py_object)]
#[derive(Clone)]
pub struct PyModel {
    inner: pfl_core::Model,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (params=None))]
    fn full(params: Option<PyRef<'_, PyModelParams>>) -> PyResult<Self> {
        let p = params.map_or_else(pfl_core::default_params, |p| p.inner);
        Ok(Self { inner: pfl_core::Model::full(p).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (params=None))]
    fn planar(params: Option<PyRef<'_, PyModelParams>>) -> PyResult<Self> {
        let p = params.map_or_else(pfl_core::default_params, |p| p.inner);
        let reduced = pfl_core::planar_reduction(&p).map_err(err)?;
        Ok(Self { inner: pfl_core::Model::planar(reduced).map_err(err)? })
    }

    #[getter]
    fn dof(&self) -> usize {
        self.inner.dof()
    }

    #[getter]
    fn n_inputs(&self) -> usize {
        self.inner.n_inputs()
    }

    fn mass_matrix(&self, q: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        self.check(&q)?;
        Ok(rows(&dyn_::mass_matrix(&self.inner, &vector(q)).map_err(err)?))
    }

    fn coriolis_matrix(&self, q: Vec<f64>, dq: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        self.check(&q)?;
        self.check(&dq)?;
        Ok(rows(&dyn_::coriolis_matrix(&self.inner, &vector(q), &vector(dq))))
    }

    fn gravity(&self, q: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&q)?;
        Ok(dyn_::gravity_vector(&self.inner, &vector(q)).iter().copied().collect())
    }

    fn input_jacobian(&self, q: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        self.check(&q)?;
        Ok(rows(&dyn_::input_jacobian(&self.inner, &vector(q))))
    }

    /// `(T, V)` from the independent energy computation.
    fn energy(&self, q: Vec<f64>, dq: Vec<f64>) -> PyResult<(f64, f64)> {
        self.check(&q)?;
        self.check(&dq)?;
        Ok(dyn_::lagrangian_oracle(&self.inner, &vector(q), &vector(dq)))
    }

    #[pyo3(signature = (q, dq, u, f_ext=None))]
    fn forward_dynamics(&self, q: Vec<f64>, dq: Vec<f64>, u: Vec<f64>, f_ext: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.check(&q)?;
        self.check(&dq)?;
        if u.len() != self.inner.n_inputs() {
            return Err(PyValueError::new_err(format!("u must have {} entries", self.inner.n_inputs())));
        }
        let f = f_ext.unwrap_or_else(|| vec![0.0; self.inner.dof()]);
        self.check(&f)?;
        let s = JointState::new(vector(q), vector(dq));
        let a = self.inner.forward_dynamics(&s, &vector(u), &vector(f)).map_err(err)?;
        Ok(a.iter().copied().collect())
    }

    fn __repr__(&self) -> String {
        match &self.inner {
            pfl_core::Model::Full(_) => "Model.full(...)".into(),
            pfl_core::Model::Planar(_) => "Model.planar(...)".into(),
        }
    }
}

impl PyModel {
    fn check(&self, v: &[f64]) -> PyResult<()> {
        let n = self.inner.dof();
        if v.len() != n {
            return Err(PyValueError::new_err(format!("expected {n} entries, got {}", v.len())));
        }
        Ok(())
    }
}

/// PFL controller acting on its nominal model, with the default gains.
#[pyclass(name = "Controller", from_py_object)]
#[derive(Clone)]
pub struct PyController {
    inner: ControllerConfig,
}

#[pymethods]
impl PyController {
    #[new]
    #[pyo3(signature = (model, mode="coupled"))]
    fn new(model: PyRef<'_, PyModel>, mode: &str) -> PyResult<Self> {
        Ok(Self { inner: ControllerConfig::new(parse_mode(mode)?, model.inner.clone()) })
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.inner.mode {
            ControlMode::Standard => "standard",
            ControlMode::Coupled => "coupled",
        }
    }

    /// Wrench `u` and the intermediate terms as a dict.
    fn control_wrench(&self, q: Vec<f64>, dq: Vec<f64>) -> PyResult<(Vec<f64>, BTreeMap<&'static str, Vec<f64>>)> {
        let n = self.inner.nominal.dof();
        if q.len() != n || dq.len() != n {
            return Err(PyValueError::new_err(format!("q and dq must have {n} entries")));
        }
        let s = JointState::new(vector(q), vector(dq));
        let (u, b) = control::control_wrench(&self.inner, &s).map_err(err)?;
        let v = |x: &DVector<f64>| x.iter().copied().collect::<Vec<_>>();
        let mut terms = BTreeMap::from([
            ("mu_y", v(&b.mu_y)),
            ("rho_y", v(&b.rho_y)),
            ("mu_c", v(&b.mu_c)),
            ("rho_c", v(&b.rho_c)),
            ("r", v(&b.r)),
            ("v_a", v(&b.v_a)),
            ("n_c", v(&b.n_c)),
            ("n_y", v(&b.n_y)),
        ]);
        if let Some(bar) = &b.v_a_bar {
            terms.insert("v_a_bar", v(bar));
        }
        Ok((v(&u), terms))
    }

    /// Eigenvalues `(re, im, class)` of the closed loop linearized at rest.
    fn eigenvalues(&self) -> PyResult<Vec<(f64, f64, String)>> {
        let n = self.inner.nominal.dof();
        let r = analysis::linearize(&self.inner, &JointState::zeros(n)).map_err(err)?;
        Ok(r.eigenvalues.iter().zip(&r.classes).map(|(l, c)| (l.re, l.im, c.to_string())).collect())
    }
}

/// Trajectory of one run.
#[pyclass(name = "SimLog")]
pub struct PySimLog {
    inner: sim::SimLog,
}

#[pymethods]
impl PySimLog {
    #[getter]
    fn t(&self) -> Vec<f64> {
        self.inner.t.clone()
    }

    #[getter]
    fn q(&self) -> Vec<Vec<f64>> {
        self.inner.q.iter().map(|v| v.iter().copied().collect()).collect()
    }

    #[getter]
    fn dq(&self) -> Vec<Vec<f64>> {
        self.inner.dq.iter().map(|v| v.iter().copied().collect()).collect()
    }

    #[getter]
    fn u(&self) -> Vec<Vec<f64>> {
        self.inner.u.iter().map(|v| v.iter().copied().collect()).collect()
    }

    fn joint(&self, i: usize) -> PyResult<Vec<f64>> {
        match self.inner.q.first() {
            Some(q) if i < q.len() => Ok(self.inner.joint(i)),
            _ => Err(PyValueError::new_err("joint index out of range")),
        }
    }

    fn channel(&self, i: usize) -> PyResult<Vec<f64>> {
        match self.inner.u.first() {
            Some(u) if i < u.len() => Ok(self.inner.channel(i)),
            _ => Err(PyValueError::new_err("channel index out of range")),
        }
    }

    fn max_wrench_norm(&self) -> f64 {
        self.inner.max_wrench_norm()
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        csvlog::write_log_file(&self.inner, path).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// A complete simulation setup.
#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
pub struct PyScenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    /// Matched plant and controller from `q0`, no wind, no noise.
    #[new]
    #[pyo3(signature = (controller, q0, duration, dt=0.001, seed=0))]
    fn new(controller: PyRef<'_, PyController>, q0: Vec<f64>, duration: f64, dt: f64, seed: u64) -> PyResult<Self> {
        let mut c = ScenarioConfig::nominal(controller.inner.clone(), &q0, duration);
        c.dt = dt;
        c.seed = seed;
        c.validate().map_err(err)?;
        Ok(Self { inner: c })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Ok(Self { inner: config::parse_scenario(path).map_err(err)? })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { inner: config::parse_scenario_str(text).map_err(err)? })
    }

    /// Replaces the simulated plant; the controller keeps its own model.
    fn set_plant(&mut self, model: PyRef<'_, PyModel>) -> PyResult<()> {
        let mut c = self.inner.clone();
        c.plant = model.inner.clone();
        c.validate().map_err(err)?;
        self.inner = c;
        Ok(())
    }

    #[pyo3(signature = (t_on, t_off, fx, fy))]
    fn set_wind(&mut self, t_on: f64, t_off: f64, fx: f64, fy: f64) -> PyResult<()> {
        let mut c = self.inner.clone();
        c.wind = Some(DisturbanceProfile { t_on, t_off, force: [fx, fy] });
        c.validate().map_err(err)?;
        self.inner = c;
        Ok(())
    }

    #[pyo3(signature = (accel_std=1.0, relative_strength=0.1, velocity_estimation=true, leak=0.999))]
    fn set_noise(&mut self, accel_std: f64, relative_strength: f64, velocity_estimation: bool, leak: f64) -> PyResult<()> {
        let mut c = self.inner.clone();
        c.noise = Some(CoreNoise { accel_std, relative_strength, velocity_estimation, leak });
        c.validate().map_err(err)?;
        self.inner = c;
        Ok(())
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn q0(&self) -> Vec<f64> {
        self.inner.q0.iter().copied().collect()
    }

    /// Runs the scenario; the GIL is released while integrating.
    fn run(&self, py: Python<'_>) -> PyResult<PySimLog> {
        let cfg = self.inner.clone();
        let log = py.detach(move || sim::run(&cfg)).map_err(err)?;
        Ok(PySimLog { inner: log })
    }
}

/// Response time, peak and SNR for named series on a shared time base.
#[pyfunction]
#[pyo3(signature = (t, joints, channels=None))]
fn kpi(
    t: Vec<f64>,
    joints: BTreeMap<String, Vec<f64>>,
    channels: Option<BTreeMap<String, Vec<f64>>>,
) -> PyResult<BTreeMap<String, BTreeMap<&'static str, Option<f64>>>> {
    let n = t.len();
    let all = joints.values().chain(channels.iter().flat_map(|c| c.values()));
    if all.into_iter().any(|v| v.len() != n) {
        return Err(PyValueError::new_err("every series must match the length of t"));
    }
    let j: Vec<_> = joints.into_iter().collect();
    let c: Vec<_> = channels.unwrap_or_default().into_iter().collect();
    let r = analysis::kpi_report(&t, &j, &c);
    let mut out = BTreeMap::new();
    for k in r.joints {
        out.insert(k.name, BTreeMap::from([("response_time", k.response_time), ("peak", Some(k.peak_response))]));
    }
    for k in r.channels {
        out.insert(k.name, BTreeMap::from([("snr_db", Some(k.snr_db))]));
    }
    Ok(out)
}

/// `("limit_cycle", amplitude, period)`, `("converged", None, None)` or
/// `("inconclusive", None, None)`.
#[pyfunction]
#[pyo3(signature = (t, x, settle_window, min_cycles=3))]
fn detect_limit_cycle(t: Vec<f64>, x: Vec<f64>, settle_window: f64, min_cycles: usize) -> PyResult<(String, Option<f64>, Option<f64>)> {
    if t.len() != x.len() {
        return Err(PyValueError::new_err("t and x differ in length"));
    }
    Ok(match analysis::detect_limit_cycle(&t, &x, settle_window, min_cycles) {
        LimitCycleVerdict::LimitCycle { amplitude, period } => ("limit_cycle".into(), Some(amplitude), Some(period)),
        LimitCycleVerdict::Converged => ("converged".into(), None, None),
        LimitCycleVerdict::Inconclusive => ("inconclusive".into(), None, None),
    })
}

#[pyfunction]
#[pyo3(signature = (x, dt, window=analysis::DEFAULT_SNR_WINDOW))]
fn snr(x: Vec<f64>, dt: f64, window: f64) -> PyResult<f64> {
    if !(dt > 0.0) {
        return Err(PyValueError::new_err("dt must be > 0"));
    }
    Ok(analysis::snr(&x, dt, window))
}

#[pymodule]
fn pfl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyController>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PySimLog>()?;
    m.add_function(wrap_pyfunction!(kpi, m)?)?;
    m.add_function(wrap_pyfunction!(detect_limit_cycle, m)?)?;
    m.add_function(wrap_pyfunction!(snr, m)?)?;
    m.add("PflError", m.py().get_type::<PflError>())?;
    m.add("RunAborted", m.py().get_type::<RunAborted>())?;
    Ok(())
}
