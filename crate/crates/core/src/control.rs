//! Partial feedback linearization of the actuated outputs `y = Bᵀq` with the
//! internal (load) coordinates `q_c` stabilized through the inertial
//! coupling of the first `n_c` output channels.
//!
//! With `B = [I 0]ᵀ` and `A = [0 I]` the output and internal dynamics read
//!
//! ```text
//! Λ_y ÿ + μ_y + ρ_y = u,            q̈_c + μ_c + ρ_c = λ_c u
//! ```
//!
//! and the commanded wrench is `u = G v + R` with `G` the leading columns of
//! `Λ_y`, `R = μ_y + ρ_y − K_dy ỹ̇ − K_py ỹ`, and `v` either the standard
//! internal-stabilizing signal `v_a` or the coupled signal `v̄_a`.
//!
//! The same code drives the five-joint model (3 outputs, 2 internal
//! coordinates) and the planar reduction (1 output, 1 internal coordinate).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsTerms, Model, Multibody, Wrench};
use crate::error::{Error, Result};
use crate::model::JointState;

/// Largest accepted condition number of `BᵀM⁻¹J_uᵀ`.
pub const MAX_OUTPUT_CONDITION: f64 = 1e8;
/// Smallest accepted `|det(λ_c G)|`.
pub const MIN_COUPLING_DET: f64 = 1e-10;

/// Output PD gains of the full model, `K_py` and `K_dy` diagonals.
pub const PAPER_KPY: [f64; 3] = [4230.0, 4230.0, 30.0];
pub const PAPER_KDY: [f64; 3] = [3950.0, 3950.0, 10.0];
/// Internal PD gains of the full model, `K_pc` and `K_dc` diagonals.
pub const PAPER_KPC: [f64; 2] = [2200.0, 2200.0];
pub const PAPER_KDC: [f64; 2] = [50.0, 50.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlMode {
    Standard,
    Coupled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gains {
    pub kpy: DMatrix<f64>,
    pub kdy: DMatrix<f64>,
    pub kpc: DMatrix<f64>,
    pub kdc: DMatrix<f64>,
}

impl Gains {
    /// Paper gains for the full model.
    pub fn full_default() -> Self {
        Self {
            kpy: DMatrix::from_diagonal(&DVector::from_row_slice(&PAPER_KPY)),
            kdy: DMatrix::from_diagonal(&DVector::from_row_slice(&PAPER_KDY)),
            kpc: DMatrix::from_diagonal(&DVector::from_row_slice(&PAPER_KPC)),
            kdc: DMatrix::from_diagonal(&DVector::from_row_slice(&PAPER_KDC)),
        }
    }

    /// Planar gains: q̂1 takes the q1 output channel, q̂2 the q4 internal one.
    pub fn planar_default() -> Self {
        let s = |v: f64| DMatrix::from_element(1, 1, v);
        Self {
            kpy: s(PAPER_KPY[0]),
            kdy: s(PAPER_KDY[0]),
            kpc: s(PAPER_KPC[0]),
            kdc: s(PAPER_KDC[0]),
        }
    }

    pub fn default_for(model: &Model) -> Self {
        match model {
            Model::Full(_) => Self::full_default(),
            Model::Planar(_) => Self::planar_default(),
        }
    }
}

fn check_spd(name: &str, k: &DMatrix<f64>, n: usize) -> Result<()> {
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::InvalidConfig(format!(
            "{name} must be {n}x{n}, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    let asym = (k - k.transpose()).amax();
    if !(asym <= 1e-12 * k.amax().max(1.0)) {
        return Err(Error::InvalidConfig(format!("{name} is not symmetric")));
    }
    let min = k.clone().symmetric_eigenvalues().min();
    if !(min > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "{name} is not positive definite (min eigenvalue {min})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub mode: ControlMode,
    pub gains: Gains,
    pub y_ref: DVector<f64>,
    pub dy_ref: DVector<f64>,
    pub qc_ref: DVector<f64>,
    pub dqc_ref: DVector<f64>,
    /// Model the controller believes in; may differ from the simulated plant.
    pub nominal: Model,
}

impl ControllerConfig {
    /// Paper gains for `nominal`, zero references.
    pub fn new(mode: ControlMode, nominal: Model) -> Self {
        let ny = nominal.n_inputs();
        let nc = nominal.dof() - ny;
        Self {
            mode,
            gains: Gains::default_for(&nominal),
            y_ref: DVector::zeros(ny),
            dy_ref: DVector::zeros(ny),
            qc_ref: DVector::zeros(nc),
            dqc_ref: DVector::zeros(nc),
            nominal,
        }
    }

    pub fn n_outputs(&self) -> usize {
        self.nominal.n_inputs()
    }

    pub fn n_internal(&self) -> usize {
        self.nominal.dof() - self.nominal.n_inputs()
    }

    pub fn validate(&self) -> Result<()> {
        let (ny, nc) = (self.n_outputs(), self.n_internal());
        if nc > ny {
            return Err(Error::InvalidConfig(
                "more internal coordinates than actuated outputs".into(),
            ));
        }
        check_spd("kpy", &self.gains.kpy, ny)?;
        check_spd("kdy", &self.gains.kdy, ny)?;
        check_spd("kpc", &self.gains.kpc, nc)?;
        check_spd("kdc", &self.gains.kdc, nc)?;
        for (name, v, n) in [
            ("y_ref", &self.y_ref, ny),
            ("dy_ref", &self.dy_ref, ny),
            ("qc_ref", &self.qc_ref, nc),
            ("dqc_ref", &self.dqc_ref, nc),
        ] {
            if v.len() != n || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must hold {n} finite values")));
            }
        }
        Ok(())
    }

    /// `(ỹ, ỹ̇, q̃_c, q̃̇_c)`, measured minus reference.
    pub fn errors(&self, state: &JointState) -> (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
        let (ny, nc) = (self.n_outputs(), self.n_internal());
        (
            state.q.rows(0, ny) - &self.y_ref,
            state.dq.rows(0, ny) - &self.dy_ref,
            state.q.rows(ny, nc) - &self.qc_ref,
            state.dq.rows(ny, nc) - &self.dqc_ref,
        )
    }
}

/// Every intermediate quantity of one controller evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBreakdown {
    pub lambda_y: DMatrix<f64>,
    pub mu_y: DVector<f64>,
    pub rho_y: DVector<f64>,
    pub mu_c: DVector<f64>,
    pub rho_c: DVector<f64>,
    pub lambda_c: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub r: DVector<f64>,
    pub v_a: DVector<f64>,
    /// Coupled signal; `None` in standard mode.
    pub v_a_bar: Option<DVector<f64>>,
    /// Internal closed-loop coupling term; zero in standard mode.
    pub n_c: DVector<f64>,
    /// Output closed-loop term `G v` for the signal actually applied.
    pub n_y: DVector<f64>,
    pub u: Wrench,
    /// Condition number of `BᵀM⁻¹J_uᵀ`.
    pub output_condition: f64,
}

/// `M⁻¹ [J_uᵀ | C q̇ | g]`, split into its three blocks.
fn solved_blocks(terms: &DynamicsTerms, dq: &DVector<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    let n = terms.mass.nrows();
    let m = terms.input_jacobian.nrows();
    let mut rhs = DMatrix::zeros(n, m + 2);
    rhs.columns_mut(0, m).copy_from(&terms.input_jacobian.transpose());
    rhs.set_column(m, &(&terms.coriolis * dq));
    rhs.set_column(m + 1, &terms.gravity);
    let sol = terms.solve_mass(&rhs)?;
    Ok((
        sol.columns(0, m).into_owned(),
        sol.column(m).into_owned(),
        sol.column(m + 1).into_owned(),
    ))
}

/// `(Λ_y, μ_y, ρ_y, cond)` with `Λ_y = (BᵀM⁻¹J_uᵀ)⁻¹`, `μ_y = Λ_y BᵀM⁻¹Cq̇`,
/// `ρ_y = Λ_y BᵀM⁻¹g`.
pub fn output_terms(
    terms: &DynamicsTerms,
    state: &JointState,
) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>, f64)> {
    let ny = terms.input_jacobian.nrows();
    let (minv_ju, minv_cdq, minv_g) = solved_blocks(terms, &state.dq)?;
    let map = minv_ju.rows(0, ny).into_owned();
    let sv = map.clone().singular_values();
    let condition = sv.max() / sv.min();
    if !(condition <= MAX_OUTPUT_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let lambda_y = map.try_inverse().ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
    let mu_y = &lambda_y * minv_cdq.rows(0, ny);
    let rho_y = &lambda_y * minv_g.rows(0, ny);
    Ok((lambda_y, mu_y, rho_y, condition))
}

/// `(μ_c, ρ_c, λ_c)` with `A = [0 I]`: `A M⁻¹Cq̇`, `A M⁻¹g`, `A M⁻¹J_uᵀ`.
pub fn internal_terms(
    terms: &DynamicsTerms,
    state: &JointState,
) -> Result<(DVector<f64>, DVector<f64>, DMatrix<f64>)> {
    let ny = terms.input_jacobian.nrows();
    let nc = terms.mass.nrows() - ny;
    let (minv_ju, minv_cdq, minv_g) = solved_blocks(terms, &state.dq)?;
    Ok((
        minv_cdq.rows(ny, nc).into_owned(),
        minv_g.rows(ny, nc).into_owned(),
        minv_ju.rows(ny, nc).into_owned(),
    ))
}

/// `G` = first `n_c` columns of `Λ_y`; `R = μ_y + ρ_y − K_dy ỹ̇ − K_py ỹ`.
pub fn g_and_r(
    lambda_y: &DMatrix<f64>,
    mu_y: &DVector<f64>,
    rho_y: &DVector<f64>,
    cfg: &ControllerConfig,
    y_err: &DVector<f64>,
    dy_err: &DVector<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let g = lambda_y.columns(0, cfg.n_internal()).into_owned();
    let r = mu_y + rho_y - &cfg.gains.kdy * dy_err - &cfg.gains.kpy * y_err;
    (g, r)
}

fn coupling_inverse(lambda_c: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let lg = lambda_c * g;
    let det = lg.determinant();
    if !(det.abs() >= MIN_COUPLING_DET) {
        return Err(Error::CouplingSingular { det });
    }
    lg.try_inverse().ok_or(Error::CouplingSingular { det })
}

/// `v_a = (λ_c G)⁻¹ (μ_c + ρ_c − λ_c R − K_dc q̃̇_c − K_pc q̃_c)`.
#[allow(clippy::too_many_arguments)]
pub fn v_a_standard(
    mu_c: &DVector<f64>,
    rho_c: &DVector<f64>,
    lambda_c: &DMatrix<f64>,
    g: &DMatrix<f64>,
    r: &DVector<f64>,
    cfg: &ControllerConfig,
    qc_err: &DVector<f64>,
    dqc_err: &DVector<f64>,
) -> Result<DVector<f64>> {
    let inv = coupling_inverse(lambda_c, g)?;
    let rhs = mu_c + rho_c - lambda_c * r - &cfg.gains.kdc * dqc_err - &cfg.gains.kpc * qc_err;
    Ok(inv * rhs)
}

/// Internal coupling term `N_c = λ_c (−K_dy ỹ̇ − K_py ỹ)`.
pub fn internal_coupling(
    lambda_c: &DMatrix<f64>,
    cfg: &ControllerConfig,
    y_err: &DVector<f64>,
    dy_err: &DVector<f64>,
) -> DVector<f64> {
    lambda_c * (-(&cfg.gains.kdy * dy_err) - &cfg.gains.kpy * y_err)
}

/// `v̄_a = v_a + (λ_c G)⁻¹ λ_c (−K_dy ỹ̇ − K_py ỹ)`.
pub fn v_a_coupled(
    v_a: &DVector<f64>,
    lambda_c: &DMatrix<f64>,
    g: &DMatrix<f64>,
    cfg: &ControllerConfig,
    y_err: &DVector<f64>,
    dy_err: &DVector<f64>,
) -> Result<DVector<f64>> {
    let inv = coupling_inverse(lambda_c, g)?;
    Ok(v_a + inv * internal_coupling(lambda_c, cfg, y_err, dy_err))
}

/// Stateless controller evaluated on its own nominal model.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    cfg: ControllerConfig,
}

impl Controller {
    pub fn new(cfg: ControllerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    /// Dynamics terms on the controller's nominal model.
    pub fn nominal_terms(&self, state: &JointState) -> Result<DynamicsTerms> {
        self.cfg.nominal.terms(state)
    }

    pub fn control_wrench(&self, state: &JointState) -> Result<(Wrench, ControlBreakdown)> {
        let terms = self.nominal_terms(state)?;
        self.control_from_terms(&terms, state)
    }

    pub fn control_from_terms(&self, terms: &DynamicsTerms, state: &JointState) -> Result<(Wrench, ControlBreakdown)> {
        let cfg = &self.cfg;
        let (y_err, dy_err, qc_err, dqc_err) = cfg.errors(state);
        let (lambda_y, mu_y, rho_y, output_condition) = output_terms(terms, state)?;
        let (mu_c, rho_c, lambda_c) = internal_terms(terms, state)?;
        let (g, r) = g_and_r(&lambda_y, &mu_y, &rho_y, cfg, &y_err, &dy_err);
        let v_a = v_a_standard(&mu_c, &rho_c, &lambda_c, &g, &r, cfg, &qc_err, &dqc_err)?;

        let (applied, v_a_bar, n_c) = match cfg.mode {
            ControlMode::Standard => (v_a.clone(), None, DVector::zeros(cfg.n_internal())),
            ControlMode::Coupled => {
                let bar = v_a_coupled(&v_a, &lambda_c, &g, cfg, &y_err, &dy_err)?;
                let n_c = internal_coupling(&lambda_c, cfg, &y_err, &dy_err);
                (bar.clone(), Some(bar), n_c)
            }
        };
        // v_y = (v, 0): only the leading n_c output channels receive a signal
        let n_y = &g * &applied;
        let u = &n_y + &r;
        let breakdown = ControlBreakdown {
            lambda_y,
            mu_y,
            rho_y,
            mu_c,
            rho_c,
            lambda_c,
            g,
            r,
            v_a,
            v_a_bar,
            n_c,
            n_y,
            u: u.clone(),
            output_condition,
        };
        Ok((u, breakdown))
    }
}

/// One-shot form of [`Controller::control_wrench`].
pub fn control_wrench(cfg: &ControllerConfig, state: &JointState) -> Result<(Wrench, ControlBreakdown)> {
    Controller::new(cfg.clone())?.control_wrench(state)
}

/// Planar form: scalar output q̂1, scalar internal coordinate q̂2.
pub fn planar_control_wrench(cfg: &ControllerConfig, state: &JointState) -> Result<(f64, ControlBreakdown)> {
    if !matches!(cfg.nominal, Model::Planar(_)) {
        return Err(Error::InvalidConfig("planar controller needs a planar nominal model".into()));
    }
    let (u, b) = control_wrench(cfg, state)?;
    Ok((u[0], b))
}
