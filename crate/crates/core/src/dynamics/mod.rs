//! Manipulator-form dynamics `M(q) q̈ + C(q, q̇) q̇ + g(q) = J_u(q)ᵀ u + f_ext`
//! for the full chain and its planar reduction.

mod full;
pub mod oracle;
mod planar;

pub use full::FullModel;
pub use planar::PlanarModel;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{JointState, ModelParams, PlanarParams};

/// Smallest admissible eigenvalue of the inertia matrix.
pub const INERTIA_EIGEN_FLOOR: f64 = 1e-10;

/// Input vector: `(F_x, F_y, τ_z)` for the full model, a single horizontal
/// platform force for the planar model.
pub type Wrench = DVector<f64>;

/// Dynamics evaluated at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTerms {
    pub mass: DMatrix<f64>,
    pub coriolis: DMatrix<f64>,
    pub gravity: DVector<f64>,
    pub input_jacobian: DMatrix<f64>,
}

impl DynamicsTerms {
    /// `M⁻¹ x` through the Cholesky factor of `M`.
    pub fn solve_mass(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let chol = self
            .mass
            .clone()
            .cholesky()
            .ok_or(Error::SingularConfiguration { min_eigenvalue: f64::NAN })?;
        Ok(chol.solve(rhs))
    }

    /// `q̈ = M⁻¹ (J_uᵀ u + f_ext − C q̇ − g)`.
    pub fn acceleration(&self, dq: &DVector<f64>, u: &Wrench, f_ext: &DVector<f64>) -> Result<DVector<f64>> {
        let rhs = self.input_jacobian.transpose() * u + f_ext - &self.coriolis * dq - &self.gravity;
        let sol = self.solve_mass(&DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice()))?;
        Ok(sol.column(0).into_owned())
    }
}

/// A serial chain with revolute joints whose dynamics can be evaluated.
pub trait Multibody {
    fn dof(&self) -> usize;

    fn n_inputs(&self) -> usize;

    /// Inertia matrix without the conditioning guard.
    fn raw_mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64>;

    /// `∂M/∂q_k` for every coordinate `k`.
    fn mass_matrix_partials(&self, q: &DVector<f64>) -> Vec<DMatrix<f64>>;

    /// `g = ∂V/∂q`.
    fn gravity_vector(&self, q: &DVector<f64>) -> DVector<f64>;

    /// Maps `q̇` to the velocities the inputs act along.
    fn input_jacobian(&self, q: &DVector<f64>) -> DMatrix<f64>;

    /// World-horizontal `(x, y)` translational Jacobians of every point the
    /// wind acts on (platform and load).
    fn wind_jacobians(&self, q: &DVector<f64>) -> Vec<DMatrix<f64>>;

    /// Kinetic and potential energy computed directly from link kinematics.
    fn lagrangian_oracle(&self, q: &DVector<f64>, dq: &DVector<f64>) -> (f64, f64);

    fn check_workspace(&self, q: &DVector<f64>, margin: f64) -> Result<()>;

    fn mass_matrix(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let m = self.raw_mass_matrix(q);
        let min_eigenvalue = m.clone().symmetric_eigenvalues().min();
        if !(min_eigenvalue >= INERTIA_EIGEN_FLOOR) {
            return Err(Error::SingularConfiguration { min_eigenvalue });
        }
        Ok(m)
    }

    /// Coriolis/centrifugal matrix from the Christoffel symbols of `M`:
    /// `C_ij = Σ_k ½ (∂_k M_ij + ∂_j M_ik − ∂_i M_jk) q̇_k`.
    fn coriolis_matrix(&self, q: &DVector<f64>, dq: &DVector<f64>) -> DMatrix<f64> {
        christoffel_coriolis(&self.mass_matrix_partials(q), dq)
    }

    fn terms(&self, state: &JointState) -> Result<DynamicsTerms> {
        Ok(DynamicsTerms {
            mass: self.mass_matrix(&state.q)?,
            coriolis: self.coriolis_matrix(&state.q, &state.dq),
            gravity: self.gravity_vector(&state.q),
            input_jacobian: self.input_jacobian(&state.q),
        })
    }

    fn forward_dynamics(&self, state: &JointState, u: &Wrench, f_ext: &DVector<f64>) -> Result<DVector<f64>> {
        self.terms(state)?.acceleration(&state.dq, u, f_ext)
    }

    /// Total mechanical energy from the oracle.
    fn energy(&self, state: &JointState) -> f64 {
        let (t, v) = self.lagrangian_oracle(&state.q, &state.dq);
        t + v
    }
}

pub(crate) fn christoffel_coriolis(partials: &[DMatrix<f64>], dq: &DVector<f64>) -> DMatrix<f64> {
    let n = dq.len();
    DMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| 0.5 * (partials[k][(i, j)] + partials[j][(i, k)] - partials[i][(j, k)]) * dq[k])
            .sum()
    })
}

/// Either of the two simulated models.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Full(FullModel),
    Planar(PlanarModel),
}

impl Model {
    pub fn full(params: ModelParams) -> Result<Self> {
        Ok(Model::Full(FullModel::new(params)?))
    }

    pub fn planar(params: PlanarParams) -> Result<Self> {
        Ok(Model::Planar(PlanarModel::new(params)?))
    }

    fn inner(&self) -> &dyn Multibody {
        match self {
            Model::Full(m) => m,
            Model::Planar(m) => m,
        }
    }
}

impl Multibody for Model {
    fn dof(&self) -> usize {
        self.inner().dof()
    }
    fn n_inputs(&self) -> usize {
        self.inner().n_inputs()
    }
    fn raw_mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        self.inner().raw_mass_matrix(q)
    }
    fn mass_matrix_partials(&self, q: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.inner().mass_matrix_partials(q)
    }
    fn gravity_vector(&self, q: &DVector<f64>) -> DVector<f64> {
        self.inner().gravity_vector(q)
    }
    fn input_jacobian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        self.inner().input_jacobian(q)
    }
    fn wind_jacobians(&self, q: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.inner().wind_jacobians(q)
    }
    fn lagrangian_oracle(&self, q: &DVector<f64>, dq: &DVector<f64>) -> (f64, f64) {
        self.inner().lagrangian_oracle(q, dq)
    }
    fn check_workspace(&self, q: &DVector<f64>, margin: f64) -> Result<()> {
        self.inner().check_workspace(q, margin)
    }
}

/// Free-function forms of the trait methods.
pub fn mass_matrix<M: Multibody + ?Sized>(model: &M, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    model.mass_matrix(q)
}

pub fn coriolis_matrix<M: Multibody + ?Sized>(model: &M, q: &DVector<f64>, dq: &DVector<f64>) -> DMatrix<f64> {
    model.coriolis_matrix(q, dq)
}

pub fn gravity_vector<M: Multibody + ?Sized>(model: &M, q: &DVector<f64>) -> DVector<f64> {
    model.gravity_vector(q)
}

pub fn input_jacobian<M: Multibody + ?Sized>(model: &M, q: &DVector<f64>) -> DMatrix<f64> {
    model.input_jacobian(q)
}

pub fn forward_dynamics<M: Multibody + ?Sized>(
    model: &M,
    state: &JointState,
    u: &Wrench,
    f_ext: &DVector<f64>,
) -> Result<DVector<f64>> {
    model.forward_dynamics(state, u, f_ext)
}

pub fn lagrangian_oracle<M: Multibody + ?Sized>(model: &M, q: &DVector<f64>, dq: &DVector<f64>) -> (f64, f64) {
    model.lagrangian_oracle(q, dq)
}
