use nalgebra::{DMatrix, DVector};

use super::{oracle, Multibody};
use crate::error::{Error, Result};
use crate::model::PlanarParams;

/// Planar double pendulum in relative coordinates: q̂1 is the upper link
/// angle from the downward vertical, q̂2 the lower link angle relative to
/// the upper one. The single input is a horizontal force at the tip of
/// link 1, the planar counterpart of the platform force.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarModel {
    params: PlanarParams,
    /// Link-1 inertia about joint 1 including link-2 mass carried at its tip.
    a: f64,
    /// Link-2 inertia about joint 2.
    b: f64,
    /// Inertial coupling coefficient.
    c: f64,
    /// First moments entering the potential.
    k1: f64,
    k2: f64,
}

impl PlanarModel {
    pub fn new(params: PlanarParams) -> Result<Self> {
        params.validate()?;
        let (l1, l2) = (params.link1.length, params.link2.length);
        let (mr1, mt1, it1) = (params.link1.rod_mass, params.link1.tip_mass, params.link1.tip_inertia);
        let (mr2, mt2) = (params.link2.rod_mass, params.link2.tip_mass);
        let m2 = mr2 + mt2;
        let a = mr1 * l1 * l1 / 3.0 + mt1 * l1 * l1 + it1 + m2 * l1 * l1;
        let b = mr2 * l2 * l2 / 3.0 + mt2 * l2 * l2 + params.link2.tip_inertia;
        let k2 = mr2 * l2 / 2.0 + mt2 * l2;
        let c = k2 * l1;
        let k1 = mr1 * l1 / 2.0 + (mt1 + m2) * l1;
        Ok(Self { params, a, b, c, k1, k2 })
    }

    pub fn params(&self) -> &PlanarParams {
        &self.params
    }
}

fn check_len(q: &DVector<f64>) {
    assert_eq!(q.len(), 2, "planar model expects 2 coordinates");
}

impl Multibody for PlanarModel {
    fn dof(&self) -> usize {
        2
    }

    fn n_inputs(&self) -> usize {
        1
    }

    fn raw_mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        check_len(q);
        let cc = self.c * q[1].cos();
        DMatrix::from_row_slice(2, 2, &[self.a + self.b + 2.0 * cc, self.b + cc, self.b + cc, self.b])
    }

    fn mass_matrix_partials(&self, q: &DVector<f64>) -> Vec<DMatrix<f64>> {
        check_len(q);
        let cs = self.c * q[1].sin();
        vec![
            DMatrix::zeros(2, 2),
            DMatrix::from_row_slice(2, 2, &[-2.0 * cs, -cs, -cs, 0.0]),
        ]
    }

    fn gravity_vector(&self, q: &DVector<f64>) -> DVector<f64> {
        check_len(q);
        let g0 = self.params.g0;
        let s12 = (q[0] + q[1]).sin();
        DVector::from_vec(vec![g0 * (self.k1 * q[0].sin() + self.k2 * s12), g0 * self.k2 * s12])
    }

    fn input_jacobian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        check_len(q);
        DMatrix::from_row_slice(1, 2, &[self.params.link1.length * q[0].cos(), 0.0])
    }

    fn wind_jacobians(&self, q: &DVector<f64>) -> Vec<DMatrix<f64>> {
        check_len(q);
        // the plane is world x–z; world y rows are zero
        let (l1, l2) = (self.params.link1.length, self.params.link2.length);
        let c1 = l1 * q[0].cos();
        let c12 = l2 * (q[0] + q[1]).cos();
        vec![
            DMatrix::from_row_slice(2, 2, &[c1, 0.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[c1 + c12, c12, 0.0, 0.0]),
        ]
    }

    fn lagrangian_oracle(&self, q: &DVector<f64>, dq: &DVector<f64>) -> (f64, f64) {
        oracle::planar_energy(&self.params, q, dq)
    }

    fn check_workspace(&self, q: &DVector<f64>, _margin: f64) -> Result<()> {
        if q.len() != 2 {
            return Err(Error::OutsideWorkspace(format!("expected 2 coordinates, got {}", q.len())));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutsideWorkspace("non-finite coordinate".into()));
        }
        Ok(())
    }
}
