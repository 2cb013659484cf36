//! Physical parameterization of the suspended platform–load chain and its
//! planar double-pendulum reduction.
//!
//! Chain: fixed anchor → q1 about world y → q2 about the rotated x → upper
//! cable (uniform rod, length `l1`) → platform (roll/pitch follow the cable,
//! yaw is q3 about the cable axis) → q4 about platform y → q5 about the
//! rotated x → load cable (uniform rod, length `l2`) → point-mass load.
//! World z points up and `q = 0` is the straight-down hanging equilibrium.
//! Signs are chosen so that positive q1/q4 swing toward +x and positive
//! q2/q5 toward +y, which makes `F_x` act on q1 and `F_y` on q2.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default half-width margin kept from the `|q| = π/2` representation
/// singularity of the second joint of each cable.
pub const DEFAULT_WORKSPACE_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Platform mass [kg].
    pub m_p: f64,
    /// Load mass [kg].
    pub m_l: f64,
    /// Platform principal inertias [kg m²].
    pub i_xx: f64,
    pub i_yy: f64,
    pub i_zz: f64,
    /// Upper cable length [m].
    pub l1: f64,
    /// Load cable length [m].
    pub l2: f64,
    /// Upper cable mass [kg].
    pub m_c1: f64,
    /// Load cable mass [kg].
    pub m_c2: f64,
    /// Gravitational acceleration [m/s²].
    pub g0: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        default_params()
    }
}

/// Nominal parameter set of the simulated platform.
pub fn default_params() -> ModelParams {
    ModelParams {
        m_p: 4.06,
        m_l: 1.4,
        i_xx: 0.0646,
        i_yy: 0.0646,
        i_zz: 0.0682,
        l1: 1.5,
        l2: 0.75,
        m_c1: 0.15,
        m_c2: 0.10,
        g0: 9.81,
    }
}

/// Heavier, stiffer-inertia plant used for the model-mismatch study.
pub fn uncertain_params() -> ModelParams {
    ModelParams {
        m_p: 10.06,
        m_l: 20.4,
        i_xx: 0.75,
        i_yy: 0.75,
        i_zz: 0.5,
        ..default_params()
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("m_p", self.m_p),
            ("m_l", self.m_l),
            ("i_xx", self.i_xx),
            ("i_yy", self.i_yy),
            ("i_zz", self.i_zz),
            ("l1", self.l1),
            ("l2", self.l2),
            ("m_c1", self.m_c1),
            ("m_c2", self.m_c2),
            ("g0", self.g0),
        ];
        check_positive(&fields)
    }
}

pub fn validate(params: &ModelParams) -> Result<()> {
    params.validate()
}

fn check_positive(fields: &[(&'static str, f64)]) -> Result<()> {
    for &(name, v) in fields {
        // NaN fails the comparison as well
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveParameter(name));
        }
    }
    Ok(())
}

/// One planar link: a uniform rod with a rigid body at its tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarLink {
    pub length: f64,
    pub rod_mass: f64,
    pub tip_mass: f64,
    /// Rotational inertia of the tip body about the joint-parallel axis
    /// through its centre [kg m²]; zero for a point mass.
    pub tip_inertia: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarParams {
    pub link1: PlanarLink,
    pub link2: PlanarLink,
    pub g0: f64,
}

impl PlanarParams {
    pub fn validate(&self) -> Result<()> {
        check_positive(&[
            ("link1.length", self.link1.length),
            ("link1.rod_mass", self.link1.rod_mass),
            ("link1.tip_mass", self.link1.tip_mass),
            ("link2.length", self.link2.length),
            ("link2.rod_mass", self.link2.rod_mass),
            ("link2.tip_mass", self.link2.tip_mass),
            ("g0", self.g0),
        ])?;
        for (name, v) in [
            ("link1.tip_inertia", self.link1.tip_inertia),
            ("link2.tip_inertia", self.link2.tip_inertia),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveParameter(name));
            }
        }
        Ok(())
    }
}

/// Restricts the chain to the x–z plane swept by q1 and q4: link 1 is the
/// upper cable carrying the platform, link 2 the load cable carrying the
/// load. The platform keeps its inertia `i_yy` since it rotates with q1.
pub fn planar_reduction(params: &ModelParams) -> Result<PlanarParams> {
    params.validate()?;
    Ok(PlanarParams {
        link1: PlanarLink {
            length: params.l1,
            rod_mass: params.m_c1,
            tip_mass: params.m_p,
            tip_inertia: params.i_yy,
        },
        link2: PlanarLink {
            length: params.l2,
            rod_mass: params.m_c2,
            tip_mass: params.m_l,
            tip_inertia: 0.0,
        },
        g0: params.g0,
    })
}

/// Generalized coordinates and velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: DVector<f64>,
    pub dq: DVector<f64>,
}

impl JointState {
    pub fn new(q: DVector<f64>, dq: DVector<f64>) -> Self {
        assert_eq!(q.len(), dq.len(), "q and dq must have the same length");
        Self { q, dq }
    }

    pub fn from_slices(q: &[f64], dq: &[f64]) -> Self {
        Self::new(DVector::from_column_slice(q), DVector::from_column_slice(dq))
    }

    /// Zero velocity at the given configuration.
    pub fn at_rest(q: &[f64]) -> Self {
        Self::new(DVector::from_column_slice(q), DVector::zeros(q.len()))
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(DVector::zeros(n), DVector::zeros(n))
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.dq.iter()).all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_values() {
        let p = default_params();
        assert_eq!((p.m_p, p.m_l), (4.06, 1.4));
        assert_eq!((p.i_xx, p.i_yy, p.i_zz), (0.0646, 0.0646, 0.0682));
        assert_eq!((p.l1, p.l2, p.m_c1, p.m_c2), (1.5, 0.75, 0.15, 0.10));
        assert_eq!(p.g0, 9.81);
        assert!(validate(&p).is_ok());
    }

    #[test]
    fn uncertain_values() {
        let p = uncertain_params();
        assert_eq!((p.m_p, p.m_l), (10.06, 20.4));
        assert_eq!((p.i_xx, p.i_yy, p.i_zz), (0.75, 0.75, 0.5));
        assert_eq!(p.l1, 1.5);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn rejects_non_positive_fields() {
        let p = ModelParams { m_l: 0.0, ..default_params() };
        assert_eq!(validate(&p), Err(Error::NonPositiveParameter("m_l")));
        let p = ModelParams { l1: -1.5, ..default_params() };
        assert_eq!(validate(&p), Err(Error::NonPositiveParameter("l1")));
        let p = ModelParams { g0: f64::NAN, ..default_params() };
        assert_eq!(validate(&p), Err(Error::NonPositiveParameter("g0")));
    }

    #[test]
    fn planar_reduction_maps_links() {
        let pp = planar_reduction(&default_params()).unwrap();
        assert_eq!(
            (pp.link1.length, pp.link1.rod_mass, pp.link1.tip_mass),
            (1.5, 0.15, 4.06)
        );
        assert_eq!(
            (pp.link2.length, pp.link2.rod_mass, pp.link2.tip_mass),
            (0.75, 0.10, 1.4)
        );
        assert!(pp.validate().is_ok());
    }

    #[test]
    fn changing_load_mass_only_touches_link2_tip() {
        let a = planar_reduction(&default_params()).unwrap();
        let b = planar_reduction(&ModelParams { m_l: 3.0, ..default_params() }).unwrap();
        assert_eq!(a.link1, b.link1);
        assert_eq!(a.link2.length, b.link2.length);
        assert_eq!(a.link2.rod_mass, b.link2.rod_mass);
        assert_eq!(b.link2.tip_mass, 3.0);
    }

    #[test]
    fn planar_reduction_preserves_link_mass() {
        let p = default_params();
        let pp = planar_reduction(&p).unwrap();
        assert_eq!(pp.link1.rod_mass + pp.link1.tip_mass, p.m_c1 + p.m_p);
        assert_eq!(pp.link2.rod_mass + pp.link2.tip_mass, p.m_c2 + p.m_l);
    }

    #[test]
    fn planar_reduction_propagates_errors() {
        let p = ModelParams { m_c2: 0.0, ..default_params() };
        assert_eq!(planar_reduction(&p), Err(Error::NonPositiveParameter("m_c2")));
    }
}
