use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};

use super::{oracle, Multibody};
use crate::dual::{axpy, col, cross, dot, mat_mul, rot_x, rot_y, rot_z, scale, sub, Dual, Real, V3, M3};
use crate::error::{Error, Result};
use crate::model::ModelParams;

const N: usize = 5;

/// Five-joint platform/load chain.
#[derive(Debug, Clone, PartialEq)]
pub struct FullModel {
    params: ModelParams,
}

struct Chain<S> {
    axes: [V3<S>; N],
    platform_rot: M3<S>,
    d1: V3<S>,
    d2: V3<S>,
    platform: V3<S>,
    load: V3<S>,
}

impl<S: Real> Chain<S> {
    fn new(q: &[S; N], p: &ModelParams) -> Self {
        // q1, q4 turn about −y (positive toward +x); q2, q5 about x (toward +y)
        let r_q1 = rot_y(-q[0]);
        let r_cable1 = mat_mul(&r_q1, &rot_x(q[1]));
        let platform_rot = mat_mul(&r_cable1, &rot_z(q[2]));
        let r_q4 = mat_mul(&platform_rot, &rot_y(-q[3]));
        let r_cable2 = mat_mul(&r_q4, &rot_x(q[4]));

        let minus_one = S::cst(-1.0);
        let d1 = scale(minus_one, &col(&r_cable1, 2));
        let d2 = scale(minus_one, &col(&r_cable2, 2));
        let platform = scale(S::cst(p.l1), &d1);
        let load = axpy(&platform, S::cst(p.l2), &d2);
        let (o, z) = (S::cst(1.0), S::cst(0.0));
        let axes = [
            [z, -o, z],
            col(&r_q1, 0),
            col(&r_cable1, 2),
            scale(minus_one, &col(&platform_rot, 1)),
            col(&r_q4, 0),
        ];
        Self { axes, platform_rot, d1, d2, platform, load }
    }

    /// Translational Jacobian columns of a point moved by the first
    /// `active` joints. Joints 1–3 pivot at the anchor, 4–5 at the platform.
    fn point_jacobian(&self, point: &V3<S>, active: usize) -> [V3<S>; N] {
        let zero = [S::cst(0.0); 3];
        let mut cols = [zero; N];
        for (i, c) in cols.iter_mut().enumerate().take(active) {
            let lever = if i < 3 { *point } else { sub(point, &self.platform) };
            *c = cross(&self.axes[i], &lever);
        }
        cols
    }
}

fn add_translational<S: Real>(m: &mut [[S; N]; N], mass: f64, jv: &[V3<S>; N]) {
    let mass = S::cst(mass);
    for i in 0..N {
        for j in 0..N {
            m[i][j] += mass * dot(&jv[i], &jv[j]);
        }
    }
}

/// Slender rod with axis `d` and transverse inertia `k` about its centre.
fn add_rod_rotation<S: Real>(m: &mut [[S; N]; N], k: f64, d: &V3<S>, axes: &[V3<S>; N], active: usize) {
    let k = S::cst(k);
    for i in 0..active {
        for j in 0..active {
            m[i][j] += k * (dot(&axes[i], &axes[j]) - dot(&axes[i], d) * dot(&axes[j], d));
        }
    }
}

fn inertia_generic<S: Real>(q: &[S; N], p: &ModelParams) -> [[S; N]; N] {
    let ch = Chain::new(q, p);
    let mut m = [[S::cst(0.0); N]; N];

    // upper cable
    let c1 = scale(S::cst(0.5), &ch.platform);
    add_translational(&mut m, p.m_c1, &ch.point_jacobian(&c1, 2));
    add_rod_rotation(&mut m, p.m_c1 * p.l1 * p.l1 / 12.0, &ch.d1, &ch.axes, 2);

    // platform
    add_translational(&mut m, p.m_p, &ch.point_jacobian(&ch.platform, 3));
    let principal = [p.i_xx, p.i_yy, p.i_zz];
    for (k, &ik) in principal.iter().enumerate() {
        let e = col(&ch.platform_rot, k);
        let ik = S::cst(ik);
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += ik * dot(&ch.axes[i], &e) * dot(&ch.axes[j], &e);
            }
        }
    }

    // load cable
    let c2 = axpy(&ch.platform, S::cst(0.5 * p.l2), &ch.d2);
    add_translational(&mut m, p.m_c2, &ch.point_jacobian(&c2, N));
    add_rod_rotation(&mut m, p.m_c2 * p.l2 * p.l2 / 12.0, &ch.d2, &ch.axes, N);

    // load
    add_translational(&mut m, p.m_l, &ch.point_jacobian(&ch.load, N));
    m
}

fn to_array(q: &DVector<f64>) -> [f64; N] {
    assert_eq!(q.len(), N, "full model expects 5 coordinates");
    [q[0], q[1], q[2], q[3], q[4]]
}

impl FullModel {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// World positions of platform and load centres.
    pub fn positions(&self, q: &DVector<f64>) -> ([f64; 3], [f64; 3]) {
        let ch = Chain::new(&to_array(q), &self.params);
        (ch.platform, ch.load)
    }

    fn jacobians(&self, q: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let ch = Chain::new(&to_array(q), &self.params);
        let to_mat = |cols: [V3<f64>; N]| DMatrix::from_fn(3, N, |r, c| cols[c][r]);
        (
            to_mat(ch.point_jacobian(&ch.platform, 3)),
            to_mat(ch.point_jacobian(&ch.load, N)),
        )
    }
}

impl Multibody for FullModel {
    fn dof(&self) -> usize {
        N
    }

    fn n_inputs(&self) -> usize {
        3
    }

    fn raw_mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let m = inertia_generic(&to_array(q), &self.params);
        DMatrix::from_fn(N, N, |i, j| m[i][j])
    }

    fn mass_matrix_partials(&self, q: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let q = to_array(q);
        (0..N)
            .map(|k| {
                let qd: [Dual; N] = std::array::from_fn(|i| Dual::new(q[i], if i == k { 1.0 } else { 0.0 }));
                let m = inertia_generic(&qd, &self.params);
                DMatrix::from_fn(N, N, |i, j| m[i][j].eps)
            })
            .collect()
    }

    fn gravity_vector(&self, q: &DVector<f64>) -> DVector<f64> {
        let p = &self.params;
        let ch = Chain::new(&to_array(q), p);
        let c1 = scale(0.5, &ch.platform);
        let c2 = axpy(&ch.platform, 0.5 * p.l2, &ch.d2);
        let bodies = [
            (p.m_c1, ch.point_jacobian(&c1, 2)),
            (p.m_p, ch.point_jacobian(&ch.platform, 3)),
            (p.m_c2, ch.point_jacobian(&c2, N)),
            (p.m_l, ch.point_jacobian(&ch.load, N)),
        ];
        DVector::from_fn(N, |i, _| bodies.iter().map(|(m, jv)| p.g0 * m * jv[i][2]).sum())
    }

    fn input_jacobian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let (jp, _) = self.jacobians(q);
        let mut ju = DMatrix::zeros(3, N);
        ju.view_mut((0, 0), (2, N)).copy_from(&jp.rows(0, 2));
        ju[(2, 2)] = 1.0;
        ju
    }

    fn wind_jacobians(&self, q: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let (jp, jl) = self.jacobians(q);
        vec![jp.rows(0, 2).into_owned(), jl.rows(0, 2).into_owned()]
    }

    fn lagrangian_oracle(&self, q: &DVector<f64>, dq: &DVector<f64>) -> (f64, f64) {
        oracle::full_energy(&self.params, q, dq)
    }

    fn check_workspace(&self, q: &DVector<f64>, margin: f64) -> Result<()> {
        if q.len() != N {
            return Err(Error::OutsideWorkspace(format!("expected 5 coordinates, got {}", q.len())));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutsideWorkspace("non-finite coordinate".into()));
        }
        let limit = FRAC_PI_2 - margin;
        for idx in [1, 4] {
            if q[idx].abs() >= limit {
                return Err(Error::OutsideWorkspace(format!(
                    "|q{}| = {:.4} rad reaches the limit {:.4} rad",
                    idx + 1,
                    q[idx].abs(),
                    limit
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_params;

    fn model() -> FullModel {
        FullModel::new(default_params()).unwrap()
    }

    #[test]
    fn input_jacobian_at_rest() {
        let ju = model().input_jacobian(&DVector::zeros(5));
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(3, 5, &[
            1.5, 0.0, 0.0, 0.0, 0.0,
            0.0, 1.5, 0.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0, 0.0,
        ]);
        assert!((ju - expected).abs().max() < 1e-15);
    }

    #[test]
    fn input_jacobian_structure_away_from_rest() {
        let q = DVector::from_vec(vec![0.3, -0.5, 1.2, 0.7, -0.4]);
        let ju = model().input_jacobian(&q);
        for r in 0..2 {
            for c in 2..5 {
                assert_eq!(ju[(r, c)], 0.0);
            }
        }
        assert_eq!(ju.row(2).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn gravity_vanishes_at_rest_and_restores() {
        let m = model();
        assert!(m.gravity_vector(&DVector::zeros(5)).amax() < 1e-14);
        let g = m.gravity_vector(&DVector::from_vec(vec![0.1, 0.0, 0.0, 0.0, 0.0]));
        assert!(g[0] > 0.0);
    }

    #[test]
    fn workspace_limits() {
        let m = model();
        assert!(m.check_workspace(&DVector::zeros(5), 0.05).is_ok());
        let q = DVector::from_vec(vec![0.0, 1.55, 0.0, 0.0, 0.0]);
        assert!(matches!(m.check_workspace(&q, 0.05), Err(Error::OutsideWorkspace(_))));
        let q = DVector::from_vec(vec![3.0, 0.0, 5.0, 1.0, -1.4]);
        assert!(m.check_workspace(&q, 0.05).is_ok());
    }

    #[test]
    fn singular_at_cable_alignment() {
        // q2 = π/2 aligns the q1 and q3 axes
        let q = DVector::from_vec(vec![0.0, FRAC_PI_2, 0.0, 0.0, 0.0]);
        let m = model();
        let min = m.raw_mass_matrix(&q).symmetric_eigenvalues().min();
        assert!(min.abs() < 1e-9, "min eigenvalue {min}");
        assert!(matches!(m.mass_matrix(&q), Err(Error::SingularConfiguration { .. })));
    }
}
