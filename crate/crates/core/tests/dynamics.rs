mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use pfl_core::dynamics::{coriolis_matrix, gravity_vector, mass_matrix};
use pfl_core::sim::step;
use pfl_core::{default_params, JointState, Model, Multibody};
use proptest::prelude::*;

fn check_inertia(model: &Model, s: &JointState) -> Result<(), TestCaseError> {
    let m = mass_matrix(model, &s.q).unwrap();
    let asym = (&m - m.transpose()).amax();
    prop_assert!(asym <= 1e-12 * m.amax(), "asymmetry {asym}");
    let min = m.clone().symmetric_eigenvalues().min();
    prop_assert!(min > 0.0, "min eigenvalue {min}");
    let t = 0.5 * s.dq.dot(&(&m * &s.dq));
    let (t_oracle, _) = model.lagrangian_oracle(&s.q, &s.dq);
    prop_assert!(rel_err(t, t_oracle) <= 1e-8, "T {t} vs oracle {t_oracle}");
    Ok(())
}

fn check_gravity(model: &Model, s: &JointState) -> Result<(), TestCaseError> {
    let g = gravity_vector(model, &s.q);
    let zero = DVector::zeros(s.dof());
    let grad = gradient(|q| model.lagrangian_oracle(q, &zero).1, &s.q, 1e-6);
    let err = (&g - &grad).amax();
    prop_assert!(err <= 1e-6 * g.amax().max(1.0), "g {g} vs grad V {grad}");
    Ok(())
}

fn check_passivity(model: &Model, s: &JointState) -> Result<(), TestCaseError> {
    let c = coriolis_matrix(model, &s.q, &s.dq);
    let m_dot = derivative4(|h| model.raw_mass_matrix(&(&s.q + &s.dq * h)), 1e-3);
    let quad = s.dq.dot(&((&m_dot - &c * 2.0) * &s.dq));
    let scale = s.dq.dot(&(model.raw_mass_matrix(&s.q) * &s.dq)).max(1.0);
    prop_assert!(quad.abs() <= 1e-9 * scale, "dqᵀ(Ṁ−2C)dq = {quad}");

    // with the exact Ṁ the whole matrix is skew
    let partials = model.mass_matrix_partials(&s.q);
    let exact: DMatrix<f64> = partials.iter().zip(s.dq.iter()).map(|(p, v)| p * *v).sum();
    let n = &exact - &c * 2.0;
    prop_assert!((&n + n.transpose()).amax() <= 1e-10 * exact.amax().max(1.0));
    prop_assert!((&exact - &m_dot).amax() <= 1e-7 * exact.amax().max(1.0));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn full_inertia_matches_oracle(s in full_state()) {
        check_inertia(&full(), &s)?;
    }

    #[test]
    fn planar_inertia_matches_oracle(s in planar_state()) {
        check_inertia(&planar(), &s)?;
    }

    #[test]
    fn full_gravity_is_potential_gradient(s in full_state()) {
        check_gravity(&full(), &s)?;
    }

    #[test]
    fn planar_gravity_is_potential_gradient(s in planar_state()) {
        check_gravity(&planar(), &s)?;
    }

    #[test]
    fn full_coriolis_is_passive(s in full_state()) {
        check_passivity(&full(), &s)?;
    }

    #[test]
    fn planar_coriolis_is_passive(s in planar_state()) {
        check_passivity(&planar(), &s)?;
    }

    #[test]
    fn planar_equals_full_restricted_to_plane(a in -1.4f64..1.4, b in -1.4f64..1.4, da in -2.0f64..2.0, db in -2.0f64..2.0) {
        let (f, p) = (full(), planar());
        let qf = DVector::from_row_slice(&[a, 0.0, 0.0, b, 0.0]);
        let qp = DVector::from_row_slice(&[a, b]);
        let mf = mass_matrix(&f, &qf).unwrap();
        let mp = mass_matrix(&p, &qp).unwrap();
        let idx = [0, 3];
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((mf[(idx[i], idx[j])] - mp[(i, j)]).abs() <= 1e-12 * mp.amax());
            }
        }
        let gf = gravity_vector(&f, &qf);
        let gp = gravity_vector(&p, &qp);
        prop_assert!((gf[0] - gp[0]).abs() <= 1e-12 * gp.amax().max(1.0));
        prop_assert!((gf[3] - gp[1]).abs() <= 1e-12 * gp.amax().max(1.0));
        let dqf = DVector::from_row_slice(&[da, 0.0, 0.0, db, 0.0]);
        let dqp = DVector::from_row_slice(&[da, db]);
        let cf = coriolis_matrix(&f, &qf, &dqf) * &dqf;
        let cp = coriolis_matrix(&p, &qp, &dqp) * &dqp;
        prop_assert!((cf[0] - cp[0]).abs() <= 1e-10 && (cf[3] - cp[1]).abs() <= 1e-10);
    }
}

#[test]
fn planar_inertia_matches_textbook_double_pendulum() {
    let p = default_params();
    let (l1, l2) = (p.l1, p.l2);
    let a = p.m_c1 * l1 * l1 / 3.0 + p.m_p * l1 * l1 + p.i_yy + (p.m_c2 + p.m_l) * l1 * l1;
    let b = p.m_c2 * l2 * l2 / 3.0 + p.m_l * l2 * l2;
    let c = (p.m_c2 * l2 / 2.0 + p.m_l * l2) * l1;
    for q2 in [-2.0, -0.3, 0.0, 0.7, 3.0] {
        let m = mass_matrix(&planar(), &DVector::from_row_slice(&[0.4, q2])).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[
            a + b + 2.0 * c * q2.cos(), b + c * q2.cos(),
            b + c * q2.cos(), b,
        ]);
        assert!((&m - &expected).amax() < 1e-12 * a, "q2 = {q2}: {m} vs {expected}");
    }
}

#[test]
fn rest_inertia_is_hessian_of_oracle_kinetic_energy() {
    for model in [full(), planar()] {
        let n = model.dof();
        let q = DVector::zeros(n);
        let h = 1e-3;
        let t = |v: &DVector<f64>| model.lagrangian_oracle(&q, v).0;
        let hess = DMatrix::from_fn(n, n, |i, j| {
            let e = |k: usize, s: f64| DVector::from_fn(n, |r, _| if r == k { s } else { 0.0 });
            let pp = t(&(e(i, h) + e(j, h)));
            let pm = t(&(e(i, h) + e(j, -h)));
            let mp = t(&(e(i, -h) + e(j, h)));
            let mm = t(&(e(i, -h) + e(j, -h)));
            (pp - pm - mp + mm) / (4.0 * h * h)
        });
        let m = mass_matrix(&model, &q).unwrap();
        assert!((&hess - &m).amax() < 1e-7 * m.amax(), "{hess} vs {m}");
    }
}

fn energy_drift(model: &Model, s0: JointState) -> f64 {
    let n = model.dof();
    let (u, f) = (DVector::zeros(model.n_inputs()), DVector::zeros(n));
    let e0 = model.energy(&s0);
    let mut s = s0;
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        s = step(model, &s, &u, &f, 1e-3).unwrap();
        worst = worst.max((model.energy(&s) - e0).abs());
    }
    worst / e0.abs()
}

#[test]
fn unforced_motion_conserves_energy() {
    let cases = [
        (full(), JointState::from_slices(&[0.1, 0.2, 0.4, -0.1, -0.2], &[0.0; 5])),
        (full(), JointState::from_slices(&[0.3, -0.2, 0.0, 0.5, 0.2], &[0.2, 0.1, 1.0, -0.3, 0.0])),
        (planar(), JointState::from_slices(&[0.8, -0.5], &[0.0, 1.0])),
    ];
    for (model, s0) in cases {
        let drift = energy_drift(&model, s0);
        assert!(drift <= 1e-6, "relative drift {drift:e}");
    }
}

#[test]
fn small_swing_period_matches_linearized_mode() {
    let model = planar();
    let q0 = DVector::zeros(2);
    let m = mass_matrix(&model, &q0).unwrap();
    let k = DMatrix::from_fn(2, 2, |i, j| {
        let h = 1e-6;
        let mut p = q0.clone();
        p[j] = h;
        (gravity_vector(&model, &p)[i] - gravity_vector(&model, &(-&p))[i]) / (2.0 * h)
    });
    // generalized eigenproblem K v = ω² M v through the Cholesky factor of M
    let l = m.clone().cholesky().unwrap().l();
    let l_inv = l.clone().try_inverse().unwrap();
    let eig = (&l_inv * &k * l_inv.transpose()).symmetric_eigen();
    let i_slow = eig.eigenvalues.imin();
    let omega = eig.eigenvalues[i_slow].sqrt();
    let l_eff = model_g0() / (omega * omega);
    let period = 2.0 * std::f64::consts::PI * (l_eff / model_g0()).sqrt();
    let shape = l_inv.transpose() * eig.eigenvectors.column(i_slow);
    let mut s = JointState::new(shape.normalize() * 1e-3, DVector::zeros(2));

    let dt = 1e-3;
    let (u, f) = (DVector::zeros(1), DVector::zeros(2));
    let mut crossings = Vec::new();
    let mut t = 0.0;
    while crossings.len() < 21 {
        let next = step(&model, &s, &u, &f, dt).unwrap();
        if s.q[0].signum() != next.q[0].signum() {
            crossings.push(t + dt * s.q[0] / (s.q[0] - next.q[0]));
        }
        s = next;
        t += dt;
    }
    let measured = (crossings[20] - crossings[0]) / 10.0;
    assert!((measured - period).abs() < 0.01 * period, "{measured} vs {period}");
}

fn model_g0() -> f64 {
    default_params().g0
}

#[test]
fn rk4_is_fourth_order() {
    let model = planar();
    let endpoint = |dt: f64| {
        let mut s = JointState::from_slices(&[0.4, -0.3], &[0.0, 0.0]);
        let (u, f) = (DVector::zeros(1), DVector::zeros(2));
        for _ in 0..(10.0 / dt).round() as usize {
            s = step(&model, &s, &u, &f, dt).unwrap();
        }
        s.q
    };
    let (a, b, c) = (endpoint(0.01), endpoint(0.005), endpoint(0.0025));
    let ratio = (&a - &b).norm() / (&b - &c).norm();
    println!("error ratio for halved dt: {ratio:.2}");
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn rest_is_an_equilibrium() {
    for model in [full(), planar()] {
        let n = model.dof();
        let s = JointState::zeros(n);
        let next = step(&model, &s, &DVector::zeros(model.n_inputs()), &DVector::zeros(n), 1e-3).unwrap();
        assert!(next.q.amax() == 0.0 && next.dq.amax() == 0.0);
    }
}
