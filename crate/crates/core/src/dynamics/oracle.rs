//! Energy oracle: kinetic and potential energy evaluated from the link
//! kinematics (rotation matrices, their time derivatives, and Gauss
//! quadrature along the cables). Shares no code with the inertia-matrix or
//! gravity-vector paths so it can be used to check them.

use nalgebra::{DVector, Matrix3, Rotation3, Vector3};

use crate::model::{ModelParams, PlanarParams};

/// Two-point Gauss–Legendre nodes and weights on `[0, len]`; exact for the
/// cubic-or-lower integrands arising from a rigid rod.
fn gauss2(len: f64) -> [(f64, f64); 2] {
    let h = 0.5 * len;
    let off = h / 3f64.sqrt();
    [(h - off, h), (h + off, h)]
}

/// Rotation about a unit axis and its derivative with respect to the angle.
fn rotation_with_derivative(axis: Vector3<f64>, angle: f64) -> (Matrix3<f64>, Matrix3<f64>) {
    let r = *Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).matrix();
    (r, axis.cross_matrix() * r)
}

/// Product of joint rotations and its time derivative by the product rule.
fn chain_rate(factors: &[(Matrix3<f64>, Matrix3<f64>, f64)]) -> (Matrix3<f64>, Matrix3<f64>) {
    let mut r = Matrix3::identity();
    let mut rdot = Matrix3::zeros();
    for (f, df, rate) in factors {
        rdot = rdot * f + r * df * *rate;
        r *= f;
    }
    (r, rdot)
}

fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rod kinetic energy: rod starts at a point moving with `v0` and extends
/// along `dir` (rate `ddir`).
fn rod_kinetic(mass: f64, len: f64, v0: &Vector3<f64>, ddir: &Vector3<f64>) -> f64 {
    let density = mass / len;
    gauss2(len)
        .iter()
        .map(|&(s, w)| 0.5 * density * w * (v0 + ddir * s).norm_squared())
        .sum()
}

fn rod_potential(mass: f64, len: f64, g0: f64, base: &Vector3<f64>, dir: &Vector3<f64>) -> f64 {
    let density = mass / len;
    gauss2(len).iter().map(|&(s, w)| density * w * g0 * (base + dir * s).z).sum()
}

/// `(T, V)` of the full chain, potential referenced to the anchor height.
pub fn full_energy(p: &ModelParams, q: &DVector<f64>, dq: &DVector<f64>) -> (f64, f64) {
    let (x, y, z) = (Vector3::x(), Vector3::y(), Vector3::z());
    let j = |axis, i: usize| {
        let (r, dr) = rotation_with_derivative(axis, q[i]);
        (r, dr, dq[i])
    };
    let cable1 = [j(-y, 0), j(x, 1)];
    let platform = [cable1[0], cable1[1], j(z, 2)];
    let cable2 = [platform[0], platform[1], platform[2], j(-y, 3), j(x, 4)];

    let down = -Vector3::z();
    let (r1, r1dot) = chain_rate(&cable1);
    let (rp, rpdot) = chain_rate(&platform);
    let (r2, r2dot) = chain_rate(&cable2);

    let d1 = r1 * down;
    let dd1 = r1dot * down;
    let d2 = r2 * down;
    let dd2 = r2dot * down;
    let pos_p = d1 * p.l1;
    let vel_p = dd1 * p.l1;
    let omega_body = vee(&(rp.transpose() * rpdot));
    let inertia = Matrix3::from_diagonal(&Vector3::new(p.i_xx, p.i_yy, p.i_zz));
    let pos_l = pos_p + d2 * p.l2;
    let vel_l = vel_p + dd2 * p.l2;

    let t = rod_kinetic(p.m_c1, p.l1, &Vector3::zeros(), &dd1)
        + 0.5 * p.m_p * vel_p.norm_squared()
        + 0.5 * omega_body.dot(&(inertia * omega_body))
        + rod_kinetic(p.m_c2, p.l2, &vel_p, &dd2)
        + 0.5 * p.m_l * vel_l.norm_squared();
    let v = rod_potential(p.m_c1, p.l1, p.g0, &Vector3::zeros(), &d1)
        + p.m_p * p.g0 * pos_p.z
        + rod_potential(p.m_c2, p.l2, p.g0, &pos_p, &d2)
        + p.m_l * p.g0 * pos_l.z;
    (t, v)
}

/// `(T, V)` of the planar double pendulum in the x–z plane.
pub fn planar_energy(p: &PlanarParams, q: &DVector<f64>, dq: &DVector<f64>) -> (f64, f64) {
    let abs2 = q[0] + q[1];
    let rate2 = dq[0] + dq[1];
    let dir = |a: f64| Vector3::new(a.sin(), 0.0, -a.cos());
    let ddir = |a: f64, w: f64| Vector3::new(a.cos() * w, 0.0, a.sin() * w);

    let (l1, l2) = (p.link1.length, p.link2.length);
    let d1 = dir(q[0]);
    let dd1 = ddir(q[0], dq[0]);
    let d2 = dir(abs2);
    let dd2 = ddir(abs2, rate2);
    let tip1 = d1 * l1;
    let vtip1 = dd1 * l1;
    let tip2 = tip1 + d2 * l2;
    let vtip2 = vtip1 + dd2 * l2;

    let t = rod_kinetic(p.link1.rod_mass, l1, &Vector3::zeros(), &dd1)
        + 0.5 * p.link1.tip_mass * vtip1.norm_squared()
        + 0.5 * p.link1.tip_inertia * dq[0] * dq[0]
        + rod_kinetic(p.link2.rod_mass, l2, &vtip1, &dd2)
        + 0.5 * p.link2.tip_mass * vtip2.norm_squared()
        + 0.5 * p.link2.tip_inertia * rate2 * rate2;
    let v = rod_potential(p.link1.rod_mass, l1, p.g0, &Vector3::zeros(), &d1)
        + p.link1.tip_mass * p.g0 * tip1.z
        + rod_potential(p.link2.rod_mass, l2, p.g0, &tip1, &d2)
        + p.link2.tip_mass * p.g0 * tip2.z;
    (t, v)
}
