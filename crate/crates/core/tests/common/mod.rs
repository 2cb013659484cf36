#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pfl_core::control::{ControlMode, ControllerConfig};
use pfl_core::{default_params, planar_reduction, JointState, Model};
use proptest::prelude::*;

pub fn full() -> Model {
    Model::full(default_params()).unwrap()
}

pub fn planar() -> Model {
    Model::planar(planar_reduction(&default_params()).unwrap()).unwrap()
}

pub fn controller(mode: ControlMode, model: Model) -> ControllerConfig {
    ControllerConfig::new(mode, model)
}

/// States well inside the full-model workspace.
pub fn full_state() -> impl Strategy<Value = JointState> {
    (
        prop::array::uniform5(-1.2f64..1.2),
        prop::array::uniform5(-2.0f64..2.0),
        -3.1f64..3.1,
    )
        .prop_map(|(mut q, dq, yaw)| {
            q[2] = yaw;
            JointState::from_slices(&q, &dq)
        })
}

pub fn planar_state() -> impl Strategy<Value = JointState> {
    (prop::array::uniform2(-3.1f64..3.1), prop::array::uniform2(-3.0f64..3.0))
        .prop_map(|(q, dq)| JointState::from_slices(&q, &dq))
}

/// Central-difference gradient.
pub fn gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let mut p = x.clone();
        let mut m = x.clone();
        p[i] += h;
        m[i] -= h;
        (f(&p) - f(&m)) / (2.0 * h)
    })
}

/// Fourth-order central difference of a matrix-valued path `f(s)` at 0.
pub fn derivative4(f: impl Fn(f64) -> DMatrix<f64>, h: f64) -> DMatrix<f64> {
    (f(-2.0 * h) - f(-h) * 8.0 + f(h) * 8.0 - f(2.0 * h)) / (12.0 * h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
