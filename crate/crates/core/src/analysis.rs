//! Closed-loop linearization and eigenvalue classification, limit-cycle
//! detection, and the KPIs reported for the robustness studies.

use nalgebra::{Complex, DMatrix, DVector};

use crate::control::{Controller, ControllerConfig};
use crate::dynamics::Multibody;
use crate::error::{Error, Result};
use crate::model::JointState;

/// Central-difference step for the closed-loop Jacobian.
pub const LINEARIZATION_STEP: f64 = 1e-6;
/// Largest `‖ẋ‖` accepted at a linearization point.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;
/// `|Re λ| / |λ|` below which an eigenvalue counts as on the imaginary axis.
pub const MARGINAL_RATIO: f64 = 1e-3;
/// Amplitude below which a signal counts as converged [rad].
pub const CONVERGE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    StrictlyStable,
    MarginalImaginary,
    Unstable,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stability::StrictlyStable => "StrictlyStable",
            Stability::MarginalImaginary => "MarginalImaginary",
            Stability::Unstable => "Unstable",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationResult {
    pub a: DMatrix<f64>,
    /// Sorted by decreasing real part, then decreasing imaginary part.
    pub eigenvalues: Vec<Complex<f64>>,
    pub classes: Vec<Stability>,
}

impl LinearizationResult {
    pub fn count(&self, class: Stability) -> usize {
        self.classes.iter().filter(|c| **c == class).count()
    }

    pub fn all_strictly_stable(&self) -> bool {
        self.eigenvalues.iter().all(|l| l.re < 0.0) && self.count(Stability::StrictlyStable) == self.classes.len()
    }

    /// Every complex eigenvalue has its conjugate in the list within `tol`.
    pub fn conjugate_paired(&self, tol: f64) -> bool {
        self.eigenvalues
            .iter()
            .all(|l| self.eigenvalues.iter().any(|m| (m - l.conj()).norm() <= tol * (1.0 + l.norm())))
    }
}

/// An eigenvalue is marginal when its damping ratio `|Re λ|/|λ|` is below
/// [`MARGINAL_RATIO`], or when it is negligible next to the spectrum.
fn classify(eigenvalues: &[Complex<f64>]) -> Vec<Stability> {
    let scale = eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    eigenvalues
        .iter()
        .map(|l| {
            let n = l.norm();
            if n <= 1e-9 * scale || l.re.abs() / n < MARGINAL_RATIO {
                Stability::MarginalImaginary
            } else if l.re < 0.0 {
                Stability::StrictlyStable
            } else {
                Stability::Unstable
            }
        })
        .collect()
}

/// Closed-loop vector field `(q̇, M⁻¹(J_uᵀu(x) − Cq̇ − g))` with the
/// controller's nominal model acting as the plant.
pub fn closed_loop_field(controller: &Controller, x: &DVector<f64>) -> Result<DVector<f64>> {
    let n = x.len() / 2;
    let state = JointState::new(x.rows(0, n).into_owned(), x.rows(n, n).into_owned());
    let plant = &controller.config().nominal;
    let (u, _) = controller.control_wrench(&state)?;
    let ddq = plant.forward_dynamics(&state, &u, &DVector::zeros(n))?;
    let mut out = DVector::zeros(2 * n);
    out.rows_mut(0, n).copy_from(&state.dq);
    out.rows_mut(n, n).copy_from(&ddq);
    Ok(out)
}

pub fn linearize(cfg: &ControllerConfig, x_eq: &JointState) -> Result<LinearizationResult> {
    let controller = Controller::new(cfg.clone())?;
    let n = x_eq.dof();
    let mut x0 = DVector::zeros(2 * n);
    x0.rows_mut(0, n).copy_from(&x_eq.q);
    x0.rows_mut(n, n).copy_from(&x_eq.dq);

    let f0 = closed_loop_field(&controller, &x0)?;
    let norm = f0.norm();
    if !(norm <= EQUILIBRIUM_TOL) {
        return Err(Error::NotAnEquilibrium { norm });
    }

    let h = LINEARIZATION_STEP;
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..2 * n {
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[j] += h;
        xm[j] -= h;
        let col = (closed_loop_field(&controller, &xp)? - closed_loop_field(&controller, &xm)?) / (2.0 * h);
        a.set_column(j, &col);
    }

    let mut eigenvalues: Vec<Complex<f64>> = a.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    let classes = classify(&eigenvalues);
    Ok(LinearizationResult { a, eigenvalues, classes })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitCycleVerdict {
    LimitCycle { amplitude: f64, period: f64 },
    Converged,
    Inconclusive,
}

/// Parabolic refinement of a sampled extremum at interior index `i`.
fn refine_extremum(t: &[f64], x: &[f64], i: usize) -> (f64, f64) {
    let (y0, y1, y2) = (x[i - 1], x[i], x[i + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    if denom == 0.0 {
        return (t[i], y1);
    }
    let off = 0.5 * (y0 - y2) / denom;
    let h = 0.5 * (t[i + 1] - t[i - 1]);
    (t[i] + off * h, y1 - 0.25 * (y0 - y2) * off)
}

/// Classifies the behaviour of `x(t)` after discarding the first
/// `settle_window` seconds.
pub fn detect_limit_cycle(t: &[f64], x: &[f64], settle_window: f64, min_cycles: usize) -> LimitCycleVerdict {
    assert_eq!(t.len(), x.len(), "time and signal lengths differ");
    let Some(&t0) = t.first() else {
        return LimitCycleVerdict::Inconclusive;
    };
    let start = t.partition_point(|&ti| ti < t0 + settle_window);
    let (tw, xw) = (&t[start..], &x[start..]);
    if xw.len() < 3 {
        return LimitCycleVerdict::Inconclusive;
    }
    if xw.iter().all(|v| v.abs() < CONVERGE_TOL) {
        return LimitCycleVerdict::Converged;
    }

    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..xw.len() - 1 {
        if xw[i] > xw[i - 1] && xw[i] >= xw[i + 1] {
            maxima.push(refine_extremum(tw, xw, i));
        } else if xw[i] < xw[i - 1] && xw[i] <= xw[i + 1] {
            minima.push(refine_extremum(tw, xw, i));
        }
    }

    // pair each maximum with the next minimum
    let mut amplitudes = Vec::new();
    let mut j = 0;
    for &(tm, vm) in &maxima {
        while j < minima.len() && minima[j].0 < tm {
            j += 1;
        }
        if j == minima.len() {
            break;
        }
        amplitudes.push(0.5 * (vm - minima[j].1));
    }
    if amplitudes.len() < min_cycles.max(2) || maxima.len() < 2 {
        return LimitCycleVerdict::Inconclusive;
    }
    let mean = amplitudes.iter().sum::<f64>() / amplitudes.len() as f64;
    let steady = amplitudes.windows(2).all(|w| (w[1] - w[0]).abs() < 0.1 * mean);
    if mean > CONVERGE_TOL && steady {
        let period = (maxima.last().unwrap().0 - maxima[0].0) / (maxima.len() - 1) as f64;
        LimitCycleVerdict::LimitCycle { amplitude: mean, period }
    } else {
        LimitCycleVerdict::Inconclusive
    }
}

/// Time after which `|x − reference|` stays within `band_fraction` of the
/// largest deviation; `None` if the log ends outside the band.
pub fn response_time(t: &[f64], x: &[f64], reference: f64, band_fraction: f64) -> Option<f64> {
    assert_eq!(t.len(), x.len(), "time and signal lengths differ");
    if x.len() < 2 {
        return None;
    }
    let dev: Vec<f64> = x.iter().map(|v| (v - reference).abs()).collect();
    let peak = dev.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Some(0.0);
    }
    let band = band_fraction * peak;
    match dev.iter().rposition(|&d| d > band) {
        None => Some(0.0),
        Some(i) if i + 1 == dev.len() => None,
        Some(i) => Some(t[i + 1] - t[0]),
    }
}

/// Signed extremum of `x − reference` over the interval `[from, to)`.
fn signed_extremum(e: &[f64]) -> f64 {
    e.iter().copied().fold(0.0, |best: f64, v| if v.abs() > best.abs() { v } else { best })
}

/// Largest overshoot in the first transient.
///
/// If the deviation changes sign, this is the signed extremum of the first
/// excursion past the reference. If it never does (monotone approach), it is
/// the signed extremum of the whole signal, i.e. the initial deviation. A
/// signal that starts at the reference reports its first excursion.
pub fn peak_response(x: &[f64], reference: f64) -> f64 {
    let e: Vec<f64> = x.iter().map(|v| v - reference).collect();
    let Some(first) = e.iter().position(|v| *v != 0.0) else {
        return 0.0;
    };
    let s0 = e[first].signum();
    let Some(cross) = e[first..].iter().position(|v| v.signum() == -s0 && *v != 0.0).map(|p| p + first) else {
        return signed_extremum(&e);
    };
    if first > 0 {
        return signed_extremum(&e[first..cross]);
    }
    let end = e[cross..]
        .iter()
        .position(|v| v.signum() == s0 && *v != 0.0)
        .map_or(e.len(), |p| p + cross);
    signed_extremum(&e[cross..end])
}

/// Centered moving average over `window` samples (shrinking at the edges).
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let half = window.max(1) / 2;
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Smooth-to-residual power ratio in dB; `+∞` when the residual power is
/// below 1e-24 of the smooth power, i.e. rounding only (the noise-free case).
pub fn snr(x: &[f64], dt: f64, smoothing_window: f64) -> f64 {
    let w = ((smoothing_window / dt).round() as usize).max(1);
    let s = moving_average(x, w);
    let ps: f64 = s.iter().map(|v| v * v).sum();
    let pn: f64 = x.iter().zip(&s).map(|(a, b)| (a - b) * (a - b)).sum();
    if pn <= 1e-24 * ps || pn == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (ps / pn).log10()
}

pub const DEFAULT_SNR_WINDOW: f64 = 0.1;
/// Start-up interval left out of the SNR: the fast closed-loop mode rings at
/// about 100 Hz right after t = 0 and would otherwise count as noise.
pub const DEFAULT_SNR_SKIP: f64 = 1.0;
pub const DEFAULT_BAND_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct JointKpi {
    pub name: String,
    pub response_time: Option<f64>,
    pub peak_response: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelKpi {
    pub name: String,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KpiReport {
    pub joints: Vec<JointKpi>,
    pub channels: Vec<ChannelKpi>,
}

impl KpiReport {
    pub fn joint(&self, name: &str) -> Option<&JointKpi> {
        self.joints.iter().find(|j| j.name == name)
    }

    pub fn channel(&self, name: &str) -> Option<&ChannelKpi> {
        self.channels.iter().find(|c| c.name == name)
    }
}

/// KPIs for named joint and channel series sharing the time base `t`
/// (references zero). SNR is taken over `t >= t[0] + DEFAULT_SNR_SKIP` when
/// the log is long enough.
pub fn kpi_report(t: &[f64], joints: &[(String, Vec<f64>)], channels: &[(String, Vec<f64>)]) -> KpiReport {
    let dt = if t.len() > 1 { (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64 } else { 1.0 };
    let skip = t.iter().position(|v| *v >= t[0] + DEFAULT_SNR_SKIP - 0.5 * dt).unwrap_or(0);
    let skip = if t.len() - skip < 2 { 0 } else { skip };
    KpiReport {
        joints: joints
            .iter()
            .map(|(name, x)| JointKpi {
                name: name.clone(),
                response_time: response_time(t, x, 0.0, DEFAULT_BAND_FRACTION),
                peak_response: peak_response(x, 0.0),
            })
            .collect(),
        channels: channels
            .iter()
            .map(|(name, x)| ChannelKpi {
                name: name.clone(),
                snr_db: snr(&x[skip..], dt, DEFAULT_SNR_WINDOW),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(dt: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn decaying_oscillation_converges() {
        let t = grid(1e-3, 30_000);
        let x: Vec<f64> = t.iter().map(|t| 0.2 * (-t).exp() * (3.0 * t).sin()).collect();
        assert_eq!(detect_limit_cycle(&t, &x, 10.0, 3), LimitCycleVerdict::Converged);
    }

    #[test]
    fn pure_sine_is_limit_cycle() {
        let t = grid(1e-3, 40_000);
        let w = 2.1;
        let x: Vec<f64> = t.iter().map(|t| 0.05 * (w * t).sin()).collect();
        match detect_limit_cycle(&t, &x, 5.0, 3) {
            LimitCycleVerdict::LimitCycle { amplitude, period } => {
                assert!((amplitude - 0.05).abs() < 0.02 * 0.05);
                assert!((period - 2.0 * PI / w).abs() < 0.02 * 2.0 * PI / w);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn growing_oscillation_is_inconclusive() {
        let t = grid(1e-3, 20_000);
        let x: Vec<f64> = t.iter().map(|t| 0.01 * (0.3 * t).exp() * (4.0 * t).sin()).collect();
        assert_eq!(detect_limit_cycle(&t, &x, 2.0, 3), LimitCycleVerdict::Inconclusive);
    }

    #[test]
    fn response_time_cases() {
        let t = grid(1e-3, 10_000);
        let flat = vec![0.0; t.len()];
        assert_eq!(response_time(&t, &flat, 0.0, 0.01), Some(0.0));
        let x: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        let rt = response_time(&t, &x, 0.0, 0.01).unwrap();
        assert!((rt - 100f64.ln()).abs() <= 1e-3, "{rt}");
        let ramp: Vec<f64> = t.clone();
        assert_eq!(response_time(&t, &ramp, 0.0, 0.01), None);
    }

    #[test]
    fn peak_response_cases() {
        let t = grid(1e-2, 1000);
        let decay: Vec<f64> = t.iter().map(|t| -0.1 * (-t).exp()).collect();
        assert_eq!(peak_response(&decay, 0.0), -0.1);
        // underdamped from -0.1: first overshoot is positive
        let osc: Vec<f64> = t.iter().map(|t| -0.1 * (-0.8 * t).exp() * (2.0 * t).cos()).collect();
        let p = peak_response(&osc, 0.0);
        assert!(p > 0.0 && p < 0.1, "{p}");
        let exact = (0..1000)
            .map(|k| osc[k])
            .skip_while(|v| *v < 0.0)
            .take_while(|v| *v >= 0.0)
            .fold(0.0, f64::max);
        assert_eq!(p, exact);
        assert_eq!(peak_response(&vec![0.0; 10], 0.0), 0.0);
        // starting at the reference
        let bump = [0.0, 0.0, 0.02, 0.05, 0.01, -0.03, 0.0];
        assert_eq!(peak_response(&bump, 0.0), 0.05);
    }

    #[test]
    fn snr_constant_is_noise_free() {
        assert_eq!(snr(&vec![3.7; 5000], 1e-3, 0.1), f64::INFINITY);
    }

    #[test]
    fn snr_matches_power_ratio_of_sine_plus_noise() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(0.0, 0.05).unwrap();
        let dt = 1e-3;
        let t = grid(dt, 100_000);
        let x: Vec<f64> = t.iter().map(|t| (2.0 * PI * 0.1 * t).sin() + normal.sample(&mut rng)).collect();
        let expected = 10.0 * (0.5f64 / (0.05 * 0.05)).log10();
        let got = snr(&x, dt, 0.1);
        assert!((got - expected).abs() < 1.0, "{got} vs {expected}");
    }

    #[test]
    fn moving_average_edges() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(moving_average(&x, 3), vec![1.5, 2.0, 3.0, 4.0, 4.5]);
    }

    #[test]
    fn classification_thresholds() {
        let ev = [Complex::new(-25.0, 40.0), Complex::new(-25.0, -40.0), Complex::new(-1e-7, 2.0), Complex::new(-1e-7, -2.0), Complex::new(0.5, 0.0)];
        let c = classify(&ev);
        assert_eq!(c[0], Stability::StrictlyStable);
        assert_eq!(c[2], Stability::MarginalImaginary);
        assert_eq!(c[4], Stability::Unstable);
    }
}
