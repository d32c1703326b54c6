//! Explicit strong-stability-preserving Runge-Kutta integration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TimeIntError {
    #[error("non-finite state detected at t = {t} (stage {stage})")]
    NonFinite { t: f64, stage: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "ssprk33")]
    SspRk33,
    #[serde(rename = "ssprk54")]
    SspRk54,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
}

/// The semi-discrete system as seen by the integrator.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    /// dy/dt at time t.
    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]);
    /// Strong boundary conditions imposed on a stage state before it is
    /// differentiated (and on the completed step).
    fn prepare_state(&mut self, _t: f64, _y: &mut [f64]) {}
}

/// Reusable stage storage.
#[derive(Debug, Default, Clone)]
pub struct StageBuffers {
    k: Vec<f64>,
    k2: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    u3: Vec<f64>,
}

impl StageBuffers {
    pub fn sized(n: usize) -> Self {
        Self { k: vec![0.0; n], k2: vec![0.0; n], u1: vec![0.0; n], u2: vec![0.0; n], u3: vec![0.0; n] }
    }

    fn ensure(&mut self, n: usize) {
        if self.k.len() != n {
            *self = Self::sized(n);
        }
    }
}

fn check_finite(y: &[f64], t: f64, stage: usize) -> Result<(), TimeIntError> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(TimeIntError::NonFinite { t, stage })
    }
}

/// One Shu-Osher SSPRK(3,3) step:
/// `u1 = u + dt L(u)`, `u2 = 3/4 u + 1/4 (u1 + dt L(u1))`,
/// `u_next = 1/3 u + 2/3 (u2 + dt L(u2))`.
pub fn step_ssprk33(
    sys: &mut impl OdeSystem,
    t: f64,
    y: &mut [f64],
    dt: f64,
    buf: &mut StageBuffers,
) -> Result<(), TimeIntError> {
    let n = y.len();
    buf.ensure(n);
    sys.prepare_state(t, y);
    sys.eval(t, y, &mut buf.k);
    for i in 0..n {
        buf.u1[i] = y[i] + dt * buf.k[i];
    }
    check_finite(&buf.u1, t, 1)?;

    sys.prepare_state(t + dt, &mut buf.u1);
    sys.eval(t + dt, &buf.u1, &mut buf.k);
    for i in 0..n {
        buf.u2[i] = 0.75 * y[i] + 0.25 * (buf.u1[i] + dt * buf.k[i]);
    }
    check_finite(&buf.u2, t, 2)?;

    sys.prepare_state(t + 0.5 * dt, &mut buf.u2);
    sys.eval(t + 0.5 * dt, &buf.u2, &mut buf.k);
    for i in 0..n {
        y[i] = (y[i] + 2.0 * (buf.u2[i] + dt * buf.k[i])) / 3.0;
    }
    check_finite(y, t, 3)?;
    sys.prepare_state(t + dt, y);
    Ok(())
}

// Spiteri-Ruuth SSPRK(5,4) coefficients.
const SSP54_B10: f64 = 0.391752226571890;
const SSP54_A20: f64 = 0.444370493651235;
const SSP54_A21: f64 = 0.555629506348765;
const SSP54_B21: f64 = 0.368410593050371;
const SSP54_A30: f64 = 0.620101851488403;
const SSP54_A32: f64 = 0.379898148511597;
const SSP54_B32: f64 = 0.251891774271694;
const SSP54_A40: f64 = 0.178079954393132;
const SSP54_A43: f64 = 0.821920045606868;
const SSP54_B43: f64 = 0.544974750228521;
const SSP54_C2: f64 = 0.517231671970585;
const SSP54_C3: f64 = 0.096059710526147;
const SSP54_D3: f64 = 0.063692468666290;
const SSP54_C4: f64 = 0.386708617503269;
const SSP54_D4: f64 = 0.226007483236906;

/// One five-stage fourth-order SSP step.
pub fn step_ssprk54(
    sys: &mut impl OdeSystem,
    t: f64,
    y: &mut [f64],
    dt: f64,
    buf: &mut StageBuffers,
) -> Result<(), TimeIntError> {
    let n = y.len();
    buf.ensure(n);
    // stage times track the Shu-Osher convex combinations
    let t1 = t + SSP54_B10 * dt;
    let t2 = t + (SSP54_A21 * SSP54_B10 + SSP54_B21) * dt;
    let t3 = t + (SSP54_A32 * (SSP54_A21 * SSP54_B10 + SSP54_B21) + SSP54_B32) * dt;
    let t4 = t
        + (SSP54_A43 * (SSP54_A32 * (SSP54_A21 * SSP54_B10 + SSP54_B21) + SSP54_B32) + SSP54_B43)
            * dt;

    sys.prepare_state(t, y);
    sys.eval(t, y, &mut buf.k);
    for i in 0..n {
        buf.u1[i] = y[i] + SSP54_B10 * dt * buf.k[i];
    }
    check_finite(&buf.u1, t, 1)?;

    sys.prepare_state(t1, &mut buf.u1);
    sys.eval(t1, &buf.u1, &mut buf.k);
    for i in 0..n {
        buf.u2[i] = SSP54_A20 * y[i] + SSP54_A21 * buf.u1[i] + SSP54_B21 * dt * buf.k[i];
    }
    check_finite(&buf.u2, t, 2)?;

    sys.prepare_state(t2, &mut buf.u2);
    sys.eval(t2, &buf.u2, &mut buf.k);
    for i in 0..n {
        buf.u3[i] = SSP54_A30 * y[i] + SSP54_A32 * buf.u2[i] + SSP54_B32 * dt * buf.k[i];
    }
    check_finite(&buf.u3, t, 3)?;

    sys.prepare_state(t3, &mut buf.u3);
    sys.eval(t3, &buf.u3, &mut buf.k2); // L(u3), reused in the final combination
    for i in 0..n {
        buf.u1[i] = SSP54_A40 * y[i] + SSP54_A43 * buf.u3[i] + SSP54_B43 * dt * buf.k2[i];
    }
    check_finite(&buf.u1, t, 4)?;

    sys.prepare_state(t4, &mut buf.u1);
    sys.eval(t4, &buf.u1, &mut buf.k);
    for i in 0..n {
        y[i] = SSP54_C2 * buf.u2[i]
            + SSP54_C3 * buf.u3[i]
            + SSP54_D3 * dt * buf.k2[i]
            + SSP54_C4 * buf.u1[i]
            + SSP54_D4 * dt * buf.k[i];
    }
    check_finite(y, t, 5)?;
    sys.prepare_state(t + dt, y);
    Ok(())
}

pub fn step(
    scheme: Scheme,
    sys: &mut impl OdeSystem,
    t: f64,
    y: &mut [f64],
    dt: f64,
    buf: &mut StageBuffers,
) -> Result<(), TimeIntError> {
    match scheme {
        Scheme::SspRk33 => step_ssprk33(sys, t, y, dt, buf),
        Scheme::SspRk54 => step_ssprk54(sys, t, y, dt, buf),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;
    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = -y[0];
        }
    }

    struct Zero;
    impl OdeSystem for Zero {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&mut self, _t: f64, _y: &[f64], dy: &mut [f64]) {
            dy[0] = 0.0;
        }
    }

    /// y' = i w y as a 2D real rotation, for stability checks.
    struct Rotation(f64);
    impl OdeSystem for Rotation {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = -self.0 * y[1];
            dy[1] = self.0 * y[0];
        }
    }

    #[test]
    fn zero_rhs_leaves_state_unchanged() {
        let mut y = vec![1.25];
        let mut buf = StageBuffers::default();
        step_ssprk33(&mut Zero, 0.0, &mut y, 0.1, &mut buf).unwrap();
        assert_eq!(y[0], 1.25);
        // the published SSPRK54 combination weights sum to 1 + O(1e-15)
        step_ssprk54(&mut Zero, 0.0, &mut y, 0.1, &mut buf).unwrap();
        assert!((y[0] - 1.25).abs() < 1e-14);
    }

    #[test]
    fn ssprk33_single_step_matches_third_order_taylor() {
        // Linear problem: the Shu-Osher combination reproduces the cubic
        // Taylor polynomial of e^{-dt} exactly:
        // 1 - 0.1 + 0.005 - 1/6000 = 0.9048333...
        let mut y = vec![1.0];
        let mut buf = StageBuffers::default();
        step_ssprk33(&mut Decay, 0.0, &mut y, 0.1, &mut buf).unwrap();
        let expect = 1.0 - 0.1 + 0.005 - 1.0 / 6000.0;
        assert!((y[0] - expect).abs() < 1e-15, "{} vs {expect}", y[0]);
    }

    fn observed_order(scheme: Scheme) -> f64 {
        let run = |dt: f64| {
            let mut y = vec![1.0];
            let mut buf = StageBuffers::default();
            let steps = (1.0 / dt).round() as usize;
            for k in 0..steps {
                step(scheme, &mut Decay, k as f64 * dt, &mut y, dt, &mut buf).unwrap();
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        let e1 = run(0.05);
        let e2 = run(0.025);
        (e1 / e2).log2()
    }

    #[test]
    fn ssprk33_observed_order_is_three() {
        let p = observed_order(Scheme::SspRk33);
        assert!((p - 3.0).abs() < 0.1, "observed order {p}");
    }

    #[test]
    fn ssprk54_observed_order_is_four() {
        let p = observed_order(Scheme::SspRk54);
        assert!(p >= 3.9, "observed order {p}");
    }

    #[test]
    fn ssprk33_amplification_inside_stability_region() {
        // real axis: lambda dt = -1
        let mut y = vec![1.0];
        let mut buf = StageBuffers::default();
        step_ssprk33(&mut Decay, 0.0, &mut y, 1.0, &mut buf).unwrap();
        assert!(y[0].abs() <= 1.0);
        // imaginary axis: |z| = 1.7 < sqrt(3)
        let mut y = vec![1.0, 0.0];
        step_ssprk33(&mut Rotation(1.7), 0.0, &mut y, 1.0, &mut buf).unwrap();
        let amp = (y[0] * y[0] + y[1] * y[1]).sqrt();
        assert!(amp <= 1.0, "amplification {amp}");
    }

    #[test]
    fn rayleigh_relaxation_single_step_matches_taylor() {
        // q' = -gamma (q - q0), gamma = 2, dt = 1e-3: one SSP-RK3 step
        // agrees with exp(-gamma dt) through O(dt^4)
        struct Relax;
        impl OdeSystem for Relax {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
                dy[0] = -2.0 * (y[0] - 1.0);
            }
        }
        let mut y = vec![2.0];
        let mut buf = StageBuffers::default();
        step_ssprk33(&mut Relax, 0.0, &mut y, 1e-3, &mut buf).unwrap();
        let exact = 1.0 + (2.0f64 - 1.0) * (-2.0 * 1e-3f64).exp();
        assert!((y[0] - exact).abs() < 1e-12, "{} vs {exact}", y[0]);
    }

    #[test]
    fn nan_detection_aborts() {
        struct Bad;
        impl OdeSystem for Bad {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&mut self, _t: f64, _y: &[f64], dy: &mut [f64]) {
                dy[0] = f64::NAN;
            }
        }
        let mut y = vec![1.0];
        let mut buf = StageBuffers::default();
        assert!(matches!(
            step_ssprk33(&mut Bad, 0.0, &mut y, 0.1, &mut buf),
            Err(TimeIntError::NonFinite { .. })
        ));
    }
}
