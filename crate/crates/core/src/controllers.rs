//! Load-frequency controllers.
//!
//! A controller sees the frequency deviation once per step and returns the control signal
//! dispatched to the microgrid. The regulation target is always Δf = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Result, Violations};
use crate::narma::NarmaController;
use crate::plant::Limits;

/// First-order derivative filter bandwidth, rad/s.
pub const DERIVATIVE_FILTER_N: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    /// Untuned reference gains used as the "conventional PID" in comparisons.
    pub const BASELINE: PidGains = PidGains {
        kp: 1.0,
        ki: 0.5,
        kd: 0.3,
    };

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            kp: x[0],
            ki: x[1],
            kd: x[2],
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.kp, self.ki, self.kd]
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        for (name, g) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            v.check(g.is_finite() && g >= 0.0, || {
                format!("{name}: must be finite and >= 0, got {g}")
            });
        }
        v.into_result()
    }
}

impl Default for PidGains {
    fn default() -> Self {
        Self::BASELINE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    /// Running integral of the error, Hz·s.
    pub integral: f64,
    pub last_measurement: f64,
    /// Low-pass filtered derivative of the measurement, Hz/s.
    pub filtered_derivative: f64,
}

/// One step of a parallel-form PID with the derivative taken on the measurement.
///
/// With a zero setpoint the measurement is `-error`. The integrator is frozen while the output
/// is saturated in the direction the error would push it further.
pub fn pid_step(
    gains: &PidGains,
    state: &PidState,
    error: f64,
    h: f64,
    limits: Limits,
) -> (f64, PidState) {
    debug_assert!(h > 0.0);
    let measurement = -error;
    let raw_derivative = (measurement - state.last_measurement) / h;
    let beta = DERIVATIVE_FILTER_N * h / (1.0 + DERIVATIVE_FILTER_N * h);
    let filtered_derivative =
        state.filtered_derivative + beta * (raw_derivative - state.filtered_derivative);

    let candidate = state.integral + error * h;
    let unclamped = gains.kp * error + gains.ki * candidate - gains.kd * filtered_derivative;
    let winding_up =
        (unclamped > limits.max && error > 0.0) || (unclamped < limits.min && error < 0.0);
    let integral = if winding_up {
        state.integral
    } else {
        candidate
    };
    let u = limits.clamp(gains.kp * error + gains.ki * integral - gains.kd * filtered_derivative);

    (
        u,
        PidState {
            integral,
            last_measurement: measurement,
            filtered_derivative,
        },
    )
}

/// Anything that maps a frequency measurement to a control signal, once per step.
pub trait Controller {
    fn control(&mut self, delta_f: f64) -> f64;

    /// Clears all internal memory back to the equilibrium start.
    fn reset(&mut self);
}

#[derive(Debug, Clone)]
pub struct PidController {
    pub gains: PidGains,
    pub state: PidState,
    h: f64,
    limits: Limits,
}

impl PidController {
    pub fn new(gains: PidGains, h: f64, limits: Limits) -> Self {
        Self {
            gains,
            state: PidState::default(),
            h,
            limits,
        }
    }
}

impl Controller for PidController {
    fn control(&mut self, delta_f: f64) -> f64 {
        let (u, next) = pid_step(&self.gains, &self.state, -delta_f, self.h, self.limits);
        self.state = next;
        u
    }

    fn reset(&mut self) {
        self.state = PidState::default();
    }
}

/// A configured controller instance, one per simulation.
#[derive(Debug, Clone)]
pub enum ActiveController {
    /// Always outputs zero.
    Open,
    Pid(PidController),
    Narma(Box<NarmaController>),
}

impl Controller for ActiveController {
    fn control(&mut self, delta_f: f64) -> f64 {
        match self {
            ActiveController::Open => 0.0,
            ActiveController::Pid(c) => c.control(delta_f),
            ActiveController::Narma(c) => c.control(delta_f),
        }
    }

    fn reset(&mut self) {
        match self {
            ActiveController::Open => {}
            ActiveController::Pid(c) => c.reset(),
            ActiveController::Narma(c) => c.reset(),
        }
    }
}

/// Returns `controller` with all internal state zeroed.
pub fn controller_reset(mut controller: ActiveController) -> ActiveController {
    controller.reset();
    controller
}
