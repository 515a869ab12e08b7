use crate::error::{Error, Result};

/// `gain / (T s + 1)` lag, the model shared by every generation and storage unit.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderBlock {
    pub gain: f64,
    pub time_constant: f64,
    /// Current output, pu.
    pub state: f64,
}

impl FirstOrderBlock {
    pub fn new(gain: f64, time_constant: f64) -> Result<Self> {
        if !(time_constant > 0.0 && time_constant.is_finite()) {
            return Err(Error::Validation(vec![format!(
                "time_constant must be finite and > 0, got {time_constant}"
            )]));
        }
        if !gain.is_finite() {
            return Err(Error::Validation(vec![format!(
                "gain must be finite, got {gain}"
            )]));
        }
        Ok(Self {
            gain,
            time_constant,
            state: 0.0,
        })
    }

    /// Advances the block by `h` seconds with `input` held constant and returns the new output.
    ///
    /// The update is the exact zero-order-hold solution, so for piecewise-constant inputs the
    /// result does not depend on how the interval is subdivided.
    pub fn step(&mut self, input: f64, h: f64) -> Result<f64> {
        debug_assert!(h > 0.0);
        if !input.is_finite() {
            return Err(Error::SimulationAbort {
                field: "block input",
                t: f64::NAN,
            });
        }
        self.state = zoh_advance(
            self.state,
            self.gain * input,
            lag_decay(h, self.time_constant),
        );
        Ok(self.state)
    }

    pub fn output(&self) -> f64 {
        self.state
    }

    pub fn reset(&mut self) {
        self.state = 0.0;
    }
}

/// Per-step decay factor `exp(-h / T)`.
pub(crate) fn lag_decay(h: f64, time_constant: f64) -> f64 {
    (-h / time_constant).exp()
}

/// `alpha * state + (1 - alpha) * target`, written so that a state already at the target stays
/// there exactly.
#[inline]
pub(crate) fn zoh_advance(state: f64, target: f64, alpha: f64) -> f64 {
    target + alpha * (state - target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_seconds_of_unit_step_reaches_one_time_constant() {
        let mut b = FirstOrderBlock::new(1.0, 2.0).unwrap();
        for _ in 0..200 {
            b.step(1.0, 0.01).unwrap();
        }
        assert_abs_diff_eq!(b.output(), 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.output(), 0.63212, epsilon = 1e-5);
    }

    #[test]
    fn zero_input_stays_zero() {
        let mut b = FirstOrderBlock::new(1.0, 0.1).unwrap();
        for _ in 0..10_000 {
            assert_eq!(b.step(0.0, 0.01).unwrap(), 0.0);
        }
    }

    #[test]
    fn held_input_converges_to_gain_times_input() {
        for &t in &[0.1, 1.2, 4.0] {
            let mut b = FirstOrderBlock::new(1.0, t).unwrap();
            for _ in 0..(100.0 * t / 0.01) as usize {
                b.step(0.37, 0.01).unwrap();
            }
            assert_abs_diff_eq!(b.output(), 0.37, epsilon = 1e-12);
        }
        let mut b = FirstOrderBlock::new(2.5, 0.5).unwrap();
        for _ in 0..10_000 {
            b.step(0.2, 0.01).unwrap();
        }
        assert_abs_diff_eq!(b.output(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_time_constant_and_non_finite_input() {
        assert!(FirstOrderBlock::new(1.0, 0.0).is_err());
        assert!(FirstOrderBlock::new(1.0, -1.0).is_err());
        assert!(FirstOrderBlock::new(1.0, f64::NAN).is_err());
        let mut b = FirstOrderBlock::new(1.0, 1.0).unwrap();
        assert!(matches!(
            b.step(f64::INFINITY, 0.01),
            Err(Error::SimulationAbort { .. })
        ));
    }

    #[test]
    fn step_response_never_overshoots() {
        let mut b = FirstOrderBlock::new(1.0, 0.1).unwrap();
        let mut prev = 0.0;
        for _ in 0..5000 {
            let y = b.step(1.0, 0.01).unwrap();
            assert!(y >= prev && y <= 1.0);
            prev = y;
        }
    }
}
