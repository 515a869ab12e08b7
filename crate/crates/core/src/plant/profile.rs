use serde::{Deserialize, Serialize};

use crate::error::Violations;

/// Piecewise-constant schedule: each `(time, level)` step holds from its time onward.
///
/// Used for the load demand and for the exogenous PV / solar-thermal inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub steps: Vec<(f64, f64)>,
}

impl LoadProfile {
    pub fn constant(level: f64) -> Self {
        Self {
            steps: vec![(0.0, level)],
        }
    }

    /// `base` from t = 0, then `base + extra` from `at` onward.
    pub fn step_at(base: f64, at: f64, extra: f64) -> Self {
        Self {
            steps: vec![(0.0, base), (at, base + extra)],
        }
    }

    pub fn level_at(&self, t: f64) -> f64 {
        // steps are sorted, so the active one is the last whose time is <= t
        let idx = self.steps.partition_point(|&(ts, _)| ts <= t);
        if idx == 0 {
            0.0
        } else {
            self.steps[idx - 1].1
        }
    }

    pub fn last_step_time(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.0)
    }

    pub(crate) fn validate(&self) -> Violations {
        let mut v = Violations::default();
        v.check(!self.steps.is_empty(), || "steps: must not be empty".into());
        if let Some(&(t0, _)) = self.steps.first() {
            v.check(t0 == 0.0, || format!("steps[0].time: must be 0, got {t0}"));
        }
        for (i, w) in self.steps.windows(2).enumerate() {
            v.check(w[1].0 > w[0].0, || {
                format!(
                    "steps[{}].time: must be strictly increasing ({} after {})",
                    i + 1,
                    w[1].0,
                    w[0].0
                )
            });
        }
        for (i, &(t, level)) in self.steps.iter().enumerate() {
            v.check(t.is_finite() && level.is_finite(), || {
                format!("steps[{i}]: must be finite")
            });
        }
        v
    }
}

impl Default for LoadProfile {
    fn default() -> Self {
        Self::constant(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delayed_step_switches_at_its_time() {
        let p = LoadProfile::step_at(0.4, 4.0, 0.3);
        assert_eq!(p.level_at(0.0), 0.4);
        assert_eq!(p.level_at(3.99), 0.4);
        assert_eq!(p.level_at(4.0), 0.7);
        assert_eq!(p.level_at(4.01), 0.7);
        assert_eq!(p.level_at(100.0), 0.7);
    }

    #[test]
    fn validation_reports_each_problem() {
        let p = LoadProfile {
            steps: vec![(1.0, 0.2), (0.5, 0.1), (2.0, f64::NAN)],
        };
        let msgs = match p.validate().into_result() {
            Err(crate::Error::Validation(m)) => m,
            other => panic!("{other:?}"),
        };
        assert_eq!(msgs.len(), 3, "{msgs:?}");
        assert!(LoadProfile::constant(0.2).validate().into_result().is_ok());
        assert!(LoadProfile { steps: vec![] }
            .validate()
            .into_result()
            .is_err());
    }
}
