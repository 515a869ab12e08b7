use crate::controllers::{PidController, PidGains};
use crate::error::{Error, Result};
use crate::metrics::{series_metrics, FitnessIndex, SettlingBand};
use crate::plant::MicrogridModel;
use crate::simulation::{simulate, Disturbances, RunOptions};

use super::{woa_run, WoaConfig, WoaVariant};

/// Closed-loop scenario on which PID gains are scored.
#[derive(Debug, Clone)]
pub struct TuningProblem {
    pub model: MicrogridModel,
    pub disturbances: Disturbances,
    pub duration: f64,
    pub window: (f64, f64),
    pub index: FitnessIndex,
}

impl TuningProblem {
    /// Fitness of one gain set; divergent or non-finite runs score `+inf`.
    pub fn fitness(&self, gains: PidGains) -> f64 {
        let mut pid = PidController::new(gains, self.model.h(), self.model.u_limits());
        let Ok(trace) = simulate(
            &self.model,
            &self.disturbances,
            &mut pid,
            RunOptions::guarded(self.duration),
        ) else {
            return f64::INFINITY;
        };
        // the band does not enter the integral indices
        match series_metrics(
            &trace.t,
            &trace.delta_f,
            trace.h,
            SettlingBand::default(),
            self.window,
        ) {
            Ok(m) => {
                let f = m.index(self.index);
                if f.is_finite() {
                    f
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub gains: PidGains,
    pub best_fitness: f64,
    pub convergence_curve: Vec<f64>,
    pub seed: u64,
    pub variant: WoaVariant,
}

pub fn tune_pid(problem: &TuningProblem, cfg: &WoaConfig) -> Result<TuneResult> {
    if cfg.dim() != 3 {
        return Err(Error::Validation(vec![format!(
            "bounds: PID tuning searches (kp, ki, kd), need 3 dimensions, got {}",
            cfg.dim()
        )]));
    }
    let mut v = crate::error::Violations::default();
    for (i, &[lo, _]) in cfg.bounds.iter().enumerate() {
        v.check(lo >= 0.0, || {
            format!("bounds[{i}]: gains must be >= 0, got lower bound {lo}")
        });
    }
    v.into_result()?;
    let objective = |x: &[f64]| problem.fitness(PidGains::from_slice(x));
    let out = woa_run(cfg, &objective)?;
    Ok(TuneResult {
        gains: PidGains::from_slice(&out.best_position),
        best_fitness: out.best_fitness,
        convergence_curve: out.convergence_curve,
        seed: cfg.seed,
        variant: cfg.variant,
    })
}
