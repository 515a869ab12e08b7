//! Closed-loop stepping of the plant under a controller, recorded as a trace.

use crate::controllers::Controller;
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::plant::{Exogenous, LoadProfile, MicrogridModel, MicrogridState, Unit};

/// |Δf| beyond which a run is declared divergent, Hz.
pub const DIVERGENCE_GUARD_HZ: f64 = 100.0;

pub const TRACE_CSV_HEADER: &str =
    "t,delta_f,dp_mtg,dp_deg,dp_fc,dp_bess,dp_fess,dp_pv,dp_stpg,load,u";

/// Uniformly sampled record of a run. Row `k` holds the state at `t_k`, the load applied
/// from `t_k`, and the control signal issued at `t_k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub h: f64,
    pub t: Vec<f64>,
    pub delta_f: Vec<f64>,
    /// Unit outputs in [`Unit::ALL`] order.
    pub dp: [Vec<f64>; 7],
    pub load: Vec<f64>,
    pub u: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn unit(&self, unit: Unit) -> &[f64] {
        &self.dp[unit as usize]
    }

    pub fn duration(&self) -> f64 {
        self.t.last().copied().unwrap_or(0.0)
    }

    fn push(&mut self, t: f64, s: &MicrogridState, load: f64, u: f64) {
        self.t.push(t);
        self.delta_f.push(s.delta_f);
        for unit in Unit::ALL {
            self.dp[unit as usize].push(s.unit(unit));
        }
        self.load.push(load);
        self.u.push(u);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 300);
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for k in 0..self.len() {
            let mut row = vec![fmt_f64(self.t[k]), fmt_f64(self.delta_f[k])];
            row.extend(self.dp.iter().map(|c| fmt_f64(c[k])));
            row.push(fmt_f64(self.load[k]));
            row.push(fmt_f64(self.u[k]));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Load demand and the exogenous PV / solar-thermal schedules.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Disturbances {
    pub load: LoadProfile,
    pub pv: LoadProfile,
    pub stpg: LoadProfile,
}

impl Disturbances {
    pub fn load_only(load: LoadProfile) -> Self {
        Self {
            load,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub duration: f64,
    /// Abort once |Δf| exceeds this, Hz.
    pub divergence_guard: Option<f64>,
}

impl RunOptions {
    pub fn new(duration: f64) -> Self {
        Self {
            duration,
            divergence_guard: None,
        }
    }

    pub fn guarded(duration: f64) -> Self {
        Self {
            duration,
            divergence_guard: Some(DIVERGENCE_GUARD_HZ),
        }
    }
}

/// Number of steps covering `duration` at step `h`.
pub fn step_count(duration: f64, h: f64) -> usize {
    (duration / h).round() as usize
}

/// Runs from equilibrium for `opts.duration`, producing `steps + 1` rows (both ends included).
pub fn simulate<C: Controller + ?Sized>(
    model: &MicrogridModel,
    dist: &Disturbances,
    controller: &mut C,
    opts: RunOptions,
) -> Result<Trace> {
    let h = model.h();
    let steps = step_count(opts.duration, h);
    let limits = model.u_limits();
    let mut trace = Trace {
        h,
        ..Default::default()
    };
    let mut state = MicrogridState::default();
    for k in 0..=steps {
        // index-based time keeps schedule lookups free of accumulated rounding
        let t = k as f64 * h;
        let load = dist.load.level_at(t);
        let u = limits.clamp(controller.control(state.delta_f));
        if !u.is_finite() {
            return Err(Error::SimulationAbort { field: "u", t });
        }
        trace.push(t, &state, load, u);
        if k == steps {
            break;
        }
        let exo = Exogenous {
            pv: dist.pv.level_at(t),
            stpg: dist.stpg.level_at(t),
        };
        state = model.step(&state, u, load, exo)?;
        state.t = (k + 1) as f64 * h;
        if let Some(guard) = opts.divergence_guard {
            if state.delta_f.abs() > guard {
                return Err(Error::Diverged {
                    t: state.t,
                    delta_f: state.delta_f,
                });
            }
        }
    }
    Ok(trace)
}
