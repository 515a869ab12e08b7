//! Discrete-time small-signal model of the hybrid microgrid.
//!
//! Every unit (micro-turbine, diesel, fuel cell, battery, flywheel, PV, solar-thermal) is a
//! unit-gain first-order lag. The controller's single signal `u` is split across the
//! controllable units by dispatch weights; PV and solar-thermal follow exogenous schedules.
//! The frequency deviation obeys `M d(Δf)/dt = ΔP_net - D Δf`.
//!
//! All elements are advanced with their exact zero-order-hold solution at a fixed step.
//! Within a step the unit outputs are advanced first, and the frequency update holds
//! `ΔP_net` at the freshly advanced unit outputs.

mod block;
mod profile;
mod pv_cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violations};

pub use block::FirstOrderBlock;
pub use profile::LoadProfile;
pub use pv_cell::{pv_cell_current, PvCellParams};

pub(crate) use block::{lag_decay, zoh_advance};

/// Microgrid units, in the column order used by traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Unit {
    Mtg,
    Deg,
    Fc,
    Bess,
    Fess,
    Pv,
    Stpg,
}

impl Unit {
    pub const ALL: [Unit; 7] = [
        Unit::Mtg,
        Unit::Deg,
        Unit::Fc,
        Unit::Bess,
        Unit::Fess,
        Unit::Pv,
        Unit::Stpg,
    ];

    /// Units driven by the controller.
    pub const CONTROLLABLE: [Unit; 5] = [Unit::Mtg, Unit::Deg, Unit::Fc, Unit::Bess, Unit::Fess];

    pub fn name(self) -> &'static str {
        match self {
            Unit::Mtg => "mtg",
            Unit::Deg => "deg",
            Unit::Fc => "fc",
            Unit::Bess => "bess",
            Unit::Fess => "fess",
            Unit::Pv => "pv",
            Unit::Stpg => "stpg",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Share of the control signal routed to each controllable unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchWeights {
    pub mtg: f64,
    pub deg: f64,
    pub fc: f64,
    pub bess: f64,
    pub fess: f64,
}

impl DispatchWeights {
    pub fn uniform() -> Self {
        Self {
            mtg: 0.2,
            deg: 0.2,
            fc: 0.2,
            bess: 0.2,
            fess: 0.2,
        }
    }

    /// All of the signal to one unit. `unit` must be controllable.
    pub fn only(unit: Unit) -> Self {
        let mut w = Self {
            mtg: 0.0,
            deg: 0.0,
            fc: 0.0,
            bess: 0.0,
            fess: 0.0,
        };
        match unit {
            Unit::Mtg => w.mtg = 1.0,
            Unit::Deg => w.deg = 1.0,
            Unit::Fc => w.fc = 1.0,
            Unit::Bess => w.bess = 1.0,
            Unit::Fess => w.fess = 1.0,
            Unit::Pv | Unit::Stpg => panic!("{unit:?} is not dispatchable"),
        }
        w
    }

    pub fn weight(&self, unit: Unit) -> f64 {
        match unit {
            Unit::Mtg => self.mtg,
            Unit::Deg => self.deg,
            Unit::Fc => self.fc,
            Unit::Bess => self.bess,
            Unit::Fess => self.fess,
            Unit::Pv | Unit::Stpg => 0.0,
        }
    }
}

impl Default for DispatchWeights {
    fn default() -> Self {
        Self::uniform()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub min: f64,
    pub max: f64,
}

impl Limits {
    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            min: -1.0,
            max: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MicrogridParams {
    /// Load damping D, pu/Hz.
    pub d_damping: f64,
    /// Inertia M, the coefficient of `s` in `1 / (M s + D)`.
    pub m_inertia: f64,
    pub t_mtg: f64,
    pub t_deg: f64,
    pub t_fc: f64,
    pub t_bess: f64,
    pub t_fess: f64,
    pub t_pv: f64,
    pub t_stpg: f64,
    pub dispatch_weights: DispatchWeights,
    /// Actuator range for the control signal, pu.
    pub u_limits: Limits,
    /// Integration step, s.
    pub step_h: f64,
}

impl Default for MicrogridParams {
    fn default() -> Self {
        Self {
            d_damping: 0.012,
            m_inertia: 0.2,
            t_mtg: 2.0,
            t_deg: 2.0,
            t_fc: 4.0,
            t_bess: 0.1,
            t_fess: 0.1,
            t_pv: 1.8,
            t_stpg: 1.2,
            dispatch_weights: DispatchWeights::uniform(),
            u_limits: Limits::default(),
            step_h: 0.01,
        }
    }
}

impl MicrogridParams {
    pub fn time_constant(&self, unit: Unit) -> f64 {
        match unit {
            Unit::Mtg => self.t_mtg,
            Unit::Deg => self.t_deg,
            Unit::Fc => self.t_fc,
            Unit::Bess => self.t_bess,
            Unit::Fess => self.t_fess,
            Unit::Pv => self.t_pv,
            Unit::Stpg => self.t_stpg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.violations().into_result()
    }

    pub(crate) fn violations(&self) -> Violations {
        let mut v = Violations::default();
        let mut t_min = f64::INFINITY;
        for unit in Unit::ALL {
            let t = self.time_constant(unit);
            let ok = t > 0.0 && t.is_finite();
            v.check(ok, || format!("t_{}: must be > 0, got {t}", unit.name()));
            if ok {
                t_min = t_min.min(t);
            }
        }
        v.check(self.d_damping > 0.0 && self.d_damping.is_finite(), || {
            format!("d_damping: must be > 0, got {}", self.d_damping)
        });
        v.check(self.m_inertia > 0.0 && self.m_inertia.is_finite(), || {
            format!("m_inertia: must be > 0, got {}", self.m_inertia)
        });
        v.check(self.step_h > 0.0, || {
            format!("step_h: must be > 0, got {}", self.step_h)
        });
        if t_min.is_finite() {
            v.check(self.step_h < t_min / 5.0, || {
                format!(
                    "step_h: must be < min time constant / 5 = {}, got {}",
                    t_min / 5.0,
                    self.step_h
                )
            });
        }
        let mut sum = 0.0;
        for unit in Unit::CONTROLLABLE {
            let w = self.dispatch_weights.weight(unit);
            v.check(w >= 0.0 && w.is_finite(), || {
                format!("dispatch_weights.{}: must be >= 0, got {w}", unit.name())
            });
            sum += w;
        }
        v.check((sum - 1.0).abs() <= 1e-9, || {
            format!("dispatch_weights: must sum to 1, got {sum}")
        });
        let lim = self.u_limits;
        v.check(
            lim.min < lim.max && lim.min.is_finite() && lim.max.is_finite(),
            || {
                format!(
                    "u_limits: need finite min < max, got ({}, {})",
                    lim.min, lim.max
                )
            },
        );
        v
    }
}

/// Deviations from the pre-disturbance equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MicrogridState {
    /// Frequency deviation, Hz.
    pub delta_f: f64,
    pub dp_mtg: f64,
    pub dp_deg: f64,
    pub dp_fc: f64,
    /// Signed: positive discharges into the bus, negative is charging.
    pub dp_bess: f64,
    /// Signed like `dp_bess`.
    pub dp_fess: f64,
    pub dp_pv: f64,
    pub dp_stpg: f64,
    pub t: f64,
}

impl MicrogridState {
    pub fn unit(&self, unit: Unit) -> f64 {
        match unit {
            Unit::Mtg => self.dp_mtg,
            Unit::Deg => self.dp_deg,
            Unit::Fc => self.dp_fc,
            Unit::Bess => self.dp_bess,
            Unit::Fess => self.dp_fess,
            Unit::Pv => self.dp_pv,
            Unit::Stpg => self.dp_stpg,
        }
    }

    fn unit_mut(&mut self, unit: Unit) -> &mut f64 {
        match unit {
            Unit::Mtg => &mut self.dp_mtg,
            Unit::Deg => &mut self.dp_deg,
            Unit::Fc => &mut self.dp_fc,
            Unit::Bess => &mut self.dp_bess,
            Unit::Fess => &mut self.dp_fess,
            Unit::Pv => &mut self.dp_pv,
            Unit::Stpg => &mut self.dp_stpg,
        }
    }

    fn first_non_finite(&self) -> Option<&'static str> {
        let fields = [
            ("dp_mtg", self.dp_mtg),
            ("dp_deg", self.dp_deg),
            ("dp_fc", self.dp_fc),
            ("dp_bess", self.dp_bess),
            ("dp_fess", self.dp_fess),
            ("dp_pv", self.dp_pv),
            ("dp_stpg", self.dp_stpg),
            // last, since a bad unit output propagates into it
            ("delta_f", self.delta_f),
        ];
        fields.iter().find(|(_, v)| !v.is_finite()).map(|(n, _)| *n)
    }
}

/// Signed power balance: generation plus storage discharge minus load.
pub fn net_power(state: &MicrogridState, load: f64) -> f64 {
    state.dp_mtg
        + state.dp_deg
        + state.dp_fc
        + state.dp_pv
        + state.dp_stpg
        + state.dp_bess
        + state.dp_fess
        - load
}

/// Exogenous drive for the uncontrolled units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Exogenous {
    pub pv: f64,
    pub stpg: f64,
}

/// Parameters plus the per-step coefficients derived from them.
#[derive(Debug, Clone)]
pub struct MicrogridModel {
    params: MicrogridParams,
    unit_decay: [f64; 7],
    freq_decay: f64,
}

impl MicrogridModel {
    pub fn new(params: MicrogridParams) -> Result<Self> {
        params.validate()?;
        let h = params.step_h;
        let unit_decay = Unit::ALL.map(|u| lag_decay(h, params.time_constant(u)));
        let freq_decay = lag_decay(h, params.m_inertia / params.d_damping);
        Ok(Self {
            params,
            unit_decay,
            freq_decay,
        })
    }

    pub fn params(&self) -> &MicrogridParams {
        &self.params
    }

    pub fn h(&self) -> f64 {
        self.params.step_h
    }

    pub fn u_limits(&self) -> Limits {
        self.params.u_limits
    }

    /// Advances one step of `step_h` with the control signal, load and exogenous inputs held.
    pub fn step(
        &self,
        state: &MicrogridState,
        u: f64,
        load: f64,
        exo: Exogenous,
    ) -> Result<MicrogridState> {
        if !u.is_finite() {
            return Err(Error::SimulationAbort {
                field: "u",
                t: state.t,
            });
        }
        let u = self.params.u_limits.clamp(u);
        let w = &self.params.dispatch_weights;
        let mut next = *state;
        for unit in Unit::ALL {
            let input = match unit {
                Unit::Pv => exo.pv,
                Unit::Stpg => exo.stpg,
                _ => w.weight(unit) * u,
            };
            let slot = next.unit_mut(unit);
            *slot = zoh_advance(*slot, input, self.unit_decay[unit.index()]);
        }
        // Δf' = (ΔP_net - D Δf) / M, equilibrium at ΔP_net / D
        let p_net = net_power(&next, load);
        next.delta_f = zoh_advance(
            state.delta_f,
            p_net / self.params.d_damping,
            self.freq_decay,
        );
        next.t = state.t + self.params.step_h;
        if let Some(field) = next.first_non_finite() {
            return Err(Error::SimulationAbort { field, t: next.t });
        }
        Ok(next)
    }
}

/// Free-function form of [`MicrogridModel::step`] with PV and solar-thermal at zero deviation.
pub fn plant_step(
    model: &MicrogridModel,
    state: &MicrogridState,
    u: f64,
    load: f64,
) -> Result<MicrogridState> {
    model.step(state, u, load, Exogenous::default())
}
