//! Load-frequency control of an isolated PV / solar-thermal microgrid.
//!
//! The crate models the microgrid as first-order lags feeding a single frequency
//! deviation, and ships three secondary controllers for it: a filtered PID, a PID tuned by a
//! (modified) whale optimisation search, and a NARMA-L2 neural controller trained with
//! Levenberg-Marquardt. [`workflow`] ties them into scenario runs with reproducible artifacts.

pub mod controllers;
pub mod error;
pub mod io;
pub mod metrics;
pub mod narma;
pub mod optimizer;
pub mod plant;
pub mod scenario;
pub mod simulation;
pub mod workflow;

pub use controllers::{ActiveController, Controller, PidController, PidGains};
pub use error::{Error, Result};
pub use metrics::{compute_metrics, FitnessIndex, RunMetrics, SettlingBand};
pub use plant::{MicrogridModel, MicrogridParams, MicrogridState};
pub use scenario::{ControllerKind, Scenario};
pub use simulation::{simulate, Disturbances, RunOptions, Trace};
