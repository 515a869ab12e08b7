//! Scenario files: one TOML document describing the plant, the disturbances, the controller
//! and how the run is scored.
//!
//! ```toml
//! schema_version = 1
//! name = "step02"
//! duration = 20.0
//! seed = 20170501
//! controller = "mwoa-pid"        # open-loop | pid | mwoa-pid | woa-pid | narma
//!
//! [load]
//! steps = [[0.0, 0.2]]           # (time s, level pu), held until the next step
//!
//! [mwoa_pid]
//! gains_file = "../artifacts/mwoa_gains.toml"
//!
//! [narma]
//! weights_file = "../artifacts/narma_weights.txt"
//! ```
//!
//! Every other section (`plant`, `pv`, `stpg`, `pid`, `woa_pid`, `metrics`) is optional and
//! falls back to defaults. Relative file paths are resolved against the scenario's directory.
//! The scenario `seed` drives both the whale search and the NARMA excitation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controllers::{ActiveController, PidController, PidGains};
use crate::error::{Error, Result, Violations};
use crate::io::{from_toml, read_file, to_toml, write_file};
use crate::metrics::{FitnessIndex, SettlingBand};
use crate::narma::{load_weights, Excitation, LmConfig, NarmaConfig, NarmaController, Split};
use crate::optimizer::{TuningProblem, WoaConfig, WoaVariant};
use crate::plant::{LoadProfile, MicrogridModel, MicrogridParams};
use crate::simulation::Disturbances;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    OpenLoop,
    Pid,
    MwoaPid,
    WoaPid,
    Narma,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 5] = [
        ControllerKind::OpenLoop,
        ControllerKind::Pid,
        ControllerKind::MwoaPid,
        ControllerKind::WoaPid,
        ControllerKind::Narma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::OpenLoop => "open-loop",
            ControllerKind::Pid => "pid",
            ControllerKind::MwoaPid => "mwoa-pid",
            ControllerKind::WoaPid => "woa-pid",
            ControllerKind::Narma => "narma",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// The search variant behind a tuned-PID kind.
    pub fn woa_variant(self) -> Option<WoaVariant> {
        match self {
            ControllerKind::MwoaPid => Some(WoaVariant::Modified),
            ControllerKind::WoaPid => Some(WoaVariant::Canonical),
            _ => None,
        }
    }
}

/// Where a tuned PID's gains live and how they are searched for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunedPidSettings {
    pub gains_file: Option<PathBuf>,
    pub agents: usize,
    pub max_iter: usize,
    /// `[lo, hi]` for kp, ki and kd.
    pub bounds: Vec<[f64; 2]>,
    pub b_spiral: f64,
    pub cf1: f64,
    pub cf2: f64,
}

impl Default for TunedPidSettings {
    fn default() -> Self {
        let c = WoaConfig::pid_tuning(WoaVariant::Modified, 0);
        Self {
            gains_file: None,
            agents: c.agents,
            max_iter: c.max_iter,
            bounds: c.bounds,
            b_spiral: c.b_spiral,
            cf1: c.cf1,
            cf2: c.cf2,
        }
    }
}

impl TunedPidSettings {
    pub fn woa_config(&self, variant: WoaVariant, seed: u64) -> WoaConfig {
        WoaConfig {
            variant,
            agents: self.agents,
            max_iter: self.max_iter,
            bounds: self.bounds.clone(),
            b_spiral: self.b_spiral,
            cf1: self.cf1,
            cf2: self.cf2,
            seed,
        }
    }
}

/// NARMA-L2 identification settings; the step comes from the plant, the seed from the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NarmaSettings {
    pub weights_file: Option<PathBuf>,
    pub n_delays_y: usize,
    pub n_delays_u: usize,
    pub hidden: usize,
    pub samples: usize,
    pub g_epsilon: f64,
    pub excitation: Excitation,
    pub split: Split,
    pub lm: LmConfig,
}

impl Default for NarmaSettings {
    fn default() -> Self {
        let c = NarmaConfig::default();
        Self {
            weights_file: None,
            n_delays_y: c.n_delays_y,
            n_delays_u: c.n_delays_u,
            hidden: c.hidden,
            samples: c.samples,
            g_epsilon: c.g_epsilon,
            excitation: c.excitation,
            split: c.split,
            lm: c.lm,
        }
    }
}

impl NarmaSettings {
    pub fn narma_config(&self, h: f64, seed: u64) -> NarmaConfig {
        NarmaConfig {
            n_delays_y: self.n_delays_y,
            n_delays_u: self.n_delays_u,
            hidden: self.hidden,
            samples: self.samples,
            h,
            excitation: self.excitation.clone(),
            split: self.split.clone(),
            lm: self.lm.clone(),
            g_epsilon: self.g_epsilon,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSettings {
    pub band: SettlingBand,
    /// `[t_start, t_end]`; the whole run when omitted.
    pub window: Option<[f64; 2]>,
    /// Index minimised when tuning.
    pub index: FitnessIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    /// Simulated horizon, s.
    pub duration: f64,
    pub seed: u64,
    pub controller: ControllerKind,
    #[serde(default)]
    pub plant: MicrogridParams,
    pub load: LoadProfile,
    #[serde(default = "zero_profile")]
    pub pv: LoadProfile,
    #[serde(default = "zero_profile")]
    pub stpg: LoadProfile,
    #[serde(default)]
    pub pid: PidGains,
    #[serde(default)]
    pub mwoa_pid: TunedPidSettings,
    #[serde(default = "canonical_defaults")]
    pub woa_pid: TunedPidSettings,
    #[serde(default)]
    pub narma: NarmaSettings,
    #[serde(default)]
    pub metrics: MetricsSettings,
    /// Directory that relative paths are resolved against; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn zero_profile() -> LoadProfile {
    LoadProfile::constant(0.0)
}

fn canonical_defaults() -> TunedPidSettings {
    // the correction factors are unused by the canonical search
    TunedPidSettings {
        cf1: 1.0,
        cf2: 1.0,
        ..Default::default()
    }
}

impl Scenario {
    /// A minimal scenario: default plant, a load step at t = 0, the baseline PID.
    pub fn step_load(name: &str, level: f64, duration: f64, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            duration,
            seed,
            controller: ControllerKind::Pid,
            plant: MicrogridParams::default(),
            load: LoadProfile::constant(level),
            pv: zero_profile(),
            stpg: zero_profile(),
            pid: PidGains::default(),
            mwoa_pid: TunedPidSettings::default(),
            woa_pid: canonical_defaults(),
            narma: NarmaSettings::default(),
            metrics: MetricsSettings::default(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut s: Scenario = from_toml(text, origin)?;
        s.base_dir = origin.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?, path)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        to_toml(self, Path::new(&self.name))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_toml_string()?)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn window(&self) -> (f64, f64) {
        self.metrics
            .window
            .map_or((0.0, self.duration), |[a, b]| (a, b))
    }

    pub fn disturbances(&self) -> Disturbances {
        Disturbances {
            load: self.load.clone(),
            pv: self.pv.clone(),
            stpg: self.stpg.clone(),
        }
    }

    pub fn model(&self) -> Result<MicrogridModel> {
        MicrogridModel::new(self.plant.clone())
    }

    pub fn tuned_settings(&self, kind: ControllerKind) -> Option<&TunedPidSettings> {
        match kind {
            ControllerKind::MwoaPid => Some(&self.mwoa_pid),
            ControllerKind::WoaPid => Some(&self.woa_pid),
            _ => None,
        }
    }

    pub fn tuning_problem(&self) -> Result<TuningProblem> {
        Ok(TuningProblem {
            model: self.model()?,
            disturbances: self.disturbances(),
            duration: self.duration,
            window: self.window(),
            index: self.metrics.index,
        })
    }

    pub fn narma_config(&self) -> NarmaConfig {
        self.narma.narma_config(self.plant.step_h, self.seed)
    }

    /// Checks the document itself; referenced files are checked by [`Scenario::controller_for`].
    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        v.check(self.schema_version == SCHEMA_VERSION, || {
            format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            )
        });
        v.check(!self.name.trim().is_empty(), || {
            "name: must not be empty".into()
        });
        v.check(self.duration.is_finite() && self.duration > 0.0, || {
            format!("duration: must be > 0, got {}", self.duration)
        });
        for (key, profile) in [("load", &self.load), ("pv", &self.pv), ("stpg", &self.stpg)] {
            v.extend(profile.validate().prefixed(key));
            let last = profile.last_step_time();
            v.check(last < self.duration, || {
                format!(
                    "{key}: last step at {last} s must fall before duration {} s",
                    self.duration
                )
            });
        }
        v.extend(self.plant.violations().prefixed("plant"));
        if let Err(Error::Validation(m)) = self.pid.validate() {
            m.into_iter().for_each(|m| v.push(format!("pid.{m}")));
        }
        for (key, kind) in [
            ("mwoa_pid", ControllerKind::MwoaPid),
            ("woa_pid", ControllerKind::WoaPid),
        ] {
            let s = self.tuned_settings(kind).expect("tuned kind");
            let cfg = s.woa_config(kind.woa_variant().expect("tuned kind"), self.seed);
            v.extend(cfg.violations().prefixed(key));
            v.check(s.bounds.len() == 3, || {
                format!(
                    "{key}.bounds: need 3 ranges (kp, ki, kd), got {}",
                    s.bounds.len()
                )
            });
            for (i, b) in s.bounds.iter().enumerate() {
                v.check(b[0] >= 0.0, || {
                    format!("{key}.bounds[{i}]: gains must be >= 0, got {}", b[0])
                });
            }
        }
        v.extend(self.narma_config().violations().prefixed("narma"));
        v.extend(self.metrics.band.violations().prefixed("metrics"));
        let (a, b) = self.window();
        v.check(a >= 0.0 && a < b && b <= self.duration + 1e-9, || {
            format!("metrics.window: need 0 <= start < end <= duration, got [{a}, {b}]")
        });
        v.into_result()
    }

    pub fn gains_path(&self, kind: ControllerKind) -> Result<PathBuf> {
        let key = match kind {
            ControllerKind::MwoaPid => "mwoa_pid",
            _ => "woa_pid",
        };
        self.tuned_settings(kind)
            .and_then(|s| s.gains_file.as_deref())
            .map(|p| self.resolve(p))
            .ok_or_else(|| {
                Error::Validation(vec![format!(
                    "{key}.gains_file: required for controller `{}`",
                    kind.name()
                )])
            })
    }

    pub fn weights_path(&self) -> Result<PathBuf> {
        self.narma
            .weights_file
            .as_deref()
            .map(|p| self.resolve(p))
            .ok_or_else(|| {
                Error::Validation(vec![
                    "narma.weights_file: required for controller `narma`".into()
                ])
            })
    }

    /// A fresh controller of the given kind, loading gains or weights from disk as needed.
    pub fn controller_for(&self, kind: ControllerKind) -> Result<ActiveController> {
        let h = self.plant.step_h;
        let limits = self.plant.u_limits;
        Ok(match kind {
            ControllerKind::OpenLoop => ActiveController::Open,
            ControllerKind::Pid => ActiveController::Pid(PidController::new(self.pid, h, limits)),
            ControllerKind::MwoaPid | ControllerKind::WoaPid => {
                let gains = GainsFile::load(&existing(self.gains_path(kind)?, kind)?)?.gains();
                ActiveController::Pid(PidController::new(gains, h, limits))
            }
            ControllerKind::Narma => {
                let net = load_weights(&existing(self.weights_path()?, kind)?)?;
                let cfg = self.narma_config();
                if net.n_delays_y != cfg.n_delays_y || net.n_delays_u != cfg.n_delays_u {
                    return Err(Error::Validation(vec![format!(
                        "narma: weights use delays ({}, {}) but the scenario asks for ({}, {})",
                        net.n_delays_y, net.n_delays_u, cfg.n_delays_y, cfg.n_delays_u
                    )]));
                }
                ActiveController::Narma(Box::new(NarmaController::new(net, cfg.g_epsilon, limits)))
            }
        })
    }
}

fn existing(path: PathBuf, kind: ControllerKind) -> Result<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::Validation(vec![format!(
            "controller `{}`: referenced file {} does not exist",
            kind.name(),
            path.display()
        )]))
    }
}

/// Output of a tuning run: the gains plus enough context to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainsFile {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub variant: WoaVariant,
    pub seed: u64,
    pub index: FitnessIndex,
    pub best_fitness: f64,
    pub scenario: String,
    pub search: TunedPidSettings,
}

impl GainsFile {
    pub fn gains(&self) -> PidGains {
        PidGains {
            kp: self.kp,
            ki: self.ki,
            kd: self.kd,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let g: GainsFile = from_toml(&read_file(path)?, path)?;
        if let Err(Error::Validation(m)) = g.gains().validate() {
            return Err(Error::format(path, m.join("; ")));
        }
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &to_toml(self, path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_fills_defaults() {
        let text = "schema_version = 1\nname = \"s\"\nduration = 20.0\nseed = 1\ncontroller = \"pid\"\n[load]\nsteps = [[0.0, 0.2]]\n";
        let s = Scenario::parse(text, Path::new("dir/s.toml")).unwrap();
        assert_eq!(s.plant, MicrogridParams::default());
        assert_eq!(s.pid, PidGains::BASELINE);
        assert_eq!(s.window(), (0.0, 20.0));
        assert_eq!(s.base_dir, Path::new("dir"));
        assert_eq!(s.woa_pid.cf1, 1.0);
        s.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "schema_version = 1\nname = \"s\"\nduration = 20.0\nseed = 1\ncontroller = \"pid\"\nfoo = 3\n[load]\nsteps = [[0.0, 0.2]]\n";
        assert!(matches!(
            Scenario::parse(text, Path::new("s.toml")),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn validation_lists_each_problem() {
        let mut s = Scenario::step_load("x", 0.2, 5.0, 1);
        s.schema_version = 7;
        s.load = LoadProfile::step_at(0.2, 8.0, 0.1);
        s.plant.d_damping = -1.0;
        s.mwoa_pid.agents = 1;
        s.narma.hidden = 0;
        s.metrics.window = Some([3.0, 2.0]);
        let Err(Error::Validation(m)) = s.validate() else {
            panic!()
        };
        for key in [
            "schema_version",
            "load:",
            "plant.d_damping",
            "mwoa_pid.agents",
            "narma.hidden",
            "metrics.window",
        ] {
            assert!(
                m.iter().any(|x| x.starts_with(key)),
                "{key} missing in {m:?}"
            );
        }
    }

    #[test]
    fn missing_artifact_is_a_validation_error() {
        let mut s = Scenario::step_load("x", 0.2, 5.0, 1);
        assert!(matches!(
            s.controller_for(ControllerKind::Narma),
            Err(Error::Validation(_))
        ));
        s.narma.weights_file = Some("nope/weights.txt".into());
        assert!(matches!(
            s.controller_for(ControllerKind::Narma),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn kinds_round_trip_through_names() {
        for k in ControllerKind::ALL {
            assert_eq!(ControllerKind::parse(k.name()), Some(k));
        }
        assert_eq!(ControllerKind::parse("lqr"), None);
    }
}
