//! Whale optimization: the canonical algorithm and the correction-factor variant.
//!
//! The modified variant divides each new position (and the distance it is built from) by a
//! correction factor: `CF1` in the encircling and exploration moves, `CF2` in the spiral move.
//! Because the whole position is divided, the modified search is pulled towards the origin
//! of the search space; the best point found is still tracked exactly.

pub mod benchmarks;
mod tuning;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violations};

pub use tuning::{tune_pid, TuneResult, TuningProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WoaVariant {
    Canonical,
    Modified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoaConfig {
    pub variant: WoaVariant,
    pub agents: usize,
    pub max_iter: usize,
    /// Per-dimension `[lo, hi]`; the search dimension is `bounds.len()`.
    pub bounds: Vec<[f64; 2]>,
    pub b_spiral: f64,
    pub cf1: f64,
    pub cf2: f64,
    pub seed: u64,
}

impl WoaConfig {
    pub fn new(variant: WoaVariant, bounds: Vec<[f64; 2]>, seed: u64) -> Self {
        Self {
            variant,
            agents: 30,
            max_iter: 100,
            bounds,
            b_spiral: 1.0,
            cf1: 2.0,
            cf2: 2.0,
            seed,
        }
    }

    /// Defaults for PID gain search: three gains in `[0, 10]`.
    pub fn pid_tuning(variant: WoaVariant, seed: u64) -> Self {
        Self::new(variant, vec![[0.0, 10.0]; 3], seed)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// Correction factors in effect; the canonical algorithm uses 1.
    pub fn correction_factors(&self) -> (f64, f64) {
        match self.variant {
            WoaVariant::Canonical => (1.0, 1.0),
            WoaVariant::Modified => (self.cf1, self.cf2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.violations().into_result()
    }

    pub(crate) fn violations(&self) -> Violations {
        let mut v = Violations::default();
        v.check(self.agents >= 2, || {
            format!("agents: must be >= 2, got {}", self.agents)
        });
        v.check(self.max_iter >= 1, || {
            format!("max_iter: must be >= 1, got {}", self.max_iter)
        });
        v.check(!self.bounds.is_empty(), || {
            "bounds: need at least one dimension".into()
        });
        for (i, &[lo, hi]) in self.bounds.iter().enumerate() {
            // lo == hi is allowed and pins that coordinate
            v.check(lo.is_finite() && hi.is_finite() && lo <= hi, || {
                format!("bounds[{i}]: need finite lo <= hi, got [{lo}, {hi}]")
            });
        }
        v.check(self.b_spiral.is_finite(), || {
            format!("b_spiral: must be finite, got {}", self.b_spiral)
        });
        v.check(self.cf1 >= 1.0, || {
            format!("cf1: must be >= 1, got {}", self.cf1)
        });
        v.check(self.cf2 >= 1.0, || {
            format!("cf2: must be >= 1, got {}", self.cf2)
        });
        v
    }

    fn clamp(&self, x: &mut [f64]) {
        for (xi, &[lo, hi]) in x.iter_mut().zip(&self.bounds) {
            *xi = xi.clamp(lo, hi);
        }
    }
}

/// Fitness to minimise. Must be pure: equal positions give equal fitness.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// How a batch of agents is scored. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    Serial,
    #[default]
    Parallel,
}

fn evaluate_all<O: Objective + ?Sized>(
    obj: &O,
    positions: &[Vec<f64>],
    mode: EvalMode,
) -> Vec<f64> {
    let score = |x: &Vec<f64>| {
        let f = obj.evaluate(x);
        if f.is_finite() {
            f
        } else {
            f64::INFINITY
        }
    };
    match mode {
        EvalMode::Serial => positions.iter().map(score).collect(),
        EvalMode::Parallel => positions.par_iter().map(score).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WhalePopulation {
    pub positions: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Completed iterations.
    pub iter: usize,
}

impl WhalePopulation {
    /// Uniform random population inside the bounds, already scored.
    pub fn initialize<O: Objective + ?Sized>(
        cfg: &WoaConfig,
        obj: &O,
        rng: &mut ChaCha8Rng,
        mode: EvalMode,
    ) -> Self {
        let positions: Vec<Vec<f64>> = (0..cfg.agents)
            .map(|_| {
                cfg.bounds
                    .iter()
                    .map(|&[lo, hi]| lo + (hi - lo) * rng.random::<f64>())
                    .collect()
            })
            .collect();
        let fitness = evaluate_all(obj, &positions, mode);
        let mut pop = Self {
            best_position: positions[0].clone(),
            best_fitness: f64::INFINITY,
            positions,
            fitness,
            iter: 0,
        };
        pop.absorb_best();
        pop
    }

    fn absorb_best(&mut self) {
        for (x, &f) in self.positions.iter().zip(&self.fitness) {
            if f < self.best_fitness {
                self.best_fitness = f;
                self.best_position.clone_from(x);
            }
        }
    }
}

/// Random numbers consumed by one agent in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentDraws {
    /// Per-dimension uniforms behind the attack coefficient `A`.
    pub r_a: Vec<f64>,
    /// Per-dimension uniforms behind the scaling coefficient `C`.
    pub r_c: Vec<f64>,
    /// Branch selector: spiral when `p >= 0.5`.
    pub p: f64,
    /// Spiral parameter in `[-1, 1]`.
    pub l: f64,
    /// Agent used as the exploration anchor.
    pub rand_idx: usize,
}

impl AgentDraws {
    /// Always draws the same amount, whatever branch ends up used.
    fn draw(rng: &mut ChaCha8Rng, dim: usize, agents: usize) -> Self {
        let r_a = (0..dim).map(|_| rng.random::<f64>()).collect();
        let r_c = (0..dim).map(|_| rng.random::<f64>()).collect();
        let p = rng.random::<f64>();
        let l = 2.0 * rng.random::<f64>() - 1.0;
        let rand_idx = rng.random_range(0..agents);
        Self {
            r_a,
            r_c,
            p,
            l,
            rand_idx,
        }
    }
}

/// Coefficients of one position update.
#[derive(Debug, Clone, Copy)]
pub struct MoveParams {
    /// Linearly decreasing from 2 to 0 over the run.
    pub a: f64,
    pub b_spiral: f64,
    pub cf1: f64,
    pub cf2: f64,
}

/// New (unclamped) position of one agent.
pub fn update_position(
    current: &[f64],
    best: &[f64],
    anchor: &[f64],
    d: &AgentDraws,
    mv: MoveParams,
) -> Vec<f64> {
    let MoveParams {
        a,
        b_spiral,
        cf1,
        cf2,
    } = mv;
    if d.p >= 0.5 {
        let shape = (b_spiral * d.l).exp() * (2.0 * PI * d.l).cos();
        return current
            .iter()
            .zip(best)
            .map(|(&x, &xb)| ((xb - x).abs() * shape + xb) / cf2)
            .collect();
    }
    (0..current.len())
        .map(|j| {
            let coef_a = 2.0 * a * d.r_a[j] - a;
            let coef_c = 2.0 * d.r_c[j];
            // encircle the best when |A| < 1, otherwise explore around a random agent
            let target = if coef_a.abs() < 1.0 {
                best[j]
            } else {
                anchor[j]
            };
            let dist = (coef_c * target - current[j]).abs() / cf1;
            (target - coef_a * dist) / cf1
        })
        .collect()
}

/// One generation: draws for every agent in agent order, moves, clamps, rescores.
pub fn woa_iteration<O: Objective + ?Sized>(
    pop: &mut WhalePopulation,
    cfg: &WoaConfig,
    obj: &O,
    rng: &mut ChaCha8Rng,
    mode: EvalMode,
) {
    let agents = pop.positions.len();
    let dim = cfg.dim();
    let (cf1, cf2) = cfg.correction_factors();
    let mv = MoveParams {
        a: 2.0 * (1.0 - pop.iter as f64 / cfg.max_iter as f64),
        b_spiral: cfg.b_spiral,
        cf1,
        cf2,
    };
    let draws: Vec<AgentDraws> = (0..agents)
        .map(|_| AgentDraws::draw(rng, dim, agents))
        .collect();
    let next: Vec<Vec<f64>> = pop
        .positions
        .iter()
        .zip(&draws)
        .map(|(x, d)| {
            let mut nx = update_position(x, &pop.best_position, &pop.positions[d.rand_idx], d, mv);
            cfg.clamp(&mut nx);
            nx
        })
        .collect();
    pop.fitness = evaluate_all(obj, &next, mode);
    pop.positions = next;
    pop.absorb_best();
    pop.iter += 1;
}

#[derive(Debug, Clone, PartialEq)]
pub struct WoaOutcome {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness after initialisation (index 0) and after each iteration.
    pub convergence_curve: Vec<f64>,
}

pub fn woa_run<O: Objective + ?Sized>(cfg: &WoaConfig, obj: &O) -> Result<WoaOutcome> {
    woa_run_with(cfg, obj, EvalMode::default())
}

pub fn woa_run_with<O: Objective + ?Sized>(
    cfg: &WoaConfig,
    obj: &O,
    mode: EvalMode,
) -> Result<WoaOutcome> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pop = WhalePopulation::initialize(cfg, obj, &mut rng, mode);
    if !pop.best_fitness.is_finite() {
        return Err(Error::OptimizerFailed {
            seed: cfg.seed,
            reason: format!(
                "objective was non-finite at all {} initial points",
                cfg.agents
            ),
        });
    }
    let mut curve = Vec::with_capacity(cfg.max_iter + 1);
    curve.push(pop.best_fitness);
    for _ in 0..cfg.max_iter {
        woa_iteration(&mut pop, cfg, obj, &mut rng, mode);
        curve.push(pop.best_fitness);
    }
    Ok(WoaOutcome {
        best_position: pop.best_position,
        best_fitness: pop.best_fitness,
        convergence_curve: curve,
    })
}

/// `iteration,best_fitness` rows.
pub fn convergence_csv(curve: &[f64]) -> String {
    let mut s = String::from("iteration,best_fitness\n");
    for (i, f) in curve.iter().enumerate() {
        s.push_str(&format!("{i},{}\n", crate::io::fmt_f64(*f)));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::benchmarks::sphere;
    use super::*;

    fn draws(p: f64, r_a: f64, l: f64) -> AgentDraws {
        AgentDraws {
            r_a: vec![r_a; 2],
            r_c: vec![0.5; 2],
            p,
            l,
            rand_idx: 0,
        }
    }

    fn mv(cf1: f64, cf2: f64) -> MoveParams {
        MoveParams {
            a: 1.0,
            b_spiral: 1.0,
            cf1,
            cf2,
        }
    }

    #[test]
    fn zero_attack_coefficient_lands_on_best() {
        // r_a = 0.5 makes A = 0
        let x = update_position(
            &[3.0, -1.0],
            &[1.0, 2.0],
            &[9.0, 9.0],
            &draws(0.1, 0.5, 0.0),
            mv(1.0, 1.0),
        );
        assert_eq!(x, vec![1.0, 2.0]);
    }

    #[test]
    fn zero_radius_spiral_lands_on_best() {
        let best = [1.5, -2.5];
        let x = update_position(
            &best,
            &best,
            &[9.0, 9.0],
            &draws(0.9, 0.3, 0.0),
            mv(1.0, 1.0),
        );
        assert_eq!(x, best.to_vec());
    }

    #[test]
    fn correction_factors_scale_the_moves() {
        let x = update_position(
            &[3.0, -1.0],
            &[1.0, 2.0],
            &[9.0, 9.0],
            &draws(0.1, 0.5, 0.0),
            mv(2.0, 1.0),
        );
        assert_eq!(x, vec![0.5, 1.0]);
        let best = [1.5, -2.5];
        let x = update_position(
            &best,
            &best,
            &[9.0, 9.0],
            &draws(0.9, 0.3, 0.0),
            mv(1.0, 4.0),
        );
        assert_eq!(x, vec![0.375, -0.625]);
    }

    #[test]
    fn exploration_uses_the_random_anchor() {
        // a = 2 and r_a = 1 make A = 2, so |A| >= 1
        let d = draws(0.1, 1.0, 0.0);
        let m = MoveParams {
            a: 2.0,
            ..mv(1.0, 1.0)
        };
        let x = update_position(&[0.0, 0.0], &[5.0, 5.0], &[1.0, -1.0], &d, m);
        // C = 1: D = |anchor - x|, X = anchor - 2 D
        assert_eq!(x, vec![-1.0, -3.0]);
    }

    #[test]
    fn degenerate_budget_returns_best_seen() {
        let cfg = WoaConfig {
            agents: 2,
            max_iter: 1,
            ..WoaConfig::new(WoaVariant::Canonical, vec![[-10.0, 10.0]; 3], 11)
        };
        let seen = std::sync::Mutex::new(Vec::new());
        let obj = |x: &[f64]| {
            let f = sphere(x);
            seen.lock().unwrap().push(f);
            f
        };
        let out = woa_run_with(&cfg, &obj, EvalMode::Serial).unwrap();
        let seen = seen.into_inner().unwrap();
        assert_eq!(seen.len(), 4);
        assert_eq!(
            out.best_fitness,
            seen.iter().cloned().fold(f64::INFINITY, f64::min)
        );
        assert_eq!(out.convergence_curve.len(), 2);
    }

    #[test]
    fn collapsed_bounds_return_the_point() {
        let cfg = WoaConfig::new(
            WoaVariant::Modified,
            vec![[2.0, 2.0], [0.5, 0.5], [7.0, 7.0]],
            3,
        );
        let out = woa_run(&cfg, &sphere).unwrap();
        assert_eq!(out.best_position, vec![2.0, 0.5, 7.0]);
    }

    #[test]
    fn all_non_finite_objective_fails() {
        let cfg = WoaConfig::new(WoaVariant::Canonical, vec![[0.0, 1.0]], 5);
        let err = woa_run(&cfg, &|_: &[f64]| f64::NAN).unwrap_err();
        assert!(matches!(err, Error::OptimizerFailed { seed: 5, .. }));
    }

    #[test]
    fn invalid_config_lists_problems() {
        let cfg = WoaConfig {
            agents: 1,
            max_iter: 0,
            cf1: 0.5,
            ..WoaConfig::new(WoaVariant::Modified, vec![[1.0, 0.0]], 0)
        };
        let Err(Error::Validation(m)) = cfg.validate() else {
            panic!()
        };
        assert_eq!(m.len(), 4, "{m:?}");
    }

    #[test]
    fn one_dimensional_parabola() {
        let cfg = WoaConfig::new(WoaVariant::Canonical, vec![[0.0, 10.0]], 2024);
        let out = woa_run(&cfg, &|x: &[f64]| (x[0] - 3.0).powi(2)).unwrap();
        assert!(
            (out.best_position[0] - 3.0).abs() < 0.05,
            "{:?}",
            out.best_position
        );
    }

    #[test]
    fn curve_is_non_increasing_and_positions_in_bounds() {
        for variant in [WoaVariant::Canonical, WoaVariant::Modified] {
            let cfg = WoaConfig::new(variant, vec![[-3.0, 5.0]; 4], 9);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let obj = benchmarks::rastrigin;
            let mut pop = WhalePopulation::initialize(&cfg, &obj, &mut rng, EvalMode::Serial);
            let mut prev = pop.best_fitness;
            for _ in 0..cfg.max_iter {
                woa_iteration(&mut pop, &cfg, &obj, &mut rng, EvalMode::Serial);
                assert!(pop.best_fitness <= prev);
                prev = pop.best_fitness;
                for x in &pop.positions {
                    assert!(x.iter().all(|&v| (-3.0..=5.0).contains(&v)));
                }
            }
        }
    }
}
