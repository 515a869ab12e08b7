//! NARMA-L2 identification and control.
//!
//! The plant is approximated one step ahead as `y(k+1) = f(x(k)) + g(x(k)) u(k)` where the
//! regression vector is `x(k) = [y(k) .. y(k-ny+1), u(k-1) .. u(k-nu+1)]`. Both `f` and `g` are
//! small tanh perceptrons over the normalised regression vector. Each delay line reaches the
//! networks as its newest value followed by successive differences, since neighbouring
//! samples are almost equal and the dynamics live in their differences. The `f` network models the
//! one-step change of `y`, so `f(x) = y(k) + mean + scale * f_net(x̂)` and
//! `g(x) = scale * g_net(x̂)`, with `mean`/`scale` the statistics of that change over the
//! training data.
//!
//! Because the model is affine in `u(k)`, control is a division:
//! `u(k) = (y_ref - f(x)) / g(x)`, with `|g|` floored at `g_epsilon`.

mod dataset;
mod mlp;
mod persist;
mod train;

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controllers::Controller;
use crate::error::{Result, Violations};
use crate::plant::Limits;

pub use dataset::{generate_excitation, IdDataset, RegressionSet, Segment};
pub use mlp::Mlp;
pub use persist::{history_csv, load_weights, parse_weights, save_weights, weights_to_string};
pub use train::{
    identification_report, residual_jacobian, residuals, train_lm, EpochRecord,
    IdentificationReport, NormalizedBatch, LAMBDA_MAX,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excitation {
    pub amp_lo: f64,
    pub amp_hi: f64,
    pub dwell_lo: f64,
    pub dwell_hi: f64,
}

impl Default for Excitation {
    fn default() -> Self {
        Self {
            amp_lo: -0.5,
            amp_hi: 0.5,
            dwell_lo: 0.5,
            dwell_hi: 2.0,
        }
    }
}

/// Chronological train / validation / test fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for Split {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.1,
            max_epochs: 300,
            patience: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NarmaConfig {
    pub n_delays_y: usize,
    pub n_delays_u: usize,
    pub hidden: usize,
    pub samples: usize,
    pub h: f64,
    pub excitation: Excitation,
    pub split: Split,
    pub lm: LmConfig,
    /// Smallest |g| used as a divisor, Hz/pu.
    pub g_epsilon: f64,
    pub seed: u64,
}

impl Default for NarmaConfig {
    fn default() -> Self {
        Self {
            n_delays_y: 2,
            n_delays_u: 2,
            hidden: 10,
            samples: 10_000,
            h: 0.01,
            excitation: Excitation::default(),
            split: Split::default(),
            lm: LmConfig::default(),
            g_epsilon: 1e-3,
            seed: 20_170_501,
        }
    }
}

impl NarmaConfig {
    pub fn validate(&self) -> Result<()> {
        self.violations().into_result()
    }

    pub(crate) fn violations(&self) -> Violations {
        let mut v = Violations::default();
        v.check(self.n_delays_y >= 1, || "n_delays_y: must be >= 1".into());
        v.check(self.n_delays_u >= 1, || "n_delays_u: must be >= 1".into());
        v.check(self.hidden >= 1, || "hidden: must be >= 1".into());
        v.check(self.samples >= 100, || {
            format!("samples: must be >= 100, got {}", self.samples)
        });
        v.check(self.h > 0.0, || format!("h: must be > 0, got {}", self.h));
        let e = &self.excitation;
        v.check(e.amp_lo <= e.amp_hi, || {
            format!("excitation: amp_lo {} > amp_hi {}", e.amp_lo, e.amp_hi)
        });
        v.check(e.dwell_lo > 0.0 && e.dwell_lo <= e.dwell_hi, || {
            format!(
                "excitation: need 0 < dwell_lo <= dwell_hi, got ({}, {})",
                e.dwell_lo, e.dwell_hi
            )
        });
        let s = &self.split;
        v.check(s.train > 0.0 && s.val > 0.0 && s.test > 0.0, || {
            "split: all fractions must be > 0".into()
        });
        v.check((s.train + s.val + s.test - 1.0).abs() < 1e-9, || {
            format!(
                "split: fractions must sum to 1, got {}",
                s.train + s.val + s.test
            )
        });
        let lm = &self.lm;
        v.check(lm.lambda0 > 0.0, || "lm.lambda0: must be > 0".into());
        v.check(lm.lambda_up > 1.0, || "lm.lambda_up: must be > 1".into());
        v.check(lm.lambda_down > 0.0 && lm.lambda_down < 1.0, || {
            "lm.lambda_down: must be in (0, 1)".into()
        });
        v.check(lm.max_epochs >= 1, || "lm.max_epochs: must be >= 1".into());
        v.check(self.g_epsilon > 0.0, || {
            format!("g_epsilon: must be > 0, got {}", self.g_epsilon)
        });
        v
    }

    pub fn n_features(&self) -> usize {
        self.n_delays_y + self.n_delays_u - 1
    }
}

/// Network inputs for a regression vector: per delay line, the newest value then the
/// successive differences. The map is invertible, so no information is lost.
pub fn delay_features(x: &[f64], n_delays_y: usize) -> Vec<f64> {
    let (ys, us) = x.split_at(n_delays_y);
    let mut z = Vec::with_capacity(x.len());
    for line in [ys, us] {
        if let Some(&first) = line.first() {
            z.push(first);
            z.extend(line.windows(2).map(|w| w[0] - w[1]));
        }
    }
    z
}

/// Per-feature standardisation of the network inputs and of the one-step change of `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_mean: f64,
    pub y_scale: f64,
}

impl Normalization {
    pub fn identity(n_features: usize) -> Self {
        Self {
            x_mean: vec![0.0; n_features],
            x_scale: vec![1.0; n_features],
            y_mean: 0.0,
            y_scale: 1.0,
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.x_mean.iter().zip(&self.x_scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NarmaL2Net {
    pub n_delays_y: usize,
    pub n_delays_u: usize,
    pub f_net: Mlp,
    pub g_net: Mlp,
    pub norm: Normalization,
}

impl NarmaL2Net {
    pub fn zeros(n_delays_y: usize, n_delays_u: usize, hidden: usize) -> Self {
        let n = n_delays_y + n_delays_u - 1;
        Self {
            n_delays_y,
            n_delays_u,
            f_net: Mlp::zeros(n, hidden),
            g_net: Mlp::zeros(n, hidden),
            norm: Normalization::identity(n),
        }
    }

    /// Small random initial weights, deterministic in `seed`.
    pub fn init(cfg: &NarmaConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
        let n = cfg.n_features();
        Self {
            n_delays_y: cfg.n_delays_y,
            n_delays_u: cfg.n_delays_u,
            f_net: Mlp::random(n, cfg.hidden, 0.5, &mut rng),
            g_net: Mlp::random(n, cfg.hidden, 0.5, &mut rng),
            norm: Normalization::identity(n),
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_delays_y + self.n_delays_u - 1
    }

    pub fn hidden(&self) -> usize {
        self.f_net.hidden
    }

    pub fn n_params(&self) -> usize {
        self.f_net.n_params() + self.g_net.n_params()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.f_net.params();
        p.extend(self.g_net.params());
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let (f, g) = p.split_at(self.f_net.n_params());
        self.f_net.set_params(f);
        self.g_net.set_params(g);
    }

    /// `(f(x), g(x))` in physical units for a raw regression vector.
    pub fn f_g(&self, x: &[f64]) -> (f64, f64) {
        debug_assert_eq!(x.len(), self.n_features());
        let xn = self.norm.normalize(&delay_features(x, self.n_delays_y));
        let f = x[0] + self.norm.y_mean + self.norm.y_scale * self.f_net.forward(&xn);
        let g = self.norm.y_scale * self.g_net.forward(&xn);
        (f, g)
    }
}

/// One-step-ahead prediction `f(x) + g(x) u`.
pub fn narma_predict(net: &NarmaL2Net, x: &[f64], u: f64) -> f64 {
    let (f, g) = net.f_g(x);
    f + g * u
}

/// `(y_ref - f) / g` with `|g|` floored at `g_epsilon`; a zero `g` counts as positive.
pub fn control_law(f: f64, g: f64, y_ref: f64, g_epsilon: f64) -> f64 {
    let g_safe = if g.abs() >= g_epsilon {
        g
    } else if g < 0.0 {
        -g_epsilon
    } else {
        g_epsilon
    };
    (y_ref - f) / g_safe
}

/// Recent outputs `y(k) ..` and inputs `u(k-1) ..`, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct TappedDelayLine {
    ys: VecDeque<f64>,
    us: VecDeque<f64>,
}

impl TappedDelayLine {
    pub fn new(n_delays_y: usize, n_delays_u: usize) -> Self {
        Self {
            ys: VecDeque::from(vec![0.0; n_delays_y]),
            us: VecDeque::from(vec![0.0; n_delays_u - 1]),
        }
    }

    pub fn push_output(&mut self, y: f64) {
        self.ys.pop_back();
        self.ys.push_front(y);
    }

    pub fn push_input(&mut self, u: f64) {
        if !self.us.is_empty() {
            self.us.pop_back();
            self.us.push_front(u);
        }
    }

    pub fn regression(&self) -> Vec<f64> {
        self.ys.iter().chain(self.us.iter()).copied().collect()
    }

    pub fn clear(&mut self) {
        self.ys
            .iter_mut()
            .chain(self.us.iter_mut())
            .for_each(|v| *v = 0.0);
    }
}

/// Issues the control for the regression vector currently in `tdl`, then records it there.
pub fn narma_control(
    net: &NarmaL2Net,
    tdl: &mut TappedDelayLine,
    y_ref: f64,
    g_epsilon: f64,
    limits: Limits,
) -> f64 {
    let (f, g) = net.f_g(&tdl.regression());
    let u = limits.clamp(control_law(f, g, y_ref, g_epsilon));
    tdl.push_input(u);
    u
}

#[derive(Debug, Clone)]
pub struct NarmaController {
    pub net: NarmaL2Net,
    pub tdl: TappedDelayLine,
    pub g_epsilon: f64,
    pub limits: Limits,
    /// Target deviation, Hz.
    pub y_ref: f64,
}

impl NarmaController {
    pub fn new(net: NarmaL2Net, g_epsilon: f64, limits: Limits) -> Self {
        let tdl = TappedDelayLine::new(net.n_delays_y, net.n_delays_u);
        Self {
            net,
            tdl,
            g_epsilon,
            limits,
            y_ref: 0.0,
        }
    }
}

impl Controller for NarmaController {
    fn control(&mut self, delta_f: f64) -> f64 {
        self.tdl.push_output(delta_f);
        narma_control(
            &self.net,
            &mut self.tdl,
            self.y_ref,
            self.g_epsilon,
            self.limits,
        )
    }

    fn reset(&mut self) {
        self.tdl.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_net(seed: u64) -> NarmaL2Net {
        let mut net = NarmaL2Net::init(&NarmaConfig {
            seed,
            ..Default::default()
        });
        net.norm = Normalization {
            x_mean: vec![0.1, -0.2, 0.05],
            x_scale: vec![2.0, 1.5, 0.3],
            y_mean: 0.01,
            y_scale: 0.04,
        };
        net
    }

    #[test]
    fn zero_weights_predict_the_mean_change() {
        let mut net = NarmaL2Net::zeros(2, 2, 10);
        net.norm.y_mean = 0.25;
        assert_eq!(narma_predict(&net, &[1.5, 1.0, 0.3], 0.7), 1.5 + 0.25);
    }

    #[test]
    fn zero_input_predicts_f_alone() {
        let net = random_net(3);
        let x = [0.4, 0.35, -0.1];
        assert_eq!(narma_predict(&net, &x, 0.0), net.f_g(&x).0);
    }

    #[test]
    fn delay_features_are_levels_then_differences() {
        assert_eq!(
            delay_features(&[5.0, 3.0, 2.0, 1.0, 0.5], 3),
            vec![5.0, 2.0, 1.0, 1.0, 0.5]
        );
        assert_eq!(delay_features(&[5.0, 3.0, 7.0], 2), vec![5.0, 2.0, 7.0]);
        assert_eq!(delay_features(&[5.0], 1), vec![5.0]);
    }

    #[test]
    fn control_law_examples() {
        assert_eq!(control_law(0.5, 2.0, 0.0, 1e-3), -0.25);
        assert_eq!(control_law(1.0, 1e-9, 0.0, 1e-3), -1.0 / 1e-3);
        assert_eq!(control_law(1.0, -1e-9, 0.0, 1e-3), 1.0 / 1e-3);
        assert_eq!(control_law(1.0, 0.0, 0.0, 1e-3), -1.0 / 1e-3);
        assert_eq!(control_law(1.0, -0.0, 0.0, 1e-3), -1.0 / 1e-3);
    }

    #[test]
    fn issued_control_makes_model_hit_reference() {
        let net = random_net(5);
        let mut tdl = TappedDelayLine::new(2, 2);
        tdl.push_output(0.02);
        tdl.push_input(-0.1);
        tdl.push_output(0.015);
        let x = tdl.regression();
        let wide = Limits {
            min: -1e9,
            max: 1e9,
        };
        let u = narma_control(&net, &mut tdl, -0.003, 1e-12, wide);
        let y = narma_predict(&net, &x, u);
        assert!((y - (-0.003)).abs() < 1e-12, "{y}");
    }

    #[test]
    fn delay_line_layout_and_reset() {
        let mut tdl = TappedDelayLine::new(3, 3);
        assert_eq!(tdl.regression(), vec![0.0; 5]);
        tdl.push_output(1.0);
        tdl.push_input(10.0);
        tdl.push_output(2.0);
        tdl.push_input(20.0);
        tdl.push_output(3.0);
        assert_eq!(tdl.regression(), vec![3.0, 2.0, 1.0, 20.0, 10.0]);
        tdl.clear();
        assert_eq!(tdl.regression(), vec![0.0; 5]);
        let once = tdl.clone();
        tdl.clear();
        assert_eq!(once, tdl);
    }

    #[test]
    fn controller_reset_clears_delay_lines() {
        let mut c = NarmaController::new(random_net(1), 1e-3, Limits::default());
        for k in 0..20 {
            c.control(0.01 * k as f64);
        }
        assert_ne!(c.tdl, TappedDelayLine::new(2, 2));
        c.reset();
        assert_eq!(c.tdl, TappedDelayLine::new(2, 2));
    }

    #[test]
    fn config_validation() {
        assert!(NarmaConfig::default().validate().is_ok());
        let bad = NarmaConfig {
            hidden: 0,
            samples: 10,
            g_epsilon: 0.0,
            split: Split {
                train: 0.5,
                val: 0.2,
                test: 0.2,
            },
            ..Default::default()
        };
        let Err(crate::Error::Validation(m)) = bad.validate() else {
            panic!()
        };
        assert_eq!(m.len(), 4, "{m:?}");
    }

    proptest! {
        #[test]
        fn prediction_is_affine_in_u(
            seed in 0u64..1000,
            x in proptest::collection::vec(-3.0..3.0f64, 3),
            u1 in -1.0..1.0f64, u2 in -1.0..1.0f64,
        ) {
            let net = random_net(seed);
            let (_, g) = net.f_g(&x);
            let lhs = narma_predict(&net, &x, u1) - narma_predict(&net, &x, u2);
            let rhs = g * (u1 - u2);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
