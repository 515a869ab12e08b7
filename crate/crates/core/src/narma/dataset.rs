use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::plant::{plant_step, MicrogridModel, MicrogridState};
use crate::simulation::DIVERGENCE_GUARD_HZ;

use super::NarmaConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Train,
    Validation,
    Test,
}

/// Open-loop identification record: `u[k]` is applied over `[t_k, t_k+1)`, `y[k]` is Δf at `t_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdDataset {
    pub h: f64,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

/// Drives the open-loop plant (zero load) with a random staircase and records its response.
pub fn generate_excitation(model: &MicrogridModel, cfg: &NarmaConfig) -> Result<IdDataset> {
    cfg.validate()?;
    if (cfg.h - model.h()).abs() > 1e-15 {
        return Err(Error::Validation(vec![format!(
            "h: identification step {} must equal the plant step {}",
            cfg.h,
            model.h()
        )]));
    }
    let ex = &cfg.excitation;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let limits = model.u_limits();
    let mut state = MicrogridState::default();
    let mut u = Vec::with_capacity(cfg.samples);
    let mut y = Vec::with_capacity(cfg.samples);
    let mut level = 0.0;
    let mut hold = 0usize;
    for _ in 0..cfg.samples {
        if hold == 0 {
            level = limits.clamp(ex.amp_lo + (ex.amp_hi - ex.amp_lo) * rng.random::<f64>());
            let dwell = ex.dwell_lo + (ex.dwell_hi - ex.dwell_lo) * rng.random::<f64>();
            hold = ((dwell / cfg.h).round() as usize).max(1);
        }
        hold -= 1;
        y.push(state.delta_f);
        u.push(level);
        state = plant_step(model, &state, level, 0.0)?;
        if state.delta_f.abs() > DIVERGENCE_GUARD_HZ {
            return Err(Error::ExcitationAmplitude {
                peak: state.delta_f.abs(),
            });
        }
    }
    let n = cfg.samples;
    let n_train = (cfg.split.train * n as f64).round() as usize;
    let n_val = (cfg.split.val * n as f64).round() as usize;
    Ok(IdDataset {
        h: cfg.h,
        u,
        y,
        train: 0..n_train,
        val: n_train..n_train + n_val,
        test: n_train + n_val..n,
    })
}

/// Regression samples `(x(k), u(k), y(k+1))` formed strictly inside one segment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegressionSet {
    pub x: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub y_next: Vec<f64>,
    /// Sample index `k` of each row in the dataset.
    pub index: Vec<usize>,
}

impl RegressionSet {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

impl IdDataset {
    pub fn segment(&self, which: Segment) -> Range<usize> {
        match which {
            Segment::Train => self.train.clone(),
            Segment::Validation => self.val.clone(),
            Segment::Test => self.test.clone(),
        }
    }

    pub fn regression(
        &self,
        which: Segment,
        n_delays_y: usize,
        n_delays_u: usize,
    ) -> RegressionSet {
        let seg = self.segment(which);
        let lag = n_delays_y.max(n_delays_u) - 1;
        let mut set = RegressionSet::default();
        if seg.len() < lag + 2 {
            return set;
        }
        for k in seg.start + lag..seg.end - 1 {
            let mut x = Vec::with_capacity(n_delays_y + n_delays_u - 1);
            x.extend((0..n_delays_y).map(|i| self.y[k - i]));
            x.extend((1..n_delays_u).map(|i| self.u[k - i]));
            set.x.push(x);
            set.u.push(self.u[k]);
            set.y_next.push(self.y[k + 1]);
            set.index.push(k);
        }
        set
    }
}
