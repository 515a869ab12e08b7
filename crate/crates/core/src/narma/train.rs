//! Joint Levenberg-Marquardt fit of the `f` and `g` networks.
//!
//! Residuals live in normalised units: `r = f_net(x̂) + g_net(x̂) u - ŷ`, where `ŷ` is the
//! standardised one-step change of `y`. Each epoch solves `(JᵀJ + λI) δ = -Jᵀr`; a step is
//! kept only if it lowers the training error, after which `λ` shrinks, otherwise `λ` grows
//! and the step is retried.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

use super::dataset::{IdDataset, RegressionSet, Segment};
use super::{delay_features, NarmaConfig, NarmaL2Net, Normalization};

/// Damping beyond which no step is attempted.
pub const LAMBDA_MAX: f64 = 1e10;

/// Regression samples in the units the networks see.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalizedBatch {
    pub x: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub target: Vec<f64>,
}

impl NormalizedBatch {
    pub fn from_set(set: &RegressionSet, norm: &Normalization, n_delays_y: usize) -> Self {
        Self {
            x: set
                .x
                .iter()
                .map(|x| norm.normalize(&delay_features(x, n_delays_y)))
                .collect(),
            u: set.u.clone(),
            target: set
                .x
                .iter()
                .zip(&set.y_next)
                .map(|(x, y)| (y - x[0] - norm.y_mean) / norm.y_scale)
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean squared one-step error in Hz².
    pub train_mse: f64,
    pub val_mse: f64,
    pub lambda: f64,
}

pub fn residuals(net: &NarmaL2Net, batch: &NormalizedBatch) -> Vec<f64> {
    batch
        .x
        .iter()
        .zip(batch.u.iter().zip(&batch.target))
        .map(|(x, (u, t))| net.f_net.forward(x) + net.g_net.forward(x) * u - t)
        .collect()
}

/// Residual vector and its Jacobian with respect to `net.params()`.
pub fn residual_jacobian(
    net: &NarmaL2Net,
    batch: &NormalizedBatch,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = batch.len();
    let pf = net.f_net.n_params();
    let p = net.n_params();
    let mut jac = DMatrix::<f64>::zeros(n, p);
    let mut res = DVector::<f64>::zeros(n);
    let mut row = vec![0.0; p];
    for k in 0..n {
        let (rf, rg) = row.split_at_mut(pf);
        let x = &batch.x[k];
        let u = batch.u[k];
        let fo = net.f_net.forward_with_grad(x, rf);
        let go = net.g_net.forward_with_grad(x, rg);
        rg.iter_mut().for_each(|v| *v *= u);
        res[k] = fo + go * u - batch.target[k];
        for (c, v) in row.iter().enumerate() {
            jac[(k, c)] = *v;
        }
    }
    (jac, res)
}

fn sse(net: &NarmaL2Net, batch: &NormalizedBatch) -> f64 {
    residuals(net, batch).iter().map(|r| r * r).sum()
}

fn mse_hz2(net: &NarmaL2Net, batch: &NormalizedBatch) -> f64 {
    if batch.is_empty() {
        return f64::NAN;
    }
    sse(net, batch) / batch.len() as f64 * net.norm.y_scale * net.norm.y_scale
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    // a constant feature keeps unit scale
    (
        mean,
        if std > 0.0 && std.is_finite() {
            std
        } else {
            1.0
        },
    )
}

pub(crate) fn fit_normalization(train: &RegressionSet, n_delays_y: usize) -> Normalization {
    let z: Vec<Vec<f64>> = train
        .x
        .iter()
        .map(|x| delay_features(x, n_delays_y))
        .collect();
    let n_features = z.first().map_or(0, Vec::len);
    let mut x_mean = Vec::with_capacity(n_features);
    let mut x_scale = Vec::with_capacity(n_features);
    for i in 0..n_features {
        let (m, s) = mean_std(z.iter().map(move |x| x[i]));
        x_mean.push(m);
        x_scale.push(s);
    }
    let (y_mean, y_scale) = mean_std(train.x.iter().zip(&train.y_next).map(|(x, y)| y - x[0]));
    Normalization {
        x_mean,
        x_scale,
        y_mean,
        y_scale,
    }
}

/// Trains from the initial weights in `net`, returning the best-validation weights and the
/// per-epoch history (epoch 0 is the starting point).
pub fn train_lm(
    net: &NarmaL2Net,
    data: &IdDataset,
    cfg: &NarmaConfig,
) -> Result<(NarmaL2Net, Vec<EpochRecord>)> {
    cfg.validate()?;
    if net.n_delays_y != cfg.n_delays_y
        || net.n_delays_u != cfg.n_delays_u
        || net.hidden() != cfg.hidden
    {
        return Err(Error::Validation(vec![
            "net: layout differs from the configured delays / hidden size".into(),
        ]));
    }
    let (ny, nu) = (cfg.n_delays_y, cfg.n_delays_u);
    let train_set = data.regression(Segment::Train, ny, nu);
    let val_set = data.regression(Segment::Validation, ny, nu);
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Validation(vec![
            "split: train and validation segments are too short".into(),
        ]));
    }

    let mut net = net.clone();
    net.norm = fit_normalization(&train_set, ny);
    let train = NormalizedBatch::from_set(&train_set, &net.norm, ny);
    let val = NormalizedBatch::from_set(&val_set, &net.norm, ny);

    let lm = &cfg.lm;
    let mut lambda = lm.lambda0;
    let mut err = sse(&net, &train);
    let mut best_val = mse_hz2(&net, &val);
    let mut best = net.clone();
    let mut history = vec![EpochRecord {
        epoch: 0,
        train_mse: err / train.len() as f64 * net.norm.y_scale.powi(2),
        val_mse: best_val,
        lambda,
    }];
    let mut stale = 0usize;
    let mut accepted_any = false;

    'epochs: for epoch in 1..=lm.max_epochs {
        let (jac, res) = residual_jacobian(&net, &train);
        let jtj = jac.tr_mul(&jac);
        let grad = jac.tr_mul(&res);
        let theta = DVector::from_vec(net.params());
        loop {
            if lambda > LAMBDA_MAX {
                if accepted_any {
                    // no further descent available at this point
                    break 'epochs;
                }
                return Err(Error::TrainingStalled { lambda });
            }
            let mut damped = jtj.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda;
            }
            let Some(chol) = Cholesky::new(damped) else {
                lambda *= lm.lambda_up;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let mut trial = net.clone();
            trial.set_params((&theta + &step).as_slice());
            let trial_err = sse(&trial, &train);
            if trial_err.is_finite() && trial_err < err {
                net = trial;
                err = trial_err;
                lambda *= lm.lambda_down;
                accepted_any = true;
                break;
            }
            lambda *= lm.lambda_up;
        }

        let val_mse = mse_hz2(&net, &val);
        history.push(EpochRecord {
            epoch,
            train_mse: err / train.len() as f64 * net.norm.y_scale.powi(2),
            val_mse,
            lambda,
        });
        if val_mse < best_val {
            best_val = val_mse;
            best = net.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= lm.patience {
                break;
            }
        }
    }
    Ok((best, history))
}

/// One-step prediction quality on each segment, in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentificationReport {
    pub train_rmse: f64,
    pub val_rmse: f64,
    pub test_rmse: f64,
    /// Standard deviation of `y` over the test segment.
    pub test_y_std: f64,
    /// Standard deviation of the one-step change of `y` over the test segment.
    pub test_dy_std: f64,
}

impl IdentificationReport {
    pub fn to_text(&self) -> String {
        format!(
            "segment  rmse_hz\ntrain    {:.6e}\nval      {:.6e}\ntest     {:.6e}\n\ntest_y_std_hz     {:.6e}\ntest_dy_std_hz    {:.6e}\ntest_rmse/y_std   {:.6e}\ntest_rmse/dy_std  {:.6e}\n",
            self.train_rmse,
            self.val_rmse,
            self.test_rmse,
            self.test_y_std,
            self.test_dy_std,
            self.test_rmse / self.test_y_std,
            self.test_rmse / self.test_dy_std,
        )
    }
}

pub fn identification_report(net: &NarmaL2Net, data: &IdDataset) -> IdentificationReport {
    let (ny, nu) = (net.n_delays_y, net.n_delays_u);
    let rmse = |seg| {
        let set = data.regression(seg, ny, nu);
        mse_hz2(net, &NormalizedBatch::from_set(&set, &net.norm, ny)).sqrt()
    };
    let test = data.regression(Segment::Test, ny, nu);
    let pop_std = |v: Vec<f64>| {
        let n = v.len().max(1) as f64;
        let m = v.iter().sum::<f64>() / n;
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt()
    };
    IdentificationReport {
        train_rmse: rmse(Segment::Train),
        val_rmse: rmse(Segment::Validation),
        test_rmse: rmse(Segment::Test),
        test_y_std: pop_std(test.y_next.clone()),
        test_dy_std: pop_std(
            test.x
                .iter()
                .zip(&test.y_next)
                .map(|(x, y)| y - x[0])
                .collect(),
        ),
    }
}
