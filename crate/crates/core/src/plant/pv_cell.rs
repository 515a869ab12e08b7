//! Static single-diode solar-cell model.
//!
//! Terminal current `I` at voltage `V` solves
//! `I = I_L - I_0 (exp((V + I R_s) / (n V_T)) - 1) - (V + I R_s) / R_sh`.
//! The residual is strictly decreasing in `I`, so the root is unique.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violations};

const MAX_NEWTON_ITERS: usize = 100;
const MAX_BISECTION_ITERS: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvCellParams {
    /// Photocurrent, A.
    pub i_l: f64,
    /// Reverse saturation current, A.
    pub i_0: f64,
    /// Diode ideality factor.
    pub n: f64,
    /// Thermal voltage, V.
    pub v_t: f64,
    pub r_s: f64,
    pub r_sh: f64,
}

impl PvCellParams {
    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        v.check(self.i_l.is_finite(), || {
            format!("i_l: must be finite, got {}", self.i_l)
        });
        v.check(self.i_0 > 0.0, || {
            format!("i_0: must be > 0, got {}", self.i_0)
        });
        v.check(self.v_t > 0.0, || {
            format!("v_t: must be > 0, got {}", self.v_t)
        });
        v.check(self.n > 0.0, || format!("n: must be > 0, got {}", self.n));
        v.check(self.r_s >= 0.0, || {
            format!("r_s: must be >= 0, got {}", self.r_s)
        });
        v.check(self.r_sh > 0.0, || {
            format!("r_sh: must be > 0, got {}", self.r_sh)
        });
        v.into_result()
    }

    /// Residual `I_L - I_D - I_SH - I` and its derivative with respect to `I`.
    fn residual(&self, v: f64, i: f64) -> (f64, f64) {
        let vj = v + i * self.r_s;
        let nvt = self.n * self.v_t;
        let e = (vj / nvt).exp();
        let f = self.i_l - self.i_0 * (e - 1.0) - vj / self.r_sh - i;
        let df = -self.i_0 * e * self.r_s / nvt - self.r_s / self.r_sh - 1.0;
        (f, df)
    }

    fn tolerance(&self) -> f64 {
        1e-12 * self.i_l.abs().max(1.0)
    }
}

/// Terminal current of the cell at voltage `v`.
///
/// Damped Newton from `I = I_L`; if that fails to converge within the iteration budget the
/// root is bracketed and bisected.
pub fn pv_cell_current(params: &PvCellParams, v: f64) -> Result<f64> {
    params.validate()?;
    if !v.is_finite() {
        return Err(Error::RootFind(format!("voltage must be finite, got {v}")));
    }
    newton(params, v).or_else(|| bisect(params, v)).ok_or_else(|| {
        Error::RootFind(format!("no convergence for V = {v} within {MAX_NEWTON_ITERS} Newton iterations or bisection"))
    })
}

fn newton(p: &PvCellParams, v: f64) -> Option<f64> {
    let tol = p.tolerance();
    let mut i = p.i_l;
    let (mut f, mut df) = p.residual(v, i);
    for _ in 0..MAX_NEWTON_ITERS {
        if !f.is_finite() || !df.is_finite() {
            return None;
        }
        if f.abs() <= tol {
            return Some(i);
        }
        let full = -f / df;
        // halve the step until the residual shrinks
        let mut step = full;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = i + step;
            let (fc, dfc) = p.residual(v, cand);
            if fc.is_finite() && fc.abs() < f.abs() {
                i = cand;
                f = fc;
                df = dfc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // stuck at the floating-point floor
            return (f.abs() <= tol).then_some(i);
        }
    }
    (f.abs() <= tol).then_some(i)
}

fn bisect(p: &PvCellParams, v: f64) -> Option<f64> {
    let f = |i: f64| p.residual(v, i).0;
    // residual -> +inf as I -> -inf and -> -inf as I -> +inf
    let mut width = p.i_l.abs().max(1.0);
    let (mut lo, mut hi) = (p.i_l - width, p.i_l + width);
    for _ in 0..200 {
        let (flo, fhi) = (f(lo), f(hi));
        if flo >= 0.0 && fhi <= 0.0 {
            break;
        }
        width *= 2.0;
        if flo < 0.0 {
            lo = p.i_l - width;
        }
        if fhi > 0.0 || fhi.is_nan() {
            hi = p.i_l + width;
        }
    }
    if !(f(lo) >= 0.0 && f(hi) <= 0.0) {
        return None;
    }
    let tol = p.tolerance();
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= tol || mid == lo || mid == hi {
            return Some(mid);
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
