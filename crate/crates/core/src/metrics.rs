//! Time-domain performance indices of a frequency-deviation trace.
//!
//! Integral indices use the rectangle rule over the samples of the window, with time
//! measured from the window start (the disturbance instant):
//! `ITAE = Σ τ|Δf|h`, `ISE = Σ Δf²h`, `IAE = Σ |Δf|h`, `ITSE = Σ τΔf²h`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, Violations};
use crate::simulation::Trace;

/// Fraction of the window averaged to estimate the final value.
pub const FINAL_VALUE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "kebab-case")]
pub enum SettlingBand {
    /// Fixed half-width, Hz.
    Absolute(f64),
    /// Half-width as a percentage of the peak deviation in the window.
    PercentOfPeak(f64),
}

impl SettlingBand {
    pub const DEFAULT_ABSOLUTE: SettlingBand = SettlingBand::Absolute(0.0005);
    pub const DEFAULT_PERCENT: SettlingBand = SettlingBand::PercentOfPeak(5.0);

    fn half_width(self, peak: f64) -> f64 {
        match self {
            SettlingBand::Absolute(b) => b,
            SettlingBand::PercentOfPeak(p) => p / 100.0 * peak,
        }
    }

    pub(crate) fn violations(&self) -> Violations {
        let mut v = Violations::default();
        let (SettlingBand::Absolute(x) | SettlingBand::PercentOfPeak(x)) = *self;
        v.check(x > 0.0 && x.is_finite(), || {
            format!("band: must be finite and > 0, got {x}")
        });
        v
    }
}

impl Default for SettlingBand {
    fn default() -> Self {
        Self::DEFAULT_ABSOLUTE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Largest |Δf| in the window.
    pub peak_deviation: f64,
    pub peak_time: f64,
    /// Largest excursion above the final value.
    pub overshoot_above: f64,
    /// Largest excursion below the final value.
    pub overshoot_below: f64,
    /// Time of the last band violation, from the window start.
    pub settling_time: f64,
    /// False when the signal still leaves the band inside the final-value segment.
    pub settled: bool,
    pub final_value: f64,
    pub itae: f64,
    pub ise: f64,
    pub iae: f64,
    pub itse: f64,
}

/// Which index a tuning run minimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessIndex {
    #[default]
    Itae,
    Ise,
    Iae,
    Itse,
}

impl RunMetrics {
    pub fn index(&self, which: FitnessIndex) -> f64 {
        match which {
            FitnessIndex::Itae => self.itae,
            FitnessIndex::Ise => self.ise,
            FitnessIndex::Iae => self.iae,
            FitnessIndex::Itse => self.itse,
        }
    }
}

/// Metrics of the trace's Δf column over `window = (t_start, t_end)`.
pub fn compute_metrics(
    trace: &Trace,
    band: SettlingBand,
    window: (f64, f64),
) -> Result<RunMetrics> {
    series_metrics(&trace.t, &trace.delta_f, trace.h, band, window)
}

/// Metrics of an arbitrary uniformly sampled series `x(t)`.
pub fn series_metrics(
    t: &[f64],
    x: &[f64],
    h: f64,
    band: SettlingBand,
    window: (f64, f64),
) -> Result<RunMetrics> {
    let (t_start, t_end) = window;
    let slack = 1e-9 * h;
    let mut v = band.violations();
    v.check(t.len() == x.len() && !t.is_empty(), || {
        "trace: columns must be non-empty and equal length".into()
    });
    v.check(h > 0.0, || format!("h: must be > 0, got {h}"));
    if let (Some(&first), Some(&last)) = (t.first(), t.last()) {
        v.check(t_start < t_end, || {
            format!("window: start {t_start} must precede end {t_end}")
        });
        v.check(t_start >= first - slack && t_end <= last + slack, || {
            format!("window: ({t_start}, {t_end}) outside trace span ({first}, {last})")
        });
    }
    v.into_result()?;

    let lo = t.partition_point(|&tk| tk < t_start - slack);
    let hi = t.partition_point(|&tk| tk <= t_end + slack);
    let xs = &x[lo..hi];
    let ts = &t[lo..hi];
    let n = xs.len();

    let tail = ((FINAL_VALUE_FRACTION * n as f64).ceil() as usize).clamp(1, n);
    let final_value = xs[n - tail..].iter().sum::<f64>() / tail as f64;

    let (mut peak, mut peak_k) = (0.0f64, 0usize);
    let (mut above, mut below) = (0.0f64, 0.0f64);
    let (mut itae, mut ise, mut iae, mut itse) = (0.0, 0.0, 0.0, 0.0);
    for (k, (&xk, &tk)) in xs.iter().zip(ts).enumerate() {
        let tau = tk - t_start;
        let a = xk.abs();
        if a > peak {
            peak = a;
            peak_k = k;
        }
        above = above.max(xk - final_value);
        below = below.max(final_value - xk);
        iae += a * h;
        ise += xk * xk * h;
        itae += tau * a * h;
        itse += tau * xk * xk * h;
    }

    let half_width = band.half_width(peak);
    let last_violation = xs
        .iter()
        .rposition(|&xk| (xk - final_value).abs() > half_width);
    let (settling_time, settled) = match last_violation {
        None => (0.0, true),
        Some(k) => (ts[k] - t_start, k < n - tail),
    };

    Ok(RunMetrics {
        peak_deviation: peak,
        peak_time: ts[peak_k] - t_start,
        overshoot_above: above,
        overshoot_below: below,
        settling_time,
        settled,
        final_value,
        itae,
        ise,
        iae,
        itse,
    })
}

pub const METRICS_CSV_HEADER: &str =
    "controller,peak_deviation,peak_time,overshoot_above,overshoot_below,settling_time,settled,final_value,itae,ise,iae,itse";

pub fn metrics_csv_row(name: &str, m: &RunMetrics) -> String {
    use crate::io::fmt_f64 as f;
    format!(
        "{name},{},{},{},{},{},{},{},{},{},{},{}",
        f(m.peak_deviation),
        f(m.peak_time),
        f(m.overshoot_above),
        f(m.overshoot_below),
        f(m.settling_time),
        m.settled,
        f(m.final_value),
        f(m.itae),
        f(m.ise),
        f(m.iae),
        f(m.itse)
    )
}

/// Fixed-width plain-text table, one row per named run.
pub fn metrics_report(rows: &[(String, RunMetrics)]) -> String {
    let mut s = format!(
        "{:<12} {:>12} {:>9} {:>12} {:>12} {:>10} {:>8} {:>12} {:>12} {:>12} {:>12}\n",
        "controller",
        "peak|df|",
        "t_peak",
        "over+",
        "over-",
        "t_settle",
        "settled",
        "ITAE",
        "ISE",
        "IAE",
        "ITSE"
    );
    for (name, m) in rows {
        s.push_str(&format!(
            "{:<12} {:>12.6e} {:>9.3} {:>12.4e} {:>12.4e} {:>10.3} {:>8} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e}\n",
            name,
            m.peak_deviation,
            m.peak_time,
            m.overshoot_above,
            m.overshoot_below,
            m.settling_time,
            if m.settled { "yes" } else { "no" },
            m.itae,
            m.ise,
            m.iae,
            m.itse
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(h: f64, t_end: f64) -> Vec<f64> {
        let n = (t_end / h).round() as usize;
        (0..=n).map(|k| k as f64 * h).collect()
    }

    fn damped(t: &[f64], t0: f64) -> Vec<f64> {
        t.iter()
            .map(|&tk| {
                if tk < t0 {
                    0.0
                } else {
                    0.1 * (-(tk - t0)).exp() * (5.0 * (tk - t0)).cos()
                }
            })
            .collect()
    }

    #[test]
    fn zero_trace_has_zero_metrics() {
        let t = grid(0.01, 10.0);
        let x = vec![0.0; t.len()];
        let m = series_metrics(&t, &x, 0.01, SettlingBand::DEFAULT_ABSOLUTE, (0.0, 10.0)).unwrap();
        assert_eq!(m.settling_time, 0.0);
        assert!(m.settled);
        for v in [
            m.peak_deviation,
            m.overshoot_above,
            m.overshoot_below,
            m.itae,
            m.ise,
            m.iae,
            m.itse,
        ] {
            assert_eq!(v, 0.0);
        }
        let m = series_metrics(&t, &x, 0.01, SettlingBand::DEFAULT_PERCENT, (0.0, 10.0)).unwrap();
        assert_eq!(m.settling_time, 0.0);
    }

    #[test]
    fn constant_offset_ise() {
        let h = 0.01;
        let t = grid(h, 10.0);
        let c = -0.3;
        let x = vec![c; t.len()];
        let m = series_metrics(&t, &x, h, SettlingBand::DEFAULT_ABSOLUTE, (0.0, 10.0)).unwrap();
        assert!((m.ise - c * c * 10.0).abs() <= c * c * h + 1e-12);
        assert!((m.final_value - c).abs() < 1e-12);
        assert_eq!(m.settling_time, 0.0);
    }

    #[test]
    fn scaling_scales_indices() {
        let h = 0.01;
        let t = grid(h, 10.0);
        let x = damped(&t, 0.0);
        let base = series_metrics(&t, &x, h, SettlingBand::Absolute(0.002), (0.0, 10.0)).unwrap();
        for k in [0.5, 2.0, 4.0] {
            let xk: Vec<f64> = x.iter().map(|v| k * v).collect();
            let m =
                series_metrics(&t, &xk, h, SettlingBand::Absolute(0.002 * k), (0.0, 10.0)).unwrap();
            assert_relative_eq!(m.iae, k * base.iae, max_relative = 1e-12);
            assert_relative_eq!(m.itae, k * base.itae, max_relative = 1e-12);
            assert_relative_eq!(m.ise, k * k * base.ise, max_relative = 1e-12);
            assert_relative_eq!(m.itse, k * k * base.itse, max_relative = 1e-12);
            assert_eq!(m.settling_time, base.settling_time);
            assert_eq!(m.peak_time, base.peak_time);
        }
    }

    #[test]
    fn shifting_the_disturbance_shifts_nothing_relative() {
        let h = 0.01;
        let t = grid(h, 15.0);
        let a = series_metrics(
            &t,
            &damped(&t, 0.0),
            h,
            SettlingBand::Absolute(0.002),
            (0.0, 10.0),
        )
        .unwrap();
        let b = series_metrics(
            &t,
            &damped(&t, 3.0),
            h,
            SettlingBand::Absolute(0.002),
            (3.0, 13.0),
        )
        .unwrap();
        assert_relative_eq!(a.settling_time, b.settling_time, epsilon = 1e-9);
        assert_relative_eq!(a.peak_time, b.peak_time, epsilon = 1e-9);
        assert_relative_eq!(a.itae, b.itae, max_relative = 1e-6);
        assert_relative_eq!(a.ise, b.ise, max_relative = 1e-6);
    }

    #[test]
    fn refinement_changes_indices_by_order_h() {
        let coarse = 0.01;
        let fine = 0.001;
        let tc = grid(coarse, 10.0);
        let tf = grid(fine, 10.0);
        let mc = series_metrics(
            &tc,
            &damped(&tc, 0.0),
            coarse,
            SettlingBand::Absolute(0.002),
            (0.0, 10.0),
        )
        .unwrap();
        let mf = series_metrics(
            &tf,
            &damped(&tf, 0.0),
            fine,
            SettlingBand::Absolute(0.002),
            (0.0, 10.0),
        )
        .unwrap();
        // rectangle rule: error bounded by h * (max |integrand| + total variation)
        assert!((mc.iae - mf.iae).abs() < coarse * 0.1);
        assert!((mc.ise - mf.ise).abs() < coarse * 0.01);
        assert!((mc.settling_time - mf.settling_time).abs() <= coarse + 1e-9);
        assert!((mc.peak_deviation - mf.peak_deviation).abs() < 1e-12);
    }

    #[test]
    fn persistent_oscillation_is_not_settled() {
        let h = 0.01;
        let t = grid(h, 10.0);
        let x: Vec<f64> = t.iter().map(|&tk| 0.01 * (3.0 * tk).sin()).collect();
        let m = series_metrics(&t, &x, h, SettlingBand::DEFAULT_ABSOLUTE, (0.0, 10.0)).unwrap();
        assert!(!m.settled);
        assert!(m.itae > 0.0);
    }

    #[test]
    fn overshoot_is_reported_per_sign() {
        let h = 0.1;
        let t = grid(h, 10.0);
        let x: Vec<f64> = t
            .iter()
            .map(|&tk| {
                if tk < 1.0 {
                    -0.5
                } else if tk < 2.0 {
                    0.2
                } else {
                    0.0
                }
            })
            .collect();
        let m = series_metrics(&t, &x, h, SettlingBand::Absolute(0.01), (0.0, 10.0)).unwrap();
        assert_eq!(m.overshoot_below, 0.5);
        assert_eq!(m.overshoot_above, 0.2);
        assert_eq!(m.peak_deviation, 0.5);
        assert_relative_eq!(m.settling_time, 1.9, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_window_and_band() {
        let t = grid(0.01, 1.0);
        let x = vec![0.0; t.len()];
        let err =
            series_metrics(&t, &x, 0.01, SettlingBand::Absolute(-1.0), (0.5, 2.0)).unwrap_err();
        let crate::Error::Validation(m) = err else {
            panic!()
        };
        assert_eq!(m.len(), 2, "{m:?}");
    }
}
