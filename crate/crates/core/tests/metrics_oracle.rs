use lfc_core::metrics::series_metrics;
use lfc_core::SettlingBand;

const H: f64 = 0.001;
const T_END: f64 = 20.0;

fn signal(t: f64) -> f64 {
    0.1 * (-t).exp() * (5.0 * t).cos()
}

/// Composite Simpson on a grid 100x finer than the sampled trace.
fn simpson(f: impl Fn(f64) -> f64) -> f64 {
    let n = 2_000_000;
    let dt = T_END / n as f64;
    let mut s = f(0.0) + f(T_END);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * dt);
    }
    s * dt / 3.0
}

fn sampled() -> (Vec<f64>, Vec<f64>) {
    let n = (T_END / H).round() as usize;
    let t: Vec<f64> = (0..=n).map(|k| k as f64 * H).collect();
    let x = t.iter().map(|&t| signal(t)).collect();
    (t, x)
}

#[test]
fn integral_indices_match_fine_quadrature() {
    let (t, x) = sampled();
    let m = series_metrics(&t, &x, H, SettlingBand::Absolute(0.002), (0.0, T_END)).unwrap();
    let cases = [
        ("itae", m.itae, simpson(|t| t * signal(t).abs())),
        ("ise", m.ise, simpson(|t| signal(t).powi(2))),
        ("iae", m.iae, simpson(|t| signal(t).abs())),
        ("itse", m.itse, simpson(|t| t * signal(t).powi(2))),
    ];
    for (name, got, want) in cases {
        let rel = ((got - want) / want).abs();
        assert!(rel < 0.01, "{name}: {got} vs {want} (rel {rel:.2e})");
    }
}

#[test]
fn peak_and_settling_match_brute_force() {
    let (t, x) = sampled();
    let m = series_metrics(&t, &x, H, SettlingBand::Absolute(0.002), (0.0, T_END)).unwrap();
    assert_eq!(m.peak_deviation, 0.1);
    assert_eq!(m.peak_time, 0.0);
    assert!(m.final_value.abs() < 1e-9);
    assert!(m.settled);

    // last instant the continuous signal leaves the band, scanned on a fine grid
    let dt = 1e-6;
    let last = (0..(6.0 / dt) as usize)
        .rev()
        .map(|k| k as f64 * dt)
        .find(|&t| signal(t).abs() > 0.002)
        .unwrap();
    assert!(last > 3.0 && last < 3.92, "oracle {last}");
    assert!(
        (m.settling_time - last).abs() <= H,
        "{} vs {last}",
        m.settling_time
    );
}

#[test]
fn window_start_shifts_the_time_weight() {
    let (t, x) = sampled();
    let x_delayed: Vec<f64> = t
        .iter()
        .map(|&t| if t < 5.0 { 0.0 } else { signal(t - 5.0) })
        .collect();
    let full = series_metrics(&t, &x, H, SettlingBand::Absolute(0.002), (0.0, 15.0)).unwrap();
    let late = series_metrics(
        &t,
        &x_delayed,
        H,
        SettlingBand::Absolute(0.002),
        (5.0, 20.0),
    )
    .unwrap();
    assert!((full.itae - late.itae).abs() < 1e-12);
    assert!((full.settling_time - late.settling_time).abs() < 1e-9);
}
