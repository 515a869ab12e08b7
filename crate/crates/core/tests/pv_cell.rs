use lfc_core::plant::{pv_cell_current, PvCellParams};
use proptest::prelude::*;

fn residual(p: &PvCellParams, v: f64, i: f64) -> f64 {
    let vj = v + i * p.r_s;
    p.i_l - p.i_0 * ((vj / (p.n * p.v_t)).exp() - 1.0) - vj / p.r_sh - i
}

proptest! {
    #[test]
    fn solution_satisfies_the_diode_equation(
        i_l in 0.1f64..10.0,
        log_i0 in -12.0f64..-6.0,
        n in 1.0f64..2.0,
        r_s in 0.0f64..0.05,
        r_sh in 10.0f64..1000.0,
        frac in 0.0f64..1.0,
    ) {
        let p = PvCellParams { i_l, i_0: 10f64.powf(log_i0), n, v_t: 0.025852, r_s, r_sh };
        let v = frac * 0.8;
        let i = pv_cell_current(&p, v).unwrap();
        prop_assert!(residual(&p, v, i).abs() <= 1e-9 * i_l.max(1.0));
    }
}

#[test]
fn current_falls_as_voltage_rises() {
    let p = PvCellParams {
        i_l: 3.0,
        i_0: 1e-10,
        n: 1.2,
        v_t: 0.025852,
        r_s: 0.02,
        r_sh: 200.0,
    };
    let currents: Vec<f64> = (0..40)
        .map(|k| pv_cell_current(&p, k as f64 * 0.02).unwrap())
        .collect();
    assert!(currents.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn rejects_bad_parameters() {
    let p = PvCellParams {
        i_l: 3.0,
        i_0: 0.0,
        n: 1.2,
        v_t: 0.025852,
        r_s: 0.0,
        r_sh: 200.0,
    };
    assert!(matches!(
        pv_cell_current(&p, 0.1),
        Err(lfc_core::Error::Validation(_))
    ));
}
