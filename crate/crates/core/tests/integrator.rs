use std::f64::consts::PI;

use chdyn_core::diagnostics::{Diagnostics, DiagnosticsConfig, ReferenceMeans};
use chdyn_core::grid::{self, FluxField, GridSpec, InteriorField};
use chdyn_core::integrator::{discrete_mean_chi, discrete_mean_v, stability_ceiling};
use chdyn_core::model::{ModelParams, Polynomial};
use chdyn_core::operators;
use chdyn_core::{Error, Stepper, StepperConfig, SystemState};

fn g() -> GridSpec {
    GridSpec::new(4.0, 2.0, 16, 9).unwrap()
}

fn wavy(g: GridSpec, amp: f64) -> InteriorField {
    let u = InteriorField::from_fn(g, |x, y| (2.0 * PI * x / g.lx).sin() * (PI * y / g.ly).cos() + 0.5 * (4.0 * PI * x / g.lx + y).cos());
    let u = u.shift(-grid::mean(&u));
    u.scale(amp)
}

fn rotational(g: GridSpec) -> FluxField {
    FluxField::from_fn(g, |x, y| ((PI * y / g.ly).cos(), (2.0 * PI * x / g.lx).sin() * (PI * y / g.ly).sin()))
}

fn state(g: GridSpec, v_mean: f64) -> SystemState {
    SystemState::new(InteriorField::constant(g, 0.2), rotational(g), wavy(g, 0.3).shift(0.1), wavy(g, 0.1).shift(v_mean)).unwrap()
}

#[test]
fn curl_decays_geometrically_over_5000_steps() {
    let p = ModelParams::new(1.0, 1.0, 1.0, Polynomial::double_well(), Polynomial::double_well()).unwrap();
    let dt = 1e-3;
    let st = Stepper::new(g(), p, dt).unwrap();
    let mut s = state(g(), 0.0);
    let c0 = operators::curl_norm(&s.q).unwrap();
    for n in 1..=5000 {
        s = st.step(&s).unwrap();
        if n % 250 == 0 {
            let c = operators::curl_norm(&s.q).unwrap();
            let want = c0 * (1.0 + dt).powi(-n);
            assert!(((c - want) / want).abs() < 1e-10, "step {n}: {c} vs {want}");
        }
    }
}

#[test]
fn curl_rate_follows_sigma() {
    let sigma = 0.25;
    let p = ModelParams::new(1.0, sigma, 1.0, Polynomial::double_well(), Polynomial::double_well()).unwrap();
    let dt = 1e-2;
    let st = Stepper::new(g(), p, dt).unwrap();
    let mut s = state(g(), 0.0);
    let c0 = operators::curl_norm(&s.q).unwrap();
    for _ in 0..100 {
        s = st.step(&s).unwrap();
    }
    let want = c0 * (sigma / (sigma + dt)).powi(100);
    assert!((operators::curl_norm(&s.q).unwrap() / want - 1.0).abs() < 1e-10);
}

#[test]
fn conservation_and_mean_closed_forms() {
    let eps = 0.5;
    let p = ModelParams::new(eps, 0.7, 1.3, Polynomial::double_well(), Polynomial::new(vec![0.1, -1.0, 0.0, 2.0])).unwrap();
    let dt = 2e-3;
    let st = Stepper::new(g(), p, dt).unwrap();
    let s0 = state(g(), 0.2);
    let total0 = s0.theta.integral() + s0.chi.integral();
    let (chi0, v0) = (grid::mean(&s0.chi), grid::mean(&s0.v));
    let mut s = s0;
    for n in 1..=1000u64 {
        s = st.step(&s).unwrap();
        let total = s.theta.integral() + s.chi.integral();
        assert!((total - total0).abs() <= 1e-12 * total0.abs());
        let mv = grid::mean(&s.v);
        assert!((mv / discrete_mean_v(v0, dt, eps, n) - 1.0).abs() < 1e-12, "step {n}");
        let mc = discrete_mean_chi(chi0, v0, dt, eps, n);
        assert!((grid::mean(&s.chi) - mc).abs() < 1e-12 * mc.abs().max(1.0));
        assert_eq!(s.steps, n);
        assert_eq!(s.t, n as f64 * dt);
    }
    assert_eq!(grid::trace_defect(&s.chi, &s.xi).unwrap(), 0.0);
}

#[test]
fn run_observes_on_cadence_and_final() {
    let st = Stepper::new(g(), ModelParams::default_double_well(), 1e-2).unwrap();
    let cfg = StepperConfig { dt: 1e-2, t_end: 0.25, cadence: 10 };
    let mut seen = Vec::new();
    let mut obs = |s: &SystemState| -> chdyn_core::Result<()> {
        seen.push(s.steps);
        Ok(())
    };
    let end = st.run(state(g(), 0.0), &cfg, &mut obs).unwrap();
    assert_eq!(seen, vec![0, 10, 20, 25]);
    assert_eq!(end.steps, 25);
}

#[test]
fn blow_up_is_reported_with_step() {
    // far outside the ceiling for this range, the explicit cubic overflows
    let p = ModelParams::default_double_well();
    let st = Stepper::new(g(), p.clone(), 5.0).unwrap();
    assert!(stability_ceiling(&p, (-30.0, 30.0), 0.5) < 5.0);
    let s = SystemState::new(InteriorField::zeros(g()), FluxField::zeros(g()), wavy(g(), 30.0), InteriorField::zeros(g())).unwrap();
    let cfg = StepperConfig { dt: 5.0, t_end: 5000.0, cadence: 1 };
    let err = st.run(s, &cfg, &mut |_: &SystemState| Ok(())).unwrap_err();
    assert!(matches!(err, Error::AtStep { .. }), "{err}");
}

#[test]
fn lyapunov_decreases_on_smooth_run() {
    let p = ModelParams::default_double_well();
    let dt = 1e-3;
    let s0 = SystemState::new(InteriorField::zeros(g()), FluxField::zeros(g()), wavy(g(), 0.2), InteriorField::zeros(g())).unwrap();
    let cfg = DiagnosticsConfig { kappa1: 1e-3, kappa2: 1e-2, reference: ReferenceMeans::of(&s0) };
    let d = Diagnostics::new(g(), p.clone(), dt, cfg).unwrap();
    let st = Stepper::new(g(), p, dt).unwrap();
    let mut s = s0;
    let mut h = d.lyap_h(&s).unwrap();
    for _ in 0..500 {
        s = st.step(&s).unwrap();
        let hn = d.lyap_h(&s).unwrap();
        assert!(hn <= h + 1e-12, "{hn} > {h}");
        assert!(d.dissipation_d(&s).unwrap() >= 0.0);
        h = hn;
    }
}
