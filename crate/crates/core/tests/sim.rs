use vsmfarm::control::baseline_controllers;
use vsmfarm::linearize::{find_operating_point, OperatingPoint, TrimTargets};
use vsmfarm::model::{FarmConfig, FarmOde};
use vsmfarm::sim::*;

fn trimmed() -> (FarmConfig, FarmOde, OperatingPoint) {
    let cfg = FarmConfig::benchmark();
    let ode = FarmOde::new(&cfg, &baseline_controllers(&cfg).unwrap()).unwrap();
    let op = find_operating_point(&ode, &TrimTargets::from_config(&cfg)).unwrap();
    (cfg, ode, op)
}

#[test]
fn equilibrium_persists_without_events() {
    let (cfg, ode, op) = trimmed();
    let mut sc = pref_step(&cfg.units[0].name);
    sc.events.clear();
    sc.duration_s = 2.0;
    let s = integrate(&ode, &op.x, &op.inputs, &sc).unwrap();
    for (name, c) in s.names.iter().zip(&s.columns) {
        let spread = c.iter().map(|v| (v - c[0]).abs()).fold(0.0, f64::max);
        assert!(spread < 1e-6, "{name} drifts by {spread:e}");
    }
}

#[test]
fn rk4_step_halving_converges() {
    let (cfg, ode, op) = trimmed();
    let mut sc = voltage_dip(&cfg.units[0].name);
    sc.events.truncate(1);
    sc.events[0].time_s = 0.01;
    sc.duration_s = 0.05;
    let a = terminal_state(&ode, &op.x, &op.inputs, &sc).unwrap();
    let b = terminal_state(&ode, &op.x, &op.inputs, &sc.clone().with_dt(sc.integrator.dt / 2.0)).unwrap();
    let diff = a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let size = b.iter().map(|q| q * q).sum::<f64>().sqrt();
    assert!(diff / size < 1e-7, "{:e}", diff / size);
}

#[test]
fn dc_link_energy_matches_converter_power() {
    let (_, ode, op) = trimmed();
    let mut u = op.inputs.clone();
    u.grid_voltage -= 0.2;
    let dt = 50e-6;
    let wb = ode.bases.omega_b;
    let c = ode.dfig.c_dc;
    let idx = ode.layout.get("DFIG1.u_dc").unwrap();
    let energy = |x: &[f64]| c * x[idx] * x[idx] / (2.0 * wb);
    let net = |x: &[f64]| {
        let s = &ode.unit_snapshots(x, &u).unwrap()[0];
        -(s.p_rsc + s.p_gsc)
    };
    let mut x = op.x.clone();
    let e0 = energy(&x);
    let mut integral = 0.0;
    let mut prev = net(&x);
    for _ in 0..2000 {
        let mut f = |x: &[f64]| ode.derivative(x, &u);
        x = rk4_step(&mut f, &x, dt).unwrap();
        let now = net(&x);
        integral += 0.5 * dt * (prev + now);
        prev = now;
    }
    assert!((energy(&x) - e0 - integral).abs() < 1e-6, "{:e}", energy(&x) - e0 - integral);
}

#[test]
fn dip_trace_and_pre_event_window() {
    let (cfg, ode, op) = trimmed();
    let mut sc = voltage_dip(&cfg.units[0].name);
    sc.duration_s = 1.6;
    let s = integrate(&ode, &op.x, &op.inputs, &sc).unwrap();
    let v = s.channel("grid_voltage").unwrap();
    let at = |t: f64| v[s.index_at(t)];
    assert_eq!(v[s.index_at(1.0) - 1], 1.0);
    assert!((at(1.0) - 0.8).abs() < 1e-12);
    assert!((v[s.index_at(1.5) - 1] - 0.8).abs() < 1e-12);
    assert!((at(1.5) - 1.0).abs() < 1e-12);
    let udc = s.channel("udc").unwrap();
    assert!((udc[0] - 2.0).abs() < 1e-9);
    let pre = &udc[..s.index_at(1.0)];
    assert!(pre.iter().all(|x| (x - udc[0]).abs() < 1e-9));
}

#[test]
fn scenario_runs_are_bit_identical() {
    let (cfg, ode, op) = trimmed();
    let mut sc = pref_step(&cfg.units[0].name);
    sc.duration_s = 1.2;
    let a = integrate(&ode, &op.x, &op.inputs, &sc).unwrap();
    let b = integrate(&ode, &op.x, &op.inputs, &sc).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert!(a.is_finite());
    let p = a.channel("p_set").unwrap();
    assert!((p[a.index_at(1.0)] - p[0] - PREF_STEP_PU).abs() < 1e-12);
}

#[test]
fn blow_up_is_reported() {
    let (cfg, ode, op) = trimmed();
    let mut sc = pref_step(&cfg.units[0].name);
    sc.events.clear();
    sc.duration_s = 0.01;
    let mut x = op.x.clone();
    x[0] = 2e6;
    assert!(matches!(integrate(&ode, &x, &op.inputs, &sc), Err(vsmfarm::Error::BlowUp { .. })));
}
