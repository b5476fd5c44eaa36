use nalgebra::DMatrix;
use proptest::prelude::*;

use vsmfarm::control::{baseline_controllers, LoopId, LoopRef};
use vsmfarm::linearize::*;
use vsmfarm::model::{FarmConfig, FarmOde, InputTag, LoopSignal, OutputTag, PlantSignal};
use vsmfarm::Error;

struct Affine {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl VectorField for Affine {
    fn n_states(&self) -> usize {
        self.a.nrows()
    }
    fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    fn n_outputs(&self) -> usize {
        self.c.nrows()
    }
    fn eval(&self, x: &[f64], u: &[f64]) -> vsmfarm::Result<(Vec<f64>, Vec<f64>)> {
        let x = nalgebra::DVector::from_column_slice(x);
        let u = nalgebra::DVector::from_column_slice(u);
        let f = &self.a * &x + &self.b * &u;
        let y = &self.c * &x + &self.d * &u;
        Ok((f.as_slice().to_vec(), y.as_slice().to_vec()))
    }
}

fn benchmark() -> (FarmConfig, FarmOde, OperatingPoint) {
    let cfg = FarmConfig::benchmark();
    let set = baseline_controllers(&cfg).unwrap();
    let ode = FarmOde::new(&cfg, &set).unwrap();
    let op = find_operating_point(&ode, &TrimTargets::from_config(&cfg)).unwrap();
    (cfg, ode, op)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn affine_system_is_recovered(seed in proptest::collection::vec(-3.0f64..3.0, 5 * 5 + 5 * 2 + 3 * 5 + 3 * 2 + 5 + 2)) {
        let mut it = seed.iter().copied();
        let mut take = |r: usize, c: usize| DMatrix::from_iterator(r, c, it.by_ref().take(r * c));
        let sys = Affine { a: take(5, 5), b: take(5, 2), c: take(3, 5), d: take(3, 2) };
        let x: Vec<f64> = seed[seed.len() - 7..seed.len() - 2].to_vec();
        let u: Vec<f64> = seed[seed.len() - 2..].to_vec();
        let [a, b, c, d] = jacobians(&sys, &x, &u, 1.0).unwrap();
        for (got, want) in [(&a, &sys.a), (&b, &sys.b), (&c, &sys.c), (&d, &sys.d)] {
            prop_assert!((got - want).amax() < 1e-7);
        }
    }
}

#[test]
fn trim_meets_targets() {
    let (cfg, ode, op) = benchmark();
    let f = ode.derivative(&op.x, &op.inputs).unwrap();
    assert!(norm(&f) < TRIM_TOLERANCE);
    let y = ode.outputs(&op.x, &op.inputs).unwrap();
    let p = y[ode.output_index(OutputTag::Plant(PlantSignal::PPcc))];
    assert!((p - cfg.operating_point.p_grid_pu).abs() < 1e-6, "{p}");
    assert_eq!(op.inputs.grid_voltage, 1.0);
    assert_eq!(cfg.grid.scr, 1.0);
}

#[test]
fn trim_restarts_from_perturbed_point() {
    let (cfg, ode, op) = benchmark();
    let mut x = op.x.clone();
    for (i, v) in x.iter_mut().enumerate() {
        *v *= 1.0 + 1e-3 * ((i % 7) as f64 - 3.0);
    }
    let again = find_operating_point_from(&ode, &TrimTargets::from_config(&cfg), &x, &op.inputs).unwrap();
    let dx: Vec<f64> = again.x.iter().zip(&op.x).map(|(a, b)| a - b).collect();
    assert!(norm(&dx) < 1e-8 * norm(&op.x).max(1.0), "{}", norm(&dx));
}

#[test]
fn infeasible_power_is_reported() {
    let set = baseline_controllers(&FarmConfig::benchmark()).unwrap();
    let mut cfg = FarmConfig::benchmark();
    cfg.operating_point.p_grid_pu = 5.0;
    let ode = FarmOde::new(&cfg, &set).unwrap();
    match find_operating_point(&ode, &TrimTargets::from_config(&cfg)) {
        Err(Error::InfeasibleTarget(_)) => {}
        other => panic!("expected infeasible target, got {other:?}"),
    }
}

#[test]
fn empty_farm_trims_grid_alone() {
    let mut cfg = FarmConfig::benchmark();
    cfg.units.clear();
    let ode = FarmOde::new(&cfg, &vsmfarm::control::ControllerSet { format_version: 1, label: "A".into(), units: vec![] }).unwrap();
    let op = find_operating_point(&ode, &TrimTargets::from_config(&cfg)).unwrap();
    assert_eq!(op.x.len(), 4);
    assert!(op.residual_norm < TRIM_TOLERANCE);
}

#[test]
fn operating_point_file_round_trip() {
    let (_, ode, op) = benchmark();
    let back = OperatingPoint::from_toml(&op.to_toml()).unwrap();
    assert_eq!(back, op);
    back.check_against(&ode).unwrap();
}

#[test]
fn jacobian_is_stable_under_step_halving() {
    let (_, ode, op) = benchmark();
    let u = op.inputs.to_vec();
    let [a1, b1, ..] = jacobians(&ode, &op.x, &u, 1.0).unwrap();
    let [a2, b2, ..] = jacobians(&ode, &op.x, &u, 0.5).unwrap();
    let rel = |p: &DMatrix<f64>, q: &DMatrix<f64>| (p - q).norm() / q.norm();
    assert!(rel(&a1, &a2) < 1e-6, "{}", rel(&a1, &a2));
    assert!(rel(&b1, &b2) < 1e-6, "{}", rel(&b1, &b2));
}

#[test]
fn linearisation_is_deterministic_and_consistent() {
    let (_, ode, op) = benchmark();
    let a = jacobian_linearize(&ode, &op.x, &op.inputs).unwrap();
    let b = jacobian_linearize(&ode, &op.x, &op.inputs).unwrap();
    assert_eq!(a.a, b.a);
    a.check_dimensions().unwrap();
    assert_eq!(a.n_states(), 4 + 18 * 4);
    let [ma, mb, mc, md] = LinearModel::parse_matrices(&a.export_text()).unwrap();
    assert_eq!((ma, mb, mc, md), (a.a.clone(), a.b.clone(), a.c.clone(), a.d.clone()));
    assert!(a.is_stable());
}

#[test]
fn plant_input_minus_controller_output_is_the_disturbance() {
    let (_, ode, op) = benchmark();
    let lin = jacobian_linearize(&ode, &op.x, &op.inputs).unwrap();
    for k in 0..4 * LoopId::COUNT {
        let ch = extract_channel(&lin, LoopRef::from_flat(k)).unwrap();
        assert!((&ch.sensitivity.c - &ch.controller.c).amax() < 1e-9);
        assert!((ch.sensitivity.d - ch.controller.d - 1.0).abs() < 1e-9);
    }
}

#[test]
fn identical_feeders_give_identical_channels() {
    let (_, ode, op) = benchmark();
    let lin = jacobian_linearize(&ode, &op.x, &op.inputs).unwrap();
    let sys = vsmfarm::freqresp::HessenbergSystem::new(&lin.a);
    for id in LoopId::ALL {
        let i1 = InputTag::Disturbance(LoopRef::new(0, id));
        let i2 = InputTag::Disturbance(LoopRef::new(1, id));
        let p1 = lin.siso(i1, OutputTag::Loop(LoopRef::new(0, id), LoopSignal::T)).unwrap();
        let p2 = lin.siso(i2, OutputTag::Loop(LoopRef::new(1, id), LoopSignal::T)).unwrap();
        let w = [1.0, 10.0, 300.0, 2000.0];
        let (r1, _) = sys.response(&sys.project(&p1), &w);
        let (r2, _) = sys.response(&sys.project(&p2), &w);
        for (a, b) in r1.iter().zip(&r2) {
            assert!((a - b).norm() < 1e-6 * a.norm().max(1e-3), "{id}: {a} vs {b}");
        }
    }
}
