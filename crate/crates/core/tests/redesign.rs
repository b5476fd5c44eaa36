use vsmfarm::control::{baseline_controllers, LoopId::*, LoopRef};
use vsmfarm::freqresp::{default_grid, loop_functions, HessenbergSystem};
use vsmfarm::linearize::trim_and_linearize;
use vsmfarm::model::FarmConfig;
use vsmfarm::redesign::*;

fn sequence() -> Vec<vsmfarm::control::LoopId> {
    vec![Vsmq, GscQ, RscD, RscQ, GscD, Vsmp, Vdc]
}

#[test]
fn zero_iterations_return_the_input() {
    let cfg = FarmConfig::benchmark();
    let set = baseline_controllers(&cfg).unwrap();
    let (out, report) = coordinated_redesign(&cfg, &set, &cfg.specs, &RedesignOptions::new(0, sequence())).unwrap();
    assert_eq!(out, set);
    assert_eq!(report.passes.len(), 1);
    assert!(report.syntheses.is_empty());
}

#[test]
fn benchmark_classes_pair_equal_feeders() {
    assert_eq!(structural_classes(&FarmConfig::benchmark()), vec![vec![0, 1], vec![2, 3]]);
}

#[test]
fn plant_readout_matches_loop_functions() {
    let cfg = FarmConfig::benchmark();
    let set = baseline_controllers(&cfg).unwrap();
    let lin = trim_and_linearize(&cfg, &set).unwrap().lin;
    let sys = HessenbergSystem::new(&lin.a);
    let l = LoopRef::new(2, GscD);
    let w = 2184.0;
    let r = loop_functions(&lin, &sys, &set, l, &[w]).unwrap();
    let p = plant_at(&lin, &set, l, w).unwrap();
    assert!((p - r.p.values[0]).norm() < 1e-10 * p.norm());
}

#[test]
fn one_pass_moves_toward_targets_and_twins_share_gains() {
    let cfg = FarmConfig::benchmark();
    let set = baseline_controllers(&cfg).unwrap();
    let mut opts = RedesignOptions::new(1, sequence());
    opts.grid = default_grid();
    let (out, report) = coordinated_redesign(&cfg, &set, &cfg.specs, &opts).unwrap();
    assert!(report.max_error(1) < report.max_error(0));
    assert_eq!(out.units[0], out.units[1]);
    assert_eq!(out.units[2], out.units[3]);
    assert!(out.units.iter().all(|u| u.rsc_d.b == 0.0));
    assert_eq!(report.syntheses.len(), 14);
    assert_eq!(report.to_csv().lines().count(), 1 + 2 * 28);
    let again = coordinated_redesign(&cfg, &set, &cfg.specs, &opts).unwrap();
    assert_eq!(again.0, out);
}
