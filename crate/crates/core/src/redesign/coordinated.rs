//! Sequential coordinated redesign against the extracted coupled plants.

use std::fmt::Write as _;

use num_complex::Complex;

use crate::control::{
    reconfigure_one_dof, spec_for, DampingPath, ControllerSet, LoopId, LoopRef, LoopSpec,
};
use crate::error::{Error, Result};
use crate::freqresp::{coupled_margins, default_grid, HessenbergSystem, MarginResult};
use crate::linearize::{extract_channel, trim_and_linearize, LinearModel};
use crate::model::FarmConfig;
use crate::redesign::shaping::{
    pi_loopshape, vsmp_loopshape, vsmq_loopshape, ShapingError, ShapingReadout,
};

/// Relative spec error; infinite when the loop has no crossover.
pub fn spec_errors(m: &MarginResult<f64>, target: &LoopSpec) -> (f64, f64) {
    match m.margins() {
        Some(m) => (
            (m.phi_m_deg - target.phi_m_deg).abs() / target.phi_m_deg,
            (m.omega_o - target.omega_o).abs() / target.omega_o,
        ),
        None => (f64::INFINITY, f64::INFINITY),
    }
}

/// Margins of every loop after one pass (pass 0 holds the starting set).
#[derive(Debug, Clone, PartialEq)]
pub struct PassMargins {
    pub iteration: usize,
    pub margins: Vec<(LoopRef, MarginResult<f64>)>,
}

/// One synthesis step.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisRecord {
    pub iteration: usize,
    pub loop_ref: LoopRef,
    pub readout: ShapingReadout,
    /// Units that received the new parameters.
    pub installed_on: Vec<usize>,
    /// Parameter name/value pairs after the update.
    pub params: Vec<(&'static str, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedesignReport {
    pub specs: Vec<LoopSpec>,
    pub sequence: Vec<LoopId>,
    pub passes: Vec<PassMargins>,
    pub syntheses: Vec<SynthesisRecord>,
}

impl RedesignReport {
    /// Largest relative spec error of a pass over both margins.
    pub fn max_error(&self, pass: usize) -> f64 {
        self.passes[pass]
            .margins
            .iter()
            .filter_map(|(l, m)| spec_for(&self.specs, l.loop_id).map(|t| spec_errors(m, t)))
            .map(|(a, b)| a.max(b))
            .fold(0.0, f64::max)
    }

    /// One row per pass and loop.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "pass,loop,phi_m_deg,omega_o,target_phi_m_deg,target_omega_o,err_phi_pct,err_omega_pct,multiple\n",
        );
        for p in &self.passes {
            for (l, m) in &p.margins {
                let Some(t) = spec_for(&self.specs, l.loop_id) else { continue };
                let (ep, ew) = spec_errors(m, t);
                let (phi, w, mult) = match m.margins() {
                    Some(m) => (format!("{:.6}", m.phi_m_deg), format!("{:.6}", m.omega_o), m.multiple),
                    None => ("none".into(), "none".into(), false),
                };
                let _ = writeln!(
                    s,
                    "{},{l},{phi},{w},{},{},{:.6},{:.6},{mult}",
                    p.iteration,
                    t.phi_m_deg,
                    t.omega_o,
                    100.0 * ep,
                    100.0 * ew
                );
            }
        }
        s
    }

    /// Synthesis log, one row per installed update.
    pub fn syntheses_csv(&self) -> String {
        let mut s = String::from("pass,loop,a_p_db,phi_p_deg,delta_a_db,delta_phi_deg,units,params\n");
        for r in &self.syntheses {
            let units: Vec<String> = r.installed_on.iter().map(|u| (u + 1).to_string()).collect();
            let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v:.9e}")).collect();
            let _ = writeln!(
                s,
                "{},{},{:.6},{:.6},{:.6},{:.6},{},{}",
                r.iteration,
                r.loop_ref,
                r.readout.a_p_db,
                r.readout.phi_p_deg,
                r.readout.delta_a_db,
                r.readout.delta_phi_deg,
                units.join(" "),
                params.join(" ")
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedesignOptions {
    pub iterations: usize,
    pub sequence: Vec<LoopId>,
    /// Frequency grid for the per-pass margin check.
    pub grid: Vec<f64>,
    /// Zero proportional set-point weight and power-only VSMP damping on the
    /// result, so each reference response follows its second-order template.
    /// Loop functions are unaffected.
    pub template_references: bool,
}

impl RedesignOptions {
    pub fn new(iterations: usize, sequence: Vec<LoopId>) -> Self {
        Self { iterations, sequence, grid: default_grid(), template_references: true }
    }
}

/// Units grouped by identical feeders; the first of each group is synthesised.
pub fn structural_classes(config: &FarmConfig) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (k, u) in config.units.iter().enumerate() {
        let key = (u.feeder_z_pu, u.feeder_x_over_r);
        match classes.iter_mut().find(|c| {
            let r = &config.units[c[0]];
            (r.feeder_z_pu, r.feeder_x_over_r) == key
        }) {
            Some(c) => c.push(k),
            None => classes.push(vec![k]),
        }
    }
    classes
}

/// Effective plant of `loop_ref` at `omega`.
pub fn plant_at(
    lin: &LinearModel,
    controllers: &ControllerSet,
    loop_ref: LoopRef,
    omega: f64,
) -> Result<Complex<f64>> {
    let sys = HessenbergSystem::new(&lin.a);
    let ch = extract_channel(lin, loop_ref)?;
    let (s, _) = sys.response(&sys.project(&ch.sensitivity), &[omega]);
    let (t, _) = sys.response(&sys.project(&ch.controller), &[omega]);
    let g = -t[0] / s[0];
    let c = reconfigure_one_dof::<f64>(controllers, loop_ref.unit, loop_ref.loop_id)?.freq(omega);
    Ok(g / c)
}

fn all_loops(n: usize) -> Vec<LoopRef> {
    (0..n * LoopId::COUNT).map(LoopRef::from_flat).collect()
}

fn synth_error(loop_ref: LoopRef, iteration: usize, e: ShapingError, r: &ShapingReadout) -> Error {
    Error::Synthesis {
        loop_id: loop_ref.loop_id,
        unit: loop_ref.unit,
        iteration,
        reason: format!(
            "{e}; readout A_p = {:.4} dB, phi_p = {:.4} deg",
            r.a_p_db, r.phi_p_deg
        ),
    }
}

/// Sets `b = 0` on every PI loop and feeds the VSMP damping from power only.
pub fn use_template_references(set: &mut ControllerSet) {
    for u in &mut set.units {
        u.vsmp.damping_path = DampingPath::PowerOnly;
        for id in LoopId::ALL.into_iter().filter(|l| l.is_pi()) {
            u.pi_mut(id).unwrap().b = 0.0;
        }
    }
}

/// Walks `sequence` `iterations` times, re-trimming and re-linearising after
/// every installed update.
pub fn coordinated_redesign(
    config: &FarmConfig,
    initial: &ControllerSet,
    specs: &[LoopSpec],
    options: &RedesignOptions,
) -> Result<(ControllerSet, RedesignReport)> {
    let n = config.n_units();
    let loops = all_loops(n);
    let mut set = initial.clone();
    if options.iterations > 0 && options.template_references {
        use_template_references(&mut set);
    }
    let start = trim_and_linearize(config, &set)?;
    let mut report = RedesignReport {
        specs: specs.to_vec(),
        sequence: options.sequence.clone(),
        passes: vec![PassMargins {
            iteration: 0,
            margins: coupled_margins(&start.lin, &set, &loops, &options.grid)?,
        }],
        syntheses: Vec::new(),
    };
    let classes = structural_classes(config);
    for iteration in 1..=options.iterations {
        for &id in &options.sequence {
            let target = *spec_for(specs, id).ok_or(Error::UnknownLoop(id.label().into()))?;
            for class in &classes {
                let rep = class[0];
                let loop_ref = LoopRef::new(rep, id);
                let lin = trim_and_linearize(config, &set)?.lin;
                let p = plant_at(&lin, &set, loop_ref, target.omega_o)?;
                let readout = ShapingReadout::from_plant(p, &target);
                let unit = &mut set.units[rep];
                let params: Vec<(&'static str, f64)> = match id {
                    LoopId::Vsmp => {
                        let v = vsmp_loopshape(&readout, &target, &unit.vsmp, config.vsm.inertia_floor_s)
                            .map_err(|e| synth_error(loop_ref, iteration, e, &readout))?;
                        unit.vsmp = v;
                        vec![("h", v.h), ("d_d", v.d_d)]
                    }
                    LoopId::Vsmq => {
                        let k = vsmq_loopshape(p).map_err(|e| synth_error(loop_ref, iteration, e, &readout))?;
                        unit.vsmq.k_q = k;
                        vec![("k_q", k)]
                    }
                    pi => {
                        let g = unit.pi_mut(pi).unwrap();
                        let new = pi_loopshape(&readout, &target, g.b)
                            .map_err(|e| synth_error(loop_ref, iteration, e, &readout))?;
                        *g = new;
                        vec![("kp", new.kp), ("ki", new.ki)]
                    }
                };
                let source = set.units[rep].clone();
                for &twin in &class[1..] {
                    set.units[twin].copy_loop_from(&source, id);
                }
                report.syntheses.push(SynthesisRecord {
                    iteration,
                    loop_ref,
                    readout,
                    installed_on: class.clone(),
                    params,
                });
            }
        }
        let lin = trim_and_linearize(config, &set)?.lin;
        report.passes.push(PassMargins {
            iteration,
            margins: coupled_margins(&lin, &set, &loops, &options.grid)?,
        });
    }
    Ok((set, report))
}
