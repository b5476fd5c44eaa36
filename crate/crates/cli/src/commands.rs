use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use vsmfarm::control::{baseline_controllers, decoupled_margins, specs_to_toml, ControllerSet, LoopId, LoopRef, LoopSpec};
use vsmfarm::freqresp::{coupled_margins, default_grid, loop_functions, loop_functions_csv, margins_csv, HessenbergSystem, MarginResult};
use vsmfarm::interaction::{correlation_matrix, impulse_rejection_set, influence_indices, redesign_sequence, ImpulseSettings, LoopIndices};
use vsmfarm::linearize::{find_operating_point, jacobian_linearize, LinearModel, OperatingPoint, TrimTargets};
use vsmfarm::model::{FarmConfig, FarmOde};
use vsmfarm::redesign::{coordinated_redesign, structural_classes, RedesignOptions, RedesignReport};
use vsmfarm::sim::{self, Scenario, TimeSeries};

use crate::artifacts::{Inputs, Staging};
use crate::fail::{CliError, CliResult, EXIT_GATE};

/// Largest admissible final spec error of a redesign.
pub const REDESIGN_GATE: f64 = 0.10;
/// Residual above which a supplied operating point is rejected.
pub const OP_TOLERANCE: f64 = 1e-6;

pub struct Context {
    pub config_path: PathBuf,
    pub config: FarmConfig,
    pub controllers: ControllerSet,
    pub specs: Vec<LoopSpec>,
    pub inputs: Inputs,
}

impl Context {
    pub fn load(config: &Path, controllers: Option<&Path>, specs: Option<&Path>) -> CliResult<Self> {
        let mut inputs = Inputs::default();
        let cfg = FarmConfig::from_toml(&inputs.read("config", config)?)?;
        let set = match controllers {
            Some(p) => ControllerSet::from_toml(&inputs.read("controllers", p)?)?,
            None => baseline_controllers(&cfg)?,
        };
        if set.units.len() != cfg.n_units() {
            return Err(CliError::parse(format!(
                "controller set has {} units, config has {}",
                set.units.len(),
                cfg.n_units()
            )));
        }
        let specs = match specs {
            Some(p) => vsmfarm::control::specs_from_toml(&inputs.read("specs", p)?)?,
            None => cfg.specs.clone(),
        };
        Ok(Self { config_path: config.to_path_buf(), config: cfg, controllers: set, specs, inputs })
    }

    pub fn ode(&self) -> CliResult<FarmOde> {
        Ok(FarmOde::new(&self.config, &self.controllers)?)
    }

    /// Reads `op` when given, otherwise trims.
    pub fn operating_point(&mut self, ode: &FarmOde, op: Option<&Path>) -> CliResult<OperatingPoint> {
        match op {
            Some(p) => {
                let op = OperatingPoint::from_toml(&self.inputs.read("operating_point", p)?)?;
                op.check_against(ode)?;
                let f = ode.derivative(&op.x, &op.inputs)?;
                let r = f.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(r < OP_TOLERANCE) {
                    return Err(CliError::parse(format!(
                        "{} is not an equilibrium of these controllers (residual {r:.3e})",
                        p.display()
                    )));
                }
                Ok(op)
            }
            None => Ok(find_operating_point(ode, &TrimTargets::from_config(&self.config))?),
        }
    }

    pub fn linearize(&mut self, op: Option<&Path>) -> CliResult<(OperatingPoint, LinearModel)> {
        let ode = self.ode()?;
        let op = self.operating_point(&ode, op)?;
        let lin = jacobian_linearize(&ode, &op.x, &op.inputs)?;
        Ok((op, lin))
    }

    pub fn commit(&self, staging: Staging, command: &str, stage: &str) -> CliResult<PathBuf> {
        staging.commit(command, stage, &self.config_path, &self.inputs)
    }
}

fn all_loops(n: usize) -> Vec<LoopRef> {
    (0..n * LoopId::COUNT).map(LoopRef::from_flat).collect()
}

pub fn baseline(ctx: &Context, out: &Path, stage: &str) -> CliResult<()> {
    let set = baseline_controllers(&ctx.config)?.with_label(stage);
    let mut st = Staging::new(out)?;
    st.write("controllers.toml", &set.to_toml())?;
    st.write("margins.csv", &margins_csv(stage, &decoupled_margins(&ctx.config, &set)?, &ctx.specs))?;
    ctx.commit(st, "baseline", stage)?;
    Ok(())
}

pub fn trim(ctx: &Context, out: &Path, stage: &str) -> CliResult<()> {
    let ode = ctx.ode()?;
    let op = find_operating_point(&ode, &TrimTargets::from_config(&ctx.config))?;
    let mut st = Staging::new(out)?;
    st.write("operating_point.toml", &op.to_toml())?;
    st.param("residual_norm", format!("{:e}", op.residual_norm));
    ctx.commit(st, "trim", stage)?;
    eprintln!("trimmed in {} iterations, residual {:.3e}", op.iterations, op.residual_norm);
    Ok(())
}

fn eigen_csv(lin: &LinearModel) -> String {
    let mut ev = lin.eigenvalues();
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let mut s = String::from("re,im\n");
    for e in ev {
        let _ = writeln!(s, "{:.12e},{:.12e}", e.re, e.im);
    }
    s
}

pub fn linearize(ctx: &mut Context, op: Option<&Path>, out: &Path, stage: &str) -> CliResult<()> {
    let (op, lin) = ctx.linearize(op)?;
    let mut st = Staging::new(out)?;
    st.write("linear_model.txt", &lin.export_text())?;
    st.write("eigenvalues.csv", &eigen_csv(&lin))?;
    st.write("operating_point.toml", &op.to_toml())?;
    st.param("spectral_abscissa", format!("{:e}", lin.spectral_abscissa()));
    ctx.commit(st, "linearize", stage)?;
    Ok(())
}

fn coupled(ctx: &Context, lin: &LinearModel, set: &ControllerSet) -> CliResult<Vec<(LoopRef, MarginResult<f64>)>> {
    Ok(coupled_margins(lin, set, &all_loops(ctx.config.n_units()), &default_grid())?)
}

pub fn margins(ctx: &mut Context, op: Option<&Path>, decoupled: bool, bode: bool, out: &Path, stage: &str) -> CliResult<()> {
    let mut st = Staging::new(out)?;
    if decoupled {
        let rows = decoupled_margins(&ctx.config, &ctx.controllers)?;
        st.write("margins.csv", &margins_csv(stage, &rows, &ctx.specs))?;
        st.param("mode", "decoupled");
    } else {
        let (_, lin) = ctx.linearize(op)?;
        let rows = coupled(ctx, &lin, &ctx.controllers)?;
        st.write("margins.csv", &margins_csv(stage, &rows, &ctx.specs))?;
        st.param("mode", "coupled");
        if bode {
            let sys = HessenbergSystem::new(&lin.a);
            let grid = default_grid();
            for l in all_loops(ctx.config.n_units()) {
                let r = loop_functions(&lin, &sys, &ctx.controllers, l, &grid)?;
                st.write(&format!("loop_{l}.csv"), &loop_functions_csv(&r))?;
            }
        }
    }
    ctx.commit(st, "margins", stage)?;
    Ok(())
}

/// Interaction outputs for the first unit of each structural class.
pub struct Interaction {
    pub rho_csv: String,
    pub indices: Vec<(String, LoopIndices)>,
    pub sequence: Vec<LoopId>,
}

pub fn interaction(config: &FarmConfig, lin: &LinearModel) -> CliResult<Interaction> {
    let loops = all_loops(config.n_units());
    let signals = impulse_rejection_set(lin, &loops, &loops, ImpulseSettings::default())?;
    let m = correlation_matrix(&signals)?;
    let mut indices = Vec::new();
    for class in structural_classes(config) {
        let k = class[0];
        indices.push((config.units[k].name.clone(), influence_indices(&m.unit_block(k))?));
    }
    let only: Vec<LoopIndices> = indices.iter().map(|(_, i)| i.clone()).collect();
    Ok(Interaction { rho_csv: m.to_csv(), sequence: redesign_sequence(&only), indices })
}

fn indices_csv(ix: &[(String, LoopIndices)]) -> String {
    let mut s = String::from("unit,loop,iidx,sidx\n");
    for (u, i) in ix {
        for k in 0..i.labels.len() {
            let _ = writeln!(s, "{u},{},{:.9},{:.9}", i.labels[k], i.iidx[k], i.sidx[k]);
        }
    }
    s
}

fn sequence_text(seq: &[LoopId]) -> String {
    seq.iter().map(|l| format!("{l}\n")).collect()
}

pub fn parse_sequence(text: &str) -> CliResult<Vec<LoopId>> {
    let seq: Vec<LoopId> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<LoopId>().map_err(CliError::from))
        .collect::<CliResult<_>>()?;
    if seq.is_empty() {
        return Err(CliError::parse("redesign sequence is empty"));
    }
    Ok(seq)
}

pub fn interact(ctx: &mut Context, op: Option<&Path>, out: &Path, stage: &str) -> CliResult<()> {
    let (_, lin) = ctx.linearize(op)?;
    let ia = interaction(&ctx.config, &lin)?;
    let mut st = Staging::new(out)?;
    st.write("rho.csv", &ia.rho_csv)?;
    st.write("indices.csv", &indices_csv(&ia.indices))?;
    st.write("sequence.txt", &sequence_text(&ia.sequence))?;
    ctx.commit(st, "interact", stage)?;
    Ok(())
}

fn gate(report: &RedesignReport, stable: bool) -> CliResult<()> {
    let last = report.passes.len() - 1;
    if last == 0 {
        return Ok(());
    }
    let err = report.max_error(last);
    if !stable {
        return Err(CliError::new(EXIT_GATE, "redesigned closed loop is unstable"));
    }
    if !(err <= REDESIGN_GATE) {
        return Err(CliError::new(
            EXIT_GATE,
            format!("largest spec error after {last} passes is {:.2}% (gate {:.0}%)", 100.0 * err, 100.0 * REDESIGN_GATE),
        ));
    }
    Ok(())
}

pub struct RedesignRun {
    pub set: ControllerSet,
    pub report: RedesignReport,
    pub lin: LinearModel,
    pub op: OperatingPoint,
}

pub fn run_redesign(ctx: &Context, sequence: Vec<LoopId>, iterations: usize, stage: &str) -> CliResult<RedesignRun> {
    let opts = RedesignOptions::new(iterations, sequence);
    let (set, report) = coordinated_redesign(&ctx.config, &ctx.controllers, &ctx.specs, &opts)?;
    let set = if iterations == 0 { set } else { set.with_label(stage) };
    let ode = FarmOde::new(&ctx.config, &set)?;
    let op = find_operating_point(&ode, &TrimTargets::from_config(&ctx.config))?;
    let lin = jacobian_linearize(&ode, &op.x, &op.inputs)?;
    Ok(RedesignRun { set, report, lin, op })
}

pub fn redesign(
    ctx: &mut Context,
    op: Option<&Path>,
    sequence: Option<&Path>,
    iterations: usize,
    out: &Path,
    stage: &str,
) -> CliResult<()> {
    let seq = match sequence {
        Some(p) => parse_sequence(&ctx.inputs.read("sequence", p)?)?,
        None => {
            let (_, lin) = ctx.linearize(op)?;
            interaction(&ctx.config, &lin)?.sequence
        }
    };
    let run = run_redesign(ctx, seq.clone(), iterations, stage)?;
    let mut st = Staging::new(out)?;
    st.write("controllers.toml", &run.set.to_toml())?;
    st.write("redesign_report.csv", &run.report.to_csv())?;
    st.write("syntheses.csv", &run.report.syntheses_csv())?;
    st.write("sequence.txt", &sequence_text(&seq))?;
    st.write("specs.toml", &specs_to_toml(&ctx.specs))?;
    st.param("iterations", iterations);
    let stable = run.lin.is_stable();
    st.param("stable", stable);
    ctx.commit(st, "redesign", stage)?;
    for (p, _) in run.report.passes.iter().enumerate() {
        eprintln!("pass {p}: largest spec error {:.3}%", 100.0 * run.report.max_error(p));
    }
    gate(&run.report, stable)
}

pub fn load_scenario(ctx: &mut Context, name: &str, dt: Option<f64>, tf: Option<f64>) -> CliResult<Scenario> {
    let mut sc = match sim::builtin(name, &ctx.config) {
        Some(s) => s,
        None => Scenario::from_toml(&ctx.inputs.read("scenario", Path::new(name))?)?,
    };
    if let Some(dt) = dt {
        sc = sc.with_dt(dt);
    }
    if let Some(tf) = tf {
        sc.duration_s = tf;
    }
    sc.validate()?;
    Ok(sc)
}

pub fn simulate(
    ctx: &mut Context,
    compare: Option<&Path>,
    scenario: &str,
    dt: Option<f64>,
    tf: Option<f64>,
    out: &Path,
    stage: &str,
) -> CliResult<()> {
    let sc = load_scenario(ctx, scenario, dt, tf)?;
    let series = match compare {
        Some(p) => {
            let other = ControllerSet::from_toml(&ctx.inputs.read("compare", p)?)?;
            sim::compare_scenario(&ctx.config, &ctx.controllers, &other, &sc)?
        }
        None => sim::run_scenario(&ctx.config, &ctx.controllers, &sc)?,
    };
    let mut st = Staging::new(out)?;
    st.write(&format!("{}.csv", sc.name), &series.to_csv())?;
    st.write("scenario.toml", &sc.to_toml())?;
    st.param("scenario", &sc.name);
    st.param("dt", format!("{:e}", sc.integrator.dt));
    st.param("duration_s", sc.duration_s);
    ctx.commit(st, "simulate", stage)?;
    Ok(())
}

/// Step responses of the template-specified loops of the first unit.
pub fn step_responses(ctx: &Context, lin: &LinearModel) -> CliResult<Vec<(LoopId, TimeSeries)>> {
    let mut out = Vec::new();
    for spec in ctx.specs.iter().filter(|s| s.zeta.is_some() && s.omega_n.is_some()) {
        let (z, w) = sim::template_of(spec)?;
        let horizon = 2.0 * 4.0 / (z * w);
        let dt = horizon / 2000.0;
        let r = sim::step_response_linear(lin, LoopRef::new(0, spec.loop_id), dt, horizon)?;
        let t = sim::second_order_template(z, w, dt, horizon)?;
        let mut s = TimeSeries::new(0.0, dt, vec!["response".into(), "template".into()]);
        for k in 0..r.len() {
            s.push(&[r.columns[0][k], t.columns[0][k]]);
        }
        out.push((spec.loop_id, s));
    }
    Ok(out)
}

/// Runs the whole pipeline and writes every table and figure series.
pub fn reproduce(ctx: &mut Context, iterations: usize, dt: Option<f64>, out: &Path) -> CliResult<()> {
    let mut st = Staging::new(out)?;
    let stage_a = baseline_controllers(&ctx.config)?.with_label("A");
    ctx.controllers = stage_a.clone();
    st.write("controllers_A.toml", &stage_a.to_toml())?;

    let (op, lin) = ctx.linearize(None)?;
    st.write("operating_point.toml", &op.to_toml())?;
    st.write("eigenvalues_B.csv", &eigen_csv(&lin))?;
    let mut table = margins_csv("A", &decoupled_margins(&ctx.config, &stage_a)?, &ctx.specs);
    let body = |csv: String| csv.split_once('\n').map(|(_, b)| b.to_string()).unwrap_or_default();
    table.push_str(&body(margins_csv("B", &coupled(ctx, &lin, &stage_a)?, &ctx.specs)));

    let ia = interaction(&ctx.config, &lin)?;
    st.write("rho.csv", &ia.rho_csv)?;
    st.write("indices.csv", &indices_csv(&ia.indices))?;
    st.write("sequence.txt", &sequence_text(&ia.sequence))?;
    eprintln!("redesign sequence: {}", sequence_text(&ia.sequence).replace('\n', " "));

    let run = run_redesign(ctx, ia.sequence.clone(), iterations, "gamma")?;
    st.write("controllers_gamma.toml", &run.set.to_toml())?;
    st.write("operating_point_gamma.toml", &run.op.to_toml())?;
    st.write("eigenvalues_gamma.csv", &eigen_csv(&run.lin))?;
    st.write("redesign_report.csv", &run.report.to_csv())?;
    st.write("syntheses.csv", &run.report.syntheses_csv())?;
    table.push_str(&body(margins_csv("gamma", &coupled(ctx, &run.lin, &run.set)?, &ctx.specs)));
    st.write("table2.csv", &table)?;

    let gamma_ctx = Context {
        config_path: ctx.config_path.clone(),
        config: ctx.config.clone(),
        controllers: run.set.clone(),
        specs: ctx.specs.clone(),
        inputs: Inputs::default(),
    };
    for (id, s) in step_responses(&gamma_ctx, &run.lin)? {
        st.write(&format!("step_{id}.csv"), &s.to_csv())?;
    }
    for name in ["pref_step", "voltage_dip"] {
        let sc = load_scenario(ctx, name, dt, None)?;
        let series = sim::compare_scenario(&ctx.config, &stage_a, &run.set, &sc)?;
        st.write(&format!("{name}.csv"), &series.to_csv())?;
    }
    st.param("iterations", iterations);
    if let Some(dt) = dt {
        st.param("dt", format!("{dt:e}"));
    }
    let stable = run.lin.is_stable();
    st.param("stable_gamma", stable);
    ctx.commit(st, "reproduce-paper", "A/B/gamma")?;
    gate(&run.report, stable)
}
