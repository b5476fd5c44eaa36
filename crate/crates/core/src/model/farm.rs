//! Assembled farm vector field.
//!
//! Frames: the common frame rotates at the grid frequency `f` with the grid
//! source on its real axis. Unit `k` runs in its own virtual-shaft frame at
//! angle `δ_k`, with the virtual flux on the local d-axis. The grid-side
//! converter frame is the local frame advanced by 90°, so its d-axis lies on
//! the internal EMF.
//!
//! Feeder and grid branch currents are fixed by Kirchhoff's current law in
//! terms of the stator and filter currents, so the node voltages are solved
//! algebraically from the inductive cut-set at every evaluation.

use num_complex::Complex;

use crate::control::{
    ControllerSet, DampingPath, LoopId, LoopRef, PiGains, TwoDofPi, VoltageFeedback, VsmpBlock,
    VsmqParams,
};
use crate::error::{Error, Result};
use crate::model::bases::PuBases;
use crate::model::config::FarmConfig;
use crate::model::drivetrain::{drivetrain_derivatives, DrivetrainParams, DrivetrainState};
use crate::model::grid::{grid_derivatives, GridParams, GridState};
use crate::model::layout::{
    StateLayout, GRID_STATES, G_FREQ, G_GOV, G_PM, G_RATE, UNIT_STATES, U_DELTA, U_IGD, U_IGQ,
    U_OMEGA_R, U_OMEGA_T, U_PSI_RD, U_PSI_RQ, U_PSI_SD, U_PSI_SQ, U_PSI_V, U_TTG, U_UDC, U_W,
    U_X_GSCD, U_X_GSCQ, U_X_RSCD, U_X_RSCQ, U_X_VDC,
};
use crate::model::machine::{active_power, electrical_torque, reactive_power, DfigParams};
use crate::model::network::{Branch, NetworkTopology};
use crate::model::turbine::{mechanical_power, TurbineParams};

type C64 = Complex<f64>;

const J: C64 = C64::new(0.0, 1.0);

/// Exogenous inputs of the farm.
#[derive(Debug, Clone, PartialEq)]
pub struct FarmInputs {
    /// Additive disturbance at each controller output, `unit * 7 + loop`.
    pub d: Vec<f64>,
    /// Additive offset on each loop reference.
    pub r: Vec<f64>,
    /// Wind speed per unit, m/s.
    pub wind: Vec<f64>,
    /// Active-power set point per unit, machine pu.
    pub p_set: Vec<f64>,
    pub grid_voltage: f64,
    /// Mechanical set point of the equivalent generator, plant pu.
    pub p_m_star: f64,
}

impl FarmInputs {
    pub fn zeros(n_units: usize) -> Self {
        Self {
            d: vec![0.0; n_units * LoopId::COUNT],
            r: vec![0.0; n_units * LoopId::COUNT],
            wind: vec![0.0; n_units],
            p_set: vec![0.0; n_units],
            grid_voltage: 1.0,
            p_m_star: 0.0,
        }
    }

    pub fn n_units(&self) -> usize {
        self.wind.len()
    }

    pub fn len_for(n_units: usize) -> usize {
        16 * n_units + 2
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::len_for(self.n_units()));
        v.extend_from_slice(&self.d);
        v.extend_from_slice(&self.r);
        v.extend_from_slice(&self.wind);
        v.extend_from_slice(&self.p_set);
        v.push(self.grid_voltage);
        v.push(self.p_m_star);
        v
    }

    pub fn from_slice(n_units: usize, v: &[f64]) -> Self {
        assert_eq!(v.len(), Self::len_for(n_units));
        let m = n_units * LoopId::COUNT;
        Self {
            d: v[..m].to_vec(),
            r: v[m..2 * m].to_vec(),
            wind: v[2 * m..2 * m + n_units].to_vec(),
            p_set: v[2 * m + n_units..2 * m + 2 * n_units].to_vec(),
            grid_voltage: v[2 * m + 2 * n_units],
            p_m_star: v[2 * m + 2 * n_units + 1],
        }
    }
}

/// Signals recorded at each loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoopSignal {
    /// Plant input: controller output plus disturbance.
    S,
    /// Controller output.
    T,
    /// Controller error.
    E,
    /// Controlled variable.
    Y,
}

impl LoopSignal {
    pub const ALL: [LoopSignal; 4] = [LoopSignal::S, LoopSignal::T, LoopSignal::E, LoopSignal::Y];

    pub fn label(self) -> &'static str {
        match self {
            LoopSignal::S => "s",
            LoopSignal::T => "t",
            LoopSignal::E => "e",
            LoopSignal::Y => "y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitSignal {
    P,
    Q,
    V,
    Udc,
    /// `ω_r − ω_t`
    SpeedDiff,
    IgscD,
    IgscQ,
    OmegaV,
}

impl UnitSignal {
    pub const ALL: [UnitSignal; 8] = [
        UnitSignal::P,
        UnitSignal::Q,
        UnitSignal::V,
        UnitSignal::Udc,
        UnitSignal::SpeedDiff,
        UnitSignal::IgscD,
        UnitSignal::IgscQ,
        UnitSignal::OmegaV,
    ];

    pub fn label(self) -> &'static str {
        match self {
            UnitSignal::P => "p",
            UnitSignal::Q => "q",
            UnitSignal::V => "v",
            UnitSignal::Udc => "udc",
            UnitSignal::SpeedDiff => "speed_diff",
            UnitSignal::IgscD => "igsc_d",
            UnitSignal::IgscQ => "igsc_q",
            UnitSignal::OmegaV => "omega_v",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlantSignal {
    /// Power delivered to the grid at the PCC, plant base.
    PPcc,
    FreqDev,
    VPcc,
}

impl PlantSignal {
    pub const ALL: [PlantSignal; 3] = [PlantSignal::PPcc, PlantSignal::FreqDev, PlantSignal::VPcc];

    pub fn label(self) -> &'static str {
        match self {
            PlantSignal::PPcc => "p_pcc",
            PlantSignal::FreqDev => "freq_dev",
            PlantSignal::VPcc => "v_pcc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputTag {
    Disturbance(LoopRef),
    Reference(LoopRef),
    Wind(usize),
    PowerSet(usize),
    GridVoltage,
    GridPowerSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputTag {
    Loop(LoopRef, LoopSignal),
    Unit(usize, UnitSignal),
    Plant(PlantSignal),
}

impl InputTag {
    pub fn name(&self, units: &[String]) -> String {
        match self {
            InputTag::Disturbance(l) => format!("{}.{}.d", units[l.unit], l.loop_id),
            InputTag::Reference(l) => format!("{}.{}.r", units[l.unit], l.loop_id),
            InputTag::Wind(k) => format!("{}.wind", units[*k]),
            InputTag::PowerSet(k) => format!("{}.p_set", units[*k]),
            InputTag::GridVoltage => "grid.voltage".into(),
            InputTag::GridPowerSet => "grid.p_m_star".into(),
        }
    }
}

impl OutputTag {
    pub fn name(&self, units: &[String]) -> String {
        match self {
            OutputTag::Loop(l, s) => format!("{}.{}.{}", units[l.unit], l.loop_id, s.label()),
            OutputTag::Unit(k, s) => format!("{}.{}", units[*k], s.label()),
            OutputTag::Plant(s) => format!("plant.{}", s.label()),
        }
    }
}

pub const LOOP_SIGNALS: usize = 4;
pub const UNIT_SIGNALS: usize = 8;
pub const PLANT_SIGNALS: usize = 3;

#[derive(Debug, Clone)]
struct UnitControl {
    vsmp: VsmpBlock<f64>,
    vsmq: VsmqParams,
    rsc_d: TwoDofPi<f64>,
    rsc_q: TwoDofPi<f64>,
    vdc: TwoDofPi<f64>,
    gsc_d: TwoDofPi<f64>,
    gsc_q: TwoDofPi<f64>,
    z_v: C64,
    feedback: VoltageFeedback,
}

/// Per-unit intermediate quantities of one evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitSnapshot {
    pub v_t: C64,
    pub i_out: C64,
    pub p: f64,
    pub q: f64,
    pub t_e: f64,
    pub t_m: f64,
    pub p_rsc: f64,
    pub p_gsc: f64,
    pub omega_v: f64,
}

/// Immutable farm vector field `ẋ = f(x, u)` with tagged outputs `y = h(x, u)`.
#[derive(Debug, Clone)]
pub struct FarmOde {
    pub bases: PuBases<f64>,
    pub dfig: DfigParams<f64>,
    pub drivetrain: DrivetrainParams<f64>,
    pub turbine: TurbineParams<f64>,
    pub network: NetworkTopology<f64>,
    grid: GridParams<f64>,
    ctl: Vec<UnitControl>,
    pub unit_names: Vec<String>,
    pub layout: StateLayout,
    pub controllers: ControllerSet,
}

struct Pre {
    rot: C64,
    i_s: C64,
    i_r: C64,
    v_r: C64,
    v_est: C64,
    i_gl: C64,
    v_conv_l: C64,
    beta: C64,
    a_fd: C64,
    i_fd: C64,
    y_adm: f64,
    ref_r: C64,
    m_r: C64,
    ref_g: C64,
    m_g: C64,
    ref_vdc: f64,
    m_vdc: f64,
}

struct Evaluated {
    dx: Vec<f64>,
    y: Vec<f64>,
    units: Vec<UnitSnapshot>,
}

fn pi_block(g: &PiGains) -> TwoDofPi<f64> {
    TwoDofPi::from_gains(g)
}

fn check_inductance(what: &str, l: f64) -> Result<()> {
    if l > 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::SingularNetwork(format!("{what} inductance must be positive")))
    }
}

impl FarmOde {
    pub fn new(config: &FarmConfig, controllers: &ControllerSet) -> Result<Self> {
        config.validate()?;
        controllers.validate()?;
        let n = config.n_units();
        if controllers.units.len() != n {
            return Err(Error::Config(format!(
                "controller set has {} units, config has {n}",
                controllers.units.len()
            )));
        }
        let network = config.network();
        check_inductance("grid", network.grid.l)?;
        for (k, b) in network.feeders.iter().enumerate() {
            check_inductance(&format!("feeder {}", k + 1), b.l)?;
        }
        let dfig = config.dfig_params();
        check_inductance("filter", dfig.filter_l)?;
        let ctl = controllers
            .units
            .iter()
            .map(|u| UnitControl {
                vsmp: VsmpBlock::new(&u.vsmp),
                vsmq: u.vsmq,
                rsc_d: pi_block(&u.rsc_d),
                rsc_q: pi_block(&u.rsc_q),
                vdc: pi_block(&u.vdc),
                gsc_d: pi_block(&u.gsc_d),
                gsc_q: pi_block(&u.gsc_q),
                z_v: C64::new(u.virtual_impedance.r, u.virtual_impedance.l * u.vsmp.omega_s0),
                feedback: u.virtual_impedance.feedback,
            })
            .collect();
        let unit_names: Vec<String> = config.units.iter().map(|u| u.name.clone()).collect();
        let layout = StateLayout::new(&unit_names)?;
        Ok(Self {
            bases: config.pu_bases(),
            dfig,
            drivetrain: config.drivetrain_params(),
            turbine: config.turbine_params(),
            network,
            grid: config.grid_params(0.0),
            ctl,
            unit_names,
            layout,
            controllers: controllers.clone(),
        })
    }

    pub fn n_units(&self) -> usize {
        self.unit_names.len()
    }

    pub fn n_states(&self) -> usize {
        self.layout.len()
    }

    pub fn n_inputs(&self) -> usize {
        FarmInputs::len_for(self.n_units())
    }

    pub fn n_outputs(&self) -> usize {
        self.n_units() * (LoopId::COUNT * LOOP_SIGNALS + UNIT_SIGNALS) + PLANT_SIGNALS
    }

    /// Plant base in multiples of the machine base.
    pub fn plant_scale(&self) -> f64 {
        self.n_units().max(1) as f64
    }

    pub fn input_tags(&self) -> Vec<InputTag> {
        let n = self.n_units();
        let loops = (0..n * LoopId::COUNT).map(LoopRef::from_flat);
        let mut t: Vec<InputTag> = loops.clone().map(InputTag::Disturbance).collect();
        t.extend(loops.map(InputTag::Reference));
        t.extend((0..n).map(InputTag::Wind));
        t.extend((0..n).map(InputTag::PowerSet));
        t.push(InputTag::GridVoltage);
        t.push(InputTag::GridPowerSet);
        t
    }

    pub fn output_tags(&self) -> Vec<OutputTag> {
        let n = self.n_units();
        let mut t = Vec::with_capacity(self.n_outputs());
        for k in 0..n * LoopId::COUNT {
            for s in LoopSignal::ALL {
                t.push(OutputTag::Loop(LoopRef::from_flat(k), s));
            }
        }
        for k in 0..n {
            for s in UnitSignal::ALL {
                t.push(OutputTag::Unit(k, s));
            }
        }
        t.extend(PlantSignal::ALL.map(OutputTag::Plant));
        t
    }

    pub fn output_index(&self, tag: OutputTag) -> usize {
        let n = self.n_units();
        match tag {
            OutputTag::Loop(l, s) => l.flat() * LOOP_SIGNALS + s as usize,
            OutputTag::Unit(k, s) => {
                n * LoopId::COUNT * LOOP_SIGNALS + k * UNIT_SIGNALS + s as usize
            }
            OutputTag::Plant(s) => n * (LoopId::COUNT * LOOP_SIGNALS + UNIT_SIGNALS) + s as usize,
        }
    }

    pub fn input_index(&self, tag: InputTag) -> usize {
        let m = self.n_units() * LoopId::COUNT;
        let n = self.n_units();
        match tag {
            InputTag::Disturbance(l) => l.flat(),
            InputTag::Reference(l) => m + l.flat(),
            InputTag::Wind(k) => 2 * m + k,
            InputTag::PowerSet(k) => 2 * m + n + k,
            InputTag::GridVoltage => 2 * m + 2 * n,
            InputTag::GridPowerSet => 2 * m + 2 * n + 1,
        }
    }

    /// State derivative.
    pub fn derivative(&self, x: &[f64], u: &FarmInputs) -> Result<Vec<f64>> {
        self.evaluate(x, u).map(|e| e.dx)
    }

    /// Tagged outputs.
    pub fn outputs(&self, x: &[f64], u: &FarmInputs) -> Result<Vec<f64>> {
        self.evaluate(x, u).map(|e| e.y)
    }

    /// Derivative and outputs in one pass.
    pub fn derivative_and_outputs(&self, x: &[f64], u: &FarmInputs) -> Result<(Vec<f64>, Vec<f64>)> {
        self.evaluate(x, u).map(|e| (e.dx, e.y))
    }

    pub fn unit_snapshots(&self, x: &[f64], u: &FarmInputs) -> Result<Vec<UnitSnapshot>> {
        self.evaluate(x, u).map(|e| e.units)
    }

    /// Everything of unit `k` that does not need the node voltages. `v_meas` is
    /// the local terminal voltage seen by a terminal-feedback virtual impedance.
    fn unit_pre(&self, k: usize, x: &[f64], u: &FarmInputs, f: f64, v_meas: Option<C64>) -> Pre {
        let p = &self.dfig;
        let sigma = p.sigma();
        let o = GRID_STATES + k * UNIT_STATES;
        let xs = &x[o..o + UNIT_STATES];
        let c = &self.ctl[k];
        let dk = &u.d[k * LoopId::COUNT..(k + 1) * LoopId::COUNT];
        let rk = &u.r[k * LoopId::COUNT..(k + 1) * LoopId::COUNT];
        let psi_s = C64::new(xs[U_PSI_SD], xs[U_PSI_SQ]);
        let psi_r = C64::new(xs[U_PSI_RD], xs[U_PSI_RQ]);
        let (i_s, i_r) = p.currents(psi_s, psi_r);
        let i_g = C64::new(xs[U_IGD], xs[U_IGQ]);
        let omega_s0 = c.vsmp.omega_s0;

        // Virtual impedance: stator current reference from the EMF error.
        let emf = J * omega_s0 * xs[U_PSI_V];
        let v_est = v_meas.unwrap_or(J * omega_s0 * psi_s);
        let i_s_ref = -(emf - v_est) / c.z_v;
        let i_r_ref = (psi_s - i_s_ref * p.l_s) / p.l_m;

        let ref_r = i_r_ref + C64::new(rk[LoopId::RscD.index()], rk[LoopId::RscQ.index()]);
        let m_r = C64::new(
            c.rsc_d.kp * (c.rsc_d.b * ref_r.re - i_r.re) + xs[U_X_RSCD],
            c.rsc_q.kp * (c.rsc_q.b * ref_r.im - i_r.im) + xs[U_X_RSCQ],
        );
        let v_r = m_r + C64::new(dk[LoopId::RscD.index()], dk[LoopId::RscQ.index()]);

        let u_dc = xs[U_UDC];
        let ref_vdc = p.u_dc_nom + rk[LoopId::Vdc.index()];
        let m_vdc = c.vdc.kp * (c.vdc.b * ref_vdc - u_dc) + xs[U_X_VDC];
        let ref_g = C64::new(
            -(m_vdc + dk[LoopId::Vdc.index()]) + rk[LoopId::GscD.index()],
            rk[LoopId::GscQ.index()],
        );
        let m_g = C64::new(
            c.gsc_d.kp * (c.gsc_d.b * ref_g.re - i_g.re) + xs[U_X_GSCD],
            c.gsc_q.kp * (c.gsc_q.b * ref_g.im - i_g.im) + xs[U_X_GSCQ],
        );
        let v_conv = m_g + C64::new(dk[LoopId::GscD.index()], dk[LoopId::GscQ.index()]);
        let v_conv_l = J * v_conv;
        let i_gl = J * i_g;

        // Common-frame network terms.
        let rot = C64::from_polar(1.0, xs[U_DELTA]);
        let (psi_sc, psi_rc) = (psi_s * rot, psi_r * rot);
        let (i_sc, i_rc) = (i_s * rot, i_r * rot);
        let omega_r = xs[U_OMEGA_R];
        let a_s = (p.l_r * (-p.r_s * i_sc - J * f * psi_sc)
            - p.l_m * (v_r * rot - p.r_r * i_rc - J * (f - omega_r) * psi_rc))
            / sigma;
        let i_gc = i_gl * rot;
        let a_g = (v_conv_l * rot - (p.filter_r + J * f * p.filter_l) * i_gc) / p.filter_l;
        let fd = &self.network.feeders[k];
        let i_fd = -i_sc + i_gc;
        let a_fd = -(fd.r + J * f * fd.l) * i_fd / fd.l;
        let y_adm = 1.0 / fd.l + p.l_r / sigma + 1.0 / p.filter_l;
        Pre {
            rot,
            i_s,
            i_r,
            v_r,
            v_est,
            i_gl,
            v_conv_l,
            beta: a_g - a_s - a_fd,
            a_fd,
            i_fd,
            y_adm,
            ref_r,
            m_r,
            ref_g,
            m_g,
            ref_vdc,
            m_vdc,
        }
    }

    /// PCC voltage and terminal voltages (common frame).
    fn solve_network(&self, pre: &[Pre], u: &FarmInputs, f: f64) -> Result<(C64, Vec<C64>, f64)> {
        let g: &Branch<f64> = &self.network.grid;
        let v_g = C64::new(u.grid_voltage, 0.0);
        let i_grid: C64 = pre.iter().map(|q| q.i_fd).sum();
        let a_grid = -(g.r + J * f * g.l) * i_grid / g.l;
        let mut lhs = 1.0 / g.l;
        let mut rhs = v_g / g.l - a_grid;
        for (k, q) in pre.iter().enumerate() {
            let l_fd = self.network.feeders[k].l;
            lhs += (1.0 - 1.0 / (l_fd * q.y_adm)) / l_fd;
            rhs += q.beta / (l_fd * q.y_adm) + q.a_fd;
        }
        if !(lhs.abs() > 1e-12 && lhs.is_finite()) {
            return Err(Error::SingularNetwork("PCC admittance vanishes".into()));
        }
        let v_pcc = rhs / lhs;
        let v_t = pre
            .iter()
            .enumerate()
            .map(|(k, q)| (v_pcc / self.network.feeders[k].l + q.beta) / q.y_adm)
            .collect();
        Ok((v_pcc, v_t, lhs))
    }

    /// Local terminal voltages consistent with terminal-feedback virtual
    /// impedances. The rotor voltage of such a unit is affine in its terminal
    /// voltage and the terminal voltages are affine in the rotor voltages, so
    /// the loop closes through one real linear solve.
    fn terminal_feedback(&self, pre: &[Pre], v_t: &[C64], lhs: f64) -> Result<Vec<Option<C64>>> {
        let n = pre.len();
        let active: Vec<usize> = (0..n)
            .filter(|&k| self.ctl[k].feedback == VoltageFeedback::Terminal)
            .collect();
        let mut out = vec![None; n];
        if active.is_empty() {
            return Ok(out);
        }
        let p = &self.dfig;
        let c_beta = p.l_m / p.sigma();
        let realify = |z: C64| nalgebra::Matrix2::new(z.re, -z.im, z.im, z.re);
        // ∂v_t,k/∂β_j
        let m = |k: usize, j: usize| {
            let (lk, lj) = (self.network.feeders[k].l, self.network.feeders[j].l);
            let cross = 1.0 / (lk * lj * pre[j].y_adm * lhs);
            let own = if k == j { 1.0 } else { 0.0 };
            (own + cross) / pre[k].y_adm
        };
        // Rotor-voltage response of unit j to a change in its measured voltage.
        let r_of = |j: usize| {
            let c = &self.ctl[j];
            let g = -(p.l_s / p.l_m) / c.z_v;
            let kp = nalgebra::Matrix2::new(c.rsc_d.kp * c.rsc_d.b, 0.0, 0.0, c.rsc_q.kp * c.rsc_q.b);
            kp * realify(g)
        };
        let na = active.len();
        let mut sys = nalgebra::DMatrix::<f64>::identity(2 * na, 2 * na);
        let mut rhs = nalgebra::DVector::<f64>::zeros(2 * na);
        for (a, &k) in active.iter().enumerate() {
            let w0 = v_t[k] * pre[k].rot.conj() - pre[k].v_est;
            rhs[2 * a] = w0.re;
            rhs[2 * a + 1] = w0.im;
            for (b, &j) in active.iter().enumerate() {
                let coupling = pre[k].rot.conj() * m(k, j) * c_beta * pre[j].rot;
                let block = realify(coupling) * r_of(j);
                for r in 0..2 {
                    for c in 0..2 {
                        sys[(2 * a + r, 2 * b + c)] -= block[(r, c)];
                    }
                }
            }
        }
        let w = sys
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::SingularNetwork("terminal-voltage feedback loop is singular".into()))?;
        for (a, &k) in active.iter().enumerate() {
            out[k] = Some(pre[k].v_est + C64::new(w[2 * a], w[2 * a + 1]));
        }
        Ok(out)
    }

    fn evaluate(&self, x: &[f64], u: &FarmInputs) -> Result<Evaluated> {
        let n = self.n_units();
        assert_eq!(x.len(), self.n_states(), "state length");
        assert_eq!(u.n_units(), n, "input unit count");
        let wb = self.bases.omega_b;
        let p = &self.dfig;
        let gx = &x[..GRID_STATES];
        let f = 1.0 + gx[G_FREQ];

        let mut dx = vec![0.0; x.len()];
        let mut y = vec![0.0; self.n_outputs()];
        let mut snaps = vec![UnitSnapshot::default(); n];

        let mut pre: Vec<Pre> = (0..n).map(|k| self.unit_pre(k, x, u, f, None)).collect();
        let (mut v_pcc, mut v_ts, lhs) = self.solve_network(&pre, u, f)?;
        let meas = self.terminal_feedback(&pre, &v_ts, lhs)?;
        if meas.iter().any(Option::is_some) {
            pre = (0..n).map(|k| self.unit_pre(k, x, u, f, meas[k])).collect();
            (v_pcc, v_ts, _) = self.solve_network(&pre, u, f)?;
        }
        let v_g = C64::new(u.grid_voltage, 0.0);
        let i_grid: C64 = pre.iter().map(|q| q.i_fd).sum();

        for (k, q) in pre.iter().enumerate() {
            let o = GRID_STATES + k * UNIT_STATES;
            let xs = &x[o..o + UNIT_STATES];
            let c = &self.ctl[k];
            let dk = &u.d[k * LoopId::COUNT..(k + 1) * LoopId::COUNT];
            let rk = &u.r[k * LoopId::COUNT..(k + 1) * LoopId::COUNT];
            let v_t = v_ts[k];
            let v_tl = v_t * q.rot.conj();
            let p_out = active_power(v_t, q.i_fd);
            let q_out = reactive_power(v_t, q.i_fd);
            let v_mag = v_t.norm();

            // Virtual shaft.
            let p_ref = u.p_set[k] + rk[LoopId::Vsmp.index()];
            let w = xs[U_W];
            let x_vsmp = c.vsmp.output(w, p_ref, p_out);
            let e_vsmp = c.vsmp.error(p_ref, p_out);
            let d_vsmp = dk[LoopId::Vsmp.index()];
            let omega_v = c.vsmp.omega_s0 + c.vsmp.speed_deviation(x_vsmp, d_vsmp);

            // Virtual flux.
            let e_q = c.vsmq.error(q_out, v_mag) + rk[LoopId::Vsmq.index()];
            let m_q = c.vsmq.k_q * e_q;
            let d_q = dk[LoopId::Vsmq.index()];

            let psi_s = C64::new(xs[U_PSI_SD], xs[U_PSI_SQ]);
            let psi_r = C64::new(xs[U_PSI_RD], xs[U_PSI_RQ]);
            let omega_r = xs[U_OMEGA_R];
            let dpsi_s = wb * (v_tl - p.r_s * q.i_s - J * omega_v * psi_s);
            let dpsi_r = wb * (q.v_r - p.r_r * q.i_r - J * (omega_v - omega_r) * psi_r);
            let di_gl = wb / p.filter_l
                * (q.v_conv_l - v_tl - (p.filter_r + J * omega_v * p.filter_l) * q.i_gl);
            let di_g = -J * di_gl;

            let u_dc = xs[U_UDC];
            let p_rsc = active_power(q.v_r, q.i_r);
            let p_gsc = active_power(q.v_conv_l, q.i_gl);
            let du_dc = -wb / p.c_dc * (p_rsc + p_gsc) / u_dc;

            let dt = DrivetrainState { omega_t: xs[U_OMEGA_T], omega_r, t_tg: xs[U_TTG] };
            let t_e = electrical_torque(q.i_s, q.i_r, p.l_m);
            let p_mec = mechanical_power(u.wind[k], dt.omega_t, &self.turbine, &self.bases);
            let t_m = p_mec / dt.omega_t;
            let ddt = drivetrain_derivatives(&dt, t_m, t_e, &self.drivetrain);

            let i_g = C64::new(xs[U_IGD], xs[U_IGQ]);
            let out = &mut dx[o..o + UNIT_STATES];
            out[U_PSI_SD] = dpsi_s.re;
            out[U_PSI_SQ] = dpsi_s.im;
            out[U_PSI_RD] = dpsi_r.re;
            out[U_PSI_RQ] = dpsi_r.im;
            out[U_UDC] = du_dc;
            out[U_IGD] = di_g.re;
            out[U_IGQ] = di_g.im;
            out[U_DELTA] = wb * (omega_v - f);
            out[U_OMEGA_T] = ddt.omega_t;
            out[U_OMEGA_R] = ddt.omega_r;
            out[U_TTG] = ddt.t_tg;
            out[U_W] = e_vsmp - x_vsmp;
            out[U_PSI_V] = wb * (m_q + d_q);
            out[U_X_RSCD] = c.rsc_d.ki * (q.ref_r.re - q.i_r.re);
            out[U_X_RSCQ] = c.rsc_q.ki * (q.ref_r.im - q.i_r.im);
            out[U_X_VDC] = c.vdc.ki * (q.ref_vdc - u_dc);
            out[U_X_GSCD] = c.gsc_d.ki * (q.ref_g.re - i_g.re);
            out[U_X_GSCQ] = c.gsc_q.ki * (q.ref_g.im - i_g.im);

            // Loop signals (s, t, e, y).
            let loops: [(f64, f64, f64, f64); 7] = [
                (x_vsmp + d_vsmp, x_vsmp, e_vsmp, p_out),
                (m_q + d_q, m_q, e_q, q_out + c.vsmq.d_q * v_mag),
                (q.v_r.re, q.m_r.re, q.ref_r.re - q.i_r.re, q.i_r.re),
                (q.v_r.im, q.m_r.im, q.ref_r.im - q.i_r.im, q.i_r.im),
                (
                    q.m_vdc + dk[LoopId::Vdc.index()],
                    q.m_vdc,
                    q.ref_vdc - u_dc,
                    u_dc,
                ),
                (
                    q.m_g.re + dk[LoopId::GscD.index()],
                    q.m_g.re,
                    q.ref_g.re - i_g.re,
                    i_g.re,
                ),
                (
                    q.m_g.im + dk[LoopId::GscQ.index()],
                    q.m_g.im,
                    q.ref_g.im - i_g.im,
                    i_g.im,
                ),
            ];
            for (l, sig) in loops.iter().enumerate() {
                let base = (k * LoopId::COUNT + l) * LOOP_SIGNALS;
                y[base] = sig.0;
                y[base + 1] = sig.1;
                y[base + 2] = sig.2;
                y[base + 3] = sig.3;
            }
            let ub = self.output_index(OutputTag::Unit(k, UnitSignal::P));
            y[ub..ub + UNIT_SIGNALS].copy_from_slice(&[
                p_out,
                q_out,
                v_mag,
                u_dc,
                omega_r - dt.omega_t,
                i_g.re,
                i_g.im,
                omega_v,
            ]);
            snaps[k] = UnitSnapshot {
                v_t,
                i_out: q.i_fd,
                p: p_out,
                q: q_out,
                t_e,
                t_m,
                p_rsc,
                p_gsc,
                omega_v,
            };
        }

        // Equivalent generator.
        let scale = self.plant_scale();
        let p_src = -active_power(v_g, i_grid) / scale;
        let grid_params = GridParams { p_m_star: u.p_m_star, ..self.grid };
        let gs = GridState {
            freq_dev: gx[G_FREQ],
            governor_power: gx[G_GOV],
            p_m: gx[G_PM],
            turbine_rate: gx[G_RATE],
        };
        let dg = grid_derivatives(&gs, p_src, &grid_params);
        dx[G_FREQ] = dg.freq_dev;
        dx[G_GOV] = dg.governor_power;
        dx[G_PM] = dg.p_m;
        dx[G_RATE] = dg.turbine_rate;

        let pb = self.output_index(OutputTag::Plant(PlantSignal::PPcc));
        y[pb] = active_power(v_pcc, i_grid) / scale;
        y[pb + 1] = gx[G_FREQ];
        y[pb + 2] = v_pcc.norm();

        Ok(Evaluated { dx, y, units: snaps })
    }

    /// Same model with the controllers replaced.
    pub fn with_controllers(&self, controllers: &ControllerSet, config: &FarmConfig) -> Result<Self> {
        Self::new(config, controllers)
    }

    /// True when the unit runs the power-only damping path.
    pub fn power_only(&self, unit: usize) -> bool {
        self.ctl[unit].vsmp.path == DampingPath::PowerOnly
    }
}

/// Builds the farm vector field.
pub fn assemble_farm_ode(config: &FarmConfig, controllers: &ControllerSet) -> Result<FarmOde> {
    FarmOde::new(config, controllers)
}
