//! Steady-state trim of the farm.
//!
//! The unknowns are the state, the per-unit wind speed and power set point,
//! and the grid mechanical set point. The rotor speed of every unit and the
//! active power at the point of common coupling are pinned, all units share
//! one power set point, and the grid frequency deviation is zero.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::control::{DampingPath, VoltageFeedback};
use crate::error::{Error, Result};
use crate::linearize::field::wrap_angle;
use crate::model::layout::{
    GRID_STATES, G_FREQ, G_GOV, G_PM, UNIT_STATES, U_DELTA, U_IGD, U_IGQ, U_OMEGA_R, U_OMEGA_T,
    U_PSI_RD, U_PSI_RQ, U_PSI_SD, U_PSI_SQ, U_PSI_V, U_TTG, U_UDC, U_W, U_X_GSCD, U_X_GSCQ,
    U_X_RSCD, U_X_RSCQ, U_X_VDC,
};
use crate::model::machine::{active_power, electrical_torque};
use crate::model::turbine::{mechanical_power, optimal_tip_speed_ratio};
use crate::model::{FarmConfig, FarmInputs, FarmOde, OutputTag, PlantSignal};

type C64 = Complex<f64>;
const J: C64 = C64::new(0.0, 1.0);

pub const OPERATING_POINT_FORMAT_VERSION: u32 = 1;

/// Residual norm below which a trim is accepted.
pub const TRIM_TOLERANCE: f64 = 1e-8;

const MAX_NEWTON: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimTargets {
    /// Active power exported at the PCC, plant pu.
    pub p_grid_pu: f64,
    pub rotor_speed_pu: f64,
    pub grid_voltage_pu: f64,
}

impl TrimTargets {
    pub fn from_config(config: &FarmConfig) -> Self {
        Self {
            p_grid_pu: config.operating_point.p_grid_pu,
            rotor_speed_pu: config.operating_point.rotor_speed_pu,
            grid_voltage_pu: config.grid.voltage_pu,
        }
    }
}

/// A trimmed equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub x: Vec<f64>,
    pub inputs: FarmInputs,
    pub state_names: Vec<String>,
    pub unit_names: Vec<String>,
    pub targets: TrimTargets,
    /// `‖f(x*, u*)‖₂`
    pub residual_norm: f64,
    /// Newton iterations taken.
    pub iterations: usize,
}

#[derive(Serialize, Deserialize)]
struct OpFile {
    format_version: u32,
    p_grid_pu: f64,
    rotor_speed_pu: f64,
    grid_voltage_pu: f64,
    p_m_star: f64,
    residual_norm: f64,
    iterations: usize,
    #[serde(rename = "unit", default)]
    units: Vec<OpUnit>,
    #[serde(rename = "state", default)]
    states: Vec<OpState>,
}

#[derive(Serialize, Deserialize)]
struct OpUnit {
    name: String,
    wind_speed_m_s: f64,
    p_set_pu: f64,
}

#[derive(Serialize, Deserialize)]
struct OpState {
    name: String,
    value: f64,
}

impl OperatingPoint {
    pub fn to_toml(&self) -> String {
        let file = OpFile {
            format_version: OPERATING_POINT_FORMAT_VERSION,
            p_grid_pu: self.targets.p_grid_pu,
            rotor_speed_pu: self.targets.rotor_speed_pu,
            grid_voltage_pu: self.targets.grid_voltage_pu,
            p_m_star: self.inputs.p_m_star,
            residual_norm: self.residual_norm,
            iterations: self.iterations,
            units: self
                .unit_names
                .iter()
                .enumerate()
                .map(|(k, name)| OpUnit {
                    name: name.clone(),
                    wind_speed_m_s: self.inputs.wind[k],
                    p_set_pu: self.inputs.p_set[k],
                })
                .collect(),
            states: self
                .state_names
                .iter()
                .zip(&self.x)
                .map(|(name, &value)| OpState { name: name.clone(), value })
                .collect(),
        };
        toml::to_string(&file).expect("operating point serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let parse = |m: String| Error::Parse { what: "operating point".into(), message: m };
        let file: OpFile = toml::from_str(text).map_err(|e| parse(e.to_string()))?;
        if file.format_version != OPERATING_POINT_FORMAT_VERSION {
            return Err(parse(format!("unsupported format_version {}", file.format_version)));
        }
        let n = file.units.len();
        let mut inputs = FarmInputs::zeros(n);
        inputs.grid_voltage = file.grid_voltage_pu;
        inputs.p_m_star = file.p_m_star;
        for (k, u) in file.units.iter().enumerate() {
            inputs.wind[k] = u.wind_speed_m_s;
            inputs.p_set[k] = u.p_set_pu;
        }
        Ok(Self {
            x: file.states.iter().map(|s| s.value).collect(),
            state_names: file.states.iter().map(|s| s.name.clone()).collect(),
            unit_names: file.units.iter().map(|u| u.name.clone()).collect(),
            inputs,
            targets: TrimTargets {
                p_grid_pu: file.p_grid_pu,
                rotor_speed_pu: file.rotor_speed_pu,
                grid_voltage_pu: file.grid_voltage_pu,
            },
            residual_norm: file.residual_norm,
            iterations: file.iterations,
        })
    }

    /// Checks that the point belongs to `ode` (same units and state names).
    pub fn check_against(&self, ode: &FarmOde) -> Result<()> {
        if self.unit_names != ode.unit_names || self.state_names != ode.layout.names() {
            return Err(Error::Config("operating point does not match the farm layout".into()));
        }
        Ok(())
    }
}

struct Trim<'a> {
    ode: &'a FarmOde,
    targets: TrimTargets,
    n_x: usize,
    n_units: usize,
}

impl Trim<'_> {
    fn split(&self, z: &[f64]) -> (Vec<f64>, FarmInputs) {
        let n = self.n_units;
        let x = z[..self.n_x].to_vec();
        let mut u = FarmInputs::zeros(n);
        u.wind.copy_from_slice(&z[self.n_x..self.n_x + n]);
        u.p_set.copy_from_slice(&z[self.n_x + n..self.n_x + 2 * n]);
        u.p_m_star = z[self.n_x + 2 * n];
        u.grid_voltage = self.targets.grid_voltage_pu;
        (x, u)
    }

    fn join(&self, x: &[f64], u: &FarmInputs) -> Vec<f64> {
        let mut z = x.to_vec();
        z.extend_from_slice(&u.wind);
        z.extend_from_slice(&u.p_set);
        z.push(u.p_m_star);
        z
    }

    /// Residual vector; the first `n_x` entries are `f(x, u)`.
    fn residual(&self, z: &[f64]) -> Result<Vec<f64>> {
        let (x, u) = self.split(z);
        let (dx, y) = self.ode.derivative_and_outputs(&x, &u)?;
        let n = self.n_units;
        let mut r = dx;
        for k in 0..n {
            let o = GRID_STATES + k * UNIT_STATES;
            r.push(x[o + U_OMEGA_R] - self.targets.rotor_speed_pu);
        }
        if n > 0 {
            let pcc = self.ode.output_index(OutputTag::Plant(PlantSignal::PPcc));
            r.push(y[pcc] - self.targets.p_grid_pu);
            for k in 1..n {
                r.push(u.p_set[k] - u.p_set[0]);
            }
        } else {
            // No units: the set points and the PCC power are free.
            r.push(u.p_m_star);
        }
        r.push(x[G_FREQ]);
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { state: "trim residual".into() });
        }
        Ok(r)
    }

    fn jacobian(&self, z: &[f64], r0: &[f64]) -> Result<DMatrix<f64>> {
        let m = r0.len();
        let nz = z.len();
        let mut jac = DMatrix::zeros(m, nz);
        let mut zp = z.to_vec();
        for j in 0..nz {
            let h = 1e-7 * z[j].abs().max(1.0);
            zp[j] = z[j] + h;
            let rp = self.residual(&zp)?;
            zp[j] = z[j] - h;
            let rm = self.residual(&zp)?;
            zp[j] = z[j];
            for i in 0..m {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Largest per-unit mechanical power available at rotor speed `omega`.
pub fn available_power(ode: &FarmOde, omega: f64) -> (f64, f64) {
    let lam = optimal_tip_speed_ratio(&ode.turbine, 1.0, 20.0);
    let v = omega * ode.bases.omega_mb * ode.turbine.blade_radius / (ode.turbine.gear_ratio * lam);
    (mechanical_power(v, omega, &ode.turbine, &ode.bases), v)
}

/// Wind speed delivering `p` at rotor speed `omega` on the high tip-speed-ratio branch.
fn wind_for_power(ode: &FarmOde, p: f64, omega: f64) -> Result<f64> {
    let (p_max, v_opt) = available_power(ode, omega);
    if p > p_max {
        return Err(Error::InfeasibleTarget(format!(
            "mechanical power {p:.4} pu exceeds the {p_max:.4} pu available at rotor speed {omega}"
        )));
    }
    let power = |v: f64| mechanical_power(v, omega, &ode.turbine, &ode.bases);
    // Power rises with wind speed on this branch; bracket below `v_opt`.
    let mut lo = v_opt;
    while power(lo) > p {
        lo *= 0.8;
        if lo < 1e-3 {
            return Ok(lo);
        }
    }
    let mut hi = v_opt;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if power(mid) > p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Analytic starting point from a load flow and steady-state phasors.
pub fn initial_guess(ode: &FarmOde, targets: &TrimTargets) -> Result<(Vec<f64>, FarmInputs)> {
    let n = ode.n_units();
    let mut x = vec![0.0; ode.n_states()];
    let mut u = FarmInputs::zeros(n);
    u.grid_voltage = targets.grid_voltage_pu;
    if n == 0 {
        return Ok((x, u));
    }
    let p = &ode.dfig;
    let omega_r = targets.rotor_speed_pu;
    let p_unit = targets.p_grid_pu;
    let (p_max, _) = available_power(ode, omega_r);
    if p_unit > p_max {
        return Err(Error::InfeasibleTarget(format!(
            "per-unit power {p_unit:.4} pu exceeds the {p_max:.4} pu available at rotor speed {omega_r}"
        )));
    }

    // Load flow with the reactive droop at each terminal.
    let v_g = C64::new(targets.grid_voltage_pu, 0.0);
    let z_g = C64::new(ode.network.grid.r, ode.network.grid.l);
    let z_fd: Vec<C64> = ode.network.feeders.iter().map(|b| C64::new(b.r, b.l)).collect();
    let s3 = 3f64.sqrt();
    let mut v_t = vec![v_g; n];
    let mut i_out = vec![C64::new(0.0, 0.0); n];
    let mut converged = false;
    for _ in 0..5000 {
        for k in 0..n {
            let q = &ode.controllers.units[k].vsmq;
            let q_k = q.q_set + q.d_q * (q.v_set - v_t[k].norm());
            i_out[k] = s3 * (C64::new(p_unit, q_k) / v_t[k]).conj();
        }
        let i_grid: C64 = i_out.iter().sum();
        let v_pcc = v_g + z_g * i_grid;
        let mut delta = 0.0f64;
        for k in 0..n {
            let new = v_pcc + z_fd[k] * i_out[k];
            delta = delta.max((new - v_t[k]).norm());
            let step = new - v_t[k];
            v_t[k] += 0.2 * step;
        }
        if !v_t.iter().all(|v| v.is_finite() && v.norm() > 0.2) {
            break;
        }
        if delta < 1e-12 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::InfeasibleTarget("load flow has no solution".into()));
    }

    let dt = &ode.drivetrain;
    let mut i_grid = C64::new(0.0, 0.0);
    for k in 0..n {
        let c = &ode.controllers.units[k];
        let z_v = C64::new(c.virtual_impedance.r, c.virtual_impedance.l * c.vsmp.omega_s0);
        let vt = v_t[k];
        // Split the output between stator and converter by the slip power.
        let mut p_gsc = 0.0;
        let mut sol = None;
        for _ in 0..100 {
            let i_gc = s3 * (C64::new(p_gsc, 0.0) / vt).conj();
            let i_sc = -(i_out[k] - i_gc);
            let psi_sc = (vt - p.r_s * i_sc) / J;
            let v_est = match c.virtual_impedance.feedback {
                VoltageFeedback::StatorFlux => J * psi_sc,
                VoltageFeedback::Terminal => vt,
            };
            let emf = v_est + z_v * (-i_sc);
            let delta = emf.arg() - std::f64::consts::FRAC_PI_2;
            let rot = C64::from_polar(1.0, -delta);
            let (psi_s, i_s) = (psi_sc * rot, i_sc * rot);
            let i_r = (psi_s - p.l_s * i_s) / p.l_m;
            let psi_r = p.l_m * i_s + p.l_r * i_r;
            let v_r = p.r_r * i_r + J * (1.0 - omega_r) * psi_r;
            let p_rsc = active_power(v_r, i_r);
            let next = -p_rsc;
            let done = (next - p_gsc).abs() < 1e-14;
            p_gsc = next;
            sol = Some((delta, emf.norm(), psi_s, psi_r, i_s, i_r, v_r, rot, i_gc));
            if done {
                break;
            }
        }
        let (delta, psi_v, psi_s, psi_r, i_s, i_r, v_r, rot, i_gc) =
            sol.expect("at least one iteration");
        let i_gl = i_gc * rot;
        let v_tl = vt * rot;
        let i_g = -J * i_gl;
        let v_conv_l = v_tl + (p.filter_r + J * p.filter_l) * i_gl;
        let v_conv = -J * v_conv_l;

        let o = GRID_STATES + k * UNIT_STATES;
        let xs = &mut x[o..o + UNIT_STATES];
        xs[U_PSI_SD] = psi_s.re;
        xs[U_PSI_SQ] = psi_s.im;
        xs[U_PSI_RD] = psi_r.re;
        xs[U_PSI_RQ] = psi_r.im;
        xs[U_UDC] = p.u_dc_nom;
        xs[U_IGD] = i_g.re;
        xs[U_IGQ] = i_g.im;
        xs[U_DELTA] = wrap_angle(delta);
        xs[U_PSI_V] = psi_v;
        // Integrators hold the steady controller outputs.
        xs[U_X_RSCD] = v_r.re - c.rsc_d.kp * (c.rsc_d.b - 1.0) * i_r.re;
        xs[U_X_RSCQ] = v_r.im - c.rsc_q.kp * (c.rsc_q.b - 1.0) * i_r.im;
        let m_vdc = -i_g.re;
        xs[U_X_VDC] = m_vdc - c.vdc.kp * (c.vdc.b - 1.0) * p.u_dc_nom;
        xs[U_X_GSCD] = v_conv.re - c.gsc_d.kp * (c.gsc_d.b - 1.0) * i_g.re;
        xs[U_X_GSCQ] = v_conv.im - c.gsc_q.kp * (c.gsc_q.b - 1.0) * i_g.im;
        let p_out = active_power(vt, i_out[k]);
        xs[U_W] = match c.vsmp.damping_path {
            DampingPath::ErrorFed => 0.0,
            DampingPath::PowerOnly => c.vsmp.d_d * p_out / c.vsmp.omega_s0,
        };

        let t_e = electrical_torque(i_s, i_r, p.l_m);
        let t_tg = dt.d_gen * omega_r - t_e;
        let t_m = t_tg + dt.d_t * omega_r;
        xs[U_OMEGA_T] = omega_r;
        xs[U_OMEGA_R] = omega_r;
        xs[U_TTG] = t_tg;
        u.wind[k] = wind_for_power(ode, t_m * omega_r, omega_r)?;
        u.p_set[k] = p_out;
        i_grid += i_out[k];
    }
    let p_src = -active_power(v_g, i_grid) / ode.plant_scale();
    x[G_GOV] = p_src;
    x[G_PM] = p_src;
    u.p_m_star = p_src;
    Ok((x, u))
}

/// Solves for the equilibrium meeting `targets`, starting from [`initial_guess`].
pub fn find_operating_point(ode: &FarmOde, targets: &TrimTargets) -> Result<OperatingPoint> {
    let (x0, u0) = initial_guess(ode, targets)?;
    find_operating_point_from(ode, targets, &x0, &u0)
}

/// Damped Newton from a supplied starting point.
pub fn find_operating_point_from(
    ode: &FarmOde,
    targets: &TrimTargets,
    x0: &[f64],
    u0: &FarmInputs,
) -> Result<OperatingPoint> {
    let trim = Trim { ode, targets: *targets, n_x: ode.n_states(), n_units: ode.n_units() };
    let mut z = trim.join(x0, u0);
    let mut r = trim.residual(&z)?;
    let mut rn = norm(&r);
    let mut iterations = 0;
    while rn >= 1e-11 && iterations < MAX_NEWTON {
        let jac = trim.jacobian(&z, &r)?;
        let step = jac
            .lu()
            .solve(&DVector::from_column_slice(&r))
            .ok_or_else(|| Error::TrimFailed { iterations, best_residual: rn })?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, s)| a - alpha * s).collect();
            if let Ok(rt) = trim.residual(&trial) {
                let nt = norm(&rt);
                if nt < rn {
                    z = trial;
                    r = rt;
                    rn = nt;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
    }
    let n_x = trim.n_x;
    let f_norm = norm(&r[..n_x]);
    let constraint = norm(&r[n_x..]);
    if !(f_norm < TRIM_TOLERANCE && constraint < TRIM_TOLERANCE) {
        return Err(Error::TrimFailed { iterations, best_residual: rn });
    }
    let (mut x, inputs) = trim.split(&z);
    for (i, v) in x.iter_mut().enumerate() {
        if ode.layout.is_angle(i) {
            *v = wrap_angle(*v);
        }
    }
    for k in 0..ode.n_units() {
        let o = GRID_STATES + k * UNIT_STATES;
        if x[o + U_UDC] <= 0.0 || inputs.wind[k] <= 0.0 {
            return Err(Error::InfeasibleTarget(format!("unit {} trims to a non-physical point", k + 1)));
        }
    }
    Ok(OperatingPoint {
        residual_norm: norm(&ode.derivative(&x, &inputs)?),
        x,
        inputs,
        state_names: ode.layout.names().to_vec(),
        unit_names: ode.unit_names.clone(),
        targets: *targets,
        iterations,
    })
}
