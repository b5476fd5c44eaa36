//! Sequential pole-placement design against decoupled single-loop plants.

use num_complex::Complex;

use crate::control::loops::{LoopId, LoopRef};
use crate::control::pi::PiGains;
use crate::control::set::{
    ControllerSet, UnitControllers, VirtualImpedance, CONTROLLER_FORMAT_VERSION,
};
use crate::control::targets::LoopSpec;
use crate::control::tf::Tf;
use crate::control::vsm::{DampingPath, VsmpParams, VsmqParams};
use crate::error::{Error, Result};
use crate::freqresp::margins::{stability_margins_exact, MarginResult};
use crate::freqresp::response::default_grid;
use crate::model::config::FarmConfig;
use crate::model::machine::{active_power, reactive_power};

/// Decoupled plant used to tune one loop.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPlant {
    pub loop_ref: LoopRef,
    pub tf: Tf<f64>,
}

/// Unit behind its virtual impedance and feeder, connected to a stiff PCC.
#[derive(Debug, Clone, Copy)]
struct StaticUnit {
    z_v: Complex<f64>,
    z_fd: Complex<f64>,
    p: f64,
    d_q: f64,
    y_ref: f64,
}

impl StaticUnit {
    /// `(P, Q + D_q V)` at the terminal for EMF `e∠δ`.
    fn eval(&self, e: f64, delta: f64) -> (f64, f64) {
        let src = Complex::from_polar(e, delta);
        let i = (src - 1.0) / (self.z_v + self.z_fd);
        let v_t = Complex::new(1.0, 0.0) + self.z_fd * i;
        (active_power(v_t, i), reactive_power(v_t, i) + self.d_q * v_t.norm())
    }

    fn angle_for_power(&self, e: f64) -> Result<f64> {
        let (mut a, mut b) = (0.0, std::f64::consts::FRAC_PI_2);
        if self.eval(e, b).0 < self.p {
            return Err(Error::InfeasibleTarget("design point exceeds static transfer limit".into()));
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.eval(e, m).0 < self.p {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// EMF and angle at the design equilibrium.
    fn equilibrium(&self) -> Result<(f64, f64)> {
        let (mut a, mut b) = (0.5, 2.5);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let d = self.angle_for_power(m)?;
            if self.eval(m, d).1 < self.y_ref {
                a = m;
            } else {
                b = m;
            }
        }
        let e = 0.5 * (a + b);
        Ok((e, self.angle_for_power(e)?))
    }

    /// `(∂P/∂δ, d(Q + D_q V)/dE)` with `P` held by the shaft loop.
    fn sensitivities(&self) -> Result<(f64, f64)> {
        let (e, d) = self.equilibrium()?;
        let h = 1e-6;
        let ks = (self.eval(e, d + h).0 - self.eval(e, d - h).0) / (2.0 * h);
        let yp = self.eval(e + h, self.angle_for_power(e + h)?).1;
        let ym = self.eval(e - h, self.angle_for_power(e - h)?).1;
        Ok((ks, (yp - ym) / (2.0 * h)))
    }
}

fn spec<'a>(config: &'a FarmConfig, id: LoopId) -> Result<&'a LoopSpec> {
    config
        .spec(id)
        .ok_or_else(|| Error::Config(format!("missing spec for {id}")))
}

fn zeta_wn(s: &LoopSpec) -> Result<(f64, f64)> {
    match (s.zeta, s.omega_n) {
        (Some(z), Some(w)) => Ok((z, w)),
        _ => Err(Error::Config(format!("spec for {} needs zeta and omega_n", s.loop_id))),
    }
}

fn static_unit(config: &FarmConfig, unit: usize) -> StaticUnit {
    let u = &config.units[unit];
    let fd = crate::model::network::Branch::from_magnitude(u.feeder_z_pu, u.feeder_x_over_r);
    let v = &config.vsm;
    StaticUnit {
        z_v: Complex::new(v.virtual_r, v.virtual_l),
        z_fd: Complex::new(fd.r, fd.l),
        p: config.operating_point.p_grid_pu,
        d_q: v.droop_q,
        y_ref: v.q_set + v.droop_q * v.v_set,
    }
}

/// Plant seen by loop `id` of `unit` when every other loop is ignored.
pub fn design_plant(config: &FarmConfig, unit: usize, id: LoopId) -> Result<DesignPlant> {
    let m = config.dfig_params();
    let wb = config.pu_bases().omega_b;
    let tf = match id {
        LoopId::RscD | LoopId::RscQ => {
            let sigma_lr = m.sigma() / m.l_s;
            Tf { num: vec![wb], den: vec![m.r_r * wb, sigma_lr] }
        }
        LoopId::GscD | LoopId::GscQ => Tf { num: vec![wb], den: vec![m.filter_r * wb, m.filter_l] },
        LoopId::Vdc => {
            let v = config.grid.voltage_pu;
            Tf::integrator(wb * v / (3f64.sqrt() * m.c_dc * m.u_dc_nom))
        }
        LoopId::Vsmp => {
            let (ks, _) = static_unit(config, unit).sensitivities()?;
            Tf::integrator(ks * wb / config.vsm.droop_p)
        }
        LoopId::Vsmq => {
            let (_, kq) = static_unit(config, unit).sensitivities()?;
            Tf::integrator(wb * kq)
        }
    };
    Ok(DesignPlant { loop_ref: LoopRef::new(unit, id), tf })
}

/// PI gains placing the closed-loop poles of `b0/(a1 s + a0)` at `(ζ, ω_n)`.
pub fn place_first_order(b0: f64, a0: f64, a1: f64, zeta: f64, wn: f64) -> PiGains {
    PiGains::new((2.0 * zeta * wn * a1 - a0) / b0, wn * wn * a1 / b0)
}

/// PI gains placing the closed-loop poles of `k/s` at `(ζ, ω_n)`.
pub fn place_integrator(k: f64, zeta: f64, wn: f64) -> PiGains {
    PiGains::new(2.0 * zeta * wn / k, wn * wn / k)
}

/// Virtual-shaft parameters placing the poles of `C(s) k/s` at `(ζ, ω_n)`.
pub fn place_vsmp(k: f64, zeta: f64, wn: f64, d_p: f64) -> Result<VsmpParams> {
    let tau = k / (wn * wn);
    let d_d = (2.0 * zeta * wn * tau - 1.0) / k;
    if d_d < 0.0 {
        return Err(Error::Shaping(format!(
            "virtual shaft cannot reach zeta = {zeta} without negative damping"
        )));
    }
    Ok(VsmpParams {
        h: tau * d_p / 2.0,
        d_p,
        d_d,
        omega_s0: 1.0,
        damping_path: DampingPath::ErrorFed,
    })
}

fn design_unit(config: &FarmConfig, unit: usize) -> Result<UnitControllers> {
    let pi_loop = |id: LoopId| -> Result<PiGains> {
        let (z, w) = zeta_wn(spec(config, id)?)?;
        let p = design_plant(config, unit, id)?.tf;
        Ok(match p.den.len() {
            2 if p.den[0] == 0.0 => place_integrator(p.num[0], z, w),
            _ => place_first_order(p.num[0], p.den[0], p.den[1], z, w),
        })
    };
    let (z, w) = zeta_wn(spec(config, LoopId::Vsmp)?)?;
    let k = design_plant(config, unit, LoopId::Vsmp)?.tf.num[0];
    let vsmp = place_vsmp(k, z, w, config.vsm.droop_p)?;
    let kq_plant = design_plant(config, unit, LoopId::Vsmq)?.tf.num[0];
    let vsmq = VsmqParams {
        k_q: spec(config, LoopId::Vsmq)?.omega_o / kq_plant,
        d_q: config.vsm.droop_q,
        q_set: config.vsm.q_set,
        v_set: config.vsm.v_set,
    };
    Ok(UnitControllers {
        vsmp,
        vsmq,
        rsc_d: pi_loop(LoopId::RscD)?,
        rsc_q: pi_loop(LoopId::RscQ)?,
        vdc: pi_loop(LoopId::Vdc)?,
        gsc_d: pi_loop(LoopId::GscD)?,
        gsc_q: pi_loop(LoopId::GscQ)?,
        virtual_impedance: VirtualImpedance {
            r: config.vsm.virtual_r,
            l: config.vsm.virtual_l,
            feedback: config.vsm.feedback,
        },
    })
}

/// Initial controller set, each loop tuned in isolation.
pub fn baseline_controllers(config: &FarmConfig) -> Result<ControllerSet> {
    let units = (0..config.n_units()).map(|k| design_unit(config, k)).collect::<Result<_>>()?;
    let set = ControllerSet { format_version: CONTROLLER_FORMAT_VERSION, label: "A".into(), units };
    set.validate()?;
    Ok(set)
}

/// Single-loop margins of `C_i · P_design` for every loop.
pub fn decoupled_margins(
    config: &FarmConfig,
    set: &ControllerSet,
) -> Result<Vec<(LoopRef, MarginResult<f64>)>> {
    let grid = default_grid();
    let mut out = Vec::new();
    for unit in 0..config.n_units() {
        for id in LoopId::ALL {
            let p = design_plant(config, unit, id)?.tf;
            let c = crate::control::set::reconfigure_one_dof::<f64>(set, unit, id)?;
            let m = stability_margins_exact(&grid, |w| c.freq(w) * p.freq(w));
            out.push((LoopRef::new(unit, id), m));
        }
    }
    Ok(out)
}
