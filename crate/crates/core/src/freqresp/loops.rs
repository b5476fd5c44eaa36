use num_complex::Complex;

use crate::control::{reconfigure_one_dof, ControllerSet, LoopRef};
use crate::error::Result;
use crate::freqresp::evaluate::HessenbergSystem;
use crate::freqresp::margins::{stability_margins, MarginResult};
use crate::freqresp::response::{FrequencyResponse, LoopFunction};
use crate::linearize::{extract_channel, LinearModel};

/// Loop functions of one loop, with all other loops closed.
///
/// `s` and `t` come from the disturbance channel at the controller output:
/// `S = s/d`, `T = −t/d`, the effective open loop `G = T/S`, and the effective
/// plant `P = G/C`.
#[derive(Debug, Clone)]
pub struct LoopResponses {
    pub loop_ref: LoopRef,
    pub s: FrequencyResponse<f64>,
    pub t: FrequencyResponse<f64>,
    pub g: FrequencyResponse<f64>,
    pub p: FrequencyResponse<f64>,
    pub c: FrequencyResponse<f64>,
}

pub fn loop_functions(
    lin: &LinearModel,
    sys: &HessenbergSystem,
    controllers: &ControllerSet,
    loop_ref: LoopRef,
    omega: &[f64],
) -> Result<LoopResponses> {
    let ch = extract_channel(lin, loop_ref)?;
    let (s_vals, mut flagged) = sys.response(&sys.project(&ch.sensitivity), omega);
    let (t_vals, f2) = sys.response(&sys.project(&ch.controller), omega);
    flagged.extend(f2);
    flagged.sort_unstable();
    flagged.dedup();
    let ctrl = reconfigure_one_dof::<f64>(controllers, loop_ref.unit, loop_ref.loop_id)?;
    let c_vals: Vec<Complex<f64>> = omega.iter().map(|&w| ctrl.freq(w)).collect();
    let t_vals: Vec<Complex<f64>> = t_vals.into_iter().map(|v| -v).collect();
    let g_vals: Vec<Complex<f64>> = t_vals.iter().zip(&s_vals).map(|(t, s)| t / s).collect();
    let p_vals: Vec<Complex<f64>> = g_vals.iter().zip(&c_vals).map(|(g, c)| g / c).collect();
    let make = |values: Vec<Complex<f64>>, function| -> Result<FrequencyResponse<f64>> {
        let mut r = FrequencyResponse::new(omega.to_vec(), values, function)?;
        r.loop_ref = Some(loop_ref);
        r.flagged = flagged.clone();
        Ok(r)
    };
    Ok(LoopResponses {
        loop_ref,
        s: make(s_vals, LoopFunction::S)?,
        t: make(t_vals, LoopFunction::T)?,
        g: make(g_vals, LoopFunction::G)?,
        p: make(p_vals, LoopFunction::P)?,
        c: make(c_vals, LoopFunction::C)?,
    })
}

/// Margins of the effective open loop of every loop in `loops`.
pub fn coupled_margins(
    lin: &LinearModel,
    controllers: &ControllerSet,
    loops: &[LoopRef],
    omega: &[f64],
) -> Result<Vec<(LoopRef, MarginResult<f64>)>> {
    let sys = HessenbergSystem::new(&lin.a);
    loops
        .iter()
        .map(|&l| {
            let r = loop_functions(lin, &sys, controllers, l, omega)?;
            Ok((l, stability_margins(&r.g)))
        })
        .collect()
}
