use nalgebra::DMatrix;

use crate::control::LoopRef;
use crate::error::{Error, Result};
use crate::linearize::LinearModel;
use crate::model::{InputTag, LoopSignal, OutputTag};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseSettings {
    /// Sample step, s.
    pub dt: f64,
    /// Horizon, s.
    pub t_f: f64,
}

impl Default for ImpulseSettings {
    fn default() -> Self {
        Self { dt: 1e-4, t_f: 1.0 }
    }
}

impl ImpulseSettings {
    pub fn samples(&self) -> usize {
        (self.t_f / self.dt).round() as usize + 1
    }
}

/// Responses of the `s` signals of the observed loops to a unit impulse at one
/// loop's disturbance input.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionSignals {
    pub perturbed: LoopRef,
    pub observed: Vec<LoopRef>,
    pub dt: f64,
    pub t_f: f64,
    /// `series[j][k]` is `σ_j` at `t = k·dt`.
    pub series: Vec<Vec<f64>>,
    /// The closed loop has an eigenvalue with positive real part.
    pub unstable: bool,
}

impl RejectionSignals {
    pub fn signal(&self, loop_ref: LoopRef) -> Option<&[f64]> {
        self.observed.iter().position(|&l| l == loop_ref).map(|j| self.series[j].as_slice())
    }
}

/// Rejects a step that under-samples the fastest oscillatory mode.
pub fn check_step(lin: &LinearModel, dt: f64) -> Result<()> {
    let fastest = lin.eigenvalues().iter().map(|e| e.im.abs()).fold(0.0, f64::max);
    if fastest * dt > std::f64::consts::PI {
        return Err(Error::StepTooCoarse {
            dt,
            fastest,
            suggested: std::f64::consts::PI / (4.0 * fastest),
        });
    }
    Ok(())
}

/// Impulse responses for every loop in `perturbed`, observing `observed`.
///
/// The impulse is applied as the initial state `x(0) = B e_i`; the state is
/// then advanced by the exact transition matrix `e^{A dt}`. All experiments
/// share one stepping pass, so the results are deterministic.
pub fn impulse_rejection_set(
    lin: &LinearModel,
    perturbed: &[LoopRef],
    observed: &[LoopRef],
    settings: ImpulseSettings,
) -> Result<Vec<RejectionSignals>> {
    if !(settings.dt > 0.0 && settings.t_f > 0.0) {
        return Err(Error::Config("impulse step and horizon must be positive".into()));
    }
    check_step(lin, settings.dt)?;
    let n = lin.n_states();
    let cols: Vec<usize> = perturbed
        .iter()
        .map(|&l| lin.input_index(InputTag::Disturbance(l)))
        .collect::<Result<_>>()?;
    let rows: Vec<usize> = observed
        .iter()
        .map(|&l| lin.output_index(OutputTag::Loop(l, LoopSignal::S)))
        .collect::<Result<_>>()?;
    let phi = (&lin.a * settings.dt).exp();
    let c = DMatrix::from_fn(rows.len(), n, |i, j| lin.c[(rows[i], j)]);
    let mut x = DMatrix::from_fn(n, cols.len(), |i, j| lin.b[(i, cols[j])]);
    let steps = settings.samples();
    let mut series = vec![vec![vec![0.0; steps]; rows.len()]; cols.len()];
    let mut next = DMatrix::zeros(n, cols.len());
    for k in 0..steps {
        let y = &c * &x;
        for (i, per) in series.iter_mut().enumerate() {
            for (j, s) in per.iter_mut().enumerate() {
                s[k] = y[(j, i)];
            }
        }
        next.gemm(1.0, &phi, &x, 0.0);
        std::mem::swap(&mut x, &mut next);
    }
    if series.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { state: "impulse response".into() });
    }
    let unstable = !lin.is_stable();
    Ok(perturbed
        .iter()
        .zip(series)
        .map(|(&p, s)| RejectionSignals {
            perturbed: p,
            observed: observed.to_vec(),
            dt: settings.dt,
            t_f: settings.t_f,
            series: s,
            unstable,
        })
        .collect())
}

/// Impulse at one loop, observing `observed`.
pub fn impulse_rejection(
    lin: &LinearModel,
    loop_ref: LoopRef,
    observed: &[LoopRef],
    settings: ImpulseSettings,
) -> Result<RejectionSignals> {
    Ok(impulse_rejection_set(lin, &[loop_ref], observed, settings)?.remove(0))
}
