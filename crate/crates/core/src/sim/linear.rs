//! Step responses of extracted closed-loop channels and their second-order templates.

use nalgebra::DMatrix;

use crate::control::{LoopRef, LoopSpec};
use crate::error::{Error, Result};
use crate::linearize::{LinearModel, SisoPath};
use crate::model::{InputTag, LoopSignal, OutputTag};
use crate::sim::series::TimeSeries;

/// Unit-step response of `(A, b, c, d)` by zero-order-hold exact discretisation.
pub fn step_response(a: &DMatrix<f64>, path: &SisoPath, dt: f64, t_f: f64) -> TimeSeries {
    let n = a.nrows();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    m.view_mut((0, n), (n, 1)).copy_from(&(&path.b * dt));
    let e = m.exp();
    let phi = e.view((0, 0), (n, n)).into_owned();
    let gamma = e.view((0, n), (n, 1)).column(0).into_owned();
    let steps = (t_f / dt).round() as usize;
    let mut out = TimeSeries::new(0.0, dt, vec!["y".into()]);
    let mut x = nalgebra::DVector::zeros(n);
    for _ in 0..=steps {
        out.push(&[(&path.c * &x)[0] + path.d]);
        x = &phi * x + &gamma;
    }
    out
}

/// Unit-step response of a loop closed around its effective plant.
///
/// The recorded output is `r − e`: where the loop's own output also moves its
/// internally generated reference, that dependence belongs to the plant.
pub fn step_response_linear(lin: &LinearModel, loop_ref: LoopRef, dt: f64, t_f: f64) -> Result<TimeSeries> {
    let e = lin.siso(InputTag::Reference(loop_ref), OutputTag::Loop(loop_ref, LoopSignal::E))?;
    let path = SisoPath { b: e.b, c: -e.c, d: 1.0 - e.d };
    Ok(step_response(&lin.a, &path, dt, t_f))
}

/// Unit-step response of the raw controlled output.
pub fn output_step_response(lin: &LinearModel, loop_ref: LoopRef, dt: f64, t_f: f64) -> Result<TimeSeries> {
    let path = lin.siso(InputTag::Reference(loop_ref), OutputTag::Loop(loop_ref, LoopSignal::Y))?;
    Ok(step_response(&lin.a, &path, dt, t_f))
}

/// Step response of `ω_n²/(s² + 2ζω_n s + ω_n²)` for `0 < ζ < 1`.
pub fn second_order_template(zeta: f64, omega_n: f64, dt: f64, t_f: f64) -> Result<TimeSeries> {
    if !(zeta > 0.0 && zeta < 1.0 && omega_n > 0.0) {
        return Err(Error::Config(format!("template needs 0 < zeta < 1 and omega_n > 0, got {zeta}, {omega_n}")));
    }
    let root = (1.0 - zeta * zeta).sqrt();
    let wd = omega_n * root;
    let phase = zeta.acos();
    let mut out = TimeSeries::new(0.0, dt, vec!["y".into()]);
    for k in 0..=(t_f / dt).round() as usize {
        let t = k as f64 * dt;
        out.push(&[1.0 - (-zeta * omega_n * t).exp() / root * (wd * t + phase).sin()]);
    }
    Ok(out)
}

/// Template parameters of a loop target.
pub fn template_of(spec: &LoopSpec) -> Result<(f64, f64)> {
    match (spec.zeta, spec.omega_n) {
        (Some(z), Some(w)) => Ok((z, w)),
        _ => Err(Error::Config(format!("{} target has no closed-loop template", spec.loop_id))),
    }
}

/// Largest `|y − y_template|` from `t_from` on.
pub fn envelope_deviation(response: &TimeSeries, template: &TimeSeries, t_from: f64) -> f64 {
    let (a, b) = (&response.columns[0], &template.columns[0]);
    let k0 = response.index_at(t_from);
    a.iter().zip(b).skip(k0).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DVector, RowDVector};

    #[test]
    fn identity_channel_is_instant_step() {
        let path = SisoPath { b: DVector::zeros(0), c: RowDVector::zeros(0), d: 1.0 };
        let r = step_response(&DMatrix::zeros(0, 0), &path, 1e-3, 0.01);
        assert!(r.columns[0].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn state_space_template_matches_analytic() {
        let (z, w) = (0.707, 5.65);
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -w * w, -2.0 * z * w]);
        let path = SisoPath {
            b: DVector::from_vec(vec![0.0, 1.0]),
            c: RowDVector::from_vec(vec![w * w, 0.0]),
            d: 0.0,
        };
        let r = step_response(&a, &path, 1e-3, 3.0);
        let t = second_order_template(z, w, 1e-3, 3.0).unwrap();
        assert!(envelope_deviation(&r, &t, 0.0) < 1e-10);
    }

    #[test]
    fn template_overshoot_and_settling() {
        let (z, w) = (0.707, 5.65);
        let t = second_order_template(z, w, 1e-4, 4.0).unwrap();
        let peak = t.columns[0].iter().cloned().fold(f64::MIN, f64::max);
        let expected = (-std::f64::consts::PI * z / (1.0 - z * z).sqrt()).exp();
        assert!((peak - 1.0 - expected).abs() < 1e-6);
        assert!((t.columns[0].last().unwrap() - 1.0).abs() < 1e-6);
        let ts = t.settling_time("y", 0.02).unwrap();
        assert!((ts - 4.0 / (z * w)).abs() / ts < 0.1, "{ts}");
        assert!((ts - 1.0).abs() < 0.1);
    }

    #[test]
    fn template_rejects_overdamped() {
        assert!(second_order_template(1.2, 1.0, 0.1, 1.0).is_err());
    }
}
