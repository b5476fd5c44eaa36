use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linearize::field::{wrap_angle, VectorField};
use crate::linearize::model::LinearModel;
use crate::model::FarmOde;

/// Central-difference step for a coordinate of magnitude `v`.
pub fn fd_step(v: f64) -> f64 {
    1e-6f64.max(1e-6 * v.abs())
}

fn check(v: &[f64], what: impl Fn(usize) -> String) -> Result<()> {
    match v.iter().position(|a| !a.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::NonFinite { state: what(i) }),
    }
}

/// Jacobians of `f` and `h` with respect to `x` and `u`, by central differences.
///
/// Columns are computed in parallel and assembled in index order, so the result
/// does not depend on the thread count. `scale` multiplies every step.
pub fn jacobians<F: VectorField>(
    field: &F,
    x: &[f64],
    u: &[f64],
    scale: f64,
) -> Result<[DMatrix<f64>; 4]> {
    let (nx, nu, ny) = (field.n_states(), field.n_inputs(), field.n_outputs());
    let mut x0 = x.to_vec();
    for (i, v) in x0.iter_mut().enumerate() {
        if field.is_angle(i) {
            *v = wrap_angle(*v);
        }
    }
    let (f0, y0) = field.eval(&x0, u)?;
    check(&f0, |i| field.state_name(i))?;
    check(&y0, |i| format!("output {i}"))?;

    let column = |j: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let (wrt_x, k) = if j < nx { (true, j) } else { (false, j - nx) };
        let base = if wrt_x { x0[k] } else { u[k] };
        let h = scale * fd_step(base);
        let eval = |delta: f64| {
            if wrt_x {
                let mut xp = x0.clone();
                xp[k] += delta;
                field.eval(&xp, u)
            } else {
                let mut up = u.to_vec();
                up[k] += delta;
                field.eval(&x0, &up)
            }
        };
        let (fp, yp) = eval(h)?;
        let (fm, ym) = eval(-h)?;
        let name = || if wrt_x { field.state_name(k) } else { format!("input {k}") };
        let df: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let dy: Vec<f64> = yp.iter().zip(&ym).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        check(&df, |_| name())?;
        check(&dy, |_| name())?;
        Ok((df, dy))
    };
    let cols: Vec<(Vec<f64>, Vec<f64>)> =
        (0..nx + nu).into_par_iter().map(column).collect::<Result<_>>()?;

    let mut a = DMatrix::zeros(nx, nx);
    let mut b = DMatrix::zeros(nx, nu);
    let mut c = DMatrix::zeros(ny, nx);
    let mut d = DMatrix::zeros(ny, nu);
    for (j, (df, dy)) in cols.iter().enumerate() {
        if j < nx {
            a.set_column(j, &nalgebra::DVector::from_column_slice(df));
            c.set_column(j, &nalgebra::DVector::from_column_slice(dy));
        } else {
            b.set_column(j - nx, &nalgebra::DVector::from_column_slice(df));
            d.set_column(j - nx, &nalgebra::DVector::from_column_slice(dy));
        }
    }
    Ok([a, b, c, d])
}

/// Linearises the farm at `(x, u)` into a tagged [`LinearModel`].
pub fn jacobian_linearize(ode: &FarmOde, x: &[f64], u: &crate::model::FarmInputs) -> Result<LinearModel> {
    let [a, b, c, d] = jacobians(ode, x, &u.to_vec(), 1.0)?;
    let input_tags = ode.input_tags();
    let output_tags = ode.output_tags();
    Ok(LinearModel {
        a,
        b,
        c,
        d,
        state_names: ode.layout.names().to_vec(),
        input_names: input_tags.iter().map(|t| t.name(&ode.unit_names)).collect(),
        output_names: output_tags.iter().map(|t| t.name(&ode.unit_names)).collect(),
        input_tags,
        output_tags,
    })
}
