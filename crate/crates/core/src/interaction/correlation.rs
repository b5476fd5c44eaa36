use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::control::LoopRef;
use crate::error::{Error, Result};
use crate::interaction::impulse::RejectionSignals;

/// Trapezoidal integral of uniformly sampled values.
pub fn trapezoid(dt: f64, values: impl IntoIterator<Item = f64>) -> f64 {
    let mut it = values.into_iter();
    let Some(first) = it.next() else { return 0.0 };
    let mut sum = 0.0;
    let mut last = first;
    let mut count = 1;
    for v in it {
        sum += v;
        last = v;
        count += 1;
    }
    if count == 1 {
        return 0.0;
    }
    dt * (sum - 0.5 * last + 0.5 * first)
}

/// Directional correlation of `observed` against `own`. `None` when either
/// signal has zero energy.
pub fn directional_correlation(own: &[f64], observed: &[f64], dt: f64) -> Option<f64> {
    let cross = trapezoid(dt, own.iter().zip(observed).map(|(a, b)| a * b));
    let e_own = trapezoid(dt, own.iter().map(|a| a * a));
    let e_obs = trapezoid(dt, observed.iter().map(|a| a * a));
    let denom = e_own.sqrt() * e_obs.sqrt();
    if !(denom > 0.0) {
        return None;
    }
    Some((cross.abs() / denom).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    pub labels: Vec<LoopRef>,
    /// `rho[(i, j)]`: perturbed loop `i`, observed loop `j`.
    pub rho: DMatrix<f64>,
    /// Entries set to zero because a signal had no energy.
    pub flagged: Vec<(usize, usize)>,
}

/// ρ from one experiment per loop; every experiment must observe `labels` in order.
pub fn correlation_matrix(signals: &[RejectionSignals]) -> Result<InteractionMatrix> {
    let labels: Vec<LoopRef> = signals.iter().map(|s| s.perturbed).collect();
    let n = labels.len();
    let mut rho = DMatrix::zeros(n, n);
    let mut flagged = Vec::new();
    for (i, sig) in signals.iter().enumerate() {
        if sig.observed != labels {
            return Err(Error::Config("experiments observe different loop sets".into()));
        }
        let len = sig.series[0].len();
        if sig.series.iter().any(|s| s.len() != len) || sig.dt != signals[0].dt {
            return Err(Error::Config("rejection signals are on different grids".into()));
        }
        let own = &sig.series[i];
        for j in 0..n {
            if i == j {
                rho[(i, j)] = 1.0;
                continue;
            }
            match directional_correlation(own, &sig.series[j], sig.dt) {
                Some(v) => rho[(i, j)] = v,
                None => flagged.push((i, j)),
            }
        }
    }
    debug_assert!(rho.iter().all(|v| (0.0..=1.0).contains(v)));
    Ok(InteractionMatrix { labels, rho, flagged })
}

impl InteractionMatrix {
    /// The block of loops belonging to `unit`.
    pub fn unit_block(&self, unit: usize) -> InteractionMatrix {
        let idx: Vec<usize> = (0..self.labels.len()).filter(|&i| self.labels[i].unit == unit).collect();
        let rho = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.rho[(idx[r], idx[c])]);
        let flagged = self
            .flagged
            .iter()
            .filter_map(|&(i, j)| {
                let r = idx.iter().position(|&k| k == i)?;
                let c = idx.iter().position(|&k| k == j)?;
                Some((r, c))
            })
            .collect();
        InteractionMatrix { labels: idx.iter().map(|&i| self.labels[i]).collect(), rho, flagged }
    }

    /// Labelled CSV, rows perturbed, columns observed.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("perturbed");
        for l in &self.labels {
            let _ = write!(s, ",{l}");
        }
        s.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            let _ = write!(s, "{l}");
            for j in 0..self.labels.len() {
                let _ = write!(s, ",{:.9}", self.rho[(i, j)]);
            }
            s.push('\n');
        }
        s
    }

    /// Plain value grid for a grey-scale heat map, one row per line.
    pub fn heatmap_data(&self) -> String {
        let mut s = String::new();
        for i in 0..self.labels.len() {
            let row: Vec<String> = (0..self.labels.len()).map(|j| format!("{:.6}", self.rho[(i, j)])).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_of_line_is_exact() {
        let dt = 0.1;
        let v: Vec<f64> = (0..=10).map(|k| 2.0 * k as f64 * dt + 1.0).collect();
        assert!((trapezoid(dt, v) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sign_does_not_matter() {
        let a: Vec<f64> = (0..100).map(|k| (k as f64 * 0.1).sin()).collect();
        let b: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((directional_correlation(&a, &b, 0.01).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_signal_has_no_correlation() {
        assert_eq!(directional_correlation(&[1.0, 2.0], &[0.0, 0.0], 0.1), None);
    }
}
