use std::fmt::Write as _;

use crate::control::{LoopId, LoopRef};
use crate::error::{Error, Result};
use crate::interaction::correlation::InteractionMatrix;

/// Influence (row) and susceptibility (column) means of ρ, diagonal excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopIndices {
    pub labels: Vec<LoopRef>,
    pub iidx: Vec<f64>,
    pub sidx: Vec<f64>,
}

pub fn influence_indices(m: &InteractionMatrix) -> Result<LoopIndices> {
    let n = m.labels.len();
    if n < 2 || m.rho.nrows() != n || m.rho.ncols() != n {
        return Err(Error::Config("indices need a square matrix with at least two loops".into()));
    }
    let off = (n - 1) as f64;
    let iidx = (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| m.rho[(i, j)]).sum::<f64>() / off);
    let sidx = (0..n).map(|j| (0..n).filter(|&i| i != j).map(|i| m.rho[(i, j)]).sum::<f64>() / off);
    Ok(LoopIndices { labels: m.labels.clone(), iidx: iidx.collect(), sidx: sidx.collect() })
}

impl LoopIndices {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("loop,iidx,sidx\n");
        for (k, l) in self.labels.iter().enumerate() {
            let _ = writeln!(s, "{l},{:.9},{:.9}", self.iidx[k], self.sidx[k]);
        }
        s
    }
}

/// Averaged influence per loop kind across `machines`.
pub fn averaged_influence(machines: &[LoopIndices]) -> Vec<(LoopId, f64)> {
    LoopId::ALL
        .iter()
        .map(|&id| {
            let vals: Vec<f64> = machines
                .iter()
                .flat_map(|m| m.labels.iter().zip(&m.iidx).filter(|(l, _)| l.loop_id == id).map(|(_, &v)| v))
                .collect();
            let mean = if vals.is_empty() { 0.0 } else { vals.iter().sum::<f64>() / vals.len() as f64 };
            (id, mean)
        })
        .collect()
}

/// Loops by descending averaged influence; exact ties follow [`LoopId::TIE_BREAK`].
pub fn redesign_sequence(machines: &[LoopIndices]) -> Vec<LoopId> {
    let mut avg = averaged_influence(machines);
    avg.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.tie_rank().cmp(&b.0.tie_rank())));
    avg.into_iter().map(|(id, _)| id).collect()
}
