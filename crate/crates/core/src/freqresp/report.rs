//! Plot-ready and tabular exports of responses and margins.

use std::fmt::Write as _;

use crate::control::{spec_for, LoopRef, LoopSpec};
use crate::freqresp::loops::LoopResponses;
use crate::freqresp::margins::MarginResult;
use crate::freqresp::response::FrequencyResponse;

/// `omega,mag_db,phase_deg` with continuously unwrapped phase.
pub fn bode_csv(r: &FrequencyResponse<f64>) -> String {
    let mut s = String::from("omega,mag_db,phase_deg\n");
    for ((w, m), p) in r.omega.iter().zip(r.magnitude_db()).zip(r.unwrapped_phase_deg()) {
        let _ = writeln!(s, "{w:.9e},{m:.9e},{p:.9e}");
    }
    s
}

/// `phase_deg,mag_db,omega` for a Nichols chart.
pub fn nichols_csv(r: &FrequencyResponse<f64>) -> String {
    let mut s = String::from("phase_deg,mag_db,omega\n");
    for ((w, m), p) in r.omega.iter().zip(r.magnitude_db()).zip(r.unwrapped_phase_deg()) {
        let _ = writeln!(s, "{p:.9e},{m:.9e},{w:.9e}");
    }
    s
}

/// All five loop functions of one loop side by side.
pub fn loop_functions_csv(r: &LoopResponses) -> String {
    let funcs = [("s", &r.s), ("t", &r.t), ("g", &r.g), ("p", &r.p), ("c", &r.c)];
    let mut s = String::from("omega");
    for (n, _) in &funcs {
        let _ = write!(s, ",{n}_mag_db,{n}_phase_deg");
    }
    s.push('\n');
    let cols: Vec<(Vec<f64>, Vec<f64>)> =
        funcs.iter().map(|(_, f)| (f.magnitude_db(), f.unwrapped_phase_deg())).collect();
    for (k, w) in r.g.omega.iter().enumerate() {
        let _ = write!(s, "{w:.9e}");
        for (m, p) in &cols {
            let _ = write!(s, ",{:.9e},{:.9e}", m[k], p[k]);
        }
        s.push('\n');
    }
    s
}

/// Margins in the stage-table layout: one row per loop per machine.
pub fn margins_csv(stage: &str, rows: &[(LoopRef, MarginResult<f64>)], specs: &[LoopSpec]) -> String {
    let mut s = String::from(
        "stage,unit,loop,phi_m_deg,omega_o,target_phi_m_deg,target_omega_o,gain_margin_db,crossovers\n",
    );
    for (l, m) in rows {
        let (t_phi, t_w) = spec_for(specs, l.loop_id)
            .map_or(("".to_string(), "".to_string()), |t| (t.phi_m_deg.to_string(), t.omega_o.to_string()));
        let (phi, w, gm, n) = match m.margins() {
            Some(m) => (
                format!("{:.6}", m.phi_m_deg),
                format!("{:.6}", m.omega_o),
                m.gain_margin_db.map_or("inf".to_string(), |g| format!("{g:.6}")),
                m.crossovers.len(),
            ),
            None => ("none".into(), "none".into(), "inf".into(), 0),
        };
        let _ = writeln!(s, "{stage},{},{},{phi},{w},{t_phi},{t_w},{gm},{n}", l.unit + 1, l.loop_id);
    }
    s
}
