//! Gain-crossover phase margins.

use num_complex::Complex;

use crate::freqresp::response::{unwrap_deg, FrequencyResponse};
use crate::scalar::{mag_to_db, wrap_deg, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Crossover<T> {
    pub omega: T,
    pub phi_m_deg: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopMargins<T> {
    /// Phase margin in `(−180, 180]`, deg.
    pub phi_m_deg: T,
    /// Gain-crossover frequency, rad/s.
    pub omega_o: T,
    /// Gain margin at the first phase crossover, dB.
    pub gain_margin_db: Option<T>,
    /// More than one gain crossover in the band.
    pub multiple: bool,
    pub crossovers: Vec<Crossover<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MarginResult<T> {
    Found(LoopMargins<T>),
    NoCrossover,
}

impl<T: Scalar> MarginResult<T> {
    pub fn margins(&self) -> Option<&LoopMargins<T>> {
        match self {
            MarginResult::Found(m) => Some(m),
            MarginResult::NoCrossover => None,
        }
    }

    pub fn into_result(self) -> crate::error::Result<LoopMargins<T>> {
        match self {
            MarginResult::Found(m) => Ok(m),
            MarginResult::NoCrossover => Err(crate::error::Error::NoCrossover),
        }
    }
}

/// Margins from a sampled response; crossovers are refined by log-linear interpolation.
pub fn stability_margins<T: Scalar>(resp: &FrequencyResponse<T>) -> MarginResult<T> {
    let lw: Vec<T> = resp.omega.iter().map(|w| w.ln()).collect();
    let lm: Vec<T> = resp.values.iter().map(|v| v.norm().ln()).collect();
    let ph = resp.unwrapped_phase_deg();
    let mut found = Vec::new();
    for k in 0..resp.len().saturating_sub(1) {
        if let Some(a) = crossing_fraction(lm[k], lm[k + 1]) {
            let omega = (lw[k] + a * (lw[k + 1] - lw[k])).exp();
            let phase = ph[k] + a * (ph[k + 1] - ph[k]);
            found.push(Crossover { omega, phi_m_deg: wrap_deg(T::lit(180.0) + phase) });
        }
    }
    let gm = gain_margin(&lm, &ph);
    assemble(found, gm)
}

/// Margins with each crossover refined by bisection on `f` to `1e-6` relative in ω.
pub fn stability_margins_exact<T: Scalar>(
    omega: &[T],
    f: impl Fn(T) -> Complex<T>,
) -> MarginResult<T> {
    let values: Vec<Complex<T>> = omega.iter().map(|&w| f(w)).collect();
    let lm: Vec<T> = values.iter().map(|v| v.norm().ln()).collect();
    let ph = unwrap_deg(values.iter().map(|v| v.arg().to_deg()));
    let mut found = Vec::new();
    for k in 0..omega.len().saturating_sub(1) {
        if crossing_fraction(lm[k], lm[k + 1]).is_none() {
            continue;
        }
        let (mut a, mut b) = (omega[k], omega[k + 1]);
        let sa = lm[k] > T::zero();
        let tol = T::lit(1e-8).max(T::epsilon() * T::lit(4.0));
        for _ in 0..200 {
            if (b - a) / a <= tol {
                break;
            }
            let m = (a * b).sqrt();
            if (f(m).norm().ln() > T::zero()) == sa {
                a = m;
            } else {
                b = m;
            }
        }
        let w = (a * b).sqrt();
        // Continue the unwrapped phase from the bracketing sample.
        let raw = f(w).arg().to_deg();
        let phase = nearest_branch(raw, ph[k]);
        found.push(Crossover { omega: w, phi_m_deg: wrap_deg(T::lit(180.0) + phase) });
    }
    let gm = gain_margin(&lm, &ph);
    assemble(found, gm)
}

fn nearest_branch<T: Scalar>(raw: T, reference: T) -> T {
    let full = T::lit(360.0);
    let k = ((reference - raw) / full).round();
    raw + k * full
}

/// Fraction along `[a, b]` where a log-magnitude crosses zero downward or upward.
fn crossing_fraction<T: Scalar>(a: T, b: T) -> Option<T> {
    if !(a.is_finite() && b.is_finite()) {
        return None;
    }
    let z = T::zero();
    if (a > z && b <= z) || (a <= z && b > z) {
        if a == b {
            return None;
        }
        Some(a / (a - b))
    } else {
        None
    }
}

fn gain_margin<T: Scalar>(lm: &[T], ph: &[T]) -> Option<T> {
    let target = -T::lit(180.0);
    for k in 0..ph.len().saturating_sub(1) {
        let (p0, p1) = (ph[k] - target, ph[k + 1] - target);
        if p0 == T::zero() || (p0 > T::zero()) != (p1 > T::zero()) {
            let a = if p0 == p1 { T::zero() } else { p0 / (p0 - p1) };
            let lmag = lm[k] + a * (lm[k + 1] - lm[k]);
            return Some(-mag_to_db(lmag.exp()));
        }
    }
    None
}

fn assemble<T: Scalar>(found: Vec<Crossover<T>>, gm: Option<T>) -> MarginResult<T> {
    let Some(worst) = found
        .iter()
        .min_by(|a, b| a.phi_m_deg.partial_cmp(&b.phi_m_deg).unwrap())
        .cloned()
    else {
        return MarginResult::NoCrossover;
    };
    MarginResult::Found(LoopMargins {
        phi_m_deg: worst.phi_m_deg,
        omega_o: worst.omega,
        gain_margin_db: gm,
        multiple: found.len() > 1,
        crossovers: found,
    })
}

/// Classical phase margin of `ω_n²/(s(s + 2ζω_n))`.
pub fn second_order_phase_margin_deg(zeta: f64) -> f64 {
    let z2 = zeta * zeta;
    (2.0 * zeta / ((4.0 * z2 * z2 + 1.0).sqrt() - 2.0 * z2).sqrt()).atan().to_degrees()
}

/// Gain crossover of `ω_n²/(s(s + 2ζω_n))` in units of `ω_n`.
pub fn second_order_crossover_ratio(zeta: f64) -> f64 {
    let z2 = zeta * zeta;
    ((4.0 * z2 * z2 + 1.0).sqrt() - 2.0 * z2).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freqresp::response::{default_grid, LoopFunction};

    fn second_order(zeta: f64, wn: f64) -> impl Fn(f64) -> Complex<f64> {
        move |w| {
            let s = Complex::new(0.0, w);
            wn * wn / (s * (s + 2.0 * zeta * wn))
        }
    }

    #[test]
    fn classical_second_order() {
        let (zeta, wn) = (0.707, 70.4);
        let m = stability_margins_exact(&default_grid(), second_order(zeta, wn))
            .into_result()
            .unwrap();
        assert!((m.phi_m_deg - second_order_phase_margin_deg(zeta)).abs() < 0.01);
        assert!((m.phi_m_deg - 65.5).abs() < 0.1);
        let ratio = m.omega_o / wn;
        assert!((ratio - second_order_crossover_ratio(zeta)).abs() < 1e-6);
        assert!((ratio - 0.644).abs() < 1e-3);
        assert!(!m.multiple);
    }

    #[test]
    fn sampled_close_to_exact() {
        let g = default_grid();
        let f = second_order(0.5, 10.0);
        let r = FrequencyResponse::sample(&g, LoopFunction::G, &f).unwrap();
        let a = stability_margins(&r).into_result().unwrap();
        let b = stability_margins_exact(&g, &f).into_result().unwrap();
        assert!((a.phi_m_deg - b.phi_m_deg).abs() < 0.05);
        assert!((a.omega_o - b.omega_o).abs() / b.omega_o < 1e-3);
    }

    #[test]
    fn pure_gain_has_no_crossover() {
        let g = default_grid();
        let r = stability_margins_exact(&g, |_| Complex::new(2.0, 0.0));
        assert_eq!(r, MarginResult::NoCrossover);
    }

    #[test]
    fn integrator_margin_is_ninety() {
        let m = stability_margins_exact(&default_grid(), |w: f64| {
            Complex::new(0.0, 2.0 / w).conj()
        })
        .into_result()
        .unwrap();
        assert!((m.phi_m_deg - 90.0).abs() < 1e-9);
        assert!((m.omega_o - 2.0).abs() < 1e-5);
    }

    #[test]
    fn deterministic_bits() {
        let g = default_grid();
        let a = stability_margins_exact(&g, second_order(0.3, 5.0));
        let b = stability_margins_exact(&g, second_order(0.3, 5.0));
        assert_eq!(a, b);
    }

    #[test]
    fn single_precision_path() {
        let g = crate::freqresp::response::log_grid(1e-2_f32, 1e4, 800);
        let m = stability_margins_exact(&g, |w: f32| {
            let s = Complex::new(0.0, w);
            25.0 / (s * (s + 7.07))
        })
        .into_result()
        .unwrap();
        assert!((m.phi_m_deg - 65.5).abs() < 0.1);
    }
}
