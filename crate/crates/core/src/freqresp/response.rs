use num_complex::Complex;

use crate::control::LoopRef;
use crate::error::{Error, Result};
use crate::scalar::{mag_to_db, Scalar};

/// Which loop function a response represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopFunction {
    S,
    T,
    G,
    P,
    C,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse<T> {
    /// rad/s, strictly increasing.
    pub omega: Vec<T>,
    pub values: Vec<Complex<T>>,
    pub loop_ref: Option<LoopRef>,
    pub function: LoopFunction,
    /// Indices of grid points that were nudged or excluded.
    pub flagged: Vec<usize>,
}

impl<T: Scalar> FrequencyResponse<T> {
    pub fn new(omega: Vec<T>, values: Vec<Complex<T>>, function: LoopFunction) -> Result<Self> {
        if omega.len() != values.len() || omega.is_empty() {
            return Err(Error::Config("response grid and values differ in length".into()));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) || !(omega[0] > T::zero()) {
            return Err(Error::Config("frequency grid must be positive and increasing".into()));
        }
        Ok(Self { omega, values, loop_ref: None, function, flagged: Vec::new() })
    }

    /// Samples `f` on `omega`.
    pub fn sample(omega: &[T], function: LoopFunction, f: impl Fn(T) -> Complex<T>) -> Result<Self> {
        let values = omega.iter().map(|&w| f(w)).collect();
        Self::new(omega.to_vec(), values, function)
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn magnitude_db(&self) -> Vec<T> {
        self.values.iter().map(|v| mag_to_db(v.norm())).collect()
    }

    /// Phase in degrees, continuously unwrapped from the first point.
    pub fn unwrapped_phase_deg(&self) -> Vec<T> {
        unwrap_deg(self.values.iter().map(|v| v.arg().to_deg()))
    }

    /// Pointwise map.
    pub fn map(&self, function: LoopFunction, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self {
            omega: self.omega.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            loop_ref: self.loop_ref,
            function,
            flagged: self.flagged.clone(),
        }
    }
}

/// Log-spaced grid of `n` points over `[lo, hi]`.
pub fn log_grid<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 2 && lo > T::zero() && hi > lo);
    let (a, b) = (lo.log10(), hi.log10());
    let step = (b - a) / T::lit((n - 1) as f64);
    let ten = T::lit(10.0);
    (0..n)
        .map(|k| if k == n - 1 { hi } else { ten.powf(a + step * T::lit(k as f64)) })
        .collect()
}

/// Default analysis grid: 2000 points over `[1e-2, 1e5]` rad/s.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-2, 1e5, 2000)
}

/// Unwraps a phase sequence in degrees.
pub fn unwrap_deg<T: Scalar>(phase: impl IntoIterator<Item = T>) -> Vec<T> {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let mut out: Vec<T> = Vec::new();
    let mut offset = T::zero();
    let mut prev: Option<T> = None;
    for p in phase {
        if let Some(q) = prev {
            let mut d = p - q;
            while d > half {
                offset -= full;
                d -= full;
            }
            while d < -half {
                offset += full;
                d += full;
            }
        }
        prev = Some(p);
        out.push(p + offset);
    }
    out
}
