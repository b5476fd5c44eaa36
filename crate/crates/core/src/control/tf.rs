use num_complex::Complex;

use crate::scalar::Scalar;

/// Rational transfer function with ascending-power coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Tf<T> {
    pub num: Vec<T>,
    pub den: Vec<T>,
}

impl<T: Scalar> Tf<T> {
    pub fn gain(k: T) -> Self {
        Self { num: vec![k], den: vec![T::one()] }
    }

    /// `K_p + K_i/s`
    pub fn pi(kp: T, ki: T) -> Self {
        Self { num: vec![ki, kp], den: vec![T::zero(), T::one()] }
    }

    /// `(1 + s a)/(1 + s b)`
    pub fn lead_lag(a: T, b: T) -> Self {
        Self { num: vec![T::one(), a], den: vec![T::one(), b] }
    }

    /// `k/s`
    pub fn integrator(k: T) -> Self {
        Self { num: vec![k], den: vec![T::zero(), T::one()] }
    }

    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        poly(&self.num, s) / poly(&self.den, s)
    }

    pub fn freq(&self, omega: T) -> Complex<T> {
        self.eval(Complex::new(T::zero(), omega))
    }

    pub fn series(&self, other: &Tf<T>) -> Tf<T> {
        Tf { num: conv(&self.num, &other.num), den: conv(&self.den, &other.den) }
    }

    pub fn dc_gain(&self) -> T {
        self.num[0] / self.den[0]
    }
}

fn poly<T: Scalar>(c: &[T], s: Complex<T>) -> Complex<T> {
    c.iter().rev().fold(Complex::new(T::zero(), T::zero()), |acc, &k| acc * s + k)
}

fn conv<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
