use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rayon::prelude::*;

use crate::linearize::SisoPath;

type C64 = Complex<f64>;

/// Relative nudge applied to a frequency that hits a pole on the imaginary axis.
const NUDGE: f64 = 1e-9;

/// Upper-Hessenberg form `A = Q H Qᵀ` for cheap resolvent solves.
#[derive(Debug, Clone)]
pub struct HessenbergSystem {
    h: DMatrix<f64>,
    q: DMatrix<f64>,
}

/// A SISO path projected onto the Hessenberg basis.
#[derive(Debug, Clone)]
pub struct ProjectedPath {
    b: DVector<f64>,
    c: DVector<f64>,
    d: f64,
}

impl HessenbergSystem {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (q, h) = a.clone().hessenberg().unpack();
        Self { h, q }
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn project(&self, path: &SisoPath) -> ProjectedPath {
        ProjectedPath {
            b: self.q.tr_mul(&path.b),
            c: self.q.tr_mul(&path.c.transpose()),
            d: path.d,
        }
    }

    /// `c (sI − H)⁻¹ b + d`, or `None` when the shifted matrix is singular.
    fn eval(&self, path: &ProjectedPath, s: C64) -> Option<C64> {
        let n = self.dim();
        if n == 0 {
            return Some(C64::new(path.d, 0.0));
        }
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            let lo = i.saturating_sub(1);
            for j in lo..n {
                m[i * n + j] = C64::new(-self.h[(i, j)], 0.0);
            }
            m[i * n + i] += s;
        }
        let mut rhs: Vec<C64> = path.b.iter().map(|&v| C64::new(v, 0.0)).collect();
        let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
        for k in 0..n.saturating_sub(1) {
            // Only rows k and k+1 hold entries in column k.
            if m[(k + 1) * n + k].norm() > m[k * n + k].norm() {
                for j in k..n {
                    m.swap(k * n + j, (k + 1) * n + j);
                }
                rhs.swap(k, k + 1);
            }
            let piv = m[k * n + k];
            if piv.norm() <= f64::EPSILON * scale {
                return None;
            }
            let f = m[(k + 1) * n + k] / piv;
            if f != C64::new(0.0, 0.0) {
                for j in k..n {
                    let v = m[k * n + j];
                    m[(k + 1) * n + j] -= f * v;
                }
                let r = rhs[k];
                rhs[k + 1] -= f * r;
            }
        }
        if m[(n - 1) * n + n - 1].norm() <= f64::EPSILON * scale {
            return None;
        }
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for j in i + 1..n {
                acc -= m[i * n + j] * rhs[j];
            }
            rhs[i] = acc / m[i * n + i];
        }
        let y: C64 = path.c.iter().zip(&rhs).map(|(&c, &x)| x * c).sum();
        Some(y + path.d)
    }

    /// Response on `omega`; points sitting on an imaginary-axis pole are nudged
    /// and their indices returned.
    pub fn response(&self, path: &ProjectedPath, omega: &[f64]) -> (Vec<C64>, Vec<usize>) {
        let out: Vec<(C64, bool)> = omega
            .par_iter()
            .map(|&w| match self.eval(path, C64::new(0.0, w)) {
                Some(v) => (v, false),
                None => {
                    let w2 = w * (1.0 + NUDGE) + NUDGE;
                    let v = self
                        .eval(path, C64::new(0.0, w2))
                        .unwrap_or(C64::new(f64::NAN, f64::NAN));
                    (v, true)
                }
            })
            .collect();
        let flagged = out.iter().enumerate().filter(|(_, v)| v.1).map(|(i, _)| i).collect();
        (out.into_iter().map(|v| v.0).collect(), flagged)
    }
}

/// Reference evaluation by dense complex LU at a single frequency.
pub fn dense_transfer(a: &DMatrix<f64>, path: &SisoPath, omega: f64) -> Option<C64> {
    let n = a.nrows();
    let s = C64::new(0.0, omega);
    let m = DMatrix::<C64>::from_fn(n, n, |i, j| {
        let v = C64::new(-a[(i, j)], 0.0);
        if i == j {
            v + s
        } else {
            v
        }
    });
    let b = DVector::<C64>::from_iterator(n, path.b.iter().map(|&v| C64::new(v, 0.0)));
    let x = m.lu().solve(&b)?;
    let y: C64 = path.c.iter().zip(x.iter()).map(|(&c, &v)| v * c).sum();
    Some(y + path.d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::RowDVector;

    fn random_stable(n: usize, seed: u64) -> DMatrix<f64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut a = DMatrix::from_fn(n, n, |_, _| next());
        for i in 0..n {
            a[(i, i)] -= n as f64;
        }
        a
    }

    #[test]
    fn hessenberg_matches_dense_lu() {
        let a = random_stable(12, 7);
        let path = SisoPath {
            b: DVector::from_fn(12, |i, _| (i as f64).sin()),
            c: RowDVector::from_fn(12, |_, j| (j as f64 * 0.3).cos()),
            d: 0.25,
        };
        let sys = HessenbergSystem::new(&a);
        let proj = sys.project(&path);
        let grid = [0.01, 0.3, 1.0, 7.0, 100.0, 1e4];
        let (vals, flagged) = sys.response(&proj, &grid);
        assert!(flagged.is_empty());
        for (w, v) in grid.iter().zip(vals) {
            let r = dense_transfer(&a, &path, *w).unwrap();
            assert!((v - r).norm() <= 1e-10 * r.norm().max(1.0));
        }
    }

    #[test]
    fn imaginary_axis_pole_is_flagged() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]);
        let path = SisoPath {
            b: DVector::from_vec(vec![0.0, 1.0]),
            c: RowDVector::from_vec(vec![1.0, 0.0]),
            d: 0.0,
        };
        let sys = HessenbergSystem::new(&a);
        let (vals, flagged) = sys.response(&sys.project(&path), &[1.0, 2.0, 3.0]);
        assert_eq!(flagged, vec![1]);
        assert!(vals.iter().all(|v| v.is_finite()));
        // 2 / (s² + 4)
        assert!((vals[0] - C64::new(2.0 / 3.0, 0.0)).norm() < 1e-12);
    }
}
