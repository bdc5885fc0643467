//! Small dense helpers over nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default threshold above which a system counts as not poised.
pub const COND_THRESHOLD: f64 = 1e12;

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    a.clone().svd(false, false).singular_values
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values(a).max()
}

/// `sigma_max / sigma_min` over the `min(rows, cols)` singular values;
/// infinite when rank deficient.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let s = singular_values(a);
    let (lo, hi) = (s.min(), s.max());
    if lo <= 0.0 || !lo.is_finite() {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Spectral norm of the Moore-Penrose pseudo-inverse of a full-column-rank
/// matrix, `1 / sigma_min`.
pub fn pinv_norm(a: &DMatrix<f64>) -> f64 {
    let s = singular_values(a);
    let lo = s.min();
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / lo
    }
}

/// LU factorization of a square matrix guarded by a condition estimate.
pub struct GuardedLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    pub condition: f64,
}

impl GuardedLu {
    pub fn new(a: &DMatrix<f64>, threshold: f64) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Shape(format!(
                "expected square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let condition = condition_number(a);
        if !(condition <= threshold) {
            return Err(Error::NotPoised { condition, threshold });
        }
        Ok(Self {
            lu: a.clone().lu(),
            condition,
        })
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.lu.solve(b).ok_or(Error::NotPoised {
            condition: f64::INFINITY,
            threshold: COND_THRESHOLD,
        })
    }
}
