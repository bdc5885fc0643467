//! Global extremization of a quadratic over a closed Euclidean ball.
//!
//! Both the minimum and the maximum are found exactly: the Hessian is
//! diagonalized once, the interior stationary point is checked, and the
//! boundary problem is reduced to a scalar secular equation in the multiplier
//! `mu`, `||(H + mu I)^{-1} g|| = r`, solved by safeguarded Newton on
//! `1/||s(mu)||`. The hard case (gradient orthogonal to the leftmost
//! eigenspace) is handled by stepping along the leftmost eigenvector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::poly::QuadraticPolynomial;

pub const DEFAULT_TOL: f64 = 1e-10;
/// Largest number of lattice points the grid oracle will visit.
pub const GRID_BUDGET: f64 = 1e7;

#[derive(Debug, Clone, Serialize)]
pub struct BallExtremum {
    pub max_value: f64,
    pub argmax: Vec<f64>,
    pub min_value: f64,
    pub argmin: Vec<f64>,
    /// Relative KKT residual of the two solutions.
    pub solver_residual: f64,
}

/// Global minimizer of `g^T s + s^T H s / 2` over `||s|| <= r`.
#[derive(Debug, Clone)]
struct BallMin {
    step: DVector<f64>,
    value: f64,
    residual: f64,
}

struct Spectrum {
    values: Vec<f64>,
    vectors: Vec<DVector<f64>>,
}

impl Spectrum {
    fn new(h: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(h.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
        Self { values, vectors }
    }

    fn negate(&self) -> Self {
        let n = self.values.len();
        Self {
            values: (0..n).rev().map(|i| -self.values[i]).collect(),
            vectors: (0..n).rev().map(|i| self.vectors[i].clone()).collect(),
        }
    }
}

fn quad_value(g: &DVector<f64>, h: &DMatrix<f64>, s: &DVector<f64>) -> f64 {
    g.dot(s) + 0.5 * s.dot(&(h * s))
}

fn lex_less(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

fn minimize_on_ball(g: &DVector<f64>, h: &DMatrix<f64>, spec: &Spectrum, r: f64, tol: f64) -> BallMin {
    let n = g.len();
    let lam = &spec.values;
    let gh: Vec<f64> = spec.vectors.iter().map(|q| q.dot(g)).collect();
    let lam_scale = lam.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
    let eig_gap = 1e-12 * lam_scale;
    let gnorm = g.norm();
    let lam1 = lam[0];

    let step_for = |mu: f64, skip: &dyn Fn(usize) -> bool| -> DVector<f64> {
        let mut s = DVector::zeros(n);
        for i in 0..n {
            if skip(i) {
                continue;
            }
            let d = lam[i] + mu;
            if gh[i] != 0.0 {
                s.axpy(-gh[i] / d, &spec.vectors[i], 1.0);
            }
        }
        s
    };
    let norm_at = |mu: f64| -> f64 {
        gh.iter()
            .zip(lam)
            .map(|(&c, &l)| if c == 0.0 { 0.0 } else { (c / (l + mu)).powi(2) })
            .sum::<f64>()
            .sqrt()
    };

    let mut candidates: Vec<(DVector<f64>, f64)> = Vec::new();

    // Interior stationary point.
    if lam1 > eig_gap {
        let s = step_for(0.0, &|_| false);
        if s.norm() <= r {
            candidates.push((s, 0.0));
        }
    }

    // Boundary solution from the secular equation.
    let lo = (-lam1).max(0.0);
    if gnorm > 0.0 {
        let mut a = lo;
        let mut b = (gnorm / r - lam1).max(lo);
        // ||s(b)|| <= ||g|| / (lam1 + b) <= r whenever lam1 + b > 0.
        while norm_at(b) > r {
            b = 2.0 * b + 1.0;
        }
        let at_lo = norm_at(a);
        if at_lo > r && b > a {
            let mut mu = b;
            for _ in 0..200 {
                let nm = norm_at(mu);
                if (nm - r).abs() <= tol * 1e-3 * r {
                    break;
                }
                if nm > r {
                    a = mu;
                } else {
                    b = mu;
                }
                // Newton on phi(mu) = 1/||s(mu)|| - 1/r.
                let d: f64 = gh
                    .iter()
                    .zip(lam)
                    .map(|(&c, &l)| if c == 0.0 { 0.0 } else { c * c / (l + mu).powi(3) })
                    .sum();
                let phi = 1.0 / nm - 1.0 / r;
                let dphi = d / nm.powi(3);
                let mut next = mu - phi / dphi;
                if !next.is_finite() || next <= a || next >= b {
                    next = 0.5 * (a + b);
                }
                if (next - mu).abs() <= f64::EPSILON * mu.abs().max(1.0) {
                    mu = next;
                    break;
                }
                mu = next;
            }
            let mut s = step_for(mu, &|_| false);
            let sn = s.norm();
            if sn > 0.0 {
                s *= r / sn;
            }
            candidates.push((s, mu));
        }
    }

    // Hard case: move along the leftmost eigenvector.
    if lam1 <= eig_gap {
        let mu = lo;
        let in_left = |i: usize| lam[i] - lam1 <= eig_gap;
        let s_perp = step_for(mu, &in_left);
        let pn = s_perp.norm();
        if pn <= r {
            let tau = (r * r - pn * pn).max(0.0).sqrt();
            for sign in [1.0, -1.0] {
                let mut s = s_perp.clone();
                s.axpy(sign * tau, &spec.vectors[0], 1.0);
                candidates.push((s, mu));
            }
        }
    }

    if candidates.is_empty() {
        // g = 0 with a positive definite H.
        candidates.push((DVector::zeros(n), 0.0));
    }

    let mut best: Option<(DVector<f64>, f64, f64)> = None;
    for (s, mu) in candidates {
        let v = quad_value(g, h, &s);
        let better = match &best {
            None => true,
            Some((bs, bv, _)) => v < *bv || (v == *bv && lex_less(&s, bs)),
        };
        if better {
            best = Some((s, v, mu));
        }
    }
    let (step, value, mu) = best.expect("at least one candidate");
    let kkt = h * &step + &step * mu + g;
    let denom = gnorm + lam_scale * r + mu * r;
    let residual = if denom > 0.0 { kkt.norm() / denom } else { 0.0 };
    BallMin { step, value, residual }
}

fn validate(m: &QuadraticPolynomial, center: &[f64], radius: f64) -> Result<()> {
    if !m.is_finite() || center.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput(
            "non-finite polynomial coefficients or center".into(),
        ));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    if center.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: center.len(),
        });
    }
    Ok(())
}

/// Global max and min of `m` over the closed ball `B(center, radius)`.
pub fn extremize_on_ball(m: &QuadraticPolynomial, center: &[f64], radius: f64, tol: f64) -> Result<BallExtremum> {
    validate(m, center, radius)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let c0 = m.eval_unchecked(center);
    let g0 = m.grad(center)?;
    let h = m.hessian();
    let spec = Spectrum::new(h);

    let lo = minimize_on_ball(&g0, h, &spec, radius, tol);
    let neg_g = -&g0;
    let neg_h = -h;
    let hi = minimize_on_ball(&neg_g, &neg_h, &spec.negate(), radius, tol);

    let shift = |s: &DVector<f64>| -> Vec<f64> { center.iter().zip(s.iter()).map(|(c, d)| c + d).collect() };
    Ok(BallExtremum {
        max_value: c0 - hi.value,
        argmax: shift(&hi.step),
        min_value: c0 + lo.value,
        argmin: shift(&lo.step),
        solver_residual: lo.residual.max(hi.residual),
    })
}

/// `max |m|` over the ball, with the point attaining it.
pub fn max_abs_on_ball(m: &QuadraticPolynomial, center: &[f64], radius: f64, tol: f64) -> Result<(f64, Vec<f64>)> {
    let e = extremize_on_ball(m, center, radius, tol)?;
    if e.max_value.abs() >= e.min_value.abs() {
        Ok((e.max_value.abs(), e.argmax))
    } else {
        Ok((e.min_value.abs(), e.argmin))
    }
}

/// Brute-force `max |m|` over the lattice `center + resolution * Z^n`
/// restricted to the ball. Limited to `n <= 4` and [`GRID_BUDGET`] points.
pub fn grid_oracle(m: &QuadraticPolynomial, center: &[f64], radius: f64, resolution: f64) -> Result<(f64, Vec<f64>)> {
    grid_oracle_with(Execution::default(), m, center, radius, resolution)
}

pub fn grid_oracle_with(
    exec: Execution,
    m: &QuadraticPolynomial,
    center: &[f64],
    radius: f64,
    resolution: f64,
) -> Result<(f64, Vec<f64>)> {
    validate(m, center, radius)?;
    if !(resolution > 0.0) {
        return Err(Error::InvalidInput(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let n = m.dim();
    if n > 4 {
        return Err(Error::GridBudget(format!("dimension {n} exceeds 4")));
    }
    let k = (radius / resolution).floor() as i64;
    let side = (2 * k + 1) as f64;
    if side.powi(n as i32) > GRID_BUDGET {
        return Err(Error::GridBudget(format!(
            "{side}^{n} lattice points exceed the budget of {GRID_BUDGET:e}"
        )));
    }
    let r2 = radius * radius * (1.0 + 1e-12);
    let firsts: Vec<i64> = (-k..=k).collect();
    let slices = par::map(exec, &firsts, |&i0| {
        let mut best = (f64::NEG_INFINITY, Vec::new());
        let mut idx = vec![-k; n];
        idx[0] = i0;
        let mut x = vec![0.0; n];
        'outer: loop {
            let mut d2 = 0.0;
            for d in 0..n {
                let off = idx[d] as f64 * resolution;
                d2 += off * off;
                x[d] = center[d] + off;
            }
            if d2 <= r2 {
                let v = m.eval_unchecked(&x).abs();
                if v > best.0 {
                    best = (v, x.clone());
                }
            }
            // odometer over coordinates 1..n
            let mut d = 1;
            loop {
                if d >= n {
                    break 'outer;
                }
                if idx[d] < k {
                    idx[d] += 1;
                    break;
                }
                idx[d] = -k;
                d += 1;
            }
        }
        best
    });
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for s in slices {
        if s.0 > best.0 {
            best = s;
        }
    }
    Ok(best)
}

/// Upper bound on `||grad m||` over `B(center, radius)`:
/// `||g|| + ||H|| (||center|| + radius)`.
pub fn lipschitz_on_ball(m: &QuadraticPolynomial, center: &[f64], radius: f64) -> f64 {
    let c = DVector::from_column_slice(center);
    m.gradient().norm() + m.hessian_norm() * (c.norm() + radius)
}
