//! Sample sets, interpolation matrices, Lagrange polynomials and
//! Λ-poisedness.
//!
//! Shifted matrices (`L_L`, `L_Q`, `L_s` and their scaled forms) are built
//! around `y0`; `M(phi, Y)` and `F(phi, Y)` use absolute coordinates. All
//! solves happen on the normalized set `{(y - y0)/delta}` and results are
//! mapped back, since Lagrange polynomials are invariant under shifts and
//! scalings of the set.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ball::{self, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, GuardedLu, COND_THRESHOLD};
use crate::par::{self, Execution};
use crate::poly::{natural_basis, quad_q, BasisPart, BasisSelector, Degree, QuadraticPolynomial};

/// Points `y0, ..., yp` inside `B(y0, delta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<Vec<f64>>,
    delta: f64,
}

impl SampleSet {
    pub fn new(points: Vec<Vec<f64>>, delta: f64) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidInput("sample set needs at least one point".into()))?;
        let n = first.len();
        if n == 0 {
            return Err(Error::InvalidInput("points must have positive dimension".into()));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
        }
        for (j, y) in points.iter().enumerate() {
            if y.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: y.len(),
                });
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("point {j} has non-finite coordinates")));
            }
            let d = dist(y, first);
            if d > delta * (1.0 + 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "point {j} lies at distance {d} from y0, outside the ball of radius {delta}"
                )));
            }
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i] == points[j] {
                    return Err(Error::InvalidInput(format!("points {i} and {j} coincide")));
                }
            }
        }
        Ok(Self { points, delta })
    }

    /// Maps points `u` of the unit-ball frame to `center + delta * u`.
    pub fn from_normalized(unit: &[Vec<f64>], center: &[f64], delta: f64) -> Result<Self> {
        let pts = unit
            .iter()
            .map(|u| u.iter().zip(center).map(|(a, c)| c + delta * a).collect())
            .collect();
        Self::new(pts, delta)
    }

    pub fn n(&self) -> usize {
        self.points[0].len()
    }

    /// Number of points minus one.
    pub fn p(&self) -> usize {
        self.points.len() - 1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn center(&self) -> &[f64] {
        &self.points[0]
    }

    /// The set `{(y - y0)/delta}` with radius 1.
    pub fn normalized(&self) -> SampleSet {
        let y0 = self.center();
        let points = self
            .points
            .iter()
            .map(|y| y.iter().zip(y0).map(|(a, b)| (a - b) / self.delta).collect())
            .collect();
        SampleSet { points, delta: 1.0 }
    }

    /// Same geometry translated so that `y0 = center`.
    pub fn translated_to(&self, center: &[f64]) -> Result<SampleSet> {
        if center.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: center.len(),
            });
        }
        let y0 = self.center().to_vec();
        let points = self
            .points
            .iter()
            .map(|y| y.iter().zip(&y0).zip(center).map(|((a, b), c)| c + (a - b)).collect())
            .collect();
        SampleSet::new(points, self.delta)
    }

    pub fn to_normalized_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.center()).map(|(a, b)| (a - b) / self.delta).collect()
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatrixKind {
    Lin,
    LinScaled,
    Quad,
    QuadScaled,
    Under,
    UnderScaled,
}

/// Geometry class a set is certified for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PoisednessKind {
    Linear,
    Quadratic,
    Mfn,
}

impl PoisednessKind {
    pub fn check_shape(self, n: usize, p: usize) -> Result<()> {
        let q = quad_q(n);
        let ok = match self {
            PoisednessKind::Linear => p == n,
            PoisednessKind::Quadratic => p == q,
            PoisednessKind::Mfn => n < p && p < q,
        };
        if ok {
            Ok(())
        } else {
            let want = match self {
                PoisednessKind::Linear => format!("p = n = {n}"),
                PoisednessKind::Quadratic => format!("p = q = {q}"),
                PoisednessKind::Mfn => format!("{n} < p < {q}"),
            };
            Err(Error::Shape(format!("{self:?} requires {want}, got p = {p}")))
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PoisednessKind::Linear => "LINEAR",
            PoisednessKind::Quadratic => "QUADRATIC",
            PoisednessKind::Mfn => "MFN",
        }
    }
}

impl MatrixKind {
    fn poisedness(self) -> PoisednessKind {
        match self {
            MatrixKind::Lin | MatrixKind::LinScaled => PoisednessKind::Linear,
            MatrixKind::Quad | MatrixKind::QuadScaled => PoisednessKind::Quadratic,
            MatrixKind::Under | MatrixKind::UnderScaled => PoisednessKind::Mfn,
        }
    }
}

/// Rows `(y^i - y0)^T` (linear kinds) or `phi(y^i - y0)^T` in the
/// affine-free quadratic basis, `i = 1..p`; scaled kinds divide linear
/// columns by `delta` and quadratic columns by `delta^2`.
pub fn build_design_matrix(kind: MatrixKind, set: &SampleSet) -> Result<DMatrix<f64>> {
    let (n, p) = (set.n(), set.p());
    kind.poisedness().check_shape(n, p)?;
    let y0 = set.center();
    let delta = set.delta();
    let scaled = matches!(
        kind,
        MatrixKind::LinScaled | MatrixKind::QuadScaled | MatrixKind::UnderScaled
    );
    let quadratic = matches!(kind, MatrixKind::Quad | MatrixKind::QuadScaled);
    let sel = BasisSelector::new(
        if quadratic { Degree::Quadratic } else { Degree::Linear },
        BasisPart::AffineFree,
    );
    let cols = sel.len(n);
    let mut m = DMatrix::zeros(p, cols);
    for i in 1..=p {
        let s: Vec<f64> = set.points[i].iter().zip(y0).map(|(a, b)| a - b).collect();
        let row = natural_basis(sel, &s);
        for (j, v) in row.into_iter().enumerate() {
            let d = if !scaled {
                1.0
            } else if j < n {
                delta
            } else {
                delta * delta
            };
            m[(i - 1, j)] = v / d;
        }
    }
    Ok(m)
}

/// `M(phi, Y)`: entry `(i, j) = phi_j(y^i)` in absolute coordinates.
pub fn build_m(sel: BasisSelector, set: &SampleSet) -> DMatrix<f64> {
    let cols = sel.len(set.n());
    let rows = set.points.len();
    let mut m = DMatrix::zeros(rows, cols);
    for (i, y) in set.points.iter().enumerate() {
        for (j, v) in natural_basis(sel, y).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

/// `F(phi, Y) = [[M_Q M_Q^T, M_L], [M_L^T, 0]]`.
pub fn build_f(set: &SampleSet) -> DMatrix<f64> {
    let ml = build_m(BasisSelector::linear_part(), set);
    let mq = build_m(BasisSelector::quadratic_part(), set);
    assemble_f(&ml, &mq)
}

fn assemble_f(ml: &DMatrix<f64>, mq: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = ml.nrows();
    let lin = ml.ncols();
    let size = rows + lin;
    let mut f = DMatrix::zeros(size, size);
    f.view_mut((0, 0), (rows, rows)).copy_from(&(mq * mq.transpose()));
    f.view_mut((0, rows), (rows, lin)).copy_from(ml);
    f.view_mut((rows, 0), (lin, rows)).copy_from(&ml.transpose());
    f
}

/// Condition number of `F` built on the normalized set.
pub fn mfn_condition(set: &SampleSet) -> f64 {
    if set.p() < set.n() {
        return f64::INFINITY;
    }
    linalg::condition_number(&build_f(&set.normalized()))
}

/// Poised in the minimum Frobenius norm sense: `F` (on the normalized set)
/// has condition number at most `threshold`.
pub fn mfn_poised(set: &SampleSet, threshold: f64) -> bool {
    mfn_condition(set) <= threshold
}

/// Lagrange polynomials of a set, in absolute and normalized coordinates.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    pub polys: Vec<QuadraticPolynomial>,
    /// `l_j(y0 + delta u)` as polynomials in `u`.
    pub normalized: Vec<QuadraticPolynomial>,
    pub condition: f64,
}

impl LagrangeBasis {
    fn from_normalized(set: &SampleSet, normalized: Vec<QuadraticPolynomial>, condition: f64) -> Result<Self> {
        let polys = normalized
            .iter()
            .map(|l| l.denormalized(set.center(), set.delta()))
            .collect::<Result<_>>()?;
        Ok(Self {
            polys,
            normalized,
            condition,
        })
    }
}

/// Lagrange polynomials for determined interpolation (`p = n` for degree 1,
/// `p = q` for degree 2).
pub fn lagrange_determined(set: &SampleSet, degree: Degree) -> Result<LagrangeBasis> {
    let kind = match degree {
        Degree::Linear => PoisednessKind::Linear,
        Degree::Quadratic => PoisednessKind::Quadratic,
    };
    kind.check_shape(set.n(), set.p())?;
    let unit = set.normalized();
    let m = build_m(BasisSelector::new(degree, BasisPart::Full), &unit);
    let lu = GuardedLu::new(&m, COND_THRESHOLD)?;
    let size = m.nrows();
    let n = set.n();
    let mut normalized = Vec::with_capacity(size);
    for j in 0..size {
        // l_j(y^i) = delta_ij  <=>  M alpha_j = e_j
        let alpha = lu.solve(&unit_vec(size, j))?;
        let poly = match degree {
            Degree::Linear => QuadraticPolynomial::from_linear_coeffs(alpha.as_slice())?,
            Degree::Quadratic => QuadraticPolynomial::from_coeffs(alpha.as_slice(), n)?,
        };
        normalized.push(poly);
    }
    LagrangeBasis::from_normalized(set, normalized, lu.condition)
}

fn unit_vec(len: usize, j: usize) -> DVector<f64> {
    let mut e = DVector::zeros(len);
    e[j] = 1.0;
    e
}

/// Factorization of `F` on the normalized set, shared by every right-hand
/// side of the MFN problems.
pub(crate) struct MfnSystem {
    lu: GuardedLu,
    ml: DMatrix<f64>,
    mq: DMatrix<f64>,
}

impl MfnSystem {
    pub(crate) fn new(set: &SampleSet) -> Result<Self> {
        let (n, p) = (set.n(), set.p());
        if p < n {
            return Err(Error::Shape(format!("F needs p >= n, got n = {n}, p = {p}")));
        }
        let unit = set.normalized();
        let ml = build_m(BasisSelector::linear_part(), &unit);
        let mq = build_m(BasisSelector::quadratic_part(), &unit);
        let lu = GuardedLu::new(&assemble_f(&ml, &mq), COND_THRESHOLD)?;
        Ok(Self { lu, ml, mq })
    }

    pub(crate) fn condition(&self) -> f64 {
        self.lu.condition
    }

    /// Solves `min ||a_Q||^2/2 s.t. M_L a_L + M_Q a_Q = rhs` and returns the
    /// normalized-frame polynomial.
    pub(crate) fn solve_min_frobenius(&self, rhs: &[f64]) -> Result<QuadraticPolynomial> {
        let rows = self.ml.nrows();
        let lin = self.ml.ncols();
        if rhs.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                got: rhs.len(),
            });
        }
        let mut b = DVector::zeros(rows + lin);
        b.rows_mut(0, rows).copy_from_slice(rhs);
        let sol = self.lu.solve(&b)?;
        let w = sol.rows(0, rows);
        let alpha_q = self.mq.transpose() * w;
        let mut alpha: Vec<f64> = sol.rows(rows, lin).iter().copied().collect();
        alpha.extend(alpha_q.iter());
        QuadraticPolynomial::from_coeffs(&alpha, lin - 1)
    }

    /// KKT solve of `min ||M_Q^T lam - phi_Q(u)||^2/2 s.t. M_L^T lam = phi_L(u)`.
    pub(crate) fn lambda_vector(&self, u: &[f64]) -> Result<Vec<f64>> {
        let rows = self.ml.nrows();
        let lin = self.ml.ncols();
        let phi_q = DVector::from_vec(natural_basis(BasisSelector::quadratic_part(), u));
        let phi_l = natural_basis(BasisSelector::linear_part(), u);
        let mut b = DVector::zeros(rows + lin);
        b.rows_mut(0, rows).copy_from(&(&self.mq * phi_q));
        b.rows_mut(rows, lin).copy_from_slice(&phi_l);
        let sol = self.lu.solve(&b)?;
        Ok(sol.rows(0, rows).iter().copied().collect())
    }
}

/// Minimum Frobenius norm Lagrange polynomials, `n < p < q`.
pub fn lagrange_mfn(set: &SampleSet) -> Result<LagrangeBasis> {
    PoisednessKind::Mfn.check_shape(set.n(), set.p())?;
    let sys = MfnSystem::new(set)?;
    let size = set.p() + 1;
    let normalized = (0..size)
        .map(|j| {
            let mut e = vec![0.0; size];
            e[j] = 1.0;
            sys.solve_min_frobenius(&e)
        })
        .collect::<Result<Vec<_>>>()?;
    LagrangeBasis::from_normalized(set, normalized, sys.condition())
}

/// `lambda(x)` of the MFN Λ-poisedness definition.
pub fn mfn_lambda_vector(set: &SampleSet, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != set.n() {
        return Err(Error::DimensionMismatch {
            expected: set.n(),
            got: x.len(),
        });
    }
    let sys = MfnSystem::new(set)?;
    sys.lambda_vector(&set.to_normalized_point(x))
}

pub fn lagrange_for(set: &SampleSet, kind: PoisednessKind) -> Result<LagrangeBasis> {
    match kind {
        PoisednessKind::Linear => lagrange_determined(set, Degree::Linear),
        PoisednessKind::Quadratic => lagrange_determined(set, Degree::Quadratic),
        PoisednessKind::Mfn => lagrange_mfn(set),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PoisednessCertificate {
    pub kind: PoisednessKind,
    pub n: usize,
    pub p: usize,
    pub delta: f64,
    pub lambda: f64,
    pub per_point_max: Vec<f64>,
    /// Points of `B(y0, delta)` attaining each `per_point_max`.
    pub per_point_argmax: Vec<Vec<f64>>,
    /// `||L_L^-1||`, `||L_Q^-1||` or `||L_s^+||` of the scaled matrix.
    pub matrix_norm: f64,
    /// `Λ sqrt(n)`, `4 Λ sqrt((q+1)^3)` or `Λ sqrt(2(n+1)) (p+1)`.
    pub inverse_norm_bound: f64,
    pub satisfied: bool,
    /// Condition estimate of the interpolation system.
    pub condition: f64,
}

/// Theoretical cap on the norm of the scaled-matrix inverse for a
/// Λ-poised set.
pub fn inverse_norm_bound(kind: PoisednessKind, lambda: f64, n: usize, p: usize) -> f64 {
    let q = quad_q(n) as f64;
    match kind {
        PoisednessKind::Linear => lambda * (n as f64).sqrt(),
        PoisednessKind::Quadratic => 4.0 * lambda * (q + 1.0).powi(3).sqrt(),
        PoisednessKind::Mfn => lambda * (2.0 * (n as f64 + 1.0)).sqrt() * (p as f64 + 1.0),
    }
}

/// Norm of the relevant inverse or pseudo-inverse of the scaled matrix.
pub fn scaled_matrix_norm(set: &SampleSet, kind: PoisednessKind) -> Result<f64> {
    let mk = match kind {
        PoisednessKind::Linear => MatrixKind::LinScaled,
        PoisednessKind::Quadratic => MatrixKind::QuadScaled,
        PoisednessKind::Mfn => MatrixKind::UnderScaled,
    };
    Ok(linalg::pinv_norm(&build_design_matrix(mk, set)?))
}

/// Slack for `matrix_norm <= inverse_norm_bound`.
pub const CERT_SLACK: f64 = 1e-9;

pub fn lambda_poisedness(set: &SampleSet, kind: PoisednessKind) -> Result<PoisednessCertificate> {
    lambda_poisedness_with(Execution::default(), set, kind)
}

pub fn lambda_poisedness_with(exec: Execution, set: &SampleSet, kind: PoisednessKind) -> Result<PoisednessCertificate> {
    let basis = lagrange_for(set, kind)?;
    certify(exec, set, kind, &basis)
}

pub(crate) fn certify(
    exec: Execution,
    set: &SampleSet,
    kind: PoisednessKind,
    basis: &LagrangeBasis,
) -> Result<PoisednessCertificate> {
    let n = set.n();
    let origin = vec![0.0; n];
    let maxima = par::map(exec, &basis.normalized, |l| {
        ball::max_abs_on_ball(l, &origin, 1.0, DEFAULT_TOL)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let per_point_max: Vec<f64> = maxima.iter().map(|m| m.0).collect();
    let per_point_argmax = maxima
        .iter()
        .map(|(_, u)| u.iter().zip(set.center()).map(|(a, c)| c + set.delta() * a).collect())
        .collect();
    let lambda = per_point_max.iter().copied().fold(0.0, f64::max);
    let matrix_norm = scaled_matrix_norm(set, kind)?;
    let bound = inverse_norm_bound(kind, lambda, n, set.p());
    Ok(PoisednessCertificate {
        kind,
        n,
        p: set.p(),
        delta: set.delta(),
        lambda,
        per_point_max,
        per_point_argmax,
        matrix_norm,
        inverse_norm_bound: bound,
        satisfied: matrix_norm <= bound + CERT_SLACK,
        condition: basis.condition,
    })
}

/// Both sides of `M(phi_L, Y) = E^{-1} [[1, y0^T], [0, L_s]]`.
pub fn linear_block_factorization(set: &SampleSet) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, p) = (set.n(), set.p());
    let lhs = build_m(BasisSelector::linear_part(), set);
    let mut block = DMatrix::zeros(p + 1, n + 1);
    block[(0, 0)] = 1.0;
    for (k, v) in set.center().iter().enumerate() {
        block[(0, k + 1)] = *v;
    }
    for i in 1..=p {
        for k in 0..n {
            block[(i, k + 1)] = set.points[i][k] - set.center()[k];
        }
    }
    let mut e_inv = DMatrix::identity(p + 1, p + 1);
    for i in 1..=p {
        e_inv[(i, 0)] = 1.0;
    }
    (lhs, e_inv * block)
}

/// Uniform point in the unit ball.
fn random_in_ball(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            let r: f64 = rng.gen::<f64>().powf(1.0 / n as f64);
            return dir.into_iter().map(|v| v * r / norm).collect();
        }
    }
}

const GENERATOR_DRAWS: usize = 100;
const GENERATOR_ITERATIONS: usize = 200;

/// Deterministic Λ-poised set with `y0 = 0`, for the kind's shape `(n, p)`.
///
/// Random points of the ball are drawn until the system is poised, then the
/// point whose Lagrange polynomial attains Λ is repeatedly replaced by that
/// polynomial's maximizer. `y0` is never moved.
pub fn generate_poised_set(
    kind: PoisednessKind,
    n: usize,
    p: usize,
    delta: f64,
    lambda_max: f64,
    seed: u64,
) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    kind.check_shape(n, p)?;
    if !(lambda_max > 1.0) {
        return Err(Error::InvalidInput(format!(
            "lambda_max must exceed 1, got {lambda_max}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = vec![0.0; n];

    let mut unit = None;
    for _ in 0..GENERATOR_DRAWS {
        let mut pts = vec![origin.clone()];
        pts.extend((0..p).map(|_| random_in_ball(&mut rng, n)));
        let candidate = SampleSet::new(pts, 1.0)?;
        if lagrange_for(&candidate, kind).is_ok() {
            unit = Some(candidate);
            break;
        }
    }
    let mut unit = unit.ok_or(Error::NotPoised {
        condition: f64::INFINITY,
        threshold: COND_THRESHOLD,
    })?;

    let mut best_lambda = f64::INFINITY;
    for _ in 0..GENERATOR_ITERATIONS {
        let cert = lambda_poisedness_with(Execution::Sequential, &unit, kind)?;
        best_lambda = best_lambda.min(cert.lambda);
        if cert.lambda <= lambda_max {
            return SampleSet::from_normalized(unit.points(), &origin, delta);
        }
        let (j, _) = cert
            .per_point_max
            .iter()
            .enumerate()
            .skip(1)
            .fold(
                (1, f64::NEG_INFINITY),
                |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc },
            );
        let mut x = cert.per_point_argmax[j].clone();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1.0 {
            x.iter_mut().for_each(|v| *v /= norm);
        }
        let mut pts = unit.points().to_vec();
        pts[j] = x;
        match SampleSet::new(pts, 1.0) {
            Ok(next) if lagrange_for(&next, kind).is_ok() => unit = next,
            _ => break,
        }
    }
    Err(Error::IterationCap { best_lambda })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pts: &[&[f64]], delta: f64) -> SampleSet {
        SampleSet::new(pts.iter().map(|p| p.to_vec()).collect(), delta).unwrap()
    }

    fn simplex() -> SampleSet {
        set(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]], 1.0)
    }

    fn square() -> SampleSet {
        set(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]], 2f64.sqrt())
    }

    #[test]
    fn sample_set_validation() {
        assert!(SampleSet::new(vec![vec![0.0], vec![2.0]], 1.0).is_err());
        assert!(SampleSet::new(vec![vec![0.0], vec![0.5], vec![0.5]], 1.0).is_err());
        assert!(SampleSet::new(vec![vec![0.0], vec![0.5]], 0.0).is_err());
        assert!(SampleSet::new(vec![vec![0.0, 0.0], vec![0.5]], 1.0).is_err());
    }

    #[test]
    fn design_matrices() {
        let lin = build_design_matrix(MatrixKind::Lin, &simplex()).unwrap();
        assert_eq!(lin, DMatrix::identity(2, 2));
        let s2 = set(&[&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0]], 2.0);
        let ls = build_design_matrix(MatrixKind::LinScaled, &s2).unwrap();
        assert_eq!(ls, DMatrix::identity(2, 2));
        let s1 = set(&[&[0.0], &[1.0], &[-1.0]], 1.0);
        let q = build_design_matrix(MatrixKind::Quad, &s1).unwrap();
        assert_eq!(q, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -1.0, 0.5]));
        assert!(build_design_matrix(MatrixKind::Quad, &simplex()).is_err());
    }

    #[test]
    fn m_matrices() {
        let ml = build_m(BasisSelector::linear_part(), &simplex());
        assert_eq!(
            ml,
            DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0])
        );
        let s1 = set(&[&[0.0], &[1.0], &[-1.0]], 1.0);
        let full = build_m(BasisSelector::full_quadratic(), &s1);
        assert_eq!(
            full,
            DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.5, 1.0, -1.0, 0.5])
        );
        let mq = build_m(BasisSelector::quadratic_part(), &simplex());
        assert!(mq.row(0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn f_poisedness() {
        assert!(mfn_poised(&square(), COND_THRESHOLD));
        let collinear = set(&[&[0.0, 0.0], &[0.5, 0.5], &[-0.5, -0.5]], 1.0);
        assert!(!mfn_poised(&collinear, COND_THRESHOLD));
        let big = set(
            &[&[0.0, 0.0], &[10.0, 0.0], &[0.0, 10.0], &[10.0, 10.0]],
            10.0 * 2f64.sqrt(),
        );
        assert_eq!(mfn_poised(&big, COND_THRESHOLD), mfn_poised(&square(), COND_THRESHOLD));
        let f = build_f(&square());
        assert_eq!(f.nrows(), 7);
        assert_eq!(f, f.transpose());
    }

    #[test]
    fn simplex_lagrange() {
        let b = lagrange_determined(&simplex(), Degree::Linear).unwrap();
        let expect = [(1.0, [-1.0, -1.0]), (0.0, [1.0, 0.0]), (0.0, [0.0, 1.0])];
        for (l, (c, g)) in b.polys.iter().zip(expect) {
            assert!((l.constant() - c).abs() < 1e-14);
            assert!((l.gradient()[0] - g[0]).abs() < 1e-14);
            assert!((l.gradient()[1] - g[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn one_dimensional_quadratic_lagrange() {
        let s = set(&[&[0.0], &[1.0], &[-1.0]], 1.0);
        let b = lagrange_determined(&s, Degree::Quadratic).unwrap();
        // 1 - x^2, (x + x^2)/2, (-x + x^2)/2
        let expect = [[1.0, 0.0, -2.0], [0.0, 0.5, 1.0], [0.0, -0.5, 1.0]];
        for (l, e) in b.polys.iter().zip(expect) {
            for (a, b) in l.to_coeffs().iter().zip(e) {
                assert!((a - b).abs() < 1e-14, "{:?}", l.to_coeffs());
            }
        }
    }

    #[test]
    fn mfn_square_lagrange() {
        let b = lagrange_mfn(&square()).unwrap();
        let l3 = b.polys[3].to_coeffs();
        let expect = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        for (a, e) in l3.iter().zip(expect) {
            assert!((a - e).abs() < 1e-12, "{l3:?}");
        }
        for x in [[0.3, -0.2], [1.5, 2.0], [-1.0, 0.7]] {
            let s: f64 = b.polys.iter().map(|l| l.eval(&x).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        for (j, l) in b.polys.iter().enumerate() {
            for (i, y) in square().points().iter().enumerate() {
                let v = l.eval(y).unwrap();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lambda_vector_matches_lagrange() {
        let s = square();
        let b = lagrange_mfn(&s).unwrap();
        for x in [[0.1, 0.2], [0.9, 0.4], [1.0, 1.0]] {
            let lam = mfn_lambda_vector(&s, &x).unwrap();
            for (lj, l) in lam.iter().zip(&b.polys) {
                assert!((lj - l.eval(&x).unwrap()).abs() < 1e-10);
            }
        }
        let lam = mfn_lambda_vector(&s, &[1.0, 0.0]).unwrap();
        assert!((lam[1] - 1.0).abs() < 1e-12 && lam[0].abs() < 1e-12);
    }

    #[test]
    fn lambda_examples() {
        let c = lambda_poisedness(&simplex(), PoisednessKind::Linear).unwrap();
        assert!((c.lambda - (1.0 + 2f64.sqrt())).abs() < 1e-10);
        assert!((c.matrix_norm - 1.0).abs() < 1e-12);
        assert!(c.satisfied);

        let line = set(&[&[0.0], &[1.0]], 1.0);
        let c = lambda_poisedness(&line, PoisednessKind::Linear).unwrap();
        assert!((c.lambda - 2.0).abs() < 1e-12);

        let big = set(&[&[0.0, 0.0], &[10.0, 0.0], &[0.0, 10.0]], 10.0);
        let c10 = lambda_poisedness(&big, PoisednessKind::Linear).unwrap();
        assert!((c10.lambda - (1.0 + 2f64.sqrt())).abs() < 1e-6 * c10.lambda);
    }

    #[test]
    fn collinear_not_poised() {
        let collinear = set(&[&[0.0, 0.0], &[0.5, 0.5], &[-0.5, -0.5]], 1.0);
        assert!(matches!(
            lambda_poisedness(&collinear, PoisednessKind::Linear),
            Err(Error::NotPoised { .. })
        ));
    }

    #[test]
    fn factorization_identity() {
        let s = set(&[&[0.3, -0.1], &[1.0, 0.2], &[0.1, 0.9], &[0.9, 0.8]], 1.2);
        let (lhs, rhs) = linear_block_factorization(&s);
        assert!((lhs - rhs).amax() < 1e-15);
    }

    #[test]
    fn generator_is_deterministic_and_certified() {
        let a = generate_poised_set(PoisednessKind::Mfn, 2, 4, 1.0, 100.0, 1).unwrap();
        let b = generate_poised_set(PoisednessKind::Mfn, 2, 4, 1.0, 100.0, 1).unwrap();
        assert_eq!(a, b);
        let c = lambda_poisedness(&a, PoisednessKind::Mfn).unwrap();
        assert!(c.lambda <= 100.0);
        assert!(matches!(
            generate_poised_set(PoisednessKind::Mfn, 2, 5, 1.0, 100.0, 1),
            Err(Error::Shape(_))
        ));
    }
}
