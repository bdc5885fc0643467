//! Empirical verification of the error bounds.
//!
//! A trial generates a Λ-poised set, fits a model to a test function, and
//! compares the worst observed errors over the ball with the theoretical
//! constants evaluated at the measured Λ. Campaigns run many independent
//! trials and report one CSV row per trial plus a JSON summary.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ball::{self, DEFAULT_TOL};
use crate::bounds::{self, BoundInputs, BoundKind};
use crate::error::{Error, Result};
use crate::geometry::{self, PoisednessKind, SampleSet};
use crate::linalg;
use crate::models::{self, FitKind, RelaxationSpec};
use crate::par::{self, Execution};
use crate::poly::{natural_basis, quad_q, BasisSelector, QuadraticPolynomial};

/// Slack for a margin to count as satisfied.
pub const MARGIN_SLACK: f64 = 1e-8;
/// Slack for theory inequalities `lhs <= rhs`.
pub const THEORY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
enum Shape {
    Quadratic { a: DMatrix<f64>, b: DVector<f64> },
    Quartic,
    Rosenbrock,
}

/// A smooth test function with a Lipschitz constant for its gradient valid
/// on `domain_box`.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub name: String,
    pub n: usize,
    pub lipschitz: f64,
    pub domain_box: Vec<(f64, f64)>,
    shape: Shape,
}

impl TestFunction {
    /// `x -> x^T A x / 2 + b^T x` with `L = ||A||`.
    pub fn quadratic(a: DMatrix<f64>, b: DVector<f64>, domain_box: Vec<(f64, f64)>) -> Result<Self> {
        let n = b.len();
        if a.nrows() != n || a.ncols() != n || domain_box.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.nrows(),
            });
        }
        let a = (&a + a.transpose()) * 0.5;
        Ok(Self {
            name: "quadratic".into(),
            n,
            lipschitz: linalg::spectral_norm(&a),
            domain_box,
            shape: Shape::Quadratic { a, b },
        })
    }

    /// `sum x_i^4` on `[-1, 1]^n`; the Hessian `diag(12 x_i^2)` has norm at
    /// most 12 there.
    pub fn quartic(n: usize) -> Self {
        Self {
            name: "quartic".into(),
            n,
            lipschitz: 12.0,
            domain_box: vec![(-1.0, 1.0); n],
            shape: Shape::Quartic,
        }
    }

    /// Rosenbrock on `[-2, 2]^2`, `L` from a Hessian-norm scan at spacing 1e-3.
    pub fn rosenbrock() -> Self {
        Self {
            name: "rosenbrock".into(),
            n: 2,
            lipschitz: rosenbrock_lipschitz(),
            domain_box: vec![(-2.0, 2.0); 2],
            shape: Shape::Rosenbrock,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Quadratic { a, b } => {
                let v = DVector::from_column_slice(x);
                0.5 * v.dot(&(a * &v)) + b.dot(&v)
            }
            Shape::Quartic => x.iter().map(|v| v.powi(4)).sum(),
            Shape::Rosenbrock => (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        match &self.shape {
            Shape::Quadratic { a, b } => a * DVector::from_column_slice(x) + b,
            Shape::Quartic => DVector::from_iterator(x.len(), x.iter().map(|v| 4.0 * v.powi(3))),
            Shape::Rosenbrock => {
                let t = x[1] - x[0] * x[0];
                DVector::from_vec(vec![-2.0 * (1.0 - x[0]) - 400.0 * x[0] * t, 200.0 * t])
            }
        }
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.shape {
            Shape::Quadratic { a, .. } => a.clone(),
            Shape::Quartic => DMatrix::from_diagonal(&DVector::from_iterator(x.len(), x.iter().map(|v| 12.0 * v * v))),
            Shape::Rosenbrock => {
                let (h11, h12) = rosenbrock_hessian_entries(x[0], x[1]);
                DMatrix::from_row_slice(2, 2, &[h11, h12, h12, 200.0])
            }
        }
    }

    /// The function itself as a polynomial, when it is quadratic.
    pub fn as_quadratic(&self) -> Option<QuadraticPolynomial> {
        match &self.shape {
            Shape::Quadratic { a, b } => QuadraticPolynomial::new(0.0, b.clone(), a.clone()).ok(),
            _ => None,
        }
    }

    /// Largest `||grad f(x) - grad f(y)|| / (L ||x - y||)` over random pairs
    /// in the box.
    pub fn lipschitz_spot_check(&self, pairs: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..pairs {
            let x: Vec<f64> = self.domain_box.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect();
            let y: Vec<f64> = self.domain_box.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect();
            let d: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if d > 0.0 {
                let g = (self.gradient(&x) - self.gradient(&y)).norm();
                worst = worst.max(g / (self.lipschitz * d));
            }
        }
        worst
    }
}

fn rosenbrock_hessian_entries(x: f64, y: f64) -> (f64, f64) {
    (2.0 - 400.0 * y + 1200.0 * x * x, -400.0 * x)
}

/// Max over the lattice of `[-2, 2]^2` with spacing 1e-3 of the spectral norm
/// of the Rosenbrock Hessian.
fn rosenbrock_lipschitz() -> f64 {
    static L: OnceLock<f64> = OnceLock::new();
    *L.get_or_init(|| {
        let steps = 4000usize;
        let rows = par::map_range(Execution::default(), steps + 1, |i| {
            let x = -2.0 + 4.0 * i as f64 / steps as f64;
            let mut best = 0.0f64;
            for j in 0..=steps {
                let y = -2.0 + 4.0 * j as f64 / steps as f64;
                let (a, b) = rosenbrock_hessian_entries(x, y);
                let d = 200.0;
                let mid = 0.5 * (a + d);
                let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
                best = best.max(mid.abs() + rad);
            }
            best
        });
        rows.into_iter().fold(0.0, f64::max)
    })
}

pub fn builtin_names() -> &'static [&'static str] {
    &["quadratic", "quartic", "rosenbrock"]
}

/// Looks up a built-in test function in dimension `n`.
///
/// `quadratic` uses `A = tridiag(-0.5, 2, -0.5)`, `b = (0.5, -0.5, ...)` on
/// `[-2, 2]^n`.
pub fn builtin_function(name: &str, n: usize) -> Result<TestFunction> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    match name {
        "quadratic" => {
            let a = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    2.0
                } else if i.abs_diff(j) == 1 {
                    -0.5
                } else {
                    0.0
                }
            });
            let b = DVector::from_fn(n, |i, _| if i % 2 == 0 { 0.5 } else { -0.5 });
            TestFunction::quadratic(a, b, vec![(-2.0, 2.0); n])
        }
        "quartic" => Ok(TestFunction::quartic(n)),
        "rosenbrock" if n == 2 => Ok(TestFunction::rosenbrock()),
        "rosenbrock" => Err(Error::InvalidInput(format!("rosenbrock is defined for n = 2, got {n}"))),
        other => Err(Error::UnknownFunction(other.to_string())),
    }
}

fn default_lambda_max() -> f64 {
    10.0
}

fn default_sample_count() -> usize {
    1000
}

/// One trial. `p` defaults to `n` (LIN_DET), `q` (QUAD_DET) or `2n` (MFN);
/// `delta_max` defaults to `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub function: String,
    pub kind: FitKind,
    pub n: usize,
    #[serde(default)]
    pub p: Option<usize>,
    pub delta: f64,
    #[serde(default)]
    pub delta_max: Option<f64>,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
}

impl TrialConfig {
    pub fn new(function: &str, kind: FitKind, n: usize, delta: f64, seed: u64) -> Self {
        Self {
            function: function.into(),
            kind,
            n,
            p: None,
            delta,
            delta_max: None,
            kappa: 0.0,
            lambda_max: default_lambda_max(),
            seed,
            sample_count: default_sample_count(),
        }
    }

    pub fn p(&self) -> usize {
        self.p.unwrap_or(match self.kind {
            FitKind::LinDet => self.n,
            FitKind::QuadDet => quad_q(self.n),
            FitKind::Mfn => 2 * self.n,
        })
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max.unwrap_or(self.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub lambda: f64,
    #[serde(rename = "C_f")]
    pub c_f: f64,
    #[serde(rename = "C_g")]
    pub c_g: f64,
    #[serde(rename = "C_H")]
    pub c_h: f64,
    /// `max |f - m| / delta^2`.
    pub emp_f: f64,
    /// `max ||grad f - grad m|| / delta`.
    pub emp_g: f64,
    /// `||hess m||`.
    #[serde(rename = "emp_H")]
    pub emp_h: f64,
    pub margin_f: f64,
    pub margin_g: f64,
    #[serde(rename = "margin_H")]
    pub margin_h: f64,
    pub pass: bool,
}

impl TrialResult {
    /// Raw worst value error `max |f - m|`.
    pub fn raw_value_error(&self, delta: f64) -> f64 {
        self.emp_f * delta * delta
    }

    /// Raw worst gradient error `max ||grad f - grad m||`.
    pub fn raw_gradient_error(&self, delta: f64) -> f64 {
        self.emp_g * delta
    }
}

fn margin(emp: f64, bound: f64) -> f64 {
    if emp == 0.0 {
        0.0
    } else if bound == 0.0 {
        f64::INFINITY
    } else {
        emp / bound
    }
}

/// Radical inverse of `index` in `base`.
fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// First `count` Halton points of the cube `[-1, 1]^n` that fall in the unit
/// ball.
pub fn halton_ball(n: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(n <= PRIMES.len(), "halton_ball supports n <= {}", PRIMES.len());
    let mut out = Vec::with_capacity(count);
    let mut index = 1u64;
    while out.len() < count {
        let x: Vec<f64> = (0..n).map(|d| 2.0 * halton(index, PRIMES[d]) - 1.0).collect();
        if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            out.push(x);
        }
        index += 1;
    }
    out
}

/// `y0` for a trial: a seed-dependent point of the central half of the box,
/// pulled further in if the ball would leave the box.
fn trial_center(f: &TestFunction, delta: f64, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0ff_ee00_d1ce);
    f.domain_box
        .iter()
        .map(|&(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            if delta > half {
                return Err(Error::Domain(format!(
                    "ball of radius {delta} does not fit in [{lo}, {hi}]"
                )));
            }
            let reach = (half - delta).min(0.5 * half);
            let u: f64 = rng.gen_range(-1.0..=1.0);
            Ok(mid + u * reach)
        })
        .collect()
}

fn bound_kind(kind: FitKind) -> BoundKind {
    match kind {
        FitKind::LinDet => BoundKind::LinDet,
        FitKind::QuadDet => BoundKind::QuadDet,
        FitKind::Mfn => BoundKind::Mfn,
    }
}

/// Everything a trial builds, for callers that need more than the summary.
#[derive(Debug, Clone)]
pub struct TrialArtifacts {
    pub set: SampleSet,
    pub model: QuadraticPolynomial,
    pub result: TrialResult,
}

pub fn run_trial(cfg: &TrialConfig) -> Result<TrialResult> {
    run_trial_detailed(cfg).map(|a| a.result)
}

pub fn run_trial_detailed(cfg: &TrialConfig) -> Result<TrialArtifacts> {
    let f = builtin_function(&cfg.function, cfg.n)?;
    let (n, p, delta) = (cfg.n, cfg.p(), cfg.delta);
    if !(delta > 0.0) || !(cfg.delta_max() >= delta) {
        return Err(Error::InvalidInput(format!(
            "need 0 < delta <= delta_max, got {delta} and {}",
            cfg.delta_max()
        )));
    }
    let pk = cfg.kind.poisedness();
    pk.check_shape(n, p)?;
    let center = trial_center(&f, delta, cfg.seed)?;
    let unit = geometry::generate_poised_set(pk, n, p, 1.0, cfg.lambda_max, cfg.seed)?;
    let set = SampleSet::from_normalized(unit.points(), &center, delta)?;

    let basis = geometry::lagrange_for(&set, pk)?;
    let cert = geometry::certify(Execution::Sequential, &set, pk, &basis)?;
    let values: Vec<f64> = set.points().iter().map(|y| f.value(y)).collect();
    let fit = if cfg.kappa > 0.0 {
        let spec = RelaxationSpec {
            kappa: cfg.kappa,
            gamma: None,
            noise_seed: Some(cfg.seed),
        };
        models::fit_relaxed(cfg.kind, &set, &values, &spec)?
    } else {
        models::fit_model(cfg.kind, &set, &values)?
    };
    let model = fit.model;

    let mut inputs = BoundInputs::new(f.lipschitz, cfg.kappa, cert.lambda, n, p, delta);
    inputs.delta_max = Some(cfg.delta_max());
    let report = bounds::error_bounds(bound_kind(cfg.kind), &inputs)?;

    let (err_f, err_g) = probe_errors(&f, &model, &set, cfg.sample_count)?;
    let emp_f = err_f / (delta * delta);
    let emp_g = err_g / delta;
    let emp_h = model.hessian_norm();
    let margin_f = margin(emp_f, report.c_f);
    let margin_g = margin(emp_g, report.c_g);
    let margin_h = margin(emp_h, report.c_h);
    let pass = [margin_f, margin_g, margin_h].iter().all(|m| *m <= 1.0 + MARGIN_SLACK);
    let result = TrialResult {
        lambda: cert.lambda,
        c_f: report.c_f,
        c_g: report.c_g,
        c_h: report.c_h,
        emp_f,
        emp_g,
        emp_h,
        margin_f,
        margin_g,
        margin_h,
        pass,
    };
    Ok(TrialArtifacts { set, model, result })
}

/// Worst value and gradient errors over probes of `B(y0, delta)`: quasi-random
/// points, the centre, the axis extremes, the sample points and, for
/// quadratic `f`, the exact maximizers of both errors.
fn probe_errors(f: &TestFunction, m: &QuadraticPolynomial, set: &SampleSet, count: usize) -> Result<(f64, f64)> {
    let (n, delta) = (set.n(), set.delta());
    let y0 = set.center().to_vec();
    let mut probes: Vec<Vec<f64>> = set.points().to_vec();
    for i in 0..n {
        for s in [-1.0, 1.0] {
            let mut x = y0.clone();
            x[i] += s * delta;
            probes.push(x);
        }
    }
    probes.extend(
        halton_ball(n, count)
            .into_iter()
            .map(|u| u.iter().zip(&y0).map(|(a, c)| c + delta * a).collect()),
    );
    if let Some(fq) = f.as_quadratic() {
        let err = fq.add_scaled(-1.0, m)?;
        probes.push(ball::max_abs_on_ball(&err, &y0, delta, DEFAULT_TOL)?.1);
        // ||grad e(y0 + s)||^2 = ||a + H s||^2 with a = grad e(y0)
        let a = err.grad(&y0)?;
        let h = err.hessian();
        let sq = QuadraticPolynomial::new(a.dot(&a), h.transpose() * &a * 2.0, h.transpose() * h * 2.0)?;
        let (_, s) = ball::max_abs_on_ball(&sq, &vec![0.0; n], delta, DEFAULT_TOL)?;
        probes.push(s.iter().zip(&y0).map(|(d, c)| c + d).collect());
    }
    let mut err_f = 0.0f64;
    let mut err_g = 0.0f64;
    for x in &probes {
        err_f = err_f.max((f.value(x) - m.eval(x)?).abs());
        err_g = err_g.max((f.gradient(x) - m.grad(x)?).norm());
    }
    Ok((err_f, err_g))
}

/// One evaluated inequality `lhs <= rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl InequalityCheck {
    fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            pass: lhs <= rhs + THEORY_SLACK,
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Evaluates every inequality that applies to a set certified for `kind`,
/// using measured Λ and `delta_max = delta`.
pub fn check_theory(set: &SampleSet, kind: PoisednessKind) -> Result<Vec<InequalityCheck>> {
    let (n, p, delta) = (set.n(), set.p(), set.delta());
    let q = quad_q(n);
    let basis = geometry::lagrange_for(set, kind)?;
    let cert = geometry::certify(Execution::Sequential, set, kind, &basis)?;
    let lambda = cert.lambda;
    let origin = vec![0.0; n];
    let mut out = Vec::new();

    let form_factor = match kind {
        PoisednessKind::Linear => 1.0,
        _ => 0.25,
    };
    let form_name = match kind {
        PoisednessKind::Linear => "linear_form_lower_bound",
        _ => "quadratic_form_lower_bound",
    };
    match kind {
        PoisednessKind::Linear => out.push(InequalityCheck::new(
            "linear_inverse_norm",
            cert.matrix_norm,
            cert.inverse_norm_bound,
        )),
        PoisednessKind::Quadratic => out.push(InequalityCheck::new(
            "quadratic_inverse_norm",
            cert.matrix_norm,
            cert.inverse_norm_bound,
        )),
        PoisednessKind::Mfn => out.push(InequalityCheck::new(
            "underdetermined_pinv_norm",
            cert.matrix_norm,
            cert.inverse_norm_bound,
        )),
    }
    // A scaled Lagrange polynomial with coefficient vector v satisfies
    // factor * ||v||_inf <= max_B |l_j|.
    for (j, (l, max)) in basis.normalized.iter().zip(&cert.per_point_max).enumerate() {
        let coeffs = l.to_coeffs();
        let v: &[f64] = if kind == PoisednessKind::Linear {
            &coeffs[..=n]
        } else {
            &coeffs
        };
        out.push(InequalityCheck::new(
            format!("{form_name}[{j}]"),
            form_factor * inf_norm(v),
            *max,
        ));
    }

    if kind == PoisednessKind::Mfn {
        let bound = bounds::lagrange_hessian_bound(lambda, q, delta, delta)?;
        for (j, l) in basis.polys.iter().enumerate() {
            out.push(InequalityCheck::new(
                format!("lagrange_hessian[{j}]"),
                l.hessian_norm(),
                bound,
            ));
        }
        let unit = set.normalized();
        let (lhs, rhs) = geometry::linear_block_factorization(&unit);
        out.push(InequalityCheck::new(
            "linear_block_factorization",
            (lhs - rhs).amax(),
            1e-12,
        ));

        // Q = [[1, 0], [0, L_s_hat]], top singular direction of Q^{+T}.
        let ls = geometry::build_design_matrix(geometry::MatrixKind::UnderScaled, set)?;
        let mut qm = DMatrix::zeros(p + 1, n + 1);
        qm[(0, 0)] = 1.0;
        qm.view_mut((1, 1), (p, n)).copy_from(&ls);
        let pinv = qm
            .clone()
            .pseudo_inverse(1e-14)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let pinv_t = pinv.transpose();
        let svd = pinv_t.clone().svd(false, true);
        let (imax, smax) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, (i, &s)| if s > a.1 { (i, s) } else { a });
        let v_t = svd.v_t.as_ref().expect("requested V^T");
        let vbar: Vec<f64> = v_t.row(imax).iter().copied().collect();
        let affine = QuadraticPolynomial::from_linear_coeffs(&vbar)?;
        let (best, xbar) = ball::max_abs_on_ball(&affine, &origin, 1.0, DEFAULT_TOL)?;
        out.push(InequalityCheck::new(
            "unit_form_lower_bound",
            1.0 / ((n + 1) as f64).sqrt(),
            best,
        ));
        let phi = DVector::from_vec(natural_basis(BasisSelector::linear_part(), &xbar));
        let image = (&pinv_t * &phi).norm();
        out.push(InequalityCheck::new(
            "pinv_singular_vector",
            best * smax,
            image * (1.0 + 1e-12),
        ));
        out.push(InequalityCheck::new(
            "pinv_image_bound",
            image,
            lambda * 2f64.sqrt() * (p as f64 + 1.0),
        ));
        out.push(InequalityCheck::new(
            "pinv_block_norm",
            cert.matrix_norm,
            smax.max(1.0) * (1.0 + 1e-12),
        ));
    }
    Ok(out)
}

/// `max_{B(0,1)} |v^T phi(x)|` for a coefficient vector over the full
/// quadratic basis (length `q + 1`) or the linear basis (length `n + 1`).
pub fn basis_form_max(v: &[f64], n: usize) -> Result<f64> {
    let poly = if v.len() == n + 1 {
        QuadraticPolynomial::from_linear_coeffs(v)?
    } else {
        QuadraticPolynomial::from_coeffs(v, n)?
    };
    Ok(ball::max_abs_on_ball(&poly, &vec![0.0; n], 1.0, DEFAULT_TOL)?.0)
}

/// Outcome of one campaign trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial_id: usize,
    pub config: TrialConfig,
    pub result: std::result::Result<TrialResult, String>,
}

#[derive(Debug, Clone, Default)]
pub struct CampaignReport {
    pub outcomes: Vec<TrialOutcome>,
}

pub const CSV_COLUMNS: [&str; 20] = [
    "trial_id",
    "function",
    "kind",
    "n",
    "p",
    "delta",
    "delta_max",
    "kappa",
    "seed",
    "lambda",
    "C_f",
    "C_g",
    "C_H",
    "emp_f",
    "emp_g",
    "emp_H",
    "margin_f",
    "margin_g",
    "margin_H",
    "pass",
];

pub fn run_campaign(configs: &[TrialConfig], exec: Execution) -> CampaignReport {
    run_campaign_with_progress(configs, exec, |_| {})
}

/// Runs every trial (in parallel under [`Execution::Parallel`]); failures are
/// recorded per trial. Outcomes are ordered by trial index.
pub fn run_campaign_with_progress<P>(configs: &[TrialConfig], exec: Execution, progress: P) -> CampaignReport
where
    P: Fn(&TrialOutcome) + Sync + Send,
{
    let outcomes = par::map_range(exec, configs.len(), |i| {
        let outcome = TrialOutcome {
            trial_id: i,
            config: configs[i].clone(),
            result: run_trial(&configs[i]).map_err(|e| e.to_string()),
        };
        progress(&outcome);
        outcome
    });
    CampaignReport { outcomes }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Quantiles {
    pub min: f64,
    pub p50: f64,
    pub p90: f64,
    pub max: f64,
}

impl Quantiles {
    fn of(mut v: Vec<f64>) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let at = |q: f64| v[((v.len() - 1) as f64 * q).round() as usize];
        Some(Self {
            min: v[0],
            p50: at(0.5),
            p90: at(0.9),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KindSummary {
    pub trials: usize,
    pub passed: usize,
    pub failed_bounds: usize,
    pub errors: usize,
    pub margin_f: Option<Quantiles>,
    pub margin_g: Option<Quantiles>,
    #[serde(rename = "margin_H")]
    pub margin_h: Option<Quantiles>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CampaignSummary {
    pub trials: usize,
    pub passed: usize,
    pub failed_bounds: usize,
    pub errors: Vec<TrialError>,
    pub per_kind: BTreeMap<String, KindSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrialError {
    pub trial_id: usize,
    pub message: String,
}

impl CampaignReport {
    pub fn results(&self) -> impl Iterator<Item = (&TrialConfig, &TrialResult)> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok().map(|r| (&o.config, r)))
    }

    pub fn summary(&self) -> CampaignSummary {
        let mut per_kind: BTreeMap<String, Vec<&TrialOutcome>> = BTreeMap::new();
        for o in &self.outcomes {
            per_kind.entry(o.config.kind.as_str().to_string()).or_default().push(o);
        }
        let summarize = |os: &[&TrialOutcome]| {
            let ok: Vec<&TrialResult> = os.iter().filter_map(|o| o.result.as_ref().ok()).collect();
            KindSummary {
                trials: os.len(),
                passed: ok.iter().filter(|r| r.pass).count(),
                failed_bounds: ok.iter().filter(|r| !r.pass).count(),
                errors: os.len() - ok.len(),
                margin_f: Quantiles::of(ok.iter().map(|r| r.margin_f).collect()),
                margin_g: Quantiles::of(ok.iter().map(|r| r.margin_g).collect()),
                margin_h: Quantiles::of(ok.iter().map(|r| r.margin_h).collect()),
            }
        };
        let ok: Vec<&TrialResult> = self.results().map(|(_, r)| r).collect();
        CampaignSummary {
            trials: self.outcomes.len(),
            passed: ok.iter().filter(|r| r.pass).count(),
            failed_bounds: ok.iter().filter(|r| !r.pass).count(),
            errors: self
                .outcomes
                .iter()
                .filter_map(|o| {
                    o.result.as_ref().err().map(|m| TrialError {
                        trial_id: o.trial_id,
                        message: m.clone(),
                    })
                })
                .collect(),
            per_kind: per_kind.iter().map(|(k, os)| (k.clone(), summarize(os))).collect(),
        }
    }

    /// One row per trial in [`CSV_COLUMNS`] order; failed trials carry
    /// `NaN` results and `pass = false`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for o in &self.outcomes {
            let c = &o.config;
            let mut row = vec![
                o.trial_id.to_string(),
                c.function.clone(),
                c.kind.as_str().to_string(),
                c.n.to_string(),
                c.p().to_string(),
                c.delta.to_string(),
                c.delta_max().to_string(),
                c.kappa.to_string(),
                c.seed.to_string(),
            ];
            match &o.result {
                Ok(r) => {
                    row.extend(
                        [
                            r.lambda, r.c_f, r.c_g, r.c_h, r.emp_f, r.emp_g, r.emp_h, r.margin_f, r.margin_g,
                            r.margin_h,
                        ]
                        .iter()
                        .map(|v| v.to_string()),
                    );
                    row.push(r.pass.to_string());
                }
                Err(_) => {
                    row.extend(std::iter::repeat_n("NaN".to_string(), 10));
                    row.push("false".into());
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Expands a campaign config: a flat object whose values may be arrays
/// (cartesian product over every array-valued field), or a list of such
/// objects.
pub fn parse_campaign_config(json: &str) -> Result<Vec<TrialConfig>> {
    let value: serde_json::Value = serde_json::from_str(json)?;
    let objects = match value {
        serde_json::Value::Array(items) => items,
        obj @ serde_json::Value::Object(_) => vec![obj],
        _ => {
            return Err(Error::InvalidInput(
                "campaign config must be an object or an array".into(),
            ))
        }
    };
    let mut out = Vec::new();
    for obj in objects {
        let map = obj
            .as_object()
            .ok_or_else(|| Error::InvalidInput("every campaign entry must be an object".into()))?;
        let mut partial: Vec<serde_json::Map<String, serde_json::Value>> = vec![serde_json::Map::new()];
        for (key, v) in map {
            let choices = match v {
                serde_json::Value::Array(a) => a.clone(),
                other => vec![other.clone()],
            };
            let mut next = Vec::with_capacity(partial.len() * choices.len());
            for base in &partial {
                for c in &choices {
                    let mut m = base.clone();
                    m.insert(key.clone(), c.clone());
                    next.push(m);
                }
            }
            partial = next;
        }
        for m in partial {
            out.push(serde_json::from_value(serde_json::Value::Object(m))?);
        }
    }
    Ok(out)
}

/// Empirical convergence order across a δ sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingGroup {
    pub function: String,
    pub kind: FitKind,
    pub seed: u64,
    pub deltas: Vec<f64>,
    /// Reduction of the raw gradient error per halving of δ.
    pub gradient_ratio: f64,
    /// Reduction of the raw value error per halving of δ.
    pub value_ratio: f64,
}

/// Groups successful trials by everything but δ and fits the per-halving
/// reduction factor of the raw errors (log-log least squares slope).
pub fn scaling_groups(report: &CampaignReport) -> Vec<ScalingGroup> {
    type Key = (String, FitKind, usize, usize, u64, u64);
    let mut groups: BTreeMap<Key, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for (c, r) in report.results() {
        let key: Key = (c.function.clone(), c.kind, c.n, c.p(), c.kappa.to_bits(), c.seed);
        groups
            .entry(key)
            .or_default()
            .push((c.delta, r.raw_gradient_error(c.delta), r.raw_value_error(c.delta)));
    }
    let slope = |pts: &[(f64, f64)]| -> f64 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    groups
        .into_iter()
        .filter_map(|(key, mut rows)| {
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            rows.dedup_by(|a, b| a.0 == b.0);
            if rows.len() < 2 || rows.iter().any(|r| r.1 <= 0.0 || r.2 <= 0.0) {
                return None;
            }
            let g: Vec<(f64, f64)> = rows.iter().map(|r| (r.0.ln(), r.1.ln())).collect();
            let v: Vec<(f64, f64)> = rows.iter().map(|r| (r.0.ln(), r.2.ln())).collect();
            Some(ScalingGroup {
                function: key.0,
                kind: key.1,
                seed: key.4,
                deltas: rows.iter().map(|r| r.0).collect(),
                gradient_ratio: 2f64.powf(slope(&g)),
                value_ratio: 2f64.powf(slope(&v)),
            })
        })
        .collect()
}
