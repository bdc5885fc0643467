//! Closed-form error-bound constants.
//!
//! Every bound has the form `|f - m| <= C_f delta^2`,
//! `||grad f - grad m|| <= C_g delta`, `||hess m|| <= C_H`.
//! [`error_bounds`] composes the constants from the individual geometry and
//! Hessian estimates; [`table_row`] evaluates the same quantities from the
//! fully substituted closed forms, so the two can be checked against each
//! other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PoisednessKind;
use crate::poly::quad_q;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundKind {
    LinDet,
    QuadDet,
    /// Generic underdetermined quadratic with supplied `kappa_s`, `kappa_H`.
    Under,
    Mfn,
}

impl std::str::FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "LIN_DET" => Ok(BoundKind::LinDet),
            "QUAD_DET" => Ok(BoundKind::QuadDet),
            "UNDER" => Ok(BoundKind::Under),
            "MFN" => Ok(BoundKind::Mfn),
            other => Err(Error::InvalidInput(format!("unknown bound kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Lipschitz constant of the gradient of `f`.
    #[serde(rename = "L")]
    pub lipschitz: f64,
    /// Relaxation constant of the interpolation conditions.
    pub kappa: f64,
    pub lambda: f64,
    pub kappa_h: Option<f64>,
    pub kappa_s: Option<f64>,
    pub kappa_l: Option<f64>,
    pub kappa_q: Option<f64>,
    pub n: usize,
    pub p: usize,
    /// Defaults to `(n^2 + 3n)/2`.
    pub q: Option<usize>,
    pub delta: f64,
    /// Defaults to `delta`.
    pub delta_max: Option<f64>,
}

impl BoundInputs {
    pub fn new(lipschitz: f64, kappa: f64, lambda: f64, n: usize, p: usize, delta: f64) -> Self {
        Self {
            lipschitz,
            kappa,
            lambda,
            kappa_h: None,
            kappa_s: None,
            kappa_l: None,
            kappa_q: None,
            n,
            p,
            q: None,
            delta,
            delta_max: None,
        }
    }

    pub fn q(&self) -> usize {
        self.q.unwrap_or_else(|| quad_q(self.n))
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max.unwrap_or(self.delta)
    }

    fn validate(&self, kind: BoundKind) -> Result<()> {
        let nonneg = [("L", self.lipschitz), ("kappa", self.kappa)];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be a nonnegative number, got {v}"
                )));
            }
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        if !(self.delta > 0.0) || !(self.delta_max() >= self.delta) {
            return Err(Error::InvalidInput(format!(
                "need 0 < delta <= delta_max, got delta = {}, delta_max = {}",
                self.delta,
                self.delta_max()
            )));
        }
        if matches!(kind, BoundKind::QuadDet | BoundKind::Under | BoundKind::Mfn) && self.q() != quad_q(self.n) {
            return Err(Error::Shape(format!(
                "q = {} but (n^2+3n)/2 = {}",
                self.q(),
                quad_q(self.n)
            )));
        }
        let shape = match kind {
            BoundKind::LinDet => PoisednessKind::Linear,
            BoundKind::QuadDet => PoisednessKind::Quadratic,
            BoundKind::Under | BoundKind::Mfn => PoisednessKind::Mfn,
        };
        shape.check_shape(self.n, self.p)
    }

    fn lambda_checked(&self) -> Result<f64> {
        if self.lambda > 0.0 && self.lambda.is_finite() {
            Ok(self.lambda)
        } else {
            Err(Error::MissingConstant(
                "lambda (positive) is required to derive geometry constants",
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub c_f: String,
    pub c_g: String,
    pub c_h: String,
    /// "raw" when user-supplied constants were used, "lambda-derived" otherwise.
    pub mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    #[serde(rename = "C_f")]
    pub c_f: f64,
    #[serde(rename = "C_g")]
    pub c_g: f64,
    #[serde(rename = "C_H")]
    pub c_h: f64,
    pub provenance: Provenance,
}

/// `min{1, 1/delta_max, 1/delta_max^2}`.
pub fn c_delta_max(delta_max: f64) -> Result<f64> {
    if !(delta_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "delta_max must be positive, got {delta_max}"
        )));
    }
    Ok(1.0f64.min(1.0 / delta_max).min(1.0 / (delta_max * delta_max)))
}

/// Geometry constant implied by Λ-poisedness: `kappa_L = Λ sqrt(n)`,
/// `kappa_Q = 4 Λ sqrt((q+1)^3)`, `kappa_s = Λ sqrt(2(n+1)) (p+1)`.
pub fn constants_from_lambda(kind: PoisednessKind, lambda: f64, n: usize, p: usize, q: usize) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    if q != quad_q(n) && kind != PoisednessKind::Linear {
        return Err(Error::Shape(format!("q = {q} but (n^2+3n)/2 = {}", quad_q(n))));
    }
    kind.check_shape(n, p)?;
    let (nf, pf, qf) = (n as f64, p as f64, q as f64);
    Ok(match kind {
        PoisednessKind::Linear => lambda * nf.sqrt(),
        PoisednessKind::Quadratic => 4.0 * lambda * (qf + 1.0).powi(3).sqrt(),
        PoisednessKind::Mfn => lambda * (2.0 * (nf + 1.0)).sqrt() * (pf + 1.0),
    })
}

/// Hessian bound of a (relaxed) MFN model:
/// `(kappa + L/2) 4 Λ (p+1) sqrt(2(q+1)) / c(delta_max)^2`.
pub fn hessian_bound_mfn(lipschitz: f64, kappa: f64, lambda: f64, p: usize, q: usize, delta_max: f64) -> Result<f64> {
    let c = c_delta_max(delta_max)?;
    Ok((kappa + 0.5 * lipschitz) * 4.0 * lambda * (p as f64 + 1.0) * (2.0 * (q as f64 + 1.0)).sqrt() / (c * c))
}

/// Per-Lagrange-polynomial Hessian bound
/// `sqrt(2(q+1)) 4 Λ / (delta^2 c(delta_max)^2)`.
pub fn lagrange_hessian_bound(lambda: f64, q: usize, delta: f64, delta_max: f64) -> Result<f64> {
    let c = c_delta_max(delta_max)?;
    Ok((2.0 * (q as f64 + 1.0)).sqrt() * 4.0 * lambda / (delta * delta * c * c))
}

/// Underdetermined bounds for given `kappa_s` and `kappa_H`.
fn under_constants(l: f64, kappa: f64, kappa_s: f64, kappa_h: f64, p: usize) -> (f64, f64, f64) {
    let inner = 2.0 * kappa_s * (p as f64).sqrt() * (l + kappa + 0.75 * kappa_h);
    let c_g = inner;
    let c_f = 0.5 * (l + kappa_h) + kappa + inner;
    (c_f, c_g, kappa_h)
}

fn pick(raw: Option<f64>, derived: impl FnOnce() -> Result<f64>) -> Result<(f64, bool)> {
    match raw {
        Some(v) if v >= 0.0 && v.is_finite() => Ok((v, true)),
        Some(v) => Err(Error::InvalidInput(format!(
            "geometry constants must be nonnegative, got {v}"
        ))),
        None => Ok((derived()?, false)),
    }
}

fn mode(raw: bool) -> String {
    if raw { "raw" } else { "lambda-derived" }.to_string()
}

/// Composes the bound constants for `kind` from the geometry constants
/// (supplied, or derived from Λ) and, for MFN, the Hessian bound.
pub fn error_bounds(kind: BoundKind, inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate(kind)?;
    let (l, kappa, n, p, q) = (inputs.lipschitz, inputs.kappa, inputs.n, inputs.p, inputs.q());
    let report = match kind {
        BoundKind::LinDet => {
            let (kappa_l, raw) = pick(inputs.kappa_l, || {
                constants_from_lambda(PoisednessKind::Linear, inputs.lambda_checked()?, n, p, q)
            })?;
            let geo = (0.5 * l + 2.0 * kappa) * kappa_l * (n as f64).sqrt();
            BoundReport {
                kind,
                c_f: 0.5 * l + kappa + geo,
                c_g: l + geo,
                c_h: 0.0,
                provenance: Provenance {
                    c_f: "linear determined value bound: L/2 + kappa + (L/2 + 2 kappa) kappa_L sqrt(n)".into(),
                    c_g: "linear determined gradient bound: L + (L/2 + 2 kappa) kappa_L sqrt(n)".into(),
                    c_h: "linear model: Hessian is zero".into(),
                    mode: mode(raw),
                },
            }
        }
        BoundKind::QuadDet => {
            let (kappa_q, raw) = pick(inputs.kappa_q, || {
                constants_from_lambda(PoisednessKind::Quadratic, inputs.lambda_checked()?, n, p, q)
            })?;
            let qs = (q as f64).sqrt();
            let s2 = 2f64.sqrt();
            BoundReport {
                kind,
                c_f: 0.5 * l + kappa + kappa_q * qs * (2.0 + 3.0 * s2) * (kappa + l),
                c_g: 2.0 * kappa_q * qs * (1.0 + s2) * (kappa + l),
                c_h: 2.0 * kappa_q * (2.0 * q as f64).sqrt() * (kappa + l),
                provenance: Provenance {
                    c_f: "quadratic determined value bound: L/2 + kappa + kappa_Q sqrt(q) (2 + 3 sqrt2)(kappa + L)"
                        .into(),
                    c_g: "quadratic determined gradient bound: 2 kappa_Q sqrt(q) (1 + sqrt2)(kappa + L)".into(),
                    c_h: "quadratic determined Hessian bound: 2 kappa_Q sqrt(2q) (kappa + L)".into(),
                    mode: mode(raw),
                },
            }
        }
        BoundKind::Under => {
            let kappa_s = inputs.kappa_s.ok_or(Error::MissingConstant("kappa_s"))?;
            let kappa_h = inputs.kappa_h.ok_or(Error::MissingConstant("kappa_H"))?;
            if !(kappa_s >= 0.0 && kappa_h >= 0.0) {
                return Err(Error::InvalidInput("kappa_s and kappa_H must be nonnegative".into()));
            }
            let (c_f, c_g, c_h) = under_constants(l, kappa, kappa_s, kappa_h, p);
            BoundReport {
                kind,
                c_f,
                c_g,
                c_h,
                provenance: under_provenance("supplied kappa_H", "raw"),
            }
        }
        BoundKind::Mfn => {
            let (kappa_s, raw_s) = pick(inputs.kappa_s, || {
                constants_from_lambda(PoisednessKind::Mfn, inputs.lambda_checked()?, n, p, q)
            })?;
            let (kappa_h, raw_h) = pick(inputs.kappa_h, || {
                hessian_bound_mfn(l, kappa, inputs.lambda_checked()?, p, q, inputs.delta_max())
            })?;
            let (c_f, c_g, c_h) = under_constants(l, kappa, kappa_s, kappa_h, p);
            BoundReport {
                kind,
                c_f,
                c_g,
                c_h,
                provenance: under_provenance(
                    if raw_h {
                        "supplied kappa_H"
                    } else {
                        "MFN Hessian bound (kappa + L/2) 4 Λ (p+1) sqrt(2(q+1)) / c(delta_max)^2"
                    },
                    &mode(raw_s || raw_h),
                ),
            }
        }
    };
    Ok(report)
}

fn under_provenance(hessian: &str, mode: &str) -> Provenance {
    Provenance {
        c_f: "underdetermined value bound: (L + kappa_H)/2 + kappa + 2 kappa_s sqrt(p) (L + kappa + 3/4 kappa_H)"
            .into(),
        c_g: "underdetermined gradient bound: 2 kappa_s sqrt(p) (L + kappa + 3/4 kappa_H)".into(),
        c_h: hessian.into(),
        mode: mode.into(),
    }
}

/// Fully substituted closed forms in terms of `L`, `kappa`, `Λ`, `n`, `p`,
/// `q`, `delta_max` (no intermediate geometry constants).
pub fn table_row(kind: BoundKind, inputs: &BoundInputs) -> Result<(f64, f64, f64)> {
    inputs.validate(kind)?;
    let (l, k, lam) = (inputs.lipschitz, inputs.kappa, inputs.lambda_checked()?);
    let (n, p, q) = (inputs.n as f64, inputs.p as f64, inputs.q() as f64);
    let s2 = 2f64.sqrt();
    Ok(match kind {
        BoundKind::LinDet => (
            0.5 * l + k + (0.5 * l + 2.0 * k) * lam * n,
            l + (0.5 * l + 2.0 * k) * lam * n,
            0.0,
        ),
        BoundKind::QuadDet => {
            let root = (q * (q + 1.0).powi(3)).sqrt();
            (
                0.5 * l + k + 4.0 * lam * root * (2.0 + 3.0 * s2) * (k + l),
                8.0 * lam * root * (1.0 + s2) * (k + l),
                8.0 * lam * (2.0 * q * (q + 1.0).powi(3)).sqrt() * (k + l),
            )
        }
        BoundKind::Mfn => {
            let c = c_delta_max(inputs.delta_max())?;
            let c2 = c * c;
            let w = (2.0 * (q + 1.0)).sqrt();
            let hess = (k + 0.5 * l) * lam * 4.0 * (p + 1.0) * w / c2;
            let inner = l + k + (k + 0.5 * l) * lam * 3.0 * (p + 1.0) * w / c2;
            let lead = 2.0 * lam * (2.0 * p * (n + 1.0)).sqrt() * (p + 1.0);
            (0.5 * (l + hess) + k + lead * inner, lead * inner, hess)
        }
        BoundKind::Under => {
            return Err(Error::InvalidInput(
                "the generic underdetermined row has no Λ-only form".into(),
            ))
        }
    })
}
