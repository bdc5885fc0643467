//! Interpolation models: determined linear and quadratic, minimum Frobenius
//! norm underdetermined quadratics, and their relaxed variants where the
//! model only matches each value to within `kappa * delta^2`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, MfnSystem, PoisednessKind, SampleSet};
use crate::linalg::{GuardedLu, COND_THRESHOLD};
use crate::poly::{BasisPart, BasisSelector, Degree, QuadraticPolynomial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FitKind {
    LinDet,
    QuadDet,
    Mfn,
}

impl FitKind {
    pub fn poisedness(self) -> PoisednessKind {
        match self {
            FitKind::LinDet => PoisednessKind::Linear,
            FitKind::QuadDet => PoisednessKind::Quadratic,
            FitKind::Mfn => PoisednessKind::Mfn,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FitKind::LinDet => "LIN_DET",
            FitKind::QuadDet => "QUAD_DET",
            FitKind::Mfn => "MFN",
        }
    }
}

impl std::str::FromStr for FitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "LIN_DET" => Ok(FitKind::LinDet),
            "QUAD_DET" => Ok(FitKind::QuadDet),
            "MFN" => Ok(FitKind::Mfn),
            other => Err(Error::InvalidInput(format!("unknown model kind `{other}`"))),
        }
    }
}

/// How the relaxed values `gamma_j` are chosen.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RelaxationSpec {
    pub kappa: f64,
    /// Explicit values; must satisfy `|gamma_j - f(y^j)| <= kappa delta^2`.
    pub gamma: Option<Vec<f64>>,
    /// Seed for sampling `gamma_j` uniformly on the admissible interval.
    pub noise_seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub model: QuadraticPolynomial,
    /// `max_j |m(y^j) - f(y^j)|` against the original values.
    pub residual: f64,
    pub condition: f64,
}

fn check_values(set: &SampleSet, values: &[f64]) -> Result<()> {
    let want = set.p() + 1;
    if values.len() != want {
        return Err(Error::DimensionMismatch {
            expected: want,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("function values must be finite".into()));
    }
    Ok(())
}

pub fn interpolation_residual(m: &QuadraticPolynomial, set: &SampleSet, values: &[f64]) -> Result<f64> {
    check_values(set, values)?;
    let mut worst = 0.0f64;
    for (y, v) in set.points().iter().zip(values) {
        worst = worst.max((m.eval(y)? - v).abs());
    }
    Ok(worst)
}

/// Solves the interpolation system directly: the square system
/// `M(phi, Y) alpha = f(Y)` for determined kinds, the `F` saddle-point system
/// for MFN.
pub fn fit_model(kind: FitKind, set: &SampleSet, values: &[f64]) -> Result<FitResult> {
    kind.poisedness().check_shape(set.n(), set.p())?;
    check_values(set, values)?;
    let unit = set.normalized();
    let (normalized, condition) = match kind {
        FitKind::LinDet | FitKind::QuadDet => {
            let degree = if kind == FitKind::LinDet {
                Degree::Linear
            } else {
                Degree::Quadratic
            };
            let m = geometry::build_m(BasisSelector::new(degree, BasisPart::Full), &unit);
            let lu = GuardedLu::new(&m, COND_THRESHOLD)?;
            let alpha = lu.solve(&DVector::from_column_slice(values))?;
            let poly = match degree {
                Degree::Linear => QuadraticPolynomial::from_linear_coeffs(alpha.as_slice())?,
                Degree::Quadratic => QuadraticPolynomial::from_coeffs(alpha.as_slice(), set.n())?,
            };
            (poly, lu.condition)
        }
        FitKind::Mfn => {
            let sys = MfnSystem::new(set)?;
            (sys.solve_min_frobenius(values)?, sys.condition())
        }
    };
    let model = normalized.denormalized(set.center(), set.delta())?;
    let residual = interpolation_residual(&model, set, values)?;
    Ok(FitResult {
        model,
        residual,
        condition,
    })
}

/// The relaxed values `gamma`, validated or sampled.
pub fn relaxed_values(set: &SampleSet, values: &[f64], spec: &RelaxationSpec) -> Result<Vec<f64>> {
    check_values(set, values)?;
    if !(spec.kappa >= 0.0) || !spec.kappa.is_finite() {
        return Err(Error::InvalidInput(format!(
            "kappa must be nonnegative, got {}",
            spec.kappa
        )));
    }
    let bound = spec.kappa * set.delta() * set.delta();
    match &spec.gamma {
        Some(gamma) => {
            if gamma.len() != values.len() {
                return Err(Error::DimensionMismatch {
                    expected: values.len(),
                    got: gamma.len(),
                });
            }
            for (index, (&g, &v)) in gamma.iter().zip(values).enumerate() {
                if !g.is_finite() || (g - v).abs() > bound * (1.0 + 1e-12) + f64::EPSILON * v.abs() {
                    return Err(Error::AssumptionViolated {
                        index,
                        gamma: g,
                        value: v,
                        bound,
                    });
                }
            }
            Ok(gamma.clone())
        }
        None => {
            if bound == 0.0 {
                return Ok(values.to_vec());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed.unwrap_or(0));
            Ok(values.iter().map(|&v| v + bound * rng.gen_range(-1.0..=1.0)).collect())
        }
    }
}

/// `m = sum_j gamma_j l_j` over the Lagrange polynomials of the kind.
pub fn fit_relaxed(kind: FitKind, set: &SampleSet, values: &[f64], spec: &RelaxationSpec) -> Result<FitResult> {
    kind.poisedness().check_shape(set.n(), set.p())?;
    let gamma = relaxed_values(set, values, spec)?;
    let basis = geometry::lagrange_for(set, kind.poisedness())?;
    let model = QuadraticPolynomial::linear_combination(&gamma, &basis.polys)?;
    let residual = interpolation_residual(&model, set, values)?;
    Ok(FitResult {
        model,
        residual,
        condition: basis.condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pts: &[&[f64]], delta: f64) -> SampleSet {
        SampleSet::new(pts.iter().map(|p| p.to_vec()).collect(), delta).unwrap()
    }

    fn square() -> SampleSet {
        set(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]], 2f64.sqrt())
    }

    fn assert_coeffs(m: &QuadraticPolynomial, expect: &[f64], tol: f64) {
        for (a, e) in m.to_coeffs().iter().zip(expect) {
            assert!((a - e).abs() <= tol, "{:?} vs {expect:?}", m.to_coeffs());
        }
    }

    #[test]
    fn linear_reproduces_affine() {
        let s = set(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]], 1.0);
        let r = fit_model(FitKind::LinDet, &s, &[0.0, 1.0, 1.0]).unwrap();
        assert_coeffs(&r.model, &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0], 1e-14);
        assert!(r.residual <= 1e-12);
    }

    #[test]
    fn quadratic_one_dimensional() {
        let s = set(&[&[0.0], &[1.0], &[-1.0]], 1.0);
        let r = fit_model(FitKind::QuadDet, &s, &[0.0, 1.0, 1.0]).unwrap();
        assert_coeffs(&r.model, &[0.0, 0.0, 2.0], 1e-14);
    }

    #[test]
    fn mfn_recovers_bilinear() {
        let r = fit_model(FitKind::Mfn, &square(), &[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_coeffs(&r.model, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0], 1e-10);
    }

    #[test]
    fn relaxed_examples() {
        let s = square();
        let values = [0.0, 0.0, 0.0, 1.0];
        let exact = fit_model(FitKind::Mfn, &s, &values).unwrap();
        let k0 = fit_relaxed(FitKind::Mfn, &s, &values, &RelaxationSpec::default()).unwrap();
        for (a, b) in k0.model.to_coeffs().iter().zip(exact.model.to_coeffs()) {
            assert!((a - b).abs() <= 1e-10);
        }

        // (1,1) sits at distance sqrt(2) from y0, so the ball radius is sqrt(2).
        let spec = RelaxationSpec {
            kappa: 0.01,
            gamma: Some(vec![0.0, 0.0, 0.0, 1.01]),
            noise_seed: None,
        };
        let r = fit_relaxed(FitKind::Mfn, &s, &values, &spec).unwrap();
        assert_coeffs(&r.model, &[0.0, 0.0, 0.0, 0.0, 1.01, 0.0], 1e-10);
        assert!(r.residual <= 0.01 + 1e-10);

        let spec = RelaxationSpec {
            kappa: 0.1,
            gamma: None,
            noise_seed: Some(3),
        };
        let half = set(&[&[0.0, 0.0], &[0.5, 0.0], &[0.0, 0.5], &[0.3, 0.3]], 0.5);
        let r = fit_relaxed(FitKind::Mfn, &half, &[1.0, 2.0, 3.0, 4.0], &spec).unwrap();
        assert!(r.residual <= 0.025 + 1e-10);
    }

    #[test]
    fn relaxed_gamma_rejected_with_index() {
        let spec = RelaxationSpec {
            kappa: 0.01,
            gamma: Some(vec![0.0, 0.0, 0.5, 1.0]),
            noise_seed: None,
        };
        let err = fit_relaxed(FitKind::Mfn, &square(), &[0.0, 0.0, 0.0, 1.0], &spec).unwrap_err();
        assert!(matches!(err, Error::AssumptionViolated { index: 2, .. }));
    }

    #[test]
    fn residual_examples() {
        let s = square();
        let zero = QuadraticPolynomial::zero(2);
        assert_eq!(interpolation_residual(&zero, &s, &[1.0; 4]).unwrap(), 1.0);
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            fit_model(FitKind::LinDet, &square(), &[0.0; 4]),
            Err(Error::Shape(_))
        ));
        assert!(fit_model(FitKind::Mfn, &square(), &[0.0; 3]).is_err());
    }
}
