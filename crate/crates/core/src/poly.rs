//! Quadratic polynomials in `n` variables and the natural monomial basis.
//!
//! The natural basis of quadratics is ordered
//! `1, x1, ..., xn, x1^2/2, x1 x2, x1 x3, ..., x1 xn, x2^2/2, ..., x(n-1) xn, xn^2/2`
//! and every matrix in the crate indexes columns against this ordering.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Degree {
    Linear,
    Quadratic,
}

/// Which slice of the natural basis to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisPart {
    /// Constant, linear and (for degree 2) quadratic monomials.
    Full,
    /// `{1, x1, ..., xn}`.
    LinearPart,
    /// `{x1^2/2, x1 x2, ..., xn^2/2}`; empty for degree 1.
    QuadraticPart,
    /// Full basis without the constant monomial.
    AffineFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSelector {
    pub degree: Degree,
    pub part: BasisPart,
}

impl BasisSelector {
    pub const fn new(degree: Degree, part: BasisPart) -> Self {
        Self { degree, part }
    }

    pub const fn full_quadratic() -> Self {
        Self::new(Degree::Quadratic, BasisPart::Full)
    }

    pub const fn linear_part() -> Self {
        Self::new(Degree::Quadratic, BasisPart::LinearPart)
    }

    pub const fn quadratic_part() -> Self {
        Self::new(Degree::Quadratic, BasisPart::QuadraticPart)
    }

    /// Number of monomials in this selection for dimension `n`.
    pub fn len(&self, n: usize) -> usize {
        let quad = match self.degree {
            Degree::Linear => 0,
            Degree::Quadratic => n * (n + 1) / 2,
        };
        match self.part {
            BasisPart::Full => 1 + n + quad,
            BasisPart::LinearPart => 1 + n,
            BasisPart::QuadraticPart => quad,
            BasisPart::AffineFree => n + quad,
        }
    }

    pub fn is_empty(&self, n: usize) -> bool {
        self.len(n) == 0
    }
}

/// Dimension of the polynomial space: `n + 1` for degree 1, `q + 1` with
/// `q = (n^2 + 3n)/2` for degree 2.
pub fn space_dim(degree: Degree, n: usize) -> usize {
    match degree {
        Degree::Linear => n + 1,
        Degree::Quadratic => (n * n + 3 * n) / 2 + 1,
    }
}

/// `q = dim(P^2_n) - 1`.
pub fn quad_q(n: usize) -> usize {
    (n * n + 3 * n) / 2
}

/// Index pairs `(i, j)`, `i <= j`, of the quadratic monomials in basis order.
pub fn quadratic_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
}

fn push_quadratic(x: &[f64], out: &mut Vec<f64>) {
    for (i, j) in quadratic_pairs(x.len()) {
        if i == j {
            out.push(0.5 * x[i] * x[i]);
        } else {
            out.push(x[i] * x[j]);
        }
    }
}

/// Values of the selected monomials at `x`.
pub fn natural_basis(sel: BasisSelector, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(sel.len(x.len()));
    let quadratic = sel.degree == Degree::Quadratic;
    match sel.part {
        BasisPart::Full => {
            out.push(1.0);
            out.extend_from_slice(x);
            if quadratic {
                push_quadratic(x, &mut out);
            }
        }
        BasisPart::LinearPart => {
            out.push(1.0);
            out.extend_from_slice(x);
        }
        BasisPart::QuadraticPart => {
            if quadratic {
                push_quadratic(x, &mut out);
            }
        }
        BasisPart::AffineFree => {
            out.extend_from_slice(x);
            if quadratic {
                push_quadratic(x, &mut out);
            }
        }
    }
    out
}

/// `m(x) = c + g^T x + x^T H x / 2` with a symmetric `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPolynomial {
    constant: f64,
    gradient: DVector<f64>,
    hessian: DMatrix<f64>,
}

impl QuadraticPolynomial {
    /// Builds a polynomial, symmetrizing `hessian` as `(H + H^T)/2`.
    pub fn new(constant: f64, gradient: DVector<f64>, hessian: DMatrix<f64>) -> Result<Self> {
        let n = gradient.len();
        if n == 0 {
            return Err(Error::InvalidInput("polynomial dimension must be positive".into()));
        }
        if hessian.nrows() != n || hessian.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: hessian.nrows().max(hessian.ncols()),
            });
        }
        let hessian = (&hessian + hessian.transpose()) * 0.5;
        Ok(Self {
            constant,
            gradient,
            hessian,
        })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            constant: 0.0,
            gradient: DVector::zeros(n),
            hessian: DMatrix::zeros(n, n),
        }
    }

    pub fn affine(constant: f64, gradient: DVector<f64>) -> Self {
        let n = gradient.len();
        Self {
            constant,
            gradient,
            hessian: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn gradient(&self) -> &DVector<f64> {
        &self.gradient
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite()
            && self.gradient.iter().all(|v| v.is_finite())
            && self.hessian.iter().all(|v| v.is_finite())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut value = self.constant;
        for i in 0..n {
            let hx: f64 = (0..n).map(|j| self.hessian[(i, j)] * x[j]).sum();
            value += x[i] * (self.gradient[i] + 0.5 * hx);
        }
        value
    }

    pub fn grad(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(&self.gradient + &self.hessian * DVector::from_column_slice(x))
    }

    pub fn hess(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    /// Builds a polynomial from coefficients over the full quadratic basis.
    pub fn from_coeffs(alpha: &[f64], n: usize) -> Result<Self> {
        let expected = space_dim(Degree::Quadratic, n);
        if alpha.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: alpha.len(),
            });
        }
        let gradient = DVector::from_column_slice(&alpha[1..=n]);
        let mut hessian = DMatrix::zeros(n, n);
        for ((i, j), &a) in quadratic_pairs(n).zip(&alpha[n + 1..]) {
            hessian[(i, j)] = a;
            hessian[(j, i)] = a;
        }
        Ok(Self {
            constant: alpha[0],
            gradient,
            hessian,
        })
    }

    /// Builds an affine polynomial from coefficients over `{1, x1, ..., xn}`.
    pub fn from_linear_coeffs(alpha: &[f64]) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: alpha.len(),
            });
        }
        Ok(Self::affine(alpha[0], DVector::from_column_slice(&alpha[1..])))
    }

    /// Coefficients over the full quadratic basis; inverse of [`Self::from_coeffs`].
    pub fn to_coeffs(&self) -> Vec<f64> {
        let n = self.dim();
        let mut alpha = Vec::with_capacity(space_dim(Degree::Quadratic, n));
        alpha.push(self.constant);
        alpha.extend(self.gradient.iter());
        alpha.extend(quadratic_pairs(n).map(|(i, j)| self.hessian[(i, j)]));
        alpha
    }

    /// The polynomial `u -> self(center + scale * u)`.
    pub fn normalized(&self, center: &[f64], scale: f64) -> Result<Self> {
        self.check_dim(center)?;
        let constant = self.eval_unchecked(center);
        let gradient = self.grad(center)? * scale;
        let hessian = &self.hessian * (scale * scale);
        Ok(Self {
            constant,
            gradient,
            hessian,
        })
    }

    /// The polynomial `x -> self((x - center) / scale)`; inverse of
    /// [`Self::normalized`].
    pub fn denormalized(&self, center: &[f64], scale: f64) -> Result<Self> {
        self.check_dim(center)?;
        let hessian = &self.hessian / (scale * scale);
        let c = DVector::from_column_slice(center);
        let hc = &hessian * &c;
        let g_scaled = &self.gradient / scale;
        let constant = self.constant - g_scaled.dot(&c) + 0.5 * c.dot(&hc);
        let gradient = g_scaled - hc;
        Ok(Self {
            constant,
            gradient,
            hessian,
        })
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &Self) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self {
            constant: self.constant + a * other.constant,
            gradient: &self.gradient + &other.gradient * a,
            hessian: &self.hessian + &other.hessian * a,
        })
    }

    /// `sum_j weights[j] * polys[j]`.
    pub fn linear_combination(weights: &[f64], polys: &[Self]) -> Result<Self> {
        let first = polys
            .first()
            .ok_or_else(|| Error::InvalidInput("empty polynomial list".into()))?;
        if weights.len() != polys.len() {
            return Err(Error::DimensionMismatch {
                expected: polys.len(),
                got: weights.len(),
            });
        }
        let mut acc = Self::zero(first.dim());
        for (w, p) in weights.iter().zip(polys) {
            acc = acc.add_scaled(*w, p)?;
        }
        Ok(acc)
    }

    /// Spectral norm of the Hessian.
    pub fn hessian_norm(&self) -> f64 {
        crate::linalg::spectral_norm(&self.hessian)
    }
}

/// JSON form `{n, c, g, H}` with `H` stored in full.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelJson {
    pub n: usize,
    pub c: f64,
    pub g: Vec<f64>,
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
}

impl From<&QuadraticPolynomial> for ModelJson {
    fn from(m: &QuadraticPolynomial) -> Self {
        let n = m.dim();
        Self {
            n,
            c: m.constant,
            g: m.gradient.iter().copied().collect(),
            h: (0..n).map(|i| (0..n).map(|j| m.hessian[(i, j)]).collect()).collect(),
        }
    }
}

impl TryFrom<ModelJson> for QuadraticPolynomial {
    type Error = Error;

    fn try_from(j: ModelJson) -> Result<Self> {
        if j.g.len() != j.n {
            return Err(Error::DimensionMismatch {
                expected: j.n,
                got: j.g.len(),
            });
        }
        if j.h.len() != j.n || j.h.iter().any(|r| r.len() != j.n) {
            return Err(Error::InvalidInput(format!("H must be {0}x{0}", j.n)));
        }
        let h = DMatrix::from_fn(j.n, j.n, |i, k| j.h[i][k]);
        QuadraticPolynomial::new(j.c, DVector::from_vec(j.g), h)
    }
}

impl Serialize for QuadraticPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuadraticPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ModelJson::deserialize(d)?;
        QuadraticPolynomial::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn space_dims() {
        assert_eq!(space_dim(Degree::Linear, 7), 8);
        assert_eq!(space_dim(Degree::Quadratic, 2), 6);
        assert_eq!(space_dim(Degree::Quadratic, 3), 10);
        assert_eq!(quad_q(2), 5);
    }

    #[test]
    fn basis_values() {
        let full = natural_basis(BasisSelector::full_quadratic(), &[1.0, 2.0]);
        assert_eq!(full, vec![1.0, 1.0, 2.0, 0.5, 2.0, 2.0]);
        let af = natural_basis(BasisSelector::new(Degree::Quadratic, BasisPart::AffineFree), &[-1.0]);
        assert_eq!(af, vec![-1.0, 0.5]);
        let lin = natural_basis(BasisSelector::linear_part(), &[0.0, 0.0, 0.0]);
        assert_eq!(lin, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn basis_ordering_n3() {
        let v = natural_basis(BasisSelector::quadratic_part(), &[2.0, 3.0, 5.0]);
        // x1^2/2, x1x2, x1x3, x2^2/2, x2x3, x3^2/2
        assert_eq!(v, vec![2.0, 6.0, 10.0, 4.5, 15.0, 12.5]);
    }

    #[test]
    fn eval_and_grad_examples() {
        let m = QuadraticPolynomial::new(0.0, DVector::zeros(1), DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert_eq!(m.eval(&[3.0]).unwrap(), 9.0);
        assert_eq!(m.grad(&[3.0]).unwrap()[0], 6.0);

        let a = QuadraticPolynomial::affine(1.0, DVector::from_vec(vec![1.0, 1.0]));
        assert_eq!(a.eval(&[2.0, 3.0]).unwrap(), 6.0);
        assert_eq!(a.grad(&[2.0, 3.0]).unwrap().as_slice(), &[1.0, 1.0]);
        assert!(a.eval(&[1.0]).is_err());
    }

    #[test]
    fn coeff_examples() {
        let m = QuadraticPolynomial::from_coeffs(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0], 2).unwrap();
        assert_eq!(m.hessian(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(m.eval(&[2.0, 3.0]).unwrap(), 6.0);

        let m = QuadraticPolynomial::from_coeffs(&[0.0, 0.0, 2.0], 1).unwrap();
        assert_eq!(m.hessian()[(0, 0)], 2.0);
        assert_eq!(m.eval(&[3.0]).unwrap(), 9.0);
        assert!(QuadraticPolynomial::from_coeffs(&[0.0; 5], 2).is_err());
    }

    #[test]
    fn json_keeps_both_triangles() {
        let m = QuadraticPolynomial::from_coeffs(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0], 2).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"n":2,"c":0.0,"g":[0.0,0.0],"H":[[0.0,1.0],[1.0,0.0]]}"#);
        let back: QuadraticPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, space_dim(Degree::Quadratic, n))
    }

    proptest! {
        #[test]
        fn coeff_round_trip((n, alpha) in (1usize..6).prop_flat_map(|n| (Just(n), coeffs(n)))) {
            let m = QuadraticPolynomial::from_coeffs(&alpha, n).unwrap();
            prop_assert_eq!(m.to_coeffs(), alpha);
        }

        #[test]
        fn eval_is_basis_dot_coeffs(
            (n, alpha, x) in (1usize..5).prop_flat_map(|n| (Just(n), coeffs(n), proptest::collection::vec(-2.0f64..2.0, n)))
        ) {
            let m = QuadraticPolynomial::from_coeffs(&alpha, n).unwrap();
            let phi = natural_basis(BasisSelector::full_quadratic(), &x);
            let dot: f64 = phi.iter().zip(&alpha).map(|(a, b)| a * b).sum();
            prop_assert!((m.eval(&x).unwrap() - dot).abs() <= 1e-10 * (1.0 + dot.abs()));
        }

        #[test]
        fn full_basis_is_linear_then_quadratic(x in proptest::collection::vec(-3.0f64..3.0, 1..6)) {
            let mut joined = natural_basis(BasisSelector::linear_part(), &x);
            joined.extend(natural_basis(BasisSelector::quadratic_part(), &x));
            prop_assert_eq!(natural_basis(BasisSelector::full_quadratic(), &x), joined);
        }

        #[test]
        fn derivatives_match_central_differences(
            (n, alpha, x) in (1usize..5).prop_flat_map(|n| (Just(n), coeffs(n), proptest::collection::vec(-2.0f64..2.0, n)))
        ) {
            let m = QuadraticPolynomial::from_coeffs(&alpha, n).unwrap();
            let h = 1e-5;
            let g = m.grad(&x).unwrap();
            for i in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (m.eval(&xp).unwrap() - m.eval(&xm).unwrap()) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()));
                let gp = m.grad(&xp).unwrap();
                let gm = m.grad(&xm).unwrap();
                for j in 0..n {
                    let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                    let hij = m.hess()[(j, i)];
                    prop_assert!((fd2 - hij).abs() <= 1e-6 * (1.0 + hij.abs()));
                }
            }
        }

        #[test]
        fn normalize_round_trip(
            (n, alpha, c) in (1usize..5).prop_flat_map(|n| (Just(n), coeffs(n), proptest::collection::vec(-2.0f64..2.0, n))),
            scale in 0.01f64..10.0,
        ) {
            let m = QuadraticPolynomial::from_coeffs(&alpha, n).unwrap();
            let back = m.normalized(&c, scale).unwrap().denormalized(&c, scale).unwrap();
            for (a, b) in back.to_coeffs().iter().zip(m.to_coeffs()) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }
    }
}
