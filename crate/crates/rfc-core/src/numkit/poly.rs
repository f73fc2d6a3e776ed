//! Real polynomials in one variable, stored with descending powers.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numkit::eig::eigenvalues;
use crate::numkit::matrix::Matrix;

/// Polynomial with real coefficients, `coeffs[0]` multiplying the highest
/// power of `s`. The zero polynomial is stored as `[0.0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    /// Builds a polynomial, dropping exact leading zeros.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let first = coeffs.iter().position(|&c| c != 0.0);
        match first {
            Some(i) => Poly {
                coeffs: coeffs[i..].to_vec(),
            },
            None => Poly { coeffs: vec![0.0] },
        }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    /// Expands `leading * prod (s - r_i)`. The root set must be closed under
    /// conjugation; the imaginary residue left by expansion is checked and
    /// discarded.
    pub fn from_roots(roots: &[Complex64], leading: f64) -> Result<Self> {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &root in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, &c) in acc.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * root;
            }
            acc = next;
        }
        let max_mag = acc.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        let worst_im = acc.iter().map(|c| c.im.abs()).fold(0.0f64, f64::max);
        if worst_im > 1e-8 * max_mag.max(1e-300) {
            return Err(Error::Parameter(format!(
                "root set is not conjugate-closed (imaginary residue {worst_im:.3e})"
            )));
        }
        Ok(Poly::new(acc.iter().map(|c| c.re * leading).collect()))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs == [0.0]
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[0]
    }

    /// Constant term.
    pub fn at_zero(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn eval_complex(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Divides by the leading coefficient.
    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(1.0 / self.leading())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, &c) in self.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += c;
        }
        for (i, &c) in other.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += c;
        }
        Poly::new(out)
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Drops leading coefficients smaller than `tol` relative to the largest
    /// coefficient. Used after fitting, where an over-specified degree shows
    /// up as a numerically-zero leading term.
    pub fn trim_leading(&self, rel_tol: f64) -> Poly {
        let scale = self.max_abs();
        if scale == 0.0 {
            return Poly::zero();
        }
        let keep = self
            .coeffs
            .iter()
            .position(|c| c.abs() > rel_tol * scale)
            .unwrap_or(self.coeffs.len() - 1);
        Poly::new(self.coeffs[keep..].to_vec())
    }

    /// Rewrites `p(z)` with `z = s / scale` into coefficients in `s`.
    pub fn unscale_variable(&self, scale: f64) -> Poly {
        let deg = self.degree();
        let out: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c / scale.powi((deg - i) as i32))
            .collect();
        Poly::new(out)
    }
}

/// Roots (with multiplicity) via the companion-matrix eigenvalue route.
pub fn poly_roots(p: &Poly) -> Result<Vec<Complex64>> {
    if p.is_zero() || p.degree() == 0 {
        return Err(Error::NoRoots);
    }
    let monic = p.monic();
    let n = monic.degree();
    // Companion matrix with ones on the subdiagonal and the negated
    // coefficients in the last column.
    let mut c = Matrix::zeros(n, n);
    for i in 1..n {
        c[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        c[(i, n - 1)] = -monic.coeffs()[n - i];
    }
    eigenvalues(&c)
}
