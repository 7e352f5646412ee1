//! The nonic polynomial `z³(1 + A_1 z + … + A_6 z⁶)` attached to a
//! Weierstrass model through the expansion of `w = -1/y` in `z = -x/y`
//! near the point at infinity.
//!
//! `w(z)` is the unique power series solving
//! `w = z³ + a1 z w + a2 z² w + a3 w² + a4 z w² + a6 w³`; it is found by
//! iterating the right-hand side from `w = 0` on integer polynomials
//! truncated at degree 9 until it stops changing.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::catalog::AInvariants;

pub const DEGREE_CAP: usize = 9;
const MAX_ITERATIONS: usize = 9;

/// Integer polynomial truncated above degree 9, coefficients ascending.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TruncatedPoly(pub [i128; DEGREE_CAP + 1]);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormalError {
    Overflow,
    NoFixedPoint,
}

impl fmt::Display for FormalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormalError::Overflow => f.write_str("formal expansion overflows 128-bit integers"),
            FormalError::NoFixedPoint => f.write_str("formal expansion did not converge within 9 iterations"),
        }
    }
}

impl core::error::Error for FormalError {}

impl TruncatedPoly {
    pub fn monomial(coefficient: i128, degree: usize) -> Self {
        let mut p = TruncatedPoly::default();
        if degree <= DEGREE_CAP {
            p.0[degree] = coefficient;
        }
        p
    }

    pub fn checked_add(&self, other: &Self) -> Option<Self> {
        let mut out = TruncatedPoly::default();
        for i in 0..=DEGREE_CAP {
            out.0[i] = self.0[i].checked_add(other.0[i])?;
        }
        Some(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Option<Self> {
        let mut out = TruncatedPoly::default();
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.0[..=DEGREE_CAP - i].iter().enumerate() {
                out.0[i + j] = out.0[i + j].checked_add(a.checked_mul(b)?)?;
            }
        }
        Some(out)
    }

    pub fn checked_scale(&self, k: i128) -> Option<Self> {
        let mut out = *self;
        for c in out.0.iter_mut() {
            *c = c.checked_mul(k)?;
        }
        Some(out)
    }
}

/// Right-hand side `z³ + a1 z w + a2 z² w + a3 w² + a4 z w² + a6 w³`.
pub fn weierstrass_rhs(a: &AInvariants, w: &TruncatedPoly) -> Option<TruncatedPoly> {
    let [a1, a2, a3, a4, a6] = a.0.map(i128::from);
    let z = TruncatedPoly::monomial(1, 1);
    let z2 = TruncatedPoly::monomial(1, 2);
    let w2 = w.checked_mul(w)?;
    let w3 = w2.checked_mul(w)?;
    let terms = [
        TruncatedPoly::monomial(1, 3),
        z.checked_mul(w)?.checked_scale(a1)?,
        z2.checked_mul(w)?.checked_scale(a2)?,
        w2.checked_scale(a3)?,
        z.checked_mul(&w2)?.checked_scale(a4)?,
        w3.checked_scale(a6)?,
    ];
    terms
        .iter()
        .try_fold(TruncatedPoly::default(), |acc, t| acc.checked_add(t))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormalExpansion {
    pub source_label: String,
    /// `A_1..A_6`.
    pub coefficients: [i128; 6],
}

impl FormalExpansion {
    /// `w(z)` through degree 9.
    pub fn series(&self) -> TruncatedPoly {
        let mut p = TruncatedPoly::monomial(1, 3);
        p.0[4..].copy_from_slice(&self.coefficients);
        p
    }
}

/// `A_1..A_6` by fixed-point iteration of the Weierstrass relation.
pub fn formal_group_coefficients(label: impl Into<String>, a: &AInvariants) -> Result<FormalExpansion, FormalError> {
    let mut w = TruncatedPoly::default();
    for _ in 0..MAX_ITERATIONS {
        let next = weierstrass_rhs(a, &w).ok_or(FormalError::Overflow)?;
        if next == w {
            let mut coefficients = [0; 6];
            coefficients.copy_from_slice(&w.0[4..]);
            return Ok(FormalExpansion { source_label: label.into(), coefficients });
        }
        w = next;
    }
    // Each pass fixes at least one more degree, so eight passes settle;
    // reaching here means the truncation is broken.
    Err(FormalError::NoFixedPoint)
}

/// Exact coefficients of the nonic, degrees 0..=9.
pub fn nonic_integer_coefficients(expansion: &FormalExpansion) -> [i128; 10] {
    expansion.series().0
}

/// The nonic as complex coefficients in ascending degree, ready for
/// [`crate::dynamics::MapSpec::Polynomial`].
pub fn nonic_polynomial(expansion: &FormalExpansion) -> Vec<Complex64> {
    nonic_integer_coefficients(expansion)
        .iter()
        .map(|&c| Complex64::new(c as f64, 0.0))
        .collect()
}
