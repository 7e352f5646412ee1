//! Frobenius traces by point counting over F_p, the Dirichlet coefficients
//! a_1..a_M of an elliptic curve's L-series, and truncated evaluation of
//! `Σ a_n n^{-s}`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::arith::smallest_prime_factors;
use crate::catalog::AInvariants;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionKind {
    Good,
    SplitMultiplicative,
    NonsplitMultiplicative,
    Additive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReductionInfo {
    pub prime: u64,
    pub kind: ReductionKind,
    pub trace: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LSeriesError {
    /// The point count contradicts the conductor: the model is not minimal
    /// at `prime`, or the catalog entry is corrupt.
    Inconsistent { prime: u64, trace: i64, bad: bool },
    /// `Im L(1)` exceeded the tolerance for a real coefficient table.
    ImaginaryResidue(f64),
    /// Requested table length is zero.
    EmptyTable,
}

impl fmt::Display for LSeriesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LSeriesError::Inconsistent { prime, trace, bad } => write!(
                f,
                "inconsistent reduction at p = {prime}: a_p = {trace} at a {} prime",
                if *bad { "bad" } else { "good" }
            ),
            LSeriesError::ImaginaryResidue(im) => {
                write!(f, "L(1) has imaginary part {im:e}, expected 0")
            }
            LSeriesError::EmptyTable => f.write_str("coefficient table length must be at least 1"),
        }
    }
}

impl core::error::Error for LSeriesError {}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PointCount {
    /// Affine solutions at which the curve is smooth.
    pub smooth_affine: u64,
    /// Affine solutions where both partial derivatives vanish.
    pub singular_points: Vec<(u64, u64)>,
}

fn reduce(a: &AInvariants, p: u64) -> [u64; 5] {
    a.0.map(|c| c.rem_euclid(p as i64) as u64)
}

/// Enumerate all `p²` pairs. Works for every prime including 2.
pub fn count_points_naive(a: &AInvariants, p: u64) -> PointCount {
    let [a1, a2, a3, a4, a6] = reduce(a, p);
    let mut out = PointCount::default();
    for x in 0..p {
        let x2 = x * x % p;
        let rhs = (x2 * x + a2 * x2 + a4 * x + a6) % p;
        for y in 0..p {
            let lhs = (y * y + a1 * x % p * y + a3 * y) % p;
            if lhs != rhs {
                continue;
            }
            // ∂/∂y: 2y + a1 x + a3; ∂/∂x: a1 y - (3x² + 2 a2 x + a4)
            let fy = (2 * y + a1 * x + a3) % p;
            let fx = (a1 * y + 3 * p * p - (3 * x * x + 2 * a2 * x + a4) % p) % p;
            if fx == 0 && fy == 0 {
                out.singular_points.push((x, y));
            } else {
                out.smooth_affine += 1;
            }
        }
    }
    out
}

/// O(p) count for odd p: completing the square turns the curve into
/// `Y² = g(x)` with `Y = 2y + a1 x + a3` and `g = 4(x³ + a2 x² + a4 x + a6) + (a1 x + a3)²`,
/// so each x contributes `1 + (g(x) | p)` points. A singular point must
/// have `Y = 0`, which pins y for each x.
pub fn count_points_fast(a: &AInvariants, p: u64) -> PointCount {
    assert!(p % 2 == 1, "fast point count needs an odd prime");
    let [a1, a2, a3, a4, a6] = reduce(a, p);
    let mut is_square = vec![false; p as usize];
    for y in 0..p {
        is_square[(y * y % p) as usize] = true;
    }
    let half = (p + 1) / 2;
    let mut total = 0u64;
    let mut singular = Vec::new();
    for x in 0..p {
        let x2 = x * x % p;
        let f = (x2 * x + a2 * x2 + a4 * x + a6) % p;
        let lin = (a1 * x + a3) % p;
        let g = (4 * f + lin * lin) % p;
        total += if g == 0 {
            1
        } else if is_square[g as usize] {
            2
        } else {
            0
        };
        if g == 0 {
            let y = (p - lin) * half % p;
            let fx = (a1 * y + 3 * p * p - (3 * x2 + 2 * a2 * x + a4) % p) % p;
            if fx == 0 {
                singular.push((x, y));
            }
        }
    }
    PointCount {
        smooth_affine: total - singular.len() as u64,
        singular_points: singular,
    }
}

/// Affine point count split into smooth and singular solutions.
pub fn count_points(a: &AInvariants, p: u64) -> PointCount {
    if p == 2 {
        count_points_naive(a, p)
    } else {
        count_points_fast(a, p)
    }
}

/// Trace of Frobenius and reduction type at `p` for a model minimal at `p`.
pub fn trace_of_frobenius(a: &AInvariants, p: u64, conductor: u64) -> Result<ReductionInfo, LSeriesError> {
    let count = count_points(a, p);
    let projective_smooth = count.smooth_affine as i64 + 1;
    let p_i = p as i64;
    if conductor % p != 0 {
        let trace = p_i + 1 - projective_smooth;
        if !count.singular_points.is_empty() || trace * trace > 4 * p_i {
            return Err(LSeriesError::Inconsistent { prime: p, trace, bad: false });
        }
        return Ok(ReductionInfo { prime: p, kind: ReductionKind::Good, trace });
    }
    let trace = p_i - projective_smooth;
    let kind = match trace {
        1 => ReductionKind::SplitMultiplicative,
        -1 => ReductionKind::NonsplitMultiplicative,
        0 => ReductionKind::Additive,
        _ => return Err(LSeriesError::Inconsistent { prime: p, trace, bad: true }),
    };
    Ok(ReductionInfo { prime: p, kind, trace })
}

/// Dirichlet coefficients a_1..a_M of one curve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnTable {
    pub label: String,
    pub conductor: u64,
    /// `coefficients[n - 1] = a_n`.
    pub coefficients: Vec<i64>,
}

impl AnTable {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `a_n` for `1 <= n <= M`.
    pub fn get(&self, n: usize) -> i64 {
        self.coefficients[n - 1]
    }

    /// Table from raw coefficients, e.g. the all-ones table of ζ.
    pub fn from_coefficients(label: impl Into<String>, conductor: u64, coefficients: Vec<i64>) -> Self {
        AnTable {
            label: label.into(),
            conductor,
            coefficients,
        }
    }

    /// `M` copies of 1: the truncated Riemann zeta function.
    pub fn zeta(len: usize) -> Self {
        Self::from_coefficients("zeta", 1, vec![1; len])
    }
}

/// a_n for n ≤ M: traces at primes, the Hecke recursion
/// `a_{p^{k+1}} = a_p a_{p^k} − [p ∤ N] p a_{p^{k−1}}` at prime powers, and
/// multiplicativity across coprime factors.
pub fn build_an_table(
    label: impl Into<String>,
    a: &AInvariants,
    conductor: u64,
    len: usize,
) -> Result<AnTable, LSeriesError> {
    if len == 0 {
        return Err(LSeriesError::EmptyTable);
    }
    let spf = smallest_prime_factors(len);
    let mut an = vec![0i64; len + 1];
    an[1] = 1;
    for n in 2..=len {
        let p = spf[n] as usize;
        if p == n {
            an[n] = trace_of_frobenius(a, p as u64, conductor)?.trace;
            continue;
        }
        // n = p^k * m with p ∤ m
        let mut pk = p;
        while (n / pk) % p == 0 {
            pk *= p;
        }
        if pk != n {
            an[n] = an[pk] * an[n / pk];
        } else {
            let good = conductor % p as u64 != 0;
            let prev = n / p;
            an[n] = an[p] * an[prev] - if good { p as i64 * an[prev / p] } else { 0 };
        }
    }
    an.remove(0);
    Ok(AnTable {
        label: label.into(),
        conductor,
        coefficients: an,
    })
}

/// A coefficient table prepared for repeated evaluation: nonzero terms
/// only, with `ln n` precomputed.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletSeries {
    terms: Vec<(f64, f64)>,
    len: usize,
}

impl DirichletSeries {
    pub fn new(table: &AnTable) -> Self {
        let terms = table
            .coefficients
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| (c as f64, libm::log((i + 1) as f64)))
            .collect();
        DirichletSeries { terms, len: table.len() }
    }

    /// Truncation length M.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `Σ a_n exp(−s ln n)`, summed in increasing n. Overflow propagates as
    /// inf/NaN.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(c, ln_n) in &self.terms {
            let mag = c * libm::exp(-s.re * ln_n);
            let (sin, cos) = libm::sincos(-s.im * ln_n);
            acc.re += mag * cos;
            acc.im += mag * sin;
        }
        acc
    }
}

/// Truncated L-series at `s`.
pub fn eval_truncated_l(table: &AnTable, s: Complex64) -> Complex64 {
    DirichletSeries::new(table).eval(s)
}

pub const L_AT_ONE_IMAG_TOLERANCE: f64 = 1e-12;

/// Real value of the truncated series at `s = 1`.
pub fn l_at_one(table: &AnTable) -> Result<f64, LSeriesError> {
    let v = eval_truncated_l(table, Complex64::new(1.0, 0.0));
    if !(v.im.abs() <= L_AT_ONE_IMAG_TOLERANCE) {
        return Err(LSeriesError::ImaginaryResidue(v.im));
    }
    Ok(v.re)
}

/// Exponentially smoothed estimate `Σ 2 a_n / n · exp(−2πn/√N)` of L(1),
/// valid for curves with root number +1. Provided for comparison with the
/// raw truncation.
pub fn l_at_one_smoothed(table: &AnTable) -> f64 {
    let scale = 2.0 * core::f64::consts::PI / libm::sqrt(table.conductor as f64);
    table
        .coefficients
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(i, &c)| {
            let n = (i + 1) as f64;
            2.0 * c as f64 / n * libm::exp(-scale * n)
        })
        .sum()
}
