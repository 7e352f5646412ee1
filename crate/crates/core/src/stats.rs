//! Spearman rank correlation with average ranks for ties, Student-t tails via
//! the regularized incomplete beta function, and the resulting significance
//! test.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum StatsError {
    Empty,
    LengthMismatch { x: usize, y: usize },
    TooFew(usize),
    ConstantInput,
    NonFinite,
    NoConvergence,
    BadAlpha(f64),
    BadDegreesOfFreedom,
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::Empty => f.write_str("empty input"),
            StatsError::LengthMismatch { x, y } => write!(f, "length mismatch: {x} vs {y}"),
            StatsError::TooFew(n) => write!(f, "need at least 3 pairs, got {n}"),
            StatsError::ConstantInput => f.write_str("correlation undefined: a list is constant"),
            StatsError::NonFinite => f.write_str("input contains NaN or infinite values"),
            StatsError::NoConvergence => f.write_str("incomplete beta continued fraction did not converge"),
            StatsError::BadAlpha(a) => write!(f, "significance level {a} is not in (0, 1)"),
            StatsError::BadDegreesOfFreedom => f.write_str("degrees of freedom must be positive"),
        }
    }
}

impl core::error::Error for StatsError {}

/// Ranks 1..n, tied values sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(StatsError::NonFinite);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    Ok(ranks)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Spearman's r_s: Pearson correlation of the average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 3 {
        return Err(StatsError::TooFew(x.len()));
    }
    pearson(&average_ranks(x)?, &average_ranks(y)?)
}

const CF_TOLERANCE: f64 = 1e-12;
const CF_MAX_ITER: usize = 500;
const TINY: f64 = 1e-300;

/// Continued fraction for I_x(a, b) by the modified Lentz method.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> Result<f64, StatsError> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_TOLERANCE {
            return Ok(h);
        }
    }
    Err(StatsError::NoConvergence)
}

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// Regularized incomplete beta I_x(a, b), switching to the complement
/// `1 − I_{1−x}(b, a)` above `x = (a+1)/(a+b+2)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64, StatsError> {
    if !(x.is_finite() && a > 0.0 && b > 0.0) {
        return Err(StatsError::NonFinite);
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * libm::log(x) + b * libm::log1p(-x) - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(libm::exp(ln_front) * beta_continued_fraction(a, b, x)? / a)
    } else {
        Ok(1.0 - libm::exp(ln_front) * beta_continued_fraction(b, a, 1.0 - x)? / b)
    }
}

/// Upper tail P(T ≥ t) of Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> Result<f64, StatsError> {
    if !(df > 0.0) {
        return Err(StatsError::BadDegreesOfFreedom);
    }
    if t.is_nan() {
        return Err(StatsError::NonFinite);
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 0.0 } else { 1.0 });
    }
    // P(|T| ≥ |t|) = I_{df/(df+t²)}(df/2, 1/2); compute df/(df+t²) without
    // cancelling when t² dwarfs df.
    let x = 1.0 / (1.0 + t * t / df);
    let two_tail = regularized_incomplete_beta(x, df / 2.0, 0.5)?;
    Ok(if t >= 0.0 { two_tail / 2.0 } else { 1.0 - two_tail / 2.0 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationReport {
    pub n: usize,
    pub r_s: f64,
    pub t_stat: f64,
    pub df: usize,
    /// Tail probability in the direction of r_s's sign.
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    pub alpha: f64,
    /// `p_two_sided < alpha`.
    pub reject_null: bool,
}

fn check_alpha(alpha: f64) -> Result<(), StatsError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(StatsError::BadAlpha(alpha))
    }
}

/// Spearman test of no rank association, using
/// `t = r_s √((n−2)/(1−r_s²))` with n − 2 degrees of freedom.
pub fn correlation_report(x: &[f64], y: &[f64], alpha: f64) -> Result<CorrelationReport, StatsError> {
    check_alpha(alpha)?;
    let r_s = spearman(x, y)?;
    let n = x.len();
    let df = n - 2;
    let (t_stat, p_one_sided) = if r_s.abs() >= 1.0 {
        (libm::copysign(f64::INFINITY, r_s), 0.0)
    } else {
        let t = r_s * libm::sqrt(df as f64 / (1.0 - r_s * r_s));
        (t, student_t_sf(t.abs(), df as f64)?)
    };
    let p_two_sided = (2.0 * p_one_sided).min(1.0);
    Ok(CorrelationReport {
        n,
        r_s,
        t_stat,
        df,
        p_one_sided,
        p_two_sided,
        alpha,
        reject_null: p_two_sided < alpha,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sides {
    One,
    Two,
}

/// Smallest |r_s| that rejects at `alpha` for sample size `n` under the
/// t-approximation.
pub fn critical_rs(n: usize, alpha: f64, sides: Sides) -> Result<f64, StatsError> {
    check_alpha(alpha)?;
    if n < 3 {
        return Err(StatsError::TooFew(n));
    }
    let df = (n - 2) as f64;
    let target = match sides {
        Sides::One => alpha,
        Sides::Two => alpha / 2.0,
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while student_t_sf(hi, df)? > target {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if student_t_sf(mid, df)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok(t / libm::sqrt(df + t * t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        assert_eq!(average_ranks(&[10.0, 20.0, 30.0]).unwrap(), [1.0, 2.0, 3.0]);
        assert_eq!(average_ranks(&[5.0, 5.0]).unwrap(), [1.5, 1.5]);
        assert_eq!(average_ranks(&[1.0, 2.0, 2.0, 4.0]).unwrap(), [1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[3.0, f64::INFINITY, -1.0]).unwrap(), [2.0, 3.0, 1.0]);
        assert_eq!(average_ranks(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        let r = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 4.5 / libm::sqrt(22.5)).abs() < 1e-15);
        assert!((r - 0.9487).abs() < 1e-4);
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(StatsError::ConstantInput));
        assert_eq!(spearman(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::TooFew(2)));
    }

    #[test]
    fn t_tail_points() {
        for df in [1.0, 2.0, 7.0, 68.0, 1000.0] {
            assert_eq!(student_t_sf(0.0, df).unwrap(), 0.5);
        }
        let cauchy = 0.5 - libm::atan(1.0) / core::f64::consts::PI;
        assert!((student_t_sf(1.0, 1.0).unwrap() - cauchy).abs() < 1e-12);
        assert!((student_t_sf(1.0, 1.0).unwrap() - 0.25).abs() < 1e-12);
        // df = 2 closed form: ½(1 − t/√(t²+2))
        for t in [0.3, 1.0, 4.0, 25.0] {
            let exact = 0.5 * (1.0 - t / libm::sqrt(t * t + 2.0));
            assert!((student_t_sf(t, 2.0).unwrap() - exact).abs() < 1e-13 * exact.max(1e-3));
        }
    }

    #[test]
    fn report_for_perfect_antitone() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [9.0, 7.0, 5.0, 3.0, 1.0];
        let r = correlation_report(&x, &y, 0.001).unwrap();
        assert_eq!(r.r_s, -1.0);
        assert_eq!(r.p_one_sided, 0.0);
        assert!(r.reject_null);
        assert_eq!(r.df, 3);
    }

    #[test]
    fn critical_values() {
        let half = critical_rs(30, 0.5, Sides::Two).unwrap();
        assert!(half > 0.0 && half < 0.2);
        let one = critical_rs(30, 0.001, Sides::One).unwrap();
        assert!((one - 0.541).abs() < 1e-3, "{one}");
        assert!(critical_rs(30, 0.001, Sides::Two).unwrap() > one);
        assert_eq!(critical_rs(30, 1.0, Sides::One), Err(StatsError::BadAlpha(1.0)));
        assert_eq!(critical_rs(30, 0.0, Sides::One), Err(StatsError::BadAlpha(0.0)));
        let mut last = 1.0;
        for n in [5, 10, 20, 30, 70, 325] {
            let c = critical_rs(n, 0.001, Sides::Two).unwrap();
            assert!(c < last);
            last = c;
        }
    }
}
