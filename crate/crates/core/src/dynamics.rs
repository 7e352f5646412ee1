//! Iteration of complex maps, escape-time fields over pixel grids, and the
//! survivor-decay escape rate.
//!
//! The drivers here are sequential. Every per-pixel and per-seed quantity is
//! a pure function of its index ([`pixel_seed`], [`random_seed`]), and the
//! reductions ([`survivors_from_escapes`]) only count, so a parallel driver
//! that fills the same slots reproduces these results bit for bit.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::lseries::{AnTable, DirichletSeries};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub enum MapSpec {
    /// Truncated L-series `s ↦ Σ a_n n^{-s}`.
    Dirichlet(DirichletSeries),
    /// Polynomial, coefficients in ascending degree.
    Polynomial(Vec<Complex64>),
    /// `z ↦ λ e^z`.
    ScaledExp(Complex64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DynamicsError {
    EmptyPolynomial,
    BadWindow,
    EmptyGrid,
    NoSeeds,
    BadRadius,
    NoIterations,
    NonMonotoneSurvivors { at: usize },
    EmptySurvivors,
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::EmptyPolynomial => f.write_str("polynomial map needs at least one coefficient"),
            DynamicsError::BadWindow => f.write_str("window needs re_min < re_max and im_min < im_max"),
            DynamicsError::EmptyGrid => f.write_str("grid width and height must be at least 1"),
            DynamicsError::NoSeeds => f.write_str("need at least one seed"),
            DynamicsError::BadRadius => f.write_str("escape radius must be positive"),
            DynamicsError::NoIterations => f.write_str("need at least one iteration"),
            DynamicsError::NonMonotoneSurvivors { at } => {
                write!(f, "survivor counts increase at step {at}")
            }
            DynamicsError::EmptySurvivors => f.write_str("survivor sequence is empty"),
        }
    }
}

impl core::error::Error for DynamicsError {}

impl MapSpec {
    pub fn dirichlet(table: &AnTable) -> Self {
        MapSpec::Dirichlet(DirichletSeries::new(table))
    }

    pub fn polynomial(coefficients: Vec<Complex64>) -> Result<Self, DynamicsError> {
        if coefficients.is_empty() {
            return Err(DynamicsError::EmptyPolynomial);
        }
        Ok(MapSpec::Polynomial(coefficients))
    }

    /// Constant map `z ↦ c`.
    pub fn constant(c: Complex64) -> Self {
        MapSpec::Polynomial(alloc::vec![c])
    }

    pub fn identity() -> Self {
        MapSpec::Polynomial(alloc::vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
    }

    /// One step of the map.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        match self {
            MapSpec::Dirichlet(series) => series.eval(z),
            MapSpec::Polynomial(c) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for &k in c.iter().rev() {
                    acc = acc * z + k;
                }
                // Horner skips z entirely for a constant; keep NaN in, NaN out.
                if c.len() == 1 && !(z.re.is_finite() && z.im.is_finite()) {
                    return Complex64::new(f64::NAN, f64::NAN);
                }
                acc
            }
            MapSpec::ScaledExp(lambda) => {
                let r = libm::exp(z.re);
                let (sin, cos) = libm::sincos(z.im);
                lambda * Complex64::new(r * cos, r * sin)
            }
        }
    }
}

/// Free-function form of [`MapSpec::apply`].
pub fn apply_map(spec: &MapSpec, z: Complex64) -> Complex64 {
    spec.apply(z)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexWindow {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl ComplexWindow {
    /// `[-1.5, 4.5] × [0, 12]`.
    pub const DEFAULT: ComplexWindow = ComplexWindow {
        re_min: -1.5,
        re_max: 4.5,
        im_min: 0.0,
        im_max: 12.0,
    };

    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self, DynamicsError> {
        let w = ComplexWindow { re_min, re_max, im_min, im_max };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let ok = self.re_min < self.re_max
            && self.im_min < self.im_max
            && [self.re_min, self.re_max, self.im_min, self.im_max]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(DynamicsError::BadWindow)
        }
    }

    /// Mirror image under complex conjugation.
    pub fn conjugate(&self) -> Self {
        ComplexWindow {
            re_min: self.re_min,
            re_max: self.re_max,
            im_min: -self.im_max,
            im_max: -self.im_min,
        }
    }
}

/// Which iterates are tested against the escape radius.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EscapeMode {
    /// Escaped at the first k ≤ K with |z_k| > R.
    #[default]
    FirstCrossing,
    /// Escaped (at K) only if |z_K| > R.
    Final,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EscapeParams {
    pub radius: f64,
    pub max_iter: u32,
    pub mode: EscapeMode,
}

impl EscapeParams {
    pub fn new(radius: f64, max_iter: u32) -> Self {
        EscapeParams { radius, max_iter, mode: EscapeMode::FirstCrossing }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.radius > 0.0) {
            return Err(DynamicsError::BadRadius);
        }
        if self.max_iter == 0 {
            return Err(DynamicsError::NoIterations);
        }
        Ok(())
    }
}

impl Default for EscapeParams {
    /// R = 10⁵, K = 10.
    fn default() -> Self {
        EscapeParams::new(100_000.0, 10)
    }
}

/// Escape iterate of one orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Escape {
    At(u32),
    Never,
}

fn escaped(z: Complex64, radius: f64) -> bool {
    // NaN compares false, so test the complement.
    !(z.norm_sqr() <= radius * radius)
}

/// First k in 1..=K with |z_k| > R or z_k non-finite.
pub fn escape_iterate(spec: &MapSpec, z0: Complex64, params: &EscapeParams) -> Escape {
    let mut z = z0;
    for k in 1..=params.max_iter {
        z = spec.apply(z);
        match params.mode {
            EscapeMode::FirstCrossing => {
                if escaped(z, params.radius) {
                    return Escape::At(k);
                }
            }
            EscapeMode::Final => {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    break;
                }
            }
        }
    }
    if params.mode == EscapeMode::Final && escaped(z, params.radius) {
        return Escape::At(params.max_iter);
    }
    Escape::Never
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeField {
    pub window: ComplexWindow,
    pub width: usize,
    pub height: usize,
    pub max_iter: u32,
    /// Row-major, row 0 at `im_max`.
    pub cells: Vec<Escape>,
}

impl EscapeField {
    pub fn get(&self, i: usize, j: usize) -> Escape {
        self.cells[j * self.width + i]
    }
}

/// Seed at the centre of pixel `(i, j)`; row 0 is the top (`im_max`).
pub fn pixel_seed(window: &ComplexWindow, width: usize, height: usize, i: usize, j: usize) -> Complex64 {
    let re = window.re_min + (i as f64 + 0.5) * (window.re_max - window.re_min) / width as f64;
    let im = window.im_max - (j as f64 + 0.5) * (window.im_max - window.im_min) / height as f64;
    Complex64::new(re, im)
}

pub fn check_grid(window: &ComplexWindow, width: usize, height: usize, params: &EscapeParams) -> Result<(), DynamicsError> {
    window.validate()?;
    params.validate()?;
    if width == 0 || height == 0 {
        return Err(DynamicsError::EmptyGrid);
    }
    Ok(())
}

/// Escape-time field over a `width × height` grid, computed in row-major order.
pub fn escape_time_field(
    spec: &MapSpec,
    window: &ComplexWindow,
    width: usize,
    height: usize,
    params: &EscapeParams,
) -> Result<EscapeField, DynamicsError> {
    check_grid(window, width, height, params)?;
    let cells = (0..width * height)
        .map(|idx| escape_iterate(spec, pixel_seed(window, width, height, idx % width, idx / width), params))
        .collect();
    Ok(EscapeField { window: *window, width, height, max_iter: params.max_iter, cells })
}

/// Seed `i` of an escape-rate run: `u_x = U(m, 2i)`, `u_y = U(m, 2i+1)`.
pub fn random_seed(window: &ComplexWindow, master_seed: u64, i: u64) -> Complex64 {
    let ux = rng::unit(master_seed, 2 * i);
    let uy = rng::unit(master_seed, 2 * i + 1);
    Complex64::new(
        window.re_min + ux * (window.re_max - window.re_min),
        window.im_min + uy * (window.im_max - window.im_min),
    )
}

/// `S_0..S_K`: seeds not yet escaped after k steps.
pub fn survivors_from_escapes<I: IntoIterator<Item = Escape>>(escapes: I, max_iter: u32) -> Vec<u64> {
    let k_max = max_iter as usize;
    let mut escaped_at = alloc::vec![0u64; k_max + 1];
    let mut total = 0u64;
    for e in escapes {
        total += 1;
        if let Escape::At(k) = e {
            escaped_at[k as usize] += 1;
        }
    }
    let mut out = Vec::with_capacity(k_max + 1);
    let mut alive = total;
    out.push(alive);
    for &n in &escaped_at[1..] {
        alive -= n;
        out.push(alive);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// Escape rate; `f64::INFINITY` when every seed escapes at step 1.
    pub tau: f64,
    pub fit_points: usize,
    pub r_squared: f64,
}

/// Escape rate from survivor counts `S_0..S_K`.
///
/// τ is minus the least-squares slope of `ln S_k` over `1 ≤ k ≤ K` with
/// `S_k > 0`. Special cases: τ = 0 when nothing escapes, +∞ when `S_1 = 0`,
/// and `ln(S_0/S_k*)/k*` when only one point `k*` is available.
pub fn fit_decay(survivors: &[u64]) -> Result<DecayFit, DynamicsError> {
    let Some((&s0, rest)) = survivors.split_first() else {
        return Err(DynamicsError::EmptySurvivors);
    };
    if let Some(at) = survivors.windows(2).position(|w| w[1] > w[0]) {
        return Err(DynamicsError::NonMonotoneSurvivors { at: at + 1 });
    }
    let last = *survivors.last().unwrap();
    if last == s0 {
        return Ok(DecayFit { tau: 0.0, fit_points: rest.len(), r_squared: 1.0 });
    }
    if rest.first() == Some(&0) {
        return Ok(DecayFit { tau: f64::INFINITY, fit_points: 0, r_squared: 0.0 });
    }
    let points: Vec<(f64, f64)> = rest
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0)
        .map(|(i, &s)| ((i + 1) as f64, libm::log(s as f64)))
        .collect();
    if points.len() < 2 {
        // Monotone with S_1 > 0, so exactly one point: k* = 1.
        let (k, ln_s) = points[0];
        let tau = (libm::log(s0 as f64) - ln_s) / k;
        return Ok(DecayFit { tau, fit_points: 1, r_squared: 1.0 });
    }
    let n = points.len() as f64;
    let mean_k = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(k, y) in &points {
        sxx += (k - mean_k) * (k - mean_k);
        sxy += (k - mean_k) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(DecayFit {
        tau: (-slope).max(0.0),
        fit_points: points.len(),
        r_squared,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeRateEstimate {
    pub survivors: Vec<u64>,
    pub tau: f64,
    pub fit_points: usize,
    pub r_squared: f64,
    pub params: EscapeParams,
    pub n_seeds: u64,
    pub master_seed: u64,
    pub window: ComplexWindow,
}

impl EscapeRateEstimate {
    pub fn from_escapes<I: IntoIterator<Item = Escape>>(
        escapes: I,
        window: &ComplexWindow,
        n_seeds: u64,
        params: &EscapeParams,
        master_seed: u64,
    ) -> Result<Self, DynamicsError> {
        let survivors = survivors_from_escapes(escapes, params.max_iter);
        debug_assert_eq!(survivors[0], n_seeds);
        let fit = fit_decay(&survivors)?;
        Ok(EscapeRateEstimate {
            survivors,
            tau: fit.tau,
            fit_points: fit.fit_points,
            r_squared: fit.r_squared,
            params: *params,
            n_seeds,
            master_seed,
            window: *window,
        })
    }
}

pub fn check_escape_rate_args(window: &ComplexWindow, n_seeds: u64, params: &EscapeParams) -> Result<(), DynamicsError> {
    window.validate()?;
    params.validate()?;
    if n_seeds == 0 {
        return Err(DynamicsError::NoSeeds);
    }
    Ok(())
}

/// Monte Carlo escape rate over `n_seeds` counter-based random seeds.
pub fn estimate_escape_rate(
    spec: &MapSpec,
    window: &ComplexWindow,
    n_seeds: u64,
    params: &EscapeParams,
    master_seed: u64,
) -> Result<EscapeRateEstimate, DynamicsError> {
    check_escape_rate_args(window, n_seeds, params)?;
    let escapes = (0..n_seeds).map(|i| escape_iterate(spec, random_seed(window, master_seed, i), params));
    EscapeRateEstimate::from_escapes(escapes, window, n_seeds, params, master_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn apply_examples() {
        assert_eq!(MapSpec::identity().apply(c(3.0, 4.0)), c(3.0, 4.0));
        assert_eq!(MapSpec::ScaledExp(c(1.0, 0.0)).apply(c(0.0, 0.0)), c(1.0, 0.0));
        let zeta = MapSpec::dirichlet(&AnTable::zeta(1000));
        assert!((zeta.apply(c(2.0, 0.0)).re - 1.643_934_6).abs() < 1e-6);
        assert!(MapSpec::identity().apply(c(f64::NAN, 0.0)).re.is_nan());
        assert!(MapSpec::constant(c(2.0, 0.0)).apply(c(f64::INFINITY, 0.0)).re.is_nan());
        assert_eq!(MapSpec::polynomial(vec![]), Err(DynamicsError::EmptyPolynomial));
    }

    #[test]
    fn escape_examples() {
        let p = EscapeParams::default();
        assert_eq!(escape_iterate(&MapSpec::identity(), c(1.0, 5.0), &p), Escape::Never);
        assert_eq!(escape_iterate(&MapSpec::constant(c(1e6, 0.0)), c(0.0, 0.0), &p), Escape::At(1));
        let square = MapSpec::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        // 4, 16, 256, 65536, 4.29e9
        assert_eq!(escape_iterate(&square, c(2.0, 0.0), &p), Escape::At(5));
        let final_mode = EscapeParams { mode: EscapeMode::Final, ..p };
        assert_eq!(escape_iterate(&square, c(2.0, 0.0), &final_mode), Escape::At(10));
        assert_eq!(escape_iterate(&MapSpec::identity(), c(1.0, 5.0), &final_mode), Escape::Never);
    }

    #[test]
    fn non_finite_orbit_counts_as_escaped() {
        let p = EscapeParams::new(1e300, 10);
        let exp = MapSpec::ScaledExp(c(1.0, 0.0));
        // e^800 overflows on the first step.
        assert_eq!(escape_iterate(&exp, c(800.0, 0.0), &p), Escape::At(1));
    }

    #[test]
    fn pixel_centres() {
        let w = ComplexWindow::new(0.0, 4.0, 0.0, 2.0).unwrap();
        assert_eq!(pixel_seed(&w, 4, 2, 0, 0), c(0.5, 1.5));
        assert_eq!(pixel_seed(&w, 4, 2, 3, 1), c(3.5, 0.5));
    }

    #[test]
    fn field_examples() {
        let p = EscapeParams::default();
        let w = ComplexWindow::DEFAULT;
        let f = escape_time_field(&MapSpec::constant(c(1e6, 0.0)), &w, 4, 4, &p).unwrap();
        assert!(f.cells.iter().all(|&e| e == Escape::At(1)));
        let mut delta = vec![0; 1000];
        delta[0] = 1;
        let one = MapSpec::dirichlet(&AnTable::from_coefficients("one", 1, delta));
        let f = escape_time_field(&one, &w, 5, 7, &p).unwrap();
        assert!(f.cells.iter().all(|&e| e == Escape::Never));
        assert_eq!(escape_time_field(&one, &w, 0, 7, &p), Err(DynamicsError::EmptyGrid));
    }

    #[test]
    fn survivors_are_monotone() {
        let s = survivors_from_escapes([Escape::At(1), Escape::Never, Escape::At(3), Escape::At(1)], 4);
        assert_eq!(s, [4, 2, 2, 1, 1]);
    }

    #[test]
    fn fit_examples() {
        let flat = fit_decay(&[100; 11]).unwrap();
        assert_eq!(flat.tau, 0.0);
        let inf = fit_decay(&[1000, 0, 0, 0]).unwrap();
        assert_eq!(inf.tau, f64::INFINITY);
        let synth: Vec<u64> = (0..=10).map(|k| libm::round(1000.0 * libm::exp(-0.5 * k as f64)) as u64).collect();
        let fit = fit_decay(&synth).unwrap();
        assert!((fit.tau - 0.5).abs() < 0.02, "{fit:?}");
        assert!(fit.r_squared > 0.99);
        assert_eq!(fit.fit_points, 10);
        assert_eq!(fit_decay(&[5, 6]), Err(DynamicsError::NonMonotoneSurvivors { at: 1 }));
        assert_eq!(fit_decay(&[]), Err(DynamicsError::EmptySurvivors));
    }

    #[test]
    fn single_point_fallback() {
        // Only S_1 is positive.
        let fit = fit_decay(&[100, 10, 0, 0]).unwrap();
        assert_eq!(fit.fit_points, 1);
        assert!((fit.tau - libm::log(10.0)).abs() < 1e-15);
    }

    #[test]
    fn escape_rate_special_maps() {
        let p = EscapeParams::default();
        let w = ComplexWindow::DEFAULT;
        let id = estimate_escape_rate(&MapSpec::identity(), &w, 500, &p, 3).unwrap();
        assert_eq!(id.tau, 0.0);
        assert!(id.survivors.iter().all(|&s| s == 500));
        let big = estimate_escape_rate(&MapSpec::constant(c(1e6, 0.0)), &w, 500, &p, 3).unwrap();
        assert_eq!(big.tau, f64::INFINITY);
        assert_eq!(big.survivors[1], 0);
        assert_eq!(estimate_escape_rate(&MapSpec::identity(), &w, 0, &p, 3), Err(DynamicsError::NoSeeds));
    }

    #[test]
    fn random_seeds_fill_window() {
        let w = ComplexWindow::DEFAULT;
        for i in 0..2000 {
            let z = random_seed(&w, 11, i);
            assert!(z.re >= w.re_min && z.re < w.re_max && z.im >= w.im_min && z.im < w.im_max);
        }
    }
}
