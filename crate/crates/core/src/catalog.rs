//! Cremona "allcurves"-style catalog records, the semi-stable study
//! population, and stratified sampling of isogeny classes.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::arith::{is_prime, is_squarefree};
use crate::rng;

/// Weierstrass coefficients `[a1, a2, a3, a4, a6]` of
/// `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AInvariants(pub [i64; 5]);

impl AInvariants {
    pub fn a1(&self) -> i64 {
        self.0[0]
    }
    pub fn a2(&self) -> i64 {
        self.0[1]
    }
    pub fn a3(&self) -> i64 {
        self.0[2]
    }
    pub fn a4(&self) -> i64 {
        self.0[3]
    }
    pub fn a6(&self) -> i64 {
        self.0[4]
    }
}

impl fmt::Display for AInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a1, a2, a3, a4, a6] = self.0;
        write!(f, "[{a1},{a2},{a3},{a4},{a6}]")
    }
}

/// Weierstrass discriminant, `None` if it does not fit in an `i128`.
///
/// b2 = a1² + 4a2, b4 = 2a4 + a1a3, b6 = a3² + 4a6, b8 = (b2b6 − b4²)/4,
/// Δ = −b2²b8 − 8b4³ − 27b6² + 9b2b4b6.
pub fn checked_discriminant(a: &AInvariants) -> Option<i128> {
    let [a1, a2, a3, a4, a6] = a.0.map(i128::from);
    let b2 = a1.checked_mul(a1)?.checked_add(a2.checked_mul(4)?)?;
    let b4 = a4.checked_mul(2)?.checked_add(a1.checked_mul(a3)?)?;
    let b6 = a3.checked_mul(a3)?.checked_add(a6.checked_mul(4)?)?;
    // b2*b6 - b4^2 is always divisible by 4.
    let b8 = b2.checked_mul(b6)?.checked_sub(b4.checked_mul(b4)?)? / 4;
    let t1 = b2.checked_mul(b2)?.checked_mul(b8)?;
    let t2 = b4.checked_mul(b4)?.checked_mul(b4)?.checked_mul(8)?;
    let t3 = b6.checked_mul(b6)?.checked_mul(27)?;
    let t4 = b2.checked_mul(b4)?.checked_mul(b6)?.checked_mul(9)?;
    t1.checked_neg()?
        .checked_sub(t2)?
        .checked_sub(t3)?
        .checked_add(t4)
}

/// Weierstrass discriminant. Panics on `i128` overflow, which needs
/// coefficients far beyond any catalogued curve; use [`checked_discriminant`]
/// for untrusted input.
pub fn discriminant(a: &AInvariants) -> i128 {
    checked_discriminant(a).expect("discriminant overflows i128")
}

/// Isogeny class code: `a..z`, then `ba, bb, ...` (base 26 with `a` = 0).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassCode(String);

impl ClassCode {
    pub fn from_index(mut index: u64) -> Self {
        let mut digits = Vec::new();
        loop {
            digits.push(b'a' + (index % 26) as u8);
            index /= 26;
            if index == 0 {
                break;
            }
        }
        digits.reverse();
        ClassCode(String::from_utf8(digits).expect("ascii"))
    }

    /// Position of the class within its conductor, `a` = 0.
    pub fn index(&self) -> u64 {
        self.0
            .bytes()
            .fold(0u64, |acc, b| acc * 26 + u64::from(b - b'a'))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for ClassCode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let well_formed = !s.is_empty()
            && s.bytes().all(|b| b.is_ascii_lowercase())
            && (s.len() == 1 || !s.starts_with('a'));
        if well_formed && s.len() <= 8 {
            Ok(ClassCode(s.to_string()))
        } else {
            Err(())
        }
    }
}

impl Ord for ClassCode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for ClassCode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ClassCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Cremona label, e.g. `11a1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub conductor: u64,
    pub class: ClassCode,
    pub index: u32,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.conductor, self.class, self.index)
    }
}

impl FromStr for Label {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, CatalogError> {
        let bad = || CatalogError::BadLabel(s.to_string());
        let digits_end = s.find(|c: char| !c.is_ascii_digit()).ok_or_else(bad)?;
        let letters_end = s[digits_end..]
            .find(|c: char| !c.is_ascii_lowercase())
            .map(|i| i + digits_end)
            .ok_or_else(bad)?;
        let (n, rest) = s.split_at(digits_end);
        let (class, index) = rest.split_at(letters_end - digits_end);
        let conductor: u64 = n.parse().map_err(|_| bad())?;
        let index: u32 = index.parse().map_err(|_| bad())?;
        if conductor == 0 || index == 0 || n.starts_with('0') || index.to_string().len() != s.len() - letters_end {
            return Err(bad());
        }
        Ok(Label {
            conductor,
            class: class.parse().map_err(|_| bad())?,
            index,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveRecord {
    pub conductor: u64,
    pub isogeny_class: ClassCode,
    pub curve_index: u32,
    pub a_invariants: AInvariants,
    pub rank: u32,
    pub torsion: u32,
}

impl CurveRecord {
    pub fn label(&self) -> Label {
        Label {
            conductor: self.conductor,
            class: self.isogeny_class.clone(),
            index: self.curve_index,
        }
    }

    /// `(N, class)` key of the record's isogeny class.
    pub fn class_key(&self) -> (u64, ClassCode) {
        (self.conductor, self.isogeny_class.clone())
    }
}

/// One catalog line: `N class index [a1,a2,a3,a4,a6] rank torsion`.
impl fmt::Display for CurveRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {}",
            self.conductor,
            self.isogeny_class,
            self.curve_index,
            self.a_invariants,
            self.rank,
            self.torsion
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CatalogError {
    Malformed { line: usize, text: String, reason: &'static str },
    Singular { line: usize, label: String },
    Duplicate { line: usize, label: String },
    BadLabel(String),
    InvalidPlan(&'static str),
    InsufficientPopulation { eligible: usize, requested: usize },
}

impl fmt::Display for CatalogError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogError::Malformed { line, text, reason } => {
                write!(f, "line {line}: {reason}: {text:?}")
            }
            CatalogError::Singular { line, label } => {
                write!(f, "line {line}: curve {label} is singular (discriminant 0)")
            }
            CatalogError::Duplicate { line, label } => {
                write!(f, "line {line}: duplicate curve {label}")
            }
            CatalogError::BadLabel(s) => write!(f, "not a curve label: {s:?}"),
            CatalogError::InvalidPlan(why) => write!(f, "invalid sample plan: {why}"),
            CatalogError::InsufficientPopulation { eligible, requested } => write!(
                f,
                "only {eligible} eligible isogeny classes, {requested} requested"
            ),
        }
    }
}

impl core::error::Error for CatalogError {}

/// Parse a catalog. Blank lines are skipped; line numbers in errors are
/// 1-based.
pub fn parse_catalog(text: &str) -> Result<Vec<CurveRecord>, CatalogError> {
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record = parse_line(raw).map_err(|reason| CatalogError::Malformed {
            line,
            text: raw.to_string(),
            reason,
        })?;
        if checked_discriminant(&record.a_invariants) == Some(0) {
            return Err(CatalogError::Singular {
                line,
                label: record.label().to_string(),
            });
        }
        if !seen.insert(record.label()) {
            return Err(CatalogError::Duplicate {
                line,
                label: record.label().to_string(),
            });
        }
        records.push(record);
    }
    Ok(records)
}

fn parse_line(raw: &str) -> Result<CurveRecord, &'static str> {
    let fields: Vec<&str> = raw.split_whitespace().collect();
    if fields.len() != 6 {
        return Err("expected 6 whitespace-separated fields");
    }
    let conductor: u64 = fields[0].parse().map_err(|_| "bad conductor")?;
    if conductor < 11 {
        return Err("conductor below 11");
    }
    let isogeny_class: ClassCode = fields[1].parse().map_err(|_| "bad isogeny class")?;
    let curve_index: u32 = fields[2].parse().map_err(|_| "bad curve index")?;
    if curve_index == 0 {
        return Err("curve index must be positive");
    }
    let inner = fields[3]
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or("a-invariants must be bracketed")?;
    let mut a = [0i64; 5];
    let mut count = 0;
    for part in inner.split(',') {
        if count == 5 {
            return Err("expected 5 a-invariants");
        }
        a[count] = part.trim().parse().map_err(|_| "bad a-invariant")?;
        count += 1;
    }
    if count != 5 {
        return Err("expected 5 a-invariants");
    }
    let a_invariants = AInvariants(a);
    if checked_discriminant(&a_invariants).is_none() {
        return Err("a-invariants too large");
    }
    let rank: u32 = fields[4].parse().map_err(|_| "bad rank")?;
    let torsion: u32 = fields[5].parse().map_err(|_| "bad torsion order")?;
    if torsion == 0 {
        return Err("torsion order must be positive");
    }
    Ok(CurveRecord {
        conductor,
        isogeny_class,
        curve_index,
        a_invariants,
        rank,
        torsion,
    })
}

/// Semi-stable (squarefree conductor) with bad reduction at `bad_prime`.
pub fn is_eligible(record: &CurveRecord, bad_prime: u64) -> bool {
    bad_prime != 0 && record.conductor % bad_prime == 0 && is_squarefree(record.conductor)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplePlan {
    pub bad_prime: u64,
    pub conductor_lo: u64,
    pub conductor_hi: u64,
    pub sample_size: usize,
    /// Number of equal-width conductor bins; 0 means one bin per draw.
    pub strata: usize,
    pub master_seed: u64,
}

impl SamplePlan {
    fn validate(&self) -> Result<(), CatalogError> {
        if !is_prime(self.bad_prime) {
            return Err(CatalogError::InvalidPlan("bad_prime must be prime"));
        }
        if self.conductor_lo == 0 || self.conductor_lo > self.conductor_hi {
            return Err(CatalogError::InvalidPlan(
                "conductor range must satisfy 0 < lo <= hi",
            ));
        }
        Ok(())
    }

    fn strata_count(&self) -> usize {
        if self.strata == 0 {
            self.sample_size.max(1)
        } else {
            self.strata
        }
    }
}

/// Eligible isogeny classes in the plan's conductor range, each represented
/// by its optimal curve (index 1), ordered by conductor then class.
pub fn eligible_classes<'a>(plan: &SamplePlan, catalog: &'a [CurveRecord]) -> Vec<&'a CurveRecord> {
    let mut optimal: BTreeMap<(u64, ClassCode), &CurveRecord> = BTreeMap::new();
    for r in catalog {
        if r.curve_index == 1
            && (plan.conductor_lo..=plan.conductor_hi).contains(&r.conductor)
            && is_eligible(r, plan.bad_prime)
        {
            optimal.insert(r.class_key(), r);
        }
    }
    optimal.into_values().collect()
}

/// Stratified random draw of isogeny classes; returns their optimal curves
/// sorted by conductor then class.
///
/// The conductor range is cut into equal-width bins. Bins are visited
/// cyclically, and each visit to a non-empty bin removes one class chosen
/// uniformly from what remains in it. Draw `k` (counting across all visits)
/// uses counter `k` of the plan's master seed.
pub fn select_sample(plan: &SamplePlan, catalog: &[CurveRecord]) -> Result<Vec<CurveRecord>, CatalogError> {
    plan.validate()?;
    let classes = eligible_classes(plan, catalog);
    if classes.len() < plan.sample_size {
        return Err(CatalogError::InsufficientPopulation {
            eligible: classes.len(),
            requested: plan.sample_size,
        });
    }
    let strata = plan.strata_count();
    let width = u128::from(plan.conductor_hi - plan.conductor_lo + 1);
    let mut bins: Vec<Vec<&CurveRecord>> = (0..strata).map(|_| Vec::new()).collect();
    for c in classes {
        let offset = u128::from(c.conductor - plan.conductor_lo);
        let bin = (offset * strata as u128 / width) as usize;
        bins[bin].push(c);
    }

    let mut chosen = Vec::with_capacity(plan.sample_size);
    let mut draw = 0u64;
    let mut bin = 0usize;
    while chosen.len() < plan.sample_size {
        let pool = &mut bins[bin];
        if !pool.is_empty() {
            let i = rng::index(plan.master_seed, draw, pool.len());
            draw += 1;
            chosen.push(pool.remove(i).clone());
        }
        bin = (bin + 1) % strata;
    }
    chosen.sort_by(|a, b| a.class_key().cmp(&b.class_key()));
    Ok(chosen)
}
