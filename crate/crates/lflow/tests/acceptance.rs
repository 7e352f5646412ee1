//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run alone with `cargo test -p lflow --test acceptance`. Set
//! `LFLOW_ACCEPT=1,3,5` to run a subset.

use std::time::Instant;

use lflow::config::RunConfig;
use lflow::pipeline::{self, CatalogIndex, MapSelector};
use lflow_core::catalog::{parse_catalog, AInvariants, CurveRecord};
use lflow_core::dynamics::{
    escape_iterate, estimate_escape_rate, fit_decay, pixel_seed, ComplexWindow, Escape, EscapeParams, MapSpec,
};
use lflow_core::formal::formal_group_coefficients;
use lflow_core::lseries::build_an_table;
use lflow_core::stats::{correlation_report, spearman, student_t_sf};
use lflow_core::Complex64;

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/allcurves.fixture.txt");

fn fixture() -> &'static [CurveRecord] {
    static CATALOG: std::sync::OnceLock<Vec<CurveRecord>> = std::sync::OnceLock::new();
    CATALOG.get_or_init(|| parse_catalog(&std::fs::read_to_string(FIXTURE).expect("fixture catalog")).expect("fixture parses"))
}

/// xorshift64*, independent of the crate's generator.
struct Xs(u64);

impl Xs {
    fn next(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    fn range(&mut self, lo: i64, hi: i64) -> i64 {
        lo + (self.next() % (hi - lo + 1) as u64) as i64
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- 1

/// Projective points on the reduction mod p, singular points included.
fn projective_points(a: &[i64; 5], p: i64) -> i64 {
    let m = |v: i128| v.rem_euclid(p as i128);
    let [a1, a2, a3, a4, a6] = a.map(i128::from);
    let mut count = 1;
    for x in 0..p as i128 {
        let rhs = m(x * x * x + a2 * x * x + a4 * x + a6);
        for y in 0..p as i128 {
            if m(y * y + a1 * x * y + a3 * y) == rhs {
                count += 1;
            }
        }
    }
    count
}

/// a_n from local Euler factors: a_p = p + 1 − #E(F_p), prime powers from
/// the power series of 1/(1 − a_p T + χ(p) p T²), then multiplicativity.
fn oracle_coefficients(a: &[i64; 5], conductor: u64, len: usize) -> Vec<i64> {
    let mut out = vec![0i64; len + 1];
    for (n, slot) in out.iter_mut().enumerate().skip(1) {
        let mut rest = n;
        let mut value = 1i64;
        let mut p = 2;
        while rest > 1 {
            if rest % p == 0 {
                let mut k = 0;
                while rest % p == 0 {
                    rest /= p;
                    k += 1;
                }
                let ap = p as i64 + 1 - projective_points(a, p as i64);
                let chi = if conductor % p as u64 == 0 { 0 } else { p as i64 };
                let mut series = vec![1i64, ap];
                for j in 2..=k {
                    series.push(ap * series[j - 1] - chi * series[j - 2]);
                }
                value *= series[k];
            }
            p += 1;
        }
        *slot = value;
    }
    out.remove(0);
    out
}

fn criterion_1(catalog: &[CurveRecord]) -> Outcome {
    let start = Instant::now();
    let index = CatalogIndex::new(catalog);
    let labels = ["11a1", "15a1", "37a1", "57a1", "99a1"];
    let mut mismatches = Vec::new();
    for label in labels {
        let r = index.get(label).expect("fixture curve");
        let got = build_an_table(label, &r.a_invariants, r.conductor, 100).unwrap();
        let want = oracle_coefficients(&r.a_invariants.0, r.conductor, 100);
        if got.coefficients != want {
            mismatches.push(label);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches.is_empty() && secs < 10.0,
        format!("a_n, n <= 100, for {labels:?} vs point-count oracle; mismatches {mismatches:?}; {secs:.2} s (< 10 s)"),
    )
}

// ---------------------------------------------------------------- 2

fn poly_mul(a: &[i128], b: &[i128]) -> Vec<i128> {
    let mut out = vec![0i128; 10];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate().take(10 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = Xs(0x1234_5678_9ABC_DEF1);
    let mut tuples: Vec<[i64; 5]> = (0..25).map(|_| [0; 5].map(|_: i64| rng.range(-20, 20))).collect();
    tuples.push([0; 5]);
    let mut failures = 0;
    for a in &tuples {
        let e = formal_group_coefficients("t", &AInvariants(*a)).unwrap();
        let mut w = vec![0i128; 10];
        w[3] = 1;
        w[4..].copy_from_slice(&e.coefficients);
        let mut z = vec![0i128; 10];
        z[1] = 1;
        let z2 = poly_mul(&z, &z);
        let w2 = poly_mul(&w, &w);
        let w3 = poly_mul(&w2, &w);
        let [a1, a2, a3, a4, a6] = a.map(i128::from);
        let zw = poly_mul(&z, &w);
        let z2w = poly_mul(&z2, &w);
        let zw2 = poly_mul(&z, &w2);
        let rhs: Vec<i128> = (0..10)
            .map(|d| (d == 3) as i128 + a1 * zw[d] + a2 * z2w[d] + a3 * w2[d] + a4 * zw2[d] + a6 * w3[d])
            .collect();
        if rhs != w {
            failures += 1;
        }
    }
    let zero = formal_group_coefficients("0", &AInvariants([0; 5])).unwrap().coefficients == [0; 6];
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && zero && secs < 1.0,
        format!("25 random tuples + zero tuple, identity through degree 9: {failures} failures; zero tuple A = 0: {zero}; {secs:.3} s (< 1 s)"),
    )
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for tau0 in [0.1, 0.5, 1.0] {
        let s: Vec<u64> = (0..=10).map(|k| (25_000.0 * (-tau0 * k as f64).exp()).round() as u64).collect();
        let tau = fit_decay(&s).unwrap().tau;
        pass &= (tau - tau0).abs() <= 0.02;
        details.push(format!("tau0={tau0}: {tau:.5}"));
    }
    let params = EscapeParams::default();
    let w = ComplexWindow::DEFAULT;
    let identity = estimate_escape_rate(&MapSpec::identity(), &w, 25_000, &params, 1).unwrap().tau;
    let huge = estimate_escape_rate(&MapSpec::constant(Complex64::new(1e12, 0.0)), &w, 25_000, &params, 1)
        .unwrap()
        .tau;
    pass &= identity == 0.0 && huge == f64::INFINITY;
    details.push(format!("identity: {identity}; constant 1e12: {huge}"));
    outcome(pass, format!("{} (tolerance 0.02)", details.join(", ")))
}

// ---------------------------------------------------------------- 4

fn criterion_4(catalog: &[CurveRecord]) -> Outcome {
    let manifest = "15a1\n21a1\n33a1\n";
    let mut observe = Vec::new();
    let mut render = Vec::new();
    for threads in [1, 4, 8, 1] {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::default();
        c.cache_dir = dir.path().join("cache");
        c.threads = threads;
        c.n_seeds = 5000;
        c.width = 60;
        c.height = 120;
        observe.push(pipeline::cmd_observe(&c, catalog, manifest).unwrap());
        render.push(pipeline::cmd_render(&c, catalog, &"21a1".parse::<MapSelector>().unwrap()).unwrap());
        // warm cache
        observe.push(pipeline::cmd_observe(&c, catalog, manifest).unwrap());
    }
    let same_obs = observe.windows(2).all(|w| w[0] == w[1]);
    let same_img = render.windows(2).all(|w| w[0] == w[1]);
    outcome(
        same_obs && same_img,
        format!(
            "3-curve manifest, threads 1/4/8/1 with cold and warm cache: observe identical {same_obs}, render identical {same_img}"
        ),
    )
}

// ---------------------------------------------------------------- 5

fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&u| u < v).count() as f64;
            let equal = x.iter().filter(|&&u| u == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Exact permutation p-value in the direction of the observed sign.
fn exact_p(x: &[f64], y: &[f64], r: f64) -> f64 {
    let mut perms = Vec::new();
    permutations(&mut (0..y.len()).collect(), 0, &mut perms);
    let rx = brute_ranks(x);
    let count = |pred: &dyn Fn(f64) -> bool| {
        perms
            .iter()
            .filter(|p| {
                let yp: Vec<f64> = p.iter().map(|&i| y[i]).collect();
                pred(pearson(&rx, &brute_ranks(&yp)))
            })
            .count() as f64
            / perms.len() as f64
    };
    let upper = count(&|v| v >= r - 1e-12);
    let lower = count(&|v| v <= r + 1e-12);
    if r > 0.0 {
        upper
    } else if r < 0.0 {
        lower
    } else {
        upper.min(lower)
    }
}

fn criterion_5() -> Outcome {
    let mut rng = Xs(0xDEAD_BEEF_CAFE_F00D);
    let mut max_rank_err = 0.0f64;
    let mut max_perm_gap = 0.0f64;
    let mut n5 = 0;
    let mut cases = 0;
    while cases < 100 {
        let n = if cases % 4 == 0 { 5 } else { rng.range(3, 40) as usize };
        let (x, y): (Vec<f64>, Vec<f64>) = if n == 5 {
            // Tie-free: with ties the exact n = 5 distribution is too coarse
            // for any continuous approximation.
            let mut draw = || {
                let mut v: Vec<f64> = Vec::new();
                while v.len() < 5 {
                    let c = rng.range(-1000, 1000) as f64 / 7.0;
                    if !v.contains(&c) {
                        v.push(c);
                    }
                }
                v
            };
            (draw(), draw())
        } else {
            let levels = rng.range(2, 8);
            (
                (0..n).map(|_| rng.range(0, levels) as f64 * 0.25).collect(),
                (0..n).map(|_| rng.range(0, levels) as f64 * 0.25).collect(),
            )
        };
        let Ok(r) = spearman(&x, &y) else { continue };
        cases += 1;
        max_rank_err = max_rank_err.max((r - pearson(&brute_ranks(&x), &brute_ranks(&y))).abs());
        if n == 5 {
            n5 += 1;
            let rep = correlation_report(&x, &y, 0.05).unwrap();
            max_perm_gap = max_perm_gap.max((rep.p_one_sided - exact_p(&x, &y, r)).abs());
        }
    }
    let half = student_t_sf(0.0, 7.0).unwrap();
    let cauchy = student_t_sf(1.0, 1.0).unwrap();
    let pass = max_rank_err <= 1e-12 && max_perm_gap <= 0.05 && (half - 0.5).abs() <= 1e-12 && (cauchy - 0.25).abs() <= 1e-12;
    outcome(
        pass,
        format!(
            "100 cases (ties in all n != 5): max |r_s - pearson(ranks)| = {max_rank_err:.1e} (<= 1e-12); {n5} n=5 cases: max |p_t - p_exact| = {max_perm_gap:.4} (<= 0.05); sf(0) = {half}, Cauchy sf(1) = {cauchy}"
        ),
    )
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let p_of = |n: usize, r: f64| {
        let df = (n - 2) as f64;
        let t = r * (df / (1.0 - r * r)).sqrt();
        student_t_sf(t.abs(), df).unwrap()
    };
    let p70 = p_of(70, -0.76);
    let p325 = p_of(325, -0.78);
    let within = |p: f64, target: f64| (p / target).log10().abs() <= 2.0;
    let (ok70, ok325) = (within(p70, 3.107e-14), within(p325, 7.9098e-69));
    let mut detail = format!(
        "n=70 r=-0.76: p = {p70:.4e} vs 3.107e-14 ({}); n=325 r=-0.78: p = {p325:.4e} vs 7.9098e-69 ({})",
        if ok70 { "in band" } else { "OUT OF BAND" },
        if ok325 { "in band" } else { "OUT OF BAND" }
    );
    if !(ok70 && ok325) {
        detail += "; the published values were computed by an unknown method";
    }
    outcome(ok70 && ok325, detail)
}

// ---------------------------------------------------------------- 7

fn sample_decision(catalog: &[CurveRecord], master_seed: u64, n_seeds: u64, cache: &std::path::Path) -> (f64, f64, bool) {
    let mut c = RunConfig::preset("sample1").unwrap();
    c.master_seed = master_seed;
    c.n_seeds = n_seeds;
    c.cache_dir = cache.to_path_buf();
    let sample = pipeline::cmd_sample(&c, catalog).unwrap();
    let pool = lflow::parallel::thread_pool(0).unwrap();
    let records: Vec<&CurveRecord> = sample.records.iter().collect();
    let rows = pipeline::observe_records(&c, &records, &pool).unwrap();
    let rep = pipeline::correlate_rows(&rows, c.alpha).unwrap().report;
    (rep.r_s, rep.p_two_sided, rep.r_s <= -0.45 && rep.p_two_sided < 0.001)
}

fn criterion_7(catalog: &[CurveRecord]) -> Outcome {
    let start = Instant::now();
    let cache = tempfile::tempdir().unwrap();
    let seeds = [1u64, 2, 3, 4, 5];
    let mut lines = Vec::new();
    let mut hits_full = 0;
    let mut hits_reduced = 0;
    for &m in &seeds {
        let (r, p, ok) = sample_decision(catalog, m, 25_000, cache.path());
        let (r5, p5, ok5) = sample_decision(catalog, m, 5_000, cache.path());
        hits_full += ok as usize;
        hits_reduced += ok5 as usize;
        lines.push(format!("seed {m}: r_s={r:.3} p={p:.2e} | 5000 seeds: r_s={r5:.3} p={p5:.2e}"));
    }
    let pass = hits_full >= 4 && hits_reduced >= 4;
    outcome(
        pass,
        format!(
            "sample1 (r_s <= -0.45 and p < 0.001): {hits_full}/5 at 25000 seeds, {hits_reduced}/5 at 5000 seeds (need >= 4); {:.0} s\n        {}",
            start.elapsed().as_secs_f64(),
            lines.join("\n        ")
        ),
    )
}

// ---------------------------------------------------------------- 8

fn criterion_8(catalog: &[CurveRecord]) -> Outcome {
    let c = RunConfig { width: 16, height: 16, cache_dir: tempfile::tempdir().unwrap().keep(), ..RunConfig::default() };
    let params = c.escape_params();
    let mut details = Vec::new();
    let mut pass = true;
    for sel in ["11a1", "nonic:11a1", "exp:1"] {
        let selector: MapSelector = sel.parse().unwrap();
        let spec = pipeline::build_map(&c, catalog, &selector).unwrap();
        let field = pipeline::render_field(&c, catalog, &selector).unwrap();
        let mut bad = 0;
        for j in 0..16 {
            for i in 0..16 {
                let z = pixel_seed(&c.window, 16, 16, i, j);
                if field.get(i, j) != escape_iterate(&spec, z, &params) {
                    bad += 1;
                }
            }
        }
        let mirrored = RunConfig { window: c.window.conjugate(), ..c.clone() };
        let mirror = pipeline::render_field(&mirrored, catalog, &selector).unwrap();
        let symmetric = (0..16).all(|j| (0..16).all(|i| field.get(i, j) == mirror.get(i, 15 - j)));
        let escapes = field.cells.iter().filter(|e| matches!(e, Escape::At(_))).count();
        pass &= bad == 0 && symmetric;
        details.push(format!("{sel}: {bad} oracle mismatches, mirror symmetric {symmetric}, {escapes}/256 escape"));
    }
    outcome(pass, details.join("; "))
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("LFLOW_ACCEPT")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let wanted = |k: u32| only.as_ref().is_none_or(|o| o.contains(&k));
    let criteria: [(u32, &str, &dyn Fn() -> Outcome); 8] = [
        (1, "coefficient oracle", &|| criterion_1(fixture())),
        (2, "formal-group identity", &criterion_2),
        (3, "escape-rate calibration", &criterion_3),
        (4, "determinism across threads", &|| criterion_4(fixture())),
        (5, "statistics oracle", &criterion_5),
        (6, "published p-value band", &criterion_6),
        (7, "sample1 headline correlation", &|| criterion_7(fixture())),
        (8, "rendering oracle and symmetry", &|| criterion_8(fixture())),
    ];
    let mut failed = Vec::new();
    for (k, name, run) in criteria {
        if !wanted(k) {
            continue;
        }
        let o = run();
        println!("[{}] {k}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(k);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
