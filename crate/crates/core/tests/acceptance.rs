//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line with its
//! pinned tolerances, then asserts. Tests hold a shared lock so runtime
//! budgets are measured without contention.

use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use pucci_core::certify::{ak_sequence, IterationParams};
use pucci_core::dini::{dini_integral, rescale_to_small, Modulus};
use pucci_core::geometry::{rasterize, DomainSpec, Piece, Point, Role};
use pucci_core::harness::{
    flat_c1alpha_check, flat_hopf_check, notch_hopf_check, run_scenario, GrowthReport, ProblemSpec, ScenarioKind,
    TREND_START,
};
use pucci_core::pucci::{pucci_bruteforce, pucci_minus, pucci_plus, EllipticityPair, Sym2};
use pucci_core::solver::{solve_dirichlet, DirichletProblem, OperatorTag, SolutionField, SolveOptions, StencilSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Criterion 1
const C1_C0: f64 = 0.25;
const C1_ETA: f64 = 1.0 / 16.0;
const C1_ALPHA0: f64 = 0.25;
const C1_TAIL: f64 = 1e-12;
const C1_BUDGET: Duration = Duration::from_secs(1);
// Criterion 2
const C2_QUAD_REL: f64 = 1e-3;
const C2_BUDGET: Duration = Duration::from_secs(1);
// Criterion 3
const C3_MATRICES: usize = 100;
const C3_SAMPLES: usize = 10_000;
const C3_REL: f64 = 2e-2;
const C3_BUDGET: Duration = Duration::from_secs(5);
// Criterion 4
const C4_TOL: f64 = 1e-8;
const C4_EXACT_FACTOR: f64 = 10.0;
const C4_RATE: f64 = 1.5;
const C4_BUDGET: Duration = Duration::from_secs(180);
// Criterion 5
const C5_PAIRS: usize = 50;
const C5_H: f64 = 1.0 / 64.0;
const C5_TOL: f64 = 1e-8;
const C5_SLACK: f64 = 1e-7;
const C5_BUDGET: Duration = Duration::from_secs(300);
// Criterion 6
const C6_ALPHA_MIN: f64 = 0.05;
const C6_BUDGET: Duration = Duration::from_secs(600);
// Criterion 7
const C7_H: f64 = 1.0 / 256.0;
const C7_H_COARSE: f64 = 1.0 / 128.0;
const C7_K: u32 = 6;
const C7_BUDGET: Duration = Duration::from_secs(1800);

static LOCK: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

/// Writes past the test harness's output capture.
fn report(criterion: u32, pass: bool, summary: &str, details: &[String]) {
    let mut out = std::io::stdout().lock();
    let tag = if pass { "PASS" } else { "FAIL" };
    writeln!(out, "\n[{tag}] criterion {criterion}: {summary}").unwrap();
    for d in details {
        writeln!(out, "       {d}").unwrap();
    }
    out.flush().unwrap();
}

fn artifact_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

type Artifacts = Vec<(String, Vec<u8>)>;

fn save(artifacts: &Artifacts) {
    let dir = artifact_dir();
    for (name, bytes) in artifacts {
        std::fs::write(dir.join(name), bytes).unwrap();
    }
}

#[test]
fn criterion_1_certified_sum() {
    let _g = serial();
    let start = Instant::now();
    let mut worst_total = 0.0f64;
    let mut worst_tail = 0.0f64;
    let mut all = true;
    let mut details = Vec::new();
    for omega in [Modulus::zero(), Modulus::power(1.0, 1.0), Modulus::power(0.5, 1.0)] {
        let (r1, small) = rescale_to_small(&omega, C1_C0).unwrap();
        for alpha0 in [C1_ALPHA0, 0.5] {
            let p = IterationParams {
                c0: C1_C0,
                eta: C1_ETA,
                alpha0,
                horizon: pucci_core::certify::DEFAULT_HORIZON,
            };
            let rep = ak_sequence(&small, &p).unwrap();
            let total = rep.partial_sum + rep.tail_bound;
            let ok = rep.bound_3c0_ok && total <= 3.0 * C1_C0 && rep.tail_bound < C1_TAIL;
            all &= ok;
            worst_total = worst_total.max(total);
            worst_tail = worst_tail.max(rep.tail_bound);
            details.push(format!(
                "{:?} r1={r1} alpha0={alpha0}: sum={} tail={:e} smallness={}",
                omega.family,
                rep.partial_sum,
                rep.tail_bound,
                rep.conditions["geometric_smallness"].holds
            ));
        }
    }
    let elapsed = start.elapsed();
    let pass = all && elapsed < C1_BUDGET;
    report(
        1,
        pass,
        &format!(
            "max sum+tail = {worst_total} <= 3c0 = {}, max tail = {worst_tail:e} < {C1_TAIL:e}, {elapsed:?} < {C1_BUDGET:?}",
            3.0 * C1_C0
        ),
        &details,
    );
    assert!(pass);
}

#[test]
fn criterion_2_dini_dichotomy() {
    let _g = serial();
    let start = Instant::now();
    let mut details = Vec::new();
    let mut all = true;
    let cases = [
        (Modulus::power(1.0, 1.0), true),
        (Modulus::power(0.5, 1.0), true),
        (Modulus::power(0.25, 1.0), true),
        (Modulus::log_inverse(0.5, 1.0), false),
        (Modulus::log_inverse(1.0, 1.0), false),
        (Modulus::log_inverse(2.0, 1.0), true),
    ];
    for (omega, expect) in cases {
        let v = dini_integral(&omega, 1.0, 1e-10).unwrap();
        all &= v.is_dini == expect;
        details.push(format!("{:?}: is_dini={} (expected {expect})", omega.family, v.is_dini));
    }
    let n = 2000;
    let radii: Vec<f64> = (0..n)
        .map(|i| 10f64.powf(-12.0 + 12.0 * i as f64 / (n - 1) as f64))
        .collect();
    let tab = Modulus::power(0.5, 1.0).tabulate(&radii).unwrap();
    let r0 = 1.0;
    let v = dini_integral(&tab, r0, 1e-5).unwrap();
    let exact = 2.0 * f64::sqrt(r0);
    let rel = (v.integral_value.unwrap() - exact).abs() / exact;
    all &= v.is_dini && rel <= C2_QUAD_REL;
    let elapsed = start.elapsed();
    let pass = all && elapsed < C2_BUDGET;
    report(
        2,
        pass,
        &format!("dichotomy as expected, tabulated power(1/2) rel err {rel:e} <= {C2_QUAD_REL:e}, {elapsed:?} < {C2_BUDGET:?}"),
        &details,
    );
    assert!(pass);
}

#[test]
fn criterion_3_pucci_oracle() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..C3_MATRICES {
        let m = Sym2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let norm = m.spectral_norm();
        for (l, big_l) in [(1.0, 2.0), (1.0, 10.0)] {
            let ell = EllipticityPair::new(l, big_l).unwrap();
            let (sup, inf) = pucci_bruteforce(&m, &ell, C3_SAMPLES);
            let e = (pucci_plus(&m, &ell) - sup).abs().max((pucci_minus(&m, &ell) - inf).abs());
            worst = worst.max(e / norm);
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= C3_REL && elapsed < C3_BUDGET;
    report(
        3,
        pass,
        &format!("max |pucci - bruteforce|/|m| = {worst:e} <= {C3_REL:e}, {elapsed:?} < {C3_BUDGET:?}"),
        &[],
    );
    assert!(pass);
}

fn laplace_solve(h: f64, exact: &(dyn Fn(Point) -> f64 + Sync), tol: f64) -> SolutionField {
    let mask = Arc::new(rasterize(&DomainSpec::half_ball(1.0), h, &StencilSet::new(3).unwrap()).unwrap());
    let g = |p: Point, _: Piece| exact(p);
    let problem = DirichletProblem {
        mask,
        operator: OperatorTag::Laplace,
        ell: EllipticityPair::laplace(),
        source: &|_| 0.0,
        boundary: &g,
        source_description: "zero".into(),
    };
    let options = SolveOptions {
        tol,
        ..SolveOptions::default()
    };
    solve_dirichlet(&problem, &options).unwrap()
}

fn max_error(field: &SolutionField, exact: &dyn Fn(Point) -> f64) -> f64 {
    field
        .mask
        .interior()
        .iter()
        .map(|&i| (field.values[i as usize] - exact(field.mask.point(i as usize))).abs())
        .fold(0.0, f64::max)
}

fn re_z_five_halves(p: Point) -> f64 {
    let r = p[0].hypot(p[1]);
    r.powf(2.5) * (2.5 * p[1].atan2(p[0])).cos()
}

struct Laplace {
    exact_err: f64,
    errs: [f64; 2],
    artifacts: Artifacts,
}

fn criterion_4_run() -> Laplace {
    let product = |p: Point| p[0] * p[1];
    let mut artifacts = Artifacts::new();
    let mut table = String::from("data,h,max_error\n");
    let mut csv = |name: &str, f: &SolutionField| {
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        artifacts.push((name.to_string(), buf));
    };
    let u = laplace_solve(1.0 / 64.0, &product, C4_TOL);
    let exact_err = max_error(&u, &product);
    csv("c4_product_h64.csv", &u);
    table.push_str(&format!("x1x2,{},{exact_err}\n", 1.0 / 64.0));
    let mut errs = [0.0; 2];
    for (i, n) in [64u32, 128].into_iter().enumerate() {
        let h = 1.0 / n as f64;
        let u = laplace_solve(h, &re_z_five_halves, C4_TOL);
        errs[i] = max_error(&u, &re_z_five_halves);
        csv(&format!("c4_power_h{n}.csv"), &u);
        table.push_str(&format!("re_z_5_2,{h},{}\n", errs[i]));
    }
    artifacts.push(("c4_errors.csv".into(), table.into_bytes()));
    Laplace {
        exact_err,
        errs,
        artifacts,
    }
}

fn criterion_4_first() -> &'static (Laplace, Duration) {
    static RUN: OnceLock<(Laplace, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let run = criterion_4_run();
        (run, start.elapsed())
    })
}

#[test]
fn criterion_4_laplace_exactness_and_convergence() {
    let _g = serial();
    let (run, elapsed) = criterion_4_first();
    save(&run.artifacts);
    let ratio = run.errs[0] / run.errs[1];
    let pass = run.exact_err <= C4_EXACT_FACTOR * C4_TOL && ratio >= C4_RATE && *elapsed < C4_BUDGET;
    report(
        4,
        pass,
        &format!(
            "x1x2 error {:e} <= {:e}, Re z^(5/2) error ratio {ratio} >= {C4_RATE} ({:e} -> {:e}), {elapsed:?} < {C4_BUDGET:?}",
            run.exact_err,
            C4_EXACT_FACTOR * C4_TOL,
            run.errs[0],
            run.errs[1]
        ),
        &[],
    );
    assert!(pass);
}

fn dirichlet_range(field: &SolutionField) -> (f64, f64) {
    let mask = &field.mask;
    field
        .hit_values
        .iter()
        .chain(
            mask.roles()
                .iter()
                .zip(&field.values)
                .filter(|(r, _)| r.is_dirichlet())
                .map(|(_, v)| v),
        )
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

#[test]
fn criterion_5_comparison_and_maximum_principles() {
    let _g = serial();
    let start = Instant::now();
    let mask = Arc::new(rasterize(&DomainSpec::half_ball(1.0), C5_H, &StencilSet::new(3).unwrap()).unwrap());
    let options = SolveOptions {
        tol: C5_TOL,
        ..SolveOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut order_violations = 0usize;
    let mut range_violations = 0usize;
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..C5_PAIRS {
        let op = if rng.gen_bool(0.5) {
            OperatorTag::PucciPlus
        } else {
            OperatorTag::PucciMinus
        };
        let ell = if rng.gen_bool(0.5) {
            EllipticityPair::new(1.0, 2.0).unwrap()
        } else {
            EllipticityPair::new(1.0, 10.0).unwrap()
        };
        let a: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let w: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-4.0..4.0));
        let b: [f64; 2] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-4.0..4.0));
        let (c, d, e) = (rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5), rng.gen_range(0.0..1.0));
        let g1 = move |p: Point, _: Piece| a[0] + a[1] * p[0] + a[2] * p[1] + a[3] * (w[0] * p[0] + w[1] * p[1] + w[2]).sin();
        let g2 = move |p: Point, piece: Piece| g1(p, piece) + c + d * (1.0 + (3.0 * p[0] - 2.0 * p[1]).sin());
        let f1 = move |p: Point| b[0] + b[1] * (v[0] * p[0] + v[1] * p[1] + v[2]).cos();
        let f2 = move |p: Point| f1(p) - e * (1.0 + (2.0 * p[0] + p[1]).cos());
        let solve = |g: &(dyn Fn(Point, Piece) -> f64 + Sync), f: &(dyn Fn(Point) -> f64 + Sync)| {
            let problem = DirichletProblem {
                mask: mask.clone(),
                operator: op,
                ell,
                source: f,
                boundary: g,
                source_description: "random".into(),
            };
            solve_dirichlet(&problem, &options).unwrap()
        };
        let u1 = solve(&g1, &f1);
        let u2 = solve(&g2, &f2);
        for &i in mask.interior() {
            let gap = u1.values[i as usize] - u2.values[i as usize];
            worst_gap = worst_gap.max(gap);
            if gap > C5_SLACK {
                order_violations += 1;
            }
        }
        let u0 = solve(&g1, &|_| 0.0);
        let (lo, hi) = dirichlet_range(&u0);
        for &i in mask.interior() {
            let x = u0.values[i as usize];
            if x < lo - C5_SLACK || x > hi + C5_SLACK {
                range_violations += 1;
            }
        }
    }
    assert!(mask.roles().iter().any(|r| *r == Role::Interior));
    let elapsed = start.elapsed();
    let pass = order_violations == 0 && range_violations == 0 && elapsed < C5_BUDGET;
    report(
        5,
        pass,
        &format!(
            "{C5_PAIRS} pairs at h = 1/64: {order_violations} order and {range_violations} range violations (slack {C5_SLACK:e}), max u1-u2 = {worst_gap:e}, {elapsed:?} < {C5_BUDGET:?}"
        ),
        &[],
    );
    assert!(pass);
}

#[test]
fn criterion_6_flat_boundary_constants() {
    let _g = serial();
    let start = Instant::now();
    let hs = [1.0 / 128.0, 1.0 / 256.0];
    let mut details = Vec::new();
    let mut all = true;
    for op in [OperatorTag::PucciPlus, OperatorTag::PucciMinus] {
        let mut spec = ProblemSpec::canonical(ScenarioKind::FlatC1alpha, hs[0]);
        spec.operator = op;
        let study = flat_c1alpha_check(&spec, &hs).unwrap();
        let ok = study.pass
            && study.rows.iter().all(|r| r.alpha.is_some_and(|a| a > C6_ALPHA_MIN) && r.c.is_finite());
        all &= ok;
        details.push(format!(
            "c1alpha {}: alpha = {:?}, spread {} <= 0.2, C = {:?}",
            op.name(),
            study.rows.iter().map(|r| r.alpha).collect::<Vec<_>>(),
            study.alpha_spread,
            study.rows.iter().map(|r| r.c).collect::<Vec<_>>()
        ));
    }
    let spec = ProblemSpec::canonical(ScenarioKind::FlatHopf, hs[0]);
    let study = flat_hopf_check(&spec, &hs).unwrap();
    all &= study.pass;
    details.push(format!(
        "flat hopf: c = {:?}, spread {} <= 0.25",
        study.rows.iter().map(|r| r.c).collect::<Vec<_>>(),
        study.c_spread
    ));
    let spec = ProblemSpec::canonical(ScenarioKind::NotchHopf, hs[0]);
    let notch = notch_hopf_check(&spec, &[0.0, 0.1, 0.2, 0.3, 0.4]).unwrap();
    all &= notch.pass && notch.min_c > 0.0;
    details.push(format!(
        "notch at h = 1/128: c(a) = {:?}, min {}",
        notch.rows.iter().map(|r| (r.param, r.c)).collect::<Vec<_>>(),
        notch.min_c
    ));
    let elapsed = start.elapsed();
    let pass = all && elapsed < C6_BUDGET;
    report(
        6,
        pass,
        &format!("alpha > {C6_ALPHA_MIN} stable 20%, hopf c > 0 stable 25%, notch min c > 0, {elapsed:?} < {C6_BUDGET:?}"),
        &details,
    );
    assert!(pass);
}

const TREND_KINDS: [ScenarioKind; 4] = [
    ScenarioKind::Lipschitz,
    ScenarioKind::Hopf,
    ScenarioKind::AntiLipschitz,
    ScenarioKind::AntiHopf,
];

/// The criterion recomputed from the raw profile, independently of the
/// scenario's own verdicts.
fn trend_holds(report: &GrowthReport) -> bool {
    let window = |p: usize| -> Vec<f64> {
        let q = report.resolved_q(p);
        let ks: Vec<u32> = q.iter().map(|x| x.0).filter(|&k| k >= TREND_START).collect();
        if ks != (TREND_START..=C7_K).collect::<Vec<_>>() {
            return Vec::new();
        }
        q.iter().filter(|x| x.0 >= TREND_START).map(|x| x.1).collect()
    };
    let ratio = || report.omega_tilde_ratio(C7_K, TREND_START).unwrap();
    (0..report.probes.len()).all(|p| match report.scenario {
        ScenarioKind::Lipschitz => {
            let max = report.resolved_big_q().iter().map(|x| x.1).fold(0.0, f64::max);
            p > 0 || max <= 4.0 * report.big_q[0]
        }
        ScenarioKind::Hopf => {
            let q0 = report.q[p][0];
            let min = report.resolved_q(p).iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
            q0 > 0.0 && min >= q0 / 4.0
        }
        ScenarioKind::AntiLipschitz => {
            let w = window(p);
            !w.is_empty()
                && w.windows(2).all(|x| x[1] > x[0])
                && w[w.len() - 1] / w[0] >= 0.5 * ratio()
        }
        ScenarioKind::AntiHopf => {
            let w = window(p);
            !w.is_empty() && w.windows(2).all(|x| x[1] < x[0]) && w[w.len() - 1] <= w[0] * ratio() * 2.0
        }
        _ => unreachable!(),
    })
}

struct Trends {
    /// `(scenario, h, report)` for both grids.
    reports: Vec<(ScenarioKind, f64, GrowthReport)>,
    artifacts: Artifacts,
}

fn criterion_7_run() -> Trends {
    let mut reports = Vec::new();
    let mut artifacts = Artifacts::new();
    for h in [C7_H, C7_H_COARSE] {
        for kind in TREND_KINDS {
            let mut spec = ProblemSpec::canonical(kind, h);
            spec.horizon = C7_K;
            let (_, report) = run_scenario(&spec).unwrap();
            let mut buf = Vec::new();
            report.write_csv(&mut buf).unwrap();
            artifacts.push((format!("c7_{}_h{}.csv", kind.name(), (1.0 / h) as u32), buf));
            reports.push((kind, h, report));
        }
    }
    Trends { reports, artifacts }
}

fn criterion_7_first() -> &'static (Trends, Duration) {
    static RUN: OnceLock<(Trends, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let run = criterion_7_run();
        (run, start.elapsed())
    })
}

#[test]
fn criterion_7_growth_trends() {
    let _g = serial();
    let (run, elapsed) = criterion_7_first();
    save(&run.artifacts);
    let mut details = Vec::new();
    let mut fine = Vec::new();
    let mut coarse = Vec::new();
    for (kind, h, report) in &run.reports {
        let ours = trend_holds(report);
        let theirs = report.passed();
        details.push(format!("{} h = 1/{}: criterion {ours}, scenario verdicts {theirs}", kind.name(), (1.0 / h) as u32));
        for v in &report.verdicts {
            details.push(format!("  {} {}: {}", if v.pass { "pass" } else { "fail" }, v.name, v.detail));
        }
        if *h == C7_H {
            fine.push(ours && theirs);
        } else {
            coarse.push(ours && theirs);
        }
    }
    let stable = fine == coarse;
    let pass = fine.iter().all(|&x| x) && stable && *elapsed < C7_BUDGET;
    report(
        7,
        pass,
        &format!(
            "lipschitz/hopf/anti_lipschitz/anti_hopf at h = 1/256: {fine:?}, identical at 1/128: {stable}, {elapsed:?} < {C7_BUDGET:?}"
        ),
        &details,
    );
    assert!(pass);
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn criterion_8_determinism() {
    let _g = serial();
    let start = Instant::now();
    let mut reference = criterion_4_first().0.artifacts.clone();
    reference.extend(criterion_7_first().0.artifacts.clone());
    let mut mismatches = Vec::new();
    for threads in [1, 4] {
        let mut again = in_pool(threads, || criterion_4_run().artifacts);
        again.extend(in_pool(threads, || criterion_7_run().artifacts));
        assert_eq!(again.len(), reference.len());
        for ((name, a), (_, b)) in reference.iter().zip(&again) {
            if a != b {
                mismatches.push(format!("{name} differs with {threads} workers"));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches.is_empty();
    report(
        8,
        pass,
        &format!(
            "{} criterion 4/7 CSVs byte-identical across repeated runs with 1 and 4 workers ({elapsed:?})",
            reference.len()
        ),
        &mismatches,
    );
    assert!(pass);
}
