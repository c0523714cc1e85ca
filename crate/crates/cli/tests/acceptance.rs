//! Acceptance criteria 1–10, one PASS/FAIL line each. A FAIL is a measured outcome and does not
//! abort the run; only infrastructure errors make the target exit nonzero.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dioph::angles::{g_index, PrecisionContext};
use dioph::constructions::{build_last_angle, build_line, build_sum, predicted_last_exponent, predicted_line_exponent, Mode};
use dioph::estimation::{exponent_estimate, family_sequence, planar_records, verify_direct_sum, Candidate, FixedTarget};
use dioph::lattice::{coordinate_projection_heights, int_vec, RationalSubspace};
use dioph::series::{format_rational, rat, BetaSchedule};
use dioph::target::slope;
use dioph_cli::verify::{angle_suite, exact_suite, minkowski_suite, random_subspace, Check};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEED: u64 = 1;
const BITS: u32 = 256;

const C3_TOL: f64 = 0.05;
const C3_BAND: f64 = 3.0;
const C4_H_MIN: u64 = 125;
const C4_H_MAX: u64 = 100_000;
const C5_TOL: f64 = 0.05;
const C6_TOL: f64 = 0.15;
const C6_BAND: f64 = 4.0;
const C7_TOL: f64 = 0.10;
const C7_MAX_BITS: f64 = 2.0e5;
const C8_TOL: f64 = 0.10;

type Outcome = Result<(bool, String), String>;

fn log_theta(h2: &BigInt, theta: u64) -> f64 {
    dioph::arith::log2_ratio(h2, &BigInt::one()) / 2.0 / (theta as f64).log2()
}

fn r2f(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b) / b
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn suite_summary(checks: &[Check]) -> (bool, String) {
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| format!("{} {}/{}", c.name, c.failures, c.cases)).collect();
    let total: usize = checks.iter().map(|c| c.cases).sum();
    (failed.is_empty(), if failed.is_empty() { format!("{} checks over {total} cases", checks.len()) } else { format!("failing: {}", failed.join(", ")) })
}

fn c1() -> Outcome {
    let (ok, summary) = suite_summary(&exact_suite(SEED, 100));
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut cases, mut bad) = (0, 0);
    while cases < 100 {
        let n = rng.gen_range(2..=6usize);
        let dim = rng.gen_range(1..n);
        let b = random_subspace(&mut rng, n, dim);
        let mask: u32 = rng.gen_range(1..(1u32 << n) - 1);
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let (k, p) = coordinate_projection_heights(&b, &idx).map_err(e)?;
        cases += 1;
        if &(k * p) != b.height_sq() {
            bad += 1;
        }
    }
    let b = RationalSubspace::from_integer_rows(&[int_vec(&[1, 0, 1]), int_vec(&[0, 1, 1])]).map_err(e)?;
    let (k, p) = coordinate_projection_heights(&b, &[0, 1]).map_err(e)?;
    let literal = bad == 0;
    Ok((
        ok && literal,
        format!(
            "identity suite: {summary}; literal projection product identity H(ker)·H(image) = H(B) holds in {}/{cases} general cases (e.g. span{{(1,0,1),(0,1,1)}} on coords 0,1: {}·{} vs H² = {}); only the inequality and the split case hold",
            cases - bad,
            k,
            p,
            b.height_sq()
        ),
    ))
}

fn c2() -> Outcome {
    let checks = angle_suite(SEED, 50, BITS);
    let (ok, summary) = suite_summary(&checks);
    Ok((ok, format!("{summary} at {BITS} bits; |φ − ∏ψ| ≤ 1e-25, |ψ_j(A,B) − ψ_j(A⊥,B⊥)| ≤ 1e-20, line_angle_exact within radii")))
}

fn c3() -> Outcome {
    let ctx = PrecisionContext::new(BITS);
    let c = build_line(3, 5, BetaSchedule::new(vec![rat(3, 1), rat(4, 1)]).map_err(e)?, SEED, Mode::Theorem).map_err(e)?;
    let mut ok = true;
    let mut parts = Vec::new();
    let mut band: f64 = 0.0;
    for (ee, want) in [(1usize, 4.0), (2, 12.0)] {
        let cands: Vec<Candidate> = (6..=9).map(|n| Ok(Candidate::new(format!("N{n}"), c.bne(n, ee)?))).collect::<dioph::Result<_>>().map_err(e)?;
        for (i, cand) in cands.iter().enumerate() {
            band = band.max((log_theta(cand.subspace.height_sq(), 5) - r2f(&c.alpha(6 + i))).abs());
        }
        let seq = family_sequence(&c.target, cands, 1, &ctx, "ch5", "").map_err(e)?;
        let est = exponent_estimate(&seq, Some(seq.records.len())).map_err(e)?;
        let s = seq.slopes();
        let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
        let r = rel(est.estimate, want);
        ok &= r.abs() <= C3_TOL;
        parts.push(format!("e={ee}: estimate {:.4} vs {want} ({:+.2}%), per-record slopes in [{lo:.4}, {:.4}]", est.estimate, 100.0 * r, est.estimate));
    }
    ok &= band <= C3_BAND;
    Ok((ok, format!("{}; height band max |log_θ H − α_N| = {band:.3} (≤ {C3_BAND})", parts.join("; "))))
}

fn c4() -> Outcome {
    let ctx = PrecisionContext::new(BITS);
    let c = build_line(2, 5, BetaSchedule::constant(rat(3, 1)).map_err(e)?, SEED, Mode::Theorem).map_err(e)?;
    let fixed = FixedTarget { realization: c.target.realize(7, &ctx).map_err(e)?, exact: None };
    let seq = planar_records(&fixed, C4_H_MAX * C4_H_MAX, &ctx, "").map_err(e)?;
    let lines: Vec<RationalSubspace> = (0..=6).map(|n| c.bne(n, 1)).collect::<dioph::Result<_>>().map_err(e)?;
    let lo = BigInt::from(C4_H_MIN * C4_H_MIN);
    let window: Vec<_> = seq.records.iter().filter(|r| r.height_sq >= lo).collect();
    let foreign: Vec<&str> = window.iter().filter(|r| !lines.iter().any(|l| l.pluecker() == r.subspace.pluecker())).map(|r| r.label.as_str()).collect();
    let sqrt2 = planar_records(&FixedTarget::sqrt_line(2, &ctx).map_err(e)?, 1000, &ctx, "").map_err(e)?;
    let labels: Vec<&str> = sqrt2.records.iter().map(|r| r.label.as_str()).collect();
    let convergents = ["(1,1)", "(2,3)", "(5,7)", "(12,17)"];
    let have_conv = convergents.iter().all(|c| labels.contains(c));
    let extra: Vec<&str> = labels.iter().copied().filter(|l| !convergents.contains(l)).take(4).collect();
    let ok = foreign.is_empty() && have_conv;
    Ok((
        ok,
        format!(
            "{} records with {C4_H_MIN} ≤ H ≤ {C4_H_MAX}, {} not equal to any B_N,1 (first: {}); √2 records {} {} the convergents (1,1) (2,3) (5,7) (12,17), plus the semiconvergents {:?}",
            window.len(),
            foreign.len(),
            foreign.iter().take(3).copied().collect::<Vec<_>>().join(" "),
            labels.iter().take(6).copied().collect::<Vec<_>>().join(" "),
            if have_conv { "contain" } else { "do not contain" },
            extra
        ),
    ))
}

fn c5() -> Outcome {
    let ctx = PrecisionContext::new(BITS);
    let alpha = rat(15, 1);
    let c = build_last_angle(1, 3, 5, alpha.clone(), SEED, Mode::Theorem).map_err(e)?;
    let jobs: Vec<(usize, usize)> = (1..=3).flat_map(|ee| (3..=5).map(move |n| (ee, n))).collect();
    let slopes: Vec<(usize, usize, f64)> = jobs
        .par_iter()
        .map(|&(ee, n)| {
            let b = c.family(n, ee)?;
            let m = c.target.psi(&b, 1, &ctx)?;
            Ok((ee, n, slope(m.log2(), b.height_sq())))
        })
        .collect::<dioph::Result<_>>()
        .map_err(e)?;
    let mut worst: f64 = 0.0;
    for &(ee, _, s) in &slopes {
        worst = worst.max(rel(s, 15f64.powi(ee as i32)).abs());
    }
    let sched = BetaSchedule::constant(alpha.clone()).map_err(e)?;
    let same = (1..=3).all(|ee| predicted_last_exponent(1, 3, &alpha, ee).ok() == Some(predicted_line_exponent(&sched, ee)));
    let shown: Vec<String> = slopes.iter().map(|(ee, n, s)| format!("e{ee}N{n}={s:.3}")).collect();
    Ok((worst <= C5_TOL && same, format!("max rel. error {:.3}% vs α^e; d=1 predictions equal constant-β line predictions: {same}; {}", 100.0 * worst, shown.join(" "))))
}

fn c6() -> Outcome {
    let ctx = PrecisionContext::new(BITS);
    let (d, q) = (2usize, 2usize);
    let c = build_last_angle(d, q, 5, rat(36, 1), SEED, Mode::Theorem).map_err(e)?;
    let mut dims_ok = true;
    let mut band: f64 = 0.0;
    for n in 1..=2 {
        for v in 1..=q {
            let b = c.bnv(n, v).map_err(e)?;
            dims_ok &= b.dim() == d * v;
            band = band.max((log_theta(b.height_sq(), 5) - d as f64 * 36f64.powi(n as i32)).abs());
        }
        for ee in d..=q * d {
            dims_ok &= c.cne(n, ee).map_err(e)?.dim() == ee;
        }
        for ee in 1..=d {
            dims_ok &= c.dne(n, ee).map_err(e)?.dim() == ee;
        }
    }
    let mut worst: f64 = 0.0;
    let mut shown = Vec::new();
    for ee in 1..=3 {
        let j = d.min(ee) - g_index(d, ee, c.n);
        let pred = r2f(&c.predicted(ee).map_err(e)?);
        for n in 1..=2 {
            let b = c.family(n, ee).map_err(e)?;
            let m = c.target.psi(&b, j, &ctx).map_err(e)?;
            let s = slope(m.log2(), b.height_sq());
            worst = worst.max(rel(s, pred).abs());
            shown.push(format!("e{ee}N{n}={s:.3}/{pred:.3}"));
        }
    }
    let ok = dims_ok && band <= C6_BAND && worst <= C6_TOL;
    Ok((ok, format!("dims {dims_ok}; height band {band:.3} (≤ {C6_BAND}); max rel. error {:.2}% (≤ 15%); {}", 100.0 * worst, shown.join(" "))))
}

fn c7() -> Outcome {
    let ctx = PrecisionContext::new(BITS);
    let s = build_sum(2, 2, 5, vec![vec![rat(5, 1), rat(5, 1)], vec![rat(30, 1), rat(30, 1)]], SEED, Mode::Relaxed, 1.1).map_err(e)?;
    let mut product_ok = true;
    let mut tuples = 0;
    for (blocks, es) in [(vec![0usize, 1], vec![2usize, 3, 4, 5]), (vec![0], vec![1, 2]), (vec![1], vec![1, 2])] {
        for ee in es {
            for ns in s.diagonal_schedule(&blocks, ee, 2.0e4).map_err(e)? {
                let h = s.cjn(&blocks, &ns, ee).map_err(e)?;
                let parts = s.block_heights_sq(&blocks, &ns, ee).map_err(e)?;
                product_ok &= h.height_sq() == &parts.iter().product::<BigInt>();
                tuples += 1;
            }
        }
    }
    let mut ok = product_ok;
    let mut parts = Vec::new();
    for (ee, k, exact) in [(3usize, 2usize, rat(150, 11)), (2, 2, rat(30, 7))] {
        let pred = s.predicted_sum_exponent(ee, k).map_err(e)?;
        let blocks = [0usize, 1];
        let cands: Vec<Candidate> = s
            .diagonal_schedule(&blocks, ee, C7_MAX_BITS)
            .map_err(e)?
            .into_iter()
            .map(|ns| Ok(Candidate::new(format!("{ns:?}"), s.cjn(&blocks, &ns, ee)?)))
            .collect::<dioph::Result<_>>()
            .map_err(e)?;
        let seq = family_sequence(&s.target, cands, k, &ctx, "ch7", "").map_err(e)?;
        let est = exponent_estimate(&seq, Some(seq.records.len())).map_err(e)?;
        let best = seq.records.iter().max_by(|a, b| a.slope.total_cmp(&b.slope)).map(|r| r.label.clone()).unwrap_or_default();
        let r = rel(est.estimate, r2f(&pred));
        ok &= r.abs() <= C7_TOL && pred == exact;
        parts.push(format!(
            "(e,k)=({ee},{k}): best slope {:.4} at N={best} vs {} ({:+.1}%, {} tuples)",
            est.estimate,
            format_rational(&pred),
            100.0 * r,
            seq.records.len()
        ));
    }
    Ok((ok, format!("block-height product identity on {tuples} tuples: {product_ok}; {}", parts.join("; "))))
}

fn c8() -> Outcome {
    let ctx = PrecisionContext::new(BITS);
    let s = build_sum(2, 1, 5, vec![vec![rat(3, 1)], vec![rat(5, 1)]], SEED, Mode::Relaxed, 1.1).map_err(e)?;
    let r = verify_direct_sum(&s, 1, 1, 2.0e5, None, &ctx).map_err(e)?;
    let blocks: Vec<String> = r.right.iter().map(|x| format!("{:?}={:.4}", x.blocks, x.estimate)).collect();
    Ok((r.relative_gap <= C8_TOL, format!("μ(A|1)_1 estimate {:.5} vs max of blocks {:.5} ({}); gap {:.3}%", r.left_estimate, r.right_max, blocks.join(", "), 100.0 * r.relative_gap)))
}

fn c9() -> Outcome {
    let (ok, summary) = suite_summary(&minkowski_suite(SEED, 200));
    Ok((ok, format!("minkowski_check on random saturated subspaces, n ≤ 5: {summary}")))
}

fn run_cli(out: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_dioph")).arg("--out").arg(out).args(args).status().map_err(e)?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("dioph {args:?} exited with {status}"))
    }
}

fn json_files(dir: &Path, base: &Path, out: &mut Vec<String>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            json_files(&p, base, out)?;
        } else if p.extension().is_some_and(|x| x == "json") {
            out.push(p.strip_prefix(base).unwrap().to_string_lossy().into_owned());
        }
    }
    out.sort();
    Ok(())
}

fn c10() -> Outcome {
    let tmp = tempfile::tempdir().map_err(e)?;
    let runs: Vec<Vec<&str>> = vec![
        vec!["--seed", "7", "construct", "--variant", "ch5", "--n", "3", "--theta", "5", "--betas", "3,4", "--N-max", "6"],
        vec!["--seed", "7", "measure", "--variant", "ch5", "--n", "3", "--betas", "3,4", "--N-min", "1", "--N-max", "4", "--duality"],
        vec!["--seed", "7", "--jobs", "3", "measure", "--variant", "ch8", "--d", "2", "--q", "2", "--alpha", "36", "--N-max", "1", "--e", "1,2"],
        vec!["enumerate", "--target", "sqrt:3", "--bound", "2000"],
        vec!["verify", "--cases", "12"],
    ];
    let mut total = 0;
    for (i, args) in runs.iter().enumerate() {
        let (a, b) = (tmp.path().join(format!("a{i}")), tmp.path().join(format!("b{i}")));
        run_cli(&a, args)?;
        run_cli(&b, args)?;
        let (mut fa, mut fb) = (Vec::new(), Vec::new());
        json_files(&a, &a, &mut fa).map_err(e)?;
        json_files(&b, &b, &mut fb).map_err(e)?;
        if fa != fb || fa.is_empty() {
            return Ok((false, format!("run {i}: artifact sets differ: {fa:?} vs {fb:?}")));
        }
        for f in &fa {
            if std::fs::read(a.join(f)).map_err(e)? != std::fs::read(b.join(f)).map_err(e)? {
                return Ok((false, format!("run {i}: {f} differs between identical runs")));
            }
            total += 1;
        }
    }
    Ok((true, format!("{total} JSON artifacts byte-identical across repeated runs of construct/measure/enumerate/verify")))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("exact identities", Duration::from_secs(60), c1),
        ("angle consistency", Duration::from_secs(120), c2),
        ("ch5 line n=3 β=(3,4)", Duration::from_secs(120), c3),
        ("planar record oracle", Duration::from_secs(180), c4),
        ("ch8 d=1 q=3 α=15", Duration::from_secs(180), c5),
        ("ch8 d=2 q=2 α=36", Duration::from_secs(600), c6),
        ("ch7 d=2 m=2 blocks (5,5),(30,30)", Duration::from_secs(300), c7),
        ("direct sum d=2 m=1 β 3 and 5", Duration::from_secs(180), c8),
        ("minkowski property", Duration::from_secs(120), c9),
        ("determinism", Duration::from_secs(300), c10),
    ];
    let mut broken = 0;
    let mut passed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = f();
        let dt = t.elapsed();
        match r {
            Ok((ok, detail)) => {
                let ok = ok && dt <= *budget;
                passed += ok as usize;
                println!("criterion {:>2} {}: {name}: {detail} [{:.1}s of {}s]", i + 1, if ok { "PASS" } else { "FAIL" }, dt.as_secs_f64(), budget.as_secs());
            }
            Err(err) => {
                broken += 1;
                println!("criterion {:>2} ERROR: {name}: {err}", i + 1);
            }
        }
    }
    println!("acceptance: {passed}/10 criteria pass");
    if broken > 0 {
        std::process::exit(1);
    }
}
