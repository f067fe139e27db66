//! End-to-end acceptance checks, one line of output per criterion on stderr.

use std::io::Write;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::Rng;

use internmatch_core::bvn::bvn_decompose;
use internmatch_core::couples::approximate_decompose;
use internmatch_core::harness::{run_bench, BenchConfig, BenchMode, MarketOutcome, MarketResult};
use internmatch_core::instances::{
    brute_force_best_decomposition, coloring_reduction_exact, decomposition_from_coloring,
    find_edge_coloring, gen_coloring_reduction, gen_lower_bound, gen_random_market,
    gen_small_probs, CubicGraph,
};
use internmatch_core::lp::{build_trade_lp, intern_happiness, solve_trade_lp, total_happiness};
use internmatch_core::rsd::{rsd_exact, rsd_monte_carlo};
use internmatch_core::seeding::rng_for;
use internmatch_core::{Matrix, Problem, RawProblem, RawUnit};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn four_interns() -> Problem {
    Problem::new(
        RawProblem::default()
            .hospital("A", 1)
            .hospital("B", 1)
            .hospital("C", 1)
            .hospital("D", 1)
            .unit(RawUnit::single("Alice", &["A", "B", "C", "D"]))
            .unit(RawUnit::single("Bob", &["A", "B", "D", "C"]))
            .unit(RawUnit::single("Charlie", &["A", "B", "D", "C"]))
            .unit(RawUnit::single("Diane", &["A", "B", "C", "D"])),
    )
    .unwrap()
}

fn r(n: u64, d: u64) -> Ratio<u64> {
    Ratio::new(n, d)
}

/// four-intern example RSD probabilities worked out by hand, rows Alice, Bob, Charlie, Diane.
fn four_interns_rsd() -> Vec<Vec<Ratio<u64>>> {
    let alice = vec![r(1, 4), r(1, 4), r(5, 12), r(1, 12)];
    let bob = vec![r(1, 4), r(1, 4), r(1, 12), r(5, 12)];
    vec![alice.clone(), bob.clone(), bob, alice]
}

fn criterion_1() -> Verdict {
    let p = four_interns();
    let start = Instant::now();
    let exact = rsd_exact(&p).unwrap();
    let elapsed = start.elapsed();
    let expected = four_interns_rsd();
    let matches = (0..4).all(|i| exact.row(i) == expected[i]);
    verdict(
        matches && elapsed < Duration::from_secs(1),
        format!("rows match exactly: {matches}; {elapsed:.2?} (limit 1 s)"),
    )
}

fn criterion_2() -> Verdict {
    const N: u64 = 100_000;
    let p = four_interns();
    let exact = rsd_exact(&p).unwrap().to_matrix();
    let start = Instant::now();
    let mut breaches = 0;
    let mut cells = 0;
    for seed in 0..10 {
        let mc = rsd_monte_carlo(&p, N, seed).unwrap();
        for i in 0..4 {
            for h in 0..4 {
                let q = exact.get(i, h);
                let band = 3.0 * (q * (1.0 - q) / N as f64).sqrt();
                cells += 1;
                if (mc.matrix.get(i, h) - q).abs() > band {
                    breaches += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    // 160 cells at a 0.27% two-sided 3σ rate: about 0.4 breaches expected.
    verdict(
        breaches <= 1 && elapsed < Duration::from_secs(10),
        format!("{breaches} of {cells} entries outside 3σ (allowed 1); {elapsed:.2?} (limit 10 s)"),
    )
}

fn criterion_3() -> Verdict {
    let p = four_interns();
    let baseline = rsd_exact(&p).unwrap().to_matrix();
    let lp = build_trade_lp(&p, &baseline).unwrap();
    let trade = solve_trade_lp(&lp).unwrap();
    let alice = vec![0.25, 0.25, 0.5, 0.0];
    let bob = vec![0.25, 0.25, 0.0, 0.5];
    let hand = Matrix::for_problem(&p, vec![alice.clone(), bob.clone(), bob, alice]).unwrap();
    let hand_total = total_happiness(&p, &hand).unwrap();
    let before = intern_happiness(&p, &baseline).unwrap();
    let after = intern_happiness(&p, &trade.matrix).unwrap();
    let worst = before
        .iter()
        .zip(&after)
        .map(|(b, a)| b - a)
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(
        trade.objective >= hand_total - 1e-9 && worst <= 1e-9,
        format!(
            "LP total {:.9} vs hand profile {hand_total:.9}; largest happiness loss {worst:.2e}",
            trade.objective
        ),
    )
}

fn random_caps(rng: &mut impl Rng, cols: usize, rows: usize, min: usize) -> Vec<usize> {
    let mut caps = vec![min; cols];
    for _ in 0..rows - min * cols {
        caps[rng.gen_range(0..cols)] += 1;
    }
    caps
}

fn criterion_4() -> Verdict {
    let mut rng = rng_for(4, &[]);
    let start = Instant::now();
    let (mut worst_err, mut k_violations) = (0.0f64, 0);
    for t in 0..1000 {
        let cols = rng.gen_range(1..=10);
        let rows = rng.gen_range(cols..=50);
        let caps = random_caps(&mut rng, cols, rows, 1);
        let (problem, target) = gen_random_market(rows, 0, &caps, t).unwrap();
        let cc = bvn_decompose(&problem, &target).unwrap();
        let mix = cc.mixture(rows, cols);
        let nnz = (0..rows)
            .flat_map(|i| (0..cols).map(move |h| (i, h)))
            .filter(|&(i, h)| target.get(i, h) > 0.0)
            .count();
        if cc.len() > nnz {
            k_violations += 1;
        }
        for i in 0..rows {
            for h in 0..cols {
                worst_err = worst_err.max((mix.get(i, h) - target.get(i, h)).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst_err < 1e-9 && k_violations == 0 && elapsed < Duration::from_secs(60),
        format!(
            "max entry error {worst_err:.2e}; {k_violations} decompositions with K > nnz; {elapsed:.2?} (limit 60 s)"
        ),
    )
}

/// Max row-L1 error, couple row-L1 error and the 2/q̲ bound for one instance.
fn bound_run(problem: &Problem, target: &Matrix) -> (f64, f64, f64) {
    let d = approximate_decompose(problem, target).unwrap();
    let rep = d.report(problem, target, 1.0).unwrap();
    (
        rep.max_row_l1,
        rep.max_couple_row_l1,
        2.0 / problem.min_capacity() as f64,
    )
}

struct BoundRuns {
    verdict: Verdict,
    worst_couple: f64,
}

fn criterion_5() -> BoundRuns {
    let mut rng = rng_for(5, &[]);
    let (mut ok, mut generated, mut rejected, mut worst_slack, mut worst_couple) =
        (0, 0, 0, f64::NEG_INFINITY, 0.0f64);
    let mut seed = 0;
    while generated < 1000 {
        seed += 1;
        let cols = rng.gen_range(1..=25);
        let rows = rng.gen_range(4 * cols..=100.max(4 * cols));
        if rows > 100 {
            continue;
        }
        let caps = random_caps(&mut rng, cols, rows, 4);
        let couples = rng.gen_range(0..=rows / 6);
        let Ok((problem, target)) = gen_random_market(rows - 2 * couples, couples, &caps, seed)
        else {
            rejected += 1;
            continue;
        };
        generated += 1;
        let (err, couple_err, bound) = bound_run(&problem, &target);
        worst_slack = worst_slack.max(err - bound);
        worst_couple = worst_couple.max(couple_err);
        if err <= bound + 1e-9 {
            ok += 1;
        }
    }
    let mut lb = Vec::new();
    for n in [8, 16, 32] {
        let (problem, target) = gen_lower_bound(n).unwrap();
        let (err, couple_err, bound) = bound_run(&problem, &target);
        worst_couple = worst_couple.max(couple_err);
        lb.push((n, err, bound));
    }
    let lb_ok = lb.iter().all(|&(_, e, b)| e <= b + 1e-9);
    let lb_text: Vec<String> = lb
        .iter()
        .map(|(n, e, b)| format!("n={n}: {e:.4} ≤ {b:.4}"))
        .collect();
    BoundRuns {
        verdict: verdict(
            ok == 1000 && lb_ok,
            format!(
                "{ok}/1000 random instances within 2/q̲ (worst margin {worst_slack:+.3e}, {rejected} generator rejections); {}",
                lb_text.join(", ")
            ),
        ),
        worst_couple,
    }
}

fn criterion_6() -> BoundRuns {
    let (problem, target) = gen_lower_bound(16).unwrap();
    let (err, couple_err, _) = bound_run(&problem, &target);
    let q = problem.min_capacity() as f64;
    let (lo, hi) = (2.0 / (q + 2.0), 2.0 / q);
    BoundRuns {
        verdict: verdict(
            q == 8.0 && (lo - 1e-9..=hi + 1e-9).contains(&err),
            format!("q = {q}; error {err:.12} in [{lo}, {hi}]"),
        ),
        worst_couple: couple_err,
    }
}

fn criterion_7() -> Verdict {
    let (problem, target) = gen_small_probs(1, 1).unwrap();
    let start = Instant::now();
    let oracle = brute_force_best_decomposition(&problem, &target).unwrap();
    let elapsed = start.elapsed();
    verdict(
        oracle.epsilon >= 2.0 / 3.0 - 1e-9 && elapsed < Duration::from_secs(300),
        format!(
            "optimal ε = {:.12} over {} assignments; {elapsed:.2?} (limit 5 min)",
            oracle.epsilon, oracle.assignments
        ),
    )
}

fn criterion_8() -> Verdict {
    let graph = CubicGraph::k4();
    let coloring = find_edge_coloring(&graph).expect("K4 is 3-edge-colorable");
    let (problem, exact) = coloring_reduction_exact(&graph).unwrap();
    let (_, target) = gen_coloring_reduction(&graph).unwrap();
    let cc = decomposition_from_coloring(&graph, &coloring).unwrap();
    let m = problem.n_hospitals();
    let third = 1.0 / 3.0;
    let weights_exact = cc.len() == 3 && cc.terms.iter().all(|(w, _)| *w == third);
    // with every weight exactly the double nearest 1/3, sum in rationals
    let mut sum = vec![vec![Ratio::from_integer(0u64); m]; problem.n_interns()];
    for (_, a) in &cc.terms {
        for (i, &h) in a.hospital_of.iter().enumerate() {
            sum[i][h] += r(1, 3);
        }
    }
    let reconstructs = sum == exact;
    let float_err = {
        let mix = cc.mixture(problem.n_interns(), m);
        (0..problem.n_interns())
            .flat_map(|i| (0..m).map(move |h| (i, h)))
            .map(|(i, h)| (mix.get(i, h) - target.get(i, h)).abs())
            .fold(0.0, f64::max)
    };
    let saturated = cc
        .terms
        .iter()
        .all(|(_, a)| a.occupancy(m) == problem.capacities());
    let valid = cc.validate(&problem).is_ok();
    verdict(
        weights_exact && reconstructs && saturated && valid,
        format!(
            "rational reconstruction exact: {reconstructs}; every hospital saturated: {saturated}; valid: {valid}; float error {float_err:.1e}"
        ),
    )
}

fn done(outcomes: &[MarketOutcome]) -> Vec<&MarketResult> {
    outcomes.iter().filter_map(MarketOutcome::result).collect()
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

const BENCH_SEED: u64 = 1;
const BENCH_TRIALS: u64 = 1000;
const PAIRED_MARKETS: usize = 40;

fn criterion_10(subsample: &[MarketOutcome]) -> Verdict {
    let mut random = BenchConfig::new(BenchMode::Random, 20, BENCH_SEED);
    random.trials = BENCH_TRIALS;
    let random = run_bench(&random).unwrap();
    let random = done(&random);
    let min_cap_ok = random.iter().all(|r| r.min_capacity == 4);
    let random_mean = mean(random.iter().map(|r| r.max_row_l1));

    let mut cap = BenchConfig::new(BenchMode::CapacityCouples, PAIRED_MARKETS, BENCH_SEED);
    cap.trials = BENCH_TRIALS;
    let cap = run_bench(&cap).unwrap();
    // same seed and index, so both modes share the singles of each market
    let pairs: Vec<(f64, f64)> = cap
        .iter()
        .zip(subsample)
        .filter_map(|(c, s)| Some((s.result()?.max_row_l1, c.result()?.max_row_l1)))
        .collect();
    let sub_mean = mean(pairs.iter().map(|p| p.0));
    let cap_mean = mean(pairs.iter().map(|p| p.1));
    verdict(
        !random.is_empty() && min_cap_ok && random_mean < 0.5 && !pairs.is_empty() && cap_mean <= sub_mean,
        format!(
            "random mode mean max-row-L1 {random_mean:.4} over {} markets (q̲ = 4: {min_cap_ok}); paired over {} markets: capacity-driven {cap_mean:.4} vs subsample {sub_mean:.4}",
            random.len(),
            pairs.len()
        ),
    )
}

fn criterion_11(subsample: &[MarketOutcome]) -> Verdict {
    let wins = done(subsample)
        .iter()
        .filter(|r| r.lp_first_choice.unwrap() >= r.rsd_first_choice.unwrap())
        .count();
    let mean_gain = mean(
        done(subsample)
            .iter()
            .map(|r| r.lp_first_choice.unwrap() - r.rsd_first_choice.unwrap()),
    );
    verdict(
        wins * 100 >= 95 * subsample.len(),
        format!(
            "LP first-choice ≥ RSD in {wins}/{} runs (skipped markets count as failures); mean gain {mean_gain:.2}",
            subsample.len()
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let mut report: Vec<(u32, Verdict)> = Vec::new();
    let mut record = |n: u32, v: Verdict| {
        // straight to the handle: the test harness only captures the print macros
        writeln!(
            std::io::stderr(),
            "criterion {n}: {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        )
        .unwrap();
        report.push((n, v));
    };
    record(1, criterion_1());
    record(2, criterion_2());
    record(3, criterion_3());
    record(4, criterion_4());
    let c5 = criterion_5();
    let c6 = criterion_6();
    let couple_err = c5.worst_couple.max(c6.worst_couple);
    record(5, c5.verdict);
    record(6, c6.verdict);
    record(7, criterion_7());
    record(8, criterion_8());
    record(
        9,
        verdict(
            couple_err <= 1e-9,
            format!("largest couple row-L1 over the bound runs {couple_err:.2e}"),
        ),
    );

    let mut sub = BenchConfig::new(BenchMode::Subsample, 100, BENCH_SEED);
    sub.trials = BENCH_TRIALS;
    let subsample = run_bench(&sub).unwrap();
    record(10, criterion_10(&subsample[..PAIRED_MARKETS]));
    record(11, criterion_11(&subsample));

    let failed: Vec<u32> = report
        .iter()
        .filter(|(_, v)| !v.pass)
        .map(|(n, _)| *n)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
