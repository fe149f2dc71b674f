//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

use std::io::Write;
use std::time::{Duration, Instant};

use deflate_core::corpus::{generate_breadth_system, generate_random_power_system, load_case, list_cases, PowerSystemSpec};
use deflate_core::deflation::{cdss, rank_guess_pipeline, CdssOptions, RankGuessOptions};
use deflate_core::exec::Execution;
use deflate_core::linalg::numerical_rank;
use deflate_core::refine::{classify_convergence, diagnose, newton_refine, Convergence, Verdict};
use deflate_core::regularity::ThetaPolicy;
use deflate_core::report::{run_case, run_pipeline, PipelineOptions, RunReport};
use deflate_core::text::parse_system;
use deflate_core::verify::{interval_eval, Interval, IntervalVector};
use deflate_core::{Matrix, Monomial, PolySystem, Polynomial, RankMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, format!("took {:.3}s, limit {limit}s", elapsed.as_secs_f64()))
}

fn fixed(theta: f64, eps: f64) -> PipelineOptions {
    let mut o = PipelineOptions::default();
    o.refine.theta = ThetaPolicy::Fixed(theta);
    o.refine.eps = eps;
    o
}

fn dz2() -> Check {
    let case = load_case("dz2").map_err(|e| e.to_string())?;
    let t = Instant::now();
    let run = run_pipeline(&case.system, case.approx_zero.coords(), &fixed(0.005, 0.005)).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let d = &run.outcome.deflated;
    ensure(d.size() == 3 && d.n_alpha() == 0, format!("size {} with {} new", d.size(), d.n_alpha()))?;
    let vars = case.system.vars().clone();
    let x1 = Polynomial::variable(vars.clone(), 0);
    let x2 = Polynomial::variable(vars, 1);
    for want in [&x1, &x2, &case.system.polys()[2]] {
        ensure(
            d.system.polys().iter().any(|f| f.is_scalar_multiple_of(want, 1e-12)),
            format!("no multiple of {want} in the deflated system"),
        )?;
    }
    ensure(run.outcome.diagnosis.convergence == Convergence::Quadratic, "Newton not quadratic")?;
    let b = run.projected_inclusion().ok_or("not verified")?;
    let target = [0.0, 0.0, -1.0];
    for (x, t) in b.0.iter().zip(target) {
        ensure((x.lo() - t).abs() <= 1e-12 && (x.hi() - t).abs() <= 1e-12, format!("box {x} far from {t}"))?;
    }
    within(elapsed, 1.0)?;
    Ok(format!("size 3, 0 new, breadth {:.1e}, {:.4}s", run.inclusion.as_ref().unwrap().breadth, elapsed.as_secs_f64()))
}

fn ex6() -> Check {
    let case = load_case("ex6").map_err(|e| e.to_string())?;
    let t = Instant::now();
    let run = run_pipeline(&case.system, case.approx_zero.coords(), &PipelineOptions::default().for_case(&case))
        .map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let d = &run.outcome.deflated;
    let alpha = &d.combinations.first().ok_or("no combination")?.alpha_init;
    let want_alpha = [-1.000006509, -0.9997557989, 0.000106178711];
    ensure(
        alpha.len() == 3 && alpha.iter().zip(want_alpha).all(|(a, w)| (a - w).abs() < 1e-6),
        format!("initial alphas {alpha:?}"),
    )?;
    ensure(d.size() == 7 && d.system.nvars() == 7, format!("size {}", d.size()))?;
    let b = &run.inclusion.as_ref().map_err(|e| e.to_string())?.enclosure;
    let brackets = [
        (0.99999999999999, 1.00000000000001),
        (-2.00000000000001, -1.99999999999998),
        (-1.00000000000001, -0.99999999999999),
        (1.99999999999999, 2.00000000000001),
        (-1.00000000000001, -0.99999999999999),
        (-1.00000000000001, -0.99999999999999),
        (-0.00000000000001, -0.00000000000001),
    ];
    for (x, (lo, hi)) in b.0.iter().zip(brackets) {
        ensure(
            (x.lo() - lo).abs() <= 5e-14 && (x.hi() - hi).abs() <= 5e-14,
            format!("box {x} vs [{lo}, {hi}]"),
        )?;
    }
    within(elapsed, 1.0)?;
    Ok(format!("7 x 7, alphas match, box within 5e-14, {:.4}s", elapsed.as_secs_f64()))
}

fn ex8() -> Check {
    let case = load_case("ex8b").map_err(|e| e.to_string())?;
    let p0 = case.approx_zero.coords();
    let first = cdss(
        &case.system,
        p0,
        &CdssOptions {
            theta: ThetaPolicy::Fixed(0.5),
            eps: 0.05,
            ..CdssOptions::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let (_, _, diag) = diagnose(&first, 1e-12, 50).map_err(|e| e.to_string())?;
    ensure(diag.verdict == Verdict::Perturbed, "theta = 0.5 not flagged")?;
    let pert = first.perturbation_bound();
    ensure(pert > 0.0 && pert < 0.5, format!("perturbation {pert}"))?;
    let opts = fixed(0.5, 0.05);
    let run = run_pipeline(&case.system, p0, &opts).map_err(|e| e.to_string())?;
    let diag = &run.outcome.diagnosis;
    ensure(diag.verdict == Verdict::Exact, "retry not exact")?;
    let p = run.outcome.point.coords();
    let want = [0.0, 0.0, -0.05];
    ensure(
        p.len() == 3 && p.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12),
        format!("refined zero {p:?}"),
    )?;
    ensure(diag.max_err < 1e-15, format!("max err {:e}", diag.max_err))?;
    Ok(format!(
        "perturbation {pert} < 0.5, exact after {} retries, max err {:.1e}",
        run.outcome.retries(),
        diag.max_err
    ))
}

fn ex10() -> Check {
    let case = load_case("ex10").map_err(|e| e.to_string())?;
    let p0 = case.approx_zero.coords();
    let (_, trace) = newton_refine(&case.system, p0, 1e-8, 50).map_err(|e| e.to_string())?;
    let ys = [-0.000004368, -0.0000021841948, -0.0000010920974, -0.0000005460487];
    for (k, y) in ys.iter().enumerate() {
        let it = trace.iterates.get(k).ok_or("short trace")?;
        if k == 0 {
            continue;
        }
        ensure(it[0].abs() < 1e-9 && (it[1] - y).abs() < 1e-9, format!("iterate {k}: {it:?}"))?;
    }
    ensure(classify_convergence(&trace) == Convergence::Linear, "full-rank branch not linear")?;
    let opts = RankGuessOptions {
        eps: 0.05,
        theta_prime: 1e-12,
        execution: Execution::Sequential,
        ..RankGuessOptions::default()
    };
    let out = rank_guess_pipeline(&case.system, p0, &opts).map_err(|e| e.to_string())?;
    let first = &out.branches[0];
    ensure(
        first.guesses == [2] && first.convergence == Some(Convergence::Linear),
        format!("first branch {first:?}"),
    )?;
    let last = out.branches.last().unwrap();
    ensure(last.accepted && last.guesses.first() == Some(&1), format!("accepted {last:?}"))?;
    ensure(out.diagnosis.convergence == Convergence::Quadratic, "rank-1 branch not quadratic")?;
    ensure(out.deflated.size() == 3 && out.deflated.n_alpha() == 1, "not {f1, g1, g2}")?;
    let f1 = &case.system.polys()[0];
    ensure(
        out.deflated.system.polys().iter().any(|f| f.restrict_vars(2).as_ref() == Some(f1)),
        "f1 missing",
    )?;
    let alpha = out.point.coords()[2];
    ensure((alpha + 0.05).abs() < 1e-12, format!("alpha {alpha}"))?;
    ensure(out.diagnosis.delta < 1e-12, format!("delta {:e}", out.diagnosis.delta))?;
    Ok(format!("rank 2 linear, rank 1 quadratic, alpha {alpha}, delta {:.1e}", out.diagnosis.delta))
}

fn dz1() -> Check {
    let case = load_case("dz1").map_err(|e| e.to_string())?;
    let t = Instant::now();
    let opts = PipelineOptions::default().for_case(&case);
    let run = run_pipeline(&case.system, case.approx_zero.coords(), &opts).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let d = &run.outcome.deflated;
    ensure(d.size() <= 8, format!("size {}", d.size()))?;
    let j = d.system.jacobian(d.point.coords()).map_err(|e| e.to_string())?;
    let r = numerical_rank(&j, opts.refine.eps, opts.refine.rank_mode).map_err(|e| e.to_string())?;
    ensure(r == d.size(), format!("rank {r} of {}", d.size()))?;
    let inc = run.inclusion.as_ref().map_err(|e| e.to_string())?;
    ensure(inc.breadth <= 1e-12, format!("breadth {:e}", inc.breadth))?;
    ensure(run.projected_inclusion().unwrap().contains_point(&[0.0; 4]), "origin not enclosed")?;
    let res = case.system.max_residual(d.project(run.outcome.point.coords())).map_err(|e| e.to_string())?;
    ensure(res <= 1e-12, format!("residual {res:e}"))?;
    within(elapsed, 5.0)?;
    Ok(format!("size {} ({} polynomials), breadth {:.1e}, {:.4}s", d.size(), d.poly_count(), inc.breadth, elapsed.as_secs_f64()))
}

fn breadth() -> Check {
    let mut notes = Vec::new();
    for (n, limit) in [(5usize, f64::INFINITY), (20, 10.0)] {
        let case = generate_breadth_system(n).map_err(|e| e.to_string())?;
        let t = Instant::now();
        let r = run_case(&case, &PipelineOptions::default());
        let elapsed = t.elapsed();
        ensure(r.final_size == Some(n) && r.n_alpha == Some(0), format!("n = {n}: {r:?}"))?;
        ensure(r.exit_code() == 0, format!("n = {n} not exact and verified"))?;
        within(elapsed, limit)?;
        notes.push(format!("n={n} {:.4}s", elapsed.as_secs_f64()));
    }
    Ok(format!("size n, 0 new; {}", notes.join(", ")))
}

fn random_integer_poly(rng: &mut ChaCha8Rng, sys: &PolySystem) -> Polynomial {
    let n = sys.nvars();
    let terms: Vec<(Monomial, f64)> = (0..rng.gen_range(1..8))
        .map(|_| {
            let e: Vec<u32> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            (Monomial::new(e), rng.gen_range(-9..=9) as f64)
        })
        .collect();
    Polynomial::from_terms(sys.vars().clone(), terms)
}

fn vars_system(n: usize) -> PolySystem {
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let text = format!("vars: {}\n{}", names.join(", "), names.join(" + "));
    parse_system(&text).unwrap().system
}

fn taylor_round_trip(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for k in 0..100 {
        let sys = vars_system(rng.gen_range(1..=3));
        let f = random_integer_poly(rng, &sys);
        let p: Vec<f64> = (0..sys.nvars()).map(|_| rng.gen_range(-3..=3) as f64).collect();
        let back: Vec<f64> = p.iter().map(|v| -v).collect();
        let g = f.taylor_shift(&p).map_err(|e| e.to_string())?;
        let h = g.taylor_shift(&back).map_err(|e| e.to_string())?;
        ensure(h == f, format!("system {k}: {f} came back as {h}"))?;
    }
    Ok(())
}

fn rank_monotone(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let eps = [1e-14, 1e-10, 1e-6, 1e-3, 1e-1, 1.0, 10.0];
    for k in 0..100 {
        let (m, n) = (rng.gen_range(1..7), rng.gen_range(1..7));
        // low-rank products hit the interesting cases
        let r = rng.gen_range(1..=m.min(n));
        let a = Matrix::from_rows(&(0..m).map(|_| (0..r).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect::<Vec<_>>());
        let b = Matrix::from_rows(&(0..r).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect::<Vec<_>>());
        let c = a.matmul(&b);
        for mode in [RankMode::Absolute, RankMode::Relative] {
            let ranks: Vec<usize> = eps
                .iter()
                .map(|&e| numerical_rank(&c, e, mode))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            ensure(ranks.windows(2).all(|w| w[0] >= w[1]), format!("matrix {k}: ranks {ranks:?}"))?;
        }
    }
    Ok(())
}

const SHAPES: &[&[u32]] = &[
    &[2, 2],
    &[3, 2],
    &[2, 3, 2],
    &[4, 4],
    &[2, 2, 2, 2],
    &[1, 3],
    &[2, 2, 4],
    &[3, 3],
    &[1, 2, 2],
    &[2, 8],
];

fn power_systems(reports: &mut Vec<RunReport>) -> Result<String, String> {
    let cases = (0..50u64)
        .map(|k| generate_random_power_system(&PowerSystemSpec::unmixed(SHAPES[k as usize % SHAPES.len()].to_vec(), 1000 + k)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let opts = PipelineOptions::default();
    for case in &cases {
        let refine = opts.for_case(case).refine;
        if let Ok(d) = cdss(&case.system, case.approx_zero.coords(), &refine.cdss_options(refine.theta)) {
            let j = d.system.jacobian(d.point.coords()).map_err(|e| e.to_string())?;
            let r = numerical_rank(&j, refine.eps, refine.rank_mode).map_err(|e| e.to_string())?;
            ensure(r == d.size(), format!("{}: cdss returned rank {r} of {}", case.name, d.size()))?;
        }
    }
    let rows = deflate_core::report::bench(&cases, &opts, Execution::default());
    let exact = rows.iter().filter(|r| r.verdict == Some(Verdict::Exact)).count();
    reports.extend(rows);
    ensure(exact * 10 >= 9 * cases.len(), format!("{exact}/50 exact"))?;
    Ok(format!("{exact}/50 exact"))
}

fn random_box_poly(rng: &mut ChaCha8Rng) -> (Polynomial, IntervalVector) {
    let sys = vars_system(rng.gen_range(1..=3));
    let terms: Vec<(Monomial, f64)> = (0..rng.gen_range(1..6))
        .map(|_| {
            let e: Vec<u32> = (0..sys.nvars()).map(|_| rng.gen_range(0..4)).collect();
            (Monomial::new(e), rng.gen_range(-5.0..5.0))
        })
        .collect();
    let f = Polynomial::from_terms(sys.vars().clone(), terms);
    let b = IntervalVector(
        (0..sys.nvars())
            .map(|_| Interval::around(rng.gen_range(-2.0..2.0), rng.gen_range(0.0..0.5)))
            .collect(),
    );
    (f, b)
}

fn containment(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let mut violations = 0;
    for _ in 0..100 {
        let (f, b) = random_box_poly(rng);
        let y = interval_eval(&f, &b).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let x: Vec<f64> = b.0.iter().map(|i| rng.gen_range(i.lo()..=i.hi())).collect();
            let v = f.evaluate(&x).map_err(|e| e.to_string())?;
            if !y.contains(v) {
                violations += 1;
            }
        }
    }
    ensure(violations == 0, format!("{violations} of 10000 samples outside"))
}

fn idempotent(reports: &mut Vec<RunReport>) -> Result<(), String> {
    let opts = CdssOptions::default();
    for k in 0..50u64 {
        let n = 2 + (k as usize % 3);
        let case = generate_random_power_system(&PowerSystemSpec::unmixed(vec![1; n], 5000 + k)).map_err(|e| e.to_string())?;
        let p = case.approx_zero.coords();
        let once = cdss(&case.system, p, &opts).map_err(|e| format!("{}: {e}", case.name))?;
        ensure(once.system == case.system, format!("{}: regular system changed", case.name))?;
        let twice = cdss(&once.system, p, &opts).map_err(|e| e.to_string())?;
        ensure(twice.system == once.system, format!("{}: second pass changed the system", case.name))?;
        reports.push(run_case(&case, &PipelineOptions::default()));
    }
    Ok(())
}

fn properties(reports: &mut Vec<RunReport>) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut failed = Vec::new();
    let mut notes = Vec::new();
    let mut part = |tag: &str, r: Result<String, String>| match r {
        Ok(s) => notes.push(format!("({tag}) {s}")),
        Err(e) => failed.push(format!("({tag}) {e}")),
    };
    part("a", taylor_round_trip(&mut rng).map(|_| "100 exact".into()));
    part("b", rank_monotone(&mut rng).map(|_| "100 monotone".into()));
    part("c", power_systems(reports));
    part("d", containment(&mut rng).map(|_| "0 violations".into()));
    part("e", idempotent(reports).map(|_| "50 unchanged".into()));
    if failed.is_empty() {
        Ok(notes.join(", "))
    } else {
        Err(failed.join("; "))
    }
}

fn degree_bound(reports: &[RunReport]) -> Check {
    let mut checked = 0;
    for r in reports {
        if let Some(d) = r.max_x_degree {
            ensure(d <= r.input_degree, format!("{}: degree {d} > {}", r.name, r.input_degree))?;
            checked += 1;
        }
    }
    ensure(checked > 0, "no runs")?;
    Ok(format!("{checked} runs"))
}

fn corpus_runs() -> Vec<RunReport> {
    let mut cases: Vec<_> = list_cases().into_iter().map(|n| load_case(n).unwrap()).collect();
    cases.push(generate_breadth_system(20).unwrap());
    deflate_core::report::bench(&cases, &PipelineOptions::default(), Execution::default())
}

#[test]
fn acceptance() {
    // wall-clock limits apply to one run at a time
    let mut results: Vec<(u32, &str, Check)> = vec![
        (1, "dz2 deflation", dz2()),
        (2, "ex6 alphas and inclusion", ex6()),
        (3, "ex8 tolerance retry", ex8()),
        (4, "ex10 rank guess", ex10()),
        (5, "dz1 inclusion", dz1()),
        (6, "breadth family", breadth()),
    ];
    let mut reports = corpus_runs();
    results.push((7, "property suite", properties(&mut reports)));
    results.push((8, "degree bound", degree_bound(&reports)));
    // straight to the handle so the lines show without --nocapture
    let mut out = std::io::stdout().lock();
    let mut ok = true;
    for (k, name, r) in &results {
        let line = match r {
            Ok(s) => format!("PASS {k} {name}: {s}"),
            Err(e) => {
                ok = false;
                format!("FAIL {k} {name}: {e}")
            }
        };
        writeln!(out, "{line}").unwrap();
    }
    drop(out);
    assert!(ok, "acceptance criteria failed");
}
