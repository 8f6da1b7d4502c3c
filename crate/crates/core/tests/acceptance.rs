//! Acceptance suite: one line per criterion, non-zero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use mtp2::certify::certify_ising;
use mtp2::cli::{run, Command, Format, RunConfig};
use mtp2::ips::{classical_ips, lambda_star_from_margins, preflight_existence, symmetric_lambda};
use mtp2::ising::{table_from_params, Graph};
use mtp2::states::{algebra_closure, lattice_closure};
use mtp2::tables::{is_mtp2, moments_from_counts, PairMargin};
use mtp2::{
    certify_general, fit, mle_exists_general, mle_exists_symmetric, solve_general, FitOptions, IsingParams, Moments,
    ProbTable, SampleCounts, State, Tolerances,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn moussouris_expected() -> Vec<f64> {
    [27, 9, 3, 3, 9, 9, 1, 3, 3, 1, 9, 9, 3, 3, 9, 27].iter().map(|&v| v as f64 / 128.0).collect()
}

fn c1_moussouris() -> Outcome {
    let start = Instant::now();
    let c = moussouris();
    let res = fit(&c, &Graph::cycle(4), &FitOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let w = 3f64.ln() / 2.0;
    let mut jerr = 0.0f64;
    for (a, b, v) in [(0, 1, w), (1, 2, w), (2, 3, w), (0, 3, 0.0)] {
        jerr = jerr.max((res.params.j[(a, b)] - v).abs());
    }
    let sigma = res.covariance();
    let row = [1.0, 0.5, 0.25, 0.125];
    let mut serr = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            // Σ_ab = 2^{-|a-b|} on the fitted chain
            let expected = row[(a as i32 - b as i32).unsigned_abs() as usize];
            serr = serr.max((sigma[(a, b)] - expected).abs());
        }
    }
    let perr = max_diff(&res.table.to_lattice_order(), &moussouris_expected());
    ensure(jerr < 1e-8, || format!("J error {jerr:e}"))?;
    ensure(serr < 1e-8, || format!("Sigma error {serr:e}"))?;
    ensure(perr < 1e-8, || format!("table error {perr:e}"))?;
    ensure(res.converged && res.sweeps <= 2, || format!("sweeps {}", res.sweeps))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("J err {jerr:.1e}, Sigma err {serr:.1e}, p err {perr:.1e}, {} sweep(s), {elapsed:.1?}", res.sweeps))
}

fn c2_example() -> Outcome {
    let start = Instant::now();
    let c = example_counts();
    let fit = solve_general(&c, &Tolerances::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let expected: Vec<f64> = [35, 7, 16, 35, 12, 7, 40, 30].iter().map(|&v| v as f64 / 182.0).collect();
    let err = max_diff(&fit.table.to_lattice_order(), &expected);
    let cert = certify_general(&fit.table, &c, &Tolerances::default()).map_err(|e| e.to_string())?;
    ensure(err < 1e-6, || format!("table error {err:e}"))?;
    ensure(cert.pass(), || format!("certificate failed:\n{cert}"))?;
    ensure(cert.dual.value < 1e-8, || format!("dual residual {:e}", cert.dual.value))?;
    // the published decomposition is itself feasible
    let p = ProbTable::from_lattice_order(3, &expected).map_err(|e| e.to_string())?;
    let published = certify_general(&p, &c, &Tolerances::default()).map_err(|e| e.to_string())?;
    ensure(published.pass() && published.dual.value < 1e-8, || format!("published table fails:\n{published}"))?;
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("p err {err:.1e}, dual residual {:.1e}, {elapsed:.1?}", cert.dual.value))
}

fn c3_coincidence() -> Outcome {
    let c = moussouris();
    let general = solve_general(&c, &Tolerances::default()).map_err(|e| e.to_string())?;
    let complete = fit(&c, &Graph::complete(4), &FitOptions::default()).map_err(|e| e.to_string())?;
    let chain = classical_ips(&c, &Graph::chain(4), &FitOptions::default()).map_err(|e| e.to_string())?;
    let a = general.table.max_abs_diff(&complete.table);
    let b = general.table.max_abs_diff(&chain.table);
    let cc = complete.table.max_abs_diff(&chain.table);
    let worst = a.max(b).max(cc);
    ensure(worst < 1e-6, || format!("pairwise differences {a:e} {b:e} {cc:e}"))?;
    Ok(format!("max pairwise difference {worst:.1e}"))
}

struct Dataset {
    counts: SampleCounts,
    graph: Graph,
}

fn kkt_datasets() -> Vec<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();
    while out.len() < 50 {
        let d = rng.random_range(3..=5);
        let n = rng.random_range(5..=50);
        let g = random_graph(&mut rng, d, 0.7);
        // uniform noise, ferromagnetic structure, or mixed-sign
        // interactions that push some edges onto the clamp
        let c = match rng.random_range(0..3) {
            0 => uniform_sample(&mut rng, d, n),
            1 => {
                let p = ferromagnet_table(&mut rng, &Graph::complete(d), 1.0, 0.5);
                sample_from(&mut rng, &p, n)
            }
            _ => {
                let p = mixed_table(&mut rng, d, -1.0, 1.5);
                sample_from(&mut rng, &p, n)
            }
        };
        if !preflight_existence(&c, &g).unwrap().ok {
            continue;
        }
        if moments_from_counts(&c).mean.iter().any(|m| m.abs() >= 1.0) {
            continue;
        }
        out.push(Dataset { counts: c, graph: g });
    }
    out
}

fn c4_kkt(data: &[Dataset]) -> Outcome {
    let start = Instant::now();
    let tol = Tolerances::default();
    let mut general_runs = 0;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for (k, ds) in data.iter().enumerate() {
        let res = fit(&ds.counts, &ds.graph, &FitOptions::default()).map_err(|e| format!("dataset {k}: {e}"))?;
        let m = moments_from_counts(&ds.counts);
        let cert = certify_ising(&res, &m, &ds.graph, &tol).map_err(|e| e.to_string())?;
        ensure(res.converged && cert.pass(), || format!("dataset {k} (graph {}) not certified:\n{cert}", ds.graph))?;
        worst.0 = worst.0.min(cert.primal.value);
        worst.1 = worst.1.min(cert.dual.value);
        worst.2 = worst.2.max(cert.slackness.value);
        if ds.counts.dim() <= 4 {
            let g = solve_general(&ds.counts, &tol).map_err(|e| format!("dataset {k}: {e}"))?;
            ensure(g.certificate.pass(), || format!("general fit of dataset {k} not certified:\n{}", g.certificate))?;
            general_runs += 1;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "50 Ising fits certified (min primal {:.1e}, min dual {:.1e}, max slack {:.1e}), {general_runs} general fits certified, {elapsed:.1?}",
        worst.0, worst.1, worst.2
    ))
}

fn random_margin(rng: &mut ChaCha8Rng) -> PairMargin {
    let w: Vec<f64> = (0..4).map(|_| rng.random_range(0.02..1.0)).collect();
    let s: f64 = w.iter().sum();
    PairMargin { pp: w[0] / s, pm: w[1] / s, mp: w[2] / s, mm: w[3] / s }
}

fn cells(m: &PairMargin) -> [f64; 4] {
    [m.pp, m.pm, m.mp, m.mm]
}

fn c5_lambda() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut found = 0;
    while found < 200 {
        let p = random_margin(&mut rng);
        let e = random_margin(&mut rng);
        let j = rng.random_range(0.0..1.5);
        if delta_ref(cells(&p), cells(&e)) >= -j {
            continue;
        }
        found += 1;
        let lam = lambda_star_from_margins(&p, &e, j).map_err(|err| err.to_string())?;
        let upper = 4.0 * e.pm.min(e.mp);
        let f = |l: f64| {
            let x = l / 4.0;
            delta_ref(cells(&p), [e.pp + x, e.pm - x, e.mp - x, e.mm + x]) + j
        };
        let reference = bisect(f, 0.0, upper);
        worst = worst.max((lam - reference).abs());
    }
    ensure(worst < 1e-10, || format!("quadratic vs bisection {worst:e}"))?;

    let mut worst_sym = 0.0f64;
    let mut found = 0;
    while found < 200 {
        let a = rng.random_range(0.02..0.48);
        let p = PairMargin { pp: a, pm: 0.5 - a, mp: 0.5 - a, mm: a };
        let m: f64 = rng.random_range(-0.95..0.95);
        let j = rng.random_range(0.0..1.5);
        let dt = |l: f64| 0.5 * (p.mp * (1.0 + m + l) / (p.pp * (1.0 - m - l))).ln();
        if dt(0.0) >= -j {
            continue;
        }
        found += 1;
        let lam = symmetric_lambda(&p, m, j).map_err(|err| err.to_string())?;
        let reference = bisect(|l| dt(l) + j, 0.0, 1.0 - m);
        worst_sym = worst_sym.max((lam - reference).abs());
    }
    ensure(worst_sym < 1e-10, || format!("symmetric closed form vs bisection {worst_sym:e}"))?;
    Ok(format!("200 + 200 instances, max deviation {worst:.1e} / {worst_sym:.1e}"))
}

fn c6_existence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut positives = (0, 0);
    for k in 0..1000 {
        let d = rng.random_range(2..=6);
        let n = rng.random_range(1..=3 * d);
        let c = uniform_sample(&mut rng, d, n);
        let support: Vec<u32> = c.support().masks().collect();
        let full = 1usize << d;
        let gen = mle_exists_general(&c);
        let lat = lattice_closure(&c.support()).is_full();
        let naive = naive_closure(d, &support, false).len() == full;
        ensure(gen == lat && lat == naive, || format!("sample {k}: general criteria disagree"))?;
        let sym = mle_exists_symmetric(&c);
        let alg = algebra_closure(&c.support()).is_full();
        let naive = naive_closure(d, &support, true).len() == full;
        ensure(sym == alg && alg == naive, || format!("sample {k}: symmetric criteria disagree"))?;
        positives.0 += gen as usize;
        positives.1 += sym as usize;
    }
    let three = SampleCounts::from_states(
        3,
        [[1, -1, -1], [-1, 1, -1], [-1, -1, 1]].iter().map(|s| State::from_signs(s).unwrap()),
    )
    .unwrap();
    ensure(mle_exists_general(&three), || "three-point generator set rejected".into())?;
    for _ in 0..100 {
        let d = rng.random_range(2..=6);
        let mut c = uniform_sample(&mut rng, d, 20).counts().to_vec();
        let (i, j) = (0, rng.random_range(1..d));
        // force X_i <= X_j
        for (m, v) in c.iter_mut().enumerate() {
            if m >> i & 1 == 1 && m >> j & 1 == 0 {
                *v = 0;
            }
        }
        c[0] += 1;
        let c = SampleCounts::new(d, c).unwrap();
        ensure(!mle_exists_general(&c), || "monotone-coupled sample accepted".into())?;
    }
    Ok(format!("1000 samples agree ({} / {} exist), coupled samples rejected", positives.0, positives.1))
}

fn subsets(d: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..1 << d).map(move |s| (0..d).filter(|&v| s >> v & 1 == 1).collect())
}

fn c7_closure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for k in 0..100 {
        let d = rng.random_range(2..=5);
        let g = random_graph(&mut rng, d, 0.8);
        let p = ferromagnet_table(&mut rng, &g, 1.5, 1.0);
        for vars in subsets(d) {
            let m = p.marginal(&vars).map_err(|e| e.to_string())?;
            ensure(is_mtp2(&m, 1e-9).holds, || format!("table {k}: marginal {vars:?} not MTP2"))?;
            checked += 1;
            if vars.len() == d {
                continue;
            }
            for signs in 0u32..1 << vars.len() {
                let fixed: Vec<(usize, i8)> =
                    vars.iter().enumerate().map(|(b, &v)| (v, if signs >> b & 1 == 1 { 1 } else { -1 })).collect();
                let cond = p.conditional(&fixed).map_err(|e| e.to_string())?;
                ensure(is_mtp2(&cond, 1e-9).holds, || format!("table {k}: conditional {fixed:?} not MTP2"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} marginals and conditionals of 100 tables are MTP2"))
}

fn c8_cycles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..100 {
        let d = rng.random_range(4..=7);
        let theta: IsingParams = ferromagnet(&mut rng, &Graph::cycle(d), 2.0, 0.0);
        let sigma = Moments::from_table(&table_from_params(&theta).unwrap()).covariance();
        let inv = sigma.try_inverse().ok_or_else(|| format!("model {k}: singular covariance"))?;
        for a in 0..d {
            for b in 0..d {
                if a != b {
                    worst = worst.max(inv[(a, b)]);
                }
            }
        }
    }
    ensure(worst <= 1e-9, || format!("positive off-diagonal inverse entry {worst:e}"))?;
    Ok(format!("100 cycle models, largest off-diagonal inverse entry {worst:.1e}"))
}

fn c9_face(data: &[Dataset]) -> Outcome {
    let mut worst = 0.0f64;
    let mut clamped = 0;
    for (k, ds) in data.iter().enumerate() {
        let res = fit(&ds.counts, &ds.graph, &FitOptions::default()).map_err(|e| e.to_string())?;
        if res.fitted_graph.edge_count() < res.positive_graph.edge_count() {
            clamped += 1;
        }
        let classical = classical_ips(&ds.counts, &res.fitted_graph, &FitOptions::default()).map_err(|e| e.to_string())?;
        let diff = classical.table.max_abs_diff(&res.table);
        ensure(diff < 1e-7, || format!("dataset {k}: face IPS differs by {diff:e}"))?;
        worst = worst.max(diff);
    }
    Ok(format!("50 datasets ({clamped} with clamped edges), max difference {worst:.1e}"))
}

fn c10_scale() -> Outcome {
    let d = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let g = Graph::complete(d);
    let theta = ferromagnet(&mut rng, &g, 0.12, 0.3);
    let p = table_from_params(&theta).map_err(|e| e.to_string())?;
    let c = sample_from(&mut rng, &p, 9282);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("sample.counts");
    let mut text = format!("# dim={d}\n");
    for (m, &k) in c.counts().iter().enumerate() {
        if k > 0 {
            text.push_str(&format!("{m},{k}\n"));
        }
    }
    std::fs::write(&input, text).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new(Command::Fit);
    cfg.input = Some(input);
    cfg.format = Some(Format::Counts);
    cfg.graph = Some("complete".into());
    let start = Instant::now();
    let out = run(cfg);
    let elapsed = start.elapsed();
    ensure(out.code == 0, || format!("exit code {}:\n{}", out.code, out.report))?;
    ensure(out.report.contains("certified: true"), || "report lacks a certified result".into())?;
    within(elapsed, Duration::from_secs(300))?;
    let sweeps = out.report.lines().find(|l| l.starts_with("sweeps: ")).unwrap_or("sweeps: ?").to_string();
    let fitted = out.report.lines().find(|l| l.starts_with("fitted_edges: ")).map(|l| l.split(' ').count() - 1);
    Ok(format!("d = 16, n = 9282, {sweeps}, {} fitted edges, certified, {elapsed:.1?}", fitted.unwrap_or(0)))
}

fn main() -> ExitCode {
    let data = kkt_datasets();
    let criteria: Vec<Criterion> = vec![
        ("1 moussouris reproduction", Box::new(c1_moussouris)),
        ("2 three-variable general MLE", Box::new(c2_example)),
        ("3 three-MLE coincidence", Box::new(c3_coincidence)),
        ("4 KKT oracle suite", Box::new(|| c4_kkt(&data))),
        ("5 lambda* cross-validation", Box::new(c5_lambda)),
        ("6 existence theory", Box::new(c6_existence)),
        ("7 MTP2 closure properties", Box::new(c7_closure)),
        ("8 inverse M-matrix on cycles", Box::new(c8_cycles)),
        ("9 face consistency", Box::new(|| c9_face(&data))),
        ("10 d = 16 smoke test", Box::new(c10_scale)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
