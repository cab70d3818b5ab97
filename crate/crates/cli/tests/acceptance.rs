//! Acceptance criteria, one pass/fail line each. Runs without the libtest
//! harness so every line is printed even when some criteria fail.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use chanrand::guideline::{self, frontier_violations, scan, Grid, GuidelineProblem};
use chanrand::mlts::{
    budget_from_searches, collision_prob, ln_mlts_success_prob_for_budget, mlts_success_prob, rg_success_prob,
    security_loss, tree_searches, BudgetRule,
};
use chanrand::pipeline::{run_pipeline, GuidelineMode, PipelineConfig};
use chanrand::randtests::{accept_probability, empirical_accept_rate, run_all, run_test, TestKind, TestSpec};
use chanrand::specfun::{binomial_cdf, erfc, erfc_inv, igam, igamc, ln_binomial, reg_inc_beta};
use chanrand::{seed, BitSequence, MarkovBitModel, Probability};
use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn big_to_f64(n: &BigUint) -> f64 {
    n.to_string().parse().unwrap()
}

/// Probability of transition vector `t` under the chain, bit by bit.
fn transition_vector_prob(t: u32, l: usize, theta: f64) -> f64 {
    (0..l)
        .map(|i| if t >> i & 1 == 1 { theta } else { 1.0 - theta })
        .product()
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for l in [8usize, 12, 16] {
        for rho in [0.0, 0.2, 0.5, 0.9] {
            let theta = (1.0 - rho) / 2.0;
            let probs: Vec<(u32, f64)> = (0u32..1 << l)
                .map(|t| (t.count_ones(), transition_vector_prob(t, l, theta)))
                .collect();
            for n in [0usize, 2, 4, l / 2] {
                let half = (n / 2) as u32;
                let oracle: f64 = probs
                    .iter()
                    .filter(|(w, _)| *w <= half || *w >= l as u32 - half)
                    .map(|(_, p)| p)
                    .sum();
                let closed = mlts_success_prob(l, rho, n).map_err(|e| e.to_string())?.value();
                worst = worst.max((closed - oracle).abs());
                cases += 1;
            }
        }
    }
    check(
        worst <= 1e-10,
        format!("{cases} cases, max |closed - enumerated| = {worst:.3e} (tol 1e-10)"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for l in [8usize, 12, 16] {
        for n in [0usize, 2, 4, l / 2] {
            let closed = mlts_success_prob(l, 0.0, n).map_err(|e| e.to_string())?.value();
            let rg = big_to_f64(&tree_searches(l, n)) * 2f64.powi(-(l as i32));
            worst = worst.max((closed - rg).abs());
        }
    }
    check(
        worst <= 1e-12,
        format!("max |I_MLTS(L,0,n) - N 2^-L| = {worst:.3e} (tol 1e-12)"),
    )
}

fn criterion_3() -> Outcome {
    let loss = security_loss(
        Probability::new(2f64.powi(-80)).unwrap(),
        Probability::new(2f64.powi(-120)).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    let coll = collision_prob(32, 32).value();
    let rg = rg_success_prob(&(BigUint::from(1u32) << 96u32), 128).value();
    let ok = loss == 40.0 && ((coll - 7.45e-9) / 7.45e-9).abs() <= 0.01 && rg == 2f64.powi(-32);
    check(
        ok,
        format!(
            "security_loss = {loss}, collision_prob(32,32) = {coll:.4e}, rg(2^96,128) = 2^{}",
            rg.log2()
        ),
    )
}

/// Exact Frequency accept probability for a Markov chain, by dynamic
/// programming over (last bit, ones count).
fn frequency_exact(rho: f64, l: usize, alpha: f64) -> f64 {
    let theta = (1.0 - rho) / 2.0;
    let mut dp = vec![[0.0f64; 2]; l + 1];
    dp[0][0] = 0.5;
    dp[1][1] = 0.5;
    for _ in 1..l {
        let mut next = vec![[0.0f64; 2]; l + 1];
        for k in 0..=l {
            for b in 0..2 {
                let p = dp[k][b];
                if p == 0.0 {
                    continue;
                }
                let (stay, flip) = (1.0 - theta, theta);
                if b == 0 {
                    next[k][0] += p * stay;
                    if k < l {
                        next[k + 1][1] += p * flip;
                    }
                } else {
                    next[k][0] += p * flip;
                    if k < l {
                        next[k + 1][1] += p * stay;
                    }
                }
            }
        }
        dp = next;
    }
    (0..=l)
        .filter(|&k| erfc((2.0 * k as f64 - l as f64).abs() / (l as f64).sqrt() / 2f64.sqrt()) > alpha)
        .map(|k| dp[k][0] + dp[k][1])
        .sum()
}

fn criterion_4() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for a in [0.0001, 0.01, 0.05, 0.3] {
        let spec = TestSpec::new(TestKind::Frequency, a).unwrap();
        let h = accept_probability(&spec, 0.0, 128).map_err(|e| e.to_string())?.value();
        if (h - (1.0 - a)).abs() > 1e-9 {
            ok = false;
            lines.push(format!("analytic rho=0 alpha={a}: {h}"));
        }
    }
    for rho in [0.0, 0.1, 0.3] {
        for a in [0.01, 0.05] {
            let spec = TestSpec::new(TestKind::Frequency, a).unwrap();
            let h = accept_probability(&spec, rho, 128).map_err(|e| e.to_string())?.value();
            let est = empirical_accept_rate(&spec, rho, 128, 100_000, seed::derive(4, (rho * 10.0) as u64))
                .map_err(|e| e.to_string())?;
            let sd = (h * (1.0 - h) / 1e5).sqrt();
            let z = (est.rate - h) / sd;
            let pass = est.within_sigma(h, 3.0);
            ok &= pass;
            lines.push(format!(
                "rho={rho} alpha={a}: analytic {h:.5}, MC {:.5} ({z:+.1} sd){}, exact discrete {:.5}",
                est.rate,
                if pass { "" } else { " OUT" },
                frequency_exact(rho, 128, a)
            ));
        }
    }
    check(ok, lines.join("; "))
}

fn criterion_5() -> Outcome {
    let kinds = [
        TestKind::BlockFrequency,
        TestKind::LongestRun,
        TestKind::NonOverlappingTemplate,
        TestKind::ApproximateEntropy,
        TestKind::Serial1,
        TestKind::Serial2,
    ];
    let mut rows = Vec::new();
    let mut outside = 0;
    for kind in kinds {
        for rho in [0.0, 0.2] {
            let spec = TestSpec::new(kind, 0.05).unwrap();
            let h = accept_probability(&spec, rho, 1024).map_err(|e| e.to_string())?.value();
            let est = empirical_accept_rate(
                &spec,
                rho,
                1024,
                10_000,
                seed::derive(5, kind as u64 * 10 + (rho * 10.0) as u64),
            )
            .map_err(|e| e.to_string())?;
            let diff = est.rate - h;
            let within = diff.abs() <= 0.05;
            outside += usize::from(!within);
            rows.push(json!({
                "kind": kind, "rho": rho, "alpha": 0.05, "length": 1024, "trials": 10_000,
                "analytic": h, "monte_carlo": est.rate, "difference": diff, "within_5pp": within
            }));
        }
    }
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join("chi_square_discrepancy.json");
    let report = json!({ "cells": rows, "outside_5pp": outside });
    std::fs::write(&path, serde_json::to_string_pretty(&report).unwrap()).map_err(|e| e.to_string())?;
    let summary: Vec<String> = rows
        .iter()
        .filter(|r| r["within_5pp"] == false)
        .map(|r| {
            format!(
                "{} rho={}: {:+.3}",
                r["kind"].as_str().unwrap(),
                r["rho"],
                r["difference"].as_f64().unwrap()
            )
        })
        .collect();
    // Either outcome passes as long as the report exists.
    check(
        path.exists(),
        format!(
            "{}/12 cells within 5pp; report {}{}",
            12 - outside,
            path.display(),
            if summary.is_empty() {
                String::new()
            } else {
                format!("; outside: {}", summary.join(", "))
            }
        ),
    )
}

/// Natural log of a big integer from its decimal digits.
fn ln_big(n: &BigUint) -> f64 {
    let digits = n.to_string();
    let head: f64 = digits[..digits.len().min(17)].parse().unwrap();
    head.ln() + (digits.len() - digits.len().min(17)) as f64 * std::f64::consts::LN_10
}

/// Exhaustive re-scan in log space with its own tie-breaking.
fn rescan(p: &GuidelineProblem) -> Result<(f64, f64), String> {
    let l = p.sequence_length;
    let budget = budget_from_searches(&p.adversary_searches, l).map_err(|e| e.to_string())?;
    let ln_i = ln_mlts_success_prob_for_budget(&budget, p.rho, BudgetRule::Interpolate)
        .map_err(|e| e.to_string())?
        .min(0.0);
    let ln_n = ln_big(&p.adversary_searches);
    let alphas = p.alpha_grid.points().map_err(|e| e.to_string())?;
    let rates = p.r_grid.points().map_err(|e| e.to_string())?;
    // (feasible, score, alpha, r): larger score better.
    let mut best: Option<(bool, f64, f64, f64)> = None;
    for &a in &alphas {
        let spec = TestSpec::new(p.test.kind, a).map_err(|e| e.to_string())?;
        let ln_pa = accept_probability(&spec, p.rho, l)
            .map_err(|e| e.to_string())?
            .value()
            .ln();
        for &r in &rates {
            let m = ((r * l as f64 - 1e-9).ceil() as usize).clamp(1, l);
            let ln_rg = (ln_n - m as f64 * std::f64::consts::LN_2).min(0.0);
            let excess = ln_i + ln_pa - ln_rg;
            let feasible = excess <= 1e-12;
            let score = if feasible { ln_pa.exp() * r } else { -excess };
            let replace = match best {
                None => true,
                Some((bf, bs, ba, br)) => {
                    (feasible && !bf)
                        || (feasible == bf && (score > bs || (score == bs && (a < ba || (a == ba && r > br)))))
                }
            };
            if replace {
                best = Some((feasible, score, a, r));
            }
        }
    }
    best.map(|(_, _, a, r)| (a, r)).ok_or_else(|| "empty grid".into())
}

fn criterion_6() -> Outcome {
    let mut rng = seed::rng(6);
    let mut problems = Vec::new();
    for i in 0..20 {
        let l = [1024usize, 1536, 2048][rng.random_range(0..3)];
        // Every fourth problem: weak test, strong correlation, tiny budget.
        let (kind, rho, bits) = if i % 4 == 0 {
            (
                TestKind::Frequency,
                rng.random_range(0.85..0.97f64),
                rng.random_range(1u32..8),
            )
        } else {
            let kind = TestKind::ALL[rng.random_range(0..TestKind::ALL.len())];
            (kind, rng.random_range(0.0..0.95f64), rng.random_range(1u32..400))
        };
        let rho = (rho * 1000.0).round() / 1000.0;
        problems.push(GuidelineProblem::new(l, BigUint::from(1u32) << bits, rho, kind));
    }
    let results: Vec<Result<(bool, bool, bool, String), String>> = problems
        .par_iter()
        .map(|p| {
            let sol = guideline::optimize(p).map_err(|e| e.to_string())?;
            let (a, r) = rescan(p)?;
            let same = sol.alpha_star.value() == a && sol.r_star == r;
            let slack_ok = !sol.feasible || sol.constraint_slack >= 0.0;
            let cells = scan(p).map_err(|e| e.to_string())?;
            let frontier_ok =
                frontier_violations(&cells).is_empty() && cells.iter().all(|c| !c.feasible || c.slack >= 0.0);
            Ok((
                same,
                slack_ok,
                frontier_ok,
                format!(
                    "{}/L={}/rho={}/N=2^{}: optimize ({}, {}, feasible {}) vs re-scan ({a}, {r})",
                    p.test.kind,
                    p.sequence_length,
                    p.rho,
                    p.adversary_searches.bits() - 1,
                    sol.alpha_star,
                    sol.r_star,
                    sol.feasible
                ),
            ))
        })
        .collect();
    let mut failures = Vec::new();
    let mut feasible = 0;
    for (res, p) in results.iter().zip(&problems) {
        match res {
            Ok((same, slack, frontier, tag)) => {
                if !(*same && *slack && *frontier) {
                    failures.push(format!("{tag}: rescan={same} slack={slack} frontier={frontier}"));
                }
                feasible += usize::from(guideline::optimize(p).map(|s| s.feasible).unwrap_or(false));
            }
            Err(e) => failures.push(e.clone()),
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("20 problems ({feasible} feasible) match the independent re-scan; slack and frontier hold")
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_7() -> Outcome {
    let trials = 20_000u64;
    let mut cfg = PipelineConfig::example(0.9);
    cfg.test.alpha = 0.0001;
    cfg.guideline = GuidelineMode::Fixed { r: 1.0 };
    let loose = run_pipeline(&cfg, trials, 71).map_err(|e| e.to_string())?.report;
    cfg.guideline = GuidelineMode::Optimize {
        pilot_trials: 2000,
        alpha_grid: Grid::ALPHA,
        r_grid: Grid::RATE,
    };
    let opt = run_pipeline(&cfg, trials, 72).map_err(|e| e.to_string())?.report;

    let t = trials as f64;
    let pe_l = loose.p_eve_empirical.map_or(0.0, |p| p.value());
    let sd_l = (pe_l * (1.0 - pe_l) / t).sqrt();
    let loose_ok = loose.l_security.is_some_and(|v| v > 0.0) && pe_l - 3.0 * sd_l > loose.p_rg.value();

    let pe_o = opt.p_eve_empirical.map_or(0.0, |p| p.value());
    let sd_o = (pe_o * (1.0 - pe_o) / t).sqrt();
    let sol = opt
        .guideline
        .as_ref()
        .ok_or("optimized run has no guideline solution")?;
    let opt_ok = pe_o - 3.0 * sd_o <= opt.p_rg.value() && sol.feasible && sol.constraint_slack >= 0.0;
    check(
        loose_ok && opt_ok,
        format!(
            "L=16, N=64, {trials} trials; loose: p_eve {pe_l:.4} vs p_rg {:.3e}, L_security {:+.2}; \
             optimized (alpha {}, r {}, rho_hat {:.3}): p_eve {pe_o:.4} vs p_rg {:.4}, L_security {:+.2}, slack {:.3e}",
            loose.p_rg.value(),
            loose.l_security.unwrap_or(f64::NAN),
            opt.alpha,
            opt.r,
            opt.pilot_rho_hat.unwrap_or(f64::NAN),
            opt.p_rg.value(),
            opt.l_security.unwrap_or(f64::NAN),
            sol.constraint_slack
        ),
    )
}

fn criterion_8() -> Outcome {
    let x: BitSequence = "1011010101".parse().unwrap();
    let spec = TestSpec::new(TestKind::Frequency, 0.01).unwrap().without_min_length();
    let p = run_test(&spec, &x).map_err(|e| e.to_string())?.p_value.value();
    let oracle = erfc(0.6325 / 2f64.sqrt());
    let worked = (p - 0.5271).abs() <= 1e-4 && (p - oracle).abs() <= 1e-4;

    let alpha = Probability::new(0.01).unwrap();
    let model = MarkovBitModel::new(0.0).unwrap();
    let verdicts: Vec<Vec<bool>> = (0..100u64)
        .into_par_iter()
        .map(|s| {
            let x = model.generate(1_000_000, seed::derive(8, s));
            run_all(alpha, &x, true).map(|o| o.iter().map(|t| t.verdict.accepted()).collect())
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let counts: Vec<(TestKind, usize)> = TestKind::ALL
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, verdicts.iter().filter(|v| v[i]).count()))
        .collect();
    let runs_ok = counts.iter().all(|&(_, c)| c >= 97);
    let list: Vec<String> = counts.iter().map(|(k, c)| format!("{k} {c}")).collect();
    check(
        worked && runs_ok,
        format!("Frequency(1011010101) P = {p:.6}; accepts per 100: {}", list.join(", ")),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = seed::rng(9);
    let n = 10_000;
    let mut worst = [0.0f64; 4];
    for i in 0..n {
        let e = -6.0 + (0.3f64 + 6.0) * (i as f64 + 0.5) / n as f64;
        let p = 10f64.powf(e).min(1.999);
        let x = erfc_inv(p).map_err(|e| e.to_string())?;
        worst[0] = worst[0].max((erfc(x) - p).abs());
    }
    for _ in 0..n {
        let (x, a, b) = (
            rng.random::<f64>(),
            rng.random_range(0.05..1000.0),
            rng.random_range(0.05..1000.0),
        );
        let s = reg_inc_beta(x, a, b).unwrap().value() + reg_inc_beta(1.0 - x, b, a).unwrap().value();
        worst[1] = worst[1].max((s - 1.0).abs());
    }
    for _ in 0..n {
        let l = rng.random_range(1u64..=60);
        let k = rng.random_range(0..l);
        let p = rng.random_range(0.001..0.999f64);
        let direct: f64 = (0..=k)
            .map(|i| (ln_binomial(l, i) + i as f64 * p.ln() + (l - i) as f64 * (-p).ln_1p()).exp())
            .sum();
        let beta = reg_inc_beta(1.0 - p, (l - k) as f64, (k + 1) as f64).unwrap().value();
        let cdf = binomial_cdf(k, l, p).unwrap().value();
        worst[2] = worst[2].max((beta - direct).abs()).max((cdf - direct).abs());
    }
    for _ in 0..n {
        let a = rng.random_range(0.01..3000.0f64);
        let x = a * rng.random_range(0.0..3.0f64);
        worst[3] = worst[3].max((igam(a, x) + igamc(a, x) - 1.0).abs());
    }
    let ok = worst[0] <= 1e-10 && worst[1] <= 1e-10 && worst[2] <= 1e-10 && worst[3] <= 1e-12;
    check(
        ok,
        format!(
            "max errors: round-trip {:.1e}, reflection {:.1e}, binomial {:.1e}, gamma tails {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_chanrand"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let seq = dir.path().join("seq.txt");
    let problem = dir.path().join("problem.json");
    let config = dir.path().join("pipeline.json");
    let bits = run_cli(&["gen", "--L", "2048", "--rho", "0.1", "--seed", "10"])?;
    std::fs::write(&seq, bits).map_err(|e| e.to_string())?;
    let mut gp = GuidelineProblem::new(512, BigUint::from(1u32) << 60u32, 0.2, TestKind::Runs);
    gp.alpha_grid = Grid {
        lo: 0.001,
        hi: 0.3,
        step: 0.005,
    };
    std::fs::write(&problem, serde_json::to_string(&gp).unwrap()).map_err(|e| e.to_string())?;
    std::fs::write(&config, serde_json::to_string(&PipelineConfig::example(0.7)).unwrap())
        .map_err(|e| e.to_string())?;
    let (seq, problem, config) = (
        seq.to_str().unwrap(),
        problem.to_str().unwrap(),
        config.to_str().unwrap(),
    );
    let invocations: Vec<Vec<&str>> = vec![
        vec!["gen", "--L", "512", "--rho", "0.3", "--trials", "3", "--seed", "1"],
        vec!["gen", "--L", "512", "--rho", "0.3", "--m-levels", "4", "--seed", "1"],
        vec!["gen", "--config", config, "--seed", "1"],
        vec!["test", "--kind", "all", "--alpha", "0.01", "--in", seq],
        vec![
            "attack", "--L", "16", "--rho", "0.4", "--N", "1000", "--M", "12", "--kind", "runs",
        ],
        vec!["attack", "--L", "10", "--n", "2", "--enumerate"],
        vec!["optimize", "--config", problem],
        vec!["optimize", "--config", problem, "--trials", "300", "--seed", "2"],
        vec!["simulate", "--config", config, "--trials", "300", "--seed", "3"],
        vec![
            "simulate", "--config", config, "--trials", "300", "--seed", "3", "--format", "csv",
        ],
    ];
    let mut differing = Vec::new();
    for args in &invocations {
        let a = run_cli(args)?;
        let b = run_cli(args)?;
        if a != b || a.is_empty() {
            differing.push(args.join(" "));
        }
    }
    check(
        differing.is_empty(),
        if differing.is_empty() {
            format!(
                "{} invocations over all five subcommands byte-identical",
                invocations.len()
            )
        } else {
            format!("differing: {}", differing.join("; "))
        },
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed-form oracle equivalence", criterion_1),
        ("RG equivalence", criterion_2),
        ("constants", criterion_3),
        ("Frequency analytics", criterion_4),
        ("chi-square-family analytics", criterion_5),
        ("optimizer correctness", criterion_6),
        ("paired pipeline experiment", criterion_7),
        ("NIST worked values", criterion_8),
        ("special-function contracts", criterion_9),
        ("CLI reproducibility", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("criterion {:>2} PASS  {name} [{secs:.1}s]: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{secs:.1}s]: {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
