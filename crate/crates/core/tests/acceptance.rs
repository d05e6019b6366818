//! Acceptance gate. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line; the process exits non-zero if any fail.
//!
//! Oracles used here (log-space Bayes, Monte Carlo CRPS, batch updating) are
//! coded locally and share nothing with the library paths they check.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use induct_core::characterization::{
    check_combination_axioms, check_commutation, construct_regularity_violation, BinaryFn,
    RescaleFamily,
};
use induct_core::dominance::{project_to_simplex, verify_dominance_with, DominanceSearch};
use induct_core::evidence::{crps, exp_loss_score};
use induct_core::harness::{run_experiment, ExperimentConfig, ModelSpec};
use induct_core::updating::{
    brute_force_normalize_oracle, conservative_normalize, general_bayes_update, inferential_update,
    predictive_update, sequential_update, ORACLE_MAX_LEN,
};
use induct_core::{
    Credibility, Forecast, LossValue, ProbabilityVector, ScoreMode, ScoreVector, UpdateRule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

const EXACT_TOL: f64 = 1e-12;
const IDENTITY_REL_TOL: f64 = 1e-15;
const AXIOM_TOL: f64 = 1e-6;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn random_prior(r: &mut ChaCha20Rng, n: usize) -> ProbabilityVector {
    let raw: Vec<f64> = (0..n).map(|_| r.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    ProbabilityVector::new(raw.iter().map(|v| v / total).collect()).unwrap()
}

fn log_uniform(r: &mut ChaCha20Rng, lo_exp: f64, hi_exp: f64) -> f64 {
    10f64.powf(r.random_range(lo_exp..hi_exp))
}

fn max_abs_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Bayes' theorem in log space with a max-shifted log-sum-exp.
fn bayes_oracle(prior: &[f64], likelihood: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = prior
        .iter()
        .zip(likelihood)
        .map(|(p, l)| p.ln() + l.ln())
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logs.iter().map(|v| (v - top).exp()).sum();
    logs.iter().map(|v| (v - top).exp() / z).collect()
}

fn bayes_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let n = r.random_range(2..=10);
        let p = random_prior(&mut r, n);
        let lik: Vec<f64> = (0..n).map(|_| log_uniform(&mut r, -3.0, 0.0)).collect();
        let post =
            inferential_update(&p, &ScoreVector::multiplicative(lik.clone()).unwrap()).unwrap();
        worst = worst.max(max_abs_gap(&post, &bayes_oracle(&p, &lik)));
    }
    let t = secs(start.elapsed());
    outcome(
        worst <= EXACT_TOL && t < 1.0,
        format!("1000 instances, max |err| = {worst:.3e} (tol 1e-12), {t:.3}s (limit 1s)"),
    )
}

/// Random q vectors, a quarter of them on a coarse grid so ties occur.
fn normalization_instances() -> Vec<Vec<f64>> {
    let mut r = rng(2);
    (0..10_000)
        .map(|k| {
            let n = r.random_range(1..=ORACLE_MAX_LEN);
            (0..n)
                .map(|_| {
                    let v: f64 = r.random_range(-1.0..2.0);
                    if k % 4 == 0 {
                        (v * 4.0).round() / 4.0
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect()
}

fn oracle_equivalence(instances: &[Vec<f64>]) -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut set_mismatches = 0usize;
    for q in instances {
        let fast = conservative_normalize(q).unwrap();
        let slow = brute_force_normalize_oracle(q).unwrap();
        worst = worst
            .max(max_abs_gap(&fast.posterior, &slow.posterior))
            .max((fast.d - slow.d).abs());
        if fast.zeroed != slow.zeroed || fast.m != slow.m {
            set_mismatches += 1;
        }
    }
    let t = secs(start.elapsed());
    outcome(
        worst <= EXACT_TOL && set_mismatches == 0 && t < 10.0,
        format!(
            "{} vectors (n <= {ORACLE_MAX_LEN}), max |posterior/d gap| = {worst:.3e} (tol 1e-12), \
             zero-set/m mismatches = {set_mismatches}, {t:.3}s (limit 10s)",
            instances.len()
        ),
    )
}

fn projection_coincidence(instances: &[Vec<f64>]) -> Outcome {
    let worst = instances
        .iter()
        .map(|q| {
            let a = conservative_normalize(q).unwrap();
            let b = project_to_simplex(q).unwrap();
            max_abs_gap(&a.posterior, &b)
        })
        .fold(0.0, f64::max);
    outcome(
        worst <= EXACT_TOL,
        format!(
            "{} vectors, max |gap| = {worst:.3e} (tol 1e-12)",
            instances.len()
        ),
    )
}

fn regularity_pair() -> Outcome {
    let mut r = rng(4);
    let mut nonpositive = 0usize;
    for _ in 0..1_000 {
        let n = r.random_range(2..=10);
        let p = random_prior(&mut r, n);
        let s: Vec<f64> = (0..n).map(|_| log_uniform(&mut r, -3.0, 3.0)).collect();
        let post = inferential_update(&p, &ScoreVector::multiplicative(s).unwrap()).unwrap();
        nonpositive += post.iter().filter(|&&v| v <= 0.0 || v.is_nan()).count();
    }

    let mut without_zero = 0usize;
    let mut infeasible = 0usize;
    for _ in 0..1_000 {
        let n = r.random_range(2..=10);
        let scale = log_uniform(&mut r, -2.0, 1.0);
        let e = loop {
            let v: Vec<f64> = (0..n).map(|_| scale * r.random_range(-1.0..1.0)).collect();
            if v.iter().any(|&x| x != v[0]) {
                break ScoreVector::additive(v).unwrap();
            }
        };
        match construct_regularity_violation(&e) {
            Ok((prior, _)) => {
                let post = predictive_update(&prior, &e).unwrap();
                if !post.posterior.contains(&0.0) {
                    without_zero += 1;
                }
            }
            Err(_) => infeasible += 1,
        }
    }
    outcome(
        nonpositive == 0 && without_zero == 0 && infeasible == 0,
        format!(
            "inferential non-positive entries = {nonpositive}/1000 instances; \
             constructed priors without an exact zero = {without_zero}, infeasible = {infeasible} of 1000"
        ),
    )
}

fn general_bayes_identity() -> Outcome {
    let mut r = rng(5);
    let mut worst_update = 0.0f64;
    for _ in 0..1_000 {
        let n = r.random_range(2..=10);
        let p = random_prior(&mut r, n);
        let rate = log_uniform(&mut r, -2.0, 1.0);
        let raw: Vec<f64> = (0..n).map(|_| r.random_range(0.0..5.0)).collect();
        let losses = LossValue::batch(&raw, rate).unwrap();
        let direct = general_bayes_update(&p, &losses).unwrap();
        let composed = inferential_update(&p, &exp_loss_score(&losses).unwrap()).unwrap();
        for (a, b) in direct.iter().zip(composed.iter()) {
            worst_update = worst_update.max(rel_gap(*a, *b));
        }
    }
    let mut worst_law = 0.0f64;
    for _ in 0..1_000 {
        let rate = log_uniform(&mut r, -2.0, 1.0);
        let (x, y) = (r.random_range(0.0..5.0), r.random_range(0.0..5.0));
        let f = |v: f64| (-rate * v).exp();
        worst_law = worst_law.max(rel_gap(f(x) * f(y), f(x + y)));
    }
    outcome(
        worst_update <= IDENTITY_REL_TOL && worst_law <= EXACT_TOL,
        format!(
            "update max rel gap = {worst_update:.3e} (tol 1e-15) on 1000 instances; \
             exponential law max rel gap = {worst_law:.3e} (tol 1e-12) on 1000 pairs"
        ),
    )
}

fn invariance_suite() -> Outcome {
    let mut r = rng(6);
    let mut worst_scale = 0.0f64;
    let mut worst_shift = 0.0f64;
    for _ in 0..1_000 {
        let n = r.random_range(2..=10);
        let p = random_prior(&mut r, n);

        let s: Vec<f64> = (0..n).map(|_| r.random_range(0.1..10.0)).collect();
        let k = log_uniform(&mut r, -6.0, 6.0);
        let base =
            inferential_update(&p, &ScoreVector::multiplicative(s.clone()).unwrap()).unwrap();
        let scaled = inferential_update(
            &p,
            &ScoreVector::multiplicative(s.iter().map(|v| k * v).collect()).unwrap(),
        )
        .unwrap();
        worst_scale = worst_scale.max(max_abs_gap(&base, &scaled));

        let e: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let t = r.random_range(-10.0..10.0);
        let base = predictive_update(&p, &ScoreVector::additive(e.clone()).unwrap()).unwrap();
        let shifted = predictive_update(
            &p,
            &ScoreVector::additive(e.iter().map(|v| v + t).collect()).unwrap(),
        )
        .unwrap();
        worst_shift = worst_shift.max(max_abs_gap(&base.posterior, &shifted.posterior));
    }

    // Sequential vs one-shot batch updating. Additive scores are kept small
    // relative to the prior so that no step zeroes anything.
    let mut worst_mult = 0.0f64;
    let mut worst_add = 0.0f64;
    let mut truncated = 0usize;
    for _ in 0..1_000 {
        let n = r.random_range(2..=10);
        let p = random_prior(&mut r, n);
        let steps = r.random_range(1..=5);

        let mult: Vec<Vec<f64>> = (0..steps)
            .map(|_| (0..n).map(|_| r.random_range(0.5..2.0)).collect())
            .collect();
        let stream: Vec<ScoreVector> = mult
            .iter()
            .map(|s| ScoreVector::multiplicative(s.clone()).unwrap())
            .collect();
        let seq = sequential_update(&p, &stream, UpdateRule::Inferential).unwrap();
        let product: Vec<f64> = (0..n)
            .map(|i| p[i] * mult.iter().map(|s| s[i]).product::<f64>())
            .collect();
        let z: f64 = product.iter().sum();
        let batch: Vec<f64> = product.iter().map(|v| v / z).collect();
        worst_mult = worst_mult.max(max_abs_gap(seq.last().unwrap(), &batch));

        let add: Vec<Vec<f64>> = (0..steps)
            .map(|_| (0..n).map(|_| r.random_range(-0.001..0.001)).collect())
            .collect();
        let stream: Vec<ScoreVector> = add
            .iter()
            .map(|s| ScoreVector::additive(s.clone()).unwrap())
            .collect();
        let seq = sequential_update(&p, &stream, UpdateRule::Predictive).unwrap();
        let totals: Vec<f64> = (0..n).map(|i| add.iter().map(|s| s[i]).sum()).collect();
        let mean_total = totals.iter().sum::<f64>() / n as f64;
        let batch: Vec<f64> = (0..n).map(|i| p[i] + totals[i] - mean_total).collect();
        if batch.iter().any(|&v| v <= 0.0) || seq.iter().any(|q| q.contains(&0.0)) {
            truncated += 1;
            continue;
        }
        worst_add = worst_add.max(max_abs_gap(seq.last().unwrap(), &batch));
    }

    let worst = worst_scale.max(worst_shift).max(worst_mult).max(worst_add);
    outcome(
        worst <= EXACT_TOL && truncated == 0,
        format!(
            "scale {worst_scale:.3e}, shift {worst_shift:.3e}, batch/sequential inferential \
             {worst_mult:.3e}, predictive {worst_add:.3e} (tol 1e-12, 1000 instances each); \
             unexpectedly truncated = {truncated}"
        ),
    )
}

fn dominance() -> Outcome {
    let start = Instant::now();
    let mut r = rng(7);
    let mut not_dominated = 0usize;
    for _ in 0..1_000 {
        let n = r.random_range(2..=5);
        let c = loop {
            let v: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
            let total: f64 = v.iter().sum();
            if (total - 1.0).abs() > 1e-6 {
                break Credibility::new(v).unwrap();
            }
        };
        let report = verify_dominance_with(&c, 1e-9, DominanceSearch::default());
        if !(report.dominated && report.per_vertex_gap.iter().all(|&g| g > 0.0)) {
            not_dominated += 1;
        }
    }
    let mut dominators_found = 0usize;
    for k in 0..1_000u64 {
        let n = r.random_range(2..=5);
        let p = random_prior(&mut r, n);
        let c = Credibility::new(p.into_inner()).unwrap();
        let search = DominanceSearch {
            perturbations: 10_000,
            seed: k,
        };
        if verify_dominance_with(&c, 1e-9, search).dominated {
            dominators_found += 1;
        }
    }
    let t = secs(start.elapsed());
    outcome(
        not_dominated == 0 && dominators_found == 0 && t < 30.0,
        format!(
            "non-probabilistic not strictly dominated = {not_dominated}/1000; dominators found for \
             probabilistic vectors = {dominators_found}/1000 (10^4 perturbations each); {t:.2}s (limit 30s)"
        ),
    )
}

/// Mean and standard error of `|X - x| - |X - X'| / 2` over independent
/// standard normal pairs, scaled to N(mu, sigma^2).
fn crps_monte_carlo(mu: f64, sigma: f64, x: f64, draws: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let a: f64 = r.sample(StandardNormal);
        let b: f64 = r.sample(StandardNormal);
        let (xa, xb) = (mu + sigma * a, mu + sigma * b);
        let v = (xa - x).abs() - 0.5 * (xa - xb).abs();
        sum += v;
        sum_sq += v * v;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn crps_checks() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;

    let same = crps(&Forecast::PointMass { location: 1.5 }, 1.5).unwrap();
    let apart = crps(&Forecast::PointMass { location: -2.0 }, 1.25).unwrap();
    ok &= same == 0.0 && apart == 3.25;
    lines.push(format!("point mass {same} / {apart} (want 0 / 3.25)"));

    for (i, z) in [0.0, 1.0, 2.0].into_iter().enumerate() {
        let closed = crps(
            &Forecast::Gaussian {
                mu: 0.0,
                sigma: 1.0,
            },
            z,
        )
        .unwrap();
        let (mc, se) = crps_monte_carlo(0.0, 1.0, z, 1_000_000, 80 + i as u64);
        let within = (closed - mc).abs() <= 3.0 * se;
        ok &= within;
        lines.push(format!(
            "z={z}: closed {closed:.6} vs MC {mc:.6} ({:.2} SE)",
            (closed - mc).abs() / se
        ));
    }

    let mut r = rng(88);
    let samples: Vec<f64> = (0..100_000).map(|_| r.sample(StandardNormal)).collect();
    let x = 0.7;
    let emp = crps(&Forecast::Empirical { samples }, x).unwrap();
    let closed = crps(
        &Forecast::Gaussian {
            mu: 0.0,
            sigma: 1.0,
        },
        x,
    )
    .unwrap();
    ok &= (emp - closed).abs() <= 0.01;
    lines.push(format!(
        "empirical 1e5 gap {:.2e} (tol 0.01)",
        (emp - closed).abs()
    ));

    outcome(ok, lines.join("; "))
}

fn elimination_config() -> ExperimentConfig {
    let gauss = |mu: f64| Forecast::Gaussian { mu, sigma: 1.0 };
    ExperimentConfig {
        seed: 0,
        truth: gauss(0.0),
        models: vec![
            ModelSpec {
                label: "N(0,1)".into(),
                forecast: gauss(0.0),
            },
            ModelSpec {
                label: "N(0.5,1)".into(),
                forecast: gauss(0.5),
            },
            ModelSpec {
                label: "N(5,1)".into(),
                forecast: gauss(5.0),
            },
        ],
        horizon: 50,
        rules: vec![UpdateRule::Predictive, UpdateRule::Inferential],
        a: -1.0,
        likelihood_floor: 1e-300,
        replications: 20,
        mc_samples: None,
    }
}

fn harness_elimination() -> Outcome {
    let start = Instant::now();
    let cfg = elimination_config();
    let first = run_experiment(&cfg).unwrap();
    let second = run_experiment(&cfg).unwrap();
    let t = secs(start.elapsed());

    let final_far = |rule: &str| -> Vec<f64> {
        first
            .runs_for(rule)
            .map(|run| run.steps.last().unwrap().posterior[2])
            .collect()
    };
    let predictive = final_far("predictive");
    let inferential = final_far("inferential");
    let eliminated = predictive.iter().filter(|&&v| v == 0.0).count();
    let positive = inferential.iter().filter(|&&v| v > 0.0).count();

    let (mut a, mut b) = (Vec::new(), Vec::new());
    first.write_csv(&mut a).unwrap();
    second.write_csv(&mut b).unwrap();
    let identical = a == b;

    outcome(
        eliminated == 20 && positive == 20 && identical && t < 60.0,
        format!(
            "far model zeroed by predictive in {eliminated}/20, kept positive by inferential in \
             {positive}/20 (min {:.3e}); reruns byte-identical = {identical}; {t:.2}s for two runs (limit 60s)",
            inferential.iter().copied().fold(f64::INFINITY, f64::min)
        ),
    )
}

fn characterization() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let domain = (0.1, 10.0);
    for f in [BinaryFn::product(), BinaryFn::sum()] {
        let rep = check_combination_axioms(&f, domain, 1_000, 10, AXIOM_TOL).unwrap();
        let worst = rep.checks.iter().map(|c| c.residual).fold(0.0, f64::max);
        ok &= rep.passed() && worst < AXIOM_TOL;
        parts.push(format!(
            "{} passes={} (worst {worst:.2e})",
            f.name(),
            rep.passed()
        ));
    }
    let diff =
        check_combination_axioms(&BinaryFn::difference(), domain, 1_000, 10, AXIOM_TOL).unwrap();
    let commut = diff.check("commutativity").unwrap();
    ok &= !commut.passed;
    parts.push(format!(
        "difference commutativity fails={} (residual {:.2e})",
        !commut.passed, commut.residual
    ));

    let scale = check_commutation(
        ScoreMode::Multiplicative,
        &RescaleFamily::scale(0.01, 10.0),
        1_000,
        10,
        AXIOM_TOL,
    )
    .unwrap();
    let shift = check_commutation(
        ScoreMode::Additive,
        &RescaleFamily::shift(-1.0, 1.0),
        1_000,
        10,
        AXIOM_TOL,
    )
    .unwrap();
    let square = check_commutation(
        ScoreMode::Multiplicative,
        &RescaleFamily::square(),
        1_000,
        10,
        AXIOM_TOL,
    )
    .unwrap();
    ok &= scale.passed() && shift.passed() && !square.passed();
    parts.push(format!(
        "kx commutes={}, x+k commutes={}, x^2 fails={}",
        scale.passed(),
        shift.passed(),
        !square.passed()
    ));
    outcome(ok, parts.join("; "))
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() -> ExitCode {
    let instances = normalization_instances();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("bayes equivalence", Box::new(bayes_equivalence)),
        (
            "normalization oracle",
            Box::new(|| oracle_equivalence(&instances)),
        ),
        (
            "projection coincidence",
            Box::new(|| projection_coincidence(&instances)),
        ),
        ("regularity / violation pair", Box::new(regularity_pair)),
        ("general-Bayes identity", Box::new(general_bayes_identity)),
        ("invariance suite", Box::new(invariance_suite)),
        ("accuracy dominance", Box::new(dominance)),
        ("CRPS", Box::new(crps_checks)),
        ("harness elimination", Box::new(harness_elimination)),
        ("characterization checks", Box::new(characterization)),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failures += 1;
        }
        println!(
            "acceptance {:>2} {} {name}: {}",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
