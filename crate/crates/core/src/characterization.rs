//! Numerical bench for the properties that pin down the updating rules.
//!
//! Each checker samples points from a seeded stream, evaluates one or more
//! identities, and records the worst residual per identity. Residuals are
//! relative: `|lhs - rhs| / max(1, |lhs|, |rhs|)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::credal::ProbabilityVector;
use crate::error::{Error, Result};
use crate::evidence::{exp_loss_score, LossValue, ScoreMode, ScoreVector};
use crate::numeric::compensated_sum;
use crate::updating::{
    brute_force_normalize_oracle, conservative_normalize, general_bayes_update, inferential_update,
    predictive_update,
};

/// Finite-difference step, scaled by `max(1, |x|)`.
pub const FD_STEP: f64 = 1e-4;

/// Upper bound on the Archimedean witness `n`.
pub const ARCHIMEDEAN_BOUND: u64 = 1_000_000;

/// A candidate combination function `c(x, y)`.
#[derive(Clone)]
pub struct BinaryFn {
    name: String,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl BinaryFn {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn product() -> Self {
        Self::new("product", |x, y| x * y)
    }

    pub fn sum() -> Self {
        Self::new("sum", |x, y| x + y)
    }

    pub fn difference() -> Self {
        Self::new("difference", |x, y| x - y)
    }

    pub fn maximum() -> Self {
        Self::new("maximum", f64::max)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }
}

impl fmt::Debug for BinaryFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinaryFn")
            .field("name", &self.name)
            .finish()
    }
}

/// A rescaling family `f_k(x)`, with `k` drawn per sample from `params`.
#[derive(Clone)]
pub struct RescaleFamily {
    name: String,
    params: (f64, f64),
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl RescaleFamily {
    pub fn new(
        name: impl Into<String>,
        params: (f64, f64),
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            params,
            f: Arc::new(f),
        }
    }

    /// `f(x) = k x`.
    pub fn scale(lo: f64, hi: f64) -> Self {
        Self::new("scale", (lo, hi), |k, x| k * x)
    }

    /// `f(x) = x + k`.
    pub fn shift(lo: f64, hi: f64) -> Self {
        Self::new("shift", (lo, hi), |k, x| x + k)
    }

    /// `f(x) = x^2`.
    pub fn square() -> Self {
        Self::new("square", (0.0, 0.0), |_, x| x * x)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.params;
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..hi)
        }
    }
}

impl fmt::Debug for RescaleFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RescaleFamily")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

/// Worst-case result for one identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub axiom: String,
    pub passed: bool,
    /// Worst residual seen; infinite when a non-finite value turned up.
    pub residual: f64,
    /// Sample point where the worst residual occurred.
    pub location: Option<Vec<f64>>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub suite: String,
    /// Whether this suite is meant to pass; known non-examples are not.
    pub expect_pass: bool,
    pub checks: Vec<AxiomCheck>,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Fitted mixed-partial constant, for combination suites.
    pub fitted_k: Option<f64>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn as_expected(&self) -> bool {
        self.passed() == self.expect_pass
    }

    pub fn check(&self, axiom: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.axiom == axiom)
    }
}

/// Tracks the worst residual for one identity.
struct Tracker {
    axiom: &'static str,
    residual: f64,
    location: Option<Vec<f64>>,
    note: Option<String>,
}

impl Tracker {
    fn new(axiom: &'static str) -> Self {
        Self {
            axiom,
            residual: 0.0,
            location: None,
            note: None,
        }
    }

    fn record(&mut self, residual: f64, at: &[f64]) {
        let residual = if residual.is_nan() {
            f64::INFINITY
        } else {
            residual
        };
        if residual > self.residual || (residual.is_infinite() && self.location.is_none()) {
            self.residual = residual;
            self.location = Some(at.to_vec());
        }
    }

    fn compare(&mut self, lhs: f64, rhs: f64, at: &[f64]) {
        self.record(relative_gap(lhs, rhs), at);
    }

    fn finish(self, tol: f64) -> AxiomCheck {
        AxiomCheck {
            axiom: self.axiom.to_string(),
            passed: self.residual <= tol,
            residual: self.residual,
            location: self.location,
            note: self.note,
        }
    }
}

fn relative_gap(lhs: f64, rhs: f64) -> f64 {
    if !(lhs.is_finite() && rhs.is_finite()) {
        return f64::INFINITY;
    }
    (lhs - rhs).abs() / 1f64.max(lhs.abs()).max(rhs.abs())
}

fn validate_sampling(domain: (f64, f64), n_samples: usize) -> Result<()> {
    let (lo, hi) = domain;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(format!(
            "domain [{lo}, {hi}] must be bounded and non-empty"
        )));
    }
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be >= 1"));
    }
    Ok(())
}

/// Central-difference estimate of `∂²f/∂x∂y`.
fn mixed_partial(f: &BinaryFn, x: f64, y: f64) -> f64 {
    let hx = FD_STEP * x.abs().max(1.0);
    let hy = FD_STEP * y.abs().max(1.0);
    let (xp, xm, yp, ym) = (x + hx, x - hx, y + hy, y - hy);
    let num = (f.eval(xp, yp) - f.eval(xp, ym)) - (f.eval(xm, yp) - f.eval(xm, ym));
    num / ((xp - xm) * (yp - ym))
}

/// Commutativity, associativity and constancy of the mixed partial.
///
/// The mixed partial is estimated at each sampled `(x, y)` and on the
/// diagonal `(x, x)`, where commutative candidates tend to hide kinks.
pub fn check_combination_axioms(
    f: &BinaryFn,
    domain: (f64, f64),
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<AxiomReport> {
    validate_sampling(domain, n_samples)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut commut = Tracker::new("commutativity");
    let mut assoc = Tracker::new("associativity");
    let mut partial = Tracker::new("mixed_partial_constant");
    let mut estimates = Vec::with_capacity(2 * n_samples);

    for _ in 0..n_samples {
        let x = rng.random_range(domain.0..domain.1);
        let y = rng.random_range(domain.0..domain.1);
        let z = rng.random_range(domain.0..domain.1);
        let at = [x, y, z];
        commut.compare(f.eval(x, y), f.eval(y, x), &at);
        assoc.compare(f.eval(f.eval(x, y), z), f.eval(x, f.eval(y, z)), &at);
        for (a, b) in [(x, y), (x, x)] {
            let k = mixed_partial(f, a, b);
            if k.is_finite() {
                estimates.push((k, [a, b]));
            } else {
                partial.record(f64::INFINITY, &[a, b]);
            }
        }
    }

    let fitted_k = if estimates.is_empty() {
        None
    } else {
        Some(compensated_sum(estimates.iter().map(|(k, _)| *k)) / estimates.len() as f64)
    };
    if let Some(k) = fitted_k {
        for (est, at) in &estimates {
            partial.record((est - k).abs() / k.abs().max(1.0), at);
        }
    }

    Ok(AxiomReport {
        suite: format!("combination/{}", f.name()),
        expect_pass: true,
        checks: vec![commut.finish(tol), assoc.finish(tol), partial.finish(tol)],
        samples: n_samples,
        seed,
        tolerance: tol,
        fitted_k,
    })
}

fn combine(mode: ScoreMode, x: f64, y: f64) -> f64 {
    match mode {
        ScoreMode::Multiplicative => x * y,
        ScoreMode::Additive => x + y,
    }
}

fn default_domain(mode: ScoreMode) -> (f64, f64) {
    match mode {
        ScoreMode::Multiplicative => (0.1, 10.0),
        ScoreMode::Additive => (-1.0, 1.0),
    }
}

/// Checks `f(c(x, f(c(y, z)))) = f(c(f(c(x, y)), z))` on sampled triples.
///
/// Multiplicative combination samples from `[0.1, 10]` (away from zero),
/// additive from `[-1, 1]`. One `k` is drawn per triple.
pub fn check_commutation(
    combination: ScoreMode,
    family: &RescaleFamily,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<AxiomReport> {
    let domain = default_domain(combination);
    validate_sampling(domain, n_samples)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut tracker = Tracker::new("commutation");
    let c = |x, y| combine(combination, x, y);
    for _ in 0..n_samples {
        let k = family.draw(&mut rng);
        let f = |v| (family.f)(k, v);
        let x = rng.random_range(domain.0..domain.1);
        let y = rng.random_range(domain.0..domain.1);
        let z = rng.random_range(domain.0..domain.1);
        let lhs = f(c(x, f(c(y, z))));
        let rhs = f(c(f(c(x, y)), z));
        tracker.compare(lhs, rhs, &[x, y, z, k]);
    }
    let mode = match combination {
        ScoreMode::Multiplicative => "multiplicative",
        ScoreMode::Additive => "additive",
    };
    Ok(AxiomReport {
        suite: format!("commutation/{mode}/{}", family.name()),
        expect_pass: true,
        checks: vec![tracker.finish(tol)],
        samples: n_samples,
        seed,
        tolerance: tol,
        fitted_k: None,
    })
}

/// Group axioms for `(R>0, *)` or `(R, +)`, including the Archimedean
/// property with a witness search capped at [`ARCHIMEDEAN_BOUND`].
pub fn check_group_axioms(
    group: ScoreMode,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<AxiomReport> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be >= 1"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (identity, inverse): (f64, fn(f64) -> f64) = match group {
        ScoreMode::Multiplicative => (1.0, |x| 1.0 / x),
        ScoreMode::Additive => (0.0, |x| -x),
    };
    let draw = |rng: &mut ChaCha20Rng| match group {
        ScoreMode::Multiplicative => 10f64.powf(rng.random_range(-1.0..1.0)),
        ScoreMode::Additive => rng.random_range(-10.0..10.0),
    };
    // strictly above the identity, for the Archimedean witness
    let draw_positive = |rng: &mut ChaCha20Rng| match group {
        ScoreMode::Multiplicative => 1.0 + rng.random_range(1e-3..9.0),
        ScoreMode::Additive => rng.random_range(1e-3..10.0),
    };
    let op = |x, y| combine(group, x, y);

    let mut closure = Tracker::new("closure");
    let mut assoc = Tracker::new("associativity");
    let mut ident = Tracker::new("identity");
    let mut inv = Tracker::new("inverse");
    let mut commut = Tracker::new("commutativity");
    let mut arch = Tracker::new("archimedean");
    let mut missing = 0usize;

    for _ in 0..n_samples {
        let (x, y, z) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let at = [x, y, z];
        let xy = op(x, y);
        let in_set = xy.is_finite() && (group == ScoreMode::Additive || xy > 0.0);
        closure.record(if in_set { 0.0 } else { f64::INFINITY }, &at);
        assoc.compare(op(op(x, y), z), op(x, op(y, z)), &at);
        ident.compare(op(identity, x), x, &at);
        ident.compare(op(x, identity), x, &at);
        inv.compare(op(x, inverse(x)), identity, &at);
        inv.compare(op(inverse(x), x), identity, &at);
        commut.compare(xy, op(y, x), &at);

        let e2 = draw_positive(&mut rng);
        match archimedean_witness(op, x, e2) {
            Some(_) => arch.record(0.0, &[x, e2]),
            None => missing += 1,
        }
    }
    if missing > 0 {
        arch.note = Some(format!(
            "{missing} of {n_samples} pairs: no witness found within n <= {ARCHIMEDEAN_BOUND}"
        ));
    }

    let name = match group {
        ScoreMode::Multiplicative => "group/multiplicative",
        ScoreMode::Additive => "group/additive",
    };
    Ok(AxiomReport {
        suite: name.to_string(),
        expect_pass: true,
        checks: [closure, assoc, ident, inv, commut, arch]
            .into_iter()
            .map(|t| t.finish(tol))
            .collect(),
        samples: n_samples,
        seed,
        tolerance: tol,
        fitted_k: None,
    })
}

/// Smallest power of two `n <= ARCHIMEDEAN_BOUND` with `e1 < e2 • ... • e2`
/// (`n` copies), found by repeated squaring under the group operation.
pub fn archimedean_witness(op: impl Fn(f64, f64) -> f64, e1: f64, e2: f64) -> Option<u64> {
    let mut power = e2;
    let mut n = 1u64;
    loop {
        if e1 < power {
            return Some(n);
        }
        if n * 2 > ARCHIMEDEAN_BOUND || !power.is_finite() {
            return None;
        }
        power = op(power, power);
        n *= 2;
    }
}

/// Builds a prior that predictive updating on `e` is forced to zero out.
///
/// Let `i` hold the smallest score and `r = e_i - mean(e) < 0`. The prior
/// puts `h_i = min(-r/2, 1/(2n))` on `i` and spreads the rest evenly, so
/// `q_i` is the unique smallest combined value and `q_i - mean(e) < 0`.
pub fn construct_regularity_violation(e: &ScoreVector) -> Result<(ProbabilityVector, usize)> {
    e.expect_mode(ScoreMode::Additive)?;
    let scores = e.scores();
    let n = scores.len();
    if n < 2 {
        return Err(Error::invalid("need at least two hypotheses"));
    }
    let (target, &smallest) = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("non-empty");
    let mean = compensated_sum(scores.iter().copied()) / n as f64;
    let r = smallest - mean;
    if r >= 0.0 {
        return Err(Error::Infeasible(
            "constant evidence cannot force a hypothesis to zero".into(),
        ));
    }
    let h = (-r / 2.0).min(0.5 / n as f64);
    let rest = (1.0 - h) / (n - 1) as f64;
    let prior: Vec<f64> = (0..n).map(|i| if i == target { h } else { rest }).collect();
    let prior = ProbabilityVector::new(prior)?;

    let result = predictive_update(&prior, e)?;
    if !result.zeroed.contains(&target) {
        return Err(Error::Infeasible(format!(
            "evidence spread {r:e} is too small to force a zero in floating point"
        )));
    }
    Ok((prior, target))
}

/// Draws a non-constant additive score vector of length `2..=max_len`.
fn random_additive<R: Rng>(rng: &mut R, max_len: usize) -> ScoreVector {
    loop {
        let n = rng.random_range(2..=max_len);
        let scale = 10f64.powf(rng.random_range(-2.0..1.0));
        let v: Vec<f64> = (0..n)
            .map(|_| scale * rng.random_range(-1.0..1.0))
            .collect();
        if v.iter().any(|&x| x != v[0]) {
            return ScoreVector::additive(v).expect("finite scores");
        }
    }
}

/// Runs [`construct_regularity_violation`] on random evidence and checks
/// that every constructed prior ends with at least one exact zero.
pub fn check_regularity_violations(n_samples: usize, seed: u64) -> Result<AxiomReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut zero_found = Tracker::new("forced_zero");
    let mut target_zeroed = Tracker::new("target_zeroed");
    for _ in 0..n_samples {
        let e = random_additive(&mut rng, 8);
        let (prior, target) = construct_regularity_violation(&e)?;
        let post = predictive_update(&prior, &e)?;
        let zeros = post.posterior.iter().filter(|&&v| v == 0.0).count();
        zero_found.record(if zeros >= 1 { 0.0 } else { 1.0 }, e.scores());
        target_zeroed.record(
            if post.posterior[target] == 0.0 {
                0.0
            } else {
                1.0
            },
            e.scores(),
        );
    }
    Ok(AxiomReport {
        suite: "regularity_violation".into(),
        expect_pass: true,
        checks: vec![zero_found.finish(0.0), target_zeroed.finish(0.0)],
        samples: n_samples,
        seed,
        tolerance: 0.0,
        fitted_k: None,
    })
}

/// Compares the sorting normalization with the enumeration oracle.
pub fn check_normalization_oracle(n_samples: usize, seed: u64, tol: f64) -> Result<AxiomReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut posterior = Tracker::new("posterior");
    let mut constant = Tracker::new("d");
    let mut zero_set = Tracker::new("zero_set");
    for _ in 0..n_samples {
        let n = rng.random_range(1..=crate::updating::ORACLE_MAX_LEN);
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
        let fast = conservative_normalize(&q)?;
        let slow = brute_force_normalize_oracle(&q)?;
        for (a, b) in fast.posterior.iter().zip(slow.posterior.iter()) {
            posterior.record((a - b).abs(), &q);
        }
        constant.record((fast.d - slow.d).abs(), &q);
        let same = fast.zeroed == slow.zeroed && fast.m == slow.m;
        zero_set.record(if same { 0.0 } else { f64::INFINITY }, &q);
    }
    Ok(AxiomReport {
        suite: "normalization_oracle".into(),
        expect_pass: true,
        checks: vec![
            posterior.finish(tol),
            constant.finish(tol),
            zero_set.finish(tol),
        ],
        samples: n_samples,
        seed,
        tolerance: tol,
        fitted_k: None,
    })
}

fn relative_entry_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Residual report behind [`verify_general_bayes_equivalence`].
pub fn general_bayes_equivalence_report(
    p: &ProbabilityVector,
    losses: &[LossValue],
    n_random_pairs: usize,
    seed: u64,
    tol: f64,
) -> Result<AxiomReport> {
    let direct = general_bayes_update(p, losses)?;
    let composed = inferential_update(p, &exp_loss_score(losses)?)?;
    let mut update = Tracker::new("update_equivalence");
    for (i, (a, b)) in direct.iter().zip(composed.iter()).enumerate() {
        update.record(relative_entry_gap(*a, *b), &[i as f64, *a, *b]);
    }

    let rate = losses[0].learning_rate();
    let f = |x: f64| (-rate * x).exp();
    let mut law = Tracker::new("exponential_law");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..n_random_pairs {
        let x = rng.random_range(0.0..10.0);
        let y = rng.random_range(0.0..10.0);
        law.record(relative_entry_gap(f(x) * f(y), f(x + y)), &[x, y]);
    }
    Ok(AxiomReport {
        suite: "general_bayes_equivalence".into(),
        expect_pass: true,
        checks: vec![update.finish(tol), law.finish(tol)],
        samples: n_random_pairs,
        seed,
        tolerance: tol,
        fitted_k: None,
    })
}

/// True when exponentiated-loss updating agrees with inferential updating
/// on `exp(-rate * L)` scores and `f(x) f(y) = f(x + y)` holds on random
/// pairs, both within `tol` (relative).
pub fn verify_general_bayes_equivalence(
    p: &ProbabilityVector,
    losses: &[LossValue],
    n_random_pairs: usize,
    seed: u64,
    tol: f64,
) -> Result<bool> {
    general_bayes_equivalence_report(p, losses, n_random_pairs, seed, tol).map(|r| r.passed())
}

/// Every suite run by the `props` command.
pub fn standard_suites(tol: f64, seed: u64) -> Result<Vec<AxiomReport>> {
    const SAMPLES: usize = 1_000;
    let domain = (0.1, 10.0);
    let expect_fail = |mut r: AxiomReport| {
        r.expect_pass = false;
        r
    };
    let mut reports = vec![
        check_combination_axioms(&BinaryFn::product(), domain, SAMPLES, seed, tol)?,
        check_combination_axioms(&BinaryFn::sum(), domain, SAMPLES, seed, tol)?,
        expect_fail(check_combination_axioms(
            &BinaryFn::difference(),
            domain,
            SAMPLES,
            seed,
            tol,
        )?),
        expect_fail(check_combination_axioms(
            &BinaryFn::maximum(),
            domain,
            SAMPLES,
            seed,
            tol,
        )?),
        check_commutation(
            ScoreMode::Multiplicative,
            &RescaleFamily::scale(0.01, 10.0),
            SAMPLES,
            seed,
            tol,
        )?,
        check_commutation(
            ScoreMode::Additive,
            &RescaleFamily::shift(-1.0, 1.0),
            SAMPLES,
            seed,
            tol,
        )?,
        expect_fail(check_commutation(
            ScoreMode::Multiplicative,
            &RescaleFamily::square(),
            SAMPLES,
            seed,
            tol,
        )?),
        check_group_axioms(ScoreMode::Multiplicative, SAMPLES, seed, tol)?,
        check_group_axioms(ScoreMode::Additive, SAMPLES, seed, tol)?,
    ];
    let p = ProbabilityVector::new(vec![0.2, 0.3, 0.5])?;
    let losses = LossValue::batch(&[0.5, 1.5, 4.0], 2.0)?;
    reports.push(general_bayes_equivalence_report(
        &p, &losses, SAMPLES, seed, tol,
    )?);
    reports.push(check_regularity_violations(SAMPLES, seed)?);
    reports.push(check_normalization_oracle(SAMPLES, seed, tol)?);
    Ok(reports)
}
