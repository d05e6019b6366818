//! Accuracy dominance under squared Euclidean divergence.
//!
//! A credibility function that is not a probability vector is strictly
//! beaten, at every ideal vertex, by its Euclidean projection onto the
//! simplex. A probability vector admits no such improvement; here that half
//! is probed by randomized search, so a negative result reads "no dominator
//! found" rather than a proof.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::credal::{Credibility, ProbabilityVector};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    #[default]
    SquaredEuclidean,
}

pub fn divergence(kind: Divergence, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("divergence arguments must be finite"));
    }
    Ok(match kind {
        Divergence::SquaredEuclidean => {
            compensated_sum(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)))
        }
    })
}

/// Squared distance from `c` to the ideal vertex `e_j`.
fn vertex_divergence(c: &[f64], j: usize) -> f64 {
    compensated_sum(c.iter().enumerate().map(|(i, &x)| {
        let t = if i == j { 1.0 } else { 0.0 };
        (x - t) * (x - t)
    }))
}

/// Euclidean projection onto the probability simplex.
///
/// Uses Michelot's active-set iteration: shift the active entries so they sum
/// to one, drop those that became non-positive, repeat until stable.
pub fn project_to_simplex(v: &[f64]) -> Result<ProbabilityVector> {
    if v.is_empty() {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("projection input must be finite"));
    }
    let mut active: Vec<usize> = (0..v.len()).collect();
    let tau = loop {
        let tau = (compensated_sum(active.iter().map(|&i| v[i])) - 1.0) / active.len() as f64;
        let before = active.len();
        active.retain(|&i| v[i] - tau > 0.0);
        if active.len() == before {
            break tau;
        }
        if active.is_empty() {
            return Err(Error::Internal(
                "projection removed every coordinate".into(),
            ));
        }
    };
    let mut out = vec![0.0; v.len()];
    for &i in &active {
        out[i] = v[i] - tau;
    }
    ProbabilityVector::new(out)
}

/// Outcome of a dominance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub dominated: bool,
    pub dominator: Option<ProbabilityVector>,
    /// `D(c, v_j) - D(candidate, v_j)` per ideal vertex `v_j`. For an
    /// undominated input this holds the gaps of the best candidate tried.
    pub per_vertex_gap: Vec<f64>,
    /// "dominated" or "no dominator found".
    pub verdict: String,
    pub candidates_tried: usize,
}

/// Parameters of the randomized dominator search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceSearch {
    pub perturbations: usize,
    pub seed: u64,
}

impl Default for DominanceSearch {
    fn default() -> Self {
        Self {
            perturbations: 10_000,
            seed: 0,
        }
    }
}

fn gaps(c: &[f64], candidate: &[f64]) -> Vec<f64> {
    (0..c.len())
        .map(|j| vertex_divergence(c, j) - vertex_divergence(candidate, j))
        .collect()
}

pub fn verify_dominance(c: &Credibility, eps: f64) -> DominanceReport {
    verify_dominance_with(c, eps, DominanceSearch::default())
}

pub fn verify_dominance_with(
    c: &Credibility,
    eps: f64,
    search: DominanceSearch,
) -> DominanceReport {
    let values = c.values();
    if !c.is_probabilistic(eps) {
        let projected = project_to_simplex(values).expect("credibility entries are finite");
        let per_vertex_gap = gaps(values, &projected);
        let dominated = per_vertex_gap.iter().all(|&g| g > 0.0);
        return DominanceReport {
            dominated,
            dominator: dominated.then_some(projected),
            per_vertex_gap,
            verdict: verdict(dominated).into(),
            candidates_tried: 1,
        };
    }
    search_dominator(values, search)
}

fn verdict(dominated: bool) -> &'static str {
    if dominated {
        "dominated"
    } else {
        "no dominator found"
    }
}

fn search_dominator(c: &[f64], search: DominanceSearch) -> DominanceReport {
    let n = c.len();
    let mut rng = ChaCha20Rng::seed_from_u64(search.seed);
    let base: Vec<f64> = (0..n).map(|j| vertex_divergence(c, j)).collect();
    let mut candidate = vec![0.0; n];
    let mut best_gap = vec![f64::NEG_INFINITY; n];
    let mut best_min = f64::NEG_INFINITY;
    for k in 0..search.perturbations {
        // log-uniform perturbation scale between 1e-4 and 1
        let scale = 10f64.powf(rng.random_range(-4.0..0.0));
        for (slot, &x) in candidate.iter_mut().zip(c) {
            *slot = (x + scale * rng.random_range(-1.0..1.0)).clamp(0.0, 1.0);
        }
        let gap: Vec<f64> = base
            .iter()
            .enumerate()
            .map(|(j, &b)| b - vertex_divergence(&candidate, j))
            .collect();
        let min = gap.iter().copied().fold(f64::INFINITY, f64::min);
        if min > best_min {
            best_min = min;
            best_gap = gap;
        }
        if min > 0.0 {
            // a dominator's projection dominates too, and is probabilistic
            let projected = project_to_simplex(&candidate).expect("finite candidate");
            return DominanceReport {
                dominated: true,
                per_vertex_gap: gaps(c, &projected),
                dominator: Some(projected),
                verdict: verdict(true).into(),
                candidates_tried: k + 1,
            };
        }
    }
    DominanceReport {
        dominated: false,
        dominator: None,
        per_vertex_gap: best_gap,
        verdict: verdict(false).into(),
        candidates_tried: search.perturbations,
    }
}
