//! Selecting one candidate among many using only noisy discrete samples.
//!
//! For candidates `u_1..u_N` sampled on a cap rule and a noisy reference
//! `f = D u† + ξ`, define the normalized difference directions
//! `a_{k,l} = (u_k − u_l) / ‖u_k − u_l‖`, the discrepancies
//! `h_k(a) = ⟨u_k, a⟩ − ⟨f, a⟩` and the scores `H_k = max_a |h_k(a)|`.
//! The chosen index minimizes `H_k`. If the rule reproduces the `L²(Γ_r)`
//! inner product on the candidates' span then
//!
//! ```text
//! ‖u_{k*} − u_{k_opt}‖ ≤ H_{k*} + H_{k_opt} ≤ 2 H_{k_opt}
//! ‖u† − u_{k*}‖ ≤ ‖u† − u_{k_opt}‖ + 2 ‖D u† − D u_{k_opt}‖ + 2ε
//! ```
//!
//! All inner products here are the rule's weighted discrete ones.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{weighted_dot, DiscreteField};
use crate::quadrature::QuadratureRule;
use crate::scalar::Real;

/// Relative threshold below which two candidates count as identical.
pub const DEFAULT_PAIR_TOLERANCE: f64 = 1e-12;

/// One normalized direction `a_{k,l}`, `k < l`.
#[derive(Debug, Clone)]
pub struct Direction<T> {
    pub pair: (usize, usize),
    pub values: DiscreteField<T>,
}

/// The set `A_N`, one entry per unordered pair of distinct candidates.
#[derive(Debug, Clone)]
pub struct DirectionSet<T> {
    pub directions: Vec<Direction<T>>,
    pub norm_tolerance: T,
}

impl<T: Real> DirectionSet<T> {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

fn check_inputs<T: Real>(rule: &QuadratureRule<T>, fields: &[&DiscreteField<T>]) -> Result<()> {
    if fields.iter().any(|f| f.rule_id() != rule.id()) {
        return Err(Error::RuleMismatch);
    }
    Ok(())
}

/// Indices and discrete norms of the non-degenerate candidate differences.
fn difference_pairs<T: Real>(
    rule: &QuadratureRule<T>,
    candidates: &[DiscreteField<T>],
    tol: T,
) -> Vec<(usize, usize, T)> {
    let norms: Vec<T> = candidates
        .iter()
        .map(|u| weighted_dot(rule, u.values(), u.values()).sqrt())
        .collect();
    let threshold = tol * norms.iter().fold(T::zero(), |m, &v| m.max(v));
    let n = candidates.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|k| (k + 1..n).map(move |l| (k, l)))
        .collect();
    pairs
        .par_iter()
        .map(|&(k, l)| {
            let d: Vec<T> = candidates[k]
                .values()
                .iter()
                .zip(candidates[l].values())
                .map(|(&a, &b)| a - b)
                .collect();
            (k, l, weighted_dot(rule, &d, &d).sqrt())
        })
        .collect::<Vec<_>>()
        .into_iter()
        .filter(|&(_, _, norm)| norm > threshold)
        .collect()
}

/// Builds the normalized direction set. Each unordered pair is stored once
/// since `a_{l,k} = −a_{k,l}` and only `|h_k(a)|` enters the scores.
pub fn build_directions<T: Real>(
    rule: &QuadratureRule<T>,
    candidates: &[DiscreteField<T>],
    tol: T,
) -> Result<DirectionSet<T>> {
    check_inputs(rule, &candidates.iter().collect::<Vec<_>>())?;
    let directions = difference_pairs(rule, candidates, tol)
        .into_iter()
        .map(|(k, l, norm)| {
            let values = candidates[k].lincomb(T::one() / norm, &candidates[l], -T::one() / norm)?;
            Ok(Direction {
                pair: (k, l),
                values,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DirectionSet {
        directions,
        norm_tolerance: tol,
    })
}

/// `h_k(a) = ⟨u_k, a⟩ − ⟨f, a⟩`.
pub fn surrogate_h<T: Real>(
    rule: &QuadratureRule<T>,
    u_k: &DiscreteField<T>,
    a: &DiscreteField<T>,
    f_noisy: &DiscreteField<T>,
) -> Result<T> {
    check_inputs(rule, &[u_k, a, f_noisy])?;
    Ok(weighted_dot(rule, u_k.values(), a.values()) - weighted_dot(rule, f_noisy.values(), a.values()))
}

/// Outcome of one selection, optionally enriched with truth-based errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport<T> {
    /// Scores `H_k`.
    pub h: Vec<T>,
    /// Chosen index (0-based).
    pub k_star: usize,
    /// Index of the smallest true error (0-based), when known.
    pub k_opt: Option<usize>,
    pub err_k: Option<Vec<T>>,
    pub err_star: Option<T>,
    pub err_opt: Option<T>,
    pub err_max: Option<T>,
    pub err_av: Option<T>,
    pub bound_lhs: Option<T>,
    pub bound_rhs: Option<T>,
    pub epsilon_used: T,
    /// Number of directions the scores were maximized over.
    pub n_directions: usize,
}

impl<T: Real> SelectionReport<T> {
    /// Attaches true relative errors per candidate and derives the summary
    /// statistics. `k_opt` is the smallest index of minimal error.
    pub fn with_errors(mut self, err_k: Vec<T>) -> Result<Self> {
        if err_k.len() != self.h.len() {
            return Err(Error::InvalidArgument("one error per candidate expected".into()));
        }
        let k_opt = argmin(&err_k);
        let max = err_k.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let av = err_k.iter().copied().sum::<T>() / T::of(err_k.len());
        self.err_star = Some(err_k[self.k_star]);
        self.err_opt = Some(err_k[k_opt]);
        self.err_max = Some(max);
        self.err_av = Some(av);
        self.k_opt = Some(k_opt);
        self.err_k = Some(err_k);
        Ok(self)
    }
}

/// First index attaining the minimum.
fn argmin<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Computes every `H_k` and picks the minimizer, ties to the smallest index.
///
/// Cost is `O(N² M)`: each direction is formed once and dotted against all
/// residuals `u_k − f`. Per-direction work is parallel; the reduction runs in
/// index order so results are bit-reproducible.
pub fn select<T: Real>(
    rule: &QuadratureRule<T>,
    candidates: &[DiscreteField<T>],
    f_noisy: &DiscreteField<T>,
    tol: T,
) -> Result<SelectionReport<T>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates to select from".into()));
    }
    let mut all: Vec<&DiscreteField<T>> = candidates.iter().collect();
    all.push(f_noisy);
    check_inputs(rule, &all)?;
    let residuals: Vec<Vec<T>> = candidates
        .iter()
        .map(|u| {
            u.values()
                .iter()
                .zip(f_noisy.values())
                .map(|(&a, &b)| a - b)
                .collect()
        })
        .collect();
    let pairs = difference_pairs(rule, candidates, tol);
    // per direction: |h_k(a)| for every k
    let per_dir: Vec<Vec<T>> = pairs
        .par_iter()
        .map(|&(k, l, norm)| {
            let d: Vec<T> = candidates[k]
                .values()
                .iter()
                .zip(candidates[l].values())
                .map(|(&a, &b)| (a - b) / norm)
                .collect();
            residuals
                .iter()
                .map(|res| weighted_dot(rule, res, &d).abs())
                .collect()
        })
        .collect();
    let mut h = vec![T::zero(); candidates.len()];
    for row in &per_dir {
        for (hk, &v) in h.iter_mut().zip(row) {
            *hk = hk.max(v);
        }
    }
    Ok(SelectionReport {
        k_star: argmin(&h),
        h,
        k_opt: None,
        err_k: None,
        err_star: None,
        err_opt: None,
        err_max: None,
        err_av: None,
        bound_lhs: None,
        bound_rhs: None,
        epsilon_used: T::zero(),
        n_directions: pairs.len(),
    })
}

/// Both sides of the error bound for the chosen candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
}

/// Checks `‖u† − u_{k*}‖ ≤ ‖u† − u_{k_opt}‖ + 2‖Du† − Du_{k_opt}‖ + 2ε`.
///
/// Every norm is the discrete one on `rule`; the first and second right-hand
/// terms therefore coincide and are both kept to mirror the statement.
/// `epsilon` is the absolute noise norm `‖Du† − f‖`. The report's `k_opt` is
/// used when present, otherwise the discrete-norm minimizer.
pub fn verify_theorem<T: Real>(
    rule: &QuadratureRule<T>,
    report: &mut SelectionReport<T>,
    candidates: &[DiscreteField<T>],
    truth: &DiscreteField<T>,
    epsilon: T,
) -> Result<TheoremCheck<T>> {
    let mut all: Vec<&DiscreteField<T>> = candidates.iter().collect();
    all.push(truth);
    check_inputs(rule, &all)?;
    let dist = |u: &DiscreteField<T>| -> T {
        let d: Vec<T> = u
            .values()
            .iter()
            .zip(truth.values())
            .map(|(&a, &b)| a - b)
            .collect();
        weighted_dot(rule, &d, &d).sqrt()
    };
    let k_opt = match report.k_opt {
        Some(k) => k,
        None => argmin(&candidates.iter().map(dist).collect::<Vec<_>>()),
    };
    let lhs = dist(&candidates[report.k_star]);
    let opt = dist(&candidates[k_opt]);
    let rhs = opt + T::lit(2.0) * opt + T::lit(2.0) * epsilon;
    let scale = weighted_dot(rule, truth.values(), truth.values()).sqrt() + rhs;
    let holds = lhs <= rhs + T::lit(1e-9) * scale;
    report.bound_lhs = Some(lhs);
    report.bound_rhs = Some(rhs);
    report.epsilon_used = epsilon;
    Ok(TheoremCheck { lhs, rhs, holds })
}
