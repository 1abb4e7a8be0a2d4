//! Termination strings `X_n`: the outcome sequences on which a fixed-angle
//! strategy stops, with their probabilities and true errors.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;

use crate::engine::TailBound;
use crate::error::{Error, Result};
use crate::model::{DiscriminationProblem, Hypothesis, Outcome, OutcomeString};
use crate::posterior::{
    error_from_log_odds, log_odds_from_counts, prior_log_odds, LikelihoodSteps, PosteriorState,
    StoppingRule,
};
use crate::scalar::{compensated_sum, CompensatedSum, Real};
use crate::strategies::{check_eps, prior_suffices, CostResult, StrategySpec};

/// Open prefixes the best-first enumeration may hold at once.
pub const MAX_OPEN_PREFIXES: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerminationString<T> {
    pub outcomes: OutcomeString,
    pub n: usize,
    /// `P(X_n) = q1 P(X_n | psi1) + q2 P(X_n | psi2)`.
    pub prob: T,
    pub prob_given_psi1: T,
    pub prob_given_psi2: T,
    /// `e(X_n)`, the posterior probability of the hypothesis not guessed.
    pub true_error: T,
    pub guess: Hypothesis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthAggregate<T> {
    pub n: usize,
    pub strings: usize,
    pub total_prob: T,
    pub mean_error: T,
}

/// Where the probability not covered by the emitted strings sits.
///
/// `lower` and `upper` bound its contribution `sum n P(X_n)` to the cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual<T> {
    pub mass: T,
    pub lower: T,
    pub upper: T,
}

impl<T: Real> Residual<T> {
    pub fn none() -> Self {
        Self {
            mass: T::zero(),
            lower: T::zero(),
            upper: T::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StringSet<T> {
    pub phi: T,
    /// Descending probability, then lexicographic.
    pub strings: Vec<TerminationString<T>>,
    pub residual: Residual<T>,
}

impl<T: Real> StringSet<T> {
    pub fn covered_prob(&self) -> T {
        compensated_sum(self.strings.iter().map(|s| s.prob))
    }

    pub fn cost(&self) -> CostResult<T> {
        cost_from_strings(&self.strings, &self.residual)
    }
}

struct Node<T> {
    prob: T,
    path: OutcomeString,
    mass: [T; 2],
    /// Log-odds if this node is a termination string.
    terminal: Option<T>,
}

impl<T: Real> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Node<T> {}

impl<T: Real> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Node<T> {
    // Max-heap order: larger probability first, then the lexicographically smaller string.
    fn cmp(&self, other: &Self) -> Ordering {
        self.prob
            .partial_cmp(&other.prob)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.path.cmp(&self.path))
    }
}

/// Termination strings of a fixed-angle strategy, most probable first.
///
/// Prefixes are expanded best-first: a prefix's probability bounds that of
/// every extension, so strings come out in non-increasing probability and
/// the first `k` emitted are exactly the `k` most probable. Stops once the
/// emitted probability reaches `coverage_target`; prefixes reaching
/// `max_depth` without terminating are left in the residual.
pub fn enumerate_strings<T: Real>(
    problem: &DiscriminationProblem<T>,
    strategy: &StrategySpec<T>,
    eps: T,
    coverage_target: T,
    max_depth: usize,
) -> Result<StringSet<T>> {
    let phi = strategy.fixed_angle(problem).ok_or_else(|| {
        Error::Unsupported(
            "LOL adapts its angle; its copy count is deterministic (lol_cost)".into(),
        )
    })?;
    if !(coverage_target > T::zero() && coverage_target <= T::one()) {
        return Err(Error::domain(
            "coverage",
            coverage_target.as_f64(),
            "(0, 1]",
        ));
    }
    check_eps(eps)?;
    let config = problem.measurement(phi)?;
    let steps = LikelihoodSteps::from_config(&config);
    let rule = StoppingRule::new(eps)?;
    let tail = TailBound::new(&config, &rule);
    let prior_lo = prior_log_odds(problem);
    let priors = [problem.q1(), problem.q2()];
    let like = |d: Outcome| {
        [
            config.likelihood(d, Hypothesis::Psi1),
            config.likelihood(d, Hypothesis::Psi2),
        ]
    };
    let likes = [
        (Outcome::One, like(Outcome::One)),
        (Outcome::Two, like(Outcome::Two)),
    ];

    let mut heap: BinaryHeap<Node<T>> = BinaryHeap::new();
    let mut residual = [CompensatedSum::default(); 3];
    let open_bound = |residual: &mut [CompensatedSum<T>; 3], mass: [T; 2], depth: usize| {
        let d = T::from_usize(depth).unwrap();
        residual[0].add(mass[0] + mass[1]);
        residual[1].add((mass[0] + mass[1]) * (d + T::one()));
        residual[2].add(mass[0] * (d + tail.psi1) + mass[1] * (d + tail.psi2));
    };

    let expand = |heap: &mut BinaryHeap<Node<T>>,
                  residual: &mut [CompensatedSum<T>; 3],
                  path: &OutcomeString,
                  mass: [T; 2]|
     -> Result<()> {
        for &(d, l) in &likes {
            let m = [mass[0] * l[0], mass[1] * l[1]];
            if m[0].is_zero() && m[1].is_zero() {
                continue;
            }
            let child = path.extended(d);
            let (m1, m2) = child.counts();
            let lo = log_odds_from_counts(prior_lo, &steps, m1, m2)?;
            if rule.is_met(lo) {
                heap.push(Node {
                    prob: m[0] + m[1],
                    path: child,
                    mass: m,
                    terminal: Some(lo),
                });
            } else if child.len() >= max_depth {
                open_bound(residual, m, child.len());
            } else {
                heap.push(Node {
                    prob: m[0] + m[1],
                    path: child,
                    mass: m,
                    terminal: None,
                });
            }
        }
        if heap.len() > MAX_OPEN_PREFIXES {
            return Err(Error::EnumerationLimit {
                limit: MAX_OPEN_PREFIXES,
            });
        }
        Ok(())
    };

    let mut strings = Vec::new();
    let mut covered = CompensatedSum::default();
    if prior_suffices(problem, eps) {
        let empty = termination_string(OutcomeString::new(), priors, prior_lo, priors);
        return Ok(StringSet {
            phi,
            strings: vec![empty],
            residual: Residual::none(),
        });
    }
    if max_depth > 0 {
        expand(&mut heap, &mut residual, &OutcomeString::new(), priors)?;
    } else {
        open_bound(&mut residual, priors, 0);
    }
    while covered.value() < coverage_target {
        let Some(node) = heap.pop() else { break };
        match node.terminal {
            Some(lo) => {
                covered.add(node.prob);
                strings.push(termination_string(node.path, node.mass, lo, priors));
            }
            None => expand(&mut heap, &mut residual, &node.path, node.mass)?,
        }
    }
    for node in heap.into_vec() {
        match node.terminal {
            Some(_) => {
                let len = T::from_usize(node.path.len()).unwrap();
                residual[0].add(node.prob);
                residual[1].add(node.prob * len);
                residual[2].add(node.prob * len);
            }
            None => open_bound(&mut residual, node.mass, node.path.len()),
        }
    }
    strings.sort_by(|a, b| {
        b.prob
            .partial_cmp(&a.prob)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.outcomes.cmp(&b.outcomes))
    });
    let residual = Residual {
        mass: residual[0].value(),
        lower: residual[1].value(),
        upper: residual[2].value(),
    };
    Ok(StringSet {
        phi,
        strings,
        residual,
    })
}

fn termination_string<T: Real>(
    path: OutcomeString,
    mass: [T; 2],
    log_odds: T,
    priors: [T; 2],
) -> TerminationString<T> {
    let state = PosteriorState::from_log_odds(log_odds, 0, 0);
    TerminationString {
        n: path.len(),
        outcomes: path,
        prob: mass[0] + mass[1],
        prob_given_psi1: mass[0] / priors[0],
        prob_given_psi2: mass[1] / priors[1],
        true_error: error_from_log_odds(log_odds),
        guess: state.guess(),
    }
}

/// Groups strings by length; `mean_error` is probability-weighted.
pub fn aggregate_by_length<T: Real>(strings: &[TerminationString<T>]) -> Vec<LengthAggregate<T>> {
    let mut groups: BTreeMap<usize, (usize, T, T)> = BTreeMap::new();
    for s in strings {
        let g = groups.entry(s.n).or_insert((0, T::zero(), T::zero()));
        g.0 += 1;
        g.1 = g.1 + s.prob;
        g.2 = g.2 + s.prob * s.true_error;
    }
    groups
        .into_iter()
        .map(|(n, (count, total, weighted))| LengthAggregate {
            n,
            strings: count,
            total_prob: total,
            mean_error: if total > T::zero() {
                weighted / total
            } else {
                T::zero()
            },
        })
        .collect()
}

/// `C = sum n P(X_n)` over the strings, plus the residual's enclosure.
pub fn cost_from_strings<T: Real>(
    strings: &[TerminationString<T>],
    residual: &Residual<T>,
) -> CostResult<T> {
    let partial = compensated_sum(strings.iter().map(|s| T::from_usize(s.n).unwrap() * s.prob));
    if residual.mass.is_zero() {
        return CostResult::exact(partial);
    }
    CostResult {
        expected_copies: partial + residual.lower,
        exact: false,
        residual_mass: residual.mass,
        bound_width: residual.upper - residual.lower,
    }
}
