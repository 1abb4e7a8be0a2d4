//! Expected stopping time of any fixed-angle strategy.
//!
//! The lattice engine propagates the unterminated probability mass over
//! outcome-count states `(m1, m2)` one copy at a time, under each hypothesis
//! separately. A state is absorbed the moment its posterior error is within
//! the bound, so a terminated prefix is never extended. The brute-force tree
//! walks every outcome string instead and serves as an independent check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscriminationProblem, Hypothesis, MeasurementConfig, Outcome};
use crate::posterior::{log_odds_from_counts, prior_log_odds, LikelihoodSteps, StoppingRule};
use crate::scalar::{mul_zero_inf, Real};
use crate::strategies::{
    check_eps, fbm_cost, lol_cost_result, prior_suffices, ubm_cost, CostResult, StrategySpec,
};

/// Deepest tree the brute-force enumeration will walk.
pub const BRUTE_FORCE_DEPTH_LIMIT: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineMode {
    DpLattice,
    BruteForceTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    /// Truncation depth.
    pub max_copies: u64,
    /// Stop once the unterminated mass is at most this.
    pub mass_tolerance: f64,
    /// Widest enclosure accepted from a run truncated at `max_copies`.
    pub max_bound_width: f64,
    /// Most count states the frontier may hold before the run is abandoned.
    pub max_frontier: usize,
    pub mode: EngineMode,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            max_copies: 100_000,
            mass_tolerance: 1e-12,
            max_bound_width: 1e-6,
            max_frontier: 10_000,
            mode: EngineMode::DpLattice,
        }
    }
}

impl EngineOptions {
    fn validate(&self) -> Result<()> {
        if self.max_copies < 1 {
            return Err(Error::domain("max_copies", 0.0, ">= 1"));
        }
        if !(self.mass_tolerance > 0.0 && self.mass_tolerance < 1.0) {
            return Err(Error::domain(
                "mass_tolerance",
                self.mass_tolerance,
                "(0, 1)",
            ));
        }
        Ok(())
    }
}

/// Upper bounds on the expected number of further copies from any
/// unterminated state, per true hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound<T> {
    pub psi1: T,
    pub psi2: T,
}

impl<T: Real> TailBound<T> {
    /// Unterminated states have `|lambda| < A`. Under `psi1` the log-odds
    /// drifts up at `mu1 = KL > 0`; the one-sided passage time to `A` bounds
    /// the two-sided one, and Wald's identity with the overshoot capped by
    /// `step1` gives `E[rest] <= (2A + step1) / mu1`. An outcome with an
    /// infinite step absorbs on sight, giving the geometric bound `1 / p`.
    /// The smaller applicable bound is used; `psi2` is the mirror image.
    pub fn new(config: &MeasurementConfig<T>, rule: &StoppingRule<T>) -> Self {
        let steps = LikelihoodSteps::from_config(config);
        let a = rule.threshold();
        let one_side = |p_toward: T, step_toward: T, p_away: T, step_away: T| {
            let geometric = if step_toward.is_infinite() && p_toward > T::zero() {
                T::one() / p_toward
            } else {
                T::infinity()
            };
            let drift = mul_zero_inf(p_toward, step_toward) + mul_zero_inf(p_away, step_away);
            let wald = if step_toward.is_finite() && drift.is_finite() && drift > T::zero() {
                (T::lit(2.0) * a + step_toward) / drift
            } else {
                T::infinity()
            };
            geometric.min(wald).max(T::one())
        };
        Self {
            psi1: one_side(
                config.p1_given_psi1(),
                steps.step1,
                config.p2_given_psi1(),
                steps.step2,
            ),
            psi2: one_side(
                config.p2_given_psi2(),
                -steps.step2,
                config.p1_given_psi2(),
                -steps.step1,
            ),
        }
    }

    pub fn max(&self) -> T {
        self.psi1.max(self.psi2)
    }
}

/// Cost and enclosure from the accumulated sum `sum n P(tau = n)` over
/// `n <= depth` and the per-hypothesis joint mass still unterminated.
fn enclosure<T: Real>(
    accum: T,
    depth: u64,
    residual: [T; 2],
    tail: &TailBound<T>,
) -> CostResult<T> {
    let total = residual[0] + residual[1];
    if total.is_zero() {
        return CostResult::exact(accum);
    }
    let n = T::from_u64(depth).unwrap();
    let width = mul_zero_inf(residual[0], tail.psi1 - T::one())
        + mul_zero_inf(residual[1], tail.psi2 - T::one());
    CostResult {
        expected_copies: accum + total * (n + T::one()),
        exact: false,
        residual_mass: total,
        bound_width: width,
    }
}

/// A count state removed from the frontier because it met the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Absorbed<T> {
    pub n: u64,
    pub m1: u64,
    pub m2: u64,
    /// Joint masses `q_j P(reach (m1, m2) unterminated | psi_j)`.
    pub mass: [T; 2],
    pub log_odds: T,
}

/// Unterminated mass over the count states at the current depth.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFrontier<T> {
    depth: u64,
    first_m1: u64,
    mass: Vec<[T; 2]>,
}

impl<T: Real> LatticeFrontier<T> {
    /// Depth zero: the empty string carrying the priors.
    pub fn new(problem: &DiscriminationProblem<T>) -> Self {
        Self {
            depth: 0,
            first_m1: 0,
            mass: vec![[problem.q1(), problem.q2()]],
        }
    }

    pub fn depth(&self) -> u64 {
        self.depth
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Number of stored count states.
    pub fn width(&self) -> usize {
        self.mass.len()
    }

    /// Joint unterminated mass under `psi1` and `psi2`.
    pub fn mass(&self) -> [T; 2] {
        self.mass
            .iter()
            .fold([T::zero(); 2], |acc, m| [acc[0] + m[0], acc[1] + m[1]])
    }

    /// `(m1, m2, mass)` for every stored state.
    pub fn states(&self) -> impl Iterator<Item = (u64, u64, [T; 2])> + '_ {
        self.mass.iter().enumerate().map(move |(i, m)| {
            let m1 = self.first_m1 + i as u64;
            (m1, self.depth - m1, *m)
        })
    }

    /// Consumes one more copy. Every state that meets the stopping rule is
    /// passed to `on_absorb` and dropped.
    pub fn advance(
        &mut self,
        config: &MeasurementConfig<T>,
        steps: &LikelihoodSteps<T>,
        prior_lo: T,
        rule: &StoppingRule<T>,
        mut on_absorb: impl FnMut(Absorbed<T>),
    ) -> Result<()> {
        let like1 = [config.p1_given_psi1(), config.p1_given_psi2()];
        let like2 = [config.p2_given_psi1(), config.p2_given_psi2()];
        let old = std::mem::take(&mut self.mass);
        let mut next = vec![[T::zero(); 2]; old.len() + 1];
        for (i, m) in old.iter().enumerate() {
            for j in 0..2 {
                // Outcome 1 raises m1 (index + 1); outcome 2 keeps it.
                next[i + 1][j] = next[i + 1][j] + m[j] * like1[j];
                next[i][j] = next[i][j] + m[j] * like2[j];
            }
        }
        self.depth += 1;
        for (i, m) in next.iter_mut().enumerate() {
            if m[0].is_zero() && m[1].is_zero() {
                continue;
            }
            let m1 = self.first_m1 + i as u64;
            let m2 = self.depth - m1;
            let lo = log_odds_from_counts(prior_lo, steps, m1, m2)?;
            if rule.is_met(lo) {
                on_absorb(Absorbed {
                    n: self.depth,
                    m1,
                    m2,
                    mass: *m,
                    log_odds: lo,
                });
                *m = [T::zero(); 2];
            }
        }
        let is_live = |m: &[T; 2]| !(m[0].is_zero() && m[1].is_zero());
        let start = next.iter().position(is_live).unwrap_or(next.len());
        let end = next.iter().rposition(is_live).map_or(start, |e| e + 1);
        self.first_m1 += start as u64;
        next.truncate(end);
        next.drain(..start);
        self.mass = next;
        Ok(())
    }
}

struct Prepared<T> {
    config: MeasurementConfig<T>,
    steps: LikelihoodSteps<T>,
    rule: StoppingRule<T>,
    prior_lo: T,
}

fn prepare<T: Real>(problem: &DiscriminationProblem<T>, phi: T, eps: T) -> Result<Prepared<T>> {
    check_eps(eps)?;
    let config = problem.measurement(phi)?;
    Ok(Prepared {
        steps: LikelihoodSteps::from_config(&config),
        rule: StoppingRule::new(eps)?,
        prior_lo: prior_log_odds(problem),
        config,
    })
}

/// Expected copies for the fixed measurement angle `phi`.
pub fn fixed_angle_cost<T: Real>(
    problem: &DiscriminationProblem<T>,
    phi: T,
    eps: T,
    opts: &EngineOptions,
) -> Result<CostResult<T>> {
    opts.validate()?;
    if opts.mode == EngineMode::BruteForceTree {
        let depth = usize::try_from(opts.max_copies).unwrap_or(usize::MAX);
        return brute_force_cost(problem, phi, eps, depth);
    }
    let prep = prepare(problem, phi, eps)?;
    if prior_suffices(problem, eps) {
        return Ok(CostResult::exact(T::zero()));
    }
    // No string can terminate before the log-odds has travelled from the
    // prior to the threshold in steps of at most the largest size.
    let biggest = prep.steps.step1.abs().max(prep.steps.step2.abs());
    let earliest = (prep.rule.threshold() - prep.prior_lo.abs()) / biggest;
    if prep.steps.is_uninformative() || earliest > T::from_u64(opts.max_copies).unwrap() {
        return Err(Error::NonConvergence {
            depth: 0,
            residual_mass: 1.0,
            bound_width: f64::INFINITY,
        });
    }
    let tol = T::lit(opts.mass_tolerance);
    let mut frontier = LatticeFrontier::new(problem);
    let mut accum = T::zero();
    let mut residual = frontier.mass();
    while frontier.depth() < opts.max_copies {
        frontier.advance(&prep.config, &prep.steps, prep.prior_lo, &prep.rule, |a| {
            accum = accum + T::from_u64(a.n).unwrap() * (a.mass[0] + a.mass[1]);
        })?;
        residual = frontier.mass();
        if residual[0] + residual[1] <= tol {
            break;
        }
        if frontier.width() > opts.max_frontier {
            return Err(Error::NonConvergence {
                depth: frontier.depth(),
                residual_mass: (residual[0] + residual[1]).as_f64(),
                bound_width: f64::INFINITY,
            });
        }
    }
    let tail = TailBound::new(&prep.config, &prep.rule);
    let result = enclosure(accum, frontier.depth(), residual, &tail);
    let narrow = result.bound_width.as_f64() <= opts.max_bound_width;
    if result.residual_mass > tol && !narrow {
        return Err(Error::NonConvergence {
            depth: frontier.depth(),
            residual_mass: result.residual_mass.as_f64(),
            bound_width: result.bound_width.as_f64(),
        });
    }
    Ok(result)
}

/// Every absorption event of the lattice engine up to `max_copies`, in
/// depth order, plus the frontier left over.
pub fn lattice_absorptions<T: Real>(
    problem: &DiscriminationProblem<T>,
    phi: T,
    eps: T,
    max_copies: u64,
) -> Result<(Vec<Absorbed<T>>, LatticeFrontier<T>)> {
    let prep = prepare(problem, phi, eps)?;
    let mut frontier = LatticeFrontier::new(problem);
    let mut events = Vec::new();
    if prior_suffices(problem, eps) {
        // The empty string already terminates.
        events.push(Absorbed {
            n: 0,
            m1: 0,
            m2: 0,
            mass: [problem.q1(), problem.q2()],
            log_odds: prep.prior_lo,
        });
        frontier.mass.clear();
        return Ok((events, frontier));
    }
    while frontier.depth() < max_copies && !frontier.is_empty() {
        frontier.advance(&prep.config, &prep.steps, prep.prior_lo, &prep.rule, |a| {
            events.push(a)
        })?;
    }
    Ok((events, frontier))
}

/// Depth-first walk of the outcome tree with prefix termination.
///
/// `on_leaf(path, mass, log_odds)` sees every terminating string; the
/// returned pair is the per-hypothesis joint mass cut off at `max_depth`.
pub fn walk_outcome_tree<T: Real>(
    problem: &DiscriminationProblem<T>,
    phi: T,
    eps: T,
    max_depth: usize,
    mut on_leaf: impl FnMut(&[Outcome], [T; 2], T),
) -> Result<[T; 2]> {
    if max_depth > BRUTE_FORCE_DEPTH_LIMIT {
        return Err(Error::DepthLimit {
            requested: max_depth,
            limit: BRUTE_FORCE_DEPTH_LIMIT,
        });
    }
    let prep = prepare(problem, phi, eps)?;
    let root = [problem.q1(), problem.q2()];
    if prior_suffices(problem, eps) {
        on_leaf(&[], root, prep.prior_lo);
        return Ok([T::zero(); 2]);
    }
    let like = |d: Outcome| {
        [
            prep.config.likelihood(d, Hypothesis::Psi1),
            prep.config.likelihood(d, Hypothesis::Psi2),
        ]
    };
    let likes = [
        (Outcome::One, like(Outcome::One)),
        (Outcome::Two, like(Outcome::Two)),
    ];

    let mut cut = [T::zero(); 2];
    let mut path: Vec<Outcome> = Vec::with_capacity(max_depth);
    // Explicit stack of (depth, outcome, mass after taking it).
    let mut stack: Vec<(usize, Outcome, [T; 2])> = Vec::new();
    let push_children = |stack: &mut Vec<(usize, Outcome, [T; 2])>, depth: usize, m: [T; 2]| {
        for &(d, l) in likes.iter().rev() {
            stack.push((depth + 1, d, [m[0] * l[0], m[1] * l[1]]));
        }
    };
    if max_depth == 0 {
        return Ok(root);
    }
    push_children(&mut stack, 0, root);
    while let Some((depth, d, m)) = stack.pop() {
        path.truncate(depth - 1);
        path.push(d);
        if m[0].is_zero() && m[1].is_zero() {
            continue;
        }
        let (m1, m2) = counts(&path);
        let lo = log_odds_from_counts(prep.prior_lo, &prep.steps, m1, m2)?;
        if prep.rule.is_met(lo) {
            on_leaf(&path, m, lo);
        } else if depth == max_depth {
            cut = [cut[0] + m[0], cut[1] + m[1]];
        } else {
            push_children(&mut stack, depth, m);
        }
    }
    Ok(cut)
}

fn counts(path: &[Outcome]) -> (u64, u64) {
    let ones = path.iter().filter(|&&d| d == Outcome::One).count() as u64;
    (ones, path.len() as u64 - ones)
}

/// Exhaustive enumeration of all outcome strings up to `max_depth`.
pub fn brute_force_cost<T: Real>(
    problem: &DiscriminationProblem<T>,
    phi: T,
    eps: T,
    max_depth: usize,
) -> Result<CostResult<T>> {
    let mut accum = T::zero();
    let cut = walk_outcome_tree(problem, phi, eps, max_depth, |path, m, _| {
        accum = accum + T::from_usize(path.len()).unwrap() * (m[0] + m[1]);
    })?;
    let prep = prepare(problem, phi, eps)?;
    let tail = TailBound::new(&prep.config, &prep.rule);
    Ok(enclosure(accum, max_depth as u64, cut, &tail))
}

/// Cost of any strategy by its cheapest exact route: closed forms for FBM,
/// symmetric UBM and LOL, the lattice engine otherwise.
pub fn strategy_cost<T: Real>(
    problem: &DiscriminationProblem<T>,
    strategy: &StrategySpec<T>,
    eps: T,
    opts: &EngineOptions,
) -> Result<CostResult<T>> {
    match *strategy {
        StrategySpec::Fbm => fbm_cost(problem, eps),
        StrategySpec::Ubm if problem.is_symmetric() => ubm_cost(problem, eps),
        StrategySpec::Ubm => fixed_angle_cost(problem, problem.helstrom_angle(), eps, opts),
        StrategySpec::Lol => lol_cost_result(problem, eps),
        StrategySpec::FixedAngle(phi) => fixed_angle_cost(problem, phi, eps, opts),
    }
}
