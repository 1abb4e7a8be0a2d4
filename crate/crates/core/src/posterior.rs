//! Bayesian belief over the two hypotheses.
//!
//! Beliefs are carried as the log-odds `ln(P(psi1 | data) / P(psi2 | data))`,
//! always recomputed from the integer outcome counts. For a fixed measurement
//! the log-odds after `m1` ones and `m2` twos is
//! `ln(q1/q2) + m1 * step1 + m2 * step2`, a lattice walk in `(m1, m2)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DiscriminationProblem, Hypothesis, MeasurementConfig, Outcome};
use crate::scalar::{mul_zero_inf, Real};

/// Log-likelihood-ratio increments (in favour of `psi1`) for each outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LikelihoodSteps<T> {
    /// `ln[cos^2(phi - theta) / cos^2(phi + theta)]`, `+inf` when outcome 1 rules out `psi2`.
    pub step1: T,
    /// `ln[sin^2(phi - theta) / sin^2(phi + theta)]`, `-inf` when outcome 2 rules out `psi1`.
    pub step2: T,
}

impl<T: Real> LikelihoodSteps<T> {
    pub fn from_config(config: &MeasurementConfig<T>) -> Self {
        Self {
            step1: log_ratio(config.p1_given_psi1(), config.p1_given_psi2()),
            step2: log_ratio(config.p2_given_psi1(), config.p2_given_psi2()),
        }
    }

    pub fn step(&self, d: Outcome) -> T {
        match d {
            Outcome::One => self.step1,
            Outcome::Two => self.step2,
        }
    }

    /// Both steps zero: the measurement carries no information.
    pub fn is_uninformative(&self) -> bool {
        self.step1.is_zero() && self.step2.is_zero()
    }
}

/// `ln(a / b)` with `ln(x / 0) = +inf`, `ln(0 / x) = -inf`, and NaN for `0 / 0`.
fn log_ratio<T: Real>(a: T, b: T) -> T {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => T::nan(),
        (false, true) => T::infinity(),
        (true, false) => T::neg_infinity(),
        (false, false) => (a / b).ln(),
    }
}

pub fn log_likelihood_steps<T: Real>(
    problem: &DiscriminationProblem<T>,
    phi: T,
) -> Result<LikelihoodSteps<T>> {
    Ok(LikelihoodSteps::from_config(&problem.measurement(phi)?))
}

/// Posterior belief after `m1` outcome-1 and `m2` outcome-2 results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorState<T> {
    pub p1: T,
    pub m1: u64,
    pub m2: u64,
    pub n: u64,
    /// `ln(p1 / (1 - p1))`, possibly infinite.
    pub log_odds: T,
}

impl<T: Real> PosteriorState<T> {
    pub fn from_log_odds(log_odds: T, m1: u64, m2: u64) -> Self {
        Self {
            p1: probability_from_log_odds(log_odds),
            m1,
            m2,
            n: m1 + m2,
            log_odds,
        }
    }

    /// Count-free belief, as carried by the adaptive strategy.
    pub fn from_probability(p1: T) -> Self {
        let log_odds = if p1.is_zero() {
            T::neg_infinity()
        } else if p1 == T::one() {
            T::infinity()
        } else {
            (p1 / (T::one() - p1)).ln()
        };
        Self {
            p1,
            m1: 0,
            m2: 0,
            n: 0,
            log_odds,
        }
    }

    /// `m1 - m2`, the walk position `R_n = 2m - n`.
    pub fn walk_position(&self) -> i64 {
        self.m1 as i64 - self.m2 as i64
    }

    /// Hypothesis with the larger posterior; ties go to `psi1`.
    pub fn guess(&self) -> Hypothesis {
        if self.log_odds >= T::zero() {
            Hypothesis::Psi1
        } else {
            Hypothesis::Psi2
        }
    }
}

/// `1 / (1 + exp(-lambda))`, exact at `lambda = +-inf`.
#[inline]
pub fn probability_from_log_odds<T: Real>(log_odds: T) -> T {
    T::one() / (T::one() + (-log_odds).exp())
}

/// `min(p, 1 - p)` evaluated from the log-odds without cancellation.
#[inline]
pub fn error_from_log_odds<T: Real>(log_odds: T) -> T {
    T::one() / (T::one() + log_odds.abs().exp())
}

/// Log-odds from counts. `steps` of NaN mark outcomes impossible under both
/// hypotheses; observing one is an error.
#[inline]
pub fn log_odds_from_counts<T: Real>(
    prior_log_odds: T,
    steps: &LikelihoodSteps<T>,
    m1: u64,
    m2: u64,
) -> Result<T> {
    if m1 > 0 && steps.step1.is_nan() {
        return Err(Error::UndefinedEvidence { outcome: 1 });
    }
    if m2 > 0 && steps.step2.is_nan() {
        return Err(Error::UndefinedEvidence { outcome: 2 });
    }
    let a = mul_zero_inf(T::from_u64(m1).unwrap(), steps.step1);
    let b = mul_zero_inf(T::from_u64(m2).unwrap(), steps.step2);
    let lo = prior_log_odds + a + b;
    if lo.is_nan() {
        // +inf and -inf together: the data excludes both hypotheses.
        return Err(Error::UndefinedEvidence { outcome: 0 });
    }
    Ok(lo)
}

pub fn prior_log_odds<T: Real>(problem: &DiscriminationProblem<T>) -> T {
    (problem.q1() / problem.q2()).ln()
}

pub fn posterior_from_counts<T: Real>(
    problem: &DiscriminationProblem<T>,
    config: &MeasurementConfig<T>,
    m1: u64,
    m2: u64,
) -> Result<PosteriorState<T>> {
    let steps = LikelihoodSteps::from_config(config);
    let lo = log_odds_from_counts(prior_log_odds(problem), &steps, m1, m2)?;
    Ok(PosteriorState::from_log_odds(lo, m1, m2))
}

/// Error of guessing the more probable hypothesis, `min(p1, 1 - p1)`.
pub fn posterior_error<T: Real>(state: &PosteriorState<T>) -> T {
    error_from_log_odds(state.log_odds)
}

/// One Bayes step: belief `p1` updated with outcome `d` of `config`.
pub fn bayes_update<T: Real>(p1: T, config: &MeasurementConfig<T>, d: Outcome) -> Result<T> {
    let w1 = p1 * config.likelihood(d, Hypothesis::Psi1);
    let w2 = (T::one() - p1) * config.likelihood(d, Hypothesis::Psi2);
    let total = w1 + w2;
    if total.is_zero() {
        return Err(Error::UndefinedEvidence { outcome: d.index() });
    }
    Ok(w1 / total)
}

/// The inclusive `error <= eps` stopping condition, expressed on the log-odds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule<T> {
    eps: T,
    threshold: T,
}

impl<T: Real> StoppingRule<T> {
    /// Requires `0 < eps < 1/2`.
    pub fn new(eps: T) -> Result<Self> {
        if !(eps > T::zero() && eps < T::lit(0.5)) {
            return Err(Error::domain("epsilon", eps.as_f64(), "(0, 1/2)"));
        }
        let relaxed = eps * (T::one() + T::bound_slack());
        Ok(Self {
            eps,
            threshold: ((T::one() - relaxed) / relaxed).ln(),
        })
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    /// `|log_odds|` at which the posterior error reaches the bound.
    pub fn threshold(&self) -> T {
        self.threshold
    }

    #[inline]
    pub fn is_met(&self, log_odds: T) -> bool {
        log_odds.abs() >= self.threshold
    }

    /// Same condition for an error value computed some other way.
    #[inline]
    pub fn error_within(&self, error: T) -> bool {
        within_bound(error, self.eps)
    }
}

/// `error <= eps`, inclusive, with the relative slack of [`Real::bound_slack`].
#[inline]
pub fn within_bound<T: Real>(error: T, eps: T) -> bool {
    error <= eps * (T::one() + T::bound_slack())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn setup(
        theta: f64,
        q1: f64,
        phi: f64,
    ) -> (DiscriminationProblem<f64>, MeasurementConfig<f64>) {
        let p = DiscriminationProblem::new(theta, q1).unwrap();
        let m = p.measurement(phi).unwrap();
        (p, m)
    }

    #[test]
    fn posterior_examples() {
        let (p, m) = setup(PI / 12.0, 0.5, PI / 4.0);
        let s = posterior_from_counts(&p, &m, 2, 0).unwrap();
        assert!((s.p1 - 0.9).abs() < 1e-14);
        assert!((posterior_error(&s) - 0.1).abs() < 1e-14);
        assert_eq!(s.walk_position(), 2);

        let (p, m) = setup(0.3, 0.37, 0.9);
        let s = posterior_from_counts(&p, &m, 0, 0).unwrap();
        assert!((s.p1 - 0.37).abs() < 1e-15);

        let (p, m) = setup(PI / 12.0, 0.5, PI / 12.0);
        let s = posterior_from_counts(&p, &m, 5, 1).unwrap();
        assert_eq!(s.p1, 0.0);
        assert_eq!(posterior_error(&s), 0.0);
        assert_eq!(s.guess(), Hypothesis::Psi2);
    }

    #[test]
    fn posterior_matches_closed_form_at_helstrom_angle() {
        let theta = PI / 12.0;
        let (p, m) = setup(theta, 0.5, PI / 4.0);
        let s2 = (2.0 * theta).sin();
        for (m1, m2) in [(3u64, 1u64), (0, 4), (7, 2), (5, 5)] {
            let r = m1 as f64 - m2 as f64;
            let closed = 1.0 / (1.0 + ((1.0 - s2) / (1.0 + s2)).powf(r));
            let s = posterior_from_counts(&p, &m, m1, m2).unwrap();
            assert!((s.p1 - closed).abs() < 1e-13, "{m1},{m2}");
        }
    }

    #[test]
    fn undefined_evidence_is_an_error() {
        let p = DiscriminationProblem::new(0.3, 0.5).unwrap();
        let m = MeasurementConfig::from_likelihoods(0.1, 0.0, 0.0).unwrap();
        assert_eq!(
            posterior_from_counts(&p, &m, 1, 0),
            Err(Error::UndefinedEvidence { outcome: 1 })
        );
        // Never observing the impossible outcome is fine.
        assert!(posterior_from_counts(&p, &m, 0, 3).is_ok());
    }

    #[test]
    fn posterior_error_examples() {
        for (p1, e) in [(0.9f64, 0.1f64), (0.5, 0.5), (1.0, 0.0)] {
            let s = PosteriorState::from_probability(p1);
            assert!((posterior_error(&s) - e).abs() < 1e-15);
        }
    }

    #[test]
    fn step_examples() {
        let p = DiscriminationProblem::symmetric(PI / 12.0).unwrap();
        let s = log_likelihood_steps(&p, PI / 4.0).unwrap();
        assert!((s.step1 - 3f64.ln()).abs() < 1e-12);
        assert!((s.step2 + 3f64.ln()).abs() < 1e-12);
        let s = log_likelihood_steps(&p, PI / 12.0).unwrap();
        assert_eq!(s.step2, f64::NEG_INFINITY);
        let s = log_likelihood_steps(&p, 5.0 * PI / 12.0).unwrap();
        assert_eq!(s.step1, f64::INFINITY);
    }

    #[test]
    fn stopping_rule_is_inclusive() {
        let rule = StoppingRule::new(0.1).unwrap();
        let p = DiscriminationProblem::symmetric(PI / 12.0).unwrap();
        let steps = log_likelihood_steps(&p, PI / 4.0).unwrap();
        let lo = log_odds_from_counts(0.0, &steps, 2, 0).unwrap();
        assert!(rule.is_met(lo));
        assert!(!StoppingRule::new(0.099).unwrap().is_met(lo));
        assert!(StoppingRule::new(0.5).is_err());
        assert!(StoppingRule::new(0.0).is_err());
    }

    #[test]
    fn symmetric_posterior_depends_only_on_walk_position() {
        let (p, m) = setup(0.4, 0.5, PI / 4.0);
        let a = posterior_from_counts(&p, &m, 6, 3).unwrap();
        let b = posterior_from_counts(&p, &m, 4, 1).unwrap();
        assert!((a.p1 - b.p1).abs() < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn counts_agree_with_sequential_update(
            theta in 0.01..0.78f64,
            q1 in 0.02..0.98f64,
            phi in 0.01..1.56f64,
            m1 in 0u64..12,
            m2 in 0u64..12,
        ) {
            let (p, m) = setup(theta, q1, phi);
            let before = posterior_from_counts(&p, &m, m1, m2).unwrap();
            let after = posterior_from_counts(&p, &m, m1 + 1, m2).unwrap();
            if let Ok(stepped) = bayes_update(before.p1, &m, Outcome::One) {
                prop_assert!((after.p1 - stepped).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn posterior_error_at_most_half(theta in 0.01..0.78f64, q1 in 0.02..0.98f64,
                                         phi in 0.0..1.57f64, m1 in 0u64..50, m2 in 0u64..50) {
            let (p, m) = setup(theta, q1, phi);
            if let Ok(s) = posterior_from_counts(&p, &m, m1, m2) {
                let e = posterior_error(&s);
                prop_assert!((0.0..=0.5).contains(&e));
                prop_assert!((e - s.p1.min(1.0 - s.p1)).abs() < 1e-12);
            }
        }
    }
}
