//! The four measurement strategies and their closed-form / semianalytic costs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscriminationProblem, MeasurementConfig, Outcome};
use crate::posterior::{
    bayes_update, log_odds_from_counts, prior_log_odds, within_bound, LikelihoodSteps, StoppingRule,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "phi", rename_all = "snake_case")]
pub enum StrategySpec<T> {
    /// Fully biased: fixed `phi = theta`.
    Fbm,
    /// Unbiased: fixed single-copy Helstrom angle.
    Ubm,
    /// Locally optimal local: Helstrom angle of the current posterior, every copy.
    Lol,
    /// Any fixed angle; GOF is this at the optimal angle.
    FixedAngle(T),
}

impl<T: Real> StrategySpec<T> {
    /// The measurement angle used on every copy, or `None` for the adaptive strategy.
    pub fn fixed_angle(&self, problem: &DiscriminationProblem<T>) -> Option<T> {
        match *self {
            StrategySpec::Fbm => Some(problem.theta()),
            StrategySpec::Ubm => Some(problem.helstrom_angle()),
            StrategySpec::Lol => None,
            StrategySpec::FixedAngle(phi) => Some(phi),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::Fbm => "fbm",
            StrategySpec::Ubm => "ubm",
            StrategySpec::Lol => "lol",
            StrategySpec::FixedAngle(_) => "fixed",
        }
    }
}

/// Expected number of copies with an enclosure for truncated computations.
///
/// The true value lies in `[expected_copies, expected_copies + bound_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostResult<T> {
    pub expected_copies: T,
    pub exact: bool,
    pub residual_mass: T,
    pub bound_width: T,
}

impl<T: Real> CostResult<T> {
    pub fn exact(expected_copies: T) -> Self {
        Self {
            expected_copies,
            exact: true,
            residual_mass: T::zero(),
            bound_width: T::zero(),
        }
    }

    pub fn upper(&self) -> T {
        self.expected_copies + self.bound_width
    }
}

/// Integer random walk started at `start`, absorbed at `+-boundary`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkSpec<T> {
    pub p_up: T,
    pub boundary: u32,
    pub start: i32,
}

impl<T: Real> WalkSpec<T> {
    /// Mean number of steps to absorption, by a direct solve of
    /// `E_i = 1 + p E_{i+1} + (1-p) E_{i-1}`, `E_{+-K} = 0`.
    pub fn expected_absorption_time(&self) -> T {
        let k = self.boundary as i64;
        let size = (2 * k - 1) as usize;
        let p = self.p_up;
        let sub = -(T::one() - p);
        let sup = -p;
        // Thomas algorithm on the constant-coefficient tridiagonal system.
        let mut c_prime = vec![T::zero(); size];
        let mut d_prime = vec![T::zero(); size];
        for i in 0..size {
            let denom = if i == 0 {
                T::one()
            } else {
                T::one() - sub * c_prime[i - 1]
            };
            c_prime[i] = sup / denom;
            d_prime[i] = if i == 0 {
                T::one()
            } else {
                (T::one() - sub * d_prime[i - 1]) / denom
            };
        }
        let mut e = vec![T::zero(); size];
        for i in (0..size).rev() {
            e[i] = if i + 1 == size {
                d_prime[i]
            } else {
                d_prime[i] - c_prime[i] * e[i + 1]
            };
        }
        e[(self.start as i64 + k - 1) as usize]
    }
}

pub(crate) fn check_eps<T: Real>(eps: T) -> Result<()> {
    if eps > T::zero() && eps < T::lit(0.5) {
        Ok(())
    } else {
        Err(Error::domain("epsilon", eps.as_f64(), "(0, 1/2)"))
    }
}

/// Prior alone already meets the bound: zero copies are needed.
pub(crate) fn prior_suffices<T: Real>(problem: &DiscriminationProblem<T>, eps: T) -> bool {
    within_bound(problem.prior_error(), eps)
}

/// Smallest `n >= lower` with `ok(n)`, searched from an initial estimate.
/// `ok` must be monotone.
fn smallest_satisfying(estimate: u64, lower: u64, mut ok: impl FnMut(u64) -> bool) -> u64 {
    let mut n = estimate.max(lower);
    while n > lower && ok(n - 1) {
        n -= 1;
    }
    while !ok(n) {
        n += 1;
    }
    n
}

fn ceil_estimate<T: Real>(x: T) -> u64 {
    if x.is_finite() && x > T::zero() {
        x.ceil().to_u64().unwrap_or(0)
    } else {
        0
    }
}

/// `n_T`: copies of consecutive outcome 1 at `phi = theta` needed to reach the bound.
pub fn fbm_threshold<T: Real>(problem: &DiscriminationProblem<T>, eps: T) -> Result<u64> {
    check_eps(eps)?;
    if prior_suffices(problem, eps) {
        return Ok(0);
    }
    let rule = StoppingRule::new(eps)?;
    let config = MeasurementConfig::new(problem, problem.theta())?;
    let steps = LikelihoodSteps::from_config(&config);
    let lo0 = prior_log_odds(problem);
    let estimate = ceil_estimate((rule.threshold() - lo0) / steps.step1);
    Ok(smallest_satisfying(estimate, 0, |n| {
        log_odds_from_counts(lo0, &steps, n, 0).is_ok_and(|lo| rule.is_met(lo))
    }))
}

/// `C^FBM = q1 n_T + q2 (1 - cos^{2 n_T} 2theta) / sin^2 2theta`.
pub fn fbm_cost<T: Real>(problem: &DiscriminationProblem<T>, eps: T) -> Result<CostResult<T>> {
    let n_t = fbm_threshold(problem, eps)?;
    let c2 = problem.overlap().powi(2);
    let s2 = (T::lit(2.0) * problem.theta()).sin().powi(2);
    let n = T::from_u64(n_t).unwrap();
    let under_psi2 = (T::one() - c2.powf(n)) / s2;
    Ok(CostResult::exact(
        problem.q1() * n + problem.q2() * under_psi2,
    ))
}

/// Walk followed by `R_n = m1 - m2` at the Helstrom angle, under `psi1`.
pub fn ubm_boundary<T: Real>(problem: &DiscriminationProblem<T>, eps: T) -> Result<WalkSpec<T>> {
    if !problem.is_symmetric() {
        return Err(Error::Unsupported(
            "UBM absorbing walk requires q1 = q2; use the lattice engine".into(),
        ));
    }
    check_eps(eps)?;
    let rule = StoppingRule::new(eps)?;
    let config = MeasurementConfig::new(problem, problem.helstrom_angle())?;
    let steps = LikelihoodSteps::from_config(&config);
    let estimate = ceil_estimate(rule.threshold() / steps.step1);
    let k = smallest_satisfying(estimate, 1, |k| {
        log_odds_from_counts(T::zero(), &steps, k, 0).is_ok_and(|lo| rule.is_met(lo))
    });
    Ok(WalkSpec {
        p_up: config.p1_given_psi1(),
        boundary: u32::try_from(k).expect("absorption boundary fits u32"),
        start: 0,
    })
}

pub fn ubm_cost<T: Real>(problem: &DiscriminationProblem<T>, eps: T) -> Result<CostResult<T>> {
    let walk = ubm_boundary(problem, eps)?;
    Ok(CostResult::exact(walk.expected_absorption_time()))
}

/// Copies consumed by LOL: the smallest `n` whose collective error `E_n` is within the bound.
pub fn lol_cost<T: Real>(problem: &DiscriminationProblem<T>, eps: T) -> Result<u64> {
    check_eps(eps)?;
    let two_ln_c = T::lit(2.0) * problem.overlap().ln();
    let ratio = ((eps - eps * eps).ln() - (problem.q1() * problem.q2()).ln()) / two_ln_c;
    Ok(smallest_satisfying(ceil_estimate(ratio), 0, |n| {
        within_bound(problem.collective_error_at(n), eps)
    }))
}

pub fn lol_cost_result<T: Real>(
    problem: &DiscriminationProblem<T>,
    eps: T,
) -> Result<CostResult<T>> {
    Ok(CostResult::exact(
        T::from_u64(lol_cost(problem, eps)?).unwrap(),
    ))
}

/// Helstrom angle for the current belief `P(psi1) = current_p1`.
pub fn lol_next_angle<T: Real>(problem: &DiscriminationProblem<T>, current_p1: T) -> Result<T> {
    if !(current_p1 > T::zero() && current_p1 < T::one()) {
        return Err(Error::DegenerateBelief(current_p1.as_f64()));
    }
    Ok(problem.with_prior(current_p1)?.helstrom_angle())
}

/// Measures at [`lol_next_angle`] and returns the updated belief.
pub fn lol_step<T: Real>(
    problem: &DiscriminationProblem<T>,
    current_p1: T,
    outcome: Outcome,
) -> Result<T> {
    let phi = lol_next_angle(problem, current_p1)?;
    let config = MeasurementConfig::new(problem, phi)?;
    bayes_update(current_p1, &config, outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::error_from_log_odds;
    use std::f64::consts::PI;

    fn sym(theta: f64) -> DiscriminationProblem<f64> {
        DiscriminationProblem::symmetric(theta).unwrap()
    }

    /// Posterior error after `n` ones at `phi = theta`, written out directly.
    fn fbm_error_after_ones(p: &DiscriminationProblem<f64>, n: u64) -> f64 {
        let c2 = p.overlap().powi(2);
        let w1 = p.q1();
        let w2 = p.q2() * c2.powi(n as i32);
        w1.min(w2) / (w1 + w2)
    }

    #[test]
    fn fbm_threshold_examples() {
        let p = sym(PI / 12.0);
        assert_eq!(fbm_threshold(&p, 0.179).unwrap(), 6);
        assert_eq!(fbm_threshold(&p, 0.3).unwrap(), 3);
        let c2 = p.overlap().powi(2);
        let one_copy = p.q2() * c2 / (p.q1() + p.q2() * c2);
        assert_eq!(fbm_threshold(&p, one_copy).unwrap(), 1);
        assert_eq!(fbm_threshold(&p, one_copy * 1.01).unwrap(), 1);
        assert_eq!(fbm_threshold(&p, one_copy * 0.99).unwrap(), 2);
        assert!(fbm_threshold(&p, 0.0).is_err());
        assert!(fbm_threshold(&p, 0.5).is_err());
    }

    #[test]
    fn fbm_threshold_matches_ceiling_formula_off_integers() {
        for &(theta, q1, eps) in &[(PI / 12.0, 0.5, 0.179), (0.3, 0.4, 0.05), (0.6, 0.7, 0.01)] {
            let p = DiscriminationProblem::new(theta, q1).unwrap();
            let ratio = ((q1 * eps).ln() - (p.q2() * (1.0 - eps)).ln()) / (2.0 * p.overlap().ln());
            assert_eq!(
                fbm_threshold(&p, eps).unwrap(),
                (ratio.floor() + 1.0) as u64
            );
        }
    }

    #[test]
    fn fbm_cost_examples() {
        let p = sym(PI / 12.0);
        let c = fbm_cost(&p, 0.179).unwrap();
        let expected = 0.5 * 6.0 + 0.5 * (1.0 - 0.75f64.powi(6)) / 0.25;
        assert!(c.exact);
        assert!((c.expected_copies - expected).abs() < 1e-12);
        assert!((c.expected_copies - 4.6441).abs() < 1e-4);
        assert!((fbm_cost(&p, 0.45).unwrap().expected_copies - 1.0).abs() < 1e-15);
    }

    #[test]
    fn prior_already_within_bound_costs_nothing() {
        let p = DiscriminationProblem::new(0.3, 0.1).unwrap();
        assert_eq!(fbm_threshold(&p, 0.2).unwrap(), 0);
        assert_eq!(fbm_cost(&p, 0.2).unwrap().expected_copies, 0.0);
        assert_eq!(lol_cost(&p, 0.2).unwrap(), 0);
    }

    #[test]
    fn ubm_boundary_examples() {
        let p = sym(PI / 12.0);
        let w = ubm_boundary(&p, 0.179).unwrap();
        assert!((w.p_up - 0.75).abs() < 1e-15);
        assert_eq!(w.boundary, 2);
        assert_eq!(ubm_boundary(&p, 0.1).unwrap().boundary, 2);
        assert_eq!(ubm_boundary(&p, 0.099).unwrap().boundary, 3);
        let asym = DiscriminationProblem::new(PI / 12.0, 0.6).unwrap();
        assert!(matches!(
            ubm_boundary(&asym, 0.1),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn ubm_cost_examples() {
        let p = sym(PI / 12.0);
        let c = ubm_cost(&p, 0.179).unwrap();
        assert!(c.exact);
        assert!((c.expected_copies - 3.2).abs() < 1e-12);
        let k1 = WalkSpec {
            p_up: 0.8,
            boundary: 1,
            start: 0,
        };
        assert_eq!(k1.expected_absorption_time(), 1.0);
    }

    #[test]
    fn absorption_time_matches_gamblers_ruin() {
        // Symmetric walk from 0 with barriers at +-K: E = K^2.
        for k in 1..12u32 {
            let w = WalkSpec {
                p_up: 0.5,
                boundary: k,
                start: 0,
            };
            assert!((w.expected_absorption_time() - (k * k) as f64).abs() < 1e-9);
        }
        // Biased walk: closed form from ruin probabilities.
        let (p, k) = (0.7f64, 5i32);
        let r = (1.0 - p) / p;
        let n = 2 * k;
        let ruin_top = (1.0 - r.powi(k)) / (1.0 - r.powi(n));
        let expected = (ruin_top * n as f64 - k as f64) / (2.0 * p - 1.0);
        let w = WalkSpec {
            p_up: p,
            boundary: k as u32,
            start: 0,
        };
        assert!((w.expected_absorption_time() - expected).abs() < 1e-10);
        let mirrored = WalkSpec { p_up: 1.0 - p, ..w };
        assert!((mirrored.expected_absorption_time() - expected).abs() < 1e-10);
    }

    #[test]
    fn lol_cost_examples() {
        assert_eq!(lol_cost(&sym(PI / 12.0), 0.179).unwrap(), 2);
        assert_eq!(lol_cost(&sym(PI / 12.0), 0.25).unwrap(), 1);
        assert_eq!(lol_cost(&sym(PI / 8.0), 0.125).unwrap(), 2);
        assert!(lol_cost(&sym(PI / 8.0), 0.5).is_err());
    }

    #[test]
    fn lol_next_angle_examples() {
        assert_eq!(lol_next_angle(&sym(PI / 12.0), 0.5).unwrap(), PI / 4.0);
        let phi = lol_next_angle(&sym(PI / 8.0), 0.75).unwrap();
        assert!((phi - 0.55357).abs() < 1e-5);
        assert!(matches!(
            lol_next_angle(&sym(0.2), 0.0),
            Err(Error::DegenerateBelief(_))
        ));
        assert!(lol_next_angle(&sym(0.2), 1.0).is_err());
    }

    #[test]
    fn lol_first_step_error_is_outcome_independent() {
        let p = sym(PI / 12.0);
        for d in [Outcome::One, Outcome::Two] {
            let p1 = lol_step(&p, 0.5, d).unwrap();
            assert!((p1.min(1.0 - p1) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn thresholds_are_minimal() {
        for &theta in &[0.1, 0.3, PI / 12.0, 0.6] {
            for &eps in &[0.01, 0.05, 0.125, 0.179, 0.3, 0.45] {
                let p = sym(theta);
                let n_t = fbm_threshold(&p, eps).unwrap();
                assert!(fbm_error_after_ones(&p, n_t) <= eps * (1.0 + 1e-9));
                assert!(n_t == 0 || fbm_error_after_ones(&p, n_t - 1) > eps);

                let w = ubm_boundary(&p, eps).unwrap();
                let ratio = ((1.0 + (2.0 * theta).sin()) / (1.0 - (2.0 * theta).sin())).ln();
                let at = |k: u32| error_from_log_odds(k as f64 * ratio);
                assert!(at(w.boundary) <= eps * (1.0 + 1e-9));
                assert!(w.boundary == 1 || at(w.boundary - 1) > eps);

                let n = lol_cost(&p, eps).unwrap();
                assert!(p.collective_error_at(n) <= eps * (1.0 + 1e-9));
                assert!(n == 0 || p.collective_error_at(n - 1) > eps);
            }
        }
    }

    #[test]
    fn costs_non_increasing_in_eps() {
        let p = sym(PI / 12.0);
        let grid: Vec<f64> = (1..200).map(|i| 0.0025 * i as f64).collect();
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            assert!(
                fbm_cost(&p, b).unwrap().expected_copies
                    <= fbm_cost(&p, a).unwrap().expected_copies
            );
            assert!(
                ubm_cost(&p, b).unwrap().expected_copies
                    <= ubm_cost(&p, a).unwrap().expected_copies + 1e-12
            );
            assert!(lol_cost(&p, b).unwrap() <= lol_cost(&p, a).unwrap());
        }
    }

    #[test]
    fn single_precision_smoke() {
        let p = DiscriminationProblem::<f32>::symmetric(std::f32::consts::PI / 12.0).unwrap();
        assert_eq!(lol_cost(&p, 0.179f32).unwrap(), 2);
        assert!((ubm_cost(&p, 0.179f32).unwrap().expected_copies - 3.2).abs() < 1e-4);
        assert!((fbm_cost(&p, 0.179f32).unwrap().expected_copies - 4.6440).abs() < 1e-3);
    }
}
