//! Simulation of repeated discrimination runs.
//!
//! Trial `i` draws from its own ChaCha8 stream `(seed, stream = i)`, so a
//! report depends only on the seed and trial count, never on how trials are
//! scheduled across threads. Trials are aggregated in fixed blocks with
//! integer accumulators.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscriminationProblem, Hypothesis, MeasurementConfig, Outcome, OutcomeString};
use crate::posterior::{
    bayes_update, log_odds_from_counts, prior_log_odds, within_bound, LikelihoodSteps,
    PosteriorState, StoppingRule,
};
use crate::scalar::Real;
use crate::strategies::{lol_next_angle, prior_suffices, StrategySpec};

const BLOCK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloOptions {
    /// A trial needing more copies than this is an error.
    pub copy_cap: u64,
    /// Keep per-string tallies in the report.
    pub record_strings: bool,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            copy_cap: 1_000_000,
            record_strings: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub true_state: Hypothesis,
    pub outcomes: OutcomeString,
    pub copies_used: u64,
    pub guess: Hypothesis,
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringTally {
    pub count: u64,
    pub errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub mean_copies: f64,
    pub mean_copies_stderr: f64,
    pub empirical_error: f64,
    pub min_copies: u64,
    pub max_copies: u64,
    pub per_string: BTreeMap<OutcomeString, StringTally>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalString {
    pub string: OutcomeString,
    pub count: u64,
    pub observed_error: f64,
    pub observed_prob: f64,
}

enum Plan<T> {
    Fixed {
        config: MeasurementConfig<T>,
        steps: LikelihoodSteps<T>,
        prior_lo: T,
    },
    Adaptive,
}

/// Runs `trials` independent discrimination runs.
pub fn run_trials<T: Real>(
    problem: &DiscriminationProblem<T>,
    strategy: &StrategySpec<T>,
    eps: T,
    trials: u64,
    seed: u64,
    opts: &MonteCarloOptions,
) -> Result<MonteCarloReport> {
    if trials < 1 {
        return Err(Error::domain("trials", 0.0, ">= 1"));
    }
    let rule = StoppingRule::new(eps)?;
    let plan = match strategy.fixed_angle(problem) {
        Some(phi) => {
            let config = problem.measurement(phi)?;
            Plan::Fixed {
                steps: LikelihoodSteps::from_config(&config),
                prior_lo: prior_log_odds(problem),
                config,
            }
        }
        None => Plan::Adaptive,
    };
    let blocks = trials.div_ceil(BLOCK);
    let partials: Vec<Result<Tally>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut tally = Tally::default();
            for i in b * BLOCK..((b + 1) * BLOCK).min(trials) {
                let record = simulate_trial(problem, &plan, &rule, seed, i, opts.copy_cap)?;
                tally.add(&record, opts.record_strings);
            }
            Ok(tally)
        })
        .collect();
    let mut total = Tally::default();
    for p in partials {
        total.merge(p?);
    }
    Ok(total.into_report(trials, seed))
}

/// Trial `index` of a run seeded with `seed`.
pub fn simulate_trial_at<T: Real>(
    problem: &DiscriminationProblem<T>,
    strategy: &StrategySpec<T>,
    eps: T,
    seed: u64,
    index: u64,
    copy_cap: u64,
) -> Result<TrialRecord> {
    let rule = StoppingRule::new(eps)?;
    let plan = match strategy.fixed_angle(problem) {
        Some(phi) => {
            let config = problem.measurement(phi)?;
            Plan::Fixed {
                steps: LikelihoodSteps::from_config(&config),
                prior_lo: prior_log_odds(problem),
                config,
            }
        }
        None => Plan::Adaptive,
    };
    simulate_trial(problem, &plan, &rule, seed, index, copy_cap)
}

fn simulate_trial<T: Real>(
    problem: &DiscriminationProblem<T>,
    plan: &Plan<T>,
    rule: &StoppingRule<T>,
    seed: u64,
    index: u64,
    copy_cap: u64,
) -> Result<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let true_state = if rng.random::<f64>() < problem.q1().as_f64() {
        Hypothesis::Psi1
    } else {
        Hypothesis::Psi2
    };
    let mut outcomes = OutcomeString::new();
    let draw = |rng: &mut ChaCha8Rng, config: &MeasurementConfig<T>| {
        if rng.random::<f64>() < config.likelihood(Outcome::One, true_state).as_f64() {
            Outcome::One
        } else {
            Outcome::Two
        }
    };
    let overflow = || Error::TrialOverflow {
        trial: index,
        cap: copy_cap,
    };
    let guess = match plan {
        _ if prior_suffices(problem, rule.eps()) => {
            PosteriorState::from_log_odds(prior_log_odds(problem), 0, 0).guess()
        }
        Plan::Fixed {
            config,
            steps,
            prior_lo,
        } => {
            let (mut m1, mut m2) = (0u64, 0u64);
            loop {
                if m1 + m2 >= copy_cap {
                    return Err(overflow());
                }
                let d = draw(&mut rng, config);
                outcomes.push(d);
                match d {
                    Outcome::One => m1 += 1,
                    Outcome::Two => m2 += 1,
                }
                let lo = log_odds_from_counts(*prior_lo, steps, m1, m2)?;
                if rule.is_met(lo) {
                    break PosteriorState::from_log_odds(lo, m1, m2).guess();
                }
            }
        }
        Plan::Adaptive => {
            let mut p1 = problem.q1();
            loop {
                if outcomes.len() as u64 >= copy_cap {
                    return Err(overflow());
                }
                let config = problem.measurement(lol_next_angle(problem, p1)?)?;
                let d = draw(&mut rng, &config);
                outcomes.push(d);
                p1 = bayes_update(p1, &config, d)?;
                if within_bound(p1.min(T::one() - p1), rule.eps()) {
                    break if p1 >= T::lit(0.5) {
                        Hypothesis::Psi1
                    } else {
                        Hypothesis::Psi2
                    };
                }
            }
        }
    };
    Ok(TrialRecord {
        true_state,
        copies_used: outcomes.len() as u64,
        outcomes,
        guess,
        correct: guess == true_state,
    })
}

#[derive(Default)]
struct Tally {
    count: u64,
    sum: u64,
    sum_sq: u128,
    errors: u64,
    min: Option<u64>,
    max: u64,
    per_string: BTreeMap<OutcomeString, StringTally>,
}

impl Tally {
    fn add(&mut self, r: &TrialRecord, record_strings: bool) {
        let n = r.copies_used;
        self.count += 1;
        self.sum += n;
        self.sum_sq += (n as u128) * (n as u128);
        self.errors += u64::from(!r.correct);
        self.min = Some(self.min.map_or(n, |m| m.min(n)));
        self.max = self.max.max(n);
        if record_strings {
            let t = self.per_string.entry(r.outcomes.clone()).or_default();
            t.count += 1;
            t.errors += u64::from(!r.correct);
        }
    }

    fn merge(&mut self, other: Tally) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.errors += other.errors;
        self.min = match (self.min, other.min) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.max = self.max.max(other.max);
        for (k, v) in other.per_string {
            let t = self.per_string.entry(k).or_default();
            t.count += v.count;
            t.errors += v.errors;
        }
    }

    fn into_report(self, trials: u64, seed: u64) -> MonteCarloReport {
        let n = self.count as f64;
        let stderr = if self.count > 1 {
            let num = self.count as u128 * self.sum_sq - (self.sum as u128) * (self.sum as u128);
            let var = num as f64 / (n * (n - 1.0));
            (var / n).sqrt()
        } else {
            0.0
        };
        MonteCarloReport {
            trials,
            mean_copies: self.sum as f64 / n,
            mean_copies_stderr: stderr,
            empirical_error: self.errors as f64 / n,
            min_copies: self.min.unwrap_or(0),
            max_copies: self.max,
            per_string: self.per_string,
            seed,
        }
    }
}

/// Observed error rate and frequency of each observed string, most frequent first.
pub fn empirical_string_errors(report: &MonteCarloReport) -> Vec<EmpiricalString> {
    let mut out: Vec<EmpiricalString> = report
        .per_string
        .iter()
        .filter(|(_, t)| t.count > 0)
        .map(|(s, t)| EmpiricalString {
            string: s.clone(),
            count: t.count,
            observed_error: t.errors as f64 / t.count as f64,
            observed_prob: t.count as f64 / report.trials as f64,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.string.cmp(&b.string)));
    out
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}
