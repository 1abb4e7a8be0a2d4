//! Discrimination instance, projective measurement parametrization and the
//! Helstrom quantities.
//!
//! The two hypotheses are `|psi_j> = cos(theta)|x> - (-1)^j sin(theta)|y>` and
//! a measurement at angle `phi` projects onto
//! `|phi_D> = cos(phi - (D-1) pi/2)|x> + sin(phi - (D-1) pi/2)|y>`. All angles
//! are Hilbert-space angles in radians.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Index `D` of a single-copy measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    One,
    Two,
}

impl Outcome {
    pub fn index(self) -> u8 {
        match self {
            Outcome::One => 1,
            Outcome::Two => 2,
        }
    }

    pub fn from_index(d: u8) -> Option<Self> {
        match d {
            1 => Some(Outcome::One),
            2 => Some(Outcome::Two),
            _ => None,
        }
    }
}

/// Which of the two candidate states was prepared (or is guessed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    Psi1,
    Psi2,
}

impl Hypothesis {
    pub fn index(self) -> u8 {
        match self {
            Hypothesis::Psi1 => 1,
            Hypothesis::Psi2 => 2,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Hypothesis::Psi1 => Hypothesis::Psi2,
            Hypothesis::Psi2 => Hypothesis::Psi1,
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "psi{}", self.index())
    }
}

/// Ordered sequence of outcomes `D_1 D_2 ... D_n`, displayed as e.g. `1211`.
///
/// Ordering is lexicographic with `1 < 2`, and a prefix sorts before its
/// extensions.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutcomeString(Vec<Outcome>);

impl OutcomeString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, d: Outcome) {
        self.0.push(d);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.0
    }

    /// Number of outcome-1 and outcome-2 entries.
    pub fn counts(&self) -> (u64, u64) {
        let ones = self.0.iter().filter(|&&d| d == Outcome::One).count() as u64;
        (ones, self.0.len() as u64 - ones)
    }

    pub fn is_proper_prefix_of(&self, other: &OutcomeString) -> bool {
        self.0.len() < other.0.len() && other.0.starts_with(&self.0)
    }

    pub fn extended(&self, d: Outcome) -> Self {
        let mut next = self.clone();
        next.push(d);
        next
    }
}

impl From<Vec<Outcome>> for OutcomeString {
    fn from(v: Vec<Outcome>) -> Self {
        OutcomeString(v)
    }
}

impl fmt::Display for OutcomeString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            write!(f, "{}", d.index())?;
        }
        Ok(())
    }
}

impl FromStr for OutcomeString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '1' => Ok(Outcome::One),
                '2' => Ok(Outcome::Two),
                _ => Err(Error::Unsupported(format!("outcome symbol {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(OutcomeString)
    }
}

impl Serialize for OutcomeString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OutcomeString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A pair of pure states at half-opening angle `theta` with priors `(q1, q2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscriminationProblem<T> {
    theta: T,
    q1: T,
    q2: T,
}

impl<T: Real> DiscriminationProblem<T> {
    /// Requires `0 < theta < pi/4` and `0 < q1 < 1`; `q2` is formed here as `1 - q1`.
    pub fn new(theta: T, q1: T) -> Result<Self> {
        if !(theta > T::zero() && theta < T::FRAC_PI_4()) {
            return Err(Error::domain("theta", theta.as_f64(), "(0, pi/4)"));
        }
        if !(q1 > T::zero() && q1 < T::one()) {
            return Err(Error::domain("q1", q1.as_f64(), "(0, 1)"));
        }
        Ok(Self {
            theta,
            q1,
            q2: T::one() - q1,
        })
    }

    /// Equal priors `q1 = q2 = 1/2`.
    pub fn symmetric(theta: T) -> Result<Self> {
        Self::new(theta, T::lit(0.5))
    }

    /// Same states, different prior for `psi1`.
    pub fn with_prior(&self, q1: T) -> Result<Self> {
        Self::new(self.theta, q1)
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn q1(&self) -> T {
        self.q1
    }

    pub fn q2(&self) -> T {
        self.q2
    }

    pub fn prior(&self, j: Hypothesis) -> T {
        match j {
            Hypothesis::Psi1 => self.q1,
            Hypothesis::Psi2 => self.q2,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.q1 == self.q2
    }

    /// `<psi1|psi2> = cos 2 theta`.
    pub fn overlap(&self) -> T {
        (T::lit(2.0) * self.theta).cos()
    }

    /// Error of guessing from the prior alone, `min(q1, q2)`.
    pub fn prior_error(&self) -> T {
        self.q1.min(self.q2)
    }

    pub fn measurement(&self, phi: T) -> Result<MeasurementConfig<T>> {
        MeasurementConfig::new(self, phi)
    }

    /// `|<phi_D|psi_j>|^2`.
    pub fn outcome_probability(&self, phi: T, d: Outcome, j: Hypothesis) -> Result<T> {
        Ok(self.measurement(phi)?.likelihood(d, j))
    }

    /// Single-copy Helstrom angle, `(1/2) arctan[tan(2 theta) / (q1 - q2)]`
    /// taken on the branch in `(0, pi/2)`.
    pub fn helstrom_angle(&self) -> T {
        if self.q1 == self.q2 {
            return T::FRAC_PI_4();
        }
        let tan2 = (T::lit(2.0) * self.theta).tan();
        T::lit(0.5) * tan2.atan2(self.q1 - self.q2)
    }

    /// Minimum single-copy error `E^H = 1/2 - 1/2 sqrt(1 - 4 q1 q2 cos^2 2theta)`.
    pub fn helstrom_error(&self) -> T {
        self.collective_error_at(1)
    }

    /// Minimum error achievable with `n` copies, the Helstrom error for the
    /// `n`-fold product states (overlap `cos^n 2 theta`).
    pub fn collective_error(&self, n: u64) -> Result<T> {
        if n < 1 {
            return Err(Error::domain("n", n as f64, "n >= 1"));
        }
        Ok(self.collective_error_at(n))
    }

    /// `E_n` for any `n >= 0`; `E_0` is the prior error.
    pub(crate) fn collective_error_at(&self, n: u64) -> T {
        let c2 = self.overlap().powi(2);
        let x = T::lit(4.0) * self.q1 * self.q2 * c2.powf(T::from_u64(n).unwrap());
        // 1/2 (1 - sqrt(1 - x)) without cancellation for small x.
        T::lit(0.5) * x / (T::one() + (T::one() - x).max(T::zero()).sqrt())
    }
}

/// A fixed projective measurement and its four outcome likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementConfig<T> {
    phi: T,
    p1_given_psi1: T,
    p2_given_psi1: T,
    p1_given_psi2: T,
    p2_given_psi2: T,
}

impl<T: Real> MeasurementConfig<T> {
    pub fn new(problem: &DiscriminationProblem<T>, phi: T) -> Result<Self> {
        if !(phi >= T::zero() && phi < T::FRAC_PI_2()) {
            return Err(Error::domain("phi", phi.as_f64(), "[0, pi/2)"));
        }
        let theta = problem.theta();
        let minus = snap_zero(phi - theta);
        // cos(phi + theta) = sin(pi/2 - theta - phi); formed this way so that
        // phi + theta = pi/2 produces an exact zero.
        let plus_gap = snap_zero((T::FRAC_PI_2() - theta) - phi);
        let (s_minus, c_minus) = minus.sin_cos();
        let (s_gap, c_gap) = plus_gap.sin_cos();
        Ok(Self {
            phi,
            p1_given_psi1: c_minus * c_minus,
            p2_given_psi1: s_minus * s_minus,
            p1_given_psi2: s_gap * s_gap,
            p2_given_psi2: c_gap * c_gap,
        })
    }

    /// Builds a configuration directly from outcome-1 likelihoods.
    pub fn from_likelihoods(phi: T, p1_given_psi1: T, p1_given_psi2: T) -> Result<Self> {
        for (name, p) in [
            ("p1_given_psi1", p1_given_psi1),
            ("p1_given_psi2", p1_given_psi2),
        ] {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::domain(name, p.as_f64(), "[0, 1]"));
            }
        }
        Ok(Self {
            phi,
            p1_given_psi1,
            p2_given_psi1: T::one() - p1_given_psi1,
            p1_given_psi2,
            p2_given_psi2: T::one() - p1_given_psi2,
        })
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    /// `P(D = d | psi_j)`.
    #[inline]
    pub fn likelihood(&self, d: Outcome, j: Hypothesis) -> T {
        match (d, j) {
            (Outcome::One, Hypothesis::Psi1) => self.p1_given_psi1,
            (Outcome::Two, Hypothesis::Psi1) => self.p2_given_psi1,
            (Outcome::One, Hypothesis::Psi2) => self.p1_given_psi2,
            (Outcome::Two, Hypothesis::Psi2) => self.p2_given_psi2,
        }
    }

    pub fn p1_given_psi1(&self) -> T {
        self.p1_given_psi1
    }

    pub fn p2_given_psi1(&self) -> T {
        self.p2_given_psi1
    }

    pub fn p1_given_psi2(&self) -> T {
        self.p1_given_psi2
    }

    pub fn p2_given_psi2(&self) -> T {
        self.p2_given_psi2
    }
}

/// Angles within a few ulps of zero are treated as exactly zero.
fn snap_zero<T: Real>(x: T) -> T {
    if x.abs() <= T::epsilon() * T::lit(4.0) {
        T::zero()
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn problem(theta: f64, q1: f64) -> DiscriminationProblem<f64> {
        DiscriminationProblem::new(theta, q1).unwrap()
    }

    /// Squared inner product of explicitly built state vectors.
    fn inner_product_sq(theta: f64, phi: f64, d: u8, j: u8) -> f64 {
        let sign = -(-1f64).powi(j as i32);
        let psi = [theta.cos(), sign * theta.sin()];
        let a = phi - PI / 2.0 * (d as f64 - 1.0);
        let meas = [a.cos(), a.sin()];
        let ip = psi[0] * meas[0] + psi[1] * meas[1];
        ip * ip
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(DiscriminationProblem::new(0.0, 0.5).is_err());
        assert!(DiscriminationProblem::new(PI / 4.0, 0.5).is_err());
        assert!(DiscriminationProblem::new(0.3, 0.0).is_err());
        assert!(DiscriminationProblem::new(0.3, 1.0).is_err());
        assert!(DiscriminationProblem::new(f64::NAN, 0.5).is_err());
        let p = problem(0.3, 0.25);
        assert_eq!(p.q1() + p.q2(), 1.0);
    }

    #[test]
    fn outcome_probability_examples() {
        let p = problem(PI / 12.0, 0.5);
        let v = p
            .outcome_probability(PI / 4.0, Outcome::One, Hypothesis::Psi1)
            .unwrap();
        assert!((v - 0.75).abs() < 1e-15);
        for theta in [0.1, PI / 12.0, 0.7] {
            let q = problem(theta, 0.5);
            let v = q
                .outcome_probability(theta, Outcome::Two, Hypothesis::Psi1)
                .unwrap();
            assert_eq!(v, 0.0);
        }
        let v = p
            .outcome_probability(PI / 12.0, Outcome::One, Hypothesis::Psi2)
            .unwrap();
        assert!((v - 0.75).abs() < 1e-15);
    }

    #[test]
    fn outcome_probability_rejects_bad_angle() {
        let p = problem(0.2, 0.5);
        assert!(p
            .outcome_probability(-0.1, Outcome::One, Hypothesis::Psi1)
            .is_err());
        assert!(p
            .outcome_probability(PI / 2.0, Outcome::One, Hypothesis::Psi1)
            .is_err());
    }

    #[test]
    fn orthogonal_projection_is_exactly_zero() {
        let p = problem(PI / 12.0, 0.5);
        let m = p.measurement(5.0 * PI / 12.0).unwrap();
        assert_eq!(m.p1_given_psi2(), 0.0);
        assert_eq!(m.p2_given_psi2(), 1.0);
    }

    #[test]
    fn helstrom_angle_examples() {
        assert_eq!(problem(PI / 12.0, 0.5).helstrom_angle(), PI / 4.0);
        assert_eq!(problem(PI / 8.0, 0.5).helstrom_angle(), PI / 4.0);
        let phi = problem(PI / 8.0, 0.75).helstrom_angle();
        assert!((phi - 0.5 * 2f64.atan()).abs() < 1e-12);
        assert!((phi - 0.55357).abs() < 1e-5);
    }

    #[test]
    fn helstrom_error_examples() {
        assert!((problem(PI / 12.0, 0.5).helstrom_error() - 0.25).abs() < 1e-15);
        let v = problem(PI / 8.0, 0.5).helstrom_error();
        assert!((v - 0.5 * (1.0 - (PI / 4.0).sin())).abs() < 1e-15);
        assert!((v - 0.146447).abs() < 1e-6);
        assert!(problem(0.3, 1e-300).helstrom_error() < 1e-299);
    }

    #[test]
    fn collective_error_examples() {
        let p = problem(PI / 12.0, 0.5);
        assert_eq!(p.collective_error(1).unwrap(), p.helstrom_error());
        let e2 = p.collective_error(2).unwrap();
        let expected = 0.5 * (1.0 - (1.0 - 0.75f64.powi(2)).sqrt());
        assert!((e2 - expected).abs() < 1e-15);
        assert!((e2 - 0.169281).abs() < 1e-6);
        assert!(p.collective_error(0).is_err());
        assert!(p.collective_error(2000).unwrap() < 1e-100);
        assert_eq!(p.collective_error_at(0), 0.5);
    }

    #[test]
    fn outcome_string_parse_and_order() {
        let s: OutcomeString = "1211".parse().unwrap();
        assert_eq!(s.to_string(), "1211");
        assert_eq!(s.counts(), (3, 1));
        let prefix: OutcomeString = "12".parse().unwrap();
        assert!(prefix.is_proper_prefix_of(&s));
        assert!(!s.is_proper_prefix_of(&s));
        assert!(prefix < s);
        assert!("3".parse::<OutcomeString>().is_err());
    }

    proptest! {
        #[test]
        fn outcomes_sum_to_one(theta in 1e-3..0.785f64, phi in 0.0..1.57f64) {
            let p = problem(theta, 0.5);
            let m = p.measurement(phi).unwrap();
            prop_assert!((m.p1_given_psi1() + m.p2_given_psi1() - 1.0).abs() < 1e-12);
            prop_assert!((m.p1_given_psi2() + m.p2_given_psi2() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn matches_explicit_inner_products(theta in 1e-3..0.785f64, phi in 0.0..1.57f64) {
            let p = problem(theta, 0.5);
            for (d, dn) in [(Outcome::One, 1u8), (Outcome::Two, 2)] {
                for (j, jn) in [(Hypothesis::Psi1, 1u8), (Hypothesis::Psi2, 2)] {
                    let v = p.outcome_probability(phi, d, j).unwrap();
                    prop_assert!((v - inner_product_sq(theta, phi, dn, jn)).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn helstrom_error_symmetric_in_priors(theta in 1e-3..0.785f64, q1 in 0.001..0.999f64) {
            let a = problem(theta, q1).helstrom_error();
            let b = problem(theta, 1.0 - q1).helstrom_error();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn helstrom_angle_minimizes_single_copy_error(theta in 0.01..0.78f64, q1 in 0.01..0.99f64) {
            let p = problem(theta, q1);
            let phi = p.helstrom_angle();
            prop_assert!(phi > 0.0 && phi < PI / 2.0);
            let m = p.measurement(phi).unwrap();
            let err = q1 * m.p2_given_psi1() + p.q2() * m.p1_given_psi2();
            prop_assert!((err - p.helstrom_error()).abs() < 1e-12);
        }

        #[test]
        fn collective_error_strictly_decreasing(theta in 0.01..0.78f64, q1 in 0.01..0.99f64, n in 1u64..30) {
            let p = problem(theta, q1);
            prop_assert!(p.collective_error(n + 1).unwrap() < p.collective_error(n).unwrap());
        }
    }
}
