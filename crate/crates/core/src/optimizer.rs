//! Search for the globally optimal fixed measurement angle.
//!
//! The cost as a function of `phi` is piecewise smooth with jump
//! discontinuities wherever a termination string appears or disappears, so
//! the search is a uniform scan followed by bracket refinement around the
//! incumbent; no derivative information is used.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{fixed_angle_cost, EngineOptions};
use crate::error::{Error, Result};
use crate::model::DiscriminationProblem;
use crate::scalar::Real;
use crate::strategies::CostResult;

/// Distance kept from `pi/2` at the top of the default range.
pub const UPPER_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AngleSample<T> {
    pub phi: T,
    pub result: Result<CostResult<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleScan<T> {
    /// One entry per grid point, in increasing `phi`.
    pub samples: Vec<AngleSample<T>>,
    best: Option<usize>,
}

impl<T: Real> AngleScan<T> {
    fn from_samples(samples: Vec<AngleSample<T>>) -> Self {
        let mut best: Option<(usize, T)> = None;
        for (i, s) in samples.iter().enumerate() {
            if let Ok(c) = &s.result {
                // Strict comparison keeps the smaller phi on ties.
                if best.is_none_or(|(_, b)| c.expected_copies < b) {
                    best = Some((i, c.expected_copies));
                }
            }
        }
        Self {
            samples,
            best: best.map(|(i, _)| i),
        }
    }

    pub fn best(&self) -> Option<(T, CostResult<T>)> {
        self.best.map(|i| {
            let s = &self.samples[i];
            (s.phi, s.result.clone().expect("best sample is finite"))
        })
    }

    pub fn best_phi(&self) -> Option<T> {
        self.best().map(|b| b.0)
    }

    pub fn best_cost(&self) -> Option<T> {
        self.best().map(|b| b.1.expected_copies)
    }
}

/// `[0, pi/2 - UPPER_GUARD]`.
pub fn default_range<T: Real>() -> (T, T) {
    (T::zero(), T::FRAC_PI_2() - T::lit(UPPER_GUARD))
}

/// Evaluates the cost at `resolution` evenly spaced angles, endpoints included.
pub fn scan_angles<T: Real>(
    problem: &DiscriminationProblem<T>,
    eps: T,
    phi_min: T,
    phi_max: T,
    resolution: usize,
    engine: &EngineOptions,
) -> Result<AngleScan<T>> {
    if !(phi_min >= T::zero() && phi_min < phi_max && phi_max < T::FRAC_PI_2()) {
        return Err(Error::domain(
            "phi range",
            phi_min.as_f64(),
            "0 <= phi_min < phi_max < pi/2",
        ));
    }
    if resolution < 2 {
        return Err(Error::domain("resolution", resolution as f64, ">= 2"));
    }
    let last = T::from_usize(resolution - 1).unwrap();
    let grid: Vec<T> = (0..resolution)
        .map(|i| {
            if i + 1 == resolution {
                phi_max
            } else {
                phi_min + (phi_max - phi_min) * T::from_usize(i).unwrap() / last
            }
        })
        .collect();
    Ok(AngleScan::from_samples(evaluate(
        problem, eps, &grid, engine,
    )))
}

fn evaluate<T: Real>(
    problem: &DiscriminationProblem<T>,
    eps: T,
    angles: &[T],
    engine: &EngineOptions,
) -> Vec<AngleSample<T>> {
    angles
        .par_iter()
        .map(|&phi| AngleSample {
            phi,
            result: fixed_angle_cost(problem, phi, eps, engine),
        })
        .collect()
}

fn search_range<T: Real>(problem: &DiscriminationProblem<T>) -> (T, T) {
    let (lo, hi) = default_range::<T>();
    if problem.is_symmetric() {
        (lo, T::FRAC_PI_4())
    } else {
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub coarse_resolution: usize,
    /// Refinement stops once the grid spacing is at most this (radians).
    pub angle_tolerance: f64,
    /// Points per refinement bracket.
    pub refine_points: usize,
    pub engine: EngineOptions,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            coarse_resolution: 2000,
            angle_tolerance: 1e-6,
            refine_points: 21,
            engine: EngineOptions::default(),
        }
    }
}

/// Globally optimal fixed angle, up to grid resolution.
///
/// The coarse scan covers [`default_range`]. The FBM angle, its mirror
/// `pi/2 - theta` and the Helstrom angle are evaluated as well, since
/// isolated zero-error angles can beat every neighbouring grid point.
/// The incumbent's bracket of one cell either side is then rescanned,
/// recursively, until the spacing reaches `angle_tolerance`.
///
/// With equal priors the cost is symmetric under `phi -> pi/2 - phi`, so
/// only `[0, pi/4]` is searched and the smaller of two mirror optima wins.
pub fn optimize_angle<T: Real>(
    problem: &DiscriminationProblem<T>,
    eps: T,
    opts: &OptimizerOptions,
) -> Result<(T, CostResult<T>)> {
    optimize_angle_with_hints(problem, eps, &[], opts)
}

/// [`optimize_angle`] with extra candidate angles evaluated alongside the
/// built-in anchors. Hints outside the search range are ignored.
pub fn optimize_angle_with_hints<T: Real>(
    problem: &DiscriminationProblem<T>,
    eps: T,
    hints: &[T],
    opts: &OptimizerOptions,
) -> Result<(T, CostResult<T>)> {
    let (lo, hi) = search_range(problem);
    let coarse = scan_angles(problem, eps, lo, hi, opts.coarse_resolution, &opts.engine)?;
    let mut anchors = vec![problem.theta(), problem.helstrom_angle()];
    let mirror = T::FRAC_PI_2() - problem.theta();
    if mirror <= hi {
        anchors.push(mirror);
    }
    anchors.extend_from_slice(hints);
    anchors.retain(|&a| a >= lo && a <= hi);
    anchors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let anchored = AngleScan::from_samples(evaluate(problem, eps, &anchors, &opts.engine));

    let mut incumbent = match (coarse.best(), anchored.best()) {
        (Some(c), Some(a)) => {
            if a.1.expected_copies < c.1.expected_copies
                || (a.1.expected_copies == c.1.expected_copies && a.0 < c.0)
            {
                a
            } else {
                c
            }
        }
        (Some(c), None) => c,
        (None, Some(a)) => a,
        (None, None) => return Err(Error::NoFeasibleAngle),
    };

    let points = opts.refine_points.max(3);
    let tol = T::lit(opts.angle_tolerance);
    let mut half_width = (hi - lo) / T::from_usize(opts.coarse_resolution - 1).unwrap();
    while half_width > tol {
        let a = (incumbent.0 - half_width).max(lo);
        let b = (incumbent.0 + half_width).min(hi);
        let refined = scan_angles(problem, eps, a, b, points, &opts.engine)?;
        if let Some(cand) = refined.best() {
            if cand.1.expected_copies < incumbent.1.expected_copies {
                incumbent = cand;
            }
        }
        half_width = (b - a) / T::from_usize(points - 1).unwrap();
    }
    Ok(incumbent)
}
