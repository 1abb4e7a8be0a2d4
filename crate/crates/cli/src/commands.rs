use std::fs;
use std::path::Path;

use seqdisc_core::engine::{strategy_cost, EngineOptions};
use seqdisc_core::montecarlo::{empirical_string_errors, run_trials, MonteCarloOptions};
use seqdisc_core::optimizer::{
    default_range, optimize_angle, optimize_angle_with_hints, scan_angles, OptimizerOptions,
};
use seqdisc_core::strategies::lol_cost;
use seqdisc_core::stringlab::{aggregate_by_length, enumerate_strings};
use seqdisc_core::{CostResult, DiscriminationProblem, StrategySpec};

use crate::config::{Command, Format, RunConfig, Strategy};
use crate::format::{Cell, Table};
use crate::svg::{Plot, Series, Style};
use crate::CliError;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let bytes = match cfg.command {
        Command::AngleScan => angle_scan(cfg)?,
        Command::CostCurve => cost_curve(cfg)?,
        Command::Strings => strings(cfg)?,
        Command::Optimize => optimize(cfg)?,
        Command::Simulate => simulate(cfg)?,
    };
    write(&cfg.output, &bytes)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn engine(cfg: &RunConfig) -> EngineOptions {
    EngineOptions {
        max_copies: cfg.max_copies,
        ..Default::default()
    }
}

fn optimizer(cfg: &RunConfig) -> OptimizerOptions {
    OptimizerOptions {
        coarse_resolution: cfg.resolution,
        engine: engine(cfg),
        ..Default::default()
    }
}

fn problem(cfg: &RunConfig, theta: f64) -> Result<DiscriminationProblem, CliError> {
    Ok(DiscriminationProblem::new(theta, cfg.q1)?)
}

fn neg_ln(eps: f64) -> f64 {
    -eps.ln()
}

fn emit(cfg: &RunConfig, table: &Table, plot: impl FnOnce() -> Plot) -> Vec<u8> {
    match cfg.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
        Format::Svg => plot().render().into_bytes(),
    }
}

/// The fixed-angle or adaptive spec for `s`; GOF is optimized first.
fn resolve_strategy(
    cfg: &RunConfig,
    p: &DiscriminationProblem,
    s: Strategy,
    eps: f64,
) -> Result<(StrategySpec, Option<CostResult>), CliError> {
    Ok(match s {
        Strategy::Fbm => (StrategySpec::Fbm, None),
        Strategy::Ubm => (StrategySpec::Ubm, None),
        Strategy::Lol => (StrategySpec::Lol, None),
        Strategy::Fixed(phi) => (StrategySpec::FixedAngle(phi), None),
        Strategy::Gof => {
            let (phi, cost) = optimize_angle(p, eps, &optimizer(cfg))?;
            (StrategySpec::FixedAngle(phi), Some(cost))
        }
    })
}

fn angle_scan(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    const HEADER: &[&str] = &[
        "theta",
        "phi",
        "cost",
        "residual_mass",
        "bound_width",
        "note",
    ];
    let eps = cfg.epsilons[0];
    let (lo, hi) = default_range::<f64>();
    let mut table = Table::new(HEADER);
    let mut series = Vec::new();
    let mut clip: f64 = 0.0;
    for &theta in &cfg.thetas {
        let p = problem(cfg, theta)?;
        let scan = scan_angles(&p, eps, lo, hi, cfg.resolution, &engine(cfg))?;
        let mut points = Vec::with_capacity(scan.samples.len());
        for s in &scan.samples {
            match &s.result {
                Ok(c) => {
                    table.push(vec![
                        theta.into(),
                        s.phi.into(),
                        c.expected_copies.into(),
                        c.residual_mass.into(),
                        c.bound_width.into(),
                        Cell::Empty,
                    ]);
                    points.push((s.phi, c.expected_copies));
                }
                Err(e) => {
                    table.push(vec![
                        theta.into(),
                        s.phi.into(),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        e.to_string().into(),
                    ]);
                    points.push((s.phi, f64::NAN));
                }
            }
        }
        if let Some(best) = scan.best_cost() {
            clip = clip.max(3.0 * best);
        }
        series.push(Series {
            label: format!("theta = {}", fmt_short(theta)),
            points,
            style: Style::Line,
        });
    }
    Ok(emit(cfg, &table, || Plot {
        title: format!("Expected copies at epsilon = {}", fmt_short(eps)),
        x_label: "measurement angle phi (rad)".into(),
        y_label: "expected copies".into(),
        series,
        y_clip: (clip > 0.0).then_some(clip),
    }))
}

fn cost_curve(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    const HEADER: &[&str] = &[
        "epsilon",
        "neg_log_epsilon",
        "cost_fbm",
        "cost_ubm",
        "cost_lol",
        "cost_gof",
        "phi_opt",
    ];
    let p = problem(cfg, cfg.thetas[0])?;
    let eng = engine(cfg);
    let opt = optimizer(cfg);
    let mut table = Table::new(HEADER);
    let mut hints: Vec<f64> = Vec::new();
    let labels = ["fbm", "ubm", "lol", "gof"];
    let mut series: Vec<Series> = labels
        .iter()
        .map(|l| Series {
            label: (*l).into(),
            points: Vec::new(),
            style: Style::Line,
        })
        .collect();
    // Epsilons are ascending; optimal angles found for tighter bounds are
    // offered as candidates for looser ones.
    for &eps in &cfg.epsilons {
        let fbm = strategy_cost(&p, &StrategySpec::Fbm, eps, &eng)?.expected_copies;
        let ubm = strategy_cost(&p, &StrategySpec::Ubm, eps, &eng)?.expected_copies;
        let lol = strategy_cost(&p, &StrategySpec::Lol, eps, &eng)?.expected_copies;
        let (phi, gof) = optimize_angle_with_hints(&p, eps, &hints, &opt)?;
        hints.push(phi);
        let x = neg_ln(eps);
        for (s, y) in series.iter_mut().zip([fbm, ubm, lol, gof.expected_copies]) {
            s.points.push((x, y));
        }
        table.push(vec![
            eps.into(),
            x.into(),
            fbm.into(),
            ubm.into(),
            lol.into(),
            gof.expected_copies.into(),
            phi.into(),
        ]);
    }
    Ok(emit(cfg, &table, || Plot {
        title: format!("Expected copies at theta = {}", fmt_short(cfg.thetas[0])),
        x_label: "-ln epsilon".into(),
        y_label: "expected copies".into(),
        series,
        y_clip: None,
    }))
}

fn strings(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    const HEADER: &[&str] = &["strategy", "string", "n", "prob", "true_error", "guess"];
    let p = problem(cfg, cfg.thetas[0])?;
    let eps = cfg.epsilons[0];
    let mut table = Table::new(HEADER);
    for &s in &cfg.strategies {
        let label = s.label();
        if s == Strategy::Lol {
            let n = lol_cost(&p, eps)?;
            let err = if n == 0 {
                p.prior_error()
            } else {
                p.collective_error(n)?
            };
            table.push(vec![
                label.into(),
                Cell::Empty,
                n.into(),
                1.0.into(),
                err.into(),
                Cell::Empty,
            ]);
            continue;
        }
        let (spec, _) = resolve_strategy(cfg, &p, s, eps)?;
        let set = enumerate_strings(&p, &spec, eps, cfg.coverage, cfg.max_depth)?;
        if cfg.aggregate {
            for a in aggregate_by_length(&set.strings) {
                table.push(vec![
                    label.into(),
                    Cell::Empty,
                    a.n.into(),
                    a.total_prob.into(),
                    a.mean_error.into(),
                    Cell::Empty,
                ]);
            }
        } else {
            for t in &set.strings {
                table.push(vec![
                    label.into(),
                    t.outcomes.to_string().into(),
                    t.n.into(),
                    t.prob.into(),
                    t.true_error.into(),
                    t.guess.to_string().into(),
                ]);
            }
        }
    }
    Ok(emit(cfg, &table, || unreachable!("validated format")))
}

fn optimize(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    const HEADER: &[&str] = &["theta", "epsilon", "phi_opt", "cost", "bound_width"];
    let opt = optimizer(cfg);
    let mut table = Table::new(HEADER);
    for &theta in &cfg.thetas {
        let p = problem(cfg, theta)?;
        for &eps in &cfg.epsilons {
            let (phi, c) = optimize_angle(&p, eps, &opt)?;
            table.push(vec![
                theta.into(),
                eps.into(),
                phi.into(),
                c.expected_copies.into(),
                c.bound_width.into(),
            ]);
        }
    }
    Ok(emit(cfg, &table, || unreachable!("validated format")))
}

fn simulate(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    const HEADER: &[&str] = &[
        "strategy",
        "theta",
        "q1",
        "epsilon",
        "neg_log_epsilon",
        "phi",
        "predicted",
        "trials",
        "seed",
        "mean_copies",
        "mean_copies_stderr",
        "empirical_error",
        "min_copies",
        "max_copies",
    ];
    const STRING_HEADER: &[&str] = &[
        "strategy",
        "epsilon",
        "string",
        "n",
        "count",
        "observed_prob",
        "observed_error",
    ];
    let theta = cfg.thetas[0];
    let p = problem(cfg, theta)?;
    let eng = engine(cfg);
    let mc = MonteCarloOptions {
        record_strings: cfg.strings_csv.is_some(),
        ..Default::default()
    };
    let mut table = Table::new(HEADER);
    let mut per_string = Table::new(STRING_HEADER);
    let mut series = Vec::new();
    for &s in &cfg.strategies {
        let mut observed = Vec::new();
        let mut predicted_pts = Vec::new();
        for &eps in &cfg.epsilons {
            let (spec, known) = resolve_strategy(cfg, &p, s, eps)?;
            let predicted = match known {
                Some(c) => Some(c.expected_copies),
                None => strategy_cost(&p, &spec, eps, &eng)
                    .ok()
                    .map(|c| c.expected_copies),
            };
            let report = run_trials(&p, &spec, eps, cfg.trials, cfg.seed, &mc)?;
            let x = neg_ln(eps);
            observed.push((x, report.mean_copies));
            predicted_pts.push((x, predicted.unwrap_or(f64::NAN)));
            table.push(vec![
                s.label().into(),
                theta.into(),
                cfg.q1.into(),
                eps.into(),
                x.into(),
                Cell::opt(spec.fixed_angle(&p)),
                Cell::opt(predicted),
                report.trials.into(),
                report.seed.into(),
                report.mean_copies.into(),
                report.mean_copies_stderr.into(),
                report.empirical_error.into(),
                report.min_copies.into(),
                report.max_copies.into(),
            ]);
            for e in empirical_string_errors(&report) {
                per_string.push(vec![
                    s.label().into(),
                    eps.into(),
                    e.string.to_string().into(),
                    e.string.len().into(),
                    e.count.into(),
                    e.observed_prob.into(),
                    e.observed_error.into(),
                ]);
            }
        }
        series.push(Series {
            label: format!("{} (simulated)", s.label()),
            points: observed,
            style: Style::Markers,
        });
        series.push(Series {
            label: format!("{} (predicted)", s.label()),
            points: predicted_pts,
            style: Style::Line,
        });
    }
    if let Some(path) = &cfg.strings_csv {
        write(path, &per_string.to_csv())?;
    }
    Ok(emit(cfg, &table, || Plot {
        title: format!("Mean copies over {} trials", cfg.trials),
        x_label: "-ln epsilon".into(),
        y_label: "mean copies".into(),
        series,
        y_clip: None,
    }))
}

fn fmt_short(x: f64) -> String {
    let s = format!("{x:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}
