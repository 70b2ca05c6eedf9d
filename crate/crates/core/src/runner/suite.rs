//! Built-in reproduction suites.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::info;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolve::{max_trotter_error, run_trotter, semiclassical_period_scan, RunConfig};
use crate::lattice::{SystemKind, SystemParams};
use crate::observables::PeriodEstimate;

use super::output::write_run;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SuiteName {
    Fig4,
    Fig5,
    Fig6,
    Table1,
    Convergence,
    All,
}

/// Named runs making up a figure suite; every one is fully described by
/// built-in defaults.
#[derive(Clone, Debug)]
pub struct ExperimentSuite {
    pub name: SuiteName,
    pub runs: Vec<(String, RunConfig)>,
}

impl ExperimentSuite {
    pub fn builtin(name: SuiteName) -> Result<Self> {
        let runs = match name {
            SuiteName::Fig4 | SuiteName::Fig5 | SuiteName::Fig6 | SuiteName::All => [
                SystemKind::Melon,
                SystemKind::AntiMelon,
                SystemKind::Combined,
            ]
            .into_iter()
            .map(|k| {
                Ok((
                    k.name().to_string(),
                    RunConfig::for_kind(k, &SystemParams::default())?,
                ))
            })
            .collect::<Result<_>>()?,
            SuiteName::Table1 | SuiteName::Convergence => Vec::new(),
        };
        Ok(Self { name, runs })
    }
}

#[derive(Clone, Debug)]
pub struct Table1Row {
    pub system: &'static str,
    pub paper: &'static str,
    pub estimate: PeriodEstimate,
}

struct Table1Scan {
    system: &'static str,
    paper: &'static str,
    kind: SystemKind,
    delta: f64,
    dt_over_t: f64,
    t_max_over_t: f64,
}

const TABLE1: [Table1Scan; 4] = [
    Table1Scan {
        system: "(A),(B) Single vortex",
        paper: "4",
        kind: SystemKind::Melon,
        delta: 0.0,
        dt_over_t: 1.0 / 300.0,
        t_max_over_t: 20.0,
    },
    Table1Scan {
        system: "(C) Combined vortices",
        paper: "48",
        kind: SystemKind::Combined,
        delta: 0.0,
        dt_over_t: 1.0 / 10.0,
        t_max_over_t: 100.0,
    },
    Table1Scan {
        system: "XXZ, Δ=0",
        paper: "≥ 400",
        kind: SystemKind::Xxz,
        delta: 0.0,
        dt_over_t: 1.0 / 100.0,
        t_max_over_t: 400.0,
    },
    Table1Scan {
        system: "XXZ, Δ=2",
        paper: "≥ 400",
        kind: SystemKind::Xxz,
        delta: 2.0,
        dt_over_t: 1.0 / 100.0,
        t_max_over_t: 400.0,
    },
];

/// Period estimates for the four Table I systems by the step-by-step
/// fidelity scan.
pub fn table1() -> Result<Vec<Table1Row>> {
    TABLE1
        .par_iter()
        .map(|scan| {
            let params = SystemParams {
                n: 8,
                delta: scan.delta,
                chi: None,
            };
            let mut cfg = RunConfig::for_kind(scan.kind, &params)?;
            cfg.dt_over_t = scan.dt_over_t;
            Ok(Table1Row {
                system: scan.system,
                paper: scan.paper,
                estimate: semiclassical_period_scan(&cfg, scan.t_max_over_t)?,
            })
        })
        .collect()
}

fn format_period(p: &PeriodEstimate) -> String {
    if p.lower_bound {
        format!("≥ {}", p.period_over_t)
    } else {
        format!("{:.2}", p.period_over_t)
    }
}

pub fn format_table1(rows: &[Table1Row]) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{:<24}{:>12}{:>12}{:>14}",
        "System", "Period (T)", "Paper", "Peak F"
    )
    .unwrap();
    for r in rows {
        let f = r.estimate.peak_fidelity;
        let f = if f.is_finite() {
            format!("{f:.4}")
        } else {
            "-".into()
        };
        // Pad by chars so the Δ rows line up.
        let pad = 24usize.saturating_sub(r.system.chars().count());
        writeln!(
            s,
            "{}{}{:>12}{:>12}{:>14}",
            r.system,
            " ".repeat(pad),
            format_period(&r.estimate),
            r.paper,
            f
        )
        .unwrap();
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergencePoint {
    pub dt_over_t: f64,
    /// Largest amplitude deviation from the exact state over the samples.
    pub error: f64,
}

/// Trotter vs exact amplitude error for each step size, compared at the
/// grid of multiples of the coarsest step.
pub fn convergence_study(
    kind: SystemKind,
    dts: &[f64],
    total_over_t: f64,
) -> Result<Vec<ConvergencePoint>> {
    let coarse = dts.iter().copied().fold(0.0, f64::max);
    dts.par_iter()
        .map(|&dt| {
            let mut cfg = RunConfig::for_kind(kind, &SystemParams::default())?;
            cfg.dt_over_t = dt;
            cfg.total_over_t = total_over_t;
            cfg.auto_track = 0;
            let ratio = coarse / dt;
            if (ratio - ratio.round()).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "step {dt} does not divide the coarsest step {coarse}"
                )));
            }
            let error = max_trotter_error(&cfg, ratio.round() as u64)?;
            Ok(ConvergencePoint {
                dt_over_t: dt,
                error,
            })
        })
        .collect()
}

pub const CONVERGENCE_DTS: [f64; 4] = [1.0 / 75.0, 1.0 / 150.0, 1.0 / 300.0, 1.0 / 600.0];

pub fn format_convergence(points: &[ConvergencePoint]) -> String {
    let mut s = String::from("# dt_over_T error ratio_to_previous\n");
    for (i, p) in points.iter().enumerate() {
        let ratio = if i == 0 {
            f64::NAN
        } else {
            points[i - 1].error / p.error
        };
        writeln!(s, "{:.10e} {:.10e} {:.6}", p.dt_over_t, p.error, ratio).unwrap();
    }
    s
}

/// Runs a suite with at most `jobs` concurrent runs, writing everything
/// under `out`; returns the text summary.
pub fn run_suite(name: SuiteName, out: &Path, jobs: usize) -> Result<String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| run_suite_inner(name, out))
}

fn run_suite_inner(name: SuiteName, out: &Path) -> Result<String> {
    fs::create_dir_all(out)?;
    let mut summary = String::new();
    let suite = ExperimentSuite::builtin(name)?;
    let results = suite
        .runs
        .par_iter()
        .map(|(label, cfg)| {
            info!("running {label}");
            let run = run_trotter(cfg)?;
            write_run(&out.join(label), cfg, &run, "trotter")?;
            Ok((label.clone(), run))
        })
        .collect::<Result<Vec<_>>>()?;
    for (label, run) in &results {
        let last = run.samples.last().expect("runs have a first sample");
        writeln!(
            summary,
            "{label}: {} samples, fidelity0({}T) = {:.6}, wrote {}",
            run.samples.len(),
            last.time_over_t,
            last.fidelity0,
            out.join(label).display()
        )
        .unwrap();
    }
    if matches!(name, SuiteName::Table1 | SuiteName::All) {
        let table = format_table1(&table1()?);
        fs::write(out.join("table1.txt"), &table)?;
        summary.push_str(&table);
    }
    if matches!(name, SuiteName::Convergence | SuiteName::All) {
        let text = format_convergence(&convergence_study(
            SystemKind::Melon,
            &CONVERGENCE_DTS,
            1.0,
        )?);
        fs::write(out.join("convergence.dat"), &text)?;
        summary.push_str(&text);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_suites_cover_the_three_vortex_systems() {
        let s = ExperimentSuite::builtin(SuiteName::Fig5).unwrap();
        let names: Vec<&str> = s.runs.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["melon", "antimelon", "combined"]);
        assert_eq!(s.runs[0].1.n_steps().unwrap(), 1200);
        assert_eq!(s.runs[2].1.n_steps().unwrap(), 480);
        assert!(ExperimentSuite::builtin(SuiteName::Table1)
            .unwrap()
            .runs
            .is_empty());
    }

    #[test]
    fn table_marks_lower_bounds() {
        let est = |period, lower_bound| PeriodEstimate {
            period_over_t: period,
            lower_bound,
            crossing_over_t: None,
            peak_fidelity: 0.5,
            threshold: 0.999,
            t_max_over_t: 400.0,
        };
        let rows = [
            Table1Row {
                system: "XXZ, Δ=2",
                paper: "≥ 400",
                estimate: est(400.0, true),
            },
            Table1Row {
                system: "(C) Combined vortices",
                paper: "48",
                estimate: est(48.0, false),
            },
        ];
        let text = format_table1(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains("≥ 400"));
        assert!(lines[2].contains("48.00"));
        assert_eq!(lines[1].chars().count(), lines[2].chars().count());
    }

    #[test]
    fn convergence_rejects_incommensurate_steps() {
        assert!(convergence_study(SystemKind::Melon, &[0.1, 0.03], 0.3).is_err());
    }

    #[test]
    fn convergence_error_shrinks_with_step() {
        let pts = convergence_study(SystemKind::Melon, &[0.1, 0.05], 0.5).unwrap();
        assert!(pts[1].error < pts[0].error);
        let text = format_convergence(&pts);
        assert_eq!(text.lines().count(), 3);
    }
}
