//! Run directories: manifest, sample table, gnuplot-ready data files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde_json::json;
use sha1::{Digest, Sha1};

use crate::error::Result;
use crate::evolve::{RunConfig, RunResult};
use crate::hamiltonian::{build_hamiltonian, Hamiltonian};

pub const MANIFEST: &str = "manifest.json";
pub const SAMPLES: &str = "samples.csv";
pub const FIG4: &str = "fig4.dat";
pub const FIG5: &str = "fig5.dat";
pub const FIG6: &str = "fig6.dat";
pub const PLOT: &str = "plot.gp";

/// `git hash-object` of the given bytes.
pub fn git_blob_hash(content: &[u8]) -> String {
    let mut hasher = Sha1::new();
    hasher.update(format!("blob {}\0", content.len()).as_bytes());
    hasher.update(content);
    format!("{:x}", hasher.finalize())
}

pub fn hamiltonian_hash(h: &Hamiltonian) -> Result<String> {
    Ok(git_blob_hash(h.to_json()?.as_bytes()))
}

pub fn manifest(config: &RunConfig, result: &RunResult, method: &str) -> Result<serde_json::Value> {
    let h = build_hamiltonian(&config.system)?;
    let p = &result.period;
    Ok(json!({
        "program": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "system": config.system.kind,
        "n_sites": config.system.n_sites(),
        "method": method,
        "config": {
            "dt_over_T": config.dt_over_t,
            "total_over_T": config.total_over_t,
            "steps": config.n_steps()?,
            "sample_pitch": config.sample_pitch,
            "threshold": config.threshold,
            "depth": config.depth,
            "initial": config.initial_label().as_str(),
            "tracked": result.tracked.iter().map(|l| l.as_str()).collect::<Vec<_>>(),
        },
        "geometry": config.system.to_file(),
        "constants": config.constants,
        "T_fs": config.constants.period_from_constants(),
        "hamiltonian": {
            "terms": h.terms.len(),
            "hash": hamiltonian_hash(&h)?,
        },
        "period": {
            "period_over_T": p.period_over_t,
            "lower_bound": p.lower_bound,
            "crossing_over_T": p.crossing_over_t,
            "peak_fidelity": finite_or_null(p.peak_fidelity),
            "threshold": p.threshold,
        },
    }))
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

/// Writes the manifest, the full sample table and the plot files.
pub fn write_run(
    dir: &Path,
    config: &RunConfig,
    result: &RunResult,
    method: &str,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let manifest_path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest(config, result, method)?)?;
    text.push('\n');
    fs::write(&manifest_path, text)?;
    let samples_path = dir.join(SAMPLES);
    fs::write(&samples_path, result.table().to_csv())?;
    let mut written = vec![manifest_path, samples_path];
    written.extend(emit_plot_data(result, dir)?);
    Ok(written)
}

fn data_file(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = format!("# {}\n", header.join(" "));
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.10e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Whitespace-separated series against t/T plus a gnuplot script:
/// `fig4.dat` tracked |amplitudes|, `fig5.dat` per-site m_z,
/// `fig6.dat` total magnetization.
pub fn emit_plot_data(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let time = |s: &crate::observables::SampleRecord| s.time_over_t;

    let fig4 = dir.join(FIG4);
    if result.tracked.is_empty() {
        info!("no tracked basis states; skipping {}", fig4.display());
        if fig4.exists() {
            fs::remove_file(&fig4)?;
        }
    } else {
        let mut header = vec!["t/T".to_string()];
        header.extend(result.tracked.iter().map(|l| format!("|{l}|")));
        let rows = result.samples.iter().map(|s| {
            let mut row = vec![time(s)];
            row.extend(&s.amp_norms);
            row
        });
        fs::write(&fig4, data_file(&header, rows))?;
        written.push(fig4);
    }

    let mut header = vec!["t/T".to_string()];
    header.extend(result.site_labels.iter().map(|l| format!("mz_{l}")));
    let rows = result.samples.iter().map(|s| {
        let mut row = vec![time(s)];
        row.extend(&s.m_z);
        row
    });
    let fig5 = dir.join(FIG5);
    fs::write(&fig5, data_file(&header, rows))?;
    written.push(fig5);

    let header = ["t/T".to_string(), "magnetization".to_string()];
    let rows = result
        .samples
        .iter()
        .map(|s| vec![time(s), s.magnetization]);
    let fig6 = dir.join(FIG6);
    fs::write(&fig6, data_file(&header, rows))?;
    written.push(fig6);

    let plot = dir.join(PLOT);
    fs::write(&plot, plot_script(result))?;
    written.push(plot);
    Ok(written)
}

fn plot_script(result: &RunResult) -> String {
    let mut s = String::new();
    let name = result.kind.name();
    writeln!(s, "set terminal pngcairo size 900,600").unwrap();
    writeln!(s, "set xlabel 't/T'").unwrap();
    writeln!(s, "set key outside right").unwrap();
    if !result.tracked.is_empty() {
        writeln!(s, "set output 'fig4.png'").unwrap();
        writeln!(s, "set ylabel '|amplitude|'").unwrap();
        writeln!(s, "set title '{name}: basis-state amplitudes'").unwrap();
        let series: Vec<String> = (0..result.tracked.len())
            .map(|k| {
                format!(
                    "'{FIG4}' using 1:{} with lines title columnhead({})",
                    k + 2,
                    k + 2
                )
            })
            .collect();
        writeln!(s, "plot {}", series.join(", \\\n     ")).unwrap();
    }
    writeln!(s, "set output 'fig5.png'").unwrap();
    writeln!(s, "set ylabel 'm_z'").unwrap();
    writeln!(s, "set title '{name}: site magnetization'").unwrap();
    let series: Vec<String> = result
        .site_labels
        .iter()
        .enumerate()
        .map(|(k, l)| format!("'{FIG5}' using 1:{} with lines title '{l}'", k + 2))
        .collect();
    writeln!(s, "plot {}", series.join(", \\\n     ")).unwrap();
    writeln!(s, "set output 'fig6.png'").unwrap();
    writeln!(s, "set ylabel 'magnetization'").unwrap();
    writeln!(s, "set title '{name}: total magnetization'").unwrap();
    writeln!(s, "plot '{FIG6}' using 1:2 with lines notitle").unwrap();
    s
}
