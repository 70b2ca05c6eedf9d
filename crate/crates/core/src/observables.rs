//! Per-sample observables and post-processing of sampled series.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, PauliAxis, PauliTerm, PhysicalConstants};
use crate::statevector::{fidelity, BasisLabel, StateVector};

#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub step: u64,
    pub time_over_t: f64,
    /// |amplitude| of each tracked basis state, in tracked-label order.
    pub amp_norms: Vec<f64>,
    pub m_z: Vec<f64>,
    pub m_x: Vec<f64>,
    pub m_y: Vec<f64>,
    /// Σ_sites m_z, dimensionless.
    pub magnetization: f64,
    /// magnetization × the noise-moment unit, J/T.
    pub svinm_physical: f64,
    /// ⟨H⟩ in units of J.
    pub energy: f64,
    /// |⟨ψ(0)|ψ(t)⟩|².
    pub fidelity0: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodEstimate {
    /// Recurrence time, or `t_max_over_t` when `lower_bound` is set.
    pub period_over_t: f64,
    pub lower_bound: bool,
    /// First time the fidelity climbed back over the threshold.
    pub crossing_over_t: Option<f64>,
    /// Fidelity at the reported period; for a lower bound, the best revival
    /// seen after the initial decay.
    pub peak_fidelity: f64,
    pub threshold: f64,
    pub t_max_over_t: f64,
}

pub fn record_sample(
    state: &StateVector,
    initial: &StateVector,
    h: &Hamiltonian,
    tracked: &[BasisLabel],
    step: u64,
    dt_over_t: f64,
    constants: &PhysicalConstants,
) -> Result<SampleRecord> {
    let n = state.n_qubits();
    let single = |site, axis| PauliTerm::new(1.0, [(site, axis)]);
    let m_z: Vec<f64> = (0..n).map(|k| state.expect_z(k)).collect();
    let m_x = (0..n)
        .map(|k| Ok(state.expect_pauli(&single(k, PauliAxis::X)?)))
        .collect::<Result<Vec<_>>>()?;
    let m_y = (0..n)
        .map(|k| Ok(state.expect_pauli(&single(k, PauliAxis::Y)?)))
        .collect::<Result<Vec<_>>>()?;
    let magnetization = m_z.iter().sum::<f64>();
    let energy = h
        .terms
        .iter()
        .map(|t| t.coeff() * state.expect_pauli(t))
        .sum();
    let amp_norms = tracked
        .iter()
        .map(|l| {
            if l.n_qubits() != n {
                return Err(Error::DimensionMismatch(l.n_qubits(), n));
            }
            Ok(state.amplitudes()[l.index()].norm())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleRecord {
        step,
        time_over_t: step as f64 * dt_over_t,
        amp_norms,
        m_z,
        m_x,
        m_y,
        magnetization,
        svinm_physical: magnetization * constants.svinm_unit,
        energy,
        fidelity0: fidelity(initial, state)?,
    })
}

/// First recurrence of a fidelity series sampled every `dt_over_t`,
/// starting at t = 0.
///
/// The series must first fall below `threshold`; the period is the first
/// later sample at or above it, pushed forward to the top of that local
/// peak. No crossing by `t_max_over_t` yields a lower bound.
pub fn estimate_period(
    series: &[f64],
    dt_over_t: f64,
    threshold: f64,
    t_max_over_t: f64,
) -> Result<PeriodEstimate> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if dt_over_t.is_nan() || dt_over_t <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "sample spacing must be positive, got {dt_over_t}"
        )));
    }
    let last = ((t_max_over_t / dt_over_t).round() as usize).min(series.len() - 1);
    let window = &series[..=last];
    let lower = |peak: f64| PeriodEstimate {
        period_over_t: t_max_over_t,
        lower_bound: true,
        crossing_over_t: None,
        peak_fidelity: peak,
        threshold,
        t_max_over_t,
    };
    let Some(left) = window.iter().position(|&f| f < threshold) else {
        return Ok(lower(f64::NAN));
    };
    let Some(cross) = window[left..]
        .iter()
        .position(|&f| f >= threshold)
        .map(|i| i + left)
    else {
        // Skip the initial decay so the departure itself is not a revival.
        let bottom = (left..window.len() - 1)
            .find(|&i| window[i + 1] >= window[i])
            .unwrap_or(window.len() - 1);
        let peak = window[bottom..].iter().copied().fold(0.0, f64::max);
        return Ok(lower(peak));
    };
    let mut top = cross;
    while top + 1 < series.len() && series[top + 1] >= series[top] {
        top += 1;
    }
    Ok(PeriodEstimate {
        period_over_t: top as f64 * dt_over_t,
        lower_bound: false,
        crossing_over_t: Some(cross as f64 * dt_over_t),
        peak_fidelity: series[top],
        threshold,
        t_max_over_t,
    })
}

fn sample_index(samples: &[SampleRecord], t: f64) -> Option<usize> {
    let pitch = match samples {
        [a, b, ..] => b.time_over_t - a.time_over_t,
        _ => return None,
    };
    let i = ((t - samples[0].time_over_t) / pitch).round();
    (i >= 0.0 && (i as usize) < samples.len()).then_some(i as usize)
}

/// max over tracked labels and τ of |√p(center − τ) − √p(center + τ)|.
pub fn check_amplitude_symmetry(samples: &[SampleRecord], center_over_t: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySeries);
    }
    let available = samples.last().map(|s| s.time_over_t).unwrap_or(0.0);
    let insufficient = || Error::InsufficientCoverage {
        needed: 2.0 * center_over_t,
        available,
    };
    let c = sample_index(samples, center_over_t).ok_or_else(insufficient)?;
    if 2 * c >= samples.len() {
        return Err(insufficient());
    }
    let mut worst = 0.0f64;
    for k in 0..=c {
        let (before, after) = (&samples[c - k], &samples[c + k]);
        for (a, b) in before.amp_norms.iter().zip(&after.amp_norms) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// For each class, the largest spread (max − min) of m_z within the class
/// over all samples.
pub fn check_class_degeneracy(
    samples: &[SampleRecord],
    site_labels: &[char],
    classes: &[Vec<char>],
) -> Result<Vec<f64>> {
    let indices = classes
        .iter()
        .map(|class| {
            class
                .iter()
                .map(|c| {
                    site_labels
                        .iter()
                        .position(|l| l == c)
                        .ok_or_else(|| Error::UnknownSiteLabel(c.to_string()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(indices
        .iter()
        .map(|idx| {
            samples
                .iter()
                .map(|s| {
                    let vals = idx.iter().map(|&i| s.m_z[i]);
                    let hi = vals.clone().fold(f64::NEG_INFINITY, f64::max);
                    let lo = vals.fold(f64::INFINITY, f64::min);
                    hi - lo
                })
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Time of the largest |magnetization| within `[0, window_over_t]`.
pub fn magnetization_peak_time(samples: &[SampleRecord], window_over_t: f64) -> Option<f64> {
    samples
        .iter()
        .filter(|s| s.time_over_t <= window_over_t + 1e-12)
        .max_by(|a, b| a.magnetization.abs().total_cmp(&b.magnetization.abs()))
        .map(|s| s.time_over_t)
}

/// Sampled run in tabular form, with the fixed CSV column layout:
/// `step, t_over_T, energy, magnetization, svinm_physical, fidelity0`,
/// then `mz_<site>`, `mx_<site>`, `my_<site>` per site, then `amp_<label>`
/// per tracked basis state.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleTable {
    pub site_labels: Vec<char>,
    pub tracked: Vec<BasisLabel>,
    pub samples: Vec<SampleRecord>,
}

const FIXED_COLUMNS: [&str; 6] = [
    "step",
    "t_over_T",
    "energy",
    "magnetization",
    "svinm_physical",
    "fidelity0",
];

impl SampleTable {
    pub fn header(&self) -> Vec<String> {
        let mut cols: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
        for prefix in ["mz", "mx", "my"] {
            cols.extend(self.site_labels.iter().map(|l| format!("{prefix}_{l}")));
        }
        cols.extend(self.tracked.iter().map(|l| format!("amp_{l}")));
        cols
    }

    /// Floats carry 17 significant digits so a re-parse is exact.
    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for s in &self.samples {
            write!(out, "{}", s.step).unwrap();
            let floats = [
                s.time_over_t,
                s.energy,
                s.magnetization,
                s.svinm_physical,
                s.fidelity0,
            ];
            let rest = s.m_z.iter().chain(&s.m_x).chain(&s.m_y).chain(&s.amp_norms);
            for v in floats.iter().chain(rest) {
                write!(out, ",{v:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or(Error::EmptySeries)?.split(',').collect();
        let bad = |msg: String| Error::InvalidConfig(format!("samples csv: {msg}"));
        if header.len() < FIXED_COLUMNS.len() || header[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
            return Err(bad("unexpected leading columns".into()));
        }
        let site_labels: Vec<char> = header
            .iter()
            .filter_map(|c| c.strip_prefix("mz_"))
            .map(|l| {
                l.chars()
                    .next()
                    .ok_or_else(|| bad(format!("column mz_{l}")))
            })
            .collect::<Result<_>>()?;
        let tracked: Vec<BasisLabel> = header
            .iter()
            .filter_map(|c| c.strip_prefix("amp_"))
            .map(str::parse)
            .collect::<Result<_>>()?;
        let n = site_labels.len();
        let expected = FIXED_COLUMNS.len() + 3 * n + tracked.len();
        if header.len() != expected {
            return Err(bad(format!(
                "{} columns, expected {expected}",
                header.len()
            )));
        }
        let mut samples = Vec::new();
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != expected {
                return Err(bad(format!("row {row} has {} fields", fields.len())));
            }
            let step = fields[0]
                .parse()
                .map_err(|_| bad(format!("row {row}: bad step `{}`", fields[0])))?;
            let vals = fields[1..]
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| bad(format!("row {row}: `{f}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            let per_site = |k: usize| vals[5 + k * n..5 + (k + 1) * n].to_vec();
            samples.push(SampleRecord {
                step,
                time_over_t: vals[0],
                energy: vals[1],
                magnetization: vals[2],
                svinm_physical: vals[3],
                fidelity0: vals[4],
                m_z: per_site(0),
                m_x: per_site(1),
                m_y: per_site(2),
                amp_norms: vals[5 + 3 * n..].to_vec(),
            });
        }
        Ok(Self {
            site_labels,
            tracked,
            samples,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_vortex_hamiltonian, build_xxz_hamiltonian};
    use crate::lattice::{build_system, SystemKind, SystemParams};
    use crate::statevector::init_basis_state;
    use std::f64::consts::PI;

    fn label(s: &str) -> BasisLabel {
        s.parse().unwrap()
    }

    fn synthetic(values: &[f64]) -> Vec<SampleRecord> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| SampleRecord {
                step: i as u64,
                time_over_t: i as f64 * 0.1,
                amp_norms: vec![v, 0.5],
                m_z: vec![v, v, -v],
                m_x: vec![0.0; 3],
                m_y: vec![0.0; 3],
                magnetization: v,
                svinm_physical: v * 3.5662e-3,
                energy: 0.0,
                fidelity0: v * v,
            })
            .collect()
    }

    #[test]
    fn melon_initial_record() {
        let spec = build_system(SystemKind::Melon, &SystemParams::default()).unwrap();
        let h = build_vortex_hamiltonian(&spec).unwrap();
        let l = label("10101010");
        let psi = init_basis_state(&l);
        let rec = record_sample(&psi, &psi, &h, &[l], 0, 1.0 / 300.0, &Default::default()).unwrap();
        assert_eq!(rec.m_z, vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
        assert_eq!(rec.energy, 0.0);
        assert_eq!(rec.magnetization, 0.0);
        assert_eq!(rec.fidelity0, 1.0);
        assert_eq!(rec.amp_norms, vec![1.0]);
        assert!(rec.m_x.iter().chain(&rec.m_y).all(|&m| m == 0.0));
    }

    #[test]
    fn xxz_energy_picks_up_diagonal() {
        let h = build_xxz_hamiltonian(4, 2.0).unwrap();
        let psi = init_basis_state(&label("0101"));
        let rec = record_sample(&psi, &psi, &h, &[], 0, 0.1, &Default::default()).unwrap();
        // Three antiparallel bonds, each Δ·(-1).
        assert_eq!(rec.energy, -6.0);
    }

    #[test]
    fn period_of_two_level_series() {
        let period = 4.0;
        let dt = 0.01;
        let series: Vec<f64> = (0..1000)
            .map(|i| (PI * i as f64 * dt / period).cos().powi(2))
            .collect();
        let est = estimate_period(&series, dt, 0.999, 9.0).unwrap();
        assert!(!est.lower_bound);
        assert!((est.period_over_t - period).abs() <= dt + 1e-12, "{est:?}");
        assert!(est.crossing_over_t.unwrap() <= est.period_over_t);
    }

    #[test]
    fn period_lower_bound() {
        let series: Vec<f64> = (0..100).map(|i| if i == 0 { 1.0 } else { 0.3 }).collect();
        let est = estimate_period(&series, 1.0, 0.9, 50.0).unwrap();
        assert!(est.lower_bound);
        assert_eq!(est.period_over_t, 50.0);
        assert_eq!(est.peak_fidelity, 0.3);
        let decay: Vec<f64> = [1.0, 0.95, 0.6, 0.2, 0.4, 0.7, 0.5].to_vec();
        let est = estimate_period(&decay, 1.0, 0.99, 6.0).unwrap();
        assert_eq!(est.peak_fidelity, 0.7);
        // A revival after t_max does not count.
        let mut late = series.clone();
        late[80] = 1.0;
        assert!(estimate_period(&late, 1.0, 0.9, 50.0).unwrap().lower_bound);
        assert!(!estimate_period(&late, 1.0, 0.9, 90.0).unwrap().lower_bound);
        assert!(matches!(
            estimate_period(&[], 1.0, 0.9, 1.0),
            Err(Error::EmptySeries)
        ));
        assert!(estimate_period(&series, 1.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn amplitude_symmetry() {
        let flat = synthetic(&[0.3; 41]);
        assert_eq!(check_amplitude_symmetry(&flat, 2.0).unwrap(), 0.0);

        let palindrome: Vec<f64> = (0..41).map(|i| ((i as f64 - 20.0) * 0.3).cos()).collect();
        assert_eq!(
            check_amplitude_symmetry(&synthetic(&palindrome), 2.0).unwrap(),
            0.0
        );

        let mut bumped = vec![0.3; 41];
        bumped[33] += 0.0625;
        let asym = check_amplitude_symmetry(&synthetic(&bumped), 2.0).unwrap();
        assert!((asym - 0.0625).abs() < 1e-15);

        assert!(matches!(
            check_amplitude_symmetry(&synthetic(&[0.3; 30]), 2.0),
            Err(Error::InsufficientCoverage { .. })
        ));
    }

    #[test]
    fn class_degeneracy() {
        let s = synthetic(&[0.2, -0.4, 0.9]);
        let labels = ['a', 'b', 'c'];
        let spreads =
            check_class_degeneracy(&s, &labels, &[vec!['a', 'b'], vec!['c'], vec!['a', 'c']])
                .unwrap();
        assert_eq!(spreads[0], 0.0);
        assert_eq!(spreads[1], 0.0);
        assert!((spreads[2] - 1.8).abs() < 1e-15);
        assert!(matches!(
            check_class_degeneracy(&s, &labels, &[vec!['z']]),
            Err(Error::UnknownSiteLabel(_))
        ));
    }

    #[test]
    fn peak_time() {
        let s = synthetic(&[0.0, 0.5, -0.9, 0.1, 2.0]);
        assert!((magnetization_peak_time(&s, 0.35).unwrap() - 0.2).abs() < 1e-12);
        assert!((magnetization_peak_time(&s, 1.0).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut samples = synthetic(&[0.1 + 0.2, 1.0 / 3.0, -2.0e-300, 7.0]);
        samples[1].m_x[2] = f64::MIN_POSITIVE;
        let table = SampleTable {
            site_labels: vec!['a', 'b', 'c'],
            tracked: vec![label("000"), label("101")],
            samples,
        };
        let csv = table.to_csv();
        assert!(csv.starts_with("step,t_over_T,energy,magnetization,svinm_physical,fidelity0,mz_a"));
        let back = SampleTable::from_csv(&csv).unwrap();
        assert_eq!(back, table);
        assert_eq!(back.to_csv(), csv);
    }
}
