//! Time propagation: repeated depth-1 Trotter circuits, plus an exact
//! propagator used as the reference.

use std::collections::HashSet;

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::compile_trotter_step_with_depth;
use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_hamiltonian, matrix_of, Hamiltonian, PhysicalConstants, MAX_DENSE_SITES, PHASE_PER_PERIOD,
};
use crate::lattice::{build_system, PointOp, SystemKind, SystemParams, SystemSpec};
use crate::observables::{
    estimate_period, record_sample, PeriodEstimate, SampleRecord, SampleTable,
};
use crate::statevector::{fidelity, init_basis_state, BasisLabel, StateVector};

pub const DEFAULT_THRESHOLD: f64 = 0.999;
pub const DEFAULT_AUTO_TRACK: usize = 8;

/// Above this many sites the exact propagator switches from a dense
/// eigendecomposition to Krylov steps.
pub const DENSE_EXACT_MAX_SITES: usize = 10;

const MAX_STEPS: f64 = 1e9;
/// Auto-tracking keeps |amp| snapshots; skip it beyond this many values.
const MAX_SNAPSHOT_VALUES: usize = 50_000_000;

/// Starting basis state for each system, most-significant site first.
pub fn default_initial_label(spec: &SystemSpec) -> BasisLabel {
    let text = match spec.kind {
        SystemKind::Melon => "10101010".to_string(),
        SystemKind::AntiMelon => "01010101".to_string(),
        // The reversal of the printed "0101010110101": read with `a` leftmost
        // it is the pattern that respects the reflection symmetry about f.
        SystemKind::Combined => "1010110101010".to_string(),
        SystemKind::Xxz => (0..spec.n_sites())
            .rev()
            .map(|k| if k % 2 == 1 { '1' } else { '0' })
            .collect(),
    };
    text.parse().expect("built-in labels are well formed")
}

/// Default time step in units of T: the paper's values for the vortex
/// systems, T/100 for the chain.
pub fn default_dt(kind: SystemKind) -> f64 {
    match kind {
        SystemKind::Combined => 1.0 / 10.0,
        SystemKind::Xxz => 1.0 / 100.0,
        _ => 1.0 / 300.0,
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub dt_over_t: f64,
    pub total_over_t: f64,
    /// Record every `sample_pitch` steps.
    pub sample_pitch: u64,
    /// Extra basis states to track on top of the built-in set.
    pub tracked: Vec<BasisLabel>,
    /// How many of the largest-norm states seen during the run to add.
    pub auto_track: usize,
    pub threshold: f64,
    /// Inner Trotter repetitions per step; 1 reproduces the paper.
    pub depth: usize,
    pub initial: Option<BasisLabel>,
    /// Takes precedence over `initial`; must be normalized.
    pub initial_state: Option<StateVector>,
    pub constants: PhysicalConstants,
}

impl RunConfig {
    pub fn new(system: SystemSpec) -> Self {
        let kind = system.kind;
        let (total, pitch) = match kind {
            SystemKind::Combined => (48.0, 2),
            SystemKind::Xxz => (400.0, 100),
            _ => (4.0, 20),
        };
        Self {
            system,
            dt_over_t: default_dt(kind),
            total_over_t: total,
            sample_pitch: pitch,
            tracked: Vec::new(),
            auto_track: DEFAULT_AUTO_TRACK,
            threshold: DEFAULT_THRESHOLD,
            depth: 1,
            initial: None,
            initial_state: None,
            constants: PhysicalConstants::default(),
        }
    }

    pub fn for_kind(kind: SystemKind, params: &SystemParams) -> Result<Self> {
        Ok(Self::new(build_system(kind, params)?))
    }

    pub fn n_steps(&self) -> Result<u64> {
        steps_for(self.total_over_t, self.dt_over_t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_over_t > 0.0 && self.dt_over_t.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt_over_t
            )));
        }
        if self.sample_pitch == 0 {
            return Err(Error::InvalidConfig("sample pitch must be ≥ 1".into()));
        }
        if self.depth == 0 {
            return Err(Error::InvalidConfig("Trotter depth must be ≥ 1".into()));
        }
        self.n_steps()?;
        Ok(())
    }

    pub fn initial_label(&self) -> BasisLabel {
        self.initial
            .clone()
            .unwrap_or_else(|| default_initial_label(&self.system))
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        let n = self.system.n_sites();
        let state = match &self.initial_state {
            Some(s) => {
                s.check_normalized()?;
                s.clone()
            }
            None => {
                let label = self.initial_label();
                if label.n_qubits() != n {
                    return Err(Error::MalformedLabel(format!(
                        "{label} has {} sites, system has {n}",
                        label.n_qubits()
                    )));
                }
                init_basis_state(&label)
            }
        };
        if state.n_qubits() != n {
            return Err(Error::DimensionMismatch(state.n_qubits(), n));
        }
        Ok(state)
    }

    /// Initial state, its spin flip, all-up and all-down, then any
    /// configured extras, without repeats.
    pub fn base_tracked(&self) -> Vec<BasisLabel> {
        let n = self.system.n_sites();
        let init = self.initial_label();
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let candidates = [
            init.clone(),
            init.flipped(),
            BasisLabel::from_index(0, n),
            BasisLabel::from_index((1 << n) - 1, n),
        ];
        for l in candidates.into_iter().chain(self.tracked.iter().cloned()) {
            if l.n_qubits() == n && seen.insert(l.clone()) {
                out.push(l);
            }
        }
        out
    }
}

fn steps_for(total: f64, dt: f64) -> Result<u64> {
    if !(total >= 0.0 && total.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "total time must be non-negative, got {total}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let steps = (total / dt).round();
    if steps > MAX_STEPS {
        return Err(Error::StepOverflow(steps));
    }
    if (steps * dt - total).abs() > 1e-9 * total.max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "total {total} is not a whole number of steps of {dt}"
        )));
    }
    Ok(steps as u64)
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub kind: SystemKind,
    pub site_labels: Vec<char>,
    pub tracked: Vec<BasisLabel>,
    pub samples: Vec<SampleRecord>,
    pub period: PeriodEstimate,
    pub final_state: StateVector,
}

impl RunResult {
    pub fn table(&self) -> SampleTable {
        SampleTable {
            site_labels: self.site_labels.clone(),
            tracked: self.tracked.clone(),
            samples: self.samples.clone(),
        }
    }

    pub fn fidelity_series(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.fidelity0).collect()
    }
}

/// Steps at which samples are taken: every `pitch` steps plus the last one.
fn sample_steps(n_steps: u64, pitch: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (0..=n_steps).step_by(pitch as usize).collect();
    if *v.last().unwrap() != n_steps {
        v.push(n_steps);
    }
    v
}

/// Shared sampling driver: `advance(state, from_step, to_step)` moves the
/// state forward; samples are recorded at every pitch boundary.
fn drive<F>(config: &RunConfig, h: &Hamiltonian, mut advance: F) -> Result<RunResult>
where
    F: FnMut(&mut StateVector, u64, u64) -> Result<()>,
{
    config.validate()?;
    let n_steps = config.n_steps()?;
    let initial = config.initial_state()?;
    let steps = sample_steps(n_steps, config.sample_pitch);
    let n = config.system.n_sites();
    let keep_snapshots =
        config.auto_track > 0 && steps.len().saturating_mul(1 << n) <= MAX_SNAPSHOT_VALUES;
    if config.auto_track > 0 && !keep_snapshots {
        warn!("too many samples to auto-track amplitudes; tracking the fixed set only");
    }

    let base = config.base_tracked();
    let mut state = initial.clone();
    let mut samples = Vec::with_capacity(steps.len());
    let mut snapshots: Vec<Vec<f64>> = Vec::new();
    let mut at = 0;
    for &s in &steps {
        advance(&mut state, at, s)?;
        at = s;
        samples.push(record_sample(
            &state,
            &initial,
            h,
            &base,
            s,
            config.dt_over_t,
            &config.constants,
        )?);
        if keep_snapshots {
            snapshots.push(state.amplitudes().iter().map(|a| a.norm()).collect());
        }
    }

    let mut tracked = base;
    if keep_snapshots {
        let extra = largest_states(&snapshots, &tracked, config.auto_track, n);
        for label in &extra {
            let idx = label.index();
            for (rec, snap) in samples.iter_mut().zip(&snapshots) {
                rec.amp_norms.push(snap[idx]);
            }
        }
        tracked.extend(extra);
    }

    let pitch_t = config.sample_pitch as f64 * config.dt_over_t;
    let fids: Vec<f64> = samples.iter().map(|s| s.fidelity0).collect();
    // A trailing partial-pitch sample would break the uniform spacing.
    let uniform = if n_steps % config.sample_pitch == 0 {
        &fids[..]
    } else {
        &fids[..fids.len() - 1]
    };
    let period = estimate_period(uniform, pitch_t, config.threshold, config.total_over_t)?;
    Ok(RunResult {
        kind: config.system.kind,
        site_labels: config.system.labels(),
        tracked,
        samples,
        period,
        final_state: state,
    })
}

/// `k` basis states with the largest peak |amplitude| over the run, ties
/// broken by index, excluding those already tracked.
fn largest_states(
    snapshots: &[Vec<f64>],
    exclude: &[BasisLabel],
    k: usize,
    n: usize,
) -> Vec<BasisLabel> {
    let dim = 1usize << n;
    let skip: HashSet<usize> = exclude.iter().map(BasisLabel::index).collect();
    let mut peak = vec![0.0f64; dim];
    for snap in snapshots {
        for (p, v) in peak.iter_mut().zip(snap) {
            *p = p.max(*v);
        }
    }
    let mut order: Vec<usize> = (0..dim)
        .filter(|i| !skip.contains(i) && peak[*i] > 0.0)
        .collect();
    order.sort_by(|&a, &b| peak[b].total_cmp(&peak[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(k)
        .map(|i| BasisLabel::from_index(i, n))
        .collect()
}

/// Replays the compiled depth-1 Trotter circuit step by step.
pub fn run_trotter(config: &RunConfig) -> Result<RunResult> {
    let h = build_hamiltonian(&config.system)?;
    config.validate()?;
    let step = compile_trotter_step_with_depth(&h, config.dt_over_t, config.depth)?;
    drive(config, &h, |state, from, to| {
        for _ in from..to {
            state.apply_circuit(&step)?;
        }
        Ok(())
    })
}

/// Same product formula as [`run_trotter`], applied term by term without
/// the gate decomposition.
pub fn run_trotter_direct(config: &RunConfig) -> Result<RunResult> {
    let h = build_hamiltonian(&config.system)?;
    let phi = PHASE_PER_PERIOD * config.dt_over_t / config.depth as f64;
    let depth = config.depth;
    drive(config, &h, |state, from, to| {
        for _ in from..to {
            for _ in 0..depth {
                for term in &h.terms {
                    state.apply_pauli_exponential_direct(term, phi)?;
                }
            }
        }
        Ok(())
    })
}

/// Samples at the same times as [`run_trotter`] using `e^{-iHt}` exactly.
pub fn run_exact(config: &RunConfig) -> Result<RunResult> {
    let h = build_hamiltonian(&config.system)?;
    let n = config.system.n_sites();
    if n > MAX_DENSE_SITES {
        return Err(Error::TooManyQubits {
            n,
            max: MAX_DENSE_SITES,
        });
    }
    let mut prop = ExactPropagator::new(&h)?;
    let initial = config.initial_state()?;
    let dt = config.dt_over_t;
    drive(config, &h, |state, _from, to| {
        if to > 0 {
            *state = prop.evolve_from(&initial, to as f64 * dt)?;
        }
        Ok(())
    })
}

/// Largest amplitude deviation between the Trotter and exact states,
/// compared every `compare_pitch` steps and at the end.
pub fn max_trotter_error(config: &RunConfig, compare_pitch: u64) -> Result<f64> {
    config.validate()?;
    if compare_pitch == 0 {
        return Err(Error::InvalidConfig("comparison pitch must be ≥ 1".into()));
    }
    let h = build_hamiltonian(&config.system)?;
    let step = compile_trotter_step_with_depth(&h, config.dt_over_t, config.depth)?;
    let mut exact = ExactPropagator::new(&h)?;
    let initial = config.initial_state()?;
    let n_steps = config.n_steps()?;
    let mut state = initial.clone();
    let mut worst = 0.0f64;
    for k in 1..=n_steps {
        state.apply_circuit(&step)?;
        if k % compare_pitch == 0 || k == n_steps {
            let reference = exact.evolve_from(&initial, k as f64 * config.dt_over_t)?;
            worst = worst.max(state.max_diff(&reference));
        }
    }
    Ok(worst)
}

/// Feeds each step's output state back in as the next input, evaluating
/// the return fidelity after every step up to `t_max_over_t`.
pub fn semiclassical_period_scan(config: &RunConfig, t_max_over_t: f64) -> Result<PeriodEstimate> {
    config.validate()?;
    let h = build_hamiltonian(&config.system)?;
    let step = compile_trotter_step_with_depth(&h, config.dt_over_t, config.depth)?;
    let n_steps = steps_for(t_max_over_t, config.dt_over_t)?;
    let initial = config.initial_state()?;
    let mut state = initial.clone();
    let mut series = Vec::with_capacity(n_steps as usize + 1);
    series.push(1.0);
    for _ in 0..n_steps {
        state.apply_circuit(&step)?;
        series.push(fidelity(&initial, &state)?);
    }
    estimate_period(&series, config.dt_over_t, config.threshold, t_max_over_t)
}

/// `e^{-i·PHASE_PER_PERIOD·t·H}` by dense eigendecomposition for small
/// systems and by Lanczos (Krylov) steps above [`DENSE_EXACT_MAX_SITES`].
pub enum ExactPropagator<'h> {
    Dense {
        vectors: DMatrix<Complex64>,
        values: Vec<f64>,
    },
    Krylov {
        h: &'h Hamiltonian,
        /// Last state and time reached, reused when evolving forward.
        cache: Option<(StateVector, f64, StateVector)>,
    },
}

impl<'h> ExactPropagator<'h> {
    pub fn new(h: &'h Hamiltonian) -> Result<Self> {
        if h.n_sites <= DENSE_EXACT_MAX_SITES {
            let (vectors, values) = dense_eigen(h)?;
            Ok(Self::Dense { vectors, values })
        } else {
            Ok(Self::Krylov { h, cache: None })
        }
    }

    pub fn dense(h: &'h Hamiltonian) -> Result<Self> {
        let (vectors, values) = dense_eigen(h)?;
        Ok(Self::Dense { vectors, values })
    }

    pub fn krylov(h: &'h Hamiltonian) -> Self {
        Self::Krylov { h, cache: None }
    }

    /// State at time `t_over_t` starting from `initial` at t = 0.
    pub fn evolve_from(&mut self, initial: &StateVector, t_over_t: f64) -> Result<StateVector> {
        let theta = PHASE_PER_PERIOD * t_over_t;
        match self {
            Self::Dense { vectors, values } => {
                let psi = nalgebra::DVector::from_column_slice(initial.amplitudes());
                let mut coeffs = vectors.adjoint() * psi;
                for (c, &e) in coeffs.iter_mut().zip(values.iter()) {
                    *c *= Complex64::from_polar(1.0, -e * theta);
                }
                StateVector::from_amplitudes((vectors.clone() * coeffs).as_slice().to_vec())
            }
            Self::Krylov { h, cache } => {
                let (mut state, from) = match cache {
                    Some((init, t0, s)) if init == initial && *t0 <= t_over_t => (s.clone(), *t0),
                    _ => (initial.clone(), 0.0),
                };
                let dtheta = PHASE_PER_PERIOD * (t_over_t - from);
                if dtheta > 0.0 {
                    krylov_propagate(h, &mut state, dtheta)?;
                }
                *cache = Some((initial.clone(), t_over_t, state.clone()));
                Ok(state)
            }
        }
    }
}

fn dense_eigen(h: &Hamiltonian) -> Result<(DMatrix<Complex64>, Vec<f64>)> {
    let m = matrix_of(h)?;
    if m.iter().all(|z| z.im == 0.0) {
        let real = m.map(|z| z.re);
        let eig = SymmetricEigen::try_new(real, 1e-14, 0).ok_or(Error::Eigen)?;
        let vectors = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
        Ok((vectors, eig.eigenvalues.iter().copied().collect()))
    } else {
        let eig = SymmetricEigen::try_new(m, 1e-14, 0).ok_or(Error::Eigen)?;
        Ok((eig.eigenvectors, eig.eigenvalues.iter().copied().collect()))
    }
}

const KRYLOV_MAX_DIM: usize = 48;
const KRYLOV_TOL: f64 = 1e-13;

/// ψ ← e^{-iθH} ψ using Lanczos with full reorthogonalization, splitting θ
/// until each piece converges to [`KRYLOV_TOL`].
fn krylov_propagate(h: &Hamiltonian, state: &mut StateVector, theta: f64) -> Result<()> {
    let bound = h.norm_bound().max(1e-300);
    let mut pieces = (theta * bound / 8.0).ceil().max(1.0) as usize;
    loop {
        let mut trial = state.clone();
        let sub = theta / pieces as f64;
        let ok = (0..pieces).try_fold((), |_, _| {
            if krylov_step(h, trial.amplitudes_mut(), sub) {
                Some(())
            } else {
                None
            }
        });
        if ok.is_some() {
            *state = trial;
            return Ok(());
        }
        pieces *= 2;
        if pieces > 1 << 20 {
            return Err(Error::Eigen);
        }
    }
}

fn krylov_step(h: &Hamiltonian, psi: &mut [Complex64], theta: f64) -> bool {
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return true;
    }
    let dim = psi.len();
    let mut basis: Vec<Vec<Complex64>> = vec![psi.iter().map(|a| a / norm).collect()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    for j in 0..KRYLOV_MAX_DIM {
        h.apply(&basis[j], &mut w);
        for v in &basis {
            let overlap: Complex64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            w.iter_mut().zip(v).for_each(|(x, a)| *x -= overlap * a);
            if std::ptr::eq(v, &basis[j]) {
                alpha.push(overlap.re);
            }
        }
        // Second pass keeps the basis orthogonal to working precision.
        for v in &basis {
            let overlap: Complex64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            w.iter_mut().zip(v).for_each(|(x, a)| *x -= overlap * a);
        }
        let b = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let m = j + 1;
        let coeffs = tridiagonal_exp_e1(&alpha, &beta, theta);
        let err = b * coeffs[m - 1].norm();
        if err < KRYLOV_TOL || b < 1e-14 {
            psi.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            for (c, v) in coeffs.iter().zip(&basis) {
                psi.iter_mut().zip(v).for_each(|(x, a)| *x += c * a * norm);
            }
            return true;
        }
        beta.push(b);
        basis.push(w.iter().map(|a| a / b).collect());
    }
    false
}

/// e^{-iθT} e₁ for the symmetric tridiagonal T = tridiag(beta, alpha, beta).
fn tridiagonal_exp_e1(alpha: &[f64], beta: &[f64], theta: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let q = eig.eigenvectors[(r, k)] * eig.eigenvectors[(0, k)];
                    Complex64::from_polar(q, -eig.eigenvalues[k] * theta)
                })
                .sum()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutScore {
    pub op: PointOp,
    pub chi: f64,
    /// Return fidelity at the target time.
    pub fidelity: f64,
}

/// Scores every relabeling of a single-vortex plaquette by the point group
/// (about the hole) combined with each global phase in `chis`, by the
/// depth-1 Trotter return fidelity at `target_over_t`.
pub fn sweep_vortex_layouts(
    kind: SystemKind,
    chis: &[f64],
    dt_over_t: f64,
    target_over_t: f64,
) -> Result<Vec<LayoutScore>> {
    if !matches!(kind, SystemKind::Melon | SystemKind::AntiMelon) {
        return Err(Error::UnsupportedKind(kind.to_string()));
    }
    let candidates: Vec<(PointOp, f64)> = PointOp::ALL
        .iter()
        .flat_map(|&op| chis.iter().map(move |&chi| (op, chi)))
        .collect();
    candidates
        .par_iter()
        .map(|&(op, chi)| {
            let base = build_system(
                kind,
                &SystemParams {
                    chi: Some(chi),
                    ..Default::default()
                },
            )?;
            let hole2 = [2 * base.holes[0].pos[0], 2 * base.holes[0].pos[1]];
            let spec = base.transformed(op, hole2)?;
            let mut cfg = RunConfig::new(spec);
            cfg.dt_over_t = dt_over_t;
            cfg.total_over_t = target_over_t;
            cfg.sample_pitch = cfg.n_steps()?.max(1);
            cfg.auto_track = 0;
            let run = run_trotter_direct(&cfg)?;
            Ok(LayoutScore {
                op,
                chi,
                fidelity: run.samples.last().map(|s| s.fidelity0).unwrap_or(0.0),
            })
        })
        .collect()
}

/// Highest-scoring layout; earlier entries win ties within 1e-9.
pub fn best_layout(scores: &[LayoutScore]) -> Option<&LayoutScore> {
    scores
        .iter()
        .fold(None, |best: Option<&LayoutScore>, s| match best {
            Some(b) if b.fidelity + 1e-9 >= s.fidelity => Some(b),
            _ => Some(s),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{PauliAxis, PauliTerm};

    fn melon_cfg() -> RunConfig {
        RunConfig::for_kind(SystemKind::Melon, &SystemParams::default()).unwrap()
    }

    #[test]
    fn default_initial_states() {
        let cfg = melon_cfg();
        assert_eq!(cfg.initial_label().as_str(), "10101010");
        let anti = RunConfig::for_kind(SystemKind::AntiMelon, &SystemParams::default()).unwrap();
        assert_eq!(anti.initial_label().as_str(), "01010101");
        let xxz = RunConfig::for_kind(
            SystemKind::Xxz,
            &SystemParams {
                n: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(xxz.initial_label().as_str(), "01010");
    }

    #[test]
    fn combined_initial_state_is_reflection_symmetric() {
        let cfg = RunConfig::for_kind(SystemKind::Combined, &SystemParams::default()).unwrap();
        let psi = cfg.initial_state().unwrap();
        let classes = crate::lattice::site_equivalence_classes(&cfg.system).unwrap();
        for class in classes {
            let vals: Vec<f64> = class
                .iter()
                .map(|&c| psi.expect_z(cfg.system.index_of(c).unwrap()))
                .collect();
            assert!(vals.windows(2).all(|w| w[0] == w[1]), "{class:?}: {vals:?}");
        }
    }

    #[test]
    fn sample_counts() {
        let mut cfg = melon_cfg();
        cfg.auto_track = 0;
        assert_eq!(cfg.n_steps().unwrap(), 1200);
        assert_eq!(sample_steps(1200, 20).len(), 61);
        assert_eq!(sample_steps(10, 3), vec![0, 3, 6, 9, 10]);
        cfg.total_over_t = 0.0;
        let run = run_trotter(&cfg).unwrap();
        assert_eq!(run.samples.len(), 1);
        assert_eq!(run.samples[0].step, 0);
        assert_eq!(run.samples[0].fidelity0, 1.0);
    }

    #[test]
    fn config_errors() {
        let mut cfg = melon_cfg();
        cfg.total_over_t = 1.0 / 700.0;
        assert!(matches!(run_trotter(&cfg), Err(Error::InvalidConfig(_))));
        cfg.total_over_t = 1e12;
        assert!(matches!(run_trotter(&cfg), Err(Error::StepOverflow(_))));
        let mut cfg = melon_cfg();
        cfg.sample_pitch = 0;
        assert!(run_trotter(&cfg).is_err());
        let mut cfg = melon_cfg();
        let mut bad = StateVector::zero(8).unwrap();
        bad.amplitudes_mut()[1] = Complex64::new(1.0, 0.0);
        cfg.initial_state = Some(bad);
        assert!(matches!(run_trotter(&cfg), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn exact_two_site_xx_closed_form() {
        // H = X0X1 + Y0Y1 swaps |01⟩ and |10⟩: amplitude cos(2θ), -i sin(2θ).
        let mut cfg = RunConfig::for_kind(
            SystemKind::Xxz,
            &SystemParams {
                n: 2,
                ..Default::default()
            },
        )
        .unwrap();
        cfg.initial = Some("01".parse().unwrap());
        cfg.dt_over_t = 0.01;
        cfg.total_over_t = 1.0;
        cfg.sample_pitch = 5;
        let run = run_exact(&cfg).unwrap();
        for s in &run.samples {
            let theta = PHASE_PER_PERIOD * s.time_over_t;
            let expected = (2.0 * theta).cos().powi(2);
            assert!((s.fidelity0 - expected).abs() < 1e-10);
            assert!((s.m_z[0] - (-(4.0 * theta).cos())).abs() < 1e-10);
        }
    }

    #[test]
    fn krylov_matches_dense() {
        let cfg = melon_cfg();
        let h = build_hamiltonian(&cfg.system).unwrap();
        let psi0 = cfg.initial_state().unwrap();
        let mut dense = ExactPropagator::dense(&h).unwrap();
        let mut krylov = ExactPropagator::krylov(&h);
        for t in [0.0, 0.37, 1.0, 2.5, 4.0] {
            let a = dense.evolve_from(&psi0, t).unwrap();
            let b = krylov.evolve_from(&psi0, t).unwrap();
            assert!(a.max_diff(&b) < 1e-10, "t = {t}: {}", a.max_diff(&b));
        }
    }

    #[test]
    fn exact_and_trotter_share_first_sample() {
        let mut cfg = melon_cfg();
        cfg.total_over_t = 0.2;
        cfg.auto_track = 2;
        let a = run_trotter(&cfg).unwrap();
        let b = run_exact(&cfg).unwrap();
        assert_eq!(a.samples[0], b.samples[0]);
    }

    #[test]
    fn direct_and_circuit_trotter_agree() {
        let mut cfg = melon_cfg();
        cfg.total_over_t = 0.5;
        cfg.auto_track = 0;
        let a = run_trotter(&cfg).unwrap();
        let b = run_trotter_direct(&cfg).unwrap();
        assert!(a.final_state.max_diff(&b.final_state) < 1e-12);
    }

    #[test]
    fn auto_tracking_adds_distinct_states() {
        let mut cfg = melon_cfg();
        cfg.total_over_t = 1.0;
        cfg.auto_track = 5;
        let run = run_trotter(&cfg).unwrap();
        assert_eq!(run.tracked.len(), 4 + 5);
        let unique: HashSet<_> = run.tracked.iter().collect();
        assert_eq!(unique.len(), run.tracked.len());
        assert!(run
            .samples
            .iter()
            .all(|s| s.amp_norms.len() == run.tracked.len()));
    }

    #[test]
    fn depth_one_matches_explicit_product() {
        let h = Hamiltonian::new(
            2,
            vec![
                PauliTerm::new(0.8, [(0, PauliAxis::X), (1, PauliAxis::X)]).unwrap(),
                PauliTerm::new(-0.3, [(0, PauliAxis::Y), (1, PauliAxis::Y)]).unwrap(),
            ],
        )
        .unwrap();
        let step = compile_trotter_step_with_depth(&h, 0.05, 1).unwrap();
        let mut a = init_basis_state(&"01".parse().unwrap());
        let mut b = a.clone();
        a.apply_circuit(&step).unwrap();
        for t in &h.terms {
            b.apply_pauli_exponential_direct(t, PHASE_PER_PERIOD * 0.05)
                .unwrap();
        }
        assert!(a.max_diff(&b) < 1e-14);
    }

    #[test]
    fn best_layout_prefers_first_on_ties() {
        let s = |chi, fidelity| LayoutScore {
            op: PointOp::Identity,
            chi,
            fidelity,
        };
        let scores = vec![s(0.0, 0.2), s(0.1, 0.5), s(0.2, 0.5), s(0.3, 0.1)];
        assert_eq!(best_layout(&scores).unwrap().chi, 0.1);
        assert!(best_layout(&[]).is_none());
    }
}
