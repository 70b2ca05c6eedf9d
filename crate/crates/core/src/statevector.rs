//! Dense complex statevector with in-place gate kernels.
//!
//! Bit `k` of a basis index is the z-state of site `k`: 0 for spin up, 1 for
//! spin down. Labels are written most-significant site first, so the
//! rightmost character of `"10101010"` is site `a`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::hamiltonian::PauliTerm;

pub const MAX_QUBITS: usize = 20;

const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel(String);

impl BasisLabel {
    pub fn from_index(index: usize, n: usize) -> Self {
        Self(
            (0..n)
                .rev()
                .map(|k| if index >> k & 1 == 1 { '1' } else { '0' })
                .collect(),
        )
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn index(&self) -> usize {
        self.0
            .bytes()
            .fold(0usize, |acc, b| (acc << 1) | usize::from(b == b'1'))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Every spin reversed.
    pub fn flipped(&self) -> Self {
        Self(
            self.0
                .chars()
                .map(|c| if c == '0' { '1' } else { '0' })
                .collect(),
        )
    }
}

impl FromStr for BasisLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > MAX_QUBITS || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::MalformedLabel(s.to_string()));
        }
        Ok(Self(s.to_string()))
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// All spins up.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                n: n_qubits,
                max: MAX_QUBITS,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                n: n_qubits,
                max: MAX_QUBITS,
            });
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch(self.n_qubits, other.n_qubits));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Index of the largest-magnitude amplitude (lowest index on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        let mut best_norm = -1.0;
        for (i, a) in self.amps.iter().enumerate() {
            let n = a.norm_sqr();
            if n > best_norm {
                best = i;
                best_norm = n;
            }
        }
        best
    }

    /// Multiply by the conjugate phase of the largest amplitude, making it
    /// real and positive.
    pub fn align_global_phase(&mut self) {
        let a = self.amps[self.argmax()];
        let mag = a.norm();
        if mag > 0.0 {
            let phase = a.conj() / mag;
            self.amps.iter_mut().for_each(|x| *x *= phase);
        }
    }

    /// Max entrywise deviation after aligning both global phases.
    pub fn max_diff_up_to_phase(&self, other: &StateVector) -> Result<f64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch(self.n_qubits, other.n_qubits));
        }
        let mut a = self.clone();
        let mut b = other.clone();
        // Align both on the same index so near-ties cannot pick different peaks.
        let k = a.argmax();
        for s in [&mut a, &mut b] {
            let x = s.amps[k];
            if x.norm() > 0.0 {
                let phase = x.conj() / x.norm();
                s.amps.iter_mut().for_each(|v| *v *= phase);
            }
        }
        Ok(a.max_diff(&b))
    }

    pub fn max_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.amps.iter().map(|a| a.norm_sqr())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        for q in gate.qubits() {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: q,
                    n: self.n_qubits,
                });
            }
        }
        match *gate {
            Gate::I(_) => {}
            Gate::H(q) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                self.apply_pairwise(q, |a, b| ((a + b) * s, (a - b) * s));
            }
            Gate::Rx { qubit, lambda } => {
                let (c, s) = ((lambda / 2.0).cos(), (lambda / 2.0).sin());
                let mis = Complex64::new(0.0, -s);
                self.apply_pairwise(qubit, |a, b| (a * c + b * mis, a * mis + b * c));
            }
            Gate::Rz { qubit, lambda } => {
                let lo = Complex64::from_polar(1.0, -lambda / 2.0);
                let hi = Complex64::from_polar(1.0, lambda / 2.0);
                self.apply_pairwise(qubit, |a, b| (a * lo, b * hi));
            }
            Gate::Cnot { control, target } => {
                if control == target {
                    return Err(Error::InvalidConfig(format!(
                        "CNOT control and target are both {control}"
                    )));
                }
                let (cbit, tbit) = (1usize << control, 1usize << target);
                for i in 0..self.amps.len() {
                    if i & cbit != 0 && i & tbit == 0 {
                        self.amps.swap(i, i | tbit);
                    }
                }
            }
        }
        Ok(())
    }

    /// Visit each amplitude pair differing only in `qubit` as (bit=0, bit=1).
    #[inline]
    fn apply_pairwise<F>(&mut self, qubit: usize, f: F)
    where
        F: Fn(Complex64, Complex64) -> (Complex64, Complex64),
    {
        let stride = 1usize << qubit;
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = f(*a, *b);
                *a = x;
                *b = y;
            }
        }
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() > self.n_qubits {
            return Err(Error::DimensionMismatch(circuit.n_qubits(), self.n_qubits));
        }
        for g in circuit.gates() {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    /// `exp(-i φ c P) = cos(φc) I - i sin(φc) P`, applied without a gate
    /// decomposition.
    pub fn apply_pauli_exponential_direct(&mut self, term: &PauliTerm, phi: f64) -> Result<()> {
        if term.max_site() >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: term.max_site(),
                n: self.n_qubits,
            });
        }
        let angle = phi * term.coeff();
        let (c, s) = (angle.cos(), angle.sin());
        let m = term.masks();
        // -i·sin·i^{#Y}; the remaining per-index factor is a parity sign.
        let k = Complex64::new(0.0, -s) * m.phase_on(0);
        let sign = |i: usize| {
            if (i & m.phase).count_ones() & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        };
        if m.flip == 0 {
            for (i, a) in self.amps.iter_mut().enumerate() {
                *a *= c + k * sign(i);
            }
            return Ok(());
        }
        // Pair (i, j = i ^ flip); P|i⟩ = ph(i)|j⟩ and P|j⟩ = ph(j)|i⟩.
        let top = 1usize << (usize::BITS - 1 - m.flip.leading_zeros());
        for block in (0..self.amps.len()).step_by(2 * top) {
            for i in block..block + top {
                let j = i ^ m.flip;
                let (ai, aj) = (self.amps[i], self.amps[j]);
                self.amps[i] = ai * c + k * (sign(j) * aj);
                self.amps[j] = aj * c + k * (sign(i) * ai);
            }
        }
        Ok(())
    }

    /// ⟨ψ|P|ψ⟩ for the bare string (the coefficient is ignored).
    pub fn expect_pauli(&self, term: &PauliTerm) -> f64 {
        let m = term.masks();
        self.amps
            .iter()
            .enumerate()
            .map(|(j, aj)| {
                let i = j ^ m.flip;
                (self.amps[i].conj() * m.phase_on(j) * aj).re
            })
            .sum()
    }

    /// ⟨Z_k⟩ = 1 - 2·P(bit k = 1), summed directly from probabilities.
    pub fn expect_z(&self, site: usize) -> f64 {
        let bit = 1usize << site;
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if i & bit == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum()
    }

    /// One row per basis state: label, Re, Im, |amp|.
    pub fn snapshot_csv(&self) -> String {
        let mut out = String::from("label,re,im,abs\n");
        for (i, a) in self.amps.iter().enumerate() {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                BasisLabel::from_index(i, self.n_qubits),
                a.re,
                a.im,
                a.norm()
            ));
        }
        out
    }
}

pub fn init_basis_state(label: &BasisLabel) -> StateVector {
    let n = label.n_qubits();
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    amps[label.index()] = Complex64::new(1.0, 0.0);
    StateVector { n_qubits: n, amps }
}

/// |⟨a|b⟩|².
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}
