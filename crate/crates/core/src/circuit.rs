//! Gate-level compilation of Pauli-string exponentials and Trotter steps.
//!
//! `exp(-i φ c P)` becomes: a basis change `G_j` on every support qubit, a
//! CNOT ladder that folds the joint parity onto the last support qubit,
//! `RZ(2φc)` there, then the ladder and basis change undone. Qubits outside
//! the support are skipped by the ladder. The result is exact, with no
//! global phase left over, under `RZ(λ) = diag(e^{-iλ/2}, e^{iλ/2})`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, PauliAxis, PauliTerm, PHASE_PER_PERIOD};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    Rx { qubit: usize, lambda: f64 },
    Rz { qubit: usize, lambda: f64 },
    Cnot { control: usize, target: usize },
    I(usize),
}

impl Gate {
    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            Gate::H(q) | Gate::I(q) => (q, None),
            Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } => (qubit, None),
            Gate::Cnot { control, target } => (control, Some(target)),
        };
        std::iter::once(a).chain(b)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Gate::I(_))
    }

    fn on(self, q: usize) -> Gate {
        match self {
            Gate::H(_) => Gate::H(q),
            Gate::I(_) => Gate::I(q),
            Gate::Rx { lambda, .. } => Gate::Rx { qubit: q, lambda },
            Gate::Rz { lambda, .. } => Gate::Rz { qubit: q, lambda },
            Gate::Cnot { .. } => self,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        for q in gate.qubits() {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: q,
                    n: self.n_qubits,
                });
            }
        }
        if let Gate::Cnot { control, target } = gate {
            if control == target {
                return Err(Error::InvalidConfig(format!(
                    "CNOT control and target are both {control}"
                )));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits > self.n_qubits {
            return Err(Error::DimensionMismatch(other.n_qubits, self.n_qubits));
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    pub fn to_dump(&self) -> CircuitDump {
        CircuitDump {
            n: self.n_qubits,
            gates: self.gates.iter().map(GateRecord::from).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_dump())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: CircuitDump = serde_json::from_str(text)?;
        let mut c = Circuit::new(dump.n);
        for g in dump.gates {
            c.push(g.try_into()?)?;
        }
        Ok(c)
    }
}

/// `{"n": 2, "gates": [{"g": "H", "q": [0]}, {"g": "RZ", "q": [1], "lambda": 0.1}]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitDump {
    pub n: usize,
    pub gates: Vec<GateRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub g: String,
    pub q: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
}

impl From<&Gate> for GateRecord {
    fn from(g: &Gate) -> Self {
        let (name, lambda) = match *g {
            Gate::H(_) => ("H", None),
            Gate::I(_) => ("I", None),
            Gate::Rx { lambda, .. } => ("RX", Some(lambda)),
            Gate::Rz { lambda, .. } => ("RZ", Some(lambda)),
            Gate::Cnot { .. } => ("CNOT", None),
        };
        GateRecord {
            g: name.to_string(),
            q: g.qubits().collect(),
            lambda,
        }
    }
}

impl TryFrom<GateRecord> for Gate {
    type Error = Error;

    fn try_from(r: GateRecord) -> Result<Gate> {
        let bad = || Error::InvalidConfig(format!("malformed gate record {r:?}"));
        let lambda = || r.lambda.ok_or_else(bad);
        match (r.g.as_str(), r.q.as_slice()) {
            ("H", &[q]) => Ok(Gate::H(q)),
            ("I", &[q]) => Ok(Gate::I(q)),
            ("RX", &[q]) => Ok(Gate::Rx {
                qubit: q,
                lambda: lambda()?,
            }),
            ("RZ", &[q]) => Ok(Gate::Rz {
                qubit: q,
                lambda: lambda()?,
            }),
            ("CNOT", &[control, target]) => Ok(Gate::Cnot { control, target }),
            _ => Err(bad()),
        }
    }
}

/// `(G_j, G_j†)` rotating the given axis onto Z. The qubit index is left at
/// 0; callers retarget the gate.
pub fn basis_change_gate(axis: PauliAxis) -> (Gate, Gate) {
    match axis {
        PauliAxis::X => (Gate::H(0), Gate::H(0)),
        PauliAxis::Y => (
            Gate::Rx {
                qubit: 0,
                lambda: FRAC_PI_2,
            },
            Gate::Rx {
                qubit: 0,
                lambda: -FRAC_PI_2,
            },
        ),
        PauliAxis::Z => (Gate::I(0), Gate::I(0)),
    }
}

/// Number of gates [`compile_pauli_exponential`] emits for a support of
/// size `k`: `2k` basis changes, `2(k-1)` CNOTs and one RZ.
pub fn gate_count(k: usize) -> usize {
    2 * k + 2 * k.saturating_sub(1) + 1
}

pub fn compile_pauli_exponential(term: &PauliTerm, phi: f64, n_qubits: usize) -> Result<Circuit> {
    if !phi.is_finite() {
        return Err(Error::InvalidTerm(format!("phase {phi} is not finite")));
    }
    let mut c = Circuit::new(n_qubits);
    let support: Vec<usize> = term.support().collect();
    for &(q, axis) in term.factors() {
        c.push(basis_change_gate(axis).0.on(q))?;
    }
    for w in support.windows(2) {
        c.push(Gate::Cnot {
            control: w[0],
            target: w[1],
        })?;
    }
    let last = *support.last().expect("terms are non-empty");
    c.push(Gate::Rz {
        qubit: last,
        lambda: 2.0 * phi * term.coeff(),
    })?;
    for w in support.windows(2).rev() {
        c.push(Gate::Cnot {
            control: w[0],
            target: w[1],
        })?;
    }
    for &(q, axis) in term.factors().iter().rev() {
        c.push(basis_change_gate(axis).1.on(q))?;
    }
    Ok(c)
}

/// One depth-1 step: the product of single-term exponentials in
/// Hamiltonian order, each at phase `PHASE_PER_PERIOD · dt_over_t`.
pub fn compile_trotter_step(h: &Hamiltonian, dt_over_t: f64) -> Result<Circuit> {
    compile_trotter_step_with_depth(h, dt_over_t, 1)
}

/// `depth` repetitions of the product at `dt / depth` each.
pub fn compile_trotter_step_with_depth(
    h: &Hamiltonian,
    dt_over_t: f64,
    depth: usize,
) -> Result<Circuit> {
    if !(dt_over_t > 0.0 && dt_over_t.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "time step must be positive, got {dt_over_t}"
        )));
    }
    if depth == 0 {
        return Err(Error::InvalidConfig("Trotter depth must be ≥ 1".into()));
    }
    let phi = PHASE_PER_PERIOD * dt_over_t / depth as f64;
    let mut step = Circuit::new(h.n_sites);
    for term in &h.terms {
        step.extend(&compile_pauli_exponential(term, phi, h.n_sites)?)?;
    }
    let mut out = Circuit::new(h.n_sites);
    for _ in 0..depth {
        out.extend(&step)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_vortex_hamiltonian;
    use crate::lattice::{build_system, SystemKind, SystemParams};

    fn term(coeff: f64, f: &[(usize, PauliAxis)]) -> PauliTerm {
        PauliTerm::new(coeff, f.iter().copied()).unwrap()
    }

    #[test]
    fn basis_changes() {
        assert_eq!(basis_change_gate(PauliAxis::X), (Gate::H(0), Gate::H(0)));
        assert_eq!(
            basis_change_gate(PauliAxis::Y),
            (
                Gate::Rx {
                    qubit: 0,
                    lambda: FRAC_PI_2
                },
                Gate::Rx {
                    qubit: 0,
                    lambda: -FRAC_PI_2
                }
            )
        );
        assert_eq!(basis_change_gate(PauliAxis::Z), (Gate::I(0), Gate::I(0)));
    }

    #[test]
    fn single_z_is_one_rotation() {
        let c = compile_pauli_exponential(&term(1.0, &[(0, PauliAxis::Z)]), 0.3, 1).unwrap();
        let active: Vec<_> = c.gates().iter().filter(|g| !g.is_identity()).collect();
        assert_eq!(
            active,
            vec![&Gate::Rz {
                qubit: 0,
                lambda: 0.6
            }]
        );
        assert_eq!(c.len(), gate_count(1));
    }

    #[test]
    fn xy_pattern() {
        let phi = 0.25;
        let c =
            compile_pauli_exponential(&term(1.0, &[(0, PauliAxis::X), (1, PauliAxis::Y)]), phi, 2)
                .unwrap();
        let expected = vec![
            Gate::H(0),
            Gate::Rx {
                qubit: 1,
                lambda: FRAC_PI_2,
            },
            Gate::Cnot {
                control: 0,
                target: 1,
            },
            Gate::Rz {
                qubit: 1,
                lambda: 2.0 * phi,
            },
            Gate::Cnot {
                control: 0,
                target: 1,
            },
            Gate::Rx {
                qubit: 1,
                lambda: -FRAC_PI_2,
            },
            Gate::H(0),
        ];
        assert_eq!(c.gates(), expected.as_slice());
    }

    #[test]
    fn ladder_skips_absent_qubits() {
        let c = compile_pauli_exponential(
            &term(
                1.0,
                &[(0, PauliAxis::X), (2, PauliAxis::Y), (3, PauliAxis::Z)],
            ),
            0.1,
            4,
        )
        .unwrap();
        let cnots: Vec<_> = c
            .gates()
            .iter()
            .filter_map(|g| match g {
                Gate::Cnot { control, target } => Some((*control, *target)),
                _ => None,
            })
            .collect();
        assert_eq!(cnots, vec![(0, 2), (2, 3), (2, 3), (0, 2)]);
        assert!(c.gates().iter().all(|g| g.qubits().all(|q| q != 1)));
        assert_eq!(c.len(), gate_count(3));
    }

    #[test]
    fn trotter_step_composition() {
        let empty = Hamiltonian::new(3, Vec::new()).unwrap();
        assert!(compile_trotter_step(&empty, 0.1).unwrap().is_empty());

        let t = term(0.7, &[(0, PauliAxis::X), (2, PauliAxis::X)]);
        let h = Hamiltonian::new(3, vec![t.clone()]).unwrap();
        let dt = 1.0 / 300.0;
        assert_eq!(
            compile_trotter_step(&h, dt).unwrap(),
            compile_pauli_exponential(&t, PHASE_PER_PERIOD * dt, 3).unwrap()
        );
        assert!(compile_trotter_step(&h, 0.0).is_err());
        assert!(compile_trotter_step_with_depth(&h, dt, 0).is_err());
        assert_eq!(
            compile_trotter_step_with_depth(&h, dt, 3).unwrap().len(),
            3 * gate_count(2)
        );
    }

    #[test]
    fn melon_step_gate_count() {
        let spec = build_system(SystemKind::Melon, &SystemParams::default()).unwrap();
        let h = build_vortex_hamiltonian(&spec).unwrap();
        let c = compile_trotter_step(&h, 1.0 / 300.0).unwrap();
        let expected: usize = h
            .terms
            .iter()
            .map(|t| {
                let k = t.factors().len();
                2 * k + 2 * (k - 1) + 1
            })
            .sum();
        assert_eq!(c.len(), expected);
    }

    #[test]
    fn push_validates() {
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::H(2)).is_err());
        assert!(c
            .push(Gate::Cnot {
                control: 1,
                target: 1
            })
            .is_err());
    }

    #[test]
    fn dump_round_trip() {
        let c = compile_pauli_exponential(
            &term(
                -0.5,
                &[(0, PauliAxis::X), (1, PauliAxis::Y), (3, PauliAxis::Z)],
            ),
            0.123,
            4,
        )
        .unwrap();
        let text = c.to_json().unwrap();
        assert!(text.contains("\"g\": \"CNOT\""));
        assert!(!text.contains("\"lambda\": null"));
        assert_eq!(Circuit::from_json(&text).unwrap(), c);
    }
}
