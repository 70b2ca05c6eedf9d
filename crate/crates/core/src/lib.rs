//! Exact statevector simulation of spin vortices around small polarons,
//! propagated by first-order Trotter circuits, with an XXZ chain baseline.

pub mod circuit;
pub mod error;
pub mod evolve;
pub mod hamiltonian;
pub mod lattice;
pub mod observables;
pub mod runner;
pub mod statevector;

pub use error::{Error, Result};
pub use evolve::{run_exact, run_trotter, semiclassical_period_scan, RunConfig, RunResult};
pub use hamiltonian::{build_hamiltonian, Hamiltonian, PauliAxis, PauliTerm, PhysicalConstants};
pub use lattice::{build_system, SystemKind, SystemParams, SystemSpec};
pub use statevector::{BasisLabel, StateVector};
