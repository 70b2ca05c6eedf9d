//! Weighted Pauli-string Hamiltonians and the physical unit system.
//!
//! All coefficients are stored in units of the exchange integral J. Time is
//! measured in units of the period T = 2ħ/J, so a unit coefficient
//! accumulates a phase of [`PHASE_PER_PERIOD`] radians per T.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{SystemKind, SystemSpec};

/// Dimensionless phase J·T/ħ accumulated over one period by a unit term.
pub const PHASE_PER_PERIOD: f64 = 2.0;

/// Terms with smaller coefficients are dropped at build time.
pub const ZERO_COEFF: f64 = 1e-15;

/// Largest system [`matrix_of`] will assemble (2^13 × 2^13 complex ≈ 1 GiB).
pub const MAX_DENSE_SITES: usize = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PauliAxis::X => "X",
            PauliAxis::Y => "Y",
            PauliAxis::Z => "Z",
        })
    }
}

/// `coeff · ⊗_k σ_k^{axis_k}` over a sparse, site-sorted support.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    coeff: f64,
    factors: Vec<(usize, PauliAxis)>,
}

impl PauliTerm {
    pub fn new(coeff: f64, factors: impl IntoIterator<Item = (usize, PauliAxis)>) -> Result<Self> {
        if !coeff.is_finite() {
            return Err(Error::InvalidTerm(format!(
                "coefficient {coeff} is not finite"
            )));
        }
        let mut factors: Vec<_> = factors.into_iter().collect();
        if factors.is_empty() {
            return Err(Error::InvalidTerm("empty support".into()));
        }
        factors.sort_by_key(|&(site, _)| site);
        if factors.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidTerm(format!("repeated site in {factors:?}")));
        }
        Ok(Self { coeff, factors })
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn factors(&self) -> &[(usize, PauliAxis)] {
        &self.factors
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.factors.iter().map(|&(s, _)| s)
    }

    pub fn max_site(&self) -> usize {
        self.factors.last().map(|&(s, _)| s).unwrap_or(0)
    }

    /// Bit masks describing the action on computational basis states:
    /// `P|i⟩ = i^{#Y} · (-1)^{popcount(i & phase_mask)} |i ^ flip_mask⟩`.
    pub fn masks(&self) -> PauliMasks {
        let mut m = PauliMasks::default();
        for &(site, axis) in &self.factors {
            let bit = 1usize << site;
            match axis {
                PauliAxis::X => m.flip |= bit,
                PauliAxis::Y => {
                    m.flip |= bit;
                    m.phase |= bit;
                    m.n_y += 1;
                }
                PauliAxis::Z => m.phase |= bit,
            }
        }
        m
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·", self.coeff)?;
        for (site, axis) in &self.factors {
            write!(f, "{axis}{site}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PauliMasks {
    pub flip: usize,
    pub phase: usize,
    pub n_y: u32,
}

impl PauliMasks {
    /// Phase picked up when the string acts on basis state `index`.
    #[inline]
    pub fn phase_on(&self, index: usize) -> Complex64 {
        let sign = if (index & self.phase).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        match self.n_y % 4 {
            0 => Complex64::new(sign, 0.0),
            1 => Complex64::new(0.0, sign),
            2 => Complex64::new(-sign, 0.0),
            _ => Complex64::new(0.0, -sign),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    pub n_sites: usize,
    pub terms: Vec<PauliTerm>,
}

impl Hamiltonian {
    pub fn new(n_sites: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.max_site() >= n_sites) {
            return Err(Error::QubitOutOfRange {
                qubit: t.max_site(),
                n: n_sites,
            });
        }
        Ok(Self { n_sites, terms })
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Upper bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    /// `out = H · input` without forming the matrix.
    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for term in &self.terms {
            let m = term.masks();
            for (j, a) in input.iter().enumerate() {
                out[j ^ m.flip] += m.phase_on(j) * term.coeff * a;
            }
        }
    }

    pub fn to_dump(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|t| TermRecord {
                coeff: t.coeff,
                ops: t.factors.clone(),
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_dump())?)
    }

    pub fn from_json(n_sites: usize, text: &str) -> Result<Self> {
        let records: Vec<TermRecord> = serde_json::from_str(text)?;
        let terms = records
            .into_iter()
            .map(|r| PauliTerm::new(r.coeff, r.ops))
            .collect::<Result<_>>()?;
        Self::new(n_sites, terms)
    }
}

/// One entry of the Hamiltonian dump: `{"coeff": 0.5, "ops": [[0, "X"], [1, "X"]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub coeff: f64,
    pub ops: Vec<(usize, PauliAxis)>,
}

fn push_term(terms: &mut Vec<PauliTerm>, coeff: f64, p: usize, q: usize, axis: PauliAxis) {
    if coeff.abs() >= ZERO_COEFF {
        terms.push(PauliTerm {
            coeff,
            factors: vec![(p, axis), (q, axis)],
        });
    }
}

/// Sum of `S_p · S_q` over every bond, with
/// `S_p = (cos ξ sin θ σˣ, sin ξ sin θ σʸ, cos θ σᶻ)`.
///
/// Bonds are visited in construction order (exchange before
/// superexchange); each contributes its XX, YY and ZZ pieces in that order,
/// skipping vanishing coefficients. With every θ = π/2 the ZZ pieces vanish
/// and the Hamiltonian has an identically zero diagonal.
pub fn build_vortex_hamiltonian(spec: &SystemSpec) -> Result<Hamiltonian> {
    if !spec.kind.is_vortex() {
        return Err(Error::UnsupportedKind(spec.kind.to_string()));
    }
    let n = spec.n_sites();
    let (xi, theta) = (&spec.angles.xi, &spec.angles.theta);
    if xi.len() != n || theta.len() != n {
        return Err(Error::AnglesMissing {
            expected: n,
            found: xi.len().min(theta.len()),
        });
    }
    let mut terms = Vec::with_capacity(2 * spec.bonds.len());
    for b in &spec.bonds {
        let (p, q) = (b.p, b.q);
        let (sp, sq) = (theta[p].sin(), theta[q].sin());
        push_term(
            &mut terms,
            xi[p].cos() * xi[q].cos() * sp * sq,
            p,
            q,
            PauliAxis::X,
        );
        push_term(
            &mut terms,
            xi[p].sin() * xi[q].sin() * sp * sq,
            p,
            q,
            PauliAxis::Y,
        );
        push_term(
            &mut terms,
            theta[p].cos() * theta[q].cos(),
            p,
            q,
            PauliAxis::Z,
        );
    }
    Hamiltonian::new(n, terms)
}

/// Open XXZ chain `Σ_i X_i X_{i+1} + Y_i Y_{i+1} + Δ Z_i Z_{i+1}`.
pub fn build_xxz_hamiltonian(n: usize, delta: f64) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(Error::InvalidChainLength(n));
    }
    let mut terms = Vec::with_capacity(3 * (n - 1));
    for i in 0..n - 1 {
        push_term(&mut terms, 1.0, i, i + 1, PauliAxis::X);
        push_term(&mut terms, 1.0, i, i + 1, PauliAxis::Y);
        push_term(&mut terms, delta, i, i + 1, PauliAxis::Z);
    }
    Hamiltonian::new(n, terms)
}

/// Dispatches on the system kind.
pub fn build_hamiltonian(spec: &SystemSpec) -> Result<Hamiltonian> {
    match spec.kind {
        SystemKind::Xxz => build_xxz_hamiltonian(spec.n_sites(), spec.delta),
        _ => build_vortex_hamiltonian(spec),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Hopping integral, eV.
    pub t_hop: f64,
    /// On-site repulsion, eV.
    pub u: f64,
    /// Reported period, fs.
    pub t_period_fs: f64,
    /// Magnetic-moment scale of the noise pulse per unit magnetization, J/T.
    pub svinm_unit: f64,
    /// Reduced Planck constant, eV·s.
    pub hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        let t_hop = 0.13;
        Self {
            t_hop,
            u: 8.0 * t_hop,
            t_period_fs: 40.5054,
            svinm_unit: 3.5662e-3,
            hbar: 6.582_119_569e-16,
        }
    }
}

impl PhysicalConstants {
    /// Exchange integral J = 2t²/U in eV.
    pub fn j(&self) -> f64 {
        2.0 * self.t_hop * self.t_hop / self.u
    }

    /// 2ħ/J in femtoseconds.
    pub fn period_from_constants(&self) -> f64 {
        2.0 * self.hbar / self.j() * 1e15
    }
}

pub fn period_from_constants() -> f64 {
    PhysicalConstants::default().period_from_constants()
}

/// Dense matrix in the little-endian computational basis.
pub fn matrix_of(h: &Hamiltonian) -> Result<DMatrix<Complex64>> {
    if h.n_sites > MAX_DENSE_SITES {
        return Err(Error::TooManyQubits {
            n: h.n_sites,
            max: MAX_DENSE_SITES,
        });
    }
    let dim = 1usize << h.n_sites;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for term in &h.terms {
        let masks = term.masks();
        for col in 0..dim {
            let row = col ^ masks.flip;
            m[(row, col)] += masks.phase_on(col) * term.coeff;
        }
    }
    Ok(m)
}
