//! Site geometry, hole placement, bond enumeration and spin angles.
//!
//! Positions live on the integer square lattice. A vortex plaquette is the
//! 8-site perimeter of a 3×3 block whose center is removed (the polaron
//! hole). Labels run counterclockwise from the lower-left corner, so for a
//! single vortex:
//!
//! ```text
//!   g f e
//!   h · d
//!   a b c
//! ```
//!
//! The combined system stacks a second plaquette on top, sharing the edge
//! `e f g`, and continues the sweep with `i..m`. Site `f` sits at the
//! center of the resulting 3×5 block.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Pos = [i32; 2];

/// Labels are single lowercase letters, so this is the hard cap on sites.
pub const MAX_SITES: usize = 26;

/// Global azimuthal phase shipped for the meron plaquette, in degrees.
///
/// Picked by [`crate::evolve::sweep_vortex_layouts`] as the layout with the
/// highest 4T fidelity under depth-1 Trotter at dt = T/300 (0.1° grid); the
/// `shipped_layout_is_sweep_optimum` acceptance check keeps the two in sync.
pub const MELON_DEFAULT_CHI_DEG: f64 = 57.4;

/// Antimeron counterpart of [`MELON_DEFAULT_CHI_DEG`]; the mirror image,
/// 90° minus the meron value.
pub const ANTIMELON_DEFAULT_CHI_DEG: f64 = 32.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Melon,
    #[serde(rename = "antimelon")]
    AntiMelon,
    Combined,
    Xxz,
}

impl SystemKind {
    pub fn is_vortex(self) -> bool {
        !matches!(self, SystemKind::Xxz)
    }

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Melon => "melon",
            SystemKind::AntiMelon => "antimelon",
            SystemKind::Combined => "combined",
            SystemKind::Xxz => "xxz",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "melon" | "a" => Ok(SystemKind::Melon),
            "antimelon" | "anti-melon" | "b" => Ok(SystemKind::AntiMelon),
            "combined" | "c" => Ok(SystemKind::Combined),
            "xxz" => Ok(SystemKind::Xxz),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Site {
    pub label: char,
    pub index: usize,
    pub pos: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hole {
    pub pos: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BondKind {
    Exchange,
    Superexchange,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bond {
    pub p: usize,
    pub q: usize,
    pub kind: BondKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinAngles {
    /// Azimuthal angle per site, radians.
    pub xi: Vec<f64>,
    /// Polar angle per site, radians.
    pub theta: Vec<f64>,
}

/// Knobs accepted by [`build_system`]. `n` and `delta` only matter for XXZ.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    pub n: usize,
    pub delta: f64,
    /// Overrides the kind's default global phase.
    pub chi: Option<f64>,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            n: 8,
            delta: 0.0,
            chi: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub sites: Vec<Site>,
    pub holes: Vec<Hole>,
    pub bonds: Vec<Bond>,
    pub angles: SpinAngles,
    /// Winding number per hole: +1 meron, -1 antimeron.
    pub winding: Vec<i32>,
    pub chi: f64,
    /// XXZ anisotropy; ignored by vortex kinds.
    pub delta: f64,
}

/// JSON form of a system. Bonds and angles are derived, so only geometry
/// and the few scalar knobs are stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub kind: SystemKind,
    pub sites: Vec<SiteRecord>,
    #[serde(default)]
    pub holes: Vec<Pos>,
    #[serde(default)]
    pub winding: Vec<i32>,
    #[serde(default)]
    pub chi: f64,
    #[serde(default)]
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteRecord {
    pub label: String,
    pub pos: Pos,
}

const SINGLE_PLAQUETTE: [Pos; 8] = [
    [0, 0],
    [1, 0],
    [2, 0],
    [2, 1],
    [2, 2],
    [1, 2],
    [0, 2],
    [0, 1],
];

const UPPER_PLAQUETTE: [Pos; 5] = [[2, 3], [2, 4], [1, 4], [0, 4], [0, 3]];

pub fn build_system(kind: SystemKind, params: &SystemParams) -> Result<SystemSpec> {
    let file = builtin_file(kind, params)?;
    SystemSpec::from_file(&file)
}

fn builtin_file(kind: SystemKind, params: &SystemParams) -> Result<SystemFile> {
    let (positions, holes, winding, default_chi): (Vec<Pos>, Vec<Pos>, Vec<i32>, f64) = match kind {
        SystemKind::Melon => (
            SINGLE_PLAQUETTE.to_vec(),
            vec![[1, 1]],
            vec![1],
            MELON_DEFAULT_CHI_DEG.to_radians(),
        ),
        SystemKind::AntiMelon => (
            SINGLE_PLAQUETTE.to_vec(),
            vec![[1, 1]],
            vec![-1],
            ANTIMELON_DEFAULT_CHI_DEG.to_radians(),
        ),
        SystemKind::Combined => {
            let mut positions = SINGLE_PLAQUETTE.to_vec();
            positions.extend_from_slice(&UPPER_PLAQUETTE);
            (positions, vec![[1, 1], [1, 3]], vec![1, -1], 0.0)
        }
        SystemKind::Xxz => {
            if params.n < 2 {
                return Err(Error::InvalidChainLength(params.n));
            }
            if params.n > MAX_SITES {
                return Err(Error::TooManyQubits {
                    n: params.n,
                    max: MAX_SITES,
                });
            }
            if !params.delta.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "anisotropy must be finite, got {}",
                    params.delta
                )));
            }
            let positions = (0..params.n as i32).map(|x| [x, 0]).collect();
            (positions, Vec::new(), Vec::new(), 0.0)
        }
    };
    let sites = positions
        .into_iter()
        .enumerate()
        .map(|(i, pos)| SiteRecord {
            label: label_for(i).to_string(),
            pos,
        })
        .collect();
    Ok(SystemFile {
        kind,
        sites,
        holes,
        winding,
        chi: params.chi.unwrap_or(default_chi),
        delta: if kind == SystemKind::Xxz {
            params.delta
        } else {
            0.0
        },
    })
}

pub fn label_for(index: usize) -> char {
    (b'a' + index as u8) as char
}

impl SystemSpec {
    pub fn from_file(file: &SystemFile) -> Result<Self> {
        let n = file.sites.len();
        if n == 0 {
            return Err(Error::InvalidGeometry("no sites".into()));
        }
        if n > MAX_SITES {
            return Err(Error::TooManyQubits { n, max: MAX_SITES });
        }
        let mut sites = Vec::with_capacity(n);
        let mut seen = HashSet::new();
        for (index, rec) in file.sites.iter().enumerate() {
            let mut chars = rec.label.chars();
            let label = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => {
                    return Err(Error::InvalidGeometry(format!(
                        "label `{}` is not a single letter",
                        rec.label
                    )))
                }
            };
            if label != label_for(index) {
                return Err(Error::InvalidGeometry(format!(
                    "site {index} has label `{label}`, expected `{}`",
                    label_for(index)
                )));
            }
            if !seen.insert(rec.pos) {
                return Err(Error::InvalidGeometry(format!(
                    "two sites share position {:?}",
                    rec.pos
                )));
            }
            sites.push(Site {
                label,
                index,
                pos: rec.pos,
            });
        }
        for h in &file.holes {
            if seen.contains(h) {
                return Err(Error::InvalidGeometry(format!(
                    "hole at {h:?} coincides with a site"
                )));
            }
        }
        if file.winding.len() != file.holes.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} winding numbers for {} holes",
                file.winding.len(),
                file.holes.len()
            )));
        }
        if file.kind.is_vortex() && file.holes.is_empty() {
            return Err(Error::InvalidGeometry(
                "vortex systems need at least one hole".into(),
            ));
        }
        if file.kind == SystemKind::Xxz && !file.holes.is_empty() {
            return Err(Error::InvalidGeometry("an XXZ chain has no holes".into()));
        }
        if file.kind == SystemKind::Xxz && n < 2 {
            return Err(Error::InvalidChainLength(n));
        }
        if !file.chi.is_finite() || !file.delta.is_finite() {
            return Err(Error::InvalidGeometry(
                "chi and delta must be finite".into(),
            ));
        }

        let holes: Vec<Hole> = file.holes.iter().map(|&pos| Hole { pos }).collect();
        let bonds = enumerate_bonds(&sites, &holes);
        let mut spec = SystemSpec {
            kind: file.kind,
            sites,
            holes,
            bonds,
            angles: SpinAngles {
                xi: Vec::new(),
                theta: Vec::new(),
            },
            winding: file.winding.clone(),
            chi: file.chi,
            delta: file.delta,
        };
        spec.angles = assign_angles(&spec);
        Ok(spec)
    }

    pub fn to_file(&self) -> SystemFile {
        SystemFile {
            kind: self.kind,
            sites: self
                .sites
                .iter()
                .map(|s| SiteRecord {
                    label: s.label.to_string(),
                    pos: s.pos,
                })
                .collect(),
            holes: self.holes.iter().map(|h| h.pos).collect(),
            winding: self.winding.clone(),
            chi: self.chi,
            delta: self.delta,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn labels(&self) -> Vec<char> {
        self.sites.iter().map(|s| s.label).collect()
    }

    pub fn index_of(&self, label: char) -> Option<usize> {
        self.sites.iter().position(|s| s.label == label)
    }

    /// Same labels, positions and holes moved by `op` about the doubled
    /// coordinate `center2`.
    pub fn transformed(&self, op: PointOp, center2: Pos) -> Result<Self> {
        let mut file = self.to_file();
        let off_lattice =
            || Error::InvalidGeometry(format!("{op:?} about {center2:?} leaves the lattice"));
        for s in &mut file.sites {
            s.pos = op.apply(s.pos, center2).ok_or_else(off_lattice)?;
        }
        for h in &mut file.holes {
            *h = op.apply(*h, center2).ok_or_else(off_lattice)?;
        }
        Self::from_file(&file)
    }

    /// Doubled coordinates of the bounding-box center.
    pub fn center2(&self) -> Pos {
        let xs = self.sites.iter().map(|s| s.pos[0]);
        let ys = self.sites.iter().map(|s| s.pos[1]);
        let (x0, x1) = (xs.clone().min().unwrap(), xs.max().unwrap());
        let (y0, y1) = (ys.clone().min().unwrap(), ys.max().unwrap());
        [x0 + x1, y0 + y1]
    }
}

fn enumerate_bonds(sites: &[Site], holes: &[Hole]) -> Vec<Bond> {
    let hole_set: HashSet<Pos> = holes.iter().map(|h| h.pos).collect();
    let mut exchange = Vec::new();
    let mut superexchange = Vec::new();
    for (p, sp) in sites.iter().enumerate() {
        for (q, sq) in sites.iter().enumerate().skip(p + 1) {
            let dx = sq.pos[0] - sp.pos[0];
            let dy = sq.pos[1] - sp.pos[1];
            let d2 = dx * dx + dy * dy;
            let sum = [sp.pos[0] + sq.pos[0], sp.pos[1] + sq.pos[1]];
            let straddles_hole =
                sum[0] % 2 == 0 && sum[1] % 2 == 0 && hole_set.contains(&[sum[0] / 2, sum[1] / 2]);
            if d2 == 1 {
                exchange.push(Bond {
                    p,
                    q,
                    kind: BondKind::Exchange,
                });
            } else if d2 == 2 || straddles_hole {
                superexchange.push(Bond {
                    p,
                    q,
                    kind: BondKind::Superexchange,
                });
            }
        }
    }
    exchange.extend(superexchange);
    exchange
}

/// Per-site spin angles. Vortex sites wind around their nearest hole; a
/// site equidistant from several holes follows the lowest-indexed one.
pub fn assign_angles(spec: &SystemSpec) -> SpinAngles {
    let n = spec.sites.len();
    let theta = vec![FRAC_PI_2; n];
    if !spec.kind.is_vortex() || spec.holes.is_empty() {
        return SpinAngles {
            xi: vec![0.0; n],
            theta,
        };
    }
    let xi = spec
        .sites
        .iter()
        .map(|site| {
            let (h, hole) = spec
                .holes
                .iter()
                .enumerate()
                .min_by_key(|(_, hole)| {
                    let dx = site.pos[0] - hole.pos[0];
                    let dy = site.pos[1] - hole.pos[1];
                    dx * dx + dy * dy
                })
                .expect("vortex spec has holes");
            let dx = f64::from(site.pos[0] - hole.pos[0]);
            let dy = f64::from(site.pos[1] - hole.pos[1]);
            f64::from(spec.winding[h]) * dy.atan2(dx) + spec.chi
        })
        .collect();
    SpinAngles { xi, theta }
}

/// Elements of the square's point group, acting on doubled coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointOp {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    /// x → -x
    ReflectX,
    /// y → -y
    ReflectY,
    /// swap x and y
    ReflectDiag,
    /// x → -y, y → -x
    ReflectAntiDiag,
}

impl PointOp {
    pub const ALL: [PointOp; 8] = [
        PointOp::Identity,
        PointOp::Rot90,
        PointOp::Rot180,
        PointOp::Rot270,
        PointOp::ReflectX,
        PointOp::ReflectY,
        PointOp::ReflectDiag,
        PointOp::ReflectAntiDiag,
    ];

    /// Map `pos` about the point whose doubled coordinates are `center2`.
    /// `None` when the image falls between lattice points.
    pub fn apply(self, pos: Pos, center2: Pos) -> Option<Pos> {
        let x = 2 * pos[0] - center2[0];
        let y = 2 * pos[1] - center2[1];
        let (u, v) = match self {
            PointOp::Identity => (x, y),
            PointOp::Rot90 => (-y, x),
            PointOp::Rot180 => (-x, -y),
            PointOp::Rot270 => (y, -x),
            PointOp::ReflectX => (-x, y),
            PointOp::ReflectY => (x, -y),
            PointOp::ReflectDiag => (y, x),
            PointOp::ReflectAntiDiag => (-y, -x),
        };
        let (u, v) = (u + center2[0], v + center2[1]);
        (u % 2 == 0 && v % 2 == 0).then_some([u / 2, v / 2])
    }
}

/// Point-group operations (about the bounding-box center) that map the site
/// set and the hole set onto themselves, each returned with the induced
/// site permutation.
pub fn symmetry_group(spec: &SystemSpec) -> Vec<(PointOp, Vec<usize>)> {
    let center2 = spec.center2();
    let by_pos: HashMap<Pos, usize> = spec.sites.iter().map(|s| (s.pos, s.index)).collect();
    let holes: BTreeSet<Pos> = spec.holes.iter().map(|h| h.pos).collect();
    PointOp::ALL
        .iter()
        .filter_map(|&op| {
            let perm: Option<Vec<usize>> = spec
                .sites
                .iter()
                .map(|s| {
                    op.apply(s.pos, center2)
                        .and_then(|p| by_pos.get(&p).copied())
                })
                .collect();
            let moved_holes: Option<BTreeSet<Pos>> = spec
                .holes
                .iter()
                .map(|h| op.apply(h.pos, center2))
                .collect();
            match (perm, moved_holes) {
                (Some(perm), Some(mh)) if mh == holes => Some((op, perm)),
                _ => None,
            }
        })
        .collect()
}

/// Orbits of the geometric symmetry group, as label sets ordered by their
/// lowest site index.
pub fn site_equivalence_classes(spec: &SystemSpec) -> Result<Vec<Vec<char>>> {
    if !spec.kind.is_vortex() {
        return Err(Error::UnsupportedKind(spec.kind.to_string()));
    }
    let group = symmetry_group(spec);
    let n = spec.n_sites();
    let mut class_of = vec![usize::MAX; n];
    let mut classes: Vec<Vec<char>> = Vec::new();
    for start in 0..n {
        if class_of[start] != usize::MAX {
            continue;
        }
        let id = classes.len();
        let mut members = vec![start];
        class_of[start] = id;
        let mut i = 0;
        while i < members.len() {
            let s = members[i];
            for (_, perm) in &group {
                let t = perm[s];
                if class_of[t] == usize::MAX {
                    class_of[t] = id;
                    members.push(t);
                }
            }
            i += 1;
        }
        members.sort_unstable();
        classes.push(members.into_iter().map(|m| spec.sites[m].label).collect());
    }
    Ok(classes)
}
