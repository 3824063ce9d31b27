//! Interaction networks: pairwise coefficient matrices, modifier attachments,
//! and the canonical three-species systems.
//!
//! Coefficients follow the convention `alpha[i][j] > 0` when species `j`
//! benefits species `i`. In a pairwise contest "X > Y" the superior species
//! X suppresses Y (`alpha[Y][X] < 0`) while Y feeds X (`alpha[X][Y] > 0`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const A: usize = 0;
pub const B: usize = 1;
pub const C: usize = 2;

const SPECIES_NAMES: [&str; 3] = ["A", "B", "C"];

/// Display name of a species index (`A`, `B`, `C`, then `S3`, `S4`, ...).
pub fn species_name(index: usize) -> String {
    SPECIES_NAMES
        .get(index)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("S{index}"))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("interaction magnitude {name} must be finite, got {value}")]
    NonFiniteMagnitude { name: &'static str, value: f64 },
    #[error("modification strength must be finite, got {0}")]
    NonFiniteBeta(f64),
    #[error("unknown topology '{0}' (expected transitive-a|transitive-b|transitive-c|intransitive)")]
    UnknownTopology(String),
    #[error("unknown HOI kind '{0}' (expected sym|asym-ab|asym-ba)")]
    UnknownKind(String),
    #[error("HOI index {0} out of range")]
    NoSuchHoi(usize),
    #[error("invalid system: {0}")]
    Invalid(String),
}

/// Which species modifies which pairwise interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    TransitiveA,
    TransitiveB,
    TransitiveC,
    Intransitive,
}

impl Topology {
    pub const ALL: [Topology; 4] = [
        Topology::TransitiveA,
        Topology::TransitiveB,
        Topology::TransitiveC,
        Topology::Intransitive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Topology::TransitiveA => "transitive-a",
            Topology::TransitiveB => "transitive-b",
            Topology::TransitiveC => "transitive-c",
            Topology::Intransitive => "intransitive",
        }
    }

    pub fn is_transitive(self) -> bool {
        !matches!(self, Topology::Intransitive)
    }

    /// Modifying species.
    pub fn modifier(self) -> usize {
        match self {
            Topology::TransitiveA => A,
            Topology::TransitiveB => B,
            Topology::TransitiveC | Topology::Intransitive => C,
        }
    }

    /// The modified pair in notation order: the first member is the species
    /// on the positive side of the interaction (it is fed by the second).
    pub fn modified_pair(self) -> (usize, usize) {
        match self {
            Topology::TransitiveA => (B, C),
            Topology::TransitiveB => (A, C),
            Topology::TransitiveC | Topology::Intransitive => (A, B),
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topology::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| ModelError::UnknownTopology(s.to_string()))
    }
}

/// How the single modifier attaches to its pair `(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HoiKind {
    /// Both `alpha[p][q]` and `alpha[q][p]` share one modifier.
    #[serde(rename = "sym")]
    Symmetric,
    /// Only `alpha[p][q]` (the positive side, e.g. the effect of B on A).
    #[serde(rename = "asym-ab")]
    AsymAffectedFirst,
    /// Only `alpha[q][p]` (the negative side, e.g. the effect of A on B).
    #[serde(rename = "asym-ba")]
    AsymAffectedSecond,
}

impl HoiKind {
    pub const ALL: [HoiKind; 3] = [
        HoiKind::Symmetric,
        HoiKind::AsymAffectedFirst,
        HoiKind::AsymAffectedSecond,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HoiKind::Symmetric => "sym",
            HoiKind::AsymAffectedFirst => "asym-ab",
            HoiKind::AsymAffectedSecond => "asym-ba",
        }
    }
}

impl fmt::Display for HoiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HoiKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HoiKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ModelError::UnknownKind(s.to_string()))
    }
}

/// Magnitudes of the three pairwise interactions; signs come from the topology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaMagnitudes {
    pub ab: f64,
    pub ac: f64,
    pub bc: f64,
}

impl AlphaMagnitudes {
    pub fn identical(alpha: f64) -> Self {
        Self {
            ab: alpha,
            ac: alpha,
            bc: alpha,
        }
    }
}

/// One interaction modification: `modifier` alters the effect of `affecting`
/// on `affected` (and the reverse direction too when `symmetric`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoiSpec {
    pub affected: usize,
    pub affecting: usize,
    pub modifier: usize,
    pub beta: f64,
    pub symmetric: bool,
}

impl HoiSpec {
    /// Ordered `(row, column)` coefficient entries this modifier multiplies.
    pub fn targets(&self) -> impl Iterator<Item = (usize, usize)> {
        let forward = (self.affected, self.affecting);
        let reverse = self.symmetric.then_some((self.affecting, self.affected));
        std::iter::once(forward).chain(reverse)
    }

    /// Column label used in trajectory files, e.g. `m_AB`.
    pub fn column_name(&self) -> String {
        format!(
            "m_{}{}",
            species_name(self.affected),
            species_name(self.affecting)
        )
    }
}

/// A full model definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub n_species: usize,
    /// Row-major `n_species x n_species` coefficient matrix.
    pub alpha: Vec<f64>,
    pub hois: Vec<HoiSpec>,
}

/// A broken [`SystemSpec`] invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ShapeMismatch { expected: usize, found: usize },
    TooFewSpecies(usize),
    NonFiniteCoefficient { i: usize, j: usize },
    NonzeroDiagonal { i: usize, value: f64 },
    IndexOutOfRange { hoi: usize, index: usize },
    IndicesNotDistinct { hoi: usize },
    NonFiniteBeta { hoi: usize },
    DuplicateTarget { hoi: usize, i: usize, j: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ShapeMismatch { expected, found } => {
                write!(f, "alpha has {found} entries, expected {expected}")
            }
            Violation::TooFewSpecies(n) => write!(f, "need at least 2 species, got {n}"),
            Violation::NonFiniteCoefficient { i, j } => {
                write!(f, "non-finite coefficient alpha[{i}][{j}]")
            }
            Violation::NonzeroDiagonal { i, value } => {
                write!(f, "nonzero diagonal alpha[{i}][{i}] = {value}")
            }
            Violation::IndexOutOfRange { hoi, index } => {
                write!(f, "hoi #{hoi}: species index {index} out of range")
            }
            Violation::IndicesNotDistinct { hoi } => {
                write!(f, "hoi #{hoi}: affected, affecting and modifier must be distinct")
            }
            Violation::NonFiniteBeta { hoi } => write!(f, "hoi #{hoi}: non-finite beta"),
            Violation::DuplicateTarget { hoi, i, j } => {
                write!(f, "duplicate modifier target ({i}, {j}) at hoi #{hoi}")
            }
        }
    }
}

impl SystemSpec {
    /// Plain GLVM with no modifiers.
    pub fn pairwise(n_species: usize, alpha: Vec<f64>) -> Self {
        Self {
            n_species,
            alpha,
            hois: Vec::new(),
        }
    }

    #[inline]
    pub fn alpha(&self, i: usize, j: usize) -> f64 {
        self.alpha[i * self.n_species + j]
    }

    pub fn set_alpha(&mut self, i: usize, j: usize, value: f64) {
        self.alpha[i * self.n_species + j] = value;
    }

    /// Overwrites every modification strength.
    pub fn set_beta(&mut self, beta: f64) {
        for hoi in &mut self.hois {
            hoi.beta = beta;
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.set_beta(beta);
        self
    }

    /// Checks every structural invariant; an empty list means the spec is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.n_species;
        let mut out = Vec::new();
        if n < 2 {
            out.push(Violation::TooFewSpecies(n));
        }
        if self.alpha.len() != n * n {
            out.push(Violation::ShapeMismatch {
                expected: n * n,
                found: self.alpha.len(),
            });
            return out;
        }
        for i in 0..n {
            for j in 0..n {
                let v = self.alpha(i, j);
                if !v.is_finite() {
                    out.push(Violation::NonFiniteCoefficient { i, j });
                } else if i == j && v != 0.0 {
                    out.push(Violation::NonzeroDiagonal { i, value: v });
                }
            }
        }
        let mut seen: Vec<(usize, usize)> = Vec::new();
        for (h, hoi) in self.hois.iter().enumerate() {
            let idx = [hoi.affected, hoi.affecting, hoi.modifier];
            if let Some(&bad) = idx.iter().find(|&&k| k >= n) {
                out.push(Violation::IndexOutOfRange { hoi: h, index: bad });
                continue;
            }
            if idx[0] == idx[1] || idx[0] == idx[2] || idx[1] == idx[2] {
                out.push(Violation::IndicesNotDistinct { hoi: h });
            }
            if !hoi.beta.is_finite() {
                out.push(Violation::NonFiniteBeta { hoi: h });
            }
            for target in hoi.targets() {
                if seen.contains(&target) {
                    out.push(Violation::DuplicateTarget {
                        hoi: h,
                        i: target.0,
                        j: target.1,
                    });
                } else {
                    seen.push(target);
                }
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<(), ModelError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            let msg = violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            Err(ModelError::Invalid(msg))
        }
    }

    /// Relabels species `i -> (i + shift) mod N`, carrying coefficients and
    /// modifier indices along.
    pub fn cyclic_relabel(&self, shift: i64) -> SystemSpec {
        let n = self.n_species;
        let map = |i: usize| ((i as i64 + shift).rem_euclid(n as i64)) as usize;
        let mut alpha = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                alpha[map(i) * n + map(j)] = self.alpha(i, j);
            }
        }
        let hois = self
            .hois
            .iter()
            .map(|h| HoiSpec {
                affected: map(h.affected),
                affecting: map(h.affecting),
                modifier: map(h.modifier),
                ..*h
            })
            .collect();
        SystemSpec {
            n_species: n,
            alpha,
            hois,
        }
    }
}

/// Builds one of the canonical three-species systems with modification
/// strength zero. Use [`SystemSpec::set_beta`] to choose the strength.
pub fn build_canonical(
    topology: Topology,
    kind: HoiKind,
    magnitudes: AlphaMagnitudes,
) -> Result<SystemSpec, ModelError> {
    for (name, value) in [
        ("alpha_ab", magnitudes.ab),
        ("alpha_ac", magnitudes.ac),
        ("alpha_bc", magnitudes.bc),
    ] {
        if !value.is_finite() {
            return Err(ModelError::NonFiniteMagnitude { name, value });
        }
    }

    // A > B and B > C in every topology; A > C when transitive, C > A otherwise.
    let mut spec = SystemSpec::pairwise(3, vec![0.0; 9]);
    let mut contest = |winner: usize, loser: usize, magnitude: f64| {
        spec.set_alpha(winner, loser, magnitude);
        spec.set_alpha(loser, winner, -magnitude);
    };
    contest(A, B, magnitudes.ab);
    contest(B, C, magnitudes.bc);
    if topology.is_transitive() {
        contest(A, C, magnitudes.ac);
    } else {
        contest(C, A, magnitudes.ac);
    }

    let (p, q) = topology.modified_pair();
    let (affected, affecting) = match kind {
        HoiKind::Symmetric | HoiKind::AsymAffectedFirst => (p, q),
        HoiKind::AsymAffectedSecond => (q, p),
    };
    spec.hois.push(HoiSpec {
        affected,
        affecting,
        modifier: topology.modifier(),
        beta: 0.0,
        symmetric: kind == HoiKind::Symmetric,
    });
    Ok(spec)
}
