//! Evaluation backends: the semantics side of a compositional model.
//!
//! Four morphism representations realize the same interface: finite function
//! tables (deterministic), nonnegative matrices (probabilistic), Kraus
//! operator lists (quantum CP maps), and real-vector expression graphs
//! (neural). Each supports sequential/parallel composition, the structural
//! morphisms its backend admits, channel/determinism checks, marginals, and
//! a norm distance used for approximate equality and ε accounting.

mod eval;
mod fn_table;
mod kraus;
mod matrix;
mod real_expr;

pub use eval::eval_diagram;
pub use fn_table::FnTable;
pub use kraus::{CMat, KrausMorph};
pub use matrix::StochMatrix;
pub use real_expr::{Activation, Expr, RealExpr};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for stochastic-matrix channel checks (column sums).
pub const TOL_STOCH_CHANNEL: f64 = 1e-12;
/// Tolerance for Kraus completeness and density-matrix checks.
pub const TOL_QUANT: f64 = 1e-10;
/// Tolerance for sampled real-vector comparisons.
pub const TOL_REAL_SAMPLED: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Finite sets and functions.
    FinFn,
    /// Finite sets and nonnegative matrices; channels are stochastic.
    Stoch,
    /// Finite-dimensional Hilbert spaces and CP maps.
    Quant,
    /// Real vector spaces and (nonlinear) functions as expression graphs.
    RealVec,
}

impl Backend {
    /// Default tolerance for equation and refinement checks.
    pub fn equation_tolerance(self) -> f64 {
        match self {
            Backend::FinFn => 0.0,
            Backend::Stoch => 1e-9,
            Backend::Quant => 1e-9,
            Backend::RealVec => 1e-7,
        }
    }

    pub fn supports_copy(self) -> bool {
        !matches!(self, Backend::Quant)
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::FinFn => write!(f, "finfn"),
            Backend::Stoch => write!(f, "stoch"),
            Backend::Quant => write!(f, "quant"),
            Backend::RealVec => write!(f, "realvec"),
        }
    }
}

/// Backend-tagged object semantics.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ObjectSem {
    /// Ordered, duplicate-free atom labels (deterministic backend).
    FinSet(Vec<String>),
    /// Ordered, duplicate-free atom labels (probabilistic backend).
    ProbSpace(Vec<String>),
    /// Hilbert space of the given dimension.
    Hilbert(usize),
    /// Real vector space of the given dimension (direct-sum convention).
    RealSpace(usize),
}

impl ObjectSem {
    pub fn backend(&self) -> Backend {
        match self {
            ObjectSem::FinSet(_) => Backend::FinFn,
            ObjectSem::ProbSpace(_) => Backend::Stoch,
            ObjectSem::Hilbert(_) => Backend::Quant,
            ObjectSem::RealSpace(_) => Backend::RealVec,
        }
    }

    /// Number of basis points (finite/Hilbert) or coordinates (real).
    pub fn size(&self) -> usize {
        match self {
            ObjectSem::FinSet(e) | ObjectSem::ProbSpace(e) => e.len(),
            ObjectSem::Hilbert(d) => *d,
            ObjectSem::RealSpace(d) => *d,
        }
    }

    pub fn elements(&self) -> Option<&[String]> {
        match self {
            ObjectSem::FinSet(e) | ObjectSem::ProbSpace(e) => Some(e),
            _ => None,
        }
    }

    pub fn element_index(&self, label: &str) -> Option<usize> {
        self.elements()?.iter().position(|e| e == label)
    }

    /// Element lists must be nonempty and duplicate-free; dimensions must be
    /// positive on Hilbert spaces.
    pub fn check(&self) -> Result<(), SemanticsError> {
        match self {
            ObjectSem::FinSet(e) | ObjectSem::ProbSpace(e) => {
                if e.is_empty() {
                    return Err(SemanticsError::BadObject("empty element list".into()));
                }
                let mut seen = std::collections::BTreeSet::new();
                for x in e {
                    if !seen.insert(x) {
                        return Err(SemanticsError::BadObject(format!(
                            "duplicate element `{x}`"
                        )));
                    }
                }
                Ok(())
            }
            ObjectSem::Hilbert(d) => {
                if *d == 0 {
                    Err(SemanticsError::BadObject("zero-dimensional Hilbert space".into()))
                } else {
                    Ok(())
                }
            }
            ObjectSem::RealSpace(_) => Ok(()),
        }
    }
}

/// Flattened size of a tensor of objects: product of carriers (finite and
/// Hilbert), sum of dimensions (real spaces, direct-sum convention).
pub fn flat_size(objs: &[ObjectSem]) -> usize {
    if objs.iter().any(|o| matches!(o, ObjectSem::RealSpace(_))) {
        objs.iter().map(|o| o.size()).sum()
    } else {
        objs.iter().map(|o| o.size()).product()
    }
}

/// Row-major flat index of per-factor indices.
pub fn flat_index(objs: &[ObjectSem], idx: &[usize]) -> usize {
    debug_assert_eq!(objs.len(), idx.len());
    let mut out = 0usize;
    for (o, &i) in objs.iter().zip(idx.iter()) {
        out = out * o.size() + i;
    }
    out
}

/// Per-factor indices of a row-major flat index.
pub fn unflat_index(objs: &[ObjectSem], mut flat: usize) -> Vec<usize> {
    let mut out = vec![0usize; objs.len()];
    for (k, o) in objs.iter().enumerate().rev() {
        out[k] = flat % o.size();
        flat /= o.size();
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemanticsError {
    #[error("generator `{0}` is not bound")]
    UnboundGenerator(String),
    #[error("unsupported structural morphism: {0}")]
    UnsupportedStructural(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("objects do not match: {0}")]
    ObjectMismatch(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(usize),
    #[error("invalid object: {0}")]
    BadObject(String),
    #[error("invalid morphism: {0}")]
    BadMorphism(String),
    #[error("carrier is infinite; exhaustive operation unavailable")]
    InfiniteCarrier,
}

/// Backend-tagged morphism semantics.
#[derive(Debug, Clone, PartialEq)]
pub enum MorphSem {
    FnTable(FnTable),
    Matrix(StochMatrix),
    Kraus(KrausMorph),
    RealExpr(RealExpr),
}

/// A state is a morphism with empty domain.
pub type StateSem = MorphSem;

impl MorphSem {
    pub fn backend(&self) -> Backend {
        match self {
            MorphSem::FnTable(_) => Backend::FinFn,
            MorphSem::Matrix(_) => Backend::Stoch,
            MorphSem::Kraus(_) => Backend::Quant,
            MorphSem::RealExpr(_) => Backend::RealVec,
        }
    }

    pub fn dom(&self) -> &[ObjectSem] {
        match self {
            MorphSem::FnTable(m) => &m.dom,
            MorphSem::Matrix(m) => &m.dom,
            MorphSem::Kraus(m) => &m.dom,
            MorphSem::RealExpr(m) => &m.dom,
        }
    }

    pub fn cod(&self) -> &[ObjectSem] {
        match self {
            MorphSem::FnTable(m) => &m.cod,
            MorphSem::Matrix(m) => &m.cod,
            MorphSem::Kraus(m) => &m.cod,
            MorphSem::RealExpr(m) => &m.cod,
        }
    }

    pub fn is_state(&self) -> bool {
        self.dom().is_empty()
    }

    /// Diagrammatic composition: `self` first, then `next`.
    pub fn then(&self, next: &MorphSem) -> Result<MorphSem, SemanticsError> {
        if self.cod() != next.dom() {
            return Err(SemanticsError::ObjectMismatch(format!(
                "cod {:?} vs dom {:?}",
                self.cod(),
                next.dom()
            )));
        }
        match (self, next) {
            (MorphSem::FnTable(a), MorphSem::FnTable(b)) => Ok(MorphSem::FnTable(a.then(b))),
            (MorphSem::Matrix(a), MorphSem::Matrix(b)) => Ok(MorphSem::Matrix(a.then(b))),
            (MorphSem::Kraus(a), MorphSem::Kraus(b)) => Ok(MorphSem::Kraus(a.then(b))),
            (MorphSem::RealExpr(a), MorphSem::RealExpr(b)) => Ok(MorphSem::RealExpr(a.then(b))),
            _ => Err(SemanticsError::ObjectMismatch("mixed backends".into())),
        }
    }

    pub fn tensor(&self, other: &MorphSem) -> Result<MorphSem, SemanticsError> {
        match (self, other) {
            (MorphSem::FnTable(a), MorphSem::FnTable(b)) => Ok(MorphSem::FnTable(a.tensor(b))),
            (MorphSem::Matrix(a), MorphSem::Matrix(b)) => Ok(MorphSem::Matrix(a.tensor(b))),
            (MorphSem::Kraus(a), MorphSem::Kraus(b)) => Ok(MorphSem::Kraus(a.tensor(b))),
            (MorphSem::RealExpr(a), MorphSem::RealExpr(b)) => {
                Ok(MorphSem::RealExpr(a.tensor(b)))
            }
            _ => Err(SemanticsError::ObjectMismatch("mixed backends".into())),
        }
    }

    pub fn identity(backend: Backend, objs: &[ObjectSem]) -> MorphSem {
        match backend {
            Backend::FinFn => MorphSem::FnTable(FnTable::identity(objs)),
            Backend::Stoch => MorphSem::Matrix(StochMatrix::identity(objs)),
            Backend::Quant => MorphSem::Kraus(KrausMorph::identity(objs)),
            Backend::RealVec => MorphSem::RealExpr(RealExpr::identity(objs)),
        }
    }

    pub fn copy_morph(obj: &ObjectSem, n: usize) -> Result<MorphSem, SemanticsError> {
        match obj.backend() {
            Backend::FinFn => Ok(MorphSem::FnTable(FnTable::copy(obj, n))),
            Backend::Stoch => Ok(MorphSem::Matrix(StochMatrix::copy(obj, n))),
            Backend::Quant => Err(SemanticsError::UnsupportedStructural(
                "copy has no quantum semantics".into(),
            )),
            Backend::RealVec => Ok(MorphSem::RealExpr(RealExpr::copy(obj, n))),
        }
    }

    pub fn discard_morph(obj: &ObjectSem) -> MorphSem {
        match obj.backend() {
            Backend::FinFn => MorphSem::FnTable(FnTable::discard(obj)),
            Backend::Stoch => MorphSem::Matrix(StochMatrix::discard(obj)),
            Backend::Quant => MorphSem::Kraus(KrausMorph::discard(obj)),
            Backend::RealVec => MorphSem::RealExpr(RealExpr::discard(obj)),
        }
    }

    /// Reorders tensor factors: output factor `perm[i]` is input factor `i`.
    pub fn permute_morph(objs: &[ObjectSem], perm: &[usize]) -> MorphSem {
        let backend = objs
            .first()
            .map(|o| o.backend())
            .unwrap_or(Backend::FinFn);
        match backend {
            Backend::FinFn => MorphSem::FnTable(FnTable::permute(objs, perm)),
            Backend::Stoch => MorphSem::Matrix(StochMatrix::permute(objs, perm)),
            Backend::Quant => MorphSem::Kraus(KrausMorph::permute(objs, perm)),
            Backend::RealVec => MorphSem::RealExpr(RealExpr::permute(objs, perm)),
        }
    }

    /// Channel check: preserves discarding.
    pub fn is_channel(&self) -> bool {
        match self {
            MorphSem::FnTable(_) => true,
            MorphSem::Matrix(m) => m.is_channel(TOL_STOCH_CHANNEL),
            MorphSem::Kraus(m) => m.is_channel(TOL_QUANT),
            // Discard is the unique map to the zero-dimensional space.
            MorphSem::RealExpr(_) => true,
        }
    }

    /// Determinism check: commutes with copying.
    pub fn is_deterministic(&self) -> Result<bool, SemanticsError> {
        match self {
            MorphSem::FnTable(_) => Ok(true),
            MorphSem::Matrix(m) => Ok(m.is_deterministic(TOL_STOCH_CHANNEL)),
            MorphSem::Kraus(_) => Err(SemanticsError::UnsupportedStructural(
                "no copy to test determinism against in the quantum backend".into(),
            )),
            MorphSem::RealExpr(m) => Ok(m.is_deterministic()),
        }
    }

    /// Discards all output factors not in `keep` (ascending, deduplicated).
    pub fn marginal(&self, keep: &[usize]) -> Result<MorphSem, SemanticsError> {
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if let Some(&bad) = keep.iter().find(|&&i| i >= self.cod().len()) {
            return Err(SemanticsError::IndexOutOfRange(bad));
        }
        let post: Vec<MorphSem> = self
            .cod()
            .iter()
            .enumerate()
            .map(|(i, o)| {
                if keep.contains(&i) {
                    MorphSem::identity(self.backend(), std::slice::from_ref(o))
                } else {
                    MorphSem::discard_morph(o)
                }
            })
            .collect();
        let mut dropper = MorphSem::identity(self.backend(), &[]);
        for p in post {
            dropper = dropper.tensor(&p)?;
        }
        self.then(&dropper)
    }

    /// Norm distance between parallel morphisms.
    ///
    /// Function tables: 0 when equal, sentinel 2 otherwise. Matrices: max
    /// over input columns of the ℓ1 column difference. Kraus: Frobenius
    /// distance of Choi matrices. Real expressions: max deviation over a
    /// fixed-seed pseudo-random sample of inputs.
    pub fn norm_dist(&self, other: &MorphSem) -> Result<f64, SemanticsError> {
        if self.dom() != other.dom() || self.cod() != other.cod() {
            return Err(SemanticsError::ObjectMismatch(
                "norm_dist requires equal dom/cod".into(),
            ));
        }
        match (self, other) {
            (MorphSem::FnTable(a), MorphSem::FnTable(b)) => {
                Ok(if a == b { 0.0 } else { 2.0 })
            }
            (MorphSem::Matrix(a), MorphSem::Matrix(b)) => Ok(a.column_l1_dist(b)),
            (MorphSem::Kraus(a), MorphSem::Kraus(b)) => Ok(a.choi_frobenius_dist(b)),
            (MorphSem::RealExpr(a), MorphSem::RealExpr(b)) => Ok(a.sampled_dist(b)),
            _ => Err(SemanticsError::ObjectMismatch("mixed backends".into())),
        }
    }

    pub fn approx_equal(&self, other: &MorphSem, eps: f64) -> Result<bool, SemanticsError> {
        Ok(self.norm_dist(other)? <= eps)
    }

    /// Operator norm of the morphism under the backend's distance (distance
    /// to the zero morphism); channels have norm 1 in the matrix backend.
    pub fn matrix_norm(&self) -> Option<f64> {
        match self {
            MorphSem::Matrix(m) => Some(m.column_l1_norm()),
            _ => None,
        }
    }

    /// Deterministic serialization used to key concrete interpretations.
    pub fn canonical_key(&self) -> String {
        fn objs_key(objs: &[ObjectSem]) -> String {
            objs.iter()
                .map(|o| match o {
                    ObjectSem::FinSet(e) => format!("fin[{}]", e.join(",")),
                    ObjectSem::ProbSpace(e) => format!("prob[{}]", e.join(",")),
                    ObjectSem::Hilbert(d) => format!("hilb[{d}]"),
                    ObjectSem::RealSpace(d) => format!("real[{d}]"),
                })
                .collect::<Vec<_>>()
                .join("*")
        }
        let body = match self {
            MorphSem::FnTable(m) => format!(
                "table{:?}",
                m.map
            ),
            MorphSem::Matrix(m) => format!("matrix{:?}", m.data),
            MorphSem::Kraus(m) => {
                let ops: Vec<String> = m
                    .ops
                    .iter()
                    .map(|k| {
                        k.data
                            .iter()
                            .map(|c| format!("{:?}+{:?}i", c.re, c.im))
                            .collect::<Vec<_>>()
                            .join(",")
                    })
                    .collect();
                format!("kraus[{}]", ops.join(";"))
            }
            MorphSem::RealExpr(m) => format!("expr{:?}", m.expr),
        };
        format!(
            "{}|{}|{}",
            objs_key(self.dom()),
            objs_key(self.cod()),
            body
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bit() -> ObjectSem {
        ObjectSem::ProbSpace(vec!["0".into(), "1".into()])
    }

    #[test]
    fn flat_indexing_round_trip() {
        let objs = vec![
            ObjectSem::FinSet(vec!["a".into(), "b".into(), "c".into()]),
            ObjectSem::FinSet(vec!["x".into(), "y".into()]),
        ];
        for f in 0..flat_size(&objs) {
            let idx = unflat_index(&objs, f);
            assert_eq!(flat_index(&objs, &idx), f);
        }
    }

    #[test]
    fn marginal_of_product_state_recovers_factor() {
        // ω ⊗ τ, keep first → ω.
        let omega = MorphSem::Matrix(StochMatrix::state(&bit(), &[0.3, 0.7]));
        let tau = MorphSem::Matrix(StochMatrix::state(&bit(), &[0.9, 0.1]));
        let prod = omega.tensor(&tau).unwrap();
        let kept = prod.marginal(&[0]).unwrap();
        assert!(kept.approx_equal(&omega, 1e-12).unwrap());
        // keep all → unchanged
        let all = prod.marginal(&[0, 1]).unwrap();
        assert!(all.approx_equal(&prod, 1e-12).unwrap());
    }

    #[test]
    fn marginal_index_out_of_range() {
        let omega = MorphSem::Matrix(StochMatrix::state(&bit(), &[0.5, 0.5]));
        assert_eq!(
            omega.marginal(&[3]).unwrap_err(),
            SemanticsError::IndexOutOfRange(3)
        );
    }

    #[test]
    fn norm_dist_simple_arithmetic() {
        let a = MorphSem::Matrix(StochMatrix::new(
            vec![bit()],
            vec![bit()],
            vec![1.0, 0.6, 0.0, 0.4],
        ));
        let b = MorphSem::Matrix(StochMatrix::new(
            vec![bit()],
            vec![bit()],
            vec![1.0, 0.5, 0.0, 0.5],
        ));
        assert_eq!(a.norm_dist(&a).unwrap(), 0.0);
        let d = a.norm_dist(&b).unwrap();
        assert!((d - 0.2).abs() < 1e-12);
    }
}
