//! Block families `{a_ξη}` with `a_ξη ∈ p_ξ B(H) p_η`.
//!
//! An [`IodElement`] stores its blocks at full ambient dimension, so block
//! sums and corner extraction are plain matrix additions. Absent keys are zero
//! blocks. The element carries a bound `K` dominating every finite corner sum.
//!
//! At finite dimension the supremum over corners is attained by the full
//! corner (compressions never increase the norm), and positivity of the full
//! corner implies positivity of every compression. [`IodElement::norm`] and
//! [`IodElement::leq`] use that; [`IodElement::corner_sweep`] and the extra
//! singleton/pair checks in `leq` are there to assert it.

use std::collections::{BTreeMap, HashMap};
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{IodError, Result};
use crate::matrix::{is_psd, spectral_norm, tol_scale, Complex, ComplexMatrix};
use crate::projections::ProjectionFamily;

pub type BlockKey = (usize, usize);

/// Blocks with Frobenius norm below `DROP_TOL · max(1, ‖a‖)` are omitted by
/// [`IodElement::decompose`].
pub const DROP_TOL: f64 = 1e-12;

/// Largest corner size swept by default in [`IodElement::corner_sweep`].
pub const DEFAULT_SWEEP_CAP: usize = 3;

/// A finite duplicate-free set of family indices `S`, standing for the
/// projection `p_S = Σ_{k∈S} p_k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CornerSelection {
    indices: Vec<usize>,
}

impl CornerSelection {
    pub fn new(indices: Vec<usize>, family_len: usize) -> Result<Self> {
        let mut seen = vec![false; family_len];
        for &k in &indices {
            if k >= family_len {
                return Err(IodError::InvalidIndex {
                    index: k,
                    len: family_len,
                });
            }
            if std::mem::replace(&mut seen[k], true) {
                return Err(IodError::DuplicateIndex(k));
            }
        }
        Ok(Self { indices })
    }

    pub fn all(family_len: usize) -> Self {
        Self {
            indices: (0..family_len).collect(),
        }
    }

    pub fn empty() -> Self {
        Self { indices: Vec::new() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    fn mask(&self, family_len: usize) -> Vec<bool> {
        let mut m = vec![false; family_len];
        for &k in &self.indices {
            m[k] = true;
        }
        m
    }
}

#[derive(Clone, Debug)]
pub struct IodElement {
    family: Arc<ProjectionFamily>,
    blocks: BTreeMap<BlockKey, ComplexMatrix>,
    bound: f64,
}

/// Result of sweeping all corners up to a size cap.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CornerSweep {
    pub corners_checked: usize,
    pub full_norm: f64,
    pub max_corner_norm: f64,
    pub violations: Vec<CornerViolation>,
}

/// A corner whose norm exceeds that of a corner containing it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CornerViolation {
    pub corner: Vec<usize>,
    pub containing: Vec<usize>,
    pub excess: f64,
}

impl IodElement {
    pub fn zero(family: Arc<ProjectionFamily>) -> Self {
        Self {
            family,
            blocks: BTreeMap::new(),
            bound: 0.0,
        }
    }

    /// `{δ_ξη p_ξ}`, the unit of the algebra and order unit of the space.
    pub fn unit(family: Arc<ProjectionFamily>) -> Self {
        let blocks = family
            .members()
            .iter()
            .enumerate()
            .map(|(k, p)| ((k, k), p.matrix().clone()))
            .collect();
        let bound = if family.is_empty() { 0.0 } else { 1.0 };
        Self { family, blocks, bound }
    }

    /// Assembles an element from explicit blocks. Indices and shapes are
    /// checked; corner support is not (see [`Self::corner_support_residual`]).
    /// Exactly zero blocks are dropped and repeated keys are summed.
    pub fn from_blocks(
        family: Arc<ProjectionFamily>,
        blocks: impl IntoIterator<Item = (BlockKey, ComplexMatrix)>,
        bound: f64,
    ) -> Result<Self> {
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(IodError::InvalidParameters(format!("bound must be finite and nonnegative, got {bound}")));
        }
        let n = family.len();
        let dim = family.dim();
        let mut map: BTreeMap<BlockKey, ComplexMatrix> = BTreeMap::new();
        for ((xi, eta), m) in blocks {
            for index in [xi, eta] {
                if index >= n {
                    return Err(IodError::InvalidIndex { index, len: n });
                }
            }
            let found = m.ensure_square()?;
            if found != dim {
                return Err(IodError::DimensionMismatch { expected: dim, found });
            }
            match map.get_mut(&(xi, eta)) {
                Some(existing) => existing.add_assign_ref(&m),
                None => {
                    map.insert((xi, eta), m);
                }
            }
        }
        map.retain(|_, m| !m.is_zero());
        Ok(Self {
            family,
            blocks: map,
            bound,
        })
    }

    /// `{p_ξ a p_η}` with bound `‖a‖`.
    pub fn decompose(a: &ComplexMatrix, family: &Arc<ProjectionFamily>) -> Result<Self> {
        let dim = a.ensure_square()?;
        if dim != family.dim() {
            return Err(IodError::DimensionMismatch {
                expected: family.dim(),
                found: dim,
            });
        }
        let norm = spectral_norm(a);
        let drop_below = DROP_TOL * tol_scale(norm);
        let right: Vec<ComplexMatrix> = family.members().iter().map(|p| a * p.matrix()).collect();
        let mut blocks = BTreeMap::new();
        for (xi, p) in family.members().iter().enumerate() {
            for (eta, ap) in right.iter().enumerate() {
                let b = p.matrix() * ap;
                if b.frobenius_norm() >= drop_below && !b.is_zero() {
                    blocks.insert((xi, eta), b);
                }
            }
        }
        Ok(Self {
            family: family.clone(),
            blocks,
            bound: norm,
        })
    }

    pub fn family(&self) -> &Arc<ProjectionFamily> {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    pub fn block(&self, xi: usize, eta: usize) -> Option<&ComplexMatrix> {
        self.blocks.get(&(xi, eta))
    }

    /// Stored blocks in `(ξ, η)` order.
    pub fn blocks(&self) -> impl Iterator<Item = (BlockKey, &ComplexMatrix)> {
        self.blocks.iter().map(|(k, m)| (*k, m))
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn same_family(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.family, &other.family) || *self.family == *other.family
    }

    fn ensure_same_family(&self, other: &Self) -> Result<()> {
        if self.same_family(other) {
            Ok(())
        } else {
            Err(IodError::FamilyMismatch)
        }
    }

    /// `Σ_{ξ,η} a_ξη`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let dim = self.dim();
        let mut out = ComplexMatrix::zeros(dim, dim);
        for m in self.blocks.values() {
            out.add_assign_ref(m);
        }
        out
    }

    /// `Σ_{k,l∈S} a_kl`, which equals `p_S · reconstruct · p_S`.
    pub fn corner(&self, s: &CornerSelection) -> Result<ComplexMatrix> {
        let n = self.family.len();
        if let Some(&index) = s.indices.iter().find(|&&k| k >= n) {
            return Err(IodError::InvalidIndex { index, len: n });
        }
        Ok(self.corner_masked(&s.mask(n)))
    }

    fn corner_masked(&self, mask: &[bool]) -> ComplexMatrix {
        let dim = self.dim();
        let mut out = ComplexMatrix::zeros(dim, dim);
        for (&(k, l), m) in &self.blocks {
            if mask[k] && mask[l] {
                out.add_assign_ref(m);
            }
        }
        out
    }

    /// `sup_S ‖corner(S)‖`, attained at the full corner.
    pub fn norm(&self) -> f64 {
        spectral_norm(&self.reconstruct())
    }

    /// Computes the norm of every corner with at most `max_size` indices and
    /// records each violation of monotone domination: a corner exceeding the
    /// full corner, or exceeding one of the corners one index larger that
    /// contain it (within `tol · max(1, ‖x‖)`).
    pub fn corner_sweep(&self, max_size: usize, tol: f64) -> CornerSweep {
        let n = self.family.len();
        let full_norm = self.norm();
        let slack = tol * tol_scale(full_norm);
        let all: Vec<usize> = (0..n).collect();

        let mut norms: HashMap<Vec<usize>, f64> = HashMap::new();
        let mut violations = Vec::new();
        let mut level: Vec<Vec<usize>> = vec![Vec::new()];
        norms.insert(Vec::new(), 0.0);
        for _ in 1..=max_size.min(n) {
            let mut next = Vec::new();
            for s in &level {
                let start = s.last().map_or(0, |&k| k + 1);
                for k in start..n {
                    let mut t = s.clone();
                    t.push(k);
                    next.push(t);
                }
            }
            for t in &next {
                let mut mask = vec![false; n];
                t.iter().for_each(|&k| mask[k] = true);
                let norm_t = spectral_norm(&self.corner_masked(&mask));
                for drop in 0..t.len() {
                    let mut sub = t.clone();
                    sub.remove(drop);
                    let norm_sub = norms[&sub];
                    if norm_sub > norm_t + slack {
                        violations.push(CornerViolation {
                            corner: sub,
                            containing: t.clone(),
                            excess: norm_sub - norm_t,
                        });
                    }
                }
                if norm_t > full_norm + slack {
                    violations.push(CornerViolation {
                        corner: t.clone(),
                        containing: all.clone(),
                        excess: norm_t - full_norm,
                    });
                }
                norms.insert(t.clone(), norm_t);
            }
            level = next;
        }
        let max_corner_norm = norms.values().cloned().fold(0.0, f64::max);
        CornerSweep {
            corners_checked: norms.len() - 1,
            full_norm,
            max_corner_norm,
            violations,
        }
    }

    /// `self ≤ other`: every corner of `other − self` is positive
    /// semidefinite. Checks the full corner and all singleton and pair
    /// corners; equality within tolerance counts.
    pub fn leq(&self, other: &Self, tol: f64) -> Result<bool> {
        self.ensure_same_family(other)?;
        let d = other.checked_sub(self)?;
        if !is_psd(&d.reconstruct(), tol)? {
            return Ok(false);
        }
        let n = self.family.len();
        for k in 0..n {
            for l in k..n {
                let mut mask = vec![false; n];
                mask[k] = true;
                mask[l] = true;
                if !is_psd(&d.corner_masked(&mask), tol)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `{a_ξη}* = {a_ηξ*}`.
    pub fn involution(&self) -> Self {
        let blocks = self.blocks.iter().map(|(&(xi, eta), m)| ((eta, xi), m.adjoint())).collect();
        Self {
            family: self.family.clone(),
            blocks,
            bound: self.bound,
        }
    }

    /// `a_ξη* = a_ηξ` for all pairs, entrywise within `tol · max(1, K)`.
    pub fn is_hermitian_blockwise(&self, tol: f64) -> bool {
        let slack = tol * tol_scale(self.bound);
        let zero = ComplexMatrix::zeros(self.dim(), self.dim());
        self.blocks.iter().all(|(&(xi, eta), m)| {
            let mirror = self.blocks.get(&(eta, xi)).unwrap_or(&zero);
            (&m.adjoint() - mirror).max_abs() <= slack
        })
    }

    /// `(h1, h2)` with `h1 = (x + x*)/2`, `h2 = (x − x*)/(2i)`, so that
    /// `x = h1 + i·h2` and both parts are Hermitian.
    pub fn hermitian_split(&self) -> (Self, Self) {
        let star = self.involution();
        let half = Complex::new(0.5, 0.0);
        let minus_half_i = Complex::new(0.0, -0.5);
        let mut real = BTreeMap::new();
        let mut imag = BTreeMap::new();
        let keys: std::collections::BTreeSet<BlockKey> = self.blocks.keys().chain(star.blocks.keys()).copied().collect();
        let zero = ComplexMatrix::zeros(self.dim(), self.dim());
        for key in keys {
            let a = self.blocks.get(&key).unwrap_or(&zero);
            let b = star.blocks.get(&key).unwrap_or(&zero);
            let h1 = (a + b).scale(half);
            let h2 = (a - b).scale(minus_half_i);
            if !h1.is_zero() {
                real.insert(key, h1);
            }
            if !h2.is_zero() {
                imag.insert(key, h2);
            }
        }
        (
            Self {
                family: self.family.clone(),
                blocks: real,
                bound: self.bound,
            },
            Self {
                family: self.family.clone(),
                blocks: imag,
                bound: self.bound,
            },
        )
    }

    /// Blocks `Σ_i a_ξi b_iη`, summed in increasing `i`. The bound of the
    /// result is its norm.
    pub fn star_product(&self, other: &Self) -> Result<Self> {
        self.ensure_same_family(other)?;
        let mut blocks: BTreeMap<BlockKey, ComplexMatrix> = BTreeMap::new();
        for (&(xi, i), a) in &self.blocks {
            for (&(_, eta), b) in other.blocks.range((i, 0)..=(i, usize::MAX)) {
                let prod = a * b;
                match blocks.get_mut(&(xi, eta)) {
                    Some(acc) => acc.add_assign_ref(&prod),
                    None => {
                        blocks.insert((xi, eta), prod);
                    }
                }
            }
        }
        blocks.retain(|_, m| !m.is_zero());
        let mut out = Self {
            family: self.family.clone(),
            blocks,
            bound: 0.0,
        };
        out.bound = out.norm();
        Ok(out)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.ensure_same_family(other)?;
        let mut blocks = self.blocks.clone();
        for (k, m) in &other.blocks {
            match blocks.get_mut(k) {
                Some(acc) => acc.add_assign_ref(m),
                None => {
                    blocks.insert(*k, m.clone());
                }
            }
        }
        blocks.retain(|_, m| !m.is_zero());
        Ok(Self {
            family: self.family.clone(),
            blocks,
            bound: self.bound + other.bound,
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.scale(Complex::new(-1.0, 0.0)))
    }

    /// `{λ a_ξη}` with bound `|λ| K`.
    pub fn scale(&self, c: Complex) -> Self {
        let blocks = if c == Complex::new(0.0, 0.0) {
            BTreeMap::new()
        } else {
            self.blocks.iter().map(|(k, m)| (*k, m.scale(c))).collect()
        };
        Self {
            family: self.family.clone(),
            blocks,
            bound: c.norm() * self.bound,
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex::new(c, 0.0))
    }

    /// `max_ξη ‖p_ξ a_ξη p_η − a_ξη‖`; zero for corner-supported blocks.
    pub fn corner_support_residual(&self) -> f64 {
        self.blocks
            .iter()
            .map(|(&(xi, eta), m)| {
                let p = self.family.member(xi).matrix();
                let q = self.family.member(eta).matrix();
                spectral_norm(&(&(&(p * m) * q) - m))
            })
            .fold(0.0, f64::max)
    }

    /// Whether `K` dominates the norm, within `tol · max(1, K)`.
    pub fn bound_holds(&self, tol: f64) -> bool {
        self.norm() <= self.bound + tol * tol_scale(self.bound)
    }

    /// Largest entrywise difference between corresponding blocks.
    pub fn max_block_difference(&self, other: &Self) -> f64 {
        let zero = ComplexMatrix::zeros(self.dim(), self.dim());
        self.blocks
            .keys()
            .chain(other.blocks.keys())
            .map(|k| {
                let a = self.blocks.get(k).unwrap_or(&zero);
                let b = other.blocks.get(k).unwrap_or(&zero);
                (a - b).max_abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_document(&self) -> IodDocument {
        self.document_with(FamilySource::Inline((*self.family).clone()))
    }

    /// Document whose family is written as a reference string instead of
    /// inline.
    pub fn to_document_with_ref(&self, reference: &str) -> IodDocument {
        self.document_with(FamilySource::Reference(reference.to_owned()))
    }

    fn document_with(&self, family: FamilySource) -> IodDocument {
        IodDocument {
            family,
            bound: self.bound,
            blocks: self
                .blocks
                .iter()
                .map(|(&(xi, eta), m)| BlockDoc {
                    xi,
                    eta,
                    matrix: m.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds an element, resolving a family reference through `resolve`.
    pub fn from_document(doc: IodDocument, resolve: impl FnOnce(&str) -> Result<ProjectionFamily>) -> Result<Self> {
        let family = match doc.family {
            FamilySource::Inline(f) => f,
            FamilySource::Reference(r) => resolve(&r)?,
        };
        Self::from_blocks(
            Arc::new(family),
            doc.blocks.into_iter().map(|b| ((b.xi, b.eta), b.matrix)),
            doc.bound,
        )
    }
}

impl PartialEq for IodElement {
    fn eq(&self, other: &Self) -> bool {
        self.same_family(other) && self.blocks == other.blocks && self.bound == other.bound
    }
}

macro_rules! iod_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&IodElement> for &IodElement {
            type Output = IodElement;
            fn $method(self, rhs: &IodElement) -> IodElement {
                self.$checked(rhs).expect("operands belong to different projection families")
            }
        }
    };
}

iod_binop!(Add, add, checked_add);
iod_binop!(Sub, sub, checked_sub);

impl Neg for &IodElement {
    type Output = IodElement;
    fn neg(self) -> IodElement {
        self.scale_real(-1.0)
    }
}

/// The `family` field of a serialized element: inline, or a reference
/// (typically a path) resolved by the reader.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilySource {
    Reference(String),
    Inline(ProjectionFamily),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockDoc {
    pub xi: usize,
    pub eta: usize,
    pub matrix: ComplexMatrix,
}

/// Serialized form: `{"family": …, "bound": K, "blocks": [{"xi", "eta", "matrix"}]}`
/// with blocks sorted by `(xi, eta)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IodDocument {
    pub family: FamilySource,
    pub bound: f64,
    pub blocks: Vec<BlockDoc>,
}

impl Serialize for IodElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_document().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IodElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = IodDocument::deserialize(d)?;
        IodElement::from_document(doc, |r| Err(IodError::UnresolvedFamily(r.to_owned()))).map_err(serde::de::Error::custom)
    }
}

pub fn decompose(a: &ComplexMatrix, family: &Arc<ProjectionFamily>) -> Result<IodElement> {
    IodElement::decompose(a, family)
}

pub fn reconstruct(x: &IodElement) -> ComplexMatrix {
    x.reconstruct()
}

pub fn corner(x: &IodElement, s: &CornerSelection) -> Result<ComplexMatrix> {
    x.corner(s)
}

pub fn iod_norm(x: &IodElement) -> f64 {
    x.norm()
}

pub fn leq(x: &IodElement, y: &IodElement, tol: f64) -> Result<bool> {
    x.leq(y, tol)
}

pub fn involution(x: &IodElement) -> IodElement {
    x.involution()
}

pub fn is_hermitian_blockwise(x: &IodElement, tol: f64) -> bool {
    x.is_hermitian_blockwise(tol)
}

pub fn hermitian_split(x: &IodElement) -> (IodElement, IodElement) {
    x.hermitian_split()
}

pub fn star_product(x: &IodElement, y: &IodElement) -> Result<IodElement> {
    x.star_product(y)
}
