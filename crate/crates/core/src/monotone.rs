//! Bounded increasing sequences of Hermitian block families and their
//! blockwise supremum.
//!
//! The supremum is assembled block by block: a diagonal block `(ξ, ξ)` is the
//! limit of the compressions `p_ξ a_k p_ξ`, and an off-diagonal block
//! `(ξ, η)` is `p_ξ L p_η`, where `L` is the limit of the two-index corners
//! `(p_ξ + p_η) a_k (p_ξ + p_η)`. Limits are read off once the sequence of
//! terms has settled.

use std::sync::Arc;

use crate::error::{IodError, Result};
use crate::iod::{CornerSelection, IodElement};
use crate::matrix::{spectral_norm, ComplexMatrix};
use crate::projections::ProjectionFamily;

/// Consecutive small increments required before a sequence counts as
/// converged.
pub const STABLE_STEPS: usize = 3;

#[derive(Clone, Debug)]
pub struct MonotoneNet {
    terms: Vec<IodElement>,
    bound: f64,
}

impl MonotoneNet {
    /// Checks that every term is blockwise Hermitian, that consecutive terms
    /// increase, and that every term lies below `bound · 1`, all at `tol`.
    pub fn new(terms: Vec<IodElement>, bound: f64, tol: f64) -> Result<Self> {
        let first = terms.first().ok_or_else(|| IodError::InvalidNet("no terms".into()))?;
        if !bound.is_finite() {
            return Err(IodError::InvalidNet(format!("bound {bound} is not finite")));
        }
        let family = first.family().clone();
        let ceiling = IodElement::unit(family.clone()).scale_real(bound);
        for (k, t) in terms.iter().enumerate() {
            if !t.same_family(first) {
                return Err(IodError::FamilyMismatch);
            }
            if !t.is_hermitian_blockwise(tol) {
                return Err(IodError::InvalidNet(format!("term {k} is not Hermitian")));
            }
            if !t.leq(&ceiling, tol)? {
                return Err(IodError::InvalidNet(format!("term {k} exceeds {bound}·1")));
            }
            if k > 0 && !terms[k - 1].leq(t, tol)? {
                return Err(IodError::InvalidNet(format!("term {k} is not above term {}", k - 1)));
            }
        }
        Ok(Self { terms, bound })
    }

    /// Net with terms `f(0), …, f(len − 1)`.
    pub fn generate(len: usize, bound: f64, tol: f64, f: impl FnMut(usize) -> IodElement) -> Result<Self> {
        Self::new((0..len).map(f).collect(), bound, tol)
    }

    /// Same as [`Self::generate`] with terms given as dense matrices.
    pub fn from_matrices(
        family: &Arc<ProjectionFamily>,
        matrices: impl IntoIterator<Item = ComplexMatrix>,
        bound: f64,
        tol: f64,
    ) -> Result<Self> {
        let terms = matrices
            .into_iter()
            .map(|m| IodElement::decompose(&m, family))
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms, bound, tol)
    }

    pub fn terms(&self) -> &[IodElement] {
        &self.terms
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn family(&self) -> &Arc<ProjectionFamily> {
        self.terms[0].family()
    }
}

/// Index of the first term preceded by `STABLE_STEPS` consecutive
/// increments `‖a_k − a_{k−1}‖ < tol`, among the first `max_iter` terms.
///
/// The test runs on whole terms rather than per block: a block can sit
/// still for several steps before it moves (partial diagonal sums do this),
/// while compressions never increase the norm, so a settled term settles
/// every corner.
fn settle_index(net: &MonotoneNet, tol: f64, max_iter: usize) -> Result<usize> {
    let limit = net.len().min(max_iter);
    let mut prev = net.terms[0].reconstruct();
    let mut stable = 0;
    let mut last_increment = f64::INFINITY;
    for k in 1..limit {
        let cur = net.terms[k].reconstruct();
        last_increment = spectral_norm(&(&cur - &prev));
        stable = if last_increment < tol { stable + 1 } else { 0 };
        if stable >= STABLE_STEPS {
            return Ok(k);
        }
        prev = cur;
    }
    Err(IodError::NetNotConverged {
        iterations: limit,
        last_increment,
    })
}

/// Blockwise least upper bound of the net. The net must settle (see
/// [`STABLE_STEPS`]) within `min(max_iter, len)` terms, otherwise
/// [`IodError::NetNotConverged`] reports the last increment seen. Diagonal
/// blocks are the limits of `p_ξ a_k p_ξ`; off-diagonal blocks are
/// `p_ξ L p_η` with `L` the limit of the pair corner. The result's bound is
/// its norm.
pub fn blockwise_sup(net: &MonotoneNet, tol: f64, max_iter: usize) -> Result<IodElement> {
    let k = settle_index(net, tol, max_iter)?;
    let limit_term = &net.terms[k];
    let family = net.family().clone();
    let n = family.len();
    let mut blocks = Vec::new();
    for xi in 0..n {
        let p = family.member(xi).matrix();
        blocks.push(((xi, xi), limit_term.corner(&CornerSelection::new(vec![xi], n)?)?));
        for eta in 0..n {
            if eta == xi {
                continue;
            }
            let pair = CornerSelection::new(vec![xi.min(eta), xi.max(eta)], n)?;
            let l = limit_term.corner(&pair)?;
            let q = family.member(eta).matrix();
            blocks.push(((xi, eta), &(p * &l) * q));
        }
    }
    let sup = IodElement::from_blocks(family, blocks, 0.0)?;
    let bound = sup.norm();
    Ok(sup.with_bound(bound))
}

/// Whether every term of the net lies below `candidate`.
pub fn is_upper_bound(candidate: &IodElement, net: &MonotoneNet, tol: f64) -> Result<bool> {
    for t in net.terms() {
        if !t.leq(candidate, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}
