//! Orthogonal projection families `{p_ξ}` with `Σ p_ξ = 1`, and the
//! partial isometries witnessing equivalence between equal-rank members.
//!
//! Family indices are dense and 0-based; list position plays the role of the
//! abstract index set. In finite dimension the least upper bound of the
//! family is its sum, so completeness is checked as `Σ p_ξ = 1`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{IodError, Result};
use crate::matrix::{hermitian_eigen, spectral_norm, tol_scale, Complex, ComplexMatrix};
use crate::random;

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    matrix: ComplexMatrix,
    rank: usize,
}

impl Projection {
    /// Checks `p = p*`, `p² = p` and integrality of the trace, all within
    /// `tol`.
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        matrix.ensure_square()?;
        let p = Self::unchecked(matrix);
        let sa = p.self_adjointness_residual();
        let idem = p.idempotence_residual();
        let tr = p.matrix.trace().re;
        if sa > tol || idem > tol || (tr - p.rank as f64).abs() > tol {
            return Err(IodError::InvalidFamily(format!(
                "not a projection: ‖p − p*‖ = {sa:e}, ‖p² − p‖ = {idem:e}, trace {tr}"
            )));
        }
        Ok(p)
    }

    pub(crate) fn unchecked(matrix: ComplexMatrix) -> Self {
        let rank = matrix.trace().re.round().max(0.0) as usize;
        Self { matrix, rank }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `round(tr p)`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn idempotence_residual(&self) -> f64 {
        spectral_norm(&(&(&self.matrix * &self.matrix) - &self.matrix))
    }

    pub fn self_adjointness_residual(&self) -> f64 {
        spectral_norm(&(&self.matrix - &self.matrix.adjoint()))
    }

    /// Orthonormal basis of the range, as the columns of a `dim × rank`
    /// matrix: eigenvectors for the `rank` largest eigenvalues, in descending
    /// eigenvalue order, each rotated so its first nonzero coordinate is
    /// positive real.
    pub fn range_basis(&self) -> Result<ComplexMatrix> {
        let dim = self.matrix.rows();
        let eig = hermitian_eigen(&self.matrix)?;
        let mut basis = ComplexMatrix::zeros(dim, self.rank);
        for (col, k) in (0..dim).rev().take(self.rank).enumerate() {
            let v: Vec<Complex> = (0..dim).map(|i| eig.vectors.get(i, k)).collect();
            let lead = v.iter().find(|z| z.norm() > 1e-10).copied().unwrap_or(Complex::new(1.0, 0.0));
            let phase = lead.conj() / lead.norm();
            for (i, z) in v.iter().enumerate() {
                basis.set(i, col, z * phase);
            }
        }
        Ok(basis)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionFamily {
    dim: usize,
    members: Vec<Projection>,
}

/// One violated family invariant together with its residual norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Idempotence { index: usize, residual: f64 },
    SelfAdjointness { index: usize, residual: f64 },
    Orthogonality { first: usize, second: usize, residual: f64 },
    Completeness { residual: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub violations: Vec<Violation>,
}

impl FamilyReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl ProjectionFamily {
    /// Wraps `members` after shape checks only; see [`Self::validate`].
    pub fn new(dim: usize, members: Vec<ComplexMatrix>) -> Result<Self> {
        for m in &members {
            let n = m.ensure_square()?;
            if n != dim {
                return Err(IodError::DimensionMismatch { expected: dim, found: n });
            }
        }
        Ok(Self {
            dim,
            members: members.into_iter().map(Projection::unchecked).collect(),
        })
    }

    /// Like [`Self::new`] but rejects families with any violation at `tol`.
    pub fn validated(dim: usize, members: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let family = Self::new(dim, members)?;
        let report = family.validate(tol);
        if let Some(v) = report.violations.first() {
            return Err(IodError::InvalidFamily(format!(
                "{} violation(s), first: {v:?}",
                report.violations.len()
            )));
        }
        Ok(family)
    }

    /// Diagonal 0/1 projections onto consecutive coordinate blocks.
    pub fn from_partition(dim: usize, sizes: &[usize]) -> Result<Self> {
        check_partition(dim, sizes)?;
        let mut start = 0;
        let mut members = Vec::with_capacity(sizes.len());
        for &size in sizes {
            let block = start..start + size;
            let diag: Vec<f64> = (0..dim).map(|i| if block.contains(&i) { 1.0 } else { 0.0 }).collect();
            members.push(Projection {
                matrix: ComplexMatrix::from_real_diagonal(&diag),
                rank: size,
            });
            start += size;
        }
        Ok(Self { dim, members })
    }

    /// The partition family conjugated by a Haar-random unitary drawn from
    /// `seed`.
    pub fn random(dim: usize, sizes: &[usize], seed: u64) -> Result<Self> {
        let base = Self::from_partition(dim, sizes)?;
        let u = random::unitary(&mut random::seeded(seed), dim);
        Ok(base.conjugated(&u))
    }

    /// `{u p_ξ u*}`; the result is symmetrized to absorb rounding.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Self {
        let ua = u.adjoint();
        let members = self
            .members
            .iter()
            .map(|p| Projection {
                matrix: (&(u * &p.matrix) * &ua).hermitian_part(),
                rank: p.rank,
            })
            .collect();
        Self { dim: self.dim, members }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, index: usize) -> &Projection {
        &self.members[index]
    }

    pub fn members(&self) -> &[Projection] {
        &self.members
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.members.iter().map(Projection::rank).collect()
    }

    /// `Σ_{k ∈ indices} p_k`.
    pub fn sum_of(&self, indices: &[usize]) -> ComplexMatrix {
        let mut s = ComplexMatrix::zeros(self.dim, self.dim);
        for &k in indices {
            s.add_assign_ref(&self.members[k].matrix);
        }
        s
    }

    /// Every violated invariant with its residual norm; empty means valid.
    pub fn validate(&self, tol: f64) -> FamilyReport {
        let mut violations = Vec::new();
        for (index, p) in self.members.iter().enumerate() {
            let slack = tol * tol_scale(spectral_norm(&p.matrix));
            let residual = p.idempotence_residual();
            if residual > slack {
                violations.push(Violation::Idempotence { index, residual });
            }
            let residual = p.self_adjointness_residual();
            if residual > slack {
                violations.push(Violation::SelfAdjointness { index, residual });
            }
        }
        for first in 0..self.members.len() {
            for second in first + 1..self.members.len() {
                let residual = spectral_norm(&(&self.members[first].matrix * &self.members[second].matrix));
                if residual > tol {
                    violations.push(Violation::Orthogonality { first, second, residual });
                }
            }
        }
        let all: Vec<usize> = (0..self.members.len()).collect();
        let residual = spectral_norm(&(&self.sum_of(&all) - &ComplexMatrix::identity(self.dim)));
        if residual > tol {
            violations.push(Violation::Completeness { residual });
        }
        FamilyReport { violations }
    }

    /// Partial isometries `x_ξη = x_ξ x_η*` for all ordered pairs `ξ ≠ η`,
    /// where `x_ξ` is the range basis of `p_ξ`. Requires equal ranks.
    pub fn equivalence_witnesses(&self) -> Result<Vec<EquivalenceWitness>> {
        let ranks = self.ranks();
        if ranks.windows(2).any(|w| w[0] != w[1]) {
            return Err(IodError::NotPairwiseEquivalent { ranks });
        }
        let bases = self
            .members
            .iter()
            .map(Projection::range_basis)
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::new();
        for (source, xs) in bases.iter().enumerate() {
            for (target, xt) in bases.iter().enumerate() {
                if source != target {
                    out.push(EquivalenceWitness {
                        source,
                        target,
                        isometry: xs * &xt.adjoint(),
                    });
                }
            }
        }
        Ok(out)
    }
}

fn check_partition(dim: usize, sizes: &[usize]) -> Result<()> {
    if let Some(k) = sizes.iter().position(|&s| s == 0) {
        return Err(IodError::EmptyPart(k));
    }
    let sum: usize = sizes.iter().sum();
    if sum != dim {
        return Err(IodError::PartitionMismatch { sum, dim });
    }
    Ok(())
}

pub fn family_from_partition(dim: usize, sizes: &[usize]) -> Result<ProjectionFamily> {
    ProjectionFamily::from_partition(dim, sizes)
}

pub fn family_random(dim: usize, sizes: &[usize], seed: u64) -> Result<ProjectionFamily> {
    ProjectionFamily::random(dim, sizes, seed)
}

pub fn validate_family(family: &ProjectionFamily, tol: f64) -> FamilyReport {
    family.validate(tol)
}

pub fn equivalence_witnesses(family: &ProjectionFamily) -> Result<Vec<EquivalenceWitness>> {
    family.equivalence_witnesses()
}

/// `x` with `x x* = p_source` and `x* x = p_target`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceWitness {
    pub source: usize,
    pub target: usize,
    pub isometry: ComplexMatrix,
}

impl EquivalenceWitness {
    /// `(‖x x* − p_source‖, ‖x* x − p_target‖)`.
    pub fn residuals(&self, family: &ProjectionFamily) -> (f64, f64) {
        let x = &self.isometry;
        let xa = x.adjoint();
        (
            spectral_norm(&(&(x * &xa) - family.member(self.source).matrix())),
            spectral_norm(&(&(&xa * x) - family.member(self.target).matrix())),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct FamilyDoc {
    dim: usize,
    members: Vec<ComplexMatrix>,
}

impl Serialize for ProjectionFamily {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FamilyDoc {
            dim: self.dim,
            members: self.members.iter().map(|p| p.matrix.clone()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProjectionFamily {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = FamilyDoc::deserialize(d)?;
        ProjectionFamily::new(doc.dim, doc.members).map_err(serde::de::Error::custom)
    }
}
