use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{hermitian_eigen, tol_scale, Complex, ComplexMatrix, SpanBasis, ZERO};
use crate::error::{IodError, Result};

/// Singular-value threshold for the commutation map, relative to the
/// largest generator norm.
pub const COMMUTANT_TOL: f64 = 1e-7;

/// Orthonormal (Frobenius) basis of `{x : xg = gx for every generator g}`.
///
/// See [`commutant_basis_with_tol`].
pub fn commutant_basis(generators: &[ComplexMatrix], dim: usize) -> Result<Vec<ComplexMatrix>> {
    commutant_basis_with_tol(generators, dim, COMMUTANT_TOL)
}

/// Computes the commutant as the nullspace of the stacked maps
/// `x ↦ xg − gx`, treating singular values at most
/// `tol · max(1, max_g ‖g‖_F)` as zero.
///
/// The nullspace is searched inside a candidate subspace known to contain
/// it. For a generating set whose span is closed under adjoints, the
/// candidate is the commutant of one random Hermitian element of the span,
/// which is block diagonal in that element's eigenbasis and at most
/// `Σ mult²`-dimensional. Otherwise the candidate is all of `M_dim`. Either
/// way every generator is imposed exactly, through an incrementally
/// accumulated QR factor of the stacked commutators.
pub fn commutant_basis_with_tol(generators: &[ComplexMatrix], dim: usize, tol: f64) -> Result<Vec<ComplexMatrix>> {
    for g in generators {
        let n = g.ensure_square()?;
        if n != dim {
            return Err(IodError::DimensionMismatch { expected: dim, found: n });
        }
    }
    let all_units = || -> Vec<ComplexMatrix> {
        (0..dim)
            .flat_map(|i| (0..dim).map(move |j| ComplexMatrix::unit(dim, i, j)))
            .collect()
    };
    if generators.is_empty() {
        return Ok(all_units());
    }
    let candidates = if star_closed(generators, dim) {
        hermitian_candidates(generators, dim)?
    } else {
        all_units()
    };
    let scale = tol_scale(generators.iter().map(ComplexMatrix::frobenius_norm).fold(0.0, f64::max));
    Ok(restrict_nullspace(&candidates, generators, tol * scale))
}

fn star_closed(generators: &[ComplexMatrix], dim: usize) -> bool {
    let span = SpanBasis::new(dim, dim, generators, 1e-10);
    generators
        .iter()
        .all(|g| span.residual_norm(&g.adjoint()) <= 1e-9 * tol_scale(g.frobenius_norm()))
}

fn hermitian_candidates(generators: &[ComplexMatrix], dim: usize) -> Result<Vec<ComplexMatrix>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x00c0_ffee);
    let mut h = ComplexMatrix::zeros(dim, dim);
    for g in generators {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        // re·(g + g*)/2 + im·(g − g*)/(2i) is Hermitian
        let w = Complex::new(re, -im) * 0.5;
        for (i, j, z) in g.nonzeros() {
            let add = w * z;
            h.set(i, j, h.get(i, j) + add);
            h.set(j, i, h.get(j, i) + add.conj());
        }
    }
    let eig = hermitian_eigen(&h)?;
    let spread = eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let gap = 1e-8 * tol_scale(spread);

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (k, &v) in eig.values.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if v - eig.values[*c.last().unwrap()] <= gap => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    let u = &eig.vectors;
    let mut out = Vec::new();
    for c in &clusters {
        for &a in c {
            for &b in c {
                out.push(ComplexMatrix::from_fn(dim, dim, |i, j| u.get(i, a) * u.get(j, b).conj()));
            }
        }
    }
    Ok(out)
}

/// Nullspace of `x ↦ (xg − gx)_g` restricted to `span(candidates)`, the
/// candidates being Frobenius-orthonormal.
fn restrict_nullspace(candidates: &[ComplexMatrix], generators: &[ComplexMatrix], threshold: f64) -> Vec<ComplexMatrix> {
    let k = candidates.len();
    if k == 0 {
        return Vec::new();
    }
    let dim = candidates[0].rows();
    let block_rows = dim * dim;
    let chunk_target = (4 * k).max(block_rows);

    let mut r_acc: DMatrix<Complex> = DMatrix::zeros(0, k);
    let mut pending: Vec<Vec<Complex>> = Vec::new();
    let mut pending_rows = 0;

    let flush = |r_acc: &mut DMatrix<Complex>, pending: &mut Vec<Vec<Complex>>, pending_rows: &mut usize| {
        if pending.is_empty() {
            return;
        }
        let acc_rows = r_acc.nrows();
        let mut stacked = DMatrix::zeros(acc_rows + *pending_rows, k);
        stacked.rows_mut(0, acc_rows).copy_from(r_acc);
        let mut row0 = acc_rows;
        for block in pending.drain(..) {
            // block holds `k` columns of length `block_rows`, column-major
            for t in 0..k {
                for r in 0..block_rows {
                    stacked[(row0 + r, t)] = block[t * block_rows + r];
                }
            }
            row0 += block_rows;
        }
        *pending_rows = 0;
        *r_acc = stacked.qr().r();
    };

    for g in generators {
        let mut block = Vec::with_capacity(k * block_rows);
        for c in candidates {
            block.extend_from_slice(c.commutator(g).as_slice());
        }
        pending.push(block);
        pending_rows += block_rows;
        if pending_rows >= chunk_target {
            flush(&mut r_acc, &mut pending, &mut pending_rows);
        }
    }
    flush(&mut r_acc, &mut pending, &mut pending_rows);

    let null = right_nullspace(r_acc, threshold);
    null.iter()
        .map(|v| {
            let mut m = ComplexMatrix::zeros(dim, dim);
            for (t, c) in candidates.iter().enumerate() {
                if v[t] != ZERO {
                    m.add_assign_ref(&c.scale(v[t]));
                }
            }
            m
        })
        .collect()
}

/// Orthonormal right null vectors of `a`: right singular vectors whose
/// singular value is at most `threshold`.
pub(crate) fn right_nullspace(a: DMatrix<Complex>, threshold: f64) -> Vec<Vec<Complex>> {
    let cols = a.ncols();
    if cols == 0 {
        return Vec::new();
    }
    let a = if a.nrows() < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.rows_mut(0, a.nrows()).copy_from(&a);
        padded
    } else {
        a
    };
    let svd = nalgebra::SVD::new(a, false, true);
    let v_t = svd.v_t.expect("SVD computed with V");
    (0..svd.singular_values.len())
        .filter(|&t| svd.singular_values[t] <= threshold)
        .map(|t| (0..cols).map(|c| v_t[(t, c)].conj()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_residual(basis: &[ComplexMatrix], gens: &[ComplexMatrix]) -> f64 {
        basis
            .iter()
            .flat_map(|x| gens.iter().map(move |g| x.commutator(g).frobenius_norm()))
            .fold(0.0, f64::max)
    }

    /// Solves the commutation equations for 2x2 generators by Gaussian
    /// elimination on the 4 unknown entries and returns the nullity.
    fn nullity_by_elimination(gens: &[ComplexMatrix]) -> usize {
        let mut rows: Vec<[Complex; 4]> = Vec::new();
        for g in gens {
            for i in 0..2 {
                for j in 0..2 {
                    // (xg − gx)_ij = Σ_k x_ik g_kj − g_ik x_kj, x_pq ↦ column 2p+q
                    let mut row = [ZERO; 4];
                    for k in 0..2 {
                        row[2 * i + k] += g.get(k, j);
                        row[2 * k + j] -= g.get(i, k);
                    }
                    rows.push(row);
                }
            }
        }
        let mut rank = 0;
        for col in 0..4 {
            let Some(p) = (rank..rows.len()).max_by(|&a, &b| rows[a][col].norm().total_cmp(&rows[b][col].norm())) else {
                break;
            };
            if rows[p][col].norm() < 1e-12 {
                continue;
            }
            rows.swap(rank, p);
            let pivot = rows[rank];
            for r in 0..rows.len() {
                if r != rank {
                    let f = rows[r][col] / pivot[col];
                    for c in 0..4 {
                        rows[r][c] -= f * pivot[c];
                    }
                }
            }
            rank += 1;
        }
        4 - rank
    }

    #[test]
    fn identity_generator_gives_full_space() {
        let basis = commutant_basis(&[ComplexMatrix::identity(2)], 2).unwrap();
        assert_eq!(basis.len(), 4);
        assert_eq!(nullity_by_elimination(&[ComplexMatrix::identity(2)]), 4);
    }

    #[test]
    fn empty_generators_give_full_space() {
        assert_eq!(commutant_basis(&[], 3).unwrap().len(), 9);
    }

    #[test]
    fn matrix_units_give_scalars() {
        let gens: Vec<_> = (0..2).flat_map(|i| (0..2).map(move |j| ComplexMatrix::unit(2, i, j))).collect();
        assert_eq!(nullity_by_elimination(&gens), 1);
        let basis = commutant_basis(&gens, 2).unwrap();
        assert_eq!(basis.len(), 1);
        let x = &basis[0];
        let s = x.get(0, 0);
        assert!((s.norm() - 0.5_f64.sqrt()).abs() < 1e-12);
        assert!((x - &ComplexMatrix::identity(2).scale(s)).max_abs() < 1e-12);
    }

    #[test]
    fn diagonal_generator_gives_diagonals() {
        let g = ComplexMatrix::from_real_diagonal(&[1.0, 2.0]);
        assert_eq!(nullity_by_elimination(std::slice::from_ref(&g)), 2);
        let basis = commutant_basis(std::slice::from_ref(&g), 2).unwrap();
        assert_eq!(basis.len(), 2);
        for x in &basis {
            assert!(x.get(0, 1).norm() < 1e-12 && x.get(1, 0).norm() < 1e-12);
        }
        assert!(max_residual(&basis, &[g]) < 1e-8);
    }

    #[test]
    fn non_star_closed_generator() {
        // commutant of E_12 is span{1, E_12}; not closed under adjoints
        let g = ComplexMatrix::unit(2, 0, 1);
        assert_eq!(nullity_by_elimination(std::slice::from_ref(&g)), 2);
        let basis = commutant_basis(std::slice::from_ref(&g), 2).unwrap();
        assert_eq!(basis.len(), 2);
        assert!(max_residual(&basis, &[g]) < 1e-8);
    }

    #[test]
    fn both_paths_agree_on_star_closed_sets() {
        // block diagonal M_1 ⊕ M_2 has commutant C ⊕ C
        let mut gens = vec![ComplexMatrix::unit(3, 0, 0)];
        for i in 1..3 {
            for j in 1..3 {
                gens.push(ComplexMatrix::unit(3, i, j));
            }
        }
        let fast = commutant_basis(&gens, 3).unwrap();
        let all: Vec<_> = (0..3).flat_map(|i| (0..3).map(move |j| ComplexMatrix::unit(3, i, j))).collect();
        let slow = restrict_nullspace(&all, &gens, COMMUTANT_TOL);
        assert_eq!(fast.len(), 2);
        assert_eq!(slow.len(), 2);
        let span = SpanBasis::new(3, 3, &slow, 1e-10);
        for x in &fast {
            assert!(span.residual_norm(x) < 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let r = commutant_basis(&[ComplexMatrix::identity(3)], 2);
        assert!(matches!(r, Err(IodError::DimensionMismatch { expected: 2, found: 3 })));
    }
}
