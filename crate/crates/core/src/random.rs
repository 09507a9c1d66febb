//! Seeded random instances: Gaussian matrices, Haar unitaries, random
//! compositions. All draws go through [`ChaCha8Rng`], so a seed fixes every
//! instance bit for bit across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matrix::{Complex, ComplexMatrix};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> Complex {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(re, im)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn hermitian_matrix(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    gaussian_matrix(rng, dim, dim).hermitian_part()
}

/// `g g*` for a Gaussian `g`, scaled by `scale`.
pub fn psd_matrix(rng: &mut impl Rng, dim: usize, scale: f64) -> ComplexMatrix {
    let g = gaussian_matrix(rng, dim, dim);
    (&g * &g.adjoint()).hermitian_part().scale_real(scale)
}

/// Haar-distributed unitary: Gram-Schmidt (with reorthogonalization) on the
/// columns of a Gaussian matrix, which leaves the R factor with a positive
/// diagonal.
pub fn unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, dim, dim);
    let mut cols: Vec<Vec<Complex>> = (0..dim).map(|j| (0..dim).map(|i| g.get(i, j)).collect()).collect();
    for j in 0..dim {
        for _ in 0..2 {
            for k in 0..j {
                let proj: Complex = (0..dim).map(|i| cols[k][i].conj() * cols[j][i]).sum();
                for i in 0..dim {
                    let sub = proj * cols[k][i];
                    cols[j][i] -= sub;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut cols[j] {
            *z /= norm;
        }
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Uniform random composition of `total` into at most `max_parts` positive
/// parts.
pub fn composition(rng: &mut impl Rng, total: usize, max_parts: usize) -> Vec<usize> {
    assert!(total >= 1 && max_parts >= 1);
    let parts = rng.random_range(1..=max_parts.min(total));
    // choose parts-1 distinct cut points in 1..total
    let mut cuts: Vec<usize> = (1..total).collect();
    for i in 0..parts - 1 {
        let j = rng.random_range(i..cuts.len());
        cuts.swap(i, j);
    }
    let mut chosen: Vec<usize> = cuts[..parts - 1].to_vec();
    chosen.sort_unstable();
    let mut sizes = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in chosen.into_iter().chain(std::iter::once(total)) {
        sizes.push(c - prev);
        prev = c;
    }
    sizes
}
