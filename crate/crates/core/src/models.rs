//! Concrete algebras: matrix-unit families with coefficients `λ_ij`, and the
//! finite `C(X) ⊗ M_n` model with `X` a set of `m` points.
//!
//! Layout of `C(X) ⊗ M_n` on `C^{n·m}`: the coordinate `(i, x)` (matrix row
//! `i`, point `x`) is index `i·m + x`. Block `(i, j)` of size `m×m` holds the
//! `C(X)` entry as a diagonal matrix, so `δ_x ⊗ e_ij` is the matrix unit at
//! `(i·m + x, j·m + x)`. Basis order is `x` outermost, then `i`, then `j`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{IodError, Result};
use crate::iod::IodElement;
use crate::lazy::LazyBlockFamily;
use crate::matrix::{commutant_basis, right_nullspace, spectral_norm, Complex, ComplexMatrix, SpanBasis};
use crate::projections::{Projection, ProjectionFamily};
use crate::random;

/// Finitely supported coefficients `λ_ij` on the matrix units `e_ij`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedUnitFamily {
    coefficients: BTreeMap<(usize, usize), Complex>,
    claimed_bound: f64,
}

impl WeightedUnitFamily {
    pub fn new(coefficients: impl IntoIterator<Item = ((usize, usize), Complex)>, claimed_bound: f64) -> Result<Self> {
        if !(claimed_bound.is_finite() && claimed_bound >= 0.0) {
            return Err(IodError::InvalidParameters(format!(
                "claimed bound must be finite and nonnegative, got {claimed_bound}"
            )));
        }
        let mut map = BTreeMap::new();
        for ((i, j), z) in coefficients {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(IodError::NonFinite { row: i, col: j });
            }
            if z != Complex::new(0.0, 0.0) {
                map.insert((i, j), z);
            }
        }
        Ok(Self {
            coefficients: map,
            claimed_bound,
        })
    }

    pub fn coefficients(&self) -> &BTreeMap<(usize, usize), Complex> {
        &self.coefficients
    }

    pub fn claimed_bound(&self) -> f64 {
        self.claimed_bound
    }

    /// `1 + max(i, j)` over the support; 0 when empty.
    pub fn support_size(&self) -> usize {
        self.coefficients.keys().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0)
    }

    /// `Λ = (λ_ij)` on the support.
    pub fn dense(&self) -> ComplexMatrix {
        let n = self.support_size();
        let mut m = ComplexMatrix::zeros(n, n);
        for (&(i, j), &z) in &self.coefficients {
            m.set(i, j, z);
        }
        m
    }

    pub fn lazy(&self) -> Result<LazyBlockFamily> {
        let coefficients = self.coefficients.clone();
        LazyBlockFamily::new("weighted-units", 1, self.claimed_bound, move |i, j| {
            ComplexMatrix::from_diagonal(&[coefficients.get(&(i, j)).copied().unwrap_or_default()])
        })
    }

    /// The element `{λ_ij e_ij}` over the singleton family of the support.
    pub fn materialize(&self) -> Result<(Arc<ProjectionFamily>, IodElement)> {
        self.lazy()?.materialize(self.support_size().max(1))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct L2Options {
    pub samples: usize,
    pub seed: u64,
    /// Power-iteration steps applied to each sampled vector.
    pub refine_steps: usize,
    pub tol: f64,
}

impl Default for L2Options {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0,
            refine_steps: 4,
            tol: crate::DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L2Report {
    pub samples: usize,
    pub claimed_bound: f64,
    pub max_ratio: f64,
    /// `max_ratio ≤ K + tol`.
    pub within_bound: bool,
    pub exact_norm: f64,
    pub iod_norm: f64,
    /// `max_ratio ≤ exact_norm ≤ iod_norm`, each within `tol · max(1, ·)`.
    pub consistent: bool,
}

/// `√(Σ_j |Σ_i λ_ij x_i|² / Σ_i |x_i|²)`, i.e. `‖Λᵀx‖ / ‖x‖`.
pub fn l2_ratio(lambda: &ComplexMatrix, x: &[Complex]) -> f64 {
    let den: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    if den == 0.0 {
        return 0.0;
    }
    let num: f64 = (0..lambda.cols())
        .map(|j| (0..lambda.rows()).map(|i| lambda.get(i, j) * x[i]).sum::<Complex>().norm_sqr())
        .sum();
    (num / den).sqrt()
}

/// Samples `‖Λᵀx‖ / ‖x‖` at seeded complex Gaussian vectors `x`, each pushed
/// through `refine_steps` power-iteration steps for `(Λᵀ)*Λᵀ`, and compares
/// the maximum with the claimed bound, the exact operator norm, and the norm
/// of the materialized block family.
pub fn l2_bound_check(w: &WeightedUnitFamily, opts: L2Options) -> Result<L2Report> {
    if opts.samples == 0 {
        return Err(IodError::InvalidParameters("samples must be at least 1".into()));
    }
    let lambda = w.dense();
    let n = lambda.rows();
    let k = w.claimed_bound();
    if n == 0 {
        return Ok(L2Report {
            samples: opts.samples,
            claimed_bound: k,
            max_ratio: 0.0,
            within_bound: true,
            exact_norm: 0.0,
            iod_norm: 0.0,
            consistent: true,
        });
    }
    let lt = lambda.transpose();
    let gram = &lt.adjoint() * &lt;
    let mut rng = random::seeded(opts.seed);
    let mut max_ratio = 0.0_f64;
    for _ in 0..opts.samples {
        let mut x: Vec<Complex> = (0..n).map(|_| random::gaussian(&mut rng)).collect();
        for _ in 0..opts.refine_steps {
            let y: Vec<Complex> = (0..n).map(|r| (0..n).map(|c| gram.get(r, c) * x[c]).sum()).collect();
            let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            x = y.into_iter().map(|z| z / norm).collect();
        }
        max_ratio = max_ratio.max(l2_ratio(&lambda, &x));
    }
    let exact_norm = spectral_norm(&lambda);
    let iod_norm = w.materialize()?.1.norm();
    let slack = |v: f64| opts.tol * v.max(1.0);
    Ok(L2Report {
        samples: opts.samples,
        claimed_bound: k,
        max_ratio,
        within_bound: max_ratio <= k + slack(k),
        exact_norm,
        iod_norm,
        consistent: max_ratio <= exact_norm + slack(exact_norm) && exact_norm <= iod_norm + slack(iod_norm),
    })
}

#[derive(Clone, Debug)]
pub struct CxMnModel {
    m: usize,
    n: usize,
    basis: Vec<ComplexMatrix>,
    abelian_projections: Vec<Projection>,
}

/// `C(X) ⊗ M_n` for `X` with `m` points, in the layout described at the top
/// of this module.
pub fn build_cx_mn(m: usize, n: usize) -> Result<CxMnModel> {
    if m == 0 || n == 0 {
        return Err(IodError::InvalidParameters(format!("need m, n >= 1, got m = {m}, n = {n}")));
    }
    let dim = m * n;
    let mut basis = Vec::with_capacity(m * n * n);
    for x in 0..m {
        for i in 0..n {
            for j in 0..n {
                basis.push(ComplexMatrix::unit(dim, i * m + x, j * m + x));
            }
        }
    }
    let abelian_projections = (0..n)
        .map(|i| {
            let diag: Vec<f64> = (0..dim).map(|r| if r / m == i { 1.0 } else { 0.0 }).collect();
            Projection::new(ComplexMatrix::from_real_diagonal(&diag), 0.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CxMnModel {
        m,
        n,
        basis,
        abelian_projections,
    })
}

impl CxMnModel {
    pub fn points(&self) -> usize {
        self.m
    }

    pub fn matrix_size(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m * self.n
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn abelian_projections(&self) -> &[Projection] {
        &self.abelian_projections
    }

    pub fn family(&self) -> ProjectionFamily {
        ProjectionFamily::new(
            self.dim(),
            self.abelian_projections.iter().map(|p| p.matrix().clone()).collect(),
        )
        .expect("abelian projections have the model dimension")
    }

    /// `Σ_i e_i`, which is exactly the identity.
    pub fn projection_sum(&self) -> ComplexMatrix {
        let mut s = ComplexMatrix::zeros(self.dim(), self.dim());
        for p in &self.abelian_projections {
            s = &s + p.matrix();
        }
        s
    }

    fn span(&self) -> SpanBasis {
        SpanBasis::new(self.dim(), self.dim(), &self.basis, 1e-10)
    }
}

/// Outcome of the type `I_n` checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeInReport {
    /// Largest Frobenius distance from a product of two basis elements to
    /// the span.
    pub closure_residual: f64,
    /// Dimension of the commutant of the basis intersected with its span.
    pub center_dim: usize,
    /// Per `e_i`: whether `e_i·span·e_i` is commutative.
    pub abelian_ok: Vec<bool>,
    /// Whether the `e_i` form a valid family and the blocks `e_i b e_j` of
    /// every basis element `b` lie in the span and sum back to `b`.
    pub decomposition_ok: bool,
}

impl TypeInReport {
    /// All checks at their thresholds, with center dimension `m`.
    pub fn passes(&self, m: usize) -> bool {
        self.closure_residual <= CHECK_TOL
            && self.center_dim == m
            && self.abelian_ok.iter().all(|&b| b)
            && self.decomposition_ok
    }
}

/// Threshold for closure, commutator and decomposition residuals.
pub const CHECK_TOL: f64 = 1e-9;

/// Singular-value threshold deciding the center dimension.
pub const CENTER_TOL: f64 = 1e-7;

pub fn verify_type_in(model: &CxMnModel) -> Result<TypeInReport> {
    let dim = model.dim();
    let span = model.span();

    let mut closure_residual = 0.0_f64;
    for a in &model.basis {
        for b in &model.basis {
            let prod = a * b;
            if !prod.is_zero() {
                closure_residual = closure_residual.max(span.residual_norm(&prod));
            }
        }
    }

    let commutant = commutant_basis(&model.basis, dim)?;
    let center_dim = if commutant.is_empty() {
        0
    } else {
        let residuals: Vec<ComplexMatrix> = commutant.iter().map(|c| span.residual(c)).collect();
        let rows = dim * dim;
        let r = DMatrix::from_fn(rows, residuals.len(), |p, k| residuals[k].as_slice()[p]);
        right_nullspace(r, CENTER_TOL).len()
    };

    let abelian_ok = model
        .abelian_projections
        .iter()
        .map(|e| {
            let compressed: Vec<ComplexMatrix> = model
                .basis
                .iter()
                .map(|b| &(e.matrix() * b) * e.matrix())
                .filter(|c| !c.is_zero())
                .collect();
            let local = SpanBasis::new(dim, dim, &compressed, 1e-10);
            let elems: Vec<ComplexMatrix> = (0..local.rank()).map(|k| local.element(k)).collect();
            elems
                .iter()
                .enumerate()
                .all(|(s, x)| elems[s + 1..].iter().all(|y| x.commutator(y).max_abs() <= CHECK_TOL))
        })
        .collect();

    let family = Arc::new(model.family());
    let mut decomposition_ok = family.validate(CHECK_TOL).is_valid();
    if decomposition_ok {
        for b in &model.basis {
            let x = IodElement::decompose(b, &family)?;
            if (&x.reconstruct() - b).max_abs() > CHECK_TOL
                || x.blocks().any(|(_, blk)| span.residual_norm(blk) > CHECK_TOL)
            {
                decomposition_ok = false;
                break;
            }
        }
    }

    Ok(TypeInReport {
        closure_residual,
        center_dim,
        abelian_ok,
        decomposition_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    /// Rank of the Gram matrix `G_kl = ⟨b_k, b_l⟩` by Gaussian elimination.
    fn gram_rank(basis: &[ComplexMatrix]) -> usize {
        let k = basis.len();
        let mut g: Vec<Vec<Complex>> = (0..k).map(|a| (0..k).map(|b| basis[a].inner(&basis[b])).collect()).collect();
        let mut rank = 0;
        for col in 0..k {
            let Some(p) = (rank..k).find(|&r| g[r][col].norm() > 1e-12) else {
                continue;
            };
            g.swap(rank, p);
            for r in 0..k {
                if r != rank {
                    let f = g[r][col] / g[rank][col];
                    for cc in 0..k {
                        let sub = f * g[rank][cc];
                        g[r][cc] -= sub;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn single_unit_coefficient() {
        let w = WeightedUnitFamily::new([((0, 1), c(1.0))], 1.0).unwrap();
        let r = l2_bound_check(&w, L2Options { samples: 200, ..Default::default() }).unwrap();
        assert!(r.max_ratio <= 1.0 + 1e-12);
        assert!((r.exact_norm - 1.0).abs() < 1e-12);
        assert!(r.within_bound && r.consistent);
    }

    #[test]
    fn diagonal_two_violates_unit_bound() {
        let w = WeightedUnitFamily::new([((0, 0), c(2.0))], 1.0).unwrap();
        let r = l2_bound_check(&w, L2Options { samples: 10, ..Default::default() }).unwrap();
        assert!(!r.within_bound);
        assert!((r.exact_norm - 2.0).abs() < 1e-12);
        assert!((r.max_ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_support() {
        let w = WeightedUnitFamily::new([], 0.0).unwrap();
        let r = l2_bound_check(&w, L2Options::default()).unwrap();
        assert_eq!(r.max_ratio, 0.0);
        assert!(r.within_bound);
        assert!(l2_bound_check(&w, L2Options { samples: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn random_support_sampling_approaches_norm() {
        let mut rng = random::seeded(31);
        let lambda = random::gaussian_matrix(&mut rng, 5, 5);
        let exact = spectral_norm(&lambda);
        let coeffs = lambda.nonzeros().into_iter().map(|(i, j, z)| ((i, j), z));
        let w = WeightedUnitFamily::new(coeffs, exact).unwrap();
        let r = l2_bound_check(&w, L2Options { samples: 1000, seed: 9, ..Default::default() }).unwrap();
        assert!(r.within_bound && r.consistent);
        assert!(r.max_ratio >= 0.95 * exact);
        assert!((r.iod_norm - exact).abs() <= 1e-9 * exact);
    }

    #[test]
    fn ratio_uses_transpose() {
        // Λ = e_01 maps x to (Λᵀx)_1 = x_0
        let lambda = ComplexMatrix::unit(2, 0, 1);
        assert_eq!(l2_ratio(&lambda, &[c(1.0), c(0.0)]), 1.0);
        assert_eq!(l2_ratio(&lambda, &[c(0.0), c(1.0)]), 0.0);
    }

    #[test]
    fn model_one_point() {
        let model = build_cx_mn(1, 2).unwrap();
        let units: Vec<_> = (0..2).flat_map(|i| (0..2).map(move |j| ComplexMatrix::unit(2, i, j))).collect();
        assert_eq!(model.basis(), units.as_slice());
        assert_eq!(model.abelian_projections()[0].matrix(), &ComplexMatrix::unit(2, 0, 0));
        assert_eq!(model.abelian_projections()[1].matrix(), &ComplexMatrix::unit(2, 1, 1));
        let r = verify_type_in(&model).unwrap();
        assert_eq!(r.center_dim, 1);
        assert!(r.passes(1));
    }

    #[test]
    fn model_commutative() {
        let model = build_cx_mn(2, 1).unwrap();
        assert_eq!(model.basis(), &[ComplexMatrix::unit(2, 0, 0), ComplexMatrix::unit(2, 1, 1)]);
        assert_eq!(model.abelian_projections().len(), 1);
        assert_eq!(model.abelian_projections()[0].matrix(), &ComplexMatrix::identity(2));
        let r = verify_type_in(&build_cx_mn(3, 1).unwrap()).unwrap();
        assert_eq!(r.center_dim, 3);
        assert!(r.passes(3));
    }

    #[test]
    fn model_gram_rank() {
        let model = build_cx_mn(2, 2).unwrap();
        assert_eq!(model.basis().len(), 8);
        assert_eq!(gram_rank(model.basis()), 8);
        assert_eq!(model.projection_sum(), ComplexMatrix::identity(4));
        for p in model.abelian_projections() {
            assert_eq!(p.rank(), 2);
        }
    }

    #[test]
    fn model_two_points_three_by_three() {
        let model = build_cx_mn(2, 3).unwrap();
        let r = verify_type_in(&model).unwrap();
        assert_eq!(r.center_dim, 2);
        assert_eq!(r.abelian_ok, vec![true; 3]);
        assert!(r.closure_residual <= 1e-9);
        assert!(r.decomposition_ok);
        let json = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["abelian_ok", "center_dim", "closure_residual", "decomposition_ok"]);
    }

    #[test]
    fn center_commutes_with_basis() {
        let model = build_cx_mn(3, 2).unwrap();
        let center = commutant_basis(model.basis(), model.dim()).unwrap();
        assert_eq!(center.len(), 3);
        for z in &center {
            for b in model.basis() {
                assert!(z.commutator(b).frobenius_norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn rejects_empty_model() {
        assert!(build_cx_mn(0, 2).is_err());
        assert!(build_cx_mn(2, 0).is_err());
    }
}
