use super::{tol_scale, Complex, ComplexMatrix, ZERO};

/// Orthonormal (Frobenius) basis of the linear span of a set of matrices.
///
/// Basis vectors are kept sparse together with a position index, so
/// projecting a matrix costs time proportional to its nonzeros plus the
/// overlapping basis entries. Spans of matrix units stay exact.
#[derive(Clone, Debug)]
pub struct SpanBasis {
    rows: usize,
    cols: usize,
    vectors: Vec<Vec<(usize, Complex)>>,
    index: Vec<Vec<(usize, Complex)>>,
}

impl SpanBasis {
    /// Classical Gram-Schmidt with one reorthogonalization pass. An element
    /// whose remainder has Frobenius norm at most `tol · max(1, ‖e‖_F)` is
    /// treated as dependent.
    pub fn new(rows: usize, cols: usize, elements: &[ComplexMatrix], tol: f64) -> Self {
        let mut span = Self {
            rows,
            cols,
            vectors: Vec::new(),
            index: vec![Vec::new(); rows * cols],
        };
        for e in elements {
            assert_eq!((e.rows(), e.cols()), (rows, cols), "span element shape mismatch");
            let mut v = e.as_slice().to_vec();
            for _ in 0..2 {
                let coef = span.coefficients_of(&v);
                span.subtract(&mut v, &coef);
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > tol * tol_scale(e.frobenius_norm()) {
                let k = span.vectors.len();
                let sparse: Vec<(usize, Complex)> = v
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| **z != ZERO)
                    .map(|(p, z)| (p, z / norm))
                    .collect();
                for &(p, z) in &sparse {
                    span.index[p].push((k, z));
                }
                span.vectors.push(sparse);
            }
        }
        span
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn element(&self, k: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.rows, self.cols);
        for &(p, z) in &self.vectors[k] {
            m.as_mut_slice()[p] = z;
        }
        m
    }

    /// Coordinates `⟨q_k, m⟩` against the orthonormal basis.
    pub fn coefficients(&self, m: &ComplexMatrix) -> Vec<Complex> {
        assert_eq!((m.rows(), m.cols()), (self.rows, self.cols), "span projection shape mismatch");
        self.coefficients_of(m.as_slice())
    }

    /// Component of `m` orthogonal to the span.
    pub fn residual(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let coef = self.coefficients(m);
        let mut out = m.clone();
        self.subtract(out.as_mut_slice(), &coef);
        out
    }

    pub fn residual_norm(&self, m: &ComplexMatrix) -> f64 {
        self.residual(m).frobenius_norm()
    }

    fn coefficients_of(&self, v: &[Complex]) -> Vec<Complex> {
        let mut coef = vec![ZERO; self.vectors.len()];
        for (p, &z) in v.iter().enumerate() {
            if z == ZERO {
                continue;
            }
            for &(k, q) in &self.index[p] {
                coef[k] += q.conj() * z;
            }
        }
        coef
    }

    fn subtract(&self, v: &mut [Complex], coef: &[Complex]) {
        for (k, &c) in coef.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            for &(p, q) in &self.vectors[k] {
                v[p] -= c * q;
            }
        }
    }
}
