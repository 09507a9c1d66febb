//! Block families indexed by all natural numbers, given by a generator
//! `(ξ, η) ↦ b×b block`, together with truncation diagnostics.
//!
//! Membership of such a family in the bounded block space needs
//! `‖Σ_{k,l<n} a_kl‖ ≤ K` for every `n`. Only finitely many `n` can be
//! checked, so [`certify_bound`] can refute a claimed bound but can only
//! certify it up to the largest `n` examined.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{IodError, Result};
use crate::iod::IodElement;
use crate::matrix::{spectral_norm, Complex, ComplexMatrix};
use crate::projections::ProjectionFamily;

/// Absolute slack when comparing corner norms against a claimed bound.
pub const BOUND_SLACK: f64 = 1e-9;

pub type BlockGenerator = Arc<dyn Fn(usize, usize) -> ComplexMatrix + Send + Sync>;

#[derive(Clone)]
pub struct LazyBlockFamily {
    name: String,
    block_size: usize,
    claimed_bound: f64,
    generator: BlockGenerator,
}

impl fmt::Debug for LazyBlockFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LazyBlockFamily")
            .field("name", &self.name)
            .field("block_size", &self.block_size)
            .field("claimed_bound", &self.claimed_bound)
            .finish_non_exhaustive()
    }
}

impl LazyBlockFamily {
    /// The generator must be pure: equal arguments give identical blocks.
    pub fn new(
        name: impl Into<String>,
        block_size: usize,
        claimed_bound: f64,
        generator: impl Fn(usize, usize) -> ComplexMatrix + Send + Sync + 'static,
    ) -> Result<Self> {
        if block_size == 0 {
            return Err(IodError::InvalidParameters("block size must be positive".into()));
        }
        if !(claimed_bound.is_finite() && claimed_bound >= 0.0) {
            return Err(IodError::InvalidParameters(format!(
                "claimed bound must be finite and nonnegative, got {claimed_bound}"
            )));
        }
        Ok(Self {
            name: name.into(),
            block_size,
            claimed_bound,
            generator: Arc::new(generator),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn claimed_bound(&self) -> f64 {
        self.claimed_bound
    }

    pub fn with_claimed_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(IodError::InvalidParameters(format!(
                "claimed bound must be finite and nonnegative, got {bound}"
            )));
        }
        self.claimed_bound = bound;
        Ok(self)
    }

    /// Block `(ξ, η)`, checked for shape and finiteness.
    pub fn block(&self, xi: usize, eta: usize) -> Result<ComplexMatrix> {
        let m = (self.generator)(xi, eta);
        if (m.rows(), m.cols()) != (self.block_size, self.block_size) {
            return Err(IodError::DimensionMismatch {
                expected: self.block_size,
                found: if m.rows() != self.block_size { m.rows() } else { m.cols() },
            });
        }
        if !m.is_finite() {
            return Err(IodError::InvalidParameters(format!("block ({xi}, {eta}) is not finite")));
        }
        Ok(m)
    }

    /// Dense `n·b × n·b` matrix `Σ_{k,l<n} a_kl`.
    pub fn corner_matrix(&self, n: usize) -> Result<ComplexMatrix> {
        let b = self.block_size;
        let dim = n * b;
        let mut out = ComplexMatrix::zeros(dim, dim);
        for xi in 0..n {
            for eta in 0..n {
                let m = self.block(xi, eta)?;
                for (r, c, z) in m.nonzeros() {
                    out.set(xi * b + r, eta * b + c, z);
                }
            }
        }
        Ok(out)
    }

    pub fn corner_norm(&self, n: usize) -> Result<f64> {
        Ok(spectral_norm(&self.corner_matrix(n)?))
    }

    /// The first `n` indices as an element over the partition family
    /// `[b; n]` of dimension `n·b`. Its bound is its norm.
    pub fn materialize(&self, n: usize) -> Result<(Arc<ProjectionFamily>, IodElement)> {
        if n == 0 {
            return Err(IodError::InvalidParameters("materialize needs n >= 1".into()));
        }
        let b = self.block_size;
        let dim = n * b;
        let family = Arc::new(ProjectionFamily::from_partition(dim, &vec![b; n])?);
        let mut blocks = Vec::new();
        for xi in 0..n {
            for eta in 0..n {
                let m = self.block(xi, eta)?;
                if m.is_zero() {
                    continue;
                }
                let mut full = ComplexMatrix::zeros(dim, dim);
                for (r, c, z) in m.nonzeros() {
                    full.set(xi * b + r, eta * b + c, z);
                }
                blocks.push(((xi, eta), full));
            }
        }
        let element = IodElement::from_blocks(family.clone(), blocks, 0.0)?;
        let bound = element.norm();
        Ok((family, element.with_bound(bound)))
    }
}

/// A real sequence `ξ ↦ λ_ξ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Sequence {
    Constant(f64),
    /// `1 / (ξ + 1)`
    Harmonic,
    /// `offset + slope · ξ`
    Linear { offset: f64, slope: f64 },
    /// Listed values, zero beyond the end.
    List(Vec<f64>),
}

impl Sequence {
    pub fn value(&self, xi: usize) -> f64 {
        match self {
            Sequence::Constant(c) => *c,
            Sequence::Harmonic => 1.0 / (xi as f64 + 1.0),
            Sequence::Linear { offset, slope } => offset + slope * xi as f64,
            Sequence::List(v) => v.get(xi).copied().unwrap_or(0.0),
        }
    }

    /// `sup_ξ |λ_ξ|`, or `None` when unbounded.
    pub fn sup_abs(&self) -> Option<f64> {
        match self {
            Sequence::Constant(c) => Some(c.abs()),
            Sequence::Harmonic => Some(1.0),
            Sequence::Linear { offset, slope } if *slope == 0.0 => Some(offset.abs()),
            Sequence::Linear { .. } => None,
            Sequence::List(v) => Some(v.iter().fold(0.0, |m, x| m.max(x.abs()))),
        }
    }

    fn parse(parts: &[&str]) -> Result<Self> {
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| IodError::InvalidParameters(format!("not a finite number: {s:?}")))
        };
        match parts {
            ["const", c] => Ok(Sequence::Constant(num(c)?)),
            ["harmonic"] => Ok(Sequence::Harmonic),
            ["linear", offset, slope] => Ok(Sequence::Linear {
                offset: num(offset)?,
                slope: num(slope)?,
            }),
            ["list", values] => Ok(Sequence::List(values.split(',').map(num).collect::<Result<_>>()?)),
            _ => Err(IodError::InvalidParameters(format!(
                "bad sequence {:?}; expected const:C, harmonic, linear:OFFSET:SLOPE or list:V1,V2,...",
                parts.join(":")
            ))),
        }
    }
}

/// The built-in families, all with `1×1` blocks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Builtin {
    /// A single `1` at `(i, j)`.
    Unit { i: usize, j: usize },
    /// `λ_ξ` at `(ξ, ξ)`.
    Diagonal(Sequence),
    /// `value` wherever `|ξ − η| ≤ width`.
    Band { width: usize, value: f64 },
    /// `w_ξ` at `(ξ, ξ + 1)`.
    Shift(Sequence),
}

impl Builtin {
    pub const NAMES: [&'static str; 4] = ["unit", "diagonal", "band", "shift"];

    /// Parses `unit:I:J`, `diagonal:SEQ`, `band:WIDTH:VALUE` or `shift:SEQ`,
    /// where `SEQ` is `const:C`, `harmonic`, `linear:OFFSET:SLOPE` or
    /// `list:V1,V2,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let index = |s: &str| -> Result<usize> {
            s.trim()
                .parse::<usize>()
                .map_err(|_| IodError::InvalidParameters(format!("not an index: {s:?}")))
        };
        match parts.as_slice() {
            ["unit", i, j] => Ok(Builtin::Unit { i: index(i)?, j: index(j)? }),
            ["diagonal", rest @ ..] => Ok(Builtin::Diagonal(Sequence::parse(rest)?)),
            ["shift", rest @ ..] => Ok(Builtin::Shift(Sequence::parse(rest)?)),
            ["band", width, value] => {
                let value: f64 = value
                    .trim()
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| IodError::InvalidParameters(format!("not a finite number: {value:?}")))?;
                Ok(Builtin::Band { width: index(width)?, value })
            }
            [name, ..] if Self::NAMES.contains(name) => Err(IodError::InvalidParameters(format!("bad parameters in {text:?}"))),
            [name, ..] => Err(IodError::UnknownFamily((*name).to_owned())),
            [] => Err(IodError::UnknownFamily(String::new())),
        }
    }

    /// `sup` of the corner norms where it is known in closed form; `None`
    /// for unbounded sequences.
    pub fn default_bound(&self) -> Option<f64> {
        match self {
            Builtin::Unit { .. } => Some(1.0),
            Builtin::Diagonal(s) | Builtin::Shift(s) => s.sup_abs(),
            Builtin::Band { width, value } => Some((2 * width + 1) as f64 * value.abs()),
        }
    }

    fn label(&self) -> String {
        match self {
            Builtin::Unit { i, j } => format!("unit({i},{j})"),
            Builtin::Diagonal(s) => format!("diagonal({s:?})"),
            Builtin::Band { width, value } => format!("band({width},{value})"),
            Builtin::Shift(s) => format!("shift({s:?})"),
        }
    }
}

/// Builds a built-in family. Without `claimed_bound` the default bound is
/// used; sequences without one (nonconstant linear) then give an error.
pub fn builtin_family(kind: &Builtin, claimed_bound: Option<f64>) -> Result<LazyBlockFamily> {
    let bound = match claimed_bound.or_else(|| kind.default_bound()) {
        Some(k) => k,
        None => {
            return Err(IodError::InvalidParameters(format!(
                "{} is unbounded; a claimed bound is required",
                kind.label()
            )))
        }
    };
    let scalar = |v: f64| ComplexMatrix::from_diagonal(&[Complex::new(v, 0.0)]);
    let name = kind.label();
    match kind.clone() {
        Builtin::Unit { i, j } => {
            LazyBlockFamily::new(name, 1, bound, move |xi, eta| scalar(if (xi, eta) == (i, j) { 1.0 } else { 0.0 }))
        }
        Builtin::Diagonal(s) => {
            LazyBlockFamily::new(name, 1, bound, move |xi, eta| scalar(if xi == eta { s.value(xi) } else { 0.0 }))
        }
        Builtin::Band { width, value } => LazyBlockFamily::new(name, 1, bound, move |xi, eta| {
            scalar(if xi.abs_diff(eta) <= width { value } else { 0.0 })
        }),
        Builtin::Shift(s) => {
            LazyBlockFamily::new(name, 1, bound, move |xi, eta| scalar(if eta == xi + 1 { s.value(xi) } else { 0.0 }))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundViolation {
    pub n: usize,
    pub excess: f64,
}

/// Corner norms at a set of truncations `n`, in increasing order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationReport {
    pub family: String,
    pub claimed_bound: f64,
    pub sizes: Vec<usize>,
    pub norms: Vec<f64>,
    pub certified: bool,
    pub violation: Option<BoundViolation>,
}

impl TruncationReport {
    pub fn largest_n(&self) -> usize {
        self.sizes.last().copied().unwrap_or(0)
    }

    /// Whether the norms are nondecreasing within `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.norms.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    /// One-line verdict. A passing report says "certified up to n = N",
    /// which is all a finite check can establish.
    pub fn summary(&self) -> String {
        match &self.violation {
            Some(v) => format!(
                "{}: bound {} refuted at n = {} (excess {:e})",
                self.family, self.claimed_bound, v.n, v.excess
            ),
            None if self.certified => format!(
                "{}: bound {} certified up to n = {}",
                self.family,
                self.claimed_bound,
                self.largest_n()
            ),
            None => format!("{}: bound {} not certified", self.family, self.claimed_bound),
        }
    }

    /// CSV with columns `n, corner_norm, claimed_bound, certified`, one row
    /// per truncation; `certified` is the per-row comparison.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| IodError::InvalidParameters(format!("csv output failed: {e}"));
        out.write_record(["n", "corner_norm", "claimed_bound", "certified"]).map_err(io)?;
        for (&n, &norm) in self.sizes.iter().zip(&self.norms) {
            let ok = norm <= self.claimed_bound + BOUND_SLACK;
            out.write_record([n.to_string(), format!("{norm:.17e}"), self.claimed_bound.to_string(), ok.to_string()])
                .map_err(io)?;
        }
        out.flush()
            .map_err(|e| IodError::InvalidParameters(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

/// `1, 2, 4, …` up to `max_n`, with `max_n` itself appended.
pub fn doubling_schedule(max_n: usize) -> Vec<usize> {
    let mut s = Vec::new();
    let mut n = 1;
    while n <= max_n {
        s.push(n);
        n = match n.checked_mul(2) {
            Some(m) => m,
            None => break,
        };
    }
    if s.last() != Some(&max_n) && max_n >= 1 {
        s.push(max_n);
    }
    s
}

/// Checks `‖corner_n‖ ≤ K + 1e-9` along the doubling schedule. On the first
/// failure, bisects back to the smallest failing `n` (corner norms are
/// nondecreasing in `n`), records it and stops.
pub fn certify_bound(f: &LazyBlockFamily, max_n: usize) -> Result<TruncationReport> {
    if max_n == 0 {
        return Err(IodError::InvalidParameters("max_n must be at least 1".into()));
    }
    let k = f.claimed_bound();
    let mut evaluated: Vec<(usize, f64)> = Vec::new();
    let mut last_good = 0;
    let mut first_bad = None;
    for n in doubling_schedule(max_n) {
        let norm = f.corner_norm(n)?;
        evaluated.push((n, norm));
        if norm > k + BOUND_SLACK {
            first_bad = Some(n);
            break;
        }
        last_good = n;
    }
    let violation = match first_bad {
        None => None,
        Some(mut hi) => {
            let mut lo = last_good;
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                let norm = f.corner_norm(mid)?;
                evaluated.push((mid, norm));
                if norm > k + BOUND_SLACK {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let norm = evaluated.iter().find(|(n, _)| *n == hi).map(|p| p.1).unwrap_or(f64::NAN);
            Some(BoundViolation { n: hi, excess: norm - k })
        }
    };
    evaluated.sort_by_key(|p| p.0);
    Ok(TruncationReport {
        family: f.name().to_owned(),
        claimed_bound: k,
        sizes: evaluated.iter().map(|p| p.0).collect(),
        norms: evaluated.iter().map(|p| p.1).collect(),
        certified: violation.is_none(),
        violation,
    })
}

/// Corner norms at exactly the given truncations, which must be positive
/// and strictly increasing. Every point is compared against the bound.
pub fn truncated_norm_curve(f: &LazyBlockFamily, schedule: &[usize]) -> Result<TruncationReport> {
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(IodError::InvalidSchedule);
    }
    let k = f.claimed_bound();
    let norms = schedule.iter().map(|&n| f.corner_norm(n)).collect::<Result<Vec<_>>>()?;
    let violation = schedule
        .iter()
        .zip(&norms)
        .find(|(_, &v)| v > k + BOUND_SLACK)
        .map(|(&n, &v)| BoundViolation { n, excess: v - k });
    Ok(TruncationReport {
        family: f.name().to_owned(),
        claimed_bound: k,
        sizes: schedule.to_vec(),
        norms,
        certified: violation.is_none(),
        violation,
    })
}
