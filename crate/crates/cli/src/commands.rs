//! Subcommand implementations. Each returns the text to emit and an exit
//! status, or a [`CliError`] carrying the status for the failure class.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use iod_core::iod::{CornerSweep, IodDocument, IodElement};
use iod_core::lazy::{builtin_family, certify_bound, truncated_norm_curve, Builtin};
use iod_core::models::{build_cx_mn, verify_type_in};
use iod_core::{ComplexMatrix, IodError, ProjectionFamily};
use serde::{Deserialize, Serialize};

use crate::suites::{run_suite, Suite, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

/// Default cap on `m·n` for `center`.
pub const DEFAULT_CENTER_CAP: usize = 64;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn precondition(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PRECONDITION,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<IodError> for CliError {
    fn from(e: IodError) -> Self {
        let code = match &e {
            IodError::Json(_)
            | IodError::UnknownFamily(_)
            | IodError::InvalidParameters(_)
            | IodError::InvalidSchedule
            | IodError::ShapeMismatch { .. }
            | IodError::NonFinite { .. }
            | IodError::UnresolvedFamily(_) => EXIT_USAGE,
            _ => EXIT_PRECONDITION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Text to write and the exit status to finish with.
#[derive(Debug, PartialEq)]
pub struct Output {
    pub text: String,
    pub code: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, code: EXIT_OK }
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("cannot parse {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// A family file: either the full `{"dim", "members"}` form or the
/// shorthand `{"partition": [sizes]}` for a coordinate partition.
#[derive(Deserialize)]
#[serde(untagged)]
enum FamilyFile {
    Partition { partition: Vec<usize> },
    Full(ProjectionFamily),
}

/// Reads a family and requires it to be valid and complete at `tol`.
pub fn load_family(path: &Path, tol: f64) -> CliResult<ProjectionFamily> {
    let family = match parse_json::<FamilyFile>(path)? {
        FamilyFile::Partition { partition } => {
            let dim = partition.iter().sum();
            ProjectionFamily::from_partition(dim, &partition)?
        }
        FamilyFile::Full(f) => f,
    };
    let report = family.validate(tol);
    if !report.is_valid() {
        return Err(CliError::precondition(format!(
            "{} is not a complete orthogonal projection family: {:?}",
            path.display(),
            report.violations
        )));
    }
    Ok(family)
}

/// Reads an element; a family given as a string is a path, taken relative
/// to the element file's directory.
pub fn load_element(path: &Path, tol: f64) -> CliResult<IodElement> {
    let doc: IodDocument = parse_json(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut resolved: Option<CliError> = None;
    let result = IodElement::from_document(doc, |reference| {
        let target: PathBuf = base.join(reference);
        load_family(&target, tol).map_err(|e| {
            let msg = e.message.clone();
            resolved = Some(e);
            IodError::UnresolvedFamily(msg)
        })
    });
    match (result, resolved) {
        (Ok(x), _) => Ok(x),
        (Err(_), Some(e)) => Err(e),
        (Err(e), None) => Err(e.into()),
    }
}

pub fn load_matrix(path: &Path) -> CliResult<ComplexMatrix> {
    parse_json(path)
}

pub fn decompose(input: &Path, family: &Path, family_ref: Option<&str>, tol: f64) -> CliResult<Output> {
    let a = load_matrix(input)?;
    let family = Arc::new(load_family(family, tol)?);
    let x = IodElement::decompose(&a, &family)?;
    let doc = match family_ref {
        Some(r) => x.to_document_with_ref(r),
        None => x.to_document(),
    };
    Ok(Output::ok(to_json(&doc)))
}

pub fn reconstruct(input: &Path, tol: f64) -> CliResult<Output> {
    let x = load_element(input, tol)?;
    Ok(Output::ok(to_json(&x.reconstruct())))
}

#[derive(Serialize)]
struct NormReport {
    norm: f64,
    bound: f64,
    bound_holds: bool,
    sweep: CornerSweep,
}

/// Norm, bound check and corner sweep; exit 4 when the bound fails or the
/// sweep finds a violation.
pub fn norm(input: &Path, sweep_cap: usize, tol: f64) -> CliResult<Output> {
    let x = load_element(input, tol)?;
    let sweep = x.corner_sweep(sweep_cap, tol);
    let report = NormReport {
        norm: sweep.full_norm,
        bound: x.bound(),
        bound_holds: x.bound_holds(tol),
        sweep,
    };
    let code = if report.bound_holds && report.sweep.violations.is_empty() {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    };
    Ok(Output {
        text: to_json(&report),
        code,
    })
}

#[derive(Serialize)]
struct OrderReport {
    leq: bool,
    geq: bool,
}

pub fn order(left: &Path, right: &Path, tol: f64) -> CliResult<Output> {
    let x = load_element(left, tol)?;
    let y = load_element(right, tol)?;
    let report = OrderReport {
        leq: x.leq(&y, tol)?,
        geq: y.leq(&x, tol)?,
    };
    Ok(Output::ok(to_json(&report)))
}

pub fn star(left: &Path, right: &Path, tol: f64) -> CliResult<Output> {
    let x = load_element(left, tol)?;
    let y = load_element(right, tol)?;
    Ok(Output::ok(to_json(&x.star_product(&y)?)))
}

pub fn verify(suite: &str, trials: usize, seed: u64, dim: Option<usize>, tol: f64) -> CliResult<Output> {
    let suite: Suite = suite.parse().map_err(|e: crate::suites::UnknownSuite| CliError::usage(e.to_string()))?;
    if dim == Some(0) {
        return Err(CliError::usage("dimension must be at least 1"));
    }
    let result = run_suite(suite, &SuiteConfig { trials, seed, dim, tol });
    let code = if result.passed() { EXIT_OK } else { EXIT_VERIFICATION };
    Ok(Output {
        text: to_json(&result),
        code,
    })
}

/// CSV of corner norms for a built-in family. With a schedule the norms are
/// taken at exactly those truncations; otherwise the bound is certified
/// along the doubling schedule up to `max_n`. The one-line verdict is
/// returned separately for standard error.
pub fn converge(family: &str, bound: Option<f64>, max_n: usize, schedule: Option<&[usize]>) -> CliResult<(Output, String)> {
    let builtin = Builtin::parse(family)?;
    let family = builtin_family(&builtin, bound)?;
    let report = match schedule {
        Some(s) => truncated_norm_curve(&family, s)?,
        None => certify_bound(&family, max_n)?,
    };
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    let code = if report.certified { EXIT_OK } else { EXIT_VERIFICATION };
    Ok((
        Output {
            text: String::from_utf8(buf).expect("csv is utf-8"),
            code,
        },
        report.summary(),
    ))
}

pub fn center(m: usize, n: usize, cap: usize) -> CliResult<Output> {
    if m == 0 || n == 0 {
        return Err(CliError::precondition(format!("need m, n >= 1, got m = {m}, n = {n}")));
    }
    if m.saturating_mul(n) > cap {
        return Err(CliError::precondition(format!("m·n = {} exceeds the cap {cap}", m * n)));
    }
    let model = build_cx_mn(m, n)?;
    let report = verify_type_in(&model)?;
    let code = if report.passes(m) { EXIT_OK } else { EXIT_VERIFICATION };
    Ok(Output {
        text: to_json(&report),
        code,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes() {
        assert_eq!(CliError::from(IodError::DimensionMismatch { expected: 2, found: 3 }).code, EXIT_PRECONDITION);
        assert_eq!(CliError::from(IodError::UnknownFamily("x".into())).code, EXIT_USAGE);
        assert_eq!(CliError::from(IodError::FamilyMismatch).code, EXIT_PRECONDITION);
    }

    #[test]
    fn center_cap_and_examples() {
        assert_eq!(center(10, 10, DEFAULT_CENTER_CAP).unwrap_err().code, EXIT_PRECONDITION);
        let out = center(1, 2, DEFAULT_CENTER_CAP).unwrap();
        assert_eq!(out.code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&out.text).unwrap();
        assert_eq!(v["center_dim"], 1);
        let out = center(3, 2, DEFAULT_CENTER_CAP).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.text).unwrap();
        assert_eq!(v["center_dim"], 3);
        assert_eq!(out.code, EXIT_OK);
    }

    #[test]
    fn verify_unknown_suite() {
        let e = verify("unknown", 1, 0, None, 1e-9).unwrap_err();
        assert_eq!(e.code, EXIT_USAGE);
        assert!(e.message.contains("lemma2"));
    }

    #[test]
    fn converge_examples() {
        let (out, summary) = converge("diagonal:linear:1:1", Some(10.0), 32, None).unwrap();
        assert_eq!(out.code, EXIT_VERIFICATION);
        assert!(out.text.lines().any(|l| l.starts_with("11,") && l.ends_with(",false")));
        assert!(summary.contains("refuted at n = 11"));

        let (out, summary) = converge("band:1:1", Some(3.0), 64, None).unwrap();
        assert_eq!(out.code, EXIT_OK);
        assert!(summary.contains("certified up to n = 64"));

        let (out, _) = converge("unit:0:1", None, 16, Some(&[2, 4, 8])).unwrap();
        let col: Vec<&str> = out.text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
        assert!(col.iter().all(|v| v.parse::<f64>().unwrap() == 1.0));

        assert_eq!(converge("spiral", None, 4, None).unwrap_err().code, EXIT_USAGE);
    }
}
