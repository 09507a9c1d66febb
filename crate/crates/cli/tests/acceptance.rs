//! Acceptance criteria, one line each. Runs as a plain binary under
//! `cargo test` and exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use iod_cli::suites::{random_net, random_weighted_family, NetKind};
use iod_core::iod::{IodElement, DEFAULT_SWEEP_CAP};
use iod_core::lazy::{builtin_family, certify_bound, truncated_norm_curve, Builtin};
use iod_core::matrix::{is_psd, spectral_norm, Complex, ComplexMatrix};
use iod_core::models::{build_cx_mn, l2_bound_check, verify_type_in, L2Options};
use iod_core::monotone::{blockwise_sup, is_upper_bound};
use iod_core::projections::ProjectionFamily;
use iod_core::random::{self, SeededRng};
use rand::Rng;

const SEED: u64 = 0x1a2b_3c4d;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

struct Case {
    family: Arc<ProjectionFamily>,
    a: ComplexMatrix,
}

/// Dimension in 1..=16, a composition into at most 6 sizes, and a
/// coordinate or Haar-rotated family.
fn random_family(rng: &mut SeededRng) -> Arc<ProjectionFamily> {
    let dim = rng.random_range(1..=16);
    let sizes = random::composition(rng, dim, 6);
    let family = if rng.random_bool(0.5) {
        ProjectionFamily::random(dim, &sizes, rng.random()).unwrap()
    } else {
        ProjectionFamily::from_partition(dim, &sizes).unwrap()
    };
    Arc::new(family)
}

fn cases(seed: u64, count: usize) -> Vec<Case> {
    let mut rng = random::seeded(seed);
    (0..count)
        .map(|_| {
            let family = random_family(&mut rng);
            let d = family.dim();
            let a = random::gaussian_matrix(&mut rng, d, d);
            Case { family, a }
        })
        .collect()
}

fn reconstruction() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for c in cases(SEED, 200) {
        let x = IodElement::decompose(&c.a, &c.family).map_err(|e| e.to_string())?;
        worst = worst.max((&x.reconstruct() - &c.a).max_abs());
    }
    let elapsed = start.elapsed();
    if worst > 1e-11 {
        return Err(format!("worst residual {worst:.2e} > 1e-11"));
    }
    if elapsed > Duration::from_secs(5) {
        return Err(format!("took {elapsed:.2?}, budget 5 s"));
    }
    Ok(format!("200 instances, worst |reconstruct - a| {worst:.2e}, {elapsed:.2?}"))
}

fn norm_coincidence() -> Verdict {
    let mut worst = 0.0_f64;
    let mut violations = 0;
    let mut corners = 0;
    for c in cases(SEED, 200) {
        let x = IodElement::decompose(&c.a, &c.family).map_err(|e| e.to_string())?;
        let exact = spectral_norm(&c.a);
        worst = worst.max((x.norm() - exact).abs() / exact.max(f64::MIN_POSITIVE));
        let sweep = x.corner_sweep(DEFAULT_SWEEP_CAP, 1e-9);
        violations += sweep.violations.len();
        corners += sweep.corners_checked;
    }
    if worst > 1e-9 || violations > 0 {
        return Err(format!("worst relative gap {worst:.2e}, {violations} sweep violations"));
    }
    Ok(format!("worst relative gap {worst:.2e}, {corners} corners swept, 0 violations"))
}

fn multiplication() -> Verdict {
    let mut rng = random::seeded(SEED ^ 3);
    let mut worst_prod = 0.0_f64;
    for _ in 0..200 {
        let f = random_family(&mut rng);
        let d = f.dim();
        let (a, b) = (random::gaussian_matrix(&mut rng, d, d), random::gaussian_matrix(&mut rng, d, d));
        let x = IodElement::decompose(&a, &f).unwrap();
        let y = IodElement::decompose(&b, &f).unwrap();
        let ab = &a * &b;
        let err = spectral_norm(&(&x.star_product(&y).unwrap().reconstruct() - &ab));
        worst_prod = worst_prod.max(err / spectral_norm(&ab));
    }
    let mut worst_assoc = 0.0_f64;
    for _ in 0..100 {
        let f = random_family(&mut rng);
        let d = f.dim();
        let m: Vec<_> = (0..3).map(|_| random::gaussian_matrix(&mut rng, d, d)).collect();
        let [x, y, z] = [0, 1, 2].map(|k| IodElement::decompose(&m[k], &f).unwrap());
        let left = x.star_product(&y).unwrap().star_product(&z).unwrap();
        let right = x.star_product(&y.star_product(&z).unwrap()).unwrap();
        let err = spectral_norm(&(&left.reconstruct() - &right.reconstruct()));
        worst_assoc = worst_assoc.max(err / left.norm().max(f64::MIN_POSITIVE));
    }
    if worst_prod > 1e-9 || worst_assoc > 1e-8 {
        return Err(format!("product {worst_prod:.2e}, associativity {worst_assoc:.2e}"));
    }
    Ok(format!("worst relative product error {worst_prod:.2e}, associativity {worst_assoc:.2e}"))
}

fn involution_and_hermitian() -> Verdict {
    let mut rng = random::seeded(SEED ^ 4);
    let mut worst_adj = 0.0_f64;
    let mut worst_split = 0.0_f64;
    let mut split_fail = 0;
    let mut disagreements = 0;
    for k in 0..200 {
        let f = random_family(&mut rng);
        let d = f.dim();
        // cycle through general, Hermitian and slightly non-Hermitian inputs
        let a = match k % 3 {
            0 => random::gaussian_matrix(&mut rng, d, d),
            1 => random::hermitian_matrix(&mut rng, d),
            _ => {
                let h = random::hermitian_matrix(&mut rng, d);
                &h + &random::gaussian_matrix(&mut rng, d, d).scale_real(1e-6)
            }
        };
        let x = IodElement::decompose(&a, &f).unwrap();
        let adj = IodElement::decompose(&a.adjoint(), &f).unwrap();
        worst_adj = worst_adj.max(x.involution().max_block_difference(&adj));
        let (h1, h2) = x.hermitian_split();
        let back = &h1 + &h2.scale(Complex::new(0.0, 1.0));
        worst_split = worst_split.max(back.max_block_difference(&x));
        if !(h1.is_hermitian_blockwise(1e-9) && h2.is_hermitian_blockwise(1e-9)) {
            split_fail += 1;
        }
        let dense = a.is_hermitian(1e-9 * spectral_norm(&a).max(1.0));
        if x.is_hermitian_blockwise(1e-9) != dense {
            disagreements += 1;
        }
    }
    if worst_adj > 1e-12 || worst_split > 1e-12 || split_fail > 0 || disagreements > 0 {
        return Err(format!(
            "adjoint {worst_adj:.2e}, split {worst_split:.2e}, {split_fail} non-Hermitian parts, {disagreements} disagreements"
        ));
    }
    Ok(format!("adjoint gap {worst_adj:.2e}, split gap {worst_split:.2e}, 0 disagreements in 200"))
}

fn order_unit() -> Verdict {
    let mut rng = random::seeded(SEED ^ 5);
    let tol = 1e-9;
    let mut bracket_fail = 0;
    let mut disagreements = 0;
    let mut antisym_fail = 0;
    let mut positives = 0;
    for k in 0..100 {
        let f = random_family(&mut rng);
        let d = f.dim();
        let h = random::hermitian_matrix(&mut rng, d);
        let x = IodElement::decompose(&h, &f).unwrap();
        let n = x.norm();
        let unit = IodElement::unit(f.clone());
        if !(unit.scale_real(-n).leq(&x, tol).unwrap() && x.leq(&unit.scale_real(n), tol).unwrap()) {
            bracket_fail += 1;
        }
        // partner: PSD gap shifted by a random multiple of the identity, or
        // x itself every fifth instance
        let k_mat = if k % 5 == 0 {
            h.clone()
        } else {
            let shift = rng.random_range(-0.5..0.5);
            let gap = &random::psd_matrix(&mut rng, d, 1.0 / d as f64) + &ComplexMatrix::identity(d).scale_real(shift);
            &h + &gap
        };
        let y = IodElement::decompose(&k_mat, &f).unwrap();
        let le = x.leq(&y, tol).unwrap();
        positives += le as usize;
        if le != is_psd(&(&k_mat - &h), tol).unwrap() {
            disagreements += 1;
        }
        if le && y.leq(&x, tol).unwrap() && (&x - &y).norm() > 1e-8 {
            antisym_fail += 1;
        }
    }
    if bracket_fail + disagreements + antisym_fail > 0 {
        return Err(format!(
            "{bracket_fail} bracket failures, {disagreements} disagreements, {antisym_fail} antisymmetry failures"
        ));
    }
    Ok(format!("100 Hermitian instances bracketed, {positives} ordered pairs, 0 disagreements"))
}

fn monotone_sup() -> Verdict {
    let mut rng = random::seeded(SEED ^ 6);
    let tol = 1e-9;
    let mut worst = 0.0_f64;
    let mut not_upper = 0;
    for k in 0..50 {
        let f = random_family(&mut rng);
        let kind = [NetKind::ScalarRamp, NetKind::PartialDiagonal, NetKind::PsdIncrements][k % 3];
        let inst = random_net(kind, &f, &mut rng, tol).map_err(|e| format!("net {k} ({kind:?}, ranks {:?}): {e}", f.ranks()))?;
        let sup = blockwise_sup(&inst.net, tol, 10_000).map_err(|e| e.to_string())?;
        let limit = IodElement::decompose(&inst.limit, &f).unwrap();
        worst = worst.max(sup.max_block_difference(&limit));
        if !is_upper_bound(&sup, &inst.net, tol).unwrap() {
            not_upper += 1;
        }
    }
    if worst > 1e-7 || not_upper > 0 {
        return Err(format!("worst block gap {worst:.2e}, {not_upper} not upper bounds"));
    }
    Ok(format!("50 nets, worst block gap to ambient limit {worst:.2e}, all upper bounds"))
}

fn matrix_units() -> Verdict {
    let mut rng = random::seeded(SEED ^ 7);
    let mut worst_gap = 0.0_f64;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_reach = f64::INFINITY;
    for _ in 0..50 {
        let w = random_weighted_family(&mut rng, 6).unwrap();
        let r = l2_bound_check(
            &w,
            L2Options {
                samples: 1000,
                seed: rng.random(),
                ..Default::default()
            },
        )
        .unwrap();
        if r.exact_norm == 0.0 {
            continue;
        }
        worst_gap = worst_gap.max((r.exact_norm - r.iod_norm).abs() / r.exact_norm);
        worst_excess = worst_excess.max(r.max_ratio - r.exact_norm);
        worst_reach = worst_reach.min(r.max_ratio / r.exact_norm);
    }
    if worst_gap > 1e-9 || worst_excess > 1e-9 || worst_reach < 0.95 {
        return Err(format!(
            "norm gap {worst_gap:.2e}, ratio excess {worst_excess:.2e}, reach {worst_reach:.4}"
        ));
    }
    Ok(format!(
        "norm gap {worst_gap:.2e}, max ratio excess {worst_excess:.2e}, lowest reach {worst_reach:.4}"
    ))
}

fn type_in_model() -> Verdict {
    let start = Instant::now();
    let mut models = 0;
    let mut worst_closure = 0.0_f64;
    for m in 1..=24 {
        for n in 1..=24 / m {
            let model = build_cx_mn(m, n).unwrap();
            let r = verify_type_in(&model).unwrap();
            worst_closure = worst_closure.max(r.closure_residual);
            if !r.passes(m) {
                return Err(format!("m = {m}, n = {n}: {r:?}"));
            }
            if model.projection_sum() != ComplexMatrix::identity(m * n) {
                return Err(format!("m = {m}, n = {n}: projections do not sum to the identity"));
            }
            models += 1;
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {elapsed:.2?}, budget 60 s"));
    }
    Ok(format!("{models} models with m·n <= 24, worst closure {worst_closure:.2e}, {elapsed:.2?}"))
}

fn lazy_diagnostics() -> Verdict {
    let band = builtin_family(&Builtin::Band { width: 1, value: 1.0 }, Some(3.0)).unwrap();
    let mut schedule: Vec<usize> = (1..=16).collect();
    schedule.extend([24, 32, 48, 64, 96, 128, 192, 256]);
    let r = truncated_norm_curve(&band, &schedule).unwrap();
    let mut worst = 0.0_f64;
    for (&n, &v) in r.sizes.iter().zip(&r.norms) {
        worst = worst.max((v - (1.0 + 2.0 * (PI / (n as f64 + 1.0)).cos())).abs());
    }
    let increasing = r.norms.windows(2).all(|w| w[1] > w[0]);
    let bounded = r.norms.iter().all(|&v| v < 3.0);
    if worst > 1e-9 || !increasing || !bounded {
        return Err(format!("oracle gap {worst:.2e}, increasing {increasing}, bounded {bounded}"));
    }
    let diag = builtin_family(&Builtin::parse("diagonal:linear:1:1").unwrap(), Some(10.0)).unwrap();
    let c = certify_bound(&diag, 32).unwrap();
    match &c.violation {
        Some(v) if v.n == 11 => Ok(format!(
            "band(1,1) at {} sizes up to 256, oracle gap {worst:.2e}; {}",
            schedule.len(),
            c.summary()
        )),
        other => Err(format!("diagonal(ξ+1) against 10: {other:?}")),
    }
}

fn determinism() -> Verdict {
    let run = |suite: &str| {
        Command::new(env!("CARGO_BIN_EXE_iod"))
            .args(["verify", "--suite", suite, "--trials", "20", "--seed", "20240601"])
            .output()
            .map_err(|e| e.to_string())
    };
    let suites = ["lemma2", "prop4-lemma8", "prop12", "example-mn"];
    for suite in suites {
        let (a, b) = (run(suite)?, run(suite)?);
        if a.stdout.is_empty() || a.status.code() != Some(0) {
            return Err(format!("{suite}: status {:?}, stderr {}", a.status, String::from_utf8_lossy(&a.stderr)));
        }
        if a.stdout != b.stdout {
            return Err(format!("{suite}: outputs differ between runs"));
        }
    }
    Ok(format!("byte-identical suite results for {}", suites.join(", ")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("reconstruction identity", reconstruction),
        ("norm coincidence and corner monotonicity", norm_coincidence),
        ("multiplication coincidence and associativity", multiplication),
        ("involution and Hermitian structure", involution_and_hermitian),
        ("order unit axioms", order_unit),
        ("monotone blockwise supremum", monotone_sup),
        ("matrix-unit two-definition agreement", matrix_units),
        ("C(X) ⊗ M_n type I_n model", type_in_model),
        ("lazy-family truncation diagnostics", lazy_diagnostics),
        ("determinism of suite output", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
