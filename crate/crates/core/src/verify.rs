//! Desk-scale verification suite: twelve checks of sharp constants and
//! structural properties, each with its tolerances pinned here.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{hull_2d, jnr_sandwich, ConvexBody, PointD};
use crate::linalg::{
    direct_sum, from_real_rows, identity, lambda_min, max_abs, pauli_x, pauli_z, real, ComplexMatrix, OperatorTuple,
    C64,
};
use crate::models::{
    essential_spectrum_diag, extreme_spectral_compression, sw_perturbation, verify_complete_isometry, verify_local_sw,
    DiagonalTuple, NormalTuple,
};
use crate::random::{
    gaussian, random_commuting_hermitian_pair, random_hermitian_with_norm, random_isometry, random_matrix, split,
};
use crate::ranges::{
    choi_li_calibration, choi_li_equiv_check, is_matrix_extreme_free_symmetric, kmax_member, kmin_member, mrange_equal,
    quadratic_model, random_range_point, theta_min_alpha, ucp_member, ExtremalityReason, MemberStatus, RangeOptions,
};
use crate::sdp::{dual_witness, planted_feasible, planted_infeasible, solve_feasibility, Status, WITNESS_PSD_TOL};

/// Half-width of the window around a sharp scaling constant.
pub const THETA_WINDOW: f64 = 0.02;
/// Bisection width requested from `theta_min_alpha`.
pub const THETA_WIDTH: f64 = 0.01;
pub const THETA_SECONDS: f64 = 60.0;
/// Residual allowed for the explicit square decomposition (floating point only).
pub const EXACT_WITNESS_TOL: f64 = 1e-14;
/// Probes closer than this many tolerances to either boundary are not compared.
pub const CHOI_LI_EXCLUSION: f64 = 5.0;
pub const CHOI_LI_PROBES: usize = 500;
pub const CHOI_LI_RADIUS: f64 = 1.5;
pub const ISOMETRY_GAP: f64 = 1e-8;
pub const ISOMETRY_TRIALS: usize = 100;
/// Width of the excluded band around the boundary, in tolerances.
pub const BOUNDARY_BAND: f64 = 10.0;
pub const SIMPLEX_PAIRS: usize = 200;
pub const CONTRACTION_PAIRS: usize = 200;
pub const QUADRATIC_PROBES: usize = 50;
pub const QUADRATIC_SECONDS: f64 = 600.0;
pub const HAUSDORFF_TOL: f64 = 1e-8;
/// Support directions used to recover the vertices of a planar range.
pub const VERTEX_DIRECTIONS: usize = 2048;
pub const SW_PREFIX: usize = 64;
pub const SW_Q: usize = 2;
pub const SW_PROBES: usize = 50;
pub const CLOSURE_TUPLES: usize = 10;
pub const CLOSURE_PROBES: usize = 1000;
pub const PLANTED_INSTANCES: usize = 500;
/// Largest admissible fraction of undecided verdicts.
pub const UNKNOWN_RATE: f64 = 0.02;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 0, tol: crate::sdp::DEFAULT_TOL }
    }
}

pub const CRITERIA: [&str; 12] = [
    "square scaling constant",
    "disc scaling constant",
    "Choi-Li equivalence",
    "normal compression complete isometry",
    "simplex collapse",
    "free-symmetry matrix range",
    "matrix-extreme detection",
    "quadratic collapse",
    "boundary characters for commuting normals",
    "local Smith-Ward",
    "matrix-convexity axioms",
    "solver integrity",
];

struct Outcome {
    passed: bool,
    detail: String,
    metrics: BTreeMap<String, f64>,
}

impl Outcome {
    fn new(passed: bool, detail: String, metrics: &[(&str, f64)]) -> Self {
        Outcome { passed, detail, metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }
}

pub fn run_criterion(id: usize, cfg: &SuiteConfig) -> Result<CriterionResult> {
    let start = Instant::now();
    let opts = RangeOptions::with_tol(cfg.tol);
    let out = match id {
        1 => square_constant(&opts)?,
        2 => disc_constant(&opts)?,
        3 => choi_li(cfg.seed, &opts)?,
        4 => complete_isometry(cfg.seed)?,
        5 => simplex_collapse(cfg.seed, &opts)?,
        6 => free_symmetries(cfg.seed, &opts)?,
        7 => extreme_detection(),
        8 => quadratic_collapse(cfg.seed, &opts)?,
        9 => boundary_characters(cfg.seed)?,
        10 => local_sw(cfg.seed, &opts)?,
        11 => closure_axioms(cfg.seed, &opts)?,
        12 => solver_integrity(cfg.seed, cfg.tol)?,
        _ => return Err(crate::Error::InvalidInput(format!("no criterion {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let mut passed = out.passed;
    let mut detail = out.detail;
    let limit = match id {
        1 | 2 => Some(THETA_SECONDS),
        8 => Some(QUADRATIC_SECONDS),
        _ => None,
    };
    if let Some(limit) = limit {
        if seconds > limit {
            passed = false;
            detail.push_str(&format!("; took {seconds:.1}s, limit {limit}s"));
        }
    }
    Ok(CriterionResult { id, name: CRITERIA[id - 1].to_string(), passed, detail, metrics: out.metrics, seconds })
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<CriterionResult>> {
    (1..=CRITERIA.len()).map(|id| run_criterion(id, cfg)).collect()
}

fn pair(a: ComplexMatrix, b: ComplexMatrix) -> OperatorTuple {
    OperatorTuple::hermitian(vec![a, b]).expect("hermitian pair")
}

fn brackets(lower: f64, upper: f64, target: f64) -> bool {
    lower >= target - THETA_WINDOW && upper <= target + THETA_WINDOW && lower <= target + 1e-6 && upper >= target - 1e-6
}

/// Positive weights at the square's vertices summing to `(X, Z)/√2`:
/// `h_(s,t) = (1 + s X/√2 + t Z/√2)/4`.  Returns the largest residual and the
/// smallest weight eigenvalue.
pub fn square_witness() -> (f64, f64) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (x, z) = (pauli_x() * real(r), pauli_z() * real(r));
    let mut sum = ComplexMatrix::zeros(2, 2);
    let mut first = ComplexMatrix::zeros(2, 2);
    let mut second = ComplexMatrix::zeros(2, 2);
    let mut min_eig = f64::INFINITY;
    for s in [-1.0, 1.0] {
        for t in [-1.0, 1.0] {
            let h = (identity(2) + &x * real(s) + &z * real(t)) * real(0.25);
            min_eig = min_eig.min(lambda_min(&h));
            sum += &h;
            first += &h * real(s);
            second += &h * real(t);
        }
    }
    let residual = max_abs(&(sum - identity(2))).max(max_abs(&(first - x))).max(max_abs(&(second - z)));
    (residual, min_eig)
}

fn square_constant(opts: &RangeOptions) -> Result<Outcome> {
    let a = pair(pauli_x(), pauli_z());
    let est = theta_min_alpha(&ConvexBody::cube(2), &a, THETA_WIDTH, opts)?;
    let target = std::f64::consts::SQRT_2;
    let (residual, min_eig) = square_witness();
    let witness_ok = residual <= EXACT_WITNESS_TOL && min_eig >= -EXACT_WITNESS_TOL;
    Ok(Outcome::new(
        brackets(est.lower, est.upper, target) && witness_ok,
        format!(
            "[{:.5}, {:.5}] around {target:.5}; explicit decomposition residual {residual:.1e}",
            est.lower, est.upper
        ),
        &[("lower", est.lower), ("upper", est.upper), ("witness_residual", residual), ("witness_min_eig", min_eig)],
    ))
}

fn disc_constant(opts: &RangeOptions) -> Result<Outcome> {
    let s = from_real_rows(&[&[0.0, 2.0], &[0.0, 0.0]]);
    let a = OperatorTuple::real_imag(&s)?;
    let est = theta_min_alpha(&ConvexBody::unit_disc(), &a, THETA_WIDTH, opts)?;
    Ok(Outcome::new(
        brackets(est.lower, est.upper, 2.0),
        format!("[{:.5}, {:.5}] around 2", est.lower, est.upper),
        &[("lower", est.lower), ("upper", est.upper)],
    ))
}

fn choi_li(seed: u64, opts: &RangeOptions) -> Result<Outcome> {
    let cal = choi_li_calibration();
    let mut compared = 0usize;
    let mut consistent = 0usize;
    let mut excluded = 0usize;
    for i in 0..CHOI_LI_PROBES {
        let mut rng = split(seed ^ 0xc401, i as u64);
        let g: Vec<f64> = (0..8).map(|_| gaussian(&mut rng)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radius = CHOI_LI_RADIUS * rng.random::<f64>().powf(1.0 / 8.0);
        let k = radius / norm;
        let y = ComplexMatrix::from_fn(2, 2, |r, c| C64::new(g[4 * r + 2 * c] * k, g[4 * r + 2 * c + 1] * k));
        let rep = choi_li_equiv_check(&y, opts)?;
        let band = CHOI_LI_EXCLUSION * opts.tol;
        if !rep.comparable || rep.square_min.margin.abs() < band || rep.disc_max.margin.abs() < band {
            excluded += 1;
            continue;
        }
        compared += 1;
        if rep.consistent {
            consistent += 1;
        }
    }
    let rate = if compared == 0 { 0.0 } else { consistent as f64 / compared as f64 };
    let calibrated =
        (cal.calibrated_corner_radius - 1.0).abs() <= 1e-9 && (cal.inner_corner_radius - 1.0).abs() <= 1e-9;
    Ok(Outcome::new(
        rate == 1.0 && compared > CHOI_LI_PROBES / 2 && calibrated,
        format!(
            "{consistent}/{compared} consistent, {excluded} excluded; normalization {} (corner radius {:.6}, printed form {:.6})",
            cal.calibrated_normalization, cal.calibrated_corner_radius, cal.printed_corner_radius
        ),
        &[
            ("consistency", rate),
            ("compared", compared as f64),
            ("excluded", excluded as f64),
            ("normalization", cal.calibrated_normalization),
            ("corner_radius", cal.calibrated_corner_radius),
            ("printed_corner_radius", cal.printed_corner_radius),
        ],
    ))
}

fn complete_isometry(seed: u64) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let mut rng = split(seed ^ 0x150, i);
        let n = rng.random_range(4..=8);
        let (a, b, _) = random_commuting_hermitian_pair(&mut rng, n);
        let t = NormalTuple::new(pair(a, b))?;
        let model = extreme_spectral_compression(&t)?;
        for p in 1..=3 {
            let rep = verify_complete_isometry(&t, &model, p, ISOMETRY_TRIALS, seed.wrapping_add(i * 3 + p as u64))?;
            worst = worst.max(rep.max_gap);
        }
    }
    Ok(Outcome::new(worst <= ISOMETRY_GAP, format!("max gap {worst:.2e}"), &[("max_gap", worst)]))
}

fn triangle() -> ConvexBody {
    let h = 3f64.sqrt() / 2.0;
    ConvexBody::polytope(vec![PointD::xy(1.0, 0.0), PointD::xy(-0.5, h), PointD::xy(-0.5, -h)])
}

fn simplex_collapse(seed: u64, opts: &RangeOptions) -> Result<Outcome> {
    let k = triangle();
    let band = BOUNDARY_BAND * opts.tol;
    let (mut tested, mut inside, mut banded, mut failures, mut draws) = (0usize, 0usize, 0usize, 0usize, 0u64);
    while tested < SIMPLEX_PAIRS && draws < 20 * SIMPLEX_PAIRS as u64 {
        let mut rng = split(seed ^ 0x51, draws);
        draws += 1;
        let n = rng.random_range(2..=3);
        let r = rng.random_range(0.1..0.7);
        let a = pair(random_hermitian_with_norm(&mut rng, n, r), random_hermitian_with_norm(&mut rng, n, r));
        let max = kmax_member(&k, &a, opts)?;
        if max.status != MemberStatus::In {
            continue;
        }
        tested += 1;
        let min = kmin_member(&k, &a, opts)?;
        if min.status == MemberStatus::In {
            inside += 1;
        } else if max.margin < band || min.margin.abs() <= band {
            banded += 1;
        } else {
            failures += 1;
        }
    }
    Ok(Outcome::new(
        failures == 0 && tested == SIMPLEX_PAIRS,
        format!("{inside}/{tested} in K^min, {banded} in the boundary band"),
        &[
            ("tested", tested as f64),
            ("inside", inside as f64),
            ("banded", banded as f64),
            ("failures", failures as f64),
        ],
    ))
}

fn free_symmetries(seed: u64, opts: &RangeOptions) -> Result<Outcome> {
    let k = ConvexBody::cube(2);
    let (mut inside, mut outside) = (0usize, 0usize);
    for i in 0..CONTRACTION_PAIRS as u64 {
        let mut rng = split(seed ^ 0xf5, i);
        let n = rng.random_range(1..=4);
        let (r1, r2) = (rng.random_range(0.0..0.99), rng.random_range(0.0..0.99));
        let a = pair(random_hermitian_with_norm(&mut rng, n, r1), random_hermitian_with_norm(&mut rng, n, r2));
        if kmax_member(&k, &a, opts)?.status == MemberStatus::In {
            inside += 1;
        }
        let big = rng.random_range(1.01..1.5);
        let mut mats = vec![random_hermitian_with_norm(&mut rng, n, r1), random_hermitian_with_norm(&mut rng, n, r2)];
        let j = rng.random_range(0..2);
        mats[j] = random_hermitian_with_norm(&mut rng, n, big);
        if kmax_member(&k, &OperatorTuple::hermitian(mats)?, opts)?.status == MemberStatus::Out {
            outside += 1;
        }
    }
    Ok(Outcome::new(
        inside == CONTRACTION_PAIRS && outside == CONTRACTION_PAIRS,
        format!("{inside}/{CONTRACTION_PAIRS} contractions in, {outside}/{CONTRACTION_PAIRS} non-contractions out"),
        &[("contractions_in", inside as f64), ("non_contractions_out", outside as f64)],
    ))
}

fn extreme_detection() -> Outcome {
    let half = pauli_x() * real(0.5);
    type Case = (OperatorTuple, fn(ExtremalityReason) -> bool);
    let cases: [Case; 4] = [
        (pair(pauli_x(), pauli_z()), |r: ExtremalityReason| r == ExtremalityReason::Extreme),
        (pair(pauli_x(), pauli_x()), |r| r == ExtremalityReason::Reducible { commutant_dim: 2 }),
        (pair(half, pauli_z()), |r| matches!(r, ExtremalityReason::NotSymmetry { index: 0, .. })),
        (pair(direct_sum(&pauli_x(), &pauli_x()), direct_sum(&pauli_z(), &pauli_z())), |r| {
            r == ExtremalityReason::Reducible { commutant_dim: 4 }
        }),
    ];
    let mut correct = 0;
    let mut reasons = Vec::new();
    for (t, ok) in cases {
        let rep = is_matrix_extreme_free_symmetric(&t);
        if ok(rep.reason) && rep.extreme == (rep.reason == ExtremalityReason::Extreme) {
            correct += 1;
        }
        reasons.push(format!("{:?}", rep.reason));
    }
    Outcome::new(correct == 4, reasons.join(", "), &[("correct", correct as f64)])
}

/// Quadratic 4×4 model with spectrum `{0, 1}` and coupling `diag(1, 1/2)`.
pub fn quadratic_pair() -> (OperatorTuple, OperatorTuple) {
    let coupling = crate::linalg::diag_real(&[1.0, 0.5]);
    let (x, a) = quadratic_model(C64::new(0.0, 0.0), C64::new(1.0, 0.0), &coupling);
    (OperatorTuple::general(vec![x]).expect("square"), OperatorTuple::general(vec![a]).expect("square"))
}

fn quadratic_collapse(seed: u64, opts: &RangeOptions) -> Result<Outcome> {
    let (x, a) = quadratic_pair();
    let rep = mrange_equal(&x, &a, &[1, 2, 3], QUADRATIC_PROBES, seed, opts)?;
    let undecided: usize = rep.levels.iter().map(|l| l.undecided).sum();
    Ok(Outcome::new(
        rep.equal,
        format!("equal = {}, {} probes per level and side, {undecided} undecided", rep.equal, QUADRATIC_PROBES),
        &[("equal", rep.equal as u8 as f64), ("undecided", undecided as f64)],
    ))
}

fn hausdorff(a: &[PointD], b: &[PointD]) -> f64 {
    let one = |x: &[PointD], y: &[PointD]| {
        x.iter().map(|p| y.iter().map(|q| p.dist(q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

fn boundary_characters(seed: u64) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let mut rng = split(seed ^ 0xbc, i);
        let n = rng.random_range(4..=8);
        let (a, b, _) = random_commuting_hermitian_pair(&mut rng, n);
        let t = pair(a, b);
        let sandwich = jnr_sandwich(&t, VERTEX_DIRECTIONS)?;
        let vertices = hull_2d(&sandwich.inner);
        let model = extreme_spectral_compression(&NormalTuple::new(t)?)?;
        worst = worst.max(hausdorff(&vertices, &model.extreme_set));
    }
    Ok(Outcome::new(worst <= HAUSDORFF_TOL, format!("max Hausdorff distance {worst:.2e}"), &[("hausdorff", worst)]))
}

fn local_sw(seed: u64, opts: &RangeOptions) -> Result<Outcome> {
    let mut problems = Vec::new();
    let mut worst_tail: f64 = 0.0;
    for (name, t) in
        [("harmonic", DiagonalTuple::harmonic(SW_PREFIX)), ("two-limit", DiagonalTuple::two_limit(SW_PREFIX))]
    {
        let (perturbed, rep) = sw_perturbation(&t)?;
        let ess = essential_spectrum_diag(&t, 0.0);
        for (e, d) in rep.entries.iter().zip(&rep.perturbation) {
            let exact = ess.iter().map(|q| q.dist(e)).fold(f64::INFINITY, f64::min);
            if *d != exact {
                problems.push(format!("{name}: displacement {d} vs distance {exact}"));
                break;
            }
        }
        let tails = &rep.sup_tail_norm;
        let last = *tails.last().unwrap_or(&0.0);
        worst_tail = worst_tail.max(last);
        // the prefix closes in on its limit like 1/k
        if tails.windows(2).any(|w| w[1] > w[0]) || last > 1.0 / SW_PREFIX as f64 + 1e-15 {
            problems.push(format!("{name}: tail norms do not decay"));
        }
        let local = verify_local_sw(&t, &perturbed, SW_Q, SW_PROBES, seed, opts)?;
        if !local.equal {
            problems.push(format!("{name}: ranges differ up to level {SW_Q}"));
        }
    }
    let detail = if problems.is_empty() { format!("final tail norm {worst_tail:.2e}") } else { problems.join("; ") };
    Ok(Outcome::new(problems.is_empty(), detail, &[("final_tail", worst_tail), ("problems", problems.len() as f64)]))
}

fn closure_axioms(seed: u64, opts: &RangeOptions) -> Result<Outcome> {
    let per_tuple = CLOSURE_PROBES / CLOSURE_TUPLES;
    let (mut violations, mut undecided) = (0usize, 0usize);
    for i in 0..CLOSURE_TUPLES as u64 {
        let mut rng = split(seed ^ 0xc1, i);
        let n = rng.random_range(2..=3);
        let x = if i % 2 == 0 {
            pair(random_hermitian_with_norm(&mut rng, n, 1.0), random_hermitian_with_norm(&mut rng, n, 1.0))
        } else {
            OperatorTuple::general(vec![random_matrix(&mut rng, n, n)])?
        };
        for j in 0..per_tuple {
            let probe = if j % 2 == 0 {
                let p = random_range_point(&mut rng, &x, 1);
                let level = rng.random_range(1..=2);
                let q = random_range_point(&mut rng, &x, level);
                p.direct_sum(&q)?
            } else {
                let p = random_range_point(&mut rng, &x, 3);
                let cols = rng.random_range(1..=2);
                let v = random_isometry(&mut rng, 3, cols);
                p.compress(&v)
            };
            match ucp_member(&x, &probe, opts)?.status {
                MemberStatus::Out => violations += 1,
                MemberStatus::Unknown => undecided += 1,
                _ => {}
            }
        }
    }
    let total = per_tuple * CLOSURE_TUPLES;
    Ok(Outcome::new(
        violations == 0 && (undecided as f64) <= UNKNOWN_RATE * total as f64,
        format!("{violations} violations, {undecided} undecided over {total} probes"),
        &[("violations", violations as f64), ("undecided", undecided as f64)],
    ))
}

fn solver_integrity(seed: u64, tol: f64) -> Result<Outcome> {
    let max_iter = crate::sdp::DEFAULT_MAX_ITER;
    let (mut confusions, mut unknown, mut bad_certificates) = (0usize, 0usize, 0usize);
    for i in 0..2 * PLANTED_INSTANCES as u64 {
        let mut rng = split(seed ^ 0x5d, i);
        let n = rng.random_range(2..=5);
        let m = rng.random_range(1..=n * n / 2 + 1);
        let feasible = i % 2 == 0;
        let p = if feasible {
            let pin = rng.random_bool(0.5);
            planted_feasible(&mut rng, n, m, pin).0
        } else {
            let delta = rng.random_range(0.05..1.0);
            planted_infeasible(&mut rng, n, m, delta)
        };
        let v = solve_feasibility(&p, tol, max_iter)?;
        match (v.status, feasible) {
            (Status::Unknown, _) => unknown += 1,
            (Status::Feasible, false) | (Status::Infeasible, true) => confusions += 1,
            (Status::Feasible, true) => {
                let w = v.witness.as_ref().expect("feasible verdicts carry a witness");
                if p.residual(w) > tol || w.iter().any(|b| lambda_min(b) < -WITNESS_PSD_TOL) {
                    bad_certificates += 1;
                }
            }
            (Status::Infeasible, false) => {
                let cert = dual_witness(&p, &v)?;
                if cert.reevaluated_margin <= 0.0 || (cert.reevaluated_margin - cert.claimed_margin).abs() > 1e-9 {
                    bad_certificates += 1;
                }
            }
        }
    }
    let total = 2 * PLANTED_INSTANCES;
    Ok(Outcome::new(
        confusions == 0 && bad_certificates == 0 && (unknown as f64) <= UNKNOWN_RATE * total as f64,
        format!(
            "{confusions} confusions, {unknown} unknown, {bad_certificates} failed re-checks over {total} instances"
        ),
        &[
            ("confusions", confusions as f64),
            ("unknown", unknown as f64),
            ("bad_certificates", bad_certificates as f64),
        ],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_decomposition_is_exact() {
        let (residual, min_eig) = square_witness();
        assert!(residual <= EXACT_WITNESS_TOL);
        // each weight is a rank-one projection over four, so the smallest eigenvalue is zero
        assert!(min_eig.abs() <= EXACT_WITNESS_TOL);
    }

    #[test]
    fn unknown_criterion_is_rejected() {
        assert!(run_criterion(13, &SuiteConfig::default()).is_err());
    }

    #[test]
    fn extreme_detection_passes() {
        assert!(run_criterion(7, &SuiteConfig::default()).unwrap().passed);
    }
}
