//! Matrix ranges and matrix convex sets over a convex body: membership in
//! `W_n(x)`, `K^min` and `K^max`, matrix-range equality, the scaling constant
//! `θ`, extremality tests for free symmetries and unitaries, and the Choi–Li
//! square/disc transform.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{extreme_points, pencil, ConvexBody, PointD};
use crate::io::{matrix_list_serde, matrix_serde};
use crate::linalg::{
    commutant_dimension, identity, is_hermitian, lambda_max, maximize_on_circle, numerical_radius, op_norm,
    ComplexMatrix, OperatorTuple, C64,
};
use crate::random::{random_isometry, split};
use crate::sdp::{self, bracket, dual_witness, solve_feasibility, PencilCertificate, SdpFeasibility, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemberStatus {
    In,
    Out,
    Boundary,
    Unknown,
}

impl MemberStatus {
    /// In, or on the boundary within tolerance.
    pub fn is_member(self) -> bool {
        matches!(self, MemberStatus::In | MemberStatus::Boundary)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MembershipCertificate {
    None,
    /// Choi matrix of a unital completely positive map with the required images.
    Choi {
        #[serde(with = "matrix_serde")]
        choi: ComplexMatrix,
    },
    /// Positive weights `h_j` at the vertices with `Σ h_j = I`, `Σ λ_j h_j = a`.
    Decomposition {
        vertices: Vec<PointD>,
        #[serde(with = "matrix_list_serde")]
        weights: Vec<ComplexMatrix>,
    },
    Pencil(PencilCertificate),
    /// Worst supporting direction: `λ_max(Σ c_j a_j)` against `h_K(c)`.
    Facet {
        normal: Vec<f64>,
        support: f64,
        lambda_max: f64,
    },
    /// Outcomes of the eigenvalue-floor shifted problems at `±eps`.
    Bracket {
        eps: f64,
        relaxed: Status,
        tightened: Status,
    },
    /// Disc decided through inscribed/circumscribed polygons.
    Sandwich {
        grid: usize,
        inner: Box<MembershipResult>,
        outer: Box<MembershipResult>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembershipResult {
    pub status: MemberStatus,
    /// Positive inside (depth), negative outside (certified separation).
    pub margin: f64,
    pub certificate: MembershipCertificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Polygon size for disc `K^min`.
    pub disc_grid: usize,
    /// Direction grid for disc `K^max`.
    pub direction_grid: usize,
}

impl Default for RangeOptions {
    fn default() -> Self {
        Self { tol: sdp::DEFAULT_TOL, max_iter: sdp::DEFAULT_MAX_ITER, disc_grid: 96, direction_grid: 256 }
    }
}

impl RangeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    /// Shift used to bracket boundary answers.
    pub fn bracket_eps(&self) -> f64 {
        10.0 * self.tol
    }
}

fn decide<F>(p: &SdpFeasibility, opts: &RangeOptions, witness: F) -> Result<MembershipResult>
where
    F: Fn(Vec<ComplexMatrix>) -> MembershipCertificate,
{
    let v = solve_feasibility(p, opts.tol, opts.max_iter)?;
    match v.status {
        Status::Feasible => Ok(MembershipResult {
            status: MemberStatus::In,
            margin: v.depth.unwrap_or(0.0),
            certificate: witness(v.witness.clone().unwrap_or_default()),
        }),
        Status::Infeasible => {
            let cert = dual_witness(p, &v)?;
            Ok(MembershipResult {
                status: MemberStatus::Out,
                margin: -cert.reevaluated_margin,
                certificate: MembershipCertificate::Pencil(cert),
            })
        }
        Status::Unknown => {
            let eps = opts.bracket_eps();
            let (relaxed, tightened) = bracket(p, eps, opts.tol, opts.max_iter)?;
            let status = match (relaxed.status, tightened.status) {
                (_, Status::Feasible) => MemberStatus::In,
                (Status::Infeasible, _) => MemberStatus::Out,
                (Status::Feasible, Status::Infeasible) => MemberStatus::Boundary,
                _ => MemberStatus::Unknown,
            };
            let margin = v.depth.unwrap_or(0.0);
            Ok(MembershipResult {
                status,
                margin,
                certificate: MembershipCertificate::Bracket {
                    eps,
                    relaxed: relaxed.status,
                    tightened: tightened.status,
                },
            })
        }
    }
}

/// Functional `K` with `Φ(X)_{pq} = tr(K C)` for the Choi matrix
/// `C = Σ E_ik ⊗ Φ(E_ik)` (row index `i·n + p`).
fn choi_entry(x: &ComplexMatrix, n: usize, p: usize, q: usize) -> ComplexMatrix {
    let m = x.nrows();
    let mut k = ComplexMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..m {
            k[(j * n + q, i * n + p)] = x[(i, j)];
        }
    }
    k
}

/// Applies the map with Choi matrix `c` to `x`.
pub fn apply_choi(c: &ComplexMatrix, x: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let m = x.nrows();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            let xij = x[(i, j)];
            if xij == C64::new(0.0, 0.0) {
                continue;
            }
            for p in 0..n {
                for q in 0..n {
                    out[(p, q)] += xij * c[(i * n + p, j * n + q)];
                }
            }
        }
    }
    out
}

/// Feasibility problem for a unital completely positive map `x_j ↦ a_j`.
pub fn ucp_problem(x: &OperatorTuple, a: &OperatorTuple) -> Result<SdpFeasibility> {
    if x.d() != a.d() {
        return Err(Error::TupleMismatch(format!("d = {} vs {}", x.d(), a.d())));
    }
    let m = x.n();
    let n = a.n();
    let mut p = SdpFeasibility::new(m * n);
    let eye = identity(m);
    p.push_matrix_equation(&identity(n), true, |pp, qq| vec![(0, choi_entry(&eye, n, pp, qq))]);
    for (xj, aj) in x.mats().iter().zip(a.mats()) {
        let symmetric = is_hermitian(xj, 1e-12) && is_hermitian(aj, 1e-12);
        p.push_matrix_equation(aj, symmetric, |pp, qq| vec![(0, choi_entry(xj, n, pp, qq))]);
    }
    p.trace_normalization = Some(n as f64);
    Ok(p)
}

/// Is `a ∈ W_n(x)`?
pub fn ucp_member(x: &OperatorTuple, a: &OperatorTuple, opts: &RangeOptions) -> Result<MembershipResult> {
    let p = ucp_problem(x, a)?;
    decide(&p, opts, |w| MembershipCertificate::Choi {
        choi: w.into_iter().next().unwrap_or_else(|| ComplexMatrix::zeros(0, 0)),
    })
}

fn check_body(k: &ConvexBody, a: &OperatorTuple) -> Result<()> {
    k.validate()?;
    a.require_hermitian()?;
    if k.dim() != a.d() {
        return Err(Error::DimensionMismatch(format!("body has dimension {}, tuple has d = {}", k.dim(), a.d())));
    }
    Ok(())
}

/// Is `a ∈ K^max`, i.e. `W_1(a) ⊆ K`? Members on the boundary (margin within
/// `tol` of zero) are reported `In` together with the margin.
pub fn kmax_member(k: &ConvexBody, a: &OperatorTuple, opts: &RangeOptions) -> Result<MembershipResult> {
    check_body(k, a)?;
    let (normal, support, lmax) = match k {
        ConvexBody::Disc { .. } => {
            // minimize h_K(c) − λ_max(Σ c_j a_j) over the circle
            let gap = |t: f64| {
                let c = [t.cos(), t.sin()];
                lambda_max(&pencil(a, &c)) - k.support(&c)
            };
            let (t, _) = maximize_on_circle(gap, opts.direction_grid, opts.tol * 1e-2);
            let c = vec![t.cos(), t.sin()];
            let l = lambda_max(&pencil(a, &c));
            (c.clone(), k.support(&c), l)
        }
        _ => {
            let facets = k.facets(opts.tol)?;
            let mut best: Option<(Vec<f64>, f64, f64)> = None;
            for f in facets {
                let l = lambda_max(&pencil(a, &f.normal.coords));
                let m = f.offset - l;
                if best.as_ref().is_none_or(|b| m < b.1 - b.2) {
                    best = Some((f.normal.coords.clone(), f.offset, l));
                }
            }
            best.ok_or_else(|| Error::InvalidInput("body has no facets".into()))?
        }
    };
    let margin = support - lmax;
    let status = if margin >= -opts.tol { MemberStatus::In } else { MemberStatus::Out };
    Ok(MembershipResult {
        status,
        margin,
        certificate: MembershipCertificate::Facet { normal, support, lambda_max: lmax },
    })
}

/// `K^min` membership for a polyhedral body given by vertices.
fn kmin_polytope(vertices: &[PointD], a: &OperatorTuple, opts: &RangeOptions) -> Result<MembershipResult> {
    let verts = extreme_points(vertices, 1e-12);
    let n = a.n();
    let mut p = SdpFeasibility::with_blocks(vec![n; verts.len()]);
    let eye = |pp: usize, qq: usize| {
        let mut e = ComplexMatrix::zeros(n, n);
        e[(qq, pp)] = C64::new(1.0, 0.0);
        e
    };
    p.push_matrix_equation(&identity(n), true, |pp, qq| (0..verts.len()).map(|j| (j, eye(pp, qq))).collect());
    for (l, al) in a.mats().iter().enumerate() {
        p.push_matrix_equation(al, true, |pp, qq| {
            verts
                .iter()
                .enumerate()
                .filter(|(_, v)| v.coords[l] != 0.0)
                .map(|(j, v)| (j, eye(pp, qq) * C64::new(v.coords[l], 0.0)))
                .collect()
        });
    }
    p.trace_normalization = Some(n as f64);
    decide(&p, opts, |w| MembershipCertificate::Decomposition { vertices: verts.clone(), weights: w })
}

/// Is `a ∈ K^min`?
pub fn kmin_member(k: &ConvexBody, a: &OperatorTuple, opts: &RangeOptions) -> Result<MembershipResult> {
    check_body(k, a)?;
    match k {
        ConvexBody::Disc { .. } => {
            let (inner_body, outer_body) = k.disc_polygons(opts.disc_grid)?;
            let inner = kmin_polytope(&inner_body.vertices()?, a, opts)?;
            if inner.status == MemberStatus::In {
                let margin = inner.margin;
                return Ok(MembershipResult {
                    status: MemberStatus::In,
                    margin,
                    certificate: MembershipCertificate::Sandwich {
                        grid: opts.disc_grid,
                        inner: Box::new(inner),
                        outer: Box::new(MembershipResult {
                            status: MemberStatus::Unknown,
                            margin: 0.0,
                            certificate: MembershipCertificate::None,
                        }),
                    },
                });
            }
            let outer = kmin_polytope(&outer_body.vertices()?, a, opts)?;
            let status = match (inner.status, outer.status) {
                (_, MemberStatus::Out) => MemberStatus::Out,
                (MemberStatus::Out | MemberStatus::Boundary, MemberStatus::In | MemberStatus::Boundary) => {
                    MemberStatus::Boundary
                }
                _ => MemberStatus::Unknown,
            };
            let margin = if status == MemberStatus::Out { outer.margin } else { 0.0 };
            Ok(MembershipResult {
                status,
                margin,
                certificate: MembershipCertificate::Sandwich {
                    grid: opts.disc_grid,
                    inner: Box::new(inner),
                    outer: Box::new(outer),
                },
            })
        }
        _ => kmin_polytope(&k.vertices()?, a, opts),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub lower: f64,
    pub upper: f64,
    /// `a / upper`, a point of `K^min`.
    pub witness_point: OperatorTuple,
    /// `(α, status)` for every scaled body evaluated, in order.
    pub trace: Vec<(f64, MemberStatus)>,
}

/// Smallest `α ≥ 1` with `a ∈ α·K^min`, bracketed to width `width`.
pub fn theta_min_alpha(k: &ConvexBody, a: &OperatorTuple, width: f64, opts: &RangeOptions) -> Result<ThetaEstimate> {
    check_body(k, a)?;
    if width.is_nan() || width <= 0.0 {
        return Err(Error::InvalidInput("bracket width must be positive".into()));
    }
    let kmax = kmax_member(k, a, opts)?;
    if !kmax.status.is_member() {
        return Err(Error::NotInKmax { margin: kmax.margin });
    }
    let depth = k.origin_depth(opts.tol)?;
    if depth <= opts.tol {
        return Err(Error::NoInteriorZero);
    }
    let mut trace = Vec::new();
    let mut eval = |alpha: f64| -> Result<MemberStatus> {
        let s = kmin_member(&k.scaled(alpha), a, opts)?.status;
        trace.push((alpha, s));
        Ok(s)
    };
    let finish = |lower: f64, upper: f64, trace: Vec<(f64, MemberStatus)>| ThetaEstimate {
        lower,
        upper,
        witness_point: a.scaled(1.0 / upper),
        trace,
    };
    if eval(1.0)? == MemberStatus::In {
        return Ok(finish(1.0, 1.0, trace));
    }
    // a ∈ s·(cross-polytope)^min with s = Σ‖a_j‖, and the cross-polytope of
    // radius r sits inside K when K contains the ball of radius r
    let inradius = match k {
        ConvexBody::Disc { .. } => depth * (std::f64::consts::PI / opts.disc_grid as f64).cos(),
        _ => depth,
    };
    let s: f64 = a.mats().iter().map(op_norm).sum();
    let mut hi = (s / inradius).max(1.0) * (1.0 + 1e-3);
    let mut tries = 0;
    while eval(hi)? != MemberStatus::In {
        hi *= 2.0;
        tries += 1;
        if tries > 20 {
            return Err(Error::InvalidInput("no scale admits a K^min decomposition".into()));
        }
    }
    let mut lo = 1.0;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        match eval(mid)? {
            MemberStatus::In => hi = mid,
            MemberStatus::Out => lo = mid,
            _ => {
                let up = mid + width / 2.0;
                let down = mid - width / 2.0;
                let su = eval(up)?;
                let sd = eval(down)?;
                if su == MemberStatus::In {
                    hi = hi.min(up);
                }
                if sd == MemberStatus::Out {
                    lo = lo.max(down);
                }
                if su != MemberStatus::In && sd != MemberStatus::Out {
                    break;
                }
            }
        }
    }
    Ok(finish(lo, hi, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum ExtremalityReason {
    Extreme,
    NotHermitian,
    NotSymmetry { index: usize, defect: f64 },
    NotUnitary { index: usize, defect: f64 },
    Reducible { commutant_dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalityReport {
    pub extreme: bool,
    pub reason: ExtremalityReason,
}

fn extremality(
    a: &OperatorTuple,
    defects: impl Iterator<Item = f64>,
    fail: fn(usize, f64) -> ExtremalityReason,
) -> ExtremalityReport {
    for (index, defect) in defects.enumerate() {
        if defect > 1e-8 {
            return ExtremalityReport { extreme: false, reason: fail(index, defect) };
        }
    }
    let commutant_dim = commutant_dimension(a);
    if commutant_dim != 1 {
        return ExtremalityReport { extreme: false, reason: ExtremalityReason::Reducible { commutant_dim } };
    }
    ExtremalityReport { extreme: true, reason: ExtremalityReason::Extreme }
}

/// Matrix extreme point of the free-symmetry range: an irreducible tuple of symmetries.
pub fn is_matrix_extreme_free_symmetric(a: &OperatorTuple) -> ExtremalityReport {
    if !a.is_hermitian() {
        return ExtremalityReport { extreme: false, reason: ExtremalityReason::NotHermitian };
    }
    let eye = identity(a.n());
    let defects = a.mats().iter().map(|m| op_norm(&(m * m - &eye))).collect::<Vec<_>>();
    extremality(a, defects.into_iter(), |index, defect| ExtremalityReason::NotSymmetry { index, defect })
}

/// Matrix extreme point of the free-unitary range: an irreducible tuple of unitaries.
pub fn is_matrix_extreme_free_unitary(a: &OperatorTuple) -> ExtremalityReport {
    let eye = identity(a.n());
    let defects = a.mats().iter().map(|m| op_norm(&(m.adjoint() * m - &eye))).collect::<Vec<_>>();
    extremality(a, defects.into_iter(), |index, defect| ExtremalityReason::NotUnitary { index, defect })
}

/// Normalization constant as printed alongside the transform, `1/(1+i)`.
pub const CHOI_LI_PRINTED: C64 = C64::new(0.5, -0.5);
/// Calibrated normalization: scalar corners of the square map to numerical radius 1.
pub const CHOI_LI_CALIBRATED: f64 = 0.5;

/// `normalization · [[0, y* + y], [i(y* − y), 0]]`.
pub fn choi_li_transform(y: &ComplexMatrix, normalization: C64) -> ComplexMatrix {
    let n = y.nrows();
    let ys = y.adjoint();
    let mut out = ComplexMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, n), (n, n)).copy_from(&(&ys + y));
    out.view_mut((n, 0), (n, n)).copy_from(&((&ys - y) * C64::new(0.0, 1.0)));
    out * normalization
}

/// The form used for the equivalence check: the transform of `y/(1+i)` with unit normalization.
pub fn choi_li_disc_point(y: &ComplexMatrix) -> ComplexMatrix {
    choi_li_transform(&(y * C64::new(0.5, -0.5)), C64::new(1.0, 0.0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChoiLiCalibration {
    pub corner: [f64; 2],
    pub printed_normalization: [f64; 2],
    pub printed_corner_radius: f64,
    pub calibrated_normalization: f64,
    pub calibrated_corner_radius: f64,
    /// A scalar outside the square that the outer-normalized transform still maps into the disc.
    pub outer_counterexample: [f64; 2],
    pub outer_counterexample_radius: f64,
    /// Numerical radius of the inner form at the corner and at the counterexample.
    pub inner_corner_radius: f64,
    pub inner_counterexample_radius: f64,
    pub form_used: String,
}

/// Checks the candidate normalizations on scalar points of the square.
pub fn choi_li_calibration() -> ChoiLiCalibration {
    let tol = 1e-12;
    let corner = ComplexMatrix::from_element(1, 1, C64::new(1.0, 1.0));
    let outside = ComplexMatrix::from_element(1, 1, C64::new(1.4, 0.0));
    let printed_corner_radius = numerical_radius(&choi_li_transform(&corner, CHOI_LI_PRINTED), tol);
    // every scalar corner ±1±i has the same radius under a fixed normalization; solve for it
    let unit_corner_radius = numerical_radius(&choi_li_transform(&corner, C64::new(1.0, 0.0)), tol);
    let calibrated = 1.0 / unit_corner_radius;
    debug_assert!((calibrated - CHOI_LI_CALIBRATED).abs() < 1e-9);
    let calibrated_corner_radius =
        numerical_radius(&choi_li_transform(&corner, C64::new(CHOI_LI_CALIBRATED, 0.0)), tol);
    let outer_counterexample_radius =
        numerical_radius(&choi_li_transform(&outside, C64::new(CHOI_LI_CALIBRATED, 0.0)), tol);
    ChoiLiCalibration {
        corner: [1.0, 1.0],
        printed_normalization: [CHOI_LI_PRINTED.re, CHOI_LI_PRINTED.im],
        printed_corner_radius,
        calibrated_normalization: CHOI_LI_CALIBRATED,
        calibrated_corner_radius,
        outer_counterexample: [1.4, 0.0],
        outer_counterexample_radius,
        inner_corner_radius: numerical_radius(&choi_li_disc_point(&corner), tol),
        inner_counterexample_radius: numerical_radius(&choi_li_disc_point(&outside), tol),
        form_used: "transform(y/(1+i)) with unit normalization".into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChoiLiReport {
    pub square_min: MembershipResult,
    pub disc_max: MembershipResult,
    pub numerical_radius: f64,
    /// Both sides decided (In or Out).
    pub comparable: bool,
    pub consistent: bool,
}

/// Compares `y ∈ □^min` (by semidefinite feasibility) with membership of the
/// transformed point in `D̄^max` (by numerical radius).
pub fn choi_li_equiv_check(y: &ComplexMatrix, opts: &RangeOptions) -> Result<ChoiLiReport> {
    if !y.is_square() {
        return Err(Error::DimensionMismatch("y must be square".into()));
    }
    let parts = OperatorTuple::real_imag(y)?;
    let square_min = kmin_member(&ConvexBody::cube(2), &parts, opts)?;
    let w = numerical_radius(&choi_li_disc_point(y), opts.tol * 1e-2);
    let margin = 1.0 - w;
    let disc_max = MembershipResult {
        status: if margin >= -opts.tol { MemberStatus::In } else { MemberStatus::Out },
        margin,
        certificate: MembershipCertificate::None,
    };
    let decided = |s: MemberStatus| matches!(s, MemberStatus::In | MemberStatus::Out);
    let comparable = decided(square_min.status) && decided(disc_max.status);
    let consistent = !comparable || square_min.status == disc_max.status;
    Ok(ChoiLiReport { square_min, disc_max, numerical_radius: w, comparable, consistent })
}

/// Random point of `W_n(x)`: compression of an ampliation of `x` by a seeded isometry.
pub fn random_range_point<R: Rng + ?Sized>(rng: &mut R, x: &OperatorTuple, n: usize) -> OperatorTuple {
    let copies = n.div_ceil(x.n()).max(1) + 1;
    let big = x.ampliate(copies);
    let v = random_isometry(rng, big.n(), n);
    big.compress(&v)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub probes: usize,
    /// Probes from `W_n(x)` found in `W_n(y)`, and vice versa.
    pub x_in_y: usize,
    pub y_in_x: usize,
    pub undecided: usize,
    pub min_margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RangeEqualityReport {
    pub equal: bool,
    pub x_in_range_of_y: MembershipResult,
    pub y_in_range_of_x: MembershipResult,
    pub levels: Vec<LevelReport>,
}

/// Equality of matrix ranges, checked on the defining tuples and on seeded
/// random probes at each level.
pub fn mrange_equal(
    x: &OperatorTuple,
    y: &OperatorTuple,
    levels: &[usize],
    probes: usize,
    seed: u64,
    opts: &RangeOptions,
) -> Result<RangeEqualityReport> {
    if x.d() != y.d() {
        return Err(Error::TupleMismatch(format!("d = {} vs {}", x.d(), y.d())));
    }
    let xy = ucp_member(y, x, opts)?;
    let yx = ucp_member(x, y, opts)?;
    let mut equal = xy.status.is_member() && yx.status.is_member();
    let mut reports = Vec::with_capacity(levels.len());
    for (li, &level) in levels.iter().enumerate() {
        if level == 0 {
            return Err(Error::InvalidInput("levels start at 1".into()));
        }
        let mut rng = split(seed, li as u64);
        let mut rep = LevelReport { level, probes, x_in_y: 0, y_in_x: 0, undecided: 0, min_margin: f64::INFINITY };
        for _ in 0..probes {
            let px = random_range_point(&mut rng, x, level);
            let py = random_range_point(&mut rng, y, level);
            for (probe, host, counter) in [(&px, y, 0), (&py, x, 1)] {
                let r = ucp_member(host, probe, opts)?;
                rep.min_margin = rep.min_margin.min(r.margin);
                match r.status {
                    s if s.is_member() => {
                        if counter == 0 {
                            rep.x_in_y += 1;
                        } else {
                            rep.y_in_x += 1;
                        }
                    }
                    MemberStatus::Unknown => rep.undecided += 1,
                    _ => {}
                }
            }
        }
        if rep.x_in_y != probes || rep.y_in_x != probes {
            equal = false;
        }
        reports.push(rep);
    }
    Ok(RangeEqualityReport { equal, x_in_range_of_y: xy, y_in_range_of_x: yx, levels: reports })
}

/// Quadratic non-normal 4×4 model `[[λ1 I, C], [0, λ2 I]]` and the matched 2×2
/// `[[λ1, ‖C‖], [0, λ2]]`.
pub fn quadratic_model(l1: C64, l2: C64, coupling: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let k = coupling.nrows();
    let mut x = ComplexMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        x[(i, i)] = l1;
        x[(k + i, k + i)] = l2;
    }
    x.view_mut((0, k), (k, k)).copy_from(coupling);
    let mut a = ComplexMatrix::zeros(2, 2);
    a[(0, 0)] = l1;
    a[(1, 1)] = l2;
    a[(0, 1)] = C64::new(op_norm(coupling), 0.0);
    (x, a)
}
