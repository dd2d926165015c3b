//! Certified semidefinite feasibility.
//!
//! Decides whether a block-diagonal Hermitian `V ⪰ 0` with `⟨C_k, V⟩ = b_k`
//! exists (real Hilbert–Schmidt pairing `⟨C, V⟩ = Re tr(C V)`). The answer is
//! tri-state: a re-verified witness, a re-verified separating pencil, or
//! `Unknown`.
//!
//! Internally the Hermitian blocks are realified (`H ↦ [[Re H, −Im H], [Im H, Re H]]`)
//! and the constraints are row-normalized and whitened. When the constraints
//! pin the trace of `V`, the solver maximizes the smallest eigenvalue of `V`
//! over the affine slice (the *depth*); otherwise it minimizes the shift `s`
//! needed to make `V + sI` feasible. Both are solved with a primal-dual
//! interior-point method (HKM direction, Mehrotra predictor-corrector).
//!
//! Infeasibility certificates are pencils `S = −Σ y_k C_k ⪰ 0` with
//! `Σ y_k b_k > 0`. Their margin is a certified lower bound on the eigenvalue
//! shift `δ` such that some `V ⪰ −δI` satisfies the constraints.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::matrix_list_serde;
use crate::linalg::{hermitian_part, hs_inner, identity, is_hermitian, ComplexMatrix, C64};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 50_000;
/// Feasible witnesses must have smallest eigenvalue at least `-WITNESS_PSD_TOL`.
pub const WITNESS_PSD_TOL: f64 = 1e-8;

const IPM_ITER_CAP: usize = 150;

/// `Σ_b ⟨coeff_b, V_b⟩ = rhs`; blocks not listed have zero coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineConstraint {
    pub coeff: Vec<BlockCoeff>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockCoeff {
    pub block: usize,
    #[serde(with = "crate::io::matrix_serde")]
    pub matrix: ComplexMatrix,
}

impl AffineConstraint {
    pub fn single(matrix: ComplexMatrix, rhs: f64) -> Self {
        Self { coeff: vec![BlockCoeff { block: 0, matrix }], rhs }
    }
}

/// Block-diagonal PSD feasibility problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpFeasibility {
    /// Complex sizes of the diagonal blocks of the variable.
    pub blocks: Vec<usize>,
    pub constraints: Vec<AffineConstraint>,
    /// Optional `tr V = τ` constraint.
    #[serde(default)]
    pub trace_normalization: Option<f64>,
}

impl SdpFeasibility {
    pub fn new(var_size: usize) -> Self {
        Self::with_blocks(vec![var_size])
    }

    pub fn with_blocks(blocks: Vec<usize>) -> Self {
        Self { blocks, constraints: Vec::new(), trace_normalization: None }
    }

    pub fn push(&mut self, c: AffineConstraint) {
        self.constraints.push(c);
    }

    /// Total complex dimension of the variable.
    pub fn dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(Error::BadProblem("variable blocks must be non-empty".into()));
        }
        for (k, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(Error::BadProblem(format!("constraint {k} has non-finite rhs")));
            }
            for bc in &c.coeff {
                let size = *self.blocks.get(bc.block).ok_or_else(|| {
                    Error::BadProblem(format!("constraint {k} references missing block {}", bc.block))
                })?;
                if bc.matrix.shape() != (size, size) {
                    return Err(Error::BadProblem(format!(
                        "constraint {k}: coefficient for block {} is {}x{}, expected {size}x{size}",
                        bc.block,
                        bc.matrix.nrows(),
                        bc.matrix.ncols()
                    )));
                }
                if !is_hermitian(&bc.matrix, 1e-12) {
                    return Err(Error::BadProblem(format!("constraint {k}: coefficient is not Hermitian")));
                }
            }
        }
        if let Some(t) = self.trace_normalization {
            if !t.is_finite() {
                return Err(Error::BadProblem("trace normalization must be finite".into()));
            }
        }
        Ok(())
    }

    /// All constraints, with the trace normalization appended as an explicit row.
    fn rows(&self) -> Vec<AffineConstraint> {
        let mut rows = self.constraints.clone();
        if let Some(t) = self.trace_normalization {
            rows.push(AffineConstraint {
                coeff: self
                    .blocks
                    .iter()
                    .enumerate()
                    .map(|(b, &n)| BlockCoeff { block: b, matrix: identity(n) })
                    .collect(),
                rhs: t,
            });
        }
        rows
    }

    /// `⟨C_k, V⟩` for every row (trace normalization last, when present).
    pub fn evaluate(&self, v: &[ComplexMatrix]) -> Vec<f64> {
        self.rows().iter().map(|c| eval_row(c, v)).collect()
    }

    /// Largest constraint violation, each row normalized by its coefficient norm.
    pub fn residual(&self, v: &[ComplexMatrix]) -> f64 {
        self.rows()
            .iter()
            .map(|c| {
                let norm = row_norm(c);
                if norm == 0.0 {
                    c.rhs.abs()
                } else {
                    (eval_row(c, v) - c.rhs).abs() / norm
                }
            })
            .fold(0.0, f64::max)
    }

    /// The problem in the variable `W = V − floor·I`: feasible iff some
    /// `V ⪰ floor·I` meets the original constraints.
    pub fn with_eigenvalue_floor(&self, floor: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.constraints {
            let shift: f64 = c.coeff.iter().map(|bc| bc.matrix.trace().re).sum();
            c.rhs -= floor * shift;
        }
        if let Some(t) = out.trace_normalization.as_mut() {
            *t -= floor * self.dim() as f64;
        }
        out
    }

    /// Adds the Hermitian matrix equation `Σ_terms coeff_t · V_{block_t} = target`,
    /// one real row per independent real entry. `entry(p, q)` must return the
    /// matrices `K_b` with `(Σ …)_{pq} = Σ_b tr(K_b V_b)`.
    pub fn push_matrix_equation<F>(&mut self, target: &ComplexMatrix, symmetric: bool, entry: F)
    where
        F: Fn(usize, usize) -> Vec<(usize, ComplexMatrix)>,
    {
        let n = target.nrows();
        for p in 0..n {
            for q in 0..n {
                if symmetric && q < p {
                    continue;
                }
                let ks = entry(p, q);
                let t = target[(p, q)];
                for (part, rhs) in [(C64::new(1.0, 0.0), t.re), (C64::new(0.0, -1.0), t.im)] {
                    let coeff: Vec<BlockCoeff> = ks
                        .iter()
                        .map(|(b, k)| BlockCoeff { block: *b, matrix: hermitian_part(&(k * part)) })
                        .filter(|bc| bc.matrix.iter().any(|z| z.norm() > 0.0))
                        .collect();
                    if coeff.is_empty() && rhs == 0.0 {
                        continue;
                    }
                    self.push(AffineConstraint { coeff, rhs });
                }
            }
        }
    }
}

fn eval_row(c: &AffineConstraint, v: &[ComplexMatrix]) -> f64 {
    c.coeff.iter().map(|bc| hs_inner(&bc.matrix, &v[bc.block])).sum()
}

fn row_norm(c: &AffineConstraint) -> f64 {
    c.coeff.iter().map(|bc| bc.matrix.norm_squared()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Feasible,
    Infeasible,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparatorKind {
    /// `S = −Σ y_k C_k ⪰ 0` (up to the certified correction) with `Σ y_k b_k > 0`.
    Cone,
    /// `Σ y_k C_k = 0` with `Σ y_k b_k ≠ 0`: the affine constraints are inconsistent.
    Affine,
}

/// Dual certificate of infeasibility, in the coordinates of the original rows
/// (trace normalization row last, when present).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separator {
    pub kind: SeparatorKind,
    pub coefficients: Vec<f64>,
    /// Cone kind: certified lower bound on the eigenvalue shift needed for
    /// feasibility. Affine kind: lower bound on the Euclidean norm of the
    /// residual vector `(⟨C_k, V⟩ − b_k)/‖C_k‖` of any `V`.
    pub margin: f64,
    /// Trace of every feasible `V` when the constraints pin it.
    pub trace_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_matrix_list")]
    pub witness: Option<Vec<ComplexMatrix>>,
    pub separator: Option<Separator>,
    pub iterations: usize,
    /// Normalized constraint residual of the witness (or best primal point).
    pub residual: f64,
    /// Estimated largest achievable smallest eigenvalue over the affine slice,
    /// available when the trace is pinned.
    pub depth: Option<f64>,
}

mod opt_matrix_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<ComplexMatrix>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(ms) => matrix_list_serde::serialize(ms, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<ComplexMatrix>>, D::Error> {
        matrix_list_serde::deserialize(d).map(Some)
    }
}

/// Re-evaluated dual pencil.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PencilCertificate {
    pub kind: SeparatorKind,
    #[serde(with = "matrix_list_serde")]
    pub pencil: Vec<ComplexMatrix>,
    pub coefficients: Vec<f64>,
    pub claimed_margin: f64,
    pub reevaluated_margin: f64,
    pub pencil_min_eigenvalue: f64,
}

// ---------------------------------------------------------------------------
// realification

fn realify(h: &ComplexMatrix) -> DMatrix<f64> {
    let n = h.nrows();
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            r[(i, j)] = z.re;
            r[(i + n, j + n)] = z.re;
            r[(i, j + n)] = -z.im;
            r[(i + n, j)] = z.im;
        }
    }
    r
}

/// Averages over the complex structure and maps back; PSD is preserved.
fn complexify(x: &DMatrix<f64>) -> ComplexMatrix {
    let n = x.nrows() / 2;
    let m = DMatrix::from_fn(n, n, |i, j| {
        C64::new(0.5 * (x[(i, j)] + x[(i + n, j + n)]), 0.5 * (x[(i + n, j)] - x[(i, j + n)]))
    });
    hermitian_part(&m)
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn fro(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

fn sym_min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(sym(m)).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// standard form  min ⟨C, X⟩  s.t.  ⟨A_i, X⟩ = b_i,  X ⪰ 0  (real symmetric blocks)

#[derive(Debug, Clone)]
struct StdForm {
    sizes: Vec<usize>,
    rows: Vec<Vec<DMatrix<f64>>>,
    b: DVector<f64>,
    c: Vec<DMatrix<f64>>,
}

impl StdForm {
    fn apply(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|row| row.iter().zip(x).map(|(a, xb)| fro(a, xb)).sum::<f64>()),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
        out
    }
}

/// Orthonormalizes rows (each row is a list of blocks). Returns the new rows,
/// the new right-hand side, the map `T` with `new = T · old`, and the unit
/// null-space directions of the old rows with their right-hand side values.
struct Whitened {
    rows: Vec<Vec<DMatrix<f64>>>,
    b: DVector<f64>,
    transform: DMatrix<f64>,
    null_dirs: Vec<(DVector<f64>, f64)>,
}

fn whiten(rows: &[Vec<DMatrix<f64>>], b: &DVector<f64>) -> Whitened {
    let m = rows.len();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let g: f64 = rows[i].iter().zip(&rows[j]).map(|(a, c)| fro(a, c)).sum();
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut keep = Vec::new();
    let mut null_dirs = Vec::new();
    for k in 0..m {
        let q = eig.eigenvectors.column(k).into_owned();
        if top > 0.0 && eig.eigenvalues[k] > 1e-10 * top {
            keep.push(k);
        } else {
            let val = q.dot(b);
            null_dirs.push((q, val));
        }
    }
    let r = keep.len();
    let mut transform = DMatrix::<f64>::zeros(r, m);
    for (row, &k) in keep.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        for i in 0..m {
            transform[(row, i)] = eig.eigenvectors[(i, k)] / s;
        }
    }
    let sizes: Vec<(usize, usize)> = rows.first().map(|r0| r0.iter().map(|a| a.shape()).collect()).unwrap_or_default();
    let new_rows = (0..r)
        .map(|row| {
            sizes
                .iter()
                .enumerate()
                .map(|(blk, &(nr, nc))| {
                    let mut acc = DMatrix::<f64>::zeros(nr, nc);
                    for i in 0..m {
                        let w = transform[(row, i)];
                        if w != 0.0 {
                            acc += &rows[i][blk] * w;
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let new_b = &transform * b;
    Whitened { rows: new_rows, b: new_b, transform, null_dirs }
}

#[derive(Debug, Clone)]
struct IpmState {
    x: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    iterations: usize,
}

fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let chol = match x.clone().cholesky() {
        Some(c) => c,
        None => return 0.0,
    };
    let l = chol.l();
    let t1 = match l.solve_lower_triangular(dx) {
        Some(t) => t,
        None => return 0.0,
    };
    let t2 = match l.solve_lower_triangular(&t1.transpose()) {
        Some(t) => t,
        None => return 0.0,
    };
    let lmin = sym_min_eig(&t2);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn ipm(p: &StdForm, max_iter: usize) -> IpmState {
    let m = p.rows.len();
    let total: usize = p.sizes.iter().sum();
    let nf = total as f64;
    let bmax = p.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cnorm = p.c.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();
    let xi = 10f64.max(nf.sqrt()).max((1.0 + bmax) * nf.sqrt());
    let eta = 10f64.max(nf.sqrt()).max(cnorm);
    let mut st = IpmState {
        x: p.sizes.iter().map(|&n| DMatrix::identity(n, n) * xi).collect(),
        z: p.sizes.iter().map(|&n| DMatrix::identity(n, n) * eta).collect(),
        y: DVector::zeros(m),
        iterations: 0,
    };
    let bnorm = p.b.norm();
    let mut stalls = 0;
    let mut best: Option<(f64, IpmState)> = None;
    let mut since_best = 0;
    for it in 0..max_iter.min(IPM_ITER_CAP) {
        st.iterations = it + 1;
        let ax = p.apply(&st.x);
        let rp = &p.b - &ax;
        let aty = p.adjoint(&st.y);
        let rd: Vec<DMatrix<f64>> = p.c.iter().zip(&aty).zip(&st.z).map(|((c, a), z)| c - a - z).collect();
        let mu = st.x.iter().zip(&st.z).map(|(x, z)| fro(x, z)).sum::<f64>() / nf;
        let pobj: f64 = p.c.iter().zip(&st.x).map(|(c, x)| fro(c, x)).sum();
        let dobj = p.b.dot(&st.y);
        let pinf = rp.norm() / (1.0 + bnorm);
        let dinf = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + cnorm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        // keep the most accurate iterate; late iterations can lose accuracy
        let merit = pinf.max(dinf).max(gap);
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, st.clone()));
            since_best = 0;
        } else {
            since_best += 1;
        }
        if merit < 1e-10 || mu < 1e-15 || since_best >= 8 {
            break;
        }

        let zinv: Vec<DMatrix<f64>> =
            match st.z.iter().map(|z| z.clone().cholesky().map(|c| c.inverse())).collect::<Option<Vec<_>>>() {
                Some(v) => v,
                None => break,
            };
        // Schur complement M_ij = Σ_b tr(A_i X A_j Z⁻¹)
        let mut schur = DMatrix::<f64>::zeros(m, m);
        let mut prods: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(m);
        for j in 0..m {
            prods.push(p.rows[j].iter().zip(&st.x).zip(&zinv).map(|((a, x), zi)| x * a * zi).collect());
        }
        for i in 0..m {
            for j in i..m {
                let v: f64 = p.rows[i].iter().zip(&prods[j]).map(|(a, g)| fro(a, g)).sum();
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let diag_scale = (0..m).map(|i| schur[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let chol = match schur.clone().cholesky() {
            Some(c) => c,
            None => {
                let mut reg = schur.clone();
                for i in 0..m {
                    reg[(i, i)] += 1e-12 * diag_scale;
                }
                match reg.cholesky() {
                    Some(c) => c,
                    None => break,
                }
            }
        };

        let direction = |rc_zinv: &[DMatrix<f64>], rc: &[DMatrix<f64>]| {
            // E = R_c Z⁻¹ − X R_d Z⁻¹
            let e: Vec<DMatrix<f64>> =
                rc_zinv.iter().zip(&st.x).zip(&rd).zip(&zinv).map(|(((rcz, x), r), zi)| rcz - x * r * zi).collect();
            let rhs = &rp - p.apply(&e);
            let dy = chol.solve(&rhs);
            let atdy = p.adjoint(&dy);
            let dz: Vec<DMatrix<f64>> = rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
            let dx: Vec<DMatrix<f64>> = rc
                .iter()
                .zip(&st.x)
                .zip(&dz)
                .zip(&zinv)
                .map(|(((r, x), dzb), zi)| sym(&((r - x * dzb) * zi)))
                .collect();
            (dx, dy, dz)
        };
        let steps = |dx: &[DMatrix<f64>], dz: &[DMatrix<f64>]| {
            let ap = st.x.iter().zip(dx).map(|(x, d)| max_step(x, d)).fold(f64::INFINITY, f64::min);
            let ad = st.z.iter().zip(dz).map(|(z, d)| max_step(z, d)).fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        // predictor
        let xz: Vec<DMatrix<f64>> = st.x.iter().zip(&st.z).map(|(x, z)| x * z).collect();
        let rc_aff: Vec<DMatrix<f64>> = xz.iter().map(|m| -m).collect();
        let rcz_aff: Vec<DMatrix<f64>> = st.x.iter().map(|x| -x).collect();
        let (dxa, _dya, dza) = direction(&rcz_aff, &rc_aff);
        let (apa, ada) = steps(&dxa, &dza);
        let apa = apa.min(1.0);
        let ada = ada.min(1.0);
        let mu_aff =
            st.x.iter()
                .zip(&dxa)
                .zip(st.z.iter().zip(&dza))
                .map(|((x, dx), (z, dz))| fro(&(x + dx * apa), &(z + dz * ada)))
                .sum::<f64>()
                / nf;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let rc: Vec<DMatrix<f64>> = xz
            .iter()
            .zip(dxa.iter().zip(&dza))
            .map(|(m, (dx, dz))| DMatrix::identity(m.nrows(), m.ncols()) * (sigma * mu) - m - dx * dz)
            .collect();
        let rcz: Vec<DMatrix<f64>> = rc.iter().zip(&zinv).map(|(r, zi)| r * zi).collect();
        let (dx, dy, dz) = direction(&rcz, &rc);
        let (ap, ad) = steps(&dx, &dz);
        let gamma = 0.95;
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        for (x, d) in st.x.iter_mut().zip(&dx) {
            *x = sym(&(&*x + d * ap));
        }
        for (z, d) in st.z.iter_mut().zip(&dz) {
            *z = sym(&(&*z + d * ad));
        }
        st.y += dy * ad;
    }
    let iterations = st.iterations;
    match best {
        Some((_, mut b)) => {
            b.iterations = iterations;
            b
        }
        None => st,
    }
}

// ---------------------------------------------------------------------------

/// Prepared problem: realified, row-normalized, whitened.
struct Prepared {
    rows_orig: Vec<AffineConstraint>,
    real_sizes: Vec<usize>,
    /// whitened rows `Ã = W D A` (realified blocks) and `b̃`
    rows: Vec<Vec<DMatrix<f64>>>,
    b: DVector<f64>,
    /// `y_orig = map · ỹ`
    map: DMatrix<f64>,
    inconsistency: Option<(DVector<f64>, f64)>,
}

fn prepare(p: &SdpFeasibility, tol: f64) -> Prepared {
    let rows_orig = p.rows();
    let real_sizes: Vec<usize> = p.blocks.iter().map(|&n| 2 * n).collect();
    let m = rows_orig.len();
    let mut scale = vec![0.0; m];
    let mut rows: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(m);
    let mut b = DVector::zeros(m);
    for (k, c) in rows_orig.iter().enumerate() {
        let mut blocks: Vec<DMatrix<f64>> = real_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for bc in &c.coeff {
            blocks[bc.block] += realify(&bc.matrix) * 0.5;
        }
        let norm = blocks.iter().map(|a| a.norm_squared()).sum::<f64>().sqrt();
        scale[k] = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        if norm > 0.0 {
            for a in &mut blocks {
                *a *= scale[k];
            }
        }
        b[k] = c.rhs * scale[k];
        rows.push(blocks);
    }
    // rows with zero coefficients but nonzero rhs are inconsistent by themselves
    let mut inconsistency = None;
    for (k, c) in rows_orig.iter().enumerate() {
        if scale[k] == 0.0 && c.rhs.abs() > tol {
            let mut y = DVector::zeros(m);
            y[k] = c.rhs.signum();
            inconsistency = Some((y, c.rhs.abs()));
        }
    }
    let w = whiten(&rows, &b);
    if inconsistency.is_none() {
        if let Some((q, val)) =
            w.null_dirs.iter().filter(|(_, val)| val.abs() > tol).max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        {
            let y = DVector::from_iterator(m, q.iter().zip(&scale).map(|(qi, s)| qi * s * val.signum()));
            // realified rows carry an extra factor √2 relative to ‖C_k‖
            inconsistency = Some((y, val.abs() / std::f64::consts::SQRT_2));
        }
    }
    let d = DMatrix::from_diagonal(&DVector::from_vec(scale));
    let map = d * w.transform.transpose();
    Prepared { rows_orig, real_sizes, rows: w.rows, b: w.b, map, inconsistency }
}

/// Decides feasibility of `p` to tolerance `tol` (normalized constraint residual).
pub fn solve_feasibility(p: &SdpFeasibility, tol: f64, max_iter: usize) -> Result<Verdict> {
    p.validate()?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::BadProblem("tolerance must be positive".into()));
    }
    let prep = prepare(p, tol);
    if let Some((y, margin)) = prep.inconsistency.clone() {
        let separator = Separator {
            kind: SeparatorKind::Affine,
            coefficients: y.iter().copied().collect(),
            margin,
            trace_bound: None,
        };
        return Ok(Verdict {
            status: Status::Infeasible,
            witness: None,
            separator: Some(separator),
            iterations: 0,
            residual: margin,
            depth: None,
        });
    }
    let n_real: usize = prep.real_sizes.iter().sum();
    if prep.rows.is_empty() {
        let witness: Vec<ComplexMatrix> = p.blocks.iter().map(|&n| ComplexMatrix::zeros(n, n)).collect();
        let residual = p.residual(&witness);
        return Ok(Verdict {
            status: Status::Feasible,
            witness: Some(witness),
            separator: None,
            iterations: 0,
            residual,
            depth: None,
        });
    }

    // trace direction: w_l = ⟨Ã_l, I⟩
    let w =
        DVector::from_iterator(prep.rows.len(), prep.rows.iter().map(|row| row.iter().map(|a| a.trace()).sum::<f64>()));
    let nf = n_real as f64;
    let pinned = nf - w.norm_squared() <= 1e-9 * nf;

    if pinned {
        solve_pinned(p, &prep, &w, tol, max_iter)
    } else {
        solve_phase_one(p, &prep, &w, tol, max_iter)
    }
}

/// Trace of every feasible `V` is `T`: maximize `t` with `V − tI ⪰ 0`.
fn solve_pinned(p: &SdpFeasibility, prep: &Prepared, w: &DVector<f64>, tol: f64, max_iter: usize) -> Result<Verdict> {
    let nf: f64 = prep.real_sizes.iter().sum::<usize>() as f64;
    let t_real = w.dot(&prep.b);
    // W = V − tI with t = (T − tr W)/N  ⇒  Ã(W) − (tr W / N) w = b̃ − (T/N) w
    let hat_rows: Vec<Vec<DMatrix<f64>>> = prep
        .rows
        .iter()
        .zip(w.iter())
        .map(|(row, &wl)| row.iter().map(|a| a - DMatrix::identity(a.nrows(), a.ncols()) * (wl / nf)).collect())
        .collect();
    let hat_b = &prep.b - w * (t_real / nf);
    let wh = whiten(&hat_rows, &hat_b);
    let std = StdForm {
        sizes: prep.real_sizes.clone(),
        rows: wh.rows,
        b: wh.b,
        c: prep.real_sizes.iter().map(|&n| DMatrix::identity(n, n)).collect(),
    };
    let st = if std.rows.is_empty() {
        // only the trace is constrained
        IpmState {
            x: prep.real_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
            z: prep.real_sizes.iter().map(|&n| DMatrix::identity(n, n)).collect(),
            y: DVector::zeros(0),
            iterations: 0,
        }
    } else {
        ipm(&std, max_iter)
    };
    let trace_w: f64 = st.x.iter().map(|x| x.trace()).sum();
    let t = (t_real - trace_w) / nf;
    let x_full: Vec<DMatrix<f64>> = st.x.iter().map(|x| x + DMatrix::identity(x.nrows(), x.ncols()) * t).collect();

    // dual: ŷ in Â coordinates, y = ŷ − (1 + w·ŷ/N) w in Ã coordinates
    let y_hat = wh.transform.transpose() * &st.y;
    let y_tilde = &y_hat - w * (1.0 + w.dot(&y_hat) / nf);
    let trace_bound = t_real / 2.0;
    classify(p, prep, &x_full, &y_tilde, Some(trace_bound), Some(t), st.iterations, tol)
}

/// Trace not pinned: minimize `s ≥ 0` with `V + sI` feasible.
fn solve_phase_one(
    p: &SdpFeasibility,
    prep: &Prepared,
    w: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Verdict> {
    let mut sizes = prep.real_sizes.clone();
    sizes.push(1);
    let rows: Vec<Vec<DMatrix<f64>>> = prep
        .rows
        .iter()
        .zip(w.iter())
        .map(|(row, &wl)| {
            let mut r = row.clone();
            r.push(DMatrix::from_element(1, 1, -wl));
            r
        })
        .collect();
    let mut c: Vec<DMatrix<f64>> = prep.real_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    c.push(DMatrix::from_element(1, 1, 1.0));
    let std = StdForm { sizes, rows, b: prep.b.clone(), c };
    let st = ipm(&std, max_iter);
    let nblocks = prep.real_sizes.len();
    let x_full: Vec<DMatrix<f64>> = st.x[..nblocks].to_vec();
    classify(p, prep, &x_full, &st.y, None, None, st.iterations, tol)
}

#[allow(clippy::too_many_arguments)]
fn classify(
    p: &SdpFeasibility,
    prep: &Prepared,
    x_real: &[DMatrix<f64>],
    y_tilde: &DVector<f64>,
    trace_bound: Option<f64>,
    depth: Option<f64>,
    iterations: usize,
    tol: f64,
) -> Result<Verdict> {
    // primal witness: complexify, clip to the PSD cone
    let mut witness = Vec::with_capacity(x_real.len());
    for x in x_real {
        let v = complexify(x);
        let eig = SymmetricEigen::new(v.clone());
        let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let v = if lmin < 0.0 {
            let clipped = eig.eigenvalues.map(|l| C64::new(l.max(0.0), 0.0));
            hermitian_part(&(&eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.adjoint()))
        } else {
            v
        };
        witness.push(v);
    }
    let residual = p.residual(&witness);
    let witness_min_eig = witness.iter().map(crate::linalg::lambda_min).fold(f64::INFINITY, f64::min);
    if residual <= tol && witness_min_eig >= -WITNESS_PSD_TOL {
        return Ok(Verdict {
            status: Status::Feasible,
            witness: Some(witness),
            separator: None,
            iterations,
            residual,
            depth,
        });
    }

    let y_orig = &prep.map * y_tilde;
    if let Some(sep) = cone_separator(p, &prep.rows_orig, y_orig.as_slice(), trace_bound) {
        if sep.margin >= 10.0 * tol {
            return Ok(Verdict {
                status: Status::Infeasible,
                witness: None,
                separator: Some(sep),
                iterations,
                residual,
                depth,
            });
        }
    }
    Ok(Verdict { status: Status::Unknown, witness: None, separator: None, iterations, residual, depth })
}

/// Evaluates the pencil `S = −Σ y_k C_k` and returns the certified margin.
fn pencil_margin(
    p: &SdpFeasibility,
    rows: &[AffineConstraint],
    y: &[f64],
    trace_bound: Option<f64>,
) -> (Vec<ComplexMatrix>, f64, f64) {
    let mut pencil: Vec<ComplexMatrix> = p.blocks.iter().map(|&n| ComplexMatrix::zeros(n, n)).collect();
    let mut by = 0.0;
    for (c, &yk) in rows.iter().zip(y) {
        by += c.rhs * yk;
        for bc in &c.coeff {
            pencil[bc.block] -= &bc.matrix * C64::new(yk, 0.0);
        }
    }
    let pencil: Vec<ComplexMatrix> = pencil.iter().map(hermitian_part).collect();
    let eta = pencil.iter().map(crate::linalg::lambda_min).fold(f64::INFINITY, f64::min).min(0.0).abs();
    let tau: f64 = pencil.iter().map(|s| s.trace().re).sum();
    let n = p.dim() as f64;
    let snorm = pencil.iter().map(|s| s.norm_squared()).sum::<f64>().sqrt();
    let margin = match trace_bound {
        Some(tb) => {
            let denom = tau + eta * n;
            if denom > 0.0 {
                (by - eta * tb.max(0.0)) / denom
            } else {
                f64::NEG_INFINITY
            }
        }
        None => {
            // without a trace bound only rounding-level negativity is tolerated
            if eta <= 1e-11 * snorm.max(1e-300) && tau > 0.0 {
                by / tau
            } else {
                f64::NEG_INFINITY
            }
        }
    };
    (pencil, margin, -eta)
}

fn cone_separator(
    p: &SdpFeasibility,
    rows: &[AffineConstraint],
    y: &[f64],
    trace_bound: Option<f64>,
) -> Option<Separator> {
    let (pencil, margin, _) = pencil_margin(p, rows, y, trace_bound);
    if !margin.is_finite() || margin <= 0.0 {
        return None;
    }
    // normalize to tr S = 1
    let tau: f64 = pencil.iter().map(|s| s.trace().re).sum();
    let coefficients = y.iter().map(|v| v / tau).collect();
    Some(Separator { kind: SeparatorKind::Cone, coefficients, margin, trace_bound })
}

/// Re-evaluates the separating pencil carried by an `Infeasible` verdict.
pub fn dual_witness(p: &SdpFeasibility, v: &Verdict) -> Result<PencilCertificate> {
    let sep = match (&v.status, &v.separator) {
        (Status::Infeasible, Some(sep)) => sep,
        _ => return Err(Error::NoCertificate),
    };
    let rows = p.rows();
    if sep.coefficients.len() != rows.len() {
        return Err(Error::BadProblem("certificate does not match the problem".into()));
    }
    match sep.kind {
        SeparatorKind::Cone => {
            let (pencil, margin, min_eig) = pencil_margin(p, &rows, &sep.coefficients, sep.trace_bound);
            Ok(PencilCertificate {
                kind: sep.kind,
                pencil,
                coefficients: sep.coefficients.clone(),
                claimed_margin: sep.margin,
                reevaluated_margin: margin,
                pencil_min_eigenvalue: min_eig,
            })
        }
        SeparatorKind::Affine => {
            let mut pencil: Vec<ComplexMatrix> = p.blocks.iter().map(|&n| ComplexMatrix::zeros(n, n)).collect();
            let mut by = 0.0;
            for (c, &yk) in rows.iter().zip(&sep.coefficients) {
                by += c.rhs * yk;
                for bc in &c.coeff {
                    pencil[bc.block] -= &bc.matrix * C64::new(yk, 0.0);
                }
            }
            let ynorm_scaled: f64 =
                rows.iter().zip(&sep.coefficients).map(|(c, yk)| (yk * row_norm(c)).powi(2)).sum::<f64>().sqrt();
            let leak = pencil.iter().map(|s| s.norm()).sum::<f64>();
            let denom = if ynorm_scaled > 0.0 { ynorm_scaled } else { 1.0 };
            let margin = if leak <= 1e-9 * denom { by.abs() / denom } else { f64::NEG_INFINITY };
            Ok(PencilCertificate {
                kind: sep.kind,
                pencil,
                coefficients: sep.coefficients.clone(),
                claimed_margin: sep.margin,
                reevaluated_margin: margin,
                pencil_min_eigenvalue: 0.0,
            })
        }
    }
}

/// Statuses of the `floor = −eps` (relaxed) and `floor = +eps` (tightened)
/// problems; used to bracket answers that sit on the cone boundary.
pub fn bracket(p: &SdpFeasibility, eps: f64, tol: f64, max_iter: usize) -> Result<(Verdict, Verdict)> {
    let relaxed = solve_feasibility(&p.with_eigenvalue_floor(-eps), tol, max_iter)?;
    let tightened = solve_feasibility(&p.with_eigenvalue_floor(eps), tol, max_iter)?;
    Ok((relaxed, tightened))
}

/// Random instance satisfied by a planted positive definite point.
pub fn planted_feasible<R: rand::Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    pin_trace: bool,
) -> (SdpFeasibility, ComplexMatrix) {
    use crate::random::{random_hermitian, random_matrix};
    let g = random_matrix(rng, n, n);
    let v0 = hermitian_part(&(&g * g.adjoint() * C64::new(1.0 / n as f64, 0.0) + identity(n) * C64::new(0.1, 0.0)));
    let mut p = SdpFeasibility::new(n);
    for _ in 0..m {
        let c = random_hermitian(rng, n);
        let rhs = hs_inner(&c, &v0);
        p.push(AffineConstraint::single(c, rhs));
    }
    if pin_trace {
        p.trace_normalization = Some(v0.trace().re);
    }
    (p, v0)
}

/// Random instance whose affine slice sits at eigenvalue distance exactly
/// `delta` from the cone: the slice contains `V0 − δ uu*` with `V0 u = 0`,
/// and `⟨uu*, V⟩ = −δ` forces `λ_min(V) ≤ −δ` on the whole slice.
pub fn planted_infeasible<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, m: usize, delta: f64) -> SdpFeasibility {
    use crate::random::{random_hermitian, random_matrix, random_unit_vector};
    let u = random_unit_vector(rng, n);
    let proj = identity(n) - &u * u.adjoint();
    let g = random_matrix(rng, n, n);
    let v0 = hermitian_part(&(&proj * (&g * g.adjoint() + identity(n)) * &proj));
    let uu = hermitian_part(&(&u * u.adjoint()));
    let vstar = &v0 - &uu * C64::new(delta, 0.0);
    let mut p = SdpFeasibility::new(n);
    p.push(AffineConstraint::single(uu, -delta));
    for _ in 0..m {
        let c = random_hermitian(rng, n);
        let rhs = hs_inner(&c, &vstar);
        p.push(AffineConstraint::single(c, rhs));
    }
    p.trace_normalization = Some(vstar.trace().re);
    p
}
