//! Dense complex linear algebra: Hermitian spectra, norms, numerical radius,
//! commutants, unitary-similarity invariants and the 2×2 constant-diagonal form.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub const fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn real(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Builds a matrix from rows of complex entries.
pub fn from_rows(rows: &[Vec<C64>]) -> ComplexMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, cols, |i, j| rows[i][j])
}

/// Builds a matrix from rows of real entries.
pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    DMatrix::from_fn(r, cols, |i, j| real(rows[i][j]))
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    DMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&v| real(v))))
}

pub fn diag_complex(values: &[C64]) -> ComplexMatrix {
    DMatrix::from_diagonal(&DVector::from_column_slice(values))
}

pub fn identity(n: usize) -> ComplexMatrix {
    DMatrix::identity(n, n)
}

pub fn pauli_x() -> ComplexMatrix {
    from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> ComplexMatrix {
    from_rows(&[vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]])
}

pub fn pauli_z() -> ComplexMatrix {
    from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
}

/// Largest entry modulus, floored at 1; used to make tolerances scale-relative.
pub fn scale_of(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(1.0, f64::max)
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

pub fn is_hermitian(m: &ComplexMatrix, rel_tol: f64) -> bool {
    hermitian_defect(m) <= rel_tol * scale_of(m)
}

/// `(m + m*)/2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `(m - m*)/(2i)`, so that `m = re + i·im`.
pub fn skew_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m - m.adjoint()) * c(0.0, -0.5)
}

pub fn direct_sum(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = DMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Real Hilbert–Schmidt pairing `Re tr(a* b)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Output of [`herm_eig`]: ascending eigenvalues and matching orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn herm_eig(h: &ComplexMatrix) -> Result<HermEig> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!("expected square matrix, got {}x{}", h.nrows(), h.ncols())));
    }
    let defect = hermitian_defect(h);
    if defect > HERMITIAN_TOL * scale_of(h) {
        return Err(Error::NonHermitianInput { asymmetry: defect });
    }
    Ok(herm_eig_unchecked(&hermitian_part(h)))
}

/// [`herm_eig`] without the symmetry check; the caller guarantees Hermiticity.
pub(crate) fn herm_eig_unchecked(h: &ComplexMatrix) -> HermEig {
    let n = h.nrows();
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    HermEig { values, vectors }
}

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix (unchecked).
pub fn top_eigenpair(h: &ComplexMatrix) -> (f64, DVector<C64>) {
    let eig = herm_eig_unchecked(h);
    let n = h.nrows();
    (eig.values[n - 1], eig.vectors.column(n - 1).into_owned())
}

/// Largest eigenvalue of the Hermitian part.
pub fn lambda_max(h: &ComplexMatrix) -> f64 {
    let eig = SymmetricEigen::new(hermitian_part(h));
    eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest eigenvalue of the Hermitian part.
pub fn lambda_min(h: &ComplexMatrix) -> f64 {
    let eig = SymmetricEigen::new(hermitian_part(h));
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Operator norm (largest singular value).
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Maximizes a 2π-periodic function: dense grid, then golden-section refinement
/// around every local maximum of the grid. Returns `(theta, value)`.
pub fn maximize_on_circle<F>(f: F, grid: usize, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let grid = grid.max(8);
    let step = std::f64::consts::TAU / grid as f64;
    let samples: Vec<f64> = (0..grid).map(|k| f(k as f64 * step)).collect();
    let mut best = (0.0, f64::NEG_INFINITY);
    for (k, &v) in samples.iter().enumerate() {
        if v > best.1 {
            best = (k as f64 * step, v);
        }
    }
    let spread = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - samples.iter().copied().fold(f64::INFINITY, f64::min);
    if spread <= tol * 1e-3 {
        return best;
    }
    for k in 0..grid {
        let prev = samples[(k + grid - 1) % grid];
        let next = samples[(k + 1) % grid];
        let here = samples[k];
        if here < prev || here < next {
            continue;
        }
        let centre = k as f64 * step;
        let (t, v) = golden_max(&f, centre - step, centre + step, tol);
        if v > best.1 {
            best = (t.rem_euclid(std::f64::consts::TAU), v);
        }
    }
    best
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let width_goal = (tol * 1e-2).max(1e-13);
    for _ in 0..200 {
        if hi - lo <= width_goal {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `Re(e^{iθ} m)`.
pub fn rotated_real_part(m: &ComplexMatrix, theta: f64) -> ComplexMatrix {
    hermitian_part(&(m * C64::from_polar(1.0, theta)))
}

/// Numerical radius `w(m) = max_θ λ_max(Re(e^{iθ} m))` with absolute error at most `tol`.
pub fn numerical_radius(m: &ComplexMatrix, tol: f64) -> f64 {
    assert!(m.is_square(), "numerical radius needs a square matrix");
    let tol = if tol > 0.0 { tol } else { 1e-10 };
    maximize_on_circle(|t| lambda_max(&rotated_real_part(m, t)), 64, tol).1
}

/// A d-tuple of n×n complex matrices, optionally flagged Hermitian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::TupleJson", into = "crate::io::TupleJson")]
pub struct OperatorTuple {
    mats: Vec<ComplexMatrix>,
    hermitian: bool,
}

impl OperatorTuple {
    /// Validates shapes and finiteness; Hermitian tuples are checked against
    /// [`HERMITIAN_TOL`] and then symmetrized.
    pub fn new(mats: Vec<ComplexMatrix>, hermitian: bool) -> Result<Self> {
        let first = mats.first().ok_or_else(|| Error::InvalidInput("tuple needs at least one matrix".into()))?;
        let n = first.nrows();
        if n == 0 {
            return Err(Error::InvalidInput("matrices must be at least 1x1".into()));
        }
        for (j, m) in mats.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "matrix {j} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!("matrix {j} has non-finite entries")));
            }
        }
        let mats = if hermitian {
            let mut out = Vec::with_capacity(mats.len());
            for m in mats {
                let defect = hermitian_defect(&m);
                if defect > HERMITIAN_TOL * scale_of(&m) {
                    return Err(Error::NonHermitianInput { asymmetry: defect });
                }
                out.push(hermitian_part(&m));
            }
            out
        } else {
            mats
        };
        Ok(Self { mats, hermitian })
    }

    pub fn hermitian(mats: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(mats, true)
    }

    pub fn general(mats: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(mats, false)
    }

    /// Flags the tuple Hermitian when every matrix is (within tolerance).
    pub fn auto(mats: Vec<ComplexMatrix>) -> Result<Self> {
        let herm = mats.iter().all(|m| is_hermitian(m, HERMITIAN_TOL));
        Self::new(mats, herm)
    }

    /// Tuple of scalar (1×1) matrices.
    pub fn scalar_point(coords: &[f64]) -> Self {
        let mats = coords.iter().map(|&x| DMatrix::from_element(1, 1, real(x))).collect();
        Self { mats, hermitian: true }
    }

    /// `(Re m, Im m)` as a Hermitian pair.
    pub fn real_imag(m: &ComplexMatrix) -> Result<Self> {
        Self::hermitian(vec![hermitian_part(m), skew_part(m)])
    }

    pub fn d(&self) -> usize {
        self.mats.len()
    }

    pub fn n(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn mats(&self) -> &[ComplexMatrix] {
        &self.mats
    }

    pub fn mat(&self, j: usize) -> &ComplexMatrix {
        &self.mats[j]
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn require_hermitian(&self) -> Result<()> {
        if self.hermitian {
            Ok(())
        } else {
            let defect = self.mats.iter().map(hermitian_defect).fold(0.0, f64::max);
            Err(Error::NonHermitianInput { asymmetry: defect })
        }
    }

    pub fn into_mats(self) -> Vec<ComplexMatrix> {
        self.mats
    }

    /// `v* a_j v` for every `j`; `v` may be any n×k matrix (an isometry gives a compression).
    pub fn compress(&self, v: &ComplexMatrix) -> Self {
        let vs = v.adjoint();
        let mats = self.mats.iter().map(|m| &vs * m * v).collect::<Vec<_>>();
        let mats = if self.hermitian { mats.iter().map(hermitian_part).collect() } else { mats };
        Self { mats, hermitian: self.hermitian }
    }

    /// Unitary conjugation `u* a_j u`.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Self {
        self.compress(u)
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.d() != other.d() {
            return Err(Error::TupleMismatch(format!("d = {} vs {}", self.d(), other.d())));
        }
        let mats = self.mats.iter().zip(&other.mats).map(|(a, b)| direct_sum(a, b)).collect();
        Ok(Self { mats, hermitian: self.hermitian && other.hermitian })
    }

    /// Direct sum of `k` copies.
    pub fn ampliate(&self, k: usize) -> Self {
        let mut out = self.clone();
        for _ in 1..k.max(1) {
            out = out.direct_sum(self).expect("same d");
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { mats: self.mats.iter().map(|m| m.scale(s)).collect(), hermitian: self.hermitian }
    }

    /// Largest entry-wise distance to another tuple of the same shape.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.d() != other.d() || self.n() != other.n() {
            return f64::INFINITY;
        }
        self.mats.iter().zip(&other.mats).map(|(a, b)| max_abs(&(a - b))).fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.mats.iter().map(op_norm).fold(0.0, f64::max)
    }
}

/// A unitary together with its measured defect `‖u*u − I‖`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitaryCertificate {
    #[serde(with = "crate::io::matrix_serde")]
    pub u: ComplexMatrix,
    pub residual: f64,
}

impl UnitaryCertificate {
    pub fn new(u: ComplexMatrix) -> Self {
        let n = u.ncols();
        let residual = op_norm(&(u.adjoint() * &u - identity(n)));
        Self { u, residual }
    }
}

/// Complex dimension of the commutant of `{a_j, a_j*}`.
pub fn commutant_dimension(t: &OperatorTuple) -> usize {
    let n = t.n();
    let n2 = n * n;
    let eye = identity(n);
    let mut blocks: Vec<ComplexMatrix> = Vec::new();
    for m in t.mats() {
        for x in [m.clone(), m.adjoint()] {
            // vec(S x − x S) = (xᵀ ⊗ I − I ⊗ x) vec(S), column-major vec
            blocks.push(x.transpose().kronecker(&eye) - eye.kronecker(&x));
        }
    }
    let mut system = DMatrix::<C64>::zeros(blocks.len() * n2, n2);
    for (k, b) in blocks.iter().enumerate() {
        system.view_mut((k * n2, 0), (n2, n2)).copy_from(b);
    }
    let sv = system.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return n2;
    }
    let rank = sv.iter().filter(|&&s| s > 1e-8 * top).count();
    n2 - rank
}

/// Compares traces of all words of length `≤ max_len` in the letters `a_j, a_j*`.
///
/// Works on the span of word pairs `(w(t1), w(t2))`, grown one letter at a
/// time until it stabilizes or reaches `max_len`; the trace difference is a
/// linear functional, so it vanishes on all words iff it vanishes on an
/// orthonormal basis of that span. Default `max_len` is `2n²`.
///
/// Tuples of different matrix size are reported inequivalent; tuples of
/// different length are an error.
pub fn words_equivalent(t1: &OperatorTuple, t2: &OperatorTuple, max_len: Option<usize>) -> Result<bool> {
    if t1.d() != t2.d() {
        return Err(Error::DimensionMismatch(format!("d = {} vs {}", t1.d(), t2.d())));
    }
    if t1.n() != t2.n() {
        return Ok(false);
    }
    let n = t1.n();
    let max_len = max_len.unwrap_or(2 * n * n);
    let scale = t1.max_norm().max(t2.max_norm()).max(f64::MIN_POSITIVE);
    let letters: Vec<(ComplexMatrix, ComplexMatrix)> = t1
        .mats()
        .iter()
        .zip(t2.mats())
        .flat_map(|(a, b)| {
            let a = a.unscale(scale);
            let b = b.unscale(scale);
            [(a.adjoint(), b.adjoint()), (a, b)]
        })
        .collect();

    let trace_gap = |p: &(ComplexMatrix, ComplexMatrix)| (trace(&p.0) - trace(&p.1)).norm();
    let pair_inner = |p: &(ComplexMatrix, ComplexMatrix), q: &(ComplexMatrix, ComplexMatrix)| -> C64 {
        p.0.iter().zip(q.0.iter()).map(|(x, y)| x.conj() * y).sum::<C64>()
            + p.1.iter().zip(q.1.iter()).map(|(x, y)| x.conj() * y).sum::<C64>()
    };
    let pair_norm = |p: &(ComplexMatrix, ComplexMatrix)| (p.0.norm_squared() + p.1.norm_squared()).sqrt();

    let start = (identity(n), identity(n));
    let norm0 = pair_norm(&start);
    let mut basis = vec![(start.0.unscale(norm0), start.1.unscale(norm0))];
    let mut frontier = vec![0usize];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for &idx in &frontier {
            for (la, lb) in &letters {
                let mut cand = (la * &basis[idx].0, lb * &basis[idx].1);
                let before = pair_norm(&cand);
                if before < 1e-14 {
                    continue;
                }
                for _ in 0..2 {
                    for q in &basis {
                        let coef = pair_inner(q, &cand);
                        cand.0 -= &q.0 * coef;
                        cand.1 -= &q.1 * coef;
                    }
                }
                let after = pair_norm(&cand);
                if after > 1e-9 * before && after > 1e-13 {
                    basis.push((cand.0.unscale(after), cand.1.unscale(after)));
                    next.push(basis.len() - 1);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(basis.iter().all(|p| trace_gap(p) <= 1e-8))
}

/// Unitary `u` with `u* m u` having equal diagonal entries (2×2 only).
pub fn constant_diagonal_form(m: &ComplexMatrix) -> Result<(ComplexMatrix, UnitaryCertificate)> {
    if m.shape() != (2, 2) {
        return Err(Error::DimensionMismatch(format!("expected 2x2, got {}x{}", m.nrows(), m.ncols())));
    }
    let scale = scale_of(m);
    if (m[(0, 0)] - m[(1, 1)]).norm() <= 1e-14 * scale {
        return Ok((m.clone(), UnitaryCertificate::new(identity(2))));
    }
    let shift = trace(m) * 0.5;
    let m0 = m - identity(2) * shift;
    let h = hermitian_part(&m0);
    let k = skew_part(&m0);
    // Bloch coordinates of a traceless Hermitian 2×2 matrix.
    let bloch = |x: &ComplexMatrix| [x[(1, 0)].re, x[(1, 0)].im, x[(0, 0)].re];
    let hv = bloch(&h);
    let kv = bloch(&k);
    let cross = [hv[1] * kv[2] - hv[2] * kv[1], hv[2] * kv[0] - hv[0] * kv[2], hv[0] * kv[1] - hv[1] * kv[0]];
    let norm3 = |v: &[f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let r = if norm3(&cross) > 1e-14 * scale * scale {
        cross
    } else {
        // h and k are parallel: any direction orthogonal to the nonzero one works.
        let base = if norm3(&hv) >= norm3(&kv) { hv } else { kv };
        let bn = norm3(&base);
        let b = [base[0] / bn, base[1] / bn, base[2] / bn];
        let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        axes.iter()
            .map(|e| {
                let dot = e[0] * b[0] + e[1] * b[1] + e[2] * b[2];
                [e[0] - dot * b[0], e[1] - dot * b[1], e[2] - dot * b[2]]
            })
            .find(|r| norm3(r) > 0.5)
            .expect("some axis is far from a unit vector")
    };
    let rn = norm3(&r);
    let (x, y, z) = (r[0] / rn, r[1] / rn, r[2] / rn);
    let polar = z.clamp(-1.0, 1.0).acos();
    let azimuth = y.atan2(x);
    let (s, co) = ((polar / 2.0).sin(), (polar / 2.0).cos());
    let phase = C64::from_polar(1.0, azimuth);
    let u = from_rows(&[vec![real(co), phase.conj() * s], vec![phase * s, real(-co)]]);
    let canonical = u.adjoint() * m * &u;
    Ok((canonical, UnitaryCertificate::new(u)))
}
