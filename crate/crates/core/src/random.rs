//! Seeded random matrices, unitaries and isometries.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{diag_real, direct_sum, hermitian_part, ComplexMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for sub-task `index`.
pub fn split(seed: u64, index: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| C64::new(gaussian(rng), gaussian(rng)) * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    hermitian_part(&random_matrix(rng, n, n))
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<C64> {
    let v = DVector::from_fn(n, |_, _| C64::new(gaussian(rng), gaussian(rng)));
    let norm = v.norm();
    v.unscale(norm)
}

/// Haar-distributed isometry `C^cols → C^rows` (QR with phase correction).
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    let g = random_matrix(rng, rows, cols);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..rows {
            q[(i, k)] *= phase;
        }
    }
    q.columns(0, cols).into_owned()
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    random_isometry(rng, n, n)
}

/// Hermitian matrix with operator norm exactly `norm`.
pub fn random_hermitian_with_norm<R: Rng + ?Sized>(rng: &mut R, n: usize, norm: f64) -> ComplexMatrix {
    let h = random_hermitian(rng, n);
    let current = crate::linalg::op_norm(&h).max(f64::MIN_POSITIVE);
    h.scale(norm / current)
}

/// Commuting Hermitian pair `(u D1 u*, u D2 u*)` with planted joint eigenvalues.
pub fn random_commuting_hermitian_pair<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
) -> (ComplexMatrix, ComplexMatrix, Vec<(f64, f64)>) {
    let points: Vec<(f64, f64)> = (0..n).map(|_| (gaussian(rng), gaussian(rng))).collect();
    let u = random_unitary(rng, n);
    let d1 = diag_real(&points.iter().map(|p| p.0).collect::<Vec<_>>());
    let d2 = diag_real(&points.iter().map(|p| p.1).collect::<Vec<_>>());
    let a = hermitian_part(&(&u * d1 * u.adjoint()));
    let b = hermitian_part(&(&u * d2 * u.adjoint()));
    (a, b, points)
}

/// Random block-diagonal matrix helper used by tests that need reducible tuples.
pub fn block_diag(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let mut iter = blocks.iter();
    let first = iter.next().expect("at least one block").clone();
    iter.fold(first, |acc, b| direct_sum(&acc, b))
}
