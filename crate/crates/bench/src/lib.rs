//! Inputs shared by the benchmarks.

use mconvex_core::geometry::ConvexBody;
use mconvex_core::linalg::{from_real_rows, pauli_x, pauli_z};
use mconvex_core::random::{random_matrix, seeded};
use mconvex_core::sdp::{planted_feasible, planted_infeasible, SdpFeasibility};
use mconvex_core::{ComplexMatrix, OperatorTuple};

pub fn pauli_pair() -> OperatorTuple {
    OperatorTuple::hermitian(vec![pauli_x(), pauli_z()]).expect("hermitian")
}

pub fn nilpotent_parts() -> OperatorTuple {
    OperatorTuple::real_imag(&from_real_rows(&[&[0.0, 2.0], &[0.0, 0.0]])).expect("square")
}

pub fn square() -> ConvexBody {
    ConvexBody::cube(2)
}

pub fn random_square(n: usize, seed: u64) -> ComplexMatrix {
    random_matrix(&mut seeded(seed), n, n)
}

pub fn planted(n: usize, feasible: bool, seed: u64) -> SdpFeasibility {
    let mut rng = seeded(seed);
    let m = n * n / 2;
    if feasible {
        planted_feasible(&mut rng, n, m, true).0
    } else {
        planted_infeasible(&mut rng, n, m, 0.2)
    }
}
