//! Property tests for the structural invariants of each module.

use proptest::prelude::*;
use rand::Rng;

use mconvex_core::geometry::{
    distance_to_polygon, extreme_points, hull_2d, is_simplex, jnr_sandwich, polygon_contains, support_value,
    ConvexBody, PointD,
};
use mconvex_core::linalg::{
    commutant_dimension, constant_diagonal_form, diag_complex, herm_eig, numerical_radius, op_norm, pauli_x, pauli_z,
    real, words_equivalent,
};
use mconvex_core::models::{
    block_diagonal_model, essential_spectrum_diag, extreme_spectral_compression, joint_spectrum, sw_perturbation,
    verify_complete_isometry, Atom, DiagonalTuple, Multiplicity, NormalTuple, Sequence,
};
use mconvex_core::random::{
    random_commuting_hermitian_pair, random_hermitian, random_hermitian_with_norm, random_isometry, random_matrix,
    random_unitary, seeded,
};
use mconvex_core::ranges::{
    kmax_member, kmin_member, mrange_equal, quadratic_model, random_range_point, ucp_member, MemberStatus, RangeOptions,
};
use mconvex_core::sdp::{
    dual_witness, planted_feasible, planted_infeasible, solve_feasibility, Status, DEFAULT_MAX_ITER, DEFAULT_TOL,
    WITNESS_PSD_TOL,
};
use mconvex_core::{ComplexMatrix, OperatorTuple, C64};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

fn herm_pair(a: ComplexMatrix, b: ComplexMatrix) -> OperatorTuple {
    OperatorTuple::hermitian(vec![a, b]).unwrap()
}

fn triangle() -> ConvexBody {
    let h = 3f64.sqrt() / 2.0;
    ConvexBody::polytope(vec![PointD::xy(1.0, 0.0), PointD::xy(-0.5, h), PointD::xy(-0.5, -h)])
}

// core linear algebra

proptest! {
    #![proptest_config(cases(1000))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 2usize..=8) {
        let h = random_hermitian(&mut seeded(seed), n);
        let e = herm_eig(&h).unwrap();
        let d = diag_complex(&e.values.iter().map(|&v| real(v)).collect::<Vec<_>>());
        let back = &e.vectors * d * e.vectors.adjoint();
        prop_assert!(op_norm(&(back - &h)) <= 1e-10 * op_norm(&h));
    }
}

proptest! {
    #![proptest_config(cases(300))]

    #[test]
    fn numerical_radius_sits_between_half_norm_and_norm(seed in any::<u64>(), n in 1usize..=6) {
        let m = random_matrix(&mut seeded(seed), n, n);
        let w = numerical_radius(&m, 1e-12);
        let norm = op_norm(&m);
        prop_assert!(w <= norm * (1.0 + 1e-9));
        prop_assert!(norm <= 2.0 * w * (1.0 + 1e-9));
    }

    #[test]
    fn commutant_dimension_is_unitarily_invariant(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = seeded(seed);
        let t = herm_pair(random_hermitian(&mut rng, n), random_hermitian(&mut rng, n));
        let u = random_unitary(&mut rng, n);
        let k = commutant_dimension(&t);
        prop_assert_eq!(k, commutant_dimension(&t.conjugate(&u)));
        if k == 1 {
            prop_assert!(!words_equivalent(&t, &t.direct_sum(&t).unwrap(), None).unwrap());
        }
    }

    #[test]
    fn constant_diagonal_form_keeps_trace_and_norm(seed in any::<u64>()) {
        let m = random_matrix(&mut seeded(seed), 2, 2);
        let (c, cert) = constant_diagonal_form(&m).unwrap();
        prop_assert!((c.trace() - m.trace()).norm() <= 1e-10 * m.norm().max(1.0));
        prop_assert!((c.norm() - m.norm()).abs() <= 1e-10 * m.norm().max(1.0));
        prop_assert!(cert.residual <= 1e-10);
        prop_assert!((c[(0, 0)] - c[(1, 1)]).norm() <= 1e-10 * m.norm().max(1.0));
    }
}

// convex geometry

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn support_value_scales_linearly(seed in any::<u64>(), alpha in 0.01f64..100.0, th in 0.0f64..std::f64::consts::TAU) {
        let mut rng = seeded(seed);
        let t = herm_pair(random_hermitian(&mut rng, 3), random_hermitian(&mut rng, 3));
        let c = [th.cos(), th.sin()];
        let h1 = support_value(&t, &c).unwrap();
        let h2 = support_value(&t, &[alpha * c[0], alpha * c[1]]).unwrap();
        prop_assert!((h2 / alpha - h1).abs() <= 1e-9 * (1.0 + h1.abs()));
    }

    #[test]
    fn sandwich_is_nested_and_tightens(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = seeded(seed);
        let t = herm_pair(random_hermitian(&mut rng, n), random_hermitian(&mut rng, n));
        let mut last = f64::INFINITY;
        for m in [16, 32, 64, 128] {
            let s = jnr_sandwich(&t, m).unwrap();
            let outer = hull_2d(&s.outer);
            for p in &s.inner {
                prop_assert!(distance_to_polygon(p, &outer) <= 1e-9);
            }
            prop_assert!(s.hausdorff_bound <= last + 1e-12);
            last = s.hausdorff_bound;
        }
    }

    #[test]
    fn range_of_direct_sum_is_hull_of_ranges(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let t1 = herm_pair(random_hermitian(&mut rng, 2), random_hermitian(&mut rng, 2));
        let t2 = herm_pair(random_hermitian(&mut rng, 3), random_hermitian(&mut rng, 3));
        let m = 128;
        let (s1, s2) = (jnr_sandwich(&t1, m).unwrap(), jnr_sandwich(&t2, m).unwrap());
        let s = jnr_sandwich(&t1.direct_sum(&t2).unwrap(), m).unwrap();
        let joined = hull_2d(&[s1.outer.clone(), s2.outer.clone()].concat());
        let slack = s.hausdorff_bound + s1.hausdorff_bound + s2.hausdorff_bound + 1e-9;
        for p in &s.outer {
            prop_assert!(distance_to_polygon(p, &joined) <= slack);
        }
        for p in &joined {
            prop_assert!(distance_to_polygon(p, &hull_2d(&s.outer)) <= slack);
        }
    }

    #[test]
    fn simplex_test_survives_affine_maps(seed in any::<u64>(), d in 1usize..=3) {
        let mut rng = seeded(seed);
        let k = rng.random_range(1..=d + 2);
        let pts: Vec<PointD> = (0..k).map(|_| PointD::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect())).collect();
        let a: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let det = match d {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]),
        };
        prop_assume!(det.abs() > 0.1);
        let shift: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mapped: Vec<PointD> = pts
            .iter()
            .map(|p| PointD::new((0..d).map(|i| (0..d).map(|j| a[i][j] * p.coords[j]).sum::<f64>() + shift[i]).collect()))
            .collect();
        prop_assert_eq!(is_simplex(&pts, 1e-9).unwrap().is_simplex, is_simplex(&mapped, 1e-9).unwrap().is_simplex);
    }

    #[test]
    fn range_vertices_of_commuting_pairs_are_joint_eigenvalues(seed in any::<u64>(), n in 2usize..=7) {
        let (a, b, _) = random_commuting_hermitian_pair(&mut seeded(seed), n);
        let t = herm_pair(a, b);
        let spectrum = joint_spectrum(&NormalTuple::new(t.clone()).unwrap());
        let s = jnr_sandwich(&t, 1024).unwrap();
        let vertices = hull_2d(&s.inner);
        for v in &vertices {
            prop_assert!(spectrum.iter().any(|p| p.dist(v) <= 1e-8));
        }
        // a vertex with a very thin normal cone may be skipped by the sampled directions
        for e in extreme_points(&spectrum, 1e-9) {
            prop_assert!(distance_to_polygon(&e, &vertices) <= s.hausdorff_bound + 1e-9);
        }
    }
}

// semidefinite feasibility

proptest! {
    #![proptest_config(cases(200))]

    #[test]
    fn verdicts_agree_with_their_certificates(seed in any::<u64>(), n in 1usize..=5, m in 1usize..=8, feasible: bool) {
        let mut rng = seeded(seed);
        let p = if feasible {
            let pin = rng.random_bool(0.5);
            planted_feasible(&mut rng, n, m, pin).0
        } else {
            let gap = rng.random_range(0.01..1.0);
            planted_infeasible(&mut rng, n, m, gap)
        };
        let v = solve_feasibility(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        match v.status {
            Status::Feasible => {
                prop_assert!(feasible);
                prop_assert!(v.separator.is_none());
                let w = v.witness.as_ref().unwrap();
                prop_assert!(p.residual(w) <= DEFAULT_TOL);
                prop_assert!(w.iter().all(|b| mconvex_core::linalg::lambda_min(b) >= -WITNESS_PSD_TOL));
            }
            Status::Infeasible => {
                prop_assert!(!feasible);
                prop_assert!(v.witness.is_none());
                let cert = dual_witness(&p, &v).unwrap();
                prop_assert!(cert.reevaluated_margin > 0.0);
            }
            Status::Unknown => {}
        }
    }

    #[test]
    fn identical_problems_give_identical_verdicts(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=6) {
        let p = planted_feasible(&mut seeded(seed), n, m, seed % 2 == 0).0;
        let a = solve_feasibility(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let b = solve_feasibility(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        prop_assert_eq!(a.status, b.status);
        if let (Some(wa), Some(wb)) = (&a.witness, &b.witness) {
            for (x, y) in wa.iter().zip(wb) {
                prop_assert!((x - y).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn dropping_constraints_keeps_feasibility(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=6) {
        let (mut p, _) = planted_feasible(&mut seeded(seed), n, m, true);
        while !p.constraints.is_empty() {
            let v = solve_feasibility(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            prop_assert_ne!(v.status, Status::Infeasible);
            p.constraints.pop();
        }
    }
}

// matrix ranges

proptest! {
    #![proptest_config(cases(500))]

    #[test]
    fn kmin_members_are_kmax_members(seed in any::<u64>(), body in 0usize..3, n in 1usize..=3, r in 0.1f64..1.2) {
        let mut rng = seeded(seed);
        let k = [ConvexBody::cube(2), triangle(), ConvexBody::unit_disc()][body].clone();
        let a = herm_pair(random_hermitian_with_norm(&mut rng, n, r), random_hermitian_with_norm(&mut rng, n, r));
        let o = RangeOptions::default();
        if kmin_member(&k, &a, &o).unwrap().status == MemberStatus::In {
            prop_assert!(kmax_member(&k, &a, &o).unwrap().status.is_member());
        }
    }
}

proptest! {
    #![proptest_config(cases(60))]

    #[test]
    fn ucp_membership_is_unitarily_invariant(seed in any::<u64>(), scale in 0.3f64..1.6) {
        let mut rng = seeded(seed);
        let x = herm_pair(random_hermitian(&mut rng, 2), random_hermitian(&mut rng, 2));
        let a = random_range_point(&mut rng, &x, 2).scaled(scale);
        let (u, v) = (random_unitary(&mut rng, 2), random_unitary(&mut rng, 2));
        let o = RangeOptions::default();
        let base = ucp_member(&x, &a, &o).unwrap();
        prop_assume!(base.margin.abs() > 1e-4);
        prop_assert_eq!(ucp_member(&x.conjugate(&u), &a, &o).unwrap().status.is_member(), base.status.is_member());
        prop_assert_eq!(ucp_member(&x, &a.conjugate(&v), &o).unwrap().status.is_member(), base.status.is_member());
    }

    #[test]
    fn ranges_are_closed_under_direct_sums(seed in any::<u64>(), n in 2usize..=3, m1 in 1usize..=2, m2 in 1usize..=2) {
        let mut rng = seeded(seed);
        let x = OperatorTuple::general(vec![random_matrix(&mut rng, n, n)]).unwrap();
        let a1 = random_range_point(&mut rng, &x, m1);
        let a2 = random_range_point(&mut rng, &x, m2);
        let r = ucp_member(&x, &a1.direct_sum(&a2).unwrap(), &RangeOptions::default()).unwrap();
        prop_assert!(r.status.is_member(), "{:?}", r.status);
    }

    #[test]
    fn ranges_are_closed_under_compressions(seed in any::<u64>(), n in 2usize..=3, m in 2usize..=3, k in 1usize..=2) {
        let mut rng = seeded(seed);
        let x = herm_pair(random_hermitian(&mut rng, n), random_hermitian(&mut rng, n));
        let a = random_range_point(&mut rng, &x, m);
        let beta = random_isometry(&mut rng, m, k.min(m));
        let r = ucp_member(&x, &a.compress(&beta), &RangeOptions::default()).unwrap();
        prop_assert!(r.status.is_member(), "{:?}", r.status);
    }

    #[test]
    fn triangle_kmax_equals_kmin(seed in any::<u64>(), n in 1usize..=3, r in 0.05f64..0.7) {
        let mut rng = seeded(seed);
        let a = herm_pair(random_hermitian_with_norm(&mut rng, n, r), random_hermitian_with_norm(&mut rng, n, r));
        let o = RangeOptions::default();
        let max = kmax_member(&triangle(), &a, &o).unwrap();
        prop_assume!(max.status == MemberStatus::In && max.margin > 10.0 * o.tol);
        prop_assert_eq!(kmin_member(&triangle(), &a, &o).unwrap().status, MemberStatus::In);
    }

    #[test]
    fn commuting_pairs_lie_in_kmin_of_their_hull(seed in any::<u64>(), n in 2usize..=5) {
        let (a, b, points) = random_commuting_hermitian_pair(&mut seeded(seed), n);
        let hull = ConvexBody::polytope(points.iter().map(|&(x, y)| PointD::xy(x, y)).collect());
        let r = kmin_member(&hull, &herm_pair(a, b), &RangeOptions::default()).unwrap();
        prop_assert!(r.status.is_member(), "{:?}", r.status);
    }
}

proptest! {
    #![proptest_config(cases(6))]

    #[test]
    fn quadratic_ranges_collapse(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let l1 = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let l2 = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let coupling = random_matrix(&mut rng, 2, 2);
        let (x, a) = quadratic_model(l1, l2, &coupling);
        let x = OperatorTuple::general(vec![x]).unwrap();
        let a = OperatorTuple::general(vec![a]).unwrap();
        prop_assert!(mrange_equal(&x, &a, &[1, 2], 4, seed, &RangeOptions::default()).unwrap().equal);
    }
}

// spectral models and compact perturbations

proptest! {
    #![proptest_config(cases(60))]

    #[test]
    fn compression_is_idempotent(seed in any::<u64>(), n in 2usize..=7) {
        let (a, b, _) = random_commuting_hermitian_pair(&mut seeded(seed), n);
        let m = extreme_spectral_compression(&NormalTuple::new(herm_pair(a, b)).unwrap()).unwrap();
        let again = extreme_spectral_compression(&NormalTuple::new(m.compressed.clone()).unwrap()).unwrap();
        prop_assert_eq!(again.projector_rank, m.projector_rank);
        prop_assert!(words_equivalent(&again.compressed, &m.compressed, None).unwrap());
    }

    #[test]
    fn compression_is_completely_isometric(seed in any::<u64>(), n in 2usize..=6, p in 1usize..=3) {
        let (a, b, _) = random_commuting_hermitian_pair(&mut seeded(seed), n);
        let t = NormalTuple::new(herm_pair(a, b)).unwrap();
        let m = extreme_spectral_compression(&t).unwrap();
        prop_assert!(verify_complete_isometry(&t, &m, p, 20, seed).unwrap().max_gap <= 1e-8);
    }

    #[test]
    fn unitaries_are_their_own_model(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = seeded(seed);
        let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        prop_assume!(angles.windows(2).all(|w| w[1] - w[0] > 1e-3));
        let u = random_unitary(&mut rng, n);
        let d = diag_complex(&angles.iter().map(|&t| C64::from_polar(1.0, t)).collect::<Vec<_>>());
        let x = OperatorTuple::general(vec![&u * d * u.adjoint()]).unwrap();
        let m = extreme_spectral_compression(&NormalTuple::new(x.clone()).unwrap()).unwrap();
        prop_assert_eq!(m.projector_rank, n);
        prop_assert!(words_equivalent(&m.compressed, &x, None).unwrap());
    }

    #[test]
    fn block_models_have_irreducible_inequivalent_summands(seed in any::<u64>(), k in 1usize..=3) {
        let mut rng = seeded(seed);
        let mut candidates = Vec::new();
        for _ in 0..k {
            let t = herm_pair(random_hermitian(&mut rng, 2), random_hermitian(&mut rng, 2));
            candidates.push(t.clone());
            candidates.push(t.conjugate(&random_unitary(&mut rng, 2)));
        }
        candidates.push(herm_pair(pauli_x(), pauli_z()));
        let m = block_diagonal_model(&candidates).unwrap();
        for (i, s) in m.summands.iter().enumerate() {
            prop_assert_eq!(commutant_dimension(s), 1);
            for t in &m.summands[..i] {
                prop_assert!(!words_equivalent(s, t, None).unwrap());
            }
        }
        let whole = jnr_sandwich(&m.direct_sum, 128).unwrap();
        let parts: Vec<PointD> = m.summands.iter().flat_map(|s| jnr_sandwich(s, 128).unwrap().inner).collect();
        let joined = hull_2d(&parts);
        for p in &whole.inner {
            prop_assert!(distance_to_polygon(p, &joined) <= 1e-9 || polygon_contains(&joined, p));
        }
        for p in &joined {
            prop_assert!(distance_to_polygon(p, &whole.outer) <= 1e-9);
        }
    }

    #[test]
    fn essential_spectrum_and_displacements(seed in any::<u64>(), len in 4usize..60, atoms in 0usize..4) {
        let mut rng = seeded(seed);
        let limit = rng.random_range(-2.0..2.0);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mut t = DiagonalTuple {
            d: 1,
            atoms: vec![Atom { point: PointD::new(vec![limit + 3.0]), multiplicity: Multiplicity::Infinite }],
            sequences: vec![Sequence {
                limit: PointD::new(vec![limit]),
                prefix: (1..=len).map(|k| PointD::new(vec![limit + sign / k as f64])).collect(),
            }],
        };
        for i in 0..atoms {
            t.atoms.push(Atom { point: PointD::new(vec![10.0 + i as f64]), multiplicity: Multiplicity::Finite(1 + i) });
        }
        let ess = essential_spectrum_diag(&t, 1e-12);
        let entries = t.entries(1);
        for e in &ess {
            prop_assert!(entries.iter().any(|p| p.dist(e) <= 1e-12) || t.sequences.iter().any(|s| s.limit == *e));
        }
        let (_, rep) = sw_perturbation(&t).unwrap();
        for (p, d) in rep.entries.iter().zip(&rep.perturbation) {
            let exact = ess.iter().map(|q| q.dist(p)).fold(f64::INFINITY, f64::min);
            prop_assert!(*d <= exact + 1e-12);
        }
        let mut sorted = rep.perturbation.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        prop_assert!(sorted.last().copied().unwrap_or(0.0) <= 1.0 / len as f64 + 1e-12);
        prop_assert!(rep.sup_tail_norm.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn perturbed_truncations_stabilize(seed in any::<u64>(), len in 8usize..40) {
        let mut rng = seeded(seed);
        let t = DiagonalTuple {
            d: 2,
            atoms: vec![Atom { point: PointD::xy(0.0, 0.0), multiplicity: Multiplicity::Infinite }],
            sequences: (0..3)
                .map(|_| {
                    let (x, y) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    Sequence {
                        limit: PointD::xy(x, y),
                        prefix: (1..=2 * len).map(|k| PointD::xy(x + 1.0 / k as f64, y)).collect(),
                    }
                })
                .collect(),
        };
        let (p, rep) = sw_perturbation(&t).unwrap();
        // the perturbed tuple is commuting and diagonal, so its matrix range is
        // K^min of its level-1 hull and equal hulls mean equal ranges at every level
        let target = extreme_points(&rep.essential_spectrum, 1e-12);
        for n in [len, 2 * len] {
            let mut pts: Vec<PointD> = p.sequences.iter().flat_map(|s| s.prefix[..n].to_vec()).collect();
            pts.extend(p.sequences.iter().map(|s| s.limit.clone()));
            pts.extend(p.atoms.iter().map(|a| a.point.clone()));
            for x in &pts {
                prop_assert!(rep.essential_spectrum.iter().any(|y| y.dist(x) <= 1e-12));
            }
            let ext = extreme_points(&pts, 1e-12);
            prop_assert_eq!(ext.len(), target.len());
            for x in &ext {
                prop_assert!(target.iter().any(|y| y.dist(x) <= 1e-12));
            }
        }
    }
}
