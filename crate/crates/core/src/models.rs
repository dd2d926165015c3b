//! Spectral models of commuting normal tuples, block-diagonal models built
//! from irreducible candidates, and compact perturbations of diagonal tuples.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{extreme_points, ConvexBody, PointD};
use crate::io::matrix_serde;
use crate::linalg::{
    commutant_dimension, diag_real, herm_eig_unchecked, hermitian_part, op_norm, scale_of, skew_part, words_equivalent,
    ComplexMatrix, OperatorTuple, C64,
};
use crate::random::{random_isometry, random_matrix, seeded, split};
use crate::ranges::{kmin_member, random_range_point, MemberStatus, RangeOptions};

/// Commutation defect allowed for a commuting normal tuple, relative to scale.
pub const COMMUTE_TOL: f64 = 1e-10;
/// Joint eigenvalues closer than this are merged.
pub const POINT_MERGE_TOL: f64 = 1e-9;

/// A tuple of pairwise commuting normal matrices with its joint spectral data.
#[derive(Debug, Clone, Serialize)]
pub struct NormalTuple {
    base: OperatorTuple,
    joint_points: Vec<PointD>,
    #[serde(skip)]
    eigenspaces: Vec<ComplexMatrix>,
}

impl NormalTuple {
    pub fn new(base: OperatorTuple) -> Result<Self> {
        let scale = base.mats().iter().map(scale_of).fold(1.0, f64::max);
        let mut defect: f64 = 0.0;
        for a in base.mats() {
            for b in base.mats() {
                defect = defect.max(op_norm(&(a * b - b * a)));
                let bs = b.adjoint();
                defect = defect.max(op_norm(&(a * &bs - &bs * a)));
            }
        }
        if defect > COMMUTE_TOL * scale {
            return Err(Error::NotCommuting { defect });
        }
        let (joint_points, eigenspaces) = joint_decomposition(&base);
        Ok(Self { base, joint_points, eigenspaces })
    }

    pub fn base(&self) -> &OperatorTuple {
        &self.base
    }

    pub fn joint_points(&self) -> &[PointD] {
        &self.joint_points
    }

    /// Orthonormal basis of the joint eigenspace at `joint_points()[i]`.
    pub fn eigenspace(&self, i: usize) -> &ComplexMatrix {
        &self.eigenspaces[i]
    }
}

/// Coordinates of a joint eigenvalue: `R^d` for Hermitian tuples, otherwise
/// `(Re λ_1, Im λ_1, …, Re λ_d, Im λ_d)`.
fn joint_point(t: &OperatorTuple, v: &ComplexMatrix) -> PointD {
    let k = v.ncols() as f64;
    let vs = v.adjoint();
    let mut coords = Vec::with_capacity(2 * t.d());
    for m in t.mats() {
        let z = (&vs * m * v).trace() / C64::new(k, 0.0);
        coords.push(z.re);
        if !t.is_hermitian() {
            coords.push(z.im);
        }
    }
    PointD::new(coords)
}

fn joint_decomposition(t: &OperatorTuple) -> (Vec<PointD>, Vec<ComplexMatrix>) {
    let n = t.n();
    let mut parts: Vec<ComplexMatrix> = Vec::new();
    for m in t.mats() {
        parts.push(hermitian_part(m));
        if !t.is_hermitian() {
            parts.push(skew_part(m));
        }
    }
    let scale = parts.iter().map(scale_of).fold(1.0, f64::max);
    let mut rng = seeded(0x6a6f696e74);
    let mut spaces = Vec::new();
    split_space(ComplexMatrix::identity(n, n), &parts, scale, &mut rng, 0, &mut spaces);
    // merge spaces with coinciding points
    let mut points: Vec<PointD> = Vec::new();
    let mut merged: Vec<ComplexMatrix> = Vec::new();
    for v in spaces {
        let p = joint_point(t, &v);
        if let Some(i) = points.iter().position(|q| q.dist(&p) <= POINT_MERGE_TOL * scale) {
            let cols: Vec<_> = merged[i].column_iter().chain(v.column_iter()).map(|c| c.into_owned()).collect();
            merged[i] = ComplexMatrix::from_columns(&cols);
        } else {
            points.push(p);
            merged.push(v);
        }
    }
    (points, merged)
}

fn split_space(
    v: ComplexMatrix,
    parts: &[ComplexMatrix],
    scale: f64,
    rng: &mut crate::random::SeededRng,
    depth: usize,
    out: &mut Vec<ComplexMatrix>,
) {
    let k = v.ncols();
    let vs = v.adjoint();
    let compressed: Vec<ComplexMatrix> = parts.iter().map(|h| hermitian_part(&(&vs * h * &v))).collect();
    let scalar = compressed.iter().all(|c| {
        let mean = c.trace() / C64::new(k as f64, 0.0);
        op_norm(&(c - ComplexMatrix::identity(k, k) * mean)) <= POINT_MERGE_TOL * scale
    });
    if k == 1 || scalar || depth > 8 {
        out.push(v);
        return;
    }
    let mut comb = ComplexMatrix::zeros(k, k);
    for c in &compressed {
        comb += c * C64::new(crate::random::gaussian(rng), 0.0);
    }
    let eig = herm_eig_unchecked(&comb);
    let gap_tol = 1e-7 * scale;
    let mut start = 0;
    for i in 1..=k {
        if i == k || eig.values[i] - eig.values[i - 1] > gap_tol {
            let w = eig.vectors.columns(start, i - start).into_owned();
            let sub = &v * w;
            if i - start == k {
                // no split from this combination; try another
                split_space(sub, parts, scale, rng, depth + 1, out);
            } else {
                split_space(sub, parts, scale, rng, depth, out);
            }
            start = i;
        }
    }
}

/// Joint eigenvalues, deduplicated.
pub fn joint_spectrum(t: &NormalTuple) -> Vec<PointD> {
    t.joint_points.clone()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralModel {
    pub extreme_set: Vec<PointD>,
    pub compressed: OperatorTuple,
    pub projector_rank: usize,
    /// Isometry onto the sum of the joint eigenspaces at `extreme_set`.
    #[serde(with = "matrix_serde")]
    pub isometry: ComplexMatrix,
}

/// Restricts the tuple to the joint eigenspaces at the extreme points of the hull of its joint spectrum.
pub fn extreme_spectral_compression(t: &NormalTuple) -> Result<SpectralModel> {
    let scale = t.base.mats().iter().map(scale_of).fold(1.0, f64::max);
    let extremes = extreme_points(&t.joint_points, POINT_MERGE_TOL * scale);
    let mut cols = Vec::new();
    let mut extreme_set = Vec::new();
    for (i, p) in t.joint_points.iter().enumerate() {
        if extremes.iter().any(|e| e.dist(p) <= POINT_MERGE_TOL * scale) {
            extreme_set.push(p.clone());
            cols.extend(t.eigenspaces[i].column_iter().map(|c| c.into_owned()));
        }
    }
    let isometry = ComplexMatrix::from_columns(&cols);
    let compressed = t.base.compress(&isometry);
    Ok(SpectralModel { extreme_set, compressed, projector_rank: cols.len(), isometry })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsometryReport {
    pub p: usize,
    pub trials: usize,
    pub max_gap: f64,
}

/// `‖A ⊗ 1 + Σ B_k ⊗ N_k + Σ C_k ⊗ N_k*‖`.
pub fn pencil_norm(a: &ComplexMatrix, b: &[ComplexMatrix], c: &[ComplexMatrix], t: &OperatorTuple) -> f64 {
    let n = t.n();
    let mut m = a.kronecker(&ComplexMatrix::identity(n, n));
    for ((bk, ck), nk) in b.iter().zip(c).zip(t.mats()) {
        m += bk.kronecker(nk) + ck.kronecker(&nk.adjoint());
    }
    op_norm(&m)
}

/// Largest relative norm discrepancy between the full tuple and the model over random matrix pencils.
pub fn verify_complete_isometry(
    full: &NormalTuple,
    model: &SpectralModel,
    p: usize,
    trials: usize,
    seed: u64,
) -> Result<IsometryReport> {
    if p == 0 {
        return Err(Error::InvalidInput("p must be at least 1".into()));
    }
    if full.base.d() != model.compressed.d() {
        return Err(Error::TupleMismatch("model and tuple have different d".into()));
    }
    let d = full.base.d();
    let mut max_gap: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = split(seed, trial as u64);
        let a = random_matrix(&mut rng, p, p);
        let b: Vec<_> = (0..d).map(|_| random_matrix(&mut rng, p, p)).collect();
        let c: Vec<_> = (0..d).map(|_| random_matrix(&mut rng, p, p)).collect();
        let n1 = pencil_norm(&a, &b, &c, &full.base);
        let n2 = pencil_norm(&a, &b, &c, &model.compressed);
        max_gap = max_gap.max((n1 - n2).abs() / n1.max(f64::MIN_POSITIVE));
    }
    Ok(IsometryReport { p, trials, max_gap })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockModel {
    pub summands: Vec<OperatorTuple>,
    pub direct_sum: OperatorTuple,
    /// Candidate index each summand was taken from.
    pub summand_sources: Vec<usize>,
    /// `(candidate, summand)` pairs removed as unitarily equivalent.
    pub duplicates: Vec<(usize, usize)>,
}

/// Direct sum of pairwise inequivalent irreducible candidates.
pub fn block_diagonal_model(candidates: &[OperatorTuple]) -> Result<BlockModel> {
    let first = candidates.first().ok_or_else(|| Error::InvalidInput("no candidates".into()))?;
    let mut summands: Vec<OperatorTuple> = Vec::new();
    let mut sources = Vec::new();
    let mut duplicates = Vec::new();
    for (index, c) in candidates.iter().enumerate() {
        if c.d() != first.d() {
            return Err(Error::TupleMismatch(format!("candidate {index} has d = {}, expected {}", c.d(), first.d())));
        }
        let commutant_dim = commutant_dimension(c);
        if commutant_dim != 1 {
            return Err(Error::ReducibleCandidate { index, commutant_dim });
        }
        let mut dup = None;
        for (j, s) in summands.iter().enumerate() {
            if words_equivalent(c, s, None)? {
                dup = Some(j);
                break;
            }
        }
        match dup {
            Some(j) => duplicates.push((index, j)),
            None => {
                summands.push(c.clone());
                sources.push(index);
            }
        }
    }
    let mut direct_sum = summands[0].clone();
    for s in &summands[1..] {
        direct_sum = direct_sum.direct_sum(s)?;
    }
    Ok(BlockModel { summands, direct_sum, summand_sources: sources, duplicates })
}

/// Multiplicity of a diagonal entry; serialized as a count or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplicity {
    Finite(usize),
    Infinite,
}

impl Serialize for Multiplicity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Multiplicity::Finite(k) => s.serialize_u64(*k as u64),
            Multiplicity::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Multiplicity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Multiplicity;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive count or \"inf\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Multiplicity, E> {
                if v == 0 {
                    return Err(E::custom("multiplicity must be positive"));
                }
                Ok(Multiplicity::Finite(v as usize))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Multiplicity, E> {
                if v <= 0 {
                    return Err(E::custom("multiplicity must be positive"));
                }
                Ok(Multiplicity::Finite(v as usize))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Multiplicity, E> {
                match v {
                    "inf" | "infinite" | "∞" => Ok(Multiplicity::Infinite),
                    _ => Err(E::custom(format!("unknown multiplicity {v:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: PointD,
    pub multiplicity: Multiplicity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    pub limit: PointD,
    pub prefix: Vec<PointD>,
}

/// Finite presentation of a commuting tuple of self-adjoint diagonal operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalTuple {
    pub d: usize,
    #[serde(default)]
    pub atoms: Vec<Atom>,
    #[serde(default)]
    pub sequences: Vec<Sequence>,
}

impl DiagonalTuple {
    pub fn validate(&self) -> Result<()> {
        let dim_ok = |p: &PointD| p.dim() == self.d && p.is_finite();
        for (i, a) in self.atoms.iter().enumerate() {
            if !dim_ok(&a.point) {
                return Err(Error::InvalidInput(format!("atom {i} is not a finite point of R^{}", self.d)));
            }
            if self.atoms[..i].iter().any(|b| b.point == a.point) {
                return Err(Error::InvalidInput(format!("atom {i} repeats an earlier atom")));
            }
        }
        for (i, s) in self.sequences.iter().enumerate() {
            if !dim_ok(&s.limit) || !s.prefix.iter().all(dim_ok) {
                return Err(Error::InvalidInput(format!("sequence {i} has points outside R^{}", self.d)));
            }
            let dists: Vec<f64> = s.prefix.iter().map(|p| p.dist(&s.limit)).collect();
            if dists.windows(2).any(|w| w[1] > w[0] + 1e-15) {
                return Err(Error::InvalidInput(format!("sequence {i} does not approach its limit monotonically")));
            }
        }
        Ok(())
    }

    /// `d = 1`, entries `1/k`, `k = 1..=len`, limit `0`.
    pub fn harmonic(len: usize) -> Self {
        DiagonalTuple {
            d: 1,
            atoms: Vec::new(),
            sequences: vec![Sequence {
                limit: PointD::new(vec![0.0]),
                prefix: (1..=len).map(|k| PointD::new(vec![1.0 / k as f64])).collect(),
            }],
        }
    }

    /// `d = 1`: the point `0` with infinite multiplicity and entries `1 + 1/k` (limit `1`).
    pub fn two_limit(len: usize) -> Self {
        DiagonalTuple {
            d: 1,
            atoms: vec![Atom { point: PointD::new(vec![0.0]), multiplicity: Multiplicity::Infinite }],
            sequences: vec![Sequence {
                limit: PointD::new(vec![1.0]),
                prefix: (1..=len).map(|k| PointD::new(vec![1.0 + 1.0 / k as f64])).collect(),
            }],
        }
    }

    /// Presented diagonal entries: finite atoms with multiplicity, infinite
    /// atoms `inf_copies` times, then the sequence prefixes interleaved.
    pub fn entries(&self, inf_copies: usize) -> Vec<PointD> {
        let mut out = Vec::new();
        for a in &self.atoms {
            let k = match a.multiplicity {
                Multiplicity::Finite(k) => k,
                Multiplicity::Infinite => inf_copies,
            };
            out.extend(std::iter::repeat_n(a.point.clone(), k));
        }
        let longest = self.sequences.iter().map(|s| s.prefix.len()).max().unwrap_or(0);
        for k in 0..longest {
            for s in &self.sequences {
                if let Some(p) = s.prefix.get(k) {
                    out.push(p.clone());
                }
            }
        }
        out
    }

    /// Finite diagonal section as a Hermitian tuple.
    pub fn truncation(&self, inf_copies: usize) -> Result<OperatorTuple> {
        let entries = self.entries(inf_copies);
        if entries.is_empty() {
            return Err(Error::InvalidInput("truncation is empty".into()));
        }
        let mats = (0..self.d).map(|j| diag_real(&entries.iter().map(|p| p.coords[j]).collect::<Vec<_>>())).collect();
        OperatorTuple::hermitian(mats)
    }
}

fn dedup_within(points: &mut Vec<PointD>, tol: f64) {
    let mut out: Vec<PointD> = Vec::new();
    for p in points.drain(..) {
        if !out.iter().any(|q| q.dist(&p) <= tol) {
            out.push(p);
        }
    }
    *points = out;
}

/// Infinite-multiplicity atoms together with the declared limits.
pub fn essential_spectrum_diag(t: &DiagonalTuple, tol: f64) -> Vec<PointD> {
    let mut ess: Vec<PointD> = t
        .atoms
        .iter()
        .filter(|a| a.multiplicity == Multiplicity::Infinite)
        .map(|a| a.point.clone())
        .chain(t.sequences.iter().map(|s| s.limit.clone()))
        .collect();
    dedup_within(&mut ess, tol);
    ess
}

/// Opt-in heuristic for raw numeric prefixes: centres of groups of at least
/// `min_size` points lying within `radius` of one another.
pub fn detect_clusters(points: &[PointD], radius: f64, min_size: usize) -> Vec<PointD> {
    let mut centres: Vec<PointD> = Vec::new();
    let mut used = vec![false; points.len()];
    loop {
        // densest remaining neighbourhood first
        let best = (0..points.len())
            .filter(|&i| !used[i])
            .map(|i| {
                let members: Vec<usize> =
                    (0..points.len()).filter(|&j| !used[j] && points[j].dist(&points[i]) <= radius).collect();
                members
            })
            .max_by_key(|m| m.len());
        let Some(members) = best.filter(|m| m.len() >= min_size) else { break };
        let mut c = vec![0.0; points[members[0]].dim()];
        for &j in &members {
            used[j] = true;
            for (ck, v) in c.iter_mut().zip(&points[j].coords) {
                *ck += v / members.len() as f64;
            }
        }
        centres.push(PointD::new(c));
    }
    centres
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationReport {
    /// Presented finite entries, in [`DiagonalTuple::entries`] order (no infinite atoms).
    pub entries: Vec<PointD>,
    pub snapped_to: Vec<PointD>,
    pub perturbation: Vec<f64>,
    /// `sup_{j ≥ N} displacement_j` for `N = 0, 1, …`.
    pub sup_tail_norm: Vec<f64>,
    pub essential_spectrum: Vec<PointD>,
    pub verified_levels: usize,
}

fn nearest(p: &PointD, set: &[PointD]) -> (PointD, f64) {
    set.iter().map(|q| (q.clone(), q.dist(p))).min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty set")
}

/// Moves every finite entry to its nearest essential-spectrum point.
pub fn sw_perturbation(t: &DiagonalTuple) -> Result<(DiagonalTuple, PerturbationReport)> {
    t.validate()?;
    let ess = essential_spectrum_diag(t, 0.0);
    if ess.is_empty() {
        return Err(Error::EmptyEssentialSpectrum);
    }
    let entries = t.entries(0);
    let mut snapped_to = Vec::with_capacity(entries.len());
    let mut perturbation = Vec::with_capacity(entries.len());
    for e in &entries {
        let (q, dist) = nearest(e, &ess);
        snapped_to.push(q);
        perturbation.push(dist);
    }
    let mut sup_tail_norm = vec![0.0; perturbation.len()];
    let mut acc: f64 = 0.0;
    for k in (0..perturbation.len()).rev() {
        acc = acc.max(perturbation[k]);
        sup_tail_norm[k] = acc;
    }

    let mut atoms: Vec<Atom> = t.atoms.iter().filter(|a| a.multiplicity == Multiplicity::Infinite).cloned().collect();
    for a in &t.atoms {
        if let Multiplicity::Finite(k) = a.multiplicity {
            let (q, _) = nearest(&a.point, &ess);
            match atoms.iter_mut().find(|b| b.point == q) {
                Some(b) => {
                    if let Multiplicity::Finite(m) = b.multiplicity {
                        b.multiplicity = Multiplicity::Finite(m + k);
                    }
                }
                None => atoms.push(Atom { point: q, multiplicity: Multiplicity::Finite(k) }),
            }
        }
    }
    let sequences = t
        .sequences
        .iter()
        .map(|s| Sequence { limit: s.limit.clone(), prefix: s.prefix.iter().map(|p| nearest(p, &ess).0).collect() })
        .collect();
    let perturbed = DiagonalTuple { d: t.d, atoms, sequences };
    Ok((
        perturbed,
        PerturbationReport {
            entries,
            snapped_to,
            perturbation,
            sup_tail_norm,
            essential_spectrum: ess,
            verified_levels: 0,
        },
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalLevelReport {
    pub level: usize,
    pub probes: usize,
    pub model_in_truncation: usize,
    pub truncation_in_model: usize,
    pub undecided: usize,
    pub min_margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalSwReport {
    pub equal: bool,
    pub essential_spectrum: Vec<PointD>,
    pub model_size: usize,
    pub truncation_size: usize,
    pub levels: Vec<LocalLevelReport>,
}

/// Compares `W_n` of the essential model with `W_n` of the finite section of
/// `perturbed` for `n ≤ q`, using level-1 vertex checks and random compressions.
pub fn verify_local_sw(
    t: &DiagonalTuple,
    perturbed: &DiagonalTuple,
    q: usize,
    samples: usize,
    seed: u64,
    opts: &RangeOptions,
) -> Result<LocalSwReport> {
    if q == 0 {
        return Err(Error::InvalidInput("q must be at least 1".into()));
    }
    if t.d != perturbed.d {
        return Err(Error::DimensionMismatch(format!("d = {} vs {}", t.d, perturbed.d)));
    }
    let ess = essential_spectrum_diag(t, opts.tol);
    if ess.is_empty() {
        return Err(Error::EmptyEssentialSpectrum);
    }
    let model_points: Vec<PointD> = ess.iter().flat_map(|p| std::iter::repeat_n(p.clone(), q)).collect();
    let model_tuple = OperatorTuple::hermitian(
        (0..t.d).map(|j| diag_real(&model_points.iter().map(|p| p.coords[j]).collect::<Vec<_>>())).collect(),
    )?;
    let trunc = perturbed.truncation(q)?;
    let trunc_points = perturbed.entries(q);
    let model_body = ConvexBody::Polytope { vertices: ess.clone() };
    let trunc_body = ConvexBody::Polytope { vertices: trunc_points.clone() };

    let mut equal = true;
    let mut levels = Vec::new();
    for level in 1..=q {
        let mut rng = split(seed, level as u64);
        let mut rep = LocalLevelReport {
            level,
            probes: 0,
            model_in_truncation: 0,
            truncation_in_model: 0,
            undecided: 0,
            min_margin: f64::INFINITY,
        };
        let mut probes_model: Vec<OperatorTuple> = Vec::new();
        let mut probes_trunc: Vec<OperatorTuple> = Vec::new();
        if level == 1 {
            for p in extreme_points(&ess, 1e-12) {
                probes_model.push(OperatorTuple::scalar_point(&p.coords));
            }
            for p in extreme_points(&trunc_points, 1e-12) {
                probes_trunc.push(OperatorTuple::scalar_point(&p.coords));
            }
        }
        for _ in 0..samples {
            probes_model.push(random_range_point(&mut rng, &model_tuple, level));
            probes_trunc.push(random_range_point(&mut rng, &trunc, level));
        }
        rep.probes = probes_model.len().max(probes_trunc.len());
        for (probe, body, from_model) in probes_model
            .iter()
            .map(|p| (p, &trunc_body, true))
            .chain(probes_trunc.iter().map(|p| (p, &model_body, false)))
        {
            let r = kmin_member(body, probe, opts)?;
            rep.min_margin = rep.min_margin.min(r.margin);
            match r.status {
                s if s.is_member() => {
                    if from_model {
                        rep.model_in_truncation += 1;
                    } else {
                        rep.truncation_in_model += 1;
                    }
                }
                MemberStatus::Unknown => {
                    rep.undecided += 1;
                    equal = false;
                }
                _ => equal = false,
            }
        }
        levels.push(rep);
    }
    Ok(LocalSwReport {
        equal,
        essential_spectrum: ess,
        model_size: model_points.len(),
        truncation_size: trunc.n(),
        levels,
    })
}

/// Random isometric compression helper for callers that need explicit probes.
pub fn random_compression(seed: u64, t: &OperatorTuple, n: usize) -> OperatorTuple {
    let mut rng = seeded(seed);
    let v = random_isometry(&mut rng, t.n(), n.min(t.n()));
    t.compress(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{hull_2d, jnr_sandwich};
    use crate::linalg::{diag_complex, direct_sum, pauli_x, pauli_z, real};
    use crate::random::{random_commuting_hermitian_pair, random_unitary};

    fn herm(mats: Vec<ComplexMatrix>) -> OperatorTuple {
        OperatorTuple::hermitian(mats).unwrap()
    }

    fn contains(points: &[PointD], p: &PointD) -> bool {
        points.iter().any(|q| q.dist(p) < 1e-8)
    }

    #[test]
    fn joint_spectrum_examples() {
        let d = diag_real(&[1.0, -1.0]);
        let t = NormalTuple::new(herm(vec![d.clone(), d])).unwrap();
        let pts = joint_spectrum(&t);
        assert_eq!(pts.len(), 2);
        assert!(contains(&pts, &PointD::xy(1.0, 1.0)) && contains(&pts, &PointD::xy(-1.0, -1.0)));
        let t = NormalTuple::new(herm(vec![diag_real(&[0.0, 1.0, 0.5])])).unwrap();
        assert_eq!(joint_spectrum(&t).len(), 3);
    }

    #[test]
    fn planted_joint_spectrum_is_recovered() {
        let mut rng = seeded(4);
        for _ in 0..20 {
            let (a, b, planted) = random_commuting_hermitian_pair(&mut rng, 6);
            let t = NormalTuple::new(herm(vec![a, b])).unwrap();
            let pts = joint_spectrum(&t);
            assert_eq!(pts.len(), 6);
            for p in planted {
                assert!(contains(&pts, &PointD::xy(p.0, p.1)));
            }
        }
    }

    #[test]
    fn repeated_joint_eigenvalues_are_merged() {
        let mut rng = seeded(5);
        let u = random_unitary(&mut rng, 4);
        let a = hermitian_part(&(&u * diag_real(&[1.0, 1.0, 2.0, 2.0]) * u.adjoint()));
        let b = hermitian_part(&(&u * diag_real(&[0.0, 0.0, 0.0, 3.0]) * u.adjoint()));
        let t = NormalTuple::new(herm(vec![a, b])).unwrap();
        assert_eq!(joint_spectrum(&t).len(), 3);
        let ranks: usize = (0..3).map(|i| t.eigenspace(i).ncols()).sum();
        assert_eq!(ranks, 4);
    }

    #[test]
    fn non_commuting_input_is_rejected() {
        assert!(matches!(NormalTuple::new(herm(vec![pauli_x(), pauli_z()])), Err(Error::NotCommuting { .. })));
    }

    #[test]
    fn compression_examples() {
        let t = NormalTuple::new(herm(vec![diag_real(&[0.0, 1.0, 0.5])])).unwrap();
        let m = extreme_spectral_compression(&t).unwrap();
        assert_eq!(m.projector_rank, 2);
        assert!(words_equivalent(&m.compressed, &herm(vec![diag_real(&[0.0, 1.0])]), None).unwrap());
        let roots: Vec<C64> = (0..5).map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 5.0)).collect();
        let u = OperatorTuple::general(vec![diag_complex(&roots)]).unwrap();
        let t = NormalTuple::new(u.clone()).unwrap();
        let m = extreme_spectral_compression(&t).unwrap();
        assert_eq!(m.extreme_set.len(), 5);
        assert!(words_equivalent(&m.compressed, &u, None).unwrap());
    }

    #[test]
    fn compression_is_idempotent() {
        let mut rng = seeded(6);
        for _ in 0..5 {
            let (a, b, _) = random_commuting_hermitian_pair(&mut rng, 7);
            let t = NormalTuple::new(herm(vec![a, b])).unwrap();
            let m = extreme_spectral_compression(&t).unwrap();
            let t2 = NormalTuple::new(m.compressed.clone()).unwrap();
            let m2 = extreme_spectral_compression(&t2).unwrap();
            assert_eq!(m2.projector_rank, m.projector_rank);
            assert!(words_equivalent(&m2.compressed, &m.compressed, None).unwrap());
        }
    }

    #[test]
    fn complete_isometry_checks() {
        let t = NormalTuple::new(herm(vec![diag_real(&[0.0, 1.0, 0.5])])).unwrap();
        let m = extreme_spectral_compression(&t).unwrap();
        assert!(verify_complete_isometry(&t, &m, 2, 100, 0).unwrap().max_gap <= 1e-9);
        let same = SpectralModel {
            extreme_set: t.joint_points().to_vec(),
            compressed: t.base().clone(),
            projector_rank: 3,
            isometry: ComplexMatrix::identity(3, 3),
        };
        assert_eq!(verify_complete_isometry(&t, &same, 2, 20, 0).unwrap().max_gap, 0.0);
        let wrong = SpectralModel {
            extreme_set: vec![PointD::new(vec![0.0])],
            compressed: herm(vec![diag_real(&[0.0, 0.5])]),
            projector_rank: 2,
            isometry: ComplexMatrix::identity(2, 2),
        };
        assert!(verify_complete_isometry(&t, &wrong, 2, 100, 0).unwrap().max_gap > 0.01);
    }

    #[test]
    fn complete_isometry_on_random_pairs() {
        let mut rng = seeded(7);
        for _ in 0..5 {
            let (a, b, _) = random_commuting_hermitian_pair(&mut rng, 6);
            let t = NormalTuple::new(herm(vec![a, b])).unwrap();
            let m = extreme_spectral_compression(&t).unwrap();
            for p in 1..=3 {
                assert!(verify_complete_isometry(&t, &m, p, 30, 1).unwrap().max_gap <= 1e-8);
            }
        }
    }

    #[test]
    fn block_model_examples() {
        let xz = herm(vec![pauli_x(), pauli_z()]);
        let zx = herm(vec![pauli_z(), pauli_x()]);
        let m = block_diagonal_model(&[xz.clone(), zx]).unwrap();
        assert_eq!(m.summands.len(), 1);
        assert_eq!(m.duplicates, vec![(1, 0)]);
        let scalar = OperatorTuple::scalar_point(&[1.0, 1.0]);
        let m = block_diagonal_model(&[xz.clone(), scalar]).unwrap();
        assert_eq!(m.summands.len(), 2);
        assert_eq!(m.direct_sum.n(), 3);
        let reducible = herm(vec![direct_sum(&pauli_x(), &pauli_x()), direct_sum(&pauli_z(), &pauli_z())]);
        assert!(matches!(
            block_diagonal_model(&[xz, reducible]),
            Err(Error::ReducibleCandidate { index: 1, commutant_dim: 4 })
        ));
    }

    #[test]
    fn block_model_range_is_hull_of_summand_ranges() {
        let xz = herm(vec![pauli_x(), pauli_z()]);
        let shifted =
            herm(vec![pauli_x() * real(0.5) + ComplexMatrix::identity(2, 2) * real(1.5), pauli_z() * real(0.5)]);
        let m = block_diagonal_model(&[xz.clone(), shifted.clone()]).unwrap();
        let s = jnr_sandwich(&m.direct_sum, 128).unwrap();
        let parts: Vec<PointD> = [xz, shifted].iter().flat_map(|t| jnr_sandwich(t, 128).unwrap().inner).collect();
        let hull = hull_2d(&parts);
        for p in &s.inner {
            assert!(crate::geometry::distance_to_polygon(p, &hull) < s.hausdorff_bound + 1e-9);
        }
    }

    #[test]
    fn essential_spectrum_examples() {
        let ess = essential_spectrum_diag(&DiagonalTuple::harmonic(50), 1e-9);
        assert_eq!(ess, vec![PointD::new(vec![0.0])]);
        let t = DiagonalTuple {
            d: 1,
            atoms: vec![
                Atom { point: PointD::new(vec![1.0]), multiplicity: Multiplicity::Infinite },
                Atom { point: PointD::new(vec![3.0]), multiplicity: Multiplicity::Finite(2) },
            ],
            sequences: vec![],
        };
        assert_eq!(essential_spectrum_diag(&t, 1e-9), vec![PointD::new(vec![1.0])]);
        let t = DiagonalTuple {
            d: 1,
            atoms: vec![
                Atom { point: PointD::new(vec![1.0]), multiplicity: Multiplicity::Infinite },
                Atom { point: PointD::new(vec![2.0]), multiplicity: Multiplicity::Infinite },
            ],
            sequences: vec![],
        };
        assert_eq!(essential_spectrum_diag(&t, 1e-9).len(), 2);
    }

    #[test]
    fn cluster_detector_finds_accumulation() {
        let t = DiagonalTuple::harmonic(200);
        let entries = t.entries(0);
        let c = detect_clusters(&entries, 0.05, 10);
        assert!(!c.is_empty());
        assert!(c[0].coords[0] < 0.05);
        assert!(detect_clusters(&entries[..5], 0.05, 10).is_empty());
    }

    #[test]
    fn perturbation_examples() {
        let (p, rep) = sw_perturbation(&DiagonalTuple::harmonic(40)).unwrap();
        for (k, d) in rep.perturbation.iter().enumerate() {
            assert_eq!(*d, 1.0 / (k + 1) as f64);
        }
        assert!(p.entries(0).iter().all(|e| e.coords[0] == 0.0));
        assert!(rep.sup_tail_norm.windows(2).all(|w| w[1] <= w[0]));
        let (_, rep) = sw_perturbation(&DiagonalTuple::two_limit(40)).unwrap();
        assert_eq!(rep.essential_spectrum.len(), 2);
        for ((e, s), d) in rep.entries.iter().zip(&rep.snapped_to).zip(&rep.perturbation) {
            assert_eq!(s.coords[0], 1.0);
            assert!((d - (e.coords[0] - 1.0)).abs() <= 1e-15);
        }
        let t = DiagonalTuple {
            d: 1,
            atoms: vec![Atom { point: PointD::new(vec![0.0]), multiplicity: Multiplicity::Infinite }],
            sequences: vec![],
        };
        let (_, rep) = sw_perturbation(&t).unwrap();
        assert!(rep.perturbation.is_empty());
        let empty = DiagonalTuple {
            d: 1,
            atoms: vec![Atom { point: PointD::new(vec![2.0]), multiplicity: Multiplicity::Finite(1) }],
            sequences: vec![],
        };
        assert!(matches!(sw_perturbation(&empty), Err(Error::EmptyEssentialSpectrum)));
    }

    #[test]
    fn local_sw_examples() {
        let o = RangeOptions::default();
        for t in [DiagonalTuple::harmonic(20), DiagonalTuple::two_limit(20)] {
            let (p, _) = sw_perturbation(&t).unwrap();
            let rep = verify_local_sw(&t, &p, 2, 5, 0, &o).unwrap();
            assert!(rep.equal, "{rep:?}");
        }
        let mut t = DiagonalTuple::two_limit(20);
        t.atoms.push(Atom { point: PointD::new(vec![5.0]), multiplicity: Multiplicity::Finite(1) });
        let rep = verify_local_sw(&t, &t, 2, 3, 0, &o).unwrap();
        assert!(!rep.equal);
        assert!(rep.levels[0].truncation_in_model < rep.levels[0].probes);
    }

    #[test]
    fn perturbed_truncation_stabilizes() {
        let t = DiagonalTuple::two_limit(64);
        let (p, _) = sw_perturbation(&t).unwrap();
        let short = DiagonalTuple {
            sequences: p
                .sequences
                .iter()
                .map(|s| Sequence { limit: s.limit.clone(), prefix: s.prefix[..32].to_vec() })
                .collect(),
            ..p.clone()
        };
        let a = extreme_points(&short.entries(2), 1e-12);
        let b = extreme_points(&p.entries(2), 1e-12);
        assert_eq!(a.len(), b.len());
        for x in &a {
            assert!(contains(&b, x));
        }
    }

    #[test]
    fn multiplicity_json() {
        let a: Atom = serde_json::from_str(r#"{"point":[1.0],"multiplicity":"inf"}"#).unwrap();
        assert_eq!(a.multiplicity, Multiplicity::Infinite);
        let a: Atom = serde_json::from_str(r#"{"point":[1.0],"multiplicity":3}"#).unwrap();
        assert_eq!(a.multiplicity, Multiplicity::Finite(3));
        assert!(serde_json::from_str::<Atom>(r#"{"point":[1.0],"multiplicity":0}"#).is_err());
        assert_eq!(serde_json::to_string(&Multiplicity::Infinite).unwrap(), "\"inf\"");
    }

    #[test]
    fn sequence_must_approach_limit() {
        let bad = DiagonalTuple {
            d: 1,
            atoms: vec![],
            sequences: vec![Sequence {
                limit: PointD::new(vec![0.0]),
                prefix: vec![PointD::new(vec![0.1]), PointD::new(vec![0.5])],
            }],
        };
        assert!(bad.validate().is_err());
    }
}
