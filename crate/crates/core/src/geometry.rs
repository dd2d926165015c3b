//! Convex geometry in R^d: bodies, support functions, planar numerical-range
//! sandwiches, extreme points and simplex detection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lambda_max, top_eigenpair, OperatorTuple, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointD {
    pub coords: Vec<f64>,
}

impl PointD {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Self { coords: vec![x, y] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn dot(&self, c: &[f64]) -> f64 {
        self.coords.iter().zip(c).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &PointD) -> PointD {
        PointD::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect())
    }

    pub fn scaled(&self, s: f64) -> PointD {
        PointD::new(self.coords.iter().map(|a| a * s).collect())
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn dist(&self, other: &PointD) -> f64 {
        self.sub(other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|v| v.is_finite())
    }
}

/// Compact convex subset of R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConvexBody {
    Polytope {
        vertices: Vec<PointD>,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Disc {
        center: PointD,
        radius: f64,
    },
    /// Intersection of the half-spaces `⟨c_k, x⟩ ≤ h_k` (d ≤ 2).
    Sampled {
        directions: Vec<PointD>,
        support_values: Vec<f64>,
    },
}

/// Half-space `⟨normal, x⟩ ≤ offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: PointD,
    pub offset: f64,
}

impl ConvexBody {
    /// `[-1, 1]^d`.
    pub fn cube(d: usize) -> Self {
        ConvexBody::Box { lo: vec![-1.0; d], hi: vec![1.0; d] }
    }

    pub fn unit_disc() -> Self {
        ConvexBody::Disc { center: PointD::xy(0.0, 0.0), radius: 1.0 }
    }

    pub fn polytope(vertices: Vec<PointD>) -> Self {
        ConvexBody::Polytope { vertices }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Polytope { vertices } => vertices.first().map_or(0, PointD::dim),
            ConvexBody::Box { lo, .. } => lo.len(),
            ConvexBody::Disc { .. } => 2,
            ConvexBody::Sampled { directions, .. } => directions.first().map_or(0, PointD::dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexBody::Polytope { vertices } => {
                let d = self.dim();
                if vertices.is_empty() || d == 0 {
                    return Err(Error::InvalidInput("polytope needs at least one vertex".into()));
                }
                if vertices.iter().any(|v| v.dim() != d || !v.is_finite()) {
                    return Err(Error::InvalidInput("polytope vertices must be finite and of equal dimension".into()));
                }
            }
            ConvexBody::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::InvalidInput("box bounds must be non-empty and of equal length".into()));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h)) {
                    return Err(Error::InvalidInput("box needs finite lo ≤ hi".into()));
                }
            }
            ConvexBody::Disc { center, radius } => {
                if center.dim() != 2 || !center.is_finite() {
                    return Err(Error::InvalidInput("disc center must be a finite point of R^2".into()));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidInput("disc radius must be positive".into()));
                }
            }
            ConvexBody::Sampled { directions, support_values } => {
                let d = self.dim();
                if directions.len() != support_values.len() || directions.is_empty() {
                    return Err(Error::InvalidInput("need one support value per direction".into()));
                }
                if !(1..=2).contains(&d) {
                    return Err(Error::Unsupported("sampled bodies are supported for d ≤ 2".into()));
                }
                for (i, c) in directions.iter().enumerate() {
                    if c.dim() != d || (c.norm() - 1.0).abs() > 1e-9 || !support_values[i].is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "direction {i} must be a unit vector with finite support value"
                        )));
                    }
                    for c2 in &directions[..i] {
                        if c.dist(c2) < 1e-12 {
                            return Err(Error::InvalidInput("sampled directions must be pairwise distinct".into()));
                        }
                    }
                }
                self.vertices()?;
            }
        }
        Ok(())
    }

    /// Support function `h_K(c) = max_{x ∈ K} ⟨c, x⟩`.
    pub fn support(&self, c: &[f64]) -> f64 {
        match self {
            ConvexBody::Polytope { vertices } => vertices.iter().map(|v| v.dot(c)).fold(f64::NEG_INFINITY, f64::max),
            ConvexBody::Box { lo, hi } => lo.iter().zip(hi).zip(c).map(|((l, h), ci)| (ci * l).max(ci * h)).sum(),
            ConvexBody::Disc { center, radius } => center.dot(c) + radius * (c[0] * c[0] + c[1] * c[1]).sqrt(),
            ConvexBody::Sampled { .. } => match self.vertices() {
                Ok(vs) => vs.iter().map(|v| v.dot(c)).fold(f64::NEG_INFINITY, f64::max),
                Err(_) => f64::NAN,
            },
        }
    }

    /// `α·K`.
    pub fn scaled(&self, alpha: f64) -> Self {
        match self {
            ConvexBody::Polytope { vertices } => {
                ConvexBody::Polytope { vertices: vertices.iter().map(|v| v.scaled(alpha)).collect() }
            }
            ConvexBody::Box { lo, hi } => {
                let (a, b): (Vec<f64>, Vec<f64>) =
                    lo.iter().zip(hi).map(|(l, h)| ((l * alpha).min(h * alpha), (l * alpha).max(h * alpha))).unzip();
                ConvexBody::Box { lo: a, hi: b }
            }
            ConvexBody::Disc { center, radius } => {
                ConvexBody::Disc { center: center.scaled(alpha), radius: radius * alpha.abs() }
            }
            ConvexBody::Sampled { directions, support_values } => ConvexBody::Sampled {
                directions: directions.clone(),
                support_values: support_values.iter().map(|h| h * alpha).collect(),
            },
        }
    }

    /// Vertex list for polyhedral bodies; errors for discs.
    pub fn vertices(&self) -> Result<Vec<PointD>> {
        match self {
            ConvexBody::Polytope { vertices } => Ok(vertices.clone()),
            ConvexBody::Box { lo, hi } => {
                let d = lo.len();
                if d > 16 {
                    return Err(Error::Unsupported("box dimension above 16".into()));
                }
                let mut out = Vec::with_capacity(1 << d);
                for mask in 0..(1usize << d) {
                    out.push(PointD::new((0..d).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }).collect()));
                }
                dedup_points(&mut out, 0.0);
                Ok(out)
            }
            ConvexBody::Disc { .. } => Err(Error::Unsupported("a disc has no finite vertex list".into())),
            ConvexBody::Sampled { directions, support_values } => sampled_vertices(directions, support_values),
        }
    }

    /// Inscribed and circumscribed regular `m`-gons of a disc.
    pub fn disc_polygons(&self, m: usize) -> Result<(ConvexBody, ConvexBody)> {
        match self {
            ConvexBody::Disc { center, radius } => {
                let m = m.max(3);
                let outer_r = radius / (std::f64::consts::PI / m as f64).cos();
                let ring = |r: f64| {
                    (0..m)
                        .map(|k| {
                            let t = std::f64::consts::TAU * k as f64 / m as f64;
                            PointD::xy(center.coords[0] + r * t.cos(), center.coords[1] + r * t.sin())
                        })
                        .collect()
                };
                Ok((ConvexBody::Polytope { vertices: ring(*radius) }, ConvexBody::Polytope { vertices: ring(outer_r) }))
            }
            _ => Err(Error::Unsupported("only discs have polygon sandwiches".into())),
        }
    }

    /// Facet description of a polyhedral body. Lower-dimensional polytopes
    /// get both signs of the normals of their affine hull.
    pub fn facets(&self, tol: f64) -> Result<Vec<Facet>> {
        match self {
            ConvexBody::Box { lo, hi } => {
                let d = lo.len();
                let mut out = Vec::with_capacity(2 * d);
                for i in 0..d {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    out.push(Facet { normal: PointD::new(e.clone()), offset: hi[i] });
                    e[i] = -1.0;
                    out.push(Facet { normal: PointD::new(e), offset: -lo[i] });
                }
                Ok(out)
            }
            ConvexBody::Disc { .. } => Err(Error::Unsupported("a disc has no finite facet list".into())),
            _ => {
                let vs = self.vertices()?;
                polytope_facets(&vs, tol)
            }
        }
    }

    /// Whether `0` lies in the interior, with the smallest facet offset (or
    /// distance from the centre to the circle for a disc) as margin.
    pub fn origin_depth(&self, tol: f64) -> Result<f64> {
        match self {
            ConvexBody::Disc { center, radius } => Ok(radius - center.norm()),
            _ => {
                let facets = self.facets(tol)?;
                let d = self.dim();
                // a lower-dimensional body has opposite normals with offsets summing to 0
                let mut depth = facets.iter().map(|f| f.offset / f.normal.norm()).fold(f64::INFINITY, f64::min);
                if affine_rank(&self.vertices()?, tol) < d {
                    depth = depth.min(0.0);
                }
                Ok(depth)
            }
        }
    }
}

fn dedup_points(points: &mut Vec<PointD>, tol: f64) {
    let mut out: Vec<PointD> = Vec::with_capacity(points.len());
    for p in points.drain(..) {
        if !out.iter().any(|q| q.dist(&p) <= tol) {
            out.push(p);
        }
    }
    *points = out;
}

fn cross(o: &PointD, a: &PointD, b: &PointD) -> f64 {
    (a.coords[0] - o.coords[0]) * (b.coords[1] - o.coords[1])
        - (a.coords[1] - o.coords[1]) * (b.coords[0] - o.coords[0])
}

/// Convex hull of planar points, counter-clockwise, without collinear vertices.
pub fn hull_2d(points: &[PointD]) -> Vec<PointD> {
    let mut pts: Vec<PointD> = points.to_vec();
    pts.sort_by(|a, b| a.coords[0].total_cmp(&b.coords[0]).then(a.coords[1].total_cmp(&b.coords[1])));
    let scale = pts.iter().map(|p| p.norm()).fold(1.0, f64::max);
    pts.dedup_by(|a, b| a.dist(b) <= 1e-14 * scale);
    if pts.len() <= 2 {
        return pts;
    }
    let eps = 1e-14 * scale * scale;
    let mut lower: Vec<PointD> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<PointD> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Euclidean distance from `p` to the convex polygon with vertices `poly` (any order of a hull).
pub fn distance_to_polygon(p: &PointD, poly: &[PointD]) -> f64 {
    match poly.len() {
        0 => f64::INFINITY,
        1 => p.dist(&poly[0]),
        _ => {
            if poly.len() >= 3 && polygon_contains(poly, p) {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for i in 0..poly.len() {
                let a = &poly[i];
                let b = &poly[(i + 1) % poly.len()];
                best = best.min(segment_distance(p, a, b));
            }
            best
        }
    }
}

fn segment_distance(p: &PointD, a: &PointD, b: &PointD) -> f64 {
    let ab = b.sub(a);
    let ap = p.sub(a);
    let len2 = ab.dot(&ab.coords);
    let t = if len2 > 0.0 { (ap.dot(&ab.coords) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let proj = PointD::new(a.coords.iter().zip(&ab.coords).map(|(x, d)| x + t * d).collect());
    p.dist(&proj)
}

/// Point-in-convex-polygon test for a counter-clockwise hull.
pub fn polygon_contains(poly: &[PointD], p: &PointD) -> bool {
    (0..poly.len()).all(|i| cross(&poly[i], &poly[(i + 1) % poly.len()], p) >= -1e-12)
}

/// Vertices of `{x : ⟨c_k, x⟩ ≤ h_k}` for d ∈ {1, 2}.
fn sampled_vertices(directions: &[PointD], support_values: &[f64]) -> Result<Vec<PointD>> {
    let d = directions.first().map_or(0, PointD::dim);
    match d {
        1 => {
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for (c, h) in directions.iter().zip(support_values) {
                if c.coords[0] > 0.0 {
                    hi = hi.min(h / c.coords[0]);
                } else {
                    lo = lo.max(-h / -c.coords[0]);
                }
            }
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidInput("sampled body is unbounded".into()));
            }
            if lo > hi + 1e-12 {
                return Err(Error::InvalidInput("sampled body is empty".into()));
            }
            let mut out = vec![PointD::new(vec![lo]), PointD::new(vec![hi])];
            dedup_points(&mut out, 0.0);
            Ok(out)
        }
        2 => {
            let big = 1e3 * (1.0 + support_values.iter().map(|h| h.abs()).fold(0.0, f64::max));
            let mut poly =
                vec![PointD::xy(-big, -big), PointD::xy(big, -big), PointD::xy(big, big), PointD::xy(-big, big)];
            for (c, &h) in directions.iter().zip(support_values) {
                poly = clip_half_plane(&poly, &c.coords, h);
                if poly.is_empty() {
                    return Err(Error::InvalidInput("sampled body is empty".into()));
                }
            }
            if poly.iter().any(|p| p.coords.iter().any(|v| v.abs() >= 0.999 * big)) {
                return Err(Error::InvalidInput("sampled body is unbounded".into()));
            }
            Ok(hull_2d(&poly))
        }
        _ => Err(Error::Unsupported("sampled bodies are supported for d ≤ 2".into())),
    }
}

fn clip_half_plane(poly: &[PointD], c: &[f64], h: f64) -> Vec<PointD> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let a = &poly[i];
        let b = &poly[(i + 1) % n];
        let fa = a.dot(c) - h;
        let fb = b.dot(c) - h;
        if fa <= 0.0 {
            out.push(a.clone());
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let t = fa / (fa - fb);
            out.push(PointD::new(a.coords.iter().zip(&b.coords).map(|(x, y)| x + t * (y - x)).collect()));
        }
    }
    out
}

/// Orthonormal basis (columns) of the span of the differences `v − v_0`, with its rank.
fn affine_basis(points: &[PointD], tol: f64) -> (DMatrix<f64>, usize) {
    let d = points[0].dim();
    if points.len() == 1 {
        return (DMatrix::zeros(d, 0), 0);
    }
    let diffs = DMatrix::from_fn(d, points.len() - 1, |i, j| points[j + 1].coords[i] - points[0].coords[i]);
    let svd = diffs.svd(true, false);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let u = svd.u.expect("u requested");
    let mut cols = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > tol.max(1e-12 * smax) {
            cols.push(u.column(k).into_owned());
        }
    }
    let r = cols.len();
    if r == 0 {
        return (DMatrix::zeros(d, 0), 0);
    }
    (DMatrix::from_columns(&cols), r)
}

fn affine_rank(points: &[PointD], tol: f64) -> usize {
    affine_basis(points, tol).1
}

fn polytope_facets(vertices: &[PointD], tol: f64) -> Result<Vec<Facet>> {
    let d = vertices[0].dim();
    let (basis, r) = affine_basis(vertices, tol);
    let mut normals: Vec<DVector<f64>> = Vec::new();
    // normals of the affine hull, both signs
    let full = if r > 0 { basis.clone() * basis.transpose() } else { DMatrix::zeros(d, d) };
    let comp = DMatrix::<f64>::identity(d, d) - full;
    let csvd = comp.svd(true, false);
    let cu = csvd.u.expect("u requested");
    for (k, s) in csvd.singular_values.iter().enumerate() {
        if *s > 0.5 {
            let n = cu.column(k).into_owned();
            normals.push(n.clone());
            normals.push(-n);
        }
    }
    if r >= 1 {
        let origin = DVector::from_column_slice(&vertices[0].coords);
        let local: Vec<DVector<f64>> =
            vertices.iter().map(|v| basis.transpose() * (DVector::from_column_slice(&v.coords) - &origin)).collect();
        let local_normals = if r == 1 {
            vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)]
        } else {
            full_dim_facet_normals(&local, r, tol)?
        };
        for n in local_normals {
            normals.push(&basis * n);
        }
    }
    let mut facets: Vec<Facet> = Vec::new();
    for n in normals {
        let norm = n.norm();
        let n = n / norm;
        let normal = PointD::new(n.iter().copied().collect());
        if facets.iter().any(|f| f.normal.dist(&normal) < 1e-9) {
            continue;
        }
        let offset = vertices.iter().map(|v| v.dot(&normal.coords)).fold(f64::NEG_INFINITY, f64::max);
        facets.push(Facet { normal, offset });
    }
    Ok(facets)
}

/// Facet normals of a full-dimensional polytope in R^r (r ≥ 2) by subset enumeration.
fn full_dim_facet_normals(points: &[DVector<f64>], r: usize, tol: f64) -> Result<Vec<DVector<f64>>> {
    let local: Vec<PointD> = points.iter().map(|p| PointD::new(p.iter().copied().collect())).collect();
    let extremes = extreme_points(&local, tol);
    if r == 2 {
        let hull = hull_2d(&extremes);
        let mut out = Vec::new();
        for i in 0..hull.len() {
            let a = &hull[i];
            let b = &hull[(i + 1) % hull.len()];
            let e = b.sub(a);
            out.push(DVector::from_vec(vec![e.coords[1], -e.coords[0]]));
        }
        return Ok(out);
    }
    let k = extremes.len();
    if k > 40 {
        return Err(Error::Unsupported("facet enumeration above 40 extreme points".into()));
    }
    let pts: Vec<DVector<f64>> = extremes.iter().map(|p| DVector::from_column_slice(&p.coords)).collect();
    let scale = pts.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let mut out: Vec<DVector<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        let diffs = DMatrix::from_fn(r, r - 1, |i, j| pts[idx[j + 1]][i] - pts[idx[0]][i]);
        let sv = diffs.singular_values();
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let smax = sv.iter().copied().fold(0.0, f64::max);
        if smin > 1e-10 * smax.max(1e-300) {
            let n = null_vector(&diffs.transpose());
            let base = n.dot(&pts[idx[0]]);
            let vals: Vec<f64> = pts.iter().map(|p| n.dot(p) - base).collect();
            let eps = 1e-9 * scale;
            let all_le = vals.iter().all(|v| *v <= eps);
            let all_ge = vals.iter().all(|v| *v >= -eps);
            if all_le || all_ge {
                let n = if all_le { n } else { -n };
                if !out.iter().any(|m| (m - &n).norm() < 1e-9) {
                    out.push(n);
                }
            }
        }
        // next combination
        let mut i = r;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if idx[i] != i + k - r {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn null_vector(m: &DMatrix<f64>) -> DVector<f64> {
    // m is (r−1)×r; complete via the Gram matrix
    let g = m.transpose() * m;
    let eig = nalgebra::SymmetricEigen::new(g);
    let mut k = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[k] {
            k = i;
        }
    }
    eig.eigenvectors.column(k).into_owned()
}

/// Support function of `W_1(t)` at `c`: `λ_max(Σ c_j a_j)`.
pub fn support_value(t: &OperatorTuple, c: &[f64]) -> Result<f64> {
    t.require_hermitian()?;
    if c.len() != t.d() {
        return Err(Error::DimensionMismatch(format!("direction has length {}, tuple has d = {}", c.len(), t.d())));
    }
    Ok(lambda_max(&pencil(t, c)))
}

/// `Σ c_j a_j`.
pub fn pencil(t: &OperatorTuple, c: &[f64]) -> crate::linalg::ComplexMatrix {
    let n = t.n();
    t.mats().iter().zip(c).fold(crate::linalg::ComplexMatrix::zeros(n, n), |acc, (m, cj)| acc + m * C64::new(*cj, 0.0))
}

/// Inner and outer polygons around the joint numerical range of a Hermitian pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolygonSandwich {
    /// Hull of the maximizing-eigenvector images, counter-clockwise.
    pub inner: Vec<PointD>,
    /// Intersection of the supporting half-planes, one vertex per consecutive pair of directions.
    pub outer: Vec<PointD>,
    pub hausdorff_bound: f64,
}

pub fn jnr_sandwich(t: &OperatorTuple, m: usize) -> Result<PolygonSandwich> {
    t.require_hermitian()?;
    if t.d() != 2 {
        return Err(Error::DimensionMismatch(format!("numerical range polygons need d = 2, got {}", t.d())));
    }
    if m < 8 {
        return Err(Error::InvalidInput("need at least 8 directions".into()));
    }
    let mut inner_pts = Vec::with_capacity(m);
    let mut lines = Vec::with_capacity(m);
    for k in 0..m {
        let th = std::f64::consts::TAU * k as f64 / m as f64;
        let c = [th.cos(), th.sin()];
        let (lam, v) = top_eigenpair(&pencil(t, &c));
        let vs = v.adjoint();
        let x = (&vs * t.mat(0) * &v)[(0, 0)].re;
        let y = (&vs * t.mat(1) * &v)[(0, 0)].re;
        inner_pts.push(PointD::xy(x, y));
        lines.push((c, lam));
    }
    let mut outer = Vec::with_capacity(m);
    for k in 0..m {
        let (c1, h1) = lines[k];
        let (c2, h2) = lines[(k + 1) % m];
        let det = c1[0] * c2[1] - c1[1] * c2[0];
        outer.push(PointD::xy((h1 * c2[1] - h2 * c1[1]) / det, (c1[0] * h2 - c2[0] * h1) / det));
    }
    // outer vertex k sits between the support points of directions k and k+1;
    // that segment lies in the range, so its distance bounds the gap
    let hausdorff_bound =
        (0..m).map(|k| segment_distance(&outer[k], &inner_pts[k], &inner_pts[(k + 1) % m])).fold(0.0, f64::max);
    let inner = hull_2d(&inner_pts);
    Ok(PolygonSandwich { inner, outer, hausdorff_bound })
}

/// Minimum-norm point of the convex hull of `pts` (Wolfe's algorithm).
fn min_norm_point(pts: &[DVector<f64>]) -> DVector<f64> {
    let scale2 = pts.iter().map(|p| p.norm_squared()).fold(0.0, f64::max).max(1e-300);
    let eps = 1e-13 * scale2;
    let mut s: Vec<usize> =
        vec![(0..pts.len()).min_by(|&a, &b| pts[a].norm_squared().total_cmp(&pts[b].norm_squared())).unwrap()];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x = pts[s[0]].clone();
    for _ in 0..(50 * pts.len() + 100) {
        let j = (0..pts.len()).min_by(|&a, &b| x.dot(&pts[a]).total_cmp(&x.dot(&pts[b]))).unwrap();
        if x.norm_squared() - x.dot(&pts[j]) <= eps || s.contains(&j) {
            break;
        }
        s.push(j);
        lambda.push(0.0);
        loop {
            let k = s.len();
            // affine minimizer over aff{p_i : i ∈ S}, as least squares on the differences
            let base = &pts[s[0]];
            let mut mu = vec![1.0; k];
            if k > 1 {
                let diffs = DMatrix::from_fn(base.len(), k - 1, |r, c| pts[s[c + 1]][r] - base[r]);
                let svd = diffs.svd(true, true);
                let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
                let c = svd.solve(&(-base), 1e-12 * smax.max(1e-300)).unwrap_or_else(|_| DVector::zeros(k - 1));
                mu[0] = 1.0 - c.sum();
                for i in 1..k {
                    mu[i] = c[i - 1];
                }
            }
            if mu.iter().all(|&v| v > 1e-14) {
                lambda = mu;
                break;
            }
            let mut theta = 1.0f64;
            for i in 0..k {
                if mu[i] <= 1e-14 {
                    let denom = lambda[i] - mu[i];
                    if denom > 0.0 {
                        theta = theta.min(lambda[i] / denom);
                    }
                }
            }
            for i in 0..k {
                lambda[i] += theta * (mu[i] - lambda[i]);
            }
            let mut keep_s = Vec::new();
            let mut keep_l = Vec::new();
            for i in 0..k {
                if lambda[i] > 1e-14 {
                    keep_s.push(s[i]);
                    keep_l.push(lambda[i]);
                }
            }
            if keep_s.is_empty() {
                keep_s.push(s[k - 1]);
                keep_l.push(1.0);
            }
            let total: f64 = keep_l.iter().sum();
            s = keep_s;
            lambda = keep_l.iter().map(|l| l / total).collect();
        }
        x = s.iter().zip(&lambda).fold(DVector::zeros(pts[0].len()), |acc, (&i, &l)| acc + &pts[i] * l);
    }
    x
}

/// Distance from `p` to the convex hull of `others`.
pub fn distance_to_hull(p: &PointD, others: &[PointD]) -> f64 {
    if others.is_empty() {
        return f64::INFINITY;
    }
    let shifted: Vec<DVector<f64>> = others.iter().map(|q| DVector::from_vec(q.sub(p).coords)).collect();
    min_norm_point(&shifted).norm()
}

/// Points that are not within `tol` of the convex hull of the other points
/// (after merging duplicates).
pub fn extreme_points(points: &[PointD], tol: f64) -> Vec<PointD> {
    let mut pts = points.to_vec();
    let scale = pts.iter().map(|p| p.norm()).fold(1.0, f64::max);
    dedup_points(&mut pts, 1e-12 * scale);
    if pts.len() <= 1 {
        return pts;
    }
    (0..pts.len())
        .filter(|&i| {
            let others: Vec<PointD> = pts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, q)| q.clone()).collect();
            distance_to_hull(&pts[i], &others) > tol
        })
        .map(|i| pts[i].clone())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimplexReport {
    pub is_simplex: bool,
    pub extremes: Vec<PointD>,
    /// Rank of `{μ − λ : μ ∈ E, μ ≠ λ}` for the first extreme point `λ`.
    pub rank: usize,
    /// Coefficients of a vanishing combination of the difference vectors when not a simplex.
    pub dependency: Option<Vec<f64>>,
}

pub fn is_simplex(points: &[PointD], tol: f64) -> Result<SimplexReport> {
    if points.is_empty() {
        return Err(Error::InvalidInput("need at least one point".into()));
    }
    let extremes = extreme_points(points, tol);
    let k = extremes.len();
    if k <= 1 {
        return Ok(SimplexReport { is_simplex: true, extremes, rank: 0, dependency: None });
    }
    let d = extremes[0].dim();
    let diffs = DMatrix::from_fn(d, k - 1, |i, j| extremes[j + 1].coords[i] - extremes[0].coords[i]);
    let svd = diffs.clone().svd(false, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol * smax.max(1.0)).count();
    if rank == k - 1 {
        return Ok(SimplexReport { is_simplex: true, extremes, rank, dependency: None });
    }
    let dep = null_vector(&diffs).iter().copied().collect();
    Ok(SimplexReport { is_simplex: false, extremes, rank, dependency: Some(dep) })
}

/// Convex hull of symbol samples viewed as points of R^2, and its extreme points.
pub fn essential_range_hull(samples: &[C64]) -> Result<(ConvexBody, Vec<PointD>)> {
    if samples.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 symbol samples".into()));
    }
    if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("symbol samples must be finite".into()));
    }
    let pts: Vec<PointD> = samples.iter().map(|z| PointD::xy(z.re, z.im)).collect();
    let hull = hull_2d(&pts);
    Ok((ConvexBody::Polytope { vertices: hull.clone() }, hull))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_real, from_real_rows, identity, pauli_x, pauli_z, real};
    use crate::random::{random_commuting_hermitian_pair, random_hermitian, random_unit_vector, seeded};
    use proptest::prelude::*;
    use rand::Rng;

    fn pauli_pair() -> OperatorTuple {
        OperatorTuple::hermitian(vec![pauli_x(), pauli_z()]).unwrap()
    }

    fn nilpotent_parts() -> OperatorTuple {
        OperatorTuple::real_imag(&from_real_rows(&[&[0.0, 2.0], &[0.0, 0.0]])).unwrap()
    }

    #[test]
    fn support_value_examples() {
        let t = pauli_pair();
        assert!((support_value(&t, &[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((support_value(&t, &[s, s]).unwrap() - 1.0).abs() < 1e-12);
        let ii = OperatorTuple::hermitian(vec![identity(2), identity(2)]).unwrap();
        assert!((support_value(&ii, &[0.6, 0.8]).unwrap() - 1.4).abs() < 1e-12);
        let general = OperatorTuple::general(vec![from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])]).unwrap();
        assert!(matches!(support_value(&general, &[1.0]), Err(Error::NonHermitianInput { .. })));
    }

    #[test]
    fn pauli_sandwich_matches_random_state_oracle() {
        let t = pauli_pair();
        let s = jnr_sandwich(&t, 64).unwrap();
        assert!(s.hausdorff_bound <= 0.05);
        let mut rng = seeded(1);
        let mut oracle = Vec::new();
        for _ in 0..100_000 {
            let v = random_unit_vector(&mut rng, 2);
            let vs = v.adjoint();
            oracle.push(PointD::xy((&vs * pauli_x() * &v)[(0, 0)].re, (&vs * pauli_z() * &v)[(0, 0)].re));
        }
        let oracle_hull = hull_2d(&oracle);
        for p in &s.outer {
            assert!(distance_to_polygon(p, &oracle_hull) <= s.hausdorff_bound + 1e-3);
        }
        for p in &s.inner {
            assert!((p.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn commuting_diagonal_pair_gives_segment() {
        let d = diag_real(&[1.0, -1.0]);
        let t = OperatorTuple::hermitian(vec![d.clone(), d]).unwrap();
        let s = jnr_sandwich(&t, 64).unwrap();
        assert_eq!(s.inner.len(), 2);
        let ends = [PointD::xy(-1.0, -1.0), PointD::xy(1.0, 1.0)];
        for p in &s.inner {
            assert!(ends.iter().any(|e| e.dist(p) < 1e-9));
        }
        assert!(s.hausdorff_bound < 1e-9);
    }

    #[test]
    fn nilpotent_real_imag_parts_fill_unit_disc() {
        let s = jnr_sandwich(&nilpotent_parts(), 128).unwrap();
        for p in s.inner.iter().chain(&s.outer) {
            assert!(p.norm() > 0.99 && p.norm() < 1.01);
        }
    }

    #[test]
    fn sandwich_bound_shrinks_with_more_directions() {
        let mut rng = seeded(3);
        let t = OperatorTuple::hermitian(vec![random_hermitian(&mut rng, 4), random_hermitian(&mut rng, 4)]).unwrap();
        let bounds: Vec<f64> =
            [16, 32, 64, 128].iter().map(|&m| jnr_sandwich(&t, m).unwrap().hausdorff_bound).collect();
        for w in bounds.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{bounds:?}");
        }
        let s = jnr_sandwich(&t, 64).unwrap();
        let outer_hull = hull_2d(&s.outer);
        for p in &s.inner {
            assert!(polygon_contains(&outer_hull, p) || distance_to_polygon(p, &outer_hull) < 1e-9);
        }
    }

    #[test]
    fn direct_sum_range_is_hull_of_ranges() {
        let mut rng = seeded(12);
        let t1 = OperatorTuple::hermitian(vec![random_hermitian(&mut rng, 3), random_hermitian(&mut rng, 3)]).unwrap();
        let t2 = OperatorTuple::hermitian(vec![random_hermitian(&mut rng, 2), random_hermitian(&mut rng, 2)]).unwrap();
        let s = t1.direct_sum(&t2).unwrap();
        let (a, b, c) = (jnr_sandwich(&t1, 64).unwrap(), jnr_sandwich(&t2, 64).unwrap(), jnr_sandwich(&s, 64).unwrap());
        let union: Vec<PointD> = a.outer.iter().chain(&b.outer).cloned().collect();
        let hull = hull_2d(&union);
        let slack = a.hausdorff_bound + b.hausdorff_bound + c.hausdorff_bound + 1e-9;
        for p in &c.outer {
            assert!(distance_to_polygon(p, &hull) <= slack);
        }
    }

    #[test]
    fn extreme_point_examples() {
        let tri =
            vec![PointD::xy(0.0, 0.0), PointD::xy(1.0, 0.0), PointD::xy(0.0, 1.0), PointD::xy(1.0 / 3.0, 1.0 / 3.0)];
        assert_eq!(extreme_points(&tri, 1e-9).len(), 3);
        let sq = vec![PointD::xy(1.0, 1.0), PointD::xy(-1.0, 1.0), PointD::xy(-1.0, -1.0), PointD::xy(1.0, -1.0)];
        assert_eq!(extreme_points(&sq, 1e-9).len(), 4);
    }

    #[test]
    fn circle_plus_interior_points() {
        let mut rng = seeded(2);
        let mut pts = Vec::new();
        for k in 0..100 {
            let t = std::f64::consts::TAU * k as f64 / 100.0;
            pts.push(PointD::xy(t.cos(), t.sin()));
        }
        for _ in 0..100 {
            let r: f64 = rng.random_range(0.0..0.95);
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            pts.push(PointD::xy(r * t.cos(), r * t.sin()));
        }
        let ext = extreme_points(&pts, 1e-9);
        assert_eq!(ext.len(), 100);
        assert!(ext.iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn simplex_examples() {
        let tri = vec![PointD::xy(0.0, 0.0), PointD::xy(1.0, 0.0), PointD::xy(0.0, 1.0)];
        assert!(is_simplex(&tri, 1e-9).unwrap().is_simplex);
        let sq = vec![PointD::xy(1.0, 1.0), PointD::xy(-1.0, 1.0), PointD::xy(-1.0, -1.0), PointD::xy(1.0, -1.0)];
        let r = is_simplex(&sq, 1e-9).unwrap();
        assert!(!r.is_simplex);
        assert_eq!(r.rank, 2);
        assert!(r.dependency.is_some());
        let tet = vec![
            PointD::new(vec![0.0, 0.0, 0.0]),
            PointD::new(vec![1.0, 0.0, 0.0]),
            PointD::new(vec![0.0, 1.0, 0.0]),
            PointD::new(vec![0.0, 0.0, 1.0]),
        ];
        assert!(is_simplex(&tet, 1e-9).unwrap().is_simplex);
        assert!(is_simplex(&[PointD::xy(2.0, 3.0)], 1e-9).unwrap().is_simplex);
        assert!(is_simplex(&[PointD::xy(0.0, 0.0), PointD::xy(1.0, 2.0)], 1e-9).unwrap().is_simplex);
    }

    #[test]
    fn simplex_test_is_affine_invariant() {
        let mut rng = seeded(21);
        let tri = [PointD::xy(0.0, 0.0), PointD::xy(1.0, 0.0), PointD::xy(0.0, 1.0), PointD::xy(0.2, 0.2)];
        let sq = [PointD::xy(0.0, 0.0), PointD::xy(1.0, 0.0), PointD::xy(1.0, 1.0), PointD::xy(0.0, 1.0)];
        for _ in 0..100 {
            let m: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            if (m[0] * m[3] - m[1] * m[2]).abs() < 0.1 {
                continue;
            }
            let shift: [f64; 2] = std::array::from_fn(|_| rng.random_range(-5.0..5.0));
            let map = |p: &PointD| {
                PointD::xy(
                    m[0] * p.coords[0] + m[1] * p.coords[1] + shift[0],
                    m[2] * p.coords[0] + m[3] * p.coords[1] + shift[1],
                )
            };
            let t2: Vec<PointD> = tri.iter().map(map).collect();
            let s2: Vec<PointD> = sq.iter().map(map).collect();
            assert!(is_simplex(&t2, 1e-9).unwrap().is_simplex);
            assert!(!is_simplex(&s2, 1e-9).unwrap().is_simplex);
        }
    }

    #[test]
    fn toeplitz_hull_examples() {
        let circle: Vec<C64> =
            (0..360).map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 360.0)).collect();
        let (_, ext) = essential_range_hull(&circle).unwrap();
        assert_eq!(ext.len(), 360);
        let constant = vec![real(2.0); 5];
        let (_, ext) = essential_range_hull(&constant).unwrap();
        assert_eq!(ext, vec![PointD::xy(2.0, 0.0)]);
        let two = vec![real(0.0), real(1.0), real(0.0), real(1.0)];
        let (_, ext) = essential_range_hull(&two).unwrap();
        assert_eq!(ext.len(), 2);
        assert!(essential_range_hull(&[real(0.0)]).is_err());
    }

    #[test]
    fn commuting_pair_extremes_are_joint_eigenvalues() {
        let mut rng = seeded(30);
        let (a, b, points) = random_commuting_hermitian_pair(&mut rng, 6);
        let t = OperatorTuple::hermitian(vec![a, b]).unwrap();
        let s = jnr_sandwich(&t, 256).unwrap();
        let joint: Vec<PointD> = points.iter().map(|p| PointD::xy(p.0, p.1)).collect();
        for p in extreme_points(&joint, 1e-9) {
            assert!(s.inner.iter().any(|q| q.dist(&p) < 1e-8));
        }
    }

    #[test]
    fn box_and_sampled_facets() {
        let sq = ConvexBody::cube(2);
        let f = sq.facets(1e-9).unwrap();
        assert_eq!(f.len(), 4);
        assert!((sq.origin_depth(1e-9).unwrap() - 1.0).abs() < 1e-12);
        let dirs: Vec<PointD> = (0..8)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 8.0;
                PointD::xy(t.cos(), t.sin())
            })
            .collect();
        let sampled = ConvexBody::Sampled { directions: dirs, support_values: vec![1.0; 8] };
        sampled.validate().unwrap();
        assert_eq!(sampled.vertices().unwrap().len(), 8);
        let segment = ConvexBody::polytope(vec![PointD::xy(-1.0, -1.0), PointD::xy(1.0, 1.0)]);
        let f = segment.facets(1e-9).unwrap();
        assert_eq!(f.len(), 4);
        assert!(segment.origin_depth(1e-9).unwrap() <= 0.0);
        let tet = ConvexBody::polytope(vec![
            PointD::new(vec![1.0, 1.0, 1.0]),
            PointD::new(vec![1.0, -1.0, -1.0]),
            PointD::new(vec![-1.0, 1.0, -1.0]),
            PointD::new(vec![-1.0, -1.0, 1.0]),
        ]);
        assert_eq!(tet.facets(1e-9).unwrap().len(), 4);
        assert!(tet.origin_depth(1e-9).unwrap() > 0.5);
    }

    #[test]
    fn body_json_uses_type_tag() {
        let b: ConvexBody = serde_json::from_str(r#"{"type":"disc","center":[0,0],"radius":1}"#).unwrap();
        assert_eq!(b, ConvexBody::unit_disc());
        let b: ConvexBody = serde_json::from_str(r#"{"type":"box","lo":[-1,-1],"hi":[1,1]}"#).unwrap();
        assert_eq!(b, ConvexBody::cube(2));
        let text = serde_json::to_string(&ConvexBody::polytope(vec![PointD::xy(0.0, 1.0)])).unwrap();
        assert_eq!(text, r#"{"type":"polytope","vertices":[[0.0,1.0]]}"#);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn support_value_is_positively_homogeneous(seed in 0u64..5000, alpha in 0.1f64..10.0) {
            let mut rng = seeded(seed);
            let t = OperatorTuple::hermitian(vec![random_hermitian(&mut rng, 3), random_hermitian(&mut rng, 3)]).unwrap();
            let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let c = [th.cos(), th.sin()];
            let h1 = support_value(&t, &c).unwrap();
            let h2 = support_value(&t, &[alpha * c[0], alpha * c[1]]).unwrap();
            prop_assert!((h2 / alpha - h1).abs() <= 1e-10 * (1.0 + h1.abs()));
        }

        #[test]
        fn hull_vertices_are_extreme(seed in 0u64..5000, n in 3usize..30) {
            let mut rng = seeded(seed);
            let pts: Vec<PointD> = (0..n).map(|_| PointD::xy(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let hull = hull_2d(&pts);
            let ext = extreme_points(&pts, 1e-9);
            prop_assert_eq!(hull.len(), ext.len());
            for p in &hull {
                prop_assert!(ext.iter().any(|q| q.dist(p) < 1e-12));
            }
        }
    }
}
