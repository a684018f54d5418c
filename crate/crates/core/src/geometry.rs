//! Hyperplanes, general position, Chung-Yao lattice vertices and the
//! direction vectors of the lattice lines.
//!
//! A hyperplane is stored through its normalized affine form
//! `l(x) = <n, x> - c` with `|n| = 1`. Families keep the order they were
//! built with; every subset of a family is a sorted list of indices into it,
//! which fixes the sign of the direction vectors `n_K`.

use std::collections::HashMap;

use itertools::Itertools;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

pub type Point = Vec<f64>;

/// Default lower bound on `|det|` of N unit normals.
pub const DEFAULT_GP_TOLERANCE: f64 = 1e-8;
/// Two vertices closer than this fraction of the lattice diameter collide.
pub const DEFAULT_DEDUP_TOLERANCE: f64 = 1e-8;
/// `|det|` below which a single N x N vertex system is treated as singular.
const SINGULAR_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    normal: Vec<f64>,
    offset: f64,
}

impl Hyperplane {
    /// Builds the hyperplane `<normal, x> = offset`, normalizing the
    /// equation so that the normal has unit length.
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let len = linalg::norm(&normal);
        if !(len.is_finite() && len > 0.0) || !offset.is_finite() {
            return Err(Error::ZeroNormal);
        }
        Ok(Hyperplane {
            normal: normal.iter().map(|v| v / len).collect(),
            offset: offset / len,
        })
    }

    /// The hyperplane through `dim` affinely independent points.
    pub fn through_points(points: &[Point]) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if points.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: points.len(),
            });
        }
        let edges: Vec<Point> = points[1..].iter().map(|p| linalg::sub(p, &points[0])).collect();
        let refs: Vec<&[f64]> = edges.iter().map(Vec::as_slice).collect();
        let normal = direction_vector(&refs, dim)?;
        let offset = linalg::dot(&normal, &points[0]);
        Hyperplane::new(normal, offset)
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `l(x) = <n, x> - c`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.normal, x) - self.offset
    }

    /// Linear part `<n, v>`.
    pub fn linear(&self, v: &[f64]) -> f64 {
        linalg::dot(&self.normal, v)
    }

    /// The same hyperplane described by `(-n, -c)`.
    pub fn negated(&self) -> Self {
        Hyperplane {
            normal: self.normal.iter().map(|v| -v).collect(),
            offset: -self.offset,
        }
    }

    /// Image of the hyperplane under an affine isomorphism, normalized.
    pub fn transformed(&self, map: &AffineMap) -> Result<Self> {
        let normal = map.inverse_transpose_apply(&self.normal);
        let shift = linalg::dot(&self.normal, &map.linear_inverse_apply(map.offset()));
        Hyperplane::new(normal, self.offset + shift)
    }
}

/// An affine isomorphism `x -> A x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    linear: Matrix,
    offset: Vec<f64>,
    inverse: Matrix,
}

impl AffineMap {
    pub fn new(linear: Matrix, offset: Vec<f64>) -> Result<Self> {
        let n = offset.len();
        if linear.len() != n || linear.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: linear.len(),
            });
        }
        let inverse = linalg::inverse(&linear).ok_or(Error::SingularMap)?;
        if inverse.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::SingularMap);
        }
        Ok(AffineMap {
            linear,
            offset,
            inverse,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let id: Matrix = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        AffineMap {
            linear: id.clone(),
            offset: vec![0.0; dim],
            inverse: id,
        }
    }

    pub fn linear(&self) -> &Matrix {
        &self.linear
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn apply(&self, x: &[f64]) -> Point {
        linalg::mat_vec(&self.linear, x)
            .iter()
            .zip(&self.offset)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn determinant(&self) -> f64 {
        linalg::determinant(&self.linear)
    }

    /// `A^{-1} v`.
    pub fn linear_inverse_apply(&self, v: &[f64]) -> Point {
        linalg::mat_vec(&self.inverse, v)
    }

    /// `A^{-T} v`.
    pub fn inverse_transpose_apply(&self, v: &[f64]) -> Point {
        linalg::mat_vec(&linalg::transpose(&self.inverse), v)
    }
}

/// The vector `n_K` with `det(v, n_1, ..., n_{N-1}) = <v, n_K>` for all `v`,
/// where the rows after `v` are `normals` in the given order.
pub fn direction_vector(normals: &[&[f64]], dim: usize) -> Result<Vec<f64>> {
    if normals.len() + 1 != dim {
        return Err(Error::DimensionMismatch {
            expected: dim.saturating_sub(1),
            found: normals.len(),
        });
    }
    if let Some(bad) = normals.iter().find(|n| n.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let out: Vec<f64> = (0..dim)
        .map(|j| {
            let minor: Matrix = normals
                .iter()
                .map(|n| {
                    n.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != j)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * linalg::determinant(&minor)
        })
        .collect();
    if linalg::norm(&out) <= SINGULAR_TOLERANCE {
        return Err(Error::DegenerateSubset {
            subset: (0..normals.len()).collect(),
            det: 0.0,
        });
    }
    Ok(out)
}

/// Intersection point of N hyperplanes in general position.
pub fn solve_vertex(planes: &[&Hyperplane]) -> Result<Point> {
    let dim = planes.first().map(|p| p.dim()).unwrap_or(0);
    if planes.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: planes.len(),
        });
    }
    let a: Matrix = planes.iter().map(|p| p.normal.clone()).collect();
    let det = linalg::determinant(&a);
    if det.abs() <= SINGULAR_TOLERANCE {
        return Err(Error::DegenerateSubset {
            subset: (0..dim).collect(),
            det,
        });
    }
    let b: Vec<f64> = planes.iter().map(|p| p.offset).collect();
    linalg::solve(&a, &b).ok_or(Error::DegenerateSubset {
        subset: (0..dim).collect(),
        det,
    })
}

/// Outcome of a successful general-position check.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralPositionCertificate {
    /// Smallest `|det|` over all N-subsets of normals.
    pub min_abs_det: f64,
    pub min_det_subset: Vec<usize>,
    /// Smallest distance between two distinct vertices (infinite if d = N).
    pub min_vertex_distance: f64,
    pub diameter: f64,
}

struct Checked {
    certificate: GeneralPositionCertificate,
    subsets: Vec<Vec<usize>>,
    vertices: Vec<Point>,
}

fn check_impl(planes: &[Hyperplane], tol: f64) -> Result<Checked> {
    let dim = planes.first().map(|p| p.dim()).unwrap_or(0);
    if dim == 0 || planes.len() < dim {
        return Err(Error::TooFewHyperplanes {
            count: planes.len(),
            dim,
        });
    }
    if let Some(bad) = planes.iter().find(|p| p.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.dim(),
        });
    }

    let mut min_abs_det = f64::INFINITY;
    let mut min_det_subset = Vec::new();
    let mut subsets = Vec::new();
    let mut vertices = Vec::new();
    for subset in (0..planes.len()).combinations(dim) {
        let rows: Matrix = subset.iter().map(|&i| planes[i].normal.clone()).collect();
        let det = linalg::determinant(&rows).abs();
        if det <= tol {
            return Err(Error::DegenerateSubset { subset, det });
        }
        if det < min_abs_det {
            min_abs_det = det;
            min_det_subset = subset.clone();
        }
        let refs: Vec<&Hyperplane> = subset.iter().map(|&i| &planes[i]).collect();
        let vertex = solve_vertex(&refs).map_err(|_| Error::DegenerateSubset {
            subset: subset.clone(),
            det,
        })?;
        subsets.push(subset);
        vertices.push(vertex);
    }

    let mut diameter: f64 = 0.0;
    let mut closest = (f64::INFINITY, 0, 0);
    for (i, j) in (0..vertices.len()).tuple_combinations() {
        let dist = linalg::distance(&vertices[i], &vertices[j]);
        diameter = diameter.max(dist);
        if dist < closest.0 {
            closest = (dist, i, j);
        }
    }
    if vertices.len() > 1 && closest.0 <= DEFAULT_DEDUP_TOLERANCE * diameter {
        return Err(Error::NonInjective {
            first: subsets[closest.1].clone(),
            second: subsets[closest.2].clone(),
            distance: closest.0,
        });
    }

    Ok(Checked {
        certificate: GeneralPositionCertificate {
            min_abs_det,
            min_det_subset,
            min_vertex_distance: closest.0,
            diameter,
        },
        subsets,
        vertices,
    })
}

/// Accepts `planes` iff every N-subset of normals has `|det| > tol` and the
/// subset-to-vertex map is injective.
pub fn check_general_position(
    planes: &[Hyperplane],
    tol: f64,
) -> Result<GeneralPositionCertificate> {
    check_impl(planes, tol).map(|c| c.certificate)
}

/// An ordered family of `d >= N` hyperplanes in general position.
#[derive(Clone, Debug)]
pub struct HyperplaneFamily {
    planes: Vec<Hyperplane>,
    dim: usize,
    gp_tolerance: f64,
    certificate: GeneralPositionCertificate,
}

impl HyperplaneFamily {
    pub fn new(planes: Vec<Hyperplane>) -> Result<Self> {
        Self::with_tolerance(planes, DEFAULT_GP_TOLERANCE)
    }

    pub fn with_tolerance(planes: Vec<Hyperplane>, gp_tolerance: f64) -> Result<Self> {
        let checked = check_impl(&planes, gp_tolerance)?;
        Ok(HyperplaneFamily {
            dim: planes[0].dim(),
            planes,
            gp_tolerance,
            certificate: checked.certificate,
        })
    }

    /// The facet hyperplanes of the simplex with the given `N + 1` vertices;
    /// hyperplane `j` is the facet opposite vertex `j`, so the lattice is the
    /// vertex set itself.
    pub fn simplex(points: &[Point]) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if points.len() != dim + 1 {
            return Err(Error::DimensionMismatch {
                expected: dim + 1,
                found: points.len(),
            });
        }
        let planes = (0..points.len())
            .map(|skip| {
                let face: Vec<Point> = points
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, p)| p.clone())
                    .collect();
                Hyperplane::through_points(&face)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(planes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    /// Interpolation degree `d - N`.
    pub fn degree(&self) -> usize {
        self.planes.len() - self.dim
    }

    pub fn planes(&self) -> &[Hyperplane] {
        &self.planes
    }

    pub fn plane(&self, i: usize) -> &Hyperplane {
        &self.planes[i]
    }

    pub fn gp_tolerance(&self) -> f64 {
        self.gp_tolerance
    }

    pub fn certificate(&self) -> &GeneralPositionCertificate {
        &self.certificate
    }

    /// The first `count` hyperplanes, `count >= N`.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        Self::with_tolerance(self.planes[..count.min(self.len())].to_vec(), self.gp_tolerance)
    }

    /// Same family with hyperplane `i` described by `(-n_i, -c_i)`.
    pub fn with_sign_flipped(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.planes[i] = out.planes[i].negated();
        out
    }

    /// Image of the family under an affine isomorphism.
    pub fn transformed(&self, map: &AffineMap) -> Result<Self> {
        let planes = self
            .planes
            .iter()
            .map(|p| p.transformed(map))
            .collect::<Result<Vec<_>>>()?;
        Self::with_tolerance(planes, self.gp_tolerance)
    }

    /// `n_K` for a sorted `(N-1)`-subset of indices.
    pub fn direction(&self, subset: &[usize]) -> Result<Vec<f64>> {
        let normals: Vec<&[f64]> = subset.iter().map(|&i| self.planes[i].normal()).collect();
        direction_vector(&normals, self.dim).map_err(|e| match e {
            Error::DegenerateSubset { det, .. } => Error::DegenerateSubset {
                subset: subset.to_vec(),
                det,
            },
            other => other,
        })
    }

    pub fn lattice(&self) -> Result<ChungYaoLattice> {
        ChungYaoLattice::new(self.clone())
    }
}

/// Options for [`random_family`].
#[derive(Clone, Debug)]
pub struct RandomFamilyOptions {
    pub offset_min: f64,
    pub offset_max: f64,
    pub max_retries: usize,
    pub gp_tolerance: f64,
    /// Reject draws whose smallest N-subset `|det|` is below this.
    pub min_volume: f64,
    /// Reject draws whose lattice leaves the ball of this radius.
    pub max_lattice_norm: f64,
}

impl Default for RandomFamilyOptions {
    fn default() -> Self {
        RandomFamilyOptions {
            offset_min: 0.2,
            offset_max: 1.0,
            max_retries: 100,
            gp_tolerance: DEFAULT_GP_TOLERANCE,
            min_volume: 0.0,
            max_lattice_norm: f64::INFINITY,
        }
    }
}

/// Draws `count` hyperplanes with normals uniform on the sphere and offsets
/// uniform in `[offset_min, offset_max]`, retrying until the family is in
/// general position.
pub fn random_family<R: Rng + ?Sized>(
    dim: usize,
    count: usize,
    rng: &mut R,
    options: &RandomFamilyOptions,
) -> Result<HyperplaneFamily> {
    let mut last_err = Error::TooFewHyperplanes { count, dim };
    for _ in 0..options.max_retries.max(1) {
        let planes = (0..count)
            .map(|_| {
                let raw: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
                let len = linalg::norm(&raw);
                let offset = rng.random_range(options.offset_min..=options.offset_max);
                Hyperplane::new(raw.iter().map(|v| v / len).collect(), offset)
            })
            .collect::<Result<Vec<_>>>();
        let family = planes.and_then(|p| HyperplaneFamily::with_tolerance(p, options.gp_tolerance));
        match family {
            Ok(f) => {
                if f.certificate.min_abs_det < options.min_volume {
                    continue;
                }
                if options.max_lattice_norm.is_finite() {
                    let lat = f.lattice()?;
                    if lat.norm() > options.max_lattice_norm {
                        continue;
                    }
                }
                return Ok(f);
            }
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// The points of the lattice lying on the line cut out by an
/// `(N-1)`-subset `K`, together with the direction `n_K`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSubset {
    pub k: Vec<usize>,
    /// The N-subsets `H ⊃ K`, in family order.
    pub vertex_subsets: Vec<Vec<usize>>,
    pub points: Vec<Point>,
    pub direction: Vec<f64>,
}

/// The vertices `theta_H` of all N-subsets of a family.
#[derive(Clone, Debug)]
pub struct ChungYaoLattice {
    family: HyperplaneFamily,
    subsets: Vec<Vec<usize>>,
    vertices: Vec<Point>,
    /// Correction from one step of iterative refinement; `vertex + tail`
    /// carries roughly twice the precision of `vertex`.
    tails: Vec<Point>,
    index: HashMap<Vec<usize>, usize>,
}

/// `A^{-1} (c - A theta)` with the residual accumulated in double precision
/// of twice the working length.
fn refinement_tail(planes: &[&Hyperplane], theta: &[f64]) -> Point {
    let a: Matrix = planes.iter().map(|p| p.normal.clone()).collect();
    let r: Vec<f64> = planes
        .iter()
        .map(|p| {
            let mut lhs = p.normal.clone();
            lhs.push(-1.0);
            let mut rhs = theta.to_vec();
            rhs.push(p.offset);
            -linalg::dot2(&lhs, &rhs)
        })
        .collect();
    linalg::solve(&a, &r).unwrap_or_else(|| vec![0.0; theta.len()])
}

impl ChungYaoLattice {
    pub fn new(family: HyperplaneFamily) -> Result<Self> {
        let checked = check_impl(&family.planes, family.gp_tolerance)?;
        let index = checked
            .subsets
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let tails = checked
            .subsets
            .iter()
            .zip(&checked.vertices)
            .map(|(h, v)| {
                let planes: Vec<&Hyperplane> = h.iter().map(|&i| &family.planes[i]).collect();
                refinement_tail(&planes, v)
            })
            .collect();
        Ok(ChungYaoLattice {
            family,
            subsets: checked.subsets,
            vertices: checked.vertices,
            tails,
            index,
        })
    }

    pub fn family(&self) -> &HyperplaneFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.family.dim
    }

    pub fn degree(&self) -> usize {
        self.family.degree()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, subset: &[usize]) -> Option<&Point> {
        self.index.get(subset).map(|&i| &self.vertices[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &Point)> {
        self.subsets.iter().zip(&self.vertices)
    }

    /// `max ||theta||` over the lattice.
    pub fn norm(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| linalg::norm(v))
            .fold(0.0, f64::max)
    }

    /// Moves one stored vertex without touching the hyperplanes. Only
    /// meant for fault-injection runs of the verification suite.
    #[doc(hidden)]
    pub fn perturb_vertex(&mut self, position: usize, delta: &[f64]) {
        for (v, d) in self.vertices[position].iter_mut().zip(delta) {
            *v += d;
        }
    }

    /// `l_i(theta_H)` for the vertex at `position`, using the refined
    /// vertex so that small values keep their relative accuracy.
    pub fn plane_value_at_vertex(&self, i: usize, position: usize) -> f64 {
        let plane = &self.family.planes[i];
        let mut lhs = plane.normal.clone();
        lhs.extend_from_slice(&plane.normal);
        lhs.push(-1.0);
        let mut rhs = self.vertices[position].clone();
        rhs.extend_from_slice(&self.tails[position]);
        rhs.push(plane.offset);
        linalg::dot2(&lhs, &rhs)
    }

    /// Groups the lattice into its `C(d, N-1)` lines.
    pub fn line_subsets(&self) -> Result<Vec<LineSubset>> {
        let d = self.family.len();
        let n = self.dim();
        (0..d)
            .combinations(n - 1)
            .map(|k| {
                let vertex_subsets: Vec<Vec<usize>> = (0..d)
                    .filter(|i| !k.contains(i))
                    .map(|i| {
                        let mut h = k.clone();
                        h.push(i);
                        h.sort_unstable();
                        h
                    })
                    .collect();
                let points: Vec<Point> = vertex_subsets
                    .iter()
                    .filter_map(|h| self.vertex(h).cloned())
                    .collect();
                if points.len() != d - n + 1 {
                    return Err(Error::Consistency(format!(
                        "line {:?} holds {} points, expected {}",
                        k,
                        points.len(),
                        d - n + 1
                    )));
                }
                let direction = self.family.direction(&k)?;
                Ok(LineSubset {
                    k,
                    vertex_subsets,
                    points,
                    direction,
                })
            })
            .collect()
    }

    /// Norm of `x - theta_H - sum_{l in H} l(x) / l~(n_{H\l}) n_{H\l}`.
    pub fn deboor_identity_residual(&self, subset: &[usize], x: &[f64]) -> Result<f64> {
        let theta = self
            .vertex(subset)
            .ok_or_else(|| Error::Consistency(format!("{subset:?} is not a lattice subset")))?;
        let mut rebuilt = theta.clone();
        for (pos, &i) in subset.iter().enumerate() {
            let rest: Vec<usize> = subset
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != pos)
                .map(|(_, &j)| j)
                .collect();
            let dir = self.family.direction(&rest)?;
            let plane = self.family.plane(i);
            let coeff = plane.eval(x) / plane.linear(&dir);
            for (r, v) in rebuilt.iter_mut().zip(&dir) {
                *r += coeff * v;
            }
        }
        Ok(linalg::distance(x, &rebuilt))
    }
}
