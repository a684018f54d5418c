//! Sequences of shrinking Chung-Yao lattices: condition statistics, the
//! affine-sequence criterion, convergence of interpolants to the Taylor
//! polynomial at the origin and the explicit error bounds.
//!
//! Finite-range verdicts for "tends to zero" statements: the statistic at
//! the largest `s` must be below a tenth of its value at the smallest `s`
//! and the least-squares slope of `log(stat)` against `log(s)` must be
//! negative.

use std::sync::Arc;

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::chungyao::{interpolate, PkPolynomial};
use crate::error::{Error, Result};
use crate::function::SmoothFunction;
use crate::geometry::{AffineMap, ChungYaoLattice, Hyperplane, HyperplaneFamily, Point};
use crate::linalg;
use crate::poly::{binomial, factorial, taylor, MultiPoly};

pub type FamilyFn = Arc<dyn Fn(u64) -> Result<HyperplaneFamily> + Send + Sync>;
pub type MapFn = Arc<dyn Fn(u64) -> Result<AffineMap> + Send + Sync>;

/// `s -> H^{(s)}`.
#[derive(Clone)]
pub enum LatticeSequence {
    Fixed(HyperplaneFamily),
    /// `H^{(s)} = L_s(base)`.
    Affine { base: HyperplaneFamily, map: MapFn },
    Generated(FamilyFn),
}

impl LatticeSequence {
    pub fn affine(base: HyperplaneFamily, map: impl Fn(u64) -> Result<AffineMap> + Send + Sync + 'static) -> Self {
        LatticeSequence::Affine {
            base,
            map: Arc::new(map),
        }
    }

    pub fn generated(f: impl Fn(u64) -> Result<HyperplaneFamily> + Send + Sync + 'static) -> Self {
        LatticeSequence::Generated(Arc::new(f))
    }

    /// Sequence whose lattice at `s` is the vertex set of a simplex.
    pub fn simplex_points(points: impl Fn(u64) -> Vec<Point> + Send + Sync + 'static) -> Self {
        Self::generated(move |s| HyperplaneFamily::simplex(&points(s)))
    }

    pub fn family(&self, s: u64) -> Result<HyperplaneFamily> {
        match self {
            LatticeSequence::Fixed(f) => Ok(f.clone()),
            LatticeSequence::Affine { base, map } => base.transformed(&map(s)?),
            LatticeSequence::Generated(g) => g(s),
        }
    }
}

impl std::fmt::Debug for LatticeSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LatticeSequence::Fixed(fam) => f.debug_tuple("Fixed").field(fam).finish(),
            LatticeSequence::Affine { base, .. } => f.debug_struct("Affine").field("base", base).finish_non_exhaustive(),
            LatticeSequence::Generated(_) => f.write_str("Generated(..)"),
        }
    }
}

/// `s = 2, 4, ..., 256`.
pub fn default_s_values() -> Vec<u64> {
    (1..=8).map(|k| 1u64 << k).collect()
}

/// Doubling sequence from `s_min` up to `s_max`.
pub fn doubling_s_values(s_min: u64, s_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut s = s_min.max(1);
    while s <= s_max {
        out.push(s);
        s *= 2;
    }
    out
}

/// The lines `x1 = 0`, `x2 = 0`, `x1 + x2 = 1` with lattice `{(0,0), (1,0), (0,1)}`.
pub fn unit_triangle_family() -> HyperplaneFamily {
    HyperplaneFamily::new(vec![
        Hyperplane::new(vec![1.0, 0.0], 0.0).expect("unit normal"),
        Hyperplane::new(vec![0.0, 1.0], 0.0).expect("unit normal"),
        Hyperplane::new(vec![1.0, 1.0], 1.0).expect("unit normal"),
    ])
    .expect("unit triangle is in general position")
}

/// `x -> diag(t^2, -t^2 u(t)) x + (t, t)` with `t = 1/s`.
pub fn affine_triangle_map(s: u64, u: impl Fn(f64) -> f64) -> Result<AffineMap> {
    let t = 1.0 / s as f64;
    AffineMap::new(
        vec![vec![t * t, 0.0], vec![0.0, -t * t * u(t)]],
        vec![t, t],
    )
}

/// The unit triangle pushed to the origin by [`affine_triangle_map`].
pub fn affine_triangle_sequence(u: impl Fn(f64) -> f64 + Send + Sync + 'static) -> LatticeSequence {
    LatticeSequence::affine(unit_triangle_family(), move |s| affine_triangle_map(s, &u))
}

/// `{(0,0), (t, t^{2+eps}), (2t, 0)}`.
pub fn degenerate_triangle_points(t: f64, eps: f64) -> Vec<Point> {
    vec![vec![0.0, 0.0], vec![t, t.powf(2.0 + eps)], vec![2.0 * t, 0.0]]
}

pub fn degenerate_triangle_sequence(eps: f64) -> LatticeSequence {
    LatticeSequence::simplex_points(move |s| degenerate_triangle_points(1.0 / s as f64, eps))
}

/// Per-lattice statistics behind (C1), (C2) and (C3).
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeStats {
    /// `max ||theta||`.
    pub lattice_norm: f64,
    /// `min |det|` over N-subsets of unit normals.
    pub min_volume: f64,
    /// `max_i |c_i|`.
    pub max_offset: f64,
    /// `min |<n_i, n_K>|` over `l_i not in K`, from inner products.
    pub delta: f64,
    /// The same minimum computed as `|det(n_i, n_K members)|`.
    pub delta_det: f64,
}

pub fn lattice_stats(lattice: &ChungYaoLattice) -> Result<LatticeStats> {
    let family = lattice.family();
    let n = family.dim();
    let mut delta = f64::INFINITY;
    let mut delta_det = f64::INFINITY;
    for k in (0..family.len()).combinations(n - 1) {
        let nk = family.direction(&k)?;
        for i in (0..family.len()).filter(|i| !k.contains(i)) {
            let ni = family.plane(i).normal();
            delta = delta.min(linalg::dot(ni, &nk).abs());
            let mut rows = vec![ni.to_vec()];
            rows.extend(k.iter().map(|&j| family.plane(j).normal().to_vec()));
            delta_det = delta_det.min(linalg::determinant(&rows).abs());
        }
    }
    Ok(LatticeStats {
        lattice_norm: lattice.norm(),
        min_volume: family.certificate().min_abs_det,
        max_offset: family
            .planes()
            .iter()
            .map(|p| p.offset().abs())
            .fold(0.0, f64::max),
        delta,
        delta_det,
    })
}

/// Finite-range test that `values` (indexed by `s_values`) tends to 0.
pub fn tends_to_zero(s_values: &[u64], values: &[f64]) -> bool {
    if values.len() < 2 || values.len() != s_values.len() {
        return false;
    }
    if values.iter().all(|&v| v == 0.0) {
        return true;
    }
    let first = values[0];
    let last = values[values.len() - 1];
    if last >= 0.1 * first {
        return false;
    }
    let xs: Vec<f64> = s_values.iter().map(|&s| (s as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.max(1e-300).ln()).collect();
    linalg::fit_slope(&xs, &ys).is_some_and(|m| m < 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionThresholds {
    /// (C2) holds on a range when every N-subset volume stays at or above this.
    pub c2_min_volume: f64,
}

impl Default for ConditionThresholds {
    fn default() -> Self {
        ConditionThresholds { c2_min_volume: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionRow {
    pub s: u64,
    pub stats: LatticeStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub rows: Vec<ConditionRow>,
    /// Indices `s` whose family could not be built, with the reason.
    pub failures: Vec<(u64, Error)>,
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
}

fn stats_for(seq: &LatticeSequence, s: u64) -> Result<LatticeStats> {
    lattice_stats(&seq.family(s)?.lattice()?)
}

pub fn check_conditions(
    seq: &LatticeSequence,
    s_values: &[u64],
    thresholds: &ConditionThresholds,
) -> ConditionReport {
    let results: Vec<(u64, Result<LatticeStats>)> = s_values
        .par_iter()
        .map(|&s| (s, stats_for(seq, s)))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (s, r) in results {
        match r {
            Ok(stats) => rows.push(ConditionRow { s, stats }),
            Err(e) => failures.push((s, e)),
        }
    }
    let ss: Vec<u64> = rows.iter().map(|r| r.s).collect();
    let norms: Vec<f64> = rows.iter().map(|r| r.stats.lattice_norm).collect();
    let offsets: Vec<f64> = rows.iter().map(|r| r.stats.max_offset).collect();
    let c2 = failures.is_empty()
        && !rows.is_empty()
        && rows
            .iter()
            .all(|r| r.stats.min_volume >= thresholds.c2_min_volume);
    ConditionReport {
        c1: failures.is_empty() && tends_to_zero(&ss, &norms),
        c2,
        c3: failures.is_empty() && tends_to_zero(&ss, &offsets),
        rows,
        failures,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceRow {
    pub s: u64,
    pub max_offset: f64,
    pub lattice_norm: f64,
    /// `N^{3/2} max|c| / min volume`, the Cramer bound on `||Theta||`.
    pub cramer_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub rows: Vec<EquivalenceRow>,
    /// `max|c_i| <= ||Theta||` at every `s`.
    pub offsets_below_norm: bool,
    /// `||Theta|| <= cramer_bound` at every `s`.
    pub norm_below_cramer: bool,
    pub c1: bool,
    pub c3: bool,
}

impl EquivalenceReport {
    pub fn consistent(&self) -> bool {
        self.offsets_below_norm && self.norm_below_cramer && self.c1 == self.c3
    }
}

pub fn c1_c3_equivalence_probe(seq: &LatticeSequence, s_values: &[u64]) -> Result<EquivalenceReport> {
    let rows = s_values
        .par_iter()
        .map(|&s| {
            let family = seq.family(s)?;
            let stats = lattice_stats(&family.lattice()?)?;
            let n = family.dim() as f64;
            Ok(EquivalenceRow {
                s,
                max_offset: stats.max_offset,
                lattice_norm: stats.lattice_norm,
                cramer_bound: n.powf(1.5) * stats.max_offset / stats.min_volume,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slack = 1.0 + 1e-12;
    let ss: Vec<u64> = rows.iter().map(|r| r.s).collect();
    Ok(EquivalenceReport {
        offsets_below_norm: rows.iter().all(|r| r.max_offset <= r.lattice_norm * slack),
        norm_below_cramer: rows.iter().all(|r| r.lattice_norm <= r.cramer_bound * slack),
        c1: tends_to_zero(&ss, &rows.iter().map(|r| r.lattice_norm).collect::<Vec<_>>()),
        c3: tends_to_zero(&ss, &rows.iter().map(|r| r.max_offset).collect::<Vec<_>>()),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineRow {
    pub s: u64,
    pub stats: LatticeStats,
    /// `max_H |det L_s| prod_j ||L_s^{-T} n_{i_j}||`.
    pub det_statistic: f64,
    /// `max_i |c_i + <n_i, L_s^{-1} b_s>| / ||L_s^{-T} n_i||`.
    pub offset_statistic: f64,
    /// `max_H |vol_s(H) - |det(base normals of H)| / (|det L_s| prod ||L_s^{-T} n||)|`.
    pub volume_identity_error: f64,
    /// `max_H ||theta_{L(H)} - L(theta_H)||`.
    pub vertex_map_error: f64,
    /// Largest `|l'(L(p))|` over transformed hyperplanes `l'` and base
    /// vertices `p` on the original hyperplane.
    pub equation_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineCriterionReport {
    pub rows: Vec<AffineRow>,
    /// Threshold `Δ = max_H |det base normals| / c2_min_volume`.
    pub delta_bound: f64,
    pub lattice_side: bool,
    pub transform_side: bool,
}

impl AffineCriterionReport {
    pub fn agree(&self) -> bool {
        self.lattice_side == self.transform_side
    }
}

/// Evaluates both sides of the affine-sequence criterion on `s_values`.
pub fn affine_criterion(
    seq: &LatticeSequence,
    s_values: &[u64],
    thresholds: &ConditionThresholds,
) -> Result<AffineCriterionReport> {
    let (base, map) = match seq {
        LatticeSequence::Affine { base, map } => (base, map),
        _ => return Err(Error::Configuration("affine criterion needs an affine sequence".into())),
    };
    let base_lattice = base.lattice()?;
    let n = base.dim();
    let subsets: Vec<Vec<usize>> = (0..base.len()).combinations(n).collect();
    let base_dets: Vec<f64> = subsets
        .iter()
        .map(|h| {
            let rows: Vec<Vec<f64>> = h.iter().map(|&i| base.plane(i).normal().to_vec()).collect();
            linalg::determinant(&rows).abs()
        })
        .collect();
    let delta_bound = base_dets.iter().fold(0.0, |m: f64, &v| m.max(v)) / thresholds.c2_min_volume;

    let rows = s_values
        .par_iter()
        .map(|&s| {
            let l = map(s)?;
            let fam = base.transformed(&l)?;
            let lattice = fam.lattice()?;
            let stats = lattice_stats(&lattice)?;
            let det_l = l.determinant().abs();
            let scaled: Vec<f64> = base
                .planes()
                .iter()
                .map(|p| linalg::norm(&l.inverse_transpose_apply(p.normal())))
                .collect();
            let mut det_statistic: f64 = 0.0;
            let mut volume_identity_error: f64 = 0.0;
            let mut vertex_map_error: f64 = 0.0;
            for (h, base_det) in subsets.iter().zip(&base_dets) {
                let stat = det_l * h.iter().map(|&i| scaled[i]).product::<f64>();
                det_statistic = det_statistic.max(stat);
                let rows: Vec<Vec<f64>> = h.iter().map(|&i| fam.plane(i).normal().to_vec()).collect();
                let vol = linalg::determinant(&rows).abs();
                volume_identity_error = volume_identity_error.max((vol - base_det / stat).abs());
                let mapped = l.apply(base_lattice.vertex(h).expect("subset of base"));
                let direct = lattice.vertex(h).expect("subset of image");
                vertex_map_error = vertex_map_error.max(linalg::distance(&mapped, direct));
            }
            let shift = l.linear_inverse_apply(l.offset());
            let offset_statistic = base
                .planes()
                .iter()
                .zip(&scaled)
                .map(|(p, sc)| (p.offset() + linalg::dot(p.normal(), &shift)).abs() / sc)
                .fold(0.0, f64::max);
            let mut equation_error: f64 = 0.0;
            for (h, v) in base_lattice.iter() {
                let image = l.apply(v);
                for &i in h {
                    equation_error = equation_error.max(fam.plane(i).eval(&image).abs());
                }
            }
            Ok(AffineRow {
                s,
                stats,
                det_statistic,
                offset_statistic,
                volume_identity_error,
                vertex_map_error,
                equation_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let ss: Vec<u64> = rows.iter().map(|r| r.s).collect();
    let norms: Vec<f64> = rows.iter().map(|r| r.stats.lattice_norm).collect();
    let offsets: Vec<f64> = rows.iter().map(|r| r.offset_statistic).collect();
    let lattice_side = tends_to_zero(&ss, &norms)
        && rows.iter().all(|r| r.stats.min_volume >= thresholds.c2_min_volume);
    let transform_side = tends_to_zero(&ss, &offsets)
        && rows.iter().all(|r| r.det_statistic <= delta_bound);
    Ok(AffineCriterionReport {
        rows,
        delta_bound,
        lattice_side,
        transform_side,
    })
}

/// Evaluation grid: `points_per_axis^N` uniform points on `[-R, R]^N`,
/// restricted to the closed ball of radius `R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub radius: f64,
    pub points_per_axis: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            radius: 0.5,
            points_per_axis: 21,
        }
    }
}

pub fn grid_points(dim: usize, grid: &GridSpec) -> Vec<Point> {
    let n = grid.points_per_axis.max(2);
    let axis: Vec<f64> = (0..n)
        .map(|i| -grid.radius + 2.0 * grid.radius * i as f64 / (n - 1) as f64)
        .collect();
    (0..dim)
        .map(|_| axis.iter().copied())
        .multi_cartesian_product()
        .filter(|p| linalg::norm(p) <= grid.radius * (1.0 + 1e-12))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub s: u64,
    pub t: f64,
    pub stats: LatticeStats,
    /// `max_x |L(x) - T(x)|` over the grid.
    pub sup_error: f64,
    /// `max_alpha |L_alpha - T_alpha|`.
    pub coeff_error: f64,
    pub interpolant: MultiPoly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub failures: Vec<(u64, Error)>,
    pub taylor: MultiPoly,
    /// Slope of `log(coeff_error)` against `log(||Theta||)`.
    pub coeff_slope: Option<f64>,
    pub sup_slope: Option<f64>,
}

fn log_slope(rows: &[RateRow], metric: impl Fn(&RateRow) -> f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| metric(r) > 0.0 && r.stats.lattice_norm > 0.0)
        .map(|r| (r.stats.lattice_norm.ln(), metric(r).ln()))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    linalg::fit_slope(&xs, &ys)
}

/// Interpolates `f` on every lattice of the sequence and compares with
/// `T^{d-N}_0 f`.
pub fn convergence_experiment<F: SmoothFunction + ?Sized>(
    seq: &LatticeSequence,
    f: &F,
    s_values: &[u64],
    grid: &GridSpec,
) -> Result<RateReport> {
    let first = s_values
        .iter()
        .find_map(|&s| seq.family(s).ok())
        .ok_or_else(|| Error::Configuration("no valid family in the s range".into()))?;
    let degree = first.degree();
    let dim = first.dim();
    let t = taylor(f, &vec![0.0; dim], degree)?;
    let grid_pts = grid_points(dim, grid);
    let results: Vec<(u64, Result<RateRow>)> = s_values
        .par_iter()
        .map(|&s| {
            let row = (|| {
                let family = seq.family(s)?;
                if family.degree() != degree || family.dim() != dim {
                    return Err(Error::Configuration(format!("family at s = {s} changes degree")));
                }
                let lattice = family.lattice()?;
                let li = interpolate(&lattice, f)?;
                let diff = li.poly() - &t;
                let sup_error = grid_pts.iter().map(|x| diff.eval(x).abs()).fold(0.0, f64::max);
                Ok(RateRow {
                    s,
                    t: 1.0 / s as f64,
                    stats: lattice_stats(&lattice)?,
                    sup_error,
                    coeff_error: diff.max_abs_coeff(),
                    interpolant: li.poly().clone(),
                })
            })();
            (s, row)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (s, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((s, e)),
        }
    }
    Ok(RateReport {
        coeff_slope: log_slope(&rows, |r| r.coeff_error),
        sup_slope: log_slope(&rows, |r| r.sup_error),
        rows,
        failures,
        taylor: t,
    })
}

fn ball_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Point {
    let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let len = linalg::norm(&g).max(f64::MIN_POSITIVE);
    let r = radius * Uniform::new(0.0f64, 1.0).unwrap().sample(rng).powf(1.0 / dim as f64);
    g.iter().map(|v| v * r / len).collect()
}

/// Sampled estimate of `max_{|a| <= R} ||f^{(order)}(a)||`, using that the
/// norm of a symmetric form equals the sup of `|phi(v, ..., v)|` on the unit
/// sphere. This is a lower estimate of the true maximum.
pub fn sampled_derivative_norm<F: SmoothFunction + ?Sized>(
    f: &F,
    order: usize,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let dim = f.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let a = ball_point(&mut rng, dim, radius);
        let v = ball_point(&mut rng, dim, 1.0);
        let len = linalg::norm(&v);
        if len == 0.0 {
            continue;
        }
        let v: Vec<f64> = v.iter().map(|c| c / len).collect();
        best = best.max(f.derivative(&a, &vec![v; order])?.abs());
    }
    Ok(best)
}

/// Upper bound from the function when available, sampled estimate otherwise.
pub fn derivative_norm<F: SmoothFunction + ?Sized>(f: &F, order: usize, radius: f64) -> Result<(f64, bool)> {
    match f.derivative_norm_bound(order, radius) {
        Some(b) => Ok((b, true)),
        None => Ok((sampled_derivative_norm(f, order, radius, 4096, 0x5eed)?, false)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub radius: f64,
    /// `min |<n_i, n_K>|`, `l_i not in K`.
    pub delta: f64,
    pub lattice_norm: f64,
    /// `Theta ⊂ B(0, R)` and `delta > 0`.
    pub hypotheses_hold: bool,
    /// `(2R / delta)^{d-N+1}`.
    pub pk_bound: f64,
    /// Largest sampled `|P_K(x)|`, `x in B(0, R)`.
    pub pk_measured: f64,
    /// `max ||f^{(d-N+1)}||` on the ball.
    pub m_order: f64,
    /// `max ||f^{(d-N+2)}||` on the ball.
    pub m_next: f64,
    /// Whether both norms are rigorous upper bounds (not sampled).
    pub norms_rigorous: bool,
    /// `M / (d-N+1)! R^{d-N} (1 + 2/delta)^{d-1} ||Theta||`.
    pub s2_bound: f64,
    /// `C(d, N-1) (2R/delta)^{d-N+1} / (d-N+1)! max||f^{(d-N+2)}|| ||Theta||`.
    pub s1_bound: f64,
    pub total_bound: f64,
    /// `max |L(x) - T(x)|` over the grid.
    pub measured_error: f64,
}

impl BoundReport {
    pub fn pk_bound_holds(&self) -> bool {
        self.pk_measured <= self.pk_bound * (1.0 + 1e-12)
    }

    pub fn error_bound_holds(&self) -> bool {
        self.measured_error <= self.total_bound * (1.0 + 1e-12)
    }
}

/// Evaluates the explicit bounds of the convergence proof on one lattice.
pub fn bound_evaluator<F: SmoothFunction + ?Sized>(
    lattice: &ChungYaoLattice,
    f: &F,
    grid: &GridSpec,
    pk_samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    let family = lattice.family();
    let n = family.dim();
    let d = family.len();
    let m = d - n + 1;
    let radius = grid.radius;
    let stats = lattice_stats(lattice)?;
    if stats.delta <= 0.0 {
        return Err(Error::DegenerateSubset {
            subset: Vec::new(),
            det: stats.delta,
        });
    }
    let delta = stats.delta;
    let norm = stats.lattice_norm;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Point> = (0..pk_samples).map(|_| ball_point(&mut rng, n, radius)).collect();
    let mut pk_measured: f64 = 0.0;
    for k in (0..d).combinations(n - 1) {
        let pk = PkPolynomial::new(family, &k, d, false)?;
        for x in &samples {
            pk_measured = pk_measured.max(pk.eval(x).abs());
        }
    }

    let (m_order, r1) = derivative_norm(f, m, radius)?;
    let (m_next, r2) = derivative_norm(f, m + 1, radius)?;
    let pk_bound = (2.0 * radius / delta).powi(m as i32);
    let s2_bound = m_order / factorial(m)
        * radius.powi((m - 1) as i32)
        * (1.0 + 2.0 / delta).powi((d - 1) as i32)
        * norm;
    let s1_bound = binomial(d, n - 1) as f64 * pk_bound / factorial(m) * m_next * norm;

    let t = taylor(f, &vec![0.0; n], m - 1)?;
    let diff = interpolate(lattice, f)?.poly() - &t;
    let measured_error = grid_points(n, grid)
        .iter()
        .map(|x| diff.eval(x).abs())
        .fold(0.0, f64::max);

    Ok(BoundReport {
        radius,
        delta,
        lattice_norm: norm,
        hypotheses_hold: norm <= radius && delta > 0.0,
        pk_bound,
        pk_measured,
        m_order,
        m_next,
        norms_rigorous: r1 && r2,
        s2_bound,
        s1_bound,
        total_bound: s1_bound + s2_bound,
        measured_error,
    })
}
