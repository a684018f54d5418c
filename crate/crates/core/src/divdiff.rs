//! Multivariate divided differences
//!
//! `[a_0, ..., a_s | v_1, ..., v_s] f` is the average of the directional
//! derivative `D_{v_1} ... D_{v_s} f` over the simplex spanned by the points,
//! parametrized by the standard simplex `Δ_s`. Polynomial integrands are
//! integrated exactly; everything else goes through a Grundmann-Möller rule.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::function::{require_order, SmoothFunction};
use crate::geometry::Point;
use crate::poly::{factorial, MultiPoly};

/// Largest simplex dimension with a tabulated rule.
pub const MAX_SIMPLEX_DIM: usize = 16;
/// Largest Grundmann-Möller index `q` (exactness `2q + 1`).
pub const MAX_RULE_INDEX: usize = 16;

/// Default polynomial exactness for divided differences of order `s`.
pub fn default_exactness(s: usize) -> usize {
    2 * s + 5
}

/// A quadrature rule on the standard simplex `{xi >= 0, sum xi <= 1}`.
#[derive(Clone, Debug)]
pub struct SimplexRule {
    dim: usize,
    exactness: usize,
    /// Barycentric coordinates `(xi_0, xi_1, ..., xi_s)` with `xi_0 = 1 - sum xi_i`.
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SimplexRule {
    /// Grundmann-Möller rule of index `q = ceil((exactness - 1) / 2)`.
    pub fn grundmann_moller(dim: usize, exactness: usize) -> Result<Arc<SimplexRule>> {
        let q = exactness.saturating_sub(1).div_ceil(2);
        if dim > MAX_SIMPLEX_DIM || q > MAX_RULE_INDEX {
            return Err(Error::Configuration(format!(
                "no simplex rule for dimension {dim} and exactness {exactness}"
            )));
        }
        type RuleCache = Mutex<HashMap<(usize, usize), Arc<SimplexRule>>>;
        static CACHE: OnceLock<RuleCache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        Ok(guard
            .entry((dim, q))
            .or_insert_with(|| Arc::new(build_gm(dim, q)))
            .clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exactness(&self) -> usize {
        self.exactness
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `int_{Δ_s} g(xi) dxi` with `g` taking barycentric coordinates.
    pub fn integrate(&self, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(n, w)| w * g(n))
            .sum()
    }
}

fn build_gm(n: usize, q: usize) -> SimplexRule {
    let d = 2 * q + 1;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for i in 0..=q {
        let denom = (d + n - 2 * i) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let w = sign * 2f64.powi(-2 * q as i32) * denom.powi(d as i32)
            / (factorial(i) * factorial(d + n - i));
        for beta in crate::poly::homogeneous_monomials(n + 1, q - i) {
            nodes.push(
                beta.exponents()
                    .iter()
                    .map(|&b| (2 * b + 1) as f64 / denom)
                    .collect(),
            );
            weights.push(w);
        }
    }
    SimplexRule {
        dim: n,
        exactness: d,
        nodes,
        weights,
    }
}

/// Points `a_0, ..., a_s` in R^N; repetitions are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct PointTuple {
    points: Vec<Point>,
}

impl PointTuple {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or_else(|| Error::Configuration("empty point tuple".into()))?;
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        Ok(PointTuple { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Number of simplex parameters, `s = len - 1`.
    pub fn order(&self) -> usize {
        self.points.len() - 1
    }

    /// `sum_j lambda_j a_j` for barycentric `lambda`.
    pub fn at(&self, lambda: &[f64]) -> Point {
        let mut out = vec![0.0; self.dim()];
        for (l, p) in lambda.iter().zip(&self.points) {
            for (o, v) in out.iter_mut().zip(p) {
                *o += l * v;
            }
        }
        out
    }
}

/// `int_{[A]} g = int_{Δ_s} g(a_0 + sum xi_i (a_i - a_0)) dxi` by quadrature.
pub fn simplex_integral(
    g: impl Fn(&[f64]) -> f64,
    points: &PointTuple,
    exactness: usize,
) -> Result<f64> {
    let s = points.order();
    if s == 0 {
        return Ok(g(&points.points[0]));
    }
    let rule = SimplexRule::grundmann_moller(s, exactness)?;
    Ok(rule.integrate(|lambda| g(&points.at(lambda))))
}

/// `int_{[A]} q` for a polynomial `q`, exactly.
pub fn simplex_integral_polynomial(q: &MultiPoly, points: &PointTuple) -> Result<f64> {
    if q.dim() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            found: points.dim(),
        });
    }
    let s = points.order();
    let a0 = &points.points[0];
    if s == 0 {
        return Ok(q.eval(a0));
    }
    // x_k(xi) = a0_k + sum_i xi_i (a_i - a0)_k
    let images: Vec<MultiPoly> = (0..q.dim())
        .map(|k| {
            let slope: Vec<f64> = points.points[1..].iter().map(|a| a[k] - a0[k]).collect();
            MultiPoly::affine(&slope, -a0[k])
        })
        .collect();
    Ok(q.compose(&images)?.integrate_standard_simplex())
}

fn check_directions(points: &PointTuple, directions: &[Vec<f64>]) -> Result<()> {
    if directions.len() != points.order() {
        return Err(Error::OrderMismatch {
            expected: points.order(),
            found: directions.len(),
        });
    }
    if let Some(v) = directions.iter().find(|v| v.len() != points.dim()) {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            found: v.len(),
        });
    }
    Ok(())
}

/// Exact divided difference of a polynomial.
pub fn divided_difference_polynomial(
    p: &MultiPoly,
    points: &PointTuple,
    directions: &[Vec<f64>],
) -> Result<f64> {
    check_directions(points, directions)?;
    if directions.len() > p.degree_bound() {
        return Ok(0.0);
    }
    simplex_integral_polynomial(&p.directional_derivatives(directions), points)
}

/// Divided difference by quadrature only, regardless of the function kind.
pub fn divided_difference_quadrature<F: SmoothFunction + ?Sized>(
    f: &F,
    points: &PointTuple,
    directions: &[Vec<f64>],
    exactness: usize,
) -> Result<f64> {
    check_directions(points, directions)?;
    require_order(f, directions.len())?;
    let s = points.order();
    if s == 0 {
        return f.derivative(&points.points[0], directions);
    }
    let rule = SimplexRule::grundmann_moller(s, exactness)?;
    let mut err = None;
    let v = rule.integrate(|lambda| match f.derivative(&points.at(lambda), directions) {
        Ok(v) => v,
        Err(e) => {
            err = Some(e);
            0.0
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `[a_0, ..., a_s | v_1, ..., v_s] f`; exact for polynomials, adaptive
/// quadrature otherwise.
pub fn divided_difference<F: SmoothFunction + ?Sized>(
    f: &F,
    points: &PointTuple,
    directions: &[Vec<f64>],
    exactness: usize,
) -> Result<f64> {
    divided_difference_with_estimate(f, points, directions, exactness).map(|e| e.value)
}

/// A value together with a quadrature error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Stopping rule for [`adaptive_simplex_integral`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveTolerance {
    pub absolute: f64,
    pub relative: f64,
    pub max_pieces: usize,
}

impl Default for AdaptiveTolerance {
    fn default() -> Self {
        AdaptiveTolerance {
            absolute: 1e-14,
            relative: 1e-12,
            max_pieces: 512,
        }
    }
}

struct Piece {
    vertices: Vec<Point>,
    fraction: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn combine(mu: &[f64], vertices: &[Point]) -> Point {
    let mut out = vec![0.0; vertices[0].len()];
    for (m, v) in mu.iter().zip(vertices) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += m * x;
        }
    }
    out
}

/// `int_{[A]} g` by global adaptive bisection of the parameter simplex.
/// Each piece is integrated with the rule of the given exactness and with
/// the next one; their difference is the piece's error estimate, and the
/// piece with the largest estimate is split at the midpoint of its longest
/// edge until the total estimate meets `tol`.
pub fn adaptive_simplex_integral(
    mut g: impl FnMut(&[f64]) -> Result<f64>,
    points: &PointTuple,
    exactness: usize,
    tol: &AdaptiveTolerance,
) -> Result<Estimate> {
    let s = points.order();
    if s == 0 {
        return Ok(Estimate {
            value: g(&points.points[0])?,
            error: 0.0,
        });
    }
    let coarse = SimplexRule::grundmann_moller(s, exactness)?;
    let fine = SimplexRule::grundmann_moller(s, exactness + 2)?;
    let mut eval = |vertices: Vec<Point>, fraction: f64| -> Result<Piece> {
        let mut rule_sum = |rule: &SimplexRule| -> Result<f64> {
            let mut acc = 0.0;
            for (mu, w) in rule.nodes.iter().zip(&rule.weights) {
                acc += w * g(&combine(mu, &vertices))?;
            }
            Ok(acc * fraction)
        };
        let c = rule_sum(&coarse)?;
        let value = rule_sum(&fine)?;
        Ok(Piece {
            vertices,
            fraction,
            value,
            error: (value - c).abs(),
        })
    };

    let mut heap = std::collections::BinaryHeap::new();
    heap.push(eval(points.points.clone(), 1.0)?);
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if error <= tol.absolute.max(tol.relative * value.abs()) || heap.len() >= tol.max_pieces {
            return Ok(Estimate { value, error });
        }
        let worst = heap.pop().expect("non-empty");
        let (i, j) = (0..=s)
            .flat_map(|i| (i + 1..=s).map(move |j| (i, j)))
            .max_by(|a, b| {
                let da = crate::linalg::distance(&worst.vertices[a.0], &worst.vertices[a.1]);
                let db = crate::linalg::distance(&worst.vertices[b.0], &worst.vertices[b.1]);
                da.total_cmp(&db)
            })
            .expect("s >= 1");
        let mid: Point = worst.vertices[i]
            .iter()
            .zip(&worst.vertices[j])
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let mut left = worst.vertices.clone();
        left[j] = mid.clone();
        let mut right = worst.vertices;
        right[i] = mid;
        heap.push(eval(left, 0.5 * worst.fraction)?);
        heap.push(eval(right, 0.5 * worst.fraction)?);
    }
}

/// Divided difference with a quadrature error estimate (zero for the
/// exact polynomial path).
pub fn divided_difference_with_estimate<F: SmoothFunction + ?Sized>(
    f: &F,
    points: &PointTuple,
    directions: &[Vec<f64>],
    exactness: usize,
) -> Result<Estimate> {
    if let Some(p) = f.as_polynomial() {
        return Ok(Estimate {
            value: divided_difference_polynomial(p, points, directions)?,
            error: 0.0,
        });
    }
    check_directions(points, directions)?;
    require_order(f, directions.len())?;
    adaptive_simplex_integral(
        |x| f.derivative(x, directions),
        points,
        exactness,
        &AdaptiveTolerance::default(),
    )
}

fn ball_sample(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let len = crate::linalg::norm(&g).max(f64::MIN_POSITIVE);
    let r = radius * Uniform::new(0.0f64, 1.0).unwrap().sample(rng).powf(1.0 / dim as f64);
    g.iter().map(|v| v * r / len).collect()
}

/// Largest change of the divided difference over `samples` random
/// perturbations of all points and directions within radius `eps`.
pub fn divided_difference_continuity_probe<F: SmoothFunction + ?Sized>(
    f: &F,
    points: &PointTuple,
    directions: &[Vec<f64>],
    eps: f64,
    samples: usize,
    seed: u64,
    exactness: usize,
) -> Result<f64> {
    let base = divided_difference(f, points, directions, exactness)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = points.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let moved: Vec<Point> = points
            .points
            .iter()
            .map(|p| {
                let d = ball_sample(&mut rng, dim, eps);
                p.iter().zip(&d).map(|(a, b)| a + b).collect()
            })
            .collect();
        let dirs: Vec<Vec<f64>> = directions
            .iter()
            .map(|v| {
                let d = ball_sample(&mut rng, dim, eps);
                v.iter().zip(&d).map(|(a, b)| a + b).collect()
            })
            .collect();
        let value = divided_difference(f, &PointTuple::new(moved)?, &dirs, exactness)?;
        worst = worst.max((value - base).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Function;
    use crate::poly::{homogeneous_monomials, MultiIndex};

    fn tuple(points: &[&[f64]]) -> PointTuple {
        PointTuple::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn weights_sum_to_simplex_volume() {
        for s in 1..=7 {
            for e in [1, 3, 7, 11] {
                let rule = SimplexRule::grundmann_moller(s, e).unwrap();
                let total: f64 = rule.weights().iter().sum();
                assert!((total - 1.0 / factorial(s)).abs() < 1e-12, "s={s} e={e}");
                for n in rule.nodes() {
                    assert!(n.iter().all(|&x| x >= 0.0));
                    assert!(n[1..].iter().sum::<f64>() <= 1.0 + 1e-14);
                }
            }
        }
    }

    #[test]
    fn rule_is_exact_up_to_its_degree() {
        for s in 1..=4 {
            let rule = SimplexRule::grundmann_moller(s, 7).unwrap();
            for deg in 0..=7 {
                for beta in homogeneous_monomials(s, deg) {
                    let got = rule.integrate(|l| beta.eval(&l[1..]));
                    let exact = beta.factorial() / factorial(deg + s);
                    assert!((got - exact).abs() <= 1e-12 * exact.max(1e-3), "s={s} beta={beta:?}");
                }
            }
        }
    }

    #[test]
    fn unsupported_rule_is_a_configuration_error() {
        assert!(matches!(
            SimplexRule::grundmann_moller(MAX_SIMPLEX_DIM + 1, 3),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn integral_examples() {
        let one = |_: &[f64]| 1.0;
        let a2 = tuple(&[&[0.0, 0.0], &[1.0, 0.3], &[-2.0, 5.0]]);
        assert!((simplex_integral(one, &a2, 3).unwrap() - 0.5).abs() < 1e-14);
        let a3 = tuple(&[&[0.0], &[1.0], &[2.0], &[3.0]]);
        assert!((simplex_integral(one, &a3, 3).unwrap() - 1.0 / 6.0).abs() < 1e-14);
        let seg = tuple(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert!((simplex_integral(|x| x[0], &seg, 3).unwrap() - 0.5).abs() < 1e-14);
        let x1 = MultiPoly::variable(2, 0);
        assert!((simplex_integral_polynomial(&x1, &seg).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn divided_difference_examples() {
        let sq = Function::monomial(vec![2]);
        let a = tuple(&[&[0.0], &[1.0]]);
        assert!((divided_difference(&sq, &a, &[vec![1.0]], 5).unwrap() - 1.0).abs() < 1e-15);

        let f = Function::monomial(vec![2, 0]);
        let a = tuple(&[&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0]]);
        let e1 = vec![1.0, 0.0];
        assert!((divided_difference(&f, &a, &[e1.clone(), e1], 5).unwrap() - 1.0).abs() < 1e-15);

        // |alpha| = s and v repeated: the value is v^alpha for any points.
        let alpha = MultiIndex::new(vec![1, 2]);
        let f = Function::monomial(vec![1, 2]);
        let a = tuple(&[&[0.3, -1.0], &[2.0, 0.5], &[0.1, 0.1], &[-0.7, 4.0]]);
        let v = vec![0.6, -1.3];
        let got = divided_difference(&f, &a, &[v.clone(), v.clone(), v.clone()], 5).unwrap();
        assert!((got - alpha.eval(&v)).abs() < 1e-13);
    }

    #[test]
    fn exact_and_quadrature_paths_agree_on_polynomials() {
        let p = MultiPoly::from_terms(2, &[(vec![3, 1], 1.0), (vec![0, 4], -2.0), (vec![1, 1], 0.5)]).unwrap();
        let f = Function::Polynomial(p.clone());
        let a = tuple(&[&[0.1, 0.2], &[0.9, -0.3], &[0.4, 0.7]]);
        let dirs = vec![vec![0.3, 0.4], vec![-1.0, 0.2]];
        let exact = divided_difference_polynomial(&p, &a, &dirs).unwrap();
        let quad = divided_difference_quadrature(&f, &a, &dirs, 5).unwrap();
        assert!((exact - quad).abs() < 1e-13);
    }

    #[test]
    fn order_mismatch_is_rejected() {
        let f = Function::monomial(vec![2, 0]);
        let a = tuple(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert!(matches!(
            divided_difference(&f, &a, &[], 5),
            Err(Error::OrderMismatch { .. })
        ));
    }

    #[test]
    fn continuity_probe_shrinks_with_eps() {
        let f = Function::exp_affine(vec![0.5, 1.0], 0.0);
        let a = tuple(&[&[0.0, 0.0], &[0.3, 0.1], &[0.2, 0.4]]);
        let dirs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(divided_difference_continuity_probe(&f, &a, &dirs, 0.0, 5, 1, 9).unwrap(), 0.0);
        let mut prev = f64::INFINITY;
        for k in 2..=8 {
            let eps = 10f64.powi(-k);
            let dev = divided_difference_continuity_probe(&f, &a, &dirs, eps, 20, 7, 9).unwrap();
            assert!(dev < prev);
            prev = dev;
        }
        let d1 = divided_difference_continuity_probe(&f, &a, &dirs, 1e-3, 40, 3, 9).unwrap();
        let d2 = divided_difference_continuity_probe(&f, &a, &dirs, 5e-4, 40, 3, 9).unwrap();
        let ratio = d1 / d2;
        assert!(ratio > 0.5 && ratio < 8.0, "ratio {ratio}");
    }
}
