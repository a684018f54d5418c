//! Dense multivariate polynomials over the graded monomial basis, Taylor
//! projectors, Vandermonde determinants and polarization of homogeneous
//! polynomials into symmetric multilinear forms.
//!
//! Monomials are ordered by total degree first; within a degree the
//! exponent vectors run in descending lexicographic order, so in two
//! variables the basis of degree 2 is `1, x1, x2, x1^2, x1 x2, x2^2`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::function::SmoothFunction;
use crate::linalg;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|alpha|`.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// `alpha!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a as usize)).product()
    }

    /// `x^alpha`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &v)| v.powi(a as i32))
            .product()
    }

    /// Position of the monomial in the graded basis.
    pub fn rank(&self) -> usize {
        let n = self.0.len();
        let k = self.degree();
        if n == 0 {
            return 0;
        }
        let mut pos = binomial(n + k - 1, n);
        let mut rem = k;
        for (i, &a) in self.0.iter().enumerate().take(n - 1) {
            let parts = n - 1 - i;
            for b in (a as usize + 1)..=rem {
                pos += binomial(rem - b + parts - 1, parts - 1);
            }
            rem -= a as usize;
        }
        pos
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

fn push_compositions(dim: usize, total: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if prefix.len() + 1 == dim {
        prefix.push(total as u32);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for a in (0..=total).rev() {
        prefix.push(a as u32);
        push_compositions(dim, total - a, prefix, out);
        prefix.pop();
    }
}

/// All exponents with `|alpha| = degree`, in basis order.
pub fn homogeneous_monomials(dim: usize, degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    if dim == 0 {
        if degree == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return out;
    }
    push_compositions(dim, degree, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// All exponents with `|alpha| <= max_degree`, in basis order.
pub fn monomials(dim: usize, max_degree: usize) -> Vec<MultiIndex> {
    (0..=max_degree)
        .flat_map(|k| homogeneous_monomials(dim, k))
        .collect()
}

type BasisCache = Mutex<HashMap<(usize, usize), Arc<[MultiIndex]>>>;

fn basis(dim: usize, degree: usize) -> Arc<[MultiIndex]> {
    static CACHE: OnceLock<BasisCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((dim, degree))
        .or_insert_with(|| monomials(dim, degree).into())
        .clone()
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A polynomial in `dim` variables of degree at most `degree`, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly {
    dim: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl MultiPoly {
    pub fn zero(dim: usize, degree: usize) -> Self {
        MultiPoly {
            dim,
            degree,
            coeffs: vec![0.0; binomial(dim + degree, degree)],
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        let mut p = Self::zero(dim, 0);
        p.coeffs[0] = value;
        p
    }

    pub fn monomial(alpha: MultiIndex, coeff: f64) -> Self {
        let mut p = Self::zero(alpha.dim(), alpha.degree());
        p.coeffs[alpha.rank()] = coeff;
        p
    }

    /// The coordinate function `x_i`.
    pub fn variable(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self::monomial(MultiIndex(e), 1.0)
    }

    /// `<normal, x> - offset`.
    pub fn affine(normal: &[f64], offset: f64) -> Self {
        let dim = normal.len();
        let mut p = Self::zero(dim, 1);
        p.coeffs[0] = -offset;
        p.coeffs[1..].copy_from_slice(normal);
        p
    }

    pub fn from_terms(dim: usize, terms: &[(Vec<u32>, f64)]) -> Result<Self> {
        let degree = terms
            .iter()
            .map(|(e, _)| e.iter().map(|&a| a as usize).sum())
            .max()
            .unwrap_or(0);
        let mut p = Self::zero(dim, degree);
        for (e, c) in terms {
            if e.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.len(),
                });
            }
            p.coeffs[MultiIndex(e.clone()).rank()] += c;
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Degree bound of the storage (not necessarily the true degree).
    pub fn degree_bound(&self) -> usize {
        self.degree
    }

    /// Largest `|alpha|` with a nonzero coefficient; 0 for the zero polynomial.
    pub fn total_degree(&self) -> usize {
        self.terms()
            .filter(|(_, c)| *c != 0.0)
            .map(|(a, _)| a.degree())
            .max()
            .unwrap_or(0)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        if alpha.degree() > self.degree {
            0.0
        } else {
            self.coeffs[alpha.rank()]
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        let b = basis(self.dim, self.degree);
        (0..self.coeffs.len()).map(move |i| (b[i].clone(), self.coeffs[i]))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Same polynomial stored with degree bound `degree` (higher terms dropped).
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut p = Self::zero(self.dim, degree);
        let n = p.coeffs.len().min(self.coeffs.len());
        p.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        p
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let b = basis(self.dim, self.degree);
        compensated_sum(
            self.coeffs
                .iter()
                .zip(b.iter())
                .filter(|(c, _)| **c != 0.0)
                .map(|(c, a)| c * a.eval(x)),
        )
    }

    pub fn scale(&self, factor: f64) -> Self {
        MultiPoly {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `max |p_alpha - q_alpha|` over the union of both bases.
    pub fn max_coeff_distance(&self, other: &MultiPoly) -> f64 {
        (self - other).max_abs_coeff()
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim, self.degree.saturating_sub(1));
        for (alpha, c) in self.terms() {
            let a = alpha.0[i];
            if a == 0 || c == 0.0 {
                continue;
            }
            let mut e = alpha.0;
            e[i] -= 1;
            out.coeffs[MultiIndex(e).rank()] += c * a as f64;
        }
        out
    }

    /// `D_v p = sum_i v_i d_i p`.
    pub fn directional_derivative(&self, v: &[f64]) -> Self {
        let mut out = Self::zero(self.dim, self.degree.saturating_sub(1));
        for (alpha, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            for (i, &vi) in v.iter().enumerate() {
                let a = alpha.0[i];
                if a == 0 || vi == 0.0 {
                    continue;
                }
                let mut e = alpha.0.clone();
                e[i] -= 1;
                out.coeffs[MultiIndex(e).rank()] += c * a as f64 * vi;
            }
        }
        out
    }

    /// `D_{v_1} ... D_{v_k} p`.
    pub fn directional_derivatives(&self, directions: &[Vec<f64>]) -> Self {
        directions
            .iter()
            .fold(self.clone(), |p, v| p.directional_derivative(v))
    }

    pub fn is_homogeneous(&self, degree: usize) -> bool {
        self.terms()
            .all(|(a, c)| c == 0.0 || a.degree() == degree)
    }

    /// Substitutes `x_k = images[k]`, all images living in a common space.
    pub fn compose(&self, images: &[MultiPoly]) -> Result<MultiPoly> {
        if images.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: images.len(),
            });
        }
        let target = images.first().map(|p| p.dim).unwrap_or(0);
        let img_deg = images.iter().map(|p| p.degree).max().unwrap_or(0);
        let mut out = MultiPoly::zero(target, self.degree * img_deg);
        // powers[k][j] = images[k]^j
        let mut powers: Vec<Vec<MultiPoly>> = images
            .iter()
            .map(|p| vec![MultiPoly::constant(target, 1.0), p.clone()])
            .collect();
        for (alpha, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            let mut term = MultiPoly::constant(target, c);
            for (k, &a) in alpha.0.iter().enumerate() {
                while powers[k].len() <= a as usize {
                    let next = &powers[k][powers[k].len() - 1] * &images[k];
                    powers[k].push(next);
                }
                if a > 0 {
                    term = &term * &powers[k][a as usize];
                }
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Exact integral over the standard simplex `{xi >= 0, sum xi <= 1}` of
    /// dimension `dim`, via `int xi^beta = beta! / (|beta| + dim)!`.
    pub fn integrate_standard_simplex(&self) -> f64 {
        let s = self.dim;
        compensated_sum(
            self.terms()
                .filter(|(_, c)| *c != 0.0)
                .map(|(b, c)| c * b.factorial() / factorial(b.degree() + s)),
        )
    }
}

fn combine(a: &MultiPoly, b: &MultiPoly, sign: f64) -> MultiPoly {
    assert_eq!(a.dim, b.dim, "polynomials live in different spaces");
    let mut out = a.with_degree(a.degree.max(b.degree));
    for (i, c) in b.coeffs.iter().enumerate() {
        out.coeffs[i] += sign * c;
    }
    out
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        combine(self, rhs, 1.0)
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        combine(self, rhs, -1.0)
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.dim, rhs.dim, "polynomials live in different spaces");
        let mut out = MultiPoly::zero(self.dim, self.degree + rhs.degree);
        let lhs_terms: Vec<(MultiIndex, f64)> =
            self.terms().filter(|(_, c)| *c != 0.0).collect();
        for (b, cb) in rhs.terms() {
            if cb == 0.0 {
                continue;
            }
            for (a, ca) in &lhs_terms {
                let e: Vec<u32> = a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect();
                out.coeffs[MultiIndex(e).rank()] += ca * cb;
            }
        }
        out
    }
}

/// A symmetric `order`-linear form, stored as its diagonal restriction
/// `p(v) = phi(v, ..., v)`, a homogeneous polynomial of degree `order`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricForm {
    order: usize,
    diagonal: MultiPoly,
}

impl SymmetricForm {
    pub fn new(diagonal: MultiPoly, order: usize) -> Result<Self> {
        if !diagonal.is_homogeneous(order) {
            return Err(Error::NotHomogeneous { degree: order });
        }
        Ok(SymmetricForm { order, diagonal })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.diagonal.dim()
    }

    pub fn diagonal(&self) -> &MultiPoly {
        &self.diagonal
    }

    /// `phi(v_1, ..., v_m)`.
    pub fn eval(&self, vectors: &[Vec<f64>]) -> Result<f64> {
        polarize(&self.diagonal, vectors)
    }

    /// `phi(v, ..., v)`.
    pub fn eval_diagonal(&self, v: &[f64]) -> f64 {
        self.diagonal.eval(v)
    }
}

/// `(1/m!) D_{v_1} ... D_{v_m} p` for `p` homogeneous of degree `m`.
pub fn polarize(p: &MultiPoly, vectors: &[Vec<f64>]) -> Result<f64> {
    let m = vectors.len();
    if !p.is_homogeneous(m) {
        return Err(Error::NotHomogeneous { degree: m });
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != p.dim()) {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: v.len(),
        });
    }
    let q = p.directional_derivatives(vectors);
    Ok(q.coefficients()[0] / factorial(m))
}

/// Taylor polynomial of order `order` at `center`, expanded in the
/// monomial basis about the origin.
pub fn taylor<F: SmoothFunction + ?Sized>(f: &F, center: &[f64], order: usize) -> Result<MultiPoly> {
    let dim = center.len();
    if f.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: dim,
        });
    }
    let mut local = MultiPoly::zero(dim, order);
    for (i, alpha) in basis(dim, order).iter().enumerate() {
        let dirs = unit_directions(alpha);
        local.coeffs[i] = f.derivative(center, &dirs)? / alpha.factorial();
    }
    if center.iter().all(|&c| c == 0.0) {
        return Ok(local);
    }
    let shifts: Vec<MultiPoly> = center
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            MultiPoly::affine(&e, c)
        })
        .collect();
    Ok(local.compose(&shifts)?.with_degree(order))
}

/// `alpha` as a list of repeated coordinate directions, so that
/// `D^{dirs} f = d^alpha f`.
pub fn unit_directions(alpha: &MultiIndex) -> Vec<Vec<f64>> {
    let dim = alpha.dim();
    let mut dirs = Vec::with_capacity(alpha.degree());
    for (i, &a) in alpha.0.iter().enumerate() {
        for _ in 0..a {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            dirs.push(e);
        }
    }
    dirs
}

/// The form `(v_1..v_m) -> f^{(m)}(a)(v_1, ..., v_m)`.
pub fn derivative_form<F: SmoothFunction + ?Sized>(f: &F, a: &[f64], m: usize) -> Result<SymmetricForm> {
    let dim = a.len();
    let mut diag = MultiPoly::zero(dim, m);
    for alpha in homogeneous_monomials(dim, m) {
        let d = f.derivative(a, &unit_directions(&alpha))?;
        diag.coeffs[alpha.rank()] = factorial(m) / alpha.factorial() * d;
    }
    SymmetricForm::new(diag, m)
}

/// `det(basis_i(point_j))`.
pub fn vandermonde(points: &[Vec<f64>], basis: &[MultiPoly]) -> Result<f64> {
    if points.len() != basis.len() {
        return Err(Error::SizeMismatch {
            points: points.len(),
            basis: basis.len(),
        });
    }
    let m: Vec<Vec<f64>> = basis
        .iter()
        .map(|b| points.iter().map(|p| b.eval(p)).collect())
        .collect();
    Ok(linalg::determinant(&m))
}

/// Monomial basis of the homogeneous polynomials of degree `degree`.
pub fn homogeneous_basis(dim: usize, degree: usize) -> Vec<MultiPoly> {
    homogeneous_monomials(dim, degree)
        .into_iter()
        .map(|a| MultiPoly::monomial(a, 1.0))
        .collect()
}

/// Monomial basis of all polynomials of degree at most `degree`.
pub fn full_basis(dim: usize, degree: usize) -> Vec<MultiPoly> {
    monomials(dim, degree)
        .into_iter()
        .map(|a| MultiPoly::monomial(a, 1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Function;

    fn e(dim: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    }

    #[test]
    fn enumeration_sizes_and_ranks() {
        for dim in 1..=4 {
            for d in 0..=5 {
                let all = monomials(dim, d);
                assert_eq!(all.len(), binomial(dim + d, d));
                assert_eq!(homogeneous_monomials(dim, d).len(), binomial(dim + d - 1, d));
                for (i, a) in all.iter().enumerate() {
                    assert_eq!(a.rank(), i);
                }
                assert!(all.windows(2).all(|w| w[0] < w[1]));
            }
        }
        let two: Vec<Vec<u32>> = monomials(2, 2).into_iter().map(|a| a.0).collect();
        assert_eq!(
            two,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
    }

    #[test]
    fn arithmetic_and_eval() {
        let x = MultiPoly::variable(2, 0);
        let y = MultiPoly::variable(2, 1);
        let p = &(&x * &x) - &(&y * &MultiPoly::constant(2, 3.0));
        assert!((p.eval(&[2.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(p.partial(0).eval(&[2.0, 1.0]), 4.0);
        assert_eq!(p.directional_derivative(&[1.0, 1.0]).eval(&[2.0, 0.0]), 1.0);
    }

    #[test]
    fn taylor_examples() {
        let f = Function::exp_affine(vec![1.0, 1.0], 0.0);
        let t = taylor(&f, &[0.0, 0.0], 1).unwrap();
        let expected = MultiPoly::from_terms(2, &[(vec![0, 0], 1.0), (vec![1, 0], 1.0), (vec![0, 1], 1.0)]).unwrap();
        assert!(t.max_coeff_distance(&expected) < 1e-15);

        let sq = Function::monomial(vec![2, 0]);
        assert_eq!(taylor(&sq, &[0.0, 0.0], 1).unwrap().max_abs_coeff(), 0.0);

        let p = MultiPoly::from_terms(2, &[(vec![0, 0], 1.5), (vec![2, 1], -2.0), (vec![0, 3], 0.25)]).unwrap();
        let tp = taylor(&Function::Polynomial(p.clone()), &[0.3, -0.7], 3).unwrap();
        assert!(tp.max_coeff_distance(&p) < 1e-12);
    }

    #[test]
    fn vandermonde_examples() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let b = full_basis(2, 1);
        assert!((vandermonde(&pts, &b).unwrap() - 1.0).abs() < 1e-15);
        let rep = vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.0, 1.0]];
        assert_eq!(vandermonde(&rep, &b).unwrap(), 0.0);
        assert!(matches!(
            vandermonde(&pts[..2], &b),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn polarize_examples() {
        let x1sq = MultiPoly::monomial(MultiIndex::new(vec![2, 0]), 1.0);
        assert_eq!(polarize(&x1sq, &[e(2, 0), e(2, 0)]).unwrap(), 1.0);
        let x1x2 = MultiPoly::monomial(MultiIndex::new(vec![1, 1]), 1.0);
        assert_eq!(polarize(&x1x2, &[e(2, 0), e(2, 1)]).unwrap(), 0.5);
        let mixed = &x1sq + &MultiPoly::variable(2, 0);
        assert!(matches!(
            polarize(&mixed, &[e(2, 0), e(2, 0)]),
            Err(Error::NotHomogeneous { .. })
        ));
    }

    #[test]
    fn derivative_form_examples() {
        let sq = Function::monomial(vec![2, 0]);
        let phi = derivative_form(&sq, &[0.3, 0.1], 2).unwrap();
        assert!((phi.eval(&[e(2, 0), e(2, 0)]).unwrap() - 2.0).abs() < 1e-15);

        let lin = Function::Polynomial(MultiPoly::affine(&[2.0, -1.0], 0.0));
        let phi = derivative_form(&lin, &[5.0, 5.0], 1).unwrap();
        assert!((phi.eval(&[vec![1.0, 3.0]]).unwrap() + 1.0).abs() < 1e-15);

        let c = [0.5, -1.5];
        let ex = Function::exp_affine(c.to_vec(), 0.0);
        let phi = derivative_form(&ex, &[0.0, 0.0], 3).unwrap();
        let v = vec![0.7, 0.2];
        let cv = linalg::dot(&c, &v);
        let got = phi.eval(&[v.clone(), v.clone(), v]).unwrap();
        assert!((got - cv.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn simplex_integral_of_monomials() {
        // Two-dimensional simplex: int 1 = 1/2, int x = 1/6, int x y = 1/24.
        let one = MultiPoly::constant(2, 1.0);
        assert!((one.integrate_standard_simplex() - 0.5).abs() < 1e-16);
        let x = MultiPoly::variable(2, 0);
        assert!((x.integrate_standard_simplex() - 1.0 / 6.0).abs() < 1e-16);
        let xy = &x * &MultiPoly::variable(2, 1);
        assert!((xy.integrate_standard_simplex() - 1.0 / 24.0).abs() < 1e-16);
    }
}
