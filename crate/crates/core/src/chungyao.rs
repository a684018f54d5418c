//! The Chung-Yao interpolation operator and the identities around it.
//!
//! For a family `l_1, ..., l_d` in general position the cardinal polynomial
//! of the vertex `theta_H` is the product of the affine forms `l not in H`
//! normalized to 1 at `theta_H`. The remainder `f - L[f]` splits over the
//! lattice lines `K` as `P_K(x) [Theta_K, x | n_K, ..., n_K] f`.

use itertools::Itertools;
use rayon::prelude::*;

use crate::divdiff::{divided_difference, divided_difference_with_estimate, PointTuple};
use crate::error::{Error, Result};
use crate::function::{require_order, SmoothFunction};
use crate::geometry::{solve_vertex, ChungYaoLattice, Hyperplane, HyperplaneFamily, Point};
use crate::linalg;
use crate::poly::{taylor, MultiPoly, SymmetricForm};

/// Relative size below which `l(theta_H)` counts as zero.
const ON_PLANE_TOLERANCE: f64 = 1e-13;

fn cardinal_denominators(lattice: &ChungYaoLattice, position: usize) -> Result<Vec<(usize, f64)>> {
    let h = &lattice.subsets()[position];
    let theta = &lattice.vertices()[position];
    let scale = 1.0 + linalg::norm(theta);
    (0..lattice.family().len())
        .filter(|i| !h.contains(i))
        .map(|i| {
            let value = lattice.plane_value_at_vertex(i, position);
            if value.abs() <= ON_PLANE_TOLERANCE * scale {
                Err(Error::VertexOnHyperplane {
                    subset: h.clone(),
                    plane: i,
                    value,
                })
            } else {
                Ok((i, value))
            }
        })
        .collect()
}

fn position_of(lattice: &ChungYaoLattice, h: &[usize]) -> Result<usize> {
    lattice
        .subsets()
        .iter()
        .position(|s| s == h)
        .ok_or_else(|| Error::Consistency(format!("{h:?} is not a lattice subset")))
}

/// `l(Theta, theta_H, x)` expanded in the monomial basis.
pub fn cardinal_polynomial(lattice: &ChungYaoLattice, h: &[usize]) -> Result<MultiPoly> {
    cardinal_polynomial_at(lattice, position_of(lattice, h)?)
}

fn cardinal_polynomial_at(lattice: &ChungYaoLattice, position: usize) -> Result<MultiPoly> {
    let dim = lattice.dim();
    let mut p = MultiPoly::constant(dim, 1.0);
    for (i, denom) in cardinal_denominators(lattice, position)? {
        let plane = lattice.family().plane(i);
        let factor = MultiPoly::affine(plane.normal(), plane.offset()).scale(1.0 / denom);
        p = &p * &factor;
    }
    Ok(p.with_degree(lattice.degree()))
}

/// `l(Theta, theta_H, x)` evaluated as a product.
pub fn cardinal_value(lattice: &ChungYaoLattice, h: &[usize], x: &[f64]) -> Result<f64> {
    let position = position_of(lattice, h)?;
    Ok(cardinal_denominators(lattice, position)?
        .into_iter()
        .map(|(i, denom)| lattice.family().plane(i).eval(x) / denom)
        .product())
}

/// `L[Theta; f]` in coefficient form with the data it interpolates.
#[derive(Clone, Debug, PartialEq)]
pub struct Interpolant {
    poly: MultiPoly,
    values: Vec<f64>,
}

impl Interpolant {
    pub fn poly(&self) -> &MultiPoly {
        &self.poly
    }

    /// Data values, in lattice subset order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.poly.eval(x)
    }
}

/// Interpolates data given in lattice subset order.
pub fn interpolate_values(lattice: &ChungYaoLattice, values: &[f64]) -> Result<Interpolant> {
    if values.len() != lattice.len() {
        return Err(Error::SizeMismatch {
            points: lattice.len(),
            basis: values.len(),
        });
    }
    let mut poly = MultiPoly::zero(lattice.dim(), lattice.degree());
    for (position, &v) in values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        poly = &poly + &cardinal_polynomial_at(lattice, position)?.scale(v);
    }
    Ok(Interpolant {
        poly,
        values: values.to_vec(),
    })
}

pub fn interpolate<F: SmoothFunction + ?Sized>(lattice: &ChungYaoLattice, f: &F) -> Result<Interpolant> {
    if f.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch {
            expected: lattice.dim(),
            found: f.dim(),
        });
    }
    let values: Vec<f64> = lattice.vertices().iter().map(|v| f.eval(v)).collect();
    interpolate_values(lattice, &values)
}

/// `L[Theta; f](x)` through the factored cardinal polynomials.
pub fn interpolate_factored(lattice: &ChungYaoLattice, values: &[f64], x: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (position, &v) in values.iter().enumerate() {
        let card: f64 = cardinal_denominators(lattice, position)?
            .into_iter()
            .map(|(i, denom)| lattice.family().plane(i).eval(x) / denom)
            .product();
        acc += v * card;
    }
    Ok(acc)
}

/// `P^{[planes]}_K(x) = prod_{l in H_planes \ K} l(x) / l~(n_K)`, or the
/// homogeneous variant with `l~` in the numerator.
#[derive(Clone, Debug)]
pub struct PkPolynomial {
    pub k: Vec<usize>,
    /// Number of leading family members the product runs over.
    pub planes: usize,
    pub direction: Vec<f64>,
    pub homogeneous: bool,
    factors: Vec<(Hyperplane, f64)>,
}

impl PkPolynomial {
    pub fn new(family: &HyperplaneFamily, k: &[usize], planes: usize, homogeneous: bool) -> Result<Self> {
        Self::with_direction(family, k, planes, homogeneous, family.direction(k)?)
    }

    /// Same, with an explicitly supplied `n_K` (used for sign-flip checks).
    pub fn with_direction(
        family: &HyperplaneFamily,
        k: &[usize],
        planes: usize,
        homogeneous: bool,
        direction: Vec<f64>,
    ) -> Result<Self> {
        let factors = (0..planes.min(family.len()))
            .filter(|i| !k.contains(i))
            .map(|i| {
                let plane = family.plane(i).clone();
                let denom = plane.linear(&direction);
                if denom == 0.0 {
                    Err(Error::DegenerateSubset {
                        subset: k.iter().copied().chain([i]).sorted().collect(),
                        det: 0.0,
                    })
                } else {
                    Ok((plane, denom))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PkPolynomial {
            k: k.to_vec(),
            planes,
            direction,
            homogeneous,
            factors,
        })
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.factors
            .iter()
            .map(|(plane, denom)| {
                let num = if self.homogeneous { plane.linear(x) } else { plane.eval(x) };
                num / denom
            })
            .product()
    }

    pub fn to_poly(&self) -> MultiPoly {
        let dim = self.direction.len();
        self.factors
            .iter()
            .fold(MultiPoly::constant(dim, 1.0), |acc, (plane, denom)| {
                let offset = if self.homogeneous { 0.0 } else { plane.offset() };
                &acc * &MultiPoly::affine(plane.normal(), offset).scale(1.0 / denom)
            })
    }
}

/// Options for [`deboor_remainder`].
#[derive(Clone, Copy, Debug)]
pub struct RemainderOptions {
    /// Polynomial exactness of the quadrature rule (smooth path only).
    pub exactness: usize,
    /// Use `-n_K` instead of `n_K` everywhere.
    pub flip_direction_sign: bool,
}

impl RemainderOptions {
    pub fn for_order(order: usize) -> Self {
        RemainderOptions {
            exactness: crate::divdiff::default_exactness(order),
            flip_direction_sign: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemainderTerm {
    pub k: Vec<usize>,
    pub p_value: f64,
    pub divided_difference: f64,
    /// Quadrature error estimate of the divided difference.
    pub quadrature_error: f64,
}

impl RemainderTerm {
    pub fn product(&self) -> f64 {
        self.p_value * self.divided_difference
    }
}

/// `f(x)` split as `L[Theta; f](x) + sum_K P_K(x) [Theta_K, x | n_K^m] f`.
#[derive(Clone, Debug, PartialEq)]
pub struct RemainderDecomposition {
    pub value: f64,
    pub interpolant: f64,
    pub terms: Vec<RemainderTerm>,
}

impl RemainderDecomposition {
    pub fn correction(&self) -> f64 {
        self.terms.iter().map(RemainderTerm::product).sum()
    }

    /// `|f(x) - L(x) - sum of terms|`.
    pub fn residual(&self) -> f64 {
        (self.value - self.interpolant - self.correction()).abs()
    }

    pub fn quadrature_error(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.p_value.abs() * t.quadrature_error)
            .sum()
    }
}

pub fn deboor_remainder<F: SmoothFunction + ?Sized>(
    lattice: &ChungYaoLattice,
    f: &F,
    x: &[f64],
    options: RemainderOptions,
) -> Result<RemainderDecomposition> {
    let family = lattice.family();
    let order = lattice.degree() + 1;
    require_order(f, order)?;
    let interp = interpolate(lattice, f)?;
    let lines = lattice.line_subsets()?;
    let terms = lines
        .par_iter()
        .map(|line| {
            let direction: Vec<f64> = if options.flip_direction_sign {
                line.direction.iter().map(|v| -v).collect()
            } else {
                line.direction.clone()
            };
            let pk = PkPolynomial::with_direction(family, &line.k, family.len(), false, direction.clone())?;
            let mut points = line.points.clone();
            points.push(x.to_vec());
            let est = divided_difference_with_estimate(
                f,
                &PointTuple::new(points)?,
                &vec![direction; order],
                options.exactness,
            )?;
            Ok(RemainderTerm {
                k: line.k.clone(),
                p_value: pk.eval(x),
                divided_difference: est.value,
                quadrature_error: est.error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RemainderDecomposition {
        value: f.eval(x),
        interpolant: interpolate_factored(lattice, interp.values(), x)?,
        terms,
    })
}

/// `sum_K P~_K(v) phi(n_K^m)`, which equals `phi(v^m)`.
pub fn homogeneous_representation(
    family: &HyperplaneFamily,
    phi: &SymmetricForm,
    v: &[f64],
) -> Result<f64> {
    let order = family.degree() + 1;
    if phi.order() != order {
        return Err(Error::OrderMismatch {
            expected: order,
            found: phi.order(),
        });
    }
    let mut acc = 0.0;
    for k in (0..family.len()).combinations(family.dim() - 1) {
        let pk = PkPolynomial::new(family, &k, family.len(), true)?;
        acc += pk.eval(v) * phi.eval_diagonal(&pk.direction);
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageTerm {
    /// Stage `i`, 1-based as `N <= i <= d + 1`.
    pub stage: usize,
    pub k: Vec<usize>,
    pub p_value: f64,
    pub form_value: f64,
}

impl StageTerm {
    pub fn product(&self) -> f64 {
        self.p_value * self.form_value
    }
}

/// A target value and the staged sum that should reproduce it.
#[derive(Clone, Debug, PartialEq)]
pub struct StagedDecomposition {
    pub target: f64,
    pub terms: Vec<StageTerm>,
}

impl StagedDecomposition {
    pub fn total(&self) -> f64 {
        self.terms.iter().map(StageTerm::product).sum()
    }

    pub fn residual(&self) -> f64 {
        (self.target - self.total()).abs()
    }

    /// `max(|target|, max |term|)`, the size against which the residual
    /// is measured.
    pub fn scale(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.product().abs())
            .fold(self.target.abs(), f64::max)
    }

    pub fn relative_residual(&self) -> f64 {
        let s = self.scale();
        if s == 0.0 {
            self.residual()
        } else {
            self.residual() / s
        }
    }

    /// Sum of the terms of one stage.
    pub fn stage_total(&self, stage: usize) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.stage == stage)
            .map(StageTerm::product)
            .sum()
    }
}

/// Arguments `(x^{d-i}, theta_{K u l_i}, n_K^{i-N})`, where `x` is dropped
/// when `d - i <= 0` and `theta` is dropped at the last stage.
fn stage_arguments(
    x: &[f64],
    theta: Option<&Point>,
    direction: &[f64],
    d: usize,
    i: usize,
    n: usize,
) -> Vec<Vec<f64>> {
    let mut args = Vec::new();
    if d > i {
        args.extend(std::iter::repeat_n(x.to_vec(), d - i));
    }
    if let Some(t) = theta {
        args.push(t.clone());
    }
    args.extend(std::iter::repeat_n(direction.to_vec(), i - n));
    args
}

fn staged_terms(
    family: &HyperplaneFamily,
    x: &[f64],
    mut form: impl FnMut(&[Vec<f64>]) -> Result<f64>,
) -> Result<Vec<StageTerm>> {
    let d = family.len();
    let n = family.dim();
    let mut terms = Vec::new();
    for i in n..=d + 1 {
        for k in (0..i - 1).combinations(n - 1) {
            let pk = PkPolynomial::new(family, &k, i - 1, false)?;
            let theta = if i <= d {
                let mut h: Vec<&Hyperplane> = k.iter().map(|&j| family.plane(j)).collect();
                h.push(family.plane(i - 1));
                Some(solve_vertex(&h)?)
            } else {
                None
            };
            let args = stage_arguments(x, theta.as_ref(), &pk.direction, d, i, n);
            terms.push(StageTerm {
                stage: i,
                p_value: pk.eval(x),
                form_value: form(&args)?,
                k,
            });
        }
    }
    Ok(terms)
}

/// Staged representation of `phi(x^{d-N+1})` through the truncated
/// families `H_{i-1}`.
pub fn newton_identity(
    family: &HyperplaneFamily,
    phi: &SymmetricForm,
    x: &[f64],
) -> Result<StagedDecomposition> {
    let order = family.degree() + 1;
    if phi.order() != order {
        return Err(Error::OrderMismatch {
            expected: order,
            found: phi.order(),
        });
    }
    let terms = staged_terms(family, x, |args| phi.eval(args))?;
    Ok(StagedDecomposition {
        target: phi.eval_diagonal(x),
        terms,
    })
}

/// `f(x) - T^{d-N}_0 f(x)` against the staged sum of divided differences
/// `int_{[0, ..., 0, x]} f^{(d-N+1)}(x^{d-i}, theta_{K u l_i}, n_K^{i-N})`.
pub fn taylor_error_decomposition<F: SmoothFunction + ?Sized>(
    family: &HyperplaneFamily,
    f: &F,
    x: &[f64],
    exactness: usize,
) -> Result<StagedDecomposition> {
    let n = family.dim();
    let order = family.degree() + 1;
    require_order(f, order)?;
    let t = taylor(f, &vec![0.0; n], order - 1)?;
    let mut points = vec![vec![0.0; n]; order];
    points.push(x.to_vec());
    let tuple = PointTuple::new(points)?;
    let terms = staged_terms(family, x, |args| divided_difference(f, &tuple, args, exactness))?;
    Ok(StagedDecomposition {
        target: f.eval(x) - t.eval(x),
        terms,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TechnicalReport {
    pub k_prime: Vec<usize>,
    /// `(K, P~^{[d]}_K(n_{K' u l_{d+1}}))` for every `K` not containing `K'`.
    pub checked: Vec<(Vec<usize>, f64)>,
    /// The same values for `K ⊃ K'`, outside the claim.
    pub excluded: Vec<(Vec<usize>, f64)>,
}

impl TechnicalReport {
    pub fn max_abs(&self) -> f64 {
        self.checked.iter().fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }
}

/// For a family of `d + 1` hyperplanes and an `(N-2)`-subset `K'` of the
/// first `d`, evaluates `P~^{[d]}_K(n_{K' u l_{d+1}})` over all `K` in the
/// first `d` members.
pub fn techobserv_check(family: &HyperplaneFamily, k_prime: &[usize]) -> Result<TechnicalReport> {
    let n = family.dim();
    if n < 2 {
        return Err(Error::Configuration("needs dimension at least 2".into()));
    }
    let d = family.len() - 1;
    if d < n {
        return Err(Error::TooFewHyperplanes { count: family.len(), dim: n });
    }
    if k_prime.len() != n - 2 || k_prime.iter().any(|&i| i >= d) {
        return Err(Error::Configuration(format!(
            "K' = {k_prime:?} must be an {}-subset of the first {d} hyperplanes",
            n - 2
        )));
    }
    let mut kl = k_prime.to_vec();
    kl.push(d);
    let target = family.direction(&kl)?;
    let mut checked = Vec::new();
    let mut excluded = Vec::new();
    for k in (0..d).combinations(n - 1) {
        let value = PkPolynomial::new(family, &k, d, true)?.eval(&target);
        if k_prime.iter().all(|i| k.contains(i)) {
            excluded.push((k, value));
        } else {
            checked.push((k, value));
        }
    }
    Ok(TechnicalReport {
        k_prime: k_prime.to_vec(),
        checked,
        excluded,
    })
}

/// Runs [`techobserv_check`] for every `(N-2)`-subset of the first `d`.
pub fn techobserv_all(family: &HyperplaneFamily) -> Result<Vec<TechnicalReport>> {
    let n = family.dim();
    let d = family.len() - 1;
    (0..d)
        .combinations(n.saturating_sub(2))
        .map(|kp| techobserv_check(family, &kp))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Function;
    use crate::geometry::{random_family, RandomFamilyOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_triangle() -> HyperplaneFamily {
        HyperplaneFamily::new(vec![
            Hyperplane::new(vec![1.0, 0.0], 0.0).unwrap(),
            Hyperplane::new(vec![0.0, 1.0], 0.0).unwrap(),
            Hyperplane::new(vec![1.0, 1.0], 1.0).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn cardinal_of_origin_on_unit_triangle() {
        let lat = unit_triangle().lattice().unwrap();
        let l = cardinal_polynomial(&lat, &[0, 1]).unwrap();
        let expected = MultiPoly::affine(&[-1.0, -1.0], -1.0);
        assert!(l.max_coeff_distance(&expected) < 1e-15);
        for (h, v) in lat.iter() {
            let want = if h == &vec![0, 1] { 1.0 } else { 0.0 };
            assert!((l.eval(v) - want).abs() < 1e-15);
            assert!((cardinal_value(&lat, &[0, 1], v).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn reproduces_linear_polynomial() {
        let lat = unit_triangle().lattice().unwrap();
        let p = MultiPoly::affine(&[2.0, -1.0], -1.0);
        let li = interpolate(&lat, &Function::Polynomial(p.clone())).unwrap();
        assert!(li.poly().max_coeff_distance(&p) < 1e-12);
    }

    #[test]
    fn degenerate_triangle_interpolant_formula() {
        let t: f64 = 0.1;
        let eps = 1.0;
        let pts = vec![vec![0.0, 0.0], vec![t, t.powf(2.0 + eps)], vec![2.0 * t, 0.0]];
        let lat = HyperplaneFamily::simplex(&pts).unwrap().lattice().unwrap();
        let li = interpolate(&lat, &Function::monomial(vec![2, 0])).unwrap();
        let c = li.poly().coefficients();
        assert!(c[0].abs() < 1e-12);
        assert!((c[1] - 0.2).abs() < 1e-12);
        assert!((c[2] + 10.0).abs() < 1e-9);
    }

    #[test]
    fn remainder_vanishes_for_low_degree_polynomials() {
        let lat = unit_triangle().lattice().unwrap();
        let f = Function::Polynomial(MultiPoly::affine(&[0.3, 0.7], 2.0));
        let dec = deboor_remainder(&lat, &f, &[0.4, 0.9], RemainderOptions::for_order(1)).unwrap();
        assert!(dec.terms.iter().all(|t| t.divided_difference == 0.0));
        assert!(dec.residual() < 1e-14);
    }

    #[test]
    fn remainder_for_exp_on_unit_triangle() {
        let lat = unit_triangle().lattice().unwrap();
        let f = Function::exp_affine(vec![1.0, 1.0], 0.0);
        let dec = deboor_remainder(&lat, &f, &[0.3, 0.2], RemainderOptions::for_order(1)).unwrap();
        assert!(dec.residual() <= 1e-8, "{}", dec.residual());
    }

    #[test]
    fn sign_flip_leaves_products_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let fam = random_family(2, 4, &mut rng, &RandomFamilyOptions::default()).unwrap();
        let lat = fam.lattice().unwrap();
        let f = Function::exp_affine(vec![0.3, -0.2], 0.0);
        let x = [0.1, 0.2];
        let mut opts = RemainderOptions::for_order(3);
        let a = deboor_remainder(&lat, &f, &x, opts).unwrap();
        opts.flip_direction_sign = true;
        let b = deboor_remainder(&lat, &f, &x, opts).unwrap();
        for (s, t) in a.terms.iter().zip(&b.terms) {
            assert!((s.product() - t.product()).abs() <= 1e-12 * (1.0 + s.product().abs()));
        }
    }

    #[test]
    fn newton_identity_d_equals_n() {
        let fam = unit_triangle().truncated(2).unwrap();
        let phi = SymmetricForm::new(MultiPoly::affine(&[0.7, -0.4], 0.0), 1).unwrap();
        let x = [1.3, -0.6];
        let dec = newton_identity(&fam, &phi, &x).unwrap();
        assert!(dec.residual() < 1e-14);
        // x = 0 and phi = x1^m: left side is 0.
        let fam = unit_triangle();
        let phi = SymmetricForm::new(MultiPoly::monomial(crate::MultiIndex::new(vec![2, 0]), 1.0), 2).unwrap();
        let dec = newton_identity(&fam, &phi, &[0.0, 0.0]).unwrap();
        assert_eq!(dec.target, 0.0);
        assert!(dec.residual() < 1e-14);
    }

    #[test]
    fn techobserv_vacuous_in_the_plane() {
        let reports = techobserv_all(&unit_triangle()).unwrap();
        assert_eq!(reports.len(), 1);
        assert!(reports[0].checked.is_empty());
        assert_eq!(reports[0].excluded.len(), 2);
    }

    #[test]
    fn order_mismatch_for_forms() {
        let fam = unit_triangle();
        let phi = SymmetricForm::new(MultiPoly::affine(&[1.0, 0.0], 0.0), 1).unwrap();
        assert!(matches!(
            homogeneous_representation(&fam, &phi, &[1.0, 0.0]),
            Err(Error::OrderMismatch { .. })
        ));
    }
}
