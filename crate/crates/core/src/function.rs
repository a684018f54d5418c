//! Functions with closed-form directional derivatives.

use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::{factorial, MultiPoly};

/// A function on R^N that can report `D_{v_1} ... D_{v_k} f(x)`.
pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// `D_{v_1} ... D_{v_k} f(x)`; with no directions this is `f(x)`.
    fn derivative(&self, x: &[f64], directions: &[Vec<f64>]) -> Result<f64>;

    /// Highest available derivative order, `None` for unlimited.
    fn max_order(&self) -> Option<usize> {
        None
    }

    /// The polynomial itself, for callers with an exact path.
    fn as_polynomial(&self) -> Option<&MultiPoly> {
        None
    }

    /// An upper bound on `max_{|a| <= radius} ||f^{(order)}(a)||` (norm of
    /// the symmetric multilinear form), when one is known in closed form.
    fn derivative_norm_bound(&self, _order: usize, _radius: f64) -> Option<f64> {
        None
    }
}

/// Checks a requested order against `f.max_order()`.
pub fn require_order<F: SmoothFunction + ?Sized>(f: &F, order: usize) -> Result<()> {
    match f.max_order() {
        Some(avail) if avail < order => Err(Error::Capability {
            requested: order,
            available: avail,
        }),
        _ => Ok(()),
    }
}

/// Built-in catalog: polynomials, `exp`/`sin`/`cos` of affine forms, and
/// sums, scalings and products of those.
#[derive(Clone, Debug, PartialEq)]
pub enum Function {
    Polynomial(MultiPoly),
    /// `exp(<c, x> + b)`.
    ExpAffine { coeffs: Vec<f64>, constant: f64 },
    /// `sin(<c, x> + b)`.
    SinAffine { coeffs: Vec<f64>, constant: f64 },
    /// `cos(<c, x> + b)`.
    CosAffine { coeffs: Vec<f64>, constant: f64 },
    Scaled(f64, Box<Function>),
    Sum(Box<Function>, Box<Function>),
    Product(Box<Function>, Box<Function>),
}

impl Function {
    pub fn exp_affine(coeffs: Vec<f64>, constant: f64) -> Self {
        Function::ExpAffine { coeffs, constant }
    }

    pub fn sin_affine(coeffs: Vec<f64>, constant: f64) -> Self {
        Function::SinAffine { coeffs, constant }
    }

    pub fn cos_affine(coeffs: Vec<f64>, constant: f64) -> Self {
        Function::CosAffine { coeffs, constant }
    }

    /// `x^alpha`.
    pub fn monomial(exponents: Vec<u32>) -> Self {
        Function::Polynomial(MultiPoly::monomial(
            crate::poly::MultiIndex::new(exponents),
            1.0,
        ))
    }

    pub fn product(a: Function, b: Function) -> Self {
        Function::Product(Box::new(a), Box::new(b))
    }

    pub fn sum(a: Function, b: Function) -> Self {
        Function::Sum(Box::new(a), Box::new(b))
    }
}

fn directional_factor(coeffs: &[f64], directions: &[Vec<f64>]) -> f64 {
    directions.iter().map(|v| linalg::dot(coeffs, v)).product()
}

/// `sin(z + k pi/2)`, the k-th derivative of sin at z.
fn sin_shift(z: f64, k: usize) -> f64 {
    match k % 4 {
        0 => z.sin(),
        1 => z.cos(),
        2 => -z.sin(),
        _ => -z.cos(),
    }
}

impl SmoothFunction for Function {
    fn dim(&self) -> usize {
        match self {
            Function::Polynomial(p) => p.dim(),
            Function::ExpAffine { coeffs, .. }
            | Function::SinAffine { coeffs, .. }
            | Function::CosAffine { coeffs, .. } => coeffs.len(),
            Function::Scaled(_, f) => f.dim(),
            Function::Sum(a, _) | Function::Product(a, _) => a.dim(),
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Function::Polynomial(p) => p.eval(x),
            Function::ExpAffine { coeffs, constant } => (linalg::dot(coeffs, x) + constant).exp(),
            Function::SinAffine { coeffs, constant } => (linalg::dot(coeffs, x) + constant).sin(),
            Function::CosAffine { coeffs, constant } => (linalg::dot(coeffs, x) + constant).cos(),
            Function::Scaled(a, f) => a * f.eval(x),
            Function::Sum(a, b) => a.eval(x) + b.eval(x),
            Function::Product(a, b) => a.eval(x) * b.eval(x),
        }
    }

    fn derivative(&self, x: &[f64], directions: &[Vec<f64>]) -> Result<f64> {
        let k = directions.len();
        Ok(match self {
            Function::Polynomial(p) => {
                if k > p.degree_bound() {
                    0.0
                } else {
                    p.directional_derivatives(directions).eval(x)
                }
            }
            Function::ExpAffine { coeffs, constant } => {
                directional_factor(coeffs, directions) * (linalg::dot(coeffs, x) + constant).exp()
            }
            Function::SinAffine { coeffs, constant } => {
                directional_factor(coeffs, directions) * sin_shift(linalg::dot(coeffs, x) + constant, k)
            }
            Function::CosAffine { coeffs, constant } => {
                directional_factor(coeffs, directions)
                    * sin_shift(linalg::dot(coeffs, x) + constant, k + 1)
            }
            Function::Scaled(a, f) => a * f.derivative(x, directions)?,
            Function::Sum(a, b) => a.derivative(x, directions)? + b.derivative(x, directions)?,
            Function::Product(a, b) => {
                // Leibniz over all splittings of the direction list.
                let mut acc = 0.0;
                for mask in 0u64..(1u64 << k) {
                    let (left, right): (Vec<_>, Vec<_>) = directions
                        .iter()
                        .enumerate()
                        .partition(|(i, _)| mask & (1 << i) != 0);
                    let left: Vec<Vec<f64>> = left.into_iter().map(|(_, v)| v.clone()).collect();
                    let right: Vec<Vec<f64>> = right.into_iter().map(|(_, v)| v.clone()).collect();
                    acc += a.derivative(x, &left)? * b.derivative(x, &right)?;
                }
                acc
            }
        })
    }

    fn as_polynomial(&self) -> Option<&MultiPoly> {
        match self {
            Function::Polynomial(p) => Some(p),
            _ => None,
        }
    }

    fn derivative_norm_bound(&self, order: usize, radius: f64) -> Option<f64> {
        match self {
            Function::Polynomial(p) => {
                // |D_v^k x^alpha (a)| <= |alpha|!/(|alpha|-k)! R^{|alpha|-k} for |v| <= 1, |a_i| <= R.
                let bound = p
                    .terms()
                    .filter(|(a, c)| *c != 0.0 && a.degree() >= order)
                    .map(|(a, c)| {
                        let n = a.degree();
                        c.abs() * factorial(n) / factorial(n - order) * radius.powi((n - order) as i32)
                    })
                    .sum();
                Some(bound)
            }
            Function::ExpAffine { coeffs, constant } => {
                let c = linalg::norm(coeffs);
                Some(c.powi(order as i32) * (c * radius + constant).exp())
            }
            Function::SinAffine { coeffs, .. } | Function::CosAffine { coeffs, .. } => {
                Some(linalg::norm(coeffs).powi(order as i32))
            }
            Function::Scaled(a, f) => f.derivative_norm_bound(order, radius).map(|b| a.abs() * b),
            Function::Sum(a, b) => Some(
                a.derivative_norm_bound(order, radius)? + b.derivative_norm_bound(order, radius)?,
            ),
            Function::Product(a, b) => {
                let mut acc = 0.0;
                for j in 0..=order {
                    acc += crate::poly::binomial(order, j) as f64
                        * a.derivative_norm_bound(j, radius)?
                        * b.derivative_norm_bound(order - j, radius)?;
                }
                Some(acc)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite difference of `D_v f` along direction `v`.
    fn fd(f: &Function, x: &[f64], v: &[f64]) -> f64 {
        let h = 1e-5;
        let xp: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
        (f.eval(&xp) - f.eval(&xm)) / (2.0 * h)
    }

    #[test]
    fn first_derivatives_match_finite_differences() {
        let fs = [
            Function::exp_affine(vec![0.4, -0.3], 0.1),
            Function::sin_affine(vec![1.2, 0.5], -0.2),
            Function::cos_affine(vec![-0.7, 0.9], 0.3),
            Function::product(
                Function::exp_affine(vec![1.0, 0.0], 0.0),
                Function::sin_affine(vec![0.0, 2.0], 0.0),
            ),
            Function::sum(Function::monomial(vec![2, 1]), Function::Scaled(3.0, Box::new(Function::monomial(vec![0, 3])))),
        ];
        let x = [0.3, -0.4];
        let v = vec![0.6, 0.8];
        for f in &fs {
            let exact = f.derivative(&x, std::slice::from_ref(&v)).unwrap();
            assert!((exact - fd(f, &x, &v)).abs() < 1e-8, "{f:?}");
        }
    }

    #[test]
    fn higher_order_sin_cycle() {
        let f = Function::sin_affine(vec![1.0], 0.0);
        let dirs = vec![vec![1.0]; 4];
        assert!((f.derivative(&[0.7], &dirs).unwrap() - 0.7f64.sin()).abs() < 1e-15);
        let g = Function::cos_affine(vec![2.0], 0.0);
        let d2 = g.derivative(&[0.3], &[vec![1.0], vec![1.0]]).unwrap();
        assert!((d2 + 4.0 * 0.6f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn product_second_derivative() {
        // (x^2)(x) = x^3, second derivative 6x.
        let f = Function::product(Function::monomial(vec![2]), Function::monomial(vec![1]));
        let d = f.derivative(&[0.5], &[vec![1.0], vec![1.0]]).unwrap();
        assert!((d - 3.0).abs() < 1e-14);
    }

    #[test]
    fn norm_bounds_dominate_samples() {
        let f = Function::exp_affine(vec![1.0, 1.0], 0.0);
        let b = f.derivative_norm_bound(2, 0.5).unwrap();
        for k in 0..64 {
            let th = k as f64 * std::f64::consts::TAU / 64.0;
            let v = vec![th.cos(), th.sin()];
            let a = [0.5 * th.cos(), 0.5 * th.sin()];
            assert!(f.derivative(&a, &[v.clone(), v]).unwrap().abs() <= b + 1e-12);
        }
    }
}
