//! Small dense linear algebra on row-major `Vec<Vec<f64>>` matrices.
//!
//! Everything here works on N x N systems with N at most a handful, so plain
//! partial-pivoting elimination is all that is needed.

pub type Matrix = Vec<Vec<f64>>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Dot product computed as if in twice the working precision.
pub fn dot2(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut err = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let (p, pe) = two_prod(x, y);
        let (s, se) = two_sum(sum, p);
        sum = s;
        err += pe + se;
    }
    sum + err
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// LU factorization with partial pivoting. Returns the packed factors, the
/// row permutation and the permutation sign, or `None` for an exactly
/// singular matrix.
fn lu(mut a: Matrix) -> Option<(Matrix, Vec<usize>, f64)> {
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return None;
        }
        if pivot != col {
            a.swap(pivot, col);
            perm.swap(pivot, col);
            sign = -sign;
        }
        for row in col + 1..n {
            let (upper, lower) = a.split_at_mut(row);
            let (pivot_row, target) = (&upper[col], &mut lower[0]);
            let factor = target[col] / pivot_row[col];
            target[col] = factor;
            for (t, p) in target[col + 1..].iter_mut().zip(&pivot_row[col + 1..]) {
                *t -= factor * p;
            }
        }
    }
    Some((a, perm, sign))
}

pub fn determinant(a: &[Vec<f64>]) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    match lu(a.to_vec()) {
        None => 0.0,
        Some((f, _, sign)) => sign * (0..f.len()).map(|i| f[i][i]).product::<f64>(),
    }
}

/// Solves `a x = b`. Returns `None` when `a` is exactly singular.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let (f, perm, _) = lu(a.to_vec())?;
    let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for k in 0..i {
            y[i] -= f[i][k] * y[k];
        }
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= f[i][k] * y[k];
        }
        y[i] /= f[i][i];
    }
    Some(y)
}

pub fn transpose(a: &[Vec<f64>]) -> Matrix {
    let n = a.len();
    let m = if n == 0 { 0 } else { a[0].len() };
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

pub fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, v)).collect()
}

/// Inverse of a square matrix, or `None` if singular.
pub fn inverse(a: &[Vec<f64>]) -> Option<Matrix> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve(a, &e)?);
    }
    Some(transpose(&cols))
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_of_permutation_and_triangle() {
        let p = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(determinant(&p), -1.0);
        let t = vec![
            vec![2.0, 1.0, 3.0],
            vec![0.0, 4.0, 5.0],
            vec![0.0, 0.0, 0.5],
        ];
        assert!((determinant(&t) - 4.0).abs() < 1e-14);
        assert_eq!(determinant(&[vec![1.0, 2.0], vec![2.0, 4.0]]), 0.0);
    }

    #[test]
    fn solve_and_inverse() {
        let a = vec![vec![3.0, 1.0], vec![1.0, 2.0]];
        let x = solve(&a, &[9.0, 8.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14 && (x[1] - 3.0).abs() < 1e-14);
        let inv = inverse(&a).unwrap();
        let id = mat_vec(&inv, &[3.0, 1.0]);
        assert!((id[0] - 1.0).abs() < 1e-14 && id[1].abs() < 1e-14);
    }

    #[test]
    fn slope_of_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        assert!((fit_slope(&xs, &ys).unwrap() - 2.5).abs() < 1e-14);
        assert!(fit_slope(&[1.0], &[1.0]).is_none());
    }
}
