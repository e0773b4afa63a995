//! Small dense symmetric-matrix helpers on top of faer.

use faer::{Mat, Side};
use ndarray::{Array1, Array2};

use crate::spectral::Image;

fn to_faer(a: &Array2<f64>) -> Mat<f64> {
    let (r, c) = a.dim();
    Mat::from_fn(r, c, |i, j| 0.5 * (a[[i, j]] + a[[j, i]]))
}

/// Eigen-decomposition of a symmetric matrix (symmetrized first),
/// eigenvalues ascending.
pub fn sym_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    let eig = to_faer(a).selfadjoint_eigendecomposition(Side::Lower);
    let s = eig.s().column_vector();
    let u = eig.u();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s.read(i).total_cmp(&s.read(j)));
    let values = Array1::from_iter(order.iter().map(|&i| s.read(i)));
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| u.read(r, order[c]));
    (values, vectors)
}

pub fn min_eigenvalue(a: &Array2<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    to_faer(a)
        .selfadjoint_eigenvalues(Side::Lower)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m.read(i, j))
}

fn faer_of(a: &Array2<f64>) -> Mat<f64> {
    let (r, c) = a.dim();
    Mat::from_fn(r, c, |i, j| a[[i, j]])
}

/// Dense product `a·b`.
pub fn matmul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    from_faer((faer_of(a) * faer_of(b)).as_ref())
}

/// `aᵀ·a / scale`, symmetrized exactly.
pub fn gram(a: &Array2<f64>, scale: f64) -> Array2<f64> {
    let f = faer_of(a);
    let g = from_faer((f.transpose() * &f).as_ref()) / scale;
    (&g + &g.t()) * 0.5
}

/// `V·diag(f(λ))·Vᵀ`.
pub fn spectral_fn(values: &Array1<f64>, vectors: &Array2<f64>, f: impl Fn(f64) -> f64) -> Array2<f64> {
    let scaled = vectors * &values.mapv(f);
    matmul(&scaled, &vectors.t().to_owned())
}

pub fn trace(a: &Array2<f64>) -> f64 {
    a.diag().sum()
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Packs equally shaped maps as the columns of a `pixels × K` matrix.
pub fn stack_columns(maps: &[&Image]) -> Array2<f64> {
    let p = maps.first().map_or(0, |m| m.len());
    let mut y = Array2::zeros((p, maps.len()));
    for (k, m) in maps.iter().enumerate() {
        for (dst, &src) in y.column_mut(k).iter_mut().zip(m.iter()) {
            *dst = src;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigen_reconstructs_matrix() {
        let a = array![[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 1.0]];
        let (w, v) = sym_eigen(&a);
        assert!(w[0] <= w[1] && w[1] <= w[2]);
        let back = spectral_fn(&w, &v, |x| x);
        assert!(frobenius(&(&back - &a)) < 1e-12);
        let root = spectral_fn(&w, &v, f64::sqrt);
        assert!(frobenius(&(root.dot(&root) - &a)) < 1e-12);
    }

    #[test]
    fn min_eigenvalue_of_diagonal() {
        assert_eq!(min_eigenvalue(&array![[2.0, 0.0], [0.0, -1.0]]), -1.0);
    }
}
