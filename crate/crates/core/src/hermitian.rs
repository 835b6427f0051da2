//! Mixed complex Hessians and relative eigenvalues.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::spectral::{RealHessian, Spectral};

pub type Hermitian = DMatrix<Complex64>;

/// Per-node Hermitian matrices `d^2 f / dz_j dz̄_k`.
#[derive(Clone, Debug)]
pub struct ComplexHessian {
    n: usize,
    entries: Vec<Hermitian>,
}

impl ComplexHessian {
    pub fn from_real(real: &RealHessian) -> Self {
        let m = real.real_dim();
        let n = m / 2;
        let len = real.get(0, 0).len();
        let mut entries = Vec::with_capacity(len);
        for node in 0..len {
            entries.push(complex_from_real(n, |a, b| real.at(node, a, b)));
        }
        Self { n, entries }
    }

    pub fn of(field: &ScalarField, spectral: &Spectral) -> Self {
        Self::from_real(&spectral.real_hessian(field.values()))
    }

    pub fn complex_dim(&self) -> usize {
        self.n
    }

    pub fn at(&self, node: usize) -> &Hermitian {
        &self.entries[node]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `I + H` at every node.
    pub fn shifted_identity(&self) -> Vec<Hermitian> {
        self.entries
            .iter()
            .map(|h| h + Hermitian::identity(self.n, self.n))
            .collect()
    }
}

/// Builds `d^2/dz_j dz̄_k` from real second derivatives `d2(a, b)` where
/// axis `2j` is `x_j` and axis `2j + 1` is `y_j`.
pub fn complex_from_real(n: usize, d2: impl Fn(usize, usize) -> f64) -> Hermitian {
    Hermitian::from_fn(n, n, |j, k| {
        let (a, b, c, d) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
        Complex64::new(0.25 * (d2(a, c) + d2(b, d)), 0.25 * (d2(a, d) - d2(b, c)))
    })
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_deviation(h: &Hermitian) -> f64 {
    let mut dev: f64 = 0.0;
    for j in 0..h.nrows() {
        for k in 0..h.ncols() {
            dev = dev.max((h[(j, k)] - h[(k, j)].conj()).norm());
        }
    }
    dev
}

fn check_hermitian(h: &Hermitian) -> Result<()> {
    let scale = h.iter().fold(1.0f64, |m, c| m.max(c.norm()));
    let tolerance = 1e-10 * scale;
    let deviation = hermitian_deviation(h);
    if deviation > tolerance {
        return Err(Error::NotHermitian { deviation, tolerance });
    }
    Ok(())
}

/// Ascending eigenvalues and unitary eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(h: &Hermitian) -> Result<(Vec<f64>, Hermitian)> {
    check_hermitian(h)?;
    let n = h.nrows();
    match n {
        1 => Ok((vec![h[(0, 0)].re], Hermitian::identity(1, 1))),
        2 => Ok(eigen2(h)),
        _ => {
            let eig = SymmetricEigen::new(h.clone());
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let vectors = Hermitian::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
            Ok((values, vectors))
        }
    }
}

fn eigen2(h: &Hermitian) -> (Vec<f64>, Hermitian) {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)];
    let half_gap = 0.5 * (a - d);
    let r = half_gap.hypot(b.norm());
    let mid = 0.5 * (a + d);
    let (lo, hi) = (mid - r, mid + r);
    if b.norm() <= 1e-300 {
        let vectors = if a <= d {
            Hermitian::identity(2, 2)
        } else {
            Hermitian::from_row_slice(2, 2, &[0.0.into(), 1.0.into(), 1.0.into(), 0.0.into()])
        };
        return (vec![lo, hi], vectors);
    }
    // Eigenvector for eigenvalue t: (b, t - a), normalised; pick the
    // better-conditioned form for each root.
    let vec_for = |t: f64| -> [Complex64; 2] {
        let v1 = [b, Complex64::new(t - a, 0.0)];
        let v2 = [Complex64::new(t - d, 0.0), b.conj()];
        let n1 = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
        let n2 = (v2[0].norm_sqr() + v2[1].norm_sqr()).sqrt();
        if n1 >= n2 {
            [v1[0] / n1, v1[1] / n1]
        } else {
            [v2[0] / n2, v2[1] / n2]
        }
    };
    let u = vec_for(lo);
    let w = vec_for(hi);
    (vec![lo, hi], Hermitian::from_row_slice(2, 2, &[u[0], w[0], u[1], w[1]]))
}

/// Ascending eigenvalues of `h` relative to a positive background `b`,
/// i.e. the eigenvalues of `b^{-1} h`.
pub fn relative_eigenvalues(h: &Hermitian, background: &Hermitian) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    check_hermitian(background)?;
    let n = h.nrows();
    if background.nrows() != n {
        return Err(Error::InvalidArgument("background dimension mismatch".into()));
    }
    if *background == Hermitian::identity(n, n) {
        return hermitian_eigen(h).map(|(v, _)| v);
    }
    let chol = background
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("background form is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular background".into()))?;
    let reduced = &linv * h * linv.adjoint();
    let sym = (&reduced + reduced.adjoint()) * Complex64::new(0.5, 0.0);
    hermitian_eigen(&sym).map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_eigenpairs_satisfy_definition() {
        let h = Hermitian::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.3, 0.0),
                Complex64::new(0.4, -0.7),
                Complex64::new(0.4, 0.7),
                Complex64::new(-0.2, 0.0),
            ],
        );
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        assert!(vals[0] <= vals[1]);
        for c in 0..2 {
            let v = vecs.column(c);
            let r = &h * v - v * Complex64::new(vals[c], 0.0);
            assert!(r.norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let h = Hermitian::from_row_slice(
            2,
            2,
            &[1.0.into(), Complex64::new(0.5, 0.1), Complex64::new(0.5, 0.1), 2.0.into()],
        );
        assert!(matches!(hermitian_eigen(&h), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn relative_to_scaled_background_divides() {
        let h = Hermitian::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0.into(), 6.0.into()]));
        let b = Hermitian::identity(2, 2) * Complex64::new(2.0, 0.0);
        let v = relative_eigenvalues(&h, &b).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 3.0).abs() < 1e-14);
    }
}
