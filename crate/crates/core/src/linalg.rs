//! Small dense complex matrices.
//!
//! Everything in this crate lives in a 2- or 4-dimensional Hilbert space, so
//! matrices are fixed-size arrays and the Hermitian eigensolver is a cyclic
//! Jacobi sweep, which is accurate to round-off at these sizes.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

pub type C64 = Complex<f64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix<const N: usize>(pub [[C64; N]; N]);

pub type Mat2 = Matrix<2>;
pub type Mat4 = Matrix<4>;

impl<const N: usize> Matrix<N> {
    pub fn zeros() -> Self {
        Matrix([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = ONE;
        }
        m
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[C64; N], v: &[C64; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = u[i] * v[j].conj();
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z *= factor);
        m
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let mut acc = ZERO;
        for i in 0..N {
            for k in 0..N {
                acc += self.0[i][k] * other.0[k][i];
            }
        }
        acc
    }

    /// `U * self * U^dagger`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        *u * *self * u.adjoint()
    }

    /// Largest absolute deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..N {
            for j in i..N {
                worst = worst.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Eigen-decomposition of a Hermitian matrix.
    ///
    /// Returns eigenvalues in ascending order and the matching eigenvectors as
    /// the columns of the second matrix. Only the upper triangle is trusted to
    /// be consistent; callers are expected to pass Hermitian input.
    pub fn hermitian_eigen(&self) -> ([f64; N], Self) {
        let mut a = *self;
        // Force an exactly Hermitian working copy.
        for i in 0..N {
            a.0[i][i] = C64::new(a.0[i][i].re, 0.0);
            for j in (i + 1)..N {
                let avg = (a.0[i][j] + a.0[j][i].conj()) * 0.5;
                a.0[i][j] = avg;
                a.0[j][i] = avg.conj();
            }
        }
        let mut vecs = Self::identity();
        let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

        for _sweep in 0..64 {
            let off: f64 = (0..N)
                .flat_map(|i| ((i + 1)..N).map(move |j| (i, j)))
                .map(|(i, j)| a.0[i][j].norm_sqr())
                .sum();
            if off.sqrt() <= 1e-17 * scale {
                break;
            }
            for p in 0..N {
                for q in (p + 1)..N {
                    let apq = a.0[p][q];
                    let mag = apq.norm();
                    if mag <= 1e-300 {
                        continue;
                    }
                    let phase = apq / mag;
                    let app = a.0[p][p].re;
                    let aqq = a.0[q][q].re;
                    let zeta = (aqq - app) / (2.0 * mag);
                    let t = if zeta >= 0.0 {
                        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                    } else {
                        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // Unitary acting on the (p, q) plane: diag(1, conj(phase)) * [[c, s], [-s, c]].
                    let upp = C64::new(c, 0.0);
                    let upq = C64::new(s, 0.0);
                    let uqp = -phase.conj() * s;
                    let uqq = phase.conj() * c;

                    // a <- a * U
                    for k in 0..N {
                        let akp = a.0[k][p];
                        let akq = a.0[k][q];
                        a.0[k][p] = akp * upp + akq * uqp;
                        a.0[k][q] = akp * upq + akq * uqq;
                    }
                    // a <- U^dagger * a
                    for k in 0..N {
                        let apk = a.0[p][k];
                        let aqk = a.0[q][k];
                        a.0[p][k] = upp.conj() * apk + uqp.conj() * aqk;
                        a.0[q][k] = upq.conj() * apk + uqq.conj() * aqk;
                    }
                    a.0[p][q] = ZERO;
                    a.0[q][p] = ZERO;
                    a.0[p][p] = C64::new(a.0[p][p].re, 0.0);
                    a.0[q][q] = C64::new(a.0[q][q].re, 0.0);
                    for k in 0..N {
                        let vkp = vecs.0[k][p];
                        let vkq = vecs.0[k][q];
                        vecs.0[k][p] = vkp * upp + vkq * uqp;
                        vecs.0[k][q] = vkp * upq + vkq * uqq;
                    }
                }
            }
        }

        let mut order: [usize; N] = core::array::from_fn(|i| i);
        order.sort_by(|&x, &y| a.0[x][x].re.total_cmp(&a.0[y][y].re));
        let values = core::array::from_fn(|i| a.0[order[i]][order[i]].re);
        let mut sorted = Self::zeros();
        for (col, &src) in order.iter().enumerate() {
            for row in 0..N {
                sorted.0[row][col] = vecs.0[row][src];
            }
        }
        (values, sorted)
    }

    /// Rebuilds `V diag(f(lambda)) V^dagger` from an eigen-decomposition.
    pub fn from_spectrum(values: &[f64; N], vectors: &Self) -> Self {
        let mut m = Self::zeros();
        for (k, &lambda) in values.iter().enumerate() {
            if lambda == 0.0 {
                continue;
            }
            for i in 0..N {
                for j in 0..N {
                    m.0[i][j] += vectors.0[i][k] * vectors.0[j][k].conj() * lambda;
                }
            }
        }
        m
    }

    /// Cholesky factor `L` with `self = L L^dagger` for a Hermitian positive
    /// definite matrix.
    pub fn cholesky(&self) -> Result<Self> {
        let mut l = Self::zeros();
        for j in 0..N {
            let mut diag = self.0[j][j].re;
            for k in 0..j {
                diag -= l.0[j][k].norm_sqr();
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(Error::Singular("matrix is not positive definite"));
            }
            let djj = diag.sqrt();
            l.0[j][j] = C64::new(djj, 0.0);
            for i in (j + 1)..N {
                let mut acc = self.0[i][j];
                for k in 0..j {
                    acc -= l.0[i][k] * l.0[j][k].conj();
                }
                l.0[i][j] = acc / djj;
            }
        }
        Ok(l)
    }
}

impl<const N: usize> Index<(usize, usize)> for Matrix<N> {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Matrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Add for Matrix<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Matrix<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let aik = self.0[i][k];
                for j in 0..N {
                    m.0[i][j] += aik * rhs.0[k][j];
                }
            }
        }
        m
    }
}

/// Tensor product `a ⊗ b` in the (HH, HV, VH, VV) ordering.
pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m.0[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    m
}

/// Solves the real least-squares problem `min |A x - y|` through the normal
/// equations. `A` is given row by row; it may be square.
pub fn solve_least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if cols == 0 || rows.len() < cols || rows.len() != rhs.len() {
        return Err(Error::Singular("design matrix has fewer rows than unknowns"));
    }
    let mut normal = vec![vec![0.0; cols]; cols];
    let mut target = vec![0.0; cols];
    for (row, &y) in rows.iter().zip(rhs) {
        for i in 0..cols {
            target[i] += row[i] * y;
            for j in 0..cols {
                normal[i][j] += row[i] * row[j];
            }
        }
    }
    solve_dense(normal, target)
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() <= 1e-12 * scale {
            return Err(Error::Singular("pivot vanished during elimination"));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = ((row + 1)..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}
