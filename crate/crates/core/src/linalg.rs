//! Small dense solvers for the local interpolation systems.
//!
//! Systems are tried with a Cholesky factorization first and fall back to LU
//! with partial pivoting when the matrix is not numerically positive
//! definite. A couple of iterative-refinement steps follow the solve, and the
//! 1-norm condition number is estimated from the factors.

use crate::scalar::Real;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm_inf<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// `b − A x` with compensated products and sums, accurate to about twice the
/// working precision.
fn accurate_residual<T: Real>(a: &DenseMatrix<T>, x: &[T], b: &[T]) -> Vec<T> {
    (0..a.dim())
        .map(|i| {
            let (mut s, mut c) = (b[i], T::zero());
            for (&aij, &xj) in a.row(i).iter().zip(x) {
                let p = -aij * xj;
                let ep = (-aij).mul_add(xj, -p);
                let t = s + p;
                let z = t - s;
                c += ((s - (t - z)) + (p - z)) + ep;
                s = t;
            }
            s + c
        })
        .collect()
}

/// Which factorization produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factorization {
    Cholesky,
    PivotedLu,
}

/// A factorized square matrix.
#[derive(Debug, Clone)]
pub enum Factors<T> {
    /// Lower-triangular `L` with `A = L Lᵀ`, row-major.
    Cholesky(DenseMatrix<T>),
    /// Packed unit-lower `L` and upper `U` with `P A = L U`; `perm[i]` is the
    /// original row stored at row `i`.
    Lu { lu: DenseMatrix<T>, perm: Vec<usize> },
}

impl<T: Real> Factors<T> {
    /// Cholesky factorization; `None` unless every pivot is positive and finite.
    pub fn cholesky(a: &DenseMatrix<T>) -> Option<Self> {
        let n = a.dim();
        let mut l = DenseMatrix::zeros(n);
        for j in 0..n {
            let lj = &l.data[j * n..j * n + j];
            let diag = a.get(j, j) - dot(lj, lj);
            if !(diag > T::zero()) || !diag.is_finite() {
                return None;
            }
            let ljj = diag.sqrt();
            l.set(j, j, ljj);
            for i in j + 1..n {
                let s = a.get(i, j) - dot(&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
                l.set(i, j, s / ljj);
            }
        }
        Some(Factors::Cholesky(l))
    }

    /// LU with partial pivoting; `None` on an exactly zero or non-finite pivot.
    pub fn pivoted_lu(a: &DenseMatrix<T>) -> Option<Self> {
        let n = a.dim();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu.get(i, k).abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > T::zero()) || !pivot.is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let ukk = lu.get(k, k);
            for i in k + 1..n {
                let m = lu.get(i, k) / ukk;
                lu.set(i, k, m);
                if m != T::zero() {
                    for j in k + 1..n {
                        let v = lu.get(i, j) - m * lu.get(k, j);
                        lu.set(i, j, v);
                    }
                }
            }
        }
        Some(Factors::Lu { lu, perm })
    }

    pub fn kind(&self) -> Factorization {
        match self {
            Factors::Cholesky(_) => Factorization::Cholesky,
            Factors::Lu { .. } => Factorization::PivotedLu,
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        match self {
            Factors::Cholesky(l) => {
                let y = forward(l, b, false);
                backward_transposed(l, &y)
            }
            Factors::Lu { lu, perm } => {
                let pb: Vec<T> = perm.iter().map(|&i| b[i]).collect();
                let y = forward(lu, &pb, true);
                backward(lu, &y)
            }
        }
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transposed(&self, b: &[T]) -> Vec<T> {
        match self {
            Factors::Cholesky(_) => self.solve(b),
            Factors::Lu { lu, perm } => {
                // Uᵀ w = b, Lᵀ v = w, x = Pᵀ v.
                let w = forward_transposed(lu, b);
                let v = backward_transposed_unit(lu, &w);
                let mut x = vec![T::zero(); b.len()];
                for (i, &row) in perm.iter().enumerate() {
                    x[row] = v[i];
                }
                x
            }
        }
    }

    /// Ratio of the extreme diagonal factors: squared for Cholesky.
    pub fn diagonal_ratio(&self) -> T {
        let (m, squared) = match self {
            Factors::Cholesky(l) => (l, true),
            Factors::Lu { lu, .. } => (lu, false),
        };
        let n = m.dim();
        if n == 0 {
            return T::one();
        }
        let (lo, hi) = (0..n).map(|i| m.get(i, i).abs()).fold(
            (T::infinity(), T::zero()),
            |(lo, hi), d| (lo.min(d), hi.max(d)),
        );
        let r = hi / lo;
        if squared {
            r * r
        } else {
            r
        }
    }

    /// Hager-style lower bound for `‖A⁻¹‖₁`.
    pub fn inverse_norm_one_estimate(&self, n: usize, max_iter: usize) -> T {
        if n == 0 {
            return T::zero();
        }
        let mut x = vec![T::one() / T::from_usize_lossy(n); n];
        let mut estimate = T::zero();
        for _ in 0..max_iter.max(1) {
            let y = self.solve(&x);
            estimate = y.iter().map(|v| v.abs()).sum();
            let sign: Vec<T> = y
                .iter()
                .map(|&v| if v >= T::zero() { T::one() } else { -T::one() })
                .collect();
            let z = self.solve_transposed(&sign);
            let (j, zj) = z
                .iter()
                .enumerate()
                .fold((0, T::zero()), |best, (i, &v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
            if zj <= dot(&z, &x) {
                break;
            }
            x.iter_mut().for_each(|v| *v = T::zero());
            x[j] = T::one();
        }
        estimate
    }
}

fn forward<T: Real>(l: &DenseMatrix<T>, b: &[T], unit: bool) -> Vec<T> {
    let n = l.dim();
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let s = b[i] - dot(&l.row(i)[..i], &y[..i]);
        y[i] = if unit { s } else { s / l.get(i, i) };
    }
    y
}

fn backward<T: Real>(u: &DenseMatrix<T>, y: &[T]) -> Vec<T> {
    let n = u.dim();
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let s = y[i] - dot(&u.row(i)[i + 1..], &x[i + 1..]);
        x[i] = s / u.get(i, i);
    }
    x
}

/// Solves `Lᵀ x = y` for lower-triangular `L`.
fn backward_transposed<T: Real>(l: &DenseMatrix<T>, y: &[T]) -> Vec<T> {
    let n = l.dim();
    let mut x = y.to_vec();
    for i in (0..n).rev() {
        x[i] /= l.get(i, i);
        let xi = x[i];
        for (k, xk) in x.iter_mut().enumerate().take(i) {
            *xk -= l.get(i, k) * xi;
        }
    }
    x
}

/// Solves `Uᵀ w = b` for the upper triangle of the packed LU.
fn forward_transposed<T: Real>(lu: &DenseMatrix<T>, b: &[T]) -> Vec<T> {
    let n = lu.dim();
    let mut w = b.to_vec();
    for i in 0..n {
        w[i] /= lu.get(i, i);
        let wi = w[i];
        for k in i + 1..n {
            w[k] -= lu.get(i, k) * wi;
        }
    }
    w
}

/// Solves `Lᵀ v = w` for the unit lower triangle of the packed LU.
fn backward_transposed_unit<T: Real>(lu: &DenseMatrix<T>, w: &[T]) -> Vec<T> {
    let n = lu.dim();
    let mut v = w.to_vec();
    for i in (0..n).rev() {
        let vi = v[i];
        for (k, vk) in v.iter_mut().enumerate().take(i) {
            *vk -= lu.get(i, k) * vi;
        }
    }
    v
}

/// Result of [`solve_system`].
#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub x: Vec<T>,
    pub method: Factorization,
    /// Estimate of the 1-norm condition number of `A`.
    pub condition_estimate: T,
    /// `‖b − A x‖∞` of the returned `x`, in compensated arithmetic.
    pub residual: T,
}

/// Refinement steps applied after the initial solve.
const REFINEMENT_STEPS: usize = 2;
const CONDITION_ITERATIONS: usize = 3;

/// Solves `A x = b` for symmetric `A`, preferring Cholesky.
///
/// Returns `None` when both factorizations break down or the solution is not
/// finite.
pub fn solve_system<T: Real>(a: &DenseMatrix<T>, b: &[T]) -> Option<Solution<T>> {
    let n = a.dim();
    assert_eq!(b.len(), n, "right-hand side length must match matrix size");
    let factors = Factors::cholesky(a).or_else(|| Factors::pivoted_lu(a))?;

    let mut x = factors.solve(b);
    if !x.iter().all(|v| v.is_finite()) {
        return None;
    }
    let residual = |x: &[T]| accurate_residual(a, x, b);
    let mut r = residual(&x);
    let mut r_norm = norm_inf(&r);
    for _ in 0..REFINEMENT_STEPS {
        if r_norm == T::zero() {
            break;
        }
        let dx = factors.solve(&r);
        let candidate: Vec<T> = x.iter().zip(&dx).map(|(&xi, &di)| xi + di).collect();
        let r_new = residual(&candidate);
        let r_new_norm = norm_inf(&r_new);
        if !(r_new_norm < r_norm) {
            break;
        }
        x = candidate;
        r = r_new;
        r_norm = r_new_norm;
    }

    let mut condition = (a.norm_one() * factors.inverse_norm_one_estimate(n, CONDITION_ITERATIONS))
        .max(factors.diagonal_ratio());
    if factors.kind() == Factorization::PivotedLu {
        // Positive definite in exact arithmetic but not numerically.
        condition = condition.max(T::one() / T::epsilon());
    }
    Some(Solution {
        x,
        method: factors.kind(),
        condition_estimate: condition,
        residual: r_norm,
    })
}
