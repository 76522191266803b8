//! Small dense linear-algebra helpers on complex matrices.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::C64;

pub type CMatrix = DMatrix<C64>;

/// `a * b` through four real GEMMs.
///
/// nalgebra only dispatches `f32`/`f64` products to its blocked kernel, so
/// for anything beyond a few dozen rows this is much faster than `a * b`.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul dimension mismatch");
    if a.nrows() * a.ncols() * b.ncols() < 32 * 32 * 32 {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

/// Frobenius norm of `a - b`.
pub fn distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// `‖A - A†‖_F`.
pub fn hermiticity_residual(a: &CMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

/// `‖U†U - I‖_F`.
pub fn isometry_residual(u: &CMatrix) -> f64 {
    let n = u.ncols();
    (matmul(&u.adjoint(), u) - CMatrix::identity(n, n)).norm()
}

/// `‖UU† - I‖_F + ‖U†U - I‖_F`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    isometry_residual(u) + isometry_residual(&u.adjoint())
}

/// Smallest eigenvalue of the Hermitian part of `a`.
pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Diagonal 0/1 projector from a mask.
pub fn diagonal_projector(mask: &[bool]) -> CMatrix {
    let n = mask.len();
    CMatrix::from_fn(n, n, |i, j| if i == j && mask[i] { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// Standard complex Gaussian sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random unit vector, uniform on the sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// Random density matrix of the given rank (Ginibre construction).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, rank, |_, _| complex_gaussian(rng));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// Orthonormal basis (as columns) of the span of the columns of `a`.
pub fn orthonormal_basis(a: &CMatrix, tol: f64) -> CMatrix {
    let mut basis: Vec<nalgebra::DVector<C64>> = Vec::new();
    for j in 0..a.ncols() {
        let mut v = a.column(j).into_owned();
        // two rounds of Gram-Schmidt keep the basis orthonormal to machine precision
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let n = v.norm();
        if n > tol {
            basis.push(v / C64::new(n, 0.0));
        }
    }
    if basis.is_empty() {
        return CMatrix::zeros(a.nrows(), 0);
    }
    CMatrix::from_columns(&basis)
}

/// Orthogonal projector onto the span of the columns of `a`.
pub fn range_projector(a: &CMatrix, tol: f64) -> CMatrix {
    let q = orthonormal_basis(a, tol);
    &q * q.adjoint()
}

/// Projector onto a random subspace of the given dimension.
pub fn random_projector<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, rank, |_, _| complex_gaussian(rng));
    range_projector(&g, 1e-10)
}

/// Projectors `(P, P̂, Q)` with `QPQ ≤ P̂ ≤ Q`, built from random
/// subspaces: `P̂` lives inside `Q`, and `P` is spanned by vectors whose
/// `Q`-component lies in the range of `P̂`.
pub fn sandwich_triple<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> (CMatrix, CMatrix, CMatrix) {
    let q_rank = rng.gen_range(0..=dim);
    let q_basis = orthonormal_basis(&CMatrix::from_fn(dim, q_rank, |_, _| complex_gaussian(rng)), 1e-10);
    let q = &q_basis * q_basis.adjoint();
    let hat_rank = rng.gen_range(0..=q_rank);
    let g = CMatrix::from_fn(q_rank, hat_rank, |_, _| complex_gaussian(rng));
    let hat_basis = orthonormal_basis(&(&q_basis * g), 1e-10);
    let p_hat = &hat_basis * hat_basis.adjoint();
    let outside = orthonormal_basis(&(CMatrix::identity(dim, dim) - &q), 1e-8);
    let p_rank = rng.gen_range(0..=dim);
    let a = CMatrix::from_fn(hat_basis.ncols(), p_rank, |_, _| complex_gaussian(rng));
    let b = CMatrix::from_fn(outside.ncols(), p_rank, |_, _| complex_gaussian(rng));
    let p = range_projector(&(&hat_basis * a + &outside * b), 1e-10);
    (p, p_hat, q)
}

/// Smallest eigenvalues of `P̂ - QPQ`, `Q - P̂` and `P̂ + (I - Q) - P`.
pub fn sandwich_gaps(p: &CMatrix, p_hat: &CMatrix, q: &CMatrix) -> [f64; 3] {
    let id = CMatrix::identity(p.nrows(), p.ncols());
    [
        min_eigenvalue(&(p_hat - q * p * q)),
        min_eigenvalue(&(q - p_hat)),
        min_eigenvalue(&(p_hat + (&id - q) - p)),
    ]
}
