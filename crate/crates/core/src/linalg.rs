//! Dense complex linear-algebra helpers shared by the Krein, sampling and
//! discretization layers.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, QR, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c64(x, 0.0))
}

/// `(M + M*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entry modulus.
pub fn max_abs<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<C64, R, C>>(
    m: &nalgebra::Matrix<C64, R, C, S>,
) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Frobenius norm.
pub fn fro(m: &CMatrix) -> f64 {
    m.norm()
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Eigen-decomposition of a Hermitian matrix with eigenpairs sorted by
/// descending eigenvalue.
pub fn hermitian_eigen_desc(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Singular values, descending. Empty for degenerate shapes.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = SVD::new(m.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the null space of `c` (columns), together with the
/// absolute diagonal of the triangular factor of `c*`, which reveals the rank.
///
/// Uses a full Householder QR of `c*`: the trailing `ncols - nrows` columns
/// of the full unitary factor span `null(c)` when `c` has full row rank.
pub fn null_space(c: &CMatrix) -> (CMatrix, Vec<f64>) {
    let (rows, cols) = c.shape();
    if rows == 0 {
        return (CMatrix::identity(cols, cols), Vec::new());
    }
    let qr = QR::new(c.adjoint());
    let diag: Vec<f64> = qr.r().diagonal().iter().map(|z| z.norm()).collect();
    let mut qh = CMatrix::identity(cols, cols);
    qr.q_tr_mul(&mut qh);
    let q = qh.adjoint();
    let k = rows.min(cols);
    (q.columns(k, cols - k).into_owned(), diag)
}

/// Dense matrix exponential. Exactly skew-Hermitian input goes through the
/// Hermitian eigendecomposition of `-i m`, which keeps the result unitary to
/// rounding; everything else uses Padé scaling and squaring.
pub fn expm(m: &CMatrix) -> CMatrix {
    if m.nrows() == 0 {
        return m.clone();
    }
    if (m + m.adjoint()).iter().all(|z| *z == c64(0.0, 0.0)) {
        let h = m * c64(0.0, -1.0);
        let eig = SymmetricEigen::new(hermitian_part(&h));
        let phases = CVector::from_iterator(m.nrows(), eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, l)));
        let v = &eig.eigenvectors;
        return v * CMatrix::from_diagonal(&phases) * v.adjoint();
    }
    m.exp()
}

pub fn random_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Random skew-Hermitian matrix with entries of standard deviation `scale`.
pub fn random_skew_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> CMatrix {
    let g = random_gaussian(rng, n, n);
    (&g - g.adjoint()).scale(scale * std::f64::consts::FRAC_1_SQRT_2)
}

/// Haar-distributed unitary matrix (QR of a Ginibre matrix with phase fix).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let qr = QR::new(random_gaussian(rng, n, n));
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Copies `block` into `target` at `(row0, col0)`.
pub fn scatter(target: &mut CMatrix, block: &CMatrix, row0: usize, col0: usize) {
    target
        .view_mut((row0, col0), block.shape())
        .copy_from(block);
}
