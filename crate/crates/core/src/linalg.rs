//! Small dense linear algebra: vectors in `R^d`, orthonormal frames and
//! Haar-random subspaces.
//!
//! Dimensions are capped at [`MAX_DIM`]; everything is dense.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A point or direction in `R^d`.
pub type VecD = DVector<f64>;

pub const MAX_DIM: usize = 10;

pub fn check_ambient_dim(d: usize) -> Result<()> {
    if !(2..=MAX_DIM).contains(&d) {
        return Err(Error::Dimension(format!(
            "ambient dimension must be in 2..={MAX_DIM}, got {d}"
        )));
    }
    Ok(())
}

pub fn vector(coords: &[f64]) -> VecD {
    VecD::from_column_slice(coords)
}

pub fn basis_vector(d: usize, i: usize) -> VecD {
    let mut e = VecD::zeros(d);
    e[i] = 1.0;
    e
}

/// An orthonormal `d x j` column frame spanning a `j`-dimensional subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    basis: DMatrix<f64>,
}

impl Frame {
    /// Accepts a matrix whose columns are already orthonormal (residual below `1e-10`).
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        if basis.ncols() == 0 || basis.ncols() > basis.nrows() {
            return Err(Error::Dimension(format!(
                "frame needs 1 <= j <= d, got j={} d={}",
                basis.ncols(),
                basis.nrows()
            )));
        }
        let frame = Frame { basis };
        let residual = frame.orthonormality_residual();
        if residual > 1e-10 {
            return Err(Error::Numeric(format!(
                "frame columns not orthonormal (residual {residual:.3e})"
            )));
        }
        Ok(frame)
    }

    /// Orthonormalizes the given columns by Gram-Schmidt.
    pub fn from_columns(columns: &[VecD]) -> Result<Self> {
        let d = columns.first().map(|c| c.len()).unwrap_or(0);
        if columns.iter().any(|c| c.len() != d) {
            return Err(Error::Dimension("frame columns differ in length".into()));
        }
        let m = DMatrix::from_columns(columns);
        let basis = gram_schmidt(m)?;
        Frame::from_orthonormal(basis)
    }

    pub fn identity(d: usize) -> Self {
        Frame {
            basis: DMatrix::identity(d, d),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn column(&self, i: usize) -> VecD {
        self.basis.column(i).into_owned()
    }

    /// Coordinates of the orthogonal projection of `x` in the frame basis.
    pub fn project(&self, x: &VecD) -> Result<VecD> {
        if x.len() != self.ambient_dim() {
            return Err(Error::Dimension(format!(
                "cannot project a {}-vector with a frame in R^{}",
                x.len(),
                self.ambient_dim()
            )));
        }
        Ok(self.basis.tr_mul(x))
    }

    /// Maps frame coordinates back into `R^d`.
    pub fn embed(&self, y: &VecD) -> VecD {
        &self.basis * y
    }

    /// The `d x d` orthogonal projector onto the span.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// `max |F^T F - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let j = self.dim();
        let gram = self.basis.tr_mul(&self.basis);
        (gram - DMatrix::<f64>::identity(j, j)).amax()
    }
}

fn gram_schmidt(mut m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    for k in 0..m.ncols() {
        for _ in 0..2 {
            for i in 0..k {
                let proj = m.column(i).dot(&m.column(k));
                let ci = m.column(i).into_owned();
                let mut ck = m.column_mut(k);
                ck.axpy(-proj, &ci, 1.0);
            }
        }
        let norm = m.column(k).norm();
        if norm < 1e-300 {
            return Err(Error::Numeric("linearly dependent frame columns".into()));
        }
        m.column_mut(k).unscale_mut(norm);
    }
    Ok(m)
}

pub fn project(x: &VecD, frame: &Frame) -> Result<VecD> {
    frame.project(x)
}

pub fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> VecD {
    VecD::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// Uniform direction on `S^{d-1}` by Gaussian normalization.
pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<VecD> {
    if d < 2 {
        return Err(Error::Dimension(format!("unit vectors need d >= 2, got {d}")));
    }
    loop {
        let g = gaussian_vector(d, rng);
        let norm = g.norm();
        if norm > 1e-12 {
            return Ok(g / norm);
        }
    }
}

/// Haar-distributed `j`-dimensional subspace of `R^d`: QR of a Gaussian
/// `d x j` matrix with the diagonal of `R` made positive.
pub fn random_subspace<R: Rng + ?Sized>(d: usize, j: usize, rng: &mut R) -> Result<Frame> {
    if j < 1 || j > d {
        return Err(Error::Dimension(format!("subspace needs 1 <= j <= d, got j={j} d={d}")));
    }
    let g = DMatrix::from_fn(d, j, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..j {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    Ok(Frame { basis: q })
}

/// Orthonormal basis of the orthogonal complement of a unit vector.
pub fn complement_basis(u: &VecD) -> Vec<VecD> {
    let d = u.len();
    let mut out: Vec<VecD> = Vec::with_capacity(d - 1);
    // Start from coordinate axes, skipping the one most aligned with u.
    let skip = u.iamax();
    for i in (0..d).filter(|&i| i != skip) {
        let mut v = basis_vector(d, i);
        for _ in 0..2 {
            v.axpy(-u.dot(&v), u, 1.0);
            for w in &out {
                v.axpy(-w.dot(&v), w, 1.0);
            }
        }
        let n = v.norm();
        out.push(v / n);
    }
    out
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Symmetric positive-definite square root and inverse square root.
pub fn spd_sqrt_pair(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::Numeric("matrix is not positive definite".into()));
    }
    let v = &eig.eigenvectors;
    let sqrt = v * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * v.transpose();
    let inv_sqrt =
        v * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt())) * v.transpose();
    Ok((sqrt, inv_sqrt))
}
