use rand::Rng;

use super::prior::complex_gaussian;
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Linear operator `A = U diag(s) V^H` kept in thin SVD form.
///
/// `left` is `M x K` and `right` is `N x K` with `K = min(M, N)`; both have
/// orthonormal columns. The columns of `left` beyond `K` never influence the
/// solver, so they are not stored. `dense` keeps the original entries for
/// matrices that were drawn entrywise (binary class).
#[derive(Clone, Debug)]
pub struct TransformMatrix {
    rows: usize,
    cols: usize,
    left: CMatrix,
    right: CMatrix,
    singulars: Vec<f64>,
    dense: Option<CMatrix>,
}

impl TransformMatrix {
    pub fn from_svd(
        left: CMatrix,
        singulars: Vec<f64>,
        right: CMatrix,
        dense: Option<CMatrix>,
    ) -> Result<Self> {
        let (rows, k) = left.shape();
        let (cols, k2) = right.shape();
        if k != k2 || k != singulars.len() || k != rows.min(cols) {
            return Err(Error::Shape(format!(
                "svd factors {}x{}, {} singulars, {}x{}",
                rows,
                k,
                singulars.len(),
                cols,
                k2
            )));
        }
        if singulars.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidSpectrum("singular values must be finite and non-negative".into()));
        }
        if singulars.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidSpectrum("singular values must be sorted descending".into()));
        }
        if let Some(d) = &dense {
            if d.shape() != (rows, cols) {
                return Err(Error::Shape(format!(
                    "dense form is {:?}, expected {:?}",
                    d.shape(),
                    (rows, cols)
                )));
            }
        }
        Ok(Self { rows, cols, left, right, singulars, dense })
    }

    /// Haar-distributed singular vectors around the given spectrum.
    pub fn haar<R: Rng + ?Sized>(rows: usize, cols: usize, singulars: Vec<f64>, rng: &mut R) -> Result<Self> {
        let k = rows.min(cols);
        let left = haar_isometry(rows, k, rng);
        let right = haar_isometry(cols, k, rng);
        Self::from_svd(left, singulars, right, None)
    }

    /// `M`, the number of measurements.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `N`, the signal length.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn left(&self) -> &CMatrix {
        &self.left
    }

    pub fn right(&self) -> &CMatrix {
        &self.right
    }

    pub fn singulars(&self) -> &[f64] {
        &self.singulars
    }

    pub fn dense(&self) -> Option<&CMatrix> {
        self.dense.as_ref()
    }

    /// `tr(A A^H) / M`; with unit noise this is the SNR.
    pub fn snr(&self) -> f64 {
        self.singulars.iter().map(|s| s * s).sum::<f64>() / self.rows as f64
    }

    /// Singular values normalized to unit Euclidean norm, zero-padded to length `N`.
    pub fn normalized_singulars(&self) -> Vec<f64> {
        let norm = self.singulars.iter().map(|s| s * s).sum::<f64>().sqrt();
        let mut out = vec![0.0; self.cols];
        if norm > 0.0 {
            for (o, s) in out.iter_mut().zip(&self.singulars) {
                *o = s / norm;
            }
        }
        out
    }

    pub fn apply(&self, x: &CVector) -> Result<CVector> {
        if x.len() != self.cols {
            return Err(Error::Shape(format!("A is {}x{}, x has length {}", self.rows, self.cols, x.len())));
        }
        if let Some(d) = &self.dense {
            return Ok(d * x);
        }
        let mut coeffs = self.right.ad_mul(x);
        for (c, s) in coeffs.iter_mut().zip(&self.singulars) {
            *c *= *s;
        }
        Ok(&self.left * coeffs)
    }

    pub fn apply_adjoint(&self, z: &CVector) -> Result<CVector> {
        if z.len() != self.rows {
            return Err(Error::Shape(format!("A is {}x{}, z has length {}", self.rows, self.cols, z.len())));
        }
        if let Some(d) = &self.dense {
            return Ok(d.ad_mul(z));
        }
        let mut coeffs = self.left.ad_mul(z);
        for (c, s) in coeffs.iter_mut().zip(&self.singulars) {
            *c *= *s;
        }
        Ok(&self.right * coeffs)
    }

    pub fn to_dense(&self) -> CMatrix {
        if let Some(d) = &self.dense {
            return d.clone();
        }
        let mut scaled = self.left.clone();
        for (j, s) in self.singulars.iter().enumerate() {
            let mut col = scaled.column_mut(j);
            col *= Complex64::new(*s, 0.0);
        }
        scaled * self.right.adjoint()
    }

    /// Frobenius norms of `U^H U - I` and `V^H V - I` for the stored factors.
    pub fn unitary_defect(&self) -> (f64, f64) {
        let k = self.singulars.len();
        let id = CMatrix::identity(k, k);
        ((self.left.ad_mul(&self.left) - &id).norm(), (self.right.ad_mul(&self.right) - id).norm())
    }
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // column-major fill: the first k columns only depend on the first k*rows draws
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_gaussian(rng, 1.0)).collect();
    CMatrix::from_vec(rows, cols, data)
}

/// First `cols` columns of a Haar-distributed `rows x rows` unitary.
///
/// QR of an i.i.d. complex Gaussian matrix with the phases of `diag(R)`
/// moved into `Q`. Because the draws are column-major, `haar_isometry(k, j)`
/// equals the first `j` columns of `haar_isometry(k, k)` for the same stream.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

pub fn sample_haar_unitary<R: Rng + ?Sized>(k: usize, rng: &mut R) -> CMatrix {
    haar_isometry(k, k, rng)
}

/// Singular values of an `M x N` matrix with i.i.d. CN(0,1) entries, descending.
pub fn gaussian_class_singulars<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    let g = gaussian_matrix(rows, cols, rng);
    let mut s: Vec<f64> = g.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `sigma_n = gamma^(n-1)`, unnormalized.
pub fn geometric_singulars(n: usize, gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidSpectrum(format!("geometric ratio must lie in (0, 1], got {gamma}")));
    }
    let mut out = Vec::with_capacity(n);
    let mut s = 1.0;
    for _ in 0..n {
        out.push(s);
        s *= gamma;
    }
    Ok(out)
}

/// Rescales the spectrum so that `||sigma||^2 = M * snr`.
pub fn scale_to_snr(singulars: &[f64], rows: usize, snr_linear: f64) -> Result<Vec<f64>> {
    if !(snr_linear > 0.0 && snr_linear.is_finite()) {
        return Err(Error::InvalidSpectrum(format!("snr must be positive, got {snr_linear}")));
    }
    let energy: f64 = singulars.iter().map(|s| s * s).sum();
    if energy <= 0.0 {
        return Err(Error::InvalidSpectrum("all-zero spectrum cannot be scaled".into()));
    }
    let factor = (rows as f64 * snr_linear / energy).sqrt();
    Ok(singulars.iter().map(|s| s * factor).collect())
}

/// Entries i.i.d. uniform over `{0, c}`, with the single scale `c` chosen so
/// that `tr(A A^H) / M = snr`.
pub fn binary_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, snr_linear: f64, rng: &mut R) -> Result<TransformMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::Shape("binary matrix needs M, N >= 1".into()));
    }
    if !(snr_linear > 0.0 && snr_linear.is_finite()) {
        return Err(Error::InvalidSpectrum(format!("snr must be positive, got {snr_linear}")));
    }
    let (bits, ones) = loop {
        let bits: Vec<bool> = (0..rows * cols).map(|_| rng.random::<bool>()).collect();
        let ones = bits.iter().filter(|b| **b).count();
        if ones > 0 {
            break (bits, ones);
        }
    };
    let c = (rows as f64 * snr_linear / ones as f64).sqrt();
    let dense = CMatrix::from_iterator(
        rows,
        cols,
        bits.iter().map(|b| Complex64::new(if *b { c } else { 0.0 }, 0.0)),
    );
    from_dense(dense)
}

/// SVD of an explicit matrix into the thin form, keeping the dense entries.
pub(crate) fn from_dense(dense: CMatrix) -> Result<TransformMatrix> {
    let svd = dense.clone().svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Numeric("svd did not return U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Numeric("svd did not return V".into()))?;
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|a, b| s[*b].total_cmp(&s[*a]));
    let left = CMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let right = CMatrix::from_fn(v_t.ncols(), order.len(), |i, j| v_t[(order[j], i)].conj());
    let singulars = order.iter().map(|&j| s[j]).collect();
    TransformMatrix::from_svd(left, singulars, right, Some(dense))
}
