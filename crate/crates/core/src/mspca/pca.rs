use faer::Side;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Components whose variance falls below this fraction of the largest one
/// are treated as null directions when fitting through the Gram matrix.
const GRAM_NULL_TOLERANCE: f64 = 1e-9;

/// Principal axes of a column-centred data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `d x k`, one unit-norm component per column, eigenvalue-descending.
    components: Matrix,
    eigenvalues: Vec<f64>,
    n_retained: usize,
}

impl PcaModel {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Sample-covariance eigenvalues (divisor `n - 1`), descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        (0..self.dims()).map(|r| self.components[(r, i)]).collect()
    }

    pub fn n_retained(&self) -> usize {
        self.n_retained
    }

    pub fn set_n_retained(&mut self, n_retained: usize) -> Result<()> {
        if n_retained > self.n_components() {
            return Err(Error::BadInput(format!(
                "cannot retain {n_retained} of {} components",
                self.n_components()
            )));
        }
        self.n_retained = n_retained;
        Ok(())
    }

    pub fn with_retained(mut self, n_retained: usize) -> Result<Self> {
        self.set_n_retained(n_retained)?;
        Ok(self)
    }
}

fn fix_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn centre(matrix: &Matrix, mean: &[f64]) -> Matrix {
    let mut xc = matrix.clone();
    for i in 0..xc.rows() {
        for (v, m) in xc.row_mut(i).iter_mut().zip(mean) {
            *v -= m;
        }
    }
    xc
}

/// Fits PCA to the rows of `matrix` (observations x variables).
///
/// With `d <= n` the `d x d` sample covariance is diagonalised and all `d`
/// components are kept. Otherwise the `n x n` Gram matrix is diagonalised and
/// only components with non-negligible variance are returned. All components
/// start out retained.
pub fn pca_fit(matrix: &Matrix) -> Result<PcaModel> {
    let (n, d) = matrix.shape();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    if d == 0 {
        return Err(Error::BadInput("matrix has no columns".into()));
    }
    if !matrix.is_finite() {
        return Err(Error::BadInput("matrix has non-finite entries".into()));
    }
    let mean = matrix.column_means();
    let xc = centre(matrix, &mean);
    let xf = xc.to_faer();
    let denom = (n - 1) as f64;

    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::new();
    if d <= n {
        let cov = xf.transpose() * &xf;
        let evd = cov
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::BadInput(format!("eigendecomposition failed: {e:?}")))?;
        let values = evd.S().column_vector();
        let vectors = evd.U();
        for i in (0..d).rev() {
            let v = (0..d).map(|r| vectors[(r, i)]).collect();
            pairs.push((values[i] / denom, v));
        }
    } else {
        let gram = &xf * xf.transpose();
        let evd = gram
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::BadInput(format!("eigendecomposition failed: {e:?}")))?;
        let values = evd.S().column_vector();
        let top = values[n - 1].max(0.0);
        let keep: Vec<usize> = (0..n)
            .rev()
            .filter(|&i| values[i] > GRAM_NULL_TOLERANCE * top && values[i] > 0.0)
            .collect();
        if !keep.is_empty() {
            let u = faer::Mat::from_fn(n, keep.len(), |r, c| evd.U()[(r, keep[c])]);
            let v = xf.transpose() * &u;
            for (c, &i) in keep.iter().enumerate() {
                let mut col: Vec<f64> = (0..d).map(|r| v[(r, c)]).collect();
                let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
                col.iter_mut().for_each(|x| *x /= norm);
                pairs.push((values[i] / denom, col));
            }
        }
    }

    // Rounding can leave tiny negative eigenvalues.
    for (value, vector) in &mut pairs {
        if *value < 0.0 {
            *value = 0.0;
        }
        fix_sign(vector);
    }

    let k = pairs.len();
    let mut components = Matrix::zeros(d, k);
    let mut eigenvalues = Vec::with_capacity(k);
    for (c, (value, vector)) in pairs.into_iter().enumerate() {
        for (r, x) in vector.into_iter().enumerate() {
            components[(r, c)] = x;
        }
        eigenvalues.push(value);
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        n_retained: k,
    })
}

/// Projects the centred rows onto the retained components and maps them back.
pub fn pca_denoise(matrix: &Matrix, model: &PcaModel) -> Result<Matrix> {
    let (n, d) = matrix.shape();
    if d != model.dims() {
        return Err(Error::shape(
            format!("{} columns", model.dims()),
            format!("{d} columns"),
        ));
    }
    let k = model.n_retained;
    let mut out = if k == 0 {
        Matrix::zeros(n, d)
    } else {
        let xc = centre(matrix, &model.mean);
        let xf = xc.to_faer();
        let basis = model.components.to_faer();
        let basis = basis.subcols(0, k);
        let scores = &xf * basis;
        Matrix::from_faer((&scores * basis.transpose()).as_ref())
    };
    for i in 0..n {
        for (v, m) in out.row_mut(i).iter_mut().zip(&model.mean) {
            *v += m;
        }
    }
    Ok(out)
}
