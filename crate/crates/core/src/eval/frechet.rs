use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::codec::Latent;
use crate::{Error, Result};

pub const COVARIANCE_EPSILON: f64 = 1e-6;

/// Equal-length vectors from one audio set.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    vectors: Vec<Vec<f64>>,
    source: String,
}

impl EmbeddingSet {
    pub fn new(dim: usize, vectors: Vec<Vec<f64>>, source: impl Into<String>) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::Eval(format!("vector of length {} in a {dim}-dimensional set", v.len())));
        }
        if vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Eval("non-finite embedding value".into()));
        }
        Ok(EmbeddingSet {
            dim,
            vectors,
            source: source.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        for v in &self.vectors {
            m += DVector::from_column_slice(v);
        }
        m / self.vectors.len().max(1) as f64
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self) -> DMatrix<f64> {
        let m = self.mean();
        let mut c = DMatrix::zeros(self.dim, self.dim);
        for v in &self.vectors {
            let d = DVector::from_column_slice(v) - &m;
            c += &d * d.transpose();
        }
        c / (self.vectors.len().max(2) - 1) as f64
    }

    /// Stored as a latent file with one row per vector (32-bit values).
    pub fn to_latent(&self) -> Result<Latent<f32>> {
        let data = self.vectors.iter().flatten().map(|&x| x as f32).collect();
        Latent::new(self.vectors.len(), self.dim, 1, 0, data)
    }

    pub fn from_latent(latent: &Latent<f32>, source: impl Into<String>) -> Result<Self> {
        let vectors = (0..latent.channels())
            .map(|r| latent.row(r).iter().map(|&x| x as f64).collect())
            .collect();
        Self::new(latent.frames(), vectors, source)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_latent()?.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_latent(&Latent::from_bytes(&bytes)?, path.display().to_string())
    }
}

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `|mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2))` with `S + eps I`.
///
/// `tr (S_a S_b)^(1/2)` is evaluated as `tr (A^(1/2) B A^(1/2))^(1/2)`, which
/// keeps every square root symmetric.
pub fn frechet_distance(a: &EmbeddingSet, b: &EmbeddingSet) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::Eval(format!("dimension mismatch: {} vs {}", a.dim, b.dim)));
    }
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Eval(format!(
            "need at least 2 vectors per set, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let eps = DMatrix::identity(a.dim, a.dim) * COVARIANCE_EPSILON;
    let sa = a.covariance() + &eps;
    let sb = b.covariance() + &eps;
    let root_a = sym_sqrt(&sa);
    let inner = symmetrize(&root_a * &sb * &root_a);
    let tr_sqrt: f64 = SymmetricEigen::new(inner).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    let mean_term = (a.mean() - b.mean()).norm_squared();
    Ok((mean_term + sa.trace() + sb.trace() - 2.0 * tr_sqrt).max(0.0))
}
