use crate::scalar::Scalar;

use super::BackendError;

/// L2-normalized feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> EmbeddingVector<T> {
    /// Normalizes `values` to unit length. Fails on empty, zero or
    /// non-finite input.
    pub fn from_raw(values: Vec<T>) -> Result<Self, BackendError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(BackendError::DegenerateVector);
        }
        let norm = values.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
        if norm <= T::zero() || !norm.is_finite() {
            return Err(BackendError::DegenerateVector);
        }
        Ok(Self {
            values: values.into_iter().map(|v| v / norm).collect(),
        })
    }

    /// Wraps values that the caller has already normalized.
    pub(crate) fn from_unit(values: Vec<T>) -> Self {
        debug_assert!({
            let n: f64 = values.iter().map(|v| v.as_f64() * v.as_f64()).sum();
            (n - 1.0).abs() < 1e-4
        });
        Self { values }
    }

    /// The first standard basis vector of dimension `dim`.
    pub fn basis(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        let mut values = vec![T::zero(); dim];
        values[0] = T::one();
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn norm(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &v| a + v * v).sqrt()
    }

    /// Converts to another scalar precision, renormalizing.
    pub fn cast<U: Scalar>(&self) -> EmbeddingVector<U> {
        let raw = self.values.iter().map(|v| U::lit(v.as_f64())).collect();
        EmbeddingVector::from_raw(raw).expect("unit vector stays non-degenerate")
    }
}
