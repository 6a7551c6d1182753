//! Piecewise-linear nodal fields.

use crate::error::{Result, SimError};

/// One scalar per mesh node (pressure, adjoint pressure).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFieldP1 {
    values: Vec<f64>,
}

/// One `(r, z)` pair per mesh node (velocities, adjoint velocity).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldP1 {
    values: Vec<[f64; 2]>,
}

impl ScalarFieldP1 {
    pub fn zeros(n: usize) -> Self {
        ScalarFieldP1 { values: vec![0.0; n] }
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SimError::InvalidParameter("non-finite scalar field value".into()));
        }
        Ok(ScalarFieldP1 { values })
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        ScalarFieldP1 { values: (0..n).map(f).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, node: usize) -> f64 {
        self.values[node]
    }
}

impl VectorFieldP1 {
    pub fn zeros(n: usize) -> Self {
        VectorFieldP1 { values: vec![[0.0; 2]; n] }
    }

    pub fn from_vec(values: Vec<[f64; 2]>) -> Result<Self> {
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SimError::InvalidParameter("non-finite vector field value".into()));
        }
        Ok(VectorFieldP1 { values })
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> [f64; 2]) -> Self {
        VectorFieldP1 { values: (0..n).map(f).collect() }
    }

    /// Builds a field from a flat `[r0, z0, r1, z1, ...]` vector.
    pub fn from_flat(flat: &[f64]) -> Self {
        VectorFieldP1 { values: flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect() }
    }

    /// Flat `[r0, z0, r1, z1, ...]` layout, matching velocity block dofs.
    pub fn to_flat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn at(&self, node: usize) -> [f64; 2] {
        self.values[node]
    }

    pub fn set(&mut self, node: usize, value: [f64; 2]) {
        self.values[node] = value;
    }

    /// Largest nodal Euclidean norm.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }
}
