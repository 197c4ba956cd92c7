//! Uniform periodic grid on [0,1) and real scalar fields living on it.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::ModelError;

/// Uniform 1-periodic mesh of `n` nodes, `z_j = j/n`, with cached FFT plans.
///
/// `n` must be a power of two and at least 8. The period is fixed at 1, so
/// node spacing is `1/n` and integer wavenumbers carry a `2*pi` factor in
/// all spectral operators.
pub struct PeriodicGrid {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicGrid").field("n", &self.n).finish()
    }
}

impl PeriodicGrid {
    /// Build a grid with `n` nodes. `n` must be a power of two, `n >= 8`.
    pub fn new(n: usize) -> Result<Arc<Self>, ModelError> {
        if n < 8 || !n.is_power_of_two() {
            return Err(ModelError::BadParams(format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }))
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node coordinate `z_j = j/n`.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }

    /// All node coordinates in order.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.node(j))
    }

    /// Signed integer wavenumber of spectral bin `i` in FFT layout:
    /// `0, 1, ..., n/2, -(n/2-1), ..., -1`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Forward transform of node values (unnormalized).
    pub(crate) fn fft(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.n);
        let mut buf: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse transform back to node values, applying the 1/n normalization.
    pub(crate) fn ifft(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        debug_assert_eq!(spectrum.len(), self.n);
        self.inv.process(&mut spectrum);
        let scale = 1.0 / self.n as f64;
        spectrum.iter().map(|c| c.re * scale).collect()
    }
}

/// Real values of one unknown on a [`PeriodicGrid`].
#[derive(Clone)]
pub struct ScalarField {
    grid: Arc<PeriodicGrid>,
    values: Vec<f64>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("n", &self.grid.len())
            .field("min", &self.min())
            .field("max", &self.max())
            .finish()
    }
}

impl ScalarField {
    /// Zero field.
    pub fn zeros(grid: &Arc<PeriodicGrid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
        }
    }

    /// Constant field.
    pub fn constant(grid: &Arc<PeriodicGrid>, value: f64) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![value; grid.len()],
        }
    }

    /// Sample `f(z)` at the grid nodes.
    pub fn from_fn(grid: &Arc<PeriodicGrid>, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: grid.nodes().map(f).collect(),
        }
    }

    /// Wrap existing node values. Panics if the length does not match the grid.
    pub fn from_values(grid: &Arc<PeriodicGrid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count must match grid");
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.grid
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

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// True when every node value is finite. NaN or infinity marks a
    /// detected-blowup state, never a silent one.
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    /// Mean over the period (also the integral, since the period is 1).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Integral over [0,1] by the uniform rectangle rule (spectrally
    /// accurate for smooth periodic integrands).
    pub fn integral(&self) -> f64 {
        self.mean()
    }

    /// L2 norm sqrt(int f^2 dz) on the nodes.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|x| x * x).sum::<f64>() / self.len() as f64).sqrt()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Sup norm.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Pointwise map into a new field.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(
            Arc::ptr_eq(&self.grid, &other.grid) || self.grid.len() == other.grid.len(),
            "fields must share a grid"
        );
        Self {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// In-place `self += c * other`.
    pub fn add_scaled(&mut self, other: &Self, c: f64) {
        assert_eq!(self.len(), other.len());
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    /// In-place shift by a constant.
    pub fn shift(&mut self, c: f64) {
        for a in self.values.iter_mut() {
            *a += c;
        }
    }

    /// Subtract the mean so the result is exactly mean-free on the nodes.
    pub fn project_mean_free(&mut self) {
        self.shift(-self.mean());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(PeriodicGrid::new(0).is_err());
        assert!(PeriodicGrid::new(4).is_err());
        assert!(PeriodicGrid::new(100).is_err());
        assert!(PeriodicGrid::new(8).is_ok());
        assert!(PeriodicGrid::new(32768).is_ok());
    }

    #[test]
    fn nodes_are_exactly_uniform() {
        let g = PeriodicGrid::new(16).unwrap();
        assert_eq!(g.node(0), 0.0);
        for j in 0..16 {
            assert_eq!(g.node(j), j as f64 / 16.0);
        }
    }

    #[test]
    fn wavenumbers_follow_fft_layout() {
        let g = PeriodicGrid::new(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, -3, -2, -1]);
    }

    #[test]
    fn fft_round_trip_is_exact_to_rounding() {
        let g = PeriodicGrid::new(64).unwrap();
        let f = ScalarField::from_fn(&g, |z| (2.0 * std::f64::consts::PI * z).sin() + 0.25);
        let back = g.ifft(g.fft(f.values()));
        for (a, b) in f.values().iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn mean_and_integral_agree() {
        let g = PeriodicGrid::new(32).unwrap();
        let f = ScalarField::constant(&g, 3.5);
        assert_eq!(f.mean(), 3.5);
        assert_eq!(f.integral(), 3.5);
    }
}
