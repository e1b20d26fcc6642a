//! Uniform grids on `[0, 1]` and sampled profiles.

use std::ops::{Add, Mul, Sub};

use nalgebra::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Equispaced grid on the unit interval with both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpatialGrid {
    n_points: usize,
}

impl SpatialGrid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::Config(format!(
                "grid needs at least 2 points, got {n_points}"
            )));
        }
        Ok(Self { n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_cells(&self) -> usize {
        self.n_points - 1
    }

    pub fn dz(&self) -> f64 {
        1.0 / self.n_cells() as f64
    }

    /// Position of node `k`. The last node is exactly 1.
    pub fn z(&self, k: usize) -> f64 {
        if k == self.n_cells() {
            1.0
        } else {
            k as f64 / self.n_cells() as f64
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |k| self.z(k))
    }

    /// Index of the node at `z` when `z` lies on the grid (to within 1e-9 cells).
    pub fn node_index(&self, z: f64) -> Option<usize> {
        let pos = z * self.n_cells() as f64;
        let k = pos.round();
        ((pos - k).abs() < 1e-9 && k >= 0.0 && k <= self.n_cells() as f64).then_some(k as usize)
    }
}

/// Field values usable in profiles: `f64` and complex doubles.
pub trait Scalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Send
    + Sync
    + 'static
{
    fn zero() -> Self;
    fn norm_sqr(self) -> f64;
    fn is_finite(self) -> bool;
    fn to_complex(self) -> C64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn to_complex(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn norm_sqr(self) -> f64 {
        Complex::norm_sqr(&self)
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn to_complex(self) -> C64 {
        self
    }
}

/// A function sampled at every node of a [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T = f64> {
    grid: SpatialGrid,
    values: Vec<T>,
}

impl<T: Scalar> Profile<T> {
    pub fn new(grid: SpatialGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::Config(format!(
                "profile has {} values for a {}-point grid",
                values.len(),
                grid.n_points()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite profile value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values already known to be finite.
    pub(crate) fn from_vec_unchecked(grid: SpatialGrid, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self { grid, values }
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            grid,
            values: vec![T::zero(); grid.n_points()],
        }
    }

    pub fn constant(grid: SpatialGrid, c: T) -> Result<Self> {
        Self::new(grid, vec![c; grid.n_points()])
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> T) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect())
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| c * v).collect(),
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Profile<U> {
        Profile {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn to_complex(&self) -> Profile<C64> {
        self.map(Scalar::to_complex)
    }

    /// Linear interpolation at `z`; grid nodes return the stored sample unchanged.
    pub fn eval_at(&self, z: f64) -> Result<T> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::Domain(format!("evaluation point {z} outside [0, 1]")));
        }
        if let Some(k) = self.grid.node_index(z) {
            return Ok(self.values[k]);
        }
        let pos = z * self.grid.n_cells() as f64;
        let i = (pos.floor() as usize).min(self.grid.n_cells() - 1);
        let frac = pos - i as f64;
        Ok(self.values[i] * (1.0 - frac) + self.values[i + 1] * frac)
    }

    /// Trapezoidal approximation of the L² norm on `[0, 1]`.
    pub fn l2_norm(&self) -> f64 {
        let n = self.values.len();
        let interior: f64 = self.values[1..n - 1].iter().map(|v| v.norm_sqr()).sum();
        let ends = 0.5 * (self.values[0].norm_sqr() + self.values[n - 1].norm_sqr());
        ((interior + ends) * self.grid.dz()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.norm_sqr().sqrt())
            .fold(0.0, f64::max)
    }

    /// Values at the cell midpoints, from a four-point cubic stencil
    /// (one-sided in the boundary cells). Falls back to averaging on grids
    /// with fewer than four nodes.
    pub fn midpoints(&self) -> Vec<T> {
        midpoints(&self.values)
    }
}

impl<T: Scalar> std::ops::Index<usize> for Profile<T> {
    type Output = T;
    fn index(&self, k: usize) -> &T {
        &self.values[k]
    }
}

pub(crate) fn midpoints<T: Scalar>(f: &[T]) -> Vec<T> {
    let n = f.len();
    if n < 4 {
        return f.windows(2).map(|w| (w[0] + w[1]) * 0.5).collect();
    }
    let w = 1.0 / 16.0;
    (0..n - 1)
        .map(|i| {
            if i == 0 {
                (f[0] * 5.0 + f[1] * 15.0 - f[2] * 5.0 + f[3]) * w
            } else if i == n - 2 {
                (f[n - 4] - f[n - 3] * 5.0 + f[n - 2] * 15.0 + f[n - 1] * 5.0) * w
            } else {
                ((f[i] + f[i + 1]) * 9.0 - f[i - 1] - f[i + 2]) * w
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> SpatialGrid {
        SpatialGrid::new(n).unwrap()
    }

    #[test]
    fn endpoints_are_exact() {
        for n in [2, 3, 101, 2001] {
            let g = grid(n);
            assert_eq!(g.z(0), 0.0);
            assert_eq!(g.z(n - 1), 1.0);
            assert!(g.points().collect::<Vec<_>>().windows(2).all(|w| w[1] > w[0]));
        }
        assert!(SpatialGrid::new(1).is_err());
    }

    #[test]
    fn default_grid_hits_sensor_locations() {
        let g = grid(2001);
        assert_eq!(g.node_index(0.5), Some(1000));
        assert_eq!(g.node_index(1.0), Some(2000));
    }

    #[test]
    fn eval_linear_profile() {
        let p = Profile::from_fn(grid(11), |z| 0.4 * z).unwrap();
        assert!((p.eval_at(0.5).unwrap() - 0.2).abs() < 1e-15);
        assert!((p.eval_at(0.537).unwrap() - 0.4 * 0.537).abs() < 1e-15);
    }

    #[test]
    fn eval_actuator_profile_at_inlet() {
        let p = Profile::from_fn(grid(2001), |z| (-0.5 * z).exp()).unwrap();
        assert_eq!(p.eval_at(0.0).unwrap(), 1.0);
    }

    #[test]
    fn eval_zero_profile() {
        let p = Profile::<f64>::zeros(grid(7));
        assert_eq!(p.eval_at(0.33).unwrap(), 0.0);
    }

    #[test]
    fn eval_outside_domain() {
        let p = Profile::<f64>::zeros(grid(7));
        assert!(matches!(p.eval_at(1.0001), Err(Error::Domain(_))));
        assert!(matches!(p.eval_at(-1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Profile::new(grid(3), vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(Profile::new(grid(3), vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn l2_norms() {
        assert!((Profile::constant(grid(5), 1.0).unwrap().l2_norm() - 1.0).abs() < 1e-15);
        assert_eq!(Profile::<f64>::zeros(grid(5)).l2_norm(), 0.0);
        let p = Profile::from_fn(grid(2001), |z| z).unwrap();
        assert!((p.l2_norm() - 1.0 / 3f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn cubic_midpoints_exact_for_cubics() {
        let g = grid(9);
        let f = |z: f64| 1.0 - 2.0 * z + 3.0 * z * z - 0.7 * z * z * z;
        let p = Profile::from_fn(g, f).unwrap();
        for (i, m) in p.midpoints().into_iter().enumerate() {
            let zm = (g.z(i) + g.z(i + 1)) / 2.0;
            assert!((m - f(zm)).abs() < 1e-14, "cell {i}");
        }
    }

    proptest! {
        #[test]
        fn grid_points_evaluate_exactly(vals in proptest::collection::vec(-1e3f64..1e3, 2..60)) {
            let g = grid(vals.len());
            let p = Profile::new(g, vals.clone()).unwrap();
            for (k, v) in vals.iter().enumerate() {
                prop_assert_eq!(p.eval_at(g.z(k)).unwrap(), *v);
            }
        }

        #[test]
        fn l2_norm_is_absolutely_homogeneous(
            vals in proptest::collection::vec(-10f64..10.0, 2..60),
            c in -50f64..50.0,
        ) {
            let p = Profile::new(grid(vals.len()), vals).unwrap();
            let lhs = p.scale(c).l2_norm();
            let rhs = c.abs() * p.l2_norm();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }
    }
}
