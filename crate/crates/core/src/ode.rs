//! Classical fourth-order Runge–Kutta sweeps along the spatial grid.
//!
//! Every spatial ODE in the crate (resolvent, regulator profiles) is a small
//! linear initial-value problem in `z` started from zero at the inlet. The
//! right-hand side is queried at nodes and at cell midpoints only, so
//! coefficients sampled on the grid can be supplied as node values plus
//! [`Profile::midpoints`](crate::grid::Profile::midpoints).

use crate::grid::{Scalar, SpatialGrid};

/// Where in a cell the right-hand side is being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum At {
    Node(usize),
    Mid(usize),
}

/// Node and midpoint samples of one coefficient function.
pub(crate) struct Sampled<'a> {
    nodes: &'a [f64],
    mids: Vec<f64>,
}

impl<'a> Sampled<'a> {
    pub(crate) fn new(nodes: &'a [f64]) -> Self {
        Self {
            nodes,
            mids: crate::grid::midpoints(nodes),
        }
    }

    #[inline]
    pub(crate) fn at(&self, at: At) -> f64 {
        match at {
            At::Node(k) => self.nodes[k],
            At::Mid(k) => self.mids[k],
        }
    }
}

/// Integrates `x' = rhs(z, x)` with `x(0) = 0` across all cells.
///
/// Returns one vector of node values per state component.
pub(crate) fn sweep<T: Scalar>(
    grid: SpatialGrid,
    dim: usize,
    mut rhs: impl FnMut(At, &[T], &mut [T]),
) -> Vec<Vec<T>> {
    let h = grid.dz();
    let mut out = vec![Vec::with_capacity(grid.n_points()); dim];
    let mut x = vec![T::zero(); dim];
    let mut k1 = vec![T::zero(); dim];
    let mut k2 = vec![T::zero(); dim];
    let mut k3 = vec![T::zero(); dim];
    let mut k4 = vec![T::zero(); dim];
    let mut tmp = vec![T::zero(); dim];

    for (c, col) in out.iter_mut().enumerate() {
        col.push(x[c]);
    }
    for i in 0..grid.n_cells() {
        rhs(At::Node(i), &x, &mut k1);
        for j in 0..dim {
            tmp[j] = x[j] + k1[j] * (0.5 * h);
        }
        rhs(At::Mid(i), &tmp, &mut k2);
        for j in 0..dim {
            tmp[j] = x[j] + k2[j] * (0.5 * h);
        }
        rhs(At::Mid(i), &tmp, &mut k3);
        for j in 0..dim {
            tmp[j] = x[j] + k3[j] * h;
        }
        rhs(At::Node(i + 1), &tmp, &mut k4);
        for j in 0..dim {
            x[j] = x[j] + (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (h / 6.0);
            out[j].push(x[j]);
        }
    }
    out
}
