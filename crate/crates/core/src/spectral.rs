//! Resolvent actions and transfer values from the Laplace-domain spatial ODE.
//!
//! For the plant operator `A = −d/dz + g(z)` with `x(0) = 0`, solving
//! `(sI − A) x = f` is the initial-value problem
//!
//! ```text
//! x'(z) = (g(z) − s) x(z) + f(z),   x(0) = 0,
//! ```
//!
//! integrated here with classical RK4 across the grid cells. A transfer value
//! is the point evaluation of that solution at an output location.

use crate::error::{Error, Result};
use crate::grid::{Profile, Scalar, C64};
use crate::ode::{self, At, Sampled};
use crate::plant::PlantConfig;

/// `G(s)` for one influence profile and one output location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferValue {
    pub s: C64,
    pub value: C64,
    pub output_location: f64,
}

/// `(sI − A)⁻¹ f` sampled on the plant grid.
pub fn resolvent_apply<T: Scalar>(cfg: &PlantConfig, s: C64, f: &Profile<T>) -> Result<Profile<C64>> {
    if f.grid() != cfg.grid() {
        return Err(Error::Config("influence profile grid differs from plant grid".into()));
    }
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::Numeric(format!("non-finite frequency {s}")));
    }
    let g = Sampled::new(cfg.g().values());
    let fc: Vec<C64> = f.values().iter().map(|v| v.to_complex()).collect();
    let f_mid = crate::grid::midpoints(&fc);
    let forcing = |at: At| match at {
        At::Node(k) => fc[k],
        At::Mid(k) => f_mid[k],
    };
    let mut cols = ode::sweep::<C64>(cfg.grid(), 1, |at, x, dx| {
        dx[0] = x[0] * (C64::new(g.at(at), 0.0) - s) + forcing(at);
    });
    let values = cols.pop().expect("one component");
    Profile::new(cfg.grid(), values)
}

/// `C_{z_out} (sI − A)⁻¹ influence`.
pub fn transfer_value<T: Scalar>(cfg: &PlantConfig, s: C64, influence: &Profile<T>, z_out: f64) -> Result<TransferValue> {
    if !(z_out > 0.0 && z_out <= 1.0) {
        return Err(Error::Domain(format!("output location {z_out} outside (0, 1]")));
    }
    let x = resolvent_apply(cfg, s, influence)?;
    Ok(TransferValue {
        s,
        value: x.eval_at(z_out)?,
        output_location: z_out,
    })
}

/// Plant transfer `G(s)` from the actuator to the controlled output.
pub fn plant_transfer(cfg: &PlantConfig, s: C64) -> Result<TransferValue> {
    transfer_value(cfg, s, cfg.b(), cfg.z1())
}

/// `G₁(s)`: the same channel with a unit influence profile.
pub fn unit_transfer(cfg: &PlantConfig, s: C64) -> Result<TransferValue> {
    transfer_value(cfg, s, &Profile::constant(cfg.grid(), 1.0)?, cfg.z1())
}
