//! Upwind simulator for the transport–reaction plant
//! `x_t = −x_z + g(z) x + forcing(z, t)`, `x(0, t) = 0`.

use crate::error::{Error, Result};
use crate::grid::{Profile, SpatialGrid};
use crate::trace::{Sample, SimTrace, SnapshotPlan};

/// Plant coefficients, sensor locations and the time-stepping Courant number.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantConfig {
    pub(crate) grid: SpatialGrid,
    pub(crate) g: Profile,
    pub(crate) b: Profile,
    pub(crate) b_d: Profile,
    pub(crate) z1: f64,
    pub(crate) z0: f64,
    pub(crate) cfl: f64,
}

impl PlantConfig {
    /// `g` is the reaction coefficient, `b` the actuator influence and `b_d`
    /// the disturbance influence. The controlled output is read at `z1`,
    /// the measurement at `z0`.
    pub fn new(g: Profile, b: Profile, b_d: Profile, z1: f64, z0: f64, cfl: f64) -> Result<Self> {
        let grid = g.grid();
        if b.grid() != grid || b_d.grid() != grid {
            return Err(Error::Config("g, b and b_d must share one grid".into()));
        }
        for (name, z) in [("z1", z1), ("z0", z0)] {
            if !(z > 0.0 && z <= 1.0) {
                return Err(Error::Config(format!("{name} = {z} must lie in (0, 1]")));
            }
        }
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::Config(format!("cfl = {cfl} must lie in (0, 1]")));
        }
        if let Some(k) = b.values().iter().position(|&v| v <= 0.0) {
            return Err(Error::Config(format!(
                "actuator influence b must be positive, b(z={}) = {}",
                grid.z(k),
                b[k]
            )));
        }
        Ok(Self { grid, g, b, b_d, z1, z0, cfl })
    }

    /// The heat-exchanger instance `g = 0.4 z`, `b = e^{−0.5 z}`, `b_d = 0.2`,
    /// `z1 = 0.5`, `z0 = 1`, at Courant number 1.
    pub fn heat_exchanger(n_points: usize) -> Result<Self> {
        let grid = SpatialGrid::new(n_points)?;
        Self::new(
            Profile::from_fn(grid, |z| 0.4 * z)?,
            Profile::from_fn(grid, |z| (-0.5 * z).exp())?,
            Profile::constant(grid, 0.2)?,
            0.5,
            1.0,
            1.0,
        )
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }
    pub fn g(&self) -> &Profile {
        &self.g
    }
    pub fn b(&self) -> &Profile {
        &self.b
    }
    pub fn b_d(&self) -> &Profile {
        &self.b_d
    }
    pub fn z1(&self) -> f64 {
        self.z1
    }
    pub fn z0(&self) -> f64 {
        self.z0
    }
    pub fn cfl(&self) -> f64 {
        self.cfl
    }

    /// Time step used by the simulation drivers: `cfl · dz`.
    pub fn dt(&self) -> f64 {
        self.cfl * self.grid.dz()
    }

    pub fn with_cfl(mut self, cfl: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::Config(format!("cfl = {cfl} must lie in (0, 1]")));
        }
        self.cfl = cfl;
        Ok(self)
    }

    pub fn with_influence(self, b: Profile, b_d: Profile) -> Result<Self> {
        Self::new(self.g, b, b_d, self.z1, self.z0, self.cfl)
    }

    pub fn with_reaction(self, g: Profile) -> Result<Self> {
        Self::new(g, self.b, self.b_d, self.z1, self.z0, self.cfl)
    }

    pub fn with_locations(self, z1: f64, z0: f64) -> Result<Self> {
        Self::new(self.g, self.b, self.b_d, z1, z0, self.cfl)
    }

    pub(crate) fn check_dt(&self, dt: f64) -> Result<()> {
        let limit = self.cfl * self.grid.dz();
        if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
            return Err(Error::Config(format!(
                "time step {dt} violates the CFL bound {limit} (cfl = {})",
                self.cfl
            )));
        }
        Ok(())
    }

    pub(crate) fn outputs(&self, x: &Profile) -> Result<(f64, f64)> {
        Ok((x.eval_at(self.z1)?, x.eval_at(self.z0)?))
    }
}

/// Plant state at time `t`. `x(0)` is zero by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub x: Profile,
    pub t: f64,
}

impl PlantState {
    pub fn new(x: Profile, t: f64) -> Self {
        let mut v = x.into_values();
        let grid = SpatialGrid::new(v.len()).expect("profile grids have ≥ 2 points");
        v[0] = 0.0;
        Self {
            x: Profile::from_vec_unchecked(grid, v),
            t,
        }
    }

    pub fn zero(grid: SpatialGrid) -> Self {
        Self { x: Profile::zeros(grid), t: 0.0 }
    }
}

/// One explicit upwind step of length `dt` under the distributed `forcing`.
pub fn plant_step(state: &PlantState, cfg: &PlantConfig, forcing: &Profile, dt: f64) -> Result<PlantState> {
    cfg.check_dt(dt)?;
    if state.x.grid() != cfg.grid || forcing.grid() != cfg.grid {
        return Err(Error::Config("state, forcing and plant grids differ".into()));
    }
    let mut x = state.x.values().to_vec();
    advance(&mut x, cfg.g.values(), forcing.values(), dt / cfg.grid.dz(), dt)?;
    Ok(PlantState {
        x: Profile::from_vec_unchecked(cfg.grid, x),
        t: state.t + dt,
    })
}

/// In-place upwind update; iterates downstream-first so `x[i-1]` is still old.
#[inline]
pub(crate) fn advance(x: &mut [f64], g: &[f64], forcing: &[f64], courant: f64, dt: f64) -> Result<()> {
    let n = x.len();
    for i in (1..n).rev() {
        let f = forcing[i];
        if !f.is_finite() {
            return Err(Error::Numeric(format!("non-finite forcing at node {i}")));
        }
        x[i] = x[i] - courant * (x[i] - x[i - 1]) + dt * (g[i] * x[i] + f);
    }
    x[0] = 0.0;
    Ok(())
}

/// Run length and snapshot requests shared by the simulation drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub t_final: f64,
    pub snapshots: Vec<f64>,
}

impl SimOptions {
    pub fn new(t_final: f64) -> Self {
        Self { t_final, snapshots: Vec::new() }
    }

    pub fn with_snapshots(mut self, times: impl Into<Vec<f64>>) -> Self {
        self.snapshots = times.into();
        self
    }

    pub(crate) fn steps(&self, dt: f64) -> Result<usize> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Argument(format!("t_final = {} must be positive", self.t_final)));
        }
        Ok(((self.t_final / dt) - 1e-9).ceil().max(1.0) as usize)
    }
}

/// Runs the plant under scalar input `u(t)` and disturbance `d(t)`
/// (forcing `b·u + b_d·d`). The trace has no reference, so `e = y`.
pub fn simulate_open_loop(
    cfg: &PlantConfig,
    x0: &Profile,
    u: impl Fn(f64) -> f64,
    d: impl Fn(f64) -> f64,
    opts: &SimOptions,
) -> Result<SimTrace> {
    if x0.grid() != cfg.grid {
        return Err(Error::Config("initial state grid differs from plant grid".into()));
    }
    let dt = cfg.dt();
    let steps = opts.steps(dt)?;
    let mut trace = SimTrace::with_capacity(0, steps + 1);
    let mut plan = SnapshotPlan::new(&opts.snapshots);
    let mut state = PlantState::new(x0.clone(), 0.0);
    let mut forcing = vec![0.0; cfg.grid.n_points()];
    let courant = dt / cfg.grid.dz();

    for k in 0..=steps {
        let t = k as f64 * dt;
        let (y, y_m) = cfg.outputs(&state.x)?;
        let (uk, dk) = (u(t), d(t));
        trace.push(Sample { t, y, y_m, d: dk, ..Default::default() });
        plan.capture(t, dt, &state.x, &mut trace.snapshots);
        if k == steps {
            break;
        }
        for ((f, b), bd) in forcing.iter_mut().zip(cfg.b.values()).zip(cfg.b_d.values()) {
            *f = b * uk + bd * dk;
        }
        let mut x = state.x.into_values();
        advance(&mut x, cfg.g.values(), &forcing, courant, dt)?;
        state = PlantState {
            x: Profile::from_vec_unchecked(cfg.grid, x),
            t: t + dt,
        };
    }
    Ok(trace)
}
