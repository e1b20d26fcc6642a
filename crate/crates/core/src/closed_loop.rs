//! Plant + regulator co-simulation and tracking metrics.
//!
//! Plant and regulator share the step `dt = cfl · dz`. At each step the
//! measurement is read from the current plant state, the regulator produces
//! its feedforward term and innovation, and both are held over the step.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::exosystem::ExoSystem;
use crate::grid::Profile;
use crate::plant::{advance, PlantConfig, SimOptions};
use crate::synth::{manifold_state, RegulatorParams};
use crate::trace::{Sample, SimTrace, SnapshotPlan};

/// Output of one regulator update.
#[derive(Debug, Clone, PartialEq)]
pub struct RegulatorStep {
    pub r_w: DVector<f64>,
    pub u_ff: f64,
    pub eps: f64,
}

/// Advances `ṙ_w = S r_w + L_y ε` by one RK4 step with `ε = y_m − C_mΠ r_w`
/// frozen over the step. `u_ff = Γ r_w` uses the state at the start of the step.
pub fn regulator_step(exo: &ExoSystem, r_w: &DVector<f64>, y_m: f64, params: &RegulatorParams, dt: f64) -> RegulatorStep {
    let eps = y_m - params.cm_pi.dot(&r_w.transpose());
    let u_ff = params.gamma.dot(&r_w.transpose());
    let s = exo.s();
    let drive = &params.ly * eps;
    let f = |r: &DVector<f64>| s * r + &drive;
    let k1 = f(r_w);
    let k2 = f(&(r_w + &k1 * (0.5 * dt)));
    let k3 = f(&(r_w + &k2 * (0.5 * dt)));
    let k4 = f(&(r_w + &k3 * dt));
    let next = r_w + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
    RegulatorStep { r_w: next, u_ff, eps }
}

/// Initial data for the feedforward regulator. When `matched` is set the
/// plant starts on the regulated manifold, `x(0) = Π r_w(0)`; otherwise at rest.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedforwardSetup {
    pub r_w0: DVector<f64>,
    pub matched: bool,
}

fn check_setup(cfg: &PlantConfig, exo: &ExoSystem, r_w0: &DVector<f64>, x0: Option<&Profile>) -> Result<()> {
    if r_w0.len() != exo.dim() {
        return Err(Error::Config(format!("r_w0 has {} entries, expected {}", r_w0.len(), exo.dim())));
    }
    if r_w0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("r_w0 is not finite".into()));
    }
    if let Some(x0) = x0 {
        if x0.grid() != cfg.grid() {
            return Err(Error::Config("initial state grid differs from plant grid".into()));
        }
    }
    Ok(())
}

/// Output-feedback loop: regulator driven by the measurement only, plant
/// forced by `b u_ff + (Π + Π₀) L_y ε + k₁ b ε + b_d d`.
pub fn simulate_output_feedback(
    cfg: &PlantConfig,
    exo: &ExoSystem,
    params: &RegulatorParams,
    r_w0: &DVector<f64>,
    x0: &Profile,
    opts: &SimOptions,
) -> Result<SimTrace> {
    check_setup(cfg, exo, r_w0, Some(x0))?;
    if params.gamma.len() != exo.dim() || params.pi.first().map(|p| p.grid()) != Some(cfg.grid()) {
        return Err(Error::Config("regulator parameters do not match plant/exosystem".into()));
    }
    let dt = cfg.dt();
    let steps = opts.steps(dt)?;
    let corr = params.correction_profile(cfg);
    let (b, bd, corr) = (cfg.b().values(), cfg.b_d().values(), corr.values());
    let courant = dt / cfg.grid().dz();

    let mut trace = SimTrace::with_capacity(exo.dim(), steps + 1);
    let mut plan = SnapshotPlan::new(&opts.snapshots);
    let mut x = x0.values().to_vec();
    x[0] = 0.0;
    let mut r_w = r_w0.clone();
    let mut forcing = vec![0.0; x.len()];

    for k in 0..=steps {
        let t = k as f64 * dt;
        let w = exo.exo_state(t);
        let (d, y_r) = exo.exo_outputs(&w);
        let state = Profile::from_vec_unchecked(cfg.grid(), x);
        let (y, y_m) = cfg.outputs(&state)?;
        let step = regulator_step(exo, &r_w, y_m, params, dt);
        trace.push(Sample {
            t,
            y,
            y_m,
            y_r,
            d,
            u_ff: step.u_ff,
            eps: step.eps,
            w: w.as_slice(),
            r_w: r_w.as_slice(),
        });
        plan.capture(t, dt, &state, &mut trace.snapshots);
        x = state.into_values();
        if k == steps {
            break;
        }
        for i in 0..forcing.len() {
            forcing[i] = b[i] * step.u_ff + corr[i] * step.eps + bd[i] * d;
        }
        advance(&mut x, cfg.g().values(), &forcing, courant, dt)?;
        if step.r_w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("regulator state diverged at t = {t}")));
        }
        r_w = step.r_w;
    }
    Ok(trace)
}

/// Feedforward loop: `ṙ_w = S r_w` evaluated exactly, `u = Γ r_w`.
pub fn simulate_feedforward(
    cfg: &PlantConfig,
    exo: &ExoSystem,
    gamma: &nalgebra::RowDVector<f64>,
    pi: &[Profile],
    setup: &FeedforwardSetup,
    opts: &SimOptions,
) -> Result<SimTrace> {
    check_setup(cfg, exo, &setup.r_w0, None)?;
    if gamma.len() != exo.dim() || pi.len() != exo.dim() {
        return Err(Error::Config("Γ and Π must match the exosystem dimension".into()));
    }
    let dt = cfg.dt();
    let steps = opts.steps(dt)?;
    let x0 = if setup.matched {
        manifold_state(pi, &setup.r_w0)
    } else {
        Profile::zeros(cfg.grid())
    };
    let z0 = cfg.z0();
    let cm_pi: Vec<f64> = pi.iter().map(|p| p.eval_at(z0)).collect::<Result<_>>()?;
    let (b, bd) = (cfg.b().values(), cfg.b_d().values());
    let courant = dt / cfg.grid().dz();

    let mut trace = SimTrace::with_capacity(exo.dim(), steps + 1);
    let mut plan = SnapshotPlan::new(&opts.snapshots);
    let mut x = x0.into_values();
    x[0] = 0.0;
    let mut forcing = vec![0.0; x.len()];

    for k in 0..=steps {
        let t = k as f64 * dt;
        let w = exo.exo_state(t);
        let r_w = exo.propagate(&setup.r_w0, t);
        let (d, y_r) = exo.exo_outputs(&w);
        let state = Profile::from_vec_unchecked(cfg.grid(), x);
        let (y, y_m) = cfg.outputs(&state)?;
        let u_ff = gamma.dot(&r_w.transpose());
        let eps = y_m - cm_pi.iter().zip(r_w.iter()).map(|(c, r)| c * r).sum::<f64>();
        trace.push(Sample { t, y, y_m, y_r, d, u_ff, eps, w: w.as_slice(), r_w: r_w.as_slice() });
        plan.capture(t, dt, &state, &mut trace.snapshots);
        x = state.into_values();
        if k == steps {
            break;
        }
        for i in 0..forcing.len() {
            forcing[i] = b[i] * u_ff + bd[i] * d;
        }
        advance(&mut x, cfg.g().values(), &forcing, courant, dt)?;
    }
    Ok(trace)
}

/// Plant driven by the exosystem disturbance with `u ≡ 0`; the trace carries
/// `w`, `d` and `y_r` so `e` is the uncontrolled tracking error.
pub fn simulate_disturbed(cfg: &PlantConfig, exo: &ExoSystem, x0: &Profile, opts: &SimOptions) -> Result<SimTrace> {
    check_setup(cfg, exo, exo.w0(), Some(x0))?;
    let dt = cfg.dt();
    let steps = opts.steps(dt)?;
    let bd = cfg.b_d().values();
    let courant = dt / cfg.grid().dz();
    let zeros = vec![0.0; exo.dim()];

    let mut trace = SimTrace::with_capacity(exo.dim(), steps + 1);
    let mut plan = SnapshotPlan::new(&opts.snapshots);
    let mut x = x0.values().to_vec();
    x[0] = 0.0;
    let mut forcing = vec![0.0; x.len()];

    for k in 0..=steps {
        let t = k as f64 * dt;
        let w = exo.exo_state(t);
        let (d, y_r) = exo.exo_outputs(&w);
        let state = Profile::from_vec_unchecked(cfg.grid(), x);
        let (y, y_m) = cfg.outputs(&state)?;
        trace.push(Sample { t, y, y_m, y_r, d, u_ff: 0.0, eps: 0.0, w: w.as_slice(), r_w: &zeros });
        plan.capture(t, dt, &state, &mut trace.snapshots);
        x = state.into_values();
        if k == steps {
            break;
        }
        for (f, b) in forcing.iter_mut().zip(bd) {
            *f = b * d;
        }
        advance(&mut x, cfg.g().values(), &forcing, courant, dt)?;
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingMetrics {
    pub max_err_after: f64,
    pub rms_err_after: f64,
    /// First time after which `|e|` stays within 5% of the reference
    /// amplitude; infinite if the final sample is still outside the band.
    pub settle_time: f64,
}

/// Error statistics over `t > transient` plus the 5% settling time.
pub fn tracking_metrics(trace: &SimTrace, transient: f64) -> Result<TrackingMetrics> {
    let window: Vec<f64> = trace
        .times
        .iter()
        .zip(&trace.e)
        .filter(|(t, _)| **t > transient)
        .map(|(_, e)| e.abs())
        .collect();
    if window.is_empty() {
        return Err(Error::Argument(format!("no samples after transient {transient}")));
    }
    let max_err_after = window.iter().copied().fold(0.0, f64::max);
    let rms_err_after = (window.iter().map(|e| e * e).sum::<f64>() / window.len() as f64).sqrt();

    let amp = trace.y_r.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let band = 0.05 * amp;
    let settle_time = match trace.e.iter().rposition(|e| e.abs() > band) {
        None => trace.times[0],
        Some(last) if last + 1 < trace.len() => trace.times[last + 1],
        Some(_) => f64::INFINITY,
    };
    Ok(TrackingMetrics { max_err_after, rms_err_after, settle_time })
}

/// Maximum `|e|` over consecutive windows of length `window` covering `[start, end)`.
pub fn windowed_max_error(trace: &SimTrace, start: f64, end: f64, window: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut a = start;
    while a + window <= end + 1e-12 {
        let b = a + window;
        let m = trace
            .times
            .iter()
            .zip(&trace.e)
            .filter(|(t, _)| **t >= a && **t < b)
            .map(|(_, e)| e.abs())
            .fold(0.0, f64::max);
        out.push(m);
        a = b;
    }
    out
}
