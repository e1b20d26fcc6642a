use crate::grid::Profile;

/// State profile captured at one requested instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub x: Profile,
}

/// One recorded instant of a simulation.
#[derive(Debug, Clone, Default)]
pub struct Sample<'a> {
    pub t: f64,
    pub y: f64,
    pub y_m: f64,
    pub y_r: f64,
    pub d: f64,
    pub u_ff: f64,
    pub eps: f64,
    pub w: &'a [f64],
    pub r_w: &'a [f64],
}

/// Time series produced by every simulation driver.
///
/// All series have one entry per entry of `times`; `e` is always `y - y_r`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    pub y_m: Vec<f64>,
    pub y_r: Vec<f64>,
    pub e: Vec<f64>,
    pub d: Vec<f64>,
    pub u_ff: Vec<f64>,
    pub eps: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub r_w: Vec<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
    exo_dim: usize,
}

impl SimTrace {
    pub fn with_capacity(exo_dim: usize, samples: usize) -> Self {
        Self {
            times: Vec::with_capacity(samples),
            y: Vec::with_capacity(samples),
            y_m: Vec::with_capacity(samples),
            y_r: Vec::with_capacity(samples),
            e: Vec::with_capacity(samples),
            d: Vec::with_capacity(samples),
            u_ff: Vec::with_capacity(samples),
            eps: Vec::with_capacity(samples),
            w: Vec::with_capacity(samples),
            r_w: Vec::with_capacity(samples),
            snapshots: Vec::new(),
            exo_dim,
        }
    }

    pub fn exo_dim(&self) -> usize {
        self.exo_dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, s: Sample<'_>) {
        debug_assert_eq!(s.w.len(), self.exo_dim);
        debug_assert_eq!(s.r_w.len(), self.exo_dim);
        self.times.push(s.t);
        self.y.push(s.y);
        self.y_m.push(s.y_m);
        self.y_r.push(s.y_r);
        self.e.push(s.y - s.y_r);
        self.d.push(s.d);
        self.u_ff.push(s.u_ff);
        self.eps.push(s.eps);
        self.w.push(s.w.to_vec());
        self.r_w.push(s.r_w.to_vec());
    }

    /// Largest `|e|` over samples with `t >= from`.
    pub fn max_abs_error_from(&self, from: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.e)
            .filter(|(t, _)| **t >= from)
            .map(|(_, e)| e.abs())
            .fold(0.0, f64::max)
    }
}

/// Snapshot times resolved to step indices.
pub(crate) struct SnapshotPlan {
    pending: Vec<f64>,
}

impl SnapshotPlan {
    pub(crate) fn new(times: &[f64]) -> Self {
        let mut pending = times.to_vec();
        pending.sort_by(|a, b| b.total_cmp(a));
        Self { pending }
    }

    /// Records `x` for every requested time within half a step of `t`.
    pub(crate) fn capture(&mut self, t: f64, dt: f64, x: &Profile, out: &mut Vec<Snapshot>) {
        while let Some(&ts) = self.pending.last() {
            if ts > t + 0.5 * dt {
                break;
            }
            self.pending.pop();
            out.push(Snapshot { t, x: x.clone() });
        }
    }
}
