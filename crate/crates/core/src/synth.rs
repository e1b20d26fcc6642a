//! Regulator synthesis.
//!
//! The feedforward pair `(Γ, Π)` solves `ΠS − AΠ = BΓ + P`, `C Π = Q` with
//! `P = B_d F`. `Γ` comes from one scalar complex equation per eigenpair of
//! `S`; the columns of `Π` then follow from the real componentwise ODEs
//!
//! ```text
//! Π_j'(z) = g(z) Π_j(z) − Σ_m S_mj Π_m(z) + b(z) γ_j + b_d(z) F_j,   Π_j(0) = 0.
//! ```
//!
//! The auxiliary profiles `Π₀` solve `Π₀S − (A + k₁ B C_m) Π₀ = −P` the same
//! way. With an output-injection gain `L_y` making `S + L_y C_m Π₀` Hurwitz,
//! the distributed gain `k(z) = k₁ + (Π(z) + Π₀(z)) L_y / b(z)` decouples the
//! error dynamics into a block-triangular form with stable diagonal blocks.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::exosystem::ExoSystem;
use crate::grid::{Profile, C64};
use crate::linalg;
use crate::ode::{self, At, Sampled};
use crate::plant::PlantConfig;
use crate::spectral::transfer_value;

/// Allowed deviation of `Π_j(z₁)` from `Q_j`.
pub const CONSTRAINT_TOL: f64 = 1e-3;
/// Upper bound on observer pole magnitudes chosen by the gain search, so the
/// regulator stays non-stiff at the plant step.
pub const MAX_OBSERVER_RATE: f64 = 10.0;
/// Allowed pointwise violation of `k₂ b = (Π + Π₀) L_y`.
pub const SEPARATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RegulatorParams {
    pub gamma: RowDVector<f64>,
    pub pi: Vec<Profile>,
    pub pi0: Vec<Profile>,
    pub ly: DVector<f64>,
    pub k1: f64,
    pub k_profile: Profile,
    /// `[Π_1(z₀), …, Π_n(z₀)]`
    pub cm_pi: RowDVector<f64>,
    /// `[Π₀_1(z₀), …, Π₀_n(z₀)]`
    pub cm_pi0: RowDVector<f64>,
}

impl RegulatorParams {
    /// `S + L_y · C_m Π₀`, the observer block of the decoupled error dynamics.
    pub fn observer_matrix(&self, exo: &ExoSystem) -> DMatrix<f64> {
        exo.s() + &self.ly * &self.cm_pi0
    }

    /// Distributed injection profile `(Π + Π₀) L_y + k₁ b`, equal to `k(z) b(z)`.
    pub fn correction_profile(&self, cfg: &PlantConfig) -> Profile {
        let n = cfg.grid().n_points();
        let mut v: Vec<f64> = cfg.b().values().iter().map(|b| self.k1 * b).collect();
        for (j, l) in self.ly.iter().enumerate() {
            let (p, p0) = (self.pi[j].values(), self.pi0[j].values());
            for k in 0..n {
                v[k] += (p[k] + p0[k]) * l;
            }
        }
        Profile::from_vec_unchecked(cfg.grid(), v)
    }

    /// `x = Π w` for an exosystem state `w`.
    pub fn manifold_state(&self, w: &DVector<f64>) -> Profile {
        manifold_state(&self.pi, w)
    }

    /// Parameters of a problem with nothing to regulate (`F = 0`, `Q = 0`).
    fn trivial(cfg: &PlantConfig, n: usize) -> Self {
        let zero = Profile::zeros(cfg.grid());
        Self {
            gamma: RowDVector::zeros(n),
            pi: vec![zero.clone(); n],
            pi0: vec![zero.clone(); n],
            ly: DVector::zeros(n),
            k1: 0.0,
            k_profile: zero,
            cm_pi: RowDVector::zeros(n),
            cm_pi0: RowDVector::zeros(n),
        }
    }
}

pub(crate) fn manifold_state(pi: &[Profile], w: &DVector<f64>) -> Profile {
    let grid = pi[0].grid();
    let mut v = vec![0.0; grid.n_points()];
    for (col, wj) in pi.iter().zip(w.iter()) {
        for (acc, p) in v.iter_mut().zip(col.values()) {
            *acc += p * wj;
        }
    }
    Profile::from_vec_unchecked(grid, v)
}

/// Threshold on `|G(iω_k)|` below which the regulator equations are treated
/// as unsolvable.
pub fn zero_tol(exo: &ExoSystem) -> f64 {
    1e-6 * (1.0 + exo.q().norm())
}

/// Feedforward gain `Γ` from the per-eigenvector conditions
/// `G(iω_k) Γψ_k + G_d(iω_k) Fψ_k = Qψ_k`.
pub fn solve_gamma(cfg: &PlantConfig, exo: &ExoSystem) -> Result<RowDVector<f64>> {
    let n = exo.dim();
    let tol = zero_tol(exo);
    let mut gamma = DVector::<C64>::zeros(n);
    for pair in exo.eigen_pairs() {
        let s = pair.eigenvalue();
        let g = transfer_value(cfg, s, cfg.b(), cfg.z1())?.value;
        if g.norm() < tol {
            return Err(Error::InvariantZero { omega: pair.omega, magnitude: g.norm(), tol });
        }
        let gd = transfer_value(cfg, s, cfg.b_d(), cfg.z1())?.value;
        let q_psi = row_apply(exo.q(), &pair.psi);
        let f_psi = row_apply(exo.f(), &pair.psi);
        let c = (q_psi - gd * f_psi) / g;
        // Γ = Σ_k c_k ψ_kᴴ for an orthonormal eigenbasis.
        gamma += pair.psi.map(|z| z.conj()) * c;
    }
    let imag = gamma.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let scale = 1.0 + gamma.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    if imag > 1e-10 * scale || gamma.iter().any(|z| !z.re.is_finite()) {
        return Err(Error::Numeric(format!("feedforward gain has imaginary residue {imag:e}")));
    }
    Ok(RowDVector::from_iterator(n, gamma.iter().map(|z| z.re)))
}

fn row_apply(row: &RowDVector<f64>, v: &DVector<C64>) -> C64 {
    row.iter().zip(v.iter()).map(|(r, z)| z * *r).sum()
}

/// Integrates `Y_j' = g Y_j − Σ_m S_mj Y_m + b·b_coef_j + b_d·bd_coef_j`, `Y(0) = 0`.
fn sylvester_profiles(cfg: &PlantConfig, s: &DMatrix<f64>, b_coef: &[f64], bd_coef: &[f64]) -> Vec<Profile> {
    let n = s.nrows();
    let g = Sampled::new(cfg.g().values());
    let b = Sampled::new(cfg.b().values());
    let bd = Sampled::new(cfg.b_d().values());
    let cols = ode::sweep::<f64>(cfg.grid(), n, |at: At, y, dy| {
        let (gz, bz, bdz) = (g.at(at), b.at(at), bd.at(at));
        for j in 0..n {
            let coupling: f64 = (0..n).map(|m| s[(m, j)] * y[m]).sum();
            dy[j] = gz * y[j] - coupling + bz * b_coef[j] + bdz * bd_coef[j];
        }
    });
    cols.into_iter()
        .map(|c| Profile::from_vec_unchecked(cfg.grid(), c))
        .collect()
}

/// Columns of `Π` for a given `Γ`; checks `|Π_j(z₁) − Q_j| ≤ 1e−3`.
pub fn solve_pi(cfg: &PlantConfig, exo: &ExoSystem, gamma: &RowDVector<f64>) -> Result<Vec<Profile>> {
    if gamma.len() != exo.dim() {
        return Err(Error::Config(format!("Γ has {} entries for a {}-dimensional exosystem", gamma.len(), exo.dim())));
    }
    let pi = sylvester_profiles(cfg, exo.s(), gamma.as_slice(), exo.f().as_slice());
    check_finite(&pi, "Π")?;
    for (j, col) in pi.iter().enumerate() {
        let dev = (col.eval_at(cfg.z1())? - exo.q()[j]).abs();
        if dev > CONSTRAINT_TOL {
            return Err(Error::Synthesis(format!(
                "output constraint violated: |Π_{}(z1) − Q_{}| = {dev:e}",
                j + 1,
                j + 1
            )));
        }
    }
    Ok(pi)
}

/// Columns of `Π₀`. A nonzero `k₁` couples every column to its own value at
/// `z₀`; that nonlocal term is resolved by superposition.
pub fn solve_pi0(cfg: &PlantConfig, exo: &ExoSystem, k1: f64) -> Result<Vec<Profile>> {
    let n = exo.dim();
    let minus_f: Vec<f64> = exo.f().iter().map(|v| -v).collect();
    let zeros = vec![0.0; n];
    let particular = sylvester_profiles(cfg, exo.s(), &zeros, &minus_f);
    check_finite(&particular, "Π₀")?;
    if k1 == 0.0 {
        return Ok(particular);
    }
    if !k1.is_finite() {
        return Err(Error::Numeric(format!("k1 = {k1}")));
    }

    // Π₀ = Y_p + Σ_l c_l Y_l where Y_l carries the forcing k₁ b(z) e_l,
    // and consistency demands c = Π₀(z₀).
    let z0 = cfg.z0();
    let mut m = DMatrix::<f64>::identity(n, n);
    let mut homogeneous = Vec::with_capacity(n);
    for l in 0..n {
        let mut coef = vec![0.0; n];
        coef[l] = k1;
        let y = sylvester_profiles(cfg, exo.s(), &coef, &zeros);
        for j in 0..n {
            m[(j, l)] -= y[j].eval_at(z0)?;
        }
        homogeneous.push(y);
    }
    let rhs = DVector::from_iterator(n, particular.iter().map(|p| p.eval_at(z0).unwrap_or(f64::NAN)));
    if m.determinant().abs() < 1e-12 {
        return Err(Error::Synthesis(format!("superposition system for k1 = {k1} is singular")));
    }
    let c = m
        .lu()
        .solve(&rhs)
        .filter(|c| c.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Synthesis(format!("superposition system for k1 = {k1} is singular")))?;

    let grid = cfg.grid();
    let pi0 = (0..n)
        .map(|j| {
            let mut v = particular[j].values().to_vec();
            for (l, y) in homogeneous.iter().enumerate() {
                for (acc, yv) in v.iter_mut().zip(y[j].values()) {
                    *acc += c[l] * yv;
                }
            }
            Profile::from_vec_unchecked(grid, v)
        })
        .collect::<Vec<_>>();
    check_finite(&pi0, "Π₀")?;
    Ok(pi0)
}

fn check_finite(cols: &[Profile], what: &str) -> Result<()> {
    if cols.iter().flat_map(|c| c.values()).all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{what} profiles diverged")))
    }
}

/// Picks an output-injection gain with `S + L_y · cm_pi0` Hurwitz.
///
/// A supplied candidate is only validated. Otherwise the family
/// `L = −ε cm_pi0ᵀ` is scanned first (it makes `wᵀw` a Lyapunov function
/// whenever the pair is observable) and the member with the fastest decay
/// and no pole beyond [`MAX_OBSERVER_RATE`] wins; a coordinate grid is the
/// fallback.
pub fn choose_ly(s: &DMatrix<f64>, cm_pi0: &RowDVector<f64>, candidate: Option<&DVector<f64>>) -> Result<DVector<f64>> {
    let n = s.nrows();
    if cm_pi0.len() != n {
        return Err(Error::Config(format!("C_mΠ₀ has {} entries, expected {n}", cm_pi0.len())));
    }
    if cm_pi0.amax() == 0.0 {
        return Err(Error::Hurwitz("C_mΠ₀ = 0: output injection cannot move the observer poles".into()));
    }
    let stable = |l: &DVector<f64>| linalg::is_hurwitz(&(s + l * cm_pi0));
    if let Some(l) = candidate {
        if l.len() != n {
            return Err(Error::Config(format!("L_y candidate has {} entries, expected {n}", l.len())));
        }
        return if stable(l) {
            Ok(l.clone())
        } else {
            let eig = linalg::eigenvalues(&(s + l * cm_pi0));
            let eig: Vec<String> = eig.iter().map(|l| format!("{:.6}{:+.6}i", l.re, l.im)).collect();
            Err(Error::Hurwitz(format!("candidate L_y = {:?} leaves eigenvalues [{}]", l.as_slice(), eig.join(", "))))
        };
    }

    let magnitudes: Vec<f64> = (-3..=2).map(|e| 10f64.powi(e)).flat_map(|m| [m, 3.0 * m]).collect();
    let best = magnitudes
        .iter()
        .map(|&eps| cm_pi0.transpose() * (-eps))
        .filter(|l| stable(l) && linalg::spectral_radius(&(s + l * cm_pi0)) <= MAX_OBSERVER_RATE)
        .map(|l| (linalg::spectral_abscissa(&(s + &l * cm_pi0)), l))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    if let Some((_, l)) = best {
        return Ok(l);
    }
    let levels: Vec<f64> = std::iter::once(0.0)
        .chain(magnitudes.iter().flat_map(|&m| [m, -m]))
        .collect();
    let mut idx = vec![0usize; n];
    loop {
        let l = DVector::from_iterator(n, idx.iter().map(|&i| levels[i]));
        if stable(&l) {
            return Ok(l);
        }
        // Odometer over the level grid.
        let mut pos = 0;
        loop {
            if pos == n {
                return Err(Error::Hurwitz("no stabilizing L_y found on the search grid".into()));
            }
            idx[pos] += 1;
            if idx[pos] < levels.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Builds the full parameter set and verifies its structural invariants.
pub fn assemble_params(
    cfg: &PlantConfig,
    exo: &ExoSystem,
    gamma: RowDVector<f64>,
    pi: Vec<Profile>,
    pi0: Vec<Profile>,
    ly: DVector<f64>,
    k1: f64,
) -> Result<RegulatorParams> {
    let n = exo.dim();
    if pi.len() != n || pi0.len() != n || ly.len() != n || gamma.len() != n {
        return Err(Error::Config("parameter dimensions do not match the exosystem".into()));
    }
    if let Some(k) = cfg.b().values().iter().position(|&b| b.abs() < f64::MIN_POSITIVE || !b.is_finite()) {
        return Err(Error::Numeric(format!("b vanishes at node {k}; k₂ = (Π + Π₀)L_y / b is undefined")));
    }
    let grid = cfg.grid();
    let mut k = vec![0.0; grid.n_points()];
    for (node, kv) in k.iter_mut().enumerate() {
        let num: f64 = (0..n).map(|j| (pi[j][node] + pi0[j][node]) * ly[j]).sum();
        *kv = k1 + num / cfg.b()[node];
    }
    let k_profile = Profile::new(grid, k)?;
    let z0 = cfg.z0();
    let cm_pi = RowDVector::from_iterator(n, pi.iter().map(|p| p.eval_at(z0).unwrap_or(f64::NAN)));
    let cm_pi0 = RowDVector::from_iterator(n, pi0.iter().map(|p| p.eval_at(z0).unwrap_or(f64::NAN)));

    let params = RegulatorParams { gamma, pi, pi0, ly, k1, k_profile, cm_pi, cm_pi0 };

    for (j, col) in params.pi.iter().enumerate() {
        let dev = (col.eval_at(cfg.z1())? - exo.q()[j]).abs();
        if dev > CONSTRAINT_TOL {
            return Err(Error::Synthesis(format!("|Π_{}(z1) − Q_{}| = {dev:e}", j + 1, j + 1)));
        }
    }
    let sep = separation_residual(cfg, &params);
    if sep > SEPARATION_TOL {
        return Err(Error::Synthesis(format!("separation identity residual {sep:e}")));
    }
    let obs = params.observer_matrix(exo);
    if !linalg::is_hurwitz(&obs) {
        return Err(Error::Hurwitz(format!("S + L_y C_mΠ₀ has eigenvalues {:?}", linalg::eigenvalues(&obs))));
    }
    Ok(params)
}

/// Options for [`synthesize`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthOptions {
    pub k1: f64,
    pub ly_candidate: Option<DVector<f64>>,
}

/// The full chain: `Γ → Π`, `Π₀`, `L_y`, then `k`.
pub fn synthesize(cfg: &PlantConfig, exo: &ExoSystem, opts: &SynthOptions) -> Result<RegulatorParams> {
    if exo.f().amax() == 0.0 && exo.q().amax() == 0.0 {
        return Ok(RegulatorParams::trivial(cfg, exo.dim()));
    }
    let gamma = solve_gamma(cfg, exo)?;
    let pi = solve_pi(cfg, exo, &gamma)?;
    let pi0 = solve_pi0(cfg, exo, opts.k1)?;
    let cm_pi0 = RowDVector::from_iterator(exo.dim(), pi0.iter().map(|p| p.eval_at(cfg.z0()).unwrap_or(f64::NAN)));
    let ly = choose_ly(exo.s(), &cm_pi0, opts.ly_candidate.as_ref())?;
    assemble_params(cfg, exo, gamma, pi, pi0, ly, opts.k1)
}

/// Finite-difference derivative on the grid: second-order central in the
/// interior, second-order one-sided at both ends.
fn derivative(p: &Profile) -> Vec<f64> {
    let v = p.values();
    let n = v.len();
    let h = p.grid().dz();
    if n < 3 {
        let d = (v[1] - v[0]) / h;
        return vec![d; n];
    }
    (0..n)
        .map(|k| {
            if k == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
            } else if k == n - 1 {
                (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
            } else {
                (v[k + 1] - v[k - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Max-norm residual of `Π_j' − gΠ_j + Σ_m S_mj Π_m − b γ_j − b_d F_j`.
pub fn pi_residual(cfg: &PlantConfig, exo: &ExoSystem, gamma: &RowDVector<f64>, pi: &[Profile]) -> f64 {
    let forcing = |j: usize, k: usize| cfg.b()[k] * gamma[j] + cfg.b_d()[k] * exo.f()[j];
    sylvester_residual(cfg, exo, pi, forcing)
}

/// Max-norm residual of `Π₀_j' − gΠ₀_j + Σ_m S_mj Π₀_m − k₁ b Π₀_j(z₀) + b_d F_j`.
pub fn pi0_residual(cfg: &PlantConfig, exo: &ExoSystem, k1: f64, pi0: &[Profile]) -> f64 {
    let at_z0: Vec<f64> = pi0.iter().map(|p| p.eval_at(cfg.z0()).unwrap_or(f64::NAN)).collect();
    let forcing = |j: usize, k: usize| k1 * cfg.b()[k] * at_z0[j] - cfg.b_d()[k] * exo.f()[j];
    sylvester_residual(cfg, exo, pi0, forcing)
}

fn sylvester_residual(cfg: &PlantConfig, exo: &ExoSystem, cols: &[Profile], forcing: impl Fn(usize, usize) -> f64) -> f64 {
    let s = exo.s();
    let n = cols.len();
    let derivs: Vec<Vec<f64>> = cols.iter().map(derivative).collect();
    let mut worst = 0.0f64;
    for k in 0..cfg.grid().n_points() {
        for j in 0..n {
            let coupling: f64 = (0..n).map(|m| s[(m, j)] * cols[m][k]).sum();
            let r = derivs[j][k] - cfg.g()[k] * cols[j][k] + coupling - forcing(j, k);
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// `max_z |k₂(z) b(z) − (Π(z) + Π₀(z)) L_y|` with `k₂ = k − k₁`.
pub fn separation_residual(cfg: &PlantConfig, params: &RegulatorParams) -> f64 {
    let n = params.ly.len();
    (0..cfg.grid().n_points())
        .map(|k| {
            let k2 = params.k_profile[k] - params.k1;
            let rhs: f64 = (0..n).map(|j| (params.pi[j][k] + params.pi0[j][k]) * params.ly[j]).sum();
            (k2 * cfg.b()[k] - rhs).abs()
        })
        .fold(0.0, f64::max)
}
