//! Signal generator `ẇ = S w`, `d = F w`, `y_r = Q w` with skew-symmetric `S`.

use nalgebra::{DMatrix, DVector, RowDVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::C64;

const SKEW_TOL: f64 = 1e-12;
const FREQ_TOL: f64 = 1e-9;

/// One eigenvalue `iω` of `S` with its unit eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub omega: f64,
    pub psi: DVector<C64>,
}

impl EigenPair {
    pub fn eigenvalue(&self) -> C64 {
        C64::new(0.0, self.omega)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExoSystem {
    s: DMatrix<f64>,
    f: RowDVector<f64>,
    q: RowDVector<f64>,
    w0: DVector<f64>,
    pairs: Vec<EigenPair>,
}

impl ExoSystem {
    pub fn new(s: DMatrix<f64>, f: RowDVector<f64>, q: RowDVector<f64>, w0: DVector<f64>) -> Result<Self> {
        let n = s.nrows();
        if n == 0 || s.ncols() != n {
            return Err(Error::Config(format!("S must be square and non-empty, got {}×{}", s.nrows(), s.ncols())));
        }
        if f.len() != n || q.len() != n || w0.len() != n {
            return Err(Error::Config(format!(
                "F, Q and w0 must have length {n} (got {}, {}, {})",
                f.len(),
                q.len(),
                w0.len()
            )));
        }
        let all_finite = s.iter().chain(f.iter()).chain(q.iter()).chain(w0.iter()).all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Numeric("exosystem matrices contain non-finite entries".into()));
        }
        let asym = (&s + s.transpose()).amax();
        if asym > SKEW_TOL * (1.0 + s.amax()) {
            return Err(Error::Config(format!("S is not skew-symmetric (|S + Sᵀ|max = {asym:e})")));
        }
        let pairs = decompose(&s)?;
        Ok(Self { s, f, q, w0, pairs })
    }

    /// Harmonic generator with `S = [[0, α], [−α, 0]]`, `F = [0, 1]`,
    /// `Q = [1, 0]`, `w(0) = [0, Υ]`: `d = Υ cos αt`, `y_r = Υ sin αt`.
    pub fn harmonic(alpha: f64, upsilon: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_row_slice(2, 2, &[0.0, alpha, -alpha, 0.0]),
            RowDVector::from_row_slice(&[0.0, 1.0]),
            RowDVector::from_row_slice(&[1.0, 0.0]),
            DVector::from_column_slice(&[0.0, upsilon]),
        )
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }
    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }
    pub fn f(&self) -> &RowDVector<f64> {
        &self.f
    }
    pub fn q(&self) -> &RowDVector<f64> {
        &self.q
    }
    pub fn w0(&self) -> &DVector<f64> {
        &self.w0
    }

    pub fn with_initial_state(mut self, w0: DVector<f64>) -> Result<Self> {
        if w0.len() != self.dim() {
            return Err(Error::Config(format!("w0 must have length {}", self.dim())));
        }
        self.w0 = w0;
        Ok(self)
    }

    pub fn with_readouts(mut self, f: RowDVector<f64>, q: RowDVector<f64>) -> Result<Self> {
        if f.len() != self.dim() || q.len() != self.dim() {
            return Err(Error::Config(format!("F and Q must have length {}", self.dim())));
        }
        self.f = f;
        self.q = q;
        Ok(self)
    }

    /// `w(t) = exp(S t) w0`.
    pub fn exo_state(&self, t: f64) -> DVector<f64> {
        self.propagate(&self.w0, t)
    }

    /// `exp(S t) v` for an arbitrary vector `v`.
    pub fn propagate(&self, v: &DVector<f64>, t: f64) -> DVector<f64> {
        if self.dim() == 2 {
            let a = self.s[(0, 1)];
            let (sn, cs) = (a * t).sin_cos();
            return DVector::from_column_slice(&[cs * v[0] + sn * v[1], -sn * v[0] + cs * v[1]]);
        }
        let vc = v.map(|x| C64::new(x, 0.0));
        let mut out = DVector::<C64>::zeros(self.dim());
        for p in &self.pairs {
            let coeff = p.psi.dotc(&vc) * C64::new(0.0, p.omega * t).exp();
            out += &p.psi * coeff;
        }
        out.map(|z| z.re)
    }

    /// `(d, y_r) = (F w, Q w)`.
    pub fn exo_outputs(&self, w: &DVector<f64>) -> (f64, f64) {
        (self.f.dot(&w.transpose()), self.q.dot(&w.transpose()))
    }

    /// Orthonormal eigenpairs of `S`; conjugate pairs appear as `(+ω, −ω)`
    /// with `ψ₋ = conj(ψ₊)`, sorted by decreasing `|ω|`, zero modes last.
    pub fn eigen_pairs(&self) -> &[EigenPair] {
        &self.pairs
    }
}

/// Spectral decomposition through the Hermitian matrix `iS`:
/// `iS ψ = μ ψ` gives `S ψ = iω ψ` with `ω = −μ`.
fn decompose(s: &DMatrix<f64>) -> Result<Vec<EigenPair>> {
    let n = s.nrows();
    let scale = 1.0 + s.amax();
    let h = s.map(|x| C64::new(0.0, x));
    let eig = SymmetricEigen::new(h);

    let mut positive = Vec::new();
    let mut zero_cols = Vec::new();
    for (k, &mu) in eig.eigenvalues.iter().enumerate() {
        let omega = -mu;
        let col = eig.eigenvectors.column(k).into_owned();
        if omega > FREQ_TOL * scale {
            positive.push((omega, normalize_phase(col)));
        } else if omega.abs() <= FREQ_TOL * scale {
            zero_cols.push(col);
        }
    }
    positive.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut pairs = Vec::with_capacity(n);
    for (omega, psi) in positive {
        let conj = psi.map(|z| z.conj());
        pairs.push(EigenPair { omega, psi });
        pairs.push(EigenPair { omega: -omega, psi: conj });
    }
    for v in real_basis(&zero_cols) {
        pairs.push(EigenPair { omega: 0.0, psi: v.map(|x| C64::new(x, 0.0)) });
    }
    if pairs.len() != n {
        return Err(Error::Config(format!(
            "S spectrum could not be split into conjugate pairs ({} of {n} modes)",
            pairs.len()
        )));
    }
    for p in &pairs {
        let resid = (s.map(|x| C64::new(x, 0.0)) * &p.psi - &p.psi * p.eigenvalue()).camax();
        if resid > 1e-10 * scale {
            return Err(Error::Config(format!("eigen-decomposition of S is inaccurate (residual {resid:e})")));
        }
    }
    Ok(pairs)
}

/// Rotates `v` so its last significant component is real and positive.
fn normalize_phase(v: DVector<C64>) -> DVector<C64> {
    let anchor = v.iter().rev().find(|z| z.norm() > 1e-8).copied().unwrap_or(C64::new(1.0, 0.0));
    let phase = anchor.conj() / anchor.norm();
    let mut out = v * phase;
    let last = out.iter().rposition(|z| z.norm() > 1e-8).unwrap_or(0);
    out[last] = C64::new(out[last].norm(), 0.0);
    out
}

/// Real orthonormal basis of the span of the (conjugation-invariant) kernel vectors.
fn real_basis(cols: &[DVector<C64>]) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let candidates = cols.iter().flat_map(|c| [c.map(|z| z.re), c.map(|z| z.im)]);
    for mut v in candidates {
        if basis.len() == cols.len() {
            break;
        }
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / norm);
        }
    }
    basis
}
