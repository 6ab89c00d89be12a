//! The `j = N/2` Dicke subspace of `N` spin-1/2 particles, its collective
//! operators, spin coherent states, and the embedding into a truncated
//! bosonic mode that the large-`N` limit runs through.
//!
//! Basis index `n` counts up-spins: `n = 0` is the all-down state and
//! `J_z + N/2 = diag(n)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{RevivalError, Result};
use crate::linalg::{inner, norm_sq, normalize, LogFactorials, Operator, C64, I};

/// Amplitudes must sum to one in modulus squared within this tolerance.
pub const NORM_TOL: f64 = 1e-12;

/// Largest probability allowed to fall above a Fock cutoff.
pub const MAX_LEAKAGE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DickeBasis {
    n_spins: usize,
}

impl DickeBasis {
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins < 1 {
            return Err(RevivalError::InvalidBasis(n_spins as i64));
        }
        Ok(Self { n_spins })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.n_spins + 1
    }

    /// Total spin `j = N/2`.
    pub fn j(&self) -> f64 {
        self.n_spins as f64 / 2.0
    }
}

/// Anything carrying a plain amplitude vector.
pub trait Amplitudes {
    fn amplitudes(&self) -> &[C64];

    fn norm_sq(&self) -> f64 {
        norm_sq(self.amplitudes())
    }
}

impl Amplitudes for [C64] {
    fn amplitudes(&self) -> &[C64] {
        self
    }
}

impl Amplitudes for Vec<C64> {
    fn amplitudes(&self) -> &[C64] {
        self
    }
}

/// Pure state of the big spin in the Dicke basis.
#[derive(Clone, Debug, PartialEq)]
pub struct BigSpinState {
    basis: DickeBasis,
    amplitudes: Vec<C64>,
}

impl BigSpinState {
    /// Wraps amplitudes that are already normalized.
    pub fn new(basis: DickeBasis, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(RevivalError::DimensionMismatch { expected: basis.dim(), actual: amplitudes.len() });
        }
        let n = norm_sq(&amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(RevivalError::NotNormalized { norm_sq: n });
        }
        Ok(Self { basis, amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(basis: DickeBasis, mut amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(RevivalError::DimensionMismatch { expected: basis.dim(), actual: amplitudes.len() });
        }
        if normalize(&mut amplitudes) == 0.0 {
            return Err(RevivalError::NotNormalized { norm_sq: 0.0 });
        }
        Ok(Self { basis, amplitudes })
    }

    /// Dicke state with `n` up-spins.
    pub fn dicke(basis: DickeBasis, n: usize) -> Result<Self> {
        if n > basis.n_spins() {
            return Err(RevivalError::InvalidParameter {
                name: "n",
                reason: format!("Dicke index {n} exceeds N = {}", basis.n_spins()),
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        amps[n] = C64::new(1.0, 0.0);
        Ok(Self { basis, amplitudes: amps })
    }

    #[cfg(test)]
    pub(crate) fn from_raw(basis: DickeBasis, amplitudes: Vec<C64>) -> Self {
        Self { basis, amplitudes }
    }

    pub fn basis(&self) -> DickeBasis {
        self.basis
    }

    pub fn n_spins(&self) -> usize {
        self.basis.n_spins()
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn overlap(&self, other: &BigSpinState) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }
}

impl Amplitudes for BigSpinState {
    fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }
}

/// Truncated single-mode Fock state `sum_{n <= cutoff} c_n |n>`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    cutoff: usize,
    amplitudes: Vec<C64>,
}

impl FockState {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Mean excitation `<a^dagger a>`.
    pub fn mean_number(&self) -> f64 {
        self.amplitudes.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum()
    }

    /// Overlap `<self|other>`; the shorter vector is zero-padded.
    pub fn overlap(&self, other: &FockState) -> C64 {
        let m = self.amplitudes.len().min(other.amplitudes.len());
        inner(&self.amplitudes[..m], &other.amplitudes[..m])
    }
}

impl Amplitudes for FockState {
    fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }
}

/// Parameters of `|N, z>`; with `scaled` the state is `|N, zeta / sqrt(N)>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinCoherentParams {
    pub n_spins: usize,
    pub zeta: C64,
    pub scaled: bool,
}

impl SpinCoherentParams {
    pub fn scaled(n_spins: usize, zeta: C64) -> Self {
        Self { n_spins, zeta, scaled: true }
    }

    pub fn unscaled(n_spins: usize, zeta: C64) -> Self {
        Self { n_spins, zeta, scaled: false }
    }

    /// The single-spin parameter actually used in the product state.
    pub fn effective_zeta(&self) -> C64 {
        if self.scaled {
            self.zeta / (self.n_spins as f64).sqrt()
        } else {
            self.zeta
        }
    }
}

/// Spin coherent state in the Dicke basis,
/// `C_n = (1+|z|^2)^(-N/2) sqrt(C(N,n)) z^n`.
pub fn spin_coherent(params: SpinCoherentParams) -> Result<BigSpinState> {
    let basis = DickeBasis::new(params.n_spins)?;
    let n_spins = params.n_spins;
    let z = params.effective_zeta();
    let lf = LogFactorials::new(n_spins);
    let mut amps = vec![C64::new(0.0, 0.0); n_spins + 1];
    if z.norm() == 0.0 {
        amps[0] = C64::new(1.0, 0.0);
    } else {
        let (r, phase) = z.to_polar();
        let ln_pref = -0.5 * n_spins as f64 * r.powi(2).ln_1p();
        for (n, a) in amps.iter_mut().enumerate() {
            let ln_mag = ln_pref + 0.5 * lf.ln_binomial(n_spins, n) + n as f64 * r.ln();
            *a = C64::from_polar(ln_mag.exp(), n as f64 * phase);
        }
        normalize(&mut amps);
    }
    Ok(BigSpinState { basis, amplitudes: amps })
}

/// Collective operators on the Dicke subspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    /// `J_z + N/2 = diag(n)`.
    JzShifted,
    /// `J_+ / sqrt(N)`.
    JplusScaled,
    /// `J_- / sqrt(N)`.
    JminusScaled,
    /// Unscaled `J_y = (J_+ - J_-) / 2i`.
    Jy,
    /// Unscaled `J_x = (J_+ + J_-) / 2`.
    Jx,
    /// `J^2`, built from the ladder matrices.
    Jsquared,
    /// `J_- J_+ / N = diag((n+1)(1 - n/N))`.
    JminusJplusOverN,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 7] = [
        OperatorKind::JzShifted,
        OperatorKind::JplusScaled,
        OperatorKind::JminusScaled,
        OperatorKind::Jy,
        OperatorKind::Jx,
        OperatorKind::Jsquared,
        OperatorKind::JminusJplusOverN,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::JzShifted => "Jz_shifted",
            OperatorKind::JplusScaled => "Jplus_scaled",
            OperatorKind::JminusScaled => "Jminus_scaled",
            OperatorKind::Jy => "Jy",
            OperatorKind::Jx => "Jx",
            OperatorKind::Jsquared => "Jsquared",
            OperatorKind::JminusJplusOverN => "JminusJplus_over_N",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = RevivalError;

    fn from_str(s: &str) -> Result<Self> {
        OperatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| RevivalError::InvalidParameter {
                name: "kind",
                reason: format!("unknown collective operator '{s}'"),
            })
    }
}

/// `<n+1| J_+/sqrt(N) |n> = sqrt((n+1)(1 - n/N))`.
pub fn raising_element_scaled(n_spins: usize, n: usize) -> f64 {
    let nf = n as f64;
    ((nf + 1.0) * (1.0 - nf / n_spins as f64)).max(0.0).sqrt()
}

/// Unscaled `<n+1| J_+ |n> = sqrt((n+1)(N-n))`.
pub fn raising_element(n_spins: usize, n: usize) -> f64 {
    (((n + 1) * (n_spins - n)) as f64).sqrt()
}

fn ladder(n_spins: usize, scaled: bool) -> DMatrix<C64> {
    let d = n_spins + 1;
    let mut m = DMatrix::zeros(d, d);
    for n in 0..n_spins {
        let e = if scaled { raising_element_scaled(n_spins, n) } else { raising_element(n_spins, n) };
        m[(n + 1, n)] = C64::new(e, 0.0);
    }
    m
}

pub fn collective_operator(kind: OperatorKind, basis: DickeBasis) -> Result<Operator> {
    let n_spins = basis.n_spins();
    let d = basis.dim();
    match kind {
        OperatorKind::JzShifted => Operator::hermitian(DMatrix::from_fn(d, d, |r, c| {
            if r == c { C64::new(r as f64, 0.0) } else { C64::new(0.0, 0.0) }
        })),
        OperatorKind::JplusScaled => Operator::general(ladder(n_spins, true)),
        OperatorKind::JminusScaled => Operator::general(ladder(n_spins, true).adjoint()),
        OperatorKind::Jy => {
            let jp = ladder(n_spins, false);
            let jm = jp.adjoint();
            Operator::hermitian((jp - jm) / (2.0 * I))
        }
        OperatorKind::Jx => {
            let jp = ladder(n_spins, false);
            let jm = jp.adjoint();
            Operator::hermitian((jp + jm) * C64::new(0.5, 0.0))
        }
        OperatorKind::Jsquared => {
            // J^2 = J_- J_+ + J_z^2 + J_z
            let jp = ladder(n_spins, false);
            let jm = jp.adjoint();
            let jz = DMatrix::from_fn(d, d, |r, c| {
                if r == c { C64::new(r as f64 - basis.j(), 0.0) } else { C64::new(0.0, 0.0) }
            });
            let m = &jm * &jp + &jz * &jz + &jz;
            let m = (m.clone() + m.adjoint()) * C64::new(0.5, 0.0);
            Operator::hermitian(m)
        }
        OperatorKind::JminusJplusOverN => Operator::hermitian(DMatrix::from_fn(d, d, |r, c| {
            if r == c {
                let rf = r as f64;
                C64::new((rf + 1.0) * (1.0 - rf / n_spins as f64), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })),
    }
}

/// `<psi|op|psi>`.
pub fn expectation<S: Amplitudes + ?Sized>(op: &Operator, state: &S) -> Result<C64> {
    op.expectation(state.amplitudes())
}

/// `<J_z + N/2>` on `|N, zeta/sqrt(N)>` from the binomial profile.
pub fn mean_excitation(n_spins: usize, zeta: C64) -> Result<f64> {
    let s = spin_coherent(SpinCoherentParams::scaled(n_spins, zeta))?;
    Ok(s.amplitudes().iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum())
}

/// Closed form `<J_z + N/2> = |zeta|^2 / (1 + |zeta|^2 / N)` for the scaled state.
pub fn mean_excitation_closed_form(n_spins: usize, zeta: C64) -> f64 {
    let x = zeta.norm_sqr();
    x / (1.0 + x / n_spins as f64)
}

/// `<[J_-/sqrt(N), J_+/sqrt(N)]>` on `|N, zeta/sqrt(N)>`, evaluated with the
/// explicit ladder matrices.
pub fn commutator_defect(n_spins: usize, zeta: C64) -> Result<f64> {
    let basis = DickeBasis::new(n_spins)?;
    let jm = collective_operator(OperatorKind::JminusScaled, basis)?;
    let jp = collective_operator(OperatorKind::JplusScaled, basis)?;
    let comm = jm.commutator(&jp)?;
    let state = spin_coherent(SpinCoherentParams::scaled(n_spins, zeta))?;
    Ok(expectation(&comm, &state)?.re)
}

/// The isometry sending Dicke state `n` to Fock state `n`.
pub fn embed_to_fock(state: &BigSpinState) -> FockState {
    FockState { cutoff: state.n_spins(), amplitudes: state.amplitudes().to_vec() }
}

/// Smallest cutoff accepted for a coherent state of mean `|zeta|^2`.
pub fn min_fock_cutoff(zeta: C64) -> usize {
    let m = zeta.norm_sqr();
    (m + 10.0 * m.sqrt()).ceil() as usize
}

/// Truncated bosonic coherent state `e^{-|zeta|^2/2} zeta^n / sqrt(n!)`,
/// renormalized after truncation.
pub fn fock_coherent(zeta: C64, cutoff: usize) -> Result<FockState> {
    let mean = zeta.norm_sqr();
    let mut amps = vec![C64::new(0.0, 0.0); cutoff + 1];
    if mean == 0.0 {
        amps[0] = C64::new(1.0, 0.0);
        return Ok(FockState { cutoff, amplitudes: amps });
    }
    let lf = LogFactorials::new(cutoff);
    let (r, phase) = zeta.to_polar();
    for (n, a) in amps.iter_mut().enumerate() {
        let ln_mag = -0.5 * mean + n as f64 * r.ln() - 0.5 * lf.ln_fact(n);
        *a = C64::from_polar(ln_mag.exp(), n as f64 * phase);
    }
    let kept = norm_sq(&amps);
    let leakage = (1.0 - kept).max(0.0);
    if cutoff < min_fock_cutoff(zeta) || leakage >= MAX_LEAKAGE {
        return Err(RevivalError::TruncationLeakage { cutoff, mean, leakage });
    }
    normalize(&mut amps);
    Ok(FockState { cutoff, amplitudes: amps })
}

/// Infidelity `1 - |<zeta | f |N, zeta/sqrt(N)>|^2` between the embedded
/// binomial profile and the bosonic coherent state.
pub fn poisson_convergence(n_spins: usize, zeta: C64) -> Result<f64> {
    let spin = spin_coherent(SpinCoherentParams::scaled(n_spins, zeta))?;
    let embedded = embed_to_fock(&spin);
    let cutoff = n_spins.max(min_fock_cutoff(zeta)).max(1);
    let coherent = fock_coherent(zeta, cutoff)?;
    let ov = coherent.overlap(&embedded);
    Ok((1.0 - ov.norm_sqr()).max(0.0))
}
