//! Quantum Fisher information of cat states under collective `J_y`
//! rotations, and the precision sweeps built from it.

use crate::cat::{cat_fidelity, cat_state, CatSpec};
use crate::dicke::{collective_operator, raising_element, Amplitudes, BigSpinState, OperatorKind};
use crate::error::{Result, RevivalError};
use crate::linalg::{inner, Operator, Spectrum, C64};
use crate::sweep::{CellError, CellOutcome, SweepGrid};

/// Input norm tolerance for [`qfi_jy`].
pub const QFI_NORM_TOL: f64 = 1e-10;

/// Rotation angle `theta = gamma t B_y`; the physical factors are metadata.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseParams {
    pub theta: f64,
    pub gamma: Option<f64>,
    pub b_y: Option<f64>,
    pub t: Option<f64>,
}

impl PhaseParams {
    pub fn new(theta: f64) -> Self {
        Self { theta, gamma: None, b_y: None, t: None }
    }

    pub fn from_field(gamma: f64, b_y: f64, t: f64) -> Self {
        Self { theta: gamma * t * b_y, gamma: Some(gamma), b_y: Some(b_y), t: Some(t) }
    }
}

/// `exp(i theta op) state` for a Hermitian collective operator.
pub fn rotate_about(op: &Operator, state: &BigSpinState, theta: f64) -> Result<BigSpinState> {
    if op.dim() != state.basis().dim() {
        return Err(RevivalError::DimensionMismatch { expected: op.dim(), actual: state.basis().dim() });
    }
    let spectrum = Spectrum::of(op)?;
    BigSpinState::normalized(state.basis(), spectrum.exp_i(state.amplitudes(), theta))
}

/// `exp(i theta J_y) state`, unscaled `J_y`.
pub fn rotate_about_y(state: &BigSpinState, theta: f64) -> Result<BigSpinState> {
    let jy = collective_operator(OperatorKind::Jy, state.basis())?;
    rotate_about(&jy, state, theta)
}

fn check_normalized(state: &BigSpinState) -> Result<()> {
    let n = state.norm_sq();
    if (n - 1.0).abs() > QFI_NORM_TOL {
        return Err(RevivalError::NotNormalized { norm_sq: n });
    }
    Ok(())
}

/// `J_y psi` from the ladder stencil
/// `(J_y psi)_m = (e_{m-1} psi_{m-1} - e_m psi_{m+1}) / 2i`,
/// `e_m = sqrt((m+1)(N-m))`.
fn apply_jy(amps: &[C64]) -> Vec<C64> {
    let n_spins = amps.len() - 1;
    let half_i = C64::new(0.0, 2.0);
    (0..=n_spins)
        .map(|m| {
            let mut acc = C64::new(0.0, 0.0);
            if m > 0 {
                acc += raising_element(n_spins, m - 1) * amps[m - 1];
            }
            if m < n_spins {
                acc -= raising_element(n_spins, m) * amps[m + 1];
            }
            acc / half_i
        })
        .collect()
}

/// `F = 4 (<J_y^2> - <J_y>^2)` for a pure state.
pub fn qfi_jy(state: &BigSpinState) -> Result<f64> {
    check_normalized(state)?;
    let psi = state.amplitudes();
    let v = apply_jy(psi);
    let mean = inner(psi, &v).re;
    let second: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    Ok(4.0 * (second - mean * mean))
}

/// `4 Var(op)` evaluated with explicit dense matrix-vector products.
pub fn variance_qfi(op: &Operator, state: &BigSpinState) -> Result<f64> {
    check_normalized(state)?;
    let psi = state.amplitudes();
    let v = op.apply(psi)?;
    let w = op.apply(&v)?;
    let mean = inner(psi, &v).re;
    let second = inner(psi, &w).re;
    Ok(4.0 * (second - mean * mean))
}

/// Dense-matrix counterpart of [`qfi_jy`].
pub fn qfi_jy_dense(state: &BigSpinState) -> Result<f64> {
    let jy = collective_operator(OperatorKind::Jy, state.basis())?;
    variance_qfi(&jy, state)
}

/// `N / F` of the cat built for `(N, x = |zeta|^2/N)`.
pub fn cat_precision(n_spins: usize, ratio: f64, lambda: f64) -> Result<f64> {
    let cat = cat_state(&CatSpec::from_ratio(n_spins, ratio, lambda)?)?;
    let f = qfi_jy(&cat)?;
    if !(f > 0.0) {
        return Err(RevivalError::InvariantViolation(format!("non-positive Fisher information {f:e}")));
    }
    Ok(n_spins as f64 / f)
}

/// `N / F` over `(N, x)` plus the Heisenberg reference `1/N` per row.
pub fn precision_surface(n_list: &[usize], ratios: &[f64], lambda: f64) -> Result<SweepGrid> {
    let mut grid = SweepGrid::compute("N", "zeta_sq_over_N", "N_over_F", n_list, ratios, |n, x| {
        cat_precision(n, x, lambda)
    })?;
    let heisenberg = grid.rows.iter().map(|&n| 1.0 / n as f64).collect();
    grid.row_extras.push(("heisenberg_limit".into(), heisenberg));
    Ok(grid)
}

/// Fidelity and precision along `N` at fixed `x = |zeta|^2 / N`.
#[derive(Clone, Debug)]
pub struct CrossSection {
    pub ratio: f64,
    pub n_values: Vec<usize>,
    /// `|zeta|^2 = x N`, used unrounded.
    pub zeta_sq: Vec<f64>,
    pub fidelity: Vec<CellOutcome>,
    pub n_over_f: Vec<CellOutcome>,
}

impl CrossSection {
    pub const ROUNDING_NOTE: &'static str = "zeta real positive with |zeta|^2 = x*N exactly (no rounding)";

    /// Values of both series when every entry succeeded.
    pub fn values(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let f: Option<Vec<f64>> = self.fidelity.iter().map(|c| c.as_ref().ok().copied()).collect();
        let p: Option<Vec<f64>> = self.n_over_f.iter().map(|c| c.as_ref().ok().copied()).collect();
        Some((f?, p?))
    }
}

pub fn cross_section(n_values: &[usize], ratio: f64, lambda: f64) -> Result<CrossSection> {
    let fid = SweepGrid::compute("N", "zeta_sq_over_N", "fidelity", n_values, &[ratio], |n, x| {
        cat_fidelity(&CatSpec::from_ratio(n, x, lambda)?)
    })?;
    let prec = SweepGrid::compute("N", "zeta_sq_over_N", "N_over_F", n_values, &[ratio], |n, x| {
        cat_precision(n, x, lambda)
    })?;
    let n_values = fid.rows.clone();
    let zeta_sq = n_values.iter().map(|&n| ratio * n as f64).collect();
    Ok(CrossSection { ratio, n_values, zeta_sq, fidelity: fid.cells, n_over_f: prec.cells })
}

/// Local extrema of a sequence sampled at consecutive integers. Interior
/// points are compared with both neighbours, end points with their single
/// neighbour.
pub fn local_extrema(values: &[f64], maxima: bool) -> Vec<usize> {
    let better = |a: f64, b: f64| if maxima { a > b } else { a < b };
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || better(values[i], values[i - 1]);
            let right = i + 1 == n || better(values[i], values[i + 1]);
            n > 1 && left && right
        })
        .collect()
}

/// For every fidelity peak, the nearest precision trough (in steps of `N`).
#[derive(Clone, Debug, PartialEq)]
pub struct PeakMatch {
    pub peak_n: usize,
    pub trough_n: Option<usize>,
}

impl PeakMatch {
    pub fn within(&self, tolerance: usize) -> bool {
        self.trough_n.is_some_and(|t| t.abs_diff(self.peak_n) <= tolerance)
    }
}

pub fn match_peaks_to_troughs(n_values: &[usize], fidelity: &[f64], n_over_f: &[f64]) -> Vec<PeakMatch> {
    let troughs: Vec<usize> = local_extrema(n_over_f, false).into_iter().map(|i| n_values[i]).collect();
    local_extrema(fidelity, true)
        .into_iter()
        .map(|i| {
            let peak_n = n_values[i];
            let trough_n = troughs.iter().copied().min_by_key(|t| t.abs_diff(peak_n));
            PeakMatch { peak_n, trough_n }
        })
        .collect()
}

/// Converts a cross-section's per-cell failures into a flat list.
pub fn cross_section_failures(cs: &CrossSection) -> Vec<&CellError> {
    cs.fidelity.iter().chain(&cs.n_over_f).filter_map(|c| c.as_ref().err()).collect()
}
