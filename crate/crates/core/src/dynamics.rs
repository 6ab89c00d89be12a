//! Exact unitary evolution of composite states and the qubit / big-spin
//! observables read off along a trajectory.

use nalgebra::DMatrix;

use crate::dicke::{Amplitudes, BigSpinState};
use crate::error::{RevivalError, Result};
use crate::hamiltonians::{BlockDecomposition, CompositeState};
use crate::linalg::{inner, Operator, Spectrum, C64};

/// Tolerance on the input norm accepted by [`evolve`].
pub const INPUT_NORM_TOL: f64 = 1e-10;

/// Uniform grid `t_start..=t_end` with `samples` points (times in `1/lambda`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    samples: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(RevivalError::InvalidParameter { name: "samples", reason: format!("need >= 2, got {samples}") });
        }
        if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(RevivalError::InvalidParameter {
                name: "t_end",
                reason: format!("time grid must be strictly increasing ({t_start} .. {t_end})"),
            });
        }
        Ok(Self { t_start, t_end, samples })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / (self.samples - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k + 1 == self.samples {
            self.t_end
        } else {
            self.t_start + k as f64 * self.step()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples).map(|k| self.time(k)).collect()
    }
}

/// Something that can apply `exp(-i H t)` to a composite amplitude vector.
pub trait Propagator {
    fn dim(&self) -> usize;
    fn propagate(&self, psi: &[C64], t: f64) -> Vec<C64>;
}

impl Propagator for BlockDecomposition {
    fn dim(&self) -> usize {
        BlockDecomposition::dim(self)
    }

    /// Closed-form 2x2 exponentials: with `H = c + d sigma_z' + g sigma_x'`
    /// and `w = sqrt(d^2 + |g|^2)`,
    /// `exp(-iHt) = e^{-ict} (cos(wt) - i sin(wt)/w (H - c))`.
    fn propagate(&self, psi: &[C64], t: f64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        for s in &self.singles {
            out[s.index] = psi[s.index] * C64::from_polar(1.0, -s.energy * t);
        }
        for p in &self.pairs {
            let a = p.h[0][0].re;
            let b = p.h[1][1].re;
            let g = p.h[0][1];
            let c = 0.5 * (a + b);
            let d = 0.5 * (a - b);
            let w = (d * d + g.norm_sqr()).sqrt();
            let (sin_wt, cos_wt) = (w * t).sin_cos();
            let sinc = if w > 0.0 { sin_wt / w } else { t };
            let phase = C64::from_polar(1.0, -c * t);
            let mi = C64::new(0.0, -sinc);
            let (u, l) = (psi[p.upper], psi[p.lower]);
            out[p.upper] = phase * (u * cos_wt + mi * (u * d + g * l));
            out[p.lower] = phase * (l * cos_wt + mi * (g.conj() * u - l * d));
        }
        out
    }
}

/// Dense eigendecomposition route, kept as an independent oracle for the
/// block propagator.
#[derive(Clone, Debug)]
pub struct DensePropagator {
    spectrum: Spectrum,
}

impl DensePropagator {
    pub fn new(h: &Operator) -> Result<Self> {
        Ok(Self { spectrum: Spectrum::of(h)? })
    }
}

impl Propagator for DensePropagator {
    fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    fn propagate(&self, psi: &[C64], t: f64) -> Vec<C64> {
        self.spectrum.propagate(psi, t)
    }
}

/// Per-sample observables kept in lean mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observables {
    pub sigma_z: f64,
    pub qubit_linear_entropy: f64,
    pub fidelity_to_target: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub observables: Vec<Observables>,
    /// Full snapshots, present unless the trajectory was computed in lean mode.
    pub states: Option<Vec<CompositeState>>,
}

impl Trajectory {
    pub fn sigma_z(&self) -> Vec<f64> {
        self.observables.iter().map(|o| o.sigma_z).collect()
    }

    pub fn qubit_linear_entropy(&self) -> Vec<f64> {
        self.observables.iter().map(|o| o.qubit_linear_entropy).collect()
    }

    pub fn fidelity_to_target(&self) -> Option<Vec<f64>> {
        self.observables.iter().map(|o| o.fidelity_to_target).collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct EvolveOptions<'a> {
    /// Keep every composite snapshot (off = lean mode).
    pub keep_states: bool,
    /// Record `fidelity(target, rho_BS(t))` at every sample.
    pub target: Option<&'a BigSpinState>,
}

impl<'a> EvolveOptions<'a> {
    pub fn lean() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self { keep_states: true, target: None }
    }

    pub fn with_target(mut self, target: &'a BigSpinState) -> Self {
        self.target = Some(target);
        self
    }
}

fn check_input<P: Propagator + ?Sized>(prop: &P, psi0: &CompositeState) -> Result<()> {
    if psi0.dim() != prop.dim() {
        return Err(RevivalError::DimensionMismatch { expected: prop.dim(), actual: psi0.dim() });
    }
    let n = psi0.norm_sq();
    if (n - 1.0).abs() > INPUT_NORM_TOL {
        return Err(RevivalError::NotNormalized { norm_sq: n });
    }
    Ok(())
}

/// `psi(t) = exp(-iHt) psi(0)`.
pub fn evolve_to<P: Propagator + ?Sized>(prop: &P, psi0: &CompositeState, t: f64) -> Result<CompositeState> {
    check_input(prop, psi0)?;
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    Ok(CompositeState::from_raw(psi0.levels(), prop.propagate(psi0.amplitudes(), t)))
}

/// Evolves `psi0` over `grid`, recording observables (and optionally states).
pub fn evolve<P: Propagator + ?Sized>(
    prop: &P,
    psi0: &CompositeState,
    grid: &TimeGrid,
    options: &EvolveOptions<'_>,
) -> Result<Trajectory> {
    check_input(prop, psi0)?;
    if let Some(target) = options.target {
        if target.n_spins() != psi0.levels() {
            return Err(RevivalError::DimensionMismatch { expected: psi0.levels() + 1, actual: target.n_spins() + 1 });
        }
    }
    let times = grid.times();
    let mut observables = Vec::with_capacity(times.len());
    let mut states = options.keep_states.then(|| Vec::with_capacity(times.len()));
    for &t in &times {
        let psi = evolve_to(prop, psi0, t)?;
        let drift = (psi.norm_sq() - 1.0).abs();
        if drift > INPUT_NORM_TOL {
            return Err(RevivalError::InvariantViolation(format!("norm drift {drift:e} at t = {t}")));
        }
        let rho_q = reduce_qubit(&psi);
        let fidelity_to_target = options.target.map(|target| branch_fidelity(target.amplitudes(), &psi));
        observables.push(Observables {
            sigma_z: psi.sigma_z(),
            qubit_linear_entropy: linear_entropy(&rho_q),
            fidelity_to_target,
        });
        if let Some(s) = states.as_mut() {
            s.push(psi);
        }
    }
    Ok(Trajectory { times, observables, states })
}

/// `sqrt(<phi| rho_BS |phi>)` without forming `rho_BS`: the reduced state
/// is `sum_q |b_q><b_q|` over the qubit branches.
pub(crate) fn branch_fidelity(target: &[C64], psi: &CompositeState) -> f64 {
    let s: f64 = (0..2).map(|q| inner(target, psi.branch(q)).norm_sqr()).sum();
    s.max(0.0).sqrt()
}

/// Reduced state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity to `tol`.
    pub fn new(matrix: DMatrix<C64>, tol: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(RevivalError::DimensionMismatch { expected: matrix.nrows(), actual: matrix.ncols() });
        }
        let herm = crate::linalg::hermitian_deviation(&matrix);
        if herm > tol {
            return Err(RevivalError::InvalidDensityMatrix(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol {
            return Err(RevivalError::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        let rho = Self { matrix };
        let min = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(RevivalError::InvalidDensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    pub fn pure(amplitudes: &[C64]) -> Self {
        let d = amplitudes.len();
        Self { matrix: DMatrix::from_fn(d, d, |r, c| amplitudes[r] * amplitudes[c].conj()) }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.matrix[(r, c)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = &self.matrix;
        let n = m.nrows();
        faer::Mat::<C64>::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .unwrap_or_else(|_| vec![f64::NAN; n])
    }

    /// `Tr(self other)`.
    pub fn overlap(&self, other: &DensityMatrix) -> f64 {
        self.matrix.iter().zip(other.matrix.transpose().iter()).map(|(a, b)| a * b).sum::<C64>().re
    }

    /// `U rho U^dagger`.
    pub fn conjugate_by(&self, u: &DMatrix<C64>) -> DensityMatrix {
        DensityMatrix { matrix: u * &self.matrix * u.adjoint() }
    }
}

/// Partial trace over the big spin.
pub fn reduce_qubit(psi: &CompositeState) -> DensityMatrix {
    let mut m = DMatrix::<C64>::zeros(2, 2);
    for a in 0..2 {
        for b in 0..2 {
            m[(a, b)] = inner(psi.branch(b), psi.branch(a));
        }
    }
    DensityMatrix { matrix: m }
}

/// Partial trace over the qubit.
pub fn reduce_bigspin(psi: &CompositeState) -> DensityMatrix {
    let d = psi.levels() + 1;
    let (b0, b1) = (psi.branch(0), psi.branch(1));
    DensityMatrix { matrix: DMatrix::from_fn(d, d, |r, c| b0[r] * b0[c].conj() + b1[r] * b1[c].conj()) }
}

/// `2 (1 - Tr rho^2)`: zero for pure states, one for a maximally mixed qubit.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    2.0 * (1.0 - rho.purity())
}

/// `sqrt(<phi|rho|phi>)` for a normalized pure target.
pub fn fidelity<S: Amplitudes + ?Sized>(target: &S, rho: &DensityMatrix) -> Result<f64> {
    let phi = target.amplitudes();
    if phi.len() != rho.dim() {
        return Err(RevivalError::DimensionMismatch { expected: rho.dim(), actual: phi.len() });
    }
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..phi.len() {
        let row: C64 = (0..phi.len()).map(|c| rho.matrix[(r, c)] * phi[c]).sum();
        acc += phi[r].conj() * row;
    }
    Ok(acc.re.max(0.0).sqrt().min(1.0))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(RevivalError::InvalidParameter { name: "lambda", reason: format!("must be > 0, got {lambda}") });
    }
    Ok(())
}

/// Attractor time of the big-spin model,
/// `t0 = pi |zeta| / (lambda sqrt(1 + |zeta|^2 / N))`.
pub fn attractor_time(n_spins: usize, zeta_abs: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if n_spins < 1 {
        return Err(RevivalError::InvalidBasis(n_spins as i64));
    }
    let x = zeta_abs * zeta_abs;
    Ok(std::f64::consts::PI * zeta_abs / (lambda * (1.0 + x / n_spins as f64).sqrt()))
}

/// Field-mode attractor time `pi |alpha| / lambda` (the `N -> infinity` limit).
pub fn field_attractor_time(zeta_abs: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(std::f64::consts::PI * zeta_abs / lambda)
}

/// One Rabi period of `<sigma_z>`, `2 pi / (2 lambda sqrt(<n>))`.
pub fn rabi_period(mean_excitation: f64, lambda: f64) -> f64 {
    std::f64::consts::PI / (lambda * mean_excitation.sqrt())
}

/// Sliding-window maximum of `|values|` over a centred window of total
/// width `width` (same time units as `times`).
pub fn sliding_max_envelope(times: &[f64], values: &[f64], width: f64) -> Vec<f64> {
    let half = 0.5 * width;
    let n = times.len();
    let mut out = Vec::with_capacity(n);
    let mut deque = std::collections::VecDeque::<usize>::new();
    let (mut lo, mut hi) = (0usize, 0usize);
    for i in 0..n {
        while hi < n && times[hi] <= times[i] + half {
            while deque.back().is_some_and(|&b| values[b].abs() <= values[hi].abs()) {
                deque.pop_back();
            }
            deque.push_back(hi);
            hi += 1;
        }
        while times[lo] < times[i] - half {
            lo += 1;
        }
        while deque.front().is_some_and(|&f| f < lo) {
            deque.pop_front();
        }
        out.push(deque.front().map_or(0.0, |&f| values[f].abs()));
    }
    out
}

/// Indices of strict interior local minima.
pub fn local_minima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1)).filter(|&i| values[i] < values[i - 1] && values[i] < values[i + 1]).collect()
}
