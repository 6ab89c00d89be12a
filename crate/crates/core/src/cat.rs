//! Spin cat states produced at the attractor time, and the fidelity of the
//! exact reduced big-spin state against them.
//!
//! All evolutions here run in the interaction picture (`omega = Omega = 0`).
//! At resonance the free part commutes with the exchange coupling, so this
//! only removes a known rotation about `z` from the big-spin state.

use crate::dicke::{spin_coherent, Amplitudes, BigSpinState, SpinCoherentParams};
use crate::dynamics::{attractor_time, branch_fidelity, evolve, evolve_to, EvolveOptions, TimeGrid};
use crate::error::{Result, RevivalError};
use crate::hamiltonians::{block_decompose, build_spin_hamiltonian, BlockDecomposition, CompositeState, ModelParams, QubitState};
use crate::linalg::{inner, C64};
use crate::sweep::SweepGrid;

/// Below this the two cat branches are treated as cancelling.
pub const MIN_NORMALIZATION: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatSpec {
    pub n_spins: usize,
    pub zeta: C64,
    pub lambda: f64,
}

impl CatSpec {
    pub fn new(n_spins: usize, zeta: C64, lambda: f64) -> Result<Self> {
        let spec = Self { n_spins, zeta, lambda };
        spec.validate()?;
        Ok(spec)
    }

    /// Real positive `zeta = sqrt(x N)` for a sweep coordinate `x = |zeta|^2 / N`.
    pub fn from_ratio(n_spins: usize, ratio: f64, lambda: f64) -> Result<Self> {
        if !(ratio >= 0.0) || !ratio.is_finite() {
            return Err(RevivalError::InvalidParameter { name: "ratio", reason: format!("|zeta|^2/N must be >= 0, got {ratio}") });
        }
        Self::new(n_spins, C64::new((ratio * n_spins as f64).sqrt(), 0.0), lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins < 1 {
            return Err(RevivalError::InvalidBasis(self.n_spins as i64));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(RevivalError::InvalidParameter { name: "lambda", reason: format!("must be > 0, got {}", self.lambda) });
        }
        Ok(())
    }

    pub fn phi(&self) -> f64 {
        self.zeta.arg()
    }

    pub fn t0(&self) -> Result<f64> {
        attractor_time(self.n_spins, self.zeta.norm(), self.lambda)
    }

    /// Initial big-spin state `|N, zeta/sqrt(N)>`.
    pub fn initial_spin(&self) -> Result<BigSpinState> {
        spin_coherent(SpinCoherentParams::scaled(self.n_spins, self.zeta))
    }

    /// Qubit `|0>` times the initial spin coherent state.
    pub fn initial_composite(&self) -> Result<CompositeState> {
        CompositeState::product(QubitState::excited(), &self.initial_spin()?)
    }

    /// Block form of the interaction-picture Hamiltonian.
    pub fn propagator(&self) -> Result<BlockDecomposition> {
        let h = build_spin_hamiltonian(&ModelParams::interaction_frame(self.lambda, self.n_spins))?;
        block_decompose(&h, self.n_spins)
    }
}

/// `D_pm(0) = (|0> pm e^{-i phi} |1>) / sqrt(2)`.
pub fn attractor_qubit_states(phi: f64) -> (QubitState, QubitState) {
    let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let b = C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, -phi);
    (QubitState([a, b]), QubitState([a, -b]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `exp(-i lambda t sqrt(J_- J_+ / N))`, paired with `D_+`.
    Plus,
    /// `exp(+i lambda t sqrt(J_- J_+ / N))`, paired with `D_-`.
    Minus,
}

/// Non-entangling branch evolution; diagonal in the Dicke basis with
/// entries `sqrt((n+1)(1 - n/N))`.
pub fn conditional_evolution(branch: Branch, t: f64, state: &BigSpinState, lambda: f64) -> BigSpinState {
    let n_spins = state.n_spins();
    let sign = match branch {
        Branch::Plus => -1.0,
        Branch::Minus => 1.0,
    };
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, a)| {
            let w = crate::dicke::raising_element_scaled(n_spins, n);
            a * C64::from_polar(1.0, sign * lambda * t * w)
        })
        .collect();
    BigSpinState::normalized(state.basis(), amps).expect("phase map preserves the norm")
}

/// A cat state together with the quantities used to build it.
#[derive(Clone, Debug)]
pub struct CatState {
    pub state: BigSpinState,
    pub t0: f64,
    /// `M = 1 + Re<chi_+|chi_->`, in `(0, 2]`.
    pub normalization: f64,
}

/// `(chi_- + chi_+) / sqrt(2M)` with `chi_pm` the two branch evolutions of
/// the initial spin coherent state to `t0`.
pub fn build_cat(spec: &CatSpec) -> Result<CatState> {
    spec.validate()?;
    let t0 = spec.t0()?;
    let initial = spec.initial_spin()?;
    let plus = conditional_evolution(Branch::Plus, t0, &initial, spec.lambda);
    let minus = conditional_evolution(Branch::Minus, t0, &initial, spec.lambda);
    let (state, normalization) = superpose_branches(&plus, &minus)?;
    Ok(CatState { state, t0, normalization })
}

/// `(plus + minus) / sqrt(2M)` with `M = 1 + Re<plus|minus>`.
pub(crate) fn superpose_branches(plus: &BigSpinState, minus: &BigSpinState) -> Result<(BigSpinState, f64)> {
    let normalization = 1.0 + inner(plus.amplitudes(), minus.amplitudes()).re;
    if normalization < MIN_NORMALIZATION {
        return Err(RevivalError::DegenerateNormalization { normalization });
    }
    let scale = (2.0 * normalization).sqrt();
    let amps: Vec<C64> = plus.amplitudes().iter().zip(minus.amplitudes()).map(|(p, m)| (p + m) / scale).collect();
    Ok((BigSpinState::normalized(plus.basis(), amps)?, normalization))
}

pub fn cat_state(spec: &CatSpec) -> Result<BigSpinState> {
    Ok(build_cat(spec)?.state)
}

/// Exact composite state at the attractor time.
pub fn exact_state_at_t0(spec: &CatSpec) -> Result<CompositeState> {
    let prop = spec.propagator()?;
    evolve_to(&prop, &spec.initial_composite()?, spec.t0()?)
}

/// `F = sqrt(<psi_zeta| rho_BS(t0) |psi_zeta>)`.
pub fn cat_fidelity(spec: &CatSpec) -> Result<f64> {
    let cat = build_cat(spec)?;
    let psi = exact_state_at_t0(spec)?;
    Ok(branch_fidelity(cat.state.amplitudes(), &psi))
}

/// Best qubit factor `D` for `psi ~ D (x) phi` and the overlap it achieves.
pub fn best_product_overlap(psi: &CompositeState, phi: &BigSpinState) -> Result<(QubitState, f64)> {
    if psi.levels() != phi.n_spins() {
        return Err(RevivalError::DimensionMismatch { expected: psi.levels() + 1, actual: phi.n_spins() + 1 });
    }
    let c = [inner(phi.amplitudes(), psi.branch(0)), inner(phi.amplitudes(), psi.branch(1))];
    let norm = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
    if norm == 0.0 {
        return Ok((QubitState::excited(), 0.0));
    }
    Ok((QubitState([c[0] / norm, c[1] / norm]), norm))
}

/// Cat fidelity over a grid of `N` and `x = |zeta|^2 / N`.
pub fn fidelity_surface(n_list: &[usize], ratios: &[f64], lambda: f64) -> Result<SweepGrid> {
    SweepGrid::compute("N", "zeta_sq_over_N", "fidelity", n_list, ratios, |n, x| {
        cat_fidelity(&CatSpec::from_ratio(n, x, lambda)?)
    })
}

#[derive(Clone, Debug)]
pub struct FidelitySeries {
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub t0: f64,
}

/// Fidelity of the `t0` cat against `rho_BS(t)` along `grid`.
pub fn fidelity_vs_time(spec: &CatSpec, grid: &TimeGrid) -> Result<FidelitySeries> {
    let cat = build_cat(spec)?;
    let prop = spec.propagator()?;
    let tr = evolve(&prop, &spec.initial_composite()?, grid, &EvolveOptions::lean().with_target(&cat.state))?;
    let fidelity = tr.fidelity_to_target().expect("target was set");
    Ok(FidelitySeries { times: tr.times, fidelity, t0: cat.t0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn attractor_pair() {
        let (p, m) = attractor_qubit_states(0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.0[0] - c(s)).norm() < 1e-15 && (p.0[1] - c(s)).norm() < 1e-15);
        assert!((m.0[1] + c(s)).norm() < 1e-15);
        for phi in [0.3, 1.7, -2.2] {
            let (p, m) = attractor_qubit_states(phi);
            let ov = p.0[0].conj() * m.0[0] + p.0[1].conj() * m.0[1];
            assert!(ov.norm() < 1e-15);
            let zero = [(p.0[0] + m.0[0]) * s, (p.0[1] + m.0[1]) * s];
            assert!((zero[0] - c(1.0)).norm() < 1e-15 && zero[1].norm() < 1e-15);
        }
    }

    #[test]
    fn conditional_evolution_examples() {
        let spec = CatSpec::new(10, c(1.5), 1.0).unwrap();
        let s = spec.initial_spin().unwrap();
        assert_eq!(conditional_evolution(Branch::Plus, 0.0, &s, 1.0), s);
        let top = BigSpinState::dicke(s.basis(), 10).unwrap();
        let moved = conditional_evolution(Branch::Minus, 3.3, &top, 1.0);
        assert!((moved.amplitudes()[10] - c(1.0)).norm() < 1e-15);
        let e = conditional_evolution(Branch::Plus, 2.1, &s, 0.7);
        assert!((e.norm_sq() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn branch_overlap_decays_then_partially_recurs() {
        let spec = CatSpec::new(100, c(6f64.sqrt()), 1.0).unwrap();
        let s = spec.initial_spin().unwrap();
        let t0 = spec.t0().unwrap();
        let ov: Vec<f64> = (0..=200)
            .map(|k| {
                let t = t0 * k as f64 / 200.0;
                let p = conditional_evolution(Branch::Plus, t, &s, 1.0);
                let m = conditional_evolution(Branch::Minus, t, &s, 1.0);
                p.overlap(&m).norm()
            })
            .collect();
        assert!((ov[0] - 1.0).abs() < 1e-14);
        let min = ov.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min < 0.1);
        assert!(ov[200] > min);
    }

    #[test]
    fn zero_zeta_cat_is_pole() {
        let cat = build_cat(&CatSpec::new(8, c(0.0), 1.0).unwrap()).unwrap();
        assert_eq!(cat.t0, 0.0);
        assert!((cat.normalization - 2.0).abs() < 1e-15);
        assert!((cat.state.amplitudes()[0] - c(1.0)).norm() < 1e-15);
        assert_eq!(cat_fidelity(&CatSpec::new(8, c(0.0), 1.0).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn cat_norm_and_normalization_range() {
        for n in [3, 17, 60, 200] {
            for x in [0.05, 0.3, 0.8, 1.0] {
                let cat = build_cat(&CatSpec::from_ratio(n, x, 1.0).unwrap()).unwrap();
                assert!((cat.state.norm_sq() - 1.0).abs() < 1e-12);
                assert!(cat.normalization > 0.0 && cat.normalization < 2.0);
            }
        }
    }

    #[test]
    fn degenerate_normalization_is_reported() {
        // single spin, pole state: the branches pick up phases -i and +i
        let s = BigSpinState::dicke(crate::dicke::DickeBasis::new(1).unwrap(), 0).unwrap();
        let p = conditional_evolution(Branch::Plus, std::f64::consts::FRAC_PI_2, &s, 1.0);
        let m = conditional_evolution(Branch::Minus, std::f64::consts::FRAC_PI_2, &s, 1.0);
        assert!(matches!(superpose_branches(&p, &m), Err(RevivalError::DegenerateNormalization { .. })));
    }

    #[test]
    fn product_overlap_bounds_fidelity() {
        let spec = CatSpec::new(40, c(6f64.sqrt()), 1.0).unwrap();
        let cat = cat_state(&spec).unwrap();
        let psi = exact_state_at_t0(&spec).unwrap();
        let f = cat_fidelity(&spec).unwrap();
        let (_, ov) = best_product_overlap(&psi, &cat).unwrap();
        assert!(ov >= f * f - 1e-12);
        assert!((ov - f).abs() < 1e-12);
    }

    #[test]
    fn initial_fidelity_matches_closed_form() {
        let spec = CatSpec::new(40, c(6f64.sqrt()), 1.0).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let series = fidelity_vs_time(&spec, &grid).unwrap();
        let cat = cat_state(&spec).unwrap();
        let s = spec.initial_spin().unwrap();
        assert!((series.fidelity[0] - cat.overlap(&s).norm()).abs() < 1e-12);
    }
}
