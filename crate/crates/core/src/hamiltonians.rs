//! Qubit / big-spin and truncated Jaynes-Cummings Hamiltonians on the
//! qubit-major composite basis `(q, n)`, index `q * (levels + 1) + n`.
//!
//! Qubit `|0>` is the excited level: `sigma_z = |0><0| - |1><1|`,
//! `sigma_- = |1><0|`.

use nalgebra::DMatrix;

use crate::dicke::{raising_element_scaled, Amplitudes, BigSpinState, FockState, NORM_TOL};
use crate::error::{RevivalError, Result};
use crate::linalg::{norm_sq, Operator, C64};

/// Entries outside the excitation blocks must vanish to this precision.
pub const BLOCK_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Big-spin (or field) level splitting.
    pub omega: f64,
    /// Qubit splitting.
    pub omega_qubit: f64,
    /// Coupling strength.
    pub lambda: f64,
    /// `N` for the spin model, the Fock cutoff for the JC model.
    pub levels: usize,
}

impl ModelParams {
    pub fn resonant(omega: f64, lambda: f64, levels: usize) -> Self {
        Self { omega, omega_qubit: omega, lambda, levels }
    }

    /// `omega = Omega = 0`: the interaction picture of any resonant model.
    pub fn interaction_frame(lambda: f64, levels: usize) -> Self {
        Self::resonant(0.0, lambda, levels)
    }

    pub fn is_resonant(&self) -> bool {
        self.omega == self.omega_qubit
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(RevivalError::InvalidParameter { name: "lambda", reason: format!("must be > 0, got {}", self.lambda) });
        }
        if !self.omega.is_finite() || !self.omega_qubit.is_finite() {
            return Err(RevivalError::InvalidParameter { name: "omega", reason: "must be finite".into() });
        }
        Ok(())
    }
}

/// A qubit pure state `(c_0, c_1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitState(pub [C64; 2]);

impl QubitState {
    pub fn excited() -> Self {
        QubitState([C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
    }

    pub fn ground() -> Self {
        QubitState([C64::new(0.0, 0.0), C64::new(1.0, 0.0)])
    }
}

/// State of qubit (x) big spin (or qubit (x) truncated mode).
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeState {
    levels: usize,
    amplitudes: Vec<C64>,
}

impl CompositeState {
    pub fn new(levels: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let dim = 2 * (levels + 1);
        if amplitudes.len() != dim {
            return Err(RevivalError::DimensionMismatch { expected: dim, actual: amplitudes.len() });
        }
        let n = norm_sq(&amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(RevivalError::NotNormalized { norm_sq: n });
        }
        Ok(Self { levels, amplitudes })
    }

    pub(crate) fn from_raw(levels: usize, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 2 * (levels + 1));
        Self { levels, amplitudes }
    }

    fn product_raw(qubit: QubitState, other: &[C64]) -> Vec<C64> {
        qubit.0.iter().flat_map(|q| other.iter().map(move |a| q * a)).collect()
    }

    pub fn product(qubit: QubitState, spin: &BigSpinState) -> Result<Self> {
        Self::new(spin.n_spins(), Self::product_raw(qubit, spin.amplitudes()))
    }

    pub fn product_fock(qubit: QubitState, field: &FockState) -> Result<Self> {
        Self::new(field.cutoff(), Self::product_raw(qubit, field.amplitudes()))
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn index(levels: usize, q: usize, n: usize) -> usize {
        q * (levels + 1) + n
    }

    pub fn amplitude(&self, q: usize, n: usize) -> C64 {
        self.amplitudes[Self::index(self.levels, q, n)]
    }

    /// Amplitudes of the qubit-`q` branch, indexed by `n`.
    pub fn branch(&self, q: usize) -> &[C64] {
        let d = self.levels + 1;
        &self.amplitudes[q * d..(q + 1) * d]
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    /// `<sigma_z>`.
    pub fn sigma_z(&self) -> f64 {
        norm_sq(self.branch(0)) - norm_sq(self.branch(1))
    }
}

impl Amplitudes for CompositeState {
    fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }
}

fn build_exchange_hamiltonian(params: &ModelParams, coupling: impl Fn(usize) -> f64) -> Result<Operator> {
    params.validate()?;
    let levels = params.levels;
    let dim = 2 * (levels + 1);
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for q in 0..2 {
        let sz = if q == 0 { 1.0 } else { -1.0 };
        for n in 0..=levels {
            let i = CompositeState::index(levels, q, n);
            h[(i, i)] = C64::new(params.omega * n as f64 + 0.5 * params.omega_qubit * sz, 0.0);
        }
    }
    for n in 0..levels {
        let up = CompositeState::index(levels, 0, n);
        let down = CompositeState::index(levels, 1, n + 1);
        let g = C64::new(coupling(n), 0.0);
        h[(down, up)] = g;
        h[(up, down)] = g;
    }
    Operator::hermitian(h)
}

/// `omega (J_z + N/2) + (Omega/2) sigma_z + (lambda/sqrt(N)) (J_+ sigma_- + J_- sigma_+)`.
pub fn build_spin_hamiltonian(params: &ModelParams) -> Result<Operator> {
    if params.levels < 1 {
        return Err(RevivalError::InvalidBasis(params.levels as i64));
    }
    let n_spins = params.levels;
    let lambda = params.lambda;
    build_exchange_hamiltonian(params, |n| lambda * raising_element_scaled(n_spins, n))
}

/// `omega a^dagger a + (Omega/2) sigma_z + lambda (a^dagger sigma_- + a sigma_+)`
/// truncated at `params.levels` photons.
pub fn build_jc_hamiltonian(params: &ModelParams) -> Result<Operator> {
    if params.levels < 1 {
        return Err(RevivalError::InvalidParameter { name: "cutoff", reason: "must be >= 1".into() });
    }
    let lambda = params.lambda;
    build_exchange_hamiltonian(params, |n| lambda * ((n + 1) as f64).sqrt())
}

/// The 2x2 block coupling `(q=0, n)` and `(q=1, n+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairBlock {
    pub n: usize,
    /// Composite index of `(0, n)`.
    pub upper: usize,
    /// Composite index of `(1, n+1)`.
    pub lower: usize,
    /// `[[H_uu, H_ul], [H_lu, H_ll]]`.
    pub h: [[C64; 2]; 2],
}

/// An uncoupled basis state: `(1, 0)` or `(0, levels)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleBlock {
    pub q: usize,
    pub n: usize,
    pub index: usize,
    pub energy: f64,
}

/// Excitation-number block structure of an exchange Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDecomposition {
    levels: usize,
    pub pairs: Vec<PairBlock>,
    pub singles: Vec<SingleBlock>,
}

impl BlockDecomposition {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        2 * (self.levels + 1)
    }

    /// Rebuilds the dense matrix from the blocks.
    pub fn reassemble(&self) -> Result<Operator> {
        let dim = self.dim();
        let mut h = DMatrix::<C64>::zeros(dim, dim);
        for s in &self.singles {
            h[(s.index, s.index)] = C64::new(s.energy, 0.0);
        }
        for p in &self.pairs {
            let idx = [p.upper, p.lower];
            for a in 0..2 {
                for b in 0..2 {
                    h[(idx[a], idx[b])] = p.h[a][b];
                }
            }
        }
        Operator::hermitian(h)
    }

    /// All eigenvalues from the closed-form block spectra.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.singles.iter().map(|s| s.energy).collect();
        for p in &self.pairs {
            let (a, b) = (p.h[0][0].re, p.h[1][1].re);
            let c = 0.5 * (a + b);
            let w = (0.25 * (a - b).powi(2) + p.h[0][1].norm_sqr()).sqrt();
            out.push(c - w);
            out.push(c + w);
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Splits an exchange Hamiltonian into its 2x2 and 1x1 excitation blocks,
/// rejecting any matrix with weight outside them.
pub fn block_decompose(h: &Operator, levels: usize) -> Result<BlockDecomposition> {
    let dim = 2 * (levels + 1);
    if h.dim() != dim {
        return Err(RevivalError::DimensionMismatch { expected: dim, actual: h.dim() });
    }
    // excitation number of each basis state
    let excitation = |i: usize| {
        let q = i / (levels + 1);
        let n = i % (levels + 1);
        n + usize::from(q == 0)
    };
    let m = h.matrix();
    for r in 0..dim {
        for c in 0..dim {
            if excitation(r) != excitation(c) && m[(r, c)].norm() > BLOCK_TOL {
                return Err(RevivalError::StructureViolation { row: r, col: c, magnitude: m[(r, c)].norm() });
            }
        }
    }
    let pairs = (0..levels)
        .map(|n| {
            let upper = CompositeState::index(levels, 0, n);
            let lower = CompositeState::index(levels, 1, n + 1);
            PairBlock {
                n,
                upper,
                lower,
                h: [[m[(upper, upper)], m[(upper, lower)]], [m[(lower, upper)], m[(lower, lower)]]],
            }
        })
        .collect();
    let singles = [(1, 0), (0, levels)]
        .into_iter()
        .map(|(q, n)| {
            let index = CompositeState::index(levels, q, n);
            SingleBlock { q, n, index, energy: m[(index, index)].re }
        })
        .collect();
    Ok(BlockDecomposition { levels, pairs, singles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{collective_operator, DickeBasis, OperatorKind};
    use crate::linalg::Spectrum;

    fn unit(levels: usize) -> ModelParams {
        ModelParams::resonant(1.0, 1.0, levels)
    }

    #[test]
    fn smallest_spin_hamiltonian() {
        let h = build_spin_hamiltonian(&unit(1)).unwrap();
        assert_eq!(h.dim(), 4);
        let a = CompositeState::index(1, 0, 0);
        let b = CompositeState::index(1, 1, 1);
        assert!((h.get(a, b) - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((h.get(a, a) - C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn spin_hamiltonian_commutes_with_casimir() {
        let n_spins = 7;
        let h = build_spin_hamiltonian(&ModelParams { omega: 0.7, omega_qubit: 1.3, lambda: 0.4, levels: n_spins }).unwrap();
        let j2 = collective_operator(OperatorKind::Jsquared, DickeBasis::new(n_spins).unwrap()).unwrap();
        let j2_full = Operator::general(DMatrix::identity(2, 2).kronecker(j2.matrix())).unwrap();
        assert!(h.commutator(&j2_full).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn jc_elements() {
        let p = ModelParams { omega: 1.0, omega_qubit: 0.8, lambda: 0.3, levels: 12 };
        let h = build_jc_hamiltonian(&p).unwrap();
        for n in 0..12 {
            let g = h.get(CompositeState::index(12, 1, n + 1), CompositeState::index(12, 0, n));
            assert!((g.re - 0.3 * ((n + 1) as f64).sqrt()).abs() < 1e-15);
        }
        let i = CompositeState::index(12, 1, 0);
        assert_eq!(h.get(i, i).re, -0.4);
        assert!(build_jc_hamiltonian(&ModelParams { levels: 0, ..p }).is_err());
    }

    #[test]
    fn spin_entries_approach_jc() {
        let window = 6;
        let jc = build_jc_hamiltonian(&unit(window)).unwrap();
        let mut prev = f64::INFINITY;
        for n_spins in [100, 1_000] {
            let spin = build_spin_hamiltonian(&unit(n_spins)).unwrap();
            let mut err: f64 = 0.0;
            for q in 0..2 {
                for n in 0..window {
                    for q2 in 0..2 {
                        for n2 in 0..window {
                            let s = spin.get(CompositeState::index(n_spins, q, n), CompositeState::index(n_spins, q2, n2));
                            let j = jc.get(CompositeState::index(window, q, n), CompositeState::index(window, q2, n2));
                            err = err.max((s - j).norm());
                        }
                    }
                }
            }
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-2);
        for n in 0..window {
            let gap = ((n + 1) as f64).sqrt() - crate::dicke::raising_element_scaled(10_000, n);
            assert!(gap.abs() < 1e-3);
        }
    }

    #[test]
    fn block_structure_smallest() {
        let h = build_spin_hamiltonian(&unit(1)).unwrap();
        let b = block_decompose(&h, 1).unwrap();
        assert_eq!(b.pairs.len(), 1);
        assert_eq!((b.pairs[0].upper, b.pairs[0].lower), (0, 3));
        let singles: Vec<(usize, usize)> = b.singles.iter().map(|s| (s.q, s.n)).collect();
        assert_eq!(singles, vec![(1, 0), (0, 1)]);
    }

    #[test]
    fn block_partition_and_reassembly() {
        let n_spins = 170;
        let h = build_spin_hamiltonian(&ModelParams { omega: 1.0, omega_qubit: 0.9, lambda: 1.0, levels: n_spins }).unwrap();
        let b = block_decompose(&h, n_spins).unwrap();
        assert_eq!(b.pairs.len(), n_spins);
        assert_eq!(b.singles.len(), 2);
        let mut seen = vec![0u8; 2 * (n_spins + 1)];
        for p in &b.pairs {
            seen[p.upper] += 1;
            seen[p.lower] += 1;
        }
        for s in &b.singles {
            seen[s.index] += 1;
        }
        assert!(seen.iter().all(|&k| k == 1));
        assert_eq!(b.reassemble().unwrap(), h);
    }

    #[test]
    fn rejects_foreign_structure() {
        let mut m = build_spin_hamiltonian(&unit(3)).unwrap().into_matrix();
        m[(0, 1)] = C64::new(0.1, 0.0);
        m[(1, 0)] = C64::new(0.1, 0.0);
        let op = Operator::hermitian(m).unwrap();
        assert!(matches!(block_decompose(&op, 3), Err(RevivalError::StructureViolation { .. })));
        assert!(matches!(block_decompose(&op, 4), Err(RevivalError::DimensionMismatch { .. })));
    }

    #[test]
    fn commutes_with_total_excitation() {
        let n_spins = 9;
        let h = build_spin_hamiltonian(&ModelParams { omega: 1.1, omega_qubit: 0.6, lambda: 0.9, levels: n_spins }).unwrap();
        let dim = 2 * (n_spins + 1);
        let exc = DMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                let q = r / (n_spins + 1);
                C64::new((r % (n_spins + 1) + usize::from(q == 0)) as f64, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let exc = Operator::hermitian(exc).unwrap();
        assert!(h.commutator(&exc).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn block_spectrum_matches_dense() {
        let n_spins = 25;
        let h = build_spin_hamiltonian(&ModelParams { omega: 1.0, omega_qubit: 1.4, lambda: 0.8, levels: n_spins }).unwrap();
        let blocks = block_decompose(&h, n_spins).unwrap();
        let dense = Spectrum::of(&h).unwrap().sorted_values();
        for (a, b) in blocks.eigenvalues().iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn resonant_block_splitting() {
        let n_spins = 40;
        let lambda = 0.7;
        let h = build_spin_hamiltonian(&ModelParams::resonant(1.0, lambda, n_spins)).unwrap();
        let blocks = block_decompose(&h, n_spins).unwrap();
        for p in &blocks.pairs {
            let nf = p.n as f64;
            let (a, b) = (p.h[0][0].re, p.h[1][1].re);
            let w = (0.25 * (a - b).powi(2) + p.h[0][1].norm_sqr()).sqrt();
            let expected = 2.0 * lambda * ((nf + 1.0) * (1.0 - nf / n_spins as f64)).sqrt();
            assert!((2.0 * w - expected).abs() < 1e-12);
        }
    }
}
