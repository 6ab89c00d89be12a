use proptest::prelude::*;
use revival_core::cat::{build_cat, cat_fidelity, CatSpec};
use revival_core::dicke::{
    collective_operator, commutator_defect, spin_coherent, Amplitudes, BigSpinState, DickeBasis, OperatorKind,
    SpinCoherentParams,
};
use revival_core::dynamics::{evolve, reduce_bigspin, reduce_qubit, DensePropagator, EvolveOptions, Propagator, TimeGrid};
use revival_core::hamiltonians::{block_decompose, build_spin_hamiltonian, CompositeState, ModelParams, QubitState};
use revival_core::linalg::{distance, Spectrum};
use revival_core::metrology::{qfi_jy, qfi_jy_dense};
use revival_core::{Operator, C64};

fn zeta_strategy(max_abs: f64) -> impl Strategy<Value = C64> {
    (0.0..max_abs, 0.0..std::f64::consts::TAU).prop_map(|(r, phi)| C64::from_polar(r, phi))
}

fn qubit_strategy() -> impl Strategy<Value = QubitState> {
    (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU).prop_map(|(theta, phi)| {
        QubitState([C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)])
    })
}

fn total_excitation(levels: usize) -> Operator {
    let d = 2 * (levels + 1);
    let m = nalgebra::DMatrix::from_fn(d, d, |r, c| {
        if r != c {
            return C64::new(0.0, 0.0);
        }
        let (q, n) = (r / (levels + 1), r % (levels + 1));
        C64::new(n as f64 + if q == 0 { 1.0 } else { 0.0 }, 0.0)
    });
    Operator::hermitian(m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coherent_states_are_normalized(n in 1usize..200, zeta in zeta_strategy(12.0)) {
        let s = spin_coherent(SpinCoherentParams::scaled(n, zeta)).unwrap();
        prop_assert!((s.norm_sq() - 1.0).abs() < 1e-12);
        let u = spin_coherent(SpinCoherentParams::unscaled(n, zeta)).unwrap();
        prop_assert!((u.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ladder_operators_are_adjoint(n in 1usize..60) {
        let basis = DickeBasis::new(n).unwrap();
        let jp = collective_operator(OperatorKind::JplusScaled, basis).unwrap();
        let jm = collective_operator(OperatorKind::JminusScaled, basis).unwrap();
        let adj = jp.adjoint();
        prop_assert_eq!(adj.matrix(), jm.matrix());
        let prod = jm.mul(&jp).unwrap();
        let diag = collective_operator(OperatorKind::JminusJplusOverN, basis).unwrap();
        prop_assert!((prod.matrix() - diag.matrix()).iter().all(|z| z.norm() < 1e-14));
        let jz = collective_operator(OperatorKind::JzShifted, basis).unwrap();
        let j2 = collective_operator(OperatorKind::Jsquared, basis).unwrap();
        prop_assert!(jz.commutator(&j2).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn commutator_defect_has_closed_form(n in 1usize..150, zeta in zeta_strategy(8.0)) {
        let z2 = zeta.norm_sqr();
        let closed = 1.0 - 2.0 * z2 / (n as f64 + z2);
        prop_assert!((commutator_defect(n, zeta).unwrap() - closed).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_conserves_excitations(n in 1usize..40, omega in 0.1f64..3.0, detuning in -1.0f64..1.0, lambda in 0.1f64..3.0) {
        let params = ModelParams { omega, omega_qubit: omega + detuning, lambda, levels: n };
        let h = build_spin_hamiltonian(&params).unwrap();
        prop_assert!(h.commutator(&total_excitation(n)).unwrap().max_abs() < 1e-12);
        let blocks = block_decompose(&h, n).unwrap();
        let dense = Spectrum::of(&h).unwrap().sorted_values();
        for (a, b) in blocks.eigenvalues().iter().zip(&dense) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn trajectories_conserve_norm_and_energy(n in 1usize..30, zeta in zeta_strategy(3.0), qubit in qubit_strategy(), t in 0.0f64..25.0) {
        let params = ModelParams::resonant(1.0, 1.0, n);
        let h = build_spin_hamiltonian(&params).unwrap();
        let blocks = block_decompose(&h, n).unwrap();
        let spin = spin_coherent(SpinCoherentParams::scaled(n, zeta)).unwrap();
        let psi0 = CompositeState::product(qubit, &spin).unwrap();
        let e0 = h.expectation(psi0.amplitudes()).unwrap().re;
        let psi = blocks.propagate(psi0.amplitudes(), t);
        prop_assert!((psi.norm_sq() - 1.0).abs() < 1e-10);
        prop_assert!((h.expectation(&psi).unwrap().re - e0).abs() < 1e-10);
        let dense = DensePropagator::new(&h).unwrap().propagate(psi0.amplitudes(), t);
        let gap = distance(&psi, &dense);
        prop_assert!(gap < 1e-10, "gap {:e}", gap);
    }

    #[test]
    fn reduced_states_share_spectrum(n in 1usize..25, zeta in zeta_strategy(3.0), t in 0.0f64..20.0) {
        let spec = CatSpec::new(n, zeta, 1.0).unwrap();
        let prop = spec.propagator().unwrap();
        let grid = TimeGrid::new(0.0, t.max(1e-3), 2).unwrap();
        let traj = evolve(&prop, &spec.initial_composite().unwrap(), &grid, &EvolveOptions::full()).unwrap();
        let psi = &traj.states.unwrap()[1];
        let mut q = reduce_qubit(psi).eigenvalues();
        let mut b = reduce_bigspin(psi).eigenvalues();
        q.reverse();
        b.reverse();
        for k in 0..2 {
            prop_assert!((q[k] - b[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn cat_states_are_normalized(n in 1usize..200, x in 0.0f64..1.0) {
        let spec = CatSpec::from_ratio(n, x, 1.0).unwrap();
        match build_cat(&spec) {
            Ok(cat) => {
                prop_assert!((cat.state.norm_sq() - 1.0).abs() < 1e-12);
                prop_assert!(cat.normalization > 0.0 && cat.normalization <= 2.0 + 1e-12);
            }
            Err(e) => {
                let degenerate = matches!(e, revival_core::RevivalError::DegenerateNormalization { .. });
                prop_assert!(degenerate, "unexpected error {}", e);
            }
        }
    }

    #[test]
    fn fidelity_depends_on_modulus_only(n in 2usize..60, x in 0.02f64..0.8) {
        let r = (x * n as f64).sqrt();
        let real = cat_fidelity(&CatSpec::new(n, C64::new(r, 0.0), 1.0).unwrap()).unwrap();
        let rotated = cat_fidelity(&CatSpec::new(n, C64::from_polar(r, std::f64::consts::FRAC_PI_3), 1.0).unwrap()).unwrap();
        prop_assert!((real - rotated).abs() < 1e-10);
    }

    #[test]
    fn fisher_information_paths_agree(n in 1usize..80, x in 0.0f64..1.0) {
        let spec = CatSpec::from_ratio(n, x, 1.0).unwrap();
        if let Ok(cat) = build_cat(&spec) {
            let a = qfi_jy(&cat.state).unwrap();
            let b = qfi_jy_dense(&cat.state).unwrap();
            prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
            prop_assert!(n as f64 / a >= 1.0 / n as f64 - 1e-12);
        }
    }

    #[test]
    fn fisher_information_is_phase_covariant(n in 1usize..60, zeta in zeta_strategy(5.0), gphase in 0.0f64..std::f64::consts::TAU) {
        let basis = DickeBasis::new(n).unwrap();
        let s = spin_coherent(SpinCoherentParams::scaled(n, zeta)).unwrap();
        let shifted: Vec<C64> = s.amplitudes().iter().map(|a| a * C64::from_polar(1.0, gphase)).collect();
        let shifted = BigSpinState::new(basis, shifted).unwrap();
        let f = qfi_jy(&s).unwrap();
        prop_assert!((qfi_jy(&shifted).unwrap() - f).abs() < 1e-10 * f.max(1.0));

        // zeta -> zeta e^{i pi/4}, with J_y conjugated by the matching rotation about z
        let turned = spin_coherent(SpinCoherentParams::scaled(n, zeta * C64::from_polar(1.0, std::f64::consts::FRAC_PI_4))).unwrap();
        let jz = collective_operator(OperatorKind::JzShifted, basis).unwrap();
        let u = Spectrum::of(&jz).unwrap();
        let jy = collective_operator(OperatorKind::Jy, basis).unwrap();
        let cols: Vec<Vec<C64>> = (0..=n)
            .map(|k| {
                let mut e = vec![C64::new(0.0, 0.0); n + 1];
                e[k] = C64::new(1.0, 0.0);
                let back = u.exp_i(&e, -std::f64::consts::FRAC_PI_4);
                u.exp_i(&jy.apply(&back).unwrap(), std::f64::consts::FRAC_PI_4)
            })
            .collect();
        let conj = nalgebra::DMatrix::from_fn(n + 1, n + 1, |r, c| cols[c][r]);
        let op = Operator::hermitian(conj).unwrap();
        let g = revival_core::metrology::variance_qfi(&op, &turned).unwrap();
        prop_assert!((g - f).abs() < 1e-10 * f.max(1.0));
    }
}
