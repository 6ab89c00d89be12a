use std::io::{self, Write};

use rayon::prelude::*;
use revival_core::cat::{cat_fidelity, cat_state, exact_state_at_t0, fidelity_surface, fidelity_vs_time, CatSpec, FidelitySeries};
use revival_core::dicke::{fock_coherent, spin_coherent, Amplitudes, SpinCoherentParams};
use revival_core::dynamics::{attractor_time, evolve, reduce_bigspin, DensePropagator, EvolveOptions, Propagator, TimeGrid, Trajectory};
use revival_core::hamiltonians::{
    block_decompose, build_jc_hamiltonian, build_spin_hamiltonian, BlockDecomposition, CompositeState, ModelParams, QubitState,
};
use revival_core::linalg::distance;
use revival_core::metrology::{cross_section, precision_surface, qfi_jy, qfi_jy_dense, CrossSection};
use revival_core::sweep::{format_f64, CellError, SweepGrid};
use revival_core::wigner::{wigner_function, SphereGrid, WignerField};
use revival_core::{RevivalError, C64};

use crate::config::RunConfig;
use crate::output::{CellFailure, CellSummary, OracleSummary, OutputDir};
use crate::{CliError, Command, Plan};

/// Largest state distance or relative Fisher-information gap accepted by `--oracle`.
pub const ORACLE_TOL: f64 = 1e-10;

/// Largest deviation of the sphere integral from one.
pub const SPHERE_INTEGRAL_TOL: f64 = 1e-6;

#[derive(Debug, Default)]
pub struct Outcome {
    pub cells: CellSummary,
    pub oracle: Option<OracleSummary>,
}

impl Outcome {
    fn record_grid(&mut self, sweep: &str, grid: &SweepGrid) {
        self.cells.total += grid.cells.len();
        self.record_failures(sweep, grid.failures());
    }

    fn record_failures<'a>(&mut self, sweep: &str, failures: impl IntoIterator<Item = &'a CellError>) {
        for f in failures {
            self.cells.failed += 1;
            self.cells.errors.push(CellFailure { sweep: sweep.into(), row: f.row, col: f.col, error: f.error.to_string() });
        }
    }

    fn oracle(&mut self, deviations: &[f64]) -> Result<(), CliError> {
        let max = deviations.iter().copied().fold(0.0, f64::max);
        let o = self.oracle.get_or_insert(OracleSummary { checks: 0, max_deviation: 0.0, tolerance: ORACLE_TOL });
        o.checks += deviations.len();
        o.max_deviation = o.max_deviation.max(max);
        if !(max <= ORACLE_TOL) {
            return Err(CliError::Numerical(RevivalError::InvariantViolation(format!(
                "dense cross-check deviates by {max:e} (tolerance {ORACLE_TOL:e})"
            ))));
        }
        Ok(())
    }
}

pub fn dispatch(plan: &Plan, cfg: &RunConfig, hash: &str, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let mut outcome = Outcome::default();
    match plan.command {
        Command::Dynamics => dynamics(cfg, hash, out, &mut outcome)?,
        Command::FidelityScan => {
            if plan.modes.contains(&"surface") {
                fidelity_scan_surface(cfg, hash, out, &mut outcome)?;
            }
            if plan.modes.contains(&"series") {
                fidelity_scan_series(cfg, hash, out, &mut outcome)?;
            }
        }
        Command::Wigner => wigner(cfg, hash, out, &mut outcome)?,
        Command::Metrology => {
            if plan.modes.contains(&"surface") {
                metrology_surface(cfg, hash, out, &mut outcome)?;
            }
            if plan.modes.contains(&"cross_section") {
                metrology_cross_section(cfg, hash, out, &mut outcome)?;
            }
        }
    }
    Ok(outcome)
}

fn header_lines(kind: &str, hash: &str, extra: Vec<String>) -> Vec<String> {
    let mut lines = vec![
        format!("revival {kind}"),
        format!("config_hash={hash}"),
        "units: hbar = 1, times in units of 1/lambda when lambda = 1".to_string(),
    ];
    lines.extend(extra);
    lines
}

fn write_meta(w: &mut Vec<u8>, lines: &[String]) -> io::Result<()> {
    for l in lines {
        writeln!(w, "# {l}")?;
    }
    Ok(())
}

fn model_params(cfg: &RunConfig, levels: usize) -> ModelParams {
    ModelParams { omega: cfg.model.omega, omega_qubit: cfg.model.omega_qubit, lambda: cfg.model.lambda, levels }
}

fn time_grid(cfg: &RunConfig, t0: f64) -> Result<TimeGrid, CliError> {
    let t = &cfg.time;
    let end = match (t.t_end, t.t_end_over_t0) {
        (Some(end), _) => end,
        (None, Some(r)) => r * t0,
        (None, None) => unreachable!("validated"),
    };
    if !(end > t.t_start) {
        return Err(CliError::Config(format!("time grid [{}, {end}] is empty (t0 = {t0})", t.t_start)));
    }
    Ok(TimeGrid::new(t.t_start, end, t.samples)?)
}

fn max_oracle_distance(blocks: &BlockDecomposition, dense: &DensePropagator, psi0: &CompositeState, times: &[f64]) -> Vec<f64> {
    times
        .par_iter()
        .map(|&t| distance(&blocks.propagate(psi0.amplitudes(), t), &dense.propagate(psi0.amplitudes(), t)))
        .collect()
}

fn write_trajectory(out: &mut OutputDir, name: &str, meta: &[String], tr: &Trajectory) -> Result<(), CliError> {
    out.write_with(name, |w| {
        write_meta(w, meta)?;
        writeln!(w, "t,sigma_z,qubit_linear_entropy")?;
        for (t, o) in tr.times.iter().zip(&tr.observables) {
            writeln!(w, "{},{},{}", format_f64(*t), format_f64(o.sigma_z), format_f64(o.qubit_linear_entropy))?;
        }
        Ok(())
    })
}

fn dynamics(cfg: &RunConfig, hash: &str, out: &mut OutputDir, outcome: &mut Outcome) -> Result<(), CliError> {
    let n = cfg.model.n_spins;
    let zeta = cfg.model.zeta();
    let lambda = cfg.model.lambda;
    let t0 = attractor_time(n, zeta.norm(), lambda)?;
    let grid = time_grid(cfg, t0)?;
    let common = vec![
        format!("omega={}", format_f64(cfg.model.omega)),
        format!("omega_qubit={}", format_f64(cfg.model.omega_qubit)),
        format!("lambda={}", format_f64(lambda)),
        format!("zeta_re={}", format_f64(zeta.re)),
        format!("zeta_im={}", format_f64(zeta.im)),
        format!("t0={}", format_f64(t0)),
        "qubit_initial=|0> (excited)".to_string(),
    ];

    let h = build_spin_hamiltonian(&model_params(cfg, n))?;
    let blocks = block_decompose(&h, n)?;
    let psi0 = CompositeState::product(QubitState::excited(), &spin_coherent(SpinCoherentParams::scaled(n, zeta))?)?;
    let tr = evolve(&blocks, &psi0, &grid, &EvolveOptions::lean())?;
    if cfg.run.oracle {
        outcome.oracle(&max_oracle_distance(&blocks, &DensePropagator::new(&h)?, &psi0, &tr.times))?;
    }
    let mut meta = header_lines("dynamics", hash, vec!["model=spin".into(), format!("N={n}")]);
    meta.extend(common.iter().cloned());
    write_trajectory(out, "dynamics.csv", &meta, &tr)?;

    if cfg.jc.enabled {
        let cutoff = cfg.jc_cutoff();
        let h = build_jc_hamiltonian(&model_params(cfg, cutoff))?;
        let blocks = block_decompose(&h, cutoff)?;
        let psi0 = CompositeState::product_fock(QubitState::excited(), &fock_coherent(zeta, cutoff)?)?;
        let tr = evolve(&blocks, &psi0, &grid, &EvolveOptions::lean())?;
        if cfg.run.oracle {
            outcome.oracle(&max_oracle_distance(&blocks, &DensePropagator::new(&h)?, &psi0, &tr.times))?;
        }
        let mut meta = header_lines("dynamics", hash, vec!["model=jc".into(), format!("cutoff={cutoff}")]);
        meta.extend(common);
        write_trajectory(out, "dynamics_jc.csv", &meta, &tr)?;
    }
    Ok(())
}

/// Dense cross-check of the exact state at `t0` for every `(N, x)` cell.
fn cat_oracle(n_values: &[usize], ratios: &[f64], lambda: f64) -> Result<Vec<f64>, CliError> {
    let per_n: Vec<Result<Vec<f64>, RevivalError>> = n_values
        .par_iter()
        .map(|&n| {
            let h = build_spin_hamiltonian(&ModelParams::interaction_frame(lambda, n))?;
            let dense = DensePropagator::new(&h)?;
            let blocks = block_decompose(&h, n)?;
            let mut devs = Vec::new();
            for &x in ratios {
                let Ok(spec) = CatSpec::from_ratio(n, x, lambda) else { continue };
                let psi0 = spec.initial_composite()?;
                let t0 = spec.t0()?;
                devs.push(distance(&blocks.propagate(psi0.amplitudes(), t0), &dense.propagate(psi0.amplitudes(), t0)));
            }
            Ok(devs)
        })
        .collect();
    let mut all = Vec::new();
    for d in per_n {
        all.extend(d?);
    }
    Ok(all)
}

fn fidelity_scan_surface(cfg: &RunConfig, hash: &str, out: &mut OutputDir, outcome: &mut Outcome) -> Result<(), CliError> {
    let s = &cfg.sweep;
    let lambda = cfg.model.lambda;
    let grid = fidelity_surface(&s.n_values, &s.ratios, lambda)?;
    outcome.record_grid("fidelity_surface", &grid);
    if cfg.run.oracle {
        outcome.oracle(&cat_oracle(&grid.rows, &grid.cols, lambda)?)?;
    }
    let meta = header_lines(
        "fidelity-scan surface",
        hash,
        vec![
            format!("lambda={}", format_f64(lambda)),
            "fidelity=sqrt(<psi_cat| rho_BS(t0) |psi_cat>), zeta real = sqrt(x N)".into(),
        ],
    );
    out.write_with("fidelity_surface.csv", |w| grid.write_csv(w, &meta))
}

fn fidelity_scan_series(cfg: &RunConfig, hash: &str, out: &mut OutputDir, outcome: &mut Outcome) -> Result<(), CliError> {
    let se = &cfg.series;
    let lambda = cfg.model.lambda;
    let zeta = C64::new(se.zeta_sq.sqrt(), 0.0);
    let series: Vec<(usize, Result<FidelitySeries, RevivalError>)> = se
        .n_values
        .par_iter()
        .map(|&n| {
            let run = || {
                let spec = CatSpec::new(n, zeta, lambda)?;
                let t0 = spec.t0()?;
                fidelity_vs_time(&spec, &TimeGrid::new(0.0, se.t_end_over_t0 * t0, se.samples)?)
            };
            (n, run())
        })
        .collect();
    outcome.cells.total += series.len();
    let failures: Vec<CellError> = series
        .iter()
        .filter_map(|(n, r)| r.as_ref().err().map(|e| CellError { row: *n, col: se.zeta_sq, error: e.clone() }))
        .collect();
    outcome.record_failures("fidelity_vs_time", &failures);
    if cfg.run.oracle {
        let ratios: Vec<usize> = se.n_values.clone();
        let devs: Result<Vec<Vec<f64>>, CliError> =
            ratios.iter().map(|&n| cat_oracle(&[n], &[se.zeta_sq / n as f64], lambda)).collect();
        outcome.oracle(&devs?.concat())?;
    }
    let meta = header_lines(
        "fidelity-scan series",
        hash,
        vec![format!("lambda={}", format_f64(lambda)), format!("zeta_sq={}", format_f64(se.zeta_sq))],
    );
    out.write_with("fidelity_vs_time.csv", |w| {
        write_meta(w, &meta)?;
        writeln!(w, "N,t,t_over_t0,fidelity,status")?;
        for (n, r) in &series {
            match r {
                Ok(s) => {
                    for (t, f) in s.times.iter().zip(&s.fidelity) {
                        writeln!(w, "{n},{},{},{},ok", format_f64(*t), format_f64(t / s.t0), format_f64(*f))?;
                    }
                }
                Err(e) => writeln!(w, "{n},,,,\"error: {}\"", e.to_string().replace('"', "'"))?,
            }
        }
        Ok(())
    })
}

struct Panel {
    spec: CatSpec,
    t0: f64,
    fidelity: f64,
    grid: SphereGrid,
    field: WignerField,
    integral: f64,
    oracle: Option<f64>,
}

fn wigner(cfg: &RunConfig, hash: &str, out: &mut OutputDir, outcome: &mut Outcome) -> Result<(), CliError> {
    let lambda = cfg.model.lambda;
    let panels: Vec<Result<Panel, CliError>> = cfg
        .sphere
        .panels
        .par_iter()
        .map(|p| {
            let spec = CatSpec::new(p.n_spins, C64::new(p.zeta_sq().sqrt(), 0.0), lambda)?;
            let t0 = spec.t0()?;
            let psi = exact_state_at_t0(&spec)?;
            let (n_theta, n_phi) = cfg.sphere.resolution(p.n_spins);
            let grid = SphereGrid::new(n_theta, n_phi)?;
            let field = wigner_function(&reduce_bigspin(&psi), &grid)?;
            let integral = field.integrate(&grid)?;
            // exact quadrature needs n_theta >= N/2 + 1 and n_phi >= N + 1
            if 2 * n_theta >= p.n_spins + 2 && n_phi > p.n_spins && (integral - 1.0).abs() > SPHERE_INTEGRAL_TOL {
                return Err(CliError::Numerical(RevivalError::InvariantViolation(format!(
                    "Wigner function of N={} integrates to {integral}",
                    p.n_spins
                ))));
            }
            let oracle = if cfg.run.oracle { Some(cat_oracle(&[p.n_spins], &[p.zeta_sq() / p.n_spins as f64], lambda)?[0]) } else { None };
            Ok(Panel { spec, t0, fidelity: cat_fidelity(&spec)?, grid, field, integral, oracle })
        })
        .collect();
    for (k, panel) in panels.into_iter().enumerate() {
        let panel = panel?;
        if let Some(d) = panel.oracle {
            outcome.oracle(&[d])?;
        }
        let n = panel.spec.n_spins;
        let meta = header_lines(
            "wigner",
            hash,
            vec![
                format!("N={n}"),
                format!("zeta_sq={}", format_f64(panel.spec.zeta.norm_sqr())),
                format!("lambda={}", format_f64(lambda)),
                format!("t0={}", format_f64(panel.t0)),
                format!("cat_fidelity={}", format_f64(panel.fidelity)),
                format!("sphere_integral={}", format_f64(panel.integral)),
                format!("grid={}x{}", panel.grid.n_theta(), panel.grid.n_phi()),
                "convention: Dicke n=0 (all spins down) at theta=0".into(),
            ],
        );
        let name = format!("wigner_panel{}_N{n}.csv", k + 1);
        out.write_with(&name, |w| {
            write_meta(w, &meta)?;
            writeln!(w, "theta,phi,W")?;
            for (i, th) in panel.grid.thetas.iter().enumerate() {
                for (j, ph) in panel.grid.phis.iter().enumerate() {
                    writeln!(w, "{},{},{}", format_f64(*th), format_f64(*ph), format_f64(panel.field.at(i, j)))?;
                }
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn metrology_surface(cfg: &RunConfig, hash: &str, out: &mut OutputDir, outcome: &mut Outcome) -> Result<(), CliError> {
    let s = &cfg.sweep;
    let lambda = cfg.model.lambda;
    let grid = precision_surface(&s.n_values, &s.ratios, lambda)?;
    outcome.record_grid("precision_surface", &grid);
    if cfg.run.oracle {
        let cells: Vec<(usize, f64)> = grid.rows.iter().flat_map(|&n| grid.cols.iter().map(move |&x| (n, x))).collect();
        let devs: Vec<f64> = cells
            .par_iter()
            .filter_map(|&(n, x)| {
                let state = cat_state(&CatSpec::from_ratio(n, x, lambda).ok()?).ok()?;
                let (a, b) = (qfi_jy(&state).ok()?, qfi_jy_dense(&state).ok()?);
                Some((a - b).abs() / a.abs().max(1.0))
            })
            .collect();
        outcome.oracle(&devs)?;
    }
    let meta = header_lines(
        "metrology surface",
        hash,
        vec![format!("lambda={}", format_f64(lambda)), "F = 4 Var(J_y) of the cat state; heisenberg_limit = 1/N".into()],
    );
    out.write_with("precision_surface.csv", |w| grid.write_csv(w, &meta))
}

fn metrology_cross_section(cfg: &RunConfig, hash: &str, out: &mut OutputDir, outcome: &mut Outcome) -> Result<(), CliError> {
    let s = &cfg.sweep;
    let lambda = cfg.model.lambda;
    let cs: CrossSection = cross_section(&s.cross_section_n, s.cross_section_ratio, lambda)?;
    outcome.cells.total += 2 * cs.n_values.len();
    let failures: Vec<CellError> = cs.fidelity.iter().chain(&cs.n_over_f).filter_map(|c| c.as_ref().err().cloned()).collect();
    outcome.record_failures("cross_section", &failures);
    let meta = header_lines(
        "metrology cross_section",
        hash,
        vec![
            format!("lambda={}", format_f64(lambda)),
            format!("zeta_sq_over_N={}", format_f64(cs.ratio)),
            CrossSection::ROUNDING_NOTE.to_string(),
        ],
    );
    out.write_with("cross_section.csv", |w| {
        write_meta(w, &meta)?;
        writeln!(w, "N,zeta_sq,fidelity,N_over_F,status")?;
        for (k, n) in cs.n_values.iter().enumerate() {
            let cell = |c: &Result<f64, CellError>| c.as_ref().map(|v| format_f64(*v)).unwrap_or_default();
            let status = match (&cs.fidelity[k], &cs.n_over_f[k]) {
                (Ok(_), Ok(_)) => "ok".to_string(),
                (Err(e), _) | (_, Err(e)) => format!("\"error: {}\"", e.error.to_string().replace('"', "'")),
            };
            writeln!(w, "{n},{},{},{},{status}", format_f64(cs.zeta_sq[k]), cell(&cs.fidelity[k]), cell(&cs.n_over_f[k]))?;
        }
        Ok(())
    })
}
