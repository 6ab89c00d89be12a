//! Spin Wigner function of a big-spin density matrix on the sphere.
//!
//! Convention: the state is expanded in the orthonormal irreducible tensor
//! operators `T_lm` of spin `j = N/2`,
//!
//! ```text
//! <j mu'| T_lm |j mu> = sqrt((2l+1)/(2j+1)) <j mu; l m | j mu'>
//! W(theta, phi) = sqrt((2j+1)/(4 pi)) sum_{l <= 2j, |m| <= l} Tr(rho T_lm^dagger) Y_lm(theta, phi)
//! ```
//!
//! which integrates to `Tr rho` over the unit sphere. Matrix index `k`
//! carries projection `mu = j - k`, so the Dicke index `n` (up-spin count)
//! maps to `mu = j - n`: the all-down state sits at the north pole
//! `theta = 0`, and the spin coherent state with parameter `z` peaks at
//! `theta = 2 arctan |z|`, `phi = arg z`.
//!
//! This is one convention among several; other kernels differ from it by a
//! `j`-dependent normalization and smoothing.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::angular::{cg_twice, gauss_legendre, twice, LegendreTable};
use crate::dynamics::DensityMatrix;
use crate::error::{Result, RevivalError};
use crate::linalg::{hermitian_deviation, LogFactorials, Operator, C64};

/// Hermiticity / trace tolerance accepted by [`wigner_function`].
pub const DENSITY_TOL: f64 = 1e-8;

/// Largest imaginary residue tolerated before discarding it.
pub const IMAG_TOL: f64 = 1e-10;

/// Product quadrature: Gauss-Legendre in `cos theta`, uniform in `phi`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereGrid {
    /// Ascending polar angles in `(0, pi)`.
    pub thetas: Vec<f64>,
    /// `2 pi k / n_phi`.
    pub phis: Vec<f64>,
    theta_weights: Vec<f64>,
    phi_weight: f64,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 1 || n_phi < 1 {
            return Err(RevivalError::InvalidParameter { name: "sphere grid", reason: format!("empty grid {n_theta} x {n_phi}") });
        }
        let (x, w) = gauss_legendre(n_theta);
        // descending cos theta = ascending theta
        let thetas = x.iter().rev().map(|c| c.acos()).collect();
        let theta_weights = w.into_iter().rev().collect();
        let phis = (0..n_phi).map(|k| 2.0 * std::f64::consts::PI * k as f64 / n_phi as f64).collect();
        Ok(Self { thetas, phis, theta_weights, phi_weight: 2.0 * std::f64::consts::PI / n_phi as f64 })
    }

    /// Grid that integrates products of two Wigner functions of spin `j = n_spins / 2` exactly.
    pub fn for_spins(n_spins: usize) -> Result<Self> {
        Self::new(2 * n_spins + 2, 2 * n_spins + 2)
    }

    pub fn n_theta(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phis.len()
    }

    pub fn len(&self) -> usize {
        self.n_theta() * self.n_phi()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of node `(i_theta, i_phi)`.
    pub fn weight(&self, i_theta: usize) -> f64 {
        self.theta_weights[i_theta] * self.phi_weight
    }

    pub fn total_weight(&self) -> f64 {
        self.theta_weights.iter().sum::<f64>() * self.phi_weight * self.n_phi() as f64
    }

    /// Largest polar gap between adjacent nodes (including the poles).
    pub fn max_theta_spacing(&self) -> f64 {
        let mut edges = vec![0.0];
        edges.extend(&self.thetas);
        edges.push(std::f64::consts::PI);
        edges.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Orthonormal tensor operator `T_lm` for spin `j`.
pub fn multipole_operator(j: f64, l: usize, m: i64) -> Result<Operator> {
    let tj = twice(j)?;
    if tj < 0 {
        return Err(RevivalError::InvalidAngularMomentum(format!("negative spin {j}")));
    }
    if l as i64 > tj || m.unsigned_abs() as usize > l {
        return Err(RevivalError::InvalidAngularMomentum(format!("(l, m) = ({l}, {m}) outside 0 <= l <= 2j = {tj}")));
    }
    let d = (tj + 1) as usize;
    let lf = LogFactorials::new(2 * d + 2 * l + 2);
    let scale = ((2 * l + 1) as f64 / d as f64).sqrt();
    let mut t = DMatrix::<C64>::zeros(d, d);
    for k in 0..d {
        let tmu = tj - 2 * k as i64;
        let tmu_out = tmu + 2 * m;
        if tmu_out.abs() > tj {
            continue;
        }
        let k_out = ((tj - tmu_out) / 2) as usize;
        t[(k_out, k)] = C64::new(scale * cg_twice(&lf, tj, tmu, 2 * l as i64, 2 * m, tj, tmu_out), 0.0);
    }
    Operator::general(t)
}

/// Coefficients `rho_lm = Tr(rho T_lm^dagger)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipoleDecomposition {
    two_j: usize,
    coefficients: Vec<C64>,
}

impl MultipoleDecomposition {
    pub fn of(rho: &DensityMatrix) -> Result<Self> {
        let dev = hermitian_deviation(rho.matrix());
        if dev > DENSITY_TOL {
            return Err(RevivalError::InvalidDensityMatrix(format!("not Hermitian (deviation {dev:e})")));
        }
        let tr = rho.matrix().trace();
        if (tr - C64::new(1.0, 0.0)).norm() > DENSITY_TOL {
            return Err(RevivalError::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        Ok(Self::of_matrix(rho.matrix()))
    }

    /// Expansion of any square matrix (no physical checks).
    pub fn of_matrix(rho: &DMatrix<C64>) -> Self {
        let d = rho.nrows();
        let two_j = d - 1;
        let tj = two_j as i64;
        let lf = LogFactorials::new(4 * d + 2);
        let mut coefficients = vec![C64::new(0.0, 0.0); d * d];
        coefficients.par_iter_mut().enumerate().for_each(|(idx, out)| {
            let l = (idx as f64).sqrt() as usize;
            let l = if (l + 1) * (l + 1) <= idx { l + 1 } else { l };
            let m = idx as i64 - (l * l + l) as i64;
            let scale = ((2 * l + 1) as f64 / d as f64).sqrt();
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                let tmu = tj - 2 * k as i64;
                let tmu_out = tmu + 2 * m;
                if tmu_out.abs() > tj {
                    continue;
                }
                let k_out = ((tj - tmu_out) / 2) as usize;
                let t = scale * cg_twice(&lf, tj, tmu, 2 * l as i64, 2 * m, tj, tmu_out);
                acc += rho[(k_out, k)] * t;
            }
            *out = acc;
        });
        Self { two_j, coefficients }
    }

    pub fn two_j(&self) -> usize {
        self.two_j
    }

    /// `rho_lm`.
    pub fn coefficient(&self, l: usize, m: i64) -> C64 {
        self.coefficients[l * l + (l as i64 + m) as usize]
    }

    fn prefactor(&self) -> f64 {
        ((self.two_j + 1) as f64 / (4.0 * std::f64::consts::PI)).sqrt()
    }

    /// Complex-valued `W` at one point (imaginary part is round-off for
    /// Hermitian input).
    pub fn evaluate(&self, theta: f64, phi: f64) -> C64 {
        let table = LegendreTable::new(self.two_j, theta);
        self.prefactor() * self.row_sum(&table, phi)
    }

    fn row_sum(&self, table: &LegendreTable, phi: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..=self.two_j {
            for m in -(l as i64)..=(l as i64) {
                let am = m.unsigned_abs() as usize;
                let mut y = C64::from_polar(table.get(l, am), m as f64 * phi);
                if m < 0 && am % 2 == 1 {
                    y = -y;
                }
                acc += self.coefficient(l, m) * y;
            }
        }
        acc
    }
}

/// `W` sampled on a [`SphereGrid`], row-major in `(theta, phi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    pub n_theta: usize,
    pub n_phi: usize,
    pub values: Vec<f64>,
    /// Largest discarded imaginary part.
    pub max_imag: f64,
}

impl WignerField {
    pub fn at(&self, i_theta: usize, i_phi: usize) -> f64 {
        self.values[i_theta * self.n_phi + i_phi]
    }

    fn matches(&self, grid: &SphereGrid) -> bool {
        self.n_theta == grid.n_theta() && self.n_phi == grid.n_phi()
    }

    /// Quadrature of `W` over the sphere.
    pub fn integrate(&self, grid: &SphereGrid) -> Result<f64> {
        if !self.matches(grid) {
            return Err(RevivalError::DimensionMismatch { expected: grid.len(), actual: self.values.len() });
        }
        Ok((0..self.n_theta)
            .map(|i| grid.weight(i) * (0..self.n_phi).map(|k| self.at(i, k)).sum::<f64>())
            .sum())
    }

    /// Node with the largest value, as `(i_theta, i_phi)`.
    pub fn argmax(&self) -> (usize, usize) {
        let k = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        (k / self.n_phi, k % self.n_phi)
    }
}

/// Evaluates the Wigner function of `rho` on every node of `grid`.
pub fn wigner_function(rho: &DensityMatrix, grid: &SphereGrid) -> Result<WignerField> {
    let dec = MultipoleDecomposition::of(rho)?;
    wigner_field(&dec, grid)
}

pub fn wigner_field(dec: &MultipoleDecomposition, grid: &SphereGrid) -> Result<WignerField> {
    let pref = dec.prefactor();
    let n_phi = grid.n_phi();
    let rows: Vec<Vec<C64>> = grid
        .thetas
        .par_iter()
        .map(|&theta| {
            let table = LegendreTable::new(dec.two_j, theta);
            // A_m(theta) = sum_l rho_lm P_l|m| (with the sign of Y_{l,-m})
            let two_j = dec.two_j as i64;
            let a: Vec<C64> = (-two_j..=two_j)
                .map(|m| {
                    let am = m.unsigned_abs() as usize;
                    let sign = if m < 0 && am % 2 == 1 { -1.0 } else { 1.0 };
                    (am..=dec.two_j).map(|l| dec.coefficient(l, m) * (sign * table.get(l, am))).sum()
                })
                .collect();
            grid.phis
                .iter()
                .map(|&phi| {
                    let s: C64 = (-two_j..=two_j)
                        .zip(&a)
                        .map(|(m, am)| am * C64::from_polar(1.0, m as f64 * phi))
                        .sum();
                    pref * s
                })
                .collect()
        })
        .collect();
    let max_imag = rows.iter().flatten().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_imag > IMAG_TOL {
        return Err(RevivalError::InvariantViolation(format!("Wigner function has imaginary part {max_imag:e}")));
    }
    let values = rows.into_iter().flatten().map(|z| z.re).collect();
    Ok(WignerField { n_theta: grid.n_theta(), n_phi, values, max_imag })
}

/// Quadrature of `W1 W2`; equals `(2j+1)/(4 pi) Tr(rho1 rho2)` on a grid
/// from [`SphereGrid::for_spins`].
pub fn sphere_overlap(w1: &WignerField, w2: &WignerField, grid: &SphereGrid) -> Result<f64> {
    if !w1.matches(grid) || !w2.matches(grid) {
        return Err(RevivalError::DimensionMismatch { expected: grid.len(), actual: w1.values.len().max(w2.values.len()) });
    }
    Ok((0..grid.n_theta())
        .map(|i| grid.weight(i) * (0..grid.n_phi()).map(|k| w1.at(i, k) * w2.at(i, k)).sum::<f64>())
        .sum())
}

/// Constant relating [`sphere_overlap`] to `Tr(rho1 rho2)`.
pub fn overlap_constant(n_spins: usize) -> f64 {
    (n_spins + 1) as f64 / (4.0 * std::f64::consts::PI)
}

/// Point on the unit sphere in polar coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint {
    pub theta: f64,
    pub phi: f64,
}

impl SpherePoint {
    fn to_cartesian(self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        [st * self.phi.cos(), st * self.phi.sin(), ct]
    }

    fn from_cartesian(r: [f64; 3]) -> Self {
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        Self { theta: (r[2] / norm).clamp(-1.0, 1.0).acos(), phi: r[1].atan2(r[0]) }
    }

    /// Point a fraction `s` of the way along the shorter great-circle arc to `other`.
    pub fn slerp(self, other: SpherePoint, s: f64) -> SpherePoint {
        let (p, q) = (self.to_cartesian(), other.to_cartesian());
        let cos = (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]).clamp(-1.0, 1.0);
        let ang = cos.acos();
        if ang < 1e-12 {
            return self;
        }
        let (a, b) = (((1.0 - s) * ang).sin() / ang.sin(), (s * ang).sin() / ang.sin());
        Self::from_cartesian([a * p[0] + b * q[0], a * p[1] + b * q[1], a * p[2] + b * q[2]])
    }
}

/// Two-lobe structure of a cat-like field, read off a ring of constant
/// polar angle (the ring on which the parent coherent state peaks).
#[derive(Clone, Debug, PartialEq)]
pub struct LobeAnalysis {
    pub ring_theta: f64,
    /// The two largest positive ring maxima, strongest first.
    pub lobes: Vec<(SpherePoint, f64)>,
    /// Both ring paths between the lobes dip below `separation` times the weaker lobe.
    pub disjoint: bool,
    /// Sign changes of `W` along the great-circle arc joining the lobes,
    /// ignoring samples smaller than `noise` times the strongest lobe.
    pub arc_sign_changes: usize,
}

/// Locates the two strongest positive lobes on the ring `theta = ring_theta`
/// and counts interference fringes between them.
pub fn analyze_lobes(dec: &MultipoleDecomposition, ring_theta: f64, samples: usize) -> Result<LobeAnalysis> {
    const SEPARATION: f64 = 0.1;
    const NOISE: f64 = 1e-3;
    if samples < 8 {
        return Err(RevivalError::InvalidParameter { name: "samples", reason: format!("{samples} < 8") });
    }
    let step = 2.0 * std::f64::consts::PI / samples as f64;
    let ring: Vec<f64> = (0..samples).map(|k| dec.evaluate(ring_theta, k as f64 * step).re).collect();
    let mut peaks: Vec<usize> = (0..samples)
        .filter(|&k| {
            let (prev, next) = (ring[(k + samples - 1) % samples], ring[(k + 1) % samples]);
            ring[k] > 0.0 && ring[k] >= prev && ring[k] > next
        })
        .collect();
    peaks.sort_by(|&a, &b| ring[b].total_cmp(&ring[a]).then(a.cmp(&b)));
    peaks.truncate(2);
    let lobes: Vec<(SpherePoint, f64)> = peaks
        .iter()
        .map(|&k| (SpherePoint { theta: ring_theta, phi: k as f64 * step }, ring[k]))
        .collect();
    if lobes.len() < 2 {
        return Ok(LobeAnalysis { ring_theta, lobes, disjoint: false, arc_sign_changes: 0 });
    }
    let (a, b) = (peaks[0].min(peaks[1]), peaks[0].max(peaks[1]));
    let floor = SEPARATION * lobes[1].1;
    let inner_dip = (a..=b).map(|k| ring[k]).fold(f64::INFINITY, f64::min);
    let outer_dip = (b..a + samples).map(|k| ring[k % samples]).fold(f64::INFINITY, f64::min);
    let disjoint = inner_dip < floor && outer_dip < floor;

    let arc_samples = 4 * samples;
    let threshold = NOISE * lobes[0].1;
    let significant: Vec<f64> = (0..=arc_samples)
        .map(|k| {
            let p = lobes[0].0.slerp(lobes[1].0, k as f64 / arc_samples as f64);
            dec.evaluate(p.theta, p.phi).re
        })
        .filter(|v| v.abs() > threshold)
        .collect();
    let arc_sign_changes = significant.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    Ok(LobeAnalysis { ring_theta, lobes, disjoint, arc_sign_changes })
}
