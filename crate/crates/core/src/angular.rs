//! Angular-momentum building blocks for the spin Wigner function:
//! Clebsch-Gordan coefficients, normalized spherical harmonics and
//! Gauss-Legendre nodes.

use crate::error::{Result, RevivalError};
use crate::linalg::{LogFactorials, C64};

/// Converts a (half-)integer to twice its value, rejecting anything else.
pub fn twice(x: f64) -> Result<i64> {
    let t = 2.0 * x;
    if !t.is_finite() || (t - t.round()).abs() > 1e-9 {
        return Err(RevivalError::InvalidAngularMomentum(format!("{x} is not a half-integer")));
    }
    Ok(t.round() as i64)
}

/// Clebsch-Gordan coefficient `<j1 m1; j2 m2 | J M>` (Condon-Shortley phase).
///
/// Arguments may be integers or half-integers. Returns zero when the
/// selection rules (`M = m1 + m2`, triangle inequality) fail.
pub fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> Result<f64> {
    let args = [twice(j1)?, twice(m1)?, twice(j2)?, twice(m2)?, twice(j)?, twice(m)?];
    let [tj1, tm1, tj2, tm2, tj, tm] = args;
    for (tjx, tmx) in [(tj1, tm1), (tj2, tm2), (tj, tm)] {
        if tjx < 0 || tmx.abs() > tjx || (tjx + tmx) % 2 != 0 {
            return Err(RevivalError::InvalidAngularMomentum(format!(
                "projection {} outside spin {}",
                tmx as f64 / 2.0,
                tjx as f64 / 2.0
            )));
        }
    }
    let lf = LogFactorials::new(((tj1 + tj2 + tj) / 2 + 1).max(0) as usize);
    Ok(cg_twice(&lf, tj1, tm1, tj2, tm2, tj, tm))
}

/// Racah's closed form with all arguments doubled; every factorial is
/// evaluated as `exp(ln k!)` from `lf`.
pub(crate) fn cg_twice(lf: &LogFactorials, tj1: i64, tm1: i64, tj2: i64, tm2: i64, tj: i64, tm: i64) -> f64 {
    if tm1 + tm2 != tm || tj > tj1 + tj2 || tj < (tj1 - tj2).abs() || (tj1 + tj2 + tj) % 2 != 0 {
        return 0.0;
    }
    let h = |t: i64| -> usize { (t / 2) as usize };
    let f = |t: i64| lf.ln_fact(h(t));
    let ln_delta = f(tj1 + tj2 - tj) + f(tj1 - tj2 + tj) + f(-tj1 + tj2 + tj) - lf.ln_fact(h(tj1 + tj2 + tj) + 1);
    let ln_pre = 0.5
        * ((((tj + 1) as f64).ln())
            + ln_delta
            + f(tj1 + tm1)
            + f(tj1 - tm1)
            + f(tj2 + tm2)
            + f(tj2 - tm2)
            + f(tj + tm)
            + f(tj - tm));
    // summation index k (in units of 1, so doubled: 2k)
    let kmin = 0.max((tj2 - tj - tm1) / 2).max((tj1 - tj + tm2) / 2);
    let kmax = ((tj1 + tj2 - tj) / 2).min((tj1 - tm1) / 2).min((tj2 + tm2) / 2);
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let tk = 2 * k;
        let ln_den = lf.ln_fact(k as usize)
            + f(tj1 + tj2 - tj - tk)
            + f(tj1 - tm1 - tk)
            + f(tj2 + tm2 - tk)
            + f(tj - tj2 + tm1 + tk)
            + f(tj - tj1 - tm2 + tk);
        let term = (ln_pre - ln_den).exp();
        sum += if k % 2 == 0 { term } else { -term };
    }
    sum
}

/// Table of `Y_lm(theta, .)` without the `e^{i m phi}` factor, for `m >= 0`,
/// using the normalized associated-Legendre recurrence with the
/// Condon-Shortley phase:
///
/// ```text
/// P_00 = 1/sqrt(4 pi)
/// P_mm = -sqrt((2m+1)/(2m)) sin(theta) P_{m-1,m-1}
/// P_{m+1,m} = sqrt(2m+3) cos(theta) P_mm
/// P_lm = a_lm (cos(theta) P_{l-1,m} - P_{l-2,m} / a_{l-1,m}),
///     a_lm = sqrt((4l^2 - 1) / (l^2 - m^2))
/// ```
#[derive(Clone, Debug)]
pub struct LegendreTable {
    l_max: usize,
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn new(l_max: usize, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let mut values = vec![0.0; (l_max + 1) * (l_max + 2) / 2];
        let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
        let a = |l: usize, m: usize| {
            let (lf, mf) = (l as f64, m as f64);
            ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt()
        };
        let mut pmm = 0.5 / std::f64::consts::PI.sqrt();
        for m in 0..=l_max {
            if m > 0 {
                pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
            }
            values[idx(m, m)] = pmm;
            if m < l_max {
                values[idx(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * c * pmm;
            }
            for l in (m + 2)..=l_max {
                values[idx(l, m)] = a(l, m) * (c * values[idx(l - 1, m)] - values[idx(l - 2, m)] / a(l - 1, m));
            }
        }
        Self { l_max, values }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// Normalized `P_lm(cos theta)` for `0 <= m <= l`.
    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.values[l * (l + 1) / 2 + m]
    }
}

/// `Y_lm(theta, phi)` for any `|m| <= l`.
pub fn spherical_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> C64 {
    let t = LegendreTable::new(l, theta);
    let am = m.unsigned_abs() as usize;
    let y = C64::from_polar(t.get(l, am), am as f64 * phi);
    if m >= 0 {
        y
    } else if am.is_multiple_of(2) {
        y.conj()
    } else {
        -y.conj()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}
