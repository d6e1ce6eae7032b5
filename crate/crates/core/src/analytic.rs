//! Exponential sums over floor powers and the Gamma-function main term.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::counting::{rep_spectrum, CountOptions};
use crate::error::{Error, Result};
use crate::floorpow::{floor_pow, PrecisionPolicy};
use crate::summation::{ComplexSum, KahanSum};
use crate::table::{FloorPowerTable, TableEntry, WeightMode};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SumKind {
    S,
    #[serde(rename = "S-dyadic")]
    SDyadic,
    T,
    G,
    #[serde(rename = "U-vonMangoldt")]
    UVonMangoldt,
}

impl fmt::Display for SumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SumKind::S => "S",
            SumKind::SDyadic => "S-dyadic",
            SumKind::T => "T",
            SumKind::G => "G",
            SumKind::UVonMangoldt => "U-vonMangoldt",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumSample {
    pub alpha: f64,
    pub value: Complex64,
    pub kind: SumKind,
}

/// `{v·α}` computed from the exact binary expansion of `α`, so large `v`
/// lose no phase accuracy.
pub fn frac_mul(v: u64, alpha: f64) -> f64 {
    if alpha == 0.0 || v == 0 {
        return 0.0;
    }
    let a = alpha - alpha.floor();
    if a == 0.0 {
        return 0.0;
    }
    let bits = a.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let (mant, e) = if exp == 0 {
        (bits & ((1 << 52) - 1), -1074)
    } else {
        ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
    };
    let shift = -e;
    if shift >= 120 {
        let x = v as f64 * a;
        return x - x.floor();
    }
    let prod = (v as u128) * (mant as u128);
    let mask = (1u128 << shift) - 1;
    let low = prod & mask;
    let top_bits = 128 - low.leading_zeros() as i32;
    let drop = (top_bits - 60).max(0);
    ((low >> drop) as f64) * 2f64.powi(drop - shift)
}

/// `e(x) = exp(2πix)` for `x` already reduced to `[0, 1)`.
fn e_reduced(x: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * x).sin_cos();
    Complex64::new(c, s)
}

pub fn e(x: f64) -> Complex64 {
    e_reduced(x - x.floor())
}

fn weighted_phase_sum(entries: &[TableEntry], alpha: f64) -> Complex64 {
    let partials: Vec<Complex64> = entries
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = ComplexSum::default();
            for en in chunk {
                acc.add(e_reduced(frac_mul(en.v, alpha)) * en.w);
            }
            acc.total()
        })
        .collect();
    let mut acc = ComplexSum::default();
    for z in partials {
        acc.add(z);
    }
    acc.total()
}

fn require_mode(table: &FloorPowerTable, mode: WeightMode) -> Result<()> {
    if table.mode != mode {
        return Err(Error::InvalidArgument(format!(
            "sum needs a {mode} table, got {}",
            table.mode
        )));
    }
    Ok(())
}

/// `S(α) = Σ_{p ≤ P} log p · e([p^c]α)`.
pub fn eval_s(table: &FloorPowerTable, alpha: f64) -> Result<Complex64> {
    require_mode(table, WeightMode::LogPrime)?;
    Ok(weighted_phase_sum(&table.entries, alpha))
}

/// `S(α)` restricted to the dyadic block `P/2 < p ≤ P`.
pub fn eval_s_dyadic(table: &FloorPowerTable, alpha: f64) -> Result<Complex64> {
    require_mode(table, WeightMode::LogPrime)?;
    let half = table.limit / 2;
    let start = table.entries.partition_point(|en| en.p <= half);
    Ok(weighted_phase_sum(&table.entries[start..], alpha))
}

/// `Σ_{n ≤ P} Λ(n) e([n^c]α)`.
pub fn eval_u(table: &FloorPowerTable, alpha: f64) -> Result<Complex64> {
    require_mode(table, WeightMode::VonMangoldt)?;
    Ok(weighted_phase_sum(&table.entries, alpha))
}

/// `𝒯(α, X) = Σ_{X < n ≤ 2X} e([n^c]α)`.
pub fn eval_t(x: u64, c: f64, alpha: f64, policy: &PrecisionPolicy) -> Result<Complex64> {
    if x < 1 {
        return Err(Error::InvalidArgument("X must be at least 1".into()));
    }
    let ns: Vec<u64> = (x + 1..=2 * x).collect();
    let partials: Vec<Complex64> = ns
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = ComplexSum::default();
            for &n in chunk {
                let v = floor_pow(n, c, policy)?;
                let v = u64::try_from(v).map_err(|_| Error::Overflow(format!("[{n}^{c}]")))?;
                acc.add(e_reduced(frac_mul(v, alpha)));
            }
            Ok(acc.total())
        })
        .collect::<Result<_>>()?;
    let mut acc = ComplexSum::default();
    for z in partials {
        acc.add(z);
    }
    Ok(acc.total())
}

/// `G(α) = Σ_{m ≤ N} (1/c) m^{1/c−1} e(mα)`.
pub fn eval_g(n: u64, c: f64, alpha: f64) -> Result<Complex64> {
    if n < 1 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::InvalidArgument(format!("exponent c must exceed 1, got {c}")));
    }
    let k = 1.0 / c - 1.0;
    let n_chunks = (n as usize).div_ceil(CHUNK);
    let partials: Vec<Complex64> = (0..n_chunks)
        .into_par_iter()
        .map(|i| {
            let lo = (i * CHUNK) as u64 + 1;
            let hi = (lo + CHUNK as u64 - 1).min(n);
            let mut acc = ComplexSum::default();
            for m in lo..=hi {
                acc.add(e_reduced(frac_mul(m, alpha)) * ((m as f64).powf(k) / c));
            }
            acc.total()
        })
        .collect();
    let mut acc = ComplexSum::default();
    for z in partials {
        acc.add(z);
    }
    Ok(acc.total())
}

/// `c_h(α) = (1 − e(−α)) / (2πi(h + α))`.
pub fn fourier_coeff(h: i64, alpha: f64) -> Result<Complex64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let num = Complex64::new(1.0, 0.0) - e(-alpha);
    let den = Complex64::new(0.0, 2.0 * PI * (h as f64 + alpha));
    Ok(num / den)
}

/// Distance from `x` to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    let f = x - x.floor();
    f.min(1.0 - f)
}

/// `min(1, 1/(H‖x‖))`, the pointwise size of the truncation error.
pub fn sawtooth_bound(x: f64, h: u64) -> f64 {
    (1.0 / (h as f64 * dist_to_int(x))).min(1.0)
}

/// `|e(−α{x}) − Σ_{|h| ≤ H} c_h(α) e(hx)|`.
pub fn sawtooth_error(x: f64, alpha: f64, h_max: u64) -> Result<f64> {
    if h_max < 3 {
        return Err(Error::InvalidArgument(format!("H must be at least 3, got {h_max}")));
    }
    if !x.is_finite() || x == x.floor() {
        return Err(Error::InvalidArgument(format!("expansion is invalid at the integer {x}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let fx = x - x.floor();
    let scale = Complex64::new(1.0, 0.0) - e(-alpha);
    let mut acc = ComplexSum::default();
    let h = h_max as i64;
    for k in -h..=h {
        let coeff = Complex64::new(0.0, 2.0 * PI * (k as f64 + alpha)).inv();
        acc.add(coeff * e(k as f64 * fx));
    }
    let approx = scale * acc.total();
    Ok((e(-alpha * fx) - approx).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MainTermParams {
    #[serde(rename = "N")]
    pub n: u64,
    pub c: f64,
    pub s: usize,
}

impl MainTermParams {
    pub fn new(n: u64, c: f64, s: usize) -> Result<MainTermParams> {
        let p = MainTermParams { n, c, s };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s < 2 {
            return Err(Error::InvalidSummands(self.s));
        }
        if !(self.c.is_finite() && self.c > 1.0) {
            return Err(Error::InvalidArgument(format!("exponent c must exceed 1, got {}", self.c)));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument("N must be at least 2".into()));
        }
        Ok(())
    }
}

/// `Γ^s(1+1/c) / Γ(s/c) · N^{s/c−1}`.
pub fn main_term(params: &MainTermParams) -> Result<f64> {
    params.validate()?;
    let s = params.s as f64;
    let inv = 1.0 / params.c;
    let log = s * ln_gamma(1.0 + inv) - ln_gamma(s * inv) + (s * inv - 1.0) * (params.n as f64).ln();
    Ok(log.exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub count: usize,
    pub spacing: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcScanReport {
    #[serde(rename = "P")]
    pub p: u64,
    pub c: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub grid: GridSpec,
    pub max_abs: f64,
    pub argmax_alpha: f64,
    pub theta_exponent_observed: f64,
    pub chebyshev_theta: f64,
}

/// `τ = P^{1−c−ε}`.
pub fn minor_arc_tau(p: u64, c: f64, epsilon: f64) -> f64 {
    (p as f64).powf(1.0 - c - epsilon)
}

/// `α_i = τ + (1/2 − τ)·i/n` for `i = 1..=n`; doubling `n` yields a
/// superset of points.
pub fn arc_grid(tau: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|i| tau + (0.5 - tau) * (i as f64 / count as f64))
        .collect()
}

/// `S(α)` at each point, in input order.
pub fn scan_s(table: &FloorPowerTable, alphas: &[f64]) -> Result<Vec<SumSample>> {
    require_mode(table, WeightMode::LogPrime)?;
    Ok(alphas
        .par_iter()
        .map(|&alpha| {
            let mut acc = ComplexSum::default();
            for en in &table.entries {
                acc.add(e_reduced(frac_mul(en.v, alpha)) * en.w);
            }
            SumSample {
                alpha,
                value: acc.total(),
                kind: SumKind::S,
            }
        })
        .collect())
}

/// Sup of `|S(α)|` over a uniform grid on `(τ, 1/2]`.
pub fn minor_arc_scan(table: &FloorPowerTable, epsilon: f64, grid_count: usize) -> Result<ArcScanReport> {
    if grid_count < 1000 {
        return Err(Error::InvalidArgument(format!("grid needs at least 1000 points, got {grid_count}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let p = table.limit;
    let tau = minor_arc_tau(p, table.c, epsilon);
    let samples = scan_s(table, &arc_grid(tau, grid_count))?;
    let (argmax_alpha, max_abs) = samples
        .iter()
        .map(|s| (s.alpha, s.value.norm()))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let mut theta = KahanSum::default();
    for en in &table.entries {
        theta.add(en.w);
    }
    Ok(ArcScanReport {
        p,
        c: table.c,
        epsilon,
        tau,
        grid: GridSpec {
            count: grid_count,
            spacing: "uniform: tau + (1/2 - tau) i / count, i = 1..count".into(),
        },
        max_abs,
        argmax_alpha,
        theta_exponent_observed: max_abs.ln() / (p as f64).ln(),
        chebyshev_theta: theta.total(),
    })
}

/// `(1/M) Σ_{j<M} |S(j/M)|⁴`, exact for `M` above the degree of `|S|⁴`.
pub fn quadrature_moment4(table: &FloorPowerTable, points: usize) -> Result<f64> {
    if points == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one point".into()));
    }
    let alphas: Vec<f64> = (0..points).map(|j| j as f64 / points as f64).collect();
    let samples = scan_s(table, &alphas)?;
    let mut acc = KahanSum::default();
    for s in &samples {
        acc.add(s.value.norm_sqr().powi(2));
    }
    Ok(acc.total() / points as f64)
}

/// `(1/M) Σ |S(α_j)|⁴ · 2τ` over a uniform midpoint grid on `(−τ, τ)`.
pub fn restricted_moment4(table: &FloorPowerTable, tau: f64, points: usize) -> Result<f64> {
    if points == 0 || !(tau > 0.0 && tau <= 0.5) {
        return Err(Error::InvalidArgument("restricted moment needs points > 0 and tau in (0, 1/2]".into()));
    }
    let alphas: Vec<f64> = (0..points)
        .map(|j| -tau + 2.0 * tau * (j as f64 + 0.5) / points as f64)
        .map(|a| if a < 0.0 { a + 1.0 } else { a })
        .collect();
    let samples = scan_s(table, &alphas)?;
    let mut acc = KahanSum::default();
    for s in &samples {
        acc.add(s.value.norm_sqr().powi(2));
    }
    Ok(acc.total() * 2.0 * tau / points as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPoint {
    #[serde(rename = "N")]
    pub n: u64,
    pub ratio: f64,
    pub weighted: f64,
    pub main_term: f64,
}

/// `ℛ_s(N) / main_term` for each `N`, from a single spectrum up to the
/// largest `N`.
pub fn asymptotic_ratio(
    table: &FloorPowerTable,
    n_list: &[u64],
    s: usize,
    opts: &CountOptions,
) -> Result<Vec<AsymptoticPoint>> {
    let Some(&n_max) = n_list.iter().max() else {
        return Ok(Vec::new());
    };
    let spectrum = rep_spectrum(table, s, n_max, opts)?;
    n_list
        .iter()
        .map(|&n| {
            let mt = main_term(&MainTermParams::new(n, table.c, s)?)?;
            let weighted = spectrum[n as usize].weighted;
            Ok(AsymptoticPoint {
                n,
                ratio: weighted / mt,
                weighted,
                main_term: mt,
            })
        })
        .collect()
}
