//! Exact counting of additive representations by floor powers.
//!
//! All counts are over ordered tuples.

use std::collections::HashMap;
use std::fmt;
use std::hash::BuildHasherDefault;
use std::collections::hash_map::DefaultHasher;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conv;
use crate::error::{Error, Result};
use crate::floorpow::{floor_pow, pow_fixed, PrecisionPolicy};
use crate::summation::KahanSum;
use crate::table::FloorPowerTable;

pub const DEFAULT_MEMORY_CAP: u64 = 8_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMethod {
    DenseConvolution,
    MeetInTheMiddle,
}

impl fmt::Display for CountMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMethod::DenseConvolution => "dense-convolution",
            CountMethod::MeetInTheMiddle => "meet-in-the-middle",
        })
    }
}

impl FromStr for CountMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<CountMethod> {
        match s {
            "dense" | "dense-convolution" => Ok(CountMethod::DenseConvolution),
            "mitm" | "meet-in-the-middle" => Ok(CountMethod::MeetInTheMiddle),
            other => Err(Error::InvalidArgument(format!("unknown count method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CountOptions {
    pub memory_cap: u64,
    pub policy: PrecisionPolicy,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            memory_cap: DEFAULT_MEMORY_CAP,
            policy: PrecisionPolicy::default(),
        }
    }
}

impl CountOptions {
    fn check_memory(&self, needed: u64) -> Result<()> {
        if needed > self.memory_cap {
            return Err(Error::MemoryCap {
                needed,
                cap: self.memory_cap,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationCount {
    #[serde(rename = "N")]
    pub n: u64,
    pub s: usize,
    pub c: f64,
    pub unweighted: u128,
    pub weighted: f64,
    pub method: CountMethod,
}

fn check_s(s: usize) -> Result<()> {
    if (2..=6).contains(&s) {
        Ok(())
    } else {
        Err(Error::InvalidSummands(s))
    }
}

/// Weighted and unit histograms of `v` over entries with `v ≤ bound`.
fn histograms(table: &FloorPowerTable, bound: u64) -> (Vec<f64>, Vec<u64>) {
    let len = bound as usize + 1;
    let mut w = vec![0.0; len];
    let mut u = vec![0u64; len];
    for e in table.entries_up_to(bound) {
        w[e.v as usize] += e.w;
        u[e.v as usize] += 1;
    }
    (w, u)
}

fn dense_power(table: &FloorPowerTable, s: usize, n_max: u64, opts: &CountOptions) -> Result<(Vec<f64>, Vec<u128>)> {
    let out_len = n_max as usize + 1;
    opts.check_memory(conv::estimate_power_bytes(out_len))?;
    let (w, u) = histograms(table, n_max);
    let mut weighted = conv::power_f64(&w, s, out_len);
    let counts = conv::power_counts(&u, s, out_len)?;
    for (x, &k) in weighted.iter_mut().zip(&counts) {
        if k == 0 {
            *x = 0.0;
        }
    }
    Ok((weighted, counts))
}

type DetMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

/// Partial sums of `k` ordered summands, each sum `≤ bound`.
fn partial_sums(table: &FloorPowerTable, k: usize, bound: u64) -> DetMap<u64, (u128, f64)> {
    let entries = table.entries_up_to(bound);
    let mut level: DetMap<u64, (u128, f64)> = DetMap::default();
    level.insert(0, (1, 1.0));
    for _ in 0..k {
        let mut keys: Vec<u64> = level.keys().copied().collect();
        keys.sort_unstable();
        let mut next: DetMap<u64, (u128, f64)> = DetMap::default();
        for key in keys {
            let (cnt, wt) = level[&key];
            for e in entries {
                let sum = key + e.v;
                if sum > bound {
                    break;
                }
                let slot = next.entry(sum).or_insert((0, 0.0));
                slot.0 += cnt;
                slot.1 += wt * e.w;
            }
        }
        level = next;
    }
    level
}

fn meet_in_the_middle(table: &FloorPowerTable, n: u64, s: usize, opts: &CountOptions) -> Result<(u128, f64)> {
    opts.check_memory(2 * (n + 1) * 64)?;
    let a = s.div_ceil(2);
    let b = s - a;
    let left = partial_sums(table, a, n);
    let right = partial_sums(table, b, n);
    let mut keys: Vec<u64> = left.keys().copied().collect();
    keys.sort_unstable();
    let mut count = 0u128;
    let mut weight = KahanSum::default();
    for x in keys {
        if let Some(&(rc, rw)) = right.get(&(n - x)) {
            let (lc, lw) = left[&x];
            count += lc * rc;
            weight.add(lw * rw);
        }
    }
    Ok((count, if count == 0 { 0.0 } else { weight.total() }))
}

/// `ℛ_s(N)`: ordered solutions of `N = [p₁^c] + … + [p_s^c]` and their
/// `Π w(p_i)`-weighted sum.
pub fn rep_count(
    table: &FloorPowerTable,
    n: u64,
    s: usize,
    method: CountMethod,
    opts: &CountOptions,
) -> Result<RepresentationCount> {
    check_s(s)?;
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    table.require_covers(n, &opts.policy)?;
    let (unweighted, weighted) = match method {
        CountMethod::DenseConvolution => {
            let (w, u) = dense_power(table, s, n, opts)?;
            (u[n as usize], w[n as usize])
        }
        CountMethod::MeetInTheMiddle => meet_in_the_middle(table, n, s, opts)?,
    };
    Ok(RepresentationCount {
        n,
        s,
        c: table.c,
        unweighted,
        weighted,
        method,
    })
}

/// `ℛ_s(N)` for every `0 ≤ N ≤ n_max` from one truncated `s`-fold
/// convolution.
pub fn rep_spectrum(table: &FloorPowerTable, s: usize, n_max: u64, opts: &CountOptions) -> Result<Vec<RepresentationCount>> {
    check_s(s)?;
    table.require_covers(n_max, &opts.policy)?;
    let (w, u) = dense_power(table, s, n_max, opts)?;
    Ok(w.into_iter()
        .zip(u)
        .enumerate()
        .map(|(n, (weighted, unweighted))| RepresentationCount {
            n: n as u64,
            s,
            c: table.c,
            unweighted,
            weighted,
            method: CountMethod::DenseConvolution,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCount {
    #[serde(rename = "X")]
    pub x: u64,
    pub c: f64,
    /// Quadruples in `(X, 2X]⁴` with `[n₁^c]+[n₂^c] = [n₃^c]+[n₄^c]`.
    pub count: u128,
    /// Same identity over primes, weighted by `Π log p_i`.
    pub weighted: Option<f64>,
}

impl MomentCount {
    /// Diagonal solutions `n₁=n₃, n₂=n₄` alone give `(#range)²`.
    pub fn diagonal_bound(&self) -> u128 {
        (self.x as u128) * (self.x as u128)
    }
}

fn sum_of_squares_u(g: &[u64]) -> u128 {
    g.iter().map(|&x| (x as u128) * (x as u128)).sum()
}

fn sum_of_squares_w(g: &[f64]) -> f64 {
    let mut acc = KahanSum::default();
    for &x in g {
        acc.add(x * x);
    }
    acc.total()
}

/// Fourth-moment equal-sum count over the dyadic range `(X, 2X]`, computed
/// as `Σ_m g[m]²` for the ordered pair-sum histogram `g`.
pub fn moment4_count(
    x: u64,
    c: f64,
    prime_restricted: bool,
    table: Option<&FloorPowerTable>,
    opts: &CountOptions,
) -> Result<MomentCount> {
    if x < 2 {
        return Err(Error::InvalidArgument("moment range needs X >= 2".into()));
    }
    let values: Vec<u64> = (x + 1..=2 * x)
        .map(|n| {
            floor_pow(n, c, &opts.policy).and_then(|v| {
                u64::try_from(v).map_err(|_| Error::Overflow(format!("[{n}^{c}]")))
            })
        })
        .collect::<Result<_>>()?;
    let top = *values.last().expect("nonempty range");
    let len = 2 * top as usize + 1;
    opts.check_memory(len as u64 * 16)?;
    let mut g = vec![0u64; len];
    for &a in &values {
        for &b in &values {
            g[(a + b) as usize] += 1;
        }
    }
    let count = sum_of_squares_u(&g);
    drop(g);

    let weighted = if prime_restricted {
        let table = table.ok_or_else(|| Error::InvalidArgument("prime-restricted moment needs a table".into()))?;
        if table.c != c {
            return Err(Error::InvalidArgument(format!("table exponent {} differs from c = {c}", table.c)));
        }
        if table.limit < 2 * x {
            return Err(Error::TableDoesNotCover { n: 2 * x, limit: table.limit });
        }
        let primes: Vec<_> = table.entries.iter().filter(|e| e.p > x && e.p <= 2 * x).collect();
        let mut gw = vec![0.0f64; len];
        for a in &primes {
            for b in &primes {
                gw[(a.v + b.v) as usize] += a.w * b.w;
            }
        }
        Some(sum_of_squares_w(&gw))
    } else {
        None
    };
    Ok(MomentCount { x, c, count, weighted })
}

/// `Σ_m (Σ_{v_i + v_j = m} w_i w_j)²` over the whole table, which equals
/// `∫₀¹ |Σ w e(vα)|⁴ dα`.
pub fn table_moment4(table: &FloorPowerTable, opts: &CountOptions) -> Result<f64> {
    let top = table.entries.last().map_or(0, |e| e.v);
    let len = 2 * top as usize + 1;
    opts.check_memory(len as u64 * 8)?;
    let mut g = vec![0.0f64; len];
    for a in &table.entries {
        for b in &table.entries {
            g[(a.v + b.v) as usize] += a.w * b.w;
        }
    }
    Ok(sum_of_squares_w(&g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearEqualCount {
    #[serde(rename = "Y")]
    pub y: u64,
    pub c: f64,
    pub gamma: f64,
    pub count: u128,
}

/// Quadruples in `(Y, 2Y]⁴` with `|n₁^c + n₂^c − n₃^c − n₄^c| < γ`.
///
/// Powers are fixed-point integers with at least 40 fractional bits (most
/// of a `u128`), summed exactly in pairs, sorted, and swept with two
/// pointers.
pub fn robert_sargos_count(y: u64, c: f64, gamma: f64, opts: &CountOptions) -> Result<NearEqualCount> {
    if y < 1 {
        return Err(Error::InvalidArgument("Y must be at least 1".into()));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let m = y as usize;
    opts.check_memory((m * m) as u64 * 16)?;
    let top = 2.0 * ((2 * y) as f64).powf(c);
    let int_bits = top.log2().ceil() as i32 + 2;
    let frac_bits = 126 - int_bits;
    if frac_bits < 40 {
        return Err(Error::Overflow(format!("pair sums of n^{c} for Y = {y}")));
    }
    let frac_bits = frac_bits as u32;
    let powers: Vec<u128> = (y + 1..=2 * y)
        .map(|n| pow_fixed(n, c, frac_bits))
        .collect::<Result<_>>()?;
    let mut sums = Vec::with_capacity(m * m);
    for &a in &powers {
        for &b in &powers {
            sums.push(a + b);
        }
    }
    sums.sort_unstable();
    let scaled_gamma = gamma * 2f64.powi(frac_bits as i32);
    let count = if scaled_gamma >= 2f64.powi(127) {
        (sums.len() as u128) * (sums.len() as u128)
    } else {
        let g = scaled_gamma.ceil() as u128;
        // |a − b| < γ  ⇔  a − b < γ on the fixed-point grid, up to one unit
        let mut lo = 0usize;
        let mut hi = 0usize;
        let mut total = 0u128;
        for &s in &sums {
            while sums[lo].saturating_add(g) <= s {
                lo += 1;
            }
            while hi < sums.len() && sums[hi] < s.saturating_add(g) {
                hi += 1;
            }
            total += (hi - lo) as u128;
        }
        total
    };
    Ok(NearEqualCount { y, c, gamma, count })
}

/// Least-squares slope of `log count` against `log size`.
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "scaling fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidArgument("sizes must be strictly increasing".into()));
    }
    if points.iter().any(|&(s, c)| !(s > 0.0 && c > 0.0)) {
        return Err(Error::InvalidArgument("sizes and counts must be positive".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
