//! Tables of certified `[p^c]` values with weights.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floorpow::{floor_pow, PrecisionPolicy};
use crate::sieve::{prime_powers, sieve_primes};
use crate::summation::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// `w = log p` over primes.
    LogPrime,
    /// `w = Λ(n)` over prime powers `n = p^k`.
    VonMangoldt,
    /// `w = 1` over primes.
    Unit,
}

impl WeightMode {
    fn code(self) -> u8 {
        match self {
            WeightMode::LogPrime => 0,
            WeightMode::VonMangoldt => 1,
            WeightMode::Unit => 2,
        }
    }

    fn from_code(code: u8) -> Result<WeightMode> {
        match code {
            0 => Ok(WeightMode::LogPrime),
            1 => Ok(WeightMode::VonMangoldt),
            2 => Ok(WeightMode::Unit),
            other => Err(Error::Format(format!("unknown weight mode {other}"))),
        }
    }
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightMode::LogPrime => "log-prime",
            WeightMode::VonMangoldt => "von-mangoldt",
            WeightMode::Unit => "unit",
        })
    }
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<WeightMode> {
        match s {
            "log-prime" | "log" => Ok(WeightMode::LogPrime),
            "von-mangoldt" | "mangoldt" => Ok(WeightMode::VonMangoldt),
            "unit" => Ok(WeightMode::Unit),
            other => Err(Error::InvalidArgument(format!("unknown weight mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    /// The prime, or the prime power in von Mangoldt mode.
    pub p: u64,
    /// `⌊p^c⌋`.
    pub v: u64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloorPowerTable {
    pub c: f64,
    pub limit: u64,
    pub mode: WeightMode,
    pub entries: Vec<TableEntry>,
}

fn check_c(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::InvalidArgument(format!("exponent c must exceed 1, got {c}")));
    }
    Ok(())
}

/// Builds the table over all primes (or prime powers) `≤ limit`.
pub fn build_table(c: f64, limit: u64, mode: WeightMode, policy: &PrecisionPolicy) -> Result<FloorPowerTable> {
    check_c(c)?;
    policy.validate()?;
    let support: Vec<(u64, u64)> = match mode {
        WeightMode::VonMangoldt => prime_powers(limit),
        _ => sieve_primes(limit).into_iter().map(|p| (p, p)).collect(),
    };
    let entries = support
        .par_iter()
        .map(|&(n, p)| {
            let v = floor_pow(n, c, policy)?;
            let v = u64::try_from(v).map_err(|_| Error::Overflow(format!("[{n}^{c}] as u64")))?;
            let w = match mode {
                WeightMode::Unit => 1.0,
                _ => (p as f64).ln(),
            };
            Ok(TableEntry { p: n, v, w })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FloorPowerTable {
        c,
        limit,
        mode,
        entries,
    })
}

/// `θ(P) = Σ_{p ≤ P} log p`.
pub fn chebyshev_theta(limit: u64) -> f64 {
    let mut acc = KahanSum::default();
    for p in sieve_primes(limit) {
        acc.add((p as f64).ln());
    }
    acc.total()
}

/// Smallest `P` with `[(P+1)^c] > n`, so a table to `P` holds every prime
/// whose floor power can appear in a representation of `n`.
pub fn limit_for_target(n: u64, c: f64, policy: &PrecisionPolicy) -> Result<u64> {
    check_c(c)?;
    let mut p = ((n as f64).powf(1.0 / c).floor() as u64).max(1);
    while floor_pow(p + 1, c, policy)? <= n as u128 {
        p += 1;
    }
    while p > 1 && floor_pow(p, c, policy)? > n as u128 {
        p -= 1;
    }
    Ok(p)
}

impl FloorPowerTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Whether every support element with `[n^c] ≤ target` is in the table.
    pub fn covers(&self, target: u64, policy: &PrecisionPolicy) -> Result<bool> {
        Ok(floor_pow(self.limit + 1, self.c, policy)? > target as u128)
    }

    pub fn require_covers(&self, target: u64, policy: &PrecisionPolicy) -> Result<()> {
        if self.covers(target, policy)? {
            Ok(())
        } else {
            Err(Error::TableDoesNotCover {
                n: target,
                limit: self.limit,
            })
        }
    }

    /// Entries with `v ≤ bound`.
    pub fn entries_up_to(&self, bound: u64) -> &[TableEntry] {
        let end = self.entries.partition_point(|e| e.v <= bound);
        &self.entries[..end]
    }

    /// Sorted, strictly increasing `v`, positive weights, and ordered `p`.
    pub fn check_invariants(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].p < w[1].p && w[0].v < w[1].v)
            && self.entries.iter().all(|e| e.w > 0.0 && e.p <= self.limit)
    }

    /// Recomputes a deterministic sample of entries at doubled precision;
    /// returns the mismatching entries.
    pub fn verify_sample(&self, fraction: f64, seed: u64, policy: &PrecisionPolicy) -> Result<Vec<TableEntry>> {
        let strong = policy.doubled();
        let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
        let mut bad = Vec::new();
        for e in &self.entries {
            // splitmix64 step
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            if (z as f64) / (u64::MAX as f64) < fraction && floor_pow(e.p, self.c, &strong)? != e.v as u128 {
                bad.push(*e);
            }
        }
        Ok(bad)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "p,v,w")?;
        for e in &self.entries {
            writeln!(out, "{},{},{}", e.p, e.v, e.w)?;
        }
        Ok(())
    }

    /// Binary layout: `FPT1`, `u32` length and text of `c`, `u64` limit, `u8`
    /// mode, `u64` entry count, then `(p: u64, v: u64, w: f64)` records, all
    /// little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let c_text = format!("{}", self.c);
        out.write_all(MAGIC)?;
        out.write_all(&(c_text.len() as u32).to_le_bytes())?;
        out.write_all(c_text.as_bytes())?;
        out.write_all(&self.limit.to_le_bytes())?;
        out.write_all(&[self.mode.code()])?;
        out.write_all(&(self.entries.len() as u64).to_le_bytes())?;
        for e in &self.entries {
            out.write_all(&e.p.to_le_bytes())?;
            out.write_all(&e.v.to_le_bytes())?;
            out.write_all(&e.w.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<FloorPowerTable> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let c_len = read_u32(&mut input)? as usize;
        if c_len > 64 {
            return Err(Error::Format(format!("exponent text length {c_len}")));
        }
        let mut c_buf = vec![0u8; c_len];
        input.read_exact(&mut c_buf)?;
        let c_text = String::from_utf8(c_buf).map_err(|e| Error::Format(e.to_string()))?;
        let c: f64 = c_text
            .parse()
            .map_err(|_| Error::Format(format!("exponent {c_text:?}")))?;
        let limit = read_u64(&mut input)?;
        let mut mode = [0u8; 1];
        input.read_exact(&mut mode)?;
        let mode = WeightMode::from_code(mode[0])?;
        let count = read_u64(&mut input)?;
        let mut entries = Vec::with_capacity(count.min(1 << 24) as usize);
        for _ in 0..count {
            let p = read_u64(&mut input)?;
            let v = read_u64(&mut input)?;
            let w = f64::from_bits(read_u64(&mut input)?);
            entries.push(TableEntry { p, v, w });
        }
        let table = FloorPowerTable {
            c,
            limit,
            mode,
            entries,
        };
        if !table.check_invariants() {
            return Err(Error::Format("entries are not sorted or have invalid weights".into()));
        }
        Ok(table)
    }
}

const MAGIC: &[u8; 4] = b"FPT1";

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy() -> PrecisionPolicy {
        PrecisionPolicy::default()
    }

    #[test]
    fn small_log_prime_table() {
        let t = build_table(1.5, 10, WeightMode::LogPrime, &policy()).unwrap();
        let got: Vec<(u64, u64)> = t.entries.iter().map(|e| (e.p, e.v)).collect();
        assert_eq!(got, vec![(2, 2), (3, 5), (5, 11), (7, 18)]);
        for e in &t.entries {
            assert_eq!(e.w, (e.p as f64).ln());
        }
    }

    #[test]
    fn unit_squares() {
        let t = build_table(2.0, 5, WeightMode::Unit, &policy()).unwrap();
        let got: Vec<(u64, u64, f64)> = t.entries.iter().map(|e| (e.p, e.v, e.w)).collect();
        assert_eq!(got, vec![(2, 4, 1.0), (3, 9, 1.0), (5, 25, 1.0)]);
    }

    #[test]
    fn empty_below_two() {
        assert!(build_table(1.7, 1, WeightMode::LogPrime, &policy()).unwrap().is_empty());
    }

    #[test]
    fn von_mangoldt_includes_prime_powers() {
        let t = build_table(1.5, 10, WeightMode::VonMangoldt, &policy()).unwrap();
        let ps: Vec<u64> = t.entries.iter().map(|e| e.p).collect();
        assert_eq!(ps, vec![2, 3, 4, 5, 7, 8, 9]);
        assert_eq!(t.entries[2].v, 8);
        assert_eq!(t.entries[2].w, 2f64.ln());
        assert!(t.check_invariants());
    }

    #[test]
    fn rejects_small_exponent() {
        assert!(build_table(1.0, 10, WeightMode::Unit, &policy()).is_err());
        assert!(build_table(0.5, 10, WeightMode::Unit, &policy()).is_err());
    }

    #[test]
    fn theta_small() {
        assert_eq!(chebyshev_theta(1), 0.0);
        let expect = 2f64.ln() + 3f64.ln() + 5f64.ln() + 7f64.ln();
        assert!((chebyshev_theta(10) - expect).abs() < 1e-12);
        assert!((chebyshev_theta(10) - 5.34711).abs() < 1e-5);
    }

    #[test]
    fn coverage() {
        let p = policy();
        let t = build_table(1.5, 21, WeightMode::LogPrime, &p).unwrap();
        // [22^1.5] = 103
        assert!(t.covers(100, &p).unwrap());
        assert!(t.covers(102, &p).unwrap());
        assert!(!t.covers(103, &p).unwrap());
        assert_eq!(limit_for_target(100, 1.5, &p).unwrap(), 21);
        assert_eq!(limit_for_target(50, 2.0, &p).unwrap(), 7);
    }

    #[test]
    fn binary_round_trip() {
        let t = build_table(1.37, 500, WeightMode::VonMangoldt, &policy()).unwrap();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"FPT1");
        assert_eq!(buf.len(), 4 + 4 + 4 + 8 + 1 + 8 + 24 * t.len());
        let back = FloorPowerTable::read_binary(&buf[..]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn binary_rejects_garbage() {
        assert!(FloorPowerTable::read_binary(&b"FPT2\0\0\0\0"[..]).is_err());
        assert!(FloorPowerTable::read_binary(&b"FP"[..]).is_err());
    }

    #[test]
    fn csv_layout() {
        let t = build_table(2.0, 5, WeightMode::Unit, &policy()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "p,v,w\n2,4,1\n3,9,1\n5,25,1\n");
    }

    #[test]
    fn sample_verification_clean() {
        let p = policy();
        let t = build_table(1.83, 20_000, WeightMode::LogPrime, &p).unwrap();
        assert!(t.check_invariants());
        assert!(t.verify_sample(0.01, 7, &p).unwrap().is_empty());
    }

    #[test]
    fn deterministic() {
        let p = policy();
        let a = build_table(2.31, 5000, WeightMode::LogPrime, &p).unwrap();
        let b = build_table(2.31, 5000, WeightMode::LogPrime, &p).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_binary(&mut x).unwrap();
        b.write_binary(&mut y).unwrap();
        assert_eq!(x, y);
    }
}
