//! Truncated convolution powers of histograms.
//!
//! Floating-point FFT handles weighted histograms. Integer histograms go
//! through the same FFT, rounded after every product; if any output is
//! farther than [`ROUNDING_GUARD`] from an integer, the whole power is
//! recomputed with an exact three-prime NTT.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest tolerated distance from an integer in rounded FFT output.
pub const ROUNDING_GUARD: f64 = 1e-3;

/// Largest integer an f64 FFT output can be rounded to exactly.
const F64_EXACT: f64 = 4_503_599_627_370_496.0; // 2^52

fn fft_len(out_len: usize) -> usize {
    (2 * out_len).max(2).next_power_of_two()
}

/// Upper estimate in bytes of the working memory for an `s`-fold power
/// truncated to `out_len` bins.
pub fn estimate_power_bytes(out_len: usize) -> u64 {
    let l = fft_len(out_len) as u64;
    // two complex spectra + scratch, NTT fallback buffers, outputs
    48 * l + 48 * l + 40 * out_len as u64
}

struct FftPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPlan {
    fn new(len: usize) -> FftPlan {
        let mut planner = FftPlanner::new();
        FftPlan {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    fn spectrum(&self, a: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (slot, &x) in buf.iter_mut().zip(a) {
            slot.re = x;
        }
        self.forward.process(&mut buf);
        buf
    }

    /// `(a * b)[0..out_len]` given the spectrum of `b`.
    fn multiply(&self, a: &[f64], b_hat: &[Complex64], out_len: usize) -> Vec<f64> {
        let mut buf = self.spectrum(a);
        for (x, y) in buf.iter_mut().zip(b_hat) {
            *x *= y;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        buf[..out_len].iter().map(|z| z.re * scale).collect()
    }
}

/// `(a * b)[0..out_len]` by floating-point FFT.
pub fn convolve_f64(a: &[f64], b: &[f64], out_len: usize) -> Vec<f64> {
    let a = &a[..a.len().min(out_len)];
    let b = &b[..b.len().min(out_len)];
    let plan = FftPlan::new(fft_len(out_len));
    plan.multiply(a, &plan.spectrum(b), out_len)
}

/// `f^{*s}` truncated to `out_len` bins.
pub fn power_f64(f: &[f64], s: usize, out_len: usize) -> Vec<f64> {
    assert!(s >= 1);
    let f = &f[..f.len().min(out_len)];
    let mut acc: Vec<f64> = f.to_vec();
    acc.resize(out_len, 0.0);
    if s == 1 {
        return acc;
    }
    let plan = FftPlan::new(fft_len(out_len));
    let f_hat = plan.spectrum(f);
    for _ in 1..s {
        acc = plan.multiply(&acc, &f_hat, out_len);
    }
    acc
}

/// Exact `f^{*s}` for integer histograms, truncated to `out_len` bins.
pub fn power_counts(f: &[u64], s: usize, out_len: usize) -> Result<Vec<u128>> {
    assert!(s >= 1);
    let f = &f[..f.len().min(out_len)];
    match power_counts_fft(f, s, out_len) {
        Some(v) => Ok(v),
        None => power_counts_ntt(f, s, out_len),
    }
}

/// FFT path with rounding guard; `None` when the guard trips.
pub(crate) fn power_counts_fft(f: &[u64], s: usize, out_len: usize) -> Option<Vec<u128>> {
    let as_f64: Vec<f64> = f.iter().map(|&x| x as f64).collect();
    if as_f64.iter().any(|&x| x >= F64_EXACT) {
        return None;
    }
    let mut acc = as_f64.clone();
    acc.resize(out_len, 0.0);
    if s > 1 {
        let plan = FftPlan::new(fft_len(out_len));
        let f_hat = plan.spectrum(&as_f64);
        for _ in 1..s {
            let raw = plan.multiply(&acc, &f_hat, out_len);
            let mut rounded = Vec::with_capacity(out_len);
            for x in raw {
                let r = x.round();
                if (x - r).abs() >= ROUNDING_GUARD || r >= F64_EXACT || r < 0.0 {
                    return None;
                }
                rounded.push(r);
            }
            acc = rounded;
        }
    }
    Some(acc.into_iter().map(|x| x as u128).collect())
}

// NTT primes p = k·2^m + 1 with primitive root 3.
const NTT_PRIMES: [u64; 3] = [998_244_353, 167_772_161, 469_762_049];
const NTT_MAX_LOG: u32 = 23;

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

fn ntt(a: &mut [u64], p: u64, invert: bool) {
    let n = a.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j ^= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w = pow_mod(3, (p - 1) / len as u64, p);
        if invert {
            w = pow_mod(w, p - 2, p);
        }
        for start in (0..n).step_by(len) {
            let mut wn = 1u64;
            for k in 0..len / 2 {
                let u = a[start + k];
                let v = a[start + k + len / 2] * wn % p;
                a[start + k] = if u + v >= p { u + v - p } else { u + v };
                a[start + k + len / 2] = if u >= v { u - v } else { u + p - v };
                wn = wn * w % p;
            }
        }
        len <<= 1;
    }
    if invert {
        let inv_n = pow_mod(n as u64, p - 2, p);
        for x in a.iter_mut() {
            *x = *x * inv_n % p;
        }
    }
}

fn crt(residues: [u64; 3]) -> u128 {
    let [p0, p1, p2] = NTT_PRIMES;
    let (r0, r1, r2) = (residues[0], residues[1], residues[2]);
    // Garner
    let inv_p0_mod_p1 = pow_mod(p0 % p1, p1 - 2, p1);
    let x1 = ((r1 + p1 - r0 % p1) % p1) * inv_p0_mod_p1 % p1;
    let p0p1 = (p0 as u128) * (p1 as u128);
    let partial = r0 as u128 + x1 as u128 * p0 as u128;
    let inv_p0p1_mod_p2 = pow_mod(((p0 % p2) * (p1 % p2)) % p2, p2 - 2, p2);
    let partial_mod_p2 = (partial % p2 as u128) as u64;
    let x2 = ((r2 + p2 - partial_mod_p2) % p2) * inv_p0p1_mod_p2 % p2;
    partial + x2 as u128 * p0p1
}

fn ntt_modulus() -> u128 {
    NTT_PRIMES.iter().map(|&p| p as u128).product()
}

fn convolve_ntt(a: &[u128], b: &[u128], out_len: usize) -> Result<Vec<u128>> {
    let len = fft_len(out_len);
    if len > 1 << NTT_MAX_LOG {
        return Err(Error::InvalidArgument(format!(
            "exact convolution of {out_len} bins exceeds the NTT length limit"
        )));
    }
    let sum_a: f64 = a.iter().map(|&x| x as f64).sum();
    let max_b = b.iter().copied().max().unwrap_or(0) as f64;
    let sum_b: f64 = b.iter().map(|&x| x as f64).sum();
    let max_a = a.iter().copied().max().unwrap_or(0) as f64;
    if (sum_a * max_b).min(sum_b * max_a) >= ntt_modulus() as f64 * 0.5 {
        return Err(Error::Overflow("exact convolution counts".into()));
    }
    let mut residues: Vec<Vec<u64>> = Vec::with_capacity(3);
    for &p in &NTT_PRIMES {
        let mut x = vec![0u64; len];
        let mut y = vec![0u64; len];
        for (slot, &v) in x.iter_mut().zip(a) {
            *slot = (v % p as u128) as u64;
        }
        for (slot, &v) in y.iter_mut().zip(b) {
            *slot = (v % p as u128) as u64;
        }
        ntt(&mut x, p, false);
        ntt(&mut y, p, false);
        for (u, v) in x.iter_mut().zip(&y) {
            *u = *u * v % p;
        }
        ntt(&mut x, p, true);
        x.truncate(out_len);
        residues.push(x);
    }
    Ok((0..out_len)
        .map(|i| crt([residues[0][i], residues[1][i], residues[2][i]]))
        .collect())
}

pub(crate) fn power_counts_ntt(f: &[u64], s: usize, out_len: usize) -> Result<Vec<u128>> {
    let base: Vec<u128> = f.iter().map(|&x| x as u128).collect();
    let mut acc = base.clone();
    acc.resize(out_len, 0);
    for _ in 1..s {
        acc = convolve_ntt(&acc, &base, out_len)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[u128], b: &[u128], out_len: usize) -> Vec<u128> {
        let mut out = vec![0u128; out_len];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                if i + j < out_len {
                    out[i + j] += x * y;
                }
            }
        }
        out
    }

    #[test]
    fn ntt_matches_naive() {
        let a: Vec<u128> = (0..300).map(|i| (i * 7919 % 101) as u128).collect();
        let b: Vec<u128> = (0..257).map(|i| (i * 104729 % 37) as u128).collect();
        assert_eq!(convolve_ntt(&a, &b, 400).unwrap(), naive(&a, &b, 400));
    }

    #[test]
    fn crt_recovers_large_values() {
        let m = ntt_modulus();
        for x in [0u128, 1, 12345678901234567890123, m - 1] {
            let r = NTT_PRIMES.map(|p| (x % p as u128) as u64);
            assert_eq!(crt(r), x);
        }
    }

    #[test]
    fn fft_and_ntt_powers_agree() {
        let mut f = vec![0u64; 500];
        for i in [2usize, 5, 11, 18, 31, 46, 70, 82, 111, 145] {
            f[i] = 1 + (i as u64 % 3);
        }
        for s in 2..=5 {
            let a = power_counts_fft(&f, s, 500).unwrap();
            let b = power_counts_ntt(&f, s, 500).unwrap();
            assert_eq!(a, b, "s={s}");
        }
    }

    #[test]
    fn total_mass_is_conserved() {
        // 7 unit bins; full untruncated power sums to 7^s
        let mut f = vec![0u64; 40];
        for i in [2usize, 3, 5, 7, 11, 13, 17] {
            f[i] = 1;
        }
        for s in 2..=5 {
            let out_len = 17 * s + 1;
            let total: u128 = power_counts(&f, s, out_len).unwrap().iter().sum();
            assert_eq!(total, 7u128.pow(s as u32));
        }
    }

    #[test]
    fn guard_trips_on_huge_counts() {
        // 2^26 ways at each of two bins squares to ~2^53 per bin: beyond f64
        let f = vec![1u64 << 26; 4];
        assert!(power_counts_fft(&f, 2, 8).is_none());
        let exact = power_counts(&f, 2, 8).unwrap();
        assert_eq!(exact[3], 4 * (1u128 << 52));
    }

    #[test]
    fn float_power_matches_integer_power() {
        let f: Vec<f64> = (0..64).map(|i| if i % 5 == 2 { 1.0 } else { 0.0 }).collect();
        let g: Vec<u64> = f.iter().map(|&x| x as u64).collect();
        let a = power_f64(&f, 3, 64);
        let b = power_counts(&g, 3, 64).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - *y as f64).abs() < 1e-9);
        }
        let c = convolve_f64(&f, &f, 64);
        let d = power_f64(&f, 2, 64);
        for (x, y) in c.iter().zip(&d) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
