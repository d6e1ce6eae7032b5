//! Segmented sieve of Eratosthenes over odd numbers.

use rayon::prelude::*;

const SEGMENT_ODDS: u64 = 1 << 18;

fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Primes in the odd-number segment `[lo, hi)`, `lo` odd.
fn sieve_segment(lo: u64, hi: u64, base: &[u64]) -> Vec<u64> {
    let len = ((hi - lo + 1) / 2) as usize;
    let mut composite = vec![false; len];
    for &p in base.iter().skip(1) {
        let sq = p * p;
        if sq >= hi {
            break;
        }
        let mut start = if sq >= lo { sq } else { lo.div_ceil(p) * p };
        if start % 2 == 0 {
            start += p;
        }
        let mut idx = ((start - lo) / 2) as usize;
        while idx < len {
            composite[idx] = true;
            idx += p as usize;
        }
    }
    composite
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| lo + 2 * i as u64)
        .filter(|&n| n > 1 && n < hi)
        .collect()
}

/// All primes `≤ limit` in ascending order; empty for `limit < 2`.
///
/// Working memory beyond the output is `O(√limit + segment)`; segments are
/// sieved in parallel and concatenated in order.
pub fn sieve_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let base = small_primes(limit.isqrt());
    let end = limit + 1;
    let seg_span = 2 * SEGMENT_ODDS;
    let n_segments = (end - 1).div_ceil(seg_span);
    let segments: Vec<Vec<u64>> = (0..n_segments)
        .into_par_iter()
        .map(|i| {
            let lo = 1 + i * seg_span;
            let hi = (lo + seg_span).min(end);
            sieve_segment(lo, hi, &base)
        })
        .collect();
    let mut out = Vec::with_capacity(segments.iter().map(Vec::len).sum::<usize>() + 1);
    out.push(2);
    for seg in segments {
        out.extend(seg);
    }
    out
}

/// `Λ(n)` support: every prime power `p^k ≤ limit` with its prime, sorted by
/// `p^k`.
pub fn prime_powers(limit: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for p in sieve_primes(limit) {
        let mut q = p;
        loop {
            out.push((q, p));
            match q.checked_mul(p) {
                Some(next) if next <= limit => q = next,
                _ => break,
            }
        }
    }
    out.sort_unstable();
    out
}
