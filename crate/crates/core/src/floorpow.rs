//! Certified evaluation of `⌊n^c⌋`.
//!
//! `n^c = exp(c · ln n)` is enclosed with fixed-point ball arithmetic on big
//! integers: every quantity is a midpoint `m` and radius `r`, both in units
//! of `2^-w`, and the true value lies in `[m − r, m + r]`. The floor is
//! accepted once the enclosure contains no integer; otherwise the working
//! precision doubles up to the policy cap.
//!
//! `c` is the exact value of the given double. When `c = a/2^t` and `n` is a
//! perfect `2^t`-th power, `n^c` is an integer and is computed exactly;
//! in every other case `n^c` is irrational and the enclosure eventually
//! separates from the integers.

use num_bigint::{BigInt, Sign};
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PRECISION_ENV: &str = "FPL_PRECISION_BITS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub initial_bits: u32,
    pub max_bits: u32,
    /// Minimum distance between the enclosure of `n^c` and the nearest
    /// integer before a floor is accepted.
    pub ambiguity_margin: f64,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy {
            initial_bits: 128,
            max_bits: 4096,
            ambiguity_margin: 0.0,
        }
    }
}

impl PrecisionPolicy {
    pub fn new(initial_bits: u32, max_bits: u32, ambiguity_margin: f64) -> Result<PrecisionPolicy> {
        let p = PrecisionPolicy {
            initial_bits,
            max_bits,
            ambiguity_margin,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_bits < 64 || self.max_bits < self.initial_bits {
            return Err(Error::InvalidArgument(format!(
                "precision policy needs 64 <= initial_bits <= max_bits, got {} and {}",
                self.initial_bits, self.max_bits
            )));
        }
        if !(self.ambiguity_margin >= 0.0 && self.ambiguity_margin < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "ambiguity margin {} outside [0, 0.5)",
                self.ambiguity_margin
            )));
        }
        Ok(())
    }

    /// Default policy with `initial_bits` taken from `FPL_PRECISION_BITS`
    /// when set.
    pub fn from_env() -> Result<PrecisionPolicy> {
        let mut p = PrecisionPolicy::default();
        if let Ok(v) = std::env::var(PRECISION_ENV) {
            let bits: u32 = v.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("{PRECISION_ENV}={v:?} is not an integer"))
            })?;
            p.initial_bits = bits;
            p.max_bits = p.max_bits.max(bits);
        }
        p.validate()?;
        Ok(p)
    }

    /// Same policy at twice the starting precision.
    pub fn doubled(&self) -> PrecisionPolicy {
        PrecisionPolicy {
            initial_bits: self.initial_bits * 2,
            max_bits: self.max_bits.max(self.initial_bits * 2),
            ambiguity_margin: self.ambiguity_margin,
        }
    }
}

/// Fixed-point ball: value in `[(mid − rad)·2^-w, (mid + rad)·2^-w]`.
#[derive(Debug, Clone)]
struct Ball {
    mid: BigInt,
    rad: BigInt,
}

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

/// `atanh(num/den)` for `|num/den| ≤ 1/3`.
fn atanh_ratio(num: &BigInt, den: &BigInt, w: u32) -> Ball {
    let one = BigInt::one() << w;
    let y = floor_div(&(num << w), den);
    if y.is_zero() && num.is_zero() {
        return Ball {
            mid: BigInt::zero(),
            rad: BigInt::zero(),
        };
    }
    let y2 = (&y * &y) >> w;
    let mut power = y.clone();
    let mut sum = BigInt::zero();
    let mut terms = 0u64;
    let mut j = 0u64;
    // power carries at most 4 ulps of error; each term adds at most 5.
    while power.abs() > BigInt::one() {
        sum += &power / BigInt::from(2 * j + 1);
        terms += 1;
        j += 1;
        power = (&power * &y2) >> w;
        debug_assert!(power.abs() < one);
    }
    Ball {
        mid: sum,
        rad: BigInt::from(5 * terms + 10),
    }
}

fn ln2(w: u32) -> Ball {
    let b = atanh_ratio(&BigInt::one(), &BigInt::from(3), w);
    Ball {
        mid: b.mid << 1,
        rad: b.rad << 1,
    }
}

/// `ln n` for `n ≥ 1`, given `ln 2` at the same precision.
fn ln_u64(n: u64, w: u32, ln2: &Ball) -> Ball {
    if n == 1 {
        return Ball {
            mid: BigInt::zero(),
            rad: BigInt::zero(),
        };
    }
    let mut k = 63 - n.leading_zeros();
    // n / 2^k in [0.75, 1.5)
    if (n as u128) * 2 >= 3u128 << k {
        k += 1;
    }
    let pow = BigInt::one() << k;
    let n_big = BigInt::from(n);
    let t = atanh_ratio(&(&n_big - &pow), &(&n_big + &pow), w);
    let kb = BigInt::from(k);
    Ball {
        mid: &ln2.mid * &kb + (t.mid << 1),
        rad: &ln2.rad * &kb + (t.rad << 1),
    }
}

/// `exp(x)` returned as `(ball, k)` with value `ball · 2^{k − w}`.
fn exp_ball(x: &Ball, w: u32, ln2: &Ball) -> (Ball, i64) {
    let one = BigInt::one() << w;
    let k = floor_div(&x.mid, &ln2.mid);
    let r = &x.mid - &k * &ln2.mid;
    let rad_r = &x.rad + k.abs() * &ln2.rad;
    let mut term = one.clone();
    let mut sum = one;
    let mut j = 1u64;
    while !term.is_zero() {
        term = floor_div(&(&term * &r), &(BigInt::from(j) << w));
        sum += &term;
        j += 1;
    }
    // series rounding, tail, and the derivative bound e^{|r|} < 3
    let rad = BigInt::from(2 * j + 8) + rad_r * 3 + 1;
    let k = k.to_i64().expect("exponent fits i64");
    (Ball { mid: sum, rad }, k)
}

/// Decomposes a positive finite double into `(mantissa, exponent)` with an
/// odd mantissa, so `x = mantissa · 2^exponent` exactly.
fn split_double(x: f64) -> (u64, i32) {
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut m, mut e) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    let tz = m.trailing_zeros();
    m >>= tz;
    e += tz as i32;
    (m, e)
}

/// `n^c` exactly when it is an integer, `None` otherwise (or on overflow
/// via `Err`).
fn exact_power(n: u64, c: f64) -> Result<Option<u128>> {
    if n == 1 {
        return Ok(Some(1));
    }
    let (m, e) = split_double(c);
    let overflow = || Error::Overflow(format!("{n}^{c}"));
    if e >= 0 {
        let exp = (m as u128)
            .checked_mul(1u128.checked_shl(e as u32).ok_or_else(overflow)?)
            .ok_or_else(overflow)?;
        let exp: u32 = exp.try_into().map_err(|_| overflow())?;
        return (n as u128).checked_pow(exp).map(Some).ok_or_else(overflow);
    }
    // n^(m / 2^t) is an integer iff n is a perfect 2^t-th power.
    let t = (-e) as u32;
    let mut root = n;
    for _ in 0..t {
        if root == 1 {
            break;
        }
        let s = root.sqrt();
        if s * s != root {
            return Ok(None);
        }
        root = s;
    }
    if root == 1 {
        return Ok(Some(1));
    }
    let exp: u32 = m.try_into().map_err(|_| overflow())?;
    (root as u128).checked_pow(exp).map(Some).ok_or_else(overflow)
}

/// Enclosure of `n^c` as `(lo, hi, e)` meaning `[lo·2^e, hi·2^e]`.
fn pow_enclosure(n: u64, c: f64, w: u32) -> (BigInt, BigInt, i64) {
    let l2 = ln2(w);
    let ln_n = ln_u64(n, w, &l2);
    let (m, e) = split_double(c);
    let mb = BigInt::from(m);
    let mut x = Ball {
        mid: &ln_n.mid * &mb,
        rad: &ln_n.rad * &mb,
    };
    if e >= 0 {
        x.mid <<= e as u32;
        x.rad <<= e as u32;
    } else {
        let s = (-e) as u32;
        x.mid = floor_div(&x.mid, &(BigInt::one() << s));
        x.rad = (x.rad >> s) + 2;
    }
    let (ball, k) = exp_ball(&x, w, &l2);
    (&ball.mid - &ball.rad, &ball.mid + &ball.rad, k - w as i64)
}

fn scaled_floor(v: &BigInt, e: i64) -> BigInt {
    if e >= 0 {
        v << (e as u64)
    } else {
        v >> ((-e) as u64)
    }
}

fn scaled_to_f64(v: &BigInt, e: i64) -> f64 {
    let bits = v.bits() as i64;
    let shift = (bits - 60).max(0);
    let top = (v >> (shift as u64)).to_f64().unwrap_or(f64::NAN);
    top * 2f64.powi((shift + e) as i32)
}

fn check_inputs(n: u64, c: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("floor_pow needs n >= 1".into()));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidArgument(format!("floor_pow needs finite c > 0, got {c}")));
    }
    Ok(())
}

/// Certified `⌊n^c⌋`.
pub fn floor_pow(n: u64, c: f64, policy: &PrecisionPolicy) -> Result<u128> {
    check_inputs(n, c)?;
    if let Some(v) = exact_power(n, c)? {
        return Ok(v);
    }
    let rough = c * (n as f64).log2();
    if rough >= 128.0 {
        return Err(Error::Overflow(format!("{n}^{c}")));
    }
    let margin = policy.ambiguity_margin;
    let mut bits = policy.initial_bits.max(64);
    loop {
        let (lo, hi, e) = pow_enclosure(n, c, bits);
        let flo = scaled_floor(&lo, e);
        let fhi = scaled_floor(&hi, e);
        if flo == fhi && flo.sign() != Sign::Minus {
            let ok = margin == 0.0 || {
                let s = (-e).max(0) as u64;
                let sh = e.max(0) as u64;
                let below = (&lo << sh) - (&flo << s);
                let above = ((&flo + 1) << s) - (&hi << sh);
                let unit = -(s as i64);
                scaled_to_f64(&below, unit) >= margin && scaled_to_f64(&above, unit) >= margin
            };
            if ok {
                return flo.to_u128().ok_or_else(|| Error::Overflow(format!("{n}^{c}")));
            }
        }
        if bits >= policy.max_bits {
            return Err(Error::FloorAmbiguous {
                n,
                c,
                bits,
                lo: scaled_to_f64(&lo, e),
                hi: scaled_to_f64(&hi, e),
            });
        }
        bits = (bits * 2).min(policy.max_bits);
    }
}

/// `n^c · 2^frac_bits` rounded to the nearest integer, within one unit.
pub fn pow_fixed(n: u64, c: f64, frac_bits: u32) -> Result<u128> {
    check_inputs(n, c)?;
    let overflow = || Error::Overflow(format!("{n}^{c} * 2^{frac_bits}"));
    if let Some(v) = exact_power(n, c)? {
        if frac_bits >= 128 || (v != 0 && v.leading_zeros() < frac_bits) {
            return Err(overflow());
        }
        return Ok(v << frac_bits);
    }
    let int_bits = (c * (n as f64).log2()).ceil().max(1.0) as u32 + 1;
    if int_bits + frac_bits > 127 {
        return Err(overflow());
    }
    let mut w = int_bits + frac_bits + 64;
    loop {
        let (lo, hi, e) = pow_enclosure(n, c, w);
        let e = e + frac_bits as i64;
        // width of the enclosure in output units
        let width = scaled_to_f64(&(&hi - &lo), e);
        if width < 0.25 {
            let mid = (&lo + &hi) >> 1u32;
            let rounded = if e >= 0 {
                mid << (e as u64)
            } else {
                let s = (-e) as u64;
                (mid + (BigInt::one() << (s - 1))) >> s
            };
            return rounded.to_u128().ok_or_else(overflow);
        }
        w *= 2;
        if w > 1 << 14 {
            return Err(overflow());
        }
    }
}
