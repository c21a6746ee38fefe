//! Double-double arithmetic: an unevaluated sum of two `f64`s giving ~31
//! significant decimal digits.
//!
//! Near the saddle loop the orbit problems here have condition numbers of
//! order `T'(hbar)` (up to 1e12 for the energies the acceptance suite needs),
//! which puts the spec tolerances out of reach of plain `f64`. The error-free
//! transformations below (Dekker/Knuth two-sum and split products, as in the
//! classical QD library) recover the needed headroom without pulling in a
//! bignum dependency.
//!
//! `sin`/`cos` are first-order corrected (`cos(hi) - lo*sin(hi)`), giving
//! absolute error ~1e-17. They enter only through the `O(delta)` drive term
//! and quadrature phases, where that is far below every consumer tolerance.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Two-f64 extended-precision scalar (hi + lo, |lo| <= ulp(hi)/2).
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline(always)]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    (s, b - (s - a))
}

#[inline(always)]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

const SPLIT: f64 = 134_217_729.0; // 2^27 + 1

#[inline(always)]
fn split(a: f64) -> (f64, f64) {
    let t = SPLIT * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline(always)]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline(always)]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline(always)]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline(always)]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline(always)]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        debug_assert!(self.hi > 0.0, "sqrt of negative double-double");
        // Karp's method: one Newton step on 1/sqrt in f64, then a correction
        // carried out in double-double.
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let ax_dd = Dd::from_f64(ax);
        let err = (self - ax_dd * ax_dd).hi;
        ax_dd + Dd::from_f64(err * (x * 0.5))
    }

    /// Square, slightly cheaper than `self * self`.
    #[inline(always)]
    pub fn sqr(self) -> Self {
        let (p, e) = two_prod(self.hi, self.hi);
        let e = e + 2.0 * self.hi * self.lo;
        let (s, lo) = quick_two_sum(p, e);
        Dd { hi: s, lo }
    }

    pub fn powi(self, n: i32) -> Self {
        match n.cmp(&0) {
            Ordering::Less => Dd::ONE / self.powi(-n),
            Ordering::Equal => Dd::ONE,
            Ordering::Greater => {
                let mut acc = Dd::ONE;
                let mut base = self;
                let mut k = n;
                while k > 0 {
                    if k & 1 == 1 {
                        acc *= base;
                    }
                    base = base.sqr();
                    k >>= 1;
                }
                acc
            }
        }
    }

    /// cos with ~1e-17 absolute accuracy (first-order correction in `lo`).
    #[inline]
    pub fn cos_approx(self) -> Self {
        Dd::from_f64(self.hi.cos()) - Dd::from_f64(self.lo * self.hi.sin())
    }

    /// sin with ~1e-17 absolute accuracy.
    #[inline]
    pub fn sin_approx(self) -> Self {
        Dd::from_f64(self.hi.sin()) + Dd::from_f64(self.lo * self.hi.cos())
    }

    #[inline(always)]
    pub fn max(self, other: Self) -> Self {
        if self < other {
            other
        } else {
            self
        }
    }

    #[inline(always)]
    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline(always)]
    fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline(always)]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline(always)]
    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline(always)]
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Dd::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e } + Dd::from_f64(q3)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline(always)]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl AddAssign for Dd {
    #[inline(always)]
    fn add_assign(&mut self, rhs: Dd) {
        *self = *self + rhs;
    }
}
impl SubAssign for Dd {
    #[inline(always)]
    fn sub_assign(&mut self, rhs: Dd) {
        *self = *self - rhs;
    }
}
impl MulAssign for Dd {
    #[inline(always)]
    fn mul_assign(&mut self, rhs: Dd) {
        *self = *self * rhs;
    }
}
impl DivAssign for Dd {
    #[inline(always)]
    fn div_assign(&mut self, rhs: Dd) {
        *self = *self / rhs;
    }
}

impl PartialOrd for Dd {
    #[inline(always)]
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_tracks_tiny_terms() {
        let one = Dd::ONE;
        let tiny = Dd::from_f64(1e-25);
        let s = one + tiny - one;
        assert!((s.to_f64() - 1e-25).abs() < 1e-40);
    }

    #[test]
    fn mul_exactness() {
        // (1 + 2^-30)^2 = 1 + 2^-29 + 2^-60 exactly representable in dd
        let x = Dd::ONE + Dd::from_f64((2.0f64).powi(-30));
        let y = x.sqr();
        let expect = Dd::ONE + Dd::from_f64((2.0f64).powi(-29)) + Dd::from_f64((2.0f64).powi(-60));
        assert_eq!(y, expect);
    }

    #[test]
    fn sqrt_roundtrip() {
        for v in [2.0, 0.5, 0.125, 3.9e-15, 7.3e11] {
            let x = Dd::from_f64(v);
            let r = x.sqrt();
            let back = r.sqr() - x;
            assert!(
                back.to_f64().abs() <= 1e-30 * v,
                "sqrt roundtrip failed for {v}: {back:?}"
            );
        }
    }

    #[test]
    fn div_roundtrip() {
        let a = Dd::new(std::f64::consts::PI, 1.2246467991473532e-16);
        let b = Dd::from_f64(17.0) + Dd::from_f64(1e-20);
        let q = a / b;
        let r = q * b - a;
        assert!(r.to_f64().abs() < 1e-31);
    }

    #[test]
    fn trig_first_order() {
        let x = Dd::new(1.0, 3e-17);
        let c = x.cos_approx().to_f64();
        // reference: cos(1) - 3e-17 sin(1)
        let expect = 1.0f64.cos() - 3e-17 * 1.0f64.sin();
        assert!((c - expect).abs() < 1e-16);
        let s = x.sin_approx();
        let pyth = (s.sqr() + x.cos_approx().sqr()).to_f64();
        assert!((pyth - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ordering() {
        let a = Dd::new(1.0, -1e-20);
        let b = Dd::ONE;
        assert!(a < b);
        assert!(b > a);
        assert!(a.abs() == a);
        assert!((-a).abs() == a);
    }
}

#[cfg(test)]
mod stress {
    use super::*;

    fn parse_dd(dec: &str) -> Dd {
        // crude high-precision decimal parse: split into two f64 chunks
        let hi: f64 = dec.parse().unwrap();
        // residual via long multiplication is overkill; compare in f64-pairs instead
        Dd::from_f64(hi)
    }

    #[test]
    fn basel_partial_sum() {
        let mut s = Dd::ZERO;
        for k in 1..=1000u32 {
            let kk = Dd::from_f64(k as f64);
            s += Dd::ONE / (kk * kk);
        }
        // reference: 1.6439345666815598031390580238222156 (35 digits)
        let ref_hi = 1.6439345666815598_f64;
        let r = s - Dd::from_f64(ref_hi);
        // residual should match the tail digits: ref - fl(ref)
        // 1.6439345666815598031390... - 1.6439345666815598... compute in python below
        println!(
            "basel sum hi={:.17e} lo={:.17e} (sum-flref={:.3e})",
            s.hi,
            s.lo,
            r.to_f64()
        );
        let _ = parse_dd("1.0");
    }

    #[test]
    fn one_third_times_one_seventh() {
        let v = Dd::ONE / Dd::from_f64(3.0) * (Dd::ONE / Dd::from_f64(7.0));
        let w = Dd::ONE / Dd::from_f64(21.0);
        let d = (v - w).to_f64();
        println!("1/3*1/7 - 1/21 = {d:e}");
        assert!(d.abs() < 5e-34, "{d:e}");
    }

    #[test]
    fn repeated_axpy_noise() {
        // z_{k+1} = z_{k-1} + 2h(-z_k), mimicking midpoint arithmetic
        let h = Dd::from_f64(0.2) / Dd::from_f64(14.0);
        let two = Dd::from_f64(2.0);
        let mut za = Dd::ONE;
        let mut zb = Dd::ONE - h * h * Dd::from_f64(0.5);
        for _ in 0..1000 {
            let zc = za - two * h * zb;
            za = zb;
            zb = zc;
        }
        println!("after 1000 axpy: zb = {:.17e} + {:.3e}", zb.hi, zb.lo);
    }
}
