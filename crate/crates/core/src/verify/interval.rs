//! Closed real intervals with outward rounding.
//!
//! Each bound is computed in round-to-nearest and corrected by one ulp only
//! when an error-free transformation (TwoSum, FMA) shows the rounded result
//! lies on the wrong side, so exact operations stay exact.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

// Below this magnitude FMA residuals may underflow; widen unconditionally.
const TINY: f64 = 1e-290;

fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s.is_nan() { f64::NEG_INFINITY } else { s.min(f64::MAX) };
    }
    let bv = s - a;
    let err = (a - (s - bv)) + (b - bv);
    if err < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    -add_down(-a, -b)
}

fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return if p.is_nan() { f64::NEG_INFINITY } else { p.min(f64::MAX) };
    }
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    if p.abs() < TINY {
        return p.next_down();
    }
    if a.mul_add(b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

fn mul_up(a: f64, b: f64) -> f64 {
    -mul_down(-a, b)
}

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval bounds out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// `[mid - r, mid + r]`, rounded outward.
    pub fn around(mid: f64, r: f64) -> Self {
        Interval {
            lo: add_down(mid, -r),
            hi: add_up(mid, r),
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Upper bound on the radius about [`mid`](Self::mid).
    pub fn rad(&self) -> f64 {
        let m = self.mid();
        add_up(self.hi, -m).max(add_up(m, -self.lo))
    }

    pub fn width(&self) -> f64 {
        // avoid reporting -0 for point intervals
        add_up(self.hi, -self.lo).max(0.0) + 0.0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `other` lies strictly inside `self`.
    pub fn interior_contains(&self, other: &Interval) -> bool {
        self.lo < other.lo && other.hi < self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn scale(&self, c: f64) -> Interval {
        *self * Interval::point(c)
    }

    /// `x^n` with the even-power rule: the result of an even power is
    /// nonnegative and uses only the larger endpoint magnitude.
    pub fn powi(&self, n: u32) -> Interval {
        match n {
            0 => Interval::point(1.0),
            1 => *self,
            _ if n % 2 == 1 => Interval {
                lo: point_pow(self.lo, n).lo,
                hi: point_pow(self.hi, n).hi,
            },
            _ => {
                let (a, b) = (self.lo.abs(), self.hi.abs());
                if self.lo >= 0.0 || self.hi <= 0.0 {
                    let (small, big) = if a <= b { (a, b) } else { (b, a) };
                    Interval {
                        lo: point_pow(small, n).lo,
                        hi: point_pow(big, n).hi,
                    }
                } else {
                    Interval {
                        lo: 0.0,
                        hi: point_pow(a.max(b), n).hi,
                    }
                }
            }
        }
    }
}

// Enclosure of x^n for a single float, by repeated outward multiplication.
fn point_pow(x: f64, n: u32) -> Interval {
    let base = Interval::point(x);
    let mut acc = Interval::point(1.0);
    for _ in 0..n {
        acc = acc * base;
    }
    acc
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, rhs.lo),
            hi: add_up(self.hi, rhs.hi),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        self + (-rhs)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let pairs = [
            (self.lo, rhs.lo),
            (self.lo, rhs.hi),
            (self.hi, rhs.lo),
            (self.hi, rhs.hi),
        ];
        let lo = pairs.iter().map(|&(a, b)| mul_down(a, b)).fold(f64::INFINITY, f64::min);
        let hi = pairs.iter().map(|&(a, b)| mul_up(a, b)).fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    /// Both endpoints at 14 significant digits, rounded outward; a point
    /// interval prints as its value followed by `true`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            return write!(f, "[{}] true", format_bound(self.lo, false));
        }
        write!(f, "[{}, {}]", format_bound(self.lo, false), format_bound(self.hi, true))
    }
}

const SIG_DIGITS: usize = 14;

/// `x` rounded to 14 significant digits, towards `+inf` when `up`, else
/// towards `-inf`.
pub fn format_bound(x: f64, up: bool) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mant, exp) = s.split_once('e').expect("scientific format");
    let mut exp: i32 = exp.parse().expect("exponent");
    let neg = mant.starts_with('-');
    let mut digits: i64 = mant.trim_start_matches('-').replace('.', "").parse().expect("digits");
    let value: f64 = s.parse().expect("round trip");
    // magnitude must grow when rounding away from zero is required
    let away = if up { !neg } else { neg };
    let wrong_side = if up { value < x } else { value > x };
    if wrong_side {
        if away {
            digits += 1;
        } else {
            digits -= 1;
        }
    }
    let top = 10i64.pow(SIG_DIGITS as u32);
    let low = 10i64.pow(SIG_DIGITS as u32 - 1);
    if digits >= top {
        digits /= 10;
        exp += 1;
    } else if digits < low {
        digits = digits * 10 + if away { 0 } else { 9 };
        exp -= 1;
    }
    let ds = digits.to_string();
    let sign = if neg { "-" } else { "" };
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let body = if exp >= 0 {
            let (i, fr) = ds.split_at(exp as usize + 1);
            if fr.is_empty() {
                i.to_string()
            } else {
                format!("{i}.{fr}")
            }
        } else {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), ds)
        };
        format!("{sign}{body}")
    } else {
        format!("{sign}{}.{}e{exp}", &ds[..1], &ds[1..])
    }
}

/// A box: one interval per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalVector(pub Vec<Interval>);

impl IntervalVector {
    pub fn from_point(p: &[f64]) -> Self {
        IntervalVector(p.iter().map(|&x| Interval::point(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        self.0.len() == p.len() && self.0.iter().zip(p).all(|(i, &x)| i.contains(x))
    }

    pub fn interior_contains(&self, other: &IntervalVector) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a.interior_contains(b))
    }

    pub fn max_width(&self) -> f64 {
        self.0.iter().map(Interval::width).fold(0.0, f64::max)
    }

    pub fn mid(&self) -> Vec<f64> {
        self.0.iter().map(Interval::mid).collect()
    }

    /// `p + self`
    pub fn offset(&self, p: &[f64]) -> IntervalVector {
        IntervalVector(self.0.iter().zip(p).map(|(i, &x)| Interval::point(x) + *i).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Interval>,
}

impl IntervalMatrix {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Interval) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        IntervalMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Interval {
        self.data[i * self.cols + j]
    }

    pub fn matvec(&self, v: &IntervalVector) -> IntervalVector {
        IntervalVector(
            (0..self.rows)
                .map(|i| {
                    (0..self.cols).fold(Interval::point(0.0), |acc, j| acc + self.get(i, j) * v.0[j])
                })
                .collect(),
        )
    }
}
