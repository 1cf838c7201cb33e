//! Exact arithmetic in a real quadratic field ℚ(√d).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_integer::Roots;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, One, Signed, ToPrimitive, Zero};

use crate::scalar::Scalar;

type Q = Ratio<i128>;

/// `rat + irr·√radicand` with rational parts over `i128`.
///
/// The radicand is squarefree and is fixed by the first square root taken;
/// values with `irr = 0` are plain rationals compatible with every radicand.
/// Mixing two different radicands panics, as does `i128` overflow.
#[derive(Clone, Debug)]
pub struct QuadSurd {
    rat: Q,
    irr: Q,
    radicand: u32,
}

fn overflow() -> ! {
    panic!("exact arithmetic overflow in QuadSurd")
}

fn small(q: &Q) -> Option<(i64, i64)> {
    Some((i64::try_from(*q.numer()).ok()?, i64::try_from(*q.denom()).ok()?))
}

fn gcd64(a: i64, b: i64) -> i64 {
    num_integer::Integer::gcd(&a, &b)
}

// the fast paths keep every operand in i64 so gcds and divisions stay in hardware

fn qadd(a: &Q, b: &Q) -> Q {
    if b.is_zero() {
        return *a;
    }
    if a.is_zero() {
        return *b;
    }
    if let (Some((an, ad)), Some((bn, bd))) = (small(a), small(b)) {
        // Knuth's reduction: only gcd(n, g) can remain after the lcm step
        let g = gcd64(ad, bd);
        let n = an as i128 * (bd / g) as i128 + bn as i128 * (ad / g) as i128;
        if n == 0 {
            return Q::zero();
        }
        let g2 = gcd64((n % g as i128) as i64, g).max(1);
        let d = (ad / g) as i128 * (bd / g2) as i128;
        return Q::new_raw(n / g2 as i128, d);
    }
    a.checked_add(b).unwrap_or_else(|| overflow())
}

fn qsub(a: &Q, b: &Q) -> Q {
    qadd(a, &-*b)
}

fn qmul(a: &Q, b: &Q) -> Q {
    if a.is_zero() || b.is_zero() {
        return Q::zero();
    }
    if let (Some((an, ad)), Some((bn, bd))) = (small(a), small(b)) {
        let g1 = gcd64(an, bd);
        let g2 = gcd64(bn, ad);
        let n = (an / g1) as i128 * (bn / g2) as i128;
        let d = (ad / g2) as i128 * (bd / g1) as i128;
        return Q::new_raw(n, d);
    }
    a.checked_mul(b).unwrap_or_else(|| overflow())
}

fn join(a: u32, b: u32) -> u32 {
    match (a, b) {
        (0, r) | (r, 0) => r,
        (r, s) if r == s => r,
        (r, s) => panic!("QuadSurd radicands {r} and {s} cannot be mixed"),
    }
}

/// Writes `n = s·r²` with `s` squarefree. `None` if `n` has a large cofactor
/// that trial division cannot classify.
fn squarefree_split(mut n: i128) -> Option<(i128, i128)> {
    const BOUND: i128 = 100_000;
    debug_assert!(n > 0);
    let (mut s, mut r) = (1i128, 1i128);
    let mut p = 2i128;
    while p <= BOUND && p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        for _ in 0..e / 2 {
            r = r.checked_mul(p)?;
        }
        if e % 2 == 1 {
            s = s.checked_mul(p)?;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        let root = n.sqrt();
        if root * root == n {
            r = r.checked_mul(root)?;
        } else if p * p > n || n < BOUND * BOUND * BOUND {
            // n is prime, or a product of two distinct primes above BOUND.
            s = s.checked_mul(n)?;
        } else {
            return None;
        }
    }
    Some((s, r))
}

/// Square root of a nonnegative rational as `(coefficient, squarefree radicand)`.
fn rational_sqrt(q: &Q) -> Option<(Q, i128)> {
    if q.is_negative() {
        return None;
    }
    if q.is_zero() {
        return Some((Q::zero(), 1));
    }
    let prod = q.numer().checked_mul(q.denom())?;
    let (s, r) = squarefree_split(prod)?;
    Some((Q::new(r, *q.denom()), s))
}

impl QuadSurd {
    pub fn rational(num: i128, den: i128) -> Self {
        Self {
            rat: Q::new(num, den),
            irr: Q::zero(),
            radicand: 0,
        }
    }

    /// `coeff·√radicand`; the radicand must be squarefree.
    pub fn surd(coeff: Ratio<i128>, radicand: u32) -> Self {
        Self::from_parts(Q::zero(), coeff, radicand)
    }

    pub fn from_parts(rat: Ratio<i128>, irr: Ratio<i128>, radicand: u32) -> Self {
        if irr.is_zero() || radicand == 1 {
            let rat = if radicand == 1 { qadd(&rat, &irr) } else { rat };
            return Self {
                rat,
                irr: Q::zero(),
                radicand: 0,
            };
        }
        Self { rat, irr, radicand }
    }

    pub fn rational_part(&self) -> &Ratio<i128> {
        &self.rat
    }

    pub fn irrational_part(&self) -> &Ratio<i128> {
        &self.irr
    }

    pub fn radicand(&self) -> u32 {
        self.radicand
    }

    pub fn is_rational(&self) -> bool {
        self.irr.is_zero()
    }

    /// Field conjugate `rat − irr·√d`.
    pub fn galois_conj(&self) -> Self {
        Self::from_parts(self.rat, -self.irr, self.radicand)
    }

    /// Field norm `rat² − d·irr²`.
    fn norm(&self) -> Q {
        let d = Q::from_integer(self.radicand as i128);
        qsub(&qmul(&self.rat, &self.rat), &qmul(&d, &qmul(&self.irr, &self.irr)))
    }

    fn sign(&self) -> Ordering {
        // sign of rat + irr·√d without floating point
        let a = self.rat.signum();
        let b = self.irr.signum();
        if b.is_zero() {
            return a.cmp(&Q::zero());
        }
        if a.is_zero() || a == b {
            return b.cmp(&Q::zero());
        }
        // opposite signs: compare rat² with d·irr²
        let lhs = qmul(&self.rat, &self.rat);
        let rhs = qmul(&Q::from_integer(self.radicand as i128), &qmul(&self.irr, &self.irr));
        match lhs.cmp(&rhs) {
            Ordering::Greater => a.cmp(&Q::zero()),
            Ordering::Less => b.cmp(&Q::zero()),
            Ordering::Equal => Ordering::Equal,
        }
    }
}

impl PartialEq for QuadSurd {
    fn eq(&self, other: &Self) -> bool {
        self.rat == other.rat
            && self.irr == other.irr
            && (self.irr.is_zero() || self.radicand == other.radicand)
    }
}

impl PartialOrd for QuadSurd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some((self.clone() - other.clone()).sign())
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.irr.is_zero() {
            return write!(f, "{}", self.rat);
        }
        if self.rat.is_zero() {
            write!(f, "{}*sqrt({})", self.irr, self.radicand)
        } else {
            write!(f, "{}+{}*sqrt({})", self.rat, self.irr, self.radicand)
        }
    }
}

impl Zero for QuadSurd {
    fn zero() -> Self {
        Self::rational(0, 1)
    }

    fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.irr.is_zero()
    }
}

impl One for QuadSurd {
    fn one() -> Self {
        Self::rational(1, 1)
    }
}

impl Add for QuadSurd {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let radicand = join(self.radicand, rhs.radicand);
        Self::from_parts(qadd(&self.rat, &rhs.rat), qadd(&self.irr, &rhs.irr), radicand)
    }
}

impl Sub for QuadSurd {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        let radicand = join(self.radicand, rhs.radicand);
        Self::from_parts(qsub(&self.rat, &rhs.rat), qsub(&self.irr, &rhs.irr), radicand)
    }
}

impl Neg for QuadSurd {
    type Output = Self;

    fn neg(self) -> Self {
        Self::from_parts(-self.rat, -self.irr, self.radicand)
    }
}

impl Mul for QuadSurd {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        if self.irr.is_zero() && rhs.irr.is_zero() {
            return Self::from_parts(qmul(&self.rat, &rhs.rat), Q::zero(), 0);
        }
        let radicand = join(self.radicand, rhs.radicand);
        let d = Q::from_integer(radicand as i128);
        let rat = qadd(&qmul(&self.rat, &rhs.rat), &qmul(&d, &qmul(&self.irr, &rhs.irr)));
        let irr = qadd(&qmul(&self.rat, &rhs.irr), &qmul(&self.irr, &rhs.rat));
        Self::from_parts(rat, irr, radicand)
    }
}

impl Div for QuadSurd {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        assert!(!rhs.is_zero(), "QuadSurd division by zero");
        if rhs.irr.is_zero() {
            let inv = rhs.rat.recip();
            return Self::from_parts(qmul(&self.rat, &inv), qmul(&self.irr, &inv), self.radicand);
        }
        let norm = rhs.norm();
        let num = self * rhs.galois_conj();
        let inv = norm.recip();
        Self::from_parts(qmul(&num.rat, &inv), qmul(&num.irr, &inv), num.radicand)
    }
}

fn q_to_f64(q: &Q) -> f64 {
    // split off the integer part so large numerators keep their precision
    let int = q.numer() / q.denom();
    let frac = q.numer() % q.denom();
    int.to_f64().unwrap_or(f64::NAN) + frac.to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

impl Scalar for QuadSurd {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::rational(num as i128, den as i128)
    }

    fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        let mut den: i128 = 1;
        let mut v = x;
        for _ in 0..64 {
            if v.fract() == 0.0 && v.abs() < 1e30 {
                return Some(Self::rational(v as i128, den));
            }
            v *= 2.0;
            den *= 2;
        }
        None
    }

    fn to_f64(&self) -> f64 {
        q_to_f64(&self.rat) + q_to_f64(&self.irr) * (self.radicand as f64).sqrt()
    }

    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }

    fn sqrt(&self) -> Option<Self> {
        if self.sign() == Ordering::Less {
            return None;
        }
        if self.irr.is_zero() {
            let (coeff, s) = rational_sqrt(&self.rat)?;
            let s = u32::try_from(s).ok()?;
            return Some(Self::from_parts(Q::zero(), coeff, s));
        }
        // denest: (x + y√d)² = self with x, y rational
        let d = Q::from_integer(self.radicand as i128);
        let disc = qsub(&qmul(&self.rat, &self.rat), &qmul(&d, &qmul(&self.irr, &self.irr)));
        let (root, s) = rational_sqrt(&disc)?;
        if s != 1 {
            return None;
        }
        let half = Q::new(1, 2);
        for z in [qmul(&qadd(&self.rat, &root), &half), qmul(&qsub(&self.rat, &root), &half)] {
            if let Some((x, 1)) = rational_sqrt(&z) {
                if x.is_zero() {
                    continue;
                }
                let y = qmul(&self.irr, &(x * Q::from_integer(2)).recip());
                let cand = Self::from_parts(x, y, self.radicand);
                if cand.clone() * cand.clone() == *self && cand.sign() != Ordering::Less {
                    return Some(cand);
                }
            }
        }
        None
    }

    fn conj(&self) -> Self {
        self.clone()
    }
}
