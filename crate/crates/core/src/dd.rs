//! Double-double scalar.
//!
//! Storage, addition and multiplication come from [`TwoFloat`]. Division,
//! `exp`, `ln` and the circular functions are replaced: the upstream
//! versions lose the low word (division rounds its reciprocal correction
//! to zero, `ln` stops near 1e-14) and would cap every double-double run
//! at roughly binary64 accuracy.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, Num, One, ToPrimitive, Zero};
use twofloat::TwoFloat;

/// About 31 significant decimal digits.
#[derive(Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct Dd(pub TwoFloat);

const LN_2: (f64, f64) = (std::f64::consts::LN_2, 2.3190468138462996e-17);
const FRAC_PI_2: (f64, f64) = (std::f64::consts::FRAC_PI_2, 6.123233995736766e-17);
/// 2⁻¹⁰⁴.
const UNIT_ROUNDOFF: f64 = 4.930380657631324e-32;

fn pair(c: (f64, f64)) -> Dd {
    Dd(TwoFloat::new_add(c.0, c.1))
}

impl Dd {
    pub fn new(v: f64) -> Self {
        Dd(v.into())
    }

    pub fn hi(self) -> f64 {
        self.0.hi()
    }

    pub fn lo(self) -> f64 {
        self.0.lo()
    }

    fn scale(self, f: f64) -> Self {
        Dd(self.0 * f)
    }

    /// Taylor sums of sin and cos for |r| ≲ 0.1.
    fn sin_cos_small(r: Dd) -> (Dd, Dd) {
        let r2 = r * r;
        let (mut s, mut c) = (Dd::zero(), Dd::zero());
        let (mut ts, mut tc) = (r, Dd::one());
        for k in 0..14 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s = s + ts.scale(sign);
            c = c + tc.scale(sign);
            let (a, b) = ((2 * k + 2) as f64, (2 * k + 3) as f64);
            ts = Dd(ts.0 * r2.0 / (a * b));
            tc = Dd(tc.0 * r2.0 / ((a - 1.0) * a));
        }
        (s, c)
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi(), self.lo())
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::LowerExp for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::LowerExp::fmt(&self.0, f)
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd::new(v)
    }
}

impl From<Dd> for f64 {
    fn from(v: Dd) -> Self {
        v.hi() + v.lo()
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        Dd(self.0 + rhs.0)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, rhs: Dd) -> Dd {
        Dd(self.0 - rhs.0)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        Dd(self.0 * rhs.0)
    }
}

impl Div for Dd {
    type Output = Dd;
    /// Long division: three f64 quotient digits with exact remainders.
    fn div(self, rhs: Dd) -> Dd {
        let (a, b) = (self.0, rhs.0);
        let q1 = a.hi() / b.hi();
        if !q1.is_finite() || q1 == 0.0 {
            return Dd::new(q1);
        }
        let r = a - b * q1;
        let q2 = r.hi() / b.hi();
        let r = r - b * q2;
        let q3 = r.hi() / b.hi();
        Dd(TwoFloat::new_add(q1, q2) + q3)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, rhs: Dd) -> Dd {
        self - (self / rhs).trunc() * rhs
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd(-self.0)
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd::new(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi() == 0.0
    }
}

impl One for Dd {
    fn one() -> Self {
        Dd::new(1.0)
    }
}

impl Num for Dd {
    type FromStrRadixErr = <TwoFloat as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        TwoFloat::from_str_radix(s, radix).map(Dd)
    }
}

impl ToPrimitive for Dd {
    fn to_i64(&self) -> Option<i64> {
        self.0.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(f64::from(*self))
    }
}

impl FromPrimitive for Dd {
    fn from_i64(n: i64) -> Option<Self> {
        TwoFloat::from_i64(n).map(Dd)
    }
    fn from_u64(n: u64) -> Option<Self> {
        TwoFloat::from_u64(n).map(Dd)
    }
    fn from_f64(v: f64) -> Option<Self> {
        Some(Dd::new(v))
    }
}

impl num_traits::NumCast for Dd {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        n.to_f64().map(Dd::new)
    }
}

macro_rules! consts {
    ($($name:ident),*) => {
        $(fn $name() -> Self { Dd(TwoFloat::$name()) })*
    };
}

impl FloatConst for Dd {
    consts!(
        E, FRAC_1_PI, FRAC_1_SQRT_2, FRAC_2_PI, FRAC_2_SQRT_PI, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6,
        FRAC_PI_8, LN_10, LN_2, LOG10_E, LOG2_E, PI, SQRT_2
    );
}

macro_rules! unary {
    ($($name:ident),*) => {
        $(fn $name(self) -> Self { Dd(Float::$name(self.0)) })*
    };
}

macro_rules! predicate {
    ($($name:ident),*) => {
        $(fn $name(self) -> bool { Float::$name(self.0) })*
    };
}

impl Float for Dd {
    fn nan() -> Self {
        Dd(TwoFloat::NAN)
    }
    fn infinity() -> Self {
        Dd(TwoFloat::INFINITY)
    }
    fn neg_infinity() -> Self {
        Dd(TwoFloat::NEG_INFINITY)
    }
    fn neg_zero() -> Self {
        Dd::new(-0.0)
    }
    fn min_value() -> Self {
        Dd(<TwoFloat as Float>::min_value())
    }
    fn min_positive_value() -> Self {
        Dd(<TwoFloat as Float>::min_positive_value())
    }
    fn max_value() -> Self {
        Dd(<TwoFloat as Float>::max_value())
    }
    fn epsilon() -> Self {
        Dd::new(UNIT_ROUNDOFF)
    }
    fn classify(self) -> FpCategory {
        self.0.classify()
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        Float::integer_decode(self.0)
    }

    predicate!(is_nan, is_infinite, is_finite, is_normal, is_sign_positive, is_sign_negative);
    unary!(floor, ceil, round, trunc, fract, abs, signum, asin, acos, atan, sinh, cosh, tanh, asinh, acosh, atanh);

    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        Dd::one() / self
    }
    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Dd::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
    fn powf(self, n: Self) -> Self {
        (self.ln() * n).exp()
    }
    fn sqrt(self) -> Self {
        Dd(self.0.sqrt())
    }
    fn cbrt(self) -> Self {
        let y = Dd(self.0.cbrt());
        if y.is_zero() || !y.is_finite() {
            return y;
        }
        y - (y * y * y - self) / (y * y).scale(3.0)
    }
    fn hypot(self, other: Self) -> Self {
        (self * self + other * other).sqrt()
    }

    fn exp(self) -> Self {
        let x = self.hi();
        if !x.is_finite() || x.abs() > 700.0 {
            return Dd::new(x.exp());
        }
        // x = k ln2 + r, then exp(r/1024) by Taylor, squared ten times
        let k = (x / LN_2.0).round();
        let r = (self - pair(LN_2).scale(k)).scale(1.0 / 1024.0);
        let mut e = Dd::zero();
        let mut t = r;
        for j in 2..12 {
            e = e + t;
            t = Dd(t.0 * r.0 / j as f64);
        }
        for _ in 0..10 {
            e = e.scale(2.0) + e * e;
        }
        (e + Dd::one()).scale(2f64.powi(k as i32))
    }
    fn exp_m1(self) -> Self {
        self.exp() - Dd::one()
    }
    fn exp2(self) -> Self {
        (self * pair(LN_2)).exp()
    }
    fn ln(self) -> Self {
        let x = self.hi();
        if x <= 0.0 || !x.is_finite() {
            return Dd::new(x.ln());
        }
        let y = Dd::new(x.ln());
        y + self * (-y).exp() - Dd::one()
    }
    fn ln_1p(self) -> Self {
        (self + Dd::one()).ln()
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.ln() / pair(LN_2)
    }
    fn log10(self) -> Self {
        self.ln() / Dd::new(10.0).ln()
    }

    fn sin_cos(self) -> (Self, Self) {
        let x = self.hi();
        if !x.is_finite() {
            return (Dd::nan(), Dd::nan());
        }
        let k = (x / FRAC_PI_2.0).round();
        let r = (self - pair(FRAC_PI_2).scale(k)).scale(0.125);
        let (mut s, mut c) = Dd::sin_cos_small(r);
        for _ in 0..3 {
            (s, c) = ((s * c).scale(2.0), (c - s) * (c + s));
        }
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn tan(self) -> Self {
        let (s, c) = self.sin_cos();
        s / c
    }
    fn atan2(self, other: Self) -> Self {
        let t = Dd(self.0.atan2(other.0));
        if !t.is_finite() || (self.is_zero() && other.is_zero()) {
            return t;
        }
        // one Newton step on y cos t - x sin t = 0
        let (s, c) = t.sin_cos();
        t + (self * c - other * s) / (other * c + self * s)
    }

    fn max(self, other: Self) -> Self {
        match self.partial_cmp(&other) {
            Some(Ordering::Less) => other,
            None if self.is_nan() => other,
            _ => self,
        }
    }
    fn min(self, other: Self) -> Self {
        match self.partial_cmp(&other) {
            Some(Ordering::Greater) => other,
            None if self.is_nan() => other,
            _ => self,
        }
    }
    #[allow(deprecated)]
    fn abs_sub(self, other: Self) -> Self {
        if self > other {
            self - other
        } else {
            Dd::zero()
        }
    }
}
