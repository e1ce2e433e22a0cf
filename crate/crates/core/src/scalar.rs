//! Coefficient arithmetic: exact Gaussian rationals or complex doubles.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A rational `re + i·im`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct GaussRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRational { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        GaussRational { re, im: BigRational::zero() }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        GaussRational { re: int(re), im: int(im) }
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        GaussRational::real(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn i() -> Self {
        GaussRational::from_ints(0, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }
}

impl fmt::Display for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.re, self.im)
    }
}

pub(crate) fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub(crate) fn rat_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // very large numerator or denominator: shift both down first
            let bits = r.numer().bits().max(r.denom().bits()) as i64 - 1000;
            let shift = bits.max(0) as usize;
            let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
            n / d
        }
    }
}

/// Parse `a`, `a/b` or a decimal like `-1.25` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Input(format!("bad rational '{s}'"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let digits = format!("{}{}", ip.trim_start_matches(['-', '+']), fp);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let r = BigRational::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Best rational approximation with denominator at most `max_den`
/// (continued fractions).
pub fn rational_approx(x: f64, max_den: i64) -> BigRational {
    if x.fract() == 0.0 && x.abs() < 9e15 {
        return int(x as i64);
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = v - a;
        if frac.abs() < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    BigRational::new(BigInt::from(h1), BigInt::from(k1))
}

/// Field operations needed by the algebra, implemented for [`GaussRational`]
/// (exact) and [`Complex64`] (float).
pub trait Scalar: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_gauss(g: &GaussRational) -> Self;
    fn from_i64(n: i64) -> Self;
    /// Exact image of a complex double (dyadic rationals in exact mode).
    fn from_complex(z: Complex64) -> Self;
    fn to_complex(&self) -> Complex64;

    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    /// Division; `None` when `o` is zero.
    fn div(&self, o: &Self) -> Option<Self>;
    fn neg(&self) -> Self;

    fn scale(&self, n: i64) -> Self {
        self.mul(&Self::from_i64(n))
    }

    /// Zero test; float mode compares the modulus with `tol`.
    fn is_negligible(&self, tol: f64) -> bool;

    fn modulus(&self) -> f64 {
        self.to_complex().norm()
    }

    fn to_text(&self) -> String;
    fn parse_text(s: &str) -> Result<Self>;
}

impl Scalar for GaussRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        GaussRational::default()
    }

    fn one() -> Self {
        GaussRational::from_ints(1, 0)
    }

    fn from_gauss(g: &GaussRational) -> Self {
        g.clone()
    }

    fn from_i64(n: i64) -> Self {
        GaussRational::from_ints(n, 0)
    }

    fn from_complex(z: Complex64) -> Self {
        let f = |x: f64| BigRational::from_float(x).unwrap_or_default();
        GaussRational { re: f(z.re), im: f(z.im) }
    }

    fn to_complex(&self) -> Complex64 {
        GaussRational::to_complex(self)
    }

    fn add(&self, o: &Self) -> Self {
        GaussRational { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    fn sub(&self, o: &Self) -> Self {
        GaussRational { re: &self.re - &o.re, im: &self.im - &o.im }
    }

    fn mul(&self, o: &Self) -> Self {
        if self.im.is_zero() && o.im.is_zero() {
            return GaussRational::real(&self.re * &o.re);
        }
        GaussRational { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }

    fn div(&self, o: &Self) -> Option<Self> {
        if o.is_zero() {
            return None;
        }
        if o.im.is_zero() {
            return Some(GaussRational { re: &self.re / &o.re, im: &self.im / &o.re });
        }
        let den = &o.re * &o.re + &o.im * &o.im;
        let re = (&self.re * &o.re + &self.im * &o.im) / &den;
        let im = (&self.im * &o.re - &self.re * &o.im) / &den;
        Some(GaussRational { re, im })
    }

    fn neg(&self) -> Self {
        GaussRational { re: -&self.re, im: -&self.im }
    }

    fn scale(&self, n: i64) -> Self {
        let n = BigInt::from(n);
        GaussRational { re: &self.re * &n, im: &self.im * &n }
    }

    fn is_negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }

    fn modulus(&self) -> f64 {
        if self.im.is_zero() {
            return rat_to_f64(&self.re.abs());
        }
        self.to_complex().norm()
    }

    fn to_text(&self) -> String {
        format!("{} {}", self.re, self.im)
    }

    fn parse_text(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let re = it.next().ok_or_else(|| Error::Input("missing real part".into()))?;
        let im = it.next().unwrap_or("0");
        if it.next().is_some() {
            return Err(Error::Input(format!("trailing text in coefficient '{s}'")));
        }
        Ok(GaussRational { re: parse_rational(re)?, im: parse_rational(im)? })
    }
}

impl Scalar for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn from_gauss(g: &GaussRational) -> Self {
        g.to_complex()
    }

    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }

    fn from_complex(z: Complex64) -> Self {
        z
    }

    fn to_complex(&self) -> Complex64 {
        *self
    }

    fn add(&self, o: &Self) -> Self {
        self + o
    }

    fn sub(&self, o: &Self) -> Self {
        self - o
    }

    fn mul(&self, o: &Self) -> Self {
        self * o
    }

    fn div(&self, o: &Self) -> Option<Self> {
        if o.is_zero() {
            None
        } else {
            Some(self / o)
        }
    }

    fn neg(&self) -> Self {
        -self
    }

    fn is_negligible(&self, tol: f64) -> bool {
        self.norm() <= tol
    }

    fn to_text(&self) -> String {
        format!("{:?} {:?}", self.re, self.im)
    }

    fn parse_text(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let p = |t: &str| -> Result<f64> {
            if t.contains('/') {
                return Ok(rat_to_f64(&parse_rational(t)?));
            }
            t.parse::<f64>().map_err(|_| Error::Input(format!("bad float '{t}'")))
        };
        let re = p(it.next().ok_or_else(|| Error::Input("missing real part".into()))?)?;
        let im = match it.next() {
            Some(t) => p(t)?,
            None => 0.0,
        };
        Ok(Complex64::new(re, im))
    }
}

/// `n!` as an exact integer scalar.
pub fn factorial<C: Scalar>(n: u32) -> C {
    let mut acc = C::one();
    for i in 2..=n as i64 {
        acc = acc.scale(i);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_division_is_exact() {
        let a = GaussRational::from_ints(3, 4);
        let b = GaussRational::from_ints(1, -2);
        let q = a.div(&b).unwrap();
        assert_eq!(q.mul(&b), a);
        assert!(a.div(&GaussRational::zero()).is_none());
    }

    #[test]
    fn text_round_trip() {
        let a = GaussRational::new(
            BigRational::new(BigInt::from(-7), BigInt::from(3)),
            BigRational::from_integer(BigInt::from(2)),
        );
        assert_eq!(GaussRational::parse_text(&a.to_text()).unwrap(), a);
        let z = Complex64::new(0.1, -1e-300);
        assert_eq!(Complex64::parse_text(&z.to_text()).unwrap(), z);
    }

    #[test]
    fn decimal_parse() {
        assert_eq!(parse_rational("-1.25").unwrap(), BigRational::new(BigInt::from(-5), BigInt::from(4)));
        assert_eq!(parse_rational("3/6").unwrap(), BigRational::new(BigInt::from(1), BigInt::from(2)));
    }

    #[test]
    fn continued_fraction_close() {
        let r = rational_approx(2f64.sqrt(), 1_000_000);
        assert!((rat_to_f64(&r) - 2f64.sqrt()).abs() < 1e-11);
        assert!(r.denom() <= &BigInt::from(1_000_000));
    }

    #[test]
    fn factorial_values() {
        assert_eq!(factorial::<GaussRational>(5), GaussRational::from_ints(120, 0));
    }
}
