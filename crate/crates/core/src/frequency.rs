//! Frequencies as exact coordinates over rationally independent symbols.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::index::{ModeKey, MultiIndex, SignedIndex, TruncationContext};
use crate::scalar::{rational_approx, GaussRational, Scalar};

/// A named real number, assumed independent of the other symbols over Q.
#[derive(Clone, Debug, PartialEq)]
pub struct Symbol {
    pub name: String,
    pub value: f64,
    /// Rational stand-in used by exact-mode coefficient arithmetic.
    pub exact: BigRational,
}

impl Symbol {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Symbol { name: name.into(), value, exact: rational_approx(value, 1_000_000) }
    }

    pub fn exact(name: impl Into<String>, exact: BigRational) -> Self {
        let value = crate::scalar::rat_to_f64(&exact);
        Symbol { name: name.into(), value, exact }
    }
}

/// Reference frequencies `λ⁽⁰⁾_k` for the separation audit.
#[derive(Clone, Debug, PartialEq)]
pub enum Reference {
    /// `<k>^α e^{iφ_k}`.
    Growth { alpha: f64, phases: BTreeMap<ModeKey, f64> },
    /// Explicit values per mode.
    Explicit(BTreeMap<ModeKey, Complex64>),
}

/// An exact element of the symbol span, `Σ c_s · symbol_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicValue {
    pub coords: Vec<GaussRational>,
}

impl SymbolicValue {
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }
}

/// Frequency vector `λ` together with its symbol table.
#[derive(Clone, Debug)]
pub struct FrequencyModel {
    symbols: Vec<Symbol>,
    lambda: BTreeMap<ModeKey, Vec<GaussRational>>,
    pub reference: Option<Reference>,
    /// Phase-separation constant `C`.
    pub separation: Option<f64>,
    scaled: BTreeMap<ModeKey, Vec<i128>>,
}

impl PartialEq for FrequencyModel {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols
            && self.lambda == other.lambda
            && self.reference == other.reference
            && self.separation == other.separation
    }
}

impl FrequencyModel {
    /// Build a model; every `λ_k` must be a nonzero element of the span.
    pub fn new(symbols: Vec<Symbol>, lambda: BTreeMap<ModeKey, Vec<GaussRational>>) -> Result<Self> {
        let n = symbols.len();
        let mut den = BigInt::one();
        for (k, coords) in &lambda {
            if coords.len() != n {
                return Err(Error::Input(format!("mode {k} has {} coordinates, expected {n}", coords.len())));
            }
            if coords.iter().all(|c| c.is_zero()) {
                return Err(Error::ZeroFrequency(k.to_string()));
            }
            for c in coords {
                den = den.lcm(c.re.denom()).lcm(c.im.denom());
            }
        }
        let d = BigRational::from_integer(den);
        let mut scaled = BTreeMap::new();
        for (k, coords) in &lambda {
            let mut v = Vec::with_capacity(2 * n);
            for c in coords {
                for part in [&c.re, &c.im] {
                    let x = (part * &d).to_integer();
                    let x = x.to_i128().ok_or_else(|| Error::Input("frequency coordinates too large".into()))?;
                    v.push(x);
                }
            }
            scaled.insert(*k, v);
        }
        Ok(FrequencyModel { symbols, lambda, reference: None, separation: None, scaled })
    }

    pub fn with_reference(mut self, r: Reference) -> Self {
        self.reference = Some(r);
        self
    }

    pub fn with_separation(mut self, c: f64) -> Self {
        self.separation = Some(c);
        self
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeKey> + '_ {
        self.lambda.keys().copied()
    }

    pub fn coords(&self, k: ModeKey) -> Option<&[GaussRational]> {
        self.lambda.get(&k).map(|v| v.as_slice())
    }

    /// Check that every mode of `ctx` carries a (nonzero) frequency.
    pub fn check_context(&self, ctx: &TruncationContext) -> Result<()> {
        for k in ctx.modes() {
            if !self.lambda.contains_key(&k) {
                return Err(Error::MissingFrequency(k.to_string()));
            }
        }
        Ok(())
    }

    /// Restrict the model to the modes of `ctx`.
    pub fn restricted(&self, ctx: &TruncationContext) -> Result<Self> {
        self.check_context(ctx)?;
        let lambda = ctx.modes().into_iter().map(|k| (k, self.lambda[&k].clone())).collect();
        let mut m = FrequencyModel::new(self.symbols.clone(), lambda)?;
        m.reference = self.reference.clone();
        m.separation = self.separation;
        Ok(m)
    }

    fn scaled_dot(&self, p: &SignedIndex) -> Vec<i128> {
        let mut acc = vec![0i128; 2 * self.symbols.len()];
        for &(k, e) in p.entries() {
            let v = &self.scaled[&k];
            for (a, b) in acc.iter_mut().zip(v) {
                *a += e as i128 * b;
            }
        }
        acc
    }

    /// Exact test `λ·p = 0`.
    pub fn dot_is_zero(&self, p: &SignedIndex) -> bool {
        self.scaled_dot(p).iter().all(|&x| x == 0)
    }

    /// Integer fingerprint of `λ·p`, usable as a hash key.
    pub fn dot_key(&self, q: &MultiIndex) -> Vec<i128> {
        self.scaled_dot(&q.to_signed())
    }

    pub fn lambda_key(&self, k: ModeKey) -> &[i128] {
        &self.scaled[&k]
    }

    /// `λ·p` as an exact symbolic value.
    pub fn dot(&self, p: &SignedIndex) -> SymbolicValue {
        let n = self.symbols.len();
        let mut coords = vec![GaussRational::zero(); n];
        for &(k, e) in p.entries() {
            for (a, c) in coords.iter_mut().zip(&self.lambda[&k]) {
                *a = Scalar::add(a, &c.scale(e as i64));
            }
        }
        SymbolicValue { coords }
    }

    /// `λ·(q - e_k)`.
    pub fn divisor(&self, q: &MultiIndex, k: ModeKey) -> SymbolicValue {
        self.dot(&q.minus_unit(k))
    }

    pub fn is_resonant(&self, q: &MultiIndex, k: ModeKey) -> bool {
        self.dot_is_zero(&q.minus_unit(k))
    }

    pub fn evaluate_exact(&self, v: &SymbolicValue) -> GaussRational {
        let mut acc = GaussRational::zero();
        for (c, s) in v.coords.iter().zip(&self.symbols) {
            acc = Scalar::add(&acc, &Scalar::mul(c, &GaussRational::real(s.exact.clone())));
        }
        acc
    }

    pub fn evaluate_float(&self, v: &SymbolicValue) -> Complex64 {
        v.coords.iter().zip(&self.symbols).map(|(c, s)| c.to_complex() * s.value).sum()
    }

    /// `λ·p` numerically, from the float symbol values.
    pub fn dot_float(&self, p: &SignedIndex) -> Complex64 {
        p.entries().iter().map(|&(k, e)| self.lambda_float(k) * e as f64).sum()
    }

    pub fn lambda_exact(&self, k: ModeKey) -> GaussRational {
        self.evaluate_exact(&SymbolicValue { coords: self.lambda[&k].clone() })
    }

    pub fn lambda_float(&self, k: ModeKey) -> Complex64 {
        self.evaluate_float(&SymbolicValue { coords: self.lambda[&k].clone() })
    }

    /// `λ_k` in the coefficient type of the computation.
    pub fn lambda_scalar<C: Scalar>(&self, k: ModeKey) -> C {
        if C::EXACT {
            C::from_gauss(&self.lambda_exact(k))
        } else {
            C::from_complex(self.lambda_float(k))
        }
    }

    /// `[(k, λ_k)]` over the modes of `ctx`, ready for [`crate::VectorField::linear`].
    pub fn linear_terms<C: Scalar>(&self, ctx: &TruncationContext) -> Result<Vec<(ModeKey, C)>> {
        self.check_context(ctx)?;
        Ok(ctx.modes().into_iter().map(|k| (k, self.lambda_scalar(k))).collect())
    }

    /// Numeric divisor `λ·(q - e_k)`; `None` when it vanishes exactly.
    ///
    /// Fails when the divisor is symbolically nonzero but its numeric
    /// stand-in vanishes.
    pub fn divisor_scalar<C: Scalar>(&self, q: &MultiIndex, k: ModeKey, tol: f64) -> Result<Option<C>> {
        let p = q.minus_unit(k);
        if self.dot_is_zero(&p) {
            return Ok(None);
        }
        let v = if C::EXACT {
            C::from_gauss(&self.evaluate_exact(&self.dot(&p)))
        } else {
            C::from_complex(self.dot_float(&p))
        };
        if v.is_negligible(tol) {
            return Err(Error::NumericCoincidence(crate::field::term_label(k, q)));
        }
        Ok(Some(v))
    }

    pub fn reference_value(&self, k: ModeKey) -> Option<Complex64> {
        match self.reference.as_ref()? {
            Reference::Growth { alpha, phases } => {
                let phi = *phases.get(&k)?;
                Some(Complex64::from_polar((k.weight() as f64).powf(*alpha), phi))
            }
            Reference::Explicit(m) => m.get(&k).copied(),
        }
    }

    /// `max_k |λ_k - λ⁽⁰⁾_k|` over `ctx`; `None` without references.
    pub fn reference_deviation(&self, ctx: &TruncationContext) -> Option<f64> {
        let mut worst = 0.0f64;
        for k in ctx.modes() {
            let r = self.reference_value(k)?;
            worst = worst.max((self.lambda_float(k) - r).norm());
        }
        Some(worst)
    }

    /// `min |e^{iφ_(j,σ)} - e^{iφ_(-j,-σ)}|` over lattice modes with phases.
    pub fn phase_separation(&self, ctx: &TruncationContext) -> Option<f64> {
        let Some(Reference::Growth { phases, .. }) = &self.reference else {
            return None;
        };
        let mut best = f64::INFINITY;
        for k in ctx.modes() {
            if k.is_plain() {
                return None;
            }
            let partner = ModeKey::lattice(-k.j(), -k.sigma());
            let (a, b) = (phases.get(&k)?, phases.get(&partner)?);
            best = best.min((Complex64::from_polar(1.0, *a) - Complex64::from_polar(1.0, *b)).norm());
        }
        Some(best)
    }

    pub fn format_value(&self, v: &SymbolicValue) -> String {
        let mut parts = Vec::new();
        for (c, s) in v.coords.iter().zip(&self.symbols) {
            if c.is_zero() {
                continue;
            }
            let coef = if c.im.is_zero() {
                c.re.to_string()
            } else if c.re.is_zero() {
                format!("{}i", c.im)
            } else {
                format!("({}+{}i)", c.re, c.im)
            };
            parts.push(format!("{coef}*{}", s.name));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

impl fmt::Display for SymbolicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Rational coordinate vector with a single nonzero entry.
pub fn coord(n: usize, at: usize, c: GaussRational) -> Vec<GaussRational> {
    let mut v = vec![GaussRational::zero(); n];
    v[at] = c;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim6() -> FrequencyModel {
        let syms = vec![Symbol::new("1", 1.0), Symbol::new("z1", 2f64.sqrt()), Symbol::new("z2", 3f64.sqrt())];
        let g = GaussRational::from_ints;
        let mut lam = BTreeMap::new();
        lam.insert(ModeKey::index(1), coord(3, 0, g(2, 0)));
        lam.insert(ModeKey::index(2), coord(3, 0, g(1, 0)));
        lam.insert(ModeKey::index(3), coord(3, 1, g(1, 0)));
        lam.insert(ModeKey::index(4), coord(3, 1, g(-1, 0)));
        lam.insert(ModeKey::index(5), coord(3, 2, g(1, 0)));
        lam.insert(ModeKey::index(6), coord(3, 2, g(-1, 0)));
        FrequencyModel::new(syms, lam).unwrap()
    }

    fn e(i: u32) -> MultiIndex {
        MultiIndex::unit(ModeKey::index(i))
    }

    #[test]
    fn divisor_examples() {
        let m = dim6();
        let k1 = ModeKey::index(1);
        assert!(m.divisor(&e(1), k1).is_zero());
        assert!(m.divisor(&e(2).add(&e(2)), k1).is_zero());
        assert!(m.divisor(&e(3).add(&e(4)).add(&e(1)), k1).is_zero());
        let d = m.divisor(&e(1).add(&e(2)), ModeKey::index(2));
        assert_eq!(m.evaluate_exact(&d), GaussRational::from_ints(2, 0));
        assert!(!m.is_resonant(&e(3), ModeKey::index(5)));
    }

    #[test]
    fn zero_frequency_rejected() {
        let syms = vec![Symbol::new("1", 1.0)];
        let mut lam = BTreeMap::new();
        lam.insert(ModeKey::index(1), vec![GaussRational::zero()]);
        assert_eq!(FrequencyModel::new(syms, lam).unwrap_err(), Error::ZeroFrequency("1".into()));
    }

    #[test]
    fn scalar_divisors_agree_between_modes() {
        let m = dim6();
        let q = e(1).add(&e(1)).add(&e(3));
        let k = ModeKey::index(2);
        let a: GaussRational = m.divisor_scalar(&q, k, 1e-12).unwrap().unwrap();
        let b: Complex64 = m.divisor_scalar(&q, k, 1e-12).unwrap().unwrap();
        assert!((a.to_complex() - b).norm() < 1e-9);
    }
}
