//! Sparse truncated scalar series and vector fields.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::index::{ModeKey, MultiIndex, TruncationContext};
use crate::scalar::Scalar;

/// Key of a vector-field monomial `x^q ∂_k`.
pub type TermKey = (ModeKey, MultiIndex);

/// Scaling degree `|q| - 1` of a vector-field monomial.
pub fn scaling_degree(q: &MultiIndex) -> u32 {
    q.degree().saturating_sub(1)
}

pub(crate) fn term_label(k: ModeKey, q: &MultiIndex) -> String {
    format!("x^[{q}] d/dx_{k}")
}

/// Truncated power series `Σ f_q x^q` with `|q| <= D + 1`.
#[derive(Clone, Debug)]
pub struct ScalarSeries<C> {
    ctx: TruncationContext,
    terms: BTreeMap<MultiIndex, C>,
    truncated: bool,
}

impl<C: Scalar> PartialEq for ScalarSeries<C> {
    fn eq(&self, other: &Self) -> bool {
        self.ctx == other.ctx && self.terms == other.terms
    }
}

impl<C: Scalar> ScalarSeries<C> {
    pub fn new(ctx: TruncationContext) -> Self {
        ScalarSeries { ctx, terms: BTreeMap::new(), truncated: false }
    }

    pub fn ctx(&self) -> &TruncationContext {
        &self.ctx
    }

    pub fn max_degree(&self) -> u32 {
        self.ctx.degree_cutoff + 1
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn get(&self, q: &MultiIndex) -> Option<&C> {
        self.terms.get(q)
    }

    /// Add `c x^q`, validating support and momentum.
    pub fn insert(&mut self, q: MultiIndex, c: C) -> Result<()> {
        if !self.ctx.supports(&q) {
            return Err(Error::ModeOutOfRange(q.to_string()));
        }
        if self.ctx.momentum && q.raw_momentum() != 0 {
            return Err(Error::MomentumViolation(format!("x^[{q}]")));
        }
        self.accumulate(q, c);
        Ok(())
    }

    fn accumulate(&mut self, q: MultiIndex, c: C) {
        if q.degree() > self.max_degree() {
            self.truncated = true;
            return;
        }
        accumulate(&mut self.terms, q, c, self.ctx.zero_tol);
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_ctx(&self.ctx, &other.ctx)?;
        let mut out = self.clone();
        out.truncated |= other.truncated;
        for (q, c) in &other.terms {
            out.accumulate(q.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        same_ctx(&self.ctx, &other.ctx)?;
        let mut out = ScalarSeries::new(self.ctx);
        for (p, a) in &self.terms {
            for (q, b) in &other.terms {
                out.accumulate(p.add(q), a.mul(b));
            }
        }
        Ok(out)
    }

    /// `∂f/∂x_k`.
    pub fn derivative(&self, k: ModeKey) -> Self {
        let mut out = ScalarSeries::new(self.ctx);
        for (q, c) in &self.terms {
            let e = q.get(k);
            if e > 0 {
                out.accumulate(q.sub_unit(k).unwrap(), c.scale(e as i64));
            }
        }
        out
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(q, c)| c.to_complex() * monomial(&self.ctx, q, x))
            .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
    }
}

fn accumulate<K: Ord, C: Scalar>(map: &mut BTreeMap<K, C>, key: K, c: C, tol: f64) {
    use std::collections::btree_map::Entry;
    match map.entry(key) {
        Entry::Vacant(v) => {
            if !c.is_negligible(tol) {
                v.insert(c);
            }
        }
        Entry::Occupied(mut o) => {
            let s = o.get().add(&c);
            if s.is_negligible(tol) {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

fn same_ctx(a: &TruncationContext, b: &TruncationContext) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::ContextMismatch)
    }
}

pub(crate) fn monomial(ctx: &TruncationContext, q: &MultiIndex, x: &[Complex64]) -> Complex64 {
    let mut m = Complex64::new(1.0, 0.0);
    for &(h, e) in q.entries() {
        let i = ctx.position(h).expect("mode inside context");
        m *= x[i].powu(e);
    }
    m
}

/// Truncated vector field `Σ X_q^{(k)} x^q ∂_k` with `1 <= |q| <= D + 1`.
#[derive(Clone, Debug)]
pub struct VectorField<C> {
    ctx: TruncationContext,
    terms: BTreeMap<TermKey, C>,
    truncated: bool,
}

impl<C: Scalar> PartialEq for VectorField<C> {
    fn eq(&self, other: &Self) -> bool {
        self.ctx == other.ctx && self.terms == other.terms
    }
}

impl<C: Scalar> VectorField<C> {
    pub fn new(ctx: TruncationContext) -> Self {
        VectorField { ctx, terms: BTreeMap::new(), truncated: false }
    }

    /// `D(λ) = Σ λ_k x_k ∂_k`.
    pub fn linear(ctx: TruncationContext, lambda: &[(ModeKey, C)]) -> Result<Self> {
        let mut out = VectorField::new(ctx);
        for (k, l) in lambda {
            out.insert(*k, MultiIndex::unit(*k), l.clone())?;
        }
        Ok(out)
    }

    pub fn ctx(&self) -> &TruncationContext {
        &self.ctx
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Whether some operation producing this field dropped terms above the cutoff.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn get(&self, k: ModeKey, q: &MultiIndex) -> Option<&C> {
        self.terms.get(&(k, q.clone()))
    }

    /// Add `c x^q ∂_k`, validating the admissibility rules.
    pub fn insert(&mut self, k: ModeKey, q: MultiIndex, c: C) -> Result<()> {
        if q.degree() == 0 {
            return Err(Error::DegreeTooSmall { need: 1, got: 0 });
        }
        if !self.ctx.contains(k) {
            return Err(Error::ModeOutOfRange(k.to_string()));
        }
        if !self.ctx.supports(&q) {
            return Err(Error::ModeOutOfRange(q.to_string()));
        }
        if !self.ctx.conserves(&q, k) {
            return Err(Error::MomentumViolation(term_label(k, &q)));
        }
        self.accumulate(k, q, c);
        Ok(())
    }

    pub(crate) fn accumulate(&mut self, k: ModeKey, q: MultiIndex, c: C) {
        if scaling_degree(&q) > self.ctx.degree_cutoff {
            self.truncated = true;
            return;
        }
        accumulate(&mut self.terms, (k, q), c, self.ctx.zero_tol);
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_ctx(&self.ctx, &other.ctx)?;
        let mut out = self.clone();
        out.truncated |= other.truncated;
        for ((k, q), c) in &other.terms {
            out.accumulate(*k, q.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|c| c.neg())
    }

    pub fn scale(&self, s: &C) -> Self {
        let mut out = VectorField::new(self.ctx);
        for ((k, q), c) in &self.terms {
            out.accumulate(*k, q.clone(), c.mul(s));
        }
        out
    }

    fn map(&self, f: impl Fn(&C) -> C) -> Self {
        VectorField {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(key, c)| (key.clone(), f(c))).collect(),
            truncated: self.truncated,
        }
    }

    /// Convert coefficients to another scalar type.
    pub fn convert<D: Scalar>(&self, f: impl Fn(&C) -> D) -> VectorField<D> {
        let mut out = VectorField::new(self.ctx);
        for ((k, q), c) in &self.terms {
            out.accumulate(*k, q.clone(), f(c));
        }
        out
    }

    pub fn to_float(&self) -> VectorField<Complex64> {
        self.convert(|c| c.to_complex())
    }

    /// Smallest scaling degree present, `None` for the zero field.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().map(|(_, q)| scaling_degree(q)).min()
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(|(_, q)| scaling_degree(q)).max()
    }

    /// Keep the terms with `|q| = d + 1`.
    pub fn project_degree(&self, d: u32) -> Self {
        self.project_set(|_, q| scaling_degree(q) == d)
    }

    /// Keep the terms whose `(k, q)` satisfies `pred`.
    pub fn project_set(&self, pred: impl Fn(ModeKey, &MultiIndex) -> bool) -> Self {
        VectorField {
            ctx: self.ctx,
            terms: self.terms.iter().filter(|((k, q), _)| pred(*k, q)).map(|(a, b)| (a.clone(), b.clone())).collect(),
            truncated: false,
        }
    }

    /// `(diagonal, out)`: terms with `q_k >= 1` and the rest.
    pub fn split_diagonal(&self) -> (Self, Self) {
        (self.project_set(|k, q| q.get(k) >= 1), self.project_set(|k, q| q.get(k) == 0))
    }

    /// Component `X^{(k)}` as a scalar series.
    pub fn component(&self, k: ModeKey) -> ScalarSeries<C> {
        let mut out = ScalarSeries::new(self.ctx);
        for ((kk, q), c) in &self.terms {
            if *kk == k {
                out.accumulate(q.clone(), c.clone());
            }
        }
        out
    }

    pub fn eval(&self, x: &[Complex64]) -> Vec<Complex64> {
        CompiledField::new(self).eval(x)
    }
}

impl<C: Scalar> fmt::Display for VectorField<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::text::field_to_text(self))
    }
}

/// `L_X f = Σ_k X^{(k)} ∂f/∂x_k`, truncated.
pub fn lie_derivative<C: Scalar>(x: &VectorField<C>, f: &ScalarSeries<C>) -> Result<ScalarSeries<C>> {
    same_ctx(&x.ctx, &f.ctx)?;
    let mut out = ScalarSeries::new(x.ctx);
    let cap = out.max_degree();
    for ((k, q), c) in &x.terms {
        for (p, a) in &f.terms {
            let e = p.get(*k);
            if e == 0 {
                continue;
            }
            if q.degree() + p.degree() - 1 > cap {
                out.truncated = true;
                continue;
            }
            let m = q.add(&p.sub_unit(*k).unwrap());
            out.accumulate(m, c.mul(a).scale(e as i64));
        }
    }
    Ok(out)
}

/// `X[Y^{(j)}] ∂_j` summed over `j`: the derivative of `Y` along `X`.
fn directional<C: Scalar>(x: &VectorField<C>, y: &VectorField<C>, sign: i64) -> (Vec<(TermKey, C)>, bool) {
    let cap = x.ctx.degree_cutoff;
    let mut by_mode: BTreeMap<ModeKey, Vec<(&TermKey, &C)>> = BTreeMap::new();
    for (key, a) in &y.terms {
        for m in key.1.modes() {
            by_mode.entry(m).or_default().push((key, a));
        }
    }
    let xs: Vec<(&TermKey, &C)> = x.terms.iter().collect();
    let work = |(xk, c): &(&TermKey, &C)| -> (Vec<(TermKey, C)>, bool) {
        let (k, q) = (xk.0, &xk.1);
        let mut local = Vec::new();
        let mut cut = false;
        if let Some(ys) = by_mode.get(&k) {
            for ((j, p), a) in ys {
                if scaling_degree(q) + scaling_degree(p) > cap {
                    cut = true;
                    continue;
                }
                let e = p.get(k) as i64;
                let m = q.add(&p.sub_unit(k).unwrap());
                local.push(((*j, m), c.mul(a).scale(sign * e)));
            }
        }
        (local, cut)
    };
    let parts: Vec<(Vec<(TermKey, C)>, bool)> =
        if xs.len() * y.terms.len() > 256 { xs.par_iter().map(work).collect() } else { xs.iter().map(work).collect() };
    let mut cut = false;
    let mut all = Vec::new();
    for (v, c) in parts {
        cut |= c;
        all.extend(v);
    }
    (all, cut)
}

/// `[X, Y] = Σ_j (X[Y^{(j)}] - Y[X^{(j)}]) ∂_j`, truncated.
pub fn bracket<C: Scalar>(x: &VectorField<C>, y: &VectorField<C>) -> Result<VectorField<C>> {
    same_ctx(&x.ctx, &y.ctx)?;
    let mut out = VectorField::new(x.ctx);
    let (a, cut_a) = directional(x, y, 1);
    let (b, cut_b) = directional(y, x, -1);
    for ((k, q), c) in a.into_iter().chain(b) {
        accumulate(&mut out.terms, (k, q), c, out.ctx.zero_tol);
    }
    out.truncated = cut_a || cut_b;
    Ok(out)
}

/// Flattened field for fast numeric evaluation.
#[derive(Clone, Debug)]
pub struct CompiledField {
    dim: usize,
    terms: Vec<(usize, Vec<(usize, u32)>, Complex64)>,
}

impl CompiledField {
    pub fn new<C: Scalar>(x: &VectorField<C>) -> Self {
        let ctx = x.ctx();
        let terms = x
            .terms()
            .map(|((k, q), c)| {
                let mono = q.entries().iter().map(|&(h, e)| (ctx.position(h).unwrap(), e)).collect();
                (ctx.position(*k).unwrap(), mono, c.to_complex())
            })
            .collect();
        CompiledField { dim: ctx.dimension(), terms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        self.eval_into(x, &mut out);
        out
    }

    pub fn eval_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        for v in out.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        for (k, mono, c) in &self.terms {
            let mut m = *c;
            for &(i, e) in mono {
                m *= x[i].powu(e);
            }
            out[*k] += m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussRational;

    fn k(i: u32) -> ModeKey {
        ModeKey::index(i)
    }

    fn q(p: &[(u32, u32)]) -> MultiIndex {
        MultiIndex::from_pairs(p.iter().map(|&(i, e)| (k(i), e)))
    }

    fn g(n: i64) -> GaussRational {
        GaussRational::from_ints(n, 0)
    }

    #[test]
    fn lie_derivative_examples() {
        let ctx = TruncationContext::finite(2, 4);
        let d = VectorField::linear(ctx, &[(k(1), g(2)), (k(2), g(1))]).unwrap();
        let mut f = ScalarSeries::new(ctx);
        f.insert(q(&[(1, 1), (2, 1)]), g(1)).unwrap();
        let out = lie_derivative(&d, &f).unwrap();
        assert_eq!(out.get(&q(&[(1, 1), (2, 1)])), Some(&g(3)));
        assert_eq!(out.len(), 1);

        let mut x = VectorField::new(ctx);
        x.insert(k(1), q(&[(2, 2)]), g(1)).unwrap();
        let mut f = ScalarSeries::new(ctx);
        f.insert(q(&[(1, 1)]), g(1)).unwrap();
        let out = lie_derivative(&x, &f).unwrap();
        assert_eq!(out.get(&q(&[(2, 2)])), Some(&g(1)));
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn bracket_two_variable_oracle() {
        let ctx = TruncationContext::finite(2, 3);
        let mut x = VectorField::new(ctx);
        x.insert(k(2), q(&[(1, 1)]), g(1)).unwrap();
        let mut y = VectorField::new(ctx);
        y.insert(k(1), q(&[(2, 1)]), g(1)).unwrap();
        let b = bracket(&x, &y).unwrap();
        let mut want = VectorField::new(ctx);
        want.insert(k(1), q(&[(1, 1)]), g(1)).unwrap();
        want.insert(k(2), q(&[(2, 1)]), g(-1)).unwrap();
        assert_eq!(b, want);
    }

    #[test]
    fn bracket_with_linear_part_multiplies_by_divisor() {
        let ctx = TruncationContext::finite(3, 4);
        let lam = [(k(1), g(2)), (k(2), g(1)), (k(3), g(5))];
        let d = VectorField::linear(ctx, &lam).unwrap();
        assert!(bracket(&d, &d).unwrap().is_zero());
        let mut x = VectorField::new(ctx);
        x.insert(k(1), q(&[(2, 3), (3, 1)]), g(1)).unwrap();
        let b = bracket(&d, &x).unwrap();
        // λ·q - λ_1 = 3 + 5 - 2
        assert_eq!(b.get(k(1), &q(&[(2, 3), (3, 1)])), Some(&g(6)));
    }

    #[test]
    fn degree_projection_and_diagonal_split() {
        let ctx = TruncationContext::finite(4, 4);
        let mut x = VectorField::new(ctx);
        x.insert(k(1), q(&[(2, 2)]), g(1)).unwrap();
        x.insert(k(1), q(&[(1, 1), (3, 1), (4, 1)]), g(1)).unwrap();
        let p1 = x.project_degree(1);
        assert_eq!(p1.len(), 1);
        assert!(p1.get(k(1), &q(&[(2, 2)])).is_some());
        let (diag, out) = x.split_diagonal();
        assert!(diag.get(k(1), &q(&[(1, 1), (3, 1), (4, 1)])).is_some());
        assert!(out.get(k(1), &q(&[(2, 2)])).is_some());
        assert_eq!(diag.add(&out).unwrap(), x);
    }

    #[test]
    fn truncation_flag_records_dropped_terms() {
        let ctx = TruncationContext::finite(2, 2);
        let mut x = VectorField::new(ctx);
        x.insert(k(1), q(&[(2, 3)]), g(1)).unwrap();
        let b = bracket(&x, &x.clone()).unwrap();
        assert!(b.is_zero());
        let mut y = VectorField::new(ctx);
        y.insert(k(2), q(&[(1, 3)]), g(1)).unwrap();
        let b = bracket(&x, &y).unwrap();
        assert!(b.is_zero() && b.truncated());
        assert!(!x.truncated());
    }

    #[test]
    fn insert_rejects_inadmissible_terms() {
        let ctx = TruncationContext::lattice(2, 3);
        let mut x: VectorField<GaussRational> = VectorField::new(ctx);
        let a = ModeKey::lattice(1, 1);
        let b = ModeKey::lattice(2, 1);
        assert!(matches!(x.insert(a, MultiIndex::unit(b), g(1)), Err(Error::MomentumViolation(_))));
        assert!(x.insert(a, MultiIndex::zero(), g(1)).is_err());
        assert!(x.insert(ModeKey::lattice(3, 1), MultiIndex::unit(ModeKey::lattice(3, 1)), g(1)).is_err());
    }

    use crate::builders::{random_field, RandomFieldSpec};
    use proptest::prelude::*;

    fn rand3(seed: u64, lo: u32) -> VectorField<GaussRational> {
        let ctx = TruncationContext::finite(3, 5);
        let spec = RandomFieldSpec { terms: 5, min_order: lo, max_order: 5, max_num: 4, max_den: 3 };
        random_field(&ctx, seed, &spec, |_, _| true).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bracket_is_antisymmetric(a in any::<u64>(), b in any::<u64>()) {
            let (x, y) = (rand3(a, 0), rand3(b, 0));
            prop_assert_eq!(bracket(&x, &y).unwrap(), bracket(&y, &x).unwrap().neg());
        }

        #[test]
        fn truncated_jacobi(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
            let (x, y, z) = (rand3(a, 0), rand3(b, 1), rand3(c, 1));
            let t1 = bracket(&x, &bracket(&y, &z).unwrap()).unwrap();
            let t2 = bracket(&y, &bracket(&z, &x).unwrap()).unwrap();
            let t3 = bracket(&z, &bracket(&x, &y).unwrap()).unwrap();
            prop_assert!(t1.add(&t2).unwrap().add(&t3).unwrap().is_zero());
        }

        #[test]
        fn bracket_is_bilinear(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
            let (x, y, z) = (rand3(a, 0), rand3(b, 0), rand3(c, 0));
            let s = GaussRational::ratio(-3, 7);
            let lhs = bracket(&x.scale(&s).add(&y).unwrap(), &z).unwrap();
            let rhs = bracket(&x, &z).unwrap().scale(&s).add(&bracket(&y, &z).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
