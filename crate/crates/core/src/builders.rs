//! Ready-made models: the six-variable and four-variable examples, the NLS
//! lattice, and its real-exponent variant. Plus seeded random fields.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::frequency::{coord, FrequencyModel, Reference, Symbol};
use crate::index::{ModeKey, MultiIndex, TruncationContext};
use crate::resonance::monomials;
use crate::scalar::{int, GaussRational, Scalar};

fn real(n: i64) -> GaussRational {
    GaussRational::from_ints(n, 0)
}

/// Nearest-integer reference values, used by the separation premise.
fn nearest_integer_reference(model: &FrequencyModel) -> Reference {
    let m = model
        .modes()
        .map(|k| {
            let v = model.lambda_float(k);
            (k, num_complex::Complex64::new(v.re.round(), v.im.round()))
        })
        .collect();
    Reference::Explicit(m)
}

/// `λ = (2, 1, ζ₁, -ζ₁, ζ₂, -ζ₂)` over the symbols `1, ζ₁, ζ₂`.
pub fn dim6_model(zeta1: f64, zeta2: f64) -> Result<FrequencyModel> {
    let symbols = vec![Symbol::exact("1", int(1)), Symbol::new("zeta1", zeta1), Symbol::new("zeta2", zeta2)];
    let rows = [(0, 2), (0, 1), (1, 1), (1, -1), (2, 1), (2, -1)];
    let lambda =
        rows.iter().enumerate().map(|(i, &(s, c))| (ModeKey::index(i as u32 + 1), coord(3, s, real(c)))).collect();
    let m = FrequencyModel::new(symbols, lambda)?;
    let r = nearest_integer_reference(&m);
    Ok(m.with_reference(r))
}

/// `λ = (2, 1, ζ, -ζ)`.
pub fn intro4_model(zeta: f64) -> Result<FrequencyModel> {
    let symbols = vec![Symbol::exact("1", int(1)), Symbol::new("zeta", zeta)];
    let rows = [(0, 2), (0, 1), (1, 1), (1, -1)];
    let lambda =
        rows.iter().enumerate().map(|(i, &(s, c))| (ModeKey::index(i as u32 + 1), coord(2, s, real(c)))).collect();
    let m = FrequencyModel::new(symbols, lambda)?;
    let r = nearest_integer_reference(&m);
    Ok(m.with_reference(r))
}

fn small_rational(rng: &mut ChaCha8Rng) -> GaussRational {
    let mut n = 0;
    while n == 0 {
        n = rng.gen_range(-3i64..=3);
    }
    GaussRational::ratio(n, rng.gen_range(1i64..=4))
}

/// `D(λ)` plus, for a nonzero seed, diagonal resonant terms `x^{Q_i} x_k ∂_k`
/// and random terms of scaling degree `4..=D` (no resonant term of low degree
/// other than the diagonal ones).
///
/// Every nonzero seed plants at least one diagonal term per generator with
/// `k` in `{1, 2, 3, 5}`, and two terms supported on the face
/// `{x4 = x6 = 0}` of `Σ` pointing along `∂4` and `∂6`. Without those the
/// face can stay invariant with linear dynamics already, which makes the
/// conjugacy trivially exact there. About half of the remaining random terms
/// only involve `x1, x2, x3, x5`.
pub fn build_example_dim6(
    zeta1: f64,
    zeta2: f64,
    seed: u64,
    degree_cutoff: u32,
) -> Result<(VectorField<GaussRational>, FrequencyModel)> {
    let model = dim6_model(zeta1, zeta2)?;
    let ctx = TruncationContext::finite(6, degree_cutoff);
    let mut w = VectorField::linear(ctx, &model.linear_terms(&ctx)?)?;
    if seed == 0 {
        return Ok((w, model));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = |i: u32| ModeKey::index(i);
    let face = [x(1), x(2), x(3), x(5)];
    let gens = [MultiIndex::from_pairs([(x(3), 1), (x(4), 1)]), MultiIndex::from_pairs([(x(5), 1), (x(6), 1)])];
    if degree_cutoff >= 2 {
        for g in &gens {
            let forced = *face.choose(&mut rng).unwrap();
            for k in 1..=6 {
                if x(k) == forced || rng.gen_bool(0.4) {
                    w.insert(x(k), g.add_unit(x(k)), small_rational(&mut rng))?;
                }
            }
        }
    }
    if degree_cutoff >= 4 {
        let modes = ctx.modes();
        for k in [x(4), x(6)] {
            let d = rng.gen_range(4..=degree_cutoff);
            let q = random_monomial(&mut rng, &face, d + 1);
            w.insert(k, q, small_rational(&mut rng))?;
        }
        let count = rng.gen_range(2..=8);
        for _ in 0..count {
            let d = rng.gen_range(4..=degree_cutoff);
            let pool: &[ModeKey] = if rng.gen_bool(0.5) { &face } else { &modes };
            let q = random_monomial(&mut rng, pool, d + 1);
            let k = *modes.choose(&mut rng).unwrap();
            w.insert(k, q, small_rational(&mut rng))?;
        }
    }
    Ok((w, model))
}

fn random_monomial(rng: &mut ChaCha8Rng, modes: &[ModeKey], degree: u32) -> MultiIndex {
    let mut q = MultiIndex::zero();
    for _ in 0..degree {
        q = q.add_unit(*modes.choose(rng).unwrap());
    }
    q
}

/// Default potential: `V_0 = 6/5`, `V_j = 1/(N + j + 4)` otherwise.
pub fn default_potential(n: u32) -> BTreeMap<i32, BigRational> {
    let n = n as i32;
    (-n..=n)
        .map(|j| {
            let v = if j == 0 {
                BigRational::new(6.into(), 5.into())
            } else {
                BigRational::new(1.into(), (n + j + 4).into())
            };
            (j, v)
        })
        .collect()
}

/// How each lattice index `j` rotates or stretches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// `λ_(j,σ) = iσ ω_j`.
    Elliptic,
    /// `λ_(j,σ) = σ ω_j`.
    Hyperbolic,
}

/// Lattice model with symbols `ω_j = j² + V_j` and per-index kind.
pub fn lattice_model(n: u32, v: &BTreeMap<i32, BigRational>, kinds: &dyn Fn(i32) -> Kind) -> Result<FrequencyModel> {
    let n = n as i32;
    let js: Vec<i32> = (-n..=n).collect();
    let mut symbols = Vec::new();
    for &j in &js {
        let vj = v.get(&j).ok_or_else(|| Error::Input(format!("potential missing for j = {j}")))?;
        symbols.push(Symbol::exact(format!("w{j}"), int((j * j) as i64) + vj));
    }
    let mut lambda = BTreeMap::new();
    let mut phases = BTreeMap::new();
    for (i, &j) in js.iter().enumerate() {
        for s in [-1i8, 1] {
            let c = match kinds(j) {
                Kind::Elliptic => GaussRational::from_ints(0, s as i64),
                Kind::Hyperbolic => GaussRational::from_ints(s as i64, 0),
            };
            let k = ModeKey::lattice(j, s);
            lambda.insert(k, coord(js.len(), i, c));
            let phi = match kinds(j) {
                Kind::Elliptic => s as f64 * std::f64::consts::FRAC_PI_2,
                Kind::Hyperbolic => {
                    if s > 0 {
                        0.0
                    } else {
                        std::f64::consts::PI
                    }
                }
            };
            phases.insert(k, phi);
        }
    }
    Ok(FrequencyModel::new(symbols, lambda)?
        .with_reference(Reference::Growth { alpha: 2.0, phases })
        .with_separation(2.0))
}

fn multinomial(total: u32, parts: impl Iterator<Item = u32>) -> i64 {
    let f = |n: u32| (1..=n as i64).product::<i64>();
    parts.fold(f(total), |acc, e| acc / f(e))
}

/// NLS-type lattice: `λ_(j,σ) = iσ(j² + V_j)` and the nonlinearity
/// `iσ · multinomial(p+1; q_σ) · multinomial(p; q_{-σ})` on
/// momentum-conserving `q` with `|q_σ| = p + 1`, `|q_{-σ}| = p`.
pub fn build_example_nls(
    p: u32,
    v: &BTreeMap<i32, BigRational>,
    n: u32,
    degree_cutoff: u32,
) -> Result<(VectorField<GaussRational>, FrequencyModel)> {
    if p < 1 || n < 1 {
        return Err(Error::Input("nls needs p >= 1 and N >= 1".into()));
    }
    let model = lattice_model(n, v, &|_| Kind::Elliptic)?;
    let ctx = TruncationContext::lattice(n, degree_cutoff);
    let mut w = VectorField::linear(ctx, &model.linear_terms(&ctx)?)?;
    if 2 * p > degree_cutoff {
        return Err(Error::Input(format!("degree cutoff {degree_cutoff} below the nonlinearity degree {}", 2 * p)));
    }
    let modes = ctx.modes();
    for s in [1i8, -1] {
        let same: Vec<ModeKey> = modes.iter().copied().filter(|m| m.sigma() == s).collect();
        let other: Vec<ModeKey> = modes.iter().copied().filter(|m| m.sigma() == -s).collect();
        let qa = monomials(&same, p + 1, p + 1);
        let qb = monomials(&other, p, p);
        for a in &qa {
            for b in &qb {
                let q = a.add(b);
                let mom = q.raw_momentum();
                // target (j, s) has momentum s·j
                let j = mom * s as i64;
                if j.unsigned_abs() > n as u64 {
                    continue;
                }
                let k = ModeKey::lattice(j as i32, s);
                let c = multinomial(p + 1, a.entries().iter().map(|e| e.1))
                    * multinomial(p, b.entries().iter().map(|e| e.1));
                w.insert(k, q, GaussRational::from_ints(0, s as i64 * c))?;
            }
        }
    }
    Ok((w, model))
}

/// Real-exponent lattice (or mixed, per `kinds`) with a seeded
/// momentum-preserving perturbation of scaling degree `2..=D`.
pub fn build_example_hyperbolic(
    v: &BTreeMap<i32, BigRational>,
    n: u32,
    degree_cutoff: u32,
    seed: u64,
    kinds: &dyn Fn(i32) -> Kind,
) -> Result<(VectorField<GaussRational>, FrequencyModel)> {
    let model = lattice_model(n, v, kinds)?;
    let ctx = TruncationContext::lattice(n, degree_cutoff);
    let mut w = VectorField::linear(ctx, &model.linear_terms(&ctx)?)?;
    if seed == 0 || degree_cutoff < 2 {
        return Ok((w, model));
    }
    let spec = RandomFieldSpec { terms: 8, min_order: 2, max_order: degree_cutoff, max_num: 3, max_den: 4 };
    let extra = random_field(&ctx, seed, &spec, |_, _| true)?;
    w = w.add(&extra)?;
    Ok((w, model))
}

/// Shape of a random field.
#[derive(Clone, Debug)]
pub struct RandomFieldSpec {
    pub terms: usize,
    /// Scaling degree range `min_order..=max_order`.
    pub min_order: u32,
    pub max_order: u32,
    pub max_num: i64,
    pub max_den: i64,
}

/// Seeded random field with exact coefficients; terms are drawn until
/// `spec.terms` distinct keys pass `accept` and the momentum rule.
pub fn random_field(
    ctx: &TruncationContext,
    seed: u64,
    spec: &RandomFieldSpec,
    accept: impl Fn(ModeKey, &MultiIndex) -> bool,
) -> Result<VectorField<GaussRational>> {
    if spec.min_order > spec.max_order || spec.max_order > ctx.degree_cutoff {
        return Err(Error::Input("bad order range for random field".into()));
    }
    let modes = ctx.modes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = VectorField::new(*ctx);
    let mut seen = BTreeSet::new();
    let mut attempts = 0usize;
    while seen.len() < spec.terms && attempts < 200 * spec.terms.max(1) {
        attempts += 1;
        let d = rng.gen_range(spec.min_order..=spec.max_order);
        let q = random_monomial(&mut rng, &modes, d + 1);
        let k = if ctx.momentum {
            let ks: Vec<ModeKey> = modes.iter().copied().filter(|&k| ctx.conserves(&q, k)).collect();
            match ks.choose(&mut rng) {
                Some(k) => *k,
                None => continue,
            }
        } else {
            *modes.choose(&mut rng).unwrap()
        };
        if !accept(k, &q) || !seen.insert((k, q.clone())) {
            continue;
        }
        let mut num = 0;
        while num == 0 {
            num = rng.gen_range(-spec.max_num..=spec.max_num);
        }
        let den = rng.gen_range(1..=spec.max_den);
        let c = if rng.gen_bool(0.25) {
            GaussRational::from_ints(num, rng.gen_range(-2..=2)).div(&GaussRational::from_ints(den, 0)).unwrap()
        } else {
            GaussRational::ratio(num, den)
        };
        out.insert(k, q, c)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nls_cubic_coefficient() {
        let (w, _) = build_example_nls(1, &default_potential(1), 1, 2).unwrap();
        let q = MultiIndex::from_pairs([
            (ModeKey::lattice(1, 1), 1),
            (ModeKey::lattice(-1, 1), 1),
            (ModeKey::lattice(0, -1), 1),
        ]);
        // (z²w)_0 with z = z_1 e^{iθ} + z_{-1} e^{-iθ}: the cross term 2 z_1 z_{-1} w_0
        assert_eq!(w.get(ModeKey::lattice(0, 1), &q), Some(&GaussRational::from_ints(0, 2)));
    }

    #[test]
    fn zero_seed_is_linear() {
        let (w, m) = build_example_dim6(2f64.sqrt(), 3f64.sqrt(), 0, 6).unwrap();
        let ctx = *w.ctx();
        assert_eq!(w, VectorField::linear(ctx, &m.linear_terms(&ctx).unwrap()).unwrap());
    }

    #[test]
    fn multinomials() {
        assert_eq!(multinomial(3, [1, 2].into_iter()), 3);
        assert_eq!(multinomial(2, [1, 1].into_iter()), 2);
    }
}
