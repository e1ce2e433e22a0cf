//! Resonance module: generators of `M_λ` and `Δ_λ \ M_λ`, ideal classes, `M*`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{scaling_degree, VectorField};
use crate::frequency::FrequencyModel;
use crate::index::{ModeKey, MultiIndex, SignedIndex, TruncationContext};
use crate::scalar::Scalar;

/// Ideal class of an exponent.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash, Serialize)]
pub enum Ideal {
    /// No generator divides `x^q`.
    J0,
    /// Exactly one generator factor fits.
    J1,
    /// Some product `x^{Q_i} x^{Q_j}` divides `x^q`.
    J2,
}

/// Generators and degree thresholds of the resonances inside a window.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceModule {
    pub q_generators: Vec<MultiIndex>,
    pub p_generators: BTreeMap<ModeKey, Vec<SignedIndex>>,
    /// `max |Q_i|`.
    pub m: u32,
    /// `max |P_j + e_k|`.
    pub m1: u32,
    /// `2M + M1`.
    pub m_star_bound: u32,
    /// Least `m` such that every resonant `(q, k)` with `|q| - 1 >= m` lies in `J2`.
    pub m_star_minimal: u32,
    /// Largest `|q|` scanned.
    pub window: u32,
    /// False when the last non-`J2` resonance sits at the top of the window.
    pub m_star_certified: bool,
    pub delta_equals_m: bool,
    /// Number of nonzero elements of `M_λ` seen.
    pub module_size: usize,
    /// Number of resonant pairs `(q, k)` seen, diagonal ones included.
    pub resonant_pairs: usize,
    momentum: bool,
}

/// All nonnegative multi-indices over `modes` with degree in `lo..=hi`,
/// shell by shell.
pub fn monomials(modes: &[ModeKey], lo: u32, hi: u32) -> Vec<MultiIndex> {
    fn rec(modes: &[ModeKey], i: usize, left: u32, cur: &mut Vec<(ModeKey, u32)>, out: &mut Vec<MultiIndex>) {
        if left == 0 {
            out.push(MultiIndex::from_pairs(cur.iter().copied()));
            return;
        }
        if i == modes.len() {
            return;
        }
        for e in (0..=left).rev() {
            if e > 0 {
                cur.push((modes[i], e));
            }
            rec(modes, i + 1, left - e, cur, out);
            if e > 0 {
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    for d in lo..=hi {
        let mut shell = Vec::new();
        rec(modes, 0, d, &mut Vec::new(), &mut shell);
        shell.sort();
        out.extend(shell);
    }
    out
}

/// Number of ways to write `q` as `Σ n_i g_i`.
fn count_factorizations(q: &MultiIndex, gens: &[MultiIndex], cap: usize) -> usize {
    fn rec(q: &MultiIndex, gens: &[MultiIndex], cap: usize) -> usize {
        if q.is_zero() {
            return 1;
        }
        let Some((g, rest)) = gens.split_first() else {
            return 0;
        };
        let mut total = rec(q, rest, cap);
        let mut cur = q.clone();
        while let Some(next) = cur.checked_sub(g) {
            total += rec(&next, rest, cap);
            if total >= cap {
                return total;
            }
            cur = next;
        }
        total
    }
    rec(q, gens, cap)
}

/// Scan the window `1 <= |q| <= D + 1` for resonances and extract generators.
pub fn enumerate_resonance(ctx: &TruncationContext, model: &FrequencyModel) -> Result<ResonanceModule> {
    ctx.validate()?;
    model.check_context(ctx)?;
    let modes = ctx.modes();
    let window = ctx.degree_cutoff + 1;
    let mut by_key: HashMap<&[i128], Vec<ModeKey>> = HashMap::new();
    for &k in &modes {
        by_key.entry(model.lambda_key(k)).or_default().push(k);
    }
    let monos = monomials(&modes, 1, window);
    let found: Vec<(bool, Vec<ModeKey>)> = monos
        .par_iter()
        .map(|q| {
            let key = model.dot_key(q);
            let in_m = key.iter().all(|&x| x == 0) && (!ctx.momentum || q.raw_momentum() == 0);
            let ks = by_key
                .get(key.as_slice())
                .map(|v| v.iter().copied().filter(|&k| ctx.conserves(q, k)).collect())
                .unwrap_or_default();
            (in_m, ks)
        })
        .collect();

    let mut module_elems = Vec::new();
    let mut pairs: Vec<(MultiIndex, ModeKey)> = Vec::new();
    for (q, (in_m, ks)) in monos.into_iter().zip(found) {
        for k in ks {
            pairs.push((q.clone(), k));
        }
        if in_m {
            module_elems.push(q);
        }
    }

    // monomials come shell by shell, so every proper divisor is seen first
    let mut q_generators: Vec<MultiIndex> = Vec::new();
    for q in &module_elems {
        if !q_generators.iter().any(|g| g.le(q)) {
            q_generators.push(q.clone());
        }
    }
    for q in &module_elems {
        if count_factorizations(q, &q_generators, 2) != 1 {
            return Err(Error::UniqueFactorizationViolation(q.to_string()));
        }
    }

    let in_module = |q: &MultiIndex| -> bool {
        q.is_zero() || (model.dot_key(q).iter().all(|&x| x == 0) && (!ctx.momentum || q.raw_momentum() == 0))
    };

    let mut p_generators: BTreeMap<ModeKey, Vec<SignedIndex>> = BTreeMap::new();
    let mut p_tops: BTreeMap<ModeKey, Vec<MultiIndex>> = BTreeMap::new();
    for (q, k) in &pairs {
        if q.get(*k) == 0 && !q_generators.iter().any(|g| g.le(q)) {
            p_generators.entry(*k).or_default().push(q.minus_unit(*k));
            p_tops.entry(*k).or_default().push(q.clone());
        }
    }
    for (q, k) in &pairs {
        if q.get(*k) > 0 {
            continue;
        }
        let tops = p_tops.get(k).map(|v| v.as_slice()).unwrap_or(&[]);
        let n = tops.iter().filter(|t| q.checked_sub(t).is_some_and(|rest| in_module(&rest))).count();
        if n != 1 {
            return Err(Error::UniqueFactorizationViolation(q.minus_unit(*k).to_string()));
        }
    }

    for g in &q_generators {
        if g.degree() >= window {
            return Err(Error::CutoffTooSmall(g.to_string()));
        }
    }
    for (k, tops) in &p_tops {
        for t in tops {
            if t.degree() >= window {
                return Err(Error::CutoffTooSmall(t.minus_unit(*k).to_string()));
            }
        }
    }

    let m = q_generators.iter().map(|g| g.degree()).max().unwrap_or(0);
    let m1 = p_tops.values().flatten().map(|t| t.degree()).max().unwrap_or(0);
    let mut module = ResonanceModule {
        q_generators,
        p_generators,
        m,
        m1,
        m_star_bound: 2 * m + m1,
        m_star_minimal: 0,
        window,
        m_star_certified: true,
        delta_equals_m: false,
        module_size: module_elems.len(),
        resonant_pairs: pairs.len(),
        momentum: ctx.momentum,
    };
    let worst = pairs
        .iter()
        .filter(|(q, _)| module.classify(q) != Ideal::J2)
        .map(|(q, _)| scaling_degree(q))
        .max()
        .unwrap_or(0);
    module.m_star_minimal = worst + 1;
    module.m_star_certified = worst < ctx.degree_cutoff;
    module.delta_equals_m = module.p_generators.is_empty();
    Ok(module)
}

impl ResonanceModule {
    /// `J2` if `q ≥ Q_i + Q_j` for some `i, j`; `J1` if `q ≥ Q_i`; else `J0`.
    pub fn classify(&self, q: &MultiIndex) -> Ideal {
        let mut hit = false;
        for g in &self.q_generators {
            if let Some(rest) = q.checked_sub(g) {
                hit = true;
                if self.q_generators.iter().any(|h| h.le(&rest)) {
                    return Ideal::J2;
                }
            }
        }
        if hit {
            Ideal::J1
        } else {
            Ideal::J0
        }
    }

    /// Whether `q` is a nonnegative combination of the generators.
    pub fn in_module(&self, q: &MultiIndex) -> bool {
        count_factorizations(q, &self.q_generators, 1) >= 1
    }

    /// Membership of a signed vector in `Δ_λ`, decided from the generators alone.
    pub fn contains_delta(&self, p: &SignedIndex) -> bool {
        if let Some(q) = p.to_nonneg() {
            return self.in_module(&q);
        }
        let negs: Vec<_> = p.entries().iter().filter(|e| e.1 < 0).collect();
        let [(k, -1)] = negs.as_slice() else {
            return false;
        };
        let Some(gens) = self.p_generators.get(k) else {
            return false;
        };
        gens.iter().any(|g| p.add(&g.neg()).to_nonneg().is_some_and(|rest| self.in_module(&rest)))
    }

    /// Whether `x^q ∂_k` is resonant according to the generators.
    pub fn is_resonant_pair(&self, q: &MultiIndex, k: ModeKey) -> bool {
        if self.momentum && q.raw_momentum() != k.momentum() {
            return false;
        }
        self.contains_delta(&q.minus_unit(k))
    }

    /// `(I0, I1, I2)` parts of `x`.
    pub fn split_ideals<C: Scalar>(&self, x: &VectorField<C>) -> [VectorField<C>; 3] {
        [
            x.project_set(|_, q| self.classify(q) == Ideal::J0),
            x.project_set(|_, q| self.classify(q) == Ideal::J1),
            x.project_set(|_, q| self.classify(q) == Ideal::J2),
        ]
    }

    pub fn project_ideal<C: Scalar>(&self, x: &VectorField<C>, ideal: Ideal) -> VectorField<C> {
        x.project_set(|_, q| self.classify(q) == ideal)
    }

    /// Degree threshold one above `m_star_minimal`, counted in `|q|`.
    pub fn zero_order_threshold(&self) -> u32 {
        self.m_star_minimal + 1
    }
}

/// Free-function form of [`ResonanceModule::classify`].
pub fn classify(q: &MultiIndex, module: &ResonanceModule) -> Ideal {
    module.classify(q)
}

/// Free-function form of [`ResonanceModule::split_ideals`].
pub fn split_ideals<C: Scalar>(x: &VectorField<C>, module: &ResonanceModule) -> [VectorField<C>; 3] {
    module.split_ideals(x)
}
