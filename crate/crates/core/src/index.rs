//! Mode keys, multi-indices, momentum, weights and the rearrangement `nhat`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// A coordinate direction.
///
/// Lattice modes carry `(j, sigma)`; plain modes of a finite-dimensional
/// system carry an index `i >= 1` and no momentum.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ModeKey {
    j: i32,
    // +1 / -1 for lattice modes, 0 for plain indices
    s: i8,
}

impl ModeKey {
    pub fn lattice(j: i32, sigma: i8) -> Self {
        assert!(sigma == 1 || sigma == -1, "sigma must be +1 or -1");
        ModeKey { j, s: sigma }
    }

    pub fn index(i: u32) -> Self {
        assert!(i >= 1, "plain indices start at 1");
        ModeKey { j: i as i32, s: 0 }
    }

    pub fn j(&self) -> i32 {
        self.j
    }

    /// Sign of the mode; plain indices report `+1`.
    pub fn sigma(&self) -> i8 {
        if self.s == 0 {
            1
        } else {
            self.s
        }
    }

    pub fn is_plain(&self) -> bool {
        self.s == 0
    }

    /// `<k> = max(|j|, 1)`.
    pub fn weight(&self) -> u32 {
        self.j.unsigned_abs().max(1)
    }

    /// `sigma * j` for lattice modes, 0 for plain ones.
    pub fn momentum(&self) -> i64 {
        if self.s == 0 {
            0
        } else {
            self.s as i64 * self.j as i64
        }
    }

    /// The mode with the opposite sign (lattice only).
    pub fn conjugate(&self) -> Self {
        ModeKey { j: self.j, s: -self.s }
    }
}

impl Ord for ModeKey {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.j.unsigned_abs(), self.j, self.s).cmp(&(other.j.unsigned_abs(), other.j, other.s))
    }
}

impl PartialOrd for ModeKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ModeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.s {
            0 => write!(f, "{}", self.j),
            1 => write!(f, "{}+", self.j),
            _ => write!(f, "{}-", self.j),
        }
    }
}

impl FromStr for ModeKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Input(format!("bad mode key '{s}'"));
        if let Some(body) = s.strip_suffix('+') {
            Ok(ModeKey::lattice(body.parse().map_err(|_| bad())?, 1))
        } else if let Some(body) = s.strip_suffix('-') {
            Ok(ModeKey::lattice(body.parse().map_err(|_| bad())?, -1))
        } else {
            let i: u32 = s.parse().map_err(|_| bad())?;
            if i == 0 {
                return Err(bad());
            }
            Ok(ModeKey::index(i))
        }
    }
}

/// Nonnegative, finitely supported exponent vector.
///
/// Entries are kept sorted by [`ModeKey`] with zeros removed, so derived
/// equality and ordering are canonical.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct MultiIndex {
    entries: Vec<(ModeKey, u32)>,
}

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex { entries: Vec::new() }
    }

    pub fn unit(k: ModeKey) -> Self {
        MultiIndex { entries: vec![(k, 1)] }
    }

    /// Build from arbitrary pairs; repeated keys are summed.
    pub fn from_pairs<I: IntoIterator<Item = (ModeKey, u32)>>(pairs: I) -> Self {
        let mut entries: Vec<(ModeKey, u32)> = pairs.into_iter().filter(|e| e.1 > 0).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(ModeKey, u32)> = Vec::with_capacity(entries.len());
        for (k, e) in entries {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += e,
                _ => out.push((k, e)),
            }
        }
        MultiIndex { entries: out }
    }

    /// Build from signed pairs, rejecting negative entries.
    pub fn try_from_signed<I: IntoIterator<Item = (ModeKey, i64)>>(pairs: I) -> Result<Self> {
        let mut v = Vec::new();
        for (k, e) in pairs {
            if e < 0 {
                return Err(Error::Input(format!("negative exponent {e} at mode {k}")));
            }
            v.push((k, e as u32));
        }
        Ok(Self::from_pairs(v))
    }

    pub fn entries(&self) -> &[(ModeKey, u32)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn get(&self, k: ModeKey) -> u32 {
        match self.entries.binary_search_by(|e| e.0.cmp(&k)) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(x), Some(y)) => match x.0.cmp(&y.0) {
                    Ordering::Less => out.push(*a.next().unwrap()),
                    Ordering::Greater => out.push(*b.next().unwrap()),
                    Ordering::Equal => {
                        out.push((x.0, x.1 + y.1));
                        a.next();
                        b.next();
                    }
                },
                (Some(_), None) => out.push(*a.next().unwrap()),
                (None, Some(_)) => out.push(*b.next().unwrap()),
                (None, None) => break,
            }
        }
        MultiIndex { entries: out }
    }

    pub fn add_unit(&self, k: ModeKey) -> MultiIndex {
        self.add(&MultiIndex::unit(k))
    }

    /// `self - e_k` if the entry at `k` is positive.
    pub fn sub_unit(&self, k: ModeKey) -> Option<MultiIndex> {
        let i = self.entries.binary_search_by(|e| e.0.cmp(&k)).ok()?;
        let mut entries = self.entries.clone();
        if entries[i].1 == 1 {
            entries.remove(i);
        } else {
            entries[i].1 -= 1;
        }
        Some(MultiIndex { entries })
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.entries.iter().all(|&(k, e)| other.get(k) >= e)
    }

    /// `self - other` when it stays nonnegative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        let entries = self.entries.iter().map(|&(k, e)| (k, e - other.get(k))).filter(|e| e.1 > 0).collect();
        Some(MultiIndex { entries })
    }

    pub fn scale(&self, n: u32) -> MultiIndex {
        MultiIndex::from_pairs(self.entries.iter().map(|&(k, e)| (k, e * n)))
    }

    pub fn to_signed(&self) -> SignedIndex {
        SignedIndex { entries: self.entries.iter().map(|&(k, e)| (k, e as i32)).collect() }
    }

    /// `self - e_k` as a signed index.
    pub fn minus_unit(&self, k: ModeKey) -> SignedIndex {
        self.to_signed().add(&SignedIndex::unit(k).neg())
    }

    /// Momentum computed regardless of the context flag.
    pub fn raw_momentum(&self) -> i64 {
        self.entries.iter().map(|&(k, e)| k.momentum() * e as i64).sum()
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeKey> + '_ {
        self.entries.iter().map(|e| e.0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "-");
        }
        for (i, (k, e)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{k}:{e}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let signed: SignedIndex = s.parse()?;
        MultiIndex::try_from_signed(signed.entries.iter().map(|&(k, e)| (k, e as i64)))
    }
}

/// Signed, finitely supported integer vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct SignedIndex {
    entries: Vec<(ModeKey, i32)>,
}

impl SignedIndex {
    pub fn zero() -> Self {
        SignedIndex { entries: Vec::new() }
    }

    pub fn unit(k: ModeKey) -> Self {
        SignedIndex { entries: vec![(k, 1)] }
    }

    pub fn from_pairs<I: IntoIterator<Item = (ModeKey, i32)>>(pairs: I) -> Self {
        let mut entries: Vec<(ModeKey, i32)> = pairs.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(ModeKey, i32)> = Vec::with_capacity(entries.len());
        for (k, e) in entries {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += e,
                _ => out.push((k, e)),
            }
        }
        out.retain(|e| e.1 != 0);
        SignedIndex { entries: out }
    }

    pub fn entries(&self) -> &[(ModeKey, i32)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, k: ModeKey) -> i32 {
        match self.entries.binary_search_by(|e| e.0.cmp(&k)) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    pub fn add(&self, other: &SignedIndex) -> SignedIndex {
        SignedIndex::from_pairs(self.entries.iter().chain(other.entries.iter()).copied())
    }

    pub fn neg(&self) -> SignedIndex {
        SignedIndex { entries: self.entries.iter().map(|&(k, e)| (k, -e)).collect() }
    }

    /// `Σ |p_k|`.
    pub fn l1(&self) -> u32 {
        self.entries.iter().map(|e| e.1.unsigned_abs()).sum()
    }

    pub fn raw_momentum(&self) -> i64 {
        self.entries.iter().map(|&(k, e)| k.momentum() * e as i64).sum()
    }

    /// The nonnegative index, if every entry is `>= 0`.
    pub fn to_nonneg(&self) -> Option<MultiIndex> {
        if self.entries.iter().any(|e| e.1 < 0) {
            return None;
        }
        Some(MultiIndex { entries: self.entries.iter().map(|&(k, e)| (k, e as u32)).collect() })
    }

    /// Directions `k` with `self + e_k >= 0`.
    pub fn shift_directions(&self, modes: &[ModeKey]) -> Vec<ModeKey> {
        let neg: Vec<_> = self.entries.iter().filter(|e| e.1 < 0).collect();
        match neg.as_slice() {
            [] => modes.to_vec(),
            [(k, -1)] => vec![*k],
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for SignedIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "-");
        }
        for (i, (k, e)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{k}:{e}")?;
        }
        Ok(())
    }
}

impl FromStr for SignedIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" || s.is_empty() {
            return Ok(SignedIndex::zero());
        }
        let mut pairs = Vec::new();
        for tok in s.split_whitespace() {
            let (k, e) = tok.rsplit_once(':').ok_or_else(|| Error::Input(format!("bad exponent pair '{tok}'")))?;
            let e: i32 = e.parse().map_err(|_| Error::Input(format!("bad exponent in '{tok}'")))?;
            pairs.push((k.parse()?, e));
        }
        Ok(SignedIndex::from_pairs(pairs))
    }
}

/// The admitted set of modes.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum ModeSet {
    /// Plain indices `1..=n`.
    Finite(u32),
    /// Lattice modes `(j, ±)` with `|j| <= cutoff`.
    Lattice(u32),
}

/// Truncation window shared by all series and fields of a computation.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TruncationContext {
    pub modes: ModeSet,
    /// Largest scaling degree `|q| - 1` kept in a vector field.
    pub degree_cutoff: u32,
    pub theta: f64,
    pub momentum: bool,
    /// Float-mode zero tolerance.
    pub zero_tol: f64,
}

impl TruncationContext {
    pub fn finite(n: u32, degree_cutoff: u32) -> Self {
        TruncationContext { modes: ModeSet::Finite(n), degree_cutoff, theta: 0.5, momentum: false, zero_tol: 1e-12 }
    }

    pub fn lattice(cutoff: u32, degree_cutoff: u32) -> Self {
        TruncationContext {
            modes: ModeSet::Lattice(cutoff),
            degree_cutoff,
            theta: 0.5,
            momentum: true,
            zero_tol: 1e-12,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_momentum(mut self, on: bool) -> Self {
        self.momentum = on;
        self
    }

    pub fn with_zero_tol(mut self, tol: f64) -> Self {
        self.zero_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree_cutoff < 1 {
            return Err(Error::Input("degree cutoff must be at least 1".into()));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Input(format!("theta must lie in (0,1), got {}", self.theta)));
        }
        if let ModeSet::Finite(0) = self.modes {
            return Err(Error::Input("finite dimension must be at least 1".into()));
        }
        if self.momentum && matches!(self.modes, ModeSet::Finite(_)) {
            return Err(Error::Input("momentum needs lattice modes".into()));
        }
        Ok(())
    }

    pub fn mode_cutoff(&self) -> u32 {
        match self.modes {
            ModeSet::Finite(n) | ModeSet::Lattice(n) => n,
        }
    }

    /// All admitted modes in canonical order.
    pub fn modes(&self) -> Vec<ModeKey> {
        let mut v = match self.modes {
            ModeSet::Finite(n) => (1..=n).map(ModeKey::index).collect::<Vec<_>>(),
            ModeSet::Lattice(n) => {
                let n = n as i32;
                (-n..=n).flat_map(|j| [ModeKey::lattice(j, 1), ModeKey::lattice(j, -1)]).collect()
            }
        };
        v.sort();
        v
    }

    pub fn dimension(&self) -> usize {
        match self.modes {
            ModeSet::Finite(n) => n as usize,
            ModeSet::Lattice(n) => 2 * (2 * n as usize + 1),
        }
    }

    pub fn contains(&self, k: ModeKey) -> bool {
        match self.modes {
            ModeSet::Finite(n) => k.is_plain() && (k.j() as u32) <= n && k.j() >= 1,
            ModeSet::Lattice(n) => !k.is_plain() && k.j().unsigned_abs() <= n,
        }
    }

    /// Position of `k` in [`TruncationContext::modes`].
    pub fn position(&self, k: ModeKey) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        match self.modes {
            ModeSet::Finite(_) => Some(k.j() as usize - 1),
            ModeSet::Lattice(_) => {
                let a = k.j().unsigned_abs() as usize;
                let base = if a == 0 { 0 } else { 2 + 4 * (a - 1) };
                // within |j| = a: (-a,-), (-a,+), (a,-), (a,+)
                let off = if a == 0 {
                    usize::from(k.sigma() == 1)
                } else {
                    2 * usize::from(k.j() > 0) + usize::from(k.sigma() == 1)
                };
                Some(base + off)
            }
        }
    }

    /// Momentum of a multi-index; an error when momentum is disabled.
    pub fn momentum(&self, q: &SignedIndex) -> Result<i64> {
        if !self.momentum {
            return Err(Error::MomentumDisabled);
        }
        Ok(q.raw_momentum())
    }

    /// Whether `x^q ∂_k` is admissible under the momentum rule.
    pub fn conserves(&self, q: &MultiIndex, k: ModeKey) -> bool {
        !self.momentum || q.raw_momentum() == k.momentum()
    }

    pub fn supports(&self, q: &MultiIndex) -> bool {
        q.modes().all(|k| self.contains(k))
    }
}

/// `Σ q_k`.
pub fn degree(q: &MultiIndex) -> u32 {
    q.degree()
}

/// Decreasing list of mode weights of `v`, counted with multiplicity.
pub fn nhat(v: &MultiIndex) -> Result<Vec<u32>> {
    let d = v.degree();
    if d < 2 {
        return Err(Error::DegreeTooSmall { need: 2, got: d });
    }
    let mut out: Vec<u32> =
        v.entries().iter().flat_map(|&(k, e)| std::iter::repeat(k.weight()).take(e as usize)).collect();
    out.sort_unstable_by(|a, b| b.cmp(a));
    Ok(out)
}

/// `Σ_h <h>^θ q_h - <k>^θ`.
pub fn weight_excess(q: &MultiIndex, k: ModeKey, theta: f64) -> f64 {
    let s: f64 = q.entries().iter().map(|&(h, e)| (h.weight() as f64).powf(theta) * e as f64).sum();
    s - (k.weight() as f64).powf(theta)
}

/// `c^{(k)}_{r,s}(q) = r^{|q|-1} (<k> / Π <h>^{q_h})² exp(-s (Σ <h>^θ q_h - <k>^θ))`.
pub fn weight_c(q: &MultiIndex, k: ModeKey, r: f64, s: f64, theta: f64) -> Result<f64> {
    let d = q.degree();
    if d == 0 {
        return Err(Error::DegreeTooSmall { need: 1, got: 0 });
    }
    let log_prod: f64 = q.entries().iter().map(|&(h, e)| e as f64 * (h.weight() as f64).ln()).sum();
    let log_ratio = 2.0 * ((k.weight() as f64).ln() - log_prod);
    Ok(r.powi(d as i32 - 1) * (log_ratio - s * weight_excess(q, k, theta)).exp())
}

/// `Σ_h <h>^θ q_h + <k>^θ - 2 n̂₁^θ - (2 - 2^θ) Σ_{l≥3} n̂_l^θ` with `n̂ = nhat(q + e_k)`.
/// Nonnegative on momentum-conserving pairs.
pub fn rearrangement_gap(q: &MultiIndex, k: ModeKey, theta: f64) -> Result<f64> {
    let n = nhat(&q.add_unit(k))?;
    let lhs: f64 = n.iter().map(|&w| (w as f64).powf(theta)).sum();
    let tail: f64 = n.iter().skip(2).map(|&w| (w as f64).powf(theta)).sum();
    Ok(lhs - 2.0 * (n[0] as f64).powf(theta) - (2.0 - 2f64.powf(theta)) * tail)
}

/// Random momentum-conserving `(q, k)` on lattice modes `|j| <= max_j`,
/// with `1 <= |q| <= max_degree`. The target `k` may fall outside `max_j`.
pub fn sample_conserving_pair<R: Rng>(rng: &mut R, max_j: i32, max_degree: u32) -> (MultiIndex, ModeKey) {
    let d = rng.gen_range(1..=max_degree);
    let mut q = MultiIndex::zero();
    for _ in 0..d {
        let s = if rng.gen_bool(0.5) { 1 } else { -1 };
        q = q.add_unit(ModeKey::lattice(rng.gen_range(-max_j..=max_j), s));
    }
    let s: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
    let j = q.raw_momentum() * s as i64;
    (q, ModeKey::lattice(j as i32, s))
}
