//! Homological equations, Lie series, the KAM step and the normalization driver.
//!
//! Sign conventions: `[X, Y] = DY·X - DX·Y`, so `[D(λ), x^q ∂_k]` equals
//! `λ·(q - e_k) x^q ∂_k` and `exp(ad_F) W` is the pullback of `W` by the
//! time-one flow of `F`. Generators are logged in application order, and
//! original coordinates are `y = Φ_{F_0} ∘ … ∘ Φ_{F_{n-1}}(x)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{bracket, scaling_degree, term_label, CompiledField, VectorField};
use crate::frequency::FrequencyModel;
use crate::index::TruncationContext;
use crate::norm::majorant_norm;
use crate::ode;
use crate::resonance::{Ideal, ResonanceModule};
use crate::scalar::Scalar;
use crate::text::{sections_from_text, sections_to_text};

/// `W = D(λ) + Z + X + N`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecomposedField<C: Scalar> {
    pub linear: VectorField<C>,
    /// Diagonal resonant part, scaling degrees `1..M*`.
    pub z: VectorField<C>,
    /// `I0 ⊕ I1` part of order `>= M*`.
    pub x: VectorField<C>,
    /// `I2` part of order `>= M*`.
    pub n: VectorField<C>,
    pub m_star: u32,
}

impl<C: Scalar> DecomposedField<C> {
    pub fn total(&self) -> Result<VectorField<C>> {
        self.linear.add(&self.z)?.add(&self.x)?.add(&self.n)
    }
}

fn close<C: Scalar>(a: &C, b: &C, tol: f64) -> bool {
    if C::EXACT {
        a == b
    } else {
        a.sub(b).modulus() <= tol.max(1e-9 * b.modulus())
    }
}

/// Split `w` into `D(λ) + Z + X + N` with threshold `m_star`.
pub fn decompose<C: Scalar>(
    w: &VectorField<C>,
    model: &FrequencyModel,
    module: &ResonanceModule,
    m_star: u32,
) -> Result<DecomposedField<C>> {
    let ctx = *w.ctx();
    let linear = VectorField::linear(ctx, &model.linear_terms::<C>(&ctx)?)?;
    let mut z = VectorField::new(ctx);
    let mut x = VectorField::new(ctx);
    let mut n = VectorField::new(ctx);
    for k in ctx.modes() {
        let unit = crate::index::MultiIndex::unit(k);
        let want: C = model.lambda_scalar(k);
        match w.get(k, &unit) {
            Some(c) if close(c, &want, ctx.zero_tol) => {}
            _ => return Err(Error::hypothesis(term_label(k, &unit), "linear part differs from D(λ)")),
        }
    }
    for ((k, q), c) in w.terms() {
        let d = scaling_degree(q);
        if d == 0 {
            if q.get(*k) == 0 {
                return Err(Error::hypothesis(term_label(*k, q), "linear part is not diagonal"));
            }
            continue;
        }
        if d < m_star {
            if !model.is_resonant(q, *k) {
                return Err(Error::hypothesis(term_label(*k, q), "non-resonant term below M*; prenormalize first"));
            }
            if q.get(*k) == 0 {
                return Err(Error::hypothesis(term_label(*k, q), "resonant term below M* is not diagonal"));
            }
            z.accumulate(*k, q.clone(), c.clone());
        } else if module.classify(q) == Ideal::J2 {
            n.accumulate(*k, q.clone(), c.clone());
        } else {
            if model.is_resonant(q, *k) {
                return Err(Error::hypothesis(term_label(*k, q), "resonant term outside J2 at order >= M*"));
            }
            x.accumulate(*k, q.clone(), c.clone());
        }
    }
    Ok(DecomposedField { linear, z, x, n, m_star })
}

/// `X` with `[D(λ), X] = Y`: coefficientwise division by `λ·(q - e_k)`.
pub fn solve_linear_homological<C: Scalar>(y: &VectorField<C>, model: &FrequencyModel) -> Result<VectorField<C>> {
    let ctx = *y.ctx();
    let mut out = VectorField::new(ctx);
    for ((k, q), c) in y.terms() {
        let d: C =
            model.divisor_scalar(q, *k, ctx.zero_tol)?.ok_or_else(|| Error::ResonantTermInRange(term_label(*k, q)))?;
        out.accumulate(*k, q.clone(), c.div(&d).expect("nonzero divisor"));
    }
    Ok(out)
}

/// `A⁻¹` for `A F = Π[F, D(λ)]`, i.e. division by `-λ·(q - e_k)`.
fn a_inverse<C: Scalar>(y: &VectorField<C>, model: &FrequencyModel) -> Result<VectorField<C>> {
    Ok(solve_linear_homological(y, model)?.neg())
}

/// `B F = Π^{I(i)}[F, Z]`.
fn b_apply<C: Scalar>(
    f: &VectorField<C>,
    z: &VectorField<C>,
    module: &ResonanceModule,
    ideal: Ideal,
) -> Result<VectorField<C>> {
    Ok(module.project_ideal(&bracket(f, z)?, ideal))
}

fn ideal_of(i: u8) -> Result<Ideal> {
    match i {
        0 => Ok(Ideal::J0),
        1 => Ok(Ideal::J1),
        _ => Err(Error::Input(format!("homological index must be 0 or 1, got {i}"))),
    }
}

fn check_diagonal_resonant<C: Scalar>(z: &VectorField<C>, model: &FrequencyModel) -> Result<()> {
    for ((k, q), _) in z.terms() {
        if q.get(*k) == 0 || !model.is_resonant(q, *k) {
            return Err(Error::hypothesis(term_label(*k, q), "Z must be diagonal and resonant"));
        }
    }
    Ok(())
}

/// `(A⁻¹B)(f)`, exposed to test nilpotency.
pub fn a_inv_b<C: Scalar>(
    f: &VectorField<C>,
    z: &VectorField<C>,
    i: u8,
    model: &FrequencyModel,
    module: &ResonanceModule,
) -> Result<VectorField<C>> {
    a_inverse(&b_apply(f, z, module, ideal_of(i)?)?, model)
}

/// Solve `Π^{I(i)}[F, D(λ) + Z] = Y` for `F ∈ I(i)` with
/// `Y = -X_0` (`i = 0`) or `Y = -X_1 - Π^{I1}[F_0, Z + N]` (`i = 1`).
///
/// `F = A⁻¹Y - A⁻¹BA⁻¹Y`, exact because `(A⁻¹B)² = 0`.
pub fn solve_extended_homological<C: Scalar>(
    xi: &VectorField<C>,
    i: u8,
    z: &VectorField<C>,
    n: &VectorField<C>,
    f0: Option<&VectorField<C>>,
    model: &FrequencyModel,
    module: &ResonanceModule,
) -> Result<VectorField<C>> {
    let ideal = ideal_of(i)?;
    check_diagonal_resonant(z, model)?;
    for ((k, q), _) in xi.terms() {
        if module.classify(q) != ideal {
            return Err(Error::Input(format!("{} is not in I{i}", term_label(*k, q))));
        }
    }
    let mut y = xi.neg();
    if i == 1 {
        let f0 = f0.ok_or_else(|| Error::Input("the I1 equation needs F0".into()))?;
        let coupling = bracket(f0, &z.add(n)?)?;
        y = y.sub(&module.project_ideal(&coupling, Ideal::J1))?;
    }
    let first = a_inverse(&y, model)?;
    let corr = a_inverse(&b_apply(&first, z, module, ideal)?, model)?;
    first.sub(&corr)
}

/// `Π^{I(i)}([F_0 (+ F_1), D(λ) + Z + N]) + X_i`; zero when the system is solved.
pub fn homological_residual<C: Scalar>(
    d: &DecomposedField<C>,
    f0: &VectorField<C>,
    f1: Option<&VectorField<C>>,
    module: &ResonanceModule,
) -> Result<VectorField<C>> {
    let base = d.linear.add(&d.z)?.add(&d.n)?;
    let (ideal, f) = match f1 {
        None => (Ideal::J0, f0.clone()),
        Some(f1) => (Ideal::J1, f0.add(f1)?),
    };
    let x = module.project_ideal(&d.x, ideal);
    module.project_ideal(&bracket(&f, &base)?, ideal).add(&x)
}

/// `Σ_k ad_F^k(W) / k!` and the number of nonzero terms with `k >= 1`.
pub fn lie_series<C: Scalar>(f: &VectorField<C>, w: &VectorField<C>) -> Result<(VectorField<C>, usize)> {
    if f.is_zero() {
        return Ok((w.clone(), 0));
    }
    let ord = f.order().unwrap();
    if ord == 0 {
        return Err(Error::NonterminatingSeries);
    }
    let bound = (f.ctx().degree_cutoff + 1).div_ceil(ord) as usize;
    let mut sum = w.clone();
    let mut term = w.clone();
    let mut k = 0usize;
    loop {
        term = bracket(f, &term)?;
        if term.is_zero() {
            break;
        }
        k += 1;
        term = term.scale(&C::one().div(&C::from_i64(k as i64)).unwrap());
        sum = sum.add(&term)?;
        assert!(k <= bound, "Lie series longer than the degree count allows");
    }
    Ok((sum, k))
}

/// `exp(ad_F) W`, exact at truncation.
pub fn pushforward_exp<C: Scalar>(f: &VectorField<C>, w: &VectorField<C>) -> Result<VectorField<C>> {
    Ok(lie_series(f, w)?.0)
}

/// Same series by Horner's rule, `W + ad_F(W + ad_F(W + …)/2)/1`.
pub fn pushforward_exp_horner<C: Scalar>(f: &VectorField<C>, w: &VectorField<C>) -> Result<VectorField<C>> {
    if f.is_zero() {
        return Ok(w.clone());
    }
    let ord = f.order().unwrap();
    if ord == 0 {
        return Err(Error::NonterminatingSeries);
    }
    let n = f.ctx().degree_cutoff / ord + 1;
    let mut acc = w.clone();
    for k in (1..=n).rev() {
        let inv = C::one().div(&C::from_i64(k as i64)).unwrap();
        acc = w.add(&bracket(f, &acc)?.scale(&inv))?;
    }
    Ok(acc)
}

/// Generators `F_0, …, F_{n-1}` in application order.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformLog<C: Scalar> {
    pub generators: Vec<VectorField<C>>,
}

impl<C: Scalar> TransformLog<C> {
    pub fn new() -> Self {
        TransformLog { generators: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// `## F0`, `## F1`, … sections in canonical term form.
    pub fn to_text(&self) -> String {
        let named: Vec<(String, &VectorField<C>)> =
            self.generators.iter().enumerate().map(|(i, f)| (format!("F{i}"), f)).collect();
        sections_to_text(&named)
    }

    pub fn from_text(ctx: TruncationContext, text: &str) -> Result<Self> {
        let secs = sections_from_text::<C>(ctx, text)?;
        for (i, (name, _)) in secs.iter().enumerate() {
            if *name != format!("F{i}") {
                return Err(Error::Input(format!("expected section F{i}, found '{name}'")));
            }
        }
        Ok(TransformLog { generators: secs.into_iter().map(|s| s.1).collect() })
    }
}

impl<C: Scalar> Default for TransformLog<C> {
    fn default() -> Self {
        Self::new()
    }
}

/// Constants and radii for the smallness diagnostics. None of them gate the algebra.
#[derive(Clone, Debug, Serialize)]
pub struct KamConfig {
    /// Override for `M*`; must be at least the minimal value.
    pub m_star: Option<u32>,
    pub gamma: f64,
    /// Target radius `r'`; `r_0 = 2r'`, `ρ = r'`.
    pub r_prime: f64,
    pub s0: f64,
    /// Analyticity loss `s' - s`; zero drops the exponential factors.
    pub sigma: f64,
    pub k1: f64,
    pub c: f64,
    /// Constant in front of the iteration threshold `K`.
    pub big_c: f64,
}

impl Default for KamConfig {
    fn default() -> Self {
        KamConfig { m_star: None, gamma: 1.0, r_prime: 0.1, s0: 0.0, sigma: 0.0, k1: 1.0, c: 1.0, big_c: 1.0 }
    }
}

pub const CHI: f64 = 1.5;

/// Radii at step `n`: `(r_n, s_n, ρ_n, σ_n)`.
pub fn schedule(cfg: &KamConfig, n: usize) -> (f64, f64, f64, f64) {
    let rho = cfg.r_prime;
    let rho_n = |i: usize| rho / 10.0 * 0.5f64.powi(i as i32);
    let sigma_n = |i: usize| {
        if i == 0 {
            cfg.sigma / 8.0
        } else {
            9.0 * cfg.sigma / (4.0 * std::f64::consts::PI.powi(2) * (i * i) as f64)
        }
    };
    let mut r = 2.0 * cfg.r_prime;
    let mut s = cfg.s0;
    for i in 0..n {
        r -= 5.0 * rho_n(i);
        s += 2.0 * sigma_n(i);
    }
    (r, s, rho_n(n), sigma_n(n))
}

/// `max` of the upper norms of the `I0`, `I1`, `I2` parts.
pub fn triple_norm<C: Scalar>(x: &VectorField<C>, module: &ResonanceModule, r: f64, s: f64) -> Result<f64> {
    let mut m = 0.0f64;
    for part in module.split_ideals(x) {
        m = m.max(majorant_norm(&part, r, s)?.upper);
    }
    Ok(m)
}

/// One row of the iteration trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KamRecord {
    pub step: usize,
    pub ord_x: Option<u32>,
    pub ord_x_next: Option<u32>,
    pub doubling_ok: bool,
    pub epsilon: f64,
    pub theta: f64,
    pub r: f64,
    pub s: f64,
    pub rho: f64,
    pub sigma: f64,
    /// `ln` of the left side of the step smallness condition.
    pub smallness_lhs_ln: f64,
    pub smallness_rhs_ln: f64,
    pub smallness_ok: bool,
    /// `ε_i <= ε_0 e^{1 - χ^i}`.
    pub decay_ok: bool,
    pub series_len: usize,
    pub generator_terms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KamTrace {
    pub records: Vec<KamRecord>,
    pub epsilon0: f64,
    pub theta0: f64,
    /// `ln` of both sides of the iteration threshold `ε_0 <= (1 + Θ_0)^{-7} K^{-1}`.
    pub threshold_lhs_ln: f64,
    pub threshold_rhs_ln: f64,
    pub threshold_ok: bool,
}

fn ln_k(cfg: &KamConfig) -> f64 {
    let c_prime = if cfg.sigma > 0.0 {
        512.0 * (4.0 * std::f64::consts::PI.powi(2) / (9.0 * cfg.sigma)).powi(6) * cfg.c
    } else {
        0.0
    };
    let best = (0..=400)
        .map(|n| {
            let n = n as f64;
            9.0 * n * 2f64.ln() + c_prime * n.powi(12) - CHI.powf(n) * (2.0 - CHI)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    cfg.big_c.ln() + best
}

/// Output of [`kam_step`].
#[derive(Clone, Debug)]
pub struct KamStep<C: Scalar> {
    pub next: DecomposedField<C>,
    pub generator: VectorField<C>,
    pub f0: VectorField<C>,
    pub f1: VectorField<C>,
    pub record: KamRecord,
}

/// One step: solve the triangular system, push forward, redecompose.
pub fn kam_step<C: Scalar>(
    d: &DecomposedField<C>,
    model: &FrequencyModel,
    module: &ResonanceModule,
    cfg: &KamConfig,
    step: usize,
    epsilon0: Option<f64>,
) -> Result<KamStep<C>> {
    if d.x.is_zero() {
        return Err(Error::AlreadyNormal);
    }
    let [x0, x1, _] = module.split_ideals(&d.x);
    let f0 = solve_extended_homological(&x0, 0, &d.z, &d.n, None, model, module)?;
    let f1 = solve_extended_homological(&x1, 1, &d.z, &d.n, Some(&f0), model, module)?;
    let f = f0.add(&f1)?;
    let (w_next, series_len) = lie_series(&f, &d.total()?)?;
    let next = decompose(&w_next, model, module, d.m_star)?;

    let (r, s, rho, sigma) = schedule(cfg, step);
    let g = cfg.gamma;
    let nx = triple_norm(&d.x, module, r, s)?;
    let nz = triple_norm(&d.z, module, r, s)?;
    let nn = triple_norm(&d.n, module, r, s)?;
    let epsilon = nx / g;
    let theta = (nz + nn) / g + epsilon;
    let lhs = 3.0 * (1.0 + nz / g + nn / g).ln() + epsilon.ln();
    let mut rhs = cfg.k1.ln() + 4.0 * (rho / r).ln();
    if sigma > 0.0 {
        rhs -= 256.0 * cfg.c / sigma.powi(6);
    }
    let e0 = epsilon0.unwrap_or(epsilon);
    let ord_x = d.x.order();
    let ord_x_next = next.x.order();
    let doubling_ok = match (ord_x, ord_x_next) {
        (_, None) => true,
        (Some(a), Some(b)) => b >= 2 * a,
        (None, Some(_)) => false,
    };
    let record = KamRecord {
        step,
        ord_x,
        ord_x_next,
        doubling_ok,
        epsilon,
        theta,
        r,
        s,
        rho,
        sigma,
        smallness_lhs_ln: lhs,
        smallness_rhs_ln: rhs,
        smallness_ok: lhs <= rhs,
        decay_ok: epsilon <= e0 * (1.0 - CHI.powi(step as i32)).exp() * (1.0 + 1e-12),
        series_len,
        generator_terms: f.len(),
    };
    Ok(KamStep { next, generator: f, f0, f1, record })
}

/// Final normal form with its transform and trace.
#[derive(Clone, Debug)]
pub struct NormalFormResult<C: Scalar> {
    pub field: DecomposedField<C>,
    pub log: TransformLog<C>,
    pub trace: KamTrace,
    /// Number of leading generators in `log` produced by prenormalization.
    pub prenormal_steps: usize,
}

impl<C: Scalar> NormalFormResult<C> {
    pub fn kam_steps(&self) -> usize {
        self.trace.records.len()
    }
}

fn resolve_m_star(module: &ResonanceModule, cfg: &KamConfig) -> Result<u32> {
    match cfg.m_star {
        None => Ok(module.m_star_minimal),
        Some(m) if m >= module.m_star_minimal => Ok(m),
        Some(m) => Err(Error::Input(format!("M* = {m} is below the minimal value {}", module.m_star_minimal))),
    }
}

/// Remove non-resonant terms of scaling degree `1..M*`, lowest degree first.
pub fn prenormalize<C: Scalar>(
    w: &VectorField<C>,
    model: &FrequencyModel,
    m_star: u32,
) -> Result<(VectorField<C>, TransformLog<C>)> {
    let mut cur = w.clone();
    let mut log = TransformLog::new();
    for d in 1..m_star.min(cur.ctx().degree_cutoff + 1) {
        let y = cur.project_set(|k, q| scaling_degree(q) == d && !model.is_resonant(q, k));
        if y.is_zero() {
            continue;
        }
        let f = solve_linear_homological(&y, model)?;
        cur = pushforward_exp(&f, &cur)?;
        log.generators.push(f);
    }
    Ok((cur, log))
}

/// Upper bound on KAM steps: `⌈log₂((D+1)/M*)⌉ + 1`.
pub fn step_bound(degree_cutoff: u32, m_star: u32) -> usize {
    let ratio = (degree_cutoff + 1) as f64 / m_star.max(1) as f64;
    (ratio.log2().ceil().max(0.0) as usize) + 1
}

/// Prenormalize, decompose and iterate [`kam_step`] until `X = 0`.
pub fn normalize<C: Scalar>(
    w: &VectorField<C>,
    model: &FrequencyModel,
    module: &ResonanceModule,
    cfg: &KamConfig,
) -> Result<NormalFormResult<C>> {
    let m_star = resolve_m_star(module, cfg)?;
    let (pre, mut log) = prenormalize(w, model, m_star)?;
    let prenormal_steps = log.len();
    let mut d = decompose(&pre, model, module, m_star)?;
    let (r0, s0, _, _) = schedule(cfg, 0);
    let e0 = triple_norm(&d.x, module, r0, s0)? / cfg.gamma;
    let t0 = (triple_norm(&d.z, module, r0, s0)? + triple_norm(&d.n, module, r0, s0)?) / cfg.gamma + e0;
    let lhs = e0.ln();
    let rhs = -7.0 * (1.0 + t0).ln() - ln_k(cfg);
    let mut records = Vec::new();
    let limit = step_bound(w.ctx().degree_cutoff, m_star) + 8;
    while !d.x.is_zero() {
        if records.len() >= limit {
            return Err(Error::hypothesis(
                d.x.terms().next().map(|(k, _)| term_label(k.0, &k.1)).unwrap_or_default(),
                "iteration failed to terminate",
            ));
        }
        let st = kam_step(&d, model, module, cfg, records.len(), Some(e0))?;
        log.generators.push(st.generator);
        records.push(st.record);
        d = st.next;
    }
    let trace = KamTrace {
        records,
        epsilon0: e0,
        theta0: t0,
        threshold_lhs_ln: lhs,
        threshold_rhs_ln: rhs,
        threshold_ok: lhs <= rhs,
    };
    Ok(NormalFormResult { field: d, log, trace, prenormal_steps })
}

/// Independent reference: plain degree-by-degree elimination of the
/// `I0 ⊕ I1` part with the linear operator only.
pub fn elimination_oracle<C: Scalar>(
    w: &VectorField<C>,
    model: &FrequencyModel,
    module: &ResonanceModule,
    m_star: u32,
) -> Result<VectorField<C>> {
    let (mut cur, _) = prenormalize(w, model, m_star)?;
    for d in m_star..=cur.ctx().degree_cutoff {
        let y = cur.project_set(|_, q| scaling_degree(q) == d && module.classify(q) != Ideal::J2);
        if y.is_zero() {
            continue;
        }
        let f = solve_linear_homological(&y, model)?;
        cur = pushforward_exp(&f, &cur)?;
    }
    Ok(cur)
}

/// Which way to evaluate the composed flows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `Φ_{F_0} ∘ … ∘ Φ_{F_{n-1}}`: normalized to original coordinates.
    Forward,
    /// Time `-1` flows in reverse order: original to normalized.
    Inverse,
}

/// Evaluate the coordinate change at `x` with `steps` RK4 steps per generator.
pub fn apply_transform<C: Scalar>(
    log: &TransformLog<C>,
    x: &[Complex64],
    direction: Direction,
    steps: usize,
) -> Vec<Complex64> {
    let compiled: Vec<CompiledField> = log.generators.iter().map(CompiledField::new).collect();
    apply_compiled(&compiled, x, direction, steps)
}

/// [`apply_transform`] on pre-compiled generators.
pub fn apply_compiled(
    compiled: &[CompiledField],
    x: &[Complex64],
    direction: Direction,
    steps: usize,
) -> Vec<Complex64> {
    let mut y = x.to_vec();
    match direction {
        Direction::Forward => {
            for f in compiled.iter().rev() {
                y = ode::integrate(f, &y, 1.0, steps, f64::INFINITY).unwrap_or(y);
            }
        }
        Direction::Inverse => {
            for f in compiled {
                y = ode::integrate(f, &y, -1.0, steps, f64::INFINITY).unwrap_or(y);
            }
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_example_dim6, dim6_model};
    use crate::field::ScalarSeries;
    use crate::index::{ModeKey, MultiIndex};
    use crate::resonance::enumerate_resonance;
    use crate::scalar::GaussRational;

    fn x(i: u32) -> ModeKey {
        ModeKey::index(i)
    }

    fn mono(pairs: &[(u32, u32)]) -> MultiIndex {
        MultiIndex::from_pairs(pairs.iter().map(|&(i, e)| (x(i), e)))
    }

    fn setup(d: u32) -> (TruncationContext, FrequencyModel, ResonanceModule, VectorField<GaussRational>) {
        let model = dim6_model(2f64.sqrt(), 3f64.sqrt()).unwrap();
        let ctx = TruncationContext::finite(6, d);
        let module = enumerate_resonance(&ctx, &model).unwrap();
        let lin = VectorField::linear(ctx, &model.linear_terms(&ctx).unwrap()).unwrap();
        (ctx, model, module, lin)
    }

    fn q(n: i64) -> GaussRational {
        GaussRational::from_ints(n, 0)
    }

    #[test]
    fn decompose_examples() {
        let (_, model, module, lin) = setup(6);
        let d = decompose(&lin, &model, &module, 4).unwrap();
        assert!(d.z.is_zero() && d.x.is_zero() && d.n.is_zero());

        let mut w = lin.clone();
        w.insert(x(3), mono(&[(3, 2), (4, 1)]), q(1)).unwrap();
        let d = decompose(&w, &model, &module, 4).unwrap();
        assert_eq!(d.z.len(), 1);
        // 2e2 + e3 + e4 holds one generator only (J1); at scaling degree 3 < M*
        // it is a non-diagonal kernel term, outside the theorem's hypotheses
        let q1 = mono(&[(2, 2), (3, 1), (4, 1)]);
        assert_eq!(module.classify(&q1), Ideal::J1);
        w.insert(x(1), q1, q(1)).unwrap();
        assert_eq!(decompose(&w, &model, &module, 4).unwrap_err().exit_code(), 3);
        // the same shape one degree up sits in J2 and goes to N
        let mut w2 = lin.clone();
        w2.insert(x(1), mono(&[(2, 2), (3, 2), (4, 2)]), q(1)).unwrap();
        assert_eq!(decompose(&w2, &model, &module, 4).unwrap().n.len(), 1);

        let mut bad = lin.clone();
        bad.insert(x(1), mono(&[(2, 2)]), q(1)).unwrap();
        let err = decompose(&bad, &model, &module, 4).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("x^[2:2] d/dx_1"), "{err}");
    }

    #[test]
    fn linear_homological_divides() {
        let (ctx, model, _, _) = setup(6);
        let mut y = VectorField::new(ctx);
        y.insert(x(2), mono(&[(1, 1), (2, 1)]), q(1)).unwrap();
        let f = solve_linear_homological(&y, &model).unwrap();
        assert_eq!(f.get(x(2), &mono(&[(1, 1), (2, 1)])), Some(&GaussRational::ratio(1, 2)));
        let lin = VectorField::linear(ctx, &model.linear_terms(&ctx).unwrap()).unwrap();
        assert_eq!(bracket(&lin, &f).unwrap(), y);
        assert!(solve_linear_homological(&VectorField::<GaussRational>::new(ctx), &model).unwrap().is_zero());

        let mut r = VectorField::new(ctx);
        r.insert(x(3), mono(&[(3, 2), (4, 1)]), q(1)).unwrap();
        assert!(matches!(solve_linear_homological(&r, &model), Err(Error::ResonantTermInRange(_))));
    }

    #[test]
    fn extended_homological_residual_vanishes() {
        let (ctx, model, module, lin) = setup(8);
        let mut z = VectorField::new(ctx);
        z.insert(x(3), mono(&[(3, 2), (4, 1)]), q(1)).unwrap();
        z.insert(x(1), mono(&[(1, 1), (5, 1), (6, 1)]), GaussRational::ratio(-2, 3)).unwrap();
        let mut x0 = VectorField::new(ctx);
        x0.insert(x(1), mono(&[(1, 2), (2, 3)]), q(1)).unwrap();
        x0.insert(x(3), mono(&[(3, 4), (2, 1)]), q(2)).unwrap();
        let mut x1 = VectorField::new(ctx);
        x1.insert(x(2), mono(&[(3, 1), (4, 1), (1, 3)]), q(5)).unwrap();
        let mut n = VectorField::new(ctx);
        n.insert(x(5), mono(&[(3, 2), (4, 2), (5, 1)]), q(7)).unwrap();
        let d = DecomposedField { linear: lin, z: z.clone(), x: x0.add(&x1).unwrap(), n: n.clone(), m_star: 4 };
        let f0 = solve_extended_homological(&x0, 0, &z, &n, None, &model, &module).unwrap();
        let f1 = solve_extended_homological(&x1, 1, &z, &n, Some(&f0), &model, &module).unwrap();
        assert!(homological_residual(&d, &f0, None, &module).unwrap().is_zero());
        assert!(homological_residual(&d, &f0, Some(&f1), &module).unwrap().is_zero());
        // (A⁻¹B)² = 0
        for (i, y) in [(0u8, &x0), (1, &x1)] {
            let once = a_inv_b(y, &z, i, &model, &module).unwrap();
            assert!(a_inv_b(&once, &z, i, &model, &module).unwrap().is_zero());
        }
        // with Z = N = 0 the plain solver comes back
        let zero = VectorField::new(ctx);
        let plain = solve_extended_homological(&x0, 0, &zero, &zero, None, &model, &module).unwrap();
        // A F = [F, D(λ)] = -[D(λ), F]
        assert_eq!(plain, solve_linear_homological(&x0, &model).unwrap());
    }

    #[test]
    fn lie_series_two_summations_agree() {
        let (ctx, _, _, _) = setup(7);
        let (w, _) = build_example_dim6(2f64.sqrt(), 3f64.sqrt(), 11, 7).unwrap();
        let mut f = VectorField::new(ctx);
        f.insert(x(2), mono(&[(1, 1), (2, 1)]), GaussRational::ratio(1, 2)).unwrap();
        f.insert(x(4), mono(&[(6, 2), (4, 1)]), q(-3)).unwrap();
        assert_eq!(pushforward_exp(&f, &w).unwrap(), pushforward_exp_horner(&f, &w).unwrap());
        let (_, len) = lie_series(&f, &w).unwrap();
        assert!(len <= 8);
        assert_eq!(pushforward_exp(&VectorField::new(ctx), &w).unwrap(), w);
        let mut lin = VectorField::new(ctx);
        lin.insert(x(1), mono(&[(2, 1)]), q(1)).unwrap();
        assert!(matches!(lie_series(&lin, &w), Err(Error::NonterminatingSeries)));
    }

    fn solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
        let n = b.len();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].norm().partial_cmp(&a[j][c].norm()).unwrap()).unwrap();
            a.swap(c, p);
            b.swap(c, p);
            for r in c + 1..n {
                let m = a[r][c] / a[c][c];
                for k in c..n {
                    let t = a[c][k];
                    a[r][k] -= m * t;
                }
                let t = b[c];
                b[r] -= m * t;
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for c in (0..n).rev() {
            let s: Complex64 = (c + 1..n).map(|k| a[c][k] * out[k]).sum();
            out[c] = (b[c] - s) / a[c][c];
        }
        out
    }

    #[test]
    fn pushforward_matches_flow_pullback() {
        // φ = time-one flow of F with its variational equation; φ*W(x) = Dφ(x)⁻¹ W(φ(x))
        let (ctx, _, _, _) = setup(8);
        let (w, _) = build_example_dim6(2f64.sqrt(), 3f64.sqrt(), 5, 8).unwrap();
        let mut f: VectorField<GaussRational> = VectorField::new(ctx);
        f.insert(x(1), mono(&[(1, 1), (2, 1)]), q(1)).unwrap();
        f.insert(x(3), mono(&[(5, 1), (2, 1)]), GaussRational::ratio(-1, 2)).unwrap();
        f.insert(x(6), mono(&[(6, 1), (3, 2)]), q(2)).unwrap();
        let ff = f.to_float();
        let modes = ctx.modes();
        let jac: Vec<Vec<ScalarSeries<Complex64>>> =
            modes.iter().map(|&k| modes.iter().map(|&j| ff.component(k).derivative(j)).collect()).collect();
        let lhs = pushforward_exp(&f, &w).unwrap().to_float();
        let wf = w.to_float();
        for s in 0..10u64 {
            let x0 = crate::verify::unit_direction(&ctx, 100 + s, None).iter().map(|v| v * 0.05).collect::<Vec<_>>();
            let n = 6;
            let mut y = x0.clone();
            let mut m: Vec<Vec<Complex64>> =
                (0..n).map(|i| (0..n).map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect();
            let steps = 400;
            let h = 1.0 / steps as f64;
            let rhs = |y: &[Complex64], m: &[Vec<Complex64>]| {
                let dy = ff.eval(y);
                let jv: Vec<Vec<Complex64>> = jac.iter().map(|row| row.iter().map(|p| p.eval(y)).collect()).collect();
                let dm: Vec<Vec<Complex64>> =
                    (0..n).map(|i| (0..n).map(|j| (0..n).map(|l| jv[i][l] * m[l][j]).sum()).collect()).collect();
                (dy, dm)
            };
            for _ in 0..steps {
                let comb = |a: &[Complex64], am: &[Vec<Complex64>], b: &[Complex64], bm: &[Vec<Complex64>], c: f64| {
                    let v: Vec<Complex64> = a.iter().zip(b).map(|(p, q)| p + q * c).collect();
                    let vm: Vec<Vec<Complex64>> =
                        am.iter().zip(bm).map(|(r, s)| r.iter().zip(s).map(|(p, q)| p + q * c).collect()).collect();
                    (v, vm)
                };
                let (k1, m1) = rhs(&y, &m);
                let (a, am) = comb(&y, &m, &k1, &m1, h / 2.0);
                let (k2, m2) = rhs(&a, &am);
                let (a, am) = comb(&y, &m, &k2, &m2, h / 2.0);
                let (k3, m3) = rhs(&a, &am);
                let (a, am) = comb(&y, &m, &k3, &m3, h);
                let (k4, m4) = rhs(&a, &am);
                for i in 0..n {
                    y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
                    for j in 0..n {
                        m[i][j] += (m1[i][j] + m2[i][j] * 2.0 + m3[i][j] * 2.0 + m4[i][j]) * (h / 6.0);
                    }
                }
            }
            let pulled = solve(m, wf.eval(&y));
            let expect = lhs.eval(&x0);
            assert!(ode::distance(&pulled, &expect) < 1e-8, "{}", ode::distance(&pulled, &expect));
        }
    }

    #[test]
    fn kam_step_kills_order_four_field() {
        let (ctx, model, module, lin) = setup(6);
        let mut xf = VectorField::new(ctx);
        xf.insert(x(1), mono(&[(1, 2), (2, 3)]), q(1)).unwrap();
        let z = VectorField::new(ctx);
        let d = DecomposedField { linear: lin.clone(), z: z.clone(), x: xf, n: z.clone(), m_star: 4 };
        let st = kam_step(&d, &model, &module, &KamConfig::default(), 0, None).unwrap();
        assert!(st.next.x.is_zero());
        assert!(st.record.doubling_ok);
        assert!(matches!(
            kam_step(&st.next, &model, &module, &KamConfig::default(), 1, None),
            Err(Error::AlreadyNormal)
        ));
    }

    #[test]
    fn normalize_keeps_z_and_matches_oracle() {
        let (w, model) = build_example_dim6(2f64.sqrt(), 3f64.sqrt(), 7, 8).unwrap();
        let module = enumerate_resonance(w.ctx(), &model).unwrap();
        let res = normalize(&w, &model, &module, &KamConfig::default()).unwrap();
        let before = decompose(&w, &model, &module, 4).unwrap();
        assert_eq!(res.field.z, before.z);
        assert!(res.field.x.is_zero());
        assert!(res.kam_steps() <= step_bound(8, 4));
        assert!(res.trace.records.iter().all(|r| r.doubling_ok));
        let total = res.field.total().unwrap();
        let oracle = elimination_oracle(&w, &model, &module, 4).unwrap();
        for field in [&total, &oracle] {
            let [i0, i1, _] = module.split_ideals(&field.sub(&res.field.linear).unwrap().sub(&res.field.z).unwrap());
            assert!(i0.is_zero() && i1.is_zero());
        }
        // idempotent
        let again = normalize(&total, &model, &module, &KamConfig::default()).unwrap();
        assert_eq!(again.kam_steps(), 0);
        assert_eq!(again.field.total().unwrap(), total);
    }

    #[test]
    fn prenormalize_removes_low_degree_term() {
        let (ctx, model, module, lin) = setup(6);
        let mut w = lin.clone();
        w.insert(x(2), mono(&[(1, 1), (2, 1)]), q(1)).unwrap();
        w.insert(x(1), mono(&[(1, 2), (2, 3)]), q(1)).unwrap();
        let (out, log) = prenormalize(&w, &model, 4).unwrap();
        assert_eq!(log.len(), 1);
        assert!(out.project_degree(1).is_zero());
        decompose(&out, &model, &module, 4).unwrap();
        // degree-4 term is out of range
        let only4 = lin.add(&w.project_degree(4)).unwrap();
        assert_eq!(prenormalize(&only4, &model, 4).unwrap().0, only4);
        let _ = ctx;
    }

    #[test]
    fn transform_round_trip_and_text() {
        let (w, model) = build_example_dim6(2f64.sqrt(), 3f64.sqrt(), 3, 6).unwrap();
        let module = enumerate_resonance(w.ctx(), &model).unwrap();
        let res = normalize(&w, &model, &module, &KamConfig::default()).unwrap();
        let ctx = *w.ctx();
        for s in 0..10u64 {
            let p: Vec<Complex64> = crate::verify::unit_direction(&ctx, s, None).iter().map(|v| v * 0.1).collect();
            let there = apply_transform(&res.log, &p, Direction::Inverse, 64);
            let back = apply_transform(&res.log, &there, Direction::Forward, 64);
            assert!(ode::distance(&p, &back) < 1e-8);
        }
        assert_eq!(
            apply_transform(
                &TransformLog::<GaussRational>::new(),
                &[Complex64::new(0.3, 0.0); 6],
                Direction::Forward,
                8
            ),
            vec![Complex64::new(0.3, 0.0); 6]
        );
        let text = res.log.to_text();
        assert_eq!(TransformLog::<GaussRational>::from_text(ctx, &text).unwrap(), res.log);
    }

    #[test]
    fn schedule_values() {
        let cfg = KamConfig { sigma: 1.0, ..KamConfig::default() };
        let (r, s, rho, sigma) = schedule(&cfg, 0);
        assert_eq!((r, s), (0.2, 0.0));
        assert!((rho - 0.01).abs() < 1e-15 && (sigma - 0.125).abs() < 1e-15);
        let (r1, s1, _, _) = schedule(&cfg, 1);
        assert!((r1 - 0.15).abs() < 1e-12 && (s1 - 0.25).abs() < 1e-12);
        assert_eq!(step_bound(8, 4), 3);
    }
}
