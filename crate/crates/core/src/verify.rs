//! Numerical checks on finite-dimensional instances: tangency to `Σ`,
//! linear and RK4 flows, conjugacy error and its scaling in the radius.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{scaling_degree, term_label, CompiledField, VectorField};
use crate::frequency::FrequencyModel;
use crate::index::{ModeKey, MultiIndex, TruncationContext};
use crate::normalform::{apply_compiled, Direction, TransformLog};
use crate::ode::{self, Rk4Scratch};
use crate::resonance::{Ideal, ResonanceModule};
use crate::scalar::Scalar;

/// `Σ = ∩ {x^{Q_i} = 0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaSpec {
    pub generators: Vec<MultiIndex>,
}

impl SigmaSpec {
    pub fn from_module(module: &ResonanceModule) -> Self {
        SigmaSpec { generators: module.q_generators.clone() }
    }

    /// Largest `|x^{Q_i}|` at `x`.
    pub fn defect(&self, ctx: &TruncationContext, x: &[Complex64]) -> f64 {
        self.generators.iter().map(|q| crate::field::monomial(ctx, q, x).norm()).fold(0.0, f64::max)
    }

    /// Zero the last coordinate of every generator's support.
    pub fn project(&self, ctx: &TruncationContext, x: &mut [Complex64]) {
        for g in &self.generators {
            if let Some(&(k, _)) = g.entries().last() {
                x[ctx.position(k).unwrap()] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangencyReport {
    pub tangent: bool,
    pub offending: Vec<String>,
}

/// Every term of `W - D(λ) - Z` must lie in `J2`, where `Z` collects the
/// diagonal resonant terms of scaling degree below `m_star`.
pub fn check_tangent_sigma<C: Scalar>(
    w: &VectorField<C>,
    model: &FrequencyModel,
    module: &ResonanceModule,
    m_star: u32,
) -> TangencyReport {
    let ctx = w.ctx();
    let mut offending = Vec::new();
    for ((k, q), c) in w.terms() {
        if q == &MultiIndex::unit(*k) {
            let l: C = model.lambda_scalar(*k);
            if c.sub(&l).is_negligible(ctx.zero_tol.max(1e-9 * l.modulus())) {
                continue;
            }
        } else if scaling_degree(q) < m_star && q.get(*k) >= 1 && model.is_resonant(q, *k) {
            continue;
        } else if module.classify(q) == Ideal::J2 {
            continue;
        }
        offending.push(term_label(*k, q));
    }
    TangencyReport { tangent: offending.is_empty(), offending }
}

/// `x_k(t) = e^{λ_k t} x_k(0)`.
pub fn linear_flow(model: &FrequencyModel, ctx: &TruncationContext, xi: &[Complex64], t: f64) -> Vec<Complex64> {
    ctx.modes().iter().zip(xi).map(|(&k, &x)| (model.lambda_float(k) * t).exp() * x).collect()
}

/// Integrator settings.
#[derive(Clone, Debug, Serialize)]
pub struct FlowConfig {
    pub steps: usize,
    pub horizon: f64,
    /// Divergence threshold on the state norm.
    pub blowup: f64,
    /// Integrate the diagonal linear part exactly and apply RK4 to the rest.
    pub split_linear: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { steps: 400, horizon: 1.0, blowup: 1e6, split_linear: true }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || !(self.horizon >= 0.0) || !(self.blowup > 0.0) {
            return Err(Error::Input("flow config needs steps > 0, horizon >= 0, blowup > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    /// Richardson estimate `|x_h - x_{h/2}| / 15` at the final time.
    pub error_estimate: f64,
    pub diverged: bool,
}

impl Trajectory {
    pub fn last(&self) -> &[Complex64] {
        self.states.last().unwrap()
    }

    /// `t, re(x_1), im(x_1), …`.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.len());
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",re_x{i},im_x{i}"));
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t:?}"));
            for v in s {
                out.push_str(&format!(",{:?},{:?}", v.re, v.im));
            }
            out.push('\n');
        }
        out
    }
}

/// Diagonal linear part and remainder, for the split integrator.
struct SplitField {
    lambda: Vec<Complex64>,
    rest: CompiledField,
    full: CompiledField,
}

impl SplitField {
    fn new<C: Scalar>(w: &VectorField<C>) -> Self {
        let ctx = w.ctx();
        let mut lambda = vec![Complex64::new(0.0, 0.0); ctx.dimension()];
        let rest = w.project_set(|k, q| if q == &MultiIndex::unit(k) { false } else { true });
        for ((k, q), c) in w.terms() {
            if q == &MultiIndex::unit(*k) {
                lambda[ctx.position(*k).unwrap()] = c.to_complex();
            }
        }
        SplitField { lambda, rest: CompiledField::new(&rest), full: CompiledField::new(w) }
    }

    /// Integrate over `[0, t]`; the states are recorded after every step.
    fn run(&self, x0: &[Complex64], t: f64, steps: usize, split: bool, blowup: f64) -> (Vec<Vec<Complex64>>, bool) {
        let n = x0.len();
        let h = t / steps as f64;
        let mut states = Vec::with_capacity(steps + 1);
        states.push(x0.to_vec());
        if !split {
            let mut x = x0.to_vec();
            let mut s = Rk4Scratch::new(n);
            for _ in 0..steps {
                ode::rk4_step(&self.full, &mut x, h, &mut s);
                states.push(x.clone());
                if !(ode::norm(&x) <= blowup) {
                    return (states, true);
                }
            }
            return (states, false);
        }
        // y = e^{-Λt} x solves y' = e^{-Λt} N(e^{Λt} y)
        let g = |tau: f64, y: &[Complex64], out: &mut [Complex64], buf: &mut [Complex64]| {
            for i in 0..n {
                buf[i] = (self.lambda[i] * tau).exp() * y[i];
            }
            self.rest.eval_into(buf, out);
            for i in 0..n {
                out[i] *= (-self.lambda[i] * tau).exp();
            }
        };
        let mut y = x0.to_vec();
        let z = Complex64::new(0.0, 0.0);
        let (mut k1, mut k2, mut k3, mut k4) = (vec![z; n], vec![z; n], vec![z; n], vec![z; n]);
        let (mut tmp, mut buf, mut comp) = (vec![z; n], vec![z; n], vec![z; n]);
        for step in 0..steps {
            let t0 = step as f64 * h;
            g(t0, &y, &mut k1, &mut buf);
            for i in 0..n {
                tmp[i] = y[i] + k1[i] * (h / 2.0);
            }
            g(t0 + h / 2.0, &tmp, &mut k2, &mut buf);
            for i in 0..n {
                tmp[i] = y[i] + k2[i] * (h / 2.0);
            }
            g(t0 + h / 2.0, &tmp, &mut k3, &mut buf);
            for i in 0..n {
                tmp[i] = y[i] + k3[i] * h;
            }
            g(t0 + h, &tmp, &mut k4, &mut buf);
            for i in 0..n {
                ode::kahan_add(&mut y[i], &mut comp[i], (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0));
            }
            let t1 = t0 + h;
            let x: Vec<Complex64> = (0..n).map(|i| (self.lambda[i] * t1).exp() * y[i]).collect();
            let bad = !(ode::norm(&x) <= blowup);
            states.push(x);
            if bad {
                return (states, true);
            }
        }
        (states, false)
    }
}

/// RK4 trajectory of `w` from `x0` over `[0, cfg.horizon]`, with a
/// step-halving error estimate.
pub fn integrate_flow<C: Scalar>(w: &VectorField<C>, x0: &[Complex64], cfg: &FlowConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let f = SplitField::new(w);
    let t = cfg.horizon;
    let (states, diverged) = f.run(x0, t, cfg.steps, cfg.split_linear, cfg.blowup);
    let h = t / cfg.steps as f64;
    let times = (0..states.len()).map(|i| i as f64 * h).collect();
    let error_estimate = if diverged {
        f64::INFINITY
    } else {
        let (fine, _) = f.run(x0, t, 2 * cfg.steps, cfg.split_linear, cfg.blowup);
        ode::distance(states.last().unwrap(), fine.last().unwrap()) / 15.0
    };
    Ok(Trajectory { times, states, error_estimate, diverged })
}

fn endpoint(f: &SplitField, x0: &[Complex64], cfg: &FlowConfig) -> Result<Vec<Complex64>> {
    let (states, diverged) = f.run(x0, cfg.horizon, cfg.steps, cfg.split_linear, cfg.blowup);
    if diverged {
        return Err(Error::Divergence((states.len() - 1) as f64 * cfg.horizon / cfg.steps as f64));
    }
    Ok(states.into_iter().last().unwrap())
}

/// Steps per generator used when evaluating the coordinate change.
pub const TRANSFORM_STEPS: usize = 64;

/// `|Φ_t^{W0}(Ψ(ξ)) - Ψ(e^{Λt} ξ)|` with `Ψ` the forward composition of the logged flows.
pub fn conjugacy_error<C: Scalar>(
    w0: &VectorField<C>,
    log: &TransformLog<C>,
    model: &FrequencyModel,
    xi: &[Complex64],
    cfg: &FlowConfig,
) -> Result<f64> {
    let f = SplitField::new(w0);
    let gens: Vec<CompiledField> = log.generators.iter().map(CompiledField::new).collect();
    conjugacy_error_compiled(&f, &gens, model, w0.ctx(), xi, cfg)
}

fn conjugacy_error_compiled(
    f: &SplitField,
    gens: &[CompiledField],
    model: &FrequencyModel,
    ctx: &TruncationContext,
    xi: &[Complex64],
    cfg: &FlowConfig,
) -> Result<f64> {
    let y0 = apply_compiled(gens, xi, Direction::Forward, TRANSFORM_STEPS);
    let yt = endpoint(f, &y0, cfg)?;
    // the linear part of W0 itself, not the model's floating values: exact
    // models carry a rational stand-in for each symbol
    let _ = (model, ctx);
    let lin: Vec<Complex64> = f.lambda.iter().zip(xi).map(|(l, x)| (l * cfg.horizon).exp() * x).collect();
    let expect = apply_compiled(gens, &lin, Direction::Forward, TRANSFORM_STEPS);
    Ok(ode::distance(&yt, &expect))
}

/// Errors over a ladder of radii and the least-squares slope of `ln err` against `ln ρ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingTable {
    pub label: String,
    pub rows: Vec<(f64, f64)>,
    pub slope: f64,
}

impl ScalingTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rho,error\n");
        for (r, e) in &self.rows {
            s.push_str(&format!("{r:?},{e:?}\n"));
        }
        s
    }
}

pub fn loglog_slope(rows: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.1 > 0.0).map(|&(r, e)| (r.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Conjugacy error at `ρ · direction` for every `ρ` in `rhos` (evaluated in parallel).
pub fn conjugacy_scaling<C: Scalar>(
    label: &str,
    w0: &VectorField<C>,
    log: &TransformLog<C>,
    model: &FrequencyModel,
    direction: &[Complex64],
    rhos: &[f64],
    cfg: &FlowConfig,
) -> Result<ScalingTable> {
    let f = SplitField::new(w0);
    let gens: Vec<CompiledField> = log.generators.iter().map(CompiledField::new).collect();
    let ctx = w0.ctx();
    let errs: Vec<Result<f64>> = rhos
        .par_iter()
        .map(|&r| {
            let xi: Vec<Complex64> = direction.iter().map(|v| v * r).collect();
            conjugacy_error_compiled(&f, &gens, model, ctx, &xi, cfg)
        })
        .collect();
    let mut rows = Vec::new();
    for (r, e) in rhos.iter().zip(errs) {
        rows.push((*r, e?));
    }
    let slope = loglog_slope(&rows);
    Ok(ScalingTable { label: label.to_string(), rows, slope })
}

/// Seeded unit vector with real entries; with `sigma`, projected onto `Σ` first.
pub fn unit_direction(ctx: &TruncationContext, seed: u64, sigma: Option<&SigmaSpec>) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Complex64> = (0..ctx.dimension())
        .map(|_| Complex64::new(rng.gen_range(0.2..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, 0.0))
        .collect();
    if let Some(s) = sigma {
        s.project(ctx, &mut x);
    }
    let n = ode::norm(&x);
    x.iter().map(|v| v / n).collect()
}

/// Mode list of `ctx` with the coordinate of each generator that
/// [`SigmaSpec::project`] zeroes.
pub fn zeroed_modes(spec: &SigmaSpec) -> Vec<ModeKey> {
    spec.generators.iter().filter_map(|g| g.entries().last().map(|e| e.0)).collect()
}
