//! Diophantine audit over the truncation window, and the small-divisor
//! weight audit.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frequency::FrequencyModel;
use crate::index::{weight_excess, ModeKey, MultiIndex, SignedIndex, TruncationContext};
use crate::resonance::{monomials, ResonanceModule};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiophantineReport {
    pub tau: f64,
    /// `min_p |λ·p| Π (1 + p_i² <i>²)^τ`; `None` when nothing was enumerated.
    pub gamma_max: Option<f64>,
    pub worst_p: Option<String>,
    pub enumerated_count: usize,
    /// Vectors skipped because `λ·p = 0`.
    pub excluded_resonant: usize,
    /// Vectors whose exact classification disagrees with the generators.
    pub classification_mismatches: usize,
    pub fast_path: bool,
    pub fast_path_skips: usize,
    /// Vectors meeting the separation premise.
    pub premise_hits: usize,
    /// Premise hits with `|λ·p| < 1`.
    pub premise_violations: usize,
    pub degree_bound: u32,
    pub mode_cutoff: u32,
    pub reference_deviation: Option<f64>,
}

/// `Π_i (1 + p_i² <i>²)^τ`.
pub fn diophantine_weight(p: &SignedIndex, tau: f64) -> f64 {
    p.entries()
        .iter()
        .map(|&(k, e)| {
            let w = k.weight() as f64;
            (1.0 + (e as f64 * w).powi(2)).powf(tau)
        })
        .product()
}

/// Every signed `p ≠ 0` with `‖p‖ <= degree_bound`, `p + e_k >= 0` for some
/// `k`, support in `ctx`, and zero momentum when enabled. Canonical order.
pub fn enumerate_shifted(ctx: &TruncationContext, degree_bound: u32) -> Vec<SignedIndex> {
    let modes = ctx.modes();
    let mut out = Vec::new();
    for q in monomials(&modes, 0, degree_bound) {
        if q.is_zero() {
            continue;
        }
        out.push(q.to_signed());
        if q.degree() < degree_bound {
            for &k in &modes {
                if q.get(k) == 0 {
                    out.push(q.minus_unit(k));
                }
            }
        }
    }
    if ctx.momentum {
        out.retain(|p| p.raw_momentum() == 0);
    }
    out
}

fn reference_dot(model: &FrequencyModel, p: &SignedIndex) -> Option<f64> {
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for &(k, e) in p.entries() {
        acc += model.reference_value(k)? * e as f64;
    }
    Some(acc.norm())
}

/// Scan the window for the largest admissible `γ` at exponent `τ`.
///
/// With `fast_path`, a vector meeting the separation premise is skipped when
/// its weight alone already reaches the running minimum, since `|λ·p| >= 1`.
pub fn diophantine_audit(
    model: &FrequencyModel,
    ctx: &TruncationContext,
    tau: f64,
    degree_bound: u32,
    module: &ResonanceModule,
    fast_path: bool,
) -> Result<DiophantineReport> {
    model.check_context(ctx)?;
    if !(tau >= 0.0) {
        return Err(Error::Input(format!("tau must be nonnegative, got {tau}")));
    }
    let deviation = model.reference_deviation(ctx);
    let premise_usable = deviation.is_some_and(|d| d <= 0.5);
    let mut rep = DiophantineReport {
        tau,
        gamma_max: None,
        worst_p: None,
        enumerated_count: 0,
        excluded_resonant: 0,
        classification_mismatches: 0,
        fast_path,
        fast_path_skips: 0,
        premise_hits: 0,
        premise_violations: 0,
        degree_bound,
        mode_cutoff: ctx.mode_cutoff(),
        reference_deviation: deviation,
    };
    let mut best = f64::INFINITY;
    for p in enumerate_shifted(ctx, degree_bound) {
        let resonant = model.dot_is_zero(&p);
        // only trust the generators inside the window they were computed on
        if p.l1() < module.window && resonant != module.contains_delta(&p) {
            rep.classification_mismatches += 1;
        }
        if resonant {
            rep.excluded_resonant += 1;
            continue;
        }
        rep.enumerated_count += 1;
        let premise = premise_usable
            && reference_dot(model, &p)
                .is_some_and(|v| v >= 2.0 * p.entries().iter().map(|e| e.1.abs() as f64).sum::<f64>());
        if premise {
            rep.premise_hits += 1;
            // |λ·p| >= 1, so the product is at least the weight alone
            if fast_path && best <= diophantine_weight(&p, tau) {
                rep.fast_path_skips += 1;
                continue;
            }
        }
        let d = model.dot_float(&p).norm();
        if premise && d < 1.0 {
            rep.premise_violations += 1;
        }
        let v = d * diophantine_weight(&p, tau);
        if v < best {
            best = v;
            rep.worst_p = Some(p.to_string());
        }
    }
    if best.is_finite() {
        rep.gamma_max = Some(best);
    }
    Ok(rep)
}

/// Check of the separation bound alone: every enumerated `p` meeting the
/// premise has `|λ·p| >= 1`. Returns `(hits, violations)`.
pub fn separation_bound_check(model: &FrequencyModel, ctx: &TruncationContext, degree_bound: u32) -> (usize, usize) {
    let usable = model.reference_deviation(ctx).is_some_and(|d| d <= 0.5);
    if !usable {
        return (0, 0);
    }
    let mut hits = 0;
    let mut bad = 0;
    for p in enumerate_shifted(ctx, degree_bound) {
        let l1: f64 = p.entries().iter().map(|e| e.1.abs() as f64).sum();
        if reference_dot(model, &p).is_some_and(|v| v >= 2.0 * l1) {
            hits += 1;
            if model.dot_float(&p).norm() < 1.0 {
                bad += 1;
            }
        }
    }
    (hits, bad)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightAuditReport {
    pub delta: f64,
    pub evaluated: usize,
    pub max_value: f64,
    pub argmax: Option<String>,
    /// `max_value · e^{-c/δ⁶}`.
    pub implied_constant: f64,
    /// `(|q|, max over that shell)`.
    pub shell_maxima: Vec<(u32, f64)>,
    /// The largest shell maximum sits on the last shell scanned.
    pub peak_at_window_edge: bool,
    pub case0_checked: usize,
    pub case0_violations: usize,
    pub passed: bool,
}

/// Options for [`smalldivisor_weight_audit`].
#[derive(Clone, Debug)]
pub struct WeightAuditConfig {
    pub delta: f64,
    /// Maximum number of pairs evaluated, in canonical order.
    pub sample_budget: usize,
    /// Constant `c` in the implied bound.
    pub c: f64,
    /// `(γ, τ)` for the pointwise check on pairs supported on `|j| <= 1`.
    pub case0: Option<(f64, f64)>,
}

/// Largest `e^{-δ(Σ <h>^θ q_h - <k>^θ)} / |λ·q - λ_k|` over non-resonant,
/// momentum-conserving `(q, k)` with `2 <= |q| <= D + 1`.
pub fn smalldivisor_weight_audit(
    model: &FrequencyModel,
    ctx: &TruncationContext,
    cfg: &WeightAuditConfig,
) -> Result<WeightAuditReport> {
    model.check_context(ctx)?;
    if !(cfg.delta > 0.0) {
        return Err(Error::Input(format!("delta must be positive, got {}", cfg.delta)));
    }
    let modes = ctx.modes();
    let window = ctx.degree_cutoff + 1;
    let mut rep = WeightAuditReport {
        delta: cfg.delta,
        evaluated: 0,
        max_value: 0.0,
        argmax: None,
        implied_constant: 0.0,
        shell_maxima: Vec::new(),
        peak_at_window_edge: false,
        case0_checked: 0,
        case0_violations: 0,
        passed: false,
    };
    'outer: for d in 2..=window {
        let mut shell_max = 0.0f64;
        for q in monomials(&modes, d, d) {
            for &k in &modes {
                if !ctx.conserves(&q, k) || model.is_resonant(&q, k) {
                    continue;
                }
                if rep.evaluated >= cfg.sample_budget {
                    if shell_max > 0.0 {
                        rep.shell_maxima.push((d, shell_max));
                    }
                    break 'outer;
                }
                rep.evaluated += 1;
                let p = q.minus_unit(k);
                let div = model.dot_float(&p).norm();
                let v = (-cfg.delta * weight_excess(&q, k, ctx.theta)).exp() / div;
                if v > shell_max {
                    shell_max = v;
                }
                if v > rep.max_value {
                    rep.max_value = v;
                    rep.argmax = Some(crate::field::term_label(k, &q));
                }
                if let Some((gamma, tau)) = cfg.case0 {
                    if is_case0(&q, k) {
                        rep.case0_checked += 1;
                        let n = q.degree() as f64;
                        let pointwise = (-cfg.delta * (n - 1.0)).exp() * diophantine_weight(&p, tau) / gamma;
                        let closed = (-cfg.delta * n / 2.0).exp() * n.powf(12.0 * tau) / gamma;
                        let slack = 1.0 + 1e-12;
                        if v > pointwise * slack || v > closed * slack {
                            rep.case0_violations += 1;
                        }
                    }
                }
            }
        }
        rep.shell_maxima.push((d, shell_max));
    }
    rep.implied_constant = rep.max_value * (-cfg.c / cfg.delta.powi(6)).exp();
    let peak = rep.shell_maxima.iter().cloned().fold((0, 0.0f64), |a, b| if b.1 > a.1 { b } else { a });
    rep.peak_at_window_edge = rep.shell_maxima.len() > 1 && rep.shell_maxima.last().is_some_and(|l| l.0 == peak.0);
    rep.passed = rep.max_value.is_finite() && !rep.peak_at_window_edge && rep.case0_violations == 0;
    Ok(rep)
}

/// Every mode of `q + e_k` has `|j| <= 1`.
fn is_case0(q: &MultiIndex, k: ModeKey) -> bool {
    k.weight() == 1 && q.modes().all(|h| h.weight() == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::ModeKey;

    #[test]
    fn shifted_enumeration_counts() {
        // two modes, bound 2: nonnegative 2 + 3, shifted 2 + 2 (one unit, other -1)
        let ctx = TruncationContext::finite(2, 3);
        let all = enumerate_shifted(&ctx, 2);
        let i1 = ModeKey::index(1);
        let i2 = ModeKey::index(2);
        assert!(all.contains(&SignedIndex::from_pairs([(i1, 1), (i2, -1)])));
        assert!(!all.contains(&SignedIndex::from_pairs([(i1, 2), (i2, -1)])));
        assert!(!all.contains(&SignedIndex::from_pairs([(i1, -1), (i2, -1)])));
        assert_eq!(all.len(), 2 + 3 + 2);
    }

    #[test]
    fn diophantine_weight_values() {
        let p = SignedIndex::from_pairs([(ModeKey::index(2), -1)]);
        // (1 + 4)^2
        assert_eq!(diophantine_weight(&p, 2.0), 25.0);
    }
}
