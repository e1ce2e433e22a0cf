//! Diophantine constant over the window, with and without the separation
//! shortcut, followed by the small-divisor weight audit on an NLS lattice.
//!
//! `cargo run --release --example diophantine_audit -- [tau] [degree]`

use resonant_nf::builders::{build_example_nls, default_potential, dim6_model};
use resonant_nf::diophantine::{diophantine_audit, smalldivisor_weight_audit, WeightAuditConfig};
use resonant_nf::index::TruncationContext;
use resonant_nf::resonance::enumerate_resonance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let tau: f64 = args.next().map_or(Ok(2.0), |s| s.parse())?;
    let degree: u32 = args.next().map_or(Ok(6), |s| s.parse())?;

    let model = dim6_model(2f64.sqrt(), 3f64.sqrt())?;
    let ctx = TruncationContext::finite(6, degree);
    let module = enumerate_resonance(&ctx, &model)?;
    let fast = diophantine_audit(&model, &ctx, tau, degree, &module, true)?;
    let brute = diophantine_audit(&model, &ctx, tau, degree, &module, false)?;
    println!("tau = {tau}, |p| <= {degree}");
    println!("  gamma_max  fast {:?}  brute {:?}", fast.gamma_max, brute.gamma_max);
    println!("  attained at {}", brute.worst_p.as_deref().unwrap_or("-"));
    println!(
        "  {} vectors, {} resonant excluded, {} skipped by the shortcut, {} classification mismatches",
        brute.enumerated_count, brute.excluded_resonant, fast.fast_path_skips, brute.classification_mismatches
    );
    println!("  separation premise: {} hits, {} violations", brute.premise_hits, brute.premise_violations);

    let (w, nls) = build_example_nls(1, &default_potential(3), 3, 3)?;
    let cfg = WeightAuditConfig { delta: 0.5, sample_budget: 200_000, c: 1.0, case0: Some((0.01, tau)) };
    let rep = smalldivisor_weight_audit(&nls, w.ctx(), &cfg)?;
    println!("NLS weight audit, delta = {}", rep.delta);
    println!("  {} pairs, max {:.4e} at {}", rep.evaluated, rep.max_value, rep.argmax.as_deref().unwrap_or("-"));
    for (d, m) in &rep.shell_maxima {
        println!("  |q| = {d}: {m:.4e}");
    }
    println!("  peak at window edge: {}, passed: {}", rep.peak_at_window_edge, rep.passed);
    Ok(())
}
