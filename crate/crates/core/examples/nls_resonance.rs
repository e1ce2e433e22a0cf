//! NLS lattice: resonance module and momentum bookkeeping.
//!
//! `cargo run --example nls_resonance -- [p] [N]`

use resonant_nf::builders::{build_example_nls, default_potential};
use resonant_nf::resonance::enumerate_resonance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let p: u32 = args.next().map_or(Ok(1), |s| s.parse())?;
    let n: u32 = args.next().map_or(Ok(3), |s| s.parse())?;
    let d = 2 * p + 1;

    let (w, model) = build_example_nls(p, &default_potential(n), n, d)?;
    let ctx = *w.ctx();
    let module = enumerate_resonance(&ctx, &model)?;
    println!("p = {p}, N = {n}, D = {d}: {} modes, {} field terms", ctx.dimension(), w.len());
    println!("generators:");
    for g in &module.q_generators {
        println!("  {g}");
    }
    println!("Delta = M: {}", module.delta_equals_m);
    println!("M = {}, bound 2M + M1 = {}, minimal M* = {}", module.m, module.m_star_bound, module.m_star_minimal);

    let broken = w.terms().filter(|((k, q), _)| !ctx.conserves(q, *k)).count();
    println!("terms violating momentum: {broken}");
    let resonant = w.terms().filter(|((k, q), _)| q.degree() > 1 && model.is_resonant(q, *k)).count();
    println!("resonant nonlinear terms: {resonant}");
    Ok(())
}
