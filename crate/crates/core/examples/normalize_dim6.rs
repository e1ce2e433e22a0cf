//! Full normalization of a seeded six-variable field, checked against
//! plain degree-by-degree elimination.
//!
//! `cargo run --example normalize_dim6 -- [seed] [D]`

use resonant_nf::builders::build_example_dim6;
use resonant_nf::field::scaling_degree;
use resonant_nf::normalform::{elimination_oracle, normalize, step_bound, KamConfig};
use resonant_nf::resonance::{enumerate_resonance, Ideal};
use resonant_nf::text::field_to_text;
use resonant_nf::verify::{check_tangent_sigma, zeroed_modes, SigmaSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse())?;
    let d: u32 = args.next().map_or(Ok(8), |s| s.parse())?;

    let (w, model) = build_example_dim6(2f64.sqrt(), 3f64.sqrt(), seed, d)?;
    let module = enumerate_resonance(w.ctx(), &model)?;
    let res = normalize(&w, &model, &module, &KamConfig::default())?;
    let m_star = res.field.m_star;
    println!("seed {seed}, D = {d}, M* = {m_star}, {} input terms", w.len());
    println!("prenormalization generators: {}", res.prenormal_steps);
    println!("KAM steps: {} (bound {})", res.kam_steps(), step_bound(d, m_star));
    for r in &res.trace.records {
        println!(
            "  step {}: ord X {:?} -> {:?}, doubling {}, eps {:.3e}, generator terms {}",
            r.step, r.ord_x, r.ord_x_next, r.doubling_ok, r.epsilon, r.generator_terms
        );
    }

    let total = res.field.total()?;
    let oracle = elimination_oracle(&w, &model, &module, m_star)?;
    // linear and Z terms sit in the low ideals by construction; look past M*
    let low = |f: &resonant_nf::VectorField<_>| {
        f.project_set(|_, q| scaling_degree(q) >= m_star && module.classify(q) != Ideal::J2)
    };
    println!("X = 0: {}", res.field.x.is_zero());
    println!("oracle I0 + I1 part past M* zero: {}", low(&oracle).is_zero());
    let zeroed = zeroed_modes(&SigmaSpec::from_module(&module));
    let sigma = |f: &resonant_nf::VectorField<_>| f.project_set(|_, q| q.modes().all(|m| !zeroed.contains(&m)));
    println!("restrictions to Sigma agree: {}", sigma(&total) == sigma(&oracle));
    let t = check_tangent_sigma(&total, &model, &module, m_star);
    println!("tangent to Sigma: {} ({} offending terms)", t.tangent, t.offending.len());
    print!("normal form:\n{}", field_to_text(&total));
    Ok(())
}
