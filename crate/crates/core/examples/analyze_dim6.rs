//! Resonance analysis of the six- and four-variable models.
//!
//! `cargo run --example analyze_dim6 -- [D]`

use resonant_nf::builders::{dim6_model, intro4_model};
use resonant_nf::index::TruncationContext;
use resonant_nf::resonance::{enumerate_resonance, ResonanceModule};

fn show(name: &str, m: &ResonanceModule) {
    println!("{name}");
    for g in &m.q_generators {
        println!("  Q  {g}");
    }
    for (k, ps) in &m.p_generators {
        for p in ps {
            println!("  P  {p}   (target {k})");
        }
    }
    println!("  M = {}, M1 = {}, 2M + M1 = {}", m.m, m.m1, m.m_star_bound);
    println!(
        "  minimal M* = {} ({}), window |q| <= {}",
        m.m_star_minimal,
        if m.m_star_certified { "certified" } else { "not certified, raise D" },
        m.window
    );
    println!("  {} module elements, {} resonant pairs", m.module_size, m.resonant_pairs);
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d: u32 = std::env::args().nth(1).map_or(Ok(6), |s| s.parse())?;
    let (z1, z2) = (2f64.sqrt(), 3f64.sqrt());
    let m6 = enumerate_resonance(&TruncationContext::finite(6, d), &dim6_model(z1, z2)?)?;
    show("lambda = (2, 1, z1, -z1, z2, -z2)", &m6);
    let m4 = enumerate_resonance(&TruncationContext::finite(4, d), &intro4_model(z1)?)?;
    show("lambda = (2, 1, z, -z)", &m4);
    Ok(())
}
