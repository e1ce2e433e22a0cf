//! Conjugacy error against the radius, on `Σ` and off it.
//!
//! `cargo run --release --example conjugacy_scaling -- [seed] [D]`

use resonant_nf::builders::build_example_dim6;
use resonant_nf::normalform::{normalize, KamConfig};
use resonant_nf::resonance::enumerate_resonance;
use resonant_nf::verify::{conjugacy_scaling, unit_direction, FlowConfig, SigmaSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse())?;
    let d: u32 = args.next().map_or(Ok(6), |s| s.parse())?;

    let (w, model) = build_example_dim6(2f64.sqrt(), 3f64.sqrt(), seed, d)?;
    let module = enumerate_resonance(w.ctx(), &model)?;
    let res = normalize(&w, &model, &module, &KamConfig::default())?;
    println!("seed {seed}, D = {d}, {} generators, M* = {}", res.log.len(), res.field.m_star);

    let sigma = SigmaSpec::from_module(&module);
    let cfg = FlowConfig { steps: 200, horizon: 1.0, ..FlowConfig::default() };
    let rhos = [0.05, 0.025, 0.0125];
    let on = unit_direction(w.ctx(), seed, Some(&sigma));
    let off = unit_direction(w.ctx(), seed, None);
    for (label, dir) in [("on-sigma", on), ("off-sigma", off)] {
        let t = conjugacy_scaling(label, &w, &res.log, &model, &dir, &rhos, &cfg)?;
        println!("{label}: slope {:.3}", t.slope);
        print!("{}", t.to_csv());
    }
    Ok(())
}
