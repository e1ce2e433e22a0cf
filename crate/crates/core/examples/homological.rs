//! Homological equations: the plain divisor solve and the triangular system
//! with a diagonal resonant `Z`.
//!
//! `cargo run --example homological -- [seed]`

use resonant_nf::builders::{build_example_dim6, random_field, RandomFieldSpec};
use resonant_nf::field::bracket;
use resonant_nf::normalform::{
    a_inv_b, decompose, homological_residual, solve_extended_homological, solve_linear_homological,
};
use resonant_nf::resonance::{enumerate_resonance, Ideal};
use resonant_nf::text::field_to_text;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(7), |s| s.parse())?;
    let (w, model) = build_example_dim6(2f64.sqrt(), 3f64.sqrt(), seed, 6)?;
    let ctx = *w.ctx();
    let module = enumerate_resonance(&ctx, &model)?;
    let d = decompose(&w, &model, &module, module.m_star_minimal)?;

    // plain equation on a random non-resonant field
    let spec = RandomFieldSpec { terms: 6, min_order: 1, max_order: 6, max_num: 5, max_den: 3 };
    let y = random_field(&ctx, seed, &spec, |k, q| !model.is_resonant(q, k))?;
    let x = solve_linear_homological(&y, &model)?;
    println!("[D(lambda), L^-1 Y] == Y: {}", bracket(&d.linear, &x)? == y);
    print!("L^-1 Y =\n{}", field_to_text(&x));

    // triangular system with the Z of the built field
    println!("Z has {} terms", d.z.len());
    let [x0, x1, _] = module.split_ideals(&y.project_set(|_, q| q.degree() >= 2));
    let x0 = module.project_ideal(&x0, Ideal::J0);
    let f0 = solve_extended_homological(&x0, 0, &d.z, &d.n, None, &model, &module)?;
    let f1 = solve_extended_homological(&x1, 1, &d.z, &d.n, Some(&f0), &model, &module)?;
    let dd = resonant_nf::normalform::DecomposedField { x: x0.add(&x1)?, ..d.clone() };
    println!("I0 residual zero: {}", homological_residual(&dd, &f0, None, &module)?.is_zero());
    println!("I1 residual zero: {}", homological_residual(&dd, &f0, Some(&f1), &module)?.is_zero());
    for (i, v) in [(0u8, &x0), (1, &x1)] {
        let once = a_inv_b(v, &d.z, i, &model, &module)?;
        let twice = a_inv_b(&once, &d.z, i, &model, &module)?;
        println!("I{i}: A^-1 B has {} terms, (A^-1 B)^2 zero: {}", once.len(), twice.is_zero());
    }
    Ok(())
}
