//! Mixed elliptic and hyperbolic lattice: normal form, then a short flow
//! started on the resonant set.
//!
//! `cargo run --release --example hyperbolic_flow -- [seed]`

use num_complex::Complex64;
use resonant_nf::builders::{build_example_hyperbolic, default_potential, Kind};
use resonant_nf::normalform::{normalize, KamConfig};
use resonant_nf::resonance::enumerate_resonance;
use resonant_nf::verify::{check_tangent_sigma, integrate_flow, unit_direction, FlowConfig, SigmaSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(2), |s| s.parse())?;
    let kinds = |j: i32| if j == 0 { Kind::Elliptic } else { Kind::Hyperbolic };
    let (w, model) = build_example_hyperbolic(&default_potential(1), 1, 4, seed, &kinds)?;
    let ctx = *w.ctx();
    let module = enumerate_resonance(&ctx, &model)?;
    for k in ctx.modes() {
        println!("lambda {k} = {}", model.lambda_float(k));
    }
    println!("generators: {:?}", module.q_generators.iter().map(|g| g.to_string()).collect::<Vec<_>>());
    println!("minimal M* = {}", module.m_star_minimal);

    let res = normalize(&w, &model, &module, &KamConfig::default())?;
    let nf = res.field.total()?;
    println!("{} KAM steps, {} terms in the normal form", res.kam_steps(), nf.len());
    let t = check_tangent_sigma(&nf, &model, &module, res.field.m_star);
    println!("tangent to Sigma: {}", t.tangent);

    let sigma = SigmaSpec::from_module(&module);
    let x0: Vec<Complex64> = unit_direction(&ctx, seed, Some(&sigma)).iter().map(|z| z * 0.05).collect();
    let traj = integrate_flow(&nf, &x0, &FlowConfig { steps: 400, horizon: 2.0, ..FlowConfig::default() })?;
    for (t, x) in traj.times.iter().zip(&traj.states).step_by(100) {
        let r: Vec<String> = x.iter().map(|z| format!("{:.2e}", z.norm())).collect();
        println!("t = {t:.2}  |x| = [{}]", r.join(", "));
    }
    println!("diverged: {}, error estimate {:.2e}", traj.diverged, traj.error_estimate);
    Ok(())
}
