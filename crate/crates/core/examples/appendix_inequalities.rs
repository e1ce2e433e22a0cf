//! Weight inequalities on random momentum-conserving pairs, plus the
//! separation bound on the six-variable scan.
//!
//! `cargo run --release --example appendix_inequalities -- [samples] [seed]`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resonant_nf::builders::dim6_model;
use resonant_nf::diophantine::separation_bound_check;
use resonant_nf::index::{nhat, rearrangement_gap, sample_conserving_pair, weight_c, TruncationContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let samples: usize = args.next().map_or(Ok(10_000), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<_> = (0..samples).map(|_| sample_conserving_pair(&mut rng, 20, 8)).collect();

    let mut balance_bad = 0;
    for (q, k) in &pairs {
        let n = nhat(&q.add_unit(*k))?;
        if n[0] > n[1..].iter().sum::<u32>() {
            balance_bad += 1;
        }
    }
    println!("{samples} pairs, largest weight above the rest: {balance_bad}");

    for theta in [0.25, 0.5, 0.75] {
        let mut min_gap = f64::INFINITY;
        let mut max_ratio = 0.0f64;
        for (q, k) in &pairs {
            min_gap = min_gap.min(rearrangement_gap(q, *k, theta)?);
            let base = weight_c(q, *k, 0.5, 1.0, theta)?;
            max_ratio = max_ratio.max(weight_c(q, *k, 0.5, 1.1, theta)? / base);
        }
        println!("theta {theta}: min gap {min_gap:+.2e}, max ratio c(s + 0.1) / c(s) {max_ratio:.6}");
    }

    let model = dim6_model(2f64.sqrt(), 3f64.sqrt())?;
    let (hits, bad) = separation_bound_check(&model, &TruncationContext::finite(6, 6), 6);
    println!("separation premise on the six-variable scan: {hits} hits, {bad} with |lambda.p| < 1");
    Ok(())
}
