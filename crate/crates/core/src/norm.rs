//! Certified upper and sampled lower bounds for the weighted majorant norm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::index::weight_c;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub upper: f64,
    pub lower: f64,
    pub r: f64,
    pub s: f64,
}

/// Number of random directions tried for the lower bound.
pub const NORM_SAMPLES: usize = 64;

/// Bounds for the norm of `x` with weights `c^{(k)}_{r,s}`.
///
/// `upper = sqrt(Σ_k (Σ_q |X_q^{(k)}| c^{(k)}_{r,s}(q))²)`; `lower` evaluates the
/// majorant at coordinate vectors and seeded random nonnegative unit vectors.
pub fn majorant_norm<C: Scalar>(x: &VectorField<C>, r: f64, s: f64) -> Result<NormReport> {
    if !(r > 0.0) || !(s >= 0.0) {
        return Err(Error::Input(format!("norm needs r > 0 and s >= 0, got r = {r}, s = {s}")));
    }
    let ctx = x.ctx();
    let dim = ctx.dimension();
    let theta = ctx.theta;
    let mut terms = Vec::with_capacity(x.len());
    for ((k, q), c) in x.terms() {
        let w = c.modulus() * weight_c(q, *k, r, s, theta)?;
        let mono: Vec<(usize, u32)> = q.entries().iter().map(|&(h, e)| (ctx.position(h).unwrap(), e)).collect();
        terms.push((ctx.position(*k).unwrap(), mono, w));
    }
    let mut rows = vec![0.0; dim];
    for (k, _, w) in &terms {
        rows[*k] += w;
    }
    let upper = rows.iter().map(|v| v * v).sum::<f64>().sqrt();

    let eval = |y: &[f64]| -> f64 {
        let mut out = vec![0.0; dim];
        for (k, mono, w) in &terms {
            let m: f64 = mono.iter().map(|&(i, e)| y[i].powi(e as i32)).product();
            out[*k] += w * m;
        }
        out.iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    let mut lower = 0.0f64;
    let mut y = vec![0.0; dim];
    for i in 0..dim {
        y.iter_mut().for_each(|v| *v = 0.0);
        y[i] = 1.0;
        lower = lower.max(eval(&y));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f726d);
    for _ in 0..NORM_SAMPLES {
        for v in y.iter_mut() {
            *v = rng.gen::<f64>();
        }
        let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= n);
        lower = lower.max(eval(&y));
    }
    Ok(NormReport { upper, lower: lower.min(upper), r, s })
}
