//! Fixed-step RK4 for complex polynomial fields.
//!
//! A complex state of dimension n is integrated directly in `Complex64`;
//! RK4 is linear in the state increments, so this is the same scheme as on
//! the real system of dimension 2n.
//!
//! State updates use compensated summation: increments are many orders of
//! magnitude below the state near the origin, and plain `+=` would leave a
//! roundoff floor well above the truncation errors being measured.

use num_complex::Complex64;

use crate::field::CompiledField;

/// One classical RK4 step of size `h` for `x' = f(x)`.
pub fn rk4_step(f: &CompiledField, x: &mut [Complex64], h: f64, scratch: &mut Rk4Scratch) {
    let n = x.len();
    let Rk4Scratch { k1, k2, k3, k4, tmp, comp } = scratch;
    f.eval_into(x, k1);
    for i in 0..n {
        tmp[i] = x[i] + k1[i] * (h / 2.0);
    }
    f.eval_into(tmp, k2);
    for i in 0..n {
        tmp[i] = x[i] + k2[i] * (h / 2.0);
    }
    f.eval_into(tmp, k3);
    for i in 0..n {
        tmp[i] = x[i] + k3[i] * h;
    }
    f.eval_into(tmp, k4);
    for i in 0..n {
        kahan_add(&mut x[i], &mut comp[i], (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0));
    }
}

/// `x += d`, carrying the lost low-order bits in `comp`.
pub fn kahan_add(x: &mut Complex64, comp: &mut Complex64, d: Complex64) {
    let y = d - *comp;
    let t = *x + y;
    *comp = (t - *x) - y;
    *x = t;
}

/// Work buffers for [`rk4_step`]; also holds the summation compensation, so
/// use one per trajectory.
pub struct Rk4Scratch {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
    comp: Vec<Complex64>,
}

impl Rk4Scratch {
    pub fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Rk4Scratch { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z.clone(), comp: z }
    }
}

/// State at time `t` after `steps` equal steps. `None` if the norm passes `blowup`.
pub fn integrate(f: &CompiledField, x0: &[Complex64], t: f64, steps: usize, blowup: f64) -> Option<Vec<Complex64>> {
    let mut x = x0.to_vec();
    if steps == 0 || t == 0.0 {
        return Some(x);
    }
    let h = t / steps as f64;
    let mut s = Rk4Scratch::new(x.len());
    for _ in 0..steps {
        rk4_step(f, &mut x, h, &mut s);
        if !(norm(&x) <= blowup) {
            return None;
        }
    }
    Some(x)
}

pub fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}
