//! Orthonormal Hermite functions φ_n via the stable three-term recurrence.
//!
//! φ_0(u) = π^(-1/4) e^(-u²/2),
//! φ_{n+1}(u) = √(2/(n+1)) u φ_n(u) − √(n/(n+1)) φ_{n-1}(u).
//!
//! The recurrence is run per grid point on a mantissa with a separate log
//! scale. The scale guard keeps the mantissa in a safe range so that the
//! deep tail (where φ_0 underflows but higher orders are still
//! representable) is evaluated correctly for orders up to several hundred.

use nalgebra::DMatrix;
use std::f64::consts::PI;

const MANTISSA_HI: f64 = 1e120;
const MANTISSA_LO: f64 = 1e-120;
const RESCALE: f64 = 1e120;
const LN_RESCALE: f64 = 276.31021115928547; // ln(1e120)

/// Evaluate φ_0..φ_n_max on the points `u`; column n holds φ_n.
pub fn hermite_table(n_max: usize, u: &[f64]) -> DMatrix<f64> {
    let npts = u.len();
    let mut out = DMatrix::<f64>::zeros(npts, n_max + 1);
    let norm0 = PI.powf(-0.25);
    for (j, &x) in u.iter().enumerate() {
        let mut log_scale = -0.5 * x * x;
        let mut p_prev = 0.0f64;
        let mut p_cur = norm0;
        out[(j, 0)] = emit(p_cur, log_scale);
        for n in 0..n_max {
            let a = (2.0 / (n as f64 + 1.0)).sqrt();
            let b = (n as f64 / (n as f64 + 1.0)).sqrt();
            let p_next = a * x * p_cur - b * p_prev;
            p_prev = p_cur;
            p_cur = p_next;
            let mag = p_cur.abs().max(p_prev.abs());
            if mag > MANTISSA_HI {
                p_cur /= RESCALE;
                p_prev /= RESCALE;
                log_scale += LN_RESCALE;
            } else if mag > 0.0 && mag < MANTISSA_LO {
                p_cur *= RESCALE;
                p_prev *= RESCALE;
                log_scale -= LN_RESCALE;
            }
            out[(j, n + 1)] = emit(p_cur, log_scale);
        }
    }
    out
}

fn emit(p: f64, log_scale: f64) -> f64 {
    if log_scale.abs() < 600.0 {
        p * log_scale.exp()
    } else if p == 0.0 {
        0.0
    } else {
        let t = log_scale + p.abs().ln();
        if t < -745.0 {
            0.0
        } else {
            p.signum() * t.exp()
        }
    }
}
