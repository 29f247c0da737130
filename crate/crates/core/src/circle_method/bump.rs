//! Smooth cutoff equal to 1 on `[-1, 1]` and supported in `[-2, 2]`.

use std::f64::consts::PI;

use crate::quadrature::{Rule, PANEL};

fn transition(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// One-dimensional profile `eta`.
pub fn eta(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let up = transition(2.0 - a);
        up / (up + transition(a - 1.0))
    }
}

/// The profile together with its tensor products, dilations and Fourier transform.
#[derive(Debug, Clone)]
pub struct BumpFunction {
    rule: Rule,
    /// `(t, w eta(t))` on the shoulder `[1, 2]` for the base panel count.
    shoulder: Vec<(f64, f64)>,
}

const BASE_PANELS: usize = 4;

impl Default for BumpFunction {
    fn default() -> Self {
        let rule = Rule::legendre(PANEL);
        let (ts, ws) = rule.composite(1.0, 2.0, BASE_PANELS);
        let shoulder = ts.iter().zip(&ws).map(|(&t, &w)| (t, w * eta(t))).collect();
        Self { rule, shoulder }
    }
}

impl BumpFunction {
    pub fn profile(&self, t: f64) -> f64 {
        eta(t)
    }

    /// `psi(x) = prod_i eta(x_i)`.
    pub fn tensor(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| eta(t)).product()
    }

    /// `psi_t(x) = psi(t x)`.
    pub fn scaled(&self, t: f64, x: &[f64]) -> f64 {
        x.iter().map(|&v| eta(t * v)).product()
    }

    /// `eta_hat(y) = int eta(t) e(-y t) dt`, real and even.
    pub fn transform(&self, y: f64) -> f64 {
        let y = y.abs();
        let plateau = if y < 1e-12 { 2.0 } else { (2.0 * PI * y).sin() / (PI * y) };
        let panels = (2.0 * y).ceil() as usize;
        let shoulder: f64 = if panels <= BASE_PANELS {
            self.shoulder.iter().map(|&(t, w)| w * (2.0 * PI * y * t).cos()).sum()
        } else {
            let (ts, ws) = self.rule.composite(1.0, 2.0, panels);
            ts.iter().zip(&ws).map(|(&t, &w)| w * eta(t) * (2.0 * PI * y * t).cos()).sum()
        };
        plateau + 2.0 * shoulder
    }
}
