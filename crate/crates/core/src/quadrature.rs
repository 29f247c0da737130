//! Composite Gauss rules on top of the node/weight tables from `gauss-quad`.

use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};

/// Nodes and weights of a rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Nodes per panel of the composite Legendre rules.
pub const PANEL: usize = 16;

impl Rule {
    pub fn legendre(degree: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(degree).expect("degree >= 1"));
        let (nodes, weights) = rule.iter().map(|(x, w)| (*x, *w)).unzip();
        Self { nodes, weights }
    }

    /// Weight `(1 - x)^alpha (1 + x)^beta`.
    pub fn jacobi(degree: usize, alpha: f64, beta: f64) -> Self {
        let alpha = FiniteAboveNegOneF64::new(alpha).expect("alpha > -1");
        let beta = FiniteAboveNegOneF64::new(beta).expect("beta > -1");
        let rule = GaussJacobi::new(NonZeroUsize::new(degree).expect("degree >= 1"), alpha, beta);
        let (nodes, weights) = rule.iter().map(|(x, w)| (*x, *w)).unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// `panels` equal copies of this rule over `[a, b]`.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut xs = Vec::with_capacity(panels * self.len());
        let mut ws = Vec::with_capacity(panels * self.len());
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for (x, w) in self.mapped(lo, lo + h) {
                xs.push(x);
                ws.push(w);
            }
        }
        (xs, ws)
    }
}
