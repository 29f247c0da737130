//! Fourier transform of the continuous surface measure on
//! `{x in [0, N]^n : sum x_i^k = lambda}`.
//!
//! Two independent routes: a truncated oscillatory integral over the
//! Lagrange variable with one-dimensional inner integrals (the evaluator
//! used everywhere), and a tensor rule on the simplex after the substitution
//! `y_i = x_i^k`, which turns the normalized measure into a Dirichlet law.

use std::collections::HashMap;
use std::sync::RwLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::arith::e_real;
use crate::error::{domain, Error, Result};
use crate::lattice::SphereSpec;
use crate::quadrature::{Rule, PANEL};
use crate::summation::pairwise_sum;

/// Scale of the transform used inside the main-term multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceNormalization {
    /// Value at the origin equals [`orthant_mass`].
    #[default]
    Mass,
    /// Value at the origin equals 1.
    Unit,
}

/// `Gamma(1 + 1/k)^n / Gamma(n/k)`: the origin value of the unnormalized
/// transform in units of `lambda^(n/k - 1)`.
pub fn orthant_mass(n: usize, k: u32) -> f64 {
    let kf = k as f64;
    gamma(1.0 + 1.0 / kf).powi(n as i32) / gamma(n as f64 / kf)
}

/// Truncation radius for the Lagrange integral, in units where the radius is 1.
///
/// The integrand behaves like `A^n |t|^(-n/k)` times a unit-frequency phase,
/// `A = Gamma(1 + 1/k) (2 pi)^(-1/k)`, so the neglected tail is about
/// `A^n T^(-n/k) / pi`. `T` is chosen to push that below `1e-4` of the origin value.
pub fn default_theta(n: usize, k: u32) -> f64 {
    let kf = k as f64;
    let a = gamma(1.0 + 1.0 / kf) * (2.0 * std::f64::consts::PI).powf(-1.0 / kf);
    let tail = a.powi(n as i32) / (std::f64::consts::PI * orthant_mass(n, k) * 1e-4);
    tail.powf(kf / n as f64).clamp(16.0, 512.0)
}

/// Tolerance of the resolution-doubling check on normalized values.
pub const DOUBLING_TOLERANCE: f64 = 1e-3;

struct Level {
    refine: usize,
    ts: Vec<f64>,
    weights: Vec<Complex64>,
    origin: Complex64,
}

/// Evaluator for the normalized transform, with a concurrent value cache.
pub struct SurfaceTransform {
    n: usize,
    k: u32,
    root: f64,
    reach: f64,
    theta: f64,
    quad_points: usize,
    rule: Rule,
    levels: Vec<Level>,
    cache: RwLock<HashMap<Vec<u64>, Complex64>>,
}

impl std::fmt::Debug for SurfaceTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SurfaceTransform")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("theta", &self.theta)
            .field("quad_points", &self.quad_points)
            .finish_non_exhaustive()
    }
}

impl SurfaceTransform {
    pub fn new(spec: &SphereSpec, theta: f64, quad_points: usize) -> Result<Self> {
        if spec.n <= spec.k as usize {
            return domain(format!(
                "surface transform needs n > k for an absolutely convergent integral, got n={} k={}",
                spec.n, spec.k
            ));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return domain(format!("truncation radius must be positive, got {theta}"));
        }
        if quad_points < 64 {
            return domain(format!("quad_points must be >= 64, got {quad_points}"));
        }
        let root = (spec.lambda as f64).powf(1.0 / spec.k as f64);
        let mut this = Self {
            n: spec.n,
            k: spec.k,
            root,
            reach: spec.big_n as f64 / root,
            theta,
            quad_points,
            rule: Rule::legendre(PANEL),
            levels: Vec::new(),
            cache: RwLock::new(HashMap::new()),
        };
        let zero = vec![0.0; spec.n];
        for refine in [1, 2] {
            let cycles = spec.n as f64 * this.reach.powi(spec.k as i32) + 1.0;
            let panels = quad_points.div_ceil(PANEL).max((theta * cycles).ceil() as usize) * refine;
            let (ts, ws) = this.rule.composite(-theta, theta, panels);
            let weights = ts.iter().zip(&ws).map(|(&t, &w)| e_real(-t) * w).collect();
            let mut level = Level { refine, ts, weights, origin: Complex64::new(0.0, 0.0) };
            level.origin = this.integral(&level, &zero);
            this.levels.push(level);
        }
        Ok(this)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn quad_points(&self) -> usize {
        self.quad_points
    }

    /// `lambda^(1/k)`, the factor converting frequencies to the unit-radius scale.
    pub fn root(&self) -> f64 {
        self.root
    }

    /// `int_0^c e(t u^k + z u) du` with `c = N / lambda^(1/k)`.
    fn inner(&self, refine: usize, t: f64, z: f64) -> Complex64 {
        let cycles = t.abs() * self.reach.powi(self.k as i32) + z.abs() * self.reach;
        let panels = self.quad_points.div_ceil(PANEL).max((cycles / 2.0).ceil() as usize + 1) * refine;
        let (us, ws) = self.rule.composite(0.0, self.reach, panels);
        let k = self.k as i32;
        let terms: Vec<Complex64> = us.iter().zip(&ws).map(|(&u, &w)| e_real(t * u.powi(k) + z * u) * w).collect();
        pairwise_sum(&terms)
    }

    fn integral(&self, level: &Level, zs: &[f64]) -> Complex64 {
        let terms: Vec<Complex64> = level
            .ts
            .par_iter()
            .zip(&level.weights)
            .map(|(&t, &w)| {
                let mut seen: Vec<(f64, Complex64)> = Vec::with_capacity(zs.len());
                let mut prod = w;
                for &z in zs {
                    let v = match seen.iter().find(|(s, _)| *s == z) {
                        Some(&(_, v)) => v,
                        None => {
                            let v = self.inner(level.refine, t, z);
                            seen.push((z, v));
                            v
                        }
                    };
                    prod *= v;
                }
                prod
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// Normalized transform at `zeta`, checked against the doubled resolution.
    pub fn evaluate(&self, zeta: &[f64]) -> Result<Complex64> {
        if zeta.len() != self.n {
            return domain(format!("frequency has {} coordinates, expected {}", zeta.len(), self.n));
        }
        if zeta.iter().any(|z| !z.is_finite()) {
            return domain("frequency must be finite");
        }
        if zeta.iter().all(|&z| z == 0.0) {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let key: Vec<u64> = zeta.iter().map(|z| z.to_bits()).collect();
        if let Some(v) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let zs: Vec<f64> = zeta.iter().map(|z| z * self.root).collect();
        let values: Vec<Complex64> = self.levels.iter().map(|l| self.integral(l, &zs) / l.origin).collect();
        let change = (values[1] - values[0]).norm();
        if change > DOUBLING_TOLERANCE {
            return Err(Error::Convergence {
                coarse: format!("{}", values[0]),
                fine: format!("{}", values[1]),
                change,
            });
        }
        self.cache.write().expect("cache lock").insert(key, values[1]);
        Ok(values[1])
    }

    /// Nodes, weights (with the `e(-t)` phase folded in) and origin value of the base resolution.
    pub(crate) fn base_nodes(&self) -> (&[f64], &[Complex64], Complex64) {
        let l = &self.levels[0];
        (&l.ts, &l.weights, l.origin)
    }

    /// Inner integral at the base resolution, for frequency `xi` on the original scale.
    pub(crate) fn base_factor(&self, t: f64, xi: f64) -> Complex64 {
        self.inner(1, t, xi * self.root)
    }
}

/// One-shot normalized transform; builds a fresh evaluator.
pub fn surface_ft(spec: &SphereSpec, theta: f64, quad_points: usize, zeta: &[f64]) -> Result<Complex64> {
    SurfaceTransform::new(spec, theta, quad_points)?.evaluate(zeta)
}

/// Tensor rule for expectations over the normalized surface measure.
///
/// Stick-breaking with `u_j = B_j^(1/k)`, `B_j ~ Beta(1/k, (n-1-j)/k)`; the
/// density of `u_j` is proportional to `(1 - u^k)^(beta_j - 1)` and the
/// algebraic endpoint factor is absorbed into a Gauss-Jacobi weight.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    n: usize,
    k: u32,
    levels: Vec<Vec<(f64, f64)>>,
}

impl SimplexRule {
    pub fn new(n: usize, k: u32, nodes: usize) -> Self {
        assert!(n >= 2 && k >= 1 && nodes >= 1);
        let kf = k as f64;
        let levels = (0..n - 1)
            .map(|j| {
                let beta = (n - 1 - j) as f64 / kf;
                let rule = Rule::jacobi(nodes, beta - 1.0, 0.0);
                let raw: Vec<(f64, f64)> = rule
                    .mapped(0.0, 1.0)
                    .map(|(u, w)| {
                        let s: f64 = (0..k).map(|m| u.powi(m as i32)).sum();
                        (u, w * s.powf(beta - 1.0))
                    })
                    .collect();
                let total: f64 = raw.iter().map(|p| p.1).sum();
                raw.into_iter().map(|(u, w)| (u, w / total)).collect()
            })
            .collect();
        Self { n, k, levels }
    }

    /// `E[prod_i factor(i, y_i)]` for `y` drawn from the normalized measure on
    /// the surface of radius `root` (so `sum y_i^k = root^k`).
    pub fn expect<F>(&self, root: f64, factor: &F) -> Complex64
    where
        F: Fn(usize, f64) -> Complex64 + Sync,
    {
        self.level(0, 1.0, root, factor)
    }

    fn level<F>(&self, j: usize, rem: f64, root: f64, factor: &F) -> Complex64
    where
        F: Fn(usize, f64) -> Complex64 + Sync,
    {
        let inv_k = 1.0 / self.k as f64;
        let scale = root * rem.max(0.0).powf(inv_k);
        if j == self.n - 1 {
            return factor(j, scale);
        }
        let node = |&(u, w): &(f64, f64)| {
            let f = factor(j, scale * u);
            if f == Complex64::new(0.0, 0.0) {
                return f;
            }
            f * self.level(j + 1, rem * (1.0 - u.powi(self.k as i32)), root, factor) * w
        };
        let terms: Vec<Complex64> = if j == 0 {
            self.levels[j].par_iter().map(node).collect()
        } else {
            self.levels[j].iter().map(node).collect()
        };
        pairwise_sum(&terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn transform(lambda: u64) -> SurfaceTransform {
        let spec = SphereSpec::new(5, 2, lambda).unwrap();
        SurfaceTransform::new(&spec, default_theta(5, 2), 128).unwrap()
    }

    #[test]
    fn mass_constant() {
        // Gamma(3/2)^5 / Gamma(5/2)
        let g = std::f64::consts::PI.sqrt() / 2.0;
        assert!((orthant_mass(5, 2) - g.powi(5) / (0.75 * std::f64::consts::PI.sqrt())).abs() < 1e-12);
        assert!(orthant_mass(9, 3) > 0.0);
    }

    #[test]
    fn origin_value_matches_mass() {
        for lambda in [293u64, 1000, 2021] {
            let st = transform(lambda);
            let (_, _, origin) = st.base_nodes();
            assert!((origin.re - orthant_mass(5, 2)).abs() < 2e-4 * orthant_mass(5, 2), "{origin}");
            assert!(origin.im.abs() < 1e-6);
        }
        let spec = SphereSpec::new(9, 3, 4000).unwrap();
        let st = SurfaceTransform::new(&spec, default_theta(9, 3), 128).unwrap();
        let (_, _, origin) = st.base_nodes();
        assert!((origin.re / orthant_mass(9, 3) - 1.0).abs() < 2e-4, "{origin}");
    }

    #[test]
    fn spec_examples() {
        let st = transform(1000);
        assert_eq!(st.evaluate(&[0.0; 5]).unwrap(), Complex64::new(1.0, 0.0));
        let z = [0.01, -0.02, 0.005, 0.03, 0.0];
        let v = st.evaluate(&z).unwrap();
        assert!(v.norm() <= 1.0 + 1e-6);
        let minus: Vec<f64> = z.iter().map(|x| -x).collect();
        assert!((st.evaluate(&minus).unwrap() - v.conj()).norm() < 1e-6);
        assert!(st.evaluate(&[0.0; 4]).is_err());
        let low = SphereSpec::new(2, 2, 25).unwrap();
        assert!(matches!(SurfaceTransform::new(&low, 16.0, 128), Err(Error::Domain(_))));
        let spec = SphereSpec::new(5, 2, 1000).unwrap();
        assert!(SurfaceTransform::new(&spec, 16.0, 32).is_err());
        assert!(SurfaceTransform::new(&spec, 0.0, 128).is_err());
    }

    #[test]
    fn agrees_with_simplex_rule() {
        let lambda = 1000u64;
        let st = transform(lambda);
        let rule = SimplexRule::new(5, 2, 24);
        let root = (lambda as f64).sqrt();
        for zeta in [[0.02, 0.0, 0.0, 0.0, 0.0], [0.01, -0.015, 0.02, 0.0, 0.005], [0.05; 5]] {
            let direct = st.evaluate(&zeta).unwrap();
            let dirichlet = rule.expect(root, &|i, y| e_real(zeta[i] * y));
            assert!((direct - dirichlet).norm() < 2e-3, "{zeta:?}: {direct} vs {dirichlet}");
        }
    }

    #[test]
    fn simplex_rule_is_normalized_and_on_surface() {
        let rule = SimplexRule::new(4, 3, 8);
        let one = rule.expect(5.0, &|_, _| Complex64::new(1.0, 0.0));
        assert!((one.re - 1.0).abs() < 1e-12);
        // E[y_1^k] = root^k / n by symmetry
        let m = rule.expect(5.0, &|i, y| Complex64::new(if i == 0 { y.powi(3) } else { 1.0 }, 0.0));
        assert!((m.re - 125.0 / 4.0).abs() < 1e-6, "{m}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn stable_under_doubling(z in prop::collection::vec(-0.5f64..0.5, 5)) {
            // evaluate() fails with a convergence error if doubling moves the value by > 1e-3
            static ST: std::sync::OnceLock<SurfaceTransform> = std::sync::OnceLock::new();
            let st = ST.get_or_init(|| transform(2021));
            let v = st.evaluate(&z).unwrap();
            prop_assert!(v.norm() <= 1.0 + 1e-3);
        }
    }
}
