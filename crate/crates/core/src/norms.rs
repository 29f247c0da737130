//! Operator-norm endpoints, interpolation brackets and power-law fits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle_method::MultiplierModel;
use crate::error::{domain, Error, Result};
use crate::operators::{lp_norm, prime_average, LatticeFunction, SphericalMeasure};

/// Exact `l^1 -> l^inf` norm of the prime average: the largest atom.
pub fn endpoint_1_inf(measure: &SphericalMeasure) -> f64 {
    measure.sup()
}

/// Grid sups of the raw and error multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoint22 {
    /// `l^2 -> l^2` norm of the prime average (sup of `|raw|`).
    pub raw_sup: f64,
    /// Grid sup of `|error|`, the `l^2 -> l^2` norm of the error operator.
    pub error_sup: f64,
    pub grid: usize,
    pub overlap: bool,
}

const GRID_LIMIT: f64 = 2e6;

/// Scans `xi = l / grid` over `[0,1)^n`.
pub fn endpoint_2_2(model: &MultiplierModel, grid: usize) -> Result<Endpoint22> {
    let n = model.spec().n;
    if grid == 0 {
        return domain("grid resolution must be >= 1");
    }
    let total = (grid as f64).powi(n as i32);
    if total > GRID_LIMIT {
        return Err(Error::Resource(format!("{total} grid points exceed the limit {GRID_LIMIT}")));
    }
    let mut idx = vec![0usize; n];
    let (mut raw_sup, mut error_sup) = (0f64, 0f64);
    loop {
        let xi: Vec<f64> = idx.iter().map(|&l| l as f64 / grid as f64).collect();
        let t = model.triple(&xi)?;
        raw_sup = raw_sup.max(t.raw.norm());
        error_sup = error_sup.max(t.error.norm());
        let mut i = 0;
        loop {
            if i == n {
                return Ok(Endpoint22 { raw_sup, error_sup, grid, overlap: model.params().overlap });
            }
            idx[i] += 1;
            if idx[i] < grid {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&p) {
        return domain(format!("p must lie in [1, 2], got {p}"));
    }
    Ok(())
}

/// `p' = p / (p - 1)`, infinite at `p = 1`.
pub fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// `norm_1_inf^(2/p - 1) norm_2_2^(2 - 2/p)`.
pub fn riesz_thorin_bound(norm_1_inf: f64, norm_2_2: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(norm_1_inf > 0.0 && norm_2_2 > 0.0) {
        return domain("endpoint norms must be positive");
    }
    Ok(norm_1_inf.powf(2.0 / p - 1.0) * norm_2_2.powf(2.0 - 2.0 / p))
}

/// `||A delta_0||_{p'} / ||delta_0||_p = ||sigma||_{p'}`.
pub fn delta_lower_bound(measure: &SphericalMeasure, p: f64) -> Result<f64> {
    check_p(p)?;
    lp_norm(&measure.as_function(), dual_exponent(p))
}

const PROBE_LIMIT: f64 = 2e7;

/// `||A 1_B||_{p'} / ||1_B||_p` for the box `B = [0, side]^n`.
pub fn box_lower_bound(measure: &SphericalMeasure, side: u64, p: f64) -> Result<f64> {
    Ok(box_lower_bounds(measure, side, &[p])?[0])
}

/// [`box_lower_bound`] for several exponents, averaging the box once.
pub fn box_lower_bounds(measure: &SphericalMeasure, side: u64, ps: &[f64]) -> Result<Vec<f64>> {
    ps.iter().try_for_each(|&p| check_p(p))?;
    let n = measure.spec().n;
    let work = ((side + 1) as f64).powi(n as i32) * measure.masses().len() as f64;
    if work > PROBE_LIMIT {
        return Err(Error::Resource(format!("box probe of side {side} needs {work:.2e} terms")));
    }
    let f = LatticeFunction::box_indicator(n, 0, side as i64);
    let out = prime_average(measure, &f)?;
    ps.iter().map(|&p| Ok(lp_norm(&out, dual_exponent(p))? / lp_norm(&f, p)?)).collect()
}

/// Fitted `log v = log_c + alpha log(lambda) + beta log log(lambda)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub log_c: f64,
    pub rms: f64,
    pub n_samples: usize,
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
}

pub fn fit_power_law(samples: &[(f64, f64)], with_log: bool) -> Result<RateFit> {
    if samples.len() < 4 {
        return Err(Error::InsufficientData(format!("{} samples, need at least 4", samples.len())));
    }
    let floor = if with_log { 1.0 } else { 0.0 };
    for &(l, v) in samples {
        if !(v.is_finite() && v > 0.0) {
            return domain(format!("value at lambda = {l} must be positive, got {v}"));
        }
        if !(l.is_finite() && l > floor) {
            return domain(format!("lambda must exceed {floor}, got {l}"));
        }
    }
    let mut sorted: Vec<f64> = samples.iter().map(|s| s.0).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return domain("lambda values must be distinct");
    }
    let cols = if with_log { 3 } else { 2 };
    let m = samples.len();
    let design = DMatrix::from_fn(m, cols, |i, j| {
        let l = samples[i].0.ln();
        match j {
            0 => 1.0,
            1 => l,
            _ => l.ln(),
        }
    });
    let rhs = DVector::from_iterator(m, samples.iter().map(|s| s.1.ln()));
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Domain(format!("least squares failed: {e}")))?;
    let resid = &design * &coef - &rhs;
    let rms = (resid.norm_squared() / m as f64).sqrt();
    Ok(RateFit {
        alpha: coef[1],
        beta: if with_log { coef[2] } else { 0.0 },
        log_c: coef[0],
        rms,
        n_samples: m,
        samples: samples.to_vec(),
    })
}

/// Reference decay exponents at `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceExponents {
    /// `(1 - n/k)(2/p - 1)`, from interpolating the trivial endpoint.
    pub interpolated: f64,
    /// `((2 - n)/k)(2/p - 1)`, from the main-kernel decay.
    pub improved: f64,
    /// `(n/2)(2/p - 1)`, the integer-lattice improving exponent.
    pub integer: f64,
}

pub fn reference_exponents(n: usize, k: u32, p: f64) -> Result<ReferenceExponents> {
    check_p(p)?;
    if n < 2 || k < 2 {
        return domain("need n >= 2 and k >= 2");
    }
    let (nf, kf) = (n as f64, k as f64);
    let s = 2.0 / p - 1.0;
    Ok(ReferenceExponents {
        interpolated: (1.0 - nf / kf) * s,
        improved: (2.0 - nf) / kf * s,
        integer: nf / 2.0 * s,
    })
}

/// Sup norm of `|f|`.
pub fn sup_norm(f: &LatticeFunction) -> f64 {
    f.iter().map(|(_, v): (_, &Complex64)| v.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_method::ArcSettings;
    use crate::lattice::{enumerate_prime_points, SphereSpec};
    use crate::operators::sigma_measure;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn measure(lambda: u64) -> SphericalMeasure {
        sigma_measure(&enumerate_prime_points(&SphereSpec::new(5, 2, lambda).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn endpoint_examples() {
        assert!((endpoint_1_inf(&measure(20)) - 1.0).abs() < 1e-15);
        assert!((endpoint_1_inf(&measure(40)) - 0.2).abs() < 1e-15);
        for l in [293u64, 677, 1709] {
            assert!(endpoint_1_inf(&measure(l)) <= 1.0);
        }
    }

    #[test]
    fn two_two_endpoint() {
        let sphere = enumerate_prime_points(&SphereSpec::new(5, 2, 293).unwrap()).unwrap();
        let settings = ArcSettings { q_fixed: Some(1), quad_points: 128, ..ArcSettings::default() };
        let model = MultiplierModel::new(&sphere, &settings).unwrap();
        let coarse = endpoint_2_2(&model, 2).unwrap();
        let fine = endpoint_2_2(&model, 4).unwrap();
        assert!((coarse.raw_sup - 1.0).abs() < 1e-10);
        assert!((fine.raw_sup - 1.0).abs() < 1e-10);
        assert!(fine.error_sup >= coarse.error_sup);
        assert!(endpoint_2_2(&model, 0).is_err());
    }

    #[test]
    fn interpolation_examples() {
        assert_eq!(riesz_thorin_bound(0.3, 1.0, 1.0).unwrap(), 0.3);
        assert_eq!(riesz_thorin_bound(0.3, 0.7, 2.0).unwrap(), 0.7);
        assert!((riesz_thorin_bound(0.01, 1.0, 4.0 / 3.0).unwrap() - 0.1).abs() < 1e-15);
        assert!(riesz_thorin_bound(0.1, 1.0, 2.5).is_err());
        assert!(riesz_thorin_bound(0.1, 1.0, 0.5).is_err());
        assert!(riesz_thorin_bound(0.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn delta_examples_and_bracket() {
        let m = measure(40);
        assert!((delta_lower_bound(&m, 1.0).unwrap() - 0.2).abs() < 1e-15);
        assert!((delta_lower_bound(&m, 2.0).unwrap() - 0.2f64.sqrt()).abs() < 1e-15);
        assert!(delta_lower_bound(&m, 3.0).is_err());
        for l in [20u64, 40, 293, 677, 1709] {
            let m = measure(l);
            for p in [1.0, 1.25, 4.0 / 3.0, 1.5, 1.75, 2.0] {
                let lower = delta_lower_bound(&m, p).unwrap();
                let upper = riesz_thorin_bound(endpoint_1_inf(&m), 1.0, p).unwrap();
                assert!(lower <= upper * (1.0 + 1e-12), "lambda={l} p={p}");
                let boxed = box_lower_bound(&m, 1, p).unwrap();
                assert!(boxed <= upper * (1.0 + 1e-12), "lambda={l} p={p}");
            }
        }
    }

    #[test]
    fn interpolation_is_log_convex_in_inverse_p() {
        for (a, b) in [(0.01, 1.0), (0.2, 0.9), (1e-4, 0.5)] {
            let f = |p: f64| riesz_thorin_bound(a, b, p).unwrap().ln();
            let (p0, p1) = (1.0, 2.0);
            let pm = 4.0 / 3.0;
            // 1/pm = 0.75 = 0.5/p0 + 0.5/p1
            assert!(f(pm) <= 0.5 * f(p0) + 0.5 * f(p1) + 1e-12);
        }
    }

    #[test]
    fn planted_laws() {
        let pts: Vec<(f64, f64)> = [1e2, 1e3, 1e4, 1e5].iter().map(|&l: &f64| (l, l.powf(-1.5))).collect();
        let fit = fit_power_law(&pts, false).unwrap();
        assert!((fit.alpha + 1.5).abs() < 1e-9 && fit.beta == 0.0 && fit.rms < 1e-9);
        let pts: Vec<(f64, f64)> =
            [1e2, 1e3, 1e4, 1e5, 1e6].iter().map(|&l: &f64| (l, 3.0 * l.powf(-1.5) * l.ln().powi(2))).collect();
        let fit = fit_power_law(&pts, true).unwrap();
        assert!((fit.alpha + 1.5).abs() < 1e-6 && (fit.beta - 2.0).abs() < 1e-6 && fit.rms < 1e-9);
        assert!((fit.log_c - 3f64.ln()).abs() < 1e-6);
        assert!(matches!(fit_power_law(&pts[..3], false), Err(Error::InsufficientData(_))));
        let mut bad = pts.clone();
        bad[1].1 = 0.0;
        assert!(matches!(fit_power_law(&bad, false), Err(Error::Domain(_))));
        let mut dup = pts.clone();
        dup[1].0 = dup[0].0;
        assert!(fit_power_law(&dup, false).is_err());
        let json = serde_json::to_value(&fit).unwrap();
        for key in ["alpha", "beta", "rms", "n_samples"] {
            assert!(json.get(key).is_some());
        }
    }

    #[test]
    fn noisy_fit_recovers_exponent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let l = 10f64.powf(2.0 + 3.0 * i as f64 / 59.0);
                (l, l.powf(-1.5) * (1.0 + rng.random_range(-0.05..0.05)))
            })
            .collect();
        let fit = fit_power_law(&pts, false).unwrap();
        assert!((fit.alpha + 1.5).abs() < 0.05);
    }

    #[test]
    fn reference_examples() {
        let r = reference_exponents(5, 2, 1.0).unwrap();
        assert_eq!((r.interpolated, r.improved, r.integer), (-1.5, -1.5, 2.5));
        let r = reference_exponents(9, 3, 1.0).unwrap();
        assert!((r.interpolated + 2.0).abs() < 1e-15 && (r.improved + 7.0 / 3.0).abs() < 1e-15);
        let r = reference_exponents(7, 4, 2.0).unwrap();
        assert_eq!((r.interpolated, r.improved, r.integer), (0.0, 0.0, 0.0));
        for n in 3..30 {
            for k in 3..8 {
                let r = reference_exponents(n, k, 1.0).unwrap();
                if n > k as usize {
                    assert!(r.improved < r.interpolated && r.interpolated < 0.0);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn fit_ignores_scale(c in 0.01f64..100.0, alpha in -3.0f64..1.0, beta in -2.0f64..2.0) {
            let pts: Vec<(f64, f64)> = [50.0, 300.0, 2e3, 9e3, 4e4f64]
                .iter()
                .map(|&l| (l, l.powf(alpha) * l.ln().powf(beta) * (1.0 + 0.01 * (l.ln().sin()))))
                .collect();
            let scaled: Vec<(f64, f64)> = pts.iter().map(|&(l, v)| (l, c * v)).collect();
            for with_log in [false, true] {
                let a = fit_power_law(&pts, with_log).unwrap();
                let b = fit_power_law(&scaled, with_log).unwrap();
                prop_assert!((a.alpha - b.alpha).abs() < 1e-8);
                prop_assert!((a.beta - b.beta).abs() < 1e-8);
                prop_assert!((b.log_c - a.log_c - c.ln()).abs() < 1e-8);
            }
        }
    }
}
