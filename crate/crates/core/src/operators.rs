//! The averaging operators: the probability measure `sigma_lambda`, the prime
//! spherical average `A_lambda`, the integer comparison average `S_lambda`
//! and the dyadic maximal probe.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::lattice::{enumerate_integer_points, EnumerationBudget, PrimeSphere, SphereSpec};
use crate::summation::pairwise_sum;

/// A finitely supported complex function on `Z^n`.
///
/// Zero values are never stored; iteration is lexicographic in the point.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    dim: usize,
    values: BTreeMap<Vec<i64>, Complex64>,
}

impl LatticeFunction {
    pub fn zero(dim: usize) -> Self {
        Self { dim, values: BTreeMap::new() }
    }

    pub fn delta(point: Vec<i64>) -> Self {
        let mut f = Self::zero(point.len());
        f.values.insert(point, Complex64::new(1.0, 0.0));
        f
    }

    /// Builds from `(point, value)` pairs. Repeated points are a domain error.
    pub fn from_pairs<I>(dim: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, Complex64)>,
    {
        let mut f = Self::zero(dim);
        for (p, v) in pairs {
            if p.len() != dim {
                return domain(format!("point of length {} in a {dim}-dimensional function", p.len()));
            }
            if f.values.contains_key(&p) {
                return domain(format!("duplicate support point {p:?}"));
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return domain(format!("non-finite value at {p:?}"));
            }
            if v != Complex64::new(0.0, 0.0) {
                f.values.insert(p, v);
            }
        }
        Ok(f)
    }

    /// Indicator of the box `[lo, hi]^n`.
    pub fn box_indicator(dim: usize, lo: i64, hi: i64) -> Self {
        let mut f = Self::zero(dim);
        if hi < lo {
            return f;
        }
        let side = (hi - lo + 1) as usize;
        let total = side.pow(dim as u32);
        for code in 0..total {
            let mut c = code;
            let p: Vec<i64> = (0..dim)
                .map(|_| {
                    let d = (c % side) as i64;
                    c /= side;
                    lo + d
                })
                .collect();
            f.values.insert(p, Complex64::new(1.0, 0.0));
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, point: &[i64]) -> Complex64 {
        self.values.get(point).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &Complex64)> {
        self.values.iter()
    }

    /// Sums the collected terms per point and prunes exact zeros.
    fn from_terms(dim: usize, mut terms: Vec<(Vec<i64>, Complex64)>) -> Self {
        // stable, so each point's terms keep their generation order
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut values = BTreeMap::new();
        let mut run: Vec<Complex64> = Vec::new();
        let mut iter = terms.into_iter().peekable();
        while let Some((p, v)) = iter.next() {
            run.push(v);
            if iter.peek().is_some_and(|(q, _)| *q == p) {
                continue;
            }
            let total = pairwise_sum(&run);
            run.clear();
            if total != Complex64::new(0.0, 0.0) {
                values.insert(p, total);
            }
        }
        Self { dim, values }
    }
}

/// `(sum |f|^p)^(1/p)`, or `max |f|` for `p = inf`.
pub fn lp_norm(f: &LatticeFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return domain(format!("l^p norm needs p >= 1, got {p}"));
    }
    if p.is_infinite() {
        return Ok(f.values.values().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let terms: Vec<f64> = f.values.values().map(|v| v.norm().powf(p)).collect();
    Ok(pairwise_sum(&terms).powf(1.0 / p))
}

/// `sigma_lambda(x) = log x / P(lambda)` on the prime points.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalMeasure {
    sphere: PrimeSphere,
    masses: Vec<f64>,
}

impl SphericalMeasure {
    pub fn sphere(&self) -> &PrimeSphere {
        &self.sphere
    }

    pub fn spec(&self) -> &SphereSpec {
        &self.sphere.spec
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Atoms as signed lattice points with their masses.
    pub fn atoms(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.sphere
            .points
            .iter()
            .zip(&self.masses)
            .map(|(p, &m)| (p.iter().map(|&x| x as i64).collect(), m))
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.masses)
    }

    pub fn sup(&self) -> f64 {
        self.masses.iter().copied().fold(0.0, f64::max)
    }

    pub fn as_function(&self) -> LatticeFunction {
        let values = self.atoms().map(|(p, m)| (p, Complex64::new(m, 0.0))).collect();
        LatticeFunction { dim: self.spec().n, values }
    }
}

pub fn sigma_measure(sphere: &PrimeSphere) -> Result<SphericalMeasure> {
    if sphere.total <= 0.0 {
        return Err(Error::Undefined(format!(
            "P({}) = 0, sigma_lambda is undefined",
            sphere.spec.lambda
        )));
    }
    let masses = sphere.weights.iter().map(|w| w / sphere.total).collect();
    Ok(SphericalMeasure { sphere: sphere.clone(), masses })
}

/// `A_lambda f(l) = sum_p sigma(p) f(p - l)`, evaluated exactly over the
/// finite double sum. The output lives on `{p - s : s in supp f}`.
pub fn prime_average(measure: &SphericalMeasure, f: &LatticeFunction) -> Result<LatticeFunction> {
    let n = measure.spec().n;
    if f.dim != n {
        return domain(format!("function of dimension {} against a {n}-dimensional measure", f.dim));
    }
    let mut terms = Vec::with_capacity(measure.masses().len() * f.len());
    for (p, m) in measure.atoms() {
        for (s, v) in f.iter() {
            let l: Vec<i64> = p.iter().zip(s).map(|(a, b)| a - b).collect();
            terms.push((l, *v * m));
        }
    }
    Ok(LatticeFunction::from_terms(n, terms))
}

/// `S_lambda f(x) = #{y : |y|^2 = lambda}^-1 sum_y f(x - y)`, quadratic only.
pub fn integer_average(
    n: usize,
    k: u32,
    lambda: u64,
    f: &LatticeFunction,
    budget: &EnumerationBudget,
) -> Result<LatticeFunction> {
    let points = enumerate_integer_points(n, k, lambda, budget)?;
    if points.is_empty() {
        return Err(Error::Undefined(format!("no integer points with |y|^2 = {lambda}")));
    }
    if f.dim != n {
        return domain(format!("function of dimension {} against dimension {n}", f.dim));
    }
    let w = 1.0 / points.len() as f64;
    let mut terms = Vec::with_capacity(points.len() * f.len());
    for y in &points {
        for (s, v) in f.iter() {
            let x: Vec<i64> = s.iter().zip(y).map(|(a, b)| a + b).collect();
            terms.push((x, *v * w));
        }
    }
    Ok(LatticeFunction::from_terms(n, terms))
}

/// Pointwise `max_lambda |A_lambda delta_0|` over a block of spheres.
///
/// Empty spheres in the block are skipped; an all-empty block is undefined.
pub fn dyadic_max_delta(spheres: &[PrimeSphere]) -> Result<LatticeFunction> {
    let mut nonempty = spheres.iter().filter(|s| !s.is_empty()).peekable();
    let Some(first) = nonempty.peek() else {
        return Err(Error::Undefined("every sphere in the block is empty".into()));
    };
    let n = first.spec.n;
    let mut best: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for s in nonempty {
        if s.spec.n != n {
            return domain("spheres of mixed dimension in one block");
        }
        let m = sigma_measure(s)?;
        let delta = LatticeFunction::delta(vec![0; n]);
        for (p, v) in prime_average(&m, &delta)?.iter() {
            let e = best.entry(p.clone()).or_insert(0.0);
            *e = e.max(v.norm());
        }
    }
    let values = best.into_iter().map(|(p, v)| (p, Complex64::new(v, 0.0))).collect();
    Ok(LatticeFunction { dim: n, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::enumerate_prime_points;
    use proptest::prelude::*;

    fn measure(lambda: u64) -> SphericalMeasure {
        let s = enumerate_prime_points(&SphereSpec::new(5, 2, lambda).unwrap()).unwrap();
        sigma_measure(&s).unwrap()
    }

    #[test]
    fn measure_examples() {
        let m20 = measure(20);
        assert_eq!(m20.masses(), &[1.0]);
        assert_eq!(m20.sphere().points[0], vec![2; 5]);
        let m40 = measure(40);
        assert_eq!(m40.masses().len(), 5);
        for &x in m40.masses() {
            assert!((x - 0.2).abs() < 1e-15);
        }
        let empty = enumerate_prime_points(&SphereSpec::new(5, 2, 19).unwrap()).unwrap();
        assert!(matches!(sigma_measure(&empty), Err(Error::Undefined(_))));
        for l in [293, 677, 1013] {
            let m = measure(l);
            assert!((m.total_mass() - 1.0).abs() < 1e-12);
            assert!(m.masses().iter().all(|&x| x > 0.0 && x <= 1.0));
        }
    }

    #[test]
    fn average_of_constant_is_constant() {
        let m = measure(40);
        let f = LatticeFunction::box_indicator(5, 0, 3);
        let out = prime_average(&m, &f).unwrap();
        assert!((out.get(&[0; 5]) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((out.get(&[1, 0, 0, 0, 0]) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn average_of_delta_is_sigma() {
        let m = measure(293);
        let out = prime_average(&m, &LatticeFunction::delta(vec![0; 5])).unwrap();
        assert_eq!(out, m.as_function());
        let m40 = measure(40);
        let out = prime_average(&m40, &LatticeFunction::delta(vec![0; 5])).unwrap();
        assert!((lp_norm(&out, f64::INFINITY).unwrap() - 0.2).abs() < 1e-15);
        for p in [1.0, 2.0, f64::INFINITY] {
            let a = lp_norm(&out, p).unwrap();
            let b = lp_norm(&m40.as_function(), p).unwrap();
            assert_eq!(a, b);
        }
        assert!(prime_average(&m, &LatticeFunction::delta(vec![0; 4])).is_err());
    }

    #[test]
    fn one_to_inf_norm_attained_at_argmax_atom() {
        let m = measure(1013);
        let (argmax, mass) = m
            .atoms()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        // A delta_{x*} (l) = sigma(l + x*); at l = 0 it reads sigma(x*)
        let out = prime_average(&m, &LatticeFunction::delta(argmax)).unwrap();
        assert_eq!(lp_norm(&out, f64::INFINITY).unwrap(), m.sup());
        assert_eq!(out.get(&[0; 5]).re, mass);
    }

    #[test]
    fn integer_average_examples() {
        let b = EnumerationBudget::default();
        let one = LatticeFunction::box_indicator(5, -3, 3);
        let out = integer_average(5, 2, 1, &one, &b).unwrap();
        assert!((out.get(&[0; 5]).re - 1.0).abs() < 1e-15);

        let out = integer_average(5, 2, 1, &LatticeFunction::delta(vec![0; 5]), &b).unwrap();
        assert_eq!(out.len(), 10);
        assert!(out.iter().all(|(_, v)| (v.re - 0.1).abs() < 1e-15));

        let pts = enumerate_integer_points(5, 2, 4, &b).unwrap();
        let out = integer_average(5, 2, 4, &LatticeFunction::delta(vec![0; 5]), &b).unwrap();
        assert_eq!(out.len(), pts.len());
        assert!(out.iter().all(|(_, v)| (v.re - 1.0 / pts.len() as f64).abs() < 1e-15));
        assert!(matches!(
            integer_average(5, 2, 7, &LatticeFunction::delta(vec![0; 5]), &b),
            Ok(_)
        ));
        assert!(matches!(
            integer_average(1, 2, 3, &LatticeFunction::delta(vec![0]), &b),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn dyadic_probe() {
        let single = vec![measure(40).sphere().clone()];
        assert_eq!(dyadic_max_delta(&single).unwrap(), measure(40).as_function());

        let block: Vec<PrimeSphere> = (20..40)
            .map(|l| enumerate_prime_points(&SphereSpec::new(5, 2, l).unwrap()).unwrap())
            .collect();
        let out = dyadic_max_delta(&block).unwrap();
        // sigma_20 is the single atom (2,...,2) of mass 1
        assert_eq!(out.get(&[2; 5]).re, 1.0);
        let sup = lp_norm(&out, f64::INFINITY).unwrap();
        for s in block.iter().filter(|s| !s.is_empty()) {
            assert!(sup >= sigma_measure(s).unwrap().sup());
            for (p, m) in sigma_measure(s).unwrap().atoms() {
                assert!(out.get(&p).re >= m);
            }
        }
        let empty: Vec<PrimeSphere> = (10..20)
            .map(|l| enumerate_prime_points(&SphereSpec::new(5, 2, l).unwrap()).unwrap())
            .collect();
        assert!(matches!(dyadic_max_delta(&empty), Err(Error::Undefined(_))));
    }

    #[test]
    fn norms_of_simple_functions() {
        let d = LatticeFunction::delta(vec![0; 3]);
        for p in [1.0, 1.5, 2.0, 7.0, f64::INFINITY] {
            assert_eq!(lp_norm(&d, p).unwrap(), 1.0);
        }
        let two = LatticeFunction::from_pairs(
            1,
            [(vec![0], Complex64::new(1.0, 0.0)), (vec![1], Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        assert!((lp_norm(&two, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(lp_norm(&two, 0.5).is_err());
        assert!(lp_norm(&two, f64::NAN).is_err());
        assert_eq!(lp_norm(&LatticeFunction::zero(2), 2.0).unwrap(), 0.0);
        let one = Complex64::new(1.0, 0.0);
        assert!(LatticeFunction::from_pairs(1, [(vec![0], one), (vec![0], one)]).is_err());
        let pruned = LatticeFunction::from_pairs(1, [(vec![0], Complex64::new(0.0, 0.0))]).unwrap();
        assert!(pruned.is_empty());
    }

    fn arb_function() -> impl Strategy<Value = Vec<(Vec<i64>, f64)>> {
        prop::collection::vec((prop::collection::vec(-4i64..8, 5), 0.0f64..10.0), 1..40)
    }

    fn build(pairs: Vec<(Vec<i64>, f64)>) -> LatticeFunction {
        let map: BTreeMap<Vec<i64>, f64> = pairs.into_iter().collect();
        LatticeFunction::from_pairs(5, map.into_iter().map(|(p, v)| (p, Complex64::new(v, 0.0)))).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn positivity_and_contraction(pairs in arb_function(), lambda in prop::sample::select(vec![40u64, 293, 677])) {
            let m = measure(lambda);
            let f = build(pairs);
            let out = prime_average(&m, &f).unwrap();
            prop_assert!(out.iter().all(|(_, v)| v.re >= 0.0 && v.im == 0.0));
            let tol = 1e-12;
            prop_assert!(lp_norm(&out, f64::INFINITY).unwrap() <= lp_norm(&f, f64::INFINITY).unwrap() * (1.0 + tol));
            prop_assert!(lp_norm(&out, 1.0).unwrap() <= lp_norm(&f, 1.0).unwrap() * (1.0 + tol));
        }
    }
}
