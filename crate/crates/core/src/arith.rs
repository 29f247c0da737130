//! Exact integer and modular arithmetic, and the complete exponential sums
//! `g(a, q; b, r)` that build the singular series.
//!
//! Phases are always reduced as exact rationals before they are turned into
//! floating point, so `e(t)` never sees a large argument.

use std::f64::consts::TAU;

use num_complex::Complex64;
use num_integer::Integer;

use crate::error::{domain, Result};
use crate::summation::pairwise_sum;

/// Largest argument accepted by the factorization-based functions.
pub const FACTOR_LIMIT: u64 = 1 << 50;

/// Trial-division factorization; `n = 1` gives the empty product.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn check_positive(n: i64, what: &str) -> Result<u64> {
    if n < 1 {
        return domain(format!("{what} requires n >= 1, got {n}"));
    }
    let n = n as u64;
    if n > FACTOR_LIMIT {
        return domain(format!("{what} requires n <= 2^50, got {n}"));
    }
    Ok(n)
}

/// Euler's totient.
pub fn euler_phi(n: i64) -> Result<u64> {
    let n = check_positive(n, "euler_phi")?;
    Ok(phi(n))
}

pub(crate) fn phi(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// Number of divisors.
pub fn divisor_tau(n: i64) -> Result<u64> {
    let n = check_positive(n, "divisor_tau")?;
    Ok(tau(n))
}

pub(crate) fn tau(n: u64) -> u64 {
    factorize(n).into_iter().map(|(_, e)| e as u64 + 1).product()
}

/// Sum of divisors.
pub fn divisor_sigma(n: i64) -> Result<u64> {
    let n = check_positive(n, "divisor_sigma")?;
    Ok(sigma(n))
}

pub(crate) fn sigma(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .map(|(p, e)| (p.pow(e + 1) - 1) / (p - 1))
        .product()
}

/// The unit group `(Z/qZ)^*` as its sorted residues in `[0, q)`.
///
/// `U_1 = {0}`, so every sum over `U_1` has exactly one term `e(0)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitGroup {
    modulus: u64,
    elements: Vec<u64>,
}

impl UnitGroup {
    pub fn new(q: i64) -> Result<Self> {
        if q < 1 {
            return domain(format!("unit group requires q >= 1, got {q}"));
        }
        let q = q as u64;
        let elements = if q == 1 {
            vec![0]
        } else {
            (1..q).filter(|x| x.gcd(&q) == 1).collect()
        };
        Ok(Self { modulus: q, elements })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Membership after reducing `a` mod `q`.
    pub fn contains(&self, a: i64) -> bool {
        is_unit(a, self.modulus)
    }
}

pub fn unit_group(q: i64) -> Result<UnitGroup> {
    UnitGroup::new(q)
}

pub(crate) fn is_unit(a: i64, q: u64) -> bool {
    let r = reduce(a, q);
    r.gcd(&q) == 1
}

/// `a mod q` in `[0, q)`.
pub fn reduce(a: i64, q: u64) -> u64 {
    (a as i128).rem_euclid(q as i128) as u64
}

/// Sieve of Eratosthenes.
pub fn primes_upto(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        primes.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    primes
}

/// Deterministic trial-division primality test.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

pub(crate) fn pow_mod(base: u64, mut exp: u32, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let m128 = m as u128;
    let mut b = (base % m) as u128;
    let mut acc = 1u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

/// `e(num/den) = exp(2 pi i num/den)`, with the fraction reduced exactly first.
pub fn e_frac(num: i128, den: u64) -> Complex64 {
    assert!(den > 0, "e_frac: zero denominator");
    let r = num.rem_euclid(den as i128) as f64 / den as f64;
    Complex64::from_polar(1.0, TAU * r)
}

/// `e(t)` for a real argument, reduced to `[0, 1)` before scaling by `2 pi`.
pub fn e_real(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * (t - t.floor()))
}

/// Table of the `L`-th roots of unity `e(j/L)`.
pub(crate) struct RootTable {
    modulus: u64,
    roots: Vec<Complex64>,
}

impl RootTable {
    pub(crate) fn new(modulus: u64) -> Self {
        let roots = (0..modulus).map(|j| e_frac(j as i128, modulus)).collect();
        Self { modulus, roots }
    }

    #[inline]
    pub(crate) fn get(&self, j: u64) -> Complex64 {
        self.roots[(j % self.modulus) as usize]
    }
}

/// Parameters of `g(a, q; b, r) = phi([q,r])^-1 sum_{x in U_[q,r]} e(a x^k / q + b x / r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussSumParams {
    pub k: u32,
    pub a: i64,
    pub q: u64,
    pub b: i64,
    pub r: u64,
}

fn check_moduli(q: u64, r: u64) -> Result<()> {
    if q == 0 || r == 0 {
        return domain(format!("moduli must be >= 1, got q={q}, r={r}"));
    }
    Ok(())
}

/// Evaluates `g(a, q; b, r)` by direct summation over `U_[q,r]`.
pub fn gauss_g(params: &GaussSumParams) -> Result<Complex64> {
    let GaussSumParams { k, a, q, b, r } = *params;
    check_moduli(q, r)?;
    let l = q.lcm(&r);
    let units = UnitGroup::new(l as i64)?;
    let table = RootTable::new(l);
    let (a, b) = (reduce(a, q), reduce(b, r));
    let (sq, sr) = (l / q, l / r);
    let terms: Vec<Complex64> = units
        .elements()
        .iter()
        .map(|&x| {
            let ak = (a as u128 * pow_mod(x, k, q) as u128 % q as u128) as u64;
            let bx = (b as u128 * x as u128 % r as u128) as u64;
            table.get((ak * sq + bx * sr) % l)
        })
        .collect();
    Ok(pairwise_sum(&terms) / units.len() as f64)
}

/// All values `g(a, q; b, r)` for `b` running over `U_r`, in the order of
/// `UnitGroup::new(r).elements()`.
pub(crate) fn gauss_g_over_units(k: u32, a: u64, q: u64, r: u64) -> Vec<Complex64> {
    let l = q.lcm(&r);
    let lunits = UnitGroup::new(l as i64).expect("lcm >= 1");
    let runits = UnitGroup::new(r as i64).expect("r >= 1");
    let table = RootTable::new(l);
    let (sq, sr) = (l / q, l / r);
    let a_phase: Vec<u64> = lunits
        .elements()
        .iter()
        .map(|&x| (a as u128 * pow_mod(x, k, q) as u128 % q as u128) as u64 * sq)
        .collect();
    let norm = lunits.len() as f64;
    runits
        .elements()
        .iter()
        .map(|&b| {
            let terms: Vec<Complex64> = lunits
                .elements()
                .iter()
                .zip(&a_phase)
                .map(|(&x, &ap)| table.get((ap + (b * x % r) * sr) % l))
                .collect();
            pairwise_sum(&terms) / norm
        })
        .collect()
}

/// `sum_{b in U_r} g(a, q; b, r) e(-b x / r)`.
///
/// The phase uses the summation variable `b`; see
/// [`crate::circle_method::PhaseConvention`] for the literal variant.
pub fn gauss_row_sum(k: u32, a: i64, q: u64, r: u64, x: i64) -> Result<Complex64> {
    let rows = gauss_row_sums(k, a, q, r)?;
    Ok(rows[reduce(x, r) as usize])
}

/// [`gauss_row_sum`] for every `x` in `[0, r)` at once.
pub fn gauss_row_sums(k: u32, a: i64, q: u64, r: u64) -> Result<Vec<Complex64>> {
    check_moduli(q, r)?;
    if !is_unit(a, q) {
        return domain(format!("a = {a} is not a unit mod {q}"));
    }
    let g = gauss_g_over_units(k, reduce(a, q), q, r);
    let units = UnitGroup::new(r as i64)?;
    let table = RootTable::new(r);
    Ok((0..r)
        .map(|x| {
            let terms: Vec<Complex64> = units
                .elements()
                .iter()
                .zip(&g)
                .map(|(&b, &gb)| gb * table.get(r - (b * x % r)))
                .collect();
            pairwise_sum(&terms)
        })
        .collect())
}

/// `tau((q,r)) sigma(r/(q,r)) / phi(r/(q,r))`, the bound on `|gauss_row_sum|`.
pub fn lemma_bound(q: u64, r: u64) -> f64 {
    assert!(q >= 1 && r >= 1, "lemma_bound: moduli must be >= 1");
    let d = q.gcd(&r);
    let m = r / d;
    tau(d) as f64 * sigma(m) as f64 / phi(m) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn brute_phi(n: u64) -> u64 {
        (1..=n).filter(|x| x.gcd(&n) == 1).count() as u64
    }

    #[test]
    fn totient_values() {
        assert_eq!(euler_phi(1).unwrap(), 1);
        assert_eq!(euler_phi(7).unwrap(), 6);
        assert_eq!(euler_phi(12).unwrap(), brute_phi(12));
        assert_eq!(euler_phi(12).unwrap(), 4);
        assert!(matches!(euler_phi(0), Err(crate::Error::Domain(_))));
        assert!(euler_phi(-5).is_err());
        assert!(euler_phi((1i64 << 50) + 1).is_err());
        assert_eq!(euler_phi(1 << 50).unwrap(), 1 << 49);
    }

    #[test]
    fn divisor_functions() {
        assert_eq!(divisor_tau(1).unwrap(), 1);
        assert_eq!(divisor_sigma(1).unwrap(), 1);
        let divs_12: Vec<u64> = (1..=12).filter(|d| 12 % d == 0).collect();
        assert_eq!(divisor_tau(12).unwrap(), divs_12.len() as u64);
        assert_eq!(divisor_tau(12).unwrap(), 6);
        assert_eq!(divisor_sigma(6).unwrap(), 1 + 2 + 3 + 6);
        assert!(divisor_tau(0).is_err());
        assert!(divisor_sigma(-1).is_err());
    }

    #[test]
    fn gauss_identity_sum_of_phi_over_divisors() {
        for n in 1..=10_000u64 {
            let s: u64 = (1..=n).filter(|d| n % d == 0).map(phi).sum();
            assert_eq!(s, n, "n = {n}");
        }
    }

    #[test]
    fn unit_groups() {
        assert_eq!(unit_group(1).unwrap().elements(), &[0]);
        assert_eq!(unit_group(2).unwrap().elements(), &[1]);
        assert_eq!(unit_group(8).unwrap().elements(), &[1, 3, 5, 7]);
        assert!(unit_group(0).is_err());
        for q in 1..200 {
            let u = unit_group(q).unwrap();
            assert_eq!(u.len() as u64, phi(q as u64));
            assert!(u.elements().windows(2).all(|w| w[0] < w[1]));
            assert!(u.elements().iter().all(|&e| e < q as u64 && e.gcd(&(q as u64)) == 1));
        }
        assert!(unit_group(9).unwrap().contains(-1));
        assert!(!unit_group(9).unwrap().contains(3));
    }

    #[test]
    fn primes() {
        assert!(primes_upto(1).is_empty());
        assert!(primes_upto(0).is_empty());
        assert_eq!(primes_upto(10), vec![2, 3, 5, 7]);
        assert!(!is_prime(1));
        assert!(!is_prime(0));
        let sieve = primes_upto(5000);
        let trial: Vec<u64> = (0..=5000).filter(|&n| is_prime(n)).collect();
        assert_eq!(sieve, trial);
    }

    #[test]
    fn gauss_g_examples() {
        let g = |k, a, q, b, r| gauss_g(&GaussSumParams { k, a, q, b, r }).unwrap();
        let one = g(2, 1, 1, 0, 1);
        assert_abs_diff_eq!(one.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(one.im, 0.0, epsilon = 1e-15);

        // x in {1, 2}: e(1/3) + e(4/3) = 2 e(1/3)
        let v = g(2, 1, 3, 0, 1);
        let want = e_frac(1, 3);
        assert_abs_diff_eq!(v.re, want.re, epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, want.im, epsilon = 1e-14);

        // e(1/3) + e(8/3) = -1
        let v = g(3, 1, 3, 0, 1);
        assert_abs_diff_eq!(v.re, -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);

        assert!(gauss_g(&GaussSumParams { k: 2, a: 1, q: 0, b: 0, r: 1 }).is_err());
    }

    #[test]
    fn gauss_g_bounded_exhaustive() {
        for k in 2..=5u32 {
            for q in 1..=30u64 {
                for r in 1..=30u64 {
                    for &a in unit_group(q as i64).unwrap().elements() {
                        for v in gauss_g_over_units(k, a, q, r) {
                            assert!(v.norm() <= 1.0 + 1e-12, "k={k} a={a} q={q} r={r}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn gauss_g_over_units_matches_direct() {
        for (k, a, q, r) in [(2u32, 1u64, 4u64, 6u64), (3, 2, 9, 4), (2, 5, 12, 10)] {
            let batch = gauss_g_over_units(k, a, q, r);
            for (&b, v) in unit_group(r as i64).unwrap().elements().iter().zip(batch) {
                let d = gauss_g(&GaussSumParams { k, a: a as i64, q, b: b as i64, r }).unwrap();
                assert!((d - v).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn row_sum_examples() {
        let v = gauss_row_sum(2, 1, 1, 1, 0).unwrap();
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-14);
        // single unit b = 1: g(1,2;1,2) = e(1/2 + 1/2) = 1
        let v = gauss_row_sum(2, 1, 2, 2, 0).unwrap();
        let g = gauss_g(&GaussSumParams { k: 2, a: 1, q: 2, b: 1, r: 2 }).unwrap();
        assert!((v - g).norm() < 1e-14);
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-14);
        assert!(matches!(gauss_row_sum(2, 2, 4, 3, 0), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn lemma_bound_examples() {
        assert_eq!(lemma_bound(1, 1), 1.0);
        assert_eq!(lemma_bound(2, 2), 2.0);
        assert_eq!(lemma_bound(2, 4), 6.0);
    }

    #[test]
    fn e_frac_reduces_exactly() {
        let a = e_frac(1, 3);
        let b = e_frac(1 + 3 * (1 << 60), 3);
        assert_eq!(a, b);
        let c = e_frac(-2, 3);
        assert!((a - c).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn gauss_g_periodic(k in 2u32..6, a in -200i64..200, q in 1u64..25,
                            b in -200i64..200, r in 1u64..25) {
            let p = GaussSumParams { k, a, q, b, r };
            let shifted = GaussSumParams { a: a + q as i64, b: b + r as i64, ..p };
            let d = gauss_g(&p).unwrap() - gauss_g(&shifted).unwrap();
            prop_assert!(d.norm() < 1e-12);
        }
    }
}
