//! Prime points on the surface `x_1^k + ... + x_n^k = lambda`, their
//! log-weighted count `P(lambda)`, and the admissible radii.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::primes_upto;
use crate::error::{domain, Error, Result};
use crate::summation::pairwise_sum;

/// Smallest `m` with `m^k >= lambda`, computed in integer arithmetic.
pub fn kth_root_ceil(lambda: u64, k: u32) -> u64 {
    if lambda <= 1 {
        return lambda;
    }
    let mut m = (lambda as f64).powf(1.0 / k as f64).round() as u64;
    let pow_ge = |m: u64| m.checked_pow(k).is_none_or(|v| v >= lambda);
    while m > 0 && pow_ge(m - 1) {
        m -= 1;
    }
    while !pow_ge(m) {
        m += 1;
    }
    m
}

/// Largest `m` with `m^k <= lambda`.
pub fn kth_root_floor(lambda: u64, k: u32) -> u64 {
    let c = kth_root_ceil(lambda, k);
    if c.checked_pow(k) == Some(lambda) {
        c
    } else {
        c.saturating_sub(1)
    }
}

/// One problem instance: dimension, degree, radius and `N = ceil(lambda^(1/k))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereSpec {
    pub n: usize,
    pub k: u32,
    pub lambda: u64,
    #[serde(rename = "N")]
    pub big_n: u64,
}

impl SphereSpec {
    pub fn new(n: usize, k: u32, lambda: u64) -> Result<Self> {
        if n < 2 {
            return domain(format!("dimension must be >= 2, got {n}"));
        }
        if k < 2 {
            return domain(format!("exponent must be >= 2, got {k}"));
        }
        if lambda < 1 {
            return domain("lambda must be >= 1");
        }
        Ok(Self { n, k, lambda, big_n: kth_root_ceil(lambda, k) })
    }

    /// `lambda^(n/k - 1)`, the Hua normalisation.
    pub fn hua_scale(&self) -> f64 {
        (self.lambda as f64).powf(self.n as f64 / self.k as f64 - 1.0)
    }

    /// Whether `n >= n_0(k)`; below the threshold results are still computed.
    pub fn above_threshold(&self) -> bool {
        n_zero(self.k).is_ok_and(|n0| self.n >= n0)
    }
}

/// The dimension threshold `n_0(k)` above which the multiplier decomposition holds.
pub fn n_zero(k: u32) -> Result<usize> {
    if k < 2 {
        return domain(format!("n_0 requires k >= 2, got {k}"));
    }
    if k <= 4 {
        return Ok((1usize << k) + 1);
    }
    let k = k as i64;
    let correction = (1..k)
        .map(|j| {
            let num = k * j - (1i64 << j).min(j * j + j);
            num.div_euclid(k - j + 1) + i64::from(num.rem_euclid(k - j + 1) != 0)
        })
        .max()
        .expect("k >= 5 gives a nonempty range");
    Ok((k * k + 3 - correction) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    /// Half-vectors joined on their partial sums.
    #[default]
    MeetInMiddle,
    /// Nested loops over all coordinates; the oracle.
    BruteForce,
}

/// Caps on the size of an enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationBudget {
    pub max_lambda: u64,
    /// Maximum number of stored half-vectors in the meet-in-the-middle table.
    pub max_table_entries: usize,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self { max_lambda: 1_000_000, max_table_entries: 20_000_000 }
    }
}

/// The prime points of one sphere with their log weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimeSphere {
    pub spec: SphereSpec,
    /// Lexicographically sorted.
    pub points: Vec<Vec<u64>>,
    /// `prod_i log p_i` per point.
    pub weights: Vec<f64>,
    /// `P(lambda)`.
    pub total: f64,
}

impl PrimeSphere {
    fn from_points(spec: SphereSpec, points: Vec<Vec<u64>>) -> Self {
        let weights: Vec<f64> = points.iter().map(|p| log_weight(p)).collect();
        let total = pairwise_sum(&weights);
        Self { spec, points, weights, total }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Largest single weight, or 0 for an empty sphere.
    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }
}

pub fn log_weight(point: &[u64]) -> f64 {
    point.iter().map(|&p| (p as f64).ln()).product()
}

/// Sorted tables of prime half-vectors, reusable across many radii up to
/// `max_lambda`.
#[derive(Debug, Clone)]
pub struct PrimePointIndex {
    n: usize,
    k: u32,
    max_lambda: u64,
    primes: Vec<u64>,
    powers: Vec<u64>,
    left_len: usize,
    right_len: usize,
    /// `(sum, offset into right_coords)` sorted by sum, then lexicographically.
    right: Vec<(u64, usize)>,
    right_coords: Vec<u32>,
}

impl PrimePointIndex {
    pub fn new(n: usize, k: u32, max_lambda: u64, budget: &EnumerationBudget) -> Result<Self> {
        SphereSpec::new(n, k, max_lambda.max(1))?;
        if max_lambda > budget.max_lambda {
            return Err(Error::Resource(format!(
                "lambda = {max_lambda} exceeds the enumeration budget {}",
                budget.max_lambda
            )));
        }
        let primes = primes_upto(kth_root_floor(max_lambda, k));
        let powers: Vec<u64> = primes.iter().map(|&p| p.pow(k)).collect();
        let left_len = n / 2;
        let right_len = n - left_len;

        let mut right = Vec::new();
        let mut right_coords = Vec::new();
        let mut stack = Vec::with_capacity(right_len);
        let mut overflow = false;
        for_each_tuple(&powers, right_len, max_lambda, &mut stack, 0, &mut |idx, sum| {
            if right.len() >= budget.max_table_entries {
                overflow = true;
                return false;
            }
            right.push((sum, right_coords.len()));
            right_coords.extend(idx.iter().map(|&i| i as u32));
            true
        });
        if overflow {
            return Err(Error::Resource(format!(
                "more than {} half-vectors needed for lambda = {max_lambda}",
                budget.max_table_entries
            )));
        }
        // stable: tuples were generated in lexicographic order
        right.sort_by_key(|&(s, _)| s);
        Ok(Self { n, k, max_lambda, primes, powers, left_len, right_len, right, right_coords })
    }

    pub fn max_lambda(&self) -> u64 {
        self.max_lambda
    }

    /// All prime points on the sphere of radius `lambda <= max_lambda`.
    pub fn sphere(&self, lambda: u64) -> Result<PrimeSphere> {
        let spec = SphereSpec::new(self.n, self.k, lambda)?;
        if lambda > self.max_lambda {
            return domain(format!("lambda = {lambda} above index limit {}", self.max_lambda));
        }
        let mut points = Vec::new();
        let mut stack = Vec::with_capacity(self.left_len);
        for_each_tuple(&self.powers, self.left_len, lambda, &mut stack, 0, &mut |idx, sum| {
            let target = lambda - sum;
            let lo = self.right.partition_point(|&(s, _)| s < target);
            for &(s, off) in &self.right[lo..] {
                if s != target {
                    break;
                }
                let mut p: Vec<u64> = idx.iter().map(|&i| self.primes[i]).collect();
                p.extend(
                    self.right_coords[off..off + self.right_len]
                        .iter()
                        .map(|&i| self.primes[i as usize]),
                );
                points.push(p);
            }
            true
        });
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        Ok(PrimeSphere::from_points(spec, points))
    }

    /// `P(lambda)` for every `lambda` in `range` (clipped to the index limit).
    pub fn weighted_counts(&self, range: RangeInclusive<u64>) -> Result<Vec<(u64, f64)>> {
        let lambdas: Vec<u64> = range.filter(|&l| l >= 1 && l <= self.max_lambda).collect();
        self.weighted_counts_at(&lambdas)
    }

    /// `P(lambda)` for each listed radius, in order. Works on the half-vector
    /// tables directly, so no points are materialized.
    pub fn weighted_counts_at(&self, lambdas: &[u64]) -> Result<Vec<(u64, f64)>> {
        for &l in lambdas {
            SphereSpec::new(self.n, self.k, l)?;
            if l > self.max_lambda {
                return domain(format!("lambda = {l} above index limit {}", self.max_lambda));
            }
        }
        let hi = lambdas.iter().copied().max().unwrap_or(0);
        let logs: Vec<f64> = self.primes.iter().map(|&p| (p as f64).ln()).collect();
        let mut right_weight = vec![0.0f64; hi as usize + 1];
        for &(s, off) in &self.right {
            if s > hi {
                break;
            }
            let w: f64 = self.right_coords[off..off + self.right_len].iter().map(|&i| logs[i as usize]).product();
            right_weight[s as usize] += w;
        }
        let mut left = Vec::new();
        let mut stack = Vec::with_capacity(self.left_len);
        for_each_tuple(&self.powers, self.left_len, hi, &mut stack, 0, &mut |idx, sum| {
            left.push((sum, idx.iter().map(|&i| logs[i]).product::<f64>()));
            true
        });
        left.sort_by_key(|&(s, _)| s);
        Ok(lambdas
            .par_iter()
            .map(|&l| {
                let end = left.partition_point(|&(s, _)| s <= l);
                let terms: Vec<f64> =
                    left[..end].iter().map(|&(s, w)| w * right_weight[(l - s) as usize]).collect();
                (l, pairwise_sum(&terms))
            })
            .collect())
    }
}

/// Visits ordered tuples of prime-power indices with total `<= limit`, in
/// lexicographic order. The visitor returns `false` to stop.
fn for_each_tuple<F>(
    powers: &[u64],
    len: usize,
    limit: u64,
    stack: &mut Vec<usize>,
    sum: u64,
    visit: &mut F,
) -> bool
where
    F: FnMut(&[usize], u64) -> bool,
{
    if stack.len() == len {
        return visit(stack, sum);
    }
    for (i, &pw) in powers.iter().enumerate() {
        let s = sum + pw;
        if s > limit {
            break;
        }
        stack.push(i);
        let go_on = for_each_tuple(powers, len, limit, stack, s, visit);
        stack.pop();
        if !go_on {
            return false;
        }
    }
    true
}

/// All prime points on `spec`'s sphere with the default algorithm and budget.
pub fn enumerate_prime_points(spec: &SphereSpec) -> Result<PrimeSphere> {
    enumerate_prime_points_with(spec, Algorithm::default(), &EnumerationBudget::default())
}

pub fn enumerate_prime_points_with(
    spec: &SphereSpec,
    algorithm: Algorithm,
    budget: &EnumerationBudget,
) -> Result<PrimeSphere> {
    match algorithm {
        Algorithm::MeetInMiddle => PrimePointIndex::new(spec.n, spec.k, spec.lambda, budget)?.sphere(spec.lambda),
        Algorithm::BruteForce => {
            if spec.lambda > budget.max_lambda {
                return Err(Error::Resource(format!(
                    "lambda = {} exceeds the enumeration budget {}",
                    spec.lambda, budget.max_lambda
                )));
            }
            let primes = primes_upto(kth_root_floor(spec.lambda, spec.k));
            let powers: Vec<u64> = primes.iter().map(|&p| p.pow(spec.k)).collect();
            let mut points = Vec::new();
            let mut stack = Vec::with_capacity(spec.n);
            for_each_tuple(&powers, spec.n, spec.lambda, &mut stack, 0, &mut |idx, sum| {
                if sum == spec.lambda {
                    points.push(idx.iter().map(|&i| primes[i]).collect());
                }
                true
            });
            Ok(PrimeSphere::from_points(*spec, points))
        }
    }
}

/// `P(lambda) = sum over points of prod_i log p_i`.
pub fn weighted_count(sphere: &PrimeSphere) -> f64 {
    sphere.total
}

/// `P(lambda) / lambda^(n/k - 1)`.
pub fn hua_ratio(sphere: &PrimeSphere) -> Result<f64> {
    if sphere.total <= 0.0 {
        return Err(Error::Undefined(format!(
            "P({}) = 0, the Hua ratio is undefined",
            sphere.spec.lambda
        )));
    }
    Ok(sphere.total / sphere.spec.hua_scale())
}

/// All `y` in `Z^n` (signed, zeros allowed) with `|y|^2 = lambda`.
pub fn enumerate_integer_points(
    n: usize,
    k: u32,
    lambda: u64,
    budget: &EnumerationBudget,
) -> Result<Vec<Vec<i64>>> {
    if k != 2 {
        return Err(Error::Unsupported(format!(
            "integer spheres are only implemented for k = 2, got k = {k}"
        )));
    }
    if n < 1 {
        return domain("dimension must be >= 1");
    }
    if lambda > budget.max_lambda {
        return Err(Error::Resource(format!(
            "lambda = {lambda} exceeds the enumeration budget {}",
            budget.max_lambda
        )));
    }
    fn rec(n: usize, remaining: u64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == n {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let m = kth_root_floor(remaining, 2) as i64;
        for y in -m..=m {
            cur.push(y);
            rec(n, remaining - (y * y) as u64, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, lambda, &mut Vec::with_capacity(n), &mut out);
    Ok(out)
}

/// How to select admissible radii.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProgressionRule {
    /// `lambda = residue (mod modulus)`.
    Congruence { residue: u64, modulus: u64 },
    /// Radii with at least one prime point.
    Nonempty,
    /// Both of the above.
    CongruenceNonempty { residue: u64, modulus: u64 },
}

impl ProgressionRule {
    /// `lambda = n (mod 24)` for `k = 2`, the local conditions for sums of
    /// squares of primes `>= 5`; otherwise the empirical rule.
    pub fn default_for(n: usize, k: u32) -> Self {
        if k == 2 {
            Self::Congruence { residue: n as u64 % 24, modulus: 24 }
        } else {
            Self::Nonempty
        }
    }

    /// The default rule restricted to radii that carry points.
    pub fn admissible(n: usize, k: u32) -> Self {
        match Self::default_for(n, k) {
            Self::Congruence { residue, modulus } => Self::CongruenceNonempty { residue, modulus },
            other => other,
        }
    }

    fn congruence_ok(&self, lambda: u64) -> bool {
        match *self {
            Self::Congruence { residue, modulus } | Self::CongruenceNonempty { residue, modulus } => {
                lambda % modulus == residue % modulus
            }
            Self::Nonempty => true,
        }
    }

    fn needs_points(&self) -> bool {
        !matches!(self, Self::Congruence { .. })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Congruence { modulus: 0, .. } | Self::CongruenceNonempty { modulus: 0, .. } => {
                domain("progression modulus must be >= 1")
            }
            _ => Ok(()),
        }
    }
}

/// Radii in `range` selected by `rule`, sorted ascending.
pub fn progression_filter(
    n: usize,
    k: u32,
    range: RangeInclusive<u64>,
    rule: &ProgressionRule,
) -> Result<Vec<u64>> {
    progression_filter_with(n, k, range, rule, &EnumerationBudget::default())
}

pub fn progression_filter_with(
    n: usize,
    k: u32,
    range: RangeInclusive<u64>,
    rule: &ProgressionRule,
    budget: &EnumerationBudget,
) -> Result<Vec<u64>> {
    rule.validate()?;
    let (lo, hi) = (*range.start(), *range.end());
    if lo > hi {
        return Ok(Vec::new());
    }
    let candidates: Vec<u64> = (lo.max(1)..=hi).filter(|&l| rule.congruence_ok(l)).collect();
    if !rule.needs_points() || candidates.is_empty() {
        return Ok(candidates);
    }
    let index = PrimePointIndex::new(n, k, hi, budget)?;
    let mut out = Vec::new();
    for l in candidates {
        if !index.sphere(l)?.is_empty() {
            out.push(l);
        }
    }
    Ok(out)
}
