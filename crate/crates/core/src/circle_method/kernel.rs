//! Main-term kernel on a lattice box and the single-term verification pieces.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::multiplier::{ActiveArc, MajorArcParams, MultiplierModel};
use super::surface::SimplexRule;
use super::series::gauss_component;
use crate::arith::{e_frac, is_unit, reduce, RootTable, UnitGroup};
use crate::error::{domain, Error, Result};
use crate::lattice::SphereSpec;
use crate::operators::LatticeFunction;
use crate::summation::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelBudget {
    /// Lattice points in the output box.
    pub max_points: usize,
    /// Stored one-dimensional inverse transforms (complex values).
    pub max_profiles: usize,
    /// Rough count of complex multiplications in the assembly.
    pub max_work: f64,
}

impl Default for KernelBudget {
    fn default() -> Self {
        Self { max_points: 2_000_000, max_profiles: 50_000_000, max_work: 2e10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MainKernel {
    pub values: LatticeFunction,
    pub box_radius: u64,
    /// Frequency samples per axis, `2 box_radius + 1`.
    pub grid: usize,
    pub sup_norm: f64,
    /// Largest imaginary part; zero up to rounding for a conjugate-symmetric multiplier.
    pub max_imag: f64,
    /// Estimated aliased mass relative to the sup, from the decay profile with exponent `n + 1`.
    pub alias_tail: f64,
    pub overlap: bool,
}

pub fn main_kernel(model: &MultiplierModel, box_radius: u64) -> Result<MainKernel> {
    main_kernel_with(model, box_radius, &KernelBudget::default())
}

/// Samples the main multiplier on the uniform grid of `[0,1)^n` and inverts.
///
/// The multiplier is a sum over outer quadrature nodes `t` and residues
/// `(q, a)` of tensor products of one-dimensional profiles, so each profile
/// is inverted along one axis and the box values are assembled on sorted
/// coordinate tuples, then spread over their permutations.
pub fn main_kernel_with(model: &MultiplierModel, box_radius: u64, budget: &KernelBudget) -> Result<MainKernel> {
    let spec = *model.spec();
    let n = spec.n;
    if box_radius < spec.big_n {
        return domain(format!("box radius {box_radius} is below N = {}", spec.big_n));
    }
    let r = box_radius as i64;
    let grid = 2 * box_radius as usize + 1;
    let points = (grid as f64).powi(n as i32);
    if points > budget.max_points as f64 {
        return Err(Error::Resource(format!("{points} box points exceed the limit {}", budget.max_points)));
    }

    let arcs: Vec<Vec<ActiveArc>> = (0..grid).map(|l| model.arcs_at(l as f64 / grid as f64)).collect();
    let params = model.params();
    // (phase, a, q) per residue class; with Q = 1 every class shares one profile
    // and the sum over classes is the singular series itself.
    let collapsed = params.q == 1;
    let groups: Vec<(Complex64, u64, u64)> = if collapsed {
        let s = model.series(&vec![(0, 1); n]).value;
        vec![(s, 1, 1)]
    } else {
        (1..=params.q_max)
            .flat_map(|q| {
                let units = UnitGroup::new(q as i64).expect("q >= 1");
                units.elements().iter().map(|&a| (e_frac(-((spec.lambda % q) as i128 * a as i128), q), a, q)).collect::<Vec<_>>()
            })
            .collect()
    };
    let (ts, weights, origin) = model.surface().base_nodes();
    let profiles = groups.len() as f64 * ts.len() as f64 * grid as f64;
    if profiles > budget.max_profiles as f64 {
        return Err(Error::Resource(format!("{profiles} profile values exceed the limit {}", budget.max_profiles)));
    }
    let multisets = binomial(grid + n - 1, n);
    let work = multisets * groups.len() as f64 * ts.len() as f64 * n as f64;
    if work > budget.max_work {
        return Err(Error::Resource(format!("kernel assembly needs ~{work:.2e} operations (limit {:.2e})", budget.max_work)));
    }

    let table = model.table();
    let roots = RootTable::new(grid as u64);
    let inv_grid = 1.0 / grid as f64;
    // profile[(g * ts.len() + j) * grid + (x + r)] = inverse transform along one axis
    let profile: Vec<Complex64> = ts
        .par_iter()
        .enumerate()
        .flat_map_iter(|(_j, &t)| {
            let factors: Vec<Vec<Complex64>> = arcs
                .iter()
                .map(|list| list.iter().map(|arc| model.surface().base_factor(t, arc.offset) * arc.weight).collect())
                .collect();
            let per_group: Vec<Vec<Complex64>> = groups
                .iter()
                .map(|&(_, a, q)| {
                    let samples: Vec<Complex64> = arcs
                        .iter()
                        .zip(&factors)
                        .map(|(list, fs)| {
                            let terms: Vec<Complex64> = list
                                .iter()
                                .zip(fs)
                                .map(|(arc, &f)| if collapsed { f } else { f * table.g(a, q, arc.a, arc.q) })
                                .collect();
                            pairwise_sum(&terms)
                        })
                        .collect();
                    (-r..=r)
                        .map(|x| {
                            let terms: Vec<Complex64> = samples
                                .iter()
                                .enumerate()
                                .filter(|(_, s)| s.norm_sqr() > 0.0)
                                .map(|(l, &s)| s * roots.get((grid as i64 - x.rem_euclid(grid as i64)) as u64 * l as u64))
                                .collect();
                            pairwise_sum(&terms) * inv_grid
                        })
                        .collect()
                })
                .collect();
            per_group.into_iter().flatten().collect::<Vec<_>>()
        })
        .collect();
    // reorder index to (j, g): profile[(j * groups + g) * grid + x]
    let ng = groups.len();
    let coeffs: Vec<Complex64> = (0..ts.len())
        .flat_map(|j| groups.iter().map(move |&(phase, _, _)| (j, phase)))
        .map(|(j, phase)| phase * weights[j])
        .collect();
    let scale = model.prefactor() * model.surface_scale() / origin;

    let tuples = sorted_tuples(n, grid);
    let values: Vec<Complex64> = tuples
        .par_iter()
        .map(|tuple| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, &c) in coeffs.iter().enumerate() {
                let base = idx * grid;
                let mut prod = c;
                for &x in tuple {
                    prod *= profile[base + x];
                }
                acc += prod;
            }
            acc * scale
        })
        .collect();
    debug_assert_eq!(coeffs.len(), ts.len() * ng);

    let mut pairs = Vec::with_capacity(points as usize);
    let mut sup_norm: f64 = 0.0;
    let mut max_imag: f64 = 0.0;
    for (tuple, &v) in tuples.iter().zip(&values) {
        sup_norm = sup_norm.max(v.norm());
        max_imag = max_imag.max(v.im.abs());
        for perm in distinct_permutations(tuple) {
            pairs.push((perm.iter().map(|&x| x as i64 - r).collect::<Vec<_>>(), v));
        }
    }
    let values = LatticeFunction::from_pairs(n, pairs)?;
    Ok(MainKernel {
        values,
        box_radius,
        grid,
        sup_norm,
        max_imag,
        alias_tail: alias_tail(n, grid, box_radius, spec.big_n, params.q),
        overlap: params.overlap,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Nondecreasing tuples of length `n` over `0..m`.
fn sorted_tuples(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    loop {
        out.push(cur.clone());
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] + 1 < m {
                let v = cur[i] + 1;
                for c in &mut cur[i..] {
                    *c = v;
                }
                break;
            }
        }
    }
}

/// Distinct rearrangements of a sorted tuple, in lexicographic order.
fn distinct_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = sorted.to_vec();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (0..cur.len().saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..cur.len()).rev().find(|&j| cur[j] > cur[i]).expect("successor exists");
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
}

fn alias_tail(n: usize, grid: usize, radius: u64, big_n: u64, q: u64) -> f64 {
    let scale = (big_n * q) as f64;
    let m = n as i32 + 1;
    let tail: f64 = (1..=1000)
        .map(|shift| {
            let d = (shift * grid) as f64 - radius as f64;
            (1.0 + d / scale).powi(-m)
        })
        .sum();
    2.0 * n as f64 * tail
}

/// Nodes per simplex level in [`kernel_convolution`].
const SIMPLEX_NODES: usize = 20;

/// `int psi~(x - y) dsigma(y)` where `psi~` inverts the dilated bump
/// `prod_i eta((N/Q) q_i xi_i)` and `dsigma` carries the model's surface scale.
pub fn kernel_convolution(model: &MultiplierModel, qvec: &[u64], x: &[i64]) -> Result<f64> {
    let spec = model.spec();
    if qvec.len() != spec.n || x.len() != spec.n {
        return domain(format!("expected {} coordinates", spec.n));
    }
    if qvec.contains(&0) {
        return domain("moduli must be >= 1");
    }
    let big_q = model.params().q as f64;
    let widths: Vec<f64> = qvec.iter().map(|&q| spec.big_n as f64 * q as f64 / big_q).collect();
    let rule = SimplexRule::new(spec.n, spec.k, SIMPLEX_NODES);
    let root = (spec.lambda as f64).powf(1.0 / spec.k as f64);
    let bump = model.bump();
    let factor = |i: usize, y: f64| {
        let s = widths[i];
        Complex64::new(bump.transform((x[i] as f64 - y) / s) / s, 0.0)
    };
    Ok(rule.expect(root, &factor).re * model.surface_scale())
}

/// `e(-lambda a/q) G_x(a, q, qvec) (psi~ * dsigma)(x)` for one residue class.
pub fn kernel_term(model: &MultiplierModel, a: i64, q: u64, qvec: &[u64], x: &[i64]) -> Result<Complex64> {
    if q == 0 || !is_unit(a, q) {
        return domain(format!("a = {a} is not a unit mod {q}"));
    }
    let spec = model.spec();
    let g = gauss_component(spec.k, a, q, qvec, x, model.params().phase)?;
    let phase = e_frac(-((spec.lambda % q) as i128 * reduce(a, q) as i128), q);
    Ok(phase * g * kernel_convolution(model, qvec, x)?)
}

/// `q Q^(1 + eps) N^-n`, the bound after summing trivially over `a in U_q`.
pub fn trivial_a_sum_bound(model: &MultiplierModel, q: u64) -> f64 {
    a_sum_bound(model.spec(), model.params(), q)
}

fn a_sum_bound(spec: &SphereSpec, params: &MajorArcParams, q: u64) -> f64 {
    q as f64 * (params.q as f64).powf(1.0 + params.epsilon) * (spec.big_n as f64).powi(-(spec.n as i32))
}

/// `N^2 Q^(1 + eps) N^-n`, which dominates the sum of [`trivial_a_sum_bound`] over `q <= N`.
pub fn kernel_decay_target(model: &MultiplierModel) -> f64 {
    decay_target(model.spec(), model.params())
}

/// [`kernel_decay_target`] without building a model.
pub fn decay_target(spec: &SphereSpec, params: &MajorArcParams) -> f64 {
    let big_n = spec.big_n as f64;
    big_n * big_n * a_sum_bound(spec, params, 1)
}

/// Triangle bound `sum_{q, a, qvec, avec} sup_x |term|` for the main kernel.
pub fn kernel_triangle_bound(model: &MultiplierModel) -> f64 {
    let spec = model.spec();
    let p = model.params();
    let table = model.table();
    let mut classes = Vec::new();
    for q in 1..=p.q_max {
        for &a in UnitGroup::new(q as i64).expect("q >= 1").elements() {
            let mut h = 0.0;
            for r in 1..=p.q {
                for &b in UnitGroup::new(r as i64).expect("r >= 1").elements() {
                    h += table.g(a, q, b, r).norm() / r as f64;
                }
            }
            classes.push(h.powi(spec.n as i32));
        }
    }
    let bump_sup = (3.0 * p.q as f64 / spec.big_n as f64).powi(spec.n as i32);
    model.prefactor() * model.surface_scale() * bump_sup * pairwise_sum(&classes)
}
