//! Truncated singular series and the Gauss components of the kernel.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{e_frac, gauss_g_over_units, gauss_row_sums, is_unit, reduce, UnitGroup};
use crate::error::{domain, Error, Result};
use crate::lattice::SphereSpec;
use crate::summation::pairwise_sum;

/// Which frequency multiplies `x_i` in the phase of a Gauss component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseConvention {
    /// `e(-a_i x_i / q_i)`: the phase follows the coordinate's own summation variable.
    #[default]
    SummationVariable,
    /// `e(-a_1 x_i / q_i)`: the first coordinate's residue in every factor.
    LiteralFirst,
}

/// Truncated value together with the size of its last dyadic block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularSeries {
    pub value: Complex64,
    /// `|sum over q_max/2 < q <= q_max|`: small when the truncation has settled.
    pub last_block: f64,
}

const TABLE_LIMIT: usize = 50_000_000;

/// `g(a, q; b, r)` for all `q <= q_max`, `r <= r_max`, `a in U_q`, `b in U_r`.
pub(crate) struct SeriesTable {
    q_max: u64,
    units: Vec<UnitGroup>,
    r_units: Vec<UnitGroup>,
    values: Vec<Vec<Vec<Complex64>>>,
}

impl SeriesTable {
    pub(crate) fn new(k: u32, q_max: u64, r_max: u64) -> Result<Self> {
        if q_max == 0 || r_max == 0 {
            return domain("singular series moduli must be >= 1");
        }
        let units: Vec<UnitGroup> = (1..=q_max).map(|q| UnitGroup::new(q as i64)).collect::<Result<_>>()?;
        let r_units: Vec<UnitGroup> = (1..=r_max).map(|r| UnitGroup::new(r as i64)).collect::<Result<_>>()?;
        let entries = units.iter().map(|u| u.len()).sum::<usize>() * r_units.iter().map(|u| u.len()).sum::<usize>();
        if entries > TABLE_LIMIT {
            return Err(Error::Resource(format!(
                "singular series table needs {entries} Gauss sums (limit {TABLE_LIMIT}); lower q_max"
            )));
        }
        let values = units
            .par_iter()
            .map(|uq| {
                let q = uq.modulus();
                (1..=r_max)
                    .map(|r| uq.elements().iter().flat_map(|&a| gauss_g_over_units(k, a, q, r)).collect())
                    .collect()
            })
            .collect();
        Ok(Self { q_max, units, r_units, values })
    }

    /// Position of each `a_i` inside `U_{q_i}`; assumes the pairs were validated.
    fn positions(&self, arcs: &[(u64, u64)]) -> Vec<(usize, usize)> {
        arcs.iter()
            .map(|&(a, r)| {
                let ur = &self.r_units[(r - 1) as usize];
                let b = ur.elements().binary_search(&a).expect("validated unit");
                ((r - 1) as usize, b)
            })
            .collect()
    }

    /// Series at radius `lambda` for per-coordinate residues `arcs = [(a_i, q_i)]`.
    pub(crate) fn evaluate(&self, lambda: u64, arcs: &[(u64, u64)]) -> SingularSeries {
        let q_max = self.q_max;
        let pos = self.positions(arcs);
        let per_q: Vec<Complex64> = self
            .units
            .iter()
            .take(q_max as usize)
            .zip(&self.values)
            .map(|(uq, rows)| {
                let q = uq.modulus();
                let terms: Vec<Complex64> = uq
                    .elements()
                    .iter()
                    .enumerate()
                    .map(|(ai, &a)| {
                        let mut prod = e_frac(-((lambda % q) as i128) * a as i128, q);
                        for &(ri, b) in &pos {
                            let width = self.r_units[ri].len();
                            prod *= rows[ri][ai * width + b];
                        }
                        prod
                    })
                    .collect();
                pairwise_sum(&terms)
            })
            .collect();
        let split = (q_max / 2) as usize;
        SingularSeries { value: pairwise_sum(&per_q), last_block: pairwise_sum(&per_q[split..]).norm() }
    }

    /// The modulus-`q` term of the series for every residue of `lambda` mod `q`.
    pub(crate) fn residue_terms(&self, q: u64, arcs: &[(u64, u64)]) -> Vec<Complex64> {
        let pos = self.positions(arcs);
        let uq = &self.units[(q - 1) as usize];
        let rows = &self.values[(q - 1) as usize];
        let products: Vec<Complex64> = (0..uq.len())
            .map(|ai| {
                pos.iter().fold(Complex64::new(1.0, 0.0), |acc, &(ri, b)| {
                    acc * rows[ri][ai * self.r_units[ri].len() + b]
                })
            })
            .collect();
        (0..q)
            .map(|res| {
                let terms: Vec<Complex64> = uq
                    .elements()
                    .iter()
                    .zip(&products)
                    .map(|(&a, &g)| e_frac(-(res as i128) * a as i128, q) * g)
                    .collect();
                pairwise_sum(&terms)
            })
            .collect()
    }

    /// `g(a, q; b, r)` from the table; `a`, `b` must be units of their moduli.
    pub(crate) fn g(&self, a: u64, q: u64, b: u64, r: u64) -> Complex64 {
        let uq = &self.units[(q - 1) as usize];
        let ur = &self.r_units[(r - 1) as usize];
        let ai = uq.elements().binary_search(&a).expect("unit");
        let bi = ur.elements().binary_search(&b).expect("unit");
        self.values[(q - 1) as usize][(r - 1) as usize][ai * ur.len() + bi]
    }
}

fn validate_arcs(n: usize, avec: &[i64], qvec: &[u64]) -> Result<Vec<(u64, u64)>> {
    if avec.len() != n || qvec.len() != n {
        return domain(format!("residue vectors must have {n} coordinates"));
    }
    avec.iter()
        .zip(qvec)
        .map(|(&a, &q)| {
            if q == 0 {
                return domain("moduli must be >= 1");
            }
            if !is_unit(a, q) {
                return domain(format!("a = {a} is not a unit mod {q}"));
            }
            Ok((reduce(a, q), q))
        })
        .collect()
}

/// `sum_{q <= q_max} sum_{a in U_q} e(-lambda a/q) prod_i g(a, q; a_i, q_i)`.
pub fn singular_series(spec: &SphereSpec, avec: &[i64], qvec: &[u64], q_max: u64) -> Result<SingularSeries> {
    let arcs = validate_arcs(spec.n, avec, qvec)?;
    let r_max = qvec.iter().copied().max().unwrap_or(1);
    let table = SeriesTable::new(spec.k, q_max, r_max)?;
    Ok(table.evaluate(spec.lambda, &arcs))
}

const LITERAL_LIMIT: u128 = 1_000_000;

/// `G_x(a, q, qvec)`, the Gauss factor of a single kernel term.
pub fn gauss_component(
    k: u32,
    a: i64,
    q: u64,
    qvec: &[u64],
    x: &[i64],
    convention: PhaseConvention,
) -> Result<Complex64> {
    if q == 0 || qvec.contains(&0) {
        return domain("moduli must be >= 1");
    }
    if !is_unit(a, q) {
        return domain(format!("a = {a} is not a unit mod {q}"));
    }
    if qvec.len() != x.len() {
        return domain("moduli and point must have the same length");
    }
    match convention {
        PhaseConvention::SummationVariable => {
            let mut prod = Complex64::new(1.0, 0.0);
            for (&r, &xi) in qvec.iter().zip(x) {
                prod *= gauss_row_sums(k, a, q, r)?[reduce(xi, r) as usize];
            }
            Ok(prod)
        }
        PhaseConvention::LiteralFirst => literal_first(k, reduce(a, q), q, qvec, x),
    }
}

fn literal_first(k: u32, a: u64, q: u64, qvec: &[u64], x: &[i64]) -> Result<Complex64> {
    let groups: Vec<UnitGroup> = qvec.iter().map(|&r| UnitGroup::new(r as i64)).collect::<Result<_>>()?;
    let size: u128 = groups.iter().map(|g| g.len() as u128).product();
    if size > LITERAL_LIMIT {
        return Err(Error::Resource(format!("{size} residue tuples exceed the limit {LITERAL_LIMIT}")));
    }
    let g: Vec<Vec<Complex64>> = qvec.iter().map(|&r| gauss_g_over_units(k, a, q, r)).collect();
    let mut idx = vec![0usize; qvec.len()];
    let mut terms = Vec::with_capacity(size as usize);
    loop {
        let a1 = groups[0].elements()[idx[0]] as i128;
        let mut prod = Complex64::new(1.0, 0.0);
        for (i, (&r, &xi)) in qvec.iter().zip(x).enumerate() {
            prod *= g[i][idx[i]] * e_frac(-a1 * xi as i128, r);
        }
        terms.push(prod);
        let mut i = 0;
        loop {
            if i == idx.len() {
                return Ok(pairwise_sum(&terms));
            }
            idx[i] += 1;
            if idx[i] < groups[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}
