//! The raw multiplier of the prime average and its major-arc decomposition.

use std::collections::HashMap;
use std::sync::RwLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bump::BumpFunction;
use super::series::{PhaseConvention, SeriesTable, SingularSeries};
use super::surface::{default_theta, orthant_mass, SurfaceNormalization, SurfaceTransform};
use crate::arith::{e_real, UnitGroup};
use crate::error::{domain, Error, Result};
use crate::lattice::{PrimeSphere, SphereSpec};
use crate::operators::{sigma_measure, SphericalMeasure};
use crate::summation::pairwise_sum;

/// User-facing knobs; everything else is derived from the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArcSettings {
    /// Target log-power of the error term. Recorded only.
    pub b: f64,
    /// Exponent in `Q = max(1, floor((log N)^C))`.
    pub c: f64,
    /// Upper limit applied to the derived `Q`; `None` disables the cap.
    pub q_cap: Option<u64>,
    /// Use this `Q` instead of deriving it.
    pub q_fixed: Option<u64>,
    /// Singular-series truncation; defaults to `N`.
    pub q_max: Option<u64>,
    pub theta: Option<f64>,
    pub quad_points: usize,
    pub epsilon: f64,
    pub normalization: SurfaceNormalization,
    pub phase: PhaseConvention,
}

impl Default for ArcSettings {
    fn default() -> Self {
        Self {
            b: 1.0,
            c: 1.0,
            q_cap: Some(4),
            q_fixed: None,
            q_max: None,
            theta: None,
            quad_points: 512,
            epsilon: 0.1,
            normalization: SurfaceNormalization::Mass,
            phase: PhaseConvention::SummationVariable,
        }
    }
}

/// Resolved major-arc parameters for one sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorArcParams {
    pub b: f64,
    pub c: f64,
    #[serde(rename = "Q")]
    pub q: u64,
    pub q_max: u64,
    pub theta: f64,
    pub quad_points: usize,
    pub epsilon: f64,
    pub normalization: SurfaceNormalization,
    pub phase: PhaseConvention,
    /// The derived `Q` was lowered to the cap.
    pub capped: bool,
    /// `N < 5 Q^3`: arcs may overlap and the decomposition is not the disjoint one.
    pub overlap: bool,
}

/// `max(1, floor((log N)^C))`.
pub fn q_from_log_power(big_n: u64, c: f64) -> u64 {
    let l = (big_n.max(1) as f64).ln();
    (l.powf(c).floor() as u64).max(1)
}

impl MajorArcParams {
    pub fn derive(spec: &SphereSpec, settings: &ArcSettings) -> Result<Self> {
        let s = settings;
        for (name, v) in [("B", s.b), ("C", s.c), ("epsilon", s.epsilon)] {
            if !(v.is_finite() && v > 0.0) {
                return domain(format!("{name} must be positive, got {v}"));
            }
        }
        let derived = q_from_log_power(spec.big_n, s.c);
        let (q, capped) = match (s.q_fixed, s.q_cap) {
            (Some(0), _) => return domain("Q must be >= 1"),
            (Some(q), _) => (q, false),
            (None, Some(cap)) if derived > cap.max(1) => (cap.max(1), true),
            (None, _) => (derived, false),
        };
        let q_max = s.q_max.unwrap_or(spec.big_n);
        if q_max < q {
            return domain(format!("q_max = {q_max} must be >= Q = {q}"));
        }
        let theta = s.theta.unwrap_or_else(|| default_theta(spec.n, spec.k));
        if !(theta.is_finite() && theta > 0.0) {
            return domain(format!("Theta must be positive, got {theta}"));
        }
        if s.quad_points < 64 {
            return domain(format!("quad_points must be >= 64, got {}", s.quad_points));
        }
        let overlap = (spec.big_n as u128) < 5 * (q as u128).pow(3);
        Ok(Self {
            b: s.b,
            c: s.c,
            q,
            q_max,
            theta,
            quad_points: s.quad_points,
            epsilon: s.epsilon,
            normalization: s.normalization,
            phase: s.phase,
            capped,
            overlap,
        })
    }
}

/// One rational `a/q` whose bump is nonzero at a given coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveArc {
    pub a: u64,
    pub q: u64,
    /// `xi - a/q`, reduced to the nearest-integer representative.
    pub offset: f64,
    /// `eta((N/Q) q offset)`.
    pub weight: f64,
}

/// A multiplier value with the overlap flag of its model attached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierValue {
    pub value: Complex64,
    pub overlap: bool,
}

/// Raw, main and error values at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierTriple {
    pub raw: Complex64,
    pub main: Complex64,
    pub error: Complex64,
    pub overlap: bool,
}

/// Everything needed to evaluate the decomposition at one radius.
pub struct MultiplierModel {
    measure: SphericalMeasure,
    params: MajorArcParams,
    bump: BumpFunction,
    surface: SurfaceTransform,
    table: SeriesTable,
    series_cache: RwLock<HashMap<Vec<(u64, u64)>, SingularSeries>>,
    prefactor: f64,
    scale: f64,
}

impl std::fmt::Debug for MultiplierModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultiplierModel")
            .field("spec", self.spec())
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl MultiplierModel {
    pub fn new(sphere: &PrimeSphere, settings: &ArcSettings) -> Result<Self> {
        let params = MajorArcParams::derive(&sphere.spec, settings)?;
        Self::with_params(sphere, params)
    }

    pub fn with_params(sphere: &PrimeSphere, params: MajorArcParams) -> Result<Self> {
        let measure = sigma_measure(sphere)?;
        let spec = sphere.spec;
        let surface = SurfaceTransform::new(&spec, params.theta, params.quad_points)?;
        let table = SeriesTable::new(spec.k, params.q_max, params.q)?;
        let prefactor = (spec.lambda as f64).powf(spec.n as f64 / spec.k as f64 - 1.0) / sphere.total;
        let scale = match params.normalization {
            SurfaceNormalization::Mass => orthant_mass(spec.n, spec.k),
            SurfaceNormalization::Unit => 1.0,
        };
        Ok(Self {
            measure,
            params,
            bump: BumpFunction::default(),
            surface,
            table,
            series_cache: RwLock::new(HashMap::new()),
            prefactor,
            scale,
        })
    }

    pub fn spec(&self) -> &SphereSpec {
        self.measure.spec()
    }

    pub fn params(&self) -> &MajorArcParams {
        &self.params
    }

    pub fn measure(&self) -> &SphericalMeasure {
        &self.measure
    }

    pub fn bump(&self) -> &BumpFunction {
        &self.bump
    }

    pub fn surface(&self) -> &SurfaceTransform {
        &self.surface
    }

    /// `lambda^(n/k - 1) / P(lambda)`.
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    /// Value of the surface transform at the origin inside the main term.
    pub fn surface_scale(&self) -> f64 {
        self.scale
    }

    pub(crate) fn table(&self) -> &SeriesTable {
        &self.table
    }

    /// Truncated singular series for per-coordinate residues `(a_i, q_i)`, memoized.
    pub fn series(&self, arcs: &[(u64, u64)]) -> SingularSeries {
        if let Some(s) = self.series_cache.read().expect("cache lock").get(arcs) {
            return *s;
        }
        let s = self.table.evaluate(self.spec().lambda, arcs);
        self.series_cache.write().expect("cache lock").insert(arcs.to_vec(), s);
        s
    }

    fn check_frequency(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.spec().n {
            return domain(format!("frequency has {} coordinates, expected {}", xi.len(), self.spec().n));
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return domain("frequency must be finite");
        }
        Ok(())
    }

    /// Rationals `a/q` with `q <= Q` whose bump is nonzero at `xi`.
    pub fn arcs_at(&self, xi: f64) -> Vec<ActiveArc> {
        let dilation = self.spec().big_n as f64 / self.params.q as f64;
        let mut out = Vec::new();
        for q in 1..=self.params.q {
            let units = UnitGroup::new(q as i64).expect("q >= 1");
            for &a in units.elements() {
                let d = xi - a as f64 / q as f64;
                let offset = d - d.round();
                let weight = self.bump.profile(dilation * q as f64 * offset);
                if weight > 0.0 {
                    out.push(ActiveArc { a, q, offset, weight });
                }
            }
        }
        out
    }

    /// Active arcs per coordinate.
    pub fn active_arcs(&self, xi: &[f64]) -> Result<Vec<Vec<ActiveArc>>> {
        self.check_frequency(xi)?;
        Ok(xi.iter().map(|&x| self.arcs_at(x)).collect())
    }

    /// `sum_x sigma(x) e(x . xi)`.
    pub fn raw(&self, xi: &[f64]) -> Result<Complex64> {
        self.check_frequency(xi)?;
        let terms: Vec<Complex64> = self
            .measure
            .sphere()
            .points
            .iter()
            .zip(self.measure.masses())
            .map(|(p, &m)| {
                let phase: f64 = p
                    .iter()
                    .zip(xi)
                    .map(|(&x, &f)| {
                        let t = x as f64 * f;
                        t - t.floor()
                    })
                    .sum();
                e_real(phase) * m
            })
            .collect();
        Ok(pairwise_sum(&terms))
    }

    pub fn main(&self, xi: &[f64]) -> Result<MultiplierValue> {
        let arcs = self.active_arcs(xi)?;
        let overlap = self.params.overlap;
        if arcs.iter().any(|a| a.is_empty()) {
            return Ok(MultiplierValue { value: Complex64::new(0.0, 0.0), overlap });
        }
        let mut idx = vec![0usize; arcs.len()];
        let mut terms = Vec::new();
        loop {
            let chosen: Vec<&ActiveArc> = arcs.iter().zip(&idx).map(|(c, &i)| &c[i]).collect();
            let key: Vec<(u64, u64)> = chosen.iter().map(|c| (c.a, c.q)).collect();
            let weight: f64 = chosen.iter().map(|c| c.weight).product();
            let offsets: Vec<f64> = chosen.iter().map(|c| c.offset).collect();
            let series = self.series(&key).value;
            let transform = self.surface.evaluate(&offsets)?;
            terms.push(series * transform * (weight * self.scale));
            let mut i = 0;
            loop {
                if i == idx.len() {
                    let value = pairwise_sum(&terms) * self.prefactor;
                    return Ok(MultiplierValue { value, overlap });
                }
                idx[i] += 1;
                if idx[i] < arcs[i].len() {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
        }
    }

    pub fn error(&self, xi: &[f64]) -> Result<MultiplierValue> {
        let t = self.triple(xi)?;
        Ok(MultiplierValue { value: t.error, overlap: t.overlap })
    }

    pub fn triple(&self, xi: &[f64]) -> Result<MultiplierTriple> {
        let raw = self.raw(xi)?;
        let main = self.main(xi)?;
        Ok(MultiplierTriple { raw, main: main.value, error: raw - main.value, overlap: main.overlap })
    }
}

/// `M(0)` for many radii from their weighted counts alone, sharing one series table.
///
/// When `N >= 2Q` only the arc `0/1` is active at the origin and both the bump and
/// the normalized surface transform equal 1 there, so the main term reduces to
/// `lambda^(n/k - 1) / P(lambda) * S(lambda) * scale`. Each radius keeps its own
/// `Q` and `q_max` from `settings`.
pub fn main_at_origin(n: usize, k: u32, counts: &[(u64, f64)], settings: &ArcSettings) -> Result<Vec<f64>> {
    let mut resolved = Vec::with_capacity(counts.len());
    for &(lambda, total) in counts {
        let spec = SphereSpec::new(n, k, lambda)?;
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Undefined(format!("P({lambda}) = {total}: no prime points")));
        }
        let params = MajorArcParams::derive(&spec, settings)?;
        if spec.big_n < 2 * params.q {
            return Err(Error::Unsupported(format!(
                "N = {} < 2Q = {}: arcs other than 0/1 reach the origin",
                spec.big_n,
                2 * params.q
            )));
        }
        resolved.push((spec, total, params));
    }
    let Some(q_max) = resolved.iter().map(|r| r.2.q_max).max() else {
        return Ok(Vec::new());
    };
    let table = SeriesTable::new(k, q_max, 1)?;
    let arcs = vec![(0, 1); n];
    // the q-th term depends on lambda only through lambda mod q
    let by_residue: Vec<Vec<Complex64>> = (1..=q_max).into_par_iter().map(|q| table.residue_terms(q, &arcs)).collect();
    Ok(resolved
        .par_iter()
        .map(|(spec, total, params)| {
            let scale = match params.normalization {
                SurfaceNormalization::Mass => orthant_mass(n, k),
                SurfaceNormalization::Unit => 1.0,
            };
            let terms: Vec<Complex64> = (1..=params.q_max)
                .map(|q| by_residue[(q - 1) as usize][(spec.lambda % q) as usize])
                .collect();
            let series = pairwise_sum(&terms).re;
            (spec.lambda as f64).powf(n as f64 / k as f64 - 1.0) / total * series * scale
        })
        .collect())
}

pub fn raw_multiplier(model: &MultiplierModel, xi: &[f64]) -> Result<Complex64> {
    model.raw(xi)
}

pub fn main_multiplier(model: &MultiplierModel, xi: &[f64]) -> Result<MultiplierValue> {
    model.main(xi)
}

pub fn error_multiplier(model: &MultiplierModel, xi: &[f64]) -> Result<MultiplierValue> {
    model.error(xi)
}
