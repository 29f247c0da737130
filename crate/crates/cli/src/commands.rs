//! The subcommands. Each builds its files in memory; writing happens once at the end.

use num_complex::Complex64;
use prime_sphere::circle_method::{
    decay_target, kernel_triangle_bound, main_kernel_with, singular_series, KernelBudget, MajorArcParams,
    MultiplierModel,
};
use prime_sphere::formats::{multiplier_table, points_table, Cell, MultiplierRow, Table};
use prime_sphere::lattice::{
    hua_ratio, n_zero, progression_filter_with, EnumerationBudget, PrimePointIndex, PrimeSphere, SphereSpec,
};
use prime_sphere::norms::{
    box_lower_bounds, delta_lower_bound, endpoint_1_inf, fit_power_law, reference_exponents, riesz_thorin_bound,
    RateFit,
};
use prime_sphere::operators::{dyadic_max_delta, sigma_measure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{LambdaSet, RunConfig};
use crate::error::CliError;
use crate::output::{Outputs, SCHEMA_VERSION};

type Res<T> = Result<T, CliError>;

/// Prime points for every radius up to the configured maximum.
struct Scan<'a> {
    config: &'a RunConfig,
    index: PrimePointIndex,
}

impl<'a> Scan<'a> {
    fn new(config: &'a RunConfig) -> Res<Self> {
        config.validate()?;
        let budget = EnumerationBudget::default();
        let index = PrimePointIndex::new(config.n, config.k, config.lambdas.max().max(1), &budget)?;
        Ok(Self { config, index })
    }

    fn sphere(&self, lambda: u64) -> Res<PrimeSphere> {
        Ok(self.index.sphere(lambda)?)
    }

    /// Radii of the set that pass the progression rule, ascending.
    fn selected(&self) -> Res<Vec<u64>> {
        let c = self.config;
        let mut set = c.lambdas.values();
        set.sort_unstable();
        set.dedup();
        let Some(rule) = c.progression.rule(c.n, c.k) else {
            return Ok(set);
        };
        let (lo, hi) = (set[0], *set.last().expect("nonempty"));
        let kept = progression_filter_with(c.n, c.k, lo..=hi, &rule, &EnumerationBudget::default())?;
        Ok(set.into_iter().filter(|l| kept.binary_search(l).is_ok()).collect())
    }

    /// Selected radii that carry prime points, with their spheres.
    fn nonempty(&self) -> Res<Vec<PrimeSphere>> {
        let spheres: Vec<PrimeSphere> =
            self.selected()?.into_iter().map(|l| self.sphere(l)).collect::<Res<Vec<_>>>()?;
        Ok(spheres.into_iter().filter(|s| !s.is_empty()).collect())
    }

    fn params(&self, spec: &SphereSpec) -> Res<MajorArcParams> {
        Ok(MajorArcParams::derive(spec, &self.config.arcs)?)
    }
}

fn schema(command: &str, columns: &str) -> Vec<String> {
    vec![format!("prime-sphere {command}, schema {SCHEMA_VERSION}"), format!("columns: {columns}")]
}

fn with_comments(mut t: Table, lines: Vec<String>) -> Table {
    t.comments = lines;
    t
}

fn file_stem(base: &str, lambda: u64, single: bool) -> String {
    if single {
        base.to_string()
    } else {
        format!("{base}_{lambda}")
    }
}

#[derive(Serialize)]
struct SphereSummary {
    lambda: u64,
    count: usize,
    #[serde(rename = "P")]
    p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    hua_ratio: Option<f64>,
    flag: &'static str,
}

#[derive(Serialize)]
struct EnumerateSummary {
    n: usize,
    k: u32,
    spheres: Vec<SphereSummary>,
}

pub fn enumerate(config: &RunConfig) -> Res<Outputs> {
    let scan = Scan::new(config)?;
    let mut set = config.lambdas.values();
    set.sort_unstable();
    set.dedup();
    let single = set.len() == 1;
    let mut out = Outputs::default();
    let mut spheres = Vec::new();
    for &lambda in &set {
        let s = scan.sphere(lambda)?;
        let cols = "x1..xn = prime coordinates with sum of k-th powers lambda, weight = product of log x_i";
        let mut lines = schema("enumerate", cols);
        lines.push(format!("lambda = {lambda}"));
        out.table(&file_stem("points", lambda, single), &with_comments(points_table(&s), lines), config.format)?;
        spheres.push(SphereSummary {
            lambda,
            count: s.len(),
            p: s.total,
            hua_ratio: if s.is_empty() { None } else { Some(hua_ratio(&s)?) },
            flag: if s.is_empty() { "empty" } else { "ok" },
        });
    }
    out.json("summary.json", &EnumerateSummary { n: config.n, k: config.k, spheres })?;
    Ok(out)
}

#[derive(Serialize)]
struct FitPair {
    plain: RateFit,
    #[serde(skip_serializing_if = "Option::is_none")]
    with_log: Option<RateFit>,
}

fn fit_pair(samples: &[(f64, f64)], with_log: bool) -> Res<FitPair> {
    let plain = fit_power_law(samples, false)?;
    let with_log = if with_log { Some(fit_power_law(samples, true)?) } else { None };
    Ok(FitPair { plain, with_log })
}

pub fn hua_scan(config: &RunConfig) -> Res<Outputs> {
    let scan = Scan::new(config)?;
    let spheres = scan.nonempty()?;
    if spheres.len() < 4 {
        return Err(prime_sphere::Error::InsufficientData(format!(
            "{} nonempty radii in the progression, need at least 4",
            spheres.len()
        ))
        .into());
    }
    let rows: Vec<Vec<Cell>> = spheres
        .par_iter()
        .map(|s| {
            let q_max = config.arcs.q_max.unwrap_or(s.spec.big_n);
            let series = singular_series(&s.spec, &vec![0; s.spec.n], &vec![1; s.spec.n], q_max)?;
            Ok(vec![
                s.spec.lambda.into(),
                s.total.into(),
                hua_ratio(s)?.into(),
                series.value.re.into(),
                series.last_block.into(),
                q_max.into(),
            ])
        })
        .collect::<Res<Vec<_>>>()?;
    let mut t = Table::new(["lambda", "P", "hua_ratio", "sing_series_trunc", "sing_series_last_block", "q_max"]);
    t.comments = schema(
        "hua-scan",
        "P = log-weighted count, hua_ratio = P / lambda^(n/k-1), sing_series_trunc = truncated singular series at q <= q_max",
    );
    rows.into_iter().for_each(|r| t.push(r));
    let samples: Vec<(f64, f64)> = spheres.iter().map(|s| (s.spec.lambda as f64, s.total)).collect();
    let mut out = Outputs::default();
    out.table("hua_scan", &t, config.format)?;
    out.json("hua_fit.json", &fit_pair(&samples, config.with_log)?)?;
    Ok(out)
}

fn budget_allows_kernel(n: usize, radius: u64, budget: &KernelBudget) -> bool {
    ((2 * radius + 1) as f64).powi(n as i32) <= budget.max_points as f64
}

#[derive(Serialize)]
struct DecayFits {
    sigma: FitPair,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel: Option<FitPair>,
}

pub fn kernel_decay(config: &RunConfig) -> Res<Outputs> {
    let scan = Scan::new(config)?;
    let spheres = scan.nonempty()?;
    if spheres.len() < 4 {
        return Err(prime_sphere::Error::InsufficientData(format!("{} nonempty radii, need 4", spheres.len())).into());
    }
    let budget = KernelBudget::default();
    let mut sigma = Table::new(["lambda", "N", "Q", "sigma_sup", "decay_target", "overlap_flag"]);
    sigma.comments = schema(
        "kernel-decay",
        "sigma_sup = largest atom of sigma_lambda, decay_target = N^2 Q^(1+eps) N^-n",
    );
    let mut kernel = Table::new([
        "lambda",
        "N",
        "Q",
        "box_radius",
        "kernel_sup",
        "kernel_max_imag",
        "alias_tail",
        "triangle_bound",
        "overlap_flag",
    ]);
    kernel.comments = schema(
        "kernel-decay",
        "kernel_sup = sup of the main-term kernel on the box, alias_tail = estimated relative aliasing",
    );
    let results: Vec<(Vec<Cell>, Option<Vec<Cell>>)> = spheres
        .par_iter()
        .map(|s| {
            let spec = s.spec;
            let params = scan.params(&spec)?;
            let sup = endpoint_1_inf(&sigma_measure(s)?);
            let row = vec![
                spec.lambda.into(),
                spec.big_n.into(),
                params.q.into(),
                sup.into(),
                decay_target(&spec, &params).into(),
                params.overlap.into(),
            ];
            let radius = config.box_radius.unwrap_or(spec.big_n).max(spec.big_n);
            let krow = if budget_allows_kernel(spec.n, radius, &budget) {
                let model = MultiplierModel::with_params(s, params.clone())?;
                let k = main_kernel_with(&model, radius, &budget)?;
                Some(vec![
                    spec.lambda.into(),
                    spec.big_n.into(),
                    params.q.into(),
                    radius.into(),
                    k.sup_norm.into(),
                    k.max_imag.into(),
                    k.alias_tail.into(),
                    kernel_triangle_bound(&model).into(),
                    k.overlap.into(),
                ])
            } else {
                None
            };
            Ok((row, krow))
        })
        .collect::<Res<Vec<_>>>()?;
    let mut sigma_samples = Vec::new();
    let mut kernel_samples = Vec::new();
    for (row, krow) in results {
        if let (Cell::Int(l), Cell::Float(v)) = (&row[0], &row[3]) {
            sigma_samples.push((*l as f64, *v));
        }
        sigma.push(row);
        if let Some(k) = krow {
            if let (Cell::Int(l), Cell::Float(v)) = (&k[0], &k[4]) {
                if *v > 0.0 {
                    kernel_samples.push((*l as f64, *v));
                }
            }
            kernel.push(k);
        }
    }
    let fits = DecayFits {
        sigma: fit_pair(&sigma_samples, config.with_log)?,
        kernel: if kernel_samples.len() >= 4 { Some(fit_pair(&kernel_samples, config.with_log)?) } else { None },
    };
    let mut out = Outputs::default();
    out.table("sigma_sup", &sigma, config.format)?;
    out.table("kernel_sup", &kernel, config.format)?;
    out.json("decay_fits.json", &fits)?;
    Ok(out)
}

const MULTIPLIER_LIMIT: f64 = 2e6;

/// Grid frequencies `l / grid` followed by seeded uniform samples.
fn frequencies(n: usize, grid: usize, samples: usize, seed: u64) -> Res<Vec<Vec<f64>>> {
    let total = (grid as f64).powi(n as i32) + samples as f64;
    if total > MULTIPLIER_LIMIT {
        return Err(prime_sphere::Error::Resource(format!("{total} frequencies exceed {MULTIPLIER_LIMIT}")).into());
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    'grid: loop {
        out.push(idx.iter().map(|&l| l as f64 / grid as f64).collect());
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < grid {
                continue 'grid;
            }
            idx[i] = 0;
        }
        break;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        out.push((0..n).map(|_| rng.random::<f64>()).collect());
    }
    Ok(out)
}

pub fn multiplier(config: &RunConfig) -> Res<Outputs> {
    let scan = Scan::new(config)?;
    let spheres = scan.nonempty()?;
    if spheres.is_empty() {
        return Err(prime_sphere::Error::InsufficientData("no nonempty radius in the progression".into()).into());
    }
    let single = spheres.len() == 1;
    let mut out = Outputs::default();
    for s in &spheres {
        let lambda = s.spec.lambda;
        let model = MultiplierModel::new(s, &config.arcs)?;
        let xis = frequencies(s.spec.n, config.grid, config.samples, config.seed ^ lambda)?;
        let rows: Vec<MultiplierRow> = xis
            .par_iter()
            .map(|xi| {
                let t = model.triple(xi)?;
                Ok(MultiplierRow { xi: xi.clone(), raw: t.raw, main: t.main, error: t.error, overlap: t.overlap })
            })
            .collect::<Res<Vec<_>>>()?;
        let p = model.params();
        let mut lines = schema(
            "multiplier",
            "xi_i = frequency, raw = transform of sigma_lambda, main = major-arc term, err = raw - main",
        );
        lines.push(format!("lambda = {lambda}, N = {}, Q = {}, q_max = {}", s.spec.big_n, p.q, p.q_max));
        if p.capped {
            lines.push("warning: Q lowered to the configured cap".into());
        }
        let t = with_comments(multiplier_table(s.spec.n, &rows), lines);
        out.table(&file_stem("multiplier", lambda, single), &t, config.format)?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct ImprovingFit {
    p: f64,
    reference: f64,
    upper: RateFit,
    lower: RateFit,
}

pub fn improving(config: &RunConfig) -> Res<Outputs> {
    let scan = Scan::new(config)?;
    let spheres = scan.nonempty()?;
    if spheres.len() < 4 {
        return Err(prime_sphere::Error::InsufficientData(format!("{} nonempty radii, need 4", spheres.len())).into());
    }
    let ps = config.p.clone();
    let rows: Vec<Vec<(f64, f64, Vec<Cell>)>> = spheres
        .par_iter()
        .map(|s| {
            let m = sigma_measure(s)?;
            let sup = endpoint_1_inf(&m);
            let overlap = scan.params(&s.spec)?.overlap;
            let boxes = box_lower_bounds(&m, 1, &ps)?;
            ps.iter()
                .zip(boxes)
                .map(|(&p, boxed)| {
                    let delta = delta_lower_bound(&m, p)?;
                    let upper = riesz_thorin_bound(sup, 1.0, p)?;
                    let r = reference_exponents(s.spec.n, s.spec.k, p)?;
                    let row = vec![
                        s.spec.lambda.into(),
                        p.into(),
                        delta.into(),
                        boxed.into(),
                        upper.into(),
                        r.interpolated.into(),
                        r.improved.into(),
                        r.integer.into(),
                        overlap.into(),
                    ];
                    Ok((delta.max(boxed), upper, row))
                })
                .collect()
        })
        .collect::<Res<Vec<_>>>()?;
    let mut t = Table::new([
        "lambda",
        "p",
        "lower_delta",
        "lower_box",
        "upper",
        "ref_interpolated",
        "ref_improved",
        "ref_integer",
        "overlap_flag",
    ]);
    t.comments = schema(
        "improving",
        "lower_* = test-function lower bounds of the l^p -> l^p' norm, upper = interpolation bound, ref_* = reference exponents",
    );
    let mut fits = Vec::new();
    for (j, &p) in ps.iter().enumerate() {
        let lower: Vec<(f64, f64)> = spheres.iter().zip(&rows).map(|(s, r)| (s.spec.lambda as f64, r[j].0)).collect();
        let upper: Vec<(f64, f64)> = spheres.iter().zip(&rows).map(|(s, r)| (s.spec.lambda as f64, r[j].1)).collect();
        fits.push(ImprovingFit {
            p,
            reference: reference_exponents(config.n, config.k, p)?.interpolated,
            upper: fit_power_law(&upper, config.with_log)?,
            lower: fit_power_law(&lower, config.with_log)?,
        });
    }
    for per_lambda in rows {
        for (_, _, row) in per_lambda {
            t.push(row);
        }
    }
    let mut out = Outputs::default();
    out.table("improving", &t, config.format)?;
    out.json("improving_fits.json", &fits)?;
    Ok(out)
}

pub fn dyadic(config: &RunConfig) -> Res<Outputs> {
    let scan = Scan::new(config)?;
    let selected = scan.selected()?;
    let (lo, hi) = match &config.lambdas {
        LambdaSet::Range { min, max } => (*min, *max),
        LambdaSet::List(_) => (selected[0], *selected.last().expect("validated")),
    };
    let mut blocks = Vec::new();
    let mut start = lo.next_power_of_two();
    while start.checked_mul(2).is_some_and(|end| end - 1 <= hi) {
        blocks.push(start);
        start *= 2;
    }
    let rows: Vec<Option<Vec<Cell>>> = blocks
        .par_iter()
        .map(|&b| {
            let members: Vec<u64> = selected.iter().copied().filter(|l| (b..2 * b).contains(l)).collect();
            let spheres: Vec<PrimeSphere> = members
                .iter()
                .map(|&l| scan.sphere(l))
                .collect::<Res<Vec<_>>>()?
                .into_iter()
                .filter(|s| !s.is_empty())
                .collect();
            if spheres.is_empty() {
                return Ok(None);
            }
            let sup = dyadic_max_delta(&spheres)?.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
            let overlap = spheres.iter().map(|s| scan.params(&s.spec).map(|p| p.overlap)).collect::<Res<Vec<_>>>()?;
            Ok(Some(vec![
                b.into(),
                (2 * b - 1).into(),
                spheres.len().into(),
                sup.into(),
                overlap.into_iter().any(|o| o).into(),
            ]))
        })
        .collect::<Res<Vec<_>>>()?;
    let mut t = Table::new(["block_start", "block_end", "count", "sup", "overlap_flag"]);
    t.comments = schema("dyadic", "sup = sup over the block of |A_lambda delta_0|, count = nonempty radii in the block");
    let mut samples = Vec::new();
    for r in rows.into_iter().flatten() {
        if let (Cell::Int(b), Cell::Float(v)) = (&r[0], &r[3]) {
            samples.push((*b as f64, *v));
        }
        t.push(r);
    }
    let mut out = Outputs::default();
    out.table("dyadic", &t, config.format)?;
    out.json("dyadic_fit.json", &fit_pair(&samples, config.with_log)?)?;
    Ok(out)
}

/// Quick internal consistency checks. Returns one `(name, passed, detail)` per check.
pub fn selftest() -> Vec<(&'static str, bool, String)> {
    let mut results = Vec::new();
    let mut check = |name: &'static str, f: &dyn Fn() -> Result<(bool, String), CliError>| {
        let (ok, detail) = f().unwrap_or_else(|e| (false, e.to_string()));
        results.push((name, ok, detail));
    };
    check("normalization", &|| {
        let index = PrimePointIndex::new(5, 2, 500, &EnumerationBudget::default())?;
        let mut worst: f64 = 0.0;
        for l in 20..=500 {
            let s = index.sphere(l)?;
            if s.is_empty() {
                continue;
            }
            let m = sigma_measure(&s)?;
            worst = worst.max((m.total_mass() - 1.0).abs());
        }
        Ok((worst < 1e-10, format!("max |sum sigma - 1| = {worst:.2e}")))
    });
    check("enumeration-oracle", &|| {
        use prime_sphere::lattice::{enumerate_prime_points_with, Algorithm};
        let budget = EnumerationBudget::default();
        for l in 1..=200 {
            let spec = SphereSpec::new(4, 2, l)?;
            let a = enumerate_prime_points_with(&spec, Algorithm::MeetInMiddle, &budget)?;
            let b = enumerate_prime_points_with(&spec, Algorithm::BruteForce, &budget)?;
            if a.points != b.points {
                return Ok((false, format!("mismatch at lambda = {l}")));
            }
        }
        Ok((true, "n=4, k=2, lambda <= 200".into()))
    });
    check("gauss-lemma", &|| {
        use prime_sphere::arith::{gauss_row_sums, lemma_bound, UnitGroup};
        for q in 1..=12u64 {
            for &a in UnitGroup::new(q as i64)?.elements() {
                for r in 1..=12u64 {
                    let bound = lemma_bound(q, r);
                    if gauss_row_sums(2, a as i64, q, r)?.iter().any(|v| v.norm() > bound + 1e-9) {
                        return Ok((false, format!("q={q} a={a} r={r}")));
                    }
                }
            }
        }
        Ok((true, "q, r <= 12".into()))
    });
    check("n0-table", &|| {
        let got: Vec<usize> = (2..=5).map(n_zero).collect::<Result<_, _>>()?;
        Ok((got == [5, 9, 17, 25], format!("{got:?}")))
    });
    check("multiplier-origin", &|| {
        let s = PrimePointIndex::new(5, 2, 293, &EnumerationBudget::default())?.sphere(293)?;
        let settings = prime_sphere::circle_method::ArcSettings { q_fixed: Some(1), quad_points: 128, ..Default::default() };
        let model = MultiplierModel::new(&s, &settings)?;
        let raw = model.raw(&[0.0; 5])?;
        Ok(((raw - Complex64::new(1.0, 0.0)).norm() < 1e-12, format!("raw(0) = {raw}")))
    });
    results
}
