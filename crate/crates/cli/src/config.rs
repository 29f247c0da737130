//! Run configuration: defaults, a `key = value` file format and flag overrides.

use std::fmt::Write as _;
use std::path::PathBuf;

use prime_sphere::circle_method::{ArcSettings, PhaseConvention, SurfaceNormalization};
use prime_sphere::lattice::ProgressionRule;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaSet {
    Range { min: u64, max: u64 },
    List(Vec<u64>),
}

impl LambdaSet {
    pub fn values(&self) -> Vec<u64> {
        match self {
            LambdaSet::Range { min, max } => (*min..=*max).collect(),
            LambdaSet::List(v) => v.clone(),
        }
    }

    pub fn max(&self) -> u64 {
        match self {
            LambdaSet::Range { max, .. } => *max,
            LambdaSet::List(v) => v.iter().copied().max().unwrap_or(0),
        }
    }
}

/// Which radii a scan visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Progression {
    /// Every radius in the set.
    All,
    /// The default congruence for `(n, k)`, restricted to radii with points.
    Default,
    Nonempty,
    Congruence { residue: u64, modulus: u64, nonempty: bool },
}

impl Progression {
    pub fn rule(&self, n: usize, k: u32) -> Option<ProgressionRule> {
        match *self {
            Progression::All => None,
            Progression::Default => Some(ProgressionRule::admissible(n, k)),
            Progression::Nonempty => Some(ProgressionRule::Nonempty),
            Progression::Congruence { residue, modulus, nonempty: false } => {
                Some(ProgressionRule::Congruence { residue, modulus })
            }
            Progression::Congruence { residue, modulus, nonempty: true } => {
                Some(ProgressionRule::CongruenceNonempty { residue, modulus })
            }
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "all" => return Ok(Progression::All),
            "default" => return Ok(Progression::Default),
            "nonempty" => return Ok(Progression::Nonempty),
            _ => {}
        }
        let (body, nonempty) = match s.strip_suffix("+nonempty") {
            Some(b) => (b, true),
            None => (s, false),
        };
        let parts: Vec<&str> = body.split(':').collect();
        if let ["mod", r, m] = parts[..] {
            let residue = r.parse().map_err(|_| format!("bad residue {r:?}"))?;
            let modulus: u64 = m.parse().map_err(|_| format!("bad modulus {m:?}"))?;
            if modulus == 0 {
                return Err("modulus must be >= 1".into());
            }
            return Ok(Progression::Congruence { residue, modulus, nonempty });
        }
        Err(format!("unknown progression {s:?} (all, default, nonempty, mod:R:M, mod:R:M+nonempty)"))
    }

    fn render(&self) -> String {
        match *self {
            Progression::All => "all".into(),
            Progression::Default => "default".into(),
            Progression::Nonempty => "nonempty".into(),
            Progression::Congruence { residue, modulus, nonempty } => {
                format!("mod:{residue}:{modulus}{}", if nonempty { "+nonempty" } else { "" })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub k: u32,
    pub lambdas: LambdaSet,
    pub progression: Progression,
    pub arcs: ArcSettings,
    /// Frequency samples per axis for multiplier scans.
    pub grid: usize,
    /// Extra random frequencies per radius in multiplier scans.
    pub samples: usize,
    /// Kernel box radius; `None` means `N` of each radius.
    pub box_radius: Option<u64>,
    pub p: Vec<f64>,
    pub with_log: bool,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 5,
            k: 2,
            lambdas: LambdaSet::Range { min: 20, max: 2000 },
            progression: Progression::Default,
            arcs: ArcSettings::default(),
            grid: 4,
            samples: 0,
            box_radius: None,
            p: vec![1.0, 1.25, 1.5, 2.0],
            with_log: false,
            out: PathBuf::from("out"),
            format: OutputFormat::Csv,
            seed: 0,
        }
    }
}

/// Keys in rendering order.
pub const KEYS: [&str; 24] = [
    "n", "k", "lambda", "lambda_min", "lambda_max", "progression", "Q_cap", "Q", "q_max", "B", "C", "theta",
    "quad_points", "epsilon", "normalization", "phase", "grid", "samples", "box_radius", "p", "with_log", "out",
    "format", "seed",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
}

fn optional<T: std::str::FromStr>(key: &str, v: &str) -> Result<Option<T>, String> {
    if v == "auto" || v == "none" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

fn positive(key: &str, v: &str) -> Result<f64, String> {
    let x: f64 = num(key, v)?;
    if !(x.is_finite() && x > 0.0) {
        return Err(format!("{key} must be positive, got {v}"));
    }
    Ok(x)
}

fn render_f64(v: f64) -> String {
    format!("{v}")
}

fn render_opt<T: ToString>(v: &Option<T>, none: &str) -> String {
    v.as_ref().map_or_else(|| none.to_string(), |x| x.to_string())
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        self.set_inner(key, value.trim()).map_err(CliError::Config)
    }

    fn set_inner(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "n" => self.n = num(key, v)?,
            "k" => self.k = num(key, v)?,
            "lambda" => {
                let list = v.split(',').map(|s| num::<u64>(key, s.trim())).collect::<Result<Vec<_>, _>>()?;
                if list.is_empty() {
                    return Err("lambda list is empty".into());
                }
                self.lambdas = LambdaSet::List(list);
            }
            "lambda_min" | "lambda_max" => {
                let x: u64 = num(key, v)?;
                let (mut min, mut max) = match self.lambdas {
                    LambdaSet::Range { min, max } => (min, max),
                    LambdaSet::List(ref l) => {
                        (l.iter().copied().min().unwrap_or(1), l.iter().copied().max().unwrap_or(1))
                    }
                };
                if key == "lambda_min" {
                    min = x;
                } else {
                    max = x;
                }
                self.lambdas = LambdaSet::Range { min, max };
            }
            "progression" => self.progression = Progression::parse(v)?,
            "Q_cap" => self.arcs.q_cap = optional(key, v)?,
            "Q" => self.arcs.q_fixed = optional(key, v)?,
            "q_max" => self.arcs.q_max = optional(key, v)?,
            "B" => self.arcs.b = positive(key, v)?,
            "C" => self.arcs.c = positive(key, v)?,
            "theta" => self.arcs.theta = optional::<f64>(key, v)?,
            "quad_points" => self.arcs.quad_points = num(key, v)?,
            "epsilon" => self.arcs.epsilon = positive(key, v)?,
            "normalization" => {
                self.arcs.normalization = match v {
                    "mass" => SurfaceNormalization::Mass,
                    "unit" => SurfaceNormalization::Unit,
                    _ => return Err(format!("normalization must be mass or unit, got {v:?}")),
                }
            }
            "phase" => {
                self.arcs.phase = match v {
                    "summation-variable" => PhaseConvention::SummationVariable,
                    "literal-first" => PhaseConvention::LiteralFirst,
                    _ => return Err(format!("phase must be summation-variable or literal-first, got {v:?}")),
                }
            }
            "grid" => self.grid = num(key, v)?,
            "samples" => self.samples = num(key, v)?,
            "box_radius" => self.box_radius = optional(key, v)?,
            "p" => {
                let ps = v.split(',').map(|s| num::<f64>(key, s.trim())).collect::<Result<Vec<_>, _>>()?;
                if ps.is_empty() || ps.iter().any(|p| !(1.0..=2.0).contains(p)) {
                    return Err(format!("p values must lie in [1, 2], got {v:?}"));
                }
                self.p = ps;
            }
            "with_log" => self.with_log = matches_bool(v)?,
            "out" => {
                if v.is_empty() {
                    return Err("out must not be empty".into());
                }
                self.out = PathBuf::from(v)
            }
            "format" => {
                self.format = match v {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    _ => return Err(format!("format must be csv or json, got {v:?}")),
                }
            }
            "seed" => self.seed = num(key, v)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Parses a `key = value` document on top of `self`. Blank lines and
    /// lines starting with `#` are ignored; later assignments win.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {}: expected key = value", i + 1)));
            };
            self.set(key.trim(), value)
                .map_err(|e| CliError::Config(format!("line {}: {}", i + 1, e.message())))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.n < 2 || self.n > 16 {
            return bad(format!("n must lie in [2, 16], got {}", self.n));
        }
        if !(2..=8).contains(&self.k) {
            return bad(format!("k must lie in [2, 8], got {}", self.k));
        }
        match &self.lambdas {
            LambdaSet::Range { min, max } if *min < 1 || min > max => {
                return bad(format!("lambda range [{min}, {max}] is empty or starts below 1"))
            }
            LambdaSet::List(l) if l.contains(&0) => return bad("lambda values must be >= 1".into()),
            _ => {}
        }
        if self.grid == 0 {
            return bad("grid must be >= 1".into());
        }
        if self.arcs.quad_points < 64 {
            return bad(format!("quad_points must be >= 64, got {}", self.arcs.quad_points));
        }
        if matches!(self.arcs.q_fixed, Some(0)) || matches!(self.arcs.q_max, Some(0)) {
            return bad("Q and q_max must be >= 1".into());
        }
        if let Some(t) = self.arcs.theta {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("theta must be positive, got {t}"));
            }
        }
        Ok(())
    }

    /// Renders every key; `from_text(render())` reproduces `self`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let value = match key {
                "n" => self.n.to_string(),
                "k" => self.k.to_string(),
                "lambda" => match &self.lambdas {
                    LambdaSet::List(l) => l.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
                    LambdaSet::Range { .. } => continue,
                },
                "lambda_min" => match self.lambdas {
                    LambdaSet::Range { min, .. } => min.to_string(),
                    LambdaSet::List(_) => continue,
                },
                "lambda_max" => match self.lambdas {
                    LambdaSet::Range { max, .. } => max.to_string(),
                    LambdaSet::List(_) => continue,
                },
                "progression" => self.progression.render(),
                "Q_cap" => render_opt(&self.arcs.q_cap, "none"),
                "Q" => render_opt(&self.arcs.q_fixed, "auto"),
                "q_max" => render_opt(&self.arcs.q_max, "auto"),
                "B" => render_f64(self.arcs.b),
                "C" => render_f64(self.arcs.c),
                "theta" => render_opt(&self.arcs.theta, "auto"),
                "quad_points" => self.arcs.quad_points.to_string(),
                "epsilon" => render_f64(self.arcs.epsilon),
                "normalization" => match self.arcs.normalization {
                    SurfaceNormalization::Mass => "mass".into(),
                    SurfaceNormalization::Unit => "unit".into(),
                },
                "phase" => match self.arcs.phase {
                    PhaseConvention::SummationVariable => "summation-variable".into(),
                    PhaseConvention::LiteralFirst => "literal-first".into(),
                },
                "grid" => self.grid.to_string(),
                "samples" => self.samples.to_string(),
                "box_radius" => render_opt(&self.box_radius, "auto"),
                "p" => self.p.iter().map(|p| render_f64(*p)).collect::<Vec<_>>().join(","),
                "with_log" => self.with_log.to_string(),
                "out" => self.out.display().to_string(),
                "format" => match self.format {
                    OutputFormat::Csv => "csv".into(),
                    OutputFormat::Json => "json".into(),
                },
                "seed" => self.seed.to_string(),
                _ => unreachable!("key list and renderer out of sync"),
            };
            let _ = writeln!(s, "{key} = {value}");
        }
        s
    }
}

fn matches_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected a boolean, got {v:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn rendered_configs_reparse(
            n in 3usize..12,
            k in 2u32..4,
            lo in 1u64..5000,
            span in 0u64..5000,
            ps in prop::collection::vec(1.0f64..=2.0, 1..5),
            theta in prop::option::of(0.5f64..600.0),
            eps in 1e-3f64..1.0,
            seed in any::<u64>(),
            residue in 0u64..30,
            modulus in 1u64..30,
            nonempty in any::<bool>(),
        ) {
            let mut c = RunConfig { n, k, lambdas: LambdaSet::Range { min: lo, max: lo + span }, p: ps, seed, ..RunConfig::default() };
            c.arcs.theta = theta;
            c.arcs.epsilon = eps;
            c.progression = Progression::Congruence { residue, modulus, nonempty };
            let back = RunConfig::from_text(&c.render()).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.render(), c.render());
        }
    }

    #[test]
    fn defaults_render_and_parse_back() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_text(&c.render()).unwrap(), c);
    }

    #[test]
    fn later_assignments_win() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nn = 9\nk=3\n\nlambda = 40, 41\nn = 6\np = 1,2\nQ = 1\nQ_cap = none\n").unwrap();
        assert_eq!((c.n, c.k, c.lambdas.clone()), (6, 3, LambdaSet::List(vec![40, 41])));
        assert_eq!(c.p, vec![1.0, 2.0]);
        assert_eq!((c.arcs.q_fixed, c.arcs.q_cap), (Some(1), None));
        assert_eq!(RunConfig::from_text(&c.render()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "nope = 1",
            "n = x",
            "n",
            "p = 3",
            "progression = mod:1:0",
            "format = xml",
            "lambda_min = 10\nlambda_max = 5",
            "grid = 0",
            "B = -1",
            "quad_points = 10",
        ] {
            assert!(RunConfig::from_text(text).is_err(), "{text}");
        }
    }

    #[test]
    fn progression_forms() {
        for s in ["all", "default", "nonempty", "mod:5:24", "mod:5:24+nonempty"] {
            assert_eq!(Progression::parse(s).unwrap().render(), s);
        }
    }
}
