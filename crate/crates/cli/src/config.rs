//! Run configuration: TOML (or JSON) files merged with command-line overrides.

use std::fmt;
use std::path::Path;

use dioph::constructions::Mode;
use dioph::series::{format_rational, parse_rational};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_THETA: u64 = 5;
pub const DEFAULT_PRECISION_BITS: u32 = 256;
pub const DEFAULT_SEED: u64 = 1;

/// A rational read from `"p/q"`, a decimal string, or an integer.
#[derive(Clone, PartialEq, Eq)]
pub struct Rat(pub BigRational);

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_rational(&self.0))
    }
}

impl Serialize for Rat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(x) => Ok(Rat(BigRational::from_integer(x.into()))),
            Repr::Str(s) => parse_rational(&s).map(Rat).map_err(serde::de::Error::custom),
        }
    }
}

impl std::str::FromStr for Rat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_rational(s).map(Rat).map_err(|e| e.to_string())
    }
}

fn default_theta() -> u64 {
    DEFAULT_THETA
}

fn default_c2() -> f64 {
    1.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConstructionConfig {
    /// A line in ℝⁿ with a periodic β schedule.
    Ch5 {
        n: usize,
        #[serde(default = "default_theta")]
        theta: u64,
        betas: Vec<Rat>,
    },
    /// d generators, first-angle exponents prescribed by `betas` (length n − d).
    Ch6 {
        n: usize,
        d: usize,
        #[serde(default = "default_theta")]
        theta: u64,
        betas: Vec<Rat>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level_betas: Option<Vec<Rat>>,
    },
    /// Direct sum of d block lines, each in ℝ^{m+1}; `betas` is d rows of m values.
    Ch7 {
        d: usize,
        m: usize,
        #[serde(default = "default_theta")]
        theta: u64,
        betas: Vec<Vec<Rat>>,
        #[serde(default = "default_c2")]
        c2: f64,
    },
    /// d generators in ℝ^{(q+1)d} with α_k = α^k.
    Ch8 {
        d: usize,
        q: usize,
        #[serde(default = "default_theta")]
        theta: u64,
        alpha: Rat,
    },
}

impl ConstructionConfig {
    pub fn variant(&self) -> &'static str {
        match self {
            ConstructionConfig::Ch5 { .. } => "ch5",
            ConstructionConfig::Ch6 { .. } => "ch6",
            ConstructionConfig::Ch7 { .. } => "ch7",
            ConstructionConfig::Ch8 { .. } => "ch8",
        }
    }

    pub fn ambient(&self) -> usize {
        match *self {
            ConstructionConfig::Ch5 { n, .. } | ConstructionConfig::Ch6 { n, .. } => n,
            ConstructionConfig::Ch7 { d, m, .. } => d * (m + 1),
            ConstructionConfig::Ch8 { d, q, .. } => d * (q + 1),
        }
    }

    pub fn target_dim(&self) -> usize {
        match *self {
            ConstructionConfig::Ch5 { .. } => 1,
            ConstructionConfig::Ch6 { d, .. } | ConstructionConfig::Ch7 { d, .. } | ConstructionConfig::Ch8 { d, .. } => d,
        }
    }

    /// Family dimensions the construction defines.
    pub fn dims(&self) -> Vec<usize> {
        match *self {
            ConstructionConfig::Ch5 { n, .. } => (1..n).collect(),
            ConstructionConfig::Ch6 { n, d, .. } => (1..=n - d).collect(),
            ConstructionConfig::Ch7 { d, m, .. } => (d..d * (m + 1)).collect(),
            ConstructionConfig::Ch8 { d, q, .. } => (1..=q * d).collect(),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("construction.{field}: {msg}")));
        match self {
            ConstructionConfig::Ch5 { n, betas, .. } => {
                if *n < 2 {
                    return bad("n", format!("{n} < 2"));
                }
                if betas.is_empty() {
                    return bad("betas", "empty".into());
                }
            }
            ConstructionConfig::Ch6 { n, d, betas, level_betas, .. } => {
                if *d == 0 || d >= n {
                    return bad("d", format!("{d} not in [1, {}]", n.saturating_sub(1)));
                }
                if betas.len() != n - d {
                    return bad("betas", format!("expected {} values, got {}", n - d, betas.len()));
                }
                if let Some(l) = level_betas {
                    if l.len() != d - 1 {
                        return bad("level_betas", format!("expected {} values, got {}", d - 1, l.len()));
                    }
                }
            }
            ConstructionConfig::Ch7 { d, m, betas, .. } => {
                if *d == 0 || *m == 0 {
                    return bad("d", "d and m must be positive".into());
                }
                if betas.len() != *d {
                    return bad("betas", format!("expected {d} rows, got {}", betas.len()));
                }
                for (i, r) in betas.iter().enumerate() {
                    if r.len() != *m {
                        return bad(&format!("betas[{i}]"), format!("expected {m} values, got {}", r.len()));
                    }
                }
            }
            ConstructionConfig::Ch8 { d, q, .. } => {
                if *d == 0 || *q == 0 {
                    return bad("d", "d and q must be positive".into());
                }
            }
        }
        let theta = match self {
            ConstructionConfig::Ch5 { theta, .. }
            | ConstructionConfig::Ch6 { theta, .. }
            | ConstructionConfig::Ch7 { theta, .. }
            | ConstructionConfig::Ch8 { theta, .. } => *theta,
        };
        if theta < 2 {
            return bad("theta", format!("{theta} < 2"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub e: Option<Vec<usize>>,
    /// Angle index; defaults to the last angle (first angle for ch6).
    pub j: Option<usize>,
    /// Records used by the slope estimate, counted from the end.
    pub window: Option<usize>,
    /// ch7: 0-based block subset (default: all blocks).
    pub blocks: Option<Vec<usize>>,
    /// ch7: cap on the deepest series exponent in bits.
    pub max_bits: Option<f64>,
    #[serde(default)]
    pub duality: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateConfig {
    /// `construction`, or `sqrt:S` for the line through (1, √S).
    pub target: Option<String>,
    pub n: Option<usize>,
    pub e: Option<usize>,
    pub j: Option<usize>,
    /// Bound on H (not H²).
    pub bound: Option<u64>,
    /// Truncation depth of a construction target when a fixed realization is needed.
    pub depth: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub suites: Option<Vec<String>>,
    pub cases: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// records.json files to merge (default: the one in the output directory).
    pub inputs: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub precision_bits: Option<u32>,
    pub construction: Option<ConstructionConfig>,
    #[serde(default)]
    pub measure: MeasureConfig,
    #[serde(default)]
    pub enumerate: EnumerateConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

impl RunConfig {
    pub fn from_str(text: &str, json: bool) -> Result<Self, CliError> {
        let path_err = |e: String| CliError::Config(e);
        if json {
            let de = &mut serde_json::Deserializer::from_str(text);
            serde_path_to_error::deserialize(de).map_err(|e| path_err(format!("{}: {}", e.path(), e.inner())))
        } else {
            let de = toml::Deserializer::new(text);
            serde_path_to_error::deserialize(de).map_err(|e| path_err(format!("{}: {}", e.path(), e.inner().message())))
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|x| x == "json") || text.trim_start().starts_with('{');
        Self::from_str(&text, json)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or_default()
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits.unwrap_or(DEFAULT_PRECISION_BITS)
    }

    pub fn construction(&self) -> Result<&ConstructionConfig, CliError> {
        self.construction.as_ref().ok_or_else(|| CliError::Config("construction: missing".into()))
    }

    /// Fills every default so the embedded copy in each output is complete.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        self.seed = Some(self.seed());
        self.mode = Some(self.mode());
        let bits = self.precision_bits();
        if !(64..=1 << 20).contains(&bits) {
            return Err(CliError::Config(format!("precision_bits: {bits} not in [64, 1048576]")));
        }
        self.precision_bits = Some(bits);
        if let Some(c) = &self.construction {
            c.validate()?;
            let m = &mut self.measure;
            let n_min = *m.n_min.get_or_insert(1);
            let span = if matches!(c, ConstructionConfig::Ch8 { .. }) { 1 } else { 3 };
            let n_max = *m.n_max.get_or_insert(n_min + span);
            if n_min > n_max {
                return Err(CliError::Config(format!("measure.n_min: {n_min} > n_max = {n_max} (empty family)")));
            }
            let dims = c.dims();
            let e = m.e.get_or_insert_with(|| dims.clone());
            if e.is_empty() {
                return Err(CliError::Config("measure.e: empty family".into()));
            }
            for (i, x) in e.iter().enumerate() {
                if !dims.contains(x) {
                    return Err(CliError::Config(format!("measure.e[{i}]: {x} not among the family dimensions {dims:?}")));
                }
            }
            if let ConstructionConfig::Ch7 { d, .. } = c {
                let blocks = m.blocks.get_or_insert_with(|| (0..*d).collect());
                if blocks.is_empty() || blocks.windows(2).any(|w| w[0] >= w[1]) || blocks.iter().any(|b| b >= d) {
                    return Err(CliError::Config(format!("measure.blocks: {blocks:?} must be sorted, distinct and below {d}")));
                }
                m.max_bits.get_or_insert(2.0e5);
            }
        }
        let en = &mut self.enumerate;
        if en.target.is_some() || en.bound.is_some() {
            let has_c = self.construction.is_some();
            let target = en.target.get_or_insert_with(|| if has_c { "construction" } else { "sqrt:2" }.into());
            if target == "construction" {
                let c = self.construction.as_ref().ok_or_else(|| CliError::Config("enumerate.target: construction target needs a [construction] table".into()))?;
                let n = *en.n.get_or_insert(c.ambient());
                if n != c.ambient() {
                    return Err(CliError::Config(format!("enumerate.n: {n} differs from the construction's ambient dimension {}", c.ambient())));
                }
            } else {
                parse_sqrt_target(target)?;
                let n = *en.n.get_or_insert(2);
                if n != 2 {
                    return Err(CliError::Config(format!("enumerate.n: sqrt targets live in the plane, got {n}")));
                }
            }
            en.e.get_or_insert(1);
            en.j.get_or_insert(1);
            let bound = *en.bound.get_or_insert(1000);
            if bound < 2 {
                return Err(CliError::Config(format!("enumerate.bound: {bound} < 2")));
            }
        }
        let v = &mut self.verify;
        let suites = v.suites.get_or_insert_with(|| crate::verify::SUITES.iter().map(|s| s.to_string()).collect());
        for (i, s) in suites.iter().enumerate() {
            if !crate::verify::SUITES.contains(&s.as_str()) {
                return Err(CliError::Config(format!("verify.suites[{i}]: unknown suite {s:?} (expected one of {:?})", crate::verify::SUITES)));
            }
        }
        v.cases.get_or_insert(100);
        Ok(self)
    }
}

/// `sqrt:S` with S a positive non-square integer.
pub fn parse_sqrt_target(s: &str) -> Result<u64, CliError> {
    let err = || CliError::Config(format!("enumerate.target: expected `construction` or `sqrt:S`, got {s:?}"));
    let v: u64 = s.strip_prefix("sqrt:").ok_or_else(err)?.parse().map_err(|_| err())?;
    let r = (v as f64).sqrt().round() as u64;
    if v == 0 || r * r == v {
        return Err(CliError::Config(format!("enumerate.target: {v} is a perfect square")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let t = RunConfig::from_str("seed = 3\n[construction]\nvariant = \"ch5\"\nn = 3\nbetas = [\"3\", 4]\n", false).unwrap();
        let j = RunConfig::from_str(r#"{"seed":3,"construction":{"variant":"ch5","n":3,"betas":["3","4"]}}"#, true).unwrap();
        assert_eq!(t, j);
    }

    #[test]
    fn errors_name_the_field() {
        let e = RunConfig::from_str("[construction]\nvariant = \"ch5\"\nn = 3\nbetas = [\"3/0\"]\n", false).unwrap_err();
        assert!(e.to_string().contains("construction") && e.to_string().contains("3/0"), "{e}");
        let e = RunConfig::from_str("[measure]\nwhat = 1\n", false).unwrap_err();
        assert!(e.to_string().contains("measure"), "{e}");
        let e = RunConfig::from_str("[measure]\nn_max = \"four\"\n", false).unwrap_err();
        assert!(e.to_string().contains("measure.n_max"), "{e}");
    }

    #[test]
    fn resolve_fills_defaults() {
        let c = RunConfig::from_str("[construction]\nvariant = \"ch8\"\nd = 2\nq = 2\nalpha = 36\n", false).unwrap().resolve().unwrap();
        assert_eq!(c.measure.e, Some(vec![1, 2, 3, 4]));
        assert_eq!(c.mode, Some(Mode::Theorem));
        assert_eq!(c.precision_bits, Some(DEFAULT_PRECISION_BITS));
    }

    #[test]
    fn empty_family_is_rejected() {
        let c = RunConfig::from_str("[construction]\nvariant = \"ch5\"\nn = 3\nbetas = [3]\n[measure]\nn_min = 5\nn_max = 2\n", false).unwrap();
        assert!(matches!(c.resolve(), Err(CliError::Config(_))));
    }
}
