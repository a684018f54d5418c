//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Deserializer};
use serde::Deserialize;

use cy_core::convergence::{doubling_s_values, ConditionThresholds, GridSpec, LatticeSequence};
use cy_core::geometry::{random_family, RandomFamilyOptions};
use cy_core::{AffineMap, Function, Hyperplane, HyperplaneFamily, MultiPoly};

use crate::expr::Expr;
use crate::CliError;

/// A number or an expression in `t = 1/s` and `s`.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Const(f64),
    Expr(String, Expr),
}

impl Scalar {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Scalar::Const(v) => *v,
            Scalar::Expr(_, e) => e.eval(s),
        }
    }

    fn is_const(&self) -> bool {
        matches!(self, Scalar::Const(_))
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)
            .map_err(|_| de::Error::custom("expected a number or an expression string"))?
        {
            Raw::Num(v) => Ok(Scalar::Const(v)),
            Raw::Text(src) => {
                let e = Expr::parse(&src)
                    .map_err(|e| de::Error::custom(format!("bad expression \"{src}\": {e}")))?;
                Ok(Scalar::Expr(src, e))
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSpec {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Hyperplanes {
        planes: Vec<PlaneSpec>,
    },
    Random {
        count: usize,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        min_volume: Option<f64>,
    },
    /// The `N + 1` facets of the simplex spanned by `points`.
    Simplex {
        points: Vec<Vec<Scalar>>,
    },
    /// `x -> linear * x + offset` applied to a fixed base family.
    Affine {
        base: Box<FamilySpec>,
        linear: Vec<Vec<Scalar>>,
        offset: Vec<Scalar>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Polynomial {
        terms: Vec<TermSpec>,
    },
    Monomial {
        exponents: Vec<u32>,
    },
    ExpAffine {
        coeffs: Vec<f64>,
        #[serde(default)]
        constant: f64,
    },
    SinAffine {
        coeffs: Vec<f64>,
        #[serde(default)]
        constant: f64,
    },
    CosAffine {
        coeffs: Vec<f64>,
        #[serde(default)]
        constant: f64,
    },
    Sum {
        terms: Vec<FunctionSpec>,
    },
    Product {
        factors: Vec<FunctionSpec>,
    },
    Scaled {
        factor: f64,
        function: Box<FunctionSpec>,
    },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SRange {
    pub min: u64,
    pub max: u64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_points_per_axis")]
    pub points_per_axis: usize,
}

fn default_radius() -> f64 {
    GridSpec::default().radius
}

fn default_points_per_axis() -> usize {
    GridSpec::default().points_per_axis
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            radius: default_radius(),
            points_per_axis: default_points_per_axis(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default)]
    pub identity: Option<f64>,
    #[serde(default)]
    pub quad_exactness: Option<usize>,
    #[serde(default)]
    pub c2_min_volume: Option<f64>,
}

/// Verdicts a run must reproduce; a mismatch exits with status 4.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    pub slope_min: Option<f64>,
    pub slope_max: Option<f64>,
    pub c1: Option<bool>,
    pub c2: Option<bool>,
    pub c3: Option<bool>,
    pub coefficients_converge: Option<bool>,
    pub converges_to_taylor: Option<bool>,
    /// Coefficients of the interpolant at the last `s`, in graded order.
    pub limit: Option<Vec<f64>>,
    pub limit_tol: Option<f64>,
    pub bounds_hold: Option<bool>,
    pub error_diverges: Option<bool>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub dimension: usize,
    pub family: FamilySpec,
    pub function: FunctionSpec,
    #[serde(default)]
    pub s_range: Option<SRange>,
    #[serde(default)]
    pub s_values: Option<Vec<u64>>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub expect: Expectations,
}

/// Tagged enums are buffered before they are decoded, so serde places
/// errors inside them at the end of the enclosing object. Expression errors
/// quote their source, which is located in the text instead.
fn expression_position(text: &str, msg: &str) -> Option<(usize, usize)> {
    let start = msg.find("bad expression \"")? + "bad expression ".len();
    let end = start + 1 + msg[start + 1..].find('"')?;
    let offset = text.find(&msg[start..=end])?;
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = offset - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    Some((line, column))
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{path}: {msg}"))
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Config, CliError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| {
            let (line, column) = expression_position(text, &e.to_string()).unwrap_or((e.line(), e.column()));
            let msg = e.to_string();
            let msg = msg.split(" at line ").next().unwrap_or(&msg);
            CliError::Validation(format!("line {line} column {column}: {msg}"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let n = self.dimension;
        if n == 0 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        validate_family(&self.family, n, "family", false)?;
        validate_function(&self.function, n, "function")?;
        if self.s_range.is_some() && self.s_values.is_some() {
            return Err(invalid("s_range", "give either s_range or s_values, not both"));
        }
        if let Some(r) = self.s_range {
            if r.min == 0 || r.min > r.max {
                return Err(invalid("s_range", "needs 1 <= min <= max"));
            }
        }
        if let Some(v) = &self.s_values {
            if v.is_empty() || v.contains(&0) {
                return Err(invalid("s_values", "needs at least one positive index"));
            }
        }
        if self.grid.radius.is_nan() || self.grid.radius <= 0.0 {
            return Err(invalid("grid.radius", "must be positive"));
        }
        if self.grid.points_per_axis < 2 {
            return Err(invalid("grid.points_per_axis", "must be at least 2"));
        }
        let t = &self.tolerances;
        if t.identity.is_some_and(|v| v.is_nan() || v <= 0.0) {
            return Err(invalid("tolerances.identity", "must be positive"));
        }
        if t.c2_min_volume.is_some_and(|v| v.is_nan() || v <= 0.0) {
            return Err(invalid("tolerances.c2_min_volume", "must be positive"));
        }
        Ok(())
    }

    /// Indices `s`, with optional overrides of the range ends.
    pub fn s_values(&self, s_min: Option<u64>, s_max: Option<u64>) -> Result<Vec<u64>, CliError> {
        let base = match (&self.s_values, self.s_range) {
            (Some(v), _) if s_min.is_none() && s_max.is_none() => return Ok(v.clone()),
            (Some(v), _) => SRange {
                min: *v.iter().min().expect("validated"),
                max: *v.iter().max().expect("validated"),
            },
            (None, Some(r)) => r,
            (None, None) => SRange { min: 2, max: 256 },
        };
        let lo = s_min.unwrap_or(base.min);
        let hi = s_max.unwrap_or(base.max);
        if lo == 0 || lo > hi {
            return Err(CliError::Validation(format!("empty s range [{lo}, {hi}]")));
        }
        match &self.s_values {
            Some(v) => Ok(v.iter().copied().filter(|s| (lo..=hi).contains(s)).collect()),
            None => Ok(doubling_s_values(lo, hi)),
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            radius: self.grid.radius,
            points_per_axis: self.grid.points_per_axis,
        }
    }

    pub fn thresholds(&self, c2_min: Option<f64>) -> ConditionThresholds {
        let mut th = ConditionThresholds::default();
        if let Some(v) = c2_min.or(self.tolerances.c2_min_volume) {
            th.c2_min_volume = v;
        }
        th
    }

    pub fn function(&self) -> Result<Function, CliError> {
        build_function(&self.function, self.dimension)
    }

    /// The lattice sequence described by `family`; `seed` overrides the
    /// seeds given in the file.
    pub fn sequence(&self, seed: Option<u64>) -> Result<LatticeSequence, CliError> {
        let seed = seed.or(self.seed);
        build_sequence(&self.family, self.dimension, seed)
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.family, FamilySpec::Affine { .. })
    }
}

fn check_len(path: &str, len: usize, want: usize) -> Result<(), CliError> {
    if len != want {
        return Err(invalid(path, format!("expected {want} entries, found {len}")));
    }
    Ok(())
}

fn validate_family(spec: &FamilySpec, n: usize, path: &str, must_be_fixed: bool) -> Result<(), CliError> {
    match spec {
        FamilySpec::Hyperplanes { planes } => {
            if planes.len() < n {
                return Err(invalid(
                    &format!("{path}.planes"),
                    format!("need at least {n} hyperplanes, found {}", planes.len()),
                ));
            }
            for (i, p) in planes.iter().enumerate() {
                check_len(&format!("{path}.planes[{i}].normal"), p.normal.len(), n)?;
            }
        }
        FamilySpec::Random { count, min_volume, .. } => {
            if *count < n {
                return Err(invalid(&format!("{path}.count"), format!("need at least {n} hyperplanes")));
            }
            if min_volume.is_some_and(|v| v < 0.0) {
                return Err(invalid(&format!("{path}.min_volume"), "must be non-negative"));
            }
        }
        FamilySpec::Simplex { points } => {
            check_len(&format!("{path}.points"), points.len(), n + 1)?;
            for (i, p) in points.iter().enumerate() {
                let at = format!("{path}.points[{i}]");
                check_len(&at, p.len(), n)?;
                if must_be_fixed && !p.iter().all(Scalar::is_const) {
                    return Err(invalid(&at, "the base of an affine family cannot depend on s"));
                }
            }
        }
        FamilySpec::Affine { base, linear, offset } => {
            if must_be_fixed {
                return Err(invalid(path, "affine families cannot be nested"));
            }
            validate_family(base, n, &format!("{path}.base"), true)?;
            check_len(&format!("{path}.linear"), linear.len(), n)?;
            for (i, row) in linear.iter().enumerate() {
                check_len(&format!("{path}.linear[{i}]"), row.len(), n)?;
            }
            check_len(&format!("{path}.offset"), offset.len(), n)?;
        }
    }
    Ok(())
}

fn validate_function(spec: &FunctionSpec, n: usize, path: &str) -> Result<(), CliError> {
    match spec {
        FunctionSpec::Polynomial { terms } => {
            if terms.is_empty() {
                return Err(invalid(&format!("{path}.terms"), "needs at least one term"));
            }
            for (i, t) in terms.iter().enumerate() {
                check_len(&format!("{path}.terms[{i}].exponents"), t.exponents.len(), n)?;
            }
        }
        FunctionSpec::Monomial { exponents } => check_len(&format!("{path}.exponents"), exponents.len(), n)?,
        FunctionSpec::ExpAffine { coeffs, .. }
        | FunctionSpec::SinAffine { coeffs, .. }
        | FunctionSpec::CosAffine { coeffs, .. } => check_len(&format!("{path}.coeffs"), coeffs.len(), n)?,
        FunctionSpec::Sum { terms } => {
            if terms.is_empty() {
                return Err(invalid(&format!("{path}.terms"), "needs at least one function"));
            }
            for (i, t) in terms.iter().enumerate() {
                validate_function(t, n, &format!("{path}.terms[{i}]"))?;
            }
        }
        FunctionSpec::Product { factors } => {
            if factors.is_empty() {
                return Err(invalid(&format!("{path}.factors"), "needs at least one function"));
            }
            for (i, t) in factors.iter().enumerate() {
                validate_function(t, n, &format!("{path}.factors[{i}]"))?;
            }
        }
        FunctionSpec::Scaled { function, .. } => validate_function(function, n, &format!("{path}.function"))?,
    }
    Ok(())
}

fn build_function(spec: &FunctionSpec, n: usize) -> Result<Function, CliError> {
    Ok(match spec {
        FunctionSpec::Polynomial { terms } => {
            let terms: Vec<(Vec<u32>, f64)> = terms.iter().map(|t| (t.exponents.clone(), t.coeff)).collect();
            Function::Polynomial(MultiPoly::from_terms(n, &terms)?)
        }
        FunctionSpec::Monomial { exponents } => Function::monomial(exponents.clone()),
        FunctionSpec::ExpAffine { coeffs, constant } => Function::exp_affine(coeffs.clone(), *constant),
        FunctionSpec::SinAffine { coeffs, constant } => Function::sin_affine(coeffs.clone(), *constant),
        FunctionSpec::CosAffine { coeffs, constant } => Function::cos_affine(coeffs.clone(), *constant),
        FunctionSpec::Sum { terms } => fold(terms, n, Function::sum)?,
        FunctionSpec::Product { factors } => fold(factors, n, Function::product)?,
        FunctionSpec::Scaled { factor, function } => {
            Function::Scaled(*factor, Box::new(build_function(function, n)?))
        }
    })
}

fn fold(
    specs: &[FunctionSpec],
    n: usize,
    join: impl Fn(Function, Function) -> Function,
) -> Result<Function, CliError> {
    let mut it = specs.iter();
    let mut acc = build_function(it.next().expect("validated"), n)?;
    for s in it {
        acc = join(acc, build_function(s, n)?);
    }
    Ok(acc)
}

fn eval_points(points: &[Vec<Scalar>], s: u64) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| p.iter().map(|v| v.eval(s as f64)).collect())
        .collect()
}

fn fixed_family(spec: &FamilySpec, n: usize, seed: Option<u64>) -> Result<HyperplaneFamily, CliError> {
    match spec {
        FamilySpec::Hyperplanes { planes } => {
            let planes = planes
                .iter()
                .map(|p| Hyperplane::new(p.normal.clone(), p.offset))
                .collect::<cy_core::Result<Vec<_>>>()?;
            Ok(HyperplaneFamily::new(planes)?)
        }
        FamilySpec::Random { count, seed: own, min_volume } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.or(*own).unwrap_or(0));
            let mut opts = RandomFamilyOptions::default();
            if let Some(v) = min_volume {
                opts.min_volume = *v;
                opts.max_retries = opts.max_retries.max(100_000);
            }
            Ok(random_family(n, *count, &mut rng, &opts)?)
        }
        FamilySpec::Simplex { points } => Ok(HyperplaneFamily::simplex(&eval_points(points, 1))?),
        FamilySpec::Affine { .. } => unreachable!("validated: affine bases are fixed"),
    }
}

fn build_sequence(spec: &FamilySpec, n: usize, seed: Option<u64>) -> Result<LatticeSequence, CliError> {
    match spec {
        FamilySpec::Simplex { points } if !points.iter().flatten().all(Scalar::is_const) => {
            let points = points.clone();
            Ok(LatticeSequence::simplex_points(move |s| eval_points(&points, s)))
        }
        FamilySpec::Affine { base, linear, offset } => {
            let base = fixed_family(base, n, seed)?;
            let (linear, offset) = (linear.clone(), offset.clone());
            Ok(LatticeSequence::affine(base, move |s| {
                let x = s as f64;
                AffineMap::new(
                    linear.iter().map(|r| r.iter().map(|v| v.eval(x)).collect()).collect(),
                    offset.iter().map(|v| v.eval(x)).collect(),
                )
            }))
        }
        _ => Ok(LatticeSequence::Fixed(fixed_family(spec, n, seed)?)),
    }
}
