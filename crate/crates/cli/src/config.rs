//! Run configuration: one JSON document with nested sections. Every section and
//! field is optional; missing values take the defaults listed in `--help`.

use std::fmt;
use std::path::{Path, PathBuf};

use cutoff_core::agent::ResponseSettings;
use cutoff_core::oracle::{tangent_cost, BruteForceSettings, RefuteSettings};
use cutoff_core::solver::{ClassicSettings, OutputModel, Prior};
use cutoff_core::{CostFunction, Family, SignalDensity, SolverSettings};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A configuration problem: bad syntax, an unknown key, or an invalid value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<cutoff_core::Error> for ConfigError {
    fn from(e: cutoff_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

pub type ConfigResult<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> ConfigResult<T> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub density: DensitySpec,
    pub cost: CostSpec,
    pub variant: Variant,
    pub numeric: Numeric,
    pub seed: u64,
    pub threads: usize,
    pub output: Output,
    pub sweep: SweepSection,
    pub verify: VerifySection,
    pub refute: RefuteSection,
    pub compare: CompareSection,
}

/// Density family with its parameters plus the signal dimension, e.g.
/// `{"family": "uniform", "halfwidth": 2, "dimension": 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Gaussian {
        #[serde(default = "one")]
        dimension: usize,
    },
    Laplace {
        #[serde(default = "one")]
        dimension: usize,
    },
    Logistic {
        #[serde(default = "one")]
        dimension: usize,
    },
    Uniform {
        #[serde(default = "unit")]
        halfwidth: f64,
        #[serde(default = "one")]
        dimension: usize,
    },
    Triangular {
        #[serde(default = "unit")]
        halfwidth: f64,
        #[serde(default = "one")]
        dimension: usize,
    },
    TruncatedExpInverse {
        truncation: f64,
        #[serde(default = "one")]
        dimension: usize,
    },
    /// Radial profile given inline as `points` or as a two-column CSV `file` (`x,phi`).
    Tabulated {
        #[serde(default)]
        points: Option<Vec<(f64, f64)>>,
        #[serde(default)]
        file: Option<PathBuf>,
        #[serde(default = "one")]
        dimension: usize,
    },
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl Default for DensitySpec {
    fn default() -> Self {
        DensitySpec::Gaussian { dimension: 1 }
    }
}

impl DensitySpec {
    pub fn dimension(&self) -> usize {
        match self {
            DensitySpec::Gaussian { dimension }
            | DensitySpec::Laplace { dimension }
            | DensitySpec::Logistic { dimension }
            | DensitySpec::Uniform { dimension, .. }
            | DensitySpec::Triangular { dimension, .. }
            | DensitySpec::TruncatedExpInverse { dimension, .. }
            | DensitySpec::Tabulated { dimension, .. } => *dimension,
        }
    }

    pub fn set_dimension(&mut self, n: usize) {
        match self {
            DensitySpec::Gaussian { dimension }
            | DensitySpec::Laplace { dimension }
            | DensitySpec::Logistic { dimension }
            | DensitySpec::Uniform { dimension, .. }
            | DensitySpec::Triangular { dimension, .. }
            | DensitySpec::TruncatedExpInverse { dimension, .. }
            | DensitySpec::Tabulated { dimension, .. } => *dimension = n,
        }
    }

    /// `family[:param]`, e.g. `gaussian`, `uniform:2`, `truncated_exp_inverse:0.1`, or a JSON object.
    pub fn parse(s: &str) -> ConfigResult<Self> {
        if s.trim_start().starts_with('{') {
            return serde_json::from_str(s).map_err(|e| ConfigError(format!("--density: {e}")));
        }
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let params = parts.map(|p| number(p, "--density")).collect::<ConfigResult<Vec<f64>>>()?;
        let param = |default: Option<f64>| match (params.as_slice(), default) {
            ([], Some(d)) => Ok(d),
            ([p], _) => Ok(*p),
            _ => err(format!("--density `{s}`: wrong number of parameters")),
        };
        let none = |spec: DensitySpec| {
            if params.is_empty() {
                Ok(spec)
            } else {
                err(format!("--density `{s}`: `{name}` takes no parameters"))
            }
        };
        match name {
            "gaussian" => none(DensitySpec::Gaussian { dimension: 1 }),
            "laplace" => none(DensitySpec::Laplace { dimension: 1 }),
            "logistic" => none(DensitySpec::Logistic { dimension: 1 }),
            "uniform" => Ok(DensitySpec::Uniform { halfwidth: param(Some(1.0))?, dimension: 1 }),
            "triangular" => Ok(DensitySpec::Triangular { halfwidth: param(Some(1.0))?, dimension: 1 }),
            "truncated_exp_inverse" => {
                Ok(DensitySpec::TruncatedExpInverse { truncation: param(Some(0.1))?, dimension: 1 })
            }
            other => err(format!("unknown density family `{other}`")),
        }
    }

    pub fn build(&self, base: &Path) -> ConfigResult<SignalDensity> {
        let family = match self {
            DensitySpec::Gaussian { .. } => Family::Gaussian,
            DensitySpec::Laplace { .. } => Family::Laplace,
            DensitySpec::Logistic { .. } => Family::Logistic,
            DensitySpec::Uniform { halfwidth, .. } => Family::Uniform { halfwidth: *halfwidth },
            DensitySpec::Triangular { halfwidth, .. } => Family::Triangular { halfwidth: *halfwidth },
            DensitySpec::TruncatedExpInverse { truncation, .. } => {
                Family::TruncatedExpInverse { truncation: *truncation }
            }
            DensitySpec::Tabulated { points, file, .. } => {
                Family::Tabulated { points: table(points, file, base, "density")? }
            }
        };
        Ok(SignalDensity::new(family, self.dimension())?)
    }
}

/// Agent cost `c(lambda)`, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    /// `a * lambda^p`.
    Power { a: f64, p: f64 },
    /// `lambda^2 / 8`.
    #[default]
    QuadraticEighth,
    /// `c0 + a * lambda^p` for `lambda > 0`, zero at zero.
    AffinePower { c0: f64, a: f64, p: f64 },
    /// Piecewise linear through `(lambda, c)` nodes starting at `(0, 0)`; inline or from a CSV file.
    Tabulated {
        #[serde(default)]
        points: Option<Vec<(f64, f64)>>,
        #[serde(default)]
        file: Option<PathBuf>,
    },
    /// `factor * base(lambda)`.
    Scaled { base: Box<CostSpec>, factor: f64 },
    /// `base(k * lambda)`.
    Rescaled { base: Box<CostSpec>, k: f64 },
    /// `E(lambda; d_ref) + kappa (lambda - lambda_ref)^2`, tangent to the cutoff value.
    Tangent {
        lambda_ref: f64,
        d_ref: f64,
        #[serde(default = "default_kappa")]
        kappa: f64,
    },
}

fn default_kappa() -> f64 {
    RefuteSettings::default().kappa
}

impl CostSpec {
    /// `quadratic_eighth`, `power:A:P`, `affine_power:C0:A:P`, `tangent:LAMBDA:D[:KAPPA]`, or a JSON object.
    pub fn parse(s: &str) -> ConfigResult<Self> {
        if s.trim_start().starts_with('{') {
            return serde_json::from_str(s).map_err(|e| ConfigError(format!("--cost: {e}")));
        }
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let p = parts.map(|p| number(p, "--cost")).collect::<ConfigResult<Vec<f64>>>()?;
        match (name, p.as_slice()) {
            ("quadratic_eighth", []) => Ok(CostSpec::QuadraticEighth),
            ("power", [a, p]) => Ok(CostSpec::Power { a: *a, p: *p }),
            ("affine_power", [c0, a, p]) => Ok(CostSpec::AffinePower { c0: *c0, a: *a, p: *p }),
            ("tangent", [l, d]) => Ok(CostSpec::Tangent { lambda_ref: *l, d_ref: *d, kappa: default_kappa() }),
            ("tangent", [l, d, k]) => Ok(CostSpec::Tangent { lambda_ref: *l, d_ref: *d, kappa: *k }),
            ("quadratic_eighth" | "power" | "affine_power" | "tangent", _) => {
                err(format!("--cost `{s}`: wrong number of parameters"))
            }
            (other, _) => err(format!("unknown cost kind `{other}`")),
        }
    }

    pub fn build(&self, density: &SignalDensity, base: &Path) -> ConfigResult<CostFunction> {
        Ok(match self {
            CostSpec::Power { a, p } => CostFunction::power(*a, *p)?,
            CostSpec::QuadraticEighth => CostFunction::quadratic_eighth(),
            CostSpec::AffinePower { c0, a, p } => CostFunction::affine_power(*c0, *a, *p)?,
            CostSpec::Tabulated { points, file } => CostFunction::tabulated(table(points, file, base, "cost")?)?,
            CostSpec::Scaled { base: inner, factor } => inner.build(density, base)?.scaled(*factor)?,
            CostSpec::Rescaled { base: inner, k } => inner.build(density, base)?.rescaled(*k)?,
            CostSpec::Tangent { lambda_ref, d_ref, kappa } => tangent_cost(density, *lambda_ref, *d_ref, *kappa)?,
        })
    }
}

fn number(s: &str, flag: &str) -> ConfigResult<f64> {
    s.trim().parse().map_err(|_| ConfigError(format!("{flag}: `{s}` is not a number")))
}

fn table(
    points: &Option<Vec<(f64, f64)>>,
    file: &Option<PathBuf>,
    base: &Path,
    what: &str,
) -> ConfigResult<Vec<(f64, f64)>> {
    match (points, file) {
        (Some(p), None) => Ok(p.clone()),
        (None, Some(f)) => read_pairs(&base.join(f)),
        _ => err(format!("tabulated {what} needs exactly one of `points` and `file`")),
    }
}

/// Two numeric columns; a non-numeric first row is taken as a header.
fn read_pairs(path: &Path) -> ConfigResult<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let cell = |j: usize| row.get(j).and_then(|v| v.parse::<f64>().ok());
        match (cell(0), cell(1)) {
            (Some(x), Some(y)) => out.push((x, y)),
            _ if i == 0 => continue,
            _ => return err(format!("{}: row {} is not two numbers", path.display(), i + 1)),
        }
    }
    Ok(out)
}

/// What is being solved; exactly one variant per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Variant {
    #[default]
    Base,
    /// Gaussian prior of precision `lambda0` on the state.
    GaussianPrior { lambda0: f64 },
    /// The principal observes only its own signal of precision `lambda_p`.
    Unobserved {
        #[serde(default = "uniform_prior")]
        prior: Prior,
        #[serde(default)]
        lambda0: Option<f64>,
        lambda_p: f64,
    },
    /// Output-based quota contracts.
    ClassicPa { output: OutputModel },
}

fn uniform_prior() -> Prior {
    Prior::Uniform
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numeric {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub grid_points: usize,
    pub d_max: Option<f64>,
    pub scan_points: usize,
    pub refinements: usize,
    pub tol: f64,
    pub e_max: f64,
    pub effort_points: usize,
    pub y_max: f64,
}

impl Default for Numeric {
    fn default() -> Self {
        let (r, s, c) = (ResponseSettings::default(), SolverSettings::default(), ClassicSettings::default());
        Numeric {
            lambda_min: r.lambda_min,
            lambda_max: r.lambda_max,
            grid_points: r.grid_points,
            d_max: s.d_max,
            scan_points: s.scan_points,
            refinements: s.refinements,
            tol: s.tol,
            e_max: c.e_max,
            effort_points: c.effort_points,
            y_max: c.y_max,
        }
    }
}

impl Numeric {
    pub fn response(&self) -> ResponseSettings {
        ResponseSettings { lambda_min: self.lambda_min, lambda_max: self.lambda_max, grid_points: self.grid_points }
    }

    pub fn solver(&self) -> SolverSettings {
        SolverSettings {
            response: self.response(),
            d_max: self.d_max,
            scan_points: self.scan_points,
            refinements: self.refinements,
            tol: self.tol,
        }
    }

    pub fn classic(&self) -> ClassicSettings {
        ClassicSettings {
            e_max: self.e_max,
            effort_points: self.effort_points,
            y_max: self.y_max,
            scan_points: self.scan_points,
            refinements: self.refinements,
        }
    }

    fn validate(&self) -> ConfigResult<()> {
        self.solver().validate()?;
        if !(self.e_max > 0.0 && self.y_max > 0.0 && self.effort_points >= 8) {
            return err("numeric: e_max and y_max must be positive and effort_points at least 8");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
    /// Also write the per-command CSV tables (the solve curve, pipeline transfers).
    pub csv: bool,
}

impl Default for Output {
    fn default() -> Self {
        Output { dir: PathBuf::from("out"), csv: true }
    }
}

/// Grid for the `E(lambda; d)` surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_points: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub d_points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { lambda_min: 0.1, lambda_max: 5.0, lambda_points: 50, d_min: 0.05, d_max: 3.0, d_points: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Random transfers pushed through the improvement pipeline.
    pub transfers: usize,
    /// Cells of each random transfer on `[-x_max, x_max]`.
    pub cells: usize,
    /// Half-width of the random transfers and of the brute-force grid; defaults per family.
    pub x_max: Option<f64>,
    pub brute_cells: usize,
    pub brute_levels: usize,
    pub restarts: usize,
    /// Random `(lambda, d)` pairs for the cross-derivative sign check.
    pub cross_points: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            transfers: 20,
            cells: 64,
            x_max: None,
            brute_cells: 8,
            brute_levels: 2,
            restarts: 8,
            cross_points: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefuteSection {
    pub lambda_ref: f64,
    pub d_ref: f64,
    pub kappa: f64,
    pub x1: f64,
    pub x2: f64,
    pub delta1: Option<f64>,
    pub max_shrinks: usize,
    pub brute_cells: usize,
    pub brute_levels: usize,
    pub x_max: Option<f64>,
    pub restarts: usize,
}

impl Default for RefuteSection {
    fn default() -> Self {
        let (r, b) = (RefuteSettings::default(), BruteForceSettings::default());
        RefuteSection {
            lambda_ref: r.lambda_ref,
            d_ref: r.d_ref,
            kappa: r.kappa,
            x1: r.x1,
            x2: r.x2,
            delta1: r.delta1,
            max_shrinks: r.max_shrinks,
            brute_cells: b.cells,
            brute_levels: b.levels,
            x_max: b.x_max,
            restarts: b.restarts,
        }
    }
}

/// Costs compared against the configured one: `factor * c` for each factor,
/// plus an explicit second cost if given, and the noise-scaling factors `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub factors: Vec<f64>,
    pub second_cost: Option<CostSpec>,
    pub noise_scales: Vec<f64>,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection { factors: vec![1.5, 2.0, 4.0], second_cost: None, noise_scales: vec![2.0] }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|ConfigError(m)| ConfigError(format!("{}: {m}", path.display())))
    }

    pub fn from_json(text: &str) -> ConfigResult<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        serde_json::from_value(value).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn validate(&self) -> ConfigResult<()> {
        self.numeric.validate()?;
        if self.density.dimension() == 0 {
            return err("density: dimension must be at least 1");
        }
        let s = &self.sweep;
        if !(s.lambda_min > 0.0 && s.lambda_max > s.lambda_min && s.d_min > 0.0 && s.d_max > s.d_min)
            || s.lambda_points < 2
            || s.d_points < 2
        {
            return err("sweep: need 0 < min < max and at least two points on each axis");
        }
        let v = &self.verify;
        if v.cells == 0 || v.brute_cells == 0 || v.brute_levels < 2 || v.x_max.is_some_and(|x| !(x > 0.0)) {
            return err("verify: cells must be positive, brute_levels at least 2, x_max positive");
        }
        let r = &self.refute;
        if !(r.lambda_ref > 0.0 && r.d_ref > 0.0 && r.kappa > 0.0 && r.x1 > 0.0 && r.x2 > r.x1) {
            return err("refute: need positive lambda_ref, d_ref, kappa and 0 < x1 < x2");
        }
        if self.compare.factors.iter().chain(&self.compare.noise_scales).any(|&k| !(k > 0.0 && k.is_finite())) {
            return err("compare: factors and noise scales must be positive");
        }
        Ok(())
    }

    pub fn refute_settings(&self) -> RefuteSettings {
        let r = &self.refute;
        RefuteSettings {
            lambda_ref: r.lambda_ref,
            d_ref: r.d_ref,
            kappa: r.kappa,
            x1: r.x1,
            x2: r.x2,
            delta1: r.delta1,
            max_shrinks: r.max_shrinks,
            brute: BruteForceSettings {
                cells: r.brute_cells,
                levels: r.brute_levels,
                x_max: r.x_max,
                response: self.numeric.response(),
                seed: self.seed,
                restarts: r.restarts,
                threads: self.threads.max(1),
            },
            solver: self.numeric.solver(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c.density, DensitySpec::Gaussian { dimension: 1 });
        assert_eq!(c.cost, CostSpec::QuadraticEighth);
        assert_eq!(c.variant, Variant::Base);
        assert_eq!(c.numeric.grid_points, 1024);
        c.validate().unwrap();
    }

    #[test]
    fn nested_sections_parse() {
        let c = RunConfig::from_json(
            r#"{"density": {"family": "uniform", "halfwidth": 2, "dimension": 2},
                "cost": {"kind": "scaled", "base": {"kind": "power", "a": 1, "p": 2}, "factor": 3},
                "variant": {"kind": "unobserved", "lambda_p": 10},
                "numeric": {"tol": 1e-9}, "seed": 7}"#,
        )
        .unwrap();
        assert_eq!(c.density, DensitySpec::Uniform { halfwidth: 2.0, dimension: 2 });
        assert!(matches!(c.variant, Variant::Unobserved { prior: Prior::Uniform, lambda0: None, .. }));
        assert_eq!(c.numeric.tol, 1e-9);
        assert_eq!(c.seed, 7);
        let d = c.density.build(Path::new(".")).unwrap();
        let cost = c.cost.build(&d, Path::new(".")).unwrap();
        assert!((cost.value(2.0) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = RunConfig::from_json(r#"{"densty": {}}"#).unwrap_err();
        assert!(e.0.contains("densty"), "{e}");
        let e = RunConfig::from_json(r#"{"density": {"family": "gaussian", "scale": 2}}"#).unwrap_err();
        assert!(e.0.contains("scale"), "{e}");
        let e = RunConfig::from_json(r#"{"density": {"family": "cauchy"}}"#).unwrap_err();
        assert!(e.0.contains("cauchy"), "{e}");
    }

    #[test]
    fn short_forms() {
        assert_eq!(DensitySpec::parse("laplace").unwrap(), DensitySpec::Laplace { dimension: 1 });
        assert_eq!(
            DensitySpec::parse("truncated_exp_inverse:0.2").unwrap(),
            DensitySpec::TruncatedExpInverse { truncation: 0.2, dimension: 1 }
        );
        assert!(DensitySpec::parse("gaussian:2").is_err());
        assert!(DensitySpec::parse("cauchy").unwrap_err().0.contains("cauchy"));
        assert_eq!(CostSpec::parse("power:0.5:2").unwrap(), CostSpec::Power { a: 0.5, p: 2.0 });
        assert_eq!(
            CostSpec::parse("tangent:1:0.5").unwrap(),
            CostSpec::Tangent { lambda_ref: 1.0, d_ref: 0.5, kappa: 0.5 }
        );
        assert!(CostSpec::parse("power:1").is_err());
        assert!(CostSpec::parse(r#"{"kind": "power", "a": 1, "p": 2}"#).is_ok());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let c = RunConfig::from_json(r#"{"numeric": {"tol": -1}}"#).unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::from_json(r#"{"numeric": {"lambda_min": 2, "lambda_max": 1}}"#).unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::from_json(r#"{"compare": {"factors": [0]}}"#).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn tabulated_sources_are_exclusive() {
        let spec = DensitySpec::Tabulated { points: None, file: None, dimension: 1 };
        assert!(spec.build(Path::new(".")).is_err());
        let spec = DensitySpec::Tabulated { points: None, file: Some("missing.csv".into()), dimension: 1 };
        assert!(spec.build(Path::new("/nonexistent")).unwrap_err().0.contains("missing.csv"));
    }
}
