//! Experiment configuration: parsing, validation, and conversion into solver
//! inputs. Every semantic error carries the dotted field path and, when the
//! value is present in the file, its line number.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use mdode::analysis::StudyOptions;
use mdode::limit::LimitOptions;
use mdode::mollifier::{default_classify_meshes, ClassifyOptions, StepRule};
use mdode::scheme::{SchemeOptions, DEFAULT_OFFSETS};
use mdode::{BVFunction, Harmonic, MollifierProfile, ScalarField, Schedule, SigmaG};
use serde::Deserialize;
use toml::Spanned;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: PathBuf,
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: ", self.file.display(), line)?,
            None => write!(f, "{}: ", self.file.display())?,
        }
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    driver: Option<Spanned<RawDriver>>,
    field: Option<Spanned<RawField>>,
    mollifier: Option<Spanned<RawMollifier>>,
    sigma: Option<Spanned<RawSigma>>,
    #[serde(default)]
    run: RawRun,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDriver {
    start: Option<f64>,
    end: Option<f64>,
    base: Option<f64>,
    #[serde(default)]
    segments: Vec<Spanned<RawSegment>>,
    #[serde(default)]
    jumps: Vec<Spanned<RawJump>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    start: f64,
    end: f64,
    coeffs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJump {
    epoch: f64,
    size: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    name: Option<Spanned<String>>,
    value: Option<f64>,
    slope: Option<f64>,
    intercept: Option<f64>,
    amp: Option<f64>,
    omega_x: Option<f64>,
    omega_t: Option<f64>,
    phase: Option<f64>,
    offset: Option<f64>,
    level: Option<f64>,
    eps: Option<f64>,
    x_ref: Option<f64>,
    lipschitz: Option<f64>,
    growth: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMollifier {
    profile: Option<Spanned<String>>,
    c: Option<f64>,
    alpha: Option<f64>,
    steps: Option<Vec<f64>>,
    meshes: Option<Spanned<Vec<u64>>>,
    classify_meshes: Option<Spanned<Vec<u64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSigma {
    intervals: Spanned<Vec<[f64; 2]>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    x0: Option<f64>,
    n_offsets: Option<Spanned<usize>>,
    tolerance: Option<f64>,
    out: Option<PathBuf>,
    sample_times: Option<Vec<f64>>,
    zeta: Option<f64>,
    probes: Option<Vec<f64>>,
    deltas: Option<Vec<f64>>,
    step_cap: Option<u64>,
    mollify_field: Option<bool>,
    trials: Option<usize>,
}

/// Field kind as declared in `[field]`, kept for commands that need more
/// than the evaluated field (the ramp oracle).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKind {
    Constant,
    Affine,
    Harmonic,
    Ramp { level: f64, eps: f64, x_ref: f64 },
}

/// A validated experiment.
pub struct Config {
    pub file: PathBuf,
    pub driver: Option<BVFunction>,
    pub field: Option<(ScalarField, FieldKind)>,
    pub profile: Option<MollifierProfile>,
    pub schedule: Option<Schedule>,
    /// Schedule used for regime classification and sigma probes. Power rules
    /// are remeshed onto a longer dyadic ladder so the limits can settle.
    pub regime_schedule: Option<Schedule>,
    /// `None` when `[sigma]` is absent; commands then use the classified regime.
    pub sigma: Option<SigmaG>,
    pub run: RunSettings,
}

pub struct RunSettings {
    pub x0: Option<f64>,
    pub n_offsets: usize,
    pub tolerance: Option<f64>,
    pub out: Option<PathBuf>,
    pub sample_times: Vec<f64>,
    pub zeta: Option<f64>,
    pub probes: Option<Vec<f64>>,
    pub deltas: Option<Vec<f64>>,
    pub step_cap: Option<u64>,
    pub mollify_field: bool,
    pub trials: usize,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: path.to_path_buf(),
            path: String::new(),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, file: &Path) -> Result<Self, ConfigError> {
        let ctx = Ctx { text, file };
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
            file: file.to_path_buf(),
            path: String::new(),
            line: e.span().map(|s| ctx.line(s.start)),
            message: e.message().trim().to_string(),
        })?;
        let driver = raw.driver.map(|d| ctx.driver(d)).transpose()?;
        let field = raw.field.map(|f| ctx.field(f)).transpose()?;
        let (profile, schedule, regime_schedule) = match raw.mollifier {
            Some(m) => {
                let (p, s, r) = ctx.mollifier(m)?;
                (Some(p), Some(s), Some(r))
            }
            None => (None, None, None),
        };
        let sigma = raw.sigma.map(|s| ctx.sigma(s)).transpose()?;
        let run = ctx.run(raw.run)?;
        Ok(Self {
            file: file.to_path_buf(),
            driver,
            field,
            profile,
            schedule,
            regime_schedule,
            sigma,
            run,
        })
    }

    pub fn driver(&self) -> Result<&BVFunction, ConfigError> {
        self.driver
            .as_ref()
            .ok_or_else(|| self.missing("driver", "section [driver] is required by this command"))
    }

    pub fn field(&self) -> Result<&(ScalarField, FieldKind), ConfigError> {
        self.field
            .as_ref()
            .ok_or_else(|| self.missing("field", "section [field] is required by this command"))
    }

    pub fn profile(&self) -> Result<&MollifierProfile, ConfigError> {
        self.profile.as_ref().ok_or_else(|| {
            self.missing(
                "mollifier",
                "section [mollifier] is required by this command",
            )
        })
    }

    pub fn schedule(&self) -> Result<&Schedule, ConfigError> {
        self.schedule.as_ref().ok_or_else(|| {
            self.missing(
                "mollifier",
                "section [mollifier] is required by this command",
            )
        })
    }

    pub fn regime_schedule(&self) -> Result<&Schedule, ConfigError> {
        self.regime_schedule.as_ref().ok_or_else(|| {
            self.missing(
                "mollifier",
                "section [mollifier] is required by this command",
            )
        })
    }

    pub fn x0(&self) -> Result<f64, ConfigError> {
        self.run
            .x0
            .ok_or_else(|| self.missing("run.x0", "missing required field"))
    }

    fn missing(&self, path: &str, message: &str) -> ConfigError {
        ConfigError {
            file: self.file.clone(),
            path: path.into(),
            line: None,
            message: message.into(),
        }
    }

    pub fn scheme_options(&self) -> SchemeOptions {
        let mut opts = SchemeOptions {
            mollify_field: self.run.mollify_field,
            ..SchemeOptions::default()
        };
        if let Some(cap) = self.run.step_cap {
            opts.step_cap = cap;
        }
        opts
    }

    pub fn study_options(&self) -> StudyOptions {
        StudyOptions {
            n_offsets: self.run.n_offsets,
            scheme: self.scheme_options(),
            limit: LimitOptions::default(),
        }
    }

    pub fn classify_options(&self) -> ClassifyOptions {
        let mut opts = ClassifyOptions::default();
        if let Some(d) = &self.run.deltas {
            opts.deltas = d.clone();
        }
        if let Some(p) = &self.run.probes {
            opts.probes = p.clone();
        }
        if let Some(t) = self.run.tolerance {
            opts.tolerance = t;
        }
        opts
    }
}

struct Ctx<'a> {
    text: &'a str,
    file: &'a Path,
}

impl Ctx<'_> {
    fn line(&self, offset: usize) -> usize {
        let end = offset.min(self.text.len());
        self.text[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err(
        &self,
        path: &str,
        span: Option<Range<usize>>,
        message: impl Into<String>,
    ) -> ConfigError {
        ConfigError {
            file: self.file.to_path_buf(),
            path: path.into(),
            line: span.map(|s| self.line(s.start)),
            message: message.into(),
        }
    }

    fn required<T>(
        &self,
        value: Option<T>,
        path: &str,
        section: &Range<usize>,
    ) -> Result<T, ConfigError> {
        value.ok_or_else(|| self.err(path, Some(section.clone()), "missing required field"))
    }

    fn driver(&self, raw: Spanned<RawDriver>) -> Result<BVFunction, ConfigError> {
        let span = raw.span();
        let d = raw.into_inner();
        let a = self.required(d.start, "driver.start", &span)?;
        let b = self.required(d.end, "driver.end", &span)?;
        if !(a < b) {
            return Err(self.err(
                "driver.end",
                Some(span),
                format!("domain [{a}, {b}] is empty"),
            ));
        }
        let mut builder = BVFunction::builder(a, b);
        if let Some(base) = d.base {
            builder = builder.base(base);
        }
        for seg in &d.segments {
            let s = seg.get_ref();
            builder = builder.segment(s.start, s.end, &s.coeffs);
        }
        for j in &d.jumps {
            let j = j.get_ref();
            builder = builder.jump(j.epoch, j.size);
        }
        builder.build().map_err(|e| {
            // Point at the first segment or jump that fails on its own.
            let culprit = d
                .segments
                .iter()
                .enumerate()
                .find(|(_, s)| {
                    let s = s.get_ref();
                    BVFunction::builder(a, b)
                        .segment(s.start, s.end, &s.coeffs)
                        .build()
                        .is_err()
                })
                .map(|(i, s)| (format!("driver.segments[{i}]"), s.span()))
                .or_else(|| {
                    d.jumps
                        .iter()
                        .enumerate()
                        .find(|(_, j)| {
                            let j = j.get_ref();
                            BVFunction::builder(a, b)
                                .jump(j.epoch, j.size)
                                .build()
                                .is_err()
                        })
                        .map(|(i, j)| (format!("driver.jumps[{i}]"), j.span()))
                });
            match culprit {
                Some((path, s)) => self.err(&path, Some(s), e.to_string()),
                None => self.err("driver", Some(span.clone()), e.to_string()),
            }
        })
    }

    fn field(&self, raw: Spanned<RawField>) -> Result<(ScalarField, FieldKind), ConfigError> {
        let span = raw.span();
        let f = raw.into_inner();
        let name = self.required(f.name, "field.name", &span)?;
        let name_span = name.span();
        let at = |key: &str, v: Option<f64>| self.required(v, &format!("field.{key}"), &span);
        let (field, kind) =
            match name.get_ref().as_str() {
                "constant" => (
                    ScalarField::constant(at("value", f.value)?),
                    FieldKind::Constant,
                ),
                "affine" => (
                    ScalarField::affine(at("slope", f.slope)?, f.intercept.unwrap_or(0.0)),
                    FieldKind::Affine,
                ),
                "harmonic" => (
                    ScalarField::harmonic(Harmonic {
                        amp: at("amp", f.amp)?,
                        omega_x: f.omega_x.unwrap_or(0.0),
                        omega_t: f.omega_t.unwrap_or(0.0),
                        phase: f.phase.unwrap_or(0.0),
                        slope: f.slope.unwrap_or(0.0),
                        offset: f.offset.unwrap_or(0.0),
                    }),
                    FieldKind::Harmonic,
                ),
                "ramp" => {
                    let (level, eps) = (at("level", f.level)?, at("eps", f.eps)?);
                    let x_ref = f.x_ref.unwrap_or(0.0);
                    let field = ScalarField::ramp(level, eps, x_ref)
                        .map_err(|e| self.err("field.eps", Some(span.clone()), e.to_string()))?;
                    (field, FieldKind::Ramp { level, eps, x_ref })
                }
                other => return Err(self.err(
                    "field.name",
                    Some(name_span),
                    format!(
                        "unknown field '{other}' (expected constant, affine, harmonic, or ramp)"
                    ),
                )),
            };
        let field = match (f.lipschitz, f.growth) {
            (None, None) => field,
            (m, k) => {
                let (m, k) = (m.unwrap_or(field.lipschitz()), k.unwrap_or(field.growth()));
                field
                    .with_constants(m, k)
                    .map_err(|e| self.err("field.lipschitz", Some(span.clone()), e.to_string()))?
            }
        };
        Ok((field, kind))
    }

    fn mollifier(
        &self,
        raw: Spanned<RawMollifier>,
    ) -> Result<(MollifierProfile, Schedule, Schedule), ConfigError> {
        let span = raw.span();
        let m = raw.into_inner();
        let name = self.required(m.profile, "mollifier.profile", &span)?;
        let profile =
            match name.get_ref().as_str() {
                "uniform" => MollifierProfile::uniform(),
                "triangular" => MollifierProfile::triangular(),
                "smooth_bump" => MollifierProfile::smooth_bump(),
                other => return Err(self.err(
                    "mollifier.profile",
                    Some(name.span()),
                    format!(
                        "unknown profile '{other}' (expected uniform, triangular, or smooth_bump)"
                    ),
                )),
            };
        let meshes = self.required(m.meshes, "mollifier.meshes", &span)?;
        let mesh_span = meshes.span();
        let schedule = match (m.alpha, m.steps) {
            (Some(_), Some(_)) => {
                return Err(self.err(
                    "mollifier.steps",
                    Some(span),
                    "give either alpha (power rule) or steps (table), not both",
                ))
            }
            (Some(alpha), None) => Schedule::power(meshes.into_inner(), m.c.unwrap_or(1.0), alpha),
            (None, Some(steps)) => Schedule::table(meshes.into_inner(), steps),
            (None, None) => {
                return Err(self.err("mollifier.alpha", Some(span), "missing required field"))
            }
        }
        .map_err(|e| self.err("mollifier.meshes", Some(mesh_span), e.to_string()))?;
        let regime = match (m.classify_meshes, schedule.rule()) {
            (Some(cm), _) => {
                let span = cm.span();
                schedule
                    .with_meshes(cm.into_inner())
                    .map_err(|e| self.err("mollifier.classify_meshes", Some(span), e.to_string()))?
            }
            (None, StepRule::Power { .. }) => schedule
                .with_meshes(default_classify_meshes())
                .map_err(|e| self.err("mollifier", Some(span), e.to_string()))?,
            (None, StepRule::Table(_)) => schedule.clone(),
        };
        Ok((profile, schedule, regime))
    }

    fn sigma(&self, raw: Spanned<RawSigma>) -> Result<SigmaG, ConfigError> {
        let intervals = raw.into_inner().intervals;
        let span = intervals.span();
        let list = intervals
            .into_inner()
            .into_iter()
            .map(|[a, b]| (a, b))
            .collect();
        SigmaG::new(list).map_err(|e| self.err("sigma.intervals", Some(span), e.to_string()))
    }

    fn run(&self, r: RawRun) -> Result<RunSettings, ConfigError> {
        let n_offsets = match r.n_offsets {
            Some(n) if *n.get_ref() == 0 => {
                return Err(self.err("run.n_offsets", Some(n.span()), "must be at least 1"))
            }
            Some(n) => n.into_inner(),
            None => DEFAULT_OFFSETS,
        };
        Ok(RunSettings {
            x0: r.x0,
            n_offsets,
            tolerance: r.tolerance,
            out: r.out,
            sample_times: r.sample_times.unwrap_or_default(),
            zeta: r.zeta,
            probes: r.probes,
            deltas: r.deltas,
            step_cap: r.step_cap,
            mollify_field: r.mollify_field.unwrap_or(false),
            trials: r.trials.unwrap_or(1000),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Config, ConfigError> {
        Config::parse(text, Path::new("exp.toml"))
    }

    #[test]
    fn full_config_round_trips() {
        let cfg = parse(
            r#"
[driver]
start = 0.0
end = 1.0
segments = [{ start = 0.0, end = 1.0, coeffs = [0.0, 1.0] }]
jumps = [{ epoch = 0.5, size = 1.0 }]

[field]
name = "affine"
slope = 1.0

[mollifier]
profile = "uniform"
alpha = 2.0
meshes = [16, 32, 64]

[sigma]
intervals = [[0.2, 0.5]]

[run]
x0 = 1.0
n_offsets = 4
"#,
        )
        .unwrap();
        assert_eq!(cfg.driver().unwrap().jump_at(0.5), 1.0);
        assert_eq!(cfg.schedule().unwrap().len(), 3);
        assert_eq!(cfg.sigma.unwrap().intervals(), &[(0.2, 0.5)]);
        assert_eq!(cfg.run.n_offsets, 4);
    }

    #[test]
    fn missing_profile_names_the_field_and_section_line() {
        let err = parse("[run]\nx0 = 1.0\n\n[mollifier]\nalpha = 2.0\nmeshes = [4, 8]\n")
            .err()
            .unwrap();
        assert_eq!(err.path, "mollifier.profile");
        assert_eq!(err.line, Some(4));
        assert!(err.to_string().contains("mollifier.profile"));
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let err = parse("[run]\nx0 = 1.0\nbogus = 3\n").err().unwrap();
        assert_eq!(err.line, Some(3));
        assert!(err.message.contains("bogus"), "{}", err.message);
    }

    #[test]
    fn bad_jump_is_located() {
        let err = parse(
            "[driver]\nstart = 0.0\nend = 1.0\njumps = [\n  { epoch = 0.5, size = 1.0 },\n  { epoch = 0.0, size = 1.0 },\n]\n",
        )
        .err()
        .unwrap();
        assert_eq!(err.path, "driver.jumps[1]");
        assert_eq!(err.line, Some(6));
    }

    #[test]
    fn unknown_profile_points_at_value() {
        let err = parse("[mollifier]\nprofile = \"gauss\"\nalpha = 1.0\nmeshes = [4]\n")
            .err()
            .unwrap();
        assert_eq!(err.path, "mollifier.profile");
        assert_eq!(err.line, Some(2));
    }
}
