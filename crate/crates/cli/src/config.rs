//! Line-oriented `key = value` run configuration.
//!
//! ```text
//! mode = figures
//! seed = 42
//! realizations = 1000
//! n_values = 10000
//! estimators = four_image, osci, correlated_pair
//! overview_n = 10000
//!
//! [matrix G1]
//! a1 = 15
//! a2_re = 0.2
//! a2_im = 0.5
//! a4 = 6
//! ```
//!
//! Scene runs use `width`, `height`, `window`, `background` and
//! `[region <name>]` sections with `x`, `y`, `width`, `height`, `matrix`.
//! Unknown or misplaced keys are rejected.

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use dop_core::imaging::{Rect, SceneSpec};
use dop_core::{CampaignSpec, CoherencyMatrix, EstimatorKind, NamedMatrix};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, key `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "key `{k}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl ConfigError {
    fn new(line: Option<usize>, key: Option<&str>, message: impl Into<String>) -> Self {
        Self { line, key: key.map(str::to_owned), message: message.into() }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Campaign,
    Scene,
    Figures,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Campaign => "campaign",
            Mode::Scene => "scene",
            Mode::Figures => "figures",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "campaign" => Ok(Mode::Campaign),
            "scene" => Ok(Mode::Scene),
            "figures" => Ok(Mode::Figures),
            _ => Err(format!("unknown mode {s:?}; expected campaign, scene or figures")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format {s:?}; expected csv or json")),
        }
    }
}

/// Which figure datasets a figures run emits.
///
/// `overview_n` selects the per-matrix overview (fig1/fig2) at that N; each
/// sweep matrix gets a mean-vs-N and an N·variance-vs-N dataset, numbered
/// fig3/fig4, fig5/fig6, ... in list order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FigurePlan {
    pub overview_n: Option<usize>,
    pub sweep_matrices: Vec<String>,
}

impl FigurePlan {
    pub fn is_empty(&self) -> bool {
        self.overview_n.is_none() && self.sweep_matrices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub spec: CampaignSpec,
    pub figures: FigurePlan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionConfig {
    pub name: String,
    pub rect: Rect,
    pub matrix: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub window: usize,
    pub estimators: Vec<EstimatorKind>,
    pub matrices: Vec<NamedMatrix>,
    pub background: String,
    pub regions: Vec<RegionConfig>,
}

impl SceneConfig {
    fn lookup(&self, name: &str) -> Option<CoherencyMatrix> {
        self.matrices.iter().find(|m| m.name == name).map(|m| m.matrix)
    }

    pub fn scene_spec(&self) -> Result<SceneSpec> {
        let missing = |n: &str| ConfigError::new(None, None, format!("unknown matrix {n:?}"));
        let background = self.lookup(&self.background).ok_or_else(|| missing(&self.background))?;
        let regions = self
            .regions
            .iter()
            .map(|r| Ok((r.rect, self.lookup(&r.matrix).ok_or_else(|| missing(&r.matrix))?)))
            .collect::<Result<Vec<_>>>()?;
        let spec = SceneSpec { width: self.width, height: self.height, regions, background, seed: self.seed };
        spec.validate().map_err(|e| ConfigError::new(None, None, e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub campaign: Option<CampaignConfig>,
    pub scene: Option<SceneConfig>,
    pub output_dir: PathBuf,
    pub format: Format,
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        match (&self.campaign, &self.scene) {
            (Some(c), _) => c.spec.master_seed,
            (_, Some(s)) => s.seed,
            _ => 0,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        if let Some(c) = &mut self.campaign {
            c.spec.master_seed = seed;
        }
        if let Some(s) = &mut self.scene {
            s.seed = seed;
        }
    }
}

pub const DEFAULT_OUTPUT_DIR: &str = "out";
pub const DEFAULT_WINDOW: usize = 31;

/// Built-in presets reproducing the benchmark protocol.
pub fn preset(name: &str) -> Result<RunConfig> {
    let (spec, figures) = match name {
        "paper-default" => (
            CampaignSpec::paper_default(1000, 0),
            FigurePlan { overview_n: Some(10_000), sweep_matrices: vec![] },
        ),
        "paper-sweep" => (
            CampaignSpec::paper_sweep(1000, 0),
            FigurePlan { overview_n: None, sweep_matrices: vec!["G1".into(), "G5".into()] },
        ),
        other => {
            return Err(ConfigError::new(
                None,
                None,
                format!("unknown preset {other:?}; expected paper-default or paper-sweep"),
            ))
        }
    };
    Ok(RunConfig {
        mode: Mode::Figures,
        campaign: Some(CampaignConfig { spec, figures }),
        scene: None,
        output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
        format: Format::Csv,
    })
}

struct Entry {
    line: usize,
    value: String,
}

#[derive(Default)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

const TOP_COMMON: &[&str] = &["mode", "format", "output_dir", "seed", "estimators"];
const TOP_CAMPAIGN: &[&str] = &["realizations", "n_values", "overview_n", "sweep_matrices"];
const TOP_SCENE: &[&str] = &["width", "height", "window", "background"];
const MATRIX_KEYS: &[&str] = &["a1", "a2_re", "a2_im", "a4"];
const REGION_KEYS: &[&str] = &["x", "y", "width", "height", "matrix"];

impl Section {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn required(&mut self, key: &str, what: &str) -> Result<Entry> {
        self.take(key)
            .ok_or_else(|| ConfigError::new(Some(self.line), Some(key), format!("missing in {what}")))
    }
}

fn parse_value<T: FromStr>(key: &str, e: &Entry) -> Result<T>
where
    T::Err: fmt::Display,
{
    e.value
        .parse()
        .map_err(|err| ConfigError::new(Some(e.line), Some(key), format!("invalid value {:?}: {err}", e.value)))
}

fn parse_list<T: FromStr>(key: &str, e: &Entry) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    e.value
        .split(',')
        .map(|item| {
            item.trim().parse().map_err(|err| {
                ConfigError::new(Some(e.line), Some(key), format!("invalid list item {item:?}: {err}"))
            })
        })
        .collect()
}

/// Parses a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut top = Section { line: 1, ..Default::default() };
    let mut matrices: Vec<(String, Section)> = Vec::new();
    let mut regions: Vec<(String, Section)> = Vec::new();
    #[derive(Clone, Copy)]
    enum Target {
        Top,
        Matrix,
        Region,
    }
    let mut target = Target::Top;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let inner = header
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(Some(line_no), None, "unterminated section header"))?;
            let mut parts = inner.split_whitespace();
            let kind = parts.next().unwrap_or("");
            let name = parts.next().ok_or_else(|| {
                ConfigError::new(Some(line_no), None, format!("section [{inner}] needs a name"))
            })?;
            if parts.next().is_some() {
                return Err(ConfigError::new(Some(line_no), None, "section names may not contain spaces"));
            }
            let (list, t) = match kind {
                "matrix" => (&mut matrices, Target::Matrix),
                "region" => (&mut regions, Target::Region),
                other => {
                    return Err(ConfigError::new(
                        Some(line_no),
                        None,
                        format!("unknown section kind {other:?}"),
                    ))
                }
            };
            if list.iter().any(|(n, _)| n == name) {
                return Err(ConfigError::new(Some(line_no), None, format!("duplicate {kind} {name:?}")));
            }
            list.push((name.to_owned(), Section { line: line_no, ..Default::default() }));
            target = t;
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(Some(line_no), None, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let (section, allowed): (&mut Section, Vec<&str>) = match target {
            Target::Top => (&mut top, [TOP_COMMON, TOP_CAMPAIGN, TOP_SCENE].concat()),
            Target::Matrix => (&mut matrices.last_mut().unwrap().1, MATRIX_KEYS.to_vec()),
            Target::Region => (&mut regions.last_mut().unwrap().1, REGION_KEYS.to_vec()),
        };
        if !allowed.contains(&key) {
            return Err(ConfigError::new(Some(line_no), Some(key), "unknown key"));
        }
        if section.entries.contains_key(key) {
            return Err(ConfigError::new(Some(line_no), Some(key), "duplicate key"));
        }
        section.entries.insert(key.to_owned(), Entry { line: line_no, value: value.to_owned() });
    }

    let mode: Mode = match top.take("mode") {
        Some(e) => parse_value("mode", &e)?,
        None => return Err(ConfigError::new(None, Some("mode"), "missing")),
    };
    let format = top.take("format").map(|e| parse_value("format", &e)).transpose()?.unwrap_or_default();
    let output_dir =
        top.take("output_dir").map(|e| PathBuf::from(e.value)).unwrap_or_else(|| DEFAULT_OUTPUT_DIR.into());
    let seed: u64 = top.take("seed").map(|e| parse_value("seed", &e)).transpose()?.unwrap_or(0);
    let estimators: Vec<EstimatorKind> = match top.take("estimators") {
        Some(e) => parse_list("estimators", &e)?,
        None => EstimatorKind::ALL.to_vec(),
    };

    let named = matrices
        .into_iter()
        .map(|(name, mut s)| {
            let mut num = |k: &str| -> Result<f64> {
                let e = s.required(k, &format!("[matrix {name}]"))?;
                parse_value(k, &e)
            };
            let (a1, re, im, a4) = (num("a1")?, num("a2_re")?, num("a2_im")?, num("a4")?);
            let m = CoherencyMatrix::from_tuple((a1, re, im, a4)).map_err(|e| {
                ConfigError::new(Some(s.line), None, format!("matrix {name:?}: {e}"))
            })?;
            Ok(NamedMatrix::new(name, m))
        })
        .collect::<Result<Vec<_>>>()?;

    let reject_leftover = |s: &Section, what: &str| -> Result<()> {
        match s.entries.iter().next() {
            Some((k, e)) => Err(ConfigError::new(
                Some(e.line),
                Some(k),
                format!("not valid in {what}"),
            )),
            None => Ok(()),
        }
    };

    let (campaign, scene) = match mode {
        Mode::Campaign | Mode::Figures => {
            if let Some((name, s)) = regions.first() {
                return Err(ConfigError::new(
                    Some(s.line),
                    None,
                    format!("[region {name}] is only valid in scene mode"),
                ));
            }
            let realizations = parse_value("realizations", &top.required("realizations", "campaign")?)?;
            let n_values: Vec<usize> = parse_list("n_values", &top.required("n_values", "campaign")?)?;
            let overview_n = top.take("overview_n").map(|e| parse_value("overview_n", &e)).transpose()?;
            let sweep_matrices: Vec<String> = match top.take("sweep_matrices") {
                Some(e) => parse_list("sweep_matrices", &e)?,
                None => Vec::new(),
            };
            reject_leftover(&top, &format!("{} mode", mode.name()))?;
            let spec = CampaignSpec { matrices: named, n_values, realizations, master_seed: seed, estimators };
            spec.validate().map_err(|e| ConfigError::new(None, None, e.to_string()))?;
            for m in &sweep_matrices {
                if !spec.matrices.iter().any(|x| &x.name == m) {
                    return Err(ConfigError::new(None, Some("sweep_matrices"), format!("unknown matrix {m:?}")));
                }
            }
            if let Some(n) = overview_n {
                if !spec.n_values.contains(&n) {
                    return Err(ConfigError::new(None, Some("overview_n"), format!("{n} is not in n_values")));
                }
            }
            (Some(CampaignConfig { spec, figures: FigurePlan { overview_n, sweep_matrices } }), None)
        }
        Mode::Scene => {
            let mut num = |k: &str| -> Result<usize> { parse_value(k, &top.required(k, "scene")?) };
            let (width, height) = (num("width")?, num("height")?);
            let window =
                top.take("window").map(|e| parse_value("window", &e)).transpose()?.unwrap_or(DEFAULT_WINDOW);
            let background = top.required("background", "scene")?.value;
            reject_leftover(&top, "scene mode")?;
            let regions = regions
                .into_iter()
                .map(|(name, mut s)| {
                    let what = format!("[region {name}]");
                    let mut n = |k: &str| -> Result<usize> { parse_value(k, &s.required(k, &what)?) };
                    let rect = Rect { x: n("x")?, y: n("y")?, width: n("width")?, height: n("height")? };
                    let matrix = s.required("matrix", &what)?.value;
                    Ok(RegionConfig { name, rect, matrix })
                })
                .collect::<Result<Vec<_>>>()?;
            if window < 3 || window % 2 == 0 {
                return Err(ConfigError::new(None, Some("window"), "must be odd and >= 3"));
            }
            let mut seen = HashSet::new();
            if !estimators.iter().all(|k| seen.insert(*k)) {
                return Err(ConfigError::new(None, Some("estimators"), "duplicate estimator"));
            }
            let sc = SceneConfig { width, height, seed, window, estimators, matrices: named, background, regions };
            sc.scene_spec()?;
            (None, Some(sc))
        }
    };
    Ok(RunConfig { mode, campaign, scene, output_dir, format })
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn write_matrices(out: &mut String, matrices: &[NamedMatrix]) {
    for m in matrices {
        let (a1, re, im, a4) = m.matrix.to_tuple();
        let _ = write!(out, "\n[matrix {}]\na1 = {a1}\na2_re = {re}\na2_im = {im}\na4 = {a4}\n", m.name);
    }
}

/// Inverse of [`parse_config`].
pub fn serialize_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode = {}", cfg.mode.name());
    let _ = writeln!(out, "format = {}", cfg.format.name());
    let _ = writeln!(out, "output_dir = {}", cfg.output_dir.display());
    let _ = writeln!(out, "seed = {}", cfg.seed());
    if let Some(c) = &cfg.campaign {
        let s = &c.spec;
        let _ = writeln!(out, "estimators = {}", join(&s.estimators));
        let _ = writeln!(out, "realizations = {}", s.realizations);
        let _ = writeln!(out, "n_values = {}", join(&s.n_values));
        if let Some(n) = c.figures.overview_n {
            let _ = writeln!(out, "overview_n = {n}");
        }
        if !c.figures.sweep_matrices.is_empty() {
            let _ = writeln!(out, "sweep_matrices = {}", join(&c.figures.sweep_matrices));
        }
        write_matrices(&mut out, &s.matrices);
    }
    if let Some(sc) = &cfg.scene {
        let _ = writeln!(out, "estimators = {}", join(&sc.estimators));
        let _ = writeln!(out, "width = {}\nheight = {}\nwindow = {}", sc.width, sc.height, sc.window);
        let _ = writeln!(out, "background = {}", sc.background);
        write_matrices(&mut out, &sc.matrices);
        for r in &sc.regions {
            let _ = write!(
                out,
                "\n[region {}]\nx = {}\ny = {}\nwidth = {}\nheight = {}\nmatrix = {}\n",
                r.name, r.rect.x, r.rect.y, r.rect.width, r.rect.height, r.matrix
            );
        }
    }
    out
}
