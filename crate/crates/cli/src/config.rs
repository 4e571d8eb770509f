//! Run configuration: a sectioned `key = value` file, overridden by flags.
//!
//! ```text
//! # comments start with '#'
//! [model]
//! model = heisenberg
//! spin = 1
//! L = 5
//!
//! [output]
//! out = fig1.csv
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use qspin::lattice::TwiceSpin;
use qspin::spectral::LanczosOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Foel,
    LiebMattis,
    Ssep,
    Droplet,
    Lightcone,
    Cluster,
    Perturb,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Spectrum,
        Command::Foel,
        Command::LiebMattis,
        Command::Ssep,
        Command::Droplet,
        Command::Lightcone,
        Command::Cluster,
        Command::Perturb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Foel => "foel",
            Command::LiebMattis => "liebmattis",
            Command::Ssep => "ssep",
            Command::Droplet => "droplet",
            Command::Lightcone => "lightcone",
            Command::Cluster => "cluster",
            Command::Perturb => "perturb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Heisenberg,
    Aklt,
    XxzOpen,
    XxzPeriodic,
    Custom,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Heisenberg => "heisenberg",
            ModelKind::Aklt => "aklt",
            ModelKind::XxzOpen => "xxz_open",
            ModelKind::XxzPeriodic => "xxz_periodic",
            ModelKind::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub model: ModelKind,
    pub l: usize,
    /// `None`: 1/2, or 1 for the AKLT chain.
    pub spin: Option<TwiceSpin>,
    pub j: f64,
    pub delta: Option<f64>,
    pub q: Option<f64>,
    pub periodic: bool,
    pub graph: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Tolerance of exact-identity assertions.
    pub tol: f64,
    pub degeneracy_tol: f64,
    pub lanczos_tol: f64,
    pub krylov: usize,
    pub max_restarts: usize,
    pub seed: u64,
    /// `None`: one worker per available core.
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub out: PathBuf,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunParams {
    /// Lowest levels per sector for `spectrum`; 0 means all.
    pub levels: usize,
    pub n: usize,
    pub l_min: usize,
    pub l_max: usize,
    pub site: Option<usize>,
    pub lambda: f64,
    pub tmax: f64,
    pub dt: f64,
    pub b_points: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_step: f64,
    pub ls: Vec<usize>,
    pub conv_tol: f64,
    pub open_tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub run: RunParams,
}

/// Where a bad setting came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub origin: Option<Origin>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.origin {
            Some(Origin::File { path, line }) => write!(f, "{}:{line}: ", path.display())?,
            Some(Origin::Flag) => write!(f, "command line: ")?,
            None => {}
        }
        if let Some(k) = &self.key {
            write!(f, "key '{k}': ")?;
        }
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { origin: None, key: Some(key.to_string()), message: message.into() }
}

/// Every accepted `(section, key)`, with its default as written in a
/// config file and a one-line description.
pub const KEYS: &[(&str, &str, &str, &str)] = &[
    ("model", "model", "heisenberg", "heisenberg | aklt | xxz_open | xxz_periodic | custom"),
    ("model", "L", "8", "chain length when no graph file is given"),
    ("model", "spin", "", "site spin for chain models; default 1/2, and 1 for aklt"),
    ("model", "J", "1", "coupling; multiplies graph weights"),
    ("model", "Delta", "", "XXZ anisotropy (> 1); give at most one of Delta and q"),
    ("model", "q", "", "XXZ deformation in (0, 1); default 0.5 when neither is given"),
    ("model", "boundary", "open", "open | periodic, for chain models"),
    ("model", "graph", "", "graph file; overrides L and boundary"),
    ("solver", "tol", "1e-9", "tolerance of exact-identity assertions"),
    ("solver", "degeneracy_tol", "1e-8", "eigenvalues closer than this are degenerate"),
    ("solver", "lanczos_tol", "1e-9", "Lanczos residual tolerance"),
    ("solver", "krylov", "160", "Lanczos Krylov dimension"),
    ("solver", "max_restarts", "60", "Lanczos restarts"),
    ("solver", "seed", "1592597148", "Lanczos start-vector seed"),
    ("solver", "threads", "", "worker threads; default one per core"),
    ("output", "out", "<command>.<format>", "output table path"),
    ("output", "format", "csv", "csv | json"),
    ("run", "levels", "0", "spectrum: lowest levels per sector, 0 for all"),
    ("run", "n", "1", "droplet: number of overturned spins"),
    ("run", "Lmin", "4", "droplet: smallest chain length"),
    ("run", "Lmax", "14", "droplet: largest chain length"),
    ("run", "site", "", "lightcone: vertex carrying B; default the middle vertex"),
    ("run", "lambda", "1", "lightcone, cluster: decay rate of the interaction norm"),
    ("run", "tmax", "1", "lightcone: final time"),
    ("run", "dt", "0.05", "lightcone: time step"),
    ("run", "b_points", "5", "cluster: imaginary times per pair in the window"),
    ("run", "lambda_min", "-0.1", "perturb: smallest coupling"),
    ("run", "lambda_max", "0.1", "perturb: largest coupling"),
    ("run", "lambda_step", "0.02", "perturb: coupling step"),
    ("run", "Ls", "", "perturb: comma-separated chain lengths; default L"),
    ("run", "conv_tol", "1e-2", "droplet: bound on |E_L(n) - E(n)| at Lmax"),
    ("run", "open_tol", "2e-2", "droplet: bound on the open-chain deviation at Lmax"),
];

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        RunConfig {
            command,
            model: ModelConfig {
                model: ModelKind::Heisenberg,
                l: 8,
                spin: None,
                j: 1.0,
                delta: None,
                q: None,
                periodic: false,
                graph: None,
            },
            solver: SolverConfig {
                tol: 1e-9,
                degeneracy_tol: 1e-8,
                lanczos_tol: 1e-9,
                krylov: 160,
                max_restarts: 60,
                seed: LanczosOptions::default().seed,
                threads: None,
            },
            output: OutputConfig { out: PathBuf::from(format!("{}.csv", command.name())), format: Format::Csv },
            run: RunParams {
                levels: 0,
                n: 1,
                l_min: 4,
                l_max: 14,
                site: None,
                lambda: 1.0,
                tmax: 1.0,
                dt: 0.05,
                b_points: 5,
                lambda_min: -0.1,
                lambda_max: 0.1,
                lambda_step: 0.02,
                ls: Vec::new(),
                conv_tol: 1e-2,
                open_tol: 2e-2,
            },
        }
    }

    /// Applies one setting. `section` is `None` for flags, which are looked
    /// up by key alone (keys are unique across sections).
    pub fn set(&mut self, section: Option<&str>, key: &str, value: &str) -> Result<(), ConfigError> {
        let Some(&(sec, _, _, _)) = KEYS.iter().find(|(s, k, _, _)| *k == key && section.is_none_or(|want| want == *s)) else {
            return Err(match section {
                Some(s) if KEYS.iter().any(|(_, k, _, _)| *k == key) => err(key, format!("not valid in section [{s}]")),
                _ => err(key, "unknown key"),
            });
        };
        let value = value.trim();
        let m = &mut self.model;
        let s = &mut self.solver;
        let r = &mut self.run;
        match (sec, key) {
            ("model", "model") => {
                m.model = match value {
                    "heisenberg" => ModelKind::Heisenberg,
                    "aklt" => ModelKind::Aklt,
                    "xxz_open" => ModelKind::XxzOpen,
                    "xxz_periodic" => ModelKind::XxzPeriodic,
                    "custom" => ModelKind::Custom,
                    _ => return Err(err(key, format!("unknown model '{value}'"))),
                }
            }
            ("model", "L") => m.l = parse_usize(key, value)?,
            ("model", "spin") => m.spin = Some(TwiceSpin::parse(value).map_err(|e| err(key, e.to_string()))?),
            ("model", "J") => m.j = parse_f64(key, value)?,
            ("model", "Delta") => m.delta = Some(parse_f64(key, value)?),
            ("model", "q") => m.q = Some(parse_f64(key, value)?),
            ("model", "boundary") => {
                m.periodic = match value {
                    "open" => false,
                    "periodic" => true,
                    _ => return Err(err(key, format!("expected open or periodic, got '{value}'"))),
                }
            }
            ("model", "graph") => m.graph = Some(PathBuf::from(value)),
            ("solver", "tol") => s.tol = parse_positive(key, value)?,
            ("solver", "degeneracy_tol") => s.degeneracy_tol = parse_positive(key, value)?,
            ("solver", "lanczos_tol") => s.lanczos_tol = parse_positive(key, value)?,
            ("solver", "krylov") => s.krylov = parse_usize(key, value)?,
            ("solver", "max_restarts") => s.max_restarts = parse_usize(key, value)?,
            ("solver", "seed") => s.seed = value.parse().map_err(|_| err(key, format!("expected an unsigned integer, got '{value}'")))?,
            ("solver", "threads") => {
                let t = parse_usize(key, value)?;
                if t == 0 {
                    return Err(err(key, "must be at least 1"));
                }
                s.threads = Some(t);
            }
            ("output", "out") => self.output.out = PathBuf::from(value),
            ("output", "format") => {
                self.output.format = match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(err(key, format!("expected csv or json, got '{value}'"))),
                }
            }
            ("run", "levels") => r.levels = parse_usize(key, value)?,
            ("run", "n") => r.n = parse_usize(key, value)?,
            ("run", "Lmin") => r.l_min = parse_usize(key, value)?,
            ("run", "Lmax") => r.l_max = parse_usize(key, value)?,
            ("run", "site") => r.site = Some(parse_usize(key, value)?),
            ("run", "lambda") => r.lambda = parse_positive(key, value)?,
            ("run", "tmax") => r.tmax = parse_nonnegative(key, value)?,
            ("run", "dt") => r.dt = parse_positive(key, value)?,
            ("run", "b_points") => r.b_points = parse_usize(key, value)?,
            ("run", "lambda_min") => r.lambda_min = parse_f64(key, value)?,
            ("run", "lambda_max") => r.lambda_max = parse_f64(key, value)?,
            ("run", "lambda_step") => r.lambda_step = parse_positive(key, value)?,
            ("run", "Ls") => {
                r.ls = value.split(',').map(|v| parse_usize(key, v.trim())).collect::<Result<_, _>>()?;
                if r.ls.is_empty() {
                    return Err(err(key, "empty list"));
                }
            }
            ("run", "conv_tol") => r.conv_tol = parse_positive(key, value)?,
            ("run", "open_tol") => r.open_tol = parse_positive(key, value)?,
            _ => unreachable!("every listed key is handled"),
        }
        Ok(())
    }

    /// Reads a config file on top of the current values.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: Some(Origin::File { path: path.to_path_buf(), line: 0 }),
            key: None,
            message: format!("cannot read config: {e}"),
        })?;
        self.apply_text(&text, path)
    }

    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<(), ConfigError> {
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let at = |mut e: ConfigError| {
                e.origin = Some(Origin::File { path: path.to_path_buf(), line: i + 1 });
                e
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !["model", "solver", "output", "run"].contains(&name) {
                    return Err(at(ConfigError { origin: None, key: None, message: format!("unknown section [{name}]") }));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(at(ConfigError { origin: None, key: None, message: format!("expected 'key = value', got '{line}'") }));
            };
            let Some(sec) = &section else {
                return Err(at(err(key.trim(), "setting outside any [section]")));
            };
            self.set(Some(sec), key.trim(), value).map_err(at)?;
        }
        Ok(())
    }

    /// Cross-field checks once all settings are in.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.model;
        if m.delta.is_some() && m.q.is_some() {
            return Err(err("Delta", "give at most one of Delta and q"));
        }
        if let Some(d) = m.delta {
            if !(d > 1.0) {
                return Err(err("Delta", "must exceed 1"));
            }
        }
        if let Some(q) = m.q {
            if !(q > 0.0 && q < 1.0) {
                return Err(err("q", "must lie in (0, 1)"));
            }
        }
        if matches!(m.model, ModelKind::Custom) && m.graph.is_none() {
            return Err(err("graph", "the custom model needs a graph file"));
        }
        if matches!(m.model, ModelKind::Aklt) && m.spin.is_some_and(|s| s != TwiceSpin::ONE) {
            return Err(err("spin", "the AKLT chain is spin 1"));
        }
        let r = &self.run;
        if r.l_min > r.l_max {
            return Err(err("Lmin", "exceeds Lmax"));
        }
        if r.lambda_min > r.lambda_max {
            return Err(err("lambda_min", "exceeds lambda_max"));
        }
        if r.b_points < 2 {
            return Err(err("b_points", "need at least 2"));
        }
        Ok(())
    }

    /// XXZ `q`, derived from `Delta` if that was given.
    pub fn xxz_q(&self) -> f64 {
        match (self.model.q, self.model.delta) {
            (Some(q), _) => q,
            (None, Some(d)) => d - (d * d - 1.0).sqrt(),
            (None, None) => 0.5,
        }
    }

    /// Resolved settings in section order, for the manifest.
    pub fn echo(&self) -> Vec<(&'static str, Vec<(&'static str, String)>)> {
        let m = &self.model;
        let s = &self.solver;
        let r = &self.run;
        let opt = |v: Option<String>| v.unwrap_or_default();
        vec![
            ("run_command", vec![("command", self.command.name().to_string())]),
            (
                "model",
                vec![
                    ("model", m.model.name().to_string()),
                    ("L", m.l.to_string()),
                    ("spin", opt(m.spin.map(|s| s.to_string()))),
                    ("J", fmt_f(m.j)),
                    ("Delta", opt(m.delta.map(fmt_f))),
                    ("q", opt(m.q.map(fmt_f))),
                    ("boundary", if m.periodic { "periodic" } else { "open" }.to_string()),
                    ("graph", opt(m.graph.as_ref().map(|p| p.display().to_string()))),
                ],
            ),
            (
                "solver",
                vec![
                    ("tol", fmt_f(s.tol)),
                    ("degeneracy_tol", fmt_f(s.degeneracy_tol)),
                    ("lanczos_tol", fmt_f(s.lanczos_tol)),
                    ("krylov", s.krylov.to_string()),
                    ("max_restarts", s.max_restarts.to_string()),
                    ("seed", s.seed.to_string()),
                    ("threads", opt(s.threads.map(|t| t.to_string()))),
                ],
            ),
            (
                "output",
                vec![("out", self.output.out.display().to_string()), ("format", self.output.format.extension().to_string())],
            ),
            (
                "run",
                vec![
                    ("levels", r.levels.to_string()),
                    ("n", r.n.to_string()),
                    ("Lmin", r.l_min.to_string()),
                    ("Lmax", r.l_max.to_string()),
                    ("site", opt(r.site.map(|x| x.to_string()))),
                    ("lambda", fmt_f(r.lambda)),
                    ("tmax", fmt_f(r.tmax)),
                    ("dt", fmt_f(r.dt)),
                    ("b_points", r.b_points.to_string()),
                    ("lambda_min", fmt_f(r.lambda_min)),
                    ("lambda_max", fmt_f(r.lambda_max)),
                    ("lambda_step", fmt_f(r.lambda_step)),
                    ("Ls", r.ls.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")),
                    ("conv_tol", fmt_f(r.conv_tol)),
                    ("open_tol", fmt_f(r.open_tol)),
                ],
            ),
        ]
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:?}")
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|_| err(key, format!("expected a number, got '{v}'")))?;
    if !x.is_finite() {
        return Err(err(key, "must be finite"));
    }
    Ok(x)
}

fn parse_positive(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = parse_f64(key, v)?;
    if !(x > 0.0) {
        return Err(err(key, "must be positive"));
    }
    Ok(x)
}

fn parse_nonnegative(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = parse_f64(key, v)?;
    if x < 0.0 {
        return Err(err(key, "must be nonnegative"));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse().map_err(|_| err(key, format!("expected a nonnegative integer, got '{v}'")))
}
