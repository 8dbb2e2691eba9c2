//! Flat `key = value` run configuration.
//!
//! ```text
//! # N = 7 comb at the matching coupling
//! model = reduced
//! n = 7
//! comb_spacing = 1.0
//! coupling = optimal
//! init = rect
//! outputs = efficiency, e12
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use mr_qmem::{normalize, optimal_coupling, rect_comb_init, AmplitudeVector, SystemParams};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

pub const KEYS: &[&str] = &[
    "model",
    "n",
    "comb_spacing",
    "units",
    "coupling",
    "light_speed",
    "carrier_wavenumber",
    "band_halfwidth",
    "spacing",
    "init",
    "amplitudes",
    "t_max",
    "samples",
    "modes_per_band",
    "outputs",
    "e12_pair",
    "prominence",
    "g_min",
    "g_max",
    "count",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: Option<usize>, field: &str, message: impl Into<String>) -> Self {
        Self {
            line,
            field: Some(field.to_owned()),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.field) {
            (Some(l), Some(k)) => write!(f, "line {l}, field `{k}`: {}", self.message),
            (None, Some(k)) => write!(f, "field `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Raw entries with the line they came from (`None` for command-line overrides).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Option<usize>)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError {
                line: Some(line),
                field: None,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            check_key(&key, Some(line))?;
            if entries.contains_key(&key) {
                return Err(ConfigError::at(Some(line), &key, "duplicate key"));
            }
            entries.insert(key, (value.trim().to_owned(), Some(line)));
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.to_ascii_lowercase();
        check_key(&key, None)?;
        self.entries.insert(key, (value.trim().to_owned(), None));
        Ok(())
    }

    fn get(&self, key: &str) -> Option<(&str, Option<usize>)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }
}

fn check_key(key: &str, line: Option<usize>) -> Result<(), ConfigError> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(ConfigError::at(line, key, "unknown key"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Analytic,
    Reduced,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    RadPerSecond,
    Hertz,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingSpec {
    Optimal,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Rect,
    Custom(Vec<Complex64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Output {
    Amplitudes,
    Efficiency,
    E12,
    Spectra,
    Collective,
}

impl Output {
    pub fn name(self) -> &'static str {
        match self {
            Self::Amplitudes => "amplitudes",
            Self::Efficiency => "efficiency",
            Self::E12 => "e12",
            Self::Spectra => "spectra",
            Self::Collective => "collective",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub n: usize,
    pub comb_spacing: f64,
    pub units: Units,
    pub coupling: CouplingSpec,
    pub light_speed: f64,
    pub carrier_wavenumber: f64,
    pub band_halfwidth: f64,
    pub spacing: Option<f64>,
    pub init: InitSpec,
    /// Final time in echo cycles `2π/Δ`.
    pub t_max: f64,
    /// Number of time points on `[0, t_max]`.
    pub samples: usize,
    pub modes_per_band: usize,
    pub outputs: Vec<Output>,
    pub e12_pair: (i64, i64),
    pub prominence: f64,
    pub g_min: Option<f64>,
    pub g_max: Option<f64>,
    pub count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: Model::Reduced,
            n: 7,
            comb_spacing: 1.0,
            units: Units::RadPerSecond,
            coupling: CouplingSpec::Optimal,
            light_speed: 1.0,
            carrier_wavenumber: 1.0e4,
            band_halfwidth: 100.0,
            spacing: None,
            init: InitSpec::Rect,
            t_max: 1.0,
            samples: 2048,
            modes_per_band: 512,
            outputs: vec![Output::Efficiency],
            e12_pair: (0, 1),
            prominence: 0.25,
            g_min: None,
            g_max: None,
            count: 201,
        }
    }
}

fn parse_f64(raw: &RawConfig, key: &str, positive: bool) -> Result<Option<f64>, ConfigError> {
    let Some((v, line)) = raw.get(key) else {
        return Ok(None);
    };
    let x: f64 = v
        .parse()
        .map_err(|_| ConfigError::at(line, key, format!("expected a number, found `{v}`")))?;
    if !x.is_finite() || (positive && x <= 0.0) || x < 0.0 {
        let need = if positive { "positive" } else { "non-negative" };
        return Err(ConfigError::at(
            line,
            key,
            format!("expected a {need} finite number, found `{v}`"),
        ));
    }
    Ok(Some(x))
}

fn parse_usize(raw: &RawConfig, key: &str, min: usize) -> Result<Option<usize>, ConfigError> {
    let Some((v, line)) = raw.get(key) else {
        return Ok(None);
    };
    match v.parse::<usize>() {
        Ok(x) if x >= min => Ok(Some(x)),
        _ => Err(ConfigError::at(
            line,
            key,
            format!("expected an integer >= {min}, found `{v}`"),
        )),
    }
}

fn parse_complex(token: &str) -> Option<Complex64> {
    let (re, im) = token.split_once(',')?;
    Some(Complex64::new(
        re.trim().parse().ok()?,
        im.trim().parse().ok()?,
    ))
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        if let Some((v, line)) = raw.get("model") {
            cfg.model = match v {
                "analytic" => Model::Analytic,
                "reduced" => Model::Reduced,
                "full" => Model::Full,
                _ => {
                    return Err(ConfigError::at(
                        line,
                        "model",
                        format!("expected analytic, reduced or full, found `{v}`"),
                    ))
                }
            };
        }
        if let Some(n) = parse_usize(raw, "n", 1)? {
            cfg.n = n;
        }
        if let Some(d) = parse_f64(raw, "comb_spacing", true)? {
            cfg.comb_spacing = d;
        }
        if let Some((v, line)) = raw.get("units") {
            cfg.units = match v.to_ascii_lowercase().as_str() {
                "rad/s" | "rad" => Units::RadPerSecond,
                "hz" => Units::Hertz,
                _ => {
                    return Err(ConfigError::at(
                        line,
                        "units",
                        format!("expected rad/s or hz, found `{v}`"),
                    ))
                }
            };
        }
        if let Some((v, line)) = raw.get("coupling") {
            cfg.coupling = if v == "optimal" {
                CouplingSpec::Optimal
            } else {
                CouplingSpec::Value(
                    parse_f64(raw, "coupling", false)?
                        .ok_or_else(|| ConfigError::at(line, "coupling", "missing value"))?,
                )
            };
        }
        if let Some(c) = parse_f64(raw, "light_speed", true)? {
            cfg.light_speed = c;
        }
        if let Some(k) = parse_f64(raw, "carrier_wavenumber", true)? {
            cfg.carrier_wavenumber = k;
        }
        if let Some(b) = parse_f64(raw, "band_halfwidth", true)? {
            cfg.band_halfwidth = b;
        }
        cfg.spacing = parse_f64(raw, "spacing", true)?;

        let amplitudes = raw.get("amplitudes");
        match raw.get("init") {
            None | Some(("rect", _)) => {
                if let Some((_, line)) = amplitudes {
                    return Err(ConfigError::at(
                        line,
                        "amplitudes",
                        "only used with `init = custom`",
                    ));
                }
            }
            Some(("custom", line)) => {
                let (v, aline) = amplitudes.ok_or_else(|| {
                    ConfigError::at(line, "amplitudes", "required by `init = custom`")
                })?;
                let values = v
                    .split_whitespace()
                    .map(|tok| {
                        parse_complex(tok).ok_or_else(|| {
                            ConfigError::at(
                                aline,
                                "amplitudes",
                                format!("expected `re,im`, found `{tok}`"),
                            )
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                cfg.init = InitSpec::Custom(values);
            }
            Some((v, line)) => {
                return Err(ConfigError::at(
                    line,
                    "init",
                    format!("expected rect or custom, found `{v}`"),
                ))
            }
        }

        if let Some(t) = parse_f64(raw, "t_max", true)? {
            cfg.t_max = t;
        }
        if let Some(s) = parse_usize(raw, "samples", 2)? {
            cfg.samples = s;
        }
        if let Some(m) = parse_usize(raw, "modes_per_band", mr_qmem::full::MIN_MODES_PER_BAND)? {
            cfg.modes_per_band = m;
        }
        if let Some((v, line)) = raw.get("outputs") {
            let mut outputs = Vec::new();
            for tok in v.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let o = match tok {
                    "amplitudes" => Output::Amplitudes,
                    "efficiency" => Output::Efficiency,
                    "e12" => Output::E12,
                    "spectra" => Output::Spectra,
                    "collective" => Output::Collective,
                    _ => {
                        return Err(ConfigError::at(
                            line,
                            "outputs",
                            format!("unknown output `{tok}`"),
                        ))
                    }
                };
                if !outputs.contains(&o) {
                    outputs.push(o);
                }
            }
            cfg.outputs = outputs;
        }
        if let Some((v, line)) = raw.get("e12_pair") {
            let parsed = v
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
            cfg.e12_pair = parsed.ok_or_else(|| {
                ConfigError::at(line, "e12_pair", format!("expected `n1,n2`, found `{v}`"))
            })?;
        }
        if let Some(p) = parse_f64(raw, "prominence", false)? {
            cfg.prominence = p;
        }
        cfg.g_min = parse_f64(raw, "g_min", true)?;
        cfg.g_max = parse_f64(raw, "g_max", true)?;
        if let Some(c) = parse_usize(raw, "count", 3)? {
            cfg.count = c;
        }
        cfg.validate(raw)?;
        Ok(cfg)
    }

    fn validate(&self, raw: &RawConfig) -> Result<(), ConfigError> {
        let line = |k: &str| raw.get(k).and_then(|(_, l)| l);
        if self.outputs.contains(&Output::Spectra) && self.model != Model::Full {
            return Err(ConfigError::at(
                line("outputs"),
                "outputs",
                "`spectra` requires `model = full`",
            ));
        }
        if let InitSpec::Custom(v) = &self.init {
            if v.len() != self.n {
                return Err(ConfigError::at(
                    line("amplitudes"),
                    "amplitudes",
                    format!("{} amplitudes given for n = {}", v.len(), self.n),
                ));
            }
        }
        if self.e12_pair.0 == self.e12_pair.1 {
            return Err(ConfigError::at(
                line("e12_pair"),
                "e12_pair",
                "indices must differ",
            ));
        }
        if let (Some(lo), Some(hi)) = (self.g_min, self.g_max) {
            if lo >= hi {
                return Err(ConfigError::at(line("g_max"), "g_max", "must exceed g_min"));
            }
        }
        let params = self
            .base_params()
            .map_err(|e| ConfigError::at(None, "params", e.to_string()))?;
        let explicit = raw.get("e12_pair").is_some();
        for n in [self.e12_pair.0, self.e12_pair.1]
            .into_iter()
            .filter(|_| explicit)
        {
            if n < params.min_index() || n > params.max_index() {
                return Err(ConfigError::at(
                    line("e12_pair"),
                    "e12_pair",
                    format!(
                        "index {n} outside [{}, {}]",
                        params.min_index(),
                        params.max_index()
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Comb spacing in rad/s.
    pub fn angular_spacing(&self) -> f64 {
        match self.units {
            Units::RadPerSecond => self.comb_spacing,
            Units::Hertz => 2.0 * PI * self.comb_spacing,
        }
    }

    fn base_params(&self) -> mr_qmem::Result<SystemParams> {
        let p = SystemParams::new(
            self.n,
            self.angular_spacing(),
            0.0,
            self.light_speed,
            self.carrier_wavenumber,
            self.band_halfwidth,
        )?;
        match self.spacing {
            Some(z) => p.with_spacing(z),
            None => Ok(p),
        }
    }

    pub fn params(&self) -> mr_qmem::Result<SystemParams> {
        self.params_with_coupling(None)
    }

    pub fn params_with_coupling(&self, g: Option<f64>) -> mr_qmem::Result<SystemParams> {
        let p = self.base_params()?;
        let g = match (g, self.coupling) {
            (Some(g), _) => g,
            (None, CouplingSpec::Value(g)) => g,
            (None, CouplingSpec::Optimal) => optimal_coupling(&p),
        };
        p.with_coupling(g)
    }

    /// Initial amplitudes; custom vectors are normalized, and the returned
    /// flag says whether that changed them.
    pub fn init_vector(&self, params: &SystemParams) -> mr_qmem::Result<(AmplitudeVector, bool)> {
        match &self.init {
            InitSpec::Rect => Ok((rect_comb_init(params), false)),
            InitSpec::Custom(v) => {
                let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                Ok((normalize(v)?, (norm - 1.0).abs() > 1e-12))
            }
        }
    }

    /// Canonical `key = value` rendering of the effective configuration.
    pub fn canonical(&self) -> String {
        let model = match self.model {
            Model::Analytic => "analytic",
            Model::Reduced => "reduced",
            Model::Full => "full",
        };
        let units = match self.units {
            Units::RadPerSecond => "rad/s",
            Units::Hertz => "hz",
        };
        let coupling = match self.coupling {
            CouplingSpec::Optimal => "optimal".to_owned(),
            CouplingSpec::Value(g) => format!("{g:?}"),
        };
        let init = match &self.init {
            InitSpec::Rect => "rect".to_owned(),
            InitSpec::Custom(v) => format!(
                "custom:{}",
                v.iter()
                    .map(|z| format!("{:?},{:?}", z.re, z.im))
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
        };
        let opt = |x: Option<f64>| x.map_or("none".to_owned(), |v| format!("{v:?}"));
        let outputs: Vec<&str> = self.outputs.iter().map(|o| o.name()).collect();
        let lines = [
            ("model", model.to_owned()),
            ("n", self.n.to_string()),
            ("comb_spacing", format!("{:?}", self.comb_spacing)),
            ("units", units.to_owned()),
            ("coupling", coupling),
            ("light_speed", format!("{:?}", self.light_speed)),
            (
                "carrier_wavenumber",
                format!("{:?}", self.carrier_wavenumber),
            ),
            ("band_halfwidth", format!("{:?}", self.band_halfwidth)),
            ("spacing", opt(self.spacing)),
            ("init", init),
            ("t_max", format!("{:?}", self.t_max)),
            ("samples", self.samples.to_string()),
            ("modes_per_band", self.modes_per_band.to_string()),
            ("outputs", outputs.join(",")),
            (
                "e12_pair",
                format!("{},{}", self.e12_pair.0, self.e12_pair.1),
            ),
            ("prominence", format!("{:?}", self.prominence)),
            ("g_min", opt(self.g_min)),
            ("g_max", opt(self.g_max)),
            ("count", self.count.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
