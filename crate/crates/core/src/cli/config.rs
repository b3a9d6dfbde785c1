//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::fidelity::PeakConfig;
use crate::floquet::ModelParams;
use crate::spinspace::{FockIndex, SpinBasis};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    FidelityCurve,
    FidelityVsK,
    EchoMatrix,
    PeakTrack,
    SkCumulative,
    CoherentOverlap,
    IdentityCheck,
    InterferenceDemo,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::FidelityCurve,
        Kind::FidelityVsK,
        Kind::EchoMatrix,
        Kind::PeakTrack,
        Kind::SkCumulative,
        Kind::CoherentOverlap,
        Kind::IdentityCheck,
        Kind::InterferenceDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::FidelityCurve => "fidelity-curve",
            Kind::FidelityVsK => "fidelity-vs-k",
            Kind::EchoMatrix => "echo-matrix",
            Kind::PeakTrack => "peak-track",
            Kind::SkCumulative => "sk-cumulative",
            Kind::CoherentOverlap => "coherent-overlap",
            Kind::IdentityCheck => "identity-check",
            Kind::InterferenceDemo => "interference-demo",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("kind", format!("unknown experiment kind `{s}`")))
    }
}

/// A list of Fock indices. `L` and `-L` stand for the extremes of whatever
/// basis the run uses; `all` is the whole ladder.
#[derive(Clone, Debug, PartialEq)]
pub enum IndexSet {
    All,
    List(Vec<IndexToken>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IndexToken {
    Top,
    Bottom,
    Fixed(FockIndex),
}

impl IndexSet {
    pub fn resolve(&self, basis: &SpinBasis) -> Vec<FockIndex> {
        match self {
            IndexSet::All => basis.indices().collect(),
            IndexSet::List(items) => items
                .iter()
                .map(|t| match t {
                    IndexToken::Top => basis.highest(),
                    IndexToken::Bottom => basis.lowest(),
                    IndexToken::Fixed(l) => *l,
                })
                .collect(),
        }
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSet::All => f.write_str("all"),
            IndexSet::List(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|t| match t {
                        IndexToken::Top => "L".to_string(),
                        IndexToken::Bottom => "-L".to_string(),
                        IndexToken::Fixed(l) => l.to_string(),
                    })
                    .collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

fn parse_index_set(s: &str) -> std::result::Result<IndexSet, String> {
    if s.trim() == "all" {
        return Ok(IndexSet::All);
    }
    let mut items = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        items.push(match part {
            "L" | "+L" => IndexToken::Top,
            "-L" => IndexToken::Bottom,
            _ => IndexToken::Fixed(part.parse().map_err(|e: Error| e.to_string())?),
        });
    }
    Ok(IndexSet::List(items))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseMode {
    Multiplicative,
    Multinomial,
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseMode::Multiplicative => "multiplicative",
            NoiseMode::Multinomial => "multinomial",
        })
    }
}

/// Fully resolved run description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub n_atoms: u32,
    pub params: ModelParams,
    pub k_min: f64,
    pub k_max: f64,
    pub k_step: f64,
    /// Fixed time of a K scan or of the two-well evolution.
    pub t: usize,
    pub k: IndexSet,
    pub l: IndexSet,
    pub n_max: usize,
    pub n_stride: usize,
    pub times: Vec<usize>,
    pub peaks: PeakConfig,
    pub theta_steps: usize,
    pub delta_k: f64,
    pub width: f64,
    pub noise: f64,
    pub noise_mode: NoiseMode,
    pub atoms: u64,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
}

/// Every accepted key, in header order.
pub const KEYS: [&str; 27] = [
    "kind",
    "n_atoms",
    "mu",
    "g_c",
    "K",
    "T",
    "sigma",
    "K_min",
    "K_max",
    "K_step",
    "t",
    "k",
    "l",
    "n_max",
    "n_stride",
    "times",
    "threshold_frac",
    "min_gap",
    "theta_steps",
    "delta_k",
    "width",
    "noise",
    "noise_mode",
    "atoms",
    "seed",
    "workers",
    "out",
];

impl ExperimentConfig {
    pub fn new(kind: Kind) -> Self {
        ExperimentConfig {
            kind,
            n_atoms: 200,
            params: ModelParams {
                sigma: 0.1,
                ..Default::default()
            },
            k_min: 0.0,
            k_max: 4.0,
            k_step: 0.01,
            t: 1000,
            k: IndexSet::All,
            l: IndexSet::List(vec![IndexToken::Bottom]),
            n_max: 2000,
            n_stride: 1,
            times: vec![100, 500, 1000, 1450, 2000],
            peaks: PeakConfig::default(),
            theta_steps: 181,
            delta_k: 0.001,
            width: 1.0,
            noise: 0.0,
            noise_mode: NoiseMode::Multiplicative,
            atoms: 100_000,
            seed: 0,
            workers: 1,
            out: None,
        }
    }

    /// Applies one `key = value` binding.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = |msg: String| Error::config(key, msg);
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::config(key, format!("`{v}` is not a valid number")))
        }
        match key {
            "kind" => self.kind = value.parse()?,
            "n_atoms" => self.n_atoms = num(key, value)?,
            "mu" => self.params.mu = num(key, value)?,
            "g_c" => self.params.g_c = num(key, value)?,
            "K" => self.params.kick = num(key, value)?,
            "T" => self.params.period = num(key, value)?,
            "sigma" => self.params.sigma = num(key, value)?,
            "K_min" => self.k_min = num(key, value)?,
            "K_max" => self.k_max = num(key, value)?,
            "K_step" => self.k_step = num(key, value)?,
            "t" => self.t = num(key, value)?,
            "k" => self.k = parse_index_set(value).map_err(bad)?,
            "l" => self.l = parse_index_set(value).map_err(bad)?,
            "n_max" => self.n_max = num(key, value)?,
            "n_stride" => self.n_stride = num(key, value)?,
            "times" => {
                self.times = value
                    .split(',')
                    .map(|v| num(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            "threshold_frac" => self.peaks.threshold_frac = num(key, value)?,
            "min_gap" => self.peaks.min_gap = num(key, value)?,
            "theta_steps" => self.theta_steps = num(key, value)?,
            "delta_k" => self.delta_k = num(key, value)?,
            "width" => self.width = num(key, value)?,
            "noise" => self.noise = num(key, value)?,
            "noise_mode" => {
                self.noise_mode = match value {
                    "multiplicative" => NoiseMode::Multiplicative,
                    "multinomial" => NoiseMode::Multinomial,
                    _ => return Err(bad(format!("`{value}` is not multiplicative or multinomial"))),
                }
            }
            "atoms" => self.atoms = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "workers" => self.workers = num(key, value)?,
            "out" => self.out = (!value.is_empty() && value != "-").then(|| PathBuf::from(value)),
            _ => {
                let hint = closest(key, &KEYS)
                    .map(|k| format!("; did you mean `{k}`?"))
                    .unwrap_or_default();
                return Err(Error::config(key, format!("unknown key{hint}")));
            }
        }
        Ok(())
    }

    /// Applies the bindings of a flat config text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(line, format!("line {} is not `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<SpinBasis> {
        SpinBasis::new(self.n_atoms).map_err(|e| Error::config("n_atoms", e.to_string()))
    }

    /// Kick grid `K_min, K_min + K_step, …` up to `K_max` inclusive.
    pub fn kicks(&self) -> Vec<f64> {
        let count = ((self.k_max - self.k_min) / self.k_step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.k_min + i as f64 * self.k_step).collect()
    }

    /// Range and consistency checks that name the offending key.
    pub fn validate(&self) -> Result<()> {
        let basis = self.basis()?;
        let p = &self.params;
        for (key, v) in [("mu", p.mu), ("g_c", p.g_c), ("K", p.kick)] {
            if !v.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
        }
        if !(p.period > 0.0 && p.period.is_finite()) {
            return Err(Error::config("T", "must be positive"));
        }
        if !(p.sigma >= 0.0 && p.sigma.is_finite()) {
            return Err(Error::config("sigma", "must be non-negative"));
        }
        if !(self.k_step > 0.0 && self.k_step.is_finite()) {
            return Err(Error::config("K_step", "must be positive"));
        }
        if !(self.k_min.is_finite() && self.k_max.is_finite() && self.k_max >= self.k_min) {
            return Err(Error::config("K_max", "must be finite and at least K_min"));
        }
        if self.n_stride == 0 {
            return Err(Error::config("n_stride", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if !(self.peaks.threshold_frac > 0.0 && self.peaks.threshold_frac < 1.0) {
            return Err(Error::config("threshold_frac", "must lie in (0, 1)"));
        }
        if self.theta_steps < 2 {
            return Err(Error::config("theta_steps", "must be at least 2"));
        }
        if self.times.is_empty() {
            return Err(Error::config("times", "must list at least one time"));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::config("width", "must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::config("noise", "must be non-negative"));
        }
        if !self.delta_k.is_finite() {
            return Err(Error::config("delta_k", "must be finite"));
        }
        for (key, set) in [("k", &self.k), ("l", &self.l)] {
            let resolved = set.resolve(&basis);
            if resolved.is_empty() {
                return Err(Error::config(key, "is empty"));
            }
            for idx in resolved {
                basis
                    .row(idx)
                    .map_err(|_| Error::config(key, format!("{idx} lies outside [-{0}, {0}]", basis.l())))?;
            }
        }
        let single = |key: &str, set: &IndexSet| -> Result<()> {
            if set.resolve(&basis).len() != 1 {
                return Err(Error::config(key, format!("{} needs exactly one index", self.kind)));
            }
            Ok(())
        };
        match self.kind {
            Kind::EchoMatrix | Kind::PeakTrack | Kind::SkCumulative => single("l", &self.l)?,
            Kind::IdentityCheck | Kind::InterferenceDemo => single("k", &self.k)?,
            _ => {}
        }
        Ok(())
    }

    /// `(key, value)` pairs in [`KEYS`] order, for output headers.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let times: Vec<String> = self.times.iter().map(|t| t.to_string()).collect();
        vec![
            ("kind", self.kind.to_string()),
            ("n_atoms", self.n_atoms.to_string()),
            ("mu", p.mu.to_string()),
            ("g_c", p.g_c.to_string()),
            ("K", p.kick.to_string()),
            ("T", p.period.to_string()),
            ("sigma", p.sigma.to_string()),
            ("K_min", self.k_min.to_string()),
            ("K_max", self.k_max.to_string()),
            ("K_step", self.k_step.to_string()),
            ("t", self.t.to_string()),
            ("k", self.k.to_string()),
            ("l", self.l.to_string()),
            ("n_max", self.n_max.to_string()),
            ("n_stride", self.n_stride.to_string()),
            ("times", times.join(",")),
            ("threshold_frac", self.peaks.threshold_frac.to_string()),
            ("min_gap", self.peaks.min_gap.to_string()),
            ("theta_steps", self.theta_steps.to_string()),
            ("delta_k", self.delta_k.to_string()),
            ("width", self.width.to_string()),
            ("noise", self.noise.to_string()),
            ("noise_mode", self.noise_mode.to_string()),
            ("atoms", self.atoms.to_string()),
            ("seed", self.seed.to_string()),
            ("workers", self.workers.to_string()),
            (
                "out",
                self.out
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "-".to_string()),
            ),
        ]
    }
}

/// Nearest candidate by Jaro-Winkler similarity, if reasonably close.
pub fn closest<'a>(word: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates
        .iter()
        .map(|c| (strsim::jaro_winkler(word, c), *c))
        .filter(|(score, _)| *score > 0.7)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c)
}
