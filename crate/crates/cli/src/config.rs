//! Run configuration.
//!
//! A config file is TOML with one table per section. Every key is optional and
//! unknown keys are rejected. The echo form written into output files lists
//! every effective key as a sorted `section.key = value` line, which parses
//! back to the same configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use jcm_core::measurement::{DesignBasis, FdOptions, PipelineConfig, Statistics};
use jcm_core::phasespace::{FilterSpec, Method, PhaseGrid};
use jcm_core::{ModelParams, MotionalDensityMatrix, MotionalInput, Truncation};
use num_complex::Complex64 as C64;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub eta: f64,
    pub delta_phi: f64,
    pub k: usize,
    pub delta_omega: f64,
    pub nu: f64,
    pub omega21: f64,
    pub kappa_phase: f64,
    pub beta0_re: f64,
    pub beta0_im: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            eta: 0.3,
            delta_phi: 0.0,
            k: 0,
            delta_omega: 20.0,
            nu: 5000.0,
            omega21: 1e5,
            kappa_phase: 0.0,
            beta0_re: 100.0,
            beta0_im: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Coherent,
    Vacuum,
    Number,
    Thermal,
}

/// Initial motional state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputSection {
    pub kind: InputKind,
    pub alpha_re: f64,
    pub alpha_im: f64,
    /// Excitation of a number state.
    pub n: usize,
    /// Mean occupation of a thermal state.
    pub nbar: f64,
}

impl Default for InputSection {
    fn default() -> Self {
        Self { kind: InputKind::Coherent, alpha_re: 8f64.sqrt(), alpha_im: 0.0, n: 1, nbar: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationSection {
    pub n_max: usize,
    pub tail_tol: f64,
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self { n_max: 64, tail_tol: 1e-10 }
    }
}

/// Time grid in units of `1/|κ|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self { t_start: 0.0, t_end: 0.5, n_points: 200 }
    }
}

/// Single time at which `pfunc` and `measure` evaluate the state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnapshotSection {
    pub t: f64,
}

impl Default for SnapshotSection {
    fn default() -> Self {
        Self { t: 0.2 }
    }
}

/// Phase-space grid for P functions; the center defaults to the coherent
/// input amplitude (the origin for other inputs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_im: Option<f64>,
    pub half_extent: f64,
    pub n_side: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { center_re: None, center_im: None, half_extent: 5.0, n_side: 41 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Series,
    Integral,
}

impl MethodChoice {
    pub fn method(self) -> Method {
        match self {
            MethodChoice::Series => Method::Series,
            MethodChoice::Integral => Method::Integral,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodChoice::Series => "series",
            MethodChoice::Integral => "integral",
        }
    }
}

impl FromStr for MethodChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "series" => Ok(MethodChoice::Series),
            "integral" => Ok(MethodChoice::Integral),
            _ => Err(format!("expected `series` or `integral`, got `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub width: f64,
    pub method: MethodChoice,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self { width: jcm_core::phasespace::DEFAULT_WIDTH, method: MethodChoice::Series }
    }
}

/// Shot budget: exact probabilities or a number of repetitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shots {
    Ideal,
    Count(u64),
}

impl FromStr for Shots {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "ideal" {
            return Ok(Shots::Ideal);
        }
        match s.parse::<u64>() {
            Ok(0) => Err("shot count must be positive".into()),
            Ok(n) if n > i64::MAX as u64 => Err(format!("shot count {n} is too large")),
            Ok(n) => Ok(Shots::Count(n)),
            Err(_) => Err(format!("expected a positive integer or `ideal`, got `{s}`")),
        }
    }
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Ideal => f.write_str("ideal"),
            Shots::Count(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for Shots {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Shots::Ideal => s.serialize_str("ideal"),
            Shots::Count(n) => s.serialize_i64(*n as i64),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Shots;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer or \"ideal\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Shots, E> {
                if v == "ideal" {
                    Ok(Shots::Ideal)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Shots, E> {
                if v > 0 {
                    Ok(Shots::Count(v as u64))
                } else {
                    Err(E::invalid_value(de::Unexpected::Signed(v), &self))
                }
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Shots, E> {
                if v > 0 && v <= i64::MAX as u64 {
                    Ok(Shots::Count(v))
                } else {
                    Err(E::invalid_value(de::Unexpected::Unsigned(v), &self))
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisChoice {
    Level2,
    Full,
}

/// Reconstruction settings. `ladder` overrides the default probe times
/// `τ₀ s/|κ'|`, `s = 1..=probe_n_max+1`; `table_points` are the
/// displacements at which the probe inversion is run (default: the origin).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementSection {
    pub shots: Shots,
    pub alpha_half_extent: f64,
    pub alpha_spacing: f64,
    pub fd_h: f64,
    pub richardson: bool,
    pub p_matrix: bool,
    pub basis: BasisChoice,
    pub kappa_prime: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_points: Option<Vec<[f64; 2]>>,
    pub probe_n_max: usize,
    pub probe_tail_tol: f64,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        Self {
            shots: Shots::Ideal,
            alpha_half_extent: jcm_core::measurement::DEFAULT_ALPHA_HALF_EXTENT,
            alpha_spacing: jcm_core::measurement::DEFAULT_ALPHA_SPACING,
            fd_h: FdOptions::default().h,
            richardson: true,
            p_matrix: true,
            basis: BasisChoice::Level2,
            kappa_prime: 1.0,
            tau0: Some(3.0),
            ladder: None,
            table_points: None,
            probe_n_max: 31,
            probe_tail_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub cavity_dim: usize,
    pub motional_dim: usize,
    pub threshold: f64,
    /// Offset added to η on the dense-propagation path only.
    pub eta_mismatch: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self { cavity_dim: 26, motional_dim: 20, threshold: 1e-8, eta_mismatch: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub input: InputSection,
    pub truncation: TruncationSection,
    pub scan: ScanSection,
    pub snapshot: SnapshotSection,
    pub grid: GridSection,
    pub filter: FilterSection,
    pub measurement: MeasurementSection,
    pub oracle: OracleSection,
    pub output: OutputSection,
    pub run: RunSection,
}

/// Largest accepted motional cutoff; matrices are dense.
pub const MAX_N_MAX: usize = 2048;
pub const MAX_SCAN_POINTS: usize = 10_000_000;

fn invalid(key: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

fn finite(key: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be finite, got {v}")))
    }
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be > 0, got {v}")))
    }
}

impl RunConfig {
    /// Parses and validates a config text.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every section; errors name the offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.truncation.n_max > MAX_N_MAX {
            return Err(invalid("truncation.n_max", format!("dense matrices are limited to n_max <= {MAX_N_MAX}")));
        }
        if self.scan.n_points > MAX_SCAN_POINTS {
            return Err(invalid("scan.n_points", format!("must be <= {MAX_SCAN_POINTS}")));
        }
        if self.run.seed > i64::MAX as u64 {
            return Err(invalid("run.seed", format!("must be <= {}", i64::MAX)));
        }
        let i = &self.input;
        finite("input.alpha_re", i.alpha_re)?;
        finite("input.alpha_im", i.alpha_im)?;
        finite("input.nbar", i.nbar)?;
        finite("grid.half_extent", self.grid.half_extent)?;
        self.model_params()?;
        self.truncation()?;
        self.t_grid()?;
        finite("snapshot.t", self.snapshot.t)?;
        if self.snapshot.t < 0.0 {
            return Err(invalid("snapshot.t", "must be >= 0"));
        }
        self.grid()?;
        self.filter()?;
        let m = &self.measurement;
        positive("measurement.alpha_half_extent", m.alpha_half_extent)?;
        positive("measurement.alpha_spacing", m.alpha_spacing)?;
        self.fd()?;
        positive("measurement.kappa_prime", m.kappa_prime)?;
        if let Some(t) = m.tau0 {
            positive("measurement.tau0", t)?;
        }
        if let Some(l) = &m.ladder {
            if l.is_empty() {
                return Err(invalid("measurement.ladder", "probe-time list is empty"));
            }
            for &t in l {
                positive("measurement.ladder", t)?;
            }
        }
        if let Some(pts) = &m.table_points {
            for p in pts {
                finite("measurement.table_points", p[0])?;
                finite("measurement.table_points", p[1])?;
            }
        }
        self.probe_truncation()?;
        if self.oracle.cavity_dim < 2 {
            return Err(invalid("oracle.cavity_dim", "must be >= 2"));
        }
        if self.oracle.motional_dim < 2 {
            return Err(invalid("oracle.motional_dim", "must be >= 2"));
        }
        positive("oracle.threshold", self.oracle.threshold)?;
        finite("oracle.eta_mismatch", self.oracle.eta_mismatch)?;
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams, CliError> {
        let m = &self.model;
        let motional = match self.input.kind {
            InputKind::Coherent => MotionalInput::Coherent(C64::new(
                finite("input.alpha_re", self.input.alpha_re)?,
                finite("input.alpha_im", self.input.alpha_im)?,
            )),
            _ => MotionalInput::Matrix(self.input_matrix()?),
        };
        let p = ModelParams {
            eta: m.eta,
            delta_phi: m.delta_phi,
            k_sideband: m.k,
            delta_omega: m.delta_omega,
            nu: m.nu,
            omega21: m.omega21,
            kappa_phase: m.kappa_phase,
            beta0: C64::new(m.beta0_re, m.beta0_im),
            motional,
        };
        p.validate().map_err(|e| match e {
            jcm_core::Error::InvalidParameter(msg) => invalid("model", msg),
            other => CliError::from(other),
        })?;
        Ok(p)
    }

    fn input_matrix(&self) -> Result<MotionalDensityMatrix, CliError> {
        let t = self.truncation()?;
        Ok(match self.input.kind {
            InputKind::Coherent => MotionalDensityMatrix::coherent(C64::new(self.input.alpha_re, self.input.alpha_im), &t)?,
            InputKind::Vacuum => MotionalDensityMatrix::vacuum(&t),
            InputKind::Number => MotionalDensityMatrix::number_state(self.input.n, &t)?,
            InputKind::Thermal => {
                if !(self.input.nbar >= 0.0 && self.input.nbar.is_finite()) {
                    return Err(invalid("input.nbar", format!("must be >= 0, got {}", self.input.nbar)));
                }
                MotionalDensityMatrix::thermal(self.input.nbar, &t)?
            }
        })
    }

    pub fn truncation(&self) -> Result<Truncation, CliError> {
        Truncation::new(self.truncation.n_max, self.truncation.tail_tol).map_err(|e| invalid("truncation", e))
    }

    pub fn probe_truncation(&self) -> Result<Truncation, CliError> {
        let m = &self.measurement;
        Truncation::new(m.probe_n_max, m.probe_tail_tol).map_err(|e| invalid("measurement.probe_n_max", e))
    }

    /// Evenly spaced times including both ends; a single point sits at `t_start`.
    pub fn t_grid(&self) -> Result<Vec<f64>, CliError> {
        let s = &self.scan;
        let a = finite("scan.t_start", s.t_start)?;
        let b = finite("scan.t_end", s.t_end)?;
        if a < 0.0 {
            return Err(invalid("scan.t_start", "must be >= 0"));
        }
        if b < a {
            return Err(invalid("scan.t_end", "must be >= scan.t_start"));
        }
        match s.n_points {
            0 => Err(invalid("scan.n_points", "must be >= 1")),
            1 => Ok(vec![a]),
            n => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
        }
    }

    pub fn grid(&self) -> Result<PhaseGrid, CliError> {
        let g = &self.grid;
        let default = match self.input.kind {
            InputKind::Coherent => C64::new(self.input.alpha_re, self.input.alpha_im),
            _ => C64::new(0.0, 0.0),
        };
        let center = C64::new(g.center_re.unwrap_or(default.re), g.center_im.unwrap_or(default.im));
        finite("grid.center_re", center.re)?;
        finite("grid.center_im", center.im)?;
        PhaseGrid::new(center, g.half_extent, g.n_side).map_err(|e| invalid("grid", e))
    }

    pub fn filter(&self) -> Result<FilterSpec, CliError> {
        FilterSpec::disc(self.filter.width).map_err(|e| invalid("filter.width", e))
    }

    fn fd(&self) -> Result<FdOptions, CliError> {
        let fd = FdOptions { h: self.measurement.fd_h, richardson: self.measurement.richardson };
        fd.validate().map_err(|e| invalid("measurement.fd_h", e))?;
        Ok(fd)
    }

    pub fn statistics(&self) -> Statistics {
        match self.measurement.shots {
            Shots::Ideal => Statistics::Ideal,
            Shots::Count(shots) => Statistics::Shots { shots, seed: self.run.seed },
        }
    }

    pub fn basis(&self) -> DesignBasis {
        match self.measurement.basis {
            BasisChoice::Level2 => DesignBasis::Level2,
            BasisChoice::Full => DesignBasis::Full,
        }
    }

    pub fn pipeline(&self) -> Result<PipelineConfig, CliError> {
        let m = &self.measurement;
        let alpha_grid =
            PhaseGrid::with_spacing(C64::new(0.0, 0.0), m.alpha_half_extent, m.alpha_spacing).map_err(|e| invalid("measurement.alpha_spacing", e))?;
        Ok(PipelineConfig {
            alpha_grid,
            fd: self.fd()?,
            statistics: self.statistics(),
            p_grid: if m.p_matrix { Some(self.grid()?) } else { None },
            width: self.filter.width,
            method: self.filter.method.method(),
        })
    }

    /// Sorted `section.key = value` lines of every effective key.
    pub fn echo(&self) -> String {
        let value = toml::Value::try_from(self).expect("config serializes to TOML");
        let mut flat = BTreeMap::new();
        flatten("", &value, &mut flat);
        let mut out = String::new();
        for (k, v) in flat {
            out.push_str(&k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut BTreeMap<String, String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, child) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.t_grid().unwrap().len(), 200);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse("[model]\netaa = 0.3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("etaa"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn bad_value_names_key() {
        let err = RunConfig::parse("[scan]\nn_points = 0\n").unwrap_err();
        assert!(err.to_string().contains("scan.n_points"));
        let err = RunConfig::parse("[measurement]\nladder = []\n").unwrap_err();
        assert!(err.to_string().contains("measurement.ladder"));
    }

    #[test]
    fn shots_accepts_ideal_and_counts() {
        let cfg = RunConfig::parse("[measurement]\nshots = 10000\n").unwrap();
        assert_eq!(cfg.measurement.shots, Shots::Count(10000));
        let cfg = RunConfig::parse("[measurement]\nshots = \"ideal\"\n").unwrap();
        assert_eq!(cfg.measurement.shots, Shots::Ideal);
        assert!(RunConfig::parse("[measurement]\nshots = 0\n").is_err());
        assert!(RunConfig::parse("[measurement]\nshots = \"many\"\n").is_err());
        assert_eq!("ideal".parse::<Shots>(), Ok(Shots::Ideal));
        assert_eq!("12".parse::<Shots>(), Ok(Shots::Count(12)));
        assert!("-3".parse::<Shots>().is_err());
    }

    #[test]
    fn echo_round_trips() {
        let text = "[model]\nk = 2\nbeta0_re = 2.0\n[input]\nkind = \"thermal\"\nnbar = 0.7\n[grid]\ncenter_im = -0.25\n\
                    [measurement]\nshots = 1000\nladder = [1.0, 2.5]\ntable_points = [[0.5, -1.0]]\n";
        let cfg = RunConfig::parse(text).unwrap();
        let echo = cfg.echo();
        assert!(echo.contains("model.k = 2\n"));
        let back = RunConfig::parse(&echo).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.echo(), echo);
    }

    #[test]
    fn oversized_requests_are_rejected_before_allocation() {
        let err = RunConfig::parse("[truncation]\nn_max = 100000000\n[input]\nkind = \"vacuum\"\n").unwrap_err();
        assert!(err.to_string().contains("truncation.n_max"));
        assert!(RunConfig::parse("[scan]\nn_points = 100000000000\n").is_err());
        assert!(RunConfig::parse("[grid]\nn_side = 1\nhalf_extent = nan\n").is_err());
        assert!(RunConfig::parse("[input]\nkind = \"vacuum\"\nalpha_re = inf\n").is_err());
    }

    #[test]
    fn echo_lines_are_sorted() {
        let echo = RunConfig::default().echo();
        let lines: Vec<&str> = echo.lines().collect();
        let mut sorted = lines.clone();
        sorted.sort();
        assert_eq!(lines, sorted);
        assert!(lines.iter().all(|l| l.contains(" = ")));
    }
}
