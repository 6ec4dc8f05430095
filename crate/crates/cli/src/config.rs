//! Run configuration and parameter sweeps.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use photonet::model::{NetworkSpec, SpectralDensity, Waveform};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Method {
    Exact,
    Bm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Bm => "bm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SweepParameter {
    /// η of every tight-binding waveguide.
    CouplingRatio,
    /// Frequency of every monochromatic drive.
    DriveFrequency,
    /// Temperature of every waveguide.
    Temperature,
    /// Amplitude of every monochromatic drive.
    DriveAmplitude,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::CouplingRatio => "couplingRatio",
            SweepParameter::DriveFrequency => "driveFrequency",
            SweepParameter::Temperature => "temperature",
            SweepParameter::DriveAmplitude => "driveAmplitude",
        }
    }

    /// Number of spec fields this parameter overrides.
    fn targets(self, spec: &NetworkSpec) -> usize {
        let monochromatic = spec
            .drives
            .iter()
            .filter(|d| matches!(d.waveform, Waveform::Monochromatic { .. }))
            .count();
        match self {
            SweepParameter::CouplingRatio => spec
                .waveguides
                .iter()
                .filter(|w| matches!(w.spectral, SpectralDensity::TightBindingSemicircle { .. }))
                .count(),
            SweepParameter::DriveFrequency | SweepParameter::DriveAmplitude => monochromatic,
            SweepParameter::Temperature => spec.waveguides.len(),
        }
    }

    pub fn apply(self, spec: &mut NetworkSpec, value: f64) {
        match self {
            SweepParameter::CouplingRatio => {
                for w in &mut spec.waveguides {
                    if let SpectralDensity::TightBindingSemicircle { coupling_ratio, .. } = &mut w.spectral {
                        *coupling_ratio = value;
                    }
                }
            }
            SweepParameter::Temperature => {
                for w in &mut spec.waveguides {
                    w.temperature = value;
                }
            }
            SweepParameter::DriveFrequency | SweepParameter::DriveAmplitude => {
                for d in &mut spec.drives {
                    if let Waveform::Monochromatic {
                        amplitude,
                        frequency,
                        ..
                    } = &mut d.waveform
                    {
                        if self == SweepParameter::DriveFrequency {
                            *frequency = value;
                        } else {
                            *amplitude = value;
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DumpOptions {
    #[serde(default)]
    pub kernels: bool,
    #[serde(default)]
    pub propagators: bool,
    #[serde(default)]
    pub coefficients: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    /// Inline network; exclusive with `specPath`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<NetworkSpec>,
    /// Network file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_path: Option<PathBuf>,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit_plots: bool,
    #[serde(default)]
    pub dump: DumpOptions,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("photonet-out")
}

/// A fully resolved run: base network, methods and expanded sweep points.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub methods: Vec<Method>,
    pub points: Vec<SweepPoint>,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
    pub dump: DumpOptions,
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    pub parameters: Vec<(SweepParameter, f64)>,
    pub spec: NetworkSpec,
}

impl SweepPoint {
    pub fn describe(&self) -> String {
        if self.parameters.is_empty() {
            return format!("point {} (base spec)", self.index);
        }
        let params: Vec<String> = self
            .parameters
            .iter()
            .map(|(p, v)| format!("{}={v}", p.name()))
            .collect();
        format!("point {} ({})", self.index, params.join(", "))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid run config")
    }

    /// Reads a config file; `spec_path` is resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config = Self::from_json(&text)?;
        if let Some(p) = &config.spec_path {
            if p.is_relative() {
                config.spec_path = Some(path.parent().unwrap_or(Path::new(".")).join(p));
            }
        }
        Ok(config)
    }

    /// Checks invariants, loads the network and expands the sweep.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        if self.methods.is_empty() {
            bail!("`methods` must name at least one of exact, bm");
        }
        let methods: Vec<Method> = self.methods.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let base = match (&self.spec, &self.spec_path) {
            (Some(s), None) => s.clone(),
            (None, Some(p)) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            (Some(_), Some(_)) => bail!("give either `spec` or `specPath`, not both"),
            (None, None) => bail!("missing `spec` or `specPath`"),
        };
        let mut seen = BTreeSet::new();
        for axis in &self.sweep {
            if !seen.insert(axis.parameter.name()) {
                bail!("sweep axis `{}` appears twice", axis.parameter.name());
            }
            if axis.values.is_empty() {
                bail!("sweep axis `{}` has no values", axis.parameter.name());
            }
            if let Some(v) = axis.values.iter().find(|v| !v.is_finite()) {
                bail!("sweep axis `{}` has non-finite value {v}", axis.parameter.name());
            }
            if axis.parameter.targets(&base) == 0 {
                bail!(
                    "sweep axis `{}` does not match any field of the network",
                    axis.parameter.name()
                );
            }
        }
        let points = expand(&base, &self.sweep);
        for p in &points {
            let report = p.spec.validate();
            if !report.passed() {
                bail!("{} fails validation:\n{report}", p.describe());
            }
        }
        Ok(ResolvedConfig {
            methods,
            points,
            output_dir: self.output_dir.clone(),
            emit_plots: self.emit_plots,
            dump: self.dump.clone(),
        })
    }
}

/// Cartesian product of the axes, first axis slowest.
pub fn expand(base: &NetworkSpec, axes: &[SweepAxis]) -> Vec<SweepPoint> {
    let mut combos: Vec<Vec<(SweepParameter, f64)>> = vec![Vec::new()];
    for axis in axes {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                axis.values.iter().map(move |v| {
                    let mut next = c.clone();
                    next.push((axis.parameter, *v));
                    next
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .enumerate()
        .map(|(index, parameters)| {
            let mut spec = base.clone();
            for (p, v) in &parameters {
                p.apply(&mut spec, *v);
            }
            SweepPoint {
                index,
                parameters,
                spec,
            }
        })
        .collect()
}
