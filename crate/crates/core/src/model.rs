//! Declarative description of a driven resonator network and its waveguides.
//!
//! Frequencies and rates are angular frequencies in rad·ns⁻¹, times are in ns and
//! temperatures in kelvin. Complex numbers serialise as `[re, im]`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

const HERMITIAN_RTOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const STEP_WARNING: f64 = 0.15;

/// Resonator frequency matrix ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FrequencyMatrix {
    pub dim: usize,
    /// Rows of the N×N matrix.
    pub entries: Vec<Vec<Complex64>>,
}

impl FrequencyMatrix {
    pub fn scalar(omega: f64) -> Self {
        Self {
            dim: 1,
            entries: vec![vec![Complex64::new(omega, 0.0)]],
        }
    }

    /// Row-major copy of the entries.
    pub fn flat(&self) -> Vec<Complex64> {
        self.entries.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", rename_all_fields = "camelCase", deny_unknown_fields)]
pub enum Waveform {
    /// `E₀·exp(i·phase)·exp(−iω_d(t − t₀))`.
    Monochromatic {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Linearly interpolated samples.
    Tabulated {
        times: Vec<f64>,
        values: Vec<Complex64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DrivingSignal {
    /// Index of the driven resonator.
    pub target: usize,
    pub waveform: Waveform,
}

impl DrivingSignal {
    /// Drive amplitude f(t) for a grid starting at `t0`.
    pub fn evaluate(&self, t: f64, t0: f64) -> Result<Complex64> {
        match &self.waveform {
            Waveform::Monochromatic {
                amplitude,
                frequency,
                phase,
            } => Ok(Complex64::from_polar(*amplitude, phase - frequency * (t - t0))),
            Waveform::Tabulated { times, values } => interpolate_complex(times, values, t),
        }
    }
}

fn interpolate_complex(times: &[f64], values: &[Complex64], t: f64) -> Result<Complex64> {
    let (Some(&lo), Some(&hi)) = (times.first(), times.last()) else {
        return Err(Error::Argument("tabulated drive has no samples".into()));
    };
    if !(lo..=hi).contains(&t) || times.len() != values.len() {
        return Err(Error::Range {
            what: "drive time".into(),
            value: t,
            lo,
            hi,
        });
    }
    if times.len() == 1 {
        return Ok(values[0]);
    }
    let k = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1);
    let (t0, t1) = (times[k - 1], times[k]);
    let s = (t - t0) / (t1 - t0);
    Ok(values[k - 1] * (1.0 - s) + values[k] * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DiscreteMode {
    pub coupling: Complex64,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", rename_all_fields = "camelCase", deny_unknown_fields)]
pub enum SpectralDensity {
    /// `J(ω) = η²·sqrt(4ξ² − (ω − ω_α)²)` inside the band, zero outside.
    TightBindingSemicircle {
        center: f64,
        hopping: f64,
        coupling_ratio: f64,
    },
    /// Finite set of waveguide modes.
    DiscreteModes { modes: Vec<DiscreteMode> },
    /// Piecewise-linear density, zero outside the grid.
    Tabulated {
        frequencies: Vec<f64>,
        values: Vec<f64>,
    },
}

impl SpectralDensity {
    /// Pointwise value J(ω).
    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        match self {
            Self::TightBindingSemicircle {
                center,
                hopping,
                coupling_ratio,
            } => {
                let d = (omega - center).abs();
                // Points within rounding distance of the edge count as outside.
                let slack = 4.0 * f64::EPSILON * omega.abs().max(center.abs());
                let gap = 2.0 * hopping - d;
                Ok(if gap > slack {
                    coupling_ratio * coupling_ratio * (gap * (2.0 * hopping + d)).sqrt()
                } else {
                    0.0
                })
            }
            Self::DiscreteModes { .. } => Err(Error::Variant(
                "a discrete mode set has no pointwise spectral density".into(),
            )),
            Self::Tabulated {
                frequencies,
                values,
            } => {
                let (Some(&lo), Some(&hi)) = (frequencies.first(), frequencies.last()) else {
                    return Ok(0.0);
                };
                if omega < lo || omega > hi || frequencies.len() != values.len() {
                    return Ok(0.0);
                }
                let k = frequencies
                    .partition_point(|&x| x <= omega)
                    .clamp(1, frequencies.len() - 1);
                let s = (omega - frequencies[k - 1]) / (frequencies[k] - frequencies[k - 1]);
                Ok(values[k - 1] * (1.0 - s) + values[k] * s)
            }
        }
    }

    /// Closed interval outside which the density vanishes.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Self::TightBindingSemicircle {
                center, hopping, ..
            } => Some((center - 2.0 * hopping, center + 2.0 * hopping)),
            Self::DiscreteModes { modes } => {
                let lo = modes.iter().map(|m| m.frequency).reduce(f64::min)?;
                let hi = modes.iter().map(|m| m.frequency).reduce(f64::max)?;
                Some((lo, hi))
            }
            Self::Tabulated { frequencies, .. } => {
                Some((*frequencies.first()?, *frequencies.last()?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct WaveguideSpec {
    pub label: String,
    /// Coupling vector c_α; the matrix density is `c_i·conj(c_j)·J(ω)`.
    pub coupling: Vec<Complex64>,
    pub spectral: SpectralDensity,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_end: f64,
    pub n_steps: usize,
    pub output_every: usize,
}

impl TimeGrid {
    pub fn step(&self) -> f64 {
        (self.t_end - self.t0) / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.step()
    }

    /// Solver indices written to output: every `output_every`-th step from 0.
    pub fn output_indices(&self) -> Vec<usize> {
        (0..=self.n_steps).step_by(self.output_every.max(1)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NetworkSpec {
    pub frequencies: FrequencyMatrix,
    #[serde(default)]
    pub drives: Vec<DrivingSignal>,
    #[serde(default)]
    pub waveguides: Vec<WaveguideSpec>,
    /// ⟨a(t₀)⟩; omitted means an empty cavity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_field: Option<Vec<Complex64>>,
    /// ρ⁽¹⁾(t₀) rows; omitted means zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_occupation: Option<Vec<Vec<Complex64>>>,
    pub grid: TimeGrid,
}

impl NetworkSpec {
    /// Parses JSON and rejects specs that violate any invariant.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate().into_result()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.frequencies.dim
    }

    pub fn initial_field_vec(&self) -> Vec<Complex64> {
        self.initial_field
            .clone()
            .unwrap_or_else(|| linalg::zeros(self.dim()))
    }

    pub fn initial_occupation_flat(&self) -> Vec<Complex64> {
        match &self.initial_occupation {
            Some(rows) => rows.iter().flatten().copied().collect(),
            None => linalg::zeros(self.dim() * self.dim()),
        }
    }

    /// Total drive vector f(t).
    pub fn drive_vector(&self, t: f64) -> Result<Vec<Complex64>> {
        let mut f = linalg::zeros(self.dim());
        for d in &self.drives {
            f[d.target] += d.evaluate(t, self.grid.t0)?;
        }
        Ok(f)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        let n = self.frequencies.dim;
        self.validate_frequencies(&mut r);
        self.validate_grid(&mut r);
        for (k, d) in self.drives.iter().enumerate() {
            validate_drive(&mut r, k, d, n, &self.grid);
        }
        let mut labels = std::collections::BTreeSet::new();
        for (k, w) in self.waveguides.iter().enumerate() {
            validate_waveguide(&mut r, k, w, n);
            if !labels.insert(w.label.as_str()) {
                r.violation(format!("waveguides[{k}].label"), "duplicate label");
            }
        }
        self.validate_initial_state(&mut r);
        r
    }

    #[allow(clippy::needless_range_loop)]
    fn validate_frequencies(&self, r: &mut ValidationReport) {
        let n = self.frequencies.dim;
        let rows = &self.frequencies.entries;
        if n == 0 {
            r.violation("frequencies.dim", "must be at least 1");
            return;
        }
        if rows.len() != n || rows.iter().any(|row| row.len() != n) {
            r.violation("frequencies.entries", format!("must be a {n}x{n} matrix"));
            return;
        }
        let scale = rows.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..n {
                let z = rows[i][j];
                if !is_finite(z) {
                    r.violation(format!("frequencies.entries[{i}][{j}]"), "not finite");
                } else if (z - rows[j][i].conj()).norm() > HERMITIAN_RTOL * scale {
                    r.violation(
                        format!("frequencies.entries[{i}][{j}]"),
                        "matrix is not Hermitian",
                    );
                }
            }
            if rows[i][i].re <= 0.0 {
                r.violation(
                    format!("frequencies.entries[{i}][{i}]"),
                    "diagonal entry must be positive",
                );
            }
        }
        if self.grid.n_steps > 0 && self.grid.t_end > self.grid.t0 {
            let omega_max = (0..n)
                .map(|i| rows[i].iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max);
            let hw = self.grid.step() * omega_max;
            if hw > STEP_WARNING {
                r.warning(
                    "grid.nSteps",
                    format!("h·ω_max = {hw:.3} exceeds {STEP_WARNING}; the carrier is under-resolved"),
                );
            }
        }
    }

    fn validate_grid(&self, r: &mut ValidationReport) {
        let g = &self.grid;
        if !(g.t0.is_finite() && g.t_end.is_finite()) || g.t_end <= g.t0 {
            r.violation("grid.tEnd", "must be finite and greater than t0");
        }
        if g.n_steps == 0 {
            r.violation("grid.nSteps", "must be positive");
        }
        if g.output_every == 0 {
            r.violation("grid.outputEvery", "must be positive");
        }
    }

    fn validate_initial_state(&self, r: &mut ValidationReport) {
        let n = self.frequencies.dim;
        if let Some(a) = &self.initial_field {
            if a.len() != n {
                r.violation("initialField", format!("expected {n} entries"));
                return;
            }
            if !a.iter().all(|z| is_finite(*z)) {
                r.violation("initialField", "not finite");
                return;
            }
        }
        if let Some(rows) = &self.initial_occupation {
            if rows.len() != n || rows.iter().any(|row| row.len() != n) {
                r.violation("initialOccupation", format!("must be a {n}x{n} matrix"));
                return;
            }
            if !rows.iter().flatten().all(|z| is_finite(*z)) {
                r.violation("initialOccupation", "not finite");
                return;
            }
        }
        if n == 0 {
            return;
        }
        let rho = self.initial_occupation_flat();
        let scale = linalg::max_abs(&rho).max(1.0);
        if linalg::hermitian_defect(&rho, n) > HERMITIAN_RTOL * scale {
            r.violation("initialOccupation", "matrix is not Hermitian");
            return;
        }
        if linalg::hermitian_eigenvalues(&rho, n)[0] < -PSD_TOL * scale {
            r.violation("initialOccupation", "matrix is not positive semidefinite");
            return;
        }
        let a = self.initial_field_vec();
        let aa = linalg::mul(&a, &linalg::adjoint(&a, n, 1), n, 1, n);
        let fluct = linalg::sub(&rho, &aa);
        if linalg::hermitian_eigenvalues(&fluct, n)[0] < -PSD_TOL * scale {
            r.violation(
                "initialOccupation",
                "occupation minus the coherent part ⟨a⟩⟨a⟩† is not positive semidefinite",
            );
        }
    }
}

fn validate_drive(r: &mut ValidationReport, k: usize, d: &DrivingSignal, n: usize, grid: &TimeGrid) {
    let at = |field: &str| format!("drives[{k}].{field}");
    if d.target >= n {
        r.violation(at("target"), format!("resonator index must be below {n}"));
    }
    match &d.waveform {
        Waveform::Monochromatic {
            amplitude,
            frequency,
            phase,
        } => {
            if !(amplitude.is_finite() && *amplitude >= 0.0) {
                r.violation(at("waveform.amplitude"), "must be finite and non-negative");
            }
            if !frequency.is_finite() || !phase.is_finite() {
                r.violation(at("waveform"), "frequency and phase must be finite");
            }
        }
        Waveform::Tabulated { times, values } => {
            if times.len() < 2 || times.len() != values.len() {
                r.violation(
                    at("waveform"),
                    "needs at least two samples and equal numbers of times and values",
                );
            } else if !strictly_increasing(times) {
                r.violation(at("waveform.times"), "must be finite and strictly increasing");
            } else if times[0] > grid.t0 || times[times.len() - 1] < grid.t_end {
                r.violation(at("waveform.times"), "must cover the simulation window");
            }
            if !values.iter().all(|z| is_finite(*z)) {
                r.violation(at("waveform.values"), "not finite");
            }
        }
    }
}

fn validate_waveguide(r: &mut ValidationReport, k: usize, w: &WaveguideSpec, n: usize) {
    let at = |field: &str| format!("waveguides[{k}].{field}");
    if w.label.is_empty() || w.label.contains([',', '"', '\n', '\r']) {
        r.violation(at("label"), "must be non-empty and free of commas, quotes and newlines");
    }
    if w.coupling.len() != n {
        r.violation(at("coupling"), format!("expected {n} entries"));
    } else if !w.coupling.iter().all(|z| is_finite(*z)) {
        r.violation(at("coupling"), "not finite");
    }
    if !(w.temperature.is_finite() && w.temperature >= 0.0) {
        r.violation(at("temperature"), "must be finite and non-negative");
    }
    let thermal = w.temperature > 0.0;
    match &w.spectral {
        SpectralDensity::TightBindingSemicircle {
            center,
            hopping,
            coupling_ratio,
        } => {
            if !center.is_finite() {
                r.violation(at("spectral.center"), "not finite");
            }
            if !(hopping.is_finite() && *hopping > 0.0) {
                r.violation(at("spectral.hopping"), "must be positive");
            }
            if !(coupling_ratio.is_finite() && *coupling_ratio >= 0.0) {
                r.violation(at("spectral.couplingRatio"), "must be non-negative");
            }
            if thermal && center - 2.0 * hopping <= 0.0 {
                r.violation(at("spectral"), "band must lie at positive frequency when T > 0");
            }
        }
        SpectralDensity::DiscreteModes { modes } => {
            for (m, mode) in modes.iter().enumerate() {
                if !is_finite(mode.coupling) || !mode.frequency.is_finite() {
                    r.violation(at(&format!("spectral.modes[{m}]")), "not finite");
                } else if thermal && mode.frequency <= 0.0 {
                    r.violation(
                        at(&format!("spectral.modes[{m}].frequency")),
                        "must be positive when T > 0",
                    );
                }
            }
        }
        SpectralDensity::Tabulated {
            frequencies,
            values,
        } => {
            if frequencies.len() < 2 || frequencies.len() != values.len() {
                r.violation(
                    at("spectral"),
                    "needs at least two samples and equal numbers of frequencies and values",
                );
            } else if !strictly_increasing(frequencies) {
                r.violation(at("spectral.frequencies"), "must be finite and strictly increasing");
            } else {
                if !values.iter().all(|v| v.is_finite() && *v >= 0.0) {
                    r.violation(at("spectral.values"), "must be finite and non-negative");
                }
                if values[0] != 0.0 || values[values.len() - 1] != 0.0 {
                    r.violation(
                        at("spectral.values"),
                        "grid must cover the band: first and last values must be zero",
                    );
                }
                if thermal
                    && frequencies
                        .iter()
                        .zip(values)
                        .any(|(f, v)| *v > 0.0 && *f <= 0.0)
                {
                    r.violation(at("spectral"), "band must lie at positive frequency when T > 0");
                }
            }
        }
    }
}

fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite()) && xs.windows(2).all(|w| w[0] < w[1])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub location: String,
    pub message: String,
}

/// Outcome of [`NetworkSpec::validate`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<Vec<Issue>> {
        if self.passed() {
            Ok(self.warnings)
        } else {
            Err(Error::Validation(self))
        }
    }

    fn violation(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Issue {
            location: location.into(),
            message: message.into(),
        });
    }

    fn warning(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Issue {
            location: location.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  error: {}: {}", v.location, v.message)?;
        }
        for w in &self.warnings {
            writeln!(f, "  warning: {}: {}", w.location, w.message)?;
        }
        Ok(())
    }
}
