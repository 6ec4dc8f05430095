//! Built-in two-waveguide scenario: a single cavity side-coupled to two coupled-resonator
//! waveguides with bands centred below and above the cavity frequency.

use photonet::model::{DrivingSignal, FrequencyMatrix, NetworkSpec, SpectralDensity, TimeGrid, WaveguideSpec, Waveform};
use photonet::Complex64;

use crate::config::{DumpOptions, Method, RunConfig, SweepAxis, SweepParameter};

pub const CAVITY: f64 = 10.0;
pub const BAND_LOW: f64 = 9.5;
pub const BAND_HIGH: f64 = 10.5;
pub const HOPPING: f64 = 0.3;
pub const DRIVE_AMPLITUDE: f64 = 10.0;
pub const COUPLING_RATIOS: [f64; 3] = [0.5, 1.0, 2.0];
pub const DRIVE_FREQUENCIES: [f64; 3] = [BAND_LOW, CAVITY, BAND_HIGH];
pub const TEMPERATURES: [f64; 2] = [0.005, 5.0];

/// Two-waveguide network with a monochromatic drive on the cavity.
pub fn two_crow(coupling_ratio: f64, drive_frequency: f64, temperature: f64, grid: TimeGrid) -> NetworkSpec {
    let guide = |label: &str, center: f64| WaveguideSpec {
        label: label.into(),
        coupling: vec![Complex64::new(1.0, 0.0)],
        spectral: SpectralDensity::TightBindingSemicircle {
            center,
            hopping: HOPPING,
            coupling_ratio,
        },
        temperature,
    };
    NetworkSpec {
        frequencies: FrequencyMatrix::scalar(CAVITY),
        drives: vec![DrivingSignal {
            target: 0,
            waveform: Waveform::Monochromatic {
                amplitude: DRIVE_AMPLITUDE,
                frequency: drive_frequency,
                phase: 0.0,
            },
        }],
        waveguides: vec![guide("crow1", BAND_LOW), guide("crow2", BAND_HIGH)],
        initial_field: None,
        initial_occupation: None,
        grid,
    }
}

#[derive(Debug, Clone)]
pub struct TwoCrowOptions {
    pub t_end: f64,
    pub n_steps: usize,
    pub output_every: usize,
    pub coupling_ratios: Vec<f64>,
    pub drive_frequencies: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub methods: Vec<Method>,
    pub emit_plots: bool,
}

impl Default for TwoCrowOptions {
    fn default() -> Self {
        Self {
            t_end: 40.0,
            n_steps: 8000,
            output_every: 4,
            coupling_ratios: COUPLING_RATIOS.to_vec(),
            drive_frequencies: DRIVE_FREQUENCIES.to_vec(),
            temperatures: TEMPERATURES.to_vec(),
            methods: vec![Method::Exact],
            emit_plots: false,
        }
    }
}

impl TwoCrowOptions {
    pub fn config(&self, output_dir: std::path::PathBuf) -> RunConfig {
        let grid = TimeGrid {
            t0: 0.0,
            t_end: self.t_end,
            n_steps: self.n_steps,
            output_every: self.output_every,
        };
        let axis = |parameter, values: &[f64]| SweepAxis {
            parameter,
            values: values.to_vec(),
        };
        RunConfig {
            spec: Some(two_crow(
                self.coupling_ratios[0],
                self.drive_frequencies[0],
                self.temperatures[0],
                grid,
            )),
            spec_path: None,
            methods: self.methods.clone(),
            sweep: vec![
                axis(SweepParameter::CouplingRatio, &self.coupling_ratios),
                axis(SweepParameter::DriveFrequency, &self.drive_frequencies),
                axis(SweepParameter::Temperature, &self.temperatures),
            ],
            output_dir,
            emit_plots: self.emit_plots,
            dump: DumpOptions::default(),
        }
    }
}
