//! Closed-form weak-coupling (Born–Markov) solutions for a single driven cavity.
//!
//! Scope: one resonator, any number of waveguides, an empty initial cavity and at most one
//! monochromatic drive.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::model::{NetworkSpec, SpectralDensity, Waveform};
use crate::quadrature::{integrate_real, Tolerance};
use crate::special::bose_occupation;
use crate::trace::TraceTable;
use crate::transport::{fill_continuity, TransportTrace};
use crate::{Error, Result};

/// Decay rate over band width above which the weak-coupling picture is doubtful.
pub const VALIDITY_RATIO: f64 = 0.25;

const RICHARDSON_LEVELS: usize = 5;

/// Principal value `P∫ J(ω)/(ω₀ − ω) dω/2π`.
///
/// Smooth densities use symmetric excision of the pole followed by Richardson extrapolation
/// in the excision half-width; piecewise-linear tables are integrated exactly.
pub fn principal_value_shift(s: &SpectralDensity, w0: f64) -> Result<f64> {
    match s {
        SpectralDensity::TightBindingSemicircle { .. } => {
            let (a, b) = s.support().expect("semicircle has a support");
            let tol = Tolerance {
                absolute: 1e-13,
                max_intervals: 20_000,
            };
            let integrand = |w: f64| s.evaluate(w).unwrap_or(0.0) / (w0 - w);
            let quad = |lo: f64, hi: f64| {
                integrate_real(integrand, lo, hi, 8, tol).map_err(|source| Error::Quadrature {
                    channel: String::new(),
                    source,
                })
            };
            let gap = (w0 - a).min(b - w0);
            if gap <= 0.0 {
                return Ok(quad(a, b)? / (2.0 * PI));
            }
            // I(ε) = I₀ + c₁ε + c₃ε³ + …: eliminate odd powers with ratio-2 steps.
            let mut table = Vec::with_capacity(RICHARDSON_LEVELS);
            for level in 0..RICHARDSON_LEVELS {
                let eps = gap / 4.0 / f64::powi(2.0, level as i32);
                table.push(quad(a, w0 - eps)? + quad(w0 + eps, b)?);
            }
            for order in 0..RICHARDSON_LEVELS - 1 {
                let factor = f64::powi(2.0, 2 * order as i32 + 1);
                for k in 0..RICHARDSON_LEVELS - 1 - order {
                    table[k] = (factor * table[k + 1] - table[k]) / (factor - 1.0);
                }
            }
            Ok(table[0] / (2.0 * PI))
        }
        SpectralDensity::Tabulated {
            frequencies,
            values,
        } => {
            let mut total = 0.0;
            for k in 0..frequencies.len().saturating_sub(1) {
                let (f0, f1) = (frequencies[k], frequencies[k + 1]);
                let slope = (values[k + 1] - values[k]) / (f1 - f0);
                let at_pole = values[k] + slope * (w0 - f0);
                // ∫(J(w0) − slope·(w0 − ω))/(w0 − ω) over the segment.
                let (d0, d1) = ((w0 - f0).abs(), (w0 - f1).abs());
                let log = if at_pole == 0.0 { 0.0 } else { (d0 / d1).ln() };
                total += at_pole * log - slope * (f1 - f0);
            }
            Ok(total / (2.0 * PI))
        }
        SpectralDensity::DiscreteModes { .. } => Err(Error::Unsupported(
            "Born–Markov rates need a continuous spectral density".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParameters {
    pub label: String,
    /// δω_α at the cavity frequency.
    pub shift: f64,
    /// κ_α = J_α(ω_c)/2.
    pub rate: f64,
    /// δω̃_α at the drive frequency.
    pub drive_shift: f64,
    /// κ̃_α = J_α(ω_d)/2.
    pub drive_rate: f64,
    /// J_α(ω′_c)·n_α(ω′_c).
    pub thermal_weight: f64,
    pub band_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BmDrive {
    None,
    Monochromatic { amplitude: f64, frequency: f64, phase: f64 },
    Unsupported,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BmParameters {
    pub t0: f64,
    pub cavity: f64,
    pub drive: BmDrive,
    pub channels: Vec<ChannelParameters>,
    /// ω′_c = ω_c + Σδω_α.
    pub cavity_shifted: f64,
    /// κ = Σκ_α.
    pub kappa: f64,
    /// ω̃_c = ω_c + Σδω̃_α.
    pub drive_cavity: f64,
    /// κ̃ = Σκ̃_α.
    pub drive_kappa: f64,
    /// n̄(ω′_c, T); zero when κ = 0.
    pub mean_occupation: f64,
    /// φ = atan2(κ̃, ω_d − ω̃_c).
    pub phase: f64,
    /// E₀′ = E₀/sqrt((ω_d − ω̃_c)² + κ̃²).
    pub amplitude: f64,
}

pub fn bm_parameters(spec: &NetworkSpec) -> Result<BmParameters> {
    if spec.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "Born–Markov solutions need a single resonator, got {}",
            spec.dim()
        )));
    }
    let cavity = spec.frequencies.entries[0][0].re;
    let drive = match spec.drives.as_slice() {
        [] => BmDrive::None,
        [d] => match d.waveform {
            Waveform::Monochromatic {
                amplitude,
                frequency,
                phase,
            } => BmDrive::Monochromatic {
                amplitude,
                frequency,
                phase,
            },
            Waveform::Tabulated { .. } => BmDrive::Unsupported,
        },
        _ => BmDrive::Unsupported,
    };
    let drive_frequency = match drive {
        BmDrive::Monochromatic { frequency, .. } => frequency,
        _ => cavity,
    };
    let mut channels = Vec::with_capacity(spec.waveguides.len());
    for w in &spec.waveguides {
        let weight = w.coupling[0].norm_sqr();
        let label_error = |e: Error| match e {
            Error::Quadrature { source, .. } => Error::Quadrature {
                channel: w.label.clone(),
                source,
            },
            other => other,
        };
        let (lo, hi) = w.spectral.support().unwrap_or((0.0, 0.0));
        channels.push(ChannelParameters {
            label: w.label.clone(),
            shift: weight * principal_value_shift(&w.spectral, cavity).map_err(label_error)?,
            rate: weight * w.spectral.evaluate(cavity)? / 2.0,
            drive_shift: weight * principal_value_shift(&w.spectral, drive_frequency).map_err(label_error)?,
            drive_rate: weight * w.spectral.evaluate(drive_frequency)? / 2.0,
            thermal_weight: 0.0,
            band_width: hi - lo,
        });
    }
    let cavity_shifted = cavity + channels.iter().map(|c| c.shift).sum::<f64>();
    let kappa: f64 = channels.iter().map(|c| c.rate).sum();
    let drive_cavity = cavity + channels.iter().map(|c| c.drive_shift).sum::<f64>();
    let drive_kappa: f64 = channels.iter().map(|c| c.drive_rate).sum();
    for (c, w) in channels.iter_mut().zip(&spec.waveguides) {
        c.thermal_weight = w.coupling[0].norm_sqr()
            * w.spectral.evaluate(cavity_shifted)?
            * bose_occupation(cavity_shifted, w.temperature);
    }
    let mean_occupation = if kappa > 0.0 {
        channels.iter().map(|c| c.thermal_weight).sum::<f64>() / (2.0 * kappa)
    } else {
        0.0
    };
    let detuning = drive_frequency - drive_cavity;
    let e0 = match drive {
        BmDrive::Monochromatic { amplitude, .. } => amplitude,
        _ => 0.0,
    };
    Ok(BmParameters {
        t0: spec.grid.t0,
        cavity,
        drive,
        channels,
        cavity_shifted,
        kappa,
        drive_cavity,
        drive_kappa,
        mean_occupation,
        phase: drive_kappa.atan2(detuning),
        amplitude: e0 / detuning.hypot(drive_kappa),
    })
}

impl BmParameters {
    /// Warning text when the decay rate is not small against the narrowest band.
    pub fn validity_warning(&self) -> Option<String> {
        let width = self
            .channels
            .iter()
            .map(|c| c.band_width)
            .filter(|w| *w > 0.0)
            .fold(f64::INFINITY, f64::min);
        let ratio = self.kappa / width;
        (width.is_finite() && ratio > VALIDITY_RATIO).then(|| {
            format!(
                "Born–Markov solution is outside its validity regime: κ = {:.4} is {:.2} of the narrowest band width",
                self.kappa, ratio
            )
        })
    }

    fn drive_parameters(&self) -> Result<(f64, f64)> {
        match self.drive {
            BmDrive::None => Ok((0.0, self.cavity)),
            BmDrive::Monochromatic {
                frequency, phase, ..
            } => Ok((phase, frequency)),
            BmDrive::Unsupported => Err(Error::Unsupported(
                "Born–Markov solutions need a single monochromatic drive".into(),
            )),
        }
    }
}

/// `u(t, t₀) ≈ exp(−(iω′_c + κ)(t − t₀))`.
pub fn bm_propagator(p: &BmParameters, t: f64) -> Complex64 {
    let s = t - p.t0;
    Complex64::from_polar((-p.kappa * s).exp(), -p.cavity_shifted * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmObservables {
    pub field: Complex64,
    pub photon_number: f64,
    pub v: f64,
}

pub fn bm_observables(p: &BmParameters, t: f64) -> Result<BmObservables> {
    let (drive_phase, wd) = p.drive_parameters()?;
    let s = t - p.t0;
    let b = Complex64::from_polar(p.amplitude, drive_phase - p.phase);
    let field = b * (Complex64::from_polar(1.0, -wd * s) - bm_propagator(p, t));
    let decay = (-p.kappa * s).exp();
    let v = p.mean_occupation * (1.0 - decay * decay);
    let photon_number = v
        + p.amplitude * p.amplitude
            * (1.0 + decay * decay - 2.0 * decay * ((wd - p.cavity_shifted) * s).cos());
    Ok(BmObservables {
        field,
        photon_number,
        v,
    })
}

/// Exact time derivative of the photon number.
pub fn bm_photon_rate(p: &BmParameters, t: f64) -> Result<f64> {
    let (_, wd) = p.drive_parameters()?;
    let s = t - p.t0;
    let decay = (-p.kappa * s).exp();
    let delta = wd - p.cavity_shifted;
    Ok(2.0 * p.kappa * p.mean_occupation * decay * decay
        + p.amplitude * p.amplitude
            * 2.0
            * (-p.kappa * decay * decay + decay * (p.kappa * (delta * s).cos() + delta * (delta * s).sin())))
}

/// Photocurrent into every waveguide.
pub fn bm_photocurrent(p: &BmParameters, t: f64) -> Result<Vec<f64>> {
    let (_, wd) = p.drive_parameters()?;
    let s = t - p.t0;
    let decay = (-p.kappa * s).exp();
    let (sin, cos) = ((wd - p.cavity_shifted) * s).sin_cos();
    let a2 = p.amplitude * p.amplitude;
    Ok(p.channels
        .iter()
        .map(|c| {
            -2.0 * c.rate * p.mean_occupation * decay * decay
                + 2.0 * a2
                    * (c.drive_rate + c.rate * decay * decay - (c.rate + c.drive_rate) * decay * cos
                        + (c.shift - c.drive_shift) * decay * sin)
        })
        .collect())
}

/// Drive source `S = 2·Im f⟨a⟩*` in closed form.
pub fn bm_source(p: &BmParameters, t: f64) -> Result<f64> {
    let (_, wd) = p.drive_parameters()?;
    let s = t - p.t0;
    let decay = (-p.kappa * s).exp();
    let (sin, cos) = ((wd - p.cavity_shifted) * s).sin_cos();
    let a2 = p.amplitude * p.amplitude;
    Ok(2.0 * a2 * (p.drive_kappa * (1.0 - decay * cos) + (wd - p.drive_cavity) * decay * sin))
}

/// Born–Markov observables on the output grid of `spec`.
pub fn bm_trace(spec: &NetworkSpec) -> Result<TransportTrace> {
    let p = bm_parameters(spec)?;
    let empty = spec.initial_field_vec().iter().all(|z| z.norm() == 0.0)
        && spec.initial_occupation_flat().iter().all(|z| z.norm() == 0.0);
    if !empty {
        return Err(Error::Unsupported(
            "Born–Markov solutions assume an initially empty cavity".into(),
        ));
    }
    let m = p.channels.len();
    let mut tr = TransportTrace {
        dim: 1,
        labels: p.channels.iter().map(|c| c.label.clone()).collect(),
        times: Vec::new(),
        field: Vec::new(),
        occupation: Vec::new(),
        v_diag: Vec::new(),
        photon_numbers: Vec::new(),
        currents: Vec::new(),
        current_matrices: Vec::new(),
        source: Vec::new(),
        total_number: Vec::new(),
        residual: Vec::new(),
        one_sided: Vec::new(),
    };
    for k in spec.grid.output_indices() {
        let t = spec.grid.time(k);
        let obs = bm_observables(&p, t)?;
        let currents = bm_photocurrent(&p, t)?;
        tr.times.push(t);
        tr.field.push(obs.field);
        tr.occupation.push(Complex64::new(obs.photon_number, 0.0));
        tr.v_diag.push(Complex64::new(obs.v, 0.0));
        tr.photon_numbers.push(obs.photon_number);
        tr.total_number.push(obs.photon_number);
        tr.source.push(bm_source(&p, t)?);
        tr.current_matrices.extend(currents.iter().map(|i| Complex64::new(*i, 0.0)));
        tr.currents.extend(currents);
    }
    let spacing = spec.grid.step() * spec.grid.output_every as f64;
    fill_continuity(&mut tr.residual, &mut tr.one_sided, &tr.total_number, &tr.source, &tr.currents, m, spacing);
    Ok(tr)
}

/// Born–Markov trace table with `method = bm`.
pub fn bm_table(spec: &NetworkSpec) -> Result<TraceTable> {
    Ok(bm_trace(spec)?.to_table("bm"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DrivingSignal, FrequencyMatrix, TimeGrid, WaveguideSpec};
    use proptest::prelude::*;

    fn semicircle(center: f64, eta: f64) -> SpectralDensity {
        SpectralDensity::TightBindingSemicircle {
            center,
            hopping: 0.3,
            coupling_ratio: eta,
        }
    }

    fn closed_form_shift(w0: f64, center: f64, xi: f64, eta: f64) -> f64 {
        let z = w0 - center;
        if z.abs() <= 2.0 * xi {
            eta * eta * z / 2.0
        } else {
            eta * eta / 2.0 * (z - z.signum() * (z * z - 4.0 * xi * xi).sqrt())
        }
    }

    fn two_crow(eta: f64, wd: f64, temperature: f64) -> NetworkSpec {
        let guide = |label: &str, center: f64| WaveguideSpec {
            label: label.into(),
            coupling: vec![Complex64::new(1.0, 0.0)],
            spectral: semicircle(center, eta),
            temperature,
        };
        NetworkSpec {
            frequencies: FrequencyMatrix::scalar(10.0),
            drives: vec![DrivingSignal {
                target: 0,
                waveform: Waveform::Monochromatic {
                    amplitude: 10.0,
                    frequency: wd,
                    phase: 0.0,
                },
            }],
            waveguides: vec![guide("crow1", 9.5), guide("crow2", 10.5)],
            initial_field: None,
            initial_occupation: None,
            grid: TimeGrid {
                t0: 0.0,
                t_end: 40.0,
                n_steps: 4000,
                output_every: 4,
            },
        }
    }

    #[test]
    fn principal_value_matches_hilbert_transform() {
        for w0 in [10.0, 9.55, 9.21, 10.55, 10.61, 11.2, 8.0] {
            let got = principal_value_shift(&semicircle(10.0, 0.7), w0).unwrap();
            let expected = closed_form_shift(w0, 10.0, 0.3, 0.7);
            assert!((got - expected).abs() < 1e-9, "w0={w0}: {got} vs {expected}");
        }
        assert!(principal_value_shift(&semicircle(10.0, 1.0), 10.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn tabulated_principal_value_matches_semicircle_limit() {
        let fine: Vec<f64> = (0..=4000).map(|k| 9.4 + 1.2 * k as f64 / 4000.0).collect();
        let s = SpectralDensity::Tabulated {
            values: fine.iter().map(|w| semicircle(10.0, 1.0).evaluate(*w).unwrap()).collect(),
            frequencies: fine,
        };
        let got = principal_value_shift(&s, 10.13).unwrap();
        assert!((got - closed_form_shift(10.13, 10.0, 0.3, 1.0)).abs() < 1e-4);
    }

    #[test]
    fn two_crow_parameters() {
        let p = bm_parameters(&two_crow(1.0, 9.5, 5.0)).unwrap();
        assert!((p.channels[0].shift - 0.25).abs() < 1e-9);
        assert!((p.channels[1].shift + 0.25).abs() < 1e-9);
        assert!((p.cavity_shifted - 10.0).abs() < 1e-9);
        assert!((p.channels[0].rate - 0.11f64.sqrt() / 2.0).abs() < 1e-14);
        assert!((p.kappa - 0.11f64.sqrt()).abs() < 1e-14);
        assert!((p.channels[0].drive_rate - 0.3).abs() < 1e-14);
        assert_eq!(p.channels[1].drive_rate, 0.0);
        assert!((p.channels[1].drive_shift + 0.1).abs() < 1e-9);
        assert!((p.phase - p.drive_kappa.atan2(9.5 - p.drive_cavity)).abs() < 1e-15);
        let outside = bm_parameters(&two_crow(1.0, 11.2, 5.0)).unwrap();
        assert_eq!(outside.drive_kappa, 0.0);
        let mut many = two_crow(1.0, 9.5, 5.0);
        many.frequencies = FrequencyMatrix {
            dim: 2,
            entries: vec![vec![Complex64::new(10.0, 0.0); 2]; 2],
        };
        assert!(matches!(bm_parameters(&many), Err(Error::Unsupported(_))));
    }

    #[test]
    fn kappa_scales_with_eta_squared() {
        let a = bm_parameters(&two_crow(1.0, 9.5, 5.0)).unwrap();
        let b = bm_parameters(&two_crow(0.5, 9.5, 5.0)).unwrap();
        for (x, y) in a.channels.iter().zip(&b.channels) {
            assert_eq!(x.rate, 4.0 * y.rate);
        }
    }

    #[test]
    fn propagator_and_limits() {
        let p = bm_parameters(&two_crow(0.5, 10.0, 0.0)).unwrap();
        assert_eq!(bm_propagator(&p, 0.0), Complex64::new(1.0, 0.0));
        assert!((bm_propagator(&p, 7.0).norm() - (-p.kappa * 7.0).exp()).abs() < 1e-15);
        let start = bm_observables(&p, 0.0).unwrap();
        assert_eq!(start.photon_number, 0.0);
        assert!(start.field.norm() < 1e-15);
        for t in [0.5, 3.0, 20.0] {
            let o = bm_observables(&p, t).unwrap();
            assert_eq!(o.v, 0.0);
            assert!((o.photon_number - o.field.norm_sqr()).abs() < 1e-9 * o.photon_number);
        }
        let hot = bm_parameters(&two_crow(0.5, 9.5, 5.0)).unwrap();
        let late = bm_observables(&hot, 1e4).unwrap();
        let steady = hot.mean_occupation + hot.amplitude * hot.amplitude;
        assert!((late.photon_number - steady).abs() < 1e-9 * steady);
        let currents = bm_photocurrent(&hot, 1e4).unwrap();
        for (c, i) in hot.channels.iter().zip(currents) {
            let expected = 2.0 * 100.0 * c.drive_rate
                / ((hot.drive_cavity - 9.5).powi(2) + hot.drive_kappa.powi(2));
            assert!((i - expected).abs() < 1e-9 * expected.max(1.0));
        }
        let mut undriven = two_crow(0.5, 9.5, 5.0);
        undriven.drives.clear();
        let cold_start = bm_parameters(&undriven).unwrap();
        let i0 = bm_photocurrent(&cold_start, 0.0).unwrap();
        for (c, i) in cold_start.channels.iter().zip(i0) {
            assert!((i + 2.0 * c.rate * cold_start.mean_occupation).abs() < 1e-12);
        }
    }

    #[test]
    fn validity_warning_for_strong_coupling() {
        assert!(bm_parameters(&two_crow(0.5, 9.5, 5.0)).unwrap().validity_warning().is_none());
        assert!(bm_parameters(&two_crow(2.0, 9.5, 5.0)).unwrap().validity_warning().is_some());
    }

    #[test]
    fn unsupported_drives_and_states() {
        let mut spec = two_crow(0.5, 9.5, 5.0);
        spec.drives[0].waveform = Waveform::Tabulated {
            times: vec![0.0, 40.0],
            values: vec![Complex64::new(1.0, 0.0); 2],
        };
        let p = bm_parameters(&spec).unwrap();
        assert!(matches!(bm_observables(&p, 1.0), Err(Error::Unsupported(_))));
        let mut seeded = two_crow(0.5, 9.5, 5.0);
        seeded.initial_field = Some(vec![Complex64::new(1.0, 0.0)]);
        seeded.initial_occupation = Some(vec![vec![Complex64::new(1.0, 0.0)]]);
        assert!(matches!(bm_trace(&seeded), Err(Error::Unsupported(_))));
    }

    proptest! {
        #[test]
        fn closed_form_continuity(eta in 0.1f64..2.5, wd in 9.0f64..11.0, temp in 0.0f64..10.0, t in 0.0f64..60.0) {
            let p = bm_parameters(&two_crow(eta, wd, temp)).unwrap();
            let rate = bm_photon_rate(&p, t).unwrap();
            let out: f64 = bm_photocurrent(&p, t).unwrap().iter().sum();
            let balance = rate - bm_source(&p, t).unwrap() + out;
            let scale = rate.abs() + out.abs() + 1.0;
            prop_assert!(balance.abs() < 1e-9 * scale, "{balance}");
            // The source equals 2·Im f⟨a⟩* evaluated from the closed-form field.
            let f = Complex64::from_polar(10.0, -wd * t);
            let direct = 2.0 * (f * bm_observables(&p, t).unwrap().field.conj()).im;
            prop_assert!((direct - bm_source(&p, t).unwrap()).abs() < 1e-9 * scale);
        }
    }
}
