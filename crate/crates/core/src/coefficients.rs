//! Time-dependent master-equation coefficients extracted from the propagators.

use std::io::Write;

use num_complex::Complex64;

use crate::dynamics::PropagatorSet;
use crate::linalg;
use crate::model::NetworkSpec;
use crate::trace::format_float;
use crate::{Error, Result};

/// Condition estimate above which u(t, t₀) is treated as singular.
pub const MAX_CONDITION: f64 = 1e8;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `max(σ_max, 1)/σ_min` of u; u(t₀, t₀) = 1 sets the reference scale.
pub fn propagator_condition(props: &PropagatorSet, k: usize) -> f64 {
    let sv = linalg::singular_values(props.u_at(k), props.dim);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax.max(1.0) / smin
    }
}

fn check_condition(props: &PropagatorSet, k: usize) -> Result<()> {
    let condition = propagator_condition(props, k);
    if condition.is_finite() && condition < MAX_CONDITION {
        Ok(())
    } else {
        Err(Error::SingularPropagator {
            time: props.grid.time(k),
            condition,
        })
    }
}

/// `κ_α(t_k) = [∫g_α(t − τ)u(τ, t₀)dτ]·u(t, t₀)⁻¹` for every channel.
pub fn compute_kappa(props: &PropagatorSet, k: usize) -> Result<Vec<Vec<Complex64>>> {
    check_condition(props, k)?;
    let n = props.dim;
    let nn = n * n;
    props
        .channels
        .iter()
        .map(|ch| {
            linalg::solve_right(&ch.memory_u[k * nn..(k + 1) * nn], props.u_at(k), n).ok_or(
                Error::SingularPropagator {
                    time: props.grid.time(k),
                    condition: f64::INFINITY,
                },
            )
        })
        .collect()
}

/// `λ_α = ∫[g_α v(τ, t) − g̃_α ū(τ, t)]dτ − κ_α v(t, t)`.
pub fn compute_lambda(props: &PropagatorSet, k: usize, kappa: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = props.dim;
    let nn = n * n;
    props
        .channels
        .iter()
        .zip(kappa)
        .map(|(ch, kap)| {
            let kv = linalg::mul(kap, props.v_diag_at(k), n, n, n);
            (0..nn)
                .map(|e| ch.correlation[k * nn + e] - ch.noise[k * nn + e] - kv[e])
                .collect()
        })
        .collect()
}

/// Feedback fields `f_α = iκ_α y − i∫g_α(t − τ)y(τ)dτ`.
pub fn compute_drive_shift(props: &PropagatorSet, k: usize, kappa: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = props.dim;
    props
        .channels
        .iter()
        .zip(kappa)
        .map(|(ch, kap)| {
            let ky = linalg::mul(kap, props.y_at(k), n, n, 1);
            (0..n)
                .map(|e| I * ky[e] - I * ch.memory_y[k * n + e])
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCoefficients {
    pub kappa: Vec<Complex64>,
    pub lambda: Vec<Complex64>,
    pub drive_shift: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Totals {
    /// Renormalised frequency ω′.
    pub omega: Vec<Complex64>,
    /// Dissipation γ.
    pub gamma: Vec<Complex64>,
    /// Fluctuation γ̃.
    pub gamma_noise: Vec<Complex64>,
    /// Renormalised drive f′.
    pub drive: Vec<Complex64>,
    /// Eigenvalues of γ, ascending.
    pub gamma_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSample {
    pub index: usize,
    pub time: f64,
    pub channels: Vec<ChannelCoefficients>,
    pub totals: Totals,
}

/// All coefficients at grid step `k`.
pub fn coefficients_at(spec: &NetworkSpec, props: &PropagatorSet, k: usize) -> Result<CoefficientSample> {
    let n = props.dim;
    let nn = n * n;
    let t = props.grid.time(k);
    let kappa = compute_kappa(props, k)?;
    let lambda = compute_lambda(props, k, &kappa);
    let shift = compute_drive_shift(props, k, &kappa);
    let mut omega = spec.frequencies.flat();
    let mut gamma = linalg::zeros(nn);
    let mut gamma_noise = linalg::zeros(nn);
    let mut drive = spec.drive_vector(t)?;
    for ((kap, lam), f) in kappa.iter().zip(&lambda).zip(&shift) {
        let kap_adj = linalg::adjoint(kap, n, n);
        let lam_adj = linalg::adjoint(lam, n, n);
        for e in 0..nn {
            gamma[e] += (kap[e] + kap_adj[e]) * 0.5;
            gamma_noise[e] += lam[e] + lam_adj[e];
            omega[e] -= (kap[e] - kap_adj[e]) * (0.5 * I);
        }
        for e in 0..n {
            drive[e] += f[e];
        }
    }
    let gamma_eigenvalues = linalg::hermitian_eigenvalues(&gamma, n);
    Ok(CoefficientSample {
        index: k,
        time: t,
        channels: kappa
            .into_iter()
            .zip(lambda)
            .zip(shift)
            .map(|((kappa, lambda), drive_shift)| ChannelCoefficients {
                kappa,
                lambda,
                drive_shift,
            })
            .collect(),
        totals: Totals {
            omega,
            gamma,
            gamma_noise,
            drive,
            gamma_eigenvalues,
        },
    })
}

/// Coefficients at an output time; singular times are flagged instead of extrapolated.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientEntry {
    Regular(CoefficientSample),
    Singular { index: usize, time: f64, condition: f64 },
}

#[derive(Debug, Clone)]
pub struct CoefficientTrace {
    pub dim: usize,
    pub labels: Vec<String>,
    pub entries: Vec<CoefficientEntry>,
}

pub fn coefficient_trace(spec: &NetworkSpec, props: &PropagatorSet) -> Result<CoefficientTrace> {
    let mut entries = Vec::new();
    for k in spec.grid.output_indices() {
        entries.push(match coefficients_at(spec, props, k) {
            Ok(s) => CoefficientEntry::Regular(s),
            Err(Error::SingularPropagator { time, condition }) => CoefficientEntry::Singular {
                index: k,
                time,
                condition,
            },
            Err(e) => return Err(e),
        });
    }
    Ok(CoefficientTrace {
        dim: spec.dim(),
        labels: spec.waveguides.iter().map(|w| w.label.clone()).collect(),
        entries,
    })
}

impl CoefficientTrace {
    /// One row per (time, channel); totals repeat on every channel row of a time.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.dim;
        let mut header = vec!["t".to_string(), "channel".into(), "singular".into()];
        let matrix = |name: &str, h: &mut Vec<String>| {
            for i in 0..n {
                for j in 0..n {
                    h.push(format!("re_{name}_{i}{j}"));
                    h.push(format!("im_{name}_{i}{j}"));
                }
            }
        };
        let vector = |name: &str, h: &mut Vec<String>| {
            for i in 0..n {
                h.push(format!("re_{name}_{i}"));
                h.push(format!("im_{name}_{i}"));
            }
        };
        matrix("kappa", &mut header);
        matrix("lambda", &mut header);
        vector("f", &mut header);
        matrix("gamma", &mut header);
        matrix("gamma_noise", &mut header);
        matrix("omega_eff", &mut header);
        vector("drive_eff", &mut header);
        for i in 0..n {
            header.push(format!("gamma_eig_{i}"));
        }
        writeln!(out, "{}", header.join(","))?;
        let width = header.len() - 3;
        for entry in &self.entries {
            for (c, label) in self.labels.iter().enumerate() {
                let (time, flag, values) = match entry {
                    CoefficientEntry::Regular(s) => {
                        let ch = &s.channels[c];
                        let tot = &s.totals;
                        let mut v = Vec::with_capacity(width);
                        for block in [&ch.kappa, &ch.lambda, &ch.drive_shift, &tot.gamma, &tot.gamma_noise, &tot.omega, &tot.drive] {
                            for z in block.iter() {
                                v.push(z.re);
                                v.push(z.im);
                            }
                        }
                        v.extend(&tot.gamma_eigenvalues);
                        (s.time, 0, v)
                    }
                    CoefficientEntry::Singular { time, .. } => (*time, 1, vec![f64::NAN; width]),
                };
                let cells: Vec<String> = values.into_iter().map(format_float).collect();
                writeln!(out, "{},{label},{flag},{}", format_float(time), cells.join(","))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::solve_propagators;
    use crate::kernels::build_kernel_set;
    use crate::model::{DrivingSignal, FrequencyMatrix, SpectralDensity, TimeGrid, Waveform, WaveguideSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec(eta: f64, temperature: f64, amplitude: f64) -> NetworkSpec {
        NetworkSpec {
            frequencies: FrequencyMatrix {
                dim: 2,
                entries: vec![vec![c(10.0, 0.0), c(0.1, 0.1)], vec![c(0.1, -0.1), c(10.2, 0.0)]],
            },
            drives: vec![DrivingSignal {
                target: 0,
                waveform: Waveform::Monochromatic {
                    amplitude,
                    frequency: 10.0,
                    phase: 0.0,
                },
            }],
            waveguides: ["a", "b"]
                .iter()
                .zip([9.8, 10.3])
                .map(|(label, center)| WaveguideSpec {
                    label: (*label).into(),
                    coupling: vec![c(1.0, 0.0), c(0.3, -0.2)],
                    spectral: SpectralDensity::TightBindingSemicircle {
                        center,
                        hopping: 0.3,
                        coupling_ratio: eta,
                    },
                    temperature,
                })
                .collect(),
            initial_field: None,
            initial_occupation: None,
            grid: TimeGrid {
                t0: 0.0,
                t_end: 6.0,
                n_steps: 600,
                output_every: 50,
            },
        }
    }

    #[test]
    fn zero_kernel_and_initial_time_give_zero_coefficients() {
        let s = spec(0.0, 0.0, 3.0);
        let props = solve_propagators(&s, &build_kernel_set(&s).unwrap()).unwrap();
        let sample = coefficients_at(&s, &props, 400).unwrap();
        for ch in &sample.channels {
            assert!(ch.kappa.iter().chain(&ch.lambda).chain(&ch.drive_shift).all(|z| z.norm() == 0.0));
        }
        assert_eq!(sample.totals.drive, s.drive_vector(4.0).unwrap());
        let hot = spec(0.7, 5.0, 3.0);
        let props = solve_propagators(&hot, &build_kernel_set(&hot).unwrap()).unwrap();
        let first = coefficients_at(&hot, &props, 0).unwrap();
        assert!(first.channels.iter().all(|ch| ch.kappa.iter().all(|z| z.norm() == 0.0)));
    }

    #[test]
    fn totals_are_hermitian_and_additive() {
        let s = spec(0.7, 5.0, 3.0);
        let props = solve_propagators(&s, &build_kernel_set(&s).unwrap()).unwrap();
        for k in s.grid.output_indices() {
            let sample = coefficients_at(&s, &props, k).unwrap();
            let t = &sample.totals;
            assert!(linalg::hermitian_defect(&t.gamma, 2) <= 1e-12 * linalg::max_abs(&t.gamma).max(1.0));
            assert!(linalg::hermitian_defect(&t.gamma_noise, 2) <= 1e-12 * linalg::max_abs(&t.gamma_noise).max(1.0));
            assert!(linalg::hermitian_defect(&t.omega, 2) <= 1e-12 * linalg::max_abs(&t.omega));
            let mut gamma = linalg::zeros(4);
            for ch in &sample.channels {
                let adj = linalg::adjoint(&ch.kappa, 2, 2);
                for e in 0..4 {
                    gamma[e] += (ch.kappa[e] + adj[e]) * 0.5;
                }
            }
            assert_eq!(gamma, t.gamma);
        }
    }

    #[test]
    fn field_equation_consistency() {
        let mut s = spec(0.7, 0.0, 3.0);
        s.grid.n_steps = 2400;
        let props = solve_propagators(&s, &build_kernel_set(&s).unwrap()).unwrap();
        let h = s.grid.step();
        let omega = s.frequencies.flat();
        for k in [300, 1200, 2000] {
            let sample = coefficients_at(&s, &props, k).unwrap();
            let a = props.y_at(k);
            // d⟨a⟩/dt = (−iω − Σκ_α)⟨a⟩ − i f′ with ⟨a(t₀)⟩ = 0.
            let mut gen = linalg::scale(&omega, -I);
            for ch in &sample.channels {
                gen = linalg::sub(&gen, &ch.kappa);
            }
            let mut rate = linalg::mul(&gen, a, 2, 2, 1);
            for (r, f) in rate.iter_mut().zip(&sample.totals.drive) {
                *r -= I * f;
            }
            let fd: Vec<Complex64> = (0..2)
                .map(|e| (props.y_at(k + 1)[e] - props.y_at(k - 1)[e]) / (2.0 * h))
                .collect();
            let scale = linalg::max_abs(&fd);
            assert!(linalg::max_abs(&linalg::sub(&rate, &fd)) < 1e-3 * scale, "k={k}");
        }
    }

    #[test]
    fn singular_propagator_is_flagged() {
        let s = spec(0.7, 5.0, 3.0);
        let mut props = solve_propagators(&s, &build_kernel_set(&s).unwrap()).unwrap();
        let k = 300;
        props.u[k * 4..(k + 1) * 4].copy_from_slice(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1e-12, 0.0)]);
        assert!(matches!(
            compute_kappa(&props, k),
            Err(Error::SingularPropagator { time, .. }) if (time - 3.0).abs() < 1e-12
        ));
        let trace = coefficient_trace(&s, &props).unwrap();
        let flagged: Vec<_> = trace
            .entries
            .iter()
            .filter(|e| matches!(e, CoefficientEntry::Singular { .. }))
            .collect();
        assert_eq!(flagged.len(), 1);
        let mut csv = Vec::new();
        trace.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.lines().any(|l| l.contains(",a,1,NaN,")));
        assert_eq!(text.lines().count(), 1 + 2 * trace.entries.len());
    }
}
