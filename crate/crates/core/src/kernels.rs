//! Memory kernels g_α(Δt) and noise kernels g̃_α(Δt) tabulated on the time grid.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use num_complex::Complex64;

use crate::linalg;
use crate::model::{NetworkSpec, SpectralDensity, TimeGrid};
use crate::quadrature::{integrate, QuadratureError, Tolerance};
use crate::special::{bessel_j1_over_x, bose_occupation};
use crate::trace::format_float;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn quadrature_error(source: QuadratureError) -> Error {
    Error::Quadrature {
        channel: String::new(),
        source,
    }
}

fn check_lag(dt: f64) -> Result<()> {
    if dt >= 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("kernel lag must be non-negative, got {dt}")))
    }
}

fn oscillation_panels(width: f64, dt: f64) -> usize {
    ((0.5 * width * dt).ceil() as usize).max(8)
}

/// Dissipation kernel `(1/2π)∫J(ω)e^{−iωΔt}dω` for a scalar density.
pub fn dissipation_kernel(s: &SpectralDensity, dt: f64) -> Result<Complex64> {
    check_lag(dt)?;
    match s {
        SpectralDensity::TightBindingSemicircle {
            center,
            hopping,
            coupling_ratio,
        } => {
            let envelope = coupling_ratio * coupling_ratio
                * 2.0
                * hopping
                * hopping
                * bessel_j1_over_x(2.0 * hopping * dt);
            Ok(Complex64::from_polar(envelope, -center * dt))
        }
        SpectralDensity::DiscreteModes { modes } => Ok(modes
            .iter()
            .map(|m| Complex64::from_polar(m.coupling.norm_sqr(), -m.frequency * dt))
            .sum()),
        SpectralDensity::Tabulated { .. } => spectral_integral(s, dt, |_| 1.0),
    }
}

/// Noise kernel `(1/2π)∫J(ω)n(ω,T)e^{−iωΔt}dω`; exactly zero at `T = 0`.
pub fn noise_kernel(s: &SpectralDensity, temperature: f64, dt: f64) -> Result<Complex64> {
    check_lag(dt)?;
    if temperature == 0.0 {
        return Ok(ZERO);
    }
    match s {
        SpectralDensity::TightBindingSemicircle {
            center,
            hopping,
            coupling_ratio,
        } => {
            // ω = ω_α + 2ξ sin θ removes the square-root edges of the band.
            let pre = coupling_ratio * coupling_ratio * 4.0 * hopping * hopping / (2.0 * PI);
            let f = |theta: f64| {
                let (s, c) = theta.sin_cos();
                let w = center + 2.0 * hopping * s;
                Complex64::from_polar(pre * c * c * bose_occupation(w, temperature), -w * dt)
            };
            let panels = ((2.0 * hopping * dt).ceil() as usize).max(8);
            integrate(f, -FRAC_PI_2, FRAC_PI_2, panels, Tolerance::default())
                .map(|r| r.value)
                .map_err(quadrature_error)
        }
        SpectralDensity::DiscreteModes { modes } => Ok(modes
            .iter()
            .map(|m| {
                Complex64::from_polar(
                    m.coupling.norm_sqr() * bose_occupation(m.frequency, temperature),
                    -m.frequency * dt,
                )
            })
            .sum()),
        SpectralDensity::Tabulated { .. } => {
            spectral_integral(s, dt, |w| bose_occupation(w, temperature))
        }
    }
}

/// Dissipation kernel by direct adaptive quadrature over the band in ω.
///
/// This is the reference path for densities with a closed form and the production path for
/// tabulated ones.
pub fn dissipation_kernel_quadrature(s: &SpectralDensity, dt: f64) -> Result<Complex64> {
    check_lag(dt)?;
    spectral_integral(s, dt, |_| 1.0)
}

fn spectral_integral<W: Fn(f64) -> f64>(s: &SpectralDensity, dt: f64, weight: W) -> Result<Complex64> {
    let integrand = |w: f64| -> Complex64 {
        let j = s.evaluate(w).unwrap_or(0.0);
        Complex64::from_polar(j * weight(w) / (2.0 * PI), -w * dt)
    };
    match s {
        SpectralDensity::TightBindingSemicircle { .. } => {
            let (a, b) = s.support().expect("semicircle has a support");
            integrate(integrand, a, b, oscillation_panels(b - a, dt), Tolerance::default())
                .map(|r| r.value)
                .map_err(quadrature_error)
        }
        SpectralDensity::DiscreteModes { .. } => Err(Error::Variant(
            "a discrete mode set has no spectral integral; use the mode sum".into(),
        )),
        SpectralDensity::Tabulated {
            frequencies,
            values,
        } => {
            check_tabulated_support(frequencies, values)?;
            let tol = Tolerance {
                absolute: Tolerance::default().absolute / (frequencies.len() - 1) as f64,
                ..Tolerance::default()
            };
            let mut total = ZERO;
            for seg in frequencies.windows(2) {
                let panels = ((0.5 * (seg[1] - seg[0]) * dt).ceil() as usize).max(1);
                total += integrate(&integrand, seg[0], seg[1], panels, tol)
                    .map_err(quadrature_error)?
                    .value;
            }
            Ok(total)
        }
    }
}

fn check_tabulated_support(frequencies: &[f64], values: &[f64]) -> Result<()> {
    if frequencies.len() < 2 || frequencies.len() != values.len() {
        return Err(Error::Argument("tabulated density needs at least two samples".into()));
    }
    let last = frequencies.len() - 1;
    for (f, v) in [(frequencies[0], values[0]), (frequencies[last], values[last])] {
        if v != 0.0 {
            return Err(Error::Range {
                what: format!("tabulated density at grid edge ω = {f}"),
                value: v,
                lo: 0.0,
                hi: 0.0,
            });
        }
    }
    Ok(())
}

/// Tabulated kernels of one waveguide, `lags × N²` row-major blocks.
#[derive(Debug, Clone)]
pub struct ChannelKernel {
    pub label: String,
    pub dissipation: Vec<Complex64>,
    pub noise: Vec<Complex64>,
}

/// Per-channel and total kernels for lags `0, h, …, n_steps·h`.
#[derive(Debug, Clone)]
pub struct KernelSet {
    pub grid: TimeGrid,
    pub dim: usize,
    pub channels: Vec<ChannelKernel>,
    pub dissipation: Vec<Complex64>,
    pub noise: Vec<Complex64>,
}

impl KernelSet {
    pub fn lags(&self) -> usize {
        self.grid.n_steps + 1
    }

    pub fn dissipation_at(&self, lag: usize) -> &[Complex64] {
        let nn = self.dim * self.dim;
        &self.dissipation[lag * nn..(lag + 1) * nn]
    }

    pub fn noise_at(&self, lag: usize) -> &[Complex64] {
        let nn = self.dim * self.dim;
        &self.noise[lag * nn..(lag + 1) * nn]
    }

    /// Total dissipation kernel at a signed lag, using g(−Δt) = g(Δt)†.
    pub fn dissipation_signed(&self, lag: isize) -> Vec<Complex64> {
        signed(self.dissipation_at(lag.unsigned_abs()), lag, self.dim)
    }

    /// Total noise kernel at a signed lag.
    pub fn noise_signed(&self, lag: isize) -> Vec<Complex64> {
        signed(self.noise_at(lag.unsigned_abs()), lag, self.dim)
    }

    /// CSV rows `(dt, channel, i, j, Re g, Im g, Re g̃, Im g̃)` for every stored lag.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "dt,channel,i,j,re_g,im_g,re_gt,im_gt")?;
        let n = self.dim;
        let h = self.grid.step();
        for ch in &self.channels {
            for lag in 0..self.lags() {
                for i in 0..n {
                    for j in 0..n {
                        let k = lag * n * n + i * n + j;
                        let (g, gt) = (ch.dissipation[k], ch.noise[k]);
                        writeln!(
                            out,
                            "{},{},{i},{j},{},{},{},{}",
                            format_float(lag as f64 * h),
                            ch.label,
                            format_float(g.re),
                            format_float(g.im),
                            format_float(gt.re),
                            format_float(gt.im)
                        )?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn signed(block: &[Complex64], lag: isize, n: usize) -> Vec<Complex64> {
    if lag >= 0 {
        block.to_vec()
    } else {
        linalg::adjoint(block, n, n)
    }
}

/// Tabulates every channel on all grid lags and forms the totals.
pub fn build_kernel_set(spec: &NetworkSpec) -> Result<KernelSet> {
    let n = spec.dim();
    let nn = n * n;
    let lags = spec.grid.n_steps + 1;
    let h = spec.grid.step();
    let mut channels = Vec::with_capacity(spec.waveguides.len());
    let mut total_g = linalg::zeros(lags * nn);
    let mut total_gt = linalg::zeros(lags * nn);
    for w in &spec.waveguides {
        let label_error = |e: Error| match e {
            Error::Quadrature { source, .. } => Error::Quadrature {
                channel: w.label.clone(),
                source,
            },
            other => other,
        };
        let outer = linalg::mul(&w.coupling, &linalg::adjoint(&w.coupling, n, 1), n, 1, n);
        let mut g = linalg::zeros(lags * nn);
        let mut gt = linalg::zeros(lags * nn);
        for lag in 0..lags {
            let dt = lag as f64 * h;
            let gs = dissipation_kernel(&w.spectral, dt).map_err(label_error)?;
            let gts = noise_kernel(&w.spectral, w.temperature, dt).map_err(label_error)?;
            for k in 0..nn {
                g[lag * nn + k] = outer[k] * gs;
                gt[lag * nn + k] = outer[k] * gts;
            }
        }
        for k in 0..lags * nn {
            total_g[k] += g[k];
            total_gt[k] += gt[k];
        }
        channels.push(ChannelKernel {
            label: w.label.clone(),
            dissipation: g,
            noise: gt,
        });
    }
    Ok(KernelSet {
        grid: spec.grid,
        dim: n,
        channels,
        dissipation: total_g,
        noise: total_gt,
    })
}
