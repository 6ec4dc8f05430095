//! Volterra solver for the propagators u, ū, v and the driven field y.
//!
//! All memory integrals use the trapezoidal rule on the uniform grid. The local part
//! `−iωx` is integrated exactly through `exp(−iωh)`, which makes the scheme exact for
//! decoupled resonators and second order otherwise.

use num_complex::Complex64;

use crate::kernels::KernelSet;
use crate::linalg;
use crate::model::{NetworkSpec, TimeGrid};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `Σ_k g[len−1−k]·x[k]` for equal-length slices.
#[inline]
fn dot_reversed(g: &[Complex64], x: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (a, b) in g.iter().rev().zip(x) {
        re += a.re * b.re - a.im * b.im;
        im += a.re * b.im + a.im * b.re;
    }
    Complex64::new(re, im)
}

/// Exponential trapezoidal integrator for
/// `dx/dτ = −iΩx − ∫_{t₀}^{τ} K(τ−τ′)x(τ′)dτ′ + F(τ)` with `x` of shape `N×cols`.
pub struct Volterra<'a> {
    kernel: &'a [Complex64],
    dim: usize,
    h: f64,
    propagator: Vec<Complex64>,
    implicit: Vec<Complex64>,
}

impl<'a> Volterra<'a> {
    pub fn new(kernel: &'a [Complex64], omega: &[Complex64], dim: usize, h: f64) -> Result<Self> {
        let nn = dim * dim;
        let propagator = linalg::expm(&linalg::scale(omega, Complex64::new(0.0, -h)), dim);
        let mut lhs = linalg::identity(dim);
        for k in 0..nn {
            lhs[k] += kernel[k] * (0.25 * h * h);
        }
        let implicit = linalg::inverse(&lhs, dim).ok_or(Error::SolverAbort {
            step: 0,
            quantity: "implicit step matrix",
        })?;
        Ok(Self {
            kernel,
            dim,
            h,
            propagator,
            implicit,
        })
    }

    fn lag(&self, k: usize) -> &[Complex64] {
        let nn = self.dim * self.dim;
        &self.kernel[k * nn..(k + 1) * nn]
    }

    /// Returns `(steps+1)` blocks of `N×cols`; `forcing`, when given, holds `steps+1` blocks.
    pub fn solve(
        &self,
        x0: &[Complex64],
        cols: usize,
        forcing: Option<&[Complex64]>,
        steps: usize,
        quantity: &'static str,
    ) -> Result<Vec<Complex64>> {
        let n = self.dim;
        let block = n * cols;
        let h = self.h;
        assert!(self.kernel.len() >= (steps + 1) * n * n, "kernel shorter than requested steps");
        let force = |k: usize| forcing.map(|f| &f[k * block..(k + 1) * block]);
        let mut x = linalg::zeros((steps + 1) * block);
        x[..block].copy_from_slice(x0);
        let mut rate = force(0).map_or_else(|| linalg::zeros(block), <[Complex64]>::to_vec);
        let scalar = n == 1 && cols == 1;
        let mut history = linalg::zeros(block);
        let mut tmp = linalg::zeros(block);
        let mut rhs = linalg::zeros(block);
        for m in 0..steps {
            // history = h[½K_{m+1}x₀ + Σ_{k=1}^{m} K_{m+1−k}x_k]
            if scalar {
                let acc = self.kernel[m + 1] * x[0] * 0.5
                    + dot_reversed(&self.kernel[1..=m], &x[1..=m]);
                history[0] = acc * h;
            } else {
                history.fill(ZERO);
                let half: Vec<Complex64> = self.lag(m + 1).iter().map(|g| g * 0.5).collect();
                linalg::mul_acc(&mut history, &half, &x[..block], n, n, cols);
                for k in 1..=m {
                    linalg::mul_acc(&mut history, self.lag(m + 1 - k), &x[k * block..(k + 1) * block], n, n, cols);
                }
                history.iter_mut().for_each(|z| *z *= h);
            }
            for e in 0..block {
                tmp[e] = x[m * block + e] + rate[e] * (0.5 * h);
            }
            rhs.fill(ZERO);
            linalg::mul_acc(&mut rhs, &self.propagator, &tmp, n, n, cols);
            let f_next = force(m + 1);
            for e in 0..block {
                let f = f_next.map_or(ZERO, |f| f[e]);
                rhs[e] += (f - history[e]) * (0.5 * h);
            }
            let next = &mut x[(m + 1) * block..(m + 2) * block];
            next.fill(ZERO);
            linalg::mul_acc(next, &self.implicit, &rhs, n, n, cols);
            if next.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::SolverAbort {
                    step: m + 1,
                    quantity,
                });
            }
            // rate = F_{m+1} − history − (h/2)K₀x_{m+1}
            let mut local = linalg::zeros(block);
            linalg::mul_acc(&mut local, self.lag(0), next, n, n, cols);
            for e in 0..block {
                rate[e] = f_next.map_or(ZERO, |f| f[e]) - history[e] - local[e] * (0.5 * h);
            }
        }
        Ok(x)
    }
}

/// Trapezoidal memory `M_m = ∫_{t₀}^{t_m} K(t_m − τ)x(τ)dτ` for every step.
pub fn memory_integral(
    kernel: &[Complex64],
    x: &[Complex64],
    dim: usize,
    cols: usize,
    h: f64,
) -> Vec<Complex64> {
    let n = dim;
    let nn = n * n;
    let block = n * cols;
    let steps = x.len() / block - 1;
    let mut out = linalg::zeros(x.len());
    for m in 1..=steps {
        let dst = &mut out[m * block..(m + 1) * block];
        if n == 1 && cols == 1 {
            let acc = dot_reversed(&kernel[0..=m], &x[0..=m]) - (kernel[m] * x[0] + kernel[0] * x[m]) * 0.5;
            dst[0] = acc * h;
        } else {
            for k in 0..=m {
                let w = if k == 0 || k == m { 0.5 * h } else { h };
                let g: Vec<Complex64> = kernel[(m - k) * nn..(m - k + 1) * nn].iter().map(|z| z * w).collect();
                linalg::mul_acc(dst, &g, &x[k * block..(k + 1) * block], n, n, cols);
            }
        }
    }
    out
}

/// Running evaluation of `Q(t) = ∫₀^T∫₀^T A(p) G(q−p) B(q)† dp dq` (T = t − t₀) for every
/// grid time, with trapezoidal weights in both variables and `G(−s) = G(s)†`.
///
/// The row sums depending only on `B` are shared between contractions.
pub struct EqualTimeForm<'a> {
    kernel: &'a [Complex64],
    dim: usize,
    h: f64,
    b: &'a [Complex64],
    /// `r_m = Σ_{q≤m} c_q G(q−m) B_q†`, one N×N block per step.
    rows: Vec<Complex64>,
}

impl<'a> EqualTimeForm<'a> {
    pub fn new(kernel: &'a [Complex64], b: &'a [Complex64], dim: usize, h: f64) -> Self {
        let n = dim;
        let nn = n * n;
        let steps = b.len() / nn - 1;
        // r_m = (Σ_q c_q B_q G(m−q))†
        let partial = weighted_convolution(kernel, b, n, steps);
        let mut rows = linalg::zeros(b.len());
        for m in 0..=steps {
            let adj = linalg::adjoint(&partial[m * nn..(m + 1) * nn], n, n);
            rows[m * nn..(m + 1) * nn].copy_from_slice(&adj);
        }
        Self {
            kernel,
            dim,
            h,
            b,
            rows,
        }
    }

    pub fn contract(&self, a: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        let nn = n * n;
        let steps = a.len() / nn - 1;
        let cols = weighted_convolution(self.kernel, a, n, steps);
        let g0 = &self.kernel[..nn];
        let mut d = linalg::zeros(nn);
        let mut out = linalg::zeros(a.len());
        for m in 0..=steps {
            let am = &a[m * nn..(m + 1) * nn];
            let bm_adj = linalg::adjoint(&self.b[m * nn..(m + 1) * nn], n, n);
            let arm = linalg::mul(am, &self.rows[m * nn..(m + 1) * nn], n, n, n);
            let smb = linalg::mul(&cols[m * nn..(m + 1) * nn], &bm_adj, n, n, n);
            let agb = linalg::mul(&linalg::mul(am, g0, n, n, n), &bm_adj, n, n, n);
            let c = if m == 0 { 0.5 } else { 1.0 };
            for k in 0..nn {
                d[k] += (arm[k] + smb[k]) * c - agb[k] * (c * c);
            }
            if m > 0 {
                let hh = self.h * self.h;
                for k in 0..nn {
                    out[m * nn + k] = (d[k] - (arm[k] + smb[k]) * 0.5 + agb[k] * 0.25) * hh;
                }
            }
        }
        out
    }
}

/// `s_m = Σ_{p≤m} c_p A_p G(m−p)` with `c₀ = ½`, `c_p = 1` otherwise.
fn weighted_convolution(kernel: &[Complex64], a: &[Complex64], n: usize, steps: usize) -> Vec<Complex64> {
    let nn = n * n;
    let mut out = linalg::zeros((steps + 1) * nn);
    for m in 0..=steps {
        if n == 1 {
            out[m] = dot_reversed(&kernel[0..=m], &a[0..=m]) - a[0] * kernel[m] * 0.5;
        } else {
            let dst = &mut out[m * nn..(m + 1) * nn];
            for p in 0..=m {
                let c = if p == 0 { 0.5 } else { 1.0 };
                let ap: Vec<Complex64> = a[p * nn..(p + 1) * nn].iter().map(|z| z * c).collect();
                linalg::mul_acc(dst, &ap, &kernel[(m - p) * nn..(m - p + 1) * nn], n, n, n);
            }
        }
    }
    out
}

/// Integrals of one waveguide channel against the propagators, at every grid time.
#[derive(Debug, Clone)]
pub struct ChannelIntegrals {
    /// `∫ g_α(t − τ) u(τ, t₀) dτ`.
    pub memory_u: Vec<Complex64>,
    /// `∫ g_α(t − τ) y(τ) dτ`.
    pub memory_y: Vec<Complex64>,
    /// `∫ g_α(t − τ) v(τ, t) dτ`.
    pub correlation: Vec<Complex64>,
    /// `∫ g̃_α(t − τ) ū(τ, t) dτ`.
    pub noise: Vec<Complex64>,
}

/// Solved propagators on the full grid.
#[derive(Debug, Clone)]
pub struct PropagatorSet {
    pub grid: TimeGrid,
    pub dim: usize,
    /// `u(t_k, t₀)`, N×N per step.
    pub u: Vec<Complex64>,
    /// `y(t_k)`, N per step.
    pub y: Vec<Complex64>,
    /// `v(t_k, t_k)`, N×N per step.
    pub v_diag: Vec<Complex64>,
    pub channels: Vec<ChannelIntegrals>,
}

impl PropagatorSet {
    pub fn u_at(&self, k: usize) -> &[Complex64] {
        let nn = self.dim * self.dim;
        &self.u[k * nn..(k + 1) * nn]
    }

    pub fn y_at(&self, k: usize) -> &[Complex64] {
        &self.y[k * self.dim..(k + 1) * self.dim]
    }

    pub fn v_diag_at(&self, k: usize) -> &[Complex64] {
        let nn = self.dim * self.dim;
        &self.v_diag[k * nn..(k + 1) * nn]
    }
}

/// `u(t_k, t₀)` for every grid step, starting from the identity.
pub fn solve_u(kernels: &KernelSet, omega: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = kernels.dim;
    Volterra::new(&kernels.dissipation, omega, n, kernels.grid.step())?.solve(
        &linalg::identity(n),
        n,
        None,
        kernels.grid.n_steps,
        "u",
    )
}

/// Drive samples `f(t_k)` on the solver grid.
pub fn drive_samples(spec: &NetworkSpec) -> Result<Vec<Complex64>> {
    let mut f = Vec::with_capacity((spec.grid.n_steps + 1) * spec.dim());
    for k in 0..=spec.grid.n_steps {
        f.extend(spec.drive_vector(spec.grid.time(k))?);
    }
    Ok(f)
}

/// Driven field `y(t_k)` with `y(t₀) = 0`.
pub fn solve_y(kernels: &KernelSet, spec: &NetworkSpec) -> Result<Vec<Complex64>> {
    let n = kernels.dim;
    let forcing: Vec<Complex64> = drive_samples(spec)?.iter().map(|f| -I * f).collect();
    Volterra::new(&kernels.dissipation, &spec.frequencies.flat(), n, kernels.grid.step())?.solve(
        &linalg::zeros(n),
        1,
        Some(&forcing),
        kernels.grid.n_steps,
        "y",
    )
}

/// `y(t_n) = −i∫u(t_n − τ + t₀, t₀) f(τ) dτ` by trapezoidal convolution.
pub fn y_by_convolution(props: &PropagatorSet, spec: &NetworkSpec) -> Result<Vec<Complex64>> {
    let n = props.dim;
    let nn = n * n;
    let h = props.grid.step();
    let f = drive_samples(spec)?;
    let steps = props.grid.n_steps;
    let mut out = linalg::zeros((steps + 1) * n);
    for m in 1..=steps {
        let dst = &mut out[m * n..(m + 1) * n];
        for k in 0..=m {
            let w = if k == 0 || k == m { 0.5 * h } else { h };
            let uk: Vec<Complex64> = props.u[(m - k) * nn..(m - k + 1) * nn].iter().map(|z| z * (-I * w)).collect();
            linalg::mul_acc(dst, &uk, &f[k * n..(k + 1) * n], n, n, 1);
        }
    }
    Ok(out)
}

/// Solves every propagator and the per-channel integrals used by coefficients and currents.
pub fn solve_propagators(spec: &NetworkSpec, kernels: &KernelSet) -> Result<PropagatorSet> {
    let n = spec.dim();
    let nn = n * n;
    let h = spec.grid.step();
    let u = solve_u(kernels, &spec.frequencies.flat())?;
    let y = solve_y(kernels, spec)?;
    let thermal = kernels.noise.iter().any(|z| *z != ZERO);
    let form = thermal.then(|| EqualTimeForm::new(&kernels.noise, &u, n, h));
    let v_diag = match &form {
        Some(f) => f.contract(&u),
        None => linalg::zeros(u.len()),
    };
    let mut channels = Vec::with_capacity(kernels.channels.len());
    for ch in &kernels.channels {
        let memory_u = memory_integral(&ch.dissipation, &u, n, n, h);
        let memory_y = memory_integral(&ch.dissipation, &y, n, 1, h);
        let correlation = match &form {
            Some(f) => f.contract(&memory_u),
            None => linalg::zeros(u.len()),
        };
        let mut noise = linalg::zeros(u.len());
        if ch.noise.iter().any(|z| *z != ZERO) {
            let mut prev = linalg::mul(&ch.noise[..nn], &linalg::adjoint(&u[..nn], n, n), n, n, n);
            for m in 1..=spec.grid.n_steps {
                let cur = linalg::mul(
                    &ch.noise[m * nn..(m + 1) * nn],
                    &linalg::adjoint(&u[m * nn..(m + 1) * nn], n, n),
                    n,
                    n,
                    n,
                );
                for k in 0..nn {
                    noise[m * nn + k] = noise[(m - 1) * nn + k] + (prev[k] + cur[k]) * (0.5 * h);
                }
                prev = cur;
            }
        }
        channels.push(ChannelIntegrals {
            memory_u,
            memory_y,
            correlation,
            noise,
        });
    }
    Ok(PropagatorSet {
        grid: spec.grid,
        dim: n,
        u,
        y,
        v_diag,
        channels,
    })
}

fn check_column(grid: &TimeGrid, j: usize) -> Result<()> {
    if j > grid.n_steps {
        Err(Error::Range {
            what: "column index".into(),
            value: j as f64,
            lo: 0.0,
            hi: grid.n_steps as f64,
        })
    } else {
        Ok(())
    }
}

/// Grid index of a time that must lie on the grid.
pub fn grid_index(grid: &TimeGrid, t: f64) -> Result<usize> {
    let x = (t - grid.t0) / grid.step();
    let k = x.round();
    if (x - k).abs() > 1e-9 * x.abs().max(1.0) || k < 0.0 || k > grid.n_steps as f64 {
        return Err(Error::Range {
            what: "time off the grid".into(),
            value: t,
            lo: grid.t0,
            hi: grid.t_end,
        });
    }
    Ok(k as usize)
}

/// `ū(τ_i, t_j)` for `i = 0..=j` from time-translation: `ū(τ, t) = u(t − τ + t₀, t₀)†`.
pub fn ubar_column(props: &PropagatorSet, j: usize) -> Result<Vec<Complex64>> {
    check_column(&props.grid, j)?;
    let n = props.dim;
    let mut out = Vec::with_capacity((j + 1) * n * n);
    for i in 0..=j {
        out.extend(linalg::adjoint(props.u_at(j - i), n, n));
    }
    Ok(out)
}

/// `ū(τ_i, t_j)` by integrating its own equation backward from `ū(t, t) = 1`.
pub fn ubar_column_backward(kernels: &KernelSet, omega: &[Complex64], j: usize) -> Result<Vec<Complex64>> {
    check_column(&kernels.grid, j)?;
    let n = kernels.dim;
    let nn = n * n;
    // With s = t − τ, w(s) = ū(t − s, t) obeys dw/ds = iωw − ∫₀ˢ g(s − s′)†w(s′)ds′.
    let mut adjoint_kernel = Vec::with_capacity((j + 1) * nn);
    for lag in 0..=j {
        adjoint_kernel.extend(linalg::adjoint(kernels.dissipation_at(lag), n, n));
    }
    let neg_omega = linalg::scale(omega, Complex64::new(-1.0, 0.0));
    let w = Volterra::new(&adjoint_kernel, &neg_omega, n, kernels.grid.step())?.solve(
        &linalg::identity(n),
        n,
        None,
        j,
        "ubar",
    )?;
    let mut out = Vec::with_capacity((j + 1) * nn);
    for i in 0..=j {
        out.extend_from_slice(&w[(j - i) * nn..(j - i + 1) * nn]);
    }
    Ok(out)
}

/// `H(τ_a) = ∫_{t₀}^{t_j} g̃(τ_a − τ′) ū(τ′, t_j) dτ′` for `a = 0..=j`.
fn noise_forcing(kernels: &KernelSet, props: &PropagatorSet, j: usize) -> Vec<Complex64> {
    let n = props.dim;
    let nn = n * n;
    let h = props.grid.step();
    let ubar: Vec<Vec<Complex64>> = (0..=j).map(|b| linalg::adjoint(props.u_at(j - b), n, n)).collect();
    let mut out = linalg::zeros((j + 1) * nn);
    for a in 0..=j {
        let dst = &mut out[a * nn..(a + 1) * nn];
        for (b, ub) in ubar.iter().enumerate() {
            let w = if b == 0 || b == j { 0.5 * h } else { h };
            let g = kernels.noise_signed(a as isize - b as isize);
            let g: Vec<Complex64> = g.iter().map(|z| z * w).collect();
            linalg::mul_acc(dst, &g, ub, n, n, n);
        }
    }
    out
}

/// `v(τ_i, t_j)` for `i = 0..=j` from the double-integral representation
/// `v(τ, t) = ∫_{t₀}^{τ}∫_{t₀}^{t} u(τ, τ₁) g̃(τ₁ − τ₂) ū(τ₂, t) dτ₂ dτ₁`.
pub fn v_column(kernels: &KernelSet, props: &PropagatorSet, j: usize) -> Result<Vec<Complex64>> {
    check_column(&props.grid, j)?;
    let n = props.dim;
    let nn = n * n;
    let h = props.grid.step();
    let forcing = noise_forcing(kernels, props, j);
    let mut out = linalg::zeros((j + 1) * nn);
    for i in 1..=j {
        let dst = &mut out[i * nn..(i + 1) * nn];
        for a in 0..=i {
            let w = if a == 0 || a == i { 0.5 * h } else { h };
            let u: Vec<Complex64> = props.u_at(i - a).iter().map(|z| z * w).collect();
            linalg::mul_acc(dst, &u, &forcing[a * nn..(a + 1) * nn], n, n, n);
        }
    }
    Ok(out)
}

/// `v(τ_i, t_j)` by solving its inhomogeneous Volterra equation with `v(t₀, t) = 0`.
pub fn v_column_ode(
    kernels: &KernelSet,
    props: &PropagatorSet,
    omega: &[Complex64],
    j: usize,
) -> Result<Vec<Complex64>> {
    check_column(&props.grid, j)?;
    let n = props.dim;
    let forcing = noise_forcing(kernels, props, j);
    Volterra::new(&kernels.dissipation, omega, n, props.grid.step())?.solve(
        &linalg::zeros(n * n),
        n,
        Some(&forcing),
        j,
        "v",
    )
}

/// Two-time functions at a fixed final time `t_j`.
#[derive(Debug, Clone)]
pub struct TwoTimeColumn {
    pub index: usize,
    pub ubar: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

pub fn two_time_column(kernels: &KernelSet, props: &PropagatorSet, j: usize) -> Result<TwoTimeColumn> {
    Ok(TwoTimeColumn {
        index: j,
        ubar: ubar_column(props, j)?,
        v: v_column(kernels, props, j)?,
    })
}

/// A-posteriori residual of the integro-differential equation for u at interior steps,
/// `‖(e^{iωh}u_{n+1} − e^{−iωh}u_{n−1})/2h + ∫g(t_n − τ)u(τ)dτ‖_max`.
pub fn dyson_residual(kernels: &KernelSet, props: &PropagatorSet, omega: &[Complex64]) -> Vec<f64> {
    let n = props.dim;
    let nn = n * n;
    let h = props.grid.step();
    let forward = linalg::expm(&linalg::scale(omega, Complex64::new(0.0, h)), n);
    let backward = linalg::expm(&linalg::scale(omega, Complex64::new(0.0, -h)), n);
    let memory = memory_integral(&kernels.dissipation, &props.u, n, n, h);
    (1..props.grid.n_steps)
        .map(|k| {
            let a = linalg::mul(&forward, props.u_at(k + 1), n, n, n);
            let b = linalg::mul(&backward, props.u_at(k - 1), n, n, n);
            (0..nn)
                .map(|e| ((a[e] - b[e]) / (2.0 * h) + memory[k * nn + e]).norm())
                .fold(0.0, f64::max)
        })
        .collect()
}
