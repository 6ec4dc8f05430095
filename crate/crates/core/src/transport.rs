//! Observables: cavity field, single-particle density matrix, two-time correlations,
//! current matrices, photocurrents, source and the continuity balance.
//!
//! Positive currents flow from the resonators into the waveguide. The drive source is
//! `S = 2·Im Σ_i f_i⟨a_i⟩*`, so that `dN/dt = S − Σ_α I_α`.

use num_complex::Complex64;

use crate::dynamics::{PropagatorSet, TwoTimeColumn};
use crate::kernels::KernelSet;
use crate::linalg;
use crate::model::NetworkSpec;
use crate::trace::TraceTable;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `⟨a(t_k)⟩ = u(t_k, t₀)⟨a(t₀)⟩ + y(t_k)`.
pub fn cavity_field(props: &PropagatorSet, spec: &NetworkSpec, k: usize) -> Vec<Complex64> {
    let n = props.dim;
    let mut a = linalg::mul(props.u_at(k), &spec.initial_field_vec(), n, n, 1);
    for (ai, yi) in a.iter_mut().zip(props.y_at(k)) {
        *ai += yi;
    }
    a
}

/// `ρ⁽¹⁾(t) = uρ₀u† + v(t, t) + ⟨a⟩y† + y⟨a⟩† − yy†`.
pub fn occupation(props: &PropagatorSet, spec: &NetworkSpec, k: usize) -> Vec<Complex64> {
    let n = props.dim;
    let u = props.u_at(k);
    let y = props.y_at(k);
    let a = cavity_field(props, spec, k);
    let u_adj = linalg::adjoint(u, n, n);
    let mut rho = linalg::mul(&linalg::mul(u, &spec.initial_occupation_flat(), n, n, n), &u_adj, n, n, n);
    let v = props.v_diag_at(k);
    for i in 0..n {
        for j in 0..n {
            rho[i * n + j] += v[i * n + j] + a[i] * y[j].conj() + y[i] * a[j].conj() - y[i] * y[j].conj();
        }
    }
    rho
}

/// `ρ⁽¹⁾(τ_i, t_j)` for a materialised column at `t_j`:
/// `u(τ)ρ₀u(t)† + v(τ, t) + y(τ)y(t)† + u(τ)⟨a(t₀)⟩y(t)† + y(τ)⟨a(t₀)⟩†u(t)†`.
pub fn generalized_correlation(
    props: &PropagatorSet,
    spec: &NetworkSpec,
    column: &TwoTimeColumn,
    i: usize,
) -> Result<Vec<Complex64>> {
    let j = column.index;
    if i > j {
        return Err(Error::Argument(format!("τ index {i} is later than t index {j}")));
    }
    let n = props.dim;
    let nn = n * n;
    let (ui, uj) = (props.u_at(i), props.u_at(j));
    let (yi, yj) = (props.y_at(i), props.y_at(j));
    let a0 = spec.initial_field_vec();
    let uj_adj = linalg::adjoint(uj, n, n);
    let mut out = linalg::mul(&linalg::mul(ui, &spec.initial_occupation_flat(), n, n, n), &uj_adj, n, n, n);
    let ua = linalg::mul(ui, &a0, n, n, 1);
    let ua_t = linalg::mul(uj, &a0, n, n, 1);
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] += column.v[i * nn + r * n + c]
                + yi[r] * yj[c].conj()
                + ua[r] * yj[c].conj()
                + yi[r] * ua_t[c].conj();
        }
    }
    Ok(out)
}

/// Retarded Green function `G^r(t_k, t₀) = −i·u(t_k, t₀)`.
pub fn retarded_green(props: &PropagatorSet, k: usize) -> Vec<Complex64> {
    linalg::scale(props.u_at(k), -I)
}

/// Advanced Green function `G^a(τ_i, t_j) = i·ū(τ_i, t_j)`.
pub fn advanced_green(column: &TwoTimeColumn, i: usize, dim: usize) -> Vec<Complex64> {
    let nn = dim * dim;
    linalg::scale(&column.ubar[i * nn..(i + 1) * nn], I)
}

/// Lesser Green function `G^<(τ, t) = i·ρ⁽¹⁾(τ, t)`.
pub fn lesser_green(
    props: &PropagatorSet,
    spec: &NetworkSpec,
    column: &TwoTimeColumn,
    i: usize,
) -> Result<Vec<Complex64>> {
    Ok(linalg::scale(&generalized_correlation(props, spec, column, i)?, I))
}

/// Current matrix `ℐ_α(t_k) = X + X†` from the running channel integrals, where
/// `X = ∫[g_α ρ⁽¹⁾(τ, t) − g̃_α ū(τ, t)]dτ`.
pub fn current_matrix(props: &PropagatorSet, spec: &NetworkSpec, channel: usize, k: usize) -> Vec<Complex64> {
    let n = props.dim;
    let nn = n * n;
    let ch = &props.channels[channel];
    let u_adj = linalg::adjoint(props.u_at(k), n, n);
    let y = props.y_at(k);
    let a0 = spec.initial_field_vec();
    let a = cavity_field(props, spec, k);
    // ρ₀u† + ⟨a(t₀)⟩y†
    let mut right = linalg::mul(&spec.initial_occupation_flat(), &u_adj, n, n, n);
    for r in 0..n {
        for c in 0..n {
            right[r * n + c] += a0[r] * y[c].conj();
        }
    }
    let mut x = linalg::mul(&ch.memory_u[k * nn..(k + 1) * nn], &right, n, n, n);
    let phi_y = &ch.memory_y[k * n..(k + 1) * n];
    for r in 0..n {
        for c in 0..n {
            x[r * n + c] += phi_y[r] * a[c].conj() + ch.correlation[k * nn + r * n + c] - ch.noise[k * nn + r * n + c];
        }
    }
    hermitian_sum(&x, n)
}

fn hermitian_sum(x: &[Complex64], n: usize) -> Vec<Complex64> {
    linalg::add(x, &linalg::adjoint(x, n, n))
}

/// Photocurrent `I_α = Re Tr ℐ_α`.
pub fn current_from_matrix(m: &[Complex64], n: usize) -> f64 {
    linalg::trace(m, n).re
}

/// Current matrices and photocurrents from explicit two-time columns.
pub fn photocurrent(
    kernels: &KernelSet,
    props: &PropagatorSet,
    spec: &NetworkSpec,
    column: &TwoTimeColumn,
) -> Result<Vec<(f64, Vec<Complex64>)>> {
    let n = props.dim;
    let nn = n * n;
    let j = column.index;
    let h = props.grid.step();
    let rho: Vec<Vec<Complex64>> = (0..=j)
        .map(|i| generalized_correlation(props, spec, column, i))
        .collect::<Result<_>>()?;
    Ok(kernels
        .channels
        .iter()
        .map(|ch| {
            let mut x = linalg::zeros(nn);
            for (i, rho_i) in rho.iter().enumerate() {
                let w = if i == 0 || i == j { 0.5 * h } else { h };
                let g: Vec<Complex64> = ch.dissipation[(j - i) * nn..(j - i + 1) * nn].iter().map(|z| z * w).collect();
                let gt: Vec<Complex64> = ch.noise[(j - i) * nn..(j - i + 1) * nn].iter().map(|z| -z * w).collect();
                linalg::mul_acc(&mut x, &g, rho_i, n, n, n);
                linalg::mul_acc(&mut x, &gt, &column.ubar[i * nn..(i + 1) * nn], n, n, n);
            }
            let m = hermitian_sum(&x, n);
            (current_from_matrix(&m, n), m)
        })
        .collect())
}

/// Source `S = 2·Im Σ_i f_i(t)⟨a_i(t)⟩*`.
pub fn source(drive: &[Complex64], field: &[Complex64]) -> f64 {
    2.0 * drive.iter().zip(field).map(|(f, a)| f * a.conj()).sum::<Complex64>().im
}

/// Derivative of uniformly sampled data: centred inside, second-order one-sided at the ends.
/// The flag marks one-sided points.
pub fn sampled_derivative(values: &[f64], spacing: f64) -> Vec<(f64, bool)> {
    let n = values.len();
    match n {
        0 => vec![],
        1 => vec![(0.0, true)],
        2 => {
            let d = (values[1] - values[0]) / spacing;
            vec![(d, true), (d, true)]
        }
        _ => (0..n)
            .map(|k| {
                if k == 0 {
                    ((-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * spacing), true)
                } else if k == n - 1 {
                    ((3.0 * values[k] - 4.0 * values[k - 1] + values[k - 2]) / (2.0 * spacing), true)
                } else {
                    ((values[k + 1] - values[k - 1]) / (2.0 * spacing), false)
                }
            })
            .collect(),
    }
}

/// Observables at the output times.
#[derive(Debug, Clone)]
pub struct TransportTrace {
    pub dim: usize,
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    /// Per time, N entries.
    pub field: Vec<Complex64>,
    /// Per time, N×N entries.
    pub occupation: Vec<Complex64>,
    /// Per time, N×N entries of v(t, t).
    pub v_diag: Vec<Complex64>,
    /// Per time, N entries.
    pub photon_numbers: Vec<f64>,
    /// Per time, M entries.
    pub currents: Vec<f64>,
    /// Per time, M blocks of N×N.
    pub current_matrices: Vec<Complex64>,
    pub source: Vec<f64>,
    pub total_number: Vec<f64>,
    pub residual: Vec<f64>,
    pub one_sided: Vec<bool>,
}

pub fn transport_trace(spec: &NetworkSpec, props: &PropagatorSet) -> Result<TransportTrace> {
    let n = props.dim;
    let m = props.channels.len();
    let indices = spec.grid.output_indices();
    let mut tr = TransportTrace {
        dim: n,
        labels: spec.waveguides.iter().map(|w| w.label.clone()).collect(),
        times: Vec::with_capacity(indices.len()),
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
    for &k in &indices {
        let t = spec.grid.time(k);
        let a = cavity_field(props, spec, k);
        let rho = occupation(props, spec, k);
        tr.times.push(t);
        tr.source.push(source(&spec.drive_vector(t)?, &a));
        tr.field.extend(&a);
        let numbers: Vec<f64> = (0..n).map(|i| rho[i * n + i].re).collect();
        tr.total_number.push(numbers.iter().sum());
        tr.photon_numbers.extend(numbers);
        tr.occupation.extend(&rho);
        tr.v_diag.extend_from_slice(props.v_diag_at(k));
        for alpha in 0..m {
            let mat = current_matrix(props, spec, alpha, k);
            tr.currents.push(current_from_matrix(&mat, n));
            tr.current_matrices.extend(mat);
        }
    }
    let spacing = spec.grid.step() * spec.grid.output_every as f64;
    fill_continuity(&mut tr.residual, &mut tr.one_sided, &tr.total_number, &tr.source, &tr.currents, m, spacing);
    Ok(tr)
}

/// `|dN/dt − S + Σ_α I_α|` with dN/dt from [`sampled_derivative`].
pub fn fill_continuity(
    residual: &mut Vec<f64>,
    one_sided: &mut Vec<bool>,
    total_number: &[f64],
    source: &[f64],
    currents: &[f64],
    channels: usize,
    spacing: f64,
) {
    residual.clear();
    one_sided.clear();
    for (k, (d, flag)) in sampled_derivative(total_number, spacing).into_iter().enumerate() {
        let outflow: f64 = currents[k * channels..(k + 1) * channels].iter().sum();
        residual.push((d - source[k] + outflow).abs());
        one_sided.push(flag);
    }
}

/// Column names shared by exact and Born–Markov traces.
pub fn trace_columns(dim: usize, labels: &[String]) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for i in 0..dim {
        cols.push(format!("re_a_{i}"));
        cols.push(format!("im_a_{i}"));
    }
    for i in 0..dim {
        cols.push(format!("n_{i}"));
    }
    for i in 0..dim {
        cols.push(format!("v_{i}"));
    }
    for l in labels {
        cols.push(format!("I_{l}"));
    }
    cols.extend(["S", "N", "residual", "one_sided"].map(String::from));
    cols
}

impl TransportTrace {
    pub fn to_table(&self, method: &str) -> TraceTable {
        let n = self.dim;
        let m = self.labels.len();
        let rows = (0..self.times.len())
            .map(|k| {
                let mut row = vec![self.times[k]];
                for a in &self.field[k * n..(k + 1) * n] {
                    row.push(a.re);
                    row.push(a.im);
                }
                row.extend(&self.photon_numbers[k * n..(k + 1) * n]);
                row.extend((0..n).map(|i| self.v_diag[k * n * n + i * n + i].re));
                row.extend(&self.currents[k * m..(k + 1) * m]);
                row.push(self.source[k]);
                row.push(self.total_number[k]);
                row.push(self.residual[k]);
                row.push(if self.one_sided[k] { 1.0 } else { 0.0 });
                row
            })
            .collect();
        TraceTable {
            method: method.into(),
            columns: trace_columns(n, &self.labels),
            rows,
        }
    }

    /// Continuity residual relative to `max(|S|, max_α |I_α|)` over the run.
    pub fn relative_residual(&self, include_one_sided: bool) -> f64 {
        let scale = self
            .source
            .iter()
            .chain(&self.currents)
            .map(|x| x.abs())
            .fold(0.0, f64::max);
        let worst = self
            .residual
            .iter()
            .zip(&self.one_sided)
            .filter(|(_, &flag)| include_one_sided || !flag)
            .map(|(r, _)| *r)
            .fold(0.0, f64::max);
        if scale == 0.0 {
            worst
        } else {
            worst / scale
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{solve_propagators, two_time_column};
    use crate::kernels::build_kernel_set;
    use crate::model::{DrivingSignal, FrequencyMatrix, SpectralDensity, TimeGrid, Waveform, WaveguideSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_mode(temperature: f64, eta: f64, amplitude: f64) -> NetworkSpec {
        NetworkSpec {
            frequencies: FrequencyMatrix {
                dim: 2,
                entries: vec![vec![c(10.0, 0.0), c(0.15, 0.05)], vec![c(0.15, -0.05), c(10.2, 0.0)]],
            },
            drives: vec![DrivingSignal {
                target: 1,
                waveform: Waveform::Monochromatic {
                    amplitude,
                    frequency: 10.1,
                    phase: 0.4,
                },
            }],
            waveguides: ["a", "b"]
                .iter()
                .zip([(9.8, c(1.0, 0.0)), (10.3, c(0.2, 0.6))])
                .map(|(label, (center, c1))| WaveguideSpec {
                    label: (*label).into(),
                    coupling: vec![c(1.0, 0.0), c1],
                    spectral: SpectralDensity::TightBindingSemicircle {
                        center,
                        hopping: 0.3,
                        coupling_ratio: eta,
                    },
                    temperature,
                })
                .collect(),
            initial_field: Some(vec![c(0.5, -0.2), c(0.0, 0.3)]),
            initial_occupation: Some(vec![vec![c(1.5, 0.0), c(0.1, 0.2)], vec![c(0.1, -0.2), c(0.8, 0.0)]]),
            grid: TimeGrid {
                t0: 0.0,
                t_end: 6.0,
                n_steps: 1200,
                output_every: 4,
            },
        }
    }

    fn solve(spec: &NetworkSpec) -> (KernelSet, PropagatorSet) {
        let ks = build_kernel_set(spec).unwrap();
        let props = solve_propagators(spec, &ks).unwrap();
        (ks, props)
    }

    #[test]
    fn equal_time_correlation_matches_occupation() {
        let spec = two_mode(5.0, 0.8, 2.0);
        let (ks, props) = solve(&spec);
        for j in [0, 1, 500, 1200] {
            let col = two_time_column(&ks, &props, j).unwrap();
            let rho = occupation(&props, &spec, j);
            let corr = generalized_correlation(&props, &spec, &col, j).unwrap();
            assert!(linalg::max_abs(&linalg::sub(&rho, &corr)) <= 1e-10 * linalg::max_abs(&rho));
            assert!(generalized_correlation(&props, &spec, &col, j + 1).is_err());
        }
    }

    #[test]
    fn occupation_is_hermitian_psd() {
        let spec = two_mode(5.0, 0.8, 2.0);
        let (_, props) = solve(&spec);
        for k in spec.grid.output_indices() {
            let rho = occupation(&props, &spec, k);
            let scale = linalg::max_abs(&rho);
            assert!(linalg::hermitian_defect(&rho, 2) <= 1e-12 * scale);
            assert!(linalg::hermitian_eigenvalues(&rho, 2)[0] >= -1e-8);
        }
    }

    #[test]
    fn current_matrix_identity_with_coefficients() {
        let spec = two_mode(5.0, 0.8, 2.0);
        let (_, props) = solve(&spec);
        for k in [100, 700, 1200] {
            let sample = crate::coefficients::coefficients_at(&spec, &props, k).unwrap();
            let rho = occupation(&props, &spec, k);
            let a = cavity_field(&props, &spec, k);
            for (alpha, ch) in sample.channels.iter().enumerate() {
                // κρ + ρκ† + λ + λ† + i f_α⟨a⟩† − i⟨a⟩f_α†
                let mut x = linalg::mul(&ch.kappa, &rho, 2, 2, 2);
                for r in 0..2 {
                    for cc in 0..2 {
                        x[r * 2 + cc] += ch.lambda[r * 2 + cc] + I * ch.drive_shift[r] * a[cc].conj();
                    }
                }
                let expected = hermitian_sum(&x, 2);
                let got = current_matrix(&props, &spec, alpha, k);
                assert!(linalg::max_abs(&linalg::sub(&got, &expected)) <= 1e-10 * linalg::max_abs(&got));
                assert!(linalg::hermitian_defect(&got, 2) <= 1e-12 * linalg::max_abs(&got));
            }
        }
    }

    #[test]
    fn column_photocurrent_matches_running_integrals() {
        let spec = two_mode(5.0, 0.8, 2.0);
        let (ks, props) = solve(&spec);
        let j = 1000;
        let col = two_time_column(&ks, &props, j).unwrap();
        for (alpha, (current, mat)) in photocurrent(&ks, &props, &spec, &col).unwrap().into_iter().enumerate() {
            let running = current_matrix(&props, &spec, alpha, j);
            let scale = linalg::max_abs(&running);
            // The two quadratures differ only in the corner cell τ₁ = τ = t.
            assert!(linalg::max_abs(&linalg::sub(&mat, &running)) < 1e-4 * scale);
            assert_eq!(current, current_from_matrix(&mat, 2));
        }
    }

    #[test]
    fn continuity_holds_for_coupled_modes() {
        let spec = two_mode(5.0, 0.8, 2.0);
        let (_, props) = solve(&spec);
        let tr = transport_trace(&spec, &props).unwrap();
        assert!(tr.relative_residual(true) < 1e-3, "{}", tr.relative_residual(true));
        assert!(tr.one_sided[0] && *tr.one_sided.last().unwrap() && !tr.one_sided[1]);
    }

    #[test]
    fn trivial_limits() {
        let mut closed = two_mode(0.0, 0.0, 0.0);
        closed.frequencies.entries[0][1] = c(0.0, 0.0);
        closed.frequencies.entries[1][0] = c(0.0, 0.0);
        let (ks, props) = solve(&closed);
        let tr = transport_trace(&closed, &props).unwrap();
        assert!(tr.currents.iter().all(|i| *i == 0.0));
        assert!(tr.source.iter().all(|s| *s == 0.0));
        for k in 0..tr.times.len() {
            assert!((tr.photon_numbers[2 * k] - 1.5).abs() < 1e-12);
            assert!((tr.photon_numbers[2 * k + 1] - 0.8).abs() < 1e-12);
        }
        let a = cavity_field(&props, &closed, 1200);
        let expected = c(0.5, -0.2) * Complex64::from_polar(1.0, -10.0 * 6.0);
        assert!((a[0] - expected).norm() < 1e-12);
        // Empty, undriven cavity: only v remains in the correlation.
        let mut empty = two_mode(5.0, 0.8, 0.0);
        empty.initial_field = None;
        empty.initial_occupation = None;
        let (ks2, props2) = solve(&empty);
        let col = two_time_column(&ks2, &props2, 600).unwrap();
        let corr = generalized_correlation(&props2, &empty, &col, 300).unwrap();
        assert_eq!(corr, col.v[300 * 4..301 * 4].to_vec());
        let _ = ks;
    }

    #[test]
    fn green_function_views_are_aliases() {
        let spec = two_mode(5.0, 0.8, 2.0);
        let (ks, props) = solve(&spec);
        let col = two_time_column(&ks, &props, 400).unwrap();
        assert_eq!(linalg::scale(&retarded_green(&props, 50), I), props.u_at(50).to_vec());
        assert_eq!(linalg::scale(&advanced_green(&col, 10, 2), -I), col.ubar[40..44].to_vec());
        let lesser = lesser_green(&props, &spec, &col, 10).unwrap();
        assert_eq!(linalg::scale(&lesser, -I), generalized_correlation(&props, &spec, &col, 10).unwrap());
    }

    #[test]
    fn derivative_formulas_are_second_order() {
        let xs: Vec<f64> = (0..6).map(|k| (k as f64 * 0.5).powi(2)).collect();
        let d = sampled_derivative(&xs, 0.5);
        for (k, (v, _)) in d.iter().enumerate() {
            assert!((v - k as f64).abs() < 1e-12);
        }
    }
}
