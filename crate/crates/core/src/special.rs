//! Special functions and physical constants.

use std::f64::consts::PI;

/// Boltzmann constant over reduced Planck constant in rad·ns⁻¹ per kelvin.
pub const KB_OVER_HBAR: f64 = 1.380649e-23 / 1.054571817e-34 * 1e-9;

const SMALL_ARGUMENT: f64 = 1e-4;
const ASYMPTOTIC_ARGUMENT: f64 = 25.0;

/// Bose–Einstein occupation `1/(exp(ω/k_B T) − 1)` with ω in rad·ns⁻¹ and T in kelvin.
///
/// Returns exactly zero at `T = 0`. Callers must keep `ω > 0` when `T > 0`.
pub fn bose_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 0.0;
    }
    1.0 / (omega / (KB_OVER_HBAR * temperature)).exp_m1()
}

/// Bessel function of the first kind of order one.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let value = if ax < SMALL_ARGUMENT {
        0.5 * ax * (1.0 - ax * ax / 8.0)
    } else if ax < ASYMPTOTIC_ARGUMENT {
        j1_miller(ax)
    } else {
        j1_asymptotic(ax)
    };
    if x < 0.0 {
        -value
    } else {
        value
    }
}

/// `J₁(x)/x`, finite at the origin where it tends to 1/2.
pub fn bessel_j1_over_x(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SMALL_ARGUMENT {
        0.5 - ax * ax / 16.0
    } else {
        bessel_j1(ax) / ax
    }
}

// Backward recurrence normalised with J₀ + 2ΣJ₂ₖ = 1.
fn j1_miller(x: f64) -> f64 {
    let mut start = (1.2 * x) as usize + 40;
    start += start % 2;
    let mut next = 0.0;
    let mut current = 1e-300;
    let mut j1 = 0.0;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let previous = 2.0 * k as f64 / x * current - next;
        next = current;
        current = previous;
        // `current` now holds J_{k-1}.
        if k - 1 == 1 {
            j1 = current;
        }
        if (k - 1) % 2 == 0 {
            norm += if k == 1 { current } else { 2.0 * current };
        }
        if current.abs() > 1e250 {
            current *= 1e-250;
            next *= 1e-250;
            j1 *= 1e-250;
            norm *= 1e-250;
        }
    }
    j1 / norm
}

// Hankel expansion; terms are summed until they stop shrinking.
fn j1_asymptotic(x: f64) -> f64 {
    let mu = 4.0;
    let mut term = 1.0;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut k = 1usize;
    loop {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() || next.abs() < 1e-18 {
            break;
        }
        term = next;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        k += 1;
    }
    let (s, c) = x.sin_cos();
    let cos_chi = (s - c) / std::f64::consts::SQRT_2;
    let sin_chi = -(s + c) / std::f64::consts::SQRT_2;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}
