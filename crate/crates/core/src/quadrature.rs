//! Adaptive Gauss–Kronrod (7/15) quadrature for complex-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub absolute: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            absolute: 1e-10,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: Complex64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("no convergence after {intervals} subintervals (error estimate {error:e})")]
    NoConvergence { intervals: usize, error: f64 },
    #[error("integrand is not finite at {at}")]
    NonFinite { at: f64 },
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    a: f64,
    b: f64,
) -> Result<Panel, QuadratureError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| {
        let y = f(x);
        if y.re.is_finite() && y.im.is_finite() {
            Ok(y)
        } else {
            Err(QuadratureError::NonFinite { at: x })
        }
    };
    let fc = eval(center)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let sum = eval(center - dx)? + eval(center + dx)?;
        k += sum * WGK[i];
        if i % 2 == 1 {
            g += sum * WG[i / 2];
        }
    }
    Ok(Panel {
        a,
        b,
        value: k * half,
        error: ((k - g) * half).norm(),
    })
}

/// Integrates `f` over `[a, b]`, starting from `panels` equal subintervals and bisecting the
/// worst one until the summed error estimate drops below the tolerance.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
    tol: Tolerance,
) -> Result<Integral, QuadratureError> {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut heap = BinaryHeap::with_capacity(panels * 2);
    for i in 0..panels {
        let lo = a + width * i as f64;
        let hi = if i + 1 == panels { b } else { lo + width };
        heap.push(kronrod(&mut f, lo, hi)?);
    }
    loop {
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if error <= tol.absolute {
            // Sum in interval order so the result does not depend on heap layout.
            let mut parts: Vec<Panel> = heap.into_vec();
            parts.sort_by(|x, y| x.a.total_cmp(&y.a));
            let value = parts.iter().map(|p| p.value).sum();
            return Ok(Integral { value, error });
        }
        if heap.len() >= tol.max_intervals {
            return Err(QuadratureError::NoConvergence {
                intervals: heap.len(),
                error,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(QuadratureError::NoConvergence {
                intervals: heap.len() + 1,
                error,
            });
        }
        heap.push(kronrod(&mut f, worst.a, mid)?);
        heap.push(kronrod(&mut f, mid, worst.b)?);
    }
}

/// Real-valued convenience wrapper.
pub fn integrate_real<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
    tol: Tolerance,
) -> Result<f64, QuadratureError> {
    integrate(|x| Complex64::new(f(x), 0.0), a, b, panels, tol).map(|r| r.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate_real(|x| x.powi(20) - 3.0 * x, -1.0, 2.0, 1, Tolerance::default()).unwrap();
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 4.5;
        assert!((r - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn oscillatory_complex_integrand() {
        let w = 40.0;
        let r = integrate(|x| Complex64::new(0.0, -w * x).exp(), 0.0, 3.0, 20, Tolerance::default())
            .unwrap();
        let exact = (Complex64::new(0.0, -w * 3.0).exp() - 1.0) / Complex64::new(0.0, -w);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn endpoint_square_root_converges() {
        let r = integrate_real(|x| (1.0 - x * x).max(0.0).sqrt(), -1.0, 1.0, 8, Tolerance::default())
            .unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn reports_non_convergence_and_non_finite() {
        let tight = Tolerance {
            absolute: 1e-30,
            max_intervals: 10,
        };
        assert!(matches!(
            integrate_real(|x| x.abs().sqrt(), -1.0, 1.0, 1, tight),
            Err(QuadratureError::NoConvergence { .. })
        ));
        assert!(matches!(
            integrate_real(|x| 1.0 / x, 0.0, 1.0, 1, Tolerance::default()),
            Err(QuadratureError::NoConvergence { .. }) | Err(QuadratureError::NonFinite { .. })
        ));
    }
}
