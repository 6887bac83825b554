//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances shared by every kernel integral and sojourn-time integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    /// Requested relative accuracy of each integral.
    pub rel_tol: f64,
    /// Survival level at which semi-infinite integrals are truncated.
    pub truncation: f64,
    /// Maximum number of interval bisections.
    pub max_subdivisions: usize,
    /// Use closed forms when every clock in a state is exponential.
    pub fast_path: bool,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            rel_tol: 1e-10,
            truncation: 1e-13,
            max_subdivisions: 4000,
            fast_path: true,
        }
    }
}

impl QuadratureSettings {
    /// Same tolerances with the exponential closed forms disabled.
    pub fn quadrature_only(self) -> Self {
        QuadratureSettings {
            fast_path: false,
            ..self
        }
    }
}

/// Value of an integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
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

// Gauss weights for the odd Kronrod nodes (indices 1, 3, 5, 7).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const GEOMETRIC_LEVELS: usize = 32;

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Integrates `f` over the finite interval `[a, b]` to the requested relative accuracy.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!(
            "integration limits must be finite, got [{a}, {b}]"
        )));
    }
    if b <= a {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    // Geometric initial partition towards `a`, where kernel densities and
    // survival products concentrate, so narrow peaks are not missed.
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    let mut hi = b;
    for level in 1..=GEOMETRIC_LEVELS {
        let lo = if level == GEOMETRIC_LEVELS {
            a
        } else {
            a + (b - a) * 0.5f64.powi(level as i32)
        };
        if lo < hi {
            let (value, error) = kronrod(&f, lo, hi);
            evaluations += 15;
            heap.push(Segment { a: lo, b: hi, value, error });
            hi = lo;
        }
    }
    let (mut total, mut total_err) = sum_segments(&heap);

    let mut splits = 0;
    loop {
        let target = rel_tol * total.abs();
        if total_err <= target || total_err <= f64::MIN_POSITIVE {
            break;
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if splits >= max_subdivisions || mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let (value, error) = sum_segments(&heap);
            // Error estimates at roundoff level count as converged.
            if error <= 64.0 * f64::EPSILON * value.abs().max(f64::MIN_POSITIVE) {
                return Ok(Integral {
                    value,
                    error,
                    evaluations,
                });
            }
            return Err(Error::Quadrature {
                context: format!("[{a:.6e}, {b:.6e}] after {splits} subdivisions"),
                achieved: error / value.abs().max(f64::MIN_POSITIVE),
                requested: rel_tol,
            });
        }
        let (v1, e1) = kronrod(&f, worst.a, mid);
        let (v2, e2) = kronrod(&f, mid, worst.b);
        evaluations += 30;
        splits += 1;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        // Periodically resum to shed accumulated drift in the running totals.
        if splits % 64 == 0 {
            (total, total_err) = sum_segments(&heap);
        }
    }
    let (value, error) = sum_segments(&heap);
    Ok(Integral {
        value,
        error,
        evaluations,
    })
}

fn sum_segments(heap: &BinaryHeap<Segment>) -> (f64, f64) {
    let mut segs: Vec<&Segment> = heap.iter().collect();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    segs.iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 100).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn exponential_decay() {
        let r = integrate(|x| (-5.0 * x).exp(), 0.0, 20.0, 1e-12, 1000).unwrap();
        let exact = (1.0 - (-100.0f64).exp()) / 5.0;
        assert!((r.value - exact).abs() < 1e-13 * exact);
    }

    #[test]
    fn sharply_peaked_integrand() {
        // mass concentrated near zero on a long interval
        let r = integrate(|x| 1e4 * (-1e4 * x).exp(), 0.0, 5000.0, 1e-10, 4000).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn empty_and_zero_integrals() {
        assert_eq!(integrate(|x| x, 1.0, 1.0, 1e-10, 10).unwrap().value, 0.0);
        assert_eq!(integrate(|_| 0.0, 0.0, 1.0, 1e-10, 10).unwrap().value, 0.0);
    }

    #[test]
    fn non_convergence_reports_tolerance() {
        let err = integrate(|x| (1.0 / x).sin() / x, 1e-9, 1.0, 1e-14, 3).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn infinite_limit_rejected() {
        assert!(integrate(|x| x, 0.0, f64::INFINITY, 1e-10, 10).is_err());
    }
}
