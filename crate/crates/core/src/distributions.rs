//! Holding-time laws for aging, failure and recovery clocks.
//!
//! Three families are supported: exponential, two-phase hypoexponential and
//! deterministic. All times are in hours.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative rate gap below which a hypoexponential is evaluated as Erlang-2.
pub const ERLANG_SWITCH_GAP: f64 = 1e-8;

/// Distribution family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Exponential,
    Hypoexponential,
    Deterministic,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Exponential => "exponential",
            Family::Hypoexponential => "hypoexponential",
            Family::Deterministic => "deterministic",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" | "exp" => Ok(Family::Exponential),
            "hypoexponential" | "hypo" => Ok(Family::Hypoexponential),
            "deterministic" | "det" => Ok(Family::Deterministic),
            other => Err(Error::Domain(format!("unknown distribution family `{other}`"))),
        }
    }
}

/// A holding-time distribution.
///
/// Hypoexponential phases are stored in the order they were given; the
/// evaluation routines are symmetric in the two rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Exponential { rate: f64 },
    Hypoexponential { rate1: f64, rate2: f64 },
    Deterministic { value: f64 },
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::Domain(format!("{name} must be finite and > 0, got {x}")))
    }
}

impl Distribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(Distribution::Exponential {
            rate: positive("rate", rate)?,
        })
    }

    /// Exponential law with the given mean.
    pub fn exponential_mean(mean: f64) -> Result<Self> {
        Self::exponential(1.0 / positive("mean", mean)?)
    }

    pub fn hypoexponential(rate1: f64, rate2: f64) -> Result<Self> {
        Ok(Distribution::Hypoexponential {
            rate1: positive("rate1", rate1)?,
            rate2: positive("rate2", rate2)?,
        })
    }

    /// Hypoexponential whose two phases each last `phase_mean` on average.
    pub fn erlang2_phase_mean(phase_mean: f64) -> Result<Self> {
        let r = 1.0 / positive("phase mean", phase_mean)?;
        Self::hypoexponential(r, r)
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Distribution::Deterministic { value })
        } else {
            Err(Error::Domain(format!(
                "deterministic value must be finite and >= 0, got {value}"
            )))
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Distribution::Exponential { .. } => Family::Exponential,
            Distribution::Hypoexponential { .. } => Family::Hypoexponential,
            Distribution::Deterministic { .. } => Family::Deterministic,
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, Distribution::Exponential { .. })
    }

    /// Rate of an exponential law, `None` otherwise.
    pub fn exp_rate(&self) -> Option<f64> {
        match *self {
            Distribution::Exponential { rate } => Some(rate),
            _ => None,
        }
    }

    /// Location of the point mass of a deterministic law.
    pub fn atom(&self) -> Option<f64> {
        match *self {
            Distribution::Deterministic { value } => Some(value),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Exponential { rate } => 1.0 / rate,
            Distribution::Hypoexponential { rate1, rate2 } => 1.0 / rate1 + 1.0 / rate2,
            Distribution::Deterministic { value } => value,
        }
    }

    /// F(t). Fails for negative or NaN `t`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.cdf_at(t))
    }

    /// 1 - F(t). Fails for negative or NaN `t`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.survival_at(t))
    }

    /// Unchecked CDF; `t` must be >= 0.
    pub(crate) fn cdf_at(&self, t: f64) -> f64 {
        match *self {
            Distribution::Exponential { rate } => -(-rate * t).exp_m1(),
            Distribution::Hypoexponential { .. } => 1.0 - self.survival_at(t),
            Distribution::Deterministic { value } => {
                if t >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Unchecked survival function; `t` must be >= 0.
    pub(crate) fn survival_at(&self, t: f64) -> f64 {
        match *self {
            Distribution::Exponential { rate } => (-rate * t).exp(),
            Distribution::Hypoexponential { rate1, rate2 } => {
                let (lo, hi) = ordered(rate1, rate2);
                if near_equal(lo, hi) {
                    let lambda = 0.5 * (lo + hi);
                    (-lambda * t).exp() * (1.0 + lambda * t)
                } else {
                    // S(t) = e^{-lo t} (1 + lo (1 - e^{-(hi-lo) t}) / (hi - lo)), no overflow for hi >= lo.
                    let gap = hi - lo;
                    (-lo * t).exp() * (1.0 + lo * (-(-gap * t).exp_m1()) / gap)
                }
            }
            Distribution::Deterministic { value } => {
                if t >= value {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Density of the absolutely continuous families. Deterministic laws have none.
    pub(crate) fn pdf_at(&self, t: f64) -> f64 {
        match *self {
            Distribution::Exponential { rate } => rate * (-rate * t).exp(),
            Distribution::Hypoexponential { rate1, rate2 } => {
                let (lo, hi) = ordered(rate1, rate2);
                if near_equal(lo, hi) {
                    let lambda = 0.5 * (lo + hi);
                    lambda * lambda * t * (-lambda * t).exp()
                } else {
                    let gap = hi - lo;
                    lo * hi * (-lo * t).exp() * (-(-gap * t).exp_m1()) / gap
                }
            }
            Distribution::Deterministic { .. } => 0.0,
        }
    }

    /// A time beyond which the survival function is at most `eps`.
    pub(crate) fn tail_time(&self, eps: f64) -> f64 {
        match *self {
            Distribution::Exponential { rate } => -eps.ln() / rate,
            Distribution::Deterministic { value } => value,
            Distribution::Hypoexponential { rate1, rate2 } => {
                let slow = rate1.min(rate2);
                let mut hi = -eps.ln() / slow;
                while self.survival_at(hi) > eps {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if self.survival_at(mid) > eps {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    /// One draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Exponential { rate } => rng.sample::<f64, _>(Exp1) / rate,
            Distribution::Hypoexponential { rate1, rate2 } => {
                rng.sample::<f64, _>(Exp1) / rate1 + rng.sample::<f64, _>(Exp1) / rate2
            }
            Distribution::Deterministic { value } => value,
        }
    }

    /// Draws a value only if it falls below `bound`; returns `None` otherwise.
    ///
    /// Stops drawing hypoexponential phases as soon as the partial sum
    /// reaches the bound, which is all a race needs to know about a loser.
    pub(crate) fn sample_below<R: Rng + ?Sized>(&self, bound: f64, rng: &mut R) -> Option<f64> {
        let x = match *self {
            Distribution::Exponential { rate } => rng.sample::<f64, _>(Exp1) / rate,
            Distribution::Hypoexponential { rate1, rate2 } => {
                let first = rng.sample::<f64, _>(Exp1) / rate1;
                if first >= bound {
                    return None;
                }
                first + rng.sample::<f64, _>(Exp1) / rate2
            }
            Distribution::Deterministic { value } => value,
        };
        (x < bound).then_some(x)
    }

    /// Law of the target family with the same mean.
    ///
    /// A hypoexponential target gets two equal phases, which makes the single
    /// mean constraint determine it.
    pub fn mean_matched_swap(&self, target: Family) -> Distribution {
        let mean = self.mean();
        match target {
            Family::Exponential => Distribution::Exponential { rate: 1.0 / mean },
            Family::Hypoexponential => Distribution::Hypoexponential {
                rate1: 2.0 / mean,
                rate2: 2.0 / mean,
            },
            Family::Deterministic => Distribution::Deterministic { value: mean },
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be >= 0, got {t}")))
    }
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn near_equal(lo: f64, hi: f64) -> bool {
    (hi - lo) < ERLANG_SWITCH_GAP * hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn exponential_cdf_closed_form() {
        let d = Distribution::exponential(0.1).unwrap();
        assert!(close(d.cdf(10.0).unwrap(), 1.0 - (-1.0f64).exp(), 1e-15));
        assert!(close(d.cdf(10.0).unwrap(), 0.632_120_558_828_557_7, 1e-15));
    }

    #[test]
    fn hypoexponential_cdf_closed_form() {
        let d = Distribution::hypoexponential(1.0, 2.0).unwrap();
        let expected = 1.0 - 2.0 * (-1.0f64).exp() + (-2.0f64).exp();
        assert!(close(d.cdf(1.0).unwrap(), expected, 1e-15));
        assert!(close(d.cdf(1.0).unwrap(), 0.399_576, 1e-6));
        // phase order does not matter
        let swapped = Distribution::hypoexponential(2.0, 1.0).unwrap();
        assert!(close(swapped.cdf(1.0).unwrap(), expected, 1e-15));
    }

    #[test]
    fn deterministic_step() {
        let d = Distribution::deterministic(5.0).unwrap();
        assert_eq!(d.cdf(4.999).unwrap(), 0.0);
        assert_eq!(d.cdf(5.0).unwrap(), 1.0);
        assert_eq!(d.survival(5.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_time_and_negative_time() {
        let e = Distribution::exponential(3.0).unwrap();
        let h = Distribution::hypoexponential(1.0, 4.0).unwrap();
        assert_eq!(e.cdf(0.0).unwrap(), 0.0);
        assert_eq!(h.cdf(0.0).unwrap(), 0.0);
        assert!(matches!(e.cdf(-1.0), Err(Error::Domain(_))));
        assert!(matches!(h.survival(-1e-9), Err(Error::Domain(_))));
        assert!(e.cdf(f64::NAN).is_err());
    }

    #[test]
    fn means() {
        assert_eq!(Distribution::exponential(0.5).unwrap().mean(), 2.0);
        assert_eq!(Distribution::hypoexponential(1.0, 1.0).unwrap().mean(), 2.0);
        assert_eq!(Distribution::deterministic(7.0).unwrap().mean(), 7.0);
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(Distribution::exponential(0.0).is_err());
        assert!(Distribution::exponential(f64::INFINITY).is_err());
        assert!(Distribution::hypoexponential(1.0, -2.0).is_err());
        assert!(Distribution::deterministic(-1.0).is_err());
        assert!(Distribution::deterministic(0.0).is_ok());
    }

    #[test]
    fn erlang_branch_is_stable() {
        for eps in [0.0, 1e-12, 1e-9] {
            let lambda = 0.7;
            let d = Distribution::hypoexponential(lambda, lambda * (1.0 + eps)).unwrap();
            for t in [0.0, 1e-6, 0.3, 1.0, 5.0, 40.0] {
                let erlang = 1.0 - (-lambda * t).exp() * (1.0 + lambda * t);
                let got = d.cdf(t).unwrap();
                assert!(got.is_finite());
                assert!(close(got, erlang, 1e-9), "eps={eps} t={t}: {got} vs {erlang}");
            }
        }
    }

    #[test]
    fn survival_complements_cdf() {
        let laws = [
            Distribution::exponential(2.5).unwrap(),
            Distribution::hypoexponential(0.3, 1.7).unwrap(),
            Distribution::deterministic(1.25).unwrap(),
        ];
        for d in laws {
            for t in [0.0, 0.01, 0.5, 1.25, 3.0, 30.0] {
                let s = d.survival(t).unwrap();
                let f = d.cdf(t).unwrap();
                assert!(close(s + f, 1.0, 2e-16), "{d:?} at {t}");
            }
        }
    }

    #[test]
    fn mean_matched_swaps() {
        let e = Distribution::exponential(0.5).unwrap();
        assert_eq!(
            e.mean_matched_swap(Family::Deterministic),
            Distribution::Deterministic { value: 2.0 }
        );
        let d = Distribution::deterministic(2.0).unwrap();
        assert_eq!(
            d.mean_matched_swap(Family::Exponential),
            Distribution::Exponential { rate: 0.5 }
        );
        assert_eq!(
            e.mean_matched_swap(Family::Hypoexponential),
            Distribution::Hypoexponential {
                rate1: 1.0,
                rate2: 1.0
            }
        );
    }

    #[test]
    fn deterministic_sampling_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = Distribution::deterministic(3.0).unwrap();
        for _ in 0..10 {
            assert_eq!(d.sample(&mut rng), 3.0);
        }
    }

    #[test]
    fn sample_means_converge() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let e = Distribution::exponential(1.0).unwrap();
        let mean_e = (0..n).map(|_| e.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean_e - 1.0).abs() < 0.01, "{mean_e}");
        let h = Distribution::hypoexponential(1.0, 2.0).unwrap();
        let mean_h = (0..n).map(|_| h.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean_h - 1.5).abs() < 0.01, "{mean_h}");
    }

    #[test]
    fn tail_time_bounds_survival() {
        let h = Distribution::hypoexponential(0.2, 0.2).unwrap();
        let t = h.tail_time(1e-13);
        assert!(h.survival_at(t) <= 1e-13);
        assert!(h.survival_at(0.99 * t) > 1e-13);
    }
}
