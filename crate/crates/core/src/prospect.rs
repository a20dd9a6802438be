//! Prospect-theoretic distortions.
//!
//! Probabilities are distorted by the Prelec weighting function
//! `w(p) = exp(-(-ln p)^c)` and outcomes by the Tversky valuation
//! `v(x) = x^c1` for gains and `-c2 (-x)^c3` for losses. Expected utility is
//! the special case where both maps are the identity.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Slack allowed on probabilities produced by floating-point products.
const PROB_SLACK: f64 = 1e-12;

/// Parameters of the prospect-theory distortions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtParams {
    /// Probability distortion exponent, `0 < c <= 1`.
    pub c: f64,
    /// Gain curvature.
    pub c1: f64,
    /// Loss aversion multiplier.
    pub c2: f64,
    /// Loss curvature.
    pub c3: f64,
}

impl PtParams {
    pub fn new(c: f64, c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let p = PtParams { c, c1, c2, c3 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "distortion exponent c = {} must lie in (0, 1]",
                self.c
            )));
        }
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("c3", self.c3)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// Behaviour model of a prosumer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ProspectParams {
    /// Expected utility: no distortion.
    #[default]
    Eut,
    /// Prospect theory with the given parameters.
    Pt(PtParams),
}

impl ProspectParams {
    pub fn pt(c: f64, c1: f64, c2: f64, c3: f64) -> Result<Self> {
        PtParams::new(c, c1, c2, c3).map(ProspectParams::Pt)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProspectParams::Eut => Ok(()),
            ProspectParams::Pt(p) => p.validate(),
        }
    }

    pub fn is_eut(&self) -> bool {
        matches!(self, ProspectParams::Eut)
    }

    /// Probability weight. Rejects `p` outside `[0, 1]`.
    pub fn weight(&self, p: f64) -> Result<f64> {
        if !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&p) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        Ok(self.weight_clamped(p))
    }

    /// Probability weight for a `p` already known to be a probability, up to
    /// rounding. Values are clamped into `[0, 1]`; `w(0) = 0` by continuity.
    #[inline]
    pub fn weight_clamped(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            ProspectParams::Eut => p,
            ProspectParams::Pt(pt) => {
                if p == 0.0 {
                    0.0
                } else if p == 1.0 {
                    1.0
                } else {
                    libm::exp(-libm::pow(-libm::log(p), pt.c))
                }
            }
        }
    }

    /// Valuation of an outcome relative to the zero reference point.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self {
            ProspectParams::Eut => x,
            ProspectParams::Pt(pt) => {
                if x >= 0.0 {
                    libm::pow(x, pt.c1)
                } else {
                    -pt.c2 * libm::pow(-x, pt.c3)
                }
            }
        }
    }

    /// Expected prospect `sum_l w(p_l) v(x_l)`.
    ///
    /// Atoms are weighted one by one; outcomes with equal value are not
    /// merged first.
    pub fn expected_prospect(&self, lottery: &Lottery) -> f64 {
        lottery
            .outcomes
            .iter()
            .zip(&lottery.probs)
            .map(|(&x, &p)| self.weight_clamped(p) * self.value(x))
            .sum()
    }
}

/// A finite lottery. The probabilities may sum to less than one, which is
/// how sub-lotteries appear inside per-atom sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Lottery {
    outcomes: Vec<f64>,
    probs: Vec<f64>,
}

impl Lottery {
    pub fn new(outcomes: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.len() != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} outcomes but {} probabilities",
                outcomes.len(),
                probs.len()
            )));
        }
        if let Some(&p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + PROB_SLACK {
            return Err(Error::InvalidParameter(format!(
                "lottery probabilities sum to {total} > 1"
            )));
        }
        Ok(Lottery { outcomes, probs })
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Plain expectation `sum_l p_l x_l`.
    pub fn expectation(&self) -> f64 {
        self.outcomes.iter().zip(&self.probs).map(|(x, p)| x * p).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn section_six(c: f64, c2: f64) -> ProspectParams {
        ProspectParams::pt(c, 0.5, c2, 0.3).unwrap()
    }

    #[test]
    fn weight_fixed_points() {
        let pt = section_six(0.8, 1.0);
        assert_eq!(pt.weight(1.0).unwrap(), 1.0);
        assert_eq!(pt.weight(0.0).unwrap(), 0.0);
        let inv_e = libm::exp(-1.0);
        assert_abs_diff_eq!(pt.weight(inv_e).unwrap(), inv_e, epsilon = 1e-15);
    }

    #[test]
    fn weight_at_half() {
        // exp(-(ln 2)^0.8) evaluated with 30-digit arithmetic (mpmath).
        let pt = section_six(0.8, 1.0);
        assert_abs_diff_eq!(pt.weight(0.5).unwrap(), 0.47432371775586135, epsilon = 1e-14);
    }

    #[test]
    fn weight_rejects_out_of_range() {
        let pt = section_six(0.8, 1.0);
        assert!(matches!(pt.weight(1.5), Err(Error::ProbabilityOutOfRange(_))));
        assert!(matches!(pt.weight(-0.1), Err(Error::ProbabilityOutOfRange(_))));
        assert!(ProspectParams::Eut.weight(2.0).is_err());
    }

    #[test]
    fn value_examples() {
        let any = section_six(0.8, 1.0);
        assert_eq!(any.value(0.0), 0.0);
        assert_abs_diff_eq!(any.value(4.0), 2.0, epsilon = 1e-15);
        let loss = ProspectParams::pt(0.8, 0.5, 3.0, 0.3).unwrap();
        assert_abs_diff_eq!(loss.value(-1.0), -3.0, epsilon = 1e-15);
        assert_eq!(ProspectParams::Eut.value(-2.5), -2.5);
    }

    #[test]
    fn expected_prospect_examples() {
        let lot = Lottery::new(vec![1.0, -1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(ProspectParams::Eut.expected_prospect(&lot), 0.0);

        let identity = ProspectParams::pt(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(identity.expected_prospect(&lot), 0.0, epsilon = 1e-15);

        // w(0.5) * (1 - 1) with the weight computed at 30 digits.
        let pt = section_six(0.8, 1.0);
        assert_abs_diff_eq!(pt.expected_prospect(&lot), 0.0, epsilon = 1e-15);
        let skew = Lottery::new(vec![4.0, -1.0], vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(pt.expected_prospect(&skew), 0.47432371775586135, epsilon = 1e-14);
    }

    #[test]
    fn parameter_validation() {
        assert!(ProspectParams::pt(0.0, 0.5, 1.0, 0.3).is_err());
        assert!(ProspectParams::pt(1.2, 0.5, 1.0, 0.3).is_err());
        assert!(ProspectParams::pt(0.8, -0.5, 1.0, 0.3).is_err());
        assert!(ProspectParams::pt(0.8, 0.5, 0.0, 0.3).is_err());
        assert!(Lottery::new(vec![1.0], vec![0.5, 0.5]).is_err());
        assert!(Lottery::new(vec![1.0, 2.0], vec![0.7, 0.5]).is_err());
    }
}
