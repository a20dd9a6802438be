use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// Distribution of the net generated energy (harvest minus self-discharge)
/// over integer offsets, with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct GenPmf {
    /// Sorted by offset, no duplicate offsets.
    atoms: Vec<(i64, f64)>,
}

impl GenPmf {
    /// Builds a pmf from `(offset, probability)` pairs. Duplicate offsets are
    /// merged; zero-probability atoms are kept so that the support is
    /// reported as given.
    pub fn new(entries: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        let mut atoms: Vec<(i64, f64)> = Vec::new();
        for (k, p) in entries {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "generation probability at offset {k} is {p}"
                )));
            }
            match atoms.binary_search_by_key(&k, |a| a.0) {
                Ok(i) => atoms[i].1 += p,
                Err(i) => atoms.insert(i, (k, p)),
            }
        }
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("generation pmf has empty support".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "generation pmf sums to {total}, expected 1"
            )));
        }
        for a in &mut atoms {
            a.1 /= total;
        }
        Ok(GenPmf { atoms })
    }

    /// Degenerate distribution at `offset`.
    pub fn point(offset: i64) -> Self {
        GenPmf { atoms: alloc::vec![(offset, 1.0)] }
    }

    pub fn atoms(&self) -> &[(i64, f64)] {
        &self.atoms
    }

    pub fn prob(&self, offset: i64) -> f64 {
        self.atoms
            .binary_search_by_key(&offset, |a| a.0)
            .map(|i| self.atoms[i].1)
            .unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(k, p)| k as f64 * p).sum()
    }

    /// `min_{|k| <= s_max} P{G = k}`; positive exactly when every storage
    /// transition has positive probability.
    pub fn lambda(&self, s_max: u32) -> f64 {
        let s = s_max as i64;
        (-s..=s).map(|k| self.prob(k)).fold(f64::INFINITY, f64::min)
    }
}

fn upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}

fn lower_tail(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Standard normal mass of `[a, b]`, evaluated on whichever tail keeps the
/// difference well conditioned.
fn normal_mass(a: f64, b: f64) -> f64 {
    let m = if a >= 0.0 {
        upper_tail(a) - upper_tail(b)
    } else if b <= 0.0 {
        lower_tail(b) - lower_tail(a)
    } else {
        1.0 - lower_tail(a) - upper_tail(b)
    };
    m.max(0.0)
}

/// Integer-bin discretisation of `N(mu, sigma2)` on `[-bound, bound]`.
///
/// Interior offsets get `Phi((k + 1/2 - mu)/sigma) - Phi((k - 1/2 - mu)/sigma)`;
/// the mass beyond `+-(bound - 1/2)` is folded into the two endpoints.
pub fn discretize_gaussian(mu: f64, sigma2: f64, support_bound: u32) -> Result<GenPmf> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidParameter(format!("variance {sigma2} must be positive")));
    }
    if !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mean {mu} must be finite")));
    }
    if support_bound == 0 {
        return Err(Error::InvalidParameter("support bound must be at least 1".into()));
    }
    let sigma = libm::sqrt(sigma2);
    let b = support_bound as i64;
    let z = |x: f64| (x - mu) / sigma;
    let mut atoms = Vec::with_capacity(2 * support_bound as usize + 1);
    for k in -b..=b {
        let kf = k as f64;
        let p = if k == -b {
            lower_tail(z(kf + 0.5))
        } else if k == b {
            upper_tail(z(kf - 0.5))
        } else {
            normal_mass(z(kf - 0.5), z(kf + 0.5))
        };
        atoms.push((k, p));
    }
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    for a in &mut atoms {
        a.1 /= total;
    }
    Ok(GenPmf { atoms })
}
