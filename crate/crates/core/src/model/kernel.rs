use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{step_storage, ActionSpace};
use super::pmf::GenPmf;
use crate::{Error, Result};

/// Per-prosumer transition probabilities `w[next][action][state]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    n_states: usize,
    n_actions: usize,
    w: Vec<f64>,
}

impl TransitionKernel {
    /// Builds a kernel from a closure `f(next, action, state)`, checking that
    /// every `(action, state)` column is a probability distribution.
    pub fn from_fn(
        n_states: usize,
        n_actions: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut w = vec![0.0; n_states * n_actions * n_states];
        for x in 0..n_states {
            for a in 0..n_actions {
                for s in 0..n_states {
                    w[(x * n_actions + a) * n_states + s] = f(x, a, s);
                }
            }
        }
        let k = TransitionKernel { n_states, n_actions, w };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::InvalidParameter("kernel needs at least one state and action".into()));
        }
        for a in 0..self.n_actions {
            for s in 0..self.n_states {
                let mut sum = 0.0;
                for x in 0..self.n_states {
                    let p = self.prob(x, a, s);
                    if !(p >= 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "negative transition probability {p} at ({x}, {a}, {s})"
                        )));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "transition column (action {a}, state {s}) sums to {sum}"
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn prob(&self, next: usize, action: usize, state: usize) -> f64 {
        self.w[(next * self.n_actions + action) * self.n_states + state]
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Smallest entry of the kernel.
    pub fn min_entry(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `w[x][a][s] = P{ min([G + s + d - l]^+, s_max) = x }`, with the mass that
/// clips at either end of the storage range accumulated on the boundary.
pub fn build_kernel(s_max: u32, actions: &ActionSpace, pmf: &GenPmf) -> Result<TransitionKernel> {
    let n_states = s_max as usize + 1;
    let n_actions = actions.n_actions();
    let mut w = vec![0.0; n_states * n_actions * n_states];
    for s in 0..n_states {
        for a in 0..n_actions {
            let act = actions.action(s as u32, a);
            for &(g, p) in pmf.atoms() {
                let x = step_storage(s as i64, g, act.demand as i64, act.consume as i64, s_max as i64);
                w[(x as usize * n_actions + a) * n_states + s] += p;
            }
        }
    }
    let k = TransitionKernel { n_states, n_actions, w };
    k.validate()?;
    Ok(k)
}
