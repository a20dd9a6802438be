use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::linalg::{null_space, Matrix};
use crate::lp;
use crate::mdp::{balance_constraints, OccupationMeasure};
use crate::model::TransitionKernel;
use crate::Result;

use super::PolytopeSampler;

const NULL_TOL: f64 = 1e-10;
const DIR_TOL: f64 = 1e-13;
/// Below this inscribed radius the polytope is treated as flat.
const MIN_RADIUS: f64 = 1e-9;

/// Largest ball inside the occupation polytope, restricted to its affine
/// hull. Returns the center and radius.
pub fn chebyshev_center(kernel: &TransitionKernel) -> Result<(Vec<f64>, f64)> {
    let (a, b) = balance_constraints(kernel);
    let n = a.cols();
    let z = null_space(&a, NULL_TOL);
    let norms: Vec<f64> =
        (0..n).map(|r| libm::sqrt((0..z.cols()).map(|c| z[(r, c)] * z[(r, c)]).sum())).collect();
    // variables: rho (n), radius (1), slack (n)
    let m = a.rows();
    let width = 2 * n + 1;
    let big = Matrix::from_fn(m + n, width, |r, c| {
        if r < m {
            if c < n {
                a[(r, c)]
            } else {
                0.0
            }
        } else {
            let k = r - m;
            if c == k {
                1.0
            } else if c == n {
                -norms[k]
            } else if c == n + 1 + k {
                -1.0
            } else {
                0.0
            }
        }
    });
    let mut rhs = b;
    rhs.extend(core::iter::repeat_n(0.0, n));
    let mut cost = vec![0.0; width];
    cost[n] = 1.0;
    let sol = lp::maximize(&cost, &big, &rhs)?;
    Ok((sol.x[..n].to_vec(), sol.x[n]))
}

/// Markov chain over an occupation polytope used to draw policies.
///
/// The hit-and-run chain starts at the Chebyshev center, discards
/// `burn_in` steps before its first draw and `thinning` steps between
/// consecutive draws. Flat polytopes fall back to random vertex mixtures.
#[derive(Debug, Clone)]
pub struct PolytopeChain {
    n_states: usize,
    n_actions: usize,
    kind: PolytopeSampler,
    vertices: Vec<Vec<f64>>,
    z: Matrix,
    center: Vec<f64>,
    x: Vec<f64>,
    burn_in: usize,
    thinning: usize,
    started: bool,
}

impl PolytopeChain {
    pub fn new(
        kernel: &TransitionKernel,
        vertices: &[OccupationMeasure],
        kind: PolytopeSampler,
        burn_in: usize,
        thinning: usize,
    ) -> Result<Self> {
        let verts: Vec<Vec<f64>> = vertices.iter().map(|v| v.as_slice().to_vec()).collect();
        let (a, _) = balance_constraints(kernel);
        let z = null_space(&a, NULL_TOL);
        let mut kind = kind;
        let (center, radius) = if kind == PolytopeSampler::HitAndRun && z.cols() > 0 {
            chebyshev_center(kernel)?
        } else {
            (verts.first().cloned().unwrap_or_default(), 0.0)
        };
        if kind == PolytopeSampler::HitAndRun && z.cols() > 0 && radius < MIN_RADIUS {
            log::warn!("occupation polytope has no interior (radius {radius:e}); sampling vertex mixtures");
            kind = PolytopeSampler::VertexMixture;
        }
        Ok(PolytopeChain {
            n_states: kernel.n_states(),
            n_actions: kernel.n_actions(),
            kind,
            vertices: verts,
            x: center.clone(),
            center,
            z,
            burn_in,
            thinning,
            started: false,
        })
    }

    pub fn kind(&self) -> PolytopeSampler {
        self.kind
    }

    pub fn sample(&mut self, rng: &mut impl Rng) -> OccupationMeasure {
        let mut rho = match self.kind {
            _ if self.z.cols() == 0 => self.center.clone(),
            PolytopeSampler::HitAndRun => {
                let steps = if self.started { self.thinning.max(1) } else { self.burn_in.max(1) };
                self.started = true;
                for _ in 0..steps {
                    self.step(rng);
                }
                self.x.clone()
            }
            PolytopeSampler::VertexMixture => self.vertex_mixture(rng),
        };
        rho.iter_mut().for_each(|v| *v = v.max(0.0));
        let sum: f64 = rho.iter().sum();
        rho.iter_mut().for_each(|v| *v /= sum);
        OccupationMeasure::new(self.n_states, self.n_actions, rho).expect("normalized sample")
    }

    fn step(&mut self, rng: &mut impl Rng) {
        let n = self.x.len();
        let k = self.z.cols();
        let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        let mut d = self.z.mul_vec(&g);
        let norm = libm::sqrt(d.iter().map(|v| v * v).sum::<f64>());
        if norm == 0.0 {
            return;
        }
        d.iter_mut().for_each(|v| *v /= norm);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            if d[i] > DIR_TOL {
                lo = lo.max(-self.x[i] / d[i]);
            } else if d[i] < -DIR_TOL {
                hi = hi.min(-self.x[i] / d[i]);
            }
        }
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return;
        }
        let t = lo + rng.random::<f64>() * (hi - lo);
        for (xi, di) in self.x.iter_mut().zip(&d) {
            *xi = (*xi + t * di).max(0.0);
        }
        self.reproject();
    }

    /// Removes drift off the affine hull accumulated through rounding.
    fn reproject(&mut self) {
        let diff: Vec<f64> = self.x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let k = self.z.cols();
        let coef: Vec<f64> =
            (0..k).map(|c| (0..diff.len()).map(|r| self.z[(r, c)] * diff[r]).sum()).collect();
        let back = self.z.mul_vec(&coef);
        for ((x, c), b) in self.x.iter_mut().zip(&self.center).zip(&back) {
            *x = (c + b).max(0.0);
        }
    }

    fn vertex_mixture(&self, rng: &mut impl Rng) -> Vec<f64> {
        let w: Vec<f64> = self.vertices.iter().map(|_| Exp1.sample(rng)).collect();
        let total: f64 = w.iter().sum();
        let mut rho = vec![0.0; self.n_states * self.n_actions];
        for (v, wk) in self.vertices.iter().zip(&w) {
            for (r, x) in rho.iter_mut().zip(v) {
                *r += wk / total * x;
            }
        }
        rho
    }
}
