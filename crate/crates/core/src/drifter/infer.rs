//! Current inference: minimize the cosine loss against observed yearly flows
//! plus a Rayleigh-quotient smoothness penalty,
//!
//! ```text
//! J(f) = L(f, f̂) + ⟨f, Δ f⟩ / ‖f‖²,   Δ = α_s Δ_X / T + α_t Δ_Y / |E|
//! ```
//!
//! on grade `(1, 0)` of the hex complex times the path on `T` years. Both
//! terms are invariant under positive rescaling of `f`, so the search runs
//! on the unit sphere.

use log::{debug, warn};
use rayon::prelude::*;

use super::hexgrid::HexGridComplex;
use super::loss::cosine_loss;
use super::trajectory::YearlyFlows;
use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::interpolate::SpatiotemporalFlow;
use crate::linalg::norm;
use crate::product::ProductComplex;
use crate::sparse::SparseOperator;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InferOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub rel_tol: f64,
    pub armijo: f64,
    pub initial_step: f64,
    /// Line search gives up below this step length.
    pub min_step: f64,
}

impl Default for InferOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            grad_tol: 1e-6,
            rel_tol: 1e-10,
            armijo: 1e-4,
            initial_step: 1.0,
            min_step: 1e-20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    GradientNorm,
    RelativeChange,
    MaxIterations,
    /// No step length reduced the objective, which stayed flat to rounding.
    Stalled,
}

/// `α_s Δ_X / T + α_t Δ_Y / |E|` on grade `(1, 0)` of `X × P_T`.
pub fn penalty_operator(
    x: &SimplicialComplex,
    steps: usize,
    alpha_s: f64,
    alpha_t: f64,
) -> Result<SparseOperator<f64>> {
    let edges = x.simplices(1).len();
    if steps == 0 || edges == 0 {
        return Err(Error::param("penalty needs at least one year and one edge"));
    }
    let z = ProductComplex::from_simplicial(x, &SimplicialComplex::path(steps));
    z.product_hodge_laplacian(1, 0, alpha_s / steps as f64, alpha_t / edges as f64)
}

/// The objective `J` for a fixed target, in grade `(1, 0)` ordering.
#[derive(Clone, Debug)]
pub struct DrifterObjective {
    target: Vec<f64>,
    support: Vec<bool>,
    target_norm: f64,
    penalty: SparseOperator<f64>,
}

impl DrifterObjective {
    pub fn new(target: Vec<f64>, penalty: SparseOperator<f64>) -> Result<Self> {
        if penalty.nrows() != target.len() || penalty.ncols() != target.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{n}x{n} penalty", n = target.len()),
                actual: format!("{}x{}", penalty.nrows(), penalty.ncols()),
            });
        }
        let target_norm = norm(&target);
        if target_norm == 0.0 {
            return Err(Error::param("training flows are all zero"));
        }
        let support = target.iter().map(|&v| v != 0.0).collect();
        Ok(Self {
            target,
            support,
            target_norm,
            penalty,
        })
    }

    pub fn for_flows(
        grid: &HexGridComplex,
        train: &YearlyFlows,
        alpha_s: f64,
        alpha_t: f64,
    ) -> Result<Self> {
        let penalty = penalty_operator(grid.complex(), train.years.count, alpha_s, alpha_t)?;
        Self::new(train.to_bigraded(), penalty)
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn loss(&self, f: &[f64]) -> Result<f64> {
        cosine_loss(f, &self.target)
    }

    /// `⟨f, Δ f⟩ / ‖f‖²`.
    pub fn penalty(&self, f: &[f64]) -> f64 {
        let ff: f64 = f.iter().map(|v| v * v).sum();
        let q: f64 = self
            .penalty
            .matvec(f)
            .iter()
            .zip(f)
            .map(|(a, b)| a * b)
            .sum();
        q / ff
    }

    pub fn value(&self, f: &[f64]) -> Result<f64> {
        Ok(self.loss(f)? + self.penalty(f))
    }

    pub fn gradient(&self, f: &[f64]) -> Vec<f64> {
        let mut dot = 0.0;
        let mut pp = 0.0;
        for ((&fi, &ti), &on) in f.iter().zip(&self.target).zip(&self.support) {
            if on {
                dot += fi * ti;
                pp += fi * fi;
            }
        }
        let ff: f64 = f.iter().map(|v| v * v).sum();
        let df = self.penalty.matvec(f);
        let rayleigh = df.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() / ff;
        let pn = pp.sqrt();
        (0..f.len())
            .map(|i| {
                let mut g = 2.0 * (df[i] - rayleigh * f[i]) / ff;
                if pn > 0.0 && self.support[i] {
                    let dcos = self.target[i] / (pn * self.target_norm)
                        - dot * f[i] / (pn.powi(3) * self.target_norm);
                    g -= 0.5 * dcos;
                }
                g
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Inference {
    pub flow: YearlyFlows,
    pub objective: f64,
    pub train_loss: f64,
    pub penalty: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub stop: StopReason,
}

/// Final iterate of [`minimize`].
#[derive(Clone, Debug)]
pub struct Descent {
    pub f: Vec<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub stop: StopReason,
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}

/// Projected gradient descent on the unit sphere from the normalized
/// target, with Armijo backtracking (halving) and step doubling after each
/// accepted step.
pub fn minimize(obj: &DrifterObjective, opts: &InferOptions) -> Result<Descent> {
    let mut f = unit(obj.target());
    let mut j = obj.value(&f)?;
    let mut eta = opts.initial_step;
    for it in 0..opts.max_iter {
        let g = obj.gradient(&f);
        let grad_norm = norm(&g);
        if grad_norm <= opts.grad_tol {
            return Ok(Descent {
                f,
                objective: j,
                grad_norm,
                iterations: it,
                stop: StopReason::GradientNorm,
            });
        }
        let (next, jn) = loop {
            let trial: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a - eta * b).collect();
            let trial = unit(&trial);
            let jt = obj.value(&trial)?;
            if jt <= j - opts.armijo * eta * grad_norm * grad_norm {
                break (trial, jt);
            }
            eta /= 2.0;
            if eta < opts.min_step {
                if jt > j + 1e-12 * j.abs().max(1.0) {
                    return Err(Error::Solver(format!(
                        "descent diverged at iteration {it}: objective {j:e} rose to {jt:e} at step {eta:e}, gradient norm {grad_norm:e}"
                    )));
                }
                debug!("line search stalled at iteration {it}, objective {j:e}");
                return Ok(Descent {
                    f,
                    objective: j,
                    grad_norm,
                    iterations: it,
                    stop: StopReason::Stalled,
                });
            }
        };
        let rel = (j - jn).abs() / j.abs().max(f64::MIN_POSITIVE);
        f = next;
        j = jn;
        eta *= 2.0;
        if rel <= opts.rel_tol {
            let grad_norm = norm(&obj.gradient(&f));
            return Ok(Descent {
                f,
                objective: j,
                grad_norm,
                iterations: it + 1,
                stop: StopReason::RelativeChange,
            });
        }
    }
    let grad_norm = norm(&obj.gradient(&f));
    Ok(Descent {
        f,
        objective: j,
        grad_norm,
        iterations: opts.max_iter,
        stop: StopReason::MaxIterations,
    })
}

pub fn infer_currents(
    grid: &HexGridComplex,
    train: &YearlyFlows,
    alpha_s: f64,
    alpha_t: f64,
    opts: &InferOptions,
) -> Result<Inference> {
    let obj = DrifterObjective::for_flows(grid, train, alpha_s, alpha_t)?;
    let Descent {
        f,
        objective,
        grad_norm,
        iterations,
        stop,
    } = minimize(&obj, opts)?;
    if stop == StopReason::MaxIterations {
        debug!("alpha_s={alpha_s} alpha_t={alpha_t}: iteration cap reached, gradient norm {grad_norm:e}");
    }
    let train_loss = obj.loss(&f)?;
    let penalty = obj.penalty(&f);
    let flows = SpatiotemporalFlow::from_bigraded(train.years.count, grid.edge_count(), &f)?;
    Ok(Inference {
        flow: YearlyFlows {
            years: train.years,
            flows,
        },
        objective,
        train_loss,
        penalty,
        grad_norm,
        iterations,
        stop,
    })
}

/// `{0} ∪ {10^i : i = 0, …, −5}`.
pub fn hyperparameter_grid() -> Vec<f64> {
    vec![0.0, 1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-5]
}

/// Every `(alpha_s, alpha_t)` pair of a grid.
pub fn all_settings(alphas_s: &[f64], alphas_t: &[f64]) -> Vec<(f64, f64)> {
    alphas_s
        .iter()
        .flat_map(|&s| alphas_t.iter().map(move |&t| (s, t)))
        .collect()
}

/// Sweep concurrency: `PRODTOP_THREADS` if set to a positive integer,
/// otherwise the number of logical cores.
pub fn thread_cap() -> usize {
    std::env::var("PRODTOP_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha_s: f64,
    pub alpha_t: f64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub iters: usize,
    pub stop: StopReason,
}

/// Fit every setting on `train` and score it on `test`. Rows come back in
/// the order of `settings` regardless of scheduling.
pub fn sweep(
    grid: &HexGridComplex,
    train: &YearlyFlows,
    test: &YearlyFlows,
    settings: &[(f64, f64)],
    opts: &InferOptions,
) -> Result<Vec<SweepRow>> {
    let test_values = test.to_bigraded();
    if test_values.iter().all(|&v| v == 0.0) {
        return Err(Error::param("test flows are all zero"));
    }
    let run = || -> Result<Vec<SweepRow>> {
        settings
            .par_iter()
            .map(|&(alpha_s, alpha_t)| {
                let inf = infer_currents(grid, train, alpha_s, alpha_t, opts)?;
                let test_loss = cosine_loss(&inf.flow.to_bigraded(), &test_values)?;
                Ok(SweepRow {
                    alpha_s,
                    alpha_t,
                    train_loss: inf.train_loss,
                    test_loss,
                    iters: inf.iterations,
                    stop: inf.stop,
                })
            })
            .collect()
    };
    match rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap())
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(e) => {
            warn!("could not build a sweep thread pool ({e}); using the global pool");
            run()
        }
    }
}
