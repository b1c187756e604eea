//! Joint space/time interpolation of partially observed edge flows.
//!
//! A flow over `T` time steps on the edges of a simplicial complex `X` is
//! the minimizer of
//!
//! ```text
//! MSE(f|Ω, f̂|Ω) + α_s Σ_t f_tᵀ L_s f_t + α_t Σ_e f^eᵀ L_t f^e + λ fᵀf
//! ```
//!
//! where `L_s` is the edge Laplacian of `X` and `L_t` the graph Laplacian of
//! the path on `T` vertices. The two smoothness sums are the quadratic form
//! of the weighted product Laplacian on grade `(1, 0)` of `X × P_T`, so the
//! minimizer solves the symmetric positive-definite system
//! `(M/|Ω| + α_s L_s ⊗ I + α_t I ⊗ L_t + λ I) f = m/|Ω|`.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{ChainComplex, SimplicialComplex};
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, SolveMethod};
use crate::product::ProductComplex;
use crate::sparse::SparseOperator;
use crate::spectral::{hodge_decompose, hodge_laplacian, DEFAULT_RANK_TOL};

/// Observed entries `(t, edge, value)` of a spatiotemporal flow.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowObservation {
    steps: usize,
    edge_count: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl FlowObservation {
    pub fn new(
        steps: usize,
        edge_count: usize,
        mut entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        entries.sort_by_key(|&(t, e, _)| (t, e));
        for w in entries.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::param(format!(
                    "duplicate observation at t={}, edge={}",
                    w[0].0, w[0].1
                )));
            }
        }
        if let Some(&(t, e, _)) = entries
            .iter()
            .find(|&&(t, e, _)| t >= steps || e >= edge_count)
        {
            return Err(Error::param(format!(
                "observation (t={t}, edge={e}) outside {steps} steps x {edge_count} edges"
            )));
        }
        if let Some(&(t, e, v)) = entries.iter().find(|&&(_, _, v)| !v.is_finite()) {
            return Err(Error::param(format!(
                "non-finite observation {v} at t={t}, edge={e}"
            )));
        }
        Ok(Self {
            steps,
            edge_count,
            entries,
        })
    }

    /// Observe `truth` at the given `(t, edge)` positions.
    pub fn sample(truth: &SpatiotemporalFlow, at: &[(usize, usize)]) -> Result<Self> {
        let entries = at.iter().map(|&(t, e)| (t, e, truth.get(t, e))).collect();
        Self::new(truth.steps(), truth.edge_count(), entries)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A flow value for every (time step, edge), stored time-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatiotemporalFlow {
    steps: usize,
    edge_count: usize,
    values: Vec<f64>,
}

impl SpatiotemporalFlow {
    pub fn zeros(steps: usize, edge_count: usize) -> Self {
        Self {
            steps,
            edge_count,
            values: vec![0.0; steps * edge_count],
        }
    }

    /// `values[t * edge_count + e]` is the flow on edge `e` at step `t`.
    pub fn from_time_major(steps: usize, edge_count: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != steps * edge_count {
            return Err(Error::ShapeMismatch {
                expected: format!("{steps}x{edge_count}"),
                actual: values.len().to_string(),
            });
        }
        Ok(Self {
            steps,
            edge_count,
            values,
        })
    }

    pub fn from_snapshots(snapshots: &[Vec<f64>]) -> Result<Self> {
        let edge_count = snapshots.first().map_or(0, Vec::len);
        if let Some(bad) = snapshots.iter().find(|s| s.len() != edge_count) {
            return Err(Error::ShapeMismatch {
                expected: edge_count.to_string(),
                actual: bad.len().to_string(),
            });
        }
        Ok(Self {
            steps: snapshots.len(),
            edge_count,
            values: snapshots.concat(),
        })
    }

    /// Build from the grade `(1, 0)` ordering of `X × P_T`, i.e. `values[e * T + t]`.
    pub fn from_bigraded(steps: usize, edge_count: usize, bigraded: &[f64]) -> Result<Self> {
        if bigraded.len() != steps * edge_count {
            return Err(Error::ShapeMismatch {
                expected: format!("{}", steps * edge_count),
                actual: bigraded.len().to_string(),
            });
        }
        let mut values = vec![0.0; bigraded.len()];
        for e in 0..edge_count {
            for t in 0..steps {
                values[t * edge_count + e] = bigraded[e * steps + t];
            }
        }
        Ok(Self {
            steps,
            edge_count,
            values,
        })
    }

    /// Values in the grade `(1, 0)` ordering (`e * T + t`).
    pub fn to_bigraded(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.values.len()];
        for t in 0..self.steps {
            for e in 0..self.edge_count {
                out[e * self.steps + t] = self.values[t * self.edge_count + e];
            }
        }
        out
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn get(&self, t: usize, e: usize) -> f64 {
        self.values[t * self.edge_count + e]
    }

    pub fn set(&mut self, t: usize, e: usize, v: f64) {
        self.values[t * self.edge_count + e] = v;
    }

    /// `f_t`, the flow on all edges at step `t`.
    pub fn snapshot(&self, t: usize) -> &[f64] {
        &self.values[t * self.edge_count..(t + 1) * self.edge_count]
    }

    /// `f^e`, the flow on edge `e` over time.
    pub fn edge_series(&self, e: usize) -> Vec<f64> {
        (0..self.steps).map(|t| self.get(t, e)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm(&self.values)
    }

    /// `‖self - truth‖ / ‖truth‖`.
    pub fn relative_error(&self, truth: &SpatiotemporalFlow) -> f64 {
        let diff: f64 = self
            .values
            .iter()
            .zip(&truth.values)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        diff.sqrt() / truth.norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolationParams {
    pub alpha_s: f64,
    pub alpha_t: f64,
    pub lambda: f64,
}

impl InterpolationParams {
    pub fn new(alpha_s: f64, alpha_t: f64, lambda: f64) -> Result<Self> {
        let p = Self {
            alpha_s,
            alpha_t,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha_s", self.alpha_s), ("alpha_t", self.alpha_t)] {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::param(format!(
                    "{name} must be finite and non-negative, got {a}"
                )));
            }
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Interpolation {
    pub flow: SpatiotemporalFlow,
    pub relative_residual: f64,
    pub method: SolveMethod,
    /// No observations: the returned flow is the zero minimizer.
    pub underdetermined: bool,
}

/// Mean squared error between two equally long lists of masked values.
/// An empty mask gives 0.
pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: a.len().to_string(),
            actual: b.len().to_string(),
        });
    }
    if a.is_empty() {
        warn!("mean squared error over an empty mask; returning 0");
        return Ok(0.0);
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64)
}

/// MSE between `f` and the observations, over the observed positions.
pub fn observation_mse(f: &SpatiotemporalFlow, obs: &FlowObservation) -> Result<f64> {
    let predicted: Vec<f64> = obs.entries.iter().map(|&(t, e, _)| f.get(t, e)).collect();
    let observed: Vec<f64> = obs.entries.iter().map(|&(_, _, v)| v).collect();
    mse(&predicted, &observed)
}

fn check_flow_shape(x: &SimplicialComplex, f: &SpatiotemporalFlow) -> Result<()> {
    if f.edge_count() != x.count(1) {
        return Err(Error::ShapeMismatch {
            expected: format!("{} edges", x.count(1)),
            actual: format!("{} edges", f.edge_count()),
        });
    }
    Ok(())
}

/// Weighted Laplacian `α_s L_s ⊗ I + α_t I ⊗ L_t` on grade `(1, 0)` of `X × P_T`.
pub fn spatiotemporal_laplacian(
    x: &SimplicialComplex,
    steps: usize,
    alpha_s: f64,
    alpha_t: f64,
) -> Result<SparseOperator<f64>> {
    let z = ProductComplex::from_simplicial(x, &SimplicialComplex::path(steps));
    z.product_hodge_laplacian(1, 0, alpha_s, alpha_t)
}

/// `fᵀ (α_s L_s ⊗ I + α_t I ⊗ L_t) f` evaluated through the product Laplacian.
pub fn product_space_quadratic_form(
    x: &SimplicialComplex,
    f: &SpatiotemporalFlow,
    alpha_s: f64,
    alpha_t: f64,
) -> Result<f64> {
    check_flow_shape(x, f)?;
    let lap = spatiotemporal_laplacian(x, f.steps(), alpha_s, alpha_t)?;
    let v = f.to_bigraded();
    let lv = lap.matvec(&v);
    Ok(v.iter().zip(&lv).map(|(a, b)| a * b).sum())
}

/// The interpolation objective evaluated term by term: per-snapshot
/// spatial sums and per-edge temporal sums.
pub fn objective(
    x: &SimplicialComplex,
    obs: &FlowObservation,
    p: &InterpolationParams,
    f: &SpatiotemporalFlow,
) -> Result<f64> {
    check_flow_shape(x, f)?;
    let ls = hodge_laplacian(x, 1).to_f64();
    let lt = hodge_laplacian(&SimplicialComplex::path(f.steps()), 0).to_f64();
    let quad = |op: &SparseOperator<f64>, v: &[f64]| -> f64 {
        op.matvec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    };
    let spatial: f64 = (0..f.steps()).map(|t| quad(&ls, f.snapshot(t))).sum();
    let temporal: f64 = (0..f.edge_count())
        .map(|e| quad(&lt, &f.edge_series(e)))
        .sum();
    let ridge: f64 = f.values().iter().map(|v| v * v).sum();
    Ok(observation_mse(f, obs)? + p.alpha_s * spatial + p.alpha_t * temporal + p.lambda * ridge)
}

/// Normal-equation system `A f = b` of the objective, in grade `(1, 0)` ordering.
pub fn normal_equations(
    x: &SimplicialComplex,
    obs: &FlowObservation,
    p: &InterpolationParams,
) -> Result<(SparseOperator<f64>, Vec<f64>)> {
    p.validate()?;
    if obs.edge_count() != x.count(1) {
        return Err(Error::ShapeMismatch {
            expected: format!("{} edges", x.count(1)),
            actual: format!("{} edges", obs.edge_count()),
        });
    }
    let steps = obs.steps();
    let lap = spatiotemporal_laplacian(x, steps, p.alpha_s, p.alpha_t)?;
    let space = lap.rows();
    let n = space.len;
    let mut b = vec![0.0; n];
    let mut diag: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, p.lambda)).collect();
    if !obs.is_empty() {
        let w = 1.0 / obs.len() as f64;
        for &(t, e, v) in obs.entries() {
            let i = e * steps + t;
            diag.push((i, i, w));
            b[i] += w * v;
        }
    }
    let a = lap.add(&SparseOperator::from_triplets(space, space, diag))?;
    Ok((a, b))
}

/// Gradient of [`objective`], `2 (A f - b)`, returned time-major.
pub fn objective_gradient(
    x: &SimplicialComplex,
    obs: &FlowObservation,
    p: &InterpolationParams,
    f: &SpatiotemporalFlow,
) -> Result<SpatiotemporalFlow> {
    check_flow_shape(x, f)?;
    let (a, b) = normal_equations(x, obs, p)?;
    let g: Vec<f64> = a
        .matvec(&f.to_bigraded())
        .iter()
        .zip(&b)
        .map(|(u, v)| 2.0 * (u - v))
        .collect();
    SpatiotemporalFlow::from_bigraded(f.steps(), f.edge_count(), &g)
}

pub fn interpolate_flow(
    x: &SimplicialComplex,
    obs: &FlowObservation,
    p: &InterpolationParams,
) -> Result<Interpolation> {
    if x.count(1) == 0 {
        return Err(Error::param("complex has no edges"));
    }
    if obs.steps() == 0 {
        return Err(Error::param("need at least one time step"));
    }
    let (a, b) = normal_equations(x, obs, p)?;
    let underdetermined = obs.is_empty();
    if underdetermined {
        warn!("no observations: interpolation is under-determined, returning the zero flow");
    }
    let report = solve_spd(&a, &b)?;
    let flow = SpatiotemporalFlow::from_bigraded(obs.steps(), obs.edge_count(), &report.x)?;
    Ok(Interpolation {
        flow,
        relative_residual: report.relative_residual,
        method: report.method,
        underdetermined,
    })
}

/// A smooth ground-truth flow: harmonic and gradient components whose
/// coefficients follow the two lowest temporal eigenmodes of the path.
pub fn smooth_flow(x: &SimplicialComplex, steps: usize, seed: u64) -> Result<SpatiotemporalFlow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hodge = hodge_decompose(x, 1, DEFAULT_RANK_TOL)?;
    let ne = x.count(1);
    let mut values = vec![0.0; steps * ne];
    let slow = |t: usize| -> f64 {
        if steps <= 1 {
            0.0
        } else {
            (std::f64::consts::PI * (t as f64 + 0.5) / steps as f64).cos()
        }
    };
    let mut add = |basis: &nalgebra::DMatrix<f64>, scale: f64, rng: &mut ChaCha8Rng| {
        for c in 0..basis.ncols() {
            let base = scale * (rng.random::<f64>() * 2.0 - 1.0);
            let drift = 0.3 * scale * (rng.random::<f64>() * 2.0 - 1.0);
            for t in 0..steps {
                let coef = base + drift * slow(t);
                for e in 0..ne {
                    values[t * ne + e] += coef * basis[(e, c)];
                }
            }
        }
    };
    add(&hodge.harmonic, 1.0, &mut rng);
    add(&hodge.gradient, 0.2, &mut rng);
    SpatiotemporalFlow::from_time_major(steps, ne, values)
}

/// Scene and ablation for the three-snapshot toy problem: ten edges, one
/// filled triangle, two holes and five observed values.
pub mod toy {
    use super::*;

    pub const LAMBDA: f64 = 1e-6;

    /// `(alpha_t, alpha_s)` columns of the ablation table.
    pub const SETTINGS: [(f64, f64); 3] = [(0.0, 1.0), (0.01, 1.0), (1.0, 0.0)];

    #[derive(Clone, Debug)]
    pub struct ToyScene {
        pub complex: SimplicialComplex,
        pub truth: SpatiotemporalFlow,
        pub observations: FlowObservation,
    }

    #[derive(Clone, Copy, Debug, PartialEq)]
    pub struct AblationRow {
        pub alpha_t: f64,
        pub alpha_s: f64,
        pub rel_error: f64,
    }

    const EDGES: [(usize, usize); 10] = [
        (0, 1),
        (1, 2),
        (2, 3),
        (0, 3),
        (3, 4),
        (4, 5),
        (2, 5),
        (4, 6),
        (5, 6),
        (1, 7),
    ];

    /// Observed `(t, edge)` pairs: two edges at t=0, one at t=1, two at t=2.
    const OBSERVED: [(usize, (usize, usize)); 5] = [
        (0, (0, 1)),
        (0, (4, 5)),
        (1, (1, 2)),
        (2, (0, 3)),
        (2, (3, 4)),
    ];

    fn cycle_flow(sc: &SimplicialComplex, cycle: &[usize]) -> Vec<f64> {
        let mut f = vec![0.0; sc.count(1)];
        for (i, &u) in cycle.iter().enumerate() {
            let v = cycle[(i + 1) % cycle.len()];
            let (e, s) = sc.oriented_edge(u, v).expect("cycle follows edges");
            f[e] += s as f64;
        }
        f
    }

    pub fn scene() -> ToyScene {
        let tops: Vec<Vec<usize>> = EDGES
            .iter()
            .map(|&(u, v)| vec![u, v])
            .chain(std::iter::once(vec![4, 5, 6]))
            .collect();
        let sc = SimplicialComplex::new(&tops).expect("toy complex is well formed");
        let hodge = hodge_decompose(&sc, 1, DEFAULT_RANK_TOL).expect("positive tolerance");
        let h1 = hodge.project(&cycle_flow(&sc, &[0, 1, 2, 3])).harmonic;
        let h2 = hodge.project(&cycle_flow(&sc, &[5, 4, 3, 2])).harmonic;
        let b1 = sc.boundary(1).transpose().to_f64();
        let potential = [0.0, 0.1, 0.0, -0.1, 0.0, 0.1, 0.0, 0.0];
        let grad = b1.matvec(&potential);

        let a = [0.6, 0.8, 1.0];
        let b = [1.0, 0.9, 0.8];
        let snapshots: Vec<Vec<f64>> = (0..3)
            .map(|t| {
                let g = (t as f64 + 1.0) / 6.0;
                (0..sc.count(1))
                    .map(|e| a[t] * h1[e] + b[t] * h2[e] + g * grad[e])
                    .collect()
            })
            .collect();
        let truth = SpatiotemporalFlow::from_snapshots(&snapshots).expect("equal snapshot lengths");
        let at: Vec<(usize, usize)> = OBSERVED
            .iter()
            .map(|&(t, (u, v))| (t, sc.index_of(&[u, v]).expect("observed edge exists")))
            .collect();
        let observations = FlowObservation::sample(&truth, &at).expect("observations in range");
        ToyScene {
            complex: sc,
            truth,
            observations,
        }
    }

    pub fn ablation(scene: &ToyScene, settings: &[(f64, f64)]) -> Result<Vec<AblationRow>> {
        settings
            .iter()
            .map(|&(alpha_t, alpha_s)| {
                let p = InterpolationParams::new(alpha_s, alpha_t, LAMBDA)?;
                let sol = interpolate_flow(&scene.complex, &scene.observations, &p)?;
                Ok(AblationRow {
                    alpha_t,
                    alpha_s,
                    rel_error: sol.flow.relative_error(&scene.truth),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loop_complex() -> SimplicialComplex {
        SimplicialComplex::new(vec![
            vec![0, 1, 2],
            vec![2, 3],
            vec![3, 4],
            vec![4, 5],
            vec![2, 5],
            vec![1, 6],
        ])
        .unwrap()
    }

    #[test]
    fn observation_validation() {
        assert!(FlowObservation::new(2, 3, vec![(0, 1, 1.0), (0, 1, 2.0)]).is_err());
        assert!(FlowObservation::new(2, 3, vec![(2, 0, 1.0)]).is_err());
        assert!(FlowObservation::new(2, 3, vec![(0, 3, 1.0)]).is_err());
        assert!(FlowObservation::new(2, 3, vec![(1, 2, 1.0), (0, 0, 1.0)]).is_ok());
    }

    #[test]
    fn params_validation() {
        assert!(InterpolationParams::new(1.0, 1.0, 0.0).is_err());
        assert!(InterpolationParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(InterpolationParams::new(0.0, 0.0, 1e-12).is_ok());
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[3.0], &[1.0]).unwrap(), 4.0);
        assert_eq!(mse(&[], &[]).unwrap(), 0.0);
        assert!(mse(&[1.0], &[]).is_err());
    }

    #[test]
    fn mse_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..37).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let b: Vec<f64> = (0..37).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let mut total = 0.0;
        for i in 0..a.len() {
            let d = a[i] - b[i];
            total += d * d;
        }
        assert!((mse(&a, &b).unwrap() - total / 37.0).abs() < 1e-12);
    }

    #[test]
    fn bigraded_ordering_round_trip() {
        let f = SpatiotemporalFlow::from_snapshots(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]])
            .unwrap();
        assert_eq!(f.to_bigraded(), vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(
            SpatiotemporalFlow::from_bigraded(2, 3, &f.to_bigraded()).unwrap(),
            f
        );
    }

    #[test]
    fn fully_observed_without_smoothing_recovers_data() {
        let sc = loop_complex();
        let truth = smooth_flow(&sc, 4, 11).unwrap();
        let at: Vec<(usize, usize)> = (0..4)
            .flat_map(|t| (0..sc.count(1)).map(move |e| (t, e)))
            .collect();
        let obs = FlowObservation::sample(&truth, &at).unwrap();
        let p = InterpolationParams::new(0.0, 0.0, 1e-12).unwrap();
        let sol = interpolate_flow(&sc, &obs, &p).unwrap();
        assert!(sol.flow.relative_error(&truth) < 1e-6);
    }

    #[test]
    fn strong_temporal_smoothing_copies_a_snapshot() {
        let sc = loop_complex();
        let hodge = hodge_decompose(&sc, 1, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(hodge.dims().2, 1);
        let h: Vec<f64> = hodge.harmonic.column(0).iter().copied().collect();
        let truth = SpatiotemporalFlow::from_snapshots(&vec![h.clone(); 5]).unwrap();
        let at: Vec<(usize, usize)> = (0..sc.count(1)).map(|e| (2, e)).collect();
        let obs = FlowObservation::sample(&truth, &at).unwrap();
        let p = InterpolationParams::new(0.0, 1e3, 1e-9).unwrap();
        let sol = interpolate_flow(&sc, &obs, &p).unwrap();
        for t in 0..5 {
            for (e, &he) in h.iter().enumerate() {
                assert!((sol.flow.get(t, e) - he).abs() < 1e-4, "t={t} e={e}");
            }
        }
    }

    #[test]
    fn empty_observation_returns_zero() {
        let sc = loop_complex();
        let obs = FlowObservation::new(3, sc.count(1), vec![]).unwrap();
        let p = InterpolationParams::new(0.0, 0.0, 1e-6).unwrap();
        let sol = interpolate_flow(&sc, &obs, &p).unwrap();
        assert!(sol.underdetermined);
        assert!(sol.flow.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadratic_form_of_time_constant_and_harmonic_flows() {
        let sc = loop_complex();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let snap: Vec<f64> = (0..sc.count(1)).map(|_| rng.random::<f64>()).collect();
        let f = SpatiotemporalFlow::from_snapshots(&vec![snap; 4]).unwrap();
        assert!(
            product_space_quadratic_form(&sc, &f, 0.0, 1.0)
                .unwrap()
                .abs()
                < 1e-12
        );

        let hodge = hodge_decompose(&sc, 1, DEFAULT_RANK_TOL).unwrap();
        let h: Vec<f64> = hodge.harmonic.column(0).iter().copied().collect();
        let f = SpatiotemporalFlow::from_snapshots(&vec![h; 4]).unwrap();
        assert!(
            product_space_quadratic_form(&sc, &f, 1.0, 1.0)
                .unwrap()
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn quadratic_form_matches_double_sum() {
        let sc = loop_complex();
        let steps = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ne = sc.count(1);
        let vals: Vec<f64> = (0..steps * ne)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let f = SpatiotemporalFlow::from_time_major(steps, ne, vals).unwrap();
        // dense double-sum oracle
        let ls = hodge_laplacian(&sc, 1).to_dense();
        let lt = hodge_laplacian(&SimplicialComplex::path(steps), 0).to_dense();
        let (a_s, a_t) = (0.7, 1.9);
        let mut oracle = 0.0;
        for t in 0..steps {
            for e in 0..ne {
                for e2 in 0..ne {
                    oracle += a_s * f.get(t, e) * ls[(e, e2)] * f.get(t, e2);
                }
            }
        }
        for e in 0..ne {
            for t in 0..steps {
                for t2 in 0..steps {
                    oracle += a_t * f.get(t, e) * lt[(t, t2)] * f.get(t2, e);
                }
            }
        }
        let got = product_space_quadratic_form(&sc, &f, a_s, a_t).unwrap();
        assert!((got - oracle).abs() <= 1e-10 * oracle.abs());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let sc = loop_complex();
        let f = SpatiotemporalFlow::zeros(2, 3);
        assert!(matches!(
            product_space_quadratic_form(&sc, &f, 1.0, 1.0),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn toy_scene_dimensions() {
        let s = toy::scene();
        assert_eq!(s.complex.count(1), 10);
        assert_eq!(s.complex.count(2), 1);
        assert_eq!(s.truth.values().len(), 30);
        assert_eq!(s.observations.len(), 5);
        let per_step: Vec<usize> = (0..3)
            .map(|t| s.observations.entries().iter().filter(|o| o.0 == t).count())
            .collect();
        assert_eq!(per_step, vec![2, 1, 2]);
        let hodge = hodge_decompose(&s.complex, 1, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(hodge.dims().2, 2);
    }

    #[test]
    fn toy_ablation_matches_dense_oracle() {
        // values from an independent numpy dense solve of the same scene
        let rows = toy::ablation(&toy::scene(), &toy::SETTINGS).unwrap();
        let oracle = [0.3723971844470557, 0.08509015078703176, 0.5577391231284746];
        for (row, want) in rows.iter().zip(oracle) {
            assert!((row.rel_error - want).abs() < 1e-9, "{row:?} vs {want}");
        }
    }
}
