//! Synthetic network data for the linear measurement model
//! `d_k(i) = u_{k,i} w_o + v_k(i)`.
//!
//! Regressors are zero-mean Gaussian rows with a covariance shared by every
//! node, independent across nodes and time. Observation noise is zero-mean
//! Gaussian with a per-node variance that is fixed over time.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use sha2::{Digest, Sha256};

use crate::{dot, Error, Result};

/// Condition numbers above this are reported as ill-conditioned.
pub const MAX_CONDITION_NUMBER: f64 = 1e12;

/// Ground truth and second-order statistics of a simulated network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    w_o: Vec<f64>,
    node_variances: Vec<f64>,
    regressor_covariance: DMatrix<f64>,
    regressor_factor: DMatrix<f64>,
    identity_covariance: bool,
}

impl ModelParams {
    /// Builds a model with the given covariance shared by all nodes.
    ///
    /// Fails if a variance is not strictly positive, if the covariance is
    /// not `dim x dim` symmetric positive definite, or if `w_o` is empty.
    pub fn new(
        w_o: Vec<f64>,
        node_variances: Vec<f64>,
        regressor_covariance: DMatrix<f64>,
    ) -> Result<Self> {
        let dim = w_o.len();
        if dim == 0 {
            return Err(Error::config("dim", "must be at least 1"));
        }
        if node_variances.is_empty() {
            return Err(Error::config("n_nodes", "must be at least 1"));
        }
        if let Some((k, v)) = node_variances
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::config(
                "node_variances",
                format!("variance of node {k} is {v}, expected a finite positive value"),
            ));
        }
        if w_o.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("w_o", "entries must be finite"));
        }
        if regressor_covariance.shape() != (dim, dim) {
            return Err(Error::config(
                "regressor_covariance",
                format!(
                    "shape {:?} does not match dim {dim}",
                    regressor_covariance.shape()
                ),
            ));
        }
        if regressor_covariance != regressor_covariance.transpose() {
            return Err(Error::config("regressor_covariance", "must be symmetric"));
        }
        let regressor_factor = regressor_covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::config("regressor_covariance", "must be positive definite"))?
            .l();
        let identity_covariance = regressor_covariance == DMatrix::identity(dim, dim);
        Ok(ModelParams {
            w_o,
            node_variances,
            regressor_covariance,
            regressor_factor,
            identity_covariance,
        })
    }

    /// White regressors (`R_u,k = I`).
    pub fn with_identity_covariance(w_o: Vec<f64>, node_variances: Vec<f64>) -> Result<Self> {
        let dim = w_o.len();
        Self::new(w_o, node_variances, DMatrix::identity(dim, dim))
    }

    pub fn w_o(&self) -> &[f64] {
        &self.w_o
    }

    pub fn n_nodes(&self) -> usize {
        self.node_variances.len()
    }

    pub fn dim(&self) -> usize {
        self.w_o.len()
    }

    pub fn node_variances(&self) -> &[f64] {
        &self.node_variances
    }

    pub fn regressor_covariance(&self) -> &DMatrix<f64> {
        &self.regressor_covariance
    }

    fn sample_regressor<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for z in out.iter_mut() {
            *z = StandardNormal.sample(rng);
        }
        if self.identity_covariance {
            return;
        }
        // u = L z with L lower triangular; walk rows bottom-up so z[..=r] is
        // still untouched when row r is formed.
        let l = &self.regressor_factor;
        for r in (0..out.len()).rev() {
            let mut acc = 0.0;
            for c in 0..=r {
                acc += l[(r, c)] * out[c];
            }
            out[r] = acc;
        }
    }
}

/// Unit-norm default parameter vector `[1, 1, ..., 1] / sqrt(dim)`.
pub fn default_w_o(dim: usize) -> Vec<f64> {
    let entry = 1.0 / (dim as f64).sqrt();
    vec![entry; dim]
}

/// Draws one variance per node, independently and uniformly on `[low, high]`.
pub fn assign_node_variances<R: Rng + ?Sized>(
    n_nodes: usize,
    low: f64,
    high: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n_nodes == 0 {
        return Err(Error::config("n_nodes", "must be at least 1"));
    }
    if !(low.is_finite() && low > 0.0) {
        return Err(Error::config(
            "variance_low",
            format!("must be finite and positive, got {low}"),
        ));
    }
    if !(high.is_finite() && high >= low) {
        return Err(Error::config(
            "variance_low/variance_high",
            format!("need 0 < variance_low <= variance_high, got [{low}, {high}]"),
        ));
    }
    if low == high {
        return Ok(vec![low; n_nodes]);
    }
    let dist = Uniform::new_inclusive(low, high)
        .map_err(|e| Error::config("variance_low/variance_high", e.to_string()))?;
    Ok((0..n_nodes).map(|_| dist.sample(rng)).collect())
}

/// Per-node time series of `(u_{k,i}, d_k(i))` pairs plus the realized noise.
///
/// Storage is cycle-major: all nodes of cycle 0, then all nodes of cycle 1,
/// and so on, which is the order the ring sweep consumes them in.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    n_nodes: usize,
    dim: usize,
    n_cycles: usize,
    regressors: Vec<f64>,
    measurements: Vec<f64>,
    noise: Vec<f64>,
}

impl SampleStream {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cycles(&self) -> usize {
        self.n_cycles
    }

    pub fn regressor(&self, cycle: usize, node: usize) -> &[f64] {
        let start = (cycle * self.n_nodes + node) * self.dim;
        &self.regressors[start..start + self.dim]
    }

    pub fn measurement(&self, cycle: usize, node: usize) -> f64 {
        self.measurements[cycle * self.n_nodes + node]
    }

    /// Realized noise, `d_k(i) - u_{k,i} w_o` as computed in floating point.
    pub fn noise(&self, cycle: usize, node: usize) -> f64 {
        self.noise[cycle * self.n_nodes + node]
    }

    /// All node samples of one cycle, in ring order.
    pub fn cycle(&self, cycle: usize) -> CycleSamples<'_> {
        assert!(cycle < self.n_cycles, "cycle {cycle} out of range");
        let n = self.n_nodes;
        CycleSamples {
            dim: self.dim,
            regressors: &self.regressors[cycle * n * self.dim..(cycle + 1) * n * self.dim],
            measurements: &self.measurements[cycle * n..(cycle + 1) * n],
        }
    }

    /// SHA-256 over the little-endian bytes of the dimensions, regressors
    /// and measurements.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for n in [self.n_nodes, self.dim, self.n_cycles] {
            hasher.update((n as u64).to_le_bytes());
        }
        for x in self.regressors.iter().chain(&self.measurements) {
            hasher.update(x.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

/// Borrowed view of the `N` samples one cycle feeds to the ring.
#[derive(Debug, Clone, Copy)]
pub struct CycleSamples<'a> {
    dim: usize,
    regressors: &'a [f64],
    measurements: &'a [f64],
}

impl<'a> CycleSamples<'a> {
    /// `regressors` holds `measurements.len()` rows of length `dim`, back to back.
    pub fn new(dim: usize, regressors: &'a [f64], measurements: &'a [f64]) -> Result<Self> {
        if dim == 0 || regressors.len() != dim * measurements.len() {
            return Err(Error::Contract(format!(
                "{} regressor entries cannot form {} rows of length {dim}",
                regressors.len(),
                measurements.len()
            )));
        }
        Ok(CycleSamples {
            dim,
            regressors,
            measurements,
        })
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, node: usize) -> (&'a [f64], f64) {
        let start = node * self.dim;
        (
            &self.regressors[start..start + self.dim],
            self.measurements[node],
        )
    }
}

/// Draws `n_cycles` samples per node.
///
/// Per cycle and per node, in ring order, the random source is consumed as
/// `dim` standard normals for the regressor followed by one for the noise.
pub fn generate_stream<R: Rng + ?Sized>(
    params: &ModelParams,
    n_cycles: usize,
    rng: &mut R,
) -> Result<SampleStream> {
    generate(params, n_cycles, rng, true)
}

/// Same regressor draws as [`generate_stream`] with `v_k(i) = 0`.
/// No noise draws are taken from the random source.
pub fn generate_noiseless_stream<R: Rng + ?Sized>(
    params: &ModelParams,
    n_cycles: usize,
    rng: &mut R,
) -> Result<SampleStream> {
    generate(params, n_cycles, rng, false)
}

fn generate<R: Rng + ?Sized>(
    params: &ModelParams,
    n_cycles: usize,
    rng: &mut R,
    noisy: bool,
) -> Result<SampleStream> {
    if n_cycles == 0 {
        return Err(Error::config("n_cycles", "must be at least 1"));
    }
    let n = params.n_nodes();
    let m = params.dim();
    let std_devs: Vec<f64> = params.node_variances.iter().map(|v| v.sqrt()).collect();
    let mut regressors = vec![0.0; n_cycles * n * m];
    let mut measurements = Vec::with_capacity(n_cycles * n);
    let mut noise = Vec::with_capacity(n_cycles * n);
    for (slot, u) in regressors.chunks_exact_mut(m).enumerate() {
        params.sample_regressor(rng, u);
        let clean = dot(u, &params.w_o);
        let d = if noisy {
            let xi: f64 = StandardNormal.sample(rng);
            clean + std_devs[slot % n] * xi
        } else {
            clean
        };
        measurements.push(d);
        // Keep the noise that actually ended up in d after rounding so that
        // d - u.w_o reproduces it exactly.
        noise.push(d - clean);
    }
    Ok(SampleStream {
        n_nodes: n,
        dim: m,
        n_cycles,
        regressors,
        measurements,
        noise,
    })
}

/// Global second-order statistics `R_u = sum_k R_u,k`, `R_du = sum_k R_du,k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticsOracle {
    pub r_u: DMatrix<f64>,
    pub r_du: DVector<f64>,
}

impl StatisticsOracle {
    /// Exact moments of the model: `R_u,k` is the shared covariance and
    /// `R_du,k = R_u,k w_o` because the noise is independent of `u`.
    pub fn exact(params: &ModelParams) -> Self {
        let m = params.dim();
        let w_o = DVector::from_column_slice(&params.w_o);
        let per_node_du = &params.regressor_covariance * &w_o;
        let mut r_u = DMatrix::zeros(m, m);
        let mut r_du = DVector::zeros(m);
        for _ in 0..params.n_nodes() {
            r_u += &params.regressor_covariance;
            r_du += &per_node_du;
        }
        StatisticsOracle { r_u, r_du }
    }

    /// Sample moments over a stream, averaged over time and summed over nodes.
    pub fn empirical(stream: &SampleStream) -> Self {
        let m = stream.dim();
        let mut r_u = DMatrix::zeros(m, m);
        let mut r_du = DVector::zeros(m);
        for i in 0..stream.n_cycles() {
            for k in 0..stream.n_nodes() {
                let u = DVector::from_column_slice(stream.regressor(i, k));
                r_u += &u * u.transpose();
                r_du += &u * stream.measurement(i, k);
            }
        }
        let scale = 1.0 / stream.n_cycles() as f64;
        StatisticsOracle {
            r_u: r_u * scale,
            r_du: r_du * scale,
        }
    }
}

/// Solves `R_u w = R_du`.
pub fn solve_normal_equations(oracle: &StatisticsOracle) -> Result<Vec<f64>> {
    let m = oracle.r_du.len();
    if oracle.r_u.shape() != (m, m) {
        return Err(Error::Contract(format!(
            "R_u has shape {:?} but R_du has length {m}",
            oracle.r_u.shape()
        )));
    }
    let eigen = SymmetricEigen::new(oracle.r_u.clone());
    let largest = eigen
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, l| acc.max(l.abs()));
    let smallest = eigen
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, l| acc.min(*l));
    let condition = if smallest > 0.0 {
        largest / smallest
    } else {
        f64::INFINITY
    };
    if condition.is_nan() || condition > MAX_CONDITION_NUMBER {
        return Err(Error::IllConditioned { condition });
    }
    let chol = oracle
        .r_u
        .clone()
        .cholesky()
        .ok_or(Error::IllConditioned { condition })?;
    Ok(chol.solve(&oracle.r_du).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn variances_fall_inside_interval() {
        let v = assign_node_variances(30, 1e-3, 1e-1, &mut rng(1)).unwrap();
        assert_eq!(v.len(), 30);
        assert!(v.iter().all(|x| (1e-3..=1e-1).contains(x)));
    }

    #[test]
    fn degenerate_interval_is_constant() {
        let v = assign_node_variances(5, 0.05, 0.05, &mut rng(1)).unwrap();
        assert_eq!(v, vec![0.05; 5]);
    }

    #[test]
    fn variance_draws_have_uniform_mean() {
        let v = assign_node_variances(1_000_000, 1e-12, 1.0, &mut rng(7)).unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn bad_variance_bounds_are_rejected() {
        assert!(matches!(
            assign_node_variances(3, 0.0, 1.0, &mut rng(0)),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            assign_node_variances(3, 0.2, 0.1, &mut rng(0)),
            Err(Error::Config { .. })
        ));
        assert!(assign_node_variances(3, -1.0, 1.0, &mut rng(0)).is_err());
    }

    #[test]
    fn model_params_validation() {
        assert!(ModelParams::with_identity_covariance(vec![1.0], vec![0.0]).is_err());
        assert!(ModelParams::with_identity_covariance(vec![], vec![0.1]).is_err());
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(ModelParams::new(vec![0.0, 0.0], vec![0.1], not_pd).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(ModelParams::new(vec![0.0, 0.0], vec![0.1], asym).is_err());
    }

    #[test]
    fn noiseless_basis_regressor_measures_first_coordinate() {
        let params =
            ModelParams::with_identity_covariance(vec![1.0, 0.0, 0.0, 0.0], vec![0.1]).unwrap();
        let u = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(dot(&u, params.w_o()), 1.0);
        let stream = generate_noiseless_stream(&params, 10, &mut rng(3)).unwrap();
        for i in 0..10 {
            assert_eq!(stream.noise(i, 0), 0.0);
            assert_eq!(
                stream.measurement(i, 0),
                dot(stream.regressor(i, 0), params.w_o())
            );
        }
    }

    #[test]
    fn construction_identity_is_exact() {
        let mut r = rng(11);
        let vars = assign_node_variances(6, 1e-3, 1e-1, &mut r).unwrap();
        let params = ModelParams::with_identity_covariance(default_w_o(4), vars).unwrap();
        let stream = generate_stream(&params, 200, &mut r).unwrap();
        for i in 0..200 {
            for k in 0..6 {
                let d = stream.measurement(i, k);
                assert_eq!(
                    d - dot(stream.regressor(i, k), params.w_o()),
                    stream.noise(i, k)
                );
            }
        }
    }

    #[test]
    fn empirical_noise_variance_matches_assignment() {
        let vars = vec![1e-3, 0.02, 0.1];
        let params = ModelParams::with_identity_covariance(default_w_o(4), vars.clone()).unwrap();
        let stream = generate_stream(&params, 100_000, &mut rng(5)).unwrap();
        for (k, var) in vars.iter().enumerate() {
            let t = stream.n_cycles() as f64;
            let mean = (0..stream.n_cycles())
                .map(|i| stream.noise(i, k))
                .sum::<f64>()
                / t;
            let emp = (0..stream.n_cycles())
                .map(|i| (stream.noise(i, k) - mean).powi(2))
                .sum::<f64>()
                / (t - 1.0);
            assert!((emp / var - 1.0).abs() < 0.03, "node {k}: {emp} vs {var}");
        }
    }

    #[test]
    fn identity_regressors_have_identity_covariance() {
        let params = ModelParams::with_identity_covariance(default_w_o(4), vec![0.01]).unwrap();
        let stream = generate_stream(&params, 100_000, &mut rng(9)).unwrap();
        let oracle = StatisticsOracle::empirical(&stream);
        for r in 0..4 {
            for c in 0..4 {
                let target = if r == c { 1.0 } else { 0.0 };
                assert!((oracle.r_u[(r, c)] - target).abs() < 0.05);
            }
        }
    }

    #[test]
    fn correlated_regressors_follow_covariance() {
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.3, 0.0, 0.3, 0.5]);
        let params = ModelParams::new(vec![0.3, -0.2, 0.9], vec![0.01], cov.clone()).unwrap();
        let stream = generate_stream(&params, 100_000, &mut rng(2)).unwrap();
        let oracle = StatisticsOracle::empirical(&stream);
        assert!((oracle.r_u - cov).abs().max() < 0.05);
    }

    #[test]
    fn same_seed_same_stream() {
        let params = ModelParams::with_identity_covariance(default_w_o(4), vec![0.01; 3]).unwrap();
        let a = generate_stream(&params, 50, &mut rng(42)).unwrap();
        let b = generate_stream(&params, 50, &mut rng(42)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.checksum(), b.checksum());
        let c = generate_stream(&params, 50, &mut rng(43)).unwrap();
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn zero_cycles_rejected() {
        let params = ModelParams::with_identity_covariance(default_w_o(2), vec![0.01]).unwrap();
        assert!(generate_stream(&params, 0, &mut rng(0)).is_err());
    }

    #[test]
    fn normal_equations_identity_and_scaled() {
        let w = vec![0.5, -1.0, 2.0, 0.25];
        let id = StatisticsOracle {
            r_u: DMatrix::identity(4, 4),
            r_du: DVector::from_column_slice(&w),
        };
        let close = |got: Vec<f64>| {
            for (g, e) in got.iter().zip(&w) {
                assert!((g - e).abs() <= 1e-14 * e.abs(), "{g} vs {e}");
            }
        };
        close(solve_normal_equations(&id).unwrap());
        let scaled = StatisticsOracle {
            r_u: DMatrix::identity(4, 4) * 2.0,
            r_du: DVector::from_column_slice(&w) * 2.0,
        };
        close(solve_normal_equations(&scaled).unwrap());
    }

    #[test]
    fn normal_equations_random_spd() {
        let mut r = rng(17);
        for _ in 0..20 {
            let a = DMatrix::<f64>::from_fn(5, 5, |_, _| StandardNormal.sample(&mut r));
            let spd: DMatrix<f64> = &a * a.transpose() + DMatrix::identity(5, 5) * 0.5;
            let w_ref = DVector::<f64>::from_fn(5, |_, _| StandardNormal.sample(&mut r));
            let oracle = StatisticsOracle {
                r_du: &spd * &w_ref,
                r_u: spd,
            };
            let w = DVector::from_vec(solve_normal_equations(&oracle).unwrap());
            assert!((&w - &w_ref).norm() / w_ref.norm() < 1e-10);
        }
    }

    #[test]
    fn exact_statistics_recover_w_o() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.8]);
        let params = ModelParams::new(vec![0.7, -0.3], vec![0.01; 30], cov).unwrap();
        let w = solve_normal_equations(&StatisticsOracle::exact(&params)).unwrap();
        for (a, b) in w.iter().zip(params.w_o()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_system_reports_condition() {
        let oracle = StatisticsOracle {
            r_u: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            r_du: DVector::from_column_slice(&[1.0, 1.0]),
        };
        match solve_normal_equations(&oracle) {
            Err(Error::IllConditioned { condition }) => assert!(condition > MAX_CONDITION_NUMBER),
            other => panic!("expected ill-conditioned error, got {other:?}"),
        }
    }
}
