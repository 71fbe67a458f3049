//! Finite-N Monte Carlo: Brownian motion on the unitary group `U(N)` and the
//! matrix Jacobi process built from diagonal projections.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Which pair of projections (or which reflection) the estimates use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionMode {
    /// `P` the first `round(λθN)` coordinates, `Q` the first `round(θN)`.
    Nested,
    /// `P` the last `round(λθN)` coordinates, `Q` the first `round(θN)`.
    Orthogonal,
    /// `a = diag(±1)` with the first `round(θN)` entries `+1`; estimates
    /// `(1/N) Tr((aUaU^*)^k)`.
    Bernoulli,
}

impl ProjectionMode {
    pub fn tag(self) -> &'static str {
        match self {
            ProjectionMode::Nested => "nested",
            ProjectionMode::Orthogonal => "orthogonal",
            ProjectionMode::Bernoulli => "bernoulli",
        }
    }
}

impl fmt::Display for ProjectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ProjectionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "nested" => Ok(ProjectionMode::Nested),
            "orthogonal" => Ok(ProjectionMode::Orthogonal),
            "bernoulli" => Ok(ProjectionMode::Bernoulli),
            other => Err(format!(
                "unknown mode `{other}` (expected nested, orthogonal or bernoulli)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenBackend {
    /// nalgebra's Householder tridiagonalization plus implicit QR.
    Nalgebra,
    /// Cyclic complex Jacobi rotations.
    Jacobi,
}

impl FromStr for EigenBackend {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "nalgebra" => Ok(EigenBackend::Nalgebra),
            "jacobi" => Ok(EigenBackend::Jacobi),
            other => Err(format!("unknown eigensolver `{other}` (expected nalgebra or jacobi)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleConfig {
    pub dim: usize,
    pub t_end: f64,
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
    pub lambda: f64,
    pub theta: f64,
    pub mode: ProjectionMode,
    /// Highest moment order estimated.
    pub order: usize,
    pub backend: EigenBackend,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            dim: 256,
            t_end: 1.0,
            steps: 200,
            trials: 8,
            seed: 20240601,
            lambda: 1.0,
            theta: 0.5,
            mode: ProjectionMode::Nested,
            order: 4,
            backend: EigenBackend::Nalgebra,
        }
    }
}

/// Ranks after round-half-up, with the realized traces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankReport {
    pub p_nominal: f64,
    pub p: usize,
    pub q_nominal: f64,
    pub q: usize,
    pub tau_p: f64,
    pub tau_q: f64,
    /// Whether either nominal rank was not an integer.
    pub rounded: bool,
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

impl OracleConfig {
    pub fn ranks(&self) -> Result<RankReport> {
        if self.dim < 2 {
            return Err(Error::param("dim", self.dim as f64, "must be at least 2"));
        }
        if self.steps < 1 {
            return Err(Error::param("steps", 0.0, "must be at least 1"));
        }
        if self.trials < 1 {
            return Err(Error::param("trials", 0.0, "must be at least 1"));
        }
        if self.order < 1 {
            return Err(Error::param("order", 0.0, "must be at least 1"));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::param("t", self.t_end, "must be finite and nonnegative"));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::param("theta", self.theta, "must lie in (0, 1)"));
        }
        if !(self.lambda > 0.0 && self.lambda * self.theta < 1.0) {
            return Err(Error::param("lambda", self.lambda, "need 0 < lambda*theta < 1"));
        }
        let n = self.dim as f64;
        let p_nominal = self.lambda * self.theta * n;
        let q_nominal = self.theta * n;
        let (p, q) = (round_half_up(p_nominal), round_half_up(q_nominal));
        if q == 0 || q == self.dim {
            return Err(Error::param("theta", self.theta, "rank of Q rounds to 0 or N"));
        }
        match self.mode {
            ProjectionMode::Nested | ProjectionMode::Orthogonal if p == 0 => {
                return Err(Error::param("lambda", self.lambda, "rank of P rounds to 0"));
            }
            ProjectionMode::Nested if p > q => {
                return Err(Error::param("lambda", self.lambda, "nested mode needs rank P <= rank Q"));
            }
            ProjectionMode::Orthogonal if p + q > self.dim => {
                return Err(Error::param(
                    "lambda",
                    self.lambda,
                    "orthogonal mode needs rank P + rank Q <= N",
                ));
            }
            _ => {}
        }
        Ok(RankReport {
            p_nominal,
            p,
            q_nominal,
            q,
            tau_p: p as f64 / n,
            tau_q: q as f64 / n,
            rounded: p_nominal.fract() != 0.0 || q_nominal.fract() != 0.0,
        })
    }
}

/// Seed of trial `index`: SplitMix64 of the master seed advanced `index + 1`
/// times.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add((index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard normal pairs by Box–Muller.
pub struct Gaussian {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Gaussian {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn uniform_open(&mut self) -> f64 {
        // (0, 1]: 53 random bits, shifted off zero.
        ((self.rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// Hermitian `G` with `E|G_ij|² = 1/N` off the diagonal and real `N(0, 1/N)`
/// diagonal, so that `E (1/N) Tr G² = 1`.
pub fn sample_gue(dim: usize, gauss: &mut Gaussian) -> CMatrix {
    let n = dim as f64;
    let diag = (1.0 / n).sqrt();
    let off = (1.0 / (2.0 * n)).sqrt();
    let mut g = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        g[(j, j)] = Complex64::new(diag * gauss.sample(), 0.0);
        for i in 0..j {
            let z = Complex64::new(off * gauss.sample(), off * gauss.sample());
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    g
}

/// `a · b` through matrixmultiply's complex kernel.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = CMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: `Complex<f64>` is `repr(C)` with fields `re, im`, matching
    // `[f64; 2]`. All three buffers are dense column-major with the given
    // shapes, so element (i, j) sits at `i + j·rows`, and `c` does not alias
    // `a` or `b`.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

/// Eigenvalues and unit eigenvectors (as columns) of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMatrix, backend: EigenBackend) -> Result<(Vec<f64>, CMatrix)> {
    match backend {
        EigenBackend::Nalgebra => {
            let e = a.clone().symmetric_eigen();
            Ok((e.eigenvalues.iter().copied().collect(), e.eigenvectors))
        }
        EigenBackend::Jacobi => jacobi_eigen(a),
    }
}

pub const JACOBI_MAX_SWEEPS: usize = 60;

/// Cyclic Jacobi for complex Hermitian matrices. Each rotation first turns
/// `a_pq` real with the phase `diag(1, e^{−iφ})` and then applies the real
/// symmetric rotation annihilating it.
pub fn jacobi_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = CMatrix::identity(n, n);
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let off_norm = |a: &CMatrix| {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) <= 1e-15 * scale {
            let evals = (0..n).map(|i| a[(i, i)].re).collect();
            return Ok((evals, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // W = diag(1, conj(phase)) · [[c, s], [−s, c]]
                let w_pp = Complex64::new(c, 0.0);
                let w_pq = Complex64::new(s, 0.0);
                let w_qp = -s * phase.conj();
                let w_qq = c * phase.conj();
                // A ← A W on columns p, q.
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * w_pp + akq * w_qp;
                    a[(k, q)] = akp * w_pq + akq * w_qq;
                }
                // A ← W^* A on rows p, q.
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = w_pp.conj() * apk + w_qp.conj() * aqk;
                    a[(q, k)] = w_pq.conj() * apk + w_qq.conj() * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * w_pp + vkq * w_qp;
                    v[(k, q)] = vkp * w_pq + vkq * w_qq;
                }
            }
        }
    }
    let off = off_norm(&a);
    if off <= 1e-15 * scale {
        let evals = (0..n).map(|i| a[(i, i)].re).collect();
        return Ok((evals, v));
    }
    Err(Error::EigenNonConvergence {
        sweeps: JACOBI_MAX_SWEEPS,
        off_norm: off,
    })
}

/// `exp(i s H)` for Hermitian `H = V diag(μ) V^*`, as `V diag(e^{isμ}) V^*`.
pub fn unitary_exp(h: &CMatrix, s: f64, backend: EigenBackend) -> Result<CMatrix> {
    let (mu, mut v) = hermitian_eigen(h, backend)?;
    let vh = v.adjoint();
    for (j, m) in mu.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, s * m);
        v.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    Ok(matmul(&v, &vh))
}

/// Geodesic random walk `U ← exp(i√Δt G) U` from `U = I`, with fresh GUE
/// draws at each of `steps` steps.
pub fn simulate_unitary_bm(dim: usize, t_end: f64, steps: usize, seed: u64, backend: EigenBackend) -> Result<CMatrix> {
    if dim < 1 || steps < 1 {
        return Err(Error::param("steps", steps as f64, "dimension and steps must be positive"));
    }
    let mut u = CMatrix::identity(dim, dim);
    if t_end == 0.0 {
        return Ok(u);
    }
    let root_dt = (t_end / steps as f64).sqrt();
    let mut gauss = Gaussian::new(seed);
    for _ in 0..steps {
        let g = sample_gue(dim, &mut gauss);
        u = matmul(&unitary_exp(&g, root_dt, backend)?, &u);
    }
    Ok(u)
}

/// `max_ij |(U^*U − I)_ij|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let prod = matmul(&u.adjoint(), u);
    let mut worst = 0.0f64;
    for j in 0..prod.ncols() {
        for i in 0..prod.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

/// Mean and standard error over trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub n: usize,
    pub mean: f64,
    /// `None` with a single trial.
    pub stderr: Option<f64>,
}

fn summarize(n: usize, samples: &[f64]) -> Estimate {
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    let stderr = (samples.len() > 1).then(|| {
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    });
    Estimate { n, mean, stderr }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRun {
    pub config: OracleConfig,
    pub ranks: RankReport,
    /// Jacobi moments `m_1..m_order`, or `(1/N)Tr((aUaU^*)^k)` in Bernoulli mode.
    pub moments: Vec<Estimate>,
    /// `Re (1/N) Tr U` and `Re (1/N) Tr U²`.
    pub unitary_traces: Vec<Estimate>,
    pub trial_seeds: Vec<u64>,
    /// Largest `max_ij |(U^*U − I)_ij|` over trial endpoints.
    pub unitarity_defect: f64,
    pub wall_time_s: f64,
}

struct TrialOutcome {
    moments: Vec<f64>,
    traces: [f64; 2],
    defect: f64,
}

fn normalized_trace(m: &CMatrix) -> Complex64 {
    m.trace() / m.nrows() as f64
}

fn trial(config: &OracleConfig, ranks: &RankReport, seed: u64) -> Result<TrialOutcome> {
    let n = config.dim;
    let u = simulate_unitary_bm(n, config.t_end, config.steps, seed, config.backend)?;
    let traces = [normalized_trace(&u).re, normalized_trace(&matmul(&u, &u)).re];
    let defect = unitarity_defect(&u);
    let moments = match config.mode {
        ProjectionMode::Nested | ProjectionMode::Orthogonal => {
            let rows: Vec<usize> = match config.mode {
                ProjectionMode::Nested => (0..ranks.p).collect(),
                _ => (n - ranks.p..n).collect(),
            };
            let b = u.select_rows(&rows).columns(0, ranks.q).into_owned();
            let j = matmul(&b, &b.adjoint());
            let (evals, _) = hermitian_eigen(&j, EigenBackend::Nalgebra)?;
            let p = ranks.p as f64;
            (1..=config.order)
                .map(|k| evals.iter().map(|x| x.powi(k as i32)).sum::<f64>() / p)
                .collect()
        }
        ProjectionMode::Bernoulli => {
            // (aU)(aU^*) with a = diag(+1 × q, −1 × (N − q)).
            let sign = |i: usize| if i < ranks.q { 1.0 } else { -1.0 };
            let mut au = u.clone();
            let mut auh = u.adjoint();
            for i in 0..n {
                let s = sign(i);
                au.row_mut(i).iter_mut().for_each(|z| *z *= s);
                auh.row_mut(i).iter_mut().for_each(|z| *z *= s);
            }
            let w = matmul(&au, &auh);
            let mut power = w.clone();
            let mut out = Vec::with_capacity(config.order);
            for k in 1..=config.order {
                if k > 1 {
                    power = matmul(&power, &w);
                }
                out.push(normalized_trace(&power).re);
            }
            out
        }
    };
    Ok(TrialOutcome {
        moments,
        traces,
        defect,
    })
}

/// Runs `trials` independent walks (in parallel) and averages the traced
/// quantities. Results do not depend on thread scheduling: each trial owns a
/// seed derived from the master seed, and reductions run in trial order.
pub fn empirical_jacobi_moments(config: &OracleConfig) -> Result<OracleRun> {
    let ranks = config.ranks()?;
    let start = Instant::now();
    let seeds: Vec<u64> = (0..config.trials as u64).map(|i| trial_seed(config.seed, i)).collect();
    let outcomes = seeds
        .par_iter()
        .map(|&s| trial(config, &ranks, s))
        .collect::<Result<Vec<_>>>()?;
    let column = |f: &dyn Fn(&TrialOutcome) -> f64| outcomes.iter().map(f).collect::<Vec<f64>>();
    let moments = (0..config.order)
        .map(|k| summarize(k + 1, &column(&|o| o.moments[k])))
        .collect();
    let unitary_traces = (0..2)
        .map(|k| summarize(k + 1, &column(&|o| o.traces[k])))
        .collect();
    let unitarity_defect = outcomes.iter().map(|o| o.defect).fold(0.0, f64::max);
    Ok(OracleRun {
        config: config.clone(),
        ranks,
        moments,
        unitary_traces,
        trial_seeds: seeds,
        unitarity_defect,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// CSV row `n,t,estimate,stderr,N,steps,trials,mode`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRow {
    pub n: usize,
    pub t: f64,
    pub estimate: f64,
    pub stderr: Option<f64>,
    #[serde(rename = "N")]
    pub dim: usize,
    pub steps: usize,
    pub trials: usize,
    pub mode: String,
}

impl OracleRun {
    /// Moment rows tagged with the projection mode, then the unitary traces
    /// tagged `unitary-trace`.
    pub fn rows(&self) -> Vec<OracleRow> {
        let c = &self.config;
        let row = |e: &Estimate, mode: &str| OracleRow {
            n: e.n,
            t: c.t_end,
            estimate: e.mean,
            stderr: e.stderr,
            dim: c.dim,
            steps: c.steps,
            trials: c.trials,
            mode: mode.to_string(),
        };
        self.moments
            .iter()
            .map(|e| row(e, c.mode.tag()))
            .chain(self.unitary_traces.iter().map(|e| row(e, "unitary-trace")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        sample_gue(n, &mut Gaussian::new(seed))
    }

    #[test]
    fn matmul_matches_nalgebra() {
        let a = random_hermitian(7, 1);
        let b = random_hermitian(7, 2).columns(0, 5).into_owned();
        let ours = matmul(&a, &b);
        let theirs = &a * &b;
        assert!((ours - theirs).iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn jacobi_agrees_with_nalgebra() {
        let a = random_hermitian(16, 3);
        let (mut ej, vj) = jacobi_eigen(&a).unwrap();
        let (mut en, _) = hermitian_eigen(&a, EigenBackend::Nalgebra).unwrap();
        // A V = V diag(λ)
        let av = &a * &vj;
        for (j, l) in ej.iter().enumerate() {
            for i in 0..16 {
                assert!((av[(i, j)] - vj[(i, j)] * *l).norm() < 1e-12);
            }
        }
        assert!(unitarity_defect(&vj) < 1e-13);
        ej.sort_by(f64::total_cmp);
        en.sort_by(f64::total_cmp);
        for (x, y) in ej.iter().zip(&en) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn gue_normalization() {
        let n = 200;
        let g = random_hermitian(n, 4);
        let tr2 = matmul(&g, &g).trace().re / n as f64;
        assert!((tr2 - 1.0).abs() < 0.05, "{tr2}");
        assert!((0..n).all(|i| g[(i, i)].im == 0.0));
    }

    #[test]
    fn gaussian_moments() {
        let mut g = Gaussian::new(9);
        let xs: Vec<f64> = (0..100_000).map(|_| g.sample()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.01 && (var - 1.0).abs() < 0.02);
    }

    #[test]
    fn zero_time_is_identity() {
        let u = simulate_unitary_bm(8, 0.0, 10, 5, EigenBackend::Nalgebra).unwrap();
        assert_eq!(u, CMatrix::identity(8, 8));
    }

    #[test]
    fn walk_stays_unitary() {
        let u = simulate_unitary_bm(32, 1.0, 50, 6, EigenBackend::Nalgebra).unwrap();
        assert!(unitarity_defect(&u) < 1e-10);
        let uj = simulate_unitary_bm(12, 0.5, 5, 6, EigenBackend::Jacobi).unwrap();
        assert!(unitarity_defect(&uj) < 1e-10);
    }

    #[test]
    fn nested_at_time_zero_has_unit_moments() {
        let config = OracleConfig {
            dim: 10,
            t_end: 0.0,
            steps: 1,
            trials: 2,
            order: 3,
            ..OracleConfig::default()
        };
        let run = empirical_jacobi_moments(&config).unwrap();
        for e in &run.moments {
            assert_abs_diff_eq!(e.mean, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn determinism_across_thread_counts() {
        let config = OracleConfig {
            dim: 12,
            steps: 10,
            trials: 4,
            order: 3,
            ..OracleConfig::default()
        };
        let a = empirical_jacobi_moments(&config).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| empirical_jacobi_moments(&config)).unwrap();
        assert_eq!(a.moments, b.moments);
        assert_eq!(a.unitary_traces, b.unitary_traces);
        assert_eq!(a.trial_seeds, b.trial_seeds);
    }

    #[test]
    fn rank_rounding_is_half_up() {
        let config = OracleConfig {
            dim: 5,
            lambda: 1.0,
            theta: 0.5,
            ..OracleConfig::default()
        };
        let r = config.ranks().unwrap();
        assert_eq!((r.p, r.q), (3, 3));
        assert!(r.rounded);
        let even = OracleConfig {
            dim: 8,
            ..OracleConfig::default()
        };
        assert!(!even.ranks().unwrap().rounded);
    }

    #[test]
    fn invalid_configs() {
        let bad = OracleConfig {
            dim: 1,
            ..OracleConfig::default()
        };
        assert!(bad.ranks().is_err());
        let overlap = OracleConfig {
            dim: 10,
            lambda: 1.5,
            theta: 0.5,
            mode: ProjectionMode::Orthogonal,
            ..OracleConfig::default()
        };
        assert!(overlap.ranks().is_err());
        let not_nested = OracleConfig {
            dim: 10,
            lambda: 1.5,
            theta: 0.5,
            ..OracleConfig::default()
        };
        assert!(not_nested.ranks().is_err());
    }

    #[test]
    fn seeds_are_distinct() {
        let s: std::collections::BTreeSet<u64> = (0..1000).map(|i| trial_seed(42, i)).collect();
        assert_eq!(s.len(), 1000);
    }
}
