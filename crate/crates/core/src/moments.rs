//! The moment hierarchy for `J_t = P Y_t Q Y_t^* P` in the compressed space,
//! its closed forms at `λ = 1`, and the parameter transforms between cases.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode;
use crate::special::{binomial_f64, laguerre1, s_moments, ubm_moment_signed};

/// Initial moments `m_n(0)`, one per geometric configuration of `P` and `Q`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// `P ≤ Q`: `m_n(0) = 1`.
    PLeQ,
    /// `P ≥ Q`: `m_n(0) = 1/λ`.
    PGeQ,
    /// `P Q = 0`: `m_n(0) = 0`.
    Orthogonal,
    /// Arbitrary `m_0(0), …, m_N(0)` with `m_0 = 1`.
    Custom(Vec<f64>),
}

impl InitMode {
    pub fn tag(&self) -> &'static str {
        match self {
            InitMode::PLeQ => "p-le-q",
            InitMode::PGeQ => "p-ge-q",
            InitMode::Orthogonal => "orthogonal",
            InitMode::Custom(_) => "custom",
        }
    }

    /// Whether the process lives in a contraction, so moments are in `[0, 1]`
    /// and nonincreasing in `n`.
    pub fn is_contraction(&self) -> bool {
        matches!(self, InitMode::PLeQ | InitMode::Orthogonal)
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for InitMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "p-le-q" => Ok(InitMode::PLeQ),
            "p-ge-q" => Ok(InitMode::PGeQ),
            "orthogonal" => Ok(InitMode::Orthogonal),
            other => Err(format!(
                "unknown init mode `{other}` (expected p-le-q, p-ge-q or orthogonal)"
            )),
        }
    }
}

/// `λ = τ(P)/τ(Q)`, `θ = τ(Q)` and the initial configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProcessParams {
    pub lambda: f64,
    pub theta: f64,
    pub init: InitMode,
}

impl ProcessParams {
    pub fn new(lambda: f64, theta: f64, init: InitMode) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::param("theta", theta, "must lie in (0, 1)"));
        }
        if !(lambda > 0.0 && lambda * theta < 1.0) {
            return Err(Error::param("lambda", lambda, "need 0 < lambda*theta < 1"));
        }
        match &init {
            InitMode::PLeQ if lambda > 1.0 => {
                return Err(Error::param("lambda", lambda, "P <= Q requires lambda <= 1"));
            }
            InitMode::PGeQ if lambda < 1.0 => {
                return Err(Error::param("lambda", lambda, "P >= Q requires lambda >= 1"));
            }
            InitMode::Orthogonal if lambda * theta + theta > 1.0 + 1e-12 => {
                return Err(Error::param(
                    "lambda",
                    lambda,
                    "orthogonal P, Q require lambda*theta + theta <= 1",
                ));
            }
            InitMode::Custom(v) => {
                if v.first() != Some(&1.0) {
                    return Err(Error::param(
                        "init",
                        v.first().copied().unwrap_or(f64::NAN),
                        "custom initial vector must start with m_0 = 1",
                    ));
                }
                if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                    return Err(Error::param("init", *bad, "custom initial vector must be finite"));
                }
            }
            _ => {}
        }
        Ok(Self {
            lambda,
            theta,
            init,
        })
    }

    /// `λ = 1`, `θ = 1/2`, `P ≤ Q`.
    pub fn standard() -> Self {
        Self {
            lambda: 1.0,
            theta: 0.5,
            init: InitMode::PLeQ,
        }
    }

    /// `m_0(0), …, m_N(0)`.
    pub fn initial_moments(&self, order: usize) -> Result<Vec<f64>> {
        let fill = |x: f64| {
            let mut v = vec![x; order + 1];
            v[0] = 1.0;
            v
        };
        Ok(match &self.init {
            InitMode::PLeQ => fill(1.0),
            InitMode::PGeQ => fill(1.0 / self.lambda),
            InitMode::Orthogonal => fill(0.0),
            InitMode::Custom(v) => {
                if v.len() < order + 1 {
                    return Err(Error::ParameterMismatch(format!(
                        "custom initial vector has {} entries, order {order} needs {}",
                        v.len(),
                        order + 1
                    )));
                }
                v[..=order].to_vec()
            }
        })
    }
}

/// `dm_n/dt = −n m_n + θ n m_{n−1} + λθ n Σ_{k=0}^{n−2} m_{n−k−1}(m_k − m_{k+1})`,
/// with `dm_0/dt = 0`.
pub fn recurrence_rhs(lambda: f64, theta: f64, m: &[f64], out: &mut [f64]) {
    hierarchy_rhs(theta, lambda * theta, m, out);
}

/// The same hierarchy for `v_n = λ m_n`, where the `λ` in front of the
/// quadratic term is absorbed into `v_0 = λ`.
pub fn scaled_rhs(theta: f64, v: &[f64], out: &mut [f64]) {
    hierarchy_rhs(theta, theta, v, out);
}

fn hierarchy_rhs(linear: f64, quadratic: f64, m: &[f64], out: &mut [f64]) {
    out[0] = 0.0;
    for n in 1..m.len() {
        let nf = n as f64;
        let mut sum = 0.0;
        for k in 0..n.saturating_sub(1) {
            sum += m[n - k - 1] * (m[k] - m[k + 1]);
        }
        out[n] = nf * (-m[n] + linear * m[n - 1] + quadratic * sum);
    }
}

/// Which route produced a set of moments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMethod {
    Recurrence,
    Scaled,
    ClosedForm,
    SymmetricSum,
    Expansion,
    Complement,
}

impl MomentMethod {
    pub fn tag(self) -> &'static str {
        match self {
            MomentMethod::Recurrence => "recurrence",
            MomentMethod::Scaled => "scaled",
            MomentMethod::ClosedForm => "closed-form",
            MomentMethod::SymmetricSum => "symmetric-sum",
            MomentMethod::Expansion => "expansion",
            MomentMethod::Complement => "complement",
        }
    }
}

impl fmt::Display for MomentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MomentMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "recurrence" => Ok(MomentMethod::Recurrence),
            "closed-form" => Ok(MomentMethod::ClosedForm),
            "expansion" => Ok(MomentMethod::Expansion),
            other => Err(format!(
                "unknown method `{other}` (expected recurrence, closed-form or expansion)"
            )),
        }
    }
}

/// Moment vectors `m_0..m_N` at increasing times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentTrajectory {
    pub params: ProcessParams,
    pub order: usize,
    /// Largest RK4 step used; `None` for closed-form routes.
    pub step: Option<f64>,
    pub method: MomentMethod,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Time-matching slack when looking samples up by value.
const TIME_SLACK: f64 = 1e-9;

impl MomentTrajectory {
    /// Moments at the sample closest to `t`, if one lies within `1e−9`.
    pub fn at(&self, t: f64) -> Option<&[f64]> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= TIME_SLACK)
            .map(|i| self.values[i].as_slice())
    }

    pub fn require(&self, t: f64, purpose: &'static str) -> Result<&[f64]> {
        self.at(t).ok_or(Error::InsufficientSamples { t, purpose })
    }

    pub fn last(&self) -> &[f64] {
        self.values.last().expect("trajectory has at least one sample")
    }

    /// First `(t, n)` breaking `0 ≤ m_{n+1} ≤ m_n ≤ 1` beyond `slack`.
    pub fn contraction_violation(&self, slack: f64) -> Option<(f64, usize)> {
        for (t, m) in self.times.iter().zip(&self.values) {
            for n in 0..m.len() {
                let above = m[n] > 1.0 + slack || m[n] < -slack;
                let rising = n + 1 < m.len() && m[n + 1] > m[n] + slack;
                if above || rising {
                    return Some((*t, n));
                }
            }
        }
        None
    }

    /// Long-format rows `t,n,m_n,method` for `1 ≤ n ≤ N`.
    pub fn rows(&self) -> Vec<MomentRow> {
        let mut rows = Vec::with_capacity(self.times.len() * self.order);
        for (t, m) in self.times.iter().zip(&self.values) {
            for (n, v) in m.iter().enumerate().skip(1) {
                rows.push(MomentRow {
                    t: *t,
                    n,
                    m_n: *v,
                    method: self.method,
                });
            }
        }
        rows
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub t: f64,
    pub n: usize,
    pub m_n: f64,
    pub method: MomentMethod,
}

fn check_integration_args(order: usize, h: f64) -> Result<()> {
    if order < 1 {
        return Err(Error::param("order", order as f64, "must be at least 1"));
    }
    if !(h > 0.0) {
        return Err(Error::param("step", h, "must be positive"));
    }
    Ok(())
}

fn check_times(times: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for &t in times {
        if !(t >= prev) || !t.is_finite() {
            return Err(Error::param("t", t, "sample times must be finite, nonnegative and increasing"));
        }
        prev = t;
    }
    Ok(())
}

fn run_hierarchy(
    params: &ProcessParams,
    start: Vec<f64>,
    times: &[f64],
    h: f64,
    rhs: &impl ode::Rhs,
    method: MomentMethod,
) -> Result<MomentTrajectory> {
    check_times(times)?;
    let order = start.len() - 1;
    let mut y = start;
    let mut now = 0.0;
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        now = ode::integrate(rhs, now, &mut y, t - now, h);
        now = now.max(t);
        values.push(y.clone());
    }
    Ok(MomentTrajectory {
        params: params.clone(),
        order,
        step: Some(h),
        method,
        times: times.to_vec(),
        values,
    })
}

/// RK4 integration of the hierarchy, sampled exactly at each of `times`
/// (nonnegative and nondecreasing). Each gap is split into equal steps of at
/// most `h`.
pub fn integrate_moments_at(
    params: &ProcessParams,
    times: &[f64],
    order: usize,
    h: f64,
) -> Result<MomentTrajectory> {
    check_integration_args(order, h)?;
    let start = params.initial_moments(order)?;
    let (lambda, theta) = (params.lambda, params.theta);
    let rhs = move |_t: f64, m: &[f64], out: &mut [f64]| recurrence_rhs(lambda, theta, m, out);
    run_hierarchy(params, start, times, h, &rhs, MomentMethod::Recurrence)
}

/// RK4 integration up to `t_end`, recording `t = 0`, every `stride` steps,
/// and `t_end`.
pub fn integrate_moments(
    params: &ProcessParams,
    t_end: f64,
    order: usize,
    h: f64,
    stride: usize,
) -> Result<MomentTrajectory> {
    check_integration_args(order, h)?;
    if !(t_end >= 0.0) {
        return Err(Error::param("t", t_end, "must be nonnegative"));
    }
    integrate_moments_at(params, &output_grid(t_end, h, stride), order, h)
}

/// `0, stride·h, 2·stride·h, …` followed by `t_end`.
pub fn output_grid(t_end: f64, h: f64, stride: usize) -> Vec<f64> {
    let stride = stride.max(1);
    let dt = h * stride as f64;
    let mut times = vec![0.0];
    let mut k = 1usize;
    while (k as f64) * dt < t_end - TIME_SLACK {
        times.push(k as f64 * dt);
        k += 1;
    }
    if t_end > 0.0 {
        times.push(t_end);
    }
    times
}

/// Samples at `t + jδ` for `j = −2..=2`, for five-point time derivatives.
/// The trajectory reaches `t − 2δ` with steps of at most `h` and then moves
/// in steps of exactly `δ`.
pub fn stencil_trajectory(
    params: &ProcessParams,
    t: f64,
    delta: f64,
    order: usize,
    h: f64,
) -> Result<MomentTrajectory> {
    if !(delta > 0.0 && t - 2.0 * delta >= 0.0) {
        return Err(Error::InsufficientSamples {
            t,
            purpose: "a five-point stencil needs t >= 2*delta",
        });
    }
    integrate_moments_at(params, &stencil_times(t, delta), order, h.max(delta))
}

pub fn stencil_times(t: f64, delta: f64) -> Vec<f64> {
    (-2..=2).map(|j| t + j as f64 * delta).collect()
}

/// Five-point centered derivative from samples at `t−2δ, t−δ, t, t+δ, t+2δ`.
pub fn five_point_derivative(f: [f64; 5], delta: f64) -> f64 {
    (8.0 * (f[3] - f[1]) - (f[4] - f[0])) / (12.0 * delta)
}

/// Integrates `v_n = λ m_n` through [`scaled_rhs`] from `v_n(0) = λ m_n(0)`.
/// The stored values are `v_0..v_N`, with `v_0 = λ`.
pub fn integrate_scaled_at(
    params: &ProcessParams,
    times: &[f64],
    order: usize,
    h: f64,
) -> Result<MomentTrajectory> {
    check_integration_args(order, h)?;
    let lambda = params.lambda;
    let start: Vec<f64> = params
        .initial_moments(order)?
        .into_iter()
        .map(|m| lambda * m)
        .collect();
    let theta = params.theta;
    let rhs = move |_t: f64, v: &[f64], out: &mut [f64]| scaled_rhs(theta, v, out);
    run_hierarchy(params, start, times, h, &rhs, MomentMethod::Scaled)
}

/// `C(2n, n−k) / 4^n` for `k = 0..=n`, by ratios so no factor overflows.
pub fn central_weights(n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n + 1);
    let mut w0 = 1.0;
    for i in 1..=n {
        w0 *= (2 * i - 1) as f64 / (2 * i) as f64;
    }
    w.push(w0);
    for k in 1..=n {
        let prev = w[k - 1];
        w.push(prev * (n + 1 - k) as f64 / (n + k) as f64);
    }
    w
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("t", t, "must be finite and nonnegative"));
    }
    Ok(())
}

/// Laguerre closed form at `λ = 1`, `θ = 1/2`:
/// `m_n(t) = C(2n,n)/4^n + 2^{1−2n} Σ_{k=1}^n C(2n,n−k) L_{k−1}^1(2kt) e^{−kt} / k`.
pub fn closed_form_lambda1(t: f64, order: usize) -> Result<Vec<f64>> {
    check_time(t)?;
    let mut out = Vec::with_capacity(order + 1);
    out.push(1.0);
    for n in 1..=order {
        let w = central_weights(n);
        let mut m = w[0];
        for k in 1..=n {
            let kf = k as f64;
            m += 2.0 * w[k] * laguerre1(k - 1, 2.0 * kf * t) * (-kf * t).exp() / kf;
        }
        out.push(m);
    }
    Ok(out)
}

/// `m_n(t) = 4^{−n} Σ_{k=−n}^{n} C(2n, n−k) h_{|k|}(2t)`, summed term by term.
pub fn symmetric_sum_moments(t: f64, order: usize) -> Result<Vec<f64>> {
    check_time(t)?;
    let mut out = Vec::with_capacity(order + 1);
    out.push(1.0);
    for n in 1..=order as i64 {
        let scale = 4f64.powi(n as i32);
        let sum: f64 = (-n..=n)
            .map(|k| binomial_f64(2 * n as u64, n - k) * ubm_moment_signed(k, 2.0 * t))
            .sum();
        out.push(sum / scale);
    }
    Ok(out)
}

/// Moments at `λ = 1` and general `θ` from the word expansion:
/// `m_n = [C(2n,n)/2 + Σ_k C(2n,n−k) e^{−kt} s_k(t) + (2θ−1) 2^{2n−1}] / (4^n θ)`.
pub fn expansion_moments(theta: f64, t: f64, order: usize, h: f64) -> Result<Vec<f64>> {
    check_time(t)?;
    let s = s_moments(theta, t, order, h)?;
    let mut out = Vec::with_capacity(order + 1);
    out.push(1.0);
    for n in 1..=order {
        let w = central_weights(n);
        let mut m = 0.5 * w[0] + 0.5 * (2.0 * theta - 1.0);
        for k in 1..=n {
            m += w[k] * s.unitary_moment(k);
        }
        out.push(m / theta);
    }
    Ok(out)
}

fn pointwise_trajectory(
    params: ProcessParams,
    times: &[f64],
    order: usize,
    method: MomentMethod,
    step: Option<f64>,
    eval: impl Fn(f64) -> Result<Vec<f64>>,
) -> Result<MomentTrajectory> {
    check_times(times)?;
    let values = times.iter().map(|&t| eval(t)).collect::<Result<Vec<_>>>()?;
    Ok(MomentTrajectory {
        params,
        order,
        step,
        method,
        times: times.to_vec(),
        values,
    })
}

pub fn closed_form_trajectory(times: &[f64], order: usize) -> Result<MomentTrajectory> {
    pointwise_trajectory(
        ProcessParams::standard(),
        times,
        order,
        MomentMethod::ClosedForm,
        None,
        |t| closed_form_lambda1(t, order),
    )
}

pub fn expansion_trajectory(
    theta: f64,
    times: &[f64],
    order: usize,
    h: f64,
) -> Result<MomentTrajectory> {
    let params = ProcessParams::new(1.0, theta, InitMode::PLeQ)?;
    pointwise_trajectory(params, times, order, MomentMethod::Expansion, Some(h), |t| {
        expansion_moments(theta, t, order, h)
    })
}

/// Recovers the `λ' ∈ [1, 2)`, `θ = 1/2`, `P ≥ Q` moments from a trajectory
/// for `2 − λ'` with orthogonal initial data, via
/// `τ[((1−P)YQY^*)^n] = τ(Q) + Σ_{k=1}^n (−1)^k C(n,k) τ(P) m_k`
/// normalized by `τ(1−P) = λ'/2`.
pub fn complement_moments(source: &MomentTrajectory, lambda_prime: f64) -> Result<MomentTrajectory> {
    if !(1.0..2.0).contains(&lambda_prime) {
        return Err(Error::param("lambda_prime", lambda_prime, "must lie in [1, 2)"));
    }
    let p = &source.params;
    if p.theta != 0.5 {
        return Err(Error::ParameterMismatch(format!(
            "complement source needs theta = 1/2, got {}",
            p.theta
        )));
    }
    if p.init != InitMode::Orthogonal {
        return Err(Error::ParameterMismatch(format!(
            "complement source needs orthogonal initial data, got {}",
            p.init
        )));
    }
    if (p.lambda - (2.0 - lambda_prime)).abs() > 1e-12 {
        return Err(Error::ParameterMismatch(format!(
            "complement source has lambda = {}, expected 2 - {lambda_prime} = {}",
            p.lambda,
            2.0 - lambda_prime
        )));
    }
    let trace_p = (2.0 - lambda_prime) / 2.0;
    let trace_complement = lambda_prime / 2.0;
    let values = source
        .values
        .iter()
        .map(|m| {
            let mut out = Vec::with_capacity(m.len());
            out.push(1.0);
            for n in 1..m.len() {
                let mut acc = 0.5;
                for k in 1..=n {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    acc += sign * binomial_f64(n as u64, k as i64) * trace_p * m[k];
                }
                out.push(acc / trace_complement);
            }
            out
        })
        .collect();
    Ok(MomentTrajectory {
        params: ProcessParams::new(lambda_prime, 0.5, InitMode::PGeQ)?,
        order: source.order,
        step: source.step,
        method: MomentMethod::Complement,
        times: source.times.clone(),
        values,
    })
}

/// `C(2n,n)/4^n` for `n = 0..=N` in double precision.
pub fn arcsine_moments(order: usize) -> Vec<f64> {
    (0..=order).map(|n| central_weights(n)[0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn std_params() -> ProcessParams {
        ProcessParams::standard()
    }

    #[test]
    fn first_component_is_linear() {
        let m = [1.0, 0.3, 0.2];
        let mut out = [0.0; 3];
        recurrence_rhs(0.7, 0.4, &m, &mut out);
        assert_abs_diff_eq!(out[1], -0.3 + 0.4, epsilon = 1e-15);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn arcsine_vector_is_stationary() {
        let m = arcsine_moments(40);
        let mut out = vec![0.0; 41];
        recurrence_rhs(1.0, 0.5, &m, &mut out);
        for v in out {
            assert!(v.abs() < 1e-13, "{v}");
        }
    }

    #[test]
    fn all_ones_gives_n_theta_minus_one() {
        let m = vec![1.0; 10];
        let mut out = vec![0.0; 10];
        recurrence_rhs(0.8, 0.3, &m, &mut out);
        for (n, v) in out.iter().enumerate().skip(1) {
            assert_abs_diff_eq!(*v, n as f64 * (0.3 - 1.0), epsilon = 1e-14);
        }
    }

    #[test]
    fn first_moment_matches_exact_solution() {
        let traj = integrate_moments(&std_params(), 1.0, 4, 1e-3, 100).unwrap();
        assert_eq!(traj.times.len(), 11);
        let m1 = traj.last()[1];
        assert_abs_diff_eq!(m1, (1.0 + (-1.0f64).exp()) / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn long_time_limit_is_arcsine() {
        let traj = integrate_moments_at(&std_params(), &[30.0], 10, 1e-3).unwrap();
        let arcsine = arcsine_moments(10);
        for n in 1..=10 {
            assert_abs_diff_eq!(traj.last()[n], arcsine[n], epsilon = 1e-8);
        }
    }

    #[test]
    fn geometry_constraints() {
        assert!(ProcessParams::new(2.0, 0.4, InitMode::PLeQ).is_err());
        assert!(ProcessParams::new(0.5, 0.4, InitMode::PGeQ).is_err());
        assert!(ProcessParams::new(1.5, 0.5, InitMode::Orthogonal).is_err());
        assert!(ProcessParams::new(1.0, 0.5, InitMode::Orthogonal).is_ok());
        assert!(ProcessParams::new(1.0, 1.0, InitMode::PLeQ).is_err());
        assert!(ProcessParams::new(2.5, 0.4, InitMode::PGeQ).is_err());
        assert!(ProcessParams::new(0.5, 0.5, InitMode::Custom(vec![0.9, 0.1])).is_err());
        assert!(ProcessParams::new(0.5, 0.5, InitMode::Custom(vec![1.0, f64::NAN])).is_err());
    }

    #[test]
    fn custom_initial_data_too_short() {
        let p = ProcessParams::new(0.5, 0.5, InitMode::Custom(vec![1.0, 0.5])).unwrap();
        assert!(matches!(p.initial_moments(3), Err(Error::ParameterMismatch(_))));
        assert_eq!(p.initial_moments(1).unwrap(), vec![1.0, 0.5]);
    }

    #[test]
    fn closed_form_examples() {
        let t = 0.7;
        let m = closed_form_lambda1(t, 3).unwrap();
        assert_abs_diff_eq!(m[1], (1.0 + (-t).exp()) / 2.0, epsilon = 1e-15);
        let at_zero = closed_form_lambda1(0.0, 12).unwrap();
        for v in at_zero {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn expansion_at_zero_is_one_for_any_theta() {
        for &theta in &[0.2, 0.5, 0.75] {
            let m = expansion_moments(theta, 0.0, 8, 1e-3).unwrap();
            for v in m {
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn expansion_first_moment_half() {
        let m = expansion_moments(0.5, 1.3, 2, 1e-3).unwrap();
        assert_abs_diff_eq!(m[1], (1.0 + (-1.3f64).exp()) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn complement_at_time_zero() {
        let src_params = ProcessParams::new(0.5, 0.5, InitMode::Orthogonal).unwrap();
        let src = integrate_moments_at(&src_params, &[0.0, 0.5], 6, 1e-3).unwrap();
        let out = complement_moments(&src, 1.5).unwrap();
        for v in &out.values[0][1..] {
            assert_abs_diff_eq!(*v, 1.0 / 1.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn complement_rejects_mismatched_source() {
        let src = integrate_moments_at(&std_params(), &[0.5], 3, 1e-3).unwrap();
        assert!(matches!(
            complement_moments(&src, 1.5),
            Err(Error::ParameterMismatch(_))
        ));
        let p = ProcessParams::new(0.6, 0.5, InitMode::Orthogonal).unwrap();
        let src = integrate_moments_at(&p, &[0.5], 3, 1e-3).unwrap();
        assert!(matches!(
            complement_moments(&src, 1.5),
            Err(Error::ParameterMismatch(_))
        ));
    }

    #[test]
    fn scaled_system_tracks_lambda_times_moments() {
        let p = ProcessParams::new(0.8, 0.5, InitMode::PLeQ).unwrap();
        let direct = integrate_moments_at(&p, &[1.0], 8, 1e-3).unwrap();
        let scaled = integrate_scaled_at(&p, &[1.0], 8, 1e-3).unwrap();
        for n in 0..=8 {
            assert_abs_diff_eq!(scaled.last()[n], 0.8 * direct.last()[n], epsilon = 1e-12);
        }
    }

    #[test]
    fn output_grid_endpoints() {
        let g = output_grid(1.0, 1e-3, 250);
        assert_eq!(g.len(), 5);
        assert_abs_diff_eq!(g[4], 1.0, epsilon = 0.0);
        assert_eq!(output_grid(0.0, 1e-3, 10), vec![0.0]);
    }

    #[test]
    fn central_weights_sum() {
        for n in 1..30 {
            let w = central_weights(n);
            let total = w[0] + 2.0 * w[1..].iter().sum::<f64>();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(central_weights(2)[0], 3.0 / 8.0, epsilon = 0.0);
    }

    #[test]
    fn five_point_derivative_is_exact_on_quartics() {
        let f = |x: f64| x.powi(4) - 2.0 * x.powi(3);
        let d = 0.01;
        let s = [f(1.0 - 2.0 * d), f(1.0 - d), f(1.0), f(1.0 + d), f(1.0 + 2.0 * d)];
        assert_abs_diff_eq!(five_point_derivative(s, d), 4.0 - 6.0, epsilon = 1e-9);
    }
}
