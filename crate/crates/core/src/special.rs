//! Laguerre polynomials of index 1, the moments `h_n(t)` of the free unitary
//! Brownian motion, and the `s_n(t)` system for `e^{nt} τ((a Y_t a Y_t^*)^n)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode;

/// `L_n^1(x)` by the forward three-term recurrence
/// `(k+1) L_{k+1} = (2k + 2 − x) L_k − (k+1) L_{k−1}`.
pub fn laguerre1(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 2.0 - x) * cur - (kf + 1.0) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Tabulates `L_0^1(x), …, L_max^1(x)` in one recurrence pass.
#[derive(Clone, Copy, Debug)]
pub struct LaguerreEvaluator {
    pub max_degree: usize,
}

impl LaguerreEvaluator {
    pub fn new(max_degree: usize) -> Self {
        Self { max_degree }
    }

    pub fn values(&self, x: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.max_degree + 1);
        out.push(1.0);
        if self.max_degree >= 1 {
            out.push(2.0 - x);
        }
        for k in 1..self.max_degree {
            let kf = k as f64;
            out.push(((2.0 * kf + 2.0 - x) * out[k] - (kf + 1.0) * out[k - 1]) / (kf + 1.0));
        }
        out
    }
}

/// `C(n, k)` in double precision (exact below 2^53), zero outside `0 ≤ k ≤ n`.
pub fn binomial_f64(n: u64, k: i64) -> f64 {
    if k < 0 || k as u64 > n {
        return 0.0;
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = 1.0;
    for i in 1..=k {
        acc = acc * (n - k + i) as f64 / i as f64;
    }
    acc.round_if_exact()
}

trait RoundIfExact {
    fn round_if_exact(self) -> f64;
}

impl RoundIfExact for f64 {
    fn round_if_exact(self) -> f64 {
        if self < 9.0e15 {
            self.round()
        } else {
            self
        }
    }
}

/// `L_n^1(x) = m · e^{s}`, returned as `(m, s)`: the recurrence is rescaled
/// whenever it grows past `1e200`, so large arguments do not overflow.
pub fn laguerre1_scaled(n: usize, x: f64) -> (f64, f64) {
    const LIMIT: f64 = 1e200;
    let mut log_scale = 0.0;
    let mut prev = 1.0;
    if n == 0 {
        return (prev, log_scale);
    }
    let mut cur = 2.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 2.0 - x) * cur - (kf + 1.0) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > LIMIT {
            prev /= LIMIT;
            cur /= LIMIT;
            log_scale += LIMIT.ln();
        }
    }
    (cur, log_scale)
}

/// `h_n(t) = τ(Y_t^n) = e^{−nt/2} L_{n−1}^1(nt) / n` for `n ≥ 1`.
pub fn ubm_moment(n: u32, t: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let (m, log_scale) = laguerre1_scaled(n as usize - 1, nf * t);
    m * (log_scale - nf * t / 2.0).exp() / nf
}

/// `h_n` extended to all integers by `h_{−n} = h_n`, `h_0 = 1`.
pub fn ubm_moment_signed(n: i64, t: f64) -> f64 {
    ubm_moment(n.unsigned_abs() as u32, t)
}

/// `h_1(t), …, h_N(t)` at a fixed time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UbmMomentVector {
    pub t: f64,
    /// `h[n-1] = h_n(t)`.
    pub h: Vec<f64>,
}

impl UbmMomentVector {
    pub fn new(t: f64, order: usize) -> Self {
        Self {
            t,
            h: (1..=order as u32).map(|n| ubm_moment(n, t)).collect(),
        }
    }

    pub fn get(&self, n: i64) -> f64 {
        match n.unsigned_abs() as usize {
            0 => 1.0,
            k => self.h[k - 1],
        }
    }
}

/// Closed form at `θ = 1/2`: `s_n(t) = L_{n−1}^1(2nt) / n`.
pub fn s_closed(n: u32, t: f64) -> f64 {
    let nf = n as f64;
    laguerre1(n as usize - 1, 2.0 * nf * t) / nf
}

/// How a vector of `s_n` values was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SRoute {
    ClosedForm,
    Integrated,
}

/// `s_1(t), …, s_N(t)` at `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SMoments {
    pub theta: f64,
    pub t: f64,
    /// `values[n] = s_n(t)`, with `values[0] = 1`.
    pub values: Vec<f64>,
    pub route: SRoute,
    /// Set whenever `θ ≠ 1/2`: the inhomogeneous system is integrated as
    /// written and has no independent closed form to check against.
    pub experimental: bool,
}

impl SMoments {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    /// `e^{−nt} s_n(t) = τ((a Y_t a Y_t^*)^n)`.
    pub fn unitary_moment(&self, n: usize) -> f64 {
        (-(n as f64) * self.t).exp() * self.values[n]
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param("theta", theta, "must lie in (0, 1)"));
    }
    Ok(())
}

/// `s_1(t) = 1 + (2θ − 1)² (e^t − 1)`.
pub fn s1_exact(theta: f64, t: f64) -> f64 {
    let b = 2.0 * theta - 1.0;
    1.0 + b * b * t.exp_m1()
}

/// Right-hand side of
/// `∂_t s_n = −n Σ_{k=1}^{n−1} s_{n−k} s_k + e^{nt} [2n(2θ−1) + (n−1)(n−2)(2θ−1)²]`
/// for `n ≥ 2`, with `s_1` pinned to [`s1_exact`].
pub fn s_system_rhs(theta: f64, t: f64, s: &[f64], out: &mut [f64]) {
    let b = 2.0 * theta - 1.0;
    let order = s.len() - 1;
    out[0] = 0.0;
    if order == 0 {
        return;
    }
    out[1] = b * b * t.exp();
    let s1 = s1_exact(theta, t);
    let at = |k: usize| if k == 1 { s1 } else { s[k] };
    for n in 2..=order {
        let nf = n as f64;
        let conv: f64 = (1..n).map(|k| at(n - k) * at(k)).sum();
        let forcing = if b == 0.0 {
            0.0
        } else {
            (nf * t).exp() * (2.0 * nf * b + (nf - 1.0) * (nf - 2.0) * b * b)
        };
        out[n] = -nf * conv + forcing;
    }
}

/// RK4 integration of the `s_n` system from `s_n(0) = 1`.
pub fn s_moments_integrated(theta: f64, t_end: f64, order: usize, h: f64) -> Result<SMoments> {
    check_theta(theta)?;
    if !(t_end >= 0.0) {
        return Err(Error::param("t", t_end, "must be nonnegative"));
    }
    if !(h > 0.0) {
        return Err(Error::param("step", h, "must be positive"));
    }
    let mut s = vec![1.0; order + 1];
    let rhs = |t: f64, y: &[f64], out: &mut [f64]| s_system_rhs(theta, t, y, out);
    ode::integrate(&rhs, 0.0, &mut s, t_end, h);
    if order >= 1 {
        s[1] = s1_exact(theta, t_end);
    }
    Ok(SMoments {
        theta,
        t: t_end,
        values: s,
        route: SRoute::Integrated,
        experimental: theta != 0.5,
    })
}

/// `s_1..s_N` at `t_end`: the Laguerre closed form when `θ = 1/2`, otherwise
/// the integrated system.
pub fn s_moments(theta: f64, t_end: f64, order: usize, h: f64) -> Result<SMoments> {
    check_theta(theta)?;
    if theta == 0.5 {
        if !(t_end >= 0.0) {
            return Err(Error::param("t", t_end, "must be nonnegative"));
        }
        let mut values = vec![1.0];
        values.extend((1..=order as u32).map(|n| s_closed(n, t_end)));
        return Ok(SMoments {
            theta,
            t: t_end,
            values,
            route: SRoute::ClosedForm,
            experimental: false,
        });
    }
    s_moments_integrated(theta, t_end, order, h)
}

/// CSV row `n,t,s_n,closed_form_if_any`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SRow {
    pub n: usize,
    pub t: f64,
    pub s_n: f64,
    pub closed_form_if_any: Option<f64>,
}

pub fn s_rows(s: &SMoments) -> Vec<SRow> {
    (1..=s.order())
        .map(|n| SRow {
            n,
            t: s.t,
            s_n: s.values[n],
            closed_form_if_any: (s.theta == 0.5).then(|| s_closed(n as u32, s.t)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn laguerre_low_degrees() {
        assert_eq!(laguerre1(0, 7.3), 1.0);
        assert_eq!(laguerre1(1, 3.0), -1.0);
        assert_abs_diff_eq!(laguerre1(2, 2.0), -1.0, epsilon = 1e-15);
        // L_2^1(x) = 3 − 3x + x²/2
        for &x in &[0.0, 0.7, 5.5, 40.0] {
            assert_abs_diff_eq!(laguerre1(2, x), 3.0 - 3.0 * x + x * x / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn laguerre_at_zero_is_n_plus_one() {
        for n in 0..40 {
            assert_abs_diff_eq!(laguerre1(n, 0.0), (n + 1) as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn evaluator_matches_pointwise() {
        let table = LaguerreEvaluator::new(12).values(3.7);
        for (n, v) in table.iter().enumerate() {
            assert_eq!(*v, laguerre1(n, 3.7));
        }
    }

    #[test]
    fn laguerre_power_series_oracle() {
        // L_n^1(x) = Σ_j (−1)^j C(n+1, n−j) x^j / j!
        let series = |n: usize, x: f64| {
            let mut sum = 0.0;
            let mut fact = 1.0;
            for j in 0..=n {
                if j > 0 {
                    fact *= j as f64;
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sum += sign * binomial_f64(n as u64 + 1, (n - j) as i64) * x.powi(j as i32) / fact;
            }
            sum
        };
        for n in 0..10 {
            for &x in &[0.3, 1.0, 2.5] {
                assert_abs_diff_eq!(laguerre1(n, x), series(n, x), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn ubm_moment_values() {
        for &t in &[0.0, 0.4, 2.0] {
            assert_abs_diff_eq!(ubm_moment(1, t), (-t / 2.0).exp(), epsilon = 1e-15);
        }
        for n in 1..20 {
            assert_abs_diff_eq!(ubm_moment(n, 0.0), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(ubm_moment(2, 1.0), 0.0, epsilon = 1e-15);
        assert_eq!(ubm_moment_signed(-3, 0.7), ubm_moment(3, 0.7));
        assert_eq!(ubm_moment_signed(0, 0.7), 1.0);
    }

    #[test]
    fn ubm_moments_are_bounded() {
        for n in 1..=64 {
            for &t in &[0.1, 0.5, 1.0, 2.0, 4.0, 8.0] {
                assert!(ubm_moment(n, t).abs() <= 1.0 + 1e-12, "h_{n}({t})");
            }
        }
    }

    #[test]
    fn scaled_laguerre_agrees_and_survives_large_arguments() {
        for &(n, x) in &[(5usize, 3.0), (30, 100.0), (200, 50.0)] {
            let (m, s) = laguerre1_scaled(n, x);
            let direct = laguerre1(n, x);
            assert!((m * s.exp() - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
        // L_255^1(2048) ~ 1e341 overflows without rescaling.
        assert!(!laguerre1(255, 2048.0).is_finite());
        let h = ubm_moment(256, 8.0);
        assert!(h.is_finite() && h.abs() <= 1.0);
    }

    #[test]
    fn s_closed_form_examples() {
        let s = s_moments(0.5, 0.8, 3, 1e-3).unwrap();
        assert_eq!(s.values[1], 1.0);
        assert_abs_diff_eq!(s.values[2], 1.0 - 2.0 * 0.8, epsilon = 1e-15);
        assert_eq!(s.route, SRoute::ClosedForm);
    }

    #[test]
    fn s_integrated_matches_closed_form_at_half() {
        let s = s_moments_integrated(0.5, 1.0, 12, 1e-3).unwrap();
        for n in 1..=12 {
            let closed = s_closed(n as u32, 1.0);
            assert!(
                (s.values[n] - closed).abs() <= 1e-8 * closed.abs().max(1.0),
                "n={n}: {} vs {closed}",
                s.values[n]
            );
        }
    }

    #[test]
    fn s_system_general_theta_flagged() {
        let s = s_moments(0.75, 0.5, 4, 1e-3).unwrap();
        assert!(s.experimental);
        assert_eq!(s.route, SRoute::Integrated);
        assert_abs_diff_eq!(s.values[1], s1_exact(0.75, 0.5), epsilon = 0.0);
        assert!(s_moments(1.0, 0.5, 4, 1e-3).is_err());
        assert!(s_moments(0.0, 0.5, 4, 1e-3).is_err());
    }

    #[test]
    fn binomial_f64_exact_range() {
        assert_eq!(binomial_f64(32, 16), 601080390.0);
        assert_eq!(binomial_f64(5, -1), 0.0);
    }
}
