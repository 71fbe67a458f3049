//! Generating functions of the moments: the `λ = 1` moment generating
//! function, the stationary transform, the decomposition of `M_t − M_∞` for
//! `λ < 1` and the PDE residual checks.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{central_weights, five_point_derivative, stencil_times, MomentTrajectory};
use crate::series::TruncatedSeries;
use crate::special::{binomial_f64, laguerre1};
use crate::stationary::StationaryLaw;

fn one_minus_z(order: usize) -> TruncatedSeries {
    TruncatedSeries::polynomial(&[1.0, -1.0], order)
}

fn inv_sqrt_one_minus_z(order: usize) -> TruncatedSeries {
    // 1/√(1−z) = Σ C(2n,n)/4^n z^n
    TruncatedSeries::from_fn(order, |n| central_weights(n)[0])
}

/// `β_n = [z^n] √(1−z) = −C(2n,n) / (4^n (2n−1))`.
pub fn beta(n: usize) -> f64 {
    -central_weights(n)[0] / (2.0 * n as f64 - 1.0)
}

/// `α(z) = z / (1 + √(1−z))²`.
pub fn alpha_series(order: usize) -> TruncatedSeries {
    let mut den = one_minus_z(order).sqrt().expect("1 − z has unit constant term");
    let mut c = den.coeffs().to_vec();
    c[0] += 1.0;
    den = TruncatedSeries::new(c);
    let den = den.mul(&den);
    TruncatedSeries::identity(order)
        .div(&den)
        .expect("(1 + √(1−z))² has constant term 4")
}

/// `α^{−1}(z) = 4z / (1+z)²`, coefficient `n` equal to `4(−1)^{n−1} n`.
pub fn alpha_inv_series(order: usize) -> TruncatedSeries {
    TruncatedSeries::from_fn(order, |n| {
        if n == 0 {
            0.0
        } else {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            4.0 * sign * n as f64
        }
    })
}

/// `ρ_t(z) = Σ_{k≥1} L_{k−1}^1(kt) z^k / k`.
pub fn rho_series(t: f64, order: usize) -> TruncatedSeries {
    TruncatedSeries::from_fn(order, |k| {
        if k == 0 {
            0.0
        } else {
            let kf = k as f64;
            laguerre1(k - 1, kf * t) / kf
        }
    })
}

/// `M_t(z) = (1/√(1−z)) [1 + 2 ρ_{2t}(e^{−t} α(z))]` at `λ = 1`, `θ = 1/2`.
pub fn mgf_closed_lambda1(t: f64, order: usize) -> TruncatedSeries {
    let w = alpha_series(order).scale((-t).exp());
    let mut inner = rho_series(2.0 * t, order)
        .compose(&w)
        .expect("α has no constant term")
        .scale(2.0)
        .into_coeffs();
    inner[0] += 1.0;
    inv_sqrt_one_minus_z(order).mul(&TruncatedSeries::new(inner))
}

/// `α ∘ α^{−1}` evaluated in exact rationals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactRoundtrip {
    pub order: usize,
    /// Whether `α(α^{−1}(z)) = z` holds exactly modulo `z^{N+1}`.
    pub is_identity: bool,
    /// `max_n |[z^n]α − exact|` for the double-precision [`alpha_series`].
    pub float_gap: f64,
}

/// Composing with `α^{−1}` in double precision is ill-conditioned: its
/// coefficients grow like `4n` and the Horner partial sums cancel by many
/// orders of magnitude. Both series have rational coefficients
/// (`α = (1 − √(1−z))²/z`), so this direction is checked exactly.
pub fn alpha_roundtrip_exact(order: usize) -> ExactRoundtrip {
    use num_rational::BigRational;
    use num_traits::Zero;

    let mul = |a: &[BigRational], b: &[BigRational]| -> Vec<BigRational> {
        (0..=order)
            .map(|k| (0..=k).map(|j| &a[j] * &b[k - j]).fold(BigRational::zero(), |x, y| x + y))
            .collect()
    };
    // 1 − √(1−z) has coefficients −β_n for n ≥ 1; dividing its square by z
    // shifts down, so one extra coefficient is needed.
    let ext = order + 1;
    let one_minus_root: Vec<BigRational> = (0..=ext)
        .map(|n| {
            if n == 0 {
                BigRational::zero()
            } else {
                -crate::exact::sqrt_one_minus_coeff(n as u64).as_ratio().clone()
            }
        })
        .collect();
    let sq: Vec<BigRational> = (0..=ext)
        .map(|k| {
            (0..=k)
                .map(|j| &one_minus_root[j] * &one_minus_root[k - j])
                .fold(BigRational::zero(), |x, y| x + y)
        })
        .collect();
    let alpha: Vec<BigRational> = sq[1..].to_vec();
    let inv: Vec<BigRational> = alpha_inv_series(order)
        .coeffs()
        .iter()
        .map(|&c| BigRational::from_integer((c as i64).into()))
        .collect();
    let mut acc = vec![BigRational::zero(); order + 1];
    for c in alpha.iter().rev() {
        acc = mul(&acc, &inv);
        acc[0] += c;
    }
    let is_identity = acc
        .iter()
        .enumerate()
        .all(|(n, c)| if n == 1 { *c == BigRational::from_integer(1.into()) } else { c.is_zero() });
    let float = alpha_series(order);
    let float_gap = alpha
        .iter()
        .enumerate()
        .map(|(n, c)| (crate::exact::ExactRational::from(c.clone()).to_f64() - float.coeff(n)).abs())
        .fold(0.0, f64::max);
    ExactRoundtrip {
        order,
        is_identity,
        float_gap,
    }
}

/// `√(4 − 4z + (1−λ)² z²)` by series square root; its coefficients are `γ_n`.
pub fn radical_series(lambda: f64, order: usize) -> TruncatedSeries {
    let d = 1.0 - lambda;
    TruncatedSeries::polynomial(&[4.0, -4.0, d * d], order)
        .sqrt()
        .expect("constant term 4")
}

fn check_lambda_unit(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::param("lambda", lambda, "must lie in (0, 1]"));
    }
    Ok(())
}

/// `M_∞(z) = ((1−λ)(z−2) + √(4−4z+(1−λ)²z²)) / (2λ(1−z))` at `θ = 1/2`.
pub fn stationary_mgf(lambda: f64, order: usize) -> Result<TruncatedSeries> {
    check_lambda_unit(lambda)?;
    let d = 1.0 - lambda;
    let num = radical_series(lambda, order).add(&TruncatedSeries::polynomial(&[-2.0 * d, d], order));
    Ok(num
        .mul(&one_minus_z(order).reciprocal()?)
        .scale(1.0 / (2.0 * lambda)))
}

/// `(λ−1)/(2λ) + (1/(2λ)) Σ_{k=0}^n γ_k`, the coefficient form of [`stationary_mgf`] for `n ≥ 1`.
pub fn stationary_moments_from_gamma(lambda: f64, gamma: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(gamma.len());
    let mut partial = 0.0;
    for (n, g) in gamma.iter().enumerate() {
        partial += g;
        out.push(if n == 0 {
            1.0
        } else {
            (lambda - 1.0) / (2.0 * lambda) + partial / (2.0 * lambda)
        });
    }
    out
}

/// Stationary Cauchy transform for general `(λ, θ)`.
pub fn cauchy_stationary_eval(lambda: f64, theta: f64, z: Complex64) -> Result<Complex64> {
    StationaryLaw::new(lambda, theta)?.cauchy(z)
}

/// `γ_n = 2 Σ_k β_k β_{n−k} z₁^{−k} z₂^{−(n−k)}` from the factorization
/// `4 − 4z + (1−λ)²z² = 4(1 − z/z₁)(1 − z/z₂)`, with
/// `1/z₁,₂ = (1 ∓ √(λ(2−λ)))/2`. At `λ = 1` this is `2β_n`.
pub fn gamma_from_roots(lambda: f64, order: usize) -> Vec<f64> {
    let s = (lambda * (2.0 - lambda)).sqrt();
    let (u1, u2) = ((1.0 - s) / 2.0, (1.0 + s) / 2.0);
    let betas: Vec<f64> = (0..=order).map(beta).collect();
    (0..=order)
        .map(|n| {
            2.0 * (0..=n)
                .map(|k| betas[k] * betas[n - k] * u1.powi(k as i32) * u2.powi((n - k) as i32))
                .sum::<f64>()
        })
        .collect()
}

/// Time `τ = 2λt/(2−λ)` and argument scale `(2−λ)e^{−t}` of the
/// free-unitary part.
fn psi_time(lambda: f64, t: f64) -> (f64, f64) {
    (2.0 * lambda * t / (2.0 - lambda), (2.0 - lambda) * (-t).exp())
}

/// `v_t(z) = (2/(2−λ)) ρ_τ((2−λ) e^{−t} α(z))`.
pub fn v_series(lambda: f64, t: f64, order: usize) -> TruncatedSeries {
    let (tau, scale) = psi_time(lambda, t);
    let w = alpha_series(order).scale(scale);
    rho_series(tau, order)
        .compose(&w)
        .expect("α has no constant term")
        .scale(2.0 / (2.0 - lambda))
}

/// `Σ ψ_n z^n = v_t(z) / √(1−z)`.
pub fn psi_series(lambda: f64, t: f64, order: usize) -> TruncatedSeries {
    inv_sqrt_one_minus_z(order).mul(&v_series(lambda, t, order))
}

/// `ψ_n = 2^{1−2n} Σ_k C(2n,n−k) (2−λ)^{k−1} L_{k−1}^1(2λkt/(2−λ)) e^{−kt} / k`.
pub fn psi_closed(lambda: f64, t: f64, order: usize) -> Vec<f64> {
    let (tau, _) = psi_time(lambda, t);
    let mut out = vec![0.0];
    for n in 1..=order {
        let w = central_weights(n);
        let mut acc = 0.0;
        for k in 1..=n {
            let kf = k as f64;
            acc += 2.0
                * w[k]
                * (2.0 - lambda).powi(k as i32 - 1)
                * laguerre1(k - 1, kf * tau)
                * (-kf * t).exp()
                / kf;
        }
        out.push(acc);
    }
    out
}

/// `γ` and `ψ` vectors; `γ` via series square root, `ψ` by extraction.
pub fn gamma_psi_series(lambda: f64, t: f64, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_lambda_unit(lambda)?;
    Ok((
        radical_series(lambda, order).into_coeffs(),
        psi_series(lambda, t, order).into_coeffs(),
    ))
}

/// `r(z) = √(4 + (1−λ)² z²/(1−z))`.
fn r_series(lambda: f64, order: usize) -> TruncatedSeries {
    let d = 1.0 - lambda;
    let z2 = TruncatedSeries::monomial(d * d, 2, order);
    let q = z2
        .mul(&one_minus_z(order).reciprocal().expect("unit constant term"))
        .add(&TruncatedSeries::constant(4.0, order));
    q.sqrt().expect("constant term 4")
}

/// Sign of the `r − 2` factor in the second forcing term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ForcingSign {
    /// `(2 − r)`: the sign that matches the hierarchy.
    Consistent,
    /// `(r − 2)`, as the forcing is usually displayed.
    AsDisplayed,
}

/// `Z_t = ((1−λ)²/(4r)) z²(z−2)/(1−z)² v_t + z e^{−t} (±)(r−2) α'(z) ρ'_τ(w)`
/// with `w = (2−λ)e^{−t}α(z)`.
fn forcing_series(lambda: f64, t: f64, order: usize, sign: ForcingSign) -> TruncatedSeries {
    let d = 1.0 - lambda;
    let (tau, scale) = psi_time(lambda, t);
    let r = r_series(lambda, order);
    let omz = one_minus_z(order);
    let v = v_series(lambda, t, order);
    let first = TruncatedSeries::polynomial(&[0.0, 0.0, -2.0, 1.0], order)
        .mul(&omz.mul(&omz).reciprocal().expect("unit constant term"))
        .mul(&r.reciprocal().expect("constant term 2"))
        .mul(&v)
        .scale(d * d / 4.0);
    let w = alpha_series(order).scale(scale);
    // ρ' needs one extra coefficient to be exact at order N.
    let rho_prime = rho_series(tau, order + 1).derivative();
    let mut two_minus_r = r.scale(-1.0).into_coeffs();
    two_minus_r[0] += 2.0;
    let factor = TruncatedSeries::new(two_minus_r).scale(match sign {
        ForcingSign::Consistent => 1.0,
        ForcingSign::AsDisplayed => -1.0,
    });
    let second = factor
        .mul(&alpha_series(order).euler())
        .mul(&rho_prime.compose(&w).expect("α has no constant term"))
        .scale((-t).exp());
    first.add(&second)
}

/// Forcing obtained by substituting `S = ψ + u` into the `S`-equation:
/// `F = −(z/2)∂_z{λ(1−z)V² + R V} − ∂_t V`, with `V = Σ ψ_n z^n` and
/// `∂_t V` by a five-point stencil of width `delta`.
pub fn direct_forcing(lambda: f64, t: f64, order: usize, delta: f64) -> Result<TruncatedSeries> {
    if t < 2.0 * delta {
        return Err(Error::InsufficientSamples {
            t,
            purpose: "time derivative of the psi series",
        });
    }
    let samples: Vec<TruncatedSeries> = stencil_times(t, delta)
        .into_iter()
        .map(|s| psi_series(lambda, s, order))
        .collect();
    let dv = TruncatedSeries::from_fn(order, |n| {
        five_point_derivative(std::array::from_fn(|j| samples[j].coeff(n)), delta)
    });
    let v = &samples[2];
    let flux = v
        .mul(v)
        .mul(&one_minus_z(order))
        .scale(lambda)
        .add(&radical_series(lambda, order).mul(v));
    Ok(flux.euler().scale(-0.5).sub(&dv))
}

/// `k_n = c_n(0) − c_{n−1}(0)` for `n = 1..N` (index 0 holds 0), where
/// `c_n(0) = 1 − m_n(∞) − ψ_n(0)`. For `n ≥ 2` this is
/// `ψ_{n−1}(0) − ψ_n(0) − γ_n/(2λ)`.
pub fn increment_terms(lambda: f64, order: usize) -> Result<Vec<f64>> {
    check_lambda_unit(lambda)?;
    let stationary = stationary_mgf(lambda, order)?;
    let psi0 = psi_series(lambda, 0.0, order);
    let c0: Vec<f64> = (0..=order)
        .map(|n| if n == 0 { 0.0 } else { 1.0 - stationary.coeff(n) - psi0.coeff(n) })
        .collect();
    let mut out = vec![0.0];
    out.extend((1..=order).map(|n| c0[n] - c0[n - 1]));
    Ok(out)
}

/// Coefficients of `M_t − M_∞ − ψ` and the forcing of their evolution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionResult {
    pub lambda: f64,
    pub t: f64,
    pub order: usize,
    /// `γ_0..γ_N`.
    pub gamma: Vec<f64>,
    /// `γ` recomputed from the root factorization.
    pub gamma_roots: Vec<f64>,
    /// `ψ_0..ψ_N` by extraction (`ψ_0 = 0`).
    pub psi: Vec<f64>,
    /// Closed-form `ψ` for comparison.
    pub psi_closed: Vec<f64>,
    /// `c_0..c_N`.
    pub c: Vec<f64>,
    /// `d_n = [z^n]Z_t/(1−λ)` with the `(2 − r)` factor; zero at `λ = 1`.
    pub d: Vec<f64>,
    /// `d_n` with the `(r − 2)` factor.
    pub d_as_displayed: Vec<f64>,
    /// `d_n` from [`direct_forcing`], when `t` admits the stencil.
    pub d_direct: Option<Vec<f64>>,
    pub diagnostics: DecompositionDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionDiagnostics {
    pub gamma_root_gap: f64,
    pub psi_closed_gap: f64,
    /// `max_n |d_n − d_direct_n|`.
    pub forcing_gap: Option<f64>,
    pub forcing_gap_as_displayed: Option<f64>,
}

/// Stencil half-width for time derivatives in the series checks.
pub const FD_DELTA: f64 = 1e-4;

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_source(traj: &MomentTrajectory, lambda: f64, order: usize) -> Result<()> {
    let p = &traj.params;
    if p.theta != 0.5 || p.lambda != lambda || p.init != crate::moments::InitMode::PLeQ {
        return Err(Error::ParameterMismatch(format!(
            "decomposition needs a (lambda = {lambda}, theta = 1/2, p-le-q) trajectory, got ({}, {}, {})",
            p.lambda, p.theta, p.init
        )));
    }
    if traj.order < order {
        return Err(Error::ParameterMismatch(format!(
            "trajectory order {} is below the requested {order}",
            traj.order
        )));
    }
    Ok(())
}

/// `c_n(t) = m_n(t) − m_n(∞) − ψ_n(t)` from the sample of `trajectory` at `t`.
pub fn c_coefficients(lambda: f64, t: f64, order: usize, trajectory: &MomentTrajectory) -> Result<Vec<f64>> {
    check_source(trajectory, lambda, order)?;
    let m = trajectory.require(t, "decomposition coefficients")?;
    let stationary = stationary_mgf(lambda, order)?;
    let psi = psi_series(lambda, t, order);
    Ok((0..=order)
        .map(|n| m[n] - stationary.coeff(n) - psi.coeff(n))
        .collect())
}

pub fn decomposition_u(
    lambda: f64,
    t: f64,
    order: usize,
    trajectory: &MomentTrajectory,
) -> Result<DecompositionResult> {
    check_lambda_unit(lambda)?;
    let c = c_coefficients(lambda, t, order, trajectory)?;
    let gamma = radical_series(lambda, order).into_coeffs();
    let gamma_roots = gamma_from_roots(lambda, order);
    let psi = psi_series(lambda, t, order).into_coeffs();
    let psi_cf = psi_closed(lambda, t, order);
    let (d, d_as_displayed, d_direct) = if lambda == 1.0 {
        (vec![0.0; order + 1], vec![0.0; order + 1], None)
    } else {
        let k = 1.0 / (1.0 - lambda);
        let d = forcing_series(lambda, t, order, ForcingSign::Consistent).scale(k);
        let d_lit = forcing_series(lambda, t, order, ForcingSign::AsDisplayed).scale(k);
        let direct = if t >= 2.0 * FD_DELTA {
            Some(direct_forcing(lambda, t, order, FD_DELTA)?.scale(k).into_coeffs())
        } else {
            None
        };
        (d.into_coeffs(), d_lit.into_coeffs(), direct)
    };
    let diagnostics = DecompositionDiagnostics {
        gamma_root_gap: max_gap(&gamma, &gamma_roots),
        psi_closed_gap: max_gap(&psi, &psi_cf),
        forcing_gap: d_direct.as_ref().map(|dd| max_gap(&d, dd)),
        forcing_gap_as_displayed: d_direct.as_ref().map(|dd| max_gap(&d_as_displayed, dd)),
    };
    Ok(DecompositionResult {
        lambda,
        t,
        order,
        gamma,
        gamma_roots,
        psi,
        psi_closed: psi_cf,
        c,
        d,
        d_as_displayed,
        d_direct,
        diagnostics,
    })
}

/// Residuals of the evolution of `c_n` for `4 ≤ n ≤ N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvolutionCheck {
    pub lambda: f64,
    pub t: f64,
    /// `(n, ∂_t c_n − rhs_n)` with `λ` on the `ψ` terms and the `(2 − r)` forcing.
    pub residuals: Vec<(usize, f64)>,
    /// Same, without `λ` on the `ψ` terms and with the `(r − 2)` forcing.
    pub residuals_as_displayed: Vec<(usize, f64)>,
}

impl EvolutionCheck {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1.abs()).fold(0.0, f64::max)
    }

    pub fn max_residual_as_displayed(&self) -> f64 {
        self.residuals_as_displayed
            .iter()
            .map(|r| r.1.abs())
            .fold(0.0, f64::max)
    }
}

/// Right side of the `c_n` evolution for `n ≥ 4`:
/// `−(n/2)(Σ_{k=3}^n c_k γ_{n−k} + 2λψ_1 c_{n−1}
///   + Σ_{k=3}^{n−2} [λ(c_{n−k} − c_{n−1−k}) + 2λ(ψ_{n−k} − ψ_{n−1−k})] c_k) + (1−λ)d_n`.
/// `psi_weight` multiplies the `ψ` terms in place of `λ`.
fn evolution_rhs(n: usize, lambda: f64, psi_weight: f64, c: &[f64], gamma: &[f64], psi: &[f64], d: &[f64]) -> f64 {
    let mut s: f64 = (3..=n).map(|k| c[k] * gamma[n - k]).sum();
    s += 2.0 * psi_weight * psi[1] * c[n - 1];
    for k in 3..=n.saturating_sub(2) {
        s += (lambda * (c[n - k] - c[n - 1 - k]) + 2.0 * psi_weight * (psi[n - k] - psi[n - 1 - k])) * c[k];
    }
    -(n as f64) / 2.0 * s + (1.0 - lambda) * d[n]
}

/// Compares a five-point time derivative of `c_n` with the evolution right
/// side. `trajectory` must hold the stencil samples `t + jδ`, `j = −2..=2`,
/// with `δ = FD_DELTA`.
pub fn general_equation_check(
    lambda: f64,
    t: f64,
    order: usize,
    trajectory: &MomentTrajectory,
) -> Result<EvolutionCheck> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::param("lambda", lambda, "must lie in (0, 1)"));
    }
    let times = stencil_times(t, FD_DELTA);
    let cs = times
        .iter()
        .map(|&s| c_coefficients(lambda, s, order, trajectory))
        .collect::<Result<Vec<_>>>()?;
    let dc: Vec<f64> = (0..=order)
        .map(|n| five_point_derivative(std::array::from_fn(|j| cs[j][n]), FD_DELTA))
        .collect();
    let dec = decomposition_u(lambda, t, order, trajectory)?;
    let mut residuals = Vec::new();
    let mut residuals_lit = Vec::new();
    for n in 4..=order {
        let rhs = evolution_rhs(n, lambda, lambda, &dec.c, &dec.gamma, &dec.psi, &dec.d);
        let rhs_lit = evolution_rhs(n, lambda, 1.0, &dec.c, &dec.gamma, &dec.psi, &dec.d_as_displayed);
        residuals.push((n, dc[n] - rhs));
        residuals_lit.push((n, dc[n] - rhs_lit));
    }
    Ok(EvolutionCheck {
        lambda,
        t,
        residuals,
        residuals_as_displayed: residuals_lit,
    })
}

fn stencil_series(t: f64, delta: f64, f: impl Fn(f64) -> TruncatedSeries) -> Result<(TruncatedSeries, TruncatedSeries)> {
    if t < 2.0 * delta {
        return Err(Error::InsufficientSamples {
            t,
            purpose: "five-point time derivative",
        });
    }
    let s: Vec<TruncatedSeries> = stencil_times(t, delta).into_iter().map(f).collect();
    let order = s[2].order();
    let dt = TruncatedSeries::from_fn(order, |n| {
        five_point_derivative(std::array::from_fn(|j| s[j].coeff(n)), delta)
    });
    Ok((s[2].clone(), dt))
}

fn max_abs(s: &TruncatedSeries) -> f64 {
    s.coeffs().iter().map(|c| c.abs()).fold(0.0, f64::max)
}

/// `max_n |[z^n](∂_t ρ_t + (z/2)∂_z ρ_t²)|`.
pub fn pde_residual_rho(t: f64, order: usize, delta: f64) -> Result<f64> {
    let (rho, dt) = stencil_series(t, delta, |s| rho_series(s, order))?;
    Ok(max_abs(&dt.add(&rho.mul(&rho).euler().scale(0.5))))
}

/// `max_n |[z^n](∂_t M_t + (z/2)∂_z{(1−z)M_t²})|` for the closed-form `M_t`.
pub fn pde_residual_mgf(t: f64, order: usize, delta: f64) -> Result<f64> {
    let (m, dt) = stencil_series(t, delta, |s| mgf_closed_lambda1(s, order))?;
    Ok(max_abs(&dt.add(&m.mul(&m).mul(&one_minus_z(order)).euler().scale(0.5))))
}

/// Coefficientwise residual of
/// `∂_t S = −(z/2)∂_z{λ(1−z)S² + √(4−4z+(1−λ)²z²) S}` for `S = M_t − M_∞`
/// built from the stencil samples of `trajectory` around `t`.
pub fn pde_residual_s(lambda: f64, t: f64, order: usize, trajectory: &MomentTrajectory, delta: f64) -> Result<f64> {
    check_lambda_unit(lambda)?;
    if trajectory.params.theta != 0.5 || trajectory.params.lambda != lambda {
        return Err(Error::ParameterMismatch(format!(
            "S-equation check for lambda = {lambda} got a ({}, {}) trajectory",
            trajectory.params.lambda, trajectory.params.theta
        )));
    }
    if trajectory.order < order {
        return Err(Error::ParameterMismatch(format!(
            "trajectory order {} is below the requested {order}",
            trajectory.order
        )));
    }
    let stationary = stationary_mgf(lambda, order)?;
    let s_at = |time: f64| -> Result<TruncatedSeries> {
        let m = trajectory.require(time, "S-equation stencil")?;
        Ok(TruncatedSeries::polynomial(&m[..=order], order).sub(&stationary))
    };
    let samples = stencil_times(t, delta)
        .into_iter()
        .map(s_at)
        .collect::<Result<Vec<_>>>()?;
    let dt = TruncatedSeries::from_fn(order, |n| {
        five_point_derivative(std::array::from_fn(|j| samples[j].coeff(n)), delta)
    });
    let s = &samples[2];
    let flux = s
        .mul(s)
        .mul(&one_minus_z(order))
        .scale(lambda)
        .add(&radical_series(lambda, order).mul(s));
    Ok(max_abs(&dt.add(&flux.euler().scale(0.5))))
}

/// CSV row `n,value,series_name,lambda,t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub n: usize,
    pub value: f64,
    pub series_name: String,
    pub lambda: f64,
    pub t: Option<f64>,
}

pub fn series_rows(name: &str, values: &[f64], lambda: f64, t: Option<f64>) -> Vec<SeriesRow> {
    values
        .iter()
        .enumerate()
        .map(|(n, v)| SeriesRow {
            n,
            value: *v,
            series_name: name.to_string(),
            lambda,
            t,
        })
        .collect()
}

/// `max_n |binomial form − extraction|` for the coefficients of `1/√(1−z)`.
pub fn central_series_gap(order: usize) -> f64 {
    (0..=order)
        .map(|n| {
            let exact = binomial_f64(2 * n as u64, n as i64) / 4f64.powi(n as i32);
            (exact - central_weights(n)[0]).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{arcsine_moments, closed_form_lambda1, integrate_moments_at, InitMode, ProcessParams};
    use approx::assert_abs_diff_eq;

    #[test]
    fn alpha_leading_coefficients() {
        let a = alpha_series(6);
        assert_eq!(a.coeff(0), 0.0);
        assert_abs_diff_eq!(a.coeff(1), 0.25, epsilon = 1e-16);
        assert_abs_diff_eq!(a.coeff(2), 0.125, epsilon = 1e-16);
    }

    #[test]
    fn alpha_inverse_pair() {
        let n = 32;
        let id = alpha_inv_series(n).compose(&alpha_series(n)).unwrap();
        assert!(id.max_abs_diff(&TruncatedSeries::identity(n)) < 1e-13);
        let exact = alpha_roundtrip_exact(n);
        assert!(exact.is_identity);
        assert!(exact.float_gap < 1e-15);
    }

    #[test]
    fn alpha_derivative_identity() {
        let n = 32;
        let a = alpha_series(n);
        let lhs = one_minus_z(n).sqrt().unwrap().mul(&a.euler());
        assert!(lhs.max_abs_diff(&a) < 1e-13);
    }

    #[test]
    fn rho_examples() {
        let r0 = rho_series(0.0, 10);
        assert!(r0.coeffs()[1..].iter().all(|&c| (c - 1.0).abs() < 1e-14));
        let t = 0.8;
        assert_abs_diff_eq!(rho_series(t, 3).coeff(2), 1.0 - t, epsilon = 1e-15);
    }

    #[test]
    fn mgf_examples() {
        let m0 = mgf_closed_lambda1(0.0, 12);
        for c in m0.coeffs() {
            assert_abs_diff_eq!(*c, 1.0, epsilon = 1e-12);
        }
        let t = 0.9;
        assert_abs_diff_eq!(mgf_closed_lambda1(t, 4).coeff(1), (1.0 + (-t).exp()) / 2.0, epsilon = 1e-15);
        let late = mgf_closed_lambda1(30.0, 12);
        let arcsine = arcsine_moments(12);
        for n in 0..=12 {
            assert_abs_diff_eq!(late.coeff(n), arcsine[n], epsilon = 1e-12);
        }
    }

    #[test]
    fn mgf_matches_laguerre_closed_form() {
        for &t in &[0.25, 1.0, 3.0] {
            let s = mgf_closed_lambda1(t, 16);
            let m = closed_form_lambda1(t, 16).unwrap();
            for n in 0..=16 {
                assert_abs_diff_eq!(s.coeff(n), m[n], epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn stationary_mgf_examples() {
        let arcsine = arcsine_moments(10);
        let s = stationary_mgf(1.0, 10).unwrap();
        for n in 0..=10 {
            assert_abs_diff_eq!(s.coeff(n), arcsine[n], epsilon = 1e-14);
        }
        for &lambda in &[0.2, 0.5, 0.9] {
            let s = stationary_mgf(lambda, 8).unwrap();
            assert_abs_diff_eq!(s.coeff(0), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(s.coeff(1), 0.5, epsilon = 1e-14);
            let g = radical_series(lambda, 8).into_coeffs();
            let via_gamma = stationary_moments_from_gamma(lambda, &g);
            for n in 0..=8 {
                assert_abs_diff_eq!(s.coeff(n), via_gamma[n], epsilon = 1e-14);
            }
        }
        assert!(stationary_mgf(1.2, 4).is_err());
    }

    #[test]
    fn gamma_examples() {
        for &lambda in &[0.3, 0.7, 1.0] {
            let g = radical_series(lambda, 10);
            assert_abs_diff_eq!(g.coeff(0), 2.0, epsilon = 1e-15);
            assert_abs_diff_eq!(g.coeff(1), -1.0, epsilon = 1e-15);
            let roots = gamma_from_roots(lambda, 10);
            for n in 0..=10 {
                assert_abs_diff_eq!(g.coeff(n), roots[n], epsilon = 1e-14);
            }
        }
        let at_one = gamma_from_roots(1.0, 6);
        for n in 0..=6 {
            assert_abs_diff_eq!(at_one[n], 2.0 * beta(n), epsilon = 1e-15);
        }
    }

    #[test]
    fn psi_examples() {
        for &lambda in &[0.2, 0.6, 1.0] {
            for &t in &[0.0, 0.5, 2.0] {
                let p = psi_series(lambda, t, 12);
                assert_abs_diff_eq!(p.coeff(1), (-t).exp() / 2.0, epsilon = 1e-15);
                let closed = psi_closed(lambda, t, 12);
                for n in 0..=12 {
                    assert_abs_diff_eq!(p.coeff(n), closed[n], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn decomposition_vanishes_at_lambda_one() {
        let times = [1.0];
        let traj = integrate_moments_at(&ProcessParams::standard(), &times, 12, 1e-3).unwrap();
        let dec = decomposition_u(1.0, 1.0, 12, &traj).unwrap();
        for c in &dec.c {
            assert!(c.abs() < 1e-10, "{c}");
        }
        assert!(dec.d.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn decomposition_low_coefficients_vanish() {
        let lambda = 0.6;
        let p = ProcessParams::new(lambda, 0.5, InitMode::PLeQ).unwrap();
        let traj = integrate_moments_at(&p, &[0.5], 8, 1e-3).unwrap();
        let dec = decomposition_u(lambda, 0.5, 8, &traj).unwrap();
        assert!(dec.c[1].abs() < 1e-7 && dec.c[2].abs() < 1e-7);
        let forcing = dec.diagnostics.forcing_gap.unwrap();
        assert!(forcing < 1e-6, "{forcing}");
        assert!(dec.diagnostics.forcing_gap_as_displayed.unwrap() > 1e-3);
    }

    #[test]
    fn decomposition_rejects_wrong_source() {
        let traj = integrate_moments_at(&ProcessParams::standard(), &[0.5], 8, 1e-3).unwrap();
        assert!(matches!(
            decomposition_u(0.6, 0.5, 8, &traj),
            Err(Error::ParameterMismatch(_))
        ));
        let p = ProcessParams::new(0.6, 0.5, InitMode::PLeQ).unwrap();
        let traj = integrate_moments_at(&p, &[0.5], 8, 1e-3).unwrap();
        assert!(matches!(
            decomposition_u(0.6, 0.7, 8, &traj),
            Err(Error::InsufficientSamples { .. })
        ));
        assert!(matches!(
            decomposition_u(0.6, 0.5, 10, &traj),
            Err(Error::ParameterMismatch(_))
        ));
    }

    #[test]
    fn stationary_series_has_zero_s_residual() {
        // S ≡ 0: a trajectory frozen at the stationary moments.
        let lambda = 0.5;
        let order = 8;
        let m = stationary_mgf(lambda, order).unwrap().into_coeffs();
        let times = stencil_times(1.0, FD_DELTA);
        let traj = MomentTrajectory {
            params: ProcessParams::new(lambda, 0.5, InitMode::Custom(m.clone())).unwrap(),
            order,
            step: None,
            method: crate::moments::MomentMethod::Recurrence,
            times: times.clone(),
            values: vec![m; times.len()],
        };
        assert_eq!(pde_residual_s(lambda, 1.0, order, &traj, FD_DELTA).unwrap(), 0.0);
    }

    #[test]
    fn increment_terms_first_is_zero() {
        let lambda = 0.9;
        let k = increment_terms(lambda, 6).unwrap();
        assert_abs_diff_eq!(k[1], 0.0, epsilon = 1e-15);
        let gamma = radical_series(lambda, 6);
        let psi0 = psi_series(lambda, 0.0, 6);
        for n in 2..=6 {
            let alt = psi0.coeff(n - 1) - psi0.coeff(n) - gamma.coeff(n) / (2.0 * lambda);
            assert_abs_diff_eq!(k[n], alt, epsilon = 1e-14);
        }
    }

    #[test]
    fn cauchy_eval_matches_arcsine() {
        let z = Complex64::new(-0.5, 0.2);
        let g = cauchy_stationary_eval(1.0, 0.5, z).unwrap();
        let expected = 1.0 / (z.sqrt() * (z - 1.0).sqrt());
        assert_abs_diff_eq!((g - expected).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn central_series_is_exact_in_range() {
        assert!(central_series_gap(20) < 1e-15);
    }
}
