//! Densities of the moment measures: the `λ = 1`, `θ = 1/2` law at time `t`
//! by Fourier summation of unitary Brownian moments, and the stationary law
//! by Stieltjes inversion.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::UbmMomentVector;
use crate::stationary::{Atom, StationaryLaw};

/// Damping applied to the `k`-th Fourier term out of `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    None,
    /// Cesàro weights `1 − k/(K+1)`; nonnegative kernel, `O(1/K)` leakage.
    Fejer,
    /// `exp(−36 (k/K)^8)`; no pointwise positivity guarantee but leakage
    /// below `1e−8` away from the support edges.
    Exponential,
}

impl Smoothing {
    pub fn weight(self, k: usize, terms: usize) -> f64 {
        let x = k as f64 / terms.max(1) as f64;
        match self {
            Smoothing::None => 1.0,
            Smoothing::Fejer => 1.0 - k as f64 / (terms as f64 + 1.0),
            Smoothing::Exponential => (-36.0 * x.powi(8)).exp(),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Smoothing::None => "none",
            Smoothing::Fejer => "fejer",
            Smoothing::Exponential => "exponential",
        }
    }
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Smoothing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Smoothing::None),
            "fejer" => Ok(Smoothing::Fejer),
            "exponential" => Ok(Smoothing::Exponential),
            other => Err(format!(
                "unknown filter `{other}` (expected none, fejer or exponential)"
            )),
        }
    }
}

/// `auto` applies Fejér weights below `t = 0.5`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FejerMode {
    Auto,
    On,
    Off,
}

pub const FEJER_AUTO_BELOW: f64 = 0.5;

impl FejerMode {
    pub fn resolve(self, t: f64) -> Smoothing {
        match self {
            FejerMode::On => Smoothing::Fejer,
            FejerMode::Off => Smoothing::None,
            FejerMode::Auto if t < FEJER_AUTO_BELOW => Smoothing::Fejer,
            FejerMode::Auto => Smoothing::None,
        }
    }
}

impl FromStr for FejerMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(FejerMode::Auto),
            "on" => Ok(FejerMode::On),
            "off" => Ok(FejerMode::Off),
            other => Err(format!("unknown fejer mode `{other}` (expected auto, on or off)")),
        }
    }
}

/// How the integration weights of a grid were formed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum QuadratureRule {
    /// `x = c − h cos ψ` over `[lo, hi]`, midpoints in `ψ`; removes the
    /// inverse square-root edge behaviour exactly.
    Chebyshev { lo: f64, hi: f64 },
    /// Trapezoid rule on the given points; exact coverage not guaranteed.
    Trapezoid,
}

/// Where to evaluate a density.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GridSpec {
    /// `j/(n+1)` for `j = 1..n`.
    Uniform { points: usize },
    /// `n` Chebyshev midpoint nodes on the support.
    Chebyshev { nodes: usize },
    Custom { xs: Vec<f64> },
}

impl GridSpec {
    fn build(&self, lo: f64, hi: f64) -> Result<(Vec<f64>, Vec<f64>, QuadratureRule)> {
        match self {
            GridSpec::Uniform { points } => {
                if *points == 0 {
                    return Err(Error::param("grid-points", 0.0, "must be positive"));
                }
                let xs: Vec<f64> = (1..=*points).map(|j| j as f64 / (*points + 1) as f64).collect();
                let w = trapezoid_weights(&xs);
                Ok((xs, w, QuadratureRule::Trapezoid))
            }
            GridSpec::Chebyshev { nodes } => {
                if *nodes == 0 {
                    return Err(Error::param("nodes", 0.0, "must be positive"));
                }
                let (c, h) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
                let m = *nodes as f64;
                let mut xs = Vec::with_capacity(*nodes);
                let mut w = Vec::with_capacity(*nodes);
                for j in 0..*nodes {
                    let psi = (j as f64 + 0.5) * PI / m;
                    xs.push(c - h * psi.cos());
                    w.push(PI / m * h * psi.sin());
                }
                Ok((xs, w, QuadratureRule::Chebyshev { lo, hi }))
            }
            GridSpec::Custom { xs } => {
                if xs.is_empty() || xs.windows(2).any(|p| !(p[1] > p[0])) {
                    return Err(Error::param("grid", f64::NAN, "points must be strictly increasing"));
                }
                if xs[0] <= 0.0 || xs[xs.len() - 1] >= 1.0 {
                    return Err(Error::param("grid", xs[0], "points must lie strictly inside (0, 1)"));
                }
                Ok((xs.clone(), trapezoid_weights(xs), QuadratureRule::Trapezoid))
            }
        }
    }
}

fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let half = (xs[i + 1] - xs[i]) / 2.0;
        w[i] += half;
        w[i + 1] += half;
    }
    w
}

/// Sampled density with quadrature weights and atoms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityGrid {
    pub lambda: f64,
    pub theta: f64,
    /// `None` for the stationary law.
    pub t: Option<f64>,
    pub xs: Vec<f64>,
    /// Values after clipping negatives to 0.
    pub values: Vec<f64>,
    /// Values before clipping; quadrature integrates these, so truncated
    /// Fourier sums keep their exact low-order moments.
    pub raw_values: Vec<f64>,
    pub clipped: Vec<bool>,
    /// `max(0, −min raw value)`.
    pub max_negativity: f64,
    pub weights: Vec<f64>,
    pub rule: QuadratureRule,
    /// Support of the absolutely continuous part, when known.
    pub support: (f64, f64),
    pub atoms: Vec<Atom>,
    pub terms: Option<usize>,
    pub smoothing: Option<Smoothing>,
}

impl DensityGrid {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        (lambda, theta, t): (f64, f64, Option<f64>),
        xs: Vec<f64>,
        raw: Vec<f64>,
        weights: Vec<f64>,
        rule: QuadratureRule,
        support: (f64, f64),
        atoms: Vec<Atom>,
        fourier: Option<(usize, Smoothing)>,
    ) -> Self {
        let max_negativity = raw.iter().fold(0.0f64, |m, &v| m.max(-v));
        let clipped: Vec<bool> = raw.iter().map(|&v| v < 0.0).collect();
        let values = raw.iter().map(|v| v.max(0.0)).collect();
        Self {
            lambda,
            theta,
            t,
            xs,
            values,
            raw_values: raw,
            clipped,
            max_negativity,
            weights,
            rule,
            support,
            atoms,
            terms: fourier.map(|f| f.0),
            smoothing: fourier.map(|f| f.1),
        }
    }

    pub fn continuous_mass(&self) -> f64 {
        self.weights.iter().zip(&self.raw_values).map(|(w, f)| w * f).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.continuous_mass() + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    /// CSV rows `x,f,t,lambda,theta,clipped_flag`.
    pub fn rows(&self) -> Vec<DensityRow> {
        self.xs
            .iter()
            .zip(&self.values)
            .zip(&self.clipped)
            .map(|((x, f), c)| DensityRow {
                x: *x,
                f: *f,
                t: self.t,
                lambda: self.lambda,
                theta: self.theta,
                clipped_flag: *c,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityRow {
    pub x: f64,
    pub f: f64,
    pub t: Option<f64>,
    pub lambda: f64,
    pub theta: f64,
    pub clipped_flag: bool,
}

/// Default number of Fourier terms.
pub const DEFAULT_TERMS: usize = 256;

/// `f_t(x) = [1 + 2 Σ_{k=1}^K σ_k h_k(2t) cos(2k arccos √x)] / (π √(x(1−x)))`.
pub fn density_lambda1(t: f64, grid: &GridSpec, terms: usize, smoothing: Smoothing) -> Result<DensityGrid> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::param("t", t, "must be positive: the law at t = 0 is an atom at 1"));
    }
    let (xs, weights, rule) = grid.build(0.0, 1.0)?;
    let h = UbmMomentVector::new(2.0 * t, terms);
    let coeffs: Vec<f64> = (1..=terms)
        .map(|k| 2.0 * smoothing.weight(k, terms) * h.h[k - 1])
        .collect();
    let raw = xs
        .iter()
        .map(|&x| {
            // cos(kψ) with ψ = 2 arccos √x, cos ψ = 2x − 1, by the Chebyshev recurrence.
            let c1 = 2.0 * x - 1.0;
            let (mut prev, mut cur) = (1.0, c1);
            let mut sum = 1.0;
            for a in &coeffs {
                sum += a * cur;
                let next = 2.0 * c1 * cur - prev;
                prev = cur;
                cur = next;
            }
            sum / (PI * (x * (1.0 - x)).sqrt())
        })
        .collect();
    Ok(DensityGrid::assemble(
        (1.0, 0.5, Some(t)),
        xs,
        raw,
        weights,
        rule,
        (0.0, 1.0),
        Vec::new(),
        Some((terms, smoothing)),
    ))
}

/// Stationary density on `grid` with the atoms at 0 and 1.
pub fn stationary_density(lambda: f64, theta: f64, grid: &GridSpec) -> Result<DensityGrid> {
    let law = StationaryLaw::new(lambda, theta)?;
    let (xs, weights, rule) = grid.build(law.lo, law.hi)?;
    let raw = xs.iter().map(|&x| law.density(x)).collect();
    Ok(DensityGrid::assemble(
        (lambda, theta, None),
        xs,
        raw,
        weights,
        rule,
        law.support(),
        law.atoms().to_vec(),
        None,
    ))
}

/// Support endpoints of the stationary absolutely continuous part.
pub fn stationary_support(lambda: f64, theta: f64) -> Result<(f64, f64)> {
    Ok(StationaryLaw::new(lambda, theta)?.support())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureMoments {
    /// `∫ x^n dμ` for `n = 0..=n_max`.
    pub moments: Vec<f64>,
    pub warning: Option<String>,
}

/// Slack before a trapezoid grid is reported as not covering the support.
const COVERAGE_SLACK: f64 = 1e-3;

/// `∫ x^n f(x) dx + Σ mass · location^n`, over the unclipped values.
pub fn quadrature_moments(grid: &DensityGrid, n_max: usize) -> QuadratureMoments {
    let mut moments = vec![0.0; n_max + 1];
    for ((x, f), w) in grid.xs.iter().zip(&grid.raw_values).zip(&grid.weights) {
        let mut p = w * f;
        for m in moments.iter_mut() {
            *m += p;
            p *= x;
        }
    }
    for a in &grid.atoms {
        let mut p = a.mass;
        for m in moments.iter_mut() {
            *m += p;
            p *= a.location;
        }
    }
    let warning = match grid.rule {
        QuadratureRule::Chebyshev { .. } => None,
        QuadratureRule::Trapezoid => {
            let (lo, hi) = grid.support;
            let first = grid.xs.first().copied().unwrap_or(f64::NAN);
            let last = grid.xs.last().copied().unwrap_or(f64::NAN);
            let uncovered = first > lo + COVERAGE_SLACK || last < hi - COVERAGE_SLACK;
            Some(if uncovered {
                format!(
                    "grid [{first}, {last}] does not cover the support [{lo}, {hi}]; moments miss the edge mass"
                )
            } else {
                "trapezoid rule on a grid with inverse square-root edges; expect low-order accuracy".to_string()
            })
        }
    };
    QuadratureMoments { moments, warning }
}
