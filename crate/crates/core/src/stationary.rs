//! The stationary law of the free Jacobi process: its Cauchy transform,
//! absolutely continuous part and atoms.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Points closer than this to the support are on the branch cut.
pub const BRANCH_TOLERANCE: f64 = 1e-12;
/// Residues below this are reported as zero mass.
pub const ATOM_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// `G_∞(z) = [(2−r)z + (1/λ − 1) + r √(z−x₋) √(z−x₊)] / (2z(z−1))` with
/// `r = 1/(λθ)` and `x₌` the roots of `r²x² − Bx + C²`,
/// `B = 2(r + (r−2)/λ)`, `C = 1 − 1/λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StationaryLaw {
    pub lambda: f64,
    pub theta: f64,
    pub r: f64,
    pub b: f64,
    pub c: f64,
    /// Support `[lo, hi]` of the absolutely continuous part.
    pub lo: f64,
    pub hi: f64,
}

impl StationaryLaw {
    pub fn new(lambda: f64, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::param("theta", theta, "must lie in (0, 1)"));
        }
        if !(lambda > 0.0 && lambda * theta < 1.0) {
            return Err(Error::param("lambda", lambda, "need 0 < lambda*theta < 1"));
        }
        let r = 1.0 / (lambda * theta);
        let b = 2.0 * (r + (r - 2.0) / lambda);
        let c = 1.0 - 1.0 / lambda;
        let disc = (b * b - 4.0 * r * r * c * c).max(0.0);
        let hi = (b + disc.sqrt()) / (2.0 * r * r);
        // Product of roots is C²/r²; avoids cancellation in the smaller root.
        let lo = if hi > 0.0 { c * c / (r * r * hi) } else { 0.0 };
        Ok(Self {
            lambda,
            theta,
            r,
            b,
            c,
            lo,
            hi,
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Cauchy transform, on the branch with `G(z) ~ 1/z` at infinity.
    pub fn cauchy(&self, z: Complex64) -> Result<Complex64> {
        let dist = if z.re < self.lo {
            z - self.lo
        } else if z.re > self.hi {
            z - self.hi
        } else {
            Complex64::new(0.0, z.im)
        }
        .norm();
        if dist < BRANCH_TOLERANCE {
            return Err(Error::BranchAmbiguity {
                re: z.re,
                im: z.im,
                lo: self.lo,
                hi: self.hi,
                tolerance: BRANCH_TOLERANCE,
            });
        }
        Ok(self.cauchy_unchecked(z))
    }

    fn numerator(&self, z: Complex64) -> Complex64 {
        (2.0 - self.r) * z
            + (1.0 / self.lambda - 1.0)
            + self.r * (z - self.lo).sqrt() * (z - self.hi).sqrt()
    }

    fn cauchy_unchecked(&self, z: Complex64) -> Complex64 {
        self.numerator(z) / (2.0 * z * (z - 1.0))
    }

    /// `r √((x−x₋)(x₊−x)) / (2π x(1−x))` on the support, 0 elsewhere.
    pub fn density(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi || x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        self.r * ((x - self.lo) * (self.hi - x)).sqrt() / (2.0 * std::f64::consts::PI * x * (1.0 - x))
    }

    /// `√(x−x₋)√(x−x₊)` on the real axis off the support, on the branch
    /// used by [`Self::cauchy`]: negative left of the support, positive right.
    fn real_radical(&self, x: f64) -> f64 {
        let prod = ((x - self.lo) * (x - self.hi)).max(0.0).sqrt();
        if x <= self.lo {
            -prod
        } else {
            prod
        }
    }

    /// Masses at 0 and 1: the residues of `G` there. `zG(z)` and `(z−1)G(z)`
    /// extend continuously to the poles, which never lie inside the support,
    /// so the limits are evaluated directly. Masses below [`ATOM_THRESHOLD`]
    /// are reported as zero.
    pub fn atoms(&self) -> [Atom; 2] {
        let num = |x: f64| (2.0 - self.r) * x + (1.0 / self.lambda - 1.0) + self.r * self.real_radical(x);
        let snap = |m: f64| if m.abs() < ATOM_THRESHOLD { 0.0 } else { m };
        [
            Atom {
                location: 0.0,
                mass: snap(-num(0.0) / 2.0),
            },
            Atom {
                location: 1.0,
                mass: snap(num(1.0) / 2.0),
            },
        ]
    }

    /// The same residues extrapolated along real offsets `ε` outside the
    /// support with [`richardson_sqrt`]. Reliable only while the first offset
    /// `1e−4` is small against the gap between the pole and the support.
    pub fn atoms_extrapolated(&self) -> [Atom; 2] {
        let at_zero = richardson_sqrt(|eps| {
            let z = Complex64::new(-eps, 0.0);
            (self.numerator(z) / (2.0 * (z - 1.0))).re
        });
        let at_one = richardson_sqrt(|eps| {
            let z = Complex64::new(1.0 + eps, 0.0);
            (self.numerator(z) / (2.0 * z)).re
        });
        [
            Atom {
                location: 0.0,
                mass: at_zero,
            },
            Atom {
                location: 1.0,
                mass: at_one,
            },
        ]
    }
}

/// Limit of `f(ε)` as `ε → 0⁺` for `f` smooth in `√ε`: Richardson on the
/// sequence `ε_j = ε₀ 4^{−j}`, eliminating the powers `ε^{1/2}, ε, …, ε^{5/2}`.
pub fn richardson_sqrt(f: impl Fn(f64) -> f64) -> f64 {
    const BASE: f64 = 1e-4;
    const LEVELS: usize = 6;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(LEVELS);
    for j in 0..LEVELS {
        let eps = BASE / 4f64.powi(j as i32);
        let mut row = vec![f(eps)];
        for k in 1..=j {
            let factor = 2f64.powi(k as i32);
            let prev = &table[j - 1];
            row.push(row[k - 1] + (row[k - 1] - prev[k - 1]) / (factor - 1.0));
        }
        table.push(row);
    }
    table[LEVELS - 1][LEVELS - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn arcsine_case() {
        let law = StationaryLaw::new(1.0, 0.5).unwrap();
        assert_abs_diff_eq!(law.lo, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(law.hi, 1.0, epsilon = 1e-15);
        let z = Complex64::new(2.0, 0.5);
        let g = law.cauchy(z).unwrap();
        let expected = 1.0 / (z * z - z).sqrt();
        assert_abs_diff_eq!((g - expected).norm(), 0.0, epsilon = 1e-14);
        let x: f64 = 0.3;
        assert_abs_diff_eq!(
            law.density(x),
            1.0 / (std::f64::consts::PI * (x * (1.0 - x)).sqrt()),
            epsilon = 1e-14
        );
    }

    #[test]
    fn support_at_half_theta() {
        for &lambda in &[0.3, 0.6, 1.4] {
            let law = StationaryLaw::new(lambda, 0.5).unwrap();
            let s = (lambda * (2.0 - lambda)).sqrt();
            assert_abs_diff_eq!(law.lo, (1.0 - s) / 2.0, epsilon = 1e-13);
            assert_abs_diff_eq!(law.hi, (1.0 + s) / 2.0, epsilon = 1e-13);
            // Endpoints are roots of r²x² − Bx + C².
            for x in [law.lo, law.hi] {
                assert_abs_diff_eq!(law.r * law.r * x * x - law.b * x + law.c * law.c, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn decays_like_one_over_z() {
        let law = StationaryLaw::new(0.6, 0.5).unwrap();
        let z = Complex64::new(1e6, 3.0);
        assert_abs_diff_eq!((law.cauchy(z).unwrap() * z).re, 1.0, epsilon = 1e-5);
    }

    #[test]
    fn branch_cut_rejected() {
        let law = StationaryLaw::new(0.6, 0.5).unwrap();
        assert!(matches!(
            law.cauchy(Complex64::new(0.5, 0.0)),
            Err(Error::BranchAmbiguity { .. })
        ));
        assert!(law.cauchy(Complex64::new(0.5, 1e-6)).is_ok());
    }

    #[test]
    fn atoms_vanish_below_one() {
        for &lambda in &[0.4, 0.6, 1.0] {
            let law = StationaryLaw::new(lambda, 0.5).unwrap();
            for a in law.atoms() {
                assert_eq!(a.mass, 0.0, "lambda {lambda} atom at {}", a.location);
            }
        }
    }

    #[test]
    fn atoms_above_one_match_closed_form() {
        let law = StationaryLaw::new(1.5, 0.5).unwrap();
        for a in law.atoms() {
            assert_abs_diff_eq!(a.mass, 1.0 - 1.0 / 1.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn extrapolation_agrees_away_from_degeneracy() {
        for &(lambda, theta) in &[(1.5, 0.5), (1.2, 0.3), (0.5, 0.5), (1.0, 0.5)] {
            let law = StationaryLaw::new(lambda, theta).unwrap();
            for (a, b) in law.atoms().iter().zip(law.atoms_extrapolated()) {
                assert_abs_diff_eq!(a.mass, b.mass, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn atom_at_zero_near_lambda_one() {
        // Support edge within 1e−5 of the pole.
        let above = StationaryLaw::new(1.0155297775170502, 0.1).unwrap();
        assert_abs_diff_eq!(above.atoms()[0].mass, 1.0 - 1.0 / above.lambda, epsilon = 1e-13);
        let below = StationaryLaw::new(0.98, 0.1).unwrap();
        assert_eq!(below.atoms()[0].mass, 0.0);
    }

    #[test]
    fn richardson_removes_half_powers() {
        let f = |e: f64| 0.25 + 3.0 * e.sqrt() - 2.0 * e + e.powf(1.5);
        assert_abs_diff_eq!(richardson_sqrt(f), 0.25, epsilon = 1e-13);
    }
}
