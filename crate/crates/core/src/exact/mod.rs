//! Exact combinatorial kernel: binomials, Catalan numbers, the stationary
//! (arcsine) moments and the word enumeration behind the binomial expansion
//! of the moments. Nothing in here touches floating point.

mod rational;
pub mod words;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::Serialize;

pub use rational::ExactRational;
pub use words::{
    reduce_word, word_count_rows, word_counts_bruteforce, word_counts_closed, ClosedCounts, Letter,
    WordClass, WordCountRow, WordCountTable, BRUTEFORCE_CAP,
};

/// `C(n, k)`, zero outside `0 ≤ k ≤ n`.
pub fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    // acc = C(n-k+i, i) after step i, always an integer.
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

/// `C_k = C(2k, k) / (k + 1)`.
pub fn catalan(k: u64) -> BigUint {
    binomial(2 * k, k as i64) / (k + 1)
}

/// Arcsine moment `C(2n, n) / 4^n`.
pub fn stationary_moment(n: u64) -> ExactRational {
    let num = BigInt::from(binomial(2 * n, n as i64));
    let den = BigInt::one() << (2 * n);
    ExactRational::new(num, den).expect("power of two is nonzero")
}

/// Outcome of an exact identity sweep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub checked: u64,
    pub failures: Vec<String>,
}

impl IdentityCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Result of [`verify_catalan_identity`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CatalanCheck {
    pub n_max: u64,
    pub passed: u64,
    pub first_failure: Option<u64>,
}

impl CatalanCheck {
    pub fn ok(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Checks `m_n = Σ_{k<n} m_{n-k-1} (m_k − m_{k+1})` for the arcsine moments,
/// `1 ≤ n ≤ n_max`, in exact rationals.
pub fn verify_catalan_identity(n_max: u64) -> CatalanCheck {
    let m: Vec<ExactRational> = (0..=n_max + 1).map(stationary_moment).collect();
    let mut passed = 0;
    let mut first_failure = None;
    for n in 1..=n_max as usize {
        let rhs: ExactRational = (0..n)
            .map(|k| &m[n - k - 1] * &(&m[k] - &m[k + 1]))
            .sum();
        if rhs == m[n] {
            passed += 1;
        } else if first_failure.is_none() {
            first_failure = Some(n as u64);
        }
    }
    CatalanCheck {
        n_max,
        passed,
        first_failure,
    }
}

/// `m_k − m_{k+1} = C_k / 2^{2k+1}` for `0 ≤ k ≤ k_max`.
pub fn verify_catalan_differences(k_max: u64) -> IdentityCheck {
    let mut check = IdentityCheck::new("stationary differences are scaled Catalan numbers");
    for k in 0..=k_max {
        let lhs = stationary_moment(k) - stationary_moment(k + 1);
        let rhs = ExactRational::new(BigInt::from(catalan(k)), BigInt::one() << (2 * k + 1))
            .expect("nonzero");
        check.record(lhs == rhs, || format!("k={k}: {lhs} != {rhs}"));
    }
    check
}

/// `4·C(2n−2, n−1−k) − C(2n, n−k)` equals
/// `[C(2n−2, n−k−1) − C(2n−2, n−k−2)] + [C(2n−2, n−k−1) − C(2n−2, n−k)]`
/// for `2 ≤ n ≤ n_max`, `1 ≤ k ≤ n−1`.
pub fn verify_pascal_combination(n_max: u64) -> IdentityCheck {
    let mut check = IdentityCheck::new("Pascal combination");
    let b = |n: u64, k: i64| BigInt::from(binomial(n, k));
    for n in 2..=n_max {
        let top = 2 * n - 2;
        for k in 1..n {
            let (n_i, k_i) = (n as i64, k as i64);
            let lhs = BigInt::from(4) * b(top, n_i - 1 - k_i) - b(2 * n, n_i - k_i);
            let rhs = (b(top, n_i - k_i - 1) - b(top, n_i - k_i - 2))
                + (b(top, n_i - k_i - 1) - b(top, n_i - k_i));
            check.record(lhs == rhs, || format!("n={n}, k={k}: {lhs} != {rhs}"));
        }
    }
    check
}

/// The closed forms satisfy the left/right multiplication recurrences for
/// `c`, `d` (n ≥ 2) and `e` (n ≥ 2, one step below the range where the
/// recurrence is usually quoted).
pub fn verify_recurrence_closure(n_max: u32) -> IdentityCheck {
    let mut check = IdentityCheck::new("word-count recurrences");
    let closed = |n: u32, k: i64| -> (BigUint, BigUint, BigUint) {
        if k < 0 {
            return (BigUint::zero(), BigUint::zero(), BigUint::zero());
        }
        let c = word_counts_closed(n, k as u32).expect("n ≥ 1");
        (c.c, c.d, c.e)
    };
    for n in 2..=n_max {
        for k in 0..=n as i64 + 1 {
            let (c, d, e) = closed(n, k);
            let prev = closed(n - 1, k);
            let prev_lo = closed(n - 1, k - 1);
            let prev_hi = closed(n - 1, k + 1);
            if k >= 1 {
                let rec_c = &prev.0 + &prev.1 + &prev_lo.1 + &prev_lo.0;
                check.record(rec_c == c, || format!("c({n},{k})"));
                let rec_e = &prev.2 + &prev.1 + &prev_lo.1 + &prev_hi.2;
                check.record(rec_e == e, || format!("e({n},{k})"));
            }
            let rec_d = &prev.1 + &prev.0 + &prev_hi.0 + &prev_hi.1;
            check.record(rec_d == d, || format!("d({n},{k})"));
            if k >= 1 {
                let shifted = closed(n, k - 1).1;
                check.record(shifted == c, || format!("d({n},{}) != c({n},{k})", k - 1));
            }
        }
    }
    check
}

/// Brute-force tallies equal the closed forms for `1 ≤ n ≤ n_max`, every `k`,
/// and the odd-length classes total `2^{2n−1}`.
pub fn verify_bruteforce_closed(n_max: u32) -> crate::Result<(IdentityCheck, IdentityCheck)> {
    let mut closed_check = IdentityCheck::new("brute-force equals closed form");
    let mut odd_check = IdentityCheck::new("odd-word total");
    for n in 1..=n_max {
        let table = word_counts_bruteforce(n)?;
        closed_check.record(table.total() == 4u64.pow(n), || {
            format!("n={n}: total {} != 4^n", table.total())
        });
        for k in 0..=n + 1 {
            let closed = word_counts_closed(n, k)?;
            let pairs = [
                ("c", table.c(k), &closed.c),
                ("d", table.d(k), &closed.d),
                ("e", table.e(k), &closed.e),
            ];
            for (name, brute, exact) in pairs {
                closed_check.record(&BigUint::from(brute) == exact, || {
                    format!("{name}({n},{k}): brute {brute} != closed {exact}")
                });
            }
            // The other odd class mirrors d under a <-> b.
            closed_check.record(table.count(WordClass::BAb(k)) == table.d(k), || {
                format!("b(ab)^{k} count differs from d({n},{k})")
            });
        }
        let odd = table.odd_total();
        odd_check.record(odd == 1u64 << (2 * n - 1), || {
            format!("n={n}: odd total {odd} != 2^{}", 2 * n - 1)
        });
    }
    Ok((closed_check, odd_check))
}

/// `Σ_{n≥1} c(n,0) z^n` against `(1/2)(1/√(1−4z) − 1)` to order `order`.
///
/// The series of `g = (1−4z)^{-1/2}` comes from `(1−4z) g' = 2g`, i.e.
/// `g_{n+1} = (4n+2) g_n / (n+1)`, and is checked against `g²(1−4z) = 1`
/// before the comparison.
pub fn verify_central_generating_function(order: usize) -> IdentityCheck {
    let mut check = IdentityCheck::new("generating function of c(n,0)");
    let mut g = vec![ExactRational::one()];
    for n in 0..order {
        let next = &g[n]
            * &ExactRational::new(BigInt::from(4 * n + 2), BigInt::from(n + 1)).expect("n+1 > 0");
        g.push(next);
    }
    for n in 0..=order {
        let sq: ExactRational = (0..=n).map(|k| &g[k] * &g[n - k]).sum();
        let sq_prev: ExactRational = if n == 0 {
            ExactRational::zero()
        } else {
            (0..n).map(|k| &g[k] * &g[n - 1 - k]).sum()
        };
        let coeff = sq - ExactRational::from_integer(4) * sq_prev;
        let expected = if n == 0 {
            ExactRational::one()
        } else {
            ExactRational::zero()
        };
        check.record(coeff == expected, || format!("g²(1−4z) coefficient {n}"));
    }
    let half = ExactRational::new(1, 2).expect("nonzero");
    for n in 1..=order {
        let from_series = &half * &g[n];
        let count = word_counts_closed(n as u32, 0).expect("n ≥ 1").c;
        let count = ExactRational::from_integer(BigInt::from(count));
        check.record(from_series == count, || {
            format!("n={n}: series {from_series} != c(n,0) {count}")
        });
    }
    check
}

/// `−β_n`, where `√(1−z) = Σ β_n z^n`: `C(2n, n) / (4^n (2n − 1))`.
pub fn sqrt_one_minus_coeff(n: u64) -> ExactRational {
    let num = -BigInt::from(binomial(2 * n, n as i64));
    let den = (BigInt::one() << (2 * n)) * (BigInt::from(2 * n) - BigInt::one());
    ExactRational::new(num, den).expect("nonzero")
}

/// The `λ → 1` limit of the increments `c_n(0) − c_{n−1}(0)` vanishes:
/// `2^{1−2n} [C(2n−2, n−2) − C(2n−2, n−1)] − β_n = 0` for `2 ≤ n ≤ n_max`.
pub fn verify_increment_limit(n_max: u64) -> IdentityCheck {
    let mut check = IdentityCheck::new("λ→1 limit of c_n(0) increments");
    for n in 2..=n_max {
        let diff = BigInt::from(binomial(2 * n - 2, n as i64 - 2))
            - BigInt::from(binomial(2 * n - 2, n as i64 - 1));
        let first = ExactRational::new(diff, BigInt::one() << (2 * n - 1)).expect("nonzero");
        let total = first - sqrt_one_minus_coeff(n);
        check.record(total.is_zero(), || format!("n={n}: {total}"));
    }
    check
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> ExactRational {
        ExactRational::new(n, d).unwrap()
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(3, 1), BigUint::from(3u32));
        assert_eq!(binomial(6, -1), BigUint::zero());
        assert_eq!(binomial(6, 7), BigUint::zero());
        assert_eq!(binomial(0, 0), BigUint::one());
    }

    #[test]
    fn catalan_values() {
        assert_eq!(catalan(0), BigUint::one());
        assert_eq!(catalan(3), BigUint::from(5u32));
        assert_eq!(catalan(10), BigUint::from(16796u32));
    }

    #[test]
    fn stationary_moment_values() {
        assert_eq!(stationary_moment(0), ExactRational::one());
        assert_eq!(stationary_moment(1), q(1, 2));
        assert_eq!(stationary_moment(2), q(3, 8));
        // m_1 − m_2 = C_1 / 8
        assert_eq!(stationary_moment(1) - stationary_moment(2), q(1, 8));
    }

    #[test]
    fn catalan_identity_small_cases() {
        // n = 2: 3/8 = (1/2)(1/2) + 1·(1/8)
        let rhs = q(1, 2) * q(1, 2) + q(1, 8);
        assert_eq!(rhs, stationary_moment(2));
        let check = verify_catalan_identity(30);
        assert!(check.ok());
        assert_eq!(check.passed, 30);
    }

    #[test]
    fn beta_coefficients() {
        assert_eq!(sqrt_one_minus_coeff(0), ExactRational::one());
        assert_eq!(sqrt_one_minus_coeff(1), q(-1, 2));
        assert_eq!(sqrt_one_minus_coeff(2), q(-1, 8));
    }

    #[test]
    fn identity_sweeps_pass() {
        assert!(verify_pascal_combination(20).passed());
        assert!(verify_recurrence_closure(20).passed());
        assert!(verify_central_generating_function(20).passed());
        assert!(verify_catalan_differences(30).passed());
        assert!(verify_increment_limit(30).passed());
    }

    #[test]
    fn bruteforce_agrees_with_closed_forms() {
        let (closed, odd) = verify_bruteforce_closed(8).unwrap();
        assert!(closed.passed(), "{:?}", closed.failures);
        assert!(odd.passed(), "{:?}", odd.failures);
    }
}
