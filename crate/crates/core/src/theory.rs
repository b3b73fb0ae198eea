//! Closed-form detection-probability predictions for the diversity-based
//! consensus protocol and its large-step (majority-rule) limit.
//!
//! The finite-step formula sums, over the number `i` of sensors that initially
//! voted occupied, a binomially weighted product of per-sensor Gaussian tail
//! factors whose arguments grow like `sqrt(K)`. Degenerate arguments are
//! resolved by limit conventions (see [`pd_finite_k`]). The limit form is the
//! binomial upper tail at the inclusive majority threshold.

use crate::error::{Error, Result};
use crate::real::Real;

/// Inputs of the finite-step detection-probability formula.
///
/// Invariants: `m >= 1`, `k >= 1`, `0 < p <= 1`, `0 <= pi11 <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams<R: Real> {
    /// Number of SUs in the network.
    pub m: usize,
    /// Number of consensus steps.
    pub k: usize,
    /// Per-pair link probability.
    pub p: R,
    /// Per-SU probability of voting occupied when the channel is occupied.
    pub pi11: R,
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
///
/// Computed through the complementary error function; accurate to about
/// 1e-15 relative for `f64`.
pub fn q_function<R: Real>(x: R) -> R {
    let half = R::of(0.5);
    let sqrt2 = R::of(std::f64::consts::SQRT_2);
    half * (x / sqrt2).erfc()
}

/// One Gaussian tail factor of the finite-step formula, with the degenerate
/// cases resolved:
///
/// * zero numerator (`i = m/2`, even `m`): the fused statistic sits exactly on
///   the decision threshold, and the inclusive decision rule resolves the tie
///   to "occupied", so the factor is 1;
/// * zero denominator (`i` in {0, 1} or `p = 1`): the argument is taken to its
///   sign limit, giving 0 for a positive numerator and 1 for a negative one.
fn q_factor<R: Real>(num: R, k: usize, denom_sq: R) -> R {
    if num == R::zero() {
        return R::one();
    }
    if denom_sq <= R::zero() {
        return if num > R::zero() { R::zero() } else { R::one() };
    }
    q_function(num * R::of(k as f64).sqrt() / denom_sq.sqrt())
}

/// `C(m, i) * a^(m-i) * b^i` without intermediate overflow.
///
/// Small `m` uses the exact multiplicative recurrence in the scalar type
/// (binomial coefficients up to m = 170 fit an f64); larger `m` falls back to
/// log space through `ln_gamma`.
fn binomial_weight<R: Real>(m: usize, i: usize, a: R, b: R) -> R {
    if (a == R::zero() && m - i > 0) || (b == R::zero() && i > 0) {
        return R::zero();
    }
    if m <= 170 {
        let mut c = R::one();
        for j in 0..i.min(m - i) {
            c = c * R::of((m - j) as f64) / R::of((j + 1) as f64);
        }
        return c * a.powi((m - i) as i32) * b.powi(i as i32);
    }
    let ln_choose = R::of((m + 1) as f64).ln_gamma()
        - R::of((i + 1) as f64).ln_gamma()
        - R::of((m - i + 1) as f64).ln_gamma();
    let mut ln_term = ln_choose;
    if m - i > 0 {
        ln_term = ln_term + R::of((m - i) as f64) * a.ln();
    }
    if i > 0 {
        ln_term = ln_term + R::of(i as f64) * b.ln();
    }
    ln_term.exp()
}

/// Detection probability of the diversity-based consensus after `k` steps.
///
/// Evaluates, for each count `i` of initially-detecting sensors,
///
/// ```text
/// C(m,i) * [(1 - pi11) * Q((m/2 - i) sqrt(k) / sqrt(((1-p)/p) i))]^(m-i)
///        * [     pi11  * Q((m/2 - i) sqrt(k) / sqrt(((1-p)/p) |i-1|))]^i
/// ```
///
/// and sums over `i = 0..=m`, with degenerate arguments handled by
/// [`q_factor`]. Total for all valid parameters; the result is in `[0, 1]`.
pub fn pd_finite_k<R: Real>(params: &TheoryParams<R>) -> R {
    let TheoryParams { m, k, p, pi11 } = *params;
    debug_assert!(m >= 1 && k >= 1);
    debug_assert!(p > R::zero() && p <= R::one());
    debug_assert!(pi11 >= R::zero() && pi11 <= R::one());

    let c = (R::one() - p) / p;
    let half_m = R::of(m as f64 / 2.0);
    let mut sum = R::zero();
    for i in 0..=m {
        let num = half_m - R::of(i as f64);
        let qa = q_factor(num, k, c * R::of(i as f64));
        let qb = q_factor(num, k, c * R::of(i.abs_diff(1) as f64));
        let term = binomial_weight(m, i, (R::one() - pi11) * qa, pi11 * qb);
        sum = sum + term;
    }
    sum.min(R::one()).max(R::zero())
}

/// Large-step limit of the detection probability: the binomial upper tail
/// `sum_{i=ceil(m/2)}^{m} C(m,i) (1 - pi11)^(m-i) pi11^i`, i.e. the
/// majority-rule performance with per-SU detection probability `pi11`.
pub fn pd_asymptotic<R: Real>(m: usize, pi11: R) -> R {
    debug_assert!(m >= 1);
    debug_assert!(pi11 >= R::zero() && pi11 <= R::one());
    let mut sum = R::zero();
    for i in m.div_ceil(2)..=m {
        sum = sum + binomial_weight(m, i, R::one() - pi11, pi11);
    }
    sum.min(R::one()).max(R::zero())
}

/// Estimate the per-SU detection probability from pipeline samples.
///
/// Each sample is a `(voted occupied, truly occupied)` pair for one
/// (channel, SU) combination; the estimate is the detection fraction among
/// truly occupied pairs. Fails with [`Error::NoSamples`] when no occupied
/// pair is present.
pub fn estimate_pi11(samples: impl IntoIterator<Item = (bool, bool)>) -> Result<f64> {
    let mut active = 0u64;
    let mut detected = 0u64;
    for (vote, truth) in samples {
        if truth {
            active += 1;
            if vote {
                detected += 1;
            }
        }
    }
    if active == 0 {
        return Err(Error::NoSamples);
    }
    Ok(detected as f64 / active as f64)
}
