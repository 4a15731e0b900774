//! Checks for every intermediate quantity in the positivity argument for
//! `P_n(λ)`:
//!
//! * the small-`n` branch (`2 <= n <= 94`), built on `M(j) <= 0` for
//!   `2 <= j <= 93` and the monotone partial geometric sums `B_k`;
//! * the partition of `1..=n-1` into `A`, `B`, `C`, `D` and the sums
//!   `a`, `b`, `c`, `d`;
//! * the sufficient conditions `a + b + c - d > 0`, `4a > d` and
//!   `λ^(n/2) + 3λ^n - 4λ^(9n/10) >= 0`;
//! * `Σ d_j = S1 - S2 - S3` with `S1 = Φ(m)`, the totient lower bound, and
//!   the tail estimate `d <= 0.342 n^2`;
//! * `g(x) = 1 - 4x^(4/5) + 3x >= 0` on `[0, 1]`.
//!
//! Rational quantities are compared exactly in integers. Bounds involving
//! `π` or logarithms are evaluated in `f64`, where the slack is many orders
//! of magnitude above rounding error.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::engine::MertensOracle;
use crate::error::{Error, Result};
use crate::kernel::{coefficients, CoefficientVector, Rational};
use crate::quotient::quotient_blocks;
use crate::sieve::TotientTable;

/// First `n` of the large-`n` branch.
pub const LARGE_BRANCH_MIN_N: u64 = 95;
/// Largest `n` handled by the small-`n` branch.
pub const SMALL_BRANCH_MAX_N: u64 = 94;

/// Euler–Mascheroni constant, used only by the sharper totient bound.
pub const EULER_GAMMA: f64 = 0.5772156649015329;

/// Rounding allowance for float-evaluated bounds of size about `n^2`.
fn float_slack(scale: f64) -> f64 {
    1e-9 * scale.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSummary {
    pub n: u64,
    /// `⌊n/2⌋`: `A = 1..=⌊n/2⌋`.
    pub half: u64,
    /// `⌊9n/10⌋`: `B = ⌊n/2⌋+1..=⌊9n/10⌋`, and `C`, `D` lie above it.
    pub nine_tenths: u64,
    pub a: i128,
    pub b: i128,
    pub c: i128,
    /// `Σ_{j∈D} |d_j|`, nonnegative.
    pub d: i128,
    /// `|A|, |B|, |C|, |D|`.
    pub sizes: [u64; 4],
}

impl PartitionSummary {
    pub fn signed_total(&self) -> i128 {
        self.a + self.b + self.c - self.d
    }
}

pub fn partition_of(cv: &CoefficientVector) -> PartitionSummary {
    let n = cv.n();
    let half = n / 2;
    let nine_tenths = 9 * n / 10;
    let top = n - 1;
    let mut sums = [0i128; 4];
    let mut sizes = [0u64; 4];
    for j in 1..=top {
        let v = cv.d(j) as i128;
        let set = if j <= half {
            0
        } else if j <= nine_tenths {
            1
        } else if v >= 0 {
            2
        } else {
            3
        };
        sums[set] += if set == 3 { -v } else { v };
        sizes[set] += 1;
    }
    PartitionSummary {
        n,
        half,
        nine_tenths,
        a: sums[0],
        b: sums[1],
        c: sums[2],
        d: sums[3],
        sizes,
    }
}

pub fn partition_sums(oracle: &MertensOracle, n: u64) -> Result<PartitionSummary> {
    Ok(partition_of(&coefficients(oracle, n)?))
}

/// The two arithmetic sufficient conditions, with their integer slack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct B4Check {
    pub n: u64,
    /// `false` for `n < 95`, where the argument uses the small-`n` branch.
    pub in_large_branch: bool,
    /// `a + b + c - d`.
    pub total_margin: i128,
    pub total_positive: bool,
    /// `4a - d`.
    pub four_a_margin: i128,
    pub four_a_exceeds_d: bool,
    /// `8a - (n^2 - 4n + 3)`.
    pub a_bound_margin: i128,
    pub a_bound_holds: bool,
}

impl B4Check {
    pub fn passes(&self) -> bool {
        self.total_positive && self.four_a_exceeds_d && self.a_bound_holds
    }
}

pub fn b4_of(p: &PartitionSummary) -> B4Check {
    let n = p.n as i128;
    let total = p.signed_total();
    let four_a = 4 * p.a - p.d;
    let a_bound = 8 * p.a - (n * n - 4 * n + 3);
    B4Check {
        n: p.n,
        in_large_branch: p.n >= LARGE_BRANCH_MIN_N,
        total_margin: total,
        total_positive: total > 0,
        four_a_margin: four_a,
        four_a_exceeds_d: four_a > 0,
        a_bound_margin: a_bound,
        a_bound_holds: a_bound >= 0,
    }
}

pub fn check_b4(oracle: &MertensOracle, n: u64) -> Result<B4Check> {
    Ok(b4_of(&partition_sums(oracle, n)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumDecomposition {
    pub m: u64,
    /// `Σ_{r=1}^{m} r f(r)`.
    pub s1: i128,
    /// `f(1) = M(m)`.
    pub s2: i128,
    /// `Σ_{r=2}^{m} f(r)`.
    pub s3: i128,
}

impl SumDecomposition {
    pub fn combined(&self) -> i128 {
        self.s1 - self.s2 - self.s3
    }
}

/// `S1`, `S2`, `S3` for `m = n - 1`, summing `f(r) = M(⌊m/r⌋)` over runs of
/// constant quotient.
pub fn decompose(oracle: &MertensOracle, m: u64) -> Result<SumDecomposition> {
    if m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    let mut s1 = 0i128;
    let mut all = 0i128;
    for block in quotient_blocks(m) {
        let f = oracle.mertens(block.quotient)? as i128;
        s1 += f * block.index_sum() as i128;
        all += f * block.len() as i128;
    }
    let s2 = oracle.mertens(m)? as i128;
    Ok(SumDecomposition {
        m,
        s1,
        s2,
        s3: all - s2,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumDecompositionCheck {
    pub parts: SumDecomposition,
    /// `Φ(m)`.
    pub totient_sum: u64,
    pub totient_identity: bool,
    pub s2_is_mertens: bool,
    /// `m log m - S3`.
    pub s3_margin: f64,
    pub s3_bound: bool,
}

impl SumDecompositionCheck {
    pub fn passes(&self) -> bool {
        self.totient_identity && self.s2_is_mertens && self.s3_bound
    }
}

/// Computes `S1, S2, S3` and checks `S1 = Φ(m)`, `S2 = M(m) <= m` and
/// `S3 <= m log m`.
pub fn sum_decomposition(
    oracle: &MertensOracle,
    totients: &TotientTable,
    m: u64,
) -> Result<SumDecompositionCheck> {
    if m > totients.limit() {
        return Err(Error::Capacity {
            requested: m,
            ceiling: totients.limit(),
        });
    }
    let parts = decompose(oracle, m)?;
    let totient_sum = totients.try_prefix_sum(m)?;
    let mf = m as f64;
    let s3_margin = mf * mf.ln() - parts.s3 as f64;
    Ok(SumDecompositionCheck {
        totient_identity: parts.s1 == totient_sum as i128,
        s2_is_mertens: parts.s2 == oracle.mertens(m)? as i128 && parts.s2 <= m as i128,
        s3_bound: s3_margin >= 0.0,
        s3_margin,
        totient_sum,
        parts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotientBoundCheck {
    pub m: u64,
    pub totient_sum: u64,
    /// `3m²/π² - (1/2) m log m - m`.
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    /// `3m²/π² - (1/2) m log m - (γ/2 + 5/8) m - 1`.
    pub sharp_rhs: f64,
    pub sharp_holds: bool,
}

fn integer_ge_float(value: u64, rhs: f64) -> bool {
    let v = value as f64;
    if (rhs - rhs.round()).abs() < 1e-6 {
        v >= rhs + 1.0
    } else {
        v >= rhs
    }
}

pub fn check_totient_bound(totients: &TotientTable, m: u64) -> Result<TotientBoundCheck> {
    let totient_sum = totients.try_prefix_sum(m)?;
    let mf = m as f64;
    let main = 3.0 * mf * mf / (PI * PI) - 0.5 * mf * mf.ln();
    let rhs = main - mf;
    let sharp_rhs = main - (EULER_GAMMA / 2.0 + 5.0 / 8.0) * mf - 1.0;
    Ok(TotientBoundCheck {
        m,
        totient_sum,
        rhs,
        margin: totient_sum as f64 - rhs,
        holds: integer_ge_float(totient_sum, rhs),
        sharp_rhs,
        sharp_holds: integer_ge_float(totient_sum, sharp_rhs),
    })
}

/// `Σ_{j=1}^{m} d_j >= 3m²/π² - (3/2) m log m - 2m > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorSumCheck {
    pub m: u64,
    pub interior_sum: i128,
    pub rhs: f64,
    pub bound_holds: bool,
    pub rhs_positive: bool,
}

pub fn check_interior_sum(cv: &CoefficientVector) -> InteriorSumCheck {
    interior_sum_bound(cv.m(), cv.interior_sum())
}

/// Same check for a sum obtained elsewhere, e.g. [`SumDecomposition::combined`].
pub fn interior_sum_bound(m: u64, interior_sum: i128) -> InteriorSumCheck {
    let mf = m as f64;
    let rhs = 3.0 * mf * mf / (PI * PI) - 1.5 * mf * mf.ln() - 2.0 * mf;
    InteriorSumCheck {
        m,
        interior_sum,
        rhs,
        bound_holds: interior_sum as f64 >= rhs + float_slack(rhs),
        rhs_positive: rhs > float_slack(rhs),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailCheck {
    pub n: u64,
    pub d: i128,
    /// `d / n^2`.
    pub ratio: f64,
    /// `(n^2/10)(log(950/85) + 1)`.
    pub log_bound: f64,
    pub within_log_bound: bool,
    /// `1000 d <= 342 n^2`, exact.
    pub within_0342: bool,
    /// `0.342 n^2 < (n^2 - 4n + 3)/2`, exact.
    pub below_half_quadratic: bool,
}

impl TailCheck {
    pub fn passes(&self) -> bool {
        self.within_log_bound && self.within_0342 && self.below_half_quadratic
    }
}

/// The rounded constant: `(log(950/85) + 1)/10 <= 0.342`.
pub fn tail_constant() -> f64 {
    ((950.0f64 / 85.0).ln() + 1.0) / 10.0
}

pub fn tail_of(p: &PartitionSummary) -> TailCheck {
    let nf = p.n as f64;
    let n = p.n as i128;
    let log_bound = nf * nf * tail_constant();
    TailCheck {
        n: p.n,
        d: p.d,
        ratio: p.d as f64 / (nf * nf),
        log_bound,
        within_log_bound: (p.d as f64) <= log_bound - float_slack(log_bound),
        within_0342: 1000 * p.d <= 342 * n * n,
        below_half_quadratic: 684 * n * n < 1000 * (n * n - 4 * n + 3),
    }
}

pub fn check_tail_estimate(oracle: &MertensOracle, n: u64) -> Result<TailCheck> {
    if n < LARGE_BRANCH_MIN_N {
        return Err(Error::domain(format!(
            "the tail estimate is stated for n >= {LARGE_BRANCH_MIN_N}, got {n}"
        )));
    }
    Ok(tail_of(&partition_sums(oracle, n)?))
}

/// Lower bounds on individual coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainCheck {
    pub n: u64,
    /// `30 d_{n-⌊(n-1)/5⌋} - (11n - 35)`, for `n >= 4`.
    pub fifth_margin: Option<i128>,
    /// `210 d_{n-⌊(n-1)/10⌋} - (40n - 1116)`, for `n >= 28`.
    pub tenth_margin: Option<i128>,
    /// `min d_j` over `0 <= j <= n - ⌊(n-1)/10⌋`, for `n >= 28`.
    pub window_min: Option<i64>,
    /// `d_j = n - 1 - ⌊(n-1)/2⌋` on `n-⌊(n-1)/2⌋+1 <= j <= n-⌊(n-1)/3⌋`.
    pub plateau_holds: bool,
}

impl ChainCheck {
    pub fn passes(&self) -> bool {
        self.fifth_margin.is_none_or(|v| v >= 0)
            && self.tenth_margin.is_none_or(|v| v >= 0)
            && self.window_min.is_none_or(|v| v >= 0)
            && self.plateau_holds
    }
}

pub fn check_chain(cv: &CoefficientVector) -> ChainCheck {
    let n = cv.n();
    let ni = n as i128;
    let fifth_margin = (n >= 4).then(|| 30 * cv.d(n - (n - 1) / 5) as i128 - (11 * ni - 35));
    let tenth_index = n - (n - 1) / 10;
    let tenth_margin = (n >= 28).then(|| 210 * cv.d(tenth_index) as i128 - (40 * ni - 1116));
    let window_min = (n >= 28).then(|| {
        cv.coefficients()[..=tenth_index as usize]
            .iter()
            .copied()
            .min()
            .unwrap()
    });
    let level = (n - 1 - (n - 1) / 2) as i64;
    let plateau_holds = (n - (n - 1) / 2 + 1..=n - (n - 1) / 3)
        .filter(|&j| j < n)
        .all(|j| cv.d(j) == level);
    ChainCheck {
        n,
        fifth_margin,
        tenth_margin,
        window_min,
        plateau_holds,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GCheck {
    pub samples: u64,
    /// `g(0) = 1` and `g(1) = 0`, both exact in `f64`.
    pub endpoints_exact: bool,
    pub min_g: f64,
    pub max_g_prime: f64,
    pub interior_holds: bool,
    /// Smallest value of `1 + 3λ^(n/2) - 4λ^(2n/5)`, i.e. the power form
    /// divided by `λ^(n/2)`, over the λ-grid and the `n` set.
    pub power_form_min: f64,
    pub power_form_holds: bool,
}

impl GCheck {
    pub fn passes(&self) -> bool {
        self.endpoints_exact && self.interior_holds && self.power_form_holds
    }
}

pub const G_SLACK: f64 = 1e-12;

#[inline]
pub fn g(x: f64) -> f64 {
    1.0 - 4.0 * x.powf(0.8) + 3.0 * x
}

#[inline]
pub fn g_prime(x: f64) -> f64 {
    -3.2 * x.powf(-0.2) + 3.0
}

/// Checks `g` at its endpoints exactly, and `g > 0`, `g' < 0` at `samples`
/// evenly spaced interior points. Also checks `λ^(n/2) + 3λ^n - 4λ^(9n/10)`
/// for each `n` in `ns` at `λ = i/grid`, `i = 1..=grid`.
pub fn check_g(samples: u64, ns: &[u64], grid: u64) -> Result<GCheck> {
    if samples < 2 {
        return Err(Error::domain("check_g needs at least 2 samples"));
    }
    let endpoints_exact = g(0.0) == 1.0 && g(1.0) == 0.0;
    let mut min_g = f64::INFINITY;
    let mut max_g_prime = f64::NEG_INFINITY;
    let step = 1.0 / (samples + 1) as f64;
    for k in 1..=samples {
        let x = k as f64 * step;
        min_g = min_g.min(g(x));
        max_g_prime = max_g_prime.max(g_prime(x));
    }
    let mut power_form_min = f64::INFINITY;
    for &n in ns {
        let nf = n as f64;
        for i in 1..=grid {
            let lam = i as f64 / grid as f64;
            let v = 1.0 + 3.0 * lam.powf(nf / 2.0) - 4.0 * lam.powf(2.0 * nf / 5.0);
            power_form_min = power_form_min.min(v);
        }
    }
    Ok(GCheck {
        samples,
        endpoints_exact,
        min_g,
        max_g_prime,
        interior_holds: min_g > G_SLACK && max_g_prime < -G_SLACK,
        power_form_holds: ns.is_empty() || grid == 0 || power_form_min >= -G_SLACK,
        power_form_min,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmallNCheck {
    pub n: u64,
    /// `M(⌊m/k⌋) = 1` for `⌊m/2⌋+1 <= k <= m`.
    pub tail_ones: bool,
    /// `M(j) <= 0` for `2 <= j <= 93`.
    pub signs_nonpositive: bool,
    /// `B_0 > B_1 > ... > B_{m+1}` at every sampled λ.
    pub monotone: bool,
    /// `B_0 - Σ f(k) B_k >= B_0 - B_{⌊m/2⌋+1}` at every sampled λ.
    pub chain_holds: bool,
    /// `B_0 - B_{⌊m/2⌋+1} > 0` at every sampled λ.
    pub conclusion_holds: bool,
}

impl SmallNCheck {
    pub fn passes(&self) -> bool {
        self.tail_ones && self.signs_nonpositive && self.monotone && self.chain_holds && self.conclusion_holds
    }
}

/// `λ = i/16` for `i = 1..=16`.
pub fn default_small_n_lambdas() -> Vec<Rational> {
    (1..=16)
        .map(|i| Rational::new(BigInt::from(i), BigInt::from(16)))
        .collect()
}

pub fn check_small_n(oracle: &MertensOracle, n: u64, lambdas: &[Rational]) -> Result<SmallNCheck> {
    if !(2..=SMALL_BRANCH_MAX_N).contains(&n) {
        return Err(Error::domain(format!(
            "the small-n branch covers 2 <= n <= {SMALL_BRANCH_MAX_N}, got {n}"
        )));
    }
    for lam in lambdas {
        if !lam.is_positive() || *lam > Rational::one() {
            return Err(Error::domain(format!("lambda = {lam} is outside (0, 1]")));
        }
    }
    let cv = coefficients(oracle, n)?;
    let m = n - 1;
    let half = m / 2;
    let tail_ones = (half + 1..=m).all(|k| cv.f(k) == 1);
    let mut signs_nonpositive = true;
    for j in 2..=93 {
        signs_nonpositive &= oracle.mertens(j)? <= 0;
    }

    let mut monotone = true;
    let mut chain_holds = true;
    let mut conclusion_holds = true;
    for lam in lambdas {
        // b[k] = q^n B_k = Σ_{j=0}^{n-k} p^j q^(n-j), k = 0..=n.
        let (p, q) = (lam.numer(), lam.denom());
        let mut terms = Vec::with_capacity(n as usize + 1);
        let mut p_pow = BigInt::one();
        let q_pows: Vec<BigInt> = {
            let mut v = vec![BigInt::one()];
            for _ in 0..n {
                let next = v.last().unwrap() * q;
                v.push(next);
            }
            v
        };
        for j in 0..=n as usize {
            terms.push(&p_pow * &q_pows[n as usize - j]);
            p_pow *= p;
        }
        let mut prefix = Vec::with_capacity(terms.len());
        let mut acc = BigInt::zero();
        for t in &terms {
            acc += t;
            prefix.push(acc.clone());
        }
        let b = |k: u64| &prefix[(n - k) as usize];
        monotone &= (0..=m).all(|k| b(k) > b(k + 1));
        let mut lhs = b(0).clone();
        for k in 1..=m {
            lhs -= b(k) * cv.f(k);
        }
        let conclusion = b(0) - b(half + 1);
        chain_holds &= lhs >= conclusion;
        conclusion_holds &= conclusion.is_positive();
    }
    Ok(SmallNCheck {
        n,
        tail_ones,
        signs_nonpositive,
        monotone,
        chain_holds,
        conclusion_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::build_totient;

    fn oracle() -> MertensOracle {
        MertensOracle::new(20_000).unwrap()
    }

    #[test]
    fn partition_n10() {
        let p = partition_sums(&oracle(), 10).unwrap();
        assert_eq!((p.half, p.nine_tenths), (5, 9));
        assert_eq!(p.sizes, [5, 4, 0, 0]);
        assert_eq!((p.c, p.d), (0, 0));
        let cv = coefficients(&oracle(), 10).unwrap();
        assert_eq!(p.signed_total(), cv.interior_sum());
    }

    #[test]
    fn partition_covers_indices() {
        let o = oracle();
        for n in 2..400 {
            let p = partition_sums(&o, n).unwrap();
            assert_eq!(p.sizes.iter().sum::<u64>(), n - 1);
            assert!(p.d >= 0);
        }
    }

    #[test]
    fn b4_at_95() {
        let b = check_b4(&oracle(), 95).unwrap();
        assert!(b.in_large_branch);
        assert!(b.passes(), "{b:?}");
        // n odd: the A-sum bound is attained exactly.
        assert_eq!(b.a_bound_margin, 0);
        assert!(!check_b4(&oracle(), 50).unwrap().in_large_branch);
    }

    #[test]
    fn decomposition_m5() {
        let o = oracle();
        let tot = build_totient(100).unwrap();
        let chk = sum_decomposition(&o, &tot, 5).unwrap();
        assert_eq!((chk.parts.s1, chk.parts.s2, chk.parts.s3), (10, -2, 3));
        assert_eq!(chk.parts.combined(), 9);
        assert_eq!(coefficients(&o, 6).unwrap().interior_sum(), 9);
        assert!(chk.passes());
        let one = sum_decomposition(&o, &tot, 1).unwrap();
        assert_eq!((one.parts.s1, one.parts.s2, one.parts.s3), (1, 1, 0));
        assert!(one.passes());
        assert!(matches!(sum_decomposition(&o, &tot, 101), Err(Error::Capacity { .. })));
        assert!(decompose(&o, 0).is_err());
    }

    #[test]
    fn totient_bound_examples() {
        let tot = build_totient(200).unwrap();
        let one = check_totient_bound(&tot, 1).unwrap();
        assert!(one.holds && one.rhs < -0.69 && one.rhs > -0.70);
        let c = check_totient_bound(&tot, 94).unwrap();
        assert!(c.holds && c.sharp_holds && c.margin > 0.0);
        assert!(check_totient_bound(&tot, 201).is_err());
        assert!(integer_ge_float(5, 4.5));
        assert!(!integer_ge_float(5, 5.0000000001));
        assert!(!integer_ge_float(5, 4.9999999999));
        assert!(integer_ge_float(6, 4.9999999999));
    }

    #[test]
    fn tail_examples() {
        let o = oracle();
        let t = check_tail_estimate(&o, 95).unwrap();
        assert!(t.passes());
        let t = check_tail_estimate(&o, 1000).unwrap();
        assert!(t.passes() && t.ratio < 0.342);
        assert!(check_tail_estimate(&o, 94).is_err());
        assert!(tail_constant() <= 0.342);
        let empty = tail_of(&partition_sums(&o, 10).unwrap());
        assert_eq!(empty.d, 0);
    }

    #[test]
    fn chain_examples() {
        let o = oracle();
        let c = check_chain(&coefficients(&o, 3).unwrap());
        assert_eq!((c.fifth_margin, c.tenth_margin), (None, None));
        for n in [4u64, 28, 95, 1000] {
            assert!(check_chain(&coefficients(&o, n).unwrap()).passes(), "n={n}");
        }
    }

    #[test]
    fn g_examples() {
        let chk = check_g(1000, &[95, 200], 100).unwrap();
        assert!(chk.passes(), "{chk:?}");
        assert!(g(0.5) > 0.0 && g_prime(0.5) < 0.0);
        assert!((g(0.5) - (2.5 - 4.0 * 0.5f64.powf(0.8))).abs() < 1e-15);
        assert!(g_prime(1e-300) < -1e50);
        assert!(check_g(1, &[], 0).is_err());
    }

    #[test]
    fn small_n_examples() {
        let o = oracle();
        let lams = default_small_n_lambdas();
        assert!(check_small_n(&o, 2, &lams).unwrap().passes());
        assert!(check_small_n(&o, 94, &lams).unwrap().passes());
        assert!(check_small_n(&o, 95, &lams).is_err());
        assert!(check_small_n(&o, 1, &lams).is_err());
        assert!(check_small_n(&o, 10, &[Rational::zero()]).is_err());
    }
}
