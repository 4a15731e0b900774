//! The weighted Mertens-sum polynomial
//!
//! ```text
//! P_n(λ) = Σ_{j=0}^{n} λ^j - Σ_{k=1}^{n-1} M(⌊(n-1)/k⌋) Σ_{j=0}^{n-k} λ^j = Σ_{j=0}^{n} d_j λ^j
//! ```
//!
//! and its exact and floating-point evaluation.
//!
//! Exact evaluation at `λ = p/q` works on the homogenised integer
//! `q^n P_n(p/q) = Σ d_j p^j q^(n-j)`, split recursively so that the cost is a
//! few big multiplications of the final size rather than `n` passes over it.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::engine::MertensOracle;
use crate::error::{Error, Result};
use crate::quotient::quotient_blocks_in;

pub type Rational = BigRational;

/// How the entries of a [`CoefficientVector`] were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivation {
    /// `d_j` as suffix sums of `f`, with fixed endpoints.
    SuffixSums,
    /// Term-by-term expansion of the defining double sum.
    DirectExpansion,
}

/// Origin of a single coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryOrigin {
    /// `d_0 = 0` or `d_n = 1`.
    Endpoint,
    /// Suffix sum inside the window where it reduces to `d_j = j - 1`.
    LinearWindow,
    SuffixSum,
    DirectExpansion,
}

/// The coefficients `d_0..=d_n` and the values `f(r) = M(⌊(n-1)/r⌋)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientVector {
    n: u64,
    d: Vec<i64>,
    // f[0] is padding; f[r] for 1 <= r <= n-1.
    f: Vec<i64>,
    derivation: Derivation,
}

/// Last index of the window `2 <= j <= n - ⌊(n-1)/2⌋` where `d_j = j - 1`.
pub fn linear_window_end(n: u64) -> u64 {
    n - (n - 1) / 2
}

impl CoefficientVector {
    pub fn n(&self) -> u64 {
        self.n
    }

    /// `m = n - 1`.
    pub fn m(&self) -> u64 {
        self.n - 1
    }

    /// `d_0, ..., d_n`.
    pub fn coefficients(&self) -> &[i64] {
        &self.d
    }

    #[inline]
    pub fn d(&self, j: u64) -> i64 {
        self.d[j as usize]
    }

    /// `f(r) = M(⌊(n-1)/r⌋)` for `1 <= r <= n-1`.
    #[inline]
    pub fn f(&self, r: u64) -> i64 {
        assert!(r >= 1 && r < self.n, "f(r) needs 1 <= r <= n-1");
        self.f[r as usize]
    }

    /// `f(1), ..., f(n-1)`.
    pub fn f_values(&self) -> &[i64] {
        &self.f[1..]
    }

    pub fn derivation(&self) -> Derivation {
        self.derivation
    }

    pub fn origin(&self, j: u64) -> EntryOrigin {
        match self.derivation {
            _ if j == 0 || j == self.n => EntryOrigin::Endpoint,
            Derivation::DirectExpansion => EntryOrigin::DirectExpansion,
            Derivation::SuffixSums if j >= 2 && j <= linear_window_end(self.n) => {
                EntryOrigin::LinearWindow
            }
            Derivation::SuffixSums => EntryOrigin::SuffixSum,
        }
    }

    /// `Σ_{j=1}^{n-1} d_j`, i.e. `P_n(1) - 1`.
    pub fn interior_sum(&self) -> i128 {
        self.d[1..self.n as usize].iter().map(|&v| v as i128).sum()
    }

    /// Checks the complementary form `d_{n-j} = 1 - Σ_{r=1}^{j} f(r)`.
    pub fn complement_form_holds(&self) -> bool {
        let mut prefix = 0i64;
        (1..self.n).all(|j| {
            prefix += self.f[j as usize];
            self.d[(self.n - j) as usize] == 1 - prefix
        })
    }
}

fn check_degree(n: u64) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("n must be at least 2, got {n}")));
    }
    if n > u32::MAX as u64 {
        return Err(Error::domain(format!("n = {n} is too large for a dense coefficient vector")));
    }
    Ok(())
}

/// `f(r)` for `1 <= r <= n-1`, one oracle query per run of constant quotient.
fn f_by_blocks(oracle: &MertensOracle, n: u64) -> Result<Vec<i64>> {
    let m = n - 1;
    let mut f = vec![0i64; n as usize];
    for block in quotient_blocks_in(m, 1, m) {
        let value = oracle.mertens(block.quotient)?;
        f[block.lo as usize..=block.hi as usize].fill(value);
    }
    Ok(f)
}

/// Coefficients from suffix sums `d_j = Σ_{r=n-j+1}^{n-1} f(r)`.
pub fn coefficients(oracle: &MertensOracle, n: u64) -> Result<CoefficientVector> {
    check_degree(n)?;
    let f = f_by_blocks(oracle, n)?;
    let len = n as usize;
    let mut d = vec![0i64; len + 1];
    let mut acc = 0i64;
    for j in 2..len {
        acc = acc
            .checked_add(f[len - j + 1])
            .ok_or_else(|| Error::Overflow(format!("d_{j} for n = {n}")))?;
        d[j] = acc;
    }
    d[len] = 1;
    Ok(CoefficientVector {
        n,
        d,
        f,
        derivation: Derivation::SuffixSums,
    })
}

/// Coefficients by expanding `Σ λ^j - Σ_k f(k) Σ_{j<=n-k} λ^j` term by term.
/// Quadratic in `n`; used as a cross-check for [`coefficients`].
pub fn expand_direct(oracle: &MertensOracle, n: u64) -> Result<CoefficientVector> {
    check_degree(n)?;
    let len = n as usize;
    let mut f = vec![0i64; len];
    for (k, slot) in f.iter_mut().enumerate().skip(1) {
        *slot = oracle.mertens((n - 1) / k as u64)?;
    }
    let mut d = vec![1i64; len + 1];
    for (k, &fk) in f.iter().enumerate().skip(1) {
        for c in &mut d[..=len - k] {
            *c -= fk;
        }
    }
    Ok(CoefficientVector {
        n,
        d,
        f,
        derivation: Derivation::DirectExpansion,
    })
}

/// Validates `0 <= λ <= 1`.
pub fn check_unit_interval(lambda: &Rational) -> Result<()> {
    if lambda.is_negative() || *lambda > Rational::one() {
        return Err(Error::domain(format!("lambda = {lambda} is outside [0, 1]")));
    }
    Ok(())
}

/// Parses `p/q`, `p`, or a finite decimal such as `0.25` or `2.5e-3` into a
/// rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((mantissa, exp)) = text.split_once(['e', 'E']) {
        if mantissa.contains('/') {
            return Err(bad());
        }
        let exp: i32 = exp.parse().map_err(|_| bad())?;
        if exp.unsigned_abs() > 100_000 {
            return Err(bad());
        }
        let scale = Rational::from_integer(BigInt::from(10u32).pow(exp.unsigned_abs()));
        let m = parse_rational(mantissa)?;
        return Ok(if exp >= 0 { m * scale } else { m / scale });
    }
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole: BigInt = match whole {
            "" | "-" | "+" => BigInt::zero(),
            w => w.parse().map_err(|_| bad())?,
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        let magnitude = whole.abs() * &scale + frac;
        let numer = if negative { -magnitude } else { magnitude };
        return Ok(Rational::new(numer, scale));
    }
    Ok(Rational::from_integer(text.parse().map_err(|_| bad())?))
}

/// An exact value kept as an unreduced fraction, `numer / denom` with
/// `denom > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Margin {
    pub numer: BigInt,
    pub denom: BigInt,
}

impl Margin {
    pub fn new(numer: BigInt, denom: BigInt) -> Self {
        debug_assert!(denom.is_positive());
        Margin { numer, denom }
    }

    pub fn sign(&self) -> Ordering {
        self.numer.sign().cmp(&num_bigint::Sign::NoSign)
    }

    pub fn to_rational(&self) -> Rational {
        Rational::new(self.numer.clone(), self.denom.clone())
    }
}

/// Powers of a fixed denominator `q^0..=q^max`, shareable across evaluators.
#[derive(Debug, Clone)]
pub struct DenominatorPowers {
    base: BigInt,
    pows: Vec<BigInt>,
}

impl DenominatorPowers {
    pub fn new(base: BigInt, max_exponent: usize) -> Self {
        let mut pows = Vec::with_capacity(max_exponent + 1);
        let mut acc = BigInt::one();
        for _ in 0..=max_exponent {
            let next = &acc * &base;
            pows.push(acc);
            acc = next;
        }
        DenominatorPowers { base, pows }
    }

    pub fn base(&self) -> &BigInt {
        &self.base
    }

    pub fn max_exponent(&self) -> usize {
        self.pows.len() - 1
    }
}

const LEAF_LEN: usize = 8;

/// Evaluates `Σ_{j<L} c_j p^j q^(L-1-j)` for a fixed `λ = p/q` and integer
/// coefficient slices of any length `L`.
#[derive(Debug, Clone)]
pub struct ScaledEvaluator {
    num: BigInt,
    den: BigInt,
    // num^(2^k) and den^(2^k)
    num_squares: Vec<BigInt>,
    den_squares: Vec<BigInt>,
    den_table: Option<Arc<DenominatorPowers>>,
    // p^0..p^(LEAF_LEN-1) and q^0..q^(LEAF_LEN-1) when they fit comfortably
    small: Option<([i128; LEAF_LEN], [i128; LEAF_LEN])>,
}

impl ScaledEvaluator {
    /// `num / den` with `den > 0`; tables are sized for slices up to `max_len`.
    pub fn new(num: BigInt, den: BigInt, max_len: usize) -> Self {
        Self::build(num, den, None, max_len)
    }

    pub fn for_rational(lambda: &Rational, max_len: usize) -> Self {
        Self::new(lambda.numer().clone(), lambda.denom().clone(), max_len)
    }

    /// Shares a full table of denominator powers, which avoids recomputing
    /// remainder powers across many evaluations with the same `q`.
    pub fn with_denominator_table(num: BigInt, table: Arc<DenominatorPowers>, max_len: usize) -> Self {
        let den = table.base().clone();
        Self::build(num, den, Some(table), max_len)
    }

    fn build(num: BigInt, den: BigInt, den_table: Option<Arc<DenominatorPowers>>, max_len: usize) -> Self {
        assert!(den.is_positive(), "denominator must be positive");
        let levels = usize::BITS as usize - max_len.max(2).leading_zeros() as usize;
        let squares = |base: &BigInt| {
            let mut v = Vec::with_capacity(levels + 1);
            v.push(base.clone());
            for k in 1..=levels {
                let next = &v[k - 1] * &v[k - 1];
                v.push(next);
            }
            v
        };
        let small = small_powers(&num).zip(small_powers(&den));
        ScaledEvaluator {
            num_squares: squares(&num),
            den_squares: squares(&den),
            num,
            den,
            den_table,
            small,
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    fn pow_from_squares(squares: &[BigInt], base: &BigInt, e: usize) -> BigInt {
        if e == 0 {
            return BigInt::one();
        }
        let mut acc: Option<BigInt> = None;
        for bit in 0..usize::BITS as usize {
            if e >> bit == 0 {
                break;
            }
            if (e >> bit) & 1 == 1 {
                let factor = match squares.get(bit) {
                    Some(s) => Cow::Borrowed(s),
                    None => Cow::Owned(num_traits::pow(base.clone(), 1 << bit)),
                };
                acc = Some(match acc {
                    None => factor.into_owned(),
                    Some(a) => a * factor.as_ref(),
                });
            }
        }
        acc.unwrap()
    }

    /// `p^e`.
    pub fn num_pow(&self, e: usize) -> BigInt {
        Self::pow_from_squares(&self.num_squares, &self.num, e)
    }

    /// `q^e`.
    pub fn den_pow(&self, e: usize) -> Cow<'_, BigInt> {
        if let Some(table) = &self.den_table {
            if let Some(v) = table.pows.get(e) {
                return Cow::Borrowed(v);
            }
        }
        if e.is_power_of_two() {
            if let Some(v) = self.den_squares.get(e.trailing_zeros() as usize) {
                return Cow::Borrowed(v);
            }
        }
        Cow::Owned(Self::pow_from_squares(&self.den_squares, &self.den, e))
    }

    fn num_pow_of_two(&self, e: usize) -> Cow<'_, BigInt> {
        debug_assert!(e.is_power_of_two());
        match self.num_squares.get(e.trailing_zeros() as usize) {
            Some(v) => Cow::Borrowed(v),
            None => Cow::Owned(num_traits::pow(self.num.clone(), e)),
        }
    }

    /// `Σ_{j<L} c_j p^j q^(L-1-j)` where `L = coeffs.len()`; zero when empty.
    pub fn homogeneous(&self, coeffs: &[i64]) -> BigInt {
        let len = coeffs.len();
        if len == 0 {
            return BigInt::zero();
        }
        if len <= LEAF_LEN {
            return self.leaf(coeffs);
        }
        // Low part is a power-of-two block, so only q needs arbitrary exponents.
        let lo_len = 1usize << (usize::BITS - 1 - (len - 1).leading_zeros());
        let (lo, hi) = coeffs.split_at(lo_len);
        let v_lo = self.homogeneous(lo);
        let v_hi = self.homogeneous(hi);
        let mut out = v_lo * self.den_pow(len - lo_len).as_ref();
        if !v_hi.is_zero() {
            out += v_hi * self.num_pow_of_two(lo_len).as_ref();
        }
        out
    }

    fn leaf(&self, coeffs: &[i64]) -> BigInt {
        let top = coeffs.len() - 1;
        if let Some((p, q)) = &self.small {
            let mut acc = 0i128;
            let ok = coeffs.iter().enumerate().all(|(j, &c)| {
                match (c as i128)
                    .checked_mul(p[j])
                    .and_then(|t| t.checked_mul(q[top - j]))
                    .and_then(|t| t.checked_add(acc))
                {
                    Some(v) => {
                        acc = v;
                        true
                    }
                    None => false,
                }
            });
            if ok {
                return BigInt::from(acc);
            }
        }
        // Horner in p with explicit powers of q.
        let mut acc = BigInt::from(coeffs[top]);
        for j in (0..top).rev() {
            acc = acc * &self.num + BigInt::from(coeffs[j]) * self.den_pow(top - j).as_ref();
        }
        acc
    }

    /// `q^n P(p/q)` for the polynomial with the given coefficients (degree
    /// `n = coeffs.len() - 1`).
    pub fn scaled_value(&self, coeffs: &[i64]) -> BigInt {
        self.homogeneous(coeffs)
    }

    /// `P(p/q)` as an exact fraction, unreduced.
    pub fn value(&self, coeffs: &[i64]) -> Margin {
        let degree = coeffs.len().saturating_sub(1);
        Margin::new(self.homogeneous(coeffs), self.den_pow(degree).into_owned())
    }
}

fn small_powers(base: &BigInt) -> Option<[i128; LEAF_LEN]> {
    let b = base.to_i128()?;
    // Keeps b^7 times any i64 coefficient times q^7 well inside i128 for
    // the common small grids; larger values fall back to checked arithmetic.
    if b.unsigned_abs() > 1 << 20 {
        return None;
    }
    let mut out = [1i128; LEAF_LEN];
    for k in 1..LEAF_LEN {
        out[k] = out[k - 1].checked_mul(b)?;
    }
    Some(out)
}

/// `P_n(λ)` exactly, for `0 <= λ <= 1`.
pub fn evaluate(cv: &CoefficientVector, lambda: &Rational) -> Result<Rational> {
    check_unit_interval(lambda)?;
    let ev = ScaledEvaluator::for_rational(lambda, cv.d.len());
    Ok(ev.value(&cv.d).to_rational())
}

/// Plain exact Horner over rationals. Slow; kept as an independent route.
pub fn evaluate_horner(cv: &CoefficientVector, lambda: &Rational) -> Rational {
    cv.d.iter()
        .rev()
        .fold(Rational::zero(), |acc, &c| acc * lambda + Rational::from_integer(c.into()))
}

/// Result of compensated Horner evaluation: `|value - P(λ)| <= error_bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatEval {
    pub value: f64,
    pub error_bound: f64,
}

impl FloatEval {
    /// The sign of `P(λ)` when the bound decides it.
    pub fn certain_sign(&self) -> Option<Ordering> {
        if self.value.abs() > self.error_bound {
            self.value.partial_cmp(&0.0)
        } else if self.value == 0.0 && self.error_bound == 0.0 {
            Some(Ordering::Equal)
        } else {
            None
        }
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

fn gamma(k: usize) -> f64 {
    let ku = k as f64 * UNIT_ROUNDOFF;
    ku / (1.0 - ku)
}

/// Compensated Horner evaluation with an a posteriori error bound.
pub fn evaluate_float(cv: &CoefficientVector, lambda: f64) -> Result<FloatEval> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda = {lambda} is outside [0, 1]")));
    }
    Ok(compensated_horner(&cv.d, lambda))
}

pub(crate) fn compensated_horner(coeffs: &[i64], x: f64) -> FloatEval {
    let n = coeffs.len() - 1;
    let mut s = coeffs[n] as f64;
    let mut correction = 0.0f64;
    let mut abs_errors = 0.0f64;
    let ax = x.abs();
    for &c in coeffs[..n].iter().rev() {
        let (p, pi) = two_prod(s, x);
        let (sum, sigma) = two_sum(p, c as f64);
        s = sum;
        correction = correction * x + (pi + sigma);
        abs_errors = abs_errors * ax + (pi.abs() + sigma.abs());
    }
    let value = s + correction;
    let u = UNIT_ROUNDOFF;
    let mut bound = (u * value.abs() + (gamma(4 * n + 2) * abs_errors + 2.0 * u * u * value.abs()))
        / (1.0 - 2.0 * (n as f64 + 1.0) * u);
    if x != 0.0 {
        // Underflow in the error-free transformations.
        bound += 5.0 * (n as f64 + 1.0) * f64::from_bits(1);
    }
    FloatEval {
        value,
        error_bound: bound,
    }
}

/// Sign of `P(λ)` at a double `λ`: decided by the float bound when possible,
/// otherwise by exact evaluation at the dyadic rational equal to `λ`.
pub fn sign_at(cv: &CoefficientVector, lambda: f64) -> Result<Ordering> {
    let fe = evaluate_float(cv, lambda)?;
    if let Some(sign) = fe.certain_sign() {
        return Ok(sign);
    }
    let exact = Rational::from_float(lambda)
        .ok_or_else(|| Error::domain("lambda is not finite"))?;
    Ok(evaluate(cv, &exact)?.numer().sign().cmp(&num_bigint::Sign::NoSign))
}

/// One grid point `λ = i/q` of the positivity sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theorem1Point {
    pub i: u64,
    pub q: u64,
    /// `P_n(λ)`; required `> 0`, or `= 0` exactly when `i = 0`.
    pub value: Margin,
    pub value_pass: bool,
    /// `P_n(λ) - λ^n`; required `>= 0`.
    pub excess: Margin,
    pub excess_pass: bool,
}

/// Signs only, without keeping the margins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Theorem1Signs {
    pub value: Ordering,
    pub excess: Ordering,
}

impl Theorem1Signs {
    /// Positivity with equality only at `λ = 0`, and the `λ^n` lower bound.
    pub fn passes(&self, lambda_is_zero: bool) -> bool {
        let value_ok = if lambda_is_zero {
            self.value == Ordering::Equal
        } else {
            self.value == Ordering::Greater
        };
        value_ok && self.excess != Ordering::Less
    }
}

/// Exact signs of `P_n(λ)` and `P_n(λ) - λ^n` for the evaluator's `λ`.
pub fn theorem1_signs(cv: &CoefficientVector, ev: &ScaledEvaluator) -> Theorem1Signs {
    let (value, excess) = theorem1_scaled(cv, ev);
    Theorem1Signs {
        value: value.sign().cmp(&num_bigint::Sign::NoSign),
        excess: excess.sign().cmp(&num_bigint::Sign::NoSign),
    }
}

// Both numerators over the common denominator q^n.
fn theorem1_scaled(cv: &CoefficientVector, ev: &ScaledEvaluator) -> (BigInt, BigInt) {
    let value = ev.scaled_value(&cv.d);
    let excess = &value - ev.num_pow(cv.n as usize);
    (value, excess)
}

/// Exact check of `P_n(i/q) >= 0` (equality only at `i = 0`) and
/// `P_n(i/q) >= (i/q)^n` for `i = 0..=q`.
pub fn verify_theorem1(oracle: &MertensOracle, n: u64, q: u64) -> Result<Vec<Theorem1Point>> {
    if q == 0 {
        return Err(Error::domain("grid denominator must be at least 1"));
    }
    let cv = coefficients(oracle, n)?;
    let table = Arc::new(DenominatorPowers::new(BigInt::from(q), cv.d.len()));
    let den = table.pows[n as usize].clone();
    Ok((0..=q)
        .map(|i| {
            let ev = ScaledEvaluator::with_denominator_table(BigInt::from(i), table.clone(), cv.d.len());
            let (value, excess) = theorem1_scaled(&cv, &ev);
            let value_pass = if i == 0 { value.is_zero() } else { value.is_positive() };
            let excess_pass = !excess.is_negative();
            Theorem1Point {
                i,
                q,
                value: Margin::new(value, den.clone()),
                value_pass,
                excess: Margin::new(excess, den.clone()),
                excess_pass,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theorem2Outcome {
    /// `Σ f(k) λ^(n-k+1) - λ^(n+1)`; required `> 0`.
    pub margin: Margin,
    pub holds: bool,
    /// `Σ f(k) λ^(n-k+1) - λ^n`; required `> 0`.
    pub strong_margin: Margin,
    pub strong_holds: bool,
}

/// Coefficients of `T(λ) = Σ_{k=1}^{n-1} f(k) λ^(n-k+1)`, degree `n + 1`
/// (the top coefficient is zero).
fn theorem2_poly(cv: &CoefficientVector) -> Vec<i64> {
    let n = cv.n as usize;
    let mut t = vec![0i64; n + 2];
    for k in 1..n {
        t[n - k + 1] = cv.f[k];
    }
    t
}

/// Exact check of `Σ f(k) λ^(n-k+1) > λ^(n+1)` and of the stronger
/// `Σ f(k) λ^(n-k+1) > λ^n`, for `0 < λ < 1`.
pub fn verify_theorem2(oracle: &MertensOracle, n: u64, lambda: &Rational) -> Result<Theorem2Outcome> {
    if !lambda.is_positive() || *lambda >= Rational::one() {
        return Err(Error::domain(format!("lambda = {lambda} is outside (0, 1)")));
    }
    let cv = coefficients(oracle, n)?;
    Ok(theorem2_for(&cv, lambda))
}

pub fn theorem2_for(cv: &CoefficientVector, lambda: &Rational) -> Theorem2Outcome {
    let n = cv.n as usize;
    let mut weak = theorem2_poly(cv);
    let mut strong = weak.clone();
    weak[n + 1] -= 1;
    strong[n] -= 1;
    let ev = ScaledEvaluator::for_rational(lambda, n + 2);
    let margin = ev.value(&weak);
    let strong_margin = ev.value(&strong);
    Theorem2Outcome {
        holds: margin.numer.is_positive(),
        strong_holds: strong_margin.numer.is_positive(),
        margin,
        strong_margin,
    }
}

/// Both sides of `(1 - λ) P_n(λ) = Σ_{k=1}^{n-1} f(k) λ^(n-k+1) - λ^(n+1)`.
///
/// The left side goes through [`evaluate`]; the right side is summed term by
/// term over the common denominator `q^(n+1)`.
pub fn bridge_sides(cv: &CoefficientVector, lambda: &Rational) -> Result<(Rational, Rational)> {
    check_unit_interval(lambda)?;
    let lhs = (Rational::one() - lambda) * evaluate(cv, lambda)?;
    let (p, q) = (lambda.numer(), lambda.denom());
    let n = cv.n as usize;
    let mut acc = BigInt::zero();
    for k in 1..n {
        let term = num_traits::pow(p.clone(), n - k + 1) * num_traits::pow(q.clone(), k);
        acc += term * cv.f[k];
    }
    acc -= num_traits::pow(p.clone(), n + 1);
    let rhs = Rational::new(acc, num_traits::pow(q.clone(), n + 1));
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle() -> MertensOracle {
        MertensOracle::new(10_000).unwrap()
    }

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p.into(), q.into())
    }

    #[test]
    fn small_vectors() {
        let o = oracle();
        let cv = coefficients(&o, 2).unwrap();
        assert_eq!(cv.coefficients(), &[0, 0, 1]);
        assert_eq!(cv.f_values(), &[1]);
        let cv = coefficients(&o, 5).unwrap();
        assert_eq!(cv.coefficients(), &[0, 0, 1, 2, 2, 1]);
        assert_eq!(cv.f_values(), &[-1, 0, 1, 1]);
        let cv = coefficients(&o, 10).unwrap();
        assert_eq!(&cv.coefficients()[2..=5], &[1, 2, 3, 4]);
        assert_eq!(linear_window_end(10), 6);
        assert!(matches!(coefficients(&o, 1), Err(Error::Domain(_))));
        assert!(matches!(expand_direct(&o, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn origins() {
        let o = oracle();
        let cv = coefficients(&o, 10).unwrap();
        assert_eq!(cv.origin(0), EntryOrigin::Endpoint);
        assert_eq!(cv.origin(10), EntryOrigin::Endpoint);
        assert_eq!(cv.origin(1), EntryOrigin::SuffixSum);
        assert_eq!(cv.origin(6), EntryOrigin::LinearWindow);
        assert_eq!(cv.origin(7), EntryOrigin::SuffixSum);
        let direct = expand_direct(&o, 10).unwrap();
        assert_eq!(direct.origin(3), EntryOrigin::DirectExpansion);
        assert_eq!(direct.derivation(), Derivation::DirectExpansion);
    }

    #[test]
    fn exact_values() {
        let o = oracle();
        let cv = coefficients(&o, 5).unwrap();
        assert_eq!(evaluate(&cv, &r(0, 1)).unwrap(), r(0, 1));
        assert_eq!(evaluate(&cv, &r(1, 1)).unwrap(), r(6, 1));
        assert_eq!(evaluate(&cv, &r(1, 2)).unwrap(), r(21, 32));
        assert!(matches!(evaluate(&cv, &r(3, 2)), Err(Error::Domain(_))));
        assert!(matches!(evaluate(&cv, &r(-1, 2)), Err(Error::Domain(_))));
    }

    #[test]
    fn float_values() {
        let o = oracle();
        let cv = coefficients(&o, 5).unwrap();
        let fe = evaluate_float(&cv, 0.5).unwrap();
        assert!((fe.value - 21.0 / 32.0).abs() <= fe.error_bound.max(0.0) + f64::EPSILON);
        assert_eq!(evaluate_float(&cv, 0.0).unwrap(), FloatEval { value: 0.0, error_bound: 0.0 });
        assert_eq!(evaluate_float(&cv, 1.0).unwrap().value, 6.0);
        assert!(evaluate_float(&cv, 1.5).is_err());
        assert!(evaluate_float(&cv, f64::NAN).is_err());
        assert_eq!(sign_at(&cv, 0.0).unwrap(), Ordering::Equal);
        assert_eq!(sign_at(&cv, 0.3).unwrap(), Ordering::Greater);
    }

    #[test]
    fn float_bound_contains_exact_value() {
        let o = oracle();
        for n in [7u64, 95, 400, 1500] {
            let cv = coefficients(&o, n).unwrap();
            for x in [0.001, 0.1, 0.37, 0.5, 0.9, 0.999, 1.0] {
                let fe = evaluate_float(&cv, x).unwrap();
                let exact = evaluate(&cv, &Rational::from_float(x).unwrap()).unwrap();
                let err = (Rational::from_float(fe.value).unwrap() - exact).abs();
                assert!(err <= Rational::from_float(fe.error_bound).unwrap(), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn homogeneous_matches_horner() {
        let o = oracle();
        let cv = coefficients(&o, 300).unwrap();
        for (p, q) in [(0, 1), (1, 1), (1, 3), (7, 10), (999, 1000), (123_456_789, 987_654_321)] {
            let lam = r(p, q);
            assert_eq!(evaluate(&cv, &lam).unwrap(), evaluate_horner(&cv, &lam), "{p}/{q}");
        }
        let table = Arc::new(DenominatorPowers::new(BigInt::from(1000), 10));
        let shared = ScaledEvaluator::with_denominator_table(BigInt::from(333), table, 10);
        let plain = ScaledEvaluator::new(BigInt::from(333), BigInt::from(1000), 2);
        assert_eq!(shared.scaled_value(cv.coefficients()), plain.scaled_value(cv.coefficients()));
    }

    #[test]
    fn theorem2_examples() {
        let o = oracle();
        let out = verify_theorem2(&o, 5, &r(1, 2)).unwrap();
        // 11/32 - 1/64 and 11/32 - 1/32
        assert_eq!(out.margin.to_rational(), r(21, 64));
        assert_eq!(out.strong_margin.to_rational(), r(10, 32));
        assert!(out.holds && out.strong_holds);
        let out = verify_theorem2(&o, 2, &r(1, 2)).unwrap();
        assert_eq!(out.margin.to_rational(), r(1, 8));
        assert!(verify_theorem2(&o, 10, &r(9, 10)).unwrap().holds);
        assert!(verify_theorem2(&o, 10, &r(1, 1)).is_err());
        assert!(verify_theorem2(&o, 10, &r(0, 1)).is_err());
    }

    #[test]
    fn theorem1_examples() {
        let o = oracle();
        let pts = verify_theorem1(&o, 2, 10).unwrap();
        assert_eq!(pts.len(), 11);
        assert!(pts.iter().all(|p| p.value_pass && p.excess_pass));
        // P_2(λ) = λ^2, so the excess margin is identically zero.
        assert!(pts.iter().all(|p| p.excess.numer.is_zero()));
        assert_eq!(pts[3].value.to_rational(), r(9, 100));
        for n in [5u64, 95] {
            assert!(verify_theorem1(&o, n, 100)
                .unwrap()
                .iter()
                .all(|p| p.value_pass && p.excess_pass));
        }
        assert!(verify_theorem1(&o, 5, 0).is_err());
    }

    #[test]
    fn bridge_small() {
        let o = oracle();
        for n in 2..60 {
            let cv = coefficients(&o, n).unwrap();
            for lam in [r(1, 3), r(1, 2), r(9, 10)] {
                let (lhs, rhs) = bridge_sides(&cv, &lam).unwrap();
                assert_eq!(lhs, rhs, "n={n}");
            }
        }
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("3/4").unwrap(), r(3, 4));
        assert_eq!(parse_rational(" 2 / 8 ").unwrap(), r(1, 4));
        assert_eq!(parse_rational("0.25").unwrap(), r(1, 4));
        assert_eq!(parse_rational("1").unwrap(), r(1, 1));
        assert_eq!(parse_rational(".5").unwrap(), r(1, 2));
        assert_eq!(parse_rational("-0.5").unwrap(), r(-1, 2));
        assert_eq!(parse_rational("2.5e-3").unwrap(), r(1, 400));
        assert_eq!(parse_rational("-1e2").unwrap(), r(-100, 1));
        assert!(parse_rational("1/2e3").is_err());
        for bad in ["1/0", "abc", "1.", "1/2/3", ""] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }
}
