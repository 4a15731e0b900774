//! Dense tables of the Möbius function, the Mertens function, Euler's totient
//! and the totient prefix sum.
//!
//! Limits up to [`LINEAR_SIEVE_MAX`] use a linear sieve. Larger limits use a
//! segmented sieve over the primes up to `sqrt(limit)`; segments are
//! independent and run in parallel under [`Execution::Parallel`].

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::quotient::quotient_blocks;

/// Largest limit handled by the linear sieve.
pub const LINEAR_SIEVE_MAX: u64 = 10_000_000;

/// Default ceiling on table limits. A Mertens table at this limit takes about
/// 2.2 GB (one byte of μ plus eight bytes of M per entry).
pub const DEFAULT_MAX_LIMIT: u64 = 250_000_000;

/// Segment length of the segmented sieve, in entries.
pub const SEGMENT_LEN: usize = 1 << 17;

#[derive(Debug, Clone, Copy)]
pub struct SieveConfig {
    pub max_limit: u64,
    pub execution: Execution,
}

impl Default for SieveConfig {
    fn default() -> Self {
        SieveConfig {
            max_limit: DEFAULT_MAX_LIMIT,
            execution: Execution::default(),
        }
    }
}

impl SieveConfig {
    pub fn check_limit(&self, limit: u64) -> Result<usize> {
        if limit == 0 || limit > self.max_limit || limit > u32::MAX as u64 {
            return Err(Error::Capacity {
                requested: limit,
                ceiling: self.max_limit.min(u32::MAX as u64),
            });
        }
        Ok(limit as usize)
    }
}

/// μ(n) for `1 <= n <= limit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MobiusTable {
    // mu[0] is unused and kept at 0.
    mu: Vec<i8>,
}

impl MobiusTable {
    pub fn limit(&self) -> u64 {
        (self.mu.len() - 1) as u64
    }

    /// μ(n). Panics unless `1 <= n <= limit`.
    #[inline]
    pub fn get(&self, n: u64) -> i8 {
        assert!(n >= 1, "mobius is defined for n >= 1");
        self.mu[n as usize]
    }

    /// The values μ(1), ..., μ(limit).
    pub fn values(&self) -> &[i8] {
        &self.mu[1..]
    }
}

/// M(N) = μ(1) + ... + μ(N) for `1 <= N <= limit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MertensTable {
    // m[0] = M(0) = 0.
    m: Vec<i64>,
}

impl MertensTable {
    /// Sieves μ up to `limit` and accumulates it.
    pub fn build(limit: u64, config: &SieveConfig) -> Result<Self> {
        Ok(build_mertens(&build_mobius_with(limit, config)?))
    }

    pub fn limit(&self) -> u64 {
        (self.m.len() - 1) as u64
    }

    /// M(n). Panics when `n > limit`; `get(0)` is the empty sum 0.
    #[inline]
    pub fn get(&self, n: u64) -> i64 {
        self.m[n as usize]
    }

    pub fn try_get(&self, n: u64) -> Result<i64> {
        if n == 0 || n > self.limit() {
            return Err(Error::OutOfRange {
                index: n,
                limit: self.limit(),
            });
        }
        Ok(self.m[n as usize])
    }

    /// The values M(1), ..., M(limit).
    pub fn values(&self) -> &[i64] {
        &self.m[1..]
    }
}

/// φ(n) and Φ(n) = φ(1) + ... + φ(n) for `1 <= n <= limit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TotientTable {
    phi: Vec<u32>,
    prefix: Vec<u64>,
}

impl TotientTable {
    pub fn limit(&self) -> u64 {
        (self.phi.len() - 1) as u64
    }

    #[inline]
    pub fn phi(&self, n: u64) -> u64 {
        assert!(n >= 1, "totient is defined for n >= 1");
        self.phi[n as usize] as u64
    }

    /// Φ(n); `prefix_sum(0)` is 0.
    #[inline]
    pub fn prefix_sum(&self, n: u64) -> u64 {
        self.prefix[n as usize]
    }

    pub fn try_prefix_sum(&self, n: u64) -> Result<u64> {
        if n == 0 || n > self.limit() {
            return Err(Error::OutOfRange {
                index: n,
                limit: self.limit(),
            });
        }
        Ok(self.prefix[n as usize])
    }
}

pub fn build_mobius(limit: u64) -> Result<MobiusTable> {
    build_mobius_with(limit, &SieveConfig::default())
}

pub fn build_mobius_with(limit: u64, config: &SieveConfig) -> Result<MobiusTable> {
    let limit = config.check_limit(limit)?;
    let mu = if limit as u64 <= LINEAR_SIEVE_MAX {
        linear_mobius(limit)
    } else {
        segmented_mobius(limit, SEGMENT_LEN, config.execution)
    };
    Ok(MobiusTable { mu })
}

pub fn build_mertens(mob: &MobiusTable) -> MertensTable {
    let mut m = Vec::with_capacity(mob.mu.len());
    m.push(0i64);
    let mut acc = 0i64;
    for &v in &mob.mu[1..] {
        acc += v as i64;
        m.push(acc);
    }
    MertensTable { m }
}

pub fn build_totient(limit: u64) -> Result<TotientTable> {
    build_totient_with(limit, &SieveConfig::default())
}

pub fn build_totient_with(limit: u64, config: &SieveConfig) -> Result<TotientTable> {
    let limit = config.check_limit(limit)?;
    let phi = if limit as u64 <= LINEAR_SIEVE_MAX {
        linear_totient(limit)
    } else {
        segmented_totient(limit, SEGMENT_LEN, config.execution)
    };
    let mut prefix = Vec::with_capacity(phi.len());
    prefix.push(0u64);
    let mut acc = 0u64;
    for &v in &phi[1..] {
        acc += v as u64;
        prefix.push(acc);
    }
    Ok(TotientTable { phi, prefix })
}

/// Σ_{k=1}^{n} M(⌊n/k⌋), grouped over runs of constant quotient.
pub fn identity_sum(mert: &MertensTable, n: u64) -> i64 {
    if n <= u32::MAX as u64 {
        // 32-bit division is markedly cheaper in this loop.
        let n32 = n as u32;
        let mut acc = 0i64;
        let mut k = 1u32;
        while k <= n32 {
            let q = n32 / k;
            let hi = n32 / q;
            acc += (hi - k + 1) as i64 * mert.m[q as usize];
            if hi == u32::MAX {
                break;
            }
            k = hi + 1;
        }
        return acc;
    }
    let total: i128 = quotient_blocks(n)
        .map(|b| b.len() as i128 * mert.get(b.quotient) as i128)
        .sum();
    total as i64
}

/// Σ_{k=1}^{n} M(⌊n/k⌋), one term per `k`.
pub fn identity_sum_direct(mert: &MertensTable, n: u64) -> i64 {
    (1..=n).map(|k| mert.get(n / k)).sum()
}

/// Whether Σ_{k=1}^{n} M(⌊n/k⌋) = 1.
pub fn check_sum_identity(mert: &MertensTable, n: u64) -> Result<bool> {
    mert.try_get(n)?;
    Ok(identity_sum(mert, n) == 1)
}

/// Primes up to `limit` (inclusive), from a linear sieve.
pub fn primes_up_to(limit: usize) -> Vec<u32> {
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            primes.push(i as u32);
        }
        for &p in &primes {
            let ip = i * p as usize;
            if ip > limit {
                break;
            }
            composite[ip] = true;
            if i % p as usize == 0 {
                break;
            }
        }
    }
    primes
}

pub(crate) fn linear_mobius(limit: usize) -> Vec<i8> {
    let mut mu = vec![0i8; limit + 1];
    let mut composite = vec![false; limit + 1];
    let mut primes: Vec<usize> = Vec::new();
    mu[1] = 1;
    for i in 2..=limit {
        if !composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let ip = i * p;
            if ip > limit {
                break;
            }
            composite[ip] = true;
            if i % p == 0 {
                mu[ip] = 0;
                break;
            }
            mu[ip] = -mu[i];
        }
    }
    mu
}

pub(crate) fn linear_totient(limit: usize) -> Vec<u32> {
    let mut phi = vec![0u32; limit + 1];
    let mut primes: Vec<usize> = Vec::new();
    phi[1] = 1;
    for i in 2..=limit {
        if phi[i] == 0 {
            primes.push(i);
            phi[i] = (i - 1) as u32;
        }
        for &p in &primes {
            let ip = i * p;
            if ip > limit {
                break;
            }
            if i % p == 0 {
                phi[ip] = phi[i] * p as u32;
                break;
            }
            phi[ip] = phi[i] * (p as u32 - 1);
        }
    }
    phi
}

fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

pub(crate) fn segmented_mobius(limit: usize, segment_len: usize, exec: Execution) -> Vec<i8> {
    let primes = primes_up_to(isqrt(limit));
    let mut mu = vec![0i8; limit + 1];
    exec.for_each_chunk(&mut mu[1..], segment_len, |ci, chunk| {
        let lo = 1 + ci * segment_len;
        let end = lo + chunk.len(); // exclusive
        // Part of each n not yet explained by the base primes.
        let mut rest: Vec<u32> = (lo..end).map(|n| n as u32).collect();
        chunk.fill(1);
        for &p in &primes {
            let p = p as usize;
            if p * p >= end {
                break;
            }
            let mut m = lo.div_ceil(p) * p;
            while m < end {
                let idx = m - lo;
                chunk[idx] = -chunk[idx];
                rest[idx] /= p as u32;
                m += p;
            }
            let pp = p * p;
            let mut m = lo.div_ceil(pp) * pp;
            while m < end {
                chunk[m - lo] = 0;
                m += pp;
            }
        }
        // A squarefree n keeps at most one prime factor above sqrt(limit).
        for (v, &r) in chunk.iter_mut().zip(&rest) {
            if r > 1 {
                *v = -*v;
            }
        }
    });
    mu
}

pub(crate) fn segmented_totient(limit: usize, segment_len: usize, exec: Execution) -> Vec<u32> {
    let primes = primes_up_to(isqrt(limit));
    let mut phi = vec![0u32; limit + 1];
    exec.for_each_chunk(&mut phi[1..], segment_len, |ci, chunk| {
        let lo = 1 + ci * segment_len;
        let end = lo + chunk.len();
        let mut rest: Vec<u32> = (lo..end).map(|n| n as u32).collect();
        for (v, &n) in chunk.iter_mut().zip(&rest) {
            *v = n;
        }
        for &p in &primes {
            let p = p as usize;
            if p * p >= end {
                break;
            }
            let p32 = p as u32;
            let mut m = lo.div_ceil(p) * p;
            while m < end {
                let idx = m - lo;
                chunk[idx] -= chunk[idx] / p32;
                while rest[idx].is_multiple_of(p32) {
                    rest[idx] /= p32;
                }
                m += p;
            }
        }
        for (v, &r) in chunk.iter_mut().zip(&rest) {
            if r > 1 {
                *v -= *v / r;
            }
        }
    });
    phi
}
