//! Sublinear Mertens function.
//!
//! From Σ_{k=1}^{x} M(⌊x/k⌋) = 1 we get
//!
//! ```text
//! M(x) = 1 - Σ_{k=2}^{x} M(⌊x/k⌋)
//! ```
//!
//! The sum is taken over runs of constant quotient, so a value costs
//! `O(sqrt x)` lookups. Arguments at or below the threshold come from a dense
//! sieve table; larger ones are memoized. With the threshold near `x^(2/3)`
//! a query costs roughly `O(x^(2/3))`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::sieve::{MertensTable, SieveConfig};

pub const CACHE_MAGIC: &[u8; 8] = b"MRTC0001";

pub const MIN_DEFAULT_THRESHOLD: u64 = 10_000;
pub const MAX_DEFAULT_THRESHOLD: u64 = 100_000_000;

/// `ceil(x_max^(2/3))` clamped to `[10^4, 10^8]`.
pub fn default_threshold(x_max: u64) -> u64 {
    let estimate = (x_max as f64).powf(2.0 / 3.0).ceil();
    if estimate >= 2.0 * MAX_DEFAULT_THRESHOLD as f64 {
        return MAX_DEFAULT_THRESHOLD;
    }
    // Correct float error: t is the least integer with t^3 >= x_max^2.
    let cube_ge = |t: u64| (t as u128).pow(3) >= (x_max as u128).pow(2);
    let mut t = estimate as u64;
    while t > 0 && cube_ge(t - 1) {
        t -= 1;
    }
    while !cube_ge(t) {
        t += 1;
    }
    t.clamp(MIN_DEFAULT_THRESHOLD, MAX_DEFAULT_THRESHOLD)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleStats {
    /// Top-level queries answered straight from the memo.
    pub memo_hits: u64,
    /// Values above the threshold computed by the recursion.
    pub computed: u64,
    pub memo_len: u64,
}

/// Answers M(x) exactly for any `x >= 1`.
///
/// Shareable across threads: concurrent queries may duplicate work, but every
/// value inserted into the memo is exact, so results never disagree.
#[derive(Debug)]
pub struct MertensOracle {
    config: SieveConfig,
    dense: MertensTable,
    memo: RwLock<HashMap<u64, i64>>,
    hits: AtomicU64,
    computed: AtomicU64,
}

impl MertensOracle {
    pub fn new(threshold: u64) -> Result<Self> {
        Self::with_config(threshold, SieveConfig::default())
    }

    pub fn with_config(threshold: u64, config: SieveConfig) -> Result<Self> {
        let dense = MertensTable::build(threshold, &config)?;
        Ok(MertensOracle {
            config,
            dense,
            memo: RwLock::new(HashMap::new()),
            hits: AtomicU64::new(0),
            computed: AtomicU64::new(0),
        })
    }

    /// An oracle sized for queries up to `x_max`.
    pub fn for_max_query(x_max: u64) -> Result<Self> {
        Self::new(default_threshold(x_max))
    }

    pub fn threshold(&self) -> u64 {
        self.dense.limit()
    }

    pub fn dense(&self) -> &MertensTable {
        &self.dense
    }

    pub fn stats(&self) -> OracleStats {
        OracleStats {
            memo_hits: self.hits.load(Ordering::Relaxed),
            computed: self.computed.load(Ordering::Relaxed),
            memo_len: self.memo.read().len() as u64,
        }
    }

    /// The memoized `(x, M(x))` pairs, ascending by `x`.
    pub fn memo_snapshot(&self) -> BTreeMap<u64, i64> {
        self.memo.read().iter().map(|(&k, &v)| (k, v)).collect()
    }

    pub fn clear_memo(&self) {
        self.memo.write().clear();
    }

    /// M(x). `x = 0` is a domain error.
    pub fn mertens(&self, x: u64) -> Result<i64> {
        if x == 0 {
            return Err(Error::domain("M(x) is defined for x >= 1"));
        }
        if x <= self.threshold() {
            return Ok(self.dense.get(x));
        }
        if let Some(&v) = self.memo.read().get(&x) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        let mut local = HashMap::new();
        let value = self.compute(x, &mut local)?;
        self.computed
            .fetch_add(local.len() as u64, Ordering::Relaxed);
        self.memo.write().extend(local);
        Ok(value)
    }

    fn lookup(&self, v: u64, local: &HashMap<u64, i64>) -> Option<i64> {
        if v <= self.threshold() {
            return Some(self.dense.get(v));
        }
        local
            .get(&v)
            .copied()
            .or_else(|| self.memo.read().get(&v).copied())
    }

    fn compute(&self, x: u64, local: &mut HashMap<u64, i64>) -> Result<i64> {
        if let Some(v) = self.lookup(x, local) {
            return Ok(v);
        }
        let mut acc: i128 = 1;
        let mut k = 2u64;
        while k <= x {
            let q = x / k;
            let hi = x / q;
            let mq = match self.lookup(q, local) {
                Some(v) => v,
                None => self.compute(q, local)?,
            };
            acc -= (hi - k + 1) as i128 * mq as i128;
            k = hi + 1;
        }
        let value = i64::try_from(acc)
            .map_err(|_| Error::Overflow(format!("M({x}) does not fit in 64 bits")))?;
        local.insert(x, value);
        Ok(value)
    }

    /// Rebuilds the dense table with ceiling `t`. Memo entries at or below
    /// `t` are checked against the new table and dropped; entries above `t`
    /// are kept.
    pub fn set_threshold(&mut self, t: u64) -> Result<()> {
        let dense = MertensTable::build(t, &self.config)?;
        let memo = self.memo.get_mut();
        for (&x, &v) in memo.iter() {
            if x <= t && dense.get(x) != v {
                return Err(Error::Inconsistent(format!(
                    "memoized M({x}) = {v}, sieve gives {}",
                    dense.get(x)
                )));
            }
        }
        memo.retain(|&x, _| x > t);
        self.dense = dense;
        Ok(())
    }

    pub fn write_cache<W: Write>(&self, mut out: W) -> Result<()> {
        let entries = self.memo_snapshot();
        let mut buf = Vec::with_capacity(24 + 16 * entries.len() + 4);
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&self.threshold().to_le_bytes());
        buf.extend_from_slice(&(entries.len() as u64).to_le_bytes());
        for (x, m) in &entries {
            buf.extend_from_slice(&x.to_le_bytes());
            buf.extend_from_slice(&m.to_le_bytes());
        }
        let crc = crc32fast::hash(&buf);
        buf.extend_from_slice(&crc.to_le_bytes());
        out.write_all(&buf)?;
        out.flush()?;
        Ok(())
    }

    pub fn save_cache(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_cache(BufWriter::new(File::create(path)?))
    }

    /// Reads a cache, rebuilding the dense table at the stored threshold.
    pub fn read_cache<R: Read>(input: R, config: SieveConfig) -> Result<Self> {
        let CacheContents { threshold, entries } = CacheContents::read(input)?;
        let oracle = Self::with_config(threshold, config)?;
        {
            let mut memo = oracle.memo.write();
            for (x, m) in entries {
                if x <= threshold && oracle.dense.get(x) != m {
                    return Err(Error::CorruptCache(format!(
                        "entry M({x}) = {m} contradicts the sieve"
                    )));
                }
                if x > threshold {
                    memo.insert(x, m);
                }
            }
        }
        Ok(oracle)
    }

    pub fn load_cache(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_cache(BufReader::new(File::open(path)?), SieveConfig::default())
    }
}

/// Parsed cache file, before any table is rebuilt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheContents {
    pub threshold: u64,
    pub entries: Vec<(u64, i64)>,
}

impl CacheContents {
    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf)?;
        Self::parse(&buf)
    }

    pub fn parse(buf: &[u8]) -> Result<Self> {
        if buf.len() < 8 + 8 + 8 + 4 {
            return Err(Error::CorruptCache(format!("file too short ({} bytes)", buf.len())));
        }
        if &buf[..8] != CACHE_MAGIC {
            return Err(Error::CorruptCache("bad magic".into()));
        }
        let (body, tail) = buf.split_at(buf.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return Err(Error::CorruptCache("checksum mismatch".into()));
        }
        let u64_at = |off: usize| u64::from_le_bytes(body[off..off + 8].try_into().unwrap());
        let threshold = u64_at(8);
        let count = u64_at(16);
        let expected = count
            .checked_mul(16)
            .and_then(|b| b.checked_add(24))
            .ok_or_else(|| Error::CorruptCache("entry count overflows".into()))?;
        if body.len() as u64 != expected {
            return Err(Error::CorruptCache(format!(
                "length {} does not match {count} entries",
                body.len()
            )));
        }
        let mut entries = Vec::with_capacity(count as usize);
        for i in 0..count as usize {
            let off = 24 + 16 * i;
            let x = u64_at(off);
            let m = u64_at(off + 8) as i64;
            if let Some(&(prev, _)) = entries.last() {
                if x <= prev {
                    return Err(Error::CorruptCache("entries not strictly ascending".into()));
                }
            }
            entries.push((x, m));
        }
        Ok(CacheContents { threshold, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        let oracle = MertensOracle::new(1).unwrap();
        assert_eq!(oracle.mertens(1).unwrap(), 1);
        assert_eq!(oracle.mertens(2).unwrap(), 0);
        assert_eq!(oracle.mertens(5).unwrap(), -2);
        assert!(matches!(oracle.mertens(0), Err(Error::Domain(_))));
    }

    #[test]
    fn default_threshold_clamps() {
        assert_eq!(default_threshold(1), MIN_DEFAULT_THRESHOLD);
        assert_eq!(default_threshold(1_000_000_000), 1_000_000);
        assert_eq!(default_threshold(1_000_000_001), 1_000_001);
        assert_eq!(default_threshold(u64::MAX), MAX_DEFAULT_THRESHOLD);
    }

    #[test]
    fn matches_sieve_below_threshold_crossing() {
        let sieve = MertensTable::build(20_000, &SieveConfig::default()).unwrap();
        let oracle = MertensOracle::new(50).unwrap();
        for x in 1..=20_000 {
            assert_eq!(oracle.mertens(x).unwrap(), sieve.get(x), "x={x}");
        }
    }

    #[test]
    fn set_threshold_keeps_answers() {
        let mut oracle = MertensOracle::new(1000).unwrap();
        let a = oracle.mertens(10_000).unwrap();
        let before = oracle.memo_snapshot();
        oracle.set_threshold(5000).unwrap();
        assert!(oracle.memo_snapshot().keys().all(|&x| x > 5000));
        assert_eq!(oracle.memo_snapshot().len(), before.range(5001..).count());
        assert_eq!(oracle.mertens(10_000).unwrap(), a);
        let tiny = SieveConfig { max_limit: 10, ..SieveConfig::default() };
        let mut capped = MertensOracle::with_config(10, tiny).unwrap();
        assert!(matches!(capped.set_threshold(11), Err(Error::Capacity { .. })));
    }

    #[test]
    fn cache_rejects_damage() {
        let oracle = MertensOracle::new(100).unwrap();
        oracle.mertens(100_000).unwrap();
        let mut bytes = Vec::new();
        oracle.write_cache(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 24 + 16 * oracle.stats().memo_len as usize + 4);

        let reloaded = MertensOracle::read_cache(&bytes[..], SieveConfig::default()).unwrap();
        assert_eq!(reloaded.memo_snapshot(), oracle.memo_snapshot());

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            CacheContents::parse(&bad_magic),
            Err(Error::CorruptCache(_))
        ));
        let mut flipped = bytes.clone();
        flipped[30] ^= 1;
        assert!(matches!(
            CacheContents::parse(&flipped),
            Err(Error::CorruptCache(_))
        ));
        assert!(CacheContents::parse(&bytes[..10]).is_err());
    }
}
