use std::sync::Arc;

use mertens_core::engine::{CacheContents, CACHE_MAGIC};
use mertens_core::sieve::{MertensTable, SieveConfig};
use mertens_core::{Error, MertensOracle};
use rand::{Rng, SeedableRng};

#[test]
fn threshold_invariance() {
    let oracles: Vec<MertensOracle> = [100, 1_000, 10_000]
        .into_iter()
        .map(|t| MertensOracle::new(t).unwrap())
        .collect();
    let mut rng = rand::rngs::StdRng::seed_from_u64(17);
    for _ in 0..50 {
        let x: u64 = rng.gen_range(1..=20_000_000);
        let values: Vec<i64> = oracles.iter().map(|o| o.mertens(x).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[0] == w[1]), "x = {x}: {values:?}");
    }
}

#[test]
fn cache_file_round_trip_answers_from_memo() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("memo.bin");
    let o = MertensOracle::new(10_000).unwrap();
    let x = 30_000_000;
    let value = o.mertens(x).unwrap();
    o.save_cache(&path).unwrap();

    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], CACHE_MAGIC);
    let contents = CacheContents::parse(&bytes).unwrap();
    assert_eq!(contents.entries.len() as u64, o.stats().memo_len);

    let loaded = MertensOracle::load_cache(&path).unwrap();
    assert_eq!(loaded.threshold(), 10_000);
    assert_eq!(loaded.mertens(x).unwrap(), value);
    let stats = loaded.stats();
    assert_eq!(stats.computed, 0);
    assert_eq!(stats.memo_hits, 1);

    let dense = MertensTable::build(x, &SieveConfig::default()).unwrap();
    assert_eq!(dense.get(x), value);
}

#[test]
fn corrupted_cache_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("memo.bin");
    let o = MertensOracle::new(1_000).unwrap();
    o.mertens(5_000_000).unwrap();
    o.save_cache(&path).unwrap();
    let good = std::fs::read(&path).unwrap();

    let mut flipped = good.clone();
    flipped[30] ^= 1;
    let mut truncated = good.clone();
    truncated.truncate(good.len() - 5);
    let mut magic = good.clone();
    magic[0] = b'X';
    for bad in [flipped, truncated, magic, Vec::new()] {
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(MertensOracle::load_cache(&path), Err(Error::CorruptCache(_))));
    }
    assert!(matches!(
        MertensOracle::load_cache(dir.path().join("missing")),
        Err(Error::Io(_))
    ));
}

#[test]
fn concurrent_queries_agree() {
    let o = Arc::new(MertensOracle::new(1_000).unwrap());
    let xs = [10_000_000u64, 12_345_678, 10_000_000, 9_999_999];
    let handles: Vec<_> = xs
        .iter()
        .map(|&x| {
            let o = Arc::clone(&o);
            std::thread::spawn(move || (x, o.mertens(x).unwrap()))
        })
        .collect();
    let dense = MertensTable::build(12_345_678, &SieveConfig::default()).unwrap();
    for h in handles {
        let (x, v) = h.join().unwrap();
        assert_eq!(v, dense.get(x), "x = {x}");
    }
}

#[test]
fn rejects_zero() {
    let o = MertensOracle::new(100).unwrap();
    assert!(matches!(o.mertens(0), Err(Error::Domain(_))));
}
