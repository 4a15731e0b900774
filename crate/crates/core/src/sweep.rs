//! Claim sweeps over ranges of `n`, and the engine benchmark.

use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::audit::{
    b4_of, check_chain, check_g, check_interior_sum, check_small_n, check_totient_bound,
    default_small_n_lambdas, partition_of, sum_decomposition, tail_of, LARGE_BRANCH_MIN_N,
    SMALL_BRANCH_MAX_N,
};
use crate::engine::{default_threshold, MertensOracle};
use crate::error::{Error, Result};
use crate::kernel::{
    bridge_sides, coefficients, expand_direct, linear_window_end, theorem2_for, DenominatorPowers,
    Rational, ScaledEvaluator,
};
use crate::par::Execution;
use crate::report::{ClaimRecord, Decimal, ReportConfig, VerificationReport};
use crate::sieve::{build_totient_with, check_sum_identity, SieveConfig};

/// Index sets use `j <= ⌊n/2⌋` and `j > ⌊9n/10⌋`.
pub const BOUNDARY_CONVENTION: &str = "floor";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Theorem1,
    Theorem2,
    Proof,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::Proof => "proof",
            Suite::All => "all",
        }
    }

    fn runs(self, part: Suite) -> bool {
        self == Suite::All || self == part
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem1" => Ok(Suite::Theorem1),
            "theorem2" => Ok(Suite::Theorem2),
            "proof" => Ok(Suite::Proof),
            "all" => Ok(Suite::All),
            other => Err(Error::Parse(format!("unknown suite {other:?}"))),
        }
    }
}

/// `1/10, 1/3, 1/2, 2/3, 9/10, 99/100`.
pub fn default_theorem2_lambdas() -> Vec<Rational> {
    [(1, 10), (1, 3), (1, 2), (2, 3), (9, 10), (99, 100)]
        .iter()
        .map(|&(p, q)| Rational::new(BigInt::from(p), BigInt::from(q)))
        .collect()
}

/// `1/3, 1/2, 2/3, 9/10`.
pub fn default_bridge_lambdas() -> Vec<Rational> {
    [(1, 3), (1, 2), (2, 3), (9, 10)]
        .iter()
        .map(|&(p, q)| Rational::new(BigInt::from(p), BigInt::from(q)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub suite: Suite,
    pub n_min: u64,
    pub n_max: u64,
    /// λ grid denominator for the positivity sweep and the power-form check.
    pub grid: u64,
    /// λ values for the weighted-sum checks.
    pub lambdas: Vec<Rational>,
    /// Dense-table ceiling; by default large enough to cover `n_max`.
    pub threshold: Option<u64>,
    pub g_samples: u64,
    /// Record per-claim elapsed time. Off gives byte-identical reports for
    /// identical configurations, apart from the timestamp.
    pub timing: bool,
    pub execution: Execution,
    pub sieve: SieveConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            suite: Suite::All,
            n_min: 2,
            n_max: 100,
            grid: 1000,
            lambdas: default_theorem2_lambdas(),
            threshold: None,
            g_samples: 10_000,
            timing: true,
            execution: Execution::default(),
            sieve: SieveConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < 2 {
            return Err(Error::domain(format!("n-min must be at least 2, got {}", self.n_min)));
        }
        if self.n_max < self.n_min {
            return Err(Error::domain(format!(
                "n-max ({}) is below n-min ({})",
                self.n_max, self.n_min
            )));
        }
        if self.grid == 0 {
            return Err(Error::domain("grid must be at least 1"));
        }
        if self.g_samples < 2 {
            return Err(Error::domain("g samples must be at least 2"));
        }
        for lam in &self.lambdas {
            if *lam <= Rational::zero() || *lam >= Rational::one() {
                return Err(Error::domain(format!("lambda {lam} is outside (0, 1)")));
            }
        }
        Ok(())
    }

    fn effective_threshold(&self) -> u64 {
        self.threshold
            .unwrap_or_else(|| default_threshold(self.n_max).max(self.n_max))
    }

    fn report_config(&self, threshold: u64) -> ReportConfig {
        ReportConfig {
            suite: self.suite.name().to_string(),
            n_min: self.n_min,
            n_max: self.n_max,
            grid: self.grid,
            lambdas: self.lambdas.iter().map(lambda_label).collect(),
            threshold,
            boundary_convention: BOUNDARY_CONVENTION.to_string(),
            g_samples: self.g_samples,
            execution: self.execution,
        }
    }
}

fn lambda_label(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

struct Timer {
    on: bool,
    start: Instant,
}

impl Timer {
    fn start(on: bool) -> Self {
        Timer {
            on,
            start: Instant::now(),
        }
    }

    /// Microseconds since the last call, and restarts.
    fn lap(&mut self) -> u64 {
        if !self.on {
            return 0;
        }
        let now = Instant::now();
        let us = now.duration_since(self.start).as_micros() as u64;
        self.start = now;
        us
    }
}

struct SweepContext<'a> {
    cfg: &'a SweepConfig,
    oracle: MertensOracle,
    totients: Option<crate::sieve::TotientTable>,
    grid_evaluators: Vec<ScaledEvaluator>,
    small_n_lambdas: Vec<Rational>,
    bridge_lambdas: Vec<Rational>,
}

/// Runs the configured claim suites over `n_min..=n_max`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let threshold = cfg.effective_threshold();
    let oracle = MertensOracle::with_config(threshold, cfg.sieve)?;
    let totients = if cfg.suite.runs(Suite::Proof) {
        Some(build_totient_with(cfg.n_max, &cfg.sieve)?)
    } else {
        None
    };
    let grid_evaluators = if cfg.suite.runs(Suite::Theorem1) {
        let max_len = cfg.n_max as usize + 1;
        let table = Arc::new(DenominatorPowers::new(BigInt::from(cfg.grid), max_len));
        (0..=cfg.grid)
            .map(|i| ScaledEvaluator::with_denominator_table(BigInt::from(i), table.clone(), max_len))
            .collect()
    } else {
        Vec::new()
    };
    let ctx = SweepContext {
        cfg,
        oracle,
        totients,
        grid_evaluators,
        small_n_lambdas: default_small_n_lambdas(),
        bridge_lambdas: default_bridge_lambdas(),
    };

    let per_n: Vec<Result<Vec<ClaimRecord>>> = cfg
        .execution
        .map_range(cfg.n_min, cfg.n_max, |n| ctx.claims_for(n));
    let mut claims = Vec::new();
    for batch in per_n {
        claims.extend(batch?);
    }
    if cfg.suite.runs(Suite::Proof) {
        let mut t = Timer::start(cfg.timing);
        let chk = check_g(cfg.g_samples, &[], 0)?;
        claims.push(
            ClaimRecord::new("g_function", None, None, chk.passes(), Decimal::from_f64(chk.min_g))
                .with_micros(t.lap()),
        );
    }
    Ok(VerificationReport::new(cfg.report_config(threshold), claims))
}

impl SweepContext<'_> {
    fn claims_for(&self, n: u64) -> Result<Vec<ClaimRecord>> {
        let suite = self.cfg.suite;
        let mut out = Vec::new();
        let mut t = Timer::start(self.cfg.timing);
        let cv = coefficients(&self.oracle, n)?;
        let setup = t.lap();
        let some_n = Some(n);

        if suite.runs(Suite::Theorem1) {
            let q = self.cfg.grid;
            for (i, ev) in self.grid_evaluators.iter().enumerate() {
                let value = ev.value(cv.coefficients());
                let excess = crate::kernel::Margin::new(
                    &value.numer - ev.num_pow(n as usize),
                    value.denom.clone(),
                );
                let label = Some(format!("{i}/{q}"));
                let value_pass = if i == 0 {
                    value.numer.is_zero()
                } else {
                    value.numer > BigInt::zero()
                };
                let us = t.lap();
                out.push(
                    ClaimRecord::new("theorem1", some_n, label.clone(), value_pass, Decimal::from_margin(&value))
                        .with_micros(us),
                );
                out.push(
                    ClaimRecord::new(
                        "power_bound",
                        some_n,
                        label,
                        excess.numer >= BigInt::zero(),
                        Decimal::from_margin(&excess),
                    )
                    .with_micros(us),
                );
            }
        }

        if suite.runs(Suite::Theorem2) {
            for lam in &self.cfg.lambdas {
                let outcome = theorem2_for(&cv, lam);
                let us = t.lap();
                let label = Some(lambda_label(lam));
                out.push(
                    ClaimRecord::new("theorem2", some_n, label.clone(), outcome.holds, Decimal::from_margin(&outcome.margin))
                        .with_micros(us),
                );
                out.push(
                    ClaimRecord::new(
                        "theorem2_strong",
                        some_n,
                        label,
                        outcome.strong_holds,
                        Decimal::from_margin(&outcome.strong_margin),
                    )
                    .with_micros(us),
                );
            }
        }

        if suite.runs(Suite::Proof) {
            self.proof_claims(n, &cv, &mut out, &mut t)?;
        }

        if suite == Suite::All {
            self.identity_claims(n, &cv, &mut out, &mut t)?;
        }

        if let Some(first) = out.first_mut() {
            first.micros += setup;
        }
        Ok(out)
    }

    fn proof_claims(
        &self,
        n: u64,
        cv: &crate::kernel::CoefficientVector,
        out: &mut Vec<ClaimRecord>,
        t: &mut Timer,
    ) -> Result<()> {
        let some_n = Some(n);
        let m = n - 1;
        let totients = self.totients.as_ref().expect("totient table is built for proof sweeps");
        let mut push = |id: &str, pass: bool, margin: Decimal, t: &mut Timer| {
            out.push(ClaimRecord::new(id, some_n, None, pass, margin).with_micros(t.lap()));
        };

        let partition = partition_of(cv);
        push(
            "partition_total",
            partition.signed_total() == cv.interior_sum() && partition.sizes.iter().sum::<u64>() == m,
            Decimal::from_integer(partition.signed_total()),
            t,
        );

        let decomposition = sum_decomposition(&self.oracle, totients, m)?;
        push(
            "sum_decomposition",
            decomposition.parts.combined() == cv.interior_sum(),
            Decimal::from_integer(decomposition.parts.combined()),
            t,
        );
        push(
            "totient_identity",
            decomposition.totient_identity,
            Decimal::from_integer(decomposition.parts.s1 - decomposition.totient_sum as i128),
            t,
        );
        push(
            "s2_s3_bounds",
            decomposition.s2_is_mertens && decomposition.s3_bound,
            Decimal::from_f64(decomposition.s3_margin),
            t,
        );

        let chain = check_chain(cv);
        if let Some(margin) = chain.fifth_margin {
            push("chain_fifth", margin >= 0, Decimal::from_integer(margin), t);
        }
        if let (Some(margin), Some(min)) = (chain.tenth_margin, chain.window_min) {
            push("chain_tenth", margin >= 0, Decimal::from_integer(margin), t);
            push("nonnegative_window", min >= 0, Decimal::from_integer(min), t);
        }
        if n >= 3 {
            push("plateau", chain.plateau_holds, Decimal::from_integer(0), t);
        }

        if n <= SMALL_BRANCH_MAX_N {
            let small = check_small_n(&self.oracle, n, &self.small_n_lambdas)?;
            push("small_n_branch", small.passes(), Decimal::from_integer(0), t);
        }

        if n >= LARGE_BRANCH_MIN_N {
            let b4 = b4_of(&partition);
            push("b4_total_positive", b4.total_positive, Decimal::from_integer(b4.total_margin), t);
            push("b4_four_a_exceeds_d", b4.four_a_exceeds_d, Decimal::from_integer(b4.four_a_margin), t);
            push(
                "a_lower_bound",
                b4.a_bound_holds,
                Decimal::from_rational(&Rational::new(b4.a_bound_margin.into(), 8.into())),
                t,
            );

            let tail = tail_of(&partition);
            push(
                "tail_log_bound",
                tail.within_log_bound,
                Decimal::from_f64(tail.log_bound - tail.d as f64),
                t,
            );
            let nn = (n as i128) * (n as i128);
            push(
                "tail_0342",
                tail.within_0342 && tail.below_half_quadratic,
                Decimal::from_rational(&Rational::new((342 * nn - 1000 * tail.d).into(), 1000.into())),
                t,
            );

            let interior = check_interior_sum(cv);
            push(
                "interior_sum_bound",
                interior.bound_holds && interior.rhs_positive,
                Decimal::from_f64(interior.interior_sum as f64 - interior.rhs),
                t,
            );

            let power = check_g(2, &[n], self.cfg.grid)?;
            push(
                "b4_power_form",
                power.power_form_holds,
                Decimal::from_f64(power.power_form_min),
                t,
            );
        }

        if m >= 94 {
            let bound = check_totient_bound(totients, m)?;
            push("totient_bound", bound.holds, Decimal::from_f64(bound.margin), t);
        }
        let bound = check_totient_bound(totients, m)?;
        push(
            "totient_bound_sharp",
            bound.sharp_holds,
            Decimal::from_f64(bound.totient_sum as f64 - bound.sharp_rhs),
            t,
        );
        Ok(())
    }

    fn identity_claims(
        &self,
        n: u64,
        cv: &crate::kernel::CoefficientVector,
        out: &mut Vec<ClaimRecord>,
        t: &mut Timer,
    ) -> Result<()> {
        let some_n = Some(n);
        let identity = if n <= self.oracle.threshold() {
            check_sum_identity(self.oracle.dense(), n)?
        } else {
            let mut acc = 0i128;
            for b in crate::quotient::quotient_blocks(n) {
                acc += b.len() as i128 * self.oracle.mertens(b.quotient)? as i128;
            }
            acc == 1
        };
        out.push(ClaimRecord::new("eq8_identity", some_n, None, identity, Decimal::from_integer(0)).with_micros(t.lap()));

        let direct = expand_direct(&self.oracle, n)?;
        out.push(
            ClaimRecord::new(
                "coefficient_expansion",
                some_n,
                None,
                direct.coefficients() == cv.coefficients(),
                Decimal::from_integer(0),
            )
            .with_micros(t.lap()),
        );
        out.push(
            ClaimRecord::new("complement_form", some_n, None, cv.complement_form_holds(), Decimal::from_integer(0))
                .with_micros(t.lap()),
        );
        let window = (2..=linear_window_end(n)).all(|j| cv.d(j) == j as i64 - 1);
        out.push(
            ClaimRecord::new("linear_window", some_n, None, window, Decimal::from_integer(0)).with_micros(t.lap()),
        );
        for lam in &self.bridge_lambdas {
            let (lhs, rhs) = bridge_sides(cv, lam)?;
            out.push(
                ClaimRecord::new(
                    "bridge_identity",
                    some_n,
                    Some(lambda_label(lam)),
                    lhs == rhs,
                    Decimal::from_rational(&(lhs - rhs)),
                )
                .with_micros(t.lap()),
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub xs: Vec<u64>,
    pub thresholds: Vec<u64>,
    /// Values of `x` up to this bound are also checked against a full sieve.
    pub sieve_check_max: u64,
    pub sieve: SieveConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            xs: vec![1_000_000, 10_000_000, 100_000_000, 1_000_000_000],
            thresholds: vec![10_000, 100_000, 1_000_000],
            sieve_check_max: 10_000_000,
            sieve: SieveConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub x: u64,
    pub threshold: u64,
    pub value: i64,
    /// Dense-table construction time.
    pub setup_micros: u64,
    pub query_micros: u64,
}

/// Times `M(x)` at each threshold with a fresh oracle, failing unless every
/// strategy agrees on every `x`.
pub fn bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.xs.is_empty() || cfg.thresholds.is_empty() {
        return Err(Error::domain("bench needs at least one x and one threshold"));
    }
    if let Some(&bad) = cfg.xs.iter().find(|&&x| x == 0) {
        return Err(Error::domain(format!("x must be positive, got {bad}")));
    }
    let mut rows = Vec::new();
    for &x in &cfg.xs {
        let mut values = Vec::new();
        for &t in &cfg.thresholds {
            let start = Instant::now();
            let oracle = MertensOracle::with_config(t, cfg.sieve)?;
            let setup = start.elapsed().as_micros() as u64;
            let start = Instant::now();
            let value = oracle.mertens(x)?;
            let query = start.elapsed().as_micros() as u64;
            values.push(value);
            rows.push(BenchRow {
                x,
                threshold: t,
                value,
                setup_micros: setup,
                query_micros: query,
            });
        }
        if values.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Inconsistent(format!("thresholds disagree on M({x}): {values:?}")));
        }
        if x <= cfg.sieve_check_max {
            let dense = crate::sieve::MertensTable::build(x, &cfg.sieve)?;
            if dense.get(x) != values[0] {
                return Err(Error::Inconsistent(format!(
                    "engine gives M({x}) = {}, sieve gives {}",
                    values[0],
                    dense.get(x)
                )));
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_ranges() {
        let cfg = SweepConfig {
            n_min: 0,
            ..SweepConfig::default()
        };
        assert!(matches!(run_sweep(&cfg), Err(Error::Domain(_))));
        let cfg = SweepConfig {
            n_min: 10,
            n_max: 9,
            ..SweepConfig::default()
        };
        assert!(run_sweep(&cfg).is_err());
        let cfg = SweepConfig {
            lambdas: vec![Rational::one()],
            ..SweepConfig::default()
        };
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn small_all_sweep_passes_without_duplicates() {
        let cfg = SweepConfig {
            n_min: 2,
            n_max: 120,
            grid: 20,
            g_samples: 1000,
            ..SweepConfig::default()
        };
        let report = run_sweep(&cfg).unwrap();
        // At n = 2 both sides of the strengthened form equal λ^2, so the
        // strict inequality fails there and nowhere else.
        let failed: Vec<_> = report
            .failures()
            .map(|c| (c.claim_id.as_str(), c.n, c.margin.as_str()))
            .collect();
        assert_eq!(failed.len(), cfg.lambdas.len(), "{failed:?}");
        assert!(failed.iter().all(|f| *f == ("theorem2_strong", Some(2), "0")), "{failed:?}");
        assert!(report.duplicate_keys().is_empty());
        for id in ["theorem1", "power_bound", "theorem2", "small_n_branch", "b4_four_a_exceeds_d", "g_function", "bridge_identity"] {
            assert!(report.claims.iter().any(|c| c.claim_id == id), "{id}");
        }
    }

    #[test]
    fn bench_agrees() {
        let cfg = BenchConfig {
            xs: vec![100_000, 1_000_000],
            thresholds: vec![1000, 10_000, 100_000],
            ..BenchConfig::default()
        };
        let rows = bench(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(bench(&BenchConfig { xs: vec![0], ..cfg.clone() }).is_err());
        assert!(bench(&BenchConfig { xs: vec![], ..cfg }).is_err());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::Theorem1, Suite::Theorem2, Suite::Proof, Suite::All] {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }
}
