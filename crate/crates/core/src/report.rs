//! Machine-readable verification reports.

use std::io::{Read, Write};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{parse_rational, Margin, Rational};
use crate::par::Execution;

pub const SIGNIFICANT_DIGITS: u32 = 12;

pub const CSV_HEADER: &str = "claim_id,n,lambda,pass,margin,exact,micros";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub claim_id: String,
    pub n: Option<u64>,
    /// `p/q`, or absent for claims that do not depend on λ.
    pub lambda: Option<String>,
    pub pass: bool,
    /// Decimal rendering truncated to 12 significant digits.
    pub margin: String,
    /// Whether `margin` equals the underlying quantity exactly.
    pub exact: bool,
    pub micros: u64,
}

impl ClaimRecord {
    pub fn new(claim_id: &str, n: Option<u64>, lambda: Option<String>, pass: bool, margin: Decimal) -> Self {
        ClaimRecord {
            claim_id: claim_id.to_string(),
            n,
            lambda,
            pass,
            margin: margin.text,
            exact: margin.exact,
            micros: 0,
        }
    }

    pub fn with_micros(mut self, micros: u64) -> Self {
        self.micros = micros;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub suite: String,
    pub n_min: u64,
    pub n_max: u64,
    pub grid: u64,
    pub lambdas: Vec<String>,
    pub threshold: u64,
    /// How the real cut points n/2 and 9n/10 are turned into index sets.
    pub boundary_convention: String,
    pub g_samples: u64,
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub version: String,
    pub timestamp: String,
    pub config: ReportConfig,
    pub claims: Vec<ClaimRecord>,
}

/// Key tuple shared by the JSON and CSV renderings.
pub type ClaimKey = (String, Option<u64>, Option<String>, bool);

impl VerificationReport {
    pub fn new(config: ReportConfig, mut claims: Vec<ClaimRecord>) -> Self {
        sort_claims(&mut claims);
        VerificationReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config,
            claims,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ClaimRecord> {
        self.claims.iter().filter(|c| !c.pass)
    }

    /// `(claim_id, n, lambda)` triples that occur more than once.
    pub fn duplicate_keys(&self) -> Vec<(String, Option<u64>, Option<String>)> {
        let mut seen = std::collections::HashSet::new();
        self.claims
            .iter()
            .map(|c| (c.claim_id.clone(), c.n, c.lambda.clone()))
            .filter(|k| !seen.insert(k.clone()))
            .collect()
    }

    pub fn keys(&self) -> Vec<ClaimKey> {
        self.claims
            .iter()
            .map(|c| (c.claim_id.clone(), c.n, c.lambda.clone(), c.pass))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.claims {
            w.serialize(c)?;
        }
        if self.claims.is_empty() {
            w.write_record(CSV_HEADER.split(','))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Reads the claim rows of a CSV rendering.
pub fn claims_from_csv<R: Read>(input: R) -> Result<Vec<ClaimRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize().map(|row| Ok(row?)).collect()
}

/// Orders by claim id, then `n`, then λ by numeric value.
pub fn sort_claims(claims: &mut [ClaimRecord]) {
    claims.sort_by_cached_key(|c| {
        let lam: Option<Rational> = c.lambda.as_deref().and_then(|s| parse_rational(s).ok());
        (c.claim_id.clone(), c.n, lam, c.lambda.clone())
    });
}

/// A number rendered for a report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decimal {
    pub text: String,
    pub exact: bool,
}

impl Decimal {
    pub fn from_margin(m: &Margin) -> Self {
        render_fraction(&m.numer, &m.denom)
    }

    pub fn from_rational(r: &Rational) -> Self {
        render_fraction(r.numer(), r.denom())
    }

    pub fn from_integer(v: impl Into<BigInt>) -> Self {
        render_fraction(&v.into(), &BigInt::from(1))
    }

    /// A float margin; never marked exact.
    pub fn from_f64(v: f64) -> Self {
        let text = match Rational::from_float(v) {
            Some(r) => Self::from_rational(&r).text,
            None => format!("{v}"),
        };
        Decimal { text, exact: false }
    }
}

/// Renders `numer/denom` (with `denom > 0`) truncated toward zero to 12
/// significant digits. Plain notation for decimal exponents in `-6..=14`,
/// scientific otherwise.
pub fn render_fraction(numer: &BigInt, denom: &BigInt) -> Decimal {
    assert!(denom.is_positive(), "denominator must be positive");
    if numer.is_zero() {
        return Decimal {
            text: "0".into(),
            exact: true,
        };
    }
    let negative = numer.sign() == Sign::Minus;
    let a = numer.abs();
    let b = denom;
    let digits = SIGNIFICANT_DIGITS as i64;
    let ten = BigInt::from(10u32);
    let lo = num_traits::pow(ten.clone(), (digits - 1) as usize);
    let hi = &lo * &ten;

    // Estimate of floor(log10(a/b)), off by at most one or two.
    let mut exp = ((a.bits() as f64 - b.bits() as f64) * std::f64::consts::LOG10_2).floor() as i64;
    let scaled = |exp: i64| -> (BigInt, bool) {
        let shift = digits - 1 - exp;
        let (q, r) = if shift >= 0 {
            (&a * num_traits::pow(ten.clone(), shift as usize)).div_rem(b)
        } else {
            a.div_rem(&(b * num_traits::pow(ten.clone(), (-shift) as usize)))
        };
        (q, r.is_zero())
    };
    let (mut s, mut rem_zero) = scaled(exp);
    while s >= hi {
        exp += 1;
        (s, rem_zero) = scaled(exp);
    }
    while s < lo {
        exp -= 1;
        (s, rem_zero) = scaled(exp);
    }

    let raw = s.to_string();
    debug_assert_eq!(raw.len() as i64, digits);
    let trimmed = raw.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    let text = if (-6..=14).contains(&exp) {
        if exp >= digits - 1 {
            format!("{sign}{raw}{}", "0".repeat((exp - (digits - 1)) as usize))
        } else if exp >= 0 {
            let (int, frac) = raw.split_at(exp as usize + 1);
            let frac = frac.trim_end_matches('0');
            if frac.is_empty() {
                format!("{sign}{int}")
            } else {
                format!("{sign}{int}.{frac}")
            }
        } else {
            format!("{sign}0.{}{}", "0".repeat((-exp - 1) as usize), trimmed)
        }
    } else {
        let (lead, rest) = trimmed.split_at(1);
        if rest.is_empty() {
            format!("{sign}{lead}e{exp}")
        } else {
            format!("{sign}{lead}.{rest}e{exp}")
        }
    };
    Decimal {
        text,
        exact: rem_zero,
    }
}
