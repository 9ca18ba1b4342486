use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::seeded_rng;

/// Tabulated `f : {0..2^n} → {0..2^m}` with period `r` whose values are
/// pairwise distinct within one period.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFunction", into = "RawFunction")]
pub struct PeriodicFunction {
    n: u32,
    m: u32,
    r: usize,
    table: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawFunction {
    n: u32,
    m: u32,
    r: usize,
    table: Vec<u64>,
}

impl TryFrom<RawFunction> for PeriodicFunction {
    type Error = Error;

    fn try_from(raw: RawFunction) -> Result<Self> {
        PeriodicFunction::new(raw.n, raw.m, raw.r, raw.table)
    }
}

impl From<PeriodicFunction> for RawFunction {
    fn from(f: PeriodicFunction) -> Self {
        RawFunction {
            n: f.n,
            m: f.m,
            r: f.r,
            table: f.table,
        }
    }
}

impl PeriodicFunction {
    pub fn new(n: u32, m: u32, r: usize, table: Vec<u64>) -> Result<Self> {
        let f = PeriodicFunction { n, m, r, table };
        f.validate()?;
        Ok(f)
    }

    /// `f(x) = x mod r` on `n` qubits, with `F` as wide as `X`.
    pub fn canonical(n: u32, r: usize) -> Result<Self> {
        let domain = 1usize << n;
        Self::new(n, n, r, (0..domain).map(|x| (x % r.max(1)) as u64).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.n > 20 || self.m > 20 {
            return Err(Error::InvalidArgument(format!(
                "register widths n = {}, m = {} out of range",
                self.n, self.m
            )));
        }
        let domain = 1usize << self.n;
        let codomain = 1u64 << self.m;
        if self.r == 0 || self.r > domain {
            return Err(Error::InvalidArgument(format!(
                "period {} outside 1..={domain}",
                self.r
            )));
        }
        if self.table.len() != domain {
            return Err(Error::InvalidArgument(format!(
                "table has {} entries, expected {domain}",
                self.table.len()
            )));
        }
        if let Some(x) = self.table.iter().position(|&v| v >= codomain) {
            return Err(Error::InvalidArgument(format!(
                "f({x}) = {} does not fit in {} qubits",
                self.table[x], self.m
            )));
        }
        for x in self.r..domain {
            if self.table[x] != self.table[x % self.r] {
                return Err(Error::InvalidArgument(format!(
                    "f({x}) != f({}) although the period is {}",
                    x % self.r,
                    self.r
                )));
            }
        }
        let mut first_period = self.table[..self.r].to_vec();
        first_period.sort_unstable();
        if first_period.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("values repeat within one period".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn period(&self) -> usize {
        self.r
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    pub fn domain_size(&self) -> usize {
        self.table.len()
    }

    #[inline]
    pub fn eval(&self, x: usize) -> u64 {
        self.table[x]
    }
}

/// Random periodic function: `r` distinct values drawn from `0..2^m`,
/// repeated across the domain.
pub fn generate_periodic_function(n: u32, m: u32, r: usize, seed: u64) -> Result<PeriodicFunction> {
    if n == 0 || m == 0 || n > 20 || m > 20 {
        return Err(Error::InvalidArgument(format!(
            "register widths n = {n}, m = {m} out of range"
        )));
    }
    let domain = 1usize << n;
    let codomain = 1usize << m;
    if r == 0 || r > domain {
        return Err(Error::InvalidArgument(format!("period {r} outside 1..={domain}")));
    }
    if r > codomain {
        return Err(Error::InvalidArgument(format!(
            "period {r} needs {r} distinct values but F has only {codomain}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let values: Vec<u64> = sample(&mut rng, codomain, r).into_iter().map(|v| v as u64).collect();
    let table = (0..domain).map(|x| values[x % r]).collect();
    PeriodicFunction::new(n, m, r, table)
}
