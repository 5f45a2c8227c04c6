//! Critical values from the Rademacher null distribution of the two-sided
//! statistic, with a small append-only table file as cache.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, BandError, Result};
use crate::multiscale::{MultiscaleStat, Sign, WindowSums};

/// Replicate count used unless a caller asks otherwise.
pub const DEFAULT_N_SIMS: usize = 19_999;

/// Stored critical values are rounded up to this grid.
const KAPPA_SCALE: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaRequest {
    pub n: usize,
    pub alpha: f64,
    pub n_sims: usize,
    pub seed: u64,
}

impl KappaRequest {
    pub fn new(n: usize, alpha: f64, n_sims: usize, seed: u64) -> Result<Self> {
        let req = Self { n, alpha, n_sims, seed };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MultiscaleStat::MAX_N {
            return invalid(format!("sample size {} outside 1..={}", self.n, MultiscaleStat::MAX_N));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if self.n_sims == 0 {
            return invalid("n_sims must be at least 1");
        }
        Ok(())
    }
}

/// Generator for replicate `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn rademacher_into(rng: &mut ChaCha8Rng, out: &mut [Sign]) {
    for chunk in out.chunks_mut(64) {
        let bits = rng.next_u64();
        for (b, s) in chunk.iter_mut().enumerate() {
            *s = if (bits >> b) & 1 == 1 { 1 } else { -1 };
        }
    }
}

/// Sorted values of the two-sided statistic for `n_sims` Rademacher vectors.
pub fn simulate_null_sample(n: usize, n_sims: usize, seed: u64) -> Result<Vec<f64>> {
    if n_sims == 0 {
        return invalid("n_sims must be at least 1");
    }
    let stat = MultiscaleStat::new(n)?;
    let mut sample: Vec<f64> = (0..n_sims as u64)
        .into_par_iter()
        .map_init(
            || (vec![0 as Sign; n], WindowSums::default()),
            |(xi, ws), r| {
                let mut rng = substream(seed, r);
                rademacher_into(&mut rng, xi);
                stat.rademacher_t_with(xi, ws)
            },
        )
        .collect();
    sample.sort_by(f64::total_cmp);
    Ok(sample)
}

/// Order statistic of rank `ceil((1 - alpha) N)` of a sorted sample.
pub fn kappa_from_sample(sample: &[f64], alpha: f64) -> Result<f64> {
    if sample.is_empty() {
        return invalid("empty null sample");
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("alpha {alpha} outside (0, 1)"));
    }
    let n = sample.len();
    let rank = (((1.0 - alpha) * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Ok(sample[rank - 1])
}

/// Round up to the table grid; the result prints and parses back exactly.
pub fn quantize_kappa(kappa: f64) -> f64 {
    (kappa * KAPPA_SCALE).ceil() / KAPPA_SCALE
}

/// Simulate and quantise without touching any table.
pub fn compute_kappa(req: &KappaRequest) -> Result<f64> {
    req.validate()?;
    let sample = simulate_null_sample(req.n, req.n_sims, req.seed)?;
    Ok(quantize_kappa(kappa_from_sample(&sample, req.alpha)?))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaRecord {
    pub n: usize,
    pub alpha: f64,
    pub kappa: f64,
    pub n_sims: usize,
    pub seed: u64,
}

impl KappaRecord {
    fn key(&self) -> (usize, u64, usize, u64) {
        (self.n, self.alpha.to_bits(), self.n_sims, self.seed)
    }

    fn to_line(self) -> String {
        format!("{},{},{:.6},{},{}", self.n, self.alpha, self.kappa, self.n_sims, self.seed)
    }

    fn parse(line: &str, lineno: usize) -> Result<Self> {
        let err = |message: String| BandError::Parse { line: lineno, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let n = fields[0].parse().map_err(|e| err(format!("n: {e}")))?;
        let alpha = fields[1].parse().map_err(|e| err(format!("alpha: {e}")))?;
        let kappa = fields[2].parse().map_err(|e| err(format!("kappa: {e}")))?;
        let n_sims = fields[3].parse().map_err(|e| err(format!("n_sims: {e}")))?;
        let seed = fields[4].parse().map_err(|e| err(format!("seed: {e}")))?;
        Ok(Self { n, alpha, kappa, n_sims, seed })
    }
}

/// Critical value cache, optionally backed by a file.
///
/// The file holds one `n,alpha,kappa,n_sims,seed` record per line and is
/// only ever appended to; when a key repeats, the later record wins.
#[derive(Debug, Default)]
pub struct KappaTable {
    path: Option<PathBuf>,
    records: BTreeMap<(usize, u64, usize, u64), KappaRecord>,
}

impl KappaTable {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Load `path` if it exists; new records are appended to it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut table = Self { path: Some(path.clone()), records: BTreeMap::new() };
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                let rec = KappaRecord::parse(trimmed, i + 1)?;
                table.records.insert(rec.key(), rec);
            }
        }
        Ok(table)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn records(&self) -> impl Iterator<Item = &KappaRecord> {
        self.records.values()
    }

    pub fn lookup(&self, req: &KappaRequest) -> Option<f64> {
        let key = (req.n, req.alpha.to_bits(), req.n_sims, req.seed);
        self.records.get(&key).map(|r| r.kappa)
    }

    pub fn insert(&mut self, rec: KappaRecord) -> Result<()> {
        if let Some(path) = &self.path {
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(f, "{}", rec.to_line())?;
        }
        self.records.insert(rec.key(), rec);
        Ok(())
    }

    /// Linear interpolation in `log n` between the nearest tabulated sizes
    /// with the same `alpha`, `n_sims` and `seed`.
    pub fn interpolate_log_n(&self, req: &KappaRequest) -> Option<f64> {
        if let Some(v) = self.lookup(req) {
            return Some(v);
        }
        let same = self
            .records
            .values()
            .filter(|r| r.alpha.to_bits() == req.alpha.to_bits() && r.n_sims == req.n_sims && r.seed == req.seed);
        let mut below: Option<&KappaRecord> = None;
        let mut above: Option<&KappaRecord> = None;
        for r in same {
            if r.n < req.n && below.is_none_or(|b| r.n > b.n) {
                below = Some(r);
            }
            if r.n > req.n && above.is_none_or(|a| r.n < a.n) {
                above = Some(r);
            }
        }
        let (lo, hi) = (below?, above?);
        let t = ((req.n as f64).ln() - (lo.n as f64).ln()) / ((hi.n as f64).ln() - (lo.n as f64).ln());
        Some(lo.kappa + t * (hi.kappa - lo.kappa))
    }
}

/// Cached critical value for `req`, simulating and storing it when missing.
pub fn get_kappa(table: &mut KappaTable, req: &KappaRequest) -> Result<f64> {
    req.validate()?;
    if let Some(k) = table.lookup(req) {
        return Ok(k);
    }
    let kappa = compute_kappa(req)?;
    table.insert(KappaRecord {
        n: req.n,
        alpha: req.alpha,
        kappa,
        n_sims: req.n_sims,
        seed: req.seed,
    })?;
    Ok(kappa)
}
