//! Incremental multiscale scan over a decreasing chain of sign vectors.
//!
//! Given `sigma(0) >= sigma(1) >= ... >= sigma(q)`, where consecutive vectors
//! differ by one `+1 -> -1` flip, the scan finds the first index whose
//! statistic is at most `kappa`. The scale only ever grows: a flip lowers
//! every local statistic, so scales already passed stay passed. Each
//! induction step either raises the scale or consumes a flip, giving at most
//! `n + q + 1` steps of `O(n)` work.

use crate::error::{invalid, Result};
use crate::multiscale::{MultiscaleStat, Sign, SignVector, WindowSums};

/// Initial sign vector plus the indices flipped from `+1` to `-1`, in order.
#[derive(Clone, Debug)]
pub struct FlipChain {
    sigma0: SignVector,
    flips: Vec<usize>,
}

impl FlipChain {
    pub fn new(sigma0: SignVector, flips: Vec<usize>) -> Result<Self> {
        let n = sigma0.len();
        let mut seen = vec![false; n];
        for &w in &flips {
            if w >= n {
                return invalid(format!("flip index {w} outside 0..{n}"));
            }
            if seen[w] {
                return invalid(format!("flip index {w} repeated"));
            }
            if sigma0.as_slice()[w] != 1 {
                return invalid(format!("flip index {w} addresses a -1 entry"));
            }
            seen[w] = true;
        }
        Ok(Self { sigma0, flips })
    }

    pub fn sigma0(&self) -> &SignVector {
        &self.sigma0
    }

    pub fn flips(&self) -> &[usize] {
        &self.flips
    }

    /// The `ell`-th vector of the chain, built from scratch.
    pub fn sigma_at(&self, ell: usize) -> SignVector {
        let mut s = self.sigma0.as_slice().to_vec();
        for &w in &self.flips[..ell] {
            s[w] = -1;
        }
        SignVector::new(s).expect("flips keep entries in {-1, 1}")
    }
}

/// Snapshot of a scan: current vector, window sums, scale and flips consumed.
#[derive(Clone, Debug)]
pub struct ScanState {
    pub signs: Vec<Sign>,
    pub s0: Vec<i32>,
    pub s1: Vec<i32>,
    pub d: usize,
    pub ell: usize,
}

/// Outcome of [`scan`].
#[derive(Clone, Debug)]
pub struct ScanOutcome {
    /// `Some(ell)` for the first accepted vector, `None` if even the last fails.
    pub ell_star: Option<usize>,
    pub steps: usize,
    pub state: ScanState,
}

/// Resumable scanner for a fixed threshold `kappa`. Callers push flips and
/// ask whether the current vector passes; the scale is kept between calls.
///
/// Alongside the window sums the scanner keeps the number of locations
/// whose `S1` exceeds the integer threshold of the current scale, so a
/// condition check costs `O(1)` and a flip `O(d)`.
#[derive(Clone, Debug)]
pub struct Scanner<'a> {
    stat: &'a MultiscaleStat,
    kappa: f64,
    signs: Vec<Sign>,
    sums: WindowSums,
    threshold: i32,
    violations: usize,
    ell: usize,
    steps: usize,
    accepted: bool,
}

impl<'a> Scanner<'a> {
    pub fn new(stat: &'a MultiscaleStat, sigma0: &[Sign], kappa: f64) -> Self {
        let mut sc = Self {
            stat,
            kappa,
            signs: Vec::with_capacity(sigma0.len()),
            sums: WindowSums::default(),
            threshold: 0,
            violations: 0,
            ell: 0,
            steps: 0,
            accepted: false,
        };
        sc.restart(sigma0);
        sc
    }

    /// Re-initialise with a new starting vector, reusing buffers.
    pub fn restart(&mut self, sigma0: &[Sign]) {
        debug_assert_eq!(sigma0.len(), self.stat.n());
        self.signs.clear();
        self.signs.extend_from_slice(sigma0);
        self.sums.reset(sigma0);
        self.recount();
        self.ell = 0;
        self.steps = 0;
        self.accepted = false;
    }

    fn recount(&mut self) {
        self.threshold = self.stat.s1_threshold(self.sums.d, self.kappa);
        let t = self.threshold;
        self.violations = self.sums.s1.iter().filter(|&&v| v > t).count();
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn scale(&self) -> usize {
        self.sums.d
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn flips(&self) -> usize {
        self.ell
    }

    /// Turn entry `w` from `+1` into `-1` at the current scale.
    pub fn flip(&mut self, w: usize) -> Result<()> {
        if self.signs.get(w) != Some(&1) {
            return invalid(format!("cannot flip entry {w}: not a +1"));
        }
        self.flip_unchecked(w);
        Ok(())
    }

    pub(crate) fn flip_unchecked(&mut self, w: usize) {
        debug_assert_eq!(self.signs[w], 1);
        self.signs[w] = -1;
        let n = self.signs.len();
        let d = self.sums.d;
        let t = self.threshold;
        let lo = (w + 1).saturating_sub(d);
        let hi = (w + d).min(n);
        let mut crossed = 0;
        let s0 = &mut self.sums.s0[lo..hi];
        let s1 = &mut self.sums.s1[lo..hi];
        for (k, (a, b)) in s0.iter_mut().zip(s1.iter_mut()).enumerate() {
            *a = a.wrapping_sub(2);
            let old = *b;
            let new = old.wrapping_sub(2 * (d - (lo + k).abs_diff(w)) as i32);
            *b = new;
            crossed += (old > t && new <= t) as usize;
        }
        self.violations -= crossed;
        self.ell += 1;
        self.accepted = false;
    }

    /// Condition at the current scale: `max_j T_{d,j} - Gamma((2d-1)/n) <= kappa`.
    pub fn condition(&self) -> bool {
        self.violations == 0
    }

    /// Run induction steps without flipping. Returns `true` once the
    /// condition holds at the largest scale (the current vector is accepted)
    /// and `false` as soon as it fails at some scale.
    pub fn settle(&mut self) -> bool {
        if self.accepted {
            return true;
        }
        let dmax = self.stat.max_scale();
        loop {
            self.steps += 1;
            if !self.condition() {
                return false;
            }
            if self.sums.d == dmax {
                self.accepted = true;
                return true;
            }
            self.threshold = self.stat.s1_threshold(self.sums.d + 1, self.kappa);
            self.violations = self.sums.grow_counting(&self.signs, self.threshold);
        }
    }

    pub fn is_accepted(&self) -> bool {
        self.accepted
    }

    pub fn state(&self) -> ScanState {
        ScanState {
            signs: self.signs.clone(),
            s0: self.sums.s0.clone(),
            s1: self.sums.s1.clone(),
            d: self.sums.d,
            ell: self.ell,
        }
    }
}

/// Smallest `ell` with `T_o(sigma(ell)) <= kappa`.
pub fn scan(chain: &FlipChain, kappa: f64) -> Result<ScanOutcome> {
    let stat = MultiscaleStat::new(chain.sigma0.len())?;
    scan_with(&stat, chain, kappa)
}

pub fn scan_with(stat: &MultiscaleStat, chain: &FlipChain, kappa: f64) -> Result<ScanOutcome> {
    if stat.n() != chain.sigma0.len() {
        return invalid("statistic and chain disagree on n");
    }
    let mut scanner = Scanner::new(stat, chain.sigma0.as_slice(), kappa);
    let mut ell_star = None;
    let mut next = 0;
    loop {
        if scanner.settle() {
            ell_star = Some(next);
            break;
        }
        match chain.flips.get(next) {
            Some(&w) => {
                scanner.flip_unchecked(w);
                next += 1;
            }
            None => break,
        }
    }
    Ok(ScanOutcome {
        ell_star,
        steps: scanner.steps,
        state: scanner.state(),
    })
}

/// Condition at the state's scale, evaluated from its `S1` vector.
pub fn scale_condition(stat: &MultiscaleStat, state: &ScanState, kappa: f64) -> bool {
    let max_s1 = state.s1.iter().copied().max().unwrap_or(i32::MIN);
    stat.excess(state.d, max_s1) <= kappa
}
