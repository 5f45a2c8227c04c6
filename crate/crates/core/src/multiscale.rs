//! Multiscale sign statistic.
//!
//! A sign vector is scored on every window `|i - j| < d` with triangular
//! weights `d - |i - j|`. Window sums are kept as integers; the only floating
//! point step is the normalisation in [`MultiscaleStat::excess`], which every
//! caller (direct evaluation and incremental scans alike) goes through, so
//! acceptance decisions agree bit for bit.

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// An entry of a sign vector, always `-1` or `+1`.
pub type Sign = i8;

/// Asymmetric sign: `+1` for `v > 0`, `-1` for `v <= 0` (including `-0.0`
/// and `-inf`).
pub fn underline_sign<F: Scalar>(v: F) -> Result<Sign> {
    if v.is_nan() {
        return invalid("sign of NaN is undefined");
    }
    Ok(if v > F::zero() { 1 } else { -1 })
}

/// Triangular kernel `max(1 - |x|, 0)`.
pub fn psi(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

/// `sum_{|i| < d} (d - |i|)^2`, which equals `(2d^2 + 1) d / 3`.
pub fn kernel_energy(d: usize) -> u64 {
    let d = d as u64;
    (2 * d * d + 1) * d / 3
}

/// Normaliser `beta_d` making the local statistic have unit variance in
/// the interior under Rademacher signs.
pub fn beta_coeff(d: usize) -> Result<f64> {
    if d < 1 {
        return invalid("scale d must be at least 1");
    }
    Ok(d as f64 / (kernel_energy(d) as f64).sqrt())
}

/// Multiscale penalty `sqrt(2 log(e / u))` for `u` in `(0, 1]`.
pub fn gamma_penalty(u: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) {
        return invalid(format!("penalty argument {u} outside (0, 1]"));
    }
    Ok((2.0 * (1.0 - u.ln())).sqrt())
}

/// Largest scale used for a sample of size `n`.
pub fn max_scale(n: usize) -> usize {
    (n + 1) / 2
}

/// A vector in `{-1, +1}^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<Sign>);

impl SignVector {
    pub fn new(values: Vec<Sign>) -> Result<Self> {
        if values.is_empty() {
            return invalid("sign vector must be non-empty");
        }
        if let Some(bad) = values.iter().find(|&&s| s != 1 && s != -1) {
            return invalid(format!("sign entry {bad} is not -1 or +1"));
        }
        Ok(Self(values))
    }

    pub fn constant(n: usize, sign: Sign) -> Result<Self> {
        Self::new(vec![sign; n])
    }

    /// Asymmetric signs of an extended-real vector.
    pub fn from_values<F: Scalar>(v: &[F]) -> Result<Self> {
        let signs = v.iter().map(|&x| underline_sign(x)).collect::<Result<Vec<_>>>()?;
        Self::new(signs)
    }

    pub fn as_slice(&self) -> &[Sign] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Sign> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise `self <= other`.
    pub fn is_dominated_by(&self, other: &SignVector) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

/// Scale `d >= 1` and zero-based location `j < n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScalePair {
    pub d: usize,
    pub j: usize,
}

impl ScalePair {
    pub fn new(d: usize, j: usize, n: usize) -> Result<Self> {
        if d < 1 || d > max_scale(n) {
            return invalid(format!("scale {d} outside 1..={}", max_scale(n)));
        }
        if j >= n {
            return invalid(format!("location {j} outside 0..{n}"));
        }
        Ok(Self { d, j })
    }
}

/// Running window sums for one sign vector at the current scale `d`.
///
/// `s0[j] = sum_{|i-j|<d} sigma_i` and `s1[j] = sum_{|i-j|<d} (d-|i-j|) sigma_i`.
#[derive(Clone, Debug, Default)]
pub(crate) struct WindowSums {
    pub d: usize,
    pub s0: Vec<i32>,
    pub s1: Vec<i32>,
}

impl WindowSums {
    pub fn reset(&mut self, sigma: &[Sign]) {
        self.d = 1;
        self.s0.clear();
        self.s0.extend(sigma.iter().map(|&s| s as i32));
        self.s1.clear();
        self.s1.extend_from_slice(&self.s0);
    }

    /// Move from scale `d` to `d + 1`.
    pub fn grow(&mut self, sigma: &[Sign]) {
        let n = sigma.len();
        let d = self.d;
        if d < n {
            for (a, &b) in self.s0[d..].iter_mut().zip(&sigma[..n - d]) {
                *a += b as i32;
            }
            for (a, &b) in self.s0[..n - d].iter_mut().zip(&sigma[d..]) {
                *a += b as i32;
            }
        }
        for (a, &b) in self.s1.iter_mut().zip(&self.s0) {
            *a += b;
        }
        self.d = d + 1;
    }

    /// [`Self::grow`] fused with counting the entries of the new `s1` above `t`.
    pub fn grow_counting(&mut self, sigma: &[Sign], t: i32) -> usize {
        let n = sigma.len();
        let d = self.d;
        if d < n {
            for (a, &b) in self.s0[d..].iter_mut().zip(&sigma[..n - d]) {
                *a = a.wrapping_add(b as i32);
            }
            for (a, &b) in self.s0[..n - d].iter_mut().zip(&sigma[d..]) {
                *a = a.wrapping_add(b as i32);
            }
        }
        let mut above = 0;
        for (a, &b) in self.s1.iter_mut().zip(&self.s0) {
            *a = a.wrapping_add(b);
            above += (*a > t) as usize;
        }
        self.d = d + 1;
        above
    }

    pub fn max_s1(&self) -> i32 {
        self.s1.iter().copied().max().unwrap_or(i32::MIN)
    }

    pub fn max_abs_s1(&self) -> i32 {
        self.s1.iter().map(|v| v.abs()).max().unwrap_or(0)
    }
}

/// Precomputed normalisers and penalties for a fixed sample size.
#[derive(Clone, Debug)]
pub struct MultiscaleStat {
    n: usize,
    norm: Vec<f64>,
    penalty: Vec<f64>,
}

impl MultiscaleStat {
    /// Window sums are 32-bit; `n` is limited so that `n * d` cannot overflow.
    pub const MAX_N: usize = 60_000;

    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("sample size must be at least 1");
        }
        if n > Self::MAX_N {
            return invalid(format!("sample size {n} exceeds {}", Self::MAX_N));
        }
        let dmax = max_scale(n);
        let norm = (1..=dmax).map(|d| (kernel_energy(d) as f64).sqrt()).collect();
        let penalty = (1..=dmax)
            .map(|d| gamma_penalty((2 * d - 1) as f64 / n as f64).expect("argument in (0,1]"))
            .collect();
        Ok(Self { n, norm, penalty })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_scale(&self) -> usize {
        self.norm.len()
    }

    pub fn penalty(&self, d: usize) -> f64 {
        self.penalty[d - 1]
    }

    /// `sqrt((2d^2+1) d / 3)`.
    pub fn norm(&self, d: usize) -> f64 {
        self.norm[d - 1]
    }

    /// Penalised maximum at scale `d` given `max_j S1[j]`.
    #[inline]
    pub fn excess(&self, d: usize, max_s1: i32) -> f64 {
        max_s1 as f64 / self.norm[d - 1] - self.penalty[d - 1]
    }

    /// Largest `m` with `excess(d, m) <= kappa`, clamped to the attainable
    /// range `[-d^2 - 1, d^2]` of window sums. Since `excess` is monotone in
    /// `m`, `max_j S1[j] <= threshold` decides the scale condition exactly
    /// as [`Self::excess`] does.
    pub fn s1_threshold(&self, d: usize, kappa: f64) -> i32 {
        let top = (d * d) as i64;
        let guess = ((kappa + self.penalty[d - 1]) * self.norm[d - 1]).floor();
        let mut m = if guess.is_nan() { -top - 1 } else { (guess.clamp(-(top as f64) - 1.0, top as f64)) as i64 };
        while m < top && self.excess(d, (m + 1) as i32) <= kappa {
            m += 1;
        }
        while m >= -top && self.excess(d, m as i32) > kappa {
            m -= 1;
        }
        m as i32
    }

    pub(crate) fn t_naught_with(&self, sigma: &[Sign], ws: &mut WindowSums) -> f64 {
        debug_assert_eq!(sigma.len(), self.n);
        ws.reset(sigma);
        let dmax = self.max_scale();
        let mut best = f64::NEG_INFINITY;
        for d in 1..=dmax {
            best = best.max(self.excess(d, ws.max_s1()));
            if d < dmax {
                ws.grow(sigma);
            }
        }
        best
    }

    /// One-sided statistic `T_o`. The slice must have length `n` and hold
    /// only `-1`/`+1`.
    pub fn t_naught(&self, sigma: &[Sign]) -> f64 {
        self.t_naught_with(sigma, &mut WindowSums::default())
    }

    /// Two-sided statistic of a Rademacher vector: since `sign(-xi) = -xi`
    /// both orientations come out of one pass via `max_j |S1[j]|`.
    pub(crate) fn rademacher_t_with(&self, xi: &[Sign], ws: &mut WindowSums) -> f64 {
        ws.reset(xi);
        let dmax = self.max_scale();
        let mut best = f64::NEG_INFINITY;
        for d in 1..=dmax {
            best = best.max(self.excess(d, ws.max_abs_s1()));
            if d < dmax {
                ws.grow(xi);
            }
        }
        best
    }

    /// Local statistic `T_{d,j}`.
    pub fn local_stat(&self, sigma: &[Sign], scale: ScalePair) -> f64 {
        let ScalePair { d, j } = scale;
        let lo = (j + 1).saturating_sub(d);
        let hi = (j + d).min(sigma.len());
        let s1: i64 = (lo..hi).map(|i| (d - i.abs_diff(j)) as i64 * sigma[i] as i64).sum();
        s1 as f64 / self.norm(d)
    }
}

/// `T_{d,j}(sigma)`.
pub fn local_stat(sigma: &SignVector, scale: ScalePair) -> Result<f64> {
    let n = sigma.len();
    let scale = ScalePair::new(scale.d, scale.j, n)?;
    Ok(MultiscaleStat::new(n)?.local_stat(sigma.as_slice(), scale))
}

/// `T_o(sigma)`: maximum over scales of the penalised largest local statistic.
pub fn t_naught(sigma: &SignVector) -> f64 {
    MultiscaleStat::new(sigma.len())
        .expect("sign vectors are non-empty")
        .t_naught(sigma.as_slice())
}

/// Two-sided statistic `max(T_o(sign(v)), T_o(sign(-v)))`.
pub fn t_two_sided<F: Scalar>(v: &[F]) -> Result<f64> {
    let pos = SignVector::from_values(v)?;
    let neg: Vec<Sign> = v.iter().map(|&x| if -x > F::zero() { 1 } else { -1 }).collect();
    let stat = MultiscaleStat::new(v.len())?;
    Ok(stat.t_naught(pos.as_slice()).max(stat.t_naught(&neg)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-6
    }

    #[test]
    fn asymmetric_sign() {
        assert_eq!(underline_sign(0.0f64).unwrap(), -1);
        assert_eq!(underline_sign(-0.0f64).unwrap(), -1);
        assert_eq!(underline_sign(f64::INFINITY).unwrap(), 1);
        assert_eq!(underline_sign(f64::NEG_INFINITY).unwrap(), -1);
        assert!(underline_sign(f64::NAN).is_err());
    }

    #[test]
    fn kernel_values() {
        assert_eq!(psi(0.0), 1.0);
        assert_eq!(psi(0.5), 0.5);
        assert_eq!(psi(2.0), 0.0);
    }

    #[test]
    fn beta_values() {
        assert!(close(beta_coeff(1).unwrap(), 1.0));
        assert!(close(beta_coeff(2).unwrap(), 0.816497));
        assert!(close(beta_coeff(3).unwrap(), 0.688247));
        assert!(beta_coeff(0).is_err());
    }

    #[test]
    fn penalty_values() {
        assert!(close(gamma_penalty(1.0).unwrap(), 1.414214));
        assert!(close(gamma_penalty((-1.0f64).exp()).unwrap(), 2.0));
        assert!(close(gamma_penalty(0.25).unwrap(), 2.184626));
        assert!(gamma_penalty(0.0).is_err());
        assert!(gamma_penalty(1.5).is_err());
    }

    #[test]
    fn energy_closed_form_matches_direct_sum() {
        for d in 1..=50usize {
            let direct: u64 = (1 - d as i64..d as i64)
                .map(|i| (d as i64 - i.abs()).pow(2) as u64)
                .sum();
            assert_eq!(direct, kernel_energy(d));
            let beta = beta_coeff(d).unwrap();
            let psi_sq: f64 = (1 - d as i64..d as i64)
                .map(|i| psi(i as f64 / d as f64).powi(2))
                .sum();
            assert!((beta * beta * psi_sq - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn local_stat_examples() {
        let ones = SignVector::constant(4, 1).unwrap();
        assert!(close(local_stat(&ones, ScalePair { d: 2, j: 1 }).unwrap(), 1.632993));
        assert!(close(local_stat(&ones, ScalePair { d: 1, j: 2 }).unwrap(), 1.0));
        let mixed = SignVector::new(vec![1, -1, 1, 1]).unwrap();
        assert!(close(local_stat(&mixed, ScalePair { d: 2, j: 1 }).unwrap(), 0.0));
        assert!(local_stat(&ones, ScalePair { d: 3, j: 0 }).is_err());
        assert!(local_stat(&ones, ScalePair { d: 1, j: 4 }).is_err());
    }

    #[test]
    fn t_naught_examples() {
        let ones = SignVector::constant(4, 1).unwrap();
        let minus = SignVector::constant(4, -1).unwrap();
        assert!(close(t_naught(&ones), 0.028199));
        assert!(close(t_naught(&minus), -2.829539));
        assert!(close(t_naught(&SignVector::new(vec![1]).unwrap()), -0.414214));
    }

    #[test]
    fn t_two_sided_examples() {
        assert!(close(t_two_sided(&[1.0f64; 4]).unwrap(), 0.028199));
        assert!(close(t_two_sided(&[0.0f64; 4]).unwrap(), -2.829539));
        assert!(close(t_two_sided(&[-3.5f64]).unwrap(), -0.414214));
        assert!(close(t_two_sided(&[f64::INFINITY]).unwrap(), -0.414214));
        assert!(t_two_sided(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn sign_vector_validation() {
        assert!(SignVector::new(vec![1, 0, -1]).is_err());
        assert!(SignVector::new(vec![]).is_err());
    }

    #[test]
    fn boundary_variance_below_one() {
        // variance of T_{d,j} under Rademacher signs is beta_d^2 * sum of squared weights
        let n = 9;
        let stat = MultiscaleStat::new(n).unwrap();
        for d in 1..=stat.max_scale() {
            for j in 0..n {
                let lo = (j + 1).saturating_sub(d);
                let hi = (j + d).min(n);
                let w2: f64 = (lo..hi).map(|i| ((d - i.abs_diff(j)) as f64).powi(2)).sum();
                let var = w2 / kernel_energy(d) as f64;
                let interior = j + 1 >= d && j + d <= n;
                if interior {
                    assert!((var - 1.0).abs() < 1e-12);
                } else {
                    assert!(var < 1.0);
                }
            }
        }
    }

    #[test]
    fn threshold_agrees_with_excess() {
        let stat = MultiscaleStat::new(37).unwrap();
        for d in 1..=stat.max_scale() {
            let top = (d * d) as i32;
            for &kappa in &[-3.0, -0.5, 0.0, 0.3127, 1.0, 2.5, f64::INFINITY, f64::NEG_INFINITY] {
                let t = stat.s1_threshold(d, kappa);
                for m in -top..=top {
                    assert_eq!(m <= t, stat.excess(d, m) <= kappa, "d={d} m={m} kappa={kappa}");
                }
            }
        }
    }

    #[test]
    fn rademacher_shortcut_matches_two_sided() {
        let xi: Vec<Sign> = vec![1, -1, -1, 1, 1, 1, -1, 1, -1, -1, -1];
        let stat = MultiscaleStat::new(xi.len()).unwrap();
        let v: Vec<f64> = xi.iter().map(|&s| s as f64).collect();
        let direct = t_two_sided(&v).unwrap();
        let fast = stat.rademacher_t_with(&xi, &mut WindowSums::default());
        assert_eq!(direct, fast);
    }
}
