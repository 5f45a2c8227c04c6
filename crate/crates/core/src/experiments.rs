//! Simulation studies: the piecewise quadratic design, coverage, and band
//! width behaviour.

use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::ApproxOptions;
use crate::band::{compute_band, BandMode, BandResult, KappaSource, Shape};
use crate::calibration::{compute_kappa, substream, KappaRequest, DEFAULT_N_SIMS};
use crate::error::{invalid, Result};
use crate::geometry::SortedDataset;

/// Regression function of a study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    /// `-12 (x - 1/3)` left of `1/3`, `13.5 (x - 1/3)^2` right of it.
    Piecewise,
    /// `f(x) = x`.
    Linear,
}

impl Truth {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Truth::Piecewise => piecewise_truth(x),
            Truth::Linear => x,
        }
    }
}

pub fn piecewise_truth(x: f64) -> f64 {
    let c = 1.0 / 3.0;
    if x <= c {
        -12.0 * (x - c)
    } else {
        13.5 * (x - c) * (x - c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorLaw {
    StudentT { df: f64 },
    Gaussian,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub sigma: f64,
    pub errors: ErrorLaw,
    pub truth: Truth,
    pub seed: u64,
    pub alpha: f64,
    pub mode: BandMode,
    pub replications: usize,
    /// Critical value; simulated from `kappa_sims` Rademacher draws if absent.
    pub kappa: Option<f64>,
    pub kappa_sims: usize,
    pub approx: ApproxOptions,
}

impl SimConfig {
    /// The piecewise design with `sigma = 1/2` and t errors on five degrees
    /// of freedom.
    pub fn reference(n: usize, mode: BandMode) -> Self {
        Self {
            n,
            sigma: 0.5,
            errors: ErrorLaw::StudentT { df: 5.0 },
            truth: Truth::Piecewise,
            seed: 0,
            alpha: 0.05,
            mode,
            replications: 1,
            kappa: None,
            kappa_sims: DEFAULT_N_SIMS,
            approx: ApproxOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("n must be at least 1");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return invalid("sigma must be positive");
        }
        if let ErrorLaw::StudentT { df } = self.errors {
            if !(df >= 1.0 && df.is_finite()) {
                return invalid("error_df must be at least 1");
            }
        }
        if self.replications == 0 {
            return invalid("replications must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha {} outside (0, 1)", self.alpha));
        }
        Ok(())
    }

    pub fn resolve_kappa(&self) -> Result<f64> {
        match self.kappa {
            Some(k) => Ok(k),
            None => compute_kappa(&KappaRequest::new(self.n, self.alpha, self.kappa_sims, self.seed)?),
        }
    }
}

/// `x_i = (i - 1/2) / n`.
pub fn design_points(n: usize) -> Vec<f64> {
    (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect()
}

/// Data of replication `rep` and the truth at the design points.
pub fn gen_sim_data(cfg: &SimConfig, rep: u64) -> Result<(SortedDataset<f64>, Vec<f64>)> {
    cfg.validate()?;
    let x = design_points(cfg.n);
    let f: Vec<f64> = x.iter().map(|&t| cfg.truth.eval(t)).collect();
    let mut rng = substream(cfg.seed ^ 0x5eed_da7a, rep);
    let eps: Vec<f64> = match cfg.errors {
        ErrorLaw::StudentT { df } => {
            let t = StudentT::new(df).map_err(|e| crate::error::BandError::InvalidInput(e.to_string()))?;
            (0..cfg.n).map(|_| t.sample(&mut rng)).collect()
        }
        ErrorLaw::Gaussian => (0..cfg.n).map(|_| StandardNormal.sample(&mut rng)).collect(),
    };
    let y = f.iter().zip(&eps).map(|(&a, &e)| a + cfg.sigma * e).collect();
    Ok((SortedDataset::new(x, y)?, f))
}

/// Band of one replication with a known critical value.
pub fn sim_band(cfg: &SimConfig, rep: u64, kappa: f64) -> Result<(SortedDataset<f64>, Vec<f64>, BandResult<f64>)> {
    let (data, f) = gen_sim_data(cfg, rep)?;
    let band = compute_band(&data, cfg.alpha, Shape::Convex, cfg.mode, &mut KappaSource::Fixed(kappa), &cfg.approx)?;
    Ok((data, f, band))
}

/// Whether the band holds `f` at every design point.
pub fn covers(band: &BandResult<f64>, f: &[f64]) -> bool {
    band.feasible
        && band
            .lower
            .iter()
            .zip(&band.upper)
            .zip(f)
            .all(|((&l, &u), &v)| l <= v && v <= u)
}

/// `U - L` pointwise; empty when the band is empty.
pub fn width_profile(band: &BandResult<f64>) -> Vec<f64> {
    if !band.feasible {
        return Vec::new();
    }
    band.upper.iter().zip(&band.lower).map(|(&u, &l)| u - l).collect()
}

/// Median of a sample under the total order on floats, `NaN` when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        let (a, b) = (v[m / 2 - 1], v[m / 2]);
        if a == b {
            a
        } else {
            0.5 * (a + b)
        }
    }
}

/// Median band width over design points with `lo <= x <= hi`.
pub fn median_width_between(x: &[f64], band: &BandResult<f64>, lo: f64, hi: f64) -> f64 {
    let w = width_profile(band);
    let sel: Vec<f64> = x
        .iter()
        .zip(&w)
        .filter(|(&t, _)| lo <= t && t <= hi)
        .map(|(_, &v)| v)
        .collect();
    median(&sel)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub n: usize,
    pub alpha: f64,
    pub kappa: f64,
    pub mode: BandMode,
    pub errors: ErrorLaw,
    pub replications: usize,
    pub hits: usize,
    pub coverage: f64,
    /// Replications whose confidence set was empty.
    pub empty: usize,
    /// Average of the finite widths at each design point.
    pub mean_width_profile: Vec<Option<f64>>,
    pub width_counts: Vec<usize>,
}

/// Simultaneous design-point coverage over independent replications.
pub fn coverage_study(cfg: &SimConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let kappa = cfg.resolve_kappa()?;
    let runs: Vec<(bool, bool, Vec<f64>)> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let (_, f, band) = sim_band(cfg, rep, kappa)?;
            Ok((covers(&band, &f), band.feasible, width_profile(&band)))
        })
        .collect::<Result<_>>()?;
    let n = cfg.n;
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for (_, _, w) in &runs {
        for (i, &v) in w.iter().enumerate() {
            if v.is_finite() {
                sums[i] += v;
                counts[i] += 1;
            }
        }
    }
    let hits = runs.iter().filter(|r| r.0).count();
    Ok(CoverageReport {
        n,
        alpha: cfg.alpha,
        kappa,
        mode: cfg.mode,
        errors: cfg.errors,
        replications: cfg.replications,
        hits,
        coverage: hits as f64 / cfg.replications as f64,
        empty: runs.iter().filter(|r| !r.1).count(),
        mean_width_profile: sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect(),
        width_counts: counts,
    })
}

/// Median band widths of one replication over `[0.10, 0.25]` and `[0.50, 0.90]`.
pub fn region_widths(cfg: &SimConfig) -> Result<(f64, f64)> {
    let kappa = cfg.resolve_kappa()?;
    let (data, _, band) = sim_band(cfg, 0, kappa)?;
    Ok((
        median_width_between(data.x(), &band, 0.10, 0.25),
        median_width_between(data.x(), &band, 0.50, 0.90),
    ))
}

/// Median over replications of the width at the central design point.
pub fn central_width(cfg: &SimConfig) -> Result<f64> {
    cfg.validate()?;
    let kappa = cfg.resolve_kappa()?;
    let widths: Vec<f64> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let (_, _, band) = sim_band(cfg, rep, kappa)?;
            let w = width_profile(&band);
            Ok(w.get(cfg.n / 2).copied().unwrap_or(f64::INFINITY))
        })
        .collect::<Result<_>>()?;
    Ok(median(&widths))
}

/// Ratio of median central widths at `n_small` and `n_large` for the
/// linear truth; `base` supplies everything else.
pub fn width_scaling_study(n_small: usize, n_large: usize, base: &SimConfig) -> Result<f64> {
    let at = |n: usize| {
        central_width(&SimConfig {
            n,
            truth: Truth::Linear,
            kappa: None,
            ..base.clone()
        })
    };
    Ok(at(n_small)? / at(n_large)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_examples() {
        assert_eq!(piecewise_truth(1.0 / 3.0), 0.0);
        assert!((piecewise_truth(0.0) - 4.0).abs() < 1e-12);
        assert!((piecewise_truth(1.0) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn data_is_deterministic() {
        let cfg = SimConfig::reference(30, BandMode::Exact);
        let a = gen_sim_data(&cfg, 3).unwrap();
        let b = gen_sim_data(&cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, gen_sim_data(&cfg, 4).unwrap().0);
        assert_eq!(a.0.x()[0], 0.5 / 30.0);
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[1.0, 3.0]), 2.0);
        assert_eq!(median(&[1.0, f64::INFINITY, f64::INFINITY]), f64::INFINITY);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn small_study_is_reproducible() {
        let cfg = SimConfig {
            replications: 4,
            kappa: Some(1.0),
            ..SimConfig::reference(40, BandMode::Exact)
        };
        let a = coverage_study(&cfg).unwrap();
        assert_eq!(a, coverage_study(&cfg).unwrap());
        assert!(a.coverage >= 0.0 && a.coverage <= 1.0);
    }
}
