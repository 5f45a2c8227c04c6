//! Band results, critical value sources and the concave reduction.

use serde::{Deserialize, Serialize};

use crate::calibration::{compute_kappa, get_kappa, KappaRequest, KappaTable};
use crate::error::{invalid, Result};
use crate::geometry::SortedDataset;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandMode {
    Exact,
    Approx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Convex,
    Concave,
}

/// Where the critical value comes from.
#[derive(Debug)]
pub enum KappaSource<'a> {
    Fixed(f64),
    Simulate { n_sims: usize, seed: u64 },
    Table { table: &'a mut KappaTable, n_sims: usize, seed: u64 },
}

impl KappaSource<'_> {
    pub fn resolve(&mut self, n: usize, alpha: f64) -> Result<f64> {
        match self {
            KappaSource::Fixed(k) => {
                if k.is_nan() {
                    return invalid("critical value is NaN");
                }
                Ok(*k)
            }
            KappaSource::Simulate { n_sims, seed } => compute_kappa(&KappaRequest::new(n, alpha, *n_sims, *seed)?),
            KappaSource::Table { table, n_sims, seed } => get_kappa(table, &KappaRequest::new(n, alpha, *n_sims, *seed)?),
        }
    }
}

/// Lower and upper boundaries at the design points.
///
/// When `feasible` is false the confidence set is empty and `lower` is
/// empty as well.
#[derive(Clone, Debug, PartialEq)]
pub struct BandResult<F: Scalar> {
    pub lower: Vec<F>,
    pub upper: Vec<F>,
    pub kappa: f64,
    pub alpha: f64,
    pub feasible: bool,
    /// Smallest design point with a finite upper boundary.
    pub x_min: F,
    /// Largest design point with a finite upper boundary.
    pub x_max: F,
    pub mode: BandMode,
    pub shape: Shape,
}

impl<F: Scalar> BandResult<F> {
    /// Band for `-f` given the band for `f`: `(L, U) -> (-U, -L)`. An
    /// empty confidence set stays empty, with both boundaries dropped.
    pub fn reflected(&self) -> Self {
        let neg = |v: &Vec<F>| v.iter().map(|&a| -a).collect::<Vec<F>>();
        let (lower, upper) = if self.feasible {
            (neg(&self.upper), neg(&self.lower))
        } else {
            (Vec::new(), Vec::new())
        };
        Self {
            lower,
            upper,
            shape: match self.shape {
                Shape::Convex => Shape::Concave,
                Shape::Concave => Shape::Convex,
            },
            ..self.clone()
        }
    }
}

/// Band for a concave median via the convex band of `-y`.
pub fn concave_band<F: Scalar>(
    data: &SortedDataset<F>,
    convex: impl FnOnce(&SortedDataset<F>) -> Result<BandResult<F>>,
) -> Result<BandResult<F>> {
    let band = convex(&data.negated())?;
    Ok(band.reflected())
}

/// Band for either shape in either mode. Approximate mode reports the
/// conservative pair `(L_*, U*)`.
pub fn compute_band<F: Scalar>(
    data: &SortedDataset<F>,
    alpha: f64,
    shape: Shape,
    mode: BandMode,
    kappa: &mut KappaSource<'_>,
    opts: &crate::approx::ApproxOptions,
) -> Result<BandResult<F>> {
    let mut convex = |d: &SortedDataset<F>| match mode {
        BandMode::Exact => crate::exact::band_exact(d, alpha, kappa),
        BandMode::Approx => crate::approx::band_approx(d, alpha, kappa, opts).map(|(b, _)| b),
    };
    match shape {
        Shape::Convex => convex(data),
        Shape::Concave => concave_band(data, convex),
    }
}
