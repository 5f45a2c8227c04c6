//! Approximate band boundaries from a finite grid of slopes.
//!
//! The upper boundary is bracketed by `U_*` (a maximum of accepted lines
//! and their convex augmentations) and `U*` (which adds concave majorants
//! between neighbouring slopes). The lower boundary is bracketed by a
//! certified bound `L_*` and by `L*`, the minimum over accepted tangent
//! pairs whose left index ranges over a subset of `J`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::band::{BandMode, BandResult, KappaSource, Shape};
use crate::error::{invalid, BandError, Result};
use crate::exact::{feasibility_check, prepare_lower, signs_above, PairSearch};
use crate::geometry::{
    finite_range, gcm_select, lcm_select, left_tangent_at, right_tangent_at, CandidateLine, Roof,
    SortedDataset, TangentTable,
};
use crate::multiscale::{MultiscaleStat, Sign};
use crate::scalar::{max_ext, Scalar};
use crate::scan::Scanner;

/// Default number of slope segments.
pub const DEFAULT_SEGMENTS: usize = 100;

/// Random pairs drawn for the default grid.
const GRID_PAIRS: usize = 20_000;

/// Interior slopes `s_1 < ... < s_{M-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeGrid<F: Scalar> {
    slopes: Vec<F>,
}

impl<F: Scalar> SlopeGrid<F> {
    pub fn new(slopes: Vec<F>) -> Result<Self> {
        if slopes.iter().any(|s| !s.is_finite()) {
            return invalid("slopes must be finite");
        }
        if let Some(i) = slopes.windows(2).position(|w| !(w[0] < w[1])) {
            return invalid(format!("slopes not strictly increasing at index {}", i + 1));
        }
        Ok(Self { slopes })
    }

    /// The grid with no interior slope (`M = 1`).
    pub fn trivial() -> Self {
        Self { slopes: Vec::new() }
    }

    pub fn slopes(&self) -> &[F] {
        &self.slopes
    }

    /// Number of segments `M`.
    pub fn segments(&self) -> usize {
        self.slopes.len() + 1
    }

    /// Quantiles of chord slopes at levels `l / m`, over seeded random pairs
    /// whose abscissae are at least a tenth of the design range apart.
    /// Repeated quantiles are merged, so the grid may have fewer segments.
    pub fn from_data(data: &SortedDataset<F>, m: usize, seed: u64) -> Result<Self> {
        if m == 0 {
            return invalid("segment count must be at least 1");
        }
        let (x, y) = (data.x(), data.y());
        let n = x.len();
        let gap = (x[n - 1] - x[0]) / F::from_f64_lossy(10.0);
        if m == 1 || !(gap > F::zero()) {
            return Ok(Self::trivial());
        }
        let mut slopes: Vec<F> = Vec::new();
        let push = |slopes: &mut Vec<F>, a: usize, b: usize| {
            let (j, k) = if a < b { (a, b) } else { (b, a) };
            if x[k] - x[j] >= gap {
                slopes.push((y[k] - y[j]) / (x[k] - x[j]));
            }
        };
        if n * (n - 1) / 2 <= GRID_PAIRS {
            for j in 0..n {
                for k in j + 1..n {
                    push(&mut slopes, j, k);
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..GRID_PAIRS {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                push(&mut slopes, a, b);
            }
        }
        slopes.retain(|s| s.is_finite());
        if slopes.is_empty() {
            return Ok(Self::trivial());
        }
        slopes.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let len = slopes.len();
        let mut grid: Vec<F> = (1..m)
            .map(|l| {
                let rank = ((l * len) as f64 / m as f64).ceil().clamp(1.0, len as f64) as usize;
                slopes[rank - 1]
            })
            .collect();
        grid.dedup();
        Self::new(grid)
    }
}

/// Descending scan along a chain of candidate lines ordered from the
/// largest down. Returns the position of the first accepted one.
fn scan_descending<F: Scalar>(
    data: &SortedDataset<F>,
    stat: &MultiscaleStat,
    kappa: f64,
    order: &[CandidateLine],
) -> Option<usize> {
    let n = data.len();
    let mut vals = vec![F::zero(); n];
    let mut sigma = vec![0 as Sign; n];
    let first = order.first()?;
    first.values_into(data, &mut vals);
    signs_above(&vals, data.y(), &mut sigma);
    let mut scanner = Scanner::new(stat, &sigma, kappa);
    for (pos, line) in order.iter().enumerate() {
        if pos > 0 {
            line.values_into(data, &mut vals);
            signs_above(&vals, data.y(), &mut sigma);
            for i in 0..n {
                if sigma[i] < scanner.signs()[i] {
                    scanner.flip_unchecked(i);
                }
            }
        }
        if scanner.settle() {
            return Some(pos);
        }
    }
    None
}

fn left_order<F: Scalar>(data: &SortedDataset<F>) -> Vec<CandidateLine> {
    let (x, y) = (data.x(), data.y());
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .unwrap()
            .then(y[a].partial_cmp(&y[b]).unwrap())
            .then(a.cmp(&b))
    });
    idx.into_iter().rev().map(|k| CandidateLine::LeftDegenerate { k }).collect()
}

fn right_order<F: Scalar>(data: &SortedDataset<F>) -> Vec<CandidateLine> {
    let (x, y) = (data.x(), data.y());
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .unwrap()
            .then(y[b].partial_cmp(&y[a]).unwrap())
            .then(a.cmp(&b))
    });
    idx.into_iter().map(|j| CandidateLine::RightDegenerate { j }).collect()
}

/// Largest accepted left-degenerate line and its abscissa; `None` and `-inf`
/// when no such line is accepted.
pub fn step1_left_degenerate<F: Scalar>(data: &SortedDataset<F>, kappa: f64) -> Result<(Option<CandidateLine>, F)> {
    let stat = MultiscaleStat::new(data.len())?;
    let order = left_order(data);
    Ok(match scan_descending(data, &stat, kappa, &order) {
        Some(p) => match order[p] {
            CandidateLine::LeftDegenerate { k } => (Some(order[p]), data.x()[k]),
            _ => unreachable!(),
        },
        None => (None, F::neg_infinity()),
    })
}

/// Largest accepted right-degenerate line and its abscissa; `None` and
/// `+inf` when no such line is accepted.
pub fn step3_right_degenerate<F: Scalar>(data: &SortedDataset<F>, kappa: f64) -> Result<(Option<CandidateLine>, F)> {
    let stat = MultiscaleStat::new(data.len())?;
    let order = right_order(data);
    Ok(match scan_descending(data, &stat, kappa, &order) {
        Some(p) => match order[p] {
            CandidateLine::RightDegenerate { j } => (Some(order[p]), data.x()[j]),
            _ => unreachable!(),
        },
        None => (None, F::infinity()),
    })
}

fn residuals<F: Scalar>(data: &SortedDataset<F>, s: F) -> Vec<F> {
    data.x().iter().zip(data.y()).map(|(&x, &y)| y - s * x).collect()
}

fn max_intercept_with<F: Scalar>(stat: &MultiscaleStat, r: &[F], kappa: f64) -> F {
    let n = r.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| r[b].partial_cmp(&r[a]).expect("finite residuals"));
    let mut scanner = Scanner::new(stat, &vec![1; n], kappa);
    if scanner.settle() {
        return F::infinity();
    }
    for &w in &order {
        scanner.flip_unchecked(w);
        if scanner.settle() {
            return r[w];
        }
    }
    F::neg_infinity()
}

/// Largest intercept `a` such that the line `a + s x` is accepted: `+inf`
/// when every such line is, `-inf` when none is.
pub fn step2_max_intercept<F: Scalar>(data: &SortedDataset<F>, kappa: f64, s: F) -> Result<F> {
    if !s.is_finite() {
        return invalid("slope must be finite");
    }
    let stat = MultiscaleStat::new(data.len())?;
    Ok(max_intercept_with(&stat, &residuals(data, s), kappa))
}

/// Output of [`approx_upper`].
#[derive(Clone, Debug, PartialEq)]
pub struct UpperApprox<F: Scalar> {
    /// `U_*`, below the exact upper boundary.
    pub lower: Vec<F>,
    /// `U*`, above the exact upper boundary.
    pub upper: Vec<F>,
    /// `a(s_l)` for each interior slope.
    pub intercepts: Vec<F>,
    pub left: Option<CandidateLine>,
    pub right: Option<CandidateLine>,
}

/// Both brackets of the upper boundary, with convex augmentation of the
/// grid lines switched on.
pub fn approx_upper<F: Scalar>(data: &SortedDataset<F>, kappa: f64, grid: &SlopeGrid<F>) -> Result<UpperApprox<F>> {
    approx_upper_with(data, kappa, grid, true)
}

pub fn approx_upper_with<F: Scalar>(
    data: &SortedDataset<F>,
    kappa: f64,
    grid: &SlopeGrid<F>,
    augment: bool,
) -> Result<UpperApprox<F>> {
    let n = data.len();
    let stat = MultiscaleStat::new(n)?;
    let (x, y) = (data.x(), data.y());
    if stat.t_naught(&vec![1; n]) <= kappa {
        return Ok(UpperApprox {
            lower: vec![F::infinity(); n],
            upper: vec![F::infinity(); n],
            intercepts: vec![F::infinity(); grid.slopes.len()],
            left: None,
            right: None,
        });
    }
    let (left, _) = step1_left_degenerate(data, kappa)?;
    let (right, _) = step3_right_degenerate(data, kappa)?;
    let lines: Vec<(F, Vec<F>)> = grid
        .slopes
        .par_iter()
        .map(|&s| {
            let r = residuals(data, s);
            (max_intercept_with(&stat, &r, kappa), r)
        })
        .collect();

    let degenerate = |line: Option<CandidateLine>| match line {
        Some(l) => l.values(data),
        None => vec![F::neg_infinity(); n],
    };
    let g0 = degenerate(left);
    let gm = degenerate(right);

    let mut lower: Vec<F> = g0.iter().zip(&gm).map(|(&a, &b)| max_ext(a, b)).collect();
    for (&s, (a, r)) in grid.slopes.iter().zip(&lines) {
        if *a == F::neg_infinity() {
            continue;
        }
        for i in 0..n {
            lower[i] = max_ext(lower[i], *a + s * x[i]);
        }
        if augment {
            let aug = gcm_select(x, y, |i| *a <= r[i]);
            for i in 0..n {
                lower[i] = max_ext(lower[i], aug[i]);
            }
        }
    }

    // Point `i` lies on or below grid line `l` (0 and M the degenerate ones).
    let m = grid.segments();
    let below = |l: usize, i: usize| -> bool {
        if l == 0 {
            g0[i] >= y[i]
        } else if l == m {
            gm[i] >= y[i]
        } else {
            let (a, r) = (&lines[l - 1].0, &lines[l - 1].1);
            *a >= r[i]
        }
    };
    let mut upper = lower.clone();
    for l in 1..=m {
        let h = lcm_select(x, y, |i| below(l - 1, i) || below(l, i));
        for i in 0..n {
            upper[i] = max_ext(upper[i], h[i]);
        }
    }
    Ok(UpperApprox {
        lower,
        upper,
        intercepts: lines.into_iter().map(|(a, _)| a).collect(),
        left,
        right,
    })
}

/// Greatest convex minorant of an envelope at the design points: points
/// at `+inf` impose nothing, a `-inf` entry forces `-inf` wherever the
/// envelope is not `+inf`.
pub fn convex_minorant_of<F: Scalar>(data: &SortedDataset<F>, u: &[F]) -> Result<Vec<F>> {
    if u.len() != data.len() {
        return invalid("envelope length differs from dataset size");
    }
    if u.iter().any(|v| v.is_nan()) {
        return invalid("envelope contains NaN");
    }
    if u.iter().any(|&v| v == F::neg_infinity()) {
        return Ok(u
            .iter()
            .map(|&v| if v == F::infinity() { v } else { F::neg_infinity() })
            .collect());
    }
    let hull = gcm_select(data.x(), u, |i| u[i].is_finite());
    Ok(u.iter()
        .zip(hull)
        .map(|(&v, h)| if v == F::infinity() { v } else { h })
        .collect())
}

/// Default left indices for `L*`: every `max(1, floor(n / 100))`-th element
/// of `J`, both extremes of `J`, and the absent left tangent.
pub fn default_j_subset<F: Scalar>(roof: &Roof<F>) -> Vec<Option<usize>> {
    let js = roof.j_indices();
    let step = (roof.values.len() / 100).max(1);
    let mut out: Vec<Option<usize>> = vec![None];
    out.extend(js.iter().step_by(step).map(|&j| Some(j)));
    if let Some(&last) = js.last() {
        if out.last() != Some(&Some(last)) {
            out.push(Some(last));
        }
    }
    out
}

/// Members of the tangent class, as a bitset of the points they reach.
struct Member<F> {
    value_rows: Vec<F>,
    covers: Vec<u64>,
}

/// Certified lower bound below the roof `u`.
///
/// At each design point `t` the tangent functions are added in increasing
/// order of their value at `t`; the pointwise maximum of everything added
/// so far dominates every pair whose value at `t` is smaller. The bound is
/// the first value at which that maximum is accepted.
pub fn certified_lower<F: Scalar>(data: &SortedDataset<F>, u: &[F], kappa: f64) -> Result<Vec<F>> {
    let (roof, table) = prepare_lower(data, u, kappa)?;
    let n = data.len();
    let stat = MultiscaleStat::new(n)?;
    let mut base = Scanner::new(&stat, &vec![1; n], kappa);
    if base.settle() {
        return Ok(vec![F::neg_infinity(); n]);
    }
    let members = tangent_members(data, &roof, &table);
    if members.is_empty() {
        return Ok(vec![F::infinity(); n]);
    }
    let words = n.div_ceil(64);
    let out = (0..n)
        .into_par_iter()
        .map_init(
            || (base.clone(), vec![0u64; words], Vec::with_capacity(members.len())),
            |(scanner, minus, events), t| {
                scanner.clone_from(&base);
                minus.iter_mut().for_each(|w| *w = 0);
                events.clear();
                events.extend((0..members.len()).map(|m| (members[m].value_rows[t], m)));
                events.sort_by(|a: &(F, usize), b| a.0.partial_cmp(&b.0).expect("no NaN").then(a.1.cmp(&b.1)));
                let mut g = 0;
                while g < events.len() {
                    let v = events[g].0;
                    let mut changed = false;
                    while g < events.len() && events[g].0 == v {
                        let cov = &members[events[g].1].covers;
                        for (w, (&c, mw)) in cov.iter().zip(minus.iter_mut()).enumerate() {
                            let mut fresh = c & !*mw;
                            *mw |= c;
                            while fresh != 0 {
                                let b = fresh.trailing_zeros() as usize;
                                scanner.flip_unchecked(w * 64 + b);
                                fresh &= fresh - 1;
                                changed = true;
                            }
                        }
                        g += 1;
                    }
                    if changed && scanner.settle() {
                        return v;
                    }
                }
                F::infinity()
            },
        )
        .collect();
    Ok(out)
}

fn tangent_members<F: Scalar>(data: &SortedDataset<F>, roof: &Roof<F>, table: &TangentTable<F>) -> Vec<Member<F>> {
    let n = data.len();
    let words = n.div_ceil(64);
    let y = data.y();
    let u = &roof.values;
    let build = |vals: Vec<F>| {
        let mut covers = vec![0u64; words];
        for i in 0..n {
            if vals[i] >= y[i] {
                covers[i / 64] |= 1 << (i % 64);
            }
        }
        Member { value_rows: vals, covers }
    };
    let js = roof.j_indices();
    js.par_iter()
        .flat_map_iter(|&j| {
            let p = table.params[j].as_ref().expect("j in J");
            let l: Vec<F> = (0..n).map(|i| left_tangent_at(data, u, p, j, i)).collect();
            let r: Vec<F> = (0..n).map(|i| right_tangent_at(data, u, p, j, i)).collect();
            [build(l), build(r)]
        })
        .collect()
}

/// `min` over accepted `h_{j,k}` with `j` in `subset` and every `k`;
/// `budget` caps the tests per `j`. An empty subset gives `+inf`.
pub fn subset_lower<F: Scalar>(
    data: &SortedDataset<F>,
    u: &[F],
    kappa: f64,
    subset: &[Option<usize>],
    budget: Option<usize>,
) -> Result<Vec<F>> {
    let (roof, table) = prepare_lower(data, u, kappa)?;
    for &j in subset.iter().flatten() {
        if j >= data.len() || !roof.in_j[j] {
            return invalid(format!("index {j} is not in J"));
        }
    }
    let n = data.len();
    let stat = MultiscaleStat::new(n)?;
    let mut search = PairSearch::new(data, &stat, &roof, &table, kappa);
    let mut lower = vec![F::infinity(); n];
    for &j in subset {
        search.run_j(j, &mut lower, budget);
    }
    Ok(lower)
}

/// Output of [`approx_lower`].
#[derive(Clone, Debug, PartialEq)]
pub struct LowerApprox<F: Scalar> {
    /// `L_*`.
    pub lower: Vec<F>,
    /// `L*`.
    pub upper: Vec<F>,
    /// True when the subset was empty and `L*` carries no information.
    pub vacuous: bool,
}

/// Both brackets of the lower boundary below the roof `u`.
pub fn approx_lower<F: Scalar>(
    data: &SortedDataset<F>,
    u: &[F],
    kappa: f64,
    subset: &[Option<usize>],
) -> Result<LowerApprox<F>> {
    let lower = certified_lower(data, u, kappa)?;
    let upper = subset_lower(data, u, kappa, subset, None)?;
    Ok(LowerApprox { lower, upper, vacuous: subset.is_empty() })
}

/// Tuning knobs for [`band_approx`].
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxOptions {
    pub segments: usize,
    pub grid_seed: u64,
    pub augment: bool,
    /// Skip `L*`; `l_upper` is then `+inf`.
    pub skip_subset: bool,
    pub max_tests_per_j: Option<usize>,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        Self {
            segments: DEFAULT_SEGMENTS,
            grid_seed: 0,
            augment: true,
            skip_subset: false,
            max_tests_per_j: None,
        }
    }
}

/// All four brackets plus the grid and subset used.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxBand<F: Scalar> {
    pub u_lower: Vec<F>,
    pub u_upper: Vec<F>,
    pub l_lower: Vec<F>,
    pub l_upper: Vec<F>,
    pub grid: SlopeGrid<F>,
    pub j_subset: Vec<Option<usize>>,
}

/// Approximate convex band. The reported pair is `(L_*, U*)`, which
/// contains the exact band.
///
/// `L_*` is computed below the convex minorant of `U*`, `L*` below the
/// convex minorant of `U_*`. When the first roof is rejected the band is
/// reported as empty.
pub fn band_approx<F: Scalar>(
    data: &SortedDataset<F>,
    alpha: f64,
    kappa: &mut KappaSource<'_>,
    opts: &ApproxOptions,
) -> Result<(BandResult<F>, ApproxBand<F>)> {
    let n = data.len();
    let kappa = kappa.resolve(n, alpha)?;
    let grid = SlopeGrid::from_data(data, opts.segments, opts.grid_seed)?;
    let up = approx_upper_with(data, kappa, &grid, opts.augment)?;
    let (x_min, x_max) = finite_range(data.x(), &up.upper);
    let outer_roof = convex_minorant_of(data, &up.upper)?;
    let feasible = feasibility_check(data, &outer_roof, kappa)?;

    let (l_lower, l_upper, j_subset) = if feasible {
        let l_lower = certified_lower(data, &outer_roof, kappa)?;
        let inner_roof = convex_minorant_of(data, &up.lower)?;
        let (l_upper, subset) = if opts.skip_subset {
            (vec![F::infinity(); n], Vec::new())
        } else {
            match Roof::new(data, inner_roof.clone()) {
                Ok(roof) => {
                    let subset = default_j_subset(&roof);
                    match subset_lower(data, &inner_roof, kappa, &subset, opts.max_tests_per_j) {
                        Ok(l) => (l, subset),
                        Err(BandError::Infeasible) => (vec![F::infinity(); n], Vec::new()),
                        Err(e) => return Err(e),
                    }
                }
                Err(e) => return Err(e),
            }
        };
        (l_lower, l_upper, subset)
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };

    let result = BandResult {
        lower: l_lower.clone(),
        upper: up.upper.clone(),
        kappa,
        alpha,
        feasible,
        x_min,
        x_max,
        mode: BandMode::Approx,
        shape: Shape::Convex,
    };
    let band = ApproxBand {
        u_lower: up.lower,
        u_upper: up.upper,
        l_lower,
        l_upper,
        grid,
        j_subset,
    };
    Ok((result, band))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{lower_exact, upper_exact};

    fn ds(x: &[f64], y: &[f64]) -> SortedDataset<f64> {
        SortedDataset::new(x.to_vec(), y.to_vec()).unwrap()
    }

    fn noisy(n: usize, seed: u64) -> SortedDataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let y = x.iter().map(|&t| 4.0 * (t - 0.5) * (t - 0.5) + rng.random_range(-0.6..0.6)).collect();
        SortedDataset::new(x, y).unwrap()
    }

    #[test]
    fn intercept_example() {
        let d = ds(&[0.0, 1.0, 2.0, 3.0], &[3.0, 1.0, 2.0, 0.0]);
        assert_eq!(step2_max_intercept(&d, 0.0, 0.0).unwrap(), 2.0);
        assert_eq!(step2_max_intercept(&d, 100.0, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(step2_max_intercept(&d, -100.0, 0.0).unwrap(), f64::NEG_INFINITY);
        let tied = ds(&[0.0, 1.0, 2.0, 3.0], &[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(step2_max_intercept(&tied, 0.0, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn degenerate_steps_trivial() {
        let d = noisy(20, 1);
        let big = 100.0;
        let (g0, xmin) = step1_left_degenerate(&d, big).unwrap();
        assert!(matches!(g0, Some(CandidateLine::LeftDegenerate { k: 19 })));
        assert_eq!(xmin, d.x()[19]);
        let (gm, xmax) = step3_right_degenerate(&d, big).unwrap();
        assert!(matches!(gm, Some(CandidateLine::RightDegenerate { j: 0 })));
        assert_eq!(xmax, d.x()[0]);
        assert_eq!(step1_left_degenerate(&d, -100.0).unwrap(), (None, f64::NEG_INFINITY));
        assert_eq!(step3_right_degenerate(&d, -100.0).unwrap(), (None, f64::INFINITY));
    }

    #[test]
    fn degenerate_steps_match_exact_range() {
        for seed in 0..4 {
            let d = noisy(50, seed);
            let u = upper_exact(&d, 0.9).unwrap();
            let (lo, hi) = finite_range(d.x(), &u);
            assert_eq!(step1_left_degenerate(&d, 0.9).unwrap().1, lo);
            assert_eq!(step3_right_degenerate(&d, 0.9).unwrap().1, hi);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(SlopeGrid::new(vec![1.0, 1.0]).is_err());
        assert!(SlopeGrid::new(vec![f64::INFINITY]).is_err());
        let g = SlopeGrid::from_data(&noisy(200, 3), 100, 0).unwrap();
        assert!(g.segments() > 50 && g.segments() <= 100);
    }

    #[test]
    fn trivial_grid_is_degenerate_max() {
        let d = noisy(25, 7);
        let up = approx_upper_with(&d, 0.8, &SlopeGrid::trivial(), true).unwrap();
        let g0 = up.left.map(|l| l.values(&d)).unwrap_or(vec![f64::NEG_INFINITY; 25]);
        let gm = up.right.map(|l| l.values(&d)).unwrap_or(vec![f64::NEG_INFINITY; 25]);
        let want: Vec<f64> = g0.iter().zip(&gm).map(|(&a, &b)| a.max(b)).collect();
        assert_eq!(up.lower, want);
    }

    #[test]
    fn sandwich_small() {
        for seed in 0..6 {
            let d = noisy(24, seed + 10);
            let kappa = 0.8;
            let u = upper_exact(&d, kappa).unwrap();
            let grid = SlopeGrid::from_data(&d, 20, seed).unwrap();
            let up = approx_upper(&d, kappa, &grid).unwrap();
            for i in 0..24 {
                let tol = 1e-9 * (1.0 + u[i].abs());
                assert!(up.lower[i] <= u[i] + tol || u[i].is_infinite() && up.lower[i] <= u[i]);
                assert!(up.upper[i] + tol >= u[i] || u[i].is_infinite() && up.upper[i] >= u[i]);
            }
            let Ok(l) = lower_exact(&d, &u, kappa) else { continue };
            let roof = Roof::new(&d, u.clone()).unwrap();
            let full: Vec<Option<usize>> =
                std::iter::once(None).chain(roof.j_indices().into_iter().map(Some)).collect();
            let la = approx_lower(&d, &u, kappa, &full).unwrap();
            assert_eq!(la.upper, l);
            for i in 0..24 {
                assert!(la.lower[i] <= l[i]);
            }
            let empty = approx_lower(&d, &u, kappa, &[]).unwrap();
            assert!(empty.vacuous);
            assert!(empty.upper.iter().all(|v| *v == f64::INFINITY));
        }
    }
}
