//! Exact band boundaries at the design points.
//!
//! The upper boundary is the pointwise maximum of accepted candidate lines,
//! the lower boundary the pointwise minimum of accepted tangent pairs below
//! it. Brute-force versions evaluate the statistic directly for every member
//! of the class and serve as oracles for the pruned versions.

use crate::band::{BandMode, BandResult, KappaSource, Shape};
use crate::error::{invalid, BandError, Result};
use crate::geometry::{
    enumerate_candidates, finite_range, left_tangent_at, right_tangent_at, CandidateLine, Roof,
    SortedDataset, TangentTable,
};
use crate::multiscale::{MultiscaleStat, Sign};
use crate::scalar::{max_ext, min_ext, Scalar};
use crate::scan::Scanner;

/// `+1` where the candidate lies strictly above the response.
#[inline]
pub(crate) fn signs_above<F: Scalar>(vals: &[F], y: &[F], out: &mut [Sign]) {
    for ((o, &v), &yi) in out.iter_mut().zip(vals).zip(y) {
        *o = if v > yi { 1 } else { -1 };
    }
}

/// `+1` where the response lies strictly above the candidate.
#[inline]
pub(crate) fn signs_below<F: Scalar>(vals: &[F], y: &[F], out: &mut [Sign]) {
    for ((o, &v), &yi) in out.iter_mut().zip(vals).zip(y) {
        *o = if yi > v { 1 } else { -1 };
    }
}

fn check_len<F: Scalar>(data: &SortedDataset<F>, u: &[F]) -> Result<()> {
    if u.len() != data.len() {
        return invalid(format!("envelope has {} entries, dataset {}", u.len(), data.len()));
    }
    Ok(())
}

/// The constant `+inf` is convex and has all signs `+1`; it is accepted
/// exactly when that vector passes, and then the upper boundary is `+inf`.
fn constant_infinity_accepted(stat: &MultiscaleStat, kappa: f64) -> bool {
    stat.t_naught(&vec![1; stat.n()]) <= kappa
}

/// Upper boundary by direct evaluation of every candidate.
pub fn upper_exact_brute<F: Scalar>(data: &SortedDataset<F>, kappa: f64) -> Result<Vec<F>> {
    let n = data.len();
    let stat = MultiscaleStat::new(n)?;
    if constant_infinity_accepted(&stat, kappa) {
        return Ok(vec![F::infinity(); n]);
    }
    let mut u = vec![F::neg_infinity(); n];
    let mut sigma = vec![0 as Sign; n];
    for line in enumerate_candidates(data) {
        let vals = line.values(data);
        signs_above(&vals, data.y(), &mut sigma);
        if stat.t_naught(&sigma) <= kappa {
            for (a, b) in u.iter_mut().zip(&vals) {
                *a = max_ext(*a, *b);
            }
        }
    }
    Ok(u)
}

/// Upper boundary. Degenerate lines go first, chords follow in slope
/// order; a candidate that cannot raise the current maximum is skipped and
/// every test stops at the first failing scale.
pub fn upper_exact<F: Scalar>(data: &SortedDataset<F>, kappa: f64) -> Result<Vec<F>> {
    let n = data.len();
    let stat = MultiscaleStat::new(n)?;
    if constant_infinity_accepted(&stat, kappa) {
        return Ok(vec![F::infinity(); n]);
    }
    let mut order: Vec<CandidateLine> = (0..n)
        .map(|k| CandidateLine::LeftDegenerate { k })
        .chain((0..n).map(|j| CandidateLine::RightDegenerate { j }))
        .collect();
    let mut chords: Vec<(F, CandidateLine)> = enumerate_candidates(data)
        .into_iter()
        .filter(|c| matches!(c, CandidateLine::Chord { .. }))
        .map(|c| (c.slope(data), c))
        .collect();
    chords.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite slopes"));
    order.extend(chords.into_iter().map(|(_, c)| c));

    let mut u = vec![F::neg_infinity(); n];
    let mut vals = vec![F::zero(); n];
    let mut sigma = vec![0 as Sign; n];
    let mut scanner = Scanner::new(&stat, &vec![-1; n], kappa);
    for line in order {
        line.values_into(data, &mut vals);
        if vals.iter().zip(&u).all(|(v, w)| v <= w) {
            continue;
        }
        signs_above(&vals, data.y(), &mut sigma);
        scanner.restart(&sigma);
        if scanner.settle() {
            for (a, b) in u.iter_mut().zip(&vals) {
                *a = max_ext(*a, *b);
            }
        }
    }
    Ok(u)
}

/// Whether `T_o(sign(y - U)) <= kappa`, i.e. the confidence set is nonempty.
pub fn feasibility_check<F: Scalar>(data: &SortedDataset<F>, u: &[F], kappa: f64) -> Result<bool> {
    check_len(data, u)?;
    let stat = MultiscaleStat::new(data.len())?;
    let mut sigma = vec![0 as Sign; data.len()];
    signs_below(u, data.y(), &mut sigma);
    Ok(stat.t_naught(&sigma) <= kappa)
}

pub(crate) fn prepare_lower<F: Scalar>(data: &SortedDataset<F>, u: &[F], kappa: f64) -> Result<(Roof<F>, TangentTable<F>)> {
    if !feasibility_check(data, u, kappa)? {
        return Err(BandError::Infeasible);
    }
    let roof = Roof::new(data, u.to_vec())?;
    let table = TangentTable::new(data, &roof);
    Ok((roof, table))
}

/// Lower boundary by direct evaluation of every tangent pair.
pub fn lower_exact_brute<F: Scalar>(data: &SortedDataset<F>, u: &[F], kappa: f64) -> Result<Vec<F>> {
    let (roof, table) = prepare_lower(data, u, kappa)?;
    let n = data.len();
    let stat = MultiscaleStat::new(n)?;
    let js: Vec<Option<usize>> = std::iter::once(None).chain(roof.j_indices().into_iter().map(Some)).collect();
    let mut lower = vec![F::infinity(); n];
    let mut vals = vec![F::zero(); n];
    let mut sigma = vec![0 as Sign; n];
    for &j in &js {
        for &k in &js {
            for (i, v) in vals.iter_mut().enumerate() {
                *v = crate::geometry::eval_tangent_pair(data, &roof, &table, j, k, i)?;
            }
            signs_below(&vals, data.y(), &mut sigma);
            if stat.t_naught(&sigma) <= kappa {
                for (a, b) in lower.iter_mut().zip(&vals) {
                    *a = min_ext(*a, *b);
                }
            }
        }
    }
    Ok(lower)
}

/// Per-`j` minimiser over all right partners, written into `lower`.
///
/// Partners are visited in order of right slope; whenever the next sign
/// vector lies below the previous one the scan resumes at the current scale
/// instead of restarting.
pub(crate) struct PairSearch<'a, F: Scalar> {
    data: &'a SortedDataset<F>,
    roof: &'a Roof<F>,
    table: &'a TangentTable<F>,
    k_order: Vec<Option<usize>>,
    scanner: Scanner<'a>,
    left: Vec<F>,
    vals: Vec<F>,
    sigma: Vec<Sign>,
    pub tests: usize,
}

impl<'a, F: Scalar> PairSearch<'a, F> {
    pub fn new(
        data: &'a SortedDataset<F>,
        stat: &'a MultiscaleStat,
        roof: &'a Roof<F>,
        table: &'a TangentTable<F>,
        kappa: f64,
    ) -> Self {
        let n = data.len();
        let mut ks: Vec<usize> = roof.j_indices();
        ks.sort_by(|&a, &b| {
            let (pa, pb) = (table.params[a].unwrap(), table.params[b].unwrap());
            pa.s_r
                .partial_cmp(&pb.s_r)
                .expect("slopes are never NaN")
                .then(pa.a_r.partial_cmp(&pb.a_r).expect("anchors are finite"))
                .then(a.cmp(&b))
        });
        let k_order = std::iter::once(None).chain(ks.into_iter().map(Some)).collect();
        Self {
            data,
            roof,
            table,
            k_order,
            scanner: Scanner::new(stat, &vec![1; n], kappa),
            left: vec![F::zero(); n],
            vals: vec![F::zero(); n],
            sigma: vec![0; n],
            tests: 0,
        }
    }

    fn set_left(&mut self, j: Option<usize>) {
        let (data, u) = (self.data, &self.roof.values);
        match j {
            None => self.left.iter_mut().for_each(|v| *v = F::neg_infinity()),
            Some(j) => {
                let p = self.table.params[j].as_ref().expect("j in J");
                for (i, v) in self.left.iter_mut().enumerate() {
                    *v = left_tangent_at(data, u, p, j, i);
                }
            }
        }
    }

    fn set_pair(&mut self, k: Option<usize>) {
        let (data, u) = (self.data, &self.roof.values);
        match k {
            None => self.vals.copy_from_slice(&self.left),
            Some(k) => {
                let p = self.table.params[k].as_ref().expect("k in J");
                for (i, v) in self.vals.iter_mut().enumerate() {
                    *v = max_ext(self.left[i], right_tangent_at(data, u, p, k, i));
                }
            }
        }
    }

    /// Lower `lower` by every accepted `h_{j,k}`; returns the number of
    /// partners accepted. `budget` caps the statistic evaluations.
    pub fn run_j(&mut self, j: Option<usize>, lower: &mut [F], budget: Option<usize>) -> usize {
        self.set_left(j);
        let mut accepted = 0;
        let mut warm = false;
        let mut used = 0;
        for idx in 0..self.k_order.len() {
            self.set_pair(self.k_order[idx]);
            if self.vals.iter().zip(lower.iter()).all(|(v, l)| v >= l) {
                continue;
            }
            if budget.is_some_and(|b| used >= b) {
                break;
            }
            signs_below(&self.vals, self.data.y(), &mut self.sigma);
            let below = warm && self.sigma.iter().zip(self.scanner.signs()).all(|(a, b)| a <= b);
            if below {
                for i in 0..self.sigma.len() {
                    if self.sigma[i] < self.scanner.signs()[i] {
                        self.scanner.flip_unchecked(i);
                    }
                }
            } else {
                self.scanner.restart(&self.sigma);
            }
            warm = true;
            used += 1;
            self.tests += 1;
            if self.scanner.settle() {
                accepted += 1;
                for (a, b) in lower.iter_mut().zip(&self.vals) {
                    *a = min_ext(*a, *b);
                }
            }
        }
        accepted
    }
}

/// Lower boundary below the roof `u`. Fails with [`BandError::Infeasible`]
/// when `u` itself is rejected.
pub fn lower_exact<F: Scalar>(data: &SortedDataset<F>, u: &[F], kappa: f64) -> Result<Vec<F>> {
    let (roof, table) = prepare_lower(data, u, kappa)?;
    let stat = MultiscaleStat::new(data.len())?;
    let mut search = PairSearch::new(data, &stat, &roof, &table, kappa);
    let mut lower = vec![F::infinity(); data.len()];
    let js = std::iter::once(None).chain(roof.j_indices().into_iter().map(Some));
    for j in js {
        search.run_j(j, &mut lower, None);
    }
    Ok(lower)
}

/// Exact convex band: critical value, upper boundary, feasibility, lower boundary.
pub fn band_exact<F: Scalar>(data: &SortedDataset<F>, alpha: f64, kappa: &mut KappaSource<'_>) -> Result<BandResult<F>> {
    let kappa = kappa.resolve(data.len(), alpha)?;
    let upper = upper_exact(data, kappa)?;
    let (x_min, x_max) = finite_range(data.x(), &upper);
    let (lower, feasible) = match lower_exact(data, &upper, kappa) {
        Ok(l) => (l, true),
        Err(BandError::Infeasible) => (Vec::new(), false),
        Err(e) => return Err(e),
    };
    Ok(BandResult {
        lower,
        upper,
        kappa,
        alpha,
        feasible,
        x_min,
        x_max,
        mode: BandMode::Exact,
        shape: Shape::Convex,
    })
}
