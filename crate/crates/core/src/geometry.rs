//! Extended-real geometry at the design points: candidate lines, convex
//! and concave envelopes, and tangent functions below a convex roof.
//!
//! Every function is evaluated only at design points. Infinite values are
//! handled by case analysis so that `inf - inf` is never formed, and values
//! at a defining abscissa are returned exactly rather than recomputed.

use crate::error::{invalid, Result};
use crate::scalar::{max_ext, Scalar};

/// Design points `x_1 <= ... <= x_n` with responses `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct SortedDataset<F: Scalar> {
    x: Vec<F>,
    y: Vec<F>,
}

impl<F: Scalar> SortedDataset<F> {
    pub fn new(x: Vec<F>, y: Vec<F>) -> Result<Self> {
        if x.len() != y.len() {
            return invalid(format!("x has {} entries but y has {}", x.len(), y.len()));
        }
        if x.is_empty() {
            return invalid("dataset must contain at least one point");
        }
        if let Some(i) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return invalid(format!("non-finite value at position {}", i % x.len()));
        }
        if let Some(i) = x.windows(2).position(|w| w[0] > w[1]) {
            return invalid(format!("x is not sorted at index {}", i + 1));
        }
        Ok(Self { x, y })
    }

    /// Sort pairs by `x`, keeping the input order of ties.
    pub fn from_unsorted(x: Vec<F>, y: Vec<F>) -> Result<Self> {
        if x.len() != y.len() {
            return invalid(format!("x has {} entries but y has {}", x.len(), y.len()));
        }
        if x.iter().any(|v| v.is_nan()) {
            return invalid("x contains NaN");
        }
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("NaN excluded"));
        let xs = order.iter().map(|&i| x[i]).collect();
        let ys = order.iter().map(|&i| y[i]).collect();
        Self::new(xs, ys)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[F] {
        &self.x
    }

    pub fn y(&self) -> &[F] {
        &self.y
    }

    /// Same design with responses `-y`.
    pub fn negated(&self) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.iter().map(|&v| -v).collect(),
        }
    }
}

/// An element of the candidate class for the upper band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CandidateLine {
    /// Straight line through points `j` and `k`, with `x_j < x_k`.
    Chord { j: usize, k: usize },
    /// `+inf` left of `x_k`, `y_k` at `x_k`, `-inf` to the right.
    LeftDegenerate { k: usize },
    /// `-inf` left of `x_j`, `y_j` at `x_j`, `+inf` to the right.
    RightDegenerate { j: usize },
}

impl CandidateLine {
    pub fn validate<F: Scalar>(&self, data: &SortedDataset<F>) -> Result<()> {
        let n = data.len();
        match *self {
            CandidateLine::Chord { j, k } => {
                if j >= n || k >= n {
                    return invalid(format!("chord ({j}, {k}) outside 0..{n}"));
                }
                if !(data.x[j] < data.x[k]) {
                    return invalid(format!("chord ({j}, {k}) needs x_j < x_k"));
                }
            }
            CandidateLine::LeftDegenerate { k: m } | CandidateLine::RightDegenerate { j: m } => {
                if m >= n {
                    return invalid(format!("degenerate index {m} outside 0..{n}"));
                }
            }
        }
        Ok(())
    }

    /// Slope in the extended sense: `-inf` and `+inf` for the degenerate kinds.
    pub fn slope<F: Scalar>(&self, data: &SortedDataset<F>) -> F {
        match *self {
            CandidateLine::Chord { j, k } => chord_slope(data, j, k),
            CandidateLine::LeftDegenerate { .. } => F::neg_infinity(),
            CandidateLine::RightDegenerate { .. } => F::infinity(),
        }
    }

    /// Value at design point `i`. The line must be valid for `data`.
    pub fn value_at<F: Scalar>(&self, data: &SortedDataset<F>, i: usize) -> F {
        let (x, y) = (&data.x, &data.y);
        let xi = x[i];
        match *self {
            CandidateLine::Chord { j, k } => {
                if xi == x[j] {
                    y[j]
                } else if xi == x[k] {
                    y[k]
                } else {
                    y[j] + chord_slope(data, j, k) * (xi - x[j])
                }
            }
            CandidateLine::LeftDegenerate { k } => {
                if xi < x[k] {
                    F::infinity()
                } else if xi == x[k] {
                    y[k]
                } else {
                    F::neg_infinity()
                }
            }
            CandidateLine::RightDegenerate { j } => {
                if xi > x[j] {
                    F::infinity()
                } else if xi == x[j] {
                    y[j]
                } else {
                    F::neg_infinity()
                }
            }
        }
    }

    pub fn values<F: Scalar>(&self, data: &SortedDataset<F>) -> Vec<F> {
        let mut out = vec![F::zero(); data.len()];
        self.values_into(data, &mut out);
        out
    }

    pub(crate) fn values_into<F: Scalar>(&self, data: &SortedDataset<F>, out: &mut [F]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.value_at(data, i);
        }
    }
}

pub(crate) fn chord_slope<F: Scalar>(data: &SortedDataset<F>, j: usize, k: usize) -> F {
    (data.y[k] - data.y[j]) / (data.x[k] - data.x[j])
}

/// Value of a candidate at design point `i`.
pub fn eval_candidate<F: Scalar>(line: &CandidateLine, data: &SortedDataset<F>, i: usize) -> Result<F> {
    line.validate(data)?;
    if i >= data.len() {
        return invalid(format!("design index {i} outside 0..{}", data.len()));
    }
    Ok(line.value_at(data, i))
}

/// All chords with distinct abscissae, then all left and all right
/// degenerate lines, each group in index order.
pub fn enumerate_candidates<F: Scalar>(data: &SortedDataset<F>) -> Vec<CandidateLine> {
    let n = data.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2 + 2 * n);
    for j in 0..n {
        for k in j + 1..n {
            if data.x[j] < data.x[k] {
                out.push(CandidateLine::Chord { j, k });
            }
        }
    }
    out.extend((0..n).map(|k| CandidateLine::LeftDegenerate { k }));
    out.extend((0..n).map(|j| CandidateLine::RightDegenerate { j }));
    out
}

/// Lower convex hull of the selected points, evaluated at every `x`.
/// Outside the selected abscissa range the result is `-inf`.
pub(crate) fn gcm_select<F: Scalar>(x: &[F], y: &[F], mut selected: impl FnMut(usize) -> bool) -> Vec<F> {
    let mut hull: Vec<(F, F)> = Vec::new();
    for i in 0..x.len() {
        if !selected(i) {
            continue;
        }
        let p = (x[i], y[i]);
        if let Some(last) = hull.last_mut() {
            if last.0 == p.0 {
                if p.1 < last.1 {
                    hull.pop();
                } else {
                    continue;
                }
            }
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= F::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    eval_hull(&hull, x)
}

fn eval_hull<F: Scalar>(hull: &[(F, F)], x: &[F]) -> Vec<F> {
    let mut out = vec![F::neg_infinity(); x.len()];
    let (Some(first), Some(last)) = (hull.first(), hull.last()) else {
        return out;
    };
    let mut seg = 0;
    for (o, &xi) in out.iter_mut().zip(x) {
        if xi < first.0 || xi > last.0 {
            continue;
        }
        while seg + 1 < hull.len() && hull[seg + 1].0 <= xi {
            seg += 1;
        }
        let (xa, ya) = hull[seg];
        if xi == xa {
            *o = ya;
        } else {
            let (xb, yb) = hull[seg + 1];
            *o = ya + (yb - ya) * ((xi - xa) / (xb - xa));
        }
    }
    out
}

/// Upper concave hull of the selected points, `-inf` outside their range.
pub(crate) fn lcm_select<F: Scalar>(x: &[F], y: &[F], selected: impl FnMut(usize) -> bool) -> Vec<F> {
    let neg: Vec<F> = y.iter().map(|&v| -v).collect();
    let mut out = gcm_select(x, &neg, selected);
    for v in &mut out {
        if v.is_finite() {
            *v = -*v;
        }
    }
    out
}

fn subset_mask<F: Scalar>(data: &SortedDataset<F>, points: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; data.len()];
    for &p in points {
        if p >= data.len() {
            return invalid(format!("point index {p} outside 0..{}", data.len()));
        }
        mask[p] = true;
    }
    Ok(mask)
}

/// Largest convex function lying below `y` at the selected points, at
/// every design point. Empty selections give all `-inf`.
pub fn greatest_convex_minorant<F: Scalar>(data: &SortedDataset<F>, points: &[usize]) -> Result<Vec<F>> {
    let mask = subset_mask(data, points)?;
    Ok(gcm_select(&data.x, &data.y, |i| mask[i]))
}

/// Smallest concave function lying above `y` at the selected points; `-inf`
/// outside the selected range.
pub fn least_concave_majorant<F: Scalar>(data: &SortedDataset<F>, points: &[usize]) -> Result<Vec<F>> {
    let mask = subset_mask(data, points)?;
    Ok(lcm_select(&data.x, &data.y, |i| mask[i]))
}

/// Convex roof `U` at the design points with its finite range and the
/// index set `J = { j : U_j >= y_j }`.
#[derive(Clone, Debug)]
pub struct Roof<F: Scalar> {
    pub values: Vec<F>,
    /// `min { x_i : U_i < inf }`, `+inf` if no such point.
    pub x_min: F,
    /// `max { x_i : U_i < inf }`, `-inf` if no such point.
    pub x_max: F,
    pub in_j: Vec<bool>,
}

impl<F: Scalar> Roof<F> {
    pub fn new(data: &SortedDataset<F>, values: Vec<F>) -> Result<Self> {
        if values.len() != data.len() {
            return invalid("roof length differs from dataset size");
        }
        if values.iter().any(|v| v.is_nan()) {
            return invalid("roof contains NaN");
        }
        let (x_min, x_max) = finite_range(data.x(), &values);
        let in_j = values.iter().zip(&data.y).map(|(&u, &y)| u >= y).collect();
        Ok(Self { values, x_min, x_max, in_j })
    }

    pub fn j_indices(&self) -> Vec<usize> {
        (0..self.in_j.len()).filter(|&j| self.in_j[j]).collect()
    }

    /// Nontrivial in the sense required for tangent constructions.
    pub fn is_nontrivial(&self) -> bool {
        self.x_min < self.x_max
    }
}

pub(crate) fn finite_range<F: Scalar>(x: &[F], u: &[F]) -> (F, F) {
    let mut lo = F::infinity();
    let mut hi = F::neg_infinity();
    for (&xi, &ui) in x.iter().zip(u) {
        if ui < F::infinity() {
            if xi < lo {
                lo = xi;
            }
            if xi > hi {
                hi = xi;
            }
        }
    }
    (lo, hi)
}

/// Left and right tangent parameters for one index of `J`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentParams<F: Scalar> {
    pub s_l: F,
    pub a_l: F,
    pub s_r: F,
    pub a_r: F,
}

fn slope_to_roof_left<F: Scalar>(yj: F, xj: F, ui: F, xi: F) -> F {
    if ui == F::infinity() {
        F::neg_infinity()
    } else if ui == F::neg_infinity() {
        F::infinity()
    } else {
        (yj - ui) / (xj - xi)
    }
}

fn slope_to_roof_right<F: Scalar>(yj: F, xj: F, uk: F, xk: F) -> F {
    if uk == F::infinity() {
        F::infinity()
    } else if uk == F::neg_infinity() {
        F::neg_infinity()
    } else {
        (uk - yj) / (xk - xj)
    }
}

pub(crate) fn tangent_params_unchecked<F: Scalar>(data: &SortedDataset<F>, roof: &Roof<F>, j: usize) -> TangentParams<F> {
    let (x, y, u) = (&data.x, &data.y, &roof.values);
    let (xj, yj) = (x[j], y[j]);

    let (mut s_l, mut a_l) = (F::neg_infinity(), xj);
    if xj > roof.x_min {
        let mut best: Option<(F, F)> = None;
        for i in 0..x.len() {
            if !(x[i] < xj) {
                break;
            }
            let s = slope_to_roof_left(yj, xj, u[i], x[i]);
            if best.is_none_or(|(b, _)| s >= b) {
                best = Some((s, x[i]));
            }
        }
        if let Some((s, a)) = best {
            if s > F::neg_infinity() {
                s_l = s;
                a_l = a;
            }
        }
    }

    let (mut s_r, mut a_r) = (F::infinity(), xj);
    if xj < roof.x_max {
        let mut best: Option<(F, F)> = None;
        for k in (0..x.len()).rev() {
            if !(x[k] > xj) {
                break;
            }
            let s = slope_to_roof_right(yj, xj, u[k], x[k]);
            if best.is_none_or(|(b, _)| s <= b) {
                best = Some((s, x[k]));
            }
        }
        if let Some((s, a)) = best {
            if s < F::infinity() {
                s_r = s;
                a_r = a;
            }
        }
    }

    TangentParams { s_l, a_l, s_r, a_r }
}

/// Tangent parameters of index `j`, which must belong to `J`.
pub fn tangent_params<F: Scalar>(data: &SortedDataset<F>, roof: &Roof<F>, j: usize) -> Result<TangentParams<F>> {
    if j >= data.len() || !roof.in_j[j] {
        return invalid(format!("index {j} is not in J (roof below the response)"));
    }
    Ok(tangent_params_unchecked(data, roof, j))
}

/// Parameters for every index; `None` outside `J`.
#[derive(Clone, Debug)]
pub struct TangentTable<F: Scalar> {
    pub params: Vec<Option<TangentParams<F>>>,
}

impl<F: Scalar> TangentTable<F> {
    pub fn new(data: &SortedDataset<F>, roof: &Roof<F>) -> Self {
        let params = (0..data.len())
            .map(|j| roof.in_j[j].then(|| tangent_params_unchecked(data, roof, j)))
            .collect();
        Self { params }
    }

    fn get(&self, j: usize) -> Result<&TangentParams<F>> {
        match self.params.get(j) {
            Some(Some(p)) => Ok(p),
            _ => invalid(format!("index {j} is not in J")),
        }
    }
}

#[inline]
fn line_value<F: Scalar>(yj: F, xj: F, s: F, x: F) -> F {
    if s.is_infinite() {
        if (x > xj) == (s > F::zero()) {
            F::infinity()
        } else {
            F::neg_infinity()
        }
    } else {
        yj + s * (x - xj)
    }
}

/// `h_j^l` at design point `i`.
#[inline]
pub(crate) fn left_tangent_at<F: Scalar>(data: &SortedDataset<F>, u: &[F], p: &TangentParams<F>, j: usize, i: usize) -> F {
    let xi = data.x[i];
    if xi < p.a_l {
        u[i]
    } else if xi == data.x[j] {
        data.y[j]
    } else if xi == p.a_l {
        u[i]
    } else {
        line_value(data.y[j], data.x[j], p.s_l, xi)
    }
}

/// `h_k^r` at design point `i`.
#[inline]
pub(crate) fn right_tangent_at<F: Scalar>(data: &SortedDataset<F>, u: &[F], p: &TangentParams<F>, k: usize, i: usize) -> F {
    let xi = data.x[i];
    if xi > p.a_r {
        u[i]
    } else if xi == data.x[k] {
        data.y[k]
    } else if xi == p.a_r {
        u[i]
    } else {
        line_value(data.y[k], data.x[k], p.s_r, xi)
    }
}

/// `max(h_j^l, h_k^r)` at design point `i`; `None` stands for the `-inf`
/// member on either side.
pub fn eval_tangent_pair<F: Scalar>(
    data: &SortedDataset<F>,
    roof: &Roof<F>,
    table: &TangentTable<F>,
    j: Option<usize>,
    k: Option<usize>,
    i: usize,
) -> Result<F> {
    if i >= data.len() {
        return invalid(format!("design index {i} outside 0..{}", data.len()));
    }
    let left = match j {
        Some(j) => left_tangent_at(data, &roof.values, table.get(j)?, j, i),
        None => F::neg_infinity(),
    };
    let right = match k {
        Some(k) => right_tangent_at(data, &roof.values, table.get(k)?, k, i),
        None => F::neg_infinity(),
    };
    Ok(max_ext(left, right))
}
