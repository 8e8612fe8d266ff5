//! Balanced fixed-size sampling from a window via the cube method.
//!
//! The pipeline is: reduce each window point to a positive scalar score,
//! scale the scores into inclusion probabilities that sum to the sample size,
//! then round those probabilities to a 0/1 selection in two phases. The
//! flight phase walks the probability vector along null-space directions of
//! the balancing constraints, so every step keeps the constraint totals
//! intact while pinning more coordinates to 0 or 1. The landing phase
//! resolves the last few coordinates by suppressing constraints one at a
//! time, last column first; the size constraint is never dropped, which is
//! what makes the sample size exact.

use rand::{Rng, RngExt};

use crate::{Error, FeatureVector, Result};

/// Floor applied to reduced scores so every point keeps a nonzero selection
/// probability.
pub const MIN_SCORE: f64 = 1e-6;

/// Absolute tolerance for probability sums and balance checks.
pub const BALANCE_TOL: f64 = 1e-9;

/// Probabilities within this distance of 0 or 1 are considered decided.
const BOUNDARY_EPS: f64 = 1e-12;

/// Strategy for collapsing a multivariate window point to one scalar score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reducer {
    /// Euclidean distance to the window centroid.
    #[default]
    CentroidDistance,
    /// Magnitude of the projection onto the window's leading principal
    /// component (power iteration, deterministic start).
    PrincipalComponent,
}

impl std::str::FromStr for Reducer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroid-distance" => Ok(Reducer::CentroidDistance),
            "principal-component" => Ok(Reducer::PrincipalComponent),
            other => Err(Error::UnknownReducer(other.to_string())),
        }
    }
}

impl std::fmt::Display for Reducer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Reducer::CentroidDistance => "centroid-distance",
            Reducer::PrincipalComponent => "principal-component",
        };
        f.write_str(s)
    }
}

/// Per-point inclusion probabilities that sum to the target sample size.
#[derive(Clone, Debug)]
pub struct InclusionProbabilities {
    values: Vec<f64>,
    target_size: usize,
}

impl InclusionProbabilities {
    /// Validates that every entry lies in [0, 1] and the entries sum to
    /// `target_size` within [`BALANCE_TOL`].
    pub fn new(values: Vec<f64>, target_size: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        if target_size == 0 || target_size > values.len() {
            return Err(Error::InvalidSampleSize {
                target: target_size,
                population: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InconsistentProbabilities(format!(
                    "entry {i} is {v}, outside [0, 1]"
                )));
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - target_size as f64).abs() > BALANCE_TOL {
            return Err(Error::InconsistentProbabilities(format!(
                "entries sum to {sum}, expected {target_size}"
            )));
        }
        Ok(Self {
            values,
            target_size,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Balancing constraints for the cube method, one row of auxiliary variables
/// per window point. Column 0 is always the inclusion probability itself,
/// which encodes the fixed-sample-size constraint.
#[derive(Clone, Debug)]
pub struct BalancingSpec {
    auxiliaries: Vec<Vec<f64>>,
    column_count: usize,
}

impl BalancingSpec {
    /// Only the size constraint: samples have exactly `target_size` points
    /// but are not otherwise balanced.
    pub fn size_only(pi: &InclusionProbabilities) -> Self {
        Self {
            auxiliaries: pi.values().iter().map(|&p| vec![p]).collect(),
            column_count: 1,
        }
    }

    /// Size constraint plus one column per feature, so selections also match
    /// the window's per-feature totals.
    pub fn with_features(
        pi: &InclusionProbabilities,
        window: &[FeatureVector],
    ) -> Result<Self> {
        validate_window(window)?;
        if window.len() != pi.len() {
            return Err(Error::InconsistentProbabilities(format!(
                "{} probabilities for {} window points",
                pi.len(),
                window.len()
            )));
        }
        let auxiliaries = pi
            .values()
            .iter()
            .zip(window)
            .map(|(&p, row)| {
                let mut aux = Vec::with_capacity(1 + row.len());
                aux.push(p);
                aux.extend_from_slice(row);
                aux
            })
            .collect();
        Ok(Self {
            auxiliaries,
            column_count: 1 + window[0].len(),
        })
    }

    pub fn auxiliaries(&self) -> &[Vec<f64>] {
        &self.auxiliaries
    }

    pub fn column_count(&self) -> usize {
        self.column_count
    }

    fn check_consistent(&self, pi: &InclusionProbabilities) -> Result<()> {
        if self.auxiliaries.len() != pi.len() {
            return Err(Error::InconsistentProbabilities(format!(
                "{} auxiliary rows for {} probabilities",
                self.auxiliaries.len(),
                pi.len()
            )));
        }
        for (i, (row, &p)) in self.auxiliaries.iter().zip(pi.values()).enumerate() {
            if row[0] != p {
                return Err(Error::InconsistentProbabilities(format!(
                    "auxiliary column 0 of row {i} is {}, probability is {p}",
                    row[0]
                )));
            }
        }
        Ok(())
    }

    /// Constraint matrix rows divided by the initial probabilities. Rows with
    /// zero probability are never consulted (those units are already out), so
    /// they are left as zeros.
    fn adjusted(&self) -> Vec<Vec<f64>> {
        self.auxiliaries
            .iter()
            .map(|row| {
                let p = row[0];
                if p > 0.0 {
                    row.iter().map(|&a| a / p).collect()
                } else {
                    vec![0.0; row.len()]
                }
            })
            .collect()
    }
}

/// Final 0/1 selection over the window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSelection {
    indicator: Vec<bool>,
    selected_indices: Vec<usize>,
}

impl SampleSelection {
    fn from_probabilities(prob: &[f64]) -> Self {
        let indicator: Vec<bool> = prob.iter().map(|&p| p > 0.5).collect();
        let selected_indices = indicator
            .iter()
            .enumerate()
            .filter_map(|(i, &sel)| sel.then_some(i))
            .collect();
        Self {
            indicator,
            selected_indices,
        }
    }

    pub fn indicator(&self) -> &[bool] {
        &self.indicator
    }

    /// Chosen positions in ascending order.
    pub fn selected_indices(&self) -> &[usize] {
        &self.selected_indices
    }

    pub fn size(&self) -> usize {
        self.selected_indices.len()
    }
}

pub(crate) fn validate_window(window: &[FeatureVector]) -> Result<()> {
    if window.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let dim = window[0].len();
    if dim == 0 {
        return Err(Error::RaggedRow {
            row: 0,
            got: 0,
            expected: 1,
        });
    }
    for (i, row) in window.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::RaggedRow {
                row: i,
                got: row.len(),
                expected: dim,
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row: i });
        }
    }
    Ok(())
}

/// Collapses each window point to a strictly positive scalar. Whatever the
/// strategy produces is shifted so the minimum lands at [`MIN_SCORE`].
pub fn reduce_to_scalar(window: &[FeatureVector], reducer: Reducer) -> Result<Vec<f64>> {
    validate_window(window)?;
    let raw = match reducer {
        Reducer::CentroidDistance => centroid_distances(window),
        Reducer::PrincipalComponent => principal_component_magnitudes(window),
    };
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(raw.into_iter().map(|s| s - min + MIN_SCORE).collect())
}

fn centroid(window: &[FeatureVector]) -> Vec<f64> {
    let dim = window[0].len();
    let mut center = vec![0.0; dim];
    for row in window {
        for (c, &x) in center.iter_mut().zip(row) {
            *c += x;
        }
    }
    let n = window.len() as f64;
    for c in &mut center {
        *c /= n;
    }
    center
}

fn centroid_distances(window: &[FeatureVector]) -> Vec<f64> {
    let center = centroid(window);
    window
        .iter()
        .map(|row| {
            row.iter()
                .zip(&center)
                .map(|(&x, &c)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

fn principal_component_magnitudes(window: &[FeatureVector]) -> Vec<f64> {
    let dim = window[0].len();
    let center = centroid(window);
    let mut direction = vec![1.0 / (dim as f64).sqrt(); dim];
    for _ in 0..100 {
        let mut next = vec![0.0; dim];
        for row in window {
            let dot: f64 = row
                .iter()
                .zip(&center)
                .zip(&direction)
                .map(|((&x, &c), &v)| (x - c) * v)
                .sum();
            for ((n, &x), &c) in next.iter_mut().zip(row).zip(&center) {
                *n += (x - c) * dot;
            }
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-12 {
            return vec![0.0; window.len()];
        }
        for v in &mut next {
            *v /= norm;
        }
        direction = next;
    }
    window
        .iter()
        .map(|row| {
            row.iter()
                .zip(&center)
                .zip(&direction)
                .map(|((&x, &c), &v)| (x - c) * v)
                .sum::<f64>()
                .abs()
        })
        .collect()
}

/// Scales positive scores into probabilities proportional to them with sum
/// `target_size`. Entries the proportional scaling would push above 1 are
/// capped there and the remainder rescaled; each pass fixes at least one
/// entry, so the loop terminates.
pub fn compute_inclusion_probabilities(
    scores: &[f64],
    target_size: usize,
) -> Result<InclusionProbabilities> {
    if scores.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    if target_size == 0 || target_size > scores.len() {
        return Err(Error::InvalidSampleSize {
            target: target_size,
            population: scores.len(),
        });
    }
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "score {i} is {s}; scores must be finite and positive"
            )));
        }
    }

    let n = scores.len();
    let mut pi = vec![0.0; n];
    let mut capped = vec![false; n];
    loop {
        let remaining = target_size as f64 - capped.iter().filter(|&&c| c).count() as f64;
        let mass: f64 = scores
            .iter()
            .zip(&capped)
            .filter(|(_, &c)| !c)
            .map(|(&s, _)| s)
            .sum();
        let mut newly_capped = false;
        for i in 0..n {
            if capped[i] {
                continue;
            }
            pi[i] = scores[i] * remaining / mass;
            if pi[i] >= 1.0 {
                pi[i] = 1.0;
                capped[i] = true;
                newly_capped = true;
            }
        }
        if !newly_capped {
            break;
        }
    }
    InclusionProbabilities::new(pi, target_size)
}

/// Pins near-boundary probabilities to exact 0/1 and drops them from the
/// undecided list.
fn snap_decided(prob: &mut [f64], undecided: &mut Vec<usize>) {
    undecided.retain(|&i| {
        if prob[i] <= BOUNDARY_EPS {
            prob[i] = 0.0;
            false
        } else if prob[i] >= 1.0 - BOUNDARY_EPS {
            prob[i] = 1.0;
            false
        } else {
            true
        }
    });
}

/// A nonzero vector in the null space of `m` (rows are constraints), found by
/// Gauss-Jordan elimination with partial pivoting: set one free column to 1
/// and read the pivot entries off the reduced matrix. Returns `None` only
/// when every column is a pivot.
fn null_vector(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let rows = m.len();
    if rows == 0 {
        return None;
    }
    let cols = m[0].len();
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    if scale == 0.0 {
        let mut v = vec![0.0; cols];
        v[0] = 1.0;
        return Some(v);
    }
    let tol = scale * 1e-11;

    let mut pivot_col = vec![usize::MAX; rows];
    let mut is_pivot = vec![false; cols];
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut best = r;
        for i in r + 1..rows {
            if m[i][c].abs() > m[best][c].abs() {
                best = i;
            }
        }
        if m[best][c].abs() <= tol {
            continue;
        }
        m.swap(r, best);
        let pivot = m[r][c];
        for v in &mut m[r] {
            *v /= pivot;
        }
        m[r][c] = 1.0;
        for i in 0..rows {
            if i == r {
                continue;
            }
            let factor = m[i][c];
            if factor != 0.0 {
                let (head, tail) = if i < r {
                    let (a, b) = m.split_at_mut(r);
                    (&mut a[i], &b[0])
                } else {
                    let (a, b) = m.split_at_mut(i);
                    (&mut b[0], &a[r])
                };
                for (x, &p) in head.iter_mut().zip(tail) {
                    *x -= factor * p;
                }
                head[c] = 0.0;
            }
        }
        pivot_col[r] = c;
        is_pivot[c] = true;
        r += 1;
    }

    let free = (0..cols).find(|&c| !is_pivot[c])?;
    let mut v = vec![0.0; cols];
    v[free] = 1.0;
    for row in 0..r {
        v[pivot_col[row]] = -m[row][free];
    }
    Some(v)
}

/// One martingale step: move the probabilities of `candidates` along a
/// null-space direction of their first `ncols` constraints until some
/// coordinate reaches 0 or 1. The step size is positive with the probability
/// that keeps each coordinate's expectation unchanged. Returns false when no
/// usable direction exists.
fn null_step<R: Rng>(
    prob: &mut [f64],
    adjusted: &[Vec<f64>],
    candidates: &[usize],
    ncols: usize,
    rng: &mut R,
) -> bool {
    let k = candidates.len();
    let mut m = vec![vec![0.0; k]; ncols];
    for (col, &unit) in candidates.iter().enumerate() {
        for (row, cell) in m.iter_mut().enumerate() {
            cell[col] = adjusted[unit][row];
        }
    }
    let mut u = match null_vector(m) {
        Some(u) => u,
        None => return false,
    };
    let max_component = u.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    for v in &mut u {
        *v /= max_component;
    }

    let mut up = f64::INFINITY;
    let mut down = f64::INFINITY;
    for (&unit, &d) in candidates.iter().zip(&u) {
        let p = prob[unit];
        if d > 1e-12 {
            up = up.min((1.0 - p) / d);
            down = down.min(p / d);
        } else if d < -1e-12 {
            up = up.min(p / -d);
            down = down.min((1.0 - p) / -d);
        }
    }
    if !up.is_finite() || !down.is_finite() {
        return false;
    }

    let lambda = if rng.random::<f64>() * (up + down) < down {
        up
    } else {
        -down
    };
    for (&unit, &d) in candidates.iter().zip(&u) {
        prob[unit] = (prob[unit] + lambda * d).clamp(0.0, 1.0);
    }
    true
}

/// When rounding leaves the coordinate that hit its bound marginally inside
/// the open interval, force the nearest candidate onto its boundary so the
/// walk always makes progress.
fn snap_nearest(prob: &mut [f64], undecided: &mut Vec<usize>, candidates: &[usize]) {
    let nearest = candidates
        .iter()
        .copied()
        .filter(|i| undecided.contains(i))
        .min_by(|&a, &b| {
            let da = prob[a].min(1.0 - prob[a]);
            let db = prob[b].min(1.0 - prob[b]);
            da.total_cmp(&db)
        });
    if let Some(i) = nearest {
        prob[i] = if prob[i] < 0.5 { 0.0 } else { 1.0 };
        undecided.retain(|&j| j != i);
    }
}

/// Flight phase. Walks the probability vector along null-space directions of
/// the balancing constraints until at most `column_count` coordinates remain
/// fractional, calling `observe` with the vector after every step. Every step
/// leaves the constraint totals of the relaxed vector unchanged.
pub fn cube_flight_observed<R: Rng, F: FnMut(&[f64])>(
    pi: &InclusionProbabilities,
    spec: &BalancingSpec,
    rng: &mut R,
    mut observe: F,
) -> Result<Vec<f64>> {
    spec.check_consistent(pi)?;
    let mut prob = pi.values().to_vec();
    let adjusted = spec.adjusted();
    let mut undecided: Vec<usize> = (0..prob.len()).collect();
    snap_decided(&mut prob, &mut undecided);

    let ncols = spec.column_count();
    while undecided.len() > ncols {
        let candidates: Vec<usize> = undecided[..ncols + 1].to_vec();
        if !null_step(&mut prob, &adjusted, &candidates, ncols, rng) {
            break;
        }
        let before = undecided.len();
        snap_decided(&mut prob, &mut undecided);
        if undecided.len() == before {
            snap_nearest(&mut prob, &mut undecided, &candidates);
        }
        observe(&prob);
    }
    Ok(prob)
}

/// Flight phase without instrumentation.
pub fn cube_flight<R: Rng>(
    pi: &InclusionProbabilities,
    spec: &BalancingSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    cube_flight_observed(pi, spec, rng, |_| {})
}

/// Landing phase. Resolves the remaining fractional coordinates by running
/// flight steps under progressively fewer constraints: with k undecided
/// units, only the first min(column_count, k-1) constraint columns stay
/// active, so trailing columns are dropped first and the size column
/// (column 0) is dropped last, only when a single unit remains. That last
/// unit is resolved by a Bernoulli draw on its residual probability.
pub fn cube_land<R: Rng>(
    partial: &[f64],
    spec: &BalancingSpec,
    rng: &mut R,
) -> Result<SampleSelection> {
    if partial.len() != spec.auxiliaries().len() {
        return Err(Error::LengthMismatch {
            what: "partial probabilities",
            expected: spec.auxiliaries().len(),
            got: partial.len(),
        });
    }
    let mut prob = partial.to_vec();
    let adjusted = spec.adjusted();
    let mut undecided: Vec<usize> = (0..prob.len()).collect();
    snap_decided(&mut prob, &mut undecided);

    while undecided.len() > 1 {
        let kept = spec.column_count().min(undecided.len() - 1);
        let candidates = undecided.clone();
        if !null_step(&mut prob, &adjusted, &candidates, kept, rng) {
            for &i in &undecided {
                prob[i] = if rng.random::<f64>() < prob[i] { 1.0 } else { 0.0 };
            }
            undecided.clear();
            break;
        }
        let before = undecided.len();
        snap_decided(&mut prob, &mut undecided);
        if undecided.len() == before {
            snap_nearest(&mut prob, &mut undecided, &candidates);
        }
    }
    if let [last] = undecided[..] {
        prob[last] = if rng.random::<f64>() < prob[last] {
            1.0
        } else {
            0.0
        };
    }
    Ok(SampleSelection::from_probabilities(&prob))
}

/// Draws one balanced sample: flight then landing, balancing on the size
/// constraint plus every raw feature column so selections track the window's
/// feature totals. Deterministic for a fixed window and seed.
pub fn cube_sample<R: Rng>(
    window: &[FeatureVector],
    pi: &InclusionProbabilities,
    rng: &mut R,
) -> Result<SampleSelection> {
    let spec = BalancingSpec::with_features(pi, window)?;
    let partial = cube_flight(pi, &spec, rng)?;
    cube_land(&partial, &spec, rng)
}
