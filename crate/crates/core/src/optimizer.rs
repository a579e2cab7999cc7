//! Expected-utility evaluation and maximization over sorted bid vectors.
//!
//! Both payment rules admit an expected utility that is a sum of
//! single-coordinate terms once the Stieltjes integral over (b_{i+1}, b_i]
//! is written as a difference of cumulative integrals S(x) = int_(0,x] t dF:
//!
//!   discriminatory: c_j(x) = G_{K-j+1}(x) (v_j - x)
//!   uniform:        c_1(x) = phi_1(x),  c_j(x) = phi_j(x) + psi_{j-1}(x)
//!     phi_i(x) = G_{K-i+1}(x) V_i - i S_{K-i+1}(x)
//!     psi_i(x) = (G_{K-i+1}(x) - G_{K-i}(x)) (V_i - i x)
//!                - G_{K-i+1}(x) V_i + i S_{K-i+1}(x)
//!
//! with V_i = v_1 + ... + v_i: on the event that exactly i units are won and
//! the clearing price is the bidder's own b_{i+1}, that price is paid i
//! times. The leftover psi_K(b_{K+1}) at the fixed b_{K+1} = 0 cancels
//! identically, so U(b) = sum_j c_j(b_j) and the sorted maximization is a
//! prefix-max dynamic program over the candidate grid.

use thiserror::Error;

use crate::bids::{AuctionFormat, BidVector, ValuationVector};
use crate::cdf::Cdf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("profile has {profile} marginals, expected K = {k}")]
    ProfileDimension { profile: usize, k: usize },
    #[error("infeasible constraints: {0}")]
    Infeasible(String),
    #[error("empty superlevel set: threshold {threshold} above maximum {max}")]
    EmptySuperlevel { threshold: f64, max: f64 },
}

/// K marginal CDF evaluators, ordered from beta_1 (the largest opposing
/// bid). Entries may cross (estimates are not forced monotone across
/// marginals); the evaluator just applies the formulas.
pub struct CdfProfile<'a> {
    pub marginals: Vec<&'a dyn Cdf>,
}

impl<'a> CdfProfile<'a> {
    pub fn new(marginals: Vec<&'a dyn Cdf>) -> Self {
        CdfProfile { marginals }
    }

    pub fn k(&self) -> usize {
        self.marginals.len()
    }
}

/// Per-coordinate interval constraints, optional exact pins, and the
/// uniform-format truthful pin b_1 = v_1.
#[derive(Debug, Clone, PartialEq)]
pub struct BidConstraints {
    boxes: Vec<(f64, f64)>,
    pins: Vec<Option<f64>>,
    truthful_first: bool,
}

impl BidConstraints {
    pub fn free(k: usize) -> Self {
        BidConstraints { boxes: vec![(0.0, 1.0); k], pins: vec![None; k], truthful_first: false }
    }

    pub fn with_boxes(boxes: Vec<(f64, f64)>) -> Self {
        let k = boxes.len();
        BidConstraints { boxes, pins: vec![None; k], truthful_first: false }
    }

    /// Pin coordinate `j` (1-based) to an exact value.
    pub fn pin(mut self, j: usize, value: f64) -> Self {
        self.pins[j - 1] = Some(value);
        self
    }

    /// Force b_1 = v_1.
    pub fn truthful_first(mut self) -> Self {
        self.truthful_first = true;
        self
    }

    pub fn k(&self) -> usize {
        self.boxes.len()
    }

    pub fn boxes(&self) -> &[(f64, f64)] {
        &self.boxes
    }

    /// Effective [lo, hi] per coordinate after pins (and the truthful pin).
    fn effective(&self, v: &ValuationVector) -> Result<Vec<(f64, f64)>, OptimizerError> {
        let mut out = Vec::with_capacity(self.boxes.len());
        for (j, (&(lo, hi), pin)) in self.boxes.iter().zip(&self.pins).enumerate() {
            if lo > hi {
                return Err(OptimizerError::Infeasible(format!("box {} is empty: [{lo}, {hi}]", j + 1)));
            }
            let mut pin = *pin;
            if j == 0 && self.truthful_first {
                pin = Some(v.get(1));
            }
            let (lo, hi) = match pin {
                Some(p) => {
                    if p < lo - 1e-12 || p > hi + 1e-12 {
                        return Err(OptimizerError::Infeasible(format!(
                            "pin {p} for coordinate {} outside its box [{lo}, {hi}]",
                            j + 1
                        )));
                    }
                    (p, p)
                }
                None => (lo, hi),
            };
            out.push((lo, hi));
        }
        Ok(out)
    }

    pub fn grid_points(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        for &(lo, hi) in &self.boxes {
            pts.push(lo);
            pts.push(hi);
        }
        for p in self.pins.iter().flatten() {
            pts.push(*p);
        }
        pts
    }
}

fn check_dims(profile: &CdfProfile, k: usize) -> Result<(), OptimizerError> {
    if profile.k() != k {
        return Err(OptimizerError::ProfileDimension { profile: profile.k(), k });
    }
    Ok(())
}

/// The shared c_j arithmetic: g_j/s_j come from marginal K-j+1, g_hi/s_hi
/// from marginal K-j+2 (only consumed for uniform pricing with j >= 2). The
/// DP tables and the single-point evaluator both funnel through here so
/// their values agree bitwise.
#[allow(clippy::too_many_arguments)]
fn coord_term(
    format: AuctionFormat,
    j: usize,
    x: f64,
    v_j: f64,
    vsum_j: f64,
    vsum_prev: f64,
    g_j: f64,
    s_j: f64,
    g_hi: f64,
    s_hi: f64,
) -> f64 {
    match format {
        AuctionFormat::Discriminatory => g_j * (v_j - x),
        AuctionFormat::Uniform => {
            // phi_j
            let mut total = g_j * vsum_j - j as f64 * s_j;
            if j >= 2 {
                // psi_{j-1}: i units won, own bid priced i times.
                let i = (j - 1) as f64;
                total += (g_hi - g_j) * (vsum_prev - i * x) - g_hi * vsum_prev + i * s_hi;
            }
            total
        }
    }
}

/// Single-coordinate term values for every grid point (or a single point).
struct CoordTerms<'a> {
    format: AuctionFormat,
    profile: &'a CdfProfile<'a>,
    vsum: Vec<f64>,
    v: &'a ValuationVector,
}

impl<'a> CoordTerms<'a> {
    fn new(format: AuctionFormat, profile: &'a CdfProfile<'a>, v: &'a ValuationVector) -> Self {
        CoordTerms { format, profile, vsum: v.prefix_sums(), v }
    }

    /// c_j(x), 1-based coordinate j.
    fn eval(&self, j: usize, x: f64) -> f64 {
        let k = self.profile.k();
        let m = self.profile.marginals[k - j];
        let needs_s = self.format == AuctionFormat::Uniform;
        let g_j = m.eval(x);
        let s_j = if needs_s { m.stieltjes_x_upto(x) } else { 0.0 };
        let (g_hi, s_hi) = if needs_s && j >= 2 {
            let hi_m = self.profile.marginals[k - j + 1];
            (hi_m.eval(x), hi_m.stieltjes_x_upto(x))
        } else {
            (0.0, 0.0)
        };
        coord_term(
            self.format,
            j,
            x,
            self.v.get(j),
            self.vsum[j],
            if j >= 2 { self.vsum[j - 1] } else { 0.0 },
            g_j,
            s_j,
            g_hi,
            s_hi,
        )
    }
}

/// Expected utility of a sorted bid vector under the given marginals.
pub fn eval_expected_utility(
    format: AuctionFormat,
    profile: &CdfProfile,
    b: &BidVector,
    v: &ValuationVector,
) -> Result<f64, OptimizerError> {
    check_dims(profile, b.k())?;
    check_dims(profile, v.k())?;
    let terms = CoordTerms::new(format, profile, v);
    let mut acc = 0.0;
    for j in (1..=b.k()).rev() {
        acc += terms.eval(j, b.get(j));
    }
    Ok(acc)
}

/// Union of all marginal jump/breakpoints, {0, 1}, the valuations, and the
/// constraint endpoints/pins, deduplicated and sorted.
pub fn candidate_grid(profile: &CdfProfile, v: &ValuationVector, constraints: &BidConstraints) -> Vec<f64> {
    let mut pts = vec![0.0, 1.0];
    for m in &profile.marginals {
        pts.extend(m.grid_hints());
    }
    pts.extend(v.values());
    pts.extend(constraints.grid_points());
    pts.retain(|x| (0.0..=1.0).contains(x));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

struct DpTables {
    // c[j-1][p] = c_j(grid[p]); feasible[j-1][p] per effective intervals.
    c: Vec<Vec<f64>>,
    feasible: Vec<Vec<bool>>,
}

fn build_tables(
    terms: &CoordTerms,
    grid: &[f64],
    effective: &[(f64, f64)],
) -> DpTables {
    let k = effective.len();
    // One bulk (F, S) row per marginal; grid-backed estimators hand their
    // stored arrays straight back, which keeps the per-round learner
    // maximizations linear in the grid size.
    let rows: Vec<(Vec<f64>, Vec<f64>)> =
        terms.profile.marginals.iter().map(|m| m.table_row(grid)).collect();
    let mut c = Vec::with_capacity(k);
    let mut feasible = Vec::with_capacity(k);
    for j in 1..=k {
        let (lo, hi) = effective[j - 1];
        let row_f: Vec<bool> = grid.iter().map(|&g| g >= lo && g <= hi).collect();
        let (g_row, s_row) = &rows[k - j];
        let (hi_row, shi_row) = if j >= 2 { (&rows[k - j + 1].0, &rows[k - j + 1].1) } else { (g_row, s_row) };
        let row_c: Vec<f64> = (0..grid.len())
            .map(|p| {
                if !row_f[p] {
                    return f64::NEG_INFINITY;
                }
                coord_term(
                    terms.format,
                    j,
                    grid[p],
                    terms.v.get(j),
                    terms.vsum[j],
                    if j >= 2 { terms.vsum[j - 1] } else { 0.0 },
                    g_row[p],
                    s_row[p],
                    if j >= 2 { hi_row[p] } else { 0.0 },
                    if j >= 2 { shi_row[p] } else { 0.0 },
                )
            })
            .collect();
        c.push(row_c);
        feasible.push(row_f);
    }
    DpTables { c, feasible }
}

/// Prefix-max DP. Returns (grid indices of the lexicographically smallest
/// maximizer, value), or None if no sorted feasible vector exists.
fn dp_argmax(tables: &DpTables, grid_len: usize) -> Option<(Vec<usize>, f64)> {
    let k = tables.c.len();
    // dp[j-1][p]: best value of coordinates j..K with b_j = grid[p].
    // parent[j-1][p]: chosen index for coordinate j+1.
    let mut dp = vec![f64::NEG_INFINITY; grid_len];
    let mut parents: Vec<Vec<usize>> = Vec::with_capacity(k);
    for j in (1..=k).rev() {
        let mut parent = vec![usize::MAX; grid_len];
        let next = if j == k {
            tables.c[j - 1].clone()
        } else {
            // best[p] = max_{q <= p} dp[q], smallest q on ties (lexicographic).
            let mut best = f64::NEG_INFINITY;
            let mut best_q = usize::MAX;
            let mut row = vec![f64::NEG_INFINITY; grid_len];
            for p in 0..grid_len {
                if dp[p] > best {
                    best = dp[p];
                    best_q = p;
                }
                if tables.feasible[j - 1][p] && best_q != usize::MAX {
                    row[p] = tables.c[j - 1][p] + best;
                    parent[p] = best_q;
                }
            }
            row
        };
        dp = next;
        parents.push(parent);
    }
    parents.reverse();
    // Smallest index achieving the max gives the smallest b_1.
    let (mut p, mut best) = (usize::MAX, f64::NEG_INFINITY);
    for q in 0..grid_len {
        if dp[q] > best {
            best = dp[q];
            p = q;
        }
    }
    if p == usize::MAX || best == f64::NEG_INFINITY {
        return None;
    }
    let mut idx = Vec::with_capacity(k);
    idx.push(p);
    for j in 1..k {
        p = parents[j - 1][p];
        idx.push(p);
    }
    Some((idx, best))
}

fn vector_value(terms: &CoordTerms, values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in (1..=values.len()).rev() {
        acc += terms.eval(j, values[j - 1]);
    }
    acc
}

/// Maximize expected utility over sorted grid vectors under the constraints.
/// Ties break toward the lexicographically smallest vector, except that a
/// vector all of whose coordinates are 0 or 1 is preferred when it ties.
pub fn maximize(
    format: AuctionFormat,
    profile: &CdfProfile,
    v: &ValuationVector,
    constraints: &BidConstraints,
) -> Result<(BidVector, f64), OptimizerError> {
    let grid = candidate_grid(profile, v, constraints);
    maximize_on_grid(format, profile, v, constraints, &grid)
}

/// Same as `maximize` but over a caller-supplied grid (must be sorted,
/// deduplicated, and contain every pin).
pub fn maximize_on_grid(
    format: AuctionFormat,
    profile: &CdfProfile,
    v: &ValuationVector,
    constraints: &BidConstraints,
    grid: &[f64],
) -> Result<(BidVector, f64), OptimizerError> {
    let k = constraints.k();
    check_dims(profile, k)?;
    check_dims(profile, v.k())?;
    let effective = constraints.effective(v)?;
    let terms = CoordTerms::new(format, profile, v);
    let tables = build_tables(&terms, grid, &effective);
    let (idx, value) = dp_argmax(&tables, grid.len())
        .ok_or_else(|| OptimizerError::Infeasible("no sorted vector satisfies the constraints".into()))?;
    // Prefer an all-{0,1} vector on exact ties (step profiles produce exact
    // ties across zero-mass regions, and these vectors are the K-armed
    // structure the separated instances rely on).
    for ones in 0..=k {
        let candidate: Vec<f64> = (0..k).map(|j| if j < ones { 1.0 } else { 0.0 }).collect();
        let feasible = candidate
            .iter()
            .zip(&effective)
            .all(|(&x, &(lo, hi))| x >= lo && x <= hi);
        if feasible && vector_value(&terms, &candidate) == value {
            return Ok((BidVector::from_sorted_unchecked(candidate), value));
        }
    }
    let values: Vec<f64> = idx.iter().map(|&p| grid[p]).collect();
    Ok((BidVector::from_sorted_unchecked(values), value))
}

/// For each coordinate, the [min, max] of its value over all sorted feasible
/// grid vectors with utility >= threshold. Computed by forward/backward DP
/// sweeps; always contains every maximizer when threshold <= max.
pub fn superlevel_hull(
    format: AuctionFormat,
    profile: &CdfProfile,
    v: &ValuationVector,
    constraints: &BidConstraints,
    threshold: f64,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>, OptimizerError> {
    let k = constraints.k();
    check_dims(profile, k)?;
    let effective = constraints.effective(v)?;
    let terms = CoordTerms::new(format, profile, v);
    let tables = build_tables(&terms, grid, &effective);
    let m = grid.len();

    // bwd[j-1][p]: best over coordinates j..K with b_j = grid[p].
    let mut bwd: Vec<Vec<f64>> = vec![vec![f64::NEG_INFINITY; m]; k];
    for j in (1..=k).rev() {
        if j == k {
            bwd[j - 1] = tables.c[j - 1].clone();
        } else {
            let mut best = f64::NEG_INFINITY;
            for p in 0..m {
                best = best.max(bwd[j][p]);
                if tables.feasible[j - 1][p] && best > f64::NEG_INFINITY {
                    bwd[j - 1][p] = tables.c[j - 1][p] + best;
                }
            }
        }
    }
    // fwd[j-1][p]: best over coordinates 1..j with b_j = grid[p].
    let mut fwd: Vec<Vec<f64>> = vec![vec![f64::NEG_INFINITY; m]; k];
    for j in 1..=k {
        if j == 1 {
            fwd[0] = tables.c[0].clone();
        } else {
            let mut best = f64::NEG_INFINITY;
            for p in (0..m).rev() {
                best = best.max(fwd[j - 2][p]);
                if tables.feasible[j - 1][p] && best > f64::NEG_INFINITY {
                    fwd[j - 1][p] = tables.c[j - 1][p] + best;
                }
            }
        }
    }

    let mut hulls = Vec::with_capacity(k);
    let mut global_max = f64::NEG_INFINITY;
    for j in 1..=k {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        // prefix max over bwd[j] as p grows.
        let mut suffix_best = f64::NEG_INFINITY;
        let mut combined = vec![f64::NEG_INFINITY; m];
        for p in 0..m {
            if j < k {
                suffix_best = suffix_best.max(bwd[j][p]);
            } else {
                suffix_best = 0.0;
            }
            if fwd[j - 1][p] > f64::NEG_INFINITY && (j == k || suffix_best > f64::NEG_INFINITY) {
                combined[p] = fwd[j - 1][p] + suffix_best;
            }
        }
        for p in 0..m {
            global_max = global_max.max(combined[p]);
            if combined[p] > f64::NEG_INFINITY && combined[p] >= threshold {
                lo = lo.min(grid[p]);
                hi = hi.max(grid[p]);
            }
        }
        if lo > hi {
            return Err(OptimizerError::EmptySuperlevel { threshold, max: global_max });
        }
        hulls.push((lo, hi));
    }
    Ok(hulls)
}

/// Coordinate-wise continuum polish: since U(b) = sum_j c_j(b_j), each
/// coordinate can be improved independently inside the gap left by its
/// neighbors. Used by the regret oracle to close the last O(grid-spacing^2)
/// of value that an off-grid optimum of a smooth profile costs.
pub(crate) fn polish(
    format: AuctionFormat,
    profile: &CdfProfile,
    v: &ValuationVector,
    constraints: &BidConstraints,
    b: &BidVector,
    radius: f64,
) -> (BidVector, f64) {
    let terms = CoordTerms::new(format, profile, v);
    let effective = constraints.effective(v).expect("polish called with feasible constraints");
    let k = b.k();
    let mut values = b.values().to_vec();
    for _sweep in 0..3 {
        for j in 1..=k {
            let upper_nb = if j == 1 { 1.0 } else { values[j - 2] };
            let lower_nb = if j == k { 0.0 } else { values[j] };
            let (clo, chi) = effective[j - 1];
            let lo = (values[j - 1] - radius).max(lower_nb).max(clo);
            let hi = (values[j - 1] + radius).min(upper_nb).min(chi);
            if hi <= lo {
                continue;
            }
            // Golden-section maximization of the single-coordinate term.
            let gr = 0.618_033_988_749_894_9;
            let (mut a, mut d) = (lo, hi);
            let mut bpt = d - gr * (d - a);
            let mut cpt = a + gr * (d - a);
            let mut fb = terms.eval(j, bpt);
            let mut fc = terms.eval(j, cpt);
            for _ in 0..60 {
                if fb >= fc {
                    d = cpt;
                    cpt = bpt;
                    fc = fb;
                    bpt = d - gr * (d - a);
                    fb = terms.eval(j, bpt);
                } else {
                    a = bpt;
                    bpt = cpt;
                    fb = fc;
                    cpt = a + gr * (d - a);
                    fc = terms.eval(j, cpt);
                }
            }
            let best_x = if fb >= fc { bpt } else { cpt };
            if terms.eval(j, best_x) > terms.eval(j, values[j - 1]) {
                values[j - 1] = best_x;
            }
        }
    }
    let polished = BidVector::from_sorted_unchecked(values);
    let value = vector_value(&terms, polished.values());
    (polished, value)
}
