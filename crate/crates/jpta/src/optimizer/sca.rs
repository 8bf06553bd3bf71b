//! Subband allocation: relaxation of the binary assignment to per-subband
//! probability simplices, successive convex approximation of the binarity
//! penalty, projected-gradient inner ascent, greedy initialization, and
//! final rounding.

use crate::arrays::UtilityKind;
use crate::error::{Error, Result};
use crate::float::Float;

/// Tunables of the convex allocation stage.
#[derive(Debug, Clone)]
pub struct ScaOptions<T> {
    /// Linearization rounds per allocation update.
    pub max_iters: usize,
    /// Initial projected-gradient step, relative to a gradient normalized to
    /// unit infinity norm.
    pub inner_step: T,
    /// Relative improvement below which the inner ascent stops.
    pub inner_tol: T,
    /// Cap on projected-gradient steps per linearization.
    pub inner_max_steps: usize,
    /// Multiplier applied to the penalty weight after each outer round.
    pub penalty_growth: T,
    /// Initial penalty weight.
    pub penalty_init: T,
}

impl<T: Float> Default for ScaOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 30,
            inner_step: T::one(),
            inner_tol: T::of(1e-9),
            inner_max_steps: 500,
            penalty_growth: T::of(5.0),
            penalty_init: T::of(1e-5),
        }
    }
}

/// Per-subband, per-user rate obtained when a subband is granted to a user
/// under the current powers and beamformers: `r[m][k] = (B/M) log2(1 + p_m d_{m,k})`.
#[derive(Debug, Clone)]
pub struct RateTable<T> {
    pub coeff: Vec<Vec<T>>,
}

impl<T: Float> RateTable<T> {
    pub fn from_cnr(cnr: &[Vec<T>], power_w: &[T], subband_width_hz: T) -> Self {
        let coeff = cnr
            .iter()
            .zip(power_w)
            .map(|(row, &p)| {
                row.iter()
                    .map(|&d| subband_width_hz * (T::one() + p * d).log2())
                    .collect()
            })
            .collect();
        Self { coeff }
    }

    pub fn num_subbands(&self) -> usize {
        self.coeff.len()
    }

    pub fn num_users(&self) -> usize {
        self.coeff.first().map_or(0, |row| row.len())
    }

    /// Relaxed per-user rates under fractional allocation `b`.
    fn relaxed_rates(&self, b: &[Vec<T>]) -> Vec<T> {
        let mut rates = vec![T::zero(); self.num_users()];
        for (row, brow) in self.coeff.iter().zip(b) {
            for (k, (&r, &w)) in row.iter().zip(brow).enumerate() {
                rates[k] += w * r;
            }
        }
        rates
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex<T: Float>(v: &[T]) -> Vec<T> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite coordinates"));
    let mut cumulative = T::zero();
    let mut threshold = T::zero();
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - T::one()) / T::of_usize(j + 1);
        if u - candidate > T::zero() {
            threshold = candidate;
        }
    }
    v.iter().map(|&x| (x - threshold).max(T::zero())).collect()
}

/// Penalty summand promoting binary allocations, linearized at `anchor`:
/// anchor^2 + 2 anchor (b - anchor) - b.
fn penalty_term<T: Float>(b: T, anchor: T) -> T {
    anchor * anchor + T::of(2.0) * anchor * (b - anchor) - b
}

/// Surrogate objective of one linearization: utility of relaxed rates plus
/// the weighted linearized penalty.
fn surrogate<T: Float>(
    b: &[Vec<T>],
    anchor: &[Vec<T>],
    rates: &RateTable<T>,
    kind: UtilityKind,
    rho: T,
) -> T {
    let relaxed = rates.relaxed_rates(b);
    let mut value = crate::arrays::utility(&relaxed, kind);
    for (brow, arow) in b.iter().zip(anchor) {
        for (&bv, &av) in brow.iter().zip(arow) {
            value += rho * penalty_term(bv, av);
        }
    }
    value
}

fn surrogate_gradient<T: Float>(
    b: &[Vec<T>],
    anchor: &[Vec<T>],
    rates: &RateTable<T>,
    kind: UtilityKind,
    rho: T,
) -> Vec<Vec<T>> {
    let relaxed = rates.relaxed_rates(b);
    rates
        .coeff
        .iter()
        .zip(anchor)
        .map(|(row, arow)| {
            row.iter()
                .zip(arow)
                .enumerate()
                .map(|(k, (&r, &av))| {
                    let utility_slope = match kind {
                        UtilityKind::Sum => r,
                        UtilityKind::Log => r / relaxed[k],
                    };
                    utility_slope + rho * (T::of(2.0) * av - T::one())
                })
                .collect()
        })
        .collect()
}

fn check_simplex_rows<T: Float>(b: &[Vec<T>], num_users: usize) -> Result<()> {
    for (m, row) in b.iter().enumerate() {
        if row.len() != num_users {
            return Err(Error::DimensionMismatch(format!(
                "allocation row {m} has {} entries, expected {num_users}",
                row.len()
            )));
        }
        let mut sum = T::zero();
        for &x in row {
            if x < -T::of(1e-9) {
                return Err(Error::NonSimplex(format!("row {m} has negative entry {x}")));
            }
            sum += x;
        }
        if (sum - T::one()).abs() > T::of(1e-6) {
            return Err(Error::NonSimplex(format!("row {m} sums to {sum}")));
        }
    }
    Ok(())
}

/// One successive-convex-approximation round: linearize the binarity penalty
/// at the current point and maximize the surrogate over the product of
/// per-subband simplices by projected gradient ascent with backtracking.
/// Returns the final surrogate value. The surrogate never decreases.
pub fn relaxed_allocation_step<T: Float>(
    b: &mut [Vec<T>],
    rates: &RateTable<T>,
    kind: UtilityKind,
    rho: T,
    opts: &ScaOptions<T>,
) -> Result<T> {
    let num_users = rates.num_users();
    check_simplex_rows(b, num_users)?;
    for row in b.iter_mut() {
        *row = project_simplex(row);
    }
    if num_users == 1 {
        return Ok(surrogate(b, b, rates, kind, rho));
    }
    let anchor: Vec<Vec<T>> = b.to_vec();

    // A logarithmic surrogate is minus infinity when a user holds no rate;
    // pulling the start toward the uniform allocation restores a finite
    // ascent point whenever one exists.
    let mut current = surrogate(b, &anchor, rates, kind, rho);
    if kind == UtilityKind::Log && !current.is_finite() {
        let uniform = T::one() / T::of_usize(num_users);
        let keep = T::of(0.9);
        for row in b.iter_mut() {
            for x in row.iter_mut() {
                *x = keep * *x + (T::one() - keep) * uniform;
            }
        }
        current = surrogate(b, &anchor, rates, kind, rho);
        if !current.is_finite() {
            return Ok(current);
        }
    }

    let armijo = T::of(1e-4);
    let mut step = opts.inner_step;
    let step_cap = opts.inner_step * T::of(1e6);
    for _ in 0..opts.inner_max_steps {
        let grad = surrogate_gradient(b, &anchor, rates, kind, rho);
        let grad_max = grad
            .iter()
            .flat_map(|row| row.iter())
            .fold(T::zero(), |acc, &g| acc.max(g.abs()));
        if grad_max == T::zero() {
            break;
        }

        let mut accepted: Option<(Vec<Vec<T>>, T)> = None;
        let mut trial = step;
        for _ in 0..60 {
            let scale = trial / grad_max;
            let candidate: Vec<Vec<T>> = b
                .iter()
                .zip(&grad)
                .map(|(row, grow)| {
                    let moved: Vec<T> =
                        row.iter().zip(grow).map(|(&x, &g)| x + scale * g).collect();
                    project_simplex(&moved)
                })
                .collect();
            let along: T = candidate
                .iter()
                .zip(b.iter())
                .zip(&grad)
                .map(|((crow, brow), grow)| {
                    crow.iter()
                        .zip(brow)
                        .zip(grow)
                        .map(|((&c, &x), &g)| (c - x) * g)
                        .fold(T::zero(), |acc, t| acc + t)
                })
                .fold(T::zero(), |acc, t| acc + t);
            if along <= T::zero() {
                break;
            }
            let value = surrogate(&candidate, &anchor, rates, kind, rho);
            if value.is_finite() && value >= current + armijo * along {
                accepted = Some((candidate, value));
                break;
            }
            trial /= T::of(2.0);
        }

        let Some((candidate, value)) = accepted else {
            break;
        };
        let improvement = value - current;
        debug_assert!(
            improvement >= T::zero(),
            "surrogate decreased by {}",
            -improvement
        );
        for (row, crow) in b.iter_mut().zip(candidate) {
            *row = crow;
        }
        current = value;
        step = (trial * T::of(2.0)).min(step_cap);
        if improvement <= opts.inner_tol * (T::one() + current.abs()) {
            break;
        }
    }
    Ok(current)
}

/// Runs linearization rounds until the relaxed allocation stops moving or
/// the round budget is exhausted. Returns the last surrogate value.
pub fn run_sca<T: Float>(
    b: &mut [Vec<T>],
    rates: &RateTable<T>,
    kind: UtilityKind,
    rho: T,
    opts: &ScaOptions<T>,
) -> Result<T> {
    let mut last = T::neg_infinity();
    for _ in 0..opts.max_iters {
        let before = b.to_vec();
        last = relaxed_allocation_step(b, rates, kind, rho, opts)?;
        let moved = before
            .iter()
            .zip(b.iter())
            .flat_map(|(prev, cur)| prev.iter().zip(cur).map(|(&p, &c)| (p - c).abs()))
            .fold(T::zero(), |acc, d| acc.max(d));
        if moved < T::of(1e-8) {
            break;
        }
    }
    Ok(last)
}

/// Binarity residual of a relaxed allocation: sum of b - b^2, zero exactly
/// at binary points.
pub fn binarity_violation<T: Float>(b: &[Vec<T>]) -> T {
    b.iter()
        .flat_map(|row| row.iter())
        .map(|&x| x - x * x)
        .fold(T::zero(), |acc, t| acc + t)
}

/// Hard assignment from a relaxed allocation: per-subband argmax with ties
/// to the lowest user index.
pub fn round_allocation<T: Float>(b: &[Vec<T>]) -> Vec<usize> {
    b.iter().map(|row| argmax(row)).collect()
}

fn argmax<T: Float>(row: &[T]) -> usize {
    let mut best = 0;
    for (k, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = k;
        }
    }
    best
}

/// One-hot relaxed allocation matching a hard assignment.
pub fn one_hot<T: Float>(assignment: &[usize], num_users: usize) -> Vec<Vec<T>> {
    assignment
        .iter()
        .map(|&k| {
            let mut row = vec![T::zero(); num_users];
            row[k] = T::one();
            row
        })
        .collect()
}

/// Greedy assignment from channels, per-subband beamformer weights, and
/// powers.
pub fn greedy_allocation<T: Float>(
    channels: &crate::scenario::ChannelSet<T>,
    weights: &[Vec<num_complex::Complex<T>>],
    power_w: &[T],
    kind: UtilityKind,
    cfg: &crate::scenario::SystemConfig<T>,
) -> Vec<usize> {
    let cnr = crate::arrays::cnr_table(channels, weights, cfg);
    let width = cfg.bandwidth_hz / T::of_usize(cfg.num_subbands);
    greedy_from_rates(&RateTable::from_cnr(&cnr, power_w, width), kind)
}

/// Greedy assignment from a rate table. The sum objective decomposes per
/// subband, so the per-subband argmax is exact. The logarithmic objective
/// first grants each user its best remaining subband, then hands out the
/// rest by marginal utility gain.
pub fn greedy_from_rates<T: Float>(rates: &RateTable<T>, kind: UtilityKind) -> Vec<usize> {
    let m_count = rates.num_subbands();
    let k_count = rates.num_users();
    match kind {
        UtilityKind::Sum => rates.coeff.iter().map(|row| argmax(row)).collect(),
        UtilityKind::Log => {
            let mut assignment = vec![usize::MAX; m_count];
            let mut totals = vec![T::zero(); k_count];
            for k in 0..k_count {
                let mut best: Option<usize> = None;
                for m in 0..m_count {
                    if assignment[m] != usize::MAX {
                        continue;
                    }
                    if best.is_none_or(|cur| rates.coeff[m][k] > rates.coeff[cur][k]) {
                        best = Some(m);
                    }
                }
                if let Some(m) = best {
                    assignment[m] = k;
                    totals[k] += rates.coeff[m][k];
                }
            }
            for m in 0..m_count {
                if assignment[m] != usize::MAX {
                    continue;
                }
                let mut best_k = 0;
                let mut best_gain = T::neg_infinity();
                for k in 0..k_count {
                    let r = rates.coeff[m][k];
                    let gain = if totals[k] > T::zero() {
                        (r / totals[k]).ln_1p()
                    } else if r > T::zero() {
                        T::infinity()
                    } else {
                        T::zero()
                    };
                    if gain > best_gain {
                        best_gain = gain;
                        best_k = k;
                    }
                }
                assignment[m] = best_k;
                totals[best_k] += rates.coeff[m][best_k];
            }
            assignment
        }
    }
}
