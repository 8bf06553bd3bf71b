//! Power allocation across subbands: exact water-filling for the sum-rate
//! objective and projected gradient ascent with a log-barrier Newton polish
//! for the proportional-fairness objective.

use crate::arrays::UtilityKind;
use crate::error::{Error, Result};
use crate::float::Float;
use crate::scenario::SystemConfig;

/// Power vector plus a flag marking the degenerate all-zero-CNR case where
/// the allocation falls back to uniform power.
#[derive(Debug, Clone)]
pub struct PowerSolution<T> {
    pub power_w: Vec<T>,
    pub uniform_fallback: bool,
}

/// Per-subband CNR seen by the assigned user: `d_m = cnr[m][assignment[m]]`.
pub fn assigned_cnr<T: Float>(assignment: &[usize], cnr: &[Vec<T>]) -> Vec<T> {
    assignment.iter().zip(cnr).map(|(&k, row)| row[k]).collect()
}

/// Water-filling for the sum-rate objective: p_m = (w - 1/d_m)^+ with the
/// water level w chosen by bisection so the powers meet the budget exactly.
pub fn waterfill_sum_rate<T: Float>(
    assignment: &[usize],
    cnr: &[Vec<T>],
    cfg: &SystemConfig<T>,
) -> PowerSolution<T> {
    waterfill(&assigned_cnr(assignment, cnr), cfg.transmit_power_w)
}

/// Water-filling over raw per-subband CNRs.
pub fn waterfill<T: Float>(cnr: &[T], budget: T) -> PowerSolution<T> {
    let m_count = cnr.len();
    let active: Vec<usize> = (0..m_count).filter(|&m| cnr[m] > T::zero()).collect();
    if active.is_empty() {
        return PowerSolution {
            power_w: vec![budget / T::of_usize(m_count); m_count],
            uniform_fallback: true,
        };
    }
    let inverse: Vec<T> = active.iter().map(|&m| T::one() / cnr[m]).collect();
    let poured = |level: T| -> T {
        inverse
            .iter()
            .fold(T::zero(), |acc, &inv| acc + (level - inv).max(T::zero()))
    };
    let mut lo = T::zero();
    let mut hi = inverse.iter().fold(T::zero(), |acc, &inv| acc.max(inv)) + budget;
    for _ in 0..200 {
        if (hi - lo) <= T::of(1e-12) * hi {
            break;
        }
        let mid = (lo + hi) / T::of(2.0);
        if poured(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let level = (lo + hi) / T::of(2.0);
    let mut power = vec![T::zero(); m_count];
    let mut total = T::zero();
    for (&m, &inv) in active.iter().zip(&inverse) {
        let p = (level - inv).max(T::zero());
        power[m] = p;
        total += p;
    }
    if total > T::zero() {
        let scale = budget / total;
        for p in &mut power {
            *p *= scale;
        }
    }
    PowerSolution {
        power_w: power,
        uniform_fallback: false,
    }
}

/// Water level implied by a water-filling solution, for slackness checks.
pub fn water_level<T: Float>(power_w: &[T], cnr: &[T]) -> Option<T> {
    power_w
        .iter()
        .zip(cnr)
        .filter(|(&p, &d)| p > T::zero() && d > T::zero())
        .map(|(&p, &d)| p + T::one() / d)
        .fold(None, |acc, level| {
            Some(acc.map_or(level, |a: T| a.max(level)))
        })
}

struct LogPowerProblem<T> {
    /// Subbands with positive CNR, the only ones that can carry rate.
    active: Vec<usize>,
    /// Owner of each active subband.
    owner: Vec<usize>,
    /// CNR of each active subband for its owner.
    cnr: Vec<T>,
    subband_width: T,
    budget: T,
    num_users: usize,
}

impl<T: Float> LogPowerProblem<T> {
    fn rates(&self, p: &[T]) -> Vec<T> {
        let mut rates = vec![T::zero(); self.num_users];
        for (i, &k) in self.owner.iter().enumerate() {
            rates[k] += self.subband_width * (T::one() + p[i] * self.cnr[i]).log2();
        }
        rates
    }

    fn objective(&self, p: &[T]) -> T {
        self.rates(p).iter().fold(T::zero(), |acc, &r| {
            if r > T::zero() {
                acc + r.ln()
            } else {
                T::neg_infinity()
            }
        })
    }

    fn gradient(&self, p: &[T], rates: &[T]) -> Vec<T> {
        let ln2 = T::of(std::f64::consts::LN_2);
        (0..p.len())
            .map(|i| {
                let d = self.cnr[i];
                self.subband_width * d / ((T::one() + p[i] * d) * ln2 * rates[self.owner[i]])
            })
            .collect()
    }
}

/// Euclidean norm of P(p + g) - p where P projects onto the power simplex;
/// zero exactly at a first-order stationary point.
pub fn projected_gradient_norm<T: Float>(p: &[T], grad: &[T], budget: T) -> T {
    let moved: Vec<T> = p
        .iter()
        .zip(grad)
        .map(|(&x, &g)| (x + g) / budget)
        .collect();
    let projected = super::sca::project_simplex(&moved);
    projected
        .iter()
        .zip(p)
        .map(|(&q, &x)| {
            let diff = q * budget - x;
            diff * diff
        })
        .fold(T::zero(), |acc, t| acc + t)
        .sqrt()
}

/// Proportional-fairness power allocation: maximizes the sum of log rates
/// subject to the power budget. Projected gradient ascent finds the region
/// of the optimum and a log-barrier Newton refinement polishes it to
/// first-order stationarity (projected gradient norm below 1e-6 times
/// 1 + the gradient norm). Errors if any user owns no subband with positive
/// CNR, since the objective is then unbounded below.
pub fn power_log_utility<T: Float>(
    assignment: &[usize],
    cnr: &[Vec<T>],
    cfg: &SystemConfig<T>,
    warm: Option<&[T]>,
) -> Result<Vec<T>> {
    let num_users = cnr.first().map_or(0, |row| row.len());
    let levels = assigned_cnr(assignment, cnr);
    for k in 0..num_users {
        let served = assignment
            .iter()
            .zip(&levels)
            .any(|(&owner, &d)| owner == k && d > T::zero());
        if !served {
            return Err(Error::StarvedUser { user: k });
        }
    }
    if num_users == 1 {
        return Ok(waterfill(&levels, cfg.transmit_power_w).power_w);
    }

    let active: Vec<usize> = (0..levels.len())
        .filter(|&m| levels[m] > T::zero())
        .collect();
    let problem = LogPowerProblem {
        owner: active.iter().map(|&m| assignment[m]).collect(),
        cnr: active.iter().map(|&m| levels[m]).collect(),
        subband_width: cfg.bandwidth_hz / T::of_usize(cfg.num_subbands),
        budget: cfg.transmit_power_w,
        num_users,
        active,
    };

    let n = problem.active.len();
    let budget = problem.budget;
    let uniform = vec![budget / T::of_usize(n); n];
    let mut p = match warm {
        Some(w) => {
            let restricted: Vec<T> = problem
                .active
                .iter()
                .map(|&m| w[m].max(T::zero()))
                .collect();
            let total: T = restricted.iter().fold(T::zero(), |acc, &x| acc + x);
            if total > T::zero() {
                restricted.iter().map(|&x| x * budget / total).collect()
            } else {
                uniform.clone()
            }
        }
        None => uniform.clone(),
    };
    if !problem.objective(&p).is_finite() {
        p = uniform;
    }

    let mut best = p.clone();
    let mut best_value = problem.objective(&best);

    // Phase 1: projected gradient ascent with backtracking.
    let armijo = T::of(1e-4);
    let mut step = T::one();
    for _ in 0..2000 {
        let rates = problem.rates(&p);
        let grad = problem.gradient(&p, &rates);
        let grad_max = grad.iter().fold(T::zero(), |acc, &g| acc.max(g.abs()));
        if grad_max == T::zero() {
            break;
        }
        let current = problem.objective(&p);
        let mut trial = step;
        let mut accepted = None;
        for _ in 0..60 {
            let scale = trial * budget / grad_max;
            let moved: Vec<T> = p
                .iter()
                .zip(&grad)
                .map(|(&x, &g)| (x + scale * g) / budget)
                .collect();
            let candidate: Vec<T> = super::sca::project_simplex(&moved)
                .iter()
                .map(|&q| q * budget)
                .collect();
            let along: T = candidate
                .iter()
                .zip(&p)
                .zip(&grad)
                .map(|((&c, &x), &g)| (c - x) * g)
                .fold(T::zero(), |acc, t| acc + t);
            if along <= T::zero() {
                break;
            }
            let value = problem.objective(&candidate);
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
        p = candidate;
        step = (trial * T::of(2.0)).min(T::of(1e3));
        if value > best_value {
            best_value = value;
            best = p.clone();
        }
        if improvement <= T::of(1e-14) * (T::one() + value.abs()) {
            break;
        }
    }

    // Phase 2: log-barrier Newton polish on the equality-constrained problem.
    let floor = T::of(1e-30);
    let mut q: Vec<T> = best.iter().map(|&x| x.max(budget * T::of(1e-9))).collect();
    let total: T = q.iter().fold(T::zero(), |acc, &x| acc + x);
    for x in &mut q {
        *x *= budget / total;
    }
    let scale_u = best_value.abs().max(T::one());
    let mut mu = scale_u * T::of(1e-3) / T::of_usize(n);
    let mu_min = scale_u * T::of(1e-13);
    let ln2 = T::of(std::f64::consts::LN_2);
    while mu > mu_min {
        for _ in 0..30 {
            let rates = problem.rates(&q);
            let grad_u = problem.gradient(&q, &rates);
            let grad: Vec<T> = grad_u.iter().zip(&q).map(|(&g, &x)| g + mu / x).collect();
            // Hessian: per-user rank-one coupling plus diagonal curvature.
            let mut hess = vec![vec![T::zero(); n]; n];
            let marginal: Vec<T> = (0..n)
                .map(|i| {
                    problem.subband_width * problem.cnr[i]
                        / ((T::one() + q[i] * problem.cnr[i]) * ln2)
                })
                .collect();
            for i in 0..n {
                let d = problem.cnr[i];
                let k = problem.owner[i];
                let curv = -problem.subband_width * d * d
                    / ((T::one() + q[i] * d) * (T::one() + q[i] * d) * ln2);
                hess[i][i] += curv / rates[k] - mu / (q[i] * q[i]);
                for j in 0..n {
                    if problem.owner[j] == k {
                        hess[i][j] -= marginal[i] * marginal[j] / (rates[k] * rates[k]);
                    }
                }
            }
            // KKT system for the equality constraint sum(dq) = 0.
            let mut kkt = vec![vec![T::zero(); n + 1]; n + 1];
            let mut rhs = vec![T::zero(); n + 1];
            for i in 0..n {
                for j in 0..n {
                    kkt[i][j] = hess[i][j];
                }
                kkt[i][n] = T::one();
                kkt[n][i] = T::one();
                rhs[i] = -grad[i];
            }
            let Some(solution) = solve_dense(kkt, rhs) else {
                break;
            };
            let delta = &solution[..n];
            let decrement: T = delta
                .iter()
                .zip(&grad)
                .map(|(&d, &g)| d * g)
                .fold(T::zero(), |acc, t| acc + t);
            if decrement.abs() <= scale_u * T::of(1e-16) {
                break;
            }
            let mut alpha = T::one();
            for (i, &d) in delta.iter().enumerate() {
                if d < T::zero() {
                    alpha = alpha.min(-T::of(0.99) * q[i] / d);
                }
            }
            let barrier_value = |x: &[T]| -> T {
                let base = problem.objective(x);
                x.iter()
                    .fold(base, |acc, &xi| acc + mu * xi.max(floor).ln())
            };
            let current = barrier_value(&q);
            let mut improved = false;
            for _ in 0..50 {
                let candidate: Vec<T> = q.iter().zip(delta).map(|(&x, &d)| x + alpha * d).collect();
                if candidate.iter().all(|&x| x > T::zero()) {
                    let value = barrier_value(&candidate);
                    if value > current {
                        q = candidate;
                        improved = true;
                        break;
                    }
                }
                alpha /= T::of(2.0);
            }
            if !improved {
                break;
            }
        }
        mu /= T::of(10.0);
    }
    let value = problem.objective(&q);
    if value > best_value {
        best = q;
    }

    let mut full = vec![T::zero(); levels.len()];
    for (i, &m) in problem.active.iter().enumerate() {
        full[m] = best[i];
    }
    Ok(full)
}

/// Power step dispatching on the utility kind.
pub fn power_step<T: Float>(
    kind: UtilityKind,
    assignment: &[usize],
    cnr: &[Vec<T>],
    cfg: &SystemConfig<T>,
    warm: Option<&[T]>,
) -> Result<PowerSolution<T>> {
    match kind {
        UtilityKind::Sum => Ok(waterfill_sum_rate(assignment, cnr, cfg)),
        UtilityKind::Log => Ok(PowerSolution {
            power_w: power_log_utility(assignment, cnr, cfg, warm)?,
            uniform_fallback: false,
        }),
    }
}

/// Gaussian elimination with partial pivoting for the small dense Newton
/// systems. Returns `None` on a singular pivot.
fn solve_dense<T: Float>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < T::of(1e-300) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                let update = factor * a[col][k];
                a[row][k] -= update;
            }
            let update = factor * b[col];
            b[row] -= update;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for col in row + 1..n {
            acc -= a[row][col] * x[col];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn equal_cnrs_split_evenly() {
        let sol = waterfill(&[1.0, 1.0], 10.0);
        assert_relative_eq!(sol.power_w[0], 5.0, max_relative = 1e-9);
        assert_relative_eq!(sol.power_w[1], 5.0, max_relative = 1e-9);
        assert!(!sol.uniform_fallback);
    }

    #[test]
    fn hand_solved_two_subband_case() {
        // (w - 1) + (w - 2) = 3 gives w = 3, powers 2 and 1.
        let sol = waterfill(&[1.0, 0.5], 3.0);
        assert_relative_eq!(sol.power_w[0], 2.0, max_relative = 1e-9);
        assert_relative_eq!(sol.power_w[1], 1.0, max_relative = 1e-9);
    }

    #[test]
    fn budget_is_met_exactly() {
        let sol = waterfill(&[0.3, 2.0, 0.0, 11.0], 7.0);
        let total: f64 = sol.power_w.iter().sum();
        assert_relative_eq!(total, 7.0, max_relative = 1e-12);
        assert_eq!(sol.power_w[2], 0.0);
    }

    #[test]
    fn all_zero_cnrs_fall_back_to_uniform() {
        let sol = waterfill(&[0.0, 0.0], 4.0);
        assert!(sol.uniform_fallback);
        assert_eq!(sol.power_w, vec![2.0, 2.0]);
    }

    #[test]
    fn complementary_slackness_holds() {
        let cnr = [4.0, 0.25, 1.0, 9.0];
        let sol = waterfill(&cnr, 2.0);
        let level = water_level(&sol.power_w, &cnr).unwrap();
        for (&p, &d) in sol.power_w.iter().zip(&cnr) {
            if p > 0.0 {
                assert_abs_diff_eq!(level - 1.0 / d - p, 0.0, epsilon = 1e-9);
            } else {
                assert!(level <= 1.0 / d + 1e-9);
            }
        }
    }

    fn tiny_cfg(num_subbands: usize) -> SystemConfig<f64> {
        SystemConfig {
            num_subbands,
            bandwidth_hz: num_subbands as f64 * 1e6,
            transmit_power_w: 10.0,
            num_antennas: 4,
            num_ttds: 2,
            num_nf_users: 1,
            num_ff_users: 1,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn log_power_single_user_reduces_to_waterfilling() {
        let cfg = tiny_cfg(3);
        let cnr = vec![vec![2.0], vec![0.7], vec![1.4]];
        let assignment = vec![0, 0, 0];
        let log_p = power_log_utility(&assignment, &cnr, &cfg, None).unwrap();
        let wf = waterfill_sum_rate(&assignment, &cnr, &cfg);
        for (a, b) in log_p.iter().zip(&wf.power_w) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn log_power_symmetric_case_splits_evenly() {
        let cfg = tiny_cfg(2);
        let cnr = vec![vec![3.0, 0.0], vec![0.0, 3.0]];
        let p = power_log_utility(&[0, 1], &cnr, &cfg, None).unwrap();
        assert_relative_eq!(p[0], 5.0, max_relative = 1e-9);
        assert_relative_eq!(p[1], 5.0, max_relative = 1e-9);
    }

    #[test]
    fn log_power_matches_fine_grid_on_asymmetric_case() {
        let cfg = tiny_cfg(2);
        let cnr = vec![vec![4.0, 0.0], vec![0.0, 1.0]];
        let assignment = vec![0, 1];
        let p = power_log_utility(&assignment, &cnr, &cfg, None).unwrap();
        let width = cfg.bandwidth_hz / cfg.num_subbands as f64;
        let utility = |p0: f64| -> f64 {
            let r0 = width * (1.0 + p0 * 4.0).log2();
            let r1 = width * (1.0 + (cfg.transmit_power_w - p0) * 1.0).log2();
            r0.ln() + r1.ln()
        };
        let mut grid_best = f64::NEG_INFINITY;
        for i in 1..10_000 {
            let p0 = cfg.transmit_power_w * i as f64 / 10_000.0;
            grid_best = grid_best.max(utility(p0));
        }
        let achieved = utility(p[0]);
        assert!(
            achieved >= grid_best - 1e-4,
            "achieved {achieved}, grid {grid_best}"
        );
        assert_relative_eq!(p[0] + p[1], cfg.transmit_power_w, max_relative = 1e-9);
    }

    #[test]
    fn log_power_reports_the_starved_user() {
        let cfg = tiny_cfg(2);
        let cnr = vec![vec![4.0, 0.0], vec![3.0, 0.0]];
        match power_log_utility(&[0, 0], &cnr, &cfg, None) {
            Err(Error::StarvedUser { user }) => assert_eq!(user, 1),
            other => panic!("expected starved-user error, got {other:?}"),
        }
    }

    #[test]
    fn log_power_is_first_order_stationary() {
        let cfg = tiny_cfg(4);
        let cnr = vec![
            vec![5.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 0.3],
        ];
        let assignment = vec![0, 0, 1, 1];
        let p = power_log_utility(&assignment, &cnr, &cfg, None).unwrap();
        let width = cfg.bandwidth_hz / cfg.num_subbands as f64;
        let levels = assigned_cnr(&assignment, &cnr);
        let mut rates = [0.0; 2];
        for m in 0..4 {
            rates[assignment[m]] += width * (1.0 + p[m] * levels[m]).log2();
        }
        let grad: Vec<f64> = (0..4)
            .map(|m| {
                width * levels[m]
                    / ((1.0 + p[m] * levels[m]) * std::f64::consts::LN_2 * rates[assignment[m]])
            })
            .collect();
        let norm = projected_gradient_norm(&p, &grad, cfg.transmit_power_w);
        let scale = 1.0 + grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(
            norm < 1e-6 * scale,
            "projected gradient norm {norm}, scale {scale}"
        );
    }

    #[test]
    fn dense_solver_inverts_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve_dense(a, vec![5.0, 10.0]).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(x[1], 3.0, max_relative = 1e-12);
    }
}
