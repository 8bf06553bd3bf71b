//! Three-step alternating optimization: subband allocation by successive
//! convex approximation, analog beamformer fitting, and power allocation,
//! looped with a geometrically growing binarity penalty until the relaxed
//! allocation is effectively binary.

pub mod beamfit;
pub mod power;
pub mod sca;

pub use beamfit::{
    alignment_score, fit_beamformer, fit_beamformer_phase_aligned, fit_objective, fit_residual,
    ideal_beamformer, ps_update, ttd_update, two_anchor_delays, FitReport,
};
pub use power::{
    power_log_utility, power_step, projected_gradient_norm, water_level, waterfill,
    waterfill_sum_rate, PowerSolution,
};
pub use sca::{
    binarity_violation, greedy_allocation, greedy_from_rates, one_hot, project_simplex,
    relaxed_allocation_step, round_allocation, run_sca, RateTable, ScaOptions,
};

use num_complex::Complex;

use crate::arrays::{
    cnr_table, user_rates_from_cnr, utility, AllocationPlan, JptaBeamformer, UtilityKind,
};
use crate::baselines::{
    fd_beamformer, pa_from_targets, Architecture, Beamformer, FdBeamformer, PaBeamformer,
};
use crate::error::{Error, Result};
use crate::float::Float;
use crate::scenario::{ChannelSet, SystemConfig};

/// One convergence-trace entry per outer iteration.
#[derive(Debug, Clone)]
pub struct TraceRecord<T> {
    pub iteration: usize,
    pub utility: T,
    pub penalty: T,
    /// Binarity residual of the relaxed allocation after this round's
    /// allocation update.
    pub constraint_violation: T,
    /// Squared fit error of this round's analog-fit attempt (zero for the
    /// fully digital architecture).
    pub fit_residual: T,
}

/// Final state of one alternating-optimization run.
#[derive(Debug, Clone)]
pub struct SolverState<T> {
    pub plan: AllocationPlan<T>,
    pub beamformer: Beamformer<T>,
    /// Per-subband ideal beamformers for the final assignment.
    pub ideal_weights: Vec<Vec<Complex<T>>>,
    /// Penalty weight after the last executed round.
    pub penalty: T,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value at initialization and after every outer iteration;
    /// nondecreasing.
    pub utility_trace: Vec<T>,
    pub trace: Vec<TraceRecord<T>>,
    pub rates_bps: Vec<T>,
    pub utility: T,
    pub kind: UtilityKind,
    /// Set when the water-filling step ever degenerated to uniform power
    /// because every assigned subband had zero CNR.
    pub uniform_power_fallback: bool,
}

impl<T: Float> SolverState<T> {
    /// Per-subband effective beamformer weights of the final solution.
    pub fn subband_weights(&self, channels: &ChannelSet<T>) -> Vec<Vec<Complex<T>>> {
        self.beamformer
            .subband_weights(channels.subband_frequencies_hz())
    }
}

/// Alternating optimization of allocation, analog beamforming, and power for
/// the joint phase-time array. With zero TTDs the array degenerates to the
/// phased-array architecture and is fitted as such.
pub fn alternating_optimize<T: Float>(
    channels: &ChannelSet<T>,
    cfg: &SystemConfig<T>,
    kind: UtilityKind,
    opts: &ScaOptions<T>,
) -> Result<SolverState<T>> {
    solve(channels, cfg, kind, opts, Architecture::Jpta)
}

fn initial_beamformer<T: Float>(arch: Architecture, cfg: &SystemConfig<T>) -> Beamformer<T> {
    let n = cfg.num_antennas;
    match arch {
        Architecture::Fd => {
            let scale = T::one() / T::of_usize(n).sqrt();
            let flat = vec![Complex::new(scale, T::zero()); n];
            Beamformer::Fd(FdBeamformer {
                weights: vec![flat; cfg.num_subbands],
            })
        }
        Architecture::Pa => Beamformer::Pa(PaBeamformer::neutral(n)),
        Architecture::Jpta => {
            if cfg.num_ttds == 0 {
                Beamformer::Pa(PaBeamformer::neutral(n))
            } else {
                Beamformer::Jpta(JptaBeamformer::neutral(cfg))
            }
        }
    }
}

/// Candidate beamformers for one round, most-preferred fit error first. The
/// fit error to the ideal beamformers is blind to per-subband global
/// phases that never affect rates, so besides the plain fit the joint
/// architecture also proposes the phase-realigned fit and the two-anchor
/// delay construction; the caller keeps whichever candidate scores best on
/// the actual utility.
fn update_beamformer<T: Float>(
    arch: Architecture,
    ideal: &[Vec<Complex<T>>],
    assignment: &[usize],
    channels: &ChannelSet<T>,
    cfg: &SystemConfig<T>,
) -> Result<(Vec<Beamformer<T>>, T)> {
    match arch {
        Architecture::Fd => Ok((
            vec![Beamformer::Fd(fd_beamformer(assignment, channels)?)],
            T::zero(),
        )),
        Architecture::Pa => {
            let (bf, residual) = pa_fit(ideal);
            Ok((vec![bf], residual))
        }
        Architecture::Jpta => {
            if cfg.num_ttds == 0 {
                let (bf, residual) = pa_fit(ideal);
                return Ok((vec![bf], residual));
            }
            let report = fit_beamformer(ideal, cfg, cfg.ao_max_iters, cfg.ao_tolerance);
            let residual = report.residual;
            let mut candidates = vec![Beamformer::Jpta(report.beamformer)];
            let anchored = two_anchor_delays(ideal, assignment, cfg);
            if let Some(ttd) = &anchored {
                candidates.push(Beamformer::Jpta(JptaBeamformer {
                    ps: ps_update(ideal, ttd, cfg),
                    ttd: ttd.clone(),
                }));
            }
            let init = anchored.unwrap_or_else(|| crate::arrays::TtdBank::zeros(cfg.num_ttds));
            let realigned =
                beamfit::fit_beamformer_phase_aligned(ideal, cfg, 10, cfg.ao_tolerance, init);
            candidates.push(Beamformer::Jpta(realigned.beamformer));
            Ok((candidates, residual))
        }
    }
}

fn pa_fit<T: Float>(ideal: &[Vec<Complex<T>>]) -> (Beamformer<T>, T) {
    let pa = pa_from_targets(ideal);
    let w = pa.weights();
    let residual = ideal
        .iter()
        .map(|target| {
            target
                .iter()
                .zip(&w)
                .map(|(&a, &b)| (a - b).norm_sqr())
                .fold(T::zero(), |acc, t| acc + t)
        })
        .fold(T::zero(), |acc, t| acc + t);
    (Beamformer::Pa(pa), residual)
}

/// Shared alternating-optimization engine for all three architectures.
pub fn solve<T: Float>(
    channels: &ChannelSet<T>,
    cfg: &SystemConfig<T>,
    kind: UtilityKind,
    opts: &ScaOptions<T>,
    arch: Architecture,
) -> Result<SolverState<T>> {
    cfg.validate()?;
    if channels.num_subbands() != cfg.num_subbands
        || channels.num_users() != cfg.num_users()
        || channels.num_antennas() != cfg.num_antennas
    {
        return Err(Error::DimensionMismatch(format!(
            "channel set is {} subbands x {} users x {} antennas, config expects {} x {} x {}",
            channels.num_subbands(),
            channels.num_users(),
            channels.num_antennas(),
            cfg.num_subbands,
            cfg.num_users(),
            cfg.num_antennas
        )));
    }

    let m_count = cfg.num_subbands;
    let k_count = cfg.num_users();
    let subband_width = cfg.bandwidth_hz / T::of_usize(m_count);
    let freqs = channels.subband_frequencies_hz().to_vec();

    let mut beamformer = initial_beamformer(arch, cfg);
    let mut cnr = cnr_table(channels, &beamformer.subband_weights(&freqs), cfg);
    let mut power = vec![cfg.transmit_power_w / T::of_usize(m_count); m_count];

    let start_table = RateTable::from_cnr(&cnr, &power, subband_width);
    let mut assignment = greedy_from_rates(&start_table, kind);
    let mut relaxed = one_hot(&assignment, k_count);
    let mut rates = user_rates_from_cnr(&assignment, &power, &cnr, k_count, cfg);
    let mut current_utility = utility(&rates, kind);

    let mut utility_trace = vec![current_utility];
    let mut trace = Vec::new();
    let mut rho = cfg.penalty_init;
    let mut iterations = 0;
    let mut converged = false;
    let mut uniform_fallback = false;
    let mut ideal = ideal_beamformer(&assignment, channels);

    for iter in 1..=cfg.ao_max_iters {
        iterations = iter;

        // Step 1: subband allocation. The rounded candidate is kept only if
        // it does not degrade the objective under the current beamformer and
        // powers, which keeps the trace monotone and the assignment
        // serviceable for the power step.
        let table = RateTable::from_cnr(&cnr, &power, subband_width);
        run_sca(&mut relaxed, &table, kind, rho, opts)?;
        let violation = binarity_violation(&relaxed);
        let candidate = round_allocation(&relaxed);
        let cand_rates = user_rates_from_cnr(&candidate, &power, &cnr, k_count, cfg);
        let cand_utility = utility(&cand_rates, kind);
        if cand_utility >= current_utility {
            assignment = candidate;
            rates = cand_rates;
            current_utility = cand_utility;
        }

        // Step 2: analog beamforming. The fits minimize distance to the
        // ideal beamformers, not the utility, so each candidate competes on
        // utility and a round that only loses keeps the previous beamformer.
        ideal = ideal_beamformer(&assignment, channels);
        let (candidates, fit_res) = update_beamformer(arch, &ideal, &assignment, channels, cfg)?;
        for cand_bf in candidates {
            let cand_weights = cand_bf.subband_weights(&freqs);
            let cand_cnr = cnr_table(channels, &cand_weights, cfg);
            let cand_rates = user_rates_from_cnr(&assignment, &power, &cand_cnr, k_count, cfg);
            let cand_utility = utility(&cand_rates, kind);
            if cand_utility >= current_utility {
                beamformer = cand_bf;
                cnr = cand_cnr;
                rates = cand_rates;
                current_utility = cand_utility;
            }
        }

        // Step 3: power allocation, warm-started from the current powers.
        let solution = power_step(kind, &assignment, &cnr, cfg, Some(&power))?;
        uniform_fallback |= solution.uniform_fallback;
        let cand_rates = user_rates_from_cnr(&assignment, &solution.power_w, &cnr, k_count, cfg);
        let cand_utility = utility(&cand_rates, kind);
        if cand_utility >= current_utility {
            power = solution.power_w;
            rates = cand_rates;
            current_utility = cand_utility;
        }

        utility_trace.push(current_utility);
        trace.push(TraceRecord {
            iteration: iter,
            utility: current_utility,
            penalty: rho,
            constraint_violation: violation,
            fit_residual: fit_res,
        });

        // Binarity alone can be satisfied by the very first rounding; one
        // extra round lets the allocation react to a fitted beamformer.
        if violation < cfg.ao_tolerance && iter >= 2 {
            converged = true;
            break;
        }
        rho *= opts.penalty_growth;
    }

    let plan = AllocationPlan {
        assignment,
        power_w: power,
        relaxed: Some(relaxed),
    };
    plan.validate(cfg)?;
    Ok(SolverState {
        plan,
        beamformer,
        ideal_weights: ideal,
        penalty: rho,
        iterations,
        converged,
        utility_trace,
        trace,
        rates_bps: rates,
        utility: current_utility,
        kind,
        uniform_power_fallback: uniform_fallback,
    })
}
