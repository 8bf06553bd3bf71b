//! Serialization of solver output: solution JSON, trace JSON lines, and the
//! gain-map CSV.

use jpta::metrics::GainMapRow;
use jpta::optimizer::{SolverState, TraceRecord};
use jpta::scenario::{ChannelSet, UserPosition};
use jpta::{Architecture, Beamformer, FieldTag, SystemConfig64};
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct UserRecord {
    angle_deg: f64,
    range_m: f64,
    field: FieldTag,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "arch", rename_all = "lowercase")]
enum BeamformerRecord {
    Fd {
        weights_re: Vec<Vec<f64>>,
        weights_im: Vec<Vec<f64>>,
    },
    Pa {
        phases: Vec<Vec<f64>>,
    },
    Jpta {
        phases: Vec<Vec<f64>>,
        delays_ns: Vec<f64>,
    },
}

impl BeamformerRecord {
    fn from_beamformer(bf: &Beamformer<f64>) -> Self {
        match bf {
            Beamformer::Fd(fd) => BeamformerRecord::Fd {
                weights_re: fd
                    .weights
                    .iter()
                    .map(|w| w.iter().map(|z| z.re).collect())
                    .collect(),
                weights_im: fd
                    .weights
                    .iter()
                    .map(|w| w.iter().map(|z| z.im).collect())
                    .collect(),
            },
            Beamformer::Pa(pa) => BeamformerRecord::Pa {
                phases: vec![pa.phases.clone()],
            },
            Beamformer::Jpta(bf) => BeamformerRecord::Jpta {
                phases: bf.ps.phases.clone(),
                delays_ns: bf.ttd.delays_s.iter().map(|&tau| tau * 1e9).collect(),
            },
        }
    }

    fn into_beamformer(self) -> jpta::Result<Beamformer<f64>> {
        match self {
            BeamformerRecord::Fd {
                weights_re,
                weights_im,
            } => {
                if weights_re.len() != weights_im.len()
                    || weights_re
                        .iter()
                        .zip(&weights_im)
                        .any(|(r, i)| r.len() != i.len())
                {
                    return Err(jpta::Error::Parse(
                        "fd beamformer real/imaginary shapes differ".into(),
                    ));
                }
                let weights = weights_re
                    .into_iter()
                    .zip(weights_im)
                    .map(|(re, im)| {
                        re.into_iter()
                            .zip(im)
                            .map(|(r, i)| jpta::Complex64::new(r, i))
                            .collect()
                    })
                    .collect();
                Ok(Beamformer::Fd(jpta::FdBeamformer { weights }))
            }
            BeamformerRecord::Pa { phases } => {
                let [row]: [Vec<f64>; 1] = phases
                    .try_into()
                    .map_err(|_| jpta::Error::Parse("pa beamformer needs one phase row".into()))?;
                Ok(Beamformer::Pa(jpta::PaBeamformer { phases: row }))
            }
            BeamformerRecord::Jpta { phases, delays_ns } => {
                if phases.len() != delays_ns.len() {
                    return Err(jpta::Error::Parse(
                        "jpta beamformer needs one delay per subarray".into(),
                    ));
                }
                Ok(Beamformer::Jpta(jpta::JptaBeamformer {
                    ps: jpta::PhaseShifterBank { phases },
                    ttd: jpta::TtdBank {
                        delays_s: delays_ns.into_iter().map(|ns| ns * 1e-9).collect(),
                    },
                }))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TraceLine {
    iter: usize,
    utility: f64,
    penalty: f64,
    constraint_violation: f64,
    fit_residual: f64,
}

pub fn trace_json(record: &TraceRecord<f64>) -> String {
    serde_json::to_string(&TraceLine {
        iter: record.iteration,
        utility: record.utility,
        penalty: record.penalty,
        constraint_violation: record.constraint_violation,
        fit_residual: record.fit_residual,
    })
    .expect("trace serializes")
}

#[derive(Serialize, Deserialize)]
struct SolutionRecord {
    arch: Architecture,
    utility_kind: jpta::UtilityKind,
    seed: u64,
    users: Vec<UserRecord>,
    /// Owner user index per subband (0-based).
    assignment: Vec<usize>,
    power_w: Vec<f64>,
    subband_frequencies_hz: Vec<f64>,
    rates_bps: Vec<f64>,
    /// Rates normalized by the subband width B/M.
    rates_per_subband_width: Vec<f64>,
    log_rates: Vec<f64>,
    utility: f64,
    iterations: usize,
    converged: bool,
    beamformer: BeamformerRecord,
    trace: Vec<TraceLine>,
}

pub fn solution_json(
    state: &SolverState<f64>,
    users: &[UserPosition<f64>],
    channels: &ChannelSet<f64>,
    cfg: &SystemConfig64,
    arch: Architecture,
    seed: u64,
) -> String {
    let width = cfg.bandwidth_hz / cfg.num_subbands as f64;
    let record = SolutionRecord {
        arch,
        utility_kind: state.kind,
        seed,
        users: users
            .iter()
            .map(|u| UserRecord {
                angle_deg: u.angle_rad.to_degrees(),
                range_m: u.range_m,
                field: u.field,
            })
            .collect(),
        assignment: state.plan.assignment.clone(),
        power_w: state.plan.power_w.clone(),
        subband_frequencies_hz: channels.subband_frequencies_hz().to_vec(),
        rates_bps: state.rates_bps.clone(),
        rates_per_subband_width: state.rates_bps.iter().map(|r| r / width).collect(),
        log_rates: state
            .rates_bps
            .iter()
            .map(|&r| if r > 0.0 { r.ln() } else { f64::NEG_INFINITY })
            .collect(),
        utility: state.utility,
        iterations: state.iterations,
        converged: state.converged,
        beamformer: BeamformerRecord::from_beamformer(&state.beamformer),
        trace: state
            .trace
            .iter()
            .map(|t| TraceLine {
                iter: t.iteration,
                utility: t.utility,
                penalty: t.penalty,
                constraint_violation: t.constraint_violation,
                fit_residual: t.fit_residual,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&record).expect("solution serializes")
}

pub fn gain_map_csv(rows: &[GainMapRow<f64>]) -> String {
    jpta::metrics::gain_map_csv_string(rows)
}

/// Beamformer and allocation plan recovered from a saved solution file.
pub fn load_solution(
    path: &std::path::Path,
) -> jpta::Result<(Beamformer<f64>, jpta::AllocationPlan64)> {
    let record: SolutionRecord = serde_json::from_str(&std::fs::read_to_string(path)?)
        .map_err(|e| jpta::Error::Parse(format!("solution file: {e}")))?;
    let plan = jpta::AllocationPlan64 {
        assignment: record.assignment,
        power_w: record.power_w,
        relaxed: None,
    };
    Ok((record.beamformer.into_beamformer()?, plan))
}
