//! Evaluation metrics: spatial gain maps, empirical rate CDFs, spectral
//! efficiency, and energy efficiency under a component power model.

use crate::arrays::{array_gain, AllocationPlan};
use crate::baselines::{Architecture, Beamformer};
use crate::error::{Error, Result};
use crate::float::Float;
use crate::scenario::{array_response, rayleigh_distance, FieldTag, SystemConfig, UserPosition};

/// Component power draws used for energy efficiency, in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerModel<T> {
    pub baseband_w: T,
    pub rf_chain_w: T,
    pub phase_shifter_w: T,
    pub ttd_w: T,
}

impl<T: Float> Default for PowerModel<T> {
    fn default() -> Self {
        Self {
            baseband_w: T::of(0.3),
            rf_chain_w: T::of(0.2),
            phase_shifter_w: T::of(0.03),
            ttd_w: T::of(0.1),
        }
    }
}

impl<T: Float> PowerModel<T> {
    /// Total consumed power of an architecture:
    /// FD:   P_t + P_BB + N P_RF
    /// PA:   P_t + P_BB + P_RF + N P_PS
    /// JPTA: P_t + P_BB + P_RF + N_T P_TTD + N P_PS
    pub fn consumed_power_w(&self, arch: Architecture, cfg: &SystemConfig<T>) -> T {
        let n = T::of_usize(cfg.num_antennas);
        match arch {
            Architecture::Fd => cfg.transmit_power_w + self.baseband_w + n * self.rf_chain_w,
            Architecture::Pa => {
                cfg.transmit_power_w + self.baseband_w + self.rf_chain_w + n * self.phase_shifter_w
            }
            Architecture::Jpta => {
                cfg.transmit_power_w
                    + self.baseband_w
                    + self.rf_chain_w
                    + T::of_usize(cfg.num_ttds) * self.ttd_w
                    + n * self.phase_shifter_w
            }
        }
    }
}

/// Which subbands a gain map evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubbandSelector {
    /// A single 0-based subband index.
    One(usize),
    /// Every subband, one row each.
    All,
    /// Per user: the gain averaged over that user's assigned subbands, with
    /// the mean of those frequencies as the row label.
    Averaged,
}

/// Spatial grid and subband selection for a gain map.
#[derive(Debug, Clone)]
pub struct GainMapSpec<T> {
    pub angle_min_deg: T,
    pub angle_max_deg: T,
    pub angle_step_deg: T,
    pub range_min_m: T,
    pub range_max_m: T,
    pub range_step_m: T,
    pub selector: SubbandSelector,
}

impl<T: Float> Default for GainMapSpec<T> {
    fn default() -> Self {
        Self {
            angle_min_deg: T::of(0.5),
            angle_max_deg: T::of(179.5),
            angle_step_deg: T::of(1.0),
            range_min_m: T::of(0.5),
            range_max_m: T::of(20.0),
            range_step_m: T::of(0.5),
            selector: SubbandSelector::Averaged,
        }
    }
}

fn grid<T: Float>(min: T, max: T, step: T) -> Result<Vec<T>> {
    if !(step > T::zero()) || max < min {
        return Err(Error::EmptyGrid(format!(
            "bad grid bounds {min}..{max} step {step}"
        )));
    }
    let count = ((max - min) / step + T::of(1e-9)).floor().to_f64_lossy() as usize + 1;
    Ok((0..count).map(|i| min + step * T::of_usize(i)).collect())
}

/// One gain-map sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMapRow<T> {
    pub angle_deg: T,
    pub range_m: T,
    pub f_hz: T,
    pub gain: T,
}

/// Evaluates the beamformer's array gain over a polar grid. Each grid point
/// uses the wavefront model matching its range (spherical below the Rayleigh
/// distance, planar above).
pub fn gain_map<T: Float>(
    beamformer: &Beamformer<T>,
    plan: &AllocationPlan<T>,
    cfg: &SystemConfig<T>,
    spec: &GainMapSpec<T>,
) -> Result<Vec<GainMapRow<T>>> {
    let angles = grid(spec.angle_min_deg, spec.angle_max_deg, spec.angle_step_deg)?;
    let ranges = grid(spec.range_min_m, spec.range_max_m, spec.range_step_m)?;
    if ranges.iter().any(|&r| !(r > T::zero())) {
        return Err(Error::EmptyGrid("ranges must be positive".into()));
    }
    let freqs = crate::scenario::subband_frequencies(cfg);
    let weights = beamformer.subband_weights(&freqs);
    if let SubbandSelector::One(m) = spec.selector {
        if m >= freqs.len() {
            return Err(Error::IndexOutOfRange {
                index: m,
                limit: freqs.len(),
            });
        }
    }

    // Per-user subband groups for the averaged mode.
    let groups: Vec<(T, Vec<usize>)> = (0..cfg.num_users())
        .map(|k| {
            let subbands: Vec<usize> = plan
                .assignment
                .iter()
                .enumerate()
                .filter_map(|(m, &owner)| (owner == k).then_some(m))
                .collect();
            let f_mean = if subbands.is_empty() {
                T::zero()
            } else {
                subbands
                    .iter()
                    .map(|&m| freqs[m])
                    .fold(T::zero(), |acc, f| acc + f)
                    / T::of_usize(subbands.len())
            };
            (f_mean, subbands)
        })
        .collect();

    let boundary = rayleigh_distance(cfg);
    let mut rows = Vec::new();
    for &angle_deg in &angles {
        for &range in &ranges {
            let field = if range <= boundary {
                FieldTag::Near
            } else {
                FieldTag::Far
            };
            let point = UserPosition::new(angle_deg.to_radians(), range, field);
            let gains: Vec<T> = freqs
                .iter()
                .enumerate()
                .map(|(m, &f)| {
                    let a = array_response(&point, f, cfg)?;
                    array_gain(&a, &weights[m])
                })
                .collect::<Result<Vec<_>>>()?;
            match spec.selector {
                SubbandSelector::One(m) => {
                    rows.push(GainMapRow {
                        angle_deg,
                        range_m: range,
                        f_hz: freqs[m],
                        gain: gains[m],
                    });
                }
                SubbandSelector::All => {
                    for (m, &f) in freqs.iter().enumerate() {
                        rows.push(GainMapRow {
                            angle_deg,
                            range_m: range,
                            f_hz: f,
                            gain: gains[m],
                        });
                    }
                }
                SubbandSelector::Averaged => {
                    for (f_mean, subbands) in &groups {
                        if subbands.is_empty() {
                            continue;
                        }
                        let mean = subbands
                            .iter()
                            .map(|&m| gains[m])
                            .fold(T::zero(), |acc, g| acc + g)
                            / T::of_usize(subbands.len());
                        rows.push(GainMapRow {
                            angle_deg,
                            range_m: range,
                            f_hz: *f_mean,
                            gain: mean,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

pub const GAIN_MAP_CSV_HEADER: &str = "angle_deg,range_m,f_hz,gain";

pub fn gain_map_csv_string<T: Float>(rows: &[GainMapRow<T>]) -> String {
    let mut out = String::from(GAIN_MAP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.angle_deg, row.range_m, row.f_hz, row.gain
        ));
    }
    out
}

pub fn parse_gain_map_csv<T: Float>(text: &str) -> Result<Vec<GainMapRow<T>>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == GAIN_MAP_CSV_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "missing gain-map header, found {:?}",
                other.map(|t| t.1)
            )))
        }
    }
    lines
        .filter(|(_, line)| !line.is_empty())
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected 4 fields", i + 1)));
            }
            let number = |s: &str| -> Result<T> {
                s.parse::<T>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))
            };
            Ok(GainMapRow {
                angle_deg: number(fields[0])?,
                range_m: number(fields[1])?,
                f_hz: number(fields[2])?,
                gain: number(fields[3])?,
            })
        })
        .collect()
}

/// Empirical CDF: sorted (rate, cumulative fraction) pairs.
pub fn rate_cdf<T: Float>(rates: &[T]) -> Vec<(T, T)> {
    let mut sorted = rates.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
    let n = T::of_usize(sorted.len());
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, r)| (r, T::of_usize(i + 1) / n))
        .collect()
}

/// Mean over scenarios of (sum of user rates) / bandwidth, in bits/s/Hz.
pub fn spectral_efficiency<T: Float>(per_scenario_rates: &[Vec<T>], bandwidth_hz: T) -> T {
    if per_scenario_rates.is_empty() {
        return T::zero();
    }
    let total = per_scenario_rates
        .iter()
        .map(|rates| rates.iter().fold(T::zero(), |acc, &r| acc + r) / bandwidth_hz)
        .fold(T::zero(), |acc, se| acc + se);
    total / T::of_usize(per_scenario_rates.len())
}

/// Energy efficiency: spectral efficiency divided by the architecture's
/// consumed power, in bits/s/Hz/W.
pub fn energy_efficiency<T: Float>(
    se: T,
    arch: Architecture,
    cfg: &SystemConfig<T>,
    model: &PowerModel<T>,
) -> T {
    se / model.consumed_power_w(arch, cfg)
}
