//! Seeded batch experiments over random user drops, solved per architecture
//! and utility kind, with CSV emission that parses back losslessly.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arrays::UtilityKind;
use crate::baselines::Architecture;
use crate::error::{Error, Result};
use crate::float::Float;
use crate::metrics::PowerModel;
use crate::optimizer::{solve, ScaOptions};
use crate::scenario::{sample_users, synthesize_channels, SystemConfig};

/// Batch execution knobs.
#[derive(Debug, Clone)]
pub struct BatchOptions<T> {
    /// Record wall-clock solve times. When off, runtimes are written as
    /// zero so repeated runs produce byte-identical output.
    pub measure_runtime: bool,
    pub sca: ScaOptions<T>,
}

impl<T: Float> Default for BatchOptions<T> {
    fn default() -> Self {
        Self {
            measure_runtime: true,
            sca: ScaOptions::default(),
        }
    }
}

/// One per-user result line of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRow<T> {
    /// Per-scenario seed; reproduces the user drop on its own.
    pub seed: u64,
    pub scenario: usize,
    pub arch: Architecture,
    pub utility: UtilityKind,
    pub user: usize,
    pub rate_bps: T,
    /// Natural log of the rate in bits/s (minus infinity for a zero rate).
    pub log_rate: T,
    /// Scenario spectral efficiency, repeated on each of its user rows.
    pub se: T,
    /// Scenario energy efficiency, repeated on each of its user rows.
    pub ee: T,
    pub runtime_s: f64,
    /// "ok", or "error: ..." when the solver failed on this combination.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatchResult<T> {
    pub rows: Vec<BatchRow<T>>,
}

impl<T: Float> BatchResult<T> {
    /// Rates of successful rows matching an architecture and utility kind,
    /// pooled across scenarios and users.
    pub fn pooled_rates(&self, arch: Architecture, kind: UtilityKind) -> Vec<T> {
        self.rows
            .iter()
            .filter(|row| row.arch == arch && row.utility == kind && row.status == "ok")
            .map(|row| row.rate_bps)
            .collect()
    }

    /// Per-scenario user-rate vectors for an (architecture, utility) pair.
    pub fn rates_by_scenario(&self, arch: Architecture, kind: UtilityKind) -> Vec<Vec<T>> {
        let mut out: Vec<Vec<T>> = Vec::new();
        let mut current: Option<usize> = None;
        for row in &self.rows {
            if row.arch != arch || row.utility != kind || row.status != "ok" {
                continue;
            }
            if current != Some(row.scenario) {
                out.push(Vec::new());
                current = Some(row.scenario);
            }
            out.last_mut().expect("group started").push(row.rate_bps);
        }
        out
    }

    /// Mean utility value over scenarios for an (architecture, kind) pair.
    pub fn mean_utility(&self, arch: Architecture, kind: UtilityKind) -> T {
        let per_scenario = self.rates_by_scenario(arch, kind);
        if per_scenario.is_empty() {
            return T::nan();
        }
        let total = per_scenario
            .iter()
            .map(|rates| crate::arrays::utility(rates, kind))
            .fold(T::zero(), |acc, u| acc + u);
        total / T::of_usize(per_scenario.len())
    }
}

/// Per-scenario seeds derived from the batch seed.
pub fn scenario_seeds(seed: u64, n_scenarios: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_scenarios).map(|_| rng.gen()).collect()
}

/// Runs `n_scenarios` seeded user drops, solving each for every requested
/// (architecture, utility) pair. Solver failures are recorded in the status
/// column of the affected rows and never abort the batch. Output row order
/// is deterministic regardless of execution order.
pub fn run_batch<T: Float>(
    cfg: &SystemConfig<T>,
    n_scenarios: usize,
    seed: u64,
    archs: &[Architecture],
    kinds: &[UtilityKind],
    power_model: &PowerModel<T>,
    opts: &BatchOptions<T>,
) -> Result<BatchResult<T>> {
    if n_scenarios == 0 {
        return Err(Error::InvalidConfig("need at least one scenario".into()));
    }
    if archs.is_empty() || kinds.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least one architecture and one utility".into(),
        ));
    }
    cfg.validate()?;
    let seeds = scenario_seeds(seed, n_scenarios);

    let per_scenario: Vec<Vec<BatchRow<T>>> = seeds
        .par_iter()
        .enumerate()
        .map(|(scenario, &sub_seed)| -> Result<Vec<BatchRow<T>>> {
            let users = sample_users(sub_seed, cfg)?;
            let channels = synthesize_channels(&users, cfg)?;
            let k_count = cfg.num_users();
            let mut rows = Vec::with_capacity(archs.len() * kinds.len() * k_count);
            for &arch in archs {
                for &kind in kinds {
                    let start = Instant::now();
                    let outcome = solve(&channels, cfg, kind, &opts.sca, arch);
                    let runtime_s = if opts.measure_runtime {
                        start.elapsed().as_secs_f64()
                    } else {
                        0.0
                    };
                    match outcome {
                        Ok(state) => {
                            let se = state.rates_bps.iter().fold(T::zero(), |acc, &r| acc + r)
                                / cfg.bandwidth_hz;
                            let ee = crate::metrics::energy_efficiency(se, arch, cfg, power_model);
                            for (user, &rate) in state.rates_bps.iter().enumerate() {
                                let log_rate = if rate > T::zero() {
                                    rate.ln()
                                } else {
                                    T::neg_infinity()
                                };
                                rows.push(BatchRow {
                                    seed: sub_seed,
                                    scenario,
                                    arch,
                                    utility: kind,
                                    user,
                                    rate_bps: rate,
                                    log_rate,
                                    se,
                                    ee,
                                    runtime_s,
                                    status: "ok".to_string(),
                                });
                            }
                        }
                        Err(err) => {
                            let status = format!("error: {err}").replace(',', ";");
                            for user in 0..k_count {
                                rows.push(BatchRow {
                                    seed: sub_seed,
                                    scenario,
                                    arch,
                                    utility: kind,
                                    user,
                                    rate_bps: T::zero(),
                                    log_rate: T::neg_infinity(),
                                    se: T::zero(),
                                    ee: T::zero(),
                                    runtime_s,
                                    status: status.clone(),
                                });
                            }
                        }
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BatchResult {
        rows: per_scenario.into_iter().flatten().collect(),
    })
}

pub const BATCH_CSV_HEADER: &str =
    "seed,scenario,arch,utility,user,rate_bps,log_rate,se,ee,runtime_s,status";

pub fn write_batch_csv<T: Float>(result: &BatchResult<T>, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{BATCH_CSV_HEADER}")?;
    for row in &result.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.seed,
            row.scenario,
            row.arch.as_str(),
            row.utility.as_str(),
            row.user,
            row.rate_bps,
            row.log_rate,
            row.se,
            row.ee,
            row.runtime_s,
            row.status
        )?;
    }
    Ok(())
}

pub fn batch_csv_string<T: Float>(result: &BatchResult<T>) -> String {
    let mut buffer = Vec::new();
    write_batch_csv(result, &mut buffer).expect("write to memory");
    String::from_utf8(buffer).expect("csv is utf-8")
}

fn parse_batch_row<T: Float>(line: &str, lineno: usize) -> Result<BatchRow<T>> {
    let fields: Vec<&str> = line.splitn(11, ',').collect();
    if fields.len() != 11 {
        return Err(Error::Parse(format!(
            "line {lineno}: expected 11 fields, got {}",
            fields.len()
        )));
    }
    let numeric = |s: &str, what: &str| -> Result<T> {
        s.parse::<T>()
            .map_err(|e| Error::Parse(format!("line {lineno}: bad {what} {s:?}: {e}")))
    };
    Ok(BatchRow {
        seed: fields[0]
            .parse()
            .map_err(|e| Error::Parse(format!("line {lineno}: bad seed: {e}")))?,
        scenario: fields[1]
            .parse()
            .map_err(|e| Error::Parse(format!("line {lineno}: bad scenario: {e}")))?,
        arch: fields[2].parse()?,
        utility: fields[3].parse()?,
        user: fields[4]
            .parse()
            .map_err(|e| Error::Parse(format!("line {lineno}: bad user: {e}")))?,
        rate_bps: numeric(fields[5], "rate")?,
        log_rate: numeric(fields[6], "log rate")?,
        se: numeric(fields[7], "se")?,
        ee: numeric(fields[8], "ee")?,
        runtime_s: fields[9]
            .parse()
            .map_err(|e| Error::Parse(format!("line {lineno}: bad runtime: {e}")))?,
        status: fields[10].to_string(),
    })
}

pub fn parse_batch_csv<T: Float>(text: &str) -> Result<BatchResult<T>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == BATCH_CSV_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "missing batch header, found {:?}",
                other.map(|t| t.1)
            )))
        }
    }
    let rows = lines
        .filter(|(_, line)| !line.is_empty())
        .map(|(i, line)| parse_batch_row(line, i + 1))
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchResult { rows })
}

/// Config field swept by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    NumTtds,
    MaxDelayS,
    BandwidthHz,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::NumTtds => "num_ttds",
            SweepParameter::MaxDelayS => "max_delay_s",
            SweepParameter::BandwidthHz => "bandwidth_hz",
        }
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "num_ttds" => Ok(SweepParameter::NumTtds),
            "max_delay_s" => Ok(SweepParameter::MaxDelayS),
            "bandwidth_hz" => Ok(SweepParameter::BandwidthHz),
            other => Err(Error::Parse(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

fn apply_parameter<T: Float>(
    base: &SystemConfig<T>,
    parameter: SweepParameter,
    value: T,
) -> Result<SystemConfig<T>> {
    let mut cfg = base.clone();
    match parameter {
        SweepParameter::NumTtds => {
            let raw = value.to_f64_lossy();
            if raw < 0.0 || raw.fract() != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "TTD count must be a nonnegative integer, got {raw}"
                )));
            }
            cfg.num_ttds = raw as usize;
        }
        SweepParameter::MaxDelayS => cfg.max_delay_s = value,
        SweepParameter::BandwidthHz => cfg.bandwidth_hz = value,
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub parameter: SweepParameter,
    pub value: T,
    pub row: BatchRow<T>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult<T> {
    pub rows: Vec<SweepRow<T>>,
}

impl<T: Float> SweepResult<T> {
    /// The batch run for one swept value.
    pub fn batch_for(&self, value: T) -> BatchResult<T> {
        BatchResult {
            rows: self
                .rows
                .iter()
                .filter(|r| r.value == value)
                .map(|r| r.row.clone())
                .collect(),
        }
    }
}

/// Runs one batch per swept value, sharing the seed so every value sees the
/// same user placements.
#[allow(clippy::too_many_arguments)]
pub fn sweep<T: Float>(
    parameter: SweepParameter,
    values: &[T],
    base: &SystemConfig<T>,
    n_scenarios: usize,
    seed: u64,
    archs: &[Architecture],
    kinds: &[UtilityKind],
    power_model: &PowerModel<T>,
    opts: &BatchOptions<T>,
) -> Result<SweepResult<T>> {
    if values.is_empty() {
        return Err(Error::InvalidConfig(
            "sweep needs at least one value".into(),
        ));
    }
    let mut rows = Vec::new();
    for &value in values {
        let cfg = apply_parameter(base, parameter, value)?;
        let batch = run_batch(&cfg, n_scenarios, seed, archs, kinds, power_model, opts)?;
        rows.extend(batch.rows.into_iter().map(|row| SweepRow {
            parameter,
            value,
            row,
        }));
    }
    Ok(SweepResult { rows })
}

pub const SWEEP_CSV_HEADER: &str =
    "param,value,seed,scenario,arch,utility,user,rate_bps,log_rate,se,ee,runtime_s,status";

pub fn write_sweep_csv<T: Float>(result: &SweepResult<T>, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for entry in &result.rows {
        let row = &entry.row;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            entry.parameter.as_str(),
            entry.value,
            row.seed,
            row.scenario,
            row.arch.as_str(),
            row.utility.as_str(),
            row.user,
            row.rate_bps,
            row.log_rate,
            row.se,
            row.ee,
            row.runtime_s,
            row.status
        )?;
    }
    Ok(())
}

pub fn sweep_csv_string<T: Float>(result: &SweepResult<T>) -> String {
    let mut buffer = Vec::new();
    write_sweep_csv(result, &mut buffer).expect("write to memory");
    String::from_utf8(buffer).expect("csv is utf-8")
}

pub fn parse_sweep_csv<T: Float>(text: &str) -> Result<SweepResult<T>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == SWEEP_CSV_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "missing sweep header, found {:?}",
                other.map(|t| t.1)
            )))
        }
    }
    let rows = lines
        .filter(|(_, line)| !line.is_empty())
        .map(|(i, line)| -> Result<SweepRow<T>> {
            let (head, rest) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: missing fields", i + 1)))?;
            let (value_text, row_text) = rest
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: missing fields", i + 1)))?;
            Ok(SweepRow {
                parameter: head.parse()?,
                value: value_text
                    .parse::<T>()
                    .map_err(|e| Error::Parse(format!("line {}: bad value: {e}", i + 1)))?,
                row: parse_batch_row(row_text, i + 1)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SystemConfig<f64> {
        // An 8-element array has a centimeter-scale Rayleigh distance, below
        // the 1 m sampling grid, so both users must be far-field.
        SystemConfig {
            num_antennas: 8,
            num_ttds: 4,
            num_subbands: 4,
            ttd_grid_points: 64,
            ao_max_iters: 6,
            num_nf_users: 0,
            num_ff_users: 2,
            ..SystemConfig::default()
        }
    }

    fn quiet() -> BatchOptions<f64> {
        BatchOptions {
            measure_runtime: false,
            ..BatchOptions::default()
        }
    }

    #[test]
    fn batch_is_deterministic_for_a_fixed_seed() {
        let cfg = small_cfg();
        let pm = PowerModel::default();
        let archs = [Architecture::Pa, Architecture::Jpta];
        let kinds = [UtilityKind::Sum];
        let a = run_batch(&cfg, 3, 11, &archs, &kinds, &pm, &quiet()).unwrap();
        let b = run_batch(&cfg, 3, 11, &archs, &kinds, &pm, &quiet()).unwrap();
        assert_eq!(batch_csv_string(&a), batch_csv_string(&b));
    }

    #[test]
    fn batch_row_count_is_scenarios_by_users_by_combos() {
        let cfg = small_cfg();
        let pm = PowerModel::default();
        let result = run_batch(
            &cfg,
            2,
            5,
            &[Architecture::Fd],
            &[UtilityKind::Sum, UtilityKind::Log],
            &pm,
            &quiet(),
        )
        .unwrap();
        assert_eq!(result.rows.len(), 2 * cfg.num_users() * 2);
    }

    #[test]
    fn batch_csv_round_trips() {
        let cfg = small_cfg();
        let pm = PowerModel::default();
        let result = run_batch(
            &cfg,
            2,
            7,
            &[Architecture::Fd, Architecture::Jpta],
            &[UtilityKind::Log],
            &pm,
            &quiet(),
        )
        .unwrap();
        let text = batch_csv_string(&result);
        let parsed = parse_batch_csv::<f64>(&text).unwrap();
        assert_eq!(parsed, result);
    }

    #[test]
    fn sweep_shares_user_placements_across_values() {
        let cfg = small_cfg();
        let pm = PowerModel::default();
        let result = sweep(
            SweepParameter::NumTtds,
            &[0.0, 4.0],
            &cfg,
            2,
            13,
            &[Architecture::Jpta],
            &[UtilityKind::Sum],
            &pm,
            &quiet(),
        )
        .unwrap();
        let zero = result.batch_for(0.0);
        let four = result.batch_for(4.0);
        let seeds0: Vec<u64> = zero.rows.iter().map(|r| r.seed).collect();
        let seeds4: Vec<u64> = four.rows.iter().map(|r| r.seed).collect();
        assert_eq!(seeds0, seeds4);
        let text = sweep_csv_string(&result);
        let parsed = parse_sweep_csv::<f64>(&text).unwrap();
        assert_eq!(parsed, result);
    }

    #[test]
    fn singleton_sweep_equals_plain_batch() {
        let cfg = small_cfg();
        let pm = PowerModel::default();
        let archs = [Architecture::Pa];
        let kinds = [UtilityKind::Sum];
        let swept = sweep(
            SweepParameter::BandwidthHz,
            &[cfg.bandwidth_hz],
            &cfg,
            2,
            21,
            &archs,
            &kinds,
            &pm,
            &quiet(),
        )
        .unwrap();
        let plain = run_batch(&cfg, 2, 21, &archs, &kinds, &pm, &quiet()).unwrap();
        assert_eq!(swept.batch_for(cfg.bandwidth_hz), plain);
    }

    #[test]
    fn sweep_rejects_fractional_ttd_counts() {
        let cfg = small_cfg();
        let pm = PowerModel::default();
        let err = sweep(
            SweepParameter::NumTtds,
            &[2.5],
            &cfg,
            1,
            1,
            &[Architecture::Jpta],
            &[UtilityKind::Sum],
            &pm,
            &quiet(),
        );
        assert!(err.is_err());
    }
}
