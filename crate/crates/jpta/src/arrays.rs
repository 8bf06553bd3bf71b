//! Beamformer algebra: phase-shifter banks, true-time-delay banks, the
//! per-subband effective beamformer they induce, array gains, user rates,
//! and the scheduling utility.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::float::Float;
use crate::scenario::{ChannelSet, SystemConfig};

/// Utility applied to per-user rates: plain sum or proportional fairness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityKind {
    Sum,
    Log,
}

impl UtilityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UtilityKind::Sum => "sum",
            UtilityKind::Log => "log",
        }
    }
}

impl std::str::FromStr for UtilityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(UtilityKind::Sum),
            "log" => Ok(UtilityKind::Log),
            other => Err(Error::Parse(format!("unknown utility kind {other:?}"))),
        }
    }
}

/// Phase-shifter bank: one phase per antenna, grouped by TTD subarray.
/// Entries are stored as radians so the unit-modulus hardware constraint
/// cannot be violated. The implied analog matrix carries a 1/sqrt(N) factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShifterBank<T> {
    /// `phases[i][j]`: phase of element j within the subarray driven by TTD i.
    pub phases: Vec<Vec<T>>,
}

impl<T: Float> PhaseShifterBank<T> {
    pub fn zeros(num_ttds: usize, subarray: usize) -> Self {
        Self {
            phases: vec![vec![T::zero(); subarray]; num_ttds],
        }
    }

    pub fn num_ttds(&self) -> usize {
        self.phases.len()
    }

    pub fn subarray_size(&self) -> usize {
        self.phases.first().map_or(0, |row| row.len())
    }

    pub fn num_antennas(&self) -> usize {
        self.phases.iter().map(|row| row.len()).sum()
    }
}

/// True-time-delay bank, one delay per subarray, clamped to [0, tau_max].
#[derive(Debug, Clone, PartialEq)]
pub struct TtdBank<T> {
    pub delays_s: Vec<T>,
}

impl<T: Float> TtdBank<T> {
    pub fn zeros(num_ttds: usize) -> Self {
        Self {
            delays_s: vec![T::zero(); num_ttds],
        }
    }

    pub fn validate(&self, cfg: &SystemConfig<T>) -> Result<()> {
        if self.delays_s.len() != cfg.num_ttds {
            return Err(Error::DimensionMismatch(format!(
                "delay bank holds {} delays, config expects {}",
                self.delays_s.len(),
                cfg.num_ttds
            )));
        }
        for (i, &tau) in self.delays_s.iter().enumerate() {
            if tau < T::zero() || tau > cfg.max_delay_s {
                return Err(Error::InvalidConfig(format!(
                    "delay {i} = {tau} s outside [0, {}]",
                    cfg.max_delay_s
                )));
            }
        }
        Ok(())
    }
}

/// Joint phase-time beamformer: a phase-shifter bank behind a delay bank.
#[derive(Debug, Clone, PartialEq)]
pub struct JptaBeamformer<T> {
    pub ps: PhaseShifterBank<T>,
    pub ttd: TtdBank<T>,
}

impl<T: Float> JptaBeamformer<T> {
    pub fn neutral(cfg: &SystemConfig<T>) -> Self {
        Self {
            ps: PhaseShifterBank::zeros(cfg.num_ttds, cfg.subarray_size()),
            ttd: TtdBank::zeros(cfg.num_ttds),
        }
    }

    pub fn validate(&self, cfg: &SystemConfig<T>) -> Result<()> {
        if self.ps.num_ttds() != cfg.num_ttds || self.ps.subarray_size() != cfg.subarray_size() {
            return Err(Error::DimensionMismatch(format!(
                "phase bank is {}x{}, config expects {}x{}",
                self.ps.num_ttds(),
                self.ps.subarray_size(),
                cfg.num_ttds,
                cfg.subarray_size()
            )));
        }
        self.ttd.validate(cfg)
    }
}

/// Subband assignment (one user per subband), per-subband powers, and the
/// relaxed allocation retained from the convex stage when available.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan<T> {
    pub assignment: Vec<usize>,
    pub power_w: Vec<T>,
    pub relaxed: Option<Vec<Vec<T>>>,
}

impl<T: Float> AllocationPlan<T> {
    pub fn validate(&self, cfg: &SystemConfig<T>) -> Result<()> {
        if self.assignment.len() != cfg.num_subbands || self.power_w.len() != cfg.num_subbands {
            return Err(Error::DimensionMismatch(format!(
                "plan covers {} subbands, config expects {}",
                self.assignment.len(),
                cfg.num_subbands
            )));
        }
        for &k in &self.assignment {
            if k >= cfg.num_users() {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    limit: cfg.num_users(),
                });
            }
        }
        let mut total = T::zero();
        for &p in &self.power_w {
            if p < T::zero() {
                return Err(Error::InvalidConfig(format!("negative subband power {p}")));
            }
            total += p;
        }
        if total > cfg.transmit_power_w + T::of(1e-9) {
            return Err(Error::InvalidConfig(format!(
                "total power {total} exceeds budget {}",
                cfg.transmit_power_w
            )));
        }
        if let Some(rows) = &self.relaxed {
            for (m, row) in rows.iter().enumerate() {
                let sum: T = row.iter().fold(T::zero(), |acc, &b| acc + b);
                if (sum - T::one()).abs() > T::of(1e-6) {
                    return Err(Error::NonSimplex(format!("row {m} sums to {sum}")));
                }
            }
        }
        Ok(())
    }
}

/// Per-TTD phase rotations at frequency `f_hz`: entry i is exp(-j 2 pi f tau_i).
pub fn ttd_phase_vector<T: Float>(ttd: &TtdBank<T>, f_hz: T) -> Vec<Complex<T>> {
    let two_pi = T::of(2.0) * T::PI();
    ttd.delays_s
        .iter()
        .map(|&tau| Complex::cis(-two_pi * f_hz * tau))
        .collect()
}

/// Effective per-subband beamformer w = Phi T(f): element j of subarray i is
/// (1/sqrt(N)) exp(j phi_ij) exp(-j 2 pi f tau_i). Always unit norm.
pub fn effective_beamformer<T: Float>(bf: &JptaBeamformer<T>, f_hz: T) -> Vec<Complex<T>> {
    let n = bf.ps.num_antennas();
    let scale = T::one() / T::of_usize(n).sqrt();
    let rotations = ttd_phase_vector(&bf.ttd, f_hz);
    let mut w = Vec::with_capacity(n);
    for (row, rot) in bf.ps.phases.iter().zip(&rotations) {
        for &phi in row {
            w.push(Complex::from_polar(scale, phi) * rot);
        }
    }
    w
}

/// Inner product a^H w.
pub fn steer_dot<T: Float>(a: &[Complex<T>], w: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(w)
        .map(|(x, y)| x.conj() * y)
        .fold(Complex::new(T::zero(), T::zero()), |acc, z| acc + z)
}

/// Array gain |a^H w|^2 of beamformer `w` toward steering vector `a`.
pub fn array_gain<T: Float>(a: &[Complex<T>], w: &[Complex<T>]) -> Result<T> {
    if a.len() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "steering vector length {} vs beamformer length {}",
            a.len(),
            w.len()
        )));
    }
    Ok(steer_dot(a, w).norm_sqr())
}

/// Effective channel-to-noise ratio |h_{m,k}^H w_m|^2 / sigma^2 for one
/// (subband, user) pair given the per-subband beamformer weights.
pub fn effective_cnr<T: Float>(
    subband: usize,
    user: usize,
    channels: &ChannelSet<T>,
    weights: &[Vec<Complex<T>>],
    cfg: &SystemConfig<T>,
) -> T {
    let h = channels.channel(subband, user);
    steer_dot(h, &weights[subband]).norm_sqr() / cfg.noise_power_per_subband_w()
}

/// Table of effective channel-to-noise ratios, indexed `[subband][user]`.
pub fn cnr_table<T: Float>(
    channels: &ChannelSet<T>,
    weights: &[Vec<Complex<T>>],
    cfg: &SystemConfig<T>,
) -> Vec<Vec<T>> {
    let noise = cfg.noise_power_per_subband_w();
    (0..channels.num_subbands())
        .map(|m| {
            (0..channels.num_users())
                .map(|k| steer_dot(channels.channel(m, k), &weights[m]).norm_sqr() / noise)
                .collect()
        })
        .collect()
}

/// Achievable rate of every user in bits/s under the given assignment,
/// powers, and per-subband beamformer weights:
/// R_k = (B/M) sum over owned subbands of log2(1 + p_m cnr_{m,k}).
pub fn user_rates_from_cnr<T: Float>(
    assignment: &[usize],
    power_w: &[T],
    cnr: &[Vec<T>],
    num_users: usize,
    cfg: &SystemConfig<T>,
) -> Vec<T> {
    let subband_width = cfg.bandwidth_hz / T::of_usize(cfg.num_subbands);
    let mut rates = vec![T::zero(); num_users];
    for (m, (&k, &p)) in assignment.iter().zip(power_w).enumerate() {
        rates[k] += subband_width * (T::one() + p * cnr[m][k]).log2();
    }
    rates
}

/// Rate of a single user in bits/s for a full plan and beamformer weights.
pub fn user_rate<T: Float>(
    user: usize,
    plan: &AllocationPlan<T>,
    channels: &ChannelSet<T>,
    weights: &[Vec<Complex<T>>],
    cfg: &SystemConfig<T>,
) -> T {
    let cnr = cnr_table(channels, weights, cfg);
    user_rates_from_cnr(
        &plan.assignment,
        &plan.power_w,
        &cnr,
        channels.num_users(),
        cfg,
    )[user]
}

/// Scheduling utility over per-user rates. The logarithmic kind returns
/// negative infinity when any rate is nonpositive so infeasible candidates
/// stay comparable.
pub fn utility<T: Float>(rates: &[T], kind: UtilityKind) -> T {
    match kind {
        UtilityKind::Sum => rates.iter().fold(T::zero(), |acc, &r| acc + r),
        UtilityKind::Log => rates.iter().fold(T::zero(), |acc, &r| {
            if r > T::zero() {
                acc + r.ln()
            } else {
                T::neg_infinity()
            }
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{synthesize_channels, FieldTag, UserPosition};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn cfg() -> SystemConfig<f64> {
        SystemConfig::default()
    }

    fn small_cfg() -> SystemConfig<f64> {
        SystemConfig {
            num_antennas: 4,
            num_ttds: 2,
            num_subbands: 4,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn zero_delays_give_all_ones_rotations() {
        let ttd = TtdBank::zeros(4);
        for z in ttd_phase_vector(&ttd, 1e9) {
            assert_abs_diff_eq!(z.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn full_period_delay_wraps_to_identity() {
        let f = 2.5e9;
        let ttd = TtdBank {
            delays_s: vec![1.0 / f; 3],
        };
        for z in ttd_phase_vector(&ttd, f) {
            assert_abs_diff_eq!(z.re, 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn rotations_are_unit_modulus() {
        let ttd = TtdBank {
            delays_s: vec![1.3e-9, 0.4e-9, 4.9e-9],
        };
        for z in ttd_phase_vector(&ttd, 97.25e9) {
            assert_relative_eq!(z.norm(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn neutral_beamformer_is_uniform() {
        let c = small_cfg();
        let bf = JptaBeamformer::neutral(&c);
        let w = effective_beamformer(&bf, 100e9);
        for z in &w {
            assert_relative_eq!(z.re, 0.5, max_relative = 1e-12);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn effective_beamformer_always_unit_norm() {
        let c = cfg();
        let bf = JptaBeamformer {
            ps: PhaseShifterBank {
                phases: (0..c.num_ttds)
                    .map(|i| {
                        (0..c.subarray_size())
                            .map(|j| (i * 7 + j) as f64 * 0.37)
                            .collect()
                    })
                    .collect(),
            },
            ttd: TtdBank {
                delays_s: (0..c.num_ttds).map(|i| i as f64 * 0.2e-9).collect(),
            },
        };
        for f in [95.3125e9, 100e9, 104.6875e9] {
            let w = effective_beamformer(&bf, f);
            let norm_sq: f64 = w.iter().map(|z| z.norm_sqr()).sum();
            assert_relative_eq!(norm_sq, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn coherent_gain_equals_antenna_count() {
        let n = 64;
        let a = vec![num_complex::Complex::new(1.0, 0.0); n];
        let w = vec![num_complex::Complex::new(1.0 / (n as f64).sqrt(), 0.0); n];
        assert_relative_eq!(array_gain(&a, &w).unwrap(), n as f64, max_relative = 1e-12);
    }

    #[test]
    fn orthogonal_gain_is_zero() {
        let a = vec![
            num_complex::Complex::new(1.0, 0.0),
            num_complex::Complex::new(1.0, 0.0),
        ];
        let w = vec![
            num_complex::Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            num_complex::Complex::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ];
        assert_abs_diff_eq!(array_gain(&a, &w).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gain_rejects_length_mismatch() {
        let a = vec![num_complex::Complex::new(1.0, 0.0); 3];
        let w = vec![num_complex::Complex::new(1.0, 0.0); 4];
        assert!(array_gain(&a, &w).is_err());
    }

    #[test]
    fn userless_subbands_yield_zero_rate() {
        let c = small_cfg();
        let mut c2 = c.clone();
        c2.num_nf_users = 1;
        c2.num_ff_users = 1;
        let users = [
            UserPosition::new(1.0, 1.0, FieldTag::Far),
            UserPosition::new(2.0, 10.0, FieldTag::Far),
        ];
        let channels = synthesize_channels(&users, &c2).unwrap();
        let bf = JptaBeamformer::neutral(&c2);
        let freqs = channels.subband_frequencies_hz().to_vec();
        let weights: Vec<_> = freqs
            .iter()
            .map(|&f| effective_beamformer(&bf, f))
            .collect();
        let plan = AllocationPlan {
            assignment: vec![0; c2.num_subbands],
            power_w: vec![c2.transmit_power_w / c2.num_subbands as f64; c2.num_subbands],
            relaxed: None,
        };
        assert_eq!(user_rate(1, &plan, &channels, &weights, &c2), 0.0);
        assert!(user_rate(0, &plan, &channels, &weights, &c2) > 0.0);
    }

    #[test]
    fn unit_snr_rate_is_one_subband_width() {
        let c = small_cfg();
        let cnr = vec![vec![2.0], vec![0.0], vec![0.0], vec![0.0]];
        let rates = user_rates_from_cnr(&[0, 0, 0, 0], &[0.5, 0.0, 0.0, 0.0], &cnr, 1, &c);
        assert_relative_eq!(
            rates[0],
            c.bandwidth_hz / c.num_subbands as f64,
            max_relative = 1e-12
        );
    }

    #[test]
    fn utility_sum_and_log() {
        assert_eq!(utility(&[1.0, 2.0], UtilityKind::Sum), 3.0);
        let e = std::f64::consts::E;
        assert_relative_eq!(
            utility(&[e, e * e], UtilityKind::Log),
            3.0,
            max_relative = 1e-12
        );
        assert_eq!(utility(&[1.0, 0.0], UtilityKind::Log), f64::NEG_INFINITY);
    }

    #[test]
    fn beamformer_validation_checks_shapes_and_delay_range() {
        let c = small_cfg();
        let mut bf = JptaBeamformer::neutral(&c);
        bf.validate(&c).unwrap();
        bf.ttd.delays_s[0] = c.max_delay_s * 2.0;
        assert!(bf.validate(&c).is_err());
        let mut wrong = JptaBeamformer::neutral(&c);
        wrong.ps.phases.pop();
        assert!(wrong.validate(&c).is_err());
    }

    #[test]
    fn plan_validation_catches_budget_and_rows() {
        let c = small_cfg();
        let mut plan = AllocationPlan {
            assignment: vec![0, 0, 1, 1],
            power_w: vec![3.0, 3.0, 3.0, 3.0],
            relaxed: None,
        };
        assert!(plan.validate(&c).is_err());
        plan.power_w = vec![2.5; 4];
        plan.validate(&c).unwrap();
        plan.relaxed = Some(vec![vec![0.7, 0.2]; 4]);
        assert!(plan.validate(&c).is_err());
    }
}
