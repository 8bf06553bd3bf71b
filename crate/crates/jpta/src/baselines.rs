//! Fully-digital upper bound and phased-array (phase-shifter-only) baseline,
//! sharing the allocation and power machinery of the alternating optimizer.

use num_complex::Complex;

use crate::arrays::JptaBeamformer;
use crate::error::{Error, Result};
use crate::float::Float;
use crate::optimizer::{solve, ScaOptions, SolverState};
use crate::scenario::{ChannelSet, SystemConfig};
use crate::UtilityKind;

/// Beamforming architecture under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// Fully digital: one RF chain per antenna, unconstrained unit-norm
    /// beamformer per subband. Performance upper bound.
    Fd,
    /// Phased array: a single frequency-flat unit-modulus vector.
    Pa,
    /// Joint phase-time array: phase shifters behind true-time delays.
    Jpta,
}

impl Architecture {
    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Fd => "fd",
            Architecture::Pa => "pa",
            Architecture::Jpta => "jpta",
        }
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fd" => Ok(Architecture::Fd),
            "pa" => Ok(Architecture::Pa),
            "jpta" => Ok(Architecture::Jpta),
            other => Err(Error::Parse(format!("unknown architecture {other:?}"))),
        }
    }
}

/// Unconstrained per-subband beamformers, unit norm each.
#[derive(Debug, Clone, PartialEq)]
pub struct FdBeamformer<T> {
    pub weights: Vec<Vec<Complex<T>>>,
}

/// Frequency-flat phase-shifter beamformer: one phase per antenna, applied
/// identically on every subband with a 1/sqrt(N) amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct PaBeamformer<T> {
    pub phases: Vec<T>,
}

impl<T: Float> PaBeamformer<T> {
    pub fn neutral(num_antennas: usize) -> Self {
        Self {
            phases: vec![T::zero(); num_antennas],
        }
    }

    pub fn weights(&self) -> Vec<Complex<T>> {
        let scale = T::one() / T::of_usize(self.phases.len()).sqrt();
        self.phases
            .iter()
            .map(|&phi| Complex::from_polar(scale, phi))
            .collect()
    }
}

/// Any of the three architectures' beamformers, with a uniform way to
/// produce the per-subband weight vectors that enter gains and rates.
#[derive(Debug, Clone, PartialEq)]
pub enum Beamformer<T> {
    Fd(FdBeamformer<T>),
    Pa(PaBeamformer<T>),
    Jpta(JptaBeamformer<T>),
}

impl<T: Float> Beamformer<T> {
    pub fn architecture(&self) -> Architecture {
        match self {
            Beamformer::Fd(_) => Architecture::Fd,
            Beamformer::Pa(_) => Architecture::Pa,
            Beamformer::Jpta(_) => Architecture::Jpta,
        }
    }

    /// Effective weight vector on each subband frequency.
    pub fn subband_weights(&self, freqs: &[T]) -> Vec<Vec<Complex<T>>> {
        match self {
            Beamformer::Fd(fd) => fd.weights.clone(),
            Beamformer::Pa(pa) => {
                let w = pa.weights();
                freqs.iter().map(|_| w.clone()).collect()
            }
            Beamformer::Jpta(bf) => freqs
                .iter()
                .map(|&f| crate::arrays::effective_beamformer(bf, f))
                .collect(),
        }
    }

    pub fn as_jpta(&self) -> Option<&JptaBeamformer<T>> {
        match self {
            Beamformer::Jpta(bf) => Some(bf),
            _ => None,
        }
    }
}

/// Matched-filter beamformer per subband: w_m = h_{m,k*} / ||h_{m,k*}||,
/// the unit-norm maximizer of the assigned user's gain.
pub fn fd_beamformer<T: Float>(
    assignment: &[usize],
    channels: &ChannelSet<T>,
) -> Result<FdBeamformer<T>> {
    let weights = assignment
        .iter()
        .enumerate()
        .map(|(m, &k)| {
            let h = channels.channel(m, k);
            let norm = h
                .iter()
                .map(|z| z.norm_sqr())
                .fold(T::zero(), |acc, t| acc + t)
                .sqrt();
            if !(norm > T::zero()) {
                return Err(Error::ZeroChannel {
                    subband: m,
                    user: k,
                });
            }
            Ok(h.iter().map(|&z| z / norm).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FdBeamformer { weights })
}

/// Frequency-flat phase alignment against per-subband targets: each antenna
/// phase follows the argument of the summed target entries.
pub fn pa_from_targets<T: Float>(targets: &[Vec<Complex<T>>]) -> PaBeamformer<T> {
    let n = targets.first().map_or(0, |w| w.len());
    let phases = (0..n)
        .map(|idx| {
            let total = targets
                .iter()
                .map(|w| w[idx])
                .fold(Complex::new(T::zero(), T::zero()), |acc, z| acc + z);
            if total.norm_sqr() > T::zero() {
                total.arg()
            } else {
                T::zero()
            }
        })
        .collect();
    PaBeamformer { phases }
}

/// Joint subband allocation, matched-filter beamforming, and power
/// allocation for the fully-digital architecture.
pub fn fd_optimize<T: Float>(
    channels: &ChannelSet<T>,
    cfg: &SystemConfig<T>,
    kind: UtilityKind,
    opts: &ScaOptions<T>,
) -> Result<SolverState<T>> {
    solve(channels, cfg, kind, opts, Architecture::Fd)
}

/// Joint subband allocation, flat phase-shifter beamforming, and power
/// allocation for the phased-array architecture.
pub fn pa_optimize<T: Float>(
    channels: &ChannelSet<T>,
    cfg: &SystemConfig<T>,
    kind: UtilityKind,
    opts: &ScaOptions<T>,
) -> Result<SolverState<T>> {
    solve(channels, cfg, kind, opts, Architecture::Pa)
}
