//! System configuration, user placement, and line-of-sight channel synthesis
//! for a uniform linear array serving near- and far-field users over OFDM
//! subbands.

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::float::Float;

/// Propagation regime of a user relative to the Rayleigh distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldTag {
    Near,
    Far,
}

/// All scalar system parameters plus solver knobs.
///
/// Physical quantities are SI (Hz, W, W/Hz, s, m/s). `Default` carries the
/// reference simulation setup: 100 GHz carrier, 10 GHz bandwidth, 64-element
/// array, 16 subbands, 16 TTDs, 40 dBm transmit power, -174 dBm/Hz noise
/// density, 5 ns maximum delay, 2000-point delay search grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig<T> {
    pub carrier_frequency_hz: T,
    pub bandwidth_hz: T,
    pub num_antennas: usize,
    pub num_subbands: usize,
    pub num_ttds: usize,
    pub transmit_power_w: T,
    pub noise_psd_w_per_hz: T,
    pub max_delay_s: T,
    pub ttd_grid_points: usize,
    pub num_nf_users: usize,
    pub num_ff_users: usize,
    pub ao_max_iters: usize,
    pub ao_tolerance: T,
    pub penalty_init: T,
    pub speed_of_light_m_s: T,
}

impl<T: Float> Default for SystemConfig<T> {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: T::of(100e9),
            bandwidth_hz: T::of(10e9),
            num_antennas: 64,
            num_subbands: 16,
            num_ttds: 16,
            transmit_power_w: T::of(10.0),
            noise_psd_w_per_hz: T::of(10f64.powf((-174.0 - 30.0) / 10.0)),
            max_delay_s: T::of(5e-9),
            ttd_grid_points: 2000,
            num_nf_users: 1,
            num_ff_users: 1,
            ao_max_iters: 30,
            ao_tolerance: T::of(1e-5),
            penalty_init: T::of(1e-5),
            speed_of_light_m_s: T::of(299_792_458.0),
        }
    }
}

impl<T: Float> SystemConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.bandwidth_hz > T::zero()) {
            return err(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_hz
            ));
        }
        if !(self.carrier_frequency_hz > self.bandwidth_hz / T::of(2.0)) {
            return err(format!(
                "carrier frequency {} must exceed half the bandwidth {}",
                self.carrier_frequency_hz, self.bandwidth_hz
            ));
        }
        if self.num_antennas < 2 {
            return err(format!(
                "need at least 2 antennas, got {}",
                self.num_antennas
            ));
        }
        if self.num_subbands == 0 {
            return err("need at least one subband".into());
        }
        if self.num_ttds > 0 && !self.num_antennas.is_multiple_of(self.num_ttds) {
            return err(format!(
                "antenna count {} not divisible by TTD count {}",
                self.num_antennas, self.num_ttds
            ));
        }
        if !(self.transmit_power_w > T::zero()) {
            return err("transmit power must be positive".into());
        }
        if !(self.noise_psd_w_per_hz > T::zero()) {
            return err("noise power density must be positive".into());
        }
        if self.max_delay_s < T::zero() {
            return err("maximum delay must be nonnegative".into());
        }
        if self.ttd_grid_points < 2 {
            return err(format!(
                "delay search grid needs at least 2 points, got {}",
                self.ttd_grid_points
            ));
        }
        if self.num_users() == 0 {
            return err("need at least one user".into());
        }
        if self.num_subbands < self.num_users() {
            return err(format!(
                "need at least as many subbands ({}) as users ({})",
                self.num_subbands,
                self.num_users()
            ));
        }
        if self.ao_max_iters == 0 {
            return err("need at least one outer iteration".into());
        }
        if !(self.ao_tolerance > T::zero()) || !(self.penalty_init > T::zero()) {
            return err("tolerance and penalty initialization must be positive".into());
        }
        if !(self.speed_of_light_m_s > T::zero()) {
            return err("propagation speed must be positive".into());
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.num_nf_users + self.num_ff_users
    }

    /// Elements per TTD-driven subarray. Requires `num_ttds > 0`.
    pub fn subarray_size(&self) -> usize {
        self.num_antennas / self.num_ttds
    }

    pub fn wavelength_m(&self) -> T {
        self.speed_of_light_m_s / self.carrier_frequency_hz
    }

    /// Half-wavelength element spacing d = c / (2 f_c).
    pub fn element_spacing_m(&self) -> T {
        self.speed_of_light_m_s / (T::of(2.0) * self.carrier_frequency_hz)
    }

    /// Noise power per subband: density times the subband width B/M.
    pub fn noise_power_per_subband_w(&self) -> T {
        self.noise_psd_w_per_hz * self.bandwidth_hz / T::of_usize(self.num_subbands)
    }
}

/// Polar-coordinate user location with its propagation regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPosition<T> {
    pub angle_rad: T,
    pub range_m: T,
    pub field: FieldTag,
}

impl<T: Float> UserPosition<T> {
    pub fn new(angle_rad: T, range_m: T, field: FieldTag) -> Self {
        Self {
            angle_rad,
            range_m,
            field,
        }
    }

    /// Checks positivity, the open angular interval, and that the field tag
    /// agrees with the Rayleigh distance of `cfg`. A user exactly at the
    /// Rayleigh distance counts as near-field.
    pub fn validate(&self, cfg: &SystemConfig<T>) -> Result<()> {
        if !(self.range_m > T::zero()) {
            return Err(Error::InvalidUser(format!(
                "range must be positive, got {}",
                self.range_m
            )));
        }
        if !(self.angle_rad > T::zero()) || !(self.angle_rad < T::PI()) {
            return Err(Error::InvalidUser(format!(
                "angle must lie strictly inside (0, pi), got {}",
                self.angle_rad
            )));
        }
        let boundary = rayleigh_distance(cfg);
        let expected = if self.range_m <= boundary {
            FieldTag::Near
        } else {
            FieldTag::Far
        };
        if expected != self.field {
            return Err(Error::InvalidUser(format!(
                "field tag {:?} inconsistent with range {} m vs Rayleigh distance {} m",
                self.field, self.range_m, boundary
            )));
        }
        Ok(())
    }
}

/// Complex channel vectors `h[m][k]` (length N each) for all subbands and
/// users, together with the subband center frequencies.
#[derive(Debug, Clone)]
pub struct ChannelSet<T> {
    entries: Vec<Vec<Vec<Complex<T>>>>,
    subband_frequencies_hz: Vec<T>,
}

impl<T: Float> ChannelSet<T> {
    pub fn channel(&self, subband: usize, user: usize) -> &[Complex<T>] {
        &self.entries[subband][user]
    }

    pub fn num_subbands(&self) -> usize {
        self.entries.len()
    }

    pub fn num_users(&self) -> usize {
        self.entries.first().map_or(0, |row| row.len())
    }

    pub fn num_antennas(&self) -> usize {
        self.entries
            .first()
            .and_then(|row| row.first())
            .map_or(0, |h| h.len())
    }

    pub fn subband_frequencies_hz(&self) -> &[T] {
        &self.subband_frequencies_hz
    }
}

/// Center frequency of each subband: f_m = f_c + B (2m - 1 - M) / (2M).
pub fn subband_frequencies<T: Float>(cfg: &SystemConfig<T>) -> Vec<T> {
    let m_total = cfg.num_subbands;
    let two_m = T::of_usize(2 * m_total);
    (1..=m_total)
        .map(|m| {
            let offset = T::of_usize(2 * m) - T::one() - T::of_usize(m_total);
            cfg.carrier_frequency_hz + cfg.bandwidth_hz * offset / two_m
        })
        .collect()
}

/// Near/far boundary 2 D^2 / lambda with aperture D = (N - 1) d.
pub fn rayleigh_distance<T: Float>(cfg: &SystemConfig<T>) -> T {
    let aperture = T::of_usize(cfg.num_antennas - 1) * cfg.element_spacing_m();
    T::of(2.0) * aperture * aperture / cfg.wavelength_m()
}

/// Signed element coordinate x_n * d in meters for the 0-based element index,
/// symmetric about the array center.
pub fn element_offset<T: Float>(n: usize, cfg: &SystemConfig<T>) -> Result<T> {
    if n >= cfg.num_antennas {
        return Err(Error::IndexOutOfRange {
            index: n,
            limit: cfg.num_antennas,
        });
    }
    let x = T::of_usize(n) - T::of_usize(cfg.num_antennas - 1) / T::of(2.0);
    Ok(x * cfg.element_spacing_m())
}

/// Excess propagation distance r_{k,n} - r_k of element `n` (0-based)
/// relative to the array center, using the spherical-wave expansion for
/// near-field users and the planar-wave form for far-field users. Computed
/// directly so long ranges lose no precision to cancellation.
pub fn propagation_excess<T: Float>(
    user: &UserPosition<T>,
    n: usize,
    cfg: &SystemConfig<T>,
) -> Result<T> {
    let offset = element_offset(n, cfg)?;
    let planar = -offset * user.angle_rad.cos();
    Ok(match user.field {
        FieldTag::Far => planar,
        FieldTag::Near => {
            let sin = user.angle_rad.sin();
            planar + offset * offset * sin * sin / (T::of(2.0) * user.range_m)
        }
    })
}

/// Propagation distance from element `n` (0-based) to the user.
pub fn propagation_distance<T: Float>(
    user: &UserPosition<T>,
    n: usize,
    cfg: &SystemConfig<T>,
) -> Result<T> {
    Ok(user.range_m + propagation_excess(user, n, cfg)?)
}

/// Exact element-to-user distance ||u_k - c_n|| without either wavefront
/// approximation. Reference geometry for consistency checks.
pub fn exact_propagation_distance<T: Float>(
    user: &UserPosition<T>,
    n: usize,
    cfg: &SystemConfig<T>,
) -> Result<T> {
    let offset = element_offset(n, cfg)?;
    let ux = user.range_m * user.angle_rad.cos();
    let uy = user.range_m * user.angle_rad.sin();
    let dx = ux - offset;
    Ok((dx * dx + uy * uy).sqrt())
}

/// Array response vector at frequency `f_hz`: entry n is
/// exp(-j 2 pi f (r_{k,n} - r_k) / c), unit modulus.
pub fn array_response<T: Float>(
    user: &UserPosition<T>,
    f_hz: T,
    cfg: &SystemConfig<T>,
) -> Result<Vec<Complex<T>>> {
    if !(f_hz > T::zero()) {
        return Err(Error::InvalidConfig(format!(
            "frequency must be positive, got {f_hz}"
        )));
    }
    let wavenumber = T::of(2.0) * T::PI() * f_hz / cfg.speed_of_light_m_s;
    (0..cfg.num_antennas)
        .map(|n| {
            Ok(Complex::cis(
                -wavenumber * propagation_excess(user, n, cfg)?,
            ))
        })
        .collect()
}

/// Line-of-sight channels for every (subband, user) pair:
/// h = beta exp(-j 2 pi f_m r_k / c) a_{m,k} with beta = c / (4 pi f_m r_k).
pub fn synthesize_channels<T: Float>(
    users: &[UserPosition<T>],
    cfg: &SystemConfig<T>,
) -> Result<ChannelSet<T>> {
    if users.is_empty() {
        return Err(Error::InvalidUser("no users supplied".into()));
    }
    for user in users {
        user.validate(cfg)?;
    }
    let freqs = subband_frequencies(cfg);
    let four_pi = T::of(4.0) * T::PI();
    let entries = freqs
        .iter()
        .map(|&f| {
            users
                .iter()
                .map(|user| {
                    let beta = cfg.speed_of_light_m_s / (four_pi * f * user.range_m);
                    let phase = -T::of(2.0) * T::PI() * f * user.range_m / cfg.speed_of_light_m_s;
                    let gain = Complex::from_polar(beta, phase);
                    let response = array_response(user, f, cfg)?;
                    Ok(response.into_iter().map(|a| gain * a).collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelSet {
        entries,
        subband_frequencies_hz: freqs,
    })
}

const ANGLE_STEP_DEG: f64 = 0.5;
const RANGE_MIN_M: f64 = 1.0;
const RANGE_MAX_M: f64 = 20.0;
const RANGE_STEP_M: f64 = 0.5;

/// Draws the configured number of near- and far-field users from the
/// half-circle sampling grid: angles on a 0.5-degree lattice strictly inside
/// (0, 180) degrees, ranges 1 m to 20 m in 0.5 m steps. Near-field users come
/// first. Deterministic for a fixed seed.
pub fn sample_users<T: Float>(seed: u64, cfg: &SystemConfig<T>) -> Result<Vec<UserPosition<T>>> {
    cfg.validate()?;
    let boundary = rayleigh_distance(cfg);
    let angles: Vec<T> = (1..360)
        .map(|i| T::of(i as f64 * ANGLE_STEP_DEG).to_radians())
        .collect();
    let n_ranges = ((RANGE_MAX_M - RANGE_MIN_M) / RANGE_STEP_M).round() as usize + 1;
    let ranges: Vec<T> = (0..n_ranges)
        .map(|i| T::of(RANGE_MIN_M + i as f64 * RANGE_STEP_M))
        .collect();
    let near: Vec<T> = ranges.iter().copied().filter(|&r| r <= boundary).collect();
    let far: Vec<T> = ranges.iter().copied().filter(|&r| r > boundary).collect();
    if cfg.num_nf_users > 0 && near.is_empty() {
        return Err(Error::GridExhausted {
            field: "near",
            requested: cfg.num_nf_users,
            available: near.len(),
        });
    }
    if cfg.num_ff_users > 0 && far.is_empty() {
        return Err(Error::GridExhausted {
            field: "far",
            requested: cfg.num_ff_users,
            available: far.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |pool: &[T], field: FieldTag, count: usize| -> Vec<UserPosition<T>> {
        (0..count)
            .map(|_| {
                let angle = angles[rng.gen_range(0..angles.len())];
                let range = pool[rng.gen_range(0..pool.len())];
                UserPosition::new(angle, range, field)
            })
            .collect()
    };
    let mut users = draw(&near, FieldTag::Near, cfg.num_nf_users);
    users.extend(draw(&far, FieldTag::Far, cfg.num_ff_users));
    Ok(users)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn cfg() -> SystemConfig<f64> {
        SystemConfig::default()
    }

    #[test]
    fn default_config_is_valid() {
        cfg().validate().unwrap();
    }

    #[test]
    fn rejects_indivisible_subarrays() {
        let mut c = cfg();
        c.num_ttds = 10;
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_more_users_than_subbands() {
        let mut c = cfg();
        c.num_nf_users = 20;
        assert!(c.validate().is_err());
    }

    #[test]
    fn subband_frequencies_match_hand_values() {
        let f = subband_frequencies(&cfg());
        assert_relative_eq!(f[0], 95.3125e9, max_relative = 1e-12);
        assert_relative_eq!(f[15], 104.6875e9, max_relative = 1e-12);
    }

    #[test]
    fn single_subband_sits_at_carrier() {
        let mut c = cfg();
        c.num_subbands = 1;
        c.num_ff_users = 0;
        let f = subband_frequencies(&c);
        assert_relative_eq!(f[0], c.carrier_frequency_hz, max_relative = 1e-15);
    }

    #[test]
    fn subband_frequencies_average_to_carrier_and_step_uniformly() {
        let c = cfg();
        let f = subband_frequencies(&c);
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        assert_relative_eq!(mean, c.carrier_frequency_hz, max_relative = 1e-12);
        let step = c.bandwidth_hz / c.num_subbands as f64;
        for pair in f.windows(2) {
            assert_relative_eq!(pair[1] - pair[0], step, max_relative = 1e-9);
        }
    }

    #[test]
    fn rayleigh_distance_reference_setup() {
        let r = rayleigh_distance(&cfg());
        assert!(r > 5.75 && r < 6.15, "rayleigh distance {r}");
    }

    #[test]
    fn rayleigh_distance_two_elements_is_half_wavelength() {
        let mut c = cfg();
        c.num_antennas = 2;
        c.num_ttds = 2;
        assert_relative_eq!(
            rayleigh_distance(&c),
            c.wavelength_m() / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn rayleigh_distance_quadratic_in_aperture() {
        let mut c = cfg();
        c.num_antennas = 33;
        c.num_ttds = 1;
        let small = rayleigh_distance(&c);
        c.num_antennas = 65;
        let large = rayleigh_distance(&c);
        assert_relative_eq!(large, 4.0 * small, max_relative = 1e-12);
    }

    #[test]
    fn element_offsets_are_centered() {
        let c = cfg();
        let d = c.element_spacing_m();
        assert_relative_eq!(
            element_offset(0, &c).unwrap(),
            -31.5 * d,
            max_relative = 1e-12
        );
        let total: f64 = (0..c.num_antennas)
            .map(|n| element_offset(n, &c).unwrap())
            .sum();
        assert_abs_diff_eq!(total, 0.0, epsilon = 1e-12);

        let mut odd = c.clone();
        odd.num_antennas = 63;
        odd.num_ttds = 1;
        assert_abs_diff_eq!(element_offset(31, &odd).unwrap(), 0.0, epsilon = 1e-18);
    }

    #[test]
    fn element_offset_rejects_out_of_range() {
        assert!(element_offset(64, &cfg()).is_err());
    }

    #[test]
    fn broadside_distances() {
        let c = cfg();
        let far = UserPosition::new(std::f64::consts::FRAC_PI_2, 8.0, FieldTag::Far);
        for n in 0..c.num_antennas {
            assert_relative_eq!(
                propagation_distance(&far, n, &c).unwrap(),
                8.0,
                max_relative = 1e-15
            );
        }
        let near = UserPosition::new(std::f64::consts::FRAC_PI_2, 2.0, FieldTag::Near);
        for n in 0..c.num_antennas {
            let x = element_offset(n, &c).unwrap();
            let expected = x * x / (2.0 * near.range_m);
            assert_relative_eq!(
                propagation_distance(&near, n, &c).unwrap() - near.range_m,
                expected,
                max_relative = 1e-9,
            );
        }
    }

    #[test]
    fn near_minus_far_is_exactly_the_quadratic_term() {
        let c = cfg();
        let angle = 1.1f64;
        let range = 3.0f64;
        let near = UserPosition::new(angle, range, FieldTag::Near);
        let far = UserPosition::new(angle, range, FieldTag::Far);
        for n in 0..c.num_antennas {
            let x = element_offset(n, &c).unwrap();
            let quad = x * x * angle.sin().powi(2) / (2.0 * range);
            let diff = propagation_excess(&near, n, &c).unwrap()
                - propagation_excess(&far, n, &c).unwrap();
            assert_relative_eq!(diff, quad, max_relative = 1e-12);
            let dist_diff = propagation_distance(&near, n, &c).unwrap()
                - propagation_distance(&far, n, &c).unwrap();
            assert_abs_diff_eq!(dist_diff, quad, epsilon = 1e-12);
        }
    }

    #[test]
    fn broadside_far_response_is_all_ones() {
        let c = cfg();
        let user = UserPosition::new(std::f64::consts::FRAC_PI_2, 10.0, FieldTag::Far);
        let a = array_response(&user, c.carrier_frequency_hz, &c).unwrap();
        for entry in &a {
            assert_abs_diff_eq!(entry.re, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(entry.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn response_norm_is_antenna_count() {
        let c = cfg();
        let user = UserPosition::new(0.7, 2.5, FieldTag::Near);
        let a = array_response(&user, 98.0e9, &c).unwrap();
        let norm_sq: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(norm_sq, c.num_antennas as f64, max_relative = 1e-12);
    }

    #[test]
    fn channel_gain_magnitude_and_common_phase() {
        let c = cfg();
        let user = UserPosition::new(1.0, 1.0, FieldTag::Near);
        let set = synthesize_channels(&[user], &c).unwrap();
        let freqs = set.subband_frequencies_hz();
        for m in 0..set.num_subbands() {
            let beta =
                c.speed_of_light_m_s / (4.0 * std::f64::consts::PI * freqs[m] * user.range_m);
            let h = set.channel(m, 0);
            let a = array_response(&user, freqs[m], &c).unwrap();
            let reference = (h[0] / a[0]).arg();
            for (hn, an) in h.iter().zip(&a) {
                assert_relative_eq!(hn.norm(), beta, max_relative = 1e-12);
                let mut delta = (hn / an).arg() - reference;
                delta = delta.rem_euclid(2.0 * std::f64::consts::PI);
                assert!(delta < 1e-9 || (2.0 * std::f64::consts::PI - delta) < 1e-9);
            }
        }
    }

    #[test]
    fn channel_gain_halves_when_range_doubles() {
        let c = cfg();
        let near = UserPosition::new(1.2, 2.0, FieldTag::Near);
        let farther = UserPosition::new(1.2, 4.0, FieldTag::Near);
        let set = synthesize_channels(&[near, farther], &c).unwrap();
        let b1 = set.channel(0, 0)[0].norm();
        let b2 = set.channel(0, 1)[0].norm();
        assert_relative_eq!(b1, 2.0 * b2, max_relative = 1e-12);
    }

    #[test]
    fn channel_rejects_zero_range() {
        let c = cfg();
        let user = UserPosition::new(1.0, 0.0, FieldTag::Near);
        assert!(synthesize_channels(&[user], &c).is_err());
    }

    #[test]
    fn channel_rejects_inconsistent_field_tag() {
        let c = cfg();
        let user = UserPosition::new(1.0, 10.0, FieldTag::Near);
        assert!(synthesize_channels(&[user], &c).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_partitioned() {
        let c = cfg();
        let a = sample_users::<f64>(42, &c).unwrap();
        let b = sample_users::<f64>(42, &c).unwrap();
        assert_eq!(a, b);
        let boundary = rayleigh_distance(&c);
        assert!(a[0].range_m <= boundary);
        assert!(a[1].range_m > boundary);
        assert_eq!(a[0].field, FieldTag::Near);
        assert_eq!(a[1].field, FieldTag::Far);
    }

    #[test]
    fn sampling_respects_the_grid() {
        let mut c = cfg();
        c.num_nf_users = 3;
        c.num_ff_users = 5;
        for user in sample_users::<f64>(7, &c).unwrap() {
            let deg = user.angle_rad.to_degrees();
            assert_abs_diff_eq!(deg / 0.5, (deg / 0.5).round(), epsilon = 1e-9);
            assert!(deg > 0.0 && deg < 180.0);
            assert_abs_diff_eq!(
                user.range_m / 0.5,
                (user.range_m / 0.5).round(),
                epsilon = 1e-9
            );
            assert!(user.range_m >= 1.0 && user.range_m <= 20.0);
            user.validate(&c).unwrap();
        }
    }

    #[test]
    fn scenario_math_works_in_single_precision() {
        let c = SystemConfig::<f32>::default();
        let f = subband_frequencies(&c);
        let mean = f.iter().sum::<f32>() / f.len() as f32;
        assert!((mean - 100e9).abs() < 1e4);
        let r = rayleigh_distance(&c);
        assert!(r > 5.75 && r < 6.15);
        let users = sample_users::<f32>(11, &c).unwrap();
        let set = synthesize_channels(&users, &c).unwrap();
        assert_eq!(set.num_antennas(), 64);
    }

    #[test]
    fn sampling_fails_when_grid_cannot_satisfy_mix() {
        let mut c = cfg();
        // Shrink the array until the Rayleigh distance drops below the 1 m
        // grid minimum, leaving no near-field candidates.
        c.num_antennas = 4;
        c.num_ttds = 4;
        assert!(matches!(
            sample_users::<f64>(1, &c),
            Err(Error::GridExhausted { field: "near", .. })
        ));
    }
}
