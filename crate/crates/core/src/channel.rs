//! Scene geometry and Rician channel draws.
//!
//! The BS is a ULA of `M` antennas; the RIS is an `N_H × N_V` UPA whose
//! elements are numbered with the horizontal index varying fastest,
//! `n = v·N_H + h`. Line-of-sight components carry a zero phase on the first
//! element. UEs have a single antenna.
//!
//! Random draws are taken in a fixed order from one `ChaCha8Rng`: the `N×M`
//! entries of the BS–RIS scattered component row by row, then for each UE
//! its distance, azimuth, elevation and the `N` scattered RIS–UE entries.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{CMatrix, CVector};
use crate::seeds::rng_from_seed;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelError(pub String);

impl std::error::Error for ChannelError {}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scene: {}", self.0)
    }
}

/// Statistics of the scattered components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NlosModel {
    /// i.i.d. `CN(0, 1)` entries.
    #[default]
    Iid,
    /// Isotropic scattering at the RIS: correlation `sinc(2‖u_n − u_m‖/λ)`.
    IsotropicRis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub bs_antennas: usize,
    pub ris_horizontal: usize,
    pub ris_vertical: usize,
    pub users: usize,
    pub carrier_frequency_hz: f64,
    /// Element spacings as fractions of the wavelength.
    pub bs_spacing: f64,
    pub ris_spacing_horizontal: f64,
    pub ris_spacing_vertical: f64,
    pub rician_bs_ris: f64,
    pub rician_ris_ue: f64,
    pub bs_ris_distance_m: f64,
    /// BS angle of departure towards the RIS, radians.
    pub bs_aod: f64,
    pub ris_aoa_azimuth: f64,
    pub ris_aoa_elevation: f64,
    pub ue_distance_m: [f64; 2],
    pub ue_azimuth: [f64; 2],
    pub ue_elevation: [f64; 2],
    pub noise_density_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub nlos: NlosModel,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            bs_antennas: 8,
            ris_horizontal: 8,
            ris_vertical: 8,
            users: 5,
            carrier_frequency_hz: 3e9,
            bs_spacing: 0.5,
            ris_spacing_horizontal: 0.5,
            ris_spacing_vertical: 0.5,
            rician_bs_ris: 5.0,
            rician_ris_ue: 5.0,
            bs_ris_distance_m: 20.0,
            bs_aod: FRAC_PI_6,
            ris_aoa_azimuth: -FRAC_PI_3,
            ris_aoa_elevation: FRAC_PI_6,
            ue_distance_m: [20.0, 40.0],
            ue_azimuth: [-FRAC_PI_3, FRAC_PI_3],
            ue_elevation: [-FRAC_PI_6, FRAC_PI_6],
            noise_density_dbm_hz: -174.0,
            bandwidth_hz: 1e6,
            nlos: NlosModel::Iid,
        }
    }
}

impl SceneConfig {
    /// The reduced scene used for quick trend checks: `M = 4`, a 4×4 RIS and
    /// two users, everything else at the defaults.
    pub fn desk() -> Self {
        Self { bs_antennas: 4, ris_horizontal: 4, ris_vertical: 4, users: 2, ..Self::default() }
    }

    pub fn ris_elements(&self) -> usize {
        self.ris_horizontal * self.ris_vertical
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    /// Noise power in watts.
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_density_dbm_hz + 10.0 * self.bandwidth_hz.log10())
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let fail = |msg: String| Err(ChannelError(msg));
        for (name, v) in [
            ("bs_antennas", self.bs_antennas),
            ("ris_horizontal", self.ris_horizontal),
            ("ris_vertical", self.ris_vertical),
            ("users", self.users),
        ] {
            if v == 0 {
                return fail(format!("{name} must be positive"));
            }
        }
        for (name, v) in [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("bs_spacing", self.bs_spacing),
            ("ris_spacing_horizontal", self.ris_spacing_horizontal),
            ("ris_spacing_vertical", self.ris_spacing_vertical),
            ("bs_ris_distance_m", self.bs_ris_distance_m),
            ("bandwidth_hz", self.bandwidth_hz),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("rician_bs_ris", self.rician_bs_ris), ("rician_ris_ue", self.rician_ris_ue)] {
            if !(v >= 0.0) || !v.is_finite() {
                return fail(format!("{name} must be a finite non-negative factor, got {v}"));
            }
        }
        if !self.noise_density_dbm_hz.is_finite() {
            return fail("noise_density_dbm_hz must be finite".into());
        }
        let [dlo, dhi] = self.ue_distance_m;
        if !(dlo > 0.0 && dlo <= dhi && dhi.is_finite()) {
            return fail(format!("ue_distance_m range [{dlo}, {dhi}] must be positive and ordered"));
        }
        let azimuths = [self.bs_aod, self.ris_aoa_azimuth, self.ue_azimuth[0], self.ue_azimuth[1]];
        if azimuths.iter().any(|a| !(*a > -PI && *a <= PI)) || self.ue_azimuth[0] > self.ue_azimuth[1] {
            return fail("azimuth angles must lie in (-pi, pi] with ordered ranges".into());
        }
        let elevations = [self.ris_aoa_elevation, self.ue_elevation[0], self.ue_elevation[1]];
        if elevations.iter().any(|a| !(a.abs() < FRAC_PI_2)) || self.ue_elevation[0] > self.ue_elevation[1] {
            return fail("elevation angles must lie in (-pi/2, pi/2) with ordered ranges".into());
        }
        Ok(())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// ULA response `[1, e^{jψ}, …, e^{j(M−1)ψ}]` with `ψ = 2π δ sin Ω`
/// (`δ` in wavelengths).
pub fn ula_response(m: usize, aod: f64, spacing: f64) -> CVector {
    let psi = 2.0 * PI * spacing * aod.sin();
    CVector::from_fn(m, |i, _| Complex64::from_polar(1.0, i as f64 * psi))
}

/// UPA response with entry `e^{j(hψ_H + vψ_V)}` at index `v·N_H + h`.
pub fn upa_response(
    n_h: usize,
    n_v: usize,
    azimuth: f64,
    elevation: f64,
    spacing_h: f64,
    spacing_v: f64,
) -> CVector {
    let psi_h = 2.0 * PI * spacing_h * azimuth.sin() * elevation.cos();
    let psi_v = 2.0 * PI * spacing_v * elevation.sin();
    CVector::from_fn(n_h * n_v, |n, _| {
        let (h, v) = ((n % n_h) as f64, (n / n_h) as f64);
        Complex64::from_polar(1.0, h * psi_h + v * psi_v)
    })
}

/// Log-distance path loss `−37.5 − 22 log₁₀(d / 1 m)` in dB.
pub fn pathloss_db(distance_m: f64) -> Result<f64, ChannelError> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(ChannelError(format!("distance must be positive, got {distance_m}")));
    }
    Ok(-37.5 - 22.0 * distance_m.log10())
}

pub fn pathloss_linear(distance_m: f64) -> Result<f64, ChannelError> {
    Ok(10f64.powf(pathloss_db(distance_m)? / 10.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeGeometry {
    pub distance_m: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

/// One channel realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS → RIS, `N × M`.
    pub h: CMatrix,
    /// RIS → UE, `K × N`; row `k` is `g_kᵀ`.
    pub g: CMatrix,
    pub rho_h: f64,
    pub rho_g: Vec<f64>,
    pub ue_geometry: Vec<UeGeometry>,
}

impl ChannelSet {
    pub fn bs_antennas(&self) -> usize {
        self.h.ncols()
    }

    pub fn ris_elements(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.g.nrows()
    }

    /// `g_k` as a column vector.
    pub fn g_k(&self, k: usize) -> CVector {
        self.g.row(k).transpose()
    }

    /// `F_k = diag(g_k) H`.
    pub fn cascade(&self, k: usize) -> CMatrix {
        let mut f = self.h.clone();
        for n in 0..f.nrows() {
            let gk = self.g[(k, n)];
            for m in 0..f.ncols() {
                f[(n, m)] *= gk;
            }
        }
        f
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Square root of the isotropic-scattering correlation over the RIS grid.
fn ris_correlation_sqrt(cfg: &SceneConfig) -> DMatrix<f64> {
    let n_h = cfg.ris_horizontal;
    let n = cfg.ris_elements();
    let pos = |i: usize| ((i % n_h) as f64 * cfg.ris_spacing_horizontal, (i / n_h) as f64 * cfg.ris_spacing_vertical);
    let corr = DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (pos(i), pos(j));
        let dist = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        sinc(2.0 * dist)
    });
    let eig = SymmetricEigen::new(corr);
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Draws `H` and all `g_k` for one channel realisation.
pub fn draw_channels<R: Rng + ?Sized>(cfg: &SceneConfig, rng: &mut R) -> Result<ChannelSet, ChannelError> {
    cfg.validate()?;
    let m = cfg.bs_antennas;
    let n = cfg.ris_elements();
    let correlation = match cfg.nlos {
        NlosModel::Iid => None,
        NlosModel::IsotropicRis => Some(ris_correlation_sqrt(cfg).map(|v| Complex64::new(v, 0.0))),
    };
    let rician = |kappa: f64| ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt());

    let rho_h = pathloss_linear(cfg.bs_ris_distance_m)?;
    let a_bs = ula_response(m, cfg.bs_aod, cfg.bs_spacing);
    let a_ris = upa_response(
        cfg.ris_horizontal,
        cfg.ris_vertical,
        cfg.ris_aoa_azimuth,
        cfg.ris_aoa_elevation,
        cfg.ris_spacing_horizontal,
        cfg.ris_spacing_vertical,
    );
    let h_los = &a_ris * a_bs.transpose();
    let mut h_nlos = CMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            h_nlos[(i, j)] = complex_normal(rng);
        }
    }
    if let Some(c) = &correlation {
        h_nlos = c * h_nlos;
    }
    let (los_w, nlos_w) = rician(cfg.rician_bs_ris);
    let h = (h_los * Complex64::new(los_w, 0.0) + h_nlos * Complex64::new(nlos_w, 0.0))
        * Complex64::new(rho_h.sqrt(), 0.0);

    let (los_w, nlos_w) = rician(cfg.rician_ris_ue);
    let mut g = CMatrix::zeros(cfg.users, n);
    let mut rho_g = Vec::with_capacity(cfg.users);
    let mut ue_geometry = Vec::with_capacity(cfg.users);
    for k in 0..cfg.users {
        let geo = UeGeometry {
            distance_m: uniform(rng, cfg.ue_distance_m),
            azimuth: uniform(rng, cfg.ue_azimuth),
            elevation: uniform(rng, cfg.ue_elevation),
        };
        let g_los = upa_response(
            cfg.ris_horizontal,
            cfg.ris_vertical,
            geo.azimuth,
            geo.elevation,
            cfg.ris_spacing_horizontal,
            cfg.ris_spacing_vertical,
        );
        let mut g_nlos = CVector::from_fn(n, |_, _| complex_normal(rng));
        if let Some(c) = &correlation {
            g_nlos = c * g_nlos;
        }
        let rho = pathloss_linear(geo.distance_m)?;
        let gk = (g_los * Complex64::new(los_w, 0.0) + g_nlos * Complex64::new(nlos_w, 0.0))
            * Complex64::new(rho.sqrt(), 0.0);
        g.set_row(k, &gk.transpose());
        rho_g.push(rho);
        ue_geometry.push(geo);
    }
    Ok(ChannelSet { h, g, rho_h, rho_g, ue_geometry })
}

/// [`draw_channels`] from a fresh generator seeded with `seed`.
pub fn draw_channels_seeded(cfg: &SceneConfig, seed: u64) -> Result<ChannelSet, ChannelError> {
    draw_channels(cfg, &mut rng_from_seed(seed))
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn ula_examples() {
        let broadside = ula_response(2, 0.0, 0.5);
        assert!(close(broadside[0], Complex64::new(1.0, 0.0)) && close(broadside[1], Complex64::new(1.0, 0.0)));
        let tilted = ula_response(2, FRAC_PI_6, 0.5);
        assert!(close(tilted[1], Complex64::new(0.0, 1.0)));
    }

    #[test]
    fn upa_examples() {
        let flat = upa_response(2, 2, 0.0, 0.0, 0.5, 0.5);
        assert!(flat.iter().all(|v| close(*v, Complex64::new(1.0, 0.0))));
        let side = upa_response(2, 1, FRAC_PI_2, 0.0, 0.5, 0.5);
        assert!(close(side[1], Complex64::new(-1.0, 0.0)));
        // horizontal index runs fastest
        let grid = upa_response(3, 2, 0.4, 0.3, 0.5, 0.5);
        let psi_h = PI * 0.4f64.sin() * 0.3f64.cos();
        let psi_v = PI * 0.3f64.sin();
        assert!(close(grid[4], Complex64::from_polar(1.0, psi_h + psi_v)));
    }

    #[test]
    fn responses_are_unit_modulus() {
        for v in ula_response(7, 0.9, 0.37).iter().chain(upa_response(5, 3, -1.1, 0.7, 0.5, 0.25).iter()) {
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pathloss_values() {
        assert_eq!(pathloss_db(1.0).unwrap(), -37.5);
        assert_eq!(pathloss_db(10.0).unwrap(), -59.5);
        assert!((pathloss_db(20.0).unwrap() + 37.5 + 22.0 * 20f64.log10()).abs() < 1e-12);
        assert!(pathloss_db(0.0).is_err());
        assert!(pathloss_db(-3.0).is_err());
    }

    #[test]
    fn noise_power_matches_density() {
        let cfg = SceneConfig::default();
        // −174 dBm/Hz over 1 MHz is −114 dBm
        assert!((cfg.noise_power_w() / dbm_to_watts(-114.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_catches_bad_fields() {
        assert!(SceneConfig { users: 0, ..SceneConfig::default() }.validate().is_err());
        assert!(SceneConfig { ue_elevation: [-2.0, 0.0], ..SceneConfig::default() }.validate().is_err());
        assert!(SceneConfig { rician_bs_ris: -1.0, ..SceneConfig::default() }.validate().is_err());
        assert!(SceneConfig::desk().validate().is_ok());
    }

    #[test]
    fn correlated_model_draws() {
        let cfg = SceneConfig { nlos: NlosModel::IsotropicRis, ..SceneConfig::desk() };
        let chs = draw_channels_seeded(&cfg, 3).unwrap();
        assert_eq!(chs.h.shape(), (16, 4));
        assert!(chs.h.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
    }

    #[test]
    fn rician_limit_is_line_of_sight() {
        let cfg = SceneConfig { rician_bs_ris: 1e9, ..SceneConfig::desk() };
        let chs = draw_channels_seeded(&cfg, 11).unwrap();
        let a_bs = ula_response(4, cfg.bs_aod, 0.5);
        let a_ris = upa_response(4, 4, cfg.ris_aoa_azimuth, cfg.ris_aoa_elevation, 0.5, 0.5);
        let los = &a_ris * a_bs.transpose();
        let scaled = &chs.h / Complex64::new(chs.rho_h.sqrt(), 0.0);
        assert!((scaled - los).iter().all(|v| v.norm() < 1e-4));
    }

    #[test]
    fn scattered_power_matches_pathloss() {
        let cfg = SceneConfig { rician_bs_ris: 0.0, bs_antennas: 1, ris_horizontal: 1, ris_vertical: 1, users: 1, ..SceneConfig::default() };
        let mut rng = rng_from_seed(5);
        let draws = 10_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let chs = draw_channels(&cfg, &mut rng).unwrap();
            acc += chs.h[(0, 0)].norm_sqr() / chs.rho_h;
        }
        let mean = acc / draws as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn same_seed_same_channels() {
        let cfg = SceneConfig::desk();
        assert_eq!(draw_channels_seeded(&cfg, 9).unwrap(), draw_channels_seeded(&cfg, 9).unwrap());
        assert_ne!(draw_channels_seeded(&cfg, 9).unwrap(), draw_channels_seeded(&cfg, 10).unwrap());
    }

    #[test]
    fn cascade_is_row_scaled_h() {
        let chs = draw_channels_seeded(&SceneConfig::desk(), 2).unwrap();
        let f = chs.cascade(1);
        let direct = CMatrix::from_diagonal(&chs.g_k(1)) * &chs.h;
        assert!((f - direct).norm() < 1e-20);
    }
}
