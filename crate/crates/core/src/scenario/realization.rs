use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ScenarioConfig;
use crate::channel::path_loss;
use crate::rng::{stream, Purpose};
use crate::{Complex64, Result};

/// One propagation path: departure/arrival angles and complex gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub theta: f64,
    pub phi: f64,
    pub gain: Complex64,
}

/// A communication user: BS distance, ground azimuth and multipath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserLink {
    pub distance: f64,
    pub azimuth: f64,
    pub eta: f64,
    pub paths: Vec<Path>,
}

impl UserLink {
    pub fn ground_position(&self) -> [f64; 2] {
        [
            self.distance * self.azimuth.cos(),
            self.distance * self.azimuth.sin(),
        ]
    }
}

/// Single-path reflector (target or clutter) with its RCS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub theta_t: f64,
    pub phi_t: f64,
    pub theta_r: f64,
    pub phi_r: f64,
    pub rcs: Complex64,
    pub distance: f64,
    pub eta: f64,
}

impl Scatterer {
    /// `sqrt(eta) * alpha`
    pub fn front_factor(&self) -> Complex64 {
        self.rcs * self.eta.sqrt()
    }
}

/// Every random quantity of one channel draw. Independent of antenna
/// positions, so all schemes and layouts evaluated on it see the same
/// propagation environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub seed: u64,
    pub index: u64,
    pub dl: Vec<UserLink>,
    pub ul: Vec<UserLink>,
    pub target: Scatterer,
    pub clutter: Vec<Scatterer>,
    /// `cross_distance[i][j]`: uplink user `i` to downlink user `j`, meters.
    pub cross_distance: Vec<Vec<f64>>,
    /// Large-scale gain of the same pairs.
    pub cross_eta: Vec<Vec<f64>>,
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn sample_user<R: Rng>(
    rng: &mut R,
    cfg: &ScenarioConfig,
    dmin: f64,
    dmax: f64,
) -> Result<UserLink> {
    let distance = uniform(rng, dmin, dmax);
    let azimuth = uniform(rng, 0.0, 2.0 * PI);
    let paths = (0..cfg.n_paths)
        .map(|_| {
            let theta = uniform(rng, 0.0, PI);
            let phi = uniform(rng, 0.0, PI);
            let gain = complex_gaussian(rng);
            Path { theta, phi, gain }
        })
        .collect();
    Ok(UserLink {
        distance,
        azimuth,
        eta: path_loss(distance, cfg.wavelength, cfg.gain_factor)?,
        paths,
    })
}

/// Draws realization `index` from the channel sub-stream of `cfg.seed`.
///
/// Path angles are `U(0, pi)`, gains and RCS are `CN(0, 1)`, distances are
/// uniform over the configured ranges and users sit on a ground circle at
/// their BS distance with azimuth `U(0, 2pi)`. The target direction is fixed
/// by `target_theta`/`target_phi`; each clutter reflects along one direction
/// used for both departure and arrival.
pub fn sample_realization(cfg: &ScenarioConfig, index: u64) -> Result<ChannelRealization> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, Purpose::Channel, index, 0);
    let dl = (0..cfg.k_dl)
        .map(|_| sample_user(&mut rng, cfg, cfg.dist_dl_min, cfg.dist_dl_max))
        .collect::<Result<Vec<_>>>()?;
    let ul = (0..cfg.k_ul)
        .map(|_| sample_user(&mut rng, cfg, cfg.dist_ul_min, cfg.dist_ul_max))
        .collect::<Result<Vec<_>>>()?;

    let target_distance = uniform(&mut rng, cfg.dist_tgt_min, cfg.dist_tgt_max);
    let target = Scatterer {
        theta_t: cfg.target_theta,
        phi_t: cfg.target_phi,
        theta_r: cfg.target_theta,
        phi_r: cfg.target_phi,
        rcs: complex_gaussian(&mut rng),
        distance: target_distance,
        eta: path_loss(target_distance, cfg.wavelength, cfg.gain_factor)?,
    };
    let clutter = (0..cfg.n_clutter)
        .map(|_| {
            let theta = uniform(&mut rng, 0.0, PI);
            let phi = uniform(&mut rng, 0.0, PI);
            let rcs = complex_gaussian(&mut rng);
            let distance = uniform(&mut rng, cfg.dist_tgt_min, cfg.dist_tgt_max);
            Ok(Scatterer {
                theta_t: theta,
                phi_t: phi,
                theta_r: theta,
                phi_r: phi,
                rcs,
                distance,
                eta: path_loss(distance, cfg.wavelength, cfg.gain_factor)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cross_distance = Vec::with_capacity(ul.len());
    let mut cross_eta = Vec::with_capacity(ul.len());
    for u in &ul {
        let pu = u.ground_position();
        let row: Vec<f64> = dl
            .iter()
            .map(|d| {
                let pd = d.ground_position();
                (pu[0] - pd[0]).hypot(pu[1] - pd[1])
            })
            .collect();
        cross_eta.push(
            row.iter()
                .map(|&r| path_loss(r, cfg.wavelength, cfg.gain_factor))
                .collect::<Result<Vec<_>>>()?,
        );
        cross_distance.push(row);
    }

    Ok(ChannelRealization {
        seed: cfg.seed,
        index,
        dl,
        ul,
        target,
        clutter,
        cross_distance,
        cross_eta,
    })
}

impl ChannelRealization {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// First 16 hex digits of the SHA-256 of the JSON dump.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("realization serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
