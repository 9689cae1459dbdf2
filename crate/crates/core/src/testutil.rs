//! Shared random fixtures for unit tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelSet;
use crate::metrics::Beamformers;
use crate::rng::{stream, Purpose};
use crate::scenario::{layout_random, sample_realization, AntennaLayout, ScenarioConfig};
use crate::{CMat, CVec, Complex64};

pub fn cn<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn cvec<R: Rng>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| cn(rng))
}

pub fn cmat<R: Rng>(rng: &mut R, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| cn(rng))
}

/// Small scenario with strong enough channels that every term matters.
pub fn small_config() -> ScenarioConfig {
    ScenarioConfig {
        n_tx: 4,
        n_rx: 3,
        k_dl: 2,
        k_ul: 2,
        n_clutter: 2,
        n_paths: 3,
        region_max_x: 0.03,
        region_max_y: 0.03,
        ..Default::default()
    }
}

pub fn random_case(cfg: &ScenarioConfig, idx: u64) -> (ChannelSet, AntennaLayout, Beamformers) {
    let real = sample_realization(cfg, idx).unwrap();
    let mut rng = stream(cfg.seed, Purpose::RandomLayout, 1000 + idx, 0);
    let layout = layout_random(cfg, &mut rng).unwrap();
    let ch = ChannelSet::new(&real, &layout, cfg).unwrap();
    let bf = random_bf(cfg, &ch, idx);
    (ch, layout, bf)
}

pub fn random_bf(cfg: &ScenarioConfig, ch: &ChannelSet, idx: u64) -> Beamformers {
    let mut rng = stream(cfg.seed, Purpose::BeamformerInit, 5000 + idx, 0);
    let mut f = cmat(&mut rng, ch.n_tx(), ch.k_dl());
    let s = (cfg.p_dl() / f.norm_squared()).sqrt();
    f *= Complex64::new(s, 0.0);
    let mut f_ul = cvec(&mut rng, ch.k_ul());
    if ch.k_ul() > 0 {
        let s = (cfg.p_ul() / f_ul.norm_squared()).sqrt();
        f_ul *= Complex64::new(s, 0.0);
    }
    Beamformers {
        f,
        f_ul,
        w_s: cvec(&mut rng, ch.n_rx()),
        w_r: cmat(&mut rng, ch.n_rx(), ch.k_ul()),
    }
}
