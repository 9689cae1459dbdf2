//! SINR, SCNR, achievable rates and the weighted ISAC objective.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::scenario::Weights;
use crate::{CMat, CVec};

/// Transmit precoders, uplink powers and receive combiners.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformers {
    /// `N_t x K_DL`, column `k` serves downlink user `k`.
    pub f: CMat,
    /// Uplink transmit coefficients, one per uplink user.
    pub f_ul: CVec,
    /// Sensing combiner.
    pub w_s: CVec,
    /// `N_r x K_UL`, column `k` decodes uplink user `k`.
    pub w_r: CMat,
}

impl Beamformers {
    pub fn power_dl(&self) -> f64 {
        self.f.norm_squared()
    }

    pub fn power_ul(&self) -> f64 {
        self.f_ul.norm_squared()
    }

    pub fn w_r_col(&self, k: usize) -> CVec {
        self.w_r.column(k).into_owned()
    }
}

/// Interference seen at the output of one receive combiner.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferencePowers {
    pub clutter: f64,
    pub target: f64,
    pub si: f64,
    /// Per uplink user, `|w^H h_UL,j^H f_UL,j|^2`.
    pub ul: Vec<f64>,
}

/// `||a^H F||^2`
pub(crate) fn row_power(a: &CVec, f: &CMat) -> f64 {
    f.tr_mul(&a.conjugate()).norm_squared()
}

/// Clutter, target, self-interference and uplink powers at combiner `w`.
pub fn interference_powers(ch: &ChannelSet, bf: &Beamformers, w: &CVec) -> InterferencePowers {
    let clutter = ch
        .beta_c
        .iter()
        .zip(ch.a_c.iter().zip(&ch.b_c))
        .map(|(beta, (a, b))| beta.norm_sqr() * w.dotc(b).norm_sqr() * row_power(a, &bf.f))
        .sum();
    let target = ch.beta_s.norm_sqr() * w.dotc(&ch.b_s).norm_sqr() * row_power(&ch.a_s, &bf.f);
    let e = &ch.h_si * w;
    let si = bf.f.ad_mul(&e).norm_squared();
    let ul = (0..ch.k_ul())
        .map(|j| (w.dotc(&ch.v_ul(j)) * bf.f_ul[j]).norm_sqr())
        .collect();
    InterferencePowers {
        clutter,
        target,
        si,
        ul,
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Total interference-plus-noise power at downlink user `k`.
pub(crate) fn dl_denominator(ch: &ChannelSet, f: &CMat, k: usize) -> f64 {
    let h = &ch.h_dl[k];
    let mut den = ch.noise;
    for j in 0..f.ncols() {
        if j != k {
            den += h.dotc(&f.column(j)).norm_sqr();
        }
    }
    den + ch.g.iter().map(|row| row[k].norm_sqr()).sum::<f64>()
}

pub fn sinr_dl(ch: &ChannelSet, f: &CMat, k: usize) -> f64 {
    let num = ch.h_dl[k].dotc(&f.column(k)).norm_sqr();
    ratio(num, dl_denominator(ch, f, k))
}

pub fn sinr_ul(ch: &ChannelSet, bf: &Beamformers, k: usize) -> f64 {
    let w = bf.w_r_col(k);
    let p = interference_powers(ch, bf, &w);
    let others: f64 =
        p.ul.iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, v)| v)
            .sum();
    let den = p.clutter + p.target + p.si + others + w.norm_squared() * ch.noise;
    ratio(p.ul[k], den)
}

pub fn scnr(ch: &ChannelSet, bf: &Beamformers) -> f64 {
    let p = interference_powers(ch, bf, &bf.w_s);
    let den = p.clutter + p.si + p.ul.iter().sum::<f64>() + bf.w_s.norm_squared() * ch.noise;
    ratio(p.target, den)
}

pub fn rate(sinr: f64) -> f64 {
    sinr.ln_1p() / std::f64::consts::LN_2
}

/// Per-link ratios, rates and the weighted objective for one beamformer set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sinr_dl: Vec<f64>,
    pub sinr_ul: Vec<f64>,
    pub scnr: f64,
    pub r_dl: Vec<f64>,
    pub r_ul: Vec<f64>,
    pub r_s: f64,
    pub objective: f64,
}

impl Metrics {
    pub fn rate_dl_sum(&self) -> f64 {
        self.r_dl.iter().sum()
    }

    pub fn rate_ul_sum(&self) -> f64 {
        self.r_ul.iter().sum()
    }
}

pub fn evaluate(ch: &ChannelSet, bf: &Beamformers, weights: &Weights) -> Metrics {
    let sinr_dl: Vec<f64> = (0..ch.k_dl()).map(|k| sinr_dl(ch, &bf.f, k)).collect();
    let sinr_ul: Vec<f64> = (0..ch.k_ul()).map(|k| sinr_ul(ch, bf, k)).collect();
    let scnr = scnr(ch, bf);
    let r_dl: Vec<f64> = sinr_dl.iter().map(|&s| rate(s)).collect();
    let r_ul: Vec<f64> = sinr_ul.iter().map(|&s| rate(s)).collect();
    let r_s = rate(scnr);
    let objective = weights.dl * r_dl.iter().sum::<f64>()
        + weights.ul * r_ul.iter().sum::<f64>()
        + weights.s * r_s;
    Metrics {
        sinr_dl,
        sinr_ul,
        scnr,
        r_dl,
        r_ul,
        r_s,
        objective,
    }
}

/// Weighted objective in bits.
pub fn objective(ch: &ChannelSet, bf: &Beamformers, weights: &Weights) -> f64 {
    evaluate(ch, bf, weights).objective
}
