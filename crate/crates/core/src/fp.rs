//! Quadratic-transform surrogate of the weighted objective.
//!
//! Each ratio `|num|^2 / (D - |num|^2)` is lifted with a slack `mu` and an
//! auxiliary `xi`:
//!
//! `ln(1 + mu) - mu + 2 sqrt(1 + mu) Re(xi num) - |xi|^2 D`
//!
//! where `D` is the total received power including the own signal. The sum
//! is reported in bits (divided by `ln 2`), so at the closed-form `mu` and
//! `xi` the surrogate equals [`crate::metrics::objective`].

use std::f64::consts::LN_2;

use crate::channel::ChannelSet;
use crate::metrics::{dl_denominator, interference_powers, scnr, sinr_dl, sinr_ul, Beamformers};
use crate::scenario::Weights;
use crate::{CVec, Complex64};

/// Slack and auxiliary variables of the surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxVars {
    pub mu_dl: Vec<f64>,
    pub mu_ul: Vec<f64>,
    pub mu_s: f64,
    pub xi_dl: Vec<Complex64>,
    pub xi_ul: Vec<Complex64>,
    /// One entry per downlink stream.
    pub xi_s: CVec,
}

impl AuxVars {
    pub fn zeros(k_dl: usize, k_ul: usize) -> Self {
        Self {
            mu_dl: vec![0.0; k_dl],
            mu_ul: vec![0.0; k_ul],
            mu_s: 0.0,
            xi_dl: vec![Complex64::default(); k_dl],
            xi_ul: vec![Complex64::default(); k_ul],
            xi_s: CVec::zeros(k_dl),
        }
    }

    /// `[mu_dl.., mu_ul.., mu_s]`
    pub fn mu(&self) -> Vec<f64> {
        let mut m = self.mu_dl.clone();
        m.extend(&self.mu_ul);
        m.push(self.mu_s);
        m
    }
}

/// Numerator and total received power of one ratio.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Ratio {
    pub num: Complex64,
    pub den: f64,
}

pub(crate) fn dl_ratio(ch: &ChannelSet, bf: &Beamformers, k: usize) -> Ratio {
    let num = ch.h_dl[k].dotc(&bf.f.column(k));
    Ratio {
        num,
        den: dl_denominator(ch, &bf.f, k) + num.norm_sqr(),
    }
}

fn receive_total(ch: &ChannelSet, bf: &Beamformers, w: &CVec) -> f64 {
    let p = interference_powers(ch, bf, w);
    p.clutter + p.target + p.si + p.ul.iter().sum::<f64>() + w.norm_squared() * ch.noise
}

pub(crate) fn ul_ratio(ch: &ChannelSet, bf: &Beamformers, k: usize) -> Ratio {
    let w = bf.w_r_col(k);
    Ratio {
        num: w.dotc(&ch.v_ul(k)) * bf.f_ul[k],
        den: receive_total(ch, bf, &w),
    }
}

/// Sensing numerator row `beta_s (w_s^H b_s) a_s^H F`, one entry per stream.
pub(crate) fn sensing_row(ch: &ChannelSet, bf: &Beamformers) -> CVec {
    let z = ch.beta_s * bf.w_s.dotc(&ch.b_s);
    CVec::from_iterator(
        bf.f.ncols(),
        (0..bf.f.ncols()).map(|k| z * ch.a_s.dotc(&bf.f.column(k))),
    )
}

fn term(mu: f64, lin: f64, quad: f64) -> f64 {
    mu.ln_1p() - mu + 2.0 * (1.0 + mu).sqrt() * lin - quad
}

/// Surrogate value in bits.
pub fn eval_g_hat(ch: &ChannelSet, bf: &Beamformers, aux: &AuxVars, w: &Weights) -> f64 {
    let mut total = 0.0;
    for k in 0..ch.k_dl() {
        let r = dl_ratio(ch, bf, k);
        let xi = aux.xi_dl[k];
        total += w.dl * term(aux.mu_dl[k], (xi * r.num).re, xi.norm_sqr() * r.den);
    }
    for k in 0..ch.k_ul() {
        let r = ul_ratio(ch, bf, k);
        let xi = aux.xi_ul[k];
        total += w.ul * term(aux.mu_ul[k], (xi * r.num).re, xi.norm_sqr() * r.den);
    }
    let y = sensing_row(ch, bf);
    let lin: f64 = y.iter().zip(aux.xi_s.iter()).map(|(a, b)| (a * b).re).sum();
    let den = receive_total(ch, bf, &bf.w_s);
    total += w.s * term(aux.mu_s, lin, aux.xi_s.norm_squared() * den);
    total / LN_2
}

/// Slack update: the current SINRs and SCNR.
pub fn update_mu(ch: &ChannelSet, bf: &Beamformers) -> (Vec<f64>, Vec<f64>, f64) {
    (
        (0..ch.k_dl()).map(|k| sinr_dl(ch, &bf.f, k)).collect(),
        (0..ch.k_ul()).map(|k| sinr_ul(ch, bf, k)).collect(),
        scnr(ch, bf),
    )
}

/// `sqrt(1 + mu) conj(num) / den`; zero once the link has faded into the
/// subnormal range, where the ratio is no longer representable.
fn xi_of(mu: f64, num: Complex64, den: f64) -> Complex64 {
    if num == Complex64::default() || !(den >= f64::MIN_POSITIVE) {
        return Complex64::default();
    }
    let xi = num.conj() * ((1.0 + mu).sqrt() / den);
    if xi.is_finite() {
        xi
    } else {
        Complex64::default()
    }
}

/// Closed-form auxiliaries maximizing the surrogate for the given slacks.
pub fn update_xi(
    ch: &ChannelSet,
    bf: &Beamformers,
    mu_dl: &[f64],
    mu_ul: &[f64],
    mu_s: f64,
) -> (Vec<Complex64>, Vec<Complex64>, CVec) {
    let xi_dl = (0..ch.k_dl())
        .map(|k| {
            let r = dl_ratio(ch, bf, k);
            xi_of(mu_dl[k], r.num, r.den)
        })
        .collect();
    let xi_ul = (0..ch.k_ul())
        .map(|k| {
            let r = ul_ratio(ch, bf, k);
            xi_of(mu_ul[k], r.num, r.den)
        })
        .collect();
    let y = sensing_row(ch, bf);
    let den = receive_total(ch, bf, &bf.w_s);
    let xi_s = if den >= f64::MIN_POSITIVE {
        y.conjugate() * Complex64::new((1.0 + mu_s).sqrt() / den, 0.0)
    } else {
        CVec::zeros(y.len())
    };
    (xi_dl, xi_ul, xi_s)
}

/// `mu` then `xi` at the current beamformers.
pub fn update_aux(ch: &ChannelSet, bf: &Beamformers) -> AuxVars {
    let (mu_dl, mu_ul, mu_s) = update_mu(ch, bf);
    let (xi_dl, xi_ul, xi_s) = update_xi(ch, bf, &mu_dl, &mu_ul, mu_s);
    AuxVars {
        mu_dl,
        mu_ul,
        mu_s,
        xi_dl,
        xi_ul,
        xi_s,
    }
}

/// Surrogate with `xi` eliminated, as a function of the slacks only; equals
/// the objective when the slacks are the current ratios.
pub fn eval_g_lagrangian(
    ch: &ChannelSet,
    bf: &Beamformers,
    mu_dl: &[f64],
    mu_ul: &[f64],
    mu_s: f64,
    w: &Weights,
) -> f64 {
    let part = |mu: f64, num2: f64, den: f64| {
        let frac = if num2 == 0.0 { 0.0 } else { num2 / den };
        mu.ln_1p() - mu + (1.0 + mu) * frac
    };
    let mut total = 0.0;
    for k in 0..ch.k_dl() {
        let r = dl_ratio(ch, bf, k);
        total += w.dl * part(mu_dl[k], r.num.norm_sqr(), r.den);
    }
    for k in 0..ch.k_ul() {
        let r = ul_ratio(ch, bf, k);
        total += w.ul * part(mu_ul[k], r.num.norm_sqr(), r.den);
    }
    let y = sensing_row(ch, bf);
    total += w.s * part(mu_s, y.norm_squared(), receive_total(ch, bf, &bf.w_s));
    total / LN_2
}
