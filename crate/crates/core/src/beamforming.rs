//! Closed-form block updates of the surrogate and the beamforming inner loop.
//!
//! With the auxiliaries fixed, the surrogate is a concave quadratic in each
//! of the downlink precoder `F`, the uplink powers `f_UL` and every receive
//! combiner. The transmit blocks carry a sum-power budget handled by a
//! dual variable `tau >= 0`, found by bisection when the budget is active.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::fp::{eval_g_hat, update_aux, AuxVars};
use crate::linalg::{add_outer, solve_hermitian, HermitianEigen};
use crate::metrics::{objective, row_power, Beamformers};
use crate::rng::{stream, Purpose};
use crate::scenario::{ScenarioConfig, Weights};
use crate::{CMat, CVec, Complex64, Error, Result};

const MAX_HALVINGS: usize = 200;

fn cplx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Dual variable of a diagonalized budget problem: minimizes `tau >= 0`
/// subject to `sum_i c2[i] / (d[i] + tau)^2 <= budget`.
///
/// `d` are the eigenvalues of the quadratic term and `c2` the energy of the
/// linear term along each eigenvector. `tau = 0` is accepted when every
/// eigenvalue exceeds `zero_tol` and the unconstrained solution fits.
/// Otherwise the returned `tau` sits on the feasible side of the boundary,
/// bisected until the bracket collapses.
pub fn power_dual(
    d: &[f64],
    c2: &[f64],
    budget: f64,
    zero_tol: f64,
    tol_power: f64,
) -> Result<f64> {
    let power = |tau: f64| -> f64 {
        d.iter()
            .zip(c2)
            .map(|(&di, &ci)| {
                if ci == 0.0 {
                    0.0
                } else {
                    ci / (di.max(0.0) + tau).powi(2)
                }
            })
            .sum()
    };
    let energy: f64 = c2.iter().sum();
    if energy == 0.0 {
        return Ok(0.0);
    }
    let definite = d.iter().all(|&di| di > zero_tol);
    if definite && power(0.0) <= budget {
        return Ok(0.0);
    }
    let mut hi = energy.sqrt() / budget.sqrt();
    let mut doublings = 0;
    while power(hi) > budget {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(Error::Numerical(
                "power budget bracket did not close".into(),
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..MAX_HALVINGS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if power(mid) <= budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if lo > 0.0 && (power(hi) - budget).abs() > tol_power * budget {
        return Err(Error::Numerical(format!(
            "power bisection stalled at {} for budget {budget}",
            power(hi)
        )));
    }
    Ok(hi)
}

/// Receive combiners paired with their weight on the surrogate's quadratic
/// terms: the sensing combiner and every uplink combiner.
fn weighted_combiners(
    ch: &ChannelSet,
    bf: &Beamformers,
    aux: &AuxVars,
    w: &Weights,
) -> Vec<(CVec, f64)> {
    let mut out = Vec::with_capacity(1 + ch.k_ul());
    out.push((bf.w_s.clone(), w.s * aux.xi_s.norm_squared()));
    for k in 0..ch.k_ul() {
        out.push((bf.w_r_col(k), w.ul * aux.xi_ul[k].norm_sqr()));
    }
    out
}

/// Quadratic form `Lambda` shared by all precoder columns.
pub(crate) fn precoder_quadratic(
    ch: &ChannelSet,
    bf: &Beamformers,
    aux: &AuxVars,
    w: &Weights,
) -> CMat {
    let n = ch.n_tx();
    let mut lam = CMat::zeros(n, n);
    for k in 0..ch.k_dl() {
        add_outer(&mut lam, &ch.h_dl[k], w.dl * aux.xi_dl[k].norm_sqr());
    }
    for (wv, kappa) in weighted_combiners(ch, bf, aux, w) {
        if kappa == 0.0 {
            continue;
        }
        for ((a, b), beta) in ch.a_c.iter().zip(&ch.b_c).zip(&ch.beta_c) {
            add_outer(&mut lam, a, kappa * beta.norm_sqr() * wv.dotc(b).norm_sqr());
        }
        add_outer(
            &mut lam,
            &ch.a_s,
            kappa * ch.beta_s.norm_sqr() * wv.dotc(&ch.b_s).norm_sqr(),
        );
        add_outer(&mut lam, &(&ch.h_si * &wv), kappa);
    }
    lam
}

/// Linear terms `phi_k`, one column per downlink stream.
pub(crate) fn precoder_linear(
    ch: &ChannelSet,
    bf: &Beamformers,
    aux: &AuxVars,
    w: &Weights,
) -> CMat {
    let n = ch.n_tx();
    let mut phi = CMat::zeros(n, ch.k_dl());
    let zs = ch.beta_s.conj() * ch.b_s.dotc(&bf.w_s);
    let cs = w.s * (1.0 + aux.mu_s).sqrt();
    for k in 0..ch.k_dl() {
        let cd = aux.xi_dl[k].conj() * (w.dl * (1.0 + aux.mu_dl[k]).sqrt());
        let cs_k = aux.xi_s[k].conj() * zs * cs;
        for i in 0..n {
            phi[(i, k)] = cd * ch.h_dl[k][i] + cs_k * ch.a_s[i];
        }
    }
    phi
}

/// Precoder update with its budget multiplier `tau`.
pub fn update_f(
    ch: &ChannelSet,
    bf: &Beamformers,
    aux: &AuxVars,
    w: &Weights,
    p_dl: f64,
    tol_power: f64,
) -> Result<(CMat, f64)> {
    let lam = precoder_quadratic(ch, bf, aux, w);
    let phi = precoder_linear(ch, bf, aux, w);
    let eig = HermitianEigen::new(&lam);
    let c = eig.vectors.ad_mul(&phi);
    let c2: Vec<f64> = (0..c.nrows()).map(|i| c.row(i).norm_squared()).collect();
    let tau = power_dual(&eig.values, &c2, p_dl, eig.zero_threshold(), tol_power)?;
    if tau == 0.0 && c2.iter().all(|&x| x == 0.0) {
        return Ok((CMat::zeros(ch.n_tx(), ch.k_dl()), 0.0));
    }
    let mut scaled = c;
    for i in 0..scaled.nrows() {
        let s = eig.values[i].max(0.0) + tau;
        let inv = if c2[i] == 0.0 { 0.0 } else { 1.0 / s };
        scaled.row_mut(i).scale_mut(inv);
    }
    Ok((&eig.vectors * scaled, tau))
}

/// Per-user quadratic and linear coefficients of the uplink powers.
pub(crate) fn uplink_terms(
    ch: &ChannelSet,
    bf: &Beamformers,
    aux: &AuxVars,
    w: &Weights,
) -> (Vec<f64>, Vec<Complex64>) {
    let combiners = weighted_combiners(ch, bf, aux, w);
    let lam = (0..ch.k_ul())
        .map(|j| {
            let v = ch.v_ul(j);
            combiners
                .iter()
                .map(|(wv, kappa)| kappa * wv.dotc(&v).norm_sqr())
                .sum()
        })
        .collect();
    let phi = (0..ch.k_ul())
        .map(|j| {
            aux.xi_ul[j] * bf.w_r_col(j).dotc(&ch.v_ul(j)) * (w.ul * (1.0 + aux.mu_ul[j]).sqrt())
        })
        .collect();
    (lam, phi)
}

/// Uplink power update with its budget multiplier.
pub fn update_f_ul(
    ch: &ChannelSet,
    bf: &Beamformers,
    aux: &AuxVars,
    w: &Weights,
    p_ul: f64,
    tol_power: f64,
) -> Result<(CVec, f64)> {
    let (lam, phi) = uplink_terms(ch, bf, aux, w);
    let c2: Vec<f64> = phi.iter().map(|p| p.norm_sqr()).collect();
    let zero_tol = 1e-12 * lam.iter().sum::<f64>() / lam.len().max(1) as f64;
    let tau = power_dual(&lam, &c2, p_ul, zero_tol, tol_power)?;
    let f = CVec::from_iterator(
        phi.len(),
        phi.iter().zip(&lam).map(|(p, &l)| {
            if *p == Complex64::default() {
                Complex64::default()
            } else {
                p.conj() / (l.max(0.0) + tau)
            }
        }),
    );
    Ok((f, tau))
}

/// Interference-plus-noise covariance shared by every receive combiner.
pub(crate) fn receive_covariance(ch: &ChannelSet, bf: &Beamformers) -> CMat {
    let n = ch.n_rx();
    let mut q = CMat::identity(n, n) * cplx(ch.noise);
    for ((a, b), beta) in ch.a_c.iter().zip(&ch.b_c).zip(&ch.beta_c) {
        add_outer(&mut q, b, beta.norm_sqr() * row_power(a, &bf.f));
    }
    add_outer(
        &mut q,
        &ch.b_s,
        ch.beta_s.norm_sqr() * row_power(&ch.a_s, &bf.f),
    );
    let hf = ch.h_si.ad_mul(&bf.f);
    q += &hf * hf.adjoint();
    for j in 0..ch.k_ul() {
        add_outer(&mut q, &ch.v_ul(j), bf.f_ul[j].norm_sqr());
    }
    q
}

fn combiner(q: &CMat, g: &CVec, scale: f64, xi2: f64) -> Result<CVec> {
    if xi2 == 0.0 {
        return Ok(CVec::zeros(g.len()));
    }
    Ok(solve_hermitian(q, g)? * cplx(scale / xi2))
}

/// Uplink combiners, one column per uplink user.
pub fn update_w_r(ch: &ChannelSet, bf: &Beamformers, aux: &AuxVars) -> Result<CMat> {
    let q = receive_covariance(ch, bf);
    let mut w = CMat::zeros(ch.n_rx(), ch.k_ul());
    for k in 0..ch.k_ul() {
        let g = ch.v_ul(k) * (aux.xi_ul[k] * bf.f_ul[k]);
        let col = combiner(&q, &g, (1.0 + aux.mu_ul[k]).sqrt(), aux.xi_ul[k].norm_sqr())?;
        w.set_column(k, &col);
    }
    Ok(w)
}

/// Sensing combiner.
pub fn update_w_s(ch: &ChannelSet, bf: &Beamformers, aux: &AuxVars) -> Result<CVec> {
    let q = receive_covariance(ch, bf);
    let u = &bf.f * &aux.xi_s;
    let g = &ch.b_s * (ch.beta_s * ch.a_s.dotc(&u));
    combiner(&q, &g, (1.0 + aux.mu_s).sqrt(), aux.xi_s.norm_squared())
}

fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> CVec {
    let v = CVec::from_fn(n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    v / cplx(norm)
}

/// Random starting point shared by all schemes on realization `index`:
/// Gaussian `F` scaled to the full budget, equal uplink powers and random
/// unit-norm combiners.
pub fn initial_beamformers(cfg: &ScenarioConfig, index: u64) -> Beamformers {
    let mut rng = stream(cfg.seed, Purpose::BeamformerInit, index, 0);
    let mut f = CMat::from_fn(cfg.n_tx, cfg.k_dl, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm2 = f.norm_squared();
    if norm2 > 0.0 {
        f *= cplx((cfg.p_dl() / norm2).sqrt());
    }
    let f_ul = if cfg.k_ul > 0 {
        CVec::from_element(cfg.k_ul, cplx((cfg.p_ul() / cfg.k_ul as f64).sqrt()))
    } else {
        CVec::zeros(0)
    };
    let w_s = unit_vector(&mut rng, cfg.n_rx);
    let mut w_r = CMat::zeros(cfg.n_rx, cfg.k_ul);
    for k in 0..cfg.k_ul {
        w_r.set_column(k, &unit_vector(&mut rng, cfg.n_rx));
    }
    Beamformers { f, f_ul, w_s, w_r }
}

/// One row of the inner-loop trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerTraceRow {
    pub iter: usize,
    pub g_hat: f64,
    pub g: f64,
    pub power_dl: f64,
    pub power_ul: f64,
}

#[derive(Debug, Clone)]
pub struct InnerLoopState {
    pub bf: Beamformers,
    pub aux: AuxVars,
    pub trace: Vec<InnerTraceRow>,
    pub iters: usize,
    pub converged: bool,
}

impl InnerLoopState {
    pub fn objective(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.g)
    }
}

/// One block-coordinate sweep: precoder, uplink powers, uplink combiners,
/// sensing combiner, then the auxiliaries.
pub fn sweep(
    ch: &ChannelSet,
    bf: &Beamformers,
    aux: &AuxVars,
    cfg: &ScenarioConfig,
) -> Result<(Beamformers, AuxVars)> {
    let w = cfg.weights();
    let mut next = bf.clone();
    next.f = update_f(ch, &next, aux, &w, cfg.p_dl(), cfg.tol_power)?.0;
    next.f_ul = update_f_ul(ch, &next, aux, &w, cfg.p_ul(), cfg.tol_power)?.0;
    next.w_r = update_w_r(ch, &next, aux)?;
    next.w_s = update_w_s(ch, &next, aux)?;
    let aux = update_aux(ch, &next);
    Ok((next, aux))
}

fn relative_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / old.abs().max(f64::MIN_POSITIVE)
}

/// Alternates [`sweep`] until the relative objective change drops below
/// `tol_obj` or `max_inner_iters` sweeps have run.
pub fn inner_loop(
    ch: &ChannelSet,
    init: &Beamformers,
    cfg: &ScenarioConfig,
) -> Result<InnerLoopState> {
    let w = cfg.weights();
    let mut bf = init.clone();
    let mut aux = update_aux(ch, &bf);
    let row = |iter: usize, bf: &Beamformers, aux: &AuxVars| InnerTraceRow {
        iter,
        g_hat: eval_g_hat(ch, bf, aux, &w),
        g: objective(ch, bf, &w),
        power_dl: bf.power_dl(),
        power_ul: bf.power_ul(),
    };
    let mut trace = vec![row(0, &bf, &aux)];
    let mut converged = false;
    let mut iters = 0;
    while iters < cfg.max_inner_iters {
        iters += 1;
        let (nbf, naux) = sweep(ch, &bf, &aux, cfg)?;
        bf = nbf;
        aux = naux;
        let r = row(iters, &bf, &aux);
        let prev = trace.last().expect("trace starts non-empty").g;
        trace.push(r);
        if relative_change(r.g, prev) < cfg.tol_obj {
            converged = true;
            break;
        }
    }
    Ok(InnerLoopState {
        bf,
        aux,
        trace,
        iters,
        converged,
    })
}
