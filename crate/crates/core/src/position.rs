//! Antenna position optimization: analytic gradient of the surrogate with
//! respect to every antenna coordinate, constrained gradient ascent and the
//! alternating loop over positions and beamformers.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::beamforming::{inner_loop, InnerLoopState};
use crate::channel::{
    dl_entry_gradient, si_entry_gradient, steering_entry_gradient, ul_entry_gradient, ChannelSet,
};
use crate::fp::{eval_g_hat, AuxVars};
use crate::metrics::Beamformers;
use crate::scenario::{check_layout, AntennaLayout, ChannelRealization, Point, ScenarioConfig};
use crate::{CMat, CVec, Complex64, Result};

/// Which antenna panel moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Tx,
    Rx,
}

/// Sensitivities `S` of the surrogate (natural-log units) to every channel
/// entry `z`, such that `dG = Re(sum S dz)`.
struct Sensitivities {
    h_dl: Vec<CVec>,
    h_ul: Vec<CVec>,
    a_s: CVec,
    b_s: CVec,
    a_c: Vec<CVec>,
    b_c: Vec<CVec>,
    h_si: CMat,
}

fn sensitivities(
    ch: &ChannelSet,
    bf: &Beamformers,
    aux: &AuxVars,
    cfg: &ScenarioConfig,
) -> Sensitivities {
    let w = cfg.weights();
    let (nt, nr) = (ch.n_tx(), ch.n_rx());
    let f = &bf.f;
    let r = f * f.adjoint();

    let h_dl = (0..ch.k_dl())
        .map(|k| {
            let h = &ch.h_dl[k];
            let q: Vec<Complex64> = (0..f.ncols()).map(|j| h.dotc(&f.column(j))).collect();
            let lin = aux.xi_dl[k].conj() * (1.0 + aux.mu_dl[k]).sqrt();
            let xi2 = aux.xi_dl[k].norm_sqr();
            CVec::from_fn(nt, |i, _| {
                let quad: Complex64 = (0..f.ncols()).map(|j| q[j] * f[(i, j)].conj()).sum();
                (lin * f[(i, k)].conj() - quad * xi2) * (2.0 * w.dl)
            })
        })
        .collect();

    let mut s = Sensitivities {
        h_dl,
        h_ul: vec![CVec::zeros(nr); ch.k_ul()],
        a_s: CVec::zeros(nt),
        b_s: CVec::zeros(nr),
        a_c: vec![CVec::zeros(nt); ch.a_c.len()],
        b_c: vec![CVec::zeros(nr); ch.b_c.len()],
        h_si: CMat::zeros(nt, nr),
    };

    // quadratic terms of every receive combiner
    let mut combiners = vec![(bf.w_s.clone(), w.s * aux.xi_s.norm_squared())];
    for k in 0..ch.k_ul() {
        combiners.push((bf.w_r_col(k), w.ul * aux.xi_ul[k].norm_sqr()));
    }
    for (wv, kappa) in &combiners {
        let kappa = *kappa;
        if kappa == 0.0 {
            continue;
        }
        let reflector = |a: &CVec, b: &CVec, beta: Complex64, sa: &mut CVec, sb: &mut CVec| {
            let z = wv.dotc(b);
            let ra = &r * a;
            let ara = a.dotc(&ra).re;
            let b2 = beta.norm_sqr();
            for i in 0..nt {
                sa[i] -= ra[i].conj() * (2.0 * kappa * b2 * z.norm_sqr());
            }
            for i in 0..nr {
                sb[i] -= z.conj() * wv[i].conj() * (2.0 * kappa * b2 * ara);
            }
        };
        reflector(&ch.a_s, &ch.b_s, ch.beta_s, &mut s.a_s, &mut s.b_s);
        for c in 0..ch.a_c.len() {
            let (mut sa, mut sb) = (s.a_c[c].clone(), s.b_c[c].clone());
            reflector(&ch.a_c[c], &ch.b_c[c], ch.beta_c[c], &mut sa, &mut sb);
            s.a_c[c] = sa;
            s.b_c[c] = sb;
        }
        let re = &r * (&ch.h_si * wv);
        for i in 0..nt {
            for j in 0..nr {
                s.h_si[(i, j)] -= re[i].conj() * wv[j] * (2.0 * kappa);
            }
        }
        for (j, row) in ch.h_ul.iter().enumerate() {
            let t = row.transpose() * wv;
            let scale = 2.0 * kappa * bf.f_ul[j].norm_sqr();
            for n in 0..nr {
                s.h_ul[j][n] -= t[(0, 0)].conj() * wv[n] * scale;
            }
        }
    }

    // sensing linear term
    let c = w.s * (1.0 + aux.mu_s).sqrt();
    if c != 0.0 {
        let u = f * &aux.xi_s;
        let y = ch.a_s.dotc(&u);
        let z = bf.w_s.dotc(&ch.b_s);
        for i in 0..nt {
            s.a_s[i] += (ch.beta_s * z * u[i]).conj() * (2.0 * c);
        }
        for i in 0..nr {
            s.b_s[i] += ch.beta_s * y * bf.w_s[i].conj() * (2.0 * c);
        }
    }

    // uplink linear terms
    for k in 0..ch.k_ul() {
        let coef = (aux.xi_ul[k] * bf.f_ul[k]).conj() * (2.0 * w.ul * (1.0 + aux.mu_ul[k]).sqrt());
        for n in 0..nr {
            s.h_ul[k][n] += coef * bf.w_r[(n, k)];
        }
    }
    s
}

/// Gradient of the surrogate (bits per meter) with respect to the
/// coordinates of every antenna on `side`; beamformers and auxiliaries are
/// held fixed.
pub fn grad_positions(
    real: &ChannelRealization,
    layout: &AntennaLayout,
    ch: &ChannelSet,
    bf: &Beamformers,
    aux: &AuxVars,
    cfg: &ScenarioConfig,
    side: Side,
) -> Result<Vec<Point>> {
    let s = sensitivities(ch, bf, aux, cfg);
    let lambda = cfg.wavelength;
    let acc = |g: &mut [f64; 2], sens: Complex64, d: [Complex64; 2]| {
        g[0] += (sens * d[0]).re;
        g[1] += (sens * d[1]).re;
    };
    let t = &real.target;
    let mut out = Vec::new();
    match side {
        Side::Tx => {
            for (m, &p) in layout.tx.iter().enumerate() {
                let mut g = [0.0; 2];
                for (k, u) in real.dl.iter().enumerate() {
                    acc(&mut g, s.h_dl[k][m], dl_entry_gradient(u, p, lambda));
                }
                acc(
                    &mut g,
                    s.a_s[m],
                    steering_entry_gradient(p, t.theta_t, t.phi_t, lambda),
                );
                for (c, cl) in real.clutter.iter().enumerate() {
                    acc(
                        &mut g,
                        s.a_c[c][m],
                        steering_entry_gradient(p, cl.theta_t, cl.phi_t, lambda),
                    );
                }
                for (n, &q) in layout.rx.iter().enumerate() {
                    let (gt, _) = si_entry_gradient(p, q, cfg.d_si, lambda, cfg.gain_factor)?;
                    acc(&mut g, s.h_si[(m, n)], gt);
                }
                out.push([g[0] / LN_2, g[1] / LN_2]);
            }
        }
        Side::Rx => {
            for (n, &q) in layout.rx.iter().enumerate() {
                let mut g = [0.0; 2];
                for (k, u) in real.ul.iter().enumerate() {
                    acc(&mut g, s.h_ul[k][n], ul_entry_gradient(u, q, lambda));
                }
                acc(
                    &mut g,
                    s.b_s[n],
                    steering_entry_gradient(q, t.theta_r, t.phi_r, lambda),
                );
                for (c, cl) in real.clutter.iter().enumerate() {
                    acc(
                        &mut g,
                        s.b_c[c][n],
                        steering_entry_gradient(q, cl.theta_r, cl.phi_r, lambda),
                    );
                }
                for (m, &p) in layout.tx.iter().enumerate() {
                    let (_, gr) = si_entry_gradient(p, q, cfg.d_si, lambda, cfg.gain_factor)?;
                    acc(&mut g, s.h_si[(m, n)], gr);
                }
                out.push([g[0] / LN_2, g[1] / LN_2]);
            }
        }
    }
    Ok(out)
}

/// Step-size schedule of the position ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    /// Initial step, meters per unit normalized gradient.
    pub step: f64,
    pub backoff: f64,
    pub max_iters: usize,
    pub tol_obj: f64,
    /// Steps below this length end the ascent.
    pub min_step: f64,
}

impl GaConfig {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            step: cfg.ga_step_init,
            backoff: cfg.ga_backoff,
            max_iters: cfg.max_ga_iters,
            tol_obj: cfg.tol_obj,
            min_step: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub layout: AntennaLayout,
    pub g_hat: f64,
    /// Accepted steps.
    pub steps: usize,
}

fn with_side(layout: &AntennaLayout, side: Side, pts: Vec<Point>) -> AntennaLayout {
    let mut out = layout.clone();
    match side {
        Side::Tx => out.tx = pts,
        Side::Rx => out.rx = pts,
    }
    out
}

/// Gradient ascent of the surrogate over one panel's positions.
///
/// A step `delta * grad / (1 + |grad|)` is accepted only if the layout stays
/// feasible and the surrogate strictly improves; otherwise `delta` shrinks
/// by `backoff` and the step is retried from the same point.
pub fn ga_positions(
    real: &ChannelRealization,
    layout: &AntennaLayout,
    bf: &Beamformers,
    aux: &AuxVars,
    cfg: &ScenarioConfig,
    ga: &GaConfig,
    side: Side,
) -> Result<GaOutcome> {
    let w = cfg.weights();
    let mut cur = layout.clone();
    let mut ch = ChannelSet::new(real, &cur, cfg)?;
    let mut g_cur = eval_g_hat(&ch, bf, aux, &w);
    let mut delta = ga.step;
    let mut steps = 0;
    'outer: while steps < ga.max_iters {
        let grad = grad_positions(real, &cur, &ch, bf, aux, cfg, side)?;
        let norm = grad
            .iter()
            .map(|g| g[0] * g[0] + g[1] * g[1])
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        let pts = match side {
            Side::Tx => &cur.tx,
            Side::Rx => &cur.rx,
        };
        loop {
            if delta < ga.min_step {
                break 'outer;
            }
            let scale = delta / (1.0 + norm);
            let moved: Vec<Point> = pts
                .iter()
                .zip(&grad)
                .map(|(p, g)| [p[0] + scale * g[0], p[1] + scale * g[1]])
                .collect();
            let cand = with_side(&cur, side, moved);
            if check_layout(&cand, cfg).is_ok() {
                let ch_c = ChannelSet::new(real, &cand, cfg)?;
                let g_c = eval_g_hat(&ch_c, bf, aux, &w);
                if g_c > g_cur {
                    let gain = (g_c - g_cur) / g_cur.abs().max(f64::MIN_POSITIVE);
                    cur = cand;
                    ch = ch_c;
                    g_cur = g_c;
                    steps += 1;
                    if gain < ga.tol_obj {
                        break 'outer;
                    }
                    break;
                }
            }
            delta *= ga.backoff;
        }
    }
    Ok(GaOutcome {
        layout: cur,
        g_hat: g_cur,
        steps,
    })
}

/// One row of the alternating-optimization trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoTraceRow {
    pub iter: usize,
    pub g: f64,
    pub g_hat: f64,
    /// Total transmit antenna displacement in this outer iteration, meters.
    pub tx_disp: f64,
    pub rx_disp: f64,
}

#[derive(Debug, Clone)]
pub struct AoResult {
    pub layout: AntennaLayout,
    pub state: InnerLoopState,
    pub trace: Vec<AoTraceRow>,
    pub iters: usize,
    pub converged: bool,
}

impl AoResult {
    pub fn objective(&self) -> f64 {
        self.state.objective()
    }
}

/// Alternates transmit-panel ascent, receive-panel ascent and the
/// beamforming inner loop, starting with an inner loop at `init_layout`.
/// Stops when the objective changes by less than `tol_obj` (relative) or
/// after `max_outer` position rounds.
pub fn ao_loop(
    real: &ChannelRealization,
    init_layout: &AntennaLayout,
    init_bf: &Beamformers,
    cfg: &ScenarioConfig,
    max_outer: usize,
) -> Result<AoResult> {
    check_layout(init_layout, cfg)?;
    let ga = GaConfig::from_config(cfg);
    let mut layout = init_layout.clone();
    let ch = ChannelSet::new(real, &layout, cfg)?;
    let mut state = inner_loop(&ch, init_bf, cfg)?;
    let mut trace = vec![AoTraceRow {
        iter: 0,
        g: state.objective(),
        g_hat: eval_g_hat(&ch, &state.bf, &state.aux, &cfg.weights()),
        tx_disp: 0.0,
        rx_disp: 0.0,
    }];
    let mut converged = false;
    let mut iters = 0;
    while iters < max_outer {
        iters += 1;
        let tx = ga_positions(real, &layout, &state.bf, &state.aux, cfg, &ga, Side::Tx)?;
        let rx = ga_positions(real, &tx.layout, &state.bf, &state.aux, cfg, &ga, Side::Rx)?;
        let (tx_disp, rx_disp) = layout.displacement(&rx.layout);
        layout = rx.layout;
        let ch = ChannelSet::new(real, &layout, cfg)?;
        state = inner_loop(&ch, &state.bf, cfg)?;
        let prev = trace.last().expect("trace starts non-empty").g;
        let g = state.objective();
        trace.push(AoTraceRow {
            iter: iters,
            g,
            g_hat: rx.g_hat,
            tx_disp,
            rx_disp,
        });
        if (g - prev).abs() / prev.abs().max(f64::MIN_POSITIVE) < cfg.tol_obj {
            converged = true;
            break;
        }
    }
    Ok(AoResult {
        layout,
        state,
        trace,
        iters,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::initial_beamformers;
    use crate::fp::update_aux;
    use crate::rng::{stream, Purpose};
    use crate::scenario::{layout_random, layout_uniform, sample_realization};
    use crate::testutil::{random_bf, small_config};

    fn state(
        cfg: &ScenarioConfig,
        idx: u64,
    ) -> (ChannelRealization, AntennaLayout, Beamformers, AuxVars) {
        let real = sample_realization(cfg, idx).unwrap();
        let mut rng = stream(cfg.seed, Purpose::RandomLayout, 77 + idx, 0);
        let layout = layout_random(cfg, &mut rng).unwrap();
        let ch = ChannelSet::new(&real, &layout, cfg).unwrap();
        let bf = random_bf(cfg, &ch, idx);
        // aux taken at a different point so no term is at its optimum
        let bf2 = random_bf(cfg, &ch, idx + 1000);
        let aux = update_aux(&ch, &bf2);
        (real, layout, bf, aux)
    }

    fn fd_grad(
        real: &ChannelRealization,
        layout: &AntennaLayout,
        bf: &Beamformers,
        aux: &AuxVars,
        cfg: &ScenarioConfig,
        side: Side,
    ) -> Vec<Point> {
        let h = 1e-7;
        let n = match side {
            Side::Tx => layout.tx.len(),
            Side::Rx => layout.rx.len(),
        };
        let g = |l: &AntennaLayout| {
            eval_g_hat(
                &ChannelSet::new(real, l, cfg).unwrap(),
                bf,
                aux,
                &cfg.weights(),
            )
        };
        (0..n)
            .map(|m| {
                let mut out = [0.0; 2];
                for (ax, o) in out.iter_mut().enumerate() {
                    let mut lp = layout.clone();
                    let mut lm = layout.clone();
                    match side {
                        Side::Tx => {
                            lp.tx[m][ax] += h;
                            lm.tx[m][ax] -= h;
                        }
                        Side::Rx => {
                            lp.rx[m][ax] += h;
                            lm.rx[m][ax] -= h;
                        }
                    }
                    *o = (g(&lp) - g(&lm)) / (2.0 * h);
                }
                out
            })
            .collect()
    }

    fn rel_err(a: &[Point], b: &[Point]) -> f64 {
        let d: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2))
            .sum();
        let n: f64 = b.iter().map(|y| y[0] * y[0] + y[1] * y[1]).sum();
        (d / n).sqrt()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (ci, cfg) in [small_config(), ScenarioConfig::default()]
            .iter()
            .enumerate()
        {
            for idx in 0..5 {
                let (real, layout, bf, aux) = state(cfg, 10 * ci as u64 + idx);
                let ch = ChannelSet::new(&real, &layout, cfg).unwrap();
                for side in [Side::Tx, Side::Rx] {
                    let an = grad_positions(&real, &layout, &ch, &bf, &aux, cfg, side).unwrap();
                    let num = fd_grad(&real, &layout, &bf, &aux, cfg, side);
                    let e = rel_err(&an, &num);
                    assert!(e < 1e-5, "cfg {ci} idx {idx} {side:?}: rel err {e}");
                }
            }
        }
    }

    #[test]
    fn zero_aux_gives_zero_gradient() {
        let cfg = small_config();
        let (real, layout, bf, _) = state(&cfg, 1);
        let ch = ChannelSet::new(&real, &layout, &cfg).unwrap();
        let aux = AuxVars::zeros(cfg.k_dl, cfg.k_ul);
        for side in [Side::Tx, Side::Rx] {
            let g = grad_positions(&real, &layout, &ch, &bf, &aux, &cfg, side).unwrap();
            assert!(g.iter().all(|p| p[0] == 0.0 && p[1] == 0.0));
        }
    }

    #[test]
    fn downlink_only_reduces_to_direct_chain_rule() {
        let cfg = ScenarioConfig {
            k_ul: 0,
            n_clutter: 0,
            ..small_config()
        };
        let (real, layout, mut bf, aux) = state(&cfg, 2);
        bf.w_s.fill(Complex64::default());
        let ch = ChannelSet::new(&real, &layout, &cfg).unwrap();
        let an = grad_positions(&real, &layout, &ch, &bf, &aux, &cfg, Side::Tx).unwrap();
        let wdl = cfg.w_dl;
        for (m, &p) in layout.tx.iter().enumerate() {
            let mut g = [0.0; 2];
            for (k, u) in real.dl.iter().enumerate() {
                let dh = dl_entry_gradient(u, p, cfg.wavelength);
                let xi = aux.xi_dl[k];
                for ax in 0..2 {
                    // d(h^H f_j)/dx = conj(dh_m) f_jm
                    let dq = |j: usize| dh[ax].conj() * bf.f[(m, j)];
                    let lin = 2.0 * (1.0 + aux.mu_dl[k]).sqrt() * (xi * dq(k)).re;
                    let quad: f64 = (0..cfg.k_dl)
                        .map(|j| 2.0 * (ch.h_dl[k].dotc(&bf.f.column(j)).conj() * dq(j)).re)
                        .sum();
                    g[ax] += wdl * (lin - xi.norm_sqr() * quad) / LN_2;
                }
            }
            for ax in 0..2 {
                assert!(
                    (g[ax] - an[m][ax]).abs() <= 1e-10 * g[ax].abs().max(1.0),
                    "{} vs {}",
                    g[ax],
                    an[m][ax]
                );
            }
        }
    }

    #[test]
    fn ga_keeps_feasibility_and_improves() {
        let cfg = ScenarioConfig::default();
        let real = sample_realization(&cfg, 0).unwrap();
        let layout = layout_uniform(&cfg).unwrap();
        let ch = ChannelSet::new(&real, &layout, &cfg).unwrap();
        let st = inner_loop(&ch, &initial_beamformers(&cfg, 0), &cfg).unwrap();
        let g0 = eval_g_hat(&ch, &st.bf, &st.aux, &cfg.weights());
        let ga = GaConfig::from_config(&cfg);
        for side in [Side::Tx, Side::Rx] {
            let out = ga_positions(&real, &layout, &st.bf, &st.aux, &cfg, &ga, side).unwrap();
            check_layout(&out.layout, &cfg).unwrap();
            assert!(out.g_hat >= g0);
        }
    }

    #[test]
    fn ga_with_zero_gradient_is_a_no_op() {
        let cfg = small_config();
        let (real, layout, bf, _) = state(&cfg, 3);
        let aux = AuxVars::zeros(cfg.k_dl, cfg.k_ul);
        let out = ga_positions(
            &real,
            &layout,
            &bf,
            &aux,
            &cfg,
            &GaConfig::from_config(&cfg),
            Side::Tx,
        )
        .unwrap();
        assert_eq!(out.layout, layout);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn ga_at_region_edge_stays_inside() {
        // tiny region: any outward step is rejected, inward steps are allowed
        let cfg = ScenarioConfig {
            n_tx: 2,
            n_rx: 1,
            ..small_config()
        }
        .with_region_side(0.006);
        let r = cfg.region();
        let layout = AntennaLayout {
            tx: vec![[r.min_x, r.min_y], [r.max_x, r.max_y]],
            rx: vec![[r.min_x, r.max_y]],
        };
        check_layout(&layout, &cfg).unwrap();
        let real = sample_realization(&cfg, 4).unwrap();
        let ch = ChannelSet::new(&real, &layout, &cfg).unwrap();
        let bf = random_bf(&cfg, &ch, 4);
        let aux = update_aux(&ch, &bf);
        let ga = GaConfig {
            step: 0.01,
            ..GaConfig::from_config(&cfg)
        };
        for side in [Side::Tx, Side::Rx] {
            let out = ga_positions(&real, &layout, &bf, &aux, &cfg, &ga, side).unwrap();
            check_layout(&out.layout, &cfg).unwrap();
        }
    }

    #[test]
    fn ao_is_monotone_and_feasible() {
        let cfg = ScenarioConfig::default();
        for idx in 0..2 {
            let real = sample_realization(&cfg, idx).unwrap();
            let layout = layout_uniform(&cfg).unwrap();
            let res = ao_loop(
                &real,
                &layout,
                &initial_beamformers(&cfg, idx),
                &cfg,
                cfg.max_ao_iters,
            )
            .unwrap();
            for pair in res.trace.windows(2) {
                assert!(pair[1].g >= pair[0].g - 1e-9, "{pair:?}");
            }
            check_layout(&res.layout, &cfg).unwrap();
            assert!(res.objective() >= res.trace[0].g);
        }
    }
}
