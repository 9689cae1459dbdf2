//! Particle swarm over the concatenated transmit and receive antenna
//! coordinates. Every feasible particle is scored by a short alternating
//! optimization run; bests keep the refined layout and beamformers.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{initial_beamformers, inner_loop, InnerLoopState};
use crate::channel::ChannelSet;
use crate::position::{ao_loop, AoResult};
use crate::rng::{stream, Purpose};
use crate::scenario::{
    check_layout, layout_random, AntennaLayout, ChannelRealization, Point, Region, ScenarioConfig,
};
use crate::Result;

/// Linearly decreasing inertia weight at iteration `i` of `iters`.
pub fn inertia(i: usize, iters: usize, w_max: f64, w_min: f64) -> f64 {
    if iters == 0 {
        return w_max;
    }
    w_max - (w_max - w_min) * i as f64 / iters as f64
}

/// `omega v + c1 tau1 (global - p) + c2 tau2 (local - p)` with one pair of
/// uniform draws per call.
#[allow(clippy::too_many_arguments)]
pub fn velocity_update<R: Rng>(
    v: &[Point],
    p: &[Point],
    global: &[Point],
    local: &[Point],
    omega: f64,
    c1: f64,
    c2: f64,
    rng: &mut R,
) -> Vec<Point> {
    let tau1: f64 = rng.random();
    let tau2: f64 = rng.random();
    (0..p.len())
        .map(|i| {
            let mut out = [0.0; 2];
            for (ax, o) in out.iter_mut().enumerate() {
                *o = omega * v[i][ax]
                    + c1 * tau1 * (global[i][ax] - p[i][ax])
                    + c2 * tau2 * (local[i][ax] - p[i][ax]);
            }
            out
        })
        .collect()
}

/// Per-axis clamp into the region.
pub fn project(points: &[Point], region: &Region) -> Vec<Point> {
    points.iter().map(|&p| region.clamp(p)).collect()
}

/// Refined outcome of a feasible particle.
#[derive(Debug, Clone)]
pub struct Fitness {
    pub value: f64,
    pub layout: AntennaLayout,
    pub state: InnerLoopState,
}

/// Scores a candidate layout: `None` if it violates the layout constraints,
/// otherwise the objective after a capped alternating optimization.
pub fn fitness(
    real: &ChannelRealization,
    points: &[Point],
    cfg: &ScenarioConfig,
) -> Result<Option<Fitness>> {
    let layout = AntennaLayout::split(points, cfg.n_tx);
    if check_layout(&layout, cfg).is_err() {
        return Ok(None);
    }
    let init = initial_beamformers(cfg, real.index);
    Ok(Some(from_ao(ao_loop(
        real,
        &layout,
        &init,
        cfg,
        cfg.max_ao_iters_pso,
    )?)))
}

fn from_ao(res: AoResult) -> Fitness {
    Fitness {
        value: res.objective(),
        layout: res.layout,
        state: res.state,
    }
}

#[derive(Debug, Clone)]
struct Particle {
    pos: Vec<Point>,
    vel: Vec<Point>,
    rng: ChaCha20Rng,
    best: Option<Fitness>,
}

/// One row of the swarm trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoTraceRow {
    pub iter: usize,
    pub best: f64,
    /// Mean fitness over the feasible particles of this iteration.
    pub mean_feasible: f64,
    pub infeasible: usize,
}

#[derive(Debug, Clone)]
pub struct PsoResult {
    pub layout: AntennaLayout,
    /// Beamformers after the final refinement.
    pub state: InnerLoopState,
    pub best: f64,
    /// Global best of the swarm before the final refinement.
    pub swarm: Fitness,
    pub trace: Vec<PsoTraceRow>,
}

fn evaluate_all(
    real: &ChannelRealization,
    swarm: &[Particle],
    cfg: &ScenarioConfig,
) -> Result<Vec<Option<Fitness>>> {
    swarm
        .par_iter()
        .map(|p| fitness(real, &p.pos, cfg))
        .collect()
}

/// Folds one round of fitness values into personal and global bests in
/// particle order; only strict improvements replace an incumbent.
fn absorb(
    swarm: &mut [Particle],
    scores: Vec<Option<Fitness>>,
    global: &mut Option<Fitness>,
    iter: usize,
) -> PsoTraceRow {
    let mut sum = 0.0;
    let mut feasible = 0usize;
    for (p, s) in swarm.iter_mut().zip(scores) {
        let Some(s) = s else { continue };
        sum += s.value;
        feasible += 1;
        if global.as_ref().is_none_or(|g| s.value > g.value) {
            *global = Some(s.clone());
        }
        if p.best.as_ref().is_none_or(|b| s.value > b.value) {
            p.best = Some(s);
        }
    }
    PsoTraceRow {
        iter,
        best: global.as_ref().map_or(f64::NEG_INFINITY, |g| g.value),
        mean_feasible: if feasible > 0 {
            sum / feasible as f64
        } else {
            f64::NAN
        },
        infeasible: swarm.len() - feasible,
    }
}

/// Warm-started beamforming pass at a fixed layout, kept only if it gains more
/// than `tol_obj` relative to the incumbent.
pub fn refine(
    real: &ChannelRealization,
    best: &Fitness,
    cfg: &ScenarioConfig,
) -> Result<(InnerLoopState, f64)> {
    let ch = ChannelSet::new(real, &best.layout, cfg)?;
    let refined = inner_loop(&ch, &best.state.bf, cfg)?;
    let value = refined.objective();
    if value - best.value > cfg.tol_obj * best.value.abs() {
        Ok((refined, value))
    } else {
        Ok((best.state.clone(), best.value))
    }
}

/// Swarm search over antenna layouts followed by a final beamforming
/// refinement at the global best.
pub fn pso_run(real: &ChannelRealization, cfg: &ScenarioConfig) -> Result<PsoResult> {
    let region = cfg.region();
    let mut swarm = (0..cfg.n_particles)
        .map(|n| {
            let mut init_rng = stream(cfg.seed, Purpose::PsoInit, real.index, n as u64);
            let pos = layout_random(cfg, &mut init_rng)?.concat();
            Ok(Particle {
                vel: vec![[0.0; 2]; pos.len()],
                pos,
                rng: stream(cfg.seed, Purpose::PsoVelocity, real.index, n as u64),
                best: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut global: Option<Fitness> = None;
    let scores = evaluate_all(real, &swarm, cfg)?;
    let mut trace = vec![absorb(&mut swarm, scores, &mut global, 0)];
    if global.is_none() {
        return Err(crate::Error::Layout(
            "no feasible particle at initialization".into(),
        ));
    }

    for i in 1..=cfg.pso_iters {
        let omega = inertia(i, cfg.pso_iters, cfg.pso_w_max, cfg.pso_w_min);
        let g_pos = global.as_ref().expect("global best exists").layout.concat();
        for p in swarm.iter_mut() {
            let l_pos = p
                .best
                .as_ref()
                .map_or_else(|| p.pos.clone(), |b| b.layout.concat());
            p.vel = velocity_update(
                &p.vel, &p.pos, &g_pos, &l_pos, omega, cfg.pso_c1, cfg.pso_c2, &mut p.rng,
            );
            let moved: Vec<Point> = p
                .pos
                .iter()
                .zip(&p.vel)
                .map(|(x, v)| [x[0] + v[0], x[1] + v[1]])
                .collect();
            p.pos = project(&moved, &region);
        }
        let scores = evaluate_all(real, &swarm, cfg)?;
        trace.push(absorb(&mut swarm, scores, &mut global, i));
    }

    let swarm = global.expect("global best exists");
    let (state, best) = refine(real, &swarm, cfg)?;
    Ok(PsoResult {
        layout: swarm.layout.clone(),
        state,
        best,
        swarm,
        trace,
    })
}
