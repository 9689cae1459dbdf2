use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{FpaGeometry, Region, ScenarioConfig};
use crate::{Error, Result};

/// Planar antenna coordinate `[x, y]` in meters.
pub type Point = [f64; 2];

/// Transmit and receive antenna coordinates, each array in its own plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaLayout {
    pub tx: Vec<Point>,
    pub rx: Vec<Point>,
}

impl AntennaLayout {
    /// Transmit points followed by receive points.
    pub fn concat(&self) -> Vec<Point> {
        self.tx.iter().chain(self.rx.iter()).copied().collect()
    }

    pub fn split(points: &[Point], n_tx: usize) -> Self {
        Self {
            tx: points[..n_tx].to_vec(),
            rx: points[n_tx..].to_vec(),
        }
    }

    /// Summed Euclidean movement of each array relative to `other`.
    pub fn displacement(&self, other: &AntennaLayout) -> (f64, f64) {
        let moved =
            |a: &[Point], b: &[Point]| -> f64 { a.iter().zip(b).map(|(p, q)| dist(*p, *q)).sum() };
        (moved(&self.tx, &other.tx), moved(&self.rx, &other.rx))
    }
}

pub(crate) fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

fn min_spacing_ok(points: &[Point], d0: f64) -> bool {
    let limit = d0 * (1.0 - 1e-12);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if dist(points[i], points[j]) < limit {
                return false;
            }
        }
    }
    true
}

fn check_array(points: &[Point], region: &Region, d0: f64, label: &str) -> Result<()> {
    if let Some((i, p)) = points
        .iter()
        .enumerate()
        .find(|(_, p)| !region.contains(**p))
    {
        return Err(Error::Layout(format!(
            "{label} antenna {i} at ({}, {}) outside region",
            p[0], p[1]
        )));
    }
    if !min_spacing_ok(points, d0) {
        return Err(Error::Layout(format!(
            "{label} antennas closer than d0 = {d0}"
        )));
    }
    Ok(())
}

/// Region bounds and minimum spacing for both arrays. Comparisons carry a
/// `1e-12` relative slack so lattice layouts built at exactly `d0` pass.
pub fn check_layout(layout: &AntennaLayout, cfg: &ScenarioConfig) -> Result<()> {
    if layout.tx.len() != cfg.n_tx || layout.rx.len() != cfg.n_rx {
        return Err(Error::Layout(format!(
            "layout has {}x{} antennas, config expects {}x{}",
            layout.tx.len(),
            layout.rx.len(),
            cfg.n_tx,
            cfg.n_rx
        )));
    }
    let region = cfg.region();
    check_array(&layout.tx, &region, cfg.d0, "tx")?;
    check_array(&layout.rx, &region, cfg.d0, "rx")
}

fn fpa_array(n: usize, cfg: &ScenarioConfig) -> Result<Vec<Point>> {
    let region = cfg.region();
    // anchor snapped to a nanometre grid: concentric regions give the same array bit for bit
    let [cx, cy] = region.center().map(|c| (c * 1e9).round() / 1e9);
    let s = cfg.wavelength / 2.0;
    let (cols, rows) = match cfg.fpa_geometry {
        FpaGeometry::Linear => (n, 1),
        FpaGeometry::Planar => {
            let cols = (n as f64).sqrt().ceil() as usize;
            (cols, n.div_ceil(cols))
        }
    };
    let tol = region.tolerance();
    if (cols - 1) as f64 * s > region.width() + tol || (rows - 1) as f64 * s > region.height() + tol
    {
        return Err(Error::Layout(format!(
            "{n}-element half-wavelength array ({cols}x{rows}) does not fit the region"
        )));
    }
    let x0 = cx - 0.5 * (cols - 1) as f64 * s;
    let y0 = cy - 0.5 * (rows - 1) as f64 * s;
    Ok((0..n)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let p = [x0 + c as f64 * s, y0 + r as f64 * s];
            region.clamp(p)
        })
        .collect())
}

/// Fixed-position baseline: half-wavelength spaced arrays centered in the region.
pub fn layout_fpa(cfg: &ScenarioConfig) -> Result<AntennaLayout> {
    let layout = AntennaLayout {
        tx: fpa_array(cfg.n_tx, cfg)?,
        rx: fpa_array(cfg.n_rx, cfg)?,
    };
    check_layout(&layout, cfg)?;
    Ok(layout)
}

fn grid_array(n: usize, region: &Region, d0: f64) -> Result<Vec<Point>> {
    let (w, h) = (region.width(), region.height());
    let cols = ((n as f64 * w / h).sqrt().ceil() as usize).clamp(1, n);
    let rows = n.div_ceil(cols);
    // cell-centered first, then edge-to-edge if the cells are too small
    let centered = |i: usize| {
        let (r, c) = (i / cols, i % cols);
        [
            region.min_x + (c as f64 + 0.5) * w / cols as f64,
            region.min_y + (r as f64 + 0.5) * h / rows as f64,
        ]
    };
    let edge = |i: usize| {
        let (r, c) = (i / cols, i % cols);
        let step = |extent: f64, k: usize| if k > 1 { extent / (k - 1) as f64 } else { 0.0 };
        let fx = if cols > 1 {
            region.min_x + c as f64 * step(w, cols)
        } else {
            region.min_x + 0.5 * w
        };
        let fy = if rows > 1 {
            region.min_y + r as f64 * step(h, rows)
        } else {
            region.min_y + 0.5 * h
        };
        [fx, fy]
    };
    for place in [&centered as &dyn Fn(usize) -> Point, &edge] {
        let pts: Vec<Point> = (0..n).map(place).collect();
        if min_spacing_ok(&pts, d0) {
            return Ok(pts);
        }
    }
    Err(Error::Layout(format!(
        "{n} antennas do not fit a regular grid at spacing {d0}"
    )))
}

/// Regular grid filling the region, used as the AO-MA starting point.
pub fn layout_uniform(cfg: &ScenarioConfig) -> Result<AntennaLayout> {
    let region = cfg.region();
    let layout = AntennaLayout {
        tx: grid_array(cfg.n_tx, &region, cfg.d0)?,
        rx: grid_array(cfg.n_rx, &region, cfg.d0)?,
    };
    check_layout(&layout, cfg)?;
    Ok(layout)
}

const MAX_ATTEMPTS: usize = 10_000;

fn random_array<R: Rng>(n: usize, region: &Region, d0: f64, rng: &mut R) -> Result<Vec<Point>> {
    let mut pts: Vec<Point> = Vec::with_capacity(n);
    for i in 0..n {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let p = [
                region.min_x + rng.random::<f64>() * region.width(),
                region.min_y + rng.random::<f64>() * region.height(),
            ];
            if pts.iter().all(|q| dist(p, *q) >= d0) {
                pts.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Layout(format!(
                "rejection sampling failed for antenna {i} after {MAX_ATTEMPTS} attempts"
            )));
        }
    }
    Ok(pts)
}

/// Uniformly random feasible layout by sequential rejection sampling.
pub fn layout_random<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Result<AntennaLayout> {
    let region = cfg.region();
    let tx = random_array(cfg.n_tx, &region, cfg.d0, rng)?;
    let rx = random_array(cfg.n_rx, &region, cfg.d0, rng)?;
    Ok(AntennaLayout { tx, rx })
}
