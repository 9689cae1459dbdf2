//! Channel construction: far-field steering vectors, multipath user
//! channels, reflector responses, the near-field self-interference matrix and
//! the derivatives of each with respect to antenna coordinates.

use std::f64::consts::PI;

use crate::scenario::{AntennaLayout, ChannelRealization, Point, ScenarioConfig, UserLink};
use crate::{CMat, CVec, Complex64, Error, Result};

/// Coordinate axis of an antenna position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::X, Axis::Y];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

fn wavenumber(lambda: f64) -> f64 {
    2.0 * PI / lambda
}

/// Path-length difference of an antenna at `pos` relative to the origin for a
/// wave with elevation `theta` and azimuth `phi`.
pub fn steering_delay(pos: Point, theta: f64, phi: f64) -> f64 {
    pos[0] * theta.cos() * phi.sin() + pos[1] * theta.sin()
}

/// Gradient of [`steering_delay`] with respect to `pos`.
fn delay_gradient(theta: f64, phi: f64) -> [f64; 2] {
    [theta.cos() * phi.sin(), theta.sin()]
}

pub fn steering_entry(pos: Point, theta: f64, phi: f64, lambda: f64) -> Complex64 {
    Complex64::from_polar(1.0, wavenumber(lambda) * steering_delay(pos, theta, phi))
}

/// `[d/dx, d/dy]` of [`steering_entry`].
pub fn steering_entry_gradient(pos: Point, theta: f64, phi: f64, lambda: f64) -> [Complex64; 2] {
    let a = steering_entry(pos, theta, phi, lambda);
    let k = wavenumber(lambda);
    let g = delay_gradient(theta, phi);
    [
        Complex64::new(0.0, k * g[0]) * a,
        Complex64::new(0.0, k * g[1]) * a,
    ]
}

pub fn steering_vector(positions: &[Point], theta: f64, phi: f64, lambda: f64) -> CVec {
    CVec::from_iterator(
        positions.len(),
        positions
            .iter()
            .map(|&p| steering_entry(p, theta, phi, lambda)),
    )
}

/// Derivative of [`steering_vector`] with respect to coordinate `axis` of
/// antenna `m`; only entry `m` is nonzero.
pub fn steering_derivative(
    positions: &[Point],
    theta: f64,
    phi: f64,
    lambda: f64,
    axis: Axis,
    m: usize,
) -> CVec {
    let mut d = CVec::zeros(positions.len());
    d[m] = steering_entry_gradient(positions[m], theta, phi, lambda)[axis.index()];
    d
}

/// Large-scale gain `G_l * lambda / (4 pi d)^2`.
pub fn path_loss(d: f64, lambda: f64, gain_factor: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Channel(format!(
            "path loss needs a positive distance, got {d}"
        )));
    }
    Ok(gain_factor * lambda / (4.0 * PI * d).powi(2))
}

fn user_scale(user: &UserLink) -> f64 {
    (user.eta / user.paths.len().max(1) as f64).sqrt()
}

/// Downlink channel entry of one transmit antenna.
pub fn dl_entry(user: &UserLink, pos: Point, lambda: f64) -> Complex64 {
    let s: Complex64 = user
        .paths
        .iter()
        .map(|p| p.gain * steering_entry(pos, p.theta, p.phi, lambda))
        .sum();
    s * user_scale(user)
}

pub fn dl_entry_gradient(user: &UserLink, pos: Point, lambda: f64) -> [Complex64; 2] {
    let mut g = [Complex64::default(); 2];
    for p in &user.paths {
        let d = steering_entry_gradient(pos, p.theta, p.phi, lambda);
        g[0] += p.gain * d[0];
        g[1] += p.gain * d[1];
    }
    let s = user_scale(user);
    [g[0] * s, g[1] * s]
}

/// Uplink row entry of one receive antenna (conjugated steering).
pub fn ul_entry(user: &UserLink, pos: Point, lambda: f64) -> Complex64 {
    let s: Complex64 = user
        .paths
        .iter()
        .map(|p| p.gain * steering_entry(pos, p.theta, p.phi, lambda).conj())
        .sum();
    s * user_scale(user)
}

pub fn ul_entry_gradient(user: &UserLink, pos: Point, lambda: f64) -> [Complex64; 2] {
    let mut g = [Complex64::default(); 2];
    for p in &user.paths {
        let d = steering_entry_gradient(pos, p.theta, p.phi, lambda);
        g[0] += p.gain * d[0].conj();
        g[1] += p.gain * d[1].conj();
    }
    let s = user_scale(user);
    [g[0] * s, g[1] * s]
}

/// Downlink channel column `h_DL,k` over the transmit positions.
pub fn dl_channel(user: &UserLink, tx: &[Point], lambda: f64) -> CVec {
    CVec::from_iterator(tx.len(), tx.iter().map(|&p| dl_entry(user, p, lambda)))
}

/// Uplink channel row `h_UL,k` over the receive positions, stored as its
/// entries.
pub fn ul_channel(user: &UserLink, rx: &[Point], lambda: f64) -> CVec {
    CVec::from_iterator(rx.len(), rx.iter().map(|&p| ul_entry(user, p, lambda)))
}

/// Transmit-to-receive distance including the fixed panel offset.
pub fn si_distance(tx: Point, rx: Point, d_si: f64) -> f64 {
    (tx[0] - rx[0] + d_si).hypot(tx[1] - rx[1])
}

/// Near-field power gain at distance `r`.
pub fn si_power_gain(r: f64, lambda: f64, gain_factor: f64) -> f64 {
    let u = lambda / (2.0 * PI * r);
    let u2 = u * u;
    gain_factor / 4.0 * (u2 - u2 * u2 + u2 * u2 * u2)
}

fn check_si_distance(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Channel(format!(
            "self-interference distance must be positive, got {r}"
        )))
    }
}

/// Self-interference coefficient at distance `r`.
pub fn si_entry(r: f64, lambda: f64, gain_factor: f64) -> Result<Complex64> {
    check_si_distance(r)?;
    let amp = si_power_gain(r, lambda, gain_factor).max(0.0).sqrt();
    Ok(Complex64::from_polar(amp, -wavenumber(lambda) * r))
}

/// `d/dr` of [`si_entry`], differentiating amplitude and phase.
pub fn si_entry_dr(r: f64, lambda: f64, gain_factor: f64) -> Result<Complex64> {
    check_si_distance(r)?;
    let k = wavenumber(lambda);
    let u = 1.0 / (k * r);
    let p = u * u - u.powi(4) + u.powi(6);
    let amp = (gain_factor / 4.0 * p).max(0.0).sqrt();
    let dp_du = 2.0 * u - 4.0 * u.powi(3) + 6.0 * u.powi(5);
    let du_dr = -u / r;
    let damp = if amp > 0.0 {
        gain_factor / 4.0 * dp_du * du_dr / (2.0 * amp)
    } else {
        0.0
    };
    let phase = Complex64::from_polar(1.0, -k * r);
    Ok((Complex64::new(damp, 0.0) - Complex64::new(0.0, k * amp)) * phase)
}

/// `H_SI` with entry `(i, j)` coupling transmit antenna `i` to receive
/// antenna `j`.
pub fn si_channel(
    layout: &AntennaLayout,
    d_si: f64,
    lambda: f64,
    gain_factor: f64,
) -> Result<CMat> {
    let mut h = CMat::zeros(layout.tx.len(), layout.rx.len());
    for (i, &t) in layout.tx.iter().enumerate() {
        for (j, &r) in layout.rx.iter().enumerate() {
            h[(i, j)] = si_entry(si_distance(t, r, d_si), lambda, gain_factor)?;
        }
    }
    Ok(h)
}

/// Gradient of `H_SI[i, j]` with respect to `(tx_i, rx_j)`: returns
/// `([d/dx_t, d/dy_t], [d/dx_r, d/dy_r])`.
pub fn si_entry_gradient(
    tx: Point,
    rx: Point,
    d_si: f64,
    lambda: f64,
    gain_factor: f64,
) -> Result<([Complex64; 2], [Complex64; 2])> {
    let dx = tx[0] - rx[0] + d_si;
    let dy = tx[1] - rx[1];
    let r = dx.hypot(dy);
    let dh = si_entry_dr(r, lambda, gain_factor)?;
    let gt = [dh * (dx / r), dh * (dy / r)];
    Ok((gt, [-gt[0], -gt[1]]))
}

/// All channel objects for one realization at one antenna layout.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub h_dl: Vec<CVec>,
    /// Uplink rows `h_UL,k`, stored as their entries.
    pub h_ul: Vec<CVec>,
    pub a_s: CVec,
    pub b_s: CVec,
    /// `sqrt(eta_s) * alpha_s`
    pub beta_s: Complex64,
    pub a_c: Vec<CVec>,
    pub b_c: Vec<CVec>,
    pub beta_c: Vec<Complex64>,
    /// `g[i][j]`: uplink user `i` to downlink user `j`.
    pub g: Vec<Vec<Complex64>>,
    pub h_si: CMat,
    pub noise: f64,
}

impl ChannelSet {
    pub fn new(
        real: &ChannelRealization,
        layout: &AntennaLayout,
        cfg: &ScenarioConfig,
    ) -> Result<Self> {
        let lambda = cfg.wavelength;
        let k = wavenumber(lambda);
        let t = &real.target;
        let g = real
            .cross_distance
            .iter()
            .zip(&real.cross_eta)
            .map(|(ds, es)| {
                ds.iter()
                    .zip(es)
                    .map(|(&d, &e)| Complex64::from_polar(e.sqrt(), -k * d))
                    .collect()
            })
            .collect();
        Ok(Self {
            h_dl: real
                .dl
                .iter()
                .map(|u| dl_channel(u, &layout.tx, lambda))
                .collect(),
            h_ul: real
                .ul
                .iter()
                .map(|u| ul_channel(u, &layout.rx, lambda))
                .collect(),
            a_s: steering_vector(&layout.tx, t.theta_t, t.phi_t, lambda),
            b_s: steering_vector(&layout.rx, t.theta_r, t.phi_r, lambda),
            beta_s: t.front_factor(),
            a_c: real
                .clutter
                .iter()
                .map(|c| steering_vector(&layout.tx, c.theta_t, c.phi_t, lambda))
                .collect(),
            b_c: real
                .clutter
                .iter()
                .map(|c| steering_vector(&layout.rx, c.theta_r, c.phi_r, lambda))
                .collect(),
            beta_c: real.clutter.iter().map(|c| c.front_factor()).collect(),
            g,
            h_si: si_channel(layout, cfg.d_si, lambda, cfg.gain_factor)?,
            noise: cfg.noise(),
        })
    }

    pub fn n_tx(&self) -> usize {
        self.a_s.len()
    }

    pub fn n_rx(&self) -> usize {
        self.b_s.len()
    }

    pub fn k_dl(&self) -> usize {
        self.h_dl.len()
    }

    pub fn k_ul(&self) -> usize {
        self.h_ul.len()
    }

    /// Column `h_UL,k^H` seen by the receive combiners.
    pub fn v_ul(&self, k: usize) -> CVec {
        self.h_ul[k].conjugate()
    }
}
