use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fixed-array geometry used by the FPA baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FpaGeometry {
    /// Uniform linear array along x at mid-height, centered.
    Linear,
    /// Near-square planar grid, centered.
    Planar,
}

/// Every tunable of a simulation run. Defaults reproduce the reference
/// parameter table; powers are given in dBm and converted on access.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub k_dl: usize,
    pub k_ul: usize,
    pub n_clutter: usize,
    pub n_paths: usize,
    pub wavelength: f64,
    pub d_si: f64,
    /// Free-space fading factor `G_l`.
    pub gain_factor: f64,
    pub w_dl: f64,
    pub w_ul: f64,
    pub w_s: f64,
    pub p_dl_dbm: f64,
    pub p_ul_dbm: f64,
    pub noise_dbm: f64,
    pub region_min_x: f64,
    pub region_max_x: f64,
    pub region_min_y: f64,
    pub region_max_y: f64,
    pub d0: f64,
    pub n_random_init: usize,
    pub n_particles: usize,
    pub pso_iters: usize,
    pub seed: u64,
    pub tol_obj: f64,
    /// Relative power tolerance of the dual-variable bisection.
    pub tol_power: f64,
    pub max_inner_iters: usize,
    pub max_ao_iters: usize,
    pub max_ga_iters: usize,
    /// Outer AO cap used inside PSO fitness evaluations.
    pub max_ao_iters_pso: usize,
    pub ga_step_init: f64,
    pub ga_backoff: f64,
    pub pso_c1: f64,
    pub pso_c2: f64,
    pub pso_w_max: f64,
    pub pso_w_min: f64,
    pub dist_dl_min: f64,
    pub dist_dl_max: f64,
    pub dist_ul_min: f64,
    pub dist_ul_max: f64,
    pub dist_tgt_min: f64,
    pub dist_tgt_max: f64,
    pub target_theta: f64,
    pub target_phi: f64,
    pub fpa_geometry: FpaGeometry,
    /// Put the uniform layout in the first of the `n_random_init` RI-MA slots.
    pub ri_include_uniform: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_tx: 8,
            n_rx: 4,
            k_dl: 3,
            k_ul: 3,
            n_clutter: 3,
            n_paths: 10,
            wavelength: 0.01,
            d_si: 0.2,
            gain_factor: 1.0,
            w_dl: 0.3,
            w_ul: 0.3,
            w_s: 0.4,
            p_dl_dbm: 30.0,
            p_ul_dbm: 30.0,
            noise_dbm: -60.0,
            region_min_x: 0.0,
            region_max_x: 0.06,
            region_min_y: 0.0,
            region_max_y: 0.06,
            d0: 0.005,
            n_random_init: 300,
            n_particles: 100,
            pso_iters: 50,
            seed: 0,
            tol_obj: 1e-5,
            tol_power: 1e-6,
            max_inner_iters: 200,
            max_ao_iters: 30,
            max_ga_iters: 30,
            max_ao_iters_pso: 5,
            ga_step_init: 0.001,
            ga_backoff: 0.9,
            pso_c1: 1.5,
            pso_c2: 1.5,
            pso_w_max: 0.9,
            pso_w_min: 0.4,
            dist_dl_min: 40.0,
            dist_dl_max: 70.0,
            dist_ul_min: 30.0,
            dist_ul_max: 60.0,
            dist_tgt_min: 20.0,
            dist_tgt_max: 40.0,
            target_theta: PI / 4.0,
            target_phi: 0.0,
            fpa_geometry: FpaGeometry::Linear,
            ri_include_uniform: false,
        }
    }
}

/// `10^((dBm - 30) / 10)` watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub dl: f64,
    pub ul: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl Region {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
        ]
    }

    /// Absolute slack used by the feasibility predicate for boundary checks.
    pub fn tolerance(&self) -> f64 {
        1e-12
            * self
                .width()
                .max(self.height())
                .max(self.min_x.abs())
                .max(self.min_y.abs())
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let tol = self.tolerance();
        p[0] >= self.min_x - tol
            && p[0] <= self.max_x + tol
            && p[1] >= self.min_y - tol
            && p[1] <= self.max_y + tol
    }

    pub fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [
            p[0].clamp(self.min_x, self.max_x),
            p[1].clamp(self.min_y, self.max_y),
        ]
    }
}

impl ScenarioConfig {
    pub fn p_dl(&self) -> f64 {
        dbm_to_watts(self.p_dl_dbm)
    }

    pub fn p_ul(&self) -> f64 {
        dbm_to_watts(self.p_ul_dbm)
    }

    pub fn noise(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn weights(&self) -> Weights {
        Weights {
            dl: self.w_dl,
            ul: self.w_ul,
            s: self.w_s,
        }
    }

    pub fn region(&self) -> Region {
        Region {
            min_x: self.region_min_x,
            max_x: self.region_max_x,
            min_y: self.region_min_y,
            max_y: self.region_max_y,
        }
    }

    /// Square region of side `side` sharing the current region's center.
    pub fn with_region_side(&self, side: f64) -> Self {
        let [cx, cy] = self.region().center();
        let mut cfg = self.clone();
        cfg.region_min_x = cx - 0.5 * side;
        cfg.region_max_x = cx + 0.5 * side;
        cfg.region_min_y = cy - 0.5 * side;
        cfg.region_max_y = cy + 0.5 * side;
        cfg
    }

    /// Applies the desk-scale search budget (swarm 20 x 15, 30 random inits).
    pub fn desk_profile(mut self) -> Self {
        self.n_particles = 20;
        self.pso_iters = 15;
        self.n_random_init = 30;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(field: &'static str, msg: impl Into<String>) -> Result<()> {
            Err(Error::Config {
                field,
                msg: msg.into(),
            })
        }

        let weights = [self.w_dl, self.w_ul, self.w_s];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0)
            || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return bad(
                "w_dl/w_ul/w_s",
                format!(
                    "weight simplex violated: ({}, {}, {}) must be nonnegative and sum to 1",
                    self.w_dl, self.w_ul, self.w_s
                ),
            );
        }
        for (field, n) in [
            ("n_tx", self.n_tx),
            ("n_rx", self.n_rx),
            ("n_paths", self.n_paths),
            ("n_random_init", self.n_random_init),
            ("n_particles", self.n_particles),
            ("pso_iters", self.pso_iters),
            ("max_inner_iters", self.max_inner_iters),
            ("max_ao_iters", self.max_ao_iters),
            ("max_ga_iters", self.max_ga_iters),
            ("max_ao_iters_pso", self.max_ao_iters_pso),
        ] {
            if n == 0 {
                return bad(field, "must be at least 1");
            }
        }
        for (field, v) in [
            ("wavelength", self.wavelength),
            ("d_si", self.d_si),
            ("d0", self.d0),
            ("tol_obj", self.tol_obj),
            ("tol_power", self.tol_power),
            ("ga_step_init", self.ga_step_init),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(field, format!("must be positive, got {v}"));
            }
        }
        if !(self.gain_factor.is_finite() && self.gain_factor >= 0.0) {
            return bad("gain_factor", "must be nonnegative");
        }
        if !(self.ga_backoff > 0.0 && self.ga_backoff < 1.0) {
            return bad("ga_backoff", "must lie in (0, 1)");
        }
        for (field, v) in [
            ("p_dl_dbm", self.p_dl_dbm),
            ("p_ul_dbm", self.p_ul_dbm),
            ("noise_dbm", self.noise_dbm),
            ("pso_c1", self.pso_c1),
            ("pso_c2", self.pso_c2),
            ("pso_w_max", self.pso_w_max),
            ("pso_w_min", self.pso_w_min),
            ("target_theta", self.target_theta),
            ("target_phi", self.target_phi),
        ] {
            if !v.is_finite() {
                return bad(field, "must be finite");
            }
        }
        if self.pso_w_min > self.pso_w_max {
            return bad("pso_w_min", "must not exceed pso_w_max");
        }
        if !(self.region_max_x > self.region_min_x) {
            return bad("region_max_x", "must exceed region_min_x");
        }
        if !(self.region_max_y > self.region_min_y) {
            return bad("region_max_y", "must exceed region_min_y");
        }
        for (field, lo, hi) in [
            ("dist_dl_min", self.dist_dl_min, self.dist_dl_max),
            ("dist_ul_min", self.dist_ul_min, self.dist_ul_max),
            ("dist_tgt_min", self.dist_tgt_min, self.dist_tgt_max),
        ] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return bad(
                    field,
                    format!("distance range [{lo}, {hi}] must be positive and ordered"),
                );
            }
        }
        let need = self.n_tx.max(self.n_rx);
        let cap = grid_capacity(self.region(), self.d0);
        if cap < need {
            return bad(
                "region_max_x/region_max_y",
                format!("region cannot host layout: {need} antennas at spacing {} but a grid fits only {cap}", self.d0),
            );
        }
        Ok(())
    }
}

/// Points on a `d0`-pitch grid anchored at the region corner.
fn grid_capacity(region: Region, d0: f64) -> usize {
    let per_axis = |extent: f64| (extent / d0 + 1e-9).floor() as usize + 1;
    per_axis(region.width()).saturating_mul(per_axis(region.height()))
}

/// Parses a flat TOML document over the reference defaults.
pub fn load_config(source: &str) -> Result<ScenarioConfig> {
    load_config_over(&ScenarioConfig::default(), source)
}

/// Parses a flat TOML document; keys absent from it keep their value in `base`.
pub fn load_config_over(base: &ScenarioConfig, source: &str) -> Result<ScenarioConfig> {
    let doc: toml::Table = toml::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
    let mut merged = toml::Table::try_from(base).map_err(|e| Error::Parse(e.to_string()))?;
    for (key, value) in doc {
        if !merged.contains_key(&key) {
            return Err(Error::Parse(format!("unknown key `{key}`")));
        }
        // integers are accepted where floats are expected
        let value = match (&merged[&key], value) {
            (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
            (_, v) => v,
        };
        merged.insert(key, value);
    }
    let cfg: ScenarioConfig = toml::Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
