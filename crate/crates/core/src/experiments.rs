//! Scheme runner, parameter sweeps and table output.
//!
//! A sweep is the cross product scheme x value x seed. Every cell with the same
//! (value, seed) pair draws the same channel realization, keyed by the seed
//! index, so schemes are always compared on identical channels.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::beamforming::{initial_beamformers, inner_loop, InnerLoopState, InnerTraceRow};
use crate::channel::ChannelSet;
use crate::metrics::{evaluate, Metrics};
use crate::position::{ao_loop, AoResult, AoTraceRow};
use crate::pso::{pso_run, PsoTraceRow};
use crate::rng::{stream, Purpose};
use crate::scenario::{
    layout_fpa, layout_random, layout_uniform, sample_realization, AntennaLayout,
    ChannelRealization, ScenarioConfig,
};
use crate::{Error, Result};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Fpa,
    AoMa,
    RiMa,
    PsoMa,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Fpa, Scheme::AoMa, Scheme::RiMa, Scheme::PsoMa];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Fpa => "FPA",
            Scheme::AoMa => "AO-MA",
            Scheme::RiMa => "RI-MA",
            Scheme::PsoMa => "PSO-MA",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        match key.as_str() {
            "fpa" => Ok(Scheme::Fpa),
            "aoma" | "ao" => Ok(Scheme::AoMa),
            "rima" | "ri" => Ok(Scheme::RiMa),
            "psoma" | "pso" => Ok(Scheme::PsoMa),
            _ => Err(Error::Parse(format!("unknown scheme `{s}`"))),
        }
    }
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// Single point at the loaded configuration; the value column is 0.
    None,
    PDl,
    PUl,
    NTx,
    NRx,
    /// Sensing against communication: weights `(v, v, 1 - 2v)`.
    WeightsCs,
    /// Downlink against uplink: weights `(v, 0.8 - v, 0.2)`.
    WeightsDlUl,
    /// Side of a square region around the configured center, in metres.
    RegionSize,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::None => "none",
            SweepAxis::PDl => "p_dl",
            SweepAxis::PUl => "p_ul",
            SweepAxis::NTx => "n_tx",
            SweepAxis::NRx => "n_rx",
            SweepAxis::WeightsCs => "weights_cs",
            SweepAxis::WeightsDlUl => "weights_dl_ul",
            SweepAxis::RegionSize => "region_size",
        }
    }

    /// Configuration of one sweep point.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Parse(format!(
                    "{} expects a positive integer, got {v}",
                    self.name()
                )))
            }
        };
        let mut cfg = base.clone();
        match self {
            SweepAxis::None => {}
            SweepAxis::PDl => cfg.p_dl_dbm = value,
            SweepAxis::PUl => cfg.p_ul_dbm = value,
            SweepAxis::NTx => cfg.n_tx = count(value)?,
            SweepAxis::NRx => cfg.n_rx = count(value)?,
            SweepAxis::WeightsCs => {
                (cfg.w_dl, cfg.w_ul, cfg.w_s) = (value, value, 1.0 - 2.0 * value)
            }
            SweepAxis::WeightsDlUl => (cfg.w_dl, cfg.w_ul, cfg.w_s) = (value, 0.8 - value, 0.2),
            SweepAxis::RegionSize => cfg = base.with_region_side(value),
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepAxis::None,
            SweepAxis::PDl,
            SweepAxis::PUl,
            SweepAxis::NTx,
            SweepAxis::NRx,
            SweepAxis::WeightsCs,
            SweepAxis::WeightsDlUl,
            SweepAxis::RegionSize,
        ]
        .into_iter()
        .find(|a| a.name() == s.trim())
        .ok_or_else(|| Error::Parse(format!("unknown sweep axis `{s}`")))
    }
}

/// Iteration history of one scheme run.
#[derive(Debug, Clone, PartialEq)]
pub enum Trace {
    Inner(Vec<InnerTraceRow>),
    Ao(Vec<AoTraceRow>),
    Pso(Vec<PsoTraceRow>),
}

/// Final layout and beamformers of one scheme run.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub layout: AntennaLayout,
    pub state: InnerLoopState,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Trace,
}

impl SchemeOutcome {
    fn from_ao(res: AoResult) -> Self {
        SchemeOutcome {
            layout: res.layout,
            state: res.state,
            iterations: res.iters,
            converged: res.converged,
            trace: Trace::Ao(res.trace),
        }
    }

    /// Metrics recomputed from the stored layout and beamformers.
    pub fn metrics(&self, real: &ChannelRealization, cfg: &ScenarioConfig) -> Result<Metrics> {
        let ch = ChannelSet::new(real, &self.layout, cfg)?;
        Ok(evaluate(&ch, &self.state.bf, &cfg.weights()))
    }
}

/// The `n_random_init` candidate layouts of the random-initialization scheme.
/// With `ri_include_uniform` the uniform layout takes the first slot.
pub fn ri_pool(real: &ChannelRealization, cfg: &ScenarioConfig) -> Result<Vec<AntennaLayout>> {
    let mut pool = Vec::with_capacity(cfg.n_random_init);
    if cfg.ri_include_uniform {
        pool.push(layout_uniform(cfg)?);
    }
    for c in pool.len()..cfg.n_random_init {
        let mut rng = stream(cfg.seed, Purpose::RandomLayout, real.index, c as u64);
        pool.push(layout_random(cfg, &mut rng)?);
    }
    Ok(pool)
}

pub fn run_scheme(
    scheme: Scheme,
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Result<SchemeOutcome> {
    let init = initial_beamformers(cfg, real.index);
    match scheme {
        Scheme::Fpa => {
            let layout = layout_fpa(cfg)?;
            let state = inner_loop(&ChannelSet::new(real, &layout, cfg)?, &init, cfg)?;
            Ok(SchemeOutcome {
                layout,
                iterations: state.iters,
                converged: state.converged,
                trace: Trace::Inner(state.trace.clone()),
                state,
            })
        }
        Scheme::AoMa => Ok(SchemeOutcome::from_ao(ao_loop(
            real,
            &layout_uniform(cfg)?,
            &init,
            cfg,
            cfg.max_ao_iters,
        )?)),
        Scheme::RiMa => {
            let mut best: Option<AoResult> = None;
            for layout in ri_pool(real, cfg)? {
                let res = ao_loop(real, &layout, &init, cfg, cfg.max_ao_iters)?;
                if best
                    .as_ref()
                    .is_none_or(|b| res.objective() > b.objective())
                {
                    best = Some(res);
                }
            }
            best.map(SchemeOutcome::from_ao)
                .ok_or_else(|| Error::Config {
                    field: "n_random_init",
                    msg: "empty candidate pool".into(),
                })
        }
        Scheme::PsoMa => {
            let res = pso_run(real, cfg)?;
            Ok(SchemeOutcome {
                layout: res.layout,
                iterations: res.trace.len().saturating_sub(1),
                converged: true,
                trace: Trace::Pso(res.trace),
                state: res.state,
            })
        }
    }
}

/// One row of the long-format result table. Metric fields are empty when the
/// cell failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scheme: String,
    pub seed: u64,
    pub sweep_axis: String,
    pub sweep_value: f64,
    pub objective: Option<f64>,
    pub rate_dl_sum: Option<f64>,
    pub rate_ul_sum: Option<f64>,
    pub rate_s: Option<f64>,
    pub scnr: Option<f64>,
    pub power_dl: Option<f64>,
    pub power_ul: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub ok: bool,
    pub error: String,
    pub realization_hash: String,
    pub cfg_hash: String,
    pub code_version: String,
}

/// Wall time of one cell, kept out of the result table so that the table is
/// reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub scheme: String,
    pub seed: u64,
    pub sweep_axis: String,
    pub sweep_value: f64,
    pub seconds: f64,
}

/// Everything produced by one (scheme, value, seed) cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub record: RunRecord,
    pub outcome: Option<SchemeOutcome>,
    pub seconds: f64,
}

/// First 16 hex digits of the SHA-256 of the configuration's JSON form.
pub fn cfg_hash(cfg: &ScenarioConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn run_cell(scheme: Scheme, axis: SweepAxis, value: f64, seed: u64, cfg: &ScenarioConfig) -> Cell {
    let start = Instant::now();
    let mut record = RunRecord {
        scheme: scheme.name().into(),
        seed,
        sweep_axis: axis.name().into(),
        sweep_value: value,
        objective: None,
        rate_dl_sum: None,
        rate_ul_sum: None,
        rate_s: None,
        scnr: None,
        power_dl: None,
        power_ul: None,
        iterations: 0,
        converged: false,
        ok: false,
        error: String::new(),
        realization_hash: String::new(),
        cfg_hash: cfg_hash(cfg),
        code_version: CODE_VERSION.into(),
    };
    let result = sample_realization(cfg, seed).and_then(|real| {
        record.realization_hash = real.fingerprint();
        let out = run_scheme(scheme, &real, cfg)?;
        let m = out.metrics(&real, cfg)?;
        Ok((out, m))
    });
    let outcome = match result {
        Ok((out, m)) => {
            record.objective = Some(m.objective);
            record.rate_dl_sum = Some(m.rate_dl_sum());
            record.rate_ul_sum = Some(m.rate_ul_sum());
            record.rate_s = Some(m.r_s);
            record.scnr = Some(m.scnr);
            record.power_dl = Some(out.state.bf.power_dl());
            record.power_ul = Some(out.state.bf.power_ul());
            record.iterations = out.iterations;
            record.converged = out.converged;
            record.ok = m.objective.is_finite();
            if !record.ok {
                record.error = "non-finite objective".into();
            }
            Some(out)
        }
        Err(e) => {
            record.error = e.to_string();
            None
        }
    };
    Cell {
        record,
        outcome,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every (value, seed, scheme) cell; output order is value, then seed,
/// then scheme as listed, independent of scheduling.
pub fn sweep(
    base: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    schemes: &[Scheme],
    n_seeds: u64,
) -> Result<Vec<Cell>> {
    let points = values
        .iter()
        .map(|&v| Ok((v, axis.apply(base, v)?)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(Scheme, f64, u64, &ScenarioConfig)> = points
        .iter()
        .flat_map(|(v, cfg)| {
            (0..n_seeds).flat_map(move |s| schemes.iter().map(move |&sc| (sc, *v, s, cfg)))
        })
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(sc, v, s, cfg)| run_cell(sc, axis, v, s, cfg))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Parse(format!("unknown format `{s}`"))),
        }
    }
}

const COLUMNS: [&str; 18] = [
    "scheme",
    "seed",
    "sweep_axis",
    "sweep_value",
    "objective",
    "rate_dl_sum",
    "rate_ul_sum",
    "rate_s",
    "scnr",
    "power_dl",
    "power_ul",
    "iterations",
    "converged",
    "ok",
    "error",
    "realization_hash",
    "cfg_hash",
    "code_version",
];

fn rows_to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Serde(e.to_string()))
}

/// Serializes records; floats use the shortest representation that parses
/// back to the same value.
pub fn render(records: &[RunRecord], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => rows_to_csv(records, &COLUMNS),
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(records)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn emit(records: &[RunRecord], format: Format, path: &Path) -> Result<()> {
    fs::write(path, render(records, format)?)?;
    Ok(())
}

pub fn parse_csv(data: &[u8]) -> Result<Vec<RunRecord>> {
    csv::Reader::from_reader(data)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn parse_json(data: &[u8]) -> Result<Vec<RunRecord>> {
    Ok(serde_json::from_slice(data)?)
}

pub fn emit_timing(cells: &[Cell], path: &Path) -> Result<()> {
    let rows: Vec<TimingRecord> = cells
        .iter()
        .map(|c| TimingRecord {
            scheme: c.record.scheme.clone(),
            seed: c.record.seed,
            sweep_axis: c.record.sweep_axis.clone(),
            sweep_value: c.record.sweep_value,
            seconds: c.seconds,
        })
        .collect();
    fs::write(
        path,
        rows_to_csv(
            &rows,
            &["scheme", "seed", "sweep_axis", "sweep_value", "seconds"],
        )?,
    )?;
    Ok(())
}

/// Writes one CSV trace per successful cell into `dir`.
pub fn emit_traces(cells: &[Cell], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for c in cells {
        let Some(out) = &c.outcome else { continue };
        let r = &c.record;
        let stem = format!(
            "{}_{}_{}_seed{}",
            r.scheme, r.sweep_axis, r.sweep_value, r.seed
        );
        let (kind, bytes) = match &out.trace {
            Trace::Inner(t) => (
                "inner",
                rows_to_csv(t, &["iter", "g_hat", "g", "power_dl", "power_ul"])?,
            ),
            Trace::Ao(t) => (
                "ao",
                rows_to_csv(t, &["iter", "g", "g_hat", "tx_disp", "rx_disp"])?,
            ),
            Trace::Pso(t) => (
                "pso",
                rows_to_csv(t, &["iter", "best", "mean_feasible", "infeasible"])?,
            ),
        };
        fs::write(dir.join(format!("{stem}_{kind}.csv")), bytes)?;
    }
    Ok(())
}

/// Mean and sample standard deviation of the objective over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub scheme: String,
    pub sweep_value: f64,
    pub n: usize,
    pub failed: usize,
    pub mean: f64,
    pub std: f64,
}

pub fn summarize(records: &[RunRecord]) -> Vec<Summary> {
    let mut out: Vec<Summary> = Vec::new();
    let mut groups: Vec<(String, f64, Vec<&RunRecord>)> = Vec::new();
    for r in records {
        match groups
            .iter_mut()
            .find(|(s, v, _)| *s == r.scheme && v.to_bits() == r.sweep_value.to_bits())
        {
            Some(g) => g.2.push(r),
            None => groups.push((r.scheme.clone(), r.sweep_value, vec![r])),
        }
    }
    for (scheme, value, rows) in groups {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.ok)
            .filter_map(|r| r.objective)
            .collect();
        let n = vals.len();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        out.push(Summary {
            scheme,
            sweep_value: value,
            n,
            failed: rows.len() - n,
            mean,
            std,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ScenarioConfig {
        ScenarioConfig {
            n_tx: 4,
            n_rx: 2,
            k_dl: 2,
            k_ul: 1,
            n_clutter: 1,
            n_paths: 3,
            n_particles: 3,
            pso_iters: 2,
            n_random_init: 2,
            max_ao_iters: 3,
            max_ao_iters_pso: 2,
            max_inner_iters: 40,
            max_ga_iters: 5,
            ..Default::default()
        }
    }

    #[test]
    fn names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("nope".parse::<Scheme>().is_err());
        for a in [
            "p_dl",
            "p_ul",
            "n_tx",
            "n_rx",
            "weights_cs",
            "weights_dl_ul",
            "region_size",
        ] {
            assert_eq!(a.parse::<SweepAxis>().unwrap().name(), a);
        }
    }

    #[test]
    fn axis_application() {
        let base = ScenarioConfig::default();
        let c = SweepAxis::WeightsCs.apply(&base, 0.25).unwrap();
        assert_eq!((c.w_dl, c.w_ul, c.w_s), (0.25, 0.25, 0.5));
        let c = SweepAxis::WeightsDlUl.apply(&base, 0.5).unwrap();
        assert!((c.w_ul - 0.3).abs() < 1e-15 && c.w_s == 0.2);
        assert_eq!(SweepAxis::NTx.apply(&base, 6.0).unwrap().n_tx, 6);
        assert!(SweepAxis::NTx.apply(&base, 6.5).is_err());
        let c = SweepAxis::RegionSize.apply(&base, 0.04).unwrap();
        assert!((c.region().width() - 0.04).abs() < 1e-15);
        assert_eq!(c.region().center(), base.region().center());
    }

    #[test]
    fn fpa_is_deterministic() {
        let cfg = quick();
        let real = sample_realization(&cfg, 0).unwrap();
        let a = run_scheme(Scheme::Fpa, &real, &cfg).unwrap();
        let b = run_scheme(Scheme::Fpa, &real, &cfg).unwrap();
        assert_eq!(a.state.objective().to_bits(), b.state.objective().to_bits());
    }

    #[test]
    fn ri_with_uniform_only_equals_ao() {
        let cfg = ScenarioConfig {
            n_random_init: 1,
            ri_include_uniform: true,
            ..quick()
        };
        let real = sample_realization(&cfg, 1).unwrap();
        let ri = run_scheme(Scheme::RiMa, &real, &cfg).unwrap();
        let ao = run_scheme(Scheme::AoMa, &real, &cfg).unwrap();
        assert_eq!(ri.layout, ao.layout);
        assert_eq!(
            ri.state.objective().to_bits(),
            ao.state.objective().to_bits()
        );
    }

    #[test]
    fn ri_pool_with_uniform_dominates_ao() {
        let cfg = ScenarioConfig {
            ri_include_uniform: true,
            ..quick()
        };
        for idx in 0..3 {
            let real = sample_realization(&cfg, idx).unwrap();
            let ri = run_scheme(Scheme::RiMa, &real, &cfg).unwrap();
            let ao = run_scheme(Scheme::AoMa, &real, &cfg).unwrap();
            assert!(ri.state.objective() >= ao.state.objective());
        }
    }

    #[test]
    fn sweep_shares_realizations_and_is_self_consistent() {
        let cfg = quick();
        let cells = sweep(&cfg, SweepAxis::PDl, &[20.0, 30.0], &Scheme::ALL, 2).unwrap();
        assert_eq!(cells.len(), 2 * 2 * 4);
        for group in cells.chunks(4) {
            let h = &group[0].record.realization_hash;
            assert!(!h.is_empty());
            for (c, s) in group.iter().zip(Scheme::ALL) {
                assert_eq!(c.record.scheme, s.name());
                assert_eq!(&c.record.realization_hash, h);
                assert!(c.record.ok, "{}", c.record.error);
                let g = c.outcome.as_ref().unwrap().state.objective();
                let rec = c.record.objective.unwrap();
                assert!((rec - g).abs() <= 1e-9 * (1.0 + g.abs()));
            }
        }
    }

    #[test]
    fn failed_cells_are_recorded() {
        let cfg = quick();
        // an invalid configuration fails while sampling the realization
        let bad = ScenarioConfig {
            dist_dl_min: -1.0,
            ..cfg.clone()
        };
        let cell = run_cell(Scheme::Fpa, SweepAxis::None, 0.0, 0, &bad);
        assert!(!cell.record.ok);
        assert!(!cell.record.error.is_empty());
        assert!(cell.record.objective.is_none());
        let csv = render(std::slice::from_ref(&cell.record), Format::Csv).unwrap();
        assert_eq!(parse_csv(&csv).unwrap(), vec![cell.record]);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let cells = sweep(
            &quick(),
            SweepAxis::None,
            &[0.0],
            &[Scheme::Fpa, Scheme::AoMa],
            2,
        )
        .unwrap();
        let records: Vec<RunRecord> = cells.into_iter().map(|c| c.record).collect();
        let csv = render(&records, Format::Csv).unwrap();
        let json = render(&records, Format::Json).unwrap();
        assert_eq!(parse_csv(&csv).unwrap(), records);
        assert_eq!(parse_json(&json).unwrap(), records);
    }

    #[test]
    fn empty_table_has_header_only() {
        let csv = render(&[], Format::Csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            format!("{}\n", COLUMNS.join(","))
        );
    }

    #[test]
    fn summary_statistics() {
        let mk = |scheme: &str, obj: Option<f64>| RunRecord {
            scheme: scheme.into(),
            seed: 0,
            sweep_axis: "none".into(),
            sweep_value: 0.0,
            objective: obj,
            rate_dl_sum: None,
            rate_ul_sum: None,
            rate_s: None,
            scnr: None,
            power_dl: None,
            power_ul: None,
            iterations: 0,
            converged: true,
            ok: obj.is_some(),
            error: String::new(),
            realization_hash: String::new(),
            cfg_hash: String::new(),
            code_version: String::new(),
        };
        let s = summarize(&[
            mk("A", Some(1.0)),
            mk("A", Some(3.0)),
            mk("B", Some(2.0)),
            mk("A", None),
        ]);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].n, s[0].failed, s[0].mean), (2, 1, 2.0));
        assert!((s[0].std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!((s[1].n, s[1].mean, s[1].std), (1, 2.0, 0.0));
    }

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn ao_beats_fixed_array_on_average() {
        let cfg = ScenarioConfig::default();
        let (mut fpa, mut ao) = (Vec::new(), Vec::new());
        for idx in 0..20 {
            let real = sample_realization(&cfg, idx).unwrap();
            fpa.push(
                run_scheme(Scheme::Fpa, &real, &cfg)
                    .unwrap()
                    .state
                    .objective(),
            );
            let res = run_scheme(Scheme::AoMa, &real, &cfg).unwrap();
            ao.push(res.state.objective());

            // never below the starting layout after its own beamforming pass
            let init = initial_beamformers(&cfg, idx);
            let ch = ChannelSet::new(&real, &layout_uniform(&cfg).unwrap(), &cfg).unwrap();
            assert!(res.state.objective() >= inner_loop(&ch, &init, &cfg).unwrap().objective());
        }
        assert!(
            mean(&ao) > mean(&fpa),
            "AO-MA {} vs FPA {}",
            mean(&ao),
            mean(&fpa)
        );
    }

    #[test]
    fn objective_grows_with_downlink_power() {
        let cfg = ScenarioConfig::default();
        let powers = [20.0, 30.0, 40.0];
        let cells = sweep(
            &cfg,
            SweepAxis::PDl,
            &powers,
            &[Scheme::Fpa, Scheme::AoMa],
            10,
        )
        .unwrap();
        for scheme in ["FPA", "AO-MA"] {
            let means: Vec<f64> = powers
                .iter()
                .map(|p| {
                    let v: Vec<f64> = cells
                        .iter()
                        .filter(|c| c.record.scheme == scheme && c.record.sweep_value == *p)
                        .map(|c| c.record.objective.unwrap())
                        .collect();
                    mean(&v)
                })
                .collect();
            assert!(
                means.windows(2).all(|p| p[1] >= p[0]),
                "{scheme}: {means:?}"
            );
        }
    }

    #[test]
    fn uplink_is_switched_off_without_uplink_weight() {
        let cfg = ScenarioConfig::default();
        for (axis, value) in [(SweepAxis::WeightsCs, 0.0), (SweepAxis::WeightsDlUl, 0.8)] {
            for c in sweep(&cfg, axis, &[value], &[Scheme::Fpa, Scheme::AoMa], 3).unwrap() {
                let p = c.record.power_ul.unwrap();
                assert!(p < 1e-6 * cfg.p_ul(), "{axis:?} {}: {p}", c.record.scheme);
            }
        }
    }

    #[test]
    fn records_match_recomputed_metrics() {
        let cfg = ScenarioConfig {
            n_particles: 4,
            pso_iters: 2,
            n_random_init: 3,
            ..Default::default()
        };
        for c in sweep(&cfg, SweepAxis::None, &[0.0], &Scheme::ALL, 2).unwrap() {
            let real = sample_realization(&cfg, c.record.seed).unwrap();
            assert_eq!(real.fingerprint(), c.record.realization_hash);
            let out = c.outcome.unwrap();
            let g = c.record.objective.unwrap();
            assert!(
                (out.metrics(&real, &cfg).unwrap().objective - g).abs() <= 1e-9 * (1.0 + g.abs())
            );
            assert!((out.state.objective() - g).abs() <= 1e-9 * (1.0 + g.abs()));
        }
    }
}
