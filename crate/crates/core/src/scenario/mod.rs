//! Scenario configuration, seeded channel realizations and initial antenna
//! layouts shared by every optimization scheme.

mod config;
mod layout;
mod realization;

pub use config::{
    dbm_to_watts, load_config, load_config_over, FpaGeometry, Region, ScenarioConfig, Weights,
};
pub use layout::{check_layout, layout_fpa, layout_random, layout_uniform, AntennaLayout, Point};
pub use realization::{sample_realization, ChannelRealization, Path, Scatterer, UserLink};
