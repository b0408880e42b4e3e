//! Exact event-driven epidemic simulation.

pub mod engine;
pub mod event;
pub mod exposure;
pub mod log;
pub mod params;
pub mod seeds;
pub mod state;

pub use engine::{run_simulation, run_with_initial, RealizedPresence, Rollout, SimConfig};
pub use event::{Event, EventKind};
pub use exposure::{
    exposure_contribution, household_contribution, sample_exposures_from, sample_household_exposure, ExposureProposal,
};
pub use log::{DailySummary, EventLog};
pub use params::{sample_transition_delay, DelayTable, EpidemicParams, LogNormalDays, Process};
pub use seeds::{init_seeds, place_seeds, InitialCase, SeedCounts};
pub use state::{Compartment, Course, HealthFlags, HealthState};
