//! Scenario files: model, parser, printer, static route and schedule
//! validation, and construction of the executable system.
//!
//! The file format is described in `docs/scenario-format.md`.

mod build;
mod model;
mod parse;
mod print;
mod run;
mod validate;

pub use build::{build_scenario, matches_pattern, scenario_hash, AppInfo, BuiltScenario};
pub use model::{
    EntryDecl, HostDecl, HostKind, PriorityDecl, RunParams, Scenario, DEFAULT_HIGH_WATER,
    DEFAULT_HYPERPERIOD_BOUND,
};
pub use parse::{is_ident, parse_scenario, Diagnostic};
pub use print::print_scenario;
pub use run::{simulate, trace_header, RunOutput};
pub use validate::{
    hyperperiod, schedule_conflicts, suggest_schedule, validate_routes, validate_schedule,
    Conflict, RouteError, ScheduleError,
};
