//! Component-based simulation of time-triggered systems on a chip.
//!
//! The crate has three layers:
//! - [`atomic`], [`connector`], [`priority`], [`system`]: the behaviour /
//!   interaction / priority execution engine;
//! - [`ttnoc`] and [`host`]: component libraries for the time-triggered
//!   network on chip and for host software;
//! - [`scenario`] and [`analysis`]: declarative scenario files, static
//!   schedule validation and trace analysis.

pub mod analysis;
pub mod atomic;
pub mod connector;
pub mod error;
pub mod host;
pub mod priority;
pub mod rng;
pub mod scenario;
pub mod system;
pub mod trace;
pub mod ttnoc;
pub mod value;

pub use atomic::{
    AtomicBuilder, AtomicComponentDef, ComponentState, Guard, TransitionDef, Update, Valuation,
};
pub use connector::{
    ConnectorDef, ConnectorGuard, Interaction, PortKind, PortRef, PortSet, Transfer,
};
pub use error::{BipError, EvalError};
pub use priority::{apply_priority, PriorityModel};
pub use rng::SimRng;
pub use system::{
    enabled_interactions, maximal_interactions, run, select_interaction, step, Simulation,
    SystemBuilder, SystemDef, SystemState,
};
pub use trace::{Trace, TraceEvent};
pub use value::{Message, Stamped, Value};
