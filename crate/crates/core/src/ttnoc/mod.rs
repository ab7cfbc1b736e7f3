//! Time-triggered network on chip: global timer, tick splitter, switches,
//! TISS network interfaces, and the builder that wires them together.

mod components;
mod fabric;
mod monitor;
mod topology;

pub use components::{
    make_global_timer, make_switch, make_tick_splitter, make_tiss, SwitchHandles, TimerHandles,
    TissHandles, SUBTICKS,
};
pub use fabric::{build_ttsoc, prefill, Fabric, FabricLayout, TICK_CONNECTOR};
pub use monitor::{Contention, FabricMonitor};
pub use topology::{ScheduleEntry, Topology, MAX_ROUTE_LEN};

#[cfg(test)]
mod tests;
