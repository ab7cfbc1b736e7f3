//! Host-side components: communication service, voting service, step-machine
//! application, and sensor/actuator simulators.
//!
//! Every host component exposes a [`Endpoints`] description so the scenario
//! builder can wire it to the communication service of its host.

mod app;
mod comm;
mod io;
mod voter;

pub use app::{
    make_application, CmpOp, Compute, Condition, Mailbox, MailboxVars, Operand, Step,
    StepMachineDef, StepTransition,
};
pub use comm::{make_comm_service, CommPorts};
pub use io::{make_actuator, make_sensor, ActuatorRecorder, ActuatorSpec, StatusRecord, Stimulus};
pub use voter::make_voting_service;

/// How a host component talks to its communication service.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Endpoints {
    /// Port that offers outgoing messages, if any.
    pub send: Option<String>,
    /// `(port id, component port)` receiving incoming messages.
    pub receive: Vec<(u32, String)>,
    /// Port synchronising with the global tick, if any.
    pub tick: Option<String>,
}

#[cfg(test)]
mod tests;
