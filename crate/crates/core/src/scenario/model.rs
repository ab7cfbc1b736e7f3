use crate::host::{StepMachineDef, Stimulus};
use crate::ttnoc::{ScheduleEntry, Topology};
use crate::value::{SwitchIdx, TissIdx};

pub const DEFAULT_HYPERPERIOD_BOUND: u64 = 4096;
pub const DEFAULT_HIGH_WATER: usize = 64;

/// Schedule entry as declared; `phase` may be left for
/// [`super::suggest_schedule`] to fill in.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EntryDecl {
    pub source: TissIdx,
    pub port_id: u32,
    pub period: u32,
    pub phase: Option<u32>,
    pub route: Vec<SwitchIdx>,
    pub target: TissIdx,
}

impl EntryDecl {
    pub fn to_entry(&self) -> Option<ScheduleEntry> {
        Some(ScheduleEntry {
            source: self.source,
            port_id: self.port_id,
            period: self.period,
            phase: self.phase?,
            route: self.route.clone(),
            target: self.target,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HostKind {
    /// A communication service with no clients.
    Comm,
    App {
        machine: String,
    },
    Sensor {
        port: u32,
        stimulus: Stimulus,
        period: u32,
    },
    Voter {
        inputs: Vec<u32>,
        output: u32,
    },
    Actuator {
        port: u32,
        sink: Option<String>,
    },
}

impl HostKind {
    pub fn kind_name(&self) -> &'static str {
        match self {
            HostKind::Comm => "comm",
            HostKind::App { .. } => "app",
            HostKind::Sensor { .. } => "sensor",
            HostKind::Voter { .. } => "voter",
            HostKind::Actuator { .. } => "actuator",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HostDecl {
    pub name: String,
    pub tiss: TissIdx,
    pub kind: HostKind,
}

/// `lower ≺ higher` for every pair of connectors matched by the two pattern
/// lists. A pattern is a connector name with at most one `*` wildcard.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PriorityDecl {
    pub lower: Vec<String>,
    pub higher: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RunParams {
    pub seed: u64,
    pub max_steps: u64,
    pub max_age: Option<u64>,
    pub max_latency: Option<u64>,
    pub hyperperiod_bound: u64,
    pub high_water: usize,
}

impl Default for RunParams {
    fn default() -> Self {
        Self {
            seed: 0,
            max_steps: 10_000,
            max_age: None,
            max_latency: None,
            hyperperiod_bound: DEFAULT_HYPERPERIOD_BOUND,
            high_water: DEFAULT_HIGH_WATER,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub topology: Topology,
    pub schedule: Vec<EntryDecl>,
    pub hosts: Vec<HostDecl>,
    pub machines: Vec<(String, StepMachineDef)>,
    pub priorities: Vec<PriorityDecl>,
    pub run: RunParams,
}

impl Scenario {
    pub fn machine(&self, name: &str) -> Option<&StepMachineDef> {
        self.machines
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
    }

    /// Entry identity used in diagnostics: `<source tiss>:<port id>`.
    pub fn entry_label(&self, e: &EntryDecl) -> String {
        let name = self
            .topology
            .tiss
            .get(e.source as usize)
            .map_or("?", String::as_str);
        format!("{name}:{}", e.port_id)
    }

    /// Entries with every phase present, or the labels of those without.
    pub fn entries(&self) -> Result<Vec<ScheduleEntry>, Vec<String>> {
        let missing: Vec<String> = self
            .schedule
            .iter()
            .filter(|e| e.phase.is_none())
            .map(|e| self.entry_label(e))
            .collect();
        if missing.is_empty() {
            Ok(self
                .schedule
                .iter()
                .filter_map(EntryDecl::to_entry)
                .collect())
        } else {
            Err(missing)
        }
    }
}
