//! Python bindings: scenarios, runs, traces and their analysis.

use bipsim::analysis::{self, AnalysisReport, Limits};
use bipsim::connector::ConnectorPort;
use bipsim::scenario::{self as scn, BuiltScenario};
use bipsim::trace::{parse_trace, TraceEvent};
use bipsim::{ConnectorDef, PortKind, PortRef};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_error(e: impl ToString) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A parsed scenario file.
#[pyclass(name = "Scenario", module = "pybipsim")]
#[derive(Clone)]
struct PyScenario {
    inner: scn::Scenario,
}

impl PyScenario {
    fn build(&self) -> PyResult<BuiltScenario> {
        scn::build_scenario(&self.inner).map_err(value_error)
    }
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        scn::parse_scenario(text)
            .map(|inner| Self { inner })
            .map_err(|d| {
                let lines: Vec<String> = d.iter().map(ToString::to_string).collect();
                value_error(lines.join("\n"))
            })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| value_error(format!("{path}: {e}")))?;
        Self::parse(&text)
    }

    /// Canonical text form.
    fn text(&self) -> String {
        scn::print_scenario(&self.inner)
    }

    #[getter]
    fn hash(&self) -> String {
        scn::scenario_hash(&self.inner)
    }

    #[getter]
    fn switches(&self) -> Vec<String> {
        self.inner.topology.switches.clone()
    }

    #[getter]
    fn tiss(&self) -> Vec<String> {
        self.inner.topology.tiss.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.run.seed
    }

    #[getter]
    fn max_steps(&self) -> u64 {
        self.inner.run.max_steps
    }

    /// Schedule entries as dictionaries; `phase` is `None` when unassigned.
    fn entries<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let t = &self.inner.topology;
        self.inner
            .schedule
            .iter()
            .map(|e| {
                let d = PyDict::new(py);
                d.set_item("source", &t.tiss[e.source as usize])?;
                d.set_item("port", e.port_id)?;
                d.set_item("period", e.period)?;
                d.set_item("phase", e.phase)?;
                let route: Vec<&str> = e
                    .route
                    .iter()
                    .map(|&s| t.switches[s as usize].as_str())
                    .collect();
                d.set_item("route", route)?;
                d.set_item("target", &t.tiss[e.target as usize])?;
                Ok(d)
            })
            .collect()
    }

    /// Route and schedule problems, one string each; empty when clean.
    fn validate(&self) -> PyResult<Vec<String>> {
        if let Err(errors) = scn::validate_routes(&self.inner) {
            return Ok(errors.iter().map(ToString::to_string).collect());
        }
        scn::validate_schedule(&self.inner)
            .map(|c| c.iter().map(ToString::to_string).collect())
            .map_err(value_error)
    }

    /// A copy with every missing phase filled in.
    fn suggest(&self) -> PyResult<Self> {
        scn::suggest_schedule(&self.inner)
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    #[pyo3(signature = (seed=None, steps=None))]
    fn run(&self, py: Python<'_>, seed: Option<u64>, steps: Option<u64>) -> PyResult<PyTrace> {
        let built = self.build()?;
        let seed = seed.unwrap_or(built.run.seed);
        let steps = steps.unwrap_or(built.run.max_steps);
        let out = py
            .allow_threads(|| scn::simulate(&built, seed, steps, |_| {}))
            .map_err(runtime_error)?;
        Ok(PyTrace {
            header: scn::trace_header(&built, seed, steps),
            events: out.trace.events,
            ticks: out.ticks,
            contentions: out
                .contentions
                .into_iter()
                .map(|c| (c.tick, c.holder, c.blocked_by))
                .collect(),
        })
    }

    /// Runs and analyzes seeds `start..end`; one dictionary per seed.
    #[pyo3(signature = (start, end, steps=None, max_age=None, max_latency=None))]
    fn sweep<'py>(
        &self,
        py: Python<'py>,
        start: u64,
        end: u64,
        steps: Option<u64>,
        max_age: Option<u64>,
        max_latency: Option<u64>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let built = self.build()?;
        let limits = Limits {
            max_age: max_age.or(built.run.max_age),
            max_latency: max_latency.or(built.run.max_latency),
        };
        let steps = steps.unwrap_or(built.run.max_steps);
        let rows = py
            .allow_threads(|| analysis::sweep(&built, start..end, steps, limits))
            .map_err(runtime_error)?;
        rows.iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("seed", r.seed)?;
                d.set_item("ticks", r.ticks)?;
                d.set_item("max_age", r.report.max_age())?;
                d.set_item("max_latency", r.report.max_latency())?;
                d.set_item("violations", r.report.violations.len())?;
                d.set_item("contentions", r.contentions)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(switches={}, tiss={}, entries={}, hosts={})",
            self.inner.topology.switches.len(),
            self.inner.topology.tiss.len(),
            self.inner.schedule.len(),
            self.inner.hosts.len()
        )
    }
}

fn event_dict<'py>(py: Python<'py>, e: &TraceEvent) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("step", e.step)?;
    d.set_item("tick", e.tick)?;
    d.set_item("connector", &e.connector)?;
    d.set_item("ports", &e.ports)?;
    let data = PyDict::new(py);
    for (k, v) in &e.data {
        data.set_item(k, v)?;
    }
    d.set_item("data", data)?;
    Ok(d)
}

/// The events of one run, or of a parsed trace file.
#[pyclass(name = "Trace", module = "pybipsim")]
struct PyTrace {
    header: Vec<(String, String)>,
    events: Vec<TraceEvent>,
    ticks: u64,
    contentions: Vec<(u64, String, String)>,
}

#[pymethods]
impl PyTrace {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let t = parse_trace(text).map_err(value_error)?;
        let ticks = t.events.last().map_or(0, |e| e.tick);
        Ok(Self {
            header: t.header,
            events: t.events,
            ticks,
            contentions: Vec::new(),
        })
    }

    fn __len__(&self) -> usize {
        self.events.len()
    }

    fn __getitem__<'py>(&self, py: Python<'py>, i: isize) -> PyResult<Bound<'py, PyDict>> {
        let n = self.events.len() as isize;
        let j = if i < 0 { i + n } else { i };
        if !(0..n).contains(&j) {
            return Err(pyo3::exceptions::PyIndexError::new_err(
                "event index out of range",
            ));
        }
        event_dict(py, &self.events[j as usize])
    }

    #[getter]
    fn ticks(&self) -> u64 {
        self.ticks
    }

    #[getter]
    fn header(&self) -> Vec<(String, String)> {
        self.header.clone()
    }

    /// `(tick, holder, blocked_by)` for every fabric contention seen.
    #[getter]
    fn contentions(&self) -> Vec<(u64, String, String)> {
        self.contentions.clone()
    }

    /// Text form, as written by `bipsim run --trace-out`.
    fn render(&self) -> String {
        bipsim::Trace {
            events: self.events.clone(),
            termination: bipsim::trace::Termination::StepLimit,
        }
        .render(&self.header)
    }

    /// Messages received by one switch within one tick, as `(tick, switch, count)`.
    fn exclusivity_violations(&self) -> Vec<(u64, String, usize)> {
        analysis::switch_exclusivity(&self.events)
            .into_iter()
            .map(|v| (v.tick, v.switch, v.messages))
            .collect()
    }

    #[pyo3(signature = (max_age=None, max_latency=None))]
    fn analyze(&self, max_age: Option<u64>, max_latency: Option<u64>) -> PyResult<PyReport> {
        let h = |k: &str| {
            self.header
                .iter()
                .find(|(key, _)| key == k)
                .and_then(|(_, v)| v.parse::<u64>().ok())
        };
        let limits = Limits {
            max_age: max_age.or_else(|| h("max_age")),
            max_latency: max_latency.or_else(|| h("max_latency")),
        };
        let hash = self
            .header
            .iter()
            .find(|(k, _)| k == "scenario_hash")
            .map(|(_, v)| v.clone());
        analysis::analyze_events(&self.events, limits, h("seed"), hash)
            .map(|inner| PyReport { inner })
            .map_err(value_error)
    }
}

/// Ages, latencies and deadline violations of a trace.
#[pyclass(name = "Report", module = "pybipsim")]
struct PyReport {
    inner: AnalysisReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn max_age(&self) -> Option<u64> {
        self.inner.max_age()
    }

    #[getter]
    fn max_latency(&self) -> Option<u64> {
        self.inner.max_latency()
    }

    #[getter]
    fn is_clean(&self) -> bool {
        self.inner.is_clean()
    }

    fn violations<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .violations
            .iter()
            .map(|v| {
                let d = PyDict::new(py);
                d.set_item("metric", v.metric.name())?;
                d.set_item("tick", v.tick)?;
                d.set_item("step", v.step)?;
                d.set_item("channel", &v.channel)?;
                d.set_item("value", v.value)?;
                d.set_item("limit", v.limit)?;
                Ok(d)
            })
            .collect()
    }

    fn table(&self) -> String {
        self.inner.render_table()
    }

    fn kv(&self) -> String {
        self.inner.render_kv()
    }
}

/// Feasible interactions of a connector whose ports have the given kinds
/// (`"trigger"` or `"synchron"`), as lists of port positions.
#[pyfunction]
fn feasible_interactions(kinds: Vec<String>) -> PyResult<Vec<Vec<usize>>> {
    if kinds.len() > 20 {
        return Err(value_error("at most 20 ports"));
    }
    let ports = kinds
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let kind = match k.as_str() {
                "trigger" => PortKind::Trigger,
                "synchron" => PortKind::Synchron,
                other => return Err(value_error(format!("unknown port kind `{other}`"))),
            };
            Ok(ConnectorPort {
                port: PortRef {
                    component: i,
                    port: bipsim::atomic::PortId(0),
                },
                kind,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok(ConnectorDef::new("c", ports)
        .feasible_interactions()
        .into_iter()
        .map(|s| s.iter().collect())
        .collect())
}

#[pymodule]
fn pybipsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(feasible_interactions, m)?)?;
    Ok(())
}
