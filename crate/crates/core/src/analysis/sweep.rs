use std::ops::Range;

use rayon::prelude::*;

use crate::error::{BipError, Result};
use crate::scenario::{simulate, BuiltScenario};

use super::{analyze_events, AnalysisReport, Limits};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub seed: u64,
    pub ticks: u64,
    pub contentions: usize,
    pub report: AnalysisReport,
}

/// Runs and analyzes every seed in `seeds`, in parallel; rows are sorted by
/// seed.
pub fn sweep(
    built: &BuiltScenario,
    seeds: Range<u64>,
    steps: u64,
    limits: Limits,
) -> Result<Vec<SweepRow>> {
    let mut rows: Vec<SweepRow> = seeds
        .into_par_iter()
        .map(|seed| {
            let out = simulate(built, seed, steps, |_| {})?;
            let report = analyze_events(
                &out.trace.events,
                limits,
                Some(seed),
                Some(built.hash.clone()),
            )
            .map_err(|e| BipError::Semantics(e.to_string()))?;
            Ok(SweepRow {
                seed,
                ticks: out.ticks,
                contentions: out.contentions.len(),
                report,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| r.seed);
    Ok(rows)
}
