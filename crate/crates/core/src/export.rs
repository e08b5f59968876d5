//! Result exports: the CSV files plotting tools consume and their JSON
//! mirror.
//!
//! Formatting is deterministic - floats print as Rust's shortest
//! round-trip decimal - so exporting the same result twice produces
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::engine::SimulationResult;
use crate::metrics::{lifetime_summary, utility_curve};
use crate::strategies::StrategyKind;
use crate::topology::Topology;

/// Which files [`export`] writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    /// `nodes.csv`, `curve.csv`, `summary.csv`.
    Csv,
    /// `result.json`, mirroring all three.
    Json,
}

impl ExportFormat {
    pub fn parse(name: &str) -> Option<ExportFormat> {
        match name {
            "csv" => Some(ExportFormat::Csv),
            "json" => Some(ExportFormat::Json),
            _ => None,
        }
    }
}

/// One row of `summary.csv` and the `summary` object in the JSON mirror.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub first_death: Option<u64>,
    pub system_lifetime: Option<u64>,
    pub utility_fraction: Option<f64>,
    pub sync_messages: u64,
    pub delivered: u64,
    pub dropped: u64,
}

impl RunSummary {
    pub fn of(result: &SimulationResult) -> RunSummary {
        let summary = lifetime_summary(result);
        RunSummary {
            strategy: result.strategy,
            seed: result.seed,
            first_death: summary.first_death,
            system_lifetime: summary.system_lifetime,
            utility_fraction: summary.utility_fraction,
            sync_messages: result.sync_messages,
            delivered: result.delivered,
            dropped: result.dropped,
        }
    }

    pub const CSV_HEADER: &'static str =
        "strategy,seed,first_death,system_lifetime,utility_fraction,sync_messages,delivered,dropped";

    /// One CSV row; `None` fields become empty cells.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.strategy.name(),
            self.seed,
            opt_cell(self.first_death),
            opt_cell(self.system_lifetime),
            opt_cell(self.utility_fraction),
            self.sync_messages,
            self.delivered,
            self.dropped,
        )
    }
}

fn opt_cell<T: ToString>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// `nodes.csv`: one row per node with its placement and fate. Survivors
/// get the literal `survived` instead of a death iteration.
pub fn nodes_csv(topo: &Topology, result: &SimulationResult) -> String {
    let mut out = String::from("node_id,x,y,dist_to_base,death_iteration\n");
    for id in 0..topo.node_count() {
        let p = topo.position(id);
        let death = match result.death_iteration[id] {
            Some(it) => it.to_string(),
            None => "survived".to_string(),
        };
        writeln!(
            out,
            "{id},{},{},{},{death}",
            p.x,
            p.y,
            topo.dist_to_base(id)
        )
        .expect("string write");
    }
    out
}

/// `curve.csv`: percent of nodes alive at each death step.
pub fn curve_csv(result: &SimulationResult) -> String {
    let mut out = String::from("iteration,percent_alive\n");
    for (it, percent) in utility_curve(result) {
        writeln!(out, "{it},{percent}").expect("string write");
    }
    out
}

/// `summary.csv`: header plus the run's single row.
pub fn summary_csv(result: &SimulationResult) -> String {
    format!("{}\n{}\n", RunSummary::CSV_HEADER, RunSummary::of(result).csv_row())
}

#[derive(Serialize)]
struct NodeRecord {
    node_id: usize,
    x: f64,
    y: f64,
    dist_to_base: f64,
    death_iteration: Option<u64>,
}

#[derive(Serialize)]
struct CurvePoint {
    iteration: u64,
    percent_alive: f64,
}

#[derive(Serialize)]
struct JsonMirror {
    nodes: Vec<NodeRecord>,
    curve: Vec<CurvePoint>,
    summary: RunSummary,
}

/// `result.json`: the same information as the three CSV files.
pub fn result_json(topo: &Topology, result: &SimulationResult) -> String {
    let mirror = JsonMirror {
        nodes: (0..topo.node_count())
            .map(|id| {
                let p = topo.position(id);
                NodeRecord {
                    node_id: id,
                    x: p.x,
                    y: p.y,
                    dist_to_base: topo.dist_to_base(id),
                    death_iteration: result.death_iteration[id],
                }
            })
            .collect(),
        curve: utility_curve(result)
            .into_iter()
            .map(|(iteration, percent_alive)| CurvePoint {
                iteration,
                percent_alive,
            })
            .collect(),
        summary: RunSummary::of(result),
    };
    let mut text = serde_json::to_string_pretty(&mirror).expect("serializable mirror");
    text.push('\n');
    text
}

fn write_file(path: &Path, contents: &str) -> io::Result<()> {
    fs::write(path, contents)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Write a run's export files into `dir`, creating it if needed.
///
/// Refuses results with no nodes: there is nothing meaningful to write.
pub fn export(
    topo: &Topology,
    result: &SimulationResult,
    format: ExportFormat,
    dir: &Path,
) -> io::Result<()> {
    if result.node_count() == 0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "refusing to export an empty result",
        ));
    }
    std::fs::create_dir_all(dir)?;
    match format {
        ExportFormat::Csv => {
            write_file(&dir.join("nodes.csv"), &nodes_csv(topo, result))?;
            write_file(&dir.join("curve.csv"), &curve_csv(result))?;
            write_file(&dir.join("summary.csv"), &summary_csv(result))?;
        }
        ExportFormat::Json => {
            write_file(&dir.join("result.json"), &result_json(topo, result))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_simulation, SimConfig};
    use crate::topology::Position;
    use crate::trace::NullSink;

    fn sample_run() -> (Topology, SimulationResult) {
        let positions = vec![Position { x: 100.0, y: 0.0 }, Position { x: 10.0, y: 0.0 }];
        let topo =
            Topology::from_parts(positions, Position { x: 0.0, y: 0.0 }, 100.0, 1.0, 0).unwrap();
        let result = run_simulation(&topo, &SimConfig::new(StrategyKind::Direct, 1), &mut NullSink);
        (topo, result)
    }

    #[test]
    fn nodes_csv_has_one_row_per_node() {
        let (topo, result) = sample_run();
        let csv = nodes_csv(&topo, &result);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3, "header plus two data rows");
        assert_eq!(lines[0], "node_id,x,y,dist_to_base,death_iteration");
        assert_eq!(lines[1], "0,100,0,100,239");
        assert_eq!(lines[2], "1,10,0,10,4167");
    }

    #[test]
    fn survivors_are_marked_in_nodes_csv() {
        let (topo, mut result) = sample_run();
        result.death_iteration[1] = None;
        let csv = nodes_csv(&topo, &result);
        assert!(csv.lines().nth(2).unwrap().ends_with(",survived"));
    }

    #[test]
    fn summary_csv_row_matches_run() {
        let (_, result) = sample_run();
        let csv = summary_csv(&result);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], RunSummary::CSV_HEADER);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells[0], "direct");
        assert_eq!(cells[1], "1");
        assert_eq!(cells[2], "239");
        assert_eq!(cells[3], "4167");
        assert_eq!(cells[5], "2");
        assert_eq!(cells[6], "4404");
    }

    #[test]
    fn censored_fields_render_as_empty_cells() {
        let (_, mut result) = sample_run();
        result.censored = true;
        result.death_iteration = vec![None, None];
        let csv = summary_csv(&result);
        let row = csv.lines().nth(1).unwrap();
        assert!(row.contains(",,,"), "empty first_death/lifetime/utility cells: {row}");
    }

    #[test]
    fn json_mirror_round_trips_and_matches_fields() {
        let (topo, result) = sample_run();
        let json = result_json(&topo, &result);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["nodes"].as_array().unwrap().len(), 2);
        assert_eq!(value["nodes"][0]["death_iteration"], 239);
        assert_eq!(value["summary"]["strategy"], "direct");
        assert_eq!(value["summary"]["system_lifetime"], 4167);
        assert_eq!(value["curve"][0]["percent_alive"], 100.0);
    }

    #[test]
    fn exports_are_byte_identical_across_calls() {
        let (topo, result) = sample_run();
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        for format in [ExportFormat::Csv, ExportFormat::Json] {
            export(&topo, &result, format, dir1.path()).unwrap();
            export(&topo, &result, format, dir2.path()).unwrap();
        }
        for name in ["nodes.csv", "curve.csv", "summary.csv", "result.json"] {
            let a = std::fs::read(dir1.path().join(name)).unwrap();
            let b = std::fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between exports");
        }
    }

    #[test]
    fn empty_results_are_rejected_before_writing() {
        let (topo, mut result) = sample_run();
        result.death_iteration.clear();
        let dir = tempfile::tempdir().unwrap();
        let err = export(&topo, &result, ExportFormat::Csv, dir.path()).unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::InvalidInput);
        assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
    }
}
