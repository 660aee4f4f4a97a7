//! Trajectory CSV files and their per-operator segmentation.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::ChainedEpisode;
use crate::grounding::OperatorId;
use crate::sim::ActionVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: u32,
    /// Empty while the scheduler idles.
    pub operator: Option<OperatorId>,
    pub ee_x: f64,
    pub ee_y: f64,
    pub ee_z: f64,
    pub gap: f64,
    /// Index of the held block, empty when nothing is held.
    pub attached: Option<usize>,
    pub b1_x: f64,
    pub b1_y: f64,
    pub b1_z: f64,
    pub b2_x: f64,
    pub b2_y: f64,
    pub b2_z: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub grip: f64,
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

/// Rows of a recorded episode: row `i` holds state `i` and the action taken
/// from it.
pub fn rows_from_episode(ep: &ChainedEpisode) -> Vec<TrajectoryRow> {
    ep.ops
        .iter()
        .enumerate()
        .map(|(i, op)| {
            let s = &ep.states[i];
            let a: ActionVec = ep.states[i + 1].last_action;
            let [b1, b2] = [s.blocks[0].pos, s.blocks[1].pos];
            TrajectoryRow {
                step: s.step,
                operator: *op,
                ee_x: s.ee[0],
                ee_y: s.ee[1],
                ee_z: s.ee[2],
                gap: s.gap,
                attached: s.attached,
                b1_x: b1[0],
                b1_y: b1[1],
                b1_z: b1[2],
                b2_x: b2[0],
                b2_y: b2[1],
                b2_z: b2[2],
                dx: a.dx,
                dy: a.dy,
                dz: a.dz,
                grip: a.grip,
            }
        })
        .collect()
}

pub fn write_rows(rows: &[TrajectoryRow], w: impl Write) -> Result<(), TrajectoryError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rows(r: impl Read) -> Result<Vec<TrajectoryRow>, TrajectoryError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<TrajectoryRow>() {
        let row = rec.map_err(|e| TrajectoryError::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            },
        })?;
        if let Some(prev) = rows.last().map(|p: &TrajectoryRow| p.step) {
            if row.step <= prev {
                return Err(TrajectoryError::Parse { line: rows.len() as u64 + 2, msg: format!("step {} does not follow {prev}", row.step) });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// A run of consecutive rows under one operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub operator: Option<OperatorId>,
    pub start: u32,
    pub end: u32,
    pub steps: u32,
}

pub fn segments(rows: &[TrajectoryRow]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some(s) if s.operator == r.operator => {
                s.end = r.step + 1;
                s.steps += 1;
            }
            _ => out.push(Segment { operator: r.operator, start: r.step, end: r.step + 1, steps: 1 }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub segments: Vec<Segment>,
    /// Largest end-effector displacement between consecutive rows.
    pub max_step: f64,
}

pub fn summarize(rows: &[TrajectoryRow]) -> Summary {
    let max_step = rows
        .windows(2)
        .map(|w| ((w[1].ee_x - w[0].ee_x).powi(2) + (w[1].ee_y - w[0].ee_y).powi(2) + (w[1].ee_z - w[0].ee_z).powi(2)).sqrt())
        .fold(0.0, f64::max);
    Summary { rows: rows.len(), segments: segments(rows), max_step }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{run_chained_episode, EpisodeSetup, Scripted};
    use crate::rng::{stream, Stream};
    use crate::scheduler::Task;

    fn scripted_rows() -> Vec<TrajectoryRow> {
        let setup = EpisodeSetup::default();
        let mut c = Scripted { task: Task::Stack, sim: setup.sim.clone() };
        let ep = run_chained_episode(Task::Stack, &mut c, &setup, 11, &mut stream(0, Stream::Policy), true).unwrap();
        rows_from_episode(&ep)
    }

    #[test]
    fn round_trip_and_segmentation() {
        let rows = scripted_rows();
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        let back = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let ops: Vec<_> = summarize(&back).segments.iter().map(|s| s.operator.unwrap().name()).collect();
        assert_eq!(ops, ["reach", "close", "lift", "move", "stack"]);
    }

    #[test]
    fn empty_file_gives_empty_summary() {
        let s = summarize(&read_rows("".as_bytes()).unwrap());
        assert_eq!(s.rows, 0);
        assert!(s.segments.is_empty());
    }

    #[test]
    fn corrupted_row_reports_its_line() {
        let rows = scripted_rows();
        let mut buf = Vec::new();
        write_rows(&rows[..5], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[3] = lines[3].replacen("reach", "teleport", 1);
        match read_rows(lines.join("\n").as_bytes()) {
            Err(TrajectoryError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }
}
