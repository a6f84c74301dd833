//! Dataset persistence: one tab-separated record per attempted sequence.
//!
//! Columns: text, label (0/1), instance id, temperature, sample index,
//! terminated (0/1). Non-terminated rows keep a placeholder 0 label and are
//! skipped when the file is read back for learning; they are retained so a
//! run's full accounting can be reconstructed from the file alone.

use std::path::Path;

use crate::lm::SampledSequence;
use crate::oracle::LabeledExample;

use super::PipelineError;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub text: String,
    pub label: bool,
    pub instance_id: String,
    pub temperature: f64,
    pub sample_index: usize,
    pub terminated: bool,
}

/// Joins samples with their oracle labels. `labeled` holds one entry per
/// terminated sample in sample order (the shape [`crate::oracle::label`]
/// produces); non-terminated rows get a placeholder false label.
pub fn rows_from_run(samples: &[SampledSequence], labeled: &[LabeledExample]) -> Vec<DatasetRow> {
    let mut verdicts = labeled.iter();
    let rows = samples
        .iter()
        .map(|s| {
            let label = if s.terminated {
                let example = verdicts.next().expect("one label per terminated sample");
                debug_assert_eq!(example.text, s.text);
                example.positive
            } else {
                false
            };
            DatasetRow {
                text: s.text.clone(),
                label,
                instance_id: s.instance_id.clone(),
                temperature: s.temperature,
                sample_index: s.sample_index,
                terminated: s.terminated,
            }
        })
        .collect();
    assert!(
        verdicts.next().is_none(),
        "label list longer than terminated samples"
    );
    rows
}

pub fn write(path: &Path, rows: &[DatasetRow]) -> Result<(), PipelineError> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            row.text,
            u8::from(row.label),
            row.instance_id,
            row.temperature,
            row.sample_index,
            u8::from(row.terminated),
        ));
    }
    std::fs::write(path, out).map_err(|e| PipelineError::Io(format!("write {path:?}: {e}")))
}

pub fn read(path: &Path) -> Result<Vec<DatasetRow>, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Io(format!("read {path:?}: {e}")))?;
    let mut rows = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(PipelineError::Io(format!(
                "{path:?} line {}: expected 6 tab-separated fields, got {}",
                index + 1,
                fields.len()
            )));
        }
        let parse_flag = |s: &str, what: &str| -> Result<bool, PipelineError> {
            match s {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(PipelineError::Io(format!(
                    "{path:?} line {}: bad {what} flag {other:?}",
                    index + 1
                ))),
            }
        };
        rows.push(DatasetRow {
            text: fields[0].to_string(),
            label: parse_flag(fields[1], "label")?,
            instance_id: fields[2].to_string(),
            temperature: fields[3].parse().map_err(|_| {
                PipelineError::Io(format!("{path:?} line {}: bad temperature", index + 1))
            })?,
            sample_index: fields[4].parse().map_err(|_| {
                PipelineError::Io(format!("{path:?} line {}: bad sample index", index + 1))
            })?,
            terminated: parse_flag(fields[5], "terminated")?,
        });
    }
    Ok(rows)
}

/// The labeled examples a dataset file contributes to learning: terminated
/// rows only.
pub fn labeled_rows(rows: &[DatasetRow]) -> Vec<LabeledExample> {
    rows.iter()
        .filter(|r| r.terminated)
        .map(|r| LabeledExample {
            text: r.text.clone(),
            positive: r.label,
            instance_id: r.instance_id.clone(),
            temperature: r.temperature,
            sample_index: r.sample_index,
        })
        .collect()
}
