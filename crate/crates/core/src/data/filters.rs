use serde::Serialize;

use super::dataset::{DataError, Dataset, Record};
use super::schema::{HONESTY_COLUMN, RESPONSE_TIME_PREFIX};
use crate::model::VariableKind;

/// What happens to data caught by a filter rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterAction {
    /// Remove the whole record.
    Drop,
    /// Keep the record but mark the offending answers missing: the single
    /// too-fast answer, or every game answer of a dishonest record.
    Blank,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterConfig {
    /// Answers faster than this many milliseconds are suspect; 0 disables.
    pub min_response_ms: u64,
    pub require_honesty: bool,
    pub action: FilterAction,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_response_ms: 800,
            require_honesty: false,
            action: FilterAction::Drop,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FilterReport {
    pub input_records: usize,
    pub output_records: usize,
    pub dropped_fast: usize,
    pub dropped_dishonest: usize,
    pub blanked_fast_values: usize,
    pub blanked_dishonest_records: usize,
}

/// Applies the honesty rule, then the response-time rule. Records with a
/// missing honesty answer or missing response time are never caught.
pub fn apply_filters(
    dataset: &Dataset,
    config: &FilterConfig,
) -> Result<(Dataset, FilterReport), DataError> {
    let rt_on = config.min_response_ms > 0;
    if rt_on && dataset.response_columns().is_empty() {
        let first_game = dataset
            .variables()
            .iter()
            .find(|v| v.kind == VariableKind::Game)
            .map_or("<game variable>".to_string(), |v| v.name.clone());
        return Err(DataError::MissingMetaColumn(format!(
            "{RESPONSE_TIME_PREFIX}{first_game}"
        )));
    }
    if config.require_honesty && !dataset.has_honesty() {
        return Err(DataError::MissingMetaColumn(HONESTY_COLUMN.to_string()));
    }
    let rt_target: Vec<Option<usize>> = dataset
        .response_columns()
        .iter()
        .map(|c| dataset.column_index(c))
        .collect();
    let game_columns: Vec<usize> = (0..dataset.variables().len())
        .filter(|&i| dataset.variables()[i].kind == VariableKind::Game)
        .collect();

    let mut report = FilterReport {
        input_records: dataset.len(),
        ..FilterReport::default()
    };
    let mut kept: Vec<Record> = Vec::with_capacity(dataset.len());
    for rec in dataset.records() {
        let mut rec = rec.clone();
        if config.require_honesty && rec.honesty == Some(false) {
            match config.action {
                FilterAction::Drop => {
                    report.dropped_dishonest += 1;
                    continue;
                }
                FilterAction::Blank => {
                    for &g in &game_columns {
                        rec.values[g] = None;
                    }
                    report.blanked_dishonest_records += 1;
                }
            }
        }
        if rt_on {
            let fast: Vec<usize> = rec
                .response_ms
                .iter()
                .enumerate()
                .filter(|(_, t)| matches!(t, Some(t) if *t < config.min_response_ms))
                .map(|(i, _)| i)
                .collect();
            if !fast.is_empty() {
                match config.action {
                    FilterAction::Drop => {
                        report.dropped_fast += 1;
                        continue;
                    }
                    FilterAction::Blank => {
                        for i in fast {
                            if let Some(col) = rt_target[i] {
                                if rec.values[col].take().is_some() {
                                    report.blanked_fast_values += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        kept.push(rec);
    }
    report.output_records = kept.len();
    Ok((dataset.with_records(kept), report))
}
