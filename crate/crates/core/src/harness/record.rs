use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::metrics::Histogram;
use super::{ExperimentConfig, HarnessError};
use crate::baselines::Method;
use crate::comms::{CostLedger, FeedbackKind, TeacherVariant};
use crate::harness::Setting;

/// One evaluation point of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub method: Method,
    pub teacher: TeacherVariant,
    pub setting: Setting,
    pub seed: u64,
    pub request_count: u64,
    pub success_rate: f64,
    pub correct_instructive: u64,
    pub incorrect_instructive: u64,
    pub evaluative: u64,
    /// Exact decimal cost, e.g. `0.48`.
    pub total_cost: String,
    /// Abstraction histogram of the utterances since the previous row;
    /// all four are empty when nothing was uttered.
    pub frac_i: Option<f64>,
    pub frac_ii: Option<f64>,
    pub frac_iii: Option<f64>,
    pub frac_iv: Option<f64>,
    pub window_utterances: u64,
    pub checkpoint: Option<String>,
}

impl RecordRow {
    /// Snapshot of a run after `ledger.request_count()` requests.
    pub fn new(config: &ExperimentConfig, seed: u64, ledger: &CostLedger, success_rate: f64, h: &Histogram) -> Self {
        let frac = |i: usize| (!h.is_empty()).then_some(h.fractions[i]);
        Self {
            method: config.method,
            teacher: config.teacher,
            setting: config.setting,
            seed,
            request_count: ledger.request_count(),
            success_rate,
            correct_instructive: ledger.count(FeedbackKind::CorrectInstructive),
            incorrect_instructive: ledger.count(FeedbackKind::IncorrectInstructive),
            evaluative: ledger.count(FeedbackKind::Evaluative),
            total_cost: ledger.total_decimal(),
            frac_i: frac(0),
            frac_ii: frac(1),
            frac_iii: frac(2),
            frac_iv: frac(3),
            window_utterances: h.total as u64,
            checkpoint: None,
        }
    }
}

/// Evaluation curve of one seed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRecord {
    pub rows: Vec<RecordRow>,
}

impl RunRecord {
    pub fn final_row(&self) -> Option<&RecordRow> {
        self.rows.last()
    }

    pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        for row in records.iter().flat_map(|r| &r.rows) {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| HarnessError::Io(e.to_string()))?;
        Ok(())
    }

    /// Reads rows back and groups consecutive rows of the same run.
    pub fn read_csv<R: Read>(input: R) -> Result<Vec<RunRecord>, HarnessError> {
        let mut r = csv::Reader::from_reader(input);
        let mut out: Vec<RunRecord> = Vec::new();
        for row in r.deserialize() {
            let row: RecordRow = row?;
            let same = out.last().and_then(|rec| rec.rows.last()).is_some_and(|last| {
                (last.method, last.teacher, last.setting, last.seed) == (row.method, row.teacher, row.setting, row.seed)
                    && last.request_count <= row.request_count
            });
            if same {
                out.last_mut().unwrap().rows.push(row);
            } else {
                out.push(RunRecord { rows: vec![row] });
            }
        }
        Ok(out)
    }

    pub fn to_csv_string(records: &[RunRecord]) -> Result<String, HarnessError> {
        let mut buf = Vec::new();
        Self::write_csv(records, &mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn row(seed: u64, req: u64, frac: Option<f64>, ckpt: Option<&str>) -> RecordRow {
        RecordRow {
            method: Method::Ceil,
            teacher: TeacherVariant::LanguageBased,
            setting: Setting::Scratch,
            seed,
            request_count: req,
            success_rate: 0.3,
            correct_instructive: 3,
            incorrect_instructive: 2,
            evaluative: 1,
            total_cost: "0.33".into(),
            frac_i: frac,
            frac_ii: frac,
            frac_iii: frac,
            frac_iv: frac,
            window_utterances: 7,
            checkpoint: ckpt.map(String::from),
        }
    }

    #[test]
    fn csv_round_trip_keeps_runs_apart() {
        let recs = vec![
            RunRecord { rows: vec![row(0, 0, None, None), row(0, 5, Some(0.25), Some("a.json"))] },
            RunRecord { rows: vec![row(1, 0, Some(0.1), None)] },
        ];
        let text = RunRecord::to_csv_string(&recs).unwrap();
        assert!(text.starts_with("method,teacher,setting,seed,request_count,success_rate"));
        assert_eq!(RunRecord::read_csv(text.as_bytes()).unwrap(), recs);
    }

    proptest! {
        #[test]
        fn floats_round_trip_exactly(s in 0.0f64..=1.0, f in proptest::option::of(0.0f64..=1.0)) {
            let mut r = row(3, 9, f, None);
            r.success_rate = s;
            let recs = vec![RunRecord { rows: vec![r] }];
            let text = RunRecord::to_csv_string(&recs).unwrap();
            prop_assert_eq!(RunRecord::read_csv(text.as_bytes()).unwrap(), recs);
        }
    }
}
