use super::{Outcome, Verdict};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub assertion_id: String,
    pub pass_count: usize,
    pub fail_count: usize,
    pub first_fail_t: Option<f64>,
}

pub fn summarize(verdicts: &[Verdict]) -> Vec<SummaryRow> {
    let mut rows: BTreeMap<&str, SummaryRow> = BTreeMap::new();
    for v in verdicts {
        let row = rows.entry(v.assertion_id.as_str()).or_insert_with(|| SummaryRow {
            assertion_id: v.assertion_id.clone(),
            pass_count: 0,
            fail_count: 0,
            first_fail_t: None,
        });
        match v.result {
            Outcome::Pass => row.pass_count += 1,
            Outcome::Fail => {
                row.fail_count += 1;
                row.first_fail_t = Some(row.first_fail_t.map_or(v.t, |t| t.min(v.t)));
            }
            Outcome::NotApplicable => {}
        }
    }
    rows.into_values().collect()
}

pub fn summary_csv(verdicts: &[Verdict]) -> String {
    let mut s = String::from("assertion_id,pass_count,fail_count,first_fail_t\n");
    for r in summarize(verdicts) {
        let t = r.first_fail_t.map(|t| t.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{},{},{}\n", r.assertion_id, r.pass_count, r.fail_count, t));
    }
    s
}

pub fn verdicts_jsonl(verdicts: &[Verdict]) -> String {
    let mut s = String::new();
    for v in verdicts {
        s.push_str(&serde_json::to_string(v).expect("verdict serialises"));
        s.push('\n');
    }
    s
}
