use serde::Serialize;

use super::dataset::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateCount {
    pub state: String,
    pub count: usize,
    /// Percentage among observed cells; absent when nothing was observed.
    pub percentage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableSummary {
    pub variable: String,
    pub observed: usize,
    pub missing: usize,
    pub states: Vec<StateCount>,
}

/// Marginal frequency table of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub records: usize,
    pub variables: Vec<VariableSummary>,
}

impl Summary {
    pub fn percentage(&self, variable: &str, state: &str) -> Option<f64> {
        self.variables
            .iter()
            .find(|v| v.variable == variable)?
            .states
            .iter()
            .find(|s| s.state == state)?
            .percentage
    }

    /// `variable,state,count,percentage`; undefined percentages are empty.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["variable", "state", "count", "percentage"])
            .expect("in-memory write");
        for v in &self.variables {
            for s in &v.states {
                let pct = s.percentage.map_or(String::new(), |p| format!("{p:.4}"));
                w.write_record([&v.variable, &s.state, &s.count.to_string(), &pct])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

pub fn summarize(dataset: &Dataset) -> Summary {
    let variables = dataset
        .variables()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut counts = vec![0usize; v.cardinality()];
            let mut missing = 0;
            for r in dataset.records() {
                match r.values[i] {
                    Some(s) => counts[s] += 1,
                    None => missing += 1,
                }
            }
            let observed: usize = counts.iter().sum();
            VariableSummary {
                variable: v.name.clone(),
                observed,
                missing,
                states: v
                    .states
                    .iter()
                    .zip(counts)
                    .map(|(s, count)| StateCount {
                        state: s.clone(),
                        count,
                        percentage: (observed > 0).then(|| 100.0 * count as f64 / observed as f64),
                    })
                    .collect(),
            }
        })
        .collect();
    Summary {
        records: dataset.len(),
        variables,
    }
}
