use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const AVERAGES_LABEL: &str = "Task Averages";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub task: String,
    pub configuration: String,
    pub successes: usize,
    pub repetitions: usize,
    pub success_rate: f64,
    pub mean_plan_length: f64,
    pub mean_retries: f64,
}

/// Per-configuration mean over tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageRow {
    pub configuration: String,
    pub success_rate: f64,
    pub mean_plan_length: f64,
    pub mean_retries: f64,
}

/// Rows in task order, then configuration order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
    Json,
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "markdown" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(format!("unknown table format `{other}`")),
        }
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (n, sum) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl ResultRow {
    /// Builds a row from per-repetition (success, plan length, retries) triples.
    pub fn from_outcomes(task: &str, configuration: &str, outcomes: &[(bool, usize, usize)]) -> ResultRow {
        let n = outcomes.len();
        let successes = outcomes.iter().filter(|o| o.0).count();
        ResultRow {
            task: task.to_string(),
            configuration: configuration.to_string(),
            successes,
            repetitions: n,
            success_rate: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
            mean_plan_length: mean(outcomes.iter().map(|o| o.1 as f64)),
            mean_retries: mean(outcomes.iter().map(|o| o.2 as f64)),
        }
    }
}

impl ResultsTable {
    pub fn configurations(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.configuration) {
                out.push(r.configuration.clone());
            }
        }
        out
    }

    pub fn tasks(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.task) {
                out.push(r.task.clone());
            }
        }
        out
    }

    pub fn row(&self, task: &str, configuration: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.task == task && r.configuration == configuration)
    }

    pub fn averages(&self) -> Vec<AverageRow> {
        self.configurations()
            .into_iter()
            .map(|c| {
                let rows: Vec<&ResultRow> = self.rows.iter().filter(|r| r.configuration == c).collect();
                AverageRow {
                    success_rate: mean(rows.iter().map(|r| r.success_rate)),
                    mean_plan_length: mean(rows.iter().map(|r| r.mean_plan_length)),
                    mean_retries: mean(rows.iter().map(|r| r.mean_retries)),
                    configuration: c,
                }
            })
            .collect()
    }

    pub fn from_csv(text: &str) -> Result<ResultsTable, HarnessError> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<ResultRow>() {
            let row = rec.map_err(|e| HarnessError::Config(format!("results csv: {e}")))?;
            if row.task != AVERAGES_LABEL {
                rows.push(row);
            }
        }
        Ok(ResultsTable { rows })
    }

    pub fn from_json(text: &str) -> Result<ResultsTable, HarnessError> {
        #[derive(Deserialize)]
        struct Doc {
            rows: Vec<ResultRow>,
        }
        let d: Doc = serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("results json: {e}")))?;
        Ok(ResultsTable { rows: d.rows })
    }
}

/// Success rates pivoted by configuration (markdown), or the long form (csv/json).
pub fn render_table(table: &ResultsTable, format: TableFormat) -> String {
    match format {
        TableFormat::Markdown => render_markdown(table),
        TableFormat::Csv => render_csv(table),
        TableFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                rows: &'a [ResultRow],
                averages: Vec<AverageRow>,
            }
            let doc = Doc { rows: &table.rows, averages: table.averages() };
            serde_json::to_string_pretty(&doc).expect("table serializes") + "\n"
        }
    }
}

fn render_markdown(table: &ResultsTable) -> String {
    let configs = table.configurations();
    let mut out = String::from("| Task |");
    for c in &configs {
        out.push_str(&format!(" {c} |"));
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(configs.len()));
    out.push('\n');
    let cells: BTreeMap<(&str, &str), f64> =
        table.rows.iter().map(|r| ((r.task.as_str(), r.configuration.as_str()), r.success_rate)).collect();
    for t in table.tasks() {
        out.push_str(&format!("| {t} |"));
        for c in &configs {
            match cells.get(&(t.as_str(), c.as_str())) {
                Some(v) => out.push_str(&format!(" {v:.2} |")),
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    if !table.rows.is_empty() {
        out.push_str(&format!("| {AVERAGES_LABEL} |"));
        for a in table.averages() {
            out.push_str(&format!(" {:.2} |", a.success_rate));
        }
        out.push('\n');
    }
    out
}

fn render_csv(table: &ResultsTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if table.rows.is_empty() {
        w.write_record([
            "task",
            "configuration",
            "successes",
            "repetitions",
            "success_rate",
            "mean_plan_length",
            "mean_retries",
        ])
        .expect("in-memory write");
    }
    for r in &table.rows {
        w.serialize(r).expect("in-memory write");
    }
    for a in table.averages() {
        let reps: usize = table.rows.iter().filter(|r| r.configuration == a.configuration).map(|r| r.repetitions).sum();
        let succ: usize = table.rows.iter().filter(|r| r.configuration == a.configuration).map(|r| r.successes).sum();
        w.serialize(ResultRow {
            task: AVERAGES_LABEL.to_string(),
            configuration: a.configuration,
            successes: succ,
            repetitions: reps,
            success_rate: a.success_rate,
            mean_plan_length: a.mean_plan_length,
            mean_retries: a.mean_retries,
        })
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
