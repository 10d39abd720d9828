// SPDX-License-Identifier: MIT OR Apache-2.0

//! Result tables. CSV is long (one row per cell and aggregation method);
//! Markdown and LaTeX are wide, one table per pipeline pair (1/2 and 3/4)
//! with four metric columns per pipeline.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::experiment::RunRecord;
use super::pipeline::PipelineId;
use super::Base;
use crate::aggregation::AggregationMethod;
use crate::classifiers::ClassifierKind;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Markdown,
    Latex,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "latex" | "tex" => Ok(ReportFormat::Latex),
            _ => Err(Error::invalid(format!("unknown report format {s:?}"))),
        }
    }
}

/// One result line; metrics are percentages rounded to two decimals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub base: Base,
    pub classifier: ClassifierKind,
    pub aggregation: String,
    pub pipeline: PipelineId,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

const PAIRS: [(PipelineId, PipelineId); 2] = [(PipelineId::P1, PipelineId::P2), (PipelineId::P3, PipelineId::P4)];
const CSV_HEADER: [&str; 8] = ["base", "classifier", "aggregation", "pipeline", "accuracy", "precision", "recall", "f1"];
const MISSING: &str = "--";

fn pct(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

fn classifier_rank(k: ClassifierKind) -> usize {
    ClassifierKind::ALL.iter().position(|&c| c == k).unwrap_or(usize::MAX)
}

fn aggregation_rank(base: Base, a: &str) -> (usize, usize) {
    let b = match base {
        Base::Segment => 0,
        Base::Document => 1,
    };
    let m = AggregationMethod::ALL
        .iter()
        .position(|m| m.short_name() == a)
        .unwrap_or(AggregationMethod::ALL.len());
    (b, m)
}

type RowKey = (Base, ClassifierKind, String);

fn row_order(a: &RowKey, b: &RowKey) -> Ordering {
    classifier_rank(a.1)
        .cmp(&classifier_rank(b.1))
        .then(aggregation_rank(a.0, &a.2).cmp(&aggregation_rank(b.0, &b.2)))
        .then(a.2.cmp(&b.2))
}

/// Rows of all records, rounded as printed, in table order.
pub fn report_rows(records: &[RunRecord]) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = Vec::new();
    for r in records {
        for (agg, m) in &r.pooled {
            let round = |v: f64| pct(v).parse::<f64>().expect("formatted number");
            let row = ReportRow {
                base: r.base,
                classifier: r.classifier,
                aggregation: agg.clone(),
                pipeline: r.pipeline,
                accuracy: round(m.accuracy),
                precision: round(m.precision),
                recall: round(m.recall),
                f1: round(m.f1),
            };
            // a later record for the same cell replaces an earlier one
            rows.retain(|x| {
                (x.base, x.classifier, &x.aggregation, x.pipeline) != (row.base, row.classifier, &row.aggregation, row.pipeline)
            });
            rows.push(row);
        }
    }
    sort_rows(&mut rows);
    rows
}

fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        row_order(
            &(a.base, a.classifier, a.aggregation.clone()),
            &(b.base, b.classifier, b.aggregation.clone()),
        )
        .then(a.pipeline.cmp(&b.pipeline))
    });
}

fn fmt_metrics(r: &ReportRow) -> [String; 4] {
    [r.accuracy, r.precision, r.recall, r.f1].map(|v| format!("{v:.2}"))
}

struct Table {
    pipelines: Vec<PipelineId>,
    rows: Vec<(RowKey, Vec<Option<[String; 4]>>)>,
}

fn tables(rows: &[ReportRow]) -> Vec<Table> {
    let mut out = Vec::new();
    for (a, b) in PAIRS {
        let pipelines: Vec<PipelineId> = [a, b]
            .into_iter()
            .filter(|p| rows.iter().any(|r| r.pipeline == *p))
            .collect();
        if pipelines.is_empty() {
            continue;
        }
        let mut grouped: BTreeMap<RowKey, Vec<Option<[String; 4]>>> = BTreeMap::new();
        for r in rows.iter().filter(|r| pipelines.contains(&r.pipeline)) {
            let cells = grouped
                .entry((r.base, r.classifier, r.aggregation.clone()))
                .or_insert_with(|| vec![None; pipelines.len()]);
            let i = pipelines.iter().position(|p| *p == r.pipeline).expect("filtered");
            cells[i] = Some(fmt_metrics(r));
        }
        let mut rows: Vec<_> = grouped.into_iter().collect();
        rows.sort_by(|x, y| row_order(&x.0, &y.0));
        out.push(Table { pipelines, rows });
    }
    if out.is_empty() {
        out.push(Table {
            pipelines: vec![PAIRS[0].0, PAIRS[0].1],
            rows: Vec::new(),
        });
    }
    out
}

fn cells(key: &RowKey, values: &[Option<[String; 4]>]) -> Vec<String> {
    let mut c = vec![key.0.short_name().to_string(), key.1.short_name().to_string(), key.2.clone()];
    for v in values {
        match v {
            Some(m) => c.extend(m.iter().cloned()),
            None => c.extend(std::iter::repeat_n(MISSING.to_string(), 4)),
        }
    }
    c
}

fn caption(t: &Table) -> String {
    let n: Vec<String> = t.pipelines.iter().map(|p| p.number().to_string()).collect();
    match n.as_slice() {
        [one] => format!("Results in percentages for pipeline {one}"),
        _ => format!("Results in percentages for pipelines {}", n.join(" and ")),
    }
}

fn emit_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        let m = fmt_metrics(r);
        w.write_record([
            r.base.short_name(),
            r.classifier.short_name(),
            &r.aggregation,
            &r.pipeline.to_string(),
            &m[0],
            &m[1],
            &m[2],
            &m[3],
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn emit_markdown(rows: &[ReportRow]) -> String {
    let mut s = String::new();
    for (i, t) in tables(rows).iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        let _ = writeln!(s, "### {}\n", caption(t));
        let mut head = vec!["Base".to_string(), "Classif.".into(), "Aggr.".into()];
        for p in &t.pipelines {
            head.extend(["Acc.", "Prec.", "Rec.", "F1"].map(|m| format!("{p} {m}")));
        }
        let _ = writeln!(s, "| {} |", head.join(" | "));
        let mut rule = vec!["---"; 3];
        rule.extend(std::iter::repeat_n("---:", 4 * t.pipelines.len()));
        let _ = writeln!(s, "|{}|", rule.join("|"));
        for (key, values) in &t.rows {
            let _ = writeln!(s, "| {} |", cells(key, values).join(" | "));
        }
    }
    s
}

fn emit_latex(rows: &[ReportRow]) -> String {
    let mut s = String::new();
    for (i, t) in tables(rows).iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        let _ = writeln!(s, "% {}", caption(t));
        let _ = writeln!(s, "\\begin{{tabular}}{{{}}}", "l".repeat(3 + 4 * t.pipelines.len()));
        s.push_str("\\hline\n");
        let mut head = vec!["Base".to_string(), "Classif.".into(), "Aggr. method".into()];
        let mut sub = vec![String::new(); 3];
        for p in &t.pipelines {
            head.push(format!("\\multicolumn{{4}}{{l}}{{Pipeline {}}}", p.number()));
            sub.extend(["Acc.", "Prec.", "Rec.", "F1"].map(String::from));
        }
        let _ = writeln!(s, "{} \\\\", head.join(" & "));
        let _ = writeln!(s, "{} \\\\", sub.join(" & "));
        s.push_str("\\hline\n");
        for (key, values) in &t.rows {
            let _ = writeln!(s, "{} \\\\", cells(key, values).join(" & "));
        }
        s.push_str("\\hline\n\\end{tabular}\n");
    }
    s
}

/// Renders the records; an empty list yields the header only.
pub fn emit_report(records: &[RunRecord], format: ReportFormat) -> Result<String> {
    let rows = report_rows(records);
    match format {
        ReportFormat::Csv => emit_csv(&rows),
        ReportFormat::Markdown => Ok(emit_markdown(&rows)),
        ReportFormat::Latex => Ok(emit_latex(&rows)),
    }
}

fn parse_number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::invalid(format!("bad number {s:?} in report")))
}

fn row_from_cells(fields: &[&str], pipelines: &[PipelineId], out: &mut Vec<ReportRow>) -> Result<()> {
    if fields.len() != 3 + 4 * pipelines.len() {
        return Err(Error::invalid(format!("report row has {} fields", fields.len())));
    }
    let base: Base = fields[0].trim().parse()?;
    let classifier: ClassifierKind = fields[1].trim().parse()?;
    for (i, &pipeline) in pipelines.iter().enumerate() {
        let m = &fields[3 + 4 * i..7 + 4 * i];
        if m.iter().all(|v| v.trim() == MISSING) {
            continue;
        }
        out.push(ReportRow {
            base,
            classifier,
            aggregation: fields[2].trim().to_string(),
            pipeline,
            accuracy: parse_number(m[0])?,
            precision: parse_number(m[1])?,
            recall: parse_number(m[2])?,
            f1: parse_number(m[3])?,
        });
    }
    Ok(())
}

fn parse_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::invalid(format!("csv: {e}")))?;
        let f: Vec<&str> = rec.iter().collect();
        let pipeline: PipelineId = f.get(3).copied().unwrap_or_default().parse()?;
        let mut fields = f[..3.min(f.len())].to_vec();
        fields.extend(f.iter().skip(4).copied());
        row_from_cells(&fields, &[pipeline], &mut out)?;
    }
    Ok(out)
}

fn parse_markdown(text: &str) -> Result<Vec<ReportRow>> {
    let mut out = Vec::new();
    let mut pipelines: Vec<PipelineId> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| l.starts_with('|')) {
        let fields: Vec<&str> = line.trim_matches('|').split('|').map(str::trim).collect();
        if fields.first() == Some(&"Base") {
            pipelines = fields[3..]
                .iter()
                .step_by(4)
                .map(|h| h.split_whitespace().next().unwrap_or_default().parse())
                .collect::<Result<_>>()?;
        } else if !fields[0].starts_with("---") {
            row_from_cells(&fields, &pipelines, &mut out)?;
        }
    }
    Ok(out)
}

fn parse_latex(text: &str) -> Result<Vec<ReportRow>> {
    let mut out = Vec::new();
    let mut pipelines: Vec<PipelineId> = Vec::new();
    for line in text.lines().map(str::trim) {
        let Some(body) = line.strip_suffix("\\\\") else {
            continue;
        };
        let fields: Vec<&str> = body.split('&').map(str::trim).collect();
        match fields[0] {
            "Base" => {
                pipelines = fields[3..]
                    .iter()
                    .map(|h| {
                        let n = h.trim_end_matches('}').rsplit(' ').next().unwrap_or_default();
                        n.parse()
                    })
                    .collect::<Result<_>>()?;
            }
            "" => {}
            _ => row_from_cells(&fields, &pipelines, &mut out)?,
        }
    }
    Ok(out)
}

/// Reads rows back from any emitted format, in table order.
pub fn parse_report(text: &str, format: ReportFormat) -> Result<Vec<ReportRow>> {
    let mut rows = match format {
        ReportFormat::Csv => parse_csv(text)?,
        ReportFormat::Markdown => parse_markdown(text)?,
        ReportFormat::Latex => parse_latex(text)?,
    };
    sort_rows(&mut rows);
    Ok(rows)
}
