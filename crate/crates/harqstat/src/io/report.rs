//! Report rendering: an aligned table mirroring the published table layout
//! (rows per dataset, failed/successful column panels) and a machine format
//! of one key=value record per line that re-parses to identical values.

use crate::error::{Error, Result};
use crate::harqgen::DatasetClass;
use crate::mvntest::{Decision, TestReport};
use crate::paramtest::MlEstimates;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Machine,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "machine" => Ok(ReportFormat::Machine),
            other => Err(Error::Config(format!(
                "unknown report format {other:?} (expected table or machine)"
            ))),
        }
    }
}

/// All reports and estimates for one (dataset, class) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub dataset: String,
    pub class: DatasetClass,
    pub reports: Vec<TestReport>,
    pub estimates: Option<MlEstimates>,
}

const MVN_ORDER: [&str; 4] = ["Mardia-skew", "Mardia-kurt", "HZ", "Royston"];
const PARAM_ORDER: [&str; 2] = ["Test2", "Test3"];

pub fn write_report(entries: &[ReportEntry], format: ReportFormat) -> Result<String> {
    if entries.is_empty() {
        return Err(Error::InsufficientData("no report entries".into()));
    }
    match format {
        ReportFormat::Machine => Ok(write_machine(entries)),
        ReportFormat::Table => Ok(write_table(entries)),
    }
}

fn write_machine(entries: &[ReportEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        for r in &e.reports {
            let _ = write!(
                out,
                "dataset={} class={} test={} statistic={} dof={} p={} alpha={} decision={}",
                e.dataset,
                e.class.as_str(),
                r.test,
                r.statistic,
                r.dof.map_or("none".to_string(), |d| d.to_string()),
                r.p_value,
                r.alpha,
                r.decision.as_str()
            );
            if !r.warnings.is_empty() {
                let _ = write!(out, " warnings={}", r.warnings.join(";"));
            }
            out.push('\n');
        }
        if let Some(est) = &e.estimates {
            let _ = writeln!(
                out,
                "dataset={} class={} estimate=ml sigma2_hat={} k_hat={} beta_hat={} \
                 theta_hat={} h_bar_re={} h_bar_im={} sigma2_h_bar={}",
                e.dataset,
                e.class.as_str(),
                est.sigma2_hat,
                est.k_hat,
                est.beta_hat,
                est.theta_hat,
                est.h_bar_re,
                est.h_bar_im,
                est.sigma2_h_bar
            );
        }
    }
    out
}

/// Parses machine-format text back into entries (grouped by consecutive
/// dataset/class runs).
pub fn parse_machine(text: &str) -> Result<Vec<ReportEntry>> {
    let mut entries: Vec<ReportEntry> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fail = |message: String| Error::Parse {
            path: "<machine report>".to_string(),
            line: lineno + 1,
            message,
        };
        // `warnings=` is always last and may contain spaces.
        let (head, warnings) = match line.split_once(" warnings=") {
            Some((h, w)) => (h, w.split(';').map(String::from).collect()),
            None => (line, Vec::new()),
        };
        let mut kv = std::collections::HashMap::new();
        for tok in head.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| fail(format!("expected key=value, got {tok:?}")))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| -> Result<String> {
            kv.get(k)
                .cloned()
                .ok_or_else(|| fail(format!("missing key {k:?}")))
        };
        let parse_f = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| fail(format!("bad float for {k:?}")))
        };
        let dataset = get("dataset")?;
        let class = DatasetClass::parse(&get("class")?)?;
        if entries.last().map(|e| (&e.dataset, e.class)) != Some((&dataset, class)) {
            entries.push(ReportEntry {
                dataset: dataset.clone(),
                class,
                reports: Vec::new(),
                estimates: None,
            });
        }
        let entry = entries.last_mut().expect("just pushed");
        if kv.contains_key("estimate") {
            entry.estimates = Some(MlEstimates {
                sigma2_hat: parse_f("sigma2_hat")?,
                k_hat: parse_f("k_hat")?,
                beta_hat: parse_f("beta_hat")?,
                theta_hat: parse_f("theta_hat")?,
                h_bar_re: parse_f("h_bar_re")?,
                h_bar_im: parse_f("h_bar_im")?,
                sigma2_h_bar: parse_f("sigma2_h_bar")?,
            });
        } else {
            let dof = match get("dof")?.as_str() {
                "none" => None,
                v => Some(v.parse().map_err(|_| fail("bad dof".into()))?),
            };
            let decision = get("decision")?;
            let mut report = TestReport::new(
                &get("test")?,
                parse_f("statistic")?,
                dof,
                parse_f("p")?,
                parse_f("alpha")?,
            );
            report.warnings = warnings;
            if report.decision.as_str() != decision {
                return Err(fail(format!(
                    "decision {decision:?} inconsistent with p and alpha"
                )));
            }
            entry.reports.push(report);
        }
    }
    Ok(entries)
}

fn format_p(p: f64) -> String {
    if p == 0.0 {
        "0".to_string()
    } else if p < 1e-4 {
        format!("{p:.3e}")
    } else {
        format!("{p:.4}")
    }
}

fn format_value(v: f64) -> String {
    if v != 0.0 && v.abs() < 0.01 {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

fn render_grid(title: &str, header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let line = |cells: &[String], widths: &[usize]| -> String {
        cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let _ = writeln!(out, "{}", line(header, &widths).trim_end());
    for row in rows {
        let _ = writeln!(out, "{}", line(row, &widths).trim_end());
    }
    out
}

fn write_table(entries: &[ReportEntry]) -> String {
    // Preserve first-appearance order of dataset labels.
    let mut labels: Vec<&str> = Vec::new();
    for e in entries {
        if !labels.contains(&e.dataset.as_str()) {
            labels.push(&e.dataset);
        }
    }
    let classes_present: Vec<DatasetClass> =
        [DatasetClass::Failed, DatasetClass::Successful, DatasetClass::Prior]
            .into_iter()
            .filter(|c| entries.iter().any(|e| e.class == *c))
            .collect();
    let find = |label: &str, class: DatasetClass| -> Option<&ReportEntry> {
        entries
            .iter()
            .find(|e| e.dataset == label && e.class == class)
    };
    let alpha = entries
        .iter()
        .flat_map(|e| e.reports.first())
        .map(|r| r.alpha)
        .next();

    let mut out = String::new();
    let mut section = |title: &str, tests: &[&str]| {
        let any = entries
            .iter()
            .any(|e| e.reports.iter().any(|r| tests.contains(&r.test.as_str())));
        if !any {
            return;
        }
        let mut header = vec!["dataset".to_string()];
        for class in &classes_present {
            for t in tests {
                header.push(format!("{}:{}", class.as_str(), t));
            }
        }
        let mut rows = Vec::new();
        for label in &labels {
            let mut row = vec![label.to_string()];
            let mut nonempty = false;
            for class in &classes_present {
                for t in tests {
                    let cell = find(label, *class)
                        .and_then(|e| e.reports.iter().find(|r| r.test == *t))
                        .map(|r| {
                            nonempty = true;
                            let mark = if r.decision == Decision::Reject { "*" } else { "" };
                            format!("{}{}", format_p(r.p_value), mark)
                        })
                        .unwrap_or_else(|| "-".to_string());
                    row.push(cell);
                }
            }
            if nonempty {
                rows.push(row);
            }
        }
        let alpha_note = alpha.map_or(String::new(), |a| format!(" (p-values; alpha={a}, * = reject)"));
        out.push_str(&render_grid(&format!("{title}{alpha_note}"), &header, &rows));
        out.push('\n');
    };

    section("Test 1: multivariate normality", &MVN_ORDER);
    section("Tests 2 and 3: parameter matching (exact, relaxed)", &PARAM_ORDER);

    // ML estimate panel, omitted when no entry carries estimates.
    if entries.iter().any(|e| e.estimates.is_some()) {
        let est_cols = ["beta_hat", "K_hat", "theta_hat", "sigma2_hat"];
        let mut header = vec!["dataset".to_string()];
        for class in &classes_present {
            for c in est_cols {
                header.push(format!("{}:{}", class.as_str(), c));
            }
        }
        let mut rows = Vec::new();
        for label in &labels {
            let mut row = vec![label.to_string()];
            let mut nonempty = false;
            for class in &classes_present {
                match find(label, *class).and_then(|e| e.estimates.as_ref()) {
                    Some(est) => {
                        nonempty = true;
                        row.push(format_value(est.beta_hat));
                        row.push(format_value(est.k_hat));
                        row.push(format_value(est.theta_hat));
                        row.push(format_value(est.sigma2_hat));
                    }
                    None => row.extend(std::iter::repeat_n("-".to_string(), 4)),
                }
            }
            if nonempty {
                rows.push(row);
            }
        }
        out.push_str(&render_grid("ML parameter estimates", &header, &rows));
    }

    // Collected warnings, one line each.
    let mut warn_lines = Vec::new();
    for e in entries {
        for r in &e.reports {
            for w in &r.warnings {
                warn_lines.push(format!(
                    "note: {} [{}] {}: {w}",
                    e.dataset,
                    e.class.as_str(),
                    r.test
                ));
            }
        }
    }
    if !warn_lines.is_empty() {
        out.push('\n');
        for l in warn_lines {
            out.push_str(&l);
            out.push('\n');
        }
    }
    out
}
