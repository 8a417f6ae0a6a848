//! Dataset persistence: '#'-prefixed key=value header, then one CSV line of
//! 4(m+1) reals per record. Reals use the shortest round-trip decimal form,
//! so read(write(D)) reproduces the matrix exactly and output is
//! locale-independent and deterministic.

use crate::error::{Error, Result};
use crate::harqgen::{DatasetClass, PosteriorDataset, Provenance};
use crate::numerics::RealMatrix;
use crate::channel::RicianParams;
use std::fmt::Write as _;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

pub fn format_dataset(ds: &PosteriorDataset) -> Result<String> {
    ds.validate()?;
    let mut out = String::new();
    let p = &ds.provenance.prior;
    let _ = writeln!(out, "# schema={SCHEMA_VERSION}");
    let _ = writeln!(out, "# class={}", ds.class.as_str());
    let _ = writeln!(out, "# m={}", ds.m);
    let _ = writeln!(out, "# n_if={}", ds.n_if);
    let _ = writeln!(out, "# n={}", ds.n_records());
    let _ = writeln!(out, "# seed={}", ds.provenance.seed);
    let _ = writeln!(out, "# sigma2={}", p.sigma2);
    let _ = writeln!(out, "# beta={}", p.beta);
    let _ = writeln!(out, "# K={}", p.k);
    let _ = writeln!(out, "# theta={}", p.theta);
    let d = ds.dim();
    for c in 0..ds.n_records() {
        for r in 0..d {
            if r > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", ds.x.get(r, c));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_dataset(ds: &PosteriorDataset, path: &Path) -> Result<()> {
    let text = format_dataset(ds)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parsed dataset plus non-fatal warnings (unknown header keys are warnings
/// for forward compatibility, never errors).
#[derive(Debug)]
pub struct LoadedDataset {
    pub dataset: PosteriorDataset,
    pub warnings: Vec<String>,
}

pub fn parse_dataset(text: &str, label: &str) -> Result<LoadedDataset> {
    let mut warnings = Vec::new();
    let mut header: Vec<(usize, String, String)> = Vec::new();
    let mut body_start = 0usize;
    let mut lines = text.lines().enumerate().peekable();
    while let Some(&(lineno, line)) = lines.peek() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            lines.next();
            body_start = lineno + 1;
            let rest = rest.trim();
            if rest.is_empty() {
                continue;
            }
            match rest.split_once('=') {
                Some((k, v)) => {
                    header.push((lineno + 1, k.trim().to_string(), v.trim().to_string()))
                }
                None => warnings.push(format!("{label}:{}: comment line ignored", lineno + 1)),
            }
        } else {
            break;
        }
    }

    let mut schema = None;
    let mut class = None;
    let mut m = None;
    let mut n_if = None;
    let mut n_declared = None;
    let mut seed = None;
    let mut sigma2 = None;
    let mut beta = None;
    let mut k_factor = None;
    let mut theta = None;
    for (lineno, key, value) in &header {
        let parse_err = |what: &str| Error::Parse {
            path: label.to_string(),
            line: *lineno,
            message: format!("bad {what} value {value:?}"),
        };
        match key.as_str() {
            "schema" => schema = Some(value.parse::<u32>().map_err(|_| parse_err("schema"))?),
            "class" => class = Some(DatasetClass::parse(value)?),
            "m" => m = Some(value.parse::<usize>().map_err(|_| parse_err("m"))?),
            "n_if" => n_if = Some(value.parse::<usize>().map_err(|_| parse_err("n_if"))?),
            "n" => n_declared = Some(value.parse::<usize>().map_err(|_| parse_err("n"))?),
            "seed" => seed = Some(value.parse::<u64>().map_err(|_| parse_err("seed"))?),
            "sigma2" => sigma2 = Some(value.parse::<f64>().map_err(|_| parse_err("sigma2"))?),
            "beta" => beta = Some(value.parse::<f64>().map_err(|_| parse_err("beta"))?),
            "K" => k_factor = Some(value.parse::<f64>().map_err(|_| parse_err("K"))?),
            "theta" => theta = Some(value.parse::<f64>().map_err(|_| parse_err("theta"))?),
            other => warnings.push(format!("{label}:{lineno}: unknown header key {other:?}")),
        }
    }
    let missing = |what: &str| Error::Parse {
        path: label.to_string(),
        line: body_start,
        message: format!("missing required header key {what:?}"),
    };
    let schema = schema.ok_or_else(|| missing("schema"))?;
    if schema != SCHEMA_VERSION {
        return Err(Error::Parse {
            path: label.to_string(),
            line: 1,
            message: format!("schema version {schema} unsupported (expected {SCHEMA_VERSION})"),
        });
    }
    let class = class.ok_or_else(|| missing("class"))?;
    let m = m.ok_or_else(|| missing("m"))?;
    let n_if = n_if.ok_or_else(|| missing("n_if"))?;
    let n_declared = n_declared.ok_or_else(|| missing("n"))?;
    let seed = seed.ok_or_else(|| missing("seed"))?;
    let prior = RicianParams::new(
        beta.ok_or_else(|| missing("beta"))?,
        k_factor.ok_or_else(|| missing("K"))?,
        theta.ok_or_else(|| missing("theta"))?,
        sigma2.ok_or_else(|| missing("sigma2"))?,
    )?;

    let d = 4 * (m + 1);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n_declared);
    for (lineno, line) in lines {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut col = Vec::with_capacity(d);
        for tok in trimmed.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
                path: label.to_string(),
                line: lineno + 1,
                message: format!("bad real value {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: label.to_string(),
                    line: lineno + 1,
                    message: format!("non-finite value {tok:?}"),
                });
            }
            col.push(v);
        }
        if col.len() != d {
            return Err(Error::Parse {
                path: label.to_string(),
                line: lineno + 1,
                message: format!("record has {} values, expected 4(m+1) = {d}", col.len()),
            });
        }
        cols.push(col);
    }
    if cols.len() != n_declared {
        return Err(Error::Parse {
            path: label.to_string(),
            line: body_start + cols.len() + 1,
            message: format!("header declares n={n_declared} records, found {}", cols.len()),
        });
    }
    let dataset = PosteriorDataset {
        class,
        m,
        n_if,
        x: RealMatrix::from_columns(&cols)?,
        provenance: Provenance { seed, prior },
    };
    dataset.validate()?;
    Ok(LoadedDataset { dataset, warnings })
}

pub fn read_dataset(path: &Path) -> Result<LoadedDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harqgen::sample_prior_dataset;

    fn sample() -> PosteriorDataset {
        let p = RicianParams::new(8.0, 1.0, 0.0, 0.13183).unwrap();
        sample_prior_dataset(&p, 1, 40, 9).unwrap()
    }

    #[test]
    fn round_trip_reproduces_everything() {
        let ds = sample();
        let text = format_dataset(&ds).unwrap();
        let loaded = parse_dataset(&text, "mem").unwrap();
        assert!(loaded.warnings.is_empty());
        let back = loaded.dataset;
        assert_eq!(back.class, ds.class);
        assert_eq!(back.m, ds.m);
        assert_eq!(back.n_if, ds.n_if);
        assert_eq!(back.provenance, ds.provenance);
        assert_eq!(back.x, ds.x); // bitwise, via shortest round-trip floats
    }

    #[test]
    fn sigma2_recorded_verbatim() {
        let ds = sample();
        let text = format_dataset(&ds).unwrap();
        assert!(text.contains("# sigma2=0.13183\n"));
    }

    #[test]
    fn truncated_body_is_reported_with_counts() {
        let ds = sample();
        let text = format_dataset(&ds).unwrap();
        let truncated: Vec<&str> = text.lines().take(text.lines().count() - 3).collect();
        let err = parse_dataset(&truncated.join("\n"), "mem").unwrap_err();
        match err {
            Error::Parse { message, .. } => {
                assert!(message.contains("n=40"), "{message}");
                assert!(message.contains("37"), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unknown_header_key_warns_but_parses() {
        let ds = sample();
        let mut text = format_dataset(&ds).unwrap();
        text = text.replacen("# m=", "# future_key=hello\n# m=", 1);
        let loaded = parse_dataset(&text, "mem").unwrap();
        assert_eq!(loaded.warnings.len(), 1);
        assert!(loaded.warnings[0].contains("future_key"));
    }

    #[test]
    fn wrong_arity_names_first_bad_line() {
        let ds = sample();
        let text = format_dataset(&ds).unwrap();
        // Append an extra column to the first body line.
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let first_body = lines.iter().position(|l| !l.starts_with('#')).unwrap();
        lines[first_body].push_str(",1.5");
        let err = parse_dataset(&lines.join("\n"), "mem").unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, first_body + 1);
                assert!(message.contains("expected 4(m+1)"), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn non_finite_values_rejected() {
        let ds = sample();
        let text = format_dataset(&ds).unwrap();
        let text = {
            let mut lines: Vec<String> = text.lines().map(String::from).collect();
            let first_body = lines.iter().position(|l| !l.starts_with('#')).unwrap();
            let mut parts: Vec<&str> = lines[first_body].split(',').collect();
            parts[0] = "NaN";
            lines[first_body] = parts.join(",");
            lines.join("\n")
        };
        let err = parse_dataset(&text, "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn schema_mismatch_rejected() {
        let ds = sample();
        let text = format_dataset(&ds).unwrap().replace("schema=1", "schema=9");
        let err = parse_dataset(&text, "mem").unwrap_err();
        match err {
            Error::Parse { message, .. } => assert!(message.contains("schema version 9")),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn empty_matrix_cannot_be_constructed() {
        // n = 0 datasets are unrepresentable; the constructor rejects them
        // before any write could happen.
        assert!(RealMatrix::from_columns(&[]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("harqstat_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ds.csv");
        let ds = sample();
        write_dataset(&ds, &path).unwrap();
        let loaded = read_dataset(&path).unwrap();
        assert_eq!(loaded.dataset.x, ds.x);
        std::fs::remove_file(&path).ok();
    }
}
