//! The UCR/UEA `.ts` text format.

use std::fmt::Write as _;

use super::{Split, TimeSeriesDataset};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

fn fmt_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Format { line, message: message.into() })
}

/// Parse a labeled, equal-length `.ts` file. No normalization is applied.
pub fn parse_ts(text: &str, split: Split) -> Result<TimeSeriesDataset> {
    let mut header = Vec::new();
    let mut vocab: Option<Vec<String>> = None;
    let mut declared_len: Option<usize> = None;
    let mut declared_dims: Option<usize> = None;
    let mut univariate: Option<bool> = None;
    let mut data_start = None;
    let mut last_line = 0;

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    for (no, raw) in lines.by_ref() {
        last_line = no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !line.starts_with('@') {
            return fmt_err(no, "record before the @data marker");
        }
        header.push(line.to_string());
        let mut tokens = line[1..].split_whitespace();
        let key = tokens.next().unwrap_or("").to_ascii_lowercase();
        let rest: Vec<&str> = tokens.collect();
        let flag = |v: Option<&&str>| v.map(|s| s.eq_ignore_ascii_case("true"));
        match key.as_str() {
            "data" => {
                data_start = Some(no);
                break;
            }
            "classlabel" => match flag(rest.first()) {
                Some(true) if rest.len() > 1 => vocab = Some(rest[1..].iter().map(|s| s.to_string()).collect()),
                Some(true) => return fmt_err(no, "@classLabel true declares no labels"),
                _ => return fmt_err(no, "unlabeled dataset unsupported"),
            },
            "serieslength" => match rest.first().and_then(|s| s.parse().ok()) {
                Some(l) => declared_len = Some(l),
                None => return fmt_err(no, "@seriesLength needs a positive integer"),
            },
            "dimensions" => match rest.first().and_then(|s| s.parse().ok()) {
                Some(d) => declared_dims = Some(d),
                None => return fmt_err(no, "@dimensions needs a positive integer"),
            },
            "univariate" => univariate = flag(rest.first()),
            "missing" if flag(rest.first()) == Some(true) => {
                return fmt_err(no, "missing values unsupported");
            }
            "equallength" if flag(rest.first()) == Some(false) => {
                return fmt_err(no, "variable-length series unsupported");
            }
            "timestamps" if flag(rest.first()) == Some(true) => {
                return fmt_err(no, "timestamped series unsupported");
            }
            _ => {}
        }
    }
    let Some(data_line) = data_start else {
        return fmt_err(last_line + 1, "missing @data marker");
    };
    let Some(vocab) = vocab else {
        return fmt_err(data_line, "missing @classLabel header");
    };

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut shape: Option<(usize, usize)> = None;
    for (no, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(':').collect();
        if parts.len() < 2 {
            return fmt_err(no, "record has no label field");
        }
        let label_tok = parts[parts.len() - 1].trim();
        let Some(label) = vocab.iter().position(|v| v == label_tok) else {
            return fmt_err(no, format!("unknown label '{label_tok}'"));
        };
        let channels = &parts[..parts.len() - 1];
        let mut len = None;
        for ch in channels {
            let mut count = 0;
            for tok in ch.split(',') {
                let tok = tok.trim();
                if tok == "?" {
                    return fmt_err(no, "missing values unsupported");
                }
                match tok.parse::<f64>() {
                    Ok(v) if v.is_finite() => values.push(v),
                    _ => return fmt_err(no, format!("invalid value '{tok}'")),
                }
                count += 1;
            }
            if *len.get_or_insert(count) != count {
                return fmt_err(no, "ragged series lengths across channels");
            }
        }
        let this = (channels.len(), len.unwrap_or(0));
        match shape {
            None => shape = Some(this),
            Some(s) if s != this => {
                return fmt_err(no, format!("ragged series: {}×{} after {}×{}", this.0, this.1, s.0, s.1));
            }
            _ => {}
        }
        if declared_len.is_some_and(|l| l != this.1) {
            return fmt_err(no, format!("series length {} differs from @seriesLength {}", this.1, declared_len.unwrap()));
        }
        if declared_dims.is_some_and(|d| d != this.0) || (univariate == Some(true) && this.0 != 1) {
            return fmt_err(no, format!("record has {} channels, header disagrees", this.0));
        }
        labels.push(label);
    }
    let Some((c, l)) = shape else {
        return fmt_err(data_line, "no records after @data");
    };
    let samples = Tensor::new(vec![labels.len(), c, l], values)?;
    let mut ds = TimeSeriesDataset::new(samples, labels, vocab, split)?;
    ds.set_header(header);
    Ok(ds)
}

fn default_header(ds: &TimeSeriesDataset) -> Vec<String> {
    let mut h = vec![
        "@problemName generated".to_string(),
        "@timeStamps false".to_string(),
        "@missing false".to_string(),
    ];
    if ds.channels() == 1 {
        h.push("@univariate true".to_string());
    } else {
        h.push("@univariate false".to_string());
        h.push(format!("@dimensions {}", ds.channels()));
    }
    h.push("@equalLength true".to_string());
    h.push(format!("@seriesLength {}", ds.length()));
    h.push(format!("@classLabel true {}", ds.class_names().join(" ")));
    h.push("@data".to_string());
    h
}

/// Emit a dataset as `.ts`, reusing the parsed header when there is one.
pub fn serialize_ts(ds: &TimeSeriesDataset) -> String {
    let mut out = String::new();
    let header = ds.header().map(<[String]>::to_vec).unwrap_or_else(|| default_header(ds));
    for line in header {
        out.push_str(&line);
        out.push('\n');
    }
    let (c, l) = (ds.channels(), ds.length());
    for i in 0..ds.len() {
        let row = ds.sample(i);
        for ch in 0..c {
            for (t, v) in row[ch * l..(ch + 1) * l].iter().enumerate() {
                if t > 0 {
                    out.push(',');
                }
                write!(out, "{v}").expect("writing to a String");
            }
            out.push(':');
        }
        out.push_str(&ds.class_names()[ds.labels()[i]]);
        out.push('\n');
    }
    out
}
