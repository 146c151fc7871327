use super::{Split, TimeSeriesDataset};
use crate::autodiff::Tensor;
use crate::error::{arg_err, Error, Result};

/// Label vocabulary in sorted order (numeric when every token is a number).
pub(crate) fn sorted_vocab(tokens: &[&str]) -> Vec<String> {
    let mut uniq: Vec<&str> = tokens.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    let nums: Option<Vec<f64>> = uniq.iter().map(|t| t.parse::<f64>().ok()).collect();
    if let Some(nums) = nums {
        let mut pairs: Vec<(f64, &str)> = nums.into_iter().zip(uniq.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().map(|(_, s)| s.to_string()).collect()
    } else {
        uniq.into_iter().map(String::from).collect()
    }
}

/// Parse label-first CSV rows of `channels · length` values each.
pub fn parse_csv(text: &str, channels: usize, length: usize, split: Split) -> Result<TimeSeriesDataset> {
    if channels == 0 || length == 0 {
        return arg_err("channels and length must be positive");
    }
    let width = channels * length;
    let mut label_toks = Vec::new();
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width + 1 {
            return Err(Error::Format {
                line: i + 1,
                message: format!("row has {} fields, expected label plus {width} values", fields.len()),
            });
        }
        label_toks.push(fields[0]);
        for tok in &fields[1..] {
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => return Err(Error::Format { line: i + 1, message: format!("invalid value '{tok}'") }),
            }
        }
    }
    if label_toks.is_empty() {
        return Err(Error::Format { line: 1, message: "no rows".into() });
    }
    let vocab = sorted_vocab(&label_toks);
    let labels = label_toks.iter().map(|t| vocab.iter().position(|v| v == t).expect("token in vocab")).collect();
    let samples = Tensor::new(vec![label_toks.len(), channels, length], values)?;
    TimeSeriesDataset::new(samples, labels, vocab, split)
}
