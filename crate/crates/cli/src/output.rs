use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Csv,
    Json,
}

/// Formats `x` with nine significant digits, falling back to scientific
/// notation for very large or very small magnitudes.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    if (-5..10).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

pub fn to_csv<T: Serialize>(records: &[T]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in records {
        writer.serialize(r)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| anyhow::anyhow!(e.to_string()))?;
    Ok(String::from_utf8(bytes)?)
}

pub fn to_json<T: Serialize>(records: &[T]) -> Result<String> {
    let mut text = serde_json::to_string_pretty(records)?;
    text.push('\n');
    Ok(text)
}

/// Writes records as CSV or JSON to `out`, or to stdout when `out` is `None`.
pub fn emit<T: Serialize>(records: &[T], format: Format, out: Option<&Path>) -> Result<()> {
    let text = match format {
        Format::Json => to_json(records)?,
        Format::Csv | Format::Human => to_csv(records)?,
    };
    match out {
        Some(path) => {
            let mut f =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            f.write_all(text.as_bytes())
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(4.0 / 3.0), "1.33333333");
        assert_eq!(sig9(2.0 / 3.0), "0.666666667");
        assert_eq!(sig9(10.0 / 9.0), "1.11111111");
        assert_eq!(sig9(1.0), "1.00000000");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1234.5), "1234.50000");
        assert_eq!(sig9(0.99999999999), "1.00000000");
        assert_eq!(sig9(1e-7), "1.00000000e-7");
    }
}
