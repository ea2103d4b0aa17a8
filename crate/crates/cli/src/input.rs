use std::path::Path;

use tailquant::Sample;

use crate::commands::CliError;

/// Parses one finite decimal per line. Blank lines and `#` comments are skipped.
pub fn parse_observations(text: &str) -> Result<Sample, CliError> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| CliError::Usage(format!("line {}: `{line}` is not a number", i + 1)))?;
        if !v.is_finite() {
            return Err(CliError::Usage(format!("line {}: `{line}` is not finite", i + 1)));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::Usage("data file contains no observations".into()));
    }
    Ok(Sample::new(values)?)
}

pub fn read_observations(path: &Path) -> Result<Sample, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_observations(&text)
}
