//! Grid specifications: `start:stop:count` (inclusive, evenly spaced) or a
//! comma-separated list.

use crate::CliError;

pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(CliError::Validation("empty grid".into()));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [single] => single
            .split(',')
            .map(parse_number)
            .collect::<Result<Vec<f64>, CliError>>()?,
        [start, stop, count] => {
            let (a, b) = (parse_number(start)?, parse_number(stop)?);
            let n: usize = count
                .trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("grid count `{count}` is not a positive integer")))?;
            match n {
                0 => return Err(CliError::Validation("grid count must be at least 1".into())),
                1 => vec![a],
                _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            }
        }
        _ => return Err(CliError::Validation(format!("cannot parse grid `{spec}`"))),
    };
    Ok(values)
}

fn parse_number(s: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::Validation(format!("`{s}` is not finite")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lists() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("0:1").is_err());
    }
}
