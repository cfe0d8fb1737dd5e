//! Parameter maps and grid lists ("3,5,9" or "lo:hi:step").

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use crate::CliError;

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_one<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.trim()
        .parse()
        .map_err(|_| invalid(key, format!("cannot parse `{raw}`")))
}

/// Parse "a,b,c" or an integer range "lo:hi:step" (step defaults to 1).
pub fn parse_int_list(key: &str, raw: &str) -> Result<Vec<u64>, CliError> {
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(invalid(key, format!("range `{raw}` must be lo:hi or lo:hi:step")));
        }
        let lo: u64 = parse_one(key, parts[0])?;
        let hi: u64 = parse_one(key, parts[1])?;
        let step: u64 = if parts.len() == 3 { parse_one(key, parts[2])? } else { 1 };
        if step == 0 || hi < lo {
            return Err(invalid(key, format!("range `{raw}` is empty")));
        }
        return Ok((lo..=hi).step_by(step as usize).collect());
    }
    let out: Vec<u64> = raw
        .split(',')
        .map(|p| {
            let v: f64 = parse_one(key, p)?;
            if v < 0.0 || v.fract() != 0.0 || v > 9.0e15 {
                return Err(invalid(key, format!("`{p}` is not a non-negative integer")));
            }
            Ok(v as u64)
        })
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(invalid(key, "empty list"));
    }
    Ok(out)
}

pub fn parse_float_list(key: &str, raw: &str) -> Result<Vec<f64>, CliError> {
    let out: Vec<f64> = raw.split(',').map(|p| parse_one(key, p)).collect::<Result<_, _>>()?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(invalid(key, format!("`{raw}` contains a non-finite value")));
    }
    Ok(out)
}

/// Recipe parameters with defaults recorded as they are resolved.
#[derive(Debug)]
pub struct Params {
    raw: BTreeMap<String, String>,
    seen: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl Params {
    pub fn new(raw: &BTreeMap<String, String>) -> Self {
        Self {
            raw: raw.clone(),
            seen: BTreeSet::new(),
            resolved: BTreeMap::new(),
        }
    }

    fn take(&mut self, key: &str, default: Option<&str>) -> Result<String, CliError> {
        self.seen.insert(key.to_string());
        let value = match (self.raw.get(key), default) {
            (Some(v), _) => v.clone(),
            (None, Some(d)) => d.to_string(),
            (None, None) => return Err(invalid(key, "required key is missing")),
        };
        self.resolved.insert(key.to_string(), value.clone());
        Ok(value)
    }

    pub fn text(&mut self, key: &str, default: Option<&str>) -> Result<String, CliError> {
        self.take(key, default)
    }

    pub fn int_list(&mut self, key: &str, default: Option<&str>) -> Result<Vec<u64>, CliError> {
        let raw = self.take(key, default)?;
        parse_int_list(key, &raw)
    }

    pub fn float_list(&mut self, key: &str, default: Option<&str>) -> Result<Vec<f64>, CliError> {
        let raw = self.take(key, default)?;
        parse_float_list(key, &raw)
    }

    pub fn float(&mut self, key: &str, default: Option<&str>) -> Result<f64, CliError> {
        let raw = self.take(key, default)?;
        let v: f64 = parse_one(key, &raw)?;
        if !v.is_finite() {
            return Err(invalid(key, "must be finite"));
        }
        Ok(v)
    }

    pub fn int(&mut self, key: &str, default: Option<&str>) -> Result<u64, CliError> {
        let list = self.int_list(key, default)?;
        match list.as_slice() {
            [v] => Ok(*v),
            _ => Err(invalid(key, "expects a single value")),
        }
    }

    /// Fail on keys the recipe never asked for.
    pub fn finish(self) -> Result<BTreeMap<String, String>, CliError> {
        if let Some(extra) = self.raw.keys().find(|k| !self.seen.contains(*k)) {
            return Err(invalid(extra, "unknown key for this recipe"));
        }
        Ok(self.resolved)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_int_list("n", "10,100,1e3").unwrap(), vec![10, 100, 1000]);
        assert_eq!(parse_int_list("d", "3:9:3").unwrap(), vec![3, 6, 9]);
        assert_eq!(parse_int_list("d", "3:5").unwrap(), vec![3, 4, 5]);
        assert!(parse_int_list("d", "5:3").is_err());
        assert!(parse_int_list("d", "2.5").is_err());
        assert!(parse_float_list("s", "1,nan").is_err());
    }

    #[test]
    fn unknown_keys_are_reported() {
        let mut raw = BTreeMap::new();
        raw.insert("d".to_string(), "3".to_string());
        raw.insert("bogus".to_string(), "1".to_string());
        let mut p = Params::new(&raw);
        p.int("d", None).unwrap();
        match p.finish() {
            Err(CliError::Invalid { key, .. }) => assert_eq!(key, "bogus"),
            other => panic!("{other:?}"),
        }
    }
}
