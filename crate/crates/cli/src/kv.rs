//! `key = value` sweep files.

use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KvError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("key `{key}`: cannot parse `{value}`")]
    Value { key: String, value: String },
}

pub const KEYS: &[&str] = &[
    "scheme",
    "N",
    "A",
    "eta_p",
    "eps_p2",
    "eta_d",
    "r",
    "R",
    "axis",
    "from",
    "to",
    "points",
    "spacing",
    "optimize_r",
];

/// Parsed file; `#` starts a comment, blank lines are skipped.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct KvFile(BTreeMap<String, String>);

impl KvFile {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or(KvError::Syntax { line })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(KvError::Syntax { line });
            }
            if !KEYS.contains(&k) {
                return Err(KvError::UnknownKey {
                    line,
                    key: k.into(),
                });
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(KvError::Duplicate {
                    line,
                    key: k.into(),
                });
            }
        }
        Ok(Self(map))
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, KvError> {
        self.str(key)
            .map(|v| {
                v.parse().map_err(|_| KvError::Value {
                    key: key.into(),
                    value: v.into(),
                })
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_numbers() {
        let f = KvFile::parse("# sweep\nN = 1e7\n\nA=1e-5 # weak\noptimize_r = true\n").unwrap();
        assert_eq!(f.get::<f64>("N").unwrap(), Some(1e7));
        assert_eq!(f.get::<f64>("A").unwrap(), Some(1e-5));
        assert_eq!(f.get::<bool>("optimize_r").unwrap(), Some(true));
        assert_eq!(f.get::<f64>("R").unwrap(), None);
    }

    #[test]
    fn rejects_bad_lines() {
        assert_eq!(KvFile::parse("N 1e7"), Err(KvError::Syntax { line: 1 }));
        assert!(matches!(
            KvFile::parse("\nn = 1"),
            Err(KvError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            KvFile::parse("N=1\nN=2"),
            Err(KvError::Duplicate { line: 2, .. })
        ));
        let f = KvFile::parse("N = many").unwrap();
        assert!(f.get::<f64>("N").is_err());
    }
}
