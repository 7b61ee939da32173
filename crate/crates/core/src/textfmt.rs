//! Line-oriented `key = value` text format shared by the geometry, scene and
//! spectrum configuration files.
//!
//! ```text
//! # comment
//! key = value
//! [block]
//! key = value
//! ```
//!
//! Top-level entries precede the first `[block]` header. Blocks may repeat.

use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub line: usize,
    pub name: String,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone)]
pub struct Document {
    pub source: String,
    pub top: Vec<Entry>,
    pub blocks: Vec<Block>,
}

impl Document {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut top = Vec::new();
        let mut blocks: Vec<Block> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                    path: source.to_string(),
                    line,
                    message: format!("unterminated block header `{content}`"),
                })?;
                let name = name.trim();
                if name.is_empty() {
                    return Err(Error::Parse {
                        path: source.to_string(),
                        line,
                        message: "empty block name".into(),
                    });
                }
                blocks.push(Block {
                    line,
                    name: name.to_string(),
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                path: source.to_string(),
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let entry = Entry {
                line,
                key: key.trim().to_string(),
                value: value.trim().to_string(),
            };
            match blocks.last_mut() {
                Some(block) => block.entries.push(entry),
                None => top.push(entry),
            }
        }
        Ok(Document {
            source: source.to_string(),
            top,
            blocks,
        })
    }

    pub fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.source.clone(),
            line,
            message: message.into(),
        }
    }

    /// Rejects keys outside `allowed`, so typos surface with a line number.
    pub fn check_keys(&self, entries: &[Entry], allowed: &[&str]) -> Result<()> {
        for e in entries {
            if !allowed.contains(&e.key.as_str()) {
                return Err(self.error(e.line, format!("unknown key `{}`", e.key)));
            }
        }
        Ok(())
    }

    pub fn scalar<T: FromStr>(&self, entry: &Entry) -> Result<T> {
        entry
            .value
            .parse()
            .map_err(|_| self.error(entry.line, format!("invalid value for `{}`: `{}`", entry.key, entry.value)))
    }

    /// Comma- or whitespace-separated list of numbers.
    pub fn list<T: FromStr>(&self, entry: &Entry) -> Result<Vec<T>> {
        split_list(&entry.value)
            .map(|tok| {
                tok.parse().map_err(|_| {
                    self.error(entry.line, format!("invalid number `{tok}` in `{}`", entry.key))
                })
            })
            .collect()
    }

    pub fn fixed<T: FromStr + Copy, const N: usize>(&self, entry: &Entry) -> Result<[T; N]> {
        let v: Vec<T> = self.list(entry)?;
        v.try_into().map_err(|v: Vec<T>| {
            self.error(
                entry.line,
                format!("`{}` expects {N} values, found {}", entry.key, v.len()),
            )
        })
    }

    /// `r,c` pairs separated by whitespace or `;`.
    pub fn pairs<T: FromStr>(&self, entry: &Entry) -> Result<Vec<(T, T)>> {
        entry
            .value
            .split(|c: char| c.is_whitespace() || c == ';')
            .filter(|s| !s.is_empty())
            .map(|pair| {
                let (a, b) = pair
                    .split_once(',')
                    .ok_or_else(|| self.error(entry.line, format!("expected `a,b` pair, found `{pair}`")))?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<T>()
                        .map_err(|_| self.error(entry.line, format!("invalid number in pair `{pair}`")))
                };
                Ok((parse(a)?, parse(b)?))
            })
            .collect()
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
}
