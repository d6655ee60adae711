use std::fmt;
use std::str::FromStr;

use super::IclpError;

const PAD: &str = "<s>";

/// One sparse feature template over a word prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureTemplate {
    Bias,
    /// The last `n` words of the prefix, left-padded.
    TailWords(usize),
    /// Suffix of the last word of the given length in characters.
    Suffix(usize),
    /// Prefix length bucket: 1, 2, 3, 4-6, 7-10, 11+.
    LengthBucket,
}

impl FeatureTemplate {
    fn name(self) -> String {
        match self {
            Self::Bias => "bias".into(),
            Self::TailWords(n) => format!("w{n}"),
            Self::Suffix(n) => format!("suf{n}"),
            Self::LengthBucket => "len".into(),
        }
    }
}

impl fmt::Display for FeatureTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for FeatureTemplate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_n = |rest: &str| rest.parse::<usize>().ok().filter(|&n| n > 0);
        match s {
            "bias" => Ok(Self::Bias),
            "len" => Ok(Self::LengthBucket),
            _ => {
                if let Some(n) = s.strip_prefix("suf").and_then(parse_n) {
                    Ok(Self::Suffix(n))
                } else if let Some(n) = s.strip_prefix('w').and_then(parse_n) {
                    Ok(Self::TailWords(n))
                } else {
                    Err(format!("unknown feature template {s:?}"))
                }
            }
        }
    }
}

fn length_bucket(len: usize) -> &'static str {
    match len {
        0 => "0",
        1 => "1",
        2 => "2",
        3 => "3",
        4..=6 => "4-6",
        7..=10 => "7-10",
        _ => "11+",
    }
}

/// Declarative list of enabled feature templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    templates: Vec<FeatureTemplate>,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        use FeatureTemplate::*;
        Self {
            templates: vec![
                Bias,
                TailWords(1),
                TailWords(2),
                TailWords(3),
                Suffix(2),
                Suffix(3),
                Suffix(4),
                LengthBucket,
            ],
        }
    }
}

impl FeatureSpec {
    pub fn new(templates: Vec<FeatureTemplate>) -> Self {
        Self { templates }
    }

    pub fn templates(&self) -> &[FeatureTemplate] {
        &self.templates
    }

    /// Feature strings for a prefix. Empty prefixes yield only prefix-free features.
    pub fn extract(&self, prefix: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(self.templates.len());
        let last = prefix.last().map(String::as_str);
        for &template in &self.templates {
            match template {
                FeatureTemplate::Bias => out.push("bias".to_owned()),
                FeatureTemplate::TailWords(n) => {
                    let mut parts: Vec<&str> = Vec::with_capacity(n);
                    for k in (1..=n).rev() {
                        parts.push(if prefix.len() >= k {
                            &prefix[prefix.len() - k]
                        } else {
                            PAD
                        });
                    }
                    out.push(format!("w{n}={}", parts.join("|")));
                }
                FeatureTemplate::Suffix(n) => {
                    if let Some(word) = last {
                        let chars: Vec<char> = word.chars().collect();
                        if chars.len() >= n {
                            let suffix: String = chars[chars.len() - n..].iter().collect();
                            out.push(format!("suf{n}={suffix}"));
                        }
                    }
                }
                FeatureTemplate::LengthBucket => {
                    out.push(format!("len={}", length_bucket(prefix.len())))
                }
            }
        }
        out
    }

    /// True when `feature` was produced by an enabled template.
    pub fn defines(&self, feature: &str) -> bool {
        let name = feature.split_once('=').map_or(feature, |(name, _)| name);
        self.templates.iter().any(|t| t.name() == name)
    }

    pub(crate) fn parse(line: usize, text: &str) -> Result<Self, IclpError> {
        let templates = text
            .split_whitespace()
            .map(|t| {
                t.parse().map_err(|message| IclpError::ModelFormat { line, message })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { templates })
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.templates.iter().map(|t| t.name()).collect();
        f.write_str(&names.join(" "))
    }
}
