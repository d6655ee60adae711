//! Translation contract used by the simulator.
//!
//! A translator receives the source words read so far and the target
//! tokens already committed, and returns only the continuation. It never
//! rewrites the committed prefix.

mod process;
mod sov;

use thiserror::Error;

pub use process::{format_request, parse_response, serve, ProcessTranslator};
pub use sov::{Category, GlossDictionary, GlossEntry, PrefixAnalysis, SovToyTranslator};

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("forced prefix is not a prefix of the source")]
    NotAPrefix,
    #[error("no dictionary entry for {0:?}")]
    UnknownWord(String),
    #[error("forced prefix cannot be matched at target position {position}")]
    AmbiguousPrefix { position: usize },
    #[error("dictionary line {line}: {message}")]
    Dictionary { line: usize, message: String },
    #[error("external translator: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub trait Translator: Send + Sync {
    fn translate(&self, source: &[String], forced_prefix: &[String]) -> Result<Vec<String>, TranslateError>;
}

impl<T: Translator + ?Sized> Translator for &T {
    fn translate(&self, source: &[String], forced_prefix: &[String]) -> Result<Vec<String>, TranslateError> {
        (**self).translate(source, forced_prefix)
    }
}

impl<T: Translator + ?Sized> Translator for Box<T> {
    fn translate(&self, source: &[String], forced_prefix: &[String]) -> Result<Vec<String>, TranslateError> {
        (**self).translate(source, forced_prefix)
    }
}

/// Identity translation; useful for exercising latency metrics.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoTranslator;

impl Translator for EchoTranslator {
    fn translate(&self, source: &[String], forced_prefix: &[String]) -> Result<Vec<String>, TranslateError> {
        if !source.starts_with(forced_prefix) {
            return Err(TranslateError::NotAPrefix);
        }
        Ok(source[forced_prefix.len()..].to_vec())
    }
}
