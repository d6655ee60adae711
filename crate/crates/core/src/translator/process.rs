//! Line-delimited adapter for translators running in another process.
//!
//! Request: `id<TAB>space-joined source<TAB>space-joined prefix`.
//! Response: `id<TAB>space-joined continuation`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use super::{TranslateError, Translator};

pub fn format_request(id: u64, source: &[String], prefix: &[String]) -> String {
    format!("{id}\t{}\t{}", source.join(" "), prefix.join(" "))
}

/// Parses a response line into `(id, continuation)`.
pub fn parse_response(line: &str) -> Result<(u64, Vec<String>), TranslateError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let (id, rest) = line.split_once('\t').unwrap_or((line, ""));
    let id = id
        .parse()
        .map_err(|_| TranslateError::Protocol(format!("bad response id in {line:?}")))?;
    Ok((id, rest.split_whitespace().map(str::to_owned).collect()))
}

fn parse_request(line: &str) -> Result<(u64, Vec<String>, Vec<String>), TranslateError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let mut fields = line.splitn(3, '\t');
    let (Some(id), Some(source)) = (fields.next(), fields.next()) else {
        return Err(TranslateError::Protocol(format!("malformed request {line:?}")));
    };
    let id = id
        .parse()
        .map_err(|_| TranslateError::Protocol(format!("bad request id in {line:?}")))?;
    let split = |s: &str| s.split_whitespace().map(str::to_owned).collect();
    Ok((id, split(source), split(fields.next().unwrap_or(""))))
}

/// Answers requests from `input` with `translator` until end of input.
/// A failed translation is answered with an empty continuation and logged.
pub fn serve<R: BufRead, W: Write, T: Translator>(input: R, mut output: W, translator: &T) -> Result<(), TranslateError> {
    for line in input.lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (id, source, prefix) = parse_request(&line)?;
        let continuation = translator.translate(&source, &prefix).unwrap_or_else(|e| {
            log::warn!("request {id}: {e}");
            Vec::new()
        });
        writeln!(output, "{id}\t{}", continuation.join(" "))?;
        output.flush()?;
    }
    Ok(())
}

struct Channel {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// Talks to a child process over stdin/stdout. Requests are serialized.
pub struct ProcessTranslator {
    channel: Mutex<Channel>,
    next_id: AtomicU64,
}

impl ProcessTranslator {
    pub fn spawn<S: AsRef<str>>(program: &str, args: &[S]) -> Result<Self, TranslateError> {
        let mut child = Command::new(program)
            .args(args.iter().map(AsRef::as_ref))
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            channel: Mutex::new(Channel {
                child,
                stdin,
                stdout,
            }),
            next_id: AtomicU64::new(1),
        })
    }
}

impl Translator for ProcessTranslator {
    fn translate(&self, source: &[String], forced_prefix: &[String]) -> Result<Vec<String>, TranslateError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let mut ch = self
            .channel
            .lock()
            .map_err(|_| TranslateError::Protocol("adapter lock poisoned".into()))?;
        writeln!(ch.stdin, "{}", format_request(id, source, forced_prefix))?;
        ch.stdin.flush()?;
        let mut line = String::new();
        if ch.stdout.read_line(&mut line)? == 0 {
            return Err(TranslateError::Protocol("adapter closed its output".into()));
        }
        let (got, continuation) = parse_response(&line)?;
        if got != id {
            return Err(TranslateError::Protocol(format!(
                "response id {got} does not match request {id}"
            )));
        }
        Ok(continuation)
    }
}

impl Drop for ProcessTranslator {
    fn drop(&mut self) {
        if let Ok(ch) = self.channel.get_mut() {
            let _ = ch.child.kill();
            let _ = ch.child.wait();
        }
    }
}
