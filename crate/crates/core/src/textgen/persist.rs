//! Plain-text model file.
//!
//! ```text
//! earpiece-ngram 1
//! order <n>
//! alpha <float>
//! corpus <line count> <name>
//! vocab <V>
//! <token>                       V lines, sorted, boundary marker included
//! counts <C>
//! <h_1> .. <h_n-1> <next> <c>   C lines, sorted by history then next token
//! lines <L>
//! <word> <word> ..              L lines: distinct words of each corpus line
//! end
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so writing a loaded
//! model reproduces the original bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::model::{CorpusInfo, NGramModel};
use super::token::{classify, TokenKind, BOUNDARY};
use super::topic::CooccurrenceIndex;
use super::TextgenError;

const MAGIC: &str = "earpiece-ngram 1";

impl NGramModel {
    pub fn to_model_string(&self) -> String {
        let mut out = String::new();
        // writing to a String cannot fail
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "order {}", self.order);
        let _ = writeln!(out, "alpha {}", self.alpha);
        let _ = writeln!(out, "corpus {} {}", self.corpus.lines, self.corpus.name);
        let _ = writeln!(out, "vocab {}", self.vocab.len());
        for token in &self.vocab {
            let _ = writeln!(out, "{token}");
        }
        let n_counts: usize = self.counts.values().map(BTreeMap::len).sum();
        let _ = writeln!(out, "counts {n_counts}");
        for (history, row) in &self.counts {
            for (next, count) in row {
                let _ = writeln!(out, "{} {next} {count}", history.join(" "));
            }
        }
        let _ = writeln!(out, "lines {}", self.index.lines.len());
        for line in &self.index.lines {
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out.push_str("end\n");
        out
    }

    pub fn from_model_str(text: &str) -> Result<Self, TextgenError> {
        Parser::new(text).parse()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TextgenError> {
        let path = path.as_ref();
        fs::write(path, self.to_model_string()).map_err(|source| TextgenError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TextgenError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| TextgenError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_model_str(&text)
    }
}

struct Parser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate(),
            line_no: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> TextgenError {
        TextgenError::Parse {
            line: self.line_no,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str, TextgenError> {
        match self.lines.next() {
            Some((i, line)) => {
                self.line_no = i + 1;
                Ok(line)
            }
            None => {
                self.line_no += 1;
                Err(self.err("unexpected end of file"))
            }
        }
    }

    /// Reads `<key> <rest>` and returns `rest`.
    fn keyed(&mut self, key: &str) -> Result<&'a str, TextgenError> {
        let line = self.next_line()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected `{key} ...`")))
    }

    fn keyed_number<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, TextgenError> {
        let rest = self.keyed(key)?;
        rest.parse().map_err(|_| self.err(format!("bad {key} value `{rest}`")))
    }

    fn token(&self, surface: &str) -> Result<String, TextgenError> {
        classify(surface)
            .map(|_| surface.to_string())
            .ok_or_else(|| self.err(format!("invalid token `{surface}`")))
    }

    fn parse(mut self) -> Result<NGramModel, TextgenError> {
        if self.next_line()? != MAGIC {
            return Err(self.err("not an earpiece n-gram model"));
        }
        let order: usize = self.keyed_number("order")?;
        if order < 2 {
            return Err(self.err(format!("order {order} is below 2")));
        }
        let alpha: f64 = self.keyed_number("alpha")?;
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(self.err(format!("invalid alpha {alpha}")));
        }
        let corpus_line = self.keyed("corpus")?;
        let (lines, name) = corpus_line.split_once(' ').unwrap_or((corpus_line, ""));
        let lines: usize = lines.parse().map_err(|_| self.err("bad corpus line count"))?;
        let corpus = CorpusInfo {
            name: name.to_string(),
            lines,
        };

        let n_vocab: usize = self.keyed_number("vocab")?;
        let mut vocab = Vec::with_capacity(n_vocab);
        for _ in 0..n_vocab {
            let line = self.next_line()?;
            let token = self.token(line)?;
            if vocab.last().is_some_and(|prev: &String| *prev >= token) {
                return Err(self.err("vocabulary is not sorted and unique"));
            }
            vocab.push(token);
        }
        if vocab.binary_search_by(|t| t.as_str().cmp(BOUNDARY)).is_err() {
            return Err(self.err("vocabulary lacks the boundary marker"));
        }

        let n_counts: usize = self.keyed_number("counts")?;
        let mut counts: BTreeMap<Vec<String>, BTreeMap<String, u64>> = BTreeMap::new();
        for _ in 0..n_counts {
            let line = self.next_line()?;
            let fields: Vec<&str> = line.split(' ').collect();
            if fields.len() != order + 1 {
                return Err(self.err(format!("expected {} fields, found {}", order + 1, fields.len())));
            }
            let count: u64 = fields[order].parse().map_err(|_| self.err("bad count"))?;
            if count == 0 {
                return Err(self.err("zero count"));
            }
            let mut tokens = Vec::with_capacity(order);
            for surface in &fields[..order] {
                let token = self.token(surface)?;
                if vocab.binary_search(&token).is_err() {
                    return Err(self.err(format!("token `{token}` not in vocabulary")));
                }
                tokens.push(token);
            }
            let next = tokens.pop().expect("order >= 2");
            if counts.entry(tokens).or_default().insert(next, count).is_some() {
                return Err(self.err("duplicate n-gram"));
            }
        }

        let n_lines: usize = self.keyed_number("lines")?;
        let mut index_lines = Vec::with_capacity(n_lines);
        for _ in 0..n_lines {
            let line = self.next_line()?;
            let words = if line.is_empty() {
                Vec::new()
            } else {
                line.split(' ')
                    .map(|w| match classify(w) {
                        Some(TokenKind::Word) => Ok(w.to_string()),
                        _ => Err(self.err(format!("invalid word `{w}`"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?
            };
            index_lines.push(words);
        }
        if self.next_line()? != "end" {
            return Err(self.err("expected `end`"));
        }

        Ok(NGramModel::assemble(
            order,
            alpha,
            vocab,
            counts,
            corpus,
            CooccurrenceIndex { lines: index_lines },
        ))
    }
}
