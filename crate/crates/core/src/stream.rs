//! Plain-text update streams.
//!
//! ```text
//! # comment
//! BATCH
//! - 3 4
//! + 1 2 5
//! END
//! ```
//!
//! Serialization writes deletions before insertions, which is also the order
//! in which a batch applies them.

use std::fmt;

use thiserror::Error;

use crate::edge::{canonical_edge, VertexId};
use crate::engine::UpdateBatch;
use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Edge { line: usize, source: Error },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StreamFile {
    pub batches: Vec<UpdateBatch>,
}

impl StreamFile {
    pub fn parse(text: &str, rank: usize) -> Result<Self, StreamError> {
        let mut batches = Vec::new();
        let mut open: Option<(usize, UpdateBatch)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let syntax = |message: &str| StreamError::Syntax { line, message: message.to_string() };
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            let head = tokens.next().expect("nonempty line");
            match head {
                "BATCH" => {
                    if open.is_some() {
                        return Err(syntax("BATCH inside an open batch"));
                    }
                    if tokens.next().is_some() {
                        return Err(syntax("unexpected tokens after BATCH"));
                    }
                    open = Some((line, UpdateBatch::default()));
                }
                "END" => {
                    let Some((_, batch)) = open.take() else {
                        return Err(syntax("END without BATCH"));
                    };
                    if tokens.next().is_some() {
                        return Err(syntax("unexpected tokens after END"));
                    }
                    batches.push(batch);
                }
                "+" | "-" => {
                    let Some((_, batch)) = open.as_mut() else {
                        return Err(syntax("update outside of a batch"));
                    };
                    let vertices = tokens
                        .map(|t| t.parse::<VertexId>().map_err(|_| syntax(&format!("bad vertex id `{t}`"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    let key = canonical_edge(&vertices, rank).map_err(|source| StreamError::Edge { line, source })?;
                    if head == "+" {
                        batch.insertions.push(vertices);
                    } else {
                        batch.deletions.push(key);
                    }
                }
                other => return Err(syntax(&format!("unknown directive `{other}`"))),
            }
        }
        if let Some((line, _)) = open {
            return Err(StreamError::Syntax { line, message: "batch is never closed".into() });
        }
        Ok(Self { batches })
    }
}

impl fmt::Display for StreamFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let write_edge = |f: &mut fmt::Formatter<'_>, sign: char, vs: &[VertexId]| -> fmt::Result {
            write!(f, "{sign}")?;
            for v in vs {
                write!(f, " {v}")?;
            }
            writeln!(f)
        };
        for batch in &self.batches {
            writeln!(f, "BATCH")?;
            for key in &batch.deletions {
                write_edge(f, '-', key.vertices())?;
            }
            for vs in &batch.insertions {
                write_edge(f, '+', vs)?;
            }
            writeln!(f, "END")?;
        }
        Ok(())
    }
}
