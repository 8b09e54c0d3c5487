// SPDX-License-Identifier: Apache-2.0

//! Source language: lexing, parsing, validation and loop normalization.

pub mod ast;
pub mod desugar;
mod lexer;
mod parser;
pub mod pretty;
pub mod validate;

use std::fmt;

use thiserror::Error;

pub use parser::{parse, parse_named};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: use of undeclared identifier `{name}`")]
    Undeclared { pos: Pos, name: String },
    #[error("{pos}: `{name}` is declared twice")]
    Redeclared { pos: Pos, name: String },
    #[error("{pos}: `{name}` used as {expected}")]
    Kind { pos: Pos, name: String, expected: &'static str },
    #[error("{pos}: counter discipline violated: {msg}")]
    CounterDiscipline { pos: Pos, msg: String },
    #[error("{pos}: invalid loop: {msg}")]
    Loop { pos: Pos, msg: String },
    #[error("{pos}: invalid assertion: {msg}")]
    Assertion { pos: Pos, msg: String },
}

impl FrontendError {
    pub(crate) fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        FrontendError::Syntax { pos, msg: msg.into() }
    }

    /// Replace an unknown position with `fallback`.
    pub(crate) fn at(mut self, fallback: Pos) -> Self {
        let slot = match &mut self {
            FrontendError::Syntax { pos, .. }
            | FrontendError::Undeclared { pos, .. }
            | FrontendError::Redeclared { pos, .. }
            | FrontendError::Kind { pos, .. }
            | FrontendError::CounterDiscipline { pos, .. }
            | FrontendError::Loop { pos, .. }
            | FrontendError::Assertion { pos, .. } => pos,
        };
        if *slot == Pos::default() {
            *slot = fallback;
        }
        self
    }

    pub fn pos(&self) -> Pos {
        match self {
            FrontendError::Syntax { pos, .. }
            | FrontendError::Undeclared { pos, .. }
            | FrontendError::Redeclared { pos, .. }
            | FrontendError::Kind { pos, .. }
            | FrontendError::CounterDiscipline { pos, .. }
            | FrontendError::Loop { pos, .. }
            | FrontendError::Assertion { pos, .. } => *pos,
        }
    }

    /// `file:line:col: message`, the format diagnostics are printed in.
    pub fn render(&self, file: &str) -> String {
        let msg = self.to_string();
        let body = msg.split_once(": ").map(|(_, m)| m).unwrap_or(&msg);
        format!("{file}:{}:{}: {body}", self.pos().line, self.pos().col)
    }
}
