//! Simple kinds over a single ground kind `o`.
//!
//! Every kind has the shape `k1 -> k2 -> ... -> kn -> o` (arrows associate to
//! the right), so a kind is represented by its list of argument kinds.

use std::fmt;

use thiserror::Error;

/// A simple kind. `args` is empty for the ground kind `o`; otherwise the kind
/// is `args[0] -> args[1] -> ... -> o`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Kind {
    pub args: Vec<Kind>,
}

impl Kind {
    /// The ground kind `o`.
    pub fn ground() -> Kind {
        Kind { args: Vec::new() }
    }

    /// `from -> to`, normalised into the argument-list form.
    pub fn arrow(from: Kind, to: Kind) -> Kind {
        let mut args = Vec::with_capacity(1 + to.args.len());
        args.push(from);
        args.extend(to.args);
        Kind { args }
    }

    pub fn is_ground(&self) -> bool {
        self.args.is_empty()
    }

    /// For `k1 -> rest`, returns `(k1, rest)`.
    pub fn split_arrow(&self) -> Option<(Kind, Kind)> {
        let (first, rest) = self.args.split_first()?;
        Some((first.clone(), Kind { args: rest.to_vec() }))
    }

    /// Nesting depth: 0 for `o`, 1 + max over arguments otherwise... with the
    /// convention that `o -> o` has depth 1.
    pub fn depth(&self) -> usize {
        self.args.iter().map(|a| a.depth() + 1).max().unwrap_or(0)
    }

    /// Number of `o` occurrences when the kind is written out in full.
    pub fn size(&self) -> usize {
        1 + self.args.iter().map(Kind::size).sum::<usize>()
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for arg in &self.args {
            if arg.is_ground() {
                write!(f, "o -> ")?;
            } else {
                write!(f, "({}) -> ", arg)?;
            }
        }
        write!(f, "o")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KindParseError {
    #[error("unexpected character {0:?} in kind")]
    UnexpectedChar(char),
    #[error("unexpected end of kind expression")]
    UnexpectedEnd,
    #[error("expected {expected:?} at position {pos}")]
    Expected { expected: &'static str, pos: usize },
    #[error("trailing input after kind at position {0}")]
    TrailingInput(usize),
}

/// Parses `o`, right-associative `->`, and parentheses.
pub fn parse_kind(input: &str) -> Result<Kind, KindParseError> {
    let mut p = KindParser { input: input.as_bytes(), pos: 0 };
    let kind = p.kind()?;
    p.skip_ws();
    if p.pos != p.input.len() {
        return Err(KindParseError::TrailingInput(p.pos));
    }
    Ok(kind)
}

pub(crate) struct KindParser<'a> {
    pub input: &'a [u8],
    pub pos: usize,
}

impl<'a> KindParser<'a> {
    pub(crate) fn skip_ws(&mut self) {
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.input.get(self.pos).copied()
    }

    /// One kind, consuming as much input as an arrow chain allows.
    pub(crate) fn kind(&mut self) -> Result<Kind, KindParseError> {
        let head = self.atom()?;
        self.skip_ws();
        if self.input[self.pos..].starts_with(b"->") {
            self.pos += 2;
            let rest = self.kind()?;
            Ok(Kind::arrow(head, rest))
        } else {
            Ok(head)
        }
    }

    fn atom(&mut self) -> Result<Kind, KindParseError> {
        match self.peek() {
            Some(b'o') => {
                self.pos += 1;
                Ok(Kind::ground())
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.kind()?;
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    Ok(inner)
                } else {
                    Err(KindParseError::Expected { expected: ")", pos: self.pos })
                }
            }
            Some(c) => Err(KindParseError::UnexpectedChar(c as char)),
            None => Err(KindParseError::UnexpectedEnd),
        }
    }
}
