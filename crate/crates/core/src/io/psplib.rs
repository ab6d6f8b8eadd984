//! Reader for ProGen/max `.sch` files.
//!
//! Layout, one record per line:
//!
//! ```text
//! n K [0 0]                                   header: real activities, resources
//! id modes nsucc succ... [w]...               n + 2 rows, ids 0..=n+1
//! id mode duration demand...                  n + 2 rows
//! capacity...                                 one row of K values
//! ```

use thiserror::Error;

use crate::model::{Instance, Precedence};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct PsplibError {
    /// 1-based; 0 refers to the end of input.
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> PsplibError {
    PsplibError { line, message: message.into() }
}

fn int(line: usize, tok: &str) -> Result<i64, PsplibError> {
    tok.parse().map_err(|_| err(line, format!("invalid integer '{tok}'")))
}

fn count(line: usize, tok: &str, what: &str) -> Result<usize, PsplibError> {
    let v = int(line, tok)?;
    usize::try_from(v).map_err(|_| err(line, format!("negative {what} {v}")))
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        self.inner.by_ref().map(|(i, l)| (i + 1, l)).find(|(_, l)| !l.trim().is_empty())
    }

    fn expect(&mut self, section: &str) -> Result<(usize, &'a str), PsplibError> {
        self.next().ok_or_else(|| err(0, format!("truncated {section} section")))
    }
}

/// Splits `[a] [b c]` into groups; whitespace inside and between groups is
/// free.
fn bracket_groups(line: usize, text: &str) -> Result<Vec<Vec<i64>>, PsplibError> {
    let mut groups = Vec::new();
    let mut rest = text.trim_start();
    while !rest.is_empty() {
        let body = rest
            .strip_prefix('[')
            .ok_or_else(|| err(line, format!("expected '[' at '{rest}'")))?;
        let close = body.find(']').ok_or_else(|| err(line, "unclosed '['"))?;
        let values = body[..close].split_whitespace().map(|t| int(line, t)).collect::<Result<_, _>>()?;
        groups.push(values);
        rest = body[close + 1..].trim_start();
    }
    Ok(groups)
}

/// Parses a `.sch` file. Dummy activities are kept, so the result has
/// `n + 2` activities. The horizon is left unset.
pub fn parse_psplib(text: &str) -> Result<Instance, PsplibError> {
    let mut lines = Lines { inner: text.lines().enumerate() };

    let (hl, header) = lines.next().ok_or_else(|| err(0, "empty file"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() < 2 {
        return Err(err(hl, "malformed header: expected activity and resource counts"));
    }
    let real = count(hl, head[0], "activity count")?;
    let k = count(hl, head[1], "resource count")?;
    for tok in &head[2..] {
        if int(hl, tok)? != 0 {
            return Err(err(hl, format!("unsupported non-renewable or doubly constrained resources ({tok})")));
        }
    }
    let n = real + 2;

    let mut precedences = Vec::new();
    for id in 0..n {
        let (ln, line) = lines.expect("activity")?;
        let (plain, brackets) = match line.find('[') {
            Some(p) => (&line[..p], &line[p..]),
            None => (line, ""),
        };
        let toks: Vec<&str> = plain.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(err(ln, "expected id, mode count, and successor count"));
        }
        check_id(ln, toks[0], id)?;
        let nsucc = count(ln, toks[2], "successor count")?;
        if toks.len() != 3 + nsucc {
            return Err(err(ln, format!("expected {nsucc} successors, found {}", toks.len() - 3)));
        }
        let groups = bracket_groups(ln, brackets)?;
        if groups.len() != nsucc {
            return Err(err(ln, format!("expected {nsucc} weight groups, found {}", groups.len())));
        }
        for (tok, group) in toks[3..].iter().zip(&groups) {
            let &[w] = group.as_slice() else {
                return Err(err(ln, format!("expected exactly one weight per group, found {}", group.len())));
            };
            precedences.push(Precedence::new(id, count(ln, tok, "successor id")?, w));
        }
    }

    let mut durations = Vec::with_capacity(n);
    let mut demands = Vec::with_capacity(n);
    for id in 0..n {
        let (ln, line) = lines.expect("duration")?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 + k {
            return Err(err(ln, format!("expected id, mode, duration, and {k} demands")));
        }
        check_id(ln, toks[0], id)?;
        durations.push(int(ln, toks[2])?);
        demands.push(toks[3..].iter().map(|t| int(ln, t)).collect::<Result<Vec<_>, _>>()?);
    }

    let (cl, cap_line) = lines.expect("capacity")?;
    let capacities: Vec<i64> = cap_line.split_whitespace().map(|t| int(cl, t)).collect::<Result<_, _>>()?;
    if capacities.len() != k {
        return Err(err(cl, format!("expected {k} capacities, found {}", capacities.len())));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(err(ln, "unexpected content after capacity row"));
    }

    Ok(Instance { durations, demands, capacities, precedences, horizon: None })
}

fn check_id(line: usize, tok: &str, expected: usize) -> Result<(), PsplibError> {
    let id = count(line, tok, "activity id")?;
    if id != expected {
        return Err(err(line, format!("expected activity {expected}, found {id}")));
    }
    Ok(())
}
