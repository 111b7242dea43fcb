//! The system-description language.
//!
//! ```text
//! # System 2
//! single A1
//! family F B
//! interact A1 F
//! interact B F
//! derive F1 F2 B1
//! ```
//!
//! One directive per line; `#` starts a comment. `interact` takes exactly
//! two tokens, each a family letter or a single label, and keeps their
//! order. Declarations may appear in any order.

use std::collections::BTreeSet;

use bbgky_core::{Family, Index, PairedIndex, Single, SystemSpec};

use crate::error::ParseError;

/// A parsed `.bbgky` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecFile {
    pub spec: SystemSpec,
    pub targets: Vec<Vec<Single>>,
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

struct Token<'a> {
    text: &'a str,
    pos: Pos,
}

fn err(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError { line: pos.line, column: pos.column, message: message.into() }
}

fn tokenize(line: &str, line_no: usize) -> Vec<Token<'_>> {
    let code = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in code.char_indices().chain(std::iter::once((code.len(), ' '))) {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                let column = code[..s].chars().count() + 1;
                out.push(Token { text: &code[s..i], pos: Pos { line: line_no, column } });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    out
}

fn parse_single(tok: &Token<'_>) -> Result<Single, ParseError> {
    Single::parse(tok.text).map_err(|e| err(tok.pos, e.to_string()))
}

pub fn parse_spec(text: &str) -> Result<SpecFile, ParseError> {
    let mut families: Vec<(char, Pos)> = Vec::new();
    let mut singles: Vec<(Single, Pos)> = Vec::new();
    let mut interactions: Vec<[(Index, Pos); 2]> = Vec::new();
    let mut derives: Vec<Vec<(Single, Pos)>> = Vec::new();

    for (n, line) in text.lines().enumerate() {
        let tokens = tokenize(line, n + 1);
        let Some((head, args)) = tokens.split_first() else { continue };
        match head.text {
            "family" | "single" | "derive" if args.is_empty() => {
                return Err(err(head.pos, format!("`{}` needs at least one label", head.text)));
            }
            "family" => {
                for t in args {
                    let f = Family::parse(t.text).map_err(|e| err(t.pos, e.to_string()))?;
                    families.push((f.letter(), t.pos));
                }
            }
            "single" => {
                for t in args {
                    singles.push((parse_single(t)?, t.pos));
                }
            }
            "interact" => {
                if args.len() != 2 {
                    return Err(err(head.pos, format!("`interact` takes two tokens, found {}", args.len())));
                }
                let a = Index::parse(args[0].text).map_err(|e| err(args[0].pos, e.to_string()))?;
                let b = Index::parse(args[1].text).map_err(|e| err(args[1].pos, e.to_string()))?;
                interactions.push([(a, args[0].pos), (b, args[1].pos)]);
            }
            "derive" => {
                derives.push(args.iter().map(|t| parse_single(t).map(|s| (s, t.pos))).collect::<Result<_, _>>()?);
            }
            other => return Err(err(head.pos, format!("unknown directive `{other}`"))),
        }
    }

    let mut family_set = BTreeSet::new();
    for (f, pos) in &families {
        if !family_set.insert(*f) {
            return Err(err(*pos, format!("family {f} declared twice")));
        }
    }
    let mut single_set = BTreeSet::new();
    for (s, pos) in &singles {
        if family_set.contains(&s.letter()) {
            return Err(err(*pos, format!("{s} clashes with family {}", s.letter())));
        }
        if !single_set.insert(*s) {
            return Err(err(*pos, format!("single {s} declared twice")));
        }
    }
    let declared = |s: &Single| family_set.contains(&s.letter()) || single_set.contains(s);

    let mut pairs: Vec<PairedIndex> = Vec::new();
    for [(a, pa), (b, pb)] in &interactions {
        for (idx, pos) in [(a, pa), (b, pb)] {
            let known = match idx {
                Index::Family(f) => family_set.contains(&f.letter()),
                Index::Single(s) => declared(s),
            };
            if !known {
                return Err(err(*pos, format!("interaction refers to undeclared name {}", token_text(idx))));
            }
        }
        let pair = PairedIndex::new(a.clone(), b.clone()).map_err(|e| err(*pb, e.to_string()))?;
        let clash = pairs.iter().any(|p| {
            (p.first.overlaps(&pair.first) && p.second.overlaps(&pair.second))
                || (p.first.overlaps(&pair.second) && p.second.overlaps(&pair.first))
        });
        if clash {
            return Err(err(*pa, "interaction repeats pairs of an earlier declaration"));
        }
        pairs.push(pair);
    }

    let mut targets = Vec::new();
    for d in &derives {
        let mut seen = BTreeSet::new();
        for (s, pos) in d {
            if !declared(s) {
                return Err(err(*pos, format!("unknown subsystem {s}")));
            }
            if !seen.insert(*s) {
                return Err(err(*pos, format!("{s} repeated in derivation target")));
            }
        }
        targets.push(d.iter().map(|x| x.0).collect());
    }

    let spec = SystemSpec::new(family_set, single_set, pairs).map_err(|e| err(Pos { line: 1, column: 1 }, e.to_string()))?;
    Ok(SpecFile { spec, targets })
}

fn token_text(idx: &Index) -> String {
    match idx {
        Index::Single(s) => s.to_string(),
        Index::Family(f) => f.letter().to_string(),
    }
}

/// Writes a spec back in the DSL; `parse_spec` inverts it.
pub fn render_spec(spec: &SystemSpec, targets: &[Vec<Single>]) -> String {
    let mut out = String::new();
    for f in spec.families() {
        out.push_str(&format!("family {f}\n"));
    }
    for s in spec.singles() {
        out.push_str(&format!("single {s}\n"));
    }
    for p in spec.interactions() {
        out.push_str(&format!("interact {} {}\n", token_text(&p.first), token_text(&p.second)));
    }
    for t in targets {
        let labels: Vec<String> = t.iter().map(Single::to_string).collect();
        out.push_str(&format!("derive {}\n", labels.join(" ")));
    }
    out
}

/// Splits a target written as `A1 F1`, `A1,F1` or `A1F1`.
pub fn parse_labels(text: &str) -> Result<Vec<Single>, bbgky_core::Error> {
    let mut out = Vec::new();
    for chunk in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()) {
        let mut start = 0;
        let bytes: Vec<char> = chunk.chars().collect();
        let mut i = 1;
        while i <= bytes.len() {
            if i == bytes.len() || (bytes[i].is_ascii_uppercase() && bytes[i - 1].is_ascii_digit()) {
                let piece: String = bytes[start..i].iter().collect();
                out.push(Single::parse(&piece)?);
                start = i;
            }
            i += 1;
        }
    }
    if out.is_empty() {
        return Err(bbgky_core::Error::Spec("empty target".into()));
    }
    Ok(out)
}
