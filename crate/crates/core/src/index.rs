//! Subsystem labels.
//!
//! A [`Single`] names one concrete subsystem (`A1`, `F2`). A [`Family`] names
//! a formally infinite set of same-type subsystems (`F`), minus an explicit
//! exclusion set (`F/F1`). Where a family appears decides its meaning:
//!
//! * inside a density matrix outside any trace it is the whole family,
//!   rendered `{F}`;
//! * as an operator index it is a summation, rendered `sum_{F}`;
//! * inside the argument of a traced commutator whose trace index is that
//!   family it is the bound summation variable, rendered `F`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use core::fmt;

use crate::error::Error;

fn check_letter(letter: char) -> Result<(), Error> {
    if letter.is_ascii_uppercase() {
        Ok(())
    } else {
        Err(Error::InvalidLabel(format!("{letter:?} is not an upper-case ASCII letter")))
    }
}

/// One concrete subsystem, written `<Letter><ordinal>` with ordinal ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Single {
    letter: char,
    ordinal: u32,
}

impl Single {
    pub fn new(letter: char, ordinal: u32) -> Result<Self, Error> {
        check_letter(letter)?;
        if ordinal == 0 {
            return Err(Error::InvalidLabel(format!("{letter}0: ordinals start at 1")));
        }
        Ok(Single { letter, ordinal })
    }

    /// Parses `A1`, `F12`, ... Leading zeros are rejected so that labels
    /// round-trip through their display form.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let mut chars = s.chars();
        let letter = chars.next().ok_or_else(|| Error::InvalidLabel(String::from("empty label")))?;
        let digits = chars.as_str();
        if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::InvalidLabel(format!("{s:?} is not of the form A1")));
        }
        let ordinal = digits
            .parse::<u32>()
            .map_err(|_| Error::InvalidLabel(format!("{s:?}: ordinal out of range")))?;
        Single::new(letter, ordinal)
    }

    pub fn letter(&self) -> char {
        self.letter
    }

    pub fn ordinal(&self) -> u32 {
        self.ordinal
    }
}

impl fmt::Display for Single {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.letter, self.ordinal)
    }
}

/// A family of same-letter subsystems minus an exclusion set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Family {
    letter: char,
    excluded: BTreeSet<u32>,
}

impl Family {
    pub fn new(letter: char) -> Result<Self, Error> {
        check_letter(letter)?;
        Ok(Family { letter, excluded: BTreeSet::new() })
    }

    /// Builds `letter / excluded`. Every excluded label must carry the
    /// family's letter.
    pub fn with_exclusions<I>(letter: char, excluded: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = Single>,
    {
        let mut family = Family::new(letter)?;
        for s in excluded {
            if s.letter != letter {
                return Err(Error::structural(format!("{s} cannot be excluded from family {letter}")));
            }
            if !family.excluded.insert(s.ordinal) {
                return Err(Error::structural(format!("{s} excluded twice from family {letter}")));
            }
        }
        Ok(family)
    }

    pub fn parse(s: &str) -> Result<Self, Error> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(letter), None) => Family::new(letter),
            _ => Err(Error::InvalidLabel(format!("{s:?} is not a family letter"))),
        }
    }

    pub fn letter(&self) -> char {
        self.letter
    }

    pub fn excluded(&self) -> impl Iterator<Item = Single> + '_ {
        self.excluded.iter().map(move |&ordinal| Single { letter: self.letter, ordinal })
    }

    pub fn excluded_count(&self) -> usize {
        self.excluded.len()
    }

    pub fn excludes(&self, s: &Single) -> bool {
        s.letter == self.letter && self.excluded.contains(&s.ordinal)
    }

    /// Whether `s` is one of the members summed or traced over.
    pub fn covers(&self, s: &Single) -> bool {
        s.letter == self.letter && !self.excluded.contains(&s.ordinal)
    }

    /// The same family with `s` added to the exclusions.
    pub fn excluding(&self, s: Single) -> Family {
        debug_assert_eq!(s.letter, self.letter);
        let mut out = self.clone();
        out.excluded.insert(s.ordinal);
        out
    }
}

/// A subsystem index: one concrete subsystem or a family with exclusions.
///
/// The derived ordering puts every `Single` before every `Family`, and
/// orders singles by letter, then ordinal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    Single(Single),
    Family(Family),
}

impl Index {
    pub fn letter(&self) -> char {
        match self {
            Index::Single(s) => s.letter,
            Index::Family(f) => f.letter,
        }
    }

    pub fn as_single(&self) -> Option<&Single> {
        match self {
            Index::Single(s) => Some(s),
            Index::Family(_) => None,
        }
    }

    pub fn as_family(&self) -> Option<&Family> {
        match self {
            Index::Family(f) => Some(f),
            Index::Single(_) => None,
        }
    }

    /// Whether the two indices can refer to a common subsystem.
    ///
    /// Two families of the same letter always overlap: families are
    /// infinite and exclusions are finite.
    pub fn overlaps(&self, other: &Index) -> bool {
        match (self, other) {
            (Index::Single(a), Index::Single(b)) => a == b,
            (Index::Single(s), Index::Family(f)) | (Index::Family(f), Index::Single(s)) => f.covers(s),
            (Index::Family(a), Index::Family(b)) => a.letter == b.letter,
        }
    }

    /// Parses `A1` as a single and `F` as a full family.
    pub fn parse(s: &str) -> Result<Self, Error> {
        if s.chars().count() == 1 {
            Family::parse(s).map(Index::Family)
        } else {
            Single::parse(s).map(Index::Single)
        }
    }
}

impl From<Single> for Index {
    fn from(s: Single) -> Self {
        Index::Single(s)
    }
}

impl From<Family> for Index {
    fn from(f: Family) -> Self {
        Index::Family(f)
    }
}

/// The ordered index pair of an interaction operator `V_uv`.
///
/// Order is fixed by the interaction declaration and is kept through every
/// rewrite, so `V_A1F` and `V_BF1` print the way they were declared.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairedIndex {
    pub first: Index,
    pub second: Index,
}

impl PairedIndex {
    pub fn new(first: Index, second: Index) -> Result<Self, Error> {
        if first.letter() == second.letter() {
            return Err(Error::spec(format!(
                "interaction between two subsystems of type {} is not pairwise between distinct types",
                first.letter()
            )));
        }
        Ok(PairedIndex { first, second })
    }

    pub fn get(&self, first: bool) -> &Index {
        if first {
            &self.first
        } else {
            &self.second
        }
    }
}
