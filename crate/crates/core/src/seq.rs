//! Nucleotide sequences, network samples and FASTA text I/O.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeqError {
    #[error("line {line}: sequence data before the first '>' header")]
    MissingHeader { line: usize },
    #[error("record '{id}': illegal character '{symbol}' at base index {index}")]
    IllegalBase {
        id: String,
        symbol: char,
        index: usize,
    },
    #[error("line {line}: empty record identifier")]
    EmptyId { line: usize },
    #[error("illegal nucleotide symbol '{0}'")]
    BadSymbol(char),
}

/// One of the four unambiguous DNA bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Nucleotide {
    A,
    C,
    G,
    T,
}

impl Nucleotide {
    pub const ALL: [Nucleotide; 4] = [Nucleotide::A, Nucleotide::C, Nucleotide::G, Nucleotide::T];

    /// Case-insensitive parse of a single base symbol.
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'A' | 'a' => Some(Nucleotide::A),
            'C' | 'c' => Some(Nucleotide::C),
            'G' | 'g' => Some(Nucleotide::G),
            'T' | 't' => Some(Nucleotide::T),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Nucleotide::A => 'A',
            Nucleotide::C => 'C',
            Nucleotide::G => 'G',
            Nucleotide::T => 'T',
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Nucleotide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A validated nucleotide string with an identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneSequence {
    id: String,
    bases: Vec<Nucleotide>,
}

impl GeneSequence {
    /// Panics if `id` is empty.
    pub fn new(id: impl Into<String>, bases: Vec<Nucleotide>) -> Self {
        let id = id.into();
        assert!(!id.is_empty(), "gene sequence id must be nonempty");
        GeneSequence { id, bases }
    }

    /// Builds a sequence from text, rejecting anything outside `ACGTacgt`.
    pub fn from_str_bases(id: impl Into<String>, text: &str) -> Result<Self, SeqError> {
        let id = id.into();
        let bases = text
            .chars()
            .enumerate()
            .map(|(index, c)| {
                Nucleotide::from_char(c).ok_or_else(|| SeqError::IllegalBase {
                    id: id.clone(),
                    symbol: c,
                    index,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GeneSequence::new(id, bases))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn bases(&self) -> &[Nucleotide] {
        &self.bases
    }

    pub fn bases_mut(&mut self) -> &mut [Nucleotide] {
        &mut self.bases
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn to_base_string(&self) -> String {
        self.bases.iter().map(|b| b.as_char()).collect()
    }
}

/// Group membership of a network sample. `Patient` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Control,
    Patient,
}

impl Label {
    /// +1 for patients, -1 for controls.
    pub fn sign(self) -> f64 {
        match self {
            Label::Control => -1.0,
            Label::Patient => 1.0,
        }
    }

    pub fn from_sign(v: f64) -> Self {
        if v >= 0.0 {
            Label::Patient
        } else {
            Label::Control
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Control => "control",
            Label::Patient => "patient",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "control" => Some(Label::Control),
            "patient" => Some(Label::Patient),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One individual's network: one sequence per gene, in network order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSample {
    pub sample_id: String,
    pub label: Label,
    pub genes: Vec<GeneSequence>,
}

impl NetworkSample {
    pub fn gene_count(&self) -> usize {
        self.genes.len()
    }
}

/// Parses multi-record FASTA text. Lowercase bases are folded to uppercase
/// and whitespace inside sequence lines is ignored.
pub fn parse_fasta(text: &str) -> Result<Vec<GeneSequence>, SeqError> {
    let mut records = Vec::new();
    let mut current: Option<(String, Vec<Nucleotide>)> = None;

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if let Some(header) = line.strip_prefix('>') {
            if let Some((id, bases)) = current.take() {
                records.push(GeneSequence::new(id, bases));
            }
            let id = header.split_whitespace().next().unwrap_or("");
            if id.is_empty() {
                return Err(SeqError::EmptyId { line: lineno + 1 });
            }
            current = Some((id.to_string(), Vec::new()));
            continue;
        }
        match current.as_mut() {
            Some((id, bases)) => {
                for c in line.chars().filter(|c| !c.is_whitespace()) {
                    match Nucleotide::from_char(c) {
                        Some(b) => bases.push(b),
                        None => {
                            return Err(SeqError::IllegalBase {
                                id: id.clone(),
                                symbol: c,
                                index: bases.len(),
                            })
                        }
                    }
                }
            }
            None => {
                if !line.trim().is_empty() {
                    return Err(SeqError::MissingHeader { line: lineno + 1 });
                }
            }
        }
    }
    if let Some((id, bases)) = current {
        records.push(GeneSequence::new(id, bases));
    }
    Ok(records)
}

/// Renders records as FASTA with sequence lines wrapped at `line_width`.
///
/// Panics if `line_width` is zero.
pub fn write_fasta(records: &[GeneSequence], line_width: usize) -> String {
    assert!(line_width >= 1, "line width must be positive");
    let mut out = String::new();
    for rec in records {
        out.push('>');
        out.push_str(rec.id());
        out.push('\n');
        for chunk in rec.bases().chunks(line_width) {
            out.extend(chunk.iter().map(|b| b.as_char()));
            out.push('\n');
        }
    }
    out
}
