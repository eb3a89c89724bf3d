//! Correspondences between two graphs and the TSV alignment file format.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Relation label carried by every correspondence (equivalence).
pub const EQUIVALENCE: &str = "=";

const HEADER: &str = "source\ttarget\trelation\tconfidence";

#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pub source: NodeId,
    pub target: NodeId,
    pub confidence: f64,
}

impl Correspondence {
    pub fn new(source: NodeId, target: NodeId, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::invalid_argument(format!(
                "confidence {confidence} outside [0, 1]"
            )));
        }
        Ok(Correspondence {
            source,
            target,
            confidence,
        })
    }

    /// A correspondence with confidence 1.
    pub fn exact(source: NodeId, target: NodeId) -> Self {
        Correspondence {
            source,
            target,
            confidence: 1.0,
        }
    }

    pub fn relation(&self) -> &'static str {
        EQUIVALENCE
    }
}

/// An ordered set of correspondences; no (source, target) pair occurs twice.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Alignment {
    correspondences: Vec<Correspondence>,
}

impl Alignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an alignment, rejecting duplicate (source, target) pairs.
    pub fn from_correspondences(correspondences: Vec<Correspondence>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(correspondences.len());
        for c in &correspondences {
            if !seen.insert((c.source.as_str(), c.target.as_str())) {
                return Err(Error::invalid_input(format!(
                    "duplicate correspondence ({}, {})",
                    c.source, c.target
                )));
            }
        }
        Ok(Alignment { correspondences })
    }

    /// Caller guarantees the pairs are distinct.
    pub(crate) fn from_unique(correspondences: Vec<Correspondence>) -> Self {
        debug_assert!(Self::from_correspondences(correspondences.clone()).is_ok());
        Alignment { correspondences }
    }

    pub fn len(&self) -> usize {
        self.correspondences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correspondences.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Correspondence> {
        self.correspondences.iter()
    }

    pub fn correspondences(&self) -> &[Correspondence] {
        &self.correspondences
    }

    pub fn into_correspondences(self) -> Vec<Correspondence> {
        self.correspondences
    }

    /// Source ids in alignment order.
    pub fn sources(&self) -> impl Iterator<Item = &NodeId> {
        self.correspondences.iter().map(|c| &c.source)
    }

    /// Keeps only the correspondences whose source is in `sources`.
    pub fn restrict_to_sources(&self, sources: &HashSet<&str>) -> Alignment {
        Alignment {
            correspondences: self
                .correspondences
                .iter()
                .filter(|c| sources.contains(c.source.as_str()))
                .cloned()
                .collect(),
        }
    }

    /// Writes the four-column TSV with header.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{HEADER}")?;
        for c in &self.correspondences {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                c.source,
                c.target,
                EQUIVALENCE,
                c.confidence
            )?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads an alignment TSV. The header line is optional, the confidence
    /// column may be omitted (defaults to 1.0).
    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self> {
        let mut correspondences = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            if line_no == 1 && line.starts_with("source\ttarget") {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if !(3..=4).contains(&fields.len()) {
                return Err(Error::parse(
                    line_no,
                    format!("expected 3 or 4 tab-separated fields, found {}", fields.len()),
                ));
            }
            if fields[2] != EQUIVALENCE {
                return Err(Error::parse(
                    line_no,
                    format!("unsupported relation {:?}", fields[2]),
                ));
            }
            let source = NodeId::new(fields[0]).map_err(|e| Error::parse(line_no, e.to_string()))?;
            let target = NodeId::new(fields[1]).map_err(|e| Error::parse(line_no, e.to_string()))?;
            let confidence = match fields.get(3) {
                Some(raw) => raw
                    .parse::<f64>()
                    .map_err(|e| Error::parse(line_no, format!("bad confidence {raw:?}: {e}")))?,
                None => 1.0,
            };
            let c = Correspondence::new(source, target, confidence)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
            correspondences.push(c);
        }
        Self::from_correspondences(correspondences)
    }
}

impl<'a> IntoIterator for &'a Alignment {
    type Item = &'a Correspondence;
    type IntoIter = std::slice::Iter<'a, Correspondence>;

    fn into_iter(self) -> Self::IntoIter {
        self.correspondences.iter()
    }
}

impl fmt::Display for Correspondence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} ({})", self.source, EQUIVALENCE, self.target, self.confidence)
    }
}
