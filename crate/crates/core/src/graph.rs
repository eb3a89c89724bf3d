//! Directed, relation-labeled multigraphs: synthetic generation, duplication,
//! triple removal and the two triple file formats.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use log::warn;
use rand::seq::index;
use rand_distr::{Distribution, Poisson};

use crate::alignment::{Alignment, Correspondence};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Relation label used for all synthetic triples.
pub const SYNTHETIC_RELATION: &str = "rel";

/// Opaque, non-empty node identifier (an IRI or a synthetic name).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if value.is_empty() {
            return Err(Error::invalid_argument("node id must be non-empty"));
        }
        Ok(NodeId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: NodeId,
    pub predicate: String,
    pub object: NodeId,
}

/// A directed multigraph `(V, E)` with relation labels `R`.
///
/// Nodes keep insertion order; triples keep their given order. Isolated nodes
/// are allowed.
#[derive(Debug, Clone)]
pub struct Graph {
    nodes: Vec<NodeId>,
    node_index: HashMap<NodeId, usize>,
    triples: Vec<Triple>,
    relations: BTreeSet<String>,
    /// Object node index of each triple, parallel to `triples`.
    objects: Vec<usize>,
    /// Triple indices leaving each node, in triple order.
    outgoing: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an explicit node list and triples. Every triple
    /// endpoint must be in `nodes`.
    pub fn new(nodes: Vec<NodeId>, triples: Vec<Triple>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid_input("graph must have at least one node"));
        }
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.clone(), i).is_some() {
                return Err(Error::invalid_input(format!("duplicate node id {n}")));
            }
        }
        let mut objects = Vec::with_capacity(triples.len());
        let mut outgoing = vec![Vec::new(); nodes.len()];
        let mut relations = BTreeSet::new();
        for (t_idx, t) in triples.iter().enumerate() {
            let s = *node_index
                .get(&t.subject)
                .ok_or_else(|| Error::invalid_input(format!("unknown subject {}", t.subject)))?;
            let o = *node_index
                .get(&t.object)
                .ok_or_else(|| Error::invalid_input(format!("unknown object {}", t.object)))?;
            if t.predicate.is_empty() {
                return Err(Error::invalid_input("empty relation label"));
            }
            outgoing[s].push(t_idx);
            objects.push(o);
            if !relations.contains(&t.predicate) {
                relations.insert(t.predicate.clone());
            }
        }
        Ok(Graph {
            nodes,
            node_index,
            triples,
            relations,
            objects,
            outgoing,
        })
    }

    /// Builds a graph whose node set is the union of subjects and objects, in
    /// order of first appearance.
    pub fn from_triples(triples: Vec<Triple>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut nodes = Vec::new();
        for t in &triples {
            for n in [&t.subject, &t.object] {
                if seen.insert(n.clone()) {
                    nodes.push(n.clone());
                }
            }
        }
        Self::new(nodes, triples)
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn relations(&self) -> &BTreeSet<String> {
        &self.relations
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.node_index.contains_key(id)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    /// Indices (into [`Graph::triples`]) of the triples leaving node `node`.
    pub fn outgoing(&self, node: usize) -> &[usize] {
        &self.outgoing[node]
    }

    /// Node index of the object of triple `triple`.
    pub fn object_index(&self, triple: usize) -> usize {
        self.objects[triple]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.outgoing[node].len()
    }

    /// Writes one `subject\tpredicate\tobject` line per triple. Isolated
    /// nodes have no representation in this format.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for t in &self.triples {
            writeln!(out, "{}\t{}\t{}", t.subject, t.predicate, t.object)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `<s> <p> <o> .` lines.
    pub fn write_ntriples<W: Write>(&self, mut out: W) -> Result<()> {
        for t in &self.triples {
            writeln!(out, "<{}> <{}> <{}> .", t.subject, t.predicate, t.object)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write<W: Write>(&self, out: W, format: TripleFormat) -> Result<()> {
        match format {
            TripleFormat::Tsv => self.write_tsv(out),
            TripleFormat::NTriples => self.write_ntriples(out),
        }
    }
}

/// Graphs are equal when their node sets and triple lists are equal.
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
            && self.nodes.len() == other.nodes.len()
            && self.nodes.iter().all(|n| other.node_index.contains_key(n))
    }
}

/// Rounds `fraction * n` down, tolerating representation error in decimal
/// fractions such as `0.3 * 10`.
pub(crate) fn floor_share(fraction: f64, n: usize) -> usize {
    let raw = (fraction * n as f64 + 1e-9).floor();
    (raw.max(0.0) as usize).min(n)
}

/// Random graph: every node gets a Poisson(`lambda`) out-degree and links to
/// that many distinct other nodes chosen uniformly.
pub fn generate_synthetic_graph(n_nodes: usize, lambda: f64, seed: u64) -> Result<Graph> {
    if n_nodes == 0 {
        return Err(Error::invalid_argument("n_nodes must be at least 1"));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid_argument(format!(
            "lambda must be a non-negative finite number, got {lambda}"
        )));
    }
    let poisson = if lambda > 0.0 {
        Some(Poisson::new(lambda).map_err(|e| Error::invalid_argument(e.to_string()))?)
    } else {
        None
    };
    let mut rng = rng_from_seed(seed);
    let nodes: Vec<NodeId> = (0..n_nodes).map(|i| NodeId(format!("n{i}"))).collect();
    let mut triples = Vec::new();
    for v in 0..n_nodes {
        let drawn = poisson.as_ref().map_or(0.0, |p| p.sample(&mut rng));
        let degree = (drawn as usize).min(n_nodes - 1);
        if degree == 0 {
            continue;
        }
        // sample from the n-1 other nodes, skipping over v
        for k in index::sample(&mut rng, n_nodes - 1, degree) {
            let target = if k >= v { k + 1 } else { k };
            triples.push(Triple {
                subject: nodes[v].clone(),
                predicate: SYNTHETIC_RELATION.to_string(),
                object: nodes[target].clone(),
            });
        }
    }
    Graph::new(nodes, triples)
}

/// Copies `g` with every node id suffixed, returning the copy and the
/// identity alignment `v -> v + suffix`.
pub fn duplicate_graph(g: &Graph, suffix: &str) -> Result<(Graph, Alignment)> {
    if suffix.is_empty() {
        return Err(Error::invalid_argument("duplicate suffix must be non-empty"));
    }
    let rename = |n: &NodeId| NodeId(format!("{}{}", n.0, suffix));
    let nodes: Vec<NodeId> = g.nodes.iter().map(rename).collect();
    let triples = g
        .triples
        .iter()
        .map(|t| Triple {
            subject: rename(&t.subject),
            predicate: t.predicate.clone(),
            object: rename(&t.object),
        })
        .collect();
    let alignment = Alignment::from_unique(
        g.nodes
            .iter()
            .zip(&nodes)
            .map(|(a, b)| Correspondence::exact(a.clone(), b.clone()))
            .collect(),
    );
    Ok((Graph::new(nodes, triples)?, alignment))
}

/// Removes `⌊fraction·|E|⌋` uniformly chosen triples. The node set is kept.
pub fn remove_triples(g: &Graph, fraction: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid_argument(format!(
            "removal fraction {fraction} outside [0, 1]"
        )));
    }
    let total = g.triples.len();
    let remove = floor_share(fraction, total);
    let mut keep = vec![true; total];
    if remove > 0 {
        let mut rng = rng_from_seed(seed);
        for i in index::sample(&mut rng, total, remove) {
            keep[i] = false;
        }
    }
    let triples = g
        .triples
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(t, _)| t.clone())
        .collect();
    Graph::new(g.nodes.clone(), triples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripleFormat {
    /// `subject\tpredicate\tobject` per line.
    Tsv,
    /// `<s> <p> <o> .` per line, IRIs only.
    NTriples,
}

impl FromStr for TripleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" | "tsv-triples" => Ok(TripleFormat::Tsv),
            "nt" | "ntriples" | "ntriples-subset" => Ok(TripleFormat::NTriples),
            other => Err(Error::invalid_argument(format!("unknown triple format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParsedGraph {
    pub graph: Graph,
    /// Lines skipped because their object was a literal.
    pub skipped_literals: usize,
}

/// Parses a triple file. Duplicate triples are kept in order.
pub fn parse_triples<R: BufRead>(input: R, format: TripleFormat) -> Result<ParsedGraph> {
    let mut triples = Vec::new();
    let mut skipped_literals = 0;
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        let parsed = match format {
            TripleFormat::Tsv => parse_tsv_line(line, line_no)?,
            TripleFormat::NTriples => match parse_nt_line(line, line_no)? {
                NtLine::Triple(t) => Some(t),
                NtLine::Literal => {
                    skipped_literals += 1;
                    warn!("line {line_no}: literal object skipped");
                    None
                }
                NtLine::Blank => None,
            },
        };
        triples.extend(parsed);
    }
    if triples.is_empty() {
        return Err(Error::invalid_input("input contains no triples"));
    }
    Ok(ParsedGraph {
        graph: Graph::from_triples(triples)?,
        skipped_literals,
    })
}

fn parse_tsv_line(line: &str, line_no: usize) -> Result<Option<Triple>> {
    if line.is_empty() {
        return Ok(None);
    }
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(Error::parse(
            line_no,
            format!("expected 3 tab-separated fields, found {}", fields.len()),
        ));
    }
    if fields.iter().any(|f| f.is_empty()) {
        return Err(Error::parse(line_no, "empty field"));
    }
    Ok(Some(Triple {
        subject: NodeId(fields[0].to_string()),
        predicate: fields[1].to_string(),
        object: NodeId(fields[2].to_string()),
    }))
}

enum NtLine {
    Triple(Triple),
    Literal,
    Blank,
}

fn parse_nt_line(line: &str, line_no: usize) -> Result<NtLine> {
    let mut rest = line.trim();
    if rest.is_empty() || rest.starts_with('#') {
        return Ok(NtLine::Blank);
    }
    let subject = take_iri(&mut rest, line_no, "subject")?;
    let predicate = take_iri(&mut rest, line_no, "predicate")?;
    rest = rest.trim_start();
    if rest.starts_with('"') {
        return Ok(NtLine::Literal);
    }
    let object = take_iri(&mut rest, line_no, "object")?;
    if rest.trim() != "." {
        return Err(Error::parse(line_no, "expected terminating '.'"));
    }
    Ok(NtLine::Triple(Triple {
        subject: NodeId(subject.to_string()),
        predicate: predicate.to_string(),
        object: NodeId(object.to_string()),
    }))
}

fn take_iri<'a>(rest: &mut &'a str, line_no: usize, what: &str) -> Result<&'a str> {
    let s = rest.trim_start();
    let Some(body) = s.strip_prefix('<') else {
        return Err(Error::parse(line_no, format!("{what} must be an IRI in angle brackets")));
    };
    let end = body
        .find('>')
        .ok_or_else(|| Error::parse(line_no, format!("unterminated IRI in {what}")))?;
    let iri = &body[..end];
    if iri.is_empty() || iri.contains(char::is_whitespace) {
        return Err(Error::parse(line_no, format!("invalid IRI in {what}")));
    }
    *rest = &body[end + 1..];
    Ok(iri)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn triple(s: &str, p: &str, o: &str) -> Triple {
        Triple {
            subject: NodeId::new(s).unwrap(),
            predicate: p.into(),
            object: NodeId::new(o).unwrap(),
        }
    }

    #[test]
    fn single_node_has_no_triples() {
        let g = generate_synthetic_graph(1, 4.0, 3).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.triple_count(), 0);
    }

    #[test]
    fn zero_lambda_has_no_triples() {
        let g = generate_synthetic_graph(10, 0.0, 3).unwrap();
        assert_eq!(g.node_count(), 10);
        assert_eq!(g.triple_count(), 0);
        assert_eq!(g.nodes()[9].as_str(), "n9");
    }

    #[test]
    fn zero_nodes_rejected() {
        assert!(matches!(
            generate_synthetic_graph(0, 4.0, 1),
            Err(Error::InvalidArgument(_))
        ));
        assert!(generate_synthetic_graph(5, -1.0, 1).is_err());
    }

    #[test]
    fn synthetic_graph_is_simple_and_seeded() {
        let g = generate_synthetic_graph(200, 4.0, 11).unwrap();
        assert_eq!(g, generate_synthetic_graph(200, 4.0, 11).unwrap());
        assert_ne!(
            g.triples(),
            generate_synthetic_graph(200, 4.0, 12).unwrap().triples()
        );
        for v in 0..g.node_count() {
            let mut objects = HashSet::new();
            for &t in g.outgoing(v) {
                let o = g.object_index(t);
                assert_ne!(o, v, "self loop");
                assert!(objects.insert(o), "repeated neighbor");
            }
        }
        assert!(g.triples().iter().all(|t| t.predicate == SYNTHETIC_RELATION));
    }

    #[test]
    fn small_graph_degrees_clamp() {
        // lambda far above n-1 forces the clamp on nearly every node
        let g = generate_synthetic_graph(4, 50.0, 5).unwrap();
        for v in 0..4 {
            assert_eq!(g.out_degree(v), 3);
        }
    }

    #[test]
    fn duplicate_renames_and_aligns() {
        let g = Graph::from_triples(vec![triple("a", "p", "b")]).unwrap();
        let (copy, align) = duplicate_graph(&g, "_c").unwrap();
        assert_eq!(copy.triples(), &[triple("a_c", "p", "b_c")]);
        let pairs: Vec<(&str, &str)> = align
            .iter()
            .map(|c| (c.source.as_str(), c.target.as_str()))
            .collect();
        assert_eq!(pairs, vec![("a", "a_c"), ("b", "b_c")]);
        assert!(duplicate_graph(&g, "").is_err());
    }

    #[test]
    fn duplicate_single_node() {
        let g = generate_synthetic_graph(1, 1.0, 0).unwrap();
        let (_, align) = duplicate_graph(&g, "'").unwrap();
        assert_eq!(align.len(), 1);
    }

    #[test]
    fn removal_counts() {
        let triples: Vec<Triple> = (0..10).map(|i| triple(&format!("a{i}"), "p", "b")).collect();
        let g = Graph::from_triples(triples).unwrap();
        assert_eq!(remove_triples(&g, 0.0, 1).unwrap().triples(), g.triples());
        let half = remove_triples(&g, 0.5, 1).unwrap();
        assert_eq!(half.triple_count(), 5);
        assert_eq!(half.node_count(), g.node_count());
        assert_eq!(half, remove_triples(&g, 0.5, 1).unwrap());
        assert_eq!(remove_triples(&g, 1.0, 1).unwrap().triple_count(), 0);
        assert!(remove_triples(&g, 1.1, 1).is_err());
        for step in 0..10 {
            let f = step as f64 / 10.0;
            assert_eq!(remove_triples(&g, f, 9).unwrap().triple_count(), 10 - step);
        }
    }

    #[test]
    fn tsv_parse() {
        let p = parse_triples("a\tp\tb\n".as_bytes(), TripleFormat::Tsv).unwrap();
        assert_eq!(p.graph.triples(), &[triple("a", "p", "b")]);
        assert_eq!(p.graph.node_count(), 2);
        assert!(p.graph.relations().contains("p"));
    }

    #[test]
    fn tsv_arity_error_names_line() {
        let err = parse_triples("a\tp\n".as_bytes(), TripleFormat::Tsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse_triples("a\tp\tb\nx\ty\tz\tw\n".as_bytes(), TripleFormat::Tsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn ntriples_parse() {
        let p = parse_triples(
            "<http://x/a> <http://x/p> <http://x/b> .\n".as_bytes(),
            TripleFormat::NTriples,
        )
        .unwrap();
        assert_eq!(p.graph.triples(), &[triple("http://x/a", "http://x/p", "http://x/b")]);
        assert_eq!(p.skipped_literals, 0);
    }

    #[test]
    fn ntriples_literals_skipped_and_counted() {
        let input = "<a> <p> <b> .\n<a> <label> \"A\"@en .\n# comment\n\n<b> <p> <a> .\n";
        let p = parse_triples(input.as_bytes(), TripleFormat::NTriples).unwrap();
        assert_eq!(p.graph.triple_count(), 2);
        assert_eq!(p.skipped_literals, 1);
    }

    #[test]
    fn ntriples_errors() {
        for bad in ["<a> <p> <b>\n", "_:b0 <p> <b> .\n", "<a> <p <b> .\n", "<a> <p> <b> . x\n"] {
            let err = parse_triples(bad.as_bytes(), TripleFormat::NTriples).unwrap_err();
            assert!(matches!(err, Error::Parse { line: 1, .. }), "{bad:?}: {err}");
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert!(parse_triples("".as_bytes(), TripleFormat::Tsv).is_err());
    }

    #[test]
    fn duplicate_triples_preserved() {
        let p = parse_triples("a\tp\tb\na\tp\tb\n".as_bytes(), TripleFormat::Tsv).unwrap();
        assert_eq!(p.graph.triple_count(), 2);
        assert_eq!(p.graph.out_degree(0), 2);
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(
            edges in prop::collection::vec((0usize..12, 0usize..3, 0usize..12), 1..40),
            nt in any::<bool>(),
        ) {
            let triples: Vec<Triple> = edges
                .iter()
                .map(|&(s, p, o)| triple(&format!("http://e/n{s}"), &format!("http://e/r{p}"), &format!("http://e/n{o}")))
                .collect();
            let g = Graph::from_triples(triples).unwrap();
            let format = if nt { TripleFormat::NTriples } else { TripleFormat::Tsv };
            let mut buf = Vec::new();
            g.write(&mut buf, format).unwrap();
            let back = parse_triples(&buf[..], format).unwrap().graph;
            prop_assert_eq!(back, g);
        }

        #[test]
        fn removal_keeps_exact_count(n in 1usize..60, f in 0.0f64..=1.0, seed in any::<u64>()) {
            let triples: Vec<Triple> = (0..n).map(|i| triple(&format!("s{i}"), "p", "o")).collect();
            let g = Graph::from_triples(triples).unwrap();
            let r = remove_triples(&g, f, seed).unwrap();
            prop_assert_eq!(r.triple_count(), n - floor_share(f, n));
            prop_assert_eq!(r.node_count(), g.node_count());
            // survivors are a subsequence of the original list
            let mut it = g.triples().iter();
            for t in r.triples() {
                prop_assert!(it.any(|u| u == t));
            }
        }

        #[test]
        fn duplicate_is_isomorphism(n in 1usize..40, seed in any::<u64>()) {
            let g = generate_synthetic_graph(n, 2.0, seed).unwrap();
            let (copy, align) = duplicate_graph(&g, "_c").unwrap();
            prop_assert_eq!(copy.triple_count(), g.triple_count());
            prop_assert_eq!(align.len(), n);
            let map: HashMap<&str, &str> = align.iter().map(|c| (c.source.as_str(), c.target.as_str())).collect();
            for (t, u) in g.triples().iter().zip(copy.triples()) {
                prop_assert_eq!(map[t.subject.as_str()], u.subject.as_str());
                prop_assert_eq!(map[t.object.as_str()], u.object.as_str());
                prop_assert_eq!(&t.predicate, &u.predicate);
            }
        }
    }
}
