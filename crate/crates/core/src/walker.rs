//! Random-walk sentence corpus over a graph.
//!
//! Each walk starts at a node and alternates node and relation tokens:
//! `v0 r1 v1 r2 v2 ...`. A step follows a uniformly chosen outgoing triple;
//! a walk that reaches a node without outgoing triples ends there.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::par;
use crate::seed::{derive_seed, rng_from_seed};

pub type TokenId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    /// Number of hops; a full walk has `depth` relation tokens.
    pub depth: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 150,
            depth: 6,
            seed: 0,
        }
    }
}

/// Walks stored as token ids into a shared vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkCorpus {
    vocabulary: Vec<String>,
    counts: Vec<u64>,
    tokens: Vec<TokenId>,
    /// `offsets[i]..offsets[i + 1]` delimits walk `i`.
    offsets: Vec<usize>,
}

impl WalkCorpus {
    /// Builds a corpus from walks given as token strings.
    pub fn from_walks<I, W, S>(walks: I) -> Result<Self>
    where
        I: IntoIterator<Item = W>,
        W: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut builder = CorpusBuilder::default();
        for walk in walks {
            let mut empty = true;
            for token in walk {
                let token = token.as_ref();
                if token.is_empty() || token.contains(char::is_whitespace) {
                    return Err(Error::invalid_input(format!("invalid token {token:?}")));
                }
                builder.push_token(token);
                empty = false;
            }
            if empty {
                return Err(Error::invalid_input("empty walk"));
            }
            builder.end_walk();
        }
        Ok(builder.finish())
    }

    pub fn walk_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.walk_count() == 0
    }

    pub fn walk(&self, i: usize) -> &[TokenId] {
        &self.tokens[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn walks(&self) -> impl Iterator<Item = &[TokenId]> + '_ {
        self.offsets.windows(2).map(|w| &self.tokens[w[0]..w[1]])
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    /// Distinct tokens, in order of first appearance.
    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    /// Occurrence count of each vocabulary entry.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.vocabulary[id as usize]
    }

    pub fn count_of(&self, token: &str) -> u64 {
        self.vocabulary
            .iter()
            .position(|t| t == token)
            .map_or(0, |i| self.counts[i])
    }

    pub fn walk_tokens(&self, i: usize) -> Vec<&str> {
        self.walk(i).iter().map(|&t| self.token(t)).collect()
    }

    /// One walk per line, tokens separated by single spaces.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for walk in self.walks() {
            let mut first = true;
            for &t in walk {
                if !first {
                    out.write_all(b" ")?;
                }
                out.write_all(self.token(t).as_bytes())?;
                first = false;
            }
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut builder = CorpusBuilder::default();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            for token in line.split(' ') {
                if token.is_empty() {
                    return Err(Error::parse(i + 1, "empty token (repeated space)"));
                }
                builder.push_token(token);
            }
            builder.end_walk();
        }
        Ok(builder.finish())
    }
}

#[derive(Default)]
struct CorpusBuilder {
    index: HashMap<String, TokenId>,
    vocabulary: Vec<String>,
    counts: Vec<u64>,
    tokens: Vec<TokenId>,
    offsets: Vec<usize>,
}

impl CorpusBuilder {
    fn intern(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.vocabulary.len() as TokenId;
        self.index.insert(token.to_string(), id);
        self.vocabulary.push(token.to_string());
        self.counts.push(0);
        id
    }

    fn push_token(&mut self, token: &str) {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        let id = self.intern(token);
        self.counts[id as usize] += 1;
        self.tokens.push(id);
    }

    fn end_walk(&mut self) {
        self.offsets.push(self.tokens.len());
    }

    fn finish(mut self) -> WalkCorpus {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        WalkCorpus {
            vocabulary: self.vocabulary,
            counts: self.counts,
            tokens: self.tokens,
            offsets: self.offsets,
        }
    }
}

/// Generates `walks_per_node` walks from every node of `g`.
///
/// Each start node draws from its own stream seeded by `(seed, node id)`, so
/// the corpus does not depend on how the work is scheduled.
pub fn generate_walks(g: &Graph, cfg: &WalkConfig) -> Result<WalkCorpus> {
    if cfg.walks_per_node == 0 {
        return Err(Error::invalid_argument("walks_per_node must be at least 1"));
    }
    if cfg.depth == 0 {
        return Err(Error::invalid_argument("depth must be at least 1"));
    }

    // Token ids: nodes first, then relation labels. A relation label that
    // equals a node name shares its token.
    let n = g.node_count();
    let mut token_of: HashMap<&str, TokenId> = HashMap::with_capacity(n);
    let mut names: Vec<&str> = Vec::with_capacity(n + g.relations().len());
    for node in g.nodes() {
        token_of.insert(node.as_str(), names.len() as TokenId);
        names.push(node.as_str());
    }
    for rel in g.relations() {
        if !token_of.contains_key(rel.as_str()) {
            token_of.insert(rel.as_str(), names.len() as TokenId);
            names.push(rel.as_str());
        }
    }
    let node_tokens: Vec<TokenId> = (0..n as TokenId).collect();
    let triple_relation: Vec<TokenId> = g
        .triples()
        .iter()
        .map(|t| token_of[t.predicate.as_str()])
        .collect();

    let per_node: Vec<Vec<TokenId>> = par::map_range(n, |v| {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, g.nodes()[v].as_str().as_bytes()));
        let mut out = Vec::with_capacity(cfg.walks_per_node * (2 * cfg.depth + 2));
        for _ in 0..cfg.walks_per_node {
            let mut current = v;
            out.push(node_tokens[current]);
            for _ in 0..cfg.depth {
                let edges = g.outgoing(current);
                if edges.is_empty() {
                    break;
                }
                let t = edges[rng.random_range(0..edges.len())];
                current = g.object_index(t);
                out.push(triple_relation[t]);
                out.push(node_tokens[current]);
            }
            // sentinel between walks
            out.push(TokenId::MAX);
        }
        out
    });

    let mut builder = CorpusBuilder::default();
    for chunk in &per_node {
        for &t in chunk {
            if t == TokenId::MAX {
                builder.end_walk();
            } else {
                builder.push_token(names[t as usize]);
            }
        }
    }
    Ok(builder.finish())
}
