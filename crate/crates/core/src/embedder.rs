//! Skip-gram with negative sampling over a walk corpus.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, Rng};
use crate::walker::WalkCorpus;

/// Exponent applied to token counts for the negative-sampling distribution.
pub const UNIGRAM_POWER: f64 = 0.75;

/// The learning rate never decays below this fraction of its initial value.
const MIN_LR_FRACTION: f64 = 1e-4;

pub const DEFAULT_SUBSAMPLE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub dimension: usize,
    /// Tokens on each side of the center within one walk.
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    /// Frequent-token downsampling threshold; 0 keeps every occurrence.
    pub subsample: f64,
    /// Draw each center's window uniformly from 1..=window.
    pub shrink_window: bool,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dimension: 100,
            window: 6,
            epochs: 5,
            negatives: 5,
            learning_rate: 0.025,
            min_count: 1,
            subsample: DEFAULT_SUBSAMPLE,
            shrink_window: true,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dimension", self.dimension),
            ("window", self.window),
            ("epochs", self.epochs),
            ("negatives", self.negatives),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::invalid_argument(format!("{name} must be at least 1")));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid_argument("learning rate must be positive"));
        }
        if !(self.subsample.is_finite() && self.subsample >= 0.0) {
            return Err(Error::invalid_argument("subsample must be non-negative"));
        }
        Ok(())
    }
}

/// Token vectors of one dimension, stored row-major in token order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    dimension: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingSpace {
    /// Builds a space from `(token, vector)` pairs. Vectors must share one
    /// length and be finite; tokens must be distinct and whitespace-free.
    pub fn from_vectors<I, S>(dimension: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        if dimension == 0 {
            return Err(Error::invalid_argument("dimension must be at least 1"));
        }
        let mut space = EmbeddingSpace {
            dimension,
            tokens: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        };
        for (token, vector) in entries {
            space.push(token.into(), &vector)?;
        }
        Ok(space)
    }

    fn push(&mut self, token: String, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::invalid_argument(format!(
                "vector for {token} has length {}, expected {}",
                vector.len(),
                self.dimension
            )));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid_argument(format!("non-finite vector for {token}")));
        }
        if token.is_empty() || token.contains(char::is_whitespace) {
            return Err(Error::invalid_argument(format!("invalid token {token:?}")));
        }
        if self.index.contains_key(&token) {
            return Err(Error::invalid_argument(format!("duplicate token {token}")));
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| self.row(i))
    }

    pub fn position(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> + '_ {
        self.tokens
            .iter()
            .zip(self.data.chunks_exact(self.dimension))
            .map(|(t, v)| (t.as_str(), v))
    }

    /// Applies `f` to every vector in place; the token set is unchanged.
    pub(crate) fn map_rows<F: FnMut(&[f64], &mut [f64])>(&self, mut f: F) -> EmbeddingSpace {
        let mut data = vec![0.0; self.data.len()];
        for (src, dst) in self
            .data
            .chunks_exact(self.dimension)
            .zip(data.chunks_exact_mut(self.dimension))
        {
            f(src, dst);
        }
        EmbeddingSpace {
            dimension: self.dimension,
            tokens: self.tokens.clone(),
            index: self.index.clone(),
            data,
        }
    }

    /// Text dump: `count dimension`, then `token v1 ... vd` per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dimension)?;
        for (token, v) in self.iter() {
            write!(out, "{token}")?;
            for x in v {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing header line"))??;
        let mut head = header.split_whitespace();
        let (count, dimension) = match (head.next(), head.next(), head.next()) {
            (Some(c), Some(d), None) => (
                c.parse::<usize>()
                    .map_err(|e| Error::parse(1, format!("bad count: {e}")))?,
                d.parse::<usize>()
                    .map_err(|e| Error::parse(1, format!("bad dimension: {e}")))?,
            ),
            _ => return Err(Error::parse(1, "header must be `count dimension`")),
        };
        let mut space = EmbeddingSpace::from_vectors(dimension, Vec::<(String, Vec<f64>)>::new())
            .map_err(|e| Error::parse(1, e.to_string()))?;
        let mut vector = Vec::with_capacity(dimension);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(' ');
            let token = fields.next().unwrap_or_default().to_string();
            vector.clear();
            for f in fields {
                vector.push(
                    f.parse::<f64>()
                        .map_err(|e| Error::parse(line_no, format!("bad value {f:?}: {e}")))?,
                );
            }
            space
                .push(token, &vector)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
        }
        if space.len() != count {
            return Err(Error::invalid_input(format!(
                "header announces {count} vectors, found {}",
                space.len()
            )));
        }
        Ok(space)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln σ(x)`, stable for large |x|.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

fn check_dims(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> Result<()> {
    let d = center.len();
    if context.len() != d || negatives.iter().any(|n| n.len() != d) {
        return Err(Error::invalid_argument("vector dimensions differ"));
    }
    Ok(())
}

/// Negative-sampling loss of one (center, context) pair:
/// `-ln σ(c·o) - Σ ln σ(-c·nᵢ)`.
pub fn sgns_pair_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> Result<f64> {
    check_dims(center, context, negatives)?;
    let mut loss = neg_log_sigmoid(dot(center, context));
    for n in negatives {
        loss += neg_log_sigmoid(-dot(center, n));
    }
    Ok(loss)
}

/// Partial derivatives of [`sgns_pair_loss`].
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn sgns_pair_gradient(
    center: &[f64],
    context: &[f64],
    negatives: &[&[f64]],
) -> Result<SgnsGradient> {
    check_dims(center, context, negatives)?;
    let pos = sigmoid(dot(center, context)) - 1.0;
    let mut g_center: Vec<f64> = context.iter().map(|o| pos * o).collect();
    let g_context: Vec<f64> = center.iter().map(|c| pos * c).collect();
    let mut g_negatives = Vec::with_capacity(negatives.len());
    for n in negatives {
        let s = sigmoid(dot(center, n));
        for (g, x) in g_center.iter_mut().zip(n.iter()) {
            *g += s * x;
        }
        g_negatives.push(center.iter().map(|c| s * c).collect());
    }
    Ok(SgnsGradient {
        center: g_center,
        context: g_context,
        negatives: g_negatives,
    })
}

/// Per-epoch diagnostics of a training run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingReport {
    /// Mean pair loss observed during each epoch.
    pub epoch_losses: Vec<f64>,
    pub pairs_per_epoch: u64,
}

/// Cumulative `count^0.75` table sampled by binary search.
struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(UNIGRAM_POWER);
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    fn sample(&self, rng: &mut Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let r = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= r)
            .min(self.cumulative.len() - 1)
    }
}

/// Probability of keeping one occurrence of each token, word2vec style:
/// `(sqrt(f/t) + 1) * t/f` for relative frequency `f` and threshold `t`.
fn keep_probabilities(counts: &[u64], threshold: f64) -> Vec<f64> {
    if threshold <= 0.0 {
        return vec![1.0; counts.len()];
    }
    let total = counts.iter().sum::<u64>() as f64;
    counts
        .iter()
        .map(|&c| {
            let f = c as f64 / total;
            ((f / threshold).sqrt() + 1.0) * threshold / f
        })
        .collect()
}

pub fn train(corpus: &WalkCorpus, cfg: &TrainingConfig) -> Result<EmbeddingSpace> {
    train_with_report(corpus, cfg).map(|(space, _)| space)
}

/// Trains input vectors for every token whose count reaches `min_count`.
/// Single-threaded and deterministic in `cfg.seed`.
pub fn train_with_report(
    corpus: &WalkCorpus,
    cfg: &TrainingConfig,
) -> Result<(EmbeddingSpace, TrainingReport)> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::invalid_input("corpus has no walks"));
    }

    // Vocabulary order: frequency descending, then token text.
    let mut kept: Vec<usize> = (0..corpus.vocabulary().len())
        .filter(|&i| corpus.counts()[i] >= cfg.min_count)
        .collect();
    if kept.is_empty() {
        return Err(Error::invalid_input(format!(
            "no token reaches the minimum count {}",
            cfg.min_count
        )));
    }
    kept.sort_by(|&a, &b| {
        corpus.counts()[b]
            .cmp(&corpus.counts()[a])
            .then_with(|| corpus.vocabulary()[a].cmp(&corpus.vocabulary()[b]))
    });
    let mut remap = vec![u32::MAX; corpus.vocabulary().len()];
    for (new, &old) in kept.iter().enumerate() {
        remap[old] = new as u32;
    }
    let sentences: Vec<Vec<u32>> = corpus
        .walks()
        .map(|w| {
            w.iter()
                .map(|&t| remap[t as usize])
                .filter(|&t| t != u32::MAX)
                .collect()
        })
        .collect();
    let counts: Vec<u64> = kept.iter().map(|&i| corpus.counts()[i]).collect();

    let d = cfg.dimension;
    let vocab = kept.len();
    let mut rng = rng_from_seed(cfg.seed);
    let bound = 0.5 / d as f64;
    let mut input: Vec<f64> = (0..vocab * d)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    let mut output = vec![0.0; vocab * d];
    let sampler = NegativeSampler::new(&counts);

    let positions_per_epoch: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let total_positions = (positions_per_epoch * cfg.epochs as u64).max(1);
    let mut processed = 0u64;
    let mut report = TrainingReport::default();
    let mut grad = vec![0.0; d];

    let keep = keep_probabilities(&counts, cfg.subsample);
    let mut sentence = Vec::new();

    for _epoch in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0u64;
        for full in &sentences {
            sentence.clear();
            for &t in full {
                let p = keep[t as usize];
                if p >= 1.0 || rng.random::<f64>() < p {
                    sentence.push(t);
                }
            }
            // Decay counts dropped tokens too, so the schedule ends at the floor.
            let progress = processed as f64 / total_positions as f64;
            let lr = cfg.learning_rate * (1.0 - progress).max(MIN_LR_FRACTION);
            processed += full.len() as u64;
            for (i, &center) in sentence.iter().enumerate() {
                let win = if cfg.shrink_window {
                    rng.random_range(1..=cfg.window)
                } else {
                    cfg.window
                };
                let lo = i.saturating_sub(win);
                let hi = (i + win + 1).min(sentence.len());
                let c_off = center as usize * d;
                for (j, &context) in sentence.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let h = &input[c_off..c_off + d];
                    // positive target, then negatives
                    let mut pair_loss = 0.0;
                    for k in 0..=cfg.negatives {
                        let (target, label) = if k == 0 {
                            (context as usize, 1.0)
                        } else {
                            let t = sampler.sample(&mut rng);
                            if t == context as usize {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let t_off = target * d;
                        let out_row = &mut output[t_off..t_off + d];
                        let score = dot(h, out_row);
                        pair_loss += if label == 1.0 {
                            neg_log_sigmoid(score)
                        } else {
                            neg_log_sigmoid(-score)
                        };
                        let g = (label - sigmoid(score)) * lr;
                        for ((acc, o), x) in grad.iter_mut().zip(out_row.iter_mut()).zip(h) {
                            *acc += g * *o;
                            *o += g * x;
                        }
                    }
                    for (x, g) in input[c_off..c_off + d].iter_mut().zip(&grad) {
                        *x += g;
                    }
                    loss_sum += pair_loss;
                    pairs += 1;
                }
            }
        }
        report.pairs_per_epoch = pairs;
        report
            .epoch_losses
            .push(if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 });
    }

    if input.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericFailure("training diverged".into()));
    }
    let space = EmbeddingSpace {
        dimension: d,
        index: kept
            .iter()
            .enumerate()
            .map(|(new, &old)| (corpus.vocabulary()[old].clone(), new))
            .collect(),
        tokens: kept.iter().map(|&old| corpus.vocabulary()[old].clone()).collect(),
        data: input,
    };
    Ok((space, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    #[test]
    fn loss_at_zero_scores() {
        let c = [0.0, 0.0];
        let o = [1.0, 2.0];
        let n = [3.0, -1.0];
        assert_abs_diff_eq!(sgns_pair_loss(&c, &o, &[&n]).unwrap(), 2.0 * LN_2, epsilon = 1e-15);
    }

    #[test]
    fn loss_saturates_to_ln2_per_orthogonal_negative() {
        let c = [1e3, 0.0];
        let o = [1e3, 0.0];
        let n1 = [0.0, 1.0];
        let n2 = [0.0, -5.0];
        let l = sgns_pair_loss(&c, &o, &[&n1, &n2]).unwrap();
        assert_abs_diff_eq!(l, 2.0 * LN_2, epsilon = 1e-12);
    }

    #[test]
    fn loss_dimension_mismatch() {
        assert!(matches!(
            sgns_pair_loss(&[1.0], &[1.0, 2.0], &[]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(sgns_pair_gradient(&[1.0], &[1.0], &[&[1.0, 0.0]]).is_err());
    }

    #[test]
    fn loss_is_stable_for_large_scores() {
        let l = sgns_pair_loss(&[-1e4], &[1e4], &[]).unwrap();
        assert!(l.is_finite() && l > 1e7);
    }

    #[test]
    fn config_validation() {
        assert!(TrainingConfig::default().validate().is_ok());
        let base = TrainingConfig::default();
        for bad in [
            TrainingConfig { window: 0, ..base.clone() },
            TrainingConfig { learning_rate: 0.0, ..base.clone() },
            TrainingConfig { subsample: -1.0, ..base.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn keep_probability_drops_only_frequent_tokens() {
        // one token holds 99.98% of the occurrences
        let keep = keep_probabilities(&[1_000_000, 100, 100], 1e-3);
        assert!(keep[0] < 0.05);
        assert!(keep[1] >= 1.0 && keep[2] >= 1.0);
        assert_eq!(keep_probabilities(&[1000, 5], 0.0), vec![1.0, 1.0]);
    }

    #[test]
    fn min_count_filters_vocabulary() {
        let corpus =
            WalkCorpus::from_walks(vec![vec!["a", "r", "b"], vec!["a", "r", "c"]]).unwrap();
        let cfg = TrainingConfig {
            dimension: 4,
            min_count: 2,
            epochs: 1,
            ..TrainingConfig::default()
        };
        let space = train(&corpus, &cfg).unwrap();
        assert!(space.contains("a") && space.contains("r"));
        assert!(!space.contains("b") && !space.contains("c"));
        let cfg = TrainingConfig { min_count: 3, ..cfg };
        assert!(matches!(train(&corpus, &cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn empty_corpus_rejected() {
        let corpus = WalkCorpus::from_walks(Vec::<Vec<&str>>::new()).unwrap();
        assert!(train(&corpus, &TrainingConfig::default()).is_err());
    }

    #[test]
    fn text_dump_round_trip() {
        let space = EmbeddingSpace::from_vectors(
            3,
            vec![("a", vec![0.1, -2.5e-7, 3.0]), ("http://x/b", vec![1.0 / 3.0, 0.0, -0.0])],
        )
        .unwrap();
        let mut buf = Vec::new();
        space.write_text(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("2 3\n"));
        assert_eq!(EmbeddingSpace::read_text(&buf[..]).unwrap(), space);
    }

    #[test]
    fn text_dump_errors() {
        assert!(EmbeddingSpace::read_text("2 2\na 1 2\n".as_bytes()).is_err());
        assert!(matches!(
            EmbeddingSpace::read_text("1 2\na 1\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(EmbeddingSpace::read_text("1 2\na 1 x\n".as_bytes()).is_err());
        assert!(EmbeddingSpace::read_text("".as_bytes()).is_err());
    }

    #[test]
    fn from_vectors_validates() {
        assert!(EmbeddingSpace::from_vectors(2, vec![("a", vec![1.0])]).is_err());
        assert!(EmbeddingSpace::from_vectors(1, vec![("a", vec![f64::NAN])]).is_err());
        assert!(EmbeddingSpace::from_vectors(1, vec![("a", vec![1.0]), ("a", vec![2.0])]).is_err());
    }
}
