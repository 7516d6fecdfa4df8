//! Labeled sentence datasets: labeling, length filtering, neighbor linking,
//! article-level splitting and the JSON-lines / TSV dataset files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::jats::{collapse_ws, ArticleTree};
use super::segment::SegmenterConfig;
use super::{clean_sentence, contains_citation_hint, strip_citation_hints};
use crate::error::{Error, Result};

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.6, 0.2, 0.2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSentence {
    /// `<article_id>#<position>`, unique within a corpus.
    pub id: String,
    pub article_id: String,
    pub text: String,
    pub label: bool,
    pub section_type: String,
    pub char_len: usize,
    pub word_len: usize,
    pub prev_id: Option<String>,
    pub next_id: Option<String>,
    pub prev_has_citation: bool,
    pub next_has_citation: bool,
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

pub fn word_len(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Closed intervals on character and word counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthBounds {
    pub chars: (usize, usize),
    pub words: (usize, usize),
}

impl Default for LengthBounds {
    fn default() -> Self {
        Self {
            chars: (19, 275),
            words: (3, 42),
        }
    }
}

impl LengthBounds {
    pub fn contains(&self, char_len: usize, word_len: usize) -> bool {
        (self.chars.0..=self.chars.1).contains(&char_len)
            && (self.words.0..=self.words.1).contains(&word_len)
    }

    /// Empirical 5% / 95% quantiles of the given sentence lengths.
    pub fn from_quantiles(sentences: &[LabeledSentence], low: f64, high: f64) -> Self {
        let mut chars: Vec<usize> = sentences.iter().map(|s| s.char_len).collect();
        let mut words: Vec<usize> = sentences.iter().map(|s| s.word_len).collect();
        chars.sort_unstable();
        words.sort_unstable();
        Self {
            chars: (quantile(&chars, low), quantile(&chars, high)),
            words: (quantile(&words, low), quantile(&words, high)),
        }
    }
}

/// Nearest-rank quantile of sorted data.
fn quantile(sorted: &[usize], q: f64) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// How far neighbor links reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborScope {
    Paragraph,
    Section,
    #[default]
    Article,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub bounds: LengthBounds,
    /// Replace `bounds` with the corpus' own 5% / 95% length quantiles.
    pub quantile_bounds: bool,
    pub neighbor_scope: NeighborScope,
    pub segmenter: SegmenterConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            bounds: LengthBounds::default(),
            quantile_bounds: false,
            neighbor_scope: NeighborScope::default(),
            segmenter: SegmenterConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<LabeledSentence>,
    pub validation: Vec<LabeledSentence>,
    pub test: Vec<LabeledSentence>,
    pub split_fractions: [f64; 3],
    pub seed: u64,
    /// Sentences removed from `train` by down-sampling. They are no longer
    /// training instances but still resolve as neighbors.
    #[serde(default)]
    pub context_only: Vec<LabeledSentence>,
}

impl CorpusSplit {
    pub fn all(&self) -> impl Iterator<Item = &LabeledSentence> {
        self.train
            .iter()
            .chain(&self.validation)
            .chain(&self.test)
            .chain(&self.context_only)
    }
}

/// Keeps exactly the sentences whose lengths fall inside both closed intervals.
pub fn filter_outliers(sentences: Vec<LabeledSentence>, bounds: &LengthBounds) -> Vec<LabeledSentence> {
    sentences
        .into_iter()
        .filter(|s| bounds.contains(s.char_len, s.word_len))
        .collect()
}

struct Positioned {
    sentence: LabeledSentence,
    section: usize,
    paragraph: usize,
}

/// Cleans and labels every sentence of an article, without filtering or links.
fn label_article(tree: &ArticleTree) -> Vec<Positioned> {
    let mut out = Vec::new();
    let mut paragraph = 0;
    for (si, section) in tree.sections.iter().enumerate() {
        for para in &section.paragraphs {
            for raw in &para.sentences {
                let normalized = collapse_ws(&raw.text);
                let label = raw.has_citation || contains_citation_hint(&normalized);
                let text = clean_sentence(&strip_citation_hints(&normalized));
                out.push(Positioned {
                    sentence: LabeledSentence {
                        id: String::new(),
                        article_id: tree.article_id.clone(),
                        char_len: char_len(&text),
                        word_len: word_len(&text),
                        text,
                        label,
                        section_type: section.section_type.clone(),
                        prev_id: None,
                        next_id: None,
                        prev_has_citation: false,
                        next_has_citation: false,
                    },
                    section: si,
                    paragraph,
                });
            }
            paragraph += 1;
        }
    }
    out
}

fn link_neighbors(mut items: Vec<Positioned>, scope: NeighborScope) -> Vec<LabeledSentence> {
    for (i, item) in items.iter_mut().enumerate() {
        item.sentence.id = format!("{}#{}", item.sentence.article_id, i);
    }
    let same_scope = |a: &Positioned, b: &Positioned| match scope {
        NeighborScope::Paragraph => a.paragraph == b.paragraph,
        NeighborScope::Section => a.section == b.section,
        NeighborScope::Article => true,
    };
    let mut links = Vec::with_capacity(items.len());
    for i in 0..items.len() {
        let prev = (i > 0 && same_scope(&items[i - 1], &items[i]))
            .then(|| (items[i - 1].sentence.id.clone(), items[i - 1].sentence.label));
        let next = (i + 1 < items.len() && same_scope(&items[i + 1], &items[i]))
            .then(|| (items[i + 1].sentence.id.clone(), items[i + 1].sentence.label));
        links.push((prev, next));
    }
    items
        .into_iter()
        .zip(links)
        .map(|(item, (prev, next))| {
            let mut s = item.sentence;
            s.prev_has_citation = prev.as_ref().is_some_and(|p| p.1);
            s.next_has_citation = next.as_ref().is_some_and(|n| n.1);
            s.prev_id = prev.map(|p| p.0);
            s.next_id = next.map(|n| n.0);
            s
        })
        .collect()
}

/// Labels, filters and links the sentences of each article. Returns one
/// group per article, in input order.
pub fn label_articles(articles: &[ArticleTree], config: &CorpusConfig) -> Vec<Vec<LabeledSentence>> {
    let labeled: Vec<Vec<Positioned>> = articles.iter().map(label_article).collect();
    let bounds = if config.quantile_bounds {
        let flat: Vec<LabeledSentence> = labeled
            .iter()
            .flatten()
            .map(|p| p.sentence.clone())
            .collect();
        LengthBounds::from_quantiles(&flat, 0.05, 0.95)
    } else {
        config.bounds
    };
    labeled
        .into_iter()
        .map(|items| {
            let kept = items
                .into_iter()
                .filter(|p| bounds.contains(p.sentence.char_len, p.sentence.word_len))
                .collect();
            link_neighbors(kept, config.neighbor_scope)
        })
        .collect()
}

pub fn build_dataset(
    articles: &[ArticleTree],
    fractions: [f64; 3],
    seed: u64,
    config: &CorpusConfig,
) -> Result<CorpusSplit> {
    validate_fractions(fractions)?;
    if articles.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} articles; at least 3 are needed for a three-way split",
            articles.len()
        )));
    }
    split_groups(label_articles(articles, config), fractions, seed)
}

fn validate_fractions(fractions: [f64; 3]) -> Result<()> {
    let sum: f64 = fractions.iter().sum();
    if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidFractions(fractions));
    }
    Ok(())
}

/// Shuffles whole groups (articles) with `seed` and partitions them by `fractions`.
pub fn split_groups(
    groups: Vec<Vec<LabeledSentence>>,
    fractions: [f64; 3],
    seed: u64,
) -> Result<CorpusSplit> {
    validate_fractions(fractions)?;
    if groups.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} groups; at least 3 are needed for a three-way split",
            groups.len()
        )));
    }
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let counts = partition_counts(groups.len(), fractions);

    let mut groups: Vec<Option<Vec<LabeledSentence>>> = groups.into_iter().map(Some).collect();
    let mut parts: [Vec<LabeledSentence>; 3] = Default::default();
    let mut cursor = order.into_iter();
    for (part, count) in parts.iter_mut().zip(counts) {
        for idx in cursor.by_ref().take(count) {
            part.extend(groups[idx].take().unwrap_or_default());
        }
    }
    let [train, validation, test] = parts;
    Ok(CorpusSplit {
        train,
        validation,
        test,
        split_fractions: fractions,
        seed,
        context_only: Vec::new(),
    })
}

/// Largest-remainder apportionment; every part with a positive fraction
/// gets at least one group when there are enough groups.
fn partition_counts(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts = [0usize; 3];
    for i in 0..3 {
        counts[i] = exact[i].floor() as usize;
    }
    let mut rest = n - counts.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..3).collect();
    by_remainder.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .partial_cmp(&(exact[a] - exact[a].floor()))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &i in by_remainder.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    for i in 0..3 {
        if fractions[i] > 0.0 && counts[i] == 0 {
            let donor = (0..3).max_by_key(|&j| counts[j]).unwrap_or(0);
            if counts[donor] > 1 {
                counts[donor] -= 1;
                counts[i] += 1;
            }
        }
    }
    counts
}

/// Index from sentence id to sentence, for resolving neighbor links.
pub fn index_by_id<'a>(
    sentences: impl IntoIterator<Item = &'a LabeledSentence>,
) -> HashMap<&'a str, &'a LabeledSentence> {
    sentences.into_iter().map(|s| (s.id.as_str(), s)).collect()
}

// ---------------------------------------------------------------------------
// Dataset files

pub fn write_jsonl(path: &Path, sentences: &[LabeledSentence]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for s in sentences {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<LabeledSentence>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: n + 1,
            reason: e.to_string(),
        })?;
        out.push(s);
    }
    Ok(out)
}

const TSV_HEADER: &str = "id\tarticle_id\ttext\tlabel\tsection_type\tchar_len\tword_len\tprev_id\tnext_id\tprev_has_citation\tnext_has_citation";

pub fn write_tsv(path: &Path, sentences: &[LabeledSentence]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{TSV_HEADER}")?;
    let flag = |b: bool| if b { "1" } else { "0" };
    for s in sentences {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.id,
            s.article_id,
            collapse_ws(&s.text),
            flag(s.label),
            s.section_type,
            s.char_len,
            s.word_len,
            s.prev_id.as_deref().unwrap_or(""),
            s.next_id.as_deref().unwrap_or(""),
            flag(s.prev_has_citation),
            flag(s.next_has_citation),
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_tsv(path: &Path) -> Result<Vec<LabeledSentence>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse {
            path: path.to_owned(),
            line: n + 1,
            reason,
        };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 11 {
            return Err(err(format!("expected 11 fields, found {}", f.len())));
        }
        let flag = |v: &str| match v {
            "1" => Ok(true),
            "0" => Ok(false),
            other => Err(err(format!("bad flag {other:?}"))),
        };
        let num = |v: &str| v.parse::<usize>().map_err(|e| err(e.to_string()));
        let opt = |v: &str| (!v.is_empty()).then(|| v.to_owned());
        out.push(LabeledSentence {
            id: f[0].to_owned(),
            article_id: f[1].to_owned(),
            text: f[2].to_owned(),
            label: flag(f[3])?,
            section_type: f[4].to_owned(),
            char_len: num(f[5])?,
            word_len: num(f[6])?,
            prev_id: opt(f[7]),
            next_id: opt(f[8]),
            prev_has_citation: flag(f[9])?,
            next_has_citation: flag(f[10])?,
        });
    }
    Ok(out)
}

/// Reads `.jsonl` or `.tsv` by extension.
pub fn read_dataset(path: &Path) -> Result<Vec<LabeledSentence>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") => read_tsv(path),
        _ => read_jsonl(path),
    }
}

/// Section type given to sentences that come without structure.
pub const UNKNOWN_SECTION: &str = "unknown";

/// Reads the pre-processed ACL-ARC distribution: one sentence per line with
/// a `0`/`1` label in the first or last tab-separated column. Each sentence is
/// its own group and carries no neighbors.
pub fn read_acl_arc(path: &Path) -> Result<Vec<LabeledSentence>> {
    let reader = BufReader::new(File::open(path)?);
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("acl")
        .to_owned();
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (label, text) = split_label(line).ok_or_else(|| Error::Parse {
            path: path.to_owned(),
            line: n + 1,
            reason: "no 0/1 label column".into(),
        })?;
        let text = clean_sentence(&strip_citation_hints(&collapse_ws(text)));
        if text.is_empty() {
            continue;
        }
        let article_id = format!("{stem}-{}", n + 1);
        out.push(LabeledSentence {
            id: format!("{article_id}#0"),
            article_id,
            char_len: char_len(&text),
            word_len: word_len(&text),
            text,
            label,
            section_type: UNKNOWN_SECTION.to_owned(),
            prev_id: None,
            next_id: None,
            prev_has_citation: false,
            next_has_citation: false,
        });
    }
    Ok(out)
}

fn split_label(line: &str) -> Option<(bool, &str)> {
    let parse = |v: &str| match v.trim() {
        "1" => Some(true),
        "0" => Some(false),
        _ => None,
    };
    if let Some((head, tail)) = line.split_once('\t') {
        if let Some(l) = parse(head) {
            return Some((l, tail));
        }
    }
    let (head, tail) = line.rsplit_once('\t')?;
    parse(tail).map(|l| (l, head))
}

/// Groups sentences by article id, keeping first-seen order.
pub fn group_by_article(sentences: Vec<LabeledSentence>) -> Vec<Vec<LabeledSentence>> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<LabeledSentence>> = HashMap::new();
    for s in sentences {
        if !groups.contains_key(&s.article_id) {
            order.push(s.article_id.clone());
        }
        groups.entry(s.article_id.clone()).or_default().push(s);
    }
    order
        .into_iter()
        .filter_map(|id| groups.remove(&id))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_article;

    fn article(id: &str, sentences: &[&str]) -> ArticleTree {
        let body: String = sentences.iter().map(|s| format!("{s} ")).collect();
        let xml = format!(
            "<article><front><article-meta><article-id>{id}</article-id></article-meta></front>\
             <body><sec sec-type=\"intro\"><p>{body}</p></sec></body></article>"
        );
        parse_article(xml.as_bytes()).unwrap()
    }

    fn ten_articles() -> Vec<ArticleTree> {
        (0..10)
            .map(|i| {
                article(
                    &format!("a{i}"),
                    &["This sentence has enough words.", "Another reasonably long sentence here."],
                )
            })
            .collect()
    }

    #[test]
    fn partition_is_by_article_and_deterministic() {
        let arts = ten_articles();
        let cfg = CorpusConfig::default();
        let a = build_dataset(&arts, DEFAULT_FRACTIONS, 7, &cfg).unwrap();
        let b = build_dataset(&arts, DEFAULT_FRACTIONS, 7, &cfg).unwrap();
        assert_eq!(a, b);
        let count = |v: &[LabeledSentence]| {
            v.iter().map(|s| s.article_id.as_str()).collect::<std::collections::HashSet<_>>().len()
        };
        assert_eq!((count(&a.train), count(&a.validation), count(&a.test)), (6, 2, 2));
    }

    #[test]
    fn rejects_bad_fractions_and_small_corpora() {
        let arts = ten_articles();
        let cfg = CorpusConfig::default();
        assert!(matches!(
            build_dataset(&arts, [0.5, 0.5, 0.1], 1, &cfg),
            Err(Error::InvalidFractions(_))
        ));
        assert!(matches!(
            build_dataset(&arts[..2], DEFAULT_FRACTIONS, 1, &cfg),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn three_groups_fill_every_part() {
        assert_eq!(partition_counts(3, DEFAULT_FRACTIONS), [1, 1, 1]);
        assert_eq!(partition_counts(10, DEFAULT_FRACTIONS), [6, 2, 2]);
        assert_eq!(partition_counts(7, [1.0, 0.0, 0.0]), [7, 0, 0]);
    }

    #[test]
    fn closed_length_bounds() {
        let b = LengthBounds::default();
        assert!(b.contains(19, 3));
        assert!(b.contains(275, 42));
        assert!(!b.contains(18, 3));
        assert!(!b.contains(100, 43));
        assert!(!b.contains(10_000, 10));
    }

    #[test]
    fn quantile_mode() {
        let mk = |n: usize| LabeledSentence {
            id: String::new(),
            article_id: String::new(),
            text: String::new(),
            label: false,
            section_type: String::new(),
            char_len: n,
            word_len: n,
            prev_id: None,
            next_id: None,
            prev_has_citation: false,
            next_has_citation: false,
        };
        let v: Vec<_> = (1..=100).map(mk).collect();
        let b = LengthBounds::from_quantiles(&v, 0.05, 0.95);
        assert_eq!(b.chars, (5, 95));
    }

    #[test]
    fn acl_arc_label_columns() {
        assert_eq!(split_label("1\tSome text"), Some((true, "Some text")));
        assert_eq!(split_label("Some text\t0"), Some((false, "Some text")));
        assert_eq!(split_label("Some text"), None);
    }

    #[test]
    fn tsv_and_jsonl_round_trip() {
        let arts = ten_articles();
        let split = build_dataset(&arts, DEFAULT_FRACTIONS, 3, &CorpusConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let j = dir.path().join("t.jsonl");
        let t = dir.path().join("t.tsv");
        write_jsonl(&j, &split.train).unwrap();
        write_tsv(&t, &split.train).unwrap();
        assert_eq!(read_dataset(&j).unwrap(), split.train);
        assert_eq!(read_dataset(&t).unwrap(), split.train);
    }
}
