//! Corpus compiler: JATS parsing, sentence segmentation, citation labeling,
//! hint removal, length filtering and article-level splits.

mod clean;
mod dataset;
mod hints;
mod jats;
mod segment;
mod stats;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use clean::clean_sentence;
pub use dataset::{
    build_dataset, char_len, filter_outliers, group_by_article, index_by_id, label_articles,
    read_acl_arc, read_dataset, read_jsonl, read_tsv, split_groups, word_len, write_jsonl,
    write_tsv, CorpusConfig, CorpusSplit, LabeledSentence, LengthBounds, NeighborScope,
    DEFAULT_FRACTIONS, UNKNOWN_SECTION,
};
pub use hints::{contains_citation_hint, strip_citation_hints};
pub use jats::{
    parse_article, parse_article_with, read_article, ArticleTree, Paragraph, RawSentence, Section,
    BODY_SECTION,
};
pub use segment::{
    segment_sentences, segment_spans, segment_with, SegmenterConfig, DEFAULT_ABBREVIATIONS,
};
pub use stats::{corpus_stats, split_stats, tree_stats, StatsTable};

use crate::error::{Error, Result};

pub const TRAIN_FILE: &str = "train.jsonl";
pub const VALID_FILE: &str = "valid.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const STATS_FILE: &str = "stats.json";

/// Article files (`.xml`, `.xml.gz`) in `dir`, sorted by name.
pub fn list_article_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            name.ends_with(".xml") || name.ends_with(".xml.gz")
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Parses every article in `dir` in parallel. Files that fail to parse are
/// returned alongside their error instead of aborting the run.
pub fn read_article_dir(
    dir: &Path,
    segmenter: &SegmenterConfig,
) -> Result<(Vec<ArticleTree>, Vec<(PathBuf, Error)>)> {
    let files = list_article_files(dir)?;
    let results: Vec<(PathBuf, Result<ArticleTree>)> = files
        .into_par_iter()
        .map(|p| {
            let r = read_article(&p, segmenter);
            (p, r)
        })
        .collect();
    let mut trees = Vec::new();
    let mut failures = Vec::new();
    for (path, r) in results {
        match r {
            Ok(t) => trees.push(t),
            Err(e) => failures.push((path, e)),
        }
    }
    Ok((trees, failures))
}

/// Writes `train.jsonl`, `valid.jsonl`, `test.jsonl` and `stats.json`.
pub fn write_split(dir: &Path, split: &CorpusSplit, stats: &StatsTable) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_jsonl(&dir.join(TRAIN_FILE), &split.train)?;
    write_jsonl(&dir.join(VALID_FILE), &split.validation)?;
    write_jsonl(&dir.join(TEST_FILE), &split.test)?;
    std::fs::write(dir.join(STATS_FILE), serde_json::to_string_pretty(stats)? + "\n")?;
    Ok(())
}

pub fn read_split(dir: &Path) -> Result<CorpusSplit> {
    let train = read_jsonl(&dir.join(TRAIN_FILE))?;
    let validation = read_jsonl(&dir.join(VALID_FILE))?;
    let test = read_jsonl(&dir.join(TEST_FILE))?;
    Ok(CorpusSplit {
        train,
        validation,
        test,
        split_fractions: DEFAULT_FRACTIONS,
        seed: 0,
        context_only: Vec::new(),
    })
}
