//! Compiles a directory of JATS articles into a labeled, split corpus.
//!
//! `cargo run --example build_corpus [xml_dir] [out_dir]`

use std::path::PathBuf;

use citeworth::corpus::{build_dataset, read_article_dir, tree_stats, write_split, CorpusConfig, DEFAULT_FRACTIONS};

fn main() -> citeworth::Result<()> {
    let mut args = std::env::args().skip(1);
    let xml_dir = args
        .next()
        .map_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/jats"), PathBuf::from);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("citeworth-corpus"), PathBuf::from);

    let config = CorpusConfig::default();
    let (articles, failures) = read_article_dir(&xml_dir, &config.segmenter)?;
    for (path, e) in &failures {
        eprintln!("skipped {}: {e}", path.display());
    }
    let split = build_dataset(&articles, DEFAULT_FRACTIONS, 42, &config)?;
    let stats = tree_stats(&articles, split.all());
    write_split(&out, &split, &stats)?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    for s in split.all().take(5) {
        println!("{} [{}] {}", u8::from(s.label), s.section_type, s.text);
    }
    println!("written to {}", out.display());
    Ok(())
}
