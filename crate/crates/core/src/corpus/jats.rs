//! JATS XML article parsing into a section / paragraph / sentence tree.

use std::io::Read;
use std::path::Path;

use roxmltree::{Document, Node, ParsingOptions};
use serde::{Deserialize, Serialize};

use super::segment::{segment_spans, SegmenterConfig};
use crate::error::{Error, Result};

/// Section type used for paragraphs that sit directly under `<body>`.
pub const BODY_SECTION: &str = "body";
const UNTITLED_SECTION: &str = "untitled";

/// Elements whose `<p>` children are captions or table cells, not running text.
const NON_PROSE: &[&str] = &["fig", "table-wrap", "table", "caption", "fn-group", "ref-list"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleTree {
    pub article_id: String,
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    /// The `sec-type` attribute, or the section title when it is absent.
    pub section_type: String,
    pub title: String,
    pub paragraphs: Vec<Paragraph>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub text: String,
    pub sentences: Vec<RawSentence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSentence {
    pub text: String,
    /// Byte ranges `(start, end)` of bibliographic cross-references inside `text`.
    pub citation_spans: Vec<(usize, usize)>,
    pub has_citation: bool,
}

impl ArticleTree {
    pub fn sentences(&self) -> impl Iterator<Item = (&Section, &RawSentence)> {
        self.sections.iter().flat_map(|sec| {
            sec.paragraphs
                .iter()
                .flat_map(move |p| p.sentences.iter().map(move |s| (sec, s)))
        })
    }

    pub fn paragraph_count(&self) -> usize {
        self.sections.iter().map(|s| s.paragraphs.len()).sum()
    }
}

/// Parses a JATS document with the default segmenter.
pub fn parse_article(xml: &[u8]) -> Result<ArticleTree> {
    parse_article_with(xml, &SegmenterConfig::default())
}

pub fn parse_article_with(xml: &[u8], segmenter: &SegmenterConfig) -> Result<ArticleTree> {
    let text = std::str::from_utf8(xml).map_err(|e| Error::MalformedXml(e.to_string()))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let doc = Document::parse_with_options(
        text,
        ParsingOptions {
            allow_dtd: true,
            ..Default::default()
        },
    )
    .map_err(|e| Error::MalformedXml(e.to_string()))?;

    let root = doc.root_element();
    let article_id = find_article_id(root).unwrap_or_default();

    let mut sections = Vec::new();
    if let Some(body) = root.descendants().find(|n| n.has_tag_name("body")) {
        let mut loose = Vec::new();
        for child in body.children().filter(Node::is_element) {
            match child.tag_name().name() {
                "sec" => sections.push(parse_section(child, segmenter)),
                "p" => loose.extend(parse_paragraph(child, segmenter)),
                _ => {}
            }
        }
        if !loose.is_empty() {
            sections.insert(
                0,
                Section {
                    section_type: BODY_SECTION.to_owned(),
                    title: String::new(),
                    paragraphs: loose,
                },
            );
        }
    }
    sections.retain(|s| !s.paragraphs.is_empty());
    if sections.is_empty() {
        return Err(Error::EmptyArticle(article_id));
    }
    Ok(ArticleTree {
        article_id,
        sections,
    })
}

/// Reads a `.xml` or `.xml.gz` file. The file stem stands in for a missing
/// article id.
pub fn read_article(path: &Path, segmenter: &SegmenterConfig) -> Result<ArticleTree> {
    let raw = std::fs::read(path)?;
    let bytes = if path.extension().is_some_and(|e| e == "gz") {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        out
    } else {
        raw
    };
    let mut tree = parse_article_with(&bytes, segmenter)?;
    if tree.article_id.is_empty() {
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("article");
        tree.article_id = name
            .trim_end_matches(".gz")
            .trim_end_matches(".xml")
            .to_owned();
    }
    Ok(tree)
}

fn find_article_id(root: Node) -> Option<String> {
    let ids: Vec<Node> = root
        .descendants()
        .filter(|n| n.has_tag_name("article-id"))
        .collect();
    ids.iter()
        .find(|n| n.attribute("pub-id-type") == Some("pmc"))
        .or_else(|| ids.first())
        .map(|n| flatten(*n).0.trim().to_owned())
        .filter(|s| !s.is_empty())
}

fn parse_section(sec: Node, segmenter: &SegmenterConfig) -> Section {
    let title = sec
        .children()
        .find(|n| n.has_tag_name("title"))
        .map(|t| collapse_ws(&flatten(t).0))
        .unwrap_or_default();
    let section_type = sec
        .attribute("sec-type")
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .or_else(|| (!title.is_empty()).then(|| title.clone()))
        .unwrap_or_else(|| UNTITLED_SECTION.to_owned());

    let paragraphs = sec
        .descendants()
        .filter(|n| n.has_tag_name("p") && is_prose_paragraph(*n, sec))
        .filter_map(|p| parse_paragraph(p, segmenter))
        .collect();
    Section {
        section_type,
        title,
        paragraphs,
    }
}

/// A `<p>` counts as a paragraph unless it is nested in another `<p>` or in
/// a figure/table/caption below `scope`.
fn is_prose_paragraph(p: Node, scope: Node) -> bool {
    p.ancestors()
        .skip(1)
        .take_while(|a| *a != scope)
        .all(|a| !a.has_tag_name("p") && !NON_PROSE.contains(&a.tag_name().name()))
}

fn parse_paragraph(p: Node, segmenter: &SegmenterConfig) -> Option<Paragraph> {
    let (text, markers) = flatten(p);
    if text.trim().is_empty() {
        return None;
    }
    let spans = segment_spans(&text, segmenter);
    let mut sentences = Vec::with_capacity(spans.len());
    for (i, span) in spans.iter().enumerate() {
        // A marker belongs to the sentence whose region (up to the next
        // sentence start) contains its start offset.
        let region_end = spans.get(i + 1).map_or(usize::MAX, |next| next.start);
        let region_start = if i == 0 { 0 } else { span.start };
        let mut citation_spans = Vec::new();
        let mut attached = false;
        for &(ms, me) in &markers {
            if ms >= region_start && ms < region_end {
                attached = true;
                let s = ms.clamp(span.start, span.end) - span.start;
                let e = me.clamp(span.start, span.end) - span.start;
                if e > s {
                    citation_spans.push((s, e));
                }
            }
        }
        sentences.push(RawSentence {
            text: text[span.clone()].to_owned(),
            has_citation: attached || !citation_spans.is_empty(),
            citation_spans,
        });
    }
    Some(Paragraph { text, sentences })
}

/// Concatenated character data below `node` in document order, with the byte
/// ranges of every `<xref ref-type="bibr">`.
fn flatten(node: Node) -> (String, Vec<(usize, usize)>) {
    let mut text = String::new();
    let mut markers = Vec::new();
    flatten_into(node, &mut text, &mut markers);
    (text, markers)
}

fn flatten_into(node: Node, text: &mut String, markers: &mut Vec<(usize, usize)>) {
    for child in node.children() {
        if child.is_text() {
            text.push_str(child.text().unwrap_or_default());
        } else if child.is_element() {
            let is_bibr =
                child.has_tag_name("xref") && child.attribute("ref-type") == Some("bibr");
            let start = text.len();
            flatten_into(child, text, markers);
            if is_bibr {
                markers.push((start, text.len()));
            }
        }
    }
}

pub(crate) fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"<?xml version="1.0"?>
<article><front><article-meta><article-id pub-id-type="pmc">PMC1</article-id></article-meta></front>
<body><sec sec-type="intro"><title>Introduction</title>
<p>Prior work exists <xref ref-type="bibr" rid="b1">[1]</xref>. We go further.</p></sec></body></article>"#;

    #[test]
    fn minimal_document() {
        let tree = parse_article(MINIMAL.as_bytes()).unwrap();
        assert_eq!(tree.article_id, "PMC1");
        assert_eq!(tree.sections.len(), 1);
        assert_eq!(tree.sections[0].section_type, "intro");
        assert_eq!(tree.sections[0].paragraphs.len(), 1);
        let sents = &tree.sections[0].paragraphs[0].sentences;
        assert_eq!(sents.len(), 2);
        assert!(sents[0].has_citation);
        assert_eq!(sents[0].citation_spans.len(), 1);
        let (s, e) = sents[0].citation_spans[0];
        assert_eq!(&sents[0].text[s..e], "[1]");
        assert!(!sents[1].has_citation);
    }

    #[test]
    fn title_fallback() {
        let xml = r#"<article><body><sec><title>Discussion</title><p>Text here.</p></sec></body></article>"#;
        let tree = parse_article(xml.as_bytes()).unwrap();
        assert_eq!(tree.sections[0].section_type, "Discussion");
    }

    #[test]
    fn nested_inline_markup_is_flattened() {
        let xml = r#"<article><body><sec sec-type="m"><p>A <italic>very <bold>bold</bold></italic> claim.</p></sec></body></article>"#;
        let tree = parse_article(xml.as_bytes()).unwrap();
        assert_eq!(tree.sections[0].paragraphs[0].text, "A very bold claim.");
    }

    #[test]
    fn empty_self_closing_xref_still_marks_sentence() {
        let xml = r#"<article><body><sec sec-type="m"><p>Known result.<xref ref-type="bibr" rid="b2"/> New one.</p></sec></body></article>"#;
        let tree = parse_article(xml.as_bytes()).unwrap();
        let s = &tree.sections[0].paragraphs[0].sentences;
        assert!(s[0].has_citation && s[0].citation_spans.is_empty());
        assert!(!s[1].has_citation);
    }

    #[test]
    fn non_bibliographic_xrefs_are_ignored() {
        let xml = r#"<article><body><sec sec-type="r"><p>See <xref ref-type="fig" rid="f1">Figure 1</xref> now.</p></sec></body></article>"#;
        let tree = parse_article(xml.as_bytes()).unwrap();
        assert!(!tree.sections[0].paragraphs[0].sentences[0].has_citation);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_article(b"<article><body>"), Err(Error::MalformedXml(_))));
        assert!(matches!(
            parse_article(b"<article><body><sec><p>  </p></sec></body></article>"),
            Err(Error::EmptyArticle(_))
        ));
    }
}
