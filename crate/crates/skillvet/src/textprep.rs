//! Policy text preprocessing: HTML stripping, normalization, sentence
//! splitting and blacklist/negation filtering.
//!
//! Sentences that survive preprocessing are lowercase printable ASCII with
//! single spaces, ready for the sentence classifier.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Contact-detail and negation phrases; sentences containing any of them are
/// dropped before classification.
#[derive(Debug, Clone)]
pub struct FilterList {
    pub contact_phrases: Vec<String>,
    pub negation_phrases: Vec<String>,
}

impl Default for FilterList {
    fn default() -> Self {
        FilterList {
            contact_phrases: [
                "contact us",
                "call us",
                "email us",
                "reach us",
                "write to us",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            negation_phrases: [
                "does not",
                "doesn't",
                "do not",
                "don't",
                "will not",
                "won't",
                "never collect",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        }
    }
}

impl FilterList {
    /// Loads a filter list from a plain-text config file: one phrase per
    /// line, sections marked `[contact]` and `[negation]`.
    pub fn load(path: &Path) -> Result<FilterList> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut contact = Vec::new();
        let mut negation = Vec::new();
        let mut section = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[contact]" => section = Some(true),
                "[negation]" => section = Some(false),
                phrase => match section {
                    Some(true) => contact.push(phrase.to_lowercase()),
                    Some(false) => negation.push(phrase.to_lowercase()),
                    None => {
                        return Err(Error::parse(
                            path,
                            i + 1,
                            "phrase before any [contact]/[negation] section",
                        ))
                    }
                },
            }
        }
        Ok(FilterList {
            contact_phrases: contact,
            negation_phrases: negation,
        })
    }

    fn matches(&self, sentence: &str) -> bool {
        self.contact_phrases
            .iter()
            .chain(&self.negation_phrases)
            .any(|p| sentence.contains(p.as_str()))
    }
}

/// A policy after cleaning, splitting and filtering.
#[derive(Debug, Clone)]
pub struct PreprocessedPolicy {
    pub policy_id: String,
    pub sentences: Vec<String>,
    pub dropped_count: usize,
    pub is_empty: bool,
}

/// Strips markup and normalizes text: script/style content and tags removed,
/// entities decoded, curly quotes and dash variants normalized, non-ASCII
/// discarded, whitespace collapsed, lowercased. Idempotent.
pub fn clean_html(raw: &str) -> String {
    let no_markup = strip_tags(raw);
    let decoded = decode_entities(&no_markup);
    let mut out = String::with_capacity(decoded.len());
    let mut last_space = true;
    for ch in decoded.chars() {
        let mapped = match ch {
            '\u{2018}' | '\u{2019}' | '\u{02BC}' => Some('\''),
            '\u{201C}' | '\u{201D}' => Some('"'),
            '\u{2013}' | '\u{2014}' | '\u{2212}' => Some('-'),
            '\u{00A0}' => Some(' '),
            c if c.is_whitespace() => Some(' '),
            c if c.is_ascii() && !c.is_ascii_control() => Some(c.to_ascii_lowercase()),
            _ => None, // non-ASCII discarded
        };
        if let Some(c) = mapped {
            if c == ' ' {
                if !last_space {
                    out.push(' ');
                    last_space = true;
                }
            } else {
                out.push(c);
                last_space = false;
            }
        }
    }
    out.trim().to_string()
}

/// Removes `<script>`/`<style>` elements with their content, and all other
/// tags. A `<` without a closing `>` swallows the rest of the input.
fn strip_tags(raw: &str) -> String {
    fn find_ci(haystack: &str, needle: &str) -> Option<usize> {
        let h = haystack.as_bytes();
        let n = needle.as_bytes();
        if n.is_empty() || h.len() < n.len() {
            return None;
        }
        (0..=h.len() - n.len()).find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
    }

    let mut out = String::with_capacity(raw.len());
    let bytes = raw.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'<' {
            // skip script/style elements entirely
            let rest = &raw[i..];
            let skip_to = if rest.len() >= 7 && rest.as_bytes()[..7].eq_ignore_ascii_case(b"<script") {
                Some("</script")
            } else if rest.len() >= 6 && rest.as_bytes()[..6].eq_ignore_ascii_case(b"<style") {
                Some("</style")
            } else {
                None
            };
            if let Some(close) = skip_to {
                match find_ci(rest, close) {
                    Some(off) => match raw[i + off..].find('>') {
                        Some(gt) => {
                            i += off + gt + 1;
                            continue;
                        }
                        None => break,
                    },
                    None => break,
                }
            }
            match rest.find('>') {
                Some(gt) => {
                    // tags separate words
                    out.push(' ');
                    i += gt + 1;
                }
                None => break,
            }
        } else {
            let ch = raw[i..].chars().next().unwrap();
            out.push(ch);
            i += ch.len_utf8();
        }
    }
    out
}

/// Decodes the handful of entities common in policy pages, repeatedly until
/// a fixpoint so double-escaped text still resolves.
fn decode_entities(text: &str) -> String {
    let mut cur = text.to_string();
    loop {
        let next = cur
            .replace("&nbsp;", " ")
            .replace("&quot;", "\"")
            .replace("&#39;", "'")
            .replace("&apos;", "'")
            .replace("&lt;", " ")
            .replace("&gt;", " ")
            .replace("&amp;", "&");
        if next == cur {
            return next;
        }
        cur = next;
    }
}

/// Abbreviations that do not end a sentence even when followed by space.
const ABBREVIATIONS: [&str; 16] = [
    "inc.", "ltd.", "llc.", "corp.", "co.", "e.g.", "i.e.", "u.s.", "u.k.", "dr.", "mr.", "mrs.",
    "ms.", "vs.", "etc.", "no.",
];

fn ends_with_abbreviation(fragment: &str) -> bool {
    let last = match fragment.rsplit(' ').next() {
        Some(w) => w,
        None => return false,
    };
    ABBREVIATIONS.contains(&last)
}

/// Splits cleaned text on terminal punctuation followed by whitespace, with
/// an abbreviation guard. Fragments shorter than 3 tokens are merged into
/// the following sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let text = text.trim();
    if text.is_empty() {
        return Vec::new();
    }
    let mut raw_parts: Vec<String> = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if matches!(chars[i], '.' | '!' | '?') {
            // consume a run of terminal punctuation
            let mut end = i + 1;
            while end < chars.len() && matches!(chars[end], '.' | '!' | '?') {
                end += 1;
            }
            let at_boundary = end >= chars.len() || chars[end] == ' ';
            if at_boundary {
                let fragment: String = chars[start..end].iter().collect();
                let fragment = fragment.trim().to_string();
                if !fragment.is_empty() && !ends_with_abbreviation(&fragment) {
                    raw_parts.push(fragment);
                    start = end;
                }
            }
            i = end;
        } else {
            i += 1;
        }
    }
    let tail: String = chars[start..].iter().collect();
    let tail = tail.trim().to_string();
    if !tail.is_empty() {
        raw_parts.push(tail);
    }

    // merge short fragments forward
    let mut sentences: Vec<String> = Vec::new();
    let mut pending = String::new();
    for part in raw_parts {
        let merged = if pending.is_empty() {
            part
        } else {
            format!("{pending} {part}")
        };
        if merged.split(' ').count() < 3 {
            pending = merged;
        } else {
            sentences.push(merged);
            pending = String::new();
        }
    }
    if !pending.is_empty() {
        match sentences.last_mut() {
            Some(last) => {
                last.push(' ');
                last.push_str(&pending);
            }
            None => sentences.push(pending),
        }
    }
    sentences
}

/// Drops sentences containing any contact or negation phrase; the rest keep
/// their order. Returns the kept sentences and the dropped count.
pub fn filter_sentences(sentences: &[String], filters: &FilterList) -> (Vec<String>, usize) {
    let mut kept = Vec::new();
    let mut dropped = 0;
    for s in sentences {
        if filters.matches(s) {
            dropped += 1;
        } else {
            kept.push(s.clone());
        }
    }
    (kept, dropped)
}

/// Full preprocessing pipeline: clean, split, filter.
pub fn preprocess_policy(policy_id: &str, raw: &str, filters: &FilterList) -> PreprocessedPolicy {
    let cleaned = clean_html(raw);
    let split = split_sentences(&cleaned);
    let (sentences, dropped_count) = filter_sentences(&split, filters);
    PreprocessedPolicy {
        policy_id: policy_id.to_string(),
        is_empty: sentences.is_empty(),
        sentences,
        dropped_count,
    }
}
