//! Invocation-name reuse and phonetic similarity: CMUdict transcription and
//! normalized phonetic Levenshtein distance.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Market, SkillRecord};
use crate::error::{Error, Result};

/// CMUdict with primary pronunciations; variant entries like `WORD(2)` are
/// kept separately. Stress digits are stripped from phonemes.
#[derive(Debug, Clone)]
pub struct PhoneticDictionary {
    entries: HashMap<String, Vec<String>>,
    variants: HashMap<String, Vec<Vec<String>>>,
}

impl PhoneticDictionary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn primary(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).map(|v| v.as_slice())
    }

    pub fn variants(&self, word: &str) -> &[Vec<String>] {
        self.variants.get(word).map(|v| v.as_slice()).unwrap_or(&[])
    }
}

fn strip_stress(phoneme: &str) -> String {
    phoneme
        .chars()
        .filter(|c| !c.is_ascii_digit())
        .collect()
}

/// Parses a CMUdict 0.7b plain-text file: `WORD  PH1 PH2 ...` lines,
/// `WORD(2)` variants, `;;;` comments. Words are lowercased and stress
/// digits stripped.
pub fn load_cmudict(path: &Path) -> Result<PhoneticDictionary> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    // cmudict 0.7b is Latin-1; decode lossily
    let text = String::from_utf8_lossy(&bytes);
    let mut entries = HashMap::new();
    let mut variants: HashMap<String, Vec<Vec<String>>> = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(";;;") {
            continue;
        }
        let mut parts = line.split_whitespace();
        let head = match parts.next() {
            Some(h) => h,
            None => continue,
        };
        let phonemes: Vec<String> = parts.map(strip_stress).collect();
        if phonemes.is_empty() {
            continue;
        }
        if let Some(open) = head.find('(') {
            let word = head[..open].to_lowercase();
            variants.entry(word).or_default().push(phonemes);
        } else {
            entries.insert(head.to_lowercase(), phonemes);
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyCorpus { path: path.into() });
    }
    Ok(PhoneticDictionary { entries, variants })
}

const DIGIT_WORDS: [&str; 10] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
];

/// Normalizes an invocation name: lowercase, punctuation and non-ASCII
/// removed, digits spelled out as separate tokens, whitespace collapsed.
/// Idempotent.
pub fn normalize_name(raw: &str) -> String {
    let mut tokens: Vec<String> = Vec::new();
    let mut current = String::new();
    for ch in raw.chars() {
        if ch.is_ascii_alphabetic() {
            current.push(ch.to_ascii_lowercase());
        } else if ch.is_ascii_digit() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(DIGIT_WORDS[ch.to_digit(10).unwrap() as usize].to_string());
        } else {
            // whitespace, punctuation and non-ASCII all separate tokens
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens.join(" ")
}

/// An invocation name with its transcription; `transcribable` is false when
/// any word is missing from the dictionary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhoneticName {
    pub skill_id: String,
    pub market: Market,
    pub raw: String,
    pub normalized: String,
    pub phonemes: Vec<String>,
    pub transcribable: bool,
}

/// Concatenates per-word primary phoneme sequences; any out-of-dictionary
/// word makes the whole name untranscribable.
pub fn transcribe(normalized: &str, dict: &PhoneticDictionary) -> Option<Vec<String>> {
    let mut out = Vec::new();
    for word in normalized.split_whitespace() {
        match dict.primary(word) {
            Some(phonemes) => out.extend(phonemes.iter().cloned()),
            None => return None,
        }
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

pub fn phonetic_name(record: &SkillRecord, dict: &PhoneticDictionary) -> Option<PhoneticName> {
    let raw = record.invocation_name.as_deref()?;
    let normalized = normalize_name(raw);
    let phonemes = transcribe(&normalized, dict);
    Some(PhoneticName {
        skill_id: record.skill_id.clone(),
        market: record.market,
        raw: raw.to_string(),
        normalized,
        transcribable: phonemes.is_some(),
        phonemes: phonemes.unwrap_or_default(),
    })
}

/// Plain Levenshtein distance over phoneme symbols (unit-cost edits).
pub fn levenshtein(p: &[String], q: &[String]) -> usize {
    if p.is_empty() {
        return q.len();
    }
    if q.is_empty() {
        return p.len();
    }
    let mut prev: Vec<usize> = (0..=q.len()).collect();
    let mut cur = vec![0usize; q.len() + 1];
    for (i, a) in p.iter().enumerate() {
        cur[0] = i + 1;
        for (j, b) in q.iter().enumerate() {
            let sub = prev[j] + usize::from(a != b);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[q.len()]
}

/// Levenshtein distance normalized by the longer sequence's phoneme length;
/// lands in [0, 1]. Both sequences must be non-empty.
pub fn phonetic_distance(p: &[String], q: &[String]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Contract(
            "phonetic distance requires non-empty phoneme sequences".into(),
        ));
    }
    let max_len = p.len().max(q.len());
    Ok(levenshtein(p, q) as f64 / max_len as f64)
}

/// Nearest neighbor of one name among others in the same market.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NearestNeighbor {
    pub skill_id: String,
    pub min_distance: f64,
    pub neighbor_id: String,
}

/// For every transcribable name in `market`, the minimum phonetic distance
/// to any other transcribable name in that market (self-comparison excluded
/// by skill_id; identical names from different skills give distance 0).
///
/// Pairs are pruned with the length-difference lower bound
/// |len(p)-len(q)| / max_len <= normalized distance, which is exact: the
/// result equals the all-pairs computation.
pub fn nearest_neighbors(names: &[PhoneticName], market: Market) -> Result<Vec<NearestNeighbor>> {
    let pool: Vec<&PhoneticName> = names
        .iter()
        .filter(|n| n.market == market && n.transcribable)
        .collect();
    if pool.len() < 2 {
        return Err(Error::Contract(format!(
            "market {market} has fewer than 2 transcribable names"
        )));
    }
    // sort by phoneme length so the band prune terminates scans early
    let mut by_len: Vec<usize> = (0..pool.len()).collect();
    by_len.sort_by_key(|&i| pool[i].phonemes.len());

    let mut out = Vec::with_capacity(pool.len());
    for (qi, &i) in by_len.iter().enumerate() {
        let a = pool[i];
        let mut best = f64::INFINITY;
        let mut best_id: &str = "";
        // scan outward from the query's length rank
        let mut lo = qi;
        let mut hi = qi + 1;
        loop {
            let candidate = if lo > 0 && hi < by_len.len() {
                let dl = a.phonemes.len().abs_diff(pool[by_len[lo - 1]].phonemes.len());
                let dh = pool[by_len[hi]].phonemes.len().abs_diff(a.phonemes.len());
                if dl <= dh {
                    lo -= 1;
                    by_len[lo]
                } else {
                    hi += 1;
                    by_len[hi - 1]
                }
            } else if lo > 0 {
                lo -= 1;
                by_len[lo]
            } else if hi < by_len.len() {
                hi += 1;
                by_len[hi - 1]
            } else {
                break;
            };
            let b = pool[candidate];
            if b.skill_id == a.skill_id {
                continue;
            }
            let len_diff = a.phonemes.len().abs_diff(b.phonemes.len());
            let max_len = a.phonemes.len().max(b.phonemes.len());
            let lower_bound = len_diff as f64 / max_len as f64;
            if lower_bound >= best && best > 0.0 {
                // every remaining candidate in this direction is at least as
                // far in length; but the other direction may still help, so
                // only stop when both sides are exhausted by the bound
                if lower_bound_both_sides_exceed(a, &pool, &by_len, lo, hi, best) {
                    break;
                }
                continue;
            }
            let d = phonetic_distance(&a.phonemes, &b.phonemes)?;
            if d < best || (d == best && b.skill_id.as_str() < best_id) {
                best = d;
                best_id = &b.skill_id;
            }
            if best == 0.0 {
                break;
            }
        }
        out.push(NearestNeighbor {
            skill_id: a.skill_id.clone(),
            min_distance: best,
            neighbor_id: best_id.to_string(),
        });
    }
    out.sort_by(|x, y| x.skill_id.cmp(&y.skill_id));
    Ok(out)
}

fn lower_bound_both_sides_exceed(
    a: &PhoneticName,
    pool: &[&PhoneticName],
    by_len: &[usize],
    lo: usize,
    hi: usize,
    best: f64,
) -> bool {
    let bound = |other: &PhoneticName| {
        let len_diff = a.phonemes.len().abs_diff(other.phonemes.len());
        let max_len = a.phonemes.len().max(other.phonemes.len());
        len_diff as f64 / max_len as f64
    };
    let lo_done = lo == 0 || bound(pool[by_len[lo - 1]]) >= best;
    let hi_done = hi >= by_len.len() || bound(pool[by_len[hi]]) >= best;
    lo_done && hi_done
}

/// One reuse group: a normalized invocation name shared by several skills.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NameReuseGroup {
    pub normalized_name: String,
    pub skill_ids: Vec<String>,
    pub markets: Vec<Market>,
    /// true when one developer published several skills under this name in
    /// a single market (sybil signal)
    pub same_developer_single_market: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NameReuseReport {
    pub groups: Vec<NameReuseGroup>,
    /// skills that share a normalized name with at least one other skill
    pub skills_in_reuse: usize,
}

/// Groups records by normalized invocation name; only names used by 2 or
/// more skills are reported.
pub fn name_reuse_report(records: &[SkillRecord]) -> NameReuseReport {
    let mut by_name: BTreeMap<String, Vec<&SkillRecord>> = BTreeMap::new();
    for rec in records {
        if let Some(name) = &rec.invocation_name {
            let normalized = normalize_name(name);
            if !normalized.is_empty() {
                by_name.entry(normalized).or_default().push(rec);
            }
        }
    }
    let mut groups = Vec::new();
    let mut skills_in_reuse = 0;
    for (normalized_name, members) in by_name {
        if members.len() < 2 {
            continue;
        }
        skills_in_reuse += members.len();
        let mut dev_market: BTreeMap<(&str, Market), usize> = BTreeMap::new();
        for m in &members {
            *dev_market.entry((m.developer.as_str(), m.market)).or_insert(0) += 1;
        }
        let mut skill_ids: Vec<String> = members.iter().map(|r| r.skill_id.clone()).collect();
        skill_ids.sort();
        let mut markets: Vec<Market> = members.iter().map(|r| r.market).collect();
        markets.sort();
        markets.dedup();
        groups.push(NameReuseGroup {
            normalized_name,
            skill_ids,
            markets,
            same_developer_single_market: dev_market.values().any(|&c| c >= 2),
        });
    }
    NameReuseReport {
        groups,
        skills_in_reuse,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn dict_from(lines: &[&str]) -> PhoneticDictionary {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        load_cmudict(f.path()).unwrap()
    }

    fn sample_dict() -> PhoneticDictionary {
        dict_from(&[
            ";;; comment line",
            "CAT  K AE1 T",
            "CAT(2)  K AE2 T",
            "FACTS  F AE1 K T S",
            "FACT  F AE1 K T",
            "PANDA  P AE1 N D AH0",
        ])
    }

    fn phonemes(s: &[&str]) -> Vec<String> {
        s.iter().map(|p| p.to_string()).collect()
    }

    #[test]
    fn cmudict_primary_stress_stripped() {
        let dict = sample_dict();
        assert_eq!(dict.primary("cat").unwrap(), phonemes(&["K", "AE", "T"]).as_slice());
    }

    #[test]
    fn cmudict_variant_not_primary() {
        let dict = sample_dict();
        assert_eq!(dict.variants("cat").len(), 1);
        assert_eq!(dict.primary("cat").unwrap().len(), 3);
    }

    #[test]
    fn cmudict_empty_is_error() {
        let f = tempfile::NamedTempFile::new().unwrap();
        assert!(load_cmudict(f.path()).is_err());
    }

    #[test]
    fn normalize_digits_to_words() {
        assert_eq!(normalize_name("Hits 1 Latina"), "hits one latina");
    }

    #[test]
    fn normalize_strips_punctuation() {
        assert_eq!(normalize_name("Cat Facts!"), "cat facts");
        assert_eq!(normalize_name(""), "");
    }

    #[test]
    fn normalize_idempotent() {
        for raw in ["Hits 1 Latina", "Cat Facts!", "caf\u{00e9} 42 bar"] {
            let once = normalize_name(raw);
            assert_eq!(normalize_name(&once), once);
        }
    }

    #[test]
    fn transcribe_concatenates_words() {
        let dict = sample_dict();
        // frozen from the two CMUdict entries: CAT -> K AE T, FACTS -> F AE K T S
        assert_eq!(
            transcribe("cat facts", &dict).unwrap(),
            phonemes(&["K", "AE", "T", "F", "AE", "K", "T", "S"])
        );
    }

    #[test]
    fn transcribe_oov_fails() {
        let dict = sample_dict();
        assert!(transcribe("xyzzyq facts", &dict).is_none());
    }

    #[test]
    fn transcribe_case_insensitive_after_normalize() {
        let dict = sample_dict();
        assert_eq!(
            transcribe(&normalize_name("CAT"), &dict),
            transcribe(&normalize_name("cat"), &dict)
        );
    }

    #[test]
    fn distance_identity_and_deletion() {
        let p = phonemes(&["K", "AE", "T", "F", "AE", "K", "T", "S"]);
        let q = phonemes(&["K", "AE", "T", "F", "AE", "K", "T"]);
        assert_eq!(phonetic_distance(&p, &p).unwrap(), 0.0);
        // hand-run DP: one deletion over max length 8
        assert_eq!(phonetic_distance(&p, &q).unwrap(), 0.125);
    }

    #[test]
    fn distance_disjoint_sequences() {
        let p = phonemes(&["A", "B", "C"]);
        let q = phonemes(&["X", "Y", "Z"]);
        assert_eq!(phonetic_distance(&p, &q).unwrap(), 1.0);
    }

    #[test]
    fn distance_empty_is_error() {
        assert!(phonetic_distance(&[], &phonemes(&["A"])).is_err());
    }

    fn name(id: &str, market: Market, ph: &[&str]) -> PhoneticName {
        PhoneticName {
            skill_id: id.into(),
            market,
            raw: String::new(),
            normalized: String::new(),
            phonemes: phonemes(ph),
            transcribable: !ph.is_empty(),
        }
    }

    #[test]
    fn neighbors_two_names() {
        let names = vec![
            name("a", Market::Us, &["P", "AE", "N", "D", "AH", "F", "AE", "K", "T", "S"]),
            name("b", Market::Us, &["P", "AE", "N", "D", "AH", "F", "AE", "K", "T"]),
        ];
        let nn = nearest_neighbors(&names, Market::Us).unwrap();
        assert_eq!(nn.len(), 2);
        assert!(nn[0].min_distance <= 0.1 + 1e-12);
        assert_eq!(nn[0].neighbor_id, "b");
        assert_eq!(nn[1].neighbor_id, "a");
    }

    #[test]
    fn neighbors_identical_names_distance_zero() {
        let names = vec![
            name("a", Market::Us, &["K", "AE", "T"]),
            name("b", Market::Us, &["K", "AE", "T"]),
            name("c", Market::Us, &["Z", "Z", "Z", "Z"]),
        ];
        let nn = nearest_neighbors(&names, Market::Us).unwrap();
        assert_eq!(nn[0].min_distance, 0.0);
        assert_eq!(nn[1].min_distance, 0.0);
    }

    #[test]
    fn neighbors_too_few_is_error() {
        let names = vec![name("a", Market::Us, &["K"])];
        assert!(nearest_neighbors(&names, Market::Us).is_err());
    }

    #[test]
    fn neighbors_exclude_other_markets() {
        let names = vec![
            name("a", Market::Us, &["K", "AE", "T"]),
            name("b", Market::Uk, &["K", "AE", "T"]),
            name("c", Market::Us, &["F", "AE", "K", "T"]),
        ];
        let nn = nearest_neighbors(&names, Market::Us).unwrap();
        assert_eq!(nn.len(), 2);
        assert_eq!(nn[0].neighbor_id, "c");
    }

    fn skill_named(id: &str, market: Market, dev: &str, inv: &str) -> SkillRecord {
        SkillRecord {
            skill_id: id.into(),
            market,
            name: inv.into(),
            invocation_name: Some(inv.into()),
            developer: dev.into(),
            category: "c".into(),
            subcategory: None,
            permissions: vec![],
            policy_url: None,
            policy_text: None,
            account_linking_url: None,
            description: None,
        }
    }

    #[test]
    fn reuse_report_groups_and_sybil_flag() {
        let records = vec![
            skill_named("a", Market::Us, "dev1", "Cat Facts"),
            skill_named("b", Market::Us, "dev1", "cat facts!"),
            skill_named("c", Market::Uk, "dev2", "Cat Facts"),
            skill_named("d", Market::Us, "dev3", "Unique Name"),
        ];
        let report = name_reuse_report(&records);
        assert_eq!(report.groups.len(), 1);
        assert_eq!(report.skills_in_reuse, 3);
        assert!(report.groups[0].same_developer_single_market);
    }

    #[test]
    fn reuse_report_all_distinct() {
        let records = vec![
            skill_named("a", Market::Us, "d", "Alpha"),
            skill_named("b", Market::Us, "d", "Beta"),
        ];
        let report = name_reuse_report(&records);
        assert!(report.groups.is_empty());
        assert_eq!(report.skills_in_reuse, 0);
    }
}
