//! Deterministic synthetic corpora used by the integration tests: labeled
//! policy sentences built from a fixed template vocabulary, plus snapshot
//! records whose policies reuse the same phrasing.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use skillvet::corpus::{LabeledSentence, Market, PermissionClass, SkillRecord};
use std::collections::BTreeSet;

pub const SUBJECTS: [&str; 5] = ["we", "our skill", "this skill", "the service", "our application"];

pub const VERBS: [&str; 8] = [
    "collect", "store", "process", "use", "request", "access", "gather", "record",
];

pub const PREFIXES: [&str; 6] = [
    "",
    "please note that",
    "by enabling this skill you agree that",
    "to work properly",
    "as described in this policy",
    "for transparency",
];

pub const SUFFIXES: [&str; 5] = [
    "",
    "to provide the service",
    "when you enable the skill",
    "for account management",
    "to improve our features",
];

/// Class-distinctive object phrases; each sentence mentioning one of these is
/// labeled with the owning class.
pub fn objects(class: PermissionClass) -> &'static [&'static str] {
    use PermissionClass::*;
    match class {
        AmazonPay => &[
            "amazon pay",
            "your amazon pay account",
            "payments through amazon pay",
            "amazon pay transaction details",
        ],
        DeviceAddress => &[
            "your device address",
            "your street address",
            "your full home address",
            "your delivery address",
        ],
        DeviceCountryPostalCode => &[
            "your postal code",
            "your zip code",
            "your country and postal code",
            "your device country",
        ],
        EmailAddress => &[
            "your email address",
            "your contact email",
            "the email on your account",
            "your e mail address",
        ],
        LocationServices => &[
            "your precise location",
            "location services data",
            "your gps coordinates",
            "your real time location",
        ],
        MobileNumber => &[
            "your mobile number",
            "your phone number",
            "your telephone number",
            "your mobile phone contact",
        ],
        Name => &[
            "your name",
            "your first name",
            "your full name",
            "the name on your profile",
        ],
        PersonalInformation => &[
            "your personal information",
            "personal data about you",
            "your shopping list items",
            "your to do list entries",
        ],
        None => NONE_TEMPLATES,
    }
}

pub const NONE_TEMPLATES: &[&str] = &[
    "this skill provides daily weather updates",
    "you can ask for another fact at any time",
    "the developer may change these terms",
    "please leave a review in the skill store",
    "all trademarks belong to their respective owners",
    "the skill is free to enjoy",
    "children should ask a parent before playing",
    "availability may vary by region",
    "you can disable the skill whenever you like",
    "questions are welcome through the feedback form",
    "the content is offered for entertainment only",
    "sessions end automatically after a short pause",
    "new trivia questions arrive every week",
    "audio quality depends on your connection",
    "the leaderboard resets at the start of each month",
    "say stop to exit at any point",
    "supported languages are listed on the detail page",
    "scores are kept only for the current session",
    "the jokes rotate on a daily schedule",
    "thank you for trying the skill",
];

fn join_sentence(parts: &[&str]) -> String {
    let body = parts
        .iter()
        .copied()
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    format!("{body}.")
}

/// A declarative sentence for one data class, e.g.
/// "we collect your email address to provide the service."
pub fn class_sentence(class: PermissionClass, rng: &mut ChaCha8Rng) -> String {
    let subject = SUBJECTS.choose(rng).unwrap();
    let verb = VERBS.choose(rng).unwrap();
    let object = objects(class).choose(rng).unwrap();
    let prefix = PREFIXES.choose(rng).unwrap();
    let suffix = SUFFIXES.choose(rng).unwrap();
    join_sentence(&[prefix, subject, verb, object, suffix])
}

fn none_sentence(rng: &mut ChaCha8Rng) -> String {
    let body = NONE_TEMPLATES.choose(rng).unwrap();
    let prefix = PREFIXES.choose(rng).unwrap();
    let suffix = SUFFIXES.choose(rng).unwrap();
    join_sentence(&[prefix, body, suffix])
}

/// Generates at least `per_class` labeled sentences per class. Roughly 15% of
/// the data-class sentences carry a second label ("... your name and your
/// postal code ...").
pub fn synthetic_pbsd(per_class: usize, seed: u64) -> Vec<LabeledSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (k, &class) in PermissionClass::ALL.iter().enumerate() {
        for i in 0..per_class {
            let source_policy = format!("policy_{:02}", (k * per_class + i) % 40);
            if class == PermissionClass::None {
                out.push(LabeledSentence {
                    text: none_sentence(&mut rng),
                    labels: [PermissionClass::None].into_iter().collect(),
                    source_policy,
                });
                continue;
            }
            let mut labels: BTreeSet<PermissionClass> = [class].into_iter().collect();
            let text = if rng.gen_bool(0.15) {
                let other = *PermissionClass::DATA.choose(&mut rng).unwrap();
                labels.insert(other);
                let subject = *SUBJECTS.choose(&mut rng).unwrap();
                let verb = *VERBS.choose(&mut rng).unwrap();
                let a = *objects(class).choose(&mut rng).unwrap();
                let b = *objects(other).choose(&mut rng).unwrap();
                let suffix = *SUFFIXES.choose(&mut rng).unwrap();
                join_sentence(&[subject, verb, a, "and", b, suffix])
            } else {
                class_sentence(class, &mut rng)
            };
            out.push(LabeledSentence {
                text,
                labels,
                source_policy,
            });
        }
    }
    out
}

/// Serializes labeled sentences in the on-disk sentence-corpus format.
pub fn pbsd_jsonl(corpus: &[LabeledSentence]) -> String {
    let mut out = String::new();
    for s in corpus {
        let labels: Vec<&str> = s.labels.iter().map(|l| l.label()).collect();
        out.push_str(
            &serde_json::to_string(&serde_json::json!({
                "text": s.text,
                "labels": labels,
                "source_policy": s.source_policy,
            }))
            .unwrap(),
        );
        out.push('\n');
    }
    out
}

/// Raw marketplace permission string for a class.
pub fn raw_permission(class: PermissionClass) -> &'static str {
    use PermissionClass::*;
    match class {
        AmazonPay => "Amazon Pay",
        DeviceAddress => "Device Address",
        DeviceCountryPostalCode => "Device Country and Postal Code",
        EmailAddress => "Email Address",
        LocationServices => "Location Services",
        MobileNumber => "Mobile Number",
        Name => "Name",
        PersonalInformation => "Personal Information",
        None => unreachable!("None is not a marketplace permission"),
    }
}

/// A snapshot of `n` skills whose policies are template sentences; each skill
/// requests 1-3 permissions and its policy covers all, some or none of them.
pub fn synthetic_snapshot(n: usize, seed: u64) -> Vec<SkillRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let n_perms = rng.gen_range(1..=3usize);
        let mut classes = BTreeSet::new();
        while classes.len() < n_perms {
            classes.insert(*PermissionClass::DATA.choose(&mut rng).unwrap());
        }
        // cover all, a strict subset, or none of the requested classes
        let style = rng.gen_range(0..3u8);
        let covered: Vec<PermissionClass> = match style {
            0 => classes.iter().copied().collect(),
            1 => classes.iter().copied().take(classes.len() / 2).collect(),
            _ => Vec::new(),
        };
        let mut sentences: Vec<String> = covered
            .iter()
            .map(|&c| class_sentence(c, &mut rng))
            .collect();
        for _ in 0..rng.gen_range(3..30usize) {
            sentences.push(none_sentence(&mut rng));
        }
        sentences.shuffle(&mut rng);
        out.push(SkillRecord {
            skill_id: format!("SYN{i:05}"),
            market: Market::Us,
            name: format!("Synthetic Skill {i}"),
            invocation_name: Some(format!("synthetic skill {}", i % 97)),
            developer: format!("Dev {}", i % 13),
            category: "Games".into(),
            subcategory: Option::None,
            permissions: classes.iter().map(|&c| raw_permission(c).to_string()).collect(),
            policy_url: Some(format!("https://example.com/policy/{}", i % 31)),
            policy_text: Some(sentences.join(" ")),
            account_linking_url: Option::None,
            description: Option::None,
        });
    }
    out
}

/// Serializes snapshot records in the on-disk JSONL format.
pub fn snapshot_jsonl(records: &[SkillRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        out.push_str(&serde_json::to_string(rec).unwrap());
        out.push('\n');
    }
    out
}
