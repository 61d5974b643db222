//! Skill data model and ingestion of marketplace snapshots and the two
//! ground-truth datasets (PBSD sentences, TBPD gold verdicts).
//!
//! Snapshot, PBSD and TBPD files are newline-delimited JSON: one record per
//! line, UTF-8. Malformed lines are skipped with a warning rather than
//! aborting the whole load.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marketplace codes in deduplication priority order: when the same skill is
/// listed in several markets we keep the copy from the earliest market here.
pub const MARKET_ORDER: [Market; 11] = [
    Market::Us,
    Market::Uk,
    Market::In,
    Market::Ca,
    Market::Au,
    Market::De,
    Market::Es,
    Market::It,
    Market::Jp,
    Market::Fr,
    Market::Mx,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Market {
    Us,
    Uk,
    In,
    Ca,
    Au,
    De,
    Es,
    It,
    Jp,
    Fr,
    Mx,
}

impl Market {
    pub fn code(&self) -> &'static str {
        match self {
            Market::Us => "US",
            Market::Uk => "UK",
            Market::In => "IN",
            Market::Ca => "CA",
            Market::Au => "AU",
            Market::De => "DE",
            Market::Es => "ES",
            Market::It => "IT",
            Market::Jp => "JP",
            Market::Fr => "FR",
            Market::Mx => "MX",
        }
    }

    pub fn parse(code: &str) -> Option<Market> {
        MARKET_ORDER.iter().copied().find(|m| m.code() == code)
    }

    /// Position in the deduplication priority order.
    pub fn priority(&self) -> usize {
        MARKET_ORDER.iter().position(|m| m == self).unwrap()
    }

    pub fn is_english(&self) -> bool {
        matches!(
            self,
            Market::Us | Market::Uk | Market::In | Market::Ca | Market::Au
        )
    }
}

impl fmt::Display for Market {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// The 8 analyzed Alexa data-permission categories plus the None label used
/// by the sentence classifier for statements with no permission implication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PermissionClass {
    AmazonPay,
    DeviceAddress,
    DeviceCountryPostalCode,
    EmailAddress,
    LocationServices,
    MobileNumber,
    Name,
    PersonalInformation,
    None,
}

impl PermissionClass {
    /// All 9 classifier classes, in a fixed order.
    pub const ALL: [PermissionClass; 9] = [
        PermissionClass::AmazonPay,
        PermissionClass::DeviceAddress,
        PermissionClass::DeviceCountryPostalCode,
        PermissionClass::EmailAddress,
        PermissionClass::LocationServices,
        PermissionClass::MobileNumber,
        PermissionClass::Name,
        PermissionClass::PersonalInformation,
        PermissionClass::None,
    ];

    /// The 8 data classes (everything but `None`); the only classes that can
    /// appear in a requested-permission set.
    pub const DATA: [PermissionClass; 8] = [
        PermissionClass::AmazonPay,
        PermissionClass::DeviceAddress,
        PermissionClass::DeviceCountryPostalCode,
        PermissionClass::EmailAddress,
        PermissionClass::LocationServices,
        PermissionClass::MobileNumber,
        PermissionClass::Name,
        PermissionClass::PersonalInformation,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            PermissionClass::AmazonPay => "AmazonPay",
            PermissionClass::DeviceAddress => "DeviceAddress",
            PermissionClass::DeviceCountryPostalCode => "DeviceCountryPostalCode",
            PermissionClass::EmailAddress => "EmailAddress",
            PermissionClass::LocationServices => "LocationServices",
            PermissionClass::MobileNumber => "MobileNumber",
            PermissionClass::Name => "Name",
            PermissionClass::PersonalInformation => "PersonalInformation",
            PermissionClass::None => "None",
        }
    }

    pub fn parse(label: &str) -> Option<PermissionClass> {
        PermissionClass::ALL.iter().copied().find(|c| c.label() == label)
    }
}

impl fmt::Display for PermissionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Result of mapping a raw marketplace permission string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizedPermission {
    Class(PermissionClass),
    /// Permissions that are dropped from traceability analysis (reminders,
    /// notifications, timers, skill personalization) or unrecognized strings.
    Excluded,
}

/// Maps a raw marketplace permission string to the analyzed class, or
/// `Excluded` for permissions outside the traceability analysis. Unknown
/// strings are excluded with a warning; this is a total function.
pub fn normalize_permission(raw: &str) -> NormalizedPermission {
    use NormalizedPermission::*;
    use PermissionClass::*;
    let key = raw.trim().to_ascii_lowercase();
    match key.as_str() {
        "amazon pay" => Class(AmazonPay),
        "device address" => Class(DeviceAddress),
        "device country and postal code" => Class(DeviceCountryPostalCode),
        "email address" => Class(EmailAddress),
        "location services" => Class(LocationServices),
        "mobile number" => Class(MobileNumber),
        "name" | "customer name" | "first name" => Class(Name),
        "personal information" => Class(PersonalInformation),
        // List access grants only acknowledge access to personal data, so
        // they fold into the Personal Information category.
        "list read access" | "lists read access" | "list write access" | "lists write access" => {
            Class(PersonalInformation)
        }
        "reminders" | "reminder" | "notifications" | "notification" | "timers" | "timer"
        | "skill personalization" => Excluded,
        _ => {
            log::warn!("unknown permission string {raw:?}; excluded from analysis");
            Excluded
        }
    }
}

/// Normalized requested-permission set of a skill: raw permission strings
/// mapped through [`normalize_permission`], exclusions dropped.
pub fn normalize_requested(raw: &[String]) -> BTreeSet<PermissionClass> {
    raw.iter()
        .filter_map(|p| match normalize_permission(p) {
            NormalizedPermission::Class(c) => Some(c),
            NormalizedPermission::Excluded => None,
        })
        .collect()
}

/// One marketplace listing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkillRecord {
    pub skill_id: String,
    pub market: Market,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invocation_name: Option<String>,
    pub developer: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcategory: Option<String>,
    #[serde(default)]
    pub permissions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub account_linking_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl SkillRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.skill_id.is_empty() {
            return Err("empty skill_id".into());
        }
        let mut seen = BTreeSet::new();
        for p in &self.permissions {
            if !seen.insert(p) {
                return Err(format!("duplicate permission entry {p:?}"));
            }
        }
        Ok(())
    }

    pub fn requested(&self) -> BTreeSet<PermissionClass> {
        normalize_requested(&self.permissions)
    }
}

/// A preprocessed policy sentence with its permission tags (one PBSD row).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub text: String,
    pub labels: BTreeSet<PermissionClass>,
    pub source_policy: String,
}

/// Gold traceability verdict labels as used in the TBPD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoldVerdict {
    Broken,
    Partial,
    Complete,
}

impl GoldVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            GoldVerdict::Broken => "broken",
            GoldVerdict::Partial => "partial",
            GoldVerdict::Complete => "complete",
        }
    }
}

/// One TBPD row: a skill, its raw requested permissions, the policy text and
/// the manually assigned verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceabilityGoldRecord {
    pub skill_id: String,
    pub market: Market,
    #[serde(default)]
    pub permissions: Vec<String>,
    #[serde(default)]
    pub policy_text: Option<String>,
    pub gold_verdict: GoldVerdict,
}

/// A skipped input line, with the reason.
#[derive(Debug, Clone)]
pub struct LoadWarning {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l)))
}

/// Loads a marketplace snapshot file. Well-formed lines become records in
/// file order; malformed lines are skipped and reported. A file with zero
/// usable records is an error.
pub fn load_snapshot(path: &Path) -> Result<(Vec<SkillRecord>, Vec<LoadWarning>)> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<SkillRecord>(&line) {
            Ok(rec) => match rec.validate() {
                Ok(()) => records.push(rec),
                Err(msg) => warnings.push(LoadWarning { line: line_no, msg }),
            },
            Err(e) => warnings.push(LoadWarning {
                line: line_no,
                msg: e.to_string(),
            }),
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyCorpus { path: path.into() });
    }
    Ok((records, warnings))
}

/// Collapses cross-market duplicates: one record per skill_id, keeping the
/// copy from the earliest market in [`MARKET_ORDER`]. Output is sorted by
/// skill_id.
pub fn deduplicate(records: Vec<SkillRecord>) -> Vec<SkillRecord> {
    let mut best: BTreeMap<String, SkillRecord> = BTreeMap::new();
    for rec in records {
        match best.get(&rec.skill_id) {
            Some(kept) if kept.market.priority() <= rec.market.priority() => {}
            _ => {
                best.insert(rec.skill_id.clone(), rec);
            }
        }
    }
    best.into_values().collect()
}

/// Loads the permission-by-sentence dataset. Unknown labels are a hard
/// parse error (the label vocabulary is closed); an empty file is an error.
pub fn load_pbsd(path: &Path) -> Result<Vec<LabeledSentence>> {
    #[derive(Deserialize)]
    struct Row {
        text: String,
        labels: Vec<String>,
        source_policy: String,
    }

    let mut out = Vec::new();
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        let mut labels = BTreeSet::new();
        for l in &row.labels {
            let class = PermissionClass::parse(l)
                .ok_or_else(|| Error::parse(path, line_no, format!("unknown label {l:?}")))?;
            labels.insert(class);
        }
        if labels.contains(&PermissionClass::None) && labels.len() > 1 {
            return Err(Error::parse(
                path,
                line_no,
                "None label must appear alone".to_string(),
            ));
        }
        out.push(LabeledSentence {
            text: row.text,
            labels,
            source_policy: row.source_policy,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyCorpus { path: path.into() });
    }
    Ok(out)
}

/// Loads the traceability-by-policy dataset with gold verdicts.
pub fn load_tbpd(path: &Path) -> Result<Vec<TraceabilityGoldRecord>> {
    let mut out = Vec::new();
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceabilityGoldRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::EmptyCorpus { path: path.into() });
    }
    Ok(out)
}
