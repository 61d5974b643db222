//! Market-level statistics, account-linking classification and report
//! rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{deduplicate, Market, PermissionClass, SkillRecord, MARKET_ORDER};
use crate::error::{Error, Result};
use crate::traceability::{GoldEvaluation, Verdict, VerdictReason};

/// Lowercase OAuth provider tokens matched against account-linking domains.
#[derive(Debug, Clone)]
pub struct OAuthProviderList {
    pub providers: Vec<String>,
}

impl OAuthProviderList {
    /// The built-in provider list; extendable through [`OAuthProviderList::load`].
    pub fn default_list() -> Self {
        let providers = [
            "amazon", "aol", "autodesk", "apple", "basecamp", "battle.net", "bitbucket",
            "bitly", "box", "cloudfoundry", "telekom", "deviantart", "discord", "dropbox",
            "facebook", "fitbit", "formstack", "foursquare", "github", "gitlab", "google",
            "huddle", "imgur", "instagram", "intel", "jive", "kakao", "keycloak", "linkedin",
            "microsoft", "hotmail", "live", "xbox", "okta", "openam", "orcid", "paypal",
            "ping", "pixiv", "reddit", "salesforce", "sina", "weibo", "spotify",
            "stackexchange", "strava", "stripe", "twitch", "twitter", "viadeo", "vimeo",
            "vk", "wechat", "xing", "yahoo", "yammer", "yandex", "yelp", "zendesk",
        ];
        OAuthProviderList {
            providers: providers.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Loads a provider list: one lowercase token per line, `#` comments.
    pub fn load(path: &Path) -> Result<OAuthProviderList> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let providers: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        if providers.is_empty() {
            return Err(Error::EmptyCorpus { path: path.into() });
        }
        if let Some(bad) = providers.iter().find(|p| p.contains(char::is_whitespace)) {
            return Err(Error::Contract(format!(
                "provider token {bad:?} contains whitespace"
            )));
        }
        Ok(OAuthProviderList { providers })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AccountLinkClass {
    Developer,
    ThirdParty,
    ThirdPartyOrDeveloper,
    Unresolved,
}

impl AccountLinkClass {
    pub fn label(&self) -> &'static str {
        match self {
            AccountLinkClass::Developer => "Developer",
            AccountLinkClass::ThirdParty => "Third-Party",
            AccountLinkClass::ThirdPartyOrDeveloper => "Third-Party or Developer",
            AccountLinkClass::Unresolved => "Unresolved",
        }
    }
}

/// Second-level public suffixes we recognize in addition to plain TLDs.
const TWO_LEVEL_SUFFIXES: [&str; 18] = [
    "co.uk", "org.uk", "ac.uk", "gov.uk", "com.au", "net.au", "org.au", "co.in", "net.in",
    "org.in", "co.jp", "ne.jp", "or.jp", "com.mx", "com.br", "co.nz", "com.sg", "co.kr",
];

/// Extracts the host from a URL-ish string.
fn host_of(url: &str) -> Option<String> {
    let rest = url.trim();
    let rest = rest
        .strip_prefix("https://")
        .or_else(|| rest.strip_prefix("http://"))
        .unwrap_or(rest);
    let host: String = rest
        .chars()
        .take_while(|c| !matches!(c, '/' | ':' | '?' | '#'))
        .collect();
    let host = host.trim().trim_start_matches("www.").to_lowercase();
    if host.is_empty() || !host.contains('.') {
        None
    } else {
        Some(host)
    }
}

/// Registrable domain of a host: owner label plus public suffix
/// (`accounts.google.com` -> `google.com`).
pub fn registrable_domain(host: &str) -> Option<String> {
    let labels: Vec<&str> = host.split('.').filter(|l| !l.is_empty()).collect();
    if labels.len() < 2 {
        return None;
    }
    let last_two = labels[labels.len() - 2..].join(".");
    let suffix_len = if TWO_LEVEL_SUFFIXES.contains(&last_two.as_str()) {
        2
    } else {
        1
    };
    if labels.len() < suffix_len + 1 {
        return None;
    }
    Some(labels[labels.len() - suffix_len - 1..].join("."))
}

const NAME_STOPWORDS: [&str; 8] = ["the", "app", "inc", "ltd", "llc", "and", "for", "with"];

/// Minimum token length for name-in-domain matching.
const MIN_TOKEN_LEN: usize = 4;

fn name_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| t.len() >= MIN_TOKEN_LEN && !NAME_STOPWORDS.contains(t))
        .map(String::from)
        .collect()
}

/// Classifies where a skill's account linking connects to, from the
/// registrable domain of the linking URL: matched against the skill/developer
/// name (Developer), the OAuth provider list (ThirdParty), both, or neither.
pub fn classify_account_link(
    record: &SkillRecord,
    providers: &OAuthProviderList,
) -> Result<AccountLinkClass> {
    let url = record.account_linking_url.as_deref().ok_or_else(|| {
        Error::Contract(format!(
            "skill {} has no account_linking_url",
            record.skill_id
        ))
    })?;
    let domain = match host_of(url).and_then(|h| registrable_domain(&h)) {
        Some(d) => d,
        None => {
            log::warn!("unparseable account-linking url {url:?} for {}", record.skill_id);
            return Ok(AccountLinkClass::Unresolved);
        }
    };
    let dev_match = name_tokens(&record.name)
        .into_iter()
        .chain(name_tokens(&record.developer))
        .any(|t| domain.contains(&t));
    let oauth_match = providers.providers.iter().any(|p| domain.contains(p.as_str()));
    Ok(match (dev_match, oauth_match) {
        (true, true) => AccountLinkClass::ThirdPartyOrDeveloper,
        (true, false) => AccountLinkClass::Developer,
        (false, true) => AccountLinkClass::ThirdParty,
        (false, false) => AccountLinkClass::Unresolved,
    })
}

/// Account-linking class counts over a corpus.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AccountLinkSummary {
    pub developer: usize,
    pub third_party: usize,
    pub third_party_or_developer: usize,
    pub unresolved: usize,
}

impl AccountLinkSummary {
    pub fn total(&self) -> usize {
        self.developer + self.third_party + self.third_party_or_developer + self.unresolved
    }
}

pub fn summarize_account_linking(
    records: &[SkillRecord],
    providers: &OAuthProviderList,
) -> AccountLinkSummary {
    let mut summary = AccountLinkSummary::default();
    for rec in records {
        if rec.account_linking_url.is_none() {
            continue;
        }
        match classify_account_link(rec, providers) {
            Ok(AccountLinkClass::Developer) => summary.developer += 1,
            Ok(AccountLinkClass::ThirdParty) => summary.third_party += 1,
            Ok(AccountLinkClass::ThirdPartyOrDeveloper) => {
                summary.third_party_or_developer += 1
            }
            Ok(AccountLinkClass::Unresolved) | Err(_) => summary.unresolved += 1,
        }
    }
    summary
}

/// Per-market skill/developer/permission statistics.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MarketStats {
    pub skills: usize,
    pub developers: usize,
    pub permission_freq: BTreeMap<String, usize>,
    /// buckets: exactly 1, 2, 3, 4 and >= 5 raw permissions
    pub permission_count_histogram: [usize; 5],
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MarketSummary {
    pub per_market: BTreeMap<Market, MarketStats>,
    pub total: MarketStats,
    pub unique: MarketStats,
}

fn accumulate(stats: &mut MarketStats, rec: &SkillRecord, developers: &mut BTreeSet<String>) {
    stats.skills += 1;
    developers.insert(rec.developer.clone());
    for p in &rec.permissions {
        *stats.permission_freq.entry(p.clone()).or_insert(0) += 1;
    }
    let n = rec.permissions.len();
    if n > 0 {
        stats.permission_count_histogram[n.min(5) - 1] += 1;
    }
}

/// Counts skills, developers and permission distributions per market, plus
/// aggregate rows both before (total) and after (unique) deduplication.
pub fn market_summary(records: &[SkillRecord]) -> MarketSummary {
    let mut summary = MarketSummary::default();
    let mut devs_per_market: BTreeMap<Market, BTreeSet<String>> = BTreeMap::new();
    let mut devs_total = BTreeSet::new();
    for rec in records {
        let stats = summary.per_market.entry(rec.market).or_default();
        accumulate(stats, rec, devs_per_market.entry(rec.market).or_default());
        accumulate(&mut summary.total, rec, &mut devs_total);
    }
    for (market, devs) in devs_per_market {
        summary.per_market.get_mut(&market).unwrap().developers = devs.len();
    }
    summary.total.developers = devs_total.len();

    let unique_records = deduplicate(records.to_vec());
    let mut devs_unique = BTreeSet::new();
    for rec in &unique_records {
        accumulate(&mut summary.unique, rec, &mut devs_unique);
    }
    summary.unique.developers = devs_unique.len();
    summary
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeveloperClass {
    /// all skills complete
    Good,
    /// all skills broken
    Bad,
    /// all skills partial
    Ugly,
    /// a mix
    Mixed,
}

impl DeveloperClass {
    pub fn label(&self) -> &'static str {
        match self {
            DeveloperClass::Good => "Good",
            DeveloperClass::Bad => "Bad",
            DeveloperClass::Ugly => "Ugly",
            DeveloperClass::Mixed => "Mixed",
        }
    }
}

/// Classifies each developer from the verdicts of their vetted skills.
/// Verdicts must all be applicable (skills that request analyzed
/// permissions).
pub fn developer_profile(
    verdicts: &[(String, String, Verdict)],
) -> Result<BTreeMap<String, DeveloperClass>> {
    let mut by_dev: BTreeMap<&str, Vec<Verdict>> = BTreeMap::new();
    for (skill_id, developer, verdict) in verdicts {
        if *verdict == Verdict::NotApplicable {
            return Err(Error::Contract(format!(
                "skill {skill_id} has a NotApplicable verdict"
            )));
        }
        by_dev.entry(developer).or_default().push(*verdict);
    }
    Ok(by_dev
        .into_iter()
        .map(|(dev, vs)| {
            let class = if vs.iter().all(|v| *v == Verdict::Complete) {
                DeveloperClass::Good
            } else if vs.iter().all(|v| *v == Verdict::Broken) {
                DeveloperClass::Bad
            } else if vs.iter().all(|v| *v == Verdict::Partial) {
                DeveloperClass::Ugly
            } else {
                DeveloperClass::Mixed
            };
            (dev.to_string(), class)
        })
        .collect())
}

/// One skill's verdict with enough context for the aggregate tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkillVerdictSummary {
    pub skill_id: String,
    pub market: Market,
    pub developer: String,
    pub verdict: Verdict,
    pub reason: VerdictReason,
    pub requested: Vec<PermissionClass>,
}

/// One row of the phonetic threshold table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhoneticBucketRow {
    pub market: Market,
    pub total: usize,
    /// min distance <= 0.1 (exact duplicates included)
    pub le_0_1: usize,
    /// min distance <= 0.1 excluding exact duplicates (distance 0)
    pub le_0_1_excluding_exact: usize,
    pub le_0_2: usize,
}

/// Everything the report renderer may receive; absent pieces skip their
/// tables.
#[derive(Debug, Default)]
pub struct ReportInputs<'a> {
    pub market_summary: Option<&'a MarketSummary>,
    pub gold_eval: Option<&'a GoldEvaluation>,
    pub account_linking: Option<&'a AccountLinkSummary>,
    pub phonetic_buckets: Option<&'a [PhoneticBucketRow]>,
    pub verdicts: Option<&'a [SkillVerdictSummary]>,
}

fn write_file(out_dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    let path = out_dir.join(name);
    fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn markets_csv(summary: &MarketSummary) -> String {
    let mut out = String::from("market,skills,developers\n");
    for market in MARKET_ORDER {
        if let Some(stats) = summary.per_market.get(&market) {
            out.push_str(&format!("{market},{},{}\n", stats.skills, stats.developers));
        }
    }
    out.push_str(&format!(
        "Total,{},{}\n",
        summary.total.skills, summary.total.developers
    ));
    out.push_str(&format!(
        "Unique,{},{}\n",
        summary.unique.skills, summary.unique.developers
    ));
    out
}

fn permission_histogram_csv(summary: &MarketSummary) -> String {
    let mut out = String::from("market,permissions_1,permissions_2,permissions_3,permissions_4,permissions_5_plus\n");
    let row = |label: &str, h: &[usize; 5]| {
        format!("{label},{},{},{},{},{}\n", h[0], h[1], h[2], h[3], h[4])
    };
    for market in MARKET_ORDER {
        if let Some(stats) = summary.per_market.get(&market) {
            out.push_str(&row(market.code(), &stats.permission_count_histogram));
        }
    }
    out.push_str(&row("Total", &summary.total.permission_count_histogram));
    out.push_str(&row("Unique", &summary.unique.permission_count_histogram));
    out
}

fn traceability_by_permission_csv(verdicts: &[SkillVerdictSummary]) -> String {
    let mut out = String::from("permission,requested,broken,partial,complete\n");
    let mut rows: BTreeMap<PermissionClass, [usize; 4]> = BTreeMap::new();
    for v in verdicts {
        if v.verdict == Verdict::NotApplicable {
            continue;
        }
        for &perm in &v.requested {
            let row = rows.entry(perm).or_insert([0; 4]);
            row[0] += 1;
            match v.verdict {
                Verdict::Broken => row[1] += 1,
                Verdict::Partial => row[2] += 1,
                Verdict::Complete => row[3] += 1,
                Verdict::NotApplicable => {}
            }
        }
    }
    for (perm, row) in rows {
        out.push_str(&format!(
            "{perm},{},{},{},{}\n",
            row[0], row[1], row[2], row[3]
        ));
    }
    out
}

fn verdicts_csv(verdicts: &[SkillVerdictSummary]) -> String {
    let mut out = String::from("skill_id,market,developer,verdict,reason,requested\n");
    let mut sorted: Vec<&SkillVerdictSummary> = verdicts.iter().collect();
    sorted.sort_by(|a, b| a.skill_id.cmp(&b.skill_id));
    for v in sorted {
        let requested: Vec<&str> = v.requested.iter().map(|p| p.label()).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            v.skill_id,
            v.market,
            v.developer.replace(',', " "),
            v.verdict,
            v.reason.label(),
            requested.join("|")
        ));
    }
    out
}

fn confusion_csv(eval: &GoldEvaluation) -> String {
    let mut out = String::from("predicted,gold_broken,gold_partial,gold_complete,total\n");
    for (i, label) in ["broken", "partial", "complete"].iter().enumerate() {
        out.push_str(&format!(
            "{label},{},{},{},{}\n",
            eval.matrix[i][0],
            eval.matrix[i][1],
            eval.matrix[i][2],
            eval.predicted_marginal(i)
        ));
    }
    out.push_str(&format!(
        "not_applicable,,,,{}\n",
        eval.not_applicable_predictions
    ));
    out.push_str(&format!("total,,,,{}\n", eval.total));
    out
}

fn account_linking_csv(summary: &AccountLinkSummary) -> String {
    let total = summary.total();
    let pct = |n: usize| {
        if total == 0 {
            0.0
        } else {
            100.0 * n as f64 / total as f64
        }
    };
    let mut out = String::from("account_type,skills,percent\n");
    for (label, n) in [
        ("Developer", summary.developer),
        ("Third-Party", summary.third_party),
        ("Third-Party or Developer", summary.third_party_or_developer),
        ("Unresolved", summary.unresolved),
    ] {
        out.push_str(&format!("{label},{n},{:.1}\n", pct(n)));
    }
    out.push_str(&format!("Total,{total},100.0\n"));
    out
}

fn phonetic_csv(rows: &[PhoneticBucketRow]) -> String {
    let mut out =
        String::from("market,total,lev_le_0.1,lev_le_0.1_excluding_exact,lev_le_0.2\n");
    let mut sorted: Vec<&PhoneticBucketRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.market.priority());
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.market, r.total, r.le_0_1, r.le_0_1_excluding_exact, r.le_0_2
        ));
    }
    out
}

/// Writes CSV tables for whatever inputs are present plus a plain-text
/// summary; returns the paths written. Byte-identical output for identical
/// inputs.
pub fn render_reports(inputs: &ReportInputs<'_>, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut summary_lines = Vec::new();

    if let Some(ms) = inputs.market_summary {
        written.push(write_file(out_dir, "markets.csv", &markets_csv(ms))?);
        written.push(write_file(
            out_dir,
            "permission_histogram.csv",
            &permission_histogram_csv(ms),
        )?);
        summary_lines.push(format!(
            "skills: {} total, {} unique",
            ms.total.skills, ms.unique.skills
        ));
    } else {
        log::info!("market summary not provided; skipping markets.csv");
    }
    if let Some(verdicts) = inputs.verdicts {
        written.push(write_file(out_dir, "verdicts.csv", &verdicts_csv(verdicts))?);
        written.push(write_file(
            out_dir,
            "traceability_by_permission.csv",
            &traceability_by_permission_csv(verdicts),
        )?);
        let counts = |v: Verdict| verdicts.iter().filter(|s| s.verdict == v).count();
        summary_lines.push(format!(
            "verdicts: {} broken, {} partial, {} complete, {} not applicable",
            counts(Verdict::Broken),
            counts(Verdict::Partial),
            counts(Verdict::Complete),
            counts(Verdict::NotApplicable)
        ));
    } else {
        log::info!("verdicts not provided; skipping verdicts.csv");
    }
    if let Some(eval) = inputs.gold_eval {
        written.push(write_file(out_dir, "confusion_matrix.csv", &confusion_csv(eval))?);
        summary_lines.push(format!(
            "gold evaluation: accuracy {:.3} over {}",
            eval.accuracy(),
            eval.total
        ));
    } else {
        log::info!("gold evaluation not provided; skipping confusion_matrix.csv");
    }
    if let Some(al) = inputs.account_linking {
        written.push(write_file(
            out_dir,
            "account_linking.csv",
            &account_linking_csv(al),
        )?);
        summary_lines.push(format!("account linking: {} skills classified", al.total()));
    } else {
        log::info!("account-linking summary not provided; skipping account_linking.csv");
    }
    if let Some(rows) = inputs.phonetic_buckets {
        written.push(write_file(
            out_dir,
            "phonetic_thresholds.csv",
            &phonetic_csv(rows),
        )?);
        summary_lines.push(format!("phonetic buckets: {} markets", rows.len()));
    } else {
        log::info!("phonetic buckets not provided; skipping phonetic_thresholds.csv");
    }

    let mut summary = String::from("skillvet report summary\n");
    for line in &summary_lines {
        summary.push_str(line);
        summary.push('\n');
    }
    written.push(write_file(out_dir, "summary.txt", &summary)?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skill(id: &str, market: Market, dev: &str, perms: &[&str]) -> SkillRecord {
        SkillRecord {
            skill_id: id.into(),
            market,
            name: format!("Skill {id}"),
            invocation_name: None,
            developer: dev.into(),
            category: "c".into(),
            subcategory: None,
            permissions: perms.iter().map(|s| s.to_string()).collect(),
            policy_url: None,
            policy_text: None,
            account_linking_url: None,
            description: None,
        }
    }

    #[test]
    fn registrable_domain_basics() {
        assert_eq!(registrable_domain("accounts.google.com").unwrap(), "google.com");
        assert_eq!(registrable_domain("fitbit.com").unwrap(), "fitbit.com");
        assert_eq!(registrable_domain("shop.example.co.uk").unwrap(), "example.co.uk");
        assert_eq!(registrable_domain("localhost"), None);
    }

    fn linked(name: &str, dev: &str, url: &str) -> SkillRecord {
        let mut s = skill("s1", Market::Us, dev, &[]);
        s.name = name.into();
        s.account_linking_url = Some(url.into());
        s
    }

    #[test]
    fn account_link_developer_match() {
        let providers = OAuthProviderList::default_list();
        // "fitbit" is both a provider and the skill name; name+provider -> both
        let s = linked("WeatherPro", "Acme Weatherpro Ltd", "https://auth.weatherpro.com/oauth");
        assert_eq!(
            classify_account_link(&s, &providers).unwrap(),
            AccountLinkClass::Developer
        );
    }

    #[test]
    fn account_link_third_party() {
        let providers = OAuthProviderList::default_list();
        let s = linked("Trivia Monster", "Somebody", "https://accounts.google.com/o/oauth2");
        assert_eq!(
            classify_account_link(&s, &providers).unwrap(),
            AccountLinkClass::ThirdParty
        );
    }

    #[test]
    fn account_link_both() {
        let providers = OAuthProviderList::default_list();
        let s = linked("Fitbit", "Fitbit Inc", "https://www.fitbit.com/oauth2/authorize");
        assert_eq!(
            classify_account_link(&s, &providers).unwrap(),
            AccountLinkClass::ThirdPartyOrDeveloper
        );
    }

    #[test]
    fn account_link_unresolved_and_errors() {
        let providers = OAuthProviderList::default_list();
        let s = linked("Mystery", "Someone Else", "https://example.org/login");
        assert_eq!(
            classify_account_link(&s, &providers).unwrap(),
            AccountLinkClass::Unresolved
        );
        let s2 = linked("Mystery", "Someone", "not a url at all");
        assert_eq!(
            classify_account_link(&s2, &providers).unwrap(),
            AccountLinkClass::Unresolved
        );
        let s3 = skill("s3", Market::Us, "dev", &[]);
        assert!(classify_account_link(&s3, &providers).is_err());
    }

    #[test]
    fn market_summary_counts() {
        let records = vec![
            skill("a", Market::Us, "dev1", &["Device Address"]),
            skill("b", Market::Us, "dev2", &["Device Address", "Email Address"]),
            skill("a", Market::Uk, "dev1", &["Device Address"]),
            skill("c", Market::Uk, "dev3", &[]),
        ];
        let summary = market_summary(&records);
        assert_eq!(summary.total.skills, 4);
        assert_eq!(summary.unique.skills, 3);
        assert_eq!(summary.per_market[&Market::Us].skills, 2);
        assert_eq!(summary.per_market[&Market::Us].permission_count_histogram, [1, 1, 0, 0, 0]);
        assert_eq!(summary.total.permission_freq["Device Address"], 3);
        // per-market totals sum to the pre-dedup total
        let sum: usize = summary.per_market.values().map(|s| s.skills).sum();
        assert_eq!(sum, summary.total.skills);
    }

    #[test]
    fn market_summary_empty() {
        let summary = market_summary(&[]);
        assert_eq!(summary.total.skills, 0);
        assert_eq!(summary.unique.skills, 0);
        assert!(summary.per_market.is_empty());
    }

    #[test]
    fn developer_profile_partition() {
        let verdicts = vec![
            ("s1".to_string(), "good dev".to_string(), Verdict::Complete),
            ("s2".to_string(), "good dev".to_string(), Verdict::Complete),
            ("s3".to_string(), "bad dev".to_string(), Verdict::Broken),
            ("s4".to_string(), "ugly dev".to_string(), Verdict::Partial),
            ("s5".to_string(), "mixed dev".to_string(), Verdict::Complete),
            ("s6".to_string(), "mixed dev".to_string(), Verdict::Broken),
        ];
        let profile = developer_profile(&verdicts).unwrap();
        assert_eq!(profile["good dev"], DeveloperClass::Good);
        assert_eq!(profile["bad dev"], DeveloperClass::Bad);
        assert_eq!(profile["ugly dev"], DeveloperClass::Ugly);
        assert_eq!(profile["mixed dev"], DeveloperClass::Mixed);
        assert_eq!(profile.len(), 4);
    }

    #[test]
    fn developer_profile_rejects_not_applicable() {
        let verdicts = vec![("s1".to_string(), "d".to_string(), Verdict::NotApplicable)];
        assert!(developer_profile(&verdicts).is_err());
    }

    #[test]
    fn reports_deterministic() {
        let records = vec![
            skill("a", Market::Us, "dev1", &["Device Address"]),
            skill("b", Market::Uk, "dev2", &[]),
        ];
        let summary = market_summary(&records);
        let inputs = ReportInputs {
            market_summary: Some(&summary),
            ..Default::default()
        };
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        render_reports(&inputs, dir1.path()).unwrap();
        render_reports(&inputs, dir2.path()).unwrap();
        for name in ["markets.csv", "permission_histogram.csv", "summary.txt"] {
            let a = fs::read(dir1.path().join(name)).unwrap();
            let b = fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }

    #[test]
    fn reports_empty_inputs_headers_only() {
        let summary = market_summary(&[]);
        let inputs = ReportInputs {
            market_summary: Some(&summary),
            verdicts: Some(&[]),
            ..Default::default()
        };
        let dir = tempfile::tempdir().unwrap();
        render_reports(&inputs, dir.path()).unwrap();
        let verdicts = fs::read_to_string(dir.path().join("verdicts.csv")).unwrap();
        assert_eq!(verdicts.lines().count(), 1);
    }
}
