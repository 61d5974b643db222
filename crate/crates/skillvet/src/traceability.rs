//! Traceability verdicts: compares the data practices declared in a policy
//! with the skill's normalized requested permissions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierEnsemble;
use crate::corpus::{GoldVerdict, PermissionClass, SkillRecord, TraceabilityGoldRecord};
use crate::error::{Error, Result};
use crate::textprep::{preprocess_policy, FilterList, PreprocessedPolicy};

/// Permission classes found across the kept sentences of a policy, with the
/// evidence sentences behind each.
#[derive(Debug, Clone, Default)]
pub struct DeclaredPractices {
    pub classes: BTreeSet<PermissionClass>,
    /// class -> (sentence text, sentence position in the kept list)
    pub evidence: BTreeMap<PermissionClass, Vec<(String, usize)>>,
    /// true when any kept sentence was classified None
    pub none_fired: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coverage {
    Full,
    PartialCoverage,
    Uncovered,
}

/// The coverage rule that produced a row's result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoverageRule {
    /// requested class declared directly
    Exact,
    /// declared DeviceAddress subsumes requested postal code
    AddressSubsumesPostalCode,
    /// declared postal code only partially covers requested DeviceAddress
    PostalCodePartOfAddress,
    /// declared PersonalInformation covers requested PersonalInformation
    PersonalInfoExact,
    /// declared PersonalInformation partially covers a specific request
    PersonalInfoGeneric,
    /// nothing declared covers the request
    NoMatch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageRow {
    pub requested: PermissionClass,
    pub coverage: Coverage,
    pub justification: CoverageRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    Broken,
    Partial,
    Complete,
    NotApplicable,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Broken => "broken",
            Verdict::Partial => "partial",
            Verdict::Complete => "complete",
            Verdict::NotApplicable => "not_applicable",
        }
    }

    pub fn matches_gold(&self, gold: GoldVerdict) -> bool {
        matches!(
            (self, gold),
            (Verdict::Broken, GoldVerdict::Broken)
                | (Verdict::Partial, GoldVerdict::Partial)
                | (Verdict::Complete, GoldVerdict::Complete)
        )
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Machine-readable reason for the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictReason {
    NoPolicy,
    DeadLink,
    EmptyPolicy,
    Coverage,
}

impl VerdictReason {
    pub fn label(&self) -> &'static str {
        match self {
            VerdictReason::NoPolicy => "no_policy",
            VerdictReason::DeadLink => "dead_link",
            VerdictReason::EmptyPolicy => "empty_policy",
            VerdictReason::Coverage => "coverage",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceabilityVerdict {
    pub verdict: Verdict,
    pub rows: Vec<CoverageRow>,
    pub reason: VerdictReason,
}

/// Classifies every kept sentence of a policy. A sentence whose prediction
/// contains None contributes no classes (None prevails per sentence); the
/// remaining predictions are unioned with evidence recorded.
pub fn extract_declared(
    policy: &PreprocessedPolicy,
    ensemble: &ClassifierEnsemble,
) -> DeclaredPractices {
    let mut declared = DeclaredPractices::default();
    for (pos, sentence) in policy.sentences.iter().enumerate() {
        let predicted = ensemble.predict(sentence);
        if predicted.contains(&PermissionClass::None) {
            declared.none_fired = true;
            continue;
        }
        for class in predicted {
            declared.classes.insert(class);
            declared
                .evidence
                .entry(class)
                .or_default()
                .push((sentence.clone(), pos));
        }
    }
    declared
}

/// Coverage rules, first match wins:
/// 1. requested declared directly -> Full
/// 2. postal code requested, address declared -> Full (address subsumes it)
/// 3. address requested, only postal code declared -> Partial
/// 4. personal information requested and declared -> Full
/// 5. other request, personal information declared -> Partial
/// 6. otherwise -> Uncovered
pub fn coverage(
    requested: PermissionClass,
    declared: &BTreeSet<PermissionClass>,
) -> Result<(Coverage, CoverageRule)> {
    use PermissionClass::*;
    if requested == None {
        return Err(Error::Contract(
            "coverage is undefined for the None class".into(),
        ));
    }
    Ok(if declared.contains(&requested) {
        if requested == PersonalInformation {
            (Coverage::Full, CoverageRule::PersonalInfoExact)
        } else {
            (Coverage::Full, CoverageRule::Exact)
        }
    } else if requested == DeviceCountryPostalCode && declared.contains(&DeviceAddress) {
        (Coverage::Full, CoverageRule::AddressSubsumesPostalCode)
    } else if requested == DeviceAddress && declared.contains(&DeviceCountryPostalCode) {
        (Coverage::PartialCoverage, CoverageRule::PostalCodePartOfAddress)
    } else if declared.contains(&PersonalInformation) {
        (Coverage::PartialCoverage, CoverageRule::PersonalInfoGeneric)
    } else {
        (Coverage::Uncovered, CoverageRule::NoMatch)
    })
}

/// Policy availability as recorded in the snapshot: the toolkit performs no
/// network fetches, so a dead link is an ingestion-time flag (URL present,
/// text absent).
fn policy_state(record: &SkillRecord) -> Option<VerdictReason> {
    match (&record.policy_text, &record.policy_url) {
        (Some(text), _) if !text.trim().is_empty() => None,
        (_, Some(_)) => Some(VerdictReason::DeadLink),
        _ => Some(VerdictReason::NoPolicy),
    }
}

/// Aggregates per-permission coverage into the verdict. Used by
/// [`vet_skill`]; exposed so a perfect-label evaluation can bypass the
/// sentence classifier.
pub fn verdict_from_sets(
    requested: &BTreeSet<PermissionClass>,
    declared: &BTreeSet<PermissionClass>,
) -> Result<TraceabilityVerdict> {
    if requested.is_empty() {
        return Ok(TraceabilityVerdict {
            verdict: Verdict::NotApplicable,
            rows: Vec::new(),
            reason: VerdictReason::Coverage,
        });
    }
    let mut rows = Vec::with_capacity(requested.len());
    for &r in requested {
        let (cov, rule) = coverage(r, declared)?;
        rows.push(CoverageRow {
            requested: r,
            coverage: cov,
            justification: rule,
        });
    }
    let all_full = rows.iter().all(|r| r.coverage == Coverage::Full);
    let all_uncovered = rows.iter().all(|r| r.coverage == Coverage::Uncovered);
    let verdict = if all_full {
        Verdict::Complete
    } else if all_uncovered {
        Verdict::Broken
    } else {
        Verdict::Partial
    };
    Ok(TraceabilityVerdict {
        verdict,
        rows,
        reason: VerdictReason::Coverage,
    })
}

fn broken_with_reason(
    requested: &BTreeSet<PermissionClass>,
    reason: VerdictReason,
) -> TraceabilityVerdict {
    TraceabilityVerdict {
        verdict: Verdict::Broken,
        rows: requested
            .iter()
            .map(|&r| CoverageRow {
                requested: r,
                coverage: Coverage::Uncovered,
                justification: CoverageRule::NoMatch,
            })
            .collect(),
        reason,
    }
}

/// Full per-skill vetting: normalize the requested set, preprocess the
/// policy, extract declared practices, aggregate coverage.
pub fn vet_skill(
    record: &SkillRecord,
    ensemble: &ClassifierEnsemble,
    filters: &FilterList,
) -> TraceabilityVerdict {
    let requested = record.requested();
    if requested.is_empty() {
        return TraceabilityVerdict {
            verdict: Verdict::NotApplicable,
            rows: Vec::new(),
            reason: VerdictReason::Coverage,
        };
    }
    if let Some(reason) = policy_state(record) {
        return broken_with_reason(&requested, reason);
    }
    let policy = preprocess_policy(
        &record.skill_id,
        record.policy_text.as_deref().unwrap_or(""),
        filters,
    );
    if policy.is_empty {
        return broken_with_reason(&requested, VerdictReason::EmptyPolicy);
    }
    let declared = extract_declared(&policy, ensemble);
    // requested is non-empty and the None class never enters it, so the
    // aggregation cannot fail
    verdict_from_sets(&requested, &declared.classes).expect("requested set validated")
}

/// 3x3 confusion matrix (predicted x gold) plus NotApplicable predictions,
/// which count as errors against any gold label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoldEvaluation {
    /// matrix[predicted][gold] with Broken/Partial/Complete order
    pub matrix: [[usize; 3]; 3],
    pub not_applicable_predictions: usize,
    pub total: usize,
}

impl GoldEvaluation {
    pub fn accuracy(&self) -> f64 {
        let trace: usize = (0..3).map(|i| self.matrix[i][i]).sum();
        trace as f64 / self.total as f64
    }

    pub fn predicted_marginal(&self, i: usize) -> usize {
        self.matrix[i].iter().sum()
    }

    pub fn gold_marginal(&self, j: usize) -> usize {
        (0..3).map(|i| self.matrix[i][j]).sum()
    }

    /// Recall on the gold Broken column.
    pub fn broken_recall(&self) -> f64 {
        let gold_broken = self.gold_marginal(0);
        if gold_broken == 0 {
            return 1.0;
        }
        self.matrix[0][0] as f64 / gold_broken as f64
    }
}

fn verdict_index(v: Verdict) -> Option<usize> {
    match v {
        Verdict::Broken => Some(0),
        Verdict::Partial => Some(1),
        Verdict::Complete => Some(2),
        Verdict::NotApplicable => None,
    }
}

fn gold_index(v: GoldVerdict) -> usize {
    match v {
        GoldVerdict::Broken => 0,
        GoldVerdict::Partial => 1,
        GoldVerdict::Complete => 2,
    }
}

/// Options for gold-set evaluation. Some gold splits exclude skills whose
/// traceability is trivially broken (missing/dead/empty policies);
/// `include_trivially_broken` keeps them in the tally.
#[derive(Debug, Clone, Copy)]
pub struct GoldEvalOptions {
    pub include_trivially_broken: bool,
}

impl Default for GoldEvalOptions {
    fn default() -> Self {
        GoldEvalOptions {
            include_trivially_broken: true,
        }
    }
}

/// Runs the full pipeline over gold records and tallies predicted vs gold
/// verdicts.
pub fn evaluate_against_gold(
    gold: &[TraceabilityGoldRecord],
    ensemble: &ClassifierEnsemble,
    filters: &FilterList,
    options: GoldEvalOptions,
) -> Result<GoldEvaluation> {
    if gold.is_empty() {
        return Err(Error::Contract("gold set is empty".into()));
    }
    let mut eval = GoldEvaluation {
        matrix: [[0; 3]; 3],
        not_applicable_predictions: 0,
        total: 0,
    };
    for rec in gold {
        let skill = SkillRecord {
            skill_id: rec.skill_id.clone(),
            market: rec.market,
            name: String::new(),
            invocation_name: None,
            developer: String::new(),
            category: String::new(),
            subcategory: None,
            permissions: rec.permissions.clone(),
            policy_url: None,
            policy_text: rec.policy_text.clone(),
            account_linking_url: None,
            description: None,
        };
        let predicted = vet_skill(&skill, ensemble, filters);
        if !options.include_trivially_broken
            && predicted.verdict == Verdict::Broken
            && predicted.reason != VerdictReason::Coverage
        {
            continue;
        }
        eval.total += 1;
        match verdict_index(predicted.verdict) {
            Some(i) => eval.matrix[i][gold_index(rec.gold_verdict)] += 1,
            None => eval.not_applicable_predictions += 1,
        }
    }
    Ok(eval)
}

/// Group of skills sharing one policy URL.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyReuseGroup {
    pub policy_url: String,
    pub skill_ids: Vec<String>,
    pub developers: Vec<String>,
    pub distinct_permission_sets: usize,
}

/// Groups skills by exact policy URL (trimmed); only groups with 2 or more
/// skills are returned, sorted by URL.
pub fn detect_reused_policies(records: &[SkillRecord]) -> Vec<PolicyReuseGroup> {
    let mut groups: BTreeMap<String, Vec<&SkillRecord>> = BTreeMap::new();
    for rec in records {
        if let Some(url) = &rec.policy_url {
            let url = url.trim();
            if !url.is_empty() {
                groups.entry(url.to_string()).or_default().push(rec);
            }
        }
    }
    groups
        .into_iter()
        .filter(|(_, members)| members.len() >= 2)
        .map(|(policy_url, members)| {
            let mut skill_ids: Vec<String> =
                members.iter().map(|r| r.skill_id.clone()).collect();
            skill_ids.sort();
            let mut developers: Vec<String> =
                members.iter().map(|r| r.developer.clone()).collect();
            developers.sort();
            developers.dedup();
            let perm_sets: BTreeSet<BTreeSet<PermissionClass>> =
                members.iter().map(|r| r.requested()).collect();
            PolicyReuseGroup {
                policy_url,
                skill_ids,
                developers,
                distinct_permission_sets: perm_sets.len(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use PermissionClass::*;

    fn set(classes: &[PermissionClass]) -> BTreeSet<PermissionClass> {
        classes.iter().copied().collect()
    }

    #[test]
    fn coverage_rules() {
        assert_eq!(
            coverage(DeviceCountryPostalCode, &set(&[DeviceAddress])).unwrap().0,
            Coverage::Full
        );
        assert_eq!(
            coverage(DeviceAddress, &set(&[DeviceCountryPostalCode])).unwrap().0,
            Coverage::PartialCoverage
        );
        assert_eq!(
            coverage(Name, &set(&[PersonalInformation])).unwrap().0,
            Coverage::PartialCoverage
        );
        assert_eq!(
            coverage(PersonalInformation, &set(&[PersonalInformation])).unwrap().0,
            Coverage::Full
        );
        assert_eq!(coverage(EmailAddress, &set(&[])).unwrap().0, Coverage::Uncovered);
    }

    #[test]
    fn coverage_r1_precedence() {
        // direct declaration wins over the generic personal-info rule
        for r in PermissionClass::DATA {
            let declared = set(&[r, PersonalInformation]);
            assert_eq!(coverage(r, &declared).unwrap().0, Coverage::Full, "{r}");
        }
    }

    #[test]
    fn coverage_none_is_contract_violation() {
        assert!(coverage(None, &set(&[Name])).is_err());
    }

    #[test]
    fn verdict_aggregation() {
        let v = verdict_from_sets(&set(&[Name, EmailAddress]), &set(&[Name])).unwrap();
        assert_eq!(v.verdict, Verdict::Partial);
        let v = verdict_from_sets(&set(&[Name]), &set(&[Name])).unwrap();
        assert_eq!(v.verdict, Verdict::Complete);
        let v = verdict_from_sets(&set(&[Name]), &set(&[])).unwrap();
        assert_eq!(v.verdict, Verdict::Broken);
        assert!(v.rows.iter().all(|r| r.coverage == Coverage::Uncovered));
        let v = verdict_from_sets(&set(&[]), &set(&[Name])).unwrap();
        assert_eq!(v.verdict, Verdict::NotApplicable);
        assert!(v.rows.is_empty());
    }

    #[test]
    fn verdict_monotone_in_declared() {
        // adding declared classes never lowers the verdict
        let requested = set(&[DeviceAddress, EmailAddress]);
        let mut declared = BTreeSet::new();
        let mut last = verdict_from_sets(&requested, &declared).unwrap().verdict;
        for add in [DeviceCountryPostalCode, EmailAddress, DeviceAddress] {
            declared.insert(add);
            let v = verdict_from_sets(&requested, &declared).unwrap().verdict;
            assert!(v >= last, "{last:?} -> {v:?} after adding {add}");
            last = v;
        }
        assert_eq!(last, Verdict::Complete);
    }

    fn skill_with(permissions: &[&str], policy: Option<&str>, url: Option<&str>) -> SkillRecord {
        SkillRecord {
            skill_id: "s1".into(),
            market: crate::corpus::Market::Us,
            name: "test".into(),
            invocation_name: Option::None,
            developer: "dev".into(),
            category: "c".into(),
            subcategory: Option::None,
            permissions: permissions.iter().map(|s| s.to_string()).collect(),
            policy_url: url.map(String::from),
            policy_text: policy.map(String::from),
            account_linking_url: Option::None,
            description: Option::None,
        }
    }

    /// Minimal stub ensemble with keyword-driven models is overkill here;
    /// the policy-state paths never reach the classifier.
    fn unused_ensemble() -> ClassifierEnsemble {
        let corpus = vec![
            crate::corpus::LabeledSentence {
                text: "a b".into(),
                labels: set(&[Name]),
                source_policy: "p".into(),
            },
            crate::corpus::LabeledSentence {
                text: "a b".into(),
                labels: set(&[Name]),
                source_policy: "p".into(),
            },
        ];
        let vectorizer = crate::classifier::fit_vectorizer(&corpus, 1, 1, 2).unwrap();
        let dim = vectorizer.vocabulary_size();
        ClassifierEnsemble {
            vectorizer,
            models: PermissionClass::ALL
                .iter()
                .map(|&target| crate::classifier::BinaryClassModel {
                    target,
                    weights: vec![0.0; dim],
                    bias: -1.0,
                })
                .collect(),
        }
    }

    #[test]
    fn vet_no_policy_is_broken() {
        let skill = skill_with(&["Device Country and Postal Code"], Option::None, Option::None);
        let v = vet_skill(&skill, &unused_ensemble(), &FilterList::default());
        assert_eq!(v.verdict, Verdict::Broken);
        assert_eq!(v.reason, VerdictReason::NoPolicy);
        assert!(v.rows.iter().all(|r| r.coverage == Coverage::Uncovered));
    }

    #[test]
    fn vet_dead_link_is_broken() {
        let skill = skill_with(
            &["Email Address"],
            Option::None,
            Some("https://example.com/privacy"),
        );
        let v = vet_skill(&skill, &unused_ensemble(), &FilterList::default());
        assert_eq!(v.verdict, Verdict::Broken);
        assert_eq!(v.reason, VerdictReason::DeadLink);
    }

    #[test]
    fn vet_excluded_only_permissions_not_applicable() {
        let skill = skill_with(&["Reminders"], Some("we collect nothing"), Option::None);
        let v = vet_skill(&skill, &unused_ensemble(), &FilterList::default());
        assert_eq!(v.verdict, Verdict::NotApplicable);
        assert!(v.rows.is_empty());
    }

    #[test]
    fn vet_empty_policy_after_filtering_is_broken() {
        let skill = skill_with(
            &["Email Address"],
            Some("if you have questions please contact us."),
            Option::None,
        );
        let v = vet_skill(&skill, &unused_ensemble(), &FilterList::default());
        assert_eq!(v.verdict, Verdict::Broken);
        assert_eq!(v.reason, VerdictReason::EmptyPolicy);
    }

    #[test]
    fn reused_policies_grouping() {
        let mut a = skill_with(&[], Option::None, Some("https://x.com/p"));
        a.skill_id = "a".into();
        a.developer = "dev1".into();
        let mut b = skill_with(&[], Option::None, Some("https://x.com/p "));
        b.skill_id = "b".into();
        b.developer = "dev2".into();
        let mut c = skill_with(&[], Option::None, Some("https://unique.com/p"));
        c.skill_id = "c".into();
        let groups = detect_reused_policies(&[a, b, c]);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].skill_ids, ["a", "b"]);
        assert_eq!(groups[0].developers.len(), 2);
    }

    #[test]
    fn reused_policies_all_unique() {
        let mut a = skill_with(&[], Option::None, Some("https://a.com"));
        a.skill_id = "a".into();
        let mut b = skill_with(&[], Option::None, Some("https://b.com"));
        b.skill_id = "b".into();
        assert!(detect_reused_policies(&[a, b]).is_empty());
    }
}
