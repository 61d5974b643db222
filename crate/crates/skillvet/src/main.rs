use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use skillvet::analytics::{
    market_summary, render_reports, summarize_account_linking, OAuthProviderList,
    PhoneticBucketRow, ReportInputs, SkillVerdictSummary,
};
use skillvet::classifier::{
    cross_validate, load_ensemble, save_ensemble, train_ensemble, TrainingConfig, DEFAULT_SEED,
};
use skillvet::corpus::{
    deduplicate, load_pbsd, load_snapshot, Market, PermissionClass, SkillRecord,
    MARKET_ORDER,
};
use skillvet::error::{Error, Result};
use skillvet::phonetics::{load_cmudict, name_reuse_report, nearest_neighbors, phonetic_name};
use skillvet::textprep::FilterList;
use skillvet::traceability::{vet_skill, Verdict, VerdictReason};

#[derive(Parser)]
#[command(
    name = "skillvet",
    version,
    about = "Vetting toolkit for voice-assistant skill marketplaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load one or more marketplace snapshots, deduplicate across markets and
    /// write a normalized corpus plus an ingestion report.
    Ingest {
        /// JSONL snapshot files, one record per line
        #[arg(required = true)]
        snapshots: Vec<PathBuf>,
        /// normalized corpus output path
        #[arg(long, default_value = "corpus.jsonl", env = "SKILLVET_OUT")]
        out: PathBuf,
    },
    /// Cross-validate and train the sentence classifier ensemble on a labeled
    /// sentence corpus.
    Train {
        /// labeled sentence corpus (JSONL)
        pbsd: PathBuf,
        /// where to save the trained model
        #[arg(long, default_value = "model.json")]
        model: PathBuf,
        /// cross-validation report output path
        #[arg(long, default_value = "cv_report.json")]
        report: PathBuf,
        /// RNG seed; all randomness flows from it
        #[arg(long, default_value_t = DEFAULT_SEED, env = "SKILLVET_SEED")]
        seed: u64,
        /// L2 regularization strength
        #[arg(long, default_value_t = 1e-5, env = "SKILLVET_ALPHA")]
        alpha: f64,
        /// SGD epochs per binary model
        #[arg(long, default_value_t = 20, env = "SKILLVET_EPOCHS")]
        epochs: usize,
        /// number of cross-validation folds
        #[arg(long, default_value_t = 5)]
        folds: usize,
    },
    /// Vet every skill in a normalized corpus against its privacy policy.
    Vet {
        /// normalized corpus (JSONL)
        corpus: PathBuf,
        /// trained model file
        #[arg(long, default_value = "model.json")]
        model: PathBuf,
        /// optional filter-list config overriding the built-in phrases
        #[arg(long, env = "SKILLVET_FILTERS")]
        filters: Option<PathBuf>,
        /// verdict CSV output path
        #[arg(long, default_value = "verdicts.csv", env = "SKILLVET_OUT")]
        out: PathBuf,
    },
    /// Phonetic invocation-name similarity and name-reuse analysis.
    Squat {
        /// normalized corpus (JSONL)
        corpus: PathBuf,
        /// pronouncing dictionary file
        cmudict: PathBuf,
        /// two distance thresholds for the bucket table
        #[arg(long, default_value = "0.1,0.2", env = "SKILLVET_THRESHOLDS")]
        thresholds: String,
        /// output directory for the similarity and reuse reports
        #[arg(long, default_value = "squat_out", env = "SKILLVET_OUT")]
        out: PathBuf,
    },
    /// Render aggregate CSV reports from pipeline artifacts; tables whose
    /// inputs are absent are skipped with a notice.
    Report {
        /// normalized corpus (JSONL) for market/account-linking tables
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// verdict CSV produced by `vet`
        #[arg(long)]
        verdicts: Option<PathBuf>,
        /// phonetic bucket table produced by `squat`
        #[arg(long)]
        phonetic: Option<PathBuf>,
        /// OAuth provider list, one token per line
        #[arg(long, env = "SKILLVET_PROVIDERS")]
        providers: Option<PathBuf>,
        /// output directory
        #[arg(long, default_value = "report_out", env = "SKILLVET_OUT")]
        out: PathBuf,
    },
}

fn load_corpus(path: &Path) -> Result<Vec<SkillRecord>> {
    let (records, warnings) = load_snapshot(path)?;
    for w in &warnings {
        log::warn!("{}:{}: {}", path.display(), w.line, w.msg);
    }
    Ok(records)
}

fn cmd_ingest(snapshots: &[PathBuf], out: &Path) -> Result<()> {
    let mut all = Vec::new();
    for path in snapshots {
        let records = load_corpus(path)?;
        println!("{}: {} records", path.display(), records.len());
        all.extend(records);
    }
    let total = all.len();
    let mut per_market: BTreeMap<Market, usize> = BTreeMap::new();
    for rec in &all {
        *per_market.entry(rec.market).or_insert(0) += 1;
    }
    let unique = deduplicate(all);
    let mut lines = String::new();
    for rec in &unique {
        lines.push_str(&serde_json::to_string(rec).map_err(|e| Error::Contract(e.to_string()))?);
        lines.push('\n');
    }
    fs::write(out, lines).map_err(|e| Error::io(out, e))?;

    println!("market  skills");
    for market in MARKET_ORDER {
        if let Some(n) = per_market.get(&market) {
            println!("{:<7} {n}", market.code());
        }
    }
    println!("total   {total}");
    println!("unique  {}", unique.len());
    println!("duplicates removed: {}", total - unique.len());
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_train(
    pbsd: &Path,
    model: &Path,
    report: &Path,
    seed: u64,
    alpha: f64,
    epochs: usize,
    folds: usize,
) -> Result<()> {
    let corpus = load_pbsd(pbsd)?;
    let config = TrainingConfig {
        alpha,
        epochs,
        rng_seed: seed,
        ..TrainingConfig::default()
    };
    let eval = cross_validate(&corpus, &config, folds)?;
    let json = serde_json::to_string_pretty(&eval).map_err(|e| Error::Contract(e.to_string()))?;
    fs::write(report, json).map_err(|e| Error::io(report, e))?;
    for (class, f1) in &eval.per_class_f1 {
        println!("{class:<26} f1 {f1:.3}");
    }
    let ensemble = train_ensemble(&corpus, &config)?;
    save_ensemble(&ensemble, model)?;
    println!("wrote {} and {}", model.display(), report.display());
    Ok(())
}

fn verdict_csv_line(row: &SkillVerdictSummary) -> String {
    let requested: Vec<&str> = row.requested.iter().map(|p| p.label()).collect();
    format!(
        "{},{},{},{},{},{}\n",
        row.skill_id,
        row.market,
        row.developer.replace(',', " "),
        row.verdict,
        row.reason.label(),
        requested.join("|")
    )
}

const VERDICT_CSV_HEADER: &str = "skill_id,market,developer,verdict,reason,requested\n";

fn cmd_vet(corpus: &Path, model: &Path, filters: Option<&Path>, out: &Path) -> Result<()> {
    let records = load_corpus(corpus)?;
    let ensemble = load_ensemble(model)?;
    let filters = match filters {
        Some(path) => FilterList::load(path)?,
        None => FilterList::default(),
    };
    let start = Instant::now();
    let mut rows: Vec<SkillVerdictSummary> = Vec::new();
    for rec in &records {
        // skills that request nothing have nothing to vet; skills whose
        // permissions all normalize away still appear as not_applicable
        if rec.permissions.is_empty() {
            continue;
        }
        let verdict = vet_skill(rec, &ensemble, &filters);
        rows.push(SkillVerdictSummary {
            skill_id: rec.skill_id.clone(),
            market: rec.market,
            developer: rec.developer.clone(),
            verdict: verdict.verdict,
            reason: verdict.reason,
            requested: rec.requested().into_iter().collect(),
        });
    }
    let elapsed = start.elapsed();
    rows.sort_by(|a, b| (&a.skill_id, a.market.priority()).cmp(&(&b.skill_id, b.market.priority())));
    let mut csv = String::from(VERDICT_CSV_HEADER);
    for row in &rows {
        csv.push_str(&verdict_csv_line(row));
    }
    fs::write(out, csv).map_err(|e| Error::io(out, e))?;
    // timing goes to stderr so the written artifacts stay byte-identical
    let vetted = rows
        .iter()
        .filter(|r| r.verdict != Verdict::NotApplicable)
        .count();
    if vetted > 0 {
        eprintln!(
            "vetted {vetted} skills in {:.2}s ({:.3}s mean per skill)",
            elapsed.as_secs_f64(),
            elapsed.as_secs_f64() / vetted as f64
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn parse_thresholds(spec: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::Contract(format!(
            "--thresholds expects two comma-separated values, got {spec:?}"
        )));
    }
    let mut vals = [0.0; 2];
    for (i, p) in parts.iter().enumerate() {
        vals[i] = p
            .parse::<f64>()
            .map_err(|_| Error::Contract(format!("invalid threshold {p:?}")))?;
        if !(0.0..=1.0).contains(&vals[i]) {
            return Err(Error::Contract(format!("threshold {p} outside [0, 1]")));
        }
    }
    if vals[0] > vals[1] {
        return Err(Error::Contract("thresholds must be non-decreasing".into()));
    }
    Ok((vals[0], vals[1]))
}

fn cmd_squat(corpus: &Path, cmudict: &Path, thresholds: &str, out: &Path) -> Result<()> {
    let (t1, t2) = parse_thresholds(thresholds)?;
    let records = load_corpus(corpus)?;
    let dict = load_cmudict(cmudict)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let names: Vec<_> = records
        .iter()
        .filter_map(|r| phonetic_name(r, &dict))
        .collect();
    let mut buckets = Vec::new();
    let mut neighbor_csv =
        String::from("market,skill_id,invocation_name,neighbor_id,min_distance\n");
    for market in MARKET_ORDER {
        if !market.is_english() {
            continue;
        }
        let in_market = names.iter().filter(|n| n.market == market).count();
        if in_market < 2 {
            continue;
        }
        let neighbors = nearest_neighbors(&names, market)?;
        let by_id: BTreeMap<&str, &str> = names
            .iter()
            .filter(|n| n.market == market)
            .map(|n| (n.skill_id.as_str(), n.normalized.as_str()))
            .collect();
        let mut row = PhoneticBucketRow {
            market,
            total: neighbors.len(),
            le_0_1: 0,
            le_0_1_excluding_exact: 0,
            le_0_2: 0,
        };
        for n in &neighbors {
            if n.min_distance <= t1 {
                row.le_0_1 += 1;
                if n.min_distance > 0.0 {
                    row.le_0_1_excluding_exact += 1;
                }
            }
            if n.min_distance <= t2 {
                row.le_0_2 += 1;
            }
            if n.min_distance <= t2 {
                neighbor_csv.push_str(&format!(
                    "{market},{},{},{},{:.4}\n",
                    n.skill_id,
                    by_id.get(n.skill_id.as_str()).unwrap_or(&""),
                    n.neighbor_id,
                    n.min_distance
                ));
            }
        }
        buckets.push(row);
    }
    let inputs = ReportInputs {
        phonetic_buckets: Some(&buckets),
        ..Default::default()
    };
    render_reports(&inputs, out)?;

    let suspects = out.join("near_names.csv");
    fs::write(&suspects, neighbor_csv).map_err(|e| Error::io(&suspects, e))?;

    let reuse = name_reuse_report(&records);
    let mut reuse_csv = String::from("normalized_name,skills,markets,same_developer_single_market\n");
    for g in &reuse.groups {
        let markets: Vec<&str> = g.markets.iter().map(|m| m.code()).collect();
        reuse_csv.push_str(&format!(
            "{},{},{},{}\n",
            g.normalized_name.replace(',', " "),
            g.skill_ids.len(),
            markets.join("|"),
            g.same_developer_single_market
        ));
    }
    let reuse_path = out.join("name_reuse.csv");
    fs::write(&reuse_path, reuse_csv).map_err(|e| Error::io(&reuse_path, e))?;
    println!("wrote reports under {}", out.display());
    Ok(())
}

fn parse_verdict_csv(path: &Path) -> Result<Vec<SkillVerdictSummary>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::parse(path, i + 1, "expected 6 comma-separated fields"));
        }
        let market = Market::parse(fields[1])
            .ok_or_else(|| Error::parse(path, i + 1, format!("unknown market {:?}", fields[1])))?;
        let verdict = match fields[3] {
            "broken" => Verdict::Broken,
            "partial" => Verdict::Partial,
            "complete" => Verdict::Complete,
            "not_applicable" => Verdict::NotApplicable,
            other => {
                return Err(Error::parse(path, i + 1, format!("unknown verdict {other:?}")))
            }
        };
        let reason = match fields[4] {
            "no_policy" => VerdictReason::NoPolicy,
            "dead_link" => VerdictReason::DeadLink,
            "empty_policy" => VerdictReason::EmptyPolicy,
            "coverage" => VerdictReason::Coverage,
            other => {
                return Err(Error::parse(path, i + 1, format!("unknown reason {other:?}")))
            }
        };
        let mut requested = Vec::new();
        for label in fields[5].split('|').filter(|s| !s.is_empty()) {
            let class = PermissionClass::parse(label).ok_or_else(|| {
                Error::parse(path, i + 1, format!("unknown permission class {label:?}"))
            })?;
            requested.push(class);
        }
        rows.push(SkillVerdictSummary {
            skill_id: fields[0].to_string(),
            market,
            developer: fields[2].to_string(),
            verdict,
            reason,
            requested,
        });
    }
    Ok(rows)
}

fn parse_phonetic_csv(path: &Path) -> Result<Vec<PhoneticBucketRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::parse(path, i + 1, "expected 5 comma-separated fields"));
        }
        let market = Market::parse(fields[0])
            .ok_or_else(|| Error::parse(path, i + 1, format!("unknown market {:?}", fields[0])))?;
        let num = |f: &str| {
            f.parse::<usize>()
                .map_err(|_| Error::parse(path, i + 1, format!("invalid count {f:?}")))
        };
        rows.push(PhoneticBucketRow {
            market,
            total: num(fields[1])?,
            le_0_1: num(fields[2])?,
            le_0_1_excluding_exact: num(fields[3])?,
            le_0_2: num(fields[4])?,
        });
    }
    Ok(rows)
}

fn cmd_report(
    corpus: Option<&Path>,
    verdicts: Option<&Path>,
    phonetic: Option<&Path>,
    providers: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let records = corpus.map(load_corpus).transpose()?;
    let summary = records.as_deref().map(market_summary);
    let provider_list = match providers {
        Some(path) => OAuthProviderList::load(path)?,
        None => OAuthProviderList::default_list(),
    };
    let linking = records
        .as_deref()
        .map(|r| summarize_account_linking(r, &provider_list));
    let verdict_rows = verdicts.map(parse_verdict_csv).transpose()?;
    let buckets = phonetic.map(parse_phonetic_csv).transpose()?;

    let inputs = ReportInputs {
        market_summary: summary.as_ref(),
        gold_eval: None,
        account_linking: linking.as_ref(),
        phonetic_buckets: buckets.as_deref(),
        verdicts: verdict_rows.as_deref(),
    };
    let written = render_reports(&inputs, out)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { snapshots, out } => cmd_ingest(&snapshots, &out),
        Command::Train {
            pbsd,
            model,
            report,
            seed,
            alpha,
            epochs,
            folds,
        } => cmd_train(&pbsd, &model, &report, seed, alpha, epochs, folds),
        Command::Vet {
            corpus,
            model,
            filters,
            out,
        } => cmd_vet(&corpus, &model, filters.as_deref(), &out),
        Command::Squat {
            corpus,
            cmudict,
            thresholds,
            out,
        } => cmd_squat(&corpus, &cmudict, &thresholds, &out),
        Command::Report {
            corpus,
            verdicts,
            phonetic,
            providers,
            out,
        } => cmd_report(
            corpus.as_deref(),
            verdicts.as_deref(),
            phonetic.as_deref(),
            providers.as_deref(),
            &out,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
