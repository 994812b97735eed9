//! Subcommand implementations shared by the binary and the test suites.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use marginalia_core::metrics::{
    evaluate_document, DocumentMetrics, GroundTruthImages, PipelineImages,
};
use marginalia_core::raster::{binarize, load_image, save_binary_image, BinarizeMethod};
use marginalia_core::synthgen::{generate_corpus, AnnotationProfile};

use crate::config::PipelineConfig;
use crate::pipeline::{clean_document, components_csv, profile_csv, CleanOutcome};
use crate::report::{metrics_csv, AggregateReport, FailureEntry, MetricSummary, REPORT_SCHEMA};

/// Optional diagnostic outputs shared by the processing commands.
#[derive(Debug, Clone, Default)]
pub struct EmitOptions {
    /// Directory for raw/smoothed profile CSVs, one pair per document.
    pub profiles: Option<PathBuf>,
    /// Directory for cleaned-body component CSVs, one per document.
    pub components: Option<PathBuf>,
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "document".to_string())
}

fn write_outputs(
    outcome: &CleanOutcome,
    stem: &str,
    out_dir: &Path,
    emit: &EmitOptions,
) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    save_binary_image(
        &outcome.cleaned,
        out_dir.join(format!("{}_cleaned.png", stem)),
    )?;
    save_binary_image(
        &outcome.removed,
        out_dir.join(format!("{}_removed.png", stem)),
    )?;
    fs::write(
        out_dir.join(format!("{}_report.json", stem)),
        outcome.report.to_json(),
    )?;
    if let Some(dir) = &emit.profiles {
        fs::create_dir_all(dir)?;
        if let Some(p) = &outcome.scan.column_smoothed {
            fs::write(
                dir.join(format!("{}_column_profile.csv", stem)),
                profile_csv(p),
            )?;
        }
        if let Some(p) = &outcome.scan.row_smoothed {
            fs::write(
                dir.join(format!("{}_row_profile.csv", stem)),
                profile_csv(p),
            )?;
        }
    }
    if let Some(dir) = &emit.components {
        fs::create_dir_all(dir)?;
        fs::write(
            dir.join(format!("{}_components.csv", stem)),
            components_csv(&outcome.body_components),
        )?;
    }
    Ok(())
}

/// `clean`: process one document and write the cleaned page, the removed
/// ink, and the JSON report.
pub fn run_clean(
    input: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
    emit: &EmitOptions,
) -> Result<CleanOutcome> {
    let outcome = clean_document(input, config)?;
    write_outputs(&outcome, &stem_of(input), out_dir, emit)?;
    Ok(outcome)
}

fn install_pool<T: Send>(jobs: usize, work: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")?;
    Ok(pool.install(work))
}

/// `batch`: process many documents with isolated per-file failures.
/// Results are deterministic for any parallelism degree.
pub fn run_batch(
    inputs: &[PathBuf],
    out_dir: &Path,
    config: &PipelineConfig,
    emit: &EmitOptions,
) -> Result<AggregateReport> {
    let inputs = expand_inputs(inputs)?;
    if inputs.is_empty() {
        bail!("no input files matched");
    }
    use rayon::prelude::*;
    let results: Vec<(PathBuf, Result<CleanOutcome>)> = install_pool(config.jobs, || {
        inputs
            .par_iter()
            .map(|input| (input.clone(), clean_document(input, config)))
            .collect()
    })?;

    let mut failures = Vec::new();
    let mut processed = 0usize;
    for (input, result) in &results {
        match result {
            Ok(outcome) => {
                write_outputs(outcome, &stem_of(input), out_dir, emit)?;
                processed += 1;
            }
            Err(e) => failures.push(FailureEntry {
                input: input.display().to_string(),
                error: format!("{:#}", e),
            }),
        }
    }
    let aggregate = AggregateReport {
        schema: REPORT_SCHEMA,
        documents: processed,
        failures,
        removal_accuracy: None,
        recovery_accuracy: None,
        correlation: None,
    };
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("aggregate.json"), aggregate.to_json())?;
    if processed == 0 {
        bail!("every input failed; see aggregate.json");
    }
    Ok(aggregate)
}

/// Expands `*`/`?` patterns in the final path component; plain paths pass
/// through untouched. Matching is deterministic (sorted).
fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        let name = input
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if name.contains('*') || name.contains('?') {
            let dir = match input.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            let mut matched: Vec<PathBuf> = fs::read_dir(&dir)
                .with_context(|| format!("listing {}", dir.display()))?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| {
                    p.file_name()
                        .map(|f| glob_match(&name, &f.to_string_lossy()))
                        .unwrap_or(false)
                })
                .collect();
            matched.sort();
            if matched.is_empty() {
                bail!("pattern `{}` matched nothing", input.display());
            }
            out.extend(matched);
        } else {
            out.push(input.clone());
        }
    }
    Ok(out)
}

/// Minimal glob: `*` matches any run, `?` any single character.
fn glob_match(pattern: &str, name: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let n: Vec<char> = name.chars().collect();
    fn rec(p: &[char], n: &[char]) -> bool {
        match (p.first(), n.first()) {
            (None, None) => true,
            (Some('*'), _) => rec(&p[1..], n) || (!n.is_empty() && rec(p, &n[1..])),
            (Some('?'), Some(_)) => rec(&p[1..], &n[1..]),
            (Some(&c), Some(&d)) if c == d => rec(&p[1..], &n[1..]),
            _ => false,
        }
    }
    rec(&p, &n)
}

/// One document of an evaluation corpus, discovered by its truth file.
struct CorpusDoc {
    stem: String,
    annotated: PathBuf,
    clean: PathBuf,
    mask: PathBuf,
}

/// Documents keyed by their truth file, plus failure entries for annotated
/// images that have no truth file and would otherwise be silently skipped.
fn discover_corpus(dir: &Path) -> Result<(Vec<CorpusDoc>, Vec<FailureEntry>)> {
    let mut docs = Vec::new();
    let mut orphans = Vec::new();
    let entries = fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))?;
    for entry in entries.filter_map(|e| e.ok()) {
        let path = entry.path();
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned());
        let Some(name) = name else { continue };
        if let Some(stem) = name.strip_suffix("_truth.json") {
            docs.push(CorpusDoc {
                stem: stem.to_string(),
                annotated: dir.join(format!("{}_annotated.png", stem)),
                clean: dir.join(format!("{}_clean.png", stem)),
                mask: dir.join(format!("{}_mask.png", stem)),
            });
        } else if let Some(stem) = name.strip_suffix("_annotated.png") {
            if !dir.join(format!("{}_truth.json", stem)).exists() {
                orphans.push(FailureEntry {
                    input: stem.to_string(),
                    error: "skipped: missing truth file".to_string(),
                });
            }
        }
    }
    docs.sort_by(|a, b| a.stem.cmp(&b.stem));
    orphans.sort_by(|a, b| a.input.cmp(&b.input));
    Ok((docs, orphans))
}

fn load_mask(path: &Path) -> Result<marginalia_core::raster::BinaryImage> {
    let gray = load_image(path)?;
    Ok(binarize(&gray, BinarizeMethod::Fixed(128))?)
}

/// `evaluate`: run the pipeline over a synthetic corpus directory and score
/// it against the ground truth. Writes per-document reports, an
/// `aggregate.json` and a `metrics.csv` into `out_dir`.
pub fn run_evaluate(
    dir: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
    emit: &EmitOptions,
) -> Result<AggregateReport> {
    let (docs, orphans) = discover_corpus(dir)?;
    if docs.is_empty() && orphans.is_empty() {
        bail!("no documents found in {}", dir.display());
    }
    use rayon::prelude::*;
    type DocResult = (String, Result<(CleanOutcome, DocumentMetrics)>);
    let results: Vec<DocResult> = install_pool(config.jobs, || {
        docs.par_iter()
            .map(|doc| {
                let run = || -> Result<(CleanOutcome, DocumentMetrics)> {
                    for required in [&doc.annotated, &doc.clean, &doc.mask] {
                        if !required.exists() {
                            bail!("missing corpus file {}", required.display());
                        }
                    }
                    let mut outcome = clean_document(&doc.annotated, config)?;
                    let clean_truth = load_mask(&doc.clean)?;
                    let mask_truth = load_mask(&doc.mask)?;
                    let metrics = evaluate_document(
                        GroundTruthImages {
                            clean: &clean_truth,
                            annotation_mask: &mask_truth,
                        },
                        PipelineImages {
                            final_body: &outcome.cleaned,
                            removed: &outcome.removed,
                        },
                    )?;
                    outcome.report.metrics = Some(metrics.clone());
                    outcome.report = outcome.report.clone().rounded();
                    Ok((outcome, metrics))
                };
                (doc.stem.clone(), run())
            })
            .collect()
    })?;

    let mut failures = orphans;
    let mut rows: Vec<(String, DocumentMetrics)> = Vec::new();
    for (stem, result) in results {
        match result {
            Ok((outcome, metrics)) => {
                write_outputs(&outcome, &stem, out_dir, emit)?;
                rows.push((stem, metrics));
            }
            Err(e) => failures.push(FailureEntry {
                input: stem,
                error: format!("{:#}", e),
            }),
        }
    }
    let collect = |f: fn(&DocumentMetrics) -> Option<f64>| -> Vec<f64> {
        rows.iter().filter_map(|(_, m)| f(m)).collect()
    };
    let aggregate = AggregateReport {
        schema: REPORT_SCHEMA,
        documents: rows.len(),
        failures,
        removal_accuracy: MetricSummary::from_values(&collect(|m| m.removal_accuracy)),
        recovery_accuracy: MetricSummary::from_values(&collect(|m| m.recovery_accuracy)),
        correlation: MetricSummary::from_values(&collect(|m| m.correlation)),
    };
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("aggregate.json"), aggregate.to_json())?;
    fs::write(out_dir.join("metrics.csv"), metrics_csv(&rows))?;
    Ok(aggregate)
}

/// `synth`: write a deterministic ground-truth corpus (`<stem>_clean.png`,
/// `<stem>_annotated.png`, `<stem>_mask.png`, `<stem>_truth.json`).
pub fn run_synth(
    out_dir: &Path,
    count: usize,
    base_seed: u64,
    profiles: &[AnnotationProfile],
) -> Result<()> {
    if count == 0 {
        bail!("count must be at least 1");
    }
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    for (i, truth) in generate_corpus(count, base_seed, profiles)
        .iter()
        .enumerate()
    {
        let stem = format!("doc{:03}", i);
        save_binary_image(&truth.clean, out_dir.join(format!("{}_clean.png", stem)))?;
        save_binary_image(
            &truth.annotated,
            out_dir.join(format!("{}_annotated.png", stem)),
        )?;
        save_binary_image(
            &truth.annotation_mask,
            out_dir.join(format!("{}_mask.png", stem)),
        )?;
        let json = serde_json::to_string_pretty(&truth.geometry)?;
        fs::write(out_dir.join(format!("{}_truth.json", stem)), json)?;
    }
    Ok(())
}

pub fn parse_profiles(spec: &str) -> Result<Vec<AnnotationProfile>> {
    spec.split(',')
        .map(|p| match p.trim() {
            "none" => Ok(AnnotationProfile::None),
            "light" => Ok(AnnotationProfile::Light),
            "heavy" => Ok(AnnotationProfile::Heavy),
            other => bail!("unknown annotation profile `{}`", other),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glob_match_basics() {
        assert!(glob_match("*.png", "a.png"));
        assert!(glob_match("doc0??_clean.png", "doc001_clean.png"));
        assert!(!glob_match("*.png", "a.pgm"));
        assert!(glob_match("*", "anything"));
    }

    #[test]
    fn parse_profiles_list() {
        let p = parse_profiles("light, heavy,none").unwrap();
        assert_eq!(
            p,
            vec![
                AnnotationProfile::Light,
                AnnotationProfile::Heavy,
                AnnotationProfile::None
            ]
        );
        assert!(parse_profiles("bogus").is_err());
    }
}
