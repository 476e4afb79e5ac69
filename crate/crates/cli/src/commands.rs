//! Implementations of the `identikit` subcommands.
//!
//! Each command reads its inputs through [`RunContext::input`] and writes
//! artifacts through [`RunContext::output`] so the run summary records every
//! file touched. Primary artifacts never contain timestamps; reruns with the
//! same flags and seeds are byte-identical.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use identikit::attrs::{
    read_profiles_jsonl, sample_profiles, validate_config, write_profiles_jsonl, AttributeConfig,
    PromptTemplate,
};
use identikit::embeddings::{load_embeddings, EmbeddingSet, FileFormat, Role};
use identikit::error::Error;
use identikit::evaluation::{
    attribute_shift_report, export_for_projection, histogram, histogram_svg, kl_divergence,
    mated_nonmated_scores, read_scores_csv, shift_svg, write_scores_csv, write_shift_csv,
};
use identikit::filtering::{
    false_match_probability, leakage_check, read_retained, strategy, write_leakage_csv,
    FilterReport, StrictStrategy,
};
use identikit::llm::{expand_batch, expander, LlmConfig};
use identikit::similarity::{calibrate_threshold, FalseMatchGraph};
use identikit::synthetic::{generate_clusters, ClusterSpec};
use identikit::Result;

use crate::summary::RunContext;
use crate::{
    CalibrateArgs, EvalKlArgs, EvalScoresArgs, EvalShiftArgs, ExportProjArgs, FilterArgs,
    FilterStrictArgs, GraphArgs, LeakageArgs, PfmArgs, PromptsArgs, SampleArgs, SynthArgs,
};

fn load_set(path: &Path) -> Result<EmbeddingSet> {
    load_embeddings(path, FileFormat::from_path(path))
}

fn write_json_pretty<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::json(path.display().to_string(), e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn sample(args: &SampleArgs, ctx: &mut RunContext) -> Result<()> {
    ctx.set_seed(args.seed);
    let config = AttributeConfig::load(&ctx.input(&args.config))?;
    for finding in validate_config(&config) {
        log::warn!("config: {finding}");
    }
    let profiles = sample_profiles(&config, args.count, args.seed)?;
    let unsatisfiable = profiles.iter().filter(|p| !p.unsatisfiable.is_empty()).count();
    if unsatisfiable > 0 {
        log::warn!("{unsatisfiable} profiles had classes with every attribute clash-excluded");
    }
    let out = ctx.output(&args.out)?;
    write_profiles_jsonl(&profiles, &out)?;
    println!("sampled {} profiles -> {}", profiles.len(), out.display());
    Ok(())
}

pub fn prompts(args: &PromptsArgs, ctx: &mut RunContext) -> Result<()> {
    let config = AttributeConfig::load(&ctx.input(&args.config))?;
    let mut profiles = read_profiles_jsonl(&ctx.input(&args.profiles))?;

    let template = match &args.template {
        Some(path) => {
            let path = ctx.input(path);
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            PromptTemplate::parse(&text)?
        }
        None => PromptTemplate::default_for(&config),
    };
    template.check_classes(&config)?;
    for profile in &mut profiles {
        profile.prompt = template.render(&profile.selections);
    }

    let llm_config = match &args.llm_config {
        Some(path) => LlmConfig::load(&ctx.input(path))?,
        None => LlmConfig::default(),
    };
    let expander = expander(&args.expander, &llm_config)?;
    log::info!("expanding {} prompts with {}", profiles.len(), expander.name());
    let expanded = expand_batch(expander.as_ref(), &profiles, llm_config.concurrency);
    let fallbacks = expanded.iter().filter(|e| e.used_fallback).count();
    for (profile, expanded) in profiles.iter_mut().zip(expanded) {
        profile.prompt = expanded.text;
    }
    if fallbacks > 0 {
        log::warn!("{fallbacks} of {} prompts fell back to the template text", profiles.len());
    }

    let out = ctx.output(&args.out)?;
    write_profiles_jsonl(&profiles, &out)?;
    println!(
        "assembled {} prompts ({} fallbacks) -> {}",
        profiles.len(),
        fallbacks,
        out.display()
    );
    Ok(())
}

pub fn calibrate(args: &CalibrateArgs, ctx: &mut RunContext) -> Result<()> {
    let (mated, nonmated) = read_scores_csv(&ctx.input(&args.scores))?;
    let scores = match args.kind.as_str() {
        "mated" => mated,
        _ => nonmated,
    };
    let calibration = calibrate_threshold(&scores, args.target)?;
    let out = ctx.output(&args.out)?;
    write_json_pretty(&calibration, &out)?;
    println!(
        "threshold {} (achieved fmr {} on {} scores) -> {}",
        calibration.threshold,
        calibration.achieved_fmr,
        calibration.impostor_count,
        out.display()
    );
    Ok(())
}

pub fn graph(args: &GraphArgs, ctx: &mut RunContext) -> Result<()> {
    let docs = load_set(&ctx.input(&args.embeddings))?;
    let graph = FalseMatchGraph::from_embeddings(&docs, args.threshold, args.block)?;
    let out = ctx.output(&args.out)?;
    graph.export_edge_csv(&out)?;
    let report = ctx.output(&args.report)?;
    write_json_pretty(
        &serde_json::json!({
            "threshold": graph.threshold(),
            "identities": graph.node_count(),
            "edges": graph.edge_count(),
            "dataset_fmr": graph.dataset_fmr(),
        }),
        &report,
    )?;
    println!(
        "{} identities, {} false-match edges, dataset fmr {} -> {}",
        graph.node_count(),
        graph.edge_count(),
        graph.dataset_fmr(),
        out.display()
    );
    Ok(())
}

/// Build the false-match graph from whichever source the filter args carry:
/// raw document embeddings, or a pre-scored edge list plus the id roster
/// (the roster keeps isolated identities in the denominator).
fn graph_from_source(
    embeddings: Option<&Path>,
    edges: Option<&Path>,
    ids: Option<&Path>,
    threshold: f64,
    block: usize,
    ctx: &mut RunContext,
) -> Result<FalseMatchGraph> {
    if let Some(path) = embeddings {
        let docs = load_set(&ctx.input(path))?;
        return FalseMatchGraph::from_embeddings(&docs, threshold, block);
    }
    let edges = edges.expect("clap enforces embeddings|edges");
    let ids = ids.expect("clap enforces --ids with --edges");
    let roster = read_retained(&ctx.input(ids))?;
    let named = FalseMatchGraph::read_edge_csv(&ctx.input(edges))?;
    FalseMatchGraph::from_named_edges(roster, threshold, named)
}

fn report_filter_outcome(report: &FilterReport, report_path: &Path, retained_path: &Path) {
    let removed = report.removed.len();
    let kept = report.retained.len();
    println!(
        "removed {removed} of {} identities, final fmr {} -> {} / {}",
        removed + kept,
        report.final_fmr(),
        report_path.display(),
        retained_path.display()
    );
}

pub fn filter(args: &FilterArgs, ctx: &mut RunContext) -> Result<()> {
    let graph = graph_from_source(
        args.embeddings.as_deref(),
        args.edges.as_deref(),
        args.ids.as_deref(),
        args.threshold,
        args.block,
        ctx,
    )?;
    let strategy = strategy(&args.strategy)?;
    log::info!("strategy {}: {}", strategy.name(), strategy.description());
    let report = strategy.run(&graph, args.target)?;
    let report_path = ctx.output(&args.report)?;
    report.save_json(&report_path)?;
    let retained_path = ctx.output(&args.retained)?;
    report.write_retained(&retained_path)?;
    report_filter_outcome(&report, &report_path, &retained_path);
    Ok(())
}

pub fn filter_strict(args: &FilterStrictArgs, ctx: &mut RunContext) -> Result<()> {
    let graph = graph_from_source(
        args.embeddings.as_deref(),
        args.edges.as_deref(),
        args.ids.as_deref(),
        args.threshold,
        args.block,
        ctx,
    )?;
    use identikit::filtering::FilterStrategy;
    let report = StrictStrategy.run(&graph, 0.0)?;
    let report_path = ctx.output(&args.report)?;
    report.save_json(&report_path)?;
    let retained_path = ctx.output(&args.retained)?;
    report.write_retained(&retained_path)?;
    report_filter_outcome(&report, &report_path, &retained_path);
    Ok(())
}

pub fn pfm(args: &PfmArgs, _ctx: &mut RunContext) -> Result<()> {
    let value = false_match_probability(args.fmr, args.n)?;
    println!("{value}");
    Ok(())
}

pub fn leakage(args: &LeakageArgs, ctx: &mut RunContext) -> Result<()> {
    let synthetic = load_set(&ctx.input(&args.synthetic))?;
    let training = load_set(&ctx.input(&args.training))?;
    let matches = leakage_check(&synthetic, &training, args.threshold)?;
    let out = ctx.output(&args.out)?;
    write_leakage_csv(&matches, &out)?;
    println!(
        "{} cross-set matches above {} -> {}",
        matches.len(),
        args.threshold,
        out.display()
    );
    Ok(())
}

pub fn eval_scores(args: &EvalScoresArgs, ctx: &mut RunContext) -> Result<()> {
    ctx.set_seed(args.seed);
    let docs = load_set(&ctx.input(&args.documents))?;
    let lives = load_set(&ctx.input(&args.lives))?;
    let sample = mated_nonmated_scores(&docs, &lives, args.impostors, args.seed)?;
    let out = ctx.output(&args.out)?;
    write_scores_csv(&sample, &out)?;
    println!(
        "{} mated / {} non-mated scores -> {}",
        sample.mated.len(),
        sample.nonmated.len(),
        out.display()
    );
    Ok(())
}

pub fn eval_kl(args: &EvalKlArgs, ctx: &mut RunContext) -> Result<()> {
    let pick = |pair: (Vec<f64>, Vec<f64>)| match args.kind.as_str() {
        "mated" => pair.0,
        _ => pair.1,
    };
    let scores_a = pick(read_scores_csv(&ctx.input(&args.scores_a))?);
    let scores_b = pick(read_scores_csv(&ctx.input(&args.scores_b))?);
    let hist_a = histogram(&scores_a, args.bins, args.range)?;
    let hist_b = histogram(&scores_b, args.bins, args.range)?;
    let kl_ab = kl_divergence(&hist_a, &hist_b, args.epsilon)?;
    let kl_ba = kl_divergence(&hist_b, &hist_a, args.epsilon)?;

    let out = ctx.output(&args.out)?;
    write_json_pretty(
        &serde_json::json!({
            "kind": args.kind,
            "bins": args.bins,
            "range": [args.range.0, args.range.1],
            "epsilon": args.epsilon,
            "count_a": scores_a.len(),
            "count_b": scores_b.len(),
            "kl_ab": kl_ab,
            "kl_ba": kl_ba,
        }),
        &out,
    )?;
    if let Some(path) = &args.hist_a {
        hist_a.save_json(&ctx.output(path)?)?;
    }
    if let Some(path) = &args.hist_b {
        hist_b.save_json(&ctx.output(path)?)?;
    }
    if let Some(path) = &args.svg {
        let label = |p: &Path| {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string())
        };
        let svg = histogram_svg(
            &[(&label(&args.scores_a), &hist_a), (&label(&args.scores_b), &hist_b)],
            &format!("{} score distributions", args.kind),
        );
        let path = ctx.output(path)?;
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    }
    println!("kl(a||b) {kl_ab}, kl(b||a) {kl_ba} -> {}", out.display());
    Ok(())
}

pub fn eval_shift(args: &EvalShiftArgs, ctx: &mut RunContext) -> Result<()> {
    let profiles = read_profiles_jsonl(&ctx.input(&args.profiles))?;
    let retained: BTreeSet<String> =
        read_retained(&ctx.input(&args.retained))?.into_iter().collect();
    let report = attribute_shift_report(&profiles, &retained)?;
    let json_path = ctx.output(&args.out_json)?;
    report.save_json(&json_path)?;
    let csv_path = ctx.output(&args.out_csv)?;
    write_shift_csv(&report, &csv_path)?;
    if let Some(path) = &args.svg {
        let svg = shift_svg(&report, "Attribute distribution shift");
        let path = ctx.output(path)?;
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    }
    println!(
        "{} of {} profiles retained, {} attribute classes -> {}",
        report.total_after,
        report.total_before,
        report.classes.len(),
        json_path.display()
    );
    Ok(())
}

pub fn export_proj(args: &ExportProjArgs, ctx: &mut RunContext) -> Result<()> {
    let mut loaded: Vec<(String, EmbeddingSet)> = Vec::with_capacity(args.sets.len());
    for (label, path) in &args.sets {
        loaded.push((label.clone(), load_set(&ctx.input(path))?));
    }
    let refs: Vec<(&str, &EmbeddingSet)> =
        loaded.iter().map(|(label, set)| (label.as_str(), set)).collect();
    let out = ctx.output(&args.out)?;
    export_for_projection(&refs, &out)?;
    let rows: usize = loaded.iter().map(|(_, set)| set.len()).sum();
    println!("{rows} embeddings from {} sets -> {}", loaded.len(), out.display());
    Ok(())
}

fn parse_role_counts(text: &str) -> Result<BTreeMap<Role, usize>> {
    let mut map = BTreeMap::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (role, count) = part.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("expected role=count in images list, got {part:?}"))
        })?;
        let role = Role::parse(role.trim())?;
        let count: usize = count.trim().parse().map_err(|_| {
            Error::InvalidArgument(format!("bad image count {count:?} for role {role}"))
        })?;
        if map.insert(role, count).is_some() {
            return Err(Error::InvalidArgument(format!(
                "role {role} listed twice in images list"
            )));
        }
    }
    if map.is_empty() {
        return Err(Error::InvalidArgument("images list is empty".into()));
    }
    Ok(map)
}

pub fn synth(args: &SynthArgs, ctx: &mut RunContext) -> Result<()> {
    let spec = match &args.spec {
        Some(path) => ClusterSpec::load(&ctx.input(path))?,
        None => ClusterSpec {
            n_identities: args.n_identities.expect("clap enforces --n-identities"),
            dim: args.dim.expect("clap enforces --dim"),
            intra_noise: args.intra_noise,
            images_per_identity: parse_role_counts(&args.images)?,
            seed: args.seed.expect("clap enforces --seed"),
            groups: None,
        },
    };
    ctx.set_seed(spec.seed);
    let dataset = generate_clusters(&spec)?;
    let paths = dataset.write_to_dir(ctx.output_dir())?;
    for path in &paths {
        ctx.record_output(path);
    }
    println!(
        "{} identities across {} roles -> {}",
        spec.n_identities,
        dataset.sets.len(),
        ctx.output_dir().display()
    );
    Ok(())
}
