use std::fs;
use std::path::{Path, PathBuf};

use napforge::featurize::{read_features, write_features, Featurizer};
use napforge::hdbscan::{fit, ClusterModel};
use napforge::ingest::{read_activations, read_metadata, write_activations, ActivationSet, MetadataTable};
use napforge::metric::pairwise_matrix;
use napforge::report::{export_labeled_features, ood_evaluate, summarize, sweep, OodReport, SweepGrid, SweepResult};
use napforge::synth::{generate, BlobCenter, SynthSpec};
use napforge::validity::{dbcv, DbcvReport};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Stage};
use crate::{files, DbcvArgs, ExportArgs, ModeArg, OodArgs, RunArgs, SweepArgs, SynthArgs};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).stage("write")?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::runtime("write", format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::runtime("write", format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::runtime("write", format!("{}: {e}", path.display())))
}

fn load_metadata(path: Option<&Path>, rows: usize) -> Result<MetadataTable, CliError> {
    match path {
        Some(p) => read_metadata(p, rows).stage("metadata"),
        None => Ok(MetadataTable::new(rows)),
    }
}

pub fn synth_spec(args: &SynthArgs) -> Result<SynthSpec, CliError> {
    if let Some(path) = &args.spec {
        let text = fs::read_to_string(path).stage("synth")?;
        return serde_json::from_str(&text)
            .map_err(|e| CliError::config("synth", format!("{}: {e}", path.display())));
    }
    let blob_flags = args.centers.is_some() || args.gap.is_some() || args.offset.is_some() || args.scale.is_some();
    let latent_flags = args.latent_lo.is_some() || args.latent_hi.is_some();
    let mut spec = match args.mode {
        ModeArg::Blobs => {
            if latent_flags {
                return Err(CliError::config(
                    "synth",
                    "--latent-lo/--latent-hi only apply to --mode manifold\n\nUsage: napforge synth --mode blobs --centers <K> --output <DIR>",
                ));
            }
            let (k, gap, offset, scale) = (
                args.centers.unwrap_or(2),
                args.gap.unwrap_or(10.0),
                args.offset.unwrap_or(0.0),
                args.scale.unwrap_or(1.0),
            );
            let centers = (0..k)
                .map(|b| BlobCenter::uniform(args.channels, offset + b as f64 * gap, scale))
                .collect();
            SynthSpec::blobs(args.samples, args.channels, args.spatial, centers, args.noise, args.seed)
        }
        ModeArg::Manifold => {
            if blob_flags {
                return Err(CliError::config(
                    "synth",
                    "--centers/--gap/--offset/--scale only apply to --mode blobs\n\nUsage: napforge synth --mode manifold [--latent-lo <LO>] [--latent-hi <HI>] --output <DIR>",
                ));
            }
            let range = [args.latent_lo.unwrap_or(-10.0), args.latent_hi.unwrap_or(25.0)];
            SynthSpec::manifold(args.samples, args.channels, args.spatial, range, args.noise, args.seed)
        }
    };
    if let Some(layer) = &args.layer {
        spec.layer_name = layer.clone();
    }
    Ok(spec)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = synth_spec(args)?;
    let (set, meta) = generate(&spec).stage("synth")?;
    create_dir(&args.output)?;
    write_activations(&set, args.output.join(files::ACTIVATIONS)).stage("write")?;
    meta.write_csv(args.output.join(files::METADATA)).stage("write")?;
    Ok(())
}

/// Config file first, then every flag that was given.
pub fn resolve_run_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut c = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &args.activations {
        c.activations = Some(v.clone());
    }
    if let Some(v) = &args.metadata {
        c.metadata = Some(v.clone());
    }
    if let Some(v) = &args.output {
        c.output = Some(v.clone());
    }
    if let Some(v) = args.pipeline {
        c.pipeline = v;
    }
    if let Some(v) = args.metric {
        c.metric = Some(v);
    }
    if let Some(v) = args.min_cluster_size {
        c.hdbscan.min_cluster_size = v;
    }
    if let Some(v) = args.min_samples {
        c.hdbscan.min_samples = Some(v);
    }
    if let Some(v) = args.selection {
        c.hdbscan.selection = v;
    }
    if let Some(v) = args.mass_percent {
        c.kde.mass_percent = v;
    }
    if let Some(v) = args.grid_points {
        c.kde.grid_points = v;
    }
    if let Some(v) = args.grid_rule {
        c.kde.grid_rule = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if args.dbcv {
        c.dbcv = true;
    }
    c.resolve()
}

/// What a run produced, besides its files.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub model: ClusterModel,
    pub summary: String,
    pub dbcv: Option<DbcvReport>,
}

fn labels_csv(model: &ClusterModel) -> String {
    let mut out = String::from("sample_index,label,probability\n");
    for (i, (l, p)) in model.labels_i64().iter().zip(&model.probabilities).enumerate() {
        out.push_str(&format!("{i},{l},{p}\n"));
    }
    out
}

pub fn cmd_run(args: &RunArgs) -> Result<RunOutcome, CliError> {
    let config = resolve_run_config(args)?;
    let dir = config
        .output
        .clone()
        .ok_or_else(|| CliError::config("config", "no output directory given"))?;
    let set = read_activations(config.activations.as_ref().expect("resolved")).stage("ingest")?;
    let meta = load_metadata(config.metadata.as_deref(), set.n_samples())?;

    let (_, features) = Featurizer::fit(&set, config.pipeline, &config.kde).stage("featurize")?;
    let metric = config.metric();
    let distances = pairwise_matrix(&features, metric).stage("distance")?;
    let mut model = fit(&distances, &config.hdbscan).stage("cluster")?;
    model.provenance = Some(features.provenance().clone());
    let summary = summarize(&model, &meta).stage("summarize")?.to_text();
    let dbcv_report = if config.dbcv && model.n_clusters() >= 2 {
        Some(dbcv(&features, &model.labels, metric).stage("dbcv")?)
    } else {
        None
    };

    create_dir(&dir)?;
    write_json(&dir.join(files::CONFIG), &config.echo())?;
    write_json(&dir.join(files::MODEL), &model)?;
    write_text(&dir.join(files::LABELS), &labels_csv(&model))?;
    write_text(&dir.join(files::SUMMARY), &summary)?;
    write_features(&features, dir.join(files::FEATURES)).stage("write")?;
    if let Some(report) = &dbcv_report {
        write_json(&dir.join(files::DBCV), report)?;
        write_text(&dir.join(files::DBCV_TEXT), &report.to_text())?;
    }
    Ok(RunOutcome {
        dir,
        model,
        summary,
        dbcv: dbcv_report,
    })
}

fn load_model(run: &Path) -> Result<ClusterModel, CliError> {
    let path = run.join(files::MODEL);
    let text = fs::read_to_string(&path).map_err(|e| CliError::runtime("load", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::data("load", format!("{}: {e}", path.display())))
}

fn transform(featurizer: &Featurizer, path: &Path) -> Result<napforge::FeatureMatrix, CliError> {
    let set: ActivationSet = read_activations(path).stage("ingest")?;
    featurizer.transform(&set).stage("featurize")
}

pub fn cmd_ood(args: &OodArgs) -> Result<OodReport, CliError> {
    let model = load_model(&args.run)?;
    let provenance = model
        .provenance
        .clone()
        .ok_or_else(|| CliError::data("ood", "model records no feature provenance"))?;
    let training = read_features(args.run.join(files::FEATURES)).stage("load")?;
    let featurizer = Featurizer::from_provenance(provenance);
    let id = transform(&featurizer, &args.id)?;
    let ood = transform(&featurizer, &args.ood)?;
    let report = ood_evaluate(&model, &training, &id, &ood).stage("ood")?;

    let out = args.output.clone().unwrap_or_else(|| args.run.clone());
    create_dir(&out)?;
    write_json(&out.join(files::OOD), &report)?;
    OodReport::write_table(&report.id, out.join(files::OOD_ID)).stage("write")?;
    OodReport::write_table(&report.ood, out.join(files::OOD_OOD)).stage("write")?;
    Ok(report)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepResult, CliError> {
    let config = resolve_run_config(&args.base)?;
    let dir = config
        .output
        .clone()
        .ok_or_else(|| CliError::config("config", "no output directory given"))?;
    let set = read_activations(config.activations.as_ref().expect("resolved")).stage("ingest")?;
    let meta = load_metadata(config.metadata.as_deref(), set.n_samples())?;
    let pipelines = if args.pipelines.is_empty() {
        vec![config.pipeline]
    } else {
        args.pipelines.clone()
    };
    for &p in &pipelines {
        RunConfig {
            pipeline: p,
            metric: args.base.metric,
            ..config.clone()
        }
        .resolve()?;
    }
    if let Some(&bad) = args.min_cluster_sizes.iter().find(|&&m| m < 2) {
        return Err(CliError::config("config", format!("min_cluster_size must be at least 2, got {bad}")));
    }
    let grid = SweepGrid {
        pipelines,
        metric: args.base.metric,
        selections: args.selections.clone(),
        min_cluster_sizes: args.min_cluster_sizes.clone(),
        sizes: args.sizes.clone(),
        min_samples: config.hdbscan.min_samples,
        kde: config.kde,
        seed: config.seed,
        with_dbcv: config.dbcv,
    };
    let result = sweep(&set, &meta, &grid).stage("sweep")?;
    create_dir(&dir)?;
    write_json(&dir.join(files::CONFIG), &config.echo())?;
    result.write_csv(dir.join(files::SWEEP)).stage("write")?;
    Ok(result)
}

pub fn cmd_dbcv(args: &DbcvArgs) -> Result<DbcvReport, CliError> {
    let model = load_model(&args.run)?;
    let features = read_features(args.run.join(files::FEATURES)).stage("load")?;
    let report = dbcv(&features, &model.labels, model.metric).stage("dbcv")?;
    let out = args.output.clone().unwrap_or_else(|| args.run.clone());
    create_dir(&out)?;
    write_json(&out.join(files::DBCV), &report)?;
    write_text(&out.join(files::DBCV_TEXT), &report.to_text())?;
    Ok(report)
}

pub fn cmd_export(args: &ExportArgs) -> Result<(), CliError> {
    let model = load_model(&args.run)?;
    let features = read_features(args.run.join(files::FEATURES)).stage("load")?;
    let metadata = match &args.metadata {
        Some(p) => Some(p.clone()),
        None => {
            let config_path = args.run.join(files::CONFIG);
            if config_path.exists() {
                RunConfig::load(&config_path)?.metadata
            } else {
                None
            }
        }
    };
    let meta = load_metadata(metadata.as_deref(), model.n_samples)?;
    let out = args.output.clone().unwrap_or_else(|| args.run.join(files::EXPORT));
    export_labeled_features(&model, &features, &meta, out).stage("export")
}
