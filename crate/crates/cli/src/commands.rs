use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use shine_core::interpret::{
    correlation_tsv, enrichment_report, hyperedge_correlation, report_tsv, InterpretError,
};
use shine_core::io::{
    load_checkpoint, load_split, load_subgraphs, parse_gmt, save_checkpoint, stratified_split,
    EmptyPolicy, LabelMode, MetricsDocument, SubgraphTable,
};
use shine_core::synthetic::{generate, SyntheticData, SyntheticError, SyntheticSpec};
use shine_core::train::{binarize, evaluate, grid_search, Grid, GridResult};
use shine_core::{
    Checkpoint, Dataset, GeneSetCatalog, GraphContext, ModelError, Split, SubgraphBatch,
    TrainConfig, TrainError, TrainReport,
};

use crate::manifest::{FileDigest, RunManifest};
use crate::{
    CliError, DataArgs, EvaluateArgs, GridArgs, InterpretArgs, PredictArgs, SyntheticArgs,
    TrainArgs,
};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const METRICS_FILE: &str = "metrics.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const GRID_FILE: &str = "grid.json";
pub const ENRICHMENT_FILE: &str = "enrichment.tsv";
pub const CORRELATION_FILE: &str = "correlation.tsv";
pub const GMT_FILE: &str = "pathways.gmt";
pub const SUBGRAPHS_FILE: &str = "subgraphs.tsv";
pub const SPLIT_FILE: &str = "split.tsv";

fn input(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| input(path, format!("cannot read: {e}")))
}

fn read_text(path: &Path) -> Result<(String, Vec<u8>), CliError> {
    let bytes = read_bytes(path)?;
    let text =
        String::from_utf8(bytes.clone()).map_err(|e| input(path, format!("not UTF-8: {e}")))?;
    Ok((text, bytes))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<FileDigest, CliError> {
    std::fs::write(path, contents).map_err(|e| input(path, format!("cannot write: {e}")))?;
    let role = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(FileDigest::of(&role, path, contents))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| input(dir, format!("cannot create directory: {e}")))
}

fn model_err(e: ModelError) -> CliError {
    match e {
        ModelError::Kernel(k) => CliError::Internal(k.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

fn train_err(e: TrainError) -> CliError {
    match e {
        TrainError::NumericalDivergence(m) => {
            CliError::Numerical(format!("numerical divergence: {m}"))
        }
        TrainError::Model(m) => model_err(m),
        TrainError::Shape(m) => CliError::Internal(format!("shape mismatch: {m}")),
        other => CliError::Input(other.to_string()),
    }
}

fn out_err(stream: std::io::Error) -> CliError {
    CliError::Internal(format!("cannot write output: {stream}"))
}

fn report_table(path: &Path, table: &SubgraphTable) {
    if table.dropped_genes > 0 {
        warn!(
            "{}: {} member genes are not in the catalog and were dropped",
            path.display(),
            table.dropped_genes
        );
    }
}

struct TrainingData {
    catalog: GeneSetCatalog,
    dataset: Dataset,
    config: TrainConfig,
    inputs: Vec<FileDigest>,
}

fn load_training_data(a: &DataArgs) -> Result<TrainingData, CliError> {
    let mut inputs = Vec::new();
    let (gmt, bytes) = read_text(&a.gmt)?;
    inputs.push(FileDigest::of("gmt", &a.gmt, &bytes));
    let catalog = parse_gmt(&gmt).map_err(|e| input(&a.gmt, e))?;

    let mut config = match &a.config {
        Some(p) => {
            let (text, bytes) = read_text(p)?;
            inputs.push(FileDigest::of("config", p, &bytes));
            TrainConfig::from_toml_str(&text).map_err(|e| input(p, e))?
        }
        None => TrainConfig::default(),
    };
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(m) = a.mode {
        config.mode = m;
    }
    config.validate().map_err(train_err)?;

    let (text, bytes) = read_text(&a.subgraphs)?;
    inputs.push(FileDigest::of("subgraphs", &a.subgraphs, &bytes));
    let table = load_subgraphs(
        &text,
        &catalog,
        None,
        LabelMode::Required,
        EmptyPolicy::Reject,
    )
    .map_err(|e| input(&a.subgraphs, e))?;
    report_table(&a.subgraphs, &table);

    let dataset = match (&a.split, a.split_ratios) {
        (Some(p), _) => {
            let (text, bytes) = read_text(p)?;
            inputs.push(FileDigest::of("split", p, &bytes));
            let splits = load_split(&text).map_err(|e| input(p, e))?;
            let known: HashSet<&str> = table.ids.iter().map(String::as_str).collect();
            let stray = splits
                .keys()
                .filter(|k| !known.contains(k.as_str()))
                .count();
            if stray > 0 {
                warn!(
                    "{}: {stray} subjects are not in {}",
                    p.display(),
                    a.subgraphs.display()
                );
            }
            let d = table.into_dataset(&splits);
            let unassigned = d.splits.iter().filter(|s| s.is_none()).count();
            if unassigned > 0 {
                warn!(
                    "{}: {unassigned} subjects have no split and are ignored",
                    p.display()
                );
            }
            d
        }
        (None, Some(r)) => {
            let (splits, warnings) = stratified_split(&table.labels, r, config.seed)
                .map_err(|e| CliError::Input(e.to_string()))?;
            for w in warnings {
                warn!("{w}");
            }
            table.into_dataset_with(splits.into_iter().map(Some).collect())
        }
        (None, None) => {
            return Err(CliError::Input(
                "either --split or --split-ratios is required".into(),
            ))
        }
    };
    Ok(TrainingData {
        catalog,
        dataset,
        config,
        inputs,
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainReport,
    pub checkpoint: PathBuf,
    pub metrics: PathBuf,
    pub manifest: PathBuf,
}

/// Trains on the given files and writes checkpoint, metrics and manifest into
/// `--out`. The manifest is written before training and rewritten at the end,
/// including after a failed run.
pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<TrainOutcome, CliError> {
    let data = load_training_data(&a.data)?;
    create_dir(&a.out)?;
    let manifest_path = a.out.join(MANIFEST_FILE);
    let mut manifest = RunManifest::begin("train", &data.config, &a.out, data.inputs.clone());
    manifest.write(&manifest_path)?;

    let result = run_training(&data, &a.out);
    match &result {
        Ok((_, outputs)) => manifest.finish(Ok(outputs.clone())),
        Err(e) => manifest.finish(Err(e)),
    }
    manifest.write(&manifest_path)?;
    let (report, _) = result?;

    let m = &report.metrics;
    writeln!(
        out,
        "epochs_run\t{}\nbest_epoch\t{}\ntrain_micro_f1\t{}\nval_micro_f1\t{}",
        report.epochs_run, report.best_epoch, m.train.micro_f1, m.val.micro_f1
    )
    .map_err(out_err)?;
    if let Some(t) = &m.test {
        writeln!(out, "test_micro_f1\t{}", t.micro_f1).map_err(out_err)?;
    }
    Ok(TrainOutcome {
        report,
        checkpoint: a.out.join(CHECKPOINT_FILE),
        metrics: a.out.join(METRICS_FILE),
        manifest: manifest_path,
    })
}

fn run_training(
    data: &TrainingData,
    dir: &Path,
) -> Result<(TrainReport, Vec<FileDigest>), CliError> {
    let h = data
        .catalog
        .hypergraph()
        .map_err(|e| CliError::Input(e.to_string()))?;
    info!(
        "training on {} subjects, {} genes, {} gene sets",
        data.dataset.len(),
        h.num_nodes(),
        h.num_edges()
    );
    let (params, report) = shine_core::train(&data.dataset, &h, &data.config).map_err(train_err)?;
    let ck = Checkpoint {
        params,
        config: data.config.clone(),
        classes: data.dataset.classes.clone(),
        catalog: data.catalog.clone(),
    };
    let ck_path = dir.join(CHECKPOINT_FILE);
    save_checkpoint(&ck, &ck_path).map_err(|e| input(&ck_path, e))?;
    let ck_digest = FileDigest::of(CHECKPOINT_FILE, &ck_path, &read_bytes(&ck_path)?);
    let doc = MetricsDocument::new(&report, &data.config, &data.dataset.classes);
    let metrics = write_file(&dir.join(METRICS_FILE), doc.to_json().as_bytes())?;
    Ok((report, vec![ck_digest, metrics]))
}

fn open_checkpoint(path: &Path) -> Result<(Checkpoint, GraphContext<f32>), CliError> {
    let ck = load_checkpoint(path).map_err(|e| input(path, e))?;
    let h = ck.catalog.hypergraph().map_err(|e| input(path, e))?;
    Ok((ck, GraphContext::new(h)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluateOutcome {
    pub subjects: usize,
    pub micro_f1: f64,
    pub objective: f64,
}

/// Micro-F1 of a checkpoint on one named split; parameters are not touched.
pub fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<EvaluateOutcome, CliError> {
    let split: Split = a
        .split_name
        .parse()
        .map_err(|e| CliError::Input(format!("--split-name: {e}")))?;
    let (ck, ctx) = open_checkpoint(&a.checkpoint)?;
    let (text, _) = read_text(&a.subgraphs)?;
    let table = load_subgraphs(
        &text,
        &ck.catalog,
        Some(&ck.classes),
        LabelMode::Optional,
        EmptyPolicy::Reject,
    )
    .map_err(|e| input(&a.subgraphs, e))?;
    report_table(&a.subgraphs, &table);
    let (split_text, _) = read_text(&a.split)?;
    let splits = load_split(&split_text).map_err(|e| input(&a.split, e))?;
    let dataset = table.into_dataset(&splits);
    let idx = dataset.indices(split);
    if idx.is_empty() {
        return Err(input(
            &a.split,
            format!("split {split} has no subjects in {}", a.subgraphs.display()),
        ));
    }
    if let Some(&i) = idx.iter().find(|&&i| dataset.labels[i].is_empty()) {
        return Err(input(
            &a.subgraphs,
            format!("subject {} in split {split} has no label", dataset.ids[i]),
        ));
    }
    let ev = evaluate(
        &ck.params,
        &ctx,
        &dataset,
        &[&idx],
        ck.config.reg_weight,
        ck.config.threshold,
    )
    .map_err(train_err)?[0];
    writeln!(
        out,
        "split\t{split}\nsubjects\t{}\nmicro_f1\t{}\nobjective\t{}",
        idx.len(),
        ev.micro_f1,
        ev.objective
    )
    .map_err(out_err)?;
    Ok(EvaluateOutcome {
        subjects: idx.len(),
        micro_f1: ev.micro_f1,
        objective: ev.objective,
    })
}

/// Scores every subject. Subjects without any catalog gene are listed in a
/// trailing `# excluded` section rather than failing the command.
pub fn cmd_predict(a: &PredictArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (ck, ctx) = open_checkpoint(&a.checkpoint)?;
    let (text, _) = read_text(&a.subgraphs)?;
    let table = load_subgraphs(
        &text,
        &ck.catalog,
        Some(&ck.classes),
        LabelMode::Ignore,
        EmptyPolicy::Exclude,
    )
    .map_err(|e| input(&a.subgraphs, e))?;
    report_table(&a.subgraphs, &table);
    for id in &table.excluded {
        warn!(
            "{}: subject {id} has no genes in the catalog and was excluded",
            a.subgraphs.display()
        );
    }

    let mut tsv = String::from("subject");
    for c in &ck.classes {
        tsv.push('\t');
        tsv.push_str(c);
    }
    tsv.push_str("\tpredicted\n");
    if !table.subgraphs.is_empty() {
        let batch = SubgraphBatch::<f32>::new(&table.subgraphs);
        let z = ck.params.predict(&ctx, &batch).map_err(model_err)?;
        let decided = binarize(&z, ck.config.mode, ck.config.threshold);
        for (r, id) in table.ids.iter().enumerate() {
            tsv.push_str(id);
            for v in z.row_slice(r) {
                tsv.push_str(&format!("\t{v}"));
            }
            let predicted: Vec<&str> = decided[r]
                .iter()
                .zip(&ck.classes)
                .filter(|(d, _)| **d)
                .map(|(_, c)| c.as_str())
                .collect();
            tsv.push('\t');
            tsv.push_str(&predicted.join(","));
            tsv.push('\n');
        }
    }
    if !table.excluded.is_empty() {
        tsv.push_str("# excluded: no genes in the catalog\n");
        for id in &table.excluded {
            tsv.push_str(&format!("# {id}\n"));
        }
    }
    match &a.out {
        Some(p) => {
            write_file(p, tsv.as_bytes())?;
        }
        None => out.write_all(tsv.as_bytes()).map_err(out_err)?,
    }
    Ok(())
}

/// Writes per-class hyperedge rankings and the hyperedge correlation matrix.
pub fn cmd_interpret(a: &InterpretArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (ck, ctx) = open_checkpoint(&a.checkpoint)?;
    let (text, _) = read_text(&a.subgraphs)?;
    let table = load_subgraphs(
        &text,
        &ck.catalog,
        Some(&ck.classes),
        LabelMode::Optional,
        EmptyPolicy::Exclude,
    )
    .map_err(|e| input(&a.subgraphs, e))?;
    report_table(&a.subgraphs, &table);
    let n = table.ids.len();
    let dataset = table.into_dataset_with(vec![None; n]);
    let names: Vec<String> = ck
        .catalog
        .set_names()
        .iter()
        .map(|s| s.to_string())
        .collect();
    let h = ctx.hypergraph();
    let report =
        enrichment_report(&ck.params, h, &dataset, a.top_k, &names).map_err(|e| match e {
            InterpretError::Model(m) => model_err(m),
            other => CliError::Input(other.to_string()),
        })?;
    for c in report.classes.iter().filter(|c| c.subjects == 0) {
        warn!(
            "class {} has no subjects in {}",
            c.class,
            a.subgraphs.display()
        );
    }
    let corr = hyperedge_correlation(&ck.params, h).map_err(model_err)?;
    create_dir(&a.out)?;
    let e = write_file(&a.out.join(ENRICHMENT_FILE), report_tsv(&report).as_bytes())?;
    let c = write_file(
        &a.out.join(CORRELATION_FILE),
        correlation_tsv(&corr, &names).as_bytes(),
    )?;
    writeln!(out, "{}\n{}", e.path.display(), c.path.display()).map_err(out_err)
}

/// Generates a planted-pathway dataset and writes GMT, subject and split files.
pub fn cmd_make_synthetic(
    a: &SyntheticArgs,
    out: &mut dyn Write,
) -> Result<SyntheticData, CliError> {
    let spec = SyntheticSpec {
        nodes: a.nodes,
        edges: a.edges,
        classes: a.classes,
        subjects: a.subjects,
        noise: a.noise,
        seed: a.seed,
        ..Default::default()
    };
    let data = generate(&spec).map_err(|e| match e {
        SyntheticError::Infeasible(m) => {
            CliError::Input(format!("infeasible synthetic profile: {m}"))
        }
        SyntheticError::Io(e) => CliError::Internal(e.to_string()),
    })?;
    create_dir(&a.out)?;
    for (name, text) in [
        (GMT_FILE, data.gmt()),
        (SUBGRAPHS_FILE, data.subgraphs_tsv()),
        (SPLIT_FILE, data.split_tsv()),
    ] {
        let d = write_file(&a.out.join(name), text.as_bytes())?;
        writeln!(out, "{}", d.path.display()).map_err(out_err)?;
    }
    Ok(data)
}

/// Trains every grid point under every seed and writes the summary to
/// `grid.json`.
pub fn cmd_grid_search(a: &GridArgs, out: &mut dyn Write) -> Result<GridResult, CliError> {
    if a.jobs == 0 {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    let mut data = load_training_data(&a.data)?;
    let grid = match &a.grid {
        Some(p) => {
            let (text, bytes) = read_text(p)?;
            data.inputs.push(FileDigest::of("grid", p, &bytes));
            toml::from_str::<Grid>(&text).map_err(|e| input(p, e))?
        }
        None => Grid::default(),
    };
    create_dir(&a.out)?;
    let manifest_path = a.out.join(MANIFEST_FILE);
    let mut manifest = RunManifest::begin("grid-search", &data.config, &a.out, data.inputs.clone());
    manifest.write(&manifest_path)?;

    let result = data
        .catalog
        .hypergraph()
        .map_err(|e| CliError::Input(e.to_string()))
        .and_then(|h| {
            grid_search(&data.dataset, &h, &data.config, &grid, &a.seeds, a.jobs).map_err(train_err)
        })
        .and_then(|r| {
            let mut json =
                serde_json::to_string_pretty(&r).map_err(|e| CliError::Internal(e.to_string()))?;
            json.push('\n');
            let d = write_file(&a.out.join(GRID_FILE), json.as_bytes())?;
            Ok((r, d))
        });
    match &result {
        Ok((_, d)) => manifest.finish(Ok(vec![d.clone()])),
        Err(e) => manifest.finish(Err(e)),
    }
    manifest.write(&manifest_path)?;
    let (r, _) = result?;
    let best = r.best_point();
    writeln!(
        out,
        "points\t{}\nbest\t{}\nmean_val_micro_f1\t{}\nstd\t{}",
        r.points.len(),
        r.best,
        best.mean,
        best.std
    )
    .map_err(out_err)?;
    Ok(r)
}
