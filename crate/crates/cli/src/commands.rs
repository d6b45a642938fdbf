use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use boltzworld::beliefs::{export_beliefs, sample_profiles};
use boltzworld::checkpoint::{schema_difference, Checkpoint, Provenance};
use boltzworld::dbm::{finetune_pcd, pretrain_layerwise, score_rows, EntropyTerm};
use boltzworld::intervention::{
    compare_grid_rows, parse_delimited, render_table, run_experiment_grid, ConsistencyThresholds, DeltaOptions,
    GridSpec, InterventionSpec, Stratum,
};
use boltzworld::rng::derive_seed;
use boltzworld::schema::{
    generate_synthetic_market, ingest, split, write_dataset, AttributeSchema, Dataset, DatasetFormat, IngestOptions,
    Split,
};
use boltzworld::MeanFieldConfig;
use serde::Deserialize;

use crate::args::{BeliefFormat, Cli, Command, Common, SplitArg};
use crate::config::{default_layers, LoadedConfig, SamplingConfig};
use crate::error::{CliError, CliResult};
use crate::log::RunLog;

/// Files written by a command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Synth(c) => cmd_synth(&c),
        Command::Pretrain(c) => cmd_pretrain(&c),
        Command::Finetune(c) => cmd_finetune(&c),
        Command::Score(c) => cmd_score(&c),
        Command::Intervene { common, grid } => cmd_intervene(&common, &grid),
        Command::Sample { common, count } => cmd_sample(&common, count),
        Command::ExportBeliefs { common, format } => cmd_export_beliefs(&common, format),
        Command::Report { input, compare, out } => cmd_report(&input, compare.as_deref(), out.as_deref()),
    }
}

struct Context {
    config: Option<LoadedConfig>,
    out_dir: PathBuf,
    strict: bool,
}

impl Context {
    fn new(common: &Common) -> CliResult<Self> {
        let config = match &common.config {
            Some(p) => {
                let mut c = LoadedConfig::load(p)?;
                if let Some(seed) = common.seed {
                    c.config.seed = seed;
                }
                c.check_paths()?;
                Some(c)
            }
            None => None,
        };
        let out_dir = match (&common.out, &config) {
            (Some(o), _) => o.clone(),
            (None, Some(c)) => c.resolve(&c.config.output_dir),
            (None, None) => PathBuf::from("."),
        };
        fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
        Ok(Self {
            config,
            out_dir,
            strict: common.strict,
        })
    }

    fn config(&self) -> CliResult<&LoadedConfig> {
        self.config
            .as_ref()
            .ok_or_else(|| CliError::Validation("this command needs --config".into()))
    }

    fn mean_field(&self) -> MeanFieldConfig {
        self.config
            .as_ref()
            .map(|c| c.config.mean_field.clone())
            .unwrap_or_default()
    }

    fn sampling(&self) -> SamplingConfig {
        self.config.as_ref().map(|c| c.config.sampling).unwrap_or_default()
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn config_schema(&self) -> CliResult<Arc<AttributeSchema>> {
        let lc = self.config()?;
        if let Some(p) = &lc.config.schema {
            return Ok(Arc::new(AttributeSchema::load(lc.resolve(p))?));
        }
        lc.config
            .builtin_schema()
            .map(Arc::new)
            .ok_or_else(|| CliError::Validation("config names no schema".into()))
    }

    /// `--dataset` if given, else the config's dataset or synthetic section.
    /// Split labels are assigned whenever the config defines a split.
    fn dataset(&self, explicit: Option<&Path>, schema: Arc<AttributeSchema>, log: &mut RunLog) -> CliResult<Dataset> {
        let from_file = |path: &Path, log: &mut RunLog| -> CliResult<Dataset> {
            let format = match path.extension().and_then(|e| e.to_str()) {
                Some("jsonl" | "json") => DatasetFormat::JsonLines,
                _ => DatasetFormat::Csv,
            };
            let outcome = ingest(path, format, Arc::clone(&schema), IngestOptions { strict: self.strict })?;
            for w in &outcome.warnings {
                log.record(&[("event", "warning".into()), ("message", w.clone())]);
            }
            for e in &outcome.row_errors {
                log.record(&[
                    ("event", "row_error".into()),
                    ("line", e.line.to_string()),
                    ("message", e.message.clone()),
                ]);
            }
            Ok(outcome.dataset)
        };
        let data = match (explicit, &self.config) {
            (Some(p), _) => from_file(p, log)?,
            (None, Some(lc)) => match (&lc.config.dataset, lc.config.synthetic_model()) {
                (Some(p), _) => from_file(&lc.resolve(p), log)?,
                (None, Some(model)) => {
                    generate_synthetic_market(Arc::clone(&schema), &model, lc.config.synthetic_seed())?
                }
                (None, None) => return Err(CliError::Validation("config defines no dataset".into())),
            },
            (None, None) => {
                return Err(CliError::Validation(
                    "no dataset given (use --dataset or --config)".into(),
                ))
            }
        };
        let data = match self
            .config
            .as_ref()
            .and_then(|c| c.config.split.map(|s| (s, c.config.split_seed())))
        {
            Some((s, seed)) => split(&data, (s.train, s.val, s.test), seed)?,
            None => data,
        };
        log.record(&[("event", "dataset".into()), ("records", data.len().to_string())]);
        Ok(data)
    }

    fn has_split(&self) -> bool {
        self.config.as_ref().is_some_and(|c| c.config.split.is_some())
    }
}

fn select(data: Dataset, which: SplitArg) -> Dataset {
    match which {
        SplitArg::All => data,
        SplitArg::Train => data.subset(Split::Train),
        SplitArg::Val => data.subset(Split::Val),
        SplitArg::Test => data.subset(Split::Test),
    }
}

fn write_file(path: &Path, bytes: &[u8], outcome: &mut Outcome) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    outcome.files.push(path.to_path_buf());
    Ok(())
}

fn load_checkpoint(path: Option<&Path>) -> CliResult<Checkpoint> {
    let path = path.ok_or_else(|| CliError::Validation("this command needs --checkpoint".into()))?;
    Ok(Checkpoint::load(path)?)
}

/// The records to evaluate against a checkpoint: from `--dataset` (read with
/// the checkpoint schema) or from the config, whose schema must match.
fn eval_dataset(ctx: &Context, common: &Common, ck: &Checkpoint, log: &mut RunLog) -> CliResult<Dataset> {
    let schema = match (&common.dataset, &ctx.config) {
        (None, Some(_)) => {
            let s = ctx.config_schema()?;
            if let Some(diff) = schema_difference(&ck.schema, &s) {
                return Err(CliError::Incompatible(format!(
                    "config schema does not match checkpoint: {diff}"
                )));
            }
            s
        }
        _ => Arc::new(ck.schema.clone()),
    };
    let data = ctx.dataset(common.dataset.as_deref(), schema, log)?;
    Ok(select(data, common.split.unwrap_or(SplitArg::All)))
}

fn training_data(ctx: &Context, common: &Common, schema: Arc<AttributeSchema>, log: &mut RunLog) -> CliResult<Dataset> {
    let data = ctx.dataset(common.dataset.as_deref(), schema, log)?;
    let default = if ctx.has_split() {
        SplitArg::Train
    } else {
        SplitArg::All
    };
    let data = select(data, common.split.unwrap_or(default));
    if data.is_empty() {
        return Err(CliError::Validation("no training records".into()));
    }
    Ok(data)
}

pub fn cmd_synth(common: &Common) -> CliResult<Outcome> {
    let ctx = Context::new(common)?;
    let lc = ctx.config()?;
    let model = lc
        .config
        .synthetic_model()
        .ok_or_else(|| CliError::Validation("config has no [synthetic] section".into()))?;
    let data = generate_synthetic_market(ctx.config_schema()?, &model, lc.config.synthetic_seed())?;
    let mut buf = Vec::new();
    write_dataset(&data, &mut buf)?;
    let mut outcome = Outcome::default();
    write_file(&ctx.out("dataset.csv"), &buf, &mut outcome)?;
    let mut log = RunLog::new("synth");
    log.record(&[("event", "synth".into()), ("records", data.len().to_string())]);
    log.save(&ctx.out("synth.log"), &mut outcome.files)?;
    Ok(outcome)
}

pub fn cmd_pretrain(common: &Common) -> CliResult<Outcome> {
    let ctx = Context::new(common)?;
    let lc = ctx.config()?;
    let schema = ctx.config_schema()?;
    let mut log = RunLog::new("pretrain");
    let data = training_data(&ctx, common, Arc::clone(&schema), &mut log)?;
    let layers = lc
        .config
        .layers
        .clone()
        .unwrap_or_else(|| default_layers(schema.visible_dim()));
    let cd = lc.config.pretrain_cd();
    log.record(&[
        ("event", "config".into()),
        ("layers", join(&layers)),
        ("epochs", cd.epochs.to_string()),
        ("config_hash", lc.config.hash()),
    ]);
    let (params, layer_logs) = pretrain_layerwise(data.visible_matrix().view(), &layers, &cd)?;
    for l in &layer_logs {
        for e in &l.epochs {
            log.record(&[
                ("layer", l.layer.to_string()),
                ("epoch", e.epoch.to_string()),
                ("reconstruction_error", e.reconstruction_error.to_string()),
            ]);
        }
    }
    let provenance = Provenance {
        config_hash: lc.config.hash(),
        pretrain_epochs: cd.epochs,
        finetune_epochs: 0,
    };
    let ck = Checkpoint::new((*schema).clone(), params, provenance)?;
    let mut outcome = Outcome::default();
    write_file(&ctx.out("pretrain.ckpt"), &ck.to_bytes(), &mut outcome)?;
    log.save(&ctx.out("pretrain.log"), &mut outcome.files)?;
    Ok(outcome)
}

pub fn cmd_finetune(common: &Common) -> CliResult<Outcome> {
    let ctx = Context::new(common)?;
    let lc = ctx.config()?;
    let path = common.checkpoint.clone().unwrap_or_else(|| ctx.out("pretrain.ckpt"));
    let ck = Checkpoint::load(&path)?;
    let schema = ctx.config_schema()?;
    ck.ensure_schema(&schema)?;
    if let Some(layers) = &lc.config.layers {
        if *layers != ck.params.hidden_sizes() {
            return Err(CliError::Incompatible(format!(
                "config layers {} differ from checkpoint layers {}",
                join(layers),
                join(&ck.params.hidden_sizes())
            )));
        }
    }
    let mut log = RunLog::new("finetune");
    let data = training_data(&ctx, common, schema, &mut log)?;
    let pcd = lc.config.finetune_pcd();
    let mf = ctx.mean_field();
    log.record(&[
        ("event", "config".into()),
        ("epochs", pcd.epochs.to_string()),
        ("chains", pcd.chains().to_string()),
        ("config_hash", lc.config.hash()),
    ]);
    let result = finetune_pcd(&ck.params, data.visible_matrix().view(), &mf, &pcd)?;
    for e in &result.log {
        log.record(&[
            ("epoch", e.epoch.to_string()),
            ("mean_free_energy", e.mean_free_energy.to_string()),
            ("reconstruction_error", e.reconstruction_error.to_string()),
            ("weight_gradient_norm", e.weight_gradient_norm.to_string()),
        ]);
    }
    let provenance = Provenance {
        config_hash: lc.config.hash(),
        pretrain_epochs: ck.provenance.pretrain_epochs,
        finetune_epochs: ck.provenance.finetune_epochs + pcd.epochs,
    };
    let out = Checkpoint::new(ck.schema, result.params, provenance)?;
    let mut outcome = Outcome::default();
    write_file(&ctx.out("finetune.ckpt"), &out.to_bytes(), &mut outcome)?;
    log.save(&ctx.out("finetune.log"), &mut outcome.files)?;
    Ok(outcome)
}

pub fn cmd_score(common: &Common) -> CliResult<Outcome> {
    let ctx = Context::new(common)?;
    let ck = load_checkpoint(common.checkpoint.as_deref())?;
    let mut log = RunLog::new("score");
    let data = eval_dataset(&ctx, common, &ck, &mut log)?;
    let mf = ctx.mean_field();
    let scores = score_rows(data.visible_matrix().view(), &ck.params, &mf, EntropyTerm::Subtract)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "free_energy", "iterations", "converged"])
        .map_err(core_csv)?;
    let mut unconverged = 0;
    for (r, (f, state)) in data.records().iter().zip(&scores) {
        unconverged += usize::from(!state.converged);
        w.write_record([
            r.id.clone(),
            f.to_string(),
            state.iterations.to_string(),
            state.converged.to_string(),
        ])
        .map_err(core_csv)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Validation(e.to_string()))?;
    let mut outcome = Outcome::default();
    write_file(&ctx.out("scores.csv"), &bytes, &mut outcome)?;
    log.record(&[
        ("event", "score".into()),
        ("records", scores.len().to_string()),
        ("unconverged", unconverged.to_string()),
    ]);
    log.save(&ctx.out("score.log"), &mut outcome.files)?;
    Ok(outcome)
}

fn core_csv(e: csv::Error) -> CliError {
    CliError::Core(e.into())
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    #[serde(default)]
    options: DeltaOptions,
    #[serde(default)]
    intervention: Vec<InterventionSpec>,
    #[serde(default)]
    stratum: Vec<Stratum>,
}

/// Reads a grid TOML file: `[options]`, `[[intervention]]` and `[[stratum]]`.
pub fn load_grid(path: &Path) -> CliResult<(GridSpec, DeltaOptions)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: GridFile = toml::from_str(&text).map_err(|e| CliError::Validation(format!("grid: {e}")))?;
    if file.intervention.is_empty() {
        return Err(CliError::Validation("grid defines no [[intervention]]".into()));
    }
    let grid = GridSpec {
        interventions: file.intervention,
        strata: file.stratum,
    };
    Ok((grid, file.options))
}

pub fn cmd_intervene(common: &Common, grid_path: &Path) -> CliResult<Outcome> {
    let ctx = Context::new(common)?;
    let (grid, options) = load_grid(grid_path)?;
    let ck = load_checkpoint(common.checkpoint.as_deref())?;
    let mut log = RunLog::new("intervene");
    let data = eval_dataset(&ctx, common, &ck, &mut log)?;
    let invalid = |e: boltzworld::Error| CliError::Validation(format!("grid: {e}"));
    for spec in &grid.interventions {
        spec.validate(data.schema()).map_err(invalid)?;
    }
    for (g, c) in grid.strata.iter().flat_map(|s| &s.conditions) {
        data.schema().category_position(g, c).map_err(invalid)?;
    }
    let report = run_experiment_grid(&data, &grid, &ck.params, &ctx.mean_field(), &options)?;
    for row in report.rows() {
        let mut fields = vec![
            ("spec", row.intervention.clone()),
            ("stratum", row.stratum.clone()),
            ("n", row.n.to_string()),
        ];
        if let Some(note) = &row.note {
            fields.push(("issue", note.clone()));
        }
        log.record(&fields);
    }
    let mut outcome = Outcome::default();
    write_file(&ctx.out("grid.csv"), report.to_delimited().as_bytes(), &mut outcome)?;
    write_file(&ctx.out("grid.txt"), report.to_table().as_bytes(), &mut outcome)?;
    write_file(&ctx.out("grid_detail.csv"), report.to_detail().as_bytes(), &mut outcome)?;
    log.save(&ctx.out("intervene.log"), &mut outcome.files)?;
    Ok(outcome)
}

pub fn cmd_sample(common: &Common, count: usize) -> CliResult<Outcome> {
    let ctx = Context::new(common)?;
    let ck = load_checkpoint(common.checkpoint.as_deref())?;
    let seed = match &ctx.config {
        Some(c) => c.config.sample_seed(),
        None => derive_seed(common.seed.unwrap_or(0), "sample"),
    };
    let s = ctx.sampling();
    let drawn = sample_profiles(
        &ck.params,
        &ck.schema,
        count,
        s.burn_in,
        s.thin,
        s.max_tries_per_profile,
        seed,
    )?;
    let data = Dataset::from_profiles(Arc::new(ck.schema.clone()), drawn.profiles)?;
    let mut buf = Vec::new();
    write_dataset(&data, &mut buf)?;
    let mut outcome = Outcome::default();
    write_file(&ctx.out("samples.csv"), &buf, &mut outcome)?;
    let mut log = RunLog::new("sample");
    log.record(&[
        ("event", "sample".into()),
        ("requested", count.to_string()),
        ("produced", data.len().to_string()),
        ("resampled", drawn.resampled.to_string()),
        ("shortfall", drawn.shortfall.to_string()),
        ("seed", seed.to_string()),
    ]);
    log.save(&ctx.out("sample.log"), &mut outcome.files)?;
    Ok(outcome)
}

pub fn cmd_export_beliefs(common: &Common, format: BeliefFormat) -> CliResult<Outcome> {
    let ctx = Context::new(common)?;
    let ck = load_checkpoint(common.checkpoint.as_deref())?;
    let mut log = RunLog::new("export-beliefs");
    let data = eval_dataset(&ctx, common, &ck, &mut log)?;
    let table = export_beliefs(&data, &ck.params, &ctx.mean_field())?;
    let (name, bytes) = match format {
        BeliefFormat::Text => {
            let mut b = Vec::new();
            table.write_text(&mut b)?;
            ("beliefs.txt", b)
        }
        BeliefFormat::Binary => {
            let mut b = Vec::new();
            table.write_binary(BufWriter::new(&mut b))?;
            ("beliefs.bin", b)
        }
    };
    let mut outcome = Outcome::default();
    write_file(&ctx.out(name), &bytes, &mut outcome)?;
    log.record(&[
        ("event", "export".into()),
        ("records", table.len().to_string()),
        ("layers", join(&table.layer_sizes)),
    ]);
    log.save(&ctx.out("export-beliefs.log"), &mut outcome.files)?;
    Ok(outcome)
}

pub fn cmd_report(input: &Path, compare: Option<&Path>, out: Option<&Path>) -> CliResult<Outcome> {
    let read = |p: &Path| -> CliResult<_> {
        let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
        Ok(parse_delimited(&text)?)
    };
    let rows = read(input)?;
    let out_dir = out.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
    let mut outcome = Outcome::default();
    let table = render_table(&rows);
    print!("{table}");
    write_file(&out_dir.join("report.txt"), table.as_bytes(), &mut outcome)?;
    if let Some(other) = compare {
        let report = compare_grid_rows(&rows, &read(other)?, &ConsistencyThresholds::default())?;
        let text = report.to_text();
        print!("{text}");
        write_file(&out_dir.join("consistency.txt"), text.as_bytes(), &mut outcome)?;
    }
    Ok(outcome)
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}
