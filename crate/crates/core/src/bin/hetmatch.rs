use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hetmatch::config::{OutputFormat, PartialConfig, RunConfig, CONFIG_ENV};
use hetmatch::convert::{convert, RawLayout};
use hetmatch::corpus::{
    load_dataset, split_tuning_test, ConceptInputMode, Dataset, Document, FunctionWords,
};
use hetmatch::harness::{evaluate, tune, GridSpec};
use hetmatch::report::{eval_table, explain_table, tune_summary, EvidenceOrder};
use hetmatch::similarity::Measure;
use hetmatch::weighting::Basis;
use hetmatch::{Cache, Error, Idf, Scorer, Store};

#[derive(Parser)]
#[command(
    name = "hetmatch",
    version,
    about = "Match documents from heterogeneous collections with word embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a raw annotation file into the JSON-lines pair format.
    Convert(ConvertArgs),
    /// Grid-search the threshold (and n) on the tuning split.
    Tune {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Write the full sweep as TSV.
        #[arg(long)]
        sweep_out: Option<PathBuf>,
    },
    /// Evaluate a fixed configuration on sampled runs over the test split.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0.10)]
        sample_fraction: f64,
        #[arg(long)]
        out_json: Option<PathBuf>,
        #[arg(long)]
        out_table: Option<PathBuf>,
    },
    /// Score one concept/project text pair. Exit 0 = match, 1 = no match, 2 = error.
    Score {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(
            long,
            conflicts_with = "concept_file",
            required_unless_present = "concept_file"
        )]
        concept: Option<String>,
        #[arg(long)]
        concept_file: Option<PathBuf>,
        #[arg(
            long,
            conflicts_with = "project_file",
            required_unless_present = "project_file"
        )]
        project: Option<String>,
        #[arg(long)]
        project_file: Option<PathBuf>,
    },
    /// Show the word pairs behind a top-n score for one dataset pair.
    Explain {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, requires = "project_id", conflicts_with = "index")]
        concept_id: Option<String>,
        #[arg(long, requires = "concept_id")]
        project_id: Option<String>,
        /// Zero-based row of the (deduplicated) dataset.
        #[arg(long, required_unless_present = "concept_id")]
        index: Option<usize>,
        #[arg(long, default_value = "sim", value_parser = parse_order)]
        order: EvidenceOrder,
    },
}

fn parse_order(s: &str) -> Result<EvidenceOrder, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    raw: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Field delimiter: `,` or `tab`.
    #[arg(long, default_value = ",")]
    delimiter: String,
    #[arg(long, default_value = "concept_label")]
    concept_label_col: String,
    #[arg(long, default_value = "concept_description")]
    concept_description_col: String,
    #[arg(long, default_value = "project_label")]
    project_label_col: String,
    #[arg(long, default_value = "label")]
    label_col: String,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML config file; defaults to $HETMATCH_CONFIG.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    embeddings_name: Option<String>,
    /// `word<TAB>idf` table; computed from the dataset when absent.
    #[arg(long)]
    idf: Option<PathBuf>,
    /// Stop list; the bundled English list is used when absent.
    #[arg(long)]
    function_words: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Word-pair similarity sidecar, loaded if present and written back.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<ConceptInputMode>,
    #[arg(long, value_parser = parse_measure)]
    measure: Option<Measure>,
    #[arg(long)]
    use_tf: Option<bool>,
    #[arg(long)]
    use_idf: Option<bool>,
    #[arg(long, value_parser = parse_basis)]
    basis: Option<Basis>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tuning_fraction: Option<f64>,
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Worker thread cap; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_mode(s: &str) -> Result<ConceptInputMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_measure(s: &str) -> Result<Measure, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_basis(s: &str) -> Result<Basis, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Clone)]
struct GridArgs {
    #[arg(long, default_value_t = 0.3)]
    t_min: f64,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    #[arg(long, default_value_t = 0.005)]
    t_step: f64,
    #[arg(long, default_value_t = 2)]
    n_min: usize,
    #[arg(long, default_value_t = 30)]
    n_max: usize,
    #[arg(long, default_value_t = 2)]
    n_step: usize,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let file = match self
            .config
            .clone()
            .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from))
        {
            Some(path) => PartialConfig::load(path)?,
            None => PartialConfig::default(),
        };
        let flags = PartialConfig {
            embeddings: self.embeddings.clone(),
            embeddings_name: self.embeddings_name.clone(),
            idf: self.idf.clone(),
            function_words: self.function_words.clone(),
            dataset: self.dataset.clone(),
            cache: self.cache.clone(),
            mode: self.mode,
            measure: self.measure,
            use_tf: self.use_tf,
            use_idf: self.use_idf,
            basis: self.basis,
            threshold: self.threshold,
            n: self.n,
            seed: self.seed,
            tuning_fraction: self.tuning_fraction,
            format: self.format,
            threads: self.threads,
        };
        let rc = RunConfig::resolve(file.merge(flags))?;
        if let Some(t) = rc.threads {
            // only fails if a pool already exists
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global();
        }
        Ok(rc)
    }
}

/// Loaded resources shared by the scoring commands.
struct Resources {
    store: Store,
    idf: Idf,
    cache: Cache,
}

impl Resources {
    fn load(
        rc: &RunConfig,
        vocabulary: &HashSet<String>,
        idf_docs: &[&Document],
    ) -> Result<Self, Error> {
        let store =
            Store::load_text_filtered(&rc.embeddings, &rc.embeddings_name, Some(vocabulary))?;
        let idf = match &rc.idf {
            Some(path) => Idf::load(path)?,
            None => Idf::from_documents(idf_docs)?,
        };
        let cache = match &rc.cache {
            Some(path) if path.exists() => Cache::load(path)?,
            _ => Cache::new(),
        };
        Ok(Resources { store, idf, cache })
    }

    fn scorer(&self) -> Scorer<'_> {
        Scorer::new(&self.store, &self.idf, Some(&self.cache))
    }

    fn save_cache(&self, rc: &RunConfig) -> Result<(), Error> {
        match &rc.cache {
            Some(path) => self.cache.save(path),
            None => Ok(()),
        }
    }
}

fn function_words(rc: &RunConfig) -> Result<FunctionWords, Error> {
    match &rc.function_words {
        Some(path) => FunctionWords::load(path),
        None => Ok(FunctionWords::english()),
    }
}

fn load_corpus(rc: &RunConfig) -> Result<(Dataset, Resources), Error> {
    let ds = load_dataset(rc.dataset()?, rc.mode, &function_words(rc)?)?;
    let vocabulary: HashSet<String> = ds.vocabulary().into_iter().collect();
    let docs = ds.documents();
    let refs: Vec<&Document> = docs.iter().map(|d| d.as_ref()).collect();
    let res = Resources::load(rc, &vocabulary, &refs)?;
    Ok((ds, res))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn meta(rc: &RunConfig, split: &str) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("embeddings".to_string(), rc.embeddings_name.clone()),
        ("concept_input".to_string(), rc.mode.as_str().to_string()),
        (
            "idf_source".to_string(),
            if rc.idf.is_some() { "table" } else { "dataset" }.to_string(),
        ),
        ("split".to_string(), split.to_string()),
        (
            "tuning_fraction".to_string(),
            rc.tuning_fraction.to_string(),
        ),
    ])
}

fn cmd_convert(args: &ConvertArgs) -> Result<ExitCode, Error> {
    let delimiter = match args.delimiter.as_str() {
        "tab" | "\\t" | "\t" => b'\t',
        s if s.len() == 1 => s.as_bytes()[0],
        s => {
            return Err(Error::Config(format!(
                "delimiter must be one byte or `tab`, got `{s}`"
            )))
        }
    };
    let layout = RawLayout {
        delimiter,
        concept_label: args.concept_label_col.clone(),
        concept_description: args.concept_description_col.clone(),
        project_label: args.project_label_col.clone(),
        label: args.label_col.clone(),
    };
    let input = File::open(&args.raw).map_err(|e| Error::Io {
        path: args.raw.clone(),
        source: e,
    })?;
    let out = File::create(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    let mut out = BufWriter::new(out);
    let stats = convert(BufReader::new(input), &mut out, &layout)?;
    out.flush().map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    for (row, why) in &stats.rejected {
        eprintln!("warning: row {row} rejected: {why}");
    }
    println!(
        "read {} rows, wrote {} pairs, removed {} duplicates, rejected {}",
        stats.rows_read,
        stats.written,
        stats.duplicates_removed,
        stats.rejected.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_tune(
    common: &CommonArgs,
    g: &GridArgs,
    sweep_out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let rc = common.resolve()?;
    rc.check_tunable()?;
    let grid = GridSpec {
        t_min: g.t_min,
        t_max: g.t_max,
        t_step: g.t_step,
        n_min: g.n_min,
        n_max: g.n_max,
        n_step: g.n_step,
    };
    let (ds, res) = load_corpus(&rc)?;
    let (tuning, _) = split_tuning_test(&ds, rc.tuning_fraction, rc.seed)?;
    let result = tune(&tuning, &res.scorer(), rc.measure, &rc.weighting, &grid)?;
    res.save_cache(&rc)?;
    if let Some(path) = sweep_out {
        write_file(path, &result.sweep.to_tsv())?;
    }
    match rc.format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&result)?),
        OutputFormat::Tsv => print!("{}", result.sweep.to_tsv()),
        OutputFormat::Table => {
            println!(
                "tuning_pairs={} scoring_failures={}",
                tuning.len(),
                result.scoring_failures
            );
            println!("{}", tune_summary(&result));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_evaluate(
    common: &CommonArgs,
    runs: usize,
    sample_fraction: f64,
    out_json: Option<&Path>,
    out_table: Option<&Path>,
) -> Result<ExitCode, Error> {
    let rc = common.resolve()?;
    let config = rc.classifier()?;
    let (ds, res) = load_corpus(&rc)?;
    let (_, test) = split_tuning_test(&ds, rc.tuning_fraction, rc.seed)?;
    let mut report = evaluate(
        &test,
        &res.scorer(),
        &config,
        runs,
        sample_fraction,
        rc.seed,
    )?;
    report.meta = meta(&rc, "test");
    res.save_cache(&rc)?;
    let json = report.to_json()?;
    let table = eval_table(&report);
    if let Some(path) = out_json {
        write_file(path, &json)?;
    }
    if let Some(path) = out_table {
        write_file(path, &table)?;
    }
    match rc.format {
        OutputFormat::Json => print!("{json}"),
        _ => print!("{table}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn read_text(inline: &Option<String>, file: &Option<PathBuf>) -> Result<String, Error> {
    match (inline, file) {
        (Some(t), _) => Ok(t.clone()),
        (None, Some(path)) => std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        }),
        (None, None) => Err(Error::Config("text or file required".into())),
    }
}

fn cmd_score(common: &CommonArgs, concept: String, project: String) -> Result<ExitCode, Error> {
    let rc = common.resolve()?;
    let config = rc.classifier()?;
    let fw = function_words(&rc)?;
    let c = Document::new("concept", &concept, &fw);
    let p = Document::new("project", &project, &fw);
    let vocabulary: HashSet<String> = c.bag.keys().chain(p.bag.keys()).cloned().collect();
    let res = Resources::load(&rc, &vocabulary, &[&c, &p])?;
    let result = res.scorer().match_documents(&c, &p, &config)?;
    res.save_cache(&rc)?;
    println!("{}", serde_json::to_string(&result)?);
    Ok(if result.decision {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_explain(
    common: &CommonArgs,
    selector: (Option<&str>, Option<&str>, Option<usize>),
    order: EvidenceOrder,
) -> Result<ExitCode, Error> {
    let rc = common.resolve()?;
    if rc.measure != Measure::TopN {
        return Err(Error::Config(
            "explain needs the top-n measure; avg_cos_sim compares mean vectors and has no word-pair evidence".into(),
        ));
    }
    let config = rc.classifier()?;
    let (ds, res) = load_corpus(&rc)?;
    let pair = match selector {
        (Some(c), Some(p), _) => ds.find(c, p).ok_or_else(|| {
            Error::Config(format!("no pair with concept `{c}` and project `{p}`"))
        })?,
        (_, _, Some(i)) => ds.pairs.get(i).ok_or_else(|| {
            Error::Config(format!(
                "pair index {i} out of range (dataset has {})",
                ds.len()
            ))
        })?,
        _ => {
            return Err(Error::Config(
                "select a pair with --index or --concept-id/--project-id".into(),
            ))
        }
    };
    let result = res.scorer().score_pair(pair, &config)?;
    res.save_cache(&rc)?;
    match rc.format {
        OutputFormat::Json => println!("{}", serde_json::to_string(&result)?),
        _ => {
            println!(
                "concept={} project={} gold={}",
                pair.concept.id,
                pair.project.id,
                u8::from(pair.label)
            );
            print!("{}", explain_table(&result, order));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Convert(args) => cmd_convert(&args),
        Command::Tune {
            common,
            grid,
            sweep_out,
        } => cmd_tune(&common, &grid, sweep_out.as_deref()),
        Command::Evaluate {
            common,
            runs,
            sample_fraction,
            out_json,
            out_table,
        } => cmd_evaluate(
            &common,
            runs,
            sample_fraction,
            out_json.as_deref(),
            out_table.as_deref(),
        ),
        Command::Score {
            common,
            concept,
            concept_file,
            project,
            project_file,
        } => {
            let c = read_text(&concept, &concept_file)?;
            let p = read_text(&project, &project_file)?;
            cmd_score(&common, c, p)
        }
        Command::Explain {
            common,
            concept_id,
            project_id,
            index,
            order,
        } => cmd_explain(
            &common,
            (concept_id.as_deref(), project_id.as_deref(), index),
            order,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::NoEmbeddableWords { oov, .. } = &e {
                if !oov.is_empty() {
                    eprintln!("out-of-vocabulary words: {}", oov.join(" "));
                }
            }
            ExitCode::from(2)
        }
    }
}
