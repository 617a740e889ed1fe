use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hgmnet::features::{parse_citations, CpcCode, CpcEmbedder, EmbeddingTable};
use hgmnet::hcl::Lexicon;
use hgmnet::mgat::{build_graph, GraphRecord};
use hgmnet::msa::{complexity_sweep, sweep_csv, sweep_table, MsaConfig, SweepOptions};
use hgmnet::pipeline::{self, PhrasePairRecord, TrainConfig};
use hgmnet::textseg::tokenize;
use hgmnet::{Error, Result, Rng};

/// Patent phrase similarity: data ingestion, corpus statistics, training,
/// scoring, attention benchmarks and graph export.
#[derive(Parser, Debug)]
#[command(name = "hgmnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// TOML training config; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Phrase-pair CSV with columns id, anchor, target, context, score.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Citation pairs, `citing<TAB>cited` per line.
    #[arg(long, global = true)]
    citations: Option<PathBuf>,
    /// Synonym lexicon, `term<TAB>syn1,syn2` per line.
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a phrase-pair CSV and report skipped rows.
    Ingest,
    /// Score histogram, top terms and CPC section counts.
    Stats {
        #[arg(long, default_value_t = pipeline::DEFAULT_TOP_TERMS)]
        top: usize,
    },
    /// Train a scorer; writes checkpoint.hgm and loss_curve.csv.
    Train,
    /// Score one pair, or every pair of --data, with a checkpoint.
    Score {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, requires_all = ["target", "context"])]
        anchor: Option<String>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        context: Option<String>,
    },
    /// Attended-pair counts and timings of sparse vs dense attention.
    Bench {
        /// Sequence lengths, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256, 512, 1024, 2048, 4096])]
        n: Vec<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        prototypes: Option<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Skip timing the dense baseline.
        #[arg(long)]
        no_dense: bool,
    },
    /// Build the text / CPC / citation graph and export it as TSV.
    Graph,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
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

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Ingest => {
            let report = ingest(c)?;
            println!("{}", report.summary());
            Ok(())
        }
        Command::Stats { top } => {
            let records = ingest(c)?.records;
            if records.is_empty() {
                return Err(Error::Validation("stats needs at least one record".into()));
            }
            let s = pipeline::stats(&records, *top);
            print!("{}", s.table());
            if let Some(dir) = &c.out {
                write(dir, "score_histogram.csv", &s.histogram.to_csv())?;
                write(dir, "top_terms.csv", &s.terms_csv())?;
                write(dir, "context_sections.csv", &s.sections_csv())?;
            }
            Ok(())
        }
        Command::Train => train(c),
        Command::Score { checkpoint, anchor, target, context } => {
            let model = pipeline::load_checkpoint_file(checkpoint)?;
            match (anchor, target, context) {
                (Some(a), Some(t), Some(ctx)) => {
                    let code = CpcCode::parse(ctx)?;
                    println!("{:.6}", model.score(a, t, &code)?);
                    Ok(())
                }
                _ => {
                    let records = ingest(c)?.records;
                    let mut csv = String::from("id,score,predicted\n");
                    for (r, s) in records.iter().zip(model.score_records(&records)?) {
                        csv += &format!("{},{},{s:.6}\n", r.id, r.score);
                    }
                    match &c.out {
                        Some(dir) => write(dir, "scores.csv", &csv),
                        None => {
                            print!("{csv}");
                            Ok(())
                        }
                    }
                }
            }
        }
        Command::Bench { n, window, top_k, prototypes, repeats, no_dense } => {
            let cfg = MsaConfig { window: *window, top_k: *top_k, prototypes: *prototypes, ..MsaConfig::default() };
            let opts = SweepOptions {
                seed: c.seed,
                repeats: (*repeats).max(1),
                time_dense: !no_dense,
                ..SweepOptions::default()
            };
            let rows = complexity_sweep(n, &cfg, &opts)?;
            print!("{}", sweep_table(&rows));
            if let Some(dir) = &c.out {
                write(dir, "complexity.csv", &sweep_csv(&rows))?;
            }
            Ok(())
        }
        Command::Graph => graph(c),
    }
}

fn data_path(c: &Common) -> Result<&Path> {
    c.data
        .as_deref()
        .ok_or_else(|| Error::Validation("this command needs --data <csv>".into()))
}

fn ingest(c: &Common) -> Result<pipeline::IngestReport> {
    let report = pipeline::ingest(data_path(c)?)?;
    for s in &report.skipped {
        eprintln!("skipped line {}: {}", s.line, s.reason);
    }
    Ok(report)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| io_error(&path, e))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

fn config(c: &Common) -> Result<TrainConfig> {
    match &c.config {
        Some(p) => TrainConfig::load(p),
        None => Ok(TrainConfig::default()),
    }
}

fn lexicon(c: &Common) -> Result<Option<Lexicon>> {
    c.lexicon.as_deref().map(Lexicon::load).transpose()
}

fn train(c: &Common) -> Result<()> {
    let records = ingest(c)?.records;
    let cfg = config(c)?;
    let lex = lexicon(c)?;
    let out = pipeline::train(&records, &cfg, c.seed, lex.as_ref())?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
    write(&dir, "checkpoint.hgm", &pipeline::save_checkpoint(&out.model))?;
    write(&dir, "loss_curve.csv", &pipeline::curve_csv(&out.curve))?;
    if let (Some(first), Some(last)) = (out.curve.first(), out.curve.last()) {
        println!("steps {}  loss {:.6} -> {:.6}", out.curve.len(), first.total, last.total);
    }
    if let Some(step) = out.diverged {
        return Err(Error::NonFinite(format!("training loss at step {step}")));
    }
    Ok(())
}

fn graph(c: &Common) -> Result<()> {
    let dir = c
        .out
        .as_deref()
        .ok_or_else(|| Error::Validation("graph needs --out <dir>".into()))?;
    let records = ingest(c)?.records;
    let cfg = config(c)?;
    let citations = match &c.citations {
        Some(p) => parse_citations(&std::fs::read_to_string(p).map_err(|e| io_error(p, e))?)?,
        None => Vec::new(),
    };
    let graph_records: Vec<GraphRecord> = records.iter().map(graph_record).collect();
    let mut rng = Rng::new(c.seed);
    let vocab = graph_records.iter().flat_map(|r| r.sentences.iter().flatten());
    let tokens = EmbeddingTable::new(vocab, cfg.dim, &mut rng);
    let cpc = CpcEmbedder::new(records.iter().map(|r| &r.context), cfg.dim, &mut rng)?;
    let built = build_graph(&graph_records, &citations, &tokens, &cpc)?;
    for w in &built.warnings {
        eprintln!("warning: {w}");
    }
    built.graph.export(dir)?;
    println!("{} nodes, {} edges", built.graph.len(), built.graph.edges().len());
    Ok(())
}

/// Anchor and target become the two sentences of one record.
fn graph_record(r: &PhrasePairRecord) -> GraphRecord {
    let words = |s: &str| {
        let t: Vec<String> = tokenize(s).into_iter().map(|t| t.surface).collect();
        if t.is_empty() {
            vec![String::new()]
        } else {
            t
        }
    };
    GraphRecord {
        id: r.id.clone(),
        sentences: vec![words(&r.anchor), words(&r.target)],
        cpc: r.context.clone(),
    }
}
