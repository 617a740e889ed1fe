//! End-to-end plumbing: phrase-pair ingestion, corpus statistics, the toy
//! training loop, scoring, and checkpoints.

mod checkpoint;
mod config;
mod fixture;
mod metrics;
mod model;
mod records;
mod stats;
mod train;

pub use checkpoint::{load as load_checkpoint, load_file as load_checkpoint_file, save as save_checkpoint, save_file as save_checkpoint_file, MAGIC};
pub use config::{NegativeSource, TrainConfig};
pub use fixture::{synthetic_pairs, TOPICS};
pub use metrics::{average_ranks, pearson, spearman};
pub use model::{score_from_cosine, section_index, Model, ModelVars, PhraseInput, CPC_LEVELS, SECTIONS};
pub use records::{ingest, ingest_reader, write_records, IngestReport, PhrasePairRecord, SkippedRow, REQUIRED_COLUMNS};
pub use stats::{aligned, stats, CorpusStats, ScoreHistogram, TermCount, DEFAULT_BUCKET_WIDTH, DEFAULT_TOP_TERMS};
pub use train::{curve_csv, train, LossPoint, TrainOutcome, ALIGNED_SCORE, CURVE_HEADER};
