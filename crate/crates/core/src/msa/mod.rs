//! Multi-granularity sparse attention: per-level sparsity patterns, tf-idf
//! augmented scores, a sparse forward pass over word / phrase / sentence /
//! paragraph levels, and pair-count accounting.

mod attention;
mod forward;
mod pattern;
mod sweep;

pub use attention::{
    attn_scores, attn_scores_tape, normalize_weights, phrase_attention, phrase_logits_tape, DEFAULT_LAMBDA,
    DEFAULT_PHRASE_TAU,
};
pub use forward::{
    n_log_n, sparse_forward, sparse_forward_tape, ComplexityReport, LevelCost, LevelPlan, LevelScoring, LevelSpans,
    MsaConfig, MsaParams, MsaPlan, MsaTapeOutput, MsaVars, REPORT_HEADER,
};
pub use pattern::{
    default_window_pattern, log_size, prototype_pattern, window_pattern, PrototypeBank, SparsityPattern,
};
pub use sweep::{
    complexity_sweep, sweep_csv, sweep_table, synthetic_document, SweepOptions, SweepRow, SyntheticDoc,
    SYNTHETIC_PARAGRAPH, SYNTHETIC_PHRASE, SYNTHETIC_SENTENCE,
};
