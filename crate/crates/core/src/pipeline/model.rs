//! Phrase-pair scorer: token embeddings, optional sparse multi-granularity
//! attention with a phrase-cohesion gate, optional cross-modal graph layers
//! over text and CPC nodes, mean pooling and a `(1 + cos) / 2` head.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::features::{CpcCode, CpcEmbedder, EmbeddingTable, TfIdfModel};
use crate::mgat::{stack_forward_tape, EdgeKind, GatLayerParams, GatLayerVars, GatOptions, HeteroGraph, Modality};
use crate::msa::{sparse_forward_tape, LevelSpans, MsaConfig, MsaParams, MsaPlan, MsaVars};
use crate::numkit::{Matrix, Rng, Tape, Var};
use crate::pipeline::{PhrasePairRecord, TrainConfig};
use crate::textseg::{decompose_tokens, tokenize, Token, TransitionTable, DEFAULT_THETA};

/// Lower bound applied to transition scores before taking logs.
const SCORE_FLOOR: f64 = 1e-12;

pub const CPC_LEVELS: [&str; 4] = ["section", "class", "subclass", "group"];

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: TrainConfig,
    pub words: EmbeddingTable,
    /// Inverse document frequency per word row (row 0 = unseen term).
    pub idf: Matrix,
    pub cpc: CpcEmbedder,
    pub transition: Matrix,
    /// Phrase threshold as a logit: `θ = sigmoid(theta_logit)`.
    pub theta_logit: Matrix,
    pub msa: Option<MsaParams>,
    pub gat: Vec<GatLayerParams>,
    pub loss_weights: Matrix,
    pub log_tau: Matrix,
    pub prototypes: Matrix,
}

/// A tokenized phrase with everything that does not depend on parameters.
#[derive(Debug, Clone)]
pub struct PhraseInput {
    pub tokens: Vec<Token>,
    pub ids: Vec<usize>,
    pub pair_scores: Vec<f64>,
    pub weights: Vec<f64>,
}

pub struct ModelVars {
    pub words: Var,
    pub cpc: [Var; 4],
    pub theta_logit: Var,
    pub msa: Option<MsaVars>,
    pub gat: Vec<GatLayerVars>,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Nine CPC sections, used as prototype categories.
pub const SECTIONS: &str = "ABCDEFGHY";

pub fn section_index(code: &CpcCode) -> usize {
    SECTIONS.find(code.section).expect("parsed codes have a known section")
}

impl Model {
    /// Fresh parameters for the vocabulary of `texts` and the codes in `records`.
    pub fn new(records: &[PhrasePairRecord], extra_texts: &[String], config: &TrainConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut docs: Vec<Vec<String>> = Vec::new();
        for r in records {
            docs.push(surfaces(&r.anchor));
            docs.push(surfaces(&r.target));
        }
        let vocab: Vec<String> = docs
            .iter()
            .flatten()
            .cloned()
            .chain(extra_texts.iter().flat_map(|t| surfaces(t)))
            .collect();
        let d = config.dim;
        let words = EmbeddingTable::new(&vocab, d, rng);
        let tfidf = TfIdfModel::fit(&docs)?;
        let mut idf = Matrix::zeros(words.vocab().len() + 1, 1);
        idf.row_mut(0)[0] = tfidf.idf("");
        for (i, w) in words.vocab().iter().enumerate() {
            idf.row_mut(i + 1)[0] = tfidf.idf(w);
        }
        let cpc = CpcEmbedder::new(records.iter().map(|r| &r.context), d, rng)?;
        let transition = Matrix::from_vec(5, 5, TransitionTable::default().flat_scores())?;
        let msa = if config.msa {
            let mut p = MsaParams::init(d, rng);
            p.lambda = crate::msa::DEFAULT_LAMBDA;
            Some(p)
        } else {
            None
        };
        let gat = if config.mgat {
            (0..config.mgat_layers)
                .map(|_| GatLayerParams::init(d, config.mgat_heads, rng))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            config: config.clone(),
            words,
            idf,
            cpc,
            transition,
            theta_logit: Matrix::scalar(logit(config.theta)),
            msa,
            gat,
            loss_weights: Matrix::zeros(1, 3),
            log_tau: Matrix::scalar(config.tau.ln()),
            prototypes: Matrix::zeros(SECTIONS.len(), d),
        })
    }

    /// Zero-filled model with the shapes implied by a config and vocabularies,
    /// to be filled from a checkpoint.
    pub fn skeleton(config: &TrainConfig, words: Vec<String>, cpc: [Vec<String>; 4]) -> Result<Self> {
        config.validate()?;
        let d = config.dim;
        let mut rng = Rng::new(0);
        let v = words.len() + 1;
        let mut model = Self {
            config: config.clone(),
            words: EmbeddingTable::from_parts(words, Matrix::zeros(v, d))?,
            idf: Matrix::zeros(v, 1),
            cpc: CpcEmbedder {
                tables: {
                    let mut tables = Vec::with_capacity(4);
                    for keys in cpc {
                        let rows = keys.len() + 1;
                        tables.push(EmbeddingTable::from_parts(keys, Matrix::zeros(rows, d / 4))?);
                    }
                    tables.try_into().expect("four tables")
                },
            },
            transition: Matrix::zeros(5, 5),
            theta_logit: Matrix::zeros(1, 1),
            msa: config.msa.then(|| MsaParams::init(d, &mut rng)),
            gat: if config.mgat {
                (0..config.mgat_layers)
                    .map(|_| GatLayerParams::identity(d, config.mgat_heads))
                    .collect::<Result<_>>()?
            } else {
                Vec::new()
            },
            loss_weights: Matrix::zeros(1, 3),
            log_tau: Matrix::zeros(1, 1),
            prototypes: Matrix::zeros(SECTIONS.len(), d),
        };
        for (_, t, _) in model.tensors_mut() {
            t.data_mut().fill(0.0);
        }
        if let Some(m) = &mut model.msa {
            m.lambda = 0.0;
        }
        Ok(model)
    }

    /// Every tensor with its checkpoint name and whether training updates it.
    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix, bool)> {
        let mut out: Vec<(String, &mut Matrix, bool)> = vec![
            ("words".into(), self.words.weights_mut(), true),
            ("idf".into(), &mut self.idf, false),
        ];
        for (name, table) in CPC_LEVELS.iter().zip(self.cpc.tables.iter_mut()) {
            out.push((format!("cpc.{name}"), table.weights_mut(), true));
        }
        out.push(("transition".into(), &mut self.transition, false));
        out.push(("theta_logit".into(), &mut self.theta_logit, true));
        if let Some(m) = &mut self.msa {
            out.push(("msa.wq".into(), &mut m.wq, true));
            out.push(("msa.wk".into(), &mut m.wk, true));
            out.push(("msa.wv".into(), &mut m.wv, true));
            out.push(("msa.w_phrase".into(), &mut m.w_phrase, true));
        }
        for (l, layer) in self.gat.iter_mut().enumerate() {
            let [w_text, w_cpc, w_cite, a, gate] = layer.tensors_mut();
            for (name, t) in [("w_text", w_text), ("w_cpc", w_cpc), ("w_cite", w_cite), ("a", a), ("gate_free", gate)] {
                out.push((format!("mgat.{l}.{name}"), t, true));
            }
        }
        out.push(("hcl.loss_weights".into(), &mut self.loss_weights, true));
        out.push(("hcl.log_tau".into(), &mut self.log_tau, true));
        out.push(("hcl.prototypes".into(), &mut self.prototypes, false));
        out
    }

    /// Read-only view of [`Model::tensors_mut`], plus the msa λ scalar.
    pub fn tensors(&self) -> Vec<(String, Matrix)> {
        let mut copy = self.clone();
        let mut out: Vec<(String, Matrix)> = copy.tensors_mut().into_iter().map(|(n, t, _)| (n, t.clone())).collect();
        if let Some(m) = &self.msa {
            out.push(("msa.lambda".into(), Matrix::scalar(m.lambda)));
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn theta(&self) -> f64 {
        1.0 / (1.0 + (-self.theta_logit.item()).exp())
    }

    pub fn transition_table(&self) -> Result<TransitionTable> {
        let theta = self.theta();
        let theta = if theta > 0.0 && theta < 1.0 { theta } else { DEFAULT_THETA };
        TransitionTable::from_flat(self.transition.data(), theta)
    }

    /// Tokenizes a phrase and looks up ids, transition scores and tf-idf weights.
    pub fn prepare(&self, text: &str) -> Result<PhraseInput> {
        let table = self.transition_table()?;
        let tokens = tokenize(text);
        let ids: Vec<usize> = if tokens.is_empty() {
            vec![EmbeddingTable::OOV]
        } else {
            tokens.iter().map(|t| self.words.lookup(&t.surface)).collect()
        };
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in &tokens {
            *counts.entry(&t.surface).or_insert(0) += 1;
        }
        let weights = tokens
            .iter()
            .zip(&ids)
            .map(|(t, &id)| counts[t.surface.as_str()] as f64 * self.idf.row(id)[0])
            .collect();
        Ok(PhraseInput {
            pair_scores: table.pair_scores(&tokens),
            tokens,
            ids,
            weights,
        })
    }

    pub fn on_tape(&self, tape: &Tape) -> ModelVars {
        ModelVars {
            words: tape.param(self.words.weights().clone()),
            cpc: std::array::from_fn(|l| tape.param(self.cpc.tables[l].weights().clone())),
            theta_logit: tape.param(self.theta_logit.clone()),
            msa: self.msa.as_ref().map(|m| m.on_tape(tape)),
            gat: self.gat.iter().map(|g| g.on_tape(tape)).collect(),
        }
    }

    /// Pooled token representation of one phrase (1×d) before graph layers.
    fn phrase_vector(&self, tape: &Tape, vars: &ModelVars, p: &PhraseInput, soft: bool) -> Result<Var> {
        let mut h = tape.select_rows(vars.words, &p.ids)?;
        let n = p.ids.len();
        let (Some(msa), false) = (&vars.msa, p.tokens.is_empty()) else {
            return Ok(tape.mean_rows(h));
        };

        let table = self.transition_table()?;
        let dec = decompose_tokens(p.tokens.clone(), &table, None)?;
        let cfg = MsaConfig {
            phrase_tau: self.config.phrase_tau,
            ..MsaConfig::default()
        };
        let plan = MsaPlan::build(&tape.value(h), &LevelSpans::from_decomposition(&dec), p.weights.clone(), &cfg)?;
        let attended = sparse_forward_tape(tape, h, &plan, msa)?.output;
        h = tape.add(h, attended)?;
        if n < 2 {
            return Ok(tape.mean_rows(h));
        }

        // Cohesion gate per adjacent pair: soft sigmoid((ln s − ln θ)/T) while
        // training, the hard test s > θ otherwise. Each gate adds weight to
        // both tokens of its pair.
        let gates = if soft {
            let neg_log_theta = tape.softplus(tape.scale(vars.theta_logit, -1.0));
            let log_s: Vec<f64> = p.pair_scores.iter().map(|&s| s.max(SCORE_FLOOR).ln()).collect();
            let z = tape.add_scalar(tape.constant(Matrix::row_vector(&log_s)), neg_log_theta)?;
            tape.sigmoid(tape.scale(z, 1.0 / self.config.gate_temperature))
        } else {
            let theta = table.theta();
            let hard: Vec<f64> = p.pair_scores.iter().map(|&s| if s > theta { 1.0 } else { 0.0 }).collect();
            tape.constant(Matrix::row_vector(&hard))
        };
        let zero = tape.scalar(0.0);
        let both = tape.add(tape.concat_cols(&[gates, zero])?, tape.concat_cols(&[zero, gates])?)?;
        let weights = tape.add_scalar(both, tape.scalar(1.0))?;
        tape.div_by(tape.matmul(weights, h)?, tape.sum(weights))
    }

    fn cpc_vector(&self, tape: &Tape, vars: &ModelVars, code: &CpcCode) -> Result<Var> {
        let rows = self.cpc.rows(code);
        let parts = (0..4).map(|l| tape.row(vars.cpc[l], rows[l])).collect::<Result<Vec<_>>>()?;
        tape.concat_cols(&parts)
    }

    /// Representations (k×d) of `phrases`, each paired with a CPC context.
    ///
    /// With graph layers on, every phrase becomes a text node joined to the node
    /// of its context code; codes are shared between phrases.
    pub fn encode(
        &self,
        tape: &Tape,
        vars: &ModelVars,
        phrases: &[&PhraseInput],
        contexts: &[&CpcCode],
        soft: bool,
    ) -> Result<Var> {
        if phrases.len() != contexts.len() {
            return Err(Error::dim("phrase contexts", phrases.len(), contexts.len()));
        }
        if phrases.is_empty() {
            return Err(Error::invalid("nothing to encode"));
        }
        let pooled = phrases
            .iter()
            .map(|p| self.phrase_vector(tape, vars, p, soft))
            .collect::<Result<Vec<_>>>()?;
        let text = tape.concat_rows(&pooled)?;
        if vars.gat.is_empty() {
            return Ok(text);
        }

        let d = self.dim();
        let zeros = vec![0.0; d];
        let mut g = HeteroGraph::new(d);
        for i in 0..phrases.len() {
            g.add_node(format!("text:{i}"), Modality::Text, &zeros)?;
        }
        let mut codes: Vec<&CpcCode> = Vec::new();
        let mut node_of: HashMap<String, usize> = HashMap::new();
        for (i, c) in contexts.iter().enumerate() {
            let key = c.render();
            let node = match node_of.get(&key) {
                Some(&n) => n,
                None => {
                    let n = g.add_node(crate::mgat::cpc_node_id(c), Modality::Cpc, &zeros)?;
                    node_of.insert(key, n);
                    codes.push(c);
                    n
                }
            };
            g.add_edge(node, i, EdgeKind::Hierarchy)?;
        }
        let cpc_rows = codes
            .iter()
            .map(|c| self.cpc_vector(tape, vars, c))
            .collect::<Result<Vec<_>>>()?;
        let mut all = vec![text];
        all.extend(cpc_rows);
        let h = tape.concat_rows(&all)?;
        let out = stack_forward_tape(tape, &g, h, &vars.gat, GatOptions::default())?;
        let idx: Vec<usize> = (0..phrases.len()).collect();
        tape.add(text, tape.select_rows(out, &idx)?)
    }

    /// Similarity in `[0, 1]` of two phrases under one context.
    pub fn score(&self, anchor: &str, target: &str, context: &CpcCode) -> Result<f64> {
        let (a, t) = (self.prepare(anchor)?, self.prepare(target)?);
        let tape = Tape::new();
        let vars = self.on_tape(&tape);
        let r = self.encode(&tape, &vars, &[&a, &t], &[context, context], false)?;
        let cos = tape.cosine_rows(tape.row(r, 0)?, tape.row(r, 1)?)?;
        Ok(score_from_cosine(tape.item(cos)))
    }

    pub fn score_records(&self, records: &[PhrasePairRecord]) -> Result<Vec<f64>> {
        records
            .iter()
            .map(|r| self.score(&r.anchor, &r.target, &r.context))
            .collect()
    }

    /// Checks that the stored shapes agree with the config.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let v = self.words.vocab().len() + 1;
        let mismatch = |what: &str| Err(Error::invalid(format!("checkpoint does not match its config: {what}")));
        if self.words.dim() != d || self.cpc.dim() != d || self.prototypes.cols() != d {
            return mismatch("embedding width");
        }
        if self.idf.shape() != (v, 1) {
            return mismatch("idf rows");
        }
        if self.msa.is_some() != self.config.msa || self.gat.len() != if self.config.mgat { self.config.mgat_layers } else { 0 } {
            return mismatch("active components");
        }
        for g in &self.gat {
            g.validate()?;
            if g.dim() != d || g.heads != self.config.mgat_heads {
                return mismatch("graph layer shape");
            }
        }
        if let Some(m) = &self.msa {
            if m.dim() != d {
                return mismatch("attention projection width");
            }
        }
        self.transition_table()?;
        for (name, t) in self.tensors() {
            t.ensure_finite(&name)?;
        }
        Ok(())
    }
}

pub fn score_from_cosine(cos: f64) -> f64 {
    ((1.0 + cos) / 2.0).clamp(0.0, 1.0)
}

fn surfaces(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.surface).collect()
}
