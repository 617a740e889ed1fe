use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::features::CpcCode;
use crate::hcl::{
    augment_mask, loss_hcl, loss_prototype, loss_sentence, loss_word, sent_sim_matrix, AlignmentPair, Lexicon,
    NegativeQueue, PrototypeSet,
};
use crate::numkit::{sgd_step, Matrix, Rng, Tape, Var};
use crate::pipeline::model::{section_index, PhraseInput, SECTIONS};
use crate::pipeline::{Model, NegativeSource, PhrasePairRecord, TrainConfig};

/// Pairs at or above this score count as aligned for the sentence loss.
pub const ALIGNED_SCORE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossPoint {
    pub step: usize,
    pub total: f64,
    pub mse: f64,
    pub word: f64,
    pub sentence: f64,
    pub prototype: f64,
}

pub const CURVE_HEADER: &str = "step,total,mse,word,sentence,prototype";

pub fn curve_csv(curve: &[LossPoint]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for p in curve {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e}",
            p.step, p.total, p.mse, p.word, p.sentence, p.prototype
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Final parameters, or the last finite ones when training diverged.
    pub model: Model,
    pub curve: Vec<LossPoint>,
    /// Step at which a non-finite loss or parameter appeared.
    pub diverged: Option<usize>,
    pub warnings: Vec<String>,
}

struct Prepared {
    anchors: Vec<PhraseInput>,
    targets: Vec<PhraseInput>,
    augmented: Vec<PhraseInput>,
}

/// Full-batch or shuffled mini-batch index schedule.
struct Batches {
    n: usize,
    size: usize,
    order: Vec<usize>,
    cursor: usize,
}

impl Batches {
    fn next(&mut self, rng: &mut Rng) -> Vec<usize> {
        if self.size >= self.n {
            return (0..self.n).collect();
        }
        if self.cursor + self.size > self.order.len() {
            self.order = rng.sample_indices(self.n, self.n);
            self.cursor = 0;
        }
        let b = self.order[self.cursor..self.cursor + self.size].to_vec();
        self.cursor += self.size;
        b
    }
}

/// Trains a scorer on `records`.
///
/// The objective per step is the mean squared error between `(1 + cos) / 2`
/// of the anchor and target representations and the labelled score, plus
/// `hcl_weight` times the weighted contrastive objective when enabled.
/// Augmented views are drawn once per record, so with `lr = 0` and full
/// batches every step sees the same loss.
pub fn train(
    records: &[PhrasePairRecord],
    config: &TrainConfig,
    seed: u64,
    lexicon: Option<&Lexicon>,
) -> Result<TrainOutcome> {
    if records.is_empty() {
        return Err(Error::invalid("cannot train on an empty record set"));
    }
    let mut config = config.clone();
    config.seed = seed;
    config.validate()?;
    let mut rng = Rng::new(seed);
    let mut warnings = Vec::new();

    let empty = Lexicon::default();
    let lexicon = lexicon.unwrap_or(&empty);
    let mut augmented_texts = Vec::new();
    if config.hcl {
        for r in records {
            let tokens: Vec<String> = crate::textseg::tokenize(&r.anchor).into_iter().map(|t| t.surface).collect();
            let aug = augment_mask(&tokens, lexicon, config.mask_rate, &mut rng)?;
            if let Some(w) = aug.warning {
                if warnings.is_empty() {
                    warnings.push(w);
                }
            }
            augmented_texts.push(aug.tokens.join(" "));
        }
    }

    let mut model = Model::new(records, &augmented_texts, &config, &mut rng)?;
    let prep = Prepared {
        anchors: records.iter().map(|r| model.prepare(&r.anchor)).collect::<Result<_>>()?,
        targets: records.iter().map(|r| model.prepare(&r.target)).collect::<Result<_>>()?,
        augmented: augmented_texts.iter().map(|t| model.prepare(t)).collect::<Result<_>>()?,
    };

    let n = records.len();
    let mut batches = Batches {
        n,
        size: if config.batch_size == 0 { n } else { config.batch_size.min(n) },
        order: Vec::new(),
        cursor: usize::MAX / 2,
    };
    let mut queue = NegativeQueue::new(config.queue_capacity.max(1), config.dim)?;
    let mut proto_ready = [false; SECTIONS.len()];
    let mut curve = Vec::with_capacity(config.steps);
    let mut diverged = None;

    for step in 0..config.steps {
        let batch = batches.next(&mut rng);
        let tape = Tape::new();
        let vars = model.on_tape(&tape);
        let lw_var = tape.param(model.loss_weights.clone());
        let log_tau = tape.param(model.log_tau.clone());
        let b = batch.len();

        let mut phrases: Vec<&PhraseInput> = batch.iter().map(|&i| &prep.anchors[i]).collect();
        phrases.extend(batch.iter().map(|&i| &prep.targets[i]));
        if config.hcl {
            phrases.extend(batch.iter().map(|&i| &prep.augmented[i]));
        }
        let contexts: Vec<&CpcCode> = (0..phrases.len()).map(|k| &records[batch[k % b]].context).collect();
        let reps = model.encode(&tape, &vars, &phrases, &contexts, true)?;
        let rows = |range: std::ops::Range<usize>| tape.select_rows(reps, &range.collect::<Vec<_>>());
        let anchors = rows(0..b)?;
        let targets = rows(b..2 * b)?;

        let cos = (0..b)
            .map(|i| tape.cosine_rows(tape.row(anchors, i)?, tape.row(targets, i)?))
            .collect::<Result<Vec<_>>>()?;
        let pred = tape.scale(tape.add_scalar(tape.concat_cols(&cos)?, tape.scalar(1.0))?, 0.5);
        let labels: Vec<f64> = batch.iter().map(|&i| records[i].score).collect();
        let err = tape.sub(pred, tape.constant(Matrix::row_vector(&labels)))?;
        let mse = tape.scale(tape.sum(tape.square(err)), 1.0 / b as f64);

        let mut point = LossPoint { step, total: 0.0, mse: tape.item(mse), word: 0.0, sentence: 0.0, prototype: 0.0 };
        let mut proto_update = None;
        let total = if config.hcl {
            let positives = rows(2 * b..3 * b)?;
            let mut word_terms = Vec::with_capacity(b);
            let snapshot = match config.negatives {
                NegativeSource::Queue => {
                    let pos = tape.value(positives);
                    let excluded: Vec<&[f64]> = pos.iter_rows().collect();
                    Some(tape.constant(queue.snapshot_excluding(&excluded)))
                }
                NegativeSource::Batch => None,
            };
            for i in 0..b {
                let negs = match snapshot {
                    Some(s) => Some(s),
                    None if b > 1 => {
                        let others: Vec<usize> = (0..b).filter(|&j| j != i).collect();
                        Some(tape.select_rows(positives, &others)?)
                    }
                    None => None,
                };
                let wl = loss_word(
                    &tape,
                    tape.row(anchors, i)?,
                    tape.row(positives, i)?,
                    negs,
                    log_tau,
                    config.literal_infonce,
                )?;
                word_terms.push(wl.loss);
            }
            let lw = tape.scale(tape.sum(tape.concat_cols(&word_terms)?), 1.0 / b as f64);

            let attn = sent_sim_matrix(&tape, anchors, targets)?;
            let pairs = (0..b)
                .map(|i| AlignmentPair::one_hot(i, (0..b).collect(), i, labels[i] >= ALIGNED_SCORE))
                .collect::<Result<Vec<_>>>()?;
            let ls = loss_sentence(&tape, &pairs, attn)?;

            let encoded = tape.concat_rows(&[anchors, targets])?;
            let cats: Vec<usize> = (0..2 * b).map(|k| section_index(&records[batch[k % b]].context)).collect();
            // Prototypes start at the first mean seen for their section.
            let values = tape.value(encoded);
            for (c, ready) in proto_ready.iter_mut().enumerate() {
                let members: Vec<usize> = (0..2 * b).filter(|&k| cats[k] == c).collect();
                if !*ready && !members.is_empty() {
                    let mean = values.select_rows(&members).mean_rows();
                    model.prototypes.row_mut(c).copy_from_slice(mean.row(0));
                    *ready = true;
                }
            }
            let protos = PrototypeSet::new(model.prototypes.clone(), config.momentum)?;
            let lp = loss_prototype(&tape, &protos, encoded, &cats)?;
            proto_update = Some((protos, lp.means.clone()));

            point.word = tape.item(lw);
            point.sentence = tape.item(ls);
            point.prototype = tape.item(lp.loss);
            let weighted = match loss_hcl(&tape, lw_var, lw, ls, lp.loss) {
                Ok(v) => v,
                Err(Error::NonFinite(_)) => {
                    point.total = f64::NAN;
                    curve.push(point);
                    diverged = Some(step);
                    break;
                }
                Err(e) => return Err(e),
            };
            tape.add(mse, tape.scale(weighted, config.hcl_weight))?
        } else {
            mse
        };
        point.total = tape.item(total);
        curve.push(point);
        if !point.total.is_finite() {
            diverged = Some(step);
            break;
        }

        let grads = tape.backward(total)?;
        let mut trainable: Vec<Var> = vec![vars.words];
        trainable.extend(vars.cpc);
        trainable.push(vars.theta_logit);
        if let Some(m) = &vars.msa {
            trainable.extend([m.wq, m.wk, m.wv, m.w_phrase]);
        }
        for g in &vars.gat {
            trainable.extend(g.vars());
        }
        trainable.extend([lw_var, log_tau]);

        let last_good = model.clone();
        {
            let mut params = model.tensors_mut().into_iter().filter(|t| t.2).map(|t| t.1);
            for v in &trainable {
                let p = params.next().expect("one tensor per trainable var");
                sgd_step(std::slice::from_mut(p), &[grads.get(*v)], config.lr)?;
            }
            debug_assert!(params.next().is_none());
        }
        if let (Some(m), Some(v)) = (&mut model.msa, &vars.msa) {
            // λ stays non-negative: projected step.
            m.lambda = (m.lambda - config.lr * grads.get(v.lambda).item()).max(0.0);
        }
        if let Some((mut protos, means)) = proto_update {
            protos.ema_update(&means)?;
            model.prototypes = protos.prototypes;
        }
        if config.hcl && config.negatives == NegativeSource::Queue {
            queue.push_rows(&tape.value(anchors))?;
        }
        if model.tensors().iter().any(|(_, t)| !t.is_finite()) {
            model = last_good;
            diverged = Some(step);
            break;
        }
    }

    if let Some(step) = diverged {
        warnings.push(format!("training diverged at step {step}; keeping the last finite parameters"));
    }
    Ok(TrainOutcome { model, curve, diverged, warnings })
}
