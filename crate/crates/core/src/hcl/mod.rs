//! Word / sentence / paragraph contrastive objective: masking augmentation,
//! negative queue, alignment KL, frozen-prototype loss and softmax-weighted
//! combination.

mod augment;
mod loss;
mod queue;

pub use augment::{augment_mask, mask_count, Augmented, Lexicon, DEFAULT_MASK_RATE};
pub use loss::{
    info_nce, loss_hcl, loss_prototype, loss_sentence, loss_word, sent_sim_matrix,
    sent_sim_values, AlignmentPair, LossWeights, PrototypeLoss, PrototypeSet, Temperature,
    WordLoss, DEFAULT_MOMENTUM, DEFAULT_TAU, TARGET_SMOOTHING,
};
pub use queue::{NegativeQueue, DEFAULT_QUEUE_CAPACITY};
