//! Inputs shared by the attention benchmarks.

use hgmnet::msa::{synthetic_document, MsaConfig, MsaParams, MsaPlan, SparsityPattern, SyntheticDoc};
use hgmnet::numkit::Rng;
use hgmnet::textseg::Granularity;

pub const DIM: usize = 32;

pub struct Case {
    pub doc: SyntheticDoc,
    pub sparse: MsaPlan,
    pub dense: MsaPlan,
    pub params: MsaParams,
}

pub fn case(n: usize) -> Case {
    let doc = synthetic_document(n, DIM, n as u64);
    let sparse = MsaPlan::build(&doc.features, &doc.spans, doc.weights.clone(), &MsaConfig::default())
        .expect("synthetic documents are well formed");
    let dense = MsaPlan::single(SparsityPattern::dense(Granularity::Word, n), doc.weights.clone())
        .expect("dense pattern is valid");
    Case { doc, sparse, dense, params: MsaParams::init(DIM, &mut Rng::new(7)) }
}
