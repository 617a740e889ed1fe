use crate::features::CpcCode;
use crate::pipeline::PhrasePairRecord;

/// Four topics on a cycle, each with its own vocabulary and CPC context.
pub const TOPICS: [(&str, [&str; 4]); 4] = [
    ("F04D1/00", ["pump", "impeller", "rotor", "turbine"]),
    ("F16K1/00", ["valve", "seal", "gasket", "stopcock"]),
    ("H04L9/00", ["packet", "router", "network", "protocol"]),
    ("A01B1/00", ["plough", "tiller", "harrow", "soil"]),
];

/// One word for even `k`, two neighboring words for odd `k`.
fn phrase(topic: usize, k: usize) -> String {
    let w = &TOPICS[topic].1;
    if k.is_multiple_of(2) {
        w[k % 4].to_string()
    } else {
        format!("{} {}", w[k % 4], w[(k + 1) % 4])
    }
}

/// 64 labelled pairs with cleanly separable structure: 16 per topic, scored
/// 1.0 for identical phrases, 0.75 for disjoint words of one topic, 0.5 for
/// neighboring topics on the cycle and 0.0 for opposite topics.
pub fn synthetic_pairs() -> Vec<PhrasePairRecord> {
    let mut out = Vec::with_capacity(64);
    for a in 0..4 {
        for k in 0..16 {
            let (target, score) = match k {
                0..=2 => (phrase(a, k), 1.0),
                3..=7 => (phrase(a, k + 2), 0.75),
                8..=11 => {
                    let b = if k % 2 == 0 { (a + 1) % 4 } else { (a + 3) % 4 };
                    (phrase(b, k + 1), 0.5)
                }
                _ => (phrase((a + 2) % 4, k + 3), 0.0),
            };
            out.push(PhrasePairRecord {
                id: format!("p{:02}", a * 16 + k),
                anchor: phrase(a, k),
                target,
                context: CpcCode::parse(TOPICS[a].0).expect("fixture codes are valid"),
                score,
            });
        }
    }
    out
}
