//! Pick a diverse subset of random embeddings and compare it with random
//! picks and the exhaustive optimum.
//!
//! cargo run --example curate_diverse

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use speedkit::curation::{
    bruteforce_select, mean_pairwise_similarity, qp_select, random_select, select_diverse,
    EmbeddingSet, DEFAULT_QP_ITERS,
};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let rows: Vec<Vec<f64>> = (0..16)
        .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let emb = EmbeddingSet::from_rows(rows).unwrap();
    let k = 5;

    let diverse = select_diverse(&emb, k, 0, 100).unwrap();
    let qp = qp_select(&emb, k, DEFAULT_QP_ITERS, None).unwrap();
    let random = random_select(&emb, k, 0).unwrap();
    let best = bruteforce_select(&emb, k).unwrap();

    for (name, sel) in [("greedy+swap", &diverse), ("qp", &qp), ("random", &random), ("exhaustive", &best)] {
        println!(
            "{name:<12} {:?} objective {:+.4} mean similarity {:+.4}",
            sel.indices,
            sel.objective,
            mean_pairwise_similarity(&emb, &sel.indices).unwrap()
        );
    }
}
