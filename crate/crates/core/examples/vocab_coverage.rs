//! How much of a test set's vocabulary falls in a reference corpus's top-K
//! tokens, per category.
//!
//! cargo run --example vocab_coverage

use speedkit::dataset::{TokenizerProvider, WhitespaceTokenizer};
use speedkit::metrics::vocab_coverage;

fn main() {
    let tok = WhitespaceTokenizer::new();
    let reference = tok.encode(
        "the cat sat on the mat the dog sat on the log a cat and a dog ran to the park",
    );
    let test = vec![
        ("chat".to_string(), tok.encode("the dog sat on a mat")),
        ("code".to_string(), tok.encode("fn main let mut x the vec")),
    ];
    for k in [1, 3, 5, 10, 20] {
        let c = vocab_coverage(&reference, &test, k).unwrap();
        let per: Vec<String> = c.per_category.iter().map(|(cat, f)| format!("{cat}={f:.2}")).collect();
        println!("K={k:<3} overall {:.3}  {}", c.covered_fraction, per.join(" "));
    }
}
