//! Fit prompts of different lengths to fixed input-sequence-length buckets.
//!
//! cargo run --example bucket_prompts

use speedkit::dataset::{fit_to_isl, BucketSpec, ByteTokenizer, Sample, TokenizerProvider, WhitespaceTokenizer};

fn main() {
    let samples = [
        Sample::single_turn("short", "qa", "Summarize the plot of Hamlet."),
        Sample::single_turn("long", "qa", "Explain the proof step by step. ".repeat(20)),
    ];
    let tokenizers: [&dyn TokenizerProvider; 2] = [&ByteTokenizer, &WhitespaceTokenizer::new()];
    for tok in tokenizers {
        for isl in [32, 64] {
            let spec = BucketSpec::with_default_suffix(isl, tok).unwrap();
            for s in &samples {
                let fitted = fit_to_isl(s, &spec, tok).unwrap();
                let text = fitted.flattened_text();
                let preview: String = text.chars().take(48).collect();
                println!(
                    "{:<10} {:<6} -> {} tokens: {preview:?}...",
                    tok.tokenizer_id(),
                    s.id,
                    tok.count(&text)
                );
            }
        }
    }
}
