use proptest::prelude::*;

use speedkit::dataset::{
    fit_to_isl, render_prompt, BucketSpec, ByteTokenizer, ChatTemplate, Role, Sample,
    TokenizerProvider, Turn, WhitespaceTokenizer,
};
use speedkit::metrics::{pareto_frontier, theoretical_al, vocab_coverage, ParetoPoint};
use speedkit::mock::{emitted_distribution, sample_step_with};

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-z]{1,8}", 0..60).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn bucketing_hits_target_bytes(text in "[ -~]{0,300}", target in 18usize..200) {
        let tok = ByteTokenizer;
        let spec = BucketSpec::with_default_suffix(target, &tok).unwrap();
        let s = Sample::single_turn("p", "c", text.clone());
        let out = fit_to_isl(&s, &spec, &tok).unwrap();
        let got = out.flattened_text();
        prop_assert_eq!(tok.count(&got), target);
        // truncation keeps a prefix; padding keeps the whole original
        let keep = text.len().min(target);
        prop_assert_eq!(&got.as_bytes()[..keep], &text.as_bytes()[..keep]);
        prop_assert_eq!(fit_to_isl(&out, &spec, &tok).unwrap(), out);
    }

    #[test]
    fn bucketing_hits_target_words(text in words(), target in 4usize..120) {
        let tok = WhitespaceTokenizer::new();
        let spec = BucketSpec::with_default_suffix(target, &tok).unwrap();
        let s = Sample::single_turn("p", "c", text);
        let out = fit_to_isl(&s, &spec, &tok).unwrap();
        prop_assert_eq!(tok.count(&out.flattened_text()), target);
        prop_assert_eq!(fit_to_isl(&out, &spec, &tok).unwrap(), out);
    }

    #[test]
    fn multiturn_flattens_to_target(a in words(), b in words(), c in words(), target in 18usize..100) {
        let tok = ByteTokenizer;
        let spec = BucketSpec::with_default_suffix(target, &tok).unwrap();
        let mut s = Sample::single_turn("m", "c", a);
        s.turns.push(Turn::assistant(b));
        s.turns.push(Turn::user(c));
        s.multiturn = true;
        let out = fit_to_isl(&s, &spec, &tok).unwrap();
        prop_assert_eq!(out.turns.len(), 1);
        prop_assert_eq!(out.turns[0].role, Role::User);
        prop_assert_eq!(tok.count(&out.flattened_text()), target);
    }

    #[test]
    fn rendering_is_deterministic(text in words()) {
        let tpl = ChatTemplate::identity().with_wrapper(Role::User, "<u>", "</u>");
        let s = Sample::single_turn("r", "c", text);
        let a = render_prompt(&s, &tpl, &ByteTokenizer).unwrap();
        let b = render_prompt(&s.clone(), &tpl.clone(), &ByteTokenizer).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn pareto_matches_quadratic_filter(
        raw in prop::collection::vec((1u32..20, 1u32..20), 1..80)
    ) {
        let points: Vec<ParetoPoint> = raw
            .iter()
            .enumerate()
            .map(|(i, &(u, o))| ParetoPoint::new(i + 1, f64::from(u), f64::from(o)))
            .collect();
        let front = pareto_frontier(&points);
        prop_assert_eq!(pareto_frontier(&front), front.clone());
        for p in &front {
            prop_assert!(!points.iter().any(|q| q.dominates(p)));
        }
        for p in &points {
            let on_front = front.iter().any(|f| f.user_tps == p.user_tps && f.output_tps == p.output_tps);
            let dominated = points.iter().any(|q| q.dominates(p));
            prop_assert_eq!(on_front, !dominated);
        }
        prop_assert!(front.windows(2).all(|w| w[0].user_tps < w[1].user_tps && w[0].output_tps > w[1].output_tps));
    }

    #[test]
    fn coverage_is_monotone_in_k(
        reference in prop::collection::vec(0u32..40, 1..300),
        test in prop::collection::vec(0u32..50, 1..100),
    ) {
        let test = vec![("t".to_string(), test)];
        let mut prev = 0.0;
        for k in 1..=45 {
            let f = vocab_coverage(&reference, &test, k).unwrap().covered_fraction;
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!(f >= prev);
            prev = f;
        }
    }

    #[test]
    fn al_is_bounded(ar in prop::collection::vec(0.0f64..=1.0, 0..8)) {
        let al = theoretical_al(&ar).unwrap();
        prop_assert!(al >= 1.0 && al <= ar.len() as f64 + 1.0 + 1e-12);
    }
}

/// Pearson chi-square of 10^5 mock steps against the closed-form emitted
/// distribution.
#[test]
fn mock_steps_follow_the_acceptance_model() {
    use rand::SeedableRng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    let ar = [0.8, 0.6, 0.4];
    let n = 100_000;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20_240_501);
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[sample_step_with(&ar, &mut rng).emitted - 1] += 1;
    }
    let expected = emitted_distribution(&ar);
    let stat: f64 = counts
        .iter()
        .zip(&expected)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new(3.0).unwrap().cdf(stat);
    assert!(p_value > 0.001, "chi2 {stat}, p {p_value}, counts {counts:?}");
}
