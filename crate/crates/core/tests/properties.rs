mod common;

use common::props;
use proptest::prelude::*;
use quill::argmax;
use quill::artifact::{ModelArtifact, ModelFamily, TrainedModel};
use quill::baselines::Classifier;
use quill::neuralnet::{init_network, Input, NetworkSpec};
use quill::textprep::{tokenize, TokenizerConfig, Vocabulary};
use quill::SparseBinaryVector;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn binary_weighting_is_idempotent(input in props::idempotence_input()) {
        props::binary_idempotence(input)?;
    }

    #[test]
    fn vector_dimension_matches_vocabulary(input in props::dimension_input()) {
        props::vector_dimension(input)?;
    }

    #[test]
    fn split_is_a_seeded_partition(input in props::split_input()) {
        props::split_partition(input)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn tokenizing_tokens_again_is_stable(text in "[ -~]{0,80}") {
        let config = TokenizerConfig::default();
        let once = tokenize(&text, &config);
        prop_assert_eq!(tokenize(&once.join(" "), &config), once.clone());
        for t in &once {
            prop_assert!(t.chars().all(|c| c.is_alphanumeric() && !c.is_uppercase()));
        }
    }

    #[test]
    fn vocabulary_text_round_trips(words in props::words(50)) {
        let vocab = Vocabulary::from_words(words);
        prop_assert_eq!(Vocabulary::parse(&vocab.to_text()).unwrap(), vocab);
    }

    #[test]
    fn argmax_ignores_monotone_rescaling(scores in prop::collection::vec(-1e3f64..1e3, 1..8), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let scaled: Vec<f64> = scores.iter().map(|s| a * s + b).collect();
        let i = argmax(&scores);
        prop_assert!(scores.iter().all(|&s| s <= scores[i]));
        prop_assert!(scores[..i].iter().all(|&s| s < scores[i]));
        prop_assert_eq!(scaled[argmax(&scaled)], scaled[i]);
    }

    #[test]
    fn sparse_and_dense_forward_agree(dim in 1usize..30, bits in any::<u32>(), seed in any::<u64>(), two in any::<bool>()) {
        let spec = if two { NetworkSpec::model2(dim, seed) } else { NetworkSpec::model1(dim, seed) };
        let model = init_network::<f64>(&spec).unwrap();
        let idx: Vec<u32> = (0..dim as u32).filter(|i| bits >> (i % 32) & 1 == 1).collect();
        let x = SparseBinaryVector::new(idx, dim).unwrap();
        let dense = x.to_dense();
        let a = model.forward(&x).unwrap();
        let b = model.forward(Input::Dense(&dense[..])).unwrap();
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn network_artifacts_round_trip(dim in 1usize..40, seed in any::<u64>(), bits in any::<u64>()) {
        let model = init_network::<f32>(&NetworkSpec::model2(dim, seed)).unwrap();
        let artifact = ModelArtifact::new(ModelFamily::Model2, TrainedModel::Network(model));
        let bytes = artifact.to_bytes().unwrap();
        let back = ModelArtifact::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
        let idx: Vec<u32> = (0..dim as u32).filter(|i| bits >> (i % 64) & 1 == 1).collect();
        let x = SparseBinaryVector::new(idx, dim).unwrap();
        prop_assert_eq!(back.model.scores(&x).unwrap(), artifact.model.scores(&x).unwrap());
    }
}
