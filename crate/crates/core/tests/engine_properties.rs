use proptest::prelude::*;

use ksn_core::engine::{run_assessment, AssessmentSpec, RecordedOracle};
use ksn_core::model::{NetworkArchitecture, NetworkParameters};
use ksn_core::ontology::{KnowledgeState, SkillAssessment};
use ksn_core::seed::rng_from_seed;
use ksn_core::strategies::{SessionConfig, StrategyKind, UncertaintyMeasure};

fn strategy(i: usize) -> StrategyKind {
    match i % 5 {
        0 => StrategyKind::Random,
        1 => StrategyKind::MaxUncertainty,
        2 => StrategyKind::ExpectedDescent { measure: UncertaintyMeasure::Ksue, candidate_cap: None },
        3 => StrategyKind::ExpectedDescent { measure: UncertaintyMeasure::Residual, candidate_cap: Some(2) },
        _ => StrategyKind::Hybrid { top_k: 3, measure: UncertaintyMeasure::Residual },
    }
}

fn random_net(n: usize, seed: u64) -> NetworkParameters {
    let arch = NetworkArchitecture::with_hidden(n, &[n + 2]).unwrap();
    NetworkParameters::init(&arch, 3.0, &mut rng_from_seed(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn answers_are_reproduced_and_bounded(
        bits in prop::collection::vec(any::<bool>(), 1..12),
        which in 0usize..5,
        net_seed in any::<u64>(),
        run_seed in any::<u64>(),
    ) {
        let n = bits.len();
        let model = random_net(n, net_seed);
        let truth = KnowledgeState::from_bools(&bits);
        let spec = AssessmentSpec::full(strategy(which), 0.1, 0.5, run_seed);
        let t = run_assessment(&model, &mut RecordedOracle::new(truth), spec.clone(), None).unwrap();
        prop_assert!(t.questions() <= n);
        let summary = t.summary.as_ref().unwrap();
        for s in 0..n {
            if summary.assessment.get(s).is_assessed() {
                prop_assert_eq!(summary.predicted[s], bits[s]);
            }
        }
        let again = run_assessment(&model, &mut RecordedOracle::new(KnowledgeState::from_bools(&bits)), spec, None).unwrap();
        prop_assert_eq!(t, again);
    }

    #[test]
    fn session_plans_are_learnable_prefixes(
        bits in prop::collection::vec(any::<bool>(), 1..10),
        length in 1usize..4,
        exploration in 0.0f64..=1.0,
        net_seed in any::<u64>(),
    ) {
        let n = bits.len();
        let model = random_net(n, net_seed);
        let session = SessionConfig { length, exploration, epsilon: 0.1, rng_seed: net_seed ^ 1 };
        let (plan, t) = ksn_core::engine::run_session_assessment(
            &model,
            &mut RecordedOracle::new(KnowledgeState::from_bools(&bits)),
            &session,
            StrategyKind::default(),
            0.5,
            None,
        )
        .unwrap();
        prop_assert!(plan.len() <= length);
        prop_assert!(plan.windows(2).all(|w| w[0] < w[1]));
        let summary = t.summary.unwrap();
        for &p in &plan {
            prop_assert!(summary.probabilities[p] <= 0.1);
            for j in 0..p {
                let pj = summary.probabilities[j];
                prop_assert!(pj <= 0.1 || pj >= 0.9);
            }
        }
        for step in &t.steps {
            prop_assert!(step.explored.is_some());
            prop_assert!(step.candidates.contains(&step.skill));
        }
        prop_assert!(summary.assessment.values().iter().filter(|a| **a != SkillAssessment::Unassessed).count() == t.steps.len());
    }
}
