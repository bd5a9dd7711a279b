use cbdyn::dynamics::{evolve, EvolutionParams, OpinionVector};
use cbdyn::fitting::{
    cost, crossval, evaluate, fit_constrained, fit_free, random_assignments, CandidateSets,
    FitConfig, Model, Question, QuestionDataset,
};
use cbdyn::graph::gen_small_world;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: usize = 30;

fn candidates() -> CandidateSets {
    let nets = (0..3)
        .map(|s| gen_small_world(N, 4, 0.1, 0.77, 40 + s).unwrap())
        .collect();
    CandidateSets::new(nets, random_assignments(N, 6, 3)).unwrap()
}

/// Questions whose final state is unrelated noise, so costs are non-trivial.
fn noisy_dataset(questions: usize, seed: u64) -> QuestionDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    QuestionDataset::new(
        (0..questions)
            .map(|q| Question {
                label: format!("Q{q}"),
                initial: OpinionVector::uniform(N, &mut rng),
                last: OpinionVector::uniform(N, &mut rng),
            })
            .collect(),
    )
    .unwrap()
}

fn naive_costs(data: &QuestionDataset, cands: &CandidateSets) -> Vec<Vec<Vec<f64>>> {
    let params = EvolutionParams::default();
    cands
        .networks
        .iter()
        .map(|g| {
            cands
                .assignments
                .iter()
                .map(|a| {
                    data.questions()
                        .iter()
                        .map(|q| {
                            let y = evolve(&q.initial, g, a, &params, 50).unwrap();
                            cost(&q.last, &y).unwrap()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

#[test]
fn constrained_matches_naive_loop() {
    let data = noisy_dataset(5, 1);
    let cands = candidates();
    let table = naive_costs(&data, &cands);
    let fit = fit_constrained(&data, &cands, &FitConfig::default()).unwrap();

    let mut best = (f64::INFINITY, 0, 0);
    for (n, row) in table.iter().enumerate() {
        for (a, costs) in row.iter().enumerate() {
            let total: f64 = costs.iter().sum();
            if total < best.0 {
                best = (total, n, a);
            }
        }
    }
    assert_eq!(fit.chosen_network, best.1);
    assert_eq!(fit.chosen_assignments, vec![best.2]);
    assert_eq!(fit.total_cost, best.0);
}

#[test]
fn free_never_worse_than_constrained() {
    let cands = candidates();
    for seed in 0..4 {
        let data = noisy_dataset(6, seed);
        let free = fit_free(&data, &cands, &FitConfig::default()).unwrap();
        let con = fit_constrained(&data, &cands, &FitConfig::default()).unwrap();
        assert!(free.total_cost <= con.total_cost);
        assert_eq!(free.chosen_assignments.len(), 6);
        assert_eq!(con.chosen_assignments.len(), 1);
    }
}

#[test]
fn worker_count_does_not_change_the_result() {
    let data = noisy_dataset(4, 9);
    let cands = candidates();
    let single = FitConfig {
        workers: Some(1),
        ..FitConfig::default()
    };
    let many = FitConfig {
        workers: Some(4),
        ..FitConfig::default()
    };
    assert_eq!(
        fit_free(&data, &cands, &single).unwrap(),
        fit_free(&data, &cands, &many).unwrap()
    );
}

#[test]
fn evaluate_reproduces_fit_costs() {
    let data = noisy_dataset(4, 2);
    let cands = candidates();
    let cfg = FitConfig::default();
    let fit = fit_constrained(&data, &cands, &cfg).unwrap();
    let costs = evaluate(
        &data,
        &cands,
        &cfg,
        fit.chosen_network,
        fit.chosen_assignments[0],
    )
    .unwrap();
    assert_eq!(costs, fit.per_question_cost);
}

#[test]
fn baselines_can_be_fitted() {
    let data = noisy_dataset(4, 5);
    let cands = candidates();
    for model in [Model::Fj, Model::Fg, Model::Null] {
        let fit = fit_free(&data, &cands, &FitConfig::with_model(model)).unwrap();
        assert_eq!(fit.model, model);
        assert!(fit.total_cost.is_finite());
    }
    // Null predicts the initial state: cost is that of the raw pair
    let null = fit_constrained(&data, &cands, &FitConfig::with_model(Model::Null)).unwrap();
    let expected: f64 = data
        .questions()
        .iter()
        .map(|q| cost(&q.last, &q.initial).unwrap())
        .sum();
    assert_eq!(null.total_cost, expected);
}

#[test]
fn mismatched_population_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let data = QuestionDataset::new(vec![Question {
        label: "Q".into(),
        initial: OpinionVector::uniform(N + 1, &mut rng),
        last: OpinionVector::uniform(N + 1, &mut rng),
    }])
    .unwrap();
    assert!(fit_free(&data, &candidates(), &FitConfig::default()).is_err());
}

#[test]
fn crossval_rejects_bad_fold_counts() {
    let data = noisy_dataset(5, 0);
    let cands = candidates();
    for folds in [0, 2, 6] {
        assert!(crossval(&data, &cands, &FitConfig::default(), folds).is_err());
    }
    assert_eq!(
        crossval(&data, &cands, &FitConfig::default(), 5)
            .unwrap()
            .folds
            .len(),
        5
    );
}
