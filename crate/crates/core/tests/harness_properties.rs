use induct_core::credal::is_probabilistic;
use induct_core::harness::{run_experiment, ExperimentConfig, ModelSpec};
use induct_core::{Forecast, UpdateRule};

fn gauss(mu: f64, sigma: f64) -> Forecast {
    Forecast::Gaussian { mu, sigma }
}

fn config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        seed,
        truth: gauss(0.0, 1.0),
        models: vec![
            ModelSpec {
                label: "a".into(),
                forecast: gauss(0.0, 1.0),
            },
            ModelSpec {
                label: "b".into(),
                forecast: gauss(0.8, 1.5),
            },
            ModelSpec {
                label: "c".into(),
                forecast: gauss(-2.0, 0.5),
            },
            ModelSpec {
                label: "d".into(),
                forecast: gauss(3.0, 1.0),
            },
        ],
        horizon: 40,
        rules: vec![
            UpdateRule::Inferential,
            UpdateRule::Predictive,
            UpdateRule::GeneralBayes { learning_rate: 2.0 },
        ],
        a: -1.0,
        likelihood_floor: 1e-300,
        replications: 6,
        mc_samples: None,
    }
}

#[test]
fn every_recorded_posterior_is_probabilistic() {
    for seed in 0..5 {
        let res = run_experiment(&config(seed)).unwrap();
        for run in &res.runs {
            for step in &run.steps {
                assert!(
                    is_probabilistic(&step.posterior, 1e-9).unwrap(),
                    "{} rep {} t {}: {:?}",
                    run.rule,
                    run.replication,
                    step.t,
                    step.posterior
                );
            }
        }
    }
}

#[test]
fn inferential_never_zeroes_while_predictive_does() {
    let res = run_experiment(&config(1)).unwrap();
    for run in res.runs_for("inferential") {
        assert!(run
            .steps
            .iter()
            .all(|s| s.posterior.iter().all(|&v| v > 0.0)));
    }
    let any_zero = res
        .runs_for("predictive")
        .any(|run| run.steps.iter().any(|s| s.posterior.contains(&0.0)));
    assert!(any_zero);
    let far = res
        .summaries
        .iter()
        .find(|s| s.rule == "predictive")
        .unwrap();
    assert_eq!(far.final_zero_fraction[3], 1.0);
}

#[test]
fn summaries_carry_standard_errors() {
    let res = run_experiment(&config(2)).unwrap();
    assert_eq!(res.summaries.len(), 3);
    for s in &res.summaries {
        assert!(s.mean_mixture_crps > 0.0);
        assert!(s.se_mixture_crps.unwrap() > 0.0);
        let total: f64 = s.final_posterior_mean.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    let mut single = config(2);
    single.replications = 1;
    let res = run_experiment(&single).unwrap();
    assert!(res.summaries.iter().all(|s| s.se_mixture_crps.is_none()));
}

#[test]
fn first_mixture_score_uses_the_uniform_prior() {
    let cfg = config(3);
    let res = run_experiment(&cfg).unwrap();
    let forecasts: Vec<Forecast> = cfg.models.iter().map(|m| m.forecast.clone()).collect();
    for run in &res.runs {
        let first = &run.steps[0];
        let want =
            induct_core::evidence::mixture_crps(&[0.25; 4], &forecasts, first.observation).unwrap();
        assert_eq!(first.mixture_crps, want);
    }
}
