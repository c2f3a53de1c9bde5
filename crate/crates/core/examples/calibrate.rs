//! Calibration sweep behind the generator defaults.
//!
//! Runs the benchmark-pattern pipelines (baseline forest vs pretend-target)
//! over the synthetic signal variants, the site-classification equalization
//! check, and the regression dependence/independence scenarios, printing the
//! numbers the acceptance thresholds rely on. Used once to pin the effect
//! constants in `synthgen`; rerun with `cargo run --release -p prettyharm
//! --example calibrate` after touching the generator.

use std::collections::BTreeMap;

use prettyharm::combat::{self, CombatConfig};
use prettyharm::metrics;
use prettyharm::predictors::{self, ForestConfig, PredictorSpec, RidgeConfig, TargetsRef};
use prettyharm::pretty::PrettyConfig;
use prettyharm::schemes::{compare_schemes, ExperimentConfig, FoldParams, Scheme};
use prettyharm::synthgen::{
    self, DependenceSpec, GenConfig, IndependenceSpec, RegGenConfig, SignalForm, SignalKind,
};
use prettyharm::tabular::{make_folds, Dataset, TaskKind};

fn rf_cv_bacc(dataset: &Dataset, labels: &[usize], n_classes: usize, k: usize, seed: u64) -> f64 {
    let spec = PredictorSpec::RandomForestClassifier(ForestConfig::classification(seed));
    let strata: Vec<String> = labels.iter().map(|c| format!("{c}")).collect();
    let folds = prettyharm::tabular::stratified_partition(&strata, k, seed);
    let mut total = 0.0;
    for (train, test) in &folds {
        let x_train = dataset.features().select(ndarray::Axis(0), train);
        let x_test = dataset.features().select(ndarray::Axis(0), test);
        let y_train: Vec<usize> = train.iter().map(|&j| labels[j]).collect();
        let y_test: Vec<usize> = test.iter().map(|&j| labels[j]).collect();
        let model = predictors::train(
            &spec,
            x_train.view(),
            TargetsRef::Class {
                labels: &y_train,
                n_classes,
            },
        )
        .unwrap();
        let predicted = model.predict_labels(x_test.view()).unwrap();
        total += metrics::bacc(&y_test, &predicted, n_classes).unwrap();
    }
    total / folds.len() as f64
}

fn benchmark_table(seed: u64) {
    println!("== benchmark pattern (10-fold, forest baseline vs pretend-target) ==");
    for (signal, form, label) in [
        (SignalKind::TrueOnly, SignalForm::Simple, "true simple"),
        (SignalKind::TrueOnly, SignalForm::Interaction, "true interaction"),
        (SignalKind::EosOnly, SignalForm::Simple, "eos simple"),
        (SignalKind::EosOnly, SignalForm::Interaction, "eos interaction"),
    ] {
        let dataset = synthgen::generate(&GenConfig::benchmark(signal, form, seed)).unwrap();
        let folds = FoldParams {
            k: 10,
            repeats: 1,
            stratify: true,
            seed,
        };
        let baseline = ExperimentConfig {
            scheme: Scheme::Unharmonized,
            predictor: PredictorSpec::RandomForestClassifier(ForestConfig::classification(seed)),
            folds: folds.clone(),
            combat: CombatConfig::default(),
            include_covariates: false,
            positive_class: None,
        };
        let pretty = ExperimentConfig {
            scheme: Scheme::Pretty(PrettyConfig::classification(seed)),
            ..baseline.clone()
        };
        let comparison = compare_schemes(&dataset, &[baseline, pretty]).unwrap();
        println!(
            "{label:18} baseline bacc {:6.2}   pretty bacc {:6.2}",
            comparison.report("unharmonized").unwrap().aggregate["bacc"],
            comparison.report("pretty").unwrap().aggregate["bacc"],
        );
    }
}

fn site_classification(seed: u64) {
    println!("== site classification before/after target-free harmonization ==");
    let dataset =
        synthgen::generate(&GenConfig::benchmark(SignalKind::EosOnly, SignalForm::Simple, seed))
            .unwrap();
    let mut site_names: Vec<String> = dataset.sites().to_vec();
    site_names.sort();
    site_names.dedup();
    let site_labels: Vec<usize> = dataset
        .sites()
        .iter()
        .map(|s| site_names.iter().position(|t| t == s).unwrap())
        .collect();

    let raw = rf_cv_bacc(&dataset, &site_labels, site_names.len(), 5, seed);

    let config = CombatConfig {
        use_eb: false,
        ..CombatConfig::default()
    };
    let (_, harmonized) =
        combat::fit_transform(dataset.features(), dataset.sites(), None, &config).unwrap();
    let harmonized_ds = Dataset::new(
        harmonized,
        dataset.sites().to_vec(),
        dataset.target().clone(),
        None,
        dataset.feature_names().to_vec(),
        vec![],
        TaskKind::Classification { classes: vec![] },
    )
    .unwrap();
    let adjusted = rf_cv_bacc(&harmonized_ds, &site_labels, site_names.len(), 5, seed);
    println!("site bacc raw {raw:6.2}   harmonized {adjusted:6.2}");
}

fn five_scheme_configs(
    task_classification: bool,
    folds: FoldParams,
    seed: u64,
) -> Vec<ExperimentConfig> {
    let predictor = if task_classification {
        PredictorSpec::RandomForestClassifier(ForestConfig::classification(seed))
    } else {
        PredictorSpec::Ridge(RidgeConfig::default())
    };
    let pretty = if task_classification {
        PrettyConfig::classification(seed)
    } else {
        PrettyConfig::regression(seed)
    };
    [
        Scheme::Unharmonized,
        Scheme::Pretty(pretty),
        Scheme::Wdh,
        Scheme::Ttl,
        Scheme::NoTarget,
    ]
    .into_iter()
    .map(|scheme| ExperimentConfig {
        scheme,
        predictor: predictor.clone(),
        folds: folds.clone(),
        combat: CombatConfig::default(),
        include_covariates: false,
        positive_class: None,
    })
    .collect()
}

fn regression_dependence(seed: u64) {
    println!("== regression, disjoint target ranges per site ==");
    let full =
        synthgen::generate_regression(&RegGenConfig::age_like(4, 4000, seed)).unwrap();
    let mut ranges = BTreeMap::new();
    ranges.insert("site00".to_string(), (20.0, 28.0));
    ranges.insert("site01".to_string(), (42.0, 50.0));
    ranges.insert("site02".to_string(), (58.0, 66.0));
    ranges.insert("site03".to_string(), (76.0, 84.0));
    let dataset = synthgen::sample_dependence(
        &full,
        &DependenceSpec::TargetRanges {
            ranges_by_site: ranges,
        },
        seed,
    )
    .unwrap();
    println!("kept {} rows", dataset.n());
    let folds = FoldParams {
        k: 5,
        repeats: 1,
        stratify: false,
        seed,
    };
    let comparison = compare_schemes(&dataset, &five_scheme_configs(false, folds, seed)).unwrap();
    print!("{}", comparison.to_csv());
}

fn classification_independence(seed: u64) {
    println!("== classification, 50/50 classes at every site ==");
    let mut cfg = GenConfig::benchmark(SignalKind::Both, SignalForm::Simple, seed);
    cfg.n_samples = 4000;
    let full = synthgen::generate(&cfg).unwrap();
    let budgets = synthgen::max_balanced_budget(&full).unwrap();
    let dataset = synthgen::sample_independence(
        &full,
        &IndependenceSpec::ClassBalanced {
            per_site_total: budgets,
        },
        seed,
    )
    .unwrap();
    println!("kept {} rows", dataset.n());
    let folds = FoldParams {
        k: 5,
        repeats: 5,
        stratify: true,
        seed,
    };
    let comparison = compare_schemes(&dataset, &five_scheme_configs(true, folds, seed)).unwrap();
    print!("{}", comparison.to_csv());
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed = args
        .iter()
        .position(|a| a == "--seed")
        .and_then(|i| args.get(i + 1))
        .and_then(|s| s.parse().ok())
        .unwrap_or(20240731u64);
    let only = args
        .iter()
        .position(|a| a == "--only")
        .and_then(|i| args.get(i + 1))
        .cloned();

    let run = |name: &str| only.as_deref().is_none_or(|o| o == name);
    if run("benchmark") {
        benchmark_table(seed);
    }
    if run("sites") {
        site_classification(seed);
    }
    if run("regdep") {
        regression_dependence(seed);
    }
    if run("indep") {
        classification_independence(seed);
    }
}
