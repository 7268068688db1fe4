//! Generates the six-class synthetic corpus, trains the default CNN with
//! Adam and SGD on a 70/30 split and prints the learning curves.
//!
//! cargo run --release --example train_cnn -- [iters]

use debris_edge::classifiers::confusion_matrix;
use debris_edge::experiments::{generate_dataset, GenSpec, MANIFEST_FILE};
use debris_edge::imaging::DEFAULT_TARGET_FRACTION;
use debris_edge::neuralnet::{
    build_network, split_indices, train, Dataset, NetworkSpec, OptimizerConfig, SolverKind,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let iters: usize = std::env::args().nth(1).map_or(Ok(300), |s| s.parse())?;
    let dir = std::env::temp_dir().join("debris_edge_train_cnn");
    let spec = GenSpec {
        seed: 7,
        ..GenSpec::default()
    };
    generate_dataset(&spec, &dir)?;
    let mut data = Dataset::from_manifest(dir.join(MANIFEST_FILE), Some(spec.classes.clone()))?;
    data.focus_fraction = Some(DEFAULT_TARGET_FRACTION);
    let all = data.materialize([64, 64, 1])?;
    let (tr, te) = split_indices(all.len(), 0.7, 7)?;
    let (train_set, test_set) = (all.subset(&tr), all.subset(&te));
    println!("train {} / test {}", train_set.len(), test_set.len());

    let net_spec = NetworkSpec::default_classifier([64, 64, 1], data.classes());
    for kind in [SolverKind::Adam, SolverKind::Sgd] {
        let mut opt = match kind {
            SolverKind::Adam => OptimizerConfig::adam(1e-3),
            SolverKind::Sgd => OptimizerConfig::sgd(0.01, 0.9),
        };
        opt.max_iters = iters;
        opt.eval_interval = 50;
        opt.seed = 7;
        opt.early_stop_patience = 0;
        let mut net = build_network(&net_spec, 7)?;
        let hist = train(&mut net, &train_set, &test_set, &opt)?;
        println!("{kind}: {:.1} s", hist.wall_time_ms / 1000.0);
        print!("{}", hist.to_csv());
        let predicted = net.forward(&test_set.inputs)?.argmax_rows();
        let cm = confusion_matrix(&test_set.labels, &predicted, data.classes())?;
        print!("{}", cm.to_csv(&data.class_names));
    }
    Ok(())
}
