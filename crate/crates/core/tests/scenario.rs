use restoro_core::network::synth::{generate, SynthConfig};
use restoro_core::scenario::{
    build_dataset, generate_set, write_dataset, DamageModel, Encoding, LabelConfig, ScenarioSetConfig,
};
use restoro_core::solver::SolverMode;
use restoro_core::{Network, SolverLimits};

fn dataset_bytes(threads: usize, net: &Network) -> Vec<u8> {
    let set = generate_set(
        net,
        &DamageModel::default(),
        &ScenarioSetConfig {
            magnitude: 7,
            originals: 12,
            augment_per_original: 2,
            flips: (1, 5),
            seed: 77,
        },
    )
    .unwrap();
    let cfg = LabelConfig {
        resource_cap: 3,
        t_max: 10,
        mode: SolverMode::Iterative,
        limits: SolverLimits::default(),
        encoding: Encoding::DamagedIs1,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let out = pool.install(|| build_dataset(net, &set, &cfg)).unwrap();
    out.dataset.check(net.n_nodes()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    write_dataset(&out.dataset, &p).unwrap();
    std::fs::read(p).unwrap()
}

#[test]
fn dataset_bytes_do_not_depend_on_thread_count() {
    let net = Network::new(generate(&SynthConfig::with_sizes(&[12, 6, 12], 5))).unwrap();
    assert_eq!(dataset_bytes(1, &net), dataset_bytes(3, &net));
}
