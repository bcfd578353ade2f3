mod oracles;

use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;
use restoro_core::scenario::{Dataset, Encoding, Provenance, Record};
use restoro_core::seed;
use restoro_core::surrogate::{
    ar_accuracy, init_model, loss_and_gradients, predict_encoded, read_model, train, write_model, Activation,
    Prediction, TrainConfig,
};

fn to_array(rows: &[Vec<f64>]) -> Array2<f64> {
    Array2::from_shape_fn((rows.len(), rows[0].len()), |(i, j)| rows[i][j])
}

#[test]
fn backprop_matches_central_differences() {
    for seed in 0..12 {
        let (model, xs, ys) = oracles::random_small_model(seed);
        let (mse, grads) = loss_and_gradients(&model, to_array(&xs).view(), to_array(&ys).view(), None).unwrap();
        assert!((mse - oracles::reference_mse(&model, &xs, &ys)).abs() <= 1e-12 * mse.max(1.0));
        let (fw, fb) = oracles::finite_difference_gradients(&model, &xs, &ys, 1e-4);
        for l in 0..model.weights.len() {
            for (a, b) in grads.weights[l].iter().zip(&fw[l]) {
                assert!(oracles::relative_error(*a, *b) <= 1e-4, "seed {seed}: {a} vs {b}");
            }
            for (a, b) in grads.biases[l].iter().zip(&fb[l]) {
                assert!(oracles::relative_error(*a, *b) <= 1e-4, "seed {seed}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn forward_matches_loop_reference() {
    for seed in 0..10 {
        let (model, xs, _) = oracles::random_small_model(seed);
        for x in &xs {
            let y = model.forward(x).unwrap();
            let r = oracles::reference_forward(&model, x);
            assert!(y.iter().zip(&r).all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs().max(1.0)));
        }
    }
}

fn dataset(seed: u64, n: usize, count: usize) -> Dataset {
    let mut rng = seed::rng(seed);
    let records = (0..count)
        .map(|_| {
            let input: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.3))).collect();
            let target = input.iter().map(|&b| if b == 1 { rng.random_range(1..=6) } else { 0 }).collect();
            Record {
                input,
                target,
                resource_cap: 3,
                magnitude: Some(7),
                provenance: Provenance::Original,
            }
        })
        .collect();
    Dataset {
        encoding: Encoding::DamagedIs1,
        records,
    }
}

#[test]
fn training_twice_gives_identical_model_files() {
    let ds = dataset(1, 10, 60);
    let m = init_model(&[10, 12, 10], Activation::Relu, 5).unwrap();
    let cfg = TrainConfig {
        epochs: 15,
        seed: 9,
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.txt"), dir.path().join("b.txt")];
    for p in &paths {
        let (trained, history) = train(&m, &ds, &cfg).unwrap();
        assert_eq!(history.train_mse.len(), history.validation_mse.len());
        write_model(&trained, p).unwrap();
    }
    let bytes: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(read_model(&paths[0]).unwrap(), train(&m, &ds, &cfg).unwrap().0);
}

#[test]
fn training_reduces_loss() {
    let ds = dataset(2, 10, 200);
    let m = init_model(&[10, 32, 10], Activation::Relu, 1).unwrap();
    let (_, h) = train(&m, &ds, &TrainConfig { epochs: 40, ..Default::default() }).unwrap();
    assert!(h.train_mse.last().unwrap() < &h.train_mse[0]);
}

fn prediction_strategy() -> impl Strategy<Value = Vec<(Prediction, Prediction)>> {
    proptest::collection::vec(
        proptest::collection::btree_map(0usize..30, (1u32..=20, 1u32..=20), 0..10),
        1..8,
    )
    .prop_map(|sets| {
        sets.into_iter()
            .map(|m| {
                let p = m.iter().map(|(&k, &(a, _))| (k, a)).collect();
                let t = m.iter().map(|(&k, &(_, b))| (k, b)).collect();
                (p, t)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn ar_accuracy_is_monotone_and_saturates(pairs in prediction_strategy()) {
        let (p, t): (Vec<Prediction>, Vec<Prediction>) = pairs.into_iter().unzip();
        if t.iter().all(|m| m.is_empty()) {
            prop_assert!(ar_accuracy(&p, &t, 0).is_err());
            return Ok(());
        }
        let acc: Vec<f64> = (0..=19).map(|r| ar_accuracy(&p, &t, r).unwrap()).collect();
        prop_assert!(acc.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(acc.iter().all(|a| (0.0..=1.0).contains(a)));
        prop_assert_eq!(acc[19], 1.0);
    }

    #[test]
    fn predictions_only_cover_damaged_nodes(seed in 0u64..200, bits in proptest::collection::vec(0u8..=1, 12), t_max in 1u32..25) {
        let mut m = init_model(&[12, 6, 12], Activation::Relu, seed).unwrap();
        m.t_max = t_max;
        for b in &mut m.biases {
            b.fill(seed as f64 - 100.0);
        }
        let pred = predict_encoded(&m, &bits).unwrap();
        for (i, &b) in bits.iter().enumerate() {
            prop_assert_eq!(pred.contains_key(&i), b == 1);
        }
        prop_assert!(pred.values().all(|&s| (1..=t_max).contains(&s)));
    }
}
