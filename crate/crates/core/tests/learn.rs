use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use speckle_core::learn::*;

fn check_arch() -> Architecture {
    Architecture {
        input: [2, 7, 6],
        layers: vec![
            LayerSpec::Conv {
                out_channels: 3,
                kernel: 3,
                stride: 1,
                activation: Activation::Relu,
            },
            LayerSpec::Conv {
                out_channels: 4,
                kernel: 3,
                stride: 2,
                activation: Activation::None,
            },
            LayerSpec::Dense {
                width: 12,
                activation: Activation::Relu,
            },
            LayerSpec::Dense {
                width: 7,
                activation: Activation::None,
            },
            LayerSpec::Dense {
                width: CLASSES,
                activation: Activation::None,
            },
        ],
    }
}

#[test]
fn gradients_match_central_differences() {
    let arch = check_arch();
    let mut params = init_network::<f64>(&arch, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for l in &mut params.layers {
        l.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.1..0.1));
    }
    let n = 5;
    let x: Vec<f64> = (0..n * arch.input_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..10)).collect();
    let (_, grads) = loss_and_grad(&params, &x, &y).unwrap();

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let layer = k % params.layers.len();
        let in_bias = k % 3 == 0;
        let len = if in_bias { params.layers[layer].bias.len() } else { params.layers[layer].weights.len() };
        let i = rng.gen_range(0..len);
        let probe = |delta: f64| {
            let mut p = params.clone();
            let slot = if in_bias { &mut p.layers[layer].bias[i] } else { &mut p.layers[layer].weights[i] };
            *slot += delta;
            loss_and_grad(&p, &x, &y).unwrap().0
        };
        let numeric = (probe(h) - probe(-h)) / (2.0 * h);
        let analytic = if in_bias { grads[layer].bias[i] } else { grads[layer].weights[i] };
        let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    assert!(worst < 1e-4, "max relative error {worst}");
}

fn random_examples(n: usize, len: usize, seed: u64) -> Examples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = (0..n * len).map(|_| rng.gen_range(0.0..1.0)).collect();
    let y = (0..n).map(|i| (i % 10) as u8).collect();
    Examples::new(len, x, y, vec![0; n]).unwrap()
}

#[test]
fn memorizes_a_small_random_set() {
    let set = random_examples(20, 16, 1);
    let arch = Architecture::mlp(4, 4, 64);
    let cfg = TrainConfig {
        epochs: 300,
        batch_size: 5,
        learning_rate: 0.05,
        patience: 0,
        ..TrainConfig::default()
    };
    let out = train(&init_network(&arch, 2).unwrap(), &set, &set, &cfg).unwrap();
    assert_eq!(evaluate(&out.params, &set).unwrap().accuracy, 1.0);
}

#[test]
fn untrained_network_is_near_chance() {
    let set = random_examples(2000, 16, 4);
    let params = init_network::<f32>(&Architecture::mlp(4, 4, 32), 9).unwrap();
    let acc = evaluate(&params, &set).unwrap().accuracy;
    assert!((0.0..0.25).contains(&acc), "{acc}");
}

#[test]
fn identity_network_gives_diagonal_confusion() {
    let arch = Architecture {
        input: [1, 1, CLASSES],
        layers: vec![LayerSpec::Dense {
            width: CLASSES,
            activation: Activation::None,
        }],
    };
    let mut params = init_network::<f32>(&arch, 0).unwrap();
    let w = &mut params.layers[0].weights;
    w.iter_mut().for_each(|v| *v = 0.0);
    (0..CLASSES).for_each(|c| w[c * CLASSES + c] = 1.0);
    let n = 50;
    let labels: Vec<u8> = (0..n).map(|i| (i * 7 % 10) as u8).collect();
    let mut x = vec![0.0; n * CLASSES];
    labels.iter().enumerate().for_each(|(i, &l)| x[i * CLASSES + l as usize] = 1.0);
    let r = evaluate(&params, &Examples::new(CLASSES, x, labels.clone(), vec![0; n]).unwrap()).unwrap();
    assert_eq!(r.accuracy, 1.0);
    for a in 0..CLASSES {
        for b in 0..CLASSES {
            let want = if a == b { labels.iter().filter(|&&l| l as usize == a).count() as u64 } else { 0 };
            assert_eq!(r.confusion[a][b], want);
        }
    }
}

#[test]
fn params_survive_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.spnn");
    let params = init_network::<f32>(&check_arch(), 17).unwrap();
    save_params(&params, &path).unwrap();
    assert_eq!(load_params(&path).unwrap(), params);
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x40;
    assert!(params_from_bytes(&bytes).is_err());
}
