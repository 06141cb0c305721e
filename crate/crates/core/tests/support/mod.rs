//! Shared fixtures and oracles for integration tests.
//!
//! The reference forward pass here is written against the public layer
//! accessors only, independent of the library's own trace/backprop code.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tinysearch::simnet::{bce_loss, Activation, Gradients, Mode, PairExample, SimilarityModel};
use tinysearch::{hash_embed, Embedding};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

fn act(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Relu => z.max(0.0),
        Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        Activation::None => z,
    }
}

/// Naive inference-mode forward pass. Also returns the smallest |pre-activation|
/// over ReLU units, which tells how close the point is to a kink.
pub fn reference_forward(model: &SimilarityModel, input: &[f64]) -> (f64, f64) {
    let mut x = input.to_vec();
    let mut closest_kink = f64::INFINITY;
    for layer in model.layers() {
        let mut next = vec![0.0; layer.out_width()];
        for (j, out) in next.iter_mut().enumerate() {
            let mut z = layer.bias()[j];
            for (i, xi) in x.iter().enumerate() {
                z += xi * layer.weight(i, j);
            }
            if layer.activation() == Activation::Relu {
                closest_kink = closest_kink.min(z.abs());
            }
            *out = act(layer.activation(), z);
        }
        x = next;
    }
    (x[0], closest_kink)
}

pub fn reference_loss(model: &SimilarityModel, batch: &[PairExample]) -> f64 {
    batch
        .iter()
        .map(|ex| bce_loss(reference_forward(model, ex.input()).0, f64::from(ex.label())))
        .sum::<f64>()
        / batch.len() as f64
}

pub fn closest_kink(model: &SimilarityModel, batch: &[PairExample]) -> f64 {
    batch
        .iter()
        .map(|ex| reference_forward(model, ex.input()).1)
        .fold(f64::INFINITY, f64::min)
}

/// Central-difference gradient of the reference loss for every parameter.
pub fn numeric_gradient(model: &SimilarityModel, batch: &[PairExample], step: f64) -> Gradients {
    let mut grads = Gradients::zeros_like(model);
    let mut probe = model.clone();
    for l in 0..model.layers().len() {
        for i in 0..model.layers()[l].weights().len() {
            let orig = probe.layers()[l].weights()[i];
            probe.layers_mut()[l].weights_mut()[i] = orig + step;
            let up = reference_loss(&probe, batch);
            probe.layers_mut()[l].weights_mut()[i] = orig - step;
            let down = reference_loss(&probe, batch);
            probe.layers_mut()[l].weights_mut()[i] = orig;
            grads.layers[l].weights[i] = (up - down) / (2.0 * step);
        }
        for i in 0..model.layers()[l].bias().len() {
            let orig = probe.layers()[l].bias()[i];
            probe.layers_mut()[l].bias_mut()[i] = orig + step;
            let up = reference_loss(&probe, batch);
            probe.layers_mut()[l].bias_mut()[i] = orig - step;
            let down = reference_loss(&probe, batch);
            probe.layers_mut()[l].bias_mut()[i] = orig;
            grads.layers[l].bias[i] = (up - down) / (2.0 * step);
        }
    }
    grads
}

/// Relative error with a floor on the denominator so components that are
/// both ~0 compare by absolute difference.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Largest relative error between two gradient sets.
pub fn max_relative_error(a: &Gradients, b: &Gradients) -> f64 {
    a.layers
        .iter()
        .zip(&b.layers)
        .flat_map(|(x, y)| {
            x.weights
                .iter()
                .zip(&y.weights)
                .chain(x.bias.iter().zip(&y.bias))
        })
        .map(|(p, q)| relative_error(*p, *q))
        .fold(0.0, f64::max)
}

pub fn random_embedding(rng: &mut ChaCha8Rng, dim: usize) -> Embedding {
    Embedding::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_batch(rng: &mut ChaCha8Rng, input_dim: usize, n: usize) -> Vec<PairExample> {
    (0..n)
        .map(|_| {
            let a = random_embedding(rng, input_dim);
            let b = random_embedding(rng, input_dim);
            PairExample::new(&a, &b, rng.random_range(0..=1)).unwrap()
        })
        .collect()
}

/// Runs one gradient-check draw: a fresh [8→6→4→1] model and a random batch,
/// redrawn while any ReLU sits within `margin` of its kink. Returns the worst
/// relative error.
pub fn gradient_check_draw(seed: u64, margin: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut model = SimilarityModel::new(4, &[6, 4], 0.5, rng.random()).unwrap();
        // nonzero biases so the check covers them too
        for layer in model.layers_mut() {
            for b in layer.bias_mut() {
                *b = rng.random_range(-0.3..0.3);
            }
        }
        let n = rng.random_range(1..=4);
        let batch = random_batch(&mut rng, 4, n);
        if closest_kink(&model, &batch) < margin {
            continue;
        }
        let (analytic, _) = model.backward(&batch, Mode::Infer, 0).unwrap();
        let numeric = numeric_gradient(&model, &batch, 1e-4);
        return max_relative_error(&analytic, &numeric);
    }
}

const TOPIC_WORDS: [&str; 48] = [
    "apple", "river", "mountain", "violin", "engine", "tiger", "castle", "planet", "garden",
    "copper", "window", "harbor", "lantern", "pepper", "marble", "falcon", "rocket", "meadow",
    "canyon", "puzzle", "silver", "anchor", "bamboo", "cactus", "dolphin", "ember", "forest",
    "glacier", "hammer", "island", "jungle", "kettle", "ladder", "magnet", "needle", "orchid",
    "paddle", "quartz", "saddle", "timber", "umbrella", "velvet", "walnut", "yogurt", "zephyr",
    "beacon", "cobalt", "domino",
];

/// `n` labeled pairs with mock embeddings: positives pair a phrase with a
/// reordering of itself, negatives pair phrases with no shared words.
pub fn separable_pairs(n: usize, dim: usize, offset: usize) -> Vec<PairExample> {
    let phrase = |i: usize| -> Vec<&str> {
        (0..3)
            .map(|j| TOPIC_WORDS[(i * 3 + j + offset * 7) % TOPIC_WORDS.len()])
            .collect()
    };
    (0..n)
        .map(|i| {
            let words = phrase(i);
            let a = hash_embed(&words.join(" "), dim);
            if i % 2 == 0 {
                let mut shuffled = words.clone();
                shuffled.rotate_left(1);
                shuffled.push(words[0]);
                let b = hash_embed(&shuffled.join(" "), dim);
                PairExample::new(&a, &b, 1).unwrap()
            } else {
                let other = phrase(i + 5);
                let b = hash_embed(&other.join(" "), dim);
                PairExample::new(&a, &b, 0).unwrap()
            }
        })
        .collect()
}
