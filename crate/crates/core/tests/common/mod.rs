#![allow(dead_code)]

use mflq_core::linalg::{rel_diff, Matrix};
use mflq_core::riccati::RiccatiSolution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_rel(a: &[Matrix], b: &[Matrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| rel_diff(x, y)).fold(0.0, f64::max)
}

pub fn solution_rel(a: &RiccatiSolution, b: &RiccatiSolution) -> f64 {
    [
        max_rel(&a.sx, &b.sx),
        max_rel(&a.tx, &b.tx),
        max_rel(&a.sxy, &b.sxy),
        max_rel(&a.txy, &b.txy),
        max_rel(&a.sy, &b.sy),
        max_rel(&a.ty, &b.ty),
        max_rel(&a.w1, &b.w1),
        max_rel(&a.w2, &b.w2),
        max_rel(&a.h1, &b.h1),
        max_rel(&a.h2, &b.h2),
        max_rel(&a.h3, &b.h3),
        max_rel(&a.h4, &b.h4),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub fn scalar(v: f64) -> Matrix {
    Matrix::from_element(1, 1, v)
}
