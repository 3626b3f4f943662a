//! Shared generators and oracles for the integration suites.
#![allow(dead_code)]

pub mod oracle;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use robustmd_core::measures::{Grid, ValueFunction};

/// Right-continuous step function with jumps at least `gap` cells apart,
/// kept `margin` cells away from every index in `avoid`. Consecutive pieces
/// differ by at least 0.1.
pub fn step_function(
    rng: &mut ChaCha8Rng,
    grid: &Grid,
    gap: usize,
    margin: usize,
    avoid: &[usize],
) -> (ValueFunction, Vec<usize>) {
    let n = grid.len();
    let mut jumps = Vec::new();
    let mut i = margin + rng.gen_range(0..gap);
    while i + margin < n {
        if avoid.iter().all(|&a| i.abs_diff(a) >= margin) {
            jumps.push(i);
            i += gap + rng.gen_range(0..gap);
        } else {
            i += 1;
        }
    }
    (piecewise(rng, grid, &jumps), jumps)
}

/// Step function jumping exactly at `jumps`.
pub fn piecewise(rng: &mut ChaCha8Rng, grid: &Grid, jumps: &[usize]) -> ValueFunction {
    let mut level: f64 = rng.gen_range(-1.0..1.0);
    let mut values = Vec::with_capacity(grid.len());
    let mut next = jumps.iter().peekable();
    for i in 0..grid.len() {
        if next.peek() == Some(&&i) {
            next.next();
            let step = rng.gen_range(0.1..1.0);
            level = if level > 0.5 || (level > -0.5 && rng.gen_bool(0.5)) {
                level - step
            } else {
                level + step
            };
        }
        values.push(level);
    }
    ValueFunction::new(grid, values).unwrap()
}
