//! Synthetic ensembles of noisy Gaussian-bump fields.

use std::collections::BTreeMap;

use rand::rngs::ChaCha8Rng;
use rand::{RngExt, SeedableRng};
use rayon::prelude::*;

use crate::field::{Ensemble, ScalarField};
use crate::{Error, Result};

pub const MAX_PATTERNS: usize = 5;

struct Bump {
    center: [f64; 2],
    amplitude: f64,
    width: f64,
}

const fn bump(x: f64, y: f64, amplitude: f64, width: f64) -> Bump {
    Bump {
        center: [x, y],
        amplitude,
        width,
    }
}

/// Tall, wide bumps covering the whole domain: every critical vertex,
/// including the global minimum, is isolated from its neighbours by more than
/// the noise can bridge.
const PATTERNS: [&[Bump]; MAX_PATTERNS] = [
    &[bump(0.2, 0.3, 360.0, 0.28), bump(0.8, 0.7, 280.0, 0.28)],
    &[
        bump(0.15, 0.2, 380.0, 0.26),
        bump(0.85, 0.25, 320.0, 0.26),
        bump(0.42, 0.9, 280.0, 0.26),
    ],
    &[
        bump(0.15, 0.15, 400.0, 0.28),
        bump(0.85, 0.15, 340.0, 0.28),
        bump(0.15, 0.85, 300.0, 0.28),
        bump(0.85, 0.85, 260.0, 0.28),
    ],
    &[bump(0.25, 0.75, 340.0, 0.28), bump(0.8, 0.25, 300.0, 0.28)],
    &[
        bump(0.5, 0.15, 360.0, 0.26),
        bump(0.15, 0.8, 330.0, 0.26),
        bump(0.85, 0.8, 290.0, 0.26),
    ],
];

/// Number of bumps in each pattern layout.
pub fn pattern_bump_count(pattern: usize) -> Option<usize> {
    PATTERNS.get(pattern).map(|p| p.len())
}

fn normalized(i: usize, n: usize) -> f64 {
    if n > 1 {
        i as f64 / (n - 1) as f64
    } else {
        0.5
    }
}

fn clean_value(pattern: &[Bump], x: f64, y: f64) -> f64 {
    pattern
        .iter()
        .map(|b| {
            let dx = x - b.center[0];
            let dy = y - b.center[1];
            b.amplitude * (-(dx * dx + dy * dy) / (2.0 * b.width * b.width)).exp()
        })
        .sum()
}

/// Member `i` follows pattern `i % n_patterns` and carries i.i.d. noise drawn
/// uniformly from `[-noise_sigma, noise_sigma]`.
pub fn generate_gaussians_ensemble(
    n_members: usize,
    n_patterns: usize,
    dims: [usize; 3],
    noise_sigma: f64,
    seed: u64,
) -> Result<Ensemble> {
    if !(1..=MAX_PATTERNS).contains(&n_patterns) {
        return Err(Error::InvalidParameter(format!(
            "n_patterns must be in 1..={MAX_PATTERNS}, got {n_patterns}"
        )));
    }
    if n_members < n_patterns {
        return Err(Error::InvalidParameter(format!(
            "n_members ({n_members}) must be at least n_patterns ({n_patterns})"
        )));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise_sigma must be finite and >= 0, got {noise_sigma}"
        )));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidParameter(format!(
            "grid dims must be positive, got {dims:?}"
        )));
    }
    let [nx, ny, nz] = dims;
    let clean: Vec<Vec<f64>> = PATTERNS[..n_patterns]
        .iter()
        .map(|pattern| {
            let mut values = Vec::with_capacity(nx * ny * nz);
            for _ in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        values.push(clean_value(pattern, normalized(i, nx), normalized(j, ny)));
                    }
                }
            }
            values
        })
        .collect();

    let members = (0..n_members)
        .into_par_iter()
        .map(|m| {
            let mut values = clean[m % n_patterns].clone();
            if noise_sigma > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(m as u64);
                for v in &mut values {
                    *v += rng.random_range(-noise_sigma..=noise_sigma);
                }
            }
            ScalarField::from_values(format!("member_{m:04}"), dims, values)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut metadata = BTreeMap::new();
    metadata.insert("generator".into(), "gaussians".into());
    metadata.insert("n_members".into(), n_members.to_string());
    metadata.insert("n_patterns".into(), n_patterns.to_string());
    metadata.insert("noise_sigma".into(), noise_sigma.to_string());
    metadata.insert("seed".into(), seed.to_string());
    Ensemble::new(members, metadata)
}
