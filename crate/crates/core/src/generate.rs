//! Seeded random systems for tests and the `gen` command.
//!
//! Every generated bank owes the outside world more than it is owed inside
//! the system, so `(C l)_i < l_i` holds and the full-default shock can be
//! built; banks also start solvent.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::error::{Error, Result};
use crate::model::FinancialSystem;

/// Directed Erdős–Rényi bank block with log-normal weights.
pub fn generate_random_system(
    seed: u64,
    n_banks: usize,
    density: f64,
    weight_scale: f64,
) -> Result<FinancialSystem> {
    if n_banks == 0 {
        return Err(Error::Validation("n_banks must be at least 1".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Validation(format!(
            "density {density} outside (0, 1]"
        )));
    }
    if !(weight_scale > 0.0 && weight_scale.is_finite()) {
        return Err(Error::Validation(format!(
            "weight scale {weight_scale} must be positive"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = LogNormal::new(0.0, 1.0).expect("valid log-normal");

    let mut block = DMatrix::zeros(n_banks, n_banks);
    for i in 0..n_banks {
        for j in 0..n_banks {
            if i != j && rng.gen_bool(density) {
                block[(i, j)] = weight_scale * weights.sample(&mut rng);
            }
        }
    }
    finish(block, &mut rng)
}

/// Random forest of single-creditor banks: each bank owes exactly one
/// counterparty, either a lower-indexed bank or the sink.
pub fn generate_single_creditor_system(seed: u64, n_banks: usize) -> Result<FinancialSystem> {
    if n_banks == 0 {
        return Err(Error::Validation("n_banks must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_banks + 1;
    let mut full = DMatrix::zeros(n, n);
    for i in 0..n_banks {
        let creditor = if i == 0 || rng.gen_bool(0.25) {
            n_banks
        } else {
            rng.gen_range(0..i)
        };
        full[(i, creditor)] = rng.gen_range(1.0..10.0);
    }
    let o = DVector::from_fn(n, |i, _| {
        if i == n_banks {
            1.0
        } else {
            rng.gen_range(1.0..5.0)
        }
    });
    FinancialSystem::new(full, o, None)
}

fn finish(block: DMatrix<f64>, rng: &mut ChaCha8Rng) -> Result<FinancialSystem> {
    let n_banks = block.nrows();
    let interbank: Vec<f64> = block.row_iter().map(|r| r.sum()).collect();
    let claims: Vec<f64> = block.column_iter().map(|c| c.sum()).collect();
    let external = DVector::from_fn(n_banks, |i, _| {
        let u = rng.gen_range(0.1..1.0);
        claims[i] + u * (1.0 + interbank[i])
    });
    let mut o = DVector::from_element(n_banks + 1, 1.0);
    for i in 0..n_banks {
        let l = interbank[i] + external[i];
        o[i] = l - claims[i] + rng.gen::<f64>() * l;
    }
    FinancialSystem::from_bank_block(&block, &external, o, None)
}
