//! Strassen multiplication: recursion plans, padding, and agreement with the
//! naive product.
//!
//! ```bash
//! cargo run --release --example strassen_multiply
//! ```

use std::time::Instant;

use combrit::ledger::FlopLedger;
use combrit::matmul::{
    matmul_naive_metered, matmul_strassen_metered, StrassenPlan, DEFAULT_STRASSEN_CUTOFF,
};
use combrit::matrix::{max_abs_residual, DenseMatrix};

fn sample(n: usize, shift: u64) -> DenseMatrix {
    let mut state = shift | 1;
    DenseMatrix::from_fn(n, n, |_, _| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    })
}

fn main() {
    // how a plan carves up an awkward order
    for n in [96usize, 200, 512, 1000] {
        let plan = StrassenPlan::new(n);
        println!(
            "n = {n:4}: {} halvings on a {}-padded operand, base {}",
            plan.k, plan.padded_n, plan.m
        );
    }

    println!();
    for n in [64usize, 96, 128, 256, 512] {
        let a = sample(n, 1);
        let b = sample(n, 2);
        let plan = StrassenPlan::with_cutoff(n, DEFAULT_STRASSEN_CUTOFF);

        let mut led_naive = FlopLedger::new();
        let t0 = Instant::now();
        let slow = matmul_naive_metered(&a, &b, &mut led_naive).unwrap();
        let t_naive = t0.elapsed().as_secs_f64();

        let mut led_fast = FlopLedger::new();
        let t0 = Instant::now();
        let fast = matmul_strassen_metered(&a, &b, &plan, &mut led_fast).unwrap();
        let t_fast = t0.elapsed().as_secs_f64();

        let err = max_abs_residual(&fast, &slow).unwrap();
        println!(
            "n = {n:4}: naive {:8.2} ms ({:.2} GF/s) | strassen {:8.2} ms ({:.2} GF/s) | max dev {err:.2e}",
            t_naive * 1e3,
            led_naive.total() as f64 / t_naive / 1e9,
            t_fast * 1e3,
            led_fast.total() as f64 / t_fast / 1e9,
        );
    }
}
