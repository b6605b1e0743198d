//! Combinatorial and recursive dense matrix inversion.
//!
//! The crate builds triangular inverses three ways — an element-wise
//! combinatorial formula driven by precomputed Hopscotch index series, the
//! column-recursive CRIT/CRIT* schemes, and the card-driven block recursion
//! COMBRIT backed by Strassen multiplication — and uses them to factorize
//! inverses of general nonsingular matrices: augmented QR (SQR) and Crout LU
//! (SKUL) that emit inverse factors online, and recursive split-and-invert
//! (RSI/BRSI). Every computation can carry a [`FlopLedger`], and the
//! [`flops`] module checks the measured counts against closed-form
//! predictions.
//!
//! # Examples
//!
//! One runnable example per capability:
//!
//! ```bash
//! cargo run --release --example hopscotch_card       # series, counts, card files
//! cargo run --release --example combinatorial_inverse # element-wise formula
//! cargo run --release --example crit_inversion        # column-recursive schemes
//! cargo run --release --example combrit_blocks        # block recursion over the card
//! cargo run --release --example strassen_multiply     # plans, padding, residuals
//! cargo run --release --example sqr_factorization     # QR with online R^-1
//! cargo run --release --example skul_factorization    # Crout LU with online U^-1, L^-1
//! cargo run --release --example rsi_split_inverse     # recursive split-and-invert
//! cargo run --release --example brsi_schur            # block split vs Schur form
//! cargo run --release --example flop_predictions      # predicted vs measured counts
//! cargo run --release --example bench_trends          # timing comparisons
//! ```
//!
//! A thin `combrit` binary exposes the same machinery as subcommands
//! (`gen`, `invert`, `factorize`, `flops`, `bench`, `verify`); see the README.

pub mod cli;
pub mod error;
pub mod factorize;
pub mod flops;
pub mod hopscotch;
pub mod ledger;
pub mod matmul;
pub mod matrix;
pub mod splitinv;
pub mod triinv;

pub use error::{Error, FileError};
pub use hopscotch::{build_card, HopscotchCard, HopscotchSequence};
pub use ledger::FlopLedger;
pub use matrix::{max_abs_residual, DenseMatrix, Permutation, TriangularShape};
