//! Matrix products: the naive triple loop (the oracle for everything else),
//! sparsity-promoting triangular products, and recursive Strassen
//! multiplication with padding.
//!
//! Accumulation order is ascending in the inner index everywhere, so results
//! are bit-reproducible and the structure-aware kernels agree with the naive
//! product exactly on the values they share.

use crate::error::Error;
use crate::ledger::FlopLedger;
use crate::matrix::{DenseMatrix, TriangularShape};

/// Practical crossover below which Strassen recursion switches to the naive
/// kernel. Measured on this implementation: the seven-product scheme only
/// beats the straight triple loop in wall time once operands reach roughly
/// this order (the copies and padding eat the flop savings below it).
pub const DEFAULT_STRASSEN_CUTOFF: usize = 512;

/// Recursion geometry for one Strassen product of order `n`: `k` halvings
/// down to a base of order `m`, on an operand zero-padded to `m * 2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrassenPlan {
    /// Recursion depth.
    pub k: u32,
    /// Base size after `k` halvings.
    pub m: usize,
    /// Below this size the naive kernel is used.
    pub cutoff: usize,
    /// `m * 2^k`, the padded operating size.
    pub padded_n: usize,
}

impl StrassenPlan {
    pub fn new(n: usize) -> Self {
        Self::with_cutoff(n, DEFAULT_STRASSEN_CUTOFF)
    }

    /// `k = max(0, floor(log2 n) - 4)` and `m = floor(n / 2^k) + 1`; inputs
    /// below 16 degenerate to a naive plan with no padding.
    pub fn with_cutoff(n: usize, cutoff: usize) -> Self {
        assert!(n > 0);
        if n < 16 {
            return StrassenPlan {
                k: 0,
                m: n,
                cutoff,
                padded_n: n,
            };
        }
        let k = n.ilog2().saturating_sub(4);
        let m = (n >> k) + 1;
        StrassenPlan {
            k,
            m,
            cutoff,
            padded_n: m << k,
        }
    }
}

/// `C = A * B` by the fixed-order triple loop.
pub fn matmul_naive(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, Error> {
    matmul_naive_metered(a, b, &mut FlopLedger::new())
}

pub fn matmul_naive_metered(
    a: &DenseMatrix,
    b: &DenseMatrix,
    ledger: &mut FlopLedger,
) -> Result<DenseMatrix, Error> {
    if a.cols() != b.rows() {
        return Err(Error::ShapeMismatch {
            left: (a.rows(), a.cols()),
            right: (b.rows(), b.cols()),
        });
    }
    let mut c = DenseMatrix::zeros(a.rows(), b.cols());
    naive_into(a, b, &mut c, ledger);
    Ok(c)
}

/// Inner kernel; accumulates each output entry in ascending-k order.
fn naive_into(a: &DenseMatrix, b: &DenseMatrix, c: &mut DenseMatrix, ledger: &mut FlopLedger) {
    let inner = a.cols();
    let p = b.cols();
    for i in 0..a.rows() {
        let arow = a.row(i);
        let crow = c.row_mut(i);
        let coeff = arow[0];
        for (cv, bv) in crow.iter_mut().zip(b.row(0)) {
            *cv = coeff * bv;
        }
        for (k, &coeff) in arow.iter().enumerate().skip(1) {
            for (cv, bv) in crow.iter_mut().zip(b.row(k)) {
                *cv += coeff * bv;
            }
        }
        ledger.mul((inner * p) as u64);
        ledger.addsub(((inner - 1) * p) as u64);
    }
}

/// `C = T * F` with `T` upper triangular; the inner loops skip the structural
/// zero region, which is what brings the combined flop count to `n^2 * p`
/// (`m^3` on square operands).
pub fn matmul_tri_full(t: &DenseMatrix, f: &DenseMatrix) -> Result<DenseMatrix, Error> {
    matmul_tri_full_metered(t, f, &mut FlopLedger::new())
}

pub fn matmul_tri_full_metered(
    t: &DenseMatrix,
    f: &DenseMatrix,
    ledger: &mut FlopLedger,
) -> Result<DenseMatrix, Error> {
    let n = t.check_square()?;
    TriangularShape::Upper.require(t)?;
    if f.rows() != n {
        return Err(Error::ShapeMismatch {
            left: (n, n),
            right: (f.rows(), f.cols()),
        });
    }
    let p = f.cols();
    let mut c = DenseMatrix::zeros(n, p);
    for i in 0..n {
        let trow = t.row(i);
        let crow = c.row_mut(i);
        let frow = f.row(i);
        let coeff = trow[i];
        for j in 0..p {
            crow[j] = coeff * frow[j];
        }
        for k in i + 1..n {
            let coeff = trow[k];
            let frow = f.row(k);
            for j in 0..p {
                crow[j] += coeff * frow[j];
            }
        }
        ledger.mul(((n - i) * p) as u64);
        ledger.addsub(((n - i - 1) * p) as u64);
    }
    Ok(c)
}

/// `C = U * L` with `U` upper triangular and `L` lower triangular, skipping
/// both structural zero regions. A zero diagonal on `L` (the strictly lower
/// case) is detected and skipped as well.
pub fn matmul_upper_lower(u: &DenseMatrix, l: &DenseMatrix) -> Result<DenseMatrix, Error> {
    matmul_upper_lower_metered(u, l, &mut FlopLedger::new())
}

pub fn matmul_upper_lower_metered(
    u: &DenseMatrix,
    l: &DenseMatrix,
    ledger: &mut FlopLedger,
) -> Result<DenseMatrix, Error> {
    let n = u.check_square()?;
    TriangularShape::Upper.require(u)?;
    l.check_same_shape(u)?;
    TriangularShape::Lower.require(l)?;
    let strict = (0..n).all(|i| l[(i, i)] == 0.0);
    let mut c = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let urow = u.row(i);
        let crow = c.row_mut(i);
        // row k of L carries columns 0..lim(k); lim grows with k, so the
        // cells touched so far accumulate and the new tail cells assign.
        let mut touched = 0usize;
        for k in i..n {
            let lim = if strict { k } else { k + 1 };
            if lim == 0 {
                continue;
            }
            let coeff = urow[k];
            let lrow = l.row(k);
            for j in 0..touched {
                crow[j] += coeff * lrow[j];
            }
            for j in touched..lim {
                crow[j] = coeff * lrow[j];
            }
            ledger.mul(lim as u64);
            ledger.addsub(touched as u64);
            touched = lim;
        }
    }
    Ok(c)
}

/// `C = A * B` for square operands through the plan's padded recursion; below
/// the cutoff (or for a degenerate plan) this is the naive product.
pub fn matmul_strassen(
    a: &DenseMatrix,
    b: &DenseMatrix,
    plan: &StrassenPlan,
) -> Result<DenseMatrix, Error> {
    matmul_strassen_metered(a, b, plan, &mut FlopLedger::new())
}

pub fn matmul_strassen_metered(
    a: &DenseMatrix,
    b: &DenseMatrix,
    plan: &StrassenPlan,
    ledger: &mut FlopLedger,
) -> Result<DenseMatrix, Error> {
    let n = a.check_square()?;
    a.check_same_shape(b)?;
    if n <= plan.cutoff || plan.k == 0 {
        return matmul_naive_metered(a, b, ledger);
    }
    let pn = plan.padded_n.max(n);
    let mut ap = DenseMatrix::zeros(pn, pn);
    ap.paste(0, 0, a);
    let mut bp = DenseMatrix::zeros(pn, pn);
    bp.paste(0, 0, b);
    let cp = strassen_rec(&ap, &bp, plan.k, plan.cutoff, ledger);
    Ok(cp.submatrix(0, 0, n, n))
}

/// Square product choosing Strassen above the cutoff. Used for the block
/// products inside the recursive inversion algorithms.
pub(crate) fn mul_square_auto(
    a: &DenseMatrix,
    b: &DenseMatrix,
    cutoff: usize,
    ledger: &mut FlopLedger,
) -> DenseMatrix {
    let n = a.rows();
    if n > cutoff {
        let plan = StrassenPlan::with_cutoff(n, cutoff);
        matmul_strassen_metered(a, b, &plan, ledger).expect("square operands")
    } else {
        matmul_naive_metered(a, b, ledger).expect("square operands")
    }
}

fn add_blocks(a: &DenseMatrix, b: &DenseMatrix, ledger: &mut FlopLedger) -> DenseMatrix {
    ledger.addsub((a.rows() * a.cols()) as u64);
    a.add(b).expect("equal block shapes")
}

fn sub_blocks(a: &DenseMatrix, b: &DenseMatrix, ledger: &mut FlopLedger) -> DenseMatrix {
    ledger.addsub((a.rows() * a.cols()) as u64);
    a.sub(b).expect("equal block shapes")
}

/// The classic seven-product scheme. The subproducts are independent of one
/// another but are evaluated in a fixed order for determinism.
fn strassen_rec(
    a: &DenseMatrix,
    b: &DenseMatrix,
    depth: u32,
    cutoff: usize,
    ledger: &mut FlopLedger,
) -> DenseMatrix {
    let n = a.rows();
    if depth == 0 || n <= cutoff || n % 2 == 1 {
        let mut c = DenseMatrix::zeros(n, n);
        naive_into(a, b, &mut c, ledger);
        return c;
    }
    let h = n / 2;
    let a11 = a.submatrix(0, 0, h, h);
    let a12 = a.submatrix(0, h, h, h);
    let a21 = a.submatrix(h, 0, h, h);
    let a22 = a.submatrix(h, h, h, h);
    let b11 = b.submatrix(0, 0, h, h);
    let b12 = b.submatrix(0, h, h, h);
    let b21 = b.submatrix(h, 0, h, h);
    let b22 = b.submatrix(h, h, h, h);

    let d = depth - 1;
    let m1 = strassen_rec(
        &add_blocks(&a11, &a22, ledger),
        &add_blocks(&b11, &b22, ledger),
        d,
        cutoff,
        ledger,
    );
    let m2 = strassen_rec(&add_blocks(&a21, &a22, ledger), &b11, d, cutoff, ledger);
    let m3 = strassen_rec(&a11, &sub_blocks(&b12, &b22, ledger), d, cutoff, ledger);
    let m4 = strassen_rec(&a22, &sub_blocks(&b21, &b11, ledger), d, cutoff, ledger);
    let m5 = strassen_rec(&add_blocks(&a11, &a12, ledger), &b22, d, cutoff, ledger);
    let m6 = strassen_rec(
        &sub_blocks(&a21, &a11, ledger),
        &add_blocks(&b11, &b12, ledger),
        d,
        cutoff,
        ledger,
    );
    let m7 = strassen_rec(
        &sub_blocks(&a12, &a22, ledger),
        &add_blocks(&b21, &b22, ledger),
        d,
        cutoff,
        ledger,
    );

    let mut c11 = m1.add(&m4).expect("block shapes agree");
    c11.sub_assign(&m5).expect("block shapes agree");
    c11.add_assign(&m7).expect("block shapes agree");
    let c12 = m3.add(&m5).expect("block shapes agree");
    let c21 = m2.add(&m4).expect("block shapes agree");
    let mut c22 = m1.sub(&m2).expect("block shapes agree");
    c22.add_assign(&m3).expect("block shapes agree");
    c22.add_assign(&m6).expect("block shapes agree");
    ledger.addsub(8 * (h * h) as u64);

    let mut c = DenseMatrix::zeros(n, n);
    c.paste(0, 0, &c11);
    c.paste(0, h, &c12);
    c.paste(h, 0, &c21);
    c.paste(h, h, &c22);
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::max_abs_residual;

    fn det_matrix(n: usize, seed: u64) -> DenseMatrix {
        // small deterministic pseudo-random fill, good enough for kernels
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        DenseMatrix::from_fn(n, n, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn naive_times_identity() {
        let a = det_matrix(5, 3);
        let c = matmul_naive(&a, &DenseMatrix::identity(5)).unwrap();
        assert_eq!(c, a);
    }

    #[test]
    fn naive_hand_example() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = DenseMatrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]);
        let c = matmul_naive(&a, &b).unwrap();
        assert_eq!(
            c,
            DenseMatrix::from_rows(&[vec![19.0, 22.0], vec![43.0, 50.0]])
        );
    }

    #[test]
    fn naive_rejects_shape_mismatch() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        assert!(matmul_naive(&a, &b).is_err());
    }

    #[test]
    fn plan_formulas() {
        let p = StrassenPlan::new(96);
        assert_eq!(p.k, 2);
        assert_eq!(p.m, 25);
        assert_eq!(p.padded_n, 100);
        for n in [16usize, 17, 100, 512, 1000, 2048] {
            let p = StrassenPlan::new(n);
            let k = (n.ilog2() - 4).max(0);
            assert_eq!(p.k, k);
            assert_eq!(p.m, (n >> k) + 1);
            assert!(p.padded_n >= n);
            assert!(16usize << p.k <= n);
        }
        let degenerate = StrassenPlan::new(7);
        assert_eq!((degenerate.k, degenerate.padded_n), (0, 7));
    }

    #[test]
    fn strassen_matches_naive() {
        for &n in &[1usize, 2, 3, 5, 17, 33, 64, 96, 128] {
            let a = det_matrix(n, n as u64);
            let b = det_matrix(n, n as u64 + 99);
            let plan = StrassenPlan::with_cutoff(n, 8);
            let fast = matmul_strassen(&a, &b, &plan).unwrap();
            let slow = matmul_naive(&a, &b).unwrap();
            let scale = a.max_abs() * b.max_abs() * n as f64;
            assert!(
                max_abs_residual(&fast, &slow).unwrap() <= 1e-9 * scale.max(1.0),
                "n = {n}"
            );
        }
    }

    #[test]
    fn strassen_scalar_case() {
        let a = DenseMatrix::from_rows(&[vec![3.0]]);
        let b = DenseMatrix::from_rows(&[vec![-2.0]]);
        let c = matmul_strassen(&a, &b, &StrassenPlan::new(1)).unwrap();
        assert_eq!(c[(0, 0)], -6.0);
    }

    #[test]
    fn tri_full_identity_and_counts() {
        let f = det_matrix(4, 7);
        let c = matmul_tri_full(&DenseMatrix::identity(4), &f).unwrap();
        assert_eq!(c, f);

        let t = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![0.0, 4.0, 5.0],
            vec![0.0, 0.0, 6.0],
        ]);
        let f = det_matrix(3, 11);
        let mut led = FlopLedger::new();
        let fast = matmul_tri_full_metered(&t, &f, &mut led).unwrap();
        let slow = matmul_naive(&t, &f).unwrap();
        assert_eq!(fast, slow);
        // row lengths 3,2,1 over 3 columns
        assert_eq!(led.mul, 18);
        assert_eq!(led.total(), 27);
    }

    #[test]
    fn upper_lower_matches_naive_and_counts() {
        let n = 8;
        let mut u = det_matrix(n, 21);
        let mut l = det_matrix(n, 22);
        for i in 0..n {
            for j in 0..n {
                if i > j {
                    u[(i, j)] = 0.0;
                }
                if j >= i {
                    l[(i, j)] = 0.0;
                }
            }
        }
        let fast = matmul_upper_lower(&u, &l).unwrap();
        let slow = matmul_naive(&u, &l).unwrap();
        assert_eq!(fast, slow);

        // 2x2 strict case: two multiplications, nothing else
        let u2 = DenseMatrix::from_rows(&[vec![2.0, 3.0], vec![0.0, 5.0]]);
        let l2 = DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![7.0, 0.0]]);
        let mut led = FlopLedger::new();
        let c = matmul_upper_lower_metered(&u2, &l2, &mut led).unwrap();
        assert_eq!(c[(0, 0)], 21.0);
        assert_eq!(c[(1, 0)], 35.0);
        assert_eq!((led.mul, led.addsub, led.total()), (2, 0, 2));

        // zero L gives the zero matrix
        let zl = DenseMatrix::zeros(2, 2);
        let c = matmul_upper_lower(&u2, &zl).unwrap();
        assert_eq!(c, DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn upper_lower_with_nonzero_diagonal() {
        let n = 6;
        let mut u = det_matrix(n, 31);
        let mut l = det_matrix(n, 32);
        for i in 0..n {
            for j in 0..n {
                if i > j {
                    u[(i, j)] = 0.0;
                }
                if j > i {
                    l[(i, j)] = 0.0;
                }
            }
        }
        let fast = matmul_upper_lower(&u, &l).unwrap();
        let slow = matmul_naive(&u, &l).unwrap();
        assert_eq!(fast, slow);
    }
}
