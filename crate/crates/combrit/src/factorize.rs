//! Augmented factorizations that build inverse factors online: SQR (modified
//! Gram-Schmidt QR emitting S = R^-1 column by column) and SKUL (Crout LU
//! emitting S = U^-1 and K = L^-1 as the direct factors grow).
//!
//! The inverse-factor updates use the same seeded accumulation as the
//! column-recursive triangular inversion, in the same order, so the online
//! factors agree bit for bit with inverting the finished R (or L) after the
//! fact. The plain (non-augmented) code paths double as the LU/QR baselines
//! the benchmark uses for overhead ratios.

use crate::error::Error;
use crate::ledger::FlopLedger;
use crate::matrix::{zero_threshold, DenseMatrix, Permutation};
use crate::triinv::accumulate_seeded;

/// Q, R plus the online inverse of R.
#[derive(Debug, Clone)]
pub struct SqrBundle {
    /// Orthonormal columns, `Q * R = A`.
    pub q: DenseMatrix,
    /// Upper triangular with positive diagonal.
    pub r: DenseMatrix,
    /// `S = R^-1`, so `S * Q^t = A^-1`.
    pub s: DenseMatrix,
    /// Reciprocals `1 / R[j][j]`.
    pub d: Vec<f64>,
    pub ledger: Option<FlopLedger>,
}

/// L, U plus the online inverses of both factors.
#[derive(Debug, Clone)]
pub struct SkulBundle {
    /// Lower triangular, `L * U = A`.
    pub l: DenseMatrix,
    /// Unit upper triangular.
    pub u: DenseMatrix,
    /// `S = U^-1` (unit upper).
    pub s: DenseMatrix,
    /// `K = L^-1`, so `S * K = A^-1`.
    pub k: DenseMatrix,
    pub ledger: Option<FlopLedger>,
}

/// Augmented modified Gram-Schmidt: each column of R is followed immediately
/// by the matching column of `S = R^-1`.
pub fn sqr(a: &DenseMatrix) -> Result<SqrBundle, Error> {
    let mut ledger = FlopLedger::new();
    let (q, r, s, d) = sqr_impl::<true>(a, &mut ledger)?;
    Ok(SqrBundle {
        q,
        r,
        s: s.expect("augmented run returns S"),
        d,
        ledger: Some(ledger),
    })
}

/// Plain modified Gram-Schmidt, the timing baseline: identical to [`sqr`]
/// with every inverse-update line removed.
pub(crate) fn qr_plain(
    a: &DenseMatrix,
    ledger: &mut FlopLedger,
) -> Result<(DenseMatrix, DenseMatrix), Error> {
    let (q, r, _, _) = sqr_impl::<false>(a, ledger)?;
    Ok((q, r))
}

fn sqr_impl<const AUGMENT: bool>(
    a: &DenseMatrix,
    ledger: &mut FlopLedger,
) -> Result<(DenseMatrix, DenseMatrix, Option<DenseMatrix>, Vec<f64>), Error> {
    let n = a.check_square()?;
    let tol = zero_threshold(a.max_abs());
    // rows of qt are the orthonormal vectors; transposed once at the end
    let mut qt = DenseMatrix::zeros(n, n);
    let mut r = DenseMatrix::zeros(n, n);
    let mut s = DenseMatrix::identity(n);
    let mut d = vec![0.0; n];
    let mut qhat = vec![0.0; n];
    for j in 0..n {
        for (k, slot) in qhat.iter_mut().enumerate() {
            *slot = a[(k, j)];
        }
        for i in 0..j {
            let qi = qt.row(i);
            let mut proj = 0.0;
            for k in 0..n {
                proj += qhat[k] * qi[k];
            }
            r[(i, j)] = proj;
            for k in 0..n {
                qhat[k] -= proj * qi[k];
            }
            ledger.mul(2 * n as u64);
            ledger.addsub(2 * n as u64 - 1);
        }
        let norm2 = qhat.iter().map(|v| v * v).sum::<f64>();
        ledger.mul(n as u64);
        ledger.addsub(n as u64 - 1);
        let norm = norm2.sqrt();
        if norm < tol {
            return Err(Error::RankDeficient { column: j });
        }
        r[(j, j)] = norm;
        d[j] = 1.0 / norm;
        ledger.div(1);
        for (k, v) in qhat.iter().enumerate() {
            qt[(j, k)] = d[j] * v;
        }
        ledger.mul(n as u64);
        if AUGMENT {
            // column j of the inverse factor, available as soon as R[j][j] is
            for i in 0..j {
                let acc = accumulate_seeded(
                    r[(i, j)],
                    (i + 1..j).map(|p| (s[(i, p)], r[(p, j)])),
                    ledger,
                );
                s[(i, j)] = -(acc * d[j]);
                ledger.div(1);
            }
        }
    }
    let s = if AUGMENT {
        // closing diagonal rescale, same convention as the triangular module
        for i in 0..n {
            for j in i + 1..n {
                s[(i, j)] = d[i] * s[(i, j)];
            }
            s[(i, i)] = d[i];
        }
        Some(s)
    } else {
        None
    };
    Ok((qt.transpose(), r, s, d))
}

/// Augmented Crout: rows of `K = L^-1` and columns of `S = U^-1` are filled
/// as soon as their prerequisites exist. No pivoting; every leading principal
/// minor must be nonsingular.
pub fn skul(a: &DenseMatrix) -> Result<SkulBundle, Error> {
    let mut ledger = FlopLedger::new();
    let (l, u, sk) = skul_impl::<true>(a, &mut ledger)?;
    let (s, k) = sk.expect("augmented run returns S and K");
    Ok(SkulBundle {
        l,
        u,
        s,
        k,
        ledger: Some(ledger),
    })
}

/// Plain Crout LU, the timing baseline.
pub(crate) fn lu_plain(
    a: &DenseMatrix,
    ledger: &mut FlopLedger,
) -> Result<(DenseMatrix, DenseMatrix), Error> {
    let (l, u, _) = skul_impl::<false>(a, ledger)?;
    Ok((l, u))
}

type SkulFactors = (
    DenseMatrix,
    DenseMatrix,
    Option<(DenseMatrix, DenseMatrix)>,
);

fn skul_impl<const AUGMENT: bool>(
    a: &DenseMatrix,
    ledger: &mut FlopLedger,
) -> Result<SkulFactors, Error> {
    let n = a.check_square()?;
    let tol = zero_threshold(a.max_abs());
    let mut l = DenseMatrix::zeros(n, n);
    let mut u = DenseMatrix::identity(n);
    let mut s = DenseMatrix::identity(n);
    let mut kw = DenseMatrix::identity(n);
    let mut d = vec![0.0; n];
    for i in 0..n {
        l[(i, 0)] = a[(i, 0)];
    }
    if l[(0, 0)].abs() < tol {
        return Err(Error::ZeroPivot { row: 0 });
    }
    d[0] = 1.0 / l[(0, 0)];
    ledger.div(1);
    for j in 1..n {
        u[(0, j)] = a[(0, j)] * d[0];
        ledger.div(1);
    }
    for i in 1..n {
        for j in 1..=i {
            let mut acc = a[(i, j)];
            for p in 0..j {
                acc -= l[(i, p)] * u[(p, j)];
            }
            l[(i, j)] = acc;
            ledger.mul(j as u64);
            ledger.addsub(j as u64);
        }
        if l[(i, i)].abs() < tol {
            return Err(Error::ZeroPivot { row: i });
        }
        d[i] = 1.0 / l[(i, i)];
        ledger.div(1);
        if AUGMENT {
            // row i of the inverse of L (unit-scaled working form)
            for j in 0..i {
                let acc = accumulate_seeded(
                    l[(i, j)],
                    (j + 1..i).map(|p| (l[(i, p)], kw[(p, j)])),
                    ledger,
                );
                kw[(i, j)] = -(acc * d[i]);
                ledger.div(1);
            }
        }
        for j in i + 1..n {
            let mut acc = a[(i, j)];
            for p in 0..i {
                acc -= l[(i, p)] * u[(p, j)];
            }
            u[(i, j)] = acc * d[i];
            ledger.mul(i as u64);
            ledger.addsub(i as u64);
            ledger.div(1);
        }
        if AUGMENT {
            // column i of the inverse of U becomes available here
            for t in 0..i {
                let acc = accumulate_seeded(
                    u[(t, i)],
                    (t + 1..i).map(|p| (s[(t, p)], u[(p, i)])),
                    ledger,
                );
                s[(t, i)] = -acc;
            }
        }
    }
    let sk = if AUGMENT {
        // K picks up the reciprocal diagonal by columns
        for i in 0..n {
            for j in 0..i {
                kw[(i, j)] = d[j] * kw[(i, j)];
            }
            kw[(i, i)] = d[i];
        }
        Some((s, kw))
    } else {
        None
    };
    Ok((l, u, sk))
}

/// Convenience wrapper around [`skul`]: pick a row order by partial pivoting
/// first, then factor the permuted matrix. Returns the bundle for the
/// permuted matrix together with the row order used (`order.map()[i]` is the
/// source row of row `i` of the factored matrix).
pub fn skul_pivoted(a: &DenseMatrix) -> Result<(SkulBundle, Permutation), Error> {
    let n = a.check_square()?;
    let tol = zero_threshold(a.max_abs());
    // plain partial-pivot elimination on a scratch copy to pick the order
    let mut work = a.clone();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut best = k;
        for r in k + 1..n {
            if work[(r, k)].abs() > work[(best, k)].abs() {
                best = r;
            }
        }
        if work[(best, k)].abs() < tol {
            return Err(Error::ZeroPivot { row: k });
        }
        if best != k {
            for c in 0..n {
                let tmp = work[(k, c)];
                work[(k, c)] = work[(best, c)];
                work[(best, c)] = tmp;
            }
            order.swap(k, best);
        }
        let pivot = work[(k, k)];
        for r in k + 1..n {
            let factor = work[(r, k)] / pivot;
            for c in k..n {
                let v = work[(k, c)];
                work[(r, c)] -= factor * v;
            }
        }
    }
    let permuted = DenseMatrix::from_fn(n, n, |i, j| a[(order[i], j)]);
    let bundle = skul(&permuted)?;
    Ok((bundle, Permutation::from_map(order)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matmul::matmul_naive;
    use crate::matrix::max_abs_residual;
    use crate::triinv::{invert_lower, invert_upper_crit, TriMethod};

    fn det_range(state: &mut u64) -> f64 {
        *state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    fn diag_dominant(n: usize, seed: u64) -> DenseMatrix {
        let mut state = seed | 1;
        let mut m = DenseMatrix::from_fn(n, n, |_, _| det_range(&mut state));
        for i in 0..n {
            m[(i, i)] += n as f64;
        }
        m
    }

    #[test]
    fn sqr_identity_input() {
        let b = sqr(&DenseMatrix::identity(4)).unwrap();
        assert_eq!(b.q, DenseMatrix::identity(4));
        assert_eq!(b.r, DenseMatrix::identity(4));
        assert_eq!(b.s, DenseMatrix::identity(4));
    }

    #[test]
    fn sqr_reconstruction_and_inverse() {
        let a = diag_dominant(12, 7);
        let b = sqr(&a).unwrap();
        let n = 12.0;
        let qr = matmul_naive(&b.q, &b.r).unwrap();
        assert!(max_abs_residual(&qr, &a).unwrap() <= 1e-10 * n * a.max_abs());
        let qtq = matmul_naive(&b.q.transpose(), &b.q).unwrap();
        assert!(max_abs_residual(&qtq, &DenseMatrix::identity(12)).unwrap() <= 1e-8);
        let ainv = matmul_naive(&b.s, &b.q.transpose()).unwrap();
        let prod = matmul_naive(&ainv, &a).unwrap();
        assert!(max_abs_residual(&prod, &DenseMatrix::identity(12)).unwrap() <= 1e-8 * n);
    }

    #[test]
    fn sqr_on_orthogonal_input() {
        // a Householder reflector is orthogonal; both R and S come out
        // near the identity with positive diagonal
        let n = 6;
        let mut v = vec![0.0; n];
        let mut state = 99u64;
        for slot in v.iter_mut() {
            *slot = det_range(&mut state);
        }
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        let q0 = DenseMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            delta - 2.0 * v[i] * v[j] / norm2
        });
        let b = sqr(&q0).unwrap();
        assert!(max_abs_residual(&b.r, &DenseMatrix::identity(n)).unwrap() <= 1e-12);
        assert!(max_abs_residual(&b.s, &DenseMatrix::identity(n)).unwrap() <= 1e-12);
    }

    #[test]
    fn sqr_detects_duplicate_column() {
        let mut a = diag_dominant(5, 21);
        for i in 0..5 {
            a[(i, 3)] = a[(i, 1)];
        }
        assert_eq!(sqr(&a).unwrap_err(), Error::RankDeficient { column: 3 });
    }

    #[test]
    fn sqr_online_inverse_matches_offline_crit_bitwise() {
        let a = diag_dominant(10, 3);
        let b = sqr(&a).unwrap();
        let offline = invert_upper_crit(&b.r).unwrap().inverse;
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(b.s[(i, j)].to_bits(), offline[(i, j)].to_bits(), "({i},{j})");
            }
        }
    }

    #[test]
    fn skul_identity_input() {
        let b = skul(&DenseMatrix::identity(5)).unwrap();
        assert_eq!(b.l, DenseMatrix::identity(5));
        assert_eq!(b.u, DenseMatrix::identity(5));
        assert_eq!(b.s, DenseMatrix::identity(5));
        assert_eq!(b.k, DenseMatrix::identity(5));
    }

    #[test]
    fn skul_reconstruction_and_inverse() {
        let a = diag_dominant(32, 11);
        let b = skul(&a).unwrap();
        let scale = 32.0 * a.max_abs();
        let lu = matmul_naive(&b.l, &b.u).unwrap();
        assert!(max_abs_residual(&lu, &a).unwrap() <= 1e-10 * scale);
        let ainv = matmul_naive(&b.s, &b.k).unwrap();
        let prod = matmul_naive(&ainv, &a).unwrap();
        assert!(max_abs_residual(&prod, &DenseMatrix::identity(32)).unwrap() <= 1e-8 * 32.0);
    }

    #[test]
    fn skul_online_inverses_match_offline_crit_bitwise() {
        let a = diag_dominant(9, 5);
        let b = skul(&a).unwrap();
        let s_offline = invert_upper_crit(&b.u).unwrap().inverse;
        let k_offline = invert_lower(&b.l, TriMethod::Crit).unwrap().inverse;
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(
                    b.s[(i, j)].to_bits(),
                    s_offline[(i, j)].to_bits(),
                    "S ({i},{j})"
                );
                assert_eq!(
                    b.k[(i, j)].to_bits(),
                    k_offline[(i, j)].to_bits(),
                    "K ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn skul_zero_pivot_reported() {
        // leading 1x1 minor is zero
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(skul(&a).unwrap_err(), Error::ZeroPivot { row: 0 });
    }

    #[test]
    fn skul_pivoted_recovers() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]);
        let (bundle, order) = skul_pivoted(&a).unwrap();
        assert_eq!(order.map(), &[1, 0]);
        let permuted = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let lu = matmul_naive(&bundle.l, &bundle.u).unwrap();
        assert_eq!(lu, permuted);
    }

    #[test]
    fn plain_baselines_match_augmented_factors() {
        let a = diag_dominant(8, 17);
        let mut led = FlopLedger::new();
        let (q, r) = qr_plain(&a, &mut led).unwrap();
        let b = sqr(&a).unwrap();
        assert_eq!(q, b.q);
        assert_eq!(r, b.r);
        let (l, u) = lu_plain(&a, &mut led).unwrap();
        let b = skul(&a).unwrap();
        assert_eq!(l, b.l);
        assert_eq!(u, b.u);
    }
}
