//! Triangular inversion: the element-wise combinatorial formula, the
//! column-recursive CRIT/CRIT* schemes, and the card-driven block-recursive
//! COMBRIT.
//!
//! All upper-triangular routines produce inverses with exact structural
//! zeros below the diagonal; lower-triangular inputs go through the
//! transpose.
//!
//! Ledger model for the column-recursive updates: each entry `S[i][j]` is a
//! seeded sum (see [`crate::ledger`]), costing `j-i-1` multiplications and
//! `j-i-2` additions, plus one division for a general diagonal. The closing
//! diagonal rescale of the general scheme is charged entirely to those
//! divisions, matching the count model the predictors in [`crate::flops`]
//! validate.

use crate::error::Error;
use crate::hopscotch::HopscotchCard;
use crate::ledger::FlopLedger;
use crate::matmul::{mul_square_auto, DEFAULT_STRASSEN_CUTOFF};
use crate::matrix::{zero_threshold, DenseMatrix, TriangularShape};

/// Inverse plus the operation counts of the computation that produced it.
#[derive(Debug, Clone)]
pub struct TriInvResult {
    pub inverse: DenseMatrix,
    pub ledger: Option<FlopLedger>,
}

impl TriInvResult {
    fn new(inverse: DenseMatrix, ledger: FlopLedger) -> Self {
        TriInvResult {
            inverse,
            ledger: Some(ledger),
        }
    }
}

/// Method selector for the general entry points.
#[derive(Debug, Clone, Copy)]
pub enum TriMethod<'c> {
    /// Element-wise combinatorial formula over a card.
    Combinatorial(&'c HopscotchCard),
    /// Column-recursive scheme.
    Crit,
    /// Card-driven block recursion with the given base order.
    Combrit { card: &'c HopscotchCard, base: usize },
}

/// Seeded accumulation: `seed + sum(x * y)` with the seed folded in for free
/// and the products counted as multiplications, the folds as additions from
/// the second product on.
#[inline]
pub(crate) fn accumulate_seeded(
    seed: f64,
    pairs: impl Iterator<Item = (f64, f64)>,
    ledger: &mut FlopLedger,
) -> f64 {
    let mut acc = seed;
    let mut follow_ups = 0u64;
    let mut products = 0u64;
    for (x, y) in pairs {
        acc += x * y;
        products += 1;
    }
    if products > 0 {
        follow_ups = products - 1;
    }
    ledger.mul(products);
    ledger.addsub(follow_ups);
    acc
}

/// One entry of the combinatorial inverse: translate the card's `(1, span)`
/// series onto `(i, j)` and sum the signed products. Pure in its inputs, so
/// entries can be mapped over in parallel by a caller.
pub fn combinatorial_entry(
    t: &DenseMatrix,
    card: &HopscotchCard,
    i: usize,
    j: usize,
) -> Result<f64, Error> {
    combinatorial_entry_metered(t, card, i, j, &mut FlopLedger::new())
}

pub fn combinatorial_entry_metered(
    t: &DenseMatrix,
    card: &HopscotchCard,
    i: usize,
    j: usize,
    ledger: &mut FlopLedger,
) -> Result<f64, Error> {
    assert!(i < j && j < t.rows());
    let span = j - i + 1;
    let series = card.series_for(span).ok_or(Error::CardTooSmall {
        needed: span,
        beta: card.beta(),
    })?;
    let mut acc = 0.0;
    for (k, seq) in series.iter().enumerate() {
        let idx = seq.indices();
        // translate from (1, span) onto (i, j): 1-based alpha maps to row i + alpha - 1
        let mut prod = t[(i + idx[0] - 1, i + idx[1] - 1)];
        for w in idx.windows(2).skip(1) {
            prod *= t[(i + w[0] - 1, i + w[1] - 1)];
            ledger.mul(1);
        }
        let signed = if seq.sign() < 0.0 { -prod } else { prod };
        if k == 0 {
            acc = signed;
        } else {
            acc += signed;
            ledger.addsub(1);
        }
    }
    Ok(acc)
}

/// Element-wise inverse of a unit upper triangular matrix through the card.
pub fn invert_unit_upper_combinatorial(
    t: &DenseMatrix,
    card: &HopscotchCard,
) -> Result<TriInvResult, Error> {
    let n = t.check_square()?;
    TriangularShape::UpperUnit.require(t)?;
    if n > card.beta() {
        return Err(Error::CardTooSmall {
            needed: n,
            beta: card.beta(),
        });
    }
    let mut ledger = FlopLedger::new();
    let mut s = DenseMatrix::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            s[(i, j)] = combinatorial_entry_metered(t, card, i, j, &mut ledger)?;
        }
    }
    Ok(TriInvResult::new(s, ledger))
}

/// Column-recursive inverse of a unit upper triangular matrix.
pub fn invert_unit_upper_crit_star(t: &DenseMatrix) -> Result<TriInvResult, Error> {
    let n = t.check_square()?;
    TriangularShape::UpperUnit.require(t)?;
    let mut ledger = FlopLedger::new();
    let mut s = DenseMatrix::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            let acc = accumulate_seeded(
                t[(i, j)],
                (i + 1..j).map(|p| (s[(i, p)], t[(p, j)])),
                &mut ledger,
            );
            s[(i, j)] = -acc;
        }
    }
    Ok(TriInvResult::new(s, ledger))
}

/// Column-recursive inverse of a general upper triangular matrix.
///
/// Runs the unit recurrence with a division by the column pivot per entry,
/// then applies the reciprocal diagonal to the rows. The arithmetic per entry
/// is identical, value for value, to the online inverse columns produced by
/// the augmented factorizations.
pub fn invert_upper_crit(r: &DenseMatrix) -> Result<TriInvResult, Error> {
    let mut ledger = FlopLedger::new();
    let inverse = crit_metered(r, &mut ledger)?;
    Ok(TriInvResult::new(inverse, ledger))
}

pub(crate) fn crit_metered(r: &DenseMatrix, ledger: &mut FlopLedger) -> Result<DenseMatrix, Error> {
    let n = r.check_square()?;
    TriangularShape::Upper.require(r)?;
    let recip = diag_reciprocals(r, ledger)?;
    let mut s = DenseMatrix::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            let acc = accumulate_seeded(
                r[(i, j)],
                (i + 1..j).map(|p| (s[(i, p)], r[(p, j)])),
                ledger,
            );
            s[(i, j)] = -(acc * recip[j]);
            ledger.div(1);
        }
    }
    // closing diagonal rescale; charged to the divisions above
    for i in 0..n {
        for j in i + 1..n {
            s[(i, j)] = recip[i] * s[(i, j)];
        }
        s[(i, i)] = recip[i];
    }
    Ok(s)
}

fn diag_reciprocals(r: &DenseMatrix, ledger: &mut FlopLedger) -> Result<Vec<f64>, Error> {
    let n = r.rows();
    let tol = zero_threshold(r.max_abs());
    let mut recip = vec![0.0; n];
    for (j, slot) in recip.iter_mut().enumerate() {
        let d = r[(j, j)];
        if d.abs() < tol {
            return Err(Error::SingularDiagonal { index: j });
        }
        *slot = 1.0 / d;
        ledger.div(1);
    }
    Ok(recip)
}

/// Card-driven block-recursive inverse of a general upper triangular matrix.
///
/// The matrix is embedded into the next order of the form `base * beta^e`
/// (identity padding decouples for triangular inputs), split into `beta`
/// block rows and columns, the diagonal blocks inverted recursively, the
/// block rows scaled to unit-block form, and the unit-block matrix inverted
/// by the block version of the combinatorial formula.
pub fn invert_upper_combrit(
    a: &DenseMatrix,
    card: &HopscotchCard,
    base: usize,
) -> Result<TriInvResult, Error> {
    invert_upper_combrit_with_cutoff(a, card, base, DEFAULT_STRASSEN_CUTOFF)
}

pub fn invert_upper_combrit_with_cutoff(
    a: &DenseMatrix,
    card: &HopscotchCard,
    base: usize,
    cutoff: usize,
) -> Result<TriInvResult, Error> {
    let n = a.check_square()?;
    TriangularShape::Upper.require(a)?;
    if base == 0 {
        return Err(Error::InvalidParameter {
            name: "base",
            value: base,
        });
    }
    // fail early with the original index on a singular diagonal
    let tol = zero_threshold(a.max_abs());
    for i in 0..n {
        if a[(i, i)].abs() < tol {
            return Err(Error::SingularDiagonal { index: i });
        }
    }
    let mut ledger = FlopLedger::new();
    let padded = padded_order(n, base, card.beta())?;
    let inverse = if padded == n {
        combrit_rec(a, card, base, cutoff, &mut ledger)?
    } else {
        let embedded = a.embed_identity(padded);
        let inv = combrit_rec(&embedded, card, base, cutoff, &mut ledger)?;
        inv.submatrix(0, 0, n, n)
    };
    Ok(TriInvResult::new(inverse, ledger))
}

/// Smallest order of the form `base * beta^e` that fits `n`; orders at or
/// below the base need no padding.
fn padded_order(n: usize, base: usize, beta: usize) -> Result<usize, Error> {
    if n <= base {
        return Ok(n);
    }
    let mut size = base;
    while size < n {
        size = size.checked_mul(beta).ok_or(Error::CountOverflow)?;
    }
    Ok(size)
}

fn combrit_rec(
    a: &DenseMatrix,
    card: &HopscotchCard,
    base: usize,
    cutoff: usize,
    ledger: &mut FlopLedger,
) -> Result<DenseMatrix, Error> {
    let n = a.rows();
    if n <= base {
        return combrit_base(a, card, ledger);
    }
    let beta = card.beta();
    debug_assert_eq!(n % beta, 0);
    let s = n / beta;

    let mut diag_inv = Vec::with_capacity(beta);
    for i in 0..beta {
        let block = a.submatrix(i * s, i * s, s, s);
        diag_inv.push(combrit_rec(&block, card, base, cutoff, ledger)?);
    }

    // unit-block normalization: row-scale every block row by its inverse
    // diagonal block
    let mut unit_blocks: Vec<Vec<Option<DenseMatrix>>> = vec![vec![None; beta]; beta];
    for i in 0..beta {
        for j in i + 1..beta {
            let block = a.submatrix(i * s, j * s, s, s);
            unit_blocks[i][j] = Some(mul_square_auto(&diag_inv[i], &block, cutoff, ledger));
        }
    }

    let inv_blocks = block_unit_upper_inverse(
        beta,
        s,
        |i, j| unit_blocks[i][j].as_ref().unwrap(),
        card,
        cutoff,
        ledger,
    )?;

    // recombine: inv(A) block (i, j) = inv(B)(i, j) * inv(D)(j)
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..beta {
        out.paste(i * s, i * s, &diag_inv[i]);
        for j in i + 1..beta {
            let prod = mul_square_auto(
                inv_blocks[i][j - i - 1].as_ref().unwrap(),
                &diag_inv[j],
                cutoff,
                ledger,
            );
            out.paste(i * s, j * s, &prod);
        }
    }
    Ok(out)
}

/// Block version of the combinatorial formula for a unit-block upper
/// triangular matrix given by its strict upper blocks. Returns the strict
/// upper blocks of the inverse, indexed `[i][j - i - 1]`.
///
/// Matrix products along a sequence run left to right in ascending index
/// order, the order the scalar proof dictates.
pub(crate) fn block_unit_upper_inverse<'b>(
    beta: usize,
    block_size: usize,
    block: impl Fn(usize, usize) -> &'b DenseMatrix,
    card: &HopscotchCard,
    cutoff: usize,
    ledger: &mut FlopLedger,
) -> Result<Vec<Vec<Option<DenseMatrix>>>, Error> {
    let mut out: Vec<Vec<Option<DenseMatrix>>> = (0..beta)
        .map(|i| vec![None; beta.saturating_sub(i + 1)])
        .collect();
    for i in 0..beta {
        for j in i + 1..beta {
            let span = j - i + 1;
            let series = card.series_for(span).ok_or(Error::CardTooSmall {
                needed: span,
                beta: card.beta(),
            })?;
            let mut acc: Option<DenseMatrix> = None;
            for seq in series {
                let idx = seq.indices();
                let mut prod = block(i + idx[0] - 1, i + idx[1] - 1).clone();
                for w in idx.windows(2).skip(1) {
                    prod = mul_square_auto(
                        &prod,
                        block(i + w[0] - 1, i + w[1] - 1),
                        cutoff,
                        ledger,
                    );
                }
                let negative = seq.sign() < 0.0;
                acc = Some(match acc {
                    None => {
                        if negative {
                            prod.scaled(-1.0)
                        } else {
                            prod
                        }
                    }
                    Some(a) => {
                        ledger.addsub((block_size * block_size) as u64);
                        if negative {
                            a.sub(&prod).expect("block shapes agree")
                        } else {
                            a.add(&prod).expect("block shapes agree")
                        }
                    }
                });
            }
            out[i][j - i - 1] = acc;
        }
    }
    Ok(out)
}

/// Base case: element-wise combinatorial inverse when the card covers the
/// order, the column-recursive scheme otherwise.
fn combrit_base(
    a: &DenseMatrix,
    card: &HopscotchCard,
    ledger: &mut FlopLedger,
) -> Result<DenseMatrix, Error> {
    let n = a.rows();
    if n == 1 {
        let recip = diag_reciprocals(a, ledger)?;
        let mut s = DenseMatrix::zeros(1, 1);
        s[(0, 0)] = recip[0];
        return Ok(s);
    }
    if n > card.beta() {
        return crit_metered(a, ledger);
    }
    // general diagonal: normalize rows to unit form, invert element-wise,
    // scale the columns back
    let recip = diag_reciprocals(a, ledger)?;
    let mut unit = DenseMatrix::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            unit[(i, j)] = a[(i, j)] * recip[i];
            ledger.div(1);
        }
    }
    let mut s = DenseMatrix::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            let v = combinatorial_entry_metered(&unit, card, i, j, ledger)?;
            s[(i, j)] = v * recip[j];
            ledger.div(1);
        }
        s[(i, i)] = recip[i];
    }
    Ok(s)
}

/// Lower-triangular inversion: transpose, invert with the chosen upper
/// method, transpose back.
pub fn invert_lower(a: &DenseMatrix, method: TriMethod<'_>) -> Result<TriInvResult, Error> {
    a.check_square()?;
    TriangularShape::Lower.require(a)?;
    let upper = a.transpose();
    let result = invert_upper(&upper, method)?;
    Ok(TriInvResult {
        inverse: result.inverse.transpose(),
        ledger: result.ledger,
    })
}

/// General upper-triangular inversion dispatch.
pub fn invert_upper(a: &DenseMatrix, method: TriMethod<'_>) -> Result<TriInvResult, Error> {
    match method {
        TriMethod::Combinatorial(card) => {
            if TriangularShape::UpperUnit.matches(a) {
                invert_unit_upper_combinatorial(a, card)
            } else {
                let n = a.check_square()?;
                TriangularShape::Upper.require(a)?;
                if n > card.beta() {
                    return Err(Error::CardTooSmall {
                        needed: n,
                        beta: card.beta(),
                    });
                }
                let mut ledger = FlopLedger::new();
                let inverse = combrit_base(a, card, &mut ledger)?;
                Ok(TriInvResult::new(inverse, ledger))
            }
        }
        TriMethod::Crit => invert_upper_crit(a),
        TriMethod::Combrit { card, base } => invert_upper_combrit(a, card, base),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopscotch::build_card;
    use crate::matmul::matmul_naive;
    use crate::matrix::max_abs_residual;

    /// The worked 4x4 example: a unit upper matrix with small integer
    /// entries and its exact integer inverse.
    pub(crate) fn golden_t4() -> DenseMatrix {
        DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 4.0, 1.0],
            vec![0.0, 1.0, 3.0, 2.0],
            vec![0.0, 0.0, 1.0, 5.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
    }

    pub(crate) fn golden_s4() -> DenseMatrix {
        DenseMatrix::from_rows(&[
            vec![1.0, -2.0, 2.0, -7.0],
            vec![0.0, 1.0, -3.0, 13.0],
            vec![0.0, 0.0, 1.0, -5.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
    }

    /// Independent integer oracle: back-substitution on a unit upper matrix
    /// with i64 arithmetic (exact).
    fn back_substitution_unit_upper_i64(t: &DenseMatrix) -> Vec<Vec<i64>> {
        let n = t.rows();
        let ti = |i: usize, j: usize| t[(i, j)] as i64;
        let mut s = vec![vec![0i64; n]; n];
        for i in 0..n {
            s[i][i] = 1;
        }
        for d in 1..n {
            for i in 0..n - d {
                let j = i + d;
                let mut acc = ti(i, j);
                for p in i + 1..j {
                    acc += ti(i, p) * s[p][j];
                }
                s[i][j] = -acc;
            }
        }
        s
    }

    fn int_unit_upper(n: usize, seed: u64) -> DenseMatrix {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
        DenseMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else if j > i {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (((state >> 33) % 7) as i64 - 3) as f64
            } else {
                0.0
            }
        })
    }

    #[test]
    fn golden_combinatorial() {
        let card = build_card(4).unwrap();
        let r = invert_unit_upper_combinatorial(&golden_t4(), &card).unwrap();
        assert_eq!(r.inverse, golden_s4());
        let prod = matmul_naive(&golden_t4(), &r.inverse).unwrap();
        assert_eq!(prod, DenseMatrix::identity(4));
    }

    #[test]
    fn golden_crit_star() {
        let r = invert_unit_upper_crit_star(&golden_t4()).unwrap();
        assert_eq!(r.inverse, golden_s4());
    }

    #[test]
    fn golden_combrit() {
        let card = build_card(2).unwrap();
        for base in [1usize, 2] {
            let r = invert_upper_combrit(&golden_t4(), &card, base).unwrap();
            assert_eq!(r.inverse, golden_s4(), "base {base}");
        }
    }

    #[test]
    fn combinatorial_identity() {
        let card = build_card(5).unwrap();
        let r = invert_unit_upper_combinatorial(&DenseMatrix::identity(5), &card).unwrap();
        assert_eq!(r.inverse, DenseMatrix::identity(5));
    }

    #[test]
    fn crit_star_identity() {
        let r = invert_unit_upper_crit_star(&DenseMatrix::identity(6)).unwrap();
        assert_eq!(r.inverse, DenseMatrix::identity(6));
    }

    #[test]
    fn combinatorial_matches_integer_oracle() {
        let card = build_card(7).unwrap();
        for seed in 0..20 {
            let t = int_unit_upper(7, seed);
            let want = back_substitution_unit_upper_i64(&t);
            let got = invert_unit_upper_combinatorial(&t, &card).unwrap().inverse;
            for i in 0..7 {
                for j in 0..7 {
                    assert_eq!(got[(i, j)], want[i][j] as f64, "seed {seed} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn crit_diagonal_case() {
        let r = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 5.0]]);
        let inv = invert_upper_crit(&r).unwrap().inverse;
        assert_eq!(
            inv,
            DenseMatrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.2]])
        );
    }

    #[test]
    fn crit_2x2_closed_form() {
        let r = DenseMatrix::from_rows(&[vec![2.0, 4.0], vec![0.0, 4.0]]);
        let inv = invert_upper_crit(&r).unwrap().inverse;
        assert_eq!(
            inv,
            DenseMatrix::from_rows(&[vec![0.5, -0.5], vec![0.0, 0.25]])
        );
    }

    #[test]
    fn crit_singular_diagonal() {
        let r = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(
            invert_upper_crit(&r).unwrap_err(),
            Error::SingularDiagonal { index: 1 }
        );
    }

    #[test]
    fn crit_star_ledger_counts() {
        // phi counts for order 4: 4 multiplications, 1 addition
        let r = invert_unit_upper_crit_star(&int_unit_upper(4, 5)).unwrap();
        let led = r.ledger.unwrap();
        assert_eq!((led.mul, led.addsub, led.div), (4, 1, 0));
    }

    #[test]
    fn crit_ledger_counts() {
        // order 2: three divisions and nothing else
        let r = DenseMatrix::from_rows(&[vec![2.0, 4.0], vec![0.0, 4.0]]);
        let led = invert_upper_crit(&r).unwrap().ledger.unwrap();
        assert_eq!((led.div, led.mul, led.addsub), (3, 0, 0));
        // order 8: divisions are m(m+1)/2
        let mut m = int_unit_upper(8, 9);
        for i in 0..8 {
            m[(i, i)] = 2.0;
        }
        let led = invert_upper_crit(&m).unwrap().ledger.unwrap();
        assert_eq!(led.div, 36);
    }

    #[test]
    fn combrit_block_diagonal_input() {
        let card = build_card(2).unwrap();
        let mut a = DenseMatrix::zeros(4, 4);
        let b1 = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 4.0]]);
        let b2 = DenseMatrix::from_rows(&[vec![1.0, -3.0], vec![0.0, 2.0]]);
        a.paste(0, 0, &b1);
        a.paste(2, 2, &b2);
        let inv = invert_upper_combrit(&a, &card, 2).unwrap().inverse;
        let i1 = invert_upper_crit(&b1).unwrap().inverse;
        let i2 = invert_upper_crit(&b2).unwrap().inverse;
        assert_eq!(inv.submatrix(0, 0, 2, 2), i1);
        assert_eq!(inv.submatrix(2, 2, 2, 2), i2);
        assert_eq!(inv.submatrix(0, 2, 2, 2), DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn combrit_matches_crit_on_general_upper() {
        let card = build_card(2).unwrap();
        let mut a = int_unit_upper(4, 77);
        for i in 0..4 {
            a[(i, i)] = 1.0 + 0.25 * (i as f64 + 1.0);
        }
        let combrit = invert_upper_combrit(&a, &card, 1).unwrap().inverse;
        let crit = invert_upper_crit(&a).unwrap().inverse;
        assert!(max_abs_residual(&combrit, &crit).unwrap() <= 1e-12);
    }

    #[test]
    fn combrit_pads_awkward_orders() {
        let card = build_card(2).unwrap();
        let mut a = int_unit_upper(5, 13);
        for i in 0..5 {
            a[(i, i)] = if i % 2 == 0 { 2.0 } else { -1.5 };
        }
        let combrit = invert_upper_combrit(&a, &card, 1).unwrap().inverse;
        let crit = invert_upper_crit(&a).unwrap().inverse;
        assert!(max_abs_residual(&combrit, &crit).unwrap() <= 1e-12);
    }

    #[test]
    fn card_too_small_is_reported() {
        let card = build_card(3).unwrap();
        let t = int_unit_upper(5, 1);
        assert_eq!(
            invert_unit_upper_combinatorial(&t, &card).unwrap_err(),
            Error::CardTooSmall { needed: 5, beta: 3 }
        );
    }

    #[test]
    fn lower_inversion_through_transpose() {
        let lt = golden_t4().transpose();
        let inv = invert_lower(&lt, TriMethod::Crit).unwrap().inverse;
        assert_eq!(inv, golden_s4().transpose());
        let id = invert_lower(&DenseMatrix::identity(3), TriMethod::Crit)
            .unwrap()
            .inverse;
        assert_eq!(id, DenseMatrix::identity(3));
    }

    #[test]
    fn lower_unit_residual() {
        let t = int_unit_upper(16, 3).transpose();
        let inv = invert_lower(&t, TriMethod::Crit).unwrap().inverse;
        let prod = matmul_naive(&t, &inv).unwrap();
        let resid = max_abs_residual(&prod, &DenseMatrix::identity(16)).unwrap();
        assert!(resid <= 1e-10, "residual {resid}");
    }

    #[test]
    fn structural_zeros_exact() {
        let card = build_card(4).unwrap();
        let a = int_unit_upper(4, 40);
        for r in [
            invert_unit_upper_combinatorial(&a, &card).unwrap(),
            invert_unit_upper_crit_star(&a).unwrap(),
            invert_upper_combrit(&a, &card, 2).unwrap(),
        ] {
            for i in 0..4 {
                for j in 0..i {
                    assert_eq!(r.inverse[(i, j)].to_bits(), 0.0f64.to_bits());
                }
            }
        }
    }
}
