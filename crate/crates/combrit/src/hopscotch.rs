//! Hopscotch series: strictly increasing index sequences with fixed
//! endpoints, one per subset of the interior integers.
//!
//! The series for endpoints `(a, b)` has `2^(b-a-1)` sequences. Only the
//! series for endpoints `(1, j)` need to be materialized: every other
//! diagonal reuses them through the translation property (shift every index
//! by a constant). A [`HopscotchCard`] bundles the `(1, 2)..(1, beta)` series
//! and is built offline, persisted as plain text, and shared read-only by the
//! inversion routines.
//!
//! Canonical enumeration order: interior subsets by size descending, then
//! lexicographically ascending within a size. The order is deterministic and
//! shift-invariant.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, FileError};

/// Largest interior width that `hopscotch_series` will materialize directly.
const MAX_INTERIOR: usize = 25;

/// One strictly increasing sequence with fixed endpoints (1-based indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HopscotchSequence {
    indices: Vec<usize>,
}

impl HopscotchSequence {
    fn new(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        HopscotchSequence { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Sequence cardinality, the paper's ell-star.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `(-1)^(len - 1)` as a float factor.
    pub fn sign(&self) -> f64 {
        if self.len() % 2 == 0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Every index shifted by `xi`.
    pub fn translate(&self, xi: usize) -> HopscotchSequence {
        HopscotchSequence::new(self.indices.iter().map(|&v| v + xi).collect())
    }
}

/// All sequences with endpoints `a` and `b`, canonical order; `H(a, a)` is
/// empty.
pub fn hopscotch_series(a: usize, b: usize) -> Result<Vec<HopscotchSequence>, Error> {
    if a == 0 || b < a {
        return Err(Error::InvalidEndpoints { a, b });
    }
    if a == b {
        return Ok(Vec::new());
    }
    let interior: Vec<usize> = (a + 1..b).collect();
    let t = interior.len();
    if t > MAX_INTERIOR {
        return Err(Error::CountOverflow);
    }
    let mut out = Vec::with_capacity(1usize << t);
    for size in (0..=t).rev() {
        for combo in combinations(&interior, size) {
            let mut indices = Vec::with_capacity(size + 2);
            indices.push(a);
            indices.extend_from_slice(&combo);
            indices.push(b);
            out.push(HopscotchSequence::new(indices));
        }
    }
    Ok(out)
}

/// `2^(b-a-1)`, the series cardinality, without materializing it.
pub fn hopscotch_count(a: usize, b: usize) -> Result<u64, Error> {
    if a == 0 || b <= a {
        return Err(Error::InvalidEndpoints { a, b });
    }
    let t = b - a - 1;
    if t >= 63 {
        return Err(Error::CountOverflow);
    }
    Ok(1u64 << t)
}

/// Shift every sequence by `xi`; equals `hopscotch_series(a + xi, b + xi)`
/// element-wise under the canonical order.
pub fn translate_series(series: &[HopscotchSequence], xi: usize) -> Vec<HopscotchSequence> {
    series.iter().map(|s| s.translate(xi)).collect()
}

/// Lexicographically ordered `size`-combinations of `items`.
fn combinations(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    if size > n {
        return Vec::new();
    }
    if size == 0 {
        return vec![Vec::new()];
    }
    let mut idx: Vec<usize> = (0..size).collect();
    let mut out = Vec::new();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        // advance to the next combination
        let mut k = size;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] != k + n - size {
                break;
            }
            if k == 0 {
                return out;
            }
        }
        idx[k] += 1;
        for j in k + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Precomputed series for endpoints `(1, 2) ..= (1, beta)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopscotchCard {
    beta: usize,
    /// `series[j - 2]` holds the series for endpoints `(1, j)`.
    series: Vec<Vec<HopscotchSequence>>,
}

/// Supported card orders; the cap keeps a card under 2^23 sequences.
pub const CARD_BETA_RANGE: std::ops::RangeInclusive<usize> = 2..=24;

/// Enumerate the card for endpoints `(1, 2)..(1, beta)`.
pub fn build_card(beta: usize) -> Result<HopscotchCard, Error> {
    if !CARD_BETA_RANGE.contains(&beta) {
        return Err(Error::CardTooLarge { beta });
    }
    let mut series = Vec::with_capacity(beta - 1);
    for j in 2..=beta {
        series.push(hopscotch_series(1, j)?);
    }
    Ok(HopscotchCard { beta, series })
}

impl HopscotchCard {
    pub fn beta(&self) -> usize {
        self.beta
    }

    /// Series for endpoints `(1, span)`, `2 <= span <= beta`.
    pub fn series_for(&self, span: usize) -> Option<&[HopscotchSequence]> {
        if (2..=self.beta).contains(&span) {
            Some(&self.series[span - 2])
        } else {
            None
        }
    }

    pub fn total_sequences(&self) -> usize {
        self.series.iter().map(Vec::len).sum()
    }
}

// ---------------------------------------------------------------------------
// Card file format (UTF-8 text):
//
//   HOPSCOTCH-CARD v1 beta=<B>
//   j=<col>: i1,i2,...,ik
//
// One line per sequence, grouped by ascending column span, sequences in the
// canonical order. Signs are recomputed on load, never stored.
// ---------------------------------------------------------------------------

pub fn save_card_to(w: impl Write, card: &HopscotchCard) -> Result<(), FileError> {
    let mut w = BufWriter::new(w);
    writeln!(w, "HOPSCOTCH-CARD v1 beta={}", card.beta)?;
    for j in 2..=card.beta {
        for seq in card.series_for(j).unwrap() {
            let joined = seq
                .indices()
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",");
            writeln!(w, "j={j}: {joined}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_card_from(r: impl Read) -> Result<HopscotchCard, FileError> {
    let mut lines = BufReader::new(r).lines();
    let header = lines.next().ok_or(FileError::Format {
        line: 1,
        msg: "empty card file".into(),
    })??;
    let beta: usize = header
        .strip_prefix("HOPSCOTCH-CARD v1 beta=")
        .and_then(|t| t.trim().parse().ok())
        .ok_or(FileError::Format {
            line: 1,
            msg: "expected \"HOPSCOTCH-CARD v1 beta=<B>\"".into(),
        })?;
    if !CARD_BETA_RANGE.contains(&beta) {
        return Err(FileError::Format {
            line: 1,
            msg: format!("beta {beta} outside supported range"),
        });
    }
    let mut series: Vec<Vec<HopscotchSequence>> = vec![Vec::new(); beta - 1];
    let mut lineno = 1;
    for line in lines {
        let line = line?;
        lineno += 1;
        if line.trim().is_empty() {
            continue;
        }
        let (jpart, ipart) = line.split_once(':').ok_or(FileError::Format {
            line: lineno,
            msg: "expected \"j=<col>: i1,i2,...\"".into(),
        })?;
        let j: usize = jpart
            .trim()
            .strip_prefix("j=")
            .and_then(|t| t.parse().ok())
            .ok_or(FileError::Format {
                line: lineno,
                msg: "bad column span".into(),
            })?;
        if !(2..=beta).contains(&j) {
            return Err(FileError::Format {
                line: lineno,
                msg: format!("column span {j} outside 2..={beta}"),
            });
        }
        let mut indices = Vec::new();
        for tok in ipart.trim().split(',') {
            let v: usize = tok.trim().parse().map_err(|_| FileError::Format {
                line: lineno,
                msg: format!("bad index {tok:?}"),
            })?;
            indices.push(v);
        }
        let increasing = indices.windows(2).all(|w| w[0] < w[1]);
        if indices.first() != Some(&1) || indices.last() != Some(&j) || !increasing {
            return Err(FileError::Format {
                line: lineno,
                msg: format!("sequence is not a valid (1,{j}) hopscotch sequence"),
            });
        }
        series[j - 2].push(HopscotchSequence::new(indices));
    }
    for (k, s) in series.iter().enumerate() {
        let j = k + 2;
        let expect = 1usize << (j - 2);
        if s.len() != expect {
            return Err(FileError::Format {
                line: lineno,
                msg: format!("span {j}: expected {expect} sequences, found {}", s.len()),
            });
        }
    }
    Ok(HopscotchCard { beta, series })
}

pub fn save_card(path: impl AsRef<Path>, card: &HopscotchCard) -> Result<(), FileError> {
    save_card_to(std::fs::File::create(path)?, card)
}

pub fn load_card(path: impl AsRef<Path>) -> Result<HopscotchCard, FileError> {
    load_card_from(std::fs::File::open(path)?)
}
