use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tabular::{Column, ColumnData};

/// Upper bound on equal-frequency bins for continuous columns.
pub const MAX_BINS: usize = 10;

/// Plug-in mutual information (nats) over the empirical joint distribution
/// of two discrete sequences.
pub fn mutual_information(x: &[u32], y: &[u32]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (xs, nx) = densify(x);
    let (ys, ny) = densify(y);
    let mut joint = alloc::vec![0u64; nx * ny];
    let mut px = alloc::vec![0u64; nx];
    let mut py = alloc::vec![0u64; ny];
    for (&a, &b) in xs.iter().zip(&ys) {
        joint[a * ny + b] += 1;
        px[a] += 1;
        py[b] += 1;
    }
    let n = x.len() as f64;
    let mut mi = 0.0;
    for a in 0..nx {
        for b in 0..ny {
            let nab = joint[a * ny + b];
            if nab == 0 {
                continue;
            }
            let nab = nab as f64;
            mi += nab / n * libm::log(n * nab / (px[a] as f64 * py[b] as f64));
        }
    }
    Ok(mi.max(0.0))
}

/// Plug-in Shannon entropy (nats).
pub fn entropy(x: &[u32]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let (xs, nx) = densify(x);
    let mut counts = alloc::vec![0u64; nx];
    for a in xs {
        counts[a] += 1;
    }
    let n = x.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * libm::log(p)
        })
        .sum()
}

/// Maps arbitrary codes onto `0..k` preserving order.
fn densify(x: &[u32]) -> (Vec<usize>, usize) {
    let mut distinct: Vec<u32> = x.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mapped = x
        .iter()
        .map(|v| distinct.binary_search(v).expect("value is present"))
        .collect();
    (mapped, distinct.len())
}

/// Equal-frequency binning into `min(max_bins, distinct)` bins. Tied values
/// always share a bin.
pub fn equal_frequency_bins(values: &[f64], max_bins: usize) -> Vec<u32> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut distinct = sorted.clone();
    distinct.dedup();
    let bins = max_bins.min(distinct.len()).max(1);
    let m = sorted.len();
    values
        .iter()
        .map(|v| {
            let first = sorted.partition_point(|s| s < v);
            ((first * bins) / m) as u32
        })
        .collect()
}

/// Discrete codes for a column: categorical codes as-is, numeric values
/// binned. Missing cells get a code of their own.
pub fn discretize(col: &Column) -> Vec<u32> {
    match &col.data {
        ColumnData::Categorical { levels, codes } => {
            let missing = levels.len() as u32;
            codes.iter().map(|c| c.unwrap_or(missing)).collect()
        }
        ColumnData::Numeric(v) => {
            let present: Vec<f64> = v.iter().flatten().copied().collect();
            let binned = equal_frequency_bins(&present, MAX_BINS);
            let missing = MAX_BINS as u32;
            let mut it = binned.into_iter();
            v.iter()
                .map(|x| match x {
                    Some(_) => it.next().expect("one bin per present value"),
                    None => missing,
                })
                .collect()
        }
    }
}
