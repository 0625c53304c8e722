//! Shape-level train/val/test splits.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;

use super::{PipelineError, Split};
use crate::rng::{derive, label, seeded};

/// 9,068 / 504 / 504 of 10,076 shapes.
pub const DEFAULT_RATIOS: [f64; 3] = [0.9, 0.05, 0.05];

pub(crate) fn check_ratios(ratios: &[f64; 3]) -> Result<(), PipelineError> {
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(PipelineError::Data(format!("split ratios must be non-negative, got {ratios:?}")));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(PipelineError::Data(format!("split ratios must sum to 1, got {sum}")));
    }
    Ok(())
}

/// Part sizes for `n` shapes by largest remainder: floors first, then one
/// extra shape to the parts with the largest fractional share (earlier part
/// on ties).
pub fn split_counts(n: usize, ratios: &[f64; 3]) -> Result<[usize; 3], PipelineError> {
    check_ratios(ratios)?;
    let parts = ratios.iter().filter(|&&r| r > 0.0).count();
    if n < parts {
        return Err(PipelineError::Data(format!("{n} shapes cannot fill {parts} split parts")));
    }
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, e) in counts.iter_mut().zip(&exact) {
        *c = e.floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if ratios[i] > 0.0 {
            counts[i] += 1;
            left -= 1;
        }
    }
    Ok(counts)
}

/// Shuffle the distinct ids with `seed` and cut them into parts sized by
/// [`split_counts`]. Returned sorted by id.
pub fn assign_splits(ids: &[String], ratios: &[f64; 3], seed: u64) -> Result<Vec<(String, Split)>, PipelineError> {
    let mut unique: Vec<String> = ids.to_vec();
    unique.sort();
    unique.dedup();
    let counts = split_counts(unique.len(), ratios)?;
    unique.shuffle(&mut seeded(seed));
    let mut out = Vec::with_capacity(unique.len());
    let mut it = unique.into_iter();
    for (split, n) in Split::ALL.into_iter().zip(counts) {
        out.extend(it.by_ref().take(n).map(|id| (id, split)));
    }
    out.sort();
    Ok(out)
}

/// Split of one shape from a hash of its id alone, for runs without an
/// assignment file. Sizes are only approximately proportional.
pub fn hash_split(id: &str, ratios: &[f64; 3], seed: u64) -> Split {
    let u = (derive(seed, &[label(id)]) >> 11) as f64 / (1u64 << 53) as f64;
    let mut acc = 0.0;
    for (split, r) in Split::ALL.into_iter().zip(ratios) {
        acc += r;
        if u < acc {
            return split;
        }
    }
    Split::ALL.into_iter().zip(ratios).rev().find(|(_, r)| **r > 0.0).map_or(Split::Train, |(s, _)| s)
}

/// `shape_id,split` rows with a header.
pub fn write_split_csv<W: Write>(out: W, rows: &[(String, Split)]) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["shape_id", "split"])?;
    for (id, s) in rows {
        w.write_record([id.as_str(), s.as_str()])?;
    }
    w.flush().map_err(|e| PipelineError::Internal(e.to_string()))?;
    Ok(())
}

pub fn read_split_csv<R: Read>(input: R) -> Result<BTreeMap<String, Split>, PipelineError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let (Some(id), Some(s)) = (rec.get(0), rec.get(1)) else {
            return Err(PipelineError::Format("split row needs shape_id and split".into()));
        };
        let split = Split::parse(s).ok_or_else(|| PipelineError::Format(format!("unknown split {s:?}")))?;
        if out.insert(id.to_string(), split).is_some() {
            return Err(PipelineError::Format(format!("shape {id} listed twice")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i:05}")).collect()
    }

    #[test]
    fn default_split_sizes() {
        assert_eq!(split_counts(10_076, &DEFAULT_RATIOS).unwrap(), [9068, 504, 504]);
    }

    #[test]
    fn all_train() {
        let rows = assign_splits(&ids(17), &[1.0, 0.0, 0.0], 3).unwrap();
        assert!(rows.iter().all(|(_, s)| *s == Split::Train));
    }

    #[test]
    fn seeds_permute_but_keep_sizes() {
        let a = assign_splits(&ids(200), &DEFAULT_RATIOS, 1).unwrap();
        let b = assign_splits(&ids(200), &DEFAULT_RATIOS, 2).unwrap();
        assert_ne!(a, b);
        let count = |rows: &[(String, Split)], s| rows.iter().filter(|(_, x)| *x == s).count();
        for s in Split::ALL {
            assert_eq!(count(&a, s), count(&b, s));
        }
    }

    #[test]
    fn too_few_shapes() {
        assert!(split_counts(2, &DEFAULT_RATIOS).is_err());
        assert!(split_counts(3, &[0.5, 0.25, 0.2]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let rows = assign_splits(&ids(30), &DEFAULT_RATIOS, 9).unwrap();
        let mut buf = Vec::new();
        write_split_csv(&mut buf, &rows).unwrap();
        let back = read_split_csv(buf.as_slice()).unwrap();
        assert_eq!(back.into_iter().collect::<Vec<_>>(), rows);
    }

    #[test]
    fn hash_split_is_stable_and_respects_zero_parts() {
        assert_eq!(hash_split("cube", &DEFAULT_RATIOS, 4), hash_split("cube", &DEFAULT_RATIOS, 4));
        for i in 0..100 {
            assert_eq!(hash_split(&format!("s{i}"), &[1.0, 0.0, 0.0], 4), Split::Train);
        }
    }
}
