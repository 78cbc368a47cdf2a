use crate::error::{DassError, Result};
use crate::field::{FieldBlock, Measurement};

/// Fill a full block of length `n` from the observed samples: linear between
/// consecutive observed indices, held constant outside the observed range.
pub fn interpolate_block(m: &Measurement, n: usize) -> Result<FieldBlock> {
    if m.pattern().block_length() != n {
        return Err(DassError::LengthMismatch {
            expected: n,
            actual: m.pattern().block_length(),
        });
    }
    let mut out = vec![0.0; n];
    fill_segment(&mut out, m.pattern().indices(), m.observed())?;
    FieldBlock::single(out, 0)
}

/// Interpolate each node segment of a concatenated block on its own, so
/// values never bleed across node boundaries. A node with no observed
/// samples takes its values from `fallback` (typically the model mean), or
/// zeros when none is given.
pub fn interpolate_segments(
    m: &Measurement,
    node_count: usize,
    fallback: Option<&[f64]>,
) -> Result<FieldBlock> {
    let n = m.pattern().block_length();
    if node_count == 0 || !n.is_multiple_of(node_count) {
        return Err(DassError::InvalidArgument(format!(
            "block length {n} not divisible into {node_count} nodes"
        )));
    }
    if let Some(f) = fallback {
        if f.len() != n {
            return Err(DassError::LengthMismatch {
                expected: n,
                actual: f.len(),
            });
        }
    }
    let seg = n / node_count;
    let mut out = vec![0.0; n];
    let idx = m.pattern().indices();
    let obs = m.observed();
    let mut start = 0;
    for node in 0..node_count {
        let lo = node * seg;
        let hi = lo + seg;
        let mut end = start;
        while end < idx.len() && idx[end] < hi {
            end += 1;
        }
        let local: Vec<usize> = idx[start..end].iter().map(|&i| i - lo).collect();
        if local.is_empty() {
            if let Some(f) = fallback {
                out[lo..hi].copy_from_slice(&f[lo..hi]);
            }
        } else {
            fill_segment(&mut out[lo..hi], &local, &obs[start..end])?;
        }
        start = end;
    }
    FieldBlock::new(out, 0, node_count)
}

fn fill_segment(out: &mut [f64], idx: &[usize], obs: &[f64]) -> Result<()> {
    let (first, last) = match (idx.first(), idx.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(DassError::InvalidPattern("pattern is empty".into())),
    };
    out[..=first].fill(obs[0]);
    out[last..].fill(obs[obs.len() - 1]);
    for (w, v) in idx.windows(2).zip(obs.windows(2)) {
        let (a, b) = (w[0], w[1]);
        let span = (b - a) as f64;
        for (i, slot) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            let t = (i - a) as f64 / span;
            *slot = v[0] + (v[1] - v[0]) * t;
        }
    }
    for (&i, &v) in idx.iter().zip(obs) {
        out[i] = v;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{select, SamplingPattern};
    use proptest::prelude::*;

    fn meas(idx: &[usize], y: &[f64], n: usize) -> Measurement {
        Measurement::new(y.to_vec(), SamplingPattern::new(idx.to_vec(), n).unwrap(), 0.0).unwrap()
    }

    #[test]
    fn full_pattern_is_identity() {
        let y = [3.0, -1.0, 2.0];
        let out = interpolate_block(&meas(&[0, 1, 2], &y, 3), 3).unwrap();
        assert_eq!(out.values(), &y);
    }

    #[test]
    fn linear_segment() {
        let out = interpolate_block(&meas(&[0, 4], &[0.0, 4.0], 5), 5).unwrap();
        assert_eq!(out.values(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn hold_extrapolation() {
        let out = interpolate_block(&meas(&[1, 2], &[5.0, 7.0], 4), 4).unwrap();
        assert_eq!(out.values(), &[5.0, 5.0, 7.0, 7.0]);
    }

    #[test]
    fn length_mismatch() {
        assert!(interpolate_block(&meas(&[0], &[1.0], 4), 5).is_err());
    }

    #[test]
    fn segments_do_not_bleed_across_nodes() {
        let m = meas(&[1, 2, 5], &[1.0, 3.0, 10.0], 8);
        let out = interpolate_segments(&m, 2, None).unwrap();
        assert_eq!(out.values(), &[1.0, 1.0, 3.0, 3.0, 10.0, 10.0, 10.0, 10.0]);

        let m = meas(&[0, 3], &[2.0, 4.0], 8);
        let fallback = [9.0; 8];
        let out = interpolate_segments(&m, 2, Some(&fallback)).unwrap();
        assert_eq!(out.values()[4..], [9.0; 4]);
    }

    proptest! {
        #[test]
        fn restriction_reproduces_observations(
            mask in prop::collection::vec(any::<bool>(), 20),
            vals in prop::collection::vec(-10.0f64..10.0, 20),
        ) {
            let mut idx: Vec<usize> = mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
            if idx.is_empty() { idx.push(7); }
            let y: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
            let m = meas(&idx, &y, 20);
            let out = interpolate_block(&m, 20).unwrap();
            prop_assert_eq!(select(out.values(), m.pattern()).unwrap(), y);
        }
    }
}
