use faer::Mat;

use super::{KPoint, Parity, TrackedBand};

/// Minimum squared overlap for two eigenvectors at neighbouring k to be
/// treated as the same band.
pub const OVERLAP_THRESHOLD: f64 = 0.5;

/// Follows bands across k by maximal eigenvector overlap, falling back to
/// frequency order for whatever the overlap pass leaves unmatched.
pub(crate) fn track(points: &[KPoint]) -> Vec<TrackedBand> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    let n = points.iter().map(|p| p.modes.len()).min().unwrap_or(0);
    let mut assignment: Vec<Vec<usize>> = (0..n).map(|b| vec![b]).collect();
    let mut prev_cols: Vec<usize> = (0..n).collect();
    let mut prev = first;
    for cur in &points[1..] {
        let m = cur.modes.len();
        let overlaps = overlap_matrix(prev, &prev_cols, cur);
        let mut candidates = Vec::new();
        for b in 0..n {
            for c in 0..m {
                if overlaps[(b, c)] > OVERLAP_THRESHOLD {
                    candidates.push((overlaps[(b, c)], b, c));
                }
            }
        }
        candidates.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut band_to_mode = vec![usize::MAX; n];
        let mut taken = vec![false; m];
        for (_, b, c) in candidates {
            if band_to_mode[b] == usize::MAX && !taken[c] {
                band_to_mode[b] = c;
                taken[c] = true;
            }
        }
        // Fallback: unmatched bands in frequency order take free modes in
        // frequency order.
        let mut free = (0..m).filter(|&c| !taken[c]);
        let mut unmatched: Vec<usize> = (0..n).filter(|&b| band_to_mode[b] == usize::MAX).collect();
        unmatched.sort_by(|&x, &y| {
            prev.modes[prev_cols[x]]
                .a_over_lambda
                .total_cmp(&prev.modes[prev_cols[y]].a_over_lambda)
        });
        for b in unmatched {
            band_to_mode[b] = free.next().expect("at least n modes per k");
        }
        for b in 0..n {
            assignment[b].push(band_to_mode[b]);
        }
        prev_cols = band_to_mode;
        prev = cur;
    }
    assignment
        .into_iter()
        .map(|modes| {
            let parity = dominant_parity(points, &modes);
            TrackedBand { modes, parity }
        })
        .collect()
}

fn overlap_matrix(prev: &KPoint, cols: &[usize], cur: &KPoint) -> Mat<f64> {
    let a = Mat::from_fn(prev.eigvecs.nrows(), cols.len(), |i, b| {
        prev.eigvecs[(i, cols[b])]
    });
    let prod = a.adjoint() * &cur.eigvecs;
    Mat::from_fn(prod.nrows(), prod.ncols(), |i, j| prod[(i, j)].norm_sqr())
}

fn dominant_parity(points: &[KPoint], modes: &[usize]) -> Parity {
    let mut even = 0;
    let mut odd = 0;
    for (p, &m) in points.iter().zip(modes) {
        match p.modes[m].parity {
            Parity::Even => even += 1,
            Parity::Odd => odd += 1,
            Parity::Unclassified => {}
        }
    }
    let half = modes.len() / 2;
    if even > half {
        Parity::Even
    } else if odd > half {
        Parity::Odd
    } else {
        Parity::Unclassified
    }
}
