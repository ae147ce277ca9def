//! Joint scoring of neighbouring coefficients.
//!
//! Each window of three consecutive usable coefficients picks the candidate
//! triplet minimizing `w * data + (1 - w) * smoothness`; every coefficient then
//! takes the mode of the votes cast by the windows that contain it.

use super::{raw_estimates, DistanceMatrix, Estimate, EstimationParams, RegVariant, RowStatus};

/// Smoothness penalty of candidate `c` between its neighbours.
pub fn reg_term(c_prev: u32, c: u32, c_next: u32, variant: RegVariant) -> f64 {
    let delta = (c.abs_diff(c_prev) + c.abs_diff(c_next)) as f64;
    let c = c as f64;
    match variant {
        RegVariant::Reg1 => delta / 2.0,
        RegVariant::Reg2 => delta / (2.0 * c.sqrt()),
        RegVariant::Reg3 => delta / (2.0 * c),
    }
}

/// Min-max normalization to `[0, 1]` over finite entries; infinite entries stay
/// infinite and a flat row maps to zeros.
fn normalize(row: &[f64]) -> Vec<f64> {
    let finite = row.iter().copied().filter(|d| d.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
        (lo.min(d), hi.max(d))
    });
    let span = hi - lo;
    row.iter()
        .map(|&d| {
            if !d.is_finite() {
                f64::INFINITY
            } else if span > 0.0 {
                (d - lo) / span
            } else {
                0.0
            }
        })
        .collect()
}

/// Candidate triplet (1-based) minimizing the combined score of three rows.
///
/// Rows are raw distances; each is normalized on its own. Ties go to the
/// lexicographically smallest triplet.
pub fn window_argmin(rows: [&[f64]; 3], w: f64, variant: RegVariant) -> [u32; 3] {
    let [a, b, c] = rows.map(normalize);
    let m = a.len() as u32;
    // Smoothness depends only on the triplet, so it is shared by every window.
    let mut best = (f64::INFINITY, [1, 1, 1]);
    for j1 in 1..=m {
        let da = a[j1 as usize - 1];
        for j2 in 1..=m {
            let dab = da + b[j2 as usize - 1];
            for j3 in 1..=m {
                let data = (dab + c[j3 as usize - 1]) / 3.0;
                let s = w * data + (1.0 - w) * reg_term(j1, j2, j3, variant);
                if s < best.0 {
                    best = (s, [j1, j2, j3]);
                }
            }
        }
    }
    best.1
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegularizeOutcome {
    Regularized(Vec<Estimate>),
    /// Fewer than three usable rows; the raw estimates are returned.
    Skipped(Vec<Estimate>),
}

impl RegularizeOutcome {
    pub fn into_estimates(self) -> Vec<Estimate> {
        match self {
            RegularizeOutcome::Regularized(e) | RegularizeOutcome::Skipped(e) => e,
        }
    }
}

/// Mode of the votes; ties go to the middle-position vote, then to the smaller value.
fn aggregate(votes: &[(u32, usize)]) -> u32 {
    let mut counts: Vec<(u32, usize)> = Vec::new();
    for &(v, _) in votes {
        match counts.iter_mut().find(|(x, _)| *x == v) {
            Some((_, n)) => *n += 1,
            None => counts.push((v, 1)),
        }
    }
    let top = counts
        .iter()
        .map(|&(_, n)| n)
        .max()
        .expect("at least one vote");
    let mut tied: Vec<u32> = counts
        .iter()
        .filter(|&&(_, n)| n == top)
        .map(|&(v, _)| v)
        .collect();
    tied.sort_unstable();
    if let Some(&(mid, _)) = votes
        .iter()
        .find(|&&(v, pos)| pos == 1 && tied.contains(&v))
    {
        return mid;
    }
    tied[0]
}

pub fn regularize(d: &DistanceMatrix, p: &EstimationParams) -> RegularizeOutcome {
    let raw = raw_estimates(d);
    let ok: Vec<usize> = (0..d.k())
        .filter(|&i| d.rows[i].status == RowStatus::Ok)
        .collect();
    if ok.len() < 3 {
        return RegularizeOutcome::Skipped(raw);
    }
    let mut votes: Vec<Vec<(u32, usize)>> = vec![Vec::new(); d.k()];
    for win in ok.windows(3) {
        let rows = [0, 1, 2].map(|t| d.rows[win[t]].distances.as_slice());
        let triplet = window_argmin(rows, p.w, p.reg_variant);
        for t in 0..3 {
            votes[win[t]].push((triplet[t], t));
        }
    }
    let out = raw
        .iter()
        .enumerate()
        .map(|(i, e)| match e {
            Estimate::Value(_) if !votes[i].is_empty() => {
                Estimate::Value(aggregate(&votes[i]) as u8)
            }
            other => *other,
        })
        .collect();
    RegularizeOutcome::Regularized(out)
}
