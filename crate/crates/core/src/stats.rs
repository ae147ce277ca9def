//! Coefficient histograms, Laplacian fitting and the chi-square distance.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("cannot build a histogram from zero samples")]
    Empty,
    #[error("histogram bins must have strictly increasing values and positive counts")]
    InvalidBins,
}

/// One occupied histogram bin: an integer coefficient value and its sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bin {
    pub value: i32,
    pub count: u32,
}

/// Sparse normalized histogram of integer values, bin width 1.
///
/// Counts are kept exactly; masses are `count / total`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoeffHistogram {
    bins: Vec<Bin>,
    total: u32,
}

/// Borrowed view of a histogram, used for records stored in shared arenas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistRef<'a> {
    bins: &'a [Bin],
    total: u32,
}

impl<'a> HistRef<'a> {
    /// `bins` must already satisfy the histogram invariants.
    pub(crate) fn from_parts(bins: &'a [Bin], total: u32) -> Self {
        HistRef { bins, total }
    }

    pub fn bins(&self) -> &'a [Bin] {
        self.bins
    }

    pub fn count(&self) -> u32 {
        self.total
    }

    pub fn support(&self) -> impl Iterator<Item = i32> + 'a {
        self.bins.iter().map(|b| b.value)
    }

    pub fn masses(&self) -> impl Iterator<Item = f64> + 'a {
        let total = self.total as f64;
        self.bins.iter().map(move |b| b.count as f64 / total)
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn to_owned(&self) -> CoeffHistogram {
        CoeffHistogram {
            bins: self.bins.to_vec(),
            total: self.total,
        }
    }
}

impl<'a> From<&'a CoeffHistogram> for HistRef<'a> {
    fn from(h: &'a CoeffHistogram) -> Self {
        h.as_ref()
    }
}

impl CoeffHistogram {
    pub fn from_values(values: impl IntoIterator<Item = i32>) -> Result<Self, StatsError> {
        let mut v: Vec<i32> = values.into_iter().collect();
        if v.is_empty() {
            return Err(StatsError::Empty);
        }
        v.sort_unstable();
        let mut bins: Vec<Bin> = Vec::new();
        for x in v.iter().copied() {
            match bins.last_mut() {
                Some(b) if b.value == x => b.count += 1,
                _ => bins.push(Bin { value: x, count: 1 }),
            }
        }
        Ok(CoeffHistogram {
            bins,
            total: v.len() as u32,
        })
    }

    pub fn from_bins(bins: Vec<Bin>) -> Result<Self, StatsError> {
        if bins.is_empty() {
            return Err(StatsError::Empty);
        }
        let ok =
            bins.iter().all(|b| b.count > 0) && bins.windows(2).all(|w| w[0].value < w[1].value);
        if !ok {
            return Err(StatsError::InvalidBins);
        }
        let total = bins.iter().map(|b| b.count as u64).sum::<u64>();
        let total = u32::try_from(total).map_err(|_| StatsError::InvalidBins)?;
        Ok(CoeffHistogram { bins, total })
    }

    pub fn as_ref(&self) -> HistRef<'_> {
        HistRef {
            bins: &self.bins,
            total: self.total,
        }
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn support(&self) -> Vec<i32> {
        self.as_ref().support().collect()
    }

    pub fn mass(&self) -> Vec<f64> {
        self.as_ref().masses().collect()
    }

    /// Number of samples the histogram was built from.
    pub fn count(&self) -> u32 {
        self.total
    }
}

pub fn build_histogram(values: &[i32]) -> Result<CoeffHistogram, StatsError> {
    CoeffHistogram::from_values(values.iter().copied())
}

/// Location and scale of a Laplacian density `exp(-|x - mu| / beta) / (2 beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplacianParams {
    pub mu: f64,
    pub beta: f64,
}

/// Maximum-likelihood Laplacian fit: the lower weighted median and the mean
/// absolute deviation around it.
pub fn fit_laplacian<'a>(h: impl Into<HistRef<'a>>) -> LaplacianParams {
    let h = h.into();
    let total = h.total as u64;
    let mut cum = 0u64;
    let mut mu = h.bins[0].value;
    for b in h.bins {
        cum += b.count as u64;
        if 2 * cum >= total {
            mu = b.value;
            break;
        }
    }
    let dev: u64 = h
        .bins
        .iter()
        .map(|b| b.count as u64 * (b.value as i64 - mu as i64).unsigned_abs())
        .sum();
    LaplacianParams {
        mu: mu as f64,
        beta: dev as f64 / total as f64,
    }
}

/// Chi-square distance over the union of supports; a bin present in only one
/// histogram contributes that histogram's mass.
pub fn chi2<'a, 'b>(a: impl Into<HistRef<'a>>, b: impl Into<HistRef<'b>>) -> f64 {
    let (a, b) = (a.into(), b.into());
    let (ia, ib) = (1.0 / a.total as f64, 1.0 / b.total as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sum = 0.0;
    while i < a.bins.len() && j < b.bins.len() {
        let (x, y) = (&a.bins[i], &b.bins[j]);
        match x.value.cmp(&y.value) {
            std::cmp::Ordering::Less => {
                sum += x.count as f64 * ia;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                sum += y.count as f64 * ib;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let (p, q) = (x.count as f64 * ia, y.count as f64 * ib);
                let d = p - q;
                sum += d * d / (p + q);
                i += 1;
                j += 1;
            }
        }
    }
    sum += a.bins[i..].iter().map(|x| x.count as f64 * ia).sum::<f64>();
    sum += b.bins[j..].iter().map(|y| y.count as f64 * ib).sum::<f64>();
    sum
}

/// True when every sample fell into the same bin.
pub fn is_degenerate<'a>(h: impl Into<HistRef<'a>>) -> bool {
    h.into().bins.len() == 1
}


#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;
    use proptest::prelude::*;

    fn hist(values: &[i32]) -> CoeffHistogram {
        build_histogram(values).unwrap()
    }

    #[test]
    fn counting() {
        let h = hist(&[0, 0, 1]);
        assert_eq!(h.support(), vec![0, 1]);
        let m = h.mass();
        assert!((m[0] - 2.0 / 3.0).abs() < 1e-15 && (m[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(h.count(), 3);
        assert!(is_degenerate(&hist(&[0; 64])));
        assert!(!is_degenerate(&hist(&[0, 1])));
        assert_eq!(build_histogram(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn mirror_symmetry() {
        let v = [3, -1, 0, 0, 2, 5, 5];
        let neg: Vec<i32> = v.iter().map(|x| -x).collect();
        let (a, b) = (hist(&v), hist(&neg));
        let mut rev: Vec<i32> = b.support().iter().map(|x| -x).collect();
        rev.reverse();
        assert_eq!(a.support(), rev);
        let mut bm = b.mass();
        bm.reverse();
        assert_eq!(a.mass(), bm);
    }

    #[test]
    fn laplacian_fits() {
        let p = fit_laplacian(&hist(&[4]));
        assert_eq!((p.mu, p.beta), (4.0, 0.0));
        let p = fit_laplacian(&hist(&[-1, 1]));
        assert_eq!((p.mu, p.beta), (-1.0, 1.0));
        assert_eq!(brute_force_location(&hist(&[-1, 1])), -1);
        let p = fit_laplacian(&hist(&[-2, -1, 0, 0, 0, 1, 2]));
        assert_eq!(p.mu, 0.0);
    }

    #[test]
    fn chi2_examples() {
        let a =
            CoeffHistogram::from_bins(vec![Bin { value: 0, count: 2 }, Bin { value: 1, count: 2 }])
                .unwrap();
        let b =
            CoeffHistogram::from_bins(vec![Bin { value: 0, count: 1 }, Bin { value: 1, count: 3 }])
                .unwrap();
        let expected = 0.0625 / 0.75 + 0.0625 / 1.25;
        assert!((chi2(&a, &b) - expected).abs() < 1e-15);
        assert!((chi2_dense(&a, &b) - expected).abs() < 1e-15);
        assert_eq!(chi2(&a, &a), 0.0);
        let c = hist(&[5, 6, 7]);
        assert!((chi2(&a, &c) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn from_bins_validates() {
        assert!(CoeffHistogram::from_bins(vec![
            Bin { value: 1, count: 1 },
            Bin { value: 1, count: 1 }
        ])
        .is_err());
        assert!(CoeffHistogram::from_bins(vec![Bin { value: 1, count: 0 }]).is_err());
        assert!(CoeffHistogram::from_bins(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn mass_sums_to_one(values in prop::collection::vec(-40i32..40, 1..300)) {
            let h = hist(&values);
            prop_assert!((h.mass().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(h.support().windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(h.count() as usize, values.len());
        }

        #[test]
        fn chi2_properties(a in prop::collection::vec(-8i32..8, 1..80), b in prop::collection::vec(-8i32..8, 1..80)) {
            let (ha, hb) = (hist(&a), hist(&b));
            let d = chi2(&ha, &hb);
            prop_assert_eq!(d, chi2(&hb, &ha));
            prop_assert!(d >= 0.0);
            prop_assert!((d - chi2_dense(&ha, &hb)).abs() < 1e-12);
            prop_assert_eq!(d == 0.0, ha.mass() == hb.mass() && ha.support() == hb.support());
        }

        #[test]
        fn location_is_brute_force_minimizer(values in prop::collection::vec(-30i32..30, 1..100)) {
            let h = hist(&values);
            prop_assert_eq!(fit_laplacian(&h).mu, brute_force_location(&h) as f64);
        }
    }
}
