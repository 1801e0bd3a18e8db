//! Equal-frequency feature binning and gradient histograms.

use super::ModelError;

/// Per-feature bin boundaries. Bin `i` holds values in `(cuts[i-1], cuts[i]]`;
/// the first and last bins are open toward the training range ends. Cuts sit
/// at midpoints between consecutive distinct training values, so a split
/// after bin `k` is the rule `x <= cuts[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinMapper {
    cuts: Vec<f64>,
    min: f64,
    max: f64,
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

impl BinMapper {
    /// Cuts at equal-frequency quantiles. Boundaries only fall between
    /// distinct values, so heavy duplicates merge bins. With at most `n_bins`
    /// distinct values every value gets its own bin.
    pub fn fit(values: &[f64], n_bins: usize) -> Result<Self, ModelError> {
        if n_bins < 2 {
            return Err(ModelError::InvalidParam(format!("n_bins must be >= 2, got {n_bins}")));
        }
        if values.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut distinct: Vec<(f64, usize)> = Vec::new();
        for v in sorted {
            match distinct.last_mut() {
                Some((last, count)) if *last == v => *count += 1,
                _ => distinct.push((v, 1)),
            }
        }
        let n = values.len();
        let (min, max) = (distinct[0].0, distinct[distinct.len() - 1].0);

        let cuts = if distinct.len() <= n_bins {
            distinct.windows(2).map(|w| midpoint(w[0].0, w[1].0)).collect()
        } else {
            let mut cuts = Vec::with_capacity(n_bins - 1);
            let mut cumulative = 0usize;
            let mut next = 1usize;
            for w in distinct.windows(2) {
                cumulative += w[0].1;
                // Bin boundary k is reached once cumulative >= k * n / n_bins.
                if cumulative * n_bins >= next * n {
                    cuts.push(midpoint(w[0].0, w[1].0));
                    while next < n_bins && cumulative * n_bins >= next * n {
                        next += 1;
                    }
                    if next >= n_bins {
                        break;
                    }
                }
            }
            cuts
        };
        Ok(Self { cuts, min, max })
    }

    pub fn n_bins(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn bin(&self, value: f64) -> usize {
        self.cuts.partition_point(|&c| c < value)
    }

    /// Threshold of a split that sends bins `0..=k` left.
    pub fn threshold(&self, k: usize) -> f64 {
        self.cuts[k]
    }

    /// `[min, cuts..., max]`.
    pub fn edges(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.cuts.len() + 2);
        e.push(self.min);
        e.extend_from_slice(&self.cuts);
        e.push(self.max);
        e
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BinStats {
    pub count: usize,
    pub sum_gradient: f64,
    pub sum_hessian: f64,
}

impl BinStats {
    pub(crate) fn add(&mut self, g: f64, h: f64) {
        self.count += 1;
        self.sum_gradient += g;
        self.sum_hessian += h;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `n_bins + 1` sorted boundaries spanning the training range.
    pub bin_edges: Vec<f64>,
    pub bins: Vec<BinStats>,
}

pub fn build_histogram(
    values: &[f64],
    gradients: &[f64],
    hessians: &[f64],
    n_bins: usize,
) -> Result<Histogram, ModelError> {
    if values.len() != gradients.len() || values.len() != hessians.len() {
        return Err(ModelError::RowMismatch {
            rows: values.len(),
            targets: gradients.len().min(hessians.len()),
        });
    }
    let mapper = BinMapper::fit(values, n_bins)?;
    let mut bins = vec![BinStats::default(); mapper.n_bins()];
    for ((&v, &g), &h) in values.iter().zip(gradients).zip(hessians) {
        bins[mapper.bin(v)].add(g, h);
    }
    Ok(Histogram {
        bin_edges: mapper.edges(),
        bins,
    })
}
