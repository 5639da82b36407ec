use super::MetricsError;
use crate::data::{CountryLabel, InteractionDataset, TrackIdx};

pub const COUNTRY_BINS: [&str; 3] = ["local", "US", "other"];
pub const POPULARITY_BINS: [&str; 3] = ["HighPop", "MidPop", "LowPop"];

/// A normalized histogram over three labelled bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeDistribution {
    pub bins: [&'static str; 3],
    pub mass: [f64; 3],
}

impl AttributeDistribution {
    pub fn jsd(&self, other: &AttributeDistribution) -> Result<f64, MetricsError> {
        if self.bins != other.bins {
            return Err(MetricsError::BinMismatch(
                self.bins.iter().map(|s| s.to_string()).collect(),
                other.bins.iter().map(|s| s.to_string()).collect(),
            ));
        }
        jsd(&self.mass, &other.mass)
    }
}

/// Jensen-Shannon divergence in bits, in `[0, 1]`.
///
/// Bins where a distribution has zero mass contribute nothing for that
/// distribution. Computed bin by bin from `h + g`, so swapping the arguments
/// gives a bit-identical result.
pub fn jsd(h: &[f64], g: &[f64]) -> Result<f64, MetricsError> {
    if h.len() != g.len() {
        return Err(MetricsError::BinMismatch(
            vec![format!("{} bins", h.len())],
            vec![format!("{} bins", g.len())],
        ));
    }
    let term = |p: f64, m: f64| {
        if p > 0.0 {
            p * (2.0 * p / m).log2()
        } else {
            0.0
        }
    };
    let mut total = 0.0;
    for (&a, &b) in h.iter().zip(g) {
        let m = a + b;
        total += term(a, m) + term(b, m);
    }
    Ok((0.5 * total).clamp(0.0, 1.0))
}

/// `(p_local, p_US)` of an item list for a user from `user_country`.
pub fn country_proportions(
    items: &[TrackIdx],
    user_country: CountryLabel,
    track_countries: &[CountryLabel],
) -> Result<(f64, f64), MetricsError> {
    if items.is_empty() {
        return Err(MetricsError::EmptyItems);
    }
    let mut local = 0usize;
    let mut us = 0usize;
    for t in items {
        let c = track_countries[t.index()];
        if user_country.coincides_with(c) {
            local += 1;
        }
        if c.is_us() {
            us += 1;
        }
    }
    let n = items.len() as f64;
    Ok((local as f64 / n, us as f64 / n))
}

/// Distribution over `[local, US, other]`.
///
/// For US users local and US coincide; their US mass goes into the local bin
/// and the US bin is 0.
pub fn country_distribution(
    items: &[TrackIdx],
    user_country: CountryLabel,
    track_countries: &[CountryLabel],
) -> Result<AttributeDistribution, MetricsError> {
    let (local, us) = country_proportions(items, user_country, track_countries)?;
    let mass = if user_country.is_us() {
        [local, 0.0, other_mass(items, track_countries, |c| c.is_us())]
    } else {
        [
            local,
            us,
            other_mass(items, track_countries, |c| {
                c.is_us() || user_country.coincides_with(c)
            }),
        ]
    };
    Ok(AttributeDistribution {
        bins: COUNTRY_BINS,
        mass,
    })
}

// Counted directly rather than as 1 - local - us so the three bins sum to 1
// up to a single rounding.
fn other_mass(
    items: &[TrackIdx],
    track_countries: &[CountryLabel],
    covered: impl Fn(CountryLabel) -> bool,
) -> f64 {
    let n = items
        .iter()
        .filter(|t| !covered(track_countries[t.index()]))
        .count();
    n as f64 / items.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PopularityBin {
    High,
    Mid,
    Low,
}

/// Assignment of every track to a popularity bin.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityBinning {
    pub bins: Vec<PopularityBin>,
    pub high_count: usize,
    pub low_count: usize,
}

impl PopularityBinning {
    pub fn bin(&self, t: TrackIdx) -> PopularityBin {
        self.bins[t.index()]
    }
}

/// Ranks tracks by interaction count (descending, ties by ascending index);
/// the first `floor(high * n)` are high, the last `floor(low * n)` are low.
pub fn popularity_binning(reference: &InteractionDataset, high: f64, low: f64) -> PopularityBinning {
    binning_from_counts(&reference.track_interaction_counts(), high, low)
}

pub(crate) fn binning_from_counts(counts: &[u32], high: f64, low: f64) -> PopularityBinning {
    let n = counts.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let high_count = ((high * n as f64).floor() as usize).min(n);
    let low_count = ((low * n as f64).floor() as usize).min(n - high_count);
    let mut bins = vec![PopularityBin::Mid; n];
    for (rank, &t) in order.iter().enumerate() {
        if rank < high_count {
            bins[t] = PopularityBin::High;
        } else if rank >= n - low_count {
            bins[t] = PopularityBin::Low;
        }
    }
    PopularityBinning {
        bins,
        high_count,
        low_count,
    }
}

/// Distribution over `[HighPop, MidPop, LowPop]`.
pub fn popularity_distribution(
    items: &[TrackIdx],
    binning: &PopularityBinning,
) -> Result<AttributeDistribution, MetricsError> {
    if items.is_empty() {
        return Err(MetricsError::EmptyItems);
    }
    let mut counts = [0usize; 3];
    for &t in items {
        counts[match binning.bin(t) {
            PopularityBin::High => 0,
            PopularityBin::Mid => 1,
            PopularityBin::Low => 2,
        }] += 1;
    }
    let n = items.len() as f64;
    Ok(AttributeDistribution {
        bins: POPULARITY_BINS,
        mass: counts.map(|c| c as f64 / n),
    })
}
