use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::MetricsError;

/// 0.05 split over the 12 comparisons of the whole-population table
/// (2 proportions x 6 models).
pub const BONFERRONI_ALPHA: f64 = 0.05 / 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaMode {
    /// `100 * (current - baseline) / baseline`
    #[default]
    Relative,
    /// `100 * (current - baseline)`, i.e. percentage points.
    Absolute,
}

pub fn delta_percent(current: f64, baseline: f64, mode: DeltaMode) -> Result<f64, MetricsError> {
    match mode {
        DeltaMode::Relative => {
            if baseline == 0.0 {
                return Err(MetricsError::ZeroBaseline);
            }
            Ok(100.0 * (current - baseline) / baseline)
        }
        DeltaMode::Absolute => Ok(100.0 * (current - baseline)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub df: f64,
    /// Differences had zero variance but a nonzero mean; `t` is infinite.
    pub degenerate_variance: bool,
}

impl TTest {
    pub fn significant(&self) -> bool {
        self.p < BONFERRONI_ALPHA
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Dependent-samples t-test on `after - before`, two-sided, `n - 1` degrees
/// of freedom.
pub fn paired_t_test(before: &[f64], after: &[f64]) -> Result<TTest, MetricsError> {
    if before.len() != after.len() || before.len() < 2 {
        return Err(MetricsError::SampleSize {
            before: before.len(),
            after: after.len(),
        });
    }
    let diffs: Vec<f64> = after.iter().zip(before).map(|(a, b)| a - b).collect();
    let n = diffs.len() as f64;
    let m = mean(&diffs);
    let var = sample_variance(&diffs, m);
    let df = n - 1.0;
    Ok(t_result(m, (var / n).sqrt(), df))
}

/// Welch's two-sample t-test, two-sided.
pub fn independent_t_test(a: &[f64], b: &[f64]) -> Result<TTest, MetricsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(MetricsError::SampleSize {
            before: a.len(),
            after: b.len(),
        });
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (
        sample_variance(a, ma) / a.len() as f64,
        sample_variance(b, mb) / b.len() as f64,
    );
    let se = (va + vb).sqrt();
    let df = if va + vb == 0.0 {
        (a.len() + b.len() - 2) as f64
    } else {
        (va + vb).powi(2)
            / (va.powi(2) / (a.len() - 1) as f64 + vb.powi(2) / (b.len() - 1) as f64)
    };
    Ok(t_result(mb - ma, se, df))
}

fn t_result(mean_diff: f64, se: f64, df: f64) -> TTest {
    if se == 0.0 {
        return if mean_diff == 0.0 {
            TTest {
                t: 0.0,
                p: 1.0,
                df,
                degenerate_variance: false,
            }
        } else {
            TTest {
                t: mean_diff.signum() * f64::INFINITY,
                p: 0.0,
                df,
                degenerate_variance: true,
            }
        };
    }
    let t = mean_diff / se;
    TTest {
        t,
        p: two_sided_p(t, df),
        df,
        degenerate_variance: false,
    }
}

fn two_sided_p(t: f64, df: f64) -> f64 {
    // P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
    let x = df / (df + t * t);
    beta_reg(0.5 * df, 0.5, x).clamp(0.0, 1.0)
}

/// CDF of Student's t distribution with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * two_sided_p(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}
