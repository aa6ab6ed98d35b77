//! Data-transfer ratio, run aggregation, empirical CDF, the streamworthiness
//! verdict, and dependency classification.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Category, DecisionBand, DepKind, DependencyDescriptor, RatioReport, StageProfile};

/// Fractions of the run spent uploading, downloading, and in both.
pub fn compute_ratio(p: &StageProfile) -> Result<RatioReport> {
    p.validate()?;
    let total = p.total();
    if total <= 0.0 {
        return Err(Error::InvalidProfile("total stage time is zero".into()));
    }
    let r_h2d = p.h2d / total;
    let r_d2h = p.d2h / total;
    Ok(RatioReport { r_h2d, r_d2h, r_transfer: r_h2d + r_d2h })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Per-stage median over repeated runs of one configuration. An even number
/// of runs takes the mean of the central pair.
pub fn aggregate_runs(runs: &[StageProfile]) -> Result<StageProfile> {
    let first = runs.first().ok_or_else(|| Error::InconsistentRuns("no runs".into()))?;
    if let Some(bad) = runs.iter().find(|r| r.meta.config_key() != first.meta.config_key()) {
        return Err(Error::InconsistentRuns(format!(
            "{:?} mixed with {:?}",
            bad.meta.config_key(),
            first.meta.config_key()
        )));
    }
    for r in runs {
        r.validate()?;
    }
    let column = |f: fn(&StageProfile) -> f64| median(&mut runs.iter().map(f).collect::<Vec<_>>());
    let mut meta = first.meta.clone();
    meta.run = None;
    Ok(StageProfile { h2d: column(|p| p.h2d), kex: column(|p| p.kex), d2h: column(|p| p.d2h), meta })
}

/// Empirical CDF as a right-continuous step function.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfCurve {
    /// `(value, fraction of samples <= value)`, values strictly increasing.
    pub points: Vec<(f64, f64)>,
}

impl CdfCurve {
    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.points.partition_point(|&(v, _)| v <= x);
        if idx == 0 {
            0.0
        } else {
            self.points[idx - 1].1
        }
    }
}

pub fn build_cdf(ratios: &[f64]) -> Result<CdfCurve> {
    if ratios.is_empty() {
        return Err(Error::Domain("cannot build a CDF from no values".into()));
    }
    if let Some(bad) = ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::Domain(format!("ratio {bad} outside [0, 1]")));
    }
    let mut sorted = ratios.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => points.push((*v, frac)),
        }
    }
    if let Some(last) = points.last_mut() {
        last.1 = 1.0;
    }
    Ok(CdfCurve { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    NotWorthLowR,
    Worth,
    NotWorthHighR,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::NotWorthLowR => "not-worth-low-r",
            VerdictKind::Worth => "worth",
            VerdictKind::NotWorthHighR => "not-worth-high-r",
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for VerdictKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [VerdictKind::NotWorthLowR, VerdictKind::Worth, VerdictKind::NotWorthHighR]
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown verdict `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub r: f64,
    pub band: DecisionBand,
}

/// Both band edges count as worthwhile.
pub fn decide_streamworthy(r: f64, band: DecisionBand) -> Verdict {
    let kind = if r < band.low {
        VerdictKind::NotWorthLowR
    } else if r > band.high {
        VerdictKind::NotWorthHighR
    } else {
        VerdictKind::Worth
    };
    Verdict { kind, r, band }
}

/// Primary category, by precedence: kernel-bound, SYNC, Iterative, then the
/// dependency kind.
pub fn classify(d: &DependencyDescriptor) -> Category {
    classify_all(d)[0]
}

/// Every category the descriptor matches, primary first. A code with
/// several transfer/kernel dependency pairs can sit in more than one column.
pub fn classify_all(d: &DependencyDescriptor) -> Vec<Category> {
    let mut labels = Vec::with_capacity(2);
    if d.kernel_dominated {
        labels.push(Category::NotWorthKernelBound);
    }
    if d.shared_input_by_all {
        labels.push(Category::Sync);
    }
    if d.iterative_kernel {
        labels.push(Category::Iterative);
    }
    labels.push(match d.dep {
        DepKind::None => Category::Independent,
        DepKind::ReadOnly { .. } => Category::FalseDependent,
        DepKind::ReadAfterWrite { .. } => Category::TrueDependent,
    });
    labels
}
