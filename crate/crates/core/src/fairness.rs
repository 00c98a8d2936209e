//! Group fairness metrics over binary predictions and a binary sensitive
//! attribute (`s = 1` is the protected group).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessMetric {
    StatisticalDisparity,
    ConditionalStatisticalDisparity,
    /// Equalized-odds TPR component, also the equal-opportunity gap.
    TprGap,
    /// Equalized-odds FPR component, also the predictive-equality gap.
    FprGap,
    PpvGap,
    NpvGap,
}

impl FairnessMetric {
    pub const ALL: [FairnessMetric; 6] = [
        FairnessMetric::StatisticalDisparity,
        FairnessMetric::ConditionalStatisticalDisparity,
        FairnessMetric::TprGap,
        FairnessMetric::FprGap,
        FairnessMetric::PpvGap,
        FairnessMetric::NpvGap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FairnessMetric::StatisticalDisparity => "statistical_disparity",
            FairnessMetric::ConditionalStatisticalDisparity => "conditional_statistical_disparity",
            FairnessMetric::TprGap => "tpr_gap",
            FairnessMetric::FprGap => "fpr_gap",
            FairnessMetric::PpvGap => "ppv_gap",
            FairnessMetric::NpvGap => "npv_gap",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let found = match s.as_str() {
            "sd" => Some(FairnessMetric::StatisticalDisparity),
            "csd" => Some(FairnessMetric::ConditionalStatisticalDisparity),
            "equal_opportunity" => Some(FairnessMetric::TprGap),
            "predictive_equality" => Some(FairnessMetric::FprGap),
            _ => FairnessMetric::ALL.into_iter().find(|m| m.name() == s),
        };
        found.ok_or_else(|| Error::Argument(format!("unknown fairness metric `{s}`")))
    }
}

/// Either a value or the reason it cannot be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricValue {
    Defined(f64),
    Undefined(String),
}

impl MetricValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Defined(v) => Some(*v),
            MetricValue::Undefined(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl GroupCounts {
    pub fn size(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn predicted_positive(&self) -> usize {
        self.tp + self.fp
    }
}

/// Confusion counts per group; index 0 is `s = 0`, index 1 is `s = 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupedConfusion {
    pub groups: [GroupCounts; 2],
}

impl GroupedConfusion {
    pub fn from_labels(y: &[u8], yhat: &[u8], s: &[u8]) -> Result<Self> {
        check_binary(&[("y", y), ("yhat", yhat), ("s", s)])?;
        let mut c = GroupedConfusion::default();
        for i in 0..y.len() {
            let g = &mut c.groups[s[i] as usize];
            match (y[i], yhat[i]) {
                (1, 1) => g.tp += 1,
                (0, 1) => g.fp += 1,
                (0, 0) => g.tn += 1,
                _ => g.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.groups[0].size() + self.groups[1].size()
    }
}

fn check_binary(cols: &[(&str, &[u8])]) -> Result<()> {
    let n = cols[0].1.len();
    for (name, c) in cols {
        if c.len() != n {
            return arg_err(format!("`{name}` has {} entries, expected {n}", c.len()));
        }
        if let Some(v) = c.iter().find(|&&v| v > 1) {
            return arg_err(format!("`{name}` must be coded 0/1, found {v}"));
        }
    }
    Ok(())
}

fn group_label(g: usize) -> &'static str {
    if g == 1 {
        "protected group (s=1)"
    } else {
        "reference group (s=0)"
    }
}

/// Difference of two per-group rates `num/den`, undefined when a
/// denominator is zero.
fn rate_gap(what: &str, num: [usize; 2], den: [usize; 2]) -> MetricValue {
    for g in [1, 0] {
        if den[g] == 0 {
            return MetricValue::Undefined(format!("{what} has a zero denominator in the {}", group_label(g)));
        }
    }
    MetricValue::Defined(num[1] as f64 / den[1] as f64 - num[0] as f64 / den[0] as f64)
}

/// `P[yhat=1 | s=1] - P[yhat=1 | s=0]`.
pub fn statistical_disparity(yhat: &[u8], s: &[u8]) -> Result<f64> {
    check_binary(&[("yhat", yhat), ("s", s)])?;
    let mut pos = [0usize; 2];
    let mut size = [0usize; 2];
    for (&p, &g) in yhat.iter().zip(s) {
        size[g as usize] += 1;
        pos[g as usize] += p as usize;
    }
    match rate_gap("statistical disparity", pos, size) {
        MetricValue::Defined(v) => Ok(v),
        MetricValue::Undefined(_) => {
            let empty = if size[1] == 0 { 1 } else { 0 };
            Err(Error::UndefinedMetric {
                metric: "statistical_disparity".into(),
                reason: format!("the {} is empty", group_label(empty)),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumDisparity {
    pub stratum: String,
    pub size: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsdReport {
    /// Strata with both groups present, in sorted key order.
    pub strata: Vec<StratumDisparity>,
    /// Strata skipped because one group is empty, with the reason.
    pub excluded: Vec<(String, String)>,
    pub max_abs: f64,
    /// Stratum-size weighted mean of the signed values.
    pub weighted_mean: f64,
}

/// Statistical disparity within each stratum of the resolving feature `r`.
pub fn conditional_statistical_disparity(yhat: &[u8], s: &[u8], r: &[String]) -> Result<CsdReport> {
    check_binary(&[("yhat", yhat), ("s", s)])?;
    if r.len() != s.len() {
        return arg_err(format!("`r` has {} entries, expected {}", r.len(), s.len()));
    }
    let mut strata: BTreeMap<&str, (Vec<u8>, Vec<u8>)> = BTreeMap::new();
    for i in 0..s.len() {
        let e = strata.entry(r[i].as_str()).or_default();
        e.0.push(yhat[i]);
        e.1.push(s[i]);
    }
    let mut out = CsdReport {
        strata: Vec::new(),
        excluded: Vec::new(),
        max_abs: 0.0,
        weighted_mean: 0.0,
    };
    let mut weight = 0usize;
    for (key, (yh, ss)) in strata {
        match statistical_disparity(&yh, &ss) {
            Ok(v) => {
                out.max_abs = out.max_abs.max(v.abs());
                out.weighted_mean += v * yh.len() as f64;
                weight += yh.len();
                out.strata.push(StratumDisparity {
                    stratum: key.to_string(),
                    size: yh.len(),
                    value: v,
                });
            }
            Err(Error::UndefinedMetric { reason, .. }) => out.excluded.push((key.to_string(), reason)),
            Err(e) => return Err(e),
        }
    }
    if out.strata.is_empty() {
        return Err(Error::UndefinedMetric {
            metric: "conditional_statistical_disparity".into(),
            reason: "no stratum contains both groups".into(),
        });
    }
    out.weighted_mean /= weight as f64;
    Ok(out)
}

/// `(TPR gap, FPR gap)`, each protected minus reference.
pub fn error_rate_gaps(y: &[u8], yhat: &[u8], s: &[u8]) -> Result<(MetricValue, MetricValue)> {
    let c = GroupedConfusion::from_labels(y, yhat, s)?;
    Ok(rate_gaps(&c))
}

fn rate_gaps(c: &GroupedConfusion) -> (MetricValue, MetricValue) {
    let [g0, g1] = c.groups;
    (
        rate_gap("TPR", [g0.tp, g1.tp], [g0.tp + g0.fn_, g1.tp + g1.fn_]),
        rate_gap("FPR", [g0.fp, g1.fp], [g0.fp + g0.tn, g1.fp + g1.tn]),
    )
}

/// `(PPV gap, NPV gap)`, each protected minus reference.
pub fn predictive_value_gaps(y: &[u8], yhat: &[u8], s: &[u8]) -> Result<(MetricValue, MetricValue)> {
    let c = GroupedConfusion::from_labels(y, yhat, s)?;
    Ok(value_gaps(&c))
}

fn value_gaps(c: &GroupedConfusion) -> (MetricValue, MetricValue) {
    let [g0, g1] = c.groups;
    (
        rate_gap("PPV", [g0.tp, g1.tp], [g0.tp + g0.fp, g1.tp + g1.fp]),
        rate_gap("NPV", [g0.tn, g1.tn], [g0.tn + g0.fn_, g1.tn + g1.fn_]),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub confusion: GroupedConfusion,
    pub sd: MetricValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csd: Option<CsdReport>,
    pub eo_tpr_gap: MetricValue,
    pub eo_fpr_gap: MetricValue,
    pub equal_opportunity_gap: MetricValue,
    pub predictive_equality_gap: MetricValue,
    pub cua_ppv_gap: MetricValue,
    pub cua_npv_gap: MetricValue,
    /// Metrics that feed `delta`.
    pub delta_metrics: Vec<FairnessMetric>,
    pub delta: f64,
    /// The metric attaining `delta`, if any was defined.
    pub delta_source: Option<FairnessMetric>,
    pub undefined_metrics: Vec<(String, String)>,
}

impl FairnessReport {
    /// Absolute value of a metric as used by `delta`.
    pub fn magnitude(&self, m: FairnessMetric) -> Option<f64> {
        match m {
            FairnessMetric::StatisticalDisparity => self.sd.value().map(f64::abs),
            FairnessMetric::ConditionalStatisticalDisparity => self.csd.as_ref().map(|c| c.max_abs),
            FairnessMetric::TprGap => self.eo_tpr_gap.value().map(f64::abs),
            FairnessMetric::FprGap => self.eo_fpr_gap.value().map(f64::abs),
            FairnessMetric::PpvGap => self.cua_ppv_gap.value().map(f64::abs),
            FairnessMetric::NpvGap => self.cua_npv_gap.value().map(f64::abs),
        }
    }
}

/// All metrics; `delta` is the largest absolute defined gap.
pub fn audit_fairness(y: &[u8], yhat: &[u8], s: &[u8], r: Option<&[String]>) -> Result<FairnessReport> {
    audit_fairness_with(y, yhat, s, r, &FairnessMetric::ALL)
}

/// As [`audit_fairness`], with `delta` taken over `metrics` only.
pub fn audit_fairness_with(
    y: &[u8],
    yhat: &[u8],
    s: &[u8],
    r: Option<&[String]>,
    metrics: &[FairnessMetric],
) -> Result<FairnessReport> {
    let confusion = GroupedConfusion::from_labels(y, yhat, s)?;
    let mut undefined = Vec::new();
    let note = |undefined: &mut Vec<(String, String)>, name: &str, v: &MetricValue| {
        if let MetricValue::Undefined(reason) = v {
            undefined.push((name.to_string(), reason.clone()));
        }
    };
    let sd = match statistical_disparity(yhat, s) {
        Ok(v) => MetricValue::Defined(v),
        Err(Error::UndefinedMetric { reason, .. }) => MetricValue::Undefined(reason),
        Err(e) => return Err(e),
    };
    note(&mut undefined, "statistical_disparity", &sd);
    let csd = match r {
        None => None,
        Some(r) => match conditional_statistical_disparity(yhat, s, r) {
            Ok(c) => Some(c),
            Err(Error::UndefinedMetric { reason, .. }) => {
                undefined.push(("conditional_statistical_disparity".into(), reason));
                None
            }
            Err(e) => return Err(e),
        },
    };
    let (tpr, fpr) = rate_gaps(&confusion);
    let (ppv, npv) = value_gaps(&confusion);
    note(&mut undefined, "tpr_gap", &tpr);
    note(&mut undefined, "fpr_gap", &fpr);
    note(&mut undefined, "ppv_gap", &ppv);
    note(&mut undefined, "npv_gap", &npv);
    let mut report = FairnessReport {
        confusion,
        sd,
        csd,
        equal_opportunity_gap: tpr.clone(),
        predictive_equality_gap: fpr.clone(),
        eo_tpr_gap: tpr,
        eo_fpr_gap: fpr,
        cua_ppv_gap: ppv,
        cua_npv_gap: npv,
        delta_metrics: metrics.to_vec(),
        delta: 0.0,
        delta_source: None,
        undefined_metrics: undefined,
    };
    for &m in metrics {
        if let Some(v) = report.magnitude(m) {
            if report.delta_source.is_none() || v > report.delta {
                report.delta = v;
                report.delta_source = Some(m);
            }
        }
    }
    Ok(report)
}

/// `delta <= tau`.
pub fn verify_fairness(report: &FairnessReport, tau: f64) -> Result<bool> {
    if !(tau >= 0.0) {
        return arg_err(format!("fairness threshold must be >= 0, got {tau}"));
    }
    Ok(report.delta <= tau)
}
