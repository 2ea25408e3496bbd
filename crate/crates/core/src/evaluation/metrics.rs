use super::MatchCounts;
use crate::error::{Error, Result};

/// Scores for one run. An undefined precision or recall (empty denominator)
/// is reported as 0 with its `*_defined` flag cleared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
}

impl EvalReport {
    pub fn counts(&self) -> MatchCounts {
        MatchCounts {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
        }
    }

    pub fn f1_defined(&self) -> bool {
        self.precision_defined && self.recall_defined
    }
}

impl From<MatchCounts> for EvalReport {
    fn from(c: MatchCounts) -> Self {
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                (0.0, false)
            } else {
                (num as f64 / den as f64, true)
            }
        };
        let (precision, precision_defined) = ratio(c.tp, c.tp + c.fp);
        let (recall, recall_defined) = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision > 0.0 && recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision,
            recall,
            f1,
            precision_defined,
            recall_defined,
        }
    }
}

pub fn compute_metrics(tp: i64, fp: i64, fn_: i64) -> Result<EvalReport> {
    let check = |v: i64, name: &str| {
        u64::try_from(v).map_err(|_| Error::invalid(format!("{name} must be non-negative, got {v}")))
    };
    Ok(MatchCounts {
        tp: check(tp, "TP")?,
        fp: check(fp, "FP")?,
        fn_: check(fn_, "FN")?,
    }
    .into())
}
