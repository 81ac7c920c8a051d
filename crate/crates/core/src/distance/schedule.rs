use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleStep {
    pub t: f64,
    /// Epoch (1-based) from which this scale joins the loss.
    pub epoch: u32,
}

/// Ordered `(t_i, e_i)` pairs for the curriculum loss.
///
/// Epochs must be strictly increasing. Scales are expected to be
/// nondecreasing; a schedule that violates this still builds, and
/// [`ScaleSchedule::warnings`] reports it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    steps: Vec<ScaleStep>,
}

impl ScaleSchedule {
    pub fn new(steps: Vec<ScaleStep>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::invalid("schedule has no entries"));
        }
        for s in &steps {
            if !(s.t > 0.0) || !s.t.is_finite() {
                return Err(Error::invalid(format!("schedule scale {} is not positive", s.t)));
            }
            if s.epoch < 1 {
                return Err(Error::invalid("schedule epochs are numbered from 1"));
            }
        }
        for w in steps.windows(2) {
            if w[1].epoch <= w[0].epoch {
                return Err(Error::invalid(format!(
                    "schedule epochs must be strictly increasing ({} then {})",
                    w[0].epoch, w[1].epoch
                )));
            }
        }
        Ok(Self { steps })
    }

    pub fn single(t: f64) -> Result<Self> {
        Self::new(vec![ScaleStep { t, epoch: 1 }])
    }

    /// Parse `t1@e1,t2@e2,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for part in text.split(',') {
            let part = part.trim();
            let (t, e) = part
                .split_once('@')
                .ok_or_else(|| Error::invalid(format!("schedule entry {part:?} is not of the form t@epoch")))?;
            let t: f64 = t
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad scale in schedule entry {part:?}")))?;
            let epoch: u32 = e
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad epoch in schedule entry {part:?}")))?;
            steps.push(ScaleStep { t, epoch });
        }
        Self::new(steps)
    }

    pub fn steps(&self) -> &[ScaleStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_epoch(&self) -> u32 {
        self.steps.last().map(|s| s.epoch).unwrap_or(0)
    }

    pub fn is_monotone(&self) -> bool {
        self.steps.windows(2).all(|w| w[0].t <= w[1].t)
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for w in self.steps.windows(2) {
            if w[1].t < w[0].t {
                out.push(format!(
                    "scale decreases from {} (epoch {}) to {} (epoch {}); scales are expected to be nondecreasing",
                    w[0].t, w[0].epoch, w[1].t, w[1].epoch
                ));
            }
        }
        out
    }

    /// Scales with `e_i ≤ epoch`, in schedule order.
    pub fn active_scales(&self, epoch: u32) -> Vec<f64> {
        self.steps.iter().filter(|s| s.epoch <= epoch).map(|s| s.t).collect()
    }
}

impl std::fmt::Display for ScaleSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.steps.iter().map(|s| format!("{}@{}", s.t, s.epoch)).collect();
        f.write_str(&parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_entries() {
        let s = ScaleSchedule::parse("0.5@1,1.5@100,3.0@200").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.steps()[1], ScaleStep { t: 1.5, epoch: 100 });
        assert!(s.is_monotone());
        assert!(s.warnings().is_empty());
        assert_eq!(s.to_string(), "0.5@1,1.5@100,3@200");
    }

    #[test]
    fn decreasing_scale_warns() {
        let s = ScaleSchedule::parse("2@1,1@5").unwrap();
        assert!(!s.is_monotone());
        assert_eq!(s.warnings().len(), 1);
    }

    #[test]
    fn rejects_bad_syntax() {
        for bad in ["", "1.0", "a@1", "1@b", "1@0", "-1@1", "1@5,2@5", "1@5,2@3"] {
            assert!(ScaleSchedule::parse(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn active_set() {
        let s = ScaleSchedule::parse("0.1@1,0.2@10,0.4@20").unwrap();
        assert_eq!(s.active_scales(1), vec![0.1]);
        assert_eq!(s.active_scales(15), vec![0.1, 0.2]);
        assert_eq!(s.active_scales(500), vec![0.1, 0.2, 0.4]);
        let late = ScaleSchedule::parse("0.1@5").unwrap();
        assert!(late.active_scales(4).is_empty());
    }
}
