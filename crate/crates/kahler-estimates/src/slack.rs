use serde::{Deserialize, Serialize};

/// Location of a sample: a stored time and an index into that time's samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub time_index: usize,
    pub t: f64,
    pub sample: usize,
    /// Radial coordinate of the sample node, when the sample is a node.
    pub xi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
    pub observed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackReport {
    pub label: String,
    pub times: Vec<f64>,
    /// `values[k][j]`: slack of sample `j` at `times[k]`.
    pub values: Vec<Vec<f64>>,
    pub min: f64,
    pub witness: Option<Witness>,
    pub tolerance: f64,
    pub hypotheses: Vec<Hypothesis>,
}

impl SlackReport {
    /// Builds the report and locates the minimum; `xi` maps a sample index to its node coordinate.
    pub fn new(
        label: impl Into<String>,
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
        tolerance: f64,
        hypotheses: Vec<Hypothesis>,
        xi: impl Fn(usize) -> Option<f64>,
    ) -> Self {
        let mut min = f64::INFINITY;
        let mut witness = None;
        for (k, row) in values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < min || v.is_nan() && !min.is_nan() {
                    min = v;
                    witness = Some(Witness { time_index: k, t: times[k], sample: j, xi: xi(j) });
                }
            }
        }
        SlackReport {
            label: label.into(),
            times,
            values,
            min,
            witness,
            tolerance,
            hypotheses,
        }
    }

    /// Whether the inequality is asserted: all hypotheses hold.
    pub fn asserted(&self) -> bool {
        self.hypotheses.iter().all(|h| h.holds)
    }

    /// Observational reports always pass; asserted ones need `min >= -tolerance`.
    pub fn passes(&self) -> bool {
        !self.asserted() || self.min >= -self.tolerance
    }

    pub fn sample_count(&self) -> usize {
        self.values.iter().map(|r| r.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_is_the_true_minimum() {
        let r = SlackReport::new("x", vec![0.0, 1.0], vec![vec![3.0, 1.0], vec![2.0, -0.5, 4.0]], 1e-6, vec![], |j| Some(j as f64));
        assert_eq!(r.min, -0.5);
        let w = r.witness.unwrap();
        assert_eq!((w.time_index, w.sample, w.t), (1, 1, 1.0));
        assert_eq!(r.values[w.time_index][w.sample], r.min);
        assert!(!r.passes());
        let obs = SlackReport { hypotheses: vec![Hypothesis { name: "R > 0".into(), holds: false, observed: -1.0 }], ..r };
        assert!(obs.passes() && !obs.asserted());
    }
}
