//! Residual statistics and report records.

use serde::{Deserialize, Serialize};

/// One named residual check over a set of samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    #[serde(with = "real")]
    pub max: f64,
    #[serde(with = "real")]
    pub mean: f64,
    pub count: usize,
    #[serde(with = "real")]
    pub tolerance: f64,
    pub pass: bool,
    /// Coordinates of the sample with the largest residual.
    pub worst_point: Vec<f64>,
    /// Free-form numeric details (signatures, counts, ratios).
    #[serde(default, skip_serializing_if = "Vec::is_empty", with = "real_pairs")]
    pub details: Vec<(String, f64)>,
}

/// Non-finite reals are written as the strings `"Infinity"`, `"-Infinity"`
/// and `"NaN"` so that documents stay valid and round-trip.
pub mod real {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v > 0.0 {
            s.serialize_str("Infinity")
        } else {
            s.serialize_str("-Infinity")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "NaN" => Ok(f64::NAN),
                "Infinity" => Ok(f64::INFINITY),
                "-Infinity" => Ok(f64::NEG_INFINITY),
                _ => Err(serde::de::Error::custom(format!("not a number: {t}"))),
            },
        }
    }
}

mod real_pairs {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Pair(String, #[serde(with = "super::real")] f64);

    pub fn serialize<S: Serializer>(v: &[(String, f64)], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for (k, x) in v {
            seq.serialize_element(&Pair(k.clone(), *x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(String, f64)>, D::Error> {
        Ok(Vec::<Pair>::deserialize(d)?.into_iter().map(|p| (p.0, p.1)).collect())
    }
}

/// Running max/mean accumulator for a residual.
#[derive(Clone, Debug)]
pub struct Residual {
    pub name: String,
    pub tolerance: f64,
    max: f64,
    sum: f64,
    count: usize,
    worst: Vec<f64>,
    details: Vec<(String, f64)>,
    forced_fail: bool,
}

impl Residual {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Residual {
            name: name.into(),
            tolerance,
            max: 0.0,
            sum: 0.0,
            count: 0,
            worst: Vec::new(),
            details: Vec::new(),
            forced_fail: false,
        }
    }

    /// Record a residual value; NaN counts as an infinitely bad sample.
    pub fn push(&mut self, value: f64, at: &[f64]) {
        let v = if value.is_nan() { f64::INFINITY } else { value.abs() };
        if self.count == 0 || v > self.max {
            self.max = v;
            self.worst = at.to_vec();
        }
        self.sum += v;
        self.count += 1;
    }

    pub fn push_max(&mut self, values: &[f64], at: &[f64]) {
        let m = values.iter().fold(0.0f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) });
        self.push(m, at);
    }

    pub fn detail(&mut self, key: impl Into<String>, value: f64) {
        self.details.push((key.into(), value));
    }

    /// Mark as failed regardless of the numeric residual (e.g. a missing orbit label).
    pub fn fail(&mut self) {
        self.forced_fail = true;
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn finish(self) -> CheckReport {
        let pass = !self.forced_fail && self.count > 0 && self.max <= self.tolerance;
        CheckReport {
            check: self.name,
            max: self.max,
            mean: if self.count > 0 { self.sum / self.count as f64 } else { 0.0 },
            count: self.count,
            tolerance: self.tolerance,
            pass,
            worst_point: self.worst,
            details: self.details,
        }
    }
}

/// Tolerance ladder shared by all checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Algebraic identities.
    pub alg: f64,
    /// First-derivative (finite-difference) parallelism.
    pub d1: f64,
    /// Residuals depending on second or third derivatives.
    pub d2: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { alg: 1e-10, d1: 1e-7, d2: 1e-6 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_max_below_tolerance() {
        let mut r = Residual::new("x", 1e-3);
        r.push(1e-4, &[0.0]);
        r.push(-2e-4, &[1.0]);
        let c = r.finish();
        assert!(c.pass);
        assert_eq!(c.worst_point, vec![1.0]);
        assert!((c.mean - 1.5e-4).abs() < 1e-18);

        let mut r = Residual::new("y", 1e-3);
        r.push(f64::NAN, &[2.0]);
        assert!(!r.finish().pass);
    }

    #[test]
    fn empty_residual_does_not_pass() {
        assert!(!Residual::new("z", 1.0).finish().pass);
    }
}
