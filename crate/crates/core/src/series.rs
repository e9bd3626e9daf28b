//! Timestamped sample sequences.

use crate::error::{Error, Result};
use crate::so3::{slerp, RotationMatrix, Vec3};

/// Samples at strictly increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<T> {
    times: Vec<f64>,
    values: Vec<T>,
}

impl<T> Series<T> {
    pub fn new(times: Vec<f64>, values: Vec<T>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Spec(format!(
                "{} timestamps for {} samples",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::Spec("a series needs at least two samples".into()));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::StreamOrder {
                t: w[1],
                previous: w[0],
            });
        }
        Ok(Self { times, values })
    }

    /// Uniformly spaced samples starting at `t0`.
    pub fn uniform(t0: f64, dt: f64, values: Vec<T>) -> Result<Self> {
        let times = (0..values.len()).map(|k| t0 + k as f64 * dt).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn covers(&self, a: f64, b: f64) -> bool {
        a >= self.start() && b <= self.end()
    }

    /// Index of the last sample at or before `t` (clamped to the first sample).
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// Index of the sample closest in time to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s < t);
        if i == 0 {
            0
        } else if i == self.times.len() {
            i - 1
        } else if (self.times[i] - t) < (t - self.times[i - 1]) {
            i
        } else {
            i - 1
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &T)> {
        self.times.iter().copied().zip(self.values.iter())
    }
}

impl Series<Vec3> {
    /// Zero-order hold value at `t`.
    pub fn held(&self, t: f64) -> Vec3 {
        self.values[self.index_at(t)]
    }
}

impl Series<RotationMatrix> {
    /// Geodesic interpolation between the bracketing samples.
    pub fn interpolate(&self, t: f64) -> RotationMatrix {
        let i = self.index_at(t);
        if i + 1 >= self.len() || t <= self.times[i] {
            return self.values[i];
        }
        let s = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        slerp(&self.values[i], &self.values[i + 1], s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_increasing_times() {
        assert!(Series::new(vec![0.0, 1.0, 1.0], vec![1, 2, 3]).is_err());
        assert!(Series::new(vec![0.0], vec![1]).is_err());
        assert!(Series::new(vec![0.0, 1.0], vec![1]).is_err());
    }

    #[test]
    fn lookup() {
        let s = Series::uniform(1.0, 0.5, vec![10, 20, 30, 40]).unwrap();
        assert_eq!(s.index_at(0.0), 0);
        assert_eq!(s.index_at(1.5), 1);
        assert_eq!(s.index_at(1.7), 1);
        assert_eq!(s.index_at(9.0), 3);
        assert_eq!(s.nearest(1.8), 2);
        assert_eq!(s.nearest(1.7), 1);
        assert!(s.covers(1.0, 2.5));
        assert!(!s.covers(0.9, 2.0));
    }
}
