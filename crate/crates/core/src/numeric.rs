//! Small numeric helpers shared by the statistics code.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Population moments computed relative to the first sample.
///
/// Shifting by the first value keeps a constant field at exactly zero
/// spread and returns its mean bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub stddev: f64,
}

impl Moments {
    pub fn from_slice(values: &[f64]) -> Option<Moments> {
        let (&first, _) = values.split_first()?;
        let mut min = first;
        let mut max = first;
        let mut shifted = CompensatedSum::new();
        for &v in values {
            min = min.min(v);
            max = max.max(v);
            shifted.add(v - first);
        }
        let n = values.len() as f64;
        let offset = shifted.total() / n;
        let mean = first + offset;
        let squares: CompensatedSum = values
            .iter()
            .map(|&v| {
                let d = (v - first) - offset;
                d * d
            })
            .collect();
        Some(Moments {
            count: values.len(),
            min,
            max,
            mean,
            stddev: (squares.total() / n).sqrt(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.total(), 1000.0);
    }

    #[test]
    fn constant_field_has_zero_spread() {
        let m = Moments::from_slice(&[144.67; 37]).unwrap();
        assert_eq!(m.mean, 144.67);
        assert_eq!(m.stddev, 0.0);
    }

    #[test]
    fn empty_has_no_moments() {
        assert!(Moments::from_slice(&[]).is_none());
    }
}
