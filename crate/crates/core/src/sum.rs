//! Compensated accumulation for energy sums.

/// Neumaier's variant of Kahan summation.
///
/// Accumulation order is the caller's iteration order, so results are
/// reproducible as long as the caller iterates deterministically.
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

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let values = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(values.iter().sum::<f64>(), 1.0);
        assert_eq!(compensated_sum(values), 2.0);
    }

    #[test]
    fn many_tenths() {
        let n = 1_000_000;
        let s = compensated_sum(std::iter::repeat_n(0.1, n));
        assert!((s - 100_000.0).abs() < 1e-9);
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(compensated_sum(std::iter::empty()), 0.0);
    }
}
