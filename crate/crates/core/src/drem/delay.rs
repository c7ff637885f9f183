use crate::error::{Error, Result};

/// Where inside an RK4 step a delayed value is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StagePoint {
    /// `t_k`
    Start,
    /// `t_k + h/2`, interpolated from the neighbouring samples
    Mid,
    /// `t_k + h`
    End,
}

impl StagePoint {
    pub fn offset(self) -> f64 {
        match self {
            Self::Start => 0.0,
            Self::Mid => 0.5,
            Self::End => 1.0,
        }
    }
}

/// Ring buffer of a fixed-width signal sampled on the integrator grid.
///
/// Sample `k` is the value at `t0 + k h`. The buffer keeps the most recent
/// `delay_steps + 2` samples, enough to serve `t - T - h` through `t - T + 2h`
/// while stepping from `t`. Values before `t0` are zero.
///
/// Half-step values come from cubic interpolation of four grid samples
/// (centred, or one-sided at the first interval after `t0`), so the delayed
/// terms keep the fourth-order accuracy of the integrator. A plain average
/// of the two neighbours would turn every window integral into a trapezoid
/// rule and cap the whole closed loop at second order. Lines with fewer than
/// three delay steps fall back to that average.
#[derive(Debug, Clone)]
pub struct DelayLine {
    name: &'static str,
    width: usize,
    delay_steps: usize,
    capacity: usize,
    data: Vec<f64>,
    pushed: usize,
}

impl DelayLine {
    pub fn new(name: &'static str, width: usize, delay_steps: usize) -> Self {
        Self::with_capacity(name, width, delay_steps, delay_steps + 2)
    }

    /// Buffer retaining `capacity` samples; must be at least `delay_steps + 2`
    /// for every delayed query to succeed.
    pub fn with_capacity(
        name: &'static str,
        width: usize,
        delay_steps: usize,
        capacity: usize,
    ) -> Self {
        Self {
            name,
            width,
            delay_steps,
            capacity: capacity.max(1),
            data: vec![0.0; capacity.max(1) * width],
            pushed: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    /// Number of samples appended so far.
    pub fn len(&self) -> usize {
        self.pushed
    }

    pub fn is_empty(&self) -> bool {
        self.pushed == 0
    }

    pub fn push(&mut self, sample: &[f64]) {
        assert_eq!(sample.len(), self.width, "sample width for {}", self.name);
        let slot = (self.pushed % self.capacity) * self.width;
        self.data[slot..slot + self.width].copy_from_slice(sample);
        self.pushed += 1;
    }

    /// Stored sample `k`, or `None` for `k` not yet pushed.
    pub fn sample(&self, k: usize) -> Option<Result<&[f64]>> {
        if k >= self.pushed {
            return None;
        }
        if k + self.capacity < self.pushed {
            return Some(Err(Error::DelayBuffer {
                signal: self.name,
                required: self.pushed - k,
                actual: self.capacity,
            }));
        }
        let slot = (k % self.capacity) * self.width;
        Some(Ok(&self.data[slot..slot + self.width]))
    }

    /// Value at grid index `k` (possibly negative), zero before `t0`.
    fn at_index(&self, k: isize, out: &mut [f64]) -> Result<()> {
        if k < 0 {
            out.fill(0.0);
            return Ok(());
        }
        match self.sample(k as usize) {
            Some(s) => {
                out.copy_from_slice(s?);
                Ok(())
            }
            None => Err(Error::DelayBuffer {
                signal: self.name,
                required: k as usize + 1,
                actual: self.pushed,
            }),
        }
    }

    /// Value at `t_step + offset * h - T` while stepping from grid index `step`.
    pub fn delayed(&self, step: usize, at: StagePoint, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.width);
        let base = step as isize - self.delay_steps as isize;
        match at {
            StagePoint::Start => self.at_index(base, out),
            StagePoint::End => self.at_index(base + 1, out),
            StagePoint::Mid => {
                // the interval lies before t0: the delayed signal is zero there
                if base < 0 && self.delay_steps >= 3 {
                    out.fill(0.0);
                    return Ok(());
                }
                let (first, weights): (isize, &[f64]) = if self.delay_steps < 3 {
                    (base, &[0.5, 0.5])
                } else if base == 0 {
                    (0, &[5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0])
                } else {
                    (
                        base - 1,
                        &[-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0],
                    )
                };
                self.combine(first, weights, out)
            }
        }
    }

    /// `out = sum_j weights[j] * x[first + j]`.
    fn combine(&self, first: isize, weights: &[f64], out: &mut [f64]) -> Result<()> {
        let mut buf = vec![0.0; self.width];
        out.fill(0.0);
        for (j, &wj) in weights.iter().enumerate() {
            self.at_index(first + j as isize, &mut buf)?;
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += wj * b;
            }
        }
        Ok(())
    }

    /// Retained samples from oldest to newest together with their grid index.
    pub fn retained(&self) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        let first = self.pushed.saturating_sub(self.capacity);
        (first..self.pushed).map(move |k| {
            let slot = (k % self.capacity) * self.width;
            (k, &self.data[slot..slot + self.width])
        })
    }
}
