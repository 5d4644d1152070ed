use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// A real-valued path observed on the uniform grid `i * duration / n_steps`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPath<T> {
    values: Vec<T>,
    duration: T,
}

impl<T: Scalar> SampledPath<T> {
    /// `values` holds the `N + 1` grid values; `N >= 1` and `duration > 0`.
    pub fn from_values(values: Vec<T>, duration: T) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid("a grid path needs at least two points"));
        }
        if !(duration > T::zero()) || !duration.is_finite() {
            return Err(invalid(format!("path duration must be positive, got {duration}")));
        }
        Ok(Self { values, duration })
    }

    pub(crate) fn new_unchecked(values: Vec<T>, duration: T) -> Self {
        debug_assert!(values.len() >= 2);
        Self { values, duration }
    }

    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn first(&self) -> T {
        self.values[0]
    }

    pub fn last(&self) -> T {
        self.values[self.values.len() - 1]
    }

    /// Grid spacing.
    pub fn dt(&self) -> T {
        self.duration / T::of_usize(self.n_steps())
    }

    pub fn time(&self, i: usize) -> T {
        self.duration * T::of_usize(i) / T::of_usize(self.n_steps())
    }

    /// Nearest grid index to time `t`, clamped to the grid.
    pub fn index_of(&self, t: T) -> usize {
        let n = self.n_steps();
        let x = (t / self.duration * T::of_usize(n)).round();
        if !(x > T::zero()) {
            0
        } else {
            x.to_usize().unwrap_or(n).min(n)
        }
    }

    /// Linear interpolation of the grid values at time `t` (clamped to the grid).
    pub fn value_at(&self, t: T) -> T {
        let n = self.n_steps();
        let x = t / self.duration * T::of_usize(n);
        if !(x > T::zero()) {
            return self.values[0];
        }
        if x >= T::of_usize(n) {
            return self.values[n];
        }
        let i = x.floor().to_usize().unwrap_or(0).min(n - 1);
        let frac = x - T::of_usize(i);
        self.values[i] + (self.values[i + 1] - self.values[i]) * frac
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Writes the path as CSV with header `t,value`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", fmt17(self.time(i).as_f64()), fmt17(v.as_f64()))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }

    /// Reads every path in a CSV stream. Paths are blocks separated by blank
    /// lines, each starting with the `t,value` header.
    pub fn read_csv_blocks<R: BufRead>(input: R) -> Result<Vec<Self>> {
        let mut paths = Vec::new();
        let mut times: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let flush = |times: &mut Vec<f64>, values: &mut Vec<f64>, paths: &mut Vec<Self>| -> Result<()> {
            if values.is_empty() {
                return Ok(());
            }
            let n = values.len() - 1;
            if n == 0 {
                return Err(Error::Parse("path block with a single row".into()));
            }
            let duration = times[n] - times[0];
            for (i, t) in times.iter().enumerate() {
                let expected = times[0] + duration * i as f64 / n as f64;
                if (t - expected).abs() > 1e-9 * duration.max(1.0) {
                    return Err(Error::Parse(format!("row {i}: time {t} is off the uniform grid")));
                }
            }
            let path = SampledPath::from_values(values.iter().map(|&v| T::of(v)).collect(), T::of(duration))?;
            paths.push(path);
            times.clear();
            values.clear();
            Ok(())
        };
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                flush(&mut times, &mut values, &mut paths)?;
                continue;
            }
            if line == "t,value" {
                flush(&mut times, &mut values, &mut paths)?;
                continue;
            }
            let mut cols = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Parse(format!("line {}: missing column", lineno + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            times.push(parse(cols.next())?);
            values.push(parse(cols.next())?);
        }
        flush(&mut times, &mut values, &mut paths)?;
        Ok(paths)
    }
}

/// Fixed 17-significant-digit rendering used in every CSV this crate writes.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
