use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::path::grid::SampledPath;
use crate::scalar::Scalar;

/// A simple walk with `±1` increments started at 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeWalk {
    steps: Vec<i8>,
}

impl LatticeWalk {
    pub fn from_steps(steps: Vec<i8>) -> Result<Self> {
        if let Some(bad) = steps.iter().find(|s| **s != 1 && **s != -1) {
            return Err(Error::InvalidArgument(format!("walk step {bad} is not ±1")));
        }
        Ok(Self { steps })
    }

    /// Builds a walk from its values `w(0), ..., w(n)`; `w(0)` must be 0.
    pub fn from_values(values: &[i64]) -> Result<Self> {
        match values.first() {
            Some(0) => {}
            _ => return Err(Error::InvalidArgument("walk values must start at 0".into())),
        }
        let steps = values
            .windows(2)
            .map(|w| match w[1] - w[0] {
                1 => Ok(1),
                -1 => Ok(-1),
                d => Err(Error::InvalidArgument(format!("walk increment {d} is not ±1"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Ok(Self { steps })
    }

    pub(crate) fn from_steps_unchecked(steps: Vec<i8>) -> Self {
        Self { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[i8] {
        &self.steps
    }

    /// Partial sums `w(0) = 0, w(1), ..., w(n)`.
    pub fn values(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut acc = 0i64;
        out.push(0);
        for &s in &self.steps {
            acc += i64::from(s);
            out.push(acc);
        }
        out
    }

    pub fn endpoint(&self) -> i64 {
        self.steps.iter().map(|&s| i64::from(s)).sum()
    }

    /// The piece of the walk between lattice times `from` and `to`, re-rooted at 0.
    pub fn segment(&self, from: usize, to: usize) -> LatticeWalk {
        LatticeWalk { steps: self.steps[from..to].to_vec() }
    }

    /// Embeds the walk as a grid path on `[0, 1]` with one grid cell per step.
    pub fn to_grid<T: Scalar>(&self) -> SampledPath<T> {
        let values = self.values().into_iter().map(|v| T::of(v as f64)).collect();
        SampledPath::from_values(values, T::one()).expect("walk has at least one point")
    }
}

impl fmt::Display for LatticeWalk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.steps {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for LatticeWalk {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let steps = s
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::Parse(format!("unexpected step character {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Ok(Self { steps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_and_parity() {
        let w: LatticeWalk = "-+--".parse().unwrap();
        assert_eq!(w.values(), vec![0, -1, 0, -1, -2]);
        assert_eq!(w.endpoint(), -2);
        assert_eq!((w.endpoint() - w.len() as i64).rem_euclid(2), 0);
        assert_eq!(w.to_string(), "-+--");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(LatticeWalk::from_steps(vec![1, 2]).is_err());
        assert!(LatticeWalk::from_values(&[1, 2]).is_err());
        assert!(LatticeWalk::from_values(&[0, 2]).is_err());
        assert!("+x".parse::<LatticeWalk>().is_err());
    }
}
