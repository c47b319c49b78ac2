//! Compositions: finite tuples of positive integers.
//!
//! A composition `J = (j_1, ..., j_d)` has weight `|J| = j_1 + ... + j_d`.
//! `J°` is `J` without its last coordinate and `J†` is the last coordinate.
//! The empty composition has `d = 0` and weight 0.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Composition {
    parts: Vec<usize>,
}

impl Composition {
    pub fn empty() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if let Some(pos) = parts.iter().position(|&j| j == 0) {
            return Err(Error::BadParameter(format!(
                "composition part {pos} is zero; parts must be positive"
            )));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// Number of coordinates `d`.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `|J|`.
    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    /// `J°`: all coordinates but the last. Empty for the empty composition.
    pub fn head(&self) -> &[usize] {
        match self.parts.split_last() {
            Some((_, head)) => head,
            None => &[],
        }
    }

    /// `J†`: the last coordinate.
    pub fn last(&self) -> Option<usize> {
        self.parts.last().copied()
    }

    /// `(-1)^d`.
    pub fn sign(&self) -> f64 {
        if self.parts.len().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

/// All compositions with weight at most `n_max`, the empty one included.
///
/// Ordered by increasing weight, lexicographically within a weight. There are
/// exactly `2^n_max` of them.
pub fn enumerate_compositions(n_max: usize) -> Vec<Composition> {
    let mut out = vec![Composition::empty()];
    for total in 1..=n_max {
        let mut current = Vec::new();
        compositions_of(total, &mut current, &mut out);
    }
    out
}

fn compositions_of(remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Composition>) {
    if remaining == 0 {
        out.push(Composition {
            parts: current.clone(),
        });
        return;
    }
    for first in 1..=remaining {
        current.push(first);
        compositions_of(remaining - first, current, out);
        current.pop();
    }
}
