//! Multisets of exact projected-cylinder endpoints, one level per word length.
//!
//! A word `w` of length `n` projects to `[e_w, e_w + β^n]` with
//! `e_{w i} = e_w + t_i β^n`. Words sharing an endpoint are merged with a
//! multiplicity, so the level size is the number of distinct endpoints
//! rather than `m^n`.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::carpet::CarpetIfs;
use crate::error::{Error, Result};
use crate::exact::FieldElement;

/// Resource caps shared by the enumerating operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Cap on `m^n`, the number of words at the requested depth.
    pub max_words: u128,
    /// Cap on distinct endpoints held in memory.
    pub max_points: usize,
    /// Cap on bins in one grid.
    pub max_bins: usize,
    /// Deepest word length the measure schedules may use.
    pub max_depth: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_words: 1 << 28, max_points: 1 << 22, max_bins: 1 << 22, max_depth: 24 }
    }
}

impl Budget {
    pub fn check_words(&self, m: usize, depth: usize) -> Result<u128> {
        let needed = (m as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
        if needed > self.max_words {
            return Err(Error::BudgetExceeded { what: format!("words of length {depth}"), needed, limit: self.max_words });
        }
        Ok(needed)
    }
}

/// Distinct left endpoints at one depth with word multiplicities, sorted
/// by power-basis coordinates.
#[derive(Clone, Debug)]
pub struct EndpointLevel {
    depth: usize,
    points: Vec<(FieldElement, u64)>,
    /// `β^depth`
    width: FieldElement,
}

impl EndpointLevel {
    pub fn root(ifs: &CarpetIfs) -> EndpointLevel {
        EndpointLevel { depth: 0, points: vec![(FieldElement::zero(ifs.field()), 1)], width: FieldElement::one(ifs.field()) }
    }

    /// Level for words of length `depth`.
    pub fn build(ifs: &CarpetIfs, depth: usize, budget: &Budget) -> Result<EndpointLevel> {
        budget.check_words(ifs.m(), depth)?;
        let mut level = EndpointLevel::root(ifs);
        while level.depth < depth {
            level = level.extend(ifs, budget)?;
        }
        Ok(level)
    }

    /// Append one letter on the inside of every word.
    pub fn extend(&self, ifs: &CarpetIfs, budget: &Budget) -> Result<EndpointLevel> {
        budget.check_words(ifs.m(), self.depth + 1)?;
        let incs: Vec<FieldElement> = ifs.maps().iter().map(|t| &t.tx * &self.width).collect();
        // translating a lexicographically sorted list keeps it sorted
        let shifted: Vec<Vec<(FieldElement, u64)>> = incs
            .par_iter()
            .map(|inc| if inc.is_zero() { self.points.clone() } else { self.points.par_iter().map(|(e, c)| (e + inc, *c)).collect() })
            .collect();
        let mut merged: Option<Vec<(FieldElement, u64)>> = None;
        for list in shifted {
            merged = Some(match merged {
                None => list,
                Some(acc) => merge_sorted(acc, list),
            });
            let n = merged.as_ref().map_or(0, Vec::len);
            if n > budget.max_points {
                return Err(Error::BudgetExceeded {
                    what: format!("distinct endpoints at depth {}", self.depth + 1),
                    needed: n as u128,
                    limit: budget.max_points as u128,
                });
            }
        }
        Ok(EndpointLevel { depth: self.depth + 1, points: merged.unwrap_or_default(), width: &self.width * ifs.beta() })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn points(&self) -> &[(FieldElement, u64)] {
        &self.points
    }

    pub fn distinct(&self) -> usize {
        self.points.len()
    }

    /// `β^depth`, the common length of projected cylinders.
    pub fn width(&self) -> &FieldElement {
        &self.width
    }

    pub fn total_words(&self) -> u128 {
        self.points.iter().map(|(_, c)| *c as u128).sum()
    }

    pub fn max_multiplicity(&self) -> u64 {
        self.points.iter().map(|(_, c)| *c).max().unwrap_or(0)
    }
}

fn merge_sorted(a: Vec<(FieldElement, u64)>, b: Vec<(FieldElement, u64)>) -> Vec<(FieldElement, u64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut ia = a.into_iter().peekable();
    let mut ib = b.into_iter().peekable();
    loop {
        let ord = match (ia.peek(), ib.peek()) {
            (Some(x), Some(y)) => x.0.coeff_cmp(&y.0),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => break,
        };
        match ord {
            Ordering::Less => out.push(ia.next().unwrap()),
            Ordering::Greater => out.push(ib.next().unwrap()),
            Ordering::Equal => {
                let (e, c1) = ia.next().unwrap();
                let (_, c2) = ib.next().unwrap();
                out.push((e, c1 + c2));
            }
        }
    }
    out
}
