//! Equivalence classes of words with identical projected cylinders and
//! certified lower bounds for the overlap exponent `H`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::carpet::{CarpetIfs, Word};
use crate::csv::{g17, Table};
use crate::endpoints::{Budget, EndpointLevel};
use crate::error::{Error, Result};
use crate::exact::FieldElement;

/// Member lists are kept only below this word length.
pub const MEMBER_LIST_MAX_K: usize = 12;
/// Default cap on `m^k` for class enumeration.
pub const CLASS_WORD_LIMIT: u128 = 1 << 24;

#[derive(Clone, Debug)]
pub struct EquivalenceClassTable {
    pub k: usize,
    /// Common left endpoint and size of each class, ordered by coordinates.
    pub classes: Vec<(FieldElement, u64)>,
    /// Members per class, parallel to `classes`, when `k < 12`.
    pub members: Option<Vec<Vec<Word>>>,
    pub max_class_size: u64,
    pub class_count: usize,
}

impl EquivalenceClassTable {
    pub fn total_words(&self) -> u128 {
        self.classes.iter().map(|(_, n)| *n as u128).sum()
    }

    /// Members of the class containing `w`, when member lists are kept.
    pub fn class_of(&self, w: &Word) -> Option<&[Word]> {
        self.members.as_ref()?.iter().find(|ms| ms.contains(w)).map(Vec::as_slice)
    }
}

fn class_budget(ifs: &CarpetIfs, k: usize, budget: &Budget) -> Result<()> {
    let limit = budget.max_words.min(CLASS_WORD_LIMIT);
    Budget { max_words: limit, ..*budget }.check_words(ifs.m(), k).map(|_| ())
}

/// Partition all words of length `k` by exact left endpoint.
pub fn equivalence_classes(ifs: &CarpetIfs, k: usize, budget: &Budget) -> Result<EquivalenceClassTable> {
    if k == 0 {
        return Err(Error::EmptyWord);
    }
    class_budget(ifs, k, budget)?;
    if k >= MEMBER_LIST_MAX_K {
        let level = EndpointLevel::build(ifs, k, &Budget { max_words: u128::MAX, ..*budget })?;
        let classes = level.points().to_vec();
        return Ok(EquivalenceClassTable {
            k,
            max_class_size: level.max_multiplicity(),
            class_count: classes.len(),
            classes,
            members: None,
        });
    }
    // words in lexicographic order with their endpoints
    let mut words: Vec<(Vec<usize>, FieldElement)> = vec![(Vec::new(), FieldElement::zero(ifs.field()))];
    let mut weight = FieldElement::one(ifs.field());
    for _ in 0..k {
        let incs: Vec<FieldElement> = ifs.maps().iter().map(|t| &t.tx * &weight).collect();
        let mut next = Vec::with_capacity(words.len() * ifs.m());
        for (w, e) in &words {
            for (i, inc) in incs.iter().enumerate() {
                let mut v = w.clone();
                v.push(i);
                next.push((v, e + inc));
            }
        }
        words = next;
        weight = &weight * ifs.beta();
    }
    let mut groups: BTreeMap<Vec<num_rational::BigRational>, (FieldElement, Vec<Word>)> = BTreeMap::new();
    for (w, e) in words {
        let entry = groups.entry(e.coeffs().to_vec()).or_insert_with(|| (e.clone(), Vec::new()));
        entry.1.push(Word::new(w, ifs.m())?);
    }
    let mut classes = Vec::with_capacity(groups.len());
    let mut members = Vec::with_capacity(groups.len());
    for (_, (e, ws)) in groups {
        classes.push((e, ws.len() as u64));
        members.push(ws);
    }
    let max_class_size = classes.iter().map(|(_, n)| *n).max().unwrap_or(0);
    Ok(EquivalenceClassTable { k, class_count: classes.len(), classes, members: Some(members), max_class_size })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HRow {
    pub k: usize,
    pub max_class_size: u64,
    /// `log(max class size)/k`
    pub h_k: f64,
    /// Running maximum of `h_k`.
    pub h_lower: f64,
    pub symbolic_min_dim: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HEstimate {
    pub rows: Vec<HRow>,
    pub best_k: usize,
    pub h_lower: f64,
    /// `(log m − H_lower)/(−log β)`
    pub symbolic_min_dim: f64,
}

impl HEstimate {
    pub fn to_csv(&self) -> String {
        let mut t = Table::new(&["k", "max_class_size", "H_k", "H_lower", "symbolic_min_dim"]);
        for r in &self.rows {
            t.push(vec![r.k.to_string(), r.max_class_size.to_string(), g17(r.h_k), g17(r.h_lower), g17(r.symbolic_min_dim)]);
        }
        t.render()
    }
}

/// `H_k` for `k = 1..=k_max` and their running maximum.
pub fn h_lower_bound(ifs: &CarpetIfs, k_max: usize, budget: &Budget) -> Result<HEstimate> {
    if k_max == 0 {
        return Err(Error::ParameterOutOfRange("k_max must be at least 1".into()));
    }
    class_budget(ifs, k_max, budget)?;
    let log_m = (ifs.m() as f64).ln();
    let neg_log_beta = -ifs.beta_f64().ln();
    let open = Budget { max_words: u128::MAX, ..*budget };
    let mut level = EndpointLevel::root(ifs);
    let mut rows = Vec::with_capacity(k_max);
    let mut best = (0.0f64, 1usize);
    for k in 1..=k_max {
        level = level.extend(ifs, &open)?;
        let size = level.max_multiplicity();
        let h_k = (size as f64).ln() / k as f64;
        if h_k > best.0 {
            best = (h_k, k);
        }
        rows.push(HRow { k, max_class_size: size, h_k, h_lower: best.0, symbolic_min_dim: (log_m - best.0) / neg_log_beta });
    }
    Ok(HEstimate { rows, best_k: best.1, h_lower: best.0, symbolic_min_dim: (log_m - best.0) / neg_log_beta })
}

/// Every class at every length up to `k` is a singleton.
pub fn is_free_up_to(ifs: &CarpetIfs, k: usize, budget: &Budget) -> Result<bool> {
    class_budget(ifs, k, budget)?;
    let open = Budget { max_words: u128::MAX, ..*budget };
    let mut level = EndpointLevel::root(ifs);
    for _ in 0..k {
        level = level.extend(ifs, &open)?;
        if level.max_multiplicity() > 1 {
            return Ok(false);
        }
    }
    Ok(true)
}
