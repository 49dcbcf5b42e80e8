//! Polytope files. A facet carries its label `a0 + ⟨a, μ⟩` (constant term
//! first), the id of its group and its position `index` in the facet list.

use std::collections::BTreeMap;
use std::path::Path;

use lkq_core::{AffineFunction, Grouping, LabelledPolytope};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::numbers::{format_rational, parse_rational};

/// A JSON number (read through its decimal text) or a string `"p/q"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Literal(serde_json::Number),
    Text(String),
}

impl Number {
    pub fn to_rational(&self) -> Result<BigRational, String> {
        match self {
            Number::Literal(n) => parse_rational(&n.to_string()),
            Number::Text(s) => parse_rational(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacetEntry {
    pub a0: Number,
    pub a: Vec<Number>,
    pub group: usize,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupEntry {
    pub id: usize,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeDocument {
    pub dim: usize,
    pub facets: Vec<FacetEntry>,
    pub groups: Vec<GroupEntry>,
}

#[derive(Debug)]
pub enum DocumentError {
    Io(std::io::Error),
    Json(serde_json::Error),
    Invalid(String),
    Polytope(lkq_core::Error),
}

impl std::fmt::Display for DocumentError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DocumentError::Io(e) => write!(f, "cannot read file: {e}"),
            DocumentError::Json(e) => write!(f, "malformed JSON: {e}"),
            DocumentError::Invalid(s) => write!(f, "invalid document: {s}"),
            DocumentError::Polytope(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for DocumentError {}

impl PolytopeDocument {
    pub fn from_json(s: &str) -> Result<Self, DocumentError> {
        serde_json::from_str(s).map_err(DocumentError::Json)
    }

    pub fn read(path: &Path) -> Result<Self, DocumentError> {
        Self::from_json(&std::fs::read_to_string(path).map_err(DocumentError::Io)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    /// Exact labels in index order, and the grouping in group-id order.
    pub fn labels(&self) -> Result<(Vec<AffineFunction<BigRational>>, Grouping), DocumentError> {
        let bad = |s: String| DocumentError::Invalid(s);
        let n = self.facets.len();
        let mut slots: Vec<Option<&FacetEntry>> = vec![None; n];
        for f in &self.facets {
            if f.index >= n || slots[f.index].is_some() {
                return Err(bad(format!("facet indices must be 0..{n} without repeats (saw {})", f.index)));
            }
            if f.a.len() != self.dim {
                return Err(bad(format!("facet {} has {} coefficients, dim is {}", f.index, f.a.len(), self.dim)));
            }
            slots[f.index] = Some(f);
        }
        let mut labels = Vec::with_capacity(n);
        for f in slots.into_iter().flatten() {
            let a0 = f.a0.to_rational().map_err(bad)?;
            let a = f.a.iter().map(|x| x.to_rational()).collect::<Result<_, _>>().map_err(bad)?;
            labels.push(AffineFunction::new(a0, a));
        }
        let mut members: BTreeMap<usize, Vec<usize>> = self.groups.iter().map(|g| (g.id, Vec::new())).collect();
        if members.len() != self.groups.len() {
            return Err(bad("repeated group id".into()));
        }
        let mut by_index: Vec<&FacetEntry> = self.facets.iter().collect();
        by_index.sort_by_key(|f| f.index);
        for f in by_index {
            members.get_mut(&f.group).ok_or_else(|| bad(format!("facet {} names unknown group {}", f.index, f.group)))?.push(f.index);
        }
        for g in &self.groups {
            if members[&g.id].len() != g.size {
                return Err(bad(format!("group {} declares size {} but has {} facets", g.id, g.size, members[&g.id].len())));
            }
        }
        let ordered: Vec<Vec<usize>> = self.groups.iter().map(|g| members[&g.id].clone()).collect();
        Ok((labels, Grouping::new(ordered)))
    }

    pub fn to_polytope(&self) -> Result<LabelledPolytope, DocumentError> {
        let (labels, grouping) = self.labels()?;
        LabelledPolytope::from_exact(labels).and_then(|p| p.with_grouping(grouping)).map_err(DocumentError::Polytope)
    }

    /// Document for a grouped polytope with exact labels, numbers as strings.
    pub fn from_polytope(p: &LabelledPolytope) -> Result<Self, DocumentError> {
        let labels = p.exact_facets().ok_or_else(|| DocumentError::Invalid("labels are not exact".into()))?;
        let grouping = p.grouping().ok_or_else(|| DocumentError::Invalid("polytope has no grouping".into()))?;
        let factor = grouping.factor_of();
        let facets = labels
            .iter()
            .enumerate()
            .map(|(k, l)| FacetEntry {
                a0: Number::Text(format_rational(&l.a0)),
                a: l.a.iter().map(|x| Number::Text(format_rational(x))).collect(),
                group: factor[k],
                index: k,
            })
            .collect();
        let groups = grouping.groups().iter().enumerate().map(|(id, g)| GroupEntry { id, size: g.len() }).collect();
        Ok(Self { dim: p.dim(), facets, groups })
    }
}
