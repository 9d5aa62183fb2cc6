use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::TestCase;
use crate::generation::CellKey;
use crate::registry::{FunctionalityId, Registry};
use crate::scalar::Scalar;

/// Rendering of an undefined passing rate in CSV output.
pub const UNDEFINED: &str = "NA";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GroupCounts {
    pub pre_filter: usize,
    pub post_filter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStats<F> {
    pub functionality: FunctionalityId,
    pub group: Option<String>,
    pub pre_filter: usize,
    pub post_filter: usize,
    /// `post / pre`; `None` when the cell is empty.
    pub passing_rate: Option<F>,
}

impl<F> CellStats<F> {
    pub fn filtered(&self) -> usize {
        self.pre_filter - self.post_filter
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats<F> {
    /// Per target group (`"none"` for groupless functionalities).
    pub groups: Vec<(String, GroupCounts)>,
    pub cells: Vec<CellStats<F>>,
    pub total: GroupCounts,
}

/// Counts pre- and post-filter cases per group and per cell.
///
/// With a registry, every applicable cell is listed (empty ones with an
/// undefined rate) and groups follow registry order; otherwise only
/// observed cells appear, sorted.
pub fn compute_stats<F: Scalar>(cases: &[TestCase], registry: Option<&Registry>) -> DatasetStats<F> {
    let mut cells: BTreeMap<CellKey, GroupCounts> = BTreeMap::new();
    let mut order: Vec<CellKey> = Vec::new();
    if let Some(reg) = registry {
        for f in reg.functionalities() {
            for g in reg.applicable_groups(f) {
                let key = CellKey::new(f.id, g.map(|g| g.name.as_str()));
                cells.insert(key.clone(), GroupCounts::default());
                order.push(key);
            }
        }
    }
    for case in cases {
        let key = case.cell();
        let entry = cells.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            GroupCounts::default()
        });
        entry.pre_filter += 1;
        entry.post_filter += usize::from(case.kept);
    }
    if registry.is_none() {
        order.sort();
    }

    let mut group_order: Vec<String> = match registry {
        Some(reg) => reg.target_groups().iter().map(|g| g.name.clone()).collect(),
        None => Vec::new(),
    };
    let mut groups: BTreeMap<String, GroupCounts> = BTreeMap::new();
    let mut total = GroupCounts::default();
    let mut has_none = false;
    for key in &order {
        let c = cells[key];
        let label = key.group_label().to_string();
        if key.group.is_none() {
            has_none = true;
        } else if !group_order.contains(&label) {
            group_order.push(label.clone());
        }
        let g = groups.entry(label).or_default();
        g.pre_filter += c.pre_filter;
        g.post_filter += c.post_filter;
        total.pre_filter += c.pre_filter;
        total.post_filter += c.post_filter;
    }
    if registry.is_none() {
        group_order.sort();
    }
    if has_none {
        group_order.push("none".to_string());
    }

    DatasetStats {
        groups: group_order
            .into_iter()
            .map(|g| {
                let c = groups.get(&g).copied().unwrap_or_default();
                (g, c)
            })
            .collect(),
        cells: order
            .into_iter()
            .map(|key| {
                let c = cells[&key];
                CellStats {
                    functionality: key.functionality,
                    group: key.group,
                    pre_filter: c.pre_filter,
                    post_filter: c.post_filter,
                    passing_rate: (c.pre_filter > 0)
                        .then(|| F::from_count(c.post_filter) / F::from_count(c.pre_filter)),
                }
            })
            .collect(),
        total,
    }
}

impl<F: Scalar> DatasetStats<F> {
    /// `group,pre_filter,post_filter` with a trailing total row.
    pub fn group_counts_csv(&self) -> String {
        let mut out = String::from("group,pre_filter,post_filter\n");
        for (g, c) in &self.groups {
            let _ = writeln!(out, "{g},{},{}", c.pre_filter, c.post_filter);
        }
        let _ = writeln!(out, "total,{},{}", self.total.pre_filter, self.total.post_filter);
        out
    }

    pub fn passing_rates_csv(&self) -> String {
        let mut out = String::from("functionality,group,pre_filter,post_filter,filtered,passing_rate\n");
        for c in &self.cells {
            let rate = c
                .passing_rate
                .map_or_else(|| UNDEFINED.to_string(), |r| format!("{:.4}", r.to_real()));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.functionality,
                c.group.as_deref().unwrap_or("none"),
                c.pre_filter,
                c.post_filter,
                c.filtered(),
                rate
            );
        }
        out
    }

    /// Sum over groups equals the total, and post never exceeds pre.
    pub fn is_consistent(&self) -> bool {
        let (pre, post) = self
            .groups
            .iter()
            .fold((0, 0), |(a, b), (_, c)| (a + c.pre_filter, b + c.post_filter));
        pre == self.total.pre_filter
            && post == self.total.post_filter
            && self.cells.iter().all(|c| c.post_filter <= c.pre_filter)
    }
}
