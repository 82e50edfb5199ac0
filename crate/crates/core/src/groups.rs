//! Anomalous group detection and collective-behavior metrics.
//!
//! The group is the maximal `k1`-core of the Type-I subgraph, `k1` being its
//! degeneracy. Its coreness in Type-II/III is the smallest member coreness
//! there; the examined core is the maximal core at that level, and within it
//! the common neighbor ratio (CNR) and diversity ratio (DR) compare how
//! members share their non-member neighbors.

use std::collections::HashSet;
use std::io::Write;

use serde::Serialize;

use crate::netgraph::{self, CorenessMap, MentionGraph, Pattern, PatternSubgraph};
use crate::{Error, Result};

/// `N_u` against `r·|A|` needs slack only for round-off; genuine gaps are at
/// least `1/|U|`.
const RATIO_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnomalousGroup {
    /// Sorted member ids.
    pub members: Vec<String>,
    pub k1: u32,
}

/// Group of a Type-I subgraph, or `None` when it has no edges.
pub fn anomalous_group(g1: &PatternSubgraph) -> Option<AnomalousGroup> {
    if g1.graph.edge_count() == 0 {
        return None;
    }
    let k1 = netgraph::core_decomposition(&g1.graph).degeneracy;
    let core = netgraph::max_kcore(&g1.graph, k1 as usize);
    Some(AnomalousGroup {
        members: core.graph.ids().to_vec(),
        k1,
    })
}

/// Smallest coreness among `members` in `gx`.
pub fn group_coreness(
    members: &[String],
    gx: &MentionGraph,
    coreness: &CorenessMap,
) -> Result<u32> {
    let mut k = None::<u32>;
    for m in members {
        let c = coreness.of(gx, m).ok_or_else(|| {
            Error::Integrity(format!("group member {m} missing from pattern subgraph"))
        })?;
        k = Some(k.map_or(c, |k| k.min(c)));
    }
    k.ok_or_else(|| Error::InvalidParameter("empty group".into()))
}

/// Non-member nodes of `core` with the number of members adjacent to each.
pub fn neighbor_counts(
    core: &MentionGraph,
    members: &[String],
) -> Result<(Vec<String>, Vec<usize>)> {
    let mut member_idx = HashSet::new();
    for m in members {
        let i = core
            .index_of(m)
            .ok_or_else(|| Error::Integrity(format!("group member {m} missing from core")))?;
        member_idx.insert(i);
    }
    let mut ids = Vec::new();
    let mut counts = Vec::new();
    for u in (0..core.node_count()).filter(|u| !member_idx.contains(u)) {
        ids.push(core.id(u).to_string());
        counts.push(
            core.neighbors(u)
                .iter()
                .filter(|n| member_idx.contains(n))
                .count(),
        );
    }
    Ok((ids, counts))
}

/// Common neighbor ratio `r = Σ N_u / (|A|·|U|)`.
pub fn cnr(core: &MentionGraph, members: &[String]) -> Result<f64> {
    let (_, counts) = neighbor_counts(core, members)?;
    if counts.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    let total: usize = counts.iter().sum();
    Ok(total as f64 / (members.len() * counts.len()) as f64)
}

/// Diversity ratio `β = |{u : N_u ≥ r·|A|}| / |A|`.
pub fn dr(core: &MentionGraph, members: &[String], r: f64) -> Result<f64> {
    let (_, counts) = neighbor_counts(core, members)?;
    if counts.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    let bar = r * members.len() as f64 - RATIO_EPS;
    let hits = counts.iter().filter(|&&n| n as f64 >= bar).count();
    Ok(hits as f64 / members.len() as f64)
}

/// Group behavior inside one pattern subgraph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMetrics {
    pub pattern: Pattern,
    /// Group coreness in this pattern.
    pub k: u32,
    /// Size of the examined maximal `k`-core.
    pub core_size: usize,
    /// `None` when the core has no non-member nodes.
    pub r: Option<f64>,
    pub beta: Option<f64>,
    pub non_members: Vec<String>,
    pub neighbor_counts: Vec<usize>,
}

pub fn group_metrics(group: &AnomalousGroup, gx: &PatternSubgraph) -> Result<GroupMetrics> {
    let coreness = netgraph::core_decomposition(&gx.graph);
    let k = group_coreness(&group.members, &gx.graph, &coreness)?;
    let core = netgraph::max_kcore(&gx.graph, k as usize).graph;
    let (non_members, counts) = neighbor_counts(&core, &group.members)?;
    let (r, beta) = match cnr(&core, &group.members) {
        Ok(r) => (Some(r), Some(dr(&core, &group.members, r)?)),
        Err(Error::EmptyNeighborhood) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(GroupMetrics {
        pattern: gx.pattern,
        k,
        core_size: core.node_count(),
        r,
        beta,
        non_members,
        neighbor_counts: counts,
    })
}

/// Group plus its Type-II and Type-III metrics for one labeled graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupAnalysis {
    pub group: AnomalousGroup,
    pub type2: GroupMetrics,
    pub type3: GroupMetrics,
}

/// Full group analysis; `None` when no group forms.
pub fn analyze(g: &MentionGraph) -> Result<Option<GroupAnalysis>> {
    let g1 = netgraph::extract_pattern(g, Pattern::TypeI);
    let Some(group) = anomalous_group(&g1) else {
        return Ok(None);
    };
    let type2 = group_metrics(&group, &netgraph::extract_pattern(g, Pattern::TypeII))?;
    let type3 = group_metrics(&group, &netgraph::extract_pattern(g, Pattern::TypeIII))?;
    Ok(Some(GroupAnalysis {
        group,
        type2,
        type3,
    }))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| x.to_string())
}

/// One CSV row per period with header `period,coreness1,coreness2,cnr,dr`
/// (CNR and DR measured in Type-II). Periods without a group are written
/// with `n/a` fields.
pub fn write_group_csv<W: Write>(w: W, rows: &[(String, Option<GroupAnalysis>)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["period", "coreness1", "coreness2", "cnr", "dr"])?;
    for (period, analysis) in rows {
        match analysis {
            Some(a) => out.write_record([
                period.as_str(),
                &a.group.k1.to_string(),
                &a.type2.k.to_string(),
                &fmt_opt(a.type2.r),
                &fmt_opt(a.type2.beta),
            ])?,
            None => out.write_record([period.as_str(), "n/a", "n/a", "n/a", "n/a"])?,
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{extract_pattern, Category};

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn clique_edges(names: &[String]) -> Vec<(String, String)> {
        let mut e = Vec::new();
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                e.push((names[i].clone(), names[j].clone()));
            }
        }
        e
    }

    fn anomalous(names: &[String]) -> Vec<(String, Category)> {
        names
            .iter()
            .map(|n| (n.clone(), Category::Anomalous))
            .collect()
    }

    #[test]
    fn clique_group() {
        let names: Vec<String> = (0..13).map(|i| format!("a{i:02}")).collect();
        let g = MentionGraph::from_edges(anomalous(&names), clique_edges(&names));
        let group = anomalous_group(&extract_pattern(&g, Pattern::TypeI)).unwrap();
        assert_eq!(group.k1, 12);
        assert_eq!(group.members, names);
    }

    #[test]
    fn clique_beats_path() {
        let k5: Vec<String> = (0..5).map(|i| format!("k{i}")).collect();
        let mut edges = clique_edges(&k5);
        edges.push(("p0".into(), "p1".into()));
        edges.push(("p1".into(), "p2".into()));
        let mut labels = anomalous(&k5);
        labels.extend(anomalous(&ids(&["p0", "p1", "p2"])));
        let g = MentionGraph::from_edges(labels, edges);
        let group = anomalous_group(&extract_pattern(&g, Pattern::TypeI)).unwrap();
        assert_eq!(group.k1, 4);
        assert_eq!(group.members, k5);
    }

    #[test]
    fn edgeless_type_one_has_no_group() {
        let g = MentionGraph::from_edges(
            anomalous(&ids(&["a", "b"])),
            vec![("a".to_string(), "r".to_string())],
        );
        assert!(anomalous_group(&extract_pattern(&g, Pattern::TypeI)).is_none());
        assert!(analyze(&g).unwrap().is_none());
    }

    #[test]
    fn group_coreness_is_member_minimum() {
        let g = MentionGraph::from_edges(
            vec![
                ("x".to_string(), Category::Anomalous),
                ("y".into(), Category::Anomalous),
                ("z".into(), Category::Anomalous),
            ],
            Vec::<(String, String)>::new(),
        );
        let cm = CorenessMap {
            values: vec![37, 13, 40],
            degeneracy: 40,
        };
        assert_eq!(group_coreness(&ids(&["x", "y", "z"]), &g, &cm).unwrap(), 13);
        assert!(matches!(
            group_coreness(&ids(&["x", "nope"]), &g, &cm),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn group_coreness_with_equal_member_values() {
        // 4 anomalous members and 141 ETT users, all in one 145-clique:
        // every node has coreness 144
        let members: Vec<String> = (0..4).map(|i| format!("a{i}")).collect();
        let etts: Vec<String> = (0..141).map(|i| format!("e{i:03}")).collect();
        let all: Vec<String> = members.iter().chain(&etts).cloned().collect();
        let mut labels = anomalous(&members);
        labels.extend(etts.iter().map(|e| (e.clone(), Category::Ett)));
        let g = MentionGraph::from_edges(labels, clique_edges(&all));
        let a = analyze(&g).unwrap().unwrap();
        assert_eq!(a.group.k1, 3);
        assert_eq!(a.type2.k, 144);
        assert_eq!(a.type2.core_size, 145);
        assert_eq!(a.type2.r, Some(1.0));
    }

    #[test]
    fn embedded_clique_group_coreness_at_least_k1() {
        // anomalous K4 inside a K7 whose other members are ETT users,
        // plus regular leaves hanging off the group
        let members: Vec<String> = (0..4).map(|i| format!("a{i}")).collect();
        let etts: Vec<String> = (0..3).map(|i| format!("e{i}")).collect();
        let all: Vec<String> = members.iter().chain(&etts).cloned().collect();
        let mut edges = clique_edges(&all);
        edges.push(("a0".into(), "r0".into()));
        let mut labels = anomalous(&members);
        labels.extend(etts.iter().map(|e| (e.clone(), Category::Ett)));
        let g = MentionGraph::from_edges(labels, edges);
        let a = analyze(&g).unwrap().unwrap();
        assert_eq!(a.group.k1, 3);
        assert_eq!(a.type2.k, 6);
        assert_eq!(a.type3.k, 6);
        assert!(a.type2.k >= a.group.k1 && a.type3.k >= a.group.k1);
    }

    fn interaction_pattern(pattern: u8) -> MentionGraph {
        // members a0..a2 form a triangle
        let members = ids(&["a0", "a1", "a2"]);
        let mut edges = clique_edges(&members);
        let mut labels = anomalous(&members);
        let outside: Vec<String> = match pattern {
            1 => ids(&["u0"]),
            _ => (0..6).map(|i| format!("u{i}")).collect(),
        };
        labels.extend(outside.iter().map(|u| (u.clone(), Category::Ett)));
        match pattern {
            1 | 2 => {
                for u in &outside {
                    for a in &members {
                        edges.push((u.clone(), a.clone()));
                    }
                }
            }
            _ => {
                // each outside user touches one member; a ring among them
                // keeps them in the same 3-core as the members
                for (i, u) in outside.iter().enumerate() {
                    edges.push((u.clone(), members[i / 2].clone()));
                    edges.push((u.clone(), outside[(i + 1) % outside.len()].clone()));
                }
            }
        }
        MentionGraph::from_edges(labels, edges)
    }

    #[test]
    fn golden_interaction_patterns() {
        let expected = [(1, 1.0, 1.0 / 3.0), (2, 1.0, 2.0), (3, 1.0 / 3.0, 2.0)];
        for (p, r, beta) in expected {
            let a = analyze(&interaction_pattern(p)).unwrap().unwrap();
            assert_eq!(a.group.k1, 2);
            assert!((a.type2.r.unwrap() - r).abs() <= 1e-12, "pattern {p}");
            assert!((a.type2.beta.unwrap() - beta).abs() <= 1e-12, "pattern {p}");
        }
    }

    #[test]
    fn direct_cnr_dr() {
        // |A| = 3, U = {u0, u1}, N = {0, 3}
        let members = ids(&["a0", "a1", "a2"]);
        let mut edges = clique_edges(&members);
        for a in &members {
            edges.push(("u1".into(), a.clone()));
        }
        let mut labels = anomalous(&members);
        labels.push(("u0".into(), Category::Regular));
        let core = MentionGraph::from_edges(labels, edges);
        let r = cnr(&core, &members).unwrap();
        assert_eq!(r, 0.5);
        assert_eq!(dr(&core, &members, r).unwrap(), 1.0 / 3.0);
        let (u, n) = neighbor_counts(&core, &members).unwrap();
        assert_eq!(u, ids(&["u0", "u1"]));
        assert_eq!(n, vec![0, 3]);
    }

    #[test]
    fn empty_neighborhood_is_surfaced() {
        let members = ids(&["a0", "a1", "a2"]);
        let core = MentionGraph::from_edges(anomalous(&members), clique_edges(&members));
        assert!(matches!(
            cnr(&core, &members),
            Err(Error::EmptyNeighborhood)
        ));
        assert!(matches!(
            dr(&core, &members, 1.0),
            Err(Error::EmptyNeighborhood)
        ));
        let a = analyze(&core).unwrap().unwrap();
        assert_eq!((a.type2.r, a.type2.beta), (None, None));
    }

    #[test]
    fn group_csv() {
        let rows = vec![
            ("p1".to_string(), analyze(&interaction_pattern(1)).unwrap()),
            ("p2".to_string(), None),
        ];
        let mut buf = Vec::new();
        write_group_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            format!(
                "period,coreness1,coreness2,cnr,dr\np1,2,3,1,{}\np2,n/a,n/a,n/a,n/a\n",
                1.0f64 / 3.0
            )
        );
    }
}
