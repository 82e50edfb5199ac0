//! Undirected mention graph, connection-pattern subgraphs and k-cores.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::corpus::{Timestamp, TokenizedPost};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Anomalous,
    /// ETT user that is not anomalous.
    Ett,
    Regular,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Anomalous => "anomalous",
            Category::Ett => "ett",
            Category::Regular => "regular",
        })
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "anomalous" => Ok(Category::Anomalous),
            "ett" => Ok(Category::Ett),
            "regular" => Ok(Category::Regular),
            other => Err(Error::InvalidParameter(format!(
                "unknown category {other:?}"
            ))),
        }
    }
}

/// Simple undirected graph over user ids with a category per node.
///
/// Nodes are indexed in ascending id order; neighbor lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MentionGraph {
    ids: Vec<String>,
    labels: Vec<Category>,
    adj: Vec<Vec<usize>>,
    pub period: Option<(Timestamp, Timestamp)>,
}

impl MentionGraph {
    /// Nodes are every labeled id plus every edge endpoint (unlabeled
    /// endpoints are `Regular`). Self-loops and duplicates are dropped.
    pub fn from_edges<I, E, S>(labels: I, edges: E) -> Self
    where
        I: IntoIterator<Item = (S, Category)>,
        E: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let mut nodes: BTreeMap<String, Category> =
            labels.into_iter().map(|(id, c)| (id.into(), c)).collect();
        let edges: Vec<(String, String)> = edges
            .into_iter()
            .map(|(a, b)| (a.into(), b.into()))
            .collect();
        for (a, b) in &edges {
            for id in [a, b] {
                nodes.entry(id.clone()).or_insert(Category::Regular);
            }
        }
        let (ids, labels): (Vec<String>, Vec<Category>) = nodes.into_iter().unzip();
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ids.len()];
        let index = |id: &str| {
            ids.binary_search_by(|x| x.as_str().cmp(id))
                .expect("endpoint registered")
        };
        for (a, b) in &edges {
            let (i, j) = (index(a), index(b));
            if i != j {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
        MentionGraph {
            ids,
            labels,
            adj: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
            period: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn label(&self, i: usize) -> Category {
        self.labels[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.binary_search_by(|x| x.as_str().cmp(id)).ok()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&j).is_ok()
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, ns)| ns.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn nodes_with_label(&self, c: Category) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| self.labels[i] == c)
            .collect()
    }

    /// Subgraph induced on `nodes` (indices into `self`).
    pub fn induced(&self, nodes: &[usize]) -> Subgraph {
        let mut parent: Vec<usize> = nodes.to_vec();
        parent.sort_unstable();
        parent.dedup();
        let mut local = vec![usize::MAX; self.node_count()];
        for (new, &old) in parent.iter().enumerate() {
            local[old] = new;
        }
        let adj = parent
            .iter()
            .map(|&old| {
                self.adj[old]
                    .iter()
                    .filter_map(|&n| (local[n] != usize::MAX).then_some(local[n]))
                    .collect()
            })
            .collect();
        Subgraph {
            graph: MentionGraph {
                ids: parent.iter().map(|&i| self.ids[i].clone()).collect(),
                labels: parent.iter().map(|&i| self.labels[i]).collect(),
                adj,
                period: self.period,
            },
            parent,
        }
    }
}

/// A subgraph together with the index of each node in the parent graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    pub graph: MentionGraph,
    pub parent: Vec<usize>,
}

/// Build the mention graph from posts in `period` (all posts when `None`).
///
/// An edge `(u, v)` exists when either user mentioned the other. Every
/// labeled user is a node even without edges; mentioned users without a
/// label are `Regular`.
pub fn build_mention_graph(
    posts: &[TokenizedPost],
    labels: &HashMap<String, Category>,
    period: Option<(Timestamp, Timestamp)>,
) -> MentionGraph {
    let in_period = |t: Timestamp| period.is_none_or(|(s, e)| t >= s && t < e);
    let edges: Vec<(String, String)> = posts
        .iter()
        .filter(|p| in_period(p.timestamp))
        .flat_map(|p| {
            p.mentions
                .iter()
                .map(move |m| (p.user_id.clone(), m.clone()))
        })
        .collect();
    let mut g = MentionGraph::from_edges(labels.iter().map(|(k, v)| (k.clone(), *v)), edges);
    g.period = period;
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Pattern {
    /// Anomalous users only.
    TypeI,
    /// Anomalous users plus their ETT first neighbors.
    TypeII,
    /// Anomalous users plus all first neighbors.
    TypeIII,
}

impl Pattern {
    pub const ALL: [Pattern; 3] = [Pattern::TypeI, Pattern::TypeII, Pattern::TypeIII];

    pub fn number(self) -> u8 {
        match self {
            Pattern::TypeI => 1,
            Pattern::TypeII => 2,
            Pattern::TypeIII => 3,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::TypeI => "I",
            Pattern::TypeII => "II",
            Pattern::TypeIII => "III",
        })
    }
}

/// Largest subgraph of a mention graph satisfying a connection pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSubgraph {
    pub pattern: Pattern,
    pub graph: MentionGraph,
    /// Index of each node in the parent graph.
    pub parent: Vec<usize>,
}

/// Node set admitted by `pattern`, as parent indices in ascending order.
pub fn pattern_nodes(g: &MentionGraph, pattern: Pattern) -> Vec<usize> {
    let anomalous = g.nodes_with_label(Category::Anomalous);
    let mut keep = vec![false; g.node_count()];
    for &a in &anomalous {
        keep[a] = true;
        if pattern == Pattern::TypeI {
            continue;
        }
        for &n in g.neighbors(a) {
            if pattern == Pattern::TypeIII || g.label(n) == Category::Ett {
                keep[n] = true;
            }
        }
    }
    (0..g.node_count()).filter(|&i| keep[i]).collect()
}

/// Extract the pattern subgraph: the pattern's node set with every parent
/// edge between included nodes.
pub fn extract_pattern(g: &MentionGraph, pattern: Pattern) -> PatternSubgraph {
    let Subgraph { graph, parent } = g.induced(&pattern_nodes(g, pattern));
    PatternSubgraph {
        pattern,
        graph,
        parent,
    }
}

/// Whether the subgraph given by `nodes` and `edges` (user ids) satisfies
/// `pattern` within `g`: every node is admitted by the pattern and every
/// edge is a parent edge between sampled nodes.
pub fn satisfies_pattern(
    g: &MentionGraph,
    pattern: Pattern,
    nodes: &[&str],
    edges: &[(&str, &str)],
) -> bool {
    let admitted = pattern_nodes(g, pattern);
    let mut sampled = Vec::with_capacity(nodes.len());
    for id in nodes {
        match g.index_of(id) {
            Some(i) if admitted.binary_search(&i).is_ok() => sampled.push(i),
            _ => return false,
        }
    }
    sampled.sort_unstable();
    edges
        .iter()
        .all(|(a, b)| match (g.index_of(a), g.index_of(b)) {
            (Some(i), Some(j)) => {
                sampled.binary_search(&i).is_ok()
                    && sampled.binary_search(&j).is_ok()
                    && g.has_edge(i, j)
            }
            _ => false,
        })
}

/// Core number of every node of the graph it was computed on.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorenessMap {
    pub values: Vec<u32>,
    pub degeneracy: u32,
}

impl CorenessMap {
    pub fn get(&self, i: usize) -> u32 {
        self.values[i]
    }

    pub fn of(&self, g: &MentionGraph, id: &str) -> Option<u32> {
        g.index_of(id).map(|i| self.values[i])
    }
}

/// Core decomposition by bucketed minimum-degree peeling (Batagelj and
/// Zaversnik), `O(V + E)`.
pub fn core_decomposition(g: &MentionGraph) -> CorenessMap {
    let n = g.node_count();
    if n == 0 {
        return CorenessMap::default();
    }
    let mut deg: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);

    // bin[d] = start of degree-d block in `vert`
    let mut bin = vec![0usize; max_deg + 1];
    for &d in &deg {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[deg[v]];
        vert[pos[v]] = v;
        bin[deg[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;

    for i in 0..n {
        let v = vert[i];
        for &u in g.neighbors(v) {
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    pos[u] = pw;
                    vert[pu] = w;
                    pos[w] = pu;
                    vert[pw] = u;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }
    let values: Vec<u32> = deg.into_iter().map(|d| d as u32).collect();
    let degeneracy = values.iter().copied().max().unwrap_or(0);
    CorenessMap { values, degeneracy }
}

/// The maximal subgraph in which every node has degree at least `k`.
pub fn max_kcore(g: &MentionGraph, k: usize) -> Subgraph {
    let n = g.node_count();
    let mut deg: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let mut removed = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| deg[i] < k).collect();
    for &i in &queue {
        removed[i] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &u in g.neighbors(v) {
            if !removed[u] {
                deg[u] -= 1;
                if deg[u] < k {
                    removed[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&i| !removed[i]).collect();
    g.induced(&keep)
}

/// CCDF of coreness over `subset`: `(k, fraction with coreness ≥ k)` for
/// `k = 0..=degeneracy`.
pub fn coreness_ccdf(coreness: &CorenessMap, subset: &[usize]) -> Vec<(u32, f64)> {
    if subset.is_empty() {
        return Vec::new();
    }
    let mut at_least = vec![0usize; coreness.degeneracy as usize + 2];
    for &i in subset {
        at_least[coreness.values[i] as usize] += 1;
    }
    for k in (0..=coreness.degeneracy as usize).rev() {
        at_least[k] += at_least[k + 1];
    }
    let n = subset.len() as f64;
    (0..=coreness.degeneracy)
        .map(|k| (k, at_least[k as usize] as f64 / n))
        .collect()
}

/// Edge list CSV with header `u,v`, each undirected edge once.
pub fn write_edge_list<W: Write>(w: W, g: &MentionGraph) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["u", "v"])?;
    for (i, j) in g.edges() {
        out.write_record([g.id(i), g.id(j)])?;
    }
    out.flush()?;
    Ok(())
}

/// Node label CSV with header `user_id,category`.
pub fn write_node_labels<W: Write>(w: W, g: &MentionGraph) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["user_id", "category"])?;
    for i in 0..g.node_count() {
        out.write_record([g.id(i), &g.label(i).to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Coreness CSV with header `user_id,category,coreness`.
pub fn write_coreness_csv<W: Write>(w: W, g: &MentionGraph, coreness: &CorenessMap) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["user_id", "category", "coreness"])?;
    for i in 0..g.node_count() {
        out.write_record([
            g.id(i),
            &g.label(i).to_string(),
            &coreness.get(i).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Two-column CSV with header `k,fraction`.
pub fn write_ccdf_csv<W: Write>(w: W, series: &[(u32, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "fraction"])?;
    for (k, f) in series {
        out.write_record([k.to_string(), f.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

fn csv_reader<R: std::io::Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r)
}

/// Read an edge list written by [`write_edge_list`]; the `u,v` header is
/// optional.
pub fn read_edge_list<R: BufRead>(r: R) -> Result<Vec<(String, String)>> {
    let mut edges = Vec::new();
    for (n, rec) in csv_reader(r).into_records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "edge list record {} needs 2 fields",
                n + 1
            )));
        }
        if n == 0 && &rec[0] == "u" && &rec[1] == "v" {
            continue;
        }
        edges.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(edges)
}

/// Read a node label CSV written by [`write_node_labels`]; header optional.
pub fn read_node_labels<R: BufRead>(r: R) -> Result<Vec<(String, Category)>> {
    let mut labels = Vec::new();
    for (n, rec) in csv_reader(r).into_records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "label record {} needs 2 fields",
                n + 1
            )));
        }
        if n == 0 && &rec[0] == "user_id" {
            continue;
        }
        labels.push((rec[0].to_string(), rec[1].parse()?));
    }
    Ok(labels)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn graph(labels: &[(&str, Category)], edges: &[(&str, &str)]) -> MentionGraph {
        MentionGraph::from_edges(labels.iter().map(|&(a, c)| (a, c)), edges.iter().copied())
    }

    /// Coreness by repeated threshold peeling, independent of the bucket code.
    pub(crate) fn brute_force_coreness(g: &MentionGraph) -> Vec<u32> {
        let n = g.node_count();
        let mut core = vec![0u32; n];
        for k in 1..=n {
            let mut alive = vec![true; n];
            loop {
                let mut changed = false;
                for v in 0..n {
                    if alive[v] && g.neighbors(v).iter().filter(|&&u| alive[u]).count() < k {
                        alive[v] = false;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            if !alive.iter().any(|&a| a) {
                break;
            }
            for v in 0..n {
                if alive[v] {
                    core[v] = k as u32;
                }
            }
        }
        core
    }

    pub(crate) fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> MentionGraph {
        let ids: Vec<String> = (0..n).map(|i| format!("n{i:04}")).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((ids[i].clone(), ids[j].clone()));
                }
            }
        }
        MentionGraph::from_edges(ids.iter().map(|id| (id.clone(), Category::Regular)), edges)
    }

    fn clique(prefix: &str, n: usize) -> Vec<(String, String)> {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((format!("{prefix}{i}"), format!("{prefix}{j}")));
            }
        }
        e
    }

    fn tp(user: &str, mentions: &[&str]) -> TokenizedPost {
        TokenizedPost {
            user_id: user.into(),
            timestamp: 5,
            tokens: vec![],
            mentions: mentions.iter().map(|s| s.to_string()).collect(),
            hashtags: vec![],
            is_null_text: true,
        }
    }

    #[test]
    fn mention_edges_are_undirected_and_simple() {
        let labels: HashMap<String, Category> = [
            ("a", Category::Regular),
            ("b", Category::Regular),
            ("c", Category::Ett),
        ]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
        let posts = vec![
            tp("a", &["b"]),
            tp("b", &["a"]),
            tp("a", &["a"]),
            tp("a", &["b"]),
            tp("b", &["zed"]),
        ];
        let g = build_mention_graph(&posts, &labels, None);
        assert_eq!(g.ids(), ["a", "b", "c", "zed"]);
        assert_eq!(g.edge_count(), 2);
        assert!(g.has_edge(0, 1) && !g.has_edge(0, 0));
        assert_eq!(g.degree(2), 0);
        assert_eq!(g.label(3), Category::Regular);

        let g = build_mention_graph(&posts, &labels, Some((10, 20)));
        assert_eq!(g.edge_count(), 0);
    }

    fn sample_graph() -> MentionGraph {
        use Category::*;
        graph(
            &[
                ("a1", Anomalous),
                ("a2", Anomalous),
                ("e", Ett),
                ("r", Regular),
            ],
            &[("a1", "a2"), ("a1", "e"), ("e", "r")],
        )
    }

    fn edge_ids(s: &PatternSubgraph) -> Vec<(&str, &str)> {
        s.graph
            .edges()
            .map(|(i, j)| (s.graph.id(i), s.graph.id(j)))
            .collect()
    }

    #[test]
    fn patterns_on_sample_graph() {
        let g = sample_graph();
        let t1 = extract_pattern(&g, Pattern::TypeI);
        assert_eq!(t1.graph.ids(), ["a1", "a2"]);
        assert_eq!(edge_ids(&t1), vec![("a1", "a2")]);

        let t2 = extract_pattern(&g, Pattern::TypeII);
        assert_eq!(t2.graph.ids(), ["a1", "a2", "e"]);
        assert_eq!(edge_ids(&t2), vec![("a1", "a2"), ("a1", "e")]);

        let t3 = extract_pattern(&g, Pattern::TypeIII);
        assert_eq!(t3.graph.ids(), ["a1", "a2", "e"]);
        assert_eq!(edge_ids(&t3), vec![("a1", "a2"), ("a1", "e")]);
        assert_eq!(t3.parent, vec![0, 1, 2]);
    }

    #[test]
    fn type_two_keeps_ett_edges_and_drops_regular_neighbors() {
        use Category::*;
        let g = graph(
            &[("a", Anomalous), ("e1", Ett), ("e2", Ett), ("r", Regular)],
            &[
                ("a", "e1"),
                ("a", "e2"),
                ("e1", "e2"),
                ("a", "r"),
                ("r", "e1"),
            ],
        );
        let t2 = extract_pattern(&g, Pattern::TypeII);
        assert_eq!(t2.graph.ids(), ["a", "e1", "e2"]);
        assert_eq!(t2.graph.edge_count(), 3);
        let t3 = extract_pattern(&g, Pattern::TypeIII);
        assert_eq!(t3.graph.node_count(), 4);
        assert_eq!(t3.graph.edge_count(), 5);
    }

    #[test]
    fn no_anomalous_nodes_gives_empty_patterns() {
        let g = graph(&[("x", Category::Ett)], &[("x", "y")]);
        for p in Pattern::ALL {
            assert_eq!(extract_pattern(&g, p).graph.node_count(), 0);
        }
    }

    #[test]
    fn satisfies_pattern_checks() {
        let g = sample_graph();
        assert!(satisfies_pattern(
            &g,
            Pattern::TypeI,
            &["a1", "a2"],
            &[("a1", "a2")]
        ));
        assert!(!satisfies_pattern(&g, Pattern::TypeI, &["a1", "e"], &[]));
        assert!(satisfies_pattern(&g, Pattern::TypeII, &["a2", "e"], &[]));
        assert!(!satisfies_pattern(
            &g,
            Pattern::TypeII,
            &["a2", "e"],
            &[("a2", "e")]
        ));
        assert!(!satisfies_pattern(&g, Pattern::TypeIII, &["r"], &[]));
        assert!(!satisfies_pattern(
            &g,
            Pattern::TypeII,
            &["a1"],
            &[("a1", "e")]
        ));
    }

    #[test]
    fn coreness_small_graphs() {
        let k3 = MentionGraph::from_edges(Vec::<(String, Category)>::new(), clique("k", 3));
        assert_eq!(core_decomposition(&k3).values, vec![2, 2, 2]);

        let star = graph(
            &[],
            &[
                ("c", "l1"),
                ("c", "l2"),
                ("c", "l3"),
                ("c", "l4"),
                ("c", "l5"),
            ],
        );
        let cm = core_decomposition(&star);
        assert!(cm.values.iter().all(|&c| c == 1));
        assert_eq!(cm.degeneracy, 1);

        let empty = MentionGraph::default();
        let cm = core_decomposition(&empty);
        assert!(cm.values.is_empty() && cm.degeneracy == 0);
    }

    #[test]
    fn coreness_matches_brute_force_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..30 {
            let n = 20 + trial * 6;
            let p = [0.01, 0.05, 0.2][trial % 3];
            let g = random_graph(n, p, &mut rng);
            assert_eq!(core_decomposition(&g).values, brute_force_coreness(&g));
        }
    }

    #[test]
    fn max_kcore_cases() {
        let mut edges = clique("k", 4);
        edges.push(("k0".into(), "pendant".into()));
        let g = MentionGraph::from_edges(Vec::<(String, Category)>::new(), edges);
        let core = max_kcore(&g, 3);
        assert_eq!(core.graph.ids(), ["k0", "k1", "k2", "k3"]);
        assert_eq!(max_kcore(&g, 0).graph, g);

        let mut edges = clique("a", 4);
        edges.extend(clique("b", 4));
        let g = MentionGraph::from_edges(Vec::<(String, Category)>::new(), edges);
        let core = max_kcore(&g, 3);
        assert_eq!(core.graph.node_count(), 8);
        assert_eq!(core.graph.edge_count(), 12);
        assert_eq!(max_kcore(&g, 4).graph.node_count(), 0);
    }

    #[test]
    fn ccdf_series() {
        let all2 = CorenessMap {
            values: vec![2, 2, 2],
            degeneracy: 2,
        };
        assert_eq!(
            coreness_ccdf(&all2, &[0, 1, 2]),
            vec![(0, 1.0), (1, 1.0), (2, 1.0)]
        );
        let mixed = CorenessMap {
            values: vec![0, 0, 2, 2],
            degeneracy: 2,
        };
        assert_eq!(
            coreness_ccdf(&mixed, &[0, 1, 2, 3]),
            vec![(0, 1.0), (1, 0.5), (2, 0.5)]
        );
        let one = CorenessMap {
            values: vec![1, 1],
            degeneracy: 1,
        };
        assert_eq!(coreness_ccdf(&one, &[0]), vec![(0, 1.0), (1, 1.0)]);
        assert!(coreness_ccdf(&one, &[]).is_empty());
    }

    #[test]
    fn export_and_read_back() {
        let g = sample_graph();
        let mut edges = Vec::new();
        write_edge_list(&mut edges, &g).unwrap();
        assert_eq!(
            String::from_utf8(edges.clone()).unwrap(),
            "u,v\na1,a2\na1,e\ne,r\n"
        );
        let mut labels = Vec::new();
        write_node_labels(&mut labels, &g).unwrap();
        let back = MentionGraph::from_edges(
            read_node_labels(labels.as_slice()).unwrap(),
            read_edge_list(edges.as_slice()).unwrap(),
        );
        assert_eq!(back, g);
        assert_eq!(
            read_edge_list("x, y\n# comment\ny,z\n".as_bytes())
                .unwrap()
                .len(),
            2
        );
        assert!(read_node_labels("a,boss\n".as_bytes()).is_err());

        let mut out = Vec::new();
        write_coreness_csv(&mut out, &g, &core_decomposition(&g)).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "user_id,category,coreness\na1,anomalous,1\na2,anomalous,1\ne,ett,1\nr,regular,1\n"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn coreness_monotone_under_edge_addition_and_node_deletion(seed in 0u64..10_000, n in 2usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_graph(n, 0.15, &mut rng);
            let base = core_decomposition(&g);

            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            let mut edges: Vec<(String, String)> =
                g.edges().map(|(i, j)| (g.id(i).to_string(), g.id(j).to_string())).collect();
            edges.push((g.id(a).to_string(), g.id(b).to_string()));
            let plus = MentionGraph::from_edges(g.ids().iter().map(|i| (i.clone(), Category::Regular)), edges);
            let after = core_decomposition(&plus);
            for i in 0..n {
                prop_assert!(after.get(i) >= base.get(i));
            }

            let drop = rng.random_range(0..n);
            let rest: Vec<usize> = (0..n).filter(|&i| i != drop).collect();
            let sub = g.induced(&rest);
            let cm = core_decomposition(&sub.graph);
            for (local, &orig) in sub.parent.iter().enumerate() {
                prop_assert!(cm.get(local) <= base.get(orig));
            }

            let k = rng.random_range(0..5);
            let core = max_kcore(&g, k);
            for i in 0..core.graph.node_count() {
                prop_assert!(core.graph.degree(i) >= k);
            }
            // maximal: exactly the nodes with coreness >= k
            let expected: Vec<usize> = (0..n).filter(|&i| base.get(i) as usize >= k).collect();
            prop_assert_eq!(core.parent, expected);
        }
    }
}
