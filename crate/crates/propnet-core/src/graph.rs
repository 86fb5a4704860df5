//! Hashtag co-occurrence graphs and directed weighted retweet graphs.
//!
//! Node identity is the stable author id (or tag); node indices are the
//! rank of the id in lexicographic order, and every adjacency list is kept
//! sorted, so iteration order is deterministic and runs reproduce byte-for-
//! byte.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::ingest::Corpus;

/// Directed weighted graph: edge `(u, v)` with weight `w` means `u`
/// retweeted `v` exactly `w` times. Nodes carry an optional polarization
/// attribute in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RetweetGraph {
    ids: Vec<String>,
    out: Vec<Vec<(usize, f64)>>,
    inn: Vec<Vec<(usize, f64)>>,
    polarization: Vec<Option<f64>>,
}

impl RetweetGraph {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.out.iter().flatten().map(|&(_, w)| w).sum()
    }

    /// Node ids in index order (lexicographically sorted).
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.binary_search_by(|probe| probe.as_str().cmp(id)).ok()
    }

    pub fn out_edges(&self, node: usize) -> &[(usize, f64)] {
        &self.out[node]
    }

    pub fn in_edges(&self, node: usize) -> &[(usize, f64)] {
        &self.inn[node]
    }

    pub fn polarization(&self, node: usize) -> Option<f64> {
        self.polarization[node]
    }

    pub fn node_set(&self) -> BTreeSet<String> {
        self.ids.iter().cloned().collect()
    }

    /// Attach polarization attributes by user id; ids without a score stay
    /// unset. Values must lie in `[-1, 1]`.
    pub fn set_polarization(&mut self, scores: &BTreeMap<String, f64>) -> Result<()> {
        for (id, &p) in scores {
            if !(-1.0..=1.0).contains(&p) {
                return Err(Error::Data(format!("polarization {p} for {id} outside [-1, 1]")));
            }
            if let Some(i) = self.index_of(id) {
                self.polarization[i] = Some(p);
            }
        }
        Ok(())
    }

    /// Build from edge triples. Used by the corpus builder and the CSV
    /// importer; node set is exactly the endpoint set plus `extra_nodes`.
    fn from_weighted_edges(
        edges: &BTreeMap<(String, String), f64>,
        extra_nodes: &BTreeSet<String>,
    ) -> Self {
        let mut id_set: BTreeSet<String> = extra_nodes.clone();
        for (src, dst) in edges.keys() {
            id_set.insert(src.clone());
            id_set.insert(dst.clone());
        }
        let ids: Vec<String> = id_set.into_iter().collect();
        let index: BTreeMap<&str, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let n = ids.len();
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        for ((src, dst), &w) in edges {
            let (u, v) = (index[src.as_str()], index[dst.as_str()]);
            out[u].push((v, w));
            inn[v].push((u, w));
        }
        for list in out.iter_mut().chain(inn.iter_mut()) {
            list.sort_by_key(|&(j, _)| j);
        }
        RetweetGraph {
            ids,
            out,
            inn,
            polarization: vec![None; n],
        }
    }

    /// Undirected view with `w'(u,v) = w(u,v) + w(v,u)`, both directions
    /// listed. Input to modularity clustering.
    pub fn symmetrized_adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.node_count();
        let mut acc: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (u, edges) in self.out.iter().enumerate() {
            for &(v, w) in edges {
                *acc[u].entry(v).or_insert(0.0) += w;
                *acc[v].entry(u).or_insert(0.0) += w;
            }
        }
        acc.into_iter()
            .map(|m| m.into_iter().collect())
            .collect()
    }

    /// Induced subgraph on `keep` (node indices), preserving weights and
    /// attributes.
    pub fn induced_subgraph(&self, keep: &BTreeSet<usize>) -> RetweetGraph {
        let ids: Vec<String> = keep.iter().map(|&i| self.ids[i].clone()).collect();
        let remap: BTreeMap<usize, usize> =
            keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let n = ids.len();
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        let mut polarization = vec![None; n];
        for (&old, &new) in &remap {
            polarization[new] = self.polarization[old];
            for &(v, w) in &self.out[old] {
                if let Some(&nv) = remap.get(&v) {
                    out[new].push((nv, w));
                    inn[nv].push((new, w));
                }
            }
        }
        for list in out.iter_mut().chain(inn.iter_mut()) {
            list.sort_by_key(|&(j, _)| j);
        }
        RetweetGraph {
            ids,
            out,
            inn,
            polarization,
        }
    }

    /// Weakly connected components (direction ignored), as sorted index
    /// sets.
    pub fn weakly_connected_components(&self) -> Vec<BTreeSet<usize>> {
        let n = self.node_count();
        let mut component = vec![usize::MAX; n];
        let mut components = Vec::new();
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let label = components.len();
            let mut members = BTreeSet::new();
            let mut stack = vec![start];
            component[start] = label;
            while let Some(u) = stack.pop() {
                members.insert(u);
                for &(v, _) in self.out[u].iter().chain(self.inn[u].iter()) {
                    if component[v] == usize::MAX {
                        component[v] = label;
                        stack.push(v);
                    }
                }
            }
            components.push(members);
        }
        components
    }

    /// Induced subgraph on the largest weakly connected component. Ties go
    /// to the component containing the smallest node id. Empty graph maps
    /// to an empty subgraph.
    pub fn giant_wcc(&self) -> RetweetGraph {
        let components = self.weakly_connected_components();
        let best = components
            .iter()
            .max_by(|a, b| {
                a.len()
                    .cmp(&b.len())
                    // smaller minimum index wins ties, hence Reverse order
                    .then_with(|| b.iter().next().cmp(&a.iter().next()))
            });
        match best {
            Some(keep) => self.induced_subgraph(keep),
            None => self.induced_subgraph(&BTreeSet::new()),
        }
    }
}

/// One node per user appearing as retweeter or retweetee; edge weights
/// count retweet records. Self-retweets contribute the node but no edge.
pub fn build_retweet_graph(corpus: &Corpus) -> RetweetGraph {
    let mut edges: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut nodes: BTreeSet<String> = BTreeSet::new();
    for record in &corpus.records {
        if let Some(retweetee) = &record.retweeted_author_id {
            nodes.insert(record.author_id.clone());
            nodes.insert(retweetee.clone());
            if *retweetee != record.author_id {
                *edges
                    .entry((record.author_id.clone(), retweetee.clone()))
                    .or_insert(0.0) += 1.0;
            }
        }
    }
    RetweetGraph::from_weighted_edges(&edges, &nodes)
}

/// Undirected hashtag graph; edge weight counts the tweets in which both
/// tags occur.
#[derive(Debug, Clone, PartialEq)]
pub struct HashtagGraph {
    tags: Vec<String>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl HashtagGraph {
    pub fn node_count(&self) -> usize {
        self.tags.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn tag(&self, node: usize) -> &str {
        &self.tags[node]
    }

    pub fn index_of(&self, tag: &str) -> Option<usize> {
        self.tags.binary_search_by(|probe| probe.as_str().cmp(tag)).ok()
    }

    /// Symmetric adjacency, both directions listed, neighbors sorted.
    pub fn adjacency(&self) -> &[Vec<(usize, f64)>] {
        &self.adj
    }

    pub fn weighted_degree(&self, node: usize) -> f64 {
        self.adj[node].iter().map(|&(_, w)| w).sum()
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.adj[a]
            .iter()
            .find(|&&(j, _)| j == b)
            .map_or(0.0, |&(_, w)| w)
    }

    fn from_pairs(tags: BTreeSet<String>, weights: &BTreeMap<(String, String), f64>) -> Self {
        let tags: Vec<String> = tags.into_iter().collect();
        let index: BTreeMap<&str, usize> = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let mut adj = vec![Vec::new(); tags.len()];
        for ((a, b), &w) in weights {
            let (i, j) = (index[a.as_str()], index[b.as_str()]);
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(j, _)| j);
        }
        HashtagGraph { tags, adj }
    }

    /// The `n` tags with greatest weighted degree, ties broken
    /// lexicographically. `n` past the node count returns all tags.
    pub fn top_by_weighted_degree(&self, n: usize) -> Vec<String> {
        let mut ranked: Vec<(f64, &str)> = (0..self.node_count())
            .map(|i| (self.weighted_degree(i), self.tag(i)))
            .collect();
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(b.1)));
        ranked
            .into_iter()
            .take(n)
            .map(|(_, t)| t.to_owned())
            .collect()
    }

    /// Induced subgraph on tags not in the stoplist.
    pub fn prune_nodes(&self, stoplist: &BTreeSet<String>) -> HashtagGraph {
        let keep: BTreeSet<String> = self
            .tags
            .iter()
            .filter(|t| !stoplist.contains(*t))
            .cloned()
            .collect();
        self.induced(&keep)
    }

    /// Induced subgraph on the given tag set (unknown tags ignored).
    pub fn induced(&self, keep: &BTreeSet<String>) -> HashtagGraph {
        let mut weights = BTreeMap::new();
        let mut tags = BTreeSet::new();
        for tag in keep {
            if self.index_of(tag).is_some() {
                tags.insert(tag.clone());
            }
        }
        for tag in &tags {
            let i = self.index_of(tag).unwrap();
            for &(j, w) in &self.adj[i] {
                let other = self.tag(j);
                if tag.as_str() < other && tags.contains(other) {
                    weights.insert((tag.clone(), other.to_owned()), w);
                }
            }
        }
        HashtagGraph::from_pairs(tags, &weights)
    }
}

/// Every unordered pair of distinct tags within a tweet increments one edge
/// weight; duplicate tags in a tweet count once. Tags that never co-occur
/// still get nodes.
pub fn build_hashtag_graph(corpus: &Corpus) -> HashtagGraph {
    let mut tags: BTreeSet<String> = BTreeSet::new();
    let mut weights: BTreeMap<(String, String), f64> = BTreeMap::new();
    for record in &corpus.records {
        let distinct: BTreeSet<&str> = record.hashtags.iter().map(String::as_str).collect();
        for tag in &distinct {
            tags.insert((*tag).to_owned());
        }
        let list: Vec<&str> = distinct.into_iter().collect();
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                *weights
                    .entry((list[i].to_owned(), list[j].to_owned()))
                    .or_insert(0.0) += 1.0;
            }
        }
    }
    HashtagGraph::from_pairs(tags, &weights)
}

// ---------------------------------------------------------------------------
// CSV export / import
// ---------------------------------------------------------------------------

/// Write `src,dst,weight` rows in node order (re-importable).
pub fn write_edge_list(graph: &RetweetGraph, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::Data(format!("edge list write: {e}"));
    w.write_record(["src", "dst", "weight"]).map_err(io_err)?;
    for u in 0..graph.node_count() {
        for &(v, weight) in graph.out_edges(u) {
            w.write_record([graph.id(u), graph.id(v), &format!("{weight}")])
                .map_err(io_err)?;
        }
    }
    w.flush().map_err(|e| Error::Data(format!("edge list write: {e}")))?;
    Ok(())
}

/// Write `id,p_u` rows; unset polarization is an empty field.
pub fn write_node_attributes(graph: &RetweetGraph, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::Data(format!("node attribute write: {e}"));
    w.write_record(["id", "p_u"]).map_err(io_err)?;
    for i in 0..graph.node_count() {
        let p = graph
            .polarization(i)
            .map(|p| format!("{p}"))
            .unwrap_or_default();
        w.write_record([graph.id(i), &p]).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Data(format!("node attribute write: {e}")))?;
    Ok(())
}

/// Read an edge-list CSV (as produced by [`write_edge_list`]) and an
/// optional node-attribute CSV back into a graph.
pub fn read_edge_list(edges: impl Read, nodes: Option<impl Read>) -> Result<RetweetGraph> {
    let mut reader = csv::Reader::from_reader(edges);
    let mut weights: BTreeMap<(String, String), f64> = BTreeMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("edge list row {}: {e}", row + 2)))?;
        if record.len() != 3 {
            return Err(Error::Data(format!(
                "edge list row {}: expected 3 fields, got {}",
                row + 2,
                record.len()
            )));
        }
        let (src, dst) = (record[0].to_owned(), record[1].to_owned());
        let weight: f64 = record[2]
            .parse()
            .map_err(|e| Error::Data(format!("edge list row {}: bad weight: {e}", row + 2)))?;
        if src.is_empty() || dst.is_empty() {
            return Err(Error::Data(format!("edge list row {}: empty node id", row + 2)));
        }
        if src == dst {
            return Err(Error::Data(format!("edge list row {}: self-loop {src}", row + 2)));
        }
        if !(weight.is_finite() && weight >= 1.0) {
            return Err(Error::Data(format!(
                "edge list row {}: weight must be >= 1, got {weight}",
                row + 2
            )));
        }
        if weights.insert((src.clone(), dst), weight).is_some() {
            return Err(Error::Data(format!("edge list row {}: duplicate edge", row + 2)));
        }
    }

    let mut extra = BTreeSet::new();
    let mut attrs: BTreeMap<String, f64> = BTreeMap::new();
    if let Some(nodes) = nodes {
        let mut reader = csv::Reader::from_reader(nodes);
        for (row, record) in reader.records().enumerate() {
            let record =
                record.map_err(|e| Error::Data(format!("node file row {}: {e}", row + 2)))?;
            let id = record[0].to_owned();
            extra.insert(id.clone());
            if record.len() > 1 && !record[1].is_empty() {
                let p: f64 = record[1]
                    .parse()
                    .map_err(|e| Error::Data(format!("node file row {}: bad p_u: {e}", row + 2)))?;
                attrs.insert(id, p);
            }
        }
    }

    let mut graph = RetweetGraph::from_weighted_edges(&weights, &extra);
    graph.set_polarization(&attrs)?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TweetRecord;
    use chrono::{TimeZone, Utc};

    fn rt(id: &str, author: &str, retweetee: Option<&str>) -> TweetRecord {
        TweetRecord {
            tweet_id: id.to_owned(),
            author_id: author.to_owned(),
            text: String::new(),
            created_at: Utc.timestamp_opt(0, 0).unwrap(),
            hashtags: vec![],
            retweeted_author_id: retweetee.map(str::to_owned),
        }
    }

    fn tagged(id: &str, tags: &[&str]) -> TweetRecord {
        TweetRecord {
            tweet_id: id.to_owned(),
            author_id: "a".to_owned(),
            text: String::new(),
            created_at: Utc.timestamp_opt(0, 0).unwrap(),
            hashtags: tags.iter().map(|t| t.to_string()).collect(),
            retweeted_author_id: None,
        }
    }

    fn corpus(records: Vec<TweetRecord>) -> Corpus {
        let t = Utc.timestamp_opt(0, 0).unwrap();
        Corpus {
            records,
            date_range: (t, t),
        }
    }

    fn edge_weight(g: &RetweetGraph, src: &str, dst: &str) -> Option<f64> {
        let u = g.index_of(src)?;
        let v = g.index_of(dst)?;
        g.out_edges(u).iter().find(|&&(j, _)| j == v).map(|&(_, w)| w)
    }

    #[test]
    fn one_tweet_with_three_tags_makes_a_unit_triangle() {
        let g = build_hashtag_graph(&corpus(vec![tagged("1", &["a", "b", "c"])]));
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        for (a, b) in [("a", "b"), ("a", "c"), ("b", "c")] {
            let (i, j) = (g.index_of(a).unwrap(), g.index_of(b).unwrap());
            assert_eq!(g.weight(i, j), 1.0);
        }
    }

    #[test]
    fn repeated_cooccurrence_accumulates_weight() {
        let g = build_hashtag_graph(&corpus(vec![
            tagged("1", &["a", "b"]),
            tagged("2", &["a", "b"]),
        ]));
        let (i, j) = (g.index_of("a").unwrap(), g.index_of("b").unwrap());
        assert_eq!(g.weight(i, j), 2.0);
    }

    #[test]
    fn duplicate_tags_within_a_tweet_count_once() {
        let g = build_hashtag_graph(&corpus(vec![tagged("1", &["a", "a", "b"])]));
        let (i, j) = (g.index_of("a").unwrap(), g.index_of("b").unwrap());
        assert_eq!(g.weight(i, j), 1.0);
    }

    #[test]
    fn hashtag_adjacency_matches_pair_counting_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pool = ["t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"];
        let mut records = Vec::new();
        for i in 0..100 {
            let mut tags = Vec::new();
            for t in pool {
                if rng.gen_bool(0.35) {
                    tags.push(t);
                }
            }
            records.push(tagged(&i.to_string(), &tags));
        }
        let g = build_hashtag_graph(&corpus(records.clone()));
        // Nested-loop oracle over distinct tag pairs per tweet.
        let mut expected: BTreeMap<(String, String), f64> = BTreeMap::new();
        for r in &records {
            let distinct: BTreeSet<&String> = r.hashtags.iter().collect();
            let list: Vec<&&String> = distinct.iter().collect();
            for i in 0..list.len() {
                for j in i + 1..list.len() {
                    *expected
                        .entry(((**list[i]).clone(), (**list[j]).clone()))
                        .or_insert(0.0) += 1.0;
                }
            }
        }
        for ((a, b), w) in expected {
            let (i, j) = (g.index_of(&a).unwrap(), g.index_of(&b).unwrap());
            assert_eq!(g.weight(i, j), w, "edge ({a},{b})");
        }
    }

    #[test]
    fn weighted_degree_matches_pairwise_brute_force() {
        let records = vec![
            tagged("1", &["a", "b", "c"]),
            tagged("2", &["a", "b"]),
            tagged("3", &["a"]),
        ];
        let g = build_hashtag_graph(&corpus(records.clone()));
        // degree(t) = over tweets containing t, count of other distinct tags.
        for tag in ["a", "b", "c"] {
            let expected: usize = records
                .iter()
                .map(|r| {
                    let d: BTreeSet<&str> = r.hashtags.iter().map(String::as_str).collect();
                    if d.contains(tag) {
                        d.len() - 1
                    } else {
                        0
                    }
                })
                .sum();
            let i = g.index_of(tag).unwrap();
            assert_eq!(g.weighted_degree(i), expected as f64, "tag {tag}");
        }
    }

    #[test]
    fn star_center_ranks_first_and_overlong_n_returns_all() {
        let records = (0..5)
            .map(|i| tagged(&i.to_string(), &["hub", &format!("leaf{i}")]))
            .collect();
        let g = build_hashtag_graph(&corpus(records));
        let top = g.top_by_weighted_degree(3);
        assert_eq!(top[0], "hub");
        assert_eq!(g.top_by_weighted_degree(100).len(), 6);
    }

    #[test]
    fn tied_degrees_break_lexicographically() {
        // zz and aa both have degree 3 to distinct leaves.
        let records = vec![
            tagged("1", &["zz", "l1"]),
            tagged("2", &["zz", "l2"]),
            tagged("3", &["zz", "l3"]),
            tagged("4", &["aa", "l4"]),
            tagged("5", &["aa", "l5"]),
            tagged("6", &["aa", "l6"]),
        ];
        let g = build_hashtag_graph(&corpus(records));
        let top = g.top_by_weighted_degree(2);
        assert_eq!(top, vec!["aa", "zz"]);
    }

    #[test]
    fn pruning_disjoint_stoplist_is_identity_and_full_stoplist_empties() {
        let g = build_hashtag_graph(&corpus(vec![tagged("1", &["a", "b"])]));
        let none: BTreeSet<String> = ["x".to_string()].into();
        assert_eq!(g.prune_nodes(&none), g);
        let all: BTreeSet<String> = ["a".to_string(), "b".to_string()].into();
        let pruned = g.prune_nodes(&all);
        assert_eq!(pruned.node_count(), 0);
        assert_eq!(pruned.edge_count(), 0);
    }

    #[test]
    fn prune_keeps_interior_weights() {
        let g = build_hashtag_graph(&corpus(vec![
            tagged("1", &["a", "b", "stop"]),
            tagged("2", &["a", "b"]),
        ]));
        let pruned = g.prune_nodes(&["stop".to_string()].into());
        assert_eq!(pruned.node_count(), 2);
        let (i, j) = (pruned.index_of("a").unwrap(), pruned.index_of("b").unwrap());
        assert_eq!(pruned.weight(i, j), 2.0);
    }

    #[test]
    fn retweet_edges_count_records() {
        let g = build_retweet_graph(&corpus(vec![
            rt("1", "u", Some("v")),
            rt("2", "u", Some("v")),
            rt("3", "u", Some("w")),
        ]));
        assert_eq!(edge_weight(&g, "u", "v"), Some(2.0));
        assert_eq!(edge_weight(&g, "u", "w"), Some(1.0));
        assert_eq!(g.node_count(), 3);
    }

    #[test]
    fn self_retweet_keeps_node_but_no_edge() {
        let g = build_retweet_graph(&corpus(vec![rt("1", "u", Some("u"))]));
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn plain_tweets_produce_no_nodes() {
        let g = build_retweet_graph(&corpus(vec![rt("1", "u", None)]));
        assert_eq!(g.node_count(), 0);
    }

    #[test]
    fn weights_match_counting_oracle_on_synthetic_corpus() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let users: Vec<String> = (0..20).map(|i| format!("u{i:02}")).collect();
        let mut records = Vec::new();
        for i in 0..1000 {
            let a = &users[rng.gen_range(0..users.len())];
            let b = &users[rng.gen_range(0..users.len())];
            records.push(rt(&i.to_string(), a, Some(b)));
        }
        let g = build_retweet_graph(&corpus(records.clone()));
        let mut expected: BTreeMap<(String, String), f64> = BTreeMap::new();
        let mut non_self = 0;
        for r in &records {
            let dst = r.retweeted_author_id.clone().unwrap();
            if dst != r.author_id {
                *expected.entry((r.author_id.clone(), dst)).or_insert(0.0) += 1.0;
                non_self += 1;
            }
        }
        for ((src, dst), w) in &expected {
            assert_eq!(edge_weight(&g, src, dst), Some(*w));
        }
        assert_eq!(g.edge_count(), expected.len());
        // Total weight equals the number of non-self retweet records.
        assert_eq!(g.total_weight(), f64::from(non_self));
    }

    #[test]
    fn graph_union_is_weightwise_sum_of_parts() {
        let part_a = vec![rt("1", "u", Some("v")), rt("2", "u", Some("v"))];
        let part_b = vec![rt("3", "u", Some("v")), rt("4", "w", Some("v"))];
        let mut combined = part_a.clone();
        combined.extend(part_b.clone());
        let whole = build_retweet_graph(&corpus(combined));
        let a = build_retweet_graph(&corpus(part_a));
        let b = build_retweet_graph(&corpus(part_b));
        let weight = |g: &RetweetGraph, s, d| edge_weight(g, s, d).unwrap_or(0.0);
        for (s, d) in [("u", "v"), ("w", "v")] {
            assert_eq!(weight(&whole, s, d), weight(&a, s, d) + weight(&b, s, d));
        }
    }

    #[test]
    fn giant_wcc_picks_largest_component() {
        let g = build_retweet_graph(&corpus(vec![
            rt("1", "a", Some("b")),
            rt("2", "c", Some("b")),
            rt("3", "x", Some("y")),
        ]));
        let wcc = g.giant_wcc();
        assert_eq!(wcc.node_set(), ["a", "b", "c"].map(String::from).into());
    }

    #[test]
    fn giant_wcc_of_connected_graph_is_itself_and_idempotent() {
        let g = build_retweet_graph(&corpus(vec![
            rt("1", "a", Some("b")),
            rt("2", "b", Some("c")),
        ]));
        let wcc = g.giant_wcc();
        assert_eq!(wcc, g);
        assert_eq!(wcc.giant_wcc(), wcc);
    }

    #[test]
    fn wcc_components_match_bfs_oracle_on_random_graph() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let users: Vec<String> = (0..30).map(|i| format!("u{i:02}")).collect();
        let mut records = Vec::new();
        let mut pairs = Vec::new();
        for i in 0..25 {
            let a = rng.gen_range(0..users.len());
            let b = rng.gen_range(0..users.len());
            if a != b {
                records.push(rt(&i.to_string(), &users[a], Some(&users[b])));
                pairs.push((users[a].clone(), users[b].clone()));
            }
        }
        let g = build_retweet_graph(&corpus(records));
        // Undirected BFS oracle over the id universe actually present.
        let mut present: BTreeSet<String> = BTreeSet::new();
        for (a, b) in &pairs {
            present.insert(a.clone());
            present.insert(b.clone());
        }
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut best: BTreeSet<String> = BTreeSet::new();
        for start in &present {
            if seen.contains(start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![start.clone()];
            while let Some(u) = stack.pop() {
                if !comp.insert(u.clone()) {
                    continue;
                }
                for (a, b) in &pairs {
                    if *a == u && !comp.contains(b) {
                        stack.push(b.clone());
                    }
                    if *b == u && !comp.contains(a) {
                        stack.push(a.clone());
                    }
                }
            }
            seen.extend(comp.iter().cloned());
            if comp.len() > best.len()
                || (comp.len() == best.len() && comp.iter().next() < best.iter().next())
            {
                best = comp;
            }
        }
        assert_eq!(g.giant_wcc().node_set(), best);
    }

    #[test]
    fn empty_graph_giant_wcc_is_empty() {
        let g = build_retweet_graph(&corpus(vec![]));
        assert_eq!(g.giant_wcc().node_count(), 0);
    }

    #[test]
    fn csv_round_trip_preserves_graph() {
        let mut g = build_retweet_graph(&corpus(vec![
            rt("1", "u", Some("v")),
            rt("2", "u", Some("v")),
            rt("3", "w", Some("u")),
        ]));
        g.set_polarization(&[("u".to_string(), 0.5), ("v".to_string(), -1.0)].into())
            .unwrap();
        let mut edges = Vec::new();
        let mut nodes = Vec::new();
        write_edge_list(&g, &mut edges).unwrap();
        write_node_attributes(&g, &mut nodes).unwrap();
        let back = read_edge_list(&edges[..], Some(&nodes[..])).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn import_rejects_self_loops_and_bad_weights() {
        let bad_loop = b"src,dst,weight\na,a,1\n";
        assert!(read_edge_list(&bad_loop[..], None::<&[u8]>).is_err());
        let bad_weight = b"src,dst,weight\na,b,0\n";
        assert!(read_edge_list(&bad_weight[..], None::<&[u8]>).is_err());
    }
}
