//! Interaction networks built from one window of tweets and the structural
//! metrics computed on them.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ingest::TweetRecord;
use crate::stats::{summarize8, DistributionSummary};

/// Kind of interaction network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Retweet,
    Mention,
    HashtagCooccurrence,
}

impl NetworkKind {
    pub fn name(self) -> &'static str {
        match self {
            NetworkKind::Retweet => "retweet",
            NetworkKind::Mention => "mention",
            NetworkKind::HashtagCooccurrence => "cooccurrence",
        }
    }

    pub fn directed(self) -> bool {
        !matches!(self, NetworkKind::HashtagCooccurrence)
    }
}

/// A weighted interaction graph. Directed for retweet and mention networks,
/// undirected for hashtag co-occurrence (edges stored as ordered pairs).
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    pub kind: NetworkKind,
    node_index: HashMap<String, usize>,
    // BTreeMap keeps iteration order deterministic across runs.
    edges: BTreeMap<(usize, usize), u64>,
}

impl WeightedGraph {
    pub fn new(kind: NetworkKind) -> Self {
        WeightedGraph {
            kind,
            node_index: HashMap::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn directed(&self) -> bool {
        self.kind.directed()
    }

    pub fn node_count(&self) -> usize {
        self.node_index.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    fn node(&mut self, id: &str) -> usize {
        if let Some(&i) = self.node_index.get(id) {
            return i;
        }
        let i = self.node_index.len();
        self.node_index.insert(id.to_string(), i);
        i
    }

    /// Accumulate one interaction. Self-loops are dropped in the undirected
    /// co-occurrence graph; undirected edges are canonicalized.
    pub fn add_edge(&mut self, source: &str, target: &str) {
        if !self.directed() && source == target {
            return;
        }
        let s = self.node(source);
        let t = self.node(target);
        let key = if self.directed() || s <= t {
            (s, t)
        } else {
            (t, s)
        };
        *self.edges.entry(key).or_insert(0) += 1;
    }
}

/// Build one of the three interaction networks from a window of tweets.
///
/// Retweet: edge originator -> sender per retweet. Mention: edge
/// author -> mentioned user per mention. Co-occurrence: undirected edge per
/// unordered pair of distinct hashtags in one tweet. Weights count
/// repetitions.
pub fn build_network<'a, I>(tweets: I, kind: NetworkKind) -> WeightedGraph
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let mut graph = WeightedGraph::new(kind);
    for tweet in tweets {
        match kind {
            NetworkKind::Retweet => {
                if let Some(originator) = &tweet.originator {
                    graph.add_edge(&originator.user_id, &tweet.sender.user_id);
                }
            }
            NetworkKind::Mention => {
                for mentioned in &tweet.mention_list {
                    graph.add_edge(&tweet.sender.user_id, mentioned);
                }
            }
            NetworkKind::HashtagCooccurrence => {
                let tags = &tweet.hashtag_list;
                for i in 0..tags.len() {
                    for j in (i + 1)..tags.len() {
                        graph.add_edge(&tags[i], &tags[j]);
                    }
                }
            }
        }
    }
    graph
}

/// Structural metrics of one graph, in feature-registry order.
#[derive(Debug, Clone)]
pub struct NetworkMetrics {
    pub node_count: f64,
    pub edge_count: f64,
    pub strength: DistributionSummary,
    /// Present only for directed graphs.
    pub in_strength: Option<DistributionSummary>,
    pub out_strength: Option<DistributionSummary>,
    pub component_sizes: DistributionSummary,
    pub density_whole: f64,
    pub density_lcc: f64,
    pub assortativity_whole: f64,
    pub assortativity_lcc: f64,
    pub lcc_mean_shortest_path: f64,
}

/// LCCs larger than this are sampled rather than fully traversed when
/// computing the mean shortest path.
const BFS_EXACT_LIMIT: usize = 2000;
const BFS_SAMPLE_SOURCES: usize = 100;

fn pearson(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    if pairs.is_empty() {
        return 0.0;
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Compute all structural metrics for one graph. Empty graph yields zeros.
pub fn network_metrics(graph: &WeightedGraph) -> NetworkMetrics {
    let n = graph.node_count();
    let directed = graph.directed();
    let zero = || NetworkMetrics {
        node_count: 0.0,
        edge_count: 0.0,
        strength: DistributionSummary::default(),
        in_strength: directed.then(DistributionSummary::default),
        out_strength: directed.then(DistributionSummary::default),
        component_sizes: DistributionSummary::default(),
        density_whole: 0.0,
        density_lcc: 0.0,
        assortativity_whole: 0.0,
        assortativity_lcc: 0.0,
        lcc_mean_shortest_path: 0.0,
    };
    if n == 0 {
        return zero();
    }

    // Strengths (weighted degree) and unweighted degrees per node.
    let mut in_strength = vec![0.0f64; n];
    let mut out_strength = vec![0.0f64; n];
    let mut in_degree = vec![0.0f64; n];
    let mut out_degree = vec![0.0f64; n];
    // Adjacency along edge direction (undirected edges added both ways).
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    // Undirected adjacency, for connectivity.
    let mut undirected_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (&(s, t), &w) in &graph.edges {
        let w = w as f64;
        out_strength[s] += w;
        in_strength[t] += w;
        out_degree[s] += 1.0;
        in_degree[t] += 1.0;
        adj[s].push(t);
        undirected_adj[s].push(t);
        undirected_adj[t].push(s);
        if !directed {
            out_strength[t] += w;
            in_strength[s] += w;
            out_degree[t] += 1.0;
            in_degree[s] += 1.0;
            adj[t].push(s);
        }
    }
    let total_strength: Vec<f64> = if directed {
        (0..n).map(|i| in_strength[i] + out_strength[i]).collect()
    } else {
        out_strength.clone()
    };

    // Weakly connected components.
    let mut component = vec![usize::MAX; n];
    let mut component_sizes_raw: Vec<usize> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = component_sizes_raw.len();
        let mut size = 0usize;
        let mut queue = VecDeque::from([start]);
        component[start] = id;
        while let Some(u) = queue.pop_front() {
            size += 1;
            for &v in &undirected_adj[u] {
                if component[v] == usize::MAX {
                    component[v] = id;
                    queue.push_back(v);
                }
            }
        }
        component_sizes_raw.push(size);
    }
    let lcc_id = component_sizes_raw
        .iter()
        .enumerate()
        .max_by_key(|(_, &s)| s)
        .map(|(i, _)| i)
        .unwrap();
    let lcc_nodes: Vec<usize> = (0..n).filter(|&i| component[i] == lcc_id).collect();
    let lcc_edge_count = graph
        .edges
        .keys()
        .filter(|&&(s, _)| component[s] == lcc_id)
        .count();

    let density = |nodes: usize, edges: usize| -> f64 {
        if nodes < 2 {
            return 0.0;
        }
        let pairs = (nodes * (nodes - 1)) as f64;
        if directed {
            edges as f64 / pairs
        } else {
            2.0 * edges as f64 / pairs
        }
    };

    // Degree assortativity: Pearson correlation over edge endpoint degrees
    // (out-degree of source vs. in-degree of target for directed graphs;
    // both orientations of each edge for undirected graphs).
    let assortativity = |restrict: Option<usize>| -> f64 {
        let mut pairs = Vec::new();
        for &(s, t) in graph.edges.keys() {
            if let Some(comp) = restrict {
                if component[s] != comp {
                    continue;
                }
            }
            if directed {
                pairs.push((out_degree[s], in_degree[t]));
            } else {
                pairs.push((out_degree[s], out_degree[t]));
                pairs.push((out_degree[t], out_degree[s]));
            }
        }
        pearson(&pairs)
    };

    // Mean shortest path over ordered reachable pairs in the LCC, following
    // edge direction; unreachable pairs are excluded.
    let mean_shortest_path = {
        let sources: Vec<usize> = if lcc_nodes.len() > BFS_EXACT_LIMIT {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            let mut shuffled = lcc_nodes.clone();
            shuffled.shuffle(&mut rng);
            shuffled.truncate(BFS_SAMPLE_SOURCES);
            shuffled
        } else {
            lcc_nodes.clone()
        };
        let mut dist_sum = 0.0f64;
        let mut pair_count = 0u64;
        let mut dist = vec![u32::MAX; n];
        for &src in &sources {
            dist.iter_mut().for_each(|d| *d = u32::MAX);
            dist[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if dist[v] == u32::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            for &t in &lcc_nodes {
                if t != src && dist[t] != u32::MAX {
                    dist_sum += dist[t] as f64;
                    pair_count += 1;
                }
            }
        }
        if pair_count > 0 {
            dist_sum / pair_count as f64
        } else {
            0.0
        }
    };

    let component_sizes_f: Vec<f64> = component_sizes_raw.iter().map(|&s| s as f64).collect();

    NetworkMetrics {
        node_count: n as f64,
        edge_count: graph.edge_count() as f64,
        strength: summarize8(&total_strength),
        in_strength: directed.then(|| summarize8(&in_strength)),
        out_strength: directed.then(|| summarize8(&out_strength)),
        component_sizes: summarize8(&component_sizes_f),
        density_whole: density(n, graph.edge_count()),
        density_lcc: density(lcc_nodes.len(), lcc_edge_count),
        assortativity_whole: assortativity(None),
        assortativity_lcc: assortativity(Some(lcc_id)),
        lcc_mean_shortest_path: mean_shortest_path,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::UserMeta;
    use approx::assert_abs_diff_eq;

    fn tweet(
        sender: &str,
        originator: Option<&str>,
        mentions: &[&str],
        hashtags: &[&str],
    ) -> TweetRecord {
        TweetRecord {
            id: "x".into(),
            timestamp: 1,
            hashtag_list: hashtags.iter().map(|s| s.to_string()).collect(),
            mention_list: mentions.iter().map(|s| s.to_string()).collect(),
            url_count: 0,
            tokens: vec![],
            emoticon_tokens: vec![],
            is_retweet: originator.is_some(),
            sender: UserMeta {
                user_id: sender.into(),
                ..UserMeta::default()
            },
            originator: originator.map(|o| UserMeta {
                user_id: o.into(),
                ..UserMeta::default()
            }),
            is_reply: false,
            text: None,
        }
    }

    #[test]
    fn retweet_edge_points_toward_retweeter() {
        let tweets = [tweet("a", Some("b"), &[], &["t"])];
        let g = build_network(&tweets, NetworkKind::Retweet);
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        let s = g.node_index["b"];
        let t = g.node_index["a"];
        assert_eq!(g.edges.get(&(s, t)), Some(&1));
    }

    #[test]
    fn cooccurrence_pairs_of_three() {
        let tweets = [tweet("a", None, &[], &["a", "b", "c"])];
        let g = build_network(&tweets, NetworkKind::HashtagCooccurrence);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert!(g.edges.values().all(|&w| w == 1));
    }

    #[test]
    fn mention_weight_accumulates() {
        let tweets = [
            tweet("a", None, &["b"], &["t"]),
            tweet("a", None, &["b"], &["t"]),
        ];
        let g = build_network(&tweets, NetworkKind::Mention);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.total_weight(), 2);
    }

    #[test]
    fn retweet_weight_total_equals_retweet_count() {
        let tweets = [
            tweet("a", Some("b"), &[], &["t"]),
            tweet("a", Some("b"), &[], &["t"]),
            tweet("c", Some("b"), &[], &["t"]),
            tweet("d", None, &[], &["t"]),
        ];
        let g = build_network(&tweets, NetworkKind::Retweet);
        assert_eq!(g.total_weight(), 3);
    }

    #[test]
    fn empty_graph_metrics_are_zero() {
        let g = WeightedGraph::new(NetworkKind::Retweet);
        let m = network_metrics(&g);
        assert_eq!(m.node_count, 0.0);
        assert_eq!(m.density_whole, 0.0);
        assert_eq!(m.lcc_mean_shortest_path, 0.0);
        assert!(m.in_strength.is_some());
    }

    #[test]
    fn directed_triangle() {
        let tweets = [
            tweet("b", Some("a"), &[], &["t"]),
            tweet("c", Some("b"), &[], &["t"]),
            tweet("a", Some("c"), &[], &["t"]),
        ];
        let g = build_network(&tweets, NetworkKind::Retweet);
        let m = network_metrics(&g);
        // 3 edges over 6 ordered pairs; paths {1,1,1,2,2,2}.
        assert_abs_diff_eq!(m.density_whole, 0.5);
        assert_abs_diff_eq!(m.lcc_mean_shortest_path, 1.5);
    }

    #[test]
    fn star_assortativity_is_minus_one() {
        let tweets = [
            tweet("a", None, &[], &["hub", "x"]),
            tweet("a", None, &[], &["hub", "y"]),
            tweet("a", None, &[], &["hub", "z"]),
        ];
        let g = build_network(&tweets, NetworkKind::HashtagCooccurrence);
        let m = network_metrics(&g);
        assert_abs_diff_eq!(m.assortativity_whole, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn lcc_density_at_least_whole_when_disconnected() {
        let tweets = [
            tweet("a", None, &[], &["a", "b"]),
            tweet("a", None, &[], &["b", "c"]),
            tweet("a", None, &[], &["x", "y"]),
        ];
        let g = build_network(&tweets, NetworkKind::HashtagCooccurrence);
        let m = network_metrics(&g);
        assert!(m.density_lcc >= m.density_whole);
        assert_eq!(m.component_sizes.max, 3.0);
    }

    #[test]
    fn self_loop_dropped_in_cooccurrence() {
        let tweets = [tweet("a", None, &[], &["t", "t"])];
        let g = build_network(&tweets, NetworkKind::HashtagCooccurrence);
        assert_eq!(g.edge_count(), 0);
    }
}
