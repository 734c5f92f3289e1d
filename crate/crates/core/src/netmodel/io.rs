//! Text formats for topologies and traffic matrices.
//!
//! * Edge list: one link per line, `u v capacity` (capacity optional,
//!   default 1.0), whitespace separated, `#` starts a comment.
//! * GraphML subset: `<node id>`, `<edge source target>` and an optional
//!   edge data key whose `attr.name` is `capacity`. Other attributes are
//!   ignored. Parallel edges are merged by summing their capacities.
//! * Traffic matrix: one demand per line, `src dst volume`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{Demand, Link, NetModelError, Topology, TrafficMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopologyFormat {
    EdgeList,
    GraphMl,
}

impl TopologyFormat {
    /// `.graphml`/`.xml` files are GraphML, anything else is an edge list.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("graphml") || ext.eq_ignore_ascii_case("xml") => {
                TopologyFormat::GraphMl
            }
            _ => TopologyFormat::EdgeList,
        }
    }
}

impl FromStr for TopologyFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edge-list" | "edgelist" => Ok(Self::EdgeList),
            "graphml" => Ok(Self::GraphMl),
            other => Err(format!("unknown topology format `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    pub allow_disconnected: bool,
}

fn read(path: &Path) -> Result<String, NetModelError> {
    std::fs::read_to_string(path).map_err(|source| NetModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), NetModelError> {
    std::fs::write(path, contents).map_err(|source| NetModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_topology(
    path: &Path,
    format: TopologyFormat,
    options: LoadOptions,
) -> Result<Topology, NetModelError> {
    let text = read(path)?;
    match format {
        TopologyFormat::EdgeList => parse_edge_list(&text, options),
        TopologyFormat::GraphMl => parse_graphml(&text, options),
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn parse_error(line: usize, message: impl Into<String>) -> NetModelError {
    NetModelError::Parse {
        line,
        message: message.into(),
    }
}

/// Maps raw node labels to dense ids: numeric order when every label is an
/// integer, first-appearance order otherwise.
fn densify(labels: &[String]) -> HashMap<String, usize> {
    let numeric: Option<Vec<i64>> = labels.iter().map(|l| l.parse::<i64>().ok()).collect();
    let mut ids = HashMap::new();
    match numeric {
        Some(mut nums) => {
            nums.sort_unstable();
            nums.dedup();
            let rank: BTreeMap<i64, usize> = nums.iter().enumerate().map(|(i, &n)| (n, i)).collect();
            for l in labels {
                ids.insert(l.clone(), rank[&l.parse::<i64>().unwrap()]);
            }
        }
        None => {
            for l in labels {
                let next = ids.len();
                ids.entry(l.clone()).or_insert(next);
            }
        }
    }
    ids
}

pub fn parse_edge_list(text: &str, options: LoadOptions) -> Result<Topology, NetModelError> {
    let mut raw: Vec<(usize, String, String, f64)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let body = strip_comment(line);
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if !(2..=3).contains(&tokens.len()) {
            return Err(parse_error(
                lineno,
                format!("expected `u v [capacity]`, found {} fields", tokens.len()),
            ));
        }
        let capacity = match tokens.get(2) {
            Some(t) => t
                .parse::<f64>()
                .map_err(|_| parse_error(lineno, format!("invalid capacity `{t}`")))?,
            None => 1.0,
        };
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(parse_error(lineno, format!("capacity must be positive, got {capacity}")));
        }
        if tokens[0] == tokens[1] {
            return Err(parse_error(lineno, format!("self-loop on node {}", tokens[0])));
        }
        raw.push((lineno, tokens[0].to_string(), tokens[1].to_string(), capacity));
    }
    let labels: Vec<String> = raw
        .iter()
        .flat_map(|(_, a, b, _)| [a.clone(), b.clone()])
        .collect();
    let ids = densify(&labels);
    let mut seen = HashMap::new();
    let mut links = Vec::with_capacity(raw.len());
    for (lineno, a, b, capacity) in raw {
        let (u, v) = (ids[&a], ids[&b]);
        if u == v {
            return Err(parse_error(lineno, format!("self-loop on node {a}")));
        }
        let key = (u.min(v), u.max(v));
        if let Some(first) = seen.insert(key, lineno) {
            return Err(parse_error(
                lineno,
                format!("duplicate link {a}-{b} (first defined on line {first})"),
            ));
        }
        links.push(Link { u, v, capacity });
    }
    finish(ids.len(), links, options)
}

fn finish(num_nodes: usize, links: Vec<Link>, options: LoadOptions) -> Result<Topology, NetModelError> {
    if options.allow_disconnected {
        Topology::new_unchecked_connectivity(num_nodes, links)
    } else {
        Topology::new(num_nodes, links)
    }
}

pub fn parse_graphml(text: &str, options: LoadOptions) -> Result<Topology, NetModelError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| NetModelError::Parse {
        line: e.pos().row as usize,
        message: e.to_string(),
    })?;
    let line_of = |node: roxmltree::Node| doc.text_pos_at(node.range().start).row as usize;

    let capacity_keys: Vec<&str> = doc
        .descendants()
        .filter(|n| n.has_tag_name("key"))
        .filter(|n| n.attribute("attr.name") == Some("capacity"))
        .filter(|n| matches!(n.attribute("for"), None | Some("edge") | Some("all")))
        .filter_map(|n| n.attribute("id"))
        .collect();

    let mut node_ids: HashMap<&str, usize> = HashMap::new();
    for node in doc.descendants().filter(|n| n.has_tag_name("node")) {
        let id = node
            .attribute("id")
            .ok_or_else(|| parse_error(line_of(node), "node without `id`"))?;
        let next = node_ids.len();
        if node_ids.insert(id, next).is_some() {
            return Err(parse_error(line_of(node), format!("duplicate node id `{id}`")));
        }
    }

    let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    for edge in doc.descendants().filter(|n| n.has_tag_name("edge")) {
        let line = line_of(edge);
        let endpoint = |attr: &str| -> Result<usize, NetModelError> {
            let label = edge
                .attribute(attr)
                .ok_or_else(|| parse_error(line, format!("edge without `{attr}`")))?;
            node_ids
                .get(label)
                .copied()
                .ok_or_else(|| parse_error(line, format!("edge references unknown node `{label}`")))
        };
        let (s, t) = (endpoint("source")?, endpoint("target")?);
        if s == t {
            return Err(parse_error(line, format!("self-loop on node {s}")));
        }
        let capacity = edge
            .children()
            .filter(|c| c.has_tag_name("data"))
            .find(|c| c.attribute("key").is_some_and(|k| capacity_keys.contains(&k)))
            .map(|c| {
                let raw = c.text().unwrap_or("").trim();
                raw.parse::<f64>()
                    .map_err(|_| parse_error(line, format!("invalid capacity `{raw}`")))
            })
            .transpose()?
            .unwrap_or(1.0);
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(parse_error(line, format!("capacity must be positive, got {capacity}")));
        }
        let key = (s.min(t), s.max(t));
        match merged.get_mut(&key) {
            Some(c) => {
                log::warn!("merging parallel edge {}-{} (line {line})", key.0, key.1);
                *c += capacity;
            }
            None => {
                merged.insert(key, capacity);
                order.push(key);
            }
        }
    }
    let links = order
        .into_iter()
        .map(|(u, v)| Link {
            u,
            v,
            capacity: merged[&(u, v)],
        })
        .collect();
    finish(node_ids.len(), links, options)
}

pub fn format_edge_list(topology: &Topology) -> String {
    let mut out = format!(
        "# {} nodes, {} links\n",
        topology.num_nodes(),
        topology.num_links()
    );
    for l in topology.links() {
        let _ = writeln!(out, "{} {} {}", l.u, l.v, l.capacity);
    }
    out
}

pub fn save_topology(topology: &Topology, path: &Path) -> Result<(), NetModelError> {
    write(path, &format_edge_list(topology))
}

pub fn parse_traffic_matrix(text: &str, num_nodes: usize) -> Result<TrafficMatrix, NetModelError> {
    let mut demands = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let body = strip_comment(line);
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(parse_error(lineno, "expected `src dst volume`"));
        }
        let node = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| parse_error(lineno, format!("invalid node id `{t}`")))
        };
        let (src, dst) = (node(tokens[0])?, node(tokens[1])?);
        let volume = tokens[2]
            .parse::<f64>()
            .map_err(|_| parse_error(lineno, format!("invalid volume `{}`", tokens[2])))?;
        if src == dst {
            return Err(parse_error(lineno, format!("demand from node {src} to itself")));
        }
        if src >= num_nodes || dst >= num_nodes {
            return Err(parse_error(
                lineno,
                format!("node out of range for a {num_nodes}-node topology"),
            ));
        }
        if !(volume.is_finite() && volume >= 0.0) {
            return Err(parse_error(lineno, format!("volume must be non-negative, got {volume}")));
        }
        demands.push(Demand { src, dst, volume });
    }
    TrafficMatrix::new(num_nodes, demands)
}

pub fn load_traffic_matrix(path: &Path, num_nodes: usize) -> Result<TrafficMatrix, NetModelError> {
    parse_traffic_matrix(&read(path)?, num_nodes)
}

pub fn format_traffic_matrix(tm: &TrafficMatrix) -> String {
    let mut out = String::from("# src dst volume\n");
    for d in tm.demands() {
        let _ = writeln!(out, "{} {} {}", d.src, d.dst, d.volume);
    }
    out
}

pub fn save_traffic_matrix(tm: &TrafficMatrix, path: &Path) -> Result<(), NetModelError> {
    write(path, &format_traffic_matrix(tm))
}
