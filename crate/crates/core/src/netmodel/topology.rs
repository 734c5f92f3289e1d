use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::NetModelError;

/// Index of an undirected link inside a [`Topology`].
pub type LinkId = usize;

/// Index of a directed arc. Link `l` owns arcs `2l` (`u -> v`) and `2l + 1`
/// (`v -> u`); each direction carries the full link capacity.
pub type ArcId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub u: usize,
    pub v: usize,
    pub capacity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub link: LinkId,
    pub tail: usize,
    pub head: usize,
}

/// Undirected network with dense node ids `0..num_nodes` and strictly
/// positive link capacities. Links are stored with `u < v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    num_nodes: usize,
    links: Vec<Link>,
}

impl Topology {
    /// Builds a topology, canonicalizing endpoint order and checking every
    /// invariant including connectivity.
    pub fn new(num_nodes: usize, links: Vec<Link>) -> Result<Self, NetModelError> {
        let topo = Self::new_unchecked_connectivity(num_nodes, links)?;
        if !topo.is_connected() {
            return Err(NetModelError::Disconnected);
        }
        Ok(topo)
    }

    /// Same as [`Topology::new`] minus the connectivity requirement.
    pub fn new_unchecked_connectivity(
        num_nodes: usize,
        links: Vec<Link>,
    ) -> Result<Self, NetModelError> {
        let mut seen = BTreeSet::new();
        let mut canonical = Vec::with_capacity(links.len());
        for link in links {
            let (u, v) = (link.u.min(link.v), link.u.max(link.v));
            if u == v {
                return Err(NetModelError::SelfLoop(u));
            }
            if v >= num_nodes {
                return Err(NetModelError::NodeOutOfRange {
                    node: v,
                    num_nodes,
                });
            }
            if !(link.capacity.is_finite() && link.capacity > 0.0) {
                return Err(NetModelError::BadCapacity { u, v, capacity: link.capacity });
            }
            if !seen.insert((u, v)) {
                return Err(NetModelError::DuplicateLink(u, v));
            }
            canonical.push(Link {
                u,
                v,
                capacity: link.capacity,
            });
        }
        Ok(Self {
            num_nodes,
            links: canonical,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn num_arcs(&self) -> usize {
        2 * self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id]
    }

    pub fn capacity(&self, id: LinkId) -> f64 {
        self.links[id].capacity
    }

    pub fn find_link(&self, a: usize, b: usize) -> Option<LinkId> {
        let (u, v) = (a.min(b), a.max(b));
        self.links.iter().position(|l| l.u == u && l.v == v)
    }

    pub fn arc(&self, arc: ArcId) -> Arc {
        let link = arc / 2;
        let l = &self.links[link];
        if arc % 2 == 0 {
            Arc {
                link,
                tail: l.u,
                head: l.v,
            }
        } else {
            Arc {
                link,
                tail: l.v,
                head: l.u,
            }
        }
    }

    pub fn arcs(&self) -> impl Iterator<Item = Arc> + '_ {
        (0..self.num_arcs()).map(|a| self.arc(a))
    }

    /// Arc id for the directed hop `tail -> head`, if the link exists.
    pub fn arc_between(&self, tail: usize, head: usize) -> Option<ArcId> {
        self.find_link(tail, head)
            .map(|l| if self.links[l].u == tail { 2 * l } else { 2 * l + 1 })
    }

    /// Outgoing arcs per node, sorted by head node.
    pub fn out_arcs(&self) -> Vec<Vec<ArcId>> {
        let mut out = vec![Vec::new(); self.num_nodes];
        for a in 0..self.num_arcs() {
            out[self.arc(a).tail].push(a);
        }
        for list in &mut out {
            list.sort_by_key(|&a| self.arc(a).head);
        }
        out
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for l in &self.links {
            deg[l.u] += 1;
            deg[l.v] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        self.is_connected_without(&[])
    }

    /// BFS connectivity check ignoring the given links.
    pub fn is_connected_without(&self, removed: &[LinkId]) -> bool {
        if self.num_nodes == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); self.num_nodes];
        for (id, l) in self.links.iter().enumerate() {
            if !removed.contains(&id) {
                adj[l.u].push(l.v);
                adj[l.v].push(l.u);
            }
        }
        let mut seen = vec![false; self.num_nodes];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == self.num_nodes
    }

    /// Copy of the topology with every capacity replaced.
    pub fn with_capacities(&self, capacities: &[f64]) -> Result<Self, NetModelError> {
        assert_eq!(capacities.len(), self.links.len());
        let links = self
            .links
            .iter()
            .zip(capacities)
            .map(|(l, &capacity)| Link { capacity, ..*l })
            .collect();
        Self::new_unchecked_connectivity(self.num_nodes, links)
    }

    /// Relabels nodes by `perm[old] = new`, keeping link order.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self, NetModelError> {
        let links = self
            .links
            .iter()
            .map(|l| Link {
                u: perm[l.u],
                v: perm[l.v],
                capacity: l.capacity,
            })
            .collect();
        Self::new(self.num_nodes, links)
    }
}
