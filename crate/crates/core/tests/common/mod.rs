#![allow(dead_code)]

use critfail::lp::{Backend, LinearProgram, Relation, Var};
use critfail::netmodel::{
    assign_random_capacities, generate_gravity_tm, generate_random_topology, Link,
    MassDistribution, NetworkInstance, Topology, WaxmanParams,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Waxman topology with random capacities and a gravity matrix.
pub fn random_instance(n: usize, seed: u64) -> NetworkInstance {
    let mut params = WaxmanParams::default();
    params.mean_degree = params.mean_degree.min((n - 1) as f64);
    let topo = generate_random_topology(n, &params, seed).unwrap();
    let topo = assign_random_capacities(&topo, 1.0, seed).unwrap();
    let tm = generate_gravity_tm(&topo, 1.0, MassDistribution::LogUniform, seed).unwrap();
    NetworkInstance::new(topo, tm).unwrap().with_seed(seed)
}

/// Complete graph on `n` nodes minus `drop` random links, unit capacities.
pub fn dense_instance(n: usize, drop: usize, total: f64, seed: u64) -> NetworkInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut links = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                links.push(Link { u, v, capacity: 1.0 });
            }
        }
        links.shuffle(&mut rng);
        links.truncate(links.len() - drop);
        links.sort_by_key(|l| (l.u, l.v));
        if let Ok(topo) = Topology::new(n, links) {
            let tm = generate_gravity_tm(&topo, total, MassDistribution::LogUniform, seed).unwrap();
            return NetworkInstance::new(topo, tm).unwrap().with_seed(seed);
        }
    }
}

/// Every simple path from `src` to `dst` avoiding `disabled` links.
pub fn simple_paths(topo: &Topology, src: usize, dst: usize, disabled: &[usize]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); topo.num_nodes()];
    for (l, link) in topo.links().iter().enumerate() {
        if !disabled.contains(&l) {
            adj[link.u].push(link.v);
            adj[link.v].push(link.u);
        }
    }
    let mut out = Vec::new();
    let mut stack = vec![src];
    let mut seen = vec![false; topo.num_nodes()];
    seen[src] = true;
    fn dfs(
        adj: &[Vec<usize>],
        dst: usize,
        stack: &mut Vec<usize>,
        seen: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let at = *stack.last().unwrap();
        if at == dst {
            out.push(stack.clone());
            return;
        }
        for &w in &adj[at] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
                dfs(adj, dst, stack, seen, out);
                stack.pop();
                seen[w] = false;
            }
        }
    }
    dfs(&adj, dst, &mut stack, &mut seen, &mut out);
    out
}

/// Min-MLU by brute force: one variable per demand per simple path, solved
/// with the dense simplex.
pub fn brute_force_mlu(inst: &NetworkInstance, disabled: &[usize]) -> f64 {
    let topo = &inst.topology;
    let mut lp = LinearProgram::new();
    let u = lp.add_nonneg(1.0);
    let mut on_arc: Vec<Vec<Var>> = vec![Vec::new(); topo.num_arcs()];
    for d in inst.tm.positive_demands() {
        let paths = simple_paths(topo, d.src, d.dst, disabled);
        assert!(!paths.is_empty(), "demand {}->{} disconnected", d.src, d.dst);
        let vars: Vec<Var> = paths
            .iter()
            .map(|p| {
                let x = lp.add_nonneg(0.0);
                for w in p.windows(2) {
                    on_arc[topo.arc_between(w[0], w[1]).unwrap()].push(x);
                }
                x
            })
            .collect();
        lp.add_row(vars.iter().map(|&x| (x, 1.0)), Relation::Eq, d.volume);
    }
    for (a, xs) in on_arc.iter().enumerate() {
        if !xs.is_empty() {
            let cap = topo.capacity(a / 2);
            lp.add_row(xs.iter().map(|&x| (x, 1.0)).chain([(u, -cap)]), Relation::Le, 0.0);
        }
    }
    lp.solve_with(Backend::Dense).unwrap().objective
}
