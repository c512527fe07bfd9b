//! Fill-reducing orderings from the sparsity graph of a symmetric matrix.

use std::collections::VecDeque;

use crate::sparse::CsrMatrix;

/// Adjacency lists (no self loops) of the symmetrized pattern.
pub struct Graph {
    pub adj_ptr: Vec<usize>,
    pub adj: Vec<usize>,
}

impl Graph {
    pub fn from_matrix(a: &CsrMatrix) -> Self {
        let n = a.nrows();
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for (j, _) in a.row(i) {
                if i != j {
                    lists[i].push(j);
                    lists[j].push(i);
                }
            }
        }
        let mut adj_ptr = vec![0];
        let mut adj = Vec::new();
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            adj.extend(l);
            adj_ptr.push(adj.len());
        }
        Self { adj_ptr, adj }
    }

    pub fn len(&self) -> usize {
        self.adj_ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.adj_ptr[v]..self.adj_ptr[v + 1]]
    }
}

const LEAF: usize = 64;

/// Nested dissection with level-set separators. Returns `perm` with
/// `perm[new] = old`.
pub fn nested_dissection(g: &Graph) -> Vec<usize> {
    let n = g.len();
    let mut order = Vec::with_capacity(n);
    // part[v]: id of the subgraph v currently belongs to.
    let mut part = vec![0usize; n];
    let mut level = vec![usize::MAX; n];
    let mut next_id = 1;
    let mut stack: Vec<(usize, Vec<usize>, bool)> = vec![(0, (0..n).collect(), false)];
    // Entries marked `true` are separators waiting to be emitted.
    while let Some((id, nodes, emit)) = stack.pop() {
        if emit || nodes.len() <= LEAF {
            order.extend(nodes);
            continue;
        }
        // One connected component reachable from the first node.
        let root = pseudo_peripheral(g, &nodes[0..1], id, &part, &mut level);
        let levels = bfs_levels(g, root, id, &part, &mut level);
        let reached: usize = levels.iter().map(|l| l.len()).sum();
        if reached < nodes.len() {
            // Disconnected: split off the component and handle the rest separately.
            let comp: Vec<usize> = levels.into_iter().flatten().collect();
            let cid = next_id;
            next_id += 1;
            for &v in &comp {
                part[v] = cid;
            }
            let rest: Vec<usize> = nodes.into_iter().filter(|&v| part[v] == id).collect();
            stack.push((id, rest, false));
            stack.push((cid, comp, false));
            continue;
        }
        if levels.len() < 3 {
            order.extend(nodes);
            continue;
        }
        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (k, l) in levels.iter().enumerate() {
            acc += l.len();
            if acc >= half {
                mid = k.clamp(1, levels.len() - 2);
                break;
            }
        }
        let sep = levels[mid].clone();
        let lower: Vec<usize> = levels[..mid].iter().flatten().copied().collect();
        let upper: Vec<usize> = levels[mid + 1..].iter().flatten().copied().collect();
        let (a, b) = (next_id, next_id + 1);
        next_id += 2;
        for &v in &lower {
            part[v] = a;
        }
        for &v in &upper {
            part[v] = b;
        }
        for &v in &sep {
            part[v] = usize::MAX;
        }
        stack.push((usize::MAX, sep, true));
        stack.push((b, upper, false));
        stack.push((a, lower, false));
    }
    order
}

fn bfs_levels(g: &Graph, root: usize, id: usize, part: &[usize], level: &mut [usize]) -> Vec<Vec<usize>> {
    let mut levels: Vec<Vec<usize>> = vec![vec![root]];
    let mut seen = vec![root];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if part[w] == id && level[w] == usize::MAX {
                let l = level[v] + 1;
                level[w] = l;
                if levels.len() <= l {
                    levels.push(Vec::new());
                }
                levels[l].push(w);
                seen.push(w);
                queue.push_back(w);
            }
        }
    }
    for v in seen {
        level[v] = usize::MAX;
    }
    levels
}

fn pseudo_peripheral(g: &Graph, start: &[usize], id: usize, part: &[usize], level: &mut [usize]) -> usize {
    let mut root = start[0];
    let mut depth = 0;
    for _ in 0..4 {
        let levels = bfs_levels(g, root, id, part, level);
        let last = levels.last().unwrap();
        let cand = *last
            .iter()
            .min_by_key(|&&v| g.neighbors(v).iter().filter(|&&w| part[w] == id).count())
            .unwrap();
        if levels.len() <= depth + 1 && depth > 0 {
            break;
        }
        depth = levels.len() - 1;
        root = cand;
    }
    root
}

/// Inverse permutation.
pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}
