//! Connected components of the owned member cells.

use super::geometry::GridGeometry;

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
    }
}

/// Labels for every cell (0 for non-members, shadow cells copy their partner)
/// and owned-cell counts indexed by label. Label 1 is the component of
/// `anchor` when given; components follow by decreasing size, then smallest
/// cell index.
pub(crate) fn label_components(
    geom: &GridGeometry,
    member: &[bool],
    anchor: Option<usize>,
) -> (Vec<u32>, Vec<usize>) {
    let n = geom.num_cells();
    let mut uf = UnionFind::new(n);
    for idx in geom.owned_cells() {
        if !member[idx] {
            continue;
        }
        geom.for_each_neighbor(idx, false, |nb, _, _| {
            if nb > idx && member[nb] {
                uf.union(idx as u32, nb as u32);
            }
        });
    }
    // root -> (size, smallest cell)
    let mut roots: Vec<(u32, usize, usize)> = Vec::new();
    let mut slot = vec![u32::MAX; n];
    for idx in geom.owned_cells() {
        if !member[idx] {
            continue;
        }
        let r = uf.find(idx as u32) as usize;
        if slot[r] == u32::MAX {
            slot[r] = roots.len() as u32;
            roots.push((r as u32, 0, idx));
        }
        roots[slot[r] as usize].1 += 1;
    }
    let anchor_root = anchor.filter(|&a| member[a]).map(|a| uf.find(a as u32));
    roots.sort_by(|a, b| {
        let ka = Some(a.0) != anchor_root;
        let kb = Some(b.0) != anchor_root;
        ka.cmp(&kb).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2))
    });
    let mut sizes = vec![0usize; roots.len() + 1];
    for (k, &(r, size, _)) in roots.iter().enumerate() {
        slot[r as usize] = k as u32 + 1;
        sizes[k + 1] = size;
    }
    let mut labels = vec![0u32; n];
    for idx in geom.owned_cells() {
        if member[idx] {
            let r = uf.find(idx as u32) as usize;
            labels[idx] = slot[r];
        }
    }
    for idx in 0..n {
        if !geom.is_owned(idx) {
            if let Some(p) = geom.partner(idx) {
                labels[idx] = labels[p];
            }
        }
    }
    (labels, sizes)
}
