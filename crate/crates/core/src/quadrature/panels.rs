//! Block tree over a lattice and the panel-pair tiling of index products.

use serde::Serialize;

use super::grid::Lattice;

/// Leaf blocks hold at most `LEAF` cells per axis.
pub const LEAF: usize = 4;

/// Default admissibility threshold for `dist / max(diam)`.
pub const ETA0: f64 = 1.0;

/// Axis-aligned box of lattice cells `[lo, hi)`.
#[derive(Clone, Debug, Serialize)]
pub struct Block {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
    /// Number of inside nodes.
    pub count: usize,
    pub children: Vec<usize>,
}

impl Block {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Diameter of the node-centre box, in cells.
    fn diam(&self) -> f64 {
        (0..3)
            .map(|i| (self.hi[i] - self.lo[i] - 1) as f64)
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt()
    }

    /// Distance between the node-centre boxes, in cells.
    fn dist(&self, other: &Block) -> f64 {
        (0..3)
            .map(|i| {
                let a = other.lo[i] as f64 - (self.hi[i] - 1) as f64;
                let b = self.lo[i] as f64 - (other.hi[i] - 1) as f64;
                a.max(b).max(0.0)
            })
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt()
    }
}

/// Two blocks whose index product is evaluated together.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PanelPair {
    pub a: usize,
    pub b: usize,
    pub eta: f64,
    pub admissible: bool,
}

impl PanelPair {
    pub fn is_self(&self) -> bool {
        self.a == self.b
    }
}

/// Block tree plus the list of panel pairs covering every unordered pair of
/// nodes exactly once: a pair `(a, b)` with `a != b` stands for both
/// `A x B` and `B x A`; `(a, a)` stands for `A x A`.
#[derive(Clone, Debug)]
pub struct PanelTree {
    pub blocks: Vec<Block>,
    pub pairs: Vec<PanelPair>,
    pub eta0: f64,
}

impl PanelTree {
    pub fn build(lat: &Lattice, inside: &[bool], eta0: f64) -> Self {
        let mut blocks = Vec::new();
        let mut hi = [1usize; 3];
        hi[..lat.dim].copy_from_slice(&lat.dims[..lat.dim]);
        split(lat, inside, [0; 3], hi, &mut blocks);
        let mut pairs = Vec::new();
        let mut tree = PanelTree { blocks, pairs: Vec::new(), eta0 };
        visit(&tree, 0, 0, &mut pairs);
        tree.pairs = pairs;
        tree
    }

    /// `sum over pairs of |A| |B|` with off-diagonal pairs counted twice.
    pub fn covered_products(&self) -> u128 {
        self.pairs
            .iter()
            .map(|p| {
                let c = self.blocks[p.a].count as u128 * self.blocks[p.b].count as u128;
                if p.is_self() {
                    c
                } else {
                    2 * c
                }
            })
            .sum()
    }
}

fn split(lat: &Lattice, inside: &[bool], lo: [usize; 3], hi: [usize; 3], out: &mut Vec<Block>) -> usize {
    let mut count = 0;
    for z in lo[2]..hi[2] {
        for y in lo[1]..hi[1] {
            let base = lat.ravel([0, y, z]);
            count += inside[base + lo[0]..base + hi[0]].iter().filter(|&&b| b).count();
        }
    }
    let id = out.len();
    out.push(Block { lo, hi, count, children: Vec::new() });
    if count == 0 {
        return id;
    }
    let mut cuts: [Vec<(usize, usize)>; 3] = Default::default();
    let mut any = false;
    for i in 0..3 {
        let len = hi[i] - lo[i];
        if len > LEAF {
            let mid = lo[i] + LEAF * len.div_ceil(2 * LEAF);
            cuts[i] = vec![(lo[i], mid), (mid, hi[i])];
            any = true;
        } else {
            cuts[i] = vec![(lo[i], hi[i])];
        }
    }
    if !any {
        return id;
    }
    let mut children = Vec::new();
    for &(z0, z1) in &cuts[2] {
        for &(y0, y1) in &cuts[1] {
            for &(x0, x1) in &cuts[0] {
                children.push(split(lat, inside, [x0, y0, z0], [x1, y1, z1], out));
            }
        }
    }
    out[id].children = children;
    id
}

fn visit(t: &PanelTree, a: usize, b: usize, out: &mut Vec<PanelPair>) {
    let (ba, bb) = (&t.blocks[a], &t.blocks[b]);
    if ba.count == 0 || bb.count == 0 {
        return;
    }
    if a == b {
        if ba.is_leaf() {
            out.push(PanelPair { a, b, eta: 0.0, admissible: false });
        } else {
            let ch = &ba.children;
            for i in 0..ch.len() {
                for j in i..ch.len() {
                    visit(t, ch[i], ch[j], out);
                }
            }
        }
        return;
    }
    let diam = ba.diam().max(bb.diam());
    let eta = if diam == 0.0 { f64::INFINITY } else { ba.dist(bb) / diam };
    if eta >= t.eta0 {
        out.push(PanelPair { a, b, eta, admissible: true });
        return;
    }
    match (ba.is_leaf(), bb.is_leaf()) {
        (true, true) => out.push(PanelPair { a, b, eta, admissible: false }),
        (false, true) => {
            for &c in &ba.children {
                visit(t, c, b, out);
            }
        }
        (true, false) => {
            for &c in &bb.children {
                visit(t, a, c, out);
            }
        }
        (false, false) => {
            if ba.diam() >= bb.diam() {
                for &c in &ba.children {
                    visit(t, c, b, out);
                }
            } else {
                for &c in &bb.children {
                    visit(t, a, c, out);
                }
            }
        }
    }
}
