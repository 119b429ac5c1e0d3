//! Root-to-terminal path decomposition with concurrence and hierarchy.

use serde::Serialize;

use crate::swc::NeuronTree;
use crate::Vec3;

/// Per-vertex path concurrence: the number of root-to-leaf paths through each
/// vertex, i.e. the leaf count of the vertex's subtree.
pub fn concurrence(tree: &NeuronTree) -> Vec<u32> {
    let mut count = vec![0u32; tree.len()];
    for v in postorder(tree) {
        count[v] = if tree.children(v).is_empty() {
            1
        } else {
            tree.children(v).iter().map(|&c| count[c]).sum()
        };
    }
    count
}

/// Per-vertex path hierarchy `n - C(v)`: how many of the `n` paths sharing the
/// root have already departed by the time `v` is reached.
pub fn hierarchy(concurrence: &[u32], n: u32) -> Vec<u32> {
    concurrence.iter().map(|&c| n - c).collect()
}

fn postorder(tree: &NeuronTree) -> Vec<usize> {
    let mut order = Vec::with_capacity(tree.len());
    let mut stack = vec![tree.root()];
    while let Some(v) = stack.pop() {
        order.push(v);
        stack.extend(tree.children(v).iter().copied());
    }
    // Reversed preorder visits every child before its parent.
    order.reverse();
    order
}

/// Ordered vertex sequence from the root to one terminal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootedPath {
    pub path_id: usize,
    /// Indices into the tree's vertex list.
    #[serde(skip)]
    pub vertices: Vec<usize>,
    /// SWC ids of the same vertices.
    pub vertex_ids: Vec<i64>,
    #[serde(serialize_with = "ser_points")]
    pub positions: Vec<Vec3>,
    pub concurrence: Vec<u32>,
    pub hierarchy: Vec<u32>,
}

impl RootedPath {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Polyline length.
    pub fn arc_length(&self) -> f64 {
        self.positions
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .sum()
    }

    /// Same path with every position passed through `f`.
    pub fn map_positions(&self, f: impl Fn(Vec3) -> Vec3) -> Self {
        let mut out = self.clone();
        for p in &mut out.positions {
            *p = f(*p);
        }
        out
    }
}

fn ser_points<S: serde::Serializer>(pts: &[Vec3], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(pts.len()))?;
    for p in pts {
        seq.serialize_element(&[p.x, p.y, p.z])?;
    }
    seq.end()
}

/// All rooted paths of one neuron.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSet {
    pub neuron_id: String,
    pub paths: Vec<RootedPath>,
}

impl PathSet {
    /// One path per leaf, in the order a depth-first traversal (children in
    /// file order) discovers the leaves.
    pub fn from_tree(neuron_id: impl Into<String>, tree: &NeuronTree) -> Self {
        let c = concurrence(tree);
        let n = c[tree.root()];
        let h = hierarchy(&c, n);

        let mut paths = Vec::with_capacity(n as usize);
        let mut prefix: Vec<usize> = Vec::new();
        // (vertex, depth of vertex in the current prefix)
        let mut stack = vec![(tree.root(), 0usize)];
        while let Some((v, depth)) = stack.pop() {
            prefix.truncate(depth);
            prefix.push(v);
            let kids = tree.children(v);
            if kids.is_empty() {
                paths.push(RootedPath {
                    path_id: paths.len(),
                    vertices: prefix.clone(),
                    vertex_ids: prefix.iter().map(|&u| tree.vertex(u).id).collect(),
                    positions: prefix.iter().map(|&u| tree.vertex(u).position).collect(),
                    concurrence: prefix.iter().map(|&u| c[u]).collect(),
                    hierarchy: prefix.iter().map(|&u| h[u]).collect(),
                });
            }
            for &k in kids.iter().rev() {
                stack.push((k, depth + 1));
            }
        }
        Self {
            neuron_id: neuron_id.into(),
            paths,
        }
    }

    /// Path count `n`.
    pub fn n(&self) -> usize {
        self.paths.len()
    }

    /// Total number of distinct tree vertices covered by the paths.
    pub fn vertex_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        for p in &self.paths {
            seen.extend(p.vertices.iter().copied());
        }
        seen.len()
    }
}
