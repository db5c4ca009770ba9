use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// `x[feature] <= threshold` (equivalently `bin <= bin`) goes left.
    Split {
        feature: usize,
        bin: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A regression tree with nodes stored in preorder, root first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Re-indexes an arbitrary node arena (root at 0) into preorder.
    pub fn from_nodes(arena: Vec<Node>) -> Self {
        let mut nodes = Vec::with_capacity(arena.len());
        fn visit(arena: &[Node], at: usize, out: &mut Vec<Node>) -> usize {
            let slot = out.len();
            match &arena[at] {
                Node::Leaf { value } => out.push(Node::Leaf { value: *value }),
                Node::Split {
                    feature,
                    bin,
                    threshold,
                    left,
                    right,
                } => {
                    out.push(Node::Leaf { value: 0.0 });
                    let l = visit(arena, *left, out);
                    let r = visit(arena, *right, out);
                    out[slot] = Node::Split {
                        feature: *feature,
                        bin: *bin,
                        threshold: *threshold,
                        left: l,
                        right: r,
                    };
                }
            }
            slot
        }
        if !arena.is_empty() {
            visit(&arena, 0, &mut nodes);
        }
        Tree { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, values: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if values[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}
