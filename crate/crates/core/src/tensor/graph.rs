use std::collections::{HashMap, HashSet};

use super::{BackwardCtx, Float, Tensor};
use crate::error::{Error, Result};

/// Recorded computation reachable from a scalar root, in topological order
/// (every node's inputs precede it).
pub struct Graph<T: Float> {
    root: Tensor<T>,
    nodes: Vec<Tensor<T>>,
}

impl<T: Float> Graph<T> {
    pub fn build(root: &Tensor<T>) -> Result<Self> {
        if root.numel() != 1 {
            return Err(Error::Contract(format!(
                "backward requires a scalar loss, got shape {:?}",
                root.shape()
            )));
        }
        let mut nodes = Vec::new();
        let mut visited = HashSet::new();
        // iterative post-order DFS; deep models would overflow a recursive one
        let mut stack: Vec<(Tensor<T>, usize)> = Vec::new();
        if root.requires_grad() {
            visited.insert(root.id());
            stack.push((root.clone(), 0));
        }
        while let Some((node, next)) = stack.pop() {
            let inputs = node.op().map(|o| o.inputs.as_slice()).unwrap_or(&[]);
            if next < inputs.len() {
                let child = inputs[next].clone();
                stack.push((node, next + 1));
                if child.requires_grad() && visited.insert(child.id()) {
                    stack.push((child, 0));
                }
            } else {
                nodes.push(node);
            }
        }
        Ok(Graph {
            root: root.clone(),
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Tensor<T>] {
        &self.nodes
    }

    /// Number of leaves that will receive a gradient.
    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Propagates gradients from the root, visiting each node once.
    pub fn backward(&self) -> Result<()> {
        let mut grads: HashMap<usize, Vec<T>> = HashMap::new();
        if !self.root.requires_grad() {
            return Ok(());
        }
        grads.insert(self.root.id(), vec![T::one()]);
        for node in self.nodes.iter().rev() {
            let Some(g) = grads.remove(&node.id()) else {
                continue;
            };
            match node.op() {
                None => node.accumulate_grad(&g),
                Some(op) => {
                    let ctx = BackwardCtx {
                        grad: &g,
                        out: node.data(),
                        inputs: &op.inputs,
                    };
                    let input_grads = (op.backward)(&ctx);
                    debug_assert_eq!(input_grads.len(), op.inputs.len(), "{}", op.name);
                    for (input, ig) in op.inputs.iter().zip(input_grads) {
                        let Some(ig) = ig else { continue };
                        if !input.requires_grad() {
                            continue;
                        }
                        debug_assert_eq!(ig.len(), input.numel(), "{}", op.name);
                        match grads.get_mut(&input.id()) {
                            Some(acc) => {
                                for (a, b) in acc.iter_mut().zip(ig) {
                                    *a += b;
                                }
                            }
                            None => {
                                grads.insert(input.id(), ig);
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
