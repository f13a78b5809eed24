use serde::{Deserialize, Serialize};

use super::{exact, Classifier};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{Dataset, Label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        label: i8,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        #[serde(with = "exact")]
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    fn leaf(label: Label) -> TreeNode {
        TreeNode::Leaf {
            label: label.as_i8(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }

    /// Every split as `(feature, threshold)`, pre-order.
    pub fn splits(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            if let TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } = node
            {
                out.push((*feature, *threshold));
                stack.push(right);
                stack.push(left);
            }
        }
        out
    }
}

/// Axis-aligned decision tree grown until every leaf is pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub dim: usize,
    pub root: TreeNode,
}

impl TreeModel {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for (f, t) in self.root.splits() {
            if f >= self.dim || !t.is_finite() {
                return Err(Error::invalid("root", "split out of range or non-finite"));
            }
        }
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Leaf { label } => {
                    Label::from_i8(*label)?;
                }
                TreeNode::Split { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        Ok(())
    }
}

impl Classifier for TreeModel {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn decision_unchecked(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label } => return f64::from(*label),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
}

fn gini(neg: usize, pos: usize) -> f64 {
    let n = (neg + pos) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = pos as f64 / n;
    2.0 * p * (1.0 - p)
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Lowest weighted Gini impurity over all features and midpoints between
/// adjacent distinct values. Ties keep the lowest feature index, then the
/// lowest threshold.
#[allow(clippy::needless_range_loop)] // `f` is a feature, points are indexed by sample
fn best_split(data: &Dataset, idx: &[usize]) -> Option<Split> {
    let points = data.points();
    let labels = data.labels();
    let total_pos = idx
        .iter()
        .filter(|&&i| labels[i] == Label::Positive)
        .count();
    let total_neg = idx.len() - total_pos;
    let n = idx.len() as f64;
    let mut best: Option<Split> = None;
    let mut order = idx.to_vec();
    for f in 0..data.ambient_dim() {
        order.sort_by(|&a, &b| points[a][f].total_cmp(&points[b][f]));
        let (mut left_pos, mut left_neg) = (0, 0);
        for w in 0..order.len() - 1 {
            if labels[order[w]] == Label::Positive {
                left_pos += 1;
            } else {
                left_neg += 1;
            }
            let (lo, hi) = (points[order[w]][f], points[order[w + 1]][f]);
            if !(lo < hi) {
                continue;
            }
            let left_n = (left_pos + left_neg) as f64;
            let impurity = (left_n * gini(left_neg, left_pos)
                + (n - left_n) * gini(total_neg - left_neg, total_pos - left_pos))
                / n;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mut threshold = lo + (hi - lo) / 2.0;
                // adjacent floats: the midpoint may round up onto `hi`
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Split {
                    feature: f,
                    threshold,
                    impurity,
                });
            }
        }
    }
    best
}

fn grow(data: &Dataset, idx: Vec<usize>) -> Result<TreeNode> {
    let labels = data.labels();
    let first = labels[idx[0]];
    if idx.iter().all(|&i| labels[i] == first) {
        return Ok(TreeNode::leaf(first));
    }
    let Some(split) = best_split(data, &idx) else {
        return Err(Error::Unsplittable(idx[0]));
    };
    let (left, right): (Vec<usize>, Vec<usize>) = idx
        .into_iter()
        .partition(|&i| data.points()[i][split.feature] <= split.threshold);
    Ok(TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(data, left)?),
        right: Box::new(grow(data, right)?),
    })
}

/// CART-style growth on Gini gain until all leaves are pure.
pub fn train_decision_tree(data: &Dataset) -> Result<TreeModel> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim(data.ambient_dim(), data.points()[0].len())?;
    let root = grow(data, (0..data.len()).collect())?;
    Ok(TreeModel {
        dim: data.ambient_dim(),
        root,
    })
}
