use crate::corpus::QualityLabel;
use crate::error::{QuillError, Result};
use crate::textprep::SparseBinaryVector;
use crate::Sample;

use super::{validate_samples, Classifier};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 32,
            min_samples_split: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeNode {
    Leaf {
        counts: Vec<u32>,
        label: usize,
    },
    /// Routes to `present` when `feature` is in the vector, else `absent`.
    Split {
        feature: u32,
        absent: usize,
        present: usize,
        counts: Vec<u32>,
    },
}

impl TreeNode {
    pub fn counts(&self) -> &[u32] {
        match self {
            TreeNode::Leaf { counts, .. } | TreeNode::Split { counts, .. } => counts,
        }
    }
}

/// CART classifier over presence tests. Node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionTreeModel {
    nodes: Vec<TreeNode>,
    n_classes: usize,
    dimension: usize,
    params: TreeParams,
}

/// `1 - sum_c p_c^2`; zero for an empty set.
pub fn gini(counts: &[u32]) -> f64 {
    let n: u64 = counts.iter().map(|&c| c as u64).sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct Builder<'a> {
    data: &'a [Sample],
    n_classes: usize,
    params: TreeParams,
    nodes: Vec<TreeNode>,
    /// `scratch[f * n_classes + c]`: class-`c` samples at the node containing `f`.
    scratch: Vec<u32>,
    touched: Vec<u32>,
}

impl Builder<'_> {
    fn counts_of(&self, idx: &[usize]) -> Vec<u32> {
        let mut counts = vec![0u32; self.n_classes];
        for &i in idx {
            counts[self.data[i].label] += 1;
        }
        counts
    }

    /// Lowest-impurity presence split; ties go to the lowest feature index.
    /// Features present in every sample at the node are skipped.
    fn best_split(&mut self, idx: &[usize], counts: &[u32]) -> Option<u32> {
        let k = self.n_classes;
        for &i in idx {
            let s = &self.data[i];
            for &f in s.features.indices() {
                let base = f as usize * k;
                if self.scratch[base..base + k].iter().all(|&c| c == 0) {
                    self.touched.push(f);
                }
                self.scratch[base + s.label] += 1;
            }
        }
        self.touched.sort_unstable();

        let n = idx.len() as f64;
        let mut best: Option<(f64, u32)> = None;
        let mut absent = vec![0u32; k];
        for &f in &self.touched {
            let base = f as usize * k;
            let present = &self.scratch[base..base + k];
            let n_present: u32 = present.iter().sum();
            if n_present as usize == idx.len() {
                continue;
            }
            for c in 0..k {
                absent[c] = counts[c] - present[c];
            }
            let n_absent = idx.len() as f64 - n_present as f64;
            let impurity = (n_present as f64 * gini(present) + n_absent * gini(&absent)) / n;
            if best.is_none_or(|(b, _)| impurity < b) {
                best = Some((impurity, f));
            }
        }
        for &f in &self.touched {
            let base = f as usize * k;
            self.scratch[base..base + k].fill(0);
        }
        self.touched.clear();
        best.map(|(_, f)| f)
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts_of(&idx);
        let id = self.nodes.len();
        let label = majority(&counts);
        self.nodes.push(TreeNode::Leaf {
            counts: counts.clone(),
            label,
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || idx.len() < self.params.min_samples_split {
            return id;
        }
        let Some(feature) = self.best_split(&idx, &counts) else {
            return id;
        };
        let (present_idx, absent_idx): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.data[i].features.contains(feature as usize));
        let absent = self.grow(absent_idx, depth + 1);
        let present = self.grow(present_idx, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            absent,
            present,
            counts,
        };
        id
    }
}

impl DecisionTreeModel {
    pub fn fit(data: &[Sample], n_classes: usize, params: TreeParams) -> Result<Self> {
        let dimension = validate_samples(data, n_classes)?;
        let mut builder = Builder {
            data,
            n_classes,
            params,
            nodes: Vec::new(),
            scratch: vec![0; dimension * n_classes],
            touched: Vec::new(),
        };
        builder.grow((0..data.len()).collect(), 0);
        Ok(Self {
            nodes: builder.nodes,
            n_classes,
            dimension,
            params,
        })
    }

    /// Rebuilds a tree from its node table, checking child links and depth.
    pub fn from_nodes(nodes: Vec<TreeNode>, n_classes: usize, dimension: usize, params: TreeParams) -> Result<Self> {
        if nodes.is_empty() {
            return Err(QuillError::Format("tree has no nodes".into()));
        }
        for (id, node) in nodes.iter().enumerate() {
            if node.counts().len() != n_classes {
                return Err(QuillError::Format(format!("node {id} has wrong count arity")));
            }
            if let TreeNode::Split {
                feature,
                absent,
                present,
                ..
            } = node
            {
                if *feature as usize >= dimension || *absent <= id || *present <= id || *absent >= nodes.len() || *present >= nodes.len() {
                    return Err(QuillError::Format(format!("node {id} has invalid links")));
                }
            }
        }
        let model = Self {
            nodes,
            n_classes,
            dimension,
            params,
        };
        if model.depth() > params.max_depth {
            return Err(QuillError::Format("tree deeper than its max_depth".into()));
        }
        Ok(model)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, d)) = stack.pop() {
            max = max.max(d);
            if let TreeNode::Split { absent, present, .. } = self.nodes[id] {
                stack.push((absent, d + 1));
                stack.push((present, d + 1));
            }
        }
        max
    }

    fn leaf_for(&self, x: &SparseBinaryVector) -> &TreeNode {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Split {
                    feature,
                    absent,
                    present,
                    ..
                } => {
                    id = if x.contains(*feature as usize) { *present } else { *absent };
                }
                leaf => return leaf,
            }
        }
    }
}

impl Classifier for DecisionTreeModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    /// Class distribution of the reached leaf.
    fn scores(&self, x: &SparseBinaryVector) -> Result<Vec<f64>> {
        x.check_dimension(self.dimension)?;
        let counts = self.leaf_for(x).counts();
        let total: u32 = counts.iter().sum();
        Ok(counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect())
    }
}

pub fn train_decision_tree(data: &[Sample], max_depth: usize, min_samples_split: usize) -> Result<DecisionTreeModel> {
    DecisionTreeModel::fit(
        data,
        QualityLabel::COUNT,
        TreeParams {
            max_depth,
            min_samples_split,
        },
    )
}
