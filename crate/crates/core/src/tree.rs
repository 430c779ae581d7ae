//! Scenario trees: branching structure, conditional probabilities and the
//! sampled economic state on every arc.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::var_model::{VarError, VarProcess};

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("branching structure is empty")]
    EmptyBranching,
    #[error("branching factor at stage {0} must be at least 1")]
    ZeroBranch(usize),
    #[error("initial {0} must be positive")]
    NonPositiveInitial(&'static str),
    #[error("benefit indexation kappa must be nonnegative")]
    NegativeKappa,
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("node {0} is a leaf")]
    LeafNode(usize),
    #[error(transparent)]
    Var(#[from] VarError),
    #[error("tree file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Initial liability, wage bill and benefit payments, plus the benefit
/// indexation fraction `kappa` applied to wage growth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Initials {
    pub l0: f64,
    pub w0: f64,
    pub ben0: f64,
    pub kappa: f64,
}

impl Initials {
    fn validate(&self) -> Result<(), TreeError> {
        for (v, name) in [(self.l0, "liability"), (self.w0, "wages"), (self.ben0, "benefits")] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(TreeError::NonPositiveInitial(name));
            }
        }
        if !(self.kappa >= 0.0) {
            return Err(TreeError::NegativeKappa);
        }
        Ok(())
    }
}

/// State on the arc into a node. The root carries zero wage growth and unit
/// gross returns.
#[derive(Debug, Clone, PartialEq)]
pub struct EconomicState {
    pub wage_growth: f64,
    /// `1 + r_k` per asset class.
    pub gross_returns: Vec<f64>,
    pub liability: f64,
    pub wages: f64,
    pub benefits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: usize,
    pub time: usize,
    pub parent: Option<usize>,
    pub cond_prob: f64,
    pub path_prob: f64,
    pub children: Vec<usize>,
    pub state: EconomicState,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Rooted tree with nodes stored in depth-first order, so `nodes[id].id == id`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTree {
    pub branching: Vec<usize>,
    pub seed: u64,
    pub kappa: f64,
    pub nodes: Vec<TreeNode>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for the node reached by following child indices `path` from
/// the root.
pub fn node_stream_seed(seed: u64, path: &[usize]) -> u64 {
    let mut h = splitmix64(seed);
    for &i in path {
        h = splitmix64(h ^ (i as u64 + 1).wrapping_mul(0xD6E8_FEB8_6659_FD93));
    }
    h
}

/// Number of nodes in a tree with the given branching.
pub fn node_count(branching: &[usize]) -> usize {
    let mut total = 1;
    let mut level = 1;
    for &b in branching {
        level *= b;
        total += level;
    }
    total
}

pub fn scenario_count(branching: &[usize]) -> usize {
    branching.iter().product()
}

/// Builds a tree whose first-period draws are conditioned on the
/// stationary mean of `process`.
pub fn build_tree(
    process: &VarProcess,
    branching: &[usize],
    initials: &Initials,
    seed: u64,
) -> Result<ScenarioTree, TreeError> {
    let h0 = process.stationary_mean()?;
    build_tree_from(process, branching, initials, seed, &h0)
}

/// Builds a tree conditioned on the log state `h0` at time 0. Each arc's
/// draws come from a stream keyed by `(seed, path)`, so content does not
/// depend on traversal order.
pub fn build_tree_from(
    process: &VarProcess,
    branching: &[usize],
    initials: &Initials,
    seed: u64,
    h0: &DVector<f64>,
) -> Result<ScenarioTree, TreeError> {
    if branching.is_empty() {
        return Err(TreeError::EmptyBranching);
    }
    if let Some(t) = branching.iter().position(|&b| b == 0) {
        return Err(TreeError::ZeroBranch(t));
    }
    initials.validate()?;
    if h0.len() != process.dim() {
        return Err(VarError::Dimension {
            expected: process.dim(),
            got: h0.len(),
        }
        .into());
    }
    let d = process.dim() - 1;
    let mut nodes = Vec::with_capacity(node_count(branching));
    nodes.push(TreeNode {
        id: 0,
        time: 0,
        parent: None,
        cond_prob: 1.0,
        path_prob: 1.0,
        children: Vec::new(),
        state: EconomicState {
            wage_growth: 0.0,
            gross_returns: vec![1.0; d],
            liability: initials.l0,
            wages: initials.w0,
            benefits: initials.ben0,
        },
    });
    let mut path = Vec::with_capacity(branching.len());
    expand(&mut nodes, process, branching, initials.kappa, seed, 0, h0, &mut path)?;
    Ok(ScenarioTree {
        branching: branching.to_vec(),
        seed,
        kappa: initials.kappa,
        nodes,
    })
}

#[allow(clippy::too_many_arguments)]
fn expand(
    nodes: &mut Vec<TreeNode>,
    process: &VarProcess,
    branching: &[usize],
    kappa: f64,
    seed: u64,
    id: usize,
    h: &DVector<f64>,
    path: &mut Vec<usize>,
) -> Result<(), TreeError> {
    let t = nodes[id].time;
    if t == branching.len() {
        return Ok(());
    }
    let b = branching[t];
    let cond = 1.0 / b as f64;
    for i in 0..b {
        path.push(i);
        let mut rng = ChaCha8Rng::seed_from_u64(node_stream_seed(seed, path));
        let hc = process.sample_step(h, &mut rng)?;
        let parent = &nodes[id];
        let w = hc[0].exp() - 1.0;
        let state = EconomicState {
            wage_growth: w,
            gross_returns: hc.iter().skip(1).map(|v| v.exp()).collect(),
            liability: parent.state.liability * (1.0 + w),
            wages: parent.state.wages * (1.0 + w),
            benefits: parent.state.benefits * (1.0 + kappa * w),
        };
        let child = nodes.len();
        let path_prob = parent.path_prob * cond;
        nodes.push(TreeNode {
            id: child,
            time: t + 1,
            parent: Some(id),
            cond_prob: cond,
            path_prob,
            children: Vec::new(),
            state,
        });
        nodes[id].children.push(child);
        expand(nodes, process, branching, kappa, seed, child, &hc, path)?;
        path.pop();
    }
    Ok(())
}

impl ScenarioTree {
    /// Horizon `T` (number of stages).
    pub fn horizon(&self) -> usize {
        self.branching.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Number of asset classes carried in each state.
    pub fn num_assets(&self) -> usize {
        self.nodes[0].state.gross_returns.len()
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> Result<&TreeNode, TreeError> {
        self.nodes.get(id).ok_or(TreeError::UnknownNode(id))
    }

    /// Ordered children; empty for leaves.
    pub fn children(&self, id: usize) -> Result<&[usize], TreeError> {
        Ok(&self.node(id)?.children)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn non_leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| !n.is_leaf())
    }

    pub fn nodes_at(&self, t: usize) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(move |n| n.time == t)
    }

    /// Node ids from the root down to `id`, inclusive.
    pub fn path_to(&self, id: usize) -> Result<Vec<usize>, TreeError> {
        let mut path = vec![id];
        let mut cur = self.node(id)?;
        while let Some(p) = cur.parent {
            path.push(p);
            cur = &self.nodes[p];
        }
        path.reverse();
        Ok(path)
    }

    /// `Σ_children cond_prob · f(child)`.
    pub fn conditional_expectation(
        &self,
        id: usize,
        f: impl Fn(&TreeNode) -> f64,
    ) -> Result<f64, TreeError> {
        let node = self.node(id)?;
        if node.is_leaf() {
            return Err(TreeError::LeafNode(id));
        }
        Ok(node
            .children
            .iter()
            .map(|&c| {
                let child = &self.nodes[c];
                child.cond_prob * f(child)
            })
            .sum())
    }
}
