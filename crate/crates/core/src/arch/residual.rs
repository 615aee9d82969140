//! Residual stages over the 24-vector of preliminary forecasts.
//!
//! Both stages are expressed as a small DAG of [`Node`]s: residual blocks
//! computing `F(x) + x`, and merge nodes averaging all their inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, DenseCache, DenseLayer, JobRng, Parameters};
use crate::HOURS;

use super::{hidden_backward, hidden_forward, Dropout, LayerCache};

/// Hidden width inside each residual block.
pub const BLOCK_HIDDEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResNetConfig {
    pub num_blocks: usize,
    /// Every this many blocks, the group's entry is averaged into its exit.
    /// `None` disables the second-level shortcuts.
    pub inner_shortcut_every: Option<usize>,
    /// Average the network input into the final output.
    pub outer_shortcut: bool,
}

impl Default for ResNetConfig {
    fn default() -> Self {
        Self {
            num_blocks: 30,
            inner_shortcut_every: Some(5),
            outer_shortcut: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResNetPlusConfig {
    /// Residual blocks on the main path; each layer also has a side block.
    pub num_layers: usize,
}

impl Default for ResNetPlusConfig {
    fn default() -> Self {
        Self { num_layers: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ResidualStageConfig {
    None,
    #[serde(rename = "resnet")]
    ResNet(ResNetConfig),
    #[serde(rename = "resnetplus")]
    ResNetPlus(ResNetPlusConfig),
}

impl ResidualStageConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ResidualStageConfig::None => Ok(()),
            ResidualStageConfig::ResNet(c) => {
                if c.num_blocks == 0 {
                    return Err(Error::Config("ResNet needs at least one block".into()));
                }
                match c.inner_shortcut_every {
                    Some(0) => Err(Error::Config("inner_shortcut_every must be positive".into())),
                    Some(g) if c.num_blocks % g != 0 => Err(Error::Config(format!(
                        "num_blocks {} is not divisible by inner_shortcut_every {g}",
                        c.num_blocks
                    ))),
                    _ => Ok(()),
                }
            }
            ResidualStageConfig::ResNetPlus(c) => {
                if c.num_layers == 0 {
                    Err(Error::Config("ResNetPlus needs at least one layer".into()))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// `x -> F(x) + x` with `F` = linear(24 -> 20) + activation, linear(20 -> 24).
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    pub hidden: DenseLayer,
    pub output: DenseLayer,
}

#[derive(Debug, Clone)]
pub struct BlockCache {
    hidden: LayerCache,
    output: DenseCache,
}

impl ResidualBlock {
    pub fn new(activation: Activation) -> Self {
        Self {
            hidden: DenseLayer::new(HOURS, BLOCK_HIDDEN, activation),
            output: DenseLayer::new(BLOCK_HIDDEN, HOURS, Activation::Identity),
        }
    }

    /// The residual branch `F(x)` alone.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (h, _) = self.hidden.forward(x)?;
        Ok(self.output.forward(&h)?.0)
    }

    pub fn forward(&self, x: &[f64], dropout: Option<&mut Dropout<'_>>) -> Result<(Vec<f64>, BlockCache)> {
        if x.len() != HOURS {
            return Err(Error::shape("residual block input", HOURS, x.len()));
        }
        let (h, hidden) = hidden_forward(&self.hidden, x, dropout)?;
        let (mut y, output) = self.output.forward(&h)?;
        for (a, b) in y.iter_mut().zip(x) {
            *a += b;
        }
        Ok((y, BlockCache { hidden, output }))
    }

    pub fn backward(&self, cache: &BlockCache, upstream: &[f64], grads: &mut ResidualBlock) -> Result<Vec<f64>> {
        let dh = self.output.backward_into(&cache.output, upstream, &mut grads.output)?;
        let mut dx = hidden_backward(&self.hidden, &cache.hidden, &dh, &mut grads.hidden)?;
        for (a, b) in dx.iter_mut().zip(upstream) {
            *a += b;
        }
        Ok(dx)
    }

    fn zeros_like(&self) -> Self {
        Self {
            hidden: self.hidden.zeros_like(),
            output: self.output.zeros_like(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Input,
    /// Residual block `block` applied to the value of node `from`.
    Block { block: usize, from: usize },
    /// Uniform average of the listed nodes.
    Mean(Vec<usize>),
}

/// Topologically ordered residual DAG; node 0 is the input and the last
/// node is the output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualGraph {
    pub nodes: Vec<Node>,
}

impl ResidualGraph {
    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn output(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of incoming connections of a node.
    pub fn fan_in(&self, node: usize) -> usize {
        match &self.nodes[node] {
            Node::Input => 0,
            Node::Block { .. } => 1,
            Node::Mean(inputs) => inputs.len(),
        }
    }

    /// Plain residual stack with averaged group and outer shortcuts.
    pub fn resnet(cfg: &ResNetConfig) -> Self {
        let mut g = ResidualGraph { nodes: vec![Node::Input] };
        let input = 0;
        let mut cur = input;
        let mut group_entry = input;
        // Whether the output node already averages in the stage input.
        let mut output_has_input = false;
        for b in 0..cfg.num_blocks {
            cur = g.push(Node::Block { block: b, from: cur });
            if let Some(every) = cfg.inner_shortcut_every {
                if (b + 1) % every == 0 {
                    let last = b + 1 == cfg.num_blocks;
                    let mut inputs = vec![cur, group_entry];
                    if last && cfg.outer_shortcut && group_entry != input {
                        inputs.push(input);
                    }
                    output_has_input = last && inputs.contains(&input);
                    cur = g.push(Node::Mean(inputs));
                    group_entry = cur;
                }
            }
        }
        if cfg.outer_shortcut && !output_has_input {
            g.push(Node::Mean(vec![cur, input]));
        }
        g
    }

    /// Main path plus side blocks with dense averaged connections.
    ///
    /// Layer 1: main block and side block both read the input; their outputs
    /// are averaged at merge node R1. Layer l >= 2: the main block reads the
    /// average of the input and R1..R(l-1); the side block reads the output
    /// of the first main block; the two outputs are averaged into Rl. The
    /// output is the last merge node. Blocks are numbered main, side per layer.
    pub fn resnet_plus(cfg: &ResNetPlusConfig) -> Self {
        let mut g = ResidualGraph { nodes: vec![Node::Input] };
        let input = 0;
        let mut merges: Vec<usize> = Vec::new();
        let mut first_main = input;
        for l in 0..cfg.num_layers {
            let main_in = if l == 0 {
                input
            } else {
                let mut inputs = vec![input];
                inputs.extend(&merges);
                g.push(Node::Mean(inputs))
            };
            let main = g.push(Node::Block { block: 2 * l, from: main_in });
            if l == 0 {
                first_main = main;
            }
            let side_in = if l == 0 { input } else { first_main };
            let side = g.push(Node::Block { block: 2 * l + 1, from: side_in });
            merges.push(g.push(Node::Mean(vec![main, side])));
        }
        g
    }

    pub fn num_blocks(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Block { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStage {
    pub config: ResidualStageConfig,
    pub blocks: Vec<ResidualBlock>,
    pub graph: ResidualGraph,
}

#[derive(Debug, Clone)]
pub struct StageCache {
    blocks: Vec<Option<BlockCache>>,
}

impl ResidualStage {
    /// Zero-weighted stage; `None` for [`ResidualStageConfig::None`].
    pub fn zeroed(config: ResidualStageConfig, activation: Activation) -> Result<Option<Self>> {
        config.validate()?;
        let graph = match &config {
            ResidualStageConfig::None => return Ok(None),
            ResidualStageConfig::ResNet(c) => ResidualGraph::resnet(c),
            ResidualStageConfig::ResNetPlus(c) => ResidualGraph::resnet_plus(c),
        };
        let blocks = (0..graph.num_blocks()).map(|_| ResidualBlock::new(activation)).collect();
        Ok(Some(Self { config, blocks, graph }))
    }

    pub fn initialize(&mut self, rng: &mut JobRng) {
        for b in &mut self.blocks {
            b.hidden.init_lecun(rng);
            b.output.init_lecun(rng);
        }
    }

    pub fn forward(&self, x0: &[f64], mut dropout: Option<&mut Dropout<'_>>) -> Result<(Vec<f64>, StageCache)> {
        if x0.len() != HOURS {
            return Err(Error::shape("residual stage input", HOURS, x0.len()));
        }
        let mut values: Vec<Vec<f64>> = Vec::with_capacity(self.graph.nodes.len());
        let mut caches: Vec<Option<BlockCache>> = vec![None; self.blocks.len()];
        for node in &self.graph.nodes {
            let v = match node {
                Node::Input => x0.to_vec(),
                Node::Block { block, from } => {
                    let (y, cache) = self.blocks[*block].forward(&values[*from], dropout.as_deref_mut())?;
                    caches[*block] = Some(cache);
                    y
                }
                Node::Mean(inputs) => {
                    let w = 1.0 / inputs.len() as f64;
                    let mut acc = vec![0.0; HOURS];
                    for &i in inputs {
                        for (a, b) in acc.iter_mut().zip(&values[i]) {
                            *a += b;
                        }
                    }
                    acc.iter_mut().for_each(|a| *a *= w);
                    acc
                }
            };
            values.push(v);
        }
        let out = values.pop().expect("graph has an output");
        Ok((out, StageCache { blocks: caches }))
    }

    /// Accumulates block gradients and returns d loss / d input.
    pub fn backward(&self, cache: &StageCache, upstream: &[f64], grads: &mut ResidualStage) -> Result<Vec<f64>> {
        if upstream.len() != HOURS {
            return Err(Error::shape("residual stage gradient", HOURS, upstream.len()));
        }
        let n = self.graph.nodes.len();
        let mut d: Vec<Vec<f64>> = vec![vec![0.0; HOURS]; n];
        d[n - 1].copy_from_slice(upstream);
        for idx in (1..n).rev() {
            let g = std::mem::take(&mut d[idx]);
            match &self.graph.nodes[idx] {
                Node::Input => unreachable!("only node 0 is the input"),
                Node::Block { block, from } => {
                    let c = cache.blocks[*block]
                        .as_ref()
                        .ok_or_else(|| Error::Contract("missing residual block cache".into()))?;
                    let dx = self.blocks[*block].backward(c, &g, &mut grads.blocks[*block])?;
                    for (a, b) in d[*from].iter_mut().zip(&dx) {
                        *a += b;
                    }
                }
                Node::Mean(inputs) => {
                    let w = 1.0 / inputs.len() as f64;
                    for &i in inputs {
                        for (a, b) in d[i].iter_mut().zip(&g) {
                            *a += w * b;
                        }
                    }
                }
            }
        }
        Ok(std::mem::take(&mut d[0]))
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config,
            blocks: self.blocks.iter().map(ResidualBlock::zeros_like).collect(),
            graph: self.graph.clone(),
        }
    }

    fn block_name(&self, b: usize) -> String {
        match self.config {
            ResidualStageConfig::ResNetPlus(_) => {
                let path = if b.is_multiple_of(2) { "main" } else { "side" };
                format!("stage.{path}{:02}", b / 2 + 1)
            }
            _ => format!("stage.block{:02}", b + 1),
        }
    }
}

impl Parameters for ResidualStage {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
        for (b, block) in self.blocks.iter().enumerate() {
            let name = self.block_name(b);
            block.hidden.visit(&mut |p, s| f(&format!("{name}.hidden.{p}"), s));
            block.output.visit(&mut |p, s| f(&format!("{name}.output.{p}"), s));
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        for b in 0..self.blocks.len() {
            let name = self.block_name(b);
            let block = &mut self.blocks[b];
            block.hidden.visit_mut(&mut |p, s| f(&format!("{name}.hidden.{p}"), s));
            block.output.visit_mut(&mut |p, s| f(&format!("{name}.output.{p}"), s));
        }
    }
}
