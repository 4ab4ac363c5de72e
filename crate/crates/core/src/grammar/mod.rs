//! Tree-adjoining grammar for MIMO polynomial NARMAX model structures.
//!
//! A [`Grammar`] is a set of elementary trees (see [`trees`]) plus the
//! limits that bound derivations built from it: the complexity cap (number
//! of auxiliary trees) and the largest admissible signal delay. Derivation
//! trees are the GP genotype; they are built with [`Grammar::adjoin`] or
//! [`Grammar::random_derivation`] and expanded with [`Grammar::derive`].

mod derivation;
mod random;
pub mod trees;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use derivation::{
    Annotation, Attachment, DerivationTree, DerivedNode, DerivedTree, Instance, Payload, Site, Violation,
};
pub use trees::{elementary_tree, ElementaryTree, PayloadKind, TreeClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nonterminal {
    Expr0,
    Expr1,
    Expr2,
    Op,
    Par,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Terminal {
    U,
    Y,
    Xi,
    Plus,
    Coeff,
    Times,
    Shift,
    LinkU,
    LinkY,
    LinkXi,
    NlSin,
    NlCos,
    NlAbs,
    NlInv,
    NlExp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeLabel {
    Nonterminal(Nonterminal),
    Terminal(Terminal),
}

impl NodeLabel {
    pub fn is_nonterminal(self) -> bool {
        matches!(self, NodeLabel::Nonterminal(_))
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, NodeLabel::Terminal(_))
    }
}

/// Identifier of an elementary tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeId {
    Alpha1,
    Alpha2,
    Alpha3,
    Alpha4,
    Alpha5,
    Alpha6,
    Beta1,
    Beta2,
    Beta3,
    Beta4,
    Beta5,
    Beta6,
    Beta7,
    Beta8,
}

impl TreeId {
    pub const ALL: [TreeId; 14] = [
        TreeId::Alpha1,
        TreeId::Alpha2,
        TreeId::Alpha3,
        TreeId::Alpha4,
        TreeId::Alpha5,
        TreeId::Alpha6,
        TreeId::Beta1,
        TreeId::Beta2,
        TreeId::Beta3,
        TreeId::Beta4,
        TreeId::Beta5,
        TreeId::Beta6,
        TreeId::Beta7,
        TreeId::Beta8,
    ];

    pub(crate) fn index(self) -> usize {
        self as usize
    }

    pub fn is_initial(self) -> bool {
        self.index() < 6
    }

    /// The selector tree that substitutes `op` into β8.
    pub fn for_op(op: NonlinearOp) -> TreeId {
        match op {
            NonlinearOp::Sin => TreeId::Alpha2,
            NonlinearOp::Cos => TreeId::Alpha3,
            NonlinearOp::Abs => TreeId::Alpha4,
            NonlinearOp::Inv => TreeId::Alpha5,
            NonlinearOp::Exp => TreeId::Alpha6,
        }
    }

    pub fn selected_op(self) -> Option<NonlinearOp> {
        match self {
            TreeId::Alpha2 => Some(NonlinearOp::Sin),
            TreeId::Alpha3 => Some(NonlinearOp::Cos),
            TreeId::Alpha4 => Some(NonlinearOp::Abs),
            TreeId::Alpha5 => Some(NonlinearOp::Inv),
            TreeId::Alpha6 => Some(NonlinearOp::Exp),
            _ => None,
        }
    }
}

impl fmt::Display for TreeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = self.index();
        if i < 6 {
            write!(f, "α{}", i + 1)
        } else {
            write!(f, "β{}", i - 5)
        }
    }
}

/// Signal family a factor reads from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "u")]
    U,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "xi")]
    Xi,
}

impl Source {
    /// Smallest delay a factor of this source may carry.
    pub fn min_delay(self) -> u32 {
        match self {
            Source::U => 0,
            Source::Y | Source::Xi => 1,
        }
    }

    pub fn prefix(self) -> &'static str {
        match self {
            Source::U => "u",
            Source::Y => "y",
            Source::Xi => "xi",
        }
    }
}

/// Pointwise nonlinearity applied to a signal factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearOp {
    Sin,
    Cos,
    Abs,
    Inv,
    Exp,
}

impl NonlinearOp {
    pub const ALL: [NonlinearOp; 5] = [
        NonlinearOp::Sin,
        NonlinearOp::Cos,
        NonlinearOp::Abs,
        NonlinearOp::Inv,
        NonlinearOp::Exp,
    ];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            NonlinearOp::Sin => x.sin(),
            NonlinearOp::Cos => x.cos(),
            NonlinearOp::Abs => x.abs(),
            NonlinearOp::Inv => 1.0 / x,
            NonlinearOp::Exp => x.exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NonlinearOp::Sin => "sin",
            NonlinearOp::Cos => "cos",
            NonlinearOp::Abs => "abs",
            NonlinearOp::Inv => "inv",
            NonlinearOp::Exp => "exp",
        }
    }
}

impl FromStr for NonlinearOp {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NonlinearOp::ALL
            .into_iter()
            .find(|op| op.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| GrammarError::UnknownOp(s.to_string()))
    }
}

/// A nonzero 0/1 channel selector.
///
/// The selected channels of a multichannel signal are summed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkingArray(Vec<bool>);

impl LinkingArray {
    /// Builds a linking array; rejects the all-zero vector and empty input.
    pub fn new(bits: Vec<bool>) -> Result<Self, GrammarError> {
        if bits.iter().any(|&b| b) {
            Ok(LinkingArray(bits))
        } else {
            Err(GrammarError::ZeroLink)
        }
    }

    /// Unchecked constructor for validation tests.
    pub fn from_bits_unchecked(bits: Vec<bool>) -> Self {
        LinkingArray(bits)
    }

    pub fn one_hot(len: usize, channel: usize) -> Self {
        let mut bits = vec![false; len];
        bits[channel] = true;
        LinkingArray(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    /// Indices of the selected channels.
    pub fn channels(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// Channel dimensions of input, output and noise signals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelCounts {
    pub inputs: usize,
    pub outputs: usize,
    pub noise: usize,
}

impl ChannelCounts {
    pub fn new(inputs: usize, outputs: usize, noise: usize) -> Self {
        ChannelCounts {
            inputs,
            outputs,
            noise,
        }
    }

    /// SISO counts.
    pub fn siso() -> Self {
        ChannelCounts::new(1, 1, 1)
    }

    pub fn of(&self, source: Source) -> usize {
        match source {
            Source::U => self.inputs,
            Source::Y => self.outputs,
            Source::Xi => self.noise,
        }
    }
}

/// Bounds every derivation of a grammar must respect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Maximum number of auxiliary trees in a derivation.
    pub complexity: usize,
    /// Maximum delay of any signal factor.
    pub max_delay: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            complexity: 150,
            max_delay: 10,
        }
    }
}

/// Named sub-model sets, or an explicit tree list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubModel {
    Ip,
    Lti,
    Narx,
    Narmax,
    ExtNarx,
    ExpNarx,
    Custom(Vec<TreeId>),
}

impl SubModel {
    pub fn name(&self) -> &'static str {
        match self {
            SubModel::Ip => "IP",
            SubModel::Lti => "LTI",
            SubModel::Narx => "NARX",
            SubModel::Narmax => "NARMAX",
            SubModel::ExtNarx => "extNARX",
            SubModel::ExpNarx => "expNARX",
            SubModel::Custom(_) => "custom",
        }
    }

    /// Trees of the named set excluding the op selectors, and the default
    /// selector set for the wrap-capable rows.
    fn base(&self) -> Option<(&'static [TreeId], &'static [NonlinearOp])> {
        use TreeId::*;
        Some(match self {
            SubModel::Ip => (&[Alpha1, Beta1, Beta4], &[]),
            SubModel::Lti => (&[Alpha1, Beta1, Beta2, Beta7], &[]),
            SubModel::Narx => (&[Alpha1, Beta1, Beta2, Beta4, Beta5, Beta7], &[]),
            SubModel::Narmax => (
                &[Alpha1, Beta1, Beta2, Beta3, Beta4, Beta5, Beta6, Beta7],
                &[],
            ),
            SubModel::ExtNarx => (
                &[Alpha1, Beta1, Beta2, Beta4, Beta5, Beta7, Beta8],
                &[NonlinearOp::Sin, NonlinearOp::Cos, NonlinearOp::Abs],
            ),
            SubModel::ExpNarx => (
                &[Alpha1, Beta1, Beta2, Beta4, Beta5, Beta7, Beta8],
                &[NonlinearOp::Inv, NonlinearOp::Exp],
            ),
            SubModel::Custom(_) => return None,
        })
    }
}

impl FromStr for SubModel {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "ip" | "inputpoly" => SubModel::Ip,
            "lti" => SubModel::Lti,
            "narx" | "polynarx" => SubModel::Narx,
            "narmax" => SubModel::Narmax,
            "extnarx" => SubModel::ExtNarx,
            "expnarx" => SubModel::ExpNarx,
            _ => return Err(GrammarError::UnknownGrammar(s.to_string())),
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrammarError {
    #[error("unknown grammar `{0}`")]
    UnknownGrammar(String),
    #[error("unknown nonlinear operator `{0}`")]
    UnknownOp(String),
    #[error("channel counts must be at least 1, got {0:?}")]
    BadChannels(ChannelCounts),
    #[error("noise channel count ({noise}) must equal output channel count ({outputs})")]
    NoiseChannels { noise: usize, outputs: usize },
    #[error("custom grammar needs the initial tree α1")]
    MissingInitialTree,
    #[error("β8 requires at least one nonlinear operator")]
    WrapWithoutOps,
    #[error("nonlinear operators given but the grammar has no β8")]
    OpsWithoutWrap,
    #[error("operator `{op}` is not part of the {grammar} grammar")]
    UnsupportedOp { op: &'static str, grammar: &'static str },
    #[error("linking array must select at least one channel")]
    ZeroLink,
    #[error("complexity must be at least 1 and max_delay at least 1")]
    BadLimits,
    #[error("no instance {0} in derivation tree")]
    NoSuchInstance(usize),
    #[error("node {address} of {tree} is not an adjunction site")]
    NotASite { tree: TreeId, address: usize },
    #[error("site {address} of instance {instance} is already used")]
    SiteOccupied { instance: usize, address: usize },
    #[error("label mismatch: {tree} cannot adjoin at a {site:?} node")]
    LabelMismatch { tree: TreeId, site: NodeLabel },
    #[error("{0} is not an auxiliary tree of this grammar")]
    NotInGrammar(TreeId),
    #[error("complexity cap {0} exceeded")]
    ComplexityExceeded(usize),
    #[error("delay cap {0} exceeded")]
    DelayExceeded(u32),
    #[error("{tree} cannot adjoin on a factor of source {signal:?}")]
    SourceMismatch { tree: TreeId, signal: Source },
    #[error("invalid payload for {0}")]
    BadPayload(TreeId),
}

/// A sub-model grammar together with the derivation limits.
#[derive(Clone, Debug, PartialEq)]
pub struct Grammar {
    name: &'static str,
    channels: ChannelCounts,
    limits: Limits,
    initial_trees: Vec<TreeId>,
    auxiliary_trees: Vec<TreeId>,
    nonlinear_ops: Vec<NonlinearOp>,
}

/// Builds a sub-model grammar with default [`Limits`].
pub fn build_grammar(
    model: SubModel,
    channels: ChannelCounts,
    nonlinear_ops: &[NonlinearOp],
) -> Result<Grammar, GrammarError> {
    if channels.inputs == 0 || channels.outputs == 0 || channels.noise == 0 {
        return Err(GrammarError::BadChannels(channels));
    }
    if channels.noise != channels.outputs {
        return Err(GrammarError::NoiseChannels {
            noise: channels.noise,
            outputs: channels.outputs,
        });
    }

    let mut ops: Vec<NonlinearOp> = nonlinear_ops.to_vec();
    let mut trees: Vec<TreeId> = match &model {
        SubModel::Custom(list) => {
            if !list.contains(&TreeId::Alpha1) {
                return Err(GrammarError::MissingInitialTree);
            }
            ops.extend(list.iter().filter_map(|t| t.selected_op()));
            list.iter().copied().filter(|t| t.selected_op().is_none()).collect()
        }
        named => {
            let (base, defaults) = named.base().expect("named grammar");
            if base.contains(&TreeId::Beta8) {
                if ops.is_empty() {
                    ops = defaults.to_vec();
                } else if let Some(op) = ops.iter().find(|op| !defaults.contains(op)) {
                    return Err(GrammarError::UnsupportedOp {
                        op: op.name(),
                        grammar: named.name(),
                    });
                }
            }
            base.to_vec()
        }
    };
    ops.sort();
    ops.dedup();

    let has_wrap = trees.contains(&TreeId::Beta8);
    match (has_wrap, ops.is_empty()) {
        (true, true) => return Err(GrammarError::WrapWithoutOps),
        (false, false) => return Err(GrammarError::OpsWithoutWrap),
        _ => {}
    }
    trees.extend(ops.iter().map(|&op| TreeId::for_op(op)));
    trees.sort();
    trees.dedup();

    let (initial_trees, auxiliary_trees) = trees.into_iter().partition(|t| t.is_initial());
    Ok(Grammar {
        name: model.name(),
        channels,
        limits: Limits::default(),
        initial_trees,
        auxiliary_trees,
        nonlinear_ops: ops,
    })
}

impl Grammar {
    pub fn with_limits(mut self, limits: Limits) -> Result<Self, GrammarError> {
        if limits.complexity == 0 || limits.max_delay == 0 {
            return Err(GrammarError::BadLimits);
        }
        self.limits = limits;
        Ok(self)
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn channels(&self) -> ChannelCounts {
        self.channels
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn initial_trees(&self) -> &[TreeId] {
        &self.initial_trees
    }

    pub fn auxiliary_trees(&self) -> &[TreeId] {
        &self.auxiliary_trees
    }

    pub fn nonlinear_ops(&self) -> &[NonlinearOp] {
        &self.nonlinear_ops
    }

    /// All tree ids, sorted.
    pub fn tree_ids(&self) -> Vec<TreeId> {
        let mut ids: Vec<TreeId> = self
            .initial_trees
            .iter()
            .chain(&self.auxiliary_trees)
            .copied()
            .collect();
        ids.sort();
        ids
    }

    pub fn contains(&self, id: TreeId) -> bool {
        self.initial_trees.contains(&id) || self.auxiliary_trees.contains(&id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TreeId::*;

    fn ids(g: &Grammar) -> Vec<TreeId> {
        g.tree_ids()
    }

    #[test]
    fn table_rows() {
        let c = ChannelCounts::siso();
        let rows: [(SubModel, Vec<TreeId>); 5] = [
            (SubModel::Ip, vec![Alpha1, Beta1, Beta4]),
            (SubModel::Lti, vec![Alpha1, Beta1, Beta2, Beta7]),
            (SubModel::Narx, vec![Alpha1, Beta1, Beta2, Beta4, Beta5, Beta7]),
            (
                SubModel::ExtNarx,
                vec![Alpha1, Alpha2, Alpha3, Alpha4, Beta1, Beta2, Beta4, Beta5, Beta7, Beta8],
            ),
            (
                SubModel::ExpNarx,
                vec![Alpha1, Alpha5, Alpha6, Beta1, Beta2, Beta4, Beta5, Beta7, Beta8],
            ),
        ];
        for (model, expected) in rows {
            let name = model.name();
            let g = build_grammar(model, c, &[]).unwrap();
            assert_eq!(ids(&g), expected, "{name}");
        }
    }

    #[test]
    fn exp_narx_mimo_with_explicit_ops() {
        let g = build_grammar(
            SubModel::ExpNarx,
            ChannelCounts::new(3, 2, 2),
            &[NonlinearOp::Inv, NonlinearOp::Exp],
        )
        .unwrap();
        assert_eq!(
            ids(&g),
            vec![Alpha1, Alpha5, Alpha6, Beta1, Beta2, Beta4, Beta5, Beta7, Beta8]
        );
        assert_eq!(g.nonlinear_ops(), &[NonlinearOp::Inv, NonlinearOp::Exp]);
    }

    #[test]
    fn narmax_adds_noise_trees() {
        let g = build_grammar(SubModel::Narmax, ChannelCounts::siso(), &[]).unwrap();
        for t in [Beta3, Beta5, Beta6] {
            assert!(g.contains(t));
        }
        assert!(!g.contains(Beta8));
    }

    #[test]
    fn errors() {
        let c = ChannelCounts::siso();
        assert_eq!("ARMAX".parse::<SubModel>(), Err(GrammarError::UnknownGrammar("ARMAX".into())));
        assert_eq!(
            build_grammar(SubModel::Custom(vec![Beta1, Beta2]), c, &[]),
            Err(GrammarError::MissingInitialTree)
        );
        assert_eq!(
            build_grammar(SubModel::Custom(vec![Alpha1, Beta1, Beta8]), c, &[]),
            Err(GrammarError::WrapWithoutOps)
        );
        assert_eq!(
            build_grammar(SubModel::Narx, c, &[NonlinearOp::Abs]),
            Err(GrammarError::OpsWithoutWrap)
        );
        assert!(matches!(
            build_grammar(SubModel::ExtNarx, c, &[NonlinearOp::Exp]),
            Err(GrammarError::UnsupportedOp { .. })
        ));
        assert!(matches!(
            build_grammar(SubModel::Narx, ChannelCounts::new(0, 1, 1), &[]),
            Err(GrammarError::BadChannels(_))
        ));
    }

    #[test]
    fn custom_with_selectors() {
        let g = build_grammar(
            SubModel::Custom(vec![Alpha1, Beta1, Beta4, Beta8, Alpha4]),
            ChannelCounts::siso(),
            &[],
        )
        .unwrap();
        assert_eq!(g.nonlinear_ops(), &[NonlinearOp::Abs]);
        assert_eq!(g.initial_trees(), &[Alpha1, Alpha4]);
    }

    #[test]
    fn parse_names() {
        assert_eq!("NARX".parse::<SubModel>().unwrap(), SubModel::Narx);
        assert_eq!("extNARX".parse::<SubModel>().unwrap(), SubModel::ExtNarx);
        assert_eq!("exp-narx".parse::<SubModel>().unwrap(), SubModel::ExpNarx);
        assert_eq!("abs".parse::<NonlinearOp>().unwrap(), NonlinearOp::Abs);
    }

    #[test]
    fn linking_array_rejects_zero() {
        assert_eq!(LinkingArray::new(vec![false, false]), Err(GrammarError::ZeroLink));
        let l = LinkingArray::new(vec![false, true, true]).unwrap();
        assert_eq!(l.channels().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn display_ids() {
        assert_eq!(Alpha1.to_string(), "α1");
        assert_eq!(Beta8.to_string(), "β8");
    }
}
