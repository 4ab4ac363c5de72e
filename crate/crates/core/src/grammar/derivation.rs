use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::trees::{elementary_tree, factor_node, PayloadKind, TreeClass};
use super::{
    ChannelCounts, Grammar, GrammarError, LinkingArray, NodeLabel, NonlinearOp, Source,
    Terminal, TreeId,
};

/// Where a non-root instance hangs: a node of its parent's elementary tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Attachment {
    pub parent: usize,
    pub address: usize,
}

/// Target of an adjunction: node `address` of derivation instance `instance`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub instance: usize,
    pub address: usize,
}

/// Per-instance data.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Payload {
    None,
    /// Channel selection and base delay of the factor a β2/β3/β4/β5 introduces.
    Factor { link: LinkingArray, delay: u32 },
    /// Operator chosen by the initial tree substituted into β8.
    Wrap { op: NonlinearOp },
}

/// One elementary-tree instance of a derivation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instance {
    pub tree: TreeId,
    pub attach: Option<Attachment>,
    pub payload: Payload,
}

/// Derivation tree: instance 0 is the initial tree, every other instance is
/// an adjoined auxiliary tree whose parent index is smaller than its own.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DerivationTree {
    instances: Vec<Instance>,
}

impl DerivationTree {
    /// Root-only derivation over α1.
    pub fn new() -> Self {
        DerivationTree {
            instances: vec![Instance {
                tree: TreeId::Alpha1,
                attach: None,
                payload: Payload::None,
            }],
        }
    }

    /// Builds a derivation from raw instances without any checking.
    pub fn from_instances(instances: Vec<Instance>) -> Self {
        DerivationTree { instances }
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn root(&self) -> TreeId {
        self.instances[0].tree
    }

    /// Number of auxiliary-tree operations.
    pub fn complexity(&self) -> usize {
        self.instances.len().saturating_sub(1)
    }

    /// Child instances attached to `parent`, as `(address, child)` pairs.
    pub fn children(&self, parent: usize) -> Vec<(usize, usize)> {
        self.instances
            .iter()
            .enumerate()
            .filter_map(|(i, inst)| match inst.attach {
                Some(a) if a.parent == parent => Some((a.address, i)),
                _ => None,
            })
            .collect()
    }

    pub fn occupant(&self, site: Site) -> Option<usize> {
        self.instances.iter().position(|inst| {
            inst.attach
                == Some(Attachment {
                    parent: site.instance,
                    address: site.address,
                })
        })
    }

    /// Non-root instances no other instance is attached to.
    pub fn leaves(&self) -> Vec<usize> {
        let mut has_child = vec![false; self.instances.len()];
        for inst in &self.instances {
            if let Some(a) = inst.attach {
                if let Some(flag) = has_child.get_mut(a.parent) {
                    *flag = true;
                }
            }
        }
        (1..self.instances.len()).filter(|&i| !has_child[i]).collect()
    }

    /// Marks `root` and all of its descendants.
    pub fn subtree_mask(&self, root: usize) -> Vec<bool> {
        let mut mask = vec![false; self.instances.len()];
        for i in 0..self.instances.len() {
            mask[i] = i == root
                || matches!(self.instances[i].attach, Some(a) if a.parent < i && mask[a.parent]);
        }
        mask
    }

    /// Copy of the subtree rooted at `root`, re-indexed from zero; the new
    /// root's attachment is cleared.
    pub(crate) fn extract(&self, root: usize) -> Vec<Instance> {
        let mask = self.subtree_mask(root);
        let mut map = vec![usize::MAX; self.instances.len()];
        let mut out = Vec::new();
        for (i, inst) in self.instances.iter().enumerate() {
            if !mask[i] {
                continue;
            }
            map[i] = out.len();
            let attach = if i == root {
                None
            } else {
                inst.attach.map(|a| Attachment {
                    parent: map[a.parent],
                    address: a.address,
                })
            };
            out.push(Instance {
                tree: inst.tree,
                attach,
                payload: inst.payload.clone(),
            });
        }
        out
    }

    /// Removes `cut` and its descendants. Returns the old→new index map.
    pub(crate) fn prune(&self, cut: usize) -> (DerivationTree, Vec<Option<usize>>) {
        let mask = self.subtree_mask(cut);
        let mut map = vec![None; self.instances.len()];
        let mut out = Vec::with_capacity(self.instances.len());
        for (i, inst) in self.instances.iter().enumerate() {
            if mask[i] {
                continue;
            }
            map[i] = Some(out.len());
            out.push(Instance {
                tree: inst.tree,
                attach: inst.attach.map(|a| Attachment {
                    parent: map[a.parent].expect("parent precedes child"),
                    address: a.address,
                }),
                payload: inst.payload.clone(),
            });
        }
        (DerivationTree { instances: out }, map)
    }

    /// Appends an extracted subtree, hanging its root at `at`.
    pub(crate) fn graft(&mut self, at: Attachment, sub: Vec<Instance>) {
        let offset = self.instances.len();
        for (j, mut inst) in sub.into_iter().enumerate() {
            inst.attach = if j == 0 {
                Some(at)
            } else {
                inst.attach.map(|a| Attachment {
                    parent: a.parent + offset,
                    address: a.address,
                })
            };
            self.instances.push(inst);
        }
    }

    /// Same derivation with instances renumbered in depth-first order,
    /// children visited by address. Structurally equal derivations have
    /// equal canonical forms.
    pub fn canonical(&self) -> DerivationTree {
        let mut kids: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.instances.len()];
        for (i, inst) in self.instances.iter().enumerate() {
            if let Some(a) = inst.attach {
                if a.parent < kids.len() {
                    kids[a.parent].push((a.address, i));
                }
            }
        }
        for k in &mut kids {
            k.sort();
        }
        let mut order = Vec::with_capacity(self.instances.len());
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            order.push(i);
            for &(_, c) in kids[i].iter().rev() {
                stack.push(c);
            }
        }
        let mut map = vec![usize::MAX; self.instances.len()];
        for (new, &old) in order.iter().enumerate() {
            map[old] = new;
        }
        let instances = order
            .iter()
            .map(|&old| {
                let inst = &self.instances[old];
                Instance {
                    tree: inst.tree,
                    attach: inst.attach.map(|a| Attachment {
                        parent: map[a.parent],
                        address: a.address,
                    }),
                    payload: inst.payload.clone(),
                }
            })
            .collect();
        DerivationTree { instances }
    }

    pub fn same_structure(&self, other: &DerivationTree) -> bool {
        self.instances.len() == other.instances.len() && self.canonical() == other.canonical()
    }

    /// Walks from a factor-level site down to the factor instance that heads
    /// its chain. Returns the factor instance and the number of shift trees
    /// between it and the site.
    fn chain_head(&self, site: Site) -> Option<(usize, u32)> {
        let (mut i, mut addr) = (site.instance, site.address);
        let mut shifts = 0;
        loop {
            let inst = self.instances.get(i)?;
            if let Some(f) = factor_node(inst.tree) {
                return (addr == f).then_some((i, shifts));
            }
            match inst.tree {
                TreeId::Beta6 | TreeId::Beta7 if addr == 0 => {
                    shifts += 1;
                    let a = inst.attach?;
                    if a.parent >= i {
                        return None;
                    }
                    i = a.parent;
                    addr = a.address;
                }
                _ => return None,
            }
        }
    }

    fn factor_payload(&self, instance: usize) -> Option<(Source, &LinkingArray, u32)> {
        let inst = &self.instances[instance];
        match (elementary_tree(inst.tree).payload, &inst.payload) {
            (PayloadKind::Factor(src), Payload::Factor { link, delay }) => Some((src, link, *delay)),
            _ => None,
        }
    }
}

impl Default for DerivationTree {
    fn default() -> Self {
        DerivationTree::new()
    }
}

/// A violated derivation-tree invariant.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Violation {
    #[error("derivation is empty")]
    Empty,
    #[error("root must be the initial tree α1, found {0}")]
    BadRoot(TreeId),
    #[error("instance {0} is detached or the root is attached")]
    Detached(usize),
    #[error("instance {instance}: {tree} is not in the grammar")]
    NotInGrammar { instance: usize, tree: TreeId },
    #[error("instance {0}: initial tree used as an adjunction")]
    InitialAdjoined(usize),
    #[error("instance {0}: parent index must precede the child")]
    BadParent(usize),
    #[error("instance {instance}: node {address} is not an adjunction site")]
    NotASite { instance: usize, address: usize },
    #[error("instance {0}: root label does not match the site label")]
    LabelMismatch(usize),
    #[error("instance {0}: adjunction site already used by an earlier instance")]
    SiteReused(usize),
    #[error("complexity {complexity} exceeds cap {cap}")]
    Complexity { complexity: usize, cap: usize },
    #[error("instance {0}: linking array is all zero")]
    ZeroLink(usize),
    #[error("instance {0}: linking array length does not match the channel count")]
    LinkLength(usize),
    #[error("instance {instance}: factor delay {delay} outside the admissible range")]
    Delay { instance: usize, delay: u32 },
    #[error("instance {0}: payload does not match the tree")]
    Payload(usize),
    #[error("instance {instance}: operator {op:?} is not in the grammar")]
    OpNotInGrammar { instance: usize, op: NonlinearOp },
    #[error("instance {0}: shift on a factor of the wrong source")]
    ShiftSource(usize),
}

/// Derived-tree node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DerivedNode {
    pub label: NodeLabel,
    pub annotation: Annotation,
    pub children: Vec<DerivedNode>,
}

/// Payload data carried into the derived tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Annotation {
    None,
    Link(LinkingArray),
    Delay(u32),
}

/// Fully expanded syntax tree of a derivation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DerivedTree {
    pub root: DerivedNode,
    pub channels: ChannelCounts,
}

impl DerivedTree {
    /// Number of nodes, for diagnostics.
    pub fn size(&self) -> usize {
        fn count(n: &DerivedNode) -> usize {
            1 + n.children.iter().map(count).sum::<usize>()
        }
        count(&self.root)
    }
}

impl fmt::Display for DerivedNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label {
            NodeLabel::Nonterminal(n) => write!(f, "{n:?}")?,
            NodeLabel::Terminal(t) => write!(f, "{t:?}")?,
        }
        match &self.annotation {
            Annotation::None => {}
            Annotation::Link(l) => {
                let bits: String = l.bits().iter().map(|&b| if b { '1' } else { '0' }).collect();
                write!(f, "[{bits}]")?
            }
            Annotation::Delay(d) => write!(f, "[{d}]")?,
        }
        if !self.children.is_empty() {
            write!(f, "(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl Grammar {
    /// Root-only derivation for this grammar.
    pub fn root_derivation(&self) -> DerivationTree {
        DerivationTree::new()
    }

    fn check_payload(&self, tree: TreeId, payload: &Payload) -> Result<(), GrammarError> {
        let ok = match (elementary_tree(tree).payload, payload) {
            (PayloadKind::None, Payload::None) => true,
            (PayloadKind::Factor(src), Payload::Factor { link, delay }) => {
                link.len() == self.channels.of(src)
                    && !link.is_zero()
                    && *delay >= src.min_delay()
                    && *delay <= self.limits.max_delay
            }
            (PayloadKind::Wrap, Payload::Wrap { op }) => self.nonlinear_ops.contains(op),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(GrammarError::BadPayload(tree))
        }
    }

    /// Checks whether `tree` may adjoin at `site`, ignoring the payload.
    pub fn check_site(&self, d: &DerivationTree, tree: TreeId, site: Site) -> Result<(), GrammarError> {
        if !self.auxiliary_trees.contains(&tree) {
            return Err(GrammarError::NotInGrammar(tree));
        }
        let host = d
            .instances
            .get(site.instance)
            .ok_or(GrammarError::NoSuchInstance(site.instance))?;
        let host_tree = elementary_tree(host.tree);
        if !host_tree.is_site(site.address) {
            return Err(GrammarError::NotASite {
                tree: host.tree,
                address: site.address,
            });
        }
        let label = host_tree.nodes[site.address].label;
        if elementary_tree(tree).root_label() != label {
            return Err(GrammarError::LabelMismatch { tree, site: label });
        }
        if d.occupant(site).is_some() {
            return Err(GrammarError::SiteOccupied {
                instance: site.instance,
                address: site.address,
            });
        }
        if d.complexity() + 1 > self.limits.complexity {
            return Err(GrammarError::ComplexityExceeded(self.limits.complexity));
        }
        if matches!(tree, TreeId::Beta6 | TreeId::Beta7) {
            let (head, shifts) = d.chain_head(site).ok_or(GrammarError::LabelMismatch { tree, site: label })?;
            let (src, _, base) = d.factor_payload(head).ok_or(GrammarError::BadPayload(d.instances[head].tree))?;
            if tree == TreeId::Beta6 && src != Source::Xi {
                return Err(GrammarError::SourceMismatch { tree, signal: src });
            }
            if base + shifts + 1 > self.limits.max_delay {
                return Err(GrammarError::DelayExceeded(self.limits.max_delay));
            }
        }
        Ok(())
    }

    /// Adjoins `tree` at `site`, returning a new derivation. The input is
    /// left untouched.
    pub fn adjoin(
        &self,
        d: &DerivationTree,
        tree: TreeId,
        site: Site,
        payload: Payload,
    ) -> Result<DerivationTree, GrammarError> {
        self.check_site(d, tree, site)?;
        self.check_payload(tree, &payload)?;
        let mut out = d.clone();
        out.instances.push(Instance {
            tree,
            attach: Some(Attachment {
                parent: site.instance,
                address: site.address,
            }),
            payload,
        });
        Ok(out)
    }

    /// Unoccupied adjunction sites, in instance/address order.
    pub fn free_sites(&self, d: &DerivationTree) -> Vec<Site> {
        let mut used = std::collections::HashSet::new();
        for inst in &d.instances {
            if let Some(a) = inst.attach {
                used.insert((a.parent, a.address));
            }
        }
        let mut out = Vec::new();
        for (i, inst) in d.instances.iter().enumerate() {
            for &address in &elementary_tree(inst.tree).adjunction_sites {
                if !used.contains(&(i, address)) {
                    out.push(Site { instance: i, address });
                }
            }
        }
        out
    }

    /// Every `(auxiliary tree, site)` pair that may legally be adjoined next.
    pub fn legal_moves(&self, d: &DerivationTree) -> Vec<(TreeId, Site)> {
        if d.complexity() >= self.limits.complexity {
            return Vec::new();
        }
        let mut out = Vec::new();
        for site in self.free_sites(d) {
            for &tree in &self.auxiliary_trees {
                if self.check_site(d, tree, site).is_ok() {
                    out.push((tree, site));
                }
            }
        }
        out
    }

    /// Checks every derivation invariant; reports all violations.
    pub fn validate(&self, d: &DerivationTree) -> Result<(), Vec<Violation>> {
        let mut v = Vec::new();
        let Some(root) = d.instances.first() else {
            return Err(vec![Violation::Empty]);
        };
        if root.tree != TreeId::Alpha1 {
            v.push(Violation::BadRoot(root.tree));
        }
        if root.attach.is_some() {
            v.push(Violation::Detached(0));
        }
        if d.complexity() > self.limits.complexity {
            v.push(Violation::Complexity {
                complexity: d.complexity(),
                cap: self.limits.complexity,
            });
        }

        let mut used = std::collections::HashSet::new();
        for (i, inst) in d.instances.iter().enumerate() {
            if !self.contains(inst.tree) {
                v.push(Violation::NotInGrammar {
                    instance: i,
                    tree: inst.tree,
                });
            }
            match (elementary_tree(inst.tree).payload, &inst.payload) {
                (PayloadKind::None, Payload::None) => {}
                (PayloadKind::Factor(src), Payload::Factor { link, delay }) => {
                    if link.is_zero() {
                        v.push(Violation::ZeroLink(i));
                    }
                    if link.len() != self.channels.of(src) {
                        v.push(Violation::LinkLength(i));
                    }
                    if *delay < src.min_delay() || *delay > self.limits.max_delay {
                        v.push(Violation::Delay {
                            instance: i,
                            delay: *delay,
                        });
                    }
                }
                (PayloadKind::Wrap, Payload::Wrap { op }) => {
                    if !self.nonlinear_ops.contains(op) {
                        v.push(Violation::OpNotInGrammar { instance: i, op: *op });
                    }
                }
                _ => v.push(Violation::Payload(i)),
            }
            if i == 0 {
                continue;
            }
            let Some(a) = inst.attach else {
                v.push(Violation::Detached(i));
                continue;
            };
            if elementary_tree(inst.tree).class == TreeClass::Initial {
                v.push(Violation::InitialAdjoined(i));
            }
            if a.parent >= i {
                v.push(Violation::BadParent(i));
                continue;
            }
            let host = elementary_tree(d.instances[a.parent].tree);
            if !host.is_site(a.address) {
                v.push(Violation::NotASite {
                    instance: i,
                    address: a.address,
                });
                continue;
            }
            if host.nodes[a.address].label != elementary_tree(inst.tree).root_label() {
                v.push(Violation::LabelMismatch(i));
            }
            if !used.insert((a.parent, a.address)) {
                v.push(Violation::SiteReused(i));
            }
        }

        // Delay chains: total delay and shift sources.
        if v.is_empty() {
            for (i, inst) in d.instances.iter().enumerate() {
                if !matches!(inst.tree, TreeId::Beta6 | TreeId::Beta7) {
                    continue;
                }
                let a = inst.attach.expect("checked above");
                let site = Site {
                    instance: a.parent,
                    address: a.address,
                };
                match d.chain_head(site).and_then(|(h, s)| d.factor_payload(h).map(|p| (p, s))) {
                    Some(((src, _, base), shifts)) => {
                        if inst.tree == TreeId::Beta6 && src != Source::Xi {
                            v.push(Violation::ShiftSource(i));
                        }
                        let total = base + shifts + 1;
                        if total > self.limits.max_delay {
                            v.push(Violation::Delay {
                                instance: i,
                                delay: total,
                            });
                        }
                    }
                    None => v.push(Violation::LabelMismatch(i)),
                }
            }
        }

        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    /// Expands a derivation into its derived tree. The derivation must be
    /// valid under this grammar.
    pub fn derive(&self, d: &DerivationTree) -> DerivedTree {
        let mut kids: Vec<Vec<(usize, usize)>> = vec![Vec::new(); d.instances.len()];
        for (i, inst) in d.instances.iter().enumerate() {
            if let Some(a) = inst.attach {
                kids[a.parent].push((a.address, i));
            }
        }
        let mut foot = None;
        let root = expand(d, &kids, 0, 0, &mut foot);
        DerivedTree {
            root,
            channels: self.channels,
        }
    }
}

fn expand(
    d: &DerivationTree,
    kids: &[Vec<(usize, usize)>],
    inst: usize,
    node: usize,
    foot: &mut Option<DerivedNode>,
) -> DerivedNode {
    let instance = &d.instances[inst];
    let et = elementary_tree(instance.tree);
    if et.foot == Some(node) {
        return foot.take().expect("foot expanded once");
    }
    let label = et.nodes[node].label;
    let mut result = if et.substitution_site == Some(node) {
        let Payload::Wrap { op } = &instance.payload else {
            panic!("β8 without operator payload");
        };
        let selector = elementary_tree(TreeId::for_op(*op));
        DerivedNode {
            label: selector.root_label(),
            annotation: Annotation::None,
            children: vec![DerivedNode {
                label: selector.nodes[1].label,
                annotation: Annotation::None,
                children: Vec::new(),
            }],
        }
    } else {
        let children = et.nodes[node]
            .children
            .iter()
            .map(|&c| expand(d, kids, inst, c, foot))
            .collect();
        let annotation = match (&instance.payload, label) {
            (
                Payload::Factor { link, .. },
                NodeLabel::Terminal(Terminal::LinkU | Terminal::LinkY | Terminal::LinkXi),
            ) => Annotation::Link(link.clone()),
            (Payload::Factor { delay, .. }, NodeLabel::Terminal(Terminal::U | Terminal::Y | Terminal::Xi)) => {
                Annotation::Delay(*delay)
            }
            _ => Annotation::None,
        };
        DerivedNode {
            label,
            annotation,
            children,
        }
    };
    if let Some(&(_, child)) = kids[inst].iter().find(|(a, _)| *a == node) {
        let mut inner = Some(result);
        result = expand(d, kids, child, 0, &mut inner);
        debug_assert!(inner.is_none(), "foot of {} not used", d.instances[child].tree);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{build_grammar, SubModel};

    fn narx() -> Grammar {
        build_grammar(SubModel::Narx, ChannelCounts::siso(), &[]).unwrap()
    }

    fn factor(delay: u32) -> Payload {
        Payload::Factor {
            link: LinkingArray::one_hot(1, 0),
            delay,
        }
    }

    const SUM: Site = Site {
        instance: 0,
        address: 1,
    };

    #[test]
    fn single_adjunction() {
        let g = narx();
        let d0 = g.root_derivation();
        let d1 = g.adjoin(&d0, TreeId::Beta1, SUM, Payload::None).unwrap();
        assert_eq!(d1.complexity(), 1);
        assert_eq!(d0.complexity(), 0);
        assert!(g.validate(&d1).is_ok());
    }

    #[test]
    fn label_mismatch_at_par() {
        let g = narx();
        let d = g.adjoin(&g.root_derivation(), TreeId::Beta1, SUM, Payload::None).unwrap();
        // node 3 of β1 is `par`, not a site.
        let err = g
            .adjoin(
                &d,
                TreeId::Beta2,
                Site {
                    instance: 1,
                    address: 3,
                },
                factor(1),
            )
            .unwrap_err();
        assert!(matches!(err, GrammarError::NotASite { .. }));
        // a sum-level site does not accept a product-level tree
        let err = g
            .adjoin(
                &d,
                TreeId::Beta2,
                Site {
                    instance: 1,
                    address: 0,
                },
                factor(1),
            )
            .unwrap_err();
        assert!(matches!(err, GrammarError::LabelMismatch { .. }));
    }

    #[test]
    fn complexity_cap() {
        let g = narx()
            .with_limits(crate::grammar::Limits {
                complexity: 1,
                max_delay: 10,
            })
            .unwrap();
        let d = g.adjoin(&g.root_derivation(), TreeId::Beta1, SUM, Payload::None).unwrap();
        let err = g
            .adjoin(
                &d,
                TreeId::Beta4,
                Site {
                    instance: 1,
                    address: 6,
                },
                factor(1),
            )
            .unwrap_err();
        assert_eq!(err, GrammarError::ComplexityExceeded(1));
    }

    #[test]
    fn delay_cap_blocks_shift() {
        let g = narx()
            .with_limits(crate::grammar::Limits {
                complexity: 10,
                max_delay: 2,
            })
            .unwrap();
        let mut d = g.adjoin(&g.root_derivation(), TreeId::Beta1, SUM, Payload::None).unwrap();
        d = g
            .adjoin(&d, TreeId::Beta2, Site { instance: 1, address: 6 }, factor(1))
            .unwrap();
        d = g
            .adjoin(&d, TreeId::Beta7, Site { instance: 2, address: 3 }, Payload::None)
            .unwrap();
        let err = g
            .adjoin(&d, TreeId::Beta7, Site { instance: 3, address: 0 }, Payload::None)
            .unwrap_err();
        assert_eq!(err, GrammarError::DelayExceeded(2));
    }

    #[test]
    fn validate_reports_all() {
        let g = narx();
        let d = DerivationTree::from_instances(vec![
            Instance {
                tree: TreeId::Alpha1,
                attach: None,
                payload: Payload::None,
            },
            Instance {
                tree: TreeId::Beta1,
                attach: Some(Attachment { parent: 0, address: 1 }),
                payload: Payload::None,
            },
            Instance {
                tree: TreeId::Beta4,
                attach: Some(Attachment { parent: 1, address: 6 }),
                payload: Payload::Factor {
                    link: LinkingArray::from_bits_unchecked(vec![false]),
                    delay: 1,
                },
            },
            Instance {
                tree: TreeId::Beta8,
                attach: Some(Attachment { parent: 2, address: 3 }),
                payload: Payload::Wrap { op: NonlinearOp::Abs },
            },
        ]);
        let errs = g.validate(&d).unwrap_err();
        assert!(errs.contains(&Violation::ZeroLink(2)));
        assert!(errs.contains(&Violation::NotInGrammar {
            instance: 3,
            tree: TreeId::Beta8
        }));
        assert!(errs.contains(&Violation::OpNotInGrammar {
            instance: 3,
            op: NonlinearOp::Abs
        }));
    }

    #[test]
    fn derive_root_only() {
        let g = narx();
        let t = g.derive(&g.root_derivation());
        assert_eq!(t.root.to_string(), "Expr0(Expr1 Plus Xi)");
    }

    #[test]
    fn derive_lti_term() {
        let g = build_grammar(SubModel::Lti, ChannelCounts::siso(), &[]).unwrap();
        let d = g.adjoin(&g.root_derivation(), TreeId::Beta1, SUM, Payload::None).unwrap();
        let d = g
            .adjoin(&d, TreeId::Beta2, Site { instance: 1, address: 6 }, factor(1))
            .unwrap();
        let t = g.derive(&d);
        assert_eq!(
            t.root.to_string(),
            "Expr0(Expr1(Expr1 Plus Par(Coeff) Times Expr2(Expr2 Times Expr0(LinkY[1] Y[1]))) Plus Xi)"
        );
        assert_eq!(g.derive(&d), t);
    }

    #[test]
    fn canonical_ignores_insertion_order() {
        let g = narx();
        let d = g.adjoin(&g.root_derivation(), TreeId::Beta1, SUM, Payload::None).unwrap();
        let a = g
            .adjoin(&d, TreeId::Beta4, Site { instance: 1, address: 6 }, factor(1))
            .unwrap();
        let a = g
            .adjoin(&a, TreeId::Beta1, Site { instance: 1, address: 0 }, Payload::None)
            .unwrap();
        let b = g
            .adjoin(&d, TreeId::Beta1, Site { instance: 1, address: 0 }, Payload::None)
            .unwrap();
        let b = g
            .adjoin(&b, TreeId::Beta4, Site { instance: 1, address: 6 }, factor(1))
            .unwrap();
        assert_ne!(a, b);
        assert!(a.same_structure(&b));
    }

    #[test]
    fn prune_and_graft_round_trip() {
        let g = narx();
        let d = g.adjoin(&g.root_derivation(), TreeId::Beta1, SUM, Payload::None).unwrap();
        let d = g
            .adjoin(&d, TreeId::Beta4, Site { instance: 1, address: 6 }, factor(1))
            .unwrap();
        let d = g
            .adjoin(&d, TreeId::Beta7, Site { instance: 2, address: 3 }, Payload::None)
            .unwrap();
        let sub = d.extract(1);
        let at = d.instances()[1].attach.unwrap();
        let (mut stem, _) = d.prune(1);
        assert_eq!(stem.complexity(), 0);
        stem.graft(at, sub);
        assert!(stem.same_structure(&d));
        assert!(g.validate(&stem).is_ok());
    }
}
