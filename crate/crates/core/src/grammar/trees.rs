//! The elementary trees of the MIMO polynomial NARMAX grammar.
//!
//! Node indices are positions in [`ElementaryTree::nodes`]; index 0 is always
//! the root. Labels are drawn from three levels:
//!
//! * `expr1`: the sum of parameterised terms,
//! * `expr2`: the product (monomial) inside one term,
//! * `expr0`: a single signal factor, optionally shifted or wrapped.
//!
//! The root of `α1` is also labelled `expr0` (the start symbol) but it is not
//! an adjunction site, so no factor-level tree can attach to it.

use std::sync::LazyLock;

use super::{NodeLabel, Nonterminal, Terminal, TreeId};

/// Initial (α) or auxiliary (β).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TreeClass {
    Initial,
    Auxiliary,
}

/// What a derivation instance of this tree must carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PayloadKind {
    None,
    /// Linking array and base delay of the signal factor the tree introduces.
    Factor(super::Source),
    /// The initial tree substituted at the `op` node.
    Wrap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub label: NodeLabel,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementaryTree {
    pub id: TreeId,
    pub class: TreeClass,
    pub nodes: Vec<TreeNode>,
    pub foot: Option<usize>,
    pub adjunction_sites: Vec<usize>,
    /// Substitution node (β8 only).
    pub substitution_site: Option<usize>,
    pub payload: PayloadKind,
}

impl ElementaryTree {
    pub fn root_label(&self) -> NodeLabel {
        self.nodes[0].label
    }

    pub fn label(&self, node: usize) -> Option<NodeLabel> {
        self.nodes.get(node).map(|n| n.label)
    }

    pub fn is_site(&self, node: usize) -> bool {
        self.adjunction_sites.contains(&node)
    }
}

/// Returns the elementary tree for `id`.
pub fn elementary_tree(id: TreeId) -> &'static ElementaryTree {
    &TABLE[id.index()]
}

static TABLE: LazyLock<Vec<ElementaryTree>> =
    LazyLock::new(|| TreeId::ALL.iter().map(|&id| build(id)).collect());

fn nt(n: Nonterminal) -> NodeLabel {
    NodeLabel::Nonterminal(n)
}

fn t(t: Terminal) -> NodeLabel {
    NodeLabel::Terminal(t)
}

/// Flat builder: each entry is `(label, children)`.
fn nodes(spec: &[(NodeLabel, &[usize])]) -> Vec<TreeNode> {
    spec.iter()
        .map(|(label, children)| TreeNode {
            label: *label,
            children: children.to_vec(),
        })
        .collect()
}

fn factor_tree(id: TreeId, link: Terminal, signal: Terminal, source: super::Source) -> ElementaryTree {
    use Nonterminal::*;
    // expr2( expr2*, ×, expr0( L, X ) )
    ElementaryTree {
        id,
        class: TreeClass::Auxiliary,
        nodes: nodes(&[
            (nt(Expr2), &[1, 2, 3]),
            (nt(Expr2), &[]),
            (t(Terminal::Times), &[]),
            (nt(Expr0), &[4, 5]),
            (t(link), &[]),
            (t(signal), &[]),
        ]),
        foot: Some(1),
        adjunction_sites: vec![0, 3],
        substitution_site: None,
        payload: PayloadKind::Factor(source),
    }
}

fn shift_tree(id: TreeId) -> ElementaryTree {
    use Nonterminal::*;
    // expr0( q⁻¹, expr0* )
    ElementaryTree {
        id,
        class: TreeClass::Auxiliary,
        nodes: nodes(&[
            (nt(Expr0), &[1, 2]),
            (t(Terminal::Shift), &[]),
            (nt(Expr0), &[]),
        ]),
        foot: Some(2),
        adjunction_sites: vec![0],
        substitution_site: None,
        payload: PayloadKind::None,
    }
}

fn selector_tree(id: TreeId, op: Terminal) -> ElementaryTree {
    ElementaryTree {
        id,
        class: TreeClass::Initial,
        nodes: nodes(&[(nt(Nonterminal::Op), &[1]), (t(op), &[])]),
        foot: None,
        adjunction_sites: vec![],
        substitution_site: None,
        payload: PayloadKind::None,
    }
}

fn build(id: TreeId) -> ElementaryTree {
    use super::Source;
    use Nonterminal::*;
    use Terminal::*;
    match id {
        // expr0( expr1, +, Ξ )
        TreeId::Alpha1 => ElementaryTree {
            id,
            class: TreeClass::Initial,
            nodes: nodes(&[(nt(Expr0), &[1, 2, 3]), (nt(Expr1), &[]), (t(Plus), &[]), (t(Xi), &[])]),
            foot: None,
            adjunction_sites: vec![1],
            substitution_site: None,
            payload: PayloadKind::None,
        },
        TreeId::Alpha2 => selector_tree(id, NlSin),
        TreeId::Alpha3 => selector_tree(id, NlCos),
        TreeId::Alpha4 => selector_tree(id, NlAbs),
        TreeId::Alpha5 => selector_tree(id, NlInv),
        TreeId::Alpha6 => selector_tree(id, NlExp),
        // expr1( expr1*, +, par(C), ×, expr2 )
        TreeId::Beta1 => ElementaryTree {
            id,
            class: TreeClass::Auxiliary,
            nodes: nodes(&[
                (nt(Expr1), &[1, 2, 3, 5, 6]),
                (nt(Expr1), &[]),
                (t(Plus), &[]),
                (nt(Par), &[4]),
                (t(Coeff), &[]),
                (t(Times), &[]),
                (nt(Expr2), &[]),
            ]),
            foot: Some(1),
            adjunction_sites: vec![0, 6],
            substitution_site: None,
            payload: PayloadKind::None,
        },
        TreeId::Beta2 => factor_tree(id, LinkY, Y, Source::Y),
        // expr1( expr1*, +, par(C), ×, expr2( expr0( LΞ, Ξ ) ) )
        TreeId::Beta3 => ElementaryTree {
            id,
            class: TreeClass::Auxiliary,
            nodes: nodes(&[
                (nt(Expr1), &[1, 2, 3, 5, 6]),
                (nt(Expr1), &[]),
                (t(Plus), &[]),
                (nt(Par), &[4]),
                (t(Coeff), &[]),
                (t(Times), &[]),
                (nt(Expr2), &[7]),
                (nt(Expr0), &[8, 9]),
                (t(LinkXi), &[]),
                (t(Xi), &[]),
            ]),
            foot: Some(1),
            adjunction_sites: vec![0, 6, 7],
            substitution_site: None,
            payload: PayloadKind::Factor(Source::Xi),
        },
        TreeId::Beta4 => factor_tree(id, LinkU, U, Source::U),
        TreeId::Beta5 => factor_tree(id, LinkXi, Xi, Source::Xi),
        TreeId::Beta6 | TreeId::Beta7 => shift_tree(id),
        // expr0( op↓, expr0* )
        TreeId::Beta8 => ElementaryTree {
            id,
            class: TreeClass::Auxiliary,
            nodes: nodes(&[(nt(Expr0), &[1, 2]), (nt(Op), &[]), (nt(Expr0), &[])]),
            foot: Some(2),
            adjunction_sites: vec![],
            substitution_site: Some(1),
            payload: PayloadKind::Wrap,
        },
    }
}

/// Node index of the factor (`expr0`) node inside a factor-introducing tree.
pub(crate) fn factor_node(id: TreeId) -> Option<usize> {
    match id {
        TreeId::Beta2 | TreeId::Beta4 | TreeId::Beta5 => Some(3),
        TreeId::Beta3 => Some(7),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auxiliary_trees_have_matching_foot() {
        for id in TreeId::ALL {
            let tree = elementary_tree(id);
            match tree.class {
                TreeClass::Auxiliary => {
                    let foot = tree.foot.expect("auxiliary tree without foot");
                    assert_eq!(tree.nodes[foot].label, tree.root_label(), "{id}");
                    assert!(tree.nodes[foot].children.is_empty());
                    assert!(!tree.is_site(foot));
                }
                TreeClass::Initial => assert!(tree.foot.is_none(), "{id}"),
            }
        }
    }

    #[test]
    fn sites_are_nonterminal() {
        for id in TreeId::ALL {
            let tree = elementary_tree(id);
            for &s in &tree.adjunction_sites {
                assert!(tree.nodes[s].label.is_nonterminal(), "{id} site {s}");
            }
        }
    }

    #[test]
    fn start_symbol() {
        assert_eq!(
            elementary_tree(TreeId::Alpha1).root_label(),
            NodeLabel::Nonterminal(Nonterminal::Expr0)
        );
    }

    #[test]
    fn factor_nodes_point_at_expr0() {
        for id in [TreeId::Beta2, TreeId::Beta3, TreeId::Beta4, TreeId::Beta5] {
            let n = factor_node(id).unwrap();
            assert_eq!(
                elementary_tree(id).nodes[n].label,
                NodeLabel::Nonterminal(Nonterminal::Expr0)
            );
            assert!(elementary_tree(id).is_site(n));
        }
    }
}
