//! Genetic operators on derivation trees.

use rand::Rng;

use crate::grammar::{elementary_tree, Attachment, DerivationTree, Grammar};

/// Split-point pairs tried before crossover falls back to the parents.
pub const CROSSOVER_RETRIES: usize = 20;

/// Swaps a subtree of each parent with a subtree of the other. A split point
/// is a non-root instance; a pair qualifies when both subtree roots carry
/// the same root label, so each tail can adjoin where the other was cut.
/// Offspring that fail validation are redrawn; after
/// [`CROSSOVER_RETRIES`] failures the parents are returned unchanged.
pub fn crossover<R: Rng + ?Sized>(
    g: &Grammar,
    a: &DerivationTree,
    b: &DerivationTree,
    rng: &mut R,
) -> (DerivationTree, DerivationTree) {
    if a.same_structure(b) {
        return (a.clone(), b.clone());
    }
    let label = |d: &DerivationTree, i: usize| elementary_tree(d.instances()[i].tree).root_label();
    let mut pairs: Vec<(usize, usize)> = (1..a.instances().len())
        .flat_map(|i| (1..b.instances().len()).map(move |j| (i, j)))
        .filter(|&(i, j)| label(a, i) == label(b, j))
        .collect();
    for _ in 0..CROSSOVER_RETRIES {
        if pairs.is_empty() {
            break;
        }
        let (i, j) = pairs.swap_remove(rng.random_range(0..pairs.len()));
        let c1 = splice(a, i, b, j);
        let c2 = splice(b, j, a, i);
        if g.validate(&c1).is_ok() && g.validate(&c2).is_ok() {
            return (c1, c2);
        }
    }
    (a.clone(), b.clone())
}

/// The stem of `stem_src` without subtree `cut`, with the subtree of
/// `tail_src` rooted at `tail_root` adjoined in its place.
fn splice(stem_src: &DerivationTree, cut: usize, tail_src: &DerivationTree, tail_root: usize) -> DerivationTree {
    let at = stem_src.instances()[cut].attach.expect("split points are non-root");
    let (mut stem, map) = stem_src.prune(cut);
    let at = Attachment {
        parent: map[at.parent].expect("parent survives the cut"),
        address: at.address,
    };
    stem.graft(at, tail_src.extract(tail_root));
    stem
}

/// Adds one random legal adjunction or deletes one leaf operation, each
/// with probability ½. When the drawn direction has no legal move the other
/// one is taken.
pub fn mutate<R: Rng + ?Sized>(g: &Grammar, d: &DerivationTree, rng: &mut R) -> DerivationTree {
    let add_first = rng.random_bool(0.5);
    for add in [add_first, !add_first] {
        if add {
            if let Some(t) = g.grow(d, rng) {
                return t;
            }
        } else {
            let mut leaves = d.leaves();
            while !leaves.is_empty() {
                let leaf = leaves.swap_remove(rng.random_range(0..leaves.len()));
                let (t, _) = d.prune(leaf);
                if g.validate(&t).is_ok() {
                    return t;
                }
            }
        }
    }
    d.clone()
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::grammar::{build_grammar, ChannelCounts, Limits, SubModel};

    fn narx() -> Grammar {
        build_grammar(SubModel::Narx, ChannelCounts::siso(), &[]).unwrap()
    }

    #[test]
    fn self_crossover_copies() {
        let g = narx();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let d = g.random_derivation(12, &mut rng);
            let (x, y) = crossover(&g, &d, &d.clone(), &mut rng);
            assert!(x.same_structure(&d) && y.same_structure(&d));
        }
    }

    #[test]
    fn crossover_preserves_total_size() {
        let g = narx();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut swapped = 0;
        for _ in 0..300 {
            let a = g.random_derivation(10, &mut rng);
            let b = g.random_derivation(10, &mut rng);
            let (x, y) = crossover(&g, &a, &b, &mut rng);
            assert_eq!(x.complexity() + y.complexity(), a.complexity() + b.complexity());
            swapped += usize::from(!x.same_structure(&a));
        }
        assert!(swapped > 100, "{swapped}");
    }

    #[test]
    fn crossover_respects_cap() {
        let g = narx().with_limits(Limits { complexity: 8, max_delay: 10 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let a = g.random_derivation(8, &mut rng);
            let b = g.random_derivation(8, &mut rng);
            let (x, y) = crossover(&g, &a, &b, &mut rng);
            assert!(x.complexity() <= 8 && y.complexity() <= 8);
        }
    }

    #[test]
    fn mutating_root_only_adds() {
        let g = narx();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            assert_eq!(mutate(&g, &g.root_derivation(), &mut rng).complexity(), 1);
        }
    }

    #[test]
    fn mutation_changes_size_by_one() {
        let g = narx().with_limits(Limits { complexity: 6, max_delay: 10 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let d = g.random_derivation(6, &mut rng);
            let m = mutate(&g, &d, &mut rng);
            assert!(g.validate(&m).is_ok());
            assert_eq!(m.complexity().abs_diff(d.complexity()), 1);
        }
    }
}
