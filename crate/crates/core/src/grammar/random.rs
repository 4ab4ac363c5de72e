use rand::Rng;

use super::trees::{elementary_tree, PayloadKind};
use super::{DerivationTree, Grammar, LinkingArray, Payload, Source, TreeId};

/// Probability that a sampled linking array selects exactly one channel.
pub const ONE_HOT_PROBABILITY: f64 = 0.8;

impl Grammar {
    /// Samples a linking array of length `channels`: one-hot with
    /// probability [`ONE_HOT_PROBABILITY`], otherwise uniform over all
    /// nonzero bit patterns.
    pub fn sample_link<R: Rng + ?Sized>(channels: usize, rng: &mut R) -> LinkingArray {
        if channels == 1 || rng.random_bool(ONE_HOT_PROBABILITY) {
            return LinkingArray::one_hot(channels, rng.random_range(0..channels));
        }
        let n = channels.min(63);
        let pattern: u64 = rng.random_range(1..(1u64 << n));
        let bits = (0..channels).map(|c| c < 63 && pattern >> c & 1 == 1).collect();
        LinkingArray::from_bits_unchecked(bits)
    }

    /// Base delay of a freshly introduced factor. Outputs and noise start at
    /// one sample; inputs start at zero or one with equal probability.
    /// Larger delays come from shift trees.
    pub fn sample_base_delay<R: Rng + ?Sized>(source: Source, rng: &mut R) -> u32 {
        match source {
            Source::U => rng.random_range(0..=1),
            Source::Y | Source::Xi => 1,
        }
    }

    /// Samples the payload an instance of `tree` needs.
    pub fn sample_payload<R: Rng + ?Sized>(&self, tree: TreeId, rng: &mut R) -> Payload {
        match elementary_tree(tree).payload {
            PayloadKind::None => Payload::None,
            PayloadKind::Factor(src) => Payload::Factor {
                link: Self::sample_link(self.channels.of(src), rng),
                delay: Self::sample_base_delay(src, rng).min(self.limits.max_delay),
            },
            PayloadKind::Wrap => Payload::Wrap {
                op: self.nonlinear_ops[rng.random_range(0..self.nonlinear_ops.len())],
            },
        }
    }

    /// Adjoins one uniformly chosen legal `(tree, site)` pair with a freshly
    /// sampled payload. Returns `None` when no move is legal.
    pub fn grow<R: Rng + ?Sized>(&self, d: &DerivationTree, rng: &mut R) -> Option<DerivationTree> {
        let moves = self.legal_moves(d);
        if moves.is_empty() {
            return None;
        }
        let (tree, site) = moves[rng.random_range(0..moves.len())];
        let payload = self.sample_payload(tree, rng);
        Some(
            self.adjoin(d, tree, site, payload)
                .expect("legal move with sampled payload"),
        )
    }

    /// Random derivation with complexity drawn uniformly from
    /// `0..=max_complexity` (clamped to the grammar's cap).
    pub fn random_derivation<R: Rng + ?Sized>(&self, max_complexity: usize, rng: &mut R) -> DerivationTree {
        let target = rng.random_range(0..=max_complexity.min(self.limits.complexity));
        let mut d = self.root_derivation();
        for _ in 0..target {
            match self.grow(&d, rng) {
                Some(next) => d = next,
                None => break,
            }
        }
        d
    }
}
