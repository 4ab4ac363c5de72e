//! Interpretation of derived trees as polynomial NARMAX models.
//!
//! A model is a sum of `p` monomials over delayed, channel-selected signals,
//! each weighted by one coefficient per output channel, plus the additive
//! noise `Ξ(k)`:
//!
//! ```text
//! Y(k) = Σᵢ Θᵢ · Πⱼ f_ij(k) + Ξ(k)
//! ```
//!
//! Every factor `f_ij` is `L·X(k−d)` for a source `X ∈ {U, Y, Ξ}` and a
//! linking array `L`, optionally wrapped in a pointwise nonlinearity. Terms
//! are kept in canonical order and duplicates are merged, so structurally
//! equal models compare equal.

mod export;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::grammar::{
    Annotation, ChannelCounts, DerivedNode, DerivedTree, Grammar, LinkingArray, NodeLabel, NonlinearOp, Nonterminal,
    Source, Terminal, TreeId,
};

pub use export::{FactorExport, ModelExport, TermExport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpretError {
    #[error("malformed derived tree at {0}")]
    Malformed(&'static str),
    #[error("coefficient matrix must be {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ThetaShape {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// One delayed, channel-selected signal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignalFactor {
    pub source: Source,
    pub delay: u32,
    pub link: LinkingArray,
    pub wrap: Option<NonlinearOp>,
}

impl SignalFactor {
    pub fn new(source: Source, delay: u32, link: LinkingArray) -> Self {
        SignalFactor {
            source,
            delay,
            link,
            wrap: None,
        }
    }

    pub fn wrapped(mut self, op: NonlinearOp) -> Self {
        self.wrap = Some(op);
        self
    }

    /// Single-channel factor, channels counted from 1 as in equations.
    pub fn channel(source: Source, channel: usize, of: usize, delay: u32) -> Self {
        SignalFactor::new(source, delay, LinkingArray::one_hot(of, channel - 1))
    }

    fn render(&self, out: &mut String) {
        let shift = if self.delay == 0 {
            "(k)".to_string()
        } else {
            format!("(k-{})", self.delay)
        };
        let parts: Vec<String> = self
            .link
            .channels()
            .map(|c| format!("{}{}{}", self.source.prefix(), c + 1, shift))
            .collect();
        let inner = parts.join(" + ");
        match self.wrap {
            Some(op) => {
                let _ = write!(out, "{}({})", op.name(), inner);
            }
            None if parts.len() > 1 => {
                let _ = write!(out, "({inner})");
            }
            None => out.push_str(&inner),
        }
    }
}

/// Product of signal factors; the empty product is the constant 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MonomialTerm {
    factors: Vec<SignalFactor>,
}

impl MonomialTerm {
    pub fn new(mut factors: Vec<SignalFactor>) -> Self {
        factors.sort();
        MonomialTerm { factors }
    }

    pub fn constant() -> Self {
        MonomialTerm::default()
    }

    pub fn factors(&self) -> &[SignalFactor] {
        &self.factors
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (i, f) in self.factors.iter().enumerate() {
            if i > 0 {
                s.push('*');
            }
            f.render(&mut s);
        }
        s
    }
}

/// Canonical polynomial model with optional estimated coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialModel {
    terms: Vec<MonomialTerm>,
    theta: Option<DMatrix<f64>>,
    channels: ChannelCounts,
}

impl PolynomialModel {
    /// Sorts and deduplicates `terms`.
    pub fn new(mut terms: Vec<MonomialTerm>, channels: ChannelCounts) -> Self {
        terms.sort();
        terms.dedup();
        PolynomialModel {
            terms,
            theta: None,
            channels,
        }
    }

    /// Attaches a `p × r_y` coefficient matrix.
    pub fn with_theta(mut self, theta: DMatrix<f64>) -> Result<Self, InterpretError> {
        let (rows, cols) = theta.shape();
        if rows != self.terms.len() || cols != self.channels.outputs {
            return Err(InterpretError::ThetaShape {
                expected_rows: self.terms.len(),
                expected_cols: self.channels.outputs,
                rows,
                cols,
            });
        }
        self.theta = Some(theta);
        Ok(self)
    }

    pub fn without_theta(&self) -> Self {
        PolynomialModel {
            terms: self.terms.clone(),
            theta: None,
            channels: self.channels,
        }
    }

    pub fn terms(&self) -> &[MonomialTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn theta(&self) -> Option<&DMatrix<f64>> {
        self.theta.as_ref()
    }

    pub fn channels(&self) -> ChannelCounts {
        self.channels
    }

    /// Largest delay per source `(n_u, n_y, n_ξ)`; zero when a source is absent.
    pub fn max_delays(&self) -> (u32, u32, u32) {
        let mut d = (0, 0, 0);
        for f in self.terms.iter().flat_map(|t| &t.factors) {
            let slot = match f.source {
                Source::U => &mut d.0,
                Source::Y => &mut d.1,
                Source::Xi => &mut d.2,
            };
            *slot = (*slot).max(f.delay);
        }
        d
    }

    /// Largest delay over all sources: the length of the initial transient.
    pub fn max_lag(&self) -> usize {
        let (u, y, x) = self.max_delays();
        u.max(y).max(x) as usize
    }

    pub fn uses(&self, source: Source) -> bool {
        self.terms
            .iter()
            .flat_map(|t| &t.factors)
            .any(|f| f.source == source)
    }

    /// Checks the structural conditions every interpreted model satisfies:
    /// canonical unique terms, delay ranges per source, link lengths
    /// matching the channel counts, and no all-zero links.
    pub fn check_structure(&self) -> Result<(), InterpretError> {
        for w in self.terms.windows(2) {
            if w[0] >= w[1] {
                return Err(InterpretError::Invalid("terms not canonical or duplicated".into()));
            }
        }
        for t in &self.terms {
            if t.factors.windows(2).any(|w| w[0] > w[1]) {
                return Err(InterpretError::Invalid("factors not canonical".into()));
            }
            for f in &t.factors {
                if f.delay < f.source.min_delay() {
                    return Err(InterpretError::Invalid(format!(
                        "{} factor with delay {}",
                        f.source.prefix(),
                        f.delay
                    )));
                }
                if f.link.len() != self.channels.of(f.source) || f.link.is_zero() {
                    return Err(InterpretError::Invalid("bad linking array".into()));
                }
            }
        }
        Ok(())
    }

    /// [`check_structure`](Self::check_structure) plus the limits of `g`:
    /// only sources and operators its trees can introduce, delays within
    /// its cap, and matching channel counts.
    pub fn conforms_to(&self, g: &Grammar) -> Result<(), InterpretError> {
        self.check_structure()?;
        if self.channels != g.channels() {
            return Err(InterpretError::Invalid("channel counts differ from the grammar".into()));
        }
        let max_delay = g.limits().max_delay;
        for f in self.terms.iter().flat_map(|t| &t.factors) {
            let allowed = match f.source {
                Source::U => g.contains(TreeId::Beta4),
                Source::Y => g.contains(TreeId::Beta2),
                Source::Xi => g.contains(TreeId::Beta3) || g.contains(TreeId::Beta5),
            };
            if !allowed {
                return Err(InterpretError::Invalid(format!("{} factor outside the grammar", f.source.prefix())));
            }
            if f.delay > max_delay {
                return Err(InterpretError::Invalid(format!("delay {} above the cap {max_delay}", f.delay)));
            }
            if let Some(op) = f.wrap {
                if !g.nonlinear_ops().contains(&op) {
                    return Err(InterpretError::Invalid(format!("operator {} outside the grammar", op.name())));
                }
            }
        }
        Ok(())
    }

    /// One line per output channel, e.g. `y1(k) = 0.5*y1(k-1) + xi1(k)`.
    pub fn equation_strings(&self) -> Vec<String> {
        (0..self.channels.outputs)
            .map(|j| {
                let mut s = format!("y{}(k) = ", j + 1);
                for (i, term) in self.terms.iter().enumerate() {
                    let coeff = self.theta.as_ref().map(|th| th[(i, j)]);
                    let negative = coeff.is_some_and(|c| c.is_sign_negative());
                    match (i, negative) {
                        (0, false) => {}
                        (0, true) => s.push('-'),
                        (_, false) => s.push_str(" + "),
                        (_, true) => s.push_str(" - "),
                    }
                    match coeff {
                        Some(c) => write_number(&mut s, c.abs()),
                        None => {
                            let _ = write!(s, "c{}_{}", i + 1, j + 1);
                        }
                    }
                    if !term.is_constant() {
                        s.push('*');
                        s.push_str(&term.render());
                    }
                }
                if self.terms.is_empty() {
                    let _ = write!(s, "xi{}(k)", j + 1);
                } else {
                    let _ = write!(s, " + xi{}(k)", j + 1);
                }
                s
            })
            .collect()
    }

    /// Structure-only hash: ignores coefficients.
    pub fn signature(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_usize(self.channels.inputs);
        h.write_usize(self.channels.outputs);
        h.write_usize(self.channels.noise);
        h.write_usize(self.terms.len());
        for t in &self.terms {
            h.write_usize(t.factors.len());
            for f in &t.factors {
                h.write_usize(f.source as usize);
                h.write_usize(f.delay as usize);
                h.write_usize(f.link.len());
                for &b in f.link.bits() {
                    h.write_usize(b as usize);
                }
                h.write_usize(f.wrap.map_or(0, |op| op as usize + 1));
            }
        }
        h.finish()
    }
}

/// Shortest round-trip form, in exponent notation outside [1e-4, 1e6).
fn write_number(out: &mut String, x: f64) {
    let _ = if x == 0.0 || (1e-4..1e6).contains(&x) {
        write!(out, "{x}")
    } else {
        write!(out, "{x:e}")
    };
}

/// Structure hash of a model; see [`PolynomialModel::signature`].
pub fn model_signature(model: &PolynomialModel) -> u64 {
    model.signature()
}

struct Fnv64(u64);

impl Fnv64 {
    fn new() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }

    fn write_usize(&mut self, v: usize) {
        for b in (v as u64).to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// Maps a derived tree to its polynomial model (coefficients unestimated).
pub fn interpret(tree: &DerivedTree) -> Result<PolynomialModel, InterpretError> {
    let root = &tree.root;
    let [sum, _plus, _noise] = root.children.as_slice() else {
        return Err(InterpretError::Malformed("start tree"));
    };
    if !is_nt(root, Nonterminal::Expr0) || !is_nt(sum, Nonterminal::Expr1) {
        return Err(InterpretError::Malformed("start tree"));
    }
    let mut terms = Vec::new();
    collect_terms(sum, &mut terms)?;
    Ok(PolynomialModel::new(terms, tree.channels))
}

fn is_nt(n: &DerivedNode, which: Nonterminal) -> bool {
    n.label == NodeLabel::Nonterminal(which)
}

fn collect_terms(node: &DerivedNode, out: &mut Vec<MonomialTerm>) -> Result<(), InterpretError> {
    match node.children.as_slice() {
        [] => Ok(()),
        [rest, _plus, par, _times, mono] if is_nt(rest, Nonterminal::Expr1) && is_nt(par, Nonterminal::Par) => {
            collect_terms(rest, out)?;
            let mut factors = Vec::new();
            collect_factors(mono, &mut factors)?;
            out.push(MonomialTerm::new(factors));
            Ok(())
        }
        _ => Err(InterpretError::Malformed("sum node")),
    }
}

fn collect_factors(node: &DerivedNode, out: &mut Vec<SignalFactor>) -> Result<(), InterpretError> {
    if !is_nt(node, Nonterminal::Expr2) {
        return Err(InterpretError::Malformed("product node"));
    }
    match node.children.as_slice() {
        [] => Ok(()),
        [rest, _times, factor] if is_nt(rest, Nonterminal::Expr2) => {
            collect_factors(rest, out)?;
            out.push(read_factor(factor)?);
            Ok(())
        }
        [factor] => {
            out.push(read_factor(factor)?);
            Ok(())
        }
        _ => Err(InterpretError::Malformed("product node")),
    }
}

fn read_factor(node: &DerivedNode) -> Result<SignalFactor, InterpretError> {
    if !is_nt(node, Nonterminal::Expr0) {
        return Err(InterpretError::Malformed("factor node"));
    }
    match node.children.as_slice() {
        [link, signal] if matches!(link.annotation, Annotation::Link(_)) => {
            let Annotation::Link(bits) = &link.annotation else {
                return Err(InterpretError::Malformed("linking array"));
            };
            let Annotation::Delay(delay) = signal.annotation else {
                return Err(InterpretError::Malformed("signal delay"));
            };
            let source = match signal.label {
                NodeLabel::Terminal(Terminal::U) => Source::U,
                NodeLabel::Terminal(Terminal::Y) => Source::Y,
                NodeLabel::Terminal(Terminal::Xi) => Source::Xi,
                _ => return Err(InterpretError::Malformed("signal")),
            };
            Ok(SignalFactor::new(source, delay, bits.clone()))
        }
        [shift, inner] if shift.label == NodeLabel::Terminal(Terminal::Shift) => {
            let mut f = read_factor(inner)?;
            f.delay += 1;
            Ok(f)
        }
        [op, inner] if is_nt(op, Nonterminal::Op) => {
            let nl = match op.children.first().map(|c| c.label) {
                Some(NodeLabel::Terminal(Terminal::NlSin)) => NonlinearOp::Sin,
                Some(NodeLabel::Terminal(Terminal::NlCos)) => NonlinearOp::Cos,
                Some(NodeLabel::Terminal(Terminal::NlAbs)) => NonlinearOp::Abs,
                Some(NodeLabel::Terminal(Terminal::NlInv)) => NonlinearOp::Inv,
                Some(NodeLabel::Terminal(Terminal::NlExp)) => NonlinearOp::Exp,
                _ => return Err(InterpretError::Malformed("operator selector")),
            };
            let f = read_factor(inner)?;
            if f.wrap.is_some() {
                return Err(InterpretError::Malformed("nested wrap"));
            }
            Ok(f.wrapped(nl))
        }
        _ => Err(InterpretError::Malformed("factor node")),
    }
}

#[cfg(test)]
mod tests;
