use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::grammar::{
    build_grammar, ChannelCounts, DerivationTree, Grammar, Payload, Site, SubModel, TreeId,
};

fn siso(model: SubModel) -> Grammar {
    build_grammar(model, ChannelCounts::siso(), &[]).unwrap()
}

fn factor(delay: u32) -> Payload {
    Payload::Factor {
        link: LinkingArray::one_hot(1, 0),
        delay,
    }
}

/// α1 + β1 + β2 with delay 1 and link [1].
fn lti_one_term(g: &Grammar) -> DerivationTree {
    let d = g
        .adjoin(&g.root_derivation(), TreeId::Beta1, Site { instance: 0, address: 1 }, Payload::None)
        .unwrap();
    g.adjoin(&d, TreeId::Beta2, Site { instance: 1, address: 6 }, factor(1))
        .unwrap()
}

#[test]
fn root_only_is_pure_noise() {
    let g = siso(SubModel::Narx);
    let m = interpret(&g.derive(&g.root_derivation())).unwrap();
    assert!(m.is_empty());
    assert_eq!(m.equation_strings(), vec!["y1(k) = xi1(k)"]);
    assert_eq!(m.max_lag(), 0);
}

#[test]
fn one_output_lag_term() {
    let g = siso(SubModel::Lti);
    let m = interpret(&g.derive(&lti_one_term(&g))).unwrap();
    assert_eq!(m.len(), 1);
    assert_eq!(
        m.terms()[0],
        MonomialTerm::new(vec![SignalFactor::channel(Source::Y, 1, 1, 1)])
    );
    assert_eq!(m.max_delays(), (0, 1, 0));
    let m = m.with_theta(DMatrix::from_element(1, 1, 0.5)).unwrap();
    assert_eq!(m.equation_strings(), vec!["y1(k) = 0.5*y1(k-1) + xi1(k)"]);
}

#[test]
fn duplicate_terms_merge() {
    let g = siso(SubModel::Ip);
    let mut d = g.root_derivation();
    // two terms, each u(k-1)
    d = g.adjoin(&d, TreeId::Beta1, Site { instance: 0, address: 1 }, Payload::None).unwrap();
    d = g.adjoin(&d, TreeId::Beta1, Site { instance: 1, address: 0 }, Payload::None).unwrap();
    d = g.adjoin(&d, TreeId::Beta4, Site { instance: 1, address: 6 }, factor(1)).unwrap();
    d = g.adjoin(&d, TreeId::Beta4, Site { instance: 2, address: 6 }, factor(1)).unwrap();
    let m = interpret(&g.derive(&d)).unwrap();
    assert_eq!(m.len(), 1);
}

#[test]
fn empty_monomial_is_constant() {
    let g = siso(SubModel::Ip);
    let d = g
        .adjoin(&g.root_derivation(), TreeId::Beta1, Site { instance: 0, address: 1 }, Payload::None)
        .unwrap();
    let m = interpret(&g.derive(&d)).unwrap();
    assert_eq!(m.len(), 1);
    assert!(m.terms()[0].is_constant());
    let m = m.with_theta(DMatrix::from_element(1, 1, 1.5)).unwrap();
    assert_eq!(m.equation_strings(), vec!["y1(k) = 1.5 + xi1(k)"]);
}

#[test]
fn shift_and_wrap() {
    let g = siso(SubModel::ExtNarx);
    let mut d = g.root_derivation();
    d = g.adjoin(&d, TreeId::Beta1, Site { instance: 0, address: 1 }, Payload::None).unwrap();
    d = g.adjoin(&d, TreeId::Beta4, Site { instance: 1, address: 6 }, factor(0)).unwrap();
    d = g.adjoin(&d, TreeId::Beta7, Site { instance: 2, address: 3 }, Payload::None).unwrap();
    d = g.adjoin(&d, TreeId::Beta7, Site { instance: 3, address: 0 }, Payload::None).unwrap();
    d = g
        .adjoin(&d, TreeId::Beta8, Site { instance: 4, address: 0 }, Payload::Wrap { op: NonlinearOp::Abs })
        .unwrap();
    let m = interpret(&g.derive(&d)).unwrap();
    assert_eq!(
        m.terms()[0].factors(),
        &[SignalFactor::channel(Source::U, 1, 1, 2).wrapped(NonlinearOp::Abs)]
    );
    let m = m.with_theta(DMatrix::from_element(1, 1, -3.0)).unwrap();
    assert_eq!(m.equation_strings(), vec!["y1(k) = -3*abs(u1(k-2)) + xi1(k)"]);
}

#[test]
fn rendering_examples() {
    let c = ChannelCounts::siso();
    let m = PolynomialModel::new(
        vec![MonomialTerm::new(vec![SignalFactor::channel(Source::U, 1, 1, 1)])],
        c,
    )
    .with_theta(DMatrix::from_element(1, 1, 2.0))
    .unwrap();
    assert_eq!(m.equation_strings(), vec!["y1(k) = 2*u1(k-1) + xi1(k)"]);

    let c = ChannelCounts::new(2, 2, 2);
    let multi = SignalFactor::new(Source::U, 1, LinkingArray::new(vec![true, true]).unwrap());
    let m = PolynomialModel::new(
        vec![
            MonomialTerm::new(vec![multi.clone()]),
            MonomialTerm::new(vec![SignalFactor::channel(Source::Y, 2, 2, 1), multi]),
        ],
        c,
    )
    .with_theta(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -0.25, 4.0]))
    .unwrap();
    assert_eq!(
        m.equation_strings(),
        vec![
            "y1(k) = 1*(u1(k-1) + u2(k-1)) - 0.25*(u1(k-1) + u2(k-1))*y2(k-1) + xi1(k)",
            "y2(k) = 0*(u1(k-1) + u2(k-1)) + 4*(u1(k-1) + u2(k-1))*y2(k-1) + xi2(k)",
        ]
    );
}

#[test]
fn theta_shape_checked() {
    let g = siso(SubModel::Lti);
    let m = interpret(&g.derive(&lti_one_term(&g))).unwrap();
    assert!(matches!(
        m.with_theta(DMatrix::zeros(2, 1)),
        Err(InterpretError::ThetaShape { .. })
    ));
}

#[test]
fn signature_ignores_theta() {
    let g = siso(SubModel::Lti);
    let d = lti_one_term(&g);
    let a = interpret(&g.derive(&d)).unwrap();
    let b = interpret(&g.derive(&d)).unwrap();
    assert_eq!(model_signature(&a), model_signature(&b));
    let a = a.with_theta(DMatrix::from_element(1, 1, 0.1)).unwrap();
    let b = b.with_theta(DMatrix::from_element(1, 1, 0.9)).unwrap();
    assert_eq!(a.signature(), b.signature());
}

/// Random corpus: structurally distinct models never share a signature.
#[test]
fn signature_collisions() {
    let g = build_grammar(SubModel::Narmax, ChannelCounts::new(2, 2, 2), &[]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut seen: std::collections::HashMap<u64, PolynomialModel> = Default::default();
    for _ in 0..3000 {
        let m = interpret(&g.derive(&g.random_derivation(20, &mut rng))).unwrap();
        let sig = m.signature();
        if let Some(prev) = seen.get(&sig) {
            assert_eq!(prev, &m, "signature collision");
        } else {
            seen.insert(sig, m);
        }
    }
    assert!(seen.len() > 500);

    // differing in one delay
    let c = ChannelCounts::siso();
    let a = PolynomialModel::new(vec![MonomialTerm::new(vec![SignalFactor::channel(Source::Y, 1, 1, 1)])], c);
    let b = PolynomialModel::new(vec![MonomialTerm::new(vec![SignalFactor::channel(Source::Y, 1, 1, 2)])], c);
    assert_ne!(a.signature(), b.signature());
}

#[test]
fn export_round_trip() {
    let g = build_grammar(SubModel::ExpNarx, ChannelCounts::new(3, 2, 2), &[]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let m = interpret(&g.derive(&g.random_derivation(15, &mut rng))).unwrap();
        let theta = DMatrix::from_fn(m.len(), 2, |i, j| (i as f64 + 1.0) / 7.0 - j as f64 * 1e-3);
        let m = m.with_theta(theta).unwrap();
        let json = serde_json::to_string(&m.to_export()).unwrap();
        let back: ModelExport = serde_json::from_str(&json).unwrap();
        assert_eq!(PolynomialModel::from_export(&back).unwrap(), m);
    }
}

#[test]
fn export_rejects_zero_mask() {
    let e = ModelExport {
        channels: ChannelCounts::siso(),
        terms: vec![TermExport {
            factors: vec![FactorExport {
                source: Source::U,
                channel_mask: vec![0],
                delay: 1,
                wrap: None,
            }],
        }],
        theta: None,
        equation_strings: vec![],
    };
    assert!(PolynomialModel::from_export(&e).is_err());
}
