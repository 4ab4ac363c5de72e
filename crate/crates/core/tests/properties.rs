use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tagsr::benchmarks::{generate_bouc_wen, generate_cstr, generate_planted, CstrProtocol, InputSpec, PlantedSystem};
use tagsr::evolution::{crossover, dominates, mutate, nondominated_sort, ObjectivePoint};
use tagsr::{build_grammar, interpret, ChannelCounts, DataSet, Grammar, SubModel};

fn grammars() -> Vec<Grammar> {
    let mut out = Vec::new();
    for channels in [ChannelCounts::siso(), ChannelCounts::new(3, 2, 2)] {
        for m in [SubModel::Ip, SubModel::Lti, SubModel::Narx, SubModel::Narmax, SubModel::ExtNarx, SubModel::ExpNarx] {
            out.push(build_grammar(m, channels, &[]).unwrap());
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn random_derivations_are_valid(seed in any::<u64>(), cap in 0usize..=50, which in 0usize..12) {
        let g = &grammars()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = g.random_derivation(cap, &mut rng);
        prop_assert!(g.validate(&d).is_ok());
        prop_assert!(d.complexity() <= cap.max(1));
        let tree = g.derive(&d);
        prop_assert_eq!(&tree, &g.derive(&d));
        let m = interpret(&tree).unwrap();
        prop_assert!(m.conforms_to(g).is_ok(), "{:?}", m.conforms_to(g));
    }

    #[test]
    fn operators_stay_in_the_language(seed in any::<u64>(), which in 0usize..12) {
        let g = &grammars()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = g.random_derivation(20, &mut rng);
        let b = g.random_derivation(20, &mut rng);
        let (x, y) = crossover(g, &a, &b, &mut rng);
        let z = mutate(g, &a, &mut rng);
        for child in [&x, &y, &z] {
            prop_assert!(g.validate(child).is_ok());
            prop_assert!(interpret(&g.derive(child)).unwrap().conforms_to(g).is_ok());
        }
    }

    #[test]
    fn first_front_matches_brute_force(raw in prop::collection::vec((0u8..20, 0u8..20, 0u8..20), 1..80)) {
        // coarse grid values force ties and duplicates
        let pts: Vec<ObjectivePoint> = raw.iter().map(|&(a, b, c)| ObjectivePoint(vec![a as f64, b as f64, c as f64])).collect();
        let fronts = nondominated_sort(&pts);
        let mut brute: Vec<usize> = (0..pts.len())
            .filter(|&i| !pts.iter().any(|q| dominates(q, &pts[i]).unwrap()))
            .collect();
        let mut first = fronts[0].clone();
        first.sort_unstable();
        brute.sort_unstable();
        prop_assert_eq!(first, brute);
        let mut all: Vec<usize> = fronts.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..pts.len()).collect::<Vec<_>>());
        // no member of a later front dominates an earlier one
        for (r, f) in fronts.iter().enumerate() {
            for later in &fronts[r + 1..] {
                for &i in f {
                    prop_assert!(later.iter().all(|&j| !dominates(&pts[j], &pts[i]).unwrap()));
                }
            }
        }
    }

    #[test]
    fn dominance_is_a_strict_order(a in prop::collection::vec(0u8..4, 3), b in prop::collection::vec(0u8..4, 3), c in prop::collection::vec(0u8..4, 3)) {
        let p = |v: &Vec<u8>| ObjectivePoint(v.iter().map(|x| *x as f64).collect());
        let (a, b, c) = (p(&a), p(&b), p(&c));
        prop_assert!(!dominates(&a, &a).unwrap());
        if dominates(&a, &b).unwrap() && dominates(&b, &c).unwrap() {
            prop_assert!(dominates(&a, &c).unwrap());
        }
        prop_assert!(!(dominates(&a, &b).unwrap() && dominates(&b, &a).unwrap()));
    }
}

fn csv_round_trip(d: &DataSet) {
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let back = DataSet::read_csv(buf.as_slice(), d.name()).unwrap();
    assert_eq!(&back, d);
}

#[test]
fn generated_data_round_trips_through_csv() {
    let noisy = PlantedSystem { noise_std: vec![0.01], ..Default::default() };
    csv_round_trip(&generate_planted(&noisy, 300, 1).unwrap().data);
    csv_round_trip(&generate_bouc_wen(300, &InputSpec::bouc_wen_default(), 1).unwrap().data);
    csv_round_trip(&generate_cstr(300, &CstrProtocol::default(), 1).unwrap().data);
}

#[test]
fn generated_files_carry_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("planted.csv");
    let g = generate_planted(&PlantedSystem::default(), 100, 3).unwrap();
    g.write(&path).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("planted.json")).unwrap()).unwrap();
    assert_eq!(meta["equations"][0], "y1(k) = 0.3*u1(k-1) + 0.1*u1(k-1)*u1(k-1) + 0.5*y1(k-1) + xi1(k)");
    assert_eq!(meta["seed"], 3);
    let back = DataSet::from_csv_path(&path).unwrap();
    assert_eq!(back.y(), g.data.y());
}
