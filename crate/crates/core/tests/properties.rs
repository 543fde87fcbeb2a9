use proptest::prelude::*;

use tenformat::tensor::TensorJson;
use tenformat::tns::{effective_ranks, extract_subspaces, is_member, rank_profile, sample_member};
use tenformat::transfer::transfer_exponent;
use tenformat::trees::{cos_cover_number, doad_cover_number, doad_sets, full_binary_shapes, ones_count};
use tenformat::witness::{cherry_witness, hackbusch_witness, product_witness};
use tenformat::{
    rng_from_seed, AnyTensor, BinaryTree, DenseTensor, LeafOrdering, LeafSet, RankFunction, RankProfile, Rational,
    TreeSpec, DEFAULT_FLOAT_TOL,
};

fn arb_tree(max_leaves: usize) -> impl Strategy<Value = BinaryTree> {
    (1..=max_leaves)
        .prop_flat_map(|n| {
            let count = full_binary_shapes(n).len();
            (Just(n), 0..count)
        })
        .prop_map(|(n, i)| BinaryTree::from_shape(&full_binary_shapes(n)[i]))
}

fn arb_ordering(n: usize) -> impl Strategy<Value = LeafOrdering> {
    Just((0..n).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|p| LeafOrdering::new(p).unwrap())
}

fn arb_set(n: usize) -> impl Strategy<Value = LeafSet> {
    proptest::collection::vec(any::<bool>(), n)
        .prop_map(move |bits| LeafSet::from_indices(n, (0..n).filter(|&i| bits[i])))
}

fn arb_tensor(max_order: usize) -> impl Strategy<Value = DenseTensor<Rational>> {
    proptest::collection::vec(1usize..=3, 1..=max_order).prop_flat_map(|shape| {
        let len: usize = shape.iter().product();
        proptest::collection::vec(-4i64..=4, len)
            .prop_map(move |data| DenseTensor::from_integers(shape.clone(), &data).unwrap())
    })
}

fn random_tensor(shape: Vec<usize>, seed: u64) -> DenseTensor<Rational> {
    use rand::Rng;
    let mut rng = rng_from_seed(seed);
    let len: usize = shape.iter().product();
    let data: Vec<i64> = (0..len).map(|_| rng.gen_range(-10..=10)).collect();
    DenseTensor::from_integers(shape, &data).unwrap()
}

fn pow(r: usize, e: usize) -> usize {
    r.pow(e as u32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn doad_sets_closed_under_complement(tree in arb_tree(9)) {
        let sets = doad_sets(&tree);
        for s in &sets {
            prop_assert!(sets.contains(&s.complement()));
        }
        for v in tree.vertices() {
            prop_assert!(sets.contains(tree.cos(v)));
        }
    }

    #[test]
    fn doad_sets_have_cover_number_one((tree, ord) in arb_tree(8).prop_flat_map(|t| {
        let n = t.num_leaves();
        (Just(t), arb_ordering(n))
    })) {
        for s in doad_sets(&tree).iter().filter(|s| !s.is_empty()) {
            prop_assert_eq!(doad_cover_number(&tree, &ord, &ord.apply(s)).unwrap(), 1);
        }
    }

    #[test]
    fn digit_counts(a in 0u64..1 << 40, b in 0u64..1 << 40, k in 0u32..=40) {
        prop_assert!(ones_count(a + b) <= ones_count(a) + ones_count(b));
        prop_assert_eq!(ones_count(2 * a), ones_count(a));
        let n = 1u64 << k;
        let j = a % (n + 1);
        prop_assert!(ones_count(j).min(ones_count(n - j)) <= k.div_ceil(2));
    }

    #[test]
    fn cos_cover_of_prefix_is_digit_count(k in 0usize..=5, j in 1usize..=32) {
        let n = 1usize << k;
        let j = (j - 1) % n + 1;
        let h = cos_cover_number(&BinaryTree::perfect(k), &LeafSet::range(n, 0, j)).unwrap();
        prop_assert_eq!(h as u32, ones_count(j as u64));
    }

    #[test]
    fn flattening_rank_symmetric_and_bounded((t, s) in arb_tensor(5).prop_flat_map(|t| {
        let n = t.order();
        (Just(t), arb_set(n))
    })) {
        let r = t.flattening_rank(&s, 0.0).unwrap();
        prop_assert_eq!(r, t.flattening_rank(&s.complement(), 0.0).unwrap());
        let rows: usize = s.iter().map(|i| t.shape()[i]).product();
        let cols: usize = s.complement().iter().map(|i| t.shape()[i]).product();
        prop_assert!(r <= rows.min(cols));
        prop_assert_eq!(r, t.to_float().flattening_rank(&s, DEFAULT_FLOAT_TOL).unwrap());
    }

    #[test]
    fn outer_product_multiplies_ranks(
        (a, sa) in arb_tensor(3).prop_flat_map(|t| { let n = t.order(); (Just(t), arb_set(n)) }),
        (b, sb) in arb_tensor(3).prop_flat_map(|t| { let n = t.order(); (Just(t), arb_set(n)) }),
    ) {
        let (na, nb) = (a.order(), b.order());
        let fa: Vec<usize> = (0..na).collect();
        let fb: Vec<usize> = (na..na + nb).collect();
        let t = DenseTensor::outer(&[(&a, &fa), (&b, &fb)]).unwrap();
        let s = LeafSet::from_indices(na + nb, sa.iter().chain(sb.iter().map(|i| i + na)));
        let expect = a.flattening_rank(&sa, 0.0).unwrap() * b.flattening_rank(&sb, 0.0).unwrap();
        prop_assert_eq!(t.flattening_rank(&s, 0.0).unwrap(), expect);
    }

    #[test]
    fn effective_ranks_are_capped(tree in arb_tree(8), values in proptest::collection::vec(1usize..=4, 15)) {
        let f = RankFunction::from_values(&tree, values[..tree.num_vertices()].to_vec()).unwrap();
        let fp = effective_ranks(&tree, &f);
        prop_assert_eq!(fp.get(tree.root()), 1);
        for v in tree.vertices() {
            prop_assert!(fp.get(v) <= f.get(v).max(1));
            if let Some((a, b)) = tree.children(v) {
                prop_assert!(fp.get(a) <= fp.get(v) * fp.get(b));
                prop_assert!(fp.get(b) <= fp.get(v) * fp.get(a));
            }
        }
    }

    #[test]
    fn json_round_trips(t in arb_tensor(4), tree in arb_tree(8), r in 1usize..4) {
        let any = AnyTensor::Rational(t.clone());
        let text = serde_json::to_string(&any).unwrap();
        prop_assert_eq!(serde_json::from_str::<AnyTensor>(&text).unwrap(), any);
        let float = AnyTensor::Float(t.to_float());
        let parsed: TensorJson = serde_json::from_str(&serde_json::to_string(&float).unwrap()).unwrap();
        prop_assert_eq!(AnyTensor::from_json(&parsed).unwrap(), float);

        let spec = tree.to_spec();
        let back: TreeSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        prop_assert_eq!(back.build().unwrap(), tree.clone());

        let f = RankFunction::constant(&tree, r);
        prop_assert_eq!(RankFunction::from_json(&f.to_json(), &tree).unwrap(), f);
        let profile = RankProfile((0..tree.num_vertices()).collect());
        let back: RankProfile = serde_json::from_str(&serde_json::to_string(&profile).unwrap()).unwrap();
        prop_assert_eq!(back, profile);
    }

    #[test]
    fn transfer_to_itself_is_one((tree, ord) in arb_tree(9).prop_flat_map(|t| {
        let n = t.num_leaves();
        (Just(t), arb_ordering(n))
    })) {
        prop_assert_eq!(transfer_exponent(&tree, &ord, &tree, &ord).unwrap().exponent, 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampled_members_round_trip_through_subspaces(tree in arb_tree(6), r in 1usize..=3, d in 2usize..=3, seed in any::<u64>()) {
        let n = tree.num_leaves();
        let f = RankFunction::constant(&tree, r);
        let dims = vec![d; n];
        let id = LeafOrdering::identity(n);
        let (t, _) = sample_member(&tree, &f, &dims, &mut rng_from_seed(seed)).unwrap();
        let (member, profile) = is_member(&t, &tree, &id, &f, 0.0).unwrap();
        prop_assert!(member);
        let fp = effective_ranks(&tree, &f);
        for v in tree.vertices() {
            prop_assert!(profile.get(v) <= fp.get(v).min(pow(d, n)));
        }
        let chain = extract_subspaces(&t, &tree, &id, 0.0).unwrap();
        prop_assert_eq!(chain.dims(), profile.0.clone());
        prop_assert!(tree.vertices().all(|v| chain.dim(v) <= f.get(v)));
        prop_assert_eq!(chain.realize(&tree, &id).unwrap(), t);
    }

    #[test]
    fn generic_tensors_are_not_rank_one((tree, ord) in arb_tree(5).prop_filter("two leaves", |t| t.num_leaves() >= 2)
        .prop_flat_map(|t| { let n = t.num_leaves(); (Just(t), arb_ordering(n)) }), seed in any::<u64>()) {
        let n = tree.num_leaves();
        let t = random_tensor(vec![2; n], seed);
        let f = RankFunction::constant(&tree, 1);
        let (member, profile) = is_member(&t, &tree, &ord, &f, 0.0).unwrap();
        let chain = extract_subspaces(&t, &tree, &ord, 0.0).unwrap();
        prop_assert_eq!(chain.dims(), profile.0.clone());
        prop_assert_eq!(member, tree.vertices().all(|v| chain.dim(v) <= 1));
        prop_assert!(!member);
        prop_assert_eq!(chain.realize(&tree, &ord).unwrap(), t);
    }

    #[test]
    fn members_obey_the_doad_bound(tree in arb_tree(7), r in 1usize..=2, seed in any::<u64>(), bits in any::<u16>()) {
        let n = tree.num_leaves();
        let (t, _) = sample_member(&tree, &RankFunction::constant(&tree, r), &vec![3; n], &mut rng_from_seed(seed)).unwrap();
        let s = LeafSet::from_indices(n, (0..n).filter(|i| bits >> i & 1 == 1));
        prop_assume!(!s.is_empty() && s.len() < n);
        let h = cos_cover_number(&tree, &s).unwrap().min(cos_cover_number(&tree, &s.complement()).unwrap());
        prop_assert!(t.flattening_rank(&s, 0.0).unwrap() <= pow(r, h));
    }

    #[test]
    fn transfer_exponent_certifies_containment(
        (a, b, ord) in (2usize..=6).prop_flat_map(|n| {
            let count = full_binary_shapes(n).len();
            (0..count, 0..count, arb_ordering(n))
        }).prop_map(|(i, j, ord)| {
            let shapes = full_binary_shapes(ord.len());
            (BinaryTree::from_shape(&shapes[i]), BinaryTree::from_shape(&shapes[j]), ord)
        }),
        seed in any::<u64>(),
    ) {
        let n = a.num_leaves();
        let id = LeafOrdering::identity(n);
        let c = transfer_exponent(&a, &id, &b, &ord).unwrap().exponent;
        let r = 2;
        let (t, _) = sample_member(&a, &RankFunction::constant(&a, r), &vec![2; n], &mut rng_from_seed(seed)).unwrap();
        let bound = RankFunction::constant(&b, pow(r, c));
        prop_assert!(is_member(&t, &b, &ord, &bound, 0.0).unwrap().0);
    }

    #[test]
    fn hackbusch_witness_separates(k in 2usize..=3, sigma in arb_ordering(8), seed in any::<u64>()) {
        let n = 1usize << k;
        let sigma = if n == 8 { sigma } else {
            let p: Vec<usize> = sigma.as_slice().iter().copied().filter(|&x| x < n).collect();
            LeafOrdering::new(p).unwrap()
        };
        let r = 2;
        let w = hackbusch_witness(k, r, &sigma, &vec![r; n], &mut rng_from_seed(seed)).unwrap();
        let hf = BinaryTree::perfect(k);
        prop_assert!(is_member(&w.tensor, &hf, &LeafOrdering::identity(n), &RankFunction::constant(&hf, r), 0.0).unwrap().0);
        let target = pow(r, k.div_ceil(2));
        prop_assert!(w.rank >= target);
        let tt = BinaryTree::train_track(n).unwrap();
        let below = RankFunction::constant(&tt, target - 1);
        prop_assert!(!is_member(&w.tensor, &tt, &sigma, &below, 0.0).unwrap().0);
        let prefix = LeafSet::from_indices(n, sigma.as_slice()[..w.j].iter().copied());
        prop_assert_eq!(w.tensor.flattening_rank(&prefix, 0.0).unwrap(), w.rank);
    }

    #[test]
    fn cherry_witness_separates(matching in arb_ordering(8), r in 1usize..=2, seed in any::<u64>()) {
        let w = cherry_witness(3, r, &matching, &[r; 8], &mut rng_from_seed(seed)).unwrap();
        let tt = BinaryTree::train_track(8).unwrap();
        prop_assert!(is_member(&w.tensor, &tt, &matching, &RankFunction::constant(&tt, r), 0.0).unwrap().0);
        prop_assert_eq!(w.rank, r * r);
        prop_assert_eq!(w.cherry.1, w.cherry.0 + 1);
        prop_assert_eq!(w.cherry.0 % 2, 1);
        let hf = BinaryTree::perfect(3);
        let profile = rank_profile(&w.tensor, &hf, &LeafOrdering::identity(8), 0.0).unwrap();
        prop_assert!(profile.0.iter().any(|&q| q == r * r));
        if r > 1 {
            let below = RankFunction::constant(&hf, r * r - 1);
            prop_assert!(!is_member(&w.tensor, &hf, &LeafOrdering::identity(8), &below, 0.0).unwrap().0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn product_witness_rank_is_multiplicative(
        k in 1usize..=3,
        picks in (0usize..15, 0usize..15),
        bits in any::<u8>(),
        seed in any::<u64>(),
    ) {
        let tree = BinaryTree::perfect(k);
        let n = tree.num_leaves();
        let m = tree.num_vertices();
        let (v1, v2) = (picks.0 % m, picks.1 % m);
        let (s1, s2) = (tree.cos(v1).clone(), tree.cos(v2).clone());
        prop_assume!(s1.is_disjoint(&s2));
        let t1 = random_tensor(vec![2; s1.len()], seed);
        let t2 = random_tensor(vec![2; s2.len()], seed ^ 1);
        let fillers: Vec<Vec<Rational>> = (0..n)
            .map(|i| vec![Rational::from_integer((i as i64 + 1).into()), Rational::from_integer(1.into())])
            .collect();
        let a = LeafSet::from_indices(n, (0..n).filter(|i| bits >> i & 1 == 1));
        let id = LeafOrdering::identity(n);
        let w = product_witness(&tree, &id, v1, &t1, v2, &t2, &a, &fillers).unwrap();
        prop_assert_eq!(w.rank, w.q1 * w.q2);
        prop_assert_eq!(w.tensor.flattening_rank(&a, 0.0).unwrap(), w.rank);
    }
}
