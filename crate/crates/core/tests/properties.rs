use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use randsys::census::{
    count_proper, count_typed, enumerate_solutions, exact_variance, lemma1_check,
};
use randsys::compounded::{always_zero_coordinates, compound, extend_q, self_compound, Embedding};
use randsys::diagnostics::{is_s_milky_way, vertex_cover_number, SolutionHypergraph};
use randsys::exact_linalg::{null_space_basis, solvable_over_integers, solve_particular};
use randsys::partition::enumerate_partitions;
use randsys::random_model::{count_in_sample, trial_counts, SampleSet};
use randsys::system_properties::{
    contract, density, is_positive, partition_family, positive_partition_family,
};
use randsys::{ColSet, Error, IntMatrix, Partition, PartitionFamily, SystemSpec};

fn small_matrix(max_r: usize, max_m: usize, bound: i64) -> impl Strategy<Value = IntMatrix> {
    (1..=max_r, 1..=max_m).prop_flat_map(move |(r, m)| {
        prop::collection::vec(prop::collection::vec(-bound..=bound, m), r)
            .prop_map(|rows| IntMatrix::from_rows(&rows).unwrap())
    })
}

/// `r < m`, as a system needs.
fn wide_matrix(max_r: usize, max_m: usize, bound: i64) -> impl Strategy<Value = IntMatrix> {
    (1..=max_r).prop_flat_map(move |r| {
        (r + 1..=max_m).prop_flat_map(move |m| {
            prop::collection::vec(prop::collection::vec(-bound..=bound, m), r)
                .prop_map(|rows| IntMatrix::from_rows(&rows).unwrap())
        })
    })
}

fn mask_set(mask: u64, m: usize) -> ColSet {
    ColSet::from_mask(mask & ((1u64 << m) - 1))
}

fn big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn naive_solutions(a: &IntMatrix, b: &[BigInt], n: u32) -> Vec<Vec<u32>> {
    let m = a.cols();
    let mut out = Vec::new();
    let mut x = vec![1u32; m];
    loop {
        let xi: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        if a.mul_int(&xi) == b {
            out.push(x.clone());
        }
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if x[i] < n {
                x[i] += 1;
                break;
            }
            x[i] = 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rank_is_transpose_invariant(a in small_matrix(4, 6, 5)) {
        prop_assert_eq!(a.rank(), a.transpose().rank());
    }

    #[test]
    fn column_subsets_do_not_raise_rank(a in small_matrix(4, 6, 5), mask in any::<u64>()) {
        let q = mask_set(mask, a.cols());
        let rank = a.select_columns(&q).unwrap().rank();
        prop_assert!(rank <= a.rank().min(q.len()));
    }

    #[test]
    fn null_space_basis_spans_the_kernel(a in small_matrix(4, 6, 5)) {
        let basis = null_space_basis(&a);
        prop_assert_eq!(basis.len(), a.cols() - a.rank());
        for v in &basis {
            prop_assert!(a.mul_rational(v).iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn particular_solutions_solve(a in small_matrix(3, 5, 4), b in prop::collection::vec(-6i64..=6, 3)) {
        let b = big(&b[..a.rows()]);
        let particular = solve_particular(&a, &b).unwrap();
        if let Some(x) = &particular {
            let bq: Vec<BigRational> = b.iter().cloned().map(BigRational::from_integer).collect();
            prop_assert_eq!(a.mul_rational(x), bq);
        }
        if solvable_over_integers(&a, &b).unwrap() {
            prop_assert!(particular.is_some());
        }
    }

    #[test]
    fn density_is_at_least_the_full_ratio(a in wide_matrix(2, 5, 3)) {
        prop_assume!(is_positive(&a));
        let m = a.cols();
        let full = BigRational::new(BigInt::from(m), BigInt::from(m - a.rank()));
        prop_assert!(density(&a).unwrap() >= full);
    }

    #[test]
    fn contraction_and_families(a in wide_matrix(2, 5, 3)) {
        let m = a.cols();
        prop_assert_eq!(contract(&a, &Partition::discrete(m)).unwrap(), a.clone());
        for p in enumerate_partitions(m).unwrap() {
            prop_assert!(contract(&a, &p).unwrap().rank() <= a.rank());
        }
        let family = partition_family(&a).unwrap();
        let positive = positive_partition_family(&a).unwrap();
        prop_assert!(positive.is_subset(&family));
        prop_assert!(family.contains(&Partition::discrete(m)));
        prop_assert_eq!(positive.contains(&Partition::discrete(m)), is_positive(&a));
    }

    #[test]
    fn positivity_ignores_column_order_and_row_scale(
        a in wide_matrix(2, 5, 3),
        seed in any::<u64>(),
        scale in prop::sample::select(vec![-3i64, -2, -1, 2, 3]),
    ) {
        let m = a.cols();
        let mut order: Vec<usize> = (0..m).collect();
        // Deterministic shuffle from the seed.
        let mut s = seed;
        for i in (1..m).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let rows = a.to_rows();
        let permuted: Vec<Vec<BigInt>> = rows.iter().map(|r| order.iter().map(|&j| r[j].clone()).collect()).collect();
        let mut scaled = rows.clone();
        for v in &mut scaled[0] {
            *v *= scale;
        }
        let base = is_positive(&a);
        prop_assert_eq!(is_positive(&IntMatrix::from_big_rows(permuted).unwrap()), base);
        prop_assert_eq!(is_positive(&IntMatrix::from_big_rows(scaled).unwrap()), base);
    }

    #[test]
    fn self_compound_rank_identity(a in wide_matrix(3, 6, 3), mask in any::<u64>()) {
        // self_compound asserts the identity internally.
        let q = mask_set(mask, a.cols());
        prop_assert!(self_compound(&a, &q).is_ok());
    }

    #[test]
    fn compound_rank_lower_bound(
        a in wide_matrix(3, 5, 3),
        b in wide_matrix(3, 5, 3),
        picks in prop::collection::vec((0usize..5, 0usize..5), 0..5),
    ) {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (p, q) in picks {
            let (p, q) = (p % a.cols(), q % b.cols());
            if pairs.iter().all(|&(x, y)| x != p && y != q) {
                pairs.push((p, q));
            }
        }
        let image: Vec<usize> = pairs.iter().map(|&(_, q)| q).collect();
        let map = Embedding::new(pairs, a.cols(), b.cols()).unwrap();
        let c = compound(&a, &b, &map).unwrap();
        let rest = ColSet::new(image, b.cols()).unwrap().complement(b.cols());
        prop_assert!(c.rank() >= a.rank() + b.select_columns(&rest).unwrap().rank());
    }

    #[test]
    fn positivity_transfers_to_self_compounds(a in wide_matrix(2, 5, 3), mask in any::<u64>()) {
        prop_assume!(is_positive(&a));
        let m = a.cols();
        let q = mask_set(mask, m);
        let rest = a.select_columns(&q.complement(m)).unwrap();
        prop_assume!(rest.cols() > rest.rank() && always_zero_coordinates(&rest).is_empty());
        prop_assert!(is_positive(&self_compound(&a, &q).unwrap().matrix));
    }

    #[test]
    fn extend_q_keeps_the_excess(a in wide_matrix(3, 6, 3), mask in any::<u64>()) {
        let m = a.cols();
        let q = mask_set(mask, m);
        let excess = |q: &ColSet| {
            let rest = a.select_columns(&q.complement(m)).unwrap();
            m as i64 - q.len() as i64 - rest.rank() as i64
        };
        let extended = extend_q(&a, &q).unwrap();
        prop_assert!(q.iter().all(|j| extended.contains(j)));
        prop_assert_eq!(excess(&extended), excess(&q));
        let rest = a.select_columns(&extended.complement(m)).unwrap();
        prop_assert!(always_zero_coordinates(&rest).is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_matches_nested_loops(
        a in wide_matrix(2, 4, 3),
        b in prop::collection::vec(-4i64..=4, 2),
        n in 1u32..=7,
    ) {
        let spec = SystemSpec::new(a.clone(), big(&b[..a.rows()])).unwrap();
        prop_assume!(a.cols() - a.rank() <= 3);
        let naive = naive_solutions(&a, spec.rhs(), n);
        let list = match enumerate_solutions(&spec, n) {
            Err(Error::Inconsistent) => {
                prop_assert!(naive.is_empty());
                return Ok(());
            }
            other => other.unwrap(),
        };
        let got: Vec<Vec<u32>> = list.iter().map(|x| x.values.to_vec()).collect();
        prop_assert_eq!(got, naive);

        let proper = count_proper(&list);
        let nontrivial = count_typed(&list, &partition_family(&a).unwrap());
        prop_assert!(proper <= nontrivial && nontrivial <= list.len() as u64);
        prop_assert!(proper <= u64::from(n).pow((a.cols() - a.rank()) as u32));
    }

    #[test]
    fn shape_counts_equal_contracted_proper_counts(
        a in wide_matrix(1, 4, 3),
        b in -3i64..=3,
        n in 1u32..=8,
    ) {
        let spec = SystemSpec::new(a.clone(), vec![BigInt::from(b)]).unwrap();
        for p in partition_family(&a).unwrap().iter() {
            let (left, right) = lemma1_check(&spec, p, n).unwrap();
            prop_assert_eq!(left, right);
        }
    }

    #[test]
    fn exact_variance_matches_all_pairs(
        a in wide_matrix(1, 4, 3),
        n in 3u32..=8,
        num in 1i64..10,
    ) {
        let spec = SystemSpec::homogeneous(a.clone()).unwrap();
        let list = enumerate_solutions(&spec, n).unwrap();
        let family = partition_family(&a).unwrap();
        let p = BigRational::new(num.into(), 10.into());
        let supports: Vec<BTreeSet<u32>> = list
            .iter()
            .filter(|x| family.contains(x.shape))
            .map(|x| x.support.iter().copied().collect())
            .collect();
        let pw = |k: usize| num_traits::pow(p.clone(), k);
        let mut oracle = BigRational::zero();
        for x in &supports {
            for y in &supports {
                oracle += pw(x.union(y).count()) - pw(x.len() + y.len());
            }
        }
        let var = exact_variance(&list, &family, &p);
        prop_assert!(var >= BigRational::zero());
        prop_assert_eq!(var, oracle);
    }

    #[test]
    fn counts_grow_with_the_sample(
        n in 5u32..40,
        base in prop::collection::vec(any::<bool>(), 40),
        extra in prop::collection::vec(any::<bool>(), 40),
    ) {
        let spec = SystemSpec::from_rows(&[[1, 1, -1]], &[0]).unwrap();
        let list = enumerate_solutions(&spec, n).unwrap();
        let family = partition_family(spec.matrix()).unwrap();
        let small: Vec<u32> = (1..=n).filter(|&v| base[v as usize - 1]).collect();
        let large: Vec<u32> = (1..=n).filter(|&v| base[v as usize - 1] || extra[v as usize - 1]).collect();
        let s = SampleSet::from_values(n, &small).unwrap();
        let t = SampleSet::from_values(n, &large).unwrap();
        prop_assert!(count_in_sample(&list, &family, &s) <= count_in_sample(&list, &family, &t));
    }

    #[test]
    fn trial_counts_ignore_the_pool_size(seed in any::<u64>(), p in 0.05f64..0.95) {
        let spec = SystemSpec::from_rows(&[[1, -2, 1]], &[0]).unwrap();
        let list = enumerate_solutions(&spec, 60).unwrap();
        let family = PartitionFamily::discrete(3);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| trial_counts(&list, &family, p, 150, seed).unwrap())
        };
        prop_assert_eq!(run(1), run(3));
    }

    #[test]
    fn single_shared_value_pairs_are_milky_ways(n in 3u32..=12, i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let spec = SystemSpec::from_rows(&[[1, -2, 1]], &[0]).unwrap();
        let list = enumerate_solutions(&spec, n).unwrap();
        let proper: Vec<_> = list.iter().filter(|x| x.is_proper()).collect();
        prop_assume!(!proper.is_empty());
        let (x, y) = (*i.get(&proper), *j.get(&proper));
        let shared = x.support.iter().filter(|v| y.support.contains(v)).count();
        if shared == 1 {
            prop_assert!(is_s_milky_way(&[x, y], 1));
        }
        for s in 1..=2 {
            if is_s_milky_way(&[x, y], s) {
                let h = SolutionHypergraph::of_solutions(&[x, y]);
                prop_assert_eq!(vertex_cover_number(&h).unwrap(), s);
            }
        }
    }

    #[test]
    fn partitions_are_canonical(keys in prop::collection::vec(0u8..4, 1..8)) {
        let p = Partition::from_keys(&keys);
        let relabelled: Vec<u8> = keys.iter().map(|k| 3 - k).collect();
        prop_assert_eq!(&Partition::from_keys(&relabelled), &p);
        let mut classes = p.classes();
        classes.reverse();
        for c in &mut classes {
            c.reverse();
        }
        prop_assert_eq!(&Partition::from_classes(&classes, keys.len()).unwrap(), &p);
        for i in 0..keys.len() {
            for j in 0..keys.len() {
                prop_assert_eq!(p.class_of(i) == p.class_of(j), keys[i] == keys[j]);
            }
        }
    }
}

#[test]
fn full_q_compound_keeps_the_rank() {
    let a = IntMatrix::from_rows(&[[1, -2, 1]]).unwrap();
    let c = self_compound(&a, &ColSet::full(3)).unwrap();
    assert_eq!(c.rank(), 1);
    assert_eq!(
        c.matrix,
        IntMatrix::from_rows(&[[1, -2, 1], [1, -2, 1]]).unwrap()
    );
}
