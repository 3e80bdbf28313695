//! Structural probes of tuples of solutions: the support hypergraph, its
//! vertex cover number, milky-way detection, and scores of overlap triples.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Pow;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::census::{
    count_proper_solutions, sorted_intersection_len, EnumOptions, Solution, SolutionList,
};
use crate::compounded::{compound, repeat_rhs, Embedding};
use crate::error::{Error, Result};
use crate::exact_linalg::ColSet;
use crate::partition::{Partition, PartitionFamily};
use crate::system_properties::{contract, SystemSpec};

/// Largest vertex set for the exhaustive cover search.
pub const MAX_COVER_VERTICES: usize = 20;

/// Below this many typed solutions the milky-way fraction is computed over
/// all intersecting pairs instead of sampled.
pub const EXACT_PAIR_LIMIT: usize = 2000;

/// Widest system accepted by [`leading_triple_scores`].
pub const MAX_TRIPLE_COLUMNS: usize = 6;

/// One edge per solution (with multiplicity), each edge the solution's support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionHypergraph {
    vertices: Vec<u32>,
    edges: Vec<Vec<u32>>,
}

impl SolutionHypergraph {
    pub fn new(edges: Vec<Vec<u32>>) -> Result<Self> {
        let mut clean = Vec::with_capacity(edges.len());
        for mut e in edges {
            e.sort_unstable();
            e.dedup();
            if e.is_empty() {
                return Err(Error::InvalidArgument("empty edge".into()));
            }
            clean.push(e);
        }
        let vertices: BTreeSet<u32> = clean.iter().flatten().copied().collect();
        Ok(SolutionHypergraph {
            vertices: vertices.into_iter().collect(),
            edges: clean,
        })
    }

    pub fn of_solutions(chi: &[Solution<'_>]) -> Self {
        SolutionHypergraph::new(chi.iter().map(|x| x.support.to_vec()).collect())
            .expect("supports are nonempty")
    }

    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Vec<u32>] {
        &self.edges
    }

    /// Edge indices grouped into connected components, ordered by first edge.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let k = self.edges.len();
        let mut parent: Vec<usize> = (0..k).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for i in 0..k {
            for j in i + 1..k {
                if sorted_intersection_len(&self.edges[i], &self.edges[j]) > 0 {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; k];
        for i in 0..k {
            let root = find(&mut parent, i);
            if slot[root] == usize::MAX {
                slot[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[root]].push(i);
        }
        groups
    }
}

/// Minimum number of vertices meeting every edge.
pub fn vertex_cover_number(h: &SolutionHypergraph) -> Result<usize> {
    let v = h.vertices.len();
    if v > MAX_COVER_VERTICES {
        return Err(Error::TooLarge {
            what: "hypergraph vertex set",
            size: v as u128,
            limit: MAX_COVER_VERTICES as u128,
        });
    }
    let edge_masks: Vec<u32> = h
        .edges
        .iter()
        .map(|e| {
            e.iter().fold(0u32, |acc, x| {
                acc | 1
                    << h.vertices
                        .binary_search(x)
                        .expect("edge vertex is a vertex")
            })
        })
        .collect();
    let best = (0u32..1 << v)
        .into_par_iter()
        .filter(|c| edge_masks.iter().all(|e| e & c != 0))
        .map(u32::count_ones)
        .min()
        .expect("the full vertex set is a cover");
    Ok(best as usize)
}

/// Whether the supports of `chi` form `s` disjoint sunflowers with
/// one-vertex cores: within a component all edges share exactly one common
/// vertex and nothing else.
pub fn is_s_milky_way(chi: &[Solution<'_>], s: usize) -> bool {
    is_milky_way_graph(&SolutionHypergraph::of_solutions(chi), s)
}

pub fn is_milky_way_graph(h: &SolutionHypergraph, s: usize) -> bool {
    let comps = h.components();
    comps.len() == s
        && comps.iter().all(|comp| {
            if comp.len() == 1 {
                return true;
            }
            // A sunflower with core {c} has exactly 1 + Σ(|e| - 1) vertices.
            let core = comp
                .iter()
                .skip(1)
                .fold(h.edges[comp[0]].clone(), |acc, &i| {
                    acc.into_iter()
                        .filter(|x| h.edges[i].binary_search(x).is_ok())
                        .collect()
                });
            let union: BTreeSet<u32> = comp
                .iter()
                .flat_map(|&i| h.edges[i].iter().copied())
                .collect();
            let petals: usize = comp.iter().map(|&i| h.edges[i].len() - 1).sum();
            core.len() == 1 && union.len() == 1 + petals
        })
}

/// Share of 1-milky ways among intersecting ordered pairs of distinct typed
/// solutions: both proper, supports meeting in exactly one value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MilkyWayFraction {
    pub fraction: f64,
    pub milky: u64,
    pub pairs: u64,
    /// All intersecting pairs were enumerated rather than sampled.
    pub exact: bool,
}

/// With no eligible pair the fraction is 1 by convention. Sampling draws
/// a value `v` with weight `deg(v)²`, then `x, y` uniformly among the typed
/// solutions through `v`, keeping the pair with probability `1/|{x} ∩ {y}|`,
/// which makes accepted pairs uniform over intersecting ordered pairs.
pub fn milky_way_fraction(
    list: &SolutionList,
    family: &PartitionFamily,
    sample_pairs: u64,
    seed: u64,
) -> MilkyWayFraction {
    let typed = list.typed_ids(family);
    let is_milky = |x: u32, y: u32| {
        list.get(x as usize).is_proper()
            && list.get(y as usize).is_proper()
            && sorted_intersection_len(list.support(x as usize), list.support(y as usize)) == 1
    };
    let ratio = |milky: u64, pairs: u64, exact: bool| MilkyWayFraction {
        fraction: if pairs == 0 {
            1.0
        } else {
            milky as f64 / pairs as f64
        },
        milky,
        pairs,
        exact,
    };

    let mut through: Vec<Vec<u32>> = vec![Vec::new(); list.n() as usize];
    for &i in &typed {
        for &v in list.support(i as usize) {
            through[v as usize - 1].push(i);
        }
    }

    if typed.len() <= EXACT_PAIR_LIMIT {
        let (mut milky, mut pairs) = (0, 0);
        for (a, &x) in typed.iter().enumerate() {
            for &y in &typed[a + 1..] {
                if sorted_intersection_len(list.support(x as usize), list.support(y as usize)) > 0 {
                    pairs += 2;
                    if is_milky(x, y) {
                        milky += 2;
                    }
                }
            }
        }
        return ratio(milky, pairs, true);
    }

    let weights: Vec<u64> = through.iter().map(|t| (t.len() as u64).pow(2)).collect();
    let Ok(pick) = WeightedIndex::new(&weights) else {
        return ratio(0, 0, false);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut milky, mut pairs) = (0, 0);
    while pairs < sample_pairs {
        let bucket = &through[pick.sample(&mut rng)];
        let x = bucket[rng.gen_range(0..bucket.len())];
        let y = bucket[rng.gen_range(0..bucket.len())];
        if x == y {
            continue;
        }
        let shared = sorted_intersection_len(list.support(x as usize), list.support(y as usize));
        if rng.gen_range(0..shared) != 0 {
            continue;
        }
        pairs += 1;
        milky += u64::from(is_milky(x, y));
    }
    ratio(milky, pairs, false)
}

fn serialize_pairs<S: Serializer>(m: &Embedding, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(m.pairs().iter().map(|&(p, q)| [p + 1, q + 1]))
}

/// `p^{|𝔭|+|𝔮|-|dom M|} · |S_0(A_𝔭 ×^M A_𝔮, (b, b)) ∩ [n]^{…}|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TripleScore {
    pub left: Partition,
    pub right: Partition,
    #[serde(serialize_with = "serialize_pairs")]
    pub map: Embedding,
    pub count: u64,
    #[serde(with = "crate::serde_util::rational")]
    pub score: BigRational,
    /// `|𝔭| = |𝔮|`.
    pub same_size: bool,
    /// `r_P(A_𝔭) = r_Q(A_𝔮)` for the domain `P` and image `Q` of the map.
    pub rank_deficits_match: bool,
}

/// All partial bijections between `[a]` and `[b]` with nonempty domain, in
/// lexicographic order of their sorted pair lists.
fn partial_bijections(a: usize, b: usize) -> Vec<Vec<(usize, usize)>> {
    fn extend(
        i: usize,
        a: usize,
        b: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if i == a {
            if !cur.is_empty() {
                out.push(cur.clone());
            }
            return;
        }
        extend(i + 1, a, b, used, cur, out);
        for j in 0..b {
            if !used[j] {
                used[j] = true;
                cur.push((i, j));
                extend(i + 1, a, b, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(0, a, b, &mut vec![false; b], &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Scores every triple `(𝔭, 𝔮, M)` with `𝔭, 𝔮 ∈ family` and `M` a bijection
/// between nonempty column sets of `A_𝔭` and `A_𝔮`, highest score first and
/// ties broken by `(𝔭, 𝔮, M)`.
///
/// Leading triples are an asymptotic notion; these are finite-`n` scores.
pub fn leading_triple_scores(
    spec: &SystemSpec,
    family: &PartitionFamily,
    n: u32,
    p: &BigRational,
    opts: EnumOptions,
) -> Result<Vec<TripleScore>> {
    let a = spec.matrix();
    if a.cols() > MAX_TRIPLE_COLUMNS {
        return Err(Error::TooLarge {
            what: "column count for triple scoring",
            size: a.cols() as u128,
            limit: MAX_TRIPLE_COLUMNS as u128,
        });
    }
    let rhs = repeat_rhs(spec.rhs(), 2);
    let contracted: Vec<(Partition, crate::exact_linalg::IntMatrix)> = family
        .iter()
        .map(|part| Ok((part.clone(), contract(a, part)?)))
        .collect::<Result<_>>()?;
    let deficit = |m: &crate::exact_linalg::IntMatrix, cols: Vec<usize>| -> Result<usize> {
        let q = ColSet::new(cols, m.cols())?;
        Ok(m.rank() - m.select_columns(&q.complement(m.cols()))?.rank())
    };

    let mut jobs = Vec::new();
    for (i, (_, ap)) in contracted.iter().enumerate() {
        for (j, (_, aq)) in contracted.iter().enumerate() {
            for pairs in partial_bijections(ap.cols(), aq.cols()) {
                jobs.push((i, j, pairs));
            }
        }
    }
    let mut scores: Vec<TripleScore> = jobs
        .into_par_iter()
        .map(|(i, j, pairs)| {
            let (left, ap) = &contracted[i];
            let (right, aq) = &contracted[j];
            let map = Embedding::new(pairs, ap.cols(), aq.cols())?;
            let c = compound(ap, aq, &map)?;
            let count = count_proper_solutions(&c.matrix, &rhs, n, opts)?;
            let exponent = (ap.cols() + aq.cols() - map.len()) as u32;
            let weight: BigRational = Pow::pow(p, exponent);
            let dom: Vec<usize> = map.pairs().iter().map(|&(x, _)| x).collect();
            let img: Vec<usize> = map.pairs().iter().map(|&(_, y)| y).collect();
            Ok(TripleScore {
                left: left.clone(),
                right: right.clone(),
                score: weight * BigRational::from_integer(BigInt::from(count)),
                count,
                same_size: ap.cols() == aq.cols(),
                rank_deficits_match: deficit(ap, dom)? == deficit(aq, img)?,
                map,
            })
        })
        .collect::<Result<_>>()?;
    scores.sort_by(|x, y| {
        y.score
            .cmp(&x.score)
            .then_with(|| x.left.cmp(&y.left))
            .then_with(|| x.right.cmp(&y.right))
            .then_with(|| x.map.pairs().cmp(y.map.pairs()))
    });
    Ok(scores)
}
