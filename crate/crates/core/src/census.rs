//! Exact enumeration and classification of `S(A, b) ∩ [n]^m`.
//!
//! Enumeration fixes the lexicographically first column basis of `A` as the
//! pivot columns and walks every assignment of the remaining (free) columns
//! over `[n]`. The pivot values are an affine function of the free values,
//! precomputed once with a common denominator so that the inner loop is pure
//! `i128` arithmetic: a divisibility test and a range test per pivot.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_linalg::{pivot_columns, rref, solve_particular, IntMatrix};
use crate::partition::{Partition, PartitionFamily};
use crate::system_properties::{contract, partition_family_contains, SystemSpec};

/// Default guard on the number of free-column assignments, `n^{m - rank}`.
pub const DEFAULT_BOX_LIMIT: u128 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumOptions {
    pub box_limit: u128,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            box_limit: DEFAULT_BOX_LIMIT,
        }
    }
}

/// Turns pivot accumulators and free values into a solution and reports it.
type Emit<'a> = dyn Fn(&[i128], &mut [u32], &mut dyn FnMut(&[u32])) + 'a;

/// Affine parametrisation `x_pivot = (base + Σ coef[f]·x_free[f]) / denom`.
#[derive(Debug)]
pub(crate) struct AffineSolver {
    m: usize,
    pivots: Vec<usize>,
    free: Vec<usize>,
    denom: i128,
    base: Vec<i128>,
    // coef[f][i]: contribution of free column f to pivot i.
    coef: Vec<Vec<i128>>,
}

impl AffineSolver {
    pub(crate) fn new(a: &IntMatrix, b: &[BigInt], n: u32, opts: EnumOptions) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                actual: b.len(),
            });
        }
        if solve_particular(a, b)?.is_none() {
            return Err(Error::Inconsistent);
        }
        let m = a.cols();
        let pivots = pivot_columns(a).indices().to_vec();
        let free: Vec<usize> = (0..m).filter(|j| !pivots.contains(j)).collect();
        let assignments = (n as u128)
            .checked_pow(free.len() as u32)
            .unwrap_or(u128::MAX);
        if assignments > opts.box_limit {
            return Err(Error::BoxTooLarge {
                assignments,
                limit: opts.box_limit,
            });
        }
        let r = pivots.len();
        if r == 0 {
            return Ok(AffineSolver {
                m,
                pivots,
                coef: vec![Vec::new(); free.len()],
                free,
                denom: 1,
                base: Vec::new(),
            });
        }
        let rows = pivot_columns(&a.transpose()).indices().to_vec();
        // Invert the r x r pivot block by reducing [B | I].
        let aug: Vec<Vec<BigRational>> = rows
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let mut row: Vec<BigRational> = pivots
                    .iter()
                    .map(|&j| BigRational::from_integer(a.get(i, j).clone()))
                    .collect();
                row.extend((0..r).map(|c| {
                    if c == k {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                }));
                row
            })
            .collect();
        let (red, _) = rref(aug, r);
        let inv = |p: usize, k: usize| &red[p][r + k];
        let apply = |rhs: &dyn Fn(usize) -> BigInt| -> Vec<BigRational> {
            (0..r)
                .map(|p| {
                    (0..r).fold(BigRational::zero(), |acc, k| {
                        acc + inv(p, k) * BigRational::from_integer(rhs(k))
                    })
                })
                .collect()
        };
        let base_q = apply(&|k| b[rows[k]].clone());
        let coef_q: Vec<Vec<BigRational>> = free
            .iter()
            .map(|&f| apply(&|k| -a.get(rows[k], f).clone()))
            .collect();
        let denom = base_q
            .iter()
            .chain(coef_q.iter().flatten())
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let scale = |q: &BigRational| q.numer() * (&denom / q.denom());
        let base: Vec<BigInt> = base_q.iter().map(scale).collect();
        let coef: Vec<Vec<BigInt>> = coef_q
            .iter()
            .map(|c| c.iter().map(scale).collect())
            .collect();

        // Every accumulator stays below |base| + n·Σ|coef|; keep that inside i128.
        let bound = (0..r).fold(BigInt::zero(), |acc: BigInt, i| {
            let s = base[i].abs() + coef.iter().map(|c| c[i].abs()).sum::<BigInt>() * n;
            acc.max(s)
        });
        if bound.bits() > 120 || denom.bits() > 120 {
            return Err(Error::Overflow);
        }
        let to = |v: &BigInt| v.to_i128().expect("bounded above");
        Ok(AffineSolver {
            m,
            pivots,
            free,
            denom: to(&denom),
            base: base.iter().map(to).collect(),
            coef: coef.iter().map(|c| c.iter().map(to).collect()).collect(),
        })
    }

    /// Visits every solution in `[n]^m` whose first free column equals
    /// `first` (all solutions when there are no free columns).
    fn visit_slice(&self, n: u32, first: Option<u32>, f: &mut dyn FnMut(&[u32])) {
        let r = self.pivots.len();
        let k = self.free.len();
        let mut x = vec![0u32; self.m];
        let mut acc = vec![0i128; (k + 1) * r];
        acc[..r].copy_from_slice(&self.base);

        let emit = |acc: &[i128], x: &mut [u32], f: &mut dyn FnMut(&[u32])| {
            for (i, &p) in self.pivots.iter().enumerate() {
                let num = acc[i];
                if num % self.denom != 0 {
                    return;
                }
                let v = num / self.denom;
                if v < 1 || v > n as i128 {
                    return;
                }
                x[p] = v as u32;
            }
            f(x);
        };

        if k == 0 {
            emit(&acc[..r], &mut x, f);
            return;
        }
        let start = match first {
            Some(v) => {
                x[self.free[0]] = v;
                for i in 0..r {
                    acc[r + i] = acc[i] + self.coef[0][i] * v as i128;
                }
                1
            }
            None => 0,
        };
        self.descend(start, n, &mut x, &mut acc, &emit, f);
    }

    fn descend(
        &self,
        d: usize,
        n: u32,
        x: &mut [u32],
        acc: &mut [i128],
        emit: &Emit<'_>,
        f: &mut dyn FnMut(&[u32]),
    ) {
        let r = self.pivots.len();
        let k = self.free.len();
        if d == k {
            emit(&acc[k * r..(k + 1) * r], x, f);
            return;
        }
        let (here, next) = (d * r, (d + 1) * r);
        let step = &self.coef[d];
        for i in 0..r {
            acc[next + i] = acc[here + i];
        }
        for v in 1..=n {
            for i in 0..r {
                acc[next + i] += step[i];
            }
            x[self.free[d]] = v;
            self.descend(d + 1, n, x, acc, emit, f);
        }
    }

    /// Visits all solutions, splitting the first free column across workers.
    /// Each worker's results are returned in order of that column's value.
    fn collect_parallel<T: Send>(
        &self,
        n: u32,
        make: impl Fn() -> T + Sync,
        visit: impl Fn(&mut T, &[u32]) + Sync,
    ) -> Vec<T> {
        if self.free.is_empty() {
            let mut t = make();
            self.visit_slice(n, None, &mut |x| visit(&mut t, x));
            return vec![t];
        }
        (1..=n)
            .into_par_iter()
            .map(|v| {
                let mut t = make();
                self.visit_slice(n, Some(v), &mut |x| visit(&mut t, x));
                t
            })
            .collect()
    }
}

/// One enumerated solution, borrowed from its [`SolutionList`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Solution<'a> {
    pub values: &'a [u32],
    /// Sorted distinct values.
    pub support: &'a [u32],
    pub shape: &'a Partition,
}

impl Solution<'_> {
    pub fn is_proper(&self) -> bool {
        self.shape.is_discrete()
    }
}

/// `S(A, b) ∩ [n]^m`, sorted by value tuple, with supports and shapes
/// precomputed. Stored column-flat to keep large lists compact.
#[derive(Debug)]
pub struct SolutionList {
    system: SystemSpec,
    n: u32,
    m: usize,
    values: Vec<u32>,
    support_start: Vec<usize>,
    supports: Vec<u32>,
    shape_ids: Vec<u32>,
    shapes: Vec<Partition>,
    index: OnceLock<Vec<Vec<u32>>>,
}

impl SolutionList {
    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.shape_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape_ids.is_empty()
    }

    pub fn get(&self, i: usize) -> Solution<'_> {
        Solution {
            values: &self.values[i * self.m..(i + 1) * self.m],
            support: &self.supports[self.support_start[i]..self.support_start[i + 1]],
            shape: &self.shapes[self.shape_ids[i] as usize],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Solution<'_>> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    pub fn support(&self, i: usize) -> &[u32] {
        &self.supports[self.support_start[i]..self.support_start[i + 1]]
    }

    pub fn shape_id(&self, i: usize) -> u32 {
        self.shape_ids[i]
    }

    /// Distinct shapes occurring in the list.
    pub fn shapes(&self) -> &[Partition] {
        &self.shapes
    }

    /// `mask[s]` is true when shape `s` belongs to `family`.
    pub fn shape_mask(&self, family: &PartitionFamily) -> Vec<bool> {
        self.shapes.iter().map(|s| family.contains(s)).collect()
    }

    /// Ids of the solutions whose shape lies in `family`.
    pub fn typed_ids(&self, family: &PartitionFamily) -> Vec<u32> {
        let mask = self.shape_mask(family);
        (0..self.len() as u32)
            .filter(|&i| mask[self.shape_ids[i as usize] as usize])
            .collect()
    }

    /// Value → ids of the solutions containing it; built on first use.
    /// Entry `v - 1` holds value `v`.
    pub fn index(&self) -> &[Vec<u32>] {
        self.index.get_or_init(|| {
            let mut idx = vec![Vec::new(); self.n as usize];
            for i in 0..self.len() {
                for &v in self.support(i) {
                    idx[v as usize - 1].push(i as u32);
                }
            }
            idx
        })
    }
}

/// Enumerates `S(A, b) ∩ [n]^m` completely, sorted by value tuple.
pub fn enumerate_solutions(spec: &SystemSpec, n: u32) -> Result<SolutionList> {
    enumerate_solutions_with(spec, n, EnumOptions::default())
}

pub fn enumerate_solutions_with(
    spec: &SystemSpec,
    n: u32,
    opts: EnumOptions,
) -> Result<SolutionList> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let solver = AffineSolver::new(spec.matrix(), spec.rhs(), n, opts)?;
    let m = spec.matrix().cols();
    let chunks = solver.collect_parallel(n, Vec::new, |buf: &mut Vec<u32>, x| {
        buf.extend_from_slice(x)
    });
    let mut values: Vec<u32> = chunks.concat();
    let count = values.len() / m.max(1);
    let sorted = (1..count).all(|i| values[(i - 1) * m..i * m] <= values[i * m..(i + 1) * m]);
    if !sorted {
        let mut order: Vec<u32> = (0..count as u32).collect();
        order.sort_unstable_by(|&i, &j| {
            let (i, j) = (i as usize, j as usize);
            values[i * m..(i + 1) * m].cmp(&values[j * m..(j + 1) * m])
        });
        let mut out = Vec::with_capacity(values.len());
        for &i in &order {
            out.extend_from_slice(&values[i as usize * m..(i as usize + 1) * m]);
        }
        values = out;
    }

    let mut support_start = Vec::with_capacity(count + 1);
    let mut supports = Vec::with_capacity(values.len());
    let mut shape_ids = Vec::with_capacity(count);
    let mut shapes: Vec<Partition> = Vec::new();
    let mut lookup: HashMap<Vec<u8>, u32> = HashMap::new();
    let mut scratch: Vec<u32> = Vec::with_capacity(m);
    support_start.push(0);
    for i in 0..count {
        let x = &values[i * m..(i + 1) * m];
        let shape = Partition::from_keys(x);
        let id = match lookup.get(shape.labels()) {
            Some(&id) => id,
            None => {
                let id = shapes.len() as u32;
                lookup.insert(shape.labels().to_vec(), id);
                shapes.push(shape);
                id
            }
        };
        shape_ids.push(id);
        scratch.clear();
        scratch.extend_from_slice(x);
        scratch.sort_unstable();
        scratch.dedup();
        supports.extend_from_slice(&scratch);
        support_start.push(supports.len());
    }
    Ok(SolutionList {
        system: spec.clone(),
        n,
        m,
        values,
        support_start,
        supports,
        shape_ids,
        shapes,
        index: OnceLock::new(),
    })
}

/// Counts the solutions in `[n]^m` accepted by `keep`, without storing them.
pub fn count_solutions_where(
    a: &IntMatrix,
    b: &[BigInt],
    n: u32,
    opts: EnumOptions,
    keep: impl Fn(&[u32]) -> bool + Sync,
) -> Result<u64> {
    let solver = AffineSolver::new(a, b, n, opts)?;
    let parts = solver.collect_parallel(
        n,
        || 0u64,
        |c, x| {
            if keep(x) {
                *c += 1
            }
        },
    );
    Ok(parts.iter().sum())
}

fn all_distinct(x: &[u32]) -> bool {
    (1..x.len()).all(|i| !x[..i].contains(&x[i]))
}

/// `|S_0(A, b) ∩ [n]^m|` for any integer matrix; zero when the system is
/// inconsistent.
pub fn count_proper_solutions(
    a: &IntMatrix,
    b: &[BigInt],
    n: u32,
    opts: EnumOptions,
) -> Result<u64> {
    match count_solutions_where(a, b, n, opts, all_distinct) {
        Err(Error::Inconsistent) => Ok(0),
        other => other,
    }
}

/// `|S_0(A, b) ∩ [n]^m|`.
pub fn count_proper(list: &SolutionList) -> u64 {
    let discrete: Vec<bool> = list.shapes.iter().map(Partition::is_discrete).collect();
    list.shape_ids
        .iter()
        .filter(|&&s| discrete[s as usize])
        .count() as u64
}

/// `|S_P(A, b) ∩ [n]^m|`, the number of solutions whose shape lies in `family`.
pub fn count_typed(list: &SolutionList, family: &PartitionFamily) -> u64 {
    let mask = list.shape_mask(family);
    list.shape_ids.iter().filter(|&&s| mask[s as usize]).count() as u64
}

/// Both sides of the correspondence between non-trivial solutions of shape
/// `p` and proper solutions of the contraction `A_p`:
/// `(|{x ∈ S_1 : p(x) = p} ∩ [n]^m|, |S_0(A_p, b) ∩ [n]^{|p|}|)`.
pub fn lemma1_check(spec: &SystemSpec, p: &Partition, n: u32) -> Result<(u64, u64)> {
    let a = spec.matrix();
    let in_family = partition_family_contains(a, p)?;
    let left = if in_family {
        let target = p.clone();
        match count_solutions_where(a, spec.rhs(), n, EnumOptions::default(), move |x| {
            Partition::from_keys(x) == target
        }) {
            Err(Error::Inconsistent) => 0,
            other => other?,
        }
    } else {
        0
    };
    let right = count_proper_solutions(&contract(a, p)?, spec.rhs(), n, EnumOptions::default())?;
    Ok((left, right))
}

/// Number of type-`family` solutions whose support meets `z` in at least
/// `min_hits` values. `z` must be sorted.
pub fn count_intersecting(
    list: &SolutionList,
    family: &PartitionFamily,
    z: &[u32],
    min_hits: usize,
) -> u64 {
    if z.is_empty() {
        return 0;
    }
    let mask = list.shape_mask(family);
    (0..list.len())
        .filter(|&i| mask[list.shape_ids[i] as usize])
        .filter(|&i| {
            list.support(i)
                .iter()
                .filter(|v| z.binary_search(v).is_ok())
                .count()
                >= min_hits
        })
        .count() as u64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CountKind {
    Proper,
    Typed(PartitionFamily),
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthFit {
    /// Least-squares slope of `ln count` against `ln n`.
    pub slope: f64,
    /// `m - rank(A)`.
    pub theoretical: usize,
    pub points: Vec<(u32, u64)>,
}

/// Fits the polynomial growth exponent of the solution count over `n_grid`.
pub fn growth_exponent(spec: &SystemSpec, kind: &CountKind, n_grid: &[u32]) -> Result<GrowthFit> {
    if n_grid.len() < 3 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "growth fit needs an increasing grid of at least three points".into(),
        ));
    }
    let a = spec.matrix();
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let count = match kind {
            CountKind::Proper => count_proper_solutions(a, spec.rhs(), n, EnumOptions::default())?,
            CountKind::Typed(family) => {
                let family = family.clone();
                count_solutions_where(a, spec.rhs(), n, EnumOptions::default(), move |x| {
                    family.contains(&Partition::from_keys(x))
                })?
            }
        };
        if count == 0 {
            return Err(Error::ZeroCount(n as u64));
        }
        points.push((n, count));
    }
    Ok(GrowthFit {
        slope: log_log_slope(&points),
        theoretical: a.cols() - a.rank(),
        points,
    })
}

pub(crate) fn log_log_slope(points: &[(u32, u64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, c)| (c as f64).ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Number of typed solutions per support size.
pub fn support_size_counts(list: &SolutionList, family: &PartitionFamily) -> BTreeMap<usize, u64> {
    let mask = list.shape_mask(family);
    let mut counts = BTreeMap::new();
    for i in 0..list.len() {
        if mask[list.shape_ids[i] as usize] {
            *counts.entry(list.support(i).len()).or_insert(0) += 1;
        }
    }
    counts
}

/// `E[X_n] = Σ_x p^{|{x}|}` over type-`family` solutions.
pub fn exact_mean(list: &SolutionList, family: &PartitionFamily, p: &BigRational) -> BigRational {
    support_size_counts(list, family)
        .into_iter()
        .fold(BigRational::zero(), |acc, (size, count)| {
            acc + BigRational::from_integer(count.into()) * Pow::pow(p, size as u32)
        })
}

/// Ordered pairs `(x, y)` of typed solutions with intersecting supports,
/// tallied by `(|{x}|, |{y}|, |{x} ∩ {y}|)`. Pairs with `x = y` are included.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OverlapProfile {
    pub counts: BTreeMap<(usize, usize, usize), u128>,
}

impl OverlapProfile {
    /// `Σ count · (p^{a+b-s} - p^{a+b})`, the variance of the typed count.
    pub fn variance(&self, p: &BigRational) -> BigRational {
        self.counts
            .iter()
            .fold(BigRational::zero(), |acc, (&(a, b, s), &c)| {
                let union: BigRational = Pow::pow(p, (a + b - s) as u32);
                let product: BigRational = Pow::pow(p, (a + b) as u32);
                acc + BigRational::from_integer(c.into()) * (union - product)
            })
    }

    pub fn total(&self) -> u128 {
        self.counts.values().sum()
    }
}

/// Overlap profile by walking, for each typed solution, the index lists of
/// its values and deduplicating partners with a per-solution stamp.
pub fn overlap_profile(list: &SolutionList, family: &PartitionFamily) -> OverlapProfile {
    let mask = list.shape_mask(family);
    let typed = |i: u32| mask[list.shape_ids[i as usize] as usize];
    let index = list.index();
    let mut stamp = vec![u32::MAX; list.len()];
    let mut counts: BTreeMap<(usize, usize, usize), u128> = BTreeMap::new();
    let mut local: HashMap<(usize, usize), u128> = HashMap::new();
    for x in 0..list.len() as u32 {
        if !typed(x) {
            continue;
        }
        let sx = list.support(x as usize);
        local.clear();
        for &v in sx {
            for &y in &index[v as usize - 1] {
                if stamp[y as usize] == x || !typed(y) {
                    continue;
                }
                stamp[y as usize] = x;
                let sy = list.support(y as usize);
                let shared = sorted_intersection_len(sx, sy);
                *local.entry((sy.len(), shared)).or_insert(0) += 1;
            }
        }
        for (&(b, s), &c) in &local {
            *counts.entry((sx.len(), b, s)).or_insert(0) += c;
        }
    }
    OverlapProfile { counts }
}

pub(crate) fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                k += 1;
                i += 1;
                j += 1;
            }
        }
    }
    k
}

/// Overlap profile by counting, for every set `T` of values, the typed
/// solutions whose support contains `T`, then inverting
/// `Σ_s C(s, j) P_s = Σ_{|T| = j} N(T)²` for the exact-overlap counts `P_s`.
///
/// Work is `Σ_x 2^{|{x}|}` hash updates; returns `None` when that exceeds
/// `budget` or a value set cannot be packed into a 128-bit key.
pub fn overlap_profile_by_subsets(
    list: &SolutionList,
    family: &PartitionFamily,
    budget: u128,
) -> Option<OverlapProfile> {
    let mask = list.shape_mask(family);
    let ids: Vec<usize> = (0..list.len())
        .filter(|&i| mask[list.shape_ids[i] as usize])
        .collect();
    let max_size = ids
        .iter()
        .map(|&i| list.support(i).len())
        .max()
        .unwrap_or(0);
    let work: u128 = ids.iter().map(|&i| 1u128 << list.support(i).len()).sum();
    let width = 32 - list.n.leading_zeros() as usize;
    if work > budget || max_size * width > 128 || max_size > 16 {
        return None;
    }
    // by_size[j][a]: map from packed j-set T to the number of typed solutions of
    // support size a containing T.
    let mut by_size: Vec<Vec<HashMap<u128, u64>>> =
        vec![vec![HashMap::new(); max_size + 1]; max_size + 1];
    for &i in &ids {
        let s = list.support(i);
        let a = s.len();
        for sub in 1u32..(1 << a) {
            let mut key = 0u128;
            for (t, &v) in s.iter().enumerate() {
                if sub >> t & 1 == 1 {
                    key = key << width | v as u128;
                }
            }
            *by_size[sub.count_ones() as usize][a]
                .entry(key)
                .or_insert(0) += 1;
        }
    }
    let mut counts = BTreeMap::new();
    for a in 1..=max_size {
        for b in 1..=max_size {
            // sums[j] = Σ_{|T| = j} N_a(T) N_b(T)
            let mut sums = vec![0i128; max_size + 1];
            for j in 1..=a.min(b) {
                let (small, large) = if by_size[j][a].len() <= by_size[j][b].len() {
                    (&by_size[j][a], &by_size[j][b])
                } else {
                    (&by_size[j][b], &by_size[j][a])
                };
                sums[j] = small
                    .iter()
                    .filter_map(|(k, &c)| large.get(k).map(|&d| c as i128 * d as i128))
                    .sum();
            }
            for s in 1..=a.min(b) {
                let exact: i128 = (s..=a.min(b))
                    .map(|j| {
                        let sign = if (j - s) % 2 == 0 { 1 } else { -1 };
                        sign * binomial(j, s) * sums[j]
                    })
                    .sum();
                if exact != 0 {
                    counts.insert((a, b, s), exact as u128);
                }
            }
        }
    }
    Some(OverlapProfile { counts })
}

fn binomial(n: usize, k: usize) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

/// `Var(X_n)` over type-`family` solutions, summing covariances of every
/// ordered pair with intersecting supports (including `x = y`).
pub fn exact_variance(
    list: &SolutionList,
    family: &PartitionFamily,
    p: &BigRational,
) -> BigRational {
    overlap_profile(list, family).variance(p)
}

/// Exact first two moments of the typed count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactMoments {
    #[serde(with = "crate::serde_util::rational")]
    pub mean: BigRational,
    #[serde(with = "crate::serde_util::rational")]
    pub variance: BigRational,
    pub n: u32,
    #[serde(with = "crate::serde_util::rational")]
    pub p: BigRational,
}

pub fn exact_moments(
    list: &SolutionList,
    family: &PartitionFamily,
    p: &BigRational,
) -> ExactMoments {
    ExactMoments {
        mean: exact_mean(list, family, p),
        variance: exact_variance(list, family, p),
        n: list.n,
        p: p.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system_properties::partition_family;

    fn spec(rows: &[&[i64]], b: &[i64]) -> SystemSpec {
        SystemSpec::from_rows(rows, b).unwrap()
    }

    fn ap() -> SystemSpec {
        spec(&[&[1, -2, 1]], &[0])
    }

    fn schur() -> SystemSpec {
        spec(&[&[1, 1, -1]], &[0])
    }

    fn sidon() -> SystemSpec {
        spec(&[&[1, 1, -1, -1]], &[0])
    }

    /// Naive m-fold loop over `[n]^m`.
    fn brute(spec: &SystemSpec, n: u32) -> Vec<Vec<u32>> {
        let a = spec.matrix();
        let m = a.cols();
        let mut out = Vec::new();
        let mut x = vec![1u32; m];
        loop {
            let xi: Vec<i64> = x.iter().map(|&v| v as i64).collect();
            if a.mul_i64(&xi) == spec.rhs() {
                out.push(x.clone());
            }
            let Some(pos) = (0..m).rev().find(|&i| x[i] < n) else {
                break;
            };
            x[pos] += 1;
            for v in x.iter_mut().skip(pos + 1) {
                *v = 1;
            }
        }
        out
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_solutions(&ap(), 5).unwrap().len(), 13);
        assert_eq!(enumerate_solutions(&schur(), 5).unwrap().len(), 10);
        assert_eq!(enumerate_solutions(&sidon(), 3).unwrap().len(), 19);
    }

    #[test]
    fn enumeration_matches_nested_loops() {
        let systems = [
            ap(),
            schur(),
            sidon(),
            spec(&[&[1, 1, 1, 1, -1]], &[6]),
            spec(&[&[2, 3, -1]], &[4]),
            spec(&[&[1, -2, 1, 0], &[0, 1, -2, 1]], &[0, 0]),
            spec(&[&[1, 1, 0, -1], &[2, 2, 0, -2]], &[0, 0]),
            spec(&[&[0, 0, 0]], &[0]),
            spec(&[&[3, 0, -3, 1]], &[2]),
        ];
        for s in &systems {
            for n in [1, 2, 5, 9, 12] {
                let list = enumerate_solutions(s, n).unwrap();
                let got: Vec<Vec<u32>> = list.iter().map(|x| x.values.to_vec()).collect();
                assert_eq!(got, brute(s, n), "{:?} n={n}", s.matrix());
            }
        }
    }

    #[test]
    fn inconsistent_and_guarded() {
        let bad = spec(&[&[1, 0, 0], &[1, 0, 0]], &[1, 2]);
        assert!(matches!(
            enumerate_solutions(&bad, 5),
            Err(Error::Inconsistent)
        ));
        let wide = spec(&[&[1, 1, 1, 1, 1, -1]], &[0]);
        assert!(matches!(
            enumerate_solutions_with(&wide, 100, EnumOptions { box_limit: 1000 }),
            Err(Error::BoxTooLarge { .. })
        ));
        // Rationally consistent but no integer points.
        let half = spec(&[&[2, 2, 2]], &[3]);
        assert!(enumerate_solutions(&half, 6).unwrap().is_empty());
    }

    #[test]
    fn supports_and_shapes() {
        let list = enumerate_solutions(&schur(), 5).unwrap();
        for x in list.iter() {
            let mut s = x.values.to_vec();
            s.sort_unstable();
            s.dedup();
            assert_eq!(x.support, &s[..]);
            assert_eq!(x.support.len(), x.shape.len());
            assert_eq!(*x.shape, Partition::from_keys(x.values));
        }
        for (v, ids) in list.index().iter().enumerate() {
            for &i in ids {
                assert!(list.support(i as usize).contains(&(v as u32 + 1)));
            }
        }
    }

    #[test]
    fn proper_and_typed_counts() {
        let l = enumerate_solutions(&ap(), 5).unwrap();
        assert_eq!(count_proper(&l), 8);
        assert_eq!(
            count_typed(&l, &partition_family(ap().matrix()).unwrap()),
            8
        );
        assert_eq!(count_typed(&l, &PartitionFamily::empty()), 0);

        let l = enumerate_solutions(&schur(), 5).unwrap();
        assert_eq!(count_proper(&l), 8);
        assert_eq!(
            count_typed(&l, &partition_family(schur().matrix()).unwrap()),
            10
        );

        let l = enumerate_solutions(&sidon(), 4).unwrap();
        assert_eq!(count_proper(&l), 8);
        let l = enumerate_solutions(&sidon(), 3).unwrap();
        assert_eq!(count_proper(&l), 0);
    }

    #[test]
    fn lemma1_examples() {
        let p = Partition::from_classes(&[vec![0, 1], vec![2]], 3).unwrap();
        assert_eq!(lemma1_check(&schur(), &p, 5).unwrap(), (2, 2));
        let p = Partition::from_classes(&[vec![0, 2], vec![1]], 3).unwrap();
        assert_eq!(lemma1_check(&ap(), &p, 5).unwrap(), (0, 0));
        assert_eq!(
            lemma1_check(&ap(), &Partition::discrete(3), 5).unwrap(),
            (8, 8)
        );
    }

    #[test]
    fn intersecting_counts() {
        let l = enumerate_solutions(&ap(), 5).unwrap();
        let d = PartitionFamily::discrete(3);
        // Every proper 3-AP in [5] passes through 3.
        assert_eq!(count_intersecting(&l, &d, &[3], 1), 8);
        assert_eq!(count_intersecting(&l, &d, &[1], 1), 4);
        assert_eq!(count_intersecting(&l, &d, &[], 1), 0);
        let all: Vec<u32> = (1..=5).collect();
        assert_eq!(count_intersecting(&l, &d, &all, 1), count_typed(&l, &d));
    }

    #[test]
    fn exact_moment_examples() {
        let l = enumerate_solutions(&ap(), 5).unwrap();
        let d = PartitionFamily::discrete(3);
        assert_eq!(exact_mean(&l, &d, &q(1, 2)), q(1, 1));
        assert_eq!(exact_mean(&l, &d, &q(1, 1)), q(8, 1));
        assert_eq!(exact_mean(&l, &d, &q(0, 1)), q(0, 1));
        // Brute-force double loop over the 8 proper solutions gives 7/2.
        assert_eq!(exact_variance(&l, &d, &q(1, 2)), q(7, 2));
        assert_eq!(exact_variance(&l, &d, &q(1, 1)), q(0, 1));
        assert_eq!(exact_variance(&l, &d, &q(0, 1)), q(0, 1));
    }

    /// All ordered pairs, no index.
    fn naive_variance(
        list: &SolutionList,
        family: &PartitionFamily,
        p: &BigRational,
    ) -> BigRational {
        let typed: Vec<_> = list.iter().filter(|x| family.contains(x.shape)).collect();
        let mut v = BigRational::zero();
        for x in &typed {
            for y in &typed {
                let shared = x.support.iter().filter(|a| y.support.contains(a)).count();
                if shared > 0 {
                    let (a, b) = (x.support.len(), y.support.len());
                    let u: BigRational = Pow::pow(p, (a + b - shared) as u32);
                    let w: BigRational = Pow::pow(p, (a + b) as u32);
                    v += u - w;
                }
            }
        }
        v
    }

    #[test]
    fn variance_routes_agree_with_all_pairs() {
        for s in [ap(), schur(), sidon(), spec(&[&[1, 1, 1, 1, -1]], &[6])] {
            let fam = partition_family(s.matrix()).unwrap();
            for n in [4, 6, 8] {
                let l = enumerate_solutions(&s, n).unwrap();
                let idx = overlap_profile(&l, &fam);
                let sub = overlap_profile_by_subsets(&l, &fam, u128::MAX).unwrap();
                assert_eq!(idx, sub);
                for p in [q(1, 3), q(1, 2), q(9, 10)] {
                    let v = exact_variance(&l, &fam, &p);
                    assert!(!v.is_negative());
                    assert_eq!(v, naive_variance(&l, &fam, &p));
                }
            }
        }
    }

    #[test]
    fn growth_fits() {
        let fit = growth_exponent(&ap(), &CountKind::Proper, &[50, 100, 200, 400]).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.1, "{fit:?}");
        let fit = growth_exponent(&schur(), &CountKind::Proper, &[50, 100, 200, 400]).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.1, "{fit:?}");
        assert!(matches!(
            growth_exponent(&sidon(), &CountKind::Proper, &[2, 3, 4, 5]),
            Err(Error::ZeroCount(2))
        ));
    }
}
