//! Compounded matrices `A ×^M B`.
//!
//! The compound stacks `A` over `B` and glues the columns `p ∈ P` of `A` to
//! the columns `M(p)` of `B`. Column order: the columns of `A` outside `P`,
//! then the shared columns in increasing `p`, then the columns of `B` outside
//! `M(P)`. Solutions of `(A ×^M B) z = (b, b)` are pairs of solutions that
//! agree on the glued coordinates.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_linalg::{null_space_basis, ColSet, IntMatrix};
use crate::system_properties::{is_abundant, is_positive};

/// An injective map from columns of `A` to columns of `B`, as pairs sorted
/// by the `A` side.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Embedding {
    pairs: Vec<(usize, usize)>,
}

impl Embedding {
    /// Validates injectivity and bounds against an `m_a`-column source and
    /// an `m_b`-column target.
    pub fn new(mut pairs: Vec<(usize, usize)>, m_a: usize, m_b: usize) -> Result<Self> {
        pairs.sort_unstable();
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::BadEmbedding(format!(
                    "column {} of the left matrix is mapped twice",
                    w[0].0 + 1
                )));
            }
        }
        let mut image: Vec<usize> = pairs.iter().map(|&(_, q)| q).collect();
        image.sort_unstable();
        if image.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::BadEmbedding("map is not injective".into()));
        }
        if let Some(&(p, q)) = pairs.iter().find(|&&(p, q)| p >= m_a || q >= m_b) {
            return Err(Error::BadEmbedding(format!(
                "pair ({}, {}) is outside {m_a} x {m_b} columns",
                p + 1,
                q + 1
            )));
        }
        Ok(Embedding { pairs })
    }

    /// The empty map, giving the block-diagonal compound.
    pub fn empty() -> Self {
        Embedding::default()
    }

    /// `id_Q` on an `m`-column matrix.
    pub fn identity(q: &ColSet, m: usize) -> Result<Self> {
        Embedding::new(q.iter().map(|j| (j, j)).collect(), m, m)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn validate(&self, m_a: usize, m_b: usize) -> Result<()> {
        Embedding::new(self.pairs.clone(), m_a, m_b).map(|_| ())
    }
}

/// A compound matrix with maps from its columns back to the source columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompoundResult {
    pub matrix: IntMatrix,
    /// `rho_a[j]`: the column of `A` behind compound column `j`, if any.
    pub rho_a: Vec<Option<usize>>,
    /// `rho_b[j]`: the column of `B` behind compound column `j`, if any.
    pub rho_b: Vec<Option<usize>>,
}

impl CompoundResult {
    pub fn rank(&self) -> usize {
        self.matrix.rank()
    }

    /// Compound columns shared by both factors.
    pub fn shared_columns(&self) -> Vec<usize> {
        (0..self.matrix.cols())
            .filter(|&j| self.rho_a[j].is_some() && self.rho_b[j].is_some())
            .collect()
    }

    /// Splits a compound vector into the `A` and `B` coordinate vectors.
    pub fn split<T: Clone + Default>(&self, z: &[T], m_a: usize, m_b: usize) -> (Vec<T>, Vec<T>) {
        let mut x = vec![T::default(); m_a];
        let mut y = vec![T::default(); m_b];
        for (j, v) in z.iter().enumerate() {
            if let Some(i) = self.rho_a[j] {
                x[i] = v.clone();
            }
            if let Some(i) = self.rho_b[j] {
                y[i] = v.clone();
            }
        }
        (x, y)
    }
}

pub fn compound(a: &IntMatrix, b: &IntMatrix, map: &Embedding) -> Result<CompoundResult> {
    let (m_a, m_b) = (a.cols(), b.cols());
    map.validate(m_a, m_b)?;
    let shared_a: Vec<usize> = map.pairs.iter().map(|&(p, _)| p).collect();
    let shared_b: Vec<usize> = map.pairs.iter().map(|&(_, q)| q).collect();

    let mut rho_a = Vec::with_capacity(m_a + m_b);
    let mut rho_b = Vec::with_capacity(m_a + m_b);
    for j in (0..m_a).filter(|j| !shared_a.contains(j)) {
        rho_a.push(Some(j));
        rho_b.push(None);
    }
    for &(p, q) in &map.pairs {
        rho_a.push(Some(p));
        rho_b.push(Some(q));
    }
    for j in (0..m_b).filter(|j| !shared_b.contains(j)) {
        rho_a.push(None);
        rho_b.push(Some(j));
    }

    let (r_a, r_b) = (a.rows(), b.rows());
    let mut matrix = IntMatrix::zeros(r_a + r_b, rho_a.len());
    for (j, (ca, cb)) in rho_a.iter().zip(&rho_b).enumerate() {
        if let Some(ca) = *ca {
            for i in 0..r_a {
                matrix.set(i, j, a.get(i, ca).clone());
            }
        }
        if let Some(cb) = *cb {
            for i in 0..r_b {
                matrix.set(r_a + i, j, b.get(i, cb).clone());
            }
        }
    }
    Ok(CompoundResult {
        matrix,
        rho_a,
        rho_b,
    })
}

/// `A ×^{id_Q} A`, checked against `rank = rank(A) + rank(A^{Q̄})`.
pub fn self_compound(a: &IntMatrix, q: &ColSet) -> Result<CompoundResult> {
    let result = compound(a, a, &Embedding::identity(q, a.cols())?)?;
    let expected = a.rank() + a.select_columns(&q.complement(a.cols()))?.rank();
    let got = result.rank();
    if got != expected {
        return Err(Error::RankIdentityViolation(format!(
            "rank of A x^id_Q A is {got}, expected {expected}"
        )));
    }
    Ok(result)
}

/// `t + 2` copies of `A` glued at the single column `i`:
/// `A ×^{id_i} A ×^{M_1} A ... ×^{M_t} A`, built left to right.
///
/// Each step glues the column carrying the shared value to column `i` of the
/// new copy, so every pair of copies meets exactly there. The rank is checked
/// against `rank(A) + (t + 1)·rank(A^{Q̄})`. The column maps describe the last
/// step: `rho_b` points into the final copy.
pub fn milky_way_matrix(a: &IntMatrix, i: usize, t: usize) -> Result<CompoundResult> {
    let m = a.cols();
    if i >= m {
        return Err(Error::IndexOutOfRange { index: i, cols: m });
    }
    if t == 0 {
        return Err(Error::InvalidArgument("t must be at least 1".into()));
    }
    if !is_positive(a) {
        return Err(Error::NotPositive);
    }
    if !is_abundant(a) {
        return Err(Error::NotAbundant);
    }
    let q = ColSet::new(vec![i], m)?;
    let mut acc = compound(a, a, &Embedding::identity(&q, m)?)?;
    for j in 1..=t {
        // The shared column sits right after the j copies of A^{Q̄}.
        let shared = j * (m - 1);
        let map = Embedding::new(vec![(shared, i)], acc.matrix.cols(), m)?;
        acc = compound(&acc.matrix, a, &map)?;
    }
    let expected = a.rank() + (t + 1) * a.select_columns(&q.complement(m))?.rank();
    let got = acc.rank();
    if got != expected {
        return Err(Error::RankIdentityViolation(format!(
            "milky-way rank is {got}, expected {expected}"
        )));
    }
    Ok(acc)
}

/// Columns `j` with `x_j = 0` for every `x` in the null space of `A`.
pub fn always_zero_coordinates(a: &IntMatrix) -> ColSet {
    let basis = null_space_basis(a);
    let zero: Vec<usize> = (0..a.cols())
        .filter(|&j| basis.iter().all(|v| v.entries()[j].is_zero()))
        .collect();
    ColSet::new(zero, a.cols()).expect("indices in range")
}

/// `Q' = Q ∪ Q_1`, where `Q_1` holds the always-zero coordinates of `A^{Q̄}`.
///
/// Those columns are independent and their span misses the other columns of
/// `A^{Q̄}`, so moving them into `Q` keeps `m - |Q| - rank(A^{Q̄})` and leaves
/// `A^{Q̄'}` with a nowhere-zero null vector.
pub fn extend_q(a: &IntMatrix, q: &ColSet) -> Result<ColSet> {
    let rest = q.complement(a.cols());
    let zero = always_zero_coordinates(&a.select_columns(&rest)?);
    let lifted: Vec<usize> = zero.iter().map(|k| rest.indices()[k]).collect();
    Ok(q.union(&ColSet::new(lifted, a.cols())?))
}

/// Stacks `b` on top of itself `copies` times, the right-hand side of a
/// compound of that many factors.
pub fn repeat_rhs(b: &[BigInt], copies: usize) -> Vec<BigInt> {
    (0..copies).flat_map(|_| b.iter().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::{count_proper, enumerate_solutions};
    use crate::system_properties::SystemSpec;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(rows).unwrap()
    }

    fn cols(ix: &[usize], n: usize) -> ColSet {
        ColSet::new(ix.to_vec(), n).unwrap()
    }

    #[test]
    fn progression_glued_at_first_column() {
        let a = m(&[&[1, -2, 1]]);
        let c = self_compound(&a, &cols(&[0], 3)).unwrap();
        assert_eq!(c.matrix, m(&[&[-2, 1, 1, 0, 0], &[0, 0, 1, -2, 1]]));
        assert_eq!(c.rank(), 2);
        assert_eq!(c.shared_columns(), vec![2]);
        assert_eq!(c.rho_a, vec![Some(1), Some(2), Some(0), None, None]);
        assert_eq!(c.rho_b, vec![None, None, Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn shapes_and_block_diagonal() {
        let a = m(&[&[1, 1, -1]]);
        let b = m(&[&[2, 0, 1]]);
        let two = Embedding::new(vec![(0, 2), (2, 1)], 3, 3).unwrap();
        let c = compound(&a, &b, &two).unwrap();
        assert_eq!((c.matrix.rows(), c.matrix.cols()), (2, 4));

        let d = compound(&a, &b, &Embedding::empty()).unwrap();
        assert_eq!(d.matrix, m(&[&[1, 1, -1, 0, 0, 0], &[0, 0, 0, 2, 0, 1]]));
        assert_eq!(d.rank(), 2);
        assert_eq!(self_compound(&a, &ColSet::empty()).unwrap().rank(), 2);
        let full = self_compound(&m(&[&[1, 1, -1, -1]]), &ColSet::full(4)).unwrap();
        assert_eq!(full.rank(), 1);
    }

    #[test]
    fn bad_embeddings() {
        assert!(matches!(
            Embedding::new(vec![(0, 1), (0, 2)], 3, 3),
            Err(Error::BadEmbedding(_))
        ));
        assert!(matches!(
            Embedding::new(vec![(0, 1), (2, 1)], 3, 3),
            Err(Error::BadEmbedding(_))
        ));
        assert!(matches!(
            Embedding::new(vec![(3, 0)], 3, 3),
            Err(Error::BadEmbedding(_))
        ));
    }

    #[test]
    fn milky_way_examples() {
        let ap = m(&[&[1, -2, 1]]);
        let c = milky_way_matrix(&ap, 1, 1).unwrap();
        assert_eq!((c.matrix.rows(), c.matrix.cols()), (3, 7));
        assert_eq!(c.rank(), 3);
        assert_eq!(
            c.matrix,
            m(&[
                &[1, 1, 0, 0, -2, 0, 0],
                &[0, 0, 1, 1, -2, 0, 0],
                &[0, 0, 0, 0, -2, 1, 1]
            ])
        );
        let c = milky_way_matrix(&ap, 0, 2).unwrap();
        assert_eq!((c.matrix.rows(), c.matrix.cols()), (4, 9));
        assert_eq!(c.rank(), 4);
        assert_eq!(
            milky_way_matrix(&m(&[&[1, 1, -1]]), 2, 1).unwrap().rank(),
            3
        );
        assert!(is_positive(&milky_way_matrix(&ap, 1, 3).unwrap().matrix));

        assert!(matches!(
            milky_way_matrix(&m(&[&[1, -1, 0, 0], &[0, 0, 1, -1]]), 0, 1),
            Err(Error::NotPositive | Error::NotAbundant)
        ));
        assert!(matches!(
            milky_way_matrix(&ap, 0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn milky_way_solutions_meet_in_one_value() {
        // Every proper solution is t + 2 progressions through a common middle.
        let ap = m(&[&[1, -2, 1]]);
        let c = milky_way_matrix(&ap, 1, 1).unwrap();
        let spec = SystemSpec::homogeneous(c.matrix.clone()).unwrap();
        let list = enumerate_solutions(&spec, 7).unwrap();
        for x in list.iter().filter(|x| x.is_proper()) {
            let v = x.values;
            let mid = v[4];
            assert_eq!(v[0] + v[1], 2 * mid);
            assert_eq!(v[2] + v[3], 2 * mid);
            assert_eq!(v[5] + v[6], 2 * mid);
        }
        // Ordered triples of pairwise-disjoint progressions around each middle.
        let mut expected = 0u64;
        for mid in 1..=7i64 {
            let arms = (1..=7i64)
                .filter(|&d| d != mid && (2 * mid - d) >= 1 && (2 * mid - d) <= 7)
                .count() as u64;
            // arms counts ordered (lo, hi) legs; choose 3 distinct unordered legs in order.
            let legs = arms / 2;
            if legs >= 3 {
                expected += (2 * legs) * (2 * (legs - 1)) * (2 * (legs - 2));
            }
        }
        assert_eq!(count_proper(&list), expected);
    }

    #[test]
    fn always_zero_and_extension() {
        assert!(always_zero_coordinates(&m(&[&[1, -2, 1]])).is_empty());
        assert!(always_zero_coordinates(&m(&[&[1, 1, -1]])).is_empty());
        assert_eq!(
            always_zero_coordinates(&m(&[&[1, 0, 0], &[0, 1, 0]])),
            cols(&[0, 1], 3)
        );

        let ap = m(&[&[1, -2, 1]]);
        assert_eq!(extend_q(&ap, &cols(&[0], 3)).unwrap(), cols(&[0], 3));
        let schur = m(&[&[1, 1, -1]]);
        assert_eq!(extend_q(&schur, &cols(&[2], 3)).unwrap(), cols(&[2], 3));

        // Dropping column 1 leaves (1 0 0; 0 1 0) on columns 2..4.
        let a = m(&[&[1, 1, 0, 0], &[1, 0, 1, 0]]);
        let q = cols(&[0], 4);
        let q2 = extend_q(&a, &q).unwrap();
        assert_eq!(q2, cols(&[0, 1, 2], 4));
        let excess = |q: &ColSet| {
            let rest = a.select_columns(&q.complement(4)).unwrap();
            4 - q.len() - rest.rank()
        };
        assert_eq!(excess(&q), excess(&q2));
    }

    #[test]
    fn compound_solutions_are_pairs_meeting_on_q() {
        for (rows, q) in [
            (vec![vec![1i64, -2, 1]], vec![1usize]),
            (vec![vec![1, 1, -1]], vec![0]),
            (vec![vec![1, 1, -1, -1]], vec![0, 3]),
        ] {
            let a = IntMatrix::from_rows(&rows).unwrap();
            let mcols = a.cols();
            let q = ColSet::new(q, mcols).unwrap();
            let c = self_compound(&a, &q).unwrap();
            let n = 7;
            let spec = SystemSpec::homogeneous(c.matrix.clone()).unwrap();
            let got = count_proper(&enumerate_solutions(&spec, n).unwrap());

            let base =
                enumerate_solutions(&SystemSpec::homogeneous(a.clone()).unwrap(), n).unwrap();
            let proper: Vec<&[u32]> = base
                .iter()
                .filter(|x| x.is_proper())
                .map(|x| x.values)
                .collect();
            let mut pairs = 0u64;
            for x in &proper {
                for y in &proper {
                    let ok = (0..mcols)
                        .all(|i| (0..mcols).all(|j| (x[i] == y[j]) == (i == j && q.contains(i))));
                    pairs += u64::from(ok);
                }
            }
            assert_eq!(got, pairs, "{a:?} Q={q:?}");
        }
    }

    #[test]
    fn split_recovers_factors() {
        let a = m(&[&[1, -2, 1]]);
        let c = self_compound(&a, &cols(&[1], 3)).unwrap();
        let z = [10, 20, 15, 30, 40];
        let (x, y) = c.split(&z, 3, 3);
        assert_eq!(x, vec![10, 15, 20]);
        assert_eq!(y, vec![30, 15, 40]);
    }

    #[test]
    fn empty_maps_associate() {
        let a = m(&[&[1, -2, 1]]);
        let b = m(&[&[1, 1, -1]]);
        let c = m(&[&[2, 3, -1, 4]]);
        let e = Embedding::empty();
        let left = compound(&compound(&a, &b, &e).unwrap().matrix, &c, &e).unwrap();
        let right = compound(&a, &compound(&b, &c, &e).unwrap().matrix, &e).unwrap();
        assert_eq!(left.matrix, right.matrix);
    }

    #[test]
    fn gluing_is_not_associative() {
        // Both sides glue "column 1 to column 1" twice, yet the left glues the
        // third factor to A's second column and the right to B's first.
        let a = m(&[&[1, -2, 1]]);
        let glue = Embedding::new(vec![(0, 0)], 3, 3).unwrap();
        let ab = compound(&a, &a, &glue).unwrap().matrix;
        let left = compound(&ab, &a, &Embedding::new(vec![(0, 0)], 5, 3).unwrap()).unwrap();
        let bc = compound(&a, &a, &glue).unwrap().matrix;
        let right = compound(&a, &bc, &Embedding::new(vec![(0, 0)], 3, 5).unwrap()).unwrap();
        let sorted_cols = |c: &IntMatrix| {
            let mut v: Vec<Vec<BigInt>> = (0..c.cols()).map(|j| c.column(j)).collect();
            v.sort();
            v
        };
        assert_ne!(sorted_cols(&left.matrix), sorted_cols(&right.matrix));
    }
}
