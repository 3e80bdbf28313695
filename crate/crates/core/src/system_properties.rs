//! Structural predicates of an integer matrix `A`: positivity (with
//! irredundancy), abundance, density `c(A)`, partition contraction, the
//! partition families `P(A)` and `P_0(A)`, strict balance, and the
//! preconditions of the normal-limit theorem for type-`P` counts.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::census::{count_proper_solutions, EnumOptions};
use crate::error::{Error, Result};
use crate::exact_linalg::{solvable_over_integers, ColSet, IntMatrix};
use crate::feasibility::nonnegative_solution;
use crate::partition::{enumerate_partitions, Partition, PartitionFamily, MAX_PARTITION_SIZE};

/// Widest matrix accepted by a [`SystemSpec`]; column subsets are bit masks.
pub const MAX_COLUMNS: usize = 64;

/// A linear system `Ax = b` with `m > r`, plus an optional partition family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemSpec {
    a: IntMatrix,
    b: Vec<BigInt>,
    family: Option<PartitionFamily>,
}

impl SystemSpec {
    pub fn new(a: IntMatrix, b: Vec<BigInt>) -> Result<Self> {
        if a.cols() <= a.rows() {
            return Err(Error::BadMatrix(format!(
                "need more columns than rows, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if a.cols() > MAX_COLUMNS {
            return Err(Error::TooLarge {
                what: "column count",
                size: a.cols() as u128,
                limit: MAX_COLUMNS as u128,
            });
        }
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                actual: b.len(),
            });
        }
        Ok(SystemSpec { a, b, family: None })
    }

    /// Homogeneous system `Ax = 0`.
    pub fn homogeneous(a: IntMatrix) -> Result<Self> {
        let b = vec![BigInt::zero(); a.rows()];
        SystemSpec::new(a, b)
    }

    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R], b: &[i64]) -> Result<Self> {
        SystemSpec::new(
            IntMatrix::from_rows(rows)?,
            b.iter().map(|&v| v.into()).collect(),
        )
    }

    pub fn with_family(mut self, family: PartitionFamily) -> Result<Self> {
        if family.ground_size().is_some_and(|m| m != self.a.cols()) {
            return Err(Error::BadPartition(format!(
                "family is not over {} columns",
                self.a.cols()
            )));
        }
        self.family = Some(family);
        Ok(self)
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &[BigInt] {
        &self.b
    }

    pub fn family(&self) -> Option<&PartitionFamily> {
        self.family.as_ref()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.b.iter().all(Zero::is_zero)
    }
}

/// Positive integer solution of `Ax = 0`, if any.
///
/// Decided as rational feasibility of `{Ax = 0, x >= 1}`: with `x = 1 + s`
/// this is `As = -A·1, s >= 0`. The homogeneous cone is scale invariant, so a
/// rational point scales to an integer one.
pub fn positive_witness(a: &IntMatrix) -> Option<Vec<BigInt>> {
    let ones = vec![BigInt::one(); a.cols()];
    let rhs: Vec<BigInt> = a.mul_int(&ones).into_iter().map(|v| -v).collect();
    let s = nonnegative_solution(a, &rhs)?;
    let x: Vec<BigRational> = s.into_iter().map(|v| v + BigRational::one()).collect();
    let lcm = x.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = x.iter().map(|q| q.numer() * (&lcm / q.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    Some(ints.into_iter().map(|v| v / &g).collect())
}

/// Whether some homogeneous solution separates every pair of coordinates,
/// i.e. `rank([A; e_i - e_j]) > rank(A)` for all `i < j`.
pub fn is_irredundant(a: &IntMatrix) -> bool {
    let m = a.cols();
    let rank = a.rank();
    (0..m).all(|i| {
        (i + 1..m).all(|j| {
            let mut row = vec![BigInt::zero(); m];
            row[i] = BigInt::one();
            row[j] = -BigInt::one();
            a.with_row(&row).expect("row width matches").rank() > rank
        })
    })
}

pub fn is_positive(a: &IntMatrix) -> bool {
    a.cols() > 0 && is_irredundant(a) && positive_witness(a).is_some()
}

/// `rank(A) > 0` and deleting any one or two columns keeps the rank.
pub fn is_abundant(a: &IntMatrix) -> bool {
    let m = a.cols();
    let rank = a.rank();
    if rank == 0 {
        return false;
    }
    let full = ColSet::full(m);
    let kept_rank = |drop: &[usize]| {
        let keep: Vec<usize> = full.iter().filter(|j| !drop.contains(j)).collect();
        a.select_indices(&keep).rank()
    };
    (0..m).all(|i| kept_rank(&[i]) == rank && (i + 1..m).all(|j| kept_rank(&[i, j]) == rank))
}

/// Rank of `A^Q` for every column mask `Q`, indexed by mask.
pub(crate) fn subset_ranks(a: &IntMatrix) -> Result<Vec<usize>> {
    let m = a.cols();
    if m > MAX_PARTITION_SIZE + 8 {
        return Err(Error::TooLarge {
            what: "column count for subset enumeration",
            size: m as u128,
            limit: (MAX_PARTITION_SIZE + 8) as u128,
        });
    }
    Ok((0..1u64 << m)
        .into_par_iter()
        .map(|mask| a.select_mask(mask).rank())
        .collect())
}

/// `|Q| / (|Q| - r_Q)` for every nonempty mask `Q`, or the first mask with a
/// zero denominator.
fn subset_ratios(a: &IntMatrix, ranks: &[usize]) -> Result<Vec<(u64, BigRational)>> {
    let m = a.cols();
    let full = (1u64 << m) - 1;
    let rank = ranks[full as usize];
    (1..=full)
        .map(|q| {
            let size = q.count_ones() as usize;
            let r_q = rank - ranks[(full & !q) as usize];
            if size <= r_q {
                return Err(Error::DegenerateDenominator(
                    ColSet::from_mask(q).one_based(),
                ));
            }
            Ok((
                q,
                BigRational::new(BigInt::from(size), BigInt::from(size - r_q)),
            ))
        })
        .collect()
}

/// Density `c(A) = max_{Q ≠ ∅} |Q| / (|Q| - r_Q)` by full subset enumeration.
pub fn density(a: &IntMatrix) -> Result<BigRational> {
    let ranks = subset_ranks(a)?;
    density_from_ranks(a, &ranks)
}

fn density_from_ranks(a: &IntMatrix, ranks: &[usize]) -> Result<BigRational> {
    let ratios = subset_ratios(a, ranks)?;
    Ok(ratios
        .into_iter()
        .map(|(_, r)| r)
        .max()
        .expect("at least one nonempty subset"))
}

/// The contraction `A_p`: column `j` is the sum of the columns in class `j`.
pub fn contract(a: &IntMatrix, p: &Partition) -> Result<IntMatrix> {
    if p.ground_size() != a.cols() {
        return Err(Error::BadPartition(format!(
            "{p} does not partition {} columns",
            a.cols()
        )));
    }
    let k = p.len();
    let mut out = IntMatrix::zeros(a.rows(), k);
    for i in 0..a.rows() {
        let mut row = vec![BigInt::zero(); k];
        for j in 0..a.cols() {
            row[p.class_of(j)] += a.get(i, j);
        }
        for (j, v) in row.into_iter().enumerate() {
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// `c(A_p)`, or `None` when the contraction has a degenerate subset ratio.
pub fn contract_density(a: &IntMatrix, p: &Partition) -> Option<BigRational> {
    contract(a, p).ok().and_then(|ap| density(&ap).ok())
}

fn check_partition_width(a: &IntMatrix) -> Result<()> {
    if a.cols() > MAX_PARTITION_SIZE {
        return Err(Error::TooLarge {
            what: "partition ground set",
            size: a.cols() as u128,
            limit: MAX_PARTITION_SIZE as u128,
        });
    }
    Ok(())
}

/// Whether `rank(A_p) = rank(A)`.
pub fn partition_family_contains(a: &IntMatrix, p: &Partition) -> Result<bool> {
    Ok(contract(a, p)?.rank() == a.rank())
}

/// `P(A)`: partitions whose contraction keeps the rank.
pub fn partition_family(a: &IntMatrix) -> Result<PartitionFamily> {
    check_partition_width(a)?;
    let rank = a.rank();
    let parts = enumerate_partitions(a.cols())?;
    let keep: Vec<Partition> = parts
        .into_par_iter()
        .filter(|p| contract(a, p).expect("sized partition").rank() == rank)
        .collect();
    PartitionFamily::new(keep, a.cols())
}

/// `P_0(A)`: members of `P(A)` with a positive contraction.
pub fn positive_partition_family(a: &IntMatrix) -> Result<PartitionFamily> {
    let family = partition_family(a)?;
    let keep: Vec<Partition> = family
        .iter()
        .cloned()
        .collect::<Vec<_>>()
        .into_par_iter()
        .filter(|p| is_positive(&contract(a, p).expect("sized partition")))
        .collect();
    PartitionFamily::new(keep, a.cols())
}

/// Strict balance: the full ratio `m / (m - rank)` strictly beats every proper
/// nonempty subset, and `c(A) > c(A_p)` for every non-discrete `p ∈ P(A)`
/// with `A_p` positive.
pub fn is_strictly_balanced(a: &IntMatrix) -> Result<bool> {
    let m = a.cols();
    let ranks = subset_ranks(a)?;
    let ratios = subset_ratios(a, &ranks)?;
    let full = (1u64 << m) - 1;
    let c_full = BigRational::new(BigInt::from(m), BigInt::from(m - a.rank()));
    let beats_subsets = ratios
        .iter()
        .filter(|(q, _)| *q != full)
        .all(|(_, r)| c_full > *r);
    if !beats_subsets {
        return Ok(false);
    }
    for p in partition_family(a)?.iter().filter(|p| !p.is_discrete()) {
        let ap = contract(a, p)?;
        if is_positive(&ap) && density(&ap)? >= c_full {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub positive: bool,
    #[serde(
        with = "crate::serde_util::opt_big_vec",
        skip_serializing_if = "Option::is_none"
    )]
    pub positive_witness: Option<Vec<BigInt>>,
    pub abundant: bool,
    /// Present only for positive matrices.
    #[serde(
        with = "crate::serde_util::opt_rational",
        skip_serializing_if = "Option::is_none"
    )]
    pub density: Option<BigRational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strictly_balanced: Option<bool>,
    pub partition_family_size: usize,
    pub positive_partition_family_size: usize,
}

pub fn analyze(a: &IntMatrix) -> Result<PropertyReport> {
    let positive = is_positive(a);
    let (density, strictly_balanced) = if positive {
        (Some(density(a)?), Some(is_strictly_balanced(a)?))
    } else {
        (None, None)
    };
    Ok(PropertyReport {
        rows: a.rows(),
        cols: a.cols(),
        rank: a.rank(),
        positive,
        positive_witness: if positive { positive_witness(a) } else { None },
        abundant: is_abundant(a),
        density,
        strictly_balanced,
        partition_family_size: partition_family(a)?.len(),
        positive_partition_family_size: positive_partition_family(a)?.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PreconditionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of [`check_theorem_preconditions`]: every check in order, the
/// first failure named.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PreconditionReport {
    pub passed: bool,
    pub first_failure: Option<&'static str>,
    pub checks: Vec<PreconditionCheck>,
    pub n_max: u32,
    /// Emptiness of proper contracted solution sets is only checked inside
    /// `[n_max]`.
    pub caveat: String,
}

/// Checks the hypotheses under which the type-`family` count is
/// asymptotically normal: `A` positive and abundant, `S(A, b) ≠ ∅` over the
/// integers, the discrete partition in `family`, `family ⊆ P(A)`, and every
/// member with proper contracted solutions inside `[n_max]` lying in `P_0(A)`.
pub fn check_theorem_preconditions(
    spec: &SystemSpec,
    family: &PartitionFamily,
    n_max: u32,
) -> PreconditionReport {
    let a = spec.matrix();
    let m = a.cols();
    let mut checks = Vec::new();
    let mut push = |name: &'static str, passed: bool, detail: String| {
        checks.push(PreconditionCheck {
            name,
            passed,
            detail,
        })
    };

    let solvable = solvable_over_integers(a, spec.rhs()).unwrap_or(false);
    push(
        "integer_solvable",
        solvable,
        if solvable {
            String::new()
        } else {
            "S(A,b) is empty over the integers".into()
        },
    );
    push("positive", is_positive(a), String::new());
    push("abundant", is_abundant(a), String::new());
    push(
        "discrete_in_family",
        family.contains(&Partition::discrete(m)),
        String::new(),
    );

    match partition_family(a) {
        Ok(full) => {
            let outside: Vec<String> = family
                .iter()
                .filter(|p| !full.contains(p))
                .map(ToString::to_string)
                .collect();
            push(
                "family_within_nontrivial",
                outside.is_empty(),
                outside.join(" "),
            );
        }
        Err(e) => push("family_within_nontrivial", false, e.to_string()),
    }

    let mut offending = Vec::new();
    for p in family.iter() {
        let Ok(ap) = contract(a, p) else {
            offending.push(format!("{p}: bad partition"));
            continue;
        };
        let count = count_proper_solutions(&ap, spec.rhs(), n_max, EnumOptions::default());
        match count {
            Ok(0) => {}
            Ok(c) => {
                if !is_positive(&ap) {
                    offending.push(format!(
                        "{p}: {c} proper contracted solutions, A_p not positive"
                    ));
                }
            }
            Err(e) => offending.push(format!("{p}: {e}")),
        }
    }
    push(
        "solvable_partitions_positive",
        offending.is_empty(),
        offending.join("; "),
    );

    let first_failure = checks.iter().find(|c| !c.passed).map(|c| c.name);
    PreconditionReport {
        passed: first_failure.is_none(),
        first_failure,
        checks,
        n_max,
        caveat: format!(
            "S_0(A_p, b) checked for emptiness only inside [{n_max}]^|p|, not over all integers"
        ),
    }
}
