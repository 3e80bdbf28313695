//! Set partitions of `{0, .., m-1}` in canonical form.
//!
//! A partition is stored as its restricted growth string: element `i` carries
//! the label of its class, and classes are labelled in order of their minimum
//! element. Two partitions are equal iff their strings are equal, and the
//! classes come out ordered by minimum element for free.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest ground set accepted by [`enumerate_partitions`] (Bell(12) = 4 213 597).
pub const MAX_PARTITION_SIZE: usize = 12;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    labels: Vec<u8>,
    blocks: u8,
}

impl Partition {
    /// The partition into singletons.
    pub fn discrete(m: usize) -> Self {
        Partition {
            labels: (0..m as u8).collect(),
            blocks: m as u8,
        }
    }

    /// Single class containing everything.
    pub fn single(m: usize) -> Self {
        Partition {
            labels: vec![0; m],
            blocks: u8::from(m > 0),
        }
    }

    /// Builds a partition from classes of 0-based indices; class order and
    /// order within classes are irrelevant.
    pub fn from_classes(classes: &[Vec<usize>], m: usize) -> Result<Self> {
        let mut owner = vec![usize::MAX; m];
        for (c, class) in classes.iter().enumerate() {
            if class.is_empty() {
                return Err(Error::BadPartition("empty class".into()));
            }
            for &i in class {
                if i >= m {
                    return Err(Error::BadPartition(format!(
                        "element {} outside the ground set of size {m}",
                        i + 1
                    )));
                }
                if owner[i] != usize::MAX {
                    return Err(Error::BadPartition(format!(
                        "element {} appears twice",
                        i + 1
                    )));
                }
                owner[i] = c;
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::BadPartition(format!(
                "element {} not covered",
                i + 1
            )));
        }
        Ok(Self::from_keys(&owner))
    }

    /// The partition grouping equal entries of `keys`.
    pub fn from_keys<T: PartialEq>(keys: &[T]) -> Self {
        let mut labels = Vec::with_capacity(keys.len());
        let mut reps: Vec<&T> = Vec::new();
        for k in keys {
            let label = match reps.iter().position(|r| *r == k) {
                Some(l) => l,
                None => {
                    reps.push(k);
                    reps.len() - 1
                }
            };
            labels.push(label as u8);
        }
        Partition {
            blocks: reps.len() as u8,
            labels,
        }
    }

    /// Wraps a restricted growth string, validating it.
    pub fn from_labels(labels: Vec<u8>) -> Result<Self> {
        let mut next = 0u8;
        for &l in &labels {
            if l > next {
                return Err(Error::BadPartition(format!(
                    "{labels:?} is not a restricted growth string"
                )));
            }
            if l == next {
                next += 1;
            }
        }
        Ok(Partition {
            labels,
            blocks: next,
        })
    }

    /// Size of the ground set.
    pub fn ground_size(&self) -> usize {
        self.labels.len()
    }

    /// Number of classes.
    pub fn len(&self) -> usize {
        self.blocks as usize
    }

    pub fn is_empty(&self) -> bool {
        self.blocks == 0
    }

    pub fn is_discrete(&self) -> bool {
        self.len() == self.ground_size()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Class index of element `i`.
    pub fn class_of(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    /// Classes ordered by minimum element, each ascending.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut classes = vec![Vec::new(); self.len()];
        for (i, &l) in self.labels.iter().enumerate() {
            classes[l as usize].push(i);
        }
        classes
    }

    /// 1-based classes, as written in partition files.
    pub fn classes_one_based(&self) -> Vec<Vec<usize>> {
        self.classes()
            .into_iter()
            .map(|c| c.into_iter().map(|i| i + 1).collect())
            .collect()
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .classes_one_based()
            .iter()
            .map(|c| {
                let inner: Vec<String> = c.iter().map(ToString::to_string).collect();
                format!("{{{}}}", inner.join(","))
            })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.classes_one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let classes: Vec<Vec<usize>> = Vec::deserialize(d)?;
        let m = classes.iter().map(Vec::len).sum();
        let zero_based: Vec<Vec<usize>> = classes
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&i| i.checked_sub(1).ok_or("indices are 1-based"))
                    .collect::<std::result::Result<_, _>>()
            })
            .collect::<std::result::Result<_, _>>()
            .map_err(serde::de::Error::custom)?;
        Partition::from_classes(&zero_based, m).map_err(serde::de::Error::custom)
    }
}

/// A set of partitions over one ground set, kept in canonical order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartitionFamily {
    partitions: BTreeSet<Partition>,
}

impl PartitionFamily {
    pub fn new(partitions: impl IntoIterator<Item = Partition>, m: usize) -> Result<Self> {
        let partitions: BTreeSet<Partition> = partitions.into_iter().collect();
        if let Some(p) = partitions.iter().find(|p| p.ground_size() != m) {
            return Err(Error::BadPartition(format!(
                "{p} is not a partition of a {m}-element set"
            )));
        }
        Ok(PartitionFamily { partitions })
    }

    pub fn discrete(m: usize) -> Self {
        PartitionFamily {
            partitions: [Partition::discrete(m)].into(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn contains(&self, p: &Partition) -> bool {
        self.partitions.contains(p)
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Partition> {
        self.partitions.iter()
    }

    pub fn is_subset(&self, other: &PartitionFamily) -> bool {
        self.partitions.is_subset(&other.partitions)
    }

    /// Ground-set size, when the family is nonempty.
    pub fn ground_size(&self) -> Option<usize> {
        self.partitions.first().map(Partition::ground_size)
    }
}

impl FromIterator<Partition> for PartitionFamily {
    fn from_iter<I: IntoIterator<Item = Partition>>(iter: I) -> Self {
        PartitionFamily {
            partitions: iter.into_iter().collect(),
        }
    }
}

/// All set partitions of an `m`-element set, by restricted growth strings in
/// lexicographic order.
pub fn enumerate_partitions(m: usize) -> Result<Vec<Partition>> {
    if m > MAX_PARTITION_SIZE {
        return Err(Error::TooLarge {
            what: "partition ground set",
            size: m as u128,
            limit: MAX_PARTITION_SIZE as u128,
        });
    }
    if m == 0 {
        return Ok(vec![Partition::discrete(0)]);
    }
    let mut out = Vec::new();
    let mut labels = vec![0u8; m];
    // maxes[i] = max(labels[..i]) + 1, the largest label allowed at position i.
    let mut maxes = vec![1u8; m];
    loop {
        out.push(Partition::from_labels(labels.clone()).expect("valid growth string"));
        let Some(i) = (1..m).rev().find(|&i| labels[i] < maxes[i]) else {
            break;
        };
        labels[i] += 1;
        for j in i + 1..m {
            labels[j] = 0;
            maxes[j] = maxes[j - 1].max(labels[j - 1] + 1);
        }
    }
    Ok(out)
}

/// The partition `p(x)` whose classes are the positions holding equal values.
pub fn partition_of<T: PartialEq>(x: &[T]) -> Partition {
    Partition::from_keys(x)
}
