//! Counts of typed solutions inside the binomial random set `[n]_p`.
//!
//! Trials are counted 64 at a time: each value carries a 64-bit lane mask of
//! the trials whose sample contains it, a solution's mask is the AND over its
//! support, and the masks are summed into bit-sliced counters. Every trial's
//! count is an exact integer, so results do not depend on how blocks are
//! scheduled across threads.
//!
//! # Seeds
//!
//! Trial `t` (0-based) draws its set from `ChaCha8Rng::seed_from_u64(s_t)`
//! with `s_t = mix(master_seed + (t + 1)·0x9E3779B97F4A7C15)` (wrapping), where
//! `mix` is the SplitMix64 finaliser. Element `v = 1..=n` is included when a
//! `Bernoulli(p)` draw succeeds, in increasing order of `v`. This scheme is
//! part of the output contract and must not change.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::distributions::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::census::{
    enumerate_solutions, enumerate_solutions_with, exact_mean, overlap_profile_by_subsets,
    EnumOptions, SolutionList,
};
use crate::error::{Error, Result};
use crate::partition::{Partition, PartitionFamily};
use crate::serde_util::rational_to_string;
use crate::system_properties::{check_theorem_preconditions, contract_density, SystemSpec};

/// Work limit for the exact variance; above it counts are standardized
/// empirically.
pub const EXACT_VARIANCE_BUDGET: u128 = 50_000_000;

/// `n(1-p)` at or below this is reported as bounded.
pub const BOUNDED_COMPLEMENT: f64 = 10.0;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialConfig {
    pub n: u32,
    pub p: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub moment_max_k: usize,
    /// Run even when the normal-limit preconditions fail; recorded in the report.
    pub force: bool,
}

impl TrialConfig {
    pub fn new(n: u32, p: f64, trials: u64, master_seed: u64) -> Self {
        TrialConfig {
            n,
            p,
            trials,
            master_seed,
            moment_max_k: 6,
            force: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidArgument(format!(
                "p = {} is not in [0, 1]",
                self.p
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("need at least one trial".into()));
        }
        if self.moment_max_k < 2 {
            return Err(Error::InvalidArgument(
                "moment_max_k must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `t` under `master_seed`.
pub fn trial_seed(master_seed: u64, t: u64) -> u64 {
    mix(master_seed.wrapping_add(GOLDEN.wrapping_mul(t.wrapping_add(1))))
}

/// A subset of `[n]` as a bit set; bit `v - 1` stands for `v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SampleSet {
    n: u32,
    words: Vec<u64>,
}

impl SampleSet {
    pub fn empty(n: u32) -> Self {
        SampleSet {
            n,
            words: vec![0; (n as usize).div_ceil(64)],
        }
    }

    pub fn full(n: u32) -> Self {
        let mut s = SampleSet::empty(n);
        (1..=n).for_each(|v| s.insert(v));
        s
    }

    pub fn from_values(n: u32, values: &[u32]) -> Result<Self> {
        let mut s = SampleSet::empty(n);
        for &v in values {
            if v == 0 || v > n {
                return Err(Error::InvalidArgument(format!("{v} is not in [1, {n}]")));
            }
            s.insert(v);
        }
        Ok(s)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn insert(&mut self, v: u32) {
        let i = (v - 1) as usize;
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, v: u32) -> bool {
        if v == 0 || v > self.n {
            return false;
        }
        let i = (v - 1) as usize;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn values(&self) -> impl Iterator<Item = u32> + '_ {
        (1..=self.n).filter(|&v| self.contains(v))
    }
}

fn bernoulli(p: f64) -> Result<Bernoulli> {
    Bernoulli::new(p).map_err(|_| Error::InvalidArgument(format!("p = {p} is not in [0, 1]")))
}

fn draw(n: u32, coin: &Bernoulli, seed: u64, mut keep: impl FnMut(u32)) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in 1..=n {
        if coin.sample(&mut rng) {
            keep(v);
        }
    }
}

/// `[n]_p` drawn from `seed`.
pub fn sample_set(n: u32, p: f64, seed: u64) -> Result<SampleSet> {
    let coin = bernoulli(p)?;
    let mut s = SampleSet::empty(n);
    draw(n, &coin, seed, |v| s.insert(v));
    Ok(s)
}

/// Typed solutions whose support lies inside `s`.
pub fn count_in_sample(list: &SolutionList, family: &PartitionFamily, s: &SampleSet) -> u64 {
    let mask = list.shape_mask(family);
    (0..list.len())
        .filter(|&i| mask[list.shape_id(i) as usize])
        .filter(|&i| list.support(i).iter().all(|&v| s.contains(v)))
        .count() as u64
}

/// Supports of the typed solutions, flattened for the counting loop.
struct Supports {
    values: Vec<u32>,
    starts: Vec<usize>,
}

impl Supports {
    fn new(list: &SolutionList, family: &PartitionFamily) -> Self {
        let mask = list.shape_mask(family);
        let mut values = Vec::new();
        let mut starts = vec![0];
        for i in (0..list.len()).filter(|&i| mask[list.shape_id(i) as usize]) {
            values.extend_from_slice(list.support(i));
            starts.push(values.len());
        }
        Supports { values, starts }
    }

    fn len(&self) -> usize {
        self.starts.len() - 1
    }

    /// Counts for the (up to 64) trials whose membership lanes are given,
    /// `lanes[v - 1]` holding one bit per trial.
    fn count_block(&self, lanes: &[u64], width: usize) -> Vec<u64> {
        let planes_needed = (64 - (self.len() as u64).leading_zeros() as usize).max(1);
        let mut planes = vec![0u64; planes_needed];
        for w in self.starts.windows(2) {
            let mut carry = self.values[w[0]..w[1]]
                .iter()
                .fold(u64::MAX, |acc, &v| acc & lanes[v as usize - 1]);
            let mut k = 0;
            while carry != 0 {
                let next = planes[k] & carry;
                planes[k] ^= carry;
                carry = next;
                k += 1;
            }
        }
        (0..width)
            .map(|lane| {
                planes
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (k, plane)| acc | (plane >> lane & 1) << k)
            })
            .collect()
    }
}

/// Typed counts for trials `0..trials`, in trial order.
pub fn trial_counts(
    list: &SolutionList,
    family: &PartitionFamily,
    p: f64,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<u64>> {
    let coin = bernoulli(p)?;
    let supports = Supports::new(list, family);
    let n = list.n();
    let blocks = trials.div_ceil(64);
    let per_block: Vec<Vec<u64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let first = b * 64;
            let width = (trials - first).min(64) as usize;
            let mut lanes = vec![0u64; n as usize];
            for lane in 0..width {
                let seed = trial_seed(master_seed, first + lane as u64);
                draw(n, &coin, seed, |v| lanes[v as usize - 1] |= 1 << lane);
            }
            supports.count_block(&lanes, width)
        })
        .collect();
    Ok(per_block.into_iter().flatten().collect())
}

/// Where the regime's `p` sits: bounded away from 0 and 1, tending to 1, or
/// tending to 0. Decided at finite `n` by comparing `p` and `1 - p` with
/// `n^{-1/4}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Case1,
    Case2,
    Case3,
}

impl Regime {
    pub fn classify(n: u32, p: f64) -> Regime {
        let cut = (n.max(1) as f64).powf(-0.25);
        if p <= cut {
            Regime::Case3
        } else if 1.0 - p <= cut {
            Regime::Case2
        } else {
            Regime::Case1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Standardization {
    Exact,
    Empirical,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentEntry {
    pub k: usize,
    pub value: f64,
}

/// `n p^{c(A_p)}` for one partition type present in `[n]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdDiagnostic {
    pub partition: Partition,
    pub solutions: u64,
    /// `None` when the contraction has a degenerate subset ratio.
    pub density: Option<String>,
    pub n_p_density: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreconditionSummary {
    pub passed: bool,
    pub first_failure: Option<&'static str>,
    pub overridden: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub config: TrialConfig,
    pub typed_solutions: u64,
    pub empirical_mean: f64,
    pub empirical_variance: f64,
    /// Sample standardized central moments `m_k / m_2^{k/2}`, `k >= 3`.
    pub standardized_moments: Vec<MomentEntry>,
    pub exact_mean: Option<f64>,
    pub exact_variance: Option<f64>,
    pub standardization: Standardization,
    pub ks_distance: f64,
    pub regime: Regime,
    pub n_one_minus_p: f64,
    pub n_one_minus_p_bounded: bool,
    pub thresholds: Vec<ThresholdDiagnostic>,
    pub preconditions: PreconditionSummary,
}

impl MomentReport {
    pub fn moment(&self, k: usize) -> Option<f64> {
        self.standardized_moments
            .iter()
            .find(|e| e.k == k)
            .map(|e| e.value)
    }

    pub fn skewness(&self) -> Option<f64> {
        self.moment(3)
    }

    pub fn excess_kurtosis(&self) -> Option<f64> {
        self.moment(4).map(|m| m - 3.0)
    }
}

/// Runs `cfg.trials` trials on the typed solutions of `spec` in `[n]`.
pub fn run_trials(
    spec: &SystemSpec,
    family: &PartitionFamily,
    cfg: &TrialConfig,
) -> Result<MomentReport> {
    run_trials_with(spec, family, cfg, EnumOptions::default())
}

pub fn run_trials_with(
    spec: &SystemSpec,
    family: &PartitionFamily,
    cfg: &TrialConfig,
    opts: EnumOptions,
) -> Result<MomentReport> {
    cfg.validate()?;
    let pre = check_theorem_preconditions(spec, family, cfg.n);
    if !pre.passed && !cfg.force {
        let name = pre.first_failure.unwrap_or("unknown");
        let detail = pre
            .checks
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.detail.clone())
            .unwrap_or_default();
        return Err(Error::PreconditionFailed(if detail.is_empty() {
            name.to_string()
        } else {
            format!("{name}: {detail}")
        }));
    }
    let list = enumerate_solutions_with(spec, cfg.n, opts)?;
    let summary = PreconditionSummary {
        passed: pre.passed,
        first_failure: pre.first_failure,
        overridden: !pre.passed,
    };
    run_trials_on(&list, family, cfg, summary)
}

/// As [`run_trials`], on an already enumerated solution list.
pub fn run_trials_on(
    list: &SolutionList,
    family: &PartitionFamily,
    cfg: &TrialConfig,
    preconditions: PreconditionSummary,
) -> Result<MomentReport> {
    cfg.validate()?;
    if list.n() != cfg.n {
        return Err(Error::InvalidArgument(format!(
            "solution list is over [{}], config asks for [{}]",
            list.n(),
            cfg.n
        )));
    }
    let counts = trial_counts(list, family, cfg.p, cfg.trials, cfg.master_seed)?;
    let t = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / t;
    let central = |k: i32| {
        counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(k))
            .sum::<f64>()
            / t
    };
    let variance = central(2);
    if variance <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let standardized_moments = (3..=cfg.moment_max_k)
        .map(|k| MomentEntry {
            k,
            value: central(k as i32) / variance.powf(k as f64 / 2.0),
        })
        .collect();

    let p_exact = BigRational::from_float(cfg.p).expect("p is finite");
    let exact_mean = exact_mean(list, family, &p_exact).to_f64();
    let exact_variance = overlap_profile_by_subsets(list, family, EXACT_VARIANCE_BUDGET)
        .map(|profile| profile.variance(&p_exact))
        .and_then(|v| v.to_f64());
    let (standardization, centre, scale) = match (exact_mean, exact_variance) {
        (Some(m), Some(v)) if v > 0.0 => (Standardization::Exact, m, v.sqrt()),
        _ => (Standardization::Empirical, mean, variance.sqrt()),
    };
    let z: Vec<f64> = counts
        .iter()
        .map(|&c| (c as f64 - centre) / scale)
        .collect();

    let n_one_minus_p = cfg.n as f64 * (1.0 - cfg.p);
    Ok(MomentReport {
        config: cfg.clone(),
        typed_solutions: counts_total(list, family),
        empirical_mean: mean,
        empirical_variance: variance,
        standardized_moments,
        exact_mean,
        exact_variance,
        standardization,
        ks_distance: ks_distance(z),
        regime: Regime::classify(cfg.n, cfg.p),
        n_one_minus_p,
        n_one_minus_p_bounded: n_one_minus_p <= BOUNDED_COMPLEMENT,
        thresholds: thresholds(list, family, cfg.n, cfg.p),
        preconditions,
    })
}

fn counts_total(list: &SolutionList, family: &PartitionFamily) -> u64 {
    crate::census::count_typed(list, family)
}

fn thresholds(
    list: &SolutionList,
    family: &PartitionFamily,
    n: u32,
    p: f64,
) -> Vec<ThresholdDiagnostic> {
    let a = list.system().matrix();
    let mut per_shape: BTreeMap<&Partition, u64> = BTreeMap::new();
    for i in 0..list.len() {
        let shape = &list.shapes()[list.shape_id(i) as usize];
        if family.contains(shape) {
            *per_shape.entry(shape).or_insert(0) += 1;
        }
    }
    per_shape
        .into_iter()
        .map(|(shape, solutions)| {
            let c = contract_density(a, shape);
            ThresholdDiagnostic {
                partition: shape.clone(),
                solutions,
                density: c.as_ref().map(rational_to_string),
                n_p_density: c.and_then(|c| c.to_f64()).map(|c| n as f64 * p.powf(c)),
            }
        })
        .collect()
}

/// Kolmogorov–Smirnov distance between the empirical law of `z` and the
/// standard normal. Tied values are one jump of the empirical CDF.
pub fn ks_distance(mut z: Vec<f64>) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    z.sort_by(f64::total_cmp);
    let t = z.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < z.len() {
        let mut j = i;
        while j < z.len() && z[j] == z[i] {
            j += 1;
        }
        let f = normal.cdf(z[i]);
        d = d.max(f - i as f64 / t).max(j as f64 / t - f);
        i = j;
    }
    d.min(1.0)
}

/// `E[Z^j]` for a standard normal `Z`.
fn normal_moment(j: usize) -> f64 {
    if j % 2 == 1 {
        0.0
    } else {
        (1..j).step_by(2).map(|v| v as f64).product()
    }
}

/// Target of the `k`-th standardized moment: `k! / ((k/2)! 2^{k/2})` for even
/// `k`, zero for odd `k`.
pub fn moment_target(k: usize) -> f64 {
    normal_moment(k)
}

/// Asymptotic variance of the sample standardized `k`-th moment when the
/// data are normal, `E[IF²]` for the influence function
/// `z^k - μ_k - k μ_{k-1} z - (k/2) μ_k (z² - 1)`. Gives 6 and 24 for the
/// skewness and kurtosis.
pub fn standardized_moment_variance(k: usize) -> f64 {
    let mu = normal_moment;
    let mut coef = vec![0.0; k.max(2) + 1];
    coef[k] += 1.0;
    coef[0] -= mu(k);
    coef[1] -= k as f64 * mu(k - 1);
    coef[2] -= k as f64 / 2.0 * mu(k);
    coef[0] += k as f64 / 2.0 * mu(k);
    let mut v = 0.0;
    for (i, a) in coef.iter().enumerate() {
        for (j, b) in coef.iter().enumerate() {
            v += a * b * mu(i + j);
        }
    }
    v
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoalCheck {
    pub k: usize,
    pub value: f64,
    pub target: f64,
    /// Three standard errors under normality.
    pub margin: f64,
    pub passed: bool,
}

/// Compares `m̃_k` with the normal moment, within three standard errors.
pub fn moment_goal_check(report: &MomentReport, k: usize) -> Result<GoalCheck> {
    let value = report.moment(k).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "moment {k} not computed (range 3..={})",
            report.config.moment_max_k
        ))
    })?;
    let target = moment_target(k);
    let margin = 3.0 * (standardized_moment_variance(k) / report.config.trials as f64).sqrt();
    Ok(GoalCheck {
        k,
        value,
        target,
        margin,
        passed: (value - target).abs() <= margin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub exponent: String,
    pub p: f64,
    pub mean: f64,
    pub variance: f64,
    pub zero_fraction: f64,
    pub trials: u64,
    pub seed: u64,
}

pub const SWEEP_HEADER: &str = "exponent,p,mean,variance,zero_fraction,trials,seed";

/// For each exponent `e`, runs trials at `p = n^{-e}` and records the mean
/// and variance of the typed count and the fraction of empty trials.
pub fn threshold_sweep(
    spec: &SystemSpec,
    family: &PartitionFamily,
    n: u32,
    exponents: &[BigRational],
    trials: u64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let list = enumerate_solutions(spec, n)?;
    sweep_on(&list, family, exponents, trials, seed)
}

pub fn sweep_on(
    list: &SolutionList,
    family: &PartitionFamily,
    exponents: &[BigRational],
    trials: u64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let n = list.n();
    exponents
        .iter()
        .map(|e| {
            let p = sweep_p(n, e);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "exponent {} gives p = {p} outside [0, 1]",
                    rational_to_string(e)
                )));
            }
            let counts = trial_counts(list, family, p, trials, seed)?;
            let t = counts.len() as f64;
            let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / t;
            let variance = counts
                .iter()
                .map(|&c| (c as f64 - mean).powi(2))
                .sum::<f64>()
                / t;
            let zeros = counts.iter().filter(|&&c| c == 0).count() as f64;
            Ok(SweepRow {
                exponent: rational_to_string(e),
                p,
                mean,
                variance,
                zero_fraction: zeros / t,
                trials,
                seed,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.exponent, r.p, r.mean, r.variance, r.zero_fraction, r.trials, r.seed
        ));
    }
    out
}

/// The `p = n^{-e}` used by [`threshold_sweep`].
pub fn sweep_p(n: u32, e: &BigRational) -> f64 {
    (n as f64).powf(-e.to_f64().unwrap_or(f64::NAN))
}

/// `p` as the exact binary fraction it denotes.
pub fn exact_p(p: f64) -> BigRational {
    BigRational::from_float(p).unwrap_or_else(|| BigRational::from_integer(BigInt::one()))
}
