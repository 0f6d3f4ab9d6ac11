//! Nonparametric test that permutes values among observation times that
//! share the same phase modulo the null period.
//!
//! Real-valued times are rarely congruent exactly, so phases are snapped
//! to a lattice of width `quantum` before grouping. Grouping equal lattice
//! points keeps the relation transitive, which pairwise closeness would not.

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::Scratch;
use crate::config::InferenceConfig;
use crate::error::{Error, Result};
use crate::inference::{RandomizationEngine, TestMode, TestOutcome};
use crate::periodogram::PeriodGrid;
use crate::rng::RngKey;
use crate::scalar::Real;
use crate::series::TimeSeries;

/// Default phase lattice width, in days (about 0.086 s).
pub const DEFAULT_QUANTUM: f64 = 1e-6;

/// Largest class-preserving group enumerated exactly.
pub const MAX_GROUP_ENUMERATION: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModThetaPartition {
    pub theta: f64,
    pub quantum: f64,
    /// Classes in order of their smallest index; indices increase within a class.
    pub classes: Vec<Vec<usize>>,
    n: usize,
}

impl ModThetaPartition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_trivial(&self) -> bool {
        self.classes.iter().all(|c| c.len() == 1)
    }

    /// Class label of every index.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (c, members) in self.classes.iter().enumerate() {
            for &i in members {
                labels[i] = c;
            }
        }
        labels
    }

    /// `(class size, number of classes of that size)`, increasing size.
    pub fn size_histogram(&self) -> Vec<(usize, usize)> {
        let mut h = BTreeMap::new();
        for c in &self.classes {
            *h.entry(c.len()).or_insert(0) += 1;
        }
        h.into_iter().collect()
    }

    /// Order of the class-preserving permutation group, saturating.
    pub fn group_order(&self) -> u128 {
        self.classes.iter().fold(1u128, |acc, c| {
            (1..=c.len() as u128).fold(acc, |a, k| a.saturating_mul(k))
        })
    }

    /// Whether `perm` only moves indices within their own class.
    pub fn preserves(&self, perm: &[usize]) -> bool {
        if perm.len() != self.n {
            return false;
        }
        let labels = self.labels();
        let mut seen = vec![false; self.n];
        perm.iter().enumerate().all(|(i, &j)| {
            j < self.n && !std::mem::replace(&mut seen[j], true) && labels[i] == labels[j]
        })
    }

    pub fn summary(&self) -> PartitionSummary {
        PartitionSummary {
            theta: self.theta,
            quantum: self.quantum,
            classes: self.classes.len(),
            size_histogram: self.size_histogram(),
            group_order: self.group_order().min(u64::MAX as u128) as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub theta: f64,
    pub quantum: f64,
    pub classes: usize,
    pub size_histogram: Vec<(usize, usize)>,
    pub group_order: u64,
}

/// Group times whose phase modulo `theta` falls on the same lattice point.
///
/// With `quantum == 0` phases must agree exactly.
pub fn equivalence_classes<T: Real>(times: &[T], theta: T, quantum: f64) -> Result<ModThetaPartition> {
    let th = theta.to_f64_lossy();
    if !(th > 0.0) || !th.is_finite() {
        return Err(Error::NonPositivePeriod(th));
    }
    if !(quantum >= 0.0) || quantum >= th / 2.0 {
        return Err(Error::BadTolerance(format!(
            "phase quantum {quantum} must lie in [0, {})",
            th / 2.0
        )));
    }
    let mut label_of: HashMap<i128, usize> = HashMap::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let cycle = if quantum > 0.0 { (th / quantum).round() as i128 } else { 0 };
    for (i, &t) in times.iter().enumerate() {
        let mut phase = t.to_f64_lossy().rem_euclid(th);
        if phase >= th {
            phase = 0.0;
        }
        let key = if quantum > 0.0 {
            ((phase / quantum).round() as i128).rem_euclid(cycle.max(1))
        } else {
            phase.to_bits() as i128
        };
        let c = *label_of.entry(key).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[c].push(i);
    }
    Ok(ModThetaPartition {
        theta: th,
        quantum,
        classes,
        n: times.len(),
    })
}

/// Uniform draw from the class-preserving group: an independent shuffle of
/// each class. Entry `i` is the index whose value moves to position `i`.
pub fn sample_class_permutation(part: &ModThetaPartition, key: &RngKey) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..part.n).collect();
    let mut rng = key.rng();
    shuffle_classes(part, &mut rng, &mut perm);
    perm
}

fn shuffle_classes<R: Rng>(part: &ModThetaPartition, rng: &mut R, perm: &mut [usize]) {
    for (i, p) in perm.iter_mut().enumerate() {
        *p = i;
    }
    for class in part.classes.iter().filter(|c| c.len() > 1) {
        for j in (1..class.len()).rev() {
            let k = rng.random_range(0..=j);
            perm.swap(class[j], class[k]);
        }
    }
}

/// Apply a permutation to a series' values; times and sigmas stay put.
pub fn permute_values<T: Real>(ts: &TimeSeries<T>, perm: &[usize]) -> Result<TimeSeries<T>> {
    if perm.len() != ts.len() {
        return Err(Error::LengthMismatch {
            expected: ts.len(),
            found: perm.len(),
        });
    }
    ts.with_values(perm.iter().map(|&j| ts.values()[j]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NpOutcome<T> {
    #[serde(flatten)]
    pub outcome: TestOutcome<T>,
    pub partition: PartitionSummary,
    pub warnings: Vec<String>,
}

fn partition_warnings<T: Real>(ts: &TimeSeries<T>, part: &ModThetaPartition) -> Vec<String> {
    let mut warnings = Vec::new();
    if part.is_trivial() {
        warnings.push(format!(
            "every observation is alone in its phase class at period {} (quantum {}); the test cannot reject",
            part.theta, part.quantum
        ));
    }
    let mixed = part
        .classes
        .iter()
        .filter(|c| c.iter().any(|&i| ts.sigmas()[i] != ts.sigmas()[c[0]]))
        .count();
    if mixed > 0 {
        warnings.push(format!(
            "{mixed} phase class(es) mix different sigmas; exchangeability within classes is doubtful"
        ));
    }
    warnings
}

struct NpSetup<'a, T> {
    engine: RandomizationEngine<'a, T>,
    k0: usize,
    part: ModThetaPartition,
}

fn np_setup<'a, T: Real>(
    ts: &'a TimeSeries<T>,
    grid: &PeriodGrid<T>,
    theta0: T,
    quantum: f64,
) -> Result<NpSetup<'a, T>> {
    let part = equivalence_classes(ts.times(), theta0, quantum)?;
    let (periods, k0) = grid.with_point(theta0)?;
    let engine = RandomizationEngine::new(ts, &periods)?;
    Ok(NpSetup { engine, k0, part })
}

/// Monte Carlo permutation test of `H0: theta* = theta0` without a
/// parametric null model.
pub fn np_test<T: Real>(
    ts: &TimeSeries<T>,
    grid: &PeriodGrid<T>,
    theta0: T,
    quantum: f64,
    cfg: &InferenceConfig,
    key: &RngKey,
) -> Result<NpOutcome<T>> {
    let cfg = cfg.validated()?;
    let setup = np_setup(ts, grid, theta0, quantum)?;
    let basis = setup.engine.basis();
    let s_obs = setup.engine.observed_statistic(setup.k0);
    let y = ts.values();
    let n = ts.len();
    let part = &setup.part;
    let exceed: u64 = (0..cfg.replicates)
        .into_par_iter()
        .map_init(
            || (vec![0usize; n], vec![T::zero(); n], Scratch::new(basis)),
            |(perm, buf, scratch), i| {
                shuffle_classes(part, &mut key.with_replicate(i).rng(), perm);
                for (b, &j) in buf.iter_mut().zip(perm.iter()) {
                    *b = y[j];
                }
                u64::from(basis.profiled_gap(buf, setup.k0, scratch) >= s_obs)
            },
        )
        .sum();
    Ok(NpOutcome {
        outcome: TestOutcome::new(
            theta0,
            s_obs,
            exceed,
            cfg.replicates,
            cfg.pvalue_estimator,
            TestMode::Nonparametric,
        ),
        warnings: partition_warnings(ts, part),
        partition: part.summary(),
    })
}

fn class_permutations(class: &[usize]) -> Vec<Vec<usize>> {
    // Heap's algorithm.
    let mut a = class.to_vec();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; a.len()];
    let mut i = 0;
    while i < a.len() {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Every element of the class-preserving group, in mixed-radix order.
pub fn enumerate_class_group(part: &ModThetaPartition) -> Result<Vec<Vec<usize>>> {
    let order = part.group_order();
    if order > MAX_GROUP_ENUMERATION as u128 {
        return Err(Error::TooLarge {
            size: order,
            limit: MAX_GROUP_ENUMERATION as u128,
        });
    }
    let moving: Vec<&Vec<usize>> = part.classes.iter().filter(|c| c.len() > 1).collect();
    let tables: Vec<Vec<Vec<usize>>> = moving.iter().map(|c| class_permutations(c)).collect();
    let mut out = Vec::with_capacity(order as usize);
    for mut code in 0..order as usize {
        let mut perm: Vec<usize> = (0..part.n).collect();
        for (class, table) in moving.iter().zip(&tables) {
            let image = &table[code % table.len()];
            code /= table.len();
            for (&pos, &src) in class.iter().zip(image) {
                perm[pos] = src;
            }
        }
        out.push(perm);
    }
    Ok(out)
}

/// Exact permutation p-value: the fraction of the whole class-preserving
/// group (identity included) whose statistic reaches the observed one.
pub fn np_exact_pvalue<T: Real>(
    ts: &TimeSeries<T>,
    grid: &PeriodGrid<T>,
    theta0: T,
    quantum: f64,
) -> Result<Ratio<u64>> {
    let setup = np_setup(ts, grid, theta0, quantum)?;
    let group = enumerate_class_group(&setup.part)?;
    let basis = setup.engine.basis();
    let s_obs = setup.engine.observed_statistic(setup.k0);
    let y = ts.values();
    let count: u64 = group
        .par_iter()
        .map_init(
            || (vec![T::zero(); ts.len()], Scratch::new(basis)),
            |(buf, scratch), perm| {
                for (b, &j) in buf.iter_mut().zip(perm) {
                    *b = y[j];
                }
                u64::from(basis.profiled_gap(buf, setup.k0, scratch) >= s_obs)
            },
        )
        .sum();
    Ok(Ratio::new(count, group.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodogram::build_log_grid;
    use crate::rng::StreamContext;

    fn key() -> RngKey {
        RngKey::new(3, StreamContext::Permutation)
    }

    #[test]
    fn integer_times_mod_one() {
        let p = equivalence_classes(&[0.0, 1.0, 2.0, 3.0], 1.0, 1e-9).unwrap();
        assert_eq!(p.classes, vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn two_phases() {
        let p = equivalence_classes(&[0.0, 0.5, 1.0, 1.5], 1.0, DEFAULT_QUANTUM).unwrap();
        assert_eq!(p.classes, vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(p.size_histogram(), vec![(2, 2)]);
        assert_eq!(p.group_order(), 4);
    }

    #[test]
    fn generic_times_are_singletons() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * std::f64::consts::SQRT_2 + 0.1).collect();
        let p = equivalence_classes(&times, std::f64::consts::E, DEFAULT_QUANTUM).unwrap();
        assert!(p.is_trivial());
    }

    #[test]
    fn wraparound_phase_joins_zero() {
        let p = equivalence_classes(&[0.0, 2.9999999999, 5.0], 1.0, 1e-6).unwrap();
        assert_eq!(p.classes, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn bad_quantum() {
        assert!(matches!(equivalence_classes(&[0.0, 1.0], 1.0, -1.0), Err(Error::BadTolerance(_))));
        assert!(matches!(equivalence_classes(&[0.0, 1.0], 1.0, 0.5), Err(Error::BadTolerance(_))));
        assert!(equivalence_classes(&[0.0, 1.0], 1.0, 0.0).is_ok());
    }

    #[test]
    fn singleton_sampling_is_identity() {
        let p = equivalence_classes(&[0.1, 0.37, 0.9], 1.0, DEFAULT_QUANTUM).unwrap();
        for r in 0..20 {
            assert_eq!(sample_class_permutation(&p, &key().with_replicate(r)), vec![0, 1, 2]);
        }
    }

    #[test]
    fn heap_covers_all() {
        let mut perms = class_permutations(&[4, 7, 9, 11]);
        assert_eq!(perms.len(), 24);
        perms.sort();
        perms.dedup();
        assert_eq!(perms.len(), 24);
        assert_eq!(class_permutations(&[5]), vec![vec![5]]);
    }

    #[test]
    fn group_enumeration_is_closed() {
        let p = equivalence_classes(&[0.0, 0.5, 1.0, 1.5, 2.0, 2.2], 1.0, DEFAULT_QUANTUM).unwrap();
        let g = enumerate_class_group(&p).unwrap();
        assert_eq!(g.len(), 6 * 2);
        assert!(g.iter().all(|q| p.preserves(q)));
    }

    #[test]
    fn permuted_values_keep_multiset() {
        let ts = TimeSeries::new(
            vec![0.0, 0.5, 1.0, 1.5, 2.0],
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            vec![1.0, 1.0, 2.0, 1.0, 1.0],
        )
        .unwrap();
        let p = equivalence_classes(ts.times(), 1.0, DEFAULT_QUANTUM).unwrap();
        let perm = sample_class_permutation(&p, &key().with_replicate(5));
        let out = permute_values(&ts, &perm).unwrap();
        let mut a = out.values().to_vec();
        a.sort_by(f64::total_cmp);
        assert_eq!(a, ts.values());
        assert_eq!(out.times(), ts.times());
        assert_eq!(out.sigmas(), ts.sigmas());
    }

    #[test]
    fn singleton_test_gives_one() {
        let times: Vec<f64> = (0..15).map(|i| i as f64 * std::f64::consts::SQRT_2 + 0.01 * (i * i) as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| (t * 0.7).sin() + 0.1 * t).collect();
        let ts = TimeSeries::new(times, values, vec![1.0; 15]).unwrap();
        let grid = build_log_grid(0.5, 10.0, 100).unwrap();
        let cfg = InferenceConfig::new(0.05, 100).unwrap();
        let out = np_test(&ts, &grid, 2.0, DEFAULT_QUANTUM, &cfg, &key()).unwrap();
        assert_eq!(out.outcome.p_value, 1.0);
        assert_eq!(out.outcome.mode, TestMode::Nonparametric);
        assert!(!out.warnings.is_empty());
        assert_eq!(np_exact_pvalue(&ts, &grid, 2.0, DEFAULT_QUANTUM).unwrap(), Ratio::new(1, 1));
    }

    #[test]
    fn periodic_in_classes_gives_one() {
        // Values depend only on the phase class, so every class permutation
        // leaves the series unchanged.
        let times = vec![0.0, 0.3, 1.0, 1.3, 2.0, 2.3, 3.6];
        let values: Vec<f64> = times.iter().map(|t: &f64| (std::f64::consts::TAU * t).cos()).collect();
        let ts = TimeSeries::new(times, values, vec![1.0; 7]).unwrap();
        let grid = build_log_grid(0.3, 5.0, 80).unwrap();
        let cfg = InferenceConfig::new(0.05, 200).unwrap();
        let out = np_test(&ts, &grid, 1.0, 1e-6, &cfg, &key()).unwrap();
        assert_eq!(out.outcome.p_value, 1.0);
    }
}
