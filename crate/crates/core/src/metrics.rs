//! Group-wise true positive rates, GAP, GAP RMS and satisfaction verdicts.
//!
//! All rates are percentages in `[0, 100]`. For two groups the per-class gap
//! is signed, `tpr(group 0) - tpr(group 1)`; for more groups it is the range
//! `max - min` across groups. Comparisons use absolute values.
//!
//! A class whose support is zero in any group has undefined TPR there, an
//! undefined gap, and is left out of GAP RMS and of every satisfaction
//! count. How many classes were left out is recorded alongside the result.

use serde::{Deserialize, Serialize};

use crate::corpus::{ClassId, GroupId};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    /// `None` when the cell has no examples.
    pub tpr: Option<f64>,
    pub support: u64,
    pub correct: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub class_names: Vec<String>,
    pub group_names: Vec<String>,
    /// `cells[class][group]`.
    pub cells: Vec<Vec<CellStat>>,
    /// Overall accuracy; absent for results rebuilt from published tables.
    pub accuracy: Option<f64>,
    /// Per-group accuracy (share of the group's examples predicted correctly).
    pub group_tpr: Vec<Option<f64>>,
    pub gaps: Vec<Option<f64>>,
    pub gap_rms: Option<f64>,
    pub undefined_classes: usize,
}

impl EvalResult {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn num_groups(&self) -> usize {
        self.group_names.len()
    }

    pub fn tpr(&self, class: ClassId, group: GroupId) -> Option<f64> {
        self.cells[class.0][group.0].tpr
    }

    /// Rebuilds a result from published per-class rates.
    ///
    /// `gaps`, when given, are taken as reported magnitudes and signed by the
    /// TPR difference; otherwise gaps are computed from the rates.
    pub fn from_rates(
        class_names: Vec<String>,
        group_names: Vec<String>,
        tprs: Vec<Vec<f64>>,
        gaps: Option<Vec<f64>>,
    ) -> Result<Self> {
        if tprs.len() != class_names.len() || tprs.iter().any(|r| r.len() != group_names.len()) {
            return Err(Error::invalid("rate table shape does not match the catalogs"));
        }
        let cells: Vec<Vec<CellStat>> = tprs
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&t| CellStat {
                        tpr: Some(t),
                        support: 0,
                        correct: 0,
                    })
                    .collect()
            })
            .collect();
        let mut computed: Vec<Option<f64>> = cells.iter().map(|r| class_gap(r)).collect();
        if let Some(reported) = gaps {
            if reported.len() != class_names.len() {
                return Err(Error::invalid("gap column length does not match the classes"));
            }
            for (g, r) in computed.iter_mut().zip(reported) {
                let sign = match g {
                    Some(v) if *v < 0.0 => -1.0,
                    _ => 1.0,
                };
                *g = Some(sign * r.abs());
            }
        }
        Ok(Self::assemble(class_names, group_names, cells, None, vec![None; 0], computed))
    }

    fn assemble(
        class_names: Vec<String>,
        group_names: Vec<String>,
        cells: Vec<Vec<CellStat>>,
        accuracy: Option<f64>,
        group_tpr: Vec<Option<f64>>,
        gaps: Vec<Option<f64>>,
    ) -> Self {
        let undefined_classes = gaps.iter().filter(|g| g.is_none()).count();
        let rms = gap_rms(&gaps).ok();
        let group_tpr = if group_tpr.is_empty() {
            vec![None; group_names.len()]
        } else {
            group_tpr
        };
        EvalResult {
            class_names,
            group_names,
            cells,
            accuracy,
            group_tpr,
            gaps,
            gap_rms: rms,
            undefined_classes,
        }
    }

    /// Cell-wise mean over repeated runs. Gaps are recomputed from the mean
    /// rates, so GAP RMS here is the RMS of averaged gaps.
    pub fn mean(results: &[EvalResult]) -> Result<EvalResult> {
        let first = results
            .first()
            .ok_or_else(|| Error::invalid("no results to average"))?;
        for r in results {
            check_catalogs(first, r)?;
        }
        let mean_opt = |vals: Vec<Option<f64>>| -> Option<f64> {
            let defined: Vec<f64> = vals.into_iter().flatten().collect();
            if defined.is_empty() {
                None
            } else {
                Some(defined.iter().sum::<f64>() / defined.len() as f64)
            }
        };
        let cells: Vec<Vec<CellStat>> = (0..first.num_classes())
            .map(|c| {
                (0..first.num_groups())
                    .map(|z| CellStat {
                        tpr: mean_opt(results.iter().map(|r| r.cells[c][z].tpr).collect()),
                        support: results.iter().map(|r| r.cells[c][z].support).sum(),
                        correct: results.iter().map(|r| r.cells[c][z].correct).sum(),
                    })
                    .collect()
            })
            .collect();
        let gaps = cells.iter().map(|r| class_gap(r)).collect();
        let accuracy = mean_opt(results.iter().map(|r| r.accuracy).collect());
        let group_tpr = (0..first.num_groups())
            .map(|z| mean_opt(results.iter().map(|r| r.group_tpr[z]).collect()))
            .collect();
        Ok(Self::assemble(
            first.class_names.clone(),
            first.group_names.clone(),
            cells,
            accuracy,
            group_tpr,
            gaps,
        ))
    }
}

fn class_gap(row: &[CellStat]) -> Option<f64> {
    let rates: Option<Vec<f64>> = row.iter().map(|c| c.tpr).collect();
    let rates = rates?;
    match rates.as_slice() {
        [a, b] => Some(a - b),
        _ => {
            let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
            Some(max - min)
        }
    }
}

/// Tallies per (class, group) true positive rates, accuracy and gaps.
pub fn evaluate(
    predictions: &[ClassId],
    labels: &[ClassId],
    groups: &[GroupId],
    class_names: &[String],
    group_names: &[String],
) -> Result<EvalResult> {
    if predictions.len() != labels.len() || labels.len() != groups.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} predictions, {} labels, {} groups",
            predictions.len(),
            labels.len(),
            groups.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::invalid("cannot evaluate an empty prediction set"));
    }
    let (nc, ng) = (class_names.len(), group_names.len());
    let mut support = vec![vec![0u64; ng]; nc];
    let mut correct = vec![vec![0u64; ng]; nc];
    let mut group_total = vec![0u64; ng];
    let mut group_correct = vec![0u64; ng];
    for ((&p, &y), &z) in predictions.iter().zip(labels).zip(groups) {
        if y.0 >= nc || p.0 >= nc || z.0 >= ng {
            return Err(Error::invalid(format!(
                "id outside catalogs (prediction {}, label {}, group {})",
                p.0, y.0, z.0
            )));
        }
        support[y.0][z.0] += 1;
        group_total[z.0] += 1;
        if p == y {
            correct[y.0][z.0] += 1;
            group_correct[z.0] += 1;
        }
    }
    let rate = |k: u64, n: u64| (n > 0).then(|| 100.0 * k as f64 / n as f64);
    let cells: Vec<Vec<CellStat>> = (0..nc)
        .map(|c| {
            (0..ng)
                .map(|z| CellStat {
                    tpr: rate(correct[c][z], support[c][z]),
                    support: support[c][z],
                    correct: correct[c][z],
                })
                .collect()
        })
        .collect();
    let total_correct: u64 = group_correct.iter().sum();
    let accuracy = rate(total_correct, labels.len() as u64);
    let group_tpr = (0..ng).map(|z| rate(group_correct[z], group_total[z])).collect();
    let gaps = cells.iter().map(|r| class_gap(r)).collect();
    Ok(EvalResult::assemble(
        class_names.to_vec(),
        group_names.to_vec(),
        cells,
        accuracy,
        group_tpr,
        gaps,
    ))
}

/// Root mean square over the defined gaps.
pub fn gap_rms(gaps: &[Option<f64>]) -> Result<f64> {
    let defined: Vec<f64> = gaps.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::invalid("GAP RMS needs at least one defined gap"));
    }
    Ok((defined.iter().map(|g| g * g).sum::<f64>() / defined.len() as f64).sqrt())
}

/// Tolerances for the satisfaction tests. Zero means strict comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Epsilons {
    pub gap: f64,
    pub harm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionVerdict {
    pub class: String,
    /// Group with the lowest TPR before the intervention.
    pub protected_group: GroupId,
    /// Set when another group tied for the lowest TPR.
    pub protected_tie: bool,
    pub gap_decreased: bool,
    pub protected_no_harm: bool,
    pub others_no_harm: bool,
    pub base: bool,
    pub advanced: bool,
}

fn check_catalogs(a: &EvalResult, b: &EvalResult) -> Result<()> {
    if a.class_names != b.class_names || a.group_names != b.group_names {
        return Err(Error::invalid(
            "before/after results use different class or group catalogs",
        ));
    }
    Ok(())
}

/// Per-class verdicts; `None` for classes with undefined rates on either side.
pub fn judge_satisfaction(
    before: &EvalResult,
    after: &EvalResult,
    eps: Epsilons,
) -> Result<Vec<Option<SatisfactionVerdict>>> {
    check_catalogs(before, after)?;
    let verdicts = (0..before.num_classes())
        .map(|c| {
            let gb = before.gaps[c]?;
            let ga = after.gaps[c]?;
            let rb: Vec<f64> = before.cells[c].iter().map(|s| s.tpr).collect::<Option<_>>()?;
            let ra: Vec<f64> = after.cells[c].iter().map(|s| s.tpr).collect::<Option<_>>()?;

            let mut protected = 0;
            for z in 1..rb.len() {
                if rb[z] < rb[protected] {
                    protected = z;
                }
            }
            let protected_tie = rb
                .iter()
                .enumerate()
                .any(|(z, &r)| z != protected && r == rb[protected]);

            let no_harm = |z: usize| ra[z] >= rb[z] - eps.harm;
            let gap_decreased = ga.abs() < gb.abs() - eps.gap;
            let protected_no_harm = no_harm(protected);
            let others_no_harm = (0..rb.len()).filter(|&z| z != protected).all(no_harm);
            let base = gap_decreased && protected_no_harm;
            Some(SatisfactionVerdict {
                class: before.class_names[c].clone(),
                protected_group: GroupId(protected),
                protected_tie,
                gap_decreased,
                protected_no_harm,
                others_no_harm,
                base,
                advanced: base && others_no_harm,
            })
        })
        .collect();
    Ok(verdicts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDelta {
    pub class: String,
    /// `after - before` per group.
    pub tpr_delta: Vec<Option<f64>>,
    pub gap_before: Option<f64>,
    pub gap_after: Option<f64>,
    /// `|gap_after| - |gap_before|`; negative is an improvement.
    pub gap_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub before: EvalResult,
    pub after: EvalResult,
    pub epsilons: Epsilons,
    pub class_populations: Vec<u64>,
    pub verdicts: Vec<Option<SatisfactionVerdict>>,
    pub deltas: Vec<ClassDelta>,
    /// Classes with a verdict (defined on both sides).
    pub judged_classes: usize,
    pub excluded_classes: usize,
    pub base_count: usize,
    pub advanced_count: usize,
    pub unweighted_base_rate: f64,
    pub unweighted_advanced_rate: f64,
    pub weighted_base_rate: f64,
    pub weighted_advanced_rate: f64,
    pub worsened_gap_count: usize,
    pub worsened_gap_fraction: f64,
}

impl ComparisonReport {
    pub fn base_classes(&self) -> Vec<&str> {
        self.verdicts
            .iter()
            .flatten()
            .filter(|v| v.base)
            .map(|v| v.class.as_str())
            .collect()
    }

    pub fn advanced_classes(&self) -> Vec<&str> {
        self.verdicts
            .iter()
            .flatten()
            .filter(|v| v.advanced)
            .map(|v| v.class.as_str())
            .collect()
    }
}

/// Joins before/after results into satisfaction rates and GAP deltas.
///
/// Weighted rates weight each judged class by its population.
pub fn compare(
    before: &EvalResult,
    after: &EvalResult,
    class_populations: &[u64],
    eps: Epsilons,
) -> Result<ComparisonReport> {
    let verdicts = judge_satisfaction(before, after, eps)?;
    if class_populations.len() != before.num_classes() {
        return Err(Error::invalid(format!(
            "{} class populations for {} classes",
            class_populations.len(),
            before.num_classes()
        )));
    }
    let judged: Vec<usize> = (0..verdicts.len()).filter(|&c| verdicts[c].is_some()).collect();
    let total_pop: u64 = judged.iter().map(|&c| class_populations[c]).sum();
    if total_pop == 0 {
        return Err(Error::invalid("total class population is zero"));
    }
    let count = |pred: &dyn Fn(&SatisfactionVerdict) -> bool| -> (usize, u64) {
        judged.iter().fold((0, 0), |(n, w), &c| {
            if pred(verdicts[c].as_ref().unwrap()) {
                (n + 1, w + class_populations[c])
            } else {
                (n, w)
            }
        })
    };
    let (base_count, base_pop) = count(&|v| v.base);
    let (advanced_count, adv_pop) = count(&|v| v.advanced);
    let worsened_gap_count = judged
        .iter()
        .filter(|&&c| after.gaps[c].unwrap().abs() > before.gaps[c].unwrap().abs())
        .count();
    let n_judged = judged.len();
    let frac = |k: usize| if n_judged == 0 { 0.0 } else { k as f64 / n_judged as f64 };

    let deltas = (0..before.num_classes())
        .map(|c| ClassDelta {
            class: before.class_names[c].clone(),
            tpr_delta: (0..before.num_groups())
                .map(|z| Some(after.cells[c][z].tpr? - before.cells[c][z].tpr?))
                .collect(),
            gap_before: before.gaps[c],
            gap_after: after.gaps[c],
            gap_delta: before.gaps[c]
                .zip(after.gaps[c])
                .map(|(b, a)| a.abs() - b.abs()),
        })
        .collect();

    Ok(ComparisonReport {
        before: before.clone(),
        after: after.clone(),
        epsilons: eps,
        class_populations: class_populations.to_vec(),
        verdicts,
        deltas,
        judged_classes: n_judged,
        excluded_classes: before.num_classes() - n_judged,
        base_count,
        advanced_count,
        unweighted_base_rate: frac(base_count),
        unweighted_advanced_rate: frac(advanced_count),
        weighted_base_rate: base_pop as f64 / total_pop as f64,
        weighted_advanced_rate: adv_pop as f64 / total_pop as f64,
        worsened_gap_count,
        worsened_gap_fraction: frac(worsened_gap_count),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn ids<T>(v: &[usize], f: fn(usize) -> T) -> Vec<T> {
        v.iter().map(|&i| f(i)).collect()
    }

    fn two_by_two(tprs: [[f64; 2]; 2]) -> EvalResult {
        EvalResult::from_rates(
            vec!["a".into(), "b".into()],
            vec!["male".into(), "female".into()],
            tprs.iter().map(|r| r.to_vec()).collect(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn hand_corpus() {
        // (c0,g0) x2 correct, (c0,g1) one right one wrong, (c1,g0) and (c1,g1) correct
        let labels = ids(&[0, 0, 0, 0, 1, 1], ClassId);
        let groups = ids(&[0, 0, 1, 1, 0, 1], GroupId);
        let preds = ids(&[0, 0, 0, 1, 1, 1], ClassId);
        let r = evaluate(&preds, &labels, &groups, &names("c", 2), &names("g", 2)).unwrap();
        assert_eq!(r.tpr(ClassId(0), GroupId(1)), Some(50.0));
        assert_eq!(r.gaps[0], Some(50.0));
        assert!((r.accuracy.unwrap() - 83.333_333_333_333_34).abs() < 1e-9);
        assert_eq!(r.gaps[1], Some(0.0));
    }

    #[test]
    fn surgeon_gap() {
        let r = EvalResult::from_rates(
            vec!["surgeon".into()],
            vec!["male".into(), "female".into()],
            vec![vec![62.36, 36.12]],
            None,
        )
        .unwrap();
        assert!((r.gaps[0].unwrap().abs() - 26.24).abs() < 1e-9);
    }

    #[test]
    fn perfect_predictor() {
        let labels = ids(&[0, 1, 2, 0, 1, 2], ClassId);
        let groups = ids(&[0, 0, 0, 1, 1, 1], GroupId);
        let r = evaluate(&labels, &labels, &groups, &names("c", 3), &names("g", 2)).unwrap();
        assert!(r.cells.iter().flatten().all(|c| c.tpr == Some(100.0)));
        assert_eq!(r.gap_rms, Some(0.0));
        assert_eq!(r.accuracy, Some(100.0));
    }

    #[test]
    fn zero_support_is_undefined() {
        let labels = ids(&[0, 0, 1], ClassId);
        let groups = ids(&[0, 1, 0], GroupId);
        let r = evaluate(&labels, &labels, &groups, &names("c", 2), &names("g", 2)).unwrap();
        assert_eq!(r.tpr(ClassId(1), GroupId(1)), None);
        assert_eq!(r.gaps[1], None);
        assert_eq!(r.undefined_classes, 1);
        assert_eq!(r.gap_rms, Some(0.0));
    }

    #[test]
    fn evaluate_rejects_bad_input() {
        assert!(evaluate(&[], &[], &[], &names("c", 2), &names("g", 2)).is_err());
        assert!(evaluate(&[ClassId(0)], &[], &[], &names("c", 2), &names("g", 2)).is_err());
    }

    #[test]
    fn gap_rms_cases() {
        let published = [
            1.32, 1.89, 2.39, 8.19, 15.99, 5.15, 2.30, 19.95, 29.28, 4.64, 24.44, 2.16, 38.70,
            10.12, 1.92, 28.84, 6.31, 11.65, 3.08, 16.75, 1.52, 0.20, 3.02, 15.59, 4.17, 26.24,
            13.59, 24.23,
        ];
        // independent oracle: sum of squares computed in a plain loop
        let mut ss = 0.0f64;
        for g in published {
            ss += g * g;
        }
        let oracle = (ss / 28.0).sqrt();
        let rms = gap_rms(&published.map(Some)).unwrap();
        assert!((rms - oracle).abs() < 1e-12);
        assert!((rms - 15.67).abs() < 0.005, "{rms}");
        assert!((rms - 15.65).abs() < 0.2);
        assert_eq!(gap_rms(&[Some(0.0), Some(0.0)]).unwrap(), 0.0);
        assert_eq!(gap_rms(&[Some(-3.5)]).unwrap(), 3.5);
        assert!(gap_rms(&[None, None]).is_err());
    }

    #[test]
    fn composer_is_advanced() {
        let before = two_by_two([[89.46, 84.31], [50.0, 50.0]]);
        let after = two_by_two([[89.49, 84.47], [50.0, 50.0]]);
        let v = judge_satisfaction(&before, &after, Epsilons::default()).unwrap();
        let composer = v[0].as_ref().unwrap();
        assert_eq!(composer.protected_group, GroupId(1));
        assert!(composer.base && composer.advanced);
    }

    #[test]
    fn accountant_is_base_only() {
        let before = two_by_two([[64.77, 63.45], [50.0, 50.0]]);
        let after = two_by_two([[64.74, 63.64], [50.0, 50.0]]);
        let v = judge_satisfaction(&before, &after, Epsilons::default()).unwrap();
        let acc = v[0].as_ref().unwrap();
        assert!(acc.base);
        assert!(!acc.advanced);
        assert!(!acc.others_no_harm);
    }

    #[test]
    fn identity_is_not_satisfied() {
        let r = two_by_two([[70.0, 60.0], [40.0, 45.0]]);
        let rep = compare(&r, &r, &[10, 20], Epsilons::default()).unwrap();
        assert!(rep.verdicts.iter().flatten().all(|v| !v.base && !v.gap_decreased));
        assert_eq!(rep.unweighted_base_rate, 0.0);
        assert_eq!(rep.weighted_advanced_rate, 0.0);
        assert_eq!(rep.worsened_gap_fraction, 0.0);
    }

    #[test]
    fn protected_tie_is_flagged() {
        let before = two_by_two([[60.0, 60.0], [50.0, 40.0]]);
        let v = judge_satisfaction(&before, &before, Epsilons::default()).unwrap();
        let first = v[0].as_ref().unwrap();
        assert_eq!(first.protected_group, GroupId(0));
        assert!(first.protected_tie);
        assert!(!v[1].as_ref().unwrap().protected_tie);
    }

    #[test]
    fn weighted_rates_use_populations() {
        let before = two_by_two([[70.0, 60.0], [40.0, 45.0]]);
        let after = two_by_two([[70.0, 65.0], [39.0, 41.0]]);
        let rep = compare(&before, &after, &[90, 10], Epsilons::default()).unwrap();
        assert_eq!(rep.base_count, 1);
        assert_eq!(rep.unweighted_base_rate, 0.5);
        assert!((rep.weighted_base_rate - 0.9).abs() < 1e-12);
        assert_eq!(rep.worsened_gap_count, 0);
        assert!(compare(&before, &after, &[0, 0], Epsilons::default()).is_err());
        assert!(compare(&before, &after, &[1], Epsilons::default()).is_err());
    }

    #[test]
    fn catalog_mismatch() {
        let a = two_by_two([[1.0, 2.0], [3.0, 4.0]]);
        let mut b = a.clone();
        b.group_names[0] = "x".into();
        assert!(judge_satisfaction(&a, &b, Epsilons::default()).is_err());
    }

    #[test]
    fn three_groups_use_range() {
        let r = EvalResult::from_rates(
            vec!["a".into(), "b".into()],
            names("g", 3),
            vec![vec![50.0, 80.0, 65.0], vec![10.0, 10.0, 10.0]],
            None,
        )
        .unwrap();
        assert_eq!(r.gaps, vec![Some(30.0), Some(0.0)]);
    }

    #[test]
    fn mean_of_runs() {
        let a = two_by_two([[60.0, 50.0], [40.0, 40.0]]);
        let b = two_by_two([[70.0, 50.0], [40.0, 20.0]]);
        let m = EvalResult::mean(&[a, b]).unwrap();
        assert_eq!(m.tpr(ClassId(0), GroupId(0)), Some(65.0));
        assert_eq!(m.gaps, vec![Some(15.0), Some(10.0)]);
    }

    fn instance() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, usize)>)> {
        (2usize..5, 2usize..4).prop_flat_map(|(c, g)| {
            (
                Just(c),
                Just(g),
                proptest::collection::vec((0..c, 0..c, 0..g), 1..200),
            )
        })
    }

    fn eval_rows(c: usize, g: usize, rows: &[(usize, usize, usize)]) -> EvalResult {
        let preds: Vec<ClassId> = rows.iter().map(|r| ClassId(r.0)).collect();
        let labels: Vec<ClassId> = rows.iter().map(|r| ClassId(r.1)).collect();
        let groups: Vec<GroupId> = rows.iter().map(|r| GroupId(r.2)).collect();
        evaluate(&preds, &labels, &groups, &names("c", c), &names("g", g)).unwrap()
    }

    proptest! {
        #[test]
        fn rms_squared_times_count_is_sum_of_squares(gaps in proptest::collection::vec(-100.0f64..100.0, 1..40)) {
            let rms = gap_rms(&gaps.iter().copied().map(Some).collect::<Vec<_>>()).unwrap();
            let ss: f64 = gaps.iter().map(|g| g * g).sum();
            prop_assert!((rms * rms * gaps.len() as f64 - ss).abs() <= 1e-9 * ss.max(1.0));
            let mut rev = gaps.clone();
            rev.reverse();
            let rms_rev = gap_rms(&rev.iter().copied().map(Some).collect::<Vec<_>>()).unwrap();
            prop_assert!((rms - rms_rev).abs() <= 1e-9 * rms.max(1.0));
        }

        #[test]
        fn group_swap_negates_gaps((c, _g, rows) in instance()) {
            let r = eval_rows(c, 2, &rows.iter().map(|&(p, y, z)| (p, y, z % 2)).collect::<Vec<_>>());
            let swapped = eval_rows(c, 2, &rows.iter().map(|&(p, y, z)| (p, y, 1 - z % 2)).collect::<Vec<_>>());
            for (a, b) in r.gaps.iter().zip(&swapped.gaps) {
                match (a, b) {
                    (Some(a), Some(b)) => prop_assert!((a + b).abs() < 1e-12),
                    (None, None) => {}
                    _ => prop_assert!(false, "definedness changed"),
                }
            }
            match (r.gap_rms, swapped.gap_rms) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                (x, y) => prop_assert_eq!(x, y),
            }
        }

        #[test]
        fn group_swap_keeps_verdicts(
            before in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0), 1..10),
            after in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0), 10),
        ) {
            let k = before.len();
            let build = |rows: &[(f64, f64)], swap: bool| {
                EvalResult::from_rates(
                    names("c", k),
                    names("g", 2),
                    rows.iter().map(|&(a, b)| if swap { vec![b, a] } else { vec![a, b] }).collect(),
                    None,
                ).unwrap()
            };
            let after = &after[..k];
            let v1 = judge_satisfaction(&build(&before, false), &build(after, false), Epsilons::default()).unwrap();
            let v2 = judge_satisfaction(&build(&before, true), &build(after, true), Epsilons::default()).unwrap();
            for (a, b) in v1.iter().flatten().zip(v2.iter().flatten()) {
                if a.protected_tie { continue; }
                prop_assert_eq!((a.base, a.advanced, a.gap_decreased), (b.base, b.advanced, b.gap_decreased));
                prop_assert!(!a.advanced || a.base);
            }
        }

        #[test]
        fn adding_correct_examples_never_lowers_tpr((c, g, rows) in instance(), extra in 1usize..20) {
            let r = eval_rows(c, g, &rows);
            let (_, y, z) = rows[0];
            let mut more = rows.clone();
            more.extend(std::iter::repeat_n((y, y, z), extra));
            let r2 = eval_rows(c, g, &more);
            prop_assert!(r2.cells[y][z].tpr.unwrap() >= r.cells[y][z].tpr.unwrap());
        }

        #[test]
        fn equal_populations_make_rates_coincide(
            before in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0), 6),
            after in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0), 6),
        ) {
            let build = |rows: &[(f64, f64)]| EvalResult::from_rates(
                names("c", 6), names("g", 2),
                rows.iter().map(|&(a, b)| vec![a, b]).collect(), None).unwrap();
            let rep = compare(&build(&before), &build(&after), &[7; 6], Epsilons::default()).unwrap();
            prop_assert!((rep.weighted_base_rate - rep.unweighted_base_rate).abs() < 1e-12);
            prop_assert!((rep.weighted_advanced_rate - rep.unweighted_advanced_rate).abs() < 1e-12);
        }
    }
}
