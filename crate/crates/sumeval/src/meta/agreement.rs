//! Inter-annotator agreement: Cohen's kappa and Krippendorff's alpha
//! (nominal and interval metrics).

use std::collections::BTreeMap;

use super::MetaError;

/// Cohen's kappa between two raters over a shared label space:
/// `(p_o - p_e) / (1 - p_e)` with chance agreement from the marginals.
pub fn cohen_kappa<T: Ord + Clone>(a: &[T], b: &[T]) -> Result<f64, MetaError> {
    if a.len() != b.len() {
        return Err(MetaError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(MetaError::TooFewPairs { got: a.len() });
    }
    let n = a.len() as f64;
    let observed = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;

    let mut freq_a: BTreeMap<&T, f64> = BTreeMap::new();
    let mut freq_b: BTreeMap<&T, f64> = BTreeMap::new();
    for label in a {
        *freq_a.entry(label).or_insert(0.0) += 1.0;
    }
    for label in b {
        *freq_b.entry(label).or_insert(0.0) += 1.0;
    }
    let expected: f64 = freq_a
        .iter()
        .map(|(label, ca)| ca / n * freq_b.get(label).copied().unwrap_or(0.0) / n)
        .sum();

    if (1.0 - expected).abs() < f64::EPSILON {
        return Err(MetaError::UndefinedKappa);
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Krippendorff's alpha for nominal data over a raters-by-items matrix with
/// missing ratings. Items with fewer than two ratings are excluded.
///
/// Built on the coincidence matrix: each ratable pair inside an item with
/// m_u ratings contributes 1/(m_u - 1); `alpha = 1 - D_o / D_e` with the
/// nominal difference (0 if equal, 1 otherwise).
pub fn krippendorff_alpha_nominal<T: Ord + Clone>(
    ratings: &[Vec<Option<T>>],
) -> Result<f64, MetaError> {
    if ratings.len() < 2 {
        return Err(MetaError::NoPairableValues);
    }
    let num_items = ratings.iter().map(Vec::len).max().unwrap_or(0);

    let mut coincidence: BTreeMap<(&T, &T), f64> = BTreeMap::new();
    let mut totals: BTreeMap<&T, f64> = BTreeMap::new();
    let mut n = 0.0;

    for item in 0..num_items {
        let values: Vec<&T> = ratings
            .iter()
            .filter_map(|rater| rater.get(item).and_then(Option::as_ref))
            .collect();
        let m = values.len();
        if m < 2 {
            continue;
        }
        let weight = 1.0 / (m as f64 - 1.0);
        for (i, &v) in values.iter().enumerate() {
            *totals.entry(v).or_insert(0.0) += 1.0;
            n += 1.0;
            for (j, &w) in values.iter().enumerate() {
                if i != j {
                    *coincidence.entry((v, w)).or_insert(0.0) += weight;
                }
            }
        }
    }

    if n == 0.0 {
        return Err(MetaError::NoPairableValues);
    }

    let observed_disagreement: f64 = coincidence
        .iter()
        .filter(|((v, w), _)| v != w)
        .map(|(_, count)| count)
        .sum::<f64>()
        / n;
    if observed_disagreement == 0.0 {
        return Ok(1.0);
    }
    let expected_disagreement: f64 = {
        let mut sum = 0.0;
        for (v, cv) in &totals {
            for (w, cw) in &totals {
                if v != w {
                    sum += cv * cw;
                }
            }
        }
        sum / (n * (n - 1.0))
    };
    Ok(1.0 - observed_disagreement / expected_disagreement)
}

/// Krippendorff's alpha for interval data (squared-difference metric) over a
/// raters-by-items matrix with missing ratings. The range normalization of
/// the squared difference cancels in the D_o/D_e ratio.
pub fn krippendorff_alpha_interval(ratings: &[Vec<Option<f64>>]) -> Result<f64, MetaError> {
    if ratings.len() < 2 {
        return Err(MetaError::NoPairableValues);
    }
    let num_items = ratings.iter().map(Vec::len).max().unwrap_or(0);

    let mut pooled: Vec<f64> = Vec::new();
    let mut observed_sum = 0.0;

    for item in 0..num_items {
        let values: Vec<f64> = ratings
            .iter()
            .filter_map(|rater| rater.get(item).and_then(|v| *v))
            .collect();
        let m = values.len();
        if m < 2 {
            continue;
        }
        let weight = 1.0 / (m as f64 - 1.0);
        for (i, v) in values.iter().enumerate() {
            for (j, w) in values.iter().enumerate() {
                if i != j {
                    observed_sum += weight * (v - w) * (v - w);
                }
            }
        }
        pooled.extend(values);
    }

    let n = pooled.len() as f64;
    if pooled.len() < 2 {
        return Err(MetaError::NoPairableValues);
    }
    let observed_disagreement = observed_sum / n;
    if observed_disagreement == 0.0 {
        return Ok(1.0);
    }
    let mut expected_sum = 0.0;
    for (i, v) in pooled.iter().enumerate() {
        for (j, w) in pooled.iter().enumerate() {
            if i != j {
                expected_sum += (v - w) * (v - w);
            }
        }
    }
    let expected_disagreement = expected_sum / (n * (n - 1.0));
    Ok(1.0 - observed_disagreement / expected_disagreement)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_perfect_agreement() {
        let a = vec![1, 1, 0, 2, 0];
        assert!((cohen_kappa(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_hand_computed_zero() {
        // p_o = 0.5, p_e = 0.5 -> kappa = 0
        let a = vec![1, 1, 0, 0];
        let b = vec![1, 0, 1, 0];
        assert!(cohen_kappa(&a, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn kappa_undefined_for_constant_equal_raters() {
        let a = vec![1, 1, 1];
        assert!(matches!(
            cohen_kappa(&a, &a),
            Err(MetaError::UndefinedKappa)
        ));
    }

    fn two_raters<T: Clone>(pairs: &[(T, T)]) -> Vec<Vec<Option<T>>> {
        vec![
            pairs.iter().map(|(a, _)| Some(a.clone())).collect(),
            pairs.iter().map(|(_, b)| Some(b.clone())).collect(),
        ]
    }

    #[test]
    fn nominal_alpha_all_agree() {
        let ratings = two_raters(&[("a", "a"), ("b", "b"), ("c", "c")]);
        assert_eq!(krippendorff_alpha_nominal(&ratings).unwrap(), 1.0);
    }

    #[test]
    fn nominal_alpha_coincidence_fixture() {
        // (a,a),(b,b),(a,b),(b,a): D_o = 1/2, D_e = 4/7, alpha = 1/8.
        let ratings = two_raters(&[("a", "a"), ("b", "b"), ("a", "b"), ("b", "a")]);
        let alpha = krippendorff_alpha_nominal(&ratings).unwrap();
        assert!((alpha - 0.125).abs() < 1e-12, "alpha = {alpha}");
    }

    #[test]
    fn nominal_alpha_ignores_unpairable_items() {
        // Third item rated only once: excluded.
        let ratings = vec![
            vec![Some("x"), Some("y"), Some("z")],
            vec![Some("x"), Some("y"), None],
        ];
        assert_eq!(krippendorff_alpha_nominal(&ratings).unwrap(), 1.0);
    }

    #[test]
    fn single_rater_has_no_pairable_values() {
        let ratings = vec![vec![Some(1), Some(2)]];
        assert!(matches!(
            krippendorff_alpha_nominal(&ratings),
            Err(MetaError::NoPairableValues)
        ));
        let disjoint: Vec<Vec<Option<i32>>> =
            vec![vec![Some(1), None], vec![None, Some(2)]];
        assert!(matches!(
            krippendorff_alpha_nominal(&disjoint),
            Err(MetaError::NoPairableValues)
        ));
    }

    #[test]
    fn interval_alpha_identical_runs() {
        let ratings = vec![
            vec![Some(0.2), Some(0.5), Some(0.9)],
            vec![Some(0.2), Some(0.5), Some(0.9)],
        ];
        assert_eq!(krippendorff_alpha_interval(&ratings).unwrap(), 1.0);
    }

    #[test]
    fn interval_alpha_constant_everywhere_is_one() {
        let ratings = vec![vec![Some(1.0), Some(1.0)], vec![Some(1.0), Some(1.0)]];
        assert_eq!(krippendorff_alpha_interval(&ratings).unwrap(), 1.0);
    }

    #[test]
    fn interval_alpha_oracle_fixture() {
        // Two raters over three items; oracle computed by the direct
        // pair-sum procedure.
        let a = [0.0, 0.5, 1.0];
        let b = [0.0, 0.5, 0.5];
        let ratings = vec![
            a.iter().map(|&v| Some(v)).collect::<Vec<_>>(),
            b.iter().map(|&v| Some(v)).collect::<Vec<_>>(),
        ];
        // observed: per item 2 ordered pairs, weight 1/(2-1):
        //   item deltas^2: 0, 0, 0.25 -> sum over ordered pairs = 2*0.25 = 0.5
        //   n = 6, D_o = 0.5/6
        // expected: pooled = [0, .5, 1, 0, .5, .5]; sum over ordered pairs
        //   of squared deltas = 2 * sum over unordered = 2*4.25 = 8.5
        //   D_e = 8.5 / (6*5)
        let d_o = 0.5 / 6.0;
        let d_e = 8.5 / 30.0;
        let expected = 1.0 - d_o / d_e;
        let alpha = krippendorff_alpha_interval(&ratings).unwrap();
        assert!((alpha - expected).abs() < 1e-12, "alpha = {alpha}");
    }
}
