//! Polynomial feature expansion and least-squares fitting over
//! standardized features.
//!
//! Features are standardized (zero mean, unit variance over the training
//! set) before expansion; raw feature scales in this domain differ by four
//! orders of magnitude and would wreck the conditioning otherwise. The
//! solve goes through an SVD (minimum-norm least squares), never the
//! normal equations.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Exponent tuples of all monomials with total degree <= `degree` over
/// `n_features` variables: constant first, then grouped by rising total
/// degree, descending lexicographically within a group. For two features
/// and degree 2: 1, x1, x2, x1^2, x1*x2, x2^2.
pub fn exponent_tuples(n_features: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n_features];
    for total in 0..=degree {
        push_tuples(&mut out, &mut current, 0, total);
    }
    out
}

fn push_tuples(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for take in (0..=remaining).rev() {
        current[pos] = take;
        push_tuples(out, current, pos + 1, remaining - take);
    }
    current[pos] = 0;
}

/// Number of monomials of total degree <= degree: C(n + d, d).
pub fn coefficient_count(n_features: usize, degree: u32) -> usize {
    let mut count: usize = 1;
    for i in 1..=degree as usize {
        count = count * (n_features + i) / i;
    }
    count
}

/// Evaluates every monomial of total degree <= `degree` at `x`, in
/// `exponent_tuples` order.
pub fn polynomial_features(x: &[f64], degree: u32) -> Vec<f64> {
    exponent_tuples(x.len(), degree)
        .iter()
        .map(|exps| {
            exps.iter()
                .zip(x)
                .map(|(&e, &v)| v.powi(e as i32))
                .product()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyModel {
    pub degree: u32,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    /// Coefficients over the standardized monomial basis, in
    /// `exponent_tuples` order.
    pub coefficients: Vec<f64>,
}

impl PolyModel {
    pub fn n_features(&self) -> usize {
        self.feature_means.len()
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.feature_means.iter().zip(&self.feature_scales))
            .map(|(&v, (&mu, &sigma))| (v - mu) / sigma)
            .collect()
    }

    pub fn predict_features(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_features(), "feature arity mismatch");
        polynomial_features(&self.standardize(x), self.degree)
            .iter()
            .zip(&self.coefficients)
            .map(|(phi, beta)| phi * beta)
            .sum()
    }

    /// Re-expresses the fitted polynomial over the raw (unstandardized)
    /// monomial basis, in `exponent_tuples` order. Substituting
    /// x' = (x - mu)/sigma into each standardized monomial and expanding
    /// the binomials gives the raw coefficients exactly.
    pub fn raw_coefficients(&self) -> Vec<f64> {
        let n = self.n_features();
        let tuples = exponent_tuples(n, self.degree);
        let mut raw: std::collections::BTreeMap<Vec<u32>, f64> = std::collections::BTreeMap::new();
        for (exps, &beta) in tuples.iter().zip(&self.coefficients) {
            let scale: f64 = exps
                .iter()
                .zip(&self.feature_scales)
                .map(|(&e, &sigma)| sigma.powi(e as i32))
                .product();
            // terms: exponent tuple -> accumulated coefficient
            let mut terms: Vec<(Vec<u32>, f64)> = vec![(Vec::with_capacity(n), beta / scale)];
            for (j, &a) in exps.iter().enumerate() {
                let mu = self.feature_means[j];
                let mut next = Vec::with_capacity(terms.len() * (a as usize + 1));
                for (prefix, coeff) in &terms {
                    for b in 0..=a {
                        let mut exp = prefix.clone();
                        exp.push(b);
                        next.push((exp, coeff * binomial(a, b) * (-mu).powi((a - b) as i32)));
                    }
                }
                terms = next;
            }
            for (exp, coeff) in terms {
                *raw.entry(exp).or_insert(0.0) += coeff;
            }
        }
        tuples
            .iter()
            .map(|t| raw.get(t).copied().unwrap_or(0.0))
            .collect()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut result = 1.0;
    for i in 0..k {
        result = result * (n - i) as f64 / (i + 1) as f64;
    }
    result
}

/// Least-squares polynomial fit. Returns the model and the training MSE.
pub fn fit_poly(rows: &[Vec<f64>], y: &[f64], degree: u32) -> Result<(PolyModel, f64)> {
    assert_eq!(rows.len(), y.len());
    assert!(degree >= 1, "degree must be >= 1");
    let n_features = rows.first().map_or(0, Vec::len);
    let n_coeffs = coefficient_count(n_features, degree);
    if rows.len() < n_coeffs {
        return Err(Error::UnderdeterminedFit {
            degree,
            rows: rows.len(),
            coefficients: n_coeffs,
        });
    }

    let n = rows.len() as f64;
    let mut means = vec![0.0; n_features];
    for row in rows {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut scales = vec![0.0; n_features];
    for row in rows {
        for ((s, v), m) in scales.iter_mut().zip(row).zip(&means) {
            *s += (v - m) * (v - m) / n;
        }
    }
    for s in &mut scales {
        *s = s.sqrt();
        if *s == 0.0 {
            *s = 1.0; // constant feature; the rank check below rejects it
        }
    }

    let model_shell = PolyModel {
        degree,
        feature_means: means,
        feature_scales: scales,
        coefficients: Vec::new(),
    };
    let phi_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| polynomial_features(&model_shell.standardize(row), degree))
        .collect();
    let design = DMatrix::from_fn(rows.len(), n_coeffs, |i, j| phi_rows[i][j]);
    let rhs = DVector::from_column_slice(y);

    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = max_sv * f64::EPSILON * rows.len().max(n_coeffs) as f64;
    let rank = svd.singular_values.iter().filter(|&&sv| sv > tol).count();
    if rank < n_coeffs {
        return Err(Error::SingularSystem { degree });
    }
    let beta = svd
        .solve(&rhs, tol)
        .map_err(|_| Error::SingularSystem { degree })?;

    let residual = &design * &beta - &rhs;
    let train_mse = residual.iter().map(|r| r * r).sum::<f64>() / rows.len() as f64;

    let model = PolyModel {
        coefficients: beta.iter().copied().collect(),
        ..model_shell
    };
    Ok((model, train_mse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expansion_order_two_features_degree_two() {
        assert_eq!(
            polynomial_features(&[2.0, 3.0], 2),
            vec![1.0, 2.0, 3.0, 4.0, 6.0, 9.0]
        );
    }

    #[test]
    fn expansion_degree_one_is_affine_basis() {
        assert_eq!(polynomial_features(&[5.0, 7.0, 11.0], 1), vec![1.0, 5.0, 7.0, 11.0]);
    }

    #[test]
    fn expansion_at_zero() {
        let phi = polynomial_features(&[0.0, 0.0], 3);
        assert_eq!(phi[0], 1.0);
        assert!(phi[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coefficient_counts() {
        assert_eq!(coefficient_count(5, 1), 6);
        assert_eq!(coefficient_count(5, 2), 21);
        assert_eq!(coefficient_count(5, 3), 56);
        assert_eq!(exponent_tuples(5, 3).len(), 56);
    }

    #[test]
    fn exact_line_through_three_points() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = [2.0, 5.0, 8.0];
        let (model, mse) = fit_poly(&rows, &y, 1).unwrap();
        assert!(mse < 1e-20, "{mse}");
        let raw = model.raw_coefficients();
        assert_relative_eq!(raw[0], 2.0, epsilon = 1e-9); // intercept
        assert_relative_eq!(raw[1], 3.0, epsilon = 1e-9); // slope
        assert_relative_eq!(model.predict_features(&[3.0]), 11.0, epsilon = 1e-9);
    }

    #[test]
    fn underdetermined_fit_is_rejected() {
        let rows: Vec<Vec<f64>> = (0..3).map(|i| vec![i as f64; 5]).collect();
        let y = [1.0, 2.0, 3.0];
        let err = fit_poly(&rows, &y, 2).unwrap_err();
        assert!(matches!(err, Error::UnderdeterminedFit { coefficients: 21, rows: 3, .. }), "{err}");
    }

    #[test]
    fn constant_feature_is_singular() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 4.0]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let err = fit_poly(&rows, &y, 2).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { degree: 2 }), "{err}");
    }

    #[test]
    fn interpolates_training_rows_exactly_when_noiseless() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![i as f64, (i * i % 7) as f64])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 1.5 + 2.0 * r[0] - 0.25 * r[1] + 0.125 * r[0] * r[1])
            .collect();
        let (model, _) = fit_poly(&rows, &y, 2).unwrap();
        for (row, target) in rows.iter().zip(&y) {
            assert_relative_eq!(model.predict_features(row), *target, max_relative = 1e-9);
        }
    }

    #[test]
    fn raw_coefficients_round_trip_prediction() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![10.0 + i as f64, 3.0 * ((i * 13 % 17) as f64)])
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| 4.0 - r[0] + 0.3 * r[1] * r[1]).collect();
        let (model, _) = fit_poly(&rows, &y, 2).unwrap();
        let raw = model.raw_coefficients();
        let tuples = exponent_tuples(2, 2);
        for row in &rows {
            let via_raw: f64 = tuples
                .iter()
                .zip(&raw)
                .map(|(exps, c)| {
                    c * exps
                        .iter()
                        .zip(row)
                        .map(|(&e, &v)| v.powi(e as i32))
                        .product::<f64>()
                })
                .sum();
            assert_relative_eq!(via_raw, model.predict_features(row), max_relative = 1e-8);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn feature_count_matches_formula(n in 1usize..6, d in 1u32..4) {
                let x: Vec<f64> = (0..n).map(|i| i as f64 + 0.5).collect();
                prop_assert_eq!(polynomial_features(&x, d).len(), coefficient_count(n, d));
            }

            #[test]
            fn tuples_are_graded_and_unique(n in 1usize..6, d in 1u32..4) {
                let tuples = exponent_tuples(n, d);
                let mut seen = std::collections::HashSet::new();
                let mut last_total = 0u32;
                for t in &tuples {
                    let total: u32 = t.iter().sum();
                    prop_assert!(total <= d);
                    prop_assert!(total >= last_total || total == last_total);
                    if total > last_total { last_total = total; }
                    prop_assert!(seen.insert(t.clone()));
                }
            }
        }
    }
}
