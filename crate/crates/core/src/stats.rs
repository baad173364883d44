//! Correlation statistics used by the validation step.

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Pearson correlation with population (1/n) normalization. The ratio is
/// invariant to the sample/population choice.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DegenerateInput(format!(
            "pearson: length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::DegenerateInput(
            "pearson: need at least 3 observations".into(),
        ));
    }
    let mean_x = x.iter().sum::<f64>() / n as f64;
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput(
            "pearson: constant vector".into(),
        ));
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.clamp(-1.0, 1.0))
}

/// Two-sided p-value for a Pearson r on `n` observations, from the exact
/// t statistic `r * sqrt((n-2)/(1-r^2))` with `n-2` degrees of freedom.
/// `|r| = 1` maps to p = 0 exactly.
pub fn pearson_pvalue(r: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::DegenerateInput(
            "pearson_pvalue: need at least 3 observations".into(),
        ));
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::DegenerateInput(format!(
            "pearson_pvalue: r = {r} out of [-1, 1]"
        )));
    }
    if r.abs() == 1.0 {
        return Ok(0.0);
    }
    let dof = (n - 2) as f64;
    let t2 = r * r * dof / (1.0 - r * r);
    // two-sided tail of Student's t via the regularized incomplete beta
    Ok(beta_reg(dof / 2.0, 0.5, dof / (dof + t2)))
}

/// Bonferroni correction: multiply by the number of simultaneous
/// comparisons, cap at 1.
pub fn bonferroni(p: f64, comparisons: usize) -> f64 {
    (p * comparisons as f64).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn self_correlation_is_exactly_one() {
        let x = vec![0.3, 1.7, 2.9, 4.1, 0.8];
        assert_eq!(pearson(&x, &x).unwrap(), 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &neg).unwrap(), -1.0);
    }

    #[test]
    fn exact_anti_linear_relation() {
        let x = vec![1.0, 2.0, 3.0];
        let y = vec![6.0, 4.0, 2.0];
        assert_eq!(pearson(&x, &y).unwrap(), -1.0);
    }

    #[test]
    fn positive_affine_is_one() {
        let x = vec![1.0, 2.0, 3.0];
        let y = vec![2.5, 4.5, 6.5];
        assert_eq!(pearson(&x, &y).unwrap(), 1.0);
    }

    #[test]
    fn constant_vector_is_degenerate() {
        let x = vec![1.0, 2.0, 3.0];
        let y = vec![5.0, 5.0, 5.0];
        assert!(matches!(pearson(&x, &y), Err(Error::DegenerateInput(_))));
        assert!(matches!(
            pearson(&x[..2], &y[..2]),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn pvalue_reference_points() {
        assert_eq!(pearson_pvalue(0.0, 10).unwrap(), 1.0);
        assert_eq!(pearson_pvalue(1.0, 10).unwrap(), 0.0);
        assert_eq!(pearson_pvalue(-1.0, 10).unwrap(), 0.0);
        // the headline-scale case: r = 0.88 on 40 municipalities
        assert!(pearson_pvalue(0.88, 40).unwrap() < 0.001);
    }

    #[test]
    fn pvalue_matches_t_density_quadrature() {
        // independent oracle: Simpson integration of the t density
        fn t_two_sided(t: f64, dof: f64) -> f64 {
            let log_norm = statrs::function::gamma::ln_gamma((dof + 1.0) / 2.0)
                - statrs::function::gamma::ln_gamma(dof / 2.0)
                - 0.5 * (dof * std::f64::consts::PI).ln();
            let pdf = |x: f64| (log_norm - (dof + 1.0) / 2.0 * (1.0 + x * x / dof).ln()).exp();
            // integrate the central region [-t, t] and take the complement
            let steps = 20_000;
            let h = 2.0 * t / steps as f64;
            let mut acc = pdf(-t) + pdf(t);
            for i in 1..steps {
                let x = -t + i as f64 * h;
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(x);
            }
            1.0 - acc * h / 3.0
        }

        for &(r, n) in &[(0.3_f64, 12_usize), (0.6, 25), (0.88, 40), (-0.45, 18)] {
            let dof = (n - 2) as f64;
            let t = r.abs() * (dof / (1.0 - r * r)).sqrt();
            let expect = t_two_sided(t, dof);
            let got = pearson_pvalue(r, n).unwrap();
            assert_abs_diff_eq!(got, expect, epsilon = 1e-8);
        }
    }

    #[test]
    fn bonferroni_caps_at_one() {
        assert_eq!(bonferroni(0.01, 4), 0.04);
        assert_eq!(bonferroni(0.4, 4), 1.0);
    }
}
