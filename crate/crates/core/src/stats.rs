//! Chi-square tests used by the statistical checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Goodness-of-fit p-value of `counts` against the uniform distribution.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let k = counts.len();
    if k < 2 {
        return 1.0;
    }
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / k as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    survival(stat, (k - 1) as f64)
}

/// Goodness-of-fit p-value of observed counts against given probabilities.
pub fn chi_square_gof(counts: &[u64], probabilities: &[f64]) -> f64 {
    assert_eq!(counts.len(), probabilities.len());
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probabilities) {
        let e = p * total as f64;
        if e > 0.0 {
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if cells < 2 {
        return 1.0;
    }
    survival(stat, (cells - 1) as f64)
}

/// Two-sample homogeneity test on a 2×k contingency table. Categories whose
/// pooled expected count is below `min_expected` are merged into one cell.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64], min_expected: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return 1.0;
    }
    let total = (na + nb) as f64;
    let frac_small = na.min(nb) as f64 / total;
    let mut cells: Vec<(u64, u64)> = Vec::new();
    let mut pooled = (0u64, 0u64);
    for (&x, &y) in a.iter().zip(b) {
        if ((x + y) as f64) * frac_small < min_expected {
            pooled.0 += x;
            pooled.1 += y;
        } else {
            cells.push((x, y));
        }
    }
    if pooled.0 + pooled.1 > 0 {
        cells.push(pooled);
    }
    if cells.len() < 2 {
        return 1.0;
    }
    let mut stat = 0.0;
    for &(x, y) in &cells {
        let col = (x + y) as f64;
        let ea = col * na as f64 / total;
        let eb = col * nb as f64 / total;
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    survival(stat, (cells.len() - 1) as f64)
}

fn survival(stat: f64, dof: f64) -> f64 {
    let dist = ChiSquared::new(dof).expect("positive degrees of freedom");
    1.0 - dist.cdf(stat)
}
