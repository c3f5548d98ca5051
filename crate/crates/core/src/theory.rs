//! Exact checks of the permutation-symmetry arguments: the closest invariant
//! distribution, the permuted-sampler identity, and the four counterexamples
//! showing why the minimizing family must be uniform on a superset of the data.
//!
//! The counterexamples run over abstract atoms `1..=32`. Class `a` holds atoms
//! 1..=24 and class `b` atoms 25..=30; the closest invariant distribution is
//! uniform over all 32 atoms. A distribution over abstract atoms is invariant
//! when it is constant on each declared class.
//!
//! [`report`] returns one [`Check`] per claim. [`Check::line`] renders the
//! machine-readable form
//!
//! ```text
//! check<TAB><id><TAB><PASS|FAIL><TAB><expected><TAB><computed>
//! ```

use std::fmt;

use num::{BigRational, One, Signed, Zero};

use crate::error::Result;
use crate::graph::{for_each_permutation, permute, Graph, Permutation};
use crate::invariance::{
    closest_invariant_uniform, is_permutation_invariant, permuted_sampler_closed_form, permuted_sampler_distribution,
    search_uniform_invariant,
};
use crate::iso::isomorphism_class;
use crate::mixture::{rational, total_variation, DiracMixture, TvConvention};

pub type Atom = u32;

pub const ATOMS: Atom = 32;

pub fn class_a() -> Vec<Atom> {
    (1..=24).collect()
}

pub fn class_b() -> Vec<Atom> {
    (25..=30).collect()
}

/// Whether `q` is constant on each declared class and supported on their union.
pub fn is_class_invariant(q: &DiracMixture<Atom>, classes: &[Vec<Atom>]) -> bool {
    let covered = q.support().all(|a| classes.iter().any(|c| c.contains(a)));
    covered
        && classes
            .iter()
            .all(|c| c.iter().all(|a| q.prob(a) == q.prob(&c[0])))
}

/// `ρ_a` on every class-`a` atom and `ρ_b = (1 − 24ρ_a)/6` on every class-`b` atom.
pub fn q_alpha(rho_a: &BigRational) -> Result<DiracMixture<Atom>> {
    let rho_b = (BigRational::one() - rational(24, 1) * rho_a) / rational(6, 1);
    DiracMixture::new(
        class_a()
            .into_iter()
            .map(|a| (a, rho_a.clone()))
            .chain(class_b().into_iter().map(|a| (a, rho_b.clone()))),
    )
}

pub fn q_beta() -> Result<DiracMixture<Atom>> {
    DiracMixture::uniform(class_b())
}

pub fn p_star() -> Result<DiracMixture<Atom>> {
    DiracMixture::uniform(1..=ATOMS)
}

/// Training set with two isomorphic members: `{23, 24, 25}`.
pub fn data_with_isomorphic_pair() -> Result<DiracMixture<Atom>> {
    DiracMixture::uniform([23, 24, 25])
}

/// Training set without isomorphic members: `{24, 25}`.
pub fn data_without_isomorphic_pair() -> Result<DiracMixture<Atom>> {
    DiracMixture::uniform([24, 25])
}

fn tv(p: &DiracMixture<Atom>, q: &DiracMixture<Atom>) -> BigRational {
    total_variation(p, q, TvConvention::Unhalved)
}

/// Largest `ρ_a` bound such that `TV(q_α(ρ), data) < TV*` for all smaller
/// positive `ρ`, found by solving the affine relation exactly.
pub fn rho_bound(data: &DiracMixture<Atom>) -> Result<BigRational> {
    let target = tv(&p_star()?, data);
    let r0 = rational(1, 96);
    let r1 = rational(1, 48);
    let t0 = tv(&q_alpha(&r0)?, data);
    let t1 = tv(&q_alpha(&r1)?, data);
    let slope = (t1 - t0.clone()) / (r1 - r0.clone());
    Ok(r0 + (target - t0) / slope)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    pub expected: String,
    pub computed: String,
}

impl Check {
    fn exact(id: &str, expected: BigRational, computed: BigRational) -> Self {
        Self {
            id: id.to_string(),
            passed: expected == computed,
            expected: expected.to_string(),
            computed: computed.to_string(),
        }
    }

    fn holds(id: &str, statement: &str, passed: bool) -> Self {
        Self {
            id: id.to_string(),
            passed,
            expected: statement.to_string(),
            computed: passed.to_string(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "check\t{}\t{}\t{}\t{}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.expected,
            self.computed
        )
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<34} {:<4}  expected {:<18} computed {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.expected,
            self.computed
        )
    }
}

/// Counterexample checks over abstract atoms.
pub fn counterexample_checks() -> Result<Vec<Check>> {
    let star = p_star()?;
    let classes = [class_a(), class_b()];
    let iso = data_with_isomorphic_pair()?;
    let plain = data_without_isomorphic_pair()?;
    let rho_a = rational(1, 48);
    let qa = q_alpha(&rho_a)?;
    let qb = q_beta()?;
    let mut out = Vec::new();

    out.push(Check::exact("case1.rho_b", rational(1, 12), qa.prob(&25)));
    out.push(Check::holds("case1.q_alpha_invariant", "constant per class", is_class_invariant(&qa, &classes)));
    out.push(Check::holds("case1.q_alpha_not_uniform", "rho_a != rho_b", qa.prob(&1) != qa.prob(&25)));
    out.push(Check::exact("case1.tv_star", rational(29, 16), tv(&star, &iso)));
    out.push(Check::exact("case1.tv_q_alpha", rational(7, 4), tv(&qa, &iso)));
    out.push(Check::holds(
        "case1.tv_q_alpha_below_tv_star",
        "7/4 < 29/16",
        tv(&qa, &iso) < tv(&star, &iso),
    ));
    let affine1 = [rational(1, 96), rational(1, 48), rational(1, 30)]
        .iter()
        .all(|r| tv(&q_alpha(r).unwrap(), &iso) == rational(5, 3) + rational(4, 1) * r);
    out.push(Check::holds("case1.tv_is_5/3+4rho_a", "on 1/96, 1/48, 1/30", affine1));
    let bound1 = rho_bound(&iso)?;
    out.push(Check::exact(
        "case1.slack_4rho_a",
        rational(7, 48),
        tv(&star, &iso) - rational(5, 3),
    ));
    // the stated bound is the slack on 4ρ_a; the bound on ρ_a itself is a quarter of it
    out.push(Check::exact("case1.rho_a_bound_stated", rational(7, 48), bound1.clone()));
    out.push(Check::exact("case1.rho_a_bound_derived", rational(7, 192), bound1));

    out.push(Check::exact("case2.tv_star", rational(15, 8), tv(&star, &plain)));
    out.push(Check::exact("case2.tv_q_alpha", rational(43, 24), tv(&qa, &plain)));
    let affine2 = [rational(1, 96), rational(1, 48), rational(1, 30)]
        .iter()
        .all(|r| tv(&q_alpha(r).unwrap(), &plain) == rational(5, 3) + rational(6, 1) * r);
    out.push(Check::holds("case2.tv_is_5/3+6rho_a", "on 1/96, 1/48, 1/30", affine2));
    out.push(Check::holds(
        "case2.tv_q_alpha_below_tv_star",
        "43/24 < 15/8",
        tv(&qa, &plain) < tv(&star, &plain),
    ));
    out.push(Check::exact("case2.rho_a_bound", rational(5, 144), rho_bound(&plain)?));

    out.push(Check::holds("case3.q_beta_invariant", "constant per class", is_class_invariant(&qb, &classes)));
    out.push(Check::holds(
        "case3.q_beta_misses_data",
        "support excludes 23, 24",
        qb.prob(&23).is_zero() && qb.prob(&24).is_zero(),
    ));
    out.push(Check::exact("case3.tv_star", rational(29, 16), tv(&star, &iso)));
    out.push(Check::exact("case3.tv_q_beta", rational(5, 3), tv(&qb, &iso)));
    out.push(Check::holds("case3.tv_q_beta_below_tv_star", "5/3 < 29/16", tv(&qb, &iso) < tv(&star, &iso)));

    out.push(Check::exact("case4.tv_star", rational(15, 8), tv(&star, &plain)));
    out.push(Check::exact("case4.tv_q_beta", rational(5, 3), tv(&qb, &plain)));
    out.push(Check::holds(
        "case4.tv_q_beta_below_tv_star",
        "5/3 < 15/8",
        tv(&qb, &plain) < tv(&star, &plain),
    ));
    Ok(out)
}

/// Checks on concrete small graphs.
pub fn graph_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let path3 = Graph::from_edges(3, &[(0, 1), (1, 2)])?;

    let c = closest_invariant_uniform(&[path3.clone()])?;
    out.push(Check::exact("closest.path3.tv", rational(4, 3), c.tv.clone()));
    out.push(Check::exact("closest.path3.formula", c.tv, c.tv_formula));

    let p4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)])?;
    let star4 = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)])?;
    let c = closest_invariant_uniform(&[p4.clone(), star4.clone()])?;
    let s = search_uniform_invariant(&[p4.clone(), star4])?;
    out.push(Check::exact("closest.n4.search_min", c.tv, s.min_tv));
    out.push(Check::holds(
        "closest.n4.unique_minimizer",
        &format!("support {}", c.l),
        s.minimizers == 1 && s.argmin_support == c.l,
    ));

    let base = DiracMixture::uniform([path3.clone()])?;
    let q = permuted_sampler_distribution(&base)?;
    out.push(Check::exact("permuted.path3.mass", rational(1, 3), q.prob(&path3)));
    out.push(Check::holds("permuted.path3.support", "3 matrices", q.len() == 3));

    let h = permute(&p4, &Permutation::new(vec![1, 0, 2, 3])?)?;
    let base = DiracMixture::new([(p4.clone(), rational(7, 10)), (h, rational(3, 10))])?;
    let q = permuted_sampler_distribution(&base)?;
    let class = isomorphism_class(&p4)?;
    out.push(Check::holds(
        "permuted.n4.uniform_on_class",
        &format!("1/{} on {} matrices", class.len(), class.len()),
        q.len() == class.len() && q.iter().all(|(_, w)| *w == rational(1, class.len() as i64)),
    ));
    out.push(Check::holds("permuted.n4.invariant", "q(PAPᵀ) = q(A)", is_permutation_invariant(&q)?));
    out.push(Check::holds(
        "permuted.n4.closed_form",
        "matches enumeration",
        q.same_distribution(&permuted_sampler_closed_form(&base)?),
    ));
    out.push(Check::holds(
        "permuted.n4.idempotent",
        "q∘q = q",
        permuted_sampler_distribution(&q)?.same_distribution(&q),
    ));
    Ok(out)
}

pub fn report() -> Result<Vec<Check>> {
    let mut out = counterexample_checks()?;
    out.extend(graph_checks()?);
    Ok(out)
}

/// Largest exact difference `|q(A) − q(PAPᵀ)|` over atoms and permutations.
pub fn max_invariance_gap(q: &DiracMixture<Graph>) -> BigRational {
    let n = q.support().next().map_or(0, Graph::n);
    let mut worst = BigRational::zero();
    for (a, w) in q.iter() {
        for_each_permutation(n, |p| {
            let gap = (w.clone() - q.prob(&permute(a, p).expect("sizes agree"))).abs();
            if gap > worst {
                worst = gap;
            }
        });
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abstract_mixtures_are_normalized() {
        assert_eq!(q_alpha(&rational(1, 48)).unwrap().len(), 30);
        assert_eq!(p_star().unwrap().len(), 32);
        assert!(q_alpha(&rational(1, 20)).is_err());
    }

    #[test]
    fn line_format_is_tab_separated() {
        let c = Check::exact("x.y", rational(1, 2), rational(1, 2));
        assert_eq!(c.line(), "check\tx.y\tPASS\t1/2\t1/2");
    }

    #[test]
    fn p_star_is_not_class_invariant_over_declared_classes() {
        // atoms 31 and 32 sit outside both declared classes
        assert!(!is_class_invariant(&p_star().unwrap(), &[class_a(), class_b()]));
        assert!(is_class_invariant(&q_beta().unwrap(), &[class_a(), class_b()]));
    }

    #[test]
    fn every_check_except_the_stated_case1_bound_passes() {
        let rows = report().unwrap();
        let failed: Vec<_> = rows.iter().filter(|c| !c.passed).map(|c| c.id.as_str()).collect();
        assert_eq!(failed, ["case1.rho_a_bound_stated"]);
    }

    /// The stated first-counterexample bound; exact arithmetic gives 7/192.
    #[test]
    #[ignore = "stated bound 7/48 disagrees with the exact value 7/192"]
    fn stated_case1_bound_is_exact() {
        let rows = report().unwrap();
        let row = rows.iter().find(|c| c.id == "case1.rho_a_bound_stated").unwrap();
        assert!(row.passed, "{row}");
    }
}
