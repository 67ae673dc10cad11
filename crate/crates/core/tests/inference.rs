mod common;

use cdn_core::inference::{density, discrete_pmf, DiscreteCdn, Inference};
use cdn_core::margins::DiscreteMargin;
use cdn_core::model::{CdnModel, CopulaFactor, Evidence, VarState};
use common::checks::*;
use common::*;
use proptest::prelude::*;

#[test]
fn message_passing_matches_product_rule() {
    let (worst, _) = dsp_vs_product_rule(200, 2);
    assert!(worst < 1e-9, "worst relative error {worst:e}");
}

#[test]
fn chain_density_matches_nested_differences() {
    let worst = chain3_finite_difference(20, 3);
    assert!(worst < 1e-3, "worst relative error {worst:e}");
}

#[test]
fn normal_pair_matches_closed_form() {
    normal_closed_form().unwrap();
}

#[test]
fn linear_and_log_space_agree() {
    let (worst, compared) = log_vs_linear(300, 5);
    assert!(compared > 200);
    assert!(worst < 1e-10, "{worst:e}");
}

#[test]
fn extreme_clayton_stays_finite() {
    extreme_theta(25, 6).unwrap();
}

#[test]
fn discrete_matches_inclusion_exclusion() {
    discrete_variant().unwrap();
}

#[test]
fn calibration_is_self_consistent() {
    let (worst, models) = calibration_spread(9).unwrap();
    assert!(models > 20);
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn marginal_cdf_of_standard_margin() {
    let m = CdnModel::with_standard_margins(
        3,
        vec![CopulaFactor::clayton(2.0, vec![0, 1]), CopulaFactor::normal_pair(0.5, 1, 2)],
    )
    .unwrap();
    let mut inf = Inference::new(&m).unwrap();
    for i in 0..3 {
        assert!((inf.marginal_cdf(i, 0.0).unwrap() - 0.5).abs() < 1e-12);
    }
}

#[test]
fn conditional_is_a_ratio() {
    let m = CdnModel::with_standard_margins(2, vec![CopulaFactor::clayton(1.5, vec![0, 1])]).unwrap();
    let mut inf = Inference::new(&m).unwrap();
    let target = Evidence::free(2).with(0, VarState::CumulativeBound(0.3));
    let given = Evidence::free(2).with(1, VarState::Point(-0.2));
    let c = inf.conditional(&target, &given).unwrap().to_f64();
    let joint = inf.evaluate(&given.merge(&target)).unwrap().to_f64();
    let marg = inf.evaluate(&given).unwrap().to_f64();
    assert!(rel_err(c, joint / marg) < 1e-12);
    assert!(c > 0.0 && c < 1.0);
}

#[test]
fn all_marginalized_is_one() {
    let m = CdnModel::with_standard_margins(3, vec![CopulaFactor::clayton(3.0, vec![0, 1, 2])]).unwrap();
    let v = density(&m, &Evidence::marginalized(3)).unwrap();
    assert_eq!(v.to_f64(), 1.0);
}

#[test]
fn discrete_rejects_out_of_support() {
    let mut cdn = DiscreteCdn::new(
        vec![DiscreteMargin::bernoulli(0.3).unwrap(), DiscreteMargin::bernoulli(0.6).unwrap()],
        vec![CopulaFactor::clayton(2.0, vec![0, 1])],
    )
    .unwrap();
    assert!(discrete_pmf(&mut cdn, &[0, 2]).is_err());
    assert!(discrete_pmf(&mut cdn, &[-1, 0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_is_symmetric_in_exchangeable_pair(theta in 0.1f64..20.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let m = CdnModel::with_standard_margins(2, vec![CopulaFactor::clayton(theta, vec![0, 1])]).unwrap();
        let mut inf = Inference::new(&m).unwrap();
        let x = inf.log_density(&[a, b]).unwrap();
        let y = inf.log_density(&[b, a]).unwrap();
        prop_assert!((x - y).abs() < 1e-10);
    }

    #[test]
    fn cdf_is_monotone(theta in 0.1f64..10.0, a in -2.0f64..2.0, b in -2.0f64..2.0, step in 0.0f64..1.0) {
        let m = CdnModel::with_standard_margins(3, vec![
            CopulaFactor::clayton(theta, vec![0, 1]),
            CopulaFactor::clayton(theta, vec![1, 2]),
        ]).unwrap();
        let mut inf = Inference::new(&m).unwrap();
        let lo = inf.evaluate(&Evidence::bound(&[a, b, 0.0])).unwrap().to_f64();
        let hi = inf.evaluate(&Evidence::bound(&[a + step, b, 0.0])).unwrap().to_f64();
        prop_assert!(hi >= lo - 1e-15);
        prop_assert!((0.0..=1.0).contains(&lo));
    }
}
