mod common;

use common::{REF, rng, target_run};
use mucilage::diagnostics::{check_positivity, check_quota_threshold, limited_regime_oracle, limited_regime_reports, log_slope};
use mucilage::model::{StateVector, idx};
use mucilage::ode::{IntegrationConfig, integrate};
use mucilage::Error;

fn starved_n() -> (StateVector, mucilage::model::ParameterSet) {
    let mut p = REF;
    p.n_in = 1e-3;
    let mut x0 = StateVector::chemostat_start(&p);
    x0.q_n = 0.0;
    (x0, p)
}

#[test]
fn target_trajectory_passes_invariance_checks() {
    let traj = target_run(50.0, 1.0);
    assert!(check_positivity(&traj, 1e-9).pass);
    assert!(check_quota_threshold(&traj, &REF, 1e-9).pass);
}

#[test]
fn random_parameter_sets_pass_invariance_checks() {
    let mut r = rng(21);
    let x0 = StateVector::chemostat_start(&REF);
    let mut ran = 0;
    for _ in 0..20 {
        let p = common::jittered_params(&mut r, 0.2);
        let Ok(traj) = integrate(&x0, &p, &IntegrationConfig::new(50.0, 1.0)) else { continue };
        ran += 1;
        assert!(check_positivity(&traj, 1e-9).pass);
        assert!(check_quota_threshold(&traj, &p, 1e-9).pass);
    }
    assert!(ran > 0);
}

#[test]
fn nitrogen_starved_culture_follows_closed_forms() {
    let (x0, p) = starved_n();
    let reports = limited_regime_reports(&x0, &p, &IntegrationConfig::new(5.0, 1.0)).unwrap();
    let names: Vec<&str> = reports.iter().map(|r| r.property.as_str()).collect();
    assert!(names.contains(&"decay") && names.contains(&"n_uptake"));
    for r in &reports {
        assert!(r.pass, "{r}");
    }
    let decay = reports.iter().find(|r| r.property == "decay").unwrap();
    assert!(decay.interval.1 >= 5.0 - 1e-9);
}

#[test]
fn carbon_starved_culture_follows_closed_forms() {
    let mut p = REF;
    p.c_in = 1e-3;
    let mut x0 = StateVector::chemostat_start(&p);
    x0.q_c = 0.0;
    let reports = limited_regime_reports(&x0, &p, &IntegrationConfig::new(5.0, 1.0)).unwrap();
    let c = reports.iter().find(|r| r.property == "c_uptake").expect("carbon law checked");
    assert!(c.pass, "{c}");
    assert!(limited_regime_oracle(&x0, &p, &IntegrationConfig::new(5.0, 1.0)).unwrap().pass);
}

#[test]
fn starved_decay_exponent() {
    let (x0, p) = starved_n();
    let traj = integrate(&x0, &p, &IntegrationConfig::new(5.0, 0.1)).unwrap();
    let slope = log_slope(&traj.times, &traj.component(idx::D), 0.0, 5.0).unwrap();
    assert!((slope + (p.a + p.m_d)).abs() < 1e-4, "slope {slope}");
}

#[test]
fn oracle_needs_a_limited_start() {
    let x0 = StateVector::new(15.0, 2000.0, 30.0, 300.0, 0.1, 0.0);
    let err = limited_regime_oracle(&x0, &REF, &IntegrationConfig::new(5.0, 1.0)).unwrap_err();
    assert!(matches!(err, Error::PreconditionNotMet(_)));
}
