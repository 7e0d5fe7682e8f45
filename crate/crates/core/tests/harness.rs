use pcp_forge::harness::{compose, ledger_stage, verify_reduction, Pass, Status, VerifyConfig};

#[test]
fn every_pass_verifies() {
    let mut stages = Vec::new();
    for pass in Pass::ALL {
        let trials = if pass == Pass::Power { 6 } else { 50 };
        let report = verify_reduction(pass, &VerifyConfig::for_pass(pass, trials, 3)).unwrap();
        assert!(report.passed(), "{}: {}", pass.as_str(), report.to_json());
        assert_eq!(report.completeness.status, Status::Pass, "{}", pass.as_str());
        stages.push(ledger_stage(&report));
    }
    let ledger = compose(stages);
    assert_eq!(ledger.to_json()["stages"].as_array().unwrap().len(), Pass::ALL.len());
}

#[test]
fn reports_are_reproducible() {
    let cfg = VerifyConfig::for_pass(Pass::DegreeReduce, 10, 21);
    let a = verify_reduction(Pass::DegreeReduce, &cfg).unwrap();
    let b = verify_reduction(Pass::DegreeReduce, &cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}
