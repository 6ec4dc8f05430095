use photonet::bornmarkov::bm_table;
use photonet::coefficients::{coefficient_trace, CoefficientEntry};
use photonet::linalg;
use photonet::model::NetworkSpec;
use photonet::pipeline::run_exact;
use photonet::trace::compare;
use photonet::Error;

/// Two coupled resonators; the first leaks into a warm waveguide, the second is driven.
const DIMER: &str = r#"{
  "frequencies": {"dim": 2, "entries": [[[10.0, 0.0], [0.2, 0.05]], [[0.2, -0.05], [10.1, 0.0]]]},
  "drives": [{"target": 1, "waveform": {"monochromatic": {"amplitude": 2.0, "frequency": 10.05, "phase": 0.3}}}],
  "waveguides": [
    {"label": "lead", "coupling": [[1.0, 0.0], [0.0, 0.0]],
     "spectral": {"tightBindingSemicircle": {"center": 9.9, "hopping": 0.3, "couplingRatio": 0.8}},
     "temperature": 2.0},
    {"label": "probe", "coupling": [[0.0, 0.0], [0.6, 0.2]],
     "spectral": {"tabulated": {"frequencies": [9.6, 9.9, 10.3, 10.6], "values": [0.0, 0.4, 0.5, 0.0]}},
     "temperature": 0.0}
  ],
  "initialField": [[0.5, 0.0], [0.0, 0.0]],
  "initialOccupation": [[[0.75, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.1, 0.0]]],
  "grid": {"t0": 0.0, "tEnd": 10.0, "nSteps": 2000, "outputEvery": 2}
}"#;

#[test]
fn dimer_conserves_photons_and_keeps_rho_physical() {
    let spec = NetworkSpec::from_json(DIMER).unwrap();
    let run = run_exact(&spec).unwrap();
    let tr = &run.transport;
    assert!(tr.relative_residual(true) < 1e-3, "{}", tr.relative_residual(true));
    for rho in tr.occupation.chunks(4) {
        assert!(linalg::hermitian_defect(rho, 2) < 1e-12);
        assert!(linalg::hermitian_eigenvalues(rho, 2)[0] > -1e-9);
    }
    let coefficients = coefficient_trace(&spec, &run.propagators).unwrap();
    let regular = coefficients
        .entries
        .iter()
        .filter(|e| matches!(e, CoefficientEntry::Regular(_)))
        .count();
    assert!(regular > 0);
}

#[test]
fn weak_coupling_approaches_born_markov() {
    let deviation = |eta: f64| {
        let text = DIMER_FREE_SINGLE.replace("ETA", &eta.to_string());
        let spec = NetworkSpec::from_json(&text).unwrap();
        let exact = run_exact(&spec).unwrap().transport.to_table("exact");
        let bm = bm_table(&spec).unwrap();
        compare(&exact, &bm).unwrap().into_iter().find(|d| d.column == "n_0").unwrap().l2
    };
    let (strong, weak) = (deviation(0.5), deviation(0.2));
    assert!(weak < 0.75 * strong, "{weak} vs {strong}");
    assert!(weak < 0.02, "{weak}");
}

const DIMER_FREE_SINGLE: &str = r#"{
  "frequencies": {"dim": 1, "entries": [[[10.0, 0.0]]]},
  "drives": [{"target": 0, "waveform": {"monochromatic": {"amplitude": 1.0, "frequency": 9.9}}}],
  "waveguides": [
    {"label": "lead", "coupling": [[1.0, 0.0]],
     "spectral": {"tightBindingSemicircle": {"center": 10.0, "hopping": 0.5, "couplingRatio": ETA}},
     "temperature": 1.0}
  ],
  "grid": {"t0": 0.0, "tEnd": 60.0, "nSteps": 6000, "outputEvery": 10}
}"#;

#[test]
fn born_markov_rejects_networks() {
    let spec = NetworkSpec::from_json(DIMER).unwrap();
    assert!(matches!(bm_table(&spec), Err(Error::Unsupported(_))));
}

#[test]
fn invalid_networks_report_every_violation() {
    let broken = DIMER
        .replace("[0.2, -0.05]", "[0.3, -0.05]")
        .replace("\"temperature\": 0.0", "\"temperature\": -1.0");
    match NetworkSpec::from_json(&broken) {
        Err(Error::Validation(report)) => assert!(report.violations.len() >= 2, "{report}"),
        other => panic!("expected validation failure, got {other:?}"),
    }
}
