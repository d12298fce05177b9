use std::f64::consts::PI;

use aniflow_core::anisotropy::AnisotropyModel;
use aniflow_core::evolve::{run, BcMode, BoundaryCondition, DiagnosticsConfig, FlowState, Integrator, SolverConfig};
use aniflow_core::geometry::{ConvexDomain, Field, Grid, IntervalGrid};
use aniflow_core::translator::{epsilon_scheme, lambda_from_flow, oracle_1d, solve_epsilon, EpsilonConfig};

fn setup(n: usize, bc: &BoundaryCondition) -> (ConvexDomain, Grid) {
    let _ = bc;
    (ConvexDomain::interval(1.0).unwrap(), Grid::Interval(IntervalGrid::new(1.0, n).unwrap()))
}

#[test]
fn oracle_closed_forms() {
    let iso = AnisotropyModel::isotropic(1);
    let contact = BoundaryCondition::constant(BcMode::ContactAngle, PI / 3.0);
    let s = oracle_1d(&iso, &contact, 1.0, 101).unwrap();
    assert!((s.lambda - PI / 6.0).abs() < 1e-10);
    // w' = tan(lambda x): w = -log(cos(lambda x)) / lambda
    for i in 0..101 {
        let x = -1.0 + 0.02 * i as f64;
        let exact = -(s.lambda * x).cos().ln() / s.lambda;
        assert!((s.w.nodes()[i] - exact).abs() < 1e-9, "{i}");
    }
    let neumann = BoundaryCondition::constant(BcMode::Neumann, 0.1);
    let s = oracle_1d(&iso, &neumann, 1.0, 11).unwrap();
    assert!((s.lambda + 0.1f64.atan()).abs() < 1e-10);
    let flat = BoundaryCondition::constant(BcMode::ContactAngle, PI / 2.0);
    let s = oracle_1d(&iso, &flat, 2.0, 11).unwrap();
    assert!(s.lambda.abs() < 1e-15);
    assert!(s.w.nodes().iter().all(|w| w.abs() < 1e-8));
}

#[test]
fn zero_neumann_data_is_an_exact_fixed_point() {
    let iso = AnisotropyModel::isotropic(1);
    let bc = BoundaryCondition::constant(BcMode::Neumann, 0.0);
    let (d, g) = setup(41, &bc);
    let s = solve_epsilon(&iso, &d, &bc, &g, 0.1, &EpsilonConfig::default(), None).unwrap();
    assert_eq!(s.lambda, 0.0);
    assert!(s.w.nodes().iter().all(|w| *w == 0.0));
}

#[test]
fn epsilon_scheme_recovers_the_1d_speed() {
    let iso = AnisotropyModel::isotropic(1);
    let bc = BoundaryCondition::constant(BcMode::ContactAngle, PI / 3.0);
    let (d, g) = setup(101, &bc);
    let s = epsilon_scheme(&iso, &d, &bc, &g, &EpsilonConfig::default()).unwrap();
    assert!((s.lambda - PI / 6.0).abs() < 2e-3 * PI / 6.0, "{}", s.lambda);
    for pair in s.osc_sequence.windows(2) {
        assert!(pair[1] < pair[0]);
    }
    assert!(s.residual < 1e-2);
}

#[test]
fn flow_average_is_independent_of_initial_data() {
    let iso = AnisotropyModel::isotropic(1);
    let bc = BoundaryCondition::constant(BcMode::ContactAngle, PI / 3.0);
    let config = SolverConfig {
        t_end: 40.0,
        translate_tol: 1e-8,
        integrator: Integrator::Rkl1 { stages: 8 },
        ..SolverConfig::default()
    };
    let mut lambdas = Vec::new();
    for init in [|_: f64| 0.0, |x: f64| 0.3 * (3.0 * x).sin()] {
        let (d, g) = setup(81, &bc);
        let field = Field::from_fn(&g, |p| init(p[0]));
        let mut state = FlowState::new(iso.clone(), d, g, bc.clone(), field).unwrap();
        state.project_initial(0.4, 20).unwrap();
        let traj = run(&mut state, &config, &DiagnosticsConfig::default()).unwrap();
        assert!(traj.steady());
        lambdas.push(lambda_from_flow(&traj, &state).unwrap().lambda);
    }
    assert!((lambdas[0] - lambdas[1]).abs() < 1e-4);
    assert!((lambdas[0] - PI / 6.0).abs() < 5e-3);
}

#[test]
fn flow_speed_converges_at_second_order() {
    let bc = BoundaryCondition::constant(BcMode::ContactAngle, PI / 3.0);
    let config = SolverConfig {
        t_end: 40.0,
        translate_tol: 1e-11,
        integrator: Integrator::Rkl1 { stages: 8 },
        ..SolverConfig::default()
    };
    let err: Vec<f64> = [21, 41, 81]
        .iter()
        .map(|&n| {
            let (domain, grid) = setup(n, &bc);
            let field = Field::from_fn(&grid, |p| 0.1 * p[0] * p[0]);
            let mut state = FlowState::new(AnisotropyModel::isotropic(1), domain, grid, bc.clone(), field).unwrap();
            let traj = run(&mut state, &config, &DiagnosticsConfig { enabled: false, ..DiagnosticsConfig::default() }).unwrap();
            (lambda_from_flow(&traj, &state).unwrap().lambda - PI / 6.0).abs()
        })
        .collect();
    for w in err.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.8, "errors {err:?}");
    }
}
