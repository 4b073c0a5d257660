use rrlab::interface::{run_iteration, IterationConfig, Status, SteklovSystem, Variant};
use rrlab::labcli::{solve_monolithic, xi_norm_error};
use rrlab::mesh::{ProblemSpec, Theta};

fn small() -> ProblemSpec {
    ProblemSpec { nx: 8, ny: 8, n_steps: 6, ..ProblemSpec::desk() }
}

#[test]
fn monolithic_trace_is_the_pr_fixed_point() {
    let spec = small();
    let sys = SteklovSystem::new(&spec).unwrap();
    let reference = solve_monolithic(&spec).unwrap().reference(&sys).unwrap();
    for s in [0.5, 4.0] {
        let next = sys.resolvent(s).unwrap().pr_iterate(&reference.eta).unwrap();
        let diff = sys.h_norm(&next.add_scaled(-1.0, &reference.eta).unwrap());
        assert!(diff <= 1e-12 * sys.h_norm(&reference.eta), "s = {s}: {diff:e}");
        assert!(sys.sp_residual(&reference.eta).unwrap() < 1e-12);
    }
}

#[test]
fn converged_transmission_pair_matches_the_monolithic_solve() {
    for theta in [Theta::Implicit, Theta::CrankNicolson] {
        let spec = ProblemSpec { theta, ..small() };
        let sys = SteklovSystem::new(&spec).unwrap();
        let mono = solve_monolithic(&spec).unwrap();
        let reference = mono.reference(&sys).unwrap();
        let cfg = IterationConfig::new(4.0, 1e-13, 500, Variant::RrPde);
        let run = run_iteration(&sys, &cfg, Some(&reference)).unwrap();
        assert_eq!(run.status, Status::Converged);
        for i in 0..2 {
            assert!(xi_norm_error(&sys.solvers[i], &run.fields[i], &reference.u[i]).unwrap() < 1e-10);
        }
        let glued = mono.glue(&run.fields[0], &run.fields[1]);
        let r = mono.residual(&glued);
        assert!(r < 1e-9, "{theta:?}: {r:e}");
    }
}

#[test]
fn both_variants_terminate_together() {
    let spec = small();
    let sys = SteklovSystem::new(&spec).unwrap();
    let runs: Vec<_> = [Variant::PrInterface, Variant::RrPde]
        .iter()
        .map(|&v| run_iteration(&sys, &IterationConfig::new(2.0, 1e-9, 400, v), None).unwrap())
        .collect();
    assert_eq!(runs[0].iterations(), runs[1].iterations());
    let d = sys.h_norm(&runs[0].eta.add_scaled(-1.0, &runs[1].eta).unwrap());
    assert!(d <= 1e-10 * sys.h_norm(&runs[0].eta));
}

#[test]
fn one_dimensional_problem_converges_to_the_monolithic_solve() {
    let spec = ProblemSpec::interval(16, 8, 1.0);
    let sys = SteklovSystem::new(&spec).unwrap();
    let reference = solve_monolithic(&spec).unwrap().reference(&sys).unwrap();
    let run = run_iteration(&sys, &IterationConfig::new(1.0, 1e-13, 500, Variant::PrInterface), Some(&reference)).unwrap();
    assert_eq!(run.status, Status::Converged);
    let last = run.records.last().unwrap();
    assert!(last.err_x[0] < 1e-10 && last.err_x[1] < 1e-10);
    assert!(run.records.iter().all(|r| r.gap.iter().all(|g| *g >= -1e-14)));
}
