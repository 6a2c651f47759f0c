use pwsync::dynamics::{builtin, FieldKind};
use pwsync::integrator::IntegratorConfig;
use pwsync::matgraph::Laplacian;
use pwsync::network::{MultiplexCoupling, NetworkModel};
use pwsync::sweep::{run_sweep, IcSource, SweepResult, SweepSpec};

fn relay_spec() -> SweepSpec {
    let model = NetworkModel::new(
        builtin(FieldKind::Relay),
        MultiplexCoupling::shared(2, Laplacian::ring_k_nearest(6, 1).unwrap(), 0.0, 0.0),
    )
    .unwrap();
    let ics = IcSource::Box { lo: vec![-2.0; 2], hi: vec![2.0; 2] };
    let mut spec = SweepSpec::new(model, vec![0.0, 0.5, 3.0], vec![0.0, 1.0], ics, 42);
    spec.n_ic = 3;
    spec.integrator = IntegratorConfig::new(20.0).with_dt(5e-3);
    spec
}

/// Split equilibria: five nodes at (1, 0), five at (−1, 0).
pub fn split_ics() -> Vec<f64> {
    (0..10).flat_map(|i| [if i < 5 { 1.0 } else { -1.0 }, 0.0]).collect()
}

#[test]
fn csv_is_identical_across_worker_counts() {
    let spec = relay_spec();
    let one = run_sweep(&spec, Some(1)).unwrap();
    let two = run_sweep(&spec, Some(2)).unwrap();
    let four = run_sweep(&spec, Some(4)).unwrap();
    assert_eq!(one.to_csv_string(), two.to_csv_string());
    assert_eq!(one.to_csv_string(), four.to_csv_string());
    // the uncoupled relay blows up, so the sentinel path is exercised
    assert!(one.diverged(0, 0) > 0);
    assert_eq!(SweepResult::read_csv(one.to_csv_string().as_bytes()).unwrap(), one);
}

#[test]
fn changing_one_gain_leaves_other_cells_alone() {
    let a = relay_spec();
    let mut b = relay_spec();
    b.c_grid[1] = 0.75;
    let ra = run_sweep(&a, Some(1)).unwrap();
    let rb = run_sweep(&b, Some(1)).unwrap();
    for i in [0, 2] {
        for j in 0..2 {
            assert_eq!(ra.cell(i, j), rb.cell(i, j));
            assert_eq!(ra.diverged(i, j), rb.diverged(i, j));
        }
    }
}

#[test]
fn rejects_zero_workers() {
    assert!(run_sweep(&relay_spec(), Some(0)).is_err());
}

#[test]
fn sprott_pair_far_above_thresholds() {
    let model = NetworkModel::new(
        builtin(FieldKind::Sprott),
        MultiplexCoupling::shared(3, Laplacian::path(2).unwrap(), 0.0, 0.0),
    )
    .unwrap();
    let mut spec = SweepSpec::new(model, vec![5.0 * 0.8523], vec![2.0], IcSource::sprott_box(), 3);
    spec.integrator = IntegratorConfig::new(100.0);
    let r = run_sweep(&spec, None).unwrap();
    assert!(r.cell(0, 0).unwrap() < 1e-3, "{:?}", r.cell(0, 0));
}

#[test]
fn bistable_sign_layer_enlarges_synchronized_region() {
    let lap = Laplacian::path(10).unwrap();
    let model =
        NetworkModel::new(builtin(FieldKind::Bistable), MultiplexCoupling::shared(2, lap, 0.0, 0.0)).unwrap();
    let mut spec =
        SweepSpec::new(model, vec![0.5, 1.0, 2.0, 5.0, 10.0], vec![0.0, 1.0], IcSource::Explicit(split_ics()), 0);
    spec.n_ic = 1;
    spec.integrator = IntegratorConfig::new(100.0);
    let r = run_sweep(&spec, None).unwrap();
    let synced = |i: usize, j: usize| r.cell(i, j).is_some_and(|v| v < 1e-2);
    let gained = (0..5).filter(|&i| synced(i, 1) && !synced(i, 0)).count();
    let lost = (0..5).filter(|&i| synced(i, 0) && !synced(i, 1)).count();
    assert_eq!(lost, 0);
    assert!(gained >= 1, "cd = 0 row {:?}, cd = 1 row {:?}", (0..5).map(|i| r.cell(i, 0)).collect::<Vec<_>>(), (0..5).map(|i| r.cell(i, 1)).collect::<Vec<_>>());
}
