mod common;

use common::sync_error_oracle;
use proptest::prelude::*;
use pwsync::dynamics::{builtin, eval_field, FieldKind, SignPolicy};
use pwsync::integrator::IntegratorConfig;
use pwsync::matgraph::{Laplacian, Matrix};
use pwsync::network::{assemble, simulate, simulate_metrics, sync_error, MultiplexCoupling, NetworkModel};
use pwsync::seed;
use rand::Rng;

fn random_state(len: usize, s: u64) -> Vec<f64> {
    let mut rng = seed::rng(s);
    (0..len).map(|_| rng.random_range(-3.0..3.0)).collect()
}

fn sprott_network(c: f64, cd: f64) -> NetworkModel {
    let gamma = Matrix::from_rows(&[[1.0, 0.2, 0.0], [0.0, 0.5, -0.3], [0.1, 0.0, 2.0]]).unwrap();
    NetworkModel::new(
        builtin(FieldKind::Sprott),
        MultiplexCoupling {
            c,
            gamma,
            laplacian: Laplacian::ring_k_nearest(10, 3).unwrap(),
            cd,
            gamma_d: Matrix::from_diag(&[1.0, 0.5, 0.0]),
            laplacian_d: Laplacian::erdos_renyi(10, 0.3, 5).unwrap().0,
        },
    )
    .unwrap()
}

fn sprott_pair(c: f64, cd: f64) -> NetworkModel {
    NetworkModel::new(builtin(FieldKind::Sprott), MultiplexCoupling::shared(3, Laplacian::path(2).unwrap(), c, cd))
        .unwrap()
}

#[test]
fn coupling_sum_vanishes_at_random_states() {
    let model = sprott_network(1.3, 0.7);
    let field = assemble(&model, SignPolicy::default()).unwrap();
    for s in 0..100 {
        let x = random_state(model.state_dim(), s);
        let k = field.coupling_term(&x);
        for h in 0..3 {
            let total: f64 = (0..10).map(|i| k[i * 3 + h]).sum();
            assert!(total.abs() <= 1e-10, "state {s}, component {h}: {total:e}");
        }
    }
}

#[test]
fn synchronization_manifold_is_invariant() {
    for kind in [FieldKind::Sprott, FieldKind::Relay, FieldKind::Bistable, FieldKind::PwsOscillator] {
        let node = builtin(kind);
        let n = node.dim();
        let model = NetworkModel::new(
            node,
            MultiplexCoupling::shared(n, Laplacian::ring_k_nearest(8, 2).unwrap(), 0.9, 0.6),
        )
        .unwrap();
        let x0: Vec<f64> = (0..8).flat_map(|_| [0.4, -0.3, 0.2][..n].to_vec()).collect();
        let (traj, metrics) = simulate(&model, &x0, &IntegratorConfig::new(10.0)).unwrap();
        for x in traj.states() {
            for i in 1..8 {
                for h in 0..n {
                    assert!((x[i * n + h] - x[h]).abs() <= 1e-8, "{kind}");
                }
            }
        }
        assert!(metrics.e_s.iter().all(|&e| e <= 1e-10), "{kind}");
    }
}

#[test]
fn uncoupled_network_is_independent_copies() {
    let model = sprott_network(0.0, 0.0);
    let field = assemble(&model, SignPolicy::default()).unwrap();
    let x = random_state(30, 9);
    let dx = field.eval(0.0, &x).unwrap();
    for i in 0..10 {
        let f = eval_field(&model.node, &x[i * 3..i * 3 + 3], 0.0, &SignPolicy::default()).unwrap();
        assert_eq!(&dx[i * 3..i * 3 + 3], f.as_slice());
    }
}

#[test]
fn two_node_reduction() {
    // node 1 receives c Γ (x2 − x1) + c_d Γ_d sign(x2 − x1), node 2 the opposite
    let (c, cd) = (0.7, 0.4);
    let model = sprott_pair(c, cd);
    let field = assemble(&model, SignPolicy::default()).unwrap();
    let x = [0.8, 0.2, 0.2, 0.5, 0.1, 0.4];
    let k = field.coupling_term(&x);
    for h in 0..3 {
        let d = x[3 + h] - x[h];
        let expected = c * d + cd * d.signum();
        assert!((k[h] - expected).abs() < 1e-15);
        assert!((k[3 + h] + expected).abs() < 1e-15);
    }
}

#[test]
fn relabelling_permutes_trajectory() {
    let model = sprott_network(0.8, 0.5);
    let perm = [3, 0, 7, 1, 9, 2, 5, 8, 6, 4];
    let permuted = model.permuted(&perm).unwrap();
    let x0 = random_state(30, 11);
    let mut y0 = vec![0.0; 30];
    for i in 0..10 {
        y0[perm[i] * 3..perm[i] * 3 + 3].copy_from_slice(&x0[i * 3..i * 3 + 3]);
    }
    let cfg = IntegratorConfig::new(2.0);
    let (a, ma) = simulate(&model, &x0, &cfg).unwrap();
    let (b, mb) = simulate(&permuted, &y0, &cfg).unwrap();
    for (xa, xb) in a.states().zip(b.states()) {
        for i in 0..10 {
            for h in 0..3 {
                let (u, v) = (xa[i * 3 + h], xb[perm[i] * 3 + h]);
                assert!((u - v).abs() <= 1e-9 * u.abs().max(1.0), "node {i}: {u} vs {v}");
            }
        }
    }
    for (u, v) in ma.e_s.iter().zip(&mb.e_s) {
        assert!((u - v).abs() <= 1e-9);
    }
}

#[test]
fn relabelling_by_identity_is_bit_identical() {
    let model = sprott_network(0.8, 0.5);
    let same = model.permuted(&(0..10).collect::<Vec<_>>()).unwrap();
    let x0 = random_state(30, 12);
    let cfg = IntegratorConfig::new(5.0);
    assert_eq!(simulate(&model, &x0, &cfg).unwrap(), simulate(&same, &x0, &cfg).unwrap());
}

#[test]
fn stronger_gains_synchronize_the_sprott_pair_better() {
    let x0 = [0.8, 0.2, 0.2, 0.5, 0.1, 0.1];
    let cfg = IntegratorConfig::new(100.0);
    let trailing = |scale: f64| {
        simulate_metrics(&sprott_pair(scale * 0.8523, scale), &x0, &cfg).unwrap().trailing(0.1).unwrap()
    };
    let strong = trailing(1.2);
    let weak = trailing(0.02);
    assert!(strong <= weak, "{strong} vs {weak}");
    assert!(strong < 1e-3);
}

#[test]
fn sync_error_pair_of_opposites() {
    let v = [3.0, -4.0, 12.0];
    let x: Vec<f64> = v.iter().copied().chain(v.iter().map(|a| -a)).collect();
    assert!((sync_error(&x, 3).unwrap() - 13.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn sync_error_matches_direct_computation(x in proptest::collection::vec(-10.0..10.0f64, 9)) {
        let ours = sync_error(&x, 3).unwrap();
        prop_assert!((ours - sync_error_oracle(&x, 3)).abs() <= 1e-12);
    }

    #[test]
    fn coupling_sum_vanishes_for_random_graphs(
        n in 2usize..12,
        graph_seed in any::<u64>(),
        state_seed in any::<u64>(),
        c in 0.0..5.0f64,
        cd in 0.0..5.0f64,
    ) {
        let node = builtin(FieldKind::Relay);
        let lap = Laplacian::erdos_renyi(n, 0.5, graph_seed).unwrap().0;
        let lap_d = Laplacian::erdos_renyi(n, 0.5, graph_seed ^ 1).unwrap().0;
        let model = NetworkModel::new(
            node,
            MultiplexCoupling {
                c,
                gamma: Matrix::from_rows(&[[1.0, -0.4], [0.3, 2.0]]).unwrap(),
                laplacian: lap,
                cd,
                gamma_d: Matrix::from_diag(&[0.5, 1.5]),
                laplacian_d: lap_d,
            },
        )
        .unwrap();
        let field = assemble(&model, SignPolicy::default()).unwrap();
        let x = random_state(2 * n, state_seed);
        let k = field.coupling_term(&x);
        for h in 0..2 {
            let total: f64 = (0..n).map(|i| k[i * 2 + h]).sum();
            prop_assert!(total.abs() <= 1e-10);
        }
    }
}
