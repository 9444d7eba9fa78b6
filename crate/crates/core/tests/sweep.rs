use stokes_eig::config::RunConfig;
use stokes_eig::detsweep::{sweep, RootStatus};
use stokes_eig::reference::annulus_dirichlet_roots;

// Clamped unit disk: eigenvalues are the zeros of J_{n+1}, simple for n = 0
// and double otherwise. Values from standard Bessel zero tables.
const J1_1: f64 = 3.831705970207512;
const J2_1: f64 = 5.135622301840683;

fn run(json: &str) -> stokes_eig::detsweep::SweepResult {
    let cfg = RunConfig::from_json(json).unwrap();
    sweep(&cfg.template().unwrap(), &cfg.panels().unwrap(), &cfg.intervals(), &cfg.sweep_options()).unwrap()
}

#[test]
fn disk_simple_and_double_eigenvalues() {
    let r = run(r#"{"geometry": {"kind": "circle", "radius": 1.0, "panels": 8},
                    "intervals": [[3.7, 3.95], [5.0, 5.3]]}"#);
    assert!(r.all_converged());
    let acc: Vec<_> = r.accepted().collect();

    let simple: Vec<_> = acc.iter().filter(|x| x.interval == 0).collect();
    assert_eq!(simple.len(), 1, "{:?}", acc.iter().map(|x| x.k_root).collect::<Vec<_>>());
    assert!((simple[0].k_root - J1_1).abs() < 1e-9, "{}", simple[0].k_root);
    assert!(!simple[0].possible_double);
    assert!(simple[0].sigma_min.unwrap() < 1e-9);

    let double: Vec<_> = acc.iter().filter(|x| x.interval == 1).collect();
    assert!(!double.is_empty());
    for d in &double {
        assert!((d.k_root - J2_1).abs() < 1e-6, "{}", d.k_root);
        assert!(d.possible_double);
    }
}

#[test]
fn scaled_disk_eigenvalues_scale_inversely() {
    let r = run(r#"{"geometry": {"kind": "circle", "radius": 2.0, "panels": 8},
                    "intervals": [[1.85, 1.98]]}"#);
    let k: Vec<f64> = r.accepted().map(|x| x.k_root).collect();
    assert_eq!(k.len(), 1);
    assert!((k[0] - J1_1 / 2.0).abs() < 1e-9, "{}", k[0]);
}

#[test]
fn annulus_radial_root_matches_reference() {
    let want = annulus_dirichlet_roots(1.0, 1.7, 13.4, 13.6).unwrap().roots[0];
    let r = run(r#"{"geometry": {"kind": "annulus", "r1": 1.0, "r2": 1.7, "n_inner_panels": 4},
                    "formulation": "double_layer", "allow_double_layer_multiply_connected": true,
                    "intervals": [[13.42, 13.55]]}"#);
    let hit = r.accepted().map(|x| x.k_root).find(|k| (k - want).abs() < 1e-9);
    assert!(hit.is_some(), "{:?}", r.accepted().map(|x| x.k_root).collect::<Vec<_>>());
    for rep in &r.reports {
        assert!(rep.status == RootStatus::ComplexDiscarded || rep.error_estimate < 1e-8);
    }
}
