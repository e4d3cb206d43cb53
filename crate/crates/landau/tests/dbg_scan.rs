use landau::chain::build_chain;
use landau::cmatrix::CMatrixBundle;
use landau::family;
use landau::rep::fiber_matrix;
use landau::series::PeriodicFn;

fn nearest(v: &PeriodicFn, b: f64, target: f64, n: usize, p: usize) -> f64 {
    let h = fiber_matrix(0.0, v, b, n, p);
    let ev = h.symmetric_eigenvalues();
    ev.iter().cloned().min_by(|a, c| (a - target).abs().partial_cmp(&(c - target).abs()).unwrap()).unwrap()
}

#[test]
fn dbg_stability() {
    let bundle1 = CMatrixBundle::new(1, 1.0, None).unwrap();
    let sol1 = family::iterate_family(0.1, &bundle1, 1e-13, 80).unwrap();
    let chain1 = build_chain(&sol1.v, sol1.b_eff).unwrap();
    let target = 3.0 * chain1.b;
    let perturbed = chain1.v.add(&PeriodicFn::cosine_mode(chain1.v.omega(), 1, 0.01));
    for (label, v) in [("true", &chain1.v), ("pert", &perturbed)] {
        let lams: Vec<f64> = [(40usize, 8usize), (40, 10), (40, 12), (40, 14), (48, 10)]
            .iter().map(|&(n, p)| nearest(v, chain1.b, target, n, p)).collect();
        println!("{label}: {:?}", lams.iter().map(|l| l - target).collect::<Vec<_>>());
        let movement = lams.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - lams.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("{label}: movement across truncations = {:.3e}", movement);
    }
}
