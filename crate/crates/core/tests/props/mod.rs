//! Shared property checks used by both the `properties` suite (one test per
//! property) and the `acceptance` suite (criterion 9 runs them all).

use proptest::prelude::*;
use proptest::test_runner::{Config, TestError, TestRunner};
use varquad::losses::ritz_loss;
use varquad::network::{
    eval_raw, eval_u, grad_theta, ActivationKind, CutoffPoly, NetworkParams,
};
use varquad::problems::{ls_example_problem, model_problem_1, model_problem_2};
use varquad::quadrature::{gauss_rule, integrate, Mesh};
use varquad::regularizer::{r1, r2, r3, RegContext};

fn config(cases: u32) -> Config {
    Config {
        cases,
        // Deterministic generation keeps the acceptance gate reproducible.
        rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha,
        ..Config::default()
    }
}

fn run<S, F>(cases: u32, strat: S, f: F) -> Result<(), String>
where
    S: Strategy,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let mut runner = TestRunner::new_with_rng(
        config(cases),
        proptest::test_runner::TestRng::from_seed(
            proptest::test_runner::RngAlgorithm::ChaCha,
            &[7u8; 32],
        ),
    );
    runner.run(&strat, f).map_err(|e| match e {
        TestError::Abort(r) => format!("aborted: {r}"),
        TestError::Fail(r, v) => format!("failed: {r} (input {v:?})"),
    })
}

fn activation_strategy() -> impl Strategy<Value = ActivationKind> {
    prop_oneof![Just(ActivationKind::Sigmoid), Just(ActivationKind::Tanh)]
}

fn params_strategy(
    max_neurons: usize,
    scale: f64,
) -> impl Strategy<Value = NetworkParams> {
    (1..=max_neurons, activation_strategy())
        .prop_flat_map(move |(m, act)| {
            (
                proptest::collection::vec(-scale..scale, 3 * m + 1),
                Just(m),
                Just(act),
            )
        })
        .prop_map(|(theta, m, act)| {
            NetworkParams::unflatten(&theta, m, act).expect("well-formed theta")
        })
}

/// Reverse-mode gradient of the Ritz loss matches central finite differences.
pub fn check_grad_vs_fd(cases: u32) -> Result<(), String> {
    let problem = model_problem_2();
    let cutoff = problem.cutoff();
    let mesh = Mesh::uniform(problem.domain.0, problem.domain.1, 4).expect("mesh");
    let rule = gauss_rule(&mesh, 3).expect("rule");
    run(cases, params_strategy(4, 2.0), move |params| {
        let loss_of = |theta: &[f64]| -> f64 {
            let p = NetworkParams::unflatten(theta, params.neurons(), params.activation)
                .expect("well-formed theta");
            ritz_loss(&p, &cutoff, &problem, &rule).expect("finite loss")
        };
        let (_, grad) = grad_theta(&params, |q| {
            ritz_loss(q, &cutoff, &problem, &rule).expect("finite loss")
        });
        let theta = params.flatten();
        let mut fd = vec![0.0; theta.len()];
        for i in 0..theta.len() {
            let h = 1e-5 * (1.0 + theta[i].abs());
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[i] += h;
            minus[i] -= h;
            fd[i] = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
        }
        let scale = 1.0 + grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for (g, f) in grad.iter().zip(&fd) {
            let rel = (g - f).abs() / scale;
            prop_assert!(
                rel < 1e-5,
                "gradient mismatch: ad {g}, fd {f}, rel {rel}"
            );
        }
        Ok(())
    })
}

/// Composite Gauss rules of order q integrate polynomials of degree ≤ 2q−1
/// exactly (relative error below 1e-12).
pub fn check_gauss_degree_exactness(cases: u32) -> Result<(), String> {
    let strat = (1..=5usize).prop_flat_map(|order| {
        (
            Just(order),
            proptest::collection::vec(-1.0..1.0f64, 2 * order),
            0.0..1.5f64,
            0.1..2.0f64,
            2..=6usize,
        )
    });
    run(cases, strat, |(order, coeffs, a, width, elements)| {
        let b = a + width;
        let mesh = Mesh::uniform(a, b, elements).expect("mesh");
        let rule = gauss_rule(&mesh, order).expect("rule");
        let poly = |x: f64| {
            coeffs
                .iter()
                .rev()
                .fold(0.0, |acc, c| acc * x + c)
        };
        let approx = integrate(&rule, poly).expect("finite");
        // Exact integral from the antiderivative with coefficients c_k/(k+1).
        let anti = |x: f64| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * x.powi(k as i32 + 1) / (k as f64 + 1.0))
                .sum::<f64>()
        };
        let exact = anti(b) - anti(a);
        let magnitude: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.abs() * b.powi(k as i32 + 1))
            .sum::<f64>();
        let err = (approx - exact).abs();
        prop_assert!(
            err < 1e-12 * (1.0 + magnitude),
            "order {order} rule missed degree-{} polynomial: err {err}",
            coeffs.len() - 1
        );
        Ok(())
    })
}

/// The cutoff factorization imposes Dirichlet data exactly for every
/// parameter draw: u_NN vanishes at each Dirichlet node bit-for-bit.
pub fn check_dirichlet_exactness(cases: u32) -> Result<(), String> {
    let problems = [ls_example_problem(), model_problem_1(), model_problem_2()];
    run(
        cases,
        (params_strategy(6, 5.0), 0..problems.len()),
        move |(params, which)| {
            let problem = &problems[which];
            let cutoff = problem.cutoff();
            for &root in cutoff.roots() {
                let u: f64 = eval_u(&params, &cutoff, root, 0);
                prop_assert!(
                    u == 0.0,
                    "u_NN({root}) = {u} on {}, expected exact zero",
                    problem.name
                );
            }
            Ok(())
        },
    )
}

/// R¹ dominates |û⁽ⁿ⁾| globally, R² dominates |u⁽ⁿ⁾| on its interval, and R³
/// dominates the derivative of the Ritz integrand on its interval.
pub fn check_bound_dominance(cases: u32) -> Result<(), String> {
    let problem = model_problem_2();
    let cutoff: CutoffPoly = problem.cutoff();
    let f_val = -2.0; // mp2 source term is constant
    let strat = (
        params_strategy(4, 3.0),
        5..=50usize,
        0.0..1.0f64,
        0.0..1.0f64,
    );
    run(cases, strat, move |(params, n, jt, xt)| {
        let ctx = RegContext::new(&problem, &cutoff, n).expect("bounded data");
        let j = ((jt * n as f64) as usize).min(n - 1);
        let delta = ctx.delta();
        let x = ctx.midpoint(j) + (xt - 0.5) * delta;

        for k in 0..=3 {
            let raw: f64 = eval_raw(&params, x, k).abs();
            let bound: f64 = r1(&params, k);
            prop_assert!(
                raw <= bound * (1.0 + 1e-12) + 1e-12,
                "R1({k}) = {bound} < |u_hat^({k})({x})| = {raw}"
            );
        }
        for k in 0..=2 {
            let full: f64 = eval_u(&params, &cutoff, x, k).abs();
            let bound: f64 = r2(&params, &ctx, j, k);
            prop_assert!(
                full <= bound * (1.0 + 1e-12) + 1e-12,
                "R2(I_{j}, {k}) = {bound} < |u^({k})({x})| = {full}"
            );
        }
        let u: f64 = eval_u(&params, &cutoff, x, 0);
        let du: f64 = eval_u(&params, &cutoff, x, 1);
        let ddu: f64 = eval_u(&params, &cutoff, x, 2);
        // d/dx [½(u′)² − f·u] = u′u″ − f′u − f·u′ with f ≡ −2, f′ ≡ 0.
        let integrand_deriv = (du * ddu - f_val * du - 0.0 * u).abs();
        let bound: f64 = r3(&params, &ctx, j);
        prop_assert!(
            integrand_deriv <= bound * (1.0 + 1e-12) + 1e-12,
            "R3(I_{j}) = {bound} < |(½u′²−fu)′({x})| = {integrand_deriv}"
        );
        Ok(())
    })
}

/// Bisection refinement and global refinement preserve mesh nesting: every
/// breakpoint of the coarse mesh survives, ordering stays strict, and the
/// element count grows exactly as expected.
pub fn check_mesh_nesting(cases: u32) -> Result<(), String> {
    let strat = (
        0.0..5.0f64,
        0.5..10.0f64,
        1..=8usize,
        proptest::collection::vec(0.0..1.0f64, 0..6),
        proptest::bool::ANY,
    );
    run(cases, strat, |(a, width, elements, picks, also_global)| {
        let original = Mesh::uniform(a, a + width, elements).expect("mesh");
        let mut mesh = original.clone();
        for t in &picks {
            let j = ((t * mesh.element_count() as f64) as usize)
                .min(mesh.element_count() - 1);
            mesh = mesh.refine_element(j).expect("valid element index");
        }
        prop_assert_eq!(mesh.element_count(), elements + picks.len());
        for bp in original.breakpoints() {
            prop_assert!(
                mesh.breakpoints().contains(bp),
                "breakpoint {bp} lost after refinement"
            );
        }
        prop_assert!(mesh
            .breakpoints()
            .windows(2)
            .all(|w| w[0] < w[1]));
        if also_global {
            let fine = mesh.global_refine();
            prop_assert_eq!(fine.element_count(), 2 * mesh.element_count());
            for bp in mesh.breakpoints() {
                prop_assert!(fine.breakpoints().contains(bp));
            }
            prop_assert!(fine
                .breakpoints()
                .windows(2)
                .all(|w| w[0] < w[1]));
        }
        Ok(())
    })
}
