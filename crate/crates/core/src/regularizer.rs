//! Certified midpoint-quadrature error bound R(θ) and its building blocks.
//!
//! R¹ is a global bound on |û⁽ⁿ⁾| from the weights and activation sup norms;
//! R² localizes it to one midpoint interval through Taylor's theorem and the
//! Leibniz rule for the cutoff product; R³ is a local Lipschitz bound on the
//! Ritz volume integrand; R = (δ²/4) Σ_j R³ dominates |F_R − F̂_R| for any
//! parameter values. Usable both as a training penalty and as an overfitting
//! metric.

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::losses::ritz_loss;
use crate::network::{binomial, eval_u, CutoffPoly, NetworkParams};
use crate::problems::ProblemSpec;
use crate::quadrature::{midpoint_rule, QuadratureRule};

/// Uniform midpoint partition plus the problem constants the bound consumes.
pub struct RegContext<'a> {
    pub cutoff: &'a CutoffPoly,
    pub problem: &'a ProblemSpec,
    n: usize,
    delta: f64,
    midpoints: Vec<f64>,
    f_sup: f64,
    f_prime_sup: f64,
}

impl<'a> RegContext<'a> {
    /// Rejects problems with unbounded ‖f‖∞ or ‖f′‖∞ (e.g. mp1): the
    /// Lipschitz bounds the regularizer needs do not exist for them.
    pub fn new(problem: &'a ProblemSpec, cutoff: &'a CutoffPoly, n: usize) -> Result<Self> {
        let (f_sup, f_prime_sup) = match (problem.f_sup, problem.f_prime_sup) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::UnboundedSourceData {
                    problem: problem.name.to_string(),
                })
            }
        };
        if n == 0 {
            return Err(Error::EmptyRule);
        }
        let (a, b) = problem.domain;
        let delta = (b - a) / n as f64;
        let midpoints = (1..=n).map(|j| a + delta * (j as f64 - 0.5)).collect();
        Ok(RegContext {
            cutoff,
            problem,
            n,
            delta,
            midpoints,
            f_sup,
            f_prime_sup,
        })
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Midpoint x_j of interval I_j (0-based j).
    pub fn midpoint(&self, j: usize) -> f64 {
        self.midpoints[j]
    }

    /// The midpoint rule the regularized loss integrates with.
    pub fn rule(&self) -> QuadratureRule {
        let (a, b) = self.problem.domain;
        midpoint_rule(a, b, self.n).expect("validated at construction")
    }
}

/// Global bound on |û⁽ⁿ⁾|: n = 0 gives |b¹| + ‖σ‖∞ Σ|A¹ᵢ|; n ≥ 1 gives
/// ‖σ⁽ⁿ⁾‖∞ Σ|A¹ᵢ||A⁰ᵢ|ⁿ.
pub fn r1<S: Scalar>(params: &NetworkParams<S>, n: usize) -> S {
    assert!(n <= 3, "derivative order {n} out of range");
    let sup = params.activation.sup_norm(n);
    let mut acc = if n == 0 {
        params.b1.abs()
    } else {
        params.b1 * 0.0
    };
    for i in 0..params.neurons() {
        let mut term = params.a1[i].abs();
        for _ in 0..n {
            term = term * params.a0[i].abs();
        }
        acc = acc + term * sup;
    }
    acc
}

/// Local bound on |u⁽ⁿ⁾_NN| over interval I_j:
/// |u⁽ⁿ⁾_NN(x_j)| + (δ/2) Σ_{k=0}^{n+1} C(n+1,k) R¹(θ;k) ‖φ⁽ⁿ⁺¹⁻ᵏ⁾‖∞.
pub fn r2<S: Scalar>(params: &NetworkParams<S>, ctx: &RegContext<'_>, j: usize, n: usize) -> S {
    assert!(n <= 2, "order {n} out of range (needs R1 up to order n+1)");
    let xj = ctx.midpoint(j);
    let mut acc = eval_u(params, ctx.cutoff, xj, n).abs();
    for k in 0..=(n + 1) {
        let coeff = 0.5 * ctx.delta * binomial(n + 1, k) * ctx.cutoff.sup_norm(n + 1 - k);
        if coeff != 0.0 {
            acc = acc + r1(params, k) * coeff;
        }
    }
    acc
}

/// Local Lipschitz bound on the Ritz volume integrand over I_j:
/// R²(·,1)R²(·,2) + ‖f‖∞R²(·,1) + ‖f′‖∞R²(·,0).
pub fn r3<S: Scalar>(params: &NetworkParams<S>, ctx: &RegContext<'_>, j: usize) -> S {
    let b1 = r2(params, ctx, j, 1);
    let b2 = r2(params, ctx, j, 2);
    let b0 = r2(params, ctx, j, 0);
    b1 * b2 + b1 * ctx.f_sup + b0 * ctx.f_prime_sup
}

/// R(θ) = (δ²/4) Σ_j R³(θ;I_j) ≥ |F_R(u_NN) − F̂_R(u_NN)|.
pub fn r_total<S: Scalar>(params: &NetworkParams<S>, ctx: &RegContext<'_>) -> S {
    let mut acc = params.b1 * 0.0;
    for j in 0..ctx.intervals() {
        acc = acc + r3(params, ctx, j);
    }
    acc * (0.25 * ctx.delta * ctx.delta)
}

/// L(θ) = F̂_R(u_NN) + R(θ) with F̂_R on the context's midpoint rule.
pub fn regularized_loss<S: Scalar>(params: &NetworkParams<S>, ctx: &RegContext<'_>) -> Result<S> {
    let rule = ctx.rule();
    let f_hat = ritz_loss(params, ctx.cutoff, ctx.problem, &rule)?;
    Ok(f_hat + r_total(params, ctx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{grad_theta, init_params, ActivationKind};
    use crate::problems::{model_problem_1, model_problem_2};
    use crate::quadrature::{gauss_rule, integrate, Mesh};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_network() -> NetworkParams {
        NetworkParams::new(vec![0.0], vec![0.0], vec![0.0], 0.0, ActivationKind::Sigmoid).unwrap()
    }

    fn random_network(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> NetworkParams {
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..m).map(|_| rng.gen_range(-scale..=scale)).collect()
        };
        let a0 = draw(rng);
        let b0 = draw(rng);
        let a1 = draw(rng);
        let b1 = rng.gen_range(-scale..=scale);
        NetworkParams::new(a0, b0, a1, b1, ActivationKind::Tanh).unwrap()
    }

    #[test]
    fn rejects_singular_problem() {
        let p = model_problem_1();
        let cutoff = p.cutoff();
        assert!(matches!(
            RegContext::new(&p, &cutoff, 50),
            Err(Error::UnboundedSourceData { .. })
        ));
    }

    #[test]
    fn r1_hand_values() {
        let zero = zero_network();
        for n in 0..=3 {
            assert_eq!(r1(&zero, n), 0.0);
        }
        let p =
            NetworkParams::new(vec![2.0], vec![0.0], vec![1.0], 0.0, ActivationKind::Sigmoid)
                .unwrap();
        // 1 * 2 * ‖σ'‖∞ = 0.5
        assert!((r1(&p, 1) - 0.5).abs() < 1e-15);
        let q =
            NetworkParams::new(vec![2.0], vec![0.0], vec![3.0], 1.0, ActivationKind::Sigmoid)
                .unwrap();
        // |b1| + 3·‖σ‖∞ = 4
        assert!((r1(&q, 0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn r2_zero_network_and_dominance() {
        let p = model_problem_2();
        let cutoff = p.cutoff();
        let ctx = RegContext::new(&p, &cutoff, 50).unwrap();
        let zero = zero_network();
        for j in [0, 10, 49] {
            for n in 0..=2 {
                assert_eq!(r2(&zero, &ctx, j, n), 0.0);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let net = random_network(&mut rng, 6, 1.0);
            let j = rng.gen_range(0..50);
            for n in 0..=2usize {
                let bound: f64 = r2(&net, &ctx, j, n);
                let point: f64 = eval_u(&net, &cutoff, ctx.midpoint(j), n);
                assert!(bound >= point.abs());
            }
        }
    }

    #[test]
    fn r2_hand_case_dominates_interval_sup() {
        // M=1, A1=[1], A0=[1], b0=[0], b1=0, sigmoid, φ(x)=x on [0,10], N=50.
        let net =
            NetworkParams::new(vec![1.0], vec![0.0], vec![1.0], 0.0, ActivationKind::Sigmoid)
                .unwrap();
        let p = model_problem_2();
        let cutoff = p.cutoff();
        let ctx = RegContext::new(&p, &cutoff, 50).unwrap();
        let j = 0;
        // Hand evaluation of the n=0 formula:
        // |u(x_0)| + (δ/2)[ C(1,0) R1(0) ‖φ'‖∞ + C(1,1) R1(1) ‖φ‖∞ ].
        let x0 = ctx.midpoint(j);
        let u0: f64 = eval_u(&net, &cutoff, x0, 0);
        let r1_0 = 0.0 + 1.0 * 1.0; // |b1| + ‖σ‖∞ Σ|A1|
        let r1_1 = 0.25 * 1.0 * 1.0; // ‖σ'‖∞ |A1||A0|
        let expected = u0.abs() + 0.1 * (r1_0 * 1.0 + r1_1 * 10.0);
        let got: f64 = r2(&net, &ctx, j, 0);
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");

        // Must dominate the dense-grid sup of |u_NN| over I_0.
        let mut sup = 0.0f64;
        for i in 0..=1000 {
            let x = ctx.delta() * i as f64 / 1000.0;
            let v: f64 = eval_u(&net, &cutoff, x, 0);
            sup = sup.max(v.abs());
        }
        assert!(got >= sup);
    }

    #[test]
    fn r3_dominates_integrand_derivative() {
        let p = model_problem_2();
        let cutoff = p.cutoff();
        let ctx = RegContext::new(&p, &cutoff, 50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let net = random_network(&mut rng, 6, 1.0);
            let j = rng.gen_range(0..50);
            let bound: f64 = r3(&net, &ctx, j);
            for _ in 0..100 {
                let x = ctx.midpoint(j) + ctx.delta() * rng.gen_range(-0.5..0.5);
                // d/dx(½u'² − fu) = u'u'' − f'u − fu'
                let du: f64 = eval_u(&net, &cutoff, x, 1);
                let ddu: f64 = eval_u(&net, &cutoff, x, 2);
                let u: f64 = eval_u(&net, &cutoff, x, 0);
                let deriv = du * ddu - (p.f_prime)(x) * u - (p.f)(x) * du;
                assert!(
                    bound + 1e-12 >= deriv.abs(),
                    "R3 {bound} < |{deriv}| at x={x}"
                );
            }
        }
    }

    #[test]
    fn r3_reduces_without_source() {
        let ls0 = crate::problems::ls_example_problem();
        let cutoff = ls0.cutoff();
        let ctx = RegContext::new(&ls0, &cutoff, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = random_network(&mut rng, 4, 1.0);
        let b1: f64 = r2(&net, &ctx, 3, 1);
        let b2: f64 = r2(&net, &ctx, 3, 2);
        let total: f64 = r3(&net, &ctx, 3);
        assert!((total - b1 * b2).abs() < 1e-12);
    }

    #[test]
    fn r_total_zero_network_and_nonnegativity() {
        let p = model_problem_2();
        let cutoff = p.cutoff();
        let ctx = RegContext::new(&p, &cutoff, 50).unwrap();
        assert_eq!(r_total(&zero_network(), &ctx), 0.0);
        let l: f64 = regularized_loss(&zero_network(), &ctx).unwrap();
        assert_eq!(l, 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let net = random_network(&mut rng, 6, 2.0);
            let r: f64 = r_total(&net, &ctx);
            assert!(r >= 0.0);
            let l: f64 = regularized_loss(&net, &ctx).unwrap();
            let f_hat: f64 = ritz_loss(&net, &cutoff, &p, &ctx.rule()).unwrap();
            assert!(l >= f_hat - 1e-12);
        }
    }

    /// Oracle value of the Ritz energy: 10^4-element order-5 composite Gauss.
    fn oracle_energy(net: &NetworkParams, p: &ProblemSpec, cutoff: &CutoffPoly) -> f64 {
        let (a, b) = p.domain;
        let mesh = Mesh::uniform(a, b, 10_000).unwrap();
        let rule = gauss_rule(&mesh, 5).unwrap();
        let volume = integrate(&rule, |x| {
            let u: f64 = eval_u(net, cutoff, x, 0);
            let du: f64 = eval_u(net, cutoff, x, 1);
            0.5 * (p.sigma)(x) * du * du - (p.f)(x) * u
        })
        .unwrap();
        let boundary: f64 = p
            .neumann_data
            .iter()
            .map(|&(x, g)| {
                let u: f64 = eval_u(net, cutoff, x, 0);
                g * u
            })
            .sum();
        volume - boundary
    }

    #[test]
    fn certified_bound_holds_across_scales() {
        let p = model_problem_2();
        let cutoff = p.cutoff();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for &n in &[20usize, 50] {
            let ctx = RegContext::new(&p, &cutoff, n).unwrap();
            let rule = ctx.rule();
            for &scale in &[0.1, 1.0, 5.0] {
                for _ in 0..56 {
                    let net = random_network(&mut rng, 10, scale);
                    let f_exact = oracle_energy(&net, &p, &cutoff);
                    let f_hat: f64 = ritz_loss(&net, &cutoff, &p, &rule).unwrap();
                    let r: f64 = r_total(&net, &ctx);
                    assert!(
                        (f_exact - f_hat).abs() <= r + 1e-9,
                        "N={n} scale={scale}: |{f_exact} - {f_hat}| > {r}"
                    );
                }
            }
        }
    }

    #[test]
    fn bound_scales_roughly_inverse_in_n() {
        let p = model_problem_2();
        let cutoff = p.cutoff();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let net = random_network(&mut rng, 10, 1.0);
        let ns = [20usize, 40, 80, 160];
        let rs: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let ctx = RegContext::new(&p, &cutoff, n).unwrap();
                r_total(&net, &ctx)
            })
            .collect();
        // R = (δ²/4) Σ_j R³ with Σ_j R³ between O(1) and O(N): the point
        // terms contribute O(N) (asymptotic rate 1/N) while the δ-scaled
        // Taylor corrections contribute O(1) (rate 1/N²). At these N the
        // observed slope lands between the two regimes; require at least
        // first-order decay and no more than second-order.
        let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = rs.iter().map(|&r| r.ln()).collect();
        let xm = xs.iter().sum::<f64>() / xs.len() as f64;
        let ym = ys.iter().sum::<f64>() / ys.len() as f64;
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - xm) * (y - ym))
            .sum::<f64>()
            / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
        assert!(
            (-2.3..=-0.9).contains(&slope),
            "log-log slope {slope} outside [-2.3, -0.9]"
        );
        for w in rs.windows(2) {
            let c = w[1] / w[0];
            assert!(c < 1.0, "R not decreasing with N: {rs:?}");
        }
    }

    #[test]
    fn regularized_loss_gradient_matches_finite_differences() {
        let p = model_problem_2();
        let cutoff = p.cutoff();
        let ctx = RegContext::new(&p, &cutoff, 20).unwrap();
        let net = init_params(4, ActivationKind::Tanh, 123).unwrap();
        let loss = |q: &NetworkParams| -> f64 { regularized_loss(q, &ctx).unwrap() };
        let (val, grad) = grad_theta(&net, |q| regularized_loss(q, &ctx).unwrap());
        assert!((val - loss(&net)).abs() < 1e-12);
        let theta = net.flatten();
        let h = 1e-6;
        for i in 0..theta.len() {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[i] += h;
            tm[i] -= h;
            let fd = (loss(&NetworkParams::unflatten(&tp, 4, net.activation).unwrap())
                - loss(&NetworkParams::unflatten(&tm, 4, net.activation).unwrap()))
                / (2.0 * h);
            assert!(
                (grad[i] - fd).abs() < 1e-4 * (1.0 + fd.abs()),
                "component {i}: ad={} fd={fd}",
                grad[i]
            );
        }
    }
}
