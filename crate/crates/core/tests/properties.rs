use coherent_control::bath::{rabi_coefficient, susceptibility};
use coherent_control::control::{design_rabi, designed_generator};
use coherent_control::linalg::{c, max_abs_diff, ONE};
use coherent_control::steady::steady_state;
use coherent_control::{
    AtomSpec, BathCoefficients, CMatrix, Complex64, ControlTarget, FormFactor, LaserSpec,
    QuadratureSettings, Superoperator,
};
use proptest::prelude::*;

fn complex(scale: f64) -> impl Strategy<Value = Complex64> {
    (-scale..scale, -scale..scale).prop_map(|(re, im)| c(re, im))
}

fn matrix3() -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(complex(1.0), 9).prop_map(|v| CMatrix::from_vec(3, 3, v))
}

fn generator(gammas: [Complex64; 3], rabi: [Complex64; 2]) -> Superoperator {
    let atom = AtomSpec::new(
        &[0.0, 0.6, 2.1],
        &[((1, 0), c(0.3, 0.2)), ((2, 1), ONE), ((2, 0), c(0.5, -0.7))],
    )
    .unwrap();
    let set = atom.transition_operators();
    let lasers = [LaserSpec::rabi(1.5, rabi[0]), LaserSpec::rabi(2.1, rabi[1])];
    let b = BathCoefficients::from_gammas(&set, &gammas, &lasers).unwrap();
    Superoperator::new(set, b).unwrap()
}

fn lambda_bath() -> (coherent_control::TransitionSet, BathCoefficients) {
    let atom = AtomSpec::new(&[0.0, 1.0, 3.0], &[((2, 1), ONE), ((2, 0), c(0.4, 0.9))]).unwrap();
    let set = atom.transition_operators();
    let b = BathCoefficients::from_gammas(&set, &[c(0.8, 0.1), c(1.3, -0.4)], &[]).unwrap();
    (set, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn susceptibility_is_quadratic_in_the_form_factor(s in complex(3.0), omega in 0.3f64..3.0) {
        prop_assume!(s.norm() > 1e-3);
        let quad = QuadratureSettings::default();
        let g = FormFactor::gaussian(c(0.4, -0.1), 1.1).unwrap();
        let base = susceptibility(&g, omega, &quad).unwrap().value;
        let scaled = susceptibility(&g.scaled(s), omega, &quad).unwrap().value;
        let expect = base * s.norm_sqr();
        prop_assert!((scaled - expect).norm() <= 1e-9 * expect.norm().max(1e-12));
    }

    #[test]
    fn field_coefficient_is_conjugate_linear_in_g(
        s in complex(3.0), t in complex(3.0), omega in 0.1f64..4.0,
    ) {
        let g = FormFactor::lorentzian(c(0.2, 0.3), 0.8).unwrap();
        let f = FormFactor::gaussian(c(-0.1, 0.5), 1.7).unwrap();
        let base = rabi_coefficient(&g, &f, omega);
        let lhs = rabi_coefficient(&g.scaled(s), &f.scaled(t), omega);
        let rhs = s.conj() * t * base;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
    }

    #[test]
    fn generator_is_linear(
        a in complex(2.0), b in complex(2.0), x in matrix3(), y in matrix3(),
        g0 in 0.1f64..2.0, g1 in 0.1f64..2.0, g2 in 0.1f64..2.0,
        r0 in complex(1.5), r1 in complex(1.5), t in 0.0f64..10.0,
    ) {
        let l = generator([c(g0, 0.3), c(g1, -0.2), c(g2, 0.1)], [r0, r1]);
        let lhs = l.apply(&(&x * a + &y * b), t).unwrap();
        let rhs = l.apply(&x, t).unwrap() * a + l.apply(&y, t).unwrap() * b;
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn design_ignores_global_phase(
        c0 in complex(1.0), c1 in complex(1.0), phase in 0.0f64..std::f64::consts::TAU,
    ) {
        let n = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
        prop_assume!(n > 1e-2);
        let (set, bath) = lambda_bath();
        let rot = Complex64::from_polar(1.0, phase);
        let state = |c0: Complex64, c1: Complex64| {
            let t = ControlTarget::new(c0 / n, c1 / n, 1.0).unwrap();
            let (r2, r3) = design_rabi(&t);
            let l = designed_generator(r2, r3, &set, &bath).unwrap();
            steady_state(&l).unwrap().states[0].clone()
        };
        prop_assert!(max_abs_diff(&state(c0, c1), &state(c0 * rot, c1 * rot)) < 1e-10);
    }
}
