use std::sync::Arc;

use approx::assert_relative_eq;
use proptest::prelude::*;

use corequilib::config::RunConfig;
use corequilib::energy::{dilate, energy};
use corequilib::eos::Eos;
use corequilib::field::{CoreRegion, CylGrid, DensityField};
use corequilib::potential::{AxiKernel, Environment, RotationLaw};
use corequilib::solver::{mass_of_lambda, solve_lambda};

/// Composite Simpson in `u = ln t` for `∫_{lo}^{s} f(t) dt`.
fn simpson_log(f: impl Fn(f64) -> f64, lo: f64, s: f64, n: usize) -> f64 {
    let (a, b) = (lo.ln(), s.ln());
    let h = (b - a) / n as f64;
    let g = |u: f64| {
        let t = u.exp();
        f(t) * t
    };
    let mut sum = g(a) + g(b);
    for k in 1..n {
        sum += g(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

#[test]
fn internal_energy_matches_quadrature() {
    for (k, gamma) in [(1.0, 2.0), (0.3, 1.5), (2.5, 5.0 / 3.0)] {
        let eos = Eos::polytrope(k, gamma).unwrap();
        for e in -6..=6 {
            let s = 10f64.powf(e as f64 * 0.5);
            // A(s) = s ∫₀ˢ p(t)/t² dt; the integrand is a power law with a
            // tail below 1e-12·s that is negligible at 1e-8
            let head = k * (1e-12 * s).powf(gamma - 1.0) / (gamma - 1.0);
            let body = simpson_log(|t| k * t.powf(gamma - 2.0), 1e-12 * s, s, 4000);
            let oracle = s * (head + body);
            assert_relative_eq!(eos.internal_energy(s).unwrap(), oracle, max_relative = 1e-8);
        }
    }
}

fn table() -> Eos {
    let density: Vec<f64> = (0..40).map(|i| 10f64.powf(-4.0 + i as f64 * 0.2)).collect();
    let pressure = density
        .iter()
        .map(|&d| 0.7 * d.powf(1.8) + 0.1 * d * d)
        .collect();
    Eos::tabulated(density, pressure).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polytrope_enthalpy_roundtrip(k in 0.05f64..20.0, gamma in 1.34f64..3.5, lh in -8.0f64..4.0) {
        let eos = Eos::polytrope(k, gamma).unwrap();
        let h = 10f64.powf(lh);
        let back = eos.enthalpy(eos.enthalpy_inverse(h).unwrap()).unwrap();
        prop_assert!((back - h).abs() <= 1e-10 * h.max(1.0));
    }

    #[test]
    fn tabulated_enthalpy_roundtrip(f in 0.01f64..0.99) {
        let eos = table();
        let top = eos.enthalpy(3.0e3).unwrap();
        let h = top * f;
        let back = eos.enthalpy(eos.enthalpy_inverse(h).unwrap()).unwrap();
        prop_assert!((back - h).abs() <= 1e-10 * h.max(1.0));
    }

    #[test]
    fn eos_is_monotone(a in -6.0f64..1.5, gap in 1e-6f64..2.0, tab in any::<bool>()) {
        let eos = if tab { table() } else { Eos::polytrope(1.3, 1.7).unwrap() };
        let (s1, s2) = (10f64.powf(a), 10f64.powf(a + gap));
        prop_assert!(eos.pressure(s1).unwrap() < eos.pressure(s2).unwrap());
        prop_assert!(eos.enthalpy(s1).unwrap() < eos.enthalpy(s2).unwrap());
    }

    #[test]
    fn total_mass_is_linear(
        v1 in prop::collection::vec(0.0f64..10.0, 80),
        v2 in prop::collection::vec(0.0f64..10.0, 80),
        a in 0.0f64..5.0,
        b in 0.0f64..5.0,
    ) {
        let g = CylGrid::new(1.0, 2.0, 8, 10).unwrap();
        let f1 = DensityField::unmasked(g, v1.clone()).unwrap();
        let f2 = DensityField::unmasked(g, v2.clone()).unwrap();
        let mix: Vec<f64> = v1.iter().zip(&v2).map(|(x, y)| a * x + b * y).collect();
        let lhs = DensityField::unmasked(g, mix).unwrap().total_mass();
        let rhs = a * f1.total_mass() + b * f2.total_mass();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn masked_cells_stay_zero(v in prop::collection::vec(0.0f64..1.0, 256), t in 1.0f64..1.5) {
        let g = CylGrid::new(1.0, 1.0, 16, 16).unwrap();
        let core = CoreRegion::spheroid(0.3, 0.25, 1.0).unwrap();
        let mask = core.mask(&g);
        // support confined to the inner part so the dilation fits
        let v: Vec<f64> = g.sample(|r, z| r + z.abs()).iter().zip(&v)
            .map(|(d, x)| if *d < 0.6 { x + 0.01 } else { 0.0 }).collect();
        let f = DensityField::new(g, v, mask.clone()).unwrap();
        let outs = [
            f.clone(),
            f.rescale_to_mass(2.0).unwrap(),
            f.with_values(vec![1.0; g.len()]).unwrap(),
            dilate(&f, t).unwrap(),
        ];
        for out in outs {
            for (val, m) in out.values().iter().zip(mask.iter()) {
                if *m {
                    prop_assert_eq!(*val, 0.0);
                }
            }
        }
    }

    #[test]
    fn operator_is_symmetric(
        v1 in prop::collection::vec(0.0f64..1.0, 144),
        v2 in prop::collection::vec(0.0f64..1.0, 144),
    ) {
        let g = CylGrid::new(1.0, 1.5, 12, 12).unwrap();
        let k = AxiKernel::new(g).unwrap();
        let (b1, b2) = (k.apply(&v1).unwrap(), k.apply(&v2).unwrap());
        let inner = |a: &[f64], b: &[f64]| -> f64 {
            (0..g.n_r).map(|i| (0..g.n_z).map(|j| a[g.idx(i, j)] * b[g.idx(i, j)]).sum::<f64>() * g.cell_volume(i)).sum()
        };
        let (x, y) = (inner(&v1, &b2), inner(&b1, &v2));
        prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(y.abs()));
    }

    #[test]
    fn adding_mass_never_lowers_potential(
        v in prop::collection::vec(0.0f64..1.0, 144),
        cell in 0usize..144,
        extra in 1e-3f64..5.0,
    ) {
        let g = CylGrid::new(1.0, 1.0, 12, 12).unwrap();
        let k = AxiKernel::new(g).unwrap();
        let mut more = v.clone();
        more[cell] += extra;
        let (b0, b1) = (k.apply(&v).unwrap(), k.apply(&more).unwrap());
        for (a, b) in b0.iter().zip(&b1) {
            prop_assert!(*b >= *a);
        }
    }

    #[test]
    fn mass_of_lambda_is_monotone(
        phi in prop::collection::vec(-2.0f64..2.0, 100),
        l1 in -3.0f64..3.0,
        dl in 0.0f64..2.0,
    ) {
        let g = CylGrid::new(1.0, 1.0, 10, 10).unwrap();
        let eos = Eos::polytrope(1.0, 2.0).unwrap();
        let mask = vec![false; g.len()];
        let m1 = mass_of_lambda(&phi, l1, &eos, &g, &mask).unwrap();
        let m2 = mass_of_lambda(&phi, l1 + dl, &eos, &g, &mask).unwrap();
        prop_assert!(m2 >= m1);
    }

    #[test]
    fn solve_lambda_hits_target(phi in prop::collection::vec(0.0f64..2.0, 100), mass in 0.01f64..50.0) {
        let g = CylGrid::new(1.0, 1.0, 10, 10).unwrap();
        let eos = Eos::polytrope(2.0, 1.6).unwrap();
        let mask = vec![false; g.len()];
        let l = solve_lambda(&phi, mass, &eos, &g, &mask, (-1.0, 0.0), 1e-10).unwrap();
        let m = mass_of_lambda(&phi, l, &eos, &g, &mask).unwrap();
        prop_assert!((m - mass).abs() <= 1e-10 * mass);
    }

    #[test]
    fn energy_falls_with_rotation_and_core_strength(
        v in prop::collection::vec(0.0f64..1.0, 256),
        w1 in 0.0f64..2.0,
        dw in 0.0f64..2.0,
        mu1 in 0.0f64..10.0,
        dmu in 0.0f64..10.0,
    ) {
        let g = CylGrid::new(1.0, 1.0, 16, 16).unwrap();
        let core = CoreRegion::spheroid(0.2, 0.2, 3.0).unwrap();
        let kernel = Arc::new(AxiKernel::new(g).unwrap());
        let eos = Eos::polytrope(1.0, 2.0).unwrap();
        let f = DensityField::new(g, v, core.mask(&g)).unwrap();
        let env = |w: f64, mu: f64| Environment::new(kernel.clone(), &RotationLaw::constant(w).unwrap(), &core, mu).unwrap();
        let base = energy(&f, &eos, &env(w1, mu1)).unwrap().total;
        let faster = energy(&f, &eos, &env(w1 + dw, mu1)).unwrap().total;
        let stronger = energy(&f, &eos, &env(w1, mu1 + dmu)).unwrap().total;
        let slack = 1e-12 * base.abs().max(1.0);
        prop_assert!(faster <= base + slack);
        prop_assert!(stronger <= base + slack);
    }

    #[test]
    fn dilation_preserves_mass(t in 1.0f64..2.5) {
        let g = CylGrid::new(1.0, 1.0, 32, 32).unwrap();
        let f = corequilib::field::uniform_ball(&g, 0.3, 1.0).unwrap();
        let d = dilate(&f, t).unwrap();
        prop_assert!((d.total_mass() - f.total_mass()).abs() <= 1e-12 * f.total_mass());
    }

    #[test]
    fn effective_config_roundtrips(
        k in 0.1f64..10.0,
        gamma in 1.4f64..3.0,
        n in 8usize..64,
        omega in 0.0f64..3.0,
        mu in 0.0f64..100.0,
        damping in 0.05f64..1.0,
        max_iter in 1usize..1000,
    ) {
        let text = format!(r#"{{
            "eos": {{"kind": "polytrope", "k": {k}, "gamma": {gamma}}},
            "grid": {{"r_max": 2.0, "z_max": 1.5, "n_r": {n}, "n_z": {n}}},
            "core": {{"shape": {{"kind": "spheroid", "a_r": 0.3, "a_z": 0.2}}, "rho_core": 5.0, "mu": {mu}}},
            "rotation": {{"kind": "constant", "omega": {omega}}},
            "solver": {{"mass": 1.0, "damping": {damping}, "max_iter": {max_iter}}}
        }}"#);
        let c = RunConfig::from_json(&text).unwrap();
        let again = RunConfig::from_json(&c.effective_json()).unwrap();
        prop_assert_eq!(&again, &c);
        prop_assert_eq!(again.effective_json(), c.effective_json());
    }
}

#[test]
fn far_field_approaches_point_mass() {
    // elongated blob so the quadrupole term is present
    let g = CylGrid::new(4.0, 4.0, 128, 128).unwrap();
    let k = AxiKernel::new(g).unwrap();
    let f = DensityField::unmasked(
        g,
        g.sample(|r, z| {
            let d = (r / 0.15).powi(2) + (z / 0.3).powi(2);
            if d < 1.0 {
                (1.0 - d).powi(2)
            } else {
                0.0
            }
        }),
    )
    .unwrap();
    let m = f.total_mass();
    let b = k.apply(f.values()).unwrap();
    let mut errors = Vec::new();
    for radius in [1.0, 2.0, 3.5] {
        // along the diagonal
        let (i, j) = g
            .locate(radius / 2f64.sqrt(), radius / 2f64.sqrt())
            .unwrap();
        let x = (g.r(i).powi(2) + g.z(j).powi(2)).sqrt();
        errors.push(((b[g.idx(i, j)] - m / x) / (m / x)).abs());
    }
    assert!(errors[0] < 5e-3, "{errors:?}");
    assert!(errors[1] < errors[0] && errors[2] < errors[1], "{errors:?}");
}
