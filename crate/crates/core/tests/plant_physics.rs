use cerebellar_pam::plant::{pam_force, Plant, PlantState, ValveCommand, ValveMode};
use proptest::prelude::*;

const MODES: [ValveMode; 3] = [ValveMode::Fill, ValveMode::Hold, ValveMode::Vent];

fn mirror(s: &PlantState) -> PlantState {
    PlantState {
        theta: -s.theta,
        omega: -s.omega,
        p_ag: s.p_ant,
        p_ant: s.p_ag,
        t: s.t,
    }
}

fn state() -> impl Strategy<Value = PlantState> {
    (-0.5f64..0.5, -2.0f64..2.0, 0.0f64..500e3, 0.0f64..500e3).prop_map(|(theta, omega, p_ag, p_ant)| PlantState {
        theta,
        omega,
        p_ag,
        p_ant,
        t: 0.0,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mirrored_state_and_command_evolve_mirrored(s in state(), cmds in proptest::collection::vec((0usize..3, 0usize..3), 1..50)) {
        let plant = Plant::default();
        let (mut a, mut b) = (s, mirror(&s));
        for (i, j) in cmds {
            a = plant.step(&a, ValveCommand { agonist: MODES[i], antagonist: MODES[j] }, 1e-3, 10, 0.0).unwrap();
            b = plant.step(&b, ValveCommand { agonist: MODES[j], antagonist: MODES[i] }, 1e-3, 10, 0.0).unwrap();
            prop_assert_eq!(b, mirror(&a));
        }
    }

    #[test]
    fn pressures_stay_in_range_and_angle_inside_stops(s in state(), cmds in proptest::collection::vec((0usize..3, 0usize..3), 1..200)) {
        let plant = Plant::default();
        let p_max = plant.pneumatic.p_max();
        let mut x = s;
        for (i, j) in cmds {
            x = plant.step(&x, ValveCommand { agonist: MODES[i], antagonist: MODES[j] }, 1e-3, 10, 0.0).unwrap();
            prop_assert!((0.0..=p_max).contains(&x.p_ag) && (0.0..=p_max).contains(&x.p_ant));
            prop_assert!(x.theta.abs() <= plant.arm.theta_max);
        }
    }

    #[test]
    fn energy_does_not_grow_on_hold(theta in -0.4f64..0.4, omega in -1.0f64..1.0, p in 100e3f64..400e3) {
        let plant = Plant::default();
        let mut s = PlantState { theta, omega, ..PlantState::at_rest(p) };
        let e0 = plant.energy(&s).unwrap();
        for _ in 0..1000 {
            s = plant.step(&s, ValveCommand::HOLD, 1e-3, 10, 0.0).unwrap();
            let e = plant.energy(&s).unwrap();
            prop_assert!(e <= e0 + 1e-3 * s.t, "energy {e} after {} s from {e0}", s.t);
        }
    }

    #[test]
    fn force_is_monotone_in_pressure(p1 in 0.0f64..500e3, dp in 0.0f64..100e3, eps in 0.0f64..0.3) {
        let pam = Plant::default().pam;
        prop_assert!(pam_force(p1 + dp, eps, &pam, 0.0).unwrap() >= pam_force(p1, eps, &pam, 0.0).unwrap());
    }
}

#[test]
fn halving_the_substep_barely_moves_a_free_swing() {
    let plant = Plant::default();
    let swing = |n: usize| {
        let mut s = PlantState {
            theta: 0.3,
            ..PlantState::at_rest(150e3)
        };
        for _ in 0..700 {
            s = plant.step(&s, ValveCommand::HOLD, 1e-3, n, 0.0).unwrap();
        }
        s
    };
    let (a, b, c) = (swing(10), swing(20), swing(40));
    let d1 = (a.theta - b.theta).abs();
    let d2 = (b.theta - c.theta).abs();
    assert!(d1 / b.theta.abs() < 5e-3, "{a:?} {b:?}");
    // first-order method: halving the step roughly halves the error
    assert!(d2 < 0.75 * d1, "{d1} {d2}");
}
