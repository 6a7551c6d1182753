use capillary_ic::ale::{solve_domain_velocity, surface_vertical_velocity};
use capillary_ic::assembly::bottom_flux;
use capillary_ic::control::{HistoryRow, RunHistory};
use capillary_ic::io::{history_csv, parse_history_csv, RunConfig};
use capillary_ic::mesh::{AxiMesh, BoundaryTag};
use capillary_ic::observables::transient_time;
use capillary_ic::stepper::{step, FlowState, Slab};
use capillary_ic::{NumParams, PhysParams, VectorFieldP1};
use proptest::prelude::*;

fn config() -> impl Strategy<Value = RunConfig> {
    (
        (1e-7..1e-5f64, 1e-6..1e-3f64, 1.0..1e4f64, 10.0..170.0f64, -0.1..0.1f64),
        (1e-4..1e-2f64, 0.0..1.0f64, 2..40usize, 2..40usize, 0.0..1e9f64, 0.0..1.0f64),
        (0.01..2.0f64, 1e-4..1e-2f64, 1e-5..1e-2f64, 0..50usize, any::<bool>(), proptest::option::of(1e-5..1e-2f64)),
    )
        .prop_map(
            |(
                (nu, gamma, chi, theta, p_bar),
                (dt, cs, n1, n3, alpha, lambda),
                (t_final, radius, h, snap, controlled, z_inf),
            )| {
                RunConfig {
                    nu,
                    gamma,
                    chi,
                    theta_s_deg: theta,
                    p_bar,
                    g: 9.81,
                    dt,
                    cs,
                    n1,
                    n3,
                    alpha,
                    lambda,
                    t_final,
                    radius,
                    init_height: h,
                    snapshot_every: snap,
                    controlled,
                    output_dir: format!("runs/{snap}").into(),
                    z_inf,
                }
            },
        )
}

fn history(zs: Vec<f64>) -> RunHistory {
    RunHistory {
        rows: zs
            .into_iter()
            .enumerate()
            .map(|(i, z)| HistoryRow {
                t: i as f64 * 0.002,
                z_cl: z,
                zeta: 0.0,
                j_increment: 0.0,
                grad: 0.0,
                u_max: 0.0,
            })
            .collect(),
    }
}

proptest! {
    #[test]
    fn config_round_trips(cfg in config()) {
        let text = cfg.serialize();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(RunConfig::parse(&back.serialize()).unwrap(), cfg);
    }

    #[test]
    fn transient_time_is_monotone_in_tol(
        zs in proptest::collection::vec(0.5..1.5f64, 1..60),
        a in 1e-4..0.6f64,
        b in 1e-4..0.6f64,
    ) {
        let h = history(zs);
        let (small, large) = (a.min(b), a.max(b));
        match (transient_time(&h, 1.0, small), transient_time(&h, 1.0, large)) {
            (Some(ts), Some(tl)) => prop_assert!(tl <= ts),
            (None, _) => {}
            (Some(_), None) => prop_assert!(false, "wider band not attained"),
        }
    }

    #[test]
    fn csv_round_trips_bit_for_bit(
        rows in proptest::collection::vec(proptest::array::uniform6(-1e6..1e6f64), 0..20),
    ) {
        let h = RunHistory {
            rows: rows
                .into_iter()
                .map(|v| HistoryRow { t: v[0], z_cl: v[1], zeta: v[2], j_increment: v[3], grad: v[4], u_max: v[5] })
                .collect(),
        };
        let text = history_csv(&h);
        prop_assert!(!text.contains('\r') && !text.contains('E'));
        prop_assert_eq!(parse_history_csv(&text).unwrap(), h);
    }

    #[test]
    fn structured_meshes_are_valid(radius in 1e-4..1.0f64, height in 1e-5..1.0f64, n1 in 2..12usize, n3 in 2..12usize) {
        let m = AxiMesh::structured(radius, height, n1, n3).unwrap();
        prop_assert_eq!(m.num_nodes(), (n1 + 1) * (n3 + 1));
        prop_assert_eq!(m.triangles().len(), 2 * n1 * n3);
        prop_assert!((m.volume() / (0.5 * radius * radius * height) - 1.0).abs() < 1e-12);
        prop_assert!((m.bottom_measure() / (0.5 * radius * radius) - 1.0).abs() < 1e-12);
        prop_assert_eq!(m.contact_node(), m.num_nodes() - 1);
        for (i, p) in m.nodes().iter().enumerate() {
            if m.has_tag(i, BoundaryTag::Axis) {
                prop_assert_eq!(p[0], 0.0);
            }
            if m.has_tag(i, BoundaryTag::Wall) {
                prop_assert_eq!(p[0], radius);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extension_obeys_the_maximum_principle(
        coeffs in proptest::array::uniform4(-1.0..1.0f64),
        n1 in 2..8usize,
        n3 in 2..8usize,
    ) {
        let mesh = AxiMesh::structured(1.0, 0.5, n1, n3).unwrap();
        let u = VectorFieldP1::from_fn(mesh.num_nodes(), |i| {
            let [r, z] = mesh.nodes()[i];
            let ur = if mesh.has_tag(i, BoundaryTag::Wall) || mesh.has_tag(i, BoundaryTag::Axis) {
                0.0
            } else {
                coeffs[0] * r * (1.0 - r)
            };
            [ur, coeffs[1] + coeffs[2] * (4.0 * r).sin() + coeffs[3] * z]
        });
        // bent surface so the radial flow contributes to the normal flux
        let lifted = mesh
            .displace(
                &VectorFieldP1::from_fn(mesh.num_nodes(), |i| {
                    let [r, z] = mesh.nodes()[i];
                    [0.0, 0.2 * z * (1.0 - r * r)]
                }),
                1.0,
            )
            .unwrap();
        let data = surface_vertical_velocity(&lifted, &u).unwrap();
        let lo = data.iter().map(|d| d.1).fold(0.0f64, f64::min);
        let hi = data.iter().map(|d| d.1).fold(0.0f64, f64::max);
        let v = solve_domain_velocity(&lifted, &u).unwrap();
        for (i, x) in v.field.values().iter().enumerate() {
            prop_assert_eq!(x[0], 0.0);
            prop_assert!(x[1] >= lo - 1e-12 && x[1] <= hi + 1e-12, "node {}: {} not in [{}, {}]", i, x[1], lo, hi);
            if lifted.has_tag(i, BoundaryTag::Bottom) {
                prop_assert_eq!(x[1], 0.0);
            }
        }
    }
}

#[test]
fn volume_change_matches_bottom_inflow() {
    let (phys, num) = (PhysParams::test_case_1(), NumParams::test_case_1());
    let mut state = FlowState::at_rest(5e-4, 5e-5, &num).unwrap();
    for n in 0..20 {
        let slab = Slab::prepare(&state, &num).unwrap();
        let dv = slab.mesh_new.volume() - slab.mesh_old.volume();
        let inflow = num.dt * bottom_flux(&slab.mesh_old, &slab.u_old);
        let scale = inflow.abs().max(1e-30);
        assert!((dv - inflow).abs() <= 1e-6 * scale, "step {n}: dV {dv:e}, dt * inflow {inflow:e}");
        state = slab.solve_state(0.0, &phys, &num).unwrap().0;
    }
}

#[test]
fn first_five_steps_follow_the_reference_rise() {
    let (phys, num) = (PhysParams::test_case_1(), NumParams::test_case_1());
    let mut state = FlowState::at_rest(5e-4, 5e-5, &num).unwrap();
    for _ in 0..5 {
        state = step(&state, 0.0, &phys, &num).unwrap().0;
    }
    let z = state.mesh.contact_line_height();
    assert!((state.t - 0.01).abs() < 1e-12);
    assert!((z / 1.608e-4 - 1.0).abs() <= 0.05, "Z_CL(0.01) = {z:e}");
}
