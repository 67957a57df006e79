//! Invariants checked over randomly generated potentials, packets and momenta.

mod common;

use proptest::prelude::*;

use scatter1d::amplitudes::{
    amplitude_table, branch_q, identity_report, step_amplitudes_closed_form, transfer_amplitudes, BranchSheet,
};
use scatter1d::bound_states::{bound_spectrum, BoundStateSearch};
use scatter1d::evolve::{
    evolve_transmitted_compact, evolve_transmitted_long_form, probability_diagnostics, EvolutionConfig,
    MomentumConfig, MomentumRule, Side, XGrid,
};
use scatter1d::fd_oracle::{evolve_grid, GridConfig};
use scatter1d::numeric::I;
use scatter1d::quadrature::GaussLegendre;
use scatter1d::{PacketSpec, PhysicsParams, PotentialSpec, C64};

use common::{arb_potential, arb_well, unit};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

/// `h^{-1/2} ∫ e^{-ipx/ħ} ψ(x, 0) dx` by brute-force Gauss–Legendre panels.
fn direct_transform(packet: &PacketSpec, params: &PhysicsParams, p: C64) -> C64 {
    let rule = GaussLegendre::new(30);
    let panels = 96;
    let h = (packet.b - packet.a) / panels as f64;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..panels {
        let lo = packet.a + j as f64 * h;
        for (x, w) in rule.mapped(lo, lo + h) {
            acc += w * (-I * p * x / params.hbar).exp() * packet.position_amplitude(params, x);
        }
    }
    acc / params.h().sqrt()
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn unitarity_and_symmetry_identities(spec in arb_potential(), p in 0.02f64..6.0) {
        let params = unit();
        let p0 = spec.threshold_momentum(&params);
        prop_assume!((p - p0).abs() > 1e-3);
        let r = identity_report(&spec, &params, p).unwrap();
        prop_assert!(r.max_residual() < 1e-11, "{:?}", r);
    }

    #[test]
    fn step_transfer_matches_closed_form(v0 in 0.0f64..3.0, re in -5.0f64..5.0, im in -2.0f64..2.0) {
        let params = unit();
        let p = C64::new(re, im);
        let p0 = (2.0 * v0).sqrt();
        let q = branch_q(p, p0, BranchSheet::AboveCut);
        // the closed form has a pole at p + q = 0, only reachable off the physical sheet
        prop_assume!((p + q).norm() > 1e-3 && p.norm() > 1e-3);
        let spec = PotentialSpec::step(v0);
        let a = transfer_amplitudes(&spec, &params, p, BranchSheet::AboveCut).unwrap();
        let b = step_amplitudes_closed_form(v0, &params, p, BranchSheet::AboveCut).unwrap();
        let scale = 1.0 + b.tl.norm().max(b.tr.norm());
        for (u, v) in [(a.tl, b.tl), (a.rl, b.rl), (a.tr, b.tr), (a.rr, b.rr)] {
            prop_assert!((u - v).norm() < 1e-13 * scale, "p = {p}: {u} vs {v}");
        }
    }

    #[test]
    fn amplitude_tables_use_one_medium_consistently(spec in arb_potential(), p in 0.05f64..4.0) {
        let params = unit();
        let table = amplitude_table(&spec, &params, &[p, -p], BranchSheet::AboveCut).unwrap();
        let single = transfer_amplitudes(&spec, &params, C64::new(p, 0.0), BranchSheet::AboveCut).unwrap();
        prop_assert_eq!(table[0], single);
        // conjugation under p -> -p
        prop_assert!((table[1].tl - table[0].tl.conj()).norm() < 1e-11);
    }

    #[test]
    fn packet_transform_matches_quadrature(
        a in -4.0f64..0.0, len in 0.5f64..4.0, boost in -2.0f64..2.0,
        re in -50.0f64..50.0, im in -2.0f64..2.0,
    ) {
        let params = unit();
        let packet = PacketSpec::box_sine(a, a + len, boost);
        let p = C64::new(re, im);
        let got = packet.momentum_amplitude(&params, p);
        let want = direct_transform(&packet, &params, p);
        prop_assert!((got - want).norm() < 1e-10 * (1.0 + want.norm()), "{got} vs {want}");
    }

    #[test]
    fn unboosted_packets_split_evenly(a in -4.0f64..0.0, len in 0.5f64..4.0) {
        let params = unit();
        let packet = PacketSpec::box_sine(a, a + len, 0.0);
        let cut = 1000.0;
        let rule = GaussLegendre::new(20);
        let panels = (cut * len).ceil() as usize;
        let body = scatter1d::quadrature::composite(&rule, &[0.0, cut], panels, |p| {
            packet.momentum_amplitude(&params, C64::new(p, 0.0)).norm_sqr()
        });
        // |ψ~|^2 = (4k^2 / πL) cos^2(pL/2) / (p^2 - k^2)^2; beyond the cut cos^2 averages to 1/2
        let k = std::f64::consts::PI / len;
        let tail = 2.0 * k * k / (std::f64::consts::PI * len) * (1.0 / (3.0 * cut.powi(3)) + 2.0 * k * k / (5.0 * cut.powi(5)));
        prop_assert!((body + tail - 0.5).abs() < 1e-9, "{}", body + tail);
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn bound_state_residues_agree_and_scans_are_stable(spec in arb_well()) {
        let params = unit();
        let base = bound_spectrum(&spec, &params, &BoundStateSearch::default()).unwrap();
        let fine = BoundStateSearch { scan_points: 800, ..BoundStateSearch::default() };
        let doubled = bound_spectrum(&spec, &params, &fine).unwrap();
        prop_assert_eq!(base.states.len(), doubled.states.len());
        for (s, t) in base.states.iter().zip(&doubled.states) {
            prop_assert!((s.gamma - t.gamma).abs() < 1e-10);
            prop_assert!(s.residue_relative_difference() < 1e-6, "gamma {}: {:e}", s.gamma, s.residue_relative_difference());
            prop_assert!((s.energy + s.gamma * s.gamma / (2.0 * params.m)).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_evolution_is_unitary_in_a_closed_box(spec in arb_potential(), boost in -2.0f64..2.0) {
        let params = unit();
        let c = spec.c;
        let packet = PacketSpec::box_sine(c - 3.0, c - 0.5, boost);
        let grid = GridConfig {
            x_min: -12.0, x_max: 12.0, dx: 0.02, dt: 2e-3, absorbing_margin: 0.0, ..GridConfig::default()
        };
        let frames = evolve_grid(&spec, &params, &packet, &grid, &[0.0, 1.0, 2.0]).unwrap();
        for f in &frames {
            prop_assert!((f.norm - frames[0].norm).abs() < 1e-10, "{:e}", f.norm - frames[0].norm);
        }
    }
}

proptest! {
    #![proptest_config(config(6))]

    #[test]
    fn long_and_compact_forms_agree(spec in arb_potential(), boost in 0.0f64..1.5) {
        let params = unit();
        let packet = PacketSpec::box_sine(spec.c - 2.5, spec.c - 0.5, boost);
        let sp = bound_spectrum(&spec, &params, &BoundStateSearch::default()).unwrap();
        let momentum = MomentumConfig { rule: MomentumRule::GaussPanels, p_max: Some(40.0), error_samples: 0, ..Default::default() };
        let cfg = EvolutionConfig {
            momentum,
            x_grid: XGrid::new(spec.d + 0.1, spec.d + 8.1, 0.2),
            times: vec![1.0, 4.0],
            side: Side::TransmittedRight,
        };
        let long = evolve_transmitted_long_form(&spec, &params, &packet, &sp, &cfg).unwrap();
        let compact = evolve_transmitted_compact(&spec, &params, &packet, &sp, &cfg).unwrap();
        for (a, b) in long.frames.iter().zip(&compact.frames) {
            let d = a.total().iter().zip(b.total()).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
            prop_assert!(d < 1e-10, "t = {}: {:e}", a.t, d);
            // the channel split is exact, so the probability decomposition closes
            let rec = probability_diagnostics(b, b.x_start, f64::INFINITY).unwrap();
            prop_assert!(rec.decomposition_residual().abs() < 1e-12);
        }
    }
}
