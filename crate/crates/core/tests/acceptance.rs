//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `--nocapture` to see them on success).

use rabi_sim::atoms::species;
use rabi_sim::compare::{sweep, SweepOptions};
use rabi_sim::consts::GAUSS;
use rabi_sim::dynamics::evolve_constant;
use rabi_sim::eigen::{hermitian_eigensolve, EigenRange};
use rabi_sim::lattice::{
    amplitude_for_target_g, build_lattice_hamiltonian, extract_effective_params, Grid,
    LatticeConfig, LatticeGeometry,
};
use rabi_sim::models::{
    build_dicke, build_driven_qrm, build_qrm, build_quadratic_qrm, check_cutoff_convergence,
    ModelParams,
};
use rabi_sim::operators::{fock_ladder, kron, BasisSpec, OperatorMatrix, Storage};
use rabi_sim::spin::Spin;
use rabi_sim::units;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

fn verdict(criterion: &str, pass: bool, detail: &str) -> bool {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn rb_lin_theta_lin(v0: f64) -> LatticeConfig {
    LatticeConfig::new(
        species("87Rb:F=1").unwrap(),
        LatticeGeometry::LinThetaLin,
        787e-9,
        787e-9,
        v0,
    )
    .unwrap()
}

const SWEEP_RATIOS: [f64; 7] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

#[test]
fn criterion_01_lin_theta_lin_comparison() {
    let cfg = rb_lin_theta_lin(1e5);
    let opts = SweepOptions::default();
    let results = sweep(&cfg, &SWEEP_RATIOS, &[1e5], &opts);
    assert_eq!(results.len(), SWEEP_RATIOS.len(), "one report per point");

    let mut all_pass = true;
    let mut lines = String::new();
    for point in &results {
        match &point.report {
            Some(r) => {
                let ok = r.delta_e_bar <= 0.01 && r.infidelity_bar <= 2e-3;
                all_pass &= ok;
                lines.push_str(&format!(
                    "\n    ratio {:>3}: dE_bar = {:.3e} (≤ 1e-2), I_bar = {:.3e} (≤ 2e-3) {}",
                    point.ratio_target,
                    r.delta_e_bar,
                    r.infidelity_bar,
                    if ok { "ok" } else { "EXCEEDED" }
                ));
            }
            None => {
                all_pass = false;
                lines.push_str(&format!(
                    "\n    ratio {:>3}: failed ({:?})",
                    point.ratio_target, point.error
                ));
            }
        }
    }
    let pass = verdict(
        "01 lin-theta-lin-comparison",
        all_pass,
        &format!("F=1 ⁸⁷Rb, V0=1e5 E_r, 30 states{lines}"),
    );
    assert!(
        pass,
        "known deviation: near ratios 1.0–1.5 the lowest-30 window crosses the \
         uncoupled-spin-branch band edge, where model and lattice states rotate \
         within quasi-degenerate pairs (pair subspace fidelity stays ~2e-3); the \
         per-state metric then exceeds the bound at those sweep points"
    );
}

#[test]
fn criterion_02_two_lattice_comparison() {
    let cfg = LatticeConfig::new(
        species("87Rb:F=1").unwrap(),
        LatticeGeometry::TwoLattice2to1,
        2.0 * 790.04e-9,
        790.04e-9,
        2e5,
    )
    .unwrap();
    let opts = SweepOptions::default();
    let results = sweep(&cfg, &SWEEP_RATIOS, &[2e5], &opts);

    let mut all_pass = true;
    let mut lines = String::new();
    for point in &results {
        match &point.report {
            Some(r) => {
                let ok = r.delta_e_bar <= 0.02 && r.infidelity_bar <= 0.1;
                all_pass &= ok;
                lines.push_str(&format!(
                    "\n    ratio {:>3}: dE_bar = {:.3e} (≤ 2e-2), I_bar = {:.3e} (≤ 1e-1) {}",
                    point.ratio_target,
                    r.delta_e_bar,
                    r.infidelity_bar,
                    if ok { "ok" } else { "EXCEEDED" }
                ));
            }
            None => {
                all_pass = false;
                lines.push_str(&format!(
                    "\n    ratio {:>3}: failed ({:?})",
                    point.ratio_target, point.error
                ));
            }
        }
    }
    let pass = verdict(
        "02 two-lattice-comparison",
        all_pass,
        &format!("λ_t = 2λ_c, V0=2e5 E_r, 30 states{lines}"),
    );
    assert!(
        pass,
        "known deviation: the λ_t = 2λ_c geometry doubles the coupling-field \
         wavenumber, so its nonlinearity at the displaced minima is the \
         strongest of the three geometries; at intermediate ratios the \
         crossing-pair rotations push the per-state metrics past the bounds"
    );
}

#[test]
fn criterion_03_operating_point_cross_check() {
    let cfg = rb_lin_theta_lin(1e5);
    let g_target = 2.0 * PI * 8.5e6;
    let bx = amplitude_for_target_g(&cfg, g_target).unwrap();
    let eff = extract_effective_params(&cfg.with_bx(bx)).unwrap();
    let omega_mhz = eff.omega_eff / (2.0 * PI) / 1e6;
    let ratio = eff.g_eff / eff.omega_eff;
    let ok_omega = (omega_mhz - 2.9).abs() / 2.9 <= 0.10;
    let ok_ratio = (ratio - 2.93).abs() <= 0.15;
    let pass = verdict(
        "03 operating-point-cross-check",
        ok_omega && ok_ratio,
        &format!(
            "g_eff/2π tuned to 8.5 MHz → ω_eff/2π = {omega_mhz:.4} MHz (2.9 ± 10%), \
             g_eff/ω_eff = {ratio:.4} (2.93 ± 0.15)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_resonance_field() {
    let w0 = units::tls_frequency(4.0 * GAUSS, 0.5);
    let mhz = w0.magnitude / (2.0 * PI) / 1e6;
    let pass = verdict(
        "04 resonance-field",
        (mhz - 2.9).abs() / 2.9 <= 0.05,
        &format!("ω₀(B_z = 4 G, |g_F| = 1/2)/2π = {mhz:.4} MHz vs 2.9 MHz ± 5%"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_exact_limit_suite() {
    // (a) g = 0: spectrum {nω + m_F ω₀} to 1e-10
    let mut ok_a = true;
    for (omega, omega0, spin) in [
        (1.0, 0.37, Spin::ONE),
        (2.0, 0.61, Spin::HALF),
        (1.0, 0.11, Spin::from_twice(6).unwrap()),
    ] {
        let p = ModelParams::qrm(omega, 0.0, omega0, spin, 24);
        let s = hermitian_eigensolve(&build_qrm(&p).unwrap(), EigenRange::All).unwrap();
        let f = spin.f();
        let mut expect: Vec<f64> = (0..24)
            .flat_map(|n| {
                (0..spin.dim())
                    .map(move |sidx| omega * n as f64 + omega0 * (sidx as f64 - f))
            })
            .collect();
        expect.sort_by(f64::total_cmp);
        for i in 0..s.len() {
            ok_a &= (s.energies[i] - expect[i]).abs() <= 1e-10 * expect[i].abs().max(1.0);
        }
    }

    // (b) ω₀ = 0, F = 1/2: {nω - g²/ω} doubly degenerate to 1e-8
    let mut ok_b = true;
    let (omega, g) = (1.0, 1.2);
    let p = ModelParams::qrm(omega, g, 0.0, Spin::HALF, 2);
    let cut = check_cutoff_convergence(&p, 20, 1e-11).unwrap();
    let s = hermitian_eigensolve(
        &build_qrm(&p.with_cutoff(2 * cut.cutoff)).unwrap(),
        EigenRange::Lowest(20),
    )
    .unwrap();
    for n in 0..10 {
        let expect = omega * n as f64 - g * g / omega;
        ok_b &= (s.energies[2 * n] - expect).abs() <= 1e-8 * expect.abs().max(1.0);
        ok_b &= (s.energies[2 * n + 1] - expect).abs() <= 1e-8 * expect.abs().max(1.0);
    }

    // (c) DSC revival: ω₀ = 0, g/ω = 2 → fidelity(2π/ω) = 1 ± 1e-6
    let pd = ModelParams::qrm(1.0, 2.0, 0.0, Spin::HALF, 128);
    let h = build_qrm(&pd).unwrap();
    let basis = pd.basis().unwrap();
    let mut psi0 = DVector::from_element(basis.dim(), C64::new(0.0, 0.0));
    psi0[basis.index(0, 1)] = C64::new(1.0, 0.0);
    let r = evolve_constant(&h, &psi0, &[PI, 2.0 * PI]).unwrap();
    let ok_c = (r.fidelity[1] - 1.0).abs() <= 1e-6 && r.fidelity[0] < 0.01;

    let pass = verdict(
        "05 exact-limit-suite",
        ok_a && ok_b && ok_c,
        &format!(
            "(a) free spectrum {} (b) displaced ladder {} (c) revival fidelity {:.8}",
            ok_a, ok_b, r.fidelity[1]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_jaynes_cummings_limit() {
    let g = 0.01;
    let p = ModelParams::qrm(1.0, g, 1.0, Spin::HALF, 16);
    let h = build_qrm(&p).unwrap();
    let basis = p.basis().unwrap();
    let mut psi0 = DVector::from_element(basis.dim(), C64::new(0.0, 0.0));
    psi0[basis.index(0, 1)] = C64::new(1.0, 0.0);
    let n_t = 4000;
    let t_max = 1.2 * PI / g;
    let times: Vec<f64> = (0..n_t).map(|i| i as f64 * t_max / n_t as f64).collect();
    let r = evolve_constant(&h, &psi0, &times).unwrap();
    let pe: Vec<f64> = r.populations.iter().map(|row| row[1]).collect();
    let mut i_min = 1;
    while i_min + 1 < n_t && !(pe[i_min] <= pe[i_min - 1] && pe[i_min] <= pe[i_min + 1]) {
        i_min += 1;
    }
    let (a, b, c) = (pe[i_min - 1], pe[i_min], pe[i_min + 1]);
    let dt = times[1] - times[0];
    let period = 2.0 * (times[i_min] + 0.5 * (a - c) / (a - 2.0 * b + c) * dt);
    let rel = (period * g / PI - 1.0).abs();
    let pass = verdict(
        "06 jaynes-cummings-limit",
        rel <= 0.02,
        &format!("vacuum Rabi period {period:.4} vs π/g = {:.4} ({:.3}% off)", PI / g, rel * 100.0),
    );
    assert!(pass);
}

/// Explicit N-qubit ⊗ Fock Dicke Hamiltonian restricted to the symmetric
/// subspace; the independent oracle for the pseudo-spin builder.
fn qubit_dicke_symmetric_spectrum(
    n_spins: usize,
    omega: f64,
    omega0: f64,
    g: f64,
    cutoff: usize,
    k: usize,
) -> Vec<f64> {
    let c = |re: f64| C64::new(re, 0.0);
    let nq = 1usize << n_spins;
    let (a, adag) = fock_ladder(cutoff).unwrap();
    let (a, adag) = (a.as_dense().unwrap(), adag.as_dense().unwrap());
    let eye_q = DMatrix::<C64>::identity(nq, nq);
    let eye_f = DMatrix::<C64>::identity(cutoff, cutoff);
    let sx = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(-1.0), c(0.0), c(0.0), c(1.0)]);

    let mut sx_tot = DMatrix::<C64>::zeros(nq, nq);
    let mut sz_tot = DMatrix::<C64>::zeros(nq, nq);
    for i in 0..n_spins {
        let mut ox = DMatrix::<C64>::identity(1, 1);
        let mut oz = DMatrix::<C64>::identity(1, 1);
        for j in 0..n_spins {
            let (fx, fz) = if i == j {
                (sx.clone(), sz.clone())
            } else {
                (DMatrix::identity(2, 2), DMatrix::identity(2, 2))
            };
            ox = kron(&ox, &fx);
            oz = kron(&oz, &fz);
        }
        sx_tot += ox;
        sz_tot += oz;
    }

    let x = a + adag;
    let h = kron(&(adag * a), &eye_q) * c(omega)
        + kron(&eye_f, &sz_tot) * c(omega0 / 2.0)
        + kron(&x, &sx_tot) * c(g / (n_spins as f64).sqrt());

    // isometry onto the symmetric subspace, bit = 1 meaning spin up
    let binom = |n: usize, k: usize| -> f64 {
        let mut v = 1.0;
        for i in 0..k {
            v = v * (n - i) as f64 / (i + 1) as f64;
        }
        v
    };
    let mut proj = DMatrix::<C64>::zeros(cutoff * nq, cutoff * (n_spins + 1));
    for n in 0..cutoff {
        for q in 0..nq {
            let ups = (q as u32).count_ones() as usize;
            proj[(n * nq + q, n * (n_spins + 1) + ups)] =
                c(1.0 / binom(n_spins, ups).sqrt());
        }
    }
    let h_sym = proj.adjoint() * &h * &proj;
    let dim = h_sym.nrows();
    let op = OperatorMatrix::dense_hermitian(h_sym, rabi_sim::operators::Basis::Plain(dim))
        .unwrap();
    let s = hermitian_eigensolve(&op, EigenRange::All).unwrap();
    s.energies[..k].to_vec()
}

#[test]
fn criterion_07_dicke_equivalence() {
    let (omega, omega0, g) = (1.0, 0.9, 0.65);
    let cutoff = 48;
    let mut pass = true;
    let mut detail = String::new();
    for n_spins in [2usize, 3] {
        let pseudo = hermitian_eigensolve(
            &build_dicke(n_spins, omega, omega0, g, cutoff).unwrap(),
            EigenRange::All,
        )
        .unwrap();
        let oracle = qubit_dicke_symmetric_spectrum(n_spins, omega, omega0, g, cutoff, 20);
        let mut worst = 0.0f64;
        for i in 0..20 {
            let err = (pseudo.energies[i] - oracle[i]).abs() / (1.0 + oracle[i].abs());
            worst = worst.max(err);
        }
        pass &= worst <= 1e-10;
        detail.push_str(&format!("N={n_spins}: worst rel dev {worst:.2e}; "));
    }
    let pass = verdict("07 dicke-equivalence", pass, &detail);
    assert!(pass);
}

#[test]
fn criterion_08_quadratic_coupling() {
    let omega = 1.0;
    let mut ok_bogo = true;
    let mut detail = String::new();
    for g2 in [0.1, 0.2, 0.3, 0.4] {
        let p = ModelParams {
            omega,
            g: 0.0,
            omega0: 0.0,
            g_eps: 0.0,
            g2,
            spin: Spin::HALF,
            fock_cutoff: 2,
        };
        let cut = check_cutoff_convergence(&p, 16, 1e-10).unwrap();
        let h = build_quadratic_qrm(&p.with_cutoff(2 * cut.cutoff)).unwrap();
        let s = hermitian_eigensolve(&h, EigenRange::Lowest(16)).unwrap();
        let om_p = (omega * (omega + 2.0 * g2)).sqrt();
        let om_m = (omega * (omega - 2.0 * g2)).sqrt();
        let mut oracle: Vec<f64> = (0..40)
            .flat_map(|n| {
                [
                    om_p * (n as f64 + 0.5) - omega / 2.0,
                    om_m * (n as f64 + 0.5) - omega / 2.0,
                ]
            })
            .collect();
        oracle.sort_by(f64::total_cmp);
        let mut worst = 0.0f64;
        for i in 0..16 {
            worst = worst
                .max((s.energies[i] - oracle[i]).abs() / oracle[i].abs().max(omega));
        }
        ok_bogo &= worst <= 1e-6;
        detail.push_str(&format!("g2={g2}: dev {worst:.1e}; "));
    }

    // soft-branch spacings shrink monotonically toward the collapse
    let cutoff = 768;
    let mut prev_spacings: Option<Vec<f64>> = None;
    let mut ok_trend = true;
    for g2 in [0.30, 0.38, 0.44, 0.48] {
        let p = ModelParams {
            omega,
            g: 0.0,
            omega0: 0.0,
            g_eps: 0.0,
            g2,
            spin: Spin::HALF,
            fock_cutoff: cutoff,
        };
        let h = build_quadratic_qrm(&p).unwrap();
        let s = hermitian_eigensolve(&h, EigenRange::Lowest(48)).unwrap();
        // soft-branch states have ⟨F̂x⟩ ≈ -1/2 for g2 > 0
        let basis = p.basis().unwrap();
        let mut soft = Vec::new();
        for i in 0..s.len() {
            let v = s.states.column(i);
            let mut fx = 0.0;
            for n in 0..basis.fock_cutoff {
                fx += (v[basis.index(n, 0)].conj() * v[basis.index(n, 1)]).re;
            }
            if fx < -0.4 {
                soft.push(s.energies[i]);
            }
            if soft.len() > 11 {
                break;
            }
        }
        let spacings: Vec<f64> = soft.windows(2).map(|w| w[1] - w[0]).take(10).collect();
        assert_eq!(spacings.len(), 10, "need ten soft-branch spacings");
        if let Some(prev) = &prev_spacings {
            for (s_now, s_prev) in spacings.iter().zip(prev) {
                ok_trend &= s_now < s_prev;
            }
        }
        prev_spacings = Some(spacings);
    }

    let pass = verdict(
        "08 quadratic-coupling",
        ok_bogo && ok_trend,
        &format!("{detail}soft-branch spacing trend monotone: {ok_trend}"),
    );
    assert!(pass);
}

#[test]
fn criterion_09_symmetry_suite() {
    // parity commutator over 100 random parameter draws; with a diagonal
    // parity the commutator entries are (π_i - π_j)·H_ij, so the exact max
    // is read off the banded storage
    let mut seed = 0x1234_5678_9ABC_DEF0u64;
    let mut rng = move || {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        (seed >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut ok_parity = true;
    for _ in 0..100 {
        let spin = Spin::from_twice(1 + (rng() * 4.0) as u32).unwrap();
        let p = ModelParams::qrm(
            0.5 + rng(),
            3.0 * rng() - 1.5,
            2.0 * rng(),
            spin,
            24,
        );
        let h = build_qrm(&p).unwrap();
        let basis = p.basis().unwrap();
        let comm = parity_commutator_max(&h, &basis);
        ok_parity &= comm <= 1e-12 * h.max_abs();
    }

    // g → -g spectral invariance to 1e-10
    let mut ok_sign = true;
    for (spin, g) in [(Spin::HALF, 1.3), (Spin::ONE, 0.8), (Spin::HALF, 2.4)] {
        let plus = ModelParams::qrm(1.0, g, 0.9, spin, 192);
        let minus = ModelParams::qrm(1.0, -g, 0.9, spin, 192);
        let sp = hermitian_eigensolve(&build_qrm(&plus).unwrap(), EigenRange::Lowest(20)).unwrap();
        let sm =
            hermitian_eigensolve(&build_qrm(&minus).unwrap(), EigenRange::Lowest(20)).unwrap();
        for i in 0..20 {
            ok_sign &=
                (sp.energies[i] - sm.energies[i]).abs() <= 1e-10 * sp.energies[i].abs().max(1.0);
        }
    }

    // the drive breaks parity and lifts a deep-strong-coupling quasi-degeneracy
    let p = ModelParams::qrm(1.0, 3.0, 1.0, Spin::HALF, 384);
    let s0 = hermitian_eigensolve(&build_qrm(&p).unwrap(), EigenRange::Lowest(4)).unwrap();
    let gap_before = s0.energies[1] - s0.energies[0];
    let pd = ModelParams { g_eps: 0.3, ..p };
    let h_driven = build_driven_qrm(&pd).unwrap();
    let basis = pd.basis().unwrap();
    let broken = parity_commutator_max(&h_driven, &basis) > 1e-3;
    let s1 = hermitian_eigensolve(&h_driven, EigenRange::Lowest(4)).unwrap();
    let gap_after = s1.energies[1] - s1.energies[0];
    let ok_lift = gap_before < 1e-4 && broken && gap_after > 1e-3;

    let pass = verdict(
        "09 symmetry-suite",
        ok_parity && ok_sign && ok_lift,
        &format!(
            "parity commutator ok: {ok_parity}; ±g invariance ok: {ok_sign}; \
             doublet gap {gap_before:.2e} → {gap_after:.2e} under drive"
        ),
    );
    assert!(pass);
}

fn parity_commutator_max(h: &OperatorMatrix, basis: &BasisSpec) -> f64 {
    let diag = rabi_sim::operators::parity_diagonal(basis);
    match h.storage() {
        Storage::Banded(b) => {
            let n = b.dim();
            let mut worst = 0.0f64;
            for d in 1..=b.half_bandwidth() {
                for i in 0..n - d {
                    if diag[i] != diag[i + d] {
                        worst = worst.max(b.get(i + d, i).abs() * 2.0);
                    }
                }
            }
            worst
        }
        Storage::Dense(m) => {
            let n = m.nrows();
            let mut worst = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((m[(i, j)] * (diag[i] - diag[j])).norm());
                }
            }
            worst
        }
    }
}

#[test]
fn criterion_10_numerics_contracts() {
    // eigensolver contracts on a battery of solves
    let mut ok_contracts = true;
    let p = ModelParams::qrm(1.0, 1.7, 0.9, Spin::ONE, 160);
    let h = build_qrm(&p).unwrap();
    for range in [EigenRange::Lowest(24), EigenRange::All] {
        let s = hermitian_eigensolve(&h, range).unwrap();
        ok_contracts &= s.verify().is_ok();
    }
    let cfg = rb_lin_theta_lin(1e4);
    let h_lat = build_lattice_hamiltonian(&cfg, &Grid::single_site(&cfg, 1024).unwrap()).unwrap();
    let s_lat = hermitian_eigensolve(&h_lat, EigenRange::Lowest(30)).unwrap();
    ok_contracts &= s_lat.verify().is_ok();

    // grid self-convergence order ≥ 1.9 on the lattice eigenvalues
    let mut data = Vec::new();
    for n_points in [512usize, 1024, 2048] {
        let grid = Grid::single_site(&cfg, n_points).unwrap();
        let h = build_lattice_hamiltonian(&cfg, &grid).unwrap();
        let s = hermitian_eigensolve(&h, EigenRange::Lowest(12)).unwrap();
        data.push((grid.dx(), s.energies));
    }
    let mut min_order = f64::INFINITY;
    for idx in [6usize, 9, 11] {
        let d01 = (data[0].1[idx] - data[1].1[idx]).abs();
        let d12 = (data[1].1[idx] - data[2].1[idx]).abs();
        let order = (d01 / d12).ln() / (data[0].0 / data[1].0).ln();
        min_order = min_order.min(order);
    }

    let pass = verdict(
        "10 numerics-contracts",
        ok_contracts && min_order >= 1.9,
        &format!(
            "residual/orthonormality contracts: {ok_contracts}; measured grid order {min_order:.3} \
             (CLI byte-determinism covered by the rabi-cli acceptance suite)"
        ),
    );
    assert!(pass);
}
