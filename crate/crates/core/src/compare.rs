//! State matching and the comparison metrics between the ideal model and
//! the lattice implementation: mean relative energy discrepancy
//! ΔĒ = (1/(N−1)) Σ_{n=1..N−1} |1 − Ẽₙ^exp/Ẽₙ^th| over ground-referenced
//! energies, and mean state infidelity Ī = (1/N) Σ_{n<N} (1 − |⟨ψ^th|ψ^exp⟩|²),
//! with subspace fidelities inside near-degenerate clusters. A sweep engine
//! drives both over grids of coupling ratio and lattice depth.

use crate::consts::{hbar, uB};
use crate::eigen::{hermitian_eigensolve, EigenRange};
use crate::error::Error;
use crate::lattice::{
    amplitude_for_target_ratio, build_lattice_hamiltonian, extract_effective_params,
    position_states, EffectiveParams, Grid, LatticeConfig,
};
use crate::models::{
    build_qrm, check_cutoff_convergence_with_cap, synthesize_position_states, ModelParams,
    PositionStates,
};
use crate::Result;
use serde::Serialize;

/// Relative gap below which states are treated as one cluster when matching.
pub const CLUSTER_REL_GAP: f64 = 1e-6;

/// One matched (theory, experiment) pair.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct MatchedPair {
    pub th_index: usize,
    pub exp_index: usize,
    pub e_th: f64,
    pub e_exp: f64,
    /// Normalized squared overlap of the pair.
    pub overlap2: f64,
}

/// State pairing with its cluster structure; clusters are half-open index
/// ranges in theory-order (which equals experiment-order by construction).
#[derive(Clone, Debug)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    pub clusters: Vec<(usize, usize)>,
    /// Number of states the metrics are evaluated over (the pairing may
    /// extend past this to complete a straddling cluster).
    pub n_window: usize,
}

/// Pair states by energy order; inside near-degenerate clusters (relative
/// gap below [`CLUSTER_REL_GAP`] on either spectrum) the assignment
/// maximizes the total squared overlap.
pub fn match_states(th: &PositionStates, exp: &PositionStates, n: usize) -> Result<Matching> {
    if n == 0 {
        return Err(Error::Domain("need at least one state to match".into()));
    }
    if th.states.len() < n || exp.states.len() < n {
        return Err(Error::Mismatch(format!(
            "insufficient states: need {n}, have {} (theory) and {} (experiment)",
            th.states.len(),
            exp.states.len()
        )));
    }
    // both sets must live on the same grid
    th.states[0].inner(&exp.states[0])?;

    let avail = th.states.len().min(exp.states.len());
    let breaks = cluster_breaks(&th.energies[..avail], &exp.energies[..avail]);
    // extend the window so no cluster straddles its edge
    let mut window = n;
    while window < avail && !breaks[window - 1] {
        window += 1;
    }

    let mut pairs = Vec::with_capacity(window);
    let mut clusters = Vec::new();
    let mut start = 0usize;
    for end in 1..=window {
        if end == window || breaks[end - 1] {
            clusters.push((start, end));
            let size = end - start;
            if size == 1 {
                let ov = th.states[start].overlap2(&exp.states[start])?;
                pairs.push(MatchedPair {
                    th_index: start,
                    exp_index: start,
                    e_th: th.energies[start],
                    e_exp: exp.energies[start],
                    overlap2: ov,
                });
            } else {
                // overlap matrix inside the cluster
                let mut o = vec![vec![0.0f64; size]; size];
                for p in 0..size {
                    for q in 0..size {
                        o[p][q] = th.states[start + p].overlap2(&exp.states[start + q])?;
                    }
                }
                let assign = best_assignment(&o);
                for (p, &q) in assign.iter().enumerate() {
                    pairs.push(MatchedPair {
                        th_index: start + p,
                        exp_index: start + q,
                        e_th: th.energies[start + p],
                        e_exp: exp.energies[start + q],
                        overlap2: o[p][q],
                    });
                }
            }
            start = end;
        }
    }
    Ok(Matching {
        pairs,
        clusters,
        n_window: n,
    })
}

/// True at position i when states i and i+1 are separated on both spectra.
fn cluster_breaks(e_th: &[f64], e_exp: &[f64]) -> Vec<bool> {
    let m = e_th.len();
    let span_th = (e_th[m - 1] - e_th[0]).abs().max(f64::MIN_POSITIVE);
    let span_exp = (e_exp[m - 1] - e_exp[0]).abs().max(f64::MIN_POSITIVE);
    (0..m - 1)
        .map(|i| {
            let gap_th = e_th[i + 1] - e_th[i];
            let gap_exp = e_exp[i + 1] - e_exp[i];
            gap_th >= CLUSTER_REL_GAP * span_th && gap_exp >= CLUSTER_REL_GAP * span_exp
        })
        .collect()
}

/// Exhaustive assignment maximizing the total overlap (cluster sizes are
/// small); falls back to greedy beyond size 8.
fn best_assignment(o: &[Vec<f64>]) -> Vec<usize> {
    let size = o.len();
    if size > 8 {
        let mut taken = vec![false; size];
        let mut out = Vec::with_capacity(size);
        for row in o {
            let mut best = usize::MAX;
            let mut best_v = -1.0;
            for (q, &v) in row.iter().enumerate() {
                if !taken[q] && v > best_v {
                    best_v = v;
                    best = q;
                }
            }
            taken[best] = true;
            out.push(best);
        }
        return out;
    }
    let mut perm: Vec<usize> = (0..size).collect();
    let mut best_perm = perm.clone();
    let mut best_score = -1.0f64;
    permute(&mut perm, 0, &mut |p| {
        let score: f64 = p.iter().enumerate().map(|(i, &j)| o[i][j]).sum();
        if score > best_score {
            best_score = score;
            best_perm = p.to_vec();
        }
    });
    best_perm
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// ΔĒ over ground-referenced energies plus the indices excluded for a zero
/// reference denominator.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyDiscrepancy {
    pub value: f64,
    pub excluded: Vec<usize>,
}

/// Mean relative energy discrepancy. Both spectra are referenced to their
/// ground energy; n = 0 drops out (0/0) and the divisor is the number of
/// contributing states (N−1 when none are excluded).
pub fn mean_energy_discrepancy(pairs: &[MatchedPair], n: usize) -> EnergyDiscrepancy {
    let n = n.min(pairs.len());
    if n < 2 {
        return EnergyDiscrepancy {
            value: 0.0,
            excluded: Vec::new(),
        };
    }
    let e0_th = pairs[0].e_th;
    let e0_exp = pairs[0].e_exp;
    let span = (pairs[n - 1].e_th - e0_th).abs().max(f64::MIN_POSITIVE);
    let mut acc = 0.0;
    let mut count = 0usize;
    let mut excluded = Vec::new();
    for pair in &pairs[1..n] {
        let d_th = pair.e_th - e0_th;
        if d_th.abs() <= 1e-12 * span {
            excluded.push(pair.th_index);
            continue;
        }
        let d_exp = pair.e_exp - e0_exp;
        acc += (1.0 - d_exp / d_th).abs();
        count += 1;
    }
    EnergyDiscrepancy {
        value: if count > 0 { acc / count as f64 } else { 0.0 },
        excluded,
    }
}

/// Mean state infidelity over the first `matching.n_window` states; a
/// cluster of size c contributes c − ‖S‖_F² with S its overlap matrix, so
/// the result does not depend on the arbitrary rotations inside clusters.
pub fn mean_infidelity(
    th: &PositionStates,
    exp: &PositionStates,
    matching: &Matching,
) -> Result<f64> {
    let n = matching.n_window;
    let mut total = 0.0f64;
    for &(start, end) in &matching.clusters {
        if start >= n {
            break;
        }
        let size = end - start;
        if size == 1 {
            total += 1.0 - matching.pairs[start].overlap2;
            continue;
        }
        // Frobenius norm of the cluster overlap matrix, split evenly over
        // the cluster members; count only members inside the window
        let mut frob2 = 0.0;
        for p in 0..size {
            for q in 0..size {
                let e_idx = matching.pairs[start + q].exp_index;
                frob2 += th.states[start + p].overlap2(&exp.states[e_idx])?;
            }
        }
        let fid_per_state = (frob2 / size as f64).min(1.0);
        let in_window = end.min(n) - start;
        total += in_window as f64 * (1.0 - fid_per_state);
    }
    Ok((total / n as f64).clamp(0.0, 1.0))
}

/// Options for [`compare_point`] and [`sweep`].
#[derive(Clone, Debug, Serialize)]
pub struct SweepOptions {
    /// States entering the metrics.
    pub n_states: usize,
    /// Lattice grid resolution.
    pub n_points: usize,
    /// Relative tolerance for the model cutoff convergence check.
    pub fock_tol: f64,
    /// Cutoff cap for the model side.
    pub fock_cap: usize,
    /// ω₀ as a multiple of ω_eff (1 = resonance).
    pub omega0_over_omega: f64,
    /// Extra states solved on both sides for cluster completion.
    pub margin: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            n_states: 30,
            n_points: 2048,
            fock_tol: 1e-9,
            fock_cap: 2048,
            omega0_over_omega: 1.0,
            margin: 6,
        }
    }
}

/// Everything the comparison at one parameter point produced.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub n_states: usize,
    pub v0_er: f64,
    /// Extracted g_eff/ω_eff of this point.
    pub ratio: f64,
    pub bx: f64,
    pub bz: f64,
    pub effective: EffectiveParams,
    pub model: ModelParams,
    pub lattice_n_points: usize,
    pub model_cutoff_converged: bool,
    pub pairs: Vec<MatchedPair>,
    pub delta_e_bar: f64,
    pub infidelity_bar: f64,
    pub excluded: Vec<usize>,
}

/// Compare the ideal model against the lattice implementation for one
/// configuration (fields already set in `config`). The model reference is
/// rebuilt from the extracted (ω_eff, g_eff) of this very configuration;
/// its ω₀ matches the lattice Zeeman splitting from B_z.
pub fn compare_point(config: &LatticeConfig, opts: &SweepOptions) -> Result<ComparisonReport> {
    let eff = extract_effective_params(config)?;
    let n_solve = opts.n_states + opts.margin;

    // lattice side
    let grid = Grid::single_site(config, opts.n_points)?;
    let h_lat = build_lattice_hamiltonian(config, &grid)?;
    let exp = position_states(&hermitian_eigensolve(&h_lat, EigenRange::Lowest(n_solve))?)?;

    // model side on the extracted effective parameters; ω₀ and g carry the
    // physical signs (g_F, local field gradient) so that the eigenfunctions
    // live in the same spin labels as the lattice ones
    let center = 0.5 * (grid.x_min + grid.x_max);
    let omega0 = config.species.g_f * uB * config.bz / hbar;
    let grad_cos = (2.0 * config.k_c() * center + config.phase).cos();
    let g_sign = (config.species.g_f * config.bx * grad_cos).signum();
    let g_model = if config.bx == 0.0 {
        0.0
    } else {
        eff.g_eff * g_sign
    };
    let p0 = ModelParams::qrm(eff.omega_eff, g_model, omega0, config.species.spin, 2);
    let cut = check_cutoff_convergence_with_cap(&p0, n_solve, opts.fock_tol, opts.fock_cap)?;
    let p = p0.with_cutoff(cut.cutoff);
    let spec = hermitian_eigensolve(&build_qrm(&p)?, EigenRange::Lowest(n_solve))?;
    let x0_eff = eff.x0_eff(&config.species);
    let wfs = synthesize_position_states(&p, &spec, center, x0_eff, &grid.points())?;
    let th = PositionStates {
        energies: spec.energies.clone(),
        states: wfs,
    };

    let matching = match_states(&th, &exp, opts.n_states)?;
    let de = mean_energy_discrepancy(&matching.pairs, opts.n_states);
    let infid = mean_infidelity(&th, &exp, &matching)?;

    Ok(ComparisonReport {
        n_states: opts.n_states,
        v0_er: config.v0_er,
        ratio: eff.g_eff / eff.omega_eff,
        bx: config.bx,
        bz: config.bz,
        effective: eff,
        model: p,
        lattice_n_points: opts.n_points,
        model_cutoff_converged: cut.converged,
        pairs: matching.pairs.iter().take(opts.n_states).cloned().collect(),
        delta_e_bar: de.value,
        infidelity_bar: infid,
        excluded: de.excluded,
    })
}

/// One entry of a sweep; failed points carry the error text instead of a
/// report so the sweep can continue.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPointResult {
    pub v0_er: f64,
    pub ratio_target: f64,
    pub report: Option<ComparisonReport>,
    pub error: Option<String>,
}

/// Sweep the comparison over coupling ratios and lattice depths. For each
/// point the field amplitude comes from the inverse map, B_z is set for
/// ω₀ = `omega0_over_omega`·ω_eff, and one report is produced; points are
/// ordered deterministically by (depth, ratio) in the given order.
pub fn sweep(
    template: &LatticeConfig,
    ratios: &[f64],
    depths: &[f64],
    opts: &SweepOptions,
) -> Vec<SweepPointResult> {
    let mut out = Vec::with_capacity(ratios.len() * depths.len());
    for &v0 in depths {
        for &ratio in ratios {
            let result = sweep_one(template, ratio, v0, opts);
            out.push(match result {
                Ok(report) => SweepPointResult {
                    v0_er: v0,
                    ratio_target: ratio,
                    report: Some(report),
                    error: None,
                },
                Err(e) => SweepPointResult {
                    v0_er: v0,
                    ratio_target: ratio,
                    report: None,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    out
}

fn sweep_one(
    template: &LatticeConfig,
    ratio: f64,
    v0: f64,
    opts: &SweepOptions,
) -> Result<ComparisonReport> {
    let cfg = template.with_v0(v0);
    let bx = if ratio <= 0.0 {
        0.0
    } else {
        amplitude_for_target_ratio(&cfg, ratio)?
    };
    let eff = extract_effective_params(&cfg.with_bx(bx))?;
    let omega0_target = opts.omega0_over_omega * eff.omega_eff;
    let bz = hbar * omega0_target / (uB * cfg.species.g_f.abs());
    compare_point(&cfg.with_bx(bx).with_bz(bz), opts)
}
