//! `rabi`: command-line workbench for quantum Rabi model spectra, the
//! cold-atom lattice realization, model-vs-lattice comparisons, and quench
//! dynamics. Outputs are deterministic CSV files plus a JSON mirror that
//! embeds the resolved scenario.

mod emit;
mod scenario;

use clap::{Parser, Subcommand};
use emit::{emit, Cell, Table};
use rabi_sim::compare::{compare_point, sweep, ComparisonReport, SweepOptions};
use rabi_sim::consts::h;
use rabi_sim::dynamics::{run_protocol_with, EvolveOptions};
use rabi_sim::eigen::{hermitian_eigensolve, EigenRange};
use rabi_sim::error::Error;
use rabi_sim::lattice::{
    build_lattice_hamiltonian, extract_effective_params, Grid,
};
use rabi_sim::models::{build_dicke, build_full, check_cutoff_convergence};
use rabi_sim::operators::parity_diagonal;
use rabi_sim::spin::Spin;
use rabi_sim::units;
use rabi_sim::Result;
use scenario::{echo, parse_scenario, Scenario, KEY_DOCUMENTATION};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rabi",
    version,
    about = "Quantum Rabi model workbench: spectra, lattice comparison, dynamics",
    after_help = crate::scenario::KEY_DOCUMENTATION,
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (JSON object or flat key=value lines)
    #[arg(long, global = true)]
    scenario: Option<std::path::PathBuf>,

    /// Override one scenario key (repeatable), e.g. --set omega=1.0
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output path prefix (overrides the scenario)
    #[arg(long, global = true)]
    output: Option<String>,

    /// csv, json or both (overrides the scenario)
    #[arg(long, global = true)]
    format: Option<String>,

    /// Validate the scenario, print its resolved JSON echo, and exit
    #[arg(long, global = true)]
    dry_run: bool,

    /// Print the documented scenario keys and exit
    #[arg(long, global = true)]
    list_keys: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Print every derived physical quantity for a lattice configuration
    Params,
    /// Eigenvalues of a Fock-space model Hamiltonian
    Spectrum,
    /// Eigenvalues of the single-site lattice Hamiltonian
    LatticeSpectrum,
    /// Model-vs-lattice comparison at one configuration
    Compare,
    /// Comparison sweep over coupling ratios and depths
    Sweep,
    /// Quench-protocol time evolution
    Evolve,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Params => "params",
            Command::Spectrum => "spectrum",
            Command::LatticeSpectrum => "lattice-spectrum",
            Command::Compare => "compare",
            Command::Sweep => "sweep",
            Command::Evolve => "evolve",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            if e.kind() == clap::error::ErrorKind::DisplayHelp
                || e.kind() == clap::error::ErrorKind::DisplayVersion
            {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if cli.list_keys {
        print!("{KEY_DOCUMENTATION}");
        return Ok(());
    }
    let file_text = match &cli.scenario {
        Some(path) => Some(std::fs::read_to_string(path)?),
        None => None,
    };
    let mut sc = parse_scenario(file_text.as_deref(), &cli.set, cli.command.name())?;
    if let Some(out) = &cli.output {
        sc.output = out.clone();
    }
    if let Some(fmt) = &cli.format {
        sc.format = fmt.clone();
    }

    if cli.dry_run {
        validate_only(&sc)?;
        print!("{}", echo(&sc));
        return Ok(());
    }

    match cli.command {
        Command::Params => cmd_params(&sc),
        Command::Spectrum => cmd_spectrum(&sc),
        Command::LatticeSpectrum => cmd_lattice_spectrum(&sc),
        Command::Compare => cmd_compare(&sc),
        Command::Sweep => cmd_sweep(&sc),
        Command::Evolve => cmd_evolve(&sc),
    }
}

fn validate_only(sc: &Scenario) -> Result<()> {
    match sc.command.as_str() {
        "params" | "lattice-spectrum" => {
            sc.lattice_config()?;
        }
        "spectrum" => {
            sc.model_params(64)?;
        }
        "compare" => {
            sc.lattice_config()?;
        }
        "sweep" => {
            let cfg = sc.lattice_config()?;
            cfg.validate()?;
            let section = sc.sweep.as_ref().ok_or(Error::MissingKey("ratios".into()))?;
            if section.ratios.is_none() {
                return Err(Error::MissingKey("ratios".into()));
            }
            if section.depths.is_none() {
                return Err(Error::MissingKey("depths".into()));
            }
        }
        "evolve" => {
            let p = sc.model_params(64)?;
            sc.protocol(&p)?;
        }
        other => {
            return Err(Error::Validation(format!("unknown command `{other}`")));
        }
    }
    Ok(())
}

fn cmd_params(sc: &Scenario) -> Result<()> {
    let cfg = sc.lattice_config()?;
    let er = cfg.recoil()?;
    let omega = cfg.bare_trap_frequency()?;
    let x0 = units::oscillator_length(omega, &cfg.species)?;
    let b_grad = units::gradient_from_amplitude(cfg.bx, cfg.lambda_c)?;
    let g = units::coupling_strength(b_grad, cfg.species.g_f, x0)?;
    let w0 = units::tls_frequency(cfg.bz, cfg.species.g_f);
    let eff = extract_effective_params(&cfg)?;

    let mut table = Table::new(&[
        "er_joule",
        "er_over_h_hz",
        "omega_rad_s",
        "x0_m",
        "b_grad_t_per_m",
        "g_rad_s",
        "g_sign",
        "omega0_rad_s",
        "omega0_sign",
        "omega_eff_rad_s",
        "g_eff_rad_s",
        "x_star_m",
    ]);
    table.push(vec![
        Cell::Float(er),
        Cell::Float(er / h),
        Cell::Float(omega),
        Cell::Float(x0),
        Cell::Float(b_grad),
        Cell::Float(g.magnitude),
        Cell::Int(g.sign as i64),
        Cell::Float(w0.magnitude),
        Cell::Int(w0.sign as i64),
        Cell::Float(eff.omega_eff),
        Cell::Float(eff.g_eff),
        Cell::Float(eff.x_star),
    ]);
    let results = serde_json::json!({
        "er_joule": er,
        "er_over_h_hz": er / h,
        "omega_rad_s": omega,
        "x0_m": x0,
        "b_grad_t_per_m": b_grad,
        "g_rad_s": g.magnitude,
        "g_sign": g.sign,
        "omega0_rad_s": w0.magnitude,
        "omega0_sign": w0.sign,
        "effective": eff,
    });
    let written = emit(sc, &table, &results)?;
    println!(
        "params: E_r/h = {:.6} kHz, omega/2pi = {:.6} MHz, x0 = {:.4} nm, g/2pi = {:.6} MHz, omega0/2pi = {:.6} MHz",
        er / h / 1e3,
        omega / (2.0 * std::f64::consts::PI) / 1e6,
        x0 * 1e9,
        g.magnitude / (2.0 * std::f64::consts::PI) / 1e6,
        w0.magnitude / (2.0 * std::f64::consts::PI) / 1e6,
    );
    for w in written {
        println!("wrote {w}");
    }
    Ok(())
}

fn resolved_model(sc: &Scenario, n_states: usize) -> Result<(rabi_sim::ModelParams, bool)> {
    // resolve an automatic cutoff against the requested state count
    if sc.model.fock_cutoff.is_some() {
        return Ok((sc.model_params(0)?, true));
    }
    let probe = sc.model_params(16)?;
    let cut = check_cutoff_convergence(&probe, n_states, 1e-9)?;
    Ok((probe.with_cutoff(cut.cutoff), cut.converged))
}

fn cmd_spectrum(sc: &Scenario) -> Result<()> {
    let (params, converged) = resolved_model(sc, sc.n_states)?;
    let (h_op, label) = match sc.model.dicke_n {
        Some(n_spins) => (
            build_dicke(
                n_spins,
                params.omega,
                params.omega0,
                params.g,
                params.fock_cutoff,
            )?,
            format!("dicke_n={n_spins}"),
        ),
        None => (build_full(&params)?, "model".to_string()),
    };
    let k = sc.n_states.min(h_op.dim());
    let spec = hermitian_eigensolve(&h_op, EigenRange::Lowest(k))?;
    let parity = match &spec.basis {
        rabi_sim::operators::Basis::FockSpin(bs) => {
            let diag = parity_diagonal(bs);
            (0..k)
                .map(|i| {
                    spec.states
                        .column(i)
                        .iter()
                        .zip(&diag)
                        .map(|(z, d)| d * z.norm_sqr())
                        .sum::<f64>()
                })
                .collect::<Vec<f64>>()
        }
        _ => vec![],
    };

    let mut table = Table::new(&["n", "energy_rad_s", "parity", "residual"]);
    for i in 0..k {
        table.push(vec![
            Cell::Int(i as i64),
            Cell::Float(spec.energies[i]),
            Cell::Float(parity.get(i).copied().unwrap_or(f64::NAN)),
            Cell::Float(spec.residuals[i]),
        ]);
    }
    let results = serde_json::json!({
        "hamiltonian": label,
        "fock_cutoff": params.fock_cutoff,
        "cutoff_converged": converged,
        "collapse_flag": spec.collapse_flag,
        "energies_rad_s": spec.energies,
        "parity": parity,
        "residuals": spec.residuals,
    });
    let written = emit(sc, &table, &results)?;
    println!(
        "spectrum: {} states, E0 = {:.9e} rad/s (cutoff {})",
        k, spec.energies[0], params.fock_cutoff
    );
    for w in written {
        println!("wrote {w}");
    }
    Ok(())
}

fn cmd_lattice_spectrum(sc: &Scenario) -> Result<()> {
    let cfg = sc.lattice_config()?;
    let grid = Grid::single_site(&cfg, sc.n_points)?;
    let h_op = build_lattice_hamiltonian(&cfg, &grid)?;
    let k = sc.n_states.min(h_op.dim());
    let spec = hermitian_eigensolve(&h_op, EigenRange::Lowest(k))?;
    let eff = extract_effective_params(&cfg)?;

    let mut table = Table::new(&["n", "energy_rad_s", "residual"]);
    for i in 0..k {
        table.push(vec![
            Cell::Int(i as i64),
            Cell::Float(spec.energies[i]),
            Cell::Float(spec.residuals[i]),
        ]);
    }
    let results = serde_json::json!({
        "energies_rad_s": spec.energies,
        "residuals": spec.residuals,
        "effective": eff,
        "n_points": sc.n_points,
    });
    let written = emit(sc, &table, &results)?;
    println!(
        "lattice-spectrum: {} states, omega_eff/2pi = {:.6} MHz, g_eff/2pi = {:.6} MHz",
        k,
        eff.omega_eff / (2.0 * std::f64::consts::PI) / 1e6,
        eff.g_eff / (2.0 * std::f64::consts::PI) / 1e6,
    );
    for w in written {
        println!("wrote {w}");
    }
    Ok(())
}

fn compare_table(report: &ComparisonReport) -> Table {
    let mut table = Table::new(&["row", "e_th", "e_exp", "overlap2"]);
    for (i, pair) in report.pairs.iter().enumerate() {
        table.push(vec![
            Cell::Int(i as i64),
            Cell::Float(pair.e_th),
            Cell::Float(pair.e_exp),
            Cell::Float(pair.overlap2),
        ]);
    }
    let min_overlap = report
        .pairs
        .iter()
        .map(|p| p.overlap2)
        .fold(f64::INFINITY, f64::min);
    table.push(vec![
        Cell::Text("summary".into()),
        Cell::Float(report.delta_e_bar),
        Cell::Float(report.infidelity_bar),
        Cell::Float(min_overlap),
    ]);
    table
}

fn cmd_compare(sc: &Scenario) -> Result<()> {
    let cfg = sc.lattice_config()?;
    let opts = SweepOptions {
        n_states: sc.n_states,
        n_points: sc.n_points,
        ..SweepOptions::default()
    };
    let report = compare_point(&cfg, &opts)?;
    let table = compare_table(&report);
    let written = emit(sc, &table, &report)?;
    println!(
        "compare: ratio = {:.4}, delta_e_bar = {:.6e}, infidelity_bar = {:.6e}",
        report.ratio, report.delta_e_bar, report.infidelity_bar
    );
    for w in written {
        println!("wrote {w}");
    }
    Ok(())
}

fn cmd_sweep(sc: &Scenario) -> Result<()> {
    let cfg = sc.lattice_config()?;
    let section = sc
        .sweep
        .as_ref()
        .ok_or_else(|| Error::MissingKey("ratios".into()))?;
    let ratios = section
        .ratios
        .as_ref()
        .ok_or_else(|| Error::MissingKey("ratios".into()))?;
    let depths = section
        .depths
        .as_ref()
        .ok_or_else(|| Error::MissingKey("depths".into()))?;
    let opts = SweepOptions {
        n_states: sc.n_states,
        n_points: sc.n_points,
        ..SweepOptions::default()
    };
    let results = sweep(&cfg, ratios, depths, &opts);

    let mut table = Table::new(&["v0_er", "ratio", "delta_e_bar", "infidelity_bar"]);
    for point in &results {
        let (de, infid) = match &point.report {
            Some(r) => (r.delta_e_bar, r.infidelity_bar),
            None => (f64::NAN, f64::NAN),
        };
        table.push(vec![
            Cell::Float(point.v0_er),
            Cell::Float(point.ratio_target),
            Cell::Float(de),
            Cell::Float(infid),
        ]);
    }
    let written = emit(sc, &table, &results)?;
    let failed = results.iter().filter(|p| p.report.is_none()).count();
    println!(
        "sweep: {} points ({} failed)",
        results.len(),
        failed
    );
    for w in written {
        println!("wrote {w}");
    }
    Ok(())
}

fn spin_level_labels(spin: Spin) -> Vec<String> {
    (0..spin.dim())
        .map(|s| {
            let two_m = 2 * s as i32 - spin.twice() as i32;
            if two_m % 2 == 0 {
                format!("pop_m={}", two_m / 2)
            } else {
                format!("pop_m={two_m}/2")
            }
        })
        .collect()
}

fn cmd_evolve(sc: &Scenario) -> Result<()> {
    let (base, _) = resolved_model(sc, sc.n_states)?;
    let (protocol, sample_dt, motional_levels) = sc.protocol(&base)?;
    let opts = EvolveOptions {
        motional_levels,
        mode_basis: None,
    };
    let result = run_protocol_with(&protocol, sample_dt, &opts)?;

    let spin = base.spin;
    let mut header: Vec<String> = vec!["t".into()];
    header.extend(spin_level_labels(spin));
    header.push("fidelity".into());
    if !result.parity.is_empty() {
        header.push("parity".into());
    }
    let mot_cols = result.motional.first().map(|m| m.len()).unwrap_or(0);
    for n in 0..mot_cols {
        header.push(format!("mot_{n}"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut table = Table::new(&header_refs);
    for (i, &t) in result.times.iter().enumerate() {
        let mut row = vec![Cell::Float(t)];
        for v in &result.populations[i] {
            row.push(Cell::Float(*v));
        }
        row.push(Cell::Float(result.fidelity[i]));
        if !result.parity.is_empty() {
            row.push(Cell::Float(result.parity[i]));
        }
        if mot_cols > 0 {
            for v in &result.motional[i] {
                row.push(Cell::Float(*v));
            }
        }
        table.push(row);
    }
    let results = serde_json::json!({
        "protocol": protocol,
        "sample_dt": sample_dt,
        "record": result,
    });
    let written = emit(sc, &table, &results)?;
    println!(
        "evolve: {} samples over {:.6e} s, final fidelity {:.6}",
        result.times.len(),
        result.times.last().unwrap_or(&0.0),
        result.fidelity.last().unwrap_or(&1.0)
    );
    for w in written {
        println!("wrote {w}");
    }
    Ok(())
}
