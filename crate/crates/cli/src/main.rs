//! Command-line surface: forward spectral analysis, bound-state
//! addition/removal, the generic Gel'fand–Levitan transform between
//! two potentials' densities, the worked-example table, and the
//! brute-force verification table.
//!
//! Exit codes: 0 success, 1 input error, 2 verification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lattice_spectral::darboux::{
    add_bound_state, remove_bound_state, verify_spectral_consistency,
};
use lattice_spectral::gl::{gl_kernel_from_densities, gl_transform, solve_gl};
use lattice_spectral::io::{
    self, density_csv, phase_csv, potential_csv, spectral_report, transform_report,
    TransformRequest,
};
use lattice_spectral::jost::jost_function;
use lattice_spectral::oracle::{oracle_norming_constant, truncated_spectrum};
use lattice_spectral::param::lambda_of_bound_z;
use lattice_spectral::spectral::{
    analyze, find_bound_states, gl_norming_constant, phase_shift_and_levinson,
};
use lattice_spectral::{Error, Potential};

#[derive(Parser)]
#[command(
    name = "lattice-spectral",
    about = "Spectral data and Darboux transformations for the half-line discrete Schrödinger operator",
    after_help = "Environment: LATTICE_SPECTRAL_LEVINSON_TOL overrides the Levinson winding \
                  tolerance (radians, default pi/50)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full forward pipeline: bound states, norming constants,
    /// scattering phase, Levinson check, spectral density
    Analyze {
        #[arg(long)]
        potential: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// phase-grid size on the upper half circle
        #[arg(long, default_value_t = 1024)]
        grid: usize,
    },
    /// Add a bound state at --lambda with Gel'fand-Levitan norming
    /// constant --c2
    Add {
        #[arg(long)]
        potential: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        c2: f64,
        #[arg(long, default_value_t = 32)]
        n_max: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove the --index-th bound state (ascending in z)
    Remove {
        #[arg(long)]
        potential: PathBuf,
        #[arg(long)]
        index: usize,
        #[arg(long, default_value_t = 32)]
        n_max: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct the potential of --rho-tilde from the spectral data
    /// of --rho through the generic Gel'fand-Levitan system
    GlTransform {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        rho_tilde: PathBuf,
        #[arg(long, default_value_t = 32)]
        n_max: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reproduce the worked examples and print a pass/fail table
    Examples,
    /// Brute-force verification table: truncated-operator eigenvalues
    /// and norming constants against the analytic pipeline
    Verify {
        #[arg(long, default_value_t = 2000)]
        size: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Input(_) | Error::Precondition(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn levinson_tolerance() -> f64 {
    std::env::var("LATTICE_SPECTRAL_LEVINSON_TOL")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(std::f64::consts::PI / 50.0)
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Input(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text)
        .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Analyze { potential, out, grid } => cmd_analyze(&potential, &out, grid),
        Command::Add { potential, lambda, c2, n_max, out } => {
            let v = io::read_potential(&potential)?;
            let result = add_bound_state(&v, lambda, c2, n_max)?;
            let request = TransformRequest {
                op: "add".into(),
                lambda: Some(lambda),
                c2: Some(c2),
                index: None,
                n_max,
            };
            write_transform_outputs(&out, request, &result)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Remove { potential, index, n_max, out } => {
            let v = io::read_potential(&potential)?;
            let result = remove_bound_state(&v, index, n_max)?;
            let request = TransformRequest {
                op: "remove".into(),
                lambda: None,
                c2: None,
                index: Some(index),
                n_max,
            };
            write_transform_outputs(&out, request, &result)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GlTransform { rho, rho_tilde, n_max, out } => {
            let v = io::read_potential(&rho)?;
            let target = io::read_potential(&rho_tilde)?;
            let from = analyze(&v)?;
            let to = analyze(&target)?;
            let kernel = gl_kernel_from_densities(&v, &from.density, &to.density, n_max)?;
            let sol = solve_gl(&kernel, n_max)?;
            let (v_tilde, _) = gl_transform(&v, &sol, n_max);
            ensure_dir(&out)?;
            let mut worst = 0.0f64;
            for (n, val) in v_tilde.iter().enumerate() {
                worst = worst.max((val - target.v(n + 1)).abs());
            }
            let body = serde_json::json!({
                "v_tilde": v_tilde,
                "n_max": n_max,
                "max_deviation_from_target": worst,
            });
            write_text(&out.join("gl_transform.json"), &format!("{body:#}\n"))?;
            write_text(&out.join("potential.csv"), &potential_csv(&v_tilde))?;
            println!("gl-transform: wrote {} (max deviation from target {worst:.3e})", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Examples => cmd_examples(),
        Command::Verify { size } => cmd_verify(size),
    }
}

fn cmd_analyze(potential: &Path, out: &Path, grid: usize) -> Result<ExitCode, Error> {
    let v = io::read_potential(potential)?;
    let analysis = analyze(&v)?;
    let phase = phase_shift_and_levinson(&analysis.jost, grid)?;
    ensure_dir(out)?;
    let report = spectral_report(&analysis, &phase);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_text(&out.join("report.json"), &(text + "\n"))?;
    write_text(&out.join("phase.csv"), &phase_csv(&phase.samples))?;
    write_text(&out.join("density.csv"), &density_csv(&analysis.density, 512))?;
    println!(
        "analyze: N = {}, mu = ({}, {}), continuous mass = {:.12}",
        report.n, report.mu_plus, report.mu_minus, report.continuous_mass
    );
    let tol = levinson_tolerance();
    let levinson_ok = (phase.winding.delta_arg_f0 - phase.winding.target).abs() <= tol;
    if !levinson_ok {
        eprintln!(
            "Levinson mismatch: winding {:.6} vs target {:.6} (tolerance {tol:.6})",
            phase.winding.delta_arg_f0, phase.winding.target
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn write_transform_outputs(
    out: &Path,
    request: TransformRequest,
    result: &lattice_spectral::DarbouxResult,
) -> Result<(), Error> {
    ensure_dir(out)?;
    let report = transform_report(request, result);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_text(&out.join("transform.json"), &(text + "\n"))?;
    write_text(&out.join("potential.csv"), &potential_csv(&result.v_tilde))?;
    let consistency = verify_spectral_consistency(result)?;
    println!(
        "{}: V~_1 = {:.12}, compact: {}, definiteness margin {:.3e}",
        report.request.op,
        result.v_tilde[0],
        result.diagnostics.compact,
        result.diagnostics.definiteness_margin,
    );
    println!(
        "  re-derived bound data: count match {}, lambda err {:.3e}, C2 err {:.3e}",
        consistency.count_matches, consistency.max_lambda_error, consistency.max_c2_error
    );
    Ok(())
}

struct Table {
    failures: usize,
}

impl Table {
    fn row(&mut self, name: &str, ok: bool, detail: String) {
        println!("  [{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures += 1;
        }
    }
}

fn cmd_examples() -> Result<ExitCode, Error> {
    let mut table = Table { failures: 0 };
    let s5 = 5.0f64.sqrt();
    println!("worked examples:");

    // single-site addition with the resonance-matched norming constant
    {
        let v1 = 0.5;
        let v = Potential::new(vec![v1])?;
        let r = add_bound_state(&v, lambda_of_bound_z(-v1), 1.0 - v1 * v1, 32)?;
        let ok = (r.v_tilde[0] - 1.0 / v1).abs() < 1e-9
            && r.v_tilde[1..].iter().all(|x| x.abs() < 1e-9)
            && r.diagnostics.compact;
        table.row(
            "special addition to V=(0.5)",
            ok,
            format!("V~_1 = {:.12} (expect 2), compact tail", r.v_tilde[0]),
        );
    }
    // generic addition: first transformed site
    {
        let v1 = 0.5;
        let c2 = 0.5;
        let v = Potential::new(vec![v1])?;
        let r = add_bound_state(&v, lambda_of_bound_z(-v1), c2, 12)?;
        let ok = (r.v_tilde[0] - (v1 + c2 / v1)).abs() < 1e-9
            && (r.v_tilde[1] - 1.0 / 3.0).abs() < 1e-9;
        table.row(
            "generic addition to V=(0.5), C*=0.5",
            ok,
            format!("V~_1 = {:.12}, V~_2 = {:.12}", r.v_tilde[0], r.v_tilde[1]),
        );
    }
    // two-site example: bound states and norming constants
    {
        let v = Potential::new(vec![-s5, 4.0 / s5])?;
        let jd = jost_function(&v);
        let scan = find_bound_states(&jd)?;
        let c_low = gl_norming_constant(&v, -0.5)?;
        let c_high = gl_norming_constant(&v, 0.5)?;
        let e_low = 3.0 * (12.0 - 5.0 * s5) / 76.0;
        let e_high = 3.0 * (12.0 + 5.0 * s5) / 76.0;
        let ok = scan.zeros.len() == 2
            && (scan.zeros[0] + 0.5).abs() < 1e-9
            && (scan.zeros[1] - 0.5).abs() < 1e-9
            && (c_low - e_low).abs() < 1e-9
            && (c_high - e_high).abs() < 1e-9;
        table.row(
            "two-site spectrum (V = (-sqrt5, 4/sqrt5))",
            ok,
            format!("z = ({:.9}, {:.9}), C^2 = ({c_low:.9}, {c_high:.9})", scan.zeros[0], scan.zeros[1]),
        );
    }
    // factored-cubic realizability
    {
        use lattice_spectral::spectral::two_site_potential_from_factors;
        use num_complex::Complex64;
        let one = Complex64::new(1.0, 0.0);
        let inconsistent = two_site_potential_from_factors(&[one, one, one]).is_err();
        table.row(
            "factored cubic with alpha = (1,1,1)",
            inconsistent,
            "not the Jost function of a two-site potential".into(),
        );
        let s2 = 2.0f64.sqrt();
        let consistent = two_site_potential_from_factors(&[
            Complex64::new(-1.0, 0.0),
            one,
            Complex64::new(s2, 0.0),
        ]);
        let ok = matches!(consistent, Ok((a, b)) if (a + s2).abs() < 1e-9 && (b - 1.0 / s2).abs() < 1e-9);
        table.row(
            "factored cubic with alpha = (-1, 1, sqrt2)",
            ok,
            "realized by V = (-sqrt2, 1/sqrt2)".into(),
        );
    }
    // single-site removal
    {
        let v = Potential::new(vec![1.25])?;
        let r = remove_bound_state(&v, 0, 32)?;
        let ok = (r.v_tilde[0] - 0.8).abs() < 1e-9
            && r.v_tilde[1..].iter().all(|x| x.abs() < 1e-9)
            && r.diagnostics.compact;
        table.row(
            "removal from V=(1.25)",
            ok,
            format!("V~_1 = {:.12} (expect 0.8), compact tail", r.v_tilde[0]),
        );
    }
    // two-site removal: published leading values
    {
        let v = Potential::new(vec![-s5, 4.0 / s5])?;
        let r = remove_bound_state(&v, 1, 16)?;
        let printed = [
            5.0 * (3.0 - 2.0 * s5) / 16.0,
            (1125.0 + 21826.0 * s5) / 119120.0,
            270.0 * (14781.0 + 6364.0 * s5) / 15975481.0,
            1080.0 * (231681.0 + 102364.0 * s5) / 1284143281.0,
        ];
        let ok = printed
            .iter()
            .enumerate()
            .all(|(i, p)| (r.v_tilde[i] - p).abs() < 1e-9 * p.abs())
            && !r.diagnostics.compact;
        table.row(
            "removal of the z=1/2 state of the two-site example",
            ok,
            format!("V~_1..4 match the published values; verdict non-compact"),
        );
        println!(
            "  [NOTE] site-5 published value 0.0857473730 differs from the formula value {:.10}; \
             sites 1-4 match the same formulas to ~1e-13 (see README notes)",
            r.v_tilde[4]
        );
    }

    if table.failures == 0 {
        println!("all rows verified");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{} row(s) failed", table.failures);
        Ok(ExitCode::from(2))
    }
}

fn cmd_verify(size: usize) -> Result<ExitCode, Error> {
    let s5 = 5.0f64.sqrt();
    let fixtures: Vec<(&str, Potential)> = vec![
        ("free", Potential::free()),
        ("V=(0.5)", Potential::new(vec![0.5])?),
        ("V=(1.25)", Potential::new(vec![1.25])?),
        ("V=(-sqrt5, 4/sqrt5)", Potential::new(vec![-s5, 4.0 / s5])?),
    ];
    println!("oracle cross-check at truncation size {size}:");
    let mut worst = 0.0f64;
    for (name, v) in &fixtures {
        let jd = jost_function(v);
        let scan = find_bound_states(&jd)?;
        let spec = truncated_spectrum(v, size)?;
        println!(
            "  {name}: N = {} (analytic) vs {} (oracle), eigen residual {:.3e}",
            scan.zeros.len(),
            spec.eigenvalues.len(),
            spec.max_residual
        );
        if scan.zeros.len() != spec.eigenvalues.len() {
            return Err(Error::Diagnostic(format!(
                "bound-state count mismatch on fixture {name}"
            )));
        }
        for (i, &z) in scan.zeros.iter().enumerate() {
            let lambda = lambda_of_bound_z(z);
            let idx = spec
                .eigenvalues
                .iter()
                .position(|l| (l - lambda).abs() < 1e-6)
                .ok_or_else(|| {
                    Error::Diagnostic(format!("oracle missed the state at lambda = {lambda}"))
                })?;
            let c2_analytic = gl_norming_constant(v, z)?;
            let c2_oracle = oracle_norming_constant(&spec, idx)?;
            let lam_err = (spec.eigenvalues[idx] - lambda).abs();
            let c2_err = (c2_analytic - c2_oracle).abs();
            worst = worst.max(lam_err).max(c2_err);
            println!(
                "    state {i}: lambda {lambda:.12} (err {lam_err:.3e}), C^2 {c2_analytic:.12} (err {c2_err:.3e})"
            );
        }
    }
    println!("worst residual: {worst:.3e}");
    if worst < 1e-6 {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}
