use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use anyhow::{bail, Context, Result};

use gscreen_core::mdlab::linear_grid;
use gscreen_core::screen::format_real;
use gscreen_core::simgen::CohortSpec;
use gscreen_core::{
    empirical_tail_ratio, gaussian_null_oracle, generate_cohort, lemma31_curve,
    pvalue_accuracy_experiment, read_matrix_path, screen as run_screen, simulate as run_simulate,
    AccuracySpec, NoiseFamily, ReadOptions, SimulationConfig, SimulationReport, TailExperimentSpec,
};

use crate::{
    Format, GlobalArgs, GridArgs, Lemma31Args, MdRatioArgs, NullOracleArgs, PvalueAccuracyArgs,
    ScreenArgs, SimulateArgs, Verdict,
};

fn emit(global: &GlobalArgs, report: &str) -> Result<()> {
    match &global.output {
        Some(path) => {
            std::fs::write(path, report).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(report.as_bytes())
                .and_then(|_| out.flush())
                .context("cannot write to stdout")
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn verdict(passed: bool) -> Verdict {
    if passed {
        eprintln!("PASS");
        Verdict::Ok
    } else {
        eprintln!("FAIL");
        Verdict::Failed
    }
}

fn parse_delimiter(s: &str) -> Result<u8> {
    match s {
        "comma" | "," => Ok(b','),
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        other if other.len() == 1 => Ok(other.as_bytes()[0]),
        other => bail!("unsupported delimiter '{other}'"),
    }
}

pub fn screen(global: &GlobalArgs, args: &ScreenArgs) -> Result<Verdict> {
    let options = ReadOptions {
        has_header: match (args.header, args.no_header) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        },
        delimiter: args.delimiter.as_deref().map(parse_delimiter).transpose()?,
    };
    let matrix = read_matrix_path(&args.input, options)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let report = run_screen(&matrix, args.theta, args.method)?;
    let s = &report.summary;
    if s.degenerate > 0 {
        eprintln!(
            "warning: {} constant gene(s) flagged degenerate and excluded from selection",
            s.degenerate
        );
    }
    eprintln!(
        "{} of {} tested genes selected at theta = {} (n = {}, q = {})",
        s.total_rejected, s.tested, s.theta, s.n, s.q
    );
    let text = match global.format {
        Format::Csv => report.to_csv()?,
        Format::Json => report.to_json()?,
    };
    emit(global, &text)?;
    Ok(Verdict::Ok)
}

fn noise_list(names: &[String]) -> Result<Vec<NoiseFamily>> {
    let mut out = Vec::new();
    for name in names {
        if name.eq_ignore_ascii_case("all") {
            out.extend(NoiseFamily::ALL);
        } else {
            out.push(name.parse()?);
        }
    }
    Ok(out)
}

fn opt_real(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_default()
}

fn simulation_csv(reports: &[SimulationReport]) -> String {
    let mut out = String::from(
        "dist,n,theta,replicates,tot,tot_stderr,pos,pos_stderr,efdr,efdr_stderr,z,z_stderr\n",
    );
    for r in reports {
        let spec = &r.config.cohort;
        for c in &r.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                spec.noise,
                spec.n,
                format_real(c.theta),
                r.config.replicates,
                format_real(c.tot.mean),
                format_real(c.tot.stderr),
                format_real(c.pos.mean),
                format_real(c.pos.stderr),
                opt_real(c.efdr.map(|e| e.mean)),
                opt_real(c.efdr.map(|e| e.stderr)),
                opt_real(r.z.map(|e| e.mean)),
                opt_real(r.z.map(|e| e.stderr)),
            );
        }
    }
    out
}

fn simulation_table(reports: &[SimulationReport]) -> String {
    let mut out = format!(
        "{:<8} {:>4} {:>6}  {:>16}  {:>7}  {:>6}\n",
        "dist", "n", "theta", "Tot(Pos)", "EFDR", "Z"
    );
    for r in reports {
        for c in &r.cells {
            let _ = writeln!(
                out,
                "{:<8} {:>4} {:>6.3}  {:>16}  {:>7}  {:>6}",
                r.config.cohort.noise.name(),
                r.config.cohort.n,
                c.theta,
                format!("{:.1}({:.1})", c.tot.mean, c.pos.mean),
                c.efdr.map_or("-".into(), |e| format!("{:.3}", e.mean)),
                r.z.map_or("-".into(), |z| format!("{:.1}", z.mean)),
            );
        }
    }
    out
}

pub fn simulate(global: &GlobalArgs, args: &SimulateArgs) -> Result<Verdict> {
    let noises = noise_list(&args.dist)?;
    if noises.is_empty() || args.n.is_empty() {
        bail!("at least one distribution and one n are required");
    }
    let spec_for = |noise: NoiseFamily, n: usize| CohortSpec {
        genes: args.genes,
        n,
        periodic_count: args.periodic,
        beta: args.beta,
        omega: args.omega.unwrap_or(2.0 * PI / 10.0),
        noise,
        seed: global.seed,
    };
    if let Some(path) = &args.export_cohort {
        let cohort = generate_cohort(&spec_for(noises[0], args.n[0]))?;
        cohort
            .matrix
            .write_csv_path(path)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let mut reports = Vec::new();
    for &noise in &noises {
        for &n in &args.n {
            let config = SimulationConfig {
                cohort: spec_for(noise, n),
                thetas: args.theta.clone(),
                replicates: args.replicates,
                method: args.method,
                top: args.top,
            };
            reports.push(run_simulate(&config)?);
        }
    }
    eprint!("{}", simulation_table(&reports));
    let text = match global.format {
        Format::Csv => simulation_csv(&reports),
        Format::Json => to_json(&reports)?,
    };
    emit(global, &text)?;
    Ok(Verdict::Ok)
}

fn grid(args: &GridArgs, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !args.ys.is_empty() {
        return Ok(args.ys.clone());
    }
    let points = args.points.unwrap_or(points);
    if points < 2 {
        bail!("a grid needs at least 2 points");
    }
    Ok(linear_grid(
        args.ymin.unwrap_or(lo),
        args.ymax.unwrap_or(hi),
        points,
    ))
}

pub fn null_oracle(global: &GlobalArgs, args: &NullOracleArgs) -> Result<Verdict> {
    let ys = grid(&args.grid, -1.0, 4.5, 50)?;
    let report = gaussian_null_oracle(args.n, args.replicates, &ys, global.seed)?;
    eprintln!(
        "n = {}, {} replicates: {}/{} points within 3 s.e. (max z {:.2}); KS {:.5}, 1% critical {:.5}",
        report.n,
        args.replicates,
        report.points_within(3.0),
        ys.len(),
        report.max_z,
        report.ks_statistic,
        report.ks_critical
    );
    let text = match global.format {
        Format::Csv => report.curve.to_csv(),
        Format::Json => to_json(&report)?,
    };
    emit(global, &text)?;
    Ok(verdict(report.passed()))
}

pub fn md_ratio(global: &GlobalArgs, args: &MdRatioArgs) -> Result<Verdict> {
    if args.lower > args.upper {
        bail!("--lower must not exceed --upper");
    }
    let spec = TailExperimentSpec {
        n: args.n,
        noise: args.dist,
        mode: args.mode,
        y_grid: grid(&args.grid, 1.0, 3.0, 3)?,
        replicates: args.replicates,
        seed: global.seed,
    };
    let curve = empirical_tail_ratio(&spec)?;
    let inside = curve
        .ratio
        .iter()
        .filter(|r| (args.lower..=args.upper).contains(*r))
        .count();
    eprintln!(
        "{} {} n = {}: {}/{} ratios within [{}, {}]",
        args.dist,
        args.mode,
        args.n,
        inside,
        curve.len(),
        args.lower,
        args.upper
    );
    let text = match global.format {
        Format::Csv => curve.to_csv(),
        Format::Json => to_json(&curve)?,
    };
    emit(global, &text)?;
    Ok(verdict(inside == curve.len()))
}

pub fn lemma31(global: &GlobalArgs, args: &Lemma31Args) -> Result<Verdict> {
    let ys = grid(&args.grid, 0.0, 4.0, 401)?;
    let curve = lemma31_curve(args.n, &ys)?;
    let dev = curve.max_abs_deviation();
    eprintln!(
        "n = {}: max |ratio - 1| = {:.6} (tolerance {})",
        args.n, dev, args.tol
    );
    let text = match global.format {
        Format::Csv => curve.to_csv(),
        Format::Json => to_json(&curve)?,
    };
    emit(global, &text)?;
    Ok(verdict(dev <= args.tol))
}

pub fn pvalue_accuracy(global: &GlobalArgs, args: &PvalueAccuracyArgs) -> Result<Verdict> {
    let mut spec = AccuracySpec::new(
        args.dist,
        args.n,
        args.genes,
        args.theta,
        args.replicates,
        global.seed,
    );
    spec.calibration_replicates = args.calibration;
    spec.grid_points = args.grid_points;
    let report = pvalue_accuracy_experiment(&spec)?;
    eprintln!(
        "{} n = {}, G = {}: mean per-batch worst error {:.4}, overall worst {:.4}, calibration rel. s.e. {:.4}",
        args.dist,
        args.n,
        args.genes,
        report.mean_batch_worst,
        report.worst_relative_error,
        report.calibration_rel_stderr
    );
    let text = match global.format {
        Format::Csv => report.to_csv(),
        Format::Json => to_json(&report)?,
    };
    emit(global, &text)?;
    let limit = match (args.dist, args.max_error) {
        (NoiseFamily::Normal01, given) => {
            let bound = 3.0 * report.calibration_rel_stderr;
            Some(given.map_or(bound, |m| m.min(bound)))
        }
        (_, given) => given,
    };
    Ok(match limit {
        Some(limit) => verdict(report.mean_batch_worst <= limit),
        None => Verdict::Ok,
    })
}
