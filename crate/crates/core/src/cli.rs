//! `bec-sweep` command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cascade::{cascade, condensate_fraction_curve, gibbs_check, CascadeSpec};
use crate::cat::{
    build_cat_state, circulation, dominant_peaks, overlap_heatmap, resonance_lambdas, squeezing_scan,
    CIRCULATION_TOLERANCE,
};
use crate::config::{Grid, RunConfig, Spacing};
use crate::error::{Error, Result};
use crate::exact::{
    corner_phase, forward_distribution, forward_mean_large_n, lz_phase, phase_distance, reverse_distribution,
    reverse_pair_fraction_large_n, sweep_f, threshold_inverse_beta, transition_fraction, SweepParams,
    SELECTED_FORWARD_VARIANT,
};
use crate::output::{Cell, Table};
use crate::sector::{enumerate_basis, build_hamiltonian, verify_integrability, SectorSpec};
use crate::tdse::{extract_scattering_phase, IntegrationPlan, PhaseCalibration, NORM_DRIFT_LIMIT};
use crate::validation::{
    random_spec, run_suite, tau_spread, two_channel_runs, FixturePlan, COMMUTATOR_TOLERANCE, PHASE_TOLERANCE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Largest `N` for which per-value distributions are written by `exact`.
pub const DISTRIBUTION_ROWS_MAX_N: u32 = 200;
const CAT_TOL: f64 = 1e-12;
const RATIO_TOLERANCE: f64 = 1e-12;
const GIBBS_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "bec-sweep", version, about = "Atom-molecule conversion in swept Feshbach resonances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set n=10`. May be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Closed-form distributions, means and large-N curves over a 1/β grid.
    Exact,
    /// Fixture suite against the propagator; nonzero exit on any failure.
    Validate,
    /// Scattering phases: closed form against propagation.
    Phase,
    /// Cascade joints, marginals, exchange ratios and temperature.
    Thermal,
    /// Cat-state squeezing scan, overlap heatmap and circulation.
    Catstate,
    /// Commutator residuals over random sectors and a τ scan.
    Integrability,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::Validate => "validate",
            Command::Phase => "phase",
            Command::Thermal => "thermal",
            Command::Catstate => "catstate",
            Command::Integrability => "integrability",
        }
    }
}

/// Tables produced by one command plus the exit status they imply.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub status: i32,
}

impl RunOutput {
    fn ok(tables: Vec<Table>) -> Self {
        RunOutput { tables, status: EXIT_OK }
    }

    fn gated(tables: Vec<Table>, passed: bool) -> Self {
        RunOutput { tables, status: if passed { EXIT_OK } else { EXIT_VALIDATION } }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Capacity { .. } | Error::Io(_) | Error::BasisMismatch => {
            EXIT_CONFIG
        }
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `args`, runs the command and writes its tables. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run_cli(&cli) {
        Ok((out, paths)) => {
            for p in paths {
                println!("{}", p.display());
            }
            out.status
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run_cli(cli: &Cli) -> Result<(RunOutput, Vec<PathBuf>)> {
    let mut overrides = cli.overrides.clone();
    if let Some(o) = &cli.output {
        overrides.push(format!("output={}", o.display()));
    }
    if let Some(f) = cli.format {
        overrides.push(format!("format={}", match f {
            FormatArg::Csv => "csv",
            FormatArg::Json => "json",
        }));
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    let out = execute(cli.command, &cfg)?;
    let paths = out.tables.iter().map(|t| t.save(&cfg.output, cfg.format)).collect::<Result<Vec<_>>>()?;
    Ok((out, paths))
}

/// Runs `command` on the configured worker pool and stamps metadata on every table.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<RunOutput> {
    let job = || match command {
        Command::Exact => cmd_exact(cfg),
        Command::Validate => cmd_validate(cfg),
        Command::Phase => cmd_phase(cfg),
        Command::Thermal => cmd_thermal(cfg),
        Command::Catstate => cmd_catstate(cfg),
        Command::Integrability => cmd_integrability(cfg),
    };
    let mut out = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(job)?,
        None => job()?,
    };
    for t in &mut out.tables {
        let mut meta = vec![
            ("command".to_string(), command.name().to_string()),
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("seed".to_string(), cfg.seed.to_string()),
            ("forward_variant".to_string(), SELECTED_FORWARD_VARIANT.name().to_string()),
        ];
        meta.extend(cfg.echo().into_iter().map(|(k, v)| (format!("config.{k}"), v)));
        meta.append(&mut t.metadata);
        t.metadata = meta;
    }
    Ok(out)
}

fn first_q(cfg: &RunConfig) -> Result<u32> {
    Ok(cfg.list_u32("q")?.first().copied().unwrap_or(0))
}

fn n_total(cfg: &RunConfig) -> Result<u32> {
    u32::try_from(cfg.usize("n")?).map_err(|_| Error::Config("n is too large".into()))
}

/// Sweep parameters at one grid value of `inv_beta`, `lambda` or `x`.
fn params_at(grid: &Grid, value: f64, g: f64) -> Result<SweepParams> {
    match grid.param.as_str() {
        "inv_beta" => SweepParams::new(g, 1.0 / value),
        "lambda" => SweepParams::new(g, g * g / value),
        "x" => SweepParams::new(g, -2.0 * std::f64::consts::PI * g * g / value.ln()),
        p => Err(Error::Config(format!("grid.param `{p}` is not inv_beta|lambda|x"))),
    }
}

fn cmd_exact(cfg: &RunConfig) -> Result<RunOutput> {
    let grid = cfg.require_grid("exact")?;
    let n = n_total(cfg)?;
    let q = first_q(cfg)?;
    let g = cfg.coupling()?;
    let rows: Vec<(Vec<Cell>, Vec<Vec<Cell>>)> = grid
        .values()
        .par_iter()
        .map(|&v| {
            let p = params_at(grid, v, g)?;
            let inv_beta = 1.0 / (g * g / p.lambda());
            let fwd = forward_distribution(n, q, &p)?;
            let rev = reverse_distribution(n, q, &p);
            let f = sweep_f(n, &p).unwrap_or(f64::NAN);
            let fraction = if n == 0 { 0.0 } else { rev.mean() / n as f64 };
            let row = vec![
                inv_beta.into(),
                p.x().into(),
                f.into(),
                fwd.mean().into(),
                forward_mean_large_n(n, q, &p).into(),
                fraction.into(),
                reverse_pair_fraction_large_n(n, q, &p).into(),
                transition_fraction(f).into(),
                rev.mean().into(),
            ];
            let mut dist = Vec::new();
            if n <= DISTRIBUTION_ROWS_MAX_N {
                for (dir, d) in [("forward", &fwd), ("reverse", &rev)] {
                    for k in d.values() {
                        dist.push(vec![inv_beta.into(), dir.into(), d.variable().into(), k.into(), d.prob(k).into()]);
                    }
                }
            }
            Ok((row, dist))
        })
        .collect::<Result<_>>()?;

    let mut summary = Table::new(
        "exact",
        &["inv_beta", "x", "f", "mean_exact", "mean_largeN", "fraction", "fraction_largeN", "fraction_f", "pairs_exact"],
    );
    summary.meta("threshold_inv_beta", threshold_inverse_beta(n, g));
    let mut dists = Table::new("distributions", &["inv_beta", "direction", "variable", "value", "probability"]);
    for (row, dist) in rows {
        summary.push(row);
        for d in dist {
            dists.push(d);
        }
    }
    let mut tables = vec![summary];
    if n <= DISTRIBUTION_ROWS_MAX_N {
        tables.push(dists);
    }
    Ok(RunOutput::ok(tables))
}

fn cmd_validate(cfg: &RunConfig) -> Result<RunOutput> {
    let plan = if cfg.bool("quick")? { FixturePlan::quick() } else { FixturePlan::full() };
    let report = run_suite(&plan);
    let mut t = report.to_table();
    t.meta("plan.window", plan.window);
    t.meta("plan.dt", plan.dt);
    t.meta("plan.resolution", plan.resolution);
    let status = if report.numerical_failure() {
        EXIT_NUMERICAL
    } else if !report.passed() {
        EXIT_VALIDATION
    } else {
        EXIT_OK
    };
    Ok(RunOutput { tables: vec![t], status })
}

fn cmd_phase(cfg: &RunConfig) -> Result<RunOutput> {
    let grid = cfg.require_grid("phase")?;
    let n = n_total(cfg)?.max(1);
    let window = cfg.f64("window")?;
    let resolution = cfg.f64("resolution")?;
    let cal_lambda = cfg.f64("calibration.lambda")?;
    let cal = PhaseCalibration::two_level(cal_lambda, window, resolution)?;

    let mut t = Table::new("phase", &["lambda", "n", "analytic", "tdse", "error", "probability", "status"]);
    t.meta("calibration.offset", cal.offset);
    t.meta("tolerance.phase", PHASE_TOLERANCE);
    t.push(vec![
        cal_lambda.into(),
        1u32.into(),
        lz_phase(cal_lambda)?.into(),
        (lz_phase(cal_lambda)? + cal.offset).into(),
        cal.offset.into(),
        f64::NAN.into(),
        "calibration".into(),
    ]);

    let mut jobs = Vec::new();
    for lambda in grid.values() {
        jobs.push((lambda, 1u32));
        if n > 1 {
            jobs.push((lambda, n));
        }
    }
    let rows: Vec<(Vec<Cell>, bool, bool)> = jobs
        .par_iter()
        .map(|&(lambda, n)| {
            let skip = || (vec![lambda.into(), n.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), 0.0.into(), "skip".into()], true, false);
            if lambda <= 0.0 {
                return Ok(skip());
            }
            let spec = SectorSpec::single_channel(n, 0, lambda.sqrt(), 1.0)?;
            let basis = enumerate_basis(&spec)?;
            let h = build_hamiltonian(&spec, &basis)?;
            let plan = IntegrationPlan::symmetric(&h, window, resolution)?;
            let analytic = corner_phase(n, 0, &SweepParams::from_lambda(lambda)?)?.total;
            let c = if n == 1 { cal } else { PhaseCalibration::none() };
            match extract_scattering_phase(&spec, &basis.all_atoms(), &basis.all_molecules(), &plan, &c) {
                Ok(ph) => {
                    let err = phase_distance(ph.phase, analytic).abs();
                    let ok = err <= PHASE_TOLERANCE;
                    let row = vec![
                        lambda.into(),
                        n.into(),
                        phase_distance(analytic, 0.0).into(),
                        ph.phase.into(),
                        err.into(),
                        ph.probability.into(),
                        if ok { "pass" } else { "fail" }.into(),
                    ];
                    Ok((row, ok, false))
                }
                Err(Error::NoTransition(_)) => Ok(skip()),
                Err(e) if exit_code(&e) == EXIT_NUMERICAL => Ok((
                    vec![lambda.into(), n.into(), analytic.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), Cell::Text(format!("error: {e}"))],
                    false,
                    true,
                )),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let passed = rows.iter().all(|r| r.1);
    let numerical = rows.iter().any(|r| r.2);
    for (row, _, _) in rows {
        t.push(row);
    }
    let status = if numerical {
        EXIT_NUMERICAL
    } else if passed {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    };
    Ok(RunOutput { tables: vec![t], status })
}

fn cmd_thermal(cfg: &RunConfig) -> Result<RunOutput> {
    let n = n_total(cfg)?;
    let k = cfg.usize("channels")?;
    let g = cfg.coupling()?;
    let p = SweepParams::new(g, cfg.f64("beta")?.abs())?;
    let spec = CascadeSpec::uniform(n, p, k);
    let res = cascade(&spec)?;
    let mut tables = Vec::new();
    let mut passed = true;

    let mut marg = Table::new("marginals", &["channel", "m", "probability"]);
    marg.meta("temperature", res.temperature);
    marg.meta("x", p.x());
    for (c, d) in res.channel_marginals.iter().enumerate() {
        for v in d.values() {
            marg.push(vec![(c + 1).into(), v.into(), d.prob(v).into()]);
        }
    }
    tables.push(marg);

    if let Some(joint) = &res.joint {
        let cols: Vec<String> = (1..=k).map(|c| format!("m_{c}")).chain(["probability".into()]).collect();
        let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
        let mut jt = Table::new("joint", &cols);
        let mut rt = Table::new("ratios", &["channel", "config", "ratio", "residual"]);
        rt.meta("tolerance", RATIO_TOLERANCE);
        let mut worst: f64 = 0.0;
        for (m, lp) in joint.iter() {
            let mut row: Vec<Cell> = m.iter().map(|&v| v.into()).collect();
            row.push(lp.exp().into());
            jt.push(row);
            for c in 0..k.saturating_sub(1) {
                if m[c] == 0 {
                    continue;
                }
                let mut moved = m.to_vec();
                moved[c] -= 1;
                moved[c + 1] += 1;
                let ratio = (joint.log_prob(&moved) - lp).exp();
                let residual = (ratio - p.x()).abs();
                worst = worst.max(residual);
                let label: Vec<String> = m.iter().map(u32::to_string).collect();
                rt.push(vec![(c + 1).into(), label.join(";").into(), ratio.into(), residual.into()]);
            }
        }
        passed &= worst < RATIO_TOLERANCE;
        tables.push(jt);
        if k >= 2 {
            let gr = gibbs_check(&res, &p)?;
            let mut gt = Table::new("gibbs", &["shell_deviation", "fitted_temperature", "predicted_temperature", "relative_error"]);
            gt.meta("tolerance", GIBBS_TOLERANCE);
            gt.push(vec![gr.shell_deviation.into(), gr.fitted_temperature.into(), gr.predicted_temperature.into(), gr.relative_error.into()]);
            passed &= gr.shell_deviation < GIBBS_TOLERANCE && gr.relative_error < GIBBS_TOLERANCE;
            tables.push(rt);
            tables.push(gt);
        }
    }

    let samples = cfg.usize("samples")?;
    if samples > 0 {
        let cols: Vec<String> = ["index".to_string()].into_iter().chain((1..=k).map(|c| format!("m_{c}"))).collect();
        let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
        let mut st = Table::new("samples", &cols);
        for (i, s) in res.sample(samples, cfg.seed).into_iter().enumerate() {
            let mut row: Vec<Cell> = vec![i.into()];
            row.extend(s.into_iter().map(Cell::from));
            st.push(row);
        }
        tables.push(st);
    }

    if let Some(grid) = &cfg.grid {
        if grid.param != "lambda" {
            return Err(Error::Config("thermal sweeps grid.param=lambda".into()));
        }
        let mut ft = Table::new("fraction", &["lambda", "temperature", "f", "first_channel_fraction", "transition_fraction"]);
        for pt in condensate_fraction_curve(n, k, &grid.values())? {
            ft.push(vec![pt.lambda.into(), pt.temperature.into(), pt.f.into(), pt.first_channel_fraction.into(), pt.transition_fraction.into()]);
        }
        tables.push(ft);
    }
    Ok(RunOutput::gated(tables, passed))
}

fn cmd_catstate(cfg: &RunConfig) -> Result<RunOutput> {
    let alpha = cfg.f64("alpha")?;
    let lambda = if cfg.str("lambda").is_empty() { alpha } else { cfg.f64("lambda")? };
    let range = cfg.f64("heatmap.range")?;
    let count = cfg.usize("heatmap.count")?;
    let mut passed = true;
    let mut tables = Vec::new();

    let state = build_cat_state(Complex64::new(alpha, 0.0), lambda, CAT_TOL)?;
    let cells = overlap_heatmap(&state, -range, range, count);
    let mut hm = Table::new("heatmap", &["re", "im", "overlap"]);
    hm.meta("alpha_m", alpha);
    hm.meta("lambda", lambda);
    for c in &cells {
        hm.push(vec![c.re.into(), c.im.into(), c.value.into()]);
    }
    let mut pk = Table::new("peaks", &["re", "im", "overlap"]);
    for c in dominant_peaks(&cells, count) {
        pk.push(vec![c.re.into(), c.im.into(), c.value.into()]);
    }
    tables.push(hm);
    tables.push(pk);

    let lambdas = match &cfg.grid {
        Some(g) if g.param == "lambda" => g.values(),
        Some(_) => return Err(Error::Config("catstate sweeps grid.param=lambda".into())),
        None => Grid::new("lambda", 0.3, 6.0, 300, Spacing::Linear)?.values(),
    };
    let ns = cfg.list_f64("scan.n")?;
    let scans: Vec<Vec<(f64, f64)>> = ns.par_iter().map(|&nm| squeezing_scan(nm, &lambdas, CAT_TOL)).collect::<Result<_>>()?;
    let mut sq = Table::new("squeezing", &["n_mean", "lambda", "ratio"]);
    let mut rs = Table::new("resonances", &["n_mean", "k", "lambda"]);
    for (nm, scan) in ns.iter().zip(scans) {
        for (l, r) in scan {
            sq.push(vec![(*nm).into(), l.into(), r.into()]);
        }
        for (k, l) in resonance_lambdas(*nm, 8).into_iter().enumerate() {
            rs.push(vec![(*nm).into(), (k + 1).into(), l.into()]);
        }
    }
    tables.push(sq);
    tables.push(rs);

    let steps = cfg.usize("circulation.steps")?;
    let mut ct = Table::new("circulation", &["n_mean", "value", "expected", "relative_error", "mean_a_re", "mean_a_im"]);
    ct.meta("tolerance", CIRCULATION_TOLERANCE);
    for nm in cfg.list_f64("circulation.n")? {
        let a = nm.sqrt();
        let c = circulation(a, lambda, CAT_TOL, steps)?;
        let expected = 2.0 * std::f64::consts::PI * nm;
        let rel = ((c.value - expected) / expected).abs();
        let mean = build_cat_state(Complex64::new(a, 0.0), lambda, CAT_TOL)?.mean_annihilation();
        passed &= rel <= CIRCULATION_TOLERANCE && mean == Complex64::new(0.0, 0.0);
        ct.push(vec![nm.into(), c.value.into(), expected.into(), rel.into(), mean.re.into(), mean.im.into()]);
    }
    tables.push(ct);
    Ok(RunOutput::gated(tables, passed))
}

fn cmd_integrability(cfg: &RunConfig) -> Result<RunOutput> {
    let count = cfg.usize("specs")?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let specs: Vec<SectorSpec> = (0..count).map(|_| random_spec(&mut rng, 6, 3)).collect();
    let times = [-7.5, -1.0, 0.0, 0.3, 4.0];
    let reports = specs.par_iter().map(|s| verify_integrability(s, &times)).collect::<Result<Vec<_>>>()?;

    let mut t = Table::new("integrability", &["index", "n", "channels", "commutator", "derivative", "status"]);
    t.meta("tolerance.commutator", COMMUTATOR_TOLERANCE);
    let mut passed = true;
    for (i, (s, r)) in specs.iter().zip(&reports).enumerate() {
        let ok = r.commutator_residual <= COMMUTATOR_TOLERANCE && r.derivative_residual == 0.0;
        passed &= ok;
        t.push(vec![
            i.into(),
            s.n_total.into(),
            s.channels().into(),
            r.commutator_residual.into(),
            r.derivative_residual.into(),
            if ok { "pass" } else { "fail" }.into(),
        ]);
    }
    let mut tables = vec![t];

    if let Some(grid) = &cfg.grid {
        if grid.param != "tau" {
            return Err(Error::Config("integrability sweeps grid.param=tau".into()));
        }
        let mut plan = FixturePlan::full();
        plan.window = cfg.f64("window")?;
        plan.dt = cfg.f64("dt")?;
        let taus = grid.values();
        let runs = two_channel_runs(&plan, &taus).into_iter().collect::<Result<Vec<_>>>()?;
        let mut st = Table::new("tau_scan", &["tau", "state", "probability", "norm_drift"]);
        let spread = tau_spread(&runs);
        st.meta("max_spread", spread);
        st.meta("tolerance.norm_drift", NORM_DRIFT_LIMIT);
        for (tau, r) in taus.iter().zip(&runs) {
            for (s, p) in r.basis.states().iter().zip(&r.probs) {
                let label: Vec<String> = s.m.iter().map(u32::to_string).collect();
                st.push(vec![(*tau).into(), format!("n={};m={}", s.n, label.join(";")).into(), (*p).into(), r.norm_drift.into()]);
            }
        }
        tables.push(st);
    }
    Ok(RunOutput::gated(tables, passed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pairs: &[(&str, &str)]) -> RunConfig {
        RunConfig::from_pairs(pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())), None).unwrap()
    }

    #[test]
    fn exact_single_pair_row() {
        let c = cfg(&[("n", "1"), ("g", "1"), ("grid.param", "inv_beta"), ("grid.start", "0.1"), ("grid.stop", "0.1"), ("grid.count", "1")]);
        let out = execute(Command::Exact, &c).unwrap();
        let row = &out.tables[0].rows[0];
        let x = (-2.0 * std::f64::consts::PI * 0.1f64).exp();
        match (&row[1], &row[3]) {
            (Cell::Num(xv), Cell::Num(mean)) => {
                assert!((xv - x).abs() < 1e-15);
                assert!((mean - (1.0 - x)).abs() < 1e-14);
            }
            _ => panic!("numeric cells expected"),
        }
    }

    #[test]
    fn exact_needs_grid() {
        let e = execute(Command::Exact, &cfg(&[])).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
    }

    #[test]
    fn thermal_single_channel_degenerates() {
        let out = execute(Command::Thermal, &cfg(&[("n", "5"), ("channels", "1"), ("g", "0.5")])).unwrap();
        assert_eq!(out.status, EXIT_OK);
        let p = SweepParams::new(0.5, 1.0).unwrap();
        let rev = reverse_distribution(5, 0, &p);
        let joint = out.tables.iter().find(|t| t.name == "joint").unwrap();
        for row in &joint.rows {
            if let (Cell::Int(m), Cell::Num(pr)) = (&row[0], &row[1]) {
                assert!((pr - rev.prob(*m)).abs() < 1e-14);
            }
        }
    }
}
