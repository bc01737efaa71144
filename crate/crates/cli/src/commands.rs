use std::fmt::Write as _;

use epigauge::constructions::{log_spaced, SWEEP_CSV_HEADER};
use epigauge::{
    build_impossibility_pair, build_sharpness_pair, build_strictness_pair, dist_to_set,
    displacement_bound, envelope_width_bound, falsify_quadratic_growth, gauge_from_tolerance_field,
    gauge_from_value_bound, grid_argmin, grid_gauge, grid_sup_abs_diff, sharpness_sweep,
    validate_bracketing, value_gap_from_gauge, BumpSite, Cylinder, EnvelopeCert, GaugeBound, Grid,
    LevelGrid, Point, TAU,
};

use crate::error::CliError;
use crate::record::{
    BracketRecord, CertificateRecord, DisplacementRecord, GridRecord, GrowthRecord, OracleRecord,
    TheoremCheck, SCHEMA_VERSION,
};
use crate::spec::ProblemSpec;
use crate::{Cli, Command, DemoArgs, DemoName, GlobalOpts, Outcome, SweepArgs};

pub const DEFAULT_SWEEP_STEP: f64 = 1e-5;

pub fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Gauge => cmd_gauge(&cli.global),
        Command::Certify => cmd_certify(&cli.global),
        Command::Demo(args) => cmd_demo(&cli.global, args),
        Command::Sweep(args) => cmd_sweep(&cli.global, args),
    }
}

fn load_spec(g: &GlobalOpts) -> Result<ProblemSpec, CliError> {
    let path = g
        .spec
        .as_ref()
        .ok_or_else(|| CliError::Parse("--spec <path> is required for this command".into()))?;
    ProblemSpec::load(path)
}

fn steps(g: &GlobalOpts, spec: &ProblemSpec) -> (f64, f64) {
    (
        g.grid_step.unwrap_or(spec.grid.step),
        g.level_step.unwrap_or(spec.grid.level_step),
    )
}

/// Every gauge bound the problem's certificate blocks yield, plus the
/// envelopes that the functions must lie between.
struct Certificates {
    bounds: Vec<GaugeBound>,
    envelopes: Vec<(&'static str, EnvelopeCert)>,
}

fn collect_certificates(spec: &ProblemSpec, h: f64, ht: f64) -> Result<Certificates, CliError> {
    let cyl = spec.cylinder;
    let mut bounds = Vec::new();
    let mut envelopes = Vec::new();
    if let Some(v) = &spec.certificate.value_bound {
        bounds.push(gauge_from_value_bound(v.eps, cyl)?);
    }
    if let Some(env) = spec.envelope_cert(h)? {
        bounds.push(envelope_width_bound(&env, cyl, h)?);
        envelopes.push(("envelope", env));
    }
    if let Some(env) = spec.cover_envelope(h)? {
        let mut b = envelope_width_bound(&env, cyl, h)?;
        b.detail = format!("aggregated cover; {}", b.detail);
        bounds.push(b);
        envelopes.push(("cover", env));
    }
    if let Some(tf) = spec.tolerance_field()? {
        bounds.push(gauge_from_tolerance_field(&tf, h, ht)?);
    }
    Ok(Certificates { bounds, envelopes })
}

/// Smallest certified bound, or the smallest bound when none is certified.
fn select_bound(bounds: &[GaugeBound]) -> Option<GaugeBound> {
    let smallest = |it: &mut dyn Iterator<Item = &GaugeBound>| {
        it.fold(None::<&GaugeBound>, |best, b| match best {
            Some(x) if x.delta <= b.delta => Some(x),
            _ => Some(b),
        })
        .cloned()
    };
    smallest(&mut bounds.iter().filter(|b| b.certified)).or_else(|| smallest(&mut bounds.iter()))
}

fn bracket_records(
    certs: &Certificates,
    pair: &(epigauge::Func, epigauge::Func),
    cyl: Cylinder,
    h: f64,
) -> Result<Vec<BracketRecord>, CliError> {
    let mut out = Vec::new();
    for (name, env) in &certs.envelopes {
        for func in [&pair.0, &pair.1] {
            let r = validate_bracketing(env, func, cyl, h)?;
            out.push(BracketRecord {
                function: format!("{name} / {}", func.label()),
                checked: r.checked,
                failures: r.failures.len(),
                first_failure: r.failures.first().map(|f| f.point.clone()),
            });
        }
    }
    Ok(out)
}

fn header(out: &mut String, spec: &ProblemSpec, h: f64, ht: f64) {
    let _ = writeln!(
        out,
        "problem    {} (sha256 {})",
        spec.name.as_deref().unwrap_or("unnamed"),
        &spec.hash()[..16]
    );
    let _ = writeln!(
        out,
        "cylinder   R = {}, M = {}",
        spec.cylinder.radius, spec.cylinder.level
    );
    let _ = writeln!(out, "lattice    step = {h}, level step = {ht}");
}

fn cmd_gauge(g: &GlobalOpts) -> Result<Outcome, CliError> {
    let spec = load_spec(g)?;
    let (h, ht) = steps(g, &spec);
    let cyl = spec.cylinder;
    let pair = spec.pair()?;
    if spec.certificate.is_empty() && pair.is_none() {
        return Err(CliError::Precondition(
            "gauge needs a certificate block or an (f, g) pair".into(),
        ));
    }
    let certs = collect_certificates(&spec, h, ht)?;

    let mut oracle = None;
    let mut brackets = Vec::new();
    if let Some(p) = &pair {
        let grid = Grid::new(spec.dimension, cyl.radius, h)?;
        let levels = LevelGrid::new(cyl.level, ht)?;
        oracle = Some((
            grid_gauge(&p.0, &p.1, &grid, &levels)?,
            grid_sup_abs_diff(&p.0, &p.1, &grid)?,
        ));
        brackets = bracket_records(&certs, p, cyl, h)?;
    }
    let inconsistent = brackets.iter().any(|b| b.failures > 0);
    let selected = select_bound(&certs.bounds);
    let contradicted = match (&selected, oracle) {
        (Some(b), Some((og, _))) => b.certified && og > b.delta + TAU,
        _ => false,
    };

    let mut out = String::new();
    if g.csv {
        out.push_str("kind,name,value,certified\n");
        for b in &certs.bounds {
            let _ = writeln!(out, "certified,{},{},{}", b.provenance, b.delta, b.certified);
        }
        if let Some((og, os)) = oracle {
            let _ = writeln!(out, "oracle,grid_gauge,{og},false");
            let _ = writeln!(out, "oracle,grid_sup_abs_diff,{os},false");
        }
    } else {
        header(&mut out, &spec, h, ht);
        out.push_str("\ncertified (from certificates)\n");
        if certs.bounds.is_empty() {
            out.push_str("  n/a        no certificate block\n");
        }
        for b in &certs.bounds {
            let status = if b.certified { "certified" } else { "NOT certified" };
            let _ = writeln!(
                out,
                "  {:<16} delta = {:<24} {status:<14} {}",
                b.provenance.to_string(),
                b.delta,
                b.detail
            );
        }
        out.push_str("\noracle (lattice maxima, lower bounds of the true suprema)\n");
        match oracle {
            Some((og, os)) => {
                let _ = writeln!(out, "  grid_gauge         {og}");
                let _ = writeln!(out, "  grid_sup_abs_diff  {os}");
            }
            None => out.push_str("  n/a        no (f, g) pair\n"),
        }
        if !brackets.is_empty() {
            out.push_str("\nbracketing\n");
            for b in &brackets {
                let _ = writeln!(
                    out,
                    "  {} of {} lattice points fail  {}",
                    b.failures, b.checked, b.function
                );
            }
        }
        if contradicted {
            out.push_str("\nthe oracle gauge exceeds the certified bound: certificate contradicted\n");
        }
    }
    Ok(Outcome {
        output: out,
        notes: String::new(),
        exit_code: if inconsistent || contradicted { 5 } else { 0 },
    })
}

/// Runs the full pipeline and returns the record with its exit code.
pub fn certify(spec: &ProblemSpec, h: f64, ht: f64) -> Result<(CertificateRecord, i32), CliError> {
    let cyl = spec.cylinder;
    if spec.certificate.is_empty() {
        return Err(CliError::Precondition("certify needs a certificate block".into()));
    }
    let growth_spec = spec
        .growth
        .as_ref()
        .ok_or_else(|| CliError::Precondition("certify needs a growth block".into()))?;
    let (f, g) = spec
        .pair()?
        .ok_or_else(|| CliError::Precondition("certify needs `f` and `g`".into()))?;
    let growth = spec.growth_cert()?.expect("growth block present");

    let certs = collect_certificates(spec, h, ht)?;
    let gauge = select_bound(&certs.bounds).expect("at least one certificate");
    let pair = (f, g);
    let brackets = bracket_records(&certs, &pair, cyl, h)?;
    let (f, g) = pair;

    let mut precondition = Vec::new();
    let mut inconsistency = Vec::new();

    if !gauge.certified {
        precondition.push(format!("gauge bound is not certified: {}", gauge.detail));
    }
    for b in brackets.iter().filter(|b| b.failures > 0) {
        inconsistency.push(format!(
            "{}: bracketing fails at {} of {} lattice points",
            b.function, b.failures, b.checked
        ));
    }
    let mismatches = growth.mismatched_minimizers(&f)?;
    for (p, v) in &mismatches {
        inconsistency.push(format!(
            "F({p}) = {v} differs from inf_value = {}",
            growth.inf_value()
        ));
    }
    let falsification = falsify_quadratic_growth(&f, &growth, cyl, h)?;
    if falsification.falsified() {
        inconsistency.push(format!(
            "quadratic growth with mu = {} violated at {} lattice points",
            growth.mu(),
            falsification.violations.len()
        ));
    }

    let grid = Grid::new(spec.dimension, cyl.radius, h)?;
    let levels = LevelGrid::new(cyl.level, ht)?;
    let xstar = match &growth_spec.xstar {
        Some(p) => p.clone(),
        None => growth.argmin_set().representative()?,
    };
    let (xtilde, exact) = match &growth_spec.xtilde {
        Some(p) => (p.clone(), true),
        None => {
            let am = grid_argmin(&g, &grid)?;
            (am.farthest_from(growth.argmin_set())?.0, false)
        }
    };
    let mut cert = displacement_bound(&gauge, &growth, &xstar, &xtilde, &f, &g)?;
    if !exact {
        cert = cert.with_grid_minimizer(h);
    }
    precondition.extend(cert.failures.iter().cloned());

    let oracle_gauge = grid_gauge(&f, &g, &grid, &levels)?;
    let oracle_sup = grid_sup_abs_diff(&f, &g, &grid)?;
    let oracle_dist = dist_to_set(&xtilde, growth.argmin_set())?;
    if gauge.certified && oracle_gauge > gauge.delta + TAU {
        inconsistency.push(format!(
            "oracle gauge {oracle_gauge} exceeds the certified bound {}",
            gauge.delta
        ));
    }

    let mut theorem_checks = Vec::new();
    for (at, w) in ["x★", "x̃★"].iter().zip(&cert.window_checks) {
        let abs_diff = (w.f_value() - w.g_value()).abs();
        let gap = value_gap_from_gauge(&gauge, w);
        let holds = match &gap {
            Ok(d) => abs_diff <= d + TAU,
            Err(_) => true,
        };
        if !holds {
            inconsistency.push(format!(
                "value control fails at {at}: |F - F̃| = {abs_diff} > delta = {}",
                gauge.delta
            ));
        }
        theorem_checks.push(TheoremCheck {
            at: at.to_string(),
            point: w.point().clone(),
            f_value: w.f_value(),
            g_value: w.g_value(),
            abs_diff,
            certified_bound: gap.as_ref().ok().copied(),
            window_failure: gap.err().map(|e| e.to_string()),
            holds,
        });
    }
    let chain = cert.chain();
    if cert.valid && !chain.holds() {
        inconsistency.push(format!("displacement chain fails on recorded values: {chain:?}"));
    }
    let within_bound = oracle_dist <= cert.bound_with_slack() + TAU;
    if cert.valid && gauge.certified && !within_bound {
        inconsistency.push(format!(
            "oracle displacement {oracle_dist} exceeds bound {} + slack {}",
            cert.bound, cert.slack
        ));
    }

    let exit_code = if !inconsistency.is_empty() {
        5
    } else if !precondition.is_empty() {
        3
    } else {
        0
    };
    let mut failures = precondition;
    failures.extend(inconsistency);

    let record = CertificateRecord {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        problem_name: spec.name.clone(),
        problem_hash: spec.hash(),
        generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        grid: GridRecord {
            dimension: spec.dimension,
            step: h,
            level_step: ht,
            base_points: grid.len(),
            level_points: levels.values().len(),
        },
        cylinder: cyl,
        gauge: gauge.clone(),
        gauge_candidates: certs.bounds.clone(),
        oracle: OracleRecord {
            grid_gauge: oracle_gauge,
            grid_sup_abs_diff: oracle_sup,
            dist_xtilde_to_argmin: oracle_dist,
        },
        bracketing: brackets,
        growth: GrowthRecord {
            mu: growth.mu(),
            radius: growth.radius(),
            inf_value: growth.inf_value(),
            argmin_set: growth.argmin_set().clone(),
            minimizer_mismatches: mismatches,
            falsification_header: falsification.header.clone(),
            falsification_checked: falsification.checked,
            falsification_violations: falsification.violations.len(),
        },
        theorem_checks,
        chain,
        displacement: DisplacementRecord {
            bound: cert.bound,
            slack: cert.slack,
            bound_with_slack: cert.bound_with_slack(),
            source: cert.source,
            xstar: cert.xstar.clone(),
            xtilde: cert.xtilde.clone(),
            oracle_dist,
            within_bound,
            detail: cert.detail.clone(),
        },
        window_checks: cert.window_checks.to_vec(),
        valid: failures.is_empty(),
        failures,
    };
    Ok((record, exit_code))
}

fn cmd_certify(g: &GlobalOpts) -> Result<Outcome, CliError> {
    let spec = load_spec(g)?;
    let (h, ht) = steps(g, &spec);
    let (record, exit_code) = certify(&spec, h, ht)?;
    let notes = format!(
        "{}: delta = {} ({}), bound = {} + slack {}, oracle dist = {}",
        if record.valid { "VALID" } else { "INVALID" },
        record.gauge.delta,
        record.gauge.provenance,
        record.displacement.bound,
        record.displacement.slack,
        record.displacement.oracle_dist,
    );
    Ok(Outcome {
        output: record.to_json(),
        notes,
        exit_code,
    })
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Parse(format!("`{t}`: {e}")))
        })
        .collect()
}

fn parse_points(s: &str) -> Result<Vec<Point>, CliError> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| Point::new(parse_list(p)?).map_err(|e| CliError::Parse(e.to_string())))
        .collect()
}

fn parse_log_range(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Parse(format!("log range `{s}`: expected lo,hi,count")));
    }
    let num = |t: &str| t.parse::<f64>().map_err(|e| CliError::Parse(format!("`{t}`: {e}")));
    let n = parts[2]
        .parse::<usize>()
        .map_err(|e| CliError::Parse(format!("`{}`: {e}", parts[2])))?;
    Ok(log_spaced(num(parts[0])?, num(parts[1])?, n))
}

struct Checks {
    lines: String,
    all_pass: bool,
}

impl Checks {
    fn new() -> Self {
        Checks {
            lines: String::new(),
            all_pass: true,
        }
    }

    fn record(&mut self, name: &str, pass: bool, detail: String) {
        self.all_pass &= pass;
        let _ = writeln!(
            self.lines,
            "{} {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
}

fn cmd_demo(g: &GlobalOpts, args: &DemoArgs) -> Result<Outcome, CliError> {
    match args.name {
        DemoName::Strictness => demo_strictness(g, args),
        DemoName::Impossibility => demo_impossibility(g, args),
        DemoName::Sharpness => demo_sharpness(g, args),
    }
}

fn demo_strictness(g: &GlobalOpts, a: &DemoArgs) -> Result<Outcome, CliError> {
    let h = g.grid_step.unwrap_or(1e-2);
    let ht = g.level_step.unwrap_or(1e-2);
    let pair = build_strictness_pair(a.radius, a.level, a.amplitude)?;
    let grid = Grid::new(1, a.radius, h)?;
    let levels = LevelGrid::new(a.level, ht)?;
    let gauge = grid_gauge(&pair.f, &pair.g, &grid, &levels)?;
    let sup = grid_sup_abs_diff(&pair.f, &pair.g, &grid)?;

    let mut c = Checks::new();
    let _ = writeln!(
        c.lines,
        "strictness pair: F ≡ {}, F̃ ≡ {} on B(0, {}), M = {}",
        -(a.level + 1.0),
        -(a.level + 1.0) - a.amplitude,
        a.radius,
        a.level
    );
    c.record(
        "gauge_vanishes",
        gauge == 0.0,
        format!("grid gauge on C_(R,M) = {gauge} (expected exactly 0)"),
    );
    c.record(
        "uniform_gap",
        sup == a.amplitude,
        format!("grid sup |F - F̃| = {sup} (expected exactly {})", a.amplitude),
    );
    Ok(finish(c, None, g))
}

fn demo_impossibility(g: &GlobalOpts, a: &DemoArgs) -> Result<Outcome, CliError> {
    let h = g.grid_step.unwrap_or(1e-2);
    let queries = parse_points(&a.queries)?;
    let site = match &a.y {
        Some(y) => BumpSite::Given(Point::new(parse_list(y)?).map_err(|e| CliError::Parse(e.to_string()))?),
        None => BumpSite::Auto { search_step: h },
    };
    let pair = build_impossibility_pair(a.radius, queries, a.amplitude, site)?;
    let dim = pair.y.dim();

    let mut c = Checks::new();
    let _ = writeln!(
        c.lines,
        "impossibility pair: F ≡ 0, G = {}·max(0, 1 - ‖x - y‖/ρ), y = {}, ρ = {}",
        a.amplitude, pair.y, pair.rho
    );
    let mut exact = true;
    for q in &pair.queries {
        exact &= pair.f.eval(q)? == 0.0 && pair.g.eval(q)? == 0.0;
    }
    c.record(
        "interpolation",
        exact,
        format!("F(x_i) = G(x_i) = 0 bit-exactly at all {} queries", pair.queries.len()),
    );

    let grid = Grid::new(dim, a.radius, h)?;
    let lattice_sup = grid_sup_abs_diff(&pair.f, &pair.g, &grid)?;
    let at_y = (pair.f.eval(&pair.y)? - pair.g.eval(&pair.y)?).abs();
    let sup = lattice_sup.max(at_y);
    c.record(
        "uniform_gap",
        sup >= a.amplitude - 1e-12,
        format!("sup |F - G| over lattice ∪ {{y}} = {sup} ≥ A = {}", a.amplitude),
    );

    let pts: Vec<Point> = grid
        .points()
        .map(|x| Point::new(x).map_err(CliError::from))
        .collect::<Result<_, _>>()?;
    let mut slope = 0.0f64;
    for w in pts.windows(2) {
        let d = w[0].distance(&w[1]);
        if d > 0.0 {
            slope = slope.max((pair.g.eval(&w[0])? - pair.g.eval(&w[1])?).abs() / d);
        }
    }
    let lip = pair.lipschitz();
    c.record(
        "lipschitz",
        slope <= lip + 1e-12,
        format!("max finite-difference slope {slope} ≤ A/ρ = {lip}"),
    );
    Ok(finish(c, None, g))
}

fn demo_sharpness(g: &GlobalOpts, a: &DemoArgs) -> Result<Outcome, CliError> {
    let h = g.grid_step.unwrap_or(DEFAULT_SWEEP_STEP);
    let ht = g.level_step.unwrap_or(1e-2);
    let fam = build_sharpness_pair(a.mu, a.delta)?;
    let radius = a.radius.min(fam.f.domain_radius());
    let grid = Grid::new(1, radius, h)?;
    let mut c = Checks::new();
    let _ = writeln!(
        c.lines,
        "sharpness family: F = ({}/2)x², F̃ = (F - {})_+, argmin F̃ = [-{e}, {e}]",
        a.mu,
        a.delta,
        e = fam.extreme_minimizer()
    );

    let mut sandwich = true;
    for x in grid.points() {
        let p = Point::new(x)?;
        let d = fam.f.eval(&p)? - fam.g.eval(&p)?;
        sandwich &= (0.0..=a.delta + TAU).contains(&d);
    }
    c.record(
        "sandwich",
        sandwich,
        format!("0 ≤ F - F̃ ≤ δ at all {} lattice points", grid.len()),
    );

    let coarse = Grid::new(1, radius, h.max(1e-4))?;
    let levels = LevelGrid::new(a.level, ht)?;
    let og = grid_gauge(&fam.f, &fam.g, &coarse, &levels)?;
    c.record(
        "gauge_bound",
        og <= a.delta + TAU,
        format!("grid gauge {og} ≤ δ = {}", a.delta),
    );

    let am = grid_argmin(&fam.g, &grid)?;
    let (_, dist) = am.farthest_from(&fam.target_argmin())?;
    let analytic = fam.extreme_minimizer();
    c.record(
        "extreme_minimizer",
        (dist - analytic).abs() <= h,
        format!("grid extreme minimizer distance {dist} vs √(2δ/μ) = {analytic} (tolerance h = {h})"),
    );

    let deltas = match &a.deltas {
        Some(s) => parse_list(s)?,
        None => log_spaced(1e-5, 1e-2, 10),
    };
    let table = sharpness_sweep(a.mu, &deltas, h)?;
    let slope = table.slope.unwrap_or(f64::NAN);
    c.record(
        "exponent",
        (0.48..=0.52).contains(&slope),
        format!("log-log slope of displacement vs δ = {slope} (expected within [0.48, 0.52])"),
    );
    c.record(
        "bound_dominates",
        table.rows.iter().all(|r| r.dist <= r.bound + r.slack),
        "dist ≤ 2√(δ/μ) + 2h on every sweep row".to_string(),
    );
    c.record(
        "analytic_match",
        table.rows.iter().all(|r| (r.dist - r.analytic).abs() <= h),
        "grid displacement within h of √(2δ/μ) on every sweep row".to_string(),
    );
    Ok(finish(c, Some(table.to_csv()), g))
}

fn finish(c: Checks, csv: Option<String>, g: &GlobalOpts) -> Outcome {
    let exit_code = if c.all_pass { 0 } else { 3 };
    match csv {
        Some(table) if g.csv => Outcome {
            output: table,
            notes: c.lines,
            exit_code,
        },
        _ => Outcome {
            output: c.lines,
            notes: String::new(),
            exit_code,
        },
    }
}

fn cmd_sweep(g: &GlobalOpts, a: &SweepArgs) -> Result<Outcome, CliError> {
    let spec_sweep = match &g.spec {
        Some(_) => load_spec(g)?.sweep,
        None => None,
    };
    let mu = a
        .mu
        .or(spec_sweep.as_ref().map(|s| s.mu))
        .ok_or_else(|| CliError::Precondition("sweep needs --mu or a [sweep] block".into()))?;
    let deltas = if let Some(d) = &a.deltas {
        parse_list(d)?
    } else if let Some(r) = &a.log_range {
        parse_log_range(r)?
    } else if let Some(d) = spec_sweep.as_ref().and_then(|s| s.deltas.clone()) {
        d
    } else if let Some((lo, hi, n)) = spec_sweep.as_ref().and_then(|s| s.log_range) {
        log_spaced(lo, hi, n)
    } else {
        log_spaced(1e-5, 1e-2, 10)
    };
    let h = g
        .grid_step
        .or(spec_sweep.as_ref().and_then(|s| s.grid_step))
        .unwrap_or(DEFAULT_SWEEP_STEP);
    let table = sharpness_sweep(mu, &deltas, h)?;
    debug_assert!(table.to_csv().starts_with(SWEEP_CSV_HEADER));
    Ok(Outcome {
        output: table.to_csv(),
        notes: match table.slope {
            Some(s) => format!("log-log slope = {s}"),
            None => "log-log slope: n/a (single delta)".to_string(),
        },
        exit_code: 0,
    })
}
